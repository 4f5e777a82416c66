//! End-to-end acceptance checks. Each check prints one PASS/FAIL line with
//! its wall time; the process exits non-zero if any check fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use neuroembed::augment::{
    augment_catalog, augmentation_report, report_row, AugmentedVocabulary, DimensionStats, SourceCounts,
};
use neuroembed::catalog::{filter_disease, parse_catalog, CohortCatalog, Dimension, DiseaseTermSet};
use neuroembed::demo::{demo_corpus, DEMO_DISEASE, DEMO_SEED};
use neuroembed::embed::{
    infonce_loss, loss_gradient, read_model, train, write_model, EmbeddingProvider, EmbeddingVector,
    HashedTokenProvider, LossConfig, LossVariant, ModelFile, ProjectionHead, TrainConfig, TrainingBatch, DEFAULT_DIM,
    INIT_NOISE,
};
use neuroembed::eval::{mean_percentile_rank, retrieval_precision, EvalReport};
use neuroembed::index::{build_index, index_from_bytes, index_to_bytes};
use neuroembed::ontology::{levenshtein, DEFAULT_THRESHOLD};
use neuroembed::pipeline::{load_catalog, load_ontologies, read_text, training_pairs};
use neuroembed::qagen::{generate_qad, read_jsonl, subsample_train, NlqRules, QaConfig, TEST_ONLY_TEMPLATE};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

// ---------------------------------------------------------------- metrics

fn metrics_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=60);
        let mut ranking: Vec<String> = (0..n).map(|i| format!("GSE{i:04}")).collect();
        ranking.shuffle(&mut rng);
        let r = rng.gen_range(1..=n);
        let relevant: Vec<String> = ranking.choose_multiple(&mut rng, r).cloned().collect();

        // straightforward definitions, written independently of the library
        let top: BTreeSet<&String> = ranking[..r].iter().collect();
        let want_p = relevant.iter().filter(|a| top.contains(a)).count() as f64 / r as f64;
        let want_mpr = relevant
            .iter()
            .map(|a| {
                let rank = ranking.iter().position(|x| x == a).unwrap() + 1;
                if n == 1 {
                    1.0
                } else {
                    1.0 - (rank as f64 - 1.0) / (n as f64 - 1.0)
                }
            })
            .sum::<f64>()
            / r as f64;

        let p = retrieval_precision(&ranking, &relevant).map_err(|e| e.to_string())?;
        let m = mean_percentile_rank(&ranking, &relevant).map_err(|e| e.to_string())?;
        worst = worst.max((p - want_p).abs()).max((m - want_mpr).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("1000 instances, max deviation {worst:e}"))
}

// ------------------------------------------------------------ levenshtein

fn dp_distance(a: &[char], b: &[char]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in t.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        t[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = t[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            t[i][j] = sub.min(t[i - 1][j] + 1).min(t[i][j - 1] + 1);
        }
    }
    t[a.len()][b.len()]
}

fn random_word(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'c', 'd', 'e', ' ', '-', 'é', 'ß'];
    let len = rng.gen_range(0..=30);
    (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

fn levenshtein_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..10_000 {
        let (a, b, c) = (random_word(&mut rng), random_word(&mut rng), random_word(&mut rng));
        let ca: Vec<char> = a.chars().collect();
        let cb: Vec<char> = b.chars().collect();
        let d = levenshtein(&a, &b);
        ensure(d == dp_distance(&ca, &cb), || format!("pair {i}: {a:?} {b:?} gave {d}"))?;
        ensure(d == levenshtein(&b, &a), || format!("pair {i}: not symmetric"))?;
        ensure(d <= levenshtein(&a, &c) + levenshtein(&c, &b), || {
            format!("pair {i}: triangle violated")
        })?;
    }
    Ok("10000 pairs agree with the DP table".into())
}

// -------------------------------------------------------------- gradients

fn random_case(rng: &mut ChaCha8Rng) -> (ProjectionHead, TrainingBatch) {
    let d_in = rng.gen_range(3..=8);
    let d_out = rng.gen_range(2..=6);
    let head = ProjectionHead {
        d_in,
        d_out,
        weights: (0..d_in * d_out).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        bias: rng
            .gen_bool(0.5)
            .then(|| (0..d_out).map(|_| rng.gen_range(-0.3..0.3)).collect()),
    };
    let p = rng.gen_range(2..=5);
    let mut side = || -> Vec<Vec<f64>> {
        (0..p)
            .map(|_| (0..d_in).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    };
    let anchors = side();
    let positives = side();
    (head, TrainingBatch::new(anchors, positives).unwrap())
}

fn set_param(head: &mut ProjectionHead, k: usize, v: f64) {
    let nw = head.weights.len();
    if k < nw {
        head.weights[k] = v;
    } else {
        head.bias.as_mut().unwrap()[k - nw] = v;
    }
}

fn param(head: &ProjectionHead, k: usize) -> f64 {
    let nw = head.weights.len();
    if k < nw {
        head.weights[k]
    } else {
        head.bias.as_ref().unwrap()[k - nw]
    }
}

fn gradient_check() -> Outcome {
    const EPS: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let (head, batch) = random_case(&mut rng);
        let cfg = if case % 2 == 0 {
            LossConfig::default()
        } else {
            LossConfig::hinge(0.5)
        };
        let (_, grad) = loss_gradient(&head, &batch, &cfg).map_err(|e| e.to_string())?;
        let analytic = grad.dense(&head);
        let loss_at = |h: &ProjectionHead| loss_gradient(h, &batch, &cfg).map(|r| r.0).unwrap();
        let mut numeric = Vec::with_capacity(analytic.len());
        let mut h = head.clone();
        for k in 0..analytic.len() {
            let x = param(&head, k);
            set_param(&mut h, k, x + EPS);
            let up = loss_at(&h);
            set_param(&mut h, k, x - EPS);
            let down = loss_at(&h);
            set_param(&mut h, k, x);
            numeric.push((up - down) / (2.0 * EPS));
        }
        let scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if scale < 1e-12 {
            // flat region (all hinge terms inactive); the numeric gradient must be flat too
            let n = numeric.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            ensure(n < 1e-8, || format!("case {case}: analytic zero, numeric {n:e}"))?;
            continue;
        }
        let err = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).abs())
            .fold(0.0f64, f64::max)
            / scale;
        worst = worst.max(err);
        ensure(err < 1e-4, || {
            format!("case {case} ({}): relative error {err:e}", cfg.variant)
        })?;
    }
    Ok(format!("100 cases, max relative error {worst:e}"))
}

// ---------------------------------------------------------- closed forms

fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = 1.0;
    v
}

fn closed_form_losses() -> Outcome {
    let mut notes = Vec::new();
    for p in [2usize, 4, 8] {
        // every anchor equally similar to every positive
        let v = vec![1.0, 1.0, 1.0];
        let batch = TrainingBatch::new(vec![v.clone(); p], vec![v; p]).unwrap();
        let l = infonce_loss(&batch, 20.0).map_err(|e| e.to_string())?;
        let want = (p as f64).ln();
        ensure((l - want).abs() <= 1e-9, || format!("P={p}: {l} vs ln P {want}"))?;
        notes.push(format!("P={p} {l:.12}"));
    }
    let batch = TrainingBatch::new(vec![unit(2, 0), unit(2, 1)], vec![unit(2, 0), unit(2, 1)]).unwrap();
    let l = infonce_loss(&batch, 20.0).map_err(|e| e.to_string())?;
    ensure(l < 1e-8, || format!("separable loss {l:e}"))?;
    notes.push(format!("separable {l:e}"));
    Ok(notes.join(", "))
}

// ---------------------------------------------------------- qa generation

struct Prepared {
    vocabulary: AugmentedVocabulary,
    catalog: CohortCatalog,
}

fn prepare_demo(dir: &Path) -> Result<Prepared, String> {
    let corpus = demo_corpus(DEMO_SEED);
    let raw = parse_catalog(corpus.catalog_jsonl.as_bytes()).map_err(|e| e.to_string())?;
    let sets = DiseaseTermSet::load_map(&corpus.disease_terms_json).map_err(|e| e.to_string())?;
    let set = sets
        .iter()
        .find(|s| s.disease == DEMO_DISEASE)
        .ok_or("demo disease missing")?;
    let catalog = filter_disease(&raw, set);
    let onto = dir.join("ontologies");
    std::fs::create_dir_all(&onto).map_err(|e| e.to_string())?;
    for (name, text) in &corpus.ontology_files {
        std::fs::write(onto.join(name), text).map_err(|e| e.to_string())?;
    }
    let registry = load_ontologies(&onto).map_err(|e| e.to_string())?;
    let aug = augment_catalog(&catalog, &registry, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
    Ok(Prepared {
        catalog: aug.catalog.to_catalog().map_err(|e| e.to_string())?,
        vocabulary: aug.vocabulary,
    })
}

/// Canonical label for `term`, found by scanning every vocabulary entry.
fn scan_canonical<'a>(vocab: &'a AugmentedVocabulary, dim: Dimension, term: &'a str) -> &'a str {
    for (canonical, entry) in vocab.entries(dim) {
        if canonical == term || entry.synonyms.iter().any(|s| s == term) {
            return canonical;
        }
    }
    term
}

fn qa_integrity() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let prep = prepare_demo(tmp.path())?;
    let n_terms = prep.vocabulary.total_terms();
    ensure(prep.catalog.len() >= 200, || {
        format!("only {} cohorts", prep.catalog.len())
    })?;
    ensure(n_terms >= 120, || format!("only {n_terms} terms"))?;

    let config = QaConfig {
        seed: DEMO_SEED,
        ..QaConfig::default()
    };
    let ds = generate_qad(&prep.vocabulary, &prep.catalog, &config, &NlqRules::default()).map_err(|e| e.to_string())?;

    for dim in Dimension::ALL {
        let empty = BTreeSet::new();
        let tr = ds.split.train_vals.get(&dim).unwrap_or(&empty);
        let te = ds.split.test_vals.get(&dim).unwrap_or(&empty);
        let shared: Vec<_> = tr.intersection(te).collect();
        ensure(shared.is_empty(), || format!("{dim}: shared terms {shared:?}"))?;
    }

    let mut checked = 0;
    for p in ds.train.iter().chain(&ds.test) {
        let truth: Vec<String> = prep
            .catalog
            .records
            .iter()
            .filter(|r| {
                p.terms.terms.iter().all(|(d, t)| {
                    r.values(*d)
                        .iter()
                        .any(|v| v == scan_canonical(&prep.vocabulary, *d, t))
                })
            })
            .map(|r| r.accession.clone())
            .collect();
        let mut got = p.all_matching.clone();
        got.sort();
        let mut want = truth.clone();
        want.sort();
        ensure(got == want, || format!("{:?}: ground truth differs", p.nlq))?;
        ensure(truth.contains(&p.accession), || {
            format!("{:?}: answer {} does not match", p.nlq, p.accession)
        })?;
        checked += 1;
    }

    let t6 = ds.train.iter().filter(|p| p.template_id == TEST_ONLY_TEMPLATE).count();
    ensure(t6 == 0, || format!("{t6} train pairs use the test-only template"))?;
    ensure(ds.test.iter().any(|p| p.template_id == TEST_ONLY_TEMPLATE), || {
        "test-only template never used".into()
    })?;

    let sub = subsample_train(&ds.train, ds.test.len(), 4, DEMO_SEED);
    let want = ds.train.len().min(4 * ds.test.len());
    ensure(sub.len() == want, || format!("subsample {} vs {want}", sub.len()))?;
    Ok(format!(
        "{} cohorts, {n_terms} terms, {checked} pairs re-verified, train {} test {}",
        prep.catalog.len(),
        sub.len(),
        ds.test.len()
    ))
}

// ------------------------------------------------------------ training

const DEMO_TRAIN: &str = "qa_train.jsonl";
const DEMO_TEST: &str = "qa_test.jsonl";

fn run_demo(out: &Path) -> Result<(), String> {
    let code = neuroembed::cli::run(["neuroembed", "demo", "--out", out.to_str().unwrap()]);
    ensure(code == 0, || format!("demo exited with {code}"))
}

fn read_report(path: &Path) -> Result<EvalReport, String> {
    serde_json::from_str(&std::fs::read_to_string(path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn training_improves(out: &Path) -> Outcome {
    run_demo(out)?;
    let base = read_report(&out.join("eval_baseline.json"))?;
    let trained = read_report(&out.join("eval_report.json"))?;
    let dp = trained.mean_precision - base.mean_precision;
    let dm = trained.mean_mpr - base.mean_mpr;

    // retrain in-process from the demo's own files for the loss endpoints
    let snap = out.join("snapshot");
    let catalog = neuroembed::augment::NormalizedCatalog::from_jsonl(
        &read_text(&snap.join("catalog.jsonl")).map_err(|e| e.to_string())?,
    )
    .and_then(|c| c.to_catalog())
    .map_err(|e| e.to_string())?;
    let pairs = |f: &str| -> Result<_, String> {
        let qa = read_jsonl(&read_text(&out.join(f)).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        training_pairs(&qa, &catalog).map_err(|e| e.to_string())
    };
    let (train_set, val) = (pairs(DEMO_TRAIN)?, pairs(DEMO_TEST)?);
    let provider = HashedTokenProvider::new(DEFAULT_DIM);
    let cfg = TrainConfig {
        epochs: 2,
        warmup_fraction: 0.1,
        seed: DEMO_SEED,
        ..TrainConfig::default()
    };
    let loss = LossConfig::default();
    let init = ProjectionHead::identity_noise(DEFAULT_DIM, INIT_NOISE, DEMO_SEED);
    let (head, curve) = train(&init, &train_set, &provider, &cfg, &loss, Some(&val)).map_err(|e| e.to_string())?;
    let model = write_model(&ModelFile::new(&provider.provider_id(), &head, &loss)).map_err(|e| e.to_string())?;
    let on_disk = read_text(&snap.join("model.json")).map_err(|e| e.to_string())?;
    ensure(model == on_disk, || {
        "in-process training differs from the demo model".into()
    })?;

    let (l0, l1) = (
        curve.initial_train_loss.unwrap_or(f64::NAN),
        curve.final_train_loss.unwrap_or(f64::NAN),
    );
    let detail = format!(
        "R-precision {:.4} -> {:.4} (+{dp:.4}), MPR {:.4} -> {:.4} (+{dm:.4}), loss {l0:.4} -> {l1:.4} ({:.1}%)",
        base.mean_precision,
        trained.mean_precision,
        base.mean_mpr,
        trained.mean_mpr,
        100.0 * l1 / l0
    );
    ensure(dp >= 0.20 && dm >= 0.15 && l1 < 0.5 * l0, || detail.clone())?;
    Ok(detail)
}

// --------------------------------------------------------- augmentation

fn row(dim: &str, counts: [usize; 4], src: [usize; 3], kind: [usize; 2], fin: usize, pct: [&str; 5]) -> String {
    format!(
        "{dim}\t{}\t{}\t{}\t{}\t{} ({})\t{} ({})\t{} ({})\t{} ({})\t{} ({})\t{fin}",
        counts[0],
        counts[1],
        counts[2],
        counts[3],
        src[0],
        pct[0],
        src[1],
        pct[1],
        src[2],
        pct[2],
        kind[0],
        pct[3],
        kind[1],
        pct[4]
    )
}

fn augmentation_counts() -> Outcome {
    let dir = fixtures().join("mini");
    let catalog = load_catalog(&dir.join("catalog.jsonl")).map_err(|e| e.to_string())?;
    let registry = load_ontologies(&dir.join("ontologies")).map_err(|e| e.to_string())?;
    let aug = augment_catalog(&catalog, &registry, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
    let report = augmentation_report(&aug.stats);
    let rows: Vec<&str> = report.lines().skip(1).collect();
    // counts worked out by hand from the fixture files
    let want = [
        row(
            "Ti",
            [6, 1, 5, 5],
            [3, 1, 1],
            [5, 0],
            4,
            ["60.00", "20.00", "20.00", "100.00", "0.00"],
        ),
        row(
            "Po",
            [5, 1, 4, 4],
            [4, 0, 0],
            [3, 1],
            2,
            ["100.00", "0.00", "0.00", "75.00", "25.00"],
        ),
        row(
            "As",
            [2, 0, 2, 1],
            [2, 0, 0],
            [2, 0],
            1,
            ["100.00", "0.00", "0.00", "100.00", "0.00"],
        ),
        row(
            "Ph",
            [2, 0, 2, 1],
            [2, 0, 0],
            [1, 1],
            1,
            ["100.00", "0.00", "0.00", "50.00", "50.00"],
        ),
    ];
    ensure(rows.len() == want.len(), || format!("{} rows", rows.len()))?;
    for (got, want) in rows.iter().zip(&want) {
        ensure(got == want, || format!("got {got:?}, want {want:?}"))?;
    }

    let po = DimensionStats {
        original_count: 33,
        no_match: 5,
        matched: 28,
        synonyms: 100,
        sources: SourceCounts {
            primary: 100,
            mesh: 0,
            umls: 0,
        },
        direct: 100,
        fuzzy: 0,
        final_count: 105,
        collisions: 0,
    };
    let literal = "Po\t33\t5\t28\t100\t100 (100.00)\t0 (0.00)\t0 (0.00)\t100 (100.00)\t0 (0.00)\t105";
    let got = report_row(Dimension::Po, &po);
    ensure(got == literal, || format!("rendered {got:?}"))?;
    Ok("fixture rows exact, Po literal row reproduced".into())
}

// ---------------------------------------------------------------- index

fn index_oracle() -> Outcome {
    const DIM: usize = 24;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut entries = Vec::new();
    for i in 0..500 {
        let v: Vec<f64> = (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
        entries.push((
            format!("GSE{:05}", (i * 7919) % 100_000),
            EmbeddingVector::normalized(v).unwrap(),
        ));
    }
    // a few exact duplicates to exercise the tie order
    for j in 0..5 {
        let v = entries[j].1.clone();
        entries.push((format!("GSE9{j:04}"), v));
    }
    let index = build_index(DIM, &entries).map_err(|e| e.to_string())?;
    let reloaded = index_from_bytes(&index_to_bytes(&index)).map_err(|e| e.to_string())?;
    ensure(reloaded.matrix_bytes() == index.matrix_bytes(), || {
        "matrix bytes differ after reload".into()
    })?;
    ensure(index_to_bytes(&reloaded) == index_to_bytes(&index), || {
        "file bytes differ after reload".into()
    })?;

    for qi in 0..100 {
        let q: Vec<f64> = if qi < 5 {
            entries[qi].1.values().to_vec()
        } else {
            (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let qn = (q.iter().map(|x| x * x).sum::<f64>()).sqrt();
        // brute force over the stored single-precision rows
        let mut want: Vec<(String, f64)> = entries
            .iter()
            .map(|(id, v)| {
                let s: f64 = v
                    .values()
                    .iter()
                    .zip(&q)
                    .map(|(a, b)| (*a as f32) as f64 * (b / qn))
                    .sum();
                (id.clone(), s)
            })
            .collect();
        want.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let k = 1 + qi % 50;
        let got = index.search(&q, k).map_err(|e| e.to_string())?;
        let again = reloaded.search(&q, k).map_err(|e| e.to_string())?;
        ensure(got == again, || format!("query {qi}: reloaded index disagrees"))?;
        ensure(got.len() == k, || format!("query {qi}: {} hits", got.len()))?;
        for (r, (h, (id, s))) in got.iter().zip(&want).enumerate() {
            ensure(
                h.rank == r + 1 && &h.accession == id && (h.similarity - s).abs() <= 1e-12,
                || {
                    format!(
                        "query {qi} rank {}: {} {} vs {id} {s}",
                        r + 1,
                        h.accession,
                        h.similarity
                    )
                },
            )?;
        }
    }
    Ok(format!("{} vectors, 100 queries, reload byte-identical", entries.len()))
}

// ----------------------------------------------------------- determinism

fn demo_determinism(first: &Path) -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let second = tmp.path().join("demo");
    run_demo(&second)?;
    let files = [
        DEMO_TRAIN,
        DEMO_TEST,
        "snapshot/model.json",
        "snapshot/index.bin",
        "eval_report.json",
        "eval_report.tsv",
    ];
    for f in files {
        let a = std::fs::read(first.join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = std::fs::read(second.join(f)).map_err(|e| format!("{f}: {e}"))?;
        ensure(a == b, || format!("{f} differs between runs"))?;
    }
    // the model must also survive a parse and re-render unchanged
    let text = read_text(&first.join("snapshot/model.json")).map_err(|e| e.to_string())?;
    let model = read_model(&text).map_err(|e| e.to_string())?;
    ensure(write_model(&model).map_err(|e| e.to_string())? == text, || {
        "model re-render differs".into()
    })?;
    ensure(model.variant == LossVariant::Infonce, || {
        "unexpected loss variant".into()
    })?;
    Ok(format!("{} files byte-identical", files.len()))
}

// ------------------------------------------------------------------ main

fn check(name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    let took = start.elapsed();
    let outcome = match (outcome, limit) {
        (Ok(d), Some(l)) if took > l => Err(format!("{d}; took {took:.2?}, limit {l:?}")),
        (o, _) => o,
    };
    match &outcome {
        Ok(d) => println!("PASS {name} ({took:.2?}) {d}"),
        Err(e) => println!("FAIL {name} ({took:.2?}) {e}"),
    }
    outcome.is_ok()
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let demo_dir = tempfile::tempdir().expect("temp dir");
    let first = demo_dir.path().join("demo");
    let results = [
        check("metrics-oracle", secs(5), metrics_oracle),
        check("levenshtein-oracle", secs(10), levenshtein_oracle),
        check("gradient-check", secs(30), gradient_check),
        check("closed-form-losses", None, closed_form_losses),
        check("qa-integrity", secs(20), qa_integrity),
        check("training-improves-retrieval", secs(120), || training_improves(&first)),
        check("augmentation-report", secs(5), augmentation_counts),
        check("index-vs-brute-force", secs(10), index_oracle),
        check("demo-determinism", None, || demo_determinism(&first)),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
