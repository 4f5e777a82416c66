//! Command-line entry point: one subcommand per pipeline step plus `demo`.

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::augment::{augment_catalog, augmentation_report};
use crate::catalog::{filter_disease, DiseaseTermSet};
use crate::demo::{demo_corpus, DEMO_DISEASE, DEMO_SEED};
use crate::embed::{
    train, write_model, EmbeddingProvider, HashedTokenProvider, LossConfig, LossVariant, ModelFile, ProjectionHead,
    TrainConfig, DEFAULT_DIM, DEFAULT_MARGIN, DEFAULT_SCALE, INIT_NOISE,
};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::index::index_to_bytes;
use crate::ontology::DEFAULT_THRESHOLD;
use crate::pipeline::{
    cohort_index, load_catalog, load_ontologies, read_bytes, read_text, training_pairs, write_atomic, write_json,
    CATALOG_FILE, INDEX_FILE, MODEL_FILE, STATS_FILE, VOCAB_FILE,
};
use crate::qagen::{generate_qad, read_jsonl, subsample_train, write_jsonl, NlqRules, QaConfig};
use crate::{augment::NormalizedCatalog, embed::read_model, index::index_from_bytes};

#[derive(Debug, Parser)]
#[command(
    name = "neuroembed",
    version,
    about = "Ontology-augmented semantic search over omics cohorts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a raw catalog dump and keep cohorts about one disease
    Ingest(IngestArgs),
    /// Normalize metadata against ontologies and build the vocabulary
    Augment(AugmentArgs),
    /// Generate train/test question-answer pairs
    Qagen(QagenArgs),
    /// Train the projection head with a contrastive loss
    Train(TrainArgs),
    /// Build the cohort vector index for a trained model
    Index(IndexArgs),
    /// Score the test set with R-precision and mean percentile rank
    Eval(EvalArgs),
    /// Serve search over HTTP from a snapshot directory
    Serve(ServeArgs),
    /// Run ingest through eval on the bundled synthetic corpus
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    /// Output catalog (JSON lines)
    #[arg(long)]
    pub out: PathBuf,
    /// Disease label to filter on
    #[arg(long, requires = "terms")]
    pub disease: Option<String>,
    /// JSON mapping of disease label to search terms
    #[arg(long)]
    pub terms: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    /// Directory holding efo.owl, uberon.owl, ncbitaxon.owl, mesh.xml, umls.tsv
    #[arg(long)]
    pub ontologies: PathBuf,
    /// Snapshot directory receiving the normalized catalog, vocabulary and stats
    #[arg(long)]
    pub out: PathBuf,
    /// Tab-separated augmentation report
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct QagenArgs {
    /// Normalized catalog written by `augment`
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub ratio: f64,
    /// Combinations drawn per number of terms
    #[arg(long, default_value_t = crate::qagen::DEFAULT_BUDGET)]
    pub budget: usize,
    /// Training pairs kept per test pair
    #[arg(long, default_value_t = crate::qagen::DEFAULT_SUBSAMPLE_FACTOR)]
    pub factor: usize,
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 2)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub warmup: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = DEFAULT_SCALE)]
    pub scale: f64,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
    #[arg(long, default_value = "infonce", value_parser = ["infonce", "hinge"])]
    pub loss: String,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: usize,
}

impl HyperArgs {
    fn configs(&self, seed: u64) -> Result<(TrainConfig, LossConfig)> {
        let train = TrainConfig {
            epochs: self.epochs,
            warmup_fraction: self.warmup,
            batch_size: self.batch,
            learning_rate: self.lr,
            seed,
            ..TrainConfig::default()
        };
        let loss = LossConfig {
            variant: self.loss.parse::<LossVariant>()?,
            scale: self.scale,
            margin: self.margin,
        };
        train.validate()?;
        loss.validate()?;
        Ok((train, loss))
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    /// Training pairs from `qagen`
    #[arg(long)]
    pub train: PathBuf,
    /// Validation pairs; the test split unless given otherwise
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub model: PathBuf,
    /// Loss curve output (tab-separated)
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub index: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// JSON report; a `.tsv` summary is written next to it
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "NEUROEMBED_SNAPSHOT")]
    pub snapshot: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = crate::service::DEFAULT_K)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Output directory for inputs, QA sets, snapshot and reports
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEMO_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

/// Parses `argv` and runs the command. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(&a),
        Command::Augment(a) => augment(&a),
        Command::Qagen(a) => qagen(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Index(a) => index_cmd(&a),
        Command::Eval(a) => eval_cmd(&a),
        Command::Serve(a) => serve(&a),
        Command::Demo(a) => demo(&a),
    }
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let mut catalog = load_catalog(&a.catalog)?;
    let before = catalog.len();
    if let (Some(disease), Some(terms)) = (&a.disease, &a.terms) {
        let sets = DiseaseTermSet::load_map(&read_text(terms)?)?;
        let set = sets
            .iter()
            .find(|s| s.disease == *disease)
            .cloned()
            .ok_or_else(|| Error::Input(format!("{} has no entry for {disease:?}", terms.display())))?;
        catalog = filter_disease(&catalog, &set);
    }
    write_atomic(&a.out, catalog.to_jsonl()?.as_bytes())?;
    println!(
        "ingest: kept {} of {before} cohorts -> {}",
        catalog.len(),
        a.out.display()
    );
    Ok(())
}

fn augment(a: &AugmentArgs) -> Result<()> {
    let catalog = load_catalog(&a.catalog)?;
    let registry = load_ontologies(&a.ontologies)?;
    let aug = augment_catalog(&catalog, &registry, a.threshold)?;
    write_atomic(&a.out.join(CATALOG_FILE), aug.catalog.to_jsonl()?.as_bytes())?;
    write_json(&a.out.join(VOCAB_FILE), &aug.vocabulary)?;
    write_json(&a.out.join(STATS_FILE), &aug.stats)?;
    let report = augmentation_report(&aug.stats);
    if let Some(p) = &a.report {
        write_atomic(p, report.as_bytes())?;
    }
    print!("{report}");
    println!(
        "augment: {} vocabulary terms -> {}",
        aug.vocabulary.total_terms(),
        a.out.display()
    );
    Ok(())
}

fn load_normalized(path: &Path) -> Result<NormalizedCatalog> {
    NormalizedCatalog::from_jsonl(&read_text(path)?)
}

fn qagen(a: &QagenArgs) -> Result<()> {
    let catalog = load_normalized(&a.catalog)?.to_catalog()?;
    let vocab = serde_json::from_str(&read_text(&a.vocab)?)?;
    let config = QaConfig {
        ratio: a.ratio,
        seed: a.seed,
        budget: a.budget,
    };
    let ds = generate_qad(&vocab, &catalog, &config, &NlqRules::default())?;
    for w in &ds.split.warnings {
        tracing::warn!("{w}");
    }
    let train = subsample_train(&ds.train, ds.test.len(), a.factor, a.seed);
    write_atomic(&a.train_out, write_jsonl(&train)?.as_bytes())?;
    write_atomic(&a.test_out, write_jsonl(&ds.test)?.as_bytes())?;
    println!(
        "qagen: {} train terms, {} test terms; {} train pairs (of {}), {} test pairs",
        ds.split.train_count(),
        ds.split.test_count(),
        train.len(),
        ds.train.len(),
        ds.test.len()
    );
    Ok(())
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let catalog = load_normalized(&a.catalog)?.to_catalog()?;
    let (tc, lc) = a.hyper.configs(a.seed)?;
    let provider = HashedTokenProvider::new(a.hyper.dim);
    let train_set = training_pairs(&read_jsonl(&read_text(&a.train)?)?, &catalog)?;
    let val = match &a.test {
        Some(p) => Some(training_pairs(&read_jsonl(&read_text(p)?)?, &catalog)?),
        None => None,
    };
    let init = ProjectionHead::identity_noise(a.hyper.dim, INIT_NOISE, a.seed);
    let (head, curve) = train(&init, &train_set, &provider, &tc, &lc, val.as_deref())?;
    let model = ModelFile::new(&provider.provider_id(), &head, &lc);
    write_atomic(&a.model, write_model(&model)?.as_bytes())?;
    if let Some(p) = &a.curve {
        write_atomic(p, curve.to_tsv().as_bytes())?;
    }
    println!(
        "train: {} steps, loss {:.4} -> {:.4} -> {}",
        curve.total_steps,
        curve.initial_train_loss.unwrap_or(f64::NAN),
        curve.final_train_loss.unwrap_or(f64::NAN),
        a.model.display()
    );
    Ok(())
}

fn load_head(path: &Path) -> Result<(ModelFile, ProjectionHead, HashedTokenProvider)> {
    let model = read_model(&read_text(path)?)?;
    let head = model.head()?;
    let provider = HashedTokenProvider::from_id(&model.provider_id, model.d_in)?;
    Ok((model, head, provider))
}

fn index_cmd(a: &IndexArgs) -> Result<()> {
    let catalog = load_normalized(&a.catalog)?;
    let (_, head, provider) = load_head(&a.model)?;
    let index = cohort_index(&head, &provider, catalog.records())?;
    write_atomic(&a.index, &index_to_bytes(&index))?;
    println!(
        "index: {} cohorts, dimension {} -> {}",
        index.len(),
        index.dim(),
        a.index.display()
    );
    Ok(())
}

fn eval_cmd(a: &EvalArgs) -> Result<()> {
    let (_, head, provider) = load_head(&a.model)?;
    let index = index_from_bytes(&read_bytes(&a.index)?)?;
    let test = read_jsonl(&read_text(&a.test)?)?;
    let report = evaluate(&head, &provider, &index, &test)?;
    write_atomic(&a.report, report.to_json()?.as_bytes())?;
    write_atomic(&a.report.with_extension("tsv"), report.to_tsv().as_bytes())?;
    print!("{}", report.to_tsv());
    Ok(())
}

fn serve(a: &ServeArgs) -> Result<()> {
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| Error::Input(format!("bad listen address: {e}")))?;
    let state = crate::service::AppState::load(&a.snapshot, a.k)?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("tokio runtime", e))?;
    rt.block_on(crate::service::serve(state, addr))
}

/// Paths produced by a demo run, relative to its output directory.
pub const DEMO_INPUTS: &str = "inputs";
pub const DEMO_SNAPSHOT: &str = "snapshot";
pub const DEMO_TRAIN: &str = "qa_train.jsonl";
pub const DEMO_TEST: &str = "qa_test.jsonl";
pub const DEMO_REPORT: &str = "eval_report.json";
pub const DEMO_BASELINE: &str = "eval_baseline.json";
pub const DEMO_CURVE: &str = "loss_curve.tsv";

fn demo(a: &DemoArgs) -> Result<()> {
    let out = &a.out;
    let inputs = out.join(DEMO_INPUTS);
    let snap = out.join(DEMO_SNAPSHOT);
    let corpus = demo_corpus(a.seed);
    write_atomic(&inputs.join("catalog_raw.jsonl"), corpus.catalog_jsonl.as_bytes())?;
    write_atomic(&inputs.join("disease_terms.json"), corpus.disease_terms_json.as_bytes())?;
    for (name, text) in &corpus.ontology_files {
        write_atomic(&inputs.join("ontologies").join(name), text.as_bytes())?;
    }

    ingest(&IngestArgs {
        catalog: inputs.join("catalog_raw.jsonl"),
        out: inputs.join("catalog.jsonl"),
        disease: Some(DEMO_DISEASE.into()),
        terms: Some(inputs.join("disease_terms.json")),
    })?;
    augment(&AugmentArgs {
        catalog: inputs.join("catalog.jsonl"),
        ontologies: inputs.join("ontologies"),
        out: snap.clone(),
        report: Some(out.join("augmentation_report.tsv")),
        threshold: DEFAULT_THRESHOLD,
    })?;
    qagen(&QagenArgs {
        catalog: snap.join(CATALOG_FILE),
        vocab: snap.join(VOCAB_FILE),
        train_out: out.join(DEMO_TRAIN),
        test_out: out.join(DEMO_TEST),
        seed: a.seed,
        ratio: 0.8,
        budget: crate::qagen::DEFAULT_BUDGET,
        factor: crate::qagen::DEFAULT_SUBSAMPLE_FACTOR,
    })?;

    // untrained baseline, same initialization the trainer starts from
    let provider = HashedTokenProvider::new(a.hyper.dim);
    let init = ProjectionHead::identity_noise(a.hyper.dim, INIT_NOISE, a.seed);
    let catalog = load_normalized(&snap.join(CATALOG_FILE))?;
    let test = read_jsonl(&read_text(&out.join(DEMO_TEST))?)?;
    let base_index = cohort_index(&init, &provider, catalog.records())?;
    let baseline = evaluate(&init, &provider, &base_index, &test)?;
    write_atomic(&out.join(DEMO_BASELINE), baseline.to_json()?.as_bytes())?;
    write_atomic(
        &out.join(DEMO_BASELINE).with_extension("tsv"),
        baseline.to_tsv().as_bytes(),
    )?;

    train_cmd(&TrainArgs {
        catalog: snap.join(CATALOG_FILE),
        train: out.join(DEMO_TRAIN),
        test: Some(out.join(DEMO_TEST)),
        model: snap.join(MODEL_FILE),
        curve: Some(out.join(DEMO_CURVE)),
        seed: a.seed,
        hyper: a.hyper.clone(),
    })?;
    index_cmd(&IndexArgs {
        catalog: snap.join(CATALOG_FILE),
        model: snap.join(MODEL_FILE),
        index: snap.join(INDEX_FILE),
    })?;
    eval_cmd(&EvalArgs {
        model: snap.join(MODEL_FILE),
        index: snap.join(INDEX_FILE),
        test: out.join(DEMO_TEST),
        report: out.join(DEMO_REPORT),
    })?;
    println!(
        "demo: baseline precision {:.4} mpr {:.4}; snapshot in {}",
        baseline.mean_precision,
        baseline.mean_mpr,
        snap.display()
    );
    Ok(())
}
