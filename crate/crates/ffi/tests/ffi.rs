use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use neuroembed_ffi::*;

fn build_snapshot(root: &Path) -> PathBuf {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/mini");
    let snap = root.join("snap");
    let p = |p: &Path| p.to_str().unwrap().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec![
            "augment".into(),
            "--catalog".into(),
            p(&fixture.join("catalog.jsonl")),
            "--ontologies".into(),
            p(&fixture.join("ontologies")),
            "--out".into(),
            p(&snap),
        ],
        vec![
            "qagen".into(),
            "--catalog".into(),
            p(&snap.join("catalog.jsonl")),
            "--vocab".into(),
            p(&snap.join("vocabulary.json")),
            "--train-out".into(),
            p(&root.join("train.jsonl")),
            "--test-out".into(),
            p(&root.join("test.jsonl")),
            "--seed".into(),
            "3".into(),
            "--ratio".into(),
            "0.5".into(),
        ],
        vec![
            "train".into(),
            "--catalog".into(),
            p(&snap.join("catalog.jsonl")),
            "--train".into(),
            p(&root.join("train.jsonl")),
            "--model".into(),
            p(&snap.join("model.json")),
            "--dim".into(),
            "64".into(),
            "--batch".into(),
            "4".into(),
            "--seed".into(),
            "3".into(),
        ],
        vec![
            "index".into(),
            "--catalog".into(),
            p(&snap.join("catalog.jsonl")),
            "--model".into(),
            p(&snap.join("model.json")),
            "--index".into(),
            p(&snap.join("index.bin")),
        ],
    ];
    for step in steps {
        let argv = std::iter::once("neuroembed".to_string()).chain(step.clone());
        assert_eq!(neuroembed::cli::run(argv), 0, "{step:?}");
    }
    snap
}

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { ne_string_free(s) };
    out
}

fn last_error() -> String {
    let p = ne_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn committed_header_is_current() {
    let generated = std::fs::read_to_string(Path::new(env!("OUT_DIR")).join("neuroembed.h")).unwrap();
    let committed =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/neuroembed.h")).unwrap();
    assert_eq!(
        generated, committed,
        "regenerate include/neuroembed.h from the build output"
    );
}

#[test]
fn header_compiles_as_c() {
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", "-std=c99"])
        .arg(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/neuroembed.h"))
        .status()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(status.success());
}

#[test]
fn snapshot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let snap_dir = CString::new(build_snapshot(dir.path()).to_str().unwrap()).unwrap();
    let mut snap = ptr::null_mut();
    assert_eq!(unsafe { ne_snapshot_open(snap_dir.as_ptr(), &mut snap) }, NeStatus::Ok);
    assert!(ne_last_error().is_null());
    assert_eq!(unsafe { ne_snapshot_len(snap) }, 6);

    let q = CString::new("human substantia nigra").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { ne_snapshot_query(snap, q.as_ptr(), 2, &mut out) },
        NeStatus::Ok
    );
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(v["hits"].as_array().unwrap().len(), 2);
    assert_eq!(v["hits"][0]["rank"], 1);

    let empty = CString::new("  ").unwrap();
    assert_eq!(
        unsafe { ne_snapshot_query(snap, empty.as_ptr(), 2, &mut out) },
        NeStatus::InvalidInput
    );
    assert!(out.is_null());
    assert!(last_error().contains("empty"));

    assert_eq!(unsafe { ne_snapshot_stats(snap, &mut out) }, NeStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(v["model"]["d_in"], 64);
    unsafe { ne_snapshot_free(snap) };
}

#[test]
fn index_handle() {
    let dir = tempfile::tempdir().unwrap();
    let snap = build_snapshot(dir.path());
    let path = CString::new(snap.join("index.bin").to_str().unwrap()).unwrap();
    let mut index = ptr::null_mut();
    assert_eq!(unsafe { ne_index_open(path.as_ptr(), &mut index) }, NeStatus::Ok);
    assert_eq!(unsafe { ne_index_len(index) }, 6);
    let dim = unsafe { ne_index_dim(index) };
    assert_eq!(dim, 64);

    let q: Vec<f64> = (0..dim).map(|i| (i % 5) as f64 - 2.0).collect();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { ne_index_search(index, q.as_ptr(), dim, 6, &mut out) },
        NeStatus::Ok
    );
    let hits: Vec<serde_json::Value> = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(hits.len(), 6);
    assert!(hits
        .windows(2)
        .all(|w| w[0]["similarity"].as_f64() >= w[1]["similarity"].as_f64()));

    assert_eq!(
        unsafe { ne_index_search(index, q.as_ptr(), dim - 1, 3, &mut out) },
        NeStatus::Shape
    );
    unsafe { ne_index_free(index) };
}

#[test]
fn error_statuses() {
    let mut snap = ptr::null_mut();
    let missing = CString::new("/no/such/snapshot").unwrap();
    assert_eq!(unsafe { ne_snapshot_open(missing.as_ptr(), &mut snap) }, NeStatus::Io);
    assert!(snap.is_null());
    assert!(last_error().contains("/no/such/snapshot"));
    assert_eq!(
        unsafe { ne_snapshot_open(ptr::null(), &mut snap) },
        NeStatus::NullArgument
    );
    assert_eq!(
        unsafe { ne_snapshot_query(ptr::null(), missing.as_ptr(), 1, &mut ptr::null_mut()) },
        NeStatus::NullArgument
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.bin");
    std::fs::write(&bad, b"NOTANIDX").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    let mut index = ptr::null_mut();
    assert_eq!(unsafe { ne_index_open(bad.as_ptr(), &mut index) }, NeStatus::Format);
    assert_eq!(unsafe { ne_index_len(index) }, 0);

    let invalid = [0xffu8, 0xfe, 0];
    let mut d = 0usize;
    assert_eq!(
        unsafe { ne_levenshtein(invalid.as_ptr().cast(), invalid.as_ptr().cast(), &mut d) },
        NeStatus::InvalidUtf8
    );
}

#[test]
fn levenshtein_and_version() {
    let (a, b) = (CString::new("kitten").unwrap(), CString::new("sitting").unwrap());
    let mut d = 0usize;
    assert_eq!(unsafe { ne_levenshtein(a.as_ptr(), b.as_ptr(), &mut d) }, NeStatus::Ok);
    assert_eq!(d, 3);
    let v = unsafe { CStr::from_ptr(ne_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
