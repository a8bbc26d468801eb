//! Runs every checked-in fuzz corpus seed through the parser it seeds, so
//! the corpus stays valid as the formats evolve.

use imbench_core::bench::BenchConfig;
use imbench_core::datagen::DatasetSpec;
use imbench_core::dataset::{ingest_csv_str, DatasetMeta};
use std::path::PathBuf;

fn corpus_dir(target: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target)
}

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = corpus_dir(target);
    let mut out = Vec::new();
    for entry in std::fs::read_dir(&dir).unwrap_or_else(|e| panic!("{}: {e}", dir.display())) {
        let path = entry.unwrap().path();
        if path.is_file() {
            out.push((
                path.file_name().unwrap().to_string_lossy().to_string(),
                std::fs::read_to_string(&path).unwrap(),
            ));
        }
    }
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out.sort();
    out
}

#[test]
fn csv_ingest_seeds_parse() {
    for (name, text) in seeds("csv_ingest") {
        let (ds, _) = ingest_csv_str(&text, "Y").unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(ds.n_rows() > 0, "{name} should carry rows");
    }
}

#[test]
fn dataset_spec_seeds_parse_and_sample() {
    for (name, text) in seeds("dataset_spec_json") {
        let spec = DatasetSpec::from_json_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let ds = imbench_core::datagen::sample_dataset(&spec).unwrap();
        assert_eq!(ds.n_rows(), spec.n, "{name}");
    }
}

#[test]
fn bench_config_seeds_parse() {
    for (name, text) in seeds("bench_config_toml") {
        let cfg = BenchConfig::from_toml_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let echo = cfg.to_toml_string();
        BenchConfig::from_toml_str(&echo).unwrap_or_else(|e| panic!("{name} round trip: {e}"));
    }
}

#[test]
fn sidecar_seeds_parse() {
    for (name, text) in seeds("sidecar_meta_json") {
        let meta = DatasetMeta::from_json_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!meta.name.is_empty(), "{name}");
    }
}
