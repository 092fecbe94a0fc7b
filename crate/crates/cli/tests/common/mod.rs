//! Shared access to the example product lines under `fixtures/`.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use deltarc_cli::{load_product_line, ProductLine};

/// The evolution scenarios in order: the initial family, then one
/// directory per evolution step.
pub const SCENARIOS: [&str; 7] = [
    "base",
    "scenario1",
    "scenario2",
    "scenario3",
    "scenario4",
    "scenario5",
    "scenario6",
];

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("..")
        .join("..")
        .join("fixtures")
}

pub fn load(label: &str) -> ProductLine {
    let root = fixtures_dir().join(label);
    load_product_line(&root)
        .unwrap_or_else(|e| panic!("fixture `{}` must load: {}", label, e))
}

/// Reads and parses one named delta file from a fixture directory.
pub fn fixture_delta(label: &str, file: &str) -> deltarc_core::model::Delta {
    use deltarc_core::parser::{parse_delta, SourceFile, SourceKind};
    let path = fixtures_dir().join(label).join(file);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{} must be readable: {}", path.display(), e));
    parse_delta(&SourceFile::new(file, SourceKind::Delta, &text))
        .unwrap_or_else(|e| panic!("{} must parse: {}", path.display(), e))
}

/// Reads and parses one named configuration file from a fixture directory.
pub fn fixture_config(label: &str, file: &str) -> deltarc_core::model::DeltaConfig {
    use deltarc_core::parser::{parse_config, SourceFile, SourceKind};
    let path = fixtures_dir().join(label).join(file);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{} must be readable: {}", path.display(), e));
    parse_config(&SourceFile::new(file, SourceKind::Config, &text))
        .unwrap_or_else(|e| panic!("{} must parse: {}", path.display(), e))
}

pub const ORDER_LIMIT: usize = 1000;
