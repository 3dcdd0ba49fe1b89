//! Helpers shared by the integration test binaries.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

/// `[name]` sections of the golden preset table, each a list of
/// `key=value` lines in file order. Blank lines and `#` comments are skipped.
pub fn golden_table() -> BTreeMap<String, Vec<String>> {
    let text = std::fs::read_to_string(data_path("presets.txt")).expect("golden table");
    let mut table = BTreeMap::new();
    let mut current: Option<String> = None;
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            table.insert(name.to_string(), Vec::new());
            current = Some(name.to_string());
        } else {
            let name = current.as_ref().expect("key before first section");
            table.get_mut(name).unwrap().push(line.to_string());
        }
    }
    table
}

/// Lines of `golden` missing from `actual` and vice versa.
pub fn line_diff(golden: &[String], actual: &str) -> Vec<String> {
    let actual: Vec<&str> = actual.lines().collect();
    let mut out = Vec::new();
    for g in golden {
        if !actual.contains(&g.as_str()) {
            out.push(format!("- {g}"));
        }
    }
    for a in &actual {
        if !golden.iter().any(|g| g == a) {
            out.push(format!("+ {a}"));
        }
    }
    if out.is_empty() && golden.len() != actual.len() {
        out.push(format!("line count {} vs {}", golden.len(), actual.len()));
    }
    out
}
