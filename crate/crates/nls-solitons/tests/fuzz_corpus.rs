//! Replays the fuzz seed corpora through the checks the fuzz targets make.

use std::fs;
use std::path::PathBuf;

use nls_solitons::snapshot::{decode, encode};
use nls_solitons::system_model::parse_system_json;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn system_json_seeds() {
    let seeds = seeds("system_json");
    assert!(!seeds.is_empty());
    let mut accepted = 0;
    for (name, bytes) in seeds {
        let text = String::from_utf8(bytes).unwrap();
        if let Ok(spec) = parse_system_json(&text) {
            spec.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            accepted += 1;
        }
    }
    assert!(accepted >= 7, "only {accepted} seeds parse");
}

#[test]
fn snapshot_seeds() {
    let seeds = seeds("snapshot_decode");
    assert!(!seeds.is_empty());
    let mut accepted = 0;
    for (name, bytes) in seeds {
        if let Ok(s) = decode(&bytes) {
            assert_eq!(encode(&s.grid, s.t, &s.u), bytes, "{name}");
            accepted += 1;
        }
    }
    assert_eq!(accepted, 2);
}
