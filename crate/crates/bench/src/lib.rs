//! Inputs shared by the benches.

use std::path::{Path, PathBuf};

use netschem::asc::decode_text;
use netschem::netlist::{parse_netlist, Netlist};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

/// Every fixture netlist, sorted by file name.
pub fn netlists() -> Vec<(String, Netlist)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixtures().join("netlists"))
        .expect("fixture netlists")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "net"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = decode_text(&std::fs::read(&p).unwrap()).unwrap();
            (p.file_stem().unwrap().to_string_lossy().into_owned(), parse_netlist(&text).unwrap())
        })
        .collect()
}
