mod common;

use std::collections::HashSet;
use std::fs;

use netschem::augment::{build_dataset, read_jsonl};
use netschem::harness::compile_text;
use netschem::netlist::serialize_netlist;
use netschem::PinMapRegistry;

use common::{fixtures, read_all};

#[test]
fn hand_made_schematics_compile_to_their_netlists() {
    let dir = fixtures().join("asc");
    let reg = PinMapRegistry::builtin();
    let nets = read_all(&dir, "net");
    assert_eq!(nets.len(), 3);
    for (id, expected) in nets {
        let asc = fs::read_to_string(dir.join(format!("{id}.asc"))).unwrap();
        let (_, n) = compile_text(&asc, &reg).unwrap();
        assert_eq!(serialize_netlist(&n), expected, "{id}");
    }
}

#[test]
fn build_writes_disjoint_splits() {
    let reg = PinMapRegistry::builtin();
    let corpus = tempfile::tempdir().unwrap();
    let test_dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();

    let asc = fixtures().join("asc");
    fs::create_dir(corpus.path().join("sub")).unwrap();
    for name in ["band_pass.asc", "tline_match.asc", "decoration_only.asc"] {
        fs::copy(asc.join(name), corpus.path().join(name)).unwrap();
    }
    fs::copy(asc.join("band_pass_utf16.asc"), corpus.path().join("sub/utf16.asc")).unwrap();
    // Same circuit as the test file apart from GUI lines: must not reach training.
    let lpf = fs::read_to_string(asc.join("lpf.asc")).unwrap();
    fs::write(corpus.path().join("lpf_copy.asc"), format!("{lpf}TEXT 0 0 Left 2 ;copy\n")).unwrap();
    fs::copy(asc.join("lpf.asc"), test_dir.path().join("lpf.asc")).unwrap();

    let summary = build_dataset(corpus.path(), Some(test_dir.path()), out.path(), &reg, (0.5, 0.5), 3).unwrap();
    let m = &summary.manifest;
    assert_eq!(summary.dropped_overlap, 5);
    assert_eq!(m.test, ["test__lpf_p0"]);
    let train: HashSet<&String> = m.train.iter().collect();
    let val: HashSet<&String> = m.validation.iter().collect();
    assert!(train.is_disjoint(&val));
    // band_pass and sub/utf16 have 5 blocks, tline_match has 4: 15 samples.
    assert_eq!(m.train.len() + m.validation.len(), 15);
    assert!(summary.files.values().any(|o| matches!(o, netschem::augment::FileOutcome::Filtered { .. })));

    for (file, ids) in [("train.jsonl", &m.train), ("val.jsonl", &m.validation), ("test.jsonl", &m.test)] {
        let records = read_jsonl(&out.path().join(file)).unwrap();
        let got: Vec<&String> = records.iter().map(|r| &r.id).collect();
        assert_eq!(got, ids.iter().collect::<Vec<_>>());
        for r in &records {
            let (_, n) = compile_text(&r.asc_text, &reg).unwrap();
            assert_eq!(serialize_netlist(&n), r.netlist_text, "{}", r.id);
        }
    }
    assert!(out.path().join("manifest.json").is_file());
    let origins: Vec<&str> = read_jsonl(&out.path().join("train.jsonl"))
        .unwrap()
        .iter()
        .chain(&read_jsonl(&out.path().join("val.jsonl")).unwrap())
        .map(|r| r.origin_file.clone())
        .collect::<HashSet<_>>()
        .into_iter()
        .map(|s| Box::leak(s.into_boxed_str()) as &str)
        .collect();
    assert!(origins.contains(&"sub/utf16.asc"));
}
