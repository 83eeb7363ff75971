//! Symbol-order augmentation and dataset assembly.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asc::{decode_text, serialize_asc, AscDocument, ParseMode};
use crate::error::{Error, Result};
use crate::extract::{compile_asc, PinMapRegistry};
use crate::netlist::{parse_netlist, Netlist};
use crate::preprocess::{clean_netlist, preprocess_pipeline};

/// Upper bound on samples generated from one file, original included.
pub const MAX_SAMPLES: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub netlist_text: String,
    pub asc_text: String,
    pub origin_file: String,
    pub permutation_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
    pub ratios: (f64, f64),
}

fn factorial_at_least(n: usize, bound: usize) -> usize {
    let mut f = 1usize;
    for k in 2..=n {
        f = f.saturating_mul(k);
        if f >= bound {
            return bound;
        }
    }
    f
}

/// Reorders symbol blocks. The first output is always the input itself;
/// one block yields 1 document, two yield 2, more yield `min(5, n!)`
/// distinct orderings.
pub fn permute_pairs(doc: &AscDocument, seed: u64) -> Vec<AscDocument> {
    let n = doc.symbols.len();
    if n < 2 {
        return vec![doc.clone()];
    }
    let target = factorial_at_least(n, MAX_SAMPLES);
    let identity: Vec<usize> = (0..n).collect();
    let mut orders = vec![identity.clone()];
    let mut seen: HashSet<Vec<usize>> = HashSet::from([identity]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while orders.len() < target {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(&mut rng);
        if seen.insert(p.clone()) {
            orders.push(p);
        }
    }
    orders
        .into_iter()
        .map(|order| {
            let mut d = doc.clone();
            d.symbols = order.iter().map(|&i| doc.symbols[i].clone()).collect();
            d
        })
        .collect()
}

/// Netlist of a (possibly permuted) document; card order follows symbol order.
pub fn reflect_to_netlist(doc: &AscDocument, table: &PinMapRegistry) -> Result<Netlist> {
    compile_asc(doc, table, ParseMode::Strict)
}

/// Hashes of the canonical `.asc` and netlist forms of a record.
pub fn content_hashes(record: &DatasetRecord) -> Vec<String> {
    let mut out = Vec::with_capacity(2);
    if let Some(doc) = preprocess_pipeline(&record.asc_text).doc {
        out.push(format!("asc:{}", doc.canonical_hash()));
    }
    if let Ok(n) = parse_netlist(&record.netlist_text) {
        out.push(format!("net:{}", clean_netlist(&n).canonical_hash()));
    }
    out
}

/// Drops training records whose canonical `.asc` or netlist matches any test record.
pub fn dedup_overlap(train: &[DatasetRecord], test: &[DatasetRecord]) -> Vec<DatasetRecord> {
    let test_hashes: HashSet<String> = test.iter().flat_map(content_hashes).collect();
    train
        .iter()
        .filter(|r| {
            let hit = content_hashes(r).iter().any(|h| test_hashes.contains(h));
            if hit {
                log::debug!("dedup: dropping {} (overlaps test)", r.id);
            }
            !hit
        })
        .cloned()
        .collect()
}

/// Assigns whole origin files to splits. Counts are `round(n * ratio)`;
/// whatever is left over goes to `test`.
pub fn build_splits(records: &[DatasetRecord], ratios: (f64, f64), seed: u64) -> SplitManifest {
    let origins: BTreeSet<&str> = records.iter().map(|r| r.origin_file.as_str()).collect();
    let mut origins: Vec<&str> = origins.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    origins.shuffle(&mut rng);

    let n = origins.len();
    let n_train = ((n as f64 * ratios.0).round() as usize).min(n);
    let n_val = ((n as f64 * ratios.1).round() as usize).min(n - n_train);
    let mut split_of: BTreeMap<&str, u8> = BTreeMap::new();
    for (i, o) in origins.iter().enumerate() {
        let s = if i < n_train {
            0
        } else if i < n_train + n_val {
            1
        } else {
            2
        };
        split_of.insert(o, s);
    }

    let mut manifest = SplitManifest {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        seed,
        ratios,
    };
    for r in records {
        let bucket = match split_of[r.origin_file.as_str()] {
            0 => &mut manifest.train,
            1 => &mut manifest.validation,
            _ => &mut manifest.test,
        };
        bucket.push(r.id.clone());
    }
    manifest
}

/// File-system-safe record id.
pub fn record_id(origin: &str, permutation_index: usize) -> String {
    let stem = origin.strip_suffix(".asc").unwrap_or(origin);
    let safe: String = stem
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{safe}_p{permutation_index}")
}

/// Why a corpus file produced no records.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FileOutcome {
    Kept { samples: usize },
    Filtered { reason: crate::preprocess::FilterReason },
    Uncompilable { error: String },
}

/// Preprocesses, compiles and (optionally) augments one raw `.asc` file.
pub fn records_for_file(
    origin: &str,
    raw_text: &str,
    table: &PinMapRegistry,
    augment: bool,
    seed: u64,
) -> (Vec<DatasetRecord>, FileOutcome) {
    let pre = preprocess_pipeline(raw_text);
    let doc = match pre.doc {
        Some(d) if pre.verdict.keep => d,
        _ => {
            return (Vec::new(), FileOutcome::Filtered { reason: pre.verdict.reason });
        }
    };
    let docs = if augment { permute_pairs(&doc, seed) } else { vec![doc] };
    let mut out = Vec::with_capacity(docs.len());
    for (i, d) in docs.iter().enumerate() {
        match reflect_to_netlist(d, table) {
            Ok(n) => out.push(DatasetRecord {
                id: record_id(origin, i),
                netlist_text: crate::netlist::serialize_netlist(&n),
                asc_text: serialize_asc(d),
                origin_file: origin.to_string(),
                permutation_index: i,
            }),
            Err(e) => {
                return (Vec::new(), FileOutcome::Uncompilable { error: e.to_string() });
            }
        }
    }
    let samples = out.len();
    (out, FileOutcome::Kept { samples })
}

/// Relative paths of all `.asc` files under `dir`, sorted.
pub fn collect_asc_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            Error::io(path, e.into())
        })?;
        let path = entry.path();
        if entry.file_type().is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("asc")) {
            out.push(path.strip_prefix(dir).unwrap_or(path).to_path_buf());
        }
    }
    out.sort();
    Ok(out)
}

fn origin_name(rel: &Path) -> String {
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Records for every file in `dir`, in sorted file order.
pub fn records_for_dir(
    dir: &Path,
    table: &PinMapRegistry,
    augment: bool,
    seed: u64,
) -> Result<(Vec<DatasetRecord>, BTreeMap<String, FileOutcome>)> {
    let files = collect_asc_files(dir)?;
    let per_file: Vec<Result<(String, Vec<DatasetRecord>, FileOutcome)>> = files
        .par_iter()
        .map(|rel| {
            let path = dir.join(rel);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let text = decode_text(&bytes)?;
            let origin = origin_name(rel);
            let (recs, outcome) = records_for_file(&origin, &text, table, augment, seed);
            Ok((origin, recs, outcome))
        })
        .collect();
    let mut records = Vec::new();
    let mut outcomes = BTreeMap::new();
    for r in per_file {
        let (origin, recs, outcome) = r?;
        records.extend(recs);
        outcomes.insert(origin, outcome);
    }
    Ok((records, outcomes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub manifest: SplitManifest,
    pub dropped_overlap: usize,
    pub files: BTreeMap<String, FileOutcome>,
}

fn write_jsonl(path: &Path, records: &[&DatasetRecord]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<DatasetRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Builds augmented train/validation splits from `corpus` and an
/// unaugmented test split from `test_dir`, removes overlap, and writes
/// `train.jsonl`, `val.jsonl`, `test.jsonl` and `manifest.json` into `out`.
pub fn build_dataset(
    corpus: &Path,
    test_dir: Option<&Path>,
    out: &Path,
    table: &PinMapRegistry,
    ratios: (f64, f64),
    seed: u64,
) -> Result<DatasetSummary> {
    let (records, mut files) = records_for_dir(corpus, table, true, seed)?;
    let test = match test_dir {
        Some(d) => {
            let (mut t, test_files) = records_for_dir(d, table, false, seed)?;
            for r in &mut t {
                r.id = format!("test__{}", r.id);
            }
            files.extend(test_files.into_iter().map(|(k, v)| (format!("test:{k}"), v)));
            t
        }
        None => Vec::new(),
    };
    // An origin whose unpermuted sample overlaps the test set loses all of
    // its permutations too, not only the byte-identical one.
    let mut kept = dedup_overlap(&records, &test);
    let survivors: HashSet<&str> = kept.iter().map(|r| r.id.as_str()).collect();
    let leaked: HashSet<String> = records
        .iter()
        .filter(|r| r.permutation_index == 0 && !survivors.contains(r.id.as_str()))
        .map(|r| r.origin_file.clone())
        .collect();
    kept.retain(|r| !leaked.contains(&r.origin_file));
    let dropped_overlap = records.len() - kept.len();
    let mut manifest = build_splits(&kept, ratios, seed);
    manifest.test.extend(test.iter().map(|r| r.id.clone()));

    let by_id: BTreeMap<&str, &DatasetRecord> =
        kept.iter().chain(&test).map(|r| (r.id.as_str(), r)).collect();
    let pick = |ids: &[String]| ids.iter().map(|i| by_id[i.as_str()]).collect::<Vec<_>>();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_jsonl(&out.join("train.jsonl"), &pick(&manifest.train))?;
    write_jsonl(&out.join("val.jsonl"), &pick(&manifest.validation))?;
    write_jsonl(&out.join("test.jsonl"), &pick(&manifest.test))?;

    let summary = DatasetSummary {
        manifest,
        dropped_overlap,
        files,
    };
    let mpath = out.join("manifest.json");
    fs::write(&mpath, serde_json::to_string_pretty(&summary)?).map_err(|e| Error::io(&mpath, e))?;
    Ok(summary)
}
