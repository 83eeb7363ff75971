//! Scoring runs: pairs generated schematics with references and aggregates
//! compile rate, GED score, MSSIM and BLEU, overall and per component count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asc::{parse_asc, AscDocument, ParseMode};
use crate::augment::{read_jsonl, DatasetRecord};
use crate::error::{Error, Result};
use crate::extract::{compile_asc, PinMapRegistry};
use crate::llm::{GenerationJob, GenerationMeta};
use crate::metrics::{bleu4, ged_score, mssim, netlist_to_graph, SsimParams};
use crate::netlist::{parse_netlist, Netlist};
use crate::preprocess::strip_decorations;
use crate::prompt::{render_prompt, sheet_header, ExamplePair, PromptVariant};
use crate::render::{pad_to_common, render, RenderConfig};

pub const DEFAULT_TIMEOUT_S: f64 = 60.0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reference {
    pub id: String,
    pub asc_text: String,
    /// Explicit reference netlist; when absent the reference schematic is compiled.
    pub netlist_text: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub id: String,
    pub asc_text: String,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub timeout_seconds: f64,
    pub render: RenderConfig,
    pub ssim: SsimParams,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            timeout_seconds: DEFAULT_TIMEOUT_S,
            render: RenderConfig::default(),
            ssim: SsimParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub id: String,
    pub n_c: usize,
    pub csr_ok: bool,
    pub truncated: bool,
    pub ged: Option<u64>,
    pub ged_score: Option<f64>,
    pub ged_optimal: Option<bool>,
    pub mssim: Option<f64>,
    pub bleu: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub samples: usize,
    pub compiled: usize,
    pub csr: f64,
    pub mean_ged_score: Option<f64>,
    pub mean_mssim: Option<f64>,
    pub mean_bleu: f64,
    pub csr_scaled_ged: Option<f64>,
    pub csr_scaled_mssim: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub toolkit_version: String,
    pub pin_map_hash: String,
    pub config: EvalConfig,
    pub samples: Vec<SampleResult>,
    pub aggregates: Aggregates,
    /// Keyed by the reference's component count.
    pub groups: BTreeMap<usize, Aggregates>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn aggregate(samples: &[&SampleResult]) -> Aggregates {
    let n = samples.len();
    let compiled = samples.iter().filter(|s| s.csr_ok).count();
    let csr = if n == 0 { 0.0 } else { compiled as f64 / n as f64 };
    let mean_ged_score = mean(samples.iter().filter(|s| s.csr_ok).filter_map(|s| s.ged_score));
    let mean_mssim = mean(samples.iter().filter(|s| s.csr_ok).filter_map(|s| s.mssim));
    Aggregates {
        samples: n,
        compiled,
        csr,
        mean_ged_score,
        mean_mssim,
        mean_bleu: mean(samples.iter().map(|s| s.bleu)).unwrap_or(0.0),
        csr_scaled_ged: mean_ged_score.map(|g| g * csr),
        csr_scaled_mssim: mean_mssim.map(|m| m * csr),
    }
}

/// Schematic to netlist the way generated files are judged: GUI-only lines
/// are tolerated, everything else must parse and every symbol must be known.
pub fn compile_text(text: &str, table: &PinMapRegistry) -> Result<(AscDocument, Netlist)> {
    let doc = parse_asc(&strip_decorations(text), ParseMode::Strict)?;
    let n = compile_asc(&doc, table, ParseMode::Strict)?;
    Ok((doc, n))
}

fn reference_netlist(r: &Reference, table: &PinMapRegistry) -> Result<Netlist> {
    match &r.netlist_text {
        Some(t) => parse_netlist(t),
        None => compile_text(&r.asc_text, table).map(|(_, n)| n),
    }
}

fn render_mssim(gen: &AscDocument, reference: &str, cfg: &EvalConfig, table: &PinMapRegistry) -> Result<f64> {
    let ref_doc = parse_asc(reference, ParseMode::Lenient)?;
    let a = render(gen, &cfg.render, table)?;
    let b = render(&ref_doc, &cfg.render, table)?;
    let (a, b) = pad_to_common(&a, &b);
    mssim(&a, &b, &cfg.ssim)
}

pub fn score_sample(c: &Candidate, r: &Reference, cfg: &EvalConfig, table: &PinMapRegistry) -> Result<SampleResult> {
    let ref_net = reference_netlist(r, table)?;
    let mut out = SampleResult {
        id: r.id.clone(),
        n_c: ref_net.elements.len(),
        csr_ok: false,
        truncated: c.truncated,
        ged: None,
        ged_score: None,
        ged_optimal: None,
        mssim: None,
        bleu: bleu4(&c.asc_text, &r.asc_text),
        error: None,
    };
    let (doc, net) = match compile_text(&c.asc_text, table) {
        Ok(v) => v,
        Err(e) => {
            out.error = Some(e.to_string());
            return Ok(out);
        }
    };
    out.csr_ok = true;
    let g = ged_score(&netlist_to_graph(&net), &netlist_to_graph(&ref_net), cfg.timeout_seconds);
    out.ged = Some(g.ged);
    out.ged_score = Some(g.score);
    out.ged_optimal = Some(g.optimal);
    match render_mssim(&doc, &r.asc_text, cfg, table) {
        Ok(v) => out.mssim = Some(v),
        Err(e) => out.error = Some(format!("mssim: {e}")),
    }
    Ok(out)
}

/// Scores every reference against the candidate with the same id.
pub fn evaluate(
    candidates: &[Candidate],
    references: &[Reference],
    cfg: &EvalConfig,
    table: &PinMapRegistry,
) -> Result<EvalReport> {
    if references.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let by_id: BTreeMap<&str, &Candidate> = candidates.iter().map(|c| (c.id.as_str(), c)).collect();
    let ref_ids: BTreeSet<&str> = references.iter().map(|r| r.id.as_str()).collect();
    if let Some(r) = references.iter().find(|r| !by_id.contains_key(r.id.as_str())) {
        return Err(Error::Unpaired(r.id.clone()));
    }
    if let Some(c) = candidates.iter().find(|c| !ref_ids.contains(c.id.as_str())) {
        return Err(Error::Unpaired(c.id.clone()));
    }

    let mut refs: Vec<&Reference> = references.iter().collect();
    refs.sort_by(|a, b| a.id.cmp(&b.id));
    let samples = refs
        .par_iter()
        .map(|r| score_sample(by_id[r.id.as_str()], r, cfg, table))
        .collect::<Result<Vec<_>>>()?;

    let all: Vec<&SampleResult> = samples.iter().collect();
    let aggregates = aggregate(&all);
    let mut by_nc: BTreeMap<usize, Vec<&SampleResult>> = BTreeMap::new();
    for s in &samples {
        by_nc.entry(s.n_c).or_default().push(s);
    }
    let groups = by_nc.into_iter().map(|(k, v)| (k, aggregate(&v))).collect();
    Ok(EvalReport {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        pin_map_hash: table.hash(),
        config: cfg.clone(),
        samples,
        aggregates,
        groups,
    })
}

/// One prompt per record. The sheet header comes from the record's own schematic.
pub fn generation_jobs(
    records: &[DatasetRecord],
    variant: PromptVariant,
    example: Option<&ExamplePair>,
) -> Result<Vec<GenerationJob>> {
    records
        .iter()
        .map(|r| {
            let header = if variant.includes_sheet_header {
                Some(sheet_header(&parse_asc(&r.asc_text, ParseMode::Lenient)?))
            } else {
                None
            };
            let prompt = render_prompt(variant, r.netlist_text.trim_end(), header.as_deref(), example)?;
            Ok(GenerationJob { id: r.id.clone(), prompt })
        })
        .collect()
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    crate::asc::decode_text(&bytes)
}

fn stems_with_ext(dir: &Path, ext: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            if let Some(stem) = path.file_stem() {
                out.push(stem.to_string_lossy().into_owned());
            }
        }
    }
    out.sort();
    Ok(out)
}

/// `<id>.asc` files plus optional `<id>.net` reference netlists.
pub fn load_reference_dir(dir: &Path) -> Result<Vec<Reference>> {
    stems_with_ext(dir, "asc")?
        .into_iter()
        .map(|id| {
            let net = dir.join(format!("{id}.net"));
            Ok(Reference {
                asc_text: read_text(&dir.join(format!("{id}.asc")))?,
                netlist_text: if net.is_file() { Some(read_text(&net)?) } else { None },
                id,
            })
        })
        .collect()
}

/// References from a dataset split file.
pub fn load_reference_jsonl(path: &Path) -> Result<Vec<Reference>> {
    Ok(read_jsonl(path)?
        .into_iter()
        .map(|r| Reference {
            id: r.id,
            asc_text: r.asc_text,
            netlist_text: Some(r.netlist_text),
        })
        .collect())
}

pub fn load_references(path: &Path) -> Result<Vec<Reference>> {
    if path.is_dir() {
        load_reference_dir(path)
    } else {
        load_reference_jsonl(path)
    }
}

/// `<id>.asc` files; truncation comes from an optional `<id>.meta.json`.
pub fn load_candidate_dir(dir: &Path) -> Result<Vec<Candidate>> {
    stems_with_ext(dir, "asc")?
        .into_iter()
        .map(|id| {
            let meta = dir.join(format!("{id}.meta.json"));
            let truncated = if meta.is_file() {
                let text = fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;
                serde_json::from_str::<GenerationMeta>(&text)?.truncated
            } else {
                false
            };
            Ok(Candidate {
                asc_text: read_text(&dir.join(format!("{id}.asc")))?,
                truncated,
                id,
            })
        })
        .collect()
}

fn two(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

fn pair(raw: Option<f64>, scaled: Option<f64>) -> String {
    format!("{}/{}", two(raw), two(scaled))
}

fn table_row(label: &str, a: &Aggregates) -> [String; 6] {
    [
        label.to_string(),
        a.samples.to_string(),
        pair(a.mean_ged_score, a.csr_scaled_ged),
        pair(a.mean_mssim, a.csr_scaled_mssim),
        format!("{:.2}", a.csr * 100.0),
        format!("{:.2}", a.mean_bleu * 100.0),
    ]
}

/// Plain-text table: GED and MSSIM as raw/CSR-scaled, CSR in percent, BLEU x100.
pub fn report_table(r: &EvalReport) -> String {
    let mut rows = vec![["group", "n", "GED", "MSSIM", "CSR(%)", "BLEU"].map(String::from)];
    rows.push(table_row("all", &r.aggregates));
    for (nc, a) in &r.groups {
        rows.push(table_row(&format!("Nc={nc}"), a));
    }
    let widths: Vec<usize> = (0..6).map(|c| rows.iter().map(|row| row[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &rows {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn report_csv(r: &EvalReport) -> String {
    let mut out =
        String::from("group,samples,compiled,csr,mean_ged_score,csr_scaled_ged,mean_mssim,csr_scaled_mssim,mean_bleu\n");
    let mut row = |label: String, a: &Aggregates| {
        let _ = writeln!(
            out,
            "{label},{},{},{},{},{},{},{},{}",
            a.samples,
            a.compiled,
            a.csr,
            csv_opt(a.mean_ged_score),
            csv_opt(a.csr_scaled_ged),
            csv_opt(a.mean_mssim),
            csv_opt(a.csr_scaled_mssim),
            a.mean_bleu
        );
    };
    row("all".into(), &r.aggregates);
    for (nc, a) in &r.groups {
        row(nc.to_string(), a);
    }
    out
}

pub fn report_json(r: &EvalReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(r)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lpf_ref(id: &str) -> Reference {
        let ex = ExamplePair::lpf();
        Reference {
            id: id.into(),
            asc_text: ex.asc_text,
            netlist_text: Some(ex.netlist_text),
        }
    }

    fn cand(id: &str, text: &str) -> Candidate {
        Candidate {
            id: id.into(),
            asc_text: text.into(),
            truncated: false,
        }
    }

    fn cfg() -> EvalConfig {
        EvalConfig {
            timeout_seconds: 5.0,
            ..Default::default()
        }
    }

    #[test]
    fn self_comparison_is_perfect() {
        let reg = PinMapRegistry::builtin();
        let r = lpf_ref("a");
        let rep = evaluate(&[cand("a", &r.asc_text)], &[r], &cfg(), &reg).unwrap();
        let a = &rep.aggregates;
        assert_eq!((a.csr, a.mean_ged_score, a.mean_bleu), (1.0, Some(1.0), 1.0));
        assert!((a.mean_mssim.unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(a.csr_scaled_ged, a.mean_ged_score);
        assert_eq!(rep.samples[0].n_c, 3);
    }

    #[test]
    fn empty_generations_give_null_means() {
        let reg = PinMapRegistry::builtin();
        let refs = [lpf_ref("a"), lpf_ref("b")];
        let rep = evaluate(&[cand("a", ""), cand("b", "")], &refs, &cfg(), &reg).unwrap();
        let a = &rep.aggregates;
        assert_eq!((a.csr, a.mean_ged_score, a.mean_mssim, a.mean_bleu), (0.0, None, None, 0.0));
        let t = report_table(&rep);
        assert!(t.contains("-/-"), "{t}");
    }

    #[test]
    fn pairing_errors() {
        let reg = PinMapRegistry::builtin();
        assert!(matches!(evaluate(&[], &[], &cfg(), &reg), Err(Error::EmptyCorpus)));
        assert!(matches!(evaluate(&[], &[lpf_ref("a")], &cfg(), &reg), Err(Error::Unpaired(id)) if id == "a"));
        assert!(matches!(
            evaluate(&[cand("a", ""), cand("z", "")], &[lpf_ref("a")], &cfg(), &reg),
            Err(Error::Unpaired(id)) if id == "z"
        ));
    }

    fn sample(csr_ok: bool, ged: f64, bleu: f64) -> SampleResult {
        SampleResult {
            id: String::new(),
            n_c: 1,
            csr_ok,
            truncated: false,
            ged: None,
            ged_score: csr_ok.then_some(ged),
            ged_optimal: None,
            mssim: csr_ok.then_some(ged / 2.0),
            bleu,
            error: None,
        }
    }

    #[test]
    fn means_skip_incompilable_but_bleu_does_not() {
        let s = [sample(true, 0.5, 0.2), sample(true, 1.0, 0.4), sample(false, 0.0, 0.6)];
        let a = aggregate(&s.iter().collect::<Vec<_>>());
        assert_eq!(a.mean_ged_score, Some(0.75));
        assert!((a.mean_bleu - 0.4).abs() < 1e-12);
        assert!((a.csr_scaled_ged.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn table_formats_scaled_pairs() {
        let a = Aggregates {
            samples: 117,
            compiled: 89,
            csr: 89.0 / 117.0,
            mean_ged_score: Some(0.35),
            mean_mssim: None,
            mean_bleu: 0.2217,
            csr_scaled_ged: Some(0.35 * 89.0 / 117.0),
            csr_scaled_mssim: None,
        };
        let row = table_row("all", &a);
        assert_eq!(row[2], "0.35/0.27");
        assert_eq!(row[3], "-/-");
        assert_eq!(row[4], "76.07");
        assert_eq!(row[5], "22.17");
        let full = Aggregates { csr: 1.0, csr_scaled_ged: Some(0.35), ..a };
        assert_eq!(table_row("all", &full)[2], "0.35/0.35");
    }

    #[test]
    fn jobs_carry_header_and_netlist() {
        let ex = ExamplePair::lpf();
        let rec = DatasetRecord {
            id: "x_p0".into(),
            netlist_text: ex.netlist_text.clone() + "\n",
            asc_text: ex.asc_text.clone(),
            origin_file: "x.asc".into(),
            permutation_index: 0,
        };
        let jobs = generation_jobs(&[rec], PromptVariant::new(5).unwrap(), Some(&ex)).unwrap();
        assert!(jobs[0].prompt.contains("```\nVersion 4\nSHEET 1 880 680\n```"));
        assert_eq!(crate::prompt::embedded_netlist(&jobs[0].prompt), Some(ex.netlist_text.as_str()));
    }
}
