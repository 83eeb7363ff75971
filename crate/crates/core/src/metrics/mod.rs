//! Scoring: graph edit distance, SSIM/MSSIM, compile success rate, BLEU.

mod bleu;
mod ged;
mod graph;
mod ssim;

pub use bleu::{bleu, bleu4};
pub use ged::{ged_anytime, ged_exact, ged_lower_bound, ged_score, normalized_score, GedResult, EXACT_LIMIT};
pub use graph::{netlist_to_graph, CircuitGraph, NodeLabel};
pub use ssim::{mssim, ssim, ssim_from_moments, SsimParams};

use crate::error::{Error, Result};

/// Fraction of samples that compiled.
pub fn csr(compiled: &[bool]) -> Result<f64> {
    if compiled.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(compiled.iter().filter(|&&c| c).count() as f64 / compiled.len() as f64)
}
