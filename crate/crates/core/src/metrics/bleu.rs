use std::collections::HashMap;

/// Sentence-level BLEU over whitespace tokens with uniform weights, no
/// smoothing. Returns 0 when any n-gram precision is 0.
pub fn bleu(candidate: &str, reference: &str, max_n: usize) -> f64 {
    let cand: Vec<&str> = candidate.split_whitespace().collect();
    let refr: Vec<&str> = reference.split_whitespace().collect();
    if cand.is_empty() || max_n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (matched, total) = clipped_matches(&cand, &refr, n);
        if matched == 0 || total == 0 {
            return 0.0;
        }
        log_sum += (matched as f64 / total as f64).ln();
    }
    let (c, r) = (cand.len() as f64, refr.len() as f64);
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    bp * (log_sum / max_n as f64).exp()
}

pub fn bleu4(candidate: &str, reference: &str) -> f64 {
    bleu(candidate, reference, 4)
}

fn ngram_counts<'t, 's>(tokens: &'t [&'s str], n: usize) -> HashMap<&'t [&'s str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and candidate n-gram total.
fn clipped_matches(cand: &[&str], refr: &[&str], n: usize) -> (usize, usize) {
    let c = ngram_counts(cand, n);
    let r = ngram_counts(refr, n);
    let total = c.values().sum();
    let matched = c
        .iter()
        .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_one() {
        let t = "Version 4\nSHEET 1 0 0\nWIRE 0 0 16 0\n";
        assert!((bleu4(t, t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_candidate_is_zero() {
        assert_eq!(bleu4("", "WIRE 0 0 16 0"), 0.0);
    }

    #[test]
    fn hand_counted_wire_lines() {
        // precisions 4/5, 3/4, 2/3, 1/2; equal lengths so no brevity penalty
        let expected = (0.8f64 * 0.75 * (2.0 / 3.0) * 0.5).powf(0.25);
        let got = bleu4("WIRE 0 0 16 16", "WIRE 0 0 16 0");
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.669).abs() < 0.001);
    }

    #[test]
    fn brevity_penalty_applies_to_short_candidates() {
        let r = "a b c d e f g h";
        let c = "a b c d";
        assert!((bleu4(c, r) - (1.0f64 - 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn ngram_counter_windows() {
        let toks = ["a", "b", "a", "b"];
        let c = ngram_counts(&toks, 2);
        assert_eq!(c[&["a", "b"][..]], 2);
        assert!(ngram_counts(&toks, 5).is_empty());
    }
}
