#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use netschem::metrics::{CircuitGraph, NodeLabel};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const LETTERS: [char; 9] = ['R', 'C', 'L', 'V', 'I', 'D', 'Q', 'M', 'T'];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// `(stem, text)` for every file with `ext` in `dir`, sorted by name.
pub fn read_all(dir: &Path, ext: &str) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .map(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
            (stem, netschem::asc::decode_text(&fs::read(&p).unwrap()).unwrap())
        })
        .collect();
    out.sort();
    out
}

/// Random bipartite multigraph with `components + nets` nodes and each
/// component touching 1..=3 nets (duplicates allowed).
pub fn random_graph(rng: &mut ChaCha8Rng, components: usize, nets: usize) -> CircuitGraph {
    let mut g = CircuitGraph::default();
    for _ in 0..components {
        g.add_node(NodeLabel::Component(LETTERS[rng.gen_range(0..LETTERS.len())]));
    }
    for _ in 0..nets {
        g.add_node(NodeLabel::Net);
    }
    if nets > 0 {
        for c in 0..components {
            for _ in 0..rng.gen_range(1..=3) {
                g.add_edge(c, components + rng.gen_range(0..nets));
            }
        }
    }
    g
}

/// Random graph with at most `max_nodes` nodes.
pub fn random_small_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> CircuitGraph {
    let total = rng.gen_range(0..=max_nodes);
    let components = rng.gen_range(0..=total);
    random_graph(rng, components, total - components)
}

/// Copy of `g` with `k` random label flips, edge deletions or edge insertions.
pub fn perturb(rng: &mut ChaCha8Rng, g: &CircuitGraph, k: usize) -> CircuitGraph {
    let mut h = g.clone();
    let comps: Vec<usize> = (0..h.nodes.len()).filter(|&i| h.nodes[i] != NodeLabel::Net).collect();
    let nets: Vec<usize> = (0..h.nodes.len()).filter(|&i| h.nodes[i] == NodeLabel::Net).collect();
    for _ in 0..k {
        match rng.gen_range(0..3) {
            0 if !comps.is_empty() => {
                let c = comps[rng.gen_range(0..comps.len())];
                h.nodes[c] = NodeLabel::Component(LETTERS[rng.gen_range(0..LETTERS.len())]);
            }
            1 if !h.edges.is_empty() => {
                let i = rng.gen_range(0..h.edges.len());
                h.edges.swap_remove(i);
            }
            _ if !comps.is_empty() && !nets.is_empty() => {
                let c = comps[rng.gen_range(0..comps.len())];
                let n = nets[rng.gen_range(0..nets.len())];
                h.add_edge(c, n);
            }
            _ => {}
        }
    }
    h
}
