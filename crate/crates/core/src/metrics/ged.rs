//! Graph edit distance under unit costs.
//!
//! Node insertion and deletion cost 1, node substitution costs 1 when labels
//! differ. Edges are unlabelled: inserting or deleting one parallel edge
//! costs 1, so a mapped node pair with multiplicities `a` and `b` costs
//! `|a - b|`.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::graph::{CircuitGraph, NodeLabel};
use crate::error::{Error, Result};

/// Node limit for [`ged_exact`].
pub const EXACT_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GedResult {
    pub ged: u64,
    /// Search finished; `ged` is the exact minimum.
    pub optimal: bool,
    pub score: f64,
}

/// `1 - ged / (max node count + max edge count)`, clamped to `[0, 1]`.
pub fn normalized_score(ged: u64, g1: &CircuitGraph, g2: &CircuitGraph) -> f64 {
    let denom = g1.node_count().max(g2.node_count()) + g1.edge_count().max(g2.edge_count());
    if denom == 0 {
        return 1.0;
    }
    (1.0 - ged as f64 / denom as f64).clamp(0.0, 1.0)
}

struct Pair<'a> {
    l1: &'a [NodeLabel],
    l2: &'a [NodeLabel],
    m1: Vec<u32>,
    m2: Vec<u32>,
    n1: usize,
    n2: usize,
}

impl<'a> Pair<'a> {
    fn new(g1: &'a CircuitGraph, g2: &'a CircuitGraph) -> Self {
        Pair {
            l1: &g1.nodes,
            l2: &g2.nodes,
            m1: g1.multiplicity(),
            m2: g2.multiplicity(),
            n1: g1.node_count(),
            n2: g2.node_count(),
        }
    }

    fn m1(&self, a: usize, b: usize) -> u64 {
        self.m1[a * self.n1 + b] as u64
    }

    fn m2(&self, a: usize, b: usize) -> u64 {
        self.m2[a * self.n2 + b] as u64
    }

    /// Cost of fixing `u -> target` given the images of `done` g1 nodes.
    fn step_cost(&self, u: usize, target: Option<usize>, done: &[usize], image: &[Option<usize>]) -> u64 {
        match target {
            Some(v) => {
                let mut c = u64::from(self.l1[u] != self.l2[v]);
                for &w in done {
                    let a = self.m1(u, w);
                    c += match image[w] {
                        Some(z) => a.abs_diff(self.m2(v, z)),
                        None => a,
                    };
                }
                c
            }
            None => 1 + done.iter().map(|&w| self.m1(u, w)).sum::<u64>(),
        }
    }

    /// Inserting every unused g2 node plus the edges touching one.
    fn completion_cost(&self, used: &[bool]) -> u64 {
        let mut c = used.iter().filter(|&&u| !u).count() as u64;
        for a in 0..self.n2 {
            for b in a..self.n2 {
                if !used[a] || !used[b] {
                    c += self.m2(a, b);
                }
            }
        }
        c
    }
}

/// Exact GED by enumerating every partial injective node mapping.
pub fn ged_exact(g1: &CircuitGraph, g2: &CircuitGraph) -> Result<u64> {
    let largest = g1.node_count().max(g2.node_count());
    if largest > EXACT_LIMIT {
        return Err(Error::GraphTooLarge(largest));
    }
    let pair = Pair::new(g1, g2);
    let mut image = vec![None; pair.n1];
    let mut used = vec![false; pair.n2];
    let mut done = Vec::with_capacity(pair.n1);
    let mut best = u64::MAX;
    enumerate(&pair, 0, 0, &mut image, &mut used, &mut done, &mut best);
    Ok(best)
}

fn enumerate(
    pair: &Pair,
    u: usize,
    cost: u64,
    image: &mut [Option<usize>],
    used: &mut [bool],
    done: &mut Vec<usize>,
    best: &mut u64,
) {
    if u == pair.n1 {
        *best = (*best).min(cost + pair.completion_cost(used));
        return;
    }
    let targets = (0..pair.n2).map(Some).chain(std::iter::once(None));
    for t in targets {
        if let Some(v) = t {
            if used[v] {
                continue;
            }
        }
        let c = pair.step_cost(u, t, done, image);
        image[u] = t;
        if let Some(v) = t {
            used[v] = true;
        }
        done.push(u);
        enumerate(pair, u + 1, cost + c, image, used, done, best);
        done.pop();
        if let Some(v) = t {
            used[v] = false;
        }
        image[u] = None;
    }
}

struct Search<'a> {
    pair: Pair<'a>,
    order: Vec<usize>,
    image: Vec<Option<usize>>,
    used: Vec<bool>,
    done: Vec<usize>,
    best: Option<u64>,
    deadline: Option<Instant>,
    timed_out: bool,
    expansions: u64,
}

impl Search<'_> {
    /// Admissible bound on the cost of completing the current partial map.
    fn lower_bound(&self, depth: usize) -> u64 {
        let pending = &self.order[depth..];
        let mut remaining: Vec<NodeLabel> = pending.iter().map(|&u| self.pair.l1[u]).collect();
        let free: Vec<NodeLabel> = (0..self.pair.n2)
            .filter(|&v| !self.used[v])
            .map(|v| self.pair.l2[v])
            .collect();
        let mut matched = 0u64;
        for l in &free {
            if let Some(i) = remaining.iter().position(|r| r == l) {
                remaining.swap_remove(i);
                matched += 1;
            }
        }
        let node_lb = (pending.len().max(free.len()) as u64) - matched;

        let n1 = self.pair.n1;
        let mut open1 = vec![false; n1];
        for &u in pending {
            open1[u] = true;
        }
        let mut e1 = 0u64;
        for a in 0..n1 {
            for b in a..n1 {
                if open1[a] || open1[b] {
                    e1 += self.pair.m1(a, b);
                }
            }
        }
        let mut e2 = 0u64;
        for a in 0..self.pair.n2 {
            for b in a..self.pair.n2 {
                if !self.used[a] || !self.used[b] {
                    e2 += self.pair.m2(a, b);
                }
            }
        }
        node_lb + e1.abs_diff(e2)
    }

    fn out_of_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        // The first complete path is always finished so there is an answer.
        if self.best.is_none() {
            return false;
        }
        if let Some(d) = self.deadline {
            if Instant::now() >= d {
                self.timed_out = true;
            }
        }
        self.timed_out
    }

    fn dfs(&mut self, depth: usize, cost: u64) {
        self.expansions += 1;
        if self.out_of_time() {
            return;
        }
        if depth == self.order.len() {
            let total = cost + self.pair.completion_cost(&self.used);
            if self.best.is_none_or(|b| total < b) {
                self.best = Some(total);
            }
            return;
        }
        let u = self.order[depth];
        let mut children: Vec<(u64, u64, Option<usize>)> = Vec::new();
        let targets: Vec<Option<usize>> = (0..self.pair.n2)
            .filter(|&v| !self.used[v])
            .map(Some)
            .chain(std::iter::once(None))
            .collect();
        for t in targets {
            let step = self.pair.step_cost(u, t, &self.done, &self.image);
            self.apply(u, t);
            let h = self.lower_bound(depth + 1);
            self.undo(u, t);
            children.push((cost + step + h, cost + step, t));
        }
        // Stable sort keeps g2 index order among ties, deletion last.
        children.sort_by_key(|c| c.0);
        for (f, g, t) in children {
            if self.best.is_some_and(|b| f >= b) {
                break;
            }
            self.apply(u, t);
            self.dfs(depth + 1, g);
            self.undo(u, t);
            if self.timed_out {
                return;
            }
        }
    }

    fn apply(&mut self, u: usize, t: Option<usize>) {
        self.image[u] = t;
        if let Some(v) = t {
            self.used[v] = true;
        }
        self.done.push(u);
    }

    fn undo(&mut self, u: usize, t: Option<usize>) {
        self.done.pop();
        if let Some(v) = t {
            self.used[v] = false;
        }
        self.image[u] = None;
    }
}

/// Depth-first branch and bound over node edit paths.
///
/// The search stops at `timeout_seconds` (wall clock, checked at every node
/// expansion) and returns the best cost found so far. The first root-to-leaf
/// dive always completes, so even a zero timeout yields an upper bound.
pub fn ged_anytime(g1: &CircuitGraph, g2: &CircuitGraph, timeout_seconds: f64) -> GedResult {
    let deadline = (timeout_seconds.is_finite() && timeout_seconds < 1e9)
        .then(|| Instant::now() + Duration::from_secs_f64(timeout_seconds.max(0.0)));
    let pair = Pair::new(g1, g2);
    // High-degree nodes first tighten the edge bound early.
    let degree: Vec<u64> = (0..pair.n1)
        .map(|u| (0..pair.n1).map(|w| pair.m1(u, w)).sum())
        .collect();
    let mut order: Vec<usize> = (0..pair.n1).collect();
    order.sort_by_key(|&u| std::cmp::Reverse(degree[u]));

    let mut s = Search {
        image: vec![None; pair.n1],
        used: vec![false; pair.n2],
        done: Vec::with_capacity(pair.n1),
        pair,
        order,
        best: None,
        deadline,
        timed_out: false,
        expansions: 0,
    };
    s.dfs(0, 0);
    let ged = s.best.expect("first dive completes");
    log::trace!("ged_anytime: {} expansions, timed_out={}", s.expansions, s.timed_out);
    GedResult {
        ged,
        optimal: !s.timed_out,
        score: normalized_score(ged, g1, g2),
    }
}

/// Lower bound on GED from label multisets and edge counts alone.
pub fn ged_lower_bound(g1: &CircuitGraph, g2: &CircuitGraph) -> u64 {
    let s = Search {
        image: vec![None; g1.node_count()],
        used: vec![false; g2.node_count()],
        done: Vec::new(),
        pair: Pair::new(g1, g2),
        order: (0..g1.node_count()).collect(),
        best: None,
        deadline: None,
        timed_out: false,
        expansions: 0,
    };
    s.lower_bound(0)
}

pub fn ged_score(g_gen: &CircuitGraph, g_ref: &CircuitGraph, timeout_seconds: f64) -> GedResult {
    ged_anytime(g_gen, g_ref, timeout_seconds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use NodeLabel::{Component as C, Net};

    fn graph(nodes: &[NodeLabel], edges: &[(usize, usize)]) -> CircuitGraph {
        CircuitGraph {
            nodes: nodes.to_vec(),
            edges: edges.to_vec(),
        }
    }

    /// 2 components, 2 nets, 4 edges.
    fn four_by_four() -> CircuitGraph {
        graph(&[C('R'), C('C'), Net, Net], &[(0, 2), (0, 3), (1, 2), (1, 3)])
    }

    #[test]
    fn identical_graphs_cost_zero() {
        let g = four_by_four();
        assert_eq!(ged_exact(&g, &g).unwrap(), 0);
        let r = ged_anytime(&g, &g, 10.0);
        assert_eq!((r.ged, r.optimal, r.score), (0, true, 1.0));
    }

    #[test]
    fn single_missing_edge() {
        let full = four_by_four();
        let mut less = full.clone();
        less.edges.pop();
        assert_eq!(ged_exact(&full, &less).unwrap(), 1);
        let r = ged_score(&less, &full, 10.0);
        assert_eq!(r.ged, 1);
        assert_eq!(r.score, 0.875);
    }

    #[test]
    fn empty_generation_scores_zero() {
        let r = ged_score(&CircuitGraph::default(), &four_by_four(), 10.0);
        assert_eq!((r.ged, r.score), (8, 0.0));
        let e = ged_score(&CircuitGraph::default(), &CircuitGraph::default(), 1.0);
        assert_eq!((e.ged, e.score), (0, 1.0));
    }

    #[test]
    fn path_label_substitution() {
        let a = graph(&[C('R'), Net, C('C')], &[(0, 1), (2, 1)]);
        let b = graph(&[C('R'), Net, C('R')], &[(0, 1), (2, 1)]);
        assert_eq!(ged_exact(&a, &b).unwrap(), 1);
        assert_eq!(ged_anytime(&a, &b, 10.0).ged, 1);
    }

    #[test]
    fn parallel_edges_count_individually() {
        let a = graph(&[C('R'), Net], &[(0, 1), (0, 1)]);
        let b = graph(&[C('R'), Net], &[(0, 1)]);
        assert_eq!(ged_exact(&a, &b).unwrap(), 1);
    }

    #[test]
    fn exact_rejects_large_graphs() {
        let big = graph(&[Net; 9], &[]);
        assert!(matches!(ged_exact(&big, &big), Err(Error::GraphTooLarge(9))));
    }

    #[test]
    fn zero_timeout_still_returns_upper_bound() {
        let a = four_by_four();
        let b = graph(&[C('R'), C('R'), Net, Net, Net], &[(0, 2), (0, 3), (1, 3), (1, 4)]);
        let exact = ged_exact(&a, &b).unwrap();
        let r = ged_anytime(&a, &b, 0.0);
        assert!(r.ged >= exact);
        assert!(ged_lower_bound(&a, &b) <= exact);
    }
}
