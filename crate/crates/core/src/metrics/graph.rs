use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::netlist::Netlist;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeLabel {
    /// Component node labelled by its upper-case element letter.
    Component(char),
    Net,
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeLabel::Component(c) => write!(f, "{c}"),
            NodeLabel::Net => f.write_str("net"),
        }
    }
}

/// Bipartite component/net incidence multigraph.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitGraph {
    pub nodes: Vec<NodeLabel>,
    /// `(component, net)` node indices, one per pin; repeats allowed.
    pub edges: Vec<(usize, usize)>,
}

impl CircuitGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn add_node(&mut self, label: NodeLabel) -> usize {
        self.nodes.push(label);
        self.nodes.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a < self.nodes.len() && b < self.nodes.len(), "edge endpoint out of range");
        self.edges.push((a, b));
    }

    /// Symmetric `n × n` edge multiplicities, row-major.
    pub fn multiplicity(&self) -> Vec<u32> {
        let n = self.nodes.len();
        let mut m = vec![0u32; n * n];
        for &(a, b) in &self.edges {
            m[a * n + b] += 1;
            if a != b {
                m[b * n + a] += 1;
            }
        }
        m
    }
}

pub fn netlist_to_graph(n: &Netlist) -> CircuitGraph {
    let mut g = CircuitGraph::default();
    let mut net_nodes: HashMap<&str, usize> = HashMap::new();
    for e in &n.elements {
        let comp = g.add_node(NodeLabel::Component(e.letter()));
        for net in &e.nets {
            let id = match net_nodes.get(net.as_str()) {
                Some(&id) => id,
                None => {
                    let id = g.add_node(NodeLabel::Net);
                    net_nodes.insert(net, id);
                    id
                }
            };
            g.add_edge(comp, id);
        }
    }
    g
}
