//! SPICE netlists as written by LTSpice: element cards plus dot-commands.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ElementCard {
    pub name: String,
    pub nets: Vec<String>,
    pub tail: Vec<String>,
}

impl ElementCard {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        nets: impl IntoIterator<Item = S>,
        tail: impl IntoIterator<Item = S>,
    ) -> Self {
        ElementCard {
            name: name.into(),
            nets: nets.into_iter().map(Into::into).collect(),
            tail: tail.into_iter().map(Into::into).collect(),
        }
    }

    /// Upper-cased first character of the name.
    pub fn letter(&self) -> char {
        self.name
            .chars()
            .next()
            .map(|c| c.to_ascii_uppercase())
            .unwrap_or('?')
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Command {
    pub text: String,
}

impl Command {
    pub fn keyword(&self) -> String {
        self.text
            .split_whitespace()
            .next()
            .unwrap_or("")
            .to_ascii_lowercase()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Netlist {
    pub elements: Vec<ElementCard>,
    pub commands: Vec<Command>,
}

impl Netlist {
    /// Distinct net names in first-use order.
    pub fn nets(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.elements
            .iter()
            .flat_map(|e| e.nets.iter())
            .filter(|n| seen.insert(n.as_str()))
            .map(String::as_str)
            .collect()
    }

    pub fn canonical_hash(&self) -> String {
        hex::encode(Sha256::digest(serialize_netlist(self).as_bytes()))
    }
}

/// Pin count for the built-in element letters.
pub fn element_arity(letter: char) -> Option<usize> {
    match letter.to_ascii_uppercase() {
        'R' | 'C' | 'L' | 'V' | 'I' | 'D' => Some(2),
        'Q' | 'M' | 'J' => Some(3),
        'T' => Some(4),
        _ => None,
    }
}

fn value_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?[a-zA-Z]*$").expect("static regex")
    })
}

/// Tokens that end the net list of a card with unknown arity: parameter
/// assignments and numbers that carry a decimal point, exponent or unit
/// suffix. Bare integers stay nets since SPICE allows numeric node names.
fn looks_like_value(tok: &str) -> bool {
    if tok.contains('=') {
        return true;
    }
    value_pattern().is_match(tok) && tok.parse::<u64>().is_err()
}

fn looks_like_net(tok: &str) -> bool {
    !looks_like_value(tok) && !tok.contains('(')
}

fn split_card(tokens: &[&str]) -> (usize, &'static str) {
    let name = tokens[0];
    let rest = &tokens[1..];
    let letter = name.chars().next().unwrap_or('?').to_ascii_uppercase();
    match letter {
        // M d g s [b] model ...: a fourth net only when a model token follows it.
        'M' => {
            if rest.len() >= 5 && looks_like_net(rest[3]) && looks_like_net(rest[4]) {
                (4, "mos-4")
            } else {
                (3.min(rest.len()), "mos-3")
            }
        }
        // X n1 .. nk subckt [params]: the last non-parameter token names the subcircuit.
        'X' => {
            let params = rest.iter().rev().take_while(|t| t.contains('=')).count();
            let positional = rest.len() - params;
            (positional.saturating_sub(1), "subckt")
        }
        _ => match element_arity(letter) {
            Some(n) => (n.min(rest.len()), "table"),
            None => (
                rest.iter().take_while(|t| !looks_like_value(t)).count(),
                "heuristic",
            ),
        },
    }
}

pub fn parse_netlist(text: &str) -> Result<Netlist> {
    let mut out = Netlist::default();
    let mut names = HashSet::new();
    // Continuation lines ("+ ...") extend the previous element's tail.
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        if trimmed.starts_with('.') {
            out.commands.push(Command {
                text: trimmed.split_whitespace().collect::<Vec<_>>().join(" "),
            });
            continue;
        }
        if let Some(cont) = trimmed.strip_prefix('+') {
            let Some(last) = out.elements.last_mut() else {
                return Err(Error::NetlistSyntax {
                    line,
                    msg: "continuation line without an element".into(),
                });
            };
            last.tail.extend(cont.split_whitespace().map(str::to_string));
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() < 2 {
            return Err(Error::NetlistSyntax {
                line,
                msg: format!("element `{}` has no connections", tokens[0]),
            });
        }
        let (n_nets, rule) = split_card(&tokens);
        log::trace!("line {line}: {} split by {rule} rule into {n_nets} nets", tokens[0]);
        let name = tokens[0].to_string();
        if !names.insert(name.clone()) {
            return Err(Error::DuplicateElement(name));
        }
        out.elements.push(ElementCard {
            name,
            nets: tokens[1..=n_nets].iter().map(|s| s.to_string()).collect(),
            tail: tokens[1 + n_nets..].iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(out)
}

pub fn serialize_netlist(n: &Netlist) -> String {
    let mut out = String::new();
    for e in &n.elements {
        out.push_str(&e.name);
        for t in e.nets.iter().chain(&e.tail) {
            out.push(' ');
            out.push_str(t);
        }
        out.push('\n');
    }
    for c in &n.commands {
        out.push_str(&c.text);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BAND_PASS: &str = "V1 N001 0 V\nC1 N002 N001 C\nR1 N002 Vout R\nR2 Vout 0 R\nC2 Vout 0 C\n";

    #[test]
    fn band_pass_netlist() {
        let n = parse_netlist(BAND_PASS).unwrap();
        assert_eq!(n.elements.len(), 5);
        let mut nets = n.nets();
        nets.sort();
        assert_eq!(nets, vec!["0", "N001", "N002", "Vout"]);
        assert_eq!(serialize_netlist(&n), BAND_PASS);
    }

    #[test]
    fn transmission_line_card() {
        let n = parse_netlist("T1 N002 0 N003 0 Td=50n Z0=50").unwrap();
        let t = &n.elements[0];
        assert_eq!(t.letter(), 'T');
        assert_eq!(t.nets, vec!["N002", "0", "N003", "0"]);
        assert_eq!(t.tail, vec!["Td=50n", "Z0=50"]);
    }

    #[test]
    fn empty_text_is_empty_netlist() {
        let n = parse_netlist("").unwrap();
        assert!(n.elements.is_empty() && n.commands.is_empty());
        assert_eq!(serialize_netlist(&n), "");
    }

    #[test]
    fn element_without_tail() {
        let n = parse_netlist("R1 A B").unwrap();
        assert!(n.elements[0].tail.is_empty());
        assert_eq!(serialize_netlist(&n), "R1 A B\n");
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_netlist("R1 A B 1k\nR1 B C 2k"),
            Err(Error::DuplicateElement(_))
        ));
        assert!(matches!(
            parse_netlist("R1"),
            Err(Error::NetlistSyntax { line: 1, .. })
        ));
    }

    #[test]
    fn arity_table() {
        assert_eq!(element_arity('R'), Some(2));
        assert_eq!(element_arity('r'), Some(2));
        assert_eq!(element_arity('T'), Some(4));
        assert_eq!(element_arity('X'), None);
    }

    #[test]
    fn comments_and_commands() {
        let n = parse_netlist("* title\nR1 a b 1k\n.backanno\n.end\n").unwrap();
        assert_eq!(n.elements.len(), 1);
        assert_eq!(n.commands.len(), 2);
        assert_eq!(n.commands[0].keyword(), ".backanno");
    }

    #[test]
    fn mos_three_and_four_terminal() {
        let n = parse_netlist("M1 d g s NMOS\nM2 d g s b PMOS l=1u\nM3 d g s NMOS l=1u w=2u").unwrap();
        assert_eq!(n.elements[0].nets.len(), 3);
        assert_eq!(n.elements[1].nets, vec!["d", "g", "s", "b"]);
        assert_eq!(n.elements[1].tail, vec!["PMOS", "l=1u"]);
        assert_eq!(n.elements[2].nets.len(), 3);
    }

    #[test]
    fn subcircuit_and_unknown_letters() {
        let n = parse_netlist("XU1 in out vcc 0 opamp gain=2\nU1 a b 2.5 k=1\nE1 a 0 b 0 10").unwrap();
        assert_eq!(n.elements[0].nets, vec!["in", "out", "vcc", "0"]);
        assert_eq!(n.elements[0].tail, vec!["opamp", "gain=2"]);
        assert_eq!(n.elements[1].nets, vec!["a", "b"]);
        assert_eq!(n.elements[2].nets, vec!["a", "0", "b", "0", "10"]);
    }

    #[test]
    fn continuation_lines_extend_tail() {
        let n = parse_netlist("V1 a 0 PULSE(0 1\n+ 0 1n)").unwrap();
        assert_eq!(n.elements[0].tail, vec!["PULSE(0", "1", "0", "1n)"]);
    }
}
