//! `.asc` to netlist compilation.
//!
//! Connectivity rules: points that coincide are joined; a point (wire end,
//! pin or flag) lying anywhere on a wire joins that wire; two wires whose
//! interiors merely cross stay separate.

mod pinmap;

use std::collections::{BTreeMap, HashMap, HashSet};

pub use pinmap::{PinMap, PinMapRegistry};

use crate::asc::{AscDocument, Orientation, ParseMode, Point, SymbolInstance};
use crate::error::{Error, Result};
use crate::netlist::{ElementCard, Netlist};

/// Attribute keys whose values the netlister copies into the card tail.
const TAIL_KEYS: [&str; 5] = ["Value", "Value2", "SpiceModel", "SpiceLine", "SpiceLine2"];

pub fn orientation_transform(p: Point, o: Orientation) -> Point {
    o.apply(p)
}

pub fn pin_positions(s: &SymbolInstance, table: &PinMapRegistry) -> Result<Vec<Point>> {
    let map = table
        .get(&s.kind)
        .ok_or_else(|| Error::UnknownSymbol(s.kind.clone()))?;
    Ok(map.placed_pins(s.at, s.orientation))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetAssignment {
    pub point_to_net: BTreeMap<Point, usize>,
    pub net_names: Vec<String>,
}

impl NetAssignment {
    pub fn net_of(&self, p: Point) -> Option<&str> {
        self.point_to_net
            .get(&p)
            .map(|&id| self.net_names[id].as_str())
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller index as root keeps results independent of call order.
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Groups wire endpoints, flags and `pins` into nets and names them.
///
/// Flag names win (ground flag gives `"0"`); remaining nets are numbered
/// `N001`, `N002`, ... in first-touch order over wire endpoints in file order,
/// then `pins` in the order given.
pub fn trace_nets(doc: &AscDocument, pins: &[Point]) -> Result<NetAssignment> {
    let mut index: HashMap<Point, usize> = HashMap::new();
    let mut points: Vec<Point> = Vec::new();
    let mut intern = |p: Point| {
        *index.entry(p).or_insert_with(|| {
            points.push(p);
            points.len() - 1
        })
    };
    let wire_ids: Vec<(usize, usize)> = doc
        .wires
        .iter()
        .map(|w| (intern(w.start), intern(w.end)))
        .collect();
    let pin_ids: Vec<usize> = pins.iter().map(|&p| intern(p)).collect();
    let flag_ids: Vec<usize> = doc.flags.iter().map(|f| intern(f.at)).collect();

    let mut dsu = DisjointSet::new(points.len());
    for &(a, b) in &wire_ids {
        dsu.union(a, b);
    }
    for (pi, &p) in points.iter().enumerate() {
        for (w, &(a, _)) in doc.wires.iter().zip(&wire_ids) {
            if w.contains(p) {
                dsu.union(pi, a);
            }
        }
    }

    // Per net: distinct non-ground labels and whether a ground flag touches it.
    let mut flagged: BTreeMap<usize, (Vec<&str>, bool)> = BTreeMap::new();
    for (flag, &fid) in doc.flags.iter().zip(&flag_ids) {
        let entry = flagged.entry(dsu.find(fid)).or_default();
        if flag.is_ground() {
            entry.1 = true;
        } else if !entry.0.contains(&flag.name.as_str()) {
            entry.0.push(&flag.name);
        }
    }
    let mut labels: HashMap<usize, String> = HashMap::new();
    for (root, (names, ground)) in flagged {
        if names.len() > 1 {
            return Err(Error::FlagConflict(names[0].to_string(), names[1].to_string()));
        }
        let label = if ground { "0" } else { names[0] };
        labels.insert(root, label.to_string());
    }

    let mut net_of_root: HashMap<usize, usize> = HashMap::new();
    let mut net_names: Vec<String> = Vec::new();
    let mut counter = 0usize;
    let order = wire_ids
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .chain(pin_ids.iter().copied())
        .chain(flag_ids.iter().copied());
    for id in order {
        let root = dsu.find(id);
        net_of_root.entry(root).or_insert_with(|| {
            let name = labels.get(&root).cloned().unwrap_or_else(|| {
                counter += 1;
                format!("N{counter:03}")
            });
            net_names.push(name);
            net_names.len() - 1
        });
    }

    let point_to_net = points
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, net_of_root[&dsu.find(i)]))
        .collect();
    Ok(NetAssignment {
        point_to_net,
        net_names,
    })
}

/// Compiles a schematic into a netlist, one card per symbol in file order.
///
/// Strict mode rejects symbols missing from `table`; lenient mode skips them.
pub fn compile_asc(doc: &AscDocument, table: &PinMapRegistry, mode: ParseMode) -> Result<Netlist> {
    if doc.symbols.is_empty() {
        return Err(Error::MissingComponents);
    }
    let mut placed: Vec<(&SymbolInstance, &PinMap, Vec<Point>)> = Vec::new();
    for s in &doc.symbols {
        match table.get(&s.kind) {
            Some(map) => placed.push((s, map, map.placed_pins(s.at, s.orientation))),
            None if mode == ParseMode::Lenient => {
                log::warn!("skipping unknown symbol `{}` at {}", s.kind, s.at);
            }
            None => return Err(Error::UnknownSymbol(s.kind.clone())),
        }
    }
    if placed.is_empty() {
        return Err(Error::MissingComponents);
    }

    let all_pins: Vec<Point> = placed.iter().flat_map(|(_, _, p)| p.iter().copied()).collect();
    let nets = trace_nets(doc, &all_pins)?;

    let mut names = HashSet::new();
    let mut out = Netlist::default();
    for (s, map, pins) in placed {
        let inst = s.inst_name().ok_or_else(|| Error::MissingInstName {
            kind: s.kind.clone(),
            x: s.at.x,
            y: s.at.y,
        })?;
        let name = element_name(inst, map.letter);
        if !names.insert(name.clone()) {
            return Err(Error::DuplicateElement(name));
        }
        let tail = s
            .attrs
            .iter()
            .filter(|(k, _)| TAIL_KEYS.contains(&k.as_str()))
            .flat_map(|(_, v)| v.split_whitespace().map(str::to_string))
            .collect();
        out.elements.push(ElementCard {
            name,
            nets: pins
                .iter()
                .map(|&p| nets.net_of(p).expect("every pin is interned").to_string())
                .collect(),
            tail,
        });
    }
    Ok(out)
}

/// Prefixes the element letter when the instance name does not start with it.
fn element_name(inst: &str, letter: char) -> String {
    match inst.chars().next() {
        Some(c) if c.eq_ignore_ascii_case(&letter) => inst.to_string(),
        _ => format!("{}{inst}", letter.to_ascii_uppercase()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asc::{parse_asc, Flag, Wire};

    fn doc_with_wires(wires: &[Wire]) -> AscDocument {
        AscDocument {
            wires: wires.to_vec(),
            ..Default::default()
        }
    }

    #[test]
    fn orientation_examples() {
        let p = Point::new(16, 32);
        assert_eq!(orientation_transform(p, Orientation::R0), p);
        assert_eq!(orientation_transform(p, Orientation::M0), Point::new(-16, 32));
        assert_eq!(orientation_transform(p, Orientation::R90), Point::new(-32, 16));
        assert_eq!(orientation_transform(p, Orientation::R180), Point::new(-16, -32));
        assert_eq!(orientation_transform(p, Orientation::R270), Point::new(32, -16));
    }

    #[test]
    fn resistor_pin_positions() {
        let reg = PinMapRegistry::builtin();
        let at = |x, y, o| pin_positions(&SymbolInstance::new("res", x, y, o), &reg).unwrap();
        assert_eq!(at(0, 0, Orientation::R0), vec![Point::new(16, 16), Point::new(16, 96)]);
        assert_eq!(at(100, 0, Orientation::R0), vec![Point::new(116, 16), Point::new(116, 96)]);
        assert_eq!(at(0, 0, Orientation::R90), vec![Point::new(-16, 16), Point::new(-96, 16)]);
        assert!(matches!(
            pin_positions(&SymbolInstance::new("opamp2", 0, 0, Orientation::R0), &reg),
            Err(Error::UnknownSymbol(_))
        ));
    }

    #[test]
    fn shared_endpoint_joins() {
        let doc = doc_with_wires(&[Wire::new(0, 0, 16, 0), Wire::new(16, 0, 16, 32)]);
        let nets = trace_nets(&doc, &[]).unwrap();
        assert_eq!(nets.net_names.len(), 1);
    }

    #[test]
    fn t_junction_joins() {
        let doc = doc_with_wires(&[Wire::new(0, 0, 64, 0), Wire::new(32, 0, 32, 64)]);
        let nets = trace_nets(&doc, &[]).unwrap();
        assert_eq!(nets.net_names, vec!["N001"]);
    }

    #[test]
    fn interior_crossing_does_not_join() {
        let doc = doc_with_wires(&[Wire::new(0, 0, 64, 0), Wire::new(32, -32, 32, 32)]);
        let nets = trace_nets(&doc, &[]).unwrap();
        assert_eq!(nets.net_names, vec!["N001", "N002"]);
    }

    #[test]
    fn pin_on_wire_interior_joins() {
        let doc = doc_with_wires(&[Wire::new(0, 0, 64, 0)]);
        let nets = trace_nets(&doc, &[Point::new(32, 0), Point::new(32, 8)]).unwrap();
        assert_eq!(nets.net_of(Point::new(32, 0)), Some("N001"));
        assert_eq!(nets.net_of(Point::new(32, 8)), Some("N002"));
    }

    #[test]
    fn flag_names_and_conflicts() {
        let mut doc = doc_with_wires(&[Wire::new(0, 0, 64, 0)]);
        doc.flags.push(Flag { at: Point::new(64, 0), name: "out".into() });
        let nets = trace_nets(&doc, &[]).unwrap();
        assert_eq!(nets.net_names, vec!["out"]);

        doc.flags.push(Flag { at: Point::new(0, 0), name: "0".into() });
        let nets = trace_nets(&doc, &[]).unwrap();
        assert_eq!(nets.net_names, vec!["0"]);

        doc.flags.push(Flag { at: Point::new(32, 0), name: "in".into() });
        assert!(matches!(trace_nets(&doc, &[]), Err(Error::FlagConflict(_, _))));
    }

    #[test]
    fn resistor_between_two_grounds() {
        let text = "Version 4\nSHEET 1 0 0\nFLAG 16 16 0\nFLAG 16 96 0\nSYMBOL res 0 0 R0\nSYMATTR InstName R1\nSYMATTR Value 1k\n";
        let doc = parse_asc(text, ParseMode::Strict).unwrap();
        let n = compile_asc(&doc, &PinMapRegistry::builtin(), ParseMode::Strict).unwrap();
        assert_eq!(n.elements, vec![ElementCard::new("R1", ["0", "0"], ["1k"])]);
    }

    #[test]
    fn compile_errors() {
        let reg = PinMapRegistry::builtin();
        let wires_only = parse_asc("WIRE 0 0 16 0\n", ParseMode::Lenient).unwrap();
        assert!(matches!(
            compile_asc(&wires_only, &reg, ParseMode::Strict),
            Err(Error::MissingComponents)
        ));
        let unnamed = parse_asc("SYMBOL res 0 0 R0\nSYMATTR Value 1k\n", ParseMode::Lenient).unwrap();
        assert!(matches!(
            compile_asc(&unnamed, &reg, ParseMode::Strict),
            Err(Error::MissingInstName { .. })
        ));
        let unknown = parse_asc(
            "SYMBOL opamp2 0 0 R0\nSYMATTR InstName U1\nSYMBOL res 0 0 R0\nSYMATTR InstName R1\n",
            ParseMode::Lenient,
        )
        .unwrap();
        assert!(matches!(
            compile_asc(&unknown, &reg, ParseMode::Strict),
            Err(Error::UnknownSymbol(_))
        ));
        let lenient = compile_asc(&unknown, &reg, ParseMode::Lenient).unwrap();
        assert_eq!(lenient.elements.len(), 1);
    }

    #[test]
    fn dangling_pins_get_their_own_nets() {
        let doc = parse_asc("SYMBOL cap 0 0 R0\nSYMATTR InstName C1\n", ParseMode::Lenient).unwrap();
        let n = compile_asc(&doc, &PinMapRegistry::builtin(), ParseMode::Strict).unwrap();
        assert_eq!(n.elements[0].nets, vec!["N001", "N002"]);
    }

    #[test]
    fn instance_names_get_letter_prefix() {
        assert_eq!(element_name("2N2222", 'Q'), "Q2N2222");
        assert_eq!(element_name("q1", 'Q'), "q1");
    }
}
