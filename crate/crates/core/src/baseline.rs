//! Rule-based netlist to schematic layout.
//!
//! Components sit in one row at a fixed pitch, every net gets its own
//! horizontal lane below the row, and each pin is routed out sideways to a
//! private column and then straight down to its lane. Every net carries a
//! flag with its name, so compiling the result reproduces the input cards.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::asc::{AscDocument, Flag, Orientation, Point, SymbolInstance, Wire};
use crate::error::{Error, Result};
use crate::extract::PinMapRegistry;
use crate::netlist::{ElementCard, Netlist};
use crate::preprocess::normalize_sheet;

pub const COMPONENT_PITCH: i64 = 192;
pub const LANE_PITCH: i64 = 64;
const COLUMN_STEP: i64 = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSlot {
    pub element: ElementCard,
    pub kind: String,
    pub at: Point,
    pub orientation: Orientation,
}

/// One pin's route: pin → corner (horizontal), corner → foot on the lane.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubRoute {
    pub net: String,
    pub pin: Point,
    pub corner: Point,
    pub foot: Point,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutPlan {
    pub component_slots: Vec<ComponentSlot>,
    /// Net name and lane y, in first-use order.
    pub net_lanes: Vec<(String, i64)>,
    pub stub_routes: Vec<StubRoute>,
}

impl LayoutPlan {
    /// Lane wire span for `net`: leftmost and rightmost foot.
    fn lane_extent(&self, net: &str) -> Option<(Point, Point)> {
        let feet = self.stub_routes.iter().filter(|s| s.net == net).map(|s| s.foot);
        let min = feet.clone().min_by_key(|p| p.x)?;
        let max = feet.max_by_key(|p| p.x)?;
        Some((min, max))
    }
}

pub fn plan_layout(n: &Netlist, table: &PinMapRegistry) -> Result<LayoutPlan> {
    if n.elements.is_empty() {
        return Err(Error::MissingComponents);
    }
    let mut slots = Vec::with_capacity(n.elements.len());
    let mut row_bottom = i64::MIN;
    for (i, e) in n.elements.iter().enumerate() {
        let map = table
            .for_element(e.letter(), e.nets.len())
            .ok_or_else(|| Error::UnsupportedElement(e.name.clone()))?;
        let at = Point::new(COMPONENT_PITCH * i as i64, 0);
        let glyph = map.placed_bbox(at, Orientation::R0);
        let pins = map.placed_pins(at, Orientation::R0);
        row_bottom = row_bottom.max(glyph.max.y).max(pins.iter().map(|p| p.y).max().unwrap_or(0));
        slots.push((
            ComponentSlot {
                element: e.clone(),
                kind: map.kind.clone(),
                at,
                orientation: Orientation::R0,
            },
            pins,
            glyph,
        ));
    }

    let mut net_lanes: Vec<(String, i64)> = Vec::new();
    let mut lane_of: HashMap<&str, i64> = HashMap::new();
    for net in n.nets() {
        let y = row_bottom + LANE_PITCH * (net_lanes.len() as i64 + 1);
        lane_of.insert(net, y);
        net_lanes.push((net.to_string(), y));
    }

    let mut stub_routes = Vec::new();
    for (slot, pins, glyph) in &slots {
        let min_pin = pins.iter().map(|p| p.x).min().unwrap_or(slot.at.x);
        let max_pin = pins.iter().map(|p| p.x).max().unwrap_or(slot.at.x);
        let center2 = min_pin + max_pin;
        let left_edge = glyph.min.x.min(min_pin);
        let right_edge = glyph.max.x.max(max_pin);

        // Lower pins take the nearer columns so no vertical crosses a
        // sibling's horizontal run.
        let mut order: Vec<usize> = (0..pins.len()).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(pins[i].y), i));
        let (mut left, mut right) = (0i64, 0i64);
        let mut routes: Vec<(usize, StubRoute)> = Vec::new();
        for i in order {
            let pin = pins[i];
            let col = if 2 * pin.x <= center2 {
                left += 1;
                left_edge - COLUMN_STEP * left
            } else {
                right += 1;
                right_edge + COLUMN_STEP * right
            };
            let net = &slot.element.nets[i];
            let lane = lane_of[net.as_str()];
            routes.push((
                i,
                StubRoute {
                    net: net.clone(),
                    pin,
                    corner: Point::new(col, pin.y),
                    foot: Point::new(col, lane),
                },
            ));
        }
        routes.sort_by_key(|(i, _)| *i);
        stub_routes.extend(routes.into_iter().map(|(_, r)| r));
    }

    let plan = LayoutPlan {
        component_slots: slots.into_iter().map(|(s, _, _)| s).collect(),
        net_lanes,
        stub_routes,
    };
    check_isolation(&plan)?;
    Ok(plan)
}

fn plan_wires(plan: &LayoutPlan) -> Vec<(Wire, &str)> {
    let mut wires = Vec::new();
    for s in &plan.stub_routes {
        wires.push((Wire { start: s.pin, end: s.corner }, s.net.as_str()));
        wires.push((Wire { start: s.corner, end: s.foot }, s.net.as_str()));
    }
    for (net, _) in &plan.net_lanes {
        if let Some((a, b)) = plan.lane_extent(net) {
            if a != b {
                wires.push((Wire { start: a, end: b }, net.as_str()));
            }
        }
    }
    wires
}

/// Rejects plans where any wire touches a point belonging to another net.
fn check_isolation(plan: &LayoutPlan) -> Result<()> {
    let wires = plan_wires(plan);
    let mut points: Vec<(Point, &str)> = Vec::new();
    for (w, net) in &wires {
        points.push((w.start, net));
        points.push((w.end, net));
    }
    for s in &plan.stub_routes {
        points.push((s.pin, &s.net));
    }
    for (w, net) in &wires {
        if let Some((p, other)) = points.iter().find(|(p, other)| other != net && w.contains(*p)) {
            return Err(Error::Layout(format!(
                "wire of net `{net}` touches {p} of net `{other}`"
            )));
        }
    }
    Ok(())
}

pub fn emit_asc(plan: &LayoutPlan) -> Result<AscDocument> {
    let mut doc = AscDocument {
        wires: plan_wires(plan).into_iter().map(|(w, _)| w).collect(),
        ..Default::default()
    };
    for (net, _) in &plan.net_lanes {
        if let Some((left, _)) = plan.lane_extent(net) {
            doc.flags.push(Flag {
                at: left,
                name: net.clone(),
            });
        }
    }
    for slot in &plan.component_slots {
        let mut s = SymbolInstance::new(slot.kind.clone(), slot.at.x, slot.at.y, slot.orientation)
            .with_attr("InstName", slot.element.name.clone());
        if !slot.element.tail.is_empty() {
            s = s.with_attr("Value", slot.element.tail.join(" "));
        }
        doc.symbols.push(s);
    }
    normalize_sheet(&doc)
}

/// `plan_layout` followed by `emit_asc`.
pub fn baseline_asc(n: &Netlist, table: &PinMapRegistry) -> Result<AscDocument> {
    emit_asc(&plan_layout(n, table)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asc::ParseMode;
    use crate::extract::compile_asc;
    use crate::netlist::parse_netlist;
    use crate::preprocess::filter_document;

    const BAND_PASS: &str = "V1 N001 0 V\nC1 N002 N001 C\nR1 N002 Vout R\nR2 Vout 0 R\nC2 Vout 0 C\n";

    #[test]
    fn band_pass_plan_counts() {
        let n = parse_netlist(BAND_PASS).unwrap();
        let plan = plan_layout(&n, &PinMapRegistry::builtin()).unwrap();
        assert_eq!(plan.component_slots.len(), 5);
        assert_eq!(plan.net_lanes.len(), 4);
        assert_eq!(plan.stub_routes.len(), 10);
        assert_eq!(plan.component_slots[1].at, Point::new(COMPONENT_PITCH, 0));
    }

    #[test]
    fn single_resistor() {
        let n = parse_netlist("R1 A B R").unwrap();
        let reg = PinMapRegistry::builtin();
        let plan = plan_layout(&n, &reg).unwrap();
        assert_eq!((plan.component_slots.len(), plan.net_lanes.len()), (1, 2));
        let doc = emit_asc(&plan).unwrap();
        assert!(filter_document(&doc).keep);
        assert_eq!(compile_asc(&doc, &reg, ParseMode::Strict).unwrap(), n);
    }

    #[test]
    fn unsupported_letter() {
        let n = parse_netlist("U1 a b c").unwrap();
        assert!(matches!(
            plan_layout(&n, &PinMapRegistry::builtin()),
            Err(Error::UnsupportedElement(name)) if name == "U1"
        ));
        assert!(matches!(
            plan_layout(&Netlist::default(), &PinMapRegistry::builtin()),
            Err(Error::MissingComponents)
        ));
    }

    #[test]
    fn compiles_back_to_the_same_cards() {
        let reg = PinMapRegistry::builtin();
        for text in [
            BAND_PASS,
            "T1 N002 0 N003 0 Td=50n Z0=50\nV1 N001 0 V\nRS N002 N001 R\nRL N003 0 R\n",
            "M1 out in 0 0 NMOS\nM2 out in vdd vdd PMOS\nV1 vdd 0 5\nV2 in 0 PULSE(0 5 0 1n 1n 5u 10u)\n",
            "Q1 c b e 2N2222\nR1 vcc c 1k\nR2 b 0 10k\nD1 e 0 D\nL1 vcc b 1m\nI1 vcc 0 1m\n",
            "R1 A A 1k\n",
        ] {
            let n = parse_netlist(text).unwrap();
            let doc = baseline_asc(&n, &reg).unwrap();
            assert_eq!(compile_asc(&doc, &reg, ParseMode::Strict).unwrap(), n, "{text}");
        }
    }

    #[test]
    fn output_is_deterministic() {
        let n = parse_netlist(BAND_PASS).unwrap();
        let reg = PinMapRegistry::builtin();
        assert_eq!(baseline_asc(&n, &reg).unwrap(), baseline_asc(&n, &reg).unwrap());
    }
}
