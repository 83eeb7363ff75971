//! Symbol pin tables.
//!
//! `.asc` files only name a symbol and its anchor; pin positions come from
//! the symbol library. The built-in table follows LTSpice's stock symbols on
//! the 16-unit grid and can be extended or overridden from a JSON file:
//!
//! ```json
//! { "symbols": [
//!     { "kind": "res", "letter": "R", "pins": [[16, 16], [16, 96]], "bbox": [0, 0, 32, 112] }
//! ] }
//! ```
//!
//! `pins` are R0 offsets from the anchor in netlist order; `bbox` is the glyph
//! extent `[x0, y0, x1, y1]` at R0.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asc::{BBox, Orientation, Point};
use crate::error::{Error, Result};
use crate::netlist::element_arity;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinMap {
    pub kind: String,
    pub letter: char,
    pub pins: Vec<(i64, i64)>,
    pub bbox: [i64; 4],
}

impl PinMap {
    fn new(kind: &str, letter: char, pins: &[(i64, i64)], bbox: [i64; 4]) -> Self {
        PinMap {
            kind: kind.to_string(),
            letter,
            pins: pins.to_vec(),
            bbox,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pins.is_empty() {
            return Err(Error::PinMap(format!("`{}` has no pins", self.kind)));
        }
        let [x0, y0, x1, y1] = self.bbox;
        if x0 > x1 || y0 > y1 {
            return Err(Error::PinMap(format!("`{}` has an inverted bbox", self.kind)));
        }
        let n = self.pins.len();
        let ok = match (self.letter.to_ascii_uppercase(), element_arity(self.letter)) {
            // Four-terminal MOS symbols carry the bulk pin.
            ('M', _) => n == 3 || n == 4,
            (_, Some(arity)) => n == arity,
            (_, None) => true,
        };
        if !ok {
            return Err(Error::PinMap(format!(
                "`{}` has {n} pins but element {} expects {:?}",
                self.kind,
                self.letter,
                element_arity(self.letter)
            )));
        }
        Ok(())
    }

    /// Glyph extent placed at `at` under `o`.
    pub fn placed_bbox(&self, at: Point, o: Orientation) -> BBox {
        let [x0, y0, x1, y1] = self.bbox;
        let corners = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)]
            .map(|(x, y)| o.apply(Point::new(x, y)).translate(at.x, at.y));
        BBox::of_points(corners).expect("four corners")
    }

    pub fn placed_pins(&self, at: Point, o: Orientation) -> Vec<Point> {
        self.pins
            .iter()
            .map(|&(x, y)| o.apply(Point::new(x, y)).translate(at.x, at.y))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PinMapRegistry {
    entries: BTreeMap<String, PinMap>,
}

#[derive(Serialize, Deserialize)]
struct PinMapFile {
    symbols: Vec<PinMap>,
}

impl Default for PinMapRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PinMapRegistry {
    pub fn builtin() -> Self {
        let two_vertical = |kind: &str, letter, pins: &[(i64, i64)], bbox| PinMap::new(kind, letter, pins, bbox);
        let entries = [
            two_vertical("res", 'R', &[(16, 16), (16, 96)], [0, 0, 32, 112]),
            two_vertical("res2", 'R', &[(16, 16), (16, 96)], [0, 0, 32, 112]),
            two_vertical("cap", 'C', &[(16, 0), (16, 64)], [0, 0, 32, 64]),
            two_vertical("polcap", 'C', &[(16, 0), (16, 64)], [0, 0, 32, 64]),
            two_vertical("ind", 'L', &[(16, 16), (16, 96)], [0, 0, 48, 112]),
            two_vertical("ind2", 'L', &[(16, 16), (16, 96)], [0, 0, 48, 112]),
            two_vertical("voltage", 'V', &[(0, 16), (0, 96)], [-40, 16, 40, 96]),
            two_vertical("current", 'I', &[(0, 0), (0, 80)], [-32, 0, 32, 80]),
            two_vertical("diode", 'D', &[(16, 0), (16, 64)], [0, 0, 32, 64]),
            two_vertical("zener", 'D', &[(16, 0), (16, 64)], [0, 0, 32, 64]),
            two_vertical("schottky", 'D', &[(16, 0), (16, 64)], [0, 0, 32, 64]),
            two_vertical("led", 'D', &[(16, 0), (16, 64)], [0, 0, 32, 64]),
            PinMap::new("npn", 'Q', &[(64, 0), (0, 48), (64, 96)], [0, 0, 64, 96]),
            PinMap::new("pnp", 'Q', &[(64, 96), (0, 48), (64, 0)], [0, 0, 64, 96]),
            PinMap::new("nmos", 'M', &[(48, 0), (0, 80), (48, 96)], [0, 0, 48, 96]),
            PinMap::new("pmos", 'M', &[(48, 96), (0, 80), (48, 0)], [0, 0, 48, 96]),
            PinMap::new("nmos4", 'M', &[(48, 0), (0, 80), (48, 96), (48, 48)], [0, 0, 64, 96]),
            PinMap::new("pmos4", 'M', &[(48, 96), (0, 80), (48, 0), (48, 48)], [0, 0, 64, 96]),
            PinMap::new("njf", 'J', &[(48, 0), (0, 64), (48, 96)], [0, 0, 48, 96]),
            PinMap::new("pjf", 'J', &[(48, 96), (0, 32), (48, 0)], [0, 0, 48, 96]),
            PinMap::new("tline", 'T', &[(0, 0), (0, 32), (96, 0), (96, 32)], [0, -16, 96, 48]),
        ];
        PinMapRegistry {
            entries: entries.into_iter().map(|e| (e.kind.clone(), e)).collect(),
        }
    }

    /// Built-in table with entries from `path` added or replaced.
    pub fn with_overrides(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut reg = Self::builtin();
        reg.merge_json(&text)?;
        Ok(reg)
    }

    pub fn merge_json(&mut self, text: &str) -> Result<()> {
        let file: PinMapFile = serde_json::from_str(text)?;
        for mut e in file.symbols {
            e.kind = e.kind.to_ascii_lowercase();
            e.validate()?;
            self.entries.insert(e.kind.clone(), e);
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = PinMapFile {
            symbols: self.entries.values().cloned().collect(),
        };
        serde_json::to_string_pretty(&file).expect("pin map serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    /// Case-insensitive lookup; library prefixes like `Misc\\` are ignored.
    pub fn get(&self, kind: &str) -> Option<&PinMap> {
        let lower = kind.to_ascii_lowercase();
        self.entries.get(&lower).or_else(|| {
            let base = lower.rsplit(['\\', '/']).next()?;
            self.entries.get(base)
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &PinMap> {
        self.entries.values()
    }

    /// First symbol (alphabetically) drawing `letter` with `pins` pins.
    pub fn for_element(&self, letter: char, pins: usize) -> Option<&PinMap> {
        let preferred = match (letter.to_ascii_uppercase(), pins) {
            ('R', 2) => Some("res"),
            ('C', 2) => Some("cap"),
            ('L', 2) => Some("ind"),
            ('V', 2) => Some("voltage"),
            ('I', 2) => Some("current"),
            ('D', 2) => Some("diode"),
            ('Q', 3) => Some("npn"),
            ('M', 3) => Some("nmos"),
            ('M', 4) => Some("nmos4"),
            ('J', 3) => Some("njf"),
            ('T', 4) => Some("tline"),
            _ => None,
        };
        preferred.and_then(|k| self.entries.get(k)).or_else(|| {
            self.entries
                .values()
                .find(|e| e.letter.eq_ignore_ascii_case(&letter) && e.pins.len() == pins)
        })
    }
}
