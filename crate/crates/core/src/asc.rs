//! LTSpice `.asc` schematic model.
//!
//! A document is a sequence of keyword lines. The recognised subset is
//!
//! ```text
//! Version <n>
//! SHEET <index> <a> <b>
//! WIRE <x1> <y1> <x2> <y2>
//! FLAG <x> <y> <name>
//! SYMBOL <kind> <x> <y> <orientation>
//! SYMATTR <key> <value...>
//! ```
//!
//! Anything else is kept verbatim in [`AscDocument::other_lines`] when parsing
//! leniently. Serialization is canonical: single spaces, `\n` line endings and
//! a fixed section order, so `serialize(parse(serialize(d))) == serialize(d)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }

    pub fn translate(self, dx: i64, dy: i64) -> Self {
        Point::new(self.x + dx, self.y + dy)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Symbol orientation. `R*` rotates anti-clockwise on screen; `M*` mirrors
/// the x axis first and then applies the same rotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    R0,
    R90,
    R180,
    R270,
    M0,
    M90,
    M180,
    M270,
}

impl Orientation {
    pub const ALL: [Orientation; 8] = [
        Orientation::R0,
        Orientation::R90,
        Orientation::R180,
        Orientation::R270,
        Orientation::M0,
        Orientation::M90,
        Orientation::M180,
        Orientation::M270,
    ];

    pub fn is_mirrored(self) -> bool {
        matches!(
            self,
            Orientation::M0 | Orientation::M90 | Orientation::M180 | Orientation::M270
        )
    }

    /// Rotation in quarter turns.
    pub fn quarter_turns(self) -> u8 {
        match self {
            Orientation::R0 | Orientation::M0 => 0,
            Orientation::R90 | Orientation::M90 => 1,
            Orientation::R180 | Orientation::M180 => 2,
            Orientation::R270 | Orientation::M270 => 3,
        }
    }

    /// Maps a symbol-local offset into the placed frame (y grows downward).
    pub fn apply(self, p: Point) -> Point {
        let (mut x, mut y) = (p.x, p.y);
        if self.is_mirrored() {
            x = -x;
        }
        for _ in 0..self.quarter_turns() {
            (x, y) = (-y, x);
        }
        Point::new(x, y)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::R0 => "R0",
            Orientation::R90 => "R90",
            Orientation::R180 => "R180",
            Orientation::R270 => "R270",
            Orientation::M0 => "M0",
            Orientation::M90 => "M90",
            Orientation::M180 => "M180",
            Orientation::M270 => "M270",
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Orientation::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| format!("bad orientation `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Wire {
    pub start: Point,
    pub end: Point,
}

impl Wire {
    pub fn new(x1: i64, y1: i64, x2: i64, y2: i64) -> Self {
        Wire {
            start: Point::new(x1, y1),
            end: Point::new(x2, y2),
        }
    }

    pub fn is_zero_length(&self) -> bool {
        self.start == self.end
    }

    /// True when `p` lies on the closed segment, endpoints included.
    pub fn contains(&self, p: Point) -> bool {
        let (a, b) = (self.start, self.end);
        let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        cross == 0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Flag {
    pub at: Point,
    pub name: String,
}

impl Flag {
    pub fn is_ground(&self) -> bool {
        self.name == "0"
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolInstance {
    pub kind: String,
    pub at: Point,
    pub orientation: Orientation,
    pub attrs: Vec<(String, String)>,
}

impl SymbolInstance {
    pub fn new(kind: impl Into<String>, x: i64, y: i64, orientation: Orientation) -> Self {
        SymbolInstance {
            kind: kind.into(),
            at: Point::new(x, y),
            orientation,
            attrs: Vec::new(),
        }
    }

    pub fn with_attr(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attrs.push((key.into(), value.into()));
        self
    }

    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn inst_name(&self) -> Option<&str> {
        self.attr("InstName")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sheet {
    pub index: i64,
    /// First size field; named height in `SHEET index height width`.
    pub a: i64,
    pub b: i64,
}

impl Default for Sheet {
    fn default() -> Self {
        Sheet { index: 1, a: 0, b: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AscDocument {
    pub version: i64,
    pub sheet: Sheet,
    pub wires: Vec<Wire>,
    pub flags: Vec<Flag>,
    pub symbols: Vec<SymbolInstance>,
    pub other_lines: Vec<String>,
}

impl Default for AscDocument {
    fn default() -> Self {
        AscDocument {
            version: 4,
            sheet: Sheet::default(),
            wires: Vec::new(),
            flags: Vec::new(),
            symbols: Vec::new(),
            other_lines: Vec::new(),
        }
    }
}

/// Inclusive axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn of_points(points: impl IntoIterator<Item = Point>) -> Option<BBox> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = BBox {
            min: first,
            max: first,
        };
        for p in it {
            b.include(p);
        }
        Some(b)
    }

    pub fn include(&mut self, p: Point) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn width(&self) -> i64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> i64 {
        self.max.y - self.min.y
    }
}

impl AscDocument {
    /// Wire endpoints, flag positions and symbol anchors, in file order.
    pub fn anchor_points(&self) -> impl Iterator<Item = Point> + '_ {
        self.wires
            .iter()
            .flat_map(|w| [w.start, w.end])
            .chain(self.flags.iter().map(|f| f.at))
            .chain(self.symbols.iter().map(|s| s.at))
    }

    pub fn bbox(&self) -> Option<BBox> {
        BBox::of_points(self.anchor_points())
    }

    pub fn translate(&self, dx: i64, dy: i64) -> AscDocument {
        let mut out = self.clone();
        for w in &mut out.wires {
            w.start = w.start.translate(dx, dy);
            w.end = w.end.translate(dx, dy);
        }
        for f in &mut out.flags {
            f.at = f.at.translate(dx, dy);
        }
        for s in &mut out.symbols {
            s.at = s.at.translate(dx, dy);
        }
        out
    }

    pub fn zero_length_wires(&self) -> usize {
        self.wires.iter().filter(|w| w.is_zero_length()).count()
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn canonical_hash(&self) -> String {
        hex::encode(Sha256::digest(serialize_asc(self).as_bytes()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ParseMode {
    Strict,
    #[default]
    Lenient,
}

/// Decodes file bytes: UTF-16LE (with BOM, or detected by NUL high bytes),
/// UTF-8 with or without BOM.
pub fn decode_text(bytes: &[u8]) -> Result<String> {
    if let Some(rest) = bytes.strip_prefix(&[0xFF, 0xFE]) {
        return decode_utf16le(rest);
    }
    if let Some(rest) = bytes.strip_prefix(&[0xEF, 0xBB, 0xBF]) {
        return String::from_utf8(rest.to_vec()).map_err(|e| Error::Encoding(e.to_string()));
    }
    let looks_utf16 = bytes.len() >= 4
        && bytes.len().is_multiple_of(2)
        && bytes.iter().skip(1).step_by(2).take(16).all(|&b| b == 0)
        && bytes.iter().step_by(2).take(16).all(|&b| b != 0);
    if looks_utf16 {
        return decode_utf16le(bytes);
    }
    String::from_utf8(bytes.to_vec()).map_err(|e| Error::Encoding(e.to_string()))
}

fn decode_utf16le(bytes: &[u8]) -> Result<String> {
    if !bytes.len().is_multiple_of(2) {
        return Err(Error::Encoding("odd byte count in UTF-16 data".into()));
    }
    let units: Vec<u16> = bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    String::from_utf16(&units).map_err(|e| Error::Encoding(e.to_string()))
}

fn int(tok: &str, line: usize) -> Result<i64> {
    tok.parse().map_err(|_| Error::AscSyntax {
        line,
        msg: format!("expected integer, got `{tok}`"),
    })
}

fn arity(line: usize, keyword: &str, want: usize, got: usize) -> Error {
    Error::AscSyntax {
        line,
        msg: format!("{keyword} takes {want} fields, found {got}"),
    }
}

pub fn parse_asc(text: &str, mode: ParseMode) -> Result<AscDocument> {
    let mut doc = AscDocument::default();
    let mut seen_version = false;
    let mut seen_sheet = false;
    // Index of the symbol that SYMATTR lines attach to; reset by any line
    // that is not part of a symbol block.
    let mut current: Option<usize> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (keyword, rest) = match trimmed.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim_start()),
            None => (trimmed, ""),
        };
        let fields: Vec<&str> = rest.split_whitespace().collect();
        match keyword {
            "Version" if !seen_version => {
                if fields.len() != 1 {
                    return Err(arity(line, keyword, 1, fields.len()));
                }
                doc.version = int(fields[0], line)?;
                seen_version = true;
                current = None;
            }
            "SHEET" if !seen_sheet => {
                if fields.len() != 3 {
                    return Err(arity(line, keyword, 3, fields.len()));
                }
                doc.sheet = Sheet {
                    index: int(fields[0], line)?,
                    a: int(fields[1], line)?,
                    b: int(fields[2], line)?,
                };
                seen_sheet = true;
                current = None;
            }
            "WIRE" => {
                if fields.len() != 4 {
                    return Err(arity(line, keyword, 4, fields.len()));
                }
                doc.wires.push(Wire::new(
                    int(fields[0], line)?,
                    int(fields[1], line)?,
                    int(fields[2], line)?,
                    int(fields[3], line)?,
                ));
                current = None;
            }
            "FLAG" => {
                if fields.len() != 3 {
                    return Err(arity(line, keyword, 3, fields.len()));
                }
                doc.flags.push(Flag {
                    at: Point::new(int(fields[0], line)?, int(fields[1], line)?),
                    name: fields[2].to_string(),
                });
                current = None;
            }
            "SYMBOL" => {
                if fields.len() != 4 {
                    return Err(arity(line, keyword, 4, fields.len()));
                }
                let orientation = fields[3]
                    .parse()
                    .map_err(|msg| Error::AscSyntax { line, msg })?;
                doc.symbols.push(SymbolInstance::new(
                    fields[0],
                    int(fields[1], line)?,
                    int(fields[2], line)?,
                    orientation,
                ));
                current = Some(doc.symbols.len() - 1);
            }
            "SYMATTR" => {
                let Some(idx) = current else {
                    return Err(Error::OrphanSymattr { line });
                };
                let (key, value) = match rest.split_once(char::is_whitespace) {
                    Some((k, v)) => (k, v.trim()),
                    None => (rest, ""),
                };
                if key.is_empty() {
                    return Err(Error::AscSyntax {
                        line,
                        msg: "SYMATTR without a key".into(),
                    });
                }
                doc.symbols[idx]
                    .attrs
                    .push((key.to_string(), value.to_string()));
            }
            // Symbol-scoped GUI lines (WINDOW) do not end the block.
            "WINDOW" if mode == ParseMode::Lenient => {
                doc.other_lines.push(trimmed.to_string());
            }
            _ => {
                if mode == ParseMode::Strict {
                    return Err(Error::UnknownKeyword {
                        line,
                        keyword: keyword.to_string(),
                    });
                }
                doc.other_lines.push(trimmed.to_string());
                current = None;
            }
        }
    }

    if mode == ParseMode::Strict && !(seen_version && seen_sheet) {
        return Err(Error::AscSyntax {
            line: 1,
            msg: "missing Version or SHEET header".into(),
        });
    }
    Ok(doc)
}

pub fn serialize_asc(doc: &AscDocument) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    let _ = writeln!(out, "Version {}", doc.version);
    let _ = writeln!(out, "SHEET {} {} {}", doc.sheet.index, doc.sheet.a, doc.sheet.b);
    for w in &doc.wires {
        let _ = writeln!(out, "WIRE {} {} {} {}", w.start.x, w.start.y, w.end.x, w.end.y);
    }
    for f in &doc.flags {
        let _ = writeln!(out, "FLAG {} {} {}", f.at.x, f.at.y, f.name);
    }
    for s in &doc.symbols {
        let _ = writeln!(out, "SYMBOL {} {} {} {}", s.kind, s.at.x, s.at.y, s.orientation);
        for (k, v) in &s.attrs {
            if v.is_empty() {
                let _ = writeln!(out, "SYMATTR {k}");
            } else {
                let _ = writeln!(out, "SYMATTR {k} {v}");
            }
        }
    }
    for l in &doc.other_lines {
        out.push_str(l);
        out.push('\n');
    }
    out
}
