//! Corpus cleaning for `.asc` files and netlists.

use serde::{Deserialize, Serialize};

use crate::asc::{parse_asc, AscDocument, ParseMode};
use crate::error::{Error, Result};
use crate::netlist::Netlist;

const DECORATIONS: [&str; 5] = ["TEXT", "RECTANGLE", "WINDOW", "LINE", "CIRCLE"];
const DROPPED_COMMANDS: [&str; 3] = [".backanno", ".lib", ".model"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    Ok,
    NoSymbolSymattrPair,
    Uncompilable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub keep: bool,
    pub reason: FilterReason,
}

impl FilterVerdict {
    pub const KEEP: FilterVerdict = FilterVerdict {
        keep: true,
        reason: FilterReason::Ok,
    };

    pub fn reject(reason: FilterReason) -> Self {
        debug_assert!(reason != FilterReason::Ok);
        FilterVerdict { keep: false, reason }
    }
}

/// Sets the sheet size to the coordinate span: `a` = height, `b` = width.
pub fn normalize_sheet(doc: &AscDocument) -> Result<AscDocument> {
    let bbox = doc.bbox().ok_or(Error::EmptyGeometry)?;
    let mut out = doc.clone();
    out.sheet.a = bbox.height();
    out.sheet.b = bbox.width();
    Ok(out)
}

/// Moves the bounding-box midpoint (rounded down) to the origin.
pub fn recenter(doc: &AscDocument) -> AscDocument {
    match doc.bbox() {
        Some(b) => {
            let cx = (b.min.x + b.max.x).div_euclid(2);
            let cy = (b.min.y + b.max.y).div_euclid(2);
            doc.translate(-cx, -cy)
        }
        None => doc.clone(),
    }
}

/// Returns the rewritten document and how many surplus `InstName`s were dropped.
pub fn rewrite_symattr_counted(doc: &AscDocument) -> (AscDocument, usize) {
    let mut out = doc.clone();
    let mut dropped = 0;
    for s in &mut out.symbols {
        let mut seen = false;
        let attrs = std::mem::take(&mut s.attrs);
        for (key, value) in attrs {
            let key = match key.as_str() {
                "SpiceModel" | "ModelFile" => "InstName".to_string(),
                _ => key,
            };
            if key == "InstName" {
                if seen {
                    dropped += 1;
                    continue;
                }
                seen = true;
            }
            s.attrs.push((key, value));
        }
    }
    if dropped > 0 {
        log::debug!("rewrite_symattr dropped {dropped} surplus InstName attribute(s)");
    }
    (out, dropped)
}

pub fn rewrite_symattr(doc: &AscDocument) -> AscDocument {
    rewrite_symattr_counted(doc).0
}

/// Removes comment and GUI-decoration lines from raw `.asc` text.
pub fn strip_decorations(doc_text: &str) -> String {
    let mut out = String::with_capacity(doc_text.len());
    for line in doc_text.lines() {
        let first = line.split_whitespace().next().unwrap_or("");
        if first.starts_with('*') || DECORATIONS.contains(&first) {
            continue;
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}

pub fn filter_document(doc: &AscDocument) -> FilterVerdict {
    if doc.symbols.iter().any(|s| !s.attrs.is_empty()) {
        FilterVerdict::KEEP
    } else {
        FilterVerdict::reject(FilterReason::NoSymbolSymattrPair)
    }
}

pub fn clean_netlist(n: &Netlist) -> Netlist {
    let mut out = n.clone();
    out.commands
        .retain(|c| !DROPPED_COMMANDS.contains(&c.keyword().as_str()));
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preprocessed {
    /// `None` when the text failed to parse.
    pub doc: Option<AscDocument>,
    pub verdict: FilterVerdict,
}

pub fn preprocess_pipeline(raw_text: &str) -> Preprocessed {
    let stripped = strip_decorations(raw_text);
    let doc = match parse_asc(&stripped, ParseMode::Lenient) {
        Ok(d) => d,
        Err(e) => {
            log::debug!("preprocess: parse failed: {e}");
            return Preprocessed {
                doc: None,
                verdict: FilterVerdict::reject(FilterReason::Uncompilable),
            };
        }
    };
    let mut doc = rewrite_symattr(&doc);
    if let Ok(sized) = normalize_sheet(&doc) {
        doc = recenter(&sized);
    }
    let verdict = filter_document(&doc);
    Preprocessed {
        doc: Some(doc),
        verdict,
    }
}
