//! Prompt templates and fenced-code extraction.
//!
//! Slot values are inserted verbatim. Pass netlists without a trailing
//! newline, otherwise the fence gets an empty line in front of it.

use serde::{Deserialize, Serialize};

use crate::asc::AscDocument;
use crate::error::{Error, Result};

const TEMPLATES: [&str; 5] = [
    include_str!("../templates/prompt1.txt"),
    include_str!("../templates/prompt2.txt"),
    include_str!("../templates/prompt3.txt"),
    include_str!("../templates/prompt4.txt"),
    include_str!("../templates/prompt5.txt"),
];

const LPF_NETLIST: &str = include_str!("../templates/lpf_example.net");
const LPF_ASC: &str = include_str!("../templates/lpf_example.asc");

const NETLIST_SLOT: &str = "{{NETLIST}}";
const HEADER_SLOT: &str = "{{SHEET_HEADER}}";
const EXAMPLE_NETLIST_SLOT: &str = "{{EXAMPLE_NETLIST}}";
const EXAMPLE_ASC_SLOT: &str = "{{EXAMPLE_ASC}}";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shots {
    Zero,
    One,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PromptVariant {
    pub id: u8,
    pub shots: Shots,
    pub includes_sheet_header: bool,
    pub includes_keywords: bool,
}

impl PromptVariant {
    pub fn new(id: u8) -> Result<Self> {
        if !(1..=5).contains(&id) {
            return Err(Error::InvalidVariant(id));
        }
        Ok(PromptVariant {
            id,
            shots: if id >= 4 { Shots::One } else { Shots::Zero },
            includes_sheet_header: id == 3 || id == 5,
            includes_keywords: id == 2,
        })
    }

    pub fn all() -> impl Iterator<Item = PromptVariant> {
        (1..=5).map(|i| PromptVariant::new(i).unwrap())
    }

    pub fn template(&self) -> &'static str {
        TEMPLATES[usize::from(self.id - 1)]
    }
}

impl TryFrom<u8> for PromptVariant {
    type Error = Error;
    fn try_from(id: u8) -> Result<Self> {
        PromptVariant::new(id)
    }
}

impl From<PromptVariant> for u8 {
    fn from(v: PromptVariant) -> u8 {
        v.id
    }
}

/// One-shot in-context example.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExamplePair {
    pub netlist_text: String,
    pub asc_text: String,
}

impl ExamplePair {
    /// The bundled RC low-pass filter pair.
    pub fn lpf() -> Self {
        ExamplePair {
            netlist_text: LPF_NETLIST.trim_end().to_string(),
            asc_text: LPF_ASC.trim_end().to_string(),
        }
    }
}

/// First two lines of a reference schematic, e.g. `Version 4\nSHEET 1 880 680`.
pub fn sheet_header(doc: &AscDocument) -> String {
    format!("Version {}\nSHEET {} {} {}", doc.version, doc.sheet.index, doc.sheet.a, doc.sheet.b)
}

pub fn render_prompt(
    v: PromptVariant,
    netlist_text: &str,
    sheet_header: Option<&str>,
    example: Option<&ExamplePair>,
) -> Result<String> {
    let mut out = v.template().to_string();
    if v.includes_sheet_header {
        let h = sheet_header.ok_or(Error::MissingSlot(v.id, "sheet_header"))?;
        out = out.replace(HEADER_SLOT, h);
    }
    if v.shots == Shots::One {
        let ex = example.ok_or(Error::MissingSlot(v.id, "example"))?;
        out = out
            .replace(EXAMPLE_NETLIST_SLOT, &ex.netlist_text)
            .replace(EXAMPLE_ASC_SLOT, &ex.asc_text);
    }
    // The netlist goes in last so its text is never scanned for markers.
    Ok(out.replace(NETLIST_SLOT, netlist_text))
}

/// Recovers the netlist embedded in a rendered prompt.
pub fn embedded_netlist(prompt: &str) -> Option<&str> {
    const OPEN: &str = "Input: ```\n";
    const CLOSE: &str = "\n```\n\n---\n\nOutput:\n";
    let body = prompt.strip_suffix(CLOSE)?;
    let start = body.rfind(OPEN)? + OPEN.len();
    Some(&body[start..])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractWarning {
    /// No fence at all; the whole response was used.
    NoFence,
    /// Opening fence without a closing one, typically a truncated response.
    Unterminated,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeBlock {
    pub text: String,
    pub warning: Option<ExtractWarning>,
}

fn is_language_tag(line: &str) -> bool {
    line.chars().all(|c| c.is_ascii_alphanumeric() || "_+-.".contains(c))
}

/// Content of the first triple-backtick fence, language tag removed.
pub fn extract_code_block(response: &str) -> Result<CodeBlock> {
    if response.trim().is_empty() {
        return Err(Error::EmptyResponse);
    }
    let Some(open) = response.find("```") else {
        return Ok(CodeBlock {
            text: response.trim().to_string(),
            warning: Some(ExtractWarning::NoFence),
        });
    };
    let mut rest = &response[open + 3..];
    if let Some(nl) = rest.find('\n') {
        if is_language_tag(rest[..nl].trim_end_matches('\r')) {
            rest = &rest[nl + 1..];
        }
    }
    let (body, warning) = match rest.find("```") {
        Some(close) => (&rest[..close], None),
        None => (rest, Some(ExtractWarning::Unterminated)),
    };
    let text = body.trim_start_matches(['\r', '\n']).trim_end().to_string();
    if text.is_empty() {
        return Err(Error::EmptyResponse);
    }
    Ok(CodeBlock { text, warning })
}
