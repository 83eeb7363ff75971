//! Netlist ↔ LTSpice schematic toolkit.
//!
//! Parsers and canonical serializers for `.asc` schematics and SPICE
//! netlists, a schematic netlister, corpus preprocessing and augmentation,
//! a rule-based layout generator, a deterministic rasterizer, the scoring
//! metrics (graph edit distance, MSSIM, compile rate, BLEU), prompt rendering
//! for chat-completion endpoints, and the evaluation harness tying them
//! together.

pub mod asc;
pub mod augment;
pub mod baseline;
pub mod error;
pub mod extract;
pub mod harness;
pub mod llm;
pub mod netlist;
pub mod metrics;
pub mod preprocess;
pub mod prompt;
pub mod render;

pub use asc::{decode_text, parse_asc, serialize_asc, AscDocument, Orientation, ParseMode, Point};
pub use augment::{build_dataset, build_splits, dedup_overlap, permute_pairs, reflect_to_netlist, DatasetRecord, SplitManifest};
pub use baseline::{baseline_asc, emit_asc, plan_layout, LayoutPlan};
pub use error::{Error, Result};
pub use extract::{compile_asc, PinMapRegistry};
pub use harness::{evaluate, report_table, Candidate, EvalConfig, EvalReport, Reference};
pub use llm::{EndpointConfig, GenerationConfig, HttpClient, ModelClient, ReplayClient};
pub use metrics::{bleu4, csr, ged_anytime, ged_exact, ged_score, mssim, netlist_to_graph, CircuitGraph, GedResult, SsimParams};
pub use netlist::{parse_netlist, serialize_netlist, ElementCard, Netlist};
pub use preprocess::{preprocess_pipeline, FilterReason};
pub use prompt::{extract_code_block, render_prompt, ExamplePair, PromptVariant};
pub use render::{render, GrayImage, RenderConfig};
