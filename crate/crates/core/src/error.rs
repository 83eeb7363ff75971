use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    AscSyntax { line: usize, msg: String },

    #[error("line {line}: SYMATTR without a preceding SYMBOL")]
    OrphanSymattr { line: usize },

    #[error("line {line}: unknown keyword `{keyword}`")]
    UnknownKeyword { line: usize, keyword: String },

    #[error("netlist line {line}: {msg}")]
    NetlistSyntax { line: usize, msg: String },

    #[error("duplicate element name `{0}`")]
    DuplicateElement(String),

    #[error("document has no geometry")]
    EmptyGeometry,

    #[error("document contains no components")]
    MissingComponents,

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("symbol `{kind}` at ({x},{y}) has no InstName")]
    MissingInstName { kind: String, x: i64, y: i64 },

    #[error("net carries conflicting labels `{0}` and `{1}`")]
    FlagConflict(String, String),

    #[error("pin map: {0}")]
    PinMap(String),

    #[error("unsupported element `{0}`")]
    UnsupportedElement(String),

    #[error("layout conflict: {0}")]
    Layout(String),

    #[error("graph too large for exhaustive search ({0} nodes, limit 8)")]
    GraphTooLarge(usize),

    #[error("image size mismatch: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),

    #[error("image {0}x{1} is smaller than the {2}x{2} window")]
    ImageTooSmall(usize, usize, usize),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("prompt variant {0} requires a {1}")]
    MissingSlot(u8, &'static str),

    #[error("invalid prompt variant {0}")]
    InvalidVariant(u8),

    #[error("empty model response")]
    EmptyResponse,

    #[error("endpoint rejected credentials (HTTP {0})")]
    Auth(u16),

    #[error("transport error after {attempts} attempts: {msg}")]
    Transport { attempts: u32, msg: String },

    #[error("bad endpoint response: {0}")]
    BadResponse(String),

    #[error("text encoding: {0}")]
    Encoding(String),

    #[error("unpaired sample `{0}`")]
    Unpaired(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("png: {0}")]
    Png(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
