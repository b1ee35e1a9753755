use thiserror::Error;

use crate::stipulation::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),

    #[error("label `{0}` is not in the graph's alphabet")]
    UnknownLabel(String),

    #[error("event `{0}` is not in the label map's domain")]
    OutsideDomain(String),

    #[error("image symbol `{0}` has an empty preimage")]
    EmptyPreimage(String),

    #[error(
        "image symbol `{image}` is shared by action `{action}` and observation `{observation}`"
    )]
    MixedImage {
        image: String,
        action: String,
        observation: String,
    },

    #[error("events of mixed kinds: `{0}` and `{1}`")]
    MixedKinds(String, String),

    #[error("initial vertex kinds differ between the two graphs")]
    IncompatibleInitialKinds,

    #[error("label `{0}` is an action in one graph and an observation in the other")]
    IncompatibleAlphabets(String),

    #[error("the empty vertex set is not reached exactly by any execution")]
    EmptyReachSet,

    #[error("execution `{0}` is not in the language of the graph")]
    NotInLanguage(String),

    #[error("graph `{0}` must be in state-determined form")]
    NotStateDetermined(&'static str),

    #[error("malformed graph: {0}")]
    Malformed(String),

    #[error("empty plan collection")]
    EmptyCollection,

    #[error("symbol `{0}` does not name a world vertex")]
    UnboundSymbol(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(format!("{} (line {}, column {})", e, e.line(), e.column()))
    }
}
