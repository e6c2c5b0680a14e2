use alloc::string::String;

/// Validation failures in the corpus data model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("invalid adjective {0:?}: expected lowercase letters and hyphens")]
    InvalidAdjective(String),
    #[error("scale {scale_id:?}: adjective {adjective:?} appears more than once")]
    DuplicateAdjective { scale_id: String, adjective: String },
    #[error("scale {0:?}: a half-scale needs at least two adjectives")]
    TooFewAdjectives(String),
    #[error("scale {0:?}: empty intensity group")]
    EmptyGroup(String),
    #[error("empty scale id")]
    EmptyScaleId,
    #[error("dataset {dataset_id:?}: duplicate scale id {scale_id:?}")]
    DuplicateScaleId {
        dataset_id: String,
        scale_id: String,
    },
    #[error("dataset {dataset_id:?}: expected {expected} {what}, found {found}")]
    ManifestMismatch {
        dataset_id: String,
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("context set {scale_id:?}: expected exactly {expected} sentences, found {found}")]
    ContextCount {
        scale_id: String,
        expected: usize,
        found: usize,
    },
    #[error("context set {scale_id:?}: sentence must contain the placeholder exactly once, found {found}: {sentence:?}")]
    PlaceholderCount {
        scale_id: String,
        found: usize,
        sentence: String,
    },
    #[error("context set references unknown scale id {0:?}")]
    UnknownScale(String),
    #[error("item {item_id:?}: proportion_yes {value} outside [0, 1]")]
    ProportionRange { item_id: String, value: f64 },
    #[error("item {item_id:?}: missing field {field}")]
    MissingField {
        item_id: String,
        field: &'static str,
    },
    #[error("item {item_id:?}: surprisal features must be both present or both absent")]
    PartialFeatures { item_id: String },
    #[error("item {item_id:?}: stated gold label disagrees with proportion_yes {proportion}")]
    GoldLabelMismatch { item_id: String, proportion: f64 },
    #[error("dataset {dataset_id:?}: duplicate item id {item_id:?}")]
    DuplicateItemId { dataset_id: String, item_id: String },
}

/// Failures raised by a scoring backend.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("backend {backend_id:?} ({family}) does not support {operation}")]
    Unsupported {
        backend_id: String,
        family: &'static str,
        operation: &'static str,
    },
    #[error("no vector for word {0:?}")]
    OutOfVocabulary(String),
    #[error("span {start}..{end} does not align with any token")]
    Misaligned { start: usize, end: usize },
    #[error("input too long: {tokens} tokens, limit {limit}")]
    TooLong { tokens: usize, limit: usize },
    #[error("expected exactly one mask token, found {0}")]
    MaskCount(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("backend failure: {0}")]
    Other(String),
}

/// Failures raised while running a probe.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbeError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("missing representation for {adjective:?} on scale {scale_id:?}")]
    MissingRepresentation { scale_id: String, adjective: String },
    #[error("no contexts for scale {0:?}")]
    MissingContexts(String),
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("yes and no both have zero probability")]
    ZeroAnswerMass,
    #[error("degenerate calibration: mean neutral yes-probability {0}")]
    DegenerateCalibration(f64),
    #[error("training set contains a single class")]
    SingleClass,
    #[error("all scales were excluded")]
    AllExcluded,
    #[error("zero vector for {adjective:?} on scale {scale_id:?}: cosine undefined")]
    ZeroVector { scale_id: String, adjective: String },
}
