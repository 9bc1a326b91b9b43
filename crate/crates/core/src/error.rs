use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("layout dimensions must be positive, got {rows}x{cols}")]
    ZeroDimension { rows: usize, cols: usize },
    #[error("malformed layout `{0}`, expected ROWSxCOLS")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("undeclared qubit `{0}`")]
    UndeclaredQubit(String),
    #[error("`{gate}` takes {expected} operand(s), got {found}")]
    Arity {
        gate: String,
        expected: usize,
        found: usize,
    },
    #[error("`{0}` applied twice to the same qubit")]
    RepeatedOperand(String),
    #[error("malformed destination `{0}`")]
    MalformedDestination(String),
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("register `{0}` declared twice")]
    DuplicateRegister(String),
    #[error("{0}")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("undeclared qubit `{0}`")]
    UndeclaredQubit(String),
    #[error("cannot resolve destination `{0}`")]
    UnresolvedDestination(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("node {0} is not in the front layer")]
    NotInFrontLayer(usize),
    #[error("barrier cannot be flushed while other nodes remain in the front layer")]
    BarrierNotAlone,
    #[error("no barrier in the front layer")]
    NoBarrier,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapperError {
    #[error("traversal exceeded its time limit")]
    Timeout,
    #[error("no SWAP candidate available: layout is jammed")]
    Jammed,
    #[error("no front-layer progress after {0} SWAPs")]
    Stalled(usize),
    #[error("move destination `{0}` is still symbolic")]
    UnresolvedDestination(String),
    #[error("layout has {layout} qubits but protocol declares {protocol}")]
    LayoutTooSmall { layout: usize, protocol: usize },
    #[error("pinned position {0} is outside the layout")]
    PinOutOfRange(usize),
    #[error("qubits `{0}` and `{1}` are pinned to the same cell")]
    PinConflict(String, String),
    #[error("all {0} iterations failed")]
    AllIterationsFailed(usize),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Dag(#[from] DagError),
}

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: MapperError,
    },
    #[error("missing anchor for `{0}`")]
    MissingAnchor(String),
    #[error("protocol `{protocol}` lacks register `{register}`")]
    MissingRegister { protocol: String, register: String },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("invalid logical qubit configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum CircuitFormatError {
    #[error("malformed circuit JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("circuit references qubit {qubit} outside the {layout} layout")]
    OutOfRange { qubit: usize, layout: String },
}
