use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum SliceError {
    /// Structural misuse: mismatched clock lengths, out-of-range process ids.
    #[error("configuration error: {0}")]
    Config(String),

    /// A predicate references variables or channels the trace does not have.
    #[error("predicate error: {0}")]
    Predicate(String),

    /// Predicate text that does not follow the grammar.
    #[error("cannot parse predicate: {0}")]
    PredicateParse(String),

    /// A trace file line that does not follow the format, or a structurally
    /// invalid trace (broken FIFO pairing, clock mismatch, causality cycle).
    #[error("trace error at line {line}: {msg}")]
    TraceParse { line: usize, msg: String },

    /// Trace-level invariant violation detected outside the parser.
    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    /// The lattice enumerator refuses to exceed its cut budget; ground truth
    /// must be exact, so it never degrades to sampling.
    #[error("lattice budget exceeded: more than {budget} consistent cuts")]
    LatticeBudget { budget: usize },

    /// A simulation did not reach quiescence within its step budget, or the
    /// global stall detector found a state with no executable action.
    #[error("liveness failure: {0}")]
    Liveness(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SliceError>;
