use std::fmt;

use thiserror::Error;

/// A conditioner in a CI test: either the empty set or a single node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Separator {
    Empty,
    Node(usize),
}

impl fmt::Display for Separator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Separator::Empty => write!(f, "∅"),
            Separator::Node(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("node {node} out of range for a graph with {d} nodes")]
    NodeOutOfRange { node: usize, d: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),

    #[error("graph contains a directed cycle")]
    Cyclic,

    #[error("graph is not a polytree: {0}")]
    NotPolytree(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("conditioning block on {given:?} is singular")]
    DegenerateConditioning { given: Vec<usize> },

    #[error("conditional variance of node {node} given {given:?} collapsed to {value:e}")]
    DegenerateVariance {
        node: usize,
        given: Vec<usize>,
        value: f64,
    },

    #[error("correlation {value} of ({j}, {k}) lies outside [-1, 1]")]
    CorrelationOutOfRange { j: usize, k: usize, value: f64 },

    #[error("mutual information of ({j}, {k}) is infinite (perfect correlation)")]
    InfiniteMutualInformation { j: usize, k: usize },

    #[error("pair ({}, {}){}: {source}", .pair.0, .pair.1, fmt_conditioner(.conditioner))]
    Pair {
        pair: (usize, usize),
        conditioner: Option<Separator>,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "inconsistent v-structures: edge {}-{} is forced both ways by triples {:?} and {:?}",
        .edge.0, .edge.1, .first, .second
    )]
    OrientationConflict {
        edge: (usize, usize),
        first: (usize, usize, usize),
        second: (usize, usize, usize),
    },

    #[error("no separation set recorded for non-adjacent pair ({0}, {1})")]
    MissingSeparationSet(usize, usize),

    #[error("d = {d} is too large for exhaustive enumeration (max {max})")]
    TooLargeForEnumeration { d: usize, max: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed input: {0}")]
    Format(String),
}

fn fmt_conditioner(c: &Option<Separator>) -> String {
    match c {
        Some(s) => format!(" given {s}"),
        None => String::new(),
    }
}

impl Error {
    /// True for failures caused by numerically degenerate inputs rather than
    /// malformed requests.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPositiveDefinite
            | Error::DegenerateConditioning { .. }
            | Error::DegenerateVariance { .. }
            | Error::CorrelationOutOfRange { .. }
            | Error::InfiniteMutualInformation { .. }
            | Error::OrientationConflict { .. } => true,
            Error::Pair { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn in_pair(self, pair: (usize, usize), conditioner: Option<Separator>) -> Error {
        Error::Pair {
            pair,
            conditioner,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
