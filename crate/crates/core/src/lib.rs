//! Minimum Bayes risk (MBR) decoding for documents, with document-level
//! utility computed as an optimal-transport distance over sentence-level
//! utilities.
//!
//! A candidate document is split into segments ([`segment`]); every segment
//! pair of two documents gets a cost `1 - u_s(a, b)` from a
//! [`SentenceUtility`]; the document utility is `1 - OT` under linear
//! assignment, exact Wasserstein, or entropic Wasserstein transport
//! ([`ot`]); and [`decoder::select`] picks the candidate with the highest
//! mean utility against the rest of the pool.

pub mod decoder;
pub mod doc;
pub mod doc_utility;
pub mod error;
pub mod eval;
pub mod ot;
pub mod segment;
pub mod sent_utility;

pub use decoder::{
    compute_utility_matrix, select, select_with_baseline_doc_utility, CandidateSet, MatrixReport,
    MatrixStrategy, SelectionResult, UtilityMatrix,
};
pub use doc::{make_weights, Document, Language, Segment, WeightScheme};
pub use doc_utility::{build_cost_matrix, doc_utility, DocUtilityConfig, Formulation, ScoreCache};
pub use error::{Error, Result};
pub use ot::{solve_ewd, solve_la, solve_wd, CostMatrix, EntropicParams, PlanKind, TransportPlan};
pub use sent_utility::{rescale_lower_better, EmbeddingTable, SentenceUtility};
