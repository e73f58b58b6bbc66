//! Property generation for sequential circuits: unroll, take clauses out by PQE, check the
//! resulting local properties as invariants and flag bad ones. Also the FIFO generator and
//! a PQE-based diameter check.

pub mod circuit;
pub mod diameter;
pub mod fifo;
pub mod pipeline;
pub mod reach;
pub mod unroll;

pub use circuit::{ALit, Circuit, CircuitError, Init};
pub use diameter::diameter_leq;
pub use fifo::{build_fifo, data_latches, FifoError};
pub use pipeline::{
    check_candidates, flag_bad, gen_local_props, propgen, Candidate, Expectation, Generation,
    LocalProperty, PropertyReport, PropgenOptions, TargetRun, Tri,
};
pub use reach::{check_invariant, ExternalChecker, Reachability, Verdict};
pub use unroll::{encode, unroll, TargetOrder, Unrolling};
