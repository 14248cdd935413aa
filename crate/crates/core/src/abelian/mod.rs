//! Degree (`|S|`-color) colorings of `Δ × Z^d` instances: protocol
//! colorings, parity borrowing, and the transitions between protocols.

mod borrow;
mod decompose;
mod dispatch;
mod engine;
mod frame;
mod protocol;
mod rank1;
mod zd;

use thiserror::Error;

pub use borrow::{borrow_parity, OrbitPairing, Region};
pub use decompose::{decompose_generators, integer_relation, Job, JobShape};
pub use dispatch::{
    color_vizing_plus_one, degree_color_abelian, generates, AbelianColoring, Branch,
};
pub use engine::{
    apply_protocol, run_job, JobPlan, JobReport, ProtocolAssignment, Step, StepFill, ZonePlan,
};
pub use frame::Frame;
pub use protocol::{PairTable, Protocol, ProtocolKind};
pub use rank1::{degree_color_rank1, rank1_plan, Rank1Plan, Rank1Role};
pub use zd::{
    degree_color_axis_multi, degree_color_standard, degree_color_three_gen, merge_regions,
    standard_plan, three_gen_site, three_gen_site_any, transition_full, transition_standard_axis,
    MultPlan, StandardPlan, ThreeGenCase, ThreeGenPlan,
};

use crate::group::{GroupError, VertexId};
use crate::line::LineError;
use crate::vizing::VizingError;
use crate::witness::WitnessError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbelianError {
    #[error("chart of slot {slot} is inconsistent at vertex {vertex} modulo {moduli:?}")]
    IncompatiblePeriod {
        slot: usize,
        vertex: VertexId,
        moduli: Vec<i64>,
    },
    #[error("illegal protocol variant: {0}")]
    IllegalVariant(String),
    #[error("borrow condition {condition} fails at vertex {vertex}: {detail}")]
    ConditionViolated {
        condition: u8,
        vertex: VertexId,
        detail: String,
    },
    #[error("orbit pairing is not an involution at vertex {vertex}")]
    BadPairing { vertex: VertexId },
    #[error("witness N = {n} is too weak, need at least {needed}")]
    WitnessTooWeak { n: u32, needed: u32 },
    #[error("no borrow site for n = {n}, b2 = {b2}, a2 = {a2}")]
    InternalNoSite { n: i64, b2: i64, a2: i64 },
    #[error("all generators are collinear")]
    SingleClass,
    #[error("regions at distance {distance}, need more than {needed}")]
    TooClose { distance: u32, needed: u32 },
    #[error("generators do not generate the group")]
    NotGenerating,
    #[error("band fill found no coloring for a component of {edges} edges")]
    BandFillFailed { edges: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error(transparent)]
    Vizing(#[from] VizingError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Line(#[from] LineError),
}
