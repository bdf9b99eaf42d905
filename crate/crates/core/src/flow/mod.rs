//! Networks on the binary tree with long-range edges, and the staged
//! construction that plants those edges to trap transducer images.

mod construct;
mod network;
mod pairing;
mod transducer;

pub use construct::{
    construct, covering_sets, default_n0, predicate_b, rho, Audit, ConstructionOutcome,
    ConstructionParams, ConstructionState, CoveringReport, Diagnostics, StepCase, TraceEvent,
    WatermarkRecord,
};
pub use network::{
    flow_eval, minimal_semimeasure, ExtraEdge, FlowNetwork, NetworkMeta, NetworkViolation,
};
pub use pairing::{pair, pair_string, unpair, unpair_first, unpair_second};
pub use transducer::{MonotoneTransducer, Transition, TransducerRoster};
