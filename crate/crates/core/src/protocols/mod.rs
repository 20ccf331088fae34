//! The notification, resource-sharing and private-comparison protocols, plus
//! the pipeline that chains them.
//!
//! Every protocol runs on a [`Network`](crate::netsim::Network): parties are
//! state machines driven by the round scheduler, quantum operations go
//! through the GHZ engine, and every announcement lands in the transcript.

mod compare;
mod config;
mod pipeline;
mod qan;
mod sharing;

pub use compare::{
    bit_equal, ceil_log2, compare_on, multi_registers_per_bit, run_aqpc_multi, run_aqpc_two,
    run_comparison, slots_per_bit, BitLayout, BitVerdict, ComparisonOutcome, ComparisonReport,
    Scheme, Slot, SlotParity, Verdict,
};
pub use config::{PreparerBehavior, ProtocolConfig};
pub use pipeline::{run_full_pipeline, run_full_pipeline_with, PipelineResult, PipelineRun, Stage};
pub use qan::{run_modified_qan, run_qan, QanOutcome, QanRun};
pub(crate) use sharing::resolve_preparer;
pub use sharing::{run_resource_sharing, share_on, SharingOutcome, SharingPlan, SharingRun};

use thiserror::Error;

use crate::ghz::EngineError;
use crate::netsim::NetError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("comparison needs at least 2 competing parties, got {0}")]
    TooFewCompetitors(usize),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}
