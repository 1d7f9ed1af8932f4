//! Safety actions derived from evaluation snapshots, and the incident
//! recorder that keeps the recent bus history.

mod action;
mod recorder;

pub use action::{decide_action, Action, CountermeasurePolicy};
pub use recorder::{
    read_incident, recorder_status, ring_flush, write_incident, FlushOutcome, Incident, IncidentHeader,
    IncidentRecorder, RingBuffer,
};
