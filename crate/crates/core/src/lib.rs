//! Modular fault diagnosis for message-passing systems.
//!
//! Leaf monitors turn channel traffic into [`DiagnosticStatus`] values.
//! A [`DiagnosticGraph`] folds them into subsystem groups, suppresses
//! findings downstream of a failed dependency and gates groups by the
//! vehicle's operational state. Countermeasures and incident recording act
//! on the resulting [`EvaluationSnapshot`]. The [`simulator`] drives all of
//! it over virtual time.

// `!(x > 0.0)` is how NaN parameters get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod bus;
pub mod config;
pub mod countermeasures;
pub mod monitors;
mod name;
pub mod parallel;
pub mod simulator;
mod state;
mod status;
pub mod system_state;
pub mod taxonomy;

pub use aggregation::{evaluate_graph, DiagnosticGraph, EvaluationSnapshot};
pub use config::GraphConfig;
pub use name::{NameError, NamePath};
pub use state::{severity_max, DiagnosticState, StateError};
pub use status::{DataMessage, DataValue, DiagnosticStatus};
pub use taxonomy::{classify, MonitorTaxonomy};
