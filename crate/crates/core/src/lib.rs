//! Simulator for a spectrally filtered, incoherently pumped two-level
//! single-photon source.
//!
//! Rates are in units of `gamma_diss` and times in units of `1/gamma_diss`.
//! The usual entry points are the metric functions in [`metrics`] and
//! [`sweep::run_sweep`].

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlators;
pub mod error;
pub mod filter;
pub mod linalg;
pub mod liouville;
pub mod metrics;
pub mod oracles;
pub mod presets;
pub mod quad;
pub mod regression;
pub mod svg;
pub mod sweep;

pub use correlators::{CorrelatorEngine, CorrelatorValue, Provenance, TimeTuple};
pub use error::{Error, Result};
pub use filter::FilterSpec;
pub use liouville::{DerivedRates, Op, RateSet, StateVector, Superoperator};
pub use metrics::limits::Limit;
pub use metrics::{Estimate, IntegrationConfig, Metric, MetricRecord, Outcome, PathSelector};
pub use oracles::OracleReport;
pub use presets::PlotSpec;
pub use sweep::{Axis, Param, PointParams, PointResult, RunManifest, Scale, SweepGrid, SweepTable};
