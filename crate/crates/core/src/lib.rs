//! Hamiltonian dynamics on Lie algebroids in local charts.
//!
//! A [`ChartedAlgebroid`] carries an anchor and structure functions over a chart of the
//! base. Its dual carries a linear Poisson structure; the crate integrates Hamilton's
//! equations for it, computes modular sections, checks unimodularity certificates and
//! measures how the flow changes phase-space volumes.

// Non-finite inputs must fail validation, so comparisons are written to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebroid;
pub mod cli;
pub mod error;
pub mod expr;
pub mod fd;
pub mod fields;
pub mod integrate;
pub mod models;
pub mod modular;
pub mod poisson;
pub mod sampling;
pub mod volume_flow;

pub use algebroid::{BaseChart, ChartedAlgebroid, CovectorField, StructureTensor};
pub use error::{Error, Result};
pub use fields::{BaseField, ScalarPhaseField};
pub use integrate::{integrate, IntegratorConfig, Monitor, Trajectory};
pub use models::ModelBundle;
pub use modular::{PhaseDensity, UnimodularityCertificate, VolumeSpec};
pub use poisson::{Hamiltonian, MechanicalHamiltonian, PhasePoint};
pub use volume_flow::FlowHamiltonian;
