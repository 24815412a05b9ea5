//! Numerical toolkit for general varifolds in Euclidean space.
//!
//! Varifolds are represented atomically ([`DiscreteVarifold`]) or by exact
//! parametric families ([`AnalyticFamily`]). On top of them the crate computes
//! weight measures, first variations, the maximal-type function and weighted
//! medians, and checks isoperimetric, Sobolev and Poincaré type inequalities
//! together with the blow-up families that bound their strengthenings.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod geom;
pub mod inequalities;
pub mod maximal;
pub mod spatial;
pub mod variation;
pub mod varifold;

pub use error::{Error, Result};
pub use experiment::{run, write_outputs, Config, Experiment, FamilySpec, FunctionSpec, RunOutput};
pub use geom::{gamma_disc_lower, gamma_upper, unit_ball_volume, Constants, Point, Subspace, Tolerances};
pub use inequalities::{
    BlowupKind, BlowupSeries, ConservativeFlag, DeltaSource, DeltaValue, Direction, GammaBound, LemmaSuiteReport, Side,
    VerificationReport,
};
pub use maximal::{CenterStrategy, MaximalParams, MedianParams};
pub use spatial::SpatialIndex;
pub use varifold::{
    AnalyticFamily, Atom, Ball, DeltaMeasure, DiscreteVarifold, FlatDisc, PlaneBundle, ProductSlab, SphereShell,
};
