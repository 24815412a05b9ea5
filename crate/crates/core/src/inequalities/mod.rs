//! Verification of the isoperimetric, Sobolev and Poincaré inequalities,
//! the lemmas behind them, and the examples bounding their strengthenings.

pub mod blowup;
pub mod gamma;
pub mod lemmas;
pub mod report;
pub mod structure;
pub mod theorems;

pub use blowup::{lebesgue_scaling, median_contrast, plane_bundle, sobolev_vs_iso, BlowupKind};
pub use gamma::{gamma_lower_bound, GammaBound};
pub use report::{BlowupSeries, ConservativeFlag, Direction, LemmaSuiteReport, Side, VerificationReport};
pub use structure::decomposition_check;
pub use theorems::{
    delta_total, verify_ball_iso, verify_isoperimetric, verify_poincare, verify_size_iso, verify_sobolev_avg,
    verify_sobolev_rect, DeltaSource, DeltaValue, SobolevAveraged,
};
