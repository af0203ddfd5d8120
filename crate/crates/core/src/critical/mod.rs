//! Enumeration of the complex critical points of the Rayleigh quotient on
//! a tensor-train variety.

mod certify;
mod classify;
mod closed_form;
mod enumerate;
mod monodromy;
mod realcount;
mod rnc;
mod system;
mod tracker;

pub use certify::{
    bw_residual_at, bw_stationarity_residual, lagrangian_rank_residual, MAX_MINOR_ROWS,
};
pub use classify::{
    classify_point, rayleigh_hessian, Classification, ExtremumClass, DEFINITENESS_MARGIN,
};
pub use closed_form::{closed_form_for, closed_form_rr_degree, Family};
pub use enumerate::{
    base_fiber, enumerate, enumerate_from, EnumerateConfig, Enumeration, Residuals, Solution,
    BORDERLINE_TOL, REAL_TOL, TRANSFER_ATTEMPTS,
};
pub use monodromy::{
    base_point, find_seeds, monodromy_solve, real_to_complex, rr_degree_count, transfer_solutions,
    MonodromyConfig, MonodromyResult, RrDegreeReport, SolutionSet, StopReason, Transfer, DEDUP_TOL,
};
pub use realcount::{
    p1_discriminant, real_count, real_count_experiment, RealCountReport, SampleFailure, VarietySpec,
};
pub use rnc::{
    rnc_critical_polynomial, rnc_energy, rnc_solve, RncCritical, RncPolynomial, RncReport,
};
pub use system::{to_complex, CMatrix, CVector, CriticalSystem, Linearization, C64};
pub use tracker::{track_path, track_segment, PathFailure, Segment, Tracked, TrackerConfig};
