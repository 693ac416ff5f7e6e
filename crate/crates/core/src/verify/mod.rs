//! Empirical checks of certificates and inequalities against trajectories.
//! Every tolerance is derived from the trajectory's error estimate.

mod fejer;
mod inequalities;
mod meta;
mod rates;
mod report;
mod solution;

pub use fejer::{check_fejer, ErrorModel, FejerSpec};
pub use inequalities::{
    check_approximate_zeros, check_fb_b_inequality, check_mayer, check_objective_rate, check_second_order_bounds, check_stojkovic_fixed_point,
    extract_approximate_zero, real_inequality_bound, ApproximateZero, MayerSample,
};
pub use meta::{oscillation, verify_metastability, verify_windowed_bound, Oscillation};
pub use rates::{check_asymptotic_regularity, check_b_convergence, check_convergence_rate, check_exponential_rate, check_tail_bound, Target};
pub use report::{Status, VerificationReport, SAMPLED};
pub use solution::{level_points, LevelPoint, Restriction, SolutionFunction, SolutionKind};
