//! Exact combinatorics, binomial tails, exact PMF convolution, and checkers
//! for the scalar inequalities the robustness bounds rest on.

mod binomial;
mod gaussian;
mod interval;
mod pmf;

pub use binomial::{
    binom, binomial_tail, binomial_tail_real, harper_rhs, hoeffding_bound, hoeffding_ratio_holds,
    hoeffding_sweep, mode_bound_holds, mode_bound_sweep, solve_p_for_tail, tail_ratio,
    tail_ratio_monotone_sweep, HoeffdingSweep, ModeBoundSweep, MonotoneSweep, TailQuery,
    TailTable,
};
pub use gaussian::{
    gaussian_checks, phi_enclosure, GaussianCheckKind, GaussianFailure, GaussianReport,
};
pub use interval::{certify, Enclosure};
pub(crate) use interval::certify_lt;
pub use pmf::{
    anti_concentration_holds, anti_concentration_holds_for, anti_concentration_lhs,
    binomial_spread_holds, binomial_spread_sides, convolve, pmf_iid_sum, pmf_uniform_levels,
    uniform_grid_sum, DiscretePmf, DEFAULT_SUPPORT_CAP,
};

use num_bigint::BigInt;
use num_rational::BigRational;

/// Arbitrary-precision rational in lowest terms with a positive denominator.
pub type ExactRational = BigRational;

/// Builds the rational `num/den`.
pub fn ratio(num: i64, den: i64) -> ExactRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
