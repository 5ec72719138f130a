//! Closed-form bounds on attainable robustness and average distances.
//!
//! Sizes follow the norm conventions of [`crate::image_space`]: channel
//! counts for `p = 0`, real-valued `p`-norms otherwise.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::image_space::MAX_BIT_DEPTH;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundQuery {
    /// Target robust fraction in `(0, 1)`.
    pub r: f64,
    pub p: u32,
    pub n: u32,
    pub h: u32,
    pub b: u32,
}

impl BoundQuery {
    pub fn new(r: f64, p: u32, n: u32, h: u32, b: u32) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidParams(format!("r must lie in (0, 1) (got {r})")));
        }
        if n == 0 || h == 0 || b == 0 {
            return Err(Error::InvalidParams(format!(
                "n, h, b must be positive (got {n}, {h}, {b})"
            )));
        }
        Ok(BoundQuery { r, p, n, h, b })
    }

    /// `c` at which `2 exp(-2 c^2) = r`.
    pub fn c_count(&self) -> f64 {
        ((2.0 / self.r).ln() / 2.0).sqrt()
    }

    /// `c` at which `2 exp(-c^2 / 2) = r`.
    pub fn c_cell(&self) -> f64 {
        (2.0 * (2.0 / self.r).ln()).sqrt()
    }

    /// `c` at which `1 - 4c = r`.
    pub fn c_lower(&self) -> f64 {
        (1.0 - self.r) / 4.0
    }

    fn root_h_n(&self) -> f64 {
        (self.h as f64).sqrt() * self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperTerm {
    /// Count-norm expansion in the Hamming graph.
    Isoperimetric,
    /// The cell-based perturbation search.
    Discretization,
}

impl UpperTerm {
    pub fn as_str(&self) -> &'static str {
        match self {
            UpperTerm::Isoperimetric => "isoperimetric",
            UpperTerm::Discretization => "discretization",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperBound {
    pub size: f64,
    /// `2 + c sqrt(h) n`, raised to `1/p` for `p >= 2`.
    pub isoperimetric: f64,
    /// `(c' + 2 sqrt(h) n / 2^b)^(2/p)`; only for `p >= 2`.
    pub discretization: Option<f64>,
    pub term: UpperTerm,
}

/// `2 + c sqrt(h) n`: channel changes that leave at most a `2 exp(-2 c^2)`
/// fraction of any interesting class robust.
pub fn count_norm_size(c: f64, h: u32, n: u32) -> f64 {
    2.0 + c * (h as f64).sqrt() * n as f64
}

/// Size of perturbation to which no interesting class is `r`-robust.
pub fn upper_bound(q: &BoundQuery) -> UpperBound {
    let base = count_norm_size(q.c_count(), q.h, q.n);
    if q.p <= 1 {
        return UpperBound {
            size: base,
            isoperimetric: base,
            discretization: None,
            term: UpperTerm::Isoperimetric,
        };
    }
    let p = q.p as f64;
    let iso = base.powf(1.0 / p);
    let cell = (q.c_cell() + 2.0 * q.root_h_n() / 2f64.powi(q.b as i32)).powf(2.0 / p);
    let (size, term) = if cell < iso {
        (cell, UpperTerm::Discretization)
    } else {
        (iso, UpperTerm::Isoperimetric)
    };
    UpperBound {
        size,
        isoperimetric: iso,
        discretization: Some(cell),
        term,
    }
}

pub fn upper_bound_size(q: &BoundQuery) -> f64 {
    upper_bound(q).size
}

/// Size of perturbation to which some classifier's class is `r`-robust.
pub fn lower_bound_size(q: &BoundQuery) -> f64 {
    let base = (-2.0 + q.c_lower() * q.root_h_n()).max(0.0);
    if q.p <= 1 {
        base
    } else {
        base.powf(1.0 / q.p as f64) / (2f64.powi(q.b as i32) - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvgDistanceConstant {
    /// `E|X - Y|^max(1,p)` for independent uniform channel values.
    #[serde(serialize_with = "crate::serde_util::display")]
    pub k_bp: BigRational,
    pub k_hbp: f64,
}

/// Constants of the average-distance lower bound.
pub fn avg_distance_constant(h: u32, b: u32, p: u32) -> Result<AvgDistanceConstant> {
    if b == 0 || b > MAX_BIT_DEPTH {
        return Err(Error::BitDepthTooLarge(b));
    }
    let q = 1u64 << b;
    let m = q - 1;
    let e = p.max(1);
    // sum over ordered pairs: 2 * sum_d (q - d) d^e
    let mut total = BigInt::zero();
    for d in 1..q {
        total += BigInt::from(2 * (q - d)) * num_traits::pow(BigInt::from(d), e as usize);
    }
    let den = BigInt::from(q * q) * num_traits::pow(BigInt::from(m), e as usize);
    let k_bp = BigRational::new(total, den);
    let k = k_bp.to_f64().unwrap_or(f64::NAN);
    let k_hbp = k / (2.0 - k) * (h as f64 * k / 2.0).powf(1.0 / e as f64);
    Ok(AvgDistanceConstant { k_bp, k_hbp })
}

/// `k_hbp n^(2 / max(1, p))`.
pub fn avg_distance_lower_bound(n: u32, h: u32, b: u32, p: u32) -> Result<f64> {
    let k = avg_distance_constant(h, b, p)?;
    Ok(k.k_hbp * (n as f64).powf(2.0 / p.max(1) as f64))
}

/// Rounds to `digits` significant decimal digits (round half to even on the
/// decimal representation).
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .expect("formatted float parses")
}

/// Significant digits kept in bound tables.
pub const TABLE_DIGITS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub p: u32,
    pub upper_size: f64,
    pub lower_size: f64,
    pub c_upper: f64,
    pub c_lower: f64,
    pub dominating_term: UpperTerm,
}

/// Column names of [`BoundRow::csv_record`].
pub const BOUNDS_CSV_HEADER: [&str; 6] =
    ["p", "upper_size", "lower_size", "c_upper", "c_lower", "dominating_term"];

impl BoundRow {
    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.p.to_string(),
            self.upper_size.to_string(),
            self.lower_size.to_string(),
            self.c_upper.to_string(),
            self.c_lower.to_string(),
            self.dominating_term.as_str().to_string(),
        ]
    }
}

/// One row per `p`, values rounded to [`TABLE_DIGITS`] significant digits.
/// `c_upper` is the `c` of the dominating term.
pub fn bounds_table(r: f64, n: u32, h: u32, b: u32, ps: &[u32]) -> Result<Vec<BoundRow>> {
    ps.iter()
        .map(|&p| {
            let q = BoundQuery::new(r, p, n, h, b)?;
            let up = upper_bound(&q);
            let c_upper = match up.term {
                UpperTerm::Isoperimetric => q.c_count(),
                UpperTerm::Discretization => q.c_cell(),
            };
            Ok(BoundRow {
                p,
                upper_size: round_sig(up.size, TABLE_DIGITS),
                lower_size: round_sig(lower_bound_size(&q), TABLE_DIGITS),
                c_upper: round_sig(c_upper, TABLE_DIGITS),
                c_lower: round_sig(q.c_lower(), TABLE_DIGITS),
                dominating_term: up.term,
            })
        })
        .collect()
}

/// Smallest `n <= max_n` from which the upper bound stays at or above the
/// lower bound through `max_n`.
pub fn crossover_n(r: f64, h: u32, b: u32, p: u32, max_n: u32) -> Result<Option<u32>> {
    let mut first = None;
    for n in (1..=max_n).rev() {
        let q = BoundQuery::new(r, p, n, h, b)?;
        if upper_bound_size(&q) >= lower_bound_size(&q) {
            first = Some(n);
        } else {
            break;
        }
    }
    Ok(first)
}

/// Smallest `n <= max_n` at which the count-norm term becomes the smaller
/// of the two upper-bound terms (`p >= 2`).
pub fn term_crossover_n(r: f64, h: u32, b: u32, p: u32, max_n: u32) -> Result<Option<u32>> {
    if p < 2 {
        return Err(Error::InvalidParams(format!("p must be at least 2 (got {p})")));
    }
    for n in 1..=max_n {
        let q = BoundQuery::new(r, p, n, h, b)?;
        if upper_bound(&q).term == UpperTerm::Isoperimetric {
            return Ok(Some(n));
        }
    }
    Ok(None)
}
