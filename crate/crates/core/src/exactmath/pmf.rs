use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::binomial::TailTable;
use crate::error::{Error, Result};
use crate::par;

/// Default cap on the number of support points of a convolution.
pub const DEFAULT_SUPPORT_CAP: u128 = 1 << 24;

/// Exact probability mass function on a contiguous integer grid.
///
/// Support point `i` sits at `(offset + i) / scale`. Masses are held as
/// integer weights over one common denominator; the weights always sum to
/// the denominator exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscretePmf {
    offset: i64,
    scale: u64,
    weights: Vec<BigUint>,
    denominator: BigUint,
}

impl DiscretePmf {
    /// Builds a PMF on unit grid spacing from explicit masses.
    pub fn from_masses(offset: i64, masses: &[BigRational]) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidParams("empty mass list".into()));
        }
        if masses.iter().any(|m| m.is_negative()) {
            return Err(Error::InvalidParams("negative mass".into()));
        }
        let den = masses
            .iter()
            .fold(BigInt::one(), |acc, m| acc.lcm(m.denom()));
        let weights: Vec<BigUint> = masses
            .iter()
            .map(|m| {
                (m.numer() * (&den / m.denom()))
                    .to_biguint()
                    .expect("non-negative")
            })
            .collect();
        Self::from_weights(offset, 1, weights, den.to_biguint().expect("positive"))
    }

    /// Builds a PMF from integer weights over `denominator`.
    pub fn from_weights(
        offset: i64,
        scale: u64,
        weights: Vec<BigUint>,
        denominator: BigUint,
    ) -> Result<Self> {
        if scale == 0 {
            return Err(Error::InvalidParams("grid scale must be positive".into()));
        }
        let total = weights.iter().fold(BigUint::zero(), |acc, w| acc + w);
        if weights.is_empty() || total != denominator {
            return Err(Error::InvalidParams(format!(
                "masses sum to {total}/{denominator}, not 1"
            )));
        }
        Ok(DiscretePmf {
            offset,
            scale,
            weights,
            denominator,
        })
    }

    /// Point mass at grid point `at`.
    pub fn point(at: i64) -> Self {
        DiscretePmf {
            offset: at,
            scale: 1,
            weights: vec![BigUint::one()],
            denominator: BigUint::one(),
        }
    }

    /// Reinterprets the grid with `scale` points per unit.
    pub fn with_scale(mut self, scale: u64) -> Result<Self> {
        if scale == 0 {
            return Err(Error::InvalidParams("grid scale must be positive".into()));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    /// Number of support points (including interior zero masses).
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[BigUint] {
        &self.weights
    }

    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    pub fn mass(&self, i: usize) -> BigRational {
        BigRational::new(
            BigInt::from(self.weights[i].clone()),
            BigInt::from(self.denominator.clone()),
        )
    }

    pub fn masses(&self) -> Vec<BigRational> {
        (0..self.len()).map(|i| self.mass(i)).collect()
    }

    /// Value of support point `i`, in real units.
    pub fn value(&self, i: usize) -> BigRational {
        BigRational::new(
            BigInt::from(self.offset + i as i64),
            BigInt::from(self.scale),
        )
    }

    /// `Pr[V <= g / scale]` for a grid point `g`.
    pub fn cdf_grid(&self, g: i64) -> BigRational {
        let last = g - self.offset;
        if last < 0 {
            return BigRational::zero();
        }
        let upto = (last as usize).min(self.len() - 1);
        let w = self.weights[..=upto]
            .iter()
            .fold(BigUint::zero(), |acc, x| acc + x);
        BigRational::new(BigInt::from(w), BigInt::from(self.denominator.clone()))
    }

    /// `Pr[V <= x]` for a real threshold `x`.
    pub fn cdf(&self, x: &BigRational) -> BigRational {
        let g = (x * BigRational::from_integer(BigInt::from(self.scale))).floor();
        match g.to_integer().to_i64() {
            Some(g) => self.cdf_grid(g),
            None if x.is_negative() => BigRational::zero(),
            None => BigRational::one(),
        }
    }

    /// True iff the distribution is symmetric about the origin.
    pub fn is_symmetric(&self) -> bool {
        let len = self.len() as i64;
        if 2 * self.offset + len - 1 != 0 {
            return false;
        }
        self.weights
            .iter()
            .zip(self.weights.iter().rev())
            .all(|(a, b)| a == b)
    }

    pub fn mean(&self) -> BigRational {
        let num = self
            .weights
            .iter()
            .enumerate()
            .fold(BigInt::zero(), |acc, (i, w)| {
                acc + BigInt::from(w.clone()) * (self.offset + i as i64)
            });
        BigRational::new(num, BigInt::from(self.denominator.clone()) * self.scale)
    }

    /// Same distribution on a grid `factor` times finer.
    pub fn refined(&self, factor: u64) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidParams("refinement factor must be positive".into()));
        }
        let len = (self.len() - 1) * factor as usize + 1;
        let mut weights = vec![BigUint::zero(); len];
        for (i, w) in self.weights.iter().enumerate() {
            weights[i * factor as usize] = w.clone();
        }
        Ok(DiscretePmf {
            offset: self.offset * factor as i64,
            scale: self.scale * factor,
            weights,
            denominator: self.denominator.clone(),
        })
    }
}

/// Uniform PMF on `{0, ..., levels-1}`.
pub fn pmf_uniform_levels(levels: u64) -> Result<DiscretePmf> {
    if levels == 0 {
        return Err(Error::InvalidParams("levels must be positive".into()));
    }
    Ok(DiscretePmf {
        offset: 0,
        scale: 1,
        weights: vec![BigUint::one(); levels as usize],
        denominator: BigUint::from(levels),
    })
}

fn check_cap(len: u128, cap: u128) -> Result<()> {
    if len > cap {
        Err(Error::SupportCapExceeded {
            requested: len,
            cap,
        })
    } else {
        Ok(())
    }
}

fn poly_mul(a: &[BigUint], b: &[BigUint]) -> Vec<BigUint> {
    let len = a.len() + b.len() - 1;
    par::map_range(0..len as u64, |s| {
        let s = s as usize;
        let lo = s.saturating_sub(b.len() - 1);
        let hi = s.min(a.len() - 1);
        let mut acc = BigUint::zero();
        for i in lo..=hi {
            if !a[i].is_zero() && !b[s - i].is_zero() {
                acc += &a[i] * &b[s - i];
            }
        }
        acc
    })
}

/// Distribution of the sum of two independent variables on the same grid.
pub fn convolve(a: &DiscretePmf, b: &DiscretePmf, cap: u128) -> Result<DiscretePmf> {
    if a.scale != b.scale {
        return Err(Error::InvalidParams(format!(
            "grid scales differ ({} vs {})",
            a.scale, b.scale
        )));
    }
    check_cap((a.len() + b.len() - 1) as u128, cap)?;
    Ok(DiscretePmf {
        offset: a.offset + b.offset,
        scale: a.scale,
        weights: poly_mul(&a.weights, &b.weights),
        denominator: &a.denominator * &b.denominator,
    })
}

/// Exact distribution of the sum of `count` independent copies of `base`.
///
/// Uses binary powering of the weight polynomial; the result is exact and
/// independent of how the inner products are scheduled.
pub fn pmf_iid_sum(base: &DiscretePmf, count: u64, cap: u128) -> Result<DiscretePmf> {
    if count == 0 {
        return Err(Error::InvalidParams("count must be positive".into()));
    }
    let width = base.len() as u128;
    check_cap(count as u128 * (width - 1) + 1, cap)?;
    let mut result: Option<DiscretePmf> = None;
    let mut square = base.clone();
    let mut remaining = count;
    loop {
        if remaining & 1 == 1 {
            result = Some(match result {
                None => square.clone(),
                Some(r) => convolve(&r, &square, cap)?,
            });
        }
        remaining >>= 1;
        if remaining == 0 {
            break;
        }
        square = convolve(&square, &square, u128::MAX)?;
    }
    Ok(result.expect("count >= 1"))
}

/// Both sides of the binomial-spread inequality
/// `Pr[X + Y <= t] >= Pr[X < t]` for `X ~ Binomial(n, 1/2)`.
pub fn binomial_spread_sides(
    n: u64,
    sym_y: &DiscretePmf,
    t: &BigRational,
) -> Result<(BigRational, BigRational)> {
    if !sym_y.is_symmetric() {
        return Err(Error::AsymmetricY);
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    // t = n/2 (odd n) is admitted: X is symmetric about t there, so the
    // inequality still holds with equality for a degenerate Y
    if t.clone() - t.floor() != half || *t > BigRational::from_integer(BigInt::from(n)) * &half {
        return Err(Error::PreconditionViolated(format!(
            "t = {t} must be a half-integer at most n/2 = {n}/2"
        )));
    }
    let table = TailTable::new(n, &half)?;
    let weights: Vec<BigUint> = (0..=n as i64)
        .map(|i| table.numerator(i) - table.numerator(i - 1))
        .collect();
    let x = DiscretePmf::from_weights(0, 1, weights, table.denominator().clone())?;
    let x_fine = x.refined(sym_y.scale())?;
    let sum = convolve(&x_fine, sym_y, u128::MAX)?;
    let lhs = sum.cdf(t);
    let rhs = table.tail(t.floor().to_integer().to_i64().expect("small t"));
    Ok((lhs, rhs))
}

pub fn binomial_spread_holds(n: u64, sym_y: &DiscretePmf, t: &BigRational) -> Result<bool> {
    let (lhs, rhs) = binomial_spread_sides(n, sym_y, t)?;
    Ok(lhs >= rhs)
}

/// Distribution of the sum of `n` independent uniforms on `levels` evenly
/// spaced points of `[0, 1]`, on the grid of step `1/(levels-1)`.
pub fn uniform_grid_sum(n: u64, levels: u64, cap: u128) -> Result<DiscretePmf> {
    if levels < 2 || levels % 2 == 1 {
        return Err(Error::PreconditionViolated(format!(
            "level count {levels} must be even and at least 2"
        )));
    }
    let base = pmf_uniform_levels(levels)?.with_scale(levels - 1)?;
    pmf_iid_sum(&base, n, cap)
}

/// Left side of the anti-concentration inequality,
/// `Pr[sum X_i <= n E[X] - t + 1]` for `X_i` uniform on `levels` evenly
/// spaced points of `[0, 1]`.
pub fn anti_concentration_lhs(
    n: u64,
    levels: u64,
    t: &BigRational,
    cap: u128,
) -> Result<BigRational> {
    let sum = uniform_grid_sum(n, levels, cap)?;
    sum_lhs(&sum, n, t)
}

fn sum_lhs(sum: &DiscretePmf, n: u64, t: &BigRational) -> Result<BigRational> {
    if !t.is_positive() {
        return Err(Error::PreconditionViolated(format!("t = {t} must be positive")));
    }
    let mean = BigRational::new(BigInt::from(n), BigInt::from(2));
    Ok(sum.cdf(&(mean - t + BigRational::one())))
}

/// `Pr[sum X_i <= n E[X] - t + (b - a)] > 1/2 - 2t / (sqrt(n) (b - a))` with
/// `a = 0`, `b = 1`. Both sides are compared exactly: with `g = 1/2 - lhs`
/// the inequality is `2t/sqrt(n) > g`, i.e. `g < 0` or `4 t^2 > n g^2`.
pub fn anti_concentration_holds(n: u64, levels2k: u64, t: &BigRational, cap: u128) -> Result<bool> {
    anti_concentration_holds_for(&uniform_grid_sum(n, levels2k, cap)?, n, t)
}

/// [`anti_concentration_holds`] for a precomputed [`uniform_grid_sum`].
pub fn anti_concentration_holds_for(sum: &DiscretePmf, n: u64, t: &BigRational) -> Result<bool> {
    let lhs = sum_lhs(sum, n, t)?;
    let gap = BigRational::new(BigInt::one(), BigInt::from(2)) - lhs;
    if !gap.is_positive() {
        return Ok(true);
    }
    let four_t2 = t * t * BigInt::from(4);
    Ok(four_t2 > &gap * &gap * BigInt::from(n))
}
