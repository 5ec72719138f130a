use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};

/// Relative padding applied after every floating-point operation.
///
/// Covers the rounding of a correctly rounded operation (half an ulp) and
/// of `exp`/`ln` from the platform libm (documented within one ulp), with
/// a factor of two to spare.
const SLACK: f64 = 4.0 * f64::EPSILON;

/// A closed interval `[lo, hi]` known to contain a real quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

fn pad_down(x: f64) -> f64 {
    x - x.abs() * SLACK - f64::MIN_POSITIVE
}

fn pad_up(x: f64) -> f64 {
    x + x.abs() * SLACK + f64::MIN_POSITIVE
}

impl Enclosure {
    /// Encloses a value that is exactly representable.
    pub fn exact(x: f64) -> Self {
        Enclosure { lo: x, hi: x }
    }

    /// Encloses the result of one rounded operation that produced `x`.
    pub fn rounded(x: f64) -> Self {
        Enclosure {
            lo: pad_down(x),
            hi: pad_up(x),
        }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted enclosure [{lo}, {hi}]");
        Enclosure {
            lo: pad_down(lo),
            hi: pad_up(hi),
        }
    }

    pub fn from_rational(q: &BigRational) -> Self {
        Self::rounded(q.to_f64().unwrap_or(f64::NAN))
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    /// Half-width relative to the magnitude of the midpoint.
    pub fn relative_radius(&self) -> f64 {
        let m = self.mid().abs();
        if m == 0.0 {
            self.radius()
        } else {
            self.radius() / m
        }
    }

    /// Product of two enclosures with non-negative lower ends.
    pub fn mul_nonneg(self, o: Self) -> Self {
        debug_assert!(self.lo >= 0.0 && o.lo >= 0.0);
        Self::new(self.lo * o.lo, self.hi * o.hi)
    }

    /// Quotient of two enclosures with strictly positive lower ends.
    pub fn div_pos(self, o: Self) -> Self {
        debug_assert!(self.lo >= 0.0 && o.lo > 0.0);
        Self::new(self.lo / o.hi, self.hi / o.lo)
    }

    pub fn scale(self, k: f64) -> Self {
        if k >= 0.0 {
            Self::new(self.lo * k, self.hi * k)
        } else {
            Self::new(self.hi * k, self.lo * k)
        }
    }

    pub fn exp(self) -> Self {
        Self::new(self.lo.exp(), self.hi.exp())
    }
}

impl std::ops::Add for Enclosure {
    type Output = Enclosure;

    fn add(self, o: Self) -> Self {
        Self::new(self.lo + o.lo, self.hi + o.hi)
    }
}

impl std::ops::Sub for Enclosure {
    type Output = Enclosure;

    fn sub(self, o: Self) -> Self {
        Self::new(self.lo - o.hi, self.hi - o.lo)
    }
}

/// Decides `margin > 0` where `margin` carries an absolute error of at most
/// `error`. The decision is accepted only when `|margin| > 2 * error`.
pub fn certify(context: impl FnOnce() -> String, margin: f64, error: f64) -> Result<bool> {
    if margin > 2.0 * error {
        Ok(true)
    } else if margin < -2.0 * error {
        Ok(false)
    } else {
        Err(Error::PrecisionInsufficient {
            context: context(),
            margin,
            error,
        })
    }
}

/// Decides `a < b` for two enclosures.
pub(crate) fn certify_lt(
    context: impl FnOnce() -> String,
    a: Enclosure,
    b: Enclosure,
) -> Result<bool> {
    certify(context, b.mid() - a.mid(), a.radius() + b.radius())
}
