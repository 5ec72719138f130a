use serde::Serialize;

use super::interval::{certify, certify_lt, Enclosure};
use crate::error::{Error, Result};

const U: f64 = f64::EPSILON * 0.5;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// Below this point the continued fraction is used instead of the series.
const SERIES_LIMIT: f64 = -1.5;
const MAX_CF_DEPTH: usize = 1 << 16;

fn density(x: f64) -> Enclosure {
    let sq = Enclosure::rounded(x * x).scale(-0.5);
    sq.exp().mul_nonneg(Enclosure::rounded(INV_SQRT_2PI))
}

/// `sum_j |x|^(2j+1) / (1*3*...*(2j+1))`, so that
/// `Phi(x) = 1/2 + sign(x) * density(x) * series`.
fn odd_series(a: f64) -> Enclosure {
    let a2 = a * a;
    let mut term = a;
    let mut sum = a;
    let mut j = 0u32;
    loop {
        j += 1;
        let q = a2 / (2 * j + 1) as f64;
        term *= q;
        sum += term;
        if q < 0.5 && term < sum * 1e-18 {
            let next_q = a2 / (2 * j + 3) as f64;
            let remainder = term * next_q / (1.0 - next_q);
            let rel = (4 * j + 8) as f64 * U;
            return Enclosure::new(sum * (1.0 - rel), sum * (1.0 + rel) + remainder);
        }
    }
}

/// Convergent of `1/(t + 1/(t + 2/(t + ...)))` truncated after `depth`
/// partial numerators.
fn mills_convergent(t: f64, depth: usize) -> f64 {
    let mut g = t;
    for j in (1..=depth).rev() {
        g = t + j as f64 / g;
    }
    1.0 / g
}

/// Mills ratio `(1 - Phi(t)) / density(t)` for `t > 0`, bracketed by two
/// consecutive convergents of the Laplace continued fraction.
fn mills_ratio(t: f64) -> Enclosure {
    let mut depth = 16;
    loop {
        let a = mills_convergent(t, depth);
        let b = mills_convergent(t, depth + 1);
        let (lo, hi) = (a.min(b), a.max(b));
        if hi - lo <= lo * 1e-16 || depth >= MAX_CF_DEPTH {
            let rel = (2 * depth + 4) as f64 * U;
            return Enclosure::new(lo * (1.0 - rel), hi * (1.0 + rel));
        }
        depth *= 2;
    }
}

/// Enclosure of the standard normal CDF at `x`.
pub fn phi_enclosure(x: f64) -> Enclosure {
    if x == 0.0 {
        return Enclosure::exact(0.5);
    }
    if x >= SERIES_LIMIT {
        let tail = density(x).mul_nonneg(odd_series(x.abs()));
        if x > 0.0 {
            Enclosure::exact(0.5) + tail
        } else {
            Enclosure::exact(0.5) - tail
        }
    } else {
        density(x).mul_nonneg(mills_ratio(-x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianCheckKind {
    /// `Phi(x-k)/Phi(x)` nondecreasing between consecutive grid points.
    RatioMonotone,
    /// `Phi(x) < exp(-x^2/2)` for `x <= 1/2`.
    TailBound,
    /// `Phi(1/2 - c)/Phi(1/2) < 2 exp(-c^2/2)`.
    RatioAtHalf,
    /// `Phi(-c)/Phi(0) < 2 exp(-c^2/2)`, the comparison point forced by a
    /// set of measure at most 1/2.
    RatioAtZero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianFailure {
    pub kind: GaussianCheckKind,
    pub x: f64,
    pub k: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GaussianReport {
    pub monotone_checked: u64,
    pub tail_checked: u64,
    pub half_checked: u64,
    pub zero_checked: u64,
    /// Largest relative half-width of any `Phi` enclosure used.
    pub max_relative_error: f64,
    /// Smallest relative margin seen per check family, in the order
    /// monotone, tail, half, zero.
    pub min_relative_margin: [f64; 4],
    pub failures: Vec<GaussianFailure>,
}

impl GaussianReport {
    pub fn all_hold(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Evaluator {
    precision: f64,
    max_rel: f64,
}

impl Evaluator {
    fn phi(&mut self, x: f64) -> Result<Enclosure> {
        let e = phi_enclosure(x);
        let rel = e.relative_radius();
        if rel.is_nan() || rel > self.precision {
            return Err(Error::PrecisionInsufficient {
                context: format!("Phi({x})"),
                margin: self.precision,
                error: rel,
            });
        }
        self.max_rel = self.max_rel.max(rel);
        Ok(e)
    }
}

fn two_exp_neg_half_sq(c: f64) -> Enclosure {
    Enclosure::rounded(c * c).scale(-0.5).exp().scale(2.0)
}

/// Runs the scalar Gaussian checks on `grid` (ascending) and `k_grid`.
///
/// Every `Phi` value must be enclosed to relative half-width `precision`,
/// and every comparison must clear twice its error bound; otherwise the
/// run stops with [`Error::PrecisionInsufficient`].
pub fn gaussian_checks(grid: &[f64], k_grid: &[f64], precision: f64) -> Result<GaussianReport> {
    if grid.iter().chain(k_grid).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("grid points must be finite".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams("grid must be strictly ascending".into()));
    }
    let mut ev = Evaluator {
        precision,
        max_rel: 0.0,
    };
    let mut report = GaussianReport {
        min_relative_margin: [f64::INFINITY; 4],
        ..Default::default()
    };
    let note = |report: &mut GaussianReport,
                    kind: GaussianCheckKind,
                    x: f64,
                    k: f64,
                    holds: bool,
                    margin: f64| {
        let slot = kind as usize;
        report.min_relative_margin[slot] = report.min_relative_margin[slot].min(margin);
        if !holds {
            report.failures.push(GaussianFailure { kind, x, k, margin });
        }
    };

    let phis: Vec<Enclosure> = grid.iter().map(|&x| ev.phi(x)).collect::<Result<_>>()?;
    for &k in k_grid {
        let mut prev: Option<(f64, Enclosure)> = None;
        for (&x, &px) in grid.iter().zip(&phis) {
            let ratio = ev.phi(x - k)?.div_pos(px);
            if let Some((xp, rp)) = prev {
                report.monotone_checked += 1;
                // nondecreasing: the later ratio must not fall below the earlier
                let holds = !certify_lt(|| format!("ratio at x={x}, k={k}"), ratio, rp)?;
                note(
                    &mut report,
                    GaussianCheckKind::RatioMonotone,
                    xp,
                    k,
                    holds,
                    (ratio.mid() - rp.mid()) / rp.mid(),
                );
            }
            prev = Some((x, ratio));
        }
    }

    for (&x, &px) in grid.iter().zip(&phis) {
        if x > 0.5 {
            continue;
        }
        report.tail_checked += 1;
        let bound = Enclosure::rounded(x * x).scale(-0.5).exp();
        let holds = certify_lt(|| format!("tail bound at x={x}"), px, bound)?;
        note(
            &mut report,
            GaussianCheckKind::TailBound,
            x,
            0.0,
            holds,
            (bound.mid() - px.mid()) / bound.mid(),
        );
    }

    let at_half = ev.phi(0.5)?;
    for &c in k_grid {
        let bound = two_exp_neg_half_sq(c);
        for (kind, z, base) in [
            (GaussianCheckKind::RatioAtHalf, 0.5, at_half),
            (GaussianCheckKind::RatioAtZero, 0.0, Enclosure::exact(0.5)),
        ] {
            let ratio = ev.phi(z - c)?.div_pos(base);
            let holds = certify(
                || format!("{kind:?} at c={c}"),
                bound.mid() - ratio.mid(),
                bound.radius() + ratio.radius(),
            )?;
            match kind {
                GaussianCheckKind::RatioAtHalf => report.half_checked += 1,
                _ => report.zero_checked += 1,
            }
            note(
                &mut report,
                kind,
                z,
                c,
                holds,
                (bound.mid() - ratio.mid()) / bound.mid(),
            );
        }
    }
    report.max_relative_error = ev.max_rel;
    Ok(report)
}
