use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::interval::{certify_lt, Enclosure};
use crate::error::{Error, Result};
use crate::par;

/// Binomial coefficient extended to every integer `k`: zero outside `0..=n`.
pub fn binom(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `(n, k, p)` of the lower binomial tail `U_{n,p}(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailQuery {
    pub n: u64,
    pub k: i64,
    pub p: BigRational,
}

impl TailQuery {
    pub fn new(n: u64, k: i64, p: BigRational) -> Result<Self> {
        check_probability(&p)?;
        if n == 0 {
            return Err(Error::InvalidParams("trial count must be positive".into()));
        }
        Ok(TailQuery { n, k, p })
    }
}

fn check_probability(p: &BigRational) -> Result<()> {
    if !p.is_positive() || *p >= BigRational::one() {
        return Err(Error::InvalidParams(format!("p = {p} is not in (0, 1)")));
    }
    Ok(())
}

/// Every lower tail `U_{n,p}(0..=n)` of one binomial distribution.
///
/// Terms are accumulated as integers over the common denominator `den^n`
/// where `p = num/den`, so each tail is exact.
#[derive(Debug, Clone)]
pub struct TailTable {
    n: u64,
    p: BigRational,
    /// `cumulative[k] * p_den^-n = U(k)`
    cumulative: Vec<BigUint>,
    denominator: BigUint,
}

impl TailTable {
    pub fn new(n: u64, p: &BigRational) -> Result<Self> {
        check_probability(p)?;
        let a = p.numer().to_biguint().expect("positive numerator");
        let d = p.denom().to_biguint().expect("positive denominator");
        let b = &d - &a;
        let a_pows = powers(&a, n);
        let b_pows = powers(&b, n);
        let mut cumulative = Vec::with_capacity(n as usize + 1);
        let mut running = BigUint::zero();
        let mut coeff = BigUint::one();
        for i in 0..=n {
            if i > 0 {
                coeff = coeff * (n - i + 1) / i;
            }
            running += &coeff * &a_pows[i as usize] * &b_pows[(n - i) as usize];
            cumulative.push(running.clone());
        }
        let denominator = num_traits::pow(d, n as usize);
        debug_assert_eq!(cumulative[n as usize], denominator);
        Ok(TailTable {
            n,
            p: p.clone(),
            cumulative,
            denominator,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> &BigRational {
        &self.p
    }

    /// Integer numerator of `U(k)` over [`Self::denominator`].
    pub fn numerator(&self, k: i64) -> BigUint {
        if k < 0 {
            BigUint::zero()
        } else if k as u64 >= self.n {
            self.denominator.clone()
        } else {
            self.cumulative[k as usize].clone()
        }
    }

    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    pub fn tail(&self, k: i64) -> BigRational {
        BigRational::new(
            BigInt::from(self.numerator(k)),
            BigInt::from(self.denominator.clone()),
        )
    }

    /// `U(x - k) / U(x)`, exact.
    pub fn ratio(&self, x: i64, k: i64) -> Result<BigRational> {
        let den = self.numerator(x);
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(BigRational::new(
            BigInt::from(self.numerator(x - k)),
            BigInt::from(den),
        ))
    }
}

fn powers(base: &BigUint, n: u64) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut cur = BigUint::one();
    for _ in 0..=n {
        out.push(cur.clone());
        cur *= base;
    }
    out
}

/// `U_{n,p}(k) = sum_{i<=k} C(n,i) p^i (1-p)^(n-i)`; zero for `k < 0`.
pub fn binomial_tail(q: &TailQuery) -> BigRational {
    if q.k < 0 {
        return BigRational::zero();
    }
    if q.k as u64 >= q.n {
        return BigRational::one();
    }
    TailTable::new(q.n, &q.p)
        .expect("validated query")
        .tail(q.k)
}

/// `C(n, floor(n/2))^2 * n < 4^n`, the squared form of the central
/// binomial bound `C(n, k) < 2^n / sqrt(n)`.
pub fn mode_bound_holds(n: u64) -> bool {
    assert!(n >= 1, "mode bound needs n >= 1");
    central_bound_holds(n, &binom(n, (n / 2) as i64))
}

fn central_bound_holds(n: u64, central: &BigUint) -> bool {
    let lhs = central * central * n;
    let rhs = BigUint::one() << (2 * n) as usize;
    lhs < rhs
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModeBoundSweep {
    pub checked: u64,
    pub violations: Vec<u64>,
}

const MODE_CHUNK: u64 = 250;

/// Checks the central binomial bound for every `1 <= n <= max_n`.
///
/// Each chunk starts from a directly computed `C(n, floor(n/2))` and steps
/// it forward with `C(n+1, n/2) = C(n, n/2)(n+1)/(n/2+1)` for even `n` and
/// `C(n+1, (n+1)/2) = 2 C(n, (n-1)/2)` for odd `n`.
pub fn mode_bound_sweep(max_n: u64) -> ModeBoundSweep {
    let chunks = max_n.div_ceil(MODE_CHUNK);
    let parts = par::map_range(0..chunks, |c| {
        let start = c * MODE_CHUNK + 1;
        let end = ((c + 1) * MODE_CHUNK).min(max_n);
        let mut central = binom(start, (start / 2) as i64);
        let mut violations = Vec::new();
        for n in start..=end {
            if !central_bound_holds(n, &central) {
                violations.push(n);
            }
            if n % 2 == 0 {
                central = central * (n + 1) / (n / 2 + 1);
            } else {
                central <<= 1;
            }
        }
        (end + 1 - start, violations)
    });
    parts
        .into_iter()
        .fold(ModeBoundSweep::default(), |mut acc, (count, v)| {
            acc.checked += count;
            acc.violations.extend(v);
            acc
        })
}

/// `U_{n,p}(x - k) / U_{n,p}(x)`.
pub fn tail_ratio(n: u64, k: i64, p: &BigRational, x: i64) -> Result<BigRational> {
    if k < 1 || x < 0 || x as u64 > n {
        return Err(Error::PreconditionViolated(format!(
            "tail_ratio needs k >= 1 and 0 <= x <= n (n={n}, k={k}, x={x})"
        )));
    }
    TailTable::new(n, p)?.ratio(x, k)
}

/// Enclosure of `2 exp(-2 (k-1)^2 / n)`.
pub fn hoeffding_bound(n: u64, k: i64) -> Enclosure {
    let e = ((k - 1) * (k - 1)) as f64 * 2.0 / n as f64;
    Enclosure::rounded(-e).exp().scale(2.0)
}

/// Checks `U(r-k)/U(r) <= 2 exp(-2(k-1)^2/n)` for a tail at or below 1/2.
pub fn hoeffding_ratio_holds(n: u64, k: i64, p: &BigRational, r: i64) -> Result<bool> {
    let table = TailTable::new(n, p)?;
    hoeffding_check(&table, k, r, &hoeffding_bound)
}

fn hoeffding_check(
    table: &TailTable,
    k: i64,
    r: i64,
    bound: &(dyn Fn(u64, i64) -> Enclosure + Sync),
) -> Result<bool> {
    let n = table.n();
    if !(k >= 1 && r >= k && (r as u64) < n) {
        return Err(Error::PreconditionViolated(format!(
            "need n > r >= k >= 1 (n={n}, r={r}, k={k})"
        )));
    }
    if table.numerator(r) * 2u32 > *table.denominator() {
        return Err(Error::PreconditionViolated(format!(
            "U_{{{n},{}}}({r}) exceeds 1/2",
            table.p()
        )));
    }
    let ratio = Enclosure::from_rational(&table.ratio(r, k)?);
    let b = bound(n, k);
    // ratio <= bound: the two sides are never equal (rational vs transcendental
    // or bound 2 > 1 >= ratio)
    certify_lt(|| format!("hoeffding n={n} k={k} r={r}"), ratio, b)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HoeffdingSweep {
    pub checked: u64,
    /// `(n, p, r, k)` of every violated instance.
    pub violations: Vec<(u64, BigRational, i64, i64)>,
    /// Largest observed `ratio / bound`.
    pub worst_fraction: f64,
}

/// Runs the Hoeffding ratio check on every admissible `(r, k)` for each
/// `n` in `ns` and `p` in `ps`, against an arbitrary bound.
pub fn hoeffding_sweep(
    ns: std::ops::RangeInclusive<u64>,
    ps: &[BigRational],
    bound: &(dyn Fn(u64, i64) -> Enclosure + Sync),
) -> Result<HoeffdingSweep> {
    let cases: Vec<(u64, BigRational)> = ns
        .flat_map(|n| ps.iter().map(move |p| (n, p.clone())))
        .collect();
    let parts = par::map_slice(&cases, |(n, p)| -> Result<HoeffdingSweep> {
        let table = TailTable::new(*n, p)?;
        let mut out = HoeffdingSweep::default();
        for r in 1..*n as i64 {
            if table.numerator(r) * 2u32 > *table.denominator() {
                continue;
            }
            for k in 1..=r {
                out.checked += 1;
                let ratio = table.ratio(r, k)?.to_f64().unwrap_or(f64::NAN);
                out.worst_fraction = out.worst_fraction.max(ratio / bound(*n, k).mid());
                if !hoeffding_check(&table, k, r, bound)? {
                    out.violations.push((*n, p.clone(), r, k));
                }
            }
        }
        Ok(out)
    });
    let mut acc = HoeffdingSweep::default();
    for part in parts {
        let part = part?;
        acc.checked += part.checked;
        acc.violations.extend(part.violations);
        acc.worst_fraction = acc.worst_fraction.max(part.worst_fraction);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonotoneSweep {
    pub checked: u64,
    /// `(n, p, k, x)` where `ratio(x) > ratio(x + 1)`.
    pub violations: Vec<(u64, BigRational, i64, i64)>,
}

/// Checks that `U(x-k)/U(x)` is nondecreasing in `x` over `0..=n` for every
/// `1 <= n <= max_n`, `1 <= k <= max_k` and `p` in `ps`.
pub fn tail_ratio_monotone_sweep(
    max_n: u64,
    max_k: i64,
    ps: &[BigRational],
) -> Result<MonotoneSweep> {
    let cases: Vec<(u64, BigRational)> = (1..=max_n)
        .flat_map(|n| ps.iter().map(move |p| (n, p.clone())))
        .collect();
    let parts = par::map_slice(&cases, |(n, p)| -> Result<MonotoneSweep> {
        let table = TailTable::new(*n, p)?;
        let mut out = MonotoneSweep::default();
        for k in 1..=max_k {
            for x in 0..*n as i64 {
                out.checked += 1;
                // U(x-k)/U(x) <= U(x+1-k)/U(x+1), cross-multiplied
                let lhs = table.numerator(x - k) * table.numerator(x + 1);
                let rhs = table.numerator(x + 1 - k) * table.numerator(x);
                if lhs > rhs {
                    out.violations.push((*n, p.clone(), k, x));
                }
            }
        }
        Ok(out)
    });
    let mut acc = MonotoneSweep::default();
    for part in parts {
        let part = part?;
        acc.checked += part.checked;
        acc.violations.extend(part.violations);
    }
    Ok(acc)
}

/// `U_{n,p}(k)` for a real `p`, in floating point.
pub fn binomial_tail_real(n: u64, p: f64, k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    if k as u64 >= n {
        return 1.0;
    }
    let q = 1.0 - p;
    let mut coeff = 1.0f64;
    let mut sum = 0.0;
    for i in 0..=k as u64 {
        if i > 0 {
            coeff = coeff * (n - i + 1) as f64 / i as f64;
        }
        sum += coeff * p.powi(i as i32) * q.powi((n - i) as i32);
    }
    sum.min(1.0)
}

/// Finds `p` with `|U_{n,p}(r) - target| <= tol` by bisection, using that the
/// tail is continuous and strictly decreasing in `p` for `r < n`.
pub fn solve_p_for_tail(n: u64, r: i64, target: &BigRational, tol: f64) -> Result<f64> {
    if !target.is_positive() || *target >= BigRational::one() {
        return Err(Error::NoSolution(target.to_string()));
    }
    if r < 0 || r as u64 >= n {
        return Err(Error::NoSolution(format!(
            "{target} (tail is constant for r={r}, n={n})"
        )));
    }
    let goal = target.to_f64().unwrap_or(f64::NAN);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = binomial_tail_real(n, mid, r);
        if (v - goal).abs() <= tol * 1e-3 {
            return Ok(mid);
        }
        if v > goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    if (binomial_tail_real(n, mid, r) - goal).abs() <= tol {
        Ok(mid)
    } else {
        Err(Error::NoSolution(target.to_string()))
    }
}

/// Right-hand side of the Hamming-graph isoperimetric bound:
/// `min_r U_{n,p_r}(r+k)` over integer `r` in `[0, n-k)`, where `p_r` solves
/// `U_{n,p_r}(r) = frac`. `k = 0` returns `frac`.
pub fn harper_rhs(n: u64, k: u64, frac: &BigRational, tol: f64) -> Result<f64> {
    if k == 0 {
        return Ok(frac.to_f64().unwrap_or(f64::NAN));
    }
    if k >= n || !frac.is_positive() || *frac > BigRational::one() {
        return Err(Error::PreconditionViolated(format!(
            "harper_rhs needs 1 <= k < n and 0 < frac <= 1 (n={n}, k={k}, frac={frac})"
        )));
    }
    let mut best: Option<f64> = None;
    for r in 0..(n - k) as i64 {
        let p = match solve_p_for_tail(n, r, frac, tol) {
            Ok(p) => p,
            Err(Error::NoSolution(_)) => continue,
            Err(e) => return Err(e),
        };
        let v = binomial_tail_real(n, p, r + k as i64);
        best = Some(best.map_or(v, |b: f64| b.min(v)));
    }
    best.ok_or(Error::NoFeasibleR { limit: n - k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::ratio;

    #[test]
    fn binom_examples() {
        assert_eq!(binom(4, 2), BigUint::from(6u32));
        assert_eq!(binom(5, 7), BigUint::zero());
        assert_eq!(binom(10, 3), BigUint::from(120u32));
        assert_eq!(binom(7, -1), BigUint::zero());
    }

    #[test]
    fn pascal_and_row_sums_to_200() {
        for n in 1..=200u64 {
            let mut sum = BigUint::zero();
            for k in 0..=n as i64 {
                let c = binom(n, k);
                if k >= 1 && (k as u64) < n {
                    assert_eq!(c, binom(n - 1, k - 1) + binom(n - 1, k), "n={n} k={k}");
                }
                sum += c;
            }
            assert_eq!(sum, BigUint::one() << n as usize);
        }
    }

    #[test]
    fn tail_examples() {
        let q = TailQuery::new(2, 1, ratio(1, 2)).unwrap();
        assert_eq!(binomial_tail(&q), ratio(3, 4));
        let q = TailQuery::new(5, -1, ratio(1, 3)).unwrap();
        assert_eq!(binomial_tail(&q), BigRational::zero());
        let q = TailQuery::new(5, 5, ratio(1, 2)).unwrap();
        assert_eq!(binomial_tail(&q), BigRational::one());
    }

    #[test]
    fn tail_query_rejects_degenerate_p() {
        assert!(TailQuery::new(3, 1, ratio(0, 1)).is_err());
        assert!(TailQuery::new(3, 1, ratio(1, 1)).is_err());
    }

    #[test]
    fn mode_bound_examples() {
        assert!(mode_bound_holds(1));
        assert!(mode_bound_holds(4));
        assert!(mode_bound_holds(9));
        // 6^2 * 4 = 144 and 126^2 * 9 = 142884
        assert_eq!(binom(4, 2).pow(2) * 4u32, BigUint::from(144u32));
        assert_eq!(binom(9, 4).pow(2) * 9u32, BigUint::from(142884u32));
    }

    #[test]
    fn incremental_sweep_matches_direct_computation() {
        let sweep = mode_bound_sweep(600);
        assert_eq!(sweep.checked, 600);
        assert!(sweep.violations.is_empty());
        // the stepping recurrence reproduces the direct central coefficient
        let mut central = binom(1, 0);
        for n in 1..300u64 {
            assert_eq!(central, binom(n, (n / 2) as i64), "n={n}");
            if n % 2 == 0 {
                central = central * (n + 1) / (n / 2 + 1);
            } else {
                central <<= 1;
            }
        }
    }

    #[test]
    fn tail_ratio_examples() {
        assert_eq!(
            tail_ratio(16, 3, &ratio(1, 2), 7).unwrap(),
            ratio(2517, 26333)
        );
        assert_eq!(
            tail_ratio(8, 9, &ratio(1, 2), 8).unwrap(),
            BigRational::zero()
        );
        assert_eq!(tail_ratio(4, 1, &ratio(1, 2), 4).unwrap(), ratio(15, 16));
        assert!(tail_ratio(4, 0, &ratio(1, 2), 2).is_err());
    }

    #[test]
    fn hoeffding_examples() {
        assert_eq!(hoeffding_ratio_holds(16, 3, &ratio(1, 2), 7), Ok(true));
        assert_eq!(hoeffding_ratio_holds(16, 1, &ratio(1, 2), 7), Ok(true));
        // U_{16,1/2}(8) > 1/2
        assert!(matches!(
            hoeffding_ratio_holds(16, 1, &ratio(1, 2), 8),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn solve_p_round_trips() {
        let p = solve_p_for_tail(10, 5, &ratio(638, 1024), 1e-12).unwrap();
        assert!((p - 0.5).abs() < 1e-9);
        let p = solve_p_for_tail(6, 3, &ratio(1, 2), 1e-12).unwrap();
        assert!((binomial_tail_real(6, p, 3) - 0.5).abs() <= 1e-12);
        let near_one = BigRational::one() - ratio(1, 1_000_000_000);
        let p = solve_p_for_tail(10, 0, &near_one, 1e-15).unwrap();
        assert!(p > 0.0 && p < 1e-9);
        assert!(matches!(
            solve_p_for_tail(10, 3, &ratio(3, 2), 1e-9),
            Err(Error::NoSolution(_))
        ));
    }

    #[test]
    fn harper_rhs_conventions() {
        assert_eq!(harper_rhs(4, 0, &ratio(1, 4), 1e-12).unwrap(), 0.25);
        assert!(matches!(
            harper_rhs(4, 1, &BigRational::one(), 1e-12),
            Err(Error::NoFeasibleR { .. })
        ));
        // single vertex of H(4,2): r = 0 gives p = 1/2 and U(1) = 5/16
        let v = harper_rhs(4, 1, &ratio(1, 16), 1e-12).unwrap();
        assert!(v <= 5.0 / 16.0 + 1e-9);
    }
}
