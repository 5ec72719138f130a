//! Robustness of images and classes: exhaustive ball walks, exact fractions
//! for the sum classifier, Monte Carlo estimates, norm reduction checks and
//! the desk-scale theorem checks built on them.

use num_bigint::{BigInt, BigUint};
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classifiers::{
    class_sizes, level_sum_pmf, sum_threshold, Classifier, CountMode,
};
use crate::error::{Error, Result};
use crate::exactmath::{binom, certify_lt, pmf_iid_sum, pmf_uniform_levels, Enclosure, DEFAULT_SUPPORT_CAP};
use crate::hamming::{interior_k, GraphParams, HammingGraph};
use crate::image_space::{enumerate_space, ImageTensor, PerturbationBudget, SpaceParams};
use crate::perturb::{attack_sum_classifier, perturbation_length_bound};
use crate::stats::{wilson_interval, Z95};
use crate::{par, rng};

/// Draws allowed per class sample before a class is declared empty.
pub const MAX_REJECTIONS: u64 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest space that may be enumerated.
    pub cap_images: u128,
    /// Largest count-norm ball that may be walked.
    pub cap_ball: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            cap_images: 1 << 20,
            cap_ball: 1 << 20,
        }
    }
}

fn draw_image(params: SpaceParams, r: &mut ChaCha8Rng) -> ImageTensor {
    let q = params.level_count() as u32;
    let levels = (0..params.dimension()).map(|_| r.random_range(0..q)).collect();
    ImageTensor::new(params, levels).expect("levels drawn in range")
}

/// Sample number `index` from the uniform distribution on class `label`,
/// by rejection from uniform images.
pub fn sample_from_class(c: &Classifier, label: u32, seed: u64, index: u64) -> Result<ImageTensor> {
    let mut r = rng::stream(seed, index);
    for _ in 0..MAX_REJECTIONS {
        let img = draw_image(c.params(), &mut r);
        if c.decide(&img) == label {
            return Ok(img);
        }
    }
    Err(Error::EmptyClass(label))
}

/// Number of images within `changes` channel changes of a point.
pub fn count_ball_size(params: SpaceParams, changes: u128) -> BigUint {
    let d = params.dimension() as u64;
    let m = BigUint::from(params.max_level());
    (0..=changes.min(d as u128) as u64)
        .map(|j| binom(d, j as i64) * m.pow(j as u32))
        .sum()
}

struct BallWalk<'a> {
    c: &'a Classifier,
    label: u32,
    p: u32,
    m: u32,
    cur: Vec<u32>,
}

impl BallWalk<'_> {
    fn unit_cost(&self, delta: u32) -> u128 {
        match (delta, self.p) {
            (0, _) => 0,
            (_, 0) => 1,
            (d, p) => (d as u128).pow(p),
        }
    }

    /// True if some image in the rest of the ball changes label.
    fn escapes(&mut self, coord: usize, remaining: u128) -> bool {
        if coord == self.cur.len() {
            return self.c.decide_levels(&self.cur) != self.label;
        }
        let orig = self.cur[coord];
        if self.escapes(coord + 1, remaining) {
            return true;
        }
        for v in 0..=self.m {
            if v == orig {
                continue;
            }
            let cost = self.unit_cost(v.abs_diff(orig));
            if cost > remaining {
                continue;
            }
            self.cur[coord] = v;
            let hit = self.escapes(coord + 1, remaining - cost);
            self.cur[coord] = orig;
            if hit {
                return true;
            }
        }
        false
    }
}

/// Robustness by walking every image of the budget ball.
pub fn image_is_robust_walk(
    c: &Classifier,
    img: &ImageTensor,
    budget: &PerturbationBudget,
    limits: Limits,
) -> Result<bool> {
    let params = img.params();
    let limit = budget.cost_limit(params.max_level());
    if limit == 0 {
        return Ok(true);
    }
    if budget.p() == 0 {
        if count_ball_size(params, limit) > BigUint::from(limits.cap_ball) {
            return Err(Error::BallTooLarge {
                cap: limits.cap_ball,
            });
        }
    } else {
        params.enumerable(limits.cap_images)?;
    }
    let mut walk = BallWalk {
        c,
        label: c.decide(img),
        p: budget.p(),
        m: params.max_level(),
        cur: img.levels().to_vec(),
    };
    Ok(!walk.escapes(0, limit))
}

/// True iff every image within the budget (inclusive) shares the label of
/// `img`. The sum classifier is decided analytically.
pub fn image_is_robust(
    c: &Classifier,
    img: &ImageTensor,
    budget: &PerturbationBudget,
    limits: Limits,
) -> Result<bool> {
    if c.is_sum() {
        let limit = budget.cost_limit(img.params().max_level());
        return Ok(attack_sum_classifier(img, budget.p())?.cost > limit);
    }
    image_is_robust_walk(c, img, budget, limits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Exhaustive,
    Analytic,
    MonteCarlo,
}

impl MethodKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodKind::Exhaustive => "exhaustive",
            MethodKind::Analytic => "analytic",
            MethodKind::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// Uniform images, rejected until they fall in the class.
    Rejection,
    /// Sum classifier only: a level sum from the class's exact distribution,
    /// then a uniform image with that sum.
    SumConditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    Analytic,
    MonteCarlo { samples: u64, seed: u64, sampler: Sampler },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fraction {
    Exact(BigRational),
    Estimate(f64),
}

impl Fraction {
    pub fn value(&self) -> f64 {
        match self {
            Fraction::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Fraction::Estimate(v) => *v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub space: SpaceParams,
    pub classifier: String,
    pub label: u32,
    pub budget: PerturbationBudget,
    pub method: MethodKind,
    /// Class size (exact methods) or sample count (Monte Carlo).
    pub total: BigUint,
    pub robust_count: BigUint,
    pub fraction: Fraction,
    pub ci95: Option<(f64, f64)>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

/// Column names of [`RobustnessReport::csv_record`].
pub const REPORT_CSV_HEADER: [&str; 13] = [
    "n", "h", "b", "classifier", "label", "p", "size", "method", "fraction", "ci_lo", "ci_hi",
    "samples", "seed",
];

#[derive(Serialize)]
struct ReportJson<'a> {
    n: u32,
    h: u32,
    b: u32,
    classifier: &'a str,
    label: u32,
    p: u32,
    size: f64,
    method: MethodKind,
    total: String,
    robust_count: String,
    fraction: f64,
    fraction_exact: Option<String>,
    ci_lo: Option<f64>,
    ci_hi: Option<f64>,
    samples: Option<u64>,
    seed: Option<u64>,
}

impl RobustnessReport {
    pub fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        vec![
            self.space.n.to_string(),
            self.space.h.to_string(),
            self.space.b.to_string(),
            self.classifier.clone(),
            self.label.to_string(),
            self.budget.p().to_string(),
            self.budget.size().to_string(),
            self.method.as_str().to_string(),
            self.fraction.value().to_string(),
            opt(self.ci95.map(|c| c.0.to_string())),
            opt(self.ci95.map(|c| c.1.to_string())),
            opt(self.samples.map(|s| s.to_string())),
            opt(self.seed.map(|s| s.to_string())),
        ]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ReportJson {
            n: self.space.n,
            h: self.space.h,
            b: self.space.b,
            classifier: &self.classifier,
            label: self.label,
            p: self.budget.p(),
            size: self.budget.size(),
            method: self.method,
            total: self.total.to_string(),
            robust_count: self.robust_count.to_string(),
            fraction: self.fraction.value(),
            fraction_exact: match &self.fraction {
                Fraction::Exact(q) => Some(q.to_string()),
                Fraction::Estimate(_) => None,
            },
            ci_lo: self.ci95.map(|c| c.0),
            ci_hi: self.ci95.map(|c| c.1),
            samples: self.samples,
            seed: self.seed,
        })
        .expect("report fields serialize")
    }
}

/// Fraction of class `label` that is robust to `budget`.
///
/// The exhaustive method walks every budget ball, also for the sum
/// classifier, so it stays independent of the analytic attack.
pub fn class_robust_fraction(
    c: &Classifier,
    label: u32,
    budget: &PerturbationBudget,
    method: Method,
    limits: Limits,
) -> Result<RobustnessReport> {
    let params = c.params();
    let report = |method, total: BigUint, robust: BigUint, fraction, ci95, samples, seed| {
        RobustnessReport {
            space: params,
            classifier: c.name().to_string(),
            label,
            budget: budget.clone(),
            method,
            total,
            robust_count: robust,
            fraction,
            ci95,
            samples,
            seed,
        }
    };
    match method {
        Method::Exhaustive => {
            let total = params.enumerable(limits.cap_images)?;
            let (members, robust) = par::fold_range(
                0..total,
                || Ok((0u64, 0u64)),
                |acc: Result<(u64, u64)>, i| {
                    let (mut members, mut robust) = acc?;
                    let img = ImageTensor::from_index(params, i);
                    if c.decide(&img) == label {
                        members += 1;
                        robust += image_is_robust_walk(c, &img, budget, limits)? as u64;
                    }
                    Ok((members, robust))
                },
                |a, b| {
                    let (a, b) = (a?, b?);
                    Ok((a.0 + b.0, a.1 + b.1))
                },
            )?;
            if members == 0 {
                return Err(Error::EmptyClass(label));
            }
            Ok(report(
                MethodKind::Exhaustive,
                members.into(),
                robust.into(),
                Fraction::Exact(BigRational::new(robust.into(), members.into())),
                None,
                None,
                None,
            ))
        }
        Method::Analytic => {
            if !c.is_sum() || budget.p() != 1 || label > 1 {
                return Err(Error::AnalyticUnavailable);
            }
            let m = params.max_level();
            let shift = budget.cost_limit(m).min(i64::MAX as u128) as i64;
            let (robust, members) = sum_l1_counts(params, shift, label, DEFAULT_SUPPORT_CAP)?;
            let fraction = BigRational::new(robust.clone().into(), members.clone().into());
            Ok(report(
                MethodKind::Analytic,
                members,
                robust,
                Fraction::Exact(fraction),
                None,
                None,
                None,
            ))
        }
        Method::MonteCarlo {
            samples,
            seed,
            sampler,
        } => {
            if samples == 0 {
                return Err(Error::InvalidParams("samples must be positive".into()));
            }
            let conditional = match sampler {
                Sampler::Rejection => None,
                Sampler::SumConditional => {
                    if !c.is_sum() {
                        return Err(Error::AnalyticUnavailable);
                    }
                    Some(SumSampler::new(params, label)?)
                }
            };
            let hits = par::map_range(0..samples, |i| -> Result<bool> {
                let img = match &conditional {
                    Some(s) => s.sample(seed, i),
                    None => sample_from_class(c, label, seed, i)?,
                };
                image_is_robust(c, &img, budget, limits)
            });
            let mut robust = 0u64;
            for h in hits {
                robust += h? as u64;
            }
            Ok(report(
                MethodKind::MonteCarlo,
                samples.into(),
                robust.into(),
                Fraction::Estimate(robust as f64 / samples as f64),
                Some(wilson_interval(robust, samples, Z95)),
                Some(samples),
                Some(seed),
            ))
        }
    }
}

/// Uniform sampler for a class of the sum classifier.
struct SumSampler {
    params: SpaceParams,
    /// Candidate level sums and their cumulative class probabilities.
    sums: Vec<(u64, f64)>,
    /// `counts[k][s]`: level vectors of length `k` with sum `s`.
    counts: Vec<Vec<BigUint>>,
}

impl SumSampler {
    fn new(params: SpaceParams, label: u32) -> Result<Self> {
        let base = pmf_uniform_levels(params.level_count())?;
        let d = params.dimension();
        let mut counts = vec![vec![BigUint::one()]];
        for k in 1..=d {
            counts.push(pmf_iid_sum(&base, k as u64, DEFAULT_SUPPORT_CAP)?.weights().to_vec());
        }
        let t = sum_threshold(params);
        let full = &counts[d];
        let members: Vec<u64> = (0..full.len() as u64)
            .filter(|&s| ((s >= t) as u32) == label)
            .collect();
        let total: BigUint = members.iter().map(|&s| &full[s as usize]).sum();
        if total.is_zero() {
            return Err(Error::EmptyClass(label));
        }
        let mut acc = BigUint::zero();
        let sums = members
            .iter()
            .map(|&s| {
                acc += &full[s as usize];
                let cdf = BigRational::new(acc.clone().into(), total.clone().into());
                (s, cdf.to_f64().unwrap_or(1.0))
            })
            .collect();
        Ok(SumSampler {
            params,
            sums,
            counts,
        })
    }

    fn sample(&self, seed: u64, index: u64) -> ImageTensor {
        let mut r = rng::stream(seed, index);
        let u: f64 = r.random();
        let mut sum = self
            .sums
            .iter()
            .find(|(_, cdf)| u < *cdf)
            .unwrap_or(self.sums.last().expect("class is nonempty"))
            .0;
        let d = self.params.dimension();
        let m = self.params.max_level() as u64;
        let mut levels = Vec::with_capacity(d);
        for i in 0..d {
            let rest = &self.counts[d - i - 1];
            let ways = |v: u64| -> BigUint {
                sum.checked_sub(v)
                    .and_then(|s| rest.get(s as usize).cloned())
                    .unwrap_or_default()
            };
            let total = &self.counts[d - i][sum as usize];
            let u: f64 = r.random();
            let mut acc = BigUint::zero();
            let mut pick = 0;
            for v in 0..=m.min(sum) {
                acc += ways(v);
                pick = v;
                let cdf = BigRational::new(acc.clone().into(), total.clone().into());
                if u < cdf.to_f64().unwrap_or(1.0) {
                    break;
                }
            }
            // the last admissible level absorbs rounding in the comparison
            while ways(pick).is_zero() {
                pick -= 1;
            }
            levels.push(pick as u32);
            sum -= pick;
        }
        ImageTensor::new(self.params, levels).expect("levels within range")
    }
}

/// `(robust, members)` for a class of the sum classifier under an L1 budget
/// that allows a level-sum shift of `shift`.
fn sum_l1_counts(params: SpaceParams, shift: i64, label: u32, cap: u128) -> Result<(BigUint, BigUint)> {
    let pmf = level_sum_pmf(params, cap)?;
    let w = pmf.weights();
    let t = sum_threshold(params) as i64;
    let top = params.dimension() as i64 * params.max_level() as i64;
    let shift = shift.max(0);
    let mut members = BigUint::zero();
    let mut robust = BigUint::zero();
    for (s, weight) in w.iter().enumerate() {
        let s = s as i64;
        let ok = if label == 0 {
            if s >= t {
                continue;
            }
            // the sum can rise by at most the remaining headroom
            s + shift.min(top - s) < t
        } else {
            if s < t {
                continue;
            }
            s - shift.min(s) >= t
        };
        members += weight;
        if ok {
            robust += weight;
        }
    }
    Ok((robust, members))
}

/// Exact fraction of the sum classifier's class 0 that is robust to L1
/// perturbations of size `d`. A negative size allows no perturbation.
pub fn sum_exact_fraction_l1(params: SpaceParams, d: &BigRational, cap: u128) -> Result<BigRational> {
    if d.is_negative() {
        return Ok(BigRational::one());
    }
    let shift = (d * BigInt::from(params.max_level())).floor().to_integer();
    let shift = shift.to_i64().unwrap_or(i64::MAX);
    let (robust, members) = sum_l1_counts(params, shift, 0, cap)?;
    Ok(BigRational::new(robust.into(), members.into()))
}

/// `floor(c sqrt(h) n (2^b - 1)) - 2 (2^b - 1)`: the level-sum shift allowed
/// by an L1 budget of `c sqrt(h) n - 2`, computed exactly.
pub fn lower_budget_shift(params: SpaceParams, c: &BigRational) -> i64 {
    let m = BigInt::from(params.max_level());
    let scale = BigInt::from(params.n) * &m;
    // floor(sqrt(x)) = floor(sqrt(floor(x))) for x >= 0
    let sq = (c * c * BigRational::from_integer(&scale * &scale * BigInt::from(params.h))).floor();
    let root: BigInt = Roots::sqrt(&sq.to_integer());
    (root - &m * BigInt::from(2)).to_i64().unwrap_or(i64::MAX)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Check {
    pub space: SpaceParams,
    #[serde(serialize_with = "crate::serde_util::display")]
    pub c: BigRational,
    pub shift: i64,
    #[serde(serialize_with = "crate::serde_util::display")]
    pub fraction: BigRational,
    #[serde(serialize_with = "crate::serde_util::display")]
    pub lower: BigRational,
    pub holds: bool,
}

/// Compares the exact robust fraction of the sum classifier's class 0 at L1
/// size `c sqrt(h) n - 2` with `1 - 4c`.
pub fn theorem2_check(params: SpaceParams, c: &BigRational, cap: u128) -> Result<Theorem2Check> {
    let shift = lower_budget_shift(params, c);
    let fraction = if shift < 0 {
        BigRational::one()
    } else {
        let (robust, members) = sum_l1_counts(params, shift, 0, cap)?;
        BigRational::new(robust.into(), members.into())
    };
    let lower = BigRational::one() - c * BigInt::from(4);
    Ok(Theorem2Check {
        space: params,
        c: c.clone(),
        shift,
        holds: fraction >= lower,
        fraction,
        lower,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReductionReport {
    pub checked: u64,
    /// Indices of images that broke the implication.
    pub violations: Vec<u64>,
}

impl ReductionReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

fn reduction_sweep<F>(c: &Classifier, limits: Limits, check: F) -> Result<ReductionReport>
where
    F: Fn(&ImageTensor) -> Result<bool> + Sync + Send,
{
    let total = c.params().enumerable(limits.cap_images)?;
    let results = par::map_range(0..total, |i| check(&ImageTensor::from_index(c.params(), i)));
    let mut report = ReductionReport::default();
    for (i, r) in results.into_iter().enumerate() {
        report.checked += 1;
        if !r? {
            report.violations.push(i as u64);
        }
    }
    Ok(report)
}

/// Every image robust to L1 size `d` is robust to L0 size `d`.
pub fn reduction_check_l1_to_l0(c: &Classifier, d: &BigRational, limits: Limits) -> Result<ReductionReport> {
    let l1 = PerturbationBudget::exact(1, d.clone())?;
    let l0 = PerturbationBudget::exact(0, d.clone())?;
    reduction_sweep(c, limits, |img| {
        Ok(!image_is_robust(c, img, &l1, limits)? || image_is_robust(c, img, &l0, limits)?)
    })
}

/// Every image robust to L0 size `d` is robust to Lp size `d^(1/p)/(2^b-1)`,
/// and every image not robust to L0 size `d` is not robust to Lp size
/// `d^(1/p)`.
pub fn reduction_check_l0_to_lp(c: &Classifier, d: &BigRational, p: u32, limits: Limits) -> Result<ReductionReport> {
    if p < 2 {
        return Err(Error::InvalidParams(format!("p must be at least 2 (got {p})")));
    }
    let m = BigInt::from(c.params().max_level());
    let l0 = PerturbationBudget::exact(0, d.clone())?;
    let small = PerturbationBudget::from_powered(p, d / num_traits::pow(m, p as usize))?;
    let large = PerturbationBudget::from_powered(p, d.clone())?;
    reduction_sweep(c, limits, |img| {
        let robust0 = image_is_robust(c, img, &l0, limits)?;
        Ok(if robust0 {
            image_is_robust(c, img, &small, limits)?
        } else {
            !image_is_robust(c, img, &large, limits)?
        })
    })
}

/// Every image robust to Lp size `d^(2/p)` is robust to L2 size `d`.
pub fn reduction_check_lp_to_l2(c: &Classifier, d: &BigRational, p: u32, limits: Limits) -> Result<ReductionReport> {
    if p < 2 {
        return Err(Error::InvalidParams(format!("p must be at least 2 (got {p})")));
    }
    let d2 = d * d;
    let lp = PerturbationBudget::from_powered(p, d2.clone())?;
    let l2 = PerturbationBudget::from_powered(2, d2)?;
    reduction_sweep(c, limits, |img| {
        Ok(!image_is_robust(c, img, &lp, limits)? || image_is_robust(c, img, &l2, limits)?)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Entry {
    pub label: u32,
    pub class_size: u64,
    pub c: f64,
    /// Allowed channel changes, `floor(c sqrt(h) n + 2)`.
    pub changes: u32,
    pub robust: u64,
    pub fraction: f64,
    pub bound: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub classifier: String,
    pub entries: Vec<Theorem1Entry>,
}

impl Theorem1Report {
    pub fn holds(&self) -> bool {
        self.entries.iter().all(|e| e.holds)
    }
}

/// `floor(c sqrt(h) n + 2)`.
pub fn count_budget(params: SpaceParams, c: f64) -> u32 {
    (c * (params.h as f64).sqrt() * params.n as f64 + 2.0).floor() as u32
}

/// For every interesting class and every `c`, checks that the fraction of
/// the class robust to `floor(c sqrt(h) n + 2)` channel changes is below
/// `2 exp(-2 c^2)`.
///
/// An image is robust to `k` changes exactly when its vertex lies in the
/// `k`-interior of its class in `H(n^2 h, 2^b)`.
pub fn theorem1_holds(c: &Classifier, cs: &[f64], cap_images: u128) -> Result<Theorem1Report> {
    let params = c.params();
    let total = params.enumerable(cap_images)?;
    let graph = HammingGraph::new(GraphParams::new(
        params.dimension() as u32,
        params.level_count() as u32,
    )?)?;
    let labels: Vec<u32> = (0..total)
        .map(|i| c.decide(&ImageTensor::from_index(params, i)))
        .collect();
    let sizes = class_sizes(c, CountMode::Exhaustive { cap: cap_images })?;
    let mut entries = Vec::new();
    for summary in sizes.iter().filter(|s| s.interesting) {
        let label = summary.label;
        let class = graph.subset((0..total).filter(|&i| labels[i as usize] == label))?;
        let size = class.len();
        for &cv in cs {
            let changes = count_budget(params, cv);
            let robust = interior_k(&class, changes).len();
            let frac = BigRational::new(robust.into(), size.into());
            let bound = Enclosure::rounded(cv * cv).scale(-2.0).exp().scale(2.0);
            let holds = certify_lt(
                || format!("theorem1 {} label={label} c={cv}", c.name()),
                Enclosure::from_rational(&frac),
                bound,
            )?;
            let fraction = robust as f64 / size as f64;
            entries.push(Theorem1Entry {
                label,
                class_size: size,
                c: cv,
                changes,
                robust,
                fraction,
                bound: bound.mid(),
                margin: bound.mid() - fraction,
                holds,
            });
        }
    }
    Ok(Theorem1Report {
        classifier: c.name().to_string(),
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizationEntry {
    pub label: u32,
    pub c: f64,
    pub size: f64,
    pub non_robust_fraction: f64,
    pub lower: f64,
    pub holds: bool,
}

/// For every interesting class, checks that the fraction of the class that
/// is not robust to L2 size `c + 2 n sqrt(h) / 2^b` is at least
/// `1 - 2 exp(-c^2 / 2)`.
pub fn discretization_check(c: &Classifier, cs: &[f64], limits: Limits) -> Result<Vec<DiscretizationEntry>> {
    let params = c.params();
    let sizes = class_sizes(c, CountMode::Exhaustive { cap: limits.cap_images })?;
    let mut out = Vec::new();
    for summary in sizes.iter().filter(|s| s.interesting) {
        for &cv in cs {
            let size = perturbation_length_bound(params, cv);
            let budget = PerturbationBudget::new(2, size)?;
            let rep = class_robust_fraction(c, summary.label, &budget, Method::Exhaustive, limits)?;
            let non_robust = 1.0 - rep.fraction.value();
            let lower = 1.0 - 2.0 * (-cv * cv / 2.0).exp();
            out.push(DiscretizationEntry {
                label: summary.label,
                c: cv,
                size,
                non_robust_fraction: non_robust,
                lower,
                holds: non_robust >= lower,
            });
        }
    }
    Ok(out)
}

/// Enumerates the class members of a small space.
pub fn class_members(c: &Classifier, label: u32, cap: u128) -> Result<Vec<ImageTensor>> {
    Ok(enumerate_space(c.params(), cap)?
        .filter(|img| c.decide(img) == label)
        .collect())
}
