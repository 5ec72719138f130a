//! Verification suites: every supporting inequality checked on
//! brute-forceable instances, with one outcome per check.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::Serialize;

use crate::bounds::{
    avg_distance_lower_bound, crossover_n, lower_bound_size, term_crossover_n, upper_bound,
    upper_bound_size, BoundQuery,
};
use crate::classifiers::{
    classifier_zoo, random_classifier, sum_classifier, Classifier, RandomKind,
};
use crate::error::{Error, Result};
use crate::exactmath::{
    anti_concentration_holds_for, binomial_spread_sides, gaussian_checks, hoeffding_bound,
    hoeffding_sweep, mode_bound_sweep, pmf_iid_sum, ratio, tail_ratio_monotone_sweep,
    uniform_grid_sum, DiscretePmf, Enclosure, TailTable, DEFAULT_SUPPORT_CAP,
};
use crate::hamming::{
    expand, expand_k, expand_naive, hamgraph_bound, hamgraph_exhaustive, hamgraph_random,
    hamming_distance, harper_exhaustive, image_bijection, interior_k, random_interesting_subset,
    GraphParams, HammingGraph,
};
use crate::image_space::{
    enumerate_space, level_cost, norm_distance, sample_uniform_indexed, ImageTensor,
    PerturbationBudget, SpaceParams,
};
use crate::perturb::{attack_sum_classifier, failure_rate, find_perturbation, minimal_perturbation, SearchLimits};
use crate::robustness::{
    class_robust_fraction, discretization_check, image_is_robust_walk, reduction_check_l0_to_lp,
    reduction_check_l1_to_l0, reduction_check_lp_to_l2, sum_exact_fraction_l1, theorem1_holds,
    theorem2_check, Fraction, Limits, Method, ReductionReport, Sampler,
};
use crate::{par, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Binomial,
    Hamming,
    Anticonc,
    Gaussian,
    Theorem1,
    Theorem2,
    Theorem3,
    Reductions,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Binomial,
        Suite::Hamming,
        Suite::Anticonc,
        Suite::Gaussian,
        Suite::Theorem1,
        Suite::Theorem2,
        Suite::Theorem3,
        Suite::Reductions,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Binomial => "binomial",
            Suite::Hamming => "hamming",
            Suite::Anticonc => "anticonc",
            Suite::Gaussian => "gaussian",
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::Theorem3 => "theorem3",
            Suite::Reductions => "reductions",
        }
    }

    /// Parses a suite name; `all` expands to every suite.
    pub fn parse(name: &str) -> Option<Vec<Suite>> {
        if name == "all" {
            return Some(Suite::ALL.to_vec());
        }
        Suite::ALL.iter().find(|s| s.name() == name).map(|s| vec![*s])
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Deliberately broken bounds, used to confirm that the suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mutant {
    /// Tail ratio bound `2 exp(-3 (k-1)^2 / n)` instead of `2 exp(-2 (k-1)^2 / n)`.
    HoeffdingExponent3,
}

impl Mutant {
    pub const ALL: [Mutant; 1] = [Mutant::HoeffdingExponent3];

    pub fn name(&self) -> &'static str {
        match self {
            Mutant::HoeffdingExponent3 => "hoeffding-exp3",
        }
    }

    pub fn parse(name: &str) -> Option<Mutant> {
        Mutant::ALL.into_iter().find(|m| m.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub cap_images: u128,
    /// Largest number of subsets swept exhaustively.
    pub cap_subsets: u64,
    pub mutant: Option<Mutant>,
    pub mode_max_n: u64,
    pub hoeffding_max_n: u64,
    /// Random subsets per graph in the expansion sweep.
    pub random_subsets: u64,
    /// Balanced classifiers checked on `(2,1,1)`.
    pub balanced_small: u64,
    /// Balanced classifiers checked on `(2,1,2)`.
    pub balanced_large: u64,
    /// Seeds per random family in the classifier zoo.
    pub zoo_seeds: u64,
    pub failure_samples: u64,
    pub avg_pairs: u64,
    pub coverage_runs: u64,
    pub coverage_samples: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            cap_images: 1 << 20,
            cap_subsets: 1 << 16,
            mutant: None,
            mode_max_n: 10_000,
            hoeffding_max_n: 64,
            random_subsets: 100_000,
            balanced_small: 1000,
            balanced_large: 100,
            zoo_seeds: 3,
            failure_samples: 10_000,
            avg_pairs: 100_000,
            coverage_runs: 1000,
            coverage_samples: 1000,
        }
    }
}

impl VerifyConfig {
    /// Smaller sample counts for fast smoke runs.
    pub fn quick() -> Self {
        VerifyConfig {
            mode_max_n: 1000,
            random_subsets: 2000,
            balanced_small: 50,
            balanced_large: 5,
            zoo_seeds: 1,
            failure_samples: 1000,
            avg_pairs: 5000,
            coverage_samples: 400,
            ..VerifyConfig::default()
        }
    }

    fn limits(&self) -> Limits {
        Limits {
            cap_images: self.cap_images,
            cap_ball: self.cap_images,
        }
    }

    fn seed_for(&self, label: &str) -> u64 {
        let salt = label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
        });
        rng::derive_seed(self.seed, salt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: String,
    pub passed: bool,
    /// Number of individual instances checked.
    pub checked: u64,
    /// Smallest slack seen, in the check's own units.
    pub margin: Option<f64>,
    pub detail: String,
    /// First failing instance.
    pub counterexample: Option<String>,
}

impl CheckOutcome {
    fn new(id: &str, checked: u64, margin: Option<f64>, detail: String, failures: Vec<String>) -> Self {
        CheckOutcome {
            id: id.to_string(),
            passed: failures.is_empty(),
            checked,
            margin,
            detail: if failures.len() > 1 {
                format!("{detail}; {} failures", failures.len())
            } else {
                detail
            },
            counterexample: failures.into_iter().next(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs one suite. Checks appear in a fixed order.
pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut checks = match suite {
        Suite::Binomial => binomial_suite(cfg)?,
        Suite::Hamming => hamming_suite(cfg)?,
        Suite::Anticonc => anticonc_suite()?,
        Suite::Gaussian => gaussian_suite()?,
        Suite::Theorem1 => theorem1_suite(cfg)?,
        Suite::Theorem2 => theorem2_suite(cfg)?,
        Suite::Theorem3 => theorem3_suite(cfg)?,
        Suite::Reductions => reductions_suite(cfg)?,
    };
    checks.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(SuiteReport { suite, checks })
}

/// Runs several suites in canonical order.
pub fn run_suites(suites: &[Suite], cfg: &VerifyConfig) -> Result<Vec<SuiteReport>> {
    let mut suites = suites.to_vec();
    suites.sort();
    suites.dedup();
    suites.iter().map(|&s| run_suite(s, cfg)).collect()
}

fn sp(n: u32, h: u32, b: u32) -> SpaceParams {
    SpaceParams::new(n, h, b).expect("fixed desk-scale space")
}

fn gp(dims: u32, q: u32) -> GraphParams {
    GraphParams::new(dims, q).expect("fixed desk-scale graph")
}

fn min_opt(a: Option<f64>, b: f64) -> Option<f64> {
    Some(a.map_or(b, |a| a.min(b)))
}

// ---------------------------------------------------------------- binomial

fn binomial_suite(cfg: &VerifyConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();

    let mode = mode_bound_sweep(cfg.mode_max_n);
    out.push(CheckOutcome::new(
        "mode_bound",
        mode.checked,
        None,
        format!("C(n, n/2)^2 n < 4^n for 1 <= n <= {}", cfg.mode_max_n),
        mode.violations.iter().map(|n| format!("n={n}")).collect(),
    ));

    let tenths: Vec<BigRational> = (1..10).map(|j| ratio(j, 10)).collect();
    let mono = tail_ratio_monotone_sweep(40, 5, &tenths)?;
    out.push(CheckOutcome::new(
        "tail_ratio_monotone",
        mono.checked,
        None,
        "U(x-k)/U(x) nondecreasing in x for n <= 40, k <= 5, p in {1/10..9/10}".into(),
        mono.violations
            .iter()
            .map(|(n, p, k, x)| format!("n={n} p={p} k={k} x={x}"))
            .collect(),
    ));

    let quarters = [ratio(1, 4), ratio(1, 2), ratio(3, 4)];
    let mutated = |n: u64, k: i64| {
        let e = ((k - 1) * (k - 1)) as f64 * 3.0 / n as f64;
        Enclosure::rounded(-e).exp().scale(2.0)
    };
    let bound: &(dyn Fn(u64, i64) -> Enclosure + Sync) = match cfg.mutant {
        Some(Mutant::HoeffdingExponent3) => &mutated,
        None => &hoeffding_bound,
    };
    let hoeff = hoeffding_sweep(1..=cfg.hoeffding_max_n, &quarters, bound)?;
    out.push(CheckOutcome::new(
        "hoeffding_ratio",
        hoeff.checked,
        Some(1.0 - hoeff.worst_fraction),
        format!(
            "U(r-k)/U(r) <= 2exp(-2(k-1)^2/n) whenever U(r) <= 1/2, n <= {}, p in {{1/4,1/2,3/4}}; worst ratio/bound {:.4}",
            cfg.hoeffding_max_n, hoeff.worst_fraction
        ),
        hoeff
            .violations
            .iter()
            .map(|(n, p, r, k)| format!("n={n} p={p} r={r} k={k}"))
            .collect(),
    ));

    let cases: Vec<(u64, usize)> = (1..=64).flat_map(|n| (0..3).map(move |i| (n, i))).collect();
    let results = par::map_slice(&cases, |&(n, i)| -> Result<(u64, Vec<String>)> {
        let p = &quarters[i];
        let bern = DiscretePmf::from_masses(0, &[BigRational::one() - p, p.clone()])?;
        let sum = pmf_iid_sum(&bern, n, DEFAULT_SUPPORT_CAP)?;
        let table = TailTable::new(n, p)?;
        let mut bad = Vec::new();
        for k in -1..=n as i64 + 1 {
            if sum.cdf_grid(k) != table.tail(k) {
                bad.push(format!("n={n} p={p} k={k}"));
            }
        }
        Ok((n + 3, bad))
    });
    let (mut checked, mut bad) = (0, Vec::new());
    for r in results {
        let (c, b) = r?;
        checked += c;
        bad.extend(b);
    }
    out.push(CheckOutcome::new(
        "tail_matches_convolution",
        checked,
        None,
        "binomial tails equal partial sums of the convolved Bernoulli PMF, n <= 64".into(),
        bad,
    ));
    Ok(out)
}

// ----------------------------------------------------------------- hamming

const C_GRID: [f64; 8] = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0];

fn hamming_suite(cfg: &VerifyConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let bound: &(dyn Fn(f64) -> Enclosure + Sync) = &hamgraph_bound;
    let expansion = |id: &str, rep: crate::hamming::SweepReport, what: String| {
        CheckOutcome::new(
            id,
            rep.checked,
            Some(rep.min_margin),
            what,
            rep.violations.iter().map(|(s, c)| format!("S={s} {c}")).collect(),
        )
    };
    for g in [gp(4, 2), gp(2, 4)] {
        let rep = hamgraph_exhaustive(g, &C_GRID, bound, cfg.cap_subsets)?;
        out.push(expansion(
            &format!("interior_ratio_exhaustive_{}_{}", g.dims, g.alphabet),
            rep,
            format!("|Int(S)|/|S| < 2exp(-2c^2) for every S of {g} with 1 <= |S| <= half, c in 0.25..2"),
        ));
    }
    for g in [gp(6, 2), gp(4, 3)] {
        let seed = cfg.seed_for(&format!("hamgraph {g}"));
        let rep = hamgraph_random(g, &C_GRID, cfg.random_subsets, seed, bound)?;
        out.push(expansion(
            &format!("interior_ratio_random_{}_{}", g.dims, g.alphabet),
            rep,
            format!("same inequality on {} seeded random subsets of {g}", cfg.random_subsets),
        ));
    }
    for (g, ks) in [(gp(4, 2), vec![1, 2, 3]), (gp(2, 3), vec![1])] {
        let rep = harper_exhaustive(g, &ks, 1e-9, cfg.cap_subsets)?;
        out.push(CheckOutcome::new(
            &format!("harper_exhaustive_{}_{}", g.dims, g.alphabet),
            rep.checked,
            Some(rep.min_margin),
            format!("|Exp^k(S)|/q^n >= min over integer r of U(r+k) - 1e-9 on every proper S of {g}, k in {ks:?}"),
            rep.violations.iter().map(|(s, k)| format!("S={s} {k}")).collect(),
        ));
    }

    // interior by definition versus the complement identity
    let g42 = HammingGraph::new(gp(4, 2))?;
    let seed = cfg.seed_for("duality");
    let dual_bad: Vec<String> = par::map_range(0..10_000, |i| {
        let mask = rng::stream(seed, i).random::<u64>() & 0xffff;
        let s = g42.from_mask(mask);
        (0..=4u32)
            .filter(|&k| {
                let by_def: Vec<u64> = s
                    .members()
                    .filter(|&v| {
                        (0..16).all(|u| hamming_distance(g42.params(), u, v) > k || s.contains(u))
                    })
                    .collect();
                interior_k(&s, k).members().collect::<Vec<_>>() != by_def
            })
            .map(|k| format!("S={mask:#06x} k={k}"))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    out.push(CheckOutcome::new(
        "interior_duality",
        50_000,
        None,
        "Int^k(S) from the complement identity equals the definition on 10^4 random subsets of H(4,2), k <= 4".into(),
        dual_bad,
    ));

    let mut checked = 0;
    let mut bad = Vec::new();
    for g in [gp(4, 2), gp(2, 3), gp(2, 4)] {
        let graph = HammingGraph::new(g)?;
        for mask in 0..1u64 << graph.vertex_count() {
            let s = graph.from_mask(mask);
            checked += 1;
            if expand(&s) != expand_naive(&s) {
                bad.push(format!("{g} S={mask:#x}"));
            }
        }
    }
    for g in [gp(4, 3), gp(3, 3), gp(7, 2)] {
        let graph = HammingGraph::new(g)?;
        let seed = cfg.seed_for(&format!("fold {g}"));
        for i in 0..2000 {
            let s = random_interesting_subset(&graph, seed, i);
            checked += 1;
            if expand(&s) != expand_naive(&s) {
                bad.push(format!("{g} subset #{i}"));
            }
        }
    }
    out.push(CheckOutcome::new(
        "expand_fold_matches_naive",
        checked,
        None,
        "line-folding expansion equals the neighbour loop".into(),
        bad,
    ));

    let mut checked = 0;
    let mut bad = Vec::new();
    for g in [gp(4, 2), gp(3, 3)] {
        let graph = HammingGraph::new(g)?;
        let seed = cfg.seed_for(&format!("compose {g}"));
        for i in 0..2000 {
            let s = random_interesting_subset(&graph, seed, i);
            for a in 0..3 {
                for b in 0..3 {
                    checked += 1;
                    if expand_k(&s, a + b) != expand_k(&expand_k(&s, a), b) {
                        bad.push(format!("{g} subset #{i} a={a} b={b}"));
                    }
                }
            }
            let e = expand(&s);
            if !s.is_subset_of(&e) || !interior_k(&s, 1).is_subset_of(&s) {
                bad.push(format!("{g} subset #{i} not extensive"));
            }
        }
    }
    out.push(CheckOutcome::new(
        "expand_composition",
        checked,
        None,
        "Exp^(a+b)(S) = Exp^b(Exp^a(S)), Exp extensive and Int intensive on random subsets of H(4,2), H(3,3)".into(),
        bad,
    ));

    let mut checked = 0;
    let mut bad = Vec::new();
    for space in [sp(2, 1, 1), sp(1, 2, 2)] {
        let bij = image_bijection(space);
        let total = space.enumerable(cfg.cap_images)?;
        for u in 0..total {
            let a = bij.image_of_vertex(u);
            if bij.vertex_of(&a) != Some(u) {
                bad.push(format!("{space} vertex {u} does not round-trip"));
            }
            for v in u + 1..total {
                let b = bij.image_of_vertex(v);
                checked += 1;
                if level_cost(a.levels(), b.levels(), 0) != hamming_distance(bij.graph(), u, v) as u128 {
                    bad.push(format!("{space} pair ({u},{v})"));
                }
            }
        }
    }
    out.push(CheckOutcome::new(
        "image_bijection",
        checked,
        None,
        "image count distance equals graph distance on all pairs of (2,1,1) and (1,2,2)".into(),
        bad,
    ));
    Ok(out)
}

// ---------------------------------------------------------------- anticonc

/// Small family of distributions symmetric about zero.
fn symmetric_family() -> Result<Vec<(&'static str, DiscretePmf)>> {
    Ok(vec![
        ("zero", DiscretePmf::point(0)),
        ("uniform{-1,0,1}", DiscretePmf::from_masses(-1, &[ratio(1, 3), ratio(1, 3), ratio(1, 3)])?),
        ("{-1,1}", DiscretePmf::from_masses(-1, &[ratio(1, 2), ratio(0, 1), ratio(1, 2)])?),
        ("triangular{-1,0,1}", DiscretePmf::from_masses(-1, &[ratio(1, 4), ratio(1, 2), ratio(1, 4)])?),
        ("uniform{-2..2}", DiscretePmf::from_masses(-2, &vec![ratio(1, 5); 5])?),
        ("{-3,3}", DiscretePmf::from_masses(-3, &[ratio(1, 2), ratio(0, 1), ratio(0, 1), ratio(0, 1), ratio(0, 1), ratio(0, 1), ratio(1, 2)])?),
        ("{-1/2,1/2}", DiscretePmf::from_masses(-1, &[ratio(1, 2), ratio(0, 1), ratio(1, 2)])?.with_scale(2)?),
        ("uniform{-3/2..3/2}", DiscretePmf::from_masses(-3, &[ratio(1, 4), ratio(0, 1), ratio(1, 4), ratio(0, 1), ratio(1, 4), ratio(0, 1), ratio(1, 4)])?.with_scale(2)?),
    ])
}

fn anticonc_suite() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let family = symmetric_family()?;
    let mut checked = 0;
    let mut margin: Option<f64> = None;
    let mut bad = Vec::new();
    for n in 2..=20u64 {
        for (name, y) in &family {
            // half-integers t <= n/2
            let mut t = ratio(1, 2);
            while t <= ratio(n as i64, 2) {
                let (lhs, rhs) = binomial_spread_sides(n, y, &t)?;
                checked += 1;
                margin = min_opt(margin, (&lhs - &rhs).to_f64().unwrap_or(f64::NAN));
                if lhs < rhs {
                    bad.push(format!("n={n} Y={name} t={t}"));
                }
                t += BigRational::one();
            }
        }
    }
    out.push(CheckOutcome::new(
        "binomial_spread",
        checked,
        margin,
        "Pr[X+Y <= t] >= Pr[X < t] for X ~ Bin(n,1/2), n in 2..20, symmetric Y family, half-integer t <= n/2".into(),
        bad,
    ));

    let cases: Vec<(u64, u64)> = (1..=64).flat_map(|n| [2, 4, 8].map(|l| (n, l))).collect();
    let results = par::map_slice(&cases, |&(n, levels)| -> Result<(u64, Vec<String>)> {
        let sum = uniform_grid_sum(n, levels, DEFAULT_SUPPORT_CAP)?;
        // t in steps of 1/4 until the bound is vacuous (t >= sqrt(n)/2) and a bit beyond
        let top = 4 * ((n as f64).sqrt() / 2.0).ceil() as i64 + 4;
        let mut bad = Vec::new();
        for j in 1..=top {
            let t = ratio(j, 4);
            if !anti_concentration_holds_for(&sum, n, &t)? {
                bad.push(format!("n={n} levels={levels} t={t}"));
            }
        }
        Ok((top as u64, bad))
    });
    let (mut checked, mut bad) = (0, Vec::new());
    for r in results {
        let (c, b) = r?;
        checked += c;
        bad.extend(b);
    }
    out.push(CheckOutcome::new(
        "anti_concentration",
        checked,
        None,
        "Pr[sum X_i <= n/2 - t + 1] > 1/2 - 2t/sqrt(n), n <= 64, 2k in {2,4,8}, t in 1/4 steps".into(),
        bad,
    ));
    Ok(out)
}

// ---------------------------------------------------------------- gaussian

/// `x` from -6 to 0.5 in steps of 0.01.
pub fn gaussian_grid() -> Vec<f64> {
    (-600..=50).map(|i| i as f64 / 100.0).collect()
}

/// `k` from 0.1 to 4.0 in steps of 0.1.
pub fn gaussian_k_grid() -> Vec<f64> {
    (1..=40).map(|i| i as f64 / 10.0).collect()
}

fn gaussian_suite() -> Result<Vec<CheckOutcome>> {
    let rep = gaussian_checks(&gaussian_grid(), &gaussian_k_grid(), 1e-12)?;
    let checked = rep.monotone_checked + rep.tail_checked + rep.half_checked + rep.zero_checked;
    let margin = rep.min_relative_margin.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(vec![CheckOutcome::new(
        "gaussian_scalar",
        checked,
        Some(margin),
        format!(
            "Phi ratio monotone, Phi(x) < exp(-x^2/2) for x <= 1/2, ratio bounds at z = 1/2 and z = 0; x in [-6, 0.5] step 0.01, k in 0.1..4; max relative Phi error {:.2e}",
            rep.max_relative_error
        ),
        rep.failures
            .iter()
            .map(|f| format!("{:?} x={} k={}", f.kind, f.x, f.k))
            .collect(),
    )])
}

// ---------------------------------------------------------------- theorem1

const THEOREM1_CS: [f64; 3] = [0.5, 0.75, 1.0];

fn theorem1_over(id: &str, classifiers: &[Classifier], cap: u128) -> Result<CheckOutcome> {
    let reports = par::map_slice(classifiers, |c| theorem1_holds(c, &THEOREM1_CS, cap));
    let mut checked = 0;
    let mut margin = None;
    let mut bad = Vec::new();
    for (c, rep) in classifiers.iter().zip(reports) {
        for e in rep?.entries {
            checked += 1;
            margin = min_opt(margin, e.margin);
            if !e.holds {
                bad.push(format!(
                    "{} on {} label={} c={} robust {}/{}",
                    c.name(),
                    c.params(),
                    e.label,
                    e.c,
                    e.robust,
                    e.class_size
                ));
            }
        }
    }
    Ok(CheckOutcome::new(
        id,
        checked,
        margin,
        format!(
            "robust fraction at floor(c sqrt(h) n + 2) changes < 2exp(-2c^2) for every interesting class, {} classifiers, c in {THEOREM1_CS:?}",
            classifiers.len()
        ),
        bad,
    ))
}

fn theorem1_suite(cfg: &VerifyConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for (space, count) in [(sp(2, 1, 1), cfg.balanced_small), (sp(2, 1, 2), cfg.balanced_large)] {
        let tag = format!("{}{}{}", space.n, space.h, space.b);
        out.push(theorem1_over(&format!("count_norm_sum_{tag}"), &[sum_classifier(space)], cfg.cap_images)?);
        let seed = cfg.seed_for(&format!("balanced {space}"));
        let balanced = (0..count)
            .map(|i| random_classifier(space, 2, RandomKind::Balanced, rng::derive_seed(seed, i), cfg.cap_images))
            .collect::<Result<Vec<_>>>()?;
        out.push(theorem1_over(&format!("count_norm_balanced_{tag}"), &balanced, cfg.cap_images)?);
        let zoo = classifier_zoo(space, cfg.zoo_seeds, cfg.seed_for(&format!("zoo {space}")), cfg.cap_images)?;
        out.push(theorem1_over(&format!("count_norm_zoo_{tag}"), &zoo, cfg.cap_images)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------- theorem2

fn theorem2_suite(cfg: &VerifyConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();

    let mut margin = None;
    let mut bad = Vec::new();
    let mut detail = Vec::new();
    for j in 1..=4 {
        let c = ratio(j, 20);
        let chk = theorem2_check(sp(16, 1, 1), &c, DEFAULT_SUPPORT_CAP)?;
        margin = min_opt(margin, (&chk.fraction - &chk.lower).to_f64().unwrap_or(f64::NAN));
        detail.push(format!("c={c}: {:.6}", chk.fraction.to_f64().unwrap_or(f64::NAN)));
        if !chk.holds {
            bad.push(format!("(16,1,1) c={c} fraction={} < {}", chk.fraction, chk.lower));
        }
    }
    out.push(CheckOutcome::new(
        "l1_lower_exact_16_1_1",
        4,
        margin,
        format!("exact robust fraction of the sum classifier's class 0 at L1 size 16c-2 >= 1-4c ({})", detail.join(", ")),
        bad,
    ));

    let mut cases = Vec::new();
    for n in [2, 4, 8, 16] {
        for h in 1..=3 {
            for b in 1..=2 {
                for j in 1..=9 {
                    cases.push((sp(n, h, b), ratio(j, 40)));
                }
            }
        }
    }
    let results = par::map_slice(&cases, |(space, c)| theorem2_check(*space, c, DEFAULT_SUPPORT_CAP));
    let mut margin = None;
    let mut bad = Vec::new();
    for r in results {
        let chk = r?;
        margin = min_opt(margin, (&chk.fraction - &chk.lower).to_f64().unwrap_or(f64::NAN));
        if !chk.holds {
            bad.push(format!("{} c={}", chk.space, chk.c));
        }
    }
    out.push(CheckOutcome::new(
        "l1_lower_exact_grid",
        cases.len() as u64,
        margin,
        "same comparison for n in {2,4,8,16}, h in 1..3, b in 1..2, c in {1/40..9/40}".into(),
        bad,
    ));

    let mut checked = 0;
    let mut bad = Vec::new();
    for space in [sp(2, 1, 1), sp(3, 1, 1), sp(2, 1, 2)] {
        let c = sum_classifier(space);
        for d in [ratio(0, 1), ratio(1, 2), ratio(1, 1), ratio(3, 2), ratio(2, 1), ratio(3, 1)] {
            let budget = PerturbationBudget::exact(1, d.clone())?;
            let ex = class_robust_fraction(&c, 0, &budget, Method::Exhaustive, cfg.limits())?;
            let exact = sum_exact_fraction_l1(space, &d, DEFAULT_SUPPORT_CAP)?;
            checked += 1;
            if ex.fraction != Fraction::Exact(exact.clone()) {
                bad.push(format!("{space} d={d}: exhaustive {:?} vs exact {exact}", ex.fraction));
            }
        }
    }
    out.push(CheckOutcome::new(
        "l1_exact_matches_exhaustive",
        checked,
        None,
        "PMF-based L1 fraction equals the exhaustive ball walk on (2,1,1), (3,1,1), (2,1,2)".into(),
        bad,
    ));

    // Monte Carlo interval coverage against the exhaustive value
    let space = sp(3, 1, 1);
    let c = sum_classifier(space);
    let budget = PerturbationBudget::new(0, 1.0)?;
    let exact = class_robust_fraction(&c, 0, &budget, Method::Exhaustive, cfg.limits())?
        .fraction
        .value();
    let seed = cfg.seed_for("coverage");
    let mut covered = 0;
    for run in 0..cfg.coverage_runs {
        let rep = class_robust_fraction(
            &c,
            0,
            &budget,
            Method::MonteCarlo {
                samples: cfg.coverage_samples,
                seed: rng::derive_seed(seed, run),
                sampler: Sampler::Rejection,
            },
            cfg.limits(),
        )?;
        let (lo, hi) = rep.ci95.expect("monte carlo reports carry an interval");
        covered += (lo <= exact && exact <= hi) as u64;
    }
    let need = (cfg.coverage_runs * 93).div_ceil(100);
    out.push(CheckOutcome::new(
        "monte_carlo_coverage",
        cfg.coverage_runs,
        Some(covered as f64 - need as f64),
        format!(
            "Wilson 95% interval covers the exact fraction {exact:.6} in {covered}/{} runs of {} samples on (3,1,1)",
            cfg.coverage_runs, cfg.coverage_samples
        ),
        if covered < need {
            vec![format!("coverage {covered}/{}", cfg.coverage_runs)]
        } else {
            vec![]
        },
    ));

    out.push(avg_distance_check(cfg)?);
    out.push(bounds_shape_check()?);
    Ok(out)
}

fn avg_distance_check(cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let space = sp(8, 1, 2);
    let seed = cfg.seed_for("avg distance");
    // per-chunk partial sums added in a fixed order, so the total does not
    // depend on the worker count
    const CHUNK: u64 = 1000;
    let chunks = cfg.avg_pairs.div_ceil(CHUNK);
    let partials = par::map_range(0..chunks, |k| {
        let mut acc = [0.0f64; 3];
        for i in k * CHUNK..((k + 1) * CHUNK).min(cfg.avg_pairs) {
            let a = sample_uniform_indexed(space, seed, 2 * i);
            let b = sample_uniform_indexed(space, seed, 2 * i + 1);
            for (p, slot) in acc.iter_mut().enumerate() {
                *slot += norm_distance(&a, &b, p as u32).expect("same space").to_f64();
            }
        }
        acc
    });
    let sums = partials.iter().fold([0.0f64; 3], |mut x, y| {
        x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
        x
    });
    let mut margin = None;
    let mut bad = Vec::new();
    let mut detail = Vec::new();
    for p in 0..3u32 {
        let mean = sums[p as usize] / cfg.avg_pairs as f64;
        let bound = avg_distance_lower_bound(8, 1, 2, p)?;
        margin = min_opt(margin, mean - bound);
        detail.push(format!("p={p}: mean {mean:.4} vs bound {bound:.4}"));
        if mean < bound {
            bad.push(format!("p={p} mean={mean} bound={bound}"));
        }
    }
    Ok(CheckOutcome::new(
        "average_distance",
        3,
        margin,
        format!("{} uniform pairs in (8,1,2): {}", cfg.avg_pairs, detail.join(", ")),
        bad,
    ))
}

fn bounds_shape_check() -> Result<CheckOutcome> {
    let mut checked = 0;
    let mut bad = Vec::new();
    for p in 0..=3 {
        for &r in &[0.1, 0.5, 0.9] {
            for h in [1, 3] {
                for b in [1, 8] {
                    let q = |n| BoundQuery::new(r, p, n, h, b);
                    for n in [1, 10, 100, 1000] {
                        let (a, z) = (q(n)?, q(n + 1)?);
                        checked += 1;
                        if upper_bound_size(&z) <= upper_bound_size(&a) {
                            bad.push(format!("upper not increasing in n at p={p} r={r} h={h} b={b} n={n}"));
                        }
                        if lower_bound_size(&z) < lower_bound_size(&a) {
                            bad.push(format!("lower decreasing in n at p={p} r={r} h={h} b={b} n={n}"));
                        }
                        let more_h = BoundQuery::new(r, p, n, h + 1, b)?;
                        let more_r = BoundQuery::new(r + 0.05, p, n, h, b)?;
                        if upper_bound_size(&more_h) <= upper_bound_size(&a) {
                            bad.push(format!("upper not increasing in h at p={p} r={r} h={h} b={b} n={n}"));
                        }
                        if upper_bound_size(&more_r) >= upper_bound_size(&a) {
                            bad.push(format!("upper not decreasing in r at p={p} r={r} h={h} b={b} n={n}"));
                        }
                    }
                }
            }
        }
    }
    // both sides grow like n^(1/max(p,1)) and eventually cross
    for p in 0..=3u32 {
        let e = 1.0 / p.max(1) as f64;
        let scaled = |n: u32| -> Result<(f64, f64)> {
            let q = BoundQuery::new(0.5, p, n, 3, 8)?;
            let s = (n as f64).powf(e);
            Ok((upper_bound_size(&q) / s, lower_bound_size(&q) / s))
        };
        let pts = [1_000, 10_000, 100_000, 1_000_000].map(scaled);
        let pts = pts.into_iter().collect::<Result<Vec<_>>>()?;
        checked += 1;
        let steps: Vec<(f64, f64)> = pts.windows(2).map(|w| ((w[1].0 - w[0].0).abs(), (w[1].1 - w[0].1).abs())).collect();
        let shrinking = steps.windows(2).all(|s| s[1].0 <= s[0].0 && s[1].1 <= s[0].1);
        let positive = pts.iter().all(|&(u, l)| u > 0.0 && l > 0.0);
        if !(shrinking && positive) {
            bad.push(format!("scaled bounds do not settle for p={p}: {pts:?}"));
        }
        let q = BoundQuery::new(0.5, p, 10_000, 3, 8)?;
        checked += 1;
        if upper_bound_size(&q) < lower_bound_size(&q) {
            bad.push(format!("upper < lower at n=10^4 p={p}"));
        }
        checked += 1;
        if crossover_n(0.5, 3, 8, p, 10_000)?.is_none() {
            bad.push(format!("no crossover below 10^4 for p={p}"));
        }
    }
    for p in [2, 3] {
        for b in [4, 8, 12] {
            checked += 1;
            let q = BoundQuery::new(0.5, p, 1, 3, b)?;
            let small_n_term = upper_bound(&q).term;
            match term_crossover_n(0.5, 3, b, p, 1 << 22)? {
                Some(_) => {}
                None => bad.push(format!("count term never dominates for p={p} b={b} ({small_n_term:?} at n=1)")),
            }
        }
    }
    Ok(CheckOutcome::new(
        "bound_shape",
        checked,
        None,
        "monotonicity in n, h, r; upper and lower scale like n^(1/max(p,1)); upper >= lower at n = 10^4; term crossover exists".into(),
        bad,
    ))
}

// ---------------------------------------------------------------- theorem3

/// Nearest point of each cell by clamping to the closed cell; the distance
/// differs from the half-open one only on measure-zero boundaries.
fn nearest_other_cell(c: &Classifier, start: &[f64], label: u32) -> Option<f64> {
    let params = c.params();
    let q = params.level_count();
    let total = params.enumerable(u128::MAX).ok()?;
    (0..total)
        .filter_map(|i| {
            let img = ImageTensor::from_index(params, i);
            if c.decide(&img) == label {
                return None;
            }
            let d2: f64 = img
                .levels()
                .iter()
                .zip(start)
                .map(|(&j, &x)| {
                    let (lo, hi) = (j as f64 / q as f64, (j + 1) as f64 / q as f64);
                    let y = x.clamp(lo, hi);
                    (x - y) * (x - y)
                })
                .sum();
            Some(d2.sqrt())
        })
        .reduce(f64::min)
}

fn theorem3_suite(cfg: &VerifyConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let space = sp(2, 1, 2);
    let limits = SearchLimits::default();
    let mut classifiers = vec![sum_classifier(space)];
    classifiers.extend(classifier_zoo(space, 1, cfg.seed_for("cell zoo"), cfg.cap_images)?.into_iter().skip(1));
    let radii = [0.25, 0.5, 1.0, 1.5, 2.0];
    let seed = cfg.seed_for("cell search");
    let mut checked = 0;
    let mut bad = Vec::new();
    for c in &classifiers {
        let total = space.enumerable(cfg.cap_images)?;
        let results = par::map_range(0..total, |i| -> Result<(u64, Vec<String>)> {
            let img = ImageTensor::from_index(space, i);
            let label = c.decide(&img);
            let mut bad = Vec::new();
            let mut n = 0;
            for &radius in &radii {
                for s in 0..2 {
                    n += 1;
                    let out = find_perturbation(c, &img, radius, rng::derive_seed(seed, i * 16 + s), limits)?;
                    let nearest = nearest_other_cell(c, &out.start, label);
                    let tag = || format!("{} image {i} radius {radius} seed #{s}", c.name());
                    match &out.result {
                        Some(levels) => {
                            if c.decide_levels(levels) == label {
                                bad.push(format!("{}: same label", tag()));
                            }
                            if out.l2_moved > out.length_bound {
                                bad.push(format!("{}: moved {} > {}", tag(), out.l2_moved, out.length_bound));
                            }
                            let found = nearest_other_cell_of(levels, &out.start, space.level_count());
                            if nearest.is_none_or(|d| found > d + 1e-12) {
                                bad.push(format!("{}: not the nearest other cell", tag()));
                            }
                        }
                        None => {
                            if nearest.is_some_and(|d| d <= radius - 1e-12) {
                                bad.push(format!("{}: missed a cell at distance {:?}", tag(), nearest));
                            }
                        }
                    }
                    if radius >= (space.dimension() as f64).sqrt() && nearest.is_some() && out.result.is_none() {
                        bad.push(format!("{}: failed with a ball covering the cube", tag()));
                    }
                }
            }
            Ok((n, bad))
        });
        for r in results {
            let (n, b) = r?;
            checked += n;
            bad.extend(b);
        }
    }
    out.push(CheckOutcome::new(
        "cell_search_contract",
        checked,
        None,
        format!(
            "on (2,1,2), {} classifiers, every image, radii {radii:?}: successes change the label, move at most radius + 2n sqrt(h)/2^b and hit the nearest other cell; failures have no other cell in the ball",
            classifiers.len()
        ),
        bad,
    ));

    let c = sum_classifier(space);
    for radius in [1.5, 2.0] {
        let rate = failure_rate(&c, 0, radius, cfg.failure_samples, cfg.seed_for(&format!("failure {radius}")), limits)?;
        let limit = 2.0 * (-radius * radius / 2.0).exp() + 0.02;
        let mut bad = Vec::new();
        if rate.ci95.1 >= limit {
            bad.push(format!("radius {radius}: upper CI {} >= {limit}", rate.ci95.1));
        }
        if rate.length_violations + rate.label_violations > 0 {
            bad.push(format!(
                "radius {radius}: {} length and {} label violations",
                rate.length_violations, rate.label_violations
            ));
        }
        out.push(CheckOutcome::new(
            &format!("failure_rate_radius_{radius}"),
            rate.samples,
            Some(limit - rate.ci95.1),
            format!(
                "sum classifier on (2,1,2), class 0: failure rate {:.4} (CI {:.4}..{:.4}) vs 2exp(-c^2/2) + 0.02 = {limit:.4}",
                rate.rate, rate.ci95.0, rate.ci95.1
            ),
            bad,
        ));
    }

    let mut checked = 0;
    let mut margin = None;
    let mut bad = Vec::new();
    for space in [sp(2, 1, 1), sp(2, 1, 2), sp(1, 2, 2)] {
        let zoo = classifier_zoo(space, cfg.zoo_seeds, cfg.seed_for(&format!("disc {space}")), cfg.cap_images)?;
        for c in &zoo {
            for e in discretization_check(c, &[0.5, 1.0, 1.5, 2.0], cfg.limits())? {
                checked += 1;
                margin = min_opt(margin, e.non_robust_fraction - e.lower);
                if !e.holds {
                    bad.push(format!("{} on {space} label={} c={}", c.name(), e.label, e.c));
                }
            }
        }
    }
    out.push(CheckOutcome::new(
        "l2_nonrobust_fraction",
        checked,
        margin,
        "non-robust fraction at L2 size c + 2n sqrt(h)/2^b >= 1 - 2exp(-c^2/2) for interesting classes of the zoo".into(),
        bad,
    ));
    Ok(out)
}

fn nearest_other_cell_of(levels: &[u32], start: &[f64], q: u64) -> f64 {
    levels
        .iter()
        .zip(start)
        .map(|(&j, &x)| {
            let (lo, hi) = (j as f64 / q as f64, (j + 1) as f64 / q as f64);
            let y = x.clamp(lo, hi);
            (x - y) * (x - y)
        })
        .sum::<f64>()
        .sqrt()
}

// -------------------------------------------------------------- reductions

const REDUCTION_DS: [(i64, i64); 7] = [(0, 1), (1, 2), (1, 1), (3, 2), (2, 1), (5, 2), (3, 1)];

fn reductions_suite(cfg: &VerifyConfig) -> Result<Vec<CheckOutcome>> {
    let spaces = [sp(2, 1, 1), sp(2, 1, 2), sp(3, 1, 1)];
    let limits = cfg.limits();
    let mut zoos = Vec::new();
    for space in spaces {
        zoos.push((space, classifier_zoo(space, cfg.zoo_seeds, cfg.seed_for(&format!("reduction {space}")), cfg.cap_images)?));
    }
    let mut out = Vec::new();
    type Check<'a> = Box<dyn Fn(&Classifier, &BigRational) -> Result<Vec<(String, ReductionReport)>> + 'a>;
    let checks: Vec<(&str, &str, Check)> = vec![
        (
            "l1_to_l0",
            "robust to L1 size d implies robust to L0 size d",
            Box::new(|c, d| Ok(vec![(String::new(), reduction_check_l1_to_l0(c, d, limits)?)])),
        ),
        (
            "l0_to_lp",
            "robust to L0 size d implies robust to Lp size d^(1/p)/(2^b-1), not robust implies not robust to Lp size d^(1/p), p in {2,3}",
            Box::new(|c, d| {
                [2, 3].iter()
                    .map(|&p| Ok((format!(" p={p}"), reduction_check_l0_to_lp(c, d, p, limits)?)))
                    .collect()
            }),
        ),
        (
            "lp_to_l2",
            "robust to Lp size d^(2/p) implies robust to L2 size d, p in {2,3}",
            Box::new(|c, d| {
                [2, 3].iter()
                    .map(|&p| Ok((format!(" p={p}"), reduction_check_lp_to_l2(c, d, p, limits)?)))
                    .collect()
            }),
        ),
    ];
    for (id, what, check) in &checks {
        let mut checked = 0;
        let mut bad = Vec::new();
        for (space, zoo) in &zoos {
            for c in zoo {
                for &(a, b) in &REDUCTION_DS {
                    let d = ratio(a, b);
                    for (tag, rep) in check(c, &d)? {
                        checked += rep.checked;
                        bad.extend(rep.violations.iter().map(|i| {
                            format!("{} on {space} d={d}{tag} image {i}", c.name())
                        }));
                    }
                }
            }
        }
        out.push(CheckOutcome::new(
            id,
            checked,
            None,
            format!("{what}; every image of (2,1,1), (2,1,2), (3,1,1), classifier zoo, d in 0..3"),
            bad,
        ));
    }

    // the exact nearest other image decides robustness
    let mut checked = 0;
    let mut bad = Vec::new();
    for (space, zoo) in zoos.iter().take(2) {
        for c in zoo.iter().filter(|c| c.label_count() > 1) {
            let total = space.enumerable(cfg.cap_images)?;
            let results = par::map_range(0..total, |i| -> Result<(u64, Vec<String>)> {
                let img = ImageTensor::from_index(*space, i);
                let mut n = 0;
                let mut bad = Vec::new();
                for p in 0..=2 {
                    let min = match minimal_perturbation(c, &img, p, cfg.cap_images) {
                        Ok(m) => Some(m),
                        Err(Error::NoOtherClass) => None,
                        Err(e) => return Err(e),
                    };
                    if let Some(m) = &min {
                        let w = ImageTensor::new(*space, m.witness.clone())?;
                        if norm_distance(&img, &w, p)? != m.distance || c.decide(&w) == c.decide(&img) {
                            bad.push(format!("{} on {space} image {i} p={p}: bad witness", c.name()));
                        }
                    }
                    for &(a, b) in &REDUCTION_DS {
                        let budget = PerturbationBudget::exact(p, ratio(a, b))?;
                        let limit = budget.cost_limit(space.max_level());
                        let robust = image_is_robust_walk(c, &img, &budget, limits)?;
                        let reachable = min.as_ref().is_some_and(|m| m.cost <= limit);
                        n += 1;
                        if robust == reachable {
                            bad.push(format!("{} on {space} image {i} p={p} d={a}/{b}", c.name()));
                        }
                    }
                }
                Ok((n, bad))
            });
            for r in results {
                let (n, b) = r?;
                checked += n;
                bad.extend(b);
            }
        }
    }
    out.push(CheckOutcome::new(
        "minimal_vs_robust",
        checked,
        None,
        "minimal perturbation <= d exactly when the image is not robust at size d; (2,1,1) and (2,1,2), zoo, p in 0..2".into(),
        bad,
    ));

    let mut checked = 0;
    let mut bad = Vec::new();
    for space in [sp(2, 1, 1), sp(2, 1, 2), sp(3, 1, 1)] {
        let c = sum_classifier(space);
        let imgs: Vec<ImageTensor> = enumerate_space(space, cfg.cap_images)?.collect();
        let results = par::map_slice(&imgs, |img| -> Result<Vec<String>> {
            let mut bad = Vec::new();
            for p in 0..=2 {
                let fast = attack_sum_classifier(img, p)?;
                let slow = minimal_perturbation(&c, img, p, cfg.cap_images)?;
                if fast.cost != slow.cost {
                    bad.push(format!("{space} {:?} p={p}: attack {} vs oracle {}", img.levels(), fast.cost, slow.cost));
                }
            }
            Ok(bad)
        });
        for r in results {
            checked += 3;
            bad.extend(r?);
        }
    }
    out.push(CheckOutcome::new(
        "sum_attack_matches_oracle",
        checked,
        None,
        "analytic sum-classifier attack cost equals the exhaustive minimum on (2,1,1), (2,1,2), (3,1,1), p in 0..2".into(),
        bad,
    ));
    Ok(out)
}
