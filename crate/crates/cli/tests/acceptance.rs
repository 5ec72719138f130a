//! Acceptance criteria, one line each. Runs without the test harness so the
//! summary is always printed.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use robustness_envelope::bounds::{avg_distance_lower_bound, BoundQuery};
use robustness_envelope::classifiers::{
    classifier_zoo, random_classifier, sum_classifier, Classifier, RandomKind,
};
use robustness_envelope::exactmath::{
    binom, binomial_tail, gaussian_checks, hoeffding_bound, hoeffding_sweep, mode_bound_sweep,
    ratio, tail_ratio_monotone_sweep, TailQuery, DEFAULT_SUPPORT_CAP,
};
use robustness_envelope::hamming::{
    hamgraph_bound, hamgraph_exhaustive, hamgraph_random, harper_exhaustive, GraphParams,
};
use robustness_envelope::image_space::{
    enumerate_space, norm_distance, sample_uniform_indexed, ImageTensor, PerturbationBudget,
    SpaceParams,
};
use robustness_envelope::perturb::{
    attack_sum_classifier, failure_rate, find_perturbation, minimal_perturbation, SearchLimits,
};
use robustness_envelope::robustness::{
    class_robust_fraction, image_is_robust, reduction_check_l0_to_lp, reduction_check_l1_to_l0,
    sum_exact_fraction_l1, theorem1_holds, Fraction, Limits, Method,
};
use robustness_envelope::verify::{gaussian_grid, gaussian_k_grid, run_suite, Suite, VerifyConfig};
use robustness_envelope::Error;

const CAP: u128 = 1 << 20;
const SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;

fn sp(n: u32, h: u32, b: u32) -> SpaceParams {
    SpaceParams::new(n, h, b).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    ensure(t.elapsed() < limit, || format!("took {:.1?}, limit {limit:?}", t.elapsed()))
}

fn err(e: Error) -> String {
    e.to_string()
}

fn binomial() -> Outcome {
    let t = Instant::now();
    let mode = mode_bound_sweep(10_000);
    ensure(mode.checked == 10_000 && mode.violations.is_empty(), || {
        format!("mode bound fails at {:?}", mode.violations.first())
    })?;
    within(t, Duration::from_secs(30))?;
    let mode_time = t.elapsed();

    let tenths: Vec<BigRational> = (1..10).map(|j| ratio(j, 10)).collect();
    let mono = tail_ratio_monotone_sweep(40, 5, &tenths).map_err(err)?;
    ensure(mono.violations.is_empty(), || format!("ratio not monotone at {:?}", mono.violations[0]))?;

    let quarters = [ratio(1, 4), ratio(1, 2), ratio(3, 4)];
    let hoeff = hoeffding_sweep(1..=64, &quarters, &hoeffding_bound).map_err(err)?;
    ensure(hoeff.violations.is_empty(), || format!("tail ratio bound fails at {:?}", hoeff.violations[0]))?;
    Ok(format!(
        "mode bound n<=10^4 in {mode_time:.1?}; {} monotone, {} ratio instances; 0 violations",
        mono.checked, hoeff.checked
    ))
}

fn hamming_isoperimetry() -> Outcome {
    let t = Instant::now();
    let cs: Vec<f64> = (1..=8).map(|i| i as f64 / 4.0).collect();
    let ex = hamgraph_exhaustive(GraphParams::new(4, 2).unwrap(), &cs, &hamgraph_bound, 1 << 16).map_err(err)?;
    // subsets of 16 vertices with 1..=8 members
    let subsets: BigUint = (1..=8).map(|k| binom(16, k)).sum();
    ensure(BigUint::from(ex.checked) == subsets * BigUint::from(cs.len()), || {
        format!("checked {} instances", ex.checked)
    })?;
    ensure(ex.passed(), || format!("H(4,2): {:?}", ex.violations[0]))?;
    let mut checked = ex.checked;
    for (i, (d, q)) in [(6, 2), (4, 3)].into_iter().enumerate() {
        let g = GraphParams::new(d, q).unwrap();
        let rep = hamgraph_random(g, &cs, 100_000, SEED + i as u64, &hamgraph_bound).map_err(err)?;
        ensure(rep.checked == 100_000 * cs.len() as u64, || format!("{g}: checked {}", rep.checked))?;
        ensure(rep.passed(), || format!("{g}: {:?}", rep.violations[0]))?;
        checked += rep.checked;
    }
    within(t, Duration::from_secs(300))?;
    Ok(format!("{checked} subset/c instances, min margin {:.3e}, {:.1?}", ex.min_margin, t.elapsed()))
}

fn harper() -> Outcome {
    let a = harper_exhaustive(GraphParams::new(4, 2).unwrap(), &[1, 2, 3], 1e-9, 1 << 16).map_err(err)?;
    let b = harper_exhaustive(GraphParams::new(2, 3).unwrap(), &[1], 1e-9, 1 << 16).map_err(err)?;
    ensure(a.checked == ((1 << 16) - 2) * 3, || format!("H(4,2) checked {}", a.checked))?;
    ensure(b.checked == (1 << 9) - 2, || format!("H(2,3) checked {}", b.checked))?;
    ensure(a.passed() && b.passed(), || format!("{:?}", a.violations.first().or(b.violations.first())))?;
    Ok(format!("{} proper subsets x k, 0 violations", a.checked + b.checked))
}

fn theorem1() -> Outcome {
    let t = Instant::now();
    let cs = [0.5, 0.75, 1.0];
    let mut checked = 0;
    let mut min_margin = f64::INFINITY;
    for (space, count) in [(sp(2, 1, 1), 1000), (sp(2, 1, 2), 100)] {
        let mut cls = vec![sum_classifier(space)];
        for i in 0..count {
            cls.push(random_classifier(space, 2, RandomKind::Balanced, SEED ^ i, CAP).map_err(err)?);
        }
        for c in &cls {
            let rep = theorem1_holds(c, &cs, CAP).map_err(err)?;
            for e in &rep.entries {
                ensure(e.holds && e.margin > 0.0, || {
                    format!("{} on {space}: label {} c={} fraction {} bound {}", c.name(), e.label, e.c, e.fraction, e.bound)
                })?;
                min_margin = min_margin.min(e.margin);
                checked += 1;
            }
        }
    }
    within(t, Duration::from_secs(600))?;
    Ok(format!("{checked} class/c pairs, min margin {min_margin:.4}, {:.1?}", t.elapsed()))
}

fn theorem2() -> Outcome {
    let s = sp(16, 1, 1);
    let u = |k: i64| binomial_tail(&TailQuery::new(256, k, ratio(1, 2)).unwrap());
    let mut shown = Vec::new();
    for j in 1..=4 {
        let c = ratio(j, 20);
        let d = &c * BigRational::from_integer(16.into()) - BigRational::from_integer(2.into());
        let got = sum_exact_fraction_l1(s, &d, DEFAULT_SUPPORT_CAP).map_err(err)?;
        // class 0 is sum <= 127; a budget d lets the sum rise by floor(d)
        let want = if d < BigRational::zero() {
            BigRational::one()
        } else {
            u(127 - d.floor().to_integer().to_i64().unwrap()) / u(127)
        };
        ensure(got == want, || format!("c={c}: {got} != {want}"))?;
        let lower = BigRational::one() - ratio(4, 1) * &c;
        ensure(got >= lower, || format!("c={c}: fraction {got} < {lower}"))?;
        shown.push(format!("{:.4}", got.to_f64().unwrap()));
    }
    for space in [sp(2, 1, 1), sp(3, 1, 1)] {
        let c = sum_classifier(space);
        for (num, den) in [(0, 1), (1, 2), (1, 1), (3, 2), (2, 1), (3, 1)] {
            let d = ratio(num, den);
            let budget = PerturbationBudget::exact(1, d.clone()).map_err(err)?;
            let ex = class_robust_fraction(&c, 0, &budget, Method::Exhaustive, Limits::default()).map_err(err)?;
            let exact = sum_exact_fraction_l1(space, &d, DEFAULT_SUPPORT_CAP).map_err(err)?;
            ensure(ex.fraction == Fraction::Exact(exact.clone()), || {
                format!("{space} d={d}: exhaustive {:?} vs {exact}", ex.fraction)
            })?;
        }
    }
    Ok(format!("(16,1,1) fractions {} for c=0.05..0.2; exhaustive agreement on (2,1,1), (3,1,1)", shown.join(", ")))
}

fn anticoncentration() -> Outcome {
    let rep = run_suite(Suite::Anticonc, &VerifyConfig::default()).map_err(err)?;
    let checked: u64 = rep.checks.iter().map(|c| c.checked).sum();
    match rep.checks.iter().find(|c| !c.passed) {
        Some(c) => Err(format!("{}: {:?}", c.id, c.counterexample)),
        None => Ok(format!("{checked} exact instances, 0 violations")),
    }
}

fn reductions() -> Outcome {
    let mut checked = 0;
    for space in [sp(2, 1, 1), sp(2, 1, 2), sp(3, 1, 1)] {
        for c in classifier_zoo(space, 3, SEED, CAP).map_err(err)? {
            for (num, den) in [(0, 1), (1, 2), (1, 1), (3, 2), (2, 1), (5, 2), (3, 1)] {
                let d = ratio(num, den);
                let r = reduction_check_l1_to_l0(&c, &d, Limits::default()).map_err(err)?;
                ensure(r.holds(), || format!("L1->L0 {} on {space} d={d}: images {:?}", c.name(), r.violations))?;
                checked += r.checked;
                for p in [2, 3] {
                    let r = reduction_check_l0_to_lp(&c, &d, p, Limits::default()).map_err(err)?;
                    ensure(r.holds(), || format!("L0->L{p} {} on {space} d={d}: images {:?}", c.name(), r.violations))?;
                    checked += r.checked;
                }
            }
        }
    }
    Ok(format!("{checked} image checks, 0 violations"))
}

fn cell_search() -> Outcome {
    let t = Instant::now();
    let s = sp(2, 1, 2);
    let c = sum_classifier(s);
    let mut calls = 0;
    let mut successes = 0;
    for img in enumerate_space(s, CAP).map_err(err)? {
        for radius in [0.25, 0.5, 1.0, 1.5, 2.0] {
            for seed in 0..4 {
                let out = find_perturbation(&c, &img, radius, seed, SearchLimits::default()).map_err(err)?;
                calls += 1;
                if let Some(levels) = &out.result {
                    successes += 1;
                    let found = ImageTensor::new(s, levels.clone()).map_err(err)?;
                    let moved = norm_distance(&img, &found, 2).map_err(err)?.to_f64();
                    let bound = radius + 2.0 * s.n as f64 * (s.h as f64).sqrt() / (1u32 << s.b) as f64;
                    ensure(c.decide(&found) != c.decide(&img), || format!("{:?} r={radius}: same label", img.levels()))?;
                    ensure(moved <= bound, || format!("{:?} r={radius}: moved {moved} > {bound}", img.levels()))?;
                }
            }
        }
    }
    let mut rates = Vec::new();
    for radius in [1.5f64, 2.0] {
        let fr = failure_rate(&c, 0, radius, 10_000, SEED, SearchLimits::default()).map_err(err)?;
        let limit = 2.0 * (-radius * radius / 2.0).exp() + 0.02;
        ensure(fr.ci95.1 < limit, || format!("radius {radius}: CI upper {} >= {limit}", fr.ci95.1))?;
        ensure(fr.length_violations == 0 && fr.label_violations == 0, || format!("radius {radius}: contract violations"))?;
        rates.push(format!("r={radius}: {:.4} (CI hi {:.4} < {limit:.4})", fr.rate, fr.ci95.1));
    }
    within(t, Duration::from_secs(300))?;
    Ok(format!("{successes}/{calls} searches succeeded within bound; {}", rates.join("; ")))
}

fn gaussian() -> Outcome {
    let rep = gaussian_checks(&gaussian_grid(), &gaussian_k_grid(), 1e-12).map_err(err)?;
    ensure(rep.all_hold(), || format!("{:?}", rep.failures.first()))?;
    ensure(rep.max_relative_error <= 1e-12, || format!("precision {}", rep.max_relative_error))?;
    Ok(format!("{} grid points x {} k, Phi relative error <= {:.1e}", gaussian_grid().len(), gaussian_k_grid().len(), rep.max_relative_error))
}

fn average_distance() -> Outcome {
    let s = sp(8, 1, 2);
    let pairs = 100_000u64;
    let mut sums = [0.0f64; 3];
    for i in 0..pairs {
        let a = sample_uniform_indexed(s, SEED, 2 * i);
        let b = sample_uniform_indexed(s, SEED, 2 * i + 1);
        for (p, sum) in sums.iter_mut().enumerate() {
            *sum += norm_distance(&a, &b, p as u32).map_err(err)?.to_f64();
        }
    }
    let mut shown = Vec::new();
    for p in 0..3u32 {
        let mean = sums[p as usize] / pairs as f64;
        let bound = avg_distance_lower_bound(8, 1, 2, p).map_err(err)?;
        ensure(mean >= bound, || format!("p={p}: mean {mean} < bound {bound}"))?;
        shown.push(format!("p={p} {mean:.3} >= {bound:.3}"));
    }
    Ok(shown.join(", "))
}

const TABLE_SNAPSHOT: &str = "\
p,upper_size,lower_size,c_upper,c_lower,dominating_term
0,325.014,46.4974,0.832555,0.125,isoperimetric
1,325.014,46.4974,0.832555,0.125,isoperimetric
2,4.6962,0.0267408,1.66511,0.125,discretization
";

fn sig6(x: f64) -> String {
    format!("{:.5e}", x)
}

fn table_snapshot() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_robustness-envelope"))
        .args(["bounds", "--r", "0.5", "--n", "224", "--h", "3", "--b", "8", "--p", "0,1,2"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("exit {:?}", out.status.code()))?;
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    ensure(text == TABLE_SNAPSHOT, || format!("table differs:\n{text}"))?;
    // closed forms evaluated here, compared at 6 significant digits
    let (ln4, rh, n) = (4f64.ln(), 3f64.sqrt(), 224.0);
    let count = 2.0 + (1.5 * ln4).sqrt() * n;
    let cell = (2.0 * ln4).sqrt() + 2.0 * rh * n / 256.0;
    let lower = -2.0 + 0.125 * rh * n;
    for (row, up, lo) in [(1, count, lower), (2, count, lower), (3, count.sqrt().min(cell), lower.sqrt() / 255.0)] {
        let fields: Vec<f64> = text.lines().nth(row).unwrap().split(',').skip(1).take(2).map(|f| f.parse().unwrap()).collect();
        ensure(sig6(fields[0]) == sig6(up) && sig6(fields[1]) == sig6(lo), || format!("row {row}: {fields:?} vs {up}, {lo}"))?;
    }
    let q = BoundQuery::new(0.5, 2, 224, 3, 8).map_err(err)?;
    Ok(format!("3 rows match snapshot; p=2 upper {:.6} (r -> c = {:.6})", cell, q.c_cell()))
}

fn oracle_coherence() -> Outcome {
    let mut checked = 0;
    for space in [sp(2, 1, 1), sp(2, 1, 2)] {
        let mut cls: Vec<Classifier> = classifier_zoo(space, 3, SEED, CAP).map_err(err)?;
        cls.retain(|c| c.label_count() > 1);
        for c in &cls {
            for img in enumerate_space(space, CAP).map_err(err)? {
                for p in 0..=2 {
                    let min = match minimal_perturbation(c, &img, p, CAP) {
                        Ok(m) => Some(m),
                        Err(Error::NoOtherClass) => None,
                        Err(e) => return Err(err(e)),
                    };
                    for (num, den) in [(0, 1), (1, 3), (1, 2), (1, 1), (3, 2), (2, 1), (3, 1), (5, 1)] {
                        let b = PerturbationBudget::exact(p, ratio(num, den)).map_err(err)?;
                        let robust = image_is_robust(c, &img, &b, Limits::default()).map_err(err)?;
                        let reachable = min.as_ref().is_some_and(|m| m.distance.to_f64() <= b.size() + 1e-12);
                        checked += 1;
                        ensure(robust != reachable, || format!("{} {:?} p={p} d={num}/{den}", c.name(), img.levels()))?;
                    }
                    if c.is_sum() {
                        let a = attack_sum_classifier(&img, p).map_err(err)?;
                        let m = min.as_ref().expect("sum classifier has two classes");
                        ensure(a.distance == m.distance, || format!("sum attack {:?} p={p}", img.levels()))?;
                    }
                }
            }
        }
    }
    Ok(format!("{checked} image/norm/size triples, 0 mismatches"))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 12] = [
        ("binomial suite", binomial),
        ("hamming isoperimetry", hamming_isoperimetry),
        ("harper lower bound", harper),
        ("count-norm upper bound at desk scale", theorem1),
        ("exact L1 lower bound", theorem2),
        ("anti-concentration", anticoncentration),
        ("reduction lemmas", reductions),
        ("cell search contracts", cell_search),
        ("gaussian scalar suite", gaussian),
        ("average distance", average_distance),
        ("bounds table snapshot", table_snapshot),
        ("oracle coherence", oracle_coherence),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
