use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use robustness_envelope::exactmath::{
    anti_concentration_holds, binom, binomial_spread_holds, binomial_spread_sides, binomial_tail,
    gaussian_checks, harper_rhs, hoeffding_ratio_holds, mode_bound_holds, phi_enclosure,
    pmf_iid_sum, pmf_uniform_levels, ratio, solve_p_for_tail, tail_ratio, DiscretePmf, TailQuery,
    DEFAULT_SUPPORT_CAP,
};

/// Binomial tail by enumerating every outcome of `n` coin flips.
fn tail_by_outcomes(n: u32, p: &BigRational, k: i64) -> BigRational {
    let q = BigRational::one() - p;
    let mut total = BigRational::zero();
    for mask in 0u64..1 << n {
        let ones = mask.count_ones() as i64;
        if ones <= k {
            let mut w = BigRational::one();
            for i in 0..n {
                w *= if mask >> i & 1 == 1 { p } else { &q };
            }
            total += w;
        }
    }
    total
}

#[test]
fn binomial_coefficients() {
    assert_eq!(binom(4, 2), BigUint::from(6u32));
    assert_eq!(binom(5, 7), BigUint::zero());
    // 10! / (3! 7!)
    let fact = |n: u32| (1..=n).map(BigUint::from).product::<BigUint>();
    assert_eq!(binom(10, 3), fact(10) / (fact(3) * fact(7)));
}

#[test]
fn pascal_and_row_sums() {
    for n in 1..=200u64 {
        for k in 1..n as i64 {
            assert_eq!(binom(n, k), binom(n - 1, k - 1) + binom(n - 1, k), "n={n} k={k}");
        }
        let row: BigUint = (0..=n as i64).map(|k| binom(n, k)).sum();
        assert_eq!(row, BigUint::from(2u32).pow(n as u32));
    }
}

#[test]
fn tail_examples() {
    let half = ratio(1, 2);
    assert_eq!(binomial_tail(&TailQuery::new(2, 1, half.clone()).unwrap()), ratio(3, 4));
    assert_eq!(binomial_tail(&TailQuery::new(5, -1, ratio(1, 3)).unwrap()), BigRational::zero());
    assert_eq!(binomial_tail(&TailQuery::new(5, 5, half.clone()).unwrap()), BigRational::one());
    for n in 1..=10 {
        for k in -1..=n as i64 {
            for p in [ratio(1, 3), ratio(1, 2), ratio(4, 5)] {
                let q = TailQuery::new(n as u64, k, p.clone()).unwrap();
                assert_eq!(binomial_tail(&q), tail_by_outcomes(n, &p, k));
            }
        }
    }
}

#[test]
fn mode_bound_examples() {
    assert!(mode_bound_holds(1));
    assert!(mode_bound_holds(4));
    assert!(mode_bound_holds(9));
    // cross-multiplied by hand: 126^2 * 9 against 4^9
    let (lhs, rhs) = (126u64 * 126 * 9, 4u64.pow(9));
    assert_eq!((lhs, rhs), (142_884, 262_144));
}

#[test]
fn tail_ratio_examples() {
    let half = ratio(1, 2);
    let t = |k| tail_by_outcomes(16, &half, k);
    assert_eq!(t(7) * BigRational::from_integer(65536.into()), BigRational::from_integer(26333.into()));
    assert_eq!(tail_ratio(16, 3, &half, 7).unwrap(), t(4) / t(7));
    assert_eq!(tail_ratio(16, 3, &half, 7).unwrap(), ratio(2517, 26333));
    assert_eq!(tail_ratio(8, 9, &half, 8).unwrap(), BigRational::zero());
    assert_eq!(tail_ratio(4, 1, &half, 4).unwrap(), ratio(15, 16));
    assert!(hoeffding_ratio_holds(16, 3, &half, 7).unwrap());
    assert!(hoeffding_ratio_holds(16, 1, &half, 7).unwrap());
}

#[test]
fn solve_p_round_trips() {
    let p = solve_p_for_tail(10, 5, &ratio(638, 1024), 1e-12).unwrap();
    assert!((p - 0.5).abs() < 1e-9);
    let p = solve_p_for_tail(6, 3, &ratio(1, 2), 1e-12).unwrap();
    let back = (0..=3)
        .map(|i| binom(6, i).to_f64().unwrap() * p.powi(i as i32) * (1.0 - p).powi(6 - i as i32))
        .sum::<f64>();
    assert!((back - 0.5).abs() < 1e-9);
    let near_one = BigRational::one() - ratio(1, 1 << 40);
    assert!(solve_p_for_tail(10, 0, &near_one, 1e-15).unwrap() < 1e-10);
}

#[test]
fn harper_rhs_against_balls() {
    // a single vertex of H(4,2) expands to 5 vertices
    let v = harper_rhs(4, 1, &ratio(1, 16), 1e-12).unwrap();
    assert!(5.0 / 16.0 >= v - 1e-9);
    // half the cube
    let v = harper_rhs(4, 2, &ratio(1, 2), 1e-12).unwrap();
    assert!(v <= 1.0);
}

#[test]
fn pmf_examples() {
    assert_eq!(pmf_uniform_levels(2).unwrap().masses(), vec![ratio(1, 2); 2]);
    assert_eq!(pmf_uniform_levels(4).unwrap().masses(), vec![ratio(1, 4); 4]);
    assert_eq!(pmf_uniform_levels(1).unwrap().masses(), vec![BigRational::one()]);
    let coin = pmf_uniform_levels(2).unwrap();
    let two = pmf_iid_sum(&coin, 2, DEFAULT_SUPPORT_CAP).unwrap();
    assert_eq!(two.masses(), vec![ratio(1, 4), ratio(1, 2), ratio(1, 4)]);
    let many = pmf_iid_sum(&coin, 256, DEFAULT_SUPPORT_CAP).unwrap();
    let q = TailQuery::new(256, 128, ratio(1, 2)).unwrap();
    assert_eq!(many.cdf_grid(128), binomial_tail(&q));
    let five = pmf_iid_sum(&DiscretePmf::point(3), 5, DEFAULT_SUPPORT_CAP).unwrap();
    assert_eq!((five.offset(), five.len()), (15, 1));
}

#[test]
fn spread_examples() {
    assert!(binomial_spread_holds(3, &DiscretePmf::point(0), &ratio(3, 2)).unwrap());
    let (lhs, rhs) = binomial_spread_sides(3, &DiscretePmf::point(0), &ratio(3, 2)).unwrap();
    assert_eq!((lhs, rhs), (ratio(1, 2), ratio(1, 2)));

    // enumerate X ~ Bin(4,1/2) against Y uniform on {-1,0,1}
    let y = DiscretePmf::from_masses(-1, &[ratio(1, 3), ratio(1, 3), ratio(1, 3)]).unwrap();
    let (mut left, mut right) = (0u32, 0u32);
    for mask in 0u32..16 {
        let x = mask.count_ones() as i32;
        for d in -1..=1 {
            // 2(x + d) <= 3
            left += (2 * (x + d) <= 3) as u32;
        }
        right += 3 * (2 * x < 3) as u32;
    }
    let (lhs, rhs) = binomial_spread_sides(4, &y, &ratio(3, 2)).unwrap();
    assert_eq!(lhs, ratio(left as i64, 48));
    assert_eq!(rhs, ratio(right as i64, 48));
    assert_eq!((lhs, rhs), (ratio(17, 48), ratio(5, 16)));
}

#[test]
fn anti_concentration_examples() {
    assert!(anti_concentration_holds(4, 2, &ratio(1, 1), DEFAULT_SUPPORT_CAP).unwrap());
    assert!(anti_concentration_holds(9, 4, &ratio(1, 2), DEFAULT_SUPPORT_CAP).unwrap());
    for n in [1, 4, 16, 25] {
        let t = ratio((n as f64).sqrt() as i64, 2);
        assert!(anti_concentration_holds(n, 8, &t, DEFAULT_SUPPORT_CAP).unwrap());
    }
}

#[test]
fn phi_agrees_with_statrs() {
    let normal = Normal::standard();
    for i in -800..=800 {
        let x = i as f64 / 100.0;
        let e = phi_enclosure(x);
        let reference = normal.cdf(x);
        let rel = (e.mid() - reference).abs() / reference;
        // statrs' erfc loses a few digits far in the lower tail
        assert!(rel < 1e-9, "x={x}: {} vs {reference}", e.mid());
    }
}

#[test]
fn phi_matches_reference_values() {
    // published high-precision values
    let table = [
        (-8.0, 6.220960574271784e-16),
        (-6.0, 9.86587645037698e-10),
        (-3.0, 1.3498980316300946e-3),
        (-1.0, 0.15865525393145705),
        (0.5, 0.6914624612740131),
        (2.0, 0.9772498680518208),
    ];
    for (x, want) in table {
        let e = phi_enclosure(x);
        assert!(e.lo <= want * (1.0 + 1e-15) && want * (1.0 - 1e-15) <= e.hi, "x={x}: {e:?}");
        assert!(((e.mid() - want) / want).abs() < 1e-12);
    }
}

#[test]
fn gaussian_examples() {
    let normal = Normal::standard();
    assert!(normal.cdf(0.5) < (-0.125f64).exp());
    assert!(normal.cdf(-0.5) / normal.cdf(0.5) < 2.0 * (-0.5f64).exp());
    let rep = gaussian_checks(&[-0.5, 0.5], &[1.0], 1e-12).unwrap();
    assert!(rep.all_hold());
}

fn small_pmf() -> impl Strategy<Value = DiscretePmf> {
    (-3i64..3, prop::collection::vec(0u64..6, 1..5)).prop_filter_map("nonzero mass", |(off, w)| {
        let total: u64 = w.iter().sum();
        if total == 0 {
            return None;
        }
        let masses: Vec<BigRational> = w.iter().map(|&x| ratio(x as i64, total as i64)).collect();
        DiscretePmf::from_masses(off, &masses).ok()
    })
}

proptest! {
    #[test]
    fn iid_sum_masses_total_one(base in small_pmf(), count in 1u64..12) {
        let sum = pmf_iid_sum(&base, count, DEFAULT_SUPPORT_CAP).unwrap();
        let total: BigRational = sum.masses().into_iter().sum();
        prop_assert_eq!(total, BigRational::one());
        prop_assert_eq!(sum.len() as u64, count * (base.len() as u64 - 1) + 1);
        prop_assert_eq!(sum.offset(), base.offset() * count as i64);
    }

    #[test]
    fn tail_nondecreasing_in_k(n in 1u64..40, num in 1i64..10) {
        let p = ratio(num, 10);
        let mut prev = BigRational::zero();
        for k in -1..=n as i64 {
            let t = binomial_tail(&TailQuery::new(n, k, p.clone()).unwrap());
            prop_assert!(t >= prev);
            prev = t;
        }
        prop_assert_eq!(prev, BigRational::one());
    }
}
