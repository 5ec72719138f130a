use num_rational::BigRational;
use proptest::prelude::*;

use robustness_envelope::image_space::{
    cell_index, cell_of_point, decode_image, encode_image, enumerate_space, exact_value_of_level,
    flatten, level_cost, norm_distance, sample_uniform, sample_uniform_indexed, value_of_level,
    Distance, ImageTensor, SpaceParams,
};
use robustness_envelope::Error;

fn sp(n: u32, h: u32, b: u32) -> SpaceParams {
    SpaceParams::new(n, h, b).unwrap()
}

/// L_p distance computed from real channel values.
fn real_distance(a: &ImageTensor, b: &ImageTensor, p: u32) -> f64 {
    let d: Vec<f64> = (0..a.levels().len()).map(|i| (a.value(i) - b.value(i)).abs()).collect();
    match p {
        0 => d.iter().filter(|&&x| x != 0.0).count() as f64,
        _ => d.iter().map(|x| x.powi(p as i32)).sum::<f64>().powf(1.0 / p as f64),
    }
}

#[test]
fn level_values() {
    assert_eq!(value_of_level(0, 3).unwrap(), 0.0);
    assert_eq!(value_of_level(7, 3).unwrap(), 1.0);
    assert_eq!(value_of_level(1, 1).unwrap(), 1.0);
    assert_eq!(exact_value_of_level(3, 3).unwrap(), BigRational::new(3.into(), 7.into()));
}

#[test]
fn distance_examples() {
    let s = sp(2, 1, 1);
    let z = ImageTensor::zeros(s);
    let mut one = z.levels().to_vec();
    one[2] = 1;
    let one = ImageTensor::new(s, one).unwrap();
    for p in 0..4 {
        assert_eq!(norm_distance(&z, &z, p).unwrap().to_f64(), 0.0);
        assert_eq!(norm_distance(&z, &one, p).unwrap().to_f64(), 1.0);
    }
    let full = ImageTensor::filled(s, 1).unwrap();
    assert_eq!(norm_distance(&z, &full, 1).unwrap(), Distance::Exact(BigRational::from_integer(4.into())));
}

#[test]
fn enumeration_sizes() {
    assert_eq!(enumerate_space(sp(1, 1, 1), 1 << 20).unwrap().count(), 2);
    assert_eq!(enumerate_space(sp(2, 1, 1), 1 << 20).unwrap().count(), 16);
    assert_eq!(enumerate_space(sp(2, 1, 2), 1 << 20).unwrap().count(), 256);
    assert!(matches!(enumerate_space(sp(4, 3, 8), 1 << 20), Err(Error::SpaceTooLarge { .. })));
    let all: Vec<Vec<u32>> = enumerate_space(sp(1, 2, 2), 1 << 20).unwrap().map(|i| i.into_levels()).collect();
    let mut sorted = all.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(all, sorted);
}

#[test]
fn sampling_is_reproducible_and_fair() {
    let s = sp(3, 2, 4);
    assert_eq!(sample_uniform(s, 42), sample_uniform(s, 42));
    let one = sp(1, 1, 1);
    let n = 1_000_000u64;
    let ones: u64 = (0..n).map(|i| sample_uniform_indexed(one, 9, i).levels()[0] as u64).sum();
    let mean = ones as f64 / n as f64;
    assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
}

#[test]
fn uniform_levels_pass_chi_square() {
    // 16 levels, 160k draws, 15 degrees of freedom; 37.7 is the 0.999 quantile
    let s = sp(1, 1, 4);
    let mut counts = [0u64; 16];
    for i in 0..160_000 {
        counts[sample_uniform_indexed(s, 3, i).levels()[0] as usize] += 1;
    }
    let chi: f64 = counts.iter().map(|&c| (c as f64 - 10_000.0).powi(2) / 10_000.0).sum();
    assert!(chi < 37.7, "chi-square {chi}");
}

#[test]
fn codec_rejects_garbage() {
    for bad in [
        &b"{"[..],
        b"[]",
        br#"{"n":2,"h":1,"b":1,"levels":[0,0,0]}"#,
        br#"{"n":2,"h":1,"b":1,"levels":[0,0,0,2]}"#,
        br#"{"n":2,"h":1,"b":1,"levels":[0,0,0,0.5]}"#,
        br#"{"n":2,"h":1,"b":1,"levels":[0,0,0,0],"x":1}"#,
    ] {
        assert!(decode_image(bad).is_err(), "{}", String::from_utf8_lossy(bad));
    }
}

#[test]
fn cells() {
    assert_eq!(cell_index(0.3, 1), 0);
    assert_eq!(cell_index(0.5, 1), 1);
    assert_eq!(cell_index(1.0, 3), 7);
    assert!(cell_of_point(sp(1, 1, 1), &[1.5]).is_err());
}

#[test]
fn quantization_bound_exhaustive() {
    // ||a-b||_p^p >= ||a-b||_0 / (2^b-1)^p on (2,1,2)
    let s = sp(2, 1, 2);
    let imgs: Vec<ImageTensor> = enumerate_space(s, 1 << 20).unwrap().collect();
    for a in &imgs {
        for b in &imgs {
            let changed = level_cost(a.levels(), b.levels(), 0);
            for p in 1..=3 {
                // in level units: sum |d|^p >= changed
                assert!(level_cost(a.levels(), b.levels(), p) >= changed);
            }
        }
    }
}

#[test]
fn norm_chain_exhaustive() {
    let s = sp(2, 1, 1);
    let imgs: Vec<ImageTensor> = enumerate_space(s, 1 << 20).unwrap().collect();
    for a in &imgs {
        for b in &imgs {
            let l0 = norm_distance(a, b, 0).unwrap().to_f64();
            assert!(norm_distance(a, b, 1).unwrap().to_f64() <= l0);
            for p in 2..=3 {
                assert!(norm_distance(a, b, p).unwrap().to_f64().powi(p as i32) <= l0 + 1e-12);
            }
        }
    }
}

fn space() -> impl Strategy<Value = SpaceParams> {
    (1u32..=2, 1u32..=2, 1u32..=2).prop_map(|(n, h, b)| sp(n, h, b))
}

fn triple() -> impl Strategy<Value = (ImageTensor, ImageTensor, ImageTensor)> {
    space().prop_flat_map(|s| {
        let d = s.dimension();
        let levels = prop::collection::vec(0..=s.max_level(), d);
        (levels.clone(), levels.clone(), levels).prop_map(move |(a, b, c)| {
            (
                ImageTensor::new(s, a).unwrap(),
                ImageTensor::new(s, b).unwrap(),
                ImageTensor::new(s, c).unwrap(),
            )
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn triangle_inequality((a, b, c) in triple()) {
        for p in 0..=2 {
            let ab = norm_distance(&a, &b, p).unwrap().to_f64();
            let bc = norm_distance(&b, &c, p).unwrap().to_f64();
            let ac = norm_distance(&a, &c, p).unwrap().to_f64();
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn norms_match_real_values((a, b, _c) in triple()) {
        for p in 0..=3 {
            let exact = norm_distance(&a, &b, p).unwrap().to_f64();
            prop_assert!((exact - real_distance(&a, &b, p)).abs() < 1e-12);
        }
        let l0 = norm_distance(&a, &b, 0).unwrap().to_f64();
        prop_assert!(norm_distance(&a, &b, 1).unwrap().to_f64() <= l0);
    }
}

proptest! {
    #[test]
    fn codec_round_trip((a, _b, _c) in triple()) {
        let bytes = encode_image(&a);
        prop_assert_eq!(decode_image(&bytes).unwrap(), a.clone());
        prop_assert_eq!(encode_image(&decode_image(&bytes).unwrap()), bytes);
    }

    #[test]
    fn index_round_trip((a, _b, _c) in triple()) {
        let i = a.index().unwrap();
        prop_assert_eq!(ImageTensor::from_index(a.params(), i), a);
    }

    #[test]
    fn interior_points_land_in_their_cell((a, _b, _c) in triple(), t in 0.01f64..0.99) {
        let q = a.params().level_count() as f64;
        let point: Vec<f64> = a.levels().iter().map(|&l| (l as f64 + t) / q).collect();
        prop_assert_eq!(cell_of_point(a.params(), &point).unwrap(), a.clone());
        let corner = flatten(&a);
        prop_assert_eq!(corner.len(), a.levels().len());
    }
}
