use robustness_envelope::classifiers::{sum_classifier, Classifier};
use robustness_envelope::image_space::{
    enumerate_space, level_cost, norm_distance, Distance, ImageTensor, SpaceParams,
};
use robustness_envelope::exactmath::ratio;
use robustness_envelope::perturb::{
    attack_sum_classifier, failure_rate, find_perturbation, minimal_perturbation,
    perturbation_length_bound, SearchLimits,
};
use robustness_envelope::Error;

const CAP: u128 = 1 << 20;

fn sp(n: u32, h: u32, b: u32) -> SpaceParams {
    SpaceParams::new(n, h, b).unwrap()
}

#[test]
fn two_cell_space() {
    let s = sp(1, 1, 1);
    let c = sum_classifier(s);
    let out = find_perturbation(&c, &ImageTensor::zeros(s), 0.6, 0, SearchLimits::default()).unwrap();
    assert_eq!(out.result, Some(vec![1]));
    assert_eq!(out.l2_moved, 1.0);
    assert!(out.l2_moved <= 0.6 + 2.0 * 1.0 * 1.0 / 2.0);
    assert_eq!(perturbation_length_bound(s, 0.6), 1.6);
}

#[test]
fn constant_never_succeeds() {
    let s = sp(2, 1, 2);
    let c = Classifier::constant(s);
    for radius in [0.5, 2.0, 10.0] {
        let out = find_perturbation(&c, &ImageTensor::zeros(s), radius, 3, SearchLimits::default()).unwrap();
        assert!(!out.succeeded());
    }
}

#[test]
fn covering_radius_always_succeeds() {
    let s = sp(2, 1, 2);
    let c = sum_classifier(s);
    for img in enumerate_space(s, CAP).unwrap() {
        let out = find_perturbation(&c, &img, 2.0, 1, SearchLimits::default()).unwrap();
        let found = out.result.expect("ball covers the cube");
        assert_ne!(c.decide_levels(&found), c.decide(&img));
        assert!(out.l2_moved <= 3.0);
    }
    let rate = failure_rate(&c, 0, 2.0, 500, 2, SearchLimits::default()).unwrap();
    assert_eq!(rate.failures, 0);
    assert_eq!(rate.rate, 0.0);
}

#[test]
fn search_rejects_large_dimension() {
    let s = sp(4, 1, 1);
    let c = sum_classifier(s);
    assert!(matches!(
        find_perturbation(&c, &ImageTensor::zeros(s), 1.0, 0, SearchLimits::default()),
        Err(Error::DimensionTooLarge { .. })
    ));
}

#[test]
fn minimal_examples() {
    let s = sp(2, 1, 1);
    let c = sum_classifier(s);
    let z = ImageTensor::zeros(s);
    let m = minimal_perturbation(&c, &z, 0, CAP).unwrap();
    assert_eq!(m.distance, Distance::Count(2));
    assert_eq!(m.witness.iter().sum::<u32>(), 2);
    let one = ImageTensor::new(s, vec![0, 1, 0, 0]).unwrap();
    assert_eq!(minimal_perturbation(&c, &one, 1, CAP).unwrap().distance.to_f64(), 1.0);
    assert_eq!(attack_sum_classifier(&z, 0).unwrap().distance.to_f64(), 2.0);
    assert_eq!(attack_sum_classifier(&z, 1).unwrap().distance.to_f64(), 2.0);
    assert!(matches!(minimal_perturbation(&Classifier::constant(s), &z, 0, CAP), Err(Error::NoOtherClass)));
}

#[test]
fn threshold_image_moves_one_step() {
    for s in [sp(2, 1, 2), sp(1, 2, 3), sp(3, 1, 2)] {
        let c = sum_classifier(s);
        let step = ratio(1, s.max_level() as i64);
        for img in enumerate_space(s, CAP).unwrap() {
            if c.decide(&img) == 1 && 2 * img.level_sum() < s.dimension() as u64 * s.max_level() as u64 + 2 {
                let m = attack_sum_classifier(&img, 1).unwrap();
                assert_eq!(m.distance, Distance::Exact(step.clone()), "{:?}", img.levels());
            }
        }
    }
}

#[test]
fn sum_attack_matches_scan() {
    for s in [sp(2, 1, 1), sp(2, 1, 2), sp(3, 1, 1)] {
        let c = sum_classifier(s);
        let all: Vec<ImageTensor> = enumerate_space(s, CAP).unwrap().collect();
        for img in &all {
            for p in 0..=2 {
                let label = c.decide(img);
                let best = all
                    .iter()
                    .filter(|o| c.decide(o) != label)
                    .map(|o| level_cost(img.levels(), o.levels(), p))
                    .min()
                    .unwrap();
                let m = attack_sum_classifier(img, p).unwrap();
                assert_eq!(m.cost, best);
                let w = ImageTensor::new(s, m.witness.clone()).unwrap();
                assert_ne!(c.decide(&w), label);
                assert_eq!(norm_distance(img, &w, p).unwrap(), m.distance);
            }
        }
    }
}
