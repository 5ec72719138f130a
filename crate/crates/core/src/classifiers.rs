//! Classifiers over a discrete image space, class accounting and a seeded
//! zoo of classifiers for exercising universal bounds.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactmath::{pmf_iid_sum, pmf_uniform_levels, DiscretePmf, DEFAULT_SUPPORT_CAP};
use crate::image_space::{ImageTensor, SpaceParams};
use crate::{par, rng};

/// Default cap on images for materialized classifiers and exhaustive counts.
pub const DEFAULT_IMAGE_CAP: u128 = 1 << 20;

type DecideFn = dyn Fn(&ImageTensor) -> u32 + Send + Sync;

#[derive(Clone)]
pub enum ClassifierKind {
    /// Label 1 iff the channel values sum to at least half the channel count.
    Sum,
    /// Every image gets label 0.
    Constant,
    /// Labels indexed by image index.
    Table(Arc<Vec<u32>>),
    /// Label 1 iff `weights . values >= threshold`.
    LinearThreshold { weights: Arc<Vec<f64>>, threshold: f64 },
    Custom(Arc<DecideFn>),
}

impl fmt::Debug for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifierKind::Sum => f.write_str("Sum"),
            ClassifierKind::Constant => f.write_str("Constant"),
            ClassifierKind::Table(t) => write!(f, "Table({} entries)", t.len()),
            ClassifierKind::LinearThreshold { threshold, .. } => {
                write!(f, "LinearThreshold(threshold={threshold})")
            }
            ClassifierKind::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// A total, deterministic labelling of a space.
#[derive(Debug, Clone)]
pub struct Classifier {
    params: SpaceParams,
    label_count: u32,
    name: String,
    kind: ClassifierKind,
}

impl Classifier {
    pub fn custom<F>(params: SpaceParams, label_count: u32, name: &str, decide: F) -> Self
    where
        F: Fn(&ImageTensor) -> u32 + Send + Sync + 'static,
    {
        Classifier {
            params,
            label_count,
            name: name.to_string(),
            kind: ClassifierKind::Custom(Arc::new(decide)),
        }
    }

    pub fn constant(params: SpaceParams) -> Self {
        Classifier {
            params,
            label_count: 1,
            name: "constant".into(),
            kind: ClassifierKind::Constant,
        }
    }

    pub fn params(&self) -> SpaceParams {
        self.params
    }

    pub fn label_count(&self) -> u32 {
        self.label_count
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ClassifierKind {
        &self.kind
    }

    pub fn is_sum(&self) -> bool {
        matches!(self.kind, ClassifierKind::Sum)
    }

    pub fn decide(&self, img: &ImageTensor) -> u32 {
        debug_assert_eq!(img.params(), self.params);
        match &self.kind {
            ClassifierKind::Custom(f) => f(img),
            _ => self.decide_levels(img.levels()),
        }
    }

    /// Label of the image with the given levels.
    pub fn decide_levels(&self, levels: &[u32]) -> u32 {
        match &self.kind {
            ClassifierKind::Sum => {
                let sum: u64 = levels.iter().map(|&l| l as u64).sum();
                sum_label(self.params, sum)
            }
            ClassifierKind::Constant => 0,
            ClassifierKind::Table(t) => {
                let q = self.params.level_count();
                let idx = levels.iter().fold(0u64, |acc, &l| acc * q + l as u64);
                t[idx as usize]
            }
            ClassifierKind::LinearThreshold { weights, threshold } => {
                let m = self.params.max_level() as f64;
                let dot: f64 = weights
                    .iter()
                    .zip(levels)
                    .map(|(w, &l)| w * (l as f64 / m))
                    .sum();
                (dot >= *threshold) as u32
            }
            ClassifierKind::Custom(f) => f(&ImageTensor::new(self.params, levels.to_vec())
                .expect("levels come from the classifier's own space")),
        }
    }
}

/// Sum-threshold label for an image with level sum `sum`: 1 iff
/// `2 sum >= n^2 h (2^b - 1)`.
pub fn sum_label(params: SpaceParams, sum: u64) -> u32 {
    (2 * sum >= params.dimension() as u64 * params.max_level() as u64) as u32
}

/// Smallest level sum that receives label 1.
pub fn sum_threshold(params: SpaceParams) -> u64 {
    (params.dimension() as u64 * params.max_level() as u64).div_ceil(2)
}

pub fn sum_classifier(params: SpaceParams) -> Classifier {
    Classifier {
        params,
        label_count: 2,
        name: "sum".into(),
        kind: ClassifierKind::Sum,
    }
}

/// Exact distribution of the level sum of a uniform image.
pub fn level_sum_pmf(params: SpaceParams, cap: u128) -> Result<DiscretePmf> {
    pmf_iid_sum(
        &pmf_uniform_levels(params.level_count())?,
        params.dimension() as u64,
        cap,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomKind {
    Uniform,
    Balanced,
    LinearThreshold,
}

/// Seeded random classifier.
///
/// `Uniform` labels every image independently; `Balanced` assigns labels
/// round-robin over a random permutation, so class sizes differ by at most
/// one; `LinearThreshold` draws weights uniform in `[-1, 1]` and thresholds
/// at the value of the mid-grey image (always two labels).
pub fn random_classifier(
    params: SpaceParams,
    label_count: u32,
    kind: RandomKind,
    seed: u64,
    cap: u128,
) -> Result<Classifier> {
    if label_count < 2 {
        return Err(Error::InvalidParams(format!(
            "random classifiers need at least 2 labels (got {label_count})"
        )));
    }
    match kind {
        RandomKind::LinearThreshold => {
            if label_count != 2 {
                return Err(Error::InvalidParams(
                    "linear threshold classifiers have exactly 2 labels".into(),
                ));
            }
            let mut r = rng::stream(seed, 0);
            let weights: Vec<f64> = (0..params.dimension())
                .map(|_| r.random_range(-1.0..=1.0))
                .collect();
            let threshold = 0.5 * weights.iter().sum::<f64>();
            Ok(Classifier {
                params,
                label_count: 2,
                name: format!("linthresh:{seed}"),
                kind: ClassifierKind::LinearThreshold {
                    weights: Arc::new(weights),
                    threshold,
                },
            })
        }
        RandomKind::Uniform => {
            let total = params.enumerable(cap)?;
            let labels = par::map_range(0..total, |i| {
                rng::stream(seed, i).random_range(0..label_count)
            });
            Ok(Classifier {
                params,
                label_count,
                name: format!("uniform:{seed}:{label_count}"),
                kind: ClassifierKind::Table(Arc::new(labels)),
            })
        }
        RandomKind::Balanced => {
            let total = params.enumerable(cap)?;
            let mut order: Vec<u64> = (0..total).collect();
            order.shuffle(&mut rng::stream(seed, 0));
            let mut labels = vec![0u32; total as usize];
            for (pos, &img) in order.iter().enumerate() {
                labels[img as usize] = (pos as u64 % label_count as u64) as u32;
            }
            let name = if label_count == 2 {
                format!("balanced:{seed}")
            } else {
                format!("balanced:{seed}:{label_count}")
            };
            Ok(Classifier {
                params,
                label_count,
                name,
                kind: ClassifierKind::Table(Arc::new(labels)),
            })
        }
    }
}

/// Parses `sum`, `constant`, `balanced:<seed>[:<labels>]`,
/// `uniform:<seed>:<labels>` or `linthresh:<seed>`.
pub fn parse_classifier(spec: &str, params: SpaceParams, cap: u128) -> Result<Classifier> {
    let bad = || Error::InvalidClassifierSpec(spec.to_string());
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.parse::<u64>().map_err(|_| bad());
    match parts.as_slice() {
        ["sum"] => Ok(sum_classifier(params)),
        ["constant"] => Ok(Classifier::constant(params)),
        ["balanced", seed] => random_classifier(params, 2, RandomKind::Balanced, num(seed)?, cap),
        ["balanced", seed, labels] => {
            let labels = u32::try_from(num(labels)?).map_err(|_| bad())?;
            random_classifier(params, labels, RandomKind::Balanced, num(seed)?, cap)
        }
        ["uniform", seed, labels] => {
            let labels = u32::try_from(num(labels)?).map_err(|_| bad())?;
            random_classifier(params, labels, RandomKind::Uniform, num(seed)?, cap)
        }
        ["linthresh", seed] => {
            random_classifier(params, 2, RandomKind::LinearThreshold, num(seed)?, cap)
        }
        _ => Err(bad()),
    }
}

/// The seeded zoo used by desk-scale sweeps: sum, constant, and `count`
/// seeds each of the balanced, uniform (2 and 3 labels) and linear
/// threshold families.
pub fn classifier_zoo(params: SpaceParams, count: u64, seed: u64, cap: u128) -> Result<Vec<Classifier>> {
    let mut zoo = vec![sum_classifier(params), Classifier::constant(params)];
    for i in 0..count {
        let s = rng::derive_seed(seed, i);
        zoo.push(random_classifier(params, 2, RandomKind::Balanced, s, cap)?);
        zoo.push(random_classifier(params, 2, RandomKind::Uniform, s, cap)?);
        zoo.push(random_classifier(params, 3, RandomKind::Uniform, s, cap)?);
        zoo.push(random_classifier(params, 2, RandomKind::LinearThreshold, s, cap)?);
    }
    Ok(zoo)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassSummary {
    pub label: u32,
    #[serde(serialize_with = "crate::serde_util::display")]
    pub count: BigUint,
    pub interesting: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    Exhaustive { cap: u128 },
    Analytic,
}

/// Nonempty and at most half the space.
pub fn is_interesting(count: &BigUint, params: SpaceParams) -> bool {
    !count.is_zero() && count * 2u32 <= params.total_images()
}

fn summaries(params: SpaceParams, counts: Vec<BigUint>) -> Vec<ClassSummary> {
    counts
        .into_iter()
        .enumerate()
        .map(|(label, count)| ClassSummary {
            label: label as u32,
            interesting: is_interesting(&count, params),
            count,
        })
        .collect()
}

/// Number of images per label.
pub fn class_sizes(c: &Classifier, mode: CountMode) -> Result<Vec<ClassSummary>> {
    let params = c.params;
    match mode {
        CountMode::Exhaustive { cap } => {
            let total = params.enumerable(cap)?;
            let labels = c.label_count as usize;
            let counts = par::fold_range(
                0..total,
                || vec![0u64; labels],
                |mut acc, i| {
                    acc[c.decide(&ImageTensor::from_index(params, i)) as usize] += 1;
                    acc
                },
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
            Ok(summaries(params, counts.into_iter().map(BigUint::from).collect()))
        }
        CountMode::Analytic => {
            if !c.is_sum() {
                return Err(Error::AnalyticUnavailable);
            }
            let pmf = level_sum_pmf(params, DEFAULT_SUPPORT_CAP)?;
            let total = params.total_images();
            // the uniform PMF's denominator is q^(n^2 h) = total, so weights
            // are image counts
            debug_assert_eq!(*pmf.denominator(), total);
            let t = sum_threshold(params) as usize;
            let below: BigUint = pmf.weights()[..t].iter().sum();
            let above = &total - &below;
            Ok(summaries(params, vec![below, above]))
        }
    }
}

/// Sizes as `u64` for enumerable spaces.
pub fn class_counts_u64(summaries: &[ClassSummary]) -> Vec<u64> {
    summaries
        .iter()
        .map(|s| s.count.to_u64().unwrap_or(u64::MAX))
        .collect()
}
