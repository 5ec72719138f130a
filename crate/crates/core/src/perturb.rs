//! Perturbation construction: the cell-based perturbation search, exact
//! minimal perturbations and the analytic attack on the sum classifier.

use rand::Rng;
use serde::Serialize;

use crate::classifiers::{sum_threshold, Classifier};
use crate::error::{Error, Result};
use crate::image_space::{
    distance_from_cost, flatten, level_cost, Distance, ImageTensor, SpaceParams,
};
use crate::robustness::sample_from_class;
use crate::stats::{wilson_interval, Z95};
use crate::{par, rng};

/// Default cap on the channel count for the cell search.
pub const DEFAULT_MAX_DIMENSION: usize = 12;
/// Default cap on cells visited by one cell search.
pub const DEFAULT_CELL_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_dimension: usize,
    pub max_cells: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_dimension: DEFAULT_MAX_DIMENSION,
            max_cells: DEFAULT_CELL_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationOutcome {
    /// Levels of the image found, or `None` for the failure marker.
    pub result: Option<Vec<u32>>,
    /// L2 distance between the input and the result (0 on failure).
    pub l2_moved: f64,
    /// Cells whose distance was evaluated.
    pub cells_examined: u64,
    /// Point drawn inside the input's cell.
    pub start: Vec<f64>,
    /// `radius + 2 n sqrt(h) / 2^b`.
    pub length_bound: f64,
}

impl PerturbationOutcome {
    pub fn succeeded(&self) -> bool {
        self.result.is_some()
    }
}

/// Squared distance from `x` to the cell `[j/q, (j+1)/q)` (closed for the
/// last cell), measured to the nearest point of the cell.
fn cell_gap(x: f64, j: u32, q: u32) -> f64 {
    let lo = j as f64 / q as f64;
    let hi = (j + 1) as f64 / q as f64;
    let top = if j + 1 == q { hi } else { hi.next_down() };
    let nearest = x.clamp(lo, top);
    (x - nearest) * (x - nearest)
}

struct CellSearch<'a> {
    c: &'a Classifier,
    label: u32,
    start: &'a [f64],
    q: u32,
    radius2: f64,
    cells: Vec<u32>,
    visited: u64,
    max_cells: u64,
    best: Option<(f64, Vec<u32>)>,
}

impl CellSearch<'_> {
    fn bound(&self) -> f64 {
        self.best.as_ref().map_or(self.radius2, |(d, _)| d.min(self.radius2))
    }

    fn walk(&mut self, coord: usize, partial: f64) -> Result<()> {
        if coord == self.start.len() {
            self.visited += 1;
            if self.visited > self.max_cells {
                return Err(Error::EnumerationCapExceeded {
                    cap: self.max_cells,
                });
            }
            let better = self.best.as_ref().is_none_or(|(d, _)| partial < *d);
            if better && self.c.decide_levels(&self.cells) != self.label {
                self.best = Some((partial, self.cells.clone()));
            }
            return Ok(());
        }
        for j in 0..self.q {
            let total = partial + cell_gap(self.start[coord], j, self.q);
            if total > self.bound() {
                continue;
            }
            self.cells[coord] = j;
            self.walk(coord + 1, total)?;
        }
        Ok(())
    }
}

/// Searches for a differently labelled image near `img`.
///
/// Draws a point uniformly in the cell of `img`, then walks every cell whose
/// nearest point lies within `radius` (L2) of it, and returns the image of
/// the nearest cell with a different label. Equidistant cells resolve to the
/// lexicographically smallest. Returns the failure marker when no such cell
/// meets the ball.
pub fn find_perturbation(
    c: &Classifier,
    img: &ImageTensor,
    radius: f64,
    seed: u64,
    limits: SearchLimits,
) -> Result<PerturbationOutcome> {
    let params = img.params();
    let dim = params.dimension();
    if dim > limits.max_dimension {
        return Err(Error::DimensionTooLarge {
            dim,
            cap: limits.max_dimension,
        });
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParams(format!("radius must be finite and >= 0 (got {radius})")));
    }
    let q = params.level_count() as u32;
    let side = 1.0 / q as f64;
    let mut r = rng::stream(seed, 0);
    let start: Vec<f64> = img
        .levels()
        .iter()
        .map(|&l| {
            let lo = l as f64 * side;
            if l + 1 == q {
                r.random_range(lo..=1.0)
            } else {
                r.random_range(lo..lo + side)
            }
        })
        .collect();
    let mut search = CellSearch {
        c,
        label: c.decide(img),
        start: &start,
        q,
        radius2: radius * radius,
        cells: vec![0; dim],
        visited: 0,
        max_cells: limits.max_cells,
        best: None,
    };
    search.walk(0, 0.0)?;
    let length_bound = perturbation_length_bound(params, radius);
    let (result, l2_moved) = match search.best.take() {
        Some((_, cells)) => {
            let found = ImageTensor::new(params, cells)?;
            let moved = l2_between(img, &found);
            (Some(found.into_levels()), moved)
        }
        None => (None, 0.0),
    };
    Ok(PerturbationOutcome {
        result,
        l2_moved,
        cells_examined: search.visited,
        start,
        length_bound,
    })
}

/// `radius + 2 n sqrt(h) / 2^b`.
pub fn perturbation_length_bound(params: SpaceParams, radius: f64) -> f64 {
    radius + 2.0 * params.n as f64 * (params.h as f64).sqrt() / params.level_count() as f64
}

fn l2_between(a: &ImageTensor, b: &ImageTensor) -> f64 {
    flatten(a)
        .iter()
        .zip(flatten(b))
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRate {
    pub samples: u64,
    pub failures: u64,
    pub rate: f64,
    pub ci95: (f64, f64),
    /// Successes whose L2 length exceeded the length bound.
    pub length_violations: u64,
    /// Successes whose result had the same label as the input.
    pub label_violations: u64,
}

/// Fraction of uniformly drawn members of class `label` for which the cell
/// search fails, with a Wilson 95% interval.
pub fn failure_rate(
    c: &Classifier,
    label: u32,
    radius: f64,
    samples: u64,
    seed: u64,
    limits: SearchLimits,
) -> Result<FailureRate> {
    if samples == 0 {
        return Err(Error::InvalidParams("samples must be positive".into()));
    }
    let per_sample = par::map_range(0..samples, |i| -> Result<(bool, bool, bool)> {
        let img = sample_from_class(c, label, seed, i)?;
        let out = find_perturbation(c, &img, radius, rng::derive_seed(seed, i), limits)?;
        Ok(match &out.result {
            None => (true, false, false),
            Some(levels) => (
                false,
                out.l2_moved > out.length_bound,
                c.decide_levels(levels) == label,
            ),
        })
    });
    let (mut failures, mut length_violations, mut label_violations) = (0, 0, 0);
    for s in per_sample {
        let (f, l, w) = s?;
        failures += f as u64;
        length_violations += l as u64;
        label_violations += w as u64;
    }
    Ok(FailureRate {
        samples,
        failures,
        rate: failures as f64 / samples as f64,
        ci95: wilson_interval(failures, samples, Z95),
        length_violations,
        label_violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalPerturbation {
    pub p: u32,
    /// Exact integer cost in level units (see [`level_cost`]).
    pub cost: u128,
    #[serde(serialize_with = "serialize_distance")]
    pub distance: Distance,
    pub witness: Vec<u32>,
}

fn serialize_distance<S: serde::Serializer>(d: &Distance, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.to_f64())
}

impl MinimalPerturbation {
    fn new(params: SpaceParams, p: u32, cost: u128, witness: Vec<u32>) -> Self {
        MinimalPerturbation {
            p,
            cost,
            distance: distance_from_cost(cost, p, params.max_level()),
            witness,
        }
    }
}

/// Exact nearest differently labelled image in the `p`-norm, by scanning the
/// whole space. Ties resolve to the smallest image index.
pub fn minimal_perturbation(
    c: &Classifier,
    img: &ImageTensor,
    p: u32,
    cap: u128,
) -> Result<MinimalPerturbation> {
    let params = img.params();
    let total = params.enumerable(cap)?;
    let label = c.decide(img);
    let best = par::fold_range(
        0..total,
        || None::<(u128, u64)>,
        |acc, i| {
            let other = ImageTensor::from_index(params, i);
            if c.decide_levels(other.levels()) == label {
                return acc;
            }
            let cand = (level_cost(img.levels(), other.levels(), p), i);
            Some(acc.map_or(cand, |a| a.min(cand)))
        },
        |a, b| match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        },
    );
    let (cost, idx) = best.ok_or(Error::NoOtherClass)?;
    Ok(MinimalPerturbation::new(
        params,
        p,
        cost,
        ImageTensor::from_index(params, idx).into_levels(),
    ))
}

/// Cheapest attack on the sum classifier.
///
/// The label flips once the level sum crosses the threshold, so the attack
/// must shift the sum by a fixed amount `need` using per-channel headroom.
/// For `p = 0` the channels with the most headroom are used first; for
/// `p = 1` every unit costs the same; for `p >= 2` units are spread as evenly
/// as the headroom allows, which minimizes a convex separable cost.
pub fn attack_sum_classifier(img: &ImageTensor, p: u32) -> Result<MinimalPerturbation> {
    let params = img.params();
    let m = params.max_level();
    let sum = img.level_sum();
    let t = sum_threshold(params);
    let up = sum < t;
    let need = if up { t - sum } else { sum - (t - 1) };
    let caps: Vec<u64> = img
        .levels()
        .iter()
        .map(|&l| if up { (m - l) as u64 } else { l as u64 })
        .collect();
    if caps.iter().sum::<u64>() < need {
        return Err(Error::NoOtherClass);
    }
    let mut delta = vec![0u64; caps.len()];
    match p {
        0 | 1 => {
            let mut order: Vec<usize> = (0..caps.len()).collect();
            order.sort_by(|&a, &b| caps[b].cmp(&caps[a]).then(a.cmp(&b)));
            let mut left = need;
            for i in order {
                if left == 0 {
                    break;
                }
                delta[i] = caps[i].min(left);
                left -= delta[i];
            }
        }
        _ => {
            // water-filling: raise the lowest open channels level by level
            let mut left = need;
            let mut level = 0u64;
            while left > 0 {
                let open: Vec<usize> = (0..caps.len()).filter(|&i| caps[i] > level).collect();
                if (open.len() as u64) <= left {
                    for &i in &open {
                        delta[i] += 1;
                    }
                    left -= open.len() as u64;
                    level += 1;
                } else {
                    for &i in open.iter().take(left as usize) {
                        delta[i] += 1;
                    }
                    left = 0;
                }
            }
        }
    }
    let witness: Vec<u32> = img
        .levels()
        .iter()
        .zip(&delta)
        .map(|(&l, &d)| if up { l + d as u32 } else { l - d as u32 })
        .collect();
    let cost = level_cost(img.levels(), &witness, p);
    Ok(MinimalPerturbation::new(params, p, cost, witness))
}
