//! Discrete image spaces: quantized tensors, p-norm distances, enumeration,
//! sampling and the canonical JSON file format.
//!
//! Levels are the canonical representation. A channel at level `l` has the
//! real value `l / (2^b - 1)`; channels are flattened row-major over
//! `(x, y, channel)`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Largest supported bit depth.
pub const MAX_BIT_DEPTH: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceParams {
    /// Pixels per side.
    pub n: u32,
    /// Channels per pixel.
    pub h: u32,
    /// Bits per channel.
    pub b: u32,
}

impl SpaceParams {
    pub fn new(n: u32, h: u32, b: u32) -> Result<Self> {
        if n == 0 || h == 0 || b == 0 {
            return Err(Error::InvalidParams(format!(
                "n, h, b must be positive (got {n}, {h}, {b})"
            )));
        }
        if b > MAX_BIT_DEPTH {
            return Err(Error::BitDepthTooLarge(b));
        }
        Ok(SpaceParams { n, h, b })
    }

    /// Number of channels, `n^2 h`.
    pub fn dimension(&self) -> usize {
        (self.n as usize) * (self.n as usize) * (self.h as usize)
    }

    pub fn level_count(&self) -> u64 {
        1u64 << self.b
    }

    pub fn max_level(&self) -> u32 {
        ((1u64 << self.b) - 1) as u32
    }

    /// `2^(n^2 h b)`.
    pub fn total_images(&self) -> BigUint {
        BigUint::one() << (self.dimension() * self.b as usize)
    }

    /// Total image count if it is at most `cap`.
    pub fn enumerable(&self, cap: u128) -> Result<u64> {
        let bits = self.dimension() as u64 * self.b as u64;
        if bits >= 64 || (1u128 << bits) > cap {
            return Err(Error::SpaceTooLarge {
                size: format!("2^{bits}"),
                cap,
            });
        }
        Ok(1u64 << bits)
    }
}

impl std::fmt::Display for SpaceParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.n, self.h, self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ImageTensor {
    params: SpaceParams,
    levels: Vec<u32>,
}

impl ImageTensor {
    pub fn new(params: SpaceParams, levels: Vec<u32>) -> Result<Self> {
        if levels.len() != params.dimension() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} levels, got {}",
                params.dimension(),
                levels.len()
            )));
        }
        if let Some(&bad) = levels.iter().find(|&&l| l > params.max_level()) {
            return Err(Error::LevelOutOfRange {
                level: bad as u64,
                b: params.b,
            });
        }
        Ok(ImageTensor { params, levels })
    }

    pub fn filled(params: SpaceParams, level: u32) -> Result<Self> {
        Self::new(params, vec![level; params.dimension()])
    }

    pub fn zeros(params: SpaceParams) -> Self {
        ImageTensor {
            params,
            levels: vec![0; params.dimension()],
        }
    }

    /// Image number `index` in lexicographic level order (first channel most
    /// significant).
    pub fn from_index(params: SpaceParams, mut index: u64) -> Self {
        let q = params.level_count();
        let mut levels = vec![0u32; params.dimension()];
        for slot in levels.iter_mut().rev() {
            *slot = (index % q) as u32;
            index /= q;
        }
        ImageTensor { params, levels }
    }

    /// Inverse of [`Self::from_index`]; `None` if the index overflows `u64`.
    pub fn index(&self) -> Option<u64> {
        let q = self.params.level_count();
        self.levels.iter().try_fold(0u64, |acc, &l| {
            acc.checked_mul(q).and_then(|v| v.checked_add(l as u64))
        })
    }

    pub fn params(&self) -> SpaceParams {
        self.params
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn into_levels(self) -> Vec<u32> {
        self.levels
    }

    /// Flat position of channel `a` of pixel `(x, y)`.
    pub fn position(&self, x: u32, y: u32, a: u32) -> usize {
        let p = self.params;
        ((x as usize * p.n as usize) + y as usize) * p.h as usize + a as usize
    }

    pub fn get(&self, x: u32, y: u32, a: u32) -> u32 {
        self.levels[self.position(x, y, a)]
    }

    pub fn level_sum(&self) -> u64 {
        self.levels.iter().map(|&l| l as u64).sum()
    }

    /// Real value of channel `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.levels[i] as f64 / self.params.max_level() as f64
    }
}

/// `level / (2^b - 1)`.
pub fn value_of_level(level: u64, b: u32) -> Result<f64> {
    exact_value_of_level(level, b).map(|q| q.to_f64().unwrap_or(f64::NAN))
}

pub fn exact_value_of_level(level: u64, b: u32) -> Result<BigRational> {
    if b == 0 || b > 63 {
        return Err(Error::BitDepthTooLarge(b));
    }
    let max = (1u64 << b) - 1;
    if level > max {
        return Err(Error::LevelOutOfRange { level, b });
    }
    Ok(BigRational::new(BigInt::from(level), BigInt::from(max)))
}

/// Size of an allowed perturbation in one p-norm.
///
/// The size is held exactly as `size^max(p,1)` so that budgets such as
/// `d^(1/p)` compare exactly against integer level differences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbationBudget {
    p: u32,
    size_pow: BigRational,
}

impl PerturbationBudget {
    /// Budget of size `size` (taken as the exact binary value of the float).
    pub fn new(p: u32, size: f64) -> Result<Self> {
        let exact = BigRational::from_float(size)
            .ok_or_else(|| Error::InvalidParams(format!("budget size {size} is not finite")))?;
        Self::exact(p, exact)
    }

    pub fn exact(p: u32, size: BigRational) -> Result<Self> {
        if size.is_negative() {
            return Err(Error::InvalidParams(format!("budget size {size} is negative")));
        }
        let size_pow = num_traits::pow(size, p.max(1) as usize);
        Ok(PerturbationBudget { p, size_pow })
    }

    /// Budget whose size raised to `max(p, 1)` equals `size_pow`.
    pub fn from_powered(p: u32, size_pow: BigRational) -> Result<Self> {
        if size_pow.is_negative() {
            return Err(Error::InvalidParams(format!("budget {size_pow} is negative")));
        }
        Ok(PerturbationBudget { p, size_pow })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn size_pow(&self) -> &BigRational {
        &self.size_pow
    }

    pub fn size(&self) -> f64 {
        let v = self.size_pow.to_f64().unwrap_or(f64::INFINITY);
        v.powf(1.0 / self.p.max(1) as f64)
    }

    pub fn is_zero(&self) -> bool {
        self.size_pow.is_zero()
    }

    /// Largest admissible [`level_cost`] for a space with top level
    /// `max_level`, saturating at `u128::MAX`.
    pub fn cost_limit(&self, max_level: u32) -> u128 {
        let scaled = if self.p == 0 {
            self.size_pow.clone()
        } else {
            &self.size_pow * num_traits::pow(BigInt::from(max_level), self.p as usize)
        };
        scaled.floor().to_integer().to_u128().unwrap_or(u128::MAX)
    }
}

/// Distance between two images in the norm's natural exact form.
#[derive(Debug, Clone, PartialEq)]
pub enum Distance {
    /// Number of differing channels (p = 0).
    Count(u64),
    /// Exact L1 distance.
    Exact(BigRational),
    /// `Lp` distance for `p >= 2`.
    Real(f64),
}

impl Distance {
    pub fn to_f64(&self) -> f64 {
        match self {
            Distance::Count(c) => *c as f64,
            Distance::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Distance::Real(r) => *r,
        }
    }
}

/// Integer cost of moving between two level vectors: the number of differing
/// channels for `p = 0`, otherwise `sum |delta|^p` in level units.
pub fn level_cost(a: &[u32], b: &[u32], p: u32) -> u128 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u128;
            if p == 0 {
                (d != 0) as u128
            } else {
                d.pow(p)
            }
        })
        .sum()
}

/// Converts a [`level_cost`] into a distance.
pub fn distance_from_cost(cost: u128, p: u32, max_level: u32) -> Distance {
    match p {
        0 => Distance::Count(cost as u64),
        1 => Distance::Exact(BigRational::new(
            BigInt::from(cost),
            BigInt::from(max_level),
        )),
        _ => Distance::Real((cost as f64).powf(1.0 / p as f64) / max_level as f64),
    }
}

pub fn norm_distance(a: &ImageTensor, b: &ImageTensor, p: u32) -> Result<Distance> {
    if a.params != b.params {
        return Err(Error::ShapeMismatch(format!(
            "spaces differ: {} vs {}",
            a.params, b.params
        )));
    }
    Ok(distance_from_cost(
        level_cost(&a.levels, &b.levels, p),
        p,
        a.params.max_level(),
    ))
}

/// Iterator over every image of a space in lexicographic order.
#[derive(Debug, Clone)]
pub struct SpaceIter {
    params: SpaceParams,
    next: u64,
    total: u64,
}

impl Iterator for SpaceIter {
    type Item = ImageTensor;

    fn next(&mut self) -> Option<ImageTensor> {
        if self.next >= self.total {
            return None;
        }
        let img = ImageTensor::from_index(self.params, self.next);
        self.next += 1;
        Some(img)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for SpaceIter {}

pub fn enumerate_space(params: SpaceParams, cap: u128) -> Result<SpaceIter> {
    let total = params.enumerable(cap)?;
    Ok(SpaceIter {
        params,
        next: 0,
        total,
    })
}

/// Uniform image number `index` of the stream seeded by `seed`.
pub fn sample_uniform_indexed(params: SpaceParams, seed: u64, index: u64) -> ImageTensor {
    let mut r = rng::stream(seed, index);
    let q = params.level_count() as u32;
    let levels = (0..params.dimension()).map(|_| r.random_range(0..q)).collect();
    ImageTensor { params, levels }
}

pub fn sample_uniform(params: SpaceParams, seed: u64) -> ImageTensor {
    sample_uniform_indexed(params, seed, 0)
}

#[derive(Serialize)]
struct ImageFileRef<'a> {
    n: u32,
    h: u32,
    b: u32,
    levels: &'a [u32],
}

/// Canonical JSON encoding: `{"n":..,"h":..,"b":..,"levels":[..]}`.
pub fn encode_image(img: &ImageTensor) -> Vec<u8> {
    serde_json::to_vec(&ImageFileRef {
        n: img.params.n,
        h: img.params.h,
        b: img.params.b,
        levels: &img.levels,
    })
    .expect("plain integers serialize")
}

fn malformed(position: impl Into<String>, message: impl Into<String>) -> Error {
    Error::MalformedInput {
        position: position.into(),
        message: message.into(),
    }
}

fn field_u32(obj: &serde_json::Map<String, serde_json::Value>, key: &str) -> Result<u32> {
    let v = obj
        .get(key)
        .ok_or_else(|| malformed(format!("$.{key}"), "missing field"))?;
    v.as_u64()
        .and_then(|x| u32::try_from(x).ok())
        .ok_or_else(|| malformed(format!("$.{key}"), format!("expected a non-negative integer, got {v}")))
}

pub fn decode_image(bytes: &[u8]) -> Result<ImageTensor> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| {
        malformed(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("$", "expected a JSON object"))?;
    if let Some(extra) = obj
        .keys()
        .find(|k| !matches!(k.as_str(), "n" | "h" | "b" | "levels"))
    {
        return Err(malformed(format!("$.{extra}"), "unknown field"));
    }
    let (n, h, b) = (field_u32(obj, "n")?, field_u32(obj, "h")?, field_u32(obj, "b")?);
    let params = SpaceParams::new(n, h, b).map_err(|e| malformed("$", e.to_string()))?;
    let raw = obj
        .get("levels")
        .and_then(|v| v.as_array())
        .ok_or_else(|| malformed("$.levels", "expected an array"))?;
    if raw.len() != params.dimension() {
        return Err(malformed(
            "$.levels",
            format!("expected {} levels, got {}", params.dimension(), raw.len()),
        ));
    }
    let mut levels = Vec::with_capacity(raw.len());
    for (i, v) in raw.iter().enumerate() {
        let l = v
            .as_u64()
            .ok_or_else(|| malformed(format!("$.levels[{i}]"), format!("expected an integer, got {v}")))?;
        if l > params.max_level() as u64 {
            return Err(malformed(
                format!("$.levels[{i}]"),
                format!("level {l} exceeds 2^{b} - 1"),
            ));
        }
        levels.push(l as u32);
    }
    Ok(ImageTensor { params, levels })
}

/// Point of `[0,1]^(n^2 h)` holding each channel's real value.
pub fn flatten(img: &ImageTensor) -> Vec<f64> {
    (0..img.levels.len()).map(|i| img.value(i)).collect()
}

/// Index of the cell `[x 2^-b, (x+1) 2^-b)` containing `v`; the last cell is
/// closed on the right.
pub fn cell_index(v: f64, b: u32) -> u32 {
    let q = 1u64 << b;
    ((v * q as f64).floor() as u64).min(q - 1) as u32
}

/// The image whose cell contains `point`.
pub fn cell_of_point(params: SpaceParams, point: &[f64]) -> Result<ImageTensor> {
    if point.len() != params.dimension() {
        return Err(Error::ShapeMismatch(format!(
            "expected {} coordinates, got {}",
            params.dimension(),
            point.len()
        )));
    }
    let mut levels = Vec::with_capacity(point.len());
    for (index, &value) in point.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::CoordinateOutOfRange { index, value });
        }
        levels.push(cell_index(value, params.b));
    }
    Ok(ImageTensor { params, levels })
}
