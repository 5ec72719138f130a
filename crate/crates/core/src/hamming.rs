//! Hamming graphs `H(n, q)`: dense vertex subsets, expansion and interior
//! operators, isoperimetric checks and the bijection with image spaces.
//!
//! Vertex `v` is the word whose base-`q` digits, most significant first, are
//! the coordinates of `v`. The same numbering indexes images, so a vertex of
//! `H(n^2 h, 2^b)` and the image with the same index are in bijection.

use std::collections::HashMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_bigint::BigInt;
use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactmath::{certify_lt, harper_rhs, Enclosure};
use crate::image_space::{ImageTensor, SpaceParams};
use crate::{par, rng};

/// Largest vertex count for materialized subsets.
pub const MAX_VERTICES: u64 = 1 << 26;
/// Largest vertex count for which rotation masks are precomputed.
const MASKED_VERTICES: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct GraphParams {
    /// Word length.
    pub dims: u32,
    /// Alphabet size.
    pub alphabet: u32,
}

impl GraphParams {
    pub fn new(dims: u32, alphabet: u32) -> Result<Self> {
        if dims == 0 || alphabet < 2 {
            return Err(Error::InvalidParams(format!(
                "need dims >= 1 and alphabet >= 2 (got {dims}, {alphabet})"
            )));
        }
        Ok(GraphParams { dims, alphabet })
    }

    /// `q^dims`, or `None` on overflow.
    pub fn vertex_count(&self) -> Option<u64> {
        (self.alphabet as u64).checked_pow(self.dims)
    }

    /// Distance from `s` to `s + q^i` digit place of coordinate `i`.
    fn stride(&self, coord: u32) -> u64 {
        (self.alphabet as u64).pow(self.dims - 1 - coord)
    }

    pub fn digit(&self, v: u64, coord: u32) -> u32 {
        ((v / self.stride(coord)) % self.alphabet as u64) as u32
    }

    pub fn word(&self, mut v: u64) -> Vec<u32> {
        let q = self.alphabet as u64;
        let mut w = vec![0; self.dims as usize];
        for slot in w.iter_mut().rev() {
            *slot = (v % q) as u32;
            v /= q;
        }
        w
    }
}

impl std::fmt::Display for GraphParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "H({},{})", self.dims, self.alphabet)
    }
}

/// Number of coordinates in which two vertices differ.
pub fn hamming_distance(g: GraphParams, u: u64, v: u64) -> u32 {
    let q = g.alphabet as u64;
    let (mut u, mut v) = (u, v);
    let mut d = 0;
    for _ in 0..g.dims {
        d += (u % q != v % q) as u32;
        u /= q;
        v /= q;
    }
    d
}

/// A Hamming graph small enough to materialize subsets of.
#[derive(Debug, Clone)]
pub struct HammingGraph {
    params: GraphParams,
    vertices: u64,
    /// For coordinate `i` and shift `t` in `1..q`, the vertices whose digit
    /// `i` is below `q - t`, at index `i * (q - 1) + t - 1`.
    masks: Option<Arc<Vec<Vec<u64>>>>,
}

impl HammingGraph {
    pub fn new(params: GraphParams) -> Result<Self> {
        Self::with_cap(params, MAX_VERTICES)
    }

    pub fn with_cap(params: GraphParams, cap: u64) -> Result<Self> {
        let vertices = params
            .vertex_count()
            .filter(|&v| v <= cap)
            .ok_or_else(|| Error::SpaceTooLarge {
                size: format!("{}^{}", params.alphabet, params.dims),
                cap: cap as u128,
            })?;
        let masks = (vertices <= MASKED_VERTICES).then(|| {
            let words = words_for(vertices);
            let q = params.alphabet;
            let mut all = Vec::with_capacity((params.dims * (q - 1)) as usize);
            for i in 0..params.dims {
                for t in 1..q {
                    let mut m = vec![0u64; words];
                    for v in 0..vertices {
                        if params.digit(v, i) < q - t {
                            m[(v / 64) as usize] |= 1 << (v % 64);
                        }
                    }
                    all.push(m);
                }
            }
            Arc::new(all)
        });
        Ok(HammingGraph {
            params,
            vertices,
            masks,
        })
    }

    pub fn params(&self) -> GraphParams {
        self.params
    }

    pub fn vertex_count(&self) -> u64 {
        self.vertices
    }

    pub fn empty(&self) -> HammingSubset {
        HammingSubset {
            graph: self.clone(),
            bits: vec![0; words_for(self.vertices)],
        }
    }

    pub fn full(&self) -> HammingSubset {
        self.empty().complement()
    }

    pub fn subset<I: IntoIterator<Item = u64>>(&self, members: I) -> Result<HammingSubset> {
        let mut s = self.empty();
        for v in members {
            if v >= self.vertices {
                return Err(Error::InvalidParams(format!(
                    "vertex {v} outside {}",
                    self.params
                )));
            }
            s.bits[(v / 64) as usize] |= 1 << (v % 64);
        }
        Ok(s)
    }

    /// Subset of a graph with at most 64 vertices given as a bit mask.
    pub fn from_mask(&self, mask: u64) -> HammingSubset {
        debug_assert!(self.vertices <= 64);
        let mut s = self.empty();
        s.bits[0] = mask & low_bits(self.vertices);
        s
    }
}

fn words_for(bits: u64) -> usize {
    bits.div_ceil(64) as usize
}

fn low_bits(n: u64) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn shift_up(src: &[u64], by: u64, out: &mut [u64]) {
    let (w, b) = ((by / 64) as usize, (by % 64) as u32);
    for i in (0..out.len()).rev() {
        let mut v = 0;
        if i >= w {
            v = src[i - w] << b;
            if b > 0 && i > w {
                v |= src[i - w - 1] >> (64 - b);
            }
        }
        out[i] = v;
    }
}

fn shift_down(src: &[u64], by: u64, out: &mut [u64]) {
    let (w, b) = ((by / 64) as usize, (by % 64) as u32);
    let n = src.len();
    for i in 0..out.len() {
        let mut v = 0;
        if i + w < n {
            v = src[i + w] >> b;
            if b > 0 && i + w + 1 < n {
                v |= src[i + w + 1] << (64 - b);
            }
        }
        out[i] = v;
    }
}

/// A set of vertices stored as a dense bitset.
#[derive(Debug, Clone)]
pub struct HammingSubset {
    graph: HammingGraph,
    bits: Vec<u64>,
}

impl PartialEq for HammingSubset {
    fn eq(&self, other: &Self) -> bool {
        self.graph.params == other.graph.params && self.bits == other.bits
    }
}

impl Eq for HammingSubset {}

impl HammingSubset {
    pub fn graph(&self) -> &HammingGraph {
        &self.graph
    }

    pub fn len(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.graph.vertices
    }

    pub fn contains(&self, v: u64) -> bool {
        v < self.graph.vertices && self.bits[(v / 64) as usize] >> (v % 64) & 1 == 1
    }

    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.graph.vertices).filter(|&v| self.contains(v))
    }

    pub fn complement(&self) -> HammingSubset {
        let mut bits: Vec<u64> = self.bits.iter().map(|w| !w).collect();
        if let Some(last) = bits.last_mut() {
            let tail = self.graph.vertices % 64;
            if tail != 0 {
                *last &= low_bits(tail);
            }
        }
        HammingSubset {
            graph: self.graph.clone(),
            bits,
        }
    }

    pub fn is_subset_of(&self, other: &HammingSubset) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    /// Low word of the bitset; the whole subset when the graph has at most
    /// 64 vertices.
    pub fn mask(&self) -> u64 {
        self.bits[0]
    }
}

/// Closed neighbourhood of `s`.
pub fn expand(s: &HammingSubset) -> HammingSubset {
    match &s.graph.masks {
        Some(masks) => expand_folded(s, masks),
        None => expand_naive(s),
    }
}

/// For each coordinate, ORs every rotation of the digit, so each vertex
/// collects the whole line through it; the union over coordinates is the
/// closed neighbourhood.
fn expand_folded(s: &HammingSubset, masks: &[Vec<u64>]) -> HammingSubset {
    let g = s.graph.params;
    let q = g.alphabet as u64;
    let words = s.bits.len();
    let mut out = s.bits.clone();
    let mut low = vec![0u64; words];
    let mut high = vec![0u64; words];
    let mut moved = vec![0u64; words];
    for i in 0..g.dims {
        let stride = g.stride(i);
        for t in 1..q {
            let m = &masks[(i as u64 * (q - 1) + t - 1) as usize];
            for w in 0..words {
                low[w] = s.bits[w] & m[w];
                high[w] = s.bits[w] & !m[w];
            }
            shift_up(&low, t * stride, &mut moved);
            for w in 0..words {
                out[w] |= moved[w];
            }
            shift_down(&high, (q - t) * stride, &mut moved);
            for w in 0..words {
                out[w] |= moved[w];
            }
        }
    }
    HammingSubset {
        graph: s.graph.clone(),
        bits: out,
    }
}

/// Closed neighbourhood by visiting every neighbour of every member.
pub fn expand_naive(s: &HammingSubset) -> HammingSubset {
    let g = s.graph.params;
    let q = g.alphabet as u64;
    let mut out = s.clone();
    for v in s.members() {
        for i in 0..g.dims {
            let stride = g.stride(i);
            let base = v - g.digit(v, i) as u64 * stride;
            for a in 0..q {
                let u = base + a * stride;
                out.bits[(u / 64) as usize] |= 1 << (u % 64);
            }
        }
    }
    out
}

/// Vertices within distance `k` of `s`.
pub fn expand_k(s: &HammingSubset, k: u32) -> HammingSubset {
    let mut cur = s.clone();
    for _ in 0..k {
        if cur.is_empty() || cur.is_full() {
            break;
        }
        cur = expand(&cur);
    }
    cur
}

/// Members of `s` whose distance-`k` ball lies inside `s`.
pub fn interior_k(s: &HammingSubset, k: u32) -> HammingSubset {
    expand_k(&s.complement(), k).complement()
}

/// Subset of size at most half the vertex count, required by the
/// isoperimetric checks.
fn check_interesting(s: &HammingSubset) -> Result<()> {
    let (size, total) = (s.len(), s.graph.vertices);
    if size == 0 || 2 * size > total {
        return Err(Error::NotInterestingSubset { size, total });
    }
    Ok(())
}

/// Path-length radius `floor(c sqrt(dims) + 2)`.
pub fn hamgraph_radius(dims: u32, c: f64) -> u32 {
    (c * (dims as f64).sqrt() + 2.0).floor() as u32
}

/// Enclosure of `2 exp(-2 c^2)`.
pub fn hamgraph_bound(c: f64) -> Enclosure {
    Enclosure::rounded(c * c).scale(-2.0).exp().scale(2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamgraphRecord {
    pub size: u64,
    pub interior: u64,
    pub radius: u32,
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `|interior_k(s, r)| / |s| < 2 exp(-2 c^2)` with
/// `r = floor(c sqrt(dims) + 2)`.
pub fn check_hamgraph_theorem(s: &HammingSubset, c: f64) -> Result<HamgraphRecord> {
    check_interesting(s)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParams(format!("c must be positive (got {c})")));
    }
    let radius = hamgraph_radius(s.graph.params.dims, c);
    let interior = interior_k(s, radius).len();
    let size = s.len();
    hamgraph_record(size, interior, radius, c, &hamgraph_bound)
}

fn hamgraph_record(
    size: u64,
    interior: u64,
    radius: u32,
    c: f64,
    bound: &(dyn Fn(f64) -> Enclosure + Sync),
) -> Result<HamgraphRecord> {
    let ratio = Enclosure::from_rational(&BigRational::new(
        BigInt::from(interior),
        BigInt::from(size),
    ));
    let b = bound(c);
    let holds = certify_lt(
        || format!("hamgraph |S|={size} interior={interior} c={c}"),
        ratio,
        b,
    )?;
    Ok(HamgraphRecord {
        size,
        interior,
        radius,
        ratio: interior as f64 / size as f64,
        bound: b.mid(),
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarperRecord {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `|expand_k(s, k)| / q^dims >= harper_rhs(dims, k, |s| / q^dims) - tol`.
pub fn harper_check(s: &HammingSubset, k: u32, tol: f64) -> Result<HarperRecord> {
    let g = s.graph.params;
    let size = s.len();
    if size == 0 || size == s.graph.vertices {
        return Err(Error::PreconditionViolated(
            "harper_check needs a proper nonempty subset".into(),
        ));
    }
    if k == 0 || k >= g.dims {
        return Err(Error::PreconditionViolated(format!(
            "harper_check needs 1 <= k < dims (k={k}, dims={})",
            g.dims
        )));
    }
    let frac = BigRational::new(BigInt::from(size), BigInt::from(s.graph.vertices));
    let rhs = harper_rhs(g.dims as u64, k as u64, &frac, tol)?;
    Ok(harper_record(expand_k(s, k).len(), s.graph.vertices, rhs, tol))
}

fn harper_record(expanded: u64, total: u64, rhs: f64, tol: f64) -> HarperRecord {
    let lhs = expanded as f64 / total as f64;
    HarperRecord {
        lhs,
        rhs,
        holds: lhs >= rhs - tol,
    }
}

/// Bijection between `V(H(n^2 h, 2^b))` and the images of a space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageBijection {
    space: SpaceParams,
    graph: GraphParams,
}

pub fn image_bijection(params: SpaceParams) -> ImageBijection {
    ImageBijection {
        space: params,
        graph: GraphParams {
            dims: params.dimension() as u32,
            alphabet: params.level_count() as u32,
        },
    }
}

impl ImageBijection {
    pub fn graph(&self) -> GraphParams {
        self.graph
    }

    pub fn space(&self) -> SpaceParams {
        self.space
    }

    /// The vertex word of an image is its level array.
    pub fn word_of(&self, img: &ImageTensor) -> Vec<u32> {
        img.levels().to_vec()
    }

    pub fn image_of(&self, word: &[u32]) -> Result<ImageTensor> {
        ImageTensor::new(self.space, word.to_vec())
    }

    pub fn vertex_of(&self, img: &ImageTensor) -> Option<u64> {
        img.index()
    }

    pub fn image_of_vertex(&self, v: u64) -> ImageTensor {
        ImageTensor::from_index(self.space, v)
    }
}

/// Aggregate of an isoperimetric sweep. Violations are sorted.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepReport {
    pub checked: u64,
    /// Smallest `bound - ratio` (hamgraph) or `lhs - (rhs - tol)` (Harper).
    pub min_margin: f64,
    /// `(subset description, parameter)` of every failed check.
    pub violations: Vec<(String, String)>,
}

impl SweepReport {
    fn identity() -> Self {
        SweepReport {
            checked: 0,
            min_margin: f64::INFINITY,
            violations: Vec::new(),
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.checked += other.checked;
        self.min_margin = self.min_margin.min(other.min_margin);
        self.violations.extend(other.violations);
        self
    }

    fn finish(mut self) -> Self {
        self.violations.sort();
        self
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn describe(s: &HammingSubset) -> String {
    let m: Vec<String> = s.members().map(|v| v.to_string()).collect();
    format!("{}{{{}}}", s.graph.params, m.join(","))
}

fn hamgraph_into(
    acc: &mut SweepReport,
    s: &HammingSubset,
    cs: &[f64],
    bound: &(dyn Fn(f64) -> Enclosure + Sync),
) -> Result<()> {
    let size = s.len();
    let dims = s.graph.params.dims;
    for &c in cs {
        let radius = hamgraph_radius(dims, c);
        let interior = interior_k(s, radius).len();
        let rec = hamgraph_record(size, interior, radius, c, bound)?;
        acc.checked += 1;
        acc.min_margin = acc.min_margin.min(rec.bound - rec.ratio);
        if !rec.holds {
            acc.violations.push((describe(s), format!("c={c}")));
        }
    }
    Ok(())
}

/// Checks the hamgraph inequality for every subset of a graph with at most
/// 64 vertices whose size lies in `1..=q^dims/2`.
pub fn hamgraph_exhaustive(
    g: GraphParams,
    cs: &[f64],
    bound: &(dyn Fn(f64) -> Enclosure + Sync),
    cap_subsets: u64,
) -> Result<SweepReport> {
    let graph = HammingGraph::new(g)?;
    let v = graph.vertex_count();
    if v > 63 || (1u64 << v) > cap_subsets {
        return Err(Error::EnumerationCapExceeded { cap: cap_subsets });
    }
    let half = v / 2;
    par::fold_range(
        0..1u64 << v,
        || Ok(SweepReport::identity()),
        |acc: Result<SweepReport>, mask| {
            let mut acc = acc?;
            let size = mask.count_ones() as u64;
            if size >= 1 && size <= half {
                hamgraph_into(&mut acc, &graph.from_mask(mask), cs, bound)?;
            }
            Ok(acc)
        },
        |a, b| Ok(a?.merge(b?)),
    )
    .map(SweepReport::finish)
}

/// Draws subset number `index` of a seeded family: a uniform size in
/// `1..=q^dims/2`, then a uniform subset of that size.
pub fn random_interesting_subset(graph: &HammingGraph, seed: u64, index: u64) -> HammingSubset {
    let mut r = rng::stream(seed, index);
    let v = graph.vertex_count();
    let size = r.random_range(1..=v / 2);
    let picks = index::sample(&mut r, v as usize, size as usize);
    graph
        .subset(picks.into_iter().map(|i| i as u64))
        .expect("sampled vertices are in range")
}

/// Checks the hamgraph inequality on `count` seeded random subsets.
pub fn hamgraph_random(
    g: GraphParams,
    cs: &[f64],
    count: u64,
    seed: u64,
    bound: &(dyn Fn(f64) -> Enclosure + Sync),
) -> Result<SweepReport> {
    let graph = HammingGraph::new(g)?;
    if graph.vertex_count() < 2 {
        return Err(Error::InvalidParams(format!("{g} has no interesting subsets")));
    }
    par::fold_range(
        0..count,
        || Ok(SweepReport::identity()),
        |acc: Result<SweepReport>, i| {
            let mut acc = acc?;
            let s = random_interesting_subset(&graph, seed, i);
            hamgraph_into(&mut acc, &s, cs, bound)?;
            Ok(acc)
        },
        |a, b| Ok(a?.merge(b?)),
    )
    .map(SweepReport::finish)
}

/// Checks Harper's bound for every proper nonempty subset of a graph with at
/// most 64 vertices and every `k` in `ks`.
pub fn harper_exhaustive(
    g: GraphParams,
    ks: &[u32],
    tol: f64,
    cap_subsets: u64,
) -> Result<SweepReport> {
    let graph = HammingGraph::new(g)?;
    let v = graph.vertex_count();
    if v > 63 || (1u64 << v) > cap_subsets {
        return Err(Error::EnumerationCapExceeded { cap: cap_subsets });
    }
    // the right-hand side depends only on (|S|, k)
    let mut rhs = HashMap::new();
    for size in 1..v {
        let frac = BigRational::new(BigInt::from(size), BigInt::from(v));
        for &k in ks {
            rhs.insert((size, k), harper_rhs(g.dims as u64, k as u64, &frac, tol)?);
        }
    }
    let report = par::fold_range(
        1..(1u64 << v) - 1,
        SweepReport::identity,
        |mut acc, mask| {
            let s = graph.from_mask(mask);
            let size = mask.count_ones() as u64;
            for &k in ks {
                let rec = harper_record(expand_k(&s, k).len(), v, rhs[&(size, k)], tol);
                acc.checked += 1;
                acc.min_margin = acc.min_margin.min(rec.lhs - (rec.rhs - tol));
                if !rec.holds {
                    acc.violations.push((describe(&s), format!("k={k}")));
                }
            }
            acc
        },
        SweepReport::merge,
    );
    Ok(report.finish())
}
