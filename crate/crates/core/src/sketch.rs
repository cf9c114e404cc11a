//! Linear sketches: CountSketch heavy hitters, an AMS norm estimator, a
//! resistance sampler built from invertible cell tables, and the hypergraph
//! sketch grid with its recovery procedure.

use crate::config::{lg, SparsifyConfig};
use crate::error::{Error, Result};
use crate::hypergraph::{arity_base, weight_class, EdgeId, Hyperedge, Hypergraph, VertexId};
use crate::io::{Stream, StreamOp};
use crate::multigraph::MultiGraph;
use crate::output::SparsifierOutput;
use crate::plan::SamplingPlan;
use crate::resistance::ExactResistance;
use crate::rng::{hash_words, substream, tag};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

const FP: u64 = 0xf1;
const SIGN: u64 = 0x51;
const MAGIC: &[u8; 4] = b"HSSK";
const VERSION: u32 = 1;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k == 0 {
        0.0
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// CountSketch over u64 indices with signed integer counters.
#[derive(Clone, Debug, PartialEq)]
pub struct HeavyHitterSketch {
    eta: f64,
    depth: usize,
    width: usize,
    seed: u64,
    cells: Vec<i64>,
}

impl HeavyHitterSketch {
    /// Depth 4·⌈log₂u⌉ and width ⌈100/η²⌉.
    pub fn new(eta: f64, universe: usize, seed: u64) -> Self {
        let depth = 4 * lg(universe);
        let width = (100.0 / (eta * eta)).ceil() as usize;
        Self::with_dims(eta, depth, width, seed)
    }

    pub fn with_dims(eta: f64, depth: usize, width: usize, seed: u64) -> Self {
        let (depth, width) = (depth.max(1), width.max(1));
        HeavyHitterSketch { eta, depth, width, seed, cells: vec![0; depth * width] }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.depth, self.width)
    }

    pub fn cells(&self) -> &[i64] {
        &self.cells
    }

    fn bucket(&self, row: usize, index: u64) -> (usize, i64) {
        let h = hash_words(self.seed, &[row as u64, index]);
        let s = if hash_words(self.seed, &[SIGN, row as u64, index]) & 1 == 1 { 1 } else { -1 };
        (row * self.width + (h % self.width as u64) as usize, s)
    }

    pub fn update(&mut self, index: u64, delta: i64) {
        for row in 0..self.depth {
            let (c, s) = self.bucket(row, index);
            self.cells[c] = self.cells[c].wrapping_add(s * delta);
        }
    }

    /// Median over rows of the signed cell value.
    pub fn estimate(&self, index: u64) -> f64 {
        median((0..self.depth).map(|row| {
            let (c, s) = self.bucket(row, index);
            (s * self.cells[c]) as f64
        }).collect())
    }

    /// Candidates whose estimate reaches (8/10)·η·`l2`, with their estimates.
    pub fn decode(&self, l2: f64, candidates: impl IntoIterator<Item = u64>) -> Vec<(u64, f64)> {
        let thr = 0.8 * self.eta * l2;
        candidates
            .into_iter()
            .filter_map(|i| {
                let v = self.estimate(i);
                (v.abs() >= thr && v != 0.0).then_some((i, v))
            })
            .collect()
    }

    pub fn add(&mut self, other: &Self, sign: i64) -> Result<()> {
        if (self.depth, self.width, self.seed) != (other.depth, other.width, other.seed) {
            return Err(Error::SketchMismatch("heavy-hitter dimensions or seeds differ".into()));
        }
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a = a.wrapping_add(sign * b);
        }
        Ok(())
    }
}

pub fn hh_update(sk: &mut HeavyHitterSketch, index: u64, delta: i64) {
    sk.update(index, delta)
}

pub fn hh_decode(sk: &HeavyHitterSketch, l2: f64, candidates: impl IntoIterator<Item = u64>) -> Vec<(u64, f64)> {
    sk.decode(l2, candidates)
}

/// AMS sign sketch: median over groups of the mean squared counter.
#[derive(Clone, Debug, PartialEq)]
pub struct L2Estimator {
    groups: usize,
    per_group: usize,
    seed: u64,
    cells: Vec<i64>,
}

impl L2Estimator {
    /// Relative accuracy `acc` with failure probability about `delta`.
    pub fn new(acc: f64, delta: f64, seed: u64) -> Self {
        let per_group = (8.0 / (acc * acc)).ceil() as usize;
        let groups = ((1.0 / delta.clamp(1e-300, 0.5)).ln().ceil() as usize).clamp(1, 31) | 1;
        L2Estimator { groups, per_group, seed, cells: vec![0; groups * per_group] }
    }

    pub fn update(&mut self, index: u64, delta: i64) {
        for (k, c) in self.cells.iter_mut().enumerate() {
            let s = if hash_words(self.seed, &[SIGN, k as u64, index]) & 1 == 1 { 1 } else { -1 };
            *c = c.wrapping_add(s * delta);
        }
    }

    pub fn estimate(&self) -> f64 {
        let means = self
            .cells
            .chunks(self.per_group)
            .map(|g| g.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>() / g.len() as f64)
            .collect();
        median(means).sqrt()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Three-row table of (count, key sum, fingerprint sum) cells; any key set
/// small enough relative to the width can be listed back by peeling.
#[derive(Clone, Debug, PartialEq)]
pub struct PeelTable {
    width: usize,
    count: Vec<i64>,
    keysum: Vec<u128>,
    fpsum: Vec<u64>,
}

pub const PEEL_ROWS: usize = 3;

/// Outcome of peeling one table.
#[derive(Clone, Debug, PartialEq)]
pub struct Peeled {
    /// Keys with net count +1.
    pub keys: Vec<u128>,
    /// Keys with net count −1 (removed more often than added).
    pub negative: Vec<u128>,
    pub complete: bool,
}

impl PeelTable {
    pub fn new(width: usize) -> Self {
        let w = width.max(1);
        PeelTable {
            width: w,
            count: vec![0; PEEL_ROWS * w],
            keysum: vec![0; PEEL_ROWS * w],
            fpsum: vec![0; PEEL_ROWS * w],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn cell(&self, seed: u64, row: usize, key: u128) -> usize {
        let h = hash_words(seed, &[row as u64, key as u64, (key >> 64) as u64]);
        row * self.width + (h % self.width as u64) as usize
    }

    fn fingerprint(seed: u64, key: u128) -> u64 {
        hash_words(seed, &[FP, key as u64, (key >> 64) as u64])
    }

    pub fn update(&mut self, seed: u64, key: u128, delta: i64) {
        let fp = Self::fingerprint(seed, key).wrapping_mul(delta as u64);
        let ks = key.wrapping_mul(delta as i128 as u128);
        for row in 0..PEEL_ROWS {
            let c = self.cell(seed, row, key);
            self.count[c] = self.count[c].wrapping_add(delta);
            self.keysum[c] = self.keysum[c].wrapping_add(ks);
            self.fpsum[c] = self.fpsum[c].wrapping_add(fp);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.count.iter().all(|&c| c == 0) && self.keysum.iter().all(|&k| k == 0) && self.fpsum.iter().all(|&f| f == 0)
    }

    fn pure(&self, seed: u64, c: usize) -> Option<(u128, i64)> {
        match self.count[c] {
            1 => {
                let k = self.keysum[c];
                (Self::fingerprint(seed, k) == self.fpsum[c]).then_some((k, 1))
            }
            -1 => {
                let k = self.keysum[c].wrapping_neg();
                (Self::fingerprint(seed, k).wrapping_neg() == self.fpsum[c]).then_some((k, -1))
            }
            _ => None,
        }
    }

    pub fn peel(&self, seed: u64) -> Peeled {
        let mut t = self.clone();
        let mut out = Peeled { keys: Vec::new(), negative: Vec::new(), complete: false };
        let mut stack: Vec<usize> = (0..t.count.len()).filter(|&c| t.count[c].abs() == 1).collect();
        while let Some(c) = stack.pop() {
            let Some((key, sign)) = t.pure(seed, c) else { continue };
            if sign > 0 {
                out.keys.push(key);
            } else {
                out.negative.push(key);
            }
            t.update(seed, key, -sign);
            for row in 0..PEEL_ROWS {
                let d = t.cell(seed, row, key);
                if t.count[d].abs() == 1 {
                    stack.push(d);
                }
            }
        }
        out.complete = t.is_zero();
        out.keys.sort_unstable();
        out.negative.sort_unstable();
        out
    }

    fn add(&mut self, other: &Self, sign: i64) {
        for i in 0..self.count.len() {
            self.count[i] = self.count[i].wrapping_add(sign * other.count[i]);
            self.keysum[i] = self.keysum[i].wrapping_add(other.keysum[i].wrapping_mul(sign as i128 as u128));
            self.fpsum[i] = self.fpsum[i].wrapping_add(other.fpsum[i].wrapping_mul(sign as u64));
        }
    }
}

/// Result of decoding one resistance sampler.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerDecode {
    /// (key, realized inclusion probability).
    pub sampled: Vec<(u128, f64)>,
    /// Shallowest subsampling level that peeled completely.
    pub level: Option<usize>,
    /// Keys whose target probability exceeded what the decoded level allows.
    pub undersampled: usize,
    /// Decoded keys rejected by the caller's key map.
    pub phantom: usize,
}

/// Nested geometric subsampling levels of a multi-edge indicator vector, one
/// [`PeelTable`] each. A key sits in levels 0..=λ(key) where λ is the number
/// of trailing zeros of its keyed hash.
#[derive(Clone, Debug, PartialEq)]
pub struct ErSamplerSketch {
    seed: u64,
    levels: Vec<PeelTable>,
}

impl ErSamplerSketch {
    pub fn new(levels: usize, width: usize, seed: u64) -> Self {
        ErSamplerSketch { seed, levels: (0..levels.max(1)).map(|_| PeelTable::new(width)).collect() }
    }

    pub fn levels(&self) -> &[PeelTable] {
        &self.levels
    }

    pub fn key_level(&self, key: u128) -> usize {
        let h = hash_words(self.seed, &[tag::LEVEL, key as u64, (key >> 64) as u64]);
        (h.trailing_zeros() as usize).min(self.levels.len() - 1)
    }

    pub fn update(&mut self, key: u128, delta: i64) {
        let top = self.key_level(key);
        for p in 0..=top {
            self.levels[p].update(self.seed, key, delta);
        }
    }

    pub fn cell_count(&self) -> usize {
        self.levels.iter().map(|t| t.count.len()).sum()
    }

    /// Finds the shallowest level that peels completely, computes resistances
    /// on its multigraph scaled by 2^p, and keeps each key with probability
    /// 2^-q ≥ min(1, φ·R̃) by testing its level membership. `pair` maps a key to
    /// its endpoints in `0..n`, or `None` if the key is not a live multi-edge.
    pub fn decode(&self, n: usize, phi: f64, pair: impl Fn(u128) -> Option<(usize, usize)>) -> Result<SamplerDecode> {
        let mut out = SamplerDecode { sampled: Vec::new(), level: None, undersampled: 0, phantom: 0 };
        for (p, table) in self.levels.iter().enumerate() {
            let peeled = table.peel(self.seed);
            if !peeled.complete {
                continue;
            }
            out.level = Some(p);
            out.phantom += peeled.negative.len();
            let mut g = MultiGraph::new(n);
            let mut copies = HashMap::new();
            let mut keys = Vec::with_capacity(peeled.keys.len());
            for k in peeled.keys {
                match pair(k) {
                    Some((u, v)) if u != v && u < n && v < n => {
                        g.add(u, v, 0, &mut copies);
                        keys.push(k);
                    }
                    _ => out.phantom += 1,
                }
            }
            if keys.is_empty() {
                return Ok(out);
            }
            let ex = ExactResistance::new(&g, usize::MAX)?;
            let scale = 2f64.powi(p as i32);
            for (k, e) in keys.into_iter().zip(&g.edges) {
                let r = ex.resistance(e.u, e.v) / scale;
                let x = (DECODE_OVERSAMPLE * phi * r).min(1.0);
                let q = if x >= 1.0 { 0 } else { (1.0 / x).log2().floor() as usize };
                if q < p {
                    out.undersampled += 1;
                }
                let q = q.max(p);
                if self.key_level(k) >= q {
                    out.sampled.push((k, 2f64.powi(-(q as i32))));
                }
            }
            return Ok(out);
        }
        Ok(out)
    }

    fn add(&mut self, other: &Self, sign: i64) -> Result<()> {
        if self.seed != other.seed || self.levels.len() != other.levels.len() {
            return Err(Error::SketchMismatch("sampler seeds or depths differ".into()));
        }
        for (a, b) in self.levels.iter_mut().zip(&other.levels) {
            if a.width != b.width {
                return Err(Error::SketchMismatch("sampler widths differ".into()));
            }
            a.add(b, sign);
        }
        Ok(())
    }
}

/// Decode keeps keys at 2^-q ≥ this multiple of φ·R̃, so that power-of-two
/// rounding never lands a key right at its target rate.
pub const DECODE_OVERSAMPLE: f64 = 1.2;

pub fn er_sketch_decode(
    s: &ErSamplerSketch,
    n: usize,
    phi: f64,
    pair: impl Fn(u128) -> Option<(usize, usize)>,
) -> Result<SamplerDecode> {
    s.decode(n, phi, pair)
}

/// Constants of the sketch pipelines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    /// Sampler oversampling φ = c_phi/ε² in vertex-sampling mode.
    pub c_phi: f64,
    /// Naive mode: φ = c_naive·r·⌈log₂n⌉/ε².
    pub c_naive: f64,
    /// Peel-table width per row is ⌈c_cells·φ·n'·⌈log₂n'⌉⌉ on n' sampled vertices.
    pub c_cells: f64,
    pub min_width: usize,
    /// Subsampling levels per sampler; `None` means ⌈log₂m⌉ + 1.
    pub sampler_levels: Option<usize>,
    /// Outer levels; `None` means ⌈log₂m⌉ + 2.
    pub levels: Option<usize>,
}

impl Default for SketchConfig {
    fn default() -> Self {
        SketchConfig { c_phi: 0.07, c_naive: 0.04, c_cells: 8.0, min_width: 8, sampler_levels: None, levels: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SketchMode {
    VertexSampling,
    Naive,
}

/// Everything that fixes a bucket sketch's shape and randomness.
#[derive(Clone, Debug, PartialEq)]
pub struct BucketShape {
    pub r: usize,
    pub class: i32,
    pub levels: usize,
    pub rounds: usize,
    pub p: f64,
    pub phi: f64,
    pub sampler_levels: usize,
    pub seed: u64,
}

/// Sketch grid of one arity/weight bucket: one sampler per (level, round).
#[derive(Clone, Debug, PartialEq)]
pub struct BucketSketch {
    pub shape: BucketShape,
    plans: Vec<SamplingPlan>,
    round_vertices: Vec<Vec<Vec<VertexId>>>,
    samplers: Vec<Vec<ErSamplerSketch>>,
}

fn edge_hash(seed: u64, e: &Hyperedge) -> u64 {
    let mut words = Vec::with_capacity(e.vertices.len() + 2);
    words.push(tag::LABEL);
    words.push(e.id as u64);
    words.extend(e.vertices.iter().map(|&v| v as u64));
    hash_words(seed, &words)
}

fn bucket_key(e: &Hyperedge) -> (usize, i32) {
    (arity_base(e.arity()), weight_class(e.weight))
}

fn multi_key(h: u64, u: VertexId, v: VertexId) -> u128 {
    ((h as u128) << 64) | ((u as u128) << 32) | v as u128
}

fn key_parts(key: u128) -> (u64, VertexId, VertexId) {
    ((key >> 64) as u64, ((key >> 32) as u32) as usize, (key as u32) as usize)
}

impl BucketSketch {
    fn new(n: usize, shape: BucketShape, c_cells: f64, min_width: usize) -> Self {
        let mut plans = Vec::with_capacity(shape.levels);
        let mut round_vertices = Vec::with_capacity(shape.levels);
        let mut samplers = Vec::with_capacity(shape.levels);
        for i in 0..shape.levels {
            let plan = SamplingPlan::new(n, shape.rounds, shape.p, &mut substream(shape.seed, &[tag::PLAN, i as u64]));
            let rv = plan.all_round_vertices();
            samplers.push(
                rv.iter()
                    .enumerate()
                    .map(|(j, vs)| {
                        let nv = vs.len();
                        let w = (c_cells * shape.phi * nv as f64 * lg(nv) as f64).ceil() as usize;
                        let seed = hash_words(shape.seed, &[tag::SKETCH, i as u64, j as u64]);
                        ErSamplerSketch::new(shape.sampler_levels, w.max(min_width), seed)
                    })
                    .collect(),
            );
            plans.push(plan);
            round_vertices.push(rv);
        }
        BucketSketch { shape, plans, round_vertices, samplers }
    }

    fn coin(&self, id: EdgeId, level: usize) -> bool {
        hash_words(self.shape.seed, &[tag::COIN, id as u64, level as u64]) & 1 == 1
    }

    /// Adds `sign` times the indicator of every projected multi-edge of `e`
    /// to each (level, round) it reaches.
    fn apply(&mut self, seed: u64, e: &Hyperedge, sign: i64, only_level: Option<usize>) {
        let h = edge_hash(seed, e);
        for i in 0..self.shape.levels {
            if i > 0 && !self.coin(e.id, i - 1) {
                break;
            }
            if only_level.is_some_and(|l| l != i) {
                continue;
            }
            for (j, vs) in self.plans[i].intersections(&e.vertices) {
                for a in 0..vs.len() {
                    for b in a + 1..vs.len() {
                        self.samplers[i][j].update(multi_key(h, vs[a], vs[b]), sign);
                    }
                }
            }
        }
    }

    pub fn cell_count(&self) -> usize {
        self.samplers.iter().flatten().map(|s| s.cell_count()).sum()
    }

    pub fn sampler(&self, level: usize, round: usize) -> &ErSamplerSketch {
        &self.samplers[level][round]
    }

    fn add(&mut self, other: &Self, sign: i64) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::SketchMismatch(format!("bucket r = {} shapes differ", self.shape.r)));
        }
        for (a, b) in self.samplers.iter_mut().flatten().zip(other.samplers.iter().flatten()) {
            a.add(b, sign)?;
        }
        Ok(())
    }
}

/// Per-sampler decode provenance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecoveryStats {
    pub samplers: usize,
    /// Samplers where no subsampling level peeled.
    pub failed: usize,
    /// Samplers that decoded below level 0.
    pub deep: usize,
    pub undersampled: usize,
    pub phantom: usize,
}

/// Linear sketch of a hypergraph plus the directory of live hyperedges.
#[derive(Clone, Debug, PartialEq)]
pub struct HypergraphSketch {
    n: usize,
    eps: f64,
    m_cap: usize,
    seed: u64,
    mode: SketchMode,
    config: SketchConfig,
    rounds_c: f64,
    min_round_vertices: f64,
    buckets: BTreeMap<(usize, i32), BucketSketch>,
    directory: BTreeMap<EdgeId, Hyperedge>,
    by_hash: HashMap<u64, EdgeId>,
    /// Live hyperedges per bucket; a bucket is dropped when it empties.
    live: BTreeMap<(usize, i32), usize>,
    next_id: EdgeId,
}

impl HypergraphSketch {
    pub fn new(
        n: usize,
        eps: f64,
        m_cap: usize,
        mode: SketchMode,
        sparsify: &SparsifyConfig,
        config: &SketchConfig,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Infeasible(format!("eps = {eps} not in (0,1)")));
        }
        Ok(HypergraphSketch {
            n,
            eps,
            m_cap: m_cap.max(1),
            seed: sparsify.seed,
            mode,
            config: config.clone(),
            rounds_c: sparsify.c_rounds,
            min_round_vertices: sparsify.min_round_vertices,
            buckets: BTreeMap::new(),
            directory: BTreeMap::new(),
            by_hash: HashMap::new(),
            live: BTreeMap::new(),
            next_id: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> SketchMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.directory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directory.is_empty()
    }

    /// One past the largest id ever inserted.
    pub fn next_id(&self) -> EdgeId {
        self.next_id
    }

    fn track(&mut self, e: &Hyperedge) {
        *self.live.entry(bucket_key(e)).or_insert(0) += 1;
        self.by_hash.insert(edge_hash(self.seed, e), e.id);
        self.next_id = self.next_id.max(e.id + 1);
    }

    pub fn buckets(&self) -> impl Iterator<Item = (&(usize, i32), &BucketSketch)> {
        self.buckets.iter()
    }

    fn shape(&self, r: usize, class: i32) -> BucketShape {
        let lgm = lg(self.m_cap);
        let levels = self.config.levels.unwrap_or(lgm + 2);
        let sampler_levels = self.config.sampler_levels.unwrap_or(lgm + 1);
        let seed = hash_words(self.seed, &[tag::BUCKET, r as u64, class as i64 as u64]);
        let e2 = self.eps * self.eps;
        match self.mode {
            SketchMode::VertexSampling => {
                let p = (1.0 / r as f64).max(self.min_round_vertices / self.n.max(1) as f64).min(1.0);
                BucketShape {
                    r,
                    class,
                    levels,
                    rounds: ((self.rounds_c * r as f64 * lg(self.n) as f64).ceil() as usize).max(1),
                    p,
                    phi: self.config.c_phi / e2,
                    sampler_levels,
                    seed,
                }
            }
            SketchMode::Naive => BucketShape {
                r,
                class,
                levels,
                rounds: 1,
                p: 1.0,
                phi: self.config.c_naive * r as f64 * lg(self.n) as f64 / e2,
                sampler_levels,
                seed,
            },
        }
    }

    fn bucket_mut(&mut self, key: (usize, i32)) -> &mut BucketSketch {
        if !self.buckets.contains_key(&key) {
            let b = BucketSketch::new(self.n, self.shape(key.0, key.1), self.config.c_cells, self.config.min_width);
            self.buckets.insert(key, b);
        }
        self.buckets.get_mut(&key).unwrap()
    }

    pub fn insert(&mut self, e: Hyperedge) -> Result<()> {
        e.validate(self.n)?;
        if self.directory.contains_key(&e.id) {
            return Err(Error::DuplicateId(e.id));
        }
        let h = edge_hash(self.seed, &e);
        if self.by_hash.contains_key(&h) {
            return Err(Error::InvalidEdge(format!("hyperedge {} collides with a live edge hash", e.id)));
        }
        let seed = self.seed;
        self.bucket_mut(bucket_key(&e)).apply(seed, &e, 1, None);
        self.track(&e);
        self.directory.insert(e.id, e);
        Ok(())
    }

    pub fn delete(&mut self, id: EdgeId) -> Result<()> {
        let e = self.directory.remove(&id).ok_or(Error::UnknownEdge(id))?;
        self.by_hash.remove(&edge_hash(self.seed, &e));
        let key = bucket_key(&e);
        let seed = self.seed;
        self.bucket_mut(key).apply(seed, &e, -1, None);
        let c = self.live.get_mut(&key).expect("bucket of a live edge");
        *c -= 1;
        if *c == 0 {
            // linear counters of an empty bucket are all zero
            self.live.remove(&key);
            self.buckets.remove(&key);
        }
        Ok(())
    }

    /// Replays a stream; inserts take ids from `next_id()` onward, so a
    /// stream replayed into an empty sketch uses absolute stream ids.
    pub fn update(&mut self, stream: &Stream) -> Result<()> {
        if stream.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: stream.n });
        }
        let mut next = self.next_id();
        for op in &stream.ops {
            match op {
                StreamOp::Insert { weight, vertices } => {
                    self.insert(Hyperedge::new(next, vertices.clone(), *weight))?;
                    next += 1;
                }
                StreamOp::Delete(id) => self.delete(*id)?,
            }
        }
        Ok(())
    }

    fn same_frame(&self, other: &Self) -> bool {
        self.n == other.n
            && self.eps == other.eps
            && self.m_cap == other.m_cap
            && self.seed == other.seed
            && self.mode == other.mode
            && self.config == other.config
            && self.rounds_c == other.rounds_c
            && self.min_round_vertices == other.min_round_vertices
    }

    /// Cell-wise sum; the two directories must be disjoint.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if !self.same_frame(other) {
            return Err(Error::SketchMismatch("parameters or seeds differ".into()));
        }
        if let Some(id) = other.directory.keys().find(|id| self.directory.contains_key(id)) {
            return Err(Error::SketchMismatch(format!("hyperedge {id} present in both sketches")));
        }
        for (&key, b) in &other.buckets {
            self.bucket_mut(key).add(b, 1)?;
        }
        for (id, e) in &other.directory {
            self.track(e);
            self.directory.insert(*id, e.clone());
        }
        self.next_id = self.next_id.max(other.next_id);
        Ok(())
    }

    /// The live hyperedges held in the directory.
    pub fn source(&self) -> Hypergraph {
        Hypergraph::from_edges(self.n, self.directory.values().cloned().collect()).expect("directory edges are valid")
    }

    /// Same parameters, directory and counters, ignoring the id counter.
    pub fn counters_eq(&self, other: &Self) -> bool {
        self.same_frame(other) && self.directory == other.directory && self.buckets == other.buckets
    }

    /// Counter cells over all buckets; each cell is four 64-bit words.
    pub fn cell_count(&self) -> usize {
        self.buckets.values().map(|b| b.cell_count()).sum()
    }

    pub fn counter_bytes(&self) -> usize {
        self.cell_count() * 32
    }

    /// Level by level and round by round: subtract every hyperedge recovered
    /// so far, decode the sampler, and recover the parents of the sampled
    /// multi-edges at weight 2^i.
    pub fn recover(&self) -> Result<(SparsifierOutput, RecoveryStats)> {
        let mut out = SparsifierOutput::default();
        let mut stats = RecoveryStats::default();
        for e in self.directory.values() {
            if e.arity() == 1 {
                out.push(e.id, 0, e.weight);
            }
        }
        for (&key, b) in &self.buckets {
            let mut found: BTreeMap<EdgeId, usize> = BTreeMap::new();
            for i in 0..b.shape.levels {
                for j in 0..b.shape.rounds {
                    let mut s = b.samplers[i][j].clone();
                    for &id in found.keys() {
                        let e = &self.directory[&id];
                        if !(0..i).all(|l| b.coin(id, l)) {
                            continue;
                        }
                        let h = edge_hash(self.seed, e);
                        for (jj, vs) in b.plans[i].intersections(&e.vertices) {
                            if jj != j {
                                continue;
                            }
                            for x in 0..vs.len() {
                                for y in x + 1..vs.len() {
                                    s.update(multi_key(h, vs[x], vs[y]), -1);
                                }
                            }
                        }
                    }
                    let rv = &b.round_vertices[i][j];
                    let dec = s.decode(rv.len(), b.shape.phi, |k| {
                        let (h, u, v) = key_parts(k);
                        let id = *self.by_hash.get(&h)?;
                        let e = &self.directory[&id];
                        if bucket_key(e) != key || found.contains_key(&id) {
                            return None;
                        }
                        if e.vertices.binary_search(&u).is_err() || e.vertices.binary_search(&v).is_err() {
                            return None;
                        }
                        Some((rv.binary_search(&u).ok()?, rv.binary_search(&v).ok()?))
                    })?;
                    stats.samplers += 1;
                    match dec.level {
                        None => stats.failed += 1,
                        Some(p) if p > 0 => stats.deep += 1,
                        _ => {}
                    }
                    stats.undersampled += dec.undersampled;
                    stats.phantom += dec.phantom;
                    if dec.level.is_none() {
                        out.warnings.push(format!("bucket r = {} level {i} round {j}: no subsampling level decoded", key.0));
                    }
                    for (k, _) in dec.sampled {
                        let id = self.by_hash[&key_parts(k).0];
                        found.entry(id).or_insert(i);
                    }
                }
            }
            for (id, level) in found {
                out.push(id, level, self.directory[&id].weight);
                out.levels = out.levels.max(level + 1);
            }
        }
        out.sort();
        Ok((out, stats))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.u32(VERSION);
        w.u64(self.n as u64);
        w.f64(self.eps);
        w.u64(self.m_cap as u64);
        w.u64(self.seed);
        w.u8(match self.mode {
            SketchMode::VertexSampling => 0,
            SketchMode::Naive => 1,
        });
        w.f64(self.config.c_phi);
        w.f64(self.config.c_naive);
        w.f64(self.config.c_cells);
        w.u64(self.config.min_width as u64);
        w.opt(self.config.sampler_levels);
        w.opt(self.config.levels);
        w.f64(self.rounds_c);
        w.f64(self.min_round_vertices);
        w.u32(self.buckets.len() as u32);
        for (&(r, class), b) in &self.buckets {
            w.u64(r as u64);
            w.u64(class as i64 as u64);
            w.u32(b.shape.levels as u32);
            w.u32(b.shape.rounds as u32);
            w.u32(b.shape.sampler_levels as u32);
            for s in b.samplers.iter().flatten() {
                w.u32(s.levels[0].width as u32);
                for t in &s.levels {
                    for c in 0..t.count.len() {
                        w.u64(t.count[c] as u64);
                        w.u64(t.keysum[c] as u64);
                        w.u64((t.keysum[c] >> 64) as u64);
                        w.u64(t.fpsum[c]);
                    }
                }
            }
        }
        w.u64(self.directory.len() as u64);
        for e in self.directory.values() {
            w.u64(e.id as u64);
            w.f64(e.weight);
            w.u32(e.vertices.len() as u32);
            for &v in &e.vertices {
                w.u32(v as u32);
            }
        }
        w.u64(self.next_id as u64);
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { b: bytes, at: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::SketchFormat("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::SketchFormat(format!("unsupported version {version}")));
        }
        let n = r.u64()? as usize;
        let eps = r.f64()?;
        let m_cap = r.u64()? as usize;
        let seed = r.u64()?;
        let mode = match r.u8()? {
            0 => SketchMode::VertexSampling,
            1 => SketchMode::Naive,
            x => return Err(Error::SketchFormat(format!("unknown mode {x}"))),
        };
        let config = SketchConfig {
            c_phi: r.f64()?,
            c_naive: r.f64()?,
            c_cells: r.f64()?,
            min_width: r.u64()? as usize,
            sampler_levels: r.opt()?,
            levels: r.opt()?,
        };
        let rounds_c = r.f64()?;
        let min_round_vertices = r.f64()?;
        let sparsify = SparsifyConfig { seed, c_rounds: rounds_c, min_round_vertices, ..Default::default() };
        let mut sk = HypergraphSketch::new(n, eps, m_cap, mode, &sparsify, &config)
            .map_err(|e| Error::SketchFormat(e.to_string()))?;
        let nb = r.u32()?;
        for _ in 0..nb {
            let rr = r.u64()? as usize;
            let class = r.u64()? as i64 as i32;
            let dims = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
            if rr == 0 {
                return Err(Error::SketchFormat("zero bucket arity".into()));
            }
            let b = sk.bucket_mut((rr, class));
            if dims != (b.shape.levels, b.shape.rounds, b.shape.sampler_levels) {
                return Err(Error::SketchFormat("bucket dimensions disagree with header".into()));
            }
            for s in b.samplers.iter_mut().flatten() {
                let width = r.u32()? as usize;
                if width != s.levels[0].width {
                    return Err(Error::SketchFormat("sampler width disagrees with header".into()));
                }
                for t in s.levels.iter_mut() {
                    for c in 0..t.count.len() {
                        t.count[c] = r.u64()? as i64;
                        let lo = r.u64()? as u128;
                        let hi = r.u64()? as u128;
                        t.keysum[c] = lo | (hi << 64);
                        t.fpsum[c] = r.u64()?;
                    }
                }
            }
        }
        let m = r.u64()? as usize;
        for _ in 0..m {
            let id = r.u64()? as usize;
            let weight = r.f64()?;
            let k = r.u32()? as usize;
            let mut vs = Vec::with_capacity(k.min(1 << 16));
            for _ in 0..k {
                vs.push(r.u32()? as usize);
            }
            let e = Hyperedge::new(id, vs, weight);
            e.validate(n).map_err(|e| Error::SketchFormat(e.to_string()))?;
            if sk.directory.contains_key(&id) {
                return Err(Error::SketchFormat(format!("duplicate hyperedge id {id}")));
            }
            sk.track(&e);
            sk.directory.insert(id, e);
        }
        sk.next_id = sk.next_id.max(r.u64()? as usize);
        if sk.live.keys().ne(sk.buckets.keys()) {
            return Err(Error::SketchFormat("bucket list disagrees with directory".into()));
        }
        if r.at != bytes.len() {
            return Err(Error::SketchFormat("trailing bytes".into()));
        }
        Ok(sk)
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, x: u8) {
        self.0.push(x);
    }
    fn u32(&mut self, x: u32) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn f64(&mut self, x: f64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn opt(&mut self, x: Option<usize>) {
        self.u64(x.map_or(u64::MAX, |v| v as u64));
    }
}

struct Reader<'a> {
    b: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, k: usize) -> Result<&[u8]> {
        if self.at + k > self.b.len() {
            return Err(Error::SketchFormat("unexpected end of data".into()));
        }
        let s = &self.b[self.at..self.at + k];
        self.at += k;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn opt(&mut self) -> Result<Option<usize>> {
        let x = self.u64()?;
        Ok((x != u64::MAX).then_some(x as usize))
    }
}

/// Builds the vertex-sampling sketch of `h` with capacity for `h.len()`
/// insertions (or `m_cap` if larger).
pub fn sketch_construct(
    h: &Hypergraph,
    eps: f64,
    m_cap: usize,
    sparsify: &SparsifyConfig,
    config: &SketchConfig,
) -> Result<HypergraphSketch> {
    let mut sk = HypergraphSketch::new(h.n(), eps, m_cap.max(h.len()), SketchMode::VertexSampling, sparsify, config)?;
    for e in h.edges() {
        sk.insert(e.clone())?;
    }
    Ok(sk)
}

pub fn sketch_recover(sk: &HypergraphSketch) -> Result<SparsifierOutput> {
    Ok(sk.recover()?.0)
}

/// One sampler per level over the unprojected clique expansion.
pub fn naive_sketch(
    h: &Hypergraph,
    eps: f64,
    sparsify: &SparsifyConfig,
    config: &SketchConfig,
) -> Result<HypergraphSketch> {
    let mut sk = HypergraphSketch::new(h.n(), eps, h.len(), SketchMode::Naive, sparsify, config)?;
    for e in h.edges() {
        sk.insert(e.clone())?;
    }
    Ok(sk)
}
