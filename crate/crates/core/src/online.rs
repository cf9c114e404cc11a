//! Insert-only streams with irrevocable keep decisions.

use crate::config::SparsifyConfig;
use crate::error::{Error, Result};
use crate::hypergraph::{arity_base, weight_class, EdgeId, Hyperedge, VertexId};
use crate::io::{Stream, StreamOp};
use crate::output::SparsifierOutput;
use crate::plan::{plan_spanner_rounds, SamplingPlan};
use crate::rng::{hash_words, substream, tag};
use crate::spanner::SpannerBundle;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decision {
    Kept { id: EdgeId, weight: f64, level: usize },
    Dropped { id: EdgeId },
}

impl Decision {
    pub fn id(&self) -> EdgeId {
        match *self {
            Decision::Kept { id, .. } | Decision::Dropped { id } => id,
        }
    }

    pub fn is_kept(&self) -> bool {
        matches!(self, Decision::Kept { .. })
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Kept { id, weight, .. } => write!(f, "KEEP {id} {weight}"),
            Decision::Dropped { id } => write!(f, "DROP {id}"),
        }
    }
}

/// Per-edge level coin; heads sends an unaccepted edge one level deeper.
pub fn online_coin(seed: u64, id: EdgeId, level: usize) -> bool {
    hash_words(seed, &[tag::COIN, id as u64, level as u64]) & 1 == 1
}

struct Level {
    plan: SamplingPlan,
    /// Sorted vertex set of each round; bundles index vertices by position.
    round_vertices: Vec<Vec<VertexId>>,
    bundles: HashMap<usize, SpannerBundle>,
}

/// Online state for one arity range [r, 2r). Sampling plans are drawn per
/// level on first use from the seed alone, so the state at any time depends
/// only on the edges inserted so far.
pub struct OnlineState {
    n: usize,
    r: usize,
    eps: f64,
    m_hint: usize,
    config: SparsifyConfig,
    seed: u64,
    max_levels: usize,
    levels: Vec<Level>,
    kept: Vec<(EdgeId, usize, f64)>,
    /// (level, round, bundle index) of the accepting copy, per kept edge.
    placement: HashMap<EdgeId, (usize, usize, usize)>,
}

impl OnlineState {
    /// `m_hint` stands in for the stream length in the round, level and
    /// bundle-size formulas.
    pub fn new(n: usize, r: usize, eps: f64, m_hint: usize, config: &SparsifyConfig, seed: u64) -> Self {
        OnlineState {
            n,
            r: r.max(1),
            eps,
            m_hint: m_hint.max(1),
            config: config.clone(),
            seed,
            max_levels: config.levels(m_hint.max(1)),
            levels: Vec::new(),
            kept: Vec::new(),
            placement: HashMap::new(),
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    fn ensure_level(&mut self, i: usize) {
        while self.levels.len() <= i {
            let k = self.levels.len();
            let plan = plan_spanner_rounds(
                self.n,
                self.r,
                self.m_hint,
                &self.config,
                &mut substream(self.seed, &[tag::PLAN, k as u64]),
            );
            let round_vertices = plan.all_round_vertices();
            self.levels.push(Level { plan, round_vertices, bundles: HashMap::new() });
        }
    }

    /// Offers the level-i projections round by round; the first round in
    /// which some copy is accepted ends the search.
    fn offer(&mut self, e: &Hyperedge, i: usize) -> Option<(usize, usize)> {
        self.ensure_level(i);
        let (n, eps, m) = (self.n, self.eps, self.m_hint);
        let config = &self.config;
        let lvl = &mut self.levels[i];
        for (j, vs) in lvl.plan.intersections(&e.vertices) {
            if vs.len() < 2 {
                continue;
            }
            let rv = &lvl.round_vertices[j];
            let bundle = lvl.bundles.entry(j).or_insert_with(|| {
                let t = config.stretch_for(rv.len());
                SpannerBundle::new(rv.len(), t, config.bundle_size(t, eps, n, m))
            });
            let local: Vec<usize> = vs.iter().map(|v| rv.binary_search(v).expect("sampled vertex")).collect();
            let mut first = None;
            for a in 0..local.len() {
                for b in a + 1..local.len() {
                    if let Some(k) = bundle.try_insert(local[a], local[b], e.id) {
                        first.get_or_insert(k);
                    }
                }
            }
            if let Some(k) = first {
                return Some((j, k));
            }
        }
        None
    }

    pub fn insert(&mut self, e: &Hyperedge) -> Result<Decision> {
        e.validate(self.n)?;
        let k = e.arity();
        if k < self.r || k >= 2 * self.r {
            return Err(Error::ArityOutOfRange { arity: k, lo: self.r, hi: 2 * self.r - 1 });
        }
        for i in 0..self.max_levels {
            if k >= 2 {
                if let Some((j, b)) = self.offer(e, i) {
                    let weight = e.weight * 2f64.powi(i as i32);
                    self.kept.push((e.id, i, e.weight));
                    self.placement.insert(e.id, (i, j, b));
                    return Ok(Decision::Kept { id: e.id, weight, level: i });
                }
            }
            if !online_coin(self.seed, e.id, i) {
                break;
            }
        }
        Ok(Decision::Dropped { id: e.id })
    }

    /// (level, round, spanner index) that holds a kept edge.
    pub fn placement(&self, id: EdgeId) -> Option<(usize, usize, usize)> {
        self.placement.get(&id).copied()
    }

    /// Number of bundles allocated so far, over all levels.
    pub fn bundles_allocated(&self) -> usize {
        self.levels.iter().map(|l| l.bundles.len()).sum()
    }

    pub fn finalize(&self) -> SparsifierOutput {
        let mut out = SparsifierOutput::default();
        for &(id, level, w) in &self.kept {
            out.push(id, level, w);
            out.levels = out.levels.max(level + 1);
        }
        out.sort();
        out
    }
}

/// Routes arriving hyperedges to one [`OnlineState`] per arity range and
/// weight class, assigning sequential ids.
pub struct OnlineSparsifier {
    n: usize,
    eps: f64,
    m_hint: usize,
    config: SparsifyConfig,
    next_id: EdgeId,
    buckets: BTreeMap<(usize, i32), OnlineState>,
    log: Vec<Decision>,
}

impl OnlineSparsifier {
    pub fn new(n: usize, eps: f64, m_hint: usize, config: &SparsifyConfig) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Infeasible(format!("eps = {eps} not in (0,1)")));
        }
        Ok(OnlineSparsifier {
            n,
            eps,
            m_hint: m_hint.max(1),
            config: config.clone(),
            next_id: 0,
            buckets: BTreeMap::new(),
            log: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, vertices: Vec<VertexId>, weight: f64) -> Result<Decision> {
        let mut vertices = vertices;
        vertices.sort_unstable();
        let e = Hyperedge::new(self.next_id, vertices, weight);
        e.validate(self.n)?;
        let key = (arity_base(e.arity()), weight_class(e.weight));
        let (n, eps, m) = (self.n, self.eps, self.m_hint);
        let config = &self.config;
        let state = self.buckets.entry(key).or_insert_with(|| {
            let seed = hash_words(config.seed, &[tag::BUCKET, key.0 as u64, key.1 as i64 as u64]);
            OnlineState::new(n, key.0, eps, m, config, seed)
        });
        let d = state.insert(&e)?;
        self.next_id += 1;
        self.log.push(d);
        Ok(d)
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.log
    }

    pub fn kept_count(&self) -> usize {
        self.log.iter().filter(|d| d.is_kept()).count()
    }

    pub fn finalize(&self) -> SparsifierOutput {
        let mut out = SparsifierOutput::default();
        for s in self.buckets.values() {
            out.merge(s.finalize());
        }
        out
    }

    /// Feeds every op of `stream`; deletions are rejected.
    pub fn run(&mut self, stream: &Stream) -> Result<()> {
        for op in &stream.ops {
            match op {
                StreamOp::Insert { weight, vertices } => {
                    self.insert(vertices.clone(), *weight)?;
                }
                StreamOp::Delete(id) => return Err(Error::DeleteInOnline(*id)),
            }
        }
        Ok(())
    }
}

pub fn online_insert(state: &mut OnlineState, e: &Hyperedge) -> Result<Decision> {
    state.insert(e)
}

pub fn online_finalize(state: &OnlineState) -> SparsifierOutput {
    state.finalize()
}
