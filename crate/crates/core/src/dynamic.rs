//! Fully dynamic maintenance: decremental instances built from
//! label-respecting spanner bundles, combined by a binary insertion counter.

use crate::config::{lg, SparsifyConfig};
use crate::error::{Error, Result};
use crate::hypergraph::{arity_base, weight_class, EdgeId, Hyperedge, VertexId};
use crate::io::{Stream, StreamOp};
use crate::output::SparsifierOutput;
use crate::plan::{plan_spanner_rounds, SamplingPlan};
use crate::rng::{hash_words, substream, tag};
use crate::spanner::Spanner;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

/// Label bits per ⌈log₂m⌉.
pub const LABEL_C: usize = 4;
const LABEL_ATTEMPTS: u64 = 16;

/// A change to the maintained sparsifier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Change {
    Add { id: EdgeId, weight: f64 },
    Del { id: EdgeId },
    Rew { id: EdgeId, weight: f64 },
}

impl Change {
    pub fn id(&self) -> EdgeId {
        match *self {
            Change::Add { id, .. } | Change::Del { id } | Change::Rew { id, .. } => id,
        }
    }
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Change::Add { id, weight } => write!(f, "ADD {id} {weight}"),
            Change::Del { id } => write!(f, "DEL {id}"),
            Change::Rew { id, weight } => write!(f, "REW {id} {weight}"),
        }
    }
}

/// Applies a change list to a mirror of the sparsifier (id → weight).
pub fn apply_changes(mirror: &mut BTreeMap<EdgeId, f64>, changes: &[Change]) {
    for c in changes {
        match *c {
            Change::Add { id, weight } | Change::Rew { id, weight } => {
                mirror.insert(id, weight);
            }
            Change::Del { id } => {
                mirror.remove(&id);
            }
        }
    }
}

/// Per-vertex round lists of a committed sampling plan.
pub type IntersectionTable = SamplingPlan;

/// e ∩ V^(i) for every round i that e meets.
pub fn intersections_for(e: &Hyperedge, tab: &IntersectionTable) -> Vec<(usize, Vec<VertexId>)> {
    tab.intersections(&e.vertices)
}

/// Short random labels, unique among live hyperedges.
#[derive(Clone, Debug)]
pub struct LabelDirectory {
    bits: u32,
    by_label: HashMap<u64, EdgeId>,
    by_id: HashMap<EdgeId, u64>,
    pub collisions: usize,
}

impl LabelDirectory {
    pub fn new(m_cap: usize) -> Self {
        LabelDirectory {
            bits: (LABEL_C * lg(m_cap)).min(64) as u32,
            by_label: HashMap::new(),
            by_id: HashMap::new(),
            collisions: 0,
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Draws a label for `id`, redrawing on collision with a live label.
    pub fn assign(&mut self, seed: u64, id: EdgeId) -> Result<u64> {
        if let Some(&x) = self.by_id.get(&id) {
            return Ok(x);
        }
        let mask = if self.bits >= 64 { u64::MAX } else { (1u64 << self.bits) - 1 };
        for attempt in 0..LABEL_ATTEMPTS {
            let x = hash_words(seed, &[tag::LABEL, id as u64, attempt]) & mask;
            if let std::collections::hash_map::Entry::Vacant(e) = self.by_label.entry(x) {
                e.insert(id);
                self.by_id.insert(id, x);
                return Ok(x);
            }
            self.collisions += 1;
        }
        Err(Error::LabelCollision(id))
    }

    pub fn release(&mut self, id: EdgeId) {
        if let Some(x) = self.by_id.remove(&id) {
            self.by_label.remove(&x);
        }
    }

    pub fn label(&self, id: EdgeId) -> Option<u64> {
        self.by_id.get(&id).copied()
    }

    pub fn id(&self, label: u64) -> Option<EdgeId> {
        self.by_label.get(&label).copied()
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}

/// Level coin committed by the edge's label.
pub fn label_coin(label: u64, level: usize) -> bool {
    hash_words(label, &[tag::COIN, level as u64]) & 1 == 1
}

type LabelKey = (u64, EdgeId);

/// Bookkeeping for one vertex pair of a bundle.
#[derive(Clone, Debug, Default)]
pub struct EdgeSlotEntry {
    /// Labels of all current copies; the first `t()` of them are in use.
    pub labels: BTreeSet<LabelKey>,
    /// Spanners holding a copy.
    pub index: BTreeSet<u32>,
    exhausted: bool,
}

impl EdgeSlotEntry {
    pub fn w(&self) -> usize {
        self.labels.len()
    }

    pub fn t(&self) -> usize {
        self.index.len()
    }

    pub fn f(&self) -> Option<u32> {
        self.index.last().copied()
    }

    pub fn in_use(&self) -> impl Iterator<Item = &LabelKey> {
        self.labels.iter().take(self.t())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecrementalStats {
    pub touched_slots: u64,
    pub spanner_removals: u64,
    pub reoffers_accepted: u64,
    /// Most spanner modifications caused by one multi-edge deletion.
    pub max_cascade: usize,
}

/// ℓ spanners over a round's vertex set whose in-use copies are always the
/// smallest labels of each slot.
#[derive(Clone, Debug)]
pub struct DecrementalBundle {
    n: usize,
    t: usize,
    ell: usize,
    spanners: Vec<Spanner>,
    slots: BTreeMap<(u32, u32), EdgeSlotEntry>,
    /// Slots with an unused copy.
    residual: BTreeSet<(u32, u32)>,
}

impl DecrementalBundle {
    pub fn new(n: usize, t: usize, ell: usize) -> Self {
        DecrementalBundle {
            n,
            t,
            ell: ell.max(1),
            spanners: Vec::new(),
            slots: BTreeMap::new(),
            residual: BTreeSet::new(),
        }
    }

    pub fn slots(&self) -> &BTreeMap<(u32, u32), EdgeSlotEntry> {
        &self.slots
    }

    pub fn spanners(&self) -> &[Spanner] {
        &self.spanners
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    fn refresh_residual(&mut self, key: (u32, u32)) {
        match self.slots.get(&key) {
            Some(s) if s.w() > s.t() => {
                self.residual.insert(key);
            }
            _ => {
                self.residual.remove(&key);
            }
        }
    }

    /// Build-time offer: the copy goes to the first spanner past the slot's
    /// highest index that accepts it.
    fn add_copy(&mut self, a: u32, b: u32, label: LabelKey) {
        let key = (a.min(b), a.max(b));
        let s = self.slots.entry(key).or_default();
        s.labels.insert(label);
        if !s.exhausted {
            let start = s.f().map_or(0, |f| f as usize + 1);
            let mut placed = None;
            for k in start..self.ell {
                if k == self.spanners.len() {
                    self.spanners.push(Spanner::new(self.n, self.t));
                }
                if self.spanners[k].try_insert(key.0 as usize, key.1 as usize) {
                    placed = Some(k as u32);
                    break;
                }
            }
            let s = self.slots.get_mut(&key).unwrap();
            match placed {
                Some(k) => {
                    s.index.insert(k);
                }
                None => s.exhausted = true,
            }
        }
        self.refresh_residual(key);
    }

    fn finish_build(&mut self) {
        for s in self.slots.values_mut() {
            s.exhausted = false;
        }
    }

    /// Removes one copy. Returns whether that copy was in use and the labels
    /// that became in use as a result.
    fn remove_copy(&mut self, a: u32, b: u32, label: LabelKey, stats: &mut DecrementalStats) -> (bool, Vec<LabelKey>) {
        let key = (a.min(b), a.max(b));
        stats.touched_slots += 1;
        let s = self.slots.get_mut(&key).expect("copy of a live slot");
        let was_in_use = s.in_use().any(|&l| l == label);
        let removed = s.labels.remove(&label);
        debug_assert!(removed);
        let mut gained = Vec::new();
        if was_in_use {
            let t = s.t();
            if s.w() >= t {
                gained.push(*s.labels.iter().nth(t - 1).unwrap());
            } else {
                let f = s.index.pop_last().unwrap();
                self.spanners[f as usize].remove(key.0 as usize, key.1 as usize);
                stats.spanner_removals += 1;
                let mut steps = 1;
                if let Some(l) = self.reoffer(f, key, stats) {
                    gained.push(l);
                    steps += 1;
                }
                stats.max_cascade = stats.max_cascade.max(steps);
            }
        }
        if self.slots[&key].labels.is_empty() {
            debug_assert!(self.slots[&key].index.is_empty());
            self.slots.remove(&key);
        }
        self.refresh_residual(key);
        (was_in_use, gained)
    }

    /// Offers spanner `f` the residual copies in slot order, skipping `freed`,
    /// and stops at the first acceptance.
    fn reoffer(&mut self, f: u32, freed: (u32, u32), stats: &mut DecrementalStats) -> Option<LabelKey> {
        let candidates: Vec<(u32, u32)> = self.residual.iter().copied().filter(|&k| k != freed).collect();
        for key in candidates {
            stats.touched_slots += 1;
            if self.slots[&key].index.contains(&f) {
                continue;
            }
            if self.spanners[f as usize].try_insert(key.0 as usize, key.1 as usize) {
                stats.reoffers_accepted += 1;
                let s = self.slots.get_mut(&key).unwrap();
                s.index.insert(f);
                let l = *s.labels.iter().nth(s.t() - 1).unwrap();
                self.refresh_residual(key);
                return Some(l);
            }
        }
        None
    }

    fn audit(&self) -> std::result::Result<(), String> {
        let mut per_spanner = vec![0usize; self.spanners.len()];
        for (&(a, b), s) in &self.slots {
            if s.t() > s.w() || s.w() == 0 {
                return Err(format!("slot ({a},{b}): t = {} w = {}", s.t(), s.w()));
            }
            if (s.w() > s.t()) != self.residual.contains(&(a, b)) {
                return Err(format!("slot ({a},{b}): residual set out of date"));
            }
            for &k in &s.index {
                let k = k as usize;
                if k >= self.spanners.len() || !self.spanners[k].contains(a as usize, b as usize) {
                    return Err(format!("slot ({a},{b}) claims spanner {k}"));
                }
                per_spanner[k] += 1;
            }
        }
        for (k, sp) in self.spanners.iter().enumerate() {
            if sp.len() != per_spanner[k] {
                return Err(format!("spanner {k} holds {} edges, slots claim {}", sp.len(), per_spanner[k]));
            }
        }
        if self.residual.iter().any(|k| !self.slots.contains_key(k)) {
            return Err("residual entry without a slot".into());
        }
        Ok(())
    }
}

struct DLevel {
    plan: SamplingPlan,
    round_vertices: Vec<Vec<VertexId>>,
    bundles: Vec<Option<DecrementalBundle>>,
    present: HashSet<EdgeId>,
    /// In-use copies per edge at this level.
    held: HashMap<EdgeId, u32>,
}

impl DLevel {
    /// (round, local vertex pairs) of every projected copy of `e`.
    fn copies(&self, e: &Hyperedge) -> Vec<(usize, Vec<(u32, u32)>)> {
        let mut out = Vec::new();
        for (j, vs) in self.plan.intersections(&e.vertices) {
            if vs.len() < 2 {
                continue;
            }
            let rv = &self.round_vertices[j];
            let local: Vec<u32> = vs.iter().map(|v| rv.binary_search(v).expect("sampled vertex") as u32).collect();
            let mut pairs = Vec::with_capacity(local.len() * (local.len() - 1) / 2);
            for a in 0..local.len() {
                for b in a + 1..local.len() {
                    pairs.push((local[a], local[b]));
                }
            }
            out.push((j, pairs));
        }
        out
    }
}

/// Hyperedges kept at weight 2^i·w where i is the lowest level at which a
/// copy is in use. Supports deletions only.
pub struct DecrementalInstance {
    levels: Vec<DLevel>,
    edges: BTreeMap<EdgeId, (Hyperedge, u64)>,
    recovered: BTreeMap<EdgeId, usize>,
    pub stats: DecrementalStats,
}

impl DecrementalInstance {
    /// Offers every multi-edge level by level in id order. Edges in use at
    /// level i are recovered there; the rest continue on their label coin.
    pub fn init(
        edges: Vec<(Hyperedge, u64)>,
        n: usize,
        r: usize,
        eps: f64,
        m_hint: usize,
        config: &SparsifyConfig,
        seed: u64,
    ) -> Self {
        let mut inst = DecrementalInstance {
            levels: Vec::new(),
            edges: edges.into_iter().map(|(e, x)| (e.id, (e, x))).collect(),
            recovered: BTreeMap::new(),
            stats: DecrementalStats::default(),
        };
        let mut present: Vec<EdgeId> = inst.edges.keys().copied().collect();
        for i in 0..config.levels(m_hint) {
            if present.is_empty() {
                break;
            }
            let plan = plan_spanner_rounds(n, r, m_hint, config, &mut substream(seed, &[tag::PLAN, i as u64]));
            let round_vertices = plan.all_round_vertices();
            let mut lvl = DLevel {
                bundles: vec![None; plan.rounds],
                plan,
                round_vertices,
                present: present.iter().copied().collect(),
                held: HashMap::new(),
            };
            for &id in &present {
                let (e, x) = &inst.edges[&id];
                for (j, pairs) in lvl.copies(e) {
                    let size = lvl.round_vertices[j].len();
                    let bundle = lvl.bundles[j].get_or_insert_with(|| {
                        let t = config.stretch_for(size);
                        DecrementalBundle::new(size, t, config.bundle_size(t, eps, n, m_hint))
                    });
                    for (a, b) in pairs {
                        inst.stats.touched_slots += 1;
                        bundle.add_copy(a, b, (*x, id));
                    }
                }
            }
            for b in lvl.bundles.iter_mut().flatten() {
                b.finish_build();
                for s in b.slots.values() {
                    for &(_, id) in s.in_use() {
                        *lvl.held.entry(id).or_default() += 1;
                    }
                }
            }
            let mut next = Vec::new();
            for &id in &present {
                if lvl.held.contains_key(&id) {
                    inst.recovered.insert(id, i);
                } else if label_coin(inst.edges[&id].1, i) {
                    next.push(id);
                }
            }
            inst.levels.push(lvl);
            present = next;
        }
        inst
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, id: EdgeId) -> bool {
        self.edges.contains_key(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    /// (id, level, weight) of every recovered edge, by id.
    pub fn kept(&self) -> Vec<(EdgeId, usize, f64)> {
        self.recovered
            .iter()
            .map(|(&id, &l)| (id, l, self.edges[&id].0.weight * 2f64.powi(l as i32)))
            .collect()
    }

    pub fn recovered_level(&self, id: EdgeId) -> Option<usize> {
        self.recovered.get(&id).copied()
    }

    fn remove_at(&mut self, lvl: usize, e: &Hyperedge, x: u64, gained: &mut BTreeSet<EdgeId>) {
        let level = &mut self.levels[lvl];
        let copies = level.copies(e);
        for (j, pairs) in copies {
            let bundle = level.bundles[j].as_mut().expect("bundle of an offered copy");
            for (a, b) in pairs {
                let (lost, new) = bundle.remove_copy(a, b, (x, e.id), &mut self.stats);
                if lost {
                    let h = level.held.get_mut(&e.id).expect("held copy");
                    *h -= 1;
                    if *h == 0 {
                        level.held.remove(&e.id);
                    }
                }
                for (_, g) in new {
                    *level.held.entry(g).or_default() += 1;
                    gained.insert(g);
                }
            }
        }
        debug_assert!(!level.held.contains_key(&e.id));
    }

    /// Removes a hyperedge and returns the resulting sparsifier changes.
    pub fn delete(&mut self, id: EdgeId) -> Result<Vec<Change>> {
        let (deleted, _) = self.edges.get(&id).cloned().ok_or(Error::UnknownEdge(id))?;
        let mut changes = Vec::new();
        if self.recovered.remove(&id).is_some() {
            changes.push(Change::Del { id });
        }
        let mut to_remove: BTreeSet<EdgeId> = BTreeSet::from([id]);
        for lvl in 0..self.levels.len() {
            if to_remove.is_empty() {
                break;
            }
            let mut next = BTreeSet::new();
            let mut gained = BTreeSet::new();
            for &x in &to_remove {
                if self.levels[lvl].present.remove(&x) {
                    let (e, label) = self.edges[&x].clone();
                    self.remove_at(lvl, &e, label, &mut gained);
                    next.insert(x);
                }
            }
            for g in gained {
                let level = &self.levels[lvl];
                if !level.present.contains(&g) || !level.held.contains_key(&g) {
                    continue;
                }
                let w = self.edges[&g].0.weight * 2f64.powi(lvl as i32);
                match self.recovered.get(&g).copied() {
                    Some(l) if l <= lvl => continue,
                    Some(_) => changes.push(Change::Rew { id: g, weight: w }),
                    None => changes.push(Change::Add { id: g, weight: w }),
                }
                self.recovered.insert(g, lvl);
                next.insert(g);
            }
            to_remove = next;
        }
        self.edges.remove(&deleted.id);
        Ok(changes)
    }

    /// Full structural check of every slot, spanner and level.
    pub fn audit(&self) -> std::result::Result<(), String> {
        for (i, lvl) in self.levels.iter().enumerate() {
            let mut held: HashMap<EdgeId, u32> = HashMap::new();
            for b in lvl.bundles.iter().flatten() {
                b.audit().map_err(|s| format!("level {i}: {s}"))?;
                for s in b.slots.values() {
                    for &(x, id) in &s.labels {
                        if !lvl.present.contains(&id) {
                            return Err(format!("level {i}: copy of absent edge {id}"));
                        }
                        if self.edges.get(&id).map(|p| p.1) != Some(x) {
                            return Err(format!("level {i}: stale label on edge {id}"));
                        }
                    }
                    for &(_, id) in s.in_use() {
                        *held.entry(id).or_default() += 1;
                    }
                }
            }
            if held != lvl.held {
                return Err(format!("level {i}: held counts out of date"));
            }
            for &id in &lvl.present {
                let rec = self.recovered.get(&id).copied();
                let here = held.contains_key(&id);
                if here != (rec == Some(i)) {
                    return Err(format!("level {i}: edge {id} held = {here}, recovered at {rec:?}"));
                }
                if rec.is_some_and(|l| l < i) {
                    return Err(format!("level {i}: edge {id} recovered at {rec:?} is still present"));
                }
            }
        }
        Ok(())
    }

    /// No slot, spanner edge, or held count remains.
    pub fn is_torn_down(&self) -> bool {
        self.edges.is_empty()
            && self.recovered.is_empty()
            && self.levels.iter().all(|l| {
                l.present.is_empty()
                    && l.held.is_empty()
                    && l.bundles
                        .iter()
                        .flatten()
                        .all(|b| b.slots.is_empty() && b.residual.is_empty() && b.spanners.iter().all(|s| s.is_empty()))
            })
    }
}

pub fn decremental_init(
    h: &crate::hypergraph::Hypergraph,
    r: usize,
    eps: f64,
    config: &SparsifyConfig,
    seed: u64,
) -> Result<DecrementalInstance> {
    let m = h.len().max(1);
    let mut labels = LabelDirectory::new(m);
    let mut edges = Vec::with_capacity(h.len());
    for e in h.edges() {
        edges.push((e.clone(), labels.assign(seed, e.id)?));
    }
    Ok(DecrementalInstance::init(edges, h.n(), r, eps, m, config, seed))
}

pub fn decremental_delete(inst: &mut DecrementalInstance, id: EdgeId) -> Result<Vec<Change>> {
    inst.delete(id)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DynamicStats {
    pub updates: u64,
    pub touched_slots: u64,
    pub max_cascade: usize,
    /// (insertion count, instance index) of every rebuild.
    pub rebuild_log: Vec<(u64, usize)>,
}

/// Binary-counter reduction for one arity range: instance A_j (j ≥ 1) holds
/// at most 2^(j−1) edges and is rebuilt every 2^j insertions.
pub struct DynamicState {
    n: usize,
    r: usize,
    eps: f64,
    m_cap: usize,
    config: SparsifyConfig,
    seed: u64,
    labels: LabelDirectory,
    instances: Vec<Option<DecrementalInstance>>,
    owner: HashMap<EdgeId, usize>,
    counter: u64,
    rebuilds: Vec<u64>,
    pub stats: DynamicStats,
}

impl DynamicState {
    pub fn new(n: usize, r: usize, eps: f64, m_cap: usize, config: &SparsifyConfig, seed: u64) -> Self {
        let m_cap = m_cap.max(1);
        let k = lg(m_cap) + 1;
        DynamicState {
            n,
            r: r.max(1),
            eps,
            m_cap,
            config: config.clone(),
            seed,
            labels: LabelDirectory::new(m_cap),
            instances: (0..k).map(|_| None).collect(),
            owner: HashMap::new(),
            counter: 0,
            rebuilds: vec![0; k],
            stats: DynamicStats::default(),
        }
    }

    pub fn insertions(&self) -> u64 {
        self.counter
    }

    pub fn labels(&self) -> &LabelDirectory {
        &self.labels
    }

    /// |E_j| for j = 1, 2, ...
    pub fn instance_sizes(&self) -> Vec<usize> {
        self.instances.iter().map(|a| a.as_ref().map_or(0, |a| a.len())).collect()
    }

    pub fn instance(&self, j: usize) -> Option<&DecrementalInstance> {
        self.instances.get(j.checked_sub(1)?)?.as_ref()
    }

    fn harvest(&mut self) {
        for a in self.instances.iter_mut().flatten() {
            self.stats.touched_slots += a.stats.touched_slots;
            self.stats.max_cascade = self.stats.max_cascade.max(a.stats.max_cascade);
            a.stats.touched_slots = 0;
        }
    }

    pub fn insert(&mut self, e: Hyperedge) -> Result<Vec<Change>> {
        e.validate(self.n)?;
        let k = e.arity();
        if k < self.r || k >= 2 * self.r {
            return Err(Error::ArityOutOfRange { arity: k, lo: self.r, hi: 2 * self.r - 1 });
        }
        if self.counter as usize >= self.m_cap {
            return Err(Error::CapacityExceeded(self.m_cap));
        }
        if self.owner.contains_key(&e.id) {
            return Err(Error::DuplicateId(e.id));
        }
        let label = self.labels.assign(self.seed, e.id)?;
        self.counter += 1;
        self.stats.updates += 1;
        let j = self.counter.trailing_zeros() as usize + 1;
        let mut old: BTreeMap<EdgeId, f64> = BTreeMap::new();
        self.owner.insert(e.id, j);
        let mut merged = vec![(e, label)];
        for slot in self.instances.iter_mut().take(j) {
            if let Some(a) = slot.take() {
                old.extend(a.kept().into_iter().map(|(id, _, w)| (id, w)));
                self.stats.touched_slots += a.stats.touched_slots;
                for (id, (edge, x)) in a.edges {
                    merged.push((edge, x));
                    self.owner.insert(id, j);
                }
            }
        }
        merged.sort_by_key(|p| p.0.id);
        let seed = hash_words(self.seed, &[tag::REBUILD, j as u64, self.rebuilds[j - 1]]);
        self.rebuilds[j - 1] += 1;
        self.stats.rebuild_log.push((self.counter, j));
        let a = DecrementalInstance::init(merged, self.n, self.r, self.eps, self.m_cap, &self.config, seed);
        let new: BTreeMap<EdgeId, f64> = a.kept().into_iter().map(|(id, _, w)| (id, w)).collect();
        self.instances[j - 1] = Some(a);
        self.harvest();
        Ok(diff(&old, &new))
    }

    pub fn delete(&mut self, id: EdgeId) -> Result<Vec<Change>> {
        let j = *self.owner.get(&id).ok_or(Error::UnknownEdge(id))?;
        let a = self.instances[j - 1].as_mut().expect("owning instance");
        let changes = a.delete(id)?;
        self.owner.remove(&id);
        self.labels.release(id);
        self.stats.updates += 1;
        self.harvest();
        Ok(changes)
    }

    pub fn kept(&self) -> Vec<(EdgeId, usize, f64)> {
        let mut out: Vec<_> = self.instances.iter().flatten().flat_map(|a| a.kept()).collect();
        out.sort_unstable_by_key(|k| k.0);
        out
    }

    pub fn audit(&self) -> std::result::Result<(), String> {
        let mut seen = 0;
        for (i, a) in self.instances.iter().enumerate() {
            if let Some(a) = a {
                if a.len() > 1 << i {
                    return Err(format!("|E_{}| = {} exceeds 2^{}", i + 1, a.len(), i));
                }
                for id in a.ids() {
                    if self.owner.get(&id) != Some(&(i + 1)) {
                        return Err(format!("edge {id} not owned by instance {}", i + 1));
                    }
                }
                seen += a.len();
                a.audit().map_err(|s| format!("instance {}: {s}", i + 1))?;
            }
        }
        if seen != self.owner.len() {
            return Err(format!("{} owned edges, {seen} in instances", self.owner.len()));
        }
        Ok(())
    }
}

fn diff(old: &BTreeMap<EdgeId, f64>, new: &BTreeMap<EdgeId, f64>) -> Vec<Change> {
    let mut out = Vec::new();
    for (&id, &w) in old {
        match new.get(&id) {
            None => out.push(Change::Del { id }),
            Some(&v) if v != w => out.push(Change::Rew { id, weight: v }),
            _ => {}
        }
    }
    for (&id, &w) in new {
        if !old.contains_key(&id) {
            out.push(Change::Add { id, weight: w });
        }
    }
    out.sort_by_key(|c| c.id());
    out
}

/// Routes updates to one [`DynamicState`] per arity range and weight class.
/// Inserted edges get sequential ids.
pub struct DynamicSparsifier {
    n: usize,
    eps: f64,
    m_cap: usize,
    config: SparsifyConfig,
    next_id: EdgeId,
    buckets: BTreeMap<(usize, i32), DynamicState>,
    bucket_of: HashMap<EdgeId, (usize, i32)>,
}

impl DynamicSparsifier {
    pub fn new(n: usize, eps: f64, m_cap: usize, config: &SparsifyConfig) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Infeasible(format!("eps = {eps} not in (0,1)")));
        }
        Ok(DynamicSparsifier {
            n,
            eps,
            m_cap: m_cap.max(1),
            config: config.clone(),
            next_id: 0,
            buckets: BTreeMap::new(),
            bucket_of: HashMap::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn next_id(&self) -> EdgeId {
        self.next_id
    }

    pub fn buckets(&self) -> impl Iterator<Item = (&(usize, i32), &DynamicState)> {
        self.buckets.iter()
    }

    pub fn insert(&mut self, mut vertices: Vec<VertexId>, weight: f64) -> Result<(EdgeId, Vec<Change>)> {
        vertices.sort_unstable();
        let e = Hyperedge::new(self.next_id, vertices, weight);
        e.validate(self.n)?;
        let key = (arity_base(e.arity()), weight_class(e.weight));
        let (n, eps, m) = (self.n, self.eps, self.m_cap);
        let config = &self.config;
        let state = self.buckets.entry(key).or_insert_with(|| {
            let seed = hash_words(config.seed, &[tag::BUCKET, key.0 as u64, key.1 as i64 as u64]);
            DynamicState::new(n, key.0, eps, m, config, seed)
        });
        let id = e.id;
        let changes = state.insert(e)?;
        self.bucket_of.insert(id, key);
        self.next_id += 1;
        Ok((id, changes))
    }

    pub fn delete(&mut self, id: EdgeId) -> Result<Vec<Change>> {
        let key = self.bucket_of.remove(&id).ok_or(Error::UnknownEdge(id))?;
        self.buckets.get_mut(&key).expect("bucket of a live edge").delete(id)
    }

    pub fn apply(&mut self, op: &StreamOp) -> Result<Vec<Change>> {
        match op {
            StreamOp::Insert { weight, vertices } => Ok(self.insert(vertices.clone(), *weight)?.1),
            StreamOp::Delete(id) => self.delete(*id),
        }
    }

    /// Applies every op and returns the concatenated change lists.
    pub fn run(&mut self, stream: &Stream) -> Result<Vec<Change>> {
        let mut out = Vec::new();
        for op in &stream.ops {
            out.extend(self.apply(op)?);
        }
        Ok(out)
    }

    pub fn current(&self) -> SparsifierOutput {
        let mut out = SparsifierOutput::default();
        for s in self.buckets.values() {
            for (id, level, w) in s.kept() {
                out.kept.push(crate::output::KeptEdge { id, level, weight: w });
                out.levels = out.levels.max(level + 1);
            }
        }
        out.sort();
        out
    }

    pub fn touched_slots(&self) -> u64 {
        self.buckets.values().map(|s| s.stats.touched_slots).sum()
    }

    pub fn updates(&self) -> u64 {
        self.buckets.values().map(|s| s.stats.updates).sum()
    }

    pub fn max_cascade(&self) -> usize {
        self.buckets.values().map(|s| s.stats.max_cascade).max().unwrap_or(0)
    }

    pub fn audit(&self) -> std::result::Result<(), String> {
        for (k, s) in &self.buckets {
            s.audit().map_err(|e| format!("bucket {k:?}: {e}"))?;
        }
        Ok(())
    }
}

pub fn dynamic_update(state: &mut DynamicSparsifier, op: &StreamOp) -> Result<Vec<Change>> {
    state.apply(op)
}
