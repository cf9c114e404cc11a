//! Greedy girth-bounded spanners and disjoint bundles of them.

use crate::hypergraph::EdgeId;
use std::collections::HashMap;

/// Simple graph that never admits an edge whose endpoints are already within
/// distance `t`, so every cycle has length > t + 1.
#[derive(Clone, Debug)]
pub struct Spanner {
    t: usize,
    adj: Vec<Vec<u32>>,
    edges: usize,
    stamp: Vec<u32>,
    epoch: u32,
    queue: Vec<u32>,
}

impl Spanner {
    pub fn new(n: usize, t: usize) -> Self {
        Spanner {
            t,
            adj: vec![Vec::new(); n],
            edges: 0,
            stamp: vec![0; n],
            epoch: 0,
            queue: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges == 0
    }

    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.adj[u]
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&(v as u32))
    }

    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edges);
        for (u, nb) in self.adj.iter().enumerate() {
            for &v in nb {
                if u < v as usize {
                    out.push((u, v as usize));
                }
            }
        }
        out
    }

    /// True iff v is reachable from u within `depth` hops.
    pub fn within(&mut self, u: usize, v: usize, depth: usize) -> bool {
        if u == v {
            return true;
        }
        if depth == 0 || self.adj[u].is_empty() || self.adj[v].is_empty() {
            return false;
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let ep = self.epoch;
        self.queue.clear();
        self.queue.push(u as u32);
        self.stamp[u] = ep;
        let mut head = 0;
        for _ in 0..depth {
            let end = self.queue.len();
            if head == end {
                return false;
            }
            while head < end {
                let x = self.queue[head] as usize;
                head += 1;
                for &y in &self.adj[x] {
                    if y as usize == v {
                        return true;
                    }
                    if self.stamp[y as usize] != ep {
                        self.stamp[y as usize] = ep;
                        self.queue.push(y);
                    }
                }
            }
        }
        false
    }

    /// Adds (u, v) unless a path of length ≤ t already joins them.
    pub fn try_insert(&mut self, u: usize, v: usize) -> bool {
        assert!(u != v, "self-loop offered to spanner");
        if self.within(u, v, self.t) {
            return false;
        }
        self.insert_unchecked(u, v);
        true
    }

    pub fn insert_unchecked(&mut self, u: usize, v: usize) {
        self.adj[u].push(v as u32);
        self.adj[v].push(u as u32);
        self.edges += 1;
    }

    pub fn remove(&mut self, u: usize, v: usize) -> bool {
        let pu = self.adj[u].iter().position(|&x| x as usize == v);
        let Some(pu) = pu else { return false };
        self.adj[u].swap_remove(pu);
        let pv = self.adj[v].iter().position(|&x| x as usize == u).expect("symmetric adjacency");
        self.adj[v].swap_remove(pv);
        self.edges -= 1;
        true
    }

    /// Length of the shortest cycle through some edge, if ≤ `limit`.
    pub fn short_cycle(&mut self, limit: usize) -> Option<usize> {
        for (u, v) in self.edge_list() {
            self.remove(u, v);
            let mut found = None;
            for d in 1..limit {
                if self.within(u, v, d) {
                    found = Some(d + 1);
                    break;
                }
            }
            self.insert_unchecked(u, v);
            if found.is_some() {
                return found;
            }
        }
        None
    }
}

pub fn spanner_try_insert(t: &mut Spanner, u: usize, v: usize) -> bool {
    t.try_insert(u, v)
}

#[derive(Clone, Debug, Default)]
struct SlotState {
    /// (spanner index, label) of the copies held, in insertion order.
    held: Vec<(u32, EdgeId)>,
    /// A copy was rejected by every spanner; later copies will be too.
    exhausted: bool,
}

/// ℓ edge-disjoint spanners filled greedily: an offered multi-edge lands in
/// the first spanner that accepts it. Insert-only.
#[derive(Clone, Debug)]
pub struct SpannerBundle {
    n: usize,
    t: usize,
    ell: usize,
    spanners: Vec<Spanner>,
    slots: HashMap<(u32, u32), SlotState>,
    held: usize,
}

impl SpannerBundle {
    pub fn new(n: usize, t: usize, ell: usize) -> Self {
        SpannerBundle { n, t, ell, spanners: Vec::new(), slots: HashMap::new(), held: 0 }
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Number of multi-edges held.
    pub fn len(&self) -> usize {
        self.held
    }

    pub fn is_empty(&self) -> bool {
        self.held == 0
    }

    pub fn spanners(&self) -> &[Spanner] {
        &self.spanners
    }

    pub fn spanners_mut(&mut self) -> &mut [Spanner] {
        &mut self.spanners
    }

    /// Spanner indices currently holding a copy of (u, v).
    pub fn occupancy(&self, u: usize, v: usize) -> Vec<usize> {
        let key = (u.min(v) as u32, u.max(v) as u32);
        self.slots
            .get(&key)
            .map(|s| s.held.iter().map(|&(i, _)| i as usize).collect())
            .unwrap_or_default()
    }

    /// Offers a copy of (u, v) to T_1, T_2, ... and returns the index of the
    /// spanner that kept it. Spanners at or below the highest index already
    /// holding this slot are skipped: they rejected (or hold) an earlier copy
    /// and, with insert-only spanners, still would.
    pub fn try_insert(&mut self, u: usize, v: usize, label: EdgeId) -> Option<usize> {
        assert!(u != v);
        let key = (u.min(v) as u32, u.max(v) as u32);
        let st = self.slots.entry(key).or_default();
        if st.exhausted {
            return None;
        }
        let start = st.held.iter().map(|&(i, _)| i as usize + 1).max().unwrap_or(0);
        for i in start..self.ell {
            if i == self.spanners.len() {
                self.spanners.push(Spanner::new(self.n, self.t));
            }
            if self.spanners[i].try_insert(u, v) {
                self.slots.get_mut(&key).unwrap().held.push((i as u32, label));
                self.held += 1;
                return Some(i);
            }
        }
        self.slots.get_mut(&key).unwrap().exhausted = true;
        None
    }

    /// Every held copy as (u, v, label, spanner index).
    pub fn contents(&self) -> Vec<(usize, usize, EdgeId, usize)> {
        let mut out: Vec<_> = self
            .slots
            .iter()
            .flat_map(|(&(u, v), s)| s.held.iter().map(move |&(i, l)| (u as usize, v as usize, l, i as usize)))
            .collect();
        out.sort_unstable();
        out
    }
}

pub fn bundle_try_insert(b: &mut SpannerBundle, u: usize, v: usize, label: EdgeId) -> Option<usize> {
    b.try_insert(u, v, label)
}
