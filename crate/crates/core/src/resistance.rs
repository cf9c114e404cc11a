//! Effective resistances on unit-weight multigraphs.

use crate::error::{Error, Result};
use crate::hypergraph::VertexId;
use crate::multigraph::MultiGraph;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResistanceOptions {
    /// Largest component handled by the dense pseudo-inverse.
    pub dense_limit: usize,
    /// Relative accuracy of the projection estimator.
    pub delta: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for ResistanceOptions {
    fn default() -> Self {
        ResistanceOptions {
            dense_limit: 4096,
            delta: 0.1,
            cg_tol: 1e-8,
            cg_max_iter: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResistanceReport {
    pub per_edge: Vec<f64>,
    /// Component index of each edge.
    pub edge_component: Vec<usize>,
    /// Connected components over all n vertices, isolated ones included.
    pub components: usize,
}

impl ResistanceReport {
    pub fn total(&self) -> f64 {
        crate::hypergraph::neumaier(self.per_edge.iter().copied())
    }
}

/// Union-find labelling of vertices by component (over all n vertices).
pub fn components(n: usize, g: &MultiGraph) -> (Vec<usize>, usize) {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in &g.edges {
        let a = find(&mut parent, e.u);
        let b = find(&mut parent, e.v);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    let mut comp = vec![0; n];
    for v in 0..n {
        let r = find(&mut parent, v);
        if label[r] == usize::MAX {
            label[r] = count;
            count += 1;
        }
        comp[v] = label[r];
    }
    (comp, count)
}

/// Dense per-component pseudo-inverse oracle.
pub struct ExactResistance {
    comp: Vec<usize>,
    local: Vec<usize>,
    /// For each component: (L + J/c)^-1, whose quadratic form agrees with L^+
    /// on vectors orthogonal to the all-ones vector.
    inv: Vec<Option<DMatrix<f64>>>,
    ncomp: usize,
}

impl ExactResistance {
    pub fn new(g: &MultiGraph, dense_limit: usize) -> Result<Self> {
        let (comp, ncomp) = components(g.n, g);
        let mut members: Vec<Vec<VertexId>> = vec![Vec::new(); ncomp];
        let mut local = vec![0; g.n];
        for v in 0..g.n {
            local[v] = members[comp[v]].len();
            members[comp[v]].push(v);
        }
        let mut cond: Vec<HashMap<(usize, usize), f64>> = vec![HashMap::new(); ncomp];
        for e in &g.edges {
            let c = comp[e.u];
            *cond[c].entry((local[e.u], local[e.v])).or_insert(0.0) += 1.0;
        }
        let mut inv = Vec::with_capacity(ncomp);
        for c in 0..ncomp {
            let size = members[c].len();
            if size < 2 {
                inv.push(None);
                continue;
            }
            if size > dense_limit {
                return Err(Error::Capacity { size, limit: dense_limit });
            }
            let j = 1.0 / size as f64;
            let mut m = DMatrix::from_element(size, size, j);
            for (&(a, b), &w) in &cond[c] {
                m[(a, a)] += w;
                m[(b, b)] += w;
                m[(a, b)] -= w;
                m[(b, a)] -= w;
            }
            let eig = SymmetricEigen::new(m);
            let mut scaled = eig.eigenvectors.clone();
            for (k, lam) in eig.eigenvalues.iter().enumerate() {
                let s = 1.0 / lam;
                for r in 0..size {
                    scaled[(r, k)] *= s;
                }
            }
            inv.push(Some(&scaled * eig.eigenvectors.transpose()));
        }
        Ok(ExactResistance { comp, local, inv, ncomp })
    }

    pub fn components(&self) -> usize {
        self.ncomp
    }

    /// Effective resistance; `f64::INFINITY` across components.
    pub fn resistance(&self, u: VertexId, v: VertexId) -> f64 {
        if u == v {
            return 0.0;
        }
        if self.comp[u] != self.comp[v] {
            return f64::INFINITY;
        }
        let m = self.inv[self.comp[u]].as_ref().expect("component with two vertices has a matrix");
        let (a, b) = (self.local[u], self.local[v]);
        (m[(a, a)] + m[(b, b)] - 2.0 * m[(a, b)]).max(0.0)
    }
}

pub fn effective_resistance_exact(
    g: &MultiGraph,
    pairs: &[(VertexId, VertexId)],
    dense_limit: usize,
) -> Result<Vec<f64>> {
    for &(u, v) in pairs {
        for x in [u, v] {
            if x >= g.n {
                return Err(Error::VertexOutOfRange { vertex: x, n: g.n });
            }
        }
    }
    let oracle = ExactResistance::new(g, dense_limit)?;
    Ok(pairs.iter().map(|&(u, v)| oracle.resistance(u, v)).collect())
}

pub fn effective_resistance_all_exact(g: &MultiGraph, dense_limit: usize) -> Result<ResistanceReport> {
    let oracle = ExactResistance::new(g, dense_limit)?;
    let mut cache: HashMap<(VertexId, VertexId), f64> = HashMap::new();
    let per_edge = g
        .edges
        .iter()
        .map(|e| *cache.entry(e.slot()).or_insert_with(|| oracle.resistance(e.u, e.v)))
        .collect();
    Ok(ResistanceReport {
        per_edge,
        edge_component: g.edges.iter().map(|e| oracle.comp[e.u]).collect(),
        components: oracle.ncomp,
    })
}

/// Compact weighted adjacency of the touched vertices.
struct Laplacian {
    index: Vec<usize>,
    adj: Vec<Vec<(usize, f64)>>,
    /// Component of each compact vertex, numbered 0..ncomp.
    comp: Vec<usize>,
    ncomp: usize,
}

impl Laplacian {
    fn new(g: &MultiGraph) -> Self {
        let mut index = vec![usize::MAX; g.n];
        let mut count = 0;
        for e in &g.edges {
            for x in [e.u, e.v] {
                if index[x] == usize::MAX {
                    index[x] = count;
                    count += 1;
                }
            }
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); count];
        for (slot, mult) in g.slots() {
            let (a, b) = (index[slot.0], index[slot.1]);
            adj[a].push((b, mult as f64));
            adj[b].push((a, mult as f64));
        }
        let mut comp = vec![usize::MAX; count];
        let mut ncomp = 0;
        for s in 0..count {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = ncomp;
            let mut stack = vec![s];
            while let Some(a) = stack.pop() {
                for &(b, _) in &adj[a] {
                    if comp[b] == usize::MAX {
                        comp[b] = ncomp;
                        stack.push(b);
                    }
                }
            }
            ncomp += 1;
        }
        Laplacian { index, adj, comp, ncomp }
    }

    /// Removes each component's mean, i.e. the null-space part of `x`.
    fn center(&self, x: &mut [f64]) {
        let mut sum = vec![0.0; self.ncomp];
        let mut cnt = vec![0usize; self.ncomp];
        for (a, &c) in self.comp.iter().enumerate() {
            sum[c] += x[a];
            cnt[c] += 1;
        }
        for (a, &c) in self.comp.iter().enumerate() {
            x[a] -= sum[c] / cnt[c] as f64;
        }
    }

    fn dim(&self) -> usize {
        self.adj.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (a, nb) in self.adj.iter().enumerate() {
            let mut s = 0.0;
            for &(b, w) in nb {
                s += w * (x[a] - x[b]);
            }
            out[a] = s;
        }
    }

    /// Conjugate gradient for L z = b with b orthogonal to every component's
    /// ones vector; iterates stay in the range of L.
    fn solve(&self, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
        let n = self.dim();
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let bnorm = dot(b, b).sqrt();
        let mut z = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok(z);
        }
        let mut r = b.to_vec();
        self.center(&mut r);
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = dot(&r, &r);
        for _ in 0..max_iter {
            if rr.sqrt() <= tol * bnorm {
                return Ok(z);
            }
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                // p has collapsed into the null space: r is at roundoff level
                break;
            }
            let alpha = rr / pap;
            for i in 0..n {
                z[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            self.center(&mut r);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        if rr.sqrt() <= tol * bnorm {
            Ok(z)
        } else {
            Err(Error::NoConvergence { iterations: max_iter, residual: rr.sqrt() / bnorm })
        }
    }
}

/// Number of random projections for accuracy `delta` on `n` vertices.
pub fn projection_dim(n: usize, delta: f64) -> usize {
    (24.0 * (n.max(2) as f64).ln() / (delta * delta)).ceil() as usize
}

/// Random-projection estimate of every edge's resistance:
/// R(u,v) ~ sum_i (z_i[u] - z_i[v])^2 with L z_i = B^T q_i and q_i a random
/// sign vector scaled by 1/sqrt(k).
pub fn effective_resistance_all_approx<R: Rng + ?Sized>(
    g: &MultiGraph,
    opts: &ResistanceOptions,
    rng: &mut R,
) -> Result<ResistanceReport> {
    if !(opts.delta > 0.0 && opts.delta < 1.0) {
        return Err(Error::Infeasible(format!("delta = {} not in (0,1)", opts.delta)));
    }
    let (comp, ncomp) = components(g.n, g);
    let lap = Laplacian::new(g);
    let dim = lap.dim();
    let k = projection_dim(dim, opts.delta);
    let scale = 1.0 / (k as f64).sqrt();
    let mut acc = vec![0.0; g.edges.len()];
    let mut b = vec![0.0; dim];
    for _ in 0..k {
        b.iter_mut().for_each(|x| *x = 0.0);
        for e in &g.edges {
            let q = if rng.random::<bool>() { scale } else { -scale };
            b[lap.index[e.u]] += q;
            b[lap.index[e.v]] -= q;
        }
        let z = lap.solve(&b, opts.cg_tol, opts.cg_max_iter)?;
        for (i, e) in g.edges.iter().enumerate() {
            let d = z[lap.index[e.u]] - z[lap.index[e.v]];
            acc[i] += d * d;
        }
    }
    Ok(ResistanceReport {
        per_edge: acc,
        edge_component: g.edges.iter().map(|e| comp[e.u]).collect(),
        components: ncomp,
    })
}

/// Keeps edge i with probability min(1, lambda * r[i]). Certain keeps draw no
/// randomness.
pub fn er_sample_with<R: Rng + ?Sized>(r: &[f64], lambda: f64, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::new();
    if lambda <= 0.0 {
        return out;
    }
    for (i, &ri) in r.iter().enumerate() {
        let p = lambda * ri;
        if p >= 1.0 || rng.random::<f64>() < p {
            out.push(i);
        }
    }
    out
}

/// Resistance sampling with the oracle chosen by size: exact when every
/// component fits the dense limit, otherwise the projection estimate with
/// lambda inflated by 1/(1 - delta).
pub fn er_sample<R: Rng + ?Sized>(
    g: &MultiGraph,
    lambda: f64,
    opts: &ResistanceOptions,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if lambda <= 0.0 || g.is_empty() {
        return Ok(Vec::new());
    }
    let (r, lam) = resistances_for_sampling(g, lambda, opts, rng)?;
    Ok(er_sample_with(&r, lam, rng))
}

pub fn resistances_for_sampling<R: Rng + ?Sized>(
    g: &MultiGraph,
    lambda: f64,
    opts: &ResistanceOptions,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    match effective_resistance_all_exact(g, opts.dense_limit) {
        Ok(rep) => Ok((rep.per_edge, lambda)),
        Err(Error::Capacity { .. }) => {
            let rep = effective_resistance_all_approx(g, opts, rng)?;
            Ok((rep.per_edge, lambda / (1.0 - opts.delta)))
        }
        Err(e) => Err(e),
    }
}
