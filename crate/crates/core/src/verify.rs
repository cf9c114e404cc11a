//! Spectral verification batteries.

use crate::error::{Error, Result};
use crate::hypergraph::{cut_value_mask, neumaier, quadratic_form, Hypergraph};
use crate::rng::{substream, tag};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Largest n for which every cut is enumerated.
pub const EXHAUSTIVE_LIMIT: usize = 12;
pub const RANDOM_BINARY_VECTORS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub vectors: usize,
    pub max_rel_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub sparsifier_size: usize,
    pub eps: f64,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub max_rel_error: f64,
    /// Some vector had Q_H = 0 but a nonzero sparsifier energy.
    pub hard_fail: bool,
    pub pass: bool,
    pub wall_ms: u128,
}

struct Tracker {
    eps: f64,
    worst: f64,
    count: usize,
    hard: bool,
}

impl Tracker {
    fn new(eps: f64) -> Self {
        Tracker { eps, worst: 0.0, count: 0, hard: false }
    }

    fn see(&mut self, q: f64, qh: f64) {
        self.count += 1;
        if q == 0.0 {
            if qh != 0.0 {
                self.hard = true;
                self.worst = f64::INFINITY;
            }
            return;
        }
        self.worst = self.worst.max((qh / q - 1.0).abs());
    }

    fn finish(self, name: &str) -> (CheckResult, bool) {
        let pass = !self.hard && self.worst <= self.eps;
        (
            CheckResult { name: name.to_string(), vectors: self.count, max_rel_error: self.worst, pass },
            self.hard,
        )
    }
}

/// Compares Q_Ĥ against Q_H on Gaussian vectors, singleton cuts, random 0/1
/// vectors, and every cut when n ≤ 12. Vectors come from a verification-only
/// stream keyed by `seed`.
pub fn verify_spectral(h: &Hypergraph, sparse: &Hypergraph, eps: f64, trials: usize, seed: u64) -> Result<VerificationReport> {
    if h.n() != sparse.n() {
        return Err(Error::DimensionMismatch { expected: h.n(), got: sparse.n() });
    }
    let start = Instant::now();
    let n = h.n();
    let mut rng = substream(seed, &[tag::VERIFY]);
    let mut checks = Vec::new();
    let mut hard = false;

    let mut t = Tracker::new(eps);
    let mut x = vec![0.0; n];
    for _ in 0..trials {
        x.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        t.see(quadratic_form(h, &x)?, quadratic_form(sparse, &x)?);
    }
    let (c, hf) = t.finish("gaussian");
    checks.push(c);
    hard |= hf;

    let mut t = Tracker::new(eps);
    let qa = singleton_cuts(h);
    let qb = singleton_cuts(sparse);
    for v in 0..n {
        t.see(qa[v], qb[v]);
    }
    let (c, hf) = t.finish("singleton_cuts");
    checks.push(c);
    hard |= hf;

    let mut t = Tracker::new(eps);
    let mut side = vec![false; n];
    for _ in 0..RANDOM_BINARY_VECTORS {
        side.iter_mut().for_each(|s| *s = rng.random::<bool>());
        t.see(cut_value_mask(h, &side), cut_value_mask(sparse, &side));
    }
    let (c, hf) = t.finish("random_binary");
    checks.push(c);
    hard |= hf;

    if (2..=EXHAUSTIVE_LIMIT).contains(&n) {
        let mut t = Tracker::new(eps);
        for mask in 1u32..(1u32 << n) - 1 {
            for (v, s) in side.iter_mut().enumerate() {
                *s = mask >> v & 1 == 1;
            }
            t.see(cut_value_mask(h, &side), cut_value_mask(sparse, &side));
        }
        let (c, hf) = t.finish("all_cuts");
        checks.push(c);
        hard |= hf;
    }

    let max_rel_error = checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    Ok(VerificationReport {
        instance: String::new(),
        n,
        m: h.len(),
        sparsifier_size: sparse.len(),
        eps,
        seed,
        pass: !hard && checks.iter().all(|c| c.pass),
        checks,
        max_rel_error,
        hard_fail: hard,
        wall_ms: start.elapsed().as_millis(),
    })
}

/// Weighted degree cut of every singleton {v}.
pub fn singleton_cuts(h: &Hypergraph) -> Vec<f64> {
    let mut parts: Vec<Vec<f64>> = vec![Vec::new(); h.n()];
    for e in h.edges() {
        if e.arity() >= 2 {
            for &v in &e.vertices {
                parts[v].push(e.weight);
            }
        }
    }
    parts.into_iter().map(neumaier).collect()
}

/// Σ_e w_e · max over pairs in e of Σ_i (x_i[u] − x_i[v])².
pub fn collective_energy(h: &Hypergraph, xs: &[Vec<f64>]) -> Result<f64> {
    for x in xs {
        if x.len() != h.n() {
            return Err(Error::DimensionMismatch { expected: h.n(), got: x.len() });
        }
    }
    let mut terms = Vec::with_capacity(h.len());
    for e in h.edges() {
        let vs = &e.vertices;
        let mut best = 0.0f64;
        for a in 0..vs.len() {
            for b in a + 1..vs.len() {
                let s: f64 = xs.iter().map(|x| (x[vs[a]] - x[vs[b]]).powi(2)).sum();
                best = best.max(s);
            }
        }
        terms.push(e.weight * best);
    }
    Ok(neumaier(terms))
}
