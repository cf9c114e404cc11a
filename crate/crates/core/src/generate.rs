//! Test-instance generators.

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, VertexId};
use crate::io::Stream;
use crate::rng::{substream, tag};
use rand::seq::{index, SliceRandom};
use rand::Rng;

/// `m` unit-weight hyperedges, each a uniform subset whose size is uniform in `[a, b]`.
pub fn gen_random_hypergraph(n: usize, m: usize, a: usize, b: usize, seed: u64) -> Result<Hypergraph> {
    if !(2 <= a && a <= b && b <= n) {
        return Err(Error::Infeasible(format!(
            "arity range [{a}, {b}] with n = {n}"
        )));
    }
    let mut rng = substream(seed, &[0x6e7e]);
    let mut h = Hypergraph::new(n);
    for _ in 0..m {
        let k = rng.random_range(a..=b);
        let vs: Vec<VertexId> = index::sample(&mut rng, n, k).into_vec();
        h.push(vs, 1.0)?;
    }
    Ok(h)
}

/// Stream over `2n` vertices plus the op index where each round ends.
#[derive(Clone, Debug)]
pub struct LowerBoundStream {
    pub stream: Stream,
    pub round_ends: Vec<usize>,
}

/// Default multiplicity schedule: 2^j copies per left vertex in round j,
/// capped at `budget`.
pub fn default_multiplicity(k: usize, budget: usize) -> Vec<usize> {
    (0..k).map(|j| (1usize << j.min(30)).min(budget.max(1))).collect()
}

pub fn gen_online_lower_bound(n: usize, k: usize, seed: u64) -> Result<LowerBoundStream> {
    gen_online_lower_bound_with(n, k, &default_multiplicity(k, 64), seed)
}

/// Left vertices are `0..n`, right vertices `n..2n`. Each round draws fresh
/// bipartitions of both sides, pairs the halves, and every left vertex emits
/// `multiplicity[j]` hyperedges made of itself plus `n/4` random vertices of
/// its paired right half.
pub fn gen_online_lower_bound_with(
    n: usize,
    k: usize,
    multiplicity: &[usize],
    seed: u64,
) -> Result<LowerBoundStream> {
    if !n.is_multiple_of(2) || n < 4 {
        return Err(Error::Infeasible(format!("n = {n} must be even and >= 4")));
    }
    if k * 10 > n {
        return Err(Error::Infeasible(format!("k = {k} exceeds n/10")));
    }
    if multiplicity.len() < k {
        return Err(Error::Infeasible("multiplicity schedule shorter than k".into()));
    }
    let q = n / 4;
    let mut stream = Stream::new(2 * n);
    let mut round_ends = Vec::with_capacity(k);
    for j in 0..k {
        let mut rng = substream(seed, &[tag::ROUND, j as u64]);
        let mut left: Vec<VertexId> = (0..n).collect();
        let mut right: Vec<VertexId> = (n..2 * n).collect();
        left.shuffle(&mut rng);
        right.shuffle(&mut rng);
        let half = n / 2;
        let mut owner = vec![0usize; n];
        for (i, &u) in left.iter().enumerate() {
            owner[u] = usize::from(i >= half);
        }
        for u in 0..n {
            let part = &right[owner[u] * half..(owner[u] + 1) * half];
            for _ in 0..multiplicity[j] {
                let mut vs: Vec<VertexId> = index::sample(&mut rng, half, q)
                    .into_iter()
                    .map(|i| part[i])
                    .collect();
                vs.push(u);
                vs.sort_unstable();
                stream.insert(vs, 1.0);
            }
        }
        round_ends.push(stream.ops.len());
    }
    Ok(LowerBoundStream { stream, round_ends })
}

/// `inserts` random hyperedges interleaved with `deletes` deletions of
/// uniformly chosen live edges. Ids follow insertion order from 0. A deletion
/// is emitted with probability deletes/(inserts + deletes) at each step while
/// both budgets and a live edge remain.
pub fn gen_dynamic_stream(
    n: usize,
    inserts: usize,
    deletes: usize,
    a: usize,
    b: usize,
    seed: u64,
) -> Result<Stream> {
    if deletes > inserts {
        return Err(Error::Infeasible(format!("{deletes} deletes exceed {inserts} inserts")));
    }
    let h = gen_random_hypergraph(n, inserts, a, b, seed)?;
    let mut rng = substream(seed, &[0x6e7e, 1]);
    let mut stream = Stream::new(n);
    let mut live: Vec<usize> = Vec::new();
    let (mut ins, mut del) = (0, 0);
    let q = deletes as f64 / (inserts + deletes).max(1) as f64;
    while ins < inserts || del < deletes {
        let want_delete = del < deletes && !live.is_empty() && (ins == inserts || rng.random::<f64>() < q);
        if want_delete {
            let k = rng.random_range(0..live.len());
            stream.delete(live.swap_remove(k));
            del += 1;
        } else {
            let e = &h.edges()[ins];
            stream.insert(e.vertices.clone(), e.weight);
            live.push(ins);
            ins += 1;
        }
    }
    Ok(stream)
}
