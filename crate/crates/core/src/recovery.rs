//! Recovery through spanner bundles instead of explicit resistances.

use crate::config::SparsifyConfig;
use crate::error::Result;
use crate::hypergraph::{EdgeId, Hypergraph};
use crate::multigraph::{MultiEdge, MultiGraph};
use crate::output::SparsifierOutput;
use crate::plan::SamplingPlan;
use crate::rng::{hash_words, tag};
use crate::sparsify::{round_graph, sparsify, Engine};
use crate::spanner::SpannerBundle;

/// Pre-committed fair coin for a multi-edge at a level.
pub fn edge_coin(seed: u64, e: &MultiEdge, level: usize) -> bool {
    hash_words(
        seed,
        &[tag::COIN, e.label as u64, e.u as u64, e.v as u64, e.copy as u64, level as u64],
    ) & 1
        == 1
}

/// (edge index in `g`, level) of every recovered multi-edge.
///
/// Level i offers the surviving edges to a fresh ℓ-bundle; whatever the
/// bundle keeps is F_i, the rest continue to level i+1 if their coin for
/// level i comes up heads.
pub fn recursive_recovery(g: &MultiGraph, ell: usize, levels: usize, t: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut local = vec![usize::MAX; g.n];
    let mut count = 0;
    for e in &g.edges {
        for x in [e.u, e.v] {
            if local[x] == usize::MAX {
                local[x] = count;
                count += 1;
            }
        }
    }
    let mut active: Vec<usize> = (0..g.edges.len()).collect();
    let mut out = Vec::new();
    for level in 0..levels {
        if active.is_empty() {
            break;
        }
        let mut bundle = SpannerBundle::new(count, t, ell);
        let mut next = Vec::with_capacity(active.len());
        for &k in &active {
            let e = &g.edges[k];
            if bundle.try_insert(local[e.u], local[e.v], e.label).is_some() {
                out.push((k, level));
            } else if edge_coin(seed, e, level) {
                next.push(k);
            }
        }
        active = next;
    }
    out
}

/// Rounds of vertex sampling; in each, the projected multigraph of the
/// still-unrecovered hyperedges goes through [`recursive_recovery`] and every
/// hyperedge owning a recovered copy is recovered.
pub fn repeated_recursive_recovery_spanner(
    h: &Hypergraph,
    eps: f64,
    m: usize,
    config: &SparsifyConfig,
    plan: &SamplingPlan,
    seed: u64,
) -> Result<Vec<EdgeId>> {
    let mut out = Vec::new();
    if h.is_empty() {
        return Ok(out);
    }
    let members = plan.round_members(h, 2);
    let round_sizes: Vec<usize> = plan.all_round_vertices().iter().map(|v| v.len()).collect();
    let levels = config.inner_levels(m);
    let mut alive = vec![true; h.len()];
    for (j, mem) in members.iter().enumerate() {
        let g = round_graph(h.n(), h, mem, &alive);
        if g.is_empty() {
            continue;
        }
        let t = config.stretch_for(round_sizes[j]);
        let ell = config.bundle_size(t, eps, h.n(), m);
        let s = recursive_recovery(&g, ell, levels, t, hash_words(seed, &[tag::ROUND, j as u64]));
        for (k, _) in s {
            let pos = h.position(g.edges[k].label).expect("label of a live hyperedge");
            if alive[pos] {
                alive[pos] = false;
                out.push(g.edges[k].label);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

pub fn hypergraph_sparsify_spanner(h: &Hypergraph, eps: f64, config: &SparsifyConfig) -> Result<SparsifierOutput> {
    sparsify(h, eps, config, Engine::Spanner)
}
