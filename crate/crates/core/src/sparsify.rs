//! Vertex-sampling recovery and the level-by-level static sparsifier.

use crate::config::{lg, SparsifyConfig};
use crate::error::Result;
use crate::hypergraph::{bucket_by_arity_and_weight, EdgeId, Hypergraph};
use crate::multigraph::{push_clique, MultiGraph};
use crate::output::SparsifierOutput;
use crate::plan::{plan_rounds, plan_spanner_rounds, SamplingPlan};
use crate::recovery::repeated_recursive_recovery_spanner;
use crate::resistance::{er_sample_with, resistances_for_sampling, ResistanceOptions};
use crate::rng::{hash_words, substream, tag};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Engine {
    /// Explicit effective-resistance sampling per round.
    Vs,
    /// Spanner bundles with recursive halving per round.
    Spanner,
}

impl std::str::FromStr for Engine {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "vs" => Ok(Engine::Vs),
            "spanner" => Ok(Engine::Spanner),
            _ => Err(format!("unknown engine `{s}` (expected vs or spanner)")),
        }
    }
}

pub fn effective_epsilon(eps: f64, m: usize, config: &SparsifyConfig) -> f64 {
    if config.eps_split {
        eps / lg(m) as f64
    } else {
        eps
    }
}

/// Builds the projected multigraph of one round from the live members.
pub(crate) fn round_graph(
    n: usize,
    h: &Hypergraph,
    members: &[(usize, Vec<usize>)],
    alive: &[bool],
) -> MultiGraph {
    let mut g = MultiGraph::new(n);
    let mut copies = HashMap::new();
    for (i, vs) in members {
        if alive[*i] {
            push_clique(&mut g, vs, h.edges()[*i].id, &mut copies);
        }
    }
    g
}

/// One pass over the plan's rounds; hyperedges owning a sampled multi-edge
/// are recovered and leave the instance before the next round.
pub fn vs(
    h: &Hypergraph,
    lambda: f64,
    plan: &SamplingPlan,
    opts: &ResistanceOptions,
    seed: u64,
) -> Result<Vec<EdgeId>> {
    let mut out = Vec::new();
    if lambda <= 0.0 || h.is_empty() {
        return Ok(out);
    }
    let members = plan.round_members(h, 2);
    let mut alive = vec![true; h.len()];
    for (j, mem) in members.iter().enumerate() {
        let g = round_graph(h.n(), h, mem, &alive);
        if g.is_empty() {
            continue;
        }
        let mut rng = substream(seed, &[tag::ROUND, j as u64]);
        let (r, lam) = resistances_for_sampling(&g, lambda, opts, &mut rng)?;
        for k in er_sample_with(&r, lam, &mut rng) {
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

pub fn sparsify_static(h: &Hypergraph, eps: f64, config: &SparsifyConfig) -> Result<SparsifierOutput> {
    sparsify(h, eps, config, Engine::Vs)
}

/// Buckets by arity and weight class, then runs the level skeleton on each
/// bucket. Arity-1 edges are spectrally null and are passed through verbatim.
pub fn sparsify(h: &Hypergraph, eps: f64, config: &SparsifyConfig, engine: Engine) -> Result<SparsifierOutput> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(crate::error::Error::Infeasible(format!("eps = {eps} not in (0,1)")));
    }
    let mut out = SparsifierOutput::default();
    for b in bucket_by_arity_and_weight(h) {
        if b.r < 2 {
            for e in b.hypergraph.edges() {
                out.push(e.id, 0, e.weight);
            }
            continue;
        }
        let seed = hash_words(config.seed, &[tag::BUCKET, b.r as u64, b.weight_class as i64 as u64]);
        out.merge(sparsify_bucket(&b.hypergraph, b.r, eps, config, engine, seed)?);
    }
    out.sort();
    Ok(out)
}

/// Level loop on one bucket: recover F_i, keep it at 2^i, and pass each
/// unrecovered edge to the next level with probability 1/2.
pub fn sparsify_bucket(
    h: &Hypergraph,
    r: usize,
    eps: f64,
    config: &SparsifyConfig,
    engine: Engine,
    seed: u64,
) -> Result<SparsifierOutput> {
    let mut out = SparsifierOutput::default();
    let n = h.n();
    let m = h.len();
    let eps_p = effective_epsilon(eps, m, config);
    let lambda = config.lambda(eps_p, n, m);
    let levels = config.levels(m);
    let mut current = h.clone();
    let mut used = 0;
    for i in 0..levels {
        if current.is_empty() {
            break;
        }
        used = i + 1;
        let mut plan_rng = substream(seed, &[tag::PLAN, i as u64]);
        let plan = match engine {
            Engine::Vs => plan_rounds(n, r, m, config, &mut plan_rng),
            Engine::Spanner => plan_spanner_rounds(n, r, m, config, &mut plan_rng),
        };
        let level_seed = hash_words(seed, &[tag::LEVEL, i as u64]);
        let f = match engine {
            Engine::Vs => vs(&current, lambda, &plan, &config.resistance, level_seed)?,
            Engine::Spanner => {
                repeated_recursive_recovery_spanner(&current, eps_p, m, config, &plan, level_seed)?
            }
        };
        let mut fi = f.iter().peekable();
        let mut coin = substream(seed, &[tag::COIN, i as u64]);
        let mut next = Hypergraph::new(n);
        for e in current.edges() {
            if fi.peek() == Some(&&e.id) {
                fi.next();
                out.push(e.id, i, e.weight);
            } else if coin.random::<bool>() {
                next.insert(e.clone())?;
            }
        }
        current = next;
    }
    if !current.is_empty() {
        out.residue += current.len();
        out.warnings.push(format!(
            "level budget {levels} exhausted with {} edges left; kept at weight 2^{levels}",
            current.len()
        ));
        for e in current.edges() {
            out.push(e.id, levels, e.weight);
        }
        used = levels;
    }
    out.levels = used;
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn epsilon_split() {
        let on = SparsifyConfig { eps_split: true, ..Default::default() };
        assert_eq!(effective_epsilon(0.5, 2, &on), 0.5);
        assert!((effective_epsilon(0.5, 1024, &on) - 0.05).abs() < 1e-15);
        assert_eq!(effective_epsilon(0.5, 1024, &SparsifyConfig::default()), 0.5);
    }

    #[test]
    fn vs_zero_lambda_and_star() {
        let star = Hypergraph::from_vertex_lists(9, (1..9).map(|v| vec![0, v]).collect()).unwrap();
        let cfg = SparsifyConfig { p_override: Some(1.0), ..Default::default() };
        let plan = plan_rounds(9, 2, 8, &cfg, &mut substream(0, &[]));
        let opts = ResistanceOptions::default();
        assert!(vs(&star, 0.0, &plan, &opts, 1).unwrap().is_empty());
        assert_eq!(vs(&star, 1.0, &plan, &opts, 1).unwrap(), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn empty_and_single() {
        let cfg = SparsifyConfig { p_override: Some(1.0), ..Default::default() };
        let out = sparsify_static(&Hypergraph::new(5), 0.5, &cfg).unwrap();
        assert!(out.is_empty());
        let h = Hypergraph::from_vertex_lists(5, vec![vec![1, 3]]).unwrap();
        let out = sparsify_static(&h, 0.5, &cfg).unwrap();
        assert_eq!(out.kept.len(), 1);
        assert_eq!((out.kept[0].level, out.kept[0].weight), (0, 1.0));
    }

    #[test]
    fn singletons_pass_through() {
        let mut h = Hypergraph::new(4);
        h.push(vec![2], 5.0).unwrap();
        h.push(vec![0, 1], 1.0).unwrap();
        let cfg = SparsifyConfig { p_override: Some(1.0), ..Default::default() };
        let out = sparsify_static(&h, 0.5, &cfg).unwrap();
        assert_eq!(out.get(0).unwrap().weight, 5.0);
    }
}
