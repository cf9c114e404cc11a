use crate::config::SparsifyConfig;
use crate::hypergraph::{Hypergraph, VertexId};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// All vertex-sampling rounds drawn up front: vertex u takes part in the
/// rounds listed in `gamma[u]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingPlan {
    pub rounds: usize,
    pub p: f64,
    pub gamma: Vec<Vec<u32>>,
}

impl SamplingPlan {
    pub fn new<R: Rng + ?Sized>(n: usize, rounds: usize, p: f64, rng: &mut R) -> Self {
        let p = p.clamp(0.0, 1.0);
        let gamma = (0..n)
            .map(|_| {
                let k = if p >= 1.0 {
                    rounds
                } else {
                    Binomial::new(rounds as u64, p)
                        .expect("valid binomial")
                        .sample(rng) as usize
                };
                let mut g: Vec<u32> = if k == rounds {
                    (0..rounds as u32).collect()
                } else {
                    index::sample(rng, rounds, k).into_iter().map(|i| i as u32).collect()
                };
                g.sort_unstable();
                g
            })
            .collect();
        SamplingPlan { rounds, p, gamma }
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    /// Vertices sampled in round j.
    pub fn round_vertices(&self, j: usize) -> Vec<VertexId> {
        (0..self.n())
            .filter(|&v| self.gamma[v].binary_search(&(j as u32)).is_ok())
            .collect()
    }

    /// Every round's vertex set, computed in one pass.
    pub fn all_round_vertices(&self) -> Vec<Vec<VertexId>> {
        let mut out = vec![Vec::new(); self.rounds];
        for (v, g) in self.gamma.iter().enumerate() {
            for &j in g {
                out[j as usize].push(v);
            }
        }
        out
    }

    /// (round, e ∩ V^(round)) for every round with a nonempty intersection;
    /// work is proportional to the summed gamma lengths of e's vertices.
    pub fn intersections(&self, vertices: &[VertexId]) -> Vec<(usize, Vec<VertexId>)> {
        let mut pairs: Vec<(u32, VertexId)> = Vec::new();
        for &v in vertices {
            for &j in &self.gamma[v] {
                pairs.push((j, v));
            }
        }
        pairs.sort_unstable();
        let mut out: Vec<(usize, Vec<VertexId>)> = Vec::new();
        for (j, v) in pairs {
            match out.last_mut() {
                Some((last, vs)) if *last == j as usize => vs.push(v),
                _ => out.push((j as usize, vec![v])),
            }
        }
        out
    }

    /// For each round, the (edge position, projected vertices) pairs of every
    /// edge of `h` meeting that round in at least `min_size` vertices.
    pub fn round_members(&self, h: &Hypergraph, min_size: usize) -> Vec<Vec<(usize, Vec<VertexId>)>> {
        let mut out = vec![Vec::new(); self.rounds];
        for (i, e) in h.edges().iter().enumerate() {
            for (j, vs) in self.intersections(&e.vertices) {
                if vs.len() >= min_size {
                    out[j].push((i, vs));
                }
            }
        }
        out
    }
}

pub fn plan_rounds<R: Rng + ?Sized>(
    n: usize,
    r: usize,
    m: usize,
    config: &SparsifyConfig,
    rng: &mut R,
) -> SamplingPlan {
    SamplingPlan::new(n, config.rounds(r, n, m), config.sample_rate(r, n), rng)
}

pub fn plan_spanner_rounds<R: Rng + ?Sized>(
    n: usize,
    r: usize,
    m: usize,
    config: &SparsifyConfig,
    rng: &mut R,
) -> SamplingPlan {
    SamplingPlan::new(n, config.spanner_rounds(r, n, m), config.sample_rate(r, n), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn full_rate_plan() {
        let cfg = SparsifyConfig { p_override: Some(1.0), ..Default::default() };
        let plan = plan_rounds(5, 4, 10, &cfg, &mut substream(0, &[]));
        for g in &plan.gamma {
            assert_eq!(g.len(), plan.rounds);
        }
        let inter = plan.intersections(&[1, 3]);
        assert_eq!(inter.len(), plan.rounds);
        assert!(inter.iter().all(|(_, vs)| vs == &vec![1, 3]));
    }

    #[test]
    fn deterministic_plan() {
        let cfg = SparsifyConfig::default();
        let a = plan_rounds(50, 4, 100, &cfg, &mut substream(9, &[]));
        let b = plan_rounds(50, 4, 100, &cfg, &mut substream(9, &[]));
        assert_eq!(a, b);
    }

    #[test]
    fn gamma_sorted_and_distinct() {
        let plan = SamplingPlan::new(200, 40, 0.3, &mut substream(2, &[]));
        for g in &plan.gamma {
            assert!(g.windows(2).all(|w| w[0] < w[1]));
            assert!(g.iter().all(|&j| (j as usize) < 40));
        }
        let rv = plan.all_round_vertices();
        for j in 0..40 {
            assert_eq!(rv[j], plan.round_vertices(j));
        }
    }
}
