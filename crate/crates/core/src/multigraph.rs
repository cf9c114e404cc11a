use crate::hypergraph::{EdgeId, Hyperedge, Hypergraph, VertexId};
use rand::Rng;
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MultiEdge {
    pub u: VertexId,
    pub v: VertexId,
    /// Id of the hyperedge this copy descends from.
    pub label: EdgeId,
    /// Position among the parallel copies of (u, v) in this graph.
    pub copy: u32,
}

impl MultiEdge {
    pub fn slot(&self) -> (VertexId, VertexId) {
        (self.u, self.v)
    }
}

/// Unit-weight multigraph; parallel edges allowed, self-loops not.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MultiGraph {
    pub n: usize,
    pub edges: Vec<MultiEdge>,
}

impl MultiGraph {
    pub fn new(n: usize) -> Self {
        MultiGraph { n, edges: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Appends a copy of (u, v), assigning the next copy index for that slot.
    pub fn add(&mut self, u: VertexId, v: VertexId, label: EdgeId, copies: &mut HashMap<(VertexId, VertexId), u32>) {
        assert!(u != v, "self-loop");
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        let c = copies.entry((u, v)).or_insert(0);
        self.edges.push(MultiEdge { u, v, label, copy: *c });
        *c += 1;
    }

    pub fn from_pairs(n: usize, pairs: &[(VertexId, VertexId)]) -> Self {
        let mut g = MultiGraph::new(n);
        let mut copies = HashMap::new();
        for (i, &(u, v)) in pairs.iter().enumerate() {
            g.add(u, v, i, &mut copies);
        }
        g
    }

    /// Distinct slots with their multiplicity, in first-appearance order.
    pub fn slots(&self) -> Vec<((VertexId, VertexId), usize)> {
        let mut index: HashMap<(VertexId, VertexId), usize> = HashMap::new();
        let mut out: Vec<((VertexId, VertexId), usize)> = Vec::new();
        for e in &self.edges {
            match index.get(&e.slot()) {
                Some(&i) => out[i].1 += 1,
                None => {
                    index.insert(e.slot(), out.len());
                    out.push((e.slot(), 1));
                }
            }
        }
        out
    }

    /// Number of vertices touched by at least one edge.
    pub fn touched_vertices(&self) -> usize {
        let mut seen = vec![false; self.n];
        for e in &self.edges {
            seen[e.u] = true;
            seen[e.v] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }
}

/// Clique expansion: C(k,2) labelled copies per hyperedge of arity k.
pub fn clique_expand(h: &Hypergraph) -> MultiGraph {
    clique_expand_edges(h.n(), h.edges())
}

pub fn clique_expand_edges<'a>(n: usize, edges: impl IntoIterator<Item = &'a Hyperedge>) -> MultiGraph {
    let mut g = MultiGraph::new(n);
    let mut copies = HashMap::new();
    for e in edges {
        push_clique(&mut g, &e.vertices, e.id, &mut copies);
    }
    g
}

pub fn push_clique(
    g: &mut MultiGraph,
    vs: &[VertexId],
    label: EdgeId,
    copies: &mut HashMap<(VertexId, VertexId), u32>,
) {
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            g.add(vs[i], vs[j], label, copies);
        }
    }
}

/// Restriction of every hyperedge to the vertices with `keep[v]`;
/// empty restrictions are dropped, ids and weights kept.
pub fn project(h: &Hypergraph, keep: &[bool]) -> Hypergraph {
    let edges = h
        .edges()
        .iter()
        .filter_map(|e| {
            let vs: Vec<VertexId> = e.vertices.iter().copied().filter(|&v| keep[v]).collect();
            (!vs.is_empty()).then(|| Hyperedge::new(e.id, vs, e.weight))
        })
        .collect();
    Hypergraph::from_edges(h.n(), edges).expect("projection of a valid hypergraph is valid")
}

/// Keeps every vertex independently with probability `p`.
pub fn vertex_sample<R: Rng + ?Sized>(h: &Hypergraph, p: f64, rng: &mut R) -> (Vec<VertexId>, Hypergraph) {
    let keep: Vec<bool> = (0..h.n())
        .map(|_| p >= 1.0 || (p > 0.0 && rng.random::<f64>() < p))
        .collect();
    let kept = (0..h.n()).filter(|&v| keep[v]).collect();
    (kept, project(h, &keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn expand_examples() {
        let h = Hypergraph::from_vertex_lists(3, vec![vec![0, 1, 2]]).unwrap();
        let g = clique_expand(&h);
        let slots: Vec<_> = g.edges.iter().map(|e| (e.u, e.v, e.label)).collect();
        assert_eq!(slots, vec![(0, 1, 0), (0, 2, 0), (1, 2, 0)]);

        let h = Hypergraph::from_vertex_lists(3, vec![vec![0, 1], vec![0, 1, 2]]).unwrap();
        let g = clique_expand(&h);
        let par: Vec<_> = g.edges.iter().filter(|e| e.slot() == (0, 1)).collect();
        assert_eq!(par.len(), 2);
        assert_ne!(par[0].label, par[1].label);
        assert_ne!(par[0].copy, par[1].copy);

        let h = Hypergraph::from_vertex_lists(6, vec![vec![5]]).unwrap();
        assert!(clique_expand(&h).is_empty());
    }

    #[test]
    fn sample_extremes() {
        let h = Hypergraph::from_vertex_lists(5, vec![vec![0, 1, 2], vec![2, 3, 4]]).unwrap();
        let mut rng = substream(1, &[]);
        let (v, hp) = vertex_sample(&h, 1.0, &mut rng);
        assert_eq!(v.len(), 5);
        assert_eq!(hp, h);
        let (v, hp) = vertex_sample(&h, 0.0, &mut rng);
        assert!(v.is_empty());
        assert!(hp.is_empty());
    }

    #[test]
    fn projection_keeps_labels() {
        let h = Hypergraph::from_vertex_lists(5, vec![vec![0, 1, 2], vec![3, 4]]).unwrap();
        let keep = [true, false, true, false, false];
        let p = project(&h, &keep);
        assert_eq!(p.len(), 1);
        assert_eq!(p.edges()[0].id, 0);
        assert_eq!(p.edges()[0].vertices, vec![0, 2]);
    }
}
