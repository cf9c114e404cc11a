use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperedge {
    pub id: EdgeId,
    pub vertices: Vec<VertexId>,
    pub weight: f64,
}

impl Hyperedge {
    pub fn new(id: EdgeId, vertices: Vec<VertexId>, weight: f64) -> Self {
        Hyperedge { id, vertices, weight }
    }

    pub fn arity(&self) -> usize {
        self.vertices.len()
    }

    /// Checks sortedness, range and weight.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(Error::InvalidEdge(format!("edge {} is empty", self.id)));
        }
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(Error::InvalidEdge(format!(
                "edge {} has non-positive weight {}",
                self.id, self.weight
            )));
        }
        for w in self.vertices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidEdge(format!(
                    "edge {} repeats vertex {}",
                    self.id, w[0]
                )));
            }
            if w[0] > w[1] {
                return Err(Error::InvalidEdge(format!(
                    "edge {} vertices not increasing",
                    self.id
                )));
            }
        }
        let last = *self.vertices.last().unwrap();
        if last >= n {
            return Err(Error::VertexOutOfRange { vertex: last, n });
        }
        Ok(())
    }

    /// max over pairs of (x_u - x_v)^2, i.e. (max - min)^2.
    #[inline]
    pub fn energy(&self, x: &[f64]) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.vertices {
            let xv = x[v];
            lo = lo.min(xv);
            hi = hi.max(xv);
        }
        let d = hi - lo;
        d * d
    }

    #[inline]
    pub fn is_cut(&self, side: &[bool]) -> bool {
        let first = side[self.vertices[0]];
        self.vertices[1..].iter().any(|&v| side[v] != first)
    }
}

/// Weighted hypergraph; edges are kept sorted by id.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<Hyperedge>,
}

impl Hypergraph {
    pub fn new(n: usize) -> Self {
        Hypergraph { n, edges: Vec::new() }
    }

    pub fn from_edges(n: usize, mut edges: Vec<Hyperedge>) -> Result<Self> {
        for e in &edges {
            e.validate(n)?;
        }
        edges.sort_by_key(|e| e.id);
        for w in edges.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::DuplicateId(w[0].id));
            }
        }
        Ok(Hypergraph { n, edges })
    }

    /// Builds from vertex lists with sequential ids and unit weight.
    pub fn from_vertex_lists(n: usize, lists: Vec<Vec<VertexId>>) -> Result<Self> {
        let edges = lists
            .into_iter()
            .enumerate()
            .map(|(i, mut vs)| {
                vs.sort_unstable();
                Hyperedge::new(i, vs, 1.0)
            })
            .collect();
        Hypergraph::from_edges(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    pub fn into_edges(self) -> Vec<Hyperedge> {
        self.edges
    }

    pub fn next_id(&self) -> EdgeId {
        self.edges.last().map_or(0, |e| e.id + 1)
    }

    /// Appends an edge with the next sequential id.
    pub fn push(&mut self, mut vertices: Vec<VertexId>, weight: f64) -> Result<EdgeId> {
        vertices.sort_unstable();
        let e = Hyperedge::new(self.next_id(), vertices, weight);
        e.validate(self.n)?;
        let id = e.id;
        self.edges.push(e);
        Ok(id)
    }

    /// Inserts an edge with an explicit id, keeping id order.
    pub fn insert(&mut self, e: Hyperedge) -> Result<()> {
        e.validate(self.n)?;
        match self.edges.binary_search_by_key(&e.id, |x| x.id) {
            Ok(_) => Err(Error::DuplicateId(e.id)),
            Err(pos) => {
                self.edges.insert(pos, e);
                Ok(())
            }
        }
    }

    pub fn remove(&mut self, id: EdgeId) -> Result<Hyperedge> {
        match self.position(id) {
            Some(pos) => Ok(self.edges.remove(pos)),
            None => Err(Error::UnknownEdge(id)),
        }
    }

    pub fn position(&self, id: EdgeId) -> Option<usize> {
        self.edges.binary_search_by_key(&id, |x| x.id).ok()
    }

    pub fn get(&self, id: EdgeId) -> Option<&Hyperedge> {
        self.position(id).map(|p| &self.edges[p])
    }

    pub fn contains(&self, id: EdgeId) -> bool {
        self.position(id).is_some()
    }

    /// Sub-hypergraph of the edges satisfying `keep`, ids preserved.
    pub fn filter(&self, mut keep: impl FnMut(&Hyperedge) -> bool) -> Hypergraph {
        Hypergraph {
            n: self.n,
            edges: self.edges.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }

    pub fn max_arity(&self) -> usize {
        self.edges.iter().map(|e| e.arity()).max().unwrap_or(0)
    }

    pub fn total_weight(&self) -> f64 {
        neumaier(self.edges.iter().map(|e| e.weight))
    }
}

/// Compensated summation.
pub fn neumaier(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub fn quadratic_form(h: &Hypergraph, x: &[f64]) -> Result<f64> {
    if x.len() != h.n {
        return Err(Error::DimensionMismatch { expected: h.n, got: x.len() });
    }
    Ok(neumaier(h.edges.iter().map(|e| e.weight * e.energy(x))))
}

pub fn cut_value(h: &Hypergraph, s: &[VertexId]) -> Result<f64> {
    let mut side = vec![false; h.n];
    for &v in s {
        if v >= h.n {
            return Err(Error::VertexOutOfRange { vertex: v, n: h.n });
        }
        side[v] = true;
    }
    Ok(cut_value_mask(h, &side))
}

pub fn cut_value_mask(h: &Hypergraph, side: &[bool]) -> f64 {
    neumaier(
        h.edges
            .iter()
            .filter(|e| e.is_cut(side))
            .map(|e| e.weight),
    )
}

/// One (arity bucket, weight class) slice of a hypergraph.
#[derive(Clone, Debug, PartialEq)]
pub struct ArityBucket {
    /// Power-of-two base: arities lie in [r, 2r).
    pub r: usize,
    /// j with every weight in [2^j, 2^(j+1)).
    pub weight_class: i32,
    /// The slice, ids and original weights preserved.
    pub hypergraph: Hypergraph,
}

impl ArityBucket {
    pub fn ids(&self) -> Vec<EdgeId> {
        self.hypergraph.edges().iter().map(|e| e.id).collect()
    }
}

pub fn arity_base(k: usize) -> usize {
    assert!(k >= 1);
    1usize << (usize::BITS - 1 - k.leading_zeros())
}

pub fn weight_class(w: f64) -> i32 {
    let mut j = w.log2().floor() as i32;
    // guard against rounding at exact powers of two
    while 2f64.powi(j) > w {
        j -= 1;
    }
    while 2f64.powi(j + 1) <= w {
        j += 1;
    }
    j
}

pub fn bucket_by_arity_and_weight(h: &Hypergraph) -> Vec<ArityBucket> {
    let mut keys: Vec<((usize, i32), usize)> = h
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| ((arity_base(e.arity()), weight_class(e.weight)), i))
        .collect();
    keys.sort();
    let mut out: Vec<ArityBucket> = Vec::new();
    for ((r, j), i) in keys {
        if out.last().is_none_or(|b| b.r != r || b.weight_class != j) {
            out.push(ArityBucket {
                r,
                weight_class: j,
                hypergraph: Hypergraph::new(h.n),
            });
        }
        // edges arrive in id order within a bucket, so push keeps the order
        out.last_mut().unwrap().hypergraph.edges.push(h.edges[i].clone());
    }
    out
}
