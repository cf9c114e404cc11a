use crate::error::{Error, Result};
use crate::hypergraph::{EdgeId, Hyperedge, Hypergraph};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeptEdge {
    pub id: EdgeId,
    /// Recovery level; the edge weight is 2^level times its source weight.
    pub level: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparsifierOutput {
    pub kept: Vec<KeptEdge>,
    /// Largest number of levels any bucket used.
    pub levels: usize,
    /// Edges kept only because the level budget ran out.
    pub residue: usize,
    pub warnings: Vec<String>,
}

impl SparsifierOutput {
    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn push(&mut self, id: EdgeId, level: usize, source_weight: f64) {
        self.kept.push(KeptEdge {
            id,
            level,
            weight: source_weight * 2f64.powi(level as i32),
        });
    }

    pub fn sort(&mut self) {
        self.kept.sort_by_key(|k| k.id);
    }

    pub fn merge(&mut self, other: SparsifierOutput) {
        self.kept.extend(other.kept);
        self.levels = self.levels.max(other.levels);
        self.residue += other.residue;
        self.warnings.extend(other.warnings);
        self.sort();
    }

    pub fn get(&self, id: EdgeId) -> Option<&KeptEdge> {
        self.kept
            .binary_search_by_key(&id, |k| k.id)
            .ok()
            .map(|i| &self.kept[i])
    }

    /// Reweighted sub-hypergraph of `source`, ids preserved.
    pub fn to_hypergraph(&self, source: &Hypergraph) -> Result<Hypergraph> {
        let mut edges = Vec::with_capacity(self.kept.len());
        for k in &self.kept {
            let e = source.get(k.id).ok_or(Error::UnknownEdge(k.id))?;
            edges.push(Hyperedge::new(k.id, e.vertices.clone(), k.weight));
        }
        Hypergraph::from_edges(source.n(), edges)
    }
}
