//! Edge colorings keyed by edge id. Color 0 means unset.

use serde::{Deserialize, Serialize};

use crate::group::{EdgeId, TorusInstance, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeColoring {
    pub palette: u32,
    pub colors: Vec<u32>,
}

impl EdgeColoring {
    pub fn empty(n_edges: usize, palette: u32) -> Self {
        EdgeColoring {
            palette,
            colors: vec![0; n_edges],
        }
    }

    pub fn for_instance(instance: &TorusInstance, palette: u32) -> Self {
        Self::empty(instance.edges().len(), palette)
    }

    pub fn get(&self, e: EdgeId) -> Option<u32> {
        match self.colors[e] {
            0 => None,
            c => Some(c),
        }
    }

    pub fn set(&mut self, e: EdgeId, c: u32) {
        self.colors[e] = c;
    }

    pub fn unset(&mut self, e: EdgeId) {
        self.colors[e] = 0;
    }

    pub fn is_total(&self) -> bool {
        self.colors.iter().all(|&c| c != 0)
    }

    /// Number of distinct colors actually used.
    pub fn used_colors(&self) -> usize {
        let mut seen: Vec<u32> = self.colors.iter().copied().filter(|&c| c != 0).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    pub fn max_color(&self) -> u32 {
        self.colors.iter().copied().max().unwrap_or(0)
    }

    /// Whether color `c` is absent from every edge at `v`.
    pub fn is_free_at(&self, instance: &TorusInstance, v: VertexId, c: u32) -> bool {
        instance.incident(v).iter().all(|&e| self.colors[e] != c)
    }

    pub fn colors_at(&self, instance: &TorusInstance, v: VertexId) -> Vec<u32> {
        instance
            .incident(v)
            .iter()
            .map(|&e| self.colors[e])
            .filter(|&c| c != 0)
            .collect()
    }

    /// Edges whose color differs between two colorings of the same instance.
    pub fn diff(&self, other: &Self) -> Vec<EdgeId> {
        self.colors
            .iter()
            .zip(&other.colors)
            .enumerate()
            .filter_map(|(e, (a, b))| (a != b).then_some(e))
            .collect()
    }
}
