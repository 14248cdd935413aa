//! Chart coordinates for one job: a breadth-first map from the job's
//! Schreier subgraph into `Z^k` modulo a frame modulus.

use std::collections::VecDeque;

use super::AbelianError;
use crate::group::{TorusInstance, VertexId};

#[derive(Debug, Clone)]
pub struct Frame {
    /// Instance slots of the job.
    pub slots: Vec<usize>,
    /// Chart vector of each job slot's representative.
    pub chart: Vec<Vec<i64>>,
    pub moduli: Vec<i64>,
    /// Chart coordinates of every vertex, reduced modulo `moduli`, relative
    /// to its component root.
    pub coords: Vec<Vec<i64>>,
    pub component: Vec<usize>,
    /// Least vertex of each component.
    pub roots: Vec<VertexId>,
}

impl Frame {
    pub fn build(
        instance: &TorusInstance,
        slots: &[usize],
        chart: &[Vec<i64>],
        moduli: &[i64],
    ) -> Result<Frame, AbelianError> {
        assert_eq!(slots.len(), chart.len());
        let n = instance.n_vertices();
        let reduce = |g: Vec<i64>| -> Vec<i64> {
            g.iter()
                .zip(moduli)
                .map(|(x, m)| x.rem_euclid(*m))
                .collect()
        };
        let mut coords: Vec<Vec<i64>> = vec![Vec::new(); n];
        let mut component = vec![usize::MAX; n];
        let mut roots = Vec::new();
        let mut queue = VecDeque::new();
        for root in 0..n {
            if component[root] != usize::MAX {
                continue;
            }
            let c = roots.len();
            roots.push(root);
            component[root] = c;
            coords[root] = vec![0; moduli.len()];
            queue.push_back(root);
            while let Some(v) = queue.pop_front() {
                for (j, &s) in slots.iter().enumerate() {
                    for forward in [true, false] {
                        let w = instance.step(v, s, forward);
                        let g: Vec<i64> = coords[v]
                            .iter()
                            .zip(&chart[j])
                            .map(|(x, y)| if forward { x + y } else { x - y })
                            .collect();
                        let g = reduce(g);
                        if component[w] == usize::MAX {
                            component[w] = c;
                            coords[w] = g;
                            queue.push_back(w);
                        } else if coords[w] != g {
                            return Err(AbelianError::IncompatiblePeriod {
                                slot: s,
                                vertex: w,
                                moduli: moduli.to_vec(),
                            });
                        }
                    }
                }
            }
        }
        Ok(Frame {
            slots: slots.to_vec(),
            chart: chart.to_vec(),
            moduli: moduli.to_vec(),
            coords,
            component,
            roots,
        })
    }

    /// Job-graph distances from `sources`, `u32::MAX` beyond `cap`.
    pub fn distances(&self, instance: &TorusInstance, sources: &[VertexId], cap: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; instance.n_vertices()];
        let mut queue = VecDeque::new();
        for &v in sources {
            if dist[v] != 0 {
                dist[v] = 0;
                queue.push_back(v);
            }
        }
        while let Some(v) = queue.pop_front() {
            if dist[v] >= cap {
                continue;
            }
            for &s in &self.slots {
                for forward in [true, false] {
                    let w = instance.step(v, s, forward);
                    if dist[w] == u32::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        dist
    }

    /// Position of an instance slot within the job.
    pub fn job_slot(&self, slot: usize) -> Option<usize> {
        self.slots.iter().position(|&s| s == slot)
    }
}
