//! Separation witnesses on tori: a two-part vertex partition whose
//! distance-`N` restrictions break into bounded pieces, plus the rainbow
//! annuli built around part 0.

use std::collections::{HashMap, VecDeque};

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{annulus, ball, power_reach, GroupElement, TorusInstance, VertexId, VertexSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("no tile length fits periods {periods:?}: need a common divisor of at least {needed}")]
    IncompatiblePeriods { periods: Vec<u64>, needed: u64 },
    #[error("witness N = {n} is too weak, need at least {needed}")]
    WitnessTooWeak { n: u32, needed: u32 },
    #[error("orbit of slot {slot} through vertex {vertex} has no edge inside rainbow set {set}")]
    GuaranteeFailed {
        slot: usize,
        vertex: VertexId,
        set: usize,
    },
    #[error("part has {got} entries for {expected} vertices")]
    PartLength { expected: usize, got: usize },
    #[error("N must be positive")]
    ZeroN,
}

/// Box tiling parameters: cells are `[0, cell)^d + tile·Z^d` in the free
/// coordinates, times the whole torsion fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tiling {
    pub tile: u64,
    pub cell: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationWitness {
    #[serde(rename = "N")]
    pub n: u32,
    pub part: Vec<u8>,
    #[serde(rename = "bound")]
    pub certified_bound: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiling: Option<Tiling>,
}

impl SeparationWitness {
    /// Wraps an explicit partition; the declared bound is the instance size.
    pub fn from_part(
        instance: &TorusInstance,
        n: u32,
        part: Vec<u8>,
    ) -> Result<Self, WitnessError> {
        if n == 0 {
            return Err(WitnessError::ZeroN);
        }
        if part.len() != instance.n_vertices() {
            return Err(WitnessError::PartLength {
                expected: instance.n_vertices(),
                got: part.len(),
            });
        }
        Ok(SeparationWitness {
            n,
            part,
            certified_bound: instance.n_vertices(),
            tiling: None,
        })
    }

    pub fn part_set(&self, p: u8) -> VertexSet {
        VertexSet::from_predicate(self.part.len(), |v| self.part[v] == p)
    }

    /// `U₀`, the cell side.
    pub fn u0(&self) -> VertexSet {
        self.part_set(0)
    }
}

/// Largest `L∞` norm of a generator's free part.
pub fn max_free_step(instance: &TorusInstance) -> u64 {
    instance
        .group()
        .pairs()
        .iter()
        .flat_map(|p| p.rep.free.iter().map(|x| x.unsigned_abs()))
        .max()
        .unwrap_or(0)
}

/// Builds the box witness: the smallest tile length dividing every period
/// that leaves gaps of at least `N·s` between cells, `s` the largest
/// generator step. In rank 1 the cells are also at least `N·s` long.
pub fn build_grid_witness(
    instance: &TorusInstance,
    n: u32,
) -> Result<SeparationWitness, WitnessError> {
    if n == 0 {
        return Err(WitnessError::ZeroN);
    }
    let nv = instance.n_vertices();
    let d = instance.group().rank();
    if d == 0 {
        return Ok(SeparationWitness {
            n,
            part: vec![1; nv],
            certified_bound: nv,
            tiling: None,
        });
    }
    let step = max_free_step(instance).max(1);
    let gap = n as u64 * step;
    let needed = if d == 1 { 2 * gap } else { gap + 1 };
    let g = instance.periods().iter().fold(0u64, |acc, &p| acc.gcd(&p));
    let tile =
        (needed..=g)
            .find(|l| g % l == 0)
            .ok_or_else(|| WitnessError::IncompatiblePeriods {
                periods: instance.periods().to_vec(),
                needed,
            })?;
    let cell = tile - gap;
    let t = instance.group().invariants().len();
    let part: Vec<u8> = (0..nv)
        .map(|v| {
            let c = instance.coords(v);
            u8::from(!c[t..].iter().all(|&x| x % tile < cell))
        })
        .collect();
    let mut w = SeparationWitness {
        n,
        part,
        certified_bound: 0,
        tiling: Some(Tiling { tile, cell }),
    };
    let torsion = instance.group().torsion_order() as usize;
    let cell_size = torsion * (cell as usize).pow(d as u32);
    w.certified_bound = if d == 1 {
        cell_size.max(torsion * gap as usize)
    } else {
        cell_size.max(nv - nv / (tile as usize).pow(d as u32) * (cell as usize).pow(d as u32))
    };
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub ok: bool,
    pub max_component_0: usize,
    pub max_component_1: usize,
    pub wraps_0: bool,
    pub wraps_1: bool,
    pub components_0: usize,
    pub components_1: usize,
}

/// Elements of `Γ` of word length at most `n`, as (torsion, free) offsets.
fn lifted_ball(instance: &TorusInstance, n: u32) -> Vec<(Vec<u64>, Vec<i64>)> {
    let group = instance.group();
    let inv = group.invariants();
    let gens: Vec<GroupElement> = group
        .pairs()
        .iter()
        .flat_map(|p| {
            let mut v = vec![p.rep.clone()];
            if !p.involution {
                v.push(p.inverse.clone());
            }
            v
        })
        .collect();
    let start = GroupElement::identity(inv.len(), group.rank());
    let mut seen: HashMap<GroupElement, u32> = HashMap::from([(start.clone(), 0)]);
    let mut queue = VecDeque::from([start]);
    let mut out = Vec::new();
    while let Some(x) = queue.pop_front() {
        let dx = seen[&x];
        out.push((x.torsion.clone(), x.free.clone()));
        if dx == n {
            continue;
        }
        for g in &gens {
            let y = x.add(g, inv);
            if !seen.contains_key(&y) {
                seen.insert(y.clone(), dx + 1);
                queue.push_back(y);
            }
        }
    }
    out
}

/// Components of `G^{≤N}` on one part, each with a wrap flag. A component
/// wraps when lifting it to the cover `Δ × Z^d` along walks of length at
/// most `N` assigns some member two different free coordinates.
pub fn part_components(
    instance: &TorusInstance,
    part: &[u8],
    p: u8,
    n: u32,
) -> Vec<(Vec<VertexId>, bool)> {
    let offsets = lifted_ball(instance, n);
    let t = instance.group().invariants().len();
    let nv = instance.n_vertices();
    let mut lift: Vec<Option<Vec<i64>>> = vec![None; nv];
    let mut out = Vec::new();
    for start in 0..nv {
        if part[start] != p || lift[start].is_some() {
            continue;
        }
        let base = instance.coords(start);
        lift[start] = Some(base[t..].iter().map(|&x| x as i64).collect());
        let mut members = vec![start];
        let mut wraps = false;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let cu = instance.coords(u);
            let lu = lift[u].clone().expect("member lifted");
            for (tau, delta) in &offsets {
                let coords: Vec<i64> = cu
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| x as i64 + if i < t { tau[i] as i64 } else { delta[i - t] })
                    .collect();
                let w = instance.vertex_at(&coords);
                if part[w] != p {
                    continue;
                }
                let lw: Vec<i64> = lu.iter().zip(delta).map(|(a, b)| a + b).collect();
                match &lift[w] {
                    None => {
                        lift[w] = Some(lw);
                        members.push(w);
                        queue.push_back(w);
                    }
                    Some(existing) => {
                        if *existing != lw {
                            wraps = true;
                        }
                    }
                }
            }
        }
        members.sort_unstable();
        out.push((members, wraps));
    }
    out
}

/// Exhaustive check of both parts. Part 1 may wrap in free rank at least 2,
/// where it is the connected sea around the cells.
pub fn verify_witness(instance: &TorusInstance, witness: &SeparationWitness) -> WitnessReport {
    let d = instance.group().rank();
    let c0 = part_components(instance, &witness.part, 0, witness.n);
    let c1 = part_components(instance, &witness.part, 1, witness.n);
    let max0 = c0.iter().map(|(m, _)| m.len()).max().unwrap_or(0);
    let max1 = c1.iter().map(|(m, _)| m.len()).max().unwrap_or(0);
    let wraps_0 = c0.iter().any(|(_, w)| *w);
    let wraps_1 = c1.iter().any(|(_, w)| *w);
    let ok = witness.part.len() == instance.n_vertices()
        && max0 <= witness.certified_bound
        && max1 <= witness.certified_bound
        && !wraps_0
        && (!wraps_1 || d >= 2);
    WitnessReport {
        ok,
        max_component_0: max0,
        max_component_1: max1,
        wraps_0,
        wraps_1,
        components_0: c0.len(),
        components_1: c1.len(),
    }
}

/// Cells of a witness: components of `G^{≤N}` restricted to part 0.
pub fn cells(instance: &TorusInstance, witness: &SeparationWitness) -> Vec<Vec<VertexId>> {
    power_reach(instance, &witness.u0(), witness.n)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RainbowSets {
    /// `V₁..V_d` with `Vᵢ = A(U₀, 2(i−1), 2i)`.
    pub sets: Vec<VertexSet>,
    /// `W`, the vertices farther than `2d` from `U₀`.
    pub leftover: VertexSet,
}

/// Orbit cycles of a slot's generator, each as its vertex sequence.
pub fn orbit_cycles(instance: &TorusInstance, slot: usize) -> Vec<Vec<VertexId>> {
    let nv = instance.n_vertices();
    let mut seen = vec![false; nv];
    let mut out = Vec::new();
    for start in 0..nv {
        if seen[start] {
            continue;
        }
        let mut cyc = Vec::new();
        let mut v = start;
        while !seen[v] {
            seen[v] = true;
            cyc.push(v);
            v = instance.step(v, slot, true);
        }
        out.push(cyc);
    }
    out
}

/// Threshold above which orbit cycles must meet every rainbow set.
pub fn rainbow_threshold(witness: &SeparationWitness) -> usize {
    2 * witness.certified_bound
}

/// Rainbow annuli around `U₀` for `d` infinite-order generators. Every orbit
/// cycle of an infinite-order slot with length at least
/// [`rainbow_threshold`] is checked to contain an edge inside each `Vᵢ`.
pub fn rainbow_sets(
    instance: &TorusInstance,
    witness: &SeparationWitness,
    d: usize,
) -> Result<RainbowSets, WitnessError> {
    let needed = 4 * d as u32 + 1;
    if witness.n < needed {
        return Err(WitnessError::WitnessTooWeak {
            n: witness.n,
            needed,
        });
    }
    let u0 = witness.u0();
    let sets: Vec<VertexSet> = (1..=d as u32)
        .map(|i| annulus(instance, &u0, 2 * (i - 1), 2 * i).expect("radii ordered"))
        .collect();
    let leftover = ball(instance, &u0, 2 * d as u32).complement();
    let threshold = rainbow_threshold(witness);
    for (s, slot) in instance.slots().iter().enumerate() {
        if instance.group().pairs()[slot.pair].rep.is_torsion() {
            continue;
        }
        for cyc in orbit_cycles(instance, s) {
            if cyc.len() < threshold {
                continue;
            }
            for (i, set) in sets.iter().enumerate() {
                let hit = (0..cyc.len())
                    .any(|k| set.contains(cyc[k]) && set.contains(cyc[(k + 1) % cyc.len()]));
                if !hit {
                    return Err(WitnessError::GuaranteeFailed {
                        slot: s,
                        vertex: cyc[0],
                        set: i + 1,
                    });
                }
            }
        }
    }
    Ok(RainbowSets { sets, leftover })
}
