//! Degree-plus-one colorings, lifts through torsion quotients, and degree
//! colorings of even-order finite groups.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::EdgeColoring;
use crate::group::{
    quotient_by_torsion, EdgeId, GroupError, Quotient, SubgroupSpec, TorusInstance, VertexId,
};
use crate::line::{sparse_third_color_cycle, CycleOrbit, LineError};
use crate::oracle::{first_shared_conflict, CspOutcome, EdgeCsp};
use crate::witness::{rainbow_sets, RainbowSets, SeparationWitness, WitnessError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VizingError {
    #[error("generator pair {pair} has odd finite order")]
    OddOrderGenerator { pair: usize },
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("orbit of slot {slot} through vertex {vertex} is odd and misses its rainbow set")]
    GuaranteeFailed { slot: usize, vertex: VertexId },
    #[error("palette mismatch: expected at most {expected} colors, got {got}")]
    PaletteMismatch { expected: u32, got: u32 },
    #[error("the degree lift needs a nonempty internal generator set")]
    EmptyS1,
    #[error("quotient coloring is not proper: {0}")]
    LiftConflict(String),
    #[error("the torsion part has odd order")]
    OddOrderGroup,
    #[error("no internal coloring with {colors} colors on a torsion orbit")]
    InternalSearchFailed { colors: u32 },
    #[error("the generators do not generate the group")]
    NotGenerating,
}

/// `S₀` (infinite order), `S₁` (even finite order) and the odd-order pairs,
/// as pair indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSplit {
    pub s0: Vec<usize>,
    pub s1: Vec<usize>,
    pub odd: Vec<usize>,
}

impl GeneratorSplit {
    pub fn has_odd_order(&self) -> bool {
        !self.odd.is_empty()
    }
}

pub fn split_generators(group: &crate::group::MarkedGroup) -> GeneratorSplit {
    let mut split = GeneratorSplit {
        s0: Vec::new(),
        s1: Vec::new(),
        odd: Vec::new(),
    };
    for (i, p) in group.pairs().iter().enumerate() {
        match group.order_of(&p.rep) {
            None => split.s0.push(i),
            Some(o) if o % 2 == 0 => split.s1.push(i),
            Some(_) => split.odd.push(i),
        }
    }
    split
}

fn slots_of(instance: &TorusInstance, pairs: &[usize]) -> Vec<usize> {
    (0..instance.slots().len())
        .filter(|&s| pairs.contains(&instance.slots()[s].pair))
        .collect()
}

/// Colors the edges of the given even-order pairs with colors after
/// `offset`: two alternating colors per copy, one for an involution copy.
/// Returns the next unused color.
fn color_even_torsion_into(
    instance: &TorusInstance,
    pairs: &[usize],
    offset: u32,
    coloring: &mut EdgeColoring,
) -> Result<u32, VizingError> {
    let mut next = offset;
    for s in slots_of(instance, pairs) {
        let pair = instance.slots()[s].pair;
        if instance.pair_of_slot(s).involution {
            next += 1;
            for v in 0..instance.n_vertices() {
                coloring.set(instance.out_edge(v, s), next);
            }
            continue;
        }
        for cyc in CycleOrbit::all(instance, s) {
            if cyc.len() % 2 == 1 {
                return Err(VizingError::OddOrderGenerator { pair });
            }
            for (k, &e) in cyc.edges.iter().enumerate() {
                coloring.set(e, next + 1 + (k % 2) as u32);
            }
        }
        next += 2;
    }
    Ok(next)
}

/// Partial coloring of the `S₁`-edges with `|S₁|` colors.
pub fn color_even_torsion(
    instance: &TorusInstance,
    s1: &[usize],
) -> Result<EdgeColoring, VizingError> {
    let group = instance.group();
    for &p in s1 {
        match group.order_of(&group.pairs()[p].rep) {
            Some(o) if o % 2 == 0 => {}
            _ => return Err(VizingError::OddOrderGenerator { pair: p }),
        }
    }
    let k: usize = s1.iter().map(|&p| group.pairs()[p].degree()).sum();
    let mut c = EdgeColoring::for_instance(instance, k as u32);
    color_even_torsion_into(instance, s1, 0, &mut c)?;
    Ok(c)
}

#[derive(Debug, Clone)]
pub struct Theorem1Coloring {
    pub coloring: EdgeColoring,
    /// The shared parity-breaking color, present when `S₀ ≠ ∅`.
    pub extra_color: Option<u32>,
    pub rainbow: Option<RainbowSets>,
    /// `S₀` slots; copy `i` uses colors `2i+1`, `2i+2` (zero-based `i`).
    pub s0_slots: Vec<usize>,
}

/// `|S|+1` colors when no generator has odd order. Infinite-order copy `i`
/// alternates `2i−1, 2i` along its orbit cycles and uses the shared color
/// `2d₀+1` only on a maximal matching inside `Vᵢ`; even-order pairs follow.
pub fn color_theorem_d_plus_1(
    instance: &TorusInstance,
    witness: &SeparationWitness,
) -> Result<Theorem1Coloring, VizingError> {
    let split = split_generators(instance.group());
    if let Some(&pair) = split.odd.first() {
        return Err(VizingError::OddOrderGenerator { pair });
    }
    let s0_slots = slots_of(instance, &split.s0);
    let d0 = s0_slots.len() as u32;
    let palette = instance.degree() as u32 + u32::from(d0 > 0);
    let mut col = EdgeColoring::for_instance(instance, palette);
    let mut rainbow = None;
    let mut extra_color = None;
    if d0 > 0 {
        let rb = rainbow_sets(instance, witness, d0 as usize)?;
        let extra = 2 * d0 + 1;
        for (i, &s) in s0_slots.iter().enumerate() {
            let base = 2 * i as u32;
            for cyc in CycleOrbit::all(instance, s) {
                let colors = sparse_third_color_cycle(&cyc, &rb.sets[i]).map_err(|e| match e {
                    LineError::OddCycleNoV { .. } | LineError::TooShort(_) => {
                        VizingError::GuaranteeFailed {
                            slot: s,
                            vertex: cyc.vertices[0],
                        }
                    }
                    other => unreachable!("{other}"),
                })?;
                for (k, &c) in colors.iter().enumerate() {
                    col.set(cyc.edges[k], if c == 3 { extra } else { base + c });
                }
            }
        }
        rainbow = Some(rb);
        extra_color = Some(extra);
    }
    let offset = if d0 > 0 { 2 * d0 + 1 } else { 0 };
    color_even_torsion_into(instance, &split.s1, offset, &mut col)?;
    Ok(Theorem1Coloring {
        coloring: col,
        extra_color,
        rainbow,
        s0_slots,
    })
}

/// How a quotient coloring is lifted and how the internal edges are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiftMode {
    /// Internal edges with `|S₁|+1` colors, quotient with `|S₀|+1`; merge to `|S|+1`.
    Cor1,
    /// Internal edges with `|S₁|` colors, quotient with `|S₀|+1`; merge to `|S|`.
    Cor2,
    /// Quotient with `|S₀|` colors; paired orbits share translated internal
    /// colorings with `|S₁|+1` colors; `|S|` in total.
    Quotient,
}

#[derive(Debug, Clone)]
pub struct LiftOutput {
    pub coloring: EdgeColoring,
    /// The internal color removed by the merge (Cor1, Cor2), in the
    /// numbering before compaction.
    pub eliminated_color: Option<u32>,
    /// Orbit pairing of the quotient mode: (base orbit, partner orbit).
    pub orbit_pairs: Vec<(VertexId, VertexId)>,
    /// `partner[x]` for vertices of paired orbits (quotient mode).
    pub partner: Vec<Option<VertexId>>,
}

/// Orbits of the collapsed subgroup, indexed by quotient vertex.
pub fn torsion_orbits(quotient: &Quotient) -> Vec<Vec<VertexId>> {
    let mut orbits = vec![Vec::new(); quotient.instance.n_vertices()];
    for (v, &q) in quotient.vertex_map.iter().enumerate() {
        orbits[q].push(v);
    }
    orbits
}

fn internal_edges_of(
    instance: &TorusInstance,
    quotient: &Quotient,
    orbit: &[VertexId],
) -> Vec<EdgeId> {
    let mut out: Vec<EdgeId> = orbit
        .iter()
        .flat_map(|&v| instance.incident(v).iter().copied())
        .filter(|&e| quotient.edge_lift[e].is_none())
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Least coloring of one orbit's internal edges with `k` colors, in the
/// fixed search order of the exact solver.
fn color_orbit_internal(
    instance: &TorusInstance,
    orbit: &[VertexId],
    edges: &[EdgeId],
    k: u32,
) -> Option<Vec<u32>> {
    let local: BTreeMap<VertexId, usize> = orbit.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let list: Vec<(usize, usize)> = edges
        .iter()
        .map(|&e| {
            let ed = instance.edge(e);
            (local[&ed.source], local[&ed.target])
        })
        .collect();
    let mut csp = EdgeCsp::coloring(orbit.len(), list, k);
    csp.node_limit = 5_000_000;
    match csp.solve() {
        CspOutcome::Solved(c) => Some(c),
        _ => None,
    }
}

fn check_quotient_coloring(
    quotient: &Quotient,
    qc: &EdgeColoring,
    max: u32,
) -> Result<(), VizingError> {
    if qc.colors.len() != quotient.instance.edges().len() {
        return Err(VizingError::LiftConflict(
            "coloring length differs from quotient edge count".into(),
        ));
    }
    if !qc.is_total() {
        return Err(VizingError::LiftConflict(
            "quotient coloring is partial".into(),
        ));
    }
    if qc.max_color() > max {
        return Err(VizingError::PaletteMismatch {
            expected: max,
            got: qc.max_color(),
        });
    }
    if let Some(c) = first_shared_conflict(&quotient.instance, qc) {
        return Err(VizingError::LiftConflict(format!("{c:?}")));
    }
    Ok(())
}

fn s_counts(instance: &TorusInstance, quotient: &Quotient) -> (u32, u32) {
    let group = instance.group();
    let mut s0 = 0;
    let mut s1 = 0;
    for (i, p) in group.pairs().iter().enumerate() {
        if quotient.dropped_pairs.contains(&i) {
            s1 += p.degree() as u32;
        } else {
            s0 += p.degree() as u32;
        }
    }
    (s0, s1)
}

/// Lifts a quotient coloring back to the instance.
pub fn lift_through_quotient(
    instance: &TorusInstance,
    quotient: &Quotient,
    quotient_coloring: &EdgeColoring,
    mode: LiftMode,
) -> Result<LiftOutput, VizingError> {
    let (s0, s1) = s_counts(instance, quotient);
    match mode {
        LiftMode::Cor1 | LiftMode::Cor2 => {
            if mode == LiftMode::Cor2 && s1 == 0 {
                return Err(VizingError::EmptyS1);
            }
            check_quotient_coloring(quotient, quotient_coloring, s0 + 1)?;
            let internal_k = if mode == LiftMode::Cor1 { s1 + 1 } else { s1 };
            lift_merge(instance, quotient, quotient_coloring, s0, internal_k)
        }
        LiftMode::Quotient => {
            check_quotient_coloring(quotient, quotient_coloring, s0)?;
            lift_paired(instance, quotient, quotient_coloring, s0, s1)
        }
    }
}

/// Internal colors `1..=k`, lifted colors `k+1..=k+s₀+1`; then the internal
/// color `k` is moved, orbit by orbit, to the least lifted color its
/// quotient vertex misses, and the palette is compacted.
fn lift_merge(
    instance: &TorusInstance,
    quotient: &Quotient,
    qc: &EdgeColoring,
    s0: u32,
    k: u32,
) -> Result<LiftOutput, VizingError> {
    let mut col = EdgeColoring::for_instance(instance, k + s0 + 1);
    for (e, lift) in quotient.edge_lift.iter().enumerate() {
        if let Some(q) = lift {
            col.set(e, k + qc.colors[*q]);
        }
    }
    let orbits = torsion_orbits(quotient);
    for orbit in &orbits {
        let edges = internal_edges_of(instance, quotient, orbit);
        if edges.is_empty() {
            continue;
        }
        let colors = color_orbit_internal(instance, orbit, &edges, k)
            .ok_or(VizingError::InternalSearchFailed { colors: k })?;
        for (&e, &c) in edges.iter().zip(&colors) {
            col.set(e, c);
        }
    }
    let qinst = &quotient.instance;
    let mut eliminated = None;
    if k > 0 {
        let c = k;
        for (qv, orbit) in orbits.iter().enumerate() {
            let present: Vec<u32> = qinst.incident(qv).iter().map(|&e| qc.colors[e]).collect();
            let free = (1..=s0 + 1)
                .find(|x| !present.contains(x))
                .expect("a vertex of degree s₀ misses one of s₀+1 colors");
            for e in internal_edges_of(instance, quotient, orbit) {
                if col.colors[e] == c {
                    col.set(e, k + free);
                }
            }
        }
        eliminated = Some(c);
        for x in col.colors.iter_mut() {
            if *x > c {
                *x -= 1;
            }
        }
        col.palette -= 1;
    }
    Ok(LiftOutput {
        coloring: col,
        eliminated_color: eliminated,
        orbit_pairs: Vec::new(),
        partner: Vec::new(),
    })
}

/// The pairing construction: the last quotient color is a perfect matching
/// of orbits; each base orbit gets an internal coloring that is translated
/// to its partner, and every matching edge takes the one color its ends miss.
fn lift_paired(
    instance: &TorusInstance,
    quotient: &Quotient,
    qc: &EdgeColoring,
    s0: u32,
    s1: u32,
) -> Result<LiftOutput, VizingError> {
    let c = s0;
    let internal_k = s1 + 1;
    let total = s0 + s1;
    let mut col = EdgeColoring::for_instance(instance, total);
    let qinst = &quotient.instance;
    let orbits = torsion_orbits(quotient);

    let mut partner: Vec<Option<VertexId>> = vec![None; instance.n_vertices()];
    let mut cross: Vec<EdgeId> = Vec::new();
    for (e, lift) in quotient.edge_lift.iter().enumerate() {
        let Some(q) = lift else { continue };
        if qc.colors[*q] == c {
            let ed = instance.edge(e);
            partner[ed.source] = Some(ed.target);
            partner[ed.target] = Some(ed.source);
            cross.push(e);
        } else {
            col.set(e, qc.colors[*q]);
        }
    }

    let mut orbit_pairs = Vec::new();
    for (qv, orbit) in orbits.iter().enumerate() {
        let q_edge = qinst
            .incident(qv)
            .iter()
            .copied()
            .find(|&e| qc.colors[e] == c)
            .ok_or_else(|| {
                VizingError::LiftConflict(format!("quotient vertex {qv} misses color {c}"))
            })?;
        let other = qinst.edge(q_edge).other(qv);
        if other < qv {
            continue;
        }
        orbit_pairs.push((qv, other));
        let edges = internal_edges_of(instance, quotient, orbit);
        if !edges.is_empty() {
            let colors = color_orbit_internal(instance, orbit, &edges, internal_k)
                .ok_or(VizingError::InternalSearchFailed { colors: internal_k })?;
            for (&e, &x) in edges.iter().zip(&colors) {
                col.set(e, s0 - 1 + x);
                let ed = instance.edge(e);
                let (ps, pt) = (
                    partner[ed.source].expect("paired orbit"),
                    partner[ed.target].expect("paired orbit"),
                );
                let slot = ed.slot;
                let image = instance
                    .incident(ps)
                    .iter()
                    .copied()
                    .find(|&f| {
                        let fe = instance.edge(f);
                        fe.slot == slot && fe.source == ps && fe.target == pt
                            || (instance.pair_of_slot(slot).involution
                                && fe.slot == slot
                                && fe.source == pt
                                && fe.target == ps)
                    })
                    .ok_or_else(|| {
                        VizingError::LiftConflict("partner map is not a translation".into())
                    })?;
                col.set(image, s0 - 1 + x);
            }
        }
    }
    for &e in &cross {
        let x = instance.edge(e).source;
        let present = col.colors_at(instance, x);
        let free = (s0..=total)
            .find(|y| !present.contains(y))
            .expect("internal degree s₁ misses one of s₁+1 colors");
        col.set(e, free);
    }
    Ok(LiftOutput {
        coloring: col,
        eliminated_color: None,
        orbit_pairs,
        partner,
    })
}

/// The quotient of an instance by `Δ'` with its witness projected.
pub fn project_witness(quotient: &Quotient, witness: &SeparationWitness) -> SeparationWitness {
    let mut part = vec![1u8; quotient.instance.n_vertices()];
    for (v, &q) in quotient.vertex_map.iter().enumerate() {
        part[q] = witness.part[v];
    }
    SeparationWitness {
        n: witness.n,
        part,
        certified_bound: witness.certified_bound,
        tiling: witness.tiling,
    }
}

/// `|S|+1` colors on a finite group, found by the exact solver on the whole
/// graph (one orbit, nothing to lift).
pub fn color_finite_plus_one(instance: &TorusInstance) -> Result<EdgeColoring, VizingError> {
    let group = instance.group();
    if group.rank() != 0 {
        return Err(VizingError::Group(GroupError::DimensionMismatch {
            what: "free rank",
            expected: 0,
            got: group.rank(),
        }));
    }
    let k = instance.degree() as u32 + 1;
    let vertices: Vec<VertexId> = (0..instance.n_vertices()).collect();
    let edges: Vec<EdgeId> = (0..instance.edges().len()).collect();
    let colors = color_orbit_internal(instance, &vertices, &edges, k)
        .ok_or(VizingError::InternalSearchFailed { colors: k })?;
    let mut col = EdgeColoring::for_instance(instance, k);
    for (e, c) in colors.into_iter().enumerate() {
        col.set(e, c);
    }
    Ok(col)
}

/// `|S|` colors on a finite group of even order: collapse an index-2
/// subgroup to two points joined by `|S₀|` parallel edges, color those
/// `1..=|S₀|`, and lift by pairing the two cosets.
pub fn degree_color_finite_even(instance: &TorusInstance) -> Result<LiftOutput, VizingError> {
    let group = instance.group();
    if group.rank() != 0 {
        return Err(VizingError::Group(GroupError::DimensionMismatch {
            what: "free rank",
            expected: 0,
            got: group.rank(),
        }));
    }
    let inv = group.invariants();
    if group.torsion_order() % 2 == 1 {
        return Err(VizingError::OddOrderGroup);
    }
    let axis = (0..inv.len())
        .find(|&i| inv[i] % 2 == 0 && group.pairs().iter().any(|p| p.rep.torsion[i] % 2 == 1))
        .ok_or(VizingError::NotGenerating)?;
    let mut steps = vec![1; inv.len()];
    steps[axis] = 2;
    let quotient = quotient_by_torsion(instance, &SubgroupSpec { steps })?;
    let qinst = &quotient.instance;
    let mut qc = EdgeColoring::for_instance(qinst, qinst.edges().len() as u32);
    for e in 0..qinst.edges().len() {
        qc.set(e, e as u32 + 1);
    }
    lift_through_quotient(instance, &quotient, &qc, LiftMode::Quotient)
}
