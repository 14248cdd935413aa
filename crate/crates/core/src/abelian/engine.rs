//! The zone engine. Every edge of a job starts at its sea protocol; around
//! each witness cell a zone of nested bands walks each generator from a
//! cell protocol to the sea protocol, one band per transition step.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::borrow::{borrow_in_place, OrbitPairing, Region};
use super::frame::Frame;
use super::protocol::{lcm_vec, PairTable, Protocol};
use super::AbelianError;
use crate::coloring::EdgeColoring;
use crate::group::{EdgeId, TorusInstance, VertexId, VertexSet};
use crate::oracle::{first_shared_conflict, Conflict, CspOutcome, EdgeCsp};

/// How the free edges of a band are filled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepFill {
    /// Alternation with parity borrowing across `helper` (a job slot).
    /// Without a table, orbits are paired across helper edges of the
    /// helper's first color.
    Borrow {
        helper: usize,
        pairing: Option<PairTable>,
    },
    /// Exact search over the band's edges of this slot and `other`.
    BandCsp { other: usize },
}

/// One transition: inside its band the slot's edges are refilled so that
/// past the band they follow `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub slot: usize,
    pub target: Protocol,
    pub fill: StepFill,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZonePlan {
    pub cell: Vec<Protocol>,
    pub steps: Vec<Step>,
    /// Radius at which the first band starts.
    pub offset: u32,
}

impl ZonePlan {
    pub fn new(cell: Vec<Protocol>, steps: Vec<Step>) -> Self {
        ZonePlan {
            cell,
            steps,
            offset: 0,
        }
    }

    pub fn radius(&self) -> u32 {
        self.offset + self.steps.iter().map(|s| s.width).sum::<u32>()
    }
}

/// A family of protocols and transitions for the slots of one job, in chart
/// coordinates.
pub trait JobPlan {
    fn name(&self) -> String;
    /// Instance slots covered by the job.
    fn slots(&self) -> Vec<usize>;
    fn chart(&self) -> Vec<Vec<i64>>;
    /// Chart period: every table used by the plan has moduli dividing it.
    fn moduli(&self) -> Vec<i64>;
    fn colors(&self) -> Vec<[u32; 2]>;
    fn sea(&self, base: &[i64]) -> Vec<Protocol>;
    fn zone(&self, cell: &[i64], sea: &[i64]) -> Result<ZonePlan, AbelianError>;
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct JobReport {
    pub name: String,
    pub components: usize,
    pub zones: usize,
    pub radius: u32,
    pub steps: usize,
    pub sites: usize,
    pub band_components: usize,
}

fn validate_zone(
    plan: &dyn JobPlan,
    zone: &ZonePlan,
    sea: &[Protocol],
    chart: &[Vec<i64>],
) -> Result<(), AbelianError> {
    let k = chart.len();
    let colors = plan.colors();
    if zone.cell.len() != k || sea.len() != k {
        return Err(AbelianError::IllegalVariant(
            "protocol count differs from slot count".into(),
        ));
    }
    let mut last: Vec<&Protocol> = zone.cell.iter().collect();
    for s in &zone.steps {
        if s.slot >= k || s.width < 2 {
            return Err(AbelianError::IllegalVariant(format!(
                "bad step on slot {}",
                s.slot
            )));
        }
        match &s.fill {
            StepFill::Borrow { helper, .. } if *helper == s.slot || *helper >= k => {
                return Err(AbelianError::IllegalVariant(
                    "helper must be another slot of the job".into(),
                ))
            }
            StepFill::BandCsp { other } if *other == s.slot || *other >= k => {
                return Err(AbelianError::IllegalVariant(
                    "band fill needs another slot of the job".into(),
                ))
            }
            _ => {}
        }
        last[s.slot] = &s.target;
    }
    for j in 0..k {
        for p in std::iter::once(&zone.cell[j])
            .chain(zone.steps.iter().filter(|s| s.slot == j).map(|s| &s.target))
            .chain(std::iter::once(&sea[j]))
        {
            if p.colors != colors[j] {
                return Err(AbelianError::IllegalVariant(format!(
                    "slot {j} protocol uses foreign colors"
                )));
            }
            p.check_alternates(&chart[j])?;
        }
        if !last[j].same_coloring(&sea[j]) {
            return Err(AbelianError::IllegalVariant(format!(
                "zone plan leaves slot {j} at {:?}, not the sea protocol",
                last[j].kind
            )));
        }
    }
    Ok(())
}

struct Zone {
    plan: ZonePlan,
    /// Start radius of each step.
    starts: Vec<u32>,
}

enum State<'a> {
    Fixed(&'a Protocol),
    Free,
}

impl Zone {
    fn state(&self, j: usize, dmin: u32, dmax: u32) -> State<'_> {
        let mut proto = &self.plan.cell[j];
        for (s, step) in self.plan.steps.iter().enumerate() {
            if step.slot != j {
                continue;
            }
            let r = self.starts[s];
            if dmax >= r + step.width {
                proto = &step.target;
            } else if dmin <= r {
                break;
            } else {
                return State::Free;
            }
        }
        State::Fixed(proto)
    }
}

/// Colors every edge of the job's slots. `cells` are vertex sets of the
/// separation witness's part 0 at scale `n_witness`.
pub fn run_job(
    instance: &TorusInstance,
    plan: &dyn JobPlan,
    cells: &[Vec<VertexId>],
    n_witness: u32,
    coloring: &mut EdgeColoring,
) -> Result<JobReport, AbelianError> {
    let slots = plan.slots();
    let chart = plan.chart();
    let frame = Frame::build(instance, &slots, &chart, &plan.moduli())?;
    let origin = vec![0i64; frame.moduli.len()];
    let sea = plan.sea(&origin);
    let colors = plan.colors();
    let mut report = JobReport {
        name: plan.name(),
        components: frame.roots.len(),
        ..JobReport::default()
    };

    // Cell pieces: a cell intersected with one job component.
    let mut pieces: Vec<Vec<VertexId>> = Vec::new();
    for cell in cells {
        let mut by_comp: BTreeMap<usize, Vec<VertexId>> = BTreeMap::new();
        for &v in cell {
            by_comp.entry(frame.component[v]).or_default().push(v);
        }
        pieces.extend(by_comp.into_values());
    }
    let mut zones = Vec::with_capacity(pieces.len());
    for piece in &pieces {
        let min = *piece.iter().min().expect("nonempty piece");
        let zp = plan.zone(&frame.coords[min], &origin)?;
        validate_zone(plan, &zp, &sea, &chart)?;
        let mut starts = Vec::with_capacity(zp.steps.len());
        let mut r = zp.offset;
        for s in &zp.steps {
            starts.push(r);
            r += s.width;
        }
        report.radius = report.radius.max(r);
        zones.push(Zone { plan: zp, starts });
    }
    if pieces.is_empty() {
        validate_zone(plan, &ZonePlan::new(sea.clone(), Vec::new()), &sea, &chart)?;
    }

    // Zone ownership and job-graph distance, capped at radius + 1.
    let n = instance.n_vertices();
    let mut owner: Vec<Option<(usize, u32)>> = vec![None; n];
    let needed = 2 * report.radius + 3;
    for (p, piece) in pieces.iter().enumerate() {
        let cap = zones[p].plan.radius() + 1;
        let dist = frame.distances(instance, piece, cap);
        for (v, &d) in dist.iter().enumerate() {
            if d == u32::MAX {
                continue;
            }
            if owner[v].is_some() {
                return Err(AbelianError::WitnessTooWeak {
                    n: n_witness,
                    needed,
                });
            }
            owner[v] = Some((p, d));
        }
    }
    report.zones = zones.len();

    // Initial fill.
    let job_slot: BTreeMap<usize, usize> = slots.iter().enumerate().map(|(j, &s)| (s, j)).collect();
    for (e, ed) in instance.edges().iter().enumerate() {
        let Some(&j) = job_slot.get(&ed.slot) else {
            continue;
        };
        let zone = owner[ed.source].or(owner[ed.target]).map(|(p, _)| p);
        let proto = match zone {
            None => &sea[j],
            Some(p) => {
                let d = |v: VertexId| match owner[v] {
                    Some((q, d)) if q == p => d,
                    _ => u32::MAX,
                };
                let (a, b) = (d(ed.source), d(ed.target));
                match zones[p].state(j, a.min(b), a.max(b)) {
                    State::Fixed(pr) => pr,
                    State::Free => {
                        coloring.unset(e);
                        continue;
                    }
                }
            }
        };
        coloring.set(e, proto.color(&frame.coords[ed.source]));
    }

    // Bands.
    for (p, zone) in zones.iter().enumerate() {
        for (s, step) in zone.plan.steps.iter().enumerate() {
            let r = zone.starts[s];
            let within = |v: VertexId, lo: u32, hi: u32| matches!(owner[v], Some((q, d)) if q == p && d >= lo && d <= hi);
            let u = VertexSet::from_predicate(n, |v| within(v, r, r + step.width));
            let a = VertexSet::from_predicate(n, |v| within(v, r, r));
            let b = VertexSet::from_predicate(n, |v| within(v, r + step.width, r + step.width));
            let region = Region { u, a, b };
            let g1 = slots[step.slot];
            match &step.fill {
                StepFill::Borrow { helper, pairing } => {
                    let g2 = slots[*helper];
                    let pairing = match pairing {
                        None => OrbitPairing::uniform(
                            instance,
                            coloring,
                            g2,
                            colors[*helper][0],
                            &region,
                        ),
                        Some(t) => OrbitPairing::from_table(&frame, t, &region),
                    };
                    report.sites += borrow_in_place(
                        instance,
                        coloring,
                        g1,
                        g2,
                        &region,
                        &pairing,
                        colors[step.slot],
                    )?;
                }
                StepFill::BandCsp { other } => {
                    let g2 = slots[*other];
                    let palette = [colors[step.slot], colors[*other]].concat();
                    report.band_components +=
                        band_fill(instance, coloring, &[g1, g2], &region, &palette)?;
                }
            }
            report.steps += 1;
        }
    }

    for (e, ed) in instance.edges().iter().enumerate() {
        if job_slot.contains_key(&ed.slot) && coloring.get(e).is_none() {
            return Err(AbelianError::ConditionViolated {
                condition: 1,
                vertex: ed.source,
                detail: format!("edge {e} left uncolored"),
            });
        }
    }
    if let Some(Conflict::Shared {
        vertex,
        edges,
        color,
    }) = first_shared_conflict(instance, coloring)
    {
        return Err(AbelianError::ConditionViolated {
            condition: 2,
            vertex,
            detail: format!("edges {} and {} share color {color}", edges.0, edges.1),
        });
    }
    Ok(report)
}

/// Exact fill of the band's edges of `slots`, component by component.
fn band_fill(
    instance: &TorusInstance,
    coloring: &mut EdgeColoring,
    slots: &[usize],
    region: &Region,
    palette: &[u32],
) -> Result<usize, AbelianError> {
    let interior =
        |v: VertexId| region.u.contains(v) && !region.a.contains(v) && !region.b.contains(v);
    let free: Vec<EdgeId> = (0..instance.edges().len())
        .filter(|&e| {
            let ed = instance.edge(e);
            slots.contains(&ed.slot) && interior(ed.source) && interior(ed.target)
        })
        .collect();
    for &e in &free {
        coloring.unset(e);
    }
    // Components over shared vertices.
    let mut parent: Vec<usize> = (0..free.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut at: BTreeMap<VertexId, usize> = BTreeMap::new();
    for (i, &e) in free.iter().enumerate() {
        let ed = instance.edge(e);
        for v in [ed.source, ed.target] {
            if let Some(&j) = at.get(&v) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            } else {
                at.insert(v, i);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<EdgeId>> = BTreeMap::new();
    for (i, &e) in free.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(e);
    }
    for edges in groups.values() {
        let mut local: BTreeMap<VertexId, usize> = BTreeMap::new();
        for &e in edges {
            let ed = instance.edge(e);
            for v in [ed.source, ed.target] {
                let next = local.len();
                local.entry(v).or_insert(next);
            }
        }
        let mut blocked = vec![Vec::new(); local.len()];
        for (&v, &i) in &local {
            for &f in instance.incident(v) {
                if let Some(c) = coloring.get(f) {
                    blocked[i].push(c);
                }
            }
        }
        let csp = EdgeCsp {
            n_vertices: local.len(),
            edges: edges
                .iter()
                .map(|&e| {
                    let ed = instance.edge(e);
                    (local[&ed.source], local[&ed.target])
                })
                .collect(),
            allowed: vec![palette.to_vec(); edges.len()],
            blocked,
            symmetric: false,
            node_limit: 20_000_000,
        };
        match csp.solve() {
            CspOutcome::Solved(cs) => {
                for (&e, &c) in edges.iter().zip(&cs) {
                    coloring.set(e, c);
                }
            }
            _ => return Err(AbelianError::BandFillFailed { edges: edges.len() }),
        }
    }
    Ok(groups.len())
}

/// Protocols for some slots together with their chart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolAssignment {
    pub slots: Vec<usize>,
    pub chart: Vec<Vec<i64>>,
    pub protocols: Vec<Protocol>,
}

impl ProtocolAssignment {
    pub fn moduli(&self) -> Vec<i64> {
        let d = self.chart.first().map_or(0, |c| c.len());
        self.protocols
            .iter()
            .fold(vec![1; d], |acc, p| lcm_vec(&acc, &p.moduli))
    }
}

/// Colors exactly `edges` by the assignment; the result is a pure function
/// of the assignment and the edge.
pub fn apply_protocol(
    instance: &TorusInstance,
    assignment: &ProtocolAssignment,
    edges: &[EdgeId],
) -> Result<EdgeColoring, AbelianError> {
    for (p, v) in assignment.protocols.iter().zip(&assignment.chart) {
        p.check_alternates(v)?;
    }
    let frame = Frame::build(
        instance,
        &assignment.slots,
        &assignment.chart,
        &assignment.moduli(),
    )?;
    let palette = assignment
        .protocols
        .iter()
        .flat_map(|p| p.colors)
        .max()
        .unwrap_or(0);
    let mut col = EdgeColoring::for_instance(instance, palette);
    for &e in edges {
        let ed = instance.edge(e);
        let j = frame
            .job_slot(ed.slot)
            .ok_or_else(|| AbelianError::IllegalVariant(format!("edge {e} has no protocol")))?;
        col.set(e, assignment.protocols[j].color(&frame.coords[ed.source]));
    }
    Ok(col)
}
