//! Plans for jobs on `Z^2` and `Z^3` charts: standard generators, axis
//! aligned multisets and three generators with one relation.

use num_integer::Integer;

use super::decompose::integer_relation;
use super::engine::{run_job, JobPlan, ProtocolAssignment, Step, StepFill, ZonePlan};
use super::protocol::{PairTable, Protocol};
use super::AbelianError;
use crate::coloring::EdgeColoring;
use crate::group::{EdgeId, TorusInstance, VertexId, VertexSet};
use crate::witness::{cells, SeparationWitness};

pub(super) fn colors_of(base: u32, j: usize) -> [u32; 2] {
    let j = j as u32;
    [base + 2 * j + 1, base + 2 * j + 2]
}

/// Drops steps whose target colors exactly like the slot's current protocol.
fn prune(cell: &[Protocol], steps: Vec<Step>) -> Vec<Step> {
    let mut current: Vec<Protocol> = cell.to_vec();
    let mut out = Vec::new();
    for s in steps {
        if !current[s.slot].same_coloring(&s.target) {
            current[s.slot] = s.target.clone();
            out.push(s);
        }
    }
    out
}

pub(super) fn borrow(
    slot: usize,
    target: Protocol,
    helper: usize,
    pairing: Option<PairTable>,
    width: u32,
) -> Step {
    Step {
        slot,
        target,
        fill: StepFill::Borrow { helper, pairing },
        width,
    }
}

/// `±e_i` generators of `Z^k`, one slot per axis, colored by coordinate
/// parity.
#[derive(Debug, Clone)]
pub struct StandardPlan {
    pub slots: Vec<usize>,
    /// `±1`: the chart vector of slot `j` is `signs[j]·e_j`.
    pub signs: Vec<i64>,
    pub color_base: u32,
}

impl StandardPlan {
    fn k(&self) -> usize {
        self.slots.len()
    }

    fn protocols(&self, base: &[i64]) -> Vec<Protocol> {
        (0..self.k())
            .map(|j| Protocol::standard_axis(self.k(), j, base, colors_of(self.color_base, j)))
            .collect()
    }

    /// Every slot following the protocols based at `base`.
    pub fn assignment(&self, base: &[i64]) -> ProtocolAssignment {
        let k = self.k();
        ProtocolAssignment {
            slots: self.slots.clone(),
            chart: (0..k)
                .map(|j| {
                    (0..k)
                        .map(|i| if i == j { self.signs[j] } else { 0 })
                        .collect()
                })
                .collect(),
            protocols: self.protocols(base),
        }
    }

    fn steps(&self, cell: &[i64], target: &[i64]) -> Result<Vec<Step>, AbelianError> {
        let k = self.k();
        let start = self.protocols(cell);
        let goal = self.protocols(target);
        let steps: Vec<Step> = (0..k)
            .map(|i| borrow(i, goal[i].clone(), (i + 1) % k, None, 4))
            .collect();
        let steps = prune(&start, steps);
        if k < 2 && !steps.is_empty() {
            return Err(AbelianError::IllegalVariant(
                "a transition needs a second axis".into(),
            ));
        }
        Ok(steps)
    }
}

impl JobPlan for StandardPlan {
    fn name(&self) -> String {
        format!("standard Z^{}", self.k())
    }

    fn slots(&self) -> Vec<usize> {
        self.slots.clone()
    }

    fn chart(&self) -> Vec<Vec<i64>> {
        (0..self.k())
            .map(|j| {
                let mut v = vec![0; self.k()];
                v[j] = self.signs[j];
                v
            })
            .collect()
    }

    fn moduli(&self) -> Vec<i64> {
        vec![2; self.k()]
    }

    fn colors(&self) -> Vec<[u32; 2]> {
        (0..self.k())
            .map(|j| colors_of(self.color_base, j))
            .collect()
    }

    fn sea(&self, base: &[i64]) -> Vec<Protocol> {
        self.protocols(base)
    }

    fn zone(&self, cell: &[i64], sea: &[i64]) -> Result<ZonePlan, AbelianError> {
        Ok(ZonePlan::new(self.protocols(cell), self.steps(cell, sea)?))
    }
}

/// Generators `(a,0)` and `(0,b)` of `Z^2` with arbitrary multiplicity.
/// Each slot is colored in blocks of its own length along its axis.
#[derive(Debug, Clone)]
pub struct MultPlan {
    pub slots: Vec<usize>,
    /// Chart vector of each slot, `(a,0)` or `(0,b)`.
    pub chart: Vec<[i64; 2]>,
    pub color_base: u32,
}

impl MultPlan {
    pub fn new(
        slots: Vec<usize>,
        chart: Vec<[i64; 2]>,
        color_base: u32,
    ) -> Result<Self, AbelianError> {
        let axes: Vec<Option<usize>> = chart.iter().map(|v| Self::axis_of(*v)).collect();
        if slots.len() != chart.len() || axes.iter().any(|a| a.is_none()) {
            return Err(AbelianError::IllegalVariant(
                "generators must be axis aligned".into(),
            ));
        }
        for axis in 0..2 {
            if !axes.contains(&Some(axis)) {
                return Err(AbelianError::IllegalVariant(format!(
                    "no generator along axis {axis}"
                )));
            }
        }
        Ok(MultPlan {
            slots,
            chart,
            color_base,
        })
    }

    fn axis_of(v: [i64; 2]) -> Option<usize> {
        match (v[0] != 0, v[1] != 0) {
            (true, false) => Some(0),
            (false, true) => Some(1),
            _ => None,
        }
    }

    fn axis(&self, j: usize) -> usize {
        Self::axis_of(self.chart[j]).expect("checked in new")
    }

    fn protocols(&self, base: &[i64]) -> Vec<Protocol> {
        (0..self.slots.len())
            .map(|j| {
                let a = self.axis(j);
                Protocol::axis_block(2, a, self.chart[j][a], base, colors_of(self.color_base, j))
            })
            .collect()
    }
}

impl JobPlan for MultPlan {
    fn name(&self) -> String {
        format!("axis blocks, {} slots", self.slots.len())
    }

    fn slots(&self) -> Vec<usize> {
        self.slots.clone()
    }

    fn chart(&self) -> Vec<Vec<i64>> {
        self.chart.iter().map(|v| v.to_vec()).collect()
    }

    fn moduli(&self) -> Vec<i64> {
        let mut m = vec![1i64; 2];
        for (j, v) in self.chart.iter().enumerate() {
            let a = self.axis(j);
            m[a] = m[a].lcm(&(2 * v[a].abs()));
        }
        m
    }

    fn colors(&self) -> Vec<[u32; 2]> {
        (0..self.slots.len())
            .map(|j| colors_of(self.color_base, j))
            .collect()
    }

    fn sea(&self, base: &[i64]) -> Vec<Protocol> {
        self.protocols(base)
    }

    fn zone(&self, cell: &[i64], sea: &[i64]) -> Result<ZonePlan, AbelianError> {
        let start = self.protocols(cell);
        let goal = self.protocols(sea);
        let helper_on = |axis: usize| {
            (0..self.slots.len())
                .find(|&h| self.axis(h) == axis)
                .expect("both axes")
        };
        let steps = (0..self.slots.len())
            .map(|j| borrow(j, goal[j].clone(), helper_on(1 - self.axis(j)), None, 4))
            .collect();
        Ok(ZonePlan::new(start.clone(), prune(&start, steps)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreeGenCase {
    /// `n = 1`, `b₂` even.
    EvenB2,
    /// `n = 1`, both `b` odd: the middle generator passes through the skew
    /// protocol.
    BothOdd,
    /// `n > 1`, `n ∤ b₂`.
    Sparse,
}

/// Three generators of a rank-2 lattice with `n·δ₃ = b₁·δ₁ + b₂·δ₂`, charted
/// as `δ₁ ↦ (±n,0)`, `δ₂ ↦ (0,±n)`, `δ₃ ↦ (|b₁|,|b₂|)`.
#[derive(Debug, Clone)]
pub struct ThreeGenPlan {
    /// Slots of `δ₁, δ₂, δ₃` after normalization.
    pub slots: [usize; 3],
    pub n: i64,
    pub b1: i64,
    pub b2: i64,
    /// Signs of the original `b₁, b₂`.
    pub signs: [i64; 2],
    pub case: ThreeGenCase,
    pub color_base: u32,
}

impl ThreeGenPlan {
    /// Normalizes the relation, swapping `δ₁` and `δ₂` where the
    /// construction needs it.
    pub fn new(
        slots: [usize; 3],
        n: i64,
        b1: i64,
        b2: i64,
        color_base: u32,
    ) -> Result<Self, AbelianError> {
        if n <= 0 || b1 == 0 || b2 == 0 {
            return Err(AbelianError::IllegalVariant(format!(
                "relation {n}·δ₃ = {b1}·δ₁ + {b2}·δ₂ needs n > 0 and nonzero b"
            )));
        }
        if n.gcd(&b1).gcd(&b2) != 1 {
            return Err(AbelianError::IllegalVariant(
                "relation is not primitive".into(),
            ));
        }
        let (mut slots, mut b1, mut b2) = (slots, b1, b2);
        let swap = if n == 1 {
            b2 % 2 != 0 && b1 % 2 == 0
        } else {
            b2 % n == 0
        };
        if swap {
            slots.swap(0, 1);
            std::mem::swap(&mut b1, &mut b2);
        }
        let case = match (n, b2 % 2 == 0) {
            (1, true) => ThreeGenCase::EvenB2,
            (1, false) => ThreeGenCase::BothOdd,
            _ => ThreeGenCase::Sparse,
        };
        Ok(ThreeGenPlan {
            slots,
            n,
            b1: b1.abs(),
            b2: b2.abs(),
            signs: [b1.signum(), b2.signum()],
            case,
            color_base,
        })
    }

    fn axis_protocol(&self, axis: usize, base: &[i64]) -> Protocol {
        let colors = colors_of(self.color_base, axis);
        if self.n == 1 {
            Protocol::standard_axis(2, axis, base, colors)
        } else {
            Protocol::axis_block(2, axis, self.n, base, colors)
        }
    }

    fn protocols(&self, base: &[i64]) -> Vec<Protocol> {
        vec![
            self.axis_protocol(0, base),
            self.axis_protocol(1, base),
            Protocol::axis_block(2, 0, self.b1, base, colors_of(self.color_base, 2)),
        ]
    }

    /// Pairs `δ₃`-lines across `δ₂` so that `λ = b₂g₁ − b₁g₂ mod 2b₁n`
    /// below `b₁n` pairs forward.
    fn lambda_pairing(&self, base: &[i64]) -> PairTable {
        let (n, b1, b2) = (self.n, self.b1, self.b2);
        PairTable::from_fn(base, vec![2 * b1 * n, 2 * n], |o| {
            if (b2 * o[0] - b1 * o[1]).rem_euclid(2 * b1 * n) < b1 * n {
                1
            } else {
                -1
            }
        })
    }

    /// Pairs columns `{2k, 2k+1}` relative to `base` across `δ₁`.
    fn column_pairing(&self, base: &[i64]) -> PairTable {
        let s = self.signs[0] as i8;
        PairTable::from_fn(base, vec![2, 1], |o| if o[0] == 0 { s } else { -s })
    }

    fn wide(&self) -> u32 {
        4 * (self.b1 + self.b2 + self.n + 1) as u32
    }
}

impl JobPlan for ThreeGenPlan {
    fn name(&self) -> String {
        format!(
            "three generators, n = {}, b = ({}, {})",
            self.n, self.b1, self.b2
        )
    }

    fn slots(&self) -> Vec<usize> {
        self.slots.to_vec()
    }

    fn chart(&self) -> Vec<Vec<i64>> {
        vec![
            vec![self.signs[0] * self.n, 0],
            vec![0, self.signs[1] * self.n],
            vec![self.b1, self.b2],
        ]
    }

    fn moduli(&self) -> Vec<i64> {
        let (n, b1) = (self.n, self.b1);
        match self.case {
            ThreeGenCase::EvenB2 => vec![2 * b1, 2],
            ThreeGenCase::BothOdd => vec![(2 * b1).lcm(&4), 2],
            ThreeGenCase::Sparse => vec![2 * b1 * n, 2 * n],
        }
    }

    fn colors(&self) -> Vec<[u32; 2]> {
        (0..3).map(|j| colors_of(self.color_base, j)).collect()
    }

    fn sea(&self, base: &[i64]) -> Vec<Protocol> {
        self.protocols(base)
    }

    fn zone(&self, cell: &[i64], sea: &[i64]) -> Result<ZonePlan, AbelianError> {
        let start = self.protocols(cell);
        let goal = self.protocols(sea);
        let steps = match self.case {
            ThreeGenCase::EvenB2 => vec![
                borrow(0, goal[0].clone(), 1, None, 4),
                borrow(1, goal[1].clone(), 0, None, 4),
                borrow(2, goal[2].clone(), 1, None, 4),
            ],
            ThreeGenCase::BothOdd => {
                let skew = Protocol::skew(&[sea[0], cell[1]], colors_of(self.color_base, 1));
                let columns = self.column_pairing(sea);
                vec![
                    borrow(0, goal[0].clone(), 1, None, 4),
                    borrow(1, skew, 0, Some(columns.clone()), 4),
                    borrow(
                        2,
                        goal[2].clone(),
                        1,
                        Some(self.lambda_pairing(sea)),
                        self.wide(),
                    ),
                    borrow(1, goal[1].clone(), 0, Some(columns), 4),
                ]
            }
            ThreeGenCase::Sparse => vec![
                borrow(0, goal[0].clone(), 1, None, 4),
                borrow(1, goal[1].clone(), 0, None, 4),
                borrow(
                    2,
                    goal[2].clone(),
                    1,
                    Some(self.lambda_pairing(sea)),
                    self.wide(),
                ),
            ],
        };
        Ok(ZonePlan::new(start.clone(), prune(&start, steps)))
    }
}

/// Least `k ∈ [0, 2n]` with `a₂ + k·b₂` and `a₂ + (k+1)·b₂` both in
/// `[0, n)` modulo `2n`: two consecutive helper edges of the first color.
/// Some `(n, b₂)` with `n ∤ b₂` have no such `k` for some `a₂`, e.g.
/// `n = 3, b₂ = 2, a₂ = 1`; see [`three_gen_site_any`].
pub fn three_gen_site(n: i64, b2: i64, a2: i64) -> Result<i64, AbelianError> {
    let inside = |t: i64| t.rem_euclid(2 * n) < n;
    (0..=2 * n)
        .find(|&k| inside(a2 + k * b2) && inside(a2 + (k + 1) * b2))
        .ok_or(AbelianError::InternalNoSite { n, b2, a2 })
}

/// Least `k ∈ [0, 2n]` where two consecutive helper edges share a color,
/// either one, with that color's index. This is the site the engine uses.
pub fn three_gen_site_any(n: i64, b2: i64, a2: i64) -> Result<(i64, usize), AbelianError> {
    let side = |t: i64| (t.rem_euclid(2 * n) >= n) as usize;
    (0..=2 * n)
        .find(|&k| side(a2 + k * b2) == side(a2 + (k + 1) * b2))
        .map(|k| (k, side(a2 + k * b2)))
        .ok_or(AbelianError::InternalNoSite { n, b2, a2 })
}

/// Slots of a torsion-free instance whose representative's free part
/// satisfies `pred`, with that free part.
fn free_slots(instance: &TorusInstance) -> Result<Vec<(usize, Vec<i64>)>, AbelianError> {
    let g = instance.group();
    if !g.invariants().is_empty() && g.torsion_order() != 1 {
        return Err(AbelianError::IllegalVariant("the group has torsion".into()));
    }
    Ok(instance
        .slots()
        .iter()
        .enumerate()
        .map(|(s, sl)| (s, g.pairs()[sl.pair].rep.free.clone()))
        .collect())
}

/// The plan for `Z^d` with `S = {±e_i}`.
pub fn standard_plan(instance: &TorusInstance) -> Result<StandardPlan, AbelianError> {
    let d = instance.group().rank();
    let slots = free_slots(instance)?;
    if d < 2 {
        return Err(AbelianError::IllegalVariant(
            "standard generators need rank at least 2".into(),
        ));
    }
    if slots.len() != d {
        return Err(AbelianError::IllegalVariant(
            "expected one generator pair per axis".into(),
        ));
    }
    let mut order = vec![None; d];
    for (s, v) in slots {
        let axis = (0..d).find(|&i| v[i].abs() == 1 && v.iter().filter(|&&x| x != 0).count() == 1);
        match axis {
            Some(i) if order[i].is_none() => order[i] = Some((s, v[i])),
            _ => {
                return Err(AbelianError::IllegalVariant(format!(
                    "{v:?} is not a standard generator"
                )))
            }
        }
    }
    let order: Vec<(usize, i64)> = order
        .into_iter()
        .map(|o| o.expect("one per axis"))
        .collect();
    Ok(StandardPlan {
        slots: order.iter().map(|o| o.0).collect(),
        signs: order.iter().map(|o| o.1).collect(),
        color_base: 0,
    })
}

pub(super) fn run_single(
    instance: &TorusInstance,
    plan: &dyn JobPlan,
    witness: &SeparationWitness,
) -> Result<EdgeColoring, AbelianError> {
    let palette = plan.colors().iter().flat_map(|c| *c).max().unwrap_or(0);
    let mut col = EdgeColoring::for_instance(instance, palette);
    run_job(
        instance,
        plan,
        &cells(instance, witness),
        witness.n,
        &mut col,
    )?;
    Ok(col)
}

/// `2d` colors for `Z^d` with standard generators.
pub fn degree_color_standard(
    instance: &TorusInstance,
    witness: &SeparationWitness,
) -> Result<EdgeColoring, AbelianError> {
    run_single(instance, &standard_plan(instance)?, witness)
}

/// `|S|` colors for `Z^2` with axis-aligned generators.
pub fn degree_color_axis_multi(
    instance: &TorusInstance,
    witness: &SeparationWitness,
) -> Result<EdgeColoring, AbelianError> {
    if instance.group().rank() != 2 {
        return Err(AbelianError::IllegalVariant(
            "axis-aligned plans need rank 2".into(),
        ));
    }
    let (slots, chart): (Vec<usize>, Vec<[i64; 2]>) = free_slots(instance)?
        .into_iter()
        .map(|(s, v)| (s, [v[0], v[1]]))
        .unzip();
    run_single(instance, &MultPlan::new(slots, chart, 0)?, witness)
}

/// Six colors for `Z^2` with three pairwise independent generator pairs.
pub fn degree_color_three_gen(
    instance: &TorusInstance,
    witness: &SeparationWitness,
) -> Result<EdgeColoring, AbelianError> {
    let slots = free_slots(instance)?;
    if instance.group().rank() != 2 || slots.len() != 3 {
        return Err(AbelianError::IllegalVariant(
            "three generators of rank 2 expected".into(),
        ));
    }
    let (n, b1, b2) = integer_relation(&slots[0].1, &slots[1].1, &slots[2].1)
        .ok_or_else(|| AbelianError::IllegalVariant("generators are not of rank 2".into()))?;
    let plan = ThreeGenPlan::new([slots[0].0, slots[1].0, slots[2].0], n, b1, b2, 0)?;
    run_single(instance, &plan, witness)
}

/// A fixed transition from `x₀` around one region to `x₁` everywhere else.
struct Fixed<'a> {
    plan: &'a StandardPlan,
    x0: Vec<i64>,
    x1: Vec<i64>,
    /// `(axis, helper axis)` in order.
    axes: Vec<(usize, usize)>,
}

impl JobPlan for Fixed<'_> {
    fn name(&self) -> String {
        format!("transition {:?} -> {:?}", self.x0, self.x1)
    }

    fn slots(&self) -> Vec<usize> {
        self.plan.slots()
    }

    fn chart(&self) -> Vec<Vec<i64>> {
        self.plan.chart()
    }

    fn moduli(&self) -> Vec<i64> {
        self.plan.moduli()
    }

    fn colors(&self) -> Vec<[u32; 2]> {
        self.plan.colors()
    }

    fn sea(&self, _: &[i64]) -> Vec<Protocol> {
        self.plan.protocols(&self.x1)
    }

    fn zone(&self, _: &[i64], _: &[i64]) -> Result<ZonePlan, AbelianError> {
        let start = self.plan.protocols(&self.x0);
        let goal = self.plan.protocols(&self.x1);
        let steps = self
            .axes
            .iter()
            .map(|&(i, h)| borrow(i, goal[i].clone(), h, None, 4))
            .collect();
        let mut zp = ZonePlan::new(start.clone(), prune(&start, steps));
        zp.offset = 1;
        Ok(zp)
    }
}

/// Runs a fixed transition around `u` and checks that `given` agrees with
/// the result on every colored edge inside `B(U,1)` or inside `v`.
fn fixed_transition(
    instance: &TorusInstance,
    given: &EdgeColoring,
    u: &VertexSet,
    v: Option<&VertexSet>,
    x0: &[i64],
    x1: &[i64],
    axes: Vec<(usize, usize)>,
) -> Result<(EdgeColoring, Vec<u32>), AbelianError> {
    let plan = standard_plan(instance)?;
    let d = plan.slots.len();
    if x0.len() != d || x1.len() != d {
        return Err(AbelianError::IllegalVariant(format!(
            "protocols need {d} coordinates"
        )));
    }
    let fixed = Fixed {
        plan: &plan,
        x0: x0.to_vec(),
        x1: x1.to_vec(),
        axes,
    };
    let palette = 2 * d as u32;
    let mut out = EdgeColoring::for_instance(instance, palette);
    let cell: Vec<VertexId> = u.iter().collect();
    let cells = if cell.is_empty() {
        Vec::new()
    } else {
        vec![cell]
    };
    run_job(instance, &fixed, &cells, 0, &mut out)?;
    let dist = instance.distances_from_capped(u, u32::MAX - 1);
    for (e, ed) in instance.edges().iter().enumerate() {
        let Some(c) = given.get(e) else { continue };
        let near = dist[ed.source] <= 1 && dist[ed.target] <= 1;
        let in_v = v.is_some_and(|v| v.contains(ed.source) && v.contains(ed.target));
        if (near || in_v) && out.get(e) != Some(c) {
            return Err(AbelianError::ConditionViolated {
                condition: 1,
                vertex: ed.source,
                detail: format!("edge {e} does not follow the given protocol"),
            });
        }
    }
    Ok((out, dist))
}

fn restrict(instance: &TorusInstance, col: &mut EdgeColoring, dist: &[u32], radius: u32) {
    let edges: Vec<EdgeId> = (0..instance.edges().len()).collect();
    for e in edges {
        let ed = instance.edge(e);
        if dist[ed.source] > radius || dist[ed.target] > radius {
            col.unset(e);
        }
    }
}

/// Moves axis `i` from `x₀` to `x₁` (which may differ from `x₀` only in the
/// parity of coordinate `i`) across `A(U,1,5)`, borrowing across axis `j`.
/// The result covers the edges inside `B(U,5)`.
pub fn transition_standard_axis(
    instance: &TorusInstance,
    coloring: &EdgeColoring,
    u: &VertexSet,
    i: usize,
    j: usize,
    x0: &[i64],
    x1: &[i64],
) -> Result<EdgeColoring, AbelianError> {
    let d = instance.group().rank();
    if d < 2 {
        return Err(AbelianError::IllegalVariant(
            "a transition needs a second axis".into(),
        ));
    }
    if i == j || i >= d || j >= d {
        return Err(AbelianError::IllegalVariant(format!(
            "axes {i} and {j} must be distinct, below {d}"
        )));
    }
    let (mut out, dist) = fixed_transition(instance, coloring, u, None, x0, x1, vec![(i, j)])?;
    restrict(instance, &mut out, &dist, 5);
    Ok(out)
}

/// Moves every axis from `x₀` to `x₁` in turn; the result covers the edges
/// inside `B(U, 4d+1)`.
pub fn transition_full(
    instance: &TorusInstance,
    coloring: &EdgeColoring,
    u: &VertexSet,
    x0: &[i64],
    x1: &[i64],
) -> Result<EdgeColoring, AbelianError> {
    let d = instance.group().rank();
    let axes = (0..d).map(|i| (i, (i + 1) % d)).collect();
    let (mut out, dist) = fixed_transition(instance, coloring, u, None, x0, x1, axes)?;
    restrict(instance, &mut out, &dist, 4 * d as u32 + 1);
    Ok(out)
}

/// Colors the whole instance: `x₀` around `U`, a full transition, and `x₁`
/// everywhere else including `V`.
pub fn merge_regions(
    instance: &TorusInstance,
    coloring: &EdgeColoring,
    u: &VertexSet,
    v: &VertexSet,
    x0: &[i64],
    x1: &[i64],
) -> Result<EdgeColoring, AbelianError> {
    let d = instance.group().rank();
    let needed = 4 * d as u32 + 1;
    let dist = instance.distances_from_capped(u, needed + 1);
    if let Some(distance) = v.iter().map(|w| dist[w]).filter(|&x| x <= needed).min() {
        return Err(AbelianError::TooClose { distance, needed });
    }
    let axes = (0..d).map(|i| (i, (i + 1) % d)).collect();
    Ok(fixed_transition(instance, coloring, u, Some(v), x0, x1, axes)?.0)
}
