//! `Z/2 × Z` with no `(1,0)` generator: protocols per generator category
//! and the transitions between them.

use num_integer::Integer;
use serde::Serialize;

use super::engine::{JobPlan, Step, StepFill, ZonePlan};
use super::protocol::{PairTable, Protocol, ProtocolKind};
use super::zd::{borrow, colors_of, run_single};
use super::AbelianError;
use crate::coloring::EdgeColoring;
use crate::group::{quotient_by_torsion, SubgroupSpec, TorusInstance};
use crate::line::{double_code, plan_code_transition, Code, DoubleCode};
use crate::vizing::{color_theorem_d_plus_1, lift_through_quotient, project_witness, LiftMode};
use crate::witness::SeparationWitness;

/// How one slot is colored, relative to the fixed `(0,n)` and `(1,m)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Rank1Role {
    /// `(0,n')`, `n'` odd: parallel protocol if `m` is even, else alternating.
    Odd,
    /// `(1,m')` with `m' ≡ m (mod 2)`.
    TwoSided,
    /// `(1,b)`, `b` odd, `m` even, `n ∤ b`: the `(0,n)` edges pass through
    /// blocks of `n` offset by `shift ∈ {m, −m}` while the slot moves.
    Mixed { b: i64, shift: i64 },
    /// `(1,b)`, `b` odd, `m` even, `n | b`: the band is filled exactly.
    MixedDivides { b: i64 },
    /// `(0,b)`, `b` even, with `b'' | m`.
    Scaled { unit: i64, twist: bool },
    /// `(0,b)`, `b` even, with `b'' ∤ m`: double codes of length `2b''`.
    Coded { b: i64, b2: i64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct Rank1Plan {
    pub slots: Vec<usize>,
    /// `(ε, z)` image of each slot's representative.
    pub chart: Vec<[i64; 2]>,
    pub roles: Vec<Rank1Role>,
    /// Job index of the fixed `(0,n)` and `(1,m)`.
    pub n_job: usize,
    pub m_job: usize,
    pub n: i64,
    pub m: i64,
    pub color_base: u32,
}

fn two_part(b: i64) -> i64 {
    1 << b.trailing_zeros()
}

/// Some `k ∈ [0, 2n]` where the helper colors at `(0, a + 2kb)` and
/// `(1, a + 2kb + b)` agree under blocks offset by `shift`, for every `a`.
fn blocks_have_sites(n: i64, b: i64, shift: i64) -> bool {
    let first = |t: i64| t.rem_euclid(2 * n) < n;
    (0..2 * n)
        .all(|a| (0..=2 * n).any(|k| first(a + 2 * k * b) == first(a + 2 * k * b + b - shift)))
}

impl Rank1Plan {
    /// `reps` are the `(ε, z)` representatives with `z > 0`.
    pub fn new(
        slots: Vec<usize>,
        reps: &[[i64; 2]],
        color_base: u32,
    ) -> Result<Self, AbelianError> {
        if reps.iter().any(|r| r[1] == 0) {
            return Err(AbelianError::Unsupported(
                "(1,0) generators take the lift route".into(),
            ));
        }
        let g = reps.iter().fold(0i64, |g, r| g.gcd(&r[1]));
        let mut chart: Vec<[i64; 2]> = reps
            .iter()
            .map(|r| [r[0].rem_euclid(2), r[1] / g])
            .collect();
        if !chart.iter().any(|c| c[0] == 0 && c[1] % 2 == 1) {
            for c in &mut chart {
                c[0] = (c[0] + c[1]).rem_euclid(2);
            }
        }
        let pick = |eps: i64, parity: Option<i64>| {
            (0..chart.len())
                .filter(|&j| chart[j][0] == eps && parity.is_none_or(|p| chart[j][1] % 2 == p))
                .min_by_key(|&j| (chart[j][1], j))
        };
        let n_job = pick(0, Some(1)).ok_or(AbelianError::NotGenerating)?;
        let m_job = pick(1, Some(0))
            .or_else(|| pick(1, Some(1)))
            .ok_or(AbelianError::NotGenerating)?;
        let (n, m) = (chart[n_job][1], chart[m_job][1]);
        let mut roles = Vec::with_capacity(chart.len());
        for c in &chart {
            let (eps, z) = (c[0], c[1]);
            let role = match (eps, z % 2 == 1) {
                (0, true) => Rank1Role::Odd,
                (1, odd) if odd == (m % 2 == 1) => Rank1Role::TwoSided,
                (1, _) if z % n == 0 => Rank1Role::MixedDivides { b: z },
                (1, _) => {
                    let shift = [m, -m]
                        .into_iter()
                        .find(|&s| blocks_have_sites(n, z, s))
                        .ok_or(AbelianError::InternalNoSite { n, b2: z, a2: m })?;
                    Rank1Role::Mixed { b: z, shift }
                }
                _ => {
                    let b2 = two_part(z);
                    if m % b2 == 0 {
                        Rank1Role::Scaled {
                            unit: b2,
                            twist: (m / b2) % 2 == 1,
                        }
                    } else {
                        Rank1Role::Coded { b: z, b2 }
                    }
                }
            };
            roles.push(role);
        }
        Ok(Rank1Plan {
            slots,
            chart,
            roles,
            n_job,
            m_job,
            n,
            m,
            color_base,
        })
    }

    fn colors(&self, j: usize) -> [u32; 2] {
        colors_of(self.color_base, j)
    }

    fn protocol(&self, j: usize, base: &[i64]) -> Protocol {
        let colors = self.colors(j);
        match &self.roles[j] {
            Rank1Role::Odd if self.m % 2 == 0 => Protocol::parallel(base, colors),
            Rank1Role::Odd => Protocol::alternating(base, colors),
            Rank1Role::TwoSided | Rank1Role::Mixed { .. } | Rank1Role::MixedDivides { .. } => {
                Protocol::two_sided(base, colors)
            }
            Rank1Role::Scaled { unit, twist } => Protocol::scaled(*unit, *twist, base, colors),
            Rank1Role::Coded { b2, .. } => {
                Protocol::coded(&Code::constant(*b2 as usize, 5), base, colors)
            }
        }
    }

    fn wide(&self, b: i64) -> u32 {
        4 * (b + self.n + self.m + 1) as u32
    }
}

/// Row-dependent double codes: row 0 by `rows[0]`, row 1 by sub-orbit
/// codes `sub[r]` read at `(z − r)/q`, all relative to `base`.
fn coded_table(
    colors: [u32; 2],
    base: &[i64],
    row0: &DoubleCode,
    sub: &[DoubleCode],
    b: i64,
) -> Protocol {
    let q = sub.len() as i64;
    Protocol::from_fn(ProtocolKind::Table, colors, base, vec![2, 2 * b], |o| {
        let c = if o[0] == 0 {
            row0.at(o[1])
        } else {
            let r = o[1] % q;
            sub[r as usize].at((o[1] - r) / q)
        };
        c == 6
    })
}

impl Rank1Plan {
    /// Steps moving a coded slot from base `z = beta` to `beta + 1`.
    fn coded_shift(&self, j: usize, b: i64, b2: i64, beta: i64) -> Result<Vec<Step>, AbelianError> {
        let colors = self.colors(j);
        let base = [0, beta];
        let m = self.m;
        let s = if m.rem_euclid(2 * b2) < b2 { m } else { -m };
        let sgn = s.signum() as i8;
        let flip_at = |k: i64| {
            let mut c = Code::constant(b2 as usize, 5);
            let k = k.rem_euclid(b2) as usize;
            c.entries[k] = 6;
            c
        };
        let row0 = double_code(&flip_at(0));
        let row1 = double_code(&flip_at(s));
        let s_mod = s.rem_euclid(b2);
        let pair1 = PairTable::from_fn(&base, vec![2, b2], |o| match (o[0], o[1]) {
            (0, 0) => sgn,
            (1, x) if x == s_mod => -sgn,
            _ => 0,
        });
        let q = b.gcd(&self.n);
        let (bp, np) = (b / q, self.n / q);
        // Sub-orbit codes of row 1 before and after step 2.
        let local =
            |dc: &DoubleCode, r: i64| Code::new((0..bp).map(|k| dc.at(r + k * q)).collect());
        let mut sub: Vec<Code> = (0..q).map(|r| local(&row1, r)).collect();
        let goal: Vec<Code> = (0..q).map(|r| local(&row0, r)).collect();
        let plans = (0..q as usize)
            .map(|r| plan_code_transition(&sub[r], &goal[r], np as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let doubles = |sub: &[Code]| sub.iter().map(double_code).collect::<Vec<_>>();
        let mut steps = vec![borrow(
            j,
            coded_table(colors, &base, &row0, &doubles(&sub), b),
            self.m_job,
            Some(pair1),
            4,
        )];
        let rounds = plans.iter().map(|p| p.len()).max().unwrap_or(0);
        for i in 0..rounds {
            let mut lines: Vec<(i64, i8)> = Vec::new();
            for (r, plan) in plans.iter().enumerate() {
                if let Some(mv) = plan.get(i) {
                    let (r1, r2) = mv.orbits;
                    lines.push((r as i64 + r1 as i64 * q, 1));
                    lines.push((r as i64 + r2 as i64 * q, -1));
                    sub[r] = mv.code.clone();
                }
            }
            let pairing = PairTable::from_fn(&base, vec![2, b], |o| {
                if o[0] == 0 {
                    return 0;
                }
                lines.iter().find(|l| l.0 == o[1]).map_or(0, |l| l.1)
            });
            steps.push(borrow(
                j,
                coded_table(colors, &base, &row0, &doubles(&sub), b),
                self.n_job,
                Some(pairing),
                4,
            ));
        }
        Ok(steps)
    }
}

impl JobPlan for Rank1Plan {
    fn name(&self) -> String {
        format!("rank one, n = {}, m = {}", self.n, self.m)
    }

    fn slots(&self) -> Vec<usize> {
        self.slots.clone()
    }

    fn chart(&self) -> Vec<Vec<i64>> {
        self.chart.iter().map(|c| c.to_vec()).collect()
    }

    fn moduli(&self) -> Vec<i64> {
        let mut z = 2i64;
        for role in &self.roles {
            z = match role {
                Rank1Role::Mixed { b, .. } | Rank1Role::MixedDivides { b } => {
                    z.lcm(&(2 * b)).lcm(&(2 * self.n))
                }
                Rank1Role::Coded { b, .. } => z.lcm(&(2 * b)),
                Rank1Role::Scaled { unit, .. } => z.lcm(&(2 * unit)),
                _ => z,
            };
        }
        vec![2, z]
    }

    fn colors(&self) -> Vec<[u32; 2]> {
        (0..self.slots.len()).map(|j| self.colors(j)).collect()
    }

    fn sea(&self, base: &[i64]) -> Vec<Protocol> {
        (0..self.slots.len())
            .map(|j| self.protocol(j, base))
            .collect()
    }

    fn zone(&self, cell: &[i64], sea: &[i64]) -> Result<ZonePlan, AbelianError> {
        let start = self.sea(cell);
        let goal = self.sea(sea);
        let mut current = start.clone();
        let mut steps: Vec<Step> = Vec::new();
        let push = |steps: &mut Vec<Step>, current: &mut Vec<Protocol>, s: Step| {
            if !current[s.slot].same_coloring(&s.target) {
                current[s.slot] = s.target.clone();
                steps.push(s);
            }
        };
        let k = self.slots.len();
        for j in 0..k {
            if self.roles[j] == Rank1Role::Odd {
                push(
                    &mut steps,
                    &mut current,
                    borrow(j, goal[j].clone(), self.m_job, None, 4),
                );
            }
        }
        for j in 0..k {
            if self.roles[j] == Rank1Role::TwoSided {
                push(
                    &mut steps,
                    &mut current,
                    borrow(j, goal[j].clone(), self.n_job, None, 4),
                );
            }
        }
        for j in 0..k {
            if current[j].same_coloring(&goal[j]) {
                continue;
            }
            match self.roles[j] {
                Rank1Role::Mixed { b, shift } => {
                    let nj = self.n_job;
                    let blocks = Protocol::blocks(self.n, shift, sea, self.colors(nj));
                    let sgn = shift.signum() as i8;
                    let columns =
                        PairTable::from_fn(sea, vec![2, 1], |o| if o[0] == 0 { sgn } else { -sgn });
                    push(
                        &mut steps,
                        &mut current,
                        borrow(nj, blocks, self.m_job, Some(columns.clone()), 4),
                    );
                    let lambda = self.lambda_pairing(b, sea);
                    push(
                        &mut steps,
                        &mut current,
                        borrow(j, goal[j].clone(), nj, Some(lambda), self.wide(b)),
                    );
                    push(
                        &mut steps,
                        &mut current,
                        borrow(nj, goal[nj].clone(), self.m_job, Some(columns), 4),
                    );
                }
                Rank1Role::MixedDivides { b } => {
                    let step = Step {
                        slot: j,
                        target: goal[j].clone(),
                        fill: StepFill::BandCsp { other: self.n_job },
                        width: self.wide(b),
                    };
                    push(&mut steps, &mut current, step);
                }
                Rank1Role::Scaled { .. } => {
                    push(
                        &mut steps,
                        &mut current,
                        borrow(j, goal[j].clone(), self.m_job, None, 4),
                    );
                }
                Rank1Role::Coded { b, b2 } => {
                    let t = (sea[1] - cell[1]).rem_euclid(2 * b2);
                    for i in 0..t {
                        for s in self.coded_shift(j, b, b2, cell[1] + i)? {
                            push(&mut steps, &mut current, s);
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(ZonePlan::new(start, steps))
    }
}

impl Rank1Plan {
    /// Pairs `(1,b)`-orbits across `(0,n)`: the orbit invariant
    /// `λ = z − ε·b mod 2b` walks a cycle of even length `2b/q` under `+n`.
    fn lambda_pairing(&self, b: i64, base: &[i64]) -> PairTable {
        let n = self.n;
        let q = n.gcd(&b);
        let len = 2 * b / q;
        let step = n / q;
        let inv = (1..len)
            .find(|&x| (x * step).rem_euclid(len) == 1)
            .unwrap_or(1);
        PairTable::from_fn(base, vec![2, 2 * b], |o| {
            let lambda = (o[1] - o[0] * b).rem_euclid(2 * b);
            let r = lambda % q;
            let j = (((lambda - r) / q) * inv).rem_euclid(len);
            if j % 2 == 0 {
                1
            } else {
                -1
            }
        })
    }
}

/// The plan for an instance of `Z/2 × Z` without `(1,0)` generators.
pub fn rank1_plan(instance: &TorusInstance) -> Result<Rank1Plan, AbelianError> {
    let g = instance.group();
    if g.invariants() != [2] || g.rank() != 1 {
        return Err(AbelianError::IllegalVariant("expected Z/2 × Z".into()));
    }
    let reps: Vec<[i64; 2]> = instance
        .slots()
        .iter()
        .map(|sl| {
            let r = &g.pairs()[sl.pair].rep;
            [r.torsion[0] as i64, r.free[0]]
        })
        .collect();
    Rank1Plan::new((0..reps.len()).collect(), &reps, 0)
}

/// `|S|` colors on `Z/2 × Z`. With `(1,0) ∈ S` the torsion is collapsed and
/// the line coloring lifted with the `(1,0)` edges as internal colors.
pub fn degree_color_rank1(
    instance: &TorusInstance,
    witness: &SeparationWitness,
) -> Result<EdgeColoring, AbelianError> {
    let g = instance.group();
    if g.invariants() != [2] || g.rank() != 1 {
        return Err(AbelianError::IllegalVariant("expected Z/2 × Z".into()));
    }
    if g.pairs().iter().any(|p| p.rep.free[0] == 0) {
        let q = quotient_by_torsion(instance, &SubgroupSpec::whole(g.invariants()))?;
        let qc = color_theorem_d_plus_1(&q.instance, &project_witness(&q, witness))?.coloring;
        return Ok(lift_through_quotient(instance, &q, &qc, LiftMode::Cor2)?.coloring);
    }
    run_single(instance, &rank1_plan(instance)?, witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abelian::engine::{run_job, JobReport};
    use crate::group::{build_torus_instance, make_marked_group, GeneratorSpec, VertexId};
    use crate::oracle::verify_coloring;

    fn z2z(period: u64, gens: &[[i64; 2]]) -> TorusInstance {
        let specs: Vec<GeneratorSpec> = gens
            .iter()
            .flat_map(|g| {
                [
                    GeneratorSpec::new(&[g[0]], &[g[1]], 1),
                    GeneratorSpec::new(&[g[0]], &[-g[1]], 1),
                ]
            })
            .collect();
        build_torus_instance(make_marked_group(&[2], 1, &specs).unwrap(), &[period]).unwrap()
    }

    fn interval(inst: &TorusInstance, from: i64, len: i64) -> Vec<VertexId> {
        rows(inst, &[0, 1], from, len)
    }

    fn rows(inst: &TorusInstance, rows: &[i64], from: i64, len: i64) -> Vec<VertexId> {
        let mut v: Vec<VertexId> = rows
            .iter()
            .flat_map(|&e| (0..len).map(move |z| (e, from + z)))
            .map(|(e, z)| inst.vertex_at(&[e, z]))
            .collect();
        v.sort();
        v
    }

    /// Runs one zone around `[from, from+len)` on both rows.
    fn run(inst: &TorusInstance, from: i64, len: i64) -> JobReport {
        run_cell(inst, interval(inst, from, len))
    }

    fn run_cell(inst: &TorusInstance, cell: Vec<VertexId>) -> JobReport {
        let plan = rank1_plan(inst).unwrap();
        let palette = 2 * inst.slots().len() as u32;
        let mut col = EdgeColoring::for_instance(inst, palette);
        let job = run_job(inst, &plan, &[cell], 0, &mut col).unwrap();
        let report = verify_coloring(inst, &col);
        assert!(report.ok, "{:?}", report.first_conflict);
        assert_eq!(report.colors_used(), palette as usize);
        job
    }

    fn role(inst: &TorusInstance, plan: &Rank1Plan, rep: [i64; 2]) -> Rank1Role {
        let j = inst
            .slots()
            .iter()
            .position(|sl| {
                let r = &inst.group().pairs()[sl.pair].rep;
                [r.torsion[0] as i64, r.free[0]] == rep
            })
            .unwrap();
        plan.roles[j].clone()
    }

    #[test]
    fn roles_of_basic_pair() {
        let plan = rank1_plan(&z2z(40, &[[0, 1], [1, 2]])).unwrap();
        assert_eq!(plan.roles, vec![Rank1Role::Odd, Rank1Role::TwoSided]);
        assert!(matches!(
            rank1_plan(&z2z(40, &[[1, 1], [0, 2]])),
            Err(AbelianError::NotGenerating)
        ));
        assert_eq!((plan.n, plan.m), (1, 2));
        // Without a (0, odd) generator the chart is twisted.
        let plan = rank1_plan(&z2z(40, &[[1, 1], [1, 2]])).unwrap();
        assert_eq!(plan.chart[plan.n_job], [0, 1]);
        assert_eq!(plan.chart[plan.m_job], [1, 2]);
    }

    #[test]
    fn basic_pairs_every_offset() {
        for gens in [[[0, 1], [1, 1]], [[0, 1], [1, 2]], [[0, 3], [1, 2]]] {
            let inst = z2z(48, &gens);
            for from in 0..4 {
                run(&inst, from, 3);
            }
        }
    }

    #[test]
    fn mixed_parity_three_steps() {
        let inst = z2z(120, &[[0, 5], [1, 2], [1, 3]]);
        let plan = rank1_plan(&inst).unwrap();
        assert!(matches!(
            role(&inst, &plan, [1, 3]),
            Rank1Role::Mixed { b: 3, .. }
        ));
        for from in [0, 1, 7] {
            run(&inst, from, 2);
            // A cell rooted on the odd row flips every two-sided slot.
            let job = run_cell(&inst, rows(&inst, &[1], from, 3));
            assert!(job.steps >= 3, "{job:?}");
        }
    }

    #[test]
    fn mixed_parity_divides() {
        let inst = z2z(96, &[[0, 1], [1, 2], [1, 3]]);
        let plan = rank1_plan(&inst).unwrap();
        assert_eq!(role(&inst, &plan, [1, 3]), Rank1Role::MixedDivides { b: 3 });
        for from in [0, 1, 5] {
            run(&inst, from, 2);
            let job = run_cell(&inst, rows(&inst, &[1], from, 3));
            assert!(job.band_components > 0, "{job:?}");
        }
    }

    #[test]
    fn even_scaled() {
        let inst = z2z(64, &[[0, 1], [1, 2], [0, 2]]);
        let plan = rank1_plan(&inst).unwrap();
        assert_eq!(
            role(&inst, &plan, [0, 2]),
            Rank1Role::Scaled {
                unit: 2,
                twist: true
            }
        );
        for from in 0..4 {
            run(&inst, from, 2);
        }
    }

    #[test]
    fn even_coded() {
        let inst = z2z(400, &[[0, 1], [1, 1], [0, 4]]);
        let plan = rank1_plan(&inst).unwrap();
        assert_eq!(role(&inst, &plan, [0, 4]), Rank1Role::Coded { b: 4, b2: 4 });
        let steps: Vec<usize> = (0..8).map(|from| run(&inst, from, 2).steps).collect();
        // Seven unit shifts at the farthest offset, each a flip plus game moves.
        assert!(steps[1] > steps[7] && steps[7] > 0, "{steps:?}");
        let inst = z2z(480, &[[0, 3], [1, 1], [0, 6]]);
        for from in 0..4 {
            run(&inst, from, 2);
        }
    }

    #[test]
    fn cor2_route_with_one_zero() {
        let specs = [
            GeneratorSpec::new(&[1], &[0], 1),
            GeneratorSpec::new(&[0], &[1], 1),
            GeneratorSpec::new(&[0], &[-1], 1),
        ];
        let inst =
            build_torus_instance(make_marked_group(&[2], 1, &specs).unwrap(), &[30]).unwrap();
        let w = crate::witness::build_grid_witness(&inst, 5).unwrap();
        let col = degree_color_rank1(&inst, &w).unwrap();
        let report = verify_coloring(&inst, &col);
        assert!(report.ok);
        assert_eq!(report.colors_used(), 3);
    }
}
