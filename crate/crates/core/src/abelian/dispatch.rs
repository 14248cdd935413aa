//! Top-level case split for `Δ × Z^d` instances.

use serde::Serialize;

use super::decompose::decompose_generators;
use super::engine::{run_job, JobReport};
use super::rank1::degree_color_rank1;
use super::AbelianError;
use crate::coloring::EdgeColoring;
use crate::group::{quotient_by_torsion, MarkedGroup, SubgroupSpec, TorusInstance};
use crate::vizing::{
    color_finite_plus_one, color_theorem_d_plus_1, degree_color_finite_even, lift_through_quotient,
    project_witness, split_generators, LiftMode,
};
use crate::witness::{cells, SeparationWitness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `d ≥ 2`: jobs on the free quotient, lifted through `Δ`.
    FreeRankTwoPlus,
    /// `d = 1`, `|Δ|` even: the `Z/2 × Z` route.
    RankOneEven,
    /// `d = 1`, `|Δ|` odd: no perfect matching exists, `|S|+1` colors.
    RankOneOdd,
    /// `d = 0`, `|Δ|` even.
    FiniteEven,
    /// `d = 0`, `|Δ|` odd: `|S|+1` colors.
    FiniteOdd,
}

#[derive(Debug, Clone)]
pub struct AbelianColoring {
    pub coloring: EdgeColoring,
    pub branch: Branch,
    pub jobs: Vec<JobReport>,
    pub notes: Vec<String>,
}

/// Whether the generator representatives generate `Δ × Z^d`.
pub fn generates(group: &MarkedGroup) -> bool {
    let inv = group.invariants();
    let t = inv.len();
    let dim = t + group.rank();
    let mut rows: Vec<Vec<i64>> = group
        .pairs()
        .iter()
        .map(|p| {
            p.rep
                .torsion
                .iter()
                .map(|&x| x as i64)
                .chain(p.rep.free.iter().copied())
                .collect()
        })
        .collect();
    for (i, &n) in inv.iter().enumerate() {
        let mut r = vec![0; dim];
        r[i] = n as i64;
        rows.push(r);
    }
    // Row echelon form over Z by repeated Euclidean reduction per column.
    let mut top = 0;
    for col in 0..dim {
        loop {
            let Some(p) = (top..rows.len())
                .filter(|&r| rows[r][col] != 0)
                .min_by_key(|&r| rows[r][col].abs())
            else {
                return false;
            };
            rows.swap(top, p);
            let mut done = true;
            for r in top + 1..rows.len() {
                let f = rows[r][col] / rows[top][col];
                if f != 0 {
                    let pivot = rows[top].clone();
                    for (x, y) in rows[r].iter_mut().zip(&pivot) {
                        *x -= f * y;
                    }
                }
                if rows[r][col] != 0 {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if rows[top][col].abs() != 1 {
            return false;
        }
        top += 1;
    }
    true
}

/// `|S|+1` colors for any instance.
pub fn color_vizing_plus_one(
    instance: &TorusInstance,
    witness: &SeparationWitness,
) -> Result<EdgeColoring, AbelianError> {
    let group = instance.group();
    if !split_generators(group).has_odd_order() {
        let mut c = color_theorem_d_plus_1(instance, witness)?.coloring;
        c.palette = instance.degree() as u32 + 1;
        return Ok(c);
    }
    if group.rank() == 0 {
        return Ok(color_finite_plus_one(instance)?);
    }
    let q = quotient_by_torsion(instance, &SubgroupSpec::whole(group.invariants()))?;
    let qc = color_theorem_d_plus_1(&q.instance, &project_witness(&q, witness))?.coloring;
    Ok(lift_through_quotient(instance, &q, &qc, LiftMode::Cor1)?.coloring)
}

/// `|S|` colors on torsion-free `Z^d`, `d ≥ 2`, one job per generator group.
fn color_free(
    instance: &TorusInstance,
    witness: &SeparationWitness,
) -> Result<(EdgeColoring, Vec<JobReport>), AbelianError> {
    let jobs = decompose_generators(instance.group())?;
    let mut col = EdgeColoring::for_instance(instance, instance.degree() as u32);
    let cells = cells(instance, witness);
    let mut base = 0;
    let mut reports = Vec::new();
    for job in &jobs {
        let plan = job.plan(base)?;
        reports.push(run_job(
            instance,
            plan.as_ref(),
            &cells,
            witness.n,
            &mut col,
        )?);
        base += 2 * job.slots.len() as u32;
    }
    Ok((col, reports))
}

/// `|S|` colors whenever a perfect matching can exist, `|S|+1` otherwise.
pub fn degree_color_abelian(
    instance: &TorusInstance,
    witness: &SeparationWitness,
) -> Result<AbelianColoring, AbelianError> {
    let group = instance.group();
    let inv = group.invariants();
    let even = group.torsion_order() % 2 == 0;
    let degree = instance.degree();
    let mut notes = Vec::new();
    let mut jobs = Vec::new();
    let (coloring, branch) = match group.rank() {
        0 if even => (
            degree_color_finite_even(instance)?.coloring,
            Branch::FiniteEven,
        ),
        0 => {
            notes.push(format!(
                "odd order {}: no perfect matching, {} colors",
                group.torsion_order(),
                degree + 1
            ));
            (color_vizing_plus_one(instance, witness)?, Branch::FiniteOdd)
        }
        1 if !even => {
            notes.push(format!(
                "torsion of odd order {}: no perfect matching respecting the Z-direction parity, {} colors",
                group.torsion_order(),
                degree + 1
            ));
            (
                color_vizing_plus_one(instance, witness)?,
                Branch::RankOneOdd,
            )
        }
        1 => {
            let spec = SubgroupSpec::index_two(inv).expect("even torsion");
            let c = if spec.order(inv) == 1 {
                degree_color_rank1(instance, witness)?
            } else {
                let q = quotient_by_torsion(instance, &spec)?;
                notes.push(format!(
                    "collapsed an index-2 subgroup of order {}",
                    spec.order(inv)
                ));
                let qc = degree_color_rank1(&q.instance, &project_witness(&q, witness))?;
                lift_through_quotient(instance, &q, &qc, LiftMode::Quotient)?.coloring
            };
            (c, Branch::RankOneEven)
        }
        _ => {
            let c = if inv.is_empty() {
                let (c, r) = color_free(instance, witness)?;
                jobs = r;
                c
            } else {
                let q = quotient_by_torsion(instance, &SubgroupSpec::whole(inv))?;
                notes.push(format!(
                    "collapsed the torsion of order {}",
                    group.torsion_order()
                ));
                let (qc, r) = color_free(&q.instance, &project_witness(&q, witness))?;
                jobs = r;
                lift_through_quotient(instance, &q, &qc, LiftMode::Quotient)?.coloring
            };
            (c, Branch::FreeRankTwoPlus)
        }
    };
    Ok(AbelianColoring {
        coloring,
        branch,
        jobs,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{build_torus_instance, make_marked_group, GeneratorSpec};
    use crate::oracle::verify_coloring;
    use crate::witness::build_grid_witness;

    fn inst(
        torsion: &[i64],
        rank: usize,
        gens: &[(&[i64], &[i64])],
        periods: &[u64],
    ) -> TorusInstance {
        let specs: Vec<GeneratorSpec> = gens
            .iter()
            .map(|(t, v)| GeneratorSpec::new(t, v, 1))
            .collect();
        build_torus_instance(make_marked_group(torsion, rank, &specs).unwrap(), periods).unwrap()
    }

    fn check(g: &TorusInstance, n: u32) -> (AbelianColoring, usize) {
        let w = build_grid_witness(g, n).unwrap();
        let out = degree_color_abelian(g, &w).unwrap();
        let report = verify_coloring(g, &out.coloring);
        assert!(report.ok, "{:?}", report.first_conflict);
        let used = report.colors_used();
        (out, used)
    }

    #[test]
    fn generation_check() {
        let g = inst(
            &[],
            2,
            &[
                (&[], &[1, 0]),
                (&[], &[-1, 0]),
                (&[], &[0, 1]),
                (&[], &[0, -1]),
            ],
            &[8, 8],
        );
        assert!(generates(g.group()));
        let g = inst(
            &[],
            2,
            &[
                (&[], &[2, 0]),
                (&[], &[-2, 0]),
                (&[], &[0, 1]),
                (&[], &[0, -1]),
            ],
            &[8, 8],
        );
        assert!(!generates(g.group()));
        let g = inst(
            &[2],
            1,
            &[(&[1], &[1]), (&[1], &[-1]), (&[0], &[2]), (&[0], &[-2])],
            &[8],
        );
        assert!(!generates(g.group()));
        let g = inst(
            &[2],
            1,
            &[(&[1], &[1]), (&[1], &[-1]), (&[0], &[1]), (&[0], &[-1])],
            &[8],
        );
        assert!(generates(g.group()));
    }

    #[test]
    fn standard_z2() {
        let g = inst(
            &[],
            2,
            &[
                (&[], &[1, 0]),
                (&[], &[-1, 0]),
                (&[], &[0, 1]),
                (&[], &[0, -1]),
            ],
            &[24, 24],
        );
        let (out, used) = check(&g, 19);
        assert_eq!(out.branch, Branch::FreeRankTwoPlus);
        assert_eq!(used, 4);
    }

    #[test]
    fn odd_torsion_rank_one() {
        let g = inst(
            &[3],
            1,
            &[(&[0], &[1]), (&[0], &[-1]), (&[1], &[0]), (&[2], &[0])],
            &[10],
        );
        let (out, used) = check(&g, 5);
        assert_eq!(out.branch, Branch::RankOneOdd);
        assert_eq!(out.notes.len(), 1);
        assert!(used <= 5);
    }

    #[test]
    fn single_involution() {
        let g = inst(&[2], 0, &[(&[1], &[])], &[]);
        let (out, used) = check(&g, 1);
        assert_eq!(out.branch, Branch::FiniteEven);
        assert_eq!(used, 1);
    }

    #[test]
    fn rank_one_through_index_two() {
        let g = inst(
            &[4],
            1,
            &[(&[0], &[1]), (&[0], &[-1]), (&[1], &[2]), (&[3], &[-2])],
            &[40],
        );
        let (out, used) = check(&g, 5);
        assert_eq!(out.branch, Branch::RankOneEven);
        assert_eq!(used, 4);
    }

    #[test]
    fn torsion_under_rank_two() {
        let g = inst(
            &[3],
            2,
            &[
                (&[0], &[1, 0]),
                (&[0], &[-1, 0]),
                (&[1], &[0, 1]),
                (&[2], &[0, -1]),
            ],
            &[24, 24],
        );
        let (out, used) = check(&g, 19);
        assert_eq!(out.branch, Branch::FreeRankTwoPlus);
        assert_eq!(used, 4);
    }
}
