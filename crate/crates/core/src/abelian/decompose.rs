//! Splits the generators of a free abelian group into jobs: pairs of
//! collinear classes and at most one triple.

use std::collections::BTreeMap;

use num_integer::Integer;
use serde::Serialize;

use super::engine::JobPlan;
use super::zd::{MultPlan, StandardPlan, ThreeGenPlan};
use super::AbelianError;
use crate::group::MarkedGroup;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum JobShape {
    /// Two classes: an axis-aligned rank-2 job.
    Mult,
    /// Three independent generators: standard `Z^3`.
    Standard3,
    /// Three generators with `n·δ₃ = b₁·δ₁ + b₂·δ₂`.
    ThreeGen { n: i64, b1: i64, b2: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Job {
    pub shape: JobShape,
    pub slots: Vec<usize>,
    /// Image of each slot's representative under the job's isomorphism.
    pub chart: Vec<Vec<i64>>,
}

impl Job {
    pub fn plan(&self, color_base: u32) -> Result<Box<dyn JobPlan>, AbelianError> {
        Ok(match self.shape {
            JobShape::Mult => {
                let chart = self.chart.iter().map(|v| [v[0], v[1]]).collect();
                Box::new(MultPlan::new(self.slots.clone(), chart, color_base)?)
            }
            JobShape::Standard3 => Box::new(StandardPlan {
                slots: self.slots.clone(),
                signs: vec![1; 3],
                color_base,
            }),
            JobShape::ThreeGen { n, b1, b2 } => Box::new(ThreeGenPlan::new(
                [self.slots[0], self.slots[1], self.slots[2]],
                n,
                b1,
                b2,
                color_base,
            )?),
        })
    }
}

fn gcd_all(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, x| g.gcd(x))
}

/// Primitive relation `n·v₃ = b₁·v₁ + b₂·v₂` with `n > 0`, or `None` when
/// `v₁, v₂` are dependent or the three vectors are independent.
pub fn integer_relation(v1: &[i64], v2: &[i64], v3: &[i64]) -> Option<(i64, i64, i64)> {
    let d = v1.len();
    let minor = |a: &[i64], b: &[i64], p: usize, q: usize| a[p] * b[q] - a[q] * b[p];
    let (p, q) = (0..d)
        .flat_map(|p| (p + 1..d).map(move |q| (p, q)))
        .find(|&(p, q)| minor(v1, v2, p, q) != 0)?;
    let mut n = minor(v1, v2, p, q);
    let mut b1 = minor(v3, v2, p, q);
    let mut b2 = minor(v1, v3, p, q);
    if n < 0 {
        (n, b1, b2) = (-n, -b1, -b2);
    }
    let g = gcd_all(&[n, b1, b2]);
    let (n, b1, b2) = (n / g, b1 / g, b2 / g);
    (0..d)
        .all(|i| n * v3[i] == b1 * v1[i] + b2 * v2[i])
        .then_some((n, b1, b2))
}

/// Primitive direction with first nonzero entry positive, and the scalar.
fn direction(v: &[i64]) -> (Vec<i64>, i64) {
    let g = gcd_all(v);
    let lead = v.iter().find(|&&x| x != 0).copied().unwrap_or(1);
    let g = if lead < 0 { -g } else { g };
    (v.iter().map(|x| x / g).collect(), g)
}

type Class = Vec<(usize, i64)>;

fn pair_job(a: &Class, b: &Class) -> Job {
    let ga = gcd_all(&a.iter().map(|x| x.1).collect::<Vec<_>>());
    let gb = gcd_all(&b.iter().map(|x| x.1).collect::<Vec<_>>());
    let mut slots = Vec::new();
    let mut chart = Vec::new();
    for &(s, k) in a {
        slots.push(s);
        chart.push(vec![k / ga, 0]);
    }
    for &(s, k) in b {
        slots.push(s);
        chart.push(vec![0, k / gb]);
    }
    Job {
        shape: JobShape::Mult,
        slots,
        chart,
    }
}

/// Partitions the slots of `group` (free parts of the representatives) into
/// jobs. Slots are numbered as in [`MarkedGroup::slots`].
pub fn decompose_generators(group: &MarkedGroup) -> Result<Vec<Job>, AbelianError> {
    let d = group.rank();
    if d < 2 {
        return Err(AbelianError::IllegalVariant(
            "decomposition needs rank at least 2".into(),
        ));
    }
    let mut classes: BTreeMap<Vec<i64>, Class> = BTreeMap::new();
    let mut free: Vec<Vec<i64>> = Vec::new();
    for (s, sl) in group.slots().iter().enumerate() {
        let v = group.pairs()[sl.pair].rep.free.clone();
        if v.iter().all(|&x| x == 0) {
            return Err(AbelianError::IllegalVariant(format!(
                "slot {s} has no free part"
            )));
        }
        let (u, k) = direction(&v);
        classes.entry(u).or_default().push((s, k));
        free.push(v);
    }
    let mut classes: Vec<Class> = classes.into_values().collect();
    if classes.len() < 2 {
        return Err(AbelianError::SingleClass);
    }
    let mut jobs = Vec::new();
    if classes.len() % 2 == 1 {
        let mut triple: Vec<Class> = classes.drain(..3).collect();
        loop {
            if triple.iter().all(|c| c.len() == 1) {
                jobs.push(triple_job(
                    [triple[0][0].0, triple[1][0].0, triple[2][0].0],
                    &free,
                )?);
                break;
            }
            let i = (0..3)
                .max_by_key(|&i| (triple[i].len(), std::cmp::Reverse(i)))
                .unwrap();
            let j = (0..3)
                .filter(|&j| j != i)
                .max_by_key(|&j| (triple[j].len(), std::cmp::Reverse(j)))
                .unwrap();
            let a = vec![triple[i].pop().unwrap()];
            let b = vec![triple[j].pop().unwrap()];
            jobs.push(pair_job(&a, &b));
            if triple[j].is_empty() {
                let rest: Vec<&Class> = triple.iter().filter(|c| !c.is_empty()).collect();
                jobs.push(pair_job(rest[0], rest[1]));
                break;
            }
        }
    }
    for pair in classes.chunks(2) {
        jobs.push(pair_job(&pair[0], &pair[1]));
    }
    Ok(jobs)
}

fn triple_job(slots: [usize; 3], free: &[Vec<i64>]) -> Result<Job, AbelianError> {
    let [a, b, c] = slots.map(|s| free[s].as_slice());
    match integer_relation(a, b, c) {
        None => Ok(Job {
            shape: JobShape::Standard3,
            slots: slots.to_vec(),
            chart: vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
        }),
        Some((n, b1, b2)) => Ok(Job {
            shape: JobShape::ThreeGen { n, b1, b2 },
            slots: slots.to_vec(),
            chart: vec![
                vec![b1.signum() * n, 0],
                vec![0, b2.signum() * n],
                vec![b1.abs(), b2.abs()],
            ],
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_marked_group, GeneratorSpec};

    fn group(d: usize, gens: &[Vec<i64>]) -> MarkedGroup {
        let specs: Vec<GeneratorSpec> = gens
            .iter()
            .flat_map(|g| {
                let neg: Vec<i64> = g.iter().map(|x| -x).collect();
                [
                    GeneratorSpec::new(&[], g, 1),
                    GeneratorSpec::new(&[], &neg, 1),
                ]
            })
            .collect();
        make_marked_group(&[], d, &specs).unwrap()
    }

    #[test]
    fn relation_of_diagonal() {
        assert_eq!(integer_relation(&[1, 0], &[0, 1], &[1, 1]), Some((1, 1, 1)));
        assert_eq!(integer_relation(&[2, 0], &[0, 2], &[1, 3]), Some((2, 1, 3)));
        assert_eq!(integer_relation(&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]), None);
        assert_eq!(integer_relation(&[1, 1], &[2, 2], &[0, 1]), None);
    }

    #[test]
    fn standard_z2_is_one_pair() {
        let jobs = decompose_generators(&group(2, &[vec![1, 0], vec![0, 1]])).unwrap();
        assert_eq!(jobs.len(), 1);
        assert_eq!(jobs[0].shape, JobShape::Mult);
    }

    #[test]
    fn standard_z3_is_one_triple() {
        let g = group(3, &[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        let jobs = decompose_generators(&g).unwrap();
        assert_eq!(jobs.len(), 1);
        assert_eq!(jobs[0].shape, JobShape::Standard3);
    }

    #[test]
    fn three_gens_relation() {
        let jobs = decompose_generators(&group(2, &[vec![1, 0], vec![0, 1], vec![1, 1]])).unwrap();
        assert_eq!(jobs.len(), 1);
        assert_eq!(jobs[0].shape, JobShape::ThreeGen { n: 1, b1: 1, b2: 1 });
    }

    #[test]
    fn collinear_is_single_class() {
        let err = decompose_generators(&group(2, &[vec![1, 1], vec![2, 2]])).unwrap_err();
        assert_eq!(err, AbelianError::SingleClass);
    }

    #[test]
    fn multiplicities_reduce_to_pairs() {
        let g = group(
            2,
            &[vec![1, 0], vec![2, 0], vec![0, 1], vec![0, 3], vec![1, 1]],
        );
        let jobs = decompose_generators(&g).unwrap();
        let mut covered: Vec<usize> = jobs.iter().flat_map(|j| j.slots.clone()).collect();
        covered.sort();
        assert_eq!(covered, (0..g.slots().len()).collect::<Vec<_>>());
        for j in &jobs {
            j.plan(0).unwrap();
        }
    }
}
