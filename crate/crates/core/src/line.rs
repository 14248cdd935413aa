//! One-dimensional tools: sparse third colors on cycles, greedy matchings,
//! the path relabeling game, and transitions between codes.

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{EdgeId, TorusInstance, VertexId, VertexSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LineError {
    #[error("odd cycle of length {len} has no edge inside the region")]
    OddCycleNoV { len: usize },
    #[error("sequence too short: {0}")]
    TooShort(usize),
    #[error("labeling does not satisfy the parity hypothesis")]
    HypothesisViolated,
    #[error("double code differs at {k} and {k} + n'")]
    DoubleCodeMismatch { k: usize },
    #[error("codes differ in {count} entries, an odd number")]
    OddDifference { count: usize },
    #[error("bad parameters: {0}")]
    BadParameters(String),
}

/// One orbit cycle of a single generator: `vertices[k+1] = γ·vertices[k]`
/// and `edges[k]` joins `vertices[k]` to `vertices[k+1]` (indices mod len).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleOrbit {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
}

impl CycleOrbit {
    pub fn through(instance: &TorusInstance, slot: usize, start: VertexId) -> Self {
        let mut vertices = vec![start];
        let mut edges = Vec::new();
        let mut v = start;
        loop {
            edges.push(instance.out_edge(v, slot));
            v = instance.step(v, slot, true);
            if v == start {
                break;
            }
            vertices.push(v);
        }
        CycleOrbit { vertices, edges }
    }

    /// All orbit cycles of a slot, each starting at its least vertex.
    pub fn all(instance: &TorusInstance, slot: usize) -> Vec<Self> {
        let mut seen = vec![false; instance.n_vertices()];
        let mut out = Vec::new();
        for v in 0..instance.n_vertices() {
            if seen[v] {
                continue;
            }
            let c = Self::through(instance, slot, v);
            for &u in &c.vertices {
                seen[u] = true;
            }
            out.push(c);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Whether the edge at position `k` has both endpoints in `v`.
    pub fn edge_inside(&self, k: usize, v: &VertexSet) -> bool {
        let n = self.vertices.len();
        v.contains(self.vertices[k]) && v.contains(self.vertices[(k + 1) % n])
    }
}

/// Greedy maximal matching among the cycle edges inside `v`, scanning edges
/// by increasing edge id. Returns cycle positions in increasing order.
pub fn maximal_matching_in_region(cycle: &CycleOrbit, v: &VertexSet) -> Vec<usize> {
    let n = cycle.len();
    let mut order: Vec<usize> = (0..n).filter(|&k| cycle.edge_inside(k, v)).collect();
    order.sort_by_key(|&k| cycle.edges[k]);
    let mut taken = vec![false; n];
    let mut out = Vec::new();
    for k in order {
        let prev = (k + n - 1) % n;
        let next = (k + 1) % n;
        if n > 1 && (taken[prev] || taken[next]) {
            continue;
        }
        taken[k] = true;
        out.push(k);
    }
    out.sort_unstable();
    out
}

/// Colors a cycle with 1 and 2, using 3 on a maximal matching inside `v`.
/// Returns one color per cycle position.
pub fn sparse_third_color_cycle(cycle: &CycleOrbit, v: &VertexSet) -> Result<Vec<u32>, LineError> {
    let n = cycle.len();
    if n < 2 {
        return Err(LineError::TooShort(n));
    }
    let matching = maximal_matching_in_region(cycle, v);
    let mut colors = vec![0u32; n];
    if matching.is_empty() {
        if n % 2 == 1 {
            return Err(LineError::OddCycleNoV { len: n });
        }
        for (k, c) in colors.iter_mut().enumerate() {
            *c = 1 + (k % 2) as u32;
        }
        return Ok(colors);
    }
    for &k in &matching {
        colors[k] = 3;
    }
    // Each maximal run between matched edges alternates from its start.
    let first = matching[0];
    let mut parity = 0;
    for step in 1..=n {
        let k = (first + step) % n;
        if colors[k] == 3 {
            parity = 0;
            continue;
        }
        colors[k] = 1 + parity;
        parity ^= 1;
    }
    Ok(colors)
}

/// A path labeling with colors 5 and 6.
pub type PathLabeling = Vec<u8>;

pub fn flip(c: u8) -> u8 {
    if c == 5 {
        6
    } else {
        5
    }
}

/// Whether the game on this labeling can flip both ends and nothing else.
pub fn game_hypothesis(labeling: &[u8]) -> bool {
    let l = labeling.len() - 1;
    let same = labeling[0] == labeling[l];
    if l % 2 == 0 {
        !same
    } else {
        same
    }
}

/// Applies moves in order, failing on the first illegal one.
pub fn replay_moves(labeling: &[u8], moves: &[usize]) -> Option<PathLabeling> {
    let mut lab = labeling.to_vec();
    for &i in moves {
        if i + 1 >= lab.len() || lab[i] != lab[i + 1] {
            return None;
        }
        lab[i] = flip(lab[i]);
        lab[i + 1] = flip(lab[i + 1]);
    }
    Some(lab)
}

/// Moves flipping `v₀` and `v_l` while fixing every interior vertex.
/// Strong induction: flip the leftmost equal pair, then solve both sides.
pub fn parity_game_solve(labeling: &[u8]) -> Result<Vec<usize>, LineError> {
    if labeling.len() < 2 {
        return Err(LineError::TooShort(labeling.len()));
    }
    if !game_hypothesis(labeling) {
        return Err(LineError::HypothesisViolated);
    }
    let mut lab = labeling.to_vec();
    let mut moves = Vec::new();
    solve_segment(&mut lab, 0, labeling.len() - 1, &mut moves);
    Ok(moves)
}

fn solve_segment(lab: &mut [u8], lo: usize, hi: usize, moves: &mut Vec<usize>) {
    let i = (lo..hi)
        .find(|&i| lab[i] == lab[i + 1])
        .expect("hypothesis guarantees an equal adjacent pair");
    lab[i] = flip(lab[i]);
    lab[i + 1] = flip(lab[i + 1]);
    moves.push(i);
    if i > lo {
        solve_segment(lab, lo, i, moves);
    }
    if i + 1 < hi {
        solve_segment(lab, i + 1, hi, moves);
    }
}

/// `c: Z/b' → {5,6}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Code {
    pub entries: Vec<u8>,
}

/// `c̄: Z/2b' → {5,6}` with `c̄(k + b') = ¬c̄(k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DoubleCode {
    pub entries: Vec<u8>,
}

impl Code {
    pub fn new(entries: Vec<u8>) -> Self {
        Code { entries }
    }

    pub fn constant(len: usize, c: u8) -> Self {
        Code {
            entries: vec![c; len],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sixes(&self) -> usize {
        self.entries.iter().filter(|&&c| c == 6).count()
    }

    pub fn differences(&self, other: &Code) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| self.entries[k] != other.entries[k])
            .collect()
    }
}

impl DoubleCode {
    pub fn at(&self, k: i64) -> u8 {
        self.entries[k.rem_euclid(self.entries.len() as i64) as usize]
    }
}

pub fn double_code(code: &Code) -> DoubleCode {
    let b = code.len();
    DoubleCode {
        entries: (0..2 * b)
            .map(|k| {
                if k < b {
                    code.entries[k]
                } else {
                    flip(code.entries[k - b])
                }
            })
            .collect(),
    }
}

fn check_code_params(b: usize, n: usize) -> Result<(), LineError> {
    if b == 0 || b % 2 == 1 {
        return Err(LineError::BadParameters(format!(
            "b' = {b} must be even and positive"
        )));
    }
    if n % 2 == 0 || n.gcd(&b) != 1 {
        return Err(LineError::BadParameters(format!(
            "n' = {n} must be odd and coprime to b' = {b}"
        )));
    }
    Ok(())
}

/// Result of one single-step code transition: the new code and the two
/// `b'`-orbits (residues mod `b'`) whose parity is exchanged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneStep {
    pub k: usize,
    pub code: Code,
    pub orbits: (usize, usize),
}

/// Flips the code at `k` and `k + n'` (mod `b'`), given `c̄(k) = c̄(k + n')`.
pub fn one_step_code_transition(
    code: &Code,
    n_prime: usize,
    k: usize,
) -> Result<OneStep, LineError> {
    let b = code.len();
    check_code_params(b, n_prime)?;
    let k = k % (2 * b);
    let dc = double_code(code);
    if dc.at(k as i64) != dc.at((k + n_prime) as i64) {
        return Err(LineError::DoubleCodeMismatch { k });
    }
    let r1 = k % b;
    let r2 = (k + n_prime) % b;
    let mut entries = code.entries.clone();
    entries[r1] = flip(entries[r1]);
    entries[r2] = flip(entries[r2]);
    Ok(OneStep {
        k,
        code: Code { entries },
        orbits: (r1, r2),
    })
}

/// A sequence of single steps turning `c` into `target`. Differences are
/// cleared two at a time along an `n'`-progression chosen so the relabeling
/// game on it is solvable.
pub fn plan_code_transition(
    c: &Code,
    target: &Code,
    n_prime: usize,
) -> Result<Vec<OneStep>, LineError> {
    let b = c.len();
    if target.len() != b {
        return Err(LineError::BadParameters(
            "codes of different lengths".into(),
        ));
    }
    check_code_params(b, n_prime)?;
    let diff = c.differences(target);
    if diff.len() % 2 == 1 {
        return Err(LineError::OddDifference { count: diff.len() });
    }
    let mut current = c.clone();
    let mut plan = Vec::new();
    for pair in diff.chunks(2) {
        let (r1, r2) = (pair[0], pair[1]);
        let j: Vec<usize> = (0..=b).map(|i| (r1 + i * n_prime) % (2 * b)).collect();
        let i0 = (1..b).find(|&i| j[i] % b == r2).expect("n' generates Z/b'");
        let dc = double_code(&current);
        let ks: Vec<usize> = [j[..=i0].to_vec(), j[i0..].to_vec()]
            .into_iter()
            .find(|ks| {
                let labels: Vec<u8> = ks.iter().map(|&k| dc.at(k as i64)).collect();
                game_hypothesis(&labels)
            })
            .expect("one of the two progressions satisfies the parity hypothesis");
        let labels: Vec<u8> = ks.iter().map(|&k| dc.at(k as i64)).collect();
        for mv in parity_game_solve(&labels)? {
            let step = one_step_code_transition(&current, n_prime, ks[mv])?;
            current = step.code.clone();
            plan.push(step);
        }
    }
    debug_assert_eq!(&current, target);
    Ok(plan)
}

/// Replays a plan from `c`, re-checking every step's precondition.
pub fn apply_plan(c: &Code, plan: &[OneStep], n_prime: usize) -> Result<Code, LineError> {
    let mut current = c.clone();
    for step in plan {
        current = one_step_code_transition(&current, n_prime, step.k)?.code;
    }
    Ok(current)
}
