//! Brute-force ground truth: coloring verification, exact chromatic index,
//! perfect matchings, the matching parity diagnostic on `Δ × Z` tori, and
//! protocol compliance.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abelian::{apply_protocol, AbelianError, ProtocolAssignment};
use crate::coloring::EdgeColoring;
use crate::group::{EdgeId, TorusInstance, VertexId, VertexSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has {vertices} vertices, above the oracle limit {max}")]
    TooLarge { vertices: usize, max: usize },
    #[error("not a perfect matching: {0}")]
    NotAMatching(String),
    #[error("window {window} does not exceed generator step {step}")]
    WindowTooSmall { window: u64, step: u64 },
    #[error("diagnostic not applicable: {0}")]
    NotApplicable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conflict {
    /// Two edges at `vertex` share `color`.
    Shared {
        vertex: VertexId,
        edges: (EdgeId, EdgeId),
        color: u32,
    },
    Unset {
        edge: EdgeId,
    },
    OutOfPalette {
        edge: EdgeId,
        color: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub ok: bool,
    pub first_conflict: Option<Conflict>,
    /// `histogram[c]` counts edges of color `c`; index 0 counts unset edges.
    pub histogram: Vec<usize>,
}

impl VerificationReport {
    pub fn colors_used(&self) -> usize {
        self.histogram.iter().skip(1).filter(|&&n| n > 0).count()
    }
}

/// Exhaustive adjacency check, parallel edges included.
pub fn verify_coloring(instance: &TorusInstance, coloring: &EdgeColoring) -> VerificationReport {
    let max = coloring.max_color().max(coloring.palette) as usize;
    let mut histogram = vec![0usize; max + 1];
    let mut first = None;
    for (e, &c) in coloring.colors.iter().enumerate() {
        histogram[c as usize] += 1;
        if first.is_none() {
            if c == 0 {
                first = Some(Conflict::Unset { edge: e });
            } else if c > coloring.palette {
                first = Some(Conflict::OutOfPalette { edge: e, color: c });
            }
        }
    }
    if first.is_none() {
        first = first_shared_conflict(instance, coloring);
    }
    VerificationReport {
        ok: first.is_none(),
        first_conflict: first,
        histogram,
    }
}

/// First pair of same-colored edges at a vertex, ignoring unset edges.
pub fn first_shared_conflict(
    instance: &TorusInstance,
    coloring: &EdgeColoring,
) -> Option<Conflict> {
    let mut seen: Vec<(u32, EdgeId)> = Vec::new();
    for v in 0..instance.n_vertices() {
        seen.clear();
        for &e in instance.incident(v) {
            let c = coloring.colors[e];
            if c == 0 {
                continue;
            }
            if let Some(&(_, prev)) = seen.iter().find(|(pc, _)| *pc == c) {
                return Some(Conflict::Shared {
                    vertex: v,
                    edges: (prev, e),
                    color: c,
                });
            }
            seen.push((c, e));
        }
    }
    None
}

pub fn is_proper_partial(instance: &TorusInstance, coloring: &EdgeColoring) -> bool {
    first_shared_conflict(instance, coloring).is_none()
}

/// A small edge-coloring constraint problem on a multigraph.
#[derive(Debug, Clone)]
pub struct EdgeCsp {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
    /// Allowed colors per edge, in trial order.
    pub allowed: Vec<Vec<u32>>,
    /// Colors already present at each vertex from outside the problem.
    pub blocked: Vec<Vec<u32>>,
    /// Colors are interchangeable: enables first-unused-color symmetry breaking.
    pub symmetric: bool,
    pub node_limit: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CspOutcome {
    Solved(Vec<u32>),
    Infeasible,
    LimitReached,
}

impl EdgeCsp {
    /// Plain `k`-edge-coloring of a graph.
    pub fn coloring(n_vertices: usize, edges: Vec<(usize, usize)>, k: u32) -> Self {
        let allowed = vec![(1..=k).collect(); edges.len()];
        EdgeCsp {
            n_vertices,
            edges,
            allowed,
            blocked: vec![Vec::new(); n_vertices],
            symmetric: true,
            node_limit: u64::MAX,
        }
    }

    /// Edges in breadth-first discovery order from the lowest vertex of each
    /// component, so every edge after the first meets an earlier one.
    fn search_order(&self) -> Vec<usize> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.n_vertices];
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push(i);
            if v != u {
                adj[v].push(i);
            }
        }
        let mut placed = vec![false; self.edges.len()];
        let mut seen = vec![false; self.n_vertices];
        let mut order = Vec::with_capacity(self.edges.len());
        for start in 0..self.n_vertices {
            if seen[start] || adj[start].is_empty() {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for &i in &adj[x] {
                    if !placed[i] {
                        placed[i] = true;
                        order.push(i);
                    }
                    let (u, v) = self.edges[i];
                    let y = if u == x { v } else { u };
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        order
    }

    pub fn solve(&self) -> CspOutcome {
        let max_color = self
            .allowed
            .iter()
            .flatten()
            .chain(self.blocked.iter().flatten())
            .copied()
            .max()
            .unwrap_or(0);
        assert!(max_color < 128, "edge CSP supports colors below 128");
        let mut used: Vec<u128> = self
            .blocked
            .iter()
            .map(|bs| bs.iter().fold(0u128, |m, &c| m | (1u128 << c)))
            .collect();
        let order = self.search_order();
        let mut assignment = vec![0u32; self.edges.len()];
        let mut nodes = 0u64;
        match self.search(&order, 0, &mut used, &mut assignment, 0, &mut nodes) {
            Some(true) => CspOutcome::Solved(assignment),
            Some(false) => CspOutcome::Infeasible,
            None => CspOutcome::LimitReached,
        }
    }

    fn search(
        &self,
        order: &[usize],
        depth: usize,
        used: &mut [u128],
        assignment: &mut [u32],
        max_used: u32,
        nodes: &mut u64,
    ) -> Option<bool> {
        if depth == order.len() {
            return Some(true);
        }
        *nodes += 1;
        if *nodes > self.node_limit {
            return None;
        }
        let i = order[depth];
        let (u, v) = self.edges[i];
        for &c in &self.allowed[i] {
            if self.symmetric && c > max_used + 1 {
                break;
            }
            let bit = 1u128 << c;
            if used[u] & bit != 0 || used[v] & bit != 0 {
                continue;
            }
            used[u] |= bit;
            used[v] |= bit;
            assignment[i] = c;
            let r = self.search(order, depth + 1, used, assignment, max_used.max(c), nodes);
            used[u] &= !bit;
            used[v] &= !bit;
            match r {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
        }
        assignment[i] = 0;
        Some(false)
    }
}

fn instance_edge_list(instance: &TorusInstance) -> Vec<(usize, usize)> {
    instance
        .edges()
        .iter()
        .map(|e| (e.source, e.target))
        .collect()
}

/// Some proper `k`-edge-coloring of the whole instance, if one exists.
pub fn find_edge_coloring(instance: &TorusInstance, k: u32) -> Option<EdgeColoring> {
    match EdgeCsp::coloring(instance.n_vertices(), instance_edge_list(instance), k).solve() {
        CspOutcome::Solved(colors) => Some(EdgeColoring { palette: k, colors }),
        _ => None,
    }
}

pub const DEFAULT_MAX_ORACLE_VERTICES: usize = 64;

/// Least `k` admitting a proper `k`-edge-coloring.
pub fn exact_chromatic_index(
    instance: &TorusInstance,
    max_vertices: usize,
) -> Result<u32, OracleError> {
    let n = instance.n_vertices();
    if n > max_vertices {
        return Err(OracleError::TooLarge {
            vertices: n,
            max: max_vertices,
        });
    }
    if instance.edges().is_empty() {
        return Ok(0);
    }
    let delta = instance.degree() as u32;
    let mut k = delta;
    // A regular graph on an odd vertex set has no perfect matching, so no
    // color class can be a perfect matching.
    if n % 2 == 1 {
        k += 1;
    }
    let edges = instance_edge_list(instance);
    loop {
        if let CspOutcome::Solved(_) = EdgeCsp::coloring(n, edges.clone(), k).solve() {
            return Ok(k);
        }
        k += 1;
    }
}

/// Whether the instance has parallel edges (vertex pairs joined twice).
pub fn is_simple(instance: &TorusInstance) -> bool {
    let mut pairs: Vec<(usize, usize)> = instance
        .edges()
        .iter()
        .map(|e| (e.source.min(e.target), e.source.max(e.target)))
        .collect();
    let n = pairs.len();
    pairs.sort_unstable();
    pairs.dedup();
    pairs.len() == n
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingResult {
    pub exists: bool,
    /// Certificate when `exists`.
    pub matching: Option<Vec<EdgeId>>,
}

pub const MAX_MATCHING_VERTICES: usize = 10_000;

/// Maximum matching by Edmonds' blossom algorithm. `order` fixes the
/// adjacency scan order, which determines which maximum matching is found.
fn blossom_matching(n: usize, adj: &[Vec<usize>], seed_mates: Vec<usize>) -> Vec<usize> {
    const NONE: usize = usize::MAX;
    let mut mate = seed_mates;
    let mut parent = vec![NONE; n];
    let mut base: Vec<usize> = (0..n).collect();
    let mut used = vec![false; n];
    let mut blossom = vec![false; n];
    let mut queue = VecDeque::new();

    fn lca(a: usize, b: usize, mate: &[usize], parent: &[usize], base: &[usize]) -> usize {
        let mut seen = vec![false; mate.len()];
        let mut a = a;
        loop {
            a = base[a];
            seen[a] = true;
            if mate[a] == usize::MAX {
                break;
            }
            a = parent[mate[a]];
        }
        let mut b = b;
        loop {
            b = base[b];
            if seen[b] {
                return b;
            }
            b = parent[mate[b]];
        }
    }

    fn mark_path(
        mut v: usize,
        b: usize,
        mut child: usize,
        mate: &[usize],
        parent: &mut [usize],
        base: &[usize],
        blossom: &mut [bool],
    ) {
        while base[v] != b {
            blossom[base[v]] = true;
            blossom[base[mate[v]]] = true;
            parent[v] = child;
            child = mate[v];
            v = parent[mate[v]];
        }
    }

    for root in 0..n {
        if mate[root] != NONE {
            continue;
        }
        parent.iter_mut().for_each(|p| *p = NONE);
        used.iter_mut().for_each(|u| *u = false);
        for (i, b) in base.iter_mut().enumerate() {
            *b = i;
        }
        used[root] = true;
        queue.clear();
        queue.push_back(root);
        let mut end = NONE;
        'search: while let Some(v) = queue.pop_front() {
            for &to in &adj[v] {
                if base[v] == base[to] || mate[v] == to {
                    continue;
                }
                if to == root || (mate[to] != NONE && parent[mate[to]] != NONE) {
                    let cur = lca(v, to, &mate, &parent, &base);
                    blossom.iter_mut().for_each(|b| *b = false);
                    mark_path(v, cur, to, &mate, &mut parent, &base, &mut blossom);
                    mark_path(to, cur, v, &mate, &mut parent, &base, &mut blossom);
                    for i in 0..n {
                        if blossom[base[i]] {
                            base[i] = cur;
                            if !used[i] {
                                used[i] = true;
                                queue.push_back(i);
                            }
                        }
                    }
                } else if parent[to] == NONE {
                    parent[to] = v;
                    if mate[to] == NONE {
                        end = to;
                        break 'search;
                    }
                    used[mate[to]] = true;
                    queue.push_back(mate[to]);
                }
            }
        }
        let mut v = end;
        while v != NONE {
            let pv = parent[v];
            let ppv = mate[pv];
            mate[v] = pv;
            mate[pv] = v;
            v = ppv;
        }
    }
    mate
}

fn matching_from_mates(
    instance: &TorusInstance,
    mate: &[usize],
    rng: Option<&mut ChaCha8Rng>,
) -> Option<Vec<EdgeId>> {
    if mate.iter().any(|&m| m == usize::MAX) {
        return None;
    }
    let mut rng = rng;
    let mut out = Vec::with_capacity(mate.len() / 2);
    for v in 0..mate.len() {
        let w = mate[v];
        if v > w {
            continue;
        }
        let mut parallel: Vec<EdgeId> = instance
            .incident(v)
            .iter()
            .copied()
            .filter(|&e| instance.edge(e).touches(w))
            .collect();
        parallel.sort_unstable();
        parallel.dedup();
        let pick = match rng.as_deref_mut() {
            Some(r) => *parallel.choose(r).expect("matched pair is adjacent"),
            None => parallel[0],
        };
        out.push(pick);
    }
    out.sort_unstable();
    Some(out)
}

fn adjacency(instance: &TorusInstance) -> Vec<Vec<usize>> {
    (0..instance.n_vertices())
        .map(|v| {
            let mut ns: Vec<usize> = instance.neighbors(v).collect();
            ns.sort_unstable();
            ns.dedup();
            ns
        })
        .collect()
}

/// Exact perfect-matching existence with a certificate.
pub fn perfect_matching_exists(instance: &TorusInstance) -> Result<MatchingResult, OracleError> {
    let n = instance.n_vertices();
    if n > MAX_MATCHING_VERTICES {
        return Err(OracleError::TooLarge {
            vertices: n,
            max: MAX_MATCHING_VERTICES,
        });
    }
    if n % 2 == 1 {
        return Ok(MatchingResult {
            exists: false,
            matching: None,
        });
    }
    let mate = blossom_matching(n, &adjacency(instance), vec![usize::MAX; n]);
    let matching = matching_from_mates(instance, &mate, None);
    Ok(MatchingResult {
        exists: matching.is_some(),
        matching,
    })
}

/// A perfect matching found after a seeded shuffle of the scan order and a
/// seeded greedy start, so different seeds explore different matchings.
pub fn random_perfect_matching(
    instance: &TorusInstance,
    seed: u64,
) -> Result<Option<Vec<EdgeId>>, OracleError> {
    let n = instance.n_vertices();
    if n > MAX_MATCHING_VERTICES {
        return Err(OracleError::TooLarge {
            vertices: n,
            max: MAX_MATCHING_VERTICES,
        });
    }
    if n % 2 == 1 {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = adjacency(instance);
    for ns in adj.iter_mut() {
        ns.shuffle(&mut rng);
    }
    let mut vertices: Vec<usize> = (0..n).collect();
    vertices.shuffle(&mut rng);
    let mut mate = vec![usize::MAX; n];
    for &v in &vertices {
        if mate[v] != usize::MAX {
            continue;
        }
        if let Some(&w) = adj[v].iter().find(|&&w| mate[w] == usize::MAX) {
            mate[v] = w;
            mate[w] = v;
        }
    }
    let mate = blossom_matching(n, &adj, mate);
    Ok(matching_from_mates(instance, &mate, Some(&mut rng)))
}

pub fn check_perfect_matching(
    instance: &TorusInstance,
    matching: &[EdgeId],
) -> Result<(), OracleError> {
    let mut covered = vec![false; instance.n_vertices()];
    for &e in matching {
        let edge = instance.edge(e);
        for v in [edge.source, edge.target] {
            if covered[v] {
                return Err(OracleError::NotAMatching(format!(
                    "vertex {v} covered twice"
                )));
            }
            covered[v] = true;
        }
    }
    if let Some(v) = covered.iter().position(|&c| !c) {
        return Err(OracleError::NotAMatching(format!("vertex {v} uncovered")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityDiagnostic {
    /// `F(y)` for each position `y` of the free coordinate.
    pub f_counts: Vec<u64>,
    /// `f(y) = F(y) mod 2`.
    pub parities: Vec<u8>,
    /// Positions `y` where `f(y+1) ≠ f(y) + 1 (mod 2)`.
    pub violations: Vec<u64>,
    pub step_relation_holds: bool,
    pub note: String,
}

/// Counts, for every window `[y, y+n]` of `Δ`-orbits along the free axis,
/// the matching edges whose right endpoint lies in the window and whose left
/// endpoint lies outside it. Positions are read around the torus cycle.
pub fn matching_parity_diagnostic(
    instance: &TorusInstance,
    matching: &[EdgeId],
    n_window: u64,
) -> Result<ParityDiagnostic, OracleError> {
    let group = instance.group();
    if group.rank() != 1 {
        return Err(OracleError::NotApplicable("free rank must be 1".into()));
    }
    if group.torsion_order() % 2 == 0 {
        return Err(OracleError::NotApplicable(
            "the torsion part must have odd order".into(),
        ));
    }
    let step = group
        .pairs()
        .iter()
        .map(|p| p.rep.free[0].unsigned_abs())
        .max()
        .unwrap_or(0);
    if n_window <= step {
        return Err(OracleError::WindowTooSmall {
            window: n_window,
            step,
        });
    }
    let period = instance.periods()[0];
    if period < 2 * n_window + 2 {
        return Err(OracleError::NotApplicable(format!(
            "period {period} too short for window {n_window}"
        )));
    }
    check_perfect_matching(instance, matching)?;

    let t = group.invariants().len();
    let z_of = |v: VertexId| instance.coords(v)[t];
    // (right endpoint, jump m > 0) for every matching edge between orbits.
    let mut crossing: Vec<(u64, u64)> = Vec::new();
    for &e in matching {
        let edge = instance.edge(e);
        let v = instance.pair_of_slot(edge.slot).rep.free[0];
        if v == 0 {
            continue;
        }
        let (left, right) = if v > 0 {
            (edge.source, edge.target)
        } else {
            (edge.target, edge.source)
        };
        let _ = left;
        crossing.push((z_of(right), v.unsigned_abs()));
    }
    let mut f_counts = vec![0u64; period as usize];
    for (y, count) in f_counts.iter_mut().enumerate() {
        for &(right, m) in &crossing {
            let j = (right + period - y as u64) % period;
            if j <= n_window && m > j {
                *count += 1;
            }
        }
    }
    let parities: Vec<u8> = f_counts.iter().map(|c| (c % 2) as u8).collect();
    let violations: Vec<u64> = (0..period)
        .filter(|&y| parities[((y + 1) % period) as usize] != 1 - parities[y as usize])
        .collect();
    Ok(ParityDiagnostic {
        step_relation_holds: violations.is_empty(),
        f_counts,
        parities,
        violations,
        note: "finite reading around the torus cycle of the window-crossing count; \
               the step relation f(y+1) = f(y) + 1 (mod 2) is checked at every position"
            .into(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub compliant: bool,
    pub checked: usize,
    /// Edges whose stored color differs from the protocol's, with
    /// (expected, stored).
    pub deviations: Vec<(EdgeId, u32, u32)>,
}

impl ComplianceReport {
    pub fn first_deviation(&self) -> Option<(EdgeId, u32, u32)> {
        self.deviations.first().copied()
    }
}

/// Recomputes every assignment edge with both endpoints in `region` and
/// compares it with the stored color.
pub fn protocol_compliance(
    instance: &TorusInstance,
    coloring: &EdgeColoring,
    assignment: &ProtocolAssignment,
    region: &VertexSet,
) -> Result<ComplianceReport, AbelianError> {
    let edges: Vec<EdgeId> = (0..instance.edges().len())
        .filter(|&e| {
            let ed = instance.edge(e);
            assignment.slots.contains(&ed.slot)
                && region.contains(ed.source)
                && region.contains(ed.target)
        })
        .collect();
    let expected = apply_protocol(instance, assignment, &edges)?;
    let deviations: Vec<(EdgeId, u32, u32)> = edges
        .iter()
        .filter(|&&e| expected.colors[e] != coloring.colors[e])
        .map(|&e| (e, expected.colors[e], coloring.colors[e]))
        .collect();
    Ok(ComplianceReport {
        compliant: deviations.is_empty(),
        checked: edges.len(),
        deviations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{build_torus_instance, make_marked_group, GeneratorSpec};

    fn cycle(n: u64) -> TorusInstance {
        let g = make_marked_group(
            &[],
            1,
            &[
                GeneratorSpec::new(&[], &[1], 1),
                GeneratorSpec::new(&[], &[-1], 1),
            ],
        )
        .unwrap();
        build_torus_instance(g, &[n]).unwrap()
    }

    fn klein_three_involutions() -> TorusInstance {
        let g = make_marked_group(
            &[2, 2],
            0,
            &[
                GeneratorSpec::new(&[1, 0], &[], 1),
                GeneratorSpec::new(&[0, 1], &[], 1),
                GeneratorSpec::new(&[1, 1], &[], 1),
            ],
        )
        .unwrap();
        build_torus_instance(g, &[]).unwrap()
    }

    #[test]
    fn alternating_c4_verifies() {
        let inst = cycle(4);
        let mut c = EdgeColoring::for_instance(&inst, 2);
        for v in 0..4 {
            let e = inst.out_edge(v, 0);
            c.set(e, 1 + (v as u32 % 2));
        }
        let r = verify_coloring(&inst, &c);
        assert!(r.ok, "{r:?}");
        assert_eq!(r.colors_used(), 2);
    }

    #[test]
    fn incident_pair_conflict() {
        let inst = cycle(4);
        let c = EdgeColoring {
            palette: 2,
            colors: vec![1; 4],
        };
        let r = verify_coloring(&inst, &c);
        assert!(!r.ok);
        assert!(matches!(r.first_conflict, Some(Conflict::Shared { .. })));
    }

    #[test]
    fn parallel_edges_conflict() {
        let g = make_marked_group(&[4], 0, &[GeneratorSpec::new(&[2], &[], 2)]).unwrap();
        let inst = build_torus_instance(g, &[]).unwrap();
        assert!(!is_simple(&inst));
        let c = EdgeColoring {
            palette: 2,
            colors: vec![1; inst.edges().len()],
        };
        assert!(!verify_coloring(&inst, &c).ok);
    }

    #[test]
    fn chromatic_index_of_cycles() {
        for n in 3..=12u64 {
            let expected = if n % 2 == 0 { 2 } else { 3 };
            assert_eq!(
                exact_chromatic_index(&cycle(n), 64).unwrap(),
                expected,
                "C{n}"
            );
        }
    }

    #[test]
    fn klein_four_is_class_one() {
        assert_eq!(
            exact_chromatic_index(&klein_three_involutions(), 64).unwrap(),
            3
        );
    }

    #[test]
    fn oracle_size_limit() {
        assert!(matches!(
            exact_chromatic_index(&cycle(70), 64),
            Err(OracleError::TooLarge { .. })
        ));
    }

    #[test]
    fn matchings_on_small_cycles() {
        let r = perfect_matching_exists(&cycle(4)).unwrap();
        assert!(r.exists);
        check_perfect_matching(&cycle(4), r.matching.as_ref().unwrap()).unwrap();
        assert!(!perfect_matching_exists(&cycle(5)).unwrap().exists);
    }

    #[test]
    fn odd_torsion_times_z_has_no_matching() {
        let g = make_marked_group(
            &[3],
            1,
            &[
                GeneratorSpec::new(&[0], &[1], 1),
                GeneratorSpec::new(&[0], &[-1], 1),
                GeneratorSpec::new(&[1], &[0], 1),
                GeneratorSpec::new(&[2], &[0], 1),
            ],
        )
        .unwrap();
        let inst = build_torus_instance(g, &[5]).unwrap();
        assert_eq!(inst.n_vertices(), 15);
        assert!(!perfect_matching_exists(&inst).unwrap().exists);
    }

    #[test]
    fn blossom_handles_odd_cycles_inside_even_graphs() {
        // Z/3 × Z with the torsion triangle forces blossom contractions.
        let g = make_marked_group(
            &[3],
            1,
            &[
                GeneratorSpec::new(&[0], &[1], 1),
                GeneratorSpec::new(&[0], &[-1], 1),
                GeneratorSpec::new(&[1], &[0], 1),
                GeneratorSpec::new(&[2], &[0], 1),
            ],
        )
        .unwrap();
        let inst = build_torus_instance(g, &[6]).unwrap();
        for seed in 0..20 {
            let m = random_perfect_matching(&inst, seed).unwrap().unwrap();
            check_perfect_matching(&inst, &m).unwrap();
        }
    }

    #[test]
    fn diagnostic_on_plain_cycle() {
        // Period 8, matching the edges (0,1),(2,3),...: hand count with n = 2.
        let inst = cycle(8);
        let matching: Vec<EdgeId> = (0..8).step_by(2).map(|v| inst.out_edge(v, 0)).collect();
        let d = matching_parity_diagnostic(&inst, &matching, 2).unwrap();
        assert!(d.step_relation_holds);
        assert_eq!(d.f_counts, vec![0, 1, 0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn diagnostic_window_precondition() {
        let inst = cycle(8);
        let matching: Vec<EdgeId> = (0..8).step_by(2).map(|v| inst.out_edge(v, 0)).collect();
        assert!(matches!(
            matching_parity_diagnostic(&inst, &matching, 1),
            Err(OracleError::WindowTooSmall { .. })
        ));
        assert!(matches!(
            matching_parity_diagnostic(&inst, &matching[1..], 2),
            Err(OracleError::NotAMatching(_))
        ));
    }

    mod compliance {
        use super::*;
        use crate::abelian::{standard_plan, transition_standard_axis};

        fn z2(n: u64) -> TorusInstance {
            let specs = [[1, 0], [-1, 0], [0, 1], [0, -1]].map(|g| GeneratorSpec::new(&[], &g, 1));
            build_torus_instance(make_marked_group(&[], 2, &specs).unwrap(), &[n, n]).unwrap()
        }

        fn assignment(inst: &TorusInstance, x: &[i64]) -> ProtocolAssignment {
            standard_plan(inst).unwrap().assignment(x)
        }

        fn annulus(dist: &[u32], lo: u32, hi: u32) -> VertexSet {
            VertexSet::from_predicate(dist.len(), |v| (lo..=hi).contains(&dist[v]))
        }

        #[test]
        fn protocol_output_complies() {
            let inst = z2(8);
            let a = assignment(&inst, &[1, 0]);
            let all: Vec<EdgeId> = (0..inst.edges().len()).collect();
            let c = apply_protocol(&inst, &a, &all).unwrap();
            let r =
                protocol_compliance(&inst, &c, &a, &VertexSet::full(inst.n_vertices())).unwrap();
            assert!(r.compliant);
            assert_eq!(r.checked, all.len());
            let other = assignment(&inst, &[0, 0]);
            let r = protocol_compliance(&inst, &c, &other, &VertexSet::full(inst.n_vertices()))
                .unwrap();
            assert!(!r.compliant);
        }

        #[test]
        fn empty_region_complies() {
            let inst = z2(8);
            let c = EdgeColoring::for_instance(&inst, 4);
            let r = protocol_compliance(
                &inst,
                &c,
                &assignment(&inst, &[0, 0]),
                &VertexSet::empty(inst.n_vertices()),
            )
            .unwrap();
            assert!(r.compliant);
            assert_eq!(r.checked, 0);
        }

        #[test]
        fn transition_deviates_only_between_annuli() {
            let inst = z2(24);
            let n = inst.n_vertices();
            let u = VertexSet::from_predicate(n, |v| {
                let c = inst.coords(v);
                (8..12).contains(&c[0]) && (8..12).contains(&c[1])
            });
            let x0 = assignment(&inst, &[0, 0]);
            let x1 = assignment(&inst, &[1, 0]);
            let all: Vec<EdgeId> = (0..inst.edges().len()).collect();
            let start = apply_protocol(&inst, &x0, &all).unwrap();
            let out = transition_standard_axis(&inst, &start, &u, 0, 1, &[0, 0], &[1, 0]).unwrap();
            let dist = inst.distances_from(&u);
            assert!(
                protocol_compliance(&inst, &out, &x0, &annulus(&dist, 0, 1))
                    .unwrap()
                    .compliant
            );
            // Edges meeting the outer sphere follow x1; edges with both ends at
            // distance 4 still belong to the borrow band.
            let outer = protocol_compliance(&inst, &out, &x1, &annulus(&dist, 4, 5)).unwrap();
            for &(e, _, _) in &outer.deviations {
                let ed = inst.edge(e);
                assert_eq!((dist[ed.source], dist[ed.target]), (4, 4));
            }
            assert!(
                protocol_compliance(&inst, &out, &x1, &annulus(&dist, 5, 5))
                    .unwrap()
                    .compliant
            );
            let inner = protocol_compliance(&inst, &out, &x0, &annulus(&dist, 0, 5)).unwrap();
            assert!(!inner.compliant);
            for &(e, _, _) in &inner.deviations {
                let ed = inst.edge(e);
                let (a, b) = (dist[ed.source], dist[ed.target]);
                assert!(a.min(b) >= 1 && a.max(b) <= 5, "edge {e} at {a},{b}");
            }
        }
    }
}
