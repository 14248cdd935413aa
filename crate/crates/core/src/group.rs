//! Marked abelian groups `Δ × Z^d`, their finite torus quotients, and the
//! graph primitives (balls, annuli, distance-`N` components) everything else
//! is built on.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("torsion invariant {0} must be at least 2")]
    NonpositiveInvariant(i64),
    #[error("generator {0} is the identity")]
    IdentityGenerator(GroupElement),
    #[error("generator {element} has multiplicity {mult} but its inverse has multiplicity {inverse_mult}")]
    AsymmetricMultiset {
        element: GroupElement,
        mult: u32,
        inverse_mult: u32,
    },
    #[error("generator has {got} {what} coordinates, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("generator multiplicity must be positive")]
    ZeroMultiplicity,
    #[error("expected {expected} periods, got {got}")]
    PeriodCountMismatch { expected: usize, got: usize },
    #[error(
        "period {period} on axis {axis} must exceed {needed} (twice the largest generator step)"
    )]
    PeriodTooSmall {
        axis: usize,
        period: u64,
        needed: u64,
    },
    #[error("subgroup step {step} does not divide invariant {invariant}")]
    NotASubgroup { step: u64, invariant: u64 },
    #[error("every generator lies in the quotiented subgroup")]
    ExhaustedGenerators,
    #[error("radii out of order: inner {inner} > outer {outer}")]
    BadRadii { inner: u32, outer: u32 },
}

/// An element of `Δ × Z^d` with the torsion part reduced mod the invariants.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub torsion: Vec<u64>,
    pub free: Vec<i64>,
}

impl GroupElement {
    pub fn identity(torsion_dims: usize, rank: usize) -> Self {
        GroupElement {
            torsion: vec![0; torsion_dims],
            free: vec![0; rank],
        }
    }

    /// Reduces raw torsion coordinates (possibly negative) mod the invariants.
    pub fn reduced(invariants: &[u64], torsion: &[i64], free: &[i64]) -> Self {
        GroupElement {
            torsion: torsion
                .iter()
                .zip(invariants)
                .map(|(&t, &n)| t.rem_euclid(n as i64) as u64)
                .collect(),
            free: free.to_vec(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.torsion.iter().all(|&t| t == 0) && self.free.iter().all(|&v| v == 0)
    }

    pub fn is_torsion(&self) -> bool {
        self.free.iter().all(|&v| v == 0)
    }

    pub fn inverse(&self, invariants: &[u64]) -> Self {
        GroupElement {
            torsion: self
                .torsion
                .iter()
                .zip(invariants)
                .map(|(&t, &n)| (n - t) % n)
                .collect(),
            free: self.free.iter().map(|v| -v).collect(),
        }
    }

    pub fn add(&self, other: &Self, invariants: &[u64]) -> Self {
        GroupElement {
            torsion: self
                .torsion
                .iter()
                .zip(&other.torsion)
                .zip(invariants)
                .map(|((a, b), n)| (a + b) % n)
                .collect(),
            free: self
                .free
                .iter()
                .zip(&other.free)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Order of the element, `None` when infinite.
    pub fn order(&self, invariants: &[u64]) -> Option<u64> {
        if !self.is_torsion() {
            return None;
        }
        Some(
            self.torsion
                .iter()
                .zip(invariants)
                .map(|(&t, &n)| n / num_integer::gcd(t, n))
                .fold(1, num_integer::lcm),
        )
    }

    /// Representative of `{γ, γ⁻¹}`: first nonzero free coordinate positive,
    /// or for torsion elements the lexicographically smaller tuple.
    fn is_pair_rep(&self, invariants: &[u64]) -> bool {
        match self.free.iter().find(|&&v| v != 0) {
            Some(&v) => v > 0,
            None => self.torsion <= self.inverse(invariants).torsion,
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        let mut first = true;
        for t in &self.torsion {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
            first = false;
        }
        if !self.torsion.is_empty() && !self.free.is_empty() {
            write!(f, ";")?;
        }
        first = true;
        for v in &self.free {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        write!(f, ")")
    }
}

/// Raw generator input: possibly unreduced torsion coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(rename = "t", default)]
    pub torsion: Vec<i64>,
    #[serde(rename = "v", default)]
    pub free: Vec<i64>,
    #[serde(default = "one")]
    pub mult: u32,
}

fn one() -> u32 {
    1
}

impl GeneratorSpec {
    pub fn new(torsion: &[i64], free: &[i64], mult: u32) -> Self {
        GeneratorSpec {
            torsion: torsion.to_vec(),
            free: free.to_vec(),
            mult,
        }
    }
}

/// One unordered pair `{γ, γ⁻¹}` of the generating multiset. An involution
/// pair contributes `mult` to the degree, any other pair `2·mult`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorPair {
    pub rep: GroupElement,
    pub inverse: GroupElement,
    pub mult: u32,
    pub involution: bool,
}

impl GeneratorPair {
    pub fn degree(&self) -> usize {
        if self.involution {
            self.mult as usize
        } else {
            2 * self.mult as usize
        }
    }
}

/// A copy of a generator pair; edges are labeled by slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub pair: usize,
    pub copy: u32,
}

/// `(Γ, S)` with `Γ = Δ × Z^d` and `S` a symmetric multiset avoiding 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedGroup {
    invariants: Vec<u64>,
    rank: usize,
    pairs: Vec<GeneratorPair>,
}

/// Builds a marked group. Symmetry of the multiset is checked, never repaired.
pub fn make_marked_group(
    torsion_invariants: &[i64],
    rank: usize,
    generators: &[GeneratorSpec],
) -> Result<MarkedGroup, GroupError> {
    for &n in torsion_invariants {
        if n < 2 {
            return Err(GroupError::NonpositiveInvariant(n));
        }
    }
    let invariants: Vec<u64> = torsion_invariants.iter().map(|&n| n as u64).collect();
    let mut multiset: BTreeMap<GroupElement, u32> = BTreeMap::new();
    for g in generators {
        if g.torsion.len() != invariants.len() {
            return Err(GroupError::DimensionMismatch {
                what: "torsion",
                expected: invariants.len(),
                got: g.torsion.len(),
            });
        }
        if g.free.len() != rank {
            return Err(GroupError::DimensionMismatch {
                what: "free",
                expected: rank,
                got: g.free.len(),
            });
        }
        if g.mult == 0 {
            return Err(GroupError::ZeroMultiplicity);
        }
        let e = GroupElement::reduced(&invariants, &g.torsion, &g.free);
        if e.is_identity() {
            return Err(GroupError::IdentityGenerator(e));
        }
        *multiset.entry(e).or_insert(0) += g.mult;
    }
    MarkedGroup::from_multiset(invariants, rank, &multiset)
}

impl MarkedGroup {
    fn from_multiset(
        invariants: Vec<u64>,
        rank: usize,
        multiset: &BTreeMap<GroupElement, u32>,
    ) -> Result<Self, GroupError> {
        let mut pairs = Vec::new();
        for (e, &m) in multiset {
            let inv = e.inverse(&invariants);
            let inv_m = multiset.get(&inv).copied().unwrap_or(0);
            if inv_m != m {
                return Err(GroupError::AsymmetricMultiset {
                    element: e.clone(),
                    mult: m,
                    inverse_mult: inv_m,
                });
            }
            if !e.is_pair_rep(&invariants) {
                continue;
            }
            pairs.push(GeneratorPair {
                involution: inv == *e,
                rep: e.clone(),
                inverse: inv,
                mult: m,
            });
        }
        Ok(MarkedGroup {
            invariants,
            rank,
            pairs,
        })
    }

    pub fn invariants(&self) -> &[u64] {
        &self.invariants
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn pairs(&self) -> &[GeneratorPair] {
        &self.pairs
    }

    /// `|S|` counted with multiplicity.
    pub fn degree(&self) -> usize {
        self.pairs.iter().map(GeneratorPair::degree).sum()
    }

    pub fn torsion_order(&self) -> u64 {
        self.invariants.iter().product()
    }

    pub fn order_of(&self, e: &GroupElement) -> Option<u64> {
        e.order(&self.invariants)
    }

    /// The full multiset as generator specs (both members of every pair).
    pub fn generator_specs(&self) -> Vec<GeneratorSpec> {
        let mut out = Vec::new();
        for p in &self.pairs {
            let conv = |e: &GroupElement| GeneratorSpec {
                torsion: e.torsion.iter().map(|&t| t as i64).collect(),
                free: e.free.clone(),
                mult: p.mult,
            };
            out.push(conv(&p.rep));
            if !p.involution {
                out.push(conv(&p.inverse));
            }
        }
        out
    }

    pub fn slots(&self) -> Vec<Slot> {
        self.pairs
            .iter()
            .enumerate()
            .flat_map(|(pair, p)| (0..p.mult).map(move |copy| Slot { pair, copy }))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    /// `target = γ · source` for the slot's representative `γ`.
    pub source: VertexId,
    pub target: VertexId,
    pub slot: usize,
}

impl Edge {
    pub fn other(&self, v: VertexId) -> VertexId {
        if v == self.source {
            self.target
        } else {
            self.source
        }
    }

    pub fn touches(&self, v: VertexId) -> bool {
        self.source == v || self.target == v
    }
}

/// The Schreier multigraph of `Γ` acting on `Δ × Π Z/Nᵢ` by translation.
#[derive(Debug, Clone)]
pub struct TorusInstance {
    group: MarkedGroup,
    periods: Vec<u64>,
    radix: Vec<u64>,
    n_vertices: usize,
    slots: Vec<Slot>,
    edges: Vec<Edge>,
    out_edge: Vec<EdgeId>,
    in_edge: Vec<EdgeId>,
    incident: Vec<EdgeId>,
    degree: usize,
}

pub fn build_torus_instance(
    group: MarkedGroup,
    periods: &[u64],
) -> Result<TorusInstance, GroupError> {
    if periods.len() != group.rank {
        return Err(GroupError::PeriodCountMismatch {
            expected: group.rank,
            got: periods.len(),
        });
    }
    for (axis, &n) in periods.iter().enumerate() {
        let step = group
            .pairs
            .iter()
            .map(|p| p.rep.free[axis].unsigned_abs())
            .max()
            .unwrap_or(0);
        let needed = (2 * step).max(1);
        if n <= needed {
            return Err(GroupError::PeriodTooSmall {
                axis,
                period: n,
                needed,
            });
        }
    }
    let radix: Vec<u64> = group
        .invariants
        .iter()
        .chain(periods.iter())
        .copied()
        .collect();
    let n_vertices = radix.iter().product::<u64>() as usize;
    let slots = group.slots();
    let ns = slots.len();
    let mut inst = TorusInstance {
        group,
        periods: periods.to_vec(),
        radix,
        n_vertices,
        slots,
        edges: Vec::new(),
        out_edge: vec![usize::MAX; n_vertices * ns],
        in_edge: vec![usize::MAX; n_vertices * ns],
        incident: Vec::new(),
        degree: 0,
    };
    inst.degree = inst.group.degree();

    let mut edges = Vec::with_capacity(n_vertices * ns);
    for v in 0..n_vertices {
        for (s, slot) in inst.slots.iter().enumerate() {
            let p = &inst.group.pairs[slot.pair];
            let t = inst.act(v, &p.rep);
            if p.involution && t < v {
                continue;
            }
            edges.push(Edge {
                source: v,
                target: t,
                slot: s,
            });
        }
    }
    edges.sort_by_key(|e| (e.source.min(e.target), e.slot, e.source.max(e.target)));
    for (id, e) in edges.iter().enumerate() {
        let inv = inst.group.pairs[inst.slots[e.slot].pair].involution;
        inst.out_edge[e.source * ns + e.slot] = id;
        inst.in_edge[e.target * ns + e.slot] = id;
        if inv {
            inst.out_edge[e.target * ns + e.slot] = id;
            inst.in_edge[e.source * ns + e.slot] = id;
        }
    }
    inst.edges = edges;

    let mut incident = Vec::with_capacity(n_vertices * inst.degree);
    for v in 0..n_vertices {
        for (s, slot) in inst.slots.iter().enumerate() {
            incident.push(inst.out_edge[v * ns + s]);
            if !inst.group.pairs[slot.pair].involution {
                incident.push(inst.in_edge[v * ns + s]);
            }
        }
    }
    inst.incident = incident;
    Ok(inst)
}

impl TorusInstance {
    pub fn group(&self) -> &MarkedGroup {
        &self.group
    }

    pub fn periods(&self) -> &[u64] {
        &self.periods
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn pair_of_slot(&self, s: usize) -> &GeneratorPair {
        &self.group.pairs[self.slots[s].pair]
    }

    /// Regular degree `|S|`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn has_odd_period(&self) -> bool {
        self.periods.iter().any(|n| n % 2 == 1)
    }

    /// Coordinates `(torsion..., free...)`, each in `[0, radix)`.
    pub fn coords(&self, mut v: VertexId) -> Vec<u64> {
        let mut c = vec![0; self.radix.len()];
        for i in (0..self.radix.len()).rev() {
            c[i] = (v as u64) % self.radix[i];
            v /= self.radix[i] as usize;
        }
        c
    }

    pub fn vertex_at(&self, coords: &[i64]) -> VertexId {
        let mut v = 0usize;
        for (c, &r) in coords.iter().zip(&self.radix) {
            v = v * r as usize + c.rem_euclid(r as i64) as usize;
        }
        v
    }

    pub fn element_of(&self, v: VertexId) -> GroupElement {
        let c = self.coords(v);
        let t = self.group.invariants.len();
        GroupElement {
            torsion: c[..t].to_vec(),
            free: c[t..].iter().map(|&x| x as i64).collect(),
        }
    }

    pub fn vertex_of(&self, e: &GroupElement) -> VertexId {
        let coords: Vec<i64> = e
            .torsion
            .iter()
            .map(|&t| t as i64)
            .chain(e.free.iter().copied())
            .collect();
        self.vertex_at(&coords)
    }

    /// `γ · v`.
    pub fn act(&self, v: VertexId, g: &GroupElement) -> VertexId {
        let c = self.coords(v);
        let coords: Vec<i64> = c
            .iter()
            .zip(
                g.torsion
                    .iter()
                    .map(|&t| t as i64)
                    .chain(g.free.iter().copied()),
            )
            .map(|(&a, b)| a as i64 + b)
            .collect();
        self.vertex_at(&coords)
    }

    /// Edge `(v, γ_s v)` for slot `s`.
    pub fn out_edge(&self, v: VertexId, s: usize) -> EdgeId {
        self.out_edge[v * self.slots.len() + s]
    }

    /// Edge `(γ_s⁻¹ v, v)` for slot `s`.
    pub fn in_edge(&self, v: VertexId, s: usize) -> EdgeId {
        self.in_edge[v * self.slots.len() + s]
    }

    /// `γ_s^{±1} · v` along slot `s`.
    pub fn step(&self, v: VertexId, s: usize, forward: bool) -> VertexId {
        let e = &self.edges[if forward {
            self.out_edge(v, s)
        } else {
            self.in_edge(v, s)
        }];
        e.other(v)
    }

    pub fn incident(&self, v: VertexId) -> &[EdgeId] {
        &self.incident[v * self.degree..(v + 1) * self.degree]
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.incident(v)
            .iter()
            .map(move |&e| self.edges[e].other(v))
    }

    /// Multi-source breadth-first distances, `u32::MAX` for unreachable.
    pub fn distances_from(&self, sources: &VertexSet) -> Vec<u32> {
        self.distances_from_capped(sources, u32::MAX)
    }

    pub fn distances_from_capped(&self, sources: &VertexSet, cap: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n_vertices];
        let mut queue = VecDeque::new();
        for v in sources.iter() {
            dist[v] = 0;
            queue.push_back(v);
        }
        while let Some(v) = queue.pop_front() {
            if dist[v] >= cap {
                continue;
            }
            for w in self.neighbors(v) {
                if dist[w] == u32::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// Membership over an instance's vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    bits: Vec<bool>,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet {
            bits: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        VertexSet {
            bits: vec![true; n],
        }
    }

    pub fn from_vertices(n: usize, vs: impl IntoIterator<Item = VertexId>) -> Self {
        let mut s = Self::empty(n);
        for v in vs {
            s.insert(v);
        }
        s
    }

    pub fn from_predicate(n: usize, f: impl Fn(VertexId) -> bool) -> Self {
        VertexSet {
            bits: (0..n).map(f).collect(),
        }
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.bits[v]
    }

    pub fn insert(&mut self, v: VertexId) {
        self.bits[v] = true;
    }

    pub fn remove(&mut self, v: VertexId) {
        self.bits[v] = false;
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(v, &b)| b.then_some(v))
    }

    pub fn union(&self, other: &Self) -> Self {
        VertexSet {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        VertexSet {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }

    pub fn difference(&self, other: &Self) -> Self {
        VertexSet {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| *a && !*b)
                .collect(),
        }
    }

    pub fn complement(&self) -> Self {
        VertexSet {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !(*a && *b))
    }
}

/// `B(U, n)`: vertices at path distance at most `n` from `U`.
pub fn ball(instance: &TorusInstance, u: &VertexSet, n: u32) -> VertexSet {
    let dist = instance.distances_from_capped(u, n);
    VertexSet::from_predicate(instance.n_vertices(), |v| dist[v] <= n)
}

/// `A(U, n, m) = B(U, m) − B(U, n)`.
pub fn annulus(
    instance: &TorusInstance,
    u: &VertexSet,
    n: u32,
    m: u32,
) -> Result<VertexSet, GroupError> {
    if n > m {
        return Err(GroupError::BadRadii { inner: n, outer: m });
    }
    let dist = instance.distances_from_capped(u, m);
    Ok(VertexSet::from_predicate(instance.n_vertices(), |v| {
        dist[v] <= m && dist[v] > n
    }))
}

/// Connected components of `G^{≤N}` restricted to `set`: two members are
/// joined when some path of length at most `N` in the full graph links them.
/// Components are sorted internally and ordered by their least vertex.
pub fn power_reach(instance: &TorusInstance, set: &VertexSet, n: u32) -> Vec<Vec<VertexId>> {
    let nv = instance.n_vertices();
    let mut comp = vec![usize::MAX; nv];
    let mut components: Vec<Vec<VertexId>> = Vec::new();
    let mut seen = vec![u32::MAX; nv];
    let mut stamp = 0u32;
    let mut local = VecDeque::new();
    for start in set.iter() {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        comp[start] = id;
        let mut frontier = vec![start];
        while let Some(src) = frontier.pop() {
            stamp += 1;
            seen[src] = stamp;
            local.clear();
            local.push_back((src, 0u32));
            while let Some((v, d)) = local.pop_front() {
                if set.contains(v) && comp[v] == usize::MAX {
                    comp[v] = id;
                    members.push(v);
                    frontier.push(v);
                }
                if d == n {
                    continue;
                }
                for w in instance.neighbors(v) {
                    if seen[w] != stamp {
                        seen[w] = stamp;
                        local.push_back((w, d + 1));
                    }
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// `Δ' = ⊕ stepᵢ · Z/nᵢ`, a coordinate subgroup of the torsion part.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupSpec {
    pub steps: Vec<u64>,
}

impl SubgroupSpec {
    pub fn whole(invariants: &[u64]) -> Self {
        SubgroupSpec {
            steps: vec![1; invariants.len()],
        }
    }

    pub fn trivial(invariants: &[u64]) -> Self {
        SubgroupSpec {
            steps: invariants.to_vec(),
        }
    }

    /// An index-2 subgroup, available exactly when `|Δ|` is even.
    pub fn index_two(invariants: &[u64]) -> Option<Self> {
        let i = invariants.iter().position(|n| n % 2 == 0)?;
        let mut steps = vec![1; invariants.len()];
        steps[i] = 2;
        Some(SubgroupSpec { steps })
    }

    pub fn contains(&self, t: &[u64]) -> bool {
        t.iter().zip(&self.steps).all(|(x, s)| x % s == 0)
    }

    pub fn order(&self, invariants: &[u64]) -> u64 {
        invariants
            .iter()
            .zip(&self.steps)
            .map(|(n, s)| n / s)
            .product()
    }
}

/// Result of collapsing `Δ'`-orbits.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub instance: TorusInstance,
    /// Original vertex to its `Δ'`-orbit.
    pub vertex_map: Vec<VertexId>,
    /// Original edge to the quotient edge it lifts, `None` for `S₁`-edges.
    pub edge_lift: Vec<Option<EdgeId>>,
    /// Original pairs whose image is the identity (the pairs of `S₁ = S ∩ Δ'`).
    pub dropped_pairs: Vec<usize>,
    pub subgroup: SubgroupSpec,
}

impl Quotient {
    pub fn is_internal_slot(&self, original: &TorusInstance, slot: usize) -> bool {
        self.dropped_pairs.contains(&original.slots()[slot].pair)
    }
}

/// Quotient of an instance by a coordinate subgroup of its torsion part.
/// Generator images keep their multiplicities; identity images are dropped
/// and reported.
pub fn quotient_by_torsion(
    instance: &TorusInstance,
    subgroup: &SubgroupSpec,
) -> Result<Quotient, GroupError> {
    let group = instance.group();
    let inv = group.invariants();
    if subgroup.steps.len() != inv.len() {
        return Err(GroupError::DimensionMismatch {
            what: "subgroup",
            expected: inv.len(),
            got: subgroup.steps.len(),
        });
    }
    for (&s, &n) in subgroup.steps.iter().zip(inv) {
        if s == 0 || n % s != 0 {
            return Err(GroupError::NotASubgroup {
                step: s,
                invariant: n,
            });
        }
    }
    // Quotient torsion keeps only coordinates with step > 1.
    let kept: Vec<usize> = (0..inv.len()).filter(|&i| subgroup.steps[i] > 1).collect();
    let q_inv: Vec<u64> = kept.iter().map(|&i| subgroup.steps[i]).collect();
    let image = |e: &GroupElement| GroupElement {
        torsion: kept
            .iter()
            .map(|&i| e.torsion[i] % subgroup.steps[i])
            .collect(),
        free: e.free.clone(),
    };

    let mut multiset: BTreeMap<GroupElement, u32> = BTreeMap::new();
    let mut dropped = Vec::new();
    for (pi, p) in group.pairs().iter().enumerate() {
        let im = image(&p.rep);
        if im.is_identity() {
            dropped.push(pi);
            continue;
        }
        *multiset.entry(im.clone()).or_insert(0) += p.mult;
        if !p.involution {
            *multiset.entry(im.inverse(&q_inv)).or_insert(0) += p.mult;
        }
    }
    if multiset.is_empty() {
        return Err(GroupError::ExhaustedGenerators);
    }
    let q_group = MarkedGroup::from_multiset(q_inv.clone(), group.rank(), &multiset)?;
    let q_inst = build_torus_instance(q_group, instance.periods())?;

    let vertex_map: Vec<VertexId> = (0..instance.n_vertices())
        .map(|v| q_inst.vertex_of(&image(&instance.element_of(v))))
        .collect();

    // Slot offsets per original pair inside its quotient pair.
    let q_pairs = q_inst.group().pairs();
    let mut used: Vec<u32> = vec![0; q_pairs.len()];
    let mut pair_target: Vec<Option<(usize, bool, u32)>> = vec![None; group.pairs().len()];
    for (pi, p) in group.pairs().iter().enumerate() {
        if dropped.contains(&pi) {
            continue;
        }
        let im = image(&p.rep);
        let (qi, forward) = q_pairs
            .iter()
            .enumerate()
            .find_map(|(qi, qp)| {
                if qp.rep == im {
                    Some((qi, true))
                } else if qp.inverse == im {
                    Some((qi, false))
                } else {
                    None
                }
            })
            .expect("image pair present");
        pair_target[pi] = Some((qi, forward, used[qi]));
        used[qi] += if q_pairs[qi].involution && !p.involution {
            2 * p.mult
        } else {
            p.mult
        };
    }
    let q_slot_base: Vec<usize> = {
        let mut base = Vec::with_capacity(q_pairs.len());
        let mut acc = 0;
        for qp in q_pairs {
            base.push(acc);
            acc += qp.mult as usize;
        }
        base
    };

    let edge_lift = instance
        .edges()
        .iter()
        .map(|e| {
            let slot = instance.slots()[e.slot];
            let p = &group.pairs()[slot.pair];
            let (qi, forward, off) = pair_target[slot.pair]?;
            let qp = &q_pairs[qi];
            let xs = vertex_map[e.source];
            let xt = vertex_map[e.target];
            let qs = if qp.involution && !p.involution {
                q_slot_base[qi] + (off + 2 * slot.copy + u32::from(xs > xt)) as usize
            } else {
                q_slot_base[qi] + (off + slot.copy) as usize
            };
            Some(if qp.involution || forward {
                q_inst.out_edge(xs, qs)
            } else {
                q_inst.in_edge(xs, qs)
            })
        })
        .collect();

    Ok(Quotient {
        instance: q_inst,
        vertex_map,
        edge_lift,
        dropped_pairs: dropped,
        subgroup: subgroup.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_standard(rank: usize) -> MarkedGroup {
        let mut gens = Vec::new();
        for i in 0..rank {
            let mut v = vec![0; rank];
            v[i] = 1;
            gens.push(GeneratorSpec::new(&[], &v, 1));
            v[i] = -1;
            gens.push(GeneratorSpec::new(&[], &v, 1));
        }
        make_marked_group(&[], rank, &gens).unwrap()
    }

    #[test]
    fn marked_z_standard() {
        let g = z_standard(1);
        assert_eq!(g.degree(), 2);
        assert_eq!(g.pairs().len(), 1);
        assert_eq!(g.pairs()[0].rep.free, vec![1]);
    }

    #[test]
    fn involution_is_its_own_inverse() {
        let g = make_marked_group(&[2], 1, &[GeneratorSpec::new(&[1], &[0], 1)]).unwrap();
        assert!(g.pairs()[0].involution);
        assert_eq!(g.degree(), 1);
    }

    #[test]
    fn missing_inverse_rejected() {
        let err = make_marked_group(&[], 1, &[GeneratorSpec::new(&[], &[1], 1)]).unwrap_err();
        assert!(matches!(err, GroupError::AsymmetricMultiset { .. }));
    }

    #[test]
    fn identity_and_bad_invariants_rejected() {
        let err = make_marked_group(&[3], 0, &[GeneratorSpec::new(&[3], &[], 1)]).unwrap_err();
        assert!(matches!(err, GroupError::IdentityGenerator(_)));
        let err = make_marked_group(&[0], 0, &[]).unwrap_err();
        assert_eq!(err, GroupError::NonpositiveInvariant(0));
    }

    #[test]
    fn six_cycle() {
        let inst = build_torus_instance(z_standard(1), &[6]).unwrap();
        assert_eq!(inst.n_vertices(), 6);
        assert_eq!(inst.edges().len(), 6);
        for v in 0..6 {
            assert_eq!(inst.incident(v).len(), 2);
        }
    }

    #[test]
    fn z2_four_by_four() {
        let inst = build_torus_instance(z_standard(2), &[4, 4]).unwrap();
        assert_eq!(inst.n_vertices(), 16);
        assert_eq!(inst.edges().len(), 32);
        assert_eq!(inst.degree(), 4);
    }

    #[test]
    fn z2_times_z_counts() {
        let g = make_marked_group(
            &[2],
            1,
            &[
                GeneratorSpec::new(&[0], &[1], 1),
                GeneratorSpec::new(&[0], &[-1], 1),
                GeneratorSpec::new(&[1], &[0], 1),
            ],
        )
        .unwrap();
        let inst = build_torus_instance(g, &[8]).unwrap();
        assert_eq!(inst.n_vertices(), 16);
        assert_eq!(inst.degree(), 3);
        // 16·3/2, counted by enumeration
        let ends: usize = (0..16).map(|v| inst.incident(v).len()).sum();
        assert_eq!(ends / 2, 24);
        assert_eq!(inst.edges().len(), 24);
    }

    #[test]
    fn period_too_small() {
        let g = make_marked_group(
            &[],
            1,
            &[
                GeneratorSpec::new(&[], &[3], 1),
                GeneratorSpec::new(&[], &[-3], 1),
            ],
        )
        .unwrap();
        assert!(matches!(
            build_torus_instance(g, &[6]),
            Err(GroupError::PeriodTooSmall { .. })
        ));
    }

    #[test]
    fn power_reach_examples() {
        let inst = build_torus_instance(z_standard(1), &[6]).unwrap();
        let all = VertexSet::full(6);
        assert_eq!(power_reach(&inst, &all, 2).len(), 1);
        let anti = VertexSet::from_vertices(6, [0, 3]);
        assert_eq!(power_reach(&inst, &anti, 2), vec![vec![0], vec![3]]);
        let pair = VertexSet::from_vertices(6, [1, 2]);
        assert_eq!(power_reach(&inst, &pair, 1), vec![vec![1, 2]]);
    }

    #[test]
    fn balls_and_annuli() {
        let inst = build_torus_instance(z_standard(1), &[6]).unwrap();
        let u = VertexSet::from_vertices(6, [0]);
        assert_eq!(ball(&inst, &u, 0), u);
        assert!(annulus(&inst, &u, 2, 2).unwrap().is_empty());
        assert_eq!(ball(&inst, &u, 2).len(), 5);
        assert!(matches!(
            annulus(&inst, &u, 3, 2),
            Err(GroupError::BadRadii { .. })
        ));
    }

    #[test]
    fn quotient_collapses_torsion() {
        let g = make_marked_group(
            &[2],
            1,
            &[
                GeneratorSpec::new(&[0], &[1], 1),
                GeneratorSpec::new(&[0], &[-1], 1),
                GeneratorSpec::new(&[1], &[1], 1),
                GeneratorSpec::new(&[1], &[-1], 1),
                GeneratorSpec::new(&[1], &[0], 1),
            ],
        )
        .unwrap();
        let inst = build_torus_instance(g, &[6]).unwrap();
        let q = quotient_by_torsion(&inst, &SubgroupSpec::whole(&[2])).unwrap();
        assert_eq!(q.instance.n_vertices(), 6);
        // (0,±1) and (1,±1) collide on ±1 with multiplicity 2
        assert_eq!(q.instance.group().pairs().len(), 1);
        assert_eq!(q.instance.group().pairs()[0].mult, 2);
        assert_eq!(q.dropped_pairs.len(), 1);
    }

    #[test]
    fn trivial_quotient_is_identity() {
        let g = make_marked_group(
            &[3],
            1,
            &[
                GeneratorSpec::new(&[1], &[0], 1),
                GeneratorSpec::new(&[2], &[0], 1),
                GeneratorSpec::new(&[0], &[1], 1),
                GeneratorSpec::new(&[0], &[-1], 1),
            ],
        )
        .unwrap();
        let inst = build_torus_instance(g, &[4]).unwrap();
        let q = quotient_by_torsion(&inst, &SubgroupSpec::trivial(&[3])).unwrap();
        assert_eq!(q.instance.n_vertices(), inst.n_vertices());
        assert_eq!(q.instance.edges().len(), inst.edges().len());
        assert!(q.dropped_pairs.is_empty());
    }

    #[test]
    fn quotient_exhausts_generators() {
        let g = make_marked_group(&[2], 0, &[GeneratorSpec::new(&[1], &[], 1)]).unwrap();
        let inst = build_torus_instance(g, &[]).unwrap();
        assert_eq!(
            quotient_by_torsion(&inst, &SubgroupSpec::whole(&[2])).unwrap_err(),
            GroupError::ExhaustedGenerators
        );
        assert!(matches!(
            quotient_by_torsion(&inst, &SubgroupSpec { steps: vec![3] }),
            Err(GroupError::NotASubgroup { .. })
        ));
    }
}
