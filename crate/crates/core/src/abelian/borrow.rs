//! Parity borrowing: fill the free `γ₁`-edges of a band by alternation,
//! fixing parity mismatches with a borrowed `γ₂` color on paired orbits.

use std::cell::RefCell;
use std::collections::HashMap;

use super::frame::Frame;
use super::protocol::PairTable;
use super::AbelianError;
use crate::coloring::EdgeColoring;
use crate::group::{EdgeId, TorusInstance, VertexId, VertexSet};

/// `U` with its two boundary parts; `γ₁`-edges inside `U` missing both
/// `A` and `B` are free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub u: VertexSet,
    pub a: VertexSet,
    pub b: VertexSet,
}

impl Region {
    pub fn new(u: VertexSet, a: VertexSet, b: VertexSet) -> Result<Self, AbelianError> {
        if !a.is_disjoint(&b) || !a.is_subset(&u) || !b.is_subset(&u) {
            return Err(AbelianError::ConditionViolated {
                condition: 1,
                vertex: a.intersection(&b).iter().next().unwrap_or(0),
                detail: "A and B must be disjoint subsets of U".into(),
            });
        }
        Ok(Region { u, a, b })
    }

    fn interior(&self, v: VertexId) -> bool {
        self.u.contains(v) && !self.a.contains(v) && !self.b.contains(v)
    }
}

/// Per-vertex partner direction across `γ₂`: `0` unpaired, `±1` paired with
/// the orbit through `γ₂^{±1}·v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitPairing {
    pub dir: Vec<i8>,
}

impl OrbitPairing {
    pub fn unpaired(n_vertices: usize) -> Self {
        OrbitPairing {
            dir: vec![0; n_vertices],
        }
    }

    /// Pairs each orbit with the neighbor reached by a helper edge of color
    /// `sigma`, read from the current coloring.
    pub fn uniform(
        instance: &TorusInstance,
        coloring: &EdgeColoring,
        helper: usize,
        sigma: u32,
        region: &Region,
    ) -> Self {
        let mut dir = vec![0; instance.n_vertices()];
        for v in region.u.iter() {
            dir[v] = if coloring.get(instance.out_edge(v, helper)) == Some(sigma) {
                1
            } else {
                -1
            };
        }
        OrbitPairing { dir }
    }

    pub fn from_table(frame: &Frame, table: &PairTable, region: &Region) -> Self {
        let mut dir = vec![0; frame.coords.len()];
        for v in region.u.iter() {
            dir[v] = table.at(&frame.coords[v]);
        }
        OrbitPairing { dir }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Side {
    A,
    B,
}

fn other(colors: [u32; 2], c: u32) -> u32 {
    if c == colors[0] {
        colors[1]
    } else {
        colors[0]
    }
}

struct Line<'a> {
    instance: &'a TorusInstance,
    region: &'a Region,
    g1: usize,
    g2: usize,
    eps: i8,
    dir: &'a [i8],
    x0: VertexId,
    y0: VertexId,
    cache: RefCell<HashMap<i64, (VertexId, VertexId)>>,
}

impl Line<'_> {
    /// `(x_k, y_k)`; positions are visited outward from 0, so each lookup
    /// extends the cache by one step.
    fn xy(&self, k: i64) -> (VertexId, VertexId) {
        if k == 0 {
            return (self.x0, self.y0);
        }
        if let Some(&p) = self.cache.borrow().get(&k) {
            return p;
        }
        let fwd = k > 0;
        let (x, y) = self.xy(if fwd { k - 1 } else { k + 1 });
        let p = (
            self.instance.step(x, self.g1, fwd),
            self.instance.step(y, self.g1, fwd),
        );
        self.cache.borrow_mut().insert(k, p);
        p
    }

    fn x(&self, k: i64) -> VertexId {
        self.xy(k).0
    }

    fn y(&self, k: i64) -> VertexId {
        self.xy(k).1
    }

    fn e(&self, k: i64) -> EdgeId {
        self.instance.out_edge(self.x(k), self.g1)
    }

    fn e2(&self, k: i64) -> EdgeId {
        self.instance.out_edge(self.y(k), self.g1)
    }

    fn helper(&self, k: i64) -> EdgeId {
        let x = self.x(k);
        if self.eps > 0 {
            self.instance.out_edge(x, self.g2)
        } else {
            self.instance.in_edge(x, self.g2)
        }
    }

    fn free(&self, e: EdgeId) -> bool {
        let ed = self.instance.edge(e);
        self.region.interior(ed.source) && self.region.interior(ed.target)
    }

    fn check_constant(&self, k: i64) -> Result<(), AbelianError> {
        let x = self.x(k);
        if self.region.u.contains(x) && self.dir[x] != self.eps {
            return Err(AbelianError::BadPairing { vertex: x });
        }
        Ok(())
    }

    fn open(&self, k: i64) -> bool {
        self.free(self.e(k)) && (self.eps == 0 || self.free(self.e2(k)))
    }

    fn side(&self, e: EdgeId) -> Option<Side> {
        let ed = self.instance.edge(e);
        if self.region.a.contains(ed.source) || self.region.a.contains(ed.target) {
            Some(Side::A)
        } else if self.region.b.contains(ed.source) || self.region.b.contains(ed.target) {
            Some(Side::B)
        } else {
            None
        }
    }
}

fn violated(condition: u8, vertex: VertexId, detail: impl Into<String>) -> AbelianError {
    AbelianError::ConditionViolated {
        condition,
        vertex,
        detail: detail.into(),
    }
}

/// Fills the free `γ₁`-edges of the region in place. Returns the number of
/// borrow sites used.
pub(crate) fn borrow_in_place(
    instance: &TorusInstance,
    col: &mut EdgeColoring,
    g1: usize,
    g2: usize,
    region: &Region,
    pairing: &OrbitPairing,
    colors: [u32; 2],
) -> Result<usize, AbelianError> {
    let mut done = vec![false; instance.edges().len()];
    let mut sites = 0;
    let starts: Vec<VertexId> = region.u.iter().filter(|&v| region.interior(v)).collect();
    for v in starts {
        let e = instance.out_edge(v, g1);
        if done[e] {
            continue;
        }
        let ed = instance.edge(e);
        if !(region.interior(ed.source) && region.interior(ed.target)) {
            continue;
        }
        let eps = pairing.dir[v];
        let y0 = match eps {
            0 => v,
            1 => instance.step(v, g2, true),
            -1 => instance.step(v, g2, false),
            _ => return Err(AbelianError::BadPairing { vertex: v }),
        };
        if eps != 0 {
            let back = pairing.dir[y0];
            if back == 0 || instance.step(y0, g2, back > 0) != v {
                return Err(AbelianError::BadPairing { vertex: v });
            }
        }
        let line = Line {
            instance,
            region,
            g1,
            g2,
            eps,
            dir: &pairing.dir,
            x0: v,
            y0,
            cache: RefCell::new(HashMap::new()),
        };
        sites += fill_line(&line, col, &mut done, colors)?;
    }
    Ok(sites)
}

fn mark(line: &Line, done: &mut [bool], k: i64) {
    done[line.e(k)] = true;
    if line.eps != 0 {
        done[line.e2(k)] = true;
    }
}

/// The fixed color at a run boundary, copied onto a free partner edge.
fn boundary(
    line: &Line,
    col: &mut EdgeColoring,
    done: &mut [bool],
    k: i64,
    colors: [u32; 2],
) -> Result<(u32, Side), AbelianError> {
    let x = line.x(k);
    let mut edges = vec![line.e(k)];
    if line.eps != 0 {
        edges.push(line.e2(k));
    }
    let mut value = None;
    let mut side = None;
    for &e in &edges {
        if line.free(e) {
            continue;
        }
        let c = col
            .get(e)
            .ok_or_else(|| violated(1, x, format!("edge {e} meeting the boundary is uncolored")))?;
        if !colors.contains(&c) {
            return Err(violated(
                2,
                x,
                format!("edge {e} has color {c} outside {colors:?}"),
            ));
        }
        if let Some(prev) = value {
            if prev != c {
                return Err(violated(
                    3,
                    x,
                    format!("parallel edges disagree: {prev} vs {c}"),
                ));
            }
        }
        value = Some(c);
        side = side.or(line.side(e));
    }
    let value = value.expect("a boundary position has a fixed edge");
    let side = side.ok_or_else(|| violated(1, x, "fixed edge meets neither A nor B"))?;
    for &e in &edges {
        if line.free(e) {
            col.set(e, value);
            done[e] = true;
        }
    }
    Ok((value, side))
}

fn site_color(line: &Line, col: &EdgeColoring, k: i64, colors: [u32; 2]) -> Option<u32> {
    if line.eps == 0 || !line.open(k) {
        return None;
    }
    let h1 = col.get(line.helper(k))?;
    let h2 = col.get(line.helper(k + 1))?;
    (h1 == h2 && !colors.contains(&h1)).then_some(h1)
}

fn paint(line: &Line, col: &mut EdgeColoring, done: &mut [bool], k: i64, c: u32) {
    col.set(line.e(k), c);
    if line.eps != 0 {
        col.set(line.e2(k), c);
    }
    mark(line, done, k);
}

fn fill_line(
    line: &Line,
    col: &mut EdgeColoring,
    done: &mut [bool],
    colors: [u32; 2],
) -> Result<usize, AbelianError> {
    if !line.open(0) {
        // Half-fixed position: the partner's fixed color is copied.
        boundary(line, col, done, 0, colors)?;
        return Ok(0);
    }
    let mut b = 1i64;
    let mut cycle_len = None;
    while line.open(b) {
        if line.x(b) == line.x0 {
            cycle_len = Some(b);
            break;
        }
        b += 1;
    }
    if let Some(len) = cycle_len {
        return fill_cycle(line, col, done, len, colors);
    }
    let mut a = -1i64;
    while line.open(a) {
        a -= 1;
    }
    let (va, sa) = boundary(line, col, done, a, colors)?;
    let (vb, sb) = boundary(line, col, done, b, colors)?;
    let expected = if (b - a) % 2 == 0 {
        va
    } else {
        other(colors, va)
    };
    let mut site = None;
    if expected != vb {
        if sa == sb {
            return Err(violated(
                4,
                line.x(a + 1),
                "parity mismatch between two ends on the same side",
            ));
        }
        site = (a + 1..b).find_map(|k| site_color(line, col, k, colors).map(|s| (k, s)));
        if site.is_none() {
            return Err(violated(5, line.x(a + 1), "no borrow site on an A-B path"));
        }
    }
    for k in a + 1..b {
        line.check_constant(k)?;
    }
    let mut last = va;
    for k in a + 1..b {
        match site {
            Some((s, sigma)) if s == k => {
                paint(line, col, done, k, sigma);
                col.set(line.helper(k), other(colors, last));
                col.set(line.helper(k + 1), last);
            }
            _ => {
                let c = other(colors, last);
                paint(line, col, done, k, c);
                last = c;
            }
        }
    }
    if other(colors, last) != vb {
        return Err(violated(4, line.x(b), "alternation does not close"));
    }
    Ok(site.is_some() as usize)
}

fn fill_cycle(
    line: &Line,
    col: &mut EdgeColoring,
    done: &mut [bool],
    len: i64,
    colors: [u32; 2],
) -> Result<usize, AbelianError> {
    for k in 0..len {
        line.check_constant(k)?;
    }
    if len % 2 == 0 {
        for k in 0..len {
            paint(line, col, done, k, colors[(k % 2) as usize]);
        }
        return Ok(0);
    }
    let (s, sigma) = (0..len)
        .find_map(|k| site_color(line, col, k, colors).map(|c| (k, c)))
        .ok_or_else(|| violated(5, line.x0, "odd free cycle without a borrow site"))?;
    for i in 1..len {
        paint(line, col, done, s + i, colors[((i - 1) % 2) as usize]);
    }
    paint(line, col, done, s, sigma);
    // Position s-1 carries colors[1].
    col.set(line.helper(s), colors[0]);
    col.set(line.helper(s + 1), colors[1]);
    Ok(1)
}

/// Fills the free `γ₁`-edges (slot `g1`) of `region` by alternation with
/// `colors`, borrowing `γ₂` (slot `g2`) colors at sites of paired orbits to
/// fix parity between `A` and `B`.
pub fn borrow_parity(
    instance: &TorusInstance,
    coloring: &EdgeColoring,
    g1: usize,
    g2: usize,
    region: &Region,
    pairing: &OrbitPairing,
    colors: [u32; 2],
) -> Result<EdgeColoring, AbelianError> {
    let mut col = coloring.clone();
    borrow_in_place(instance, &mut col, g1, g2, region, pairing, colors)?;
    Ok(col)
}
