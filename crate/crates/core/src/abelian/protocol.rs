//! Protocols: periodic two-color rules for one generator's edges, written as
//! lookup tables over chart coordinates relative to a base point.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::AbelianError;
use crate::line::{double_code, Code};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtocolKind {
    /// Color by the parity of one chart coordinate.
    StandardAxis { axis: usize },
    /// Blocks of `block` along one axis, alternating with period `2·block`.
    AxisBlock { axis: usize, block: i64 },
    /// Rank-1 chart: color by the `Z/2` coordinate.
    TwoSided,
    /// Pure `Z` chart: color by parity.
    OddLine,
    /// Rank-1 chart: parity of `z` on both rows.
    Parallel,
    /// Rank-1 chart: parity of `z + ε`.
    Alternating,
    /// Rank-1 chart: blocks of `n` offset by `m` between the rows.
    Blocks { n: i64, m: i64 },
    /// Two-dimensional chart: parity of the second coordinate, flipped on
    /// every other pair of columns.
    Skew,
    /// Rank-1 chart: parity of `⌊z/unit⌋`, optionally flipped on row 1.
    Scaled { unit: i64, twist: bool },
    /// Rank-1 chart: the double code of `code`, row-independent.
    Coded { code: Code },
    /// An explicit intermediate pattern.
    Table,
}

/// A two-coloring of one generator's edges. The edge leaving chart point `g`
/// gets `colors[1]` when `table[(g - base) mod moduli]` is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub kind: ProtocolKind,
    pub colors: [u32; 2],
    pub base: Vec<i64>,
    pub moduli: Vec<i64>,
    pub table: Vec<bool>,
}

pub(crate) fn index_of(offset: &[i64], moduli: &[i64]) -> usize {
    let mut idx = 0usize;
    for (o, m) in offset.iter().zip(moduli) {
        idx = idx * (*m as usize) + (*o as usize);
    }
    idx
}

/// All points of the box `Π [0, moduli_i)` in row-major order.
pub(crate) fn grid(moduli: &[i64]) -> impl Iterator<Item = Vec<i64>> + '_ {
    let total: i64 = moduli.iter().product();
    (0..total).map(move |mut k| {
        let mut p = vec![0; moduli.len()];
        for i in (0..moduli.len()).rev() {
            p[i] = k % moduli[i];
            k /= moduli[i];
        }
        p
    })
}

pub(crate) fn lcm_vec(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x.lcm(y)).collect()
}

impl Protocol {
    /// Tabulates `second(offset)` over the period box.
    pub fn from_fn(
        kind: ProtocolKind,
        colors: [u32; 2],
        base: &[i64],
        moduli: Vec<i64>,
        second: impl Fn(&[i64]) -> bool,
    ) -> Self {
        assert_eq!(base.len(), moduli.len());
        assert!(moduli.iter().all(|&m| m >= 1));
        let table = grid(&moduli).map(|p| second(&p)).collect();
        Protocol {
            kind,
            colors,
            base: base.to_vec(),
            moduli,
            table,
        }
    }

    pub fn dims(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_second(&self, g: &[i64]) -> bool {
        let off: Vec<i64> = g
            .iter()
            .zip(&self.base)
            .zip(&self.moduli)
            .map(|((x, b), m)| (x - b).rem_euclid(*m))
            .collect();
        self.table[index_of(&off, &self.moduli)]
    }

    pub fn color(&self, g: &[i64]) -> u32 {
        self.colors[self.is_second(g) as usize]
    }

    /// Proper along the generator with chart vector `step`: consecutive
    /// edges of every orbit get different colors.
    pub fn check_alternates(&self, step: &[i64]) -> Result<(), AbelianError> {
        for p in grid(&self.moduli) {
            let g: Vec<i64> = p.iter().zip(&self.base).map(|(x, b)| x + b).collect();
            let h: Vec<i64> = g.iter().zip(step).map(|(x, s)| x + s).collect();
            if self.is_second(&g) == self.is_second(&h) {
                return Err(AbelianError::IllegalVariant(format!(
                    "{:?} does not alternate along {:?}",
                    self.kind, step
                )));
            }
        }
        Ok(())
    }

    /// Equal colorings of every chart point.
    pub fn same_coloring(&self, other: &Protocol) -> bool {
        if self.colors != other.colors || self.dims() != other.dims() {
            return false;
        }
        let l = lcm_vec(&self.moduli, &other.moduli);
        let same = grid(&l).all(|g| self.is_second(&g) == other.is_second(&g));
        same
    }

    pub fn standard_axis(d: usize, axis: usize, base: &[i64], colors: [u32; 2]) -> Self {
        let mut moduli = vec![1; d];
        moduli[axis] = 2;
        Self::from_fn(
            ProtocolKind::StandardAxis { axis },
            colors,
            base,
            moduli,
            |o| o[axis] == 1,
        )
    }

    pub fn axis_block(d: usize, axis: usize, block: i64, base: &[i64], colors: [u32; 2]) -> Self {
        let block = block.abs();
        let mut moduli = vec![1; d];
        moduli[axis] = 2 * block;
        Self::from_fn(
            ProtocolKind::AxisBlock { axis, block },
            colors,
            base,
            moduli,
            |o| o[axis] >= block,
        )
    }

    pub fn two_sided(base: &[i64], colors: [u32; 2]) -> Self {
        Self::from_fn(ProtocolKind::TwoSided, colors, base, vec![2, 1], |o| {
            o[0] == 1
        })
    }

    pub fn odd_line(base: &[i64], colors: [u32; 2]) -> Self {
        Self::from_fn(ProtocolKind::OddLine, colors, base, vec![2], |o| o[0] == 1)
    }

    pub fn parallel(base: &[i64], colors: [u32; 2]) -> Self {
        Self::from_fn(ProtocolKind::Parallel, colors, base, vec![1, 2], |o| {
            o[1] == 1
        })
    }

    pub fn alternating(base: &[i64], colors: [u32; 2]) -> Self {
        Self::from_fn(ProtocolKind::Alternating, colors, base, vec![2, 2], |o| {
            (o[0] + o[1]) % 2 == 1
        })
    }

    /// `t = (z - ε·m) mod 2n`; the second color on `t < n`.
    pub fn blocks(n: i64, m: i64, base: &[i64], colors: [u32; 2]) -> Self {
        Self::from_fn(
            ProtocolKind::Blocks { n, m },
            colors,
            base,
            vec![2, 2 * n],
            |o| (o[1] - o[0] * m).rem_euclid(2 * n) < n,
        )
    }

    /// Index `(g₂ + s(g₁)) mod 2` with `s(t) = ⌊t/2⌋ mod 2`; the two base
    /// coordinates may come from different points.
    pub fn skew(base: &[i64], colors: [u32; 2]) -> Self {
        Self::from_fn(ProtocolKind::Skew, colors, base, vec![4, 2], |o| {
            (o[1] + o[0] / 2) % 2 == 1
        })
    }

    pub fn scaled(unit: i64, twist: bool, base: &[i64], colors: [u32; 2]) -> Self {
        Self::from_fn(
            ProtocolKind::Scaled { unit, twist },
            colors,
            base,
            vec![2, 2 * unit],
            |o| ((o[1] / unit) + if twist { o[0] } else { 0 }) % 2 == 1,
        )
    }

    /// Row-independent double code; entries `5`/`6` map to the two colors.
    pub fn coded(code: &Code, base: &[i64], colors: [u32; 2]) -> Self {
        let dc = double_code(code);
        let len = dc.entries.len() as i64;
        Self::from_fn(
            ProtocolKind::Coded { code: code.clone() },
            colors,
            base,
            vec![1, len],
            |o| dc.entries[o[1] as usize] == 6,
        )
    }
}

/// Orbit pairing values as a periodic table: `0` unpaired, `±1` partner
/// across the helper in that direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairTable {
    pub base: Vec<i64>,
    pub moduli: Vec<i64>,
    pub table: Vec<i8>,
}

impl PairTable {
    pub fn from_fn(base: &[i64], moduli: Vec<i64>, f: impl Fn(&[i64]) -> i8) -> Self {
        let table = grid(&moduli).map(|p| f(&p)).collect();
        PairTable {
            base: base.to_vec(),
            moduli,
            table,
        }
    }

    pub fn at(&self, g: &[i64]) -> i8 {
        let off: Vec<i64> = g
            .iter()
            .zip(&self.base)
            .zip(&self.moduli)
            .map(|((x, b), m)| (x - b).rem_euclid(*m))
            .collect();
        self.table[index_of(&off, &self.moduli)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_block_trace() {
        // Block 2 on an axis of period 8: first, first, second, second, ...
        let p = Protocol::axis_block(1, 0, 2, &[0], [1, 2]);
        let colors: Vec<u32> = (0..8).map(|x| p.color(&[x])).collect();
        assert_eq!(colors, vec![1, 1, 2, 2, 1, 1, 2, 2]);
        p.check_alternates(&[2]).unwrap();
        assert!(p.check_alternates(&[1]).is_err());
    }

    #[test]
    fn base_matters_modulo_two() {
        let a = Protocol::standard_axis(2, 0, &[0, 0], [1, 2]);
        let b = Protocol::standard_axis(2, 0, &[2, 5], [1, 2]);
        let c = Protocol::standard_axis(2, 0, &[1, 0], [1, 2]);
        assert!(a.same_coloring(&b));
        assert!(!a.same_coloring(&c));
    }

    #[test]
    fn rank_one_protocols_alternate() {
        let base = [0, 0];
        Protocol::parallel(&base, [1, 2])
            .check_alternates(&[0, 3])
            .unwrap();
        Protocol::alternating(&base, [1, 2])
            .check_alternates(&[0, 1])
            .unwrap();
        Protocol::two_sided(&base, [3, 4])
            .check_alternates(&[1, 2])
            .unwrap();
        Protocol::blocks(5, 2, &base, [1, 2])
            .check_alternates(&[0, 5])
            .unwrap();
        Protocol::scaled(2, true, &base, [5, 6])
            .check_alternates(&[0, 6])
            .unwrap();
        Protocol::coded(&Code::constant(4, 5), &base, [5, 6])
            .check_alternates(&[0, 4])
            .unwrap();
        Protocol::coded(&Code::constant(4, 5), &base, [5, 6])
            .check_alternates(&[0, 12])
            .unwrap();
        assert!(Protocol::parallel(&base, [1, 2])
            .check_alternates(&[0, 2])
            .is_err());
    }

    #[test]
    fn blocks_rows_offset_by_m() {
        let p = Protocol::blocks(3, 2, &[0, 0], [1, 2]);
        for z in 0..12 {
            assert_eq!(p.color(&[0, z]), p.color(&[1, z + 2]));
        }
        assert_eq!(p.color(&[0, 0]), 2);
        assert_eq!(p.color(&[0, 3]), 1);
    }

    #[test]
    fn skew_alternates_vertically() {
        let p = Protocol::skew(&[0, 0], [3, 4]);
        p.check_alternates(&[0, 1]).unwrap();
        // Columns 0,1 agree and columns 2,3 are flipped.
        assert_eq!(p.color(&[0, 0]), p.color(&[1, 0]));
        assert_ne!(p.color(&[1, 0]), p.color(&[2, 0]));
    }
}
