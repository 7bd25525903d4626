use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::C64;
use crate::error::{Error, Result};

/// Hermiticity and unitarity checks use this absolute tolerance, scaled by the
/// largest entry magnitude when that exceeds one.
pub const ALGEBRAIC_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Hermitian,
    Unitary,
    Diagonal,
    General,
}

#[derive(Clone, Debug)]
struct Block {
    indices: Vec<usize>,
    entries: DMatrix<C64>,
}

/// Dense complex operator stored as a direct sum of dense blocks.
///
/// The blocks partition the basis indices; every entry coupling two different
/// blocks is zero. Every operator the protocol needs conserves some set of
/// occupation numbers, so the blocks stay small even where the full matrix
/// would not fit in memory.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    dim: usize,
    kind: OperatorKind,
    blocks: Vec<Block>,
    // basis index -> (block, position inside the block)
    location: Vec<(usize, usize)>,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller index as root so block order is stable
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Groups ordered by their smallest member.
    fn groups(mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let root = self.find(i);
            if slot[root] == usize::MAX {
                slot[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[root]].push(i);
        }
        groups
    }
}

impl OperatorMatrix {
    /// Builds an operator from `(row, column, value)` triplets; repeated
    /// positions are summed.
    pub fn from_entries(
        dim: usize,
        kind: OperatorKind,
        entries: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let entries: Vec<(usize, usize, C64)> = entries
            .into_iter()
            .filter(|(_, _, v)| *v != C64::new(0.0, 0.0))
            .collect();
        let mut sets = DisjointSet::new(dim);
        for &(r, c, _) in &entries {
            sets.union(r, c);
        }
        let mut op = Self::with_partition(dim, kind, sets.groups());
        for (r, c, v) in entries {
            let (b, i) = op.location[r];
            let (_, j) = op.location[c];
            op.blocks[b].entries[(i, j)] += v;
        }
        op
    }

    pub fn diagonal(values: impl IntoIterator<Item = C64>) -> Self {
        let values: Vec<C64> = values.into_iter().collect();
        let dim = values.len();
        let mut op = Self::with_partition(dim, OperatorKind::Diagonal, (0..dim).map(|i| vec![i]));
        for (i, v) in values.into_iter().enumerate() {
            op.blocks[i].entries[(0, 0)] = v;
        }
        op
    }

    pub fn real_diagonal(values: impl IntoIterator<Item = f64>) -> Self {
        Self::diagonal(values.into_iter().map(|v| C64::new(v, 0.0)))
    }

    pub fn identity(dim: usize) -> Self {
        Self::real_diagonal(std::iter::repeat_n(1.0, dim))
    }

    fn with_partition(
        dim: usize,
        kind: OperatorKind,
        groups: impl IntoIterator<Item = Vec<usize>>,
    ) -> Self {
        let mut location = vec![(0, 0); dim];
        let blocks: Vec<Block> = groups
            .into_iter()
            .enumerate()
            .map(|(b, indices)| {
                for (pos, &i) in indices.iter().enumerate() {
                    location[i] = (b, pos);
                }
                let n = indices.len();
                Block {
                    indices,
                    entries: DMatrix::zeros(n, n),
                }
            })
            .collect();
        Self {
            dim,
            kind,
            blocks,
            location,
        }
    }

    /// Finest partition in which both operators are block diagonal.
    fn joint_partition(&self, other: &OperatorMatrix) -> Vec<Vec<usize>> {
        let mut sets = DisjointSet::new(self.dim);
        for op in [self, other] {
            for block in &op.blocks {
                for w in block.indices.windows(2) {
                    sets.union(w[0], w[1]);
                }
            }
        }
        sets.groups()
    }

    fn regrouped(&self, groups: &[Vec<usize>]) -> Vec<DMatrix<C64>> {
        groups
            .iter()
            .map(|indices| {
                let n = indices.len();
                DMatrix::from_fn(n, n, |i, j| self.entry(indices[i], indices[j]))
            })
            .collect()
    }

    fn from_blocks(dim: usize, kind: OperatorKind, groups: Vec<Vec<usize>>, mats: Vec<DMatrix<C64>>) -> Self {
        let mut op = Self::with_partition(dim, kind, groups);
        for (block, m) in op.blocks.iter_mut().zip(mats) {
            block.entries = m;
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(|b| b.indices.len()).max().unwrap_or(0)
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        let (br, i) = self.location[row];
        let (bc, j) = self.location[col];
        if br != bc {
            return C64::new(0.0, 0.0);
        }
        self.blocks[br].entries[(i, j)]
    }

    /// Diagonal entries in basis order.
    pub fn diagonal_entries(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.entry(i, i)).collect()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.entries.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.blocks.iter().all(|b| {
            let n = b.indices.len();
            (0..n).all(|i| (0..n).all(|j| i == j || b.entries[(i, j)] == C64::new(0.0, 0.0)))
        })
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim, "vector length does not match operator");
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        for block in &self.blocks {
            let idx = &block.indices;
            if idx.len() == 1 {
                y[idx[0]] = block.entries[(0, 0)] * x[idx[0]];
                continue;
            }
            for (i, &row) in idx.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (j, &col) in idx.iter().enumerate() {
                    acc += block.entries[(i, j)] * x[col];
                }
                y[row] = acc;
            }
        }
        y
    }

    pub fn adjoint(&self) -> Self {
        let mut out = self.clone();
        for block in &mut out.blocks {
            block.entries = block.entries.adjoint();
        }
        out
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        for block in &mut out.blocks {
            block.entries *= factor;
        }
        if out.kind != OperatorKind::Diagonal {
            out.kind = OperatorKind::General;
        }
        out
    }

    pub fn add(&self, other: &OperatorMatrix) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        let groups = self.joint_partition(other);
        let a = self.regrouped(&groups);
        let b = other.regrouped(&groups);
        let mats = a.into_iter().zip(b).map(|(x, y)| x + y).collect();
        let kind = if self.kind == OperatorKind::Diagonal && other.kind == OperatorKind::Diagonal {
            OperatorKind::Diagonal
        } else {
            OperatorKind::General
        };
        Self::from_blocks(self.dim, kind, groups, mats)
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Self {
        self.add(&other.scaled(C64::new(-1.0, 0.0)))
    }

    /// Matrix product `self * other` (apply `other` first).
    pub fn matmul(&self, other: &OperatorMatrix) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        let groups = self.joint_partition(other);
        let a = self.regrouped(&groups);
        let b = other.regrouped(&groups);
        let mats = a.into_iter().zip(b).map(|(x, y)| x * y).collect();
        let kind = match (self.kind, other.kind) {
            (OperatorKind::Diagonal, OperatorKind::Diagonal) => OperatorKind::Diagonal,
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            _ => OperatorKind::General,
        };
        Self::from_blocks(self.dim, kind, groups, mats)
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &OperatorMatrix) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Largest entry of `|A - B|`.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        self.sub(other).max_abs_entry()
    }

    /// Largest entry of `|A - A^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (&b.entries - b.entries.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|U^dagger U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let n = b.indices.len();
                let gram = b.entries.adjoint() * &b.entries;
                (gram - DMatrix::<C64>::identity(n, n))
                    .iter()
                    .map(|v| v.norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Re-labels the operator after checking the invariant of `kind`.
    pub fn with_kind(mut self, kind: OperatorKind) -> Result<Self> {
        let scale = self.max_abs_entry().max(1.0);
        let ok = match kind {
            OperatorKind::Hermitian => {
                let deviation = self.hermiticity_error();
                if deviation > ALGEBRAIC_TOLERANCE * scale {
                    return Err(Error::NotHermitian { deviation });
                }
                true
            }
            OperatorKind::Unitary => self.unitarity_error() <= ALGEBRAIC_TOLERANCE,
            OperatorKind::Diagonal => self.is_diagonal(),
            OperatorKind::General => true,
        };
        if !ok {
            return Err(Error::argument(format!("operator does not satisfy the {kind:?} invariant")));
        }
        self.kind = kind;
        Ok(self)
    }

    /// Dense copy of the full matrix. Intended for small bases and tests.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for block in &self.blocks {
            for (i, &r) in block.indices.iter().enumerate() {
                for (j, &c) in block.indices.iter().enumerate() {
                    m[(r, c)] = block.entries[(i, j)];
                }
            }
        }
        m
    }
}

/// `exp(-i * scale * H)` for Hermitian `H`, via a full eigendecomposition of
/// each block: `sum_k exp(-i * scale * lambda_k) |k><k|`.
pub fn exp_unitary(generator: &OperatorMatrix, scale: f64) -> Result<OperatorMatrix> {
    let tolerance = ALGEBRAIC_TOLERANCE * generator.max_abs_entry().max(1.0);
    let deviation = generator.hermiticity_error();
    if deviation > tolerance {
        return Err(Error::NotHermitian { deviation });
    }
    let mut out = generator.clone();
    out.kind = OperatorKind::Unitary;
    for block in &mut out.blocks {
        let n = block.indices.len();
        if n == 1 {
            let lambda = block.entries[(0, 0)].re;
            block.entries[(0, 0)] = C64::new(0.0, -scale * lambda).exp();
            continue;
        }
        let hermitian = (&block.entries + block.entries.adjoint()) * C64::new(0.5, 0.0);
        let eigen = SymmetricEigen::new(hermitian);
        let phases = DMatrix::from_diagonal(
            &eigen
                .eigenvalues
                .map(|lambda| C64::new(0.0, -scale * lambda).exp()),
        );
        block.entries = &eigen.eigenvectors * phases * eigen.eigenvectors.adjoint();
    }
    Ok(out)
}
