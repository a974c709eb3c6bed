//! Dense complex matrices and multipartite tensor bookkeeping.
//!
//! Storage is row-major. Kronecker products put the left operand's indices on
//! the slow (most significant) axis, and the same convention orders the
//! subsystems of a [`SpaceDescriptor`]: the first listed subsystem is the
//! slowest-varying factor of the joint index.

use std::fmt;
use std::ops::Index;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for comparisons of O(1) quantities.
pub const DEFAULT_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols.max(1)).take(8) {
            write!(f, "  ")?;
            for z in row.iter().take(8) {
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    /// Builds a matrix from a row-major buffer, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::BadShape {
                len: data.len(),
                expected: rows * cols,
            });
        }
        if let Some(i) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(
            rows,
            cols,
            data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "ragged rows: {} and {} entries",
                cols,
                bad.len()
            )));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, ui) in u.iter().enumerate() {
            if *ui == ZERO {
                continue;
            }
            let row = &mut m.data[i * v.len()..(i + 1) * v.len()];
            for (out, vj) in row.iter_mut().zip(v) {
                *out = ui * vj.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Option<Complex64> {
        (row < self.rows && col < self.cols).then(|| self.data[row * self.cols + col])
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .collect()
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    fn require_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows == other.rows && self.cols == other.cols {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )))
        }
    }

    pub fn trace(&self) -> Result<Complex64> {
        let n = self.require_square()?;
        Ok((0..n).map(|i| self.data[i * n + i]).sum())
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c].conj();
            }
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.data[i * self.cols + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    let dst = (i * other.rows + k) * cols + j * other.cols;
                    let src = other.row(k);
                    for (o, b) in out.data[dst..dst + other.cols].iter_mut().zip(src) {
                        *o = a * b;
                    }
                }
            }
        }
        out
    }

    /// Matrix product. Zero entries of `self` are skipped, which keeps products
    /// of embedded low-rank operators cheap.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let n = other.cols;
        let mut out = Self::zeros(self.rows, n);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix applied to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.require_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.require_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Frobenius inner product `tr(self† other) = Σ conj(a_jk) b_jk`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.require_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `tr(self · other)` in O(n²) without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> Result<Complex64> {
        if self.cols != other.rows || self.rows != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "tr(AB) with A {}x{} and B {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc = ZERO;
        for j in 0..self.rows {
            for k in 0..self.cols {
                acc += self.data[j * self.cols + k] * other.data[k * other.cols + j];
            }
        }
        Ok(acc)
    }

    /// Largest entry-wise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.require_same_shape(other).is_err() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// Largest `|a_jk - conj(a_kj)|`; infinite for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        let Ok(n) = self.require_square() else {
            return f64::INFINITY;
        };
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in j..n {
                let d = (self.data[j * n + k] - self.data[k * n + j].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Factor a hermitian positive semidefinite matrix as `A = L L†` with
    /// `L` of shape n×r, r the numerical rank, by diagonally pivoted Cholesky.
    ///
    /// Costs O(n r²) plus one pass over A per column, so pure states factor in
    /// linear time. Pivoting stops once every residual diagonal entry is below
    /// `rel_tol` times the largest diagonal entry of A.
    pub fn psd_factor(&self, rel_tol: f64) -> Result<ComplexMatrix> {
        let n = self.require_square()?;
        let mut residual: Vec<f64> = (0..n).map(|i| self.data[i * n + i].re).collect();
        let scale = residual.iter().copied().fold(0.0, f64::max);
        let floor = rel_tol * scale.max(f64::MIN_POSITIVE);
        if let Some(&neg) = residual.iter().find(|&&x| x < -floor) {
            return Err(Error::NotPositiveSemidefinite(neg));
        }
        let mut columns: Vec<Vec<Complex64>> = Vec::new();
        let mut used = vec![false; n];
        loop {
            let pivot = (0..n)
                .filter(|&i| !used[i])
                .max_by(|&a, &b| residual[a].total_cmp(&residual[b]));
            let Some(p) = pivot else { break };
            if residual[p] <= floor {
                break;
            }
            let root = residual[p].sqrt();
            let mut col: Vec<Complex64> = (0..n).map(|i| self.data[i * n + p]).collect();
            for prev in &columns {
                let c = prev[p].conj();
                for (x, l) in col.iter_mut().zip(prev) {
                    *x -= l * c;
                }
            }
            for x in &mut col {
                *x /= root;
            }
            used[p] = true;
            for i in 0..n {
                if used[i] {
                    continue;
                }
                residual[i] -= col[i].norm_sqr();
                if residual[i] < -floor.max(1e-12 * scale) {
                    return Err(Error::NotPositiveSemidefinite(residual[i]));
                }
            }
            residual[p] = 0.0;
            columns.push(col);
        }
        let rank = columns.len();
        let mut factor = ComplexMatrix::zeros(n, rank);
        for (j, col) in columns.iter().enumerate() {
            for (i, z) in col.iter().enumerate() {
                factor.data[i * rank + j] = *z;
            }
        }
        Ok(factor)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (row, col): (usize, usize)) -> &Complex64 {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        &self.data[row * self.cols + col]
    }
}

/// Free-function form of [`ComplexMatrix::tensor`].
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.tensor(b)
}

pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.dagger()
}

pub fn trace(a: &ComplexMatrix) -> Result<Complex64> {
    a.trace()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labeled tensor factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Subsystem>", into = "Vec<Subsystem>")]
pub struct SpaceDescriptor {
    subsystems: Vec<Subsystem>,
}

impl TryFrom<Vec<Subsystem>> for SpaceDescriptor {
    type Error = Error;

    fn try_from(subsystems: Vec<Subsystem>) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::EmptySpace);
        }
        for (i, s) in subsystems.iter().enumerate() {
            if s.dim == 0 {
                return Err(Error::ZeroDimension(s.label.clone()));
            }
            if subsystems[..i].iter().any(|t| t.label == s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        Ok(Self { subsystems })
    }
}

impl From<SpaceDescriptor> for Vec<Subsystem> {
    fn from(space: SpaceDescriptor) -> Self {
        space.subsystems
    }
}

impl SpaceDescriptor {
    pub fn new<S: Into<String>>(subsystems: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        subsystems
            .into_iter()
            .map(|(label, dim)| Subsystem {
                label: label.into(),
                dim,
            })
            .collect::<Vec<_>>()
            .try_into()
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.subsystems.iter().map(|s| s.label.as_str())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_owned()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.subsystems[self.position(label)?].dim)
    }

    /// Joint index stride of each factor (last factor fastest).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.subsystems.len()];
        for i in (0..self.subsystems.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.subsystems[i + 1].dim;
        }
        strides
    }

    /// Concatenation `self ⊗ other`.
    pub fn join(&self, other: &SpaceDescriptor) -> Result<SpaceDescriptor> {
        let mut all = self.subsystems.clone();
        all.extend(other.subsystems.iter().cloned());
        all.try_into()
    }

    /// The subspace spanned by `labels`, in the given order.
    pub fn select(&self, labels: &[&str]) -> Result<SpaceDescriptor> {
        labels
            .iter()
            .map(|l| {
                self.dim_of(l).map(|dim| Subsystem {
                    label: (*l).to_owned(),
                    dim,
                })
            })
            .collect::<Result<Vec<_>>>()?
            .try_into()
    }
}

/// Offsets into the joint index contributed by each multi-index over `positions`
/// (enumerated slow-first in the order given).
fn factor_offsets(dims: &[usize], strides: &[usize], positions: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for &p in positions {
        let mut next = Vec::with_capacity(offsets.len() * dims[p]);
        for &base in &offsets {
            for digit in 0..dims[p] {
                next.push(base + digit * strides[p]);
            }
        }
        offsets = next;
    }
    offsets
}

/// Lift `op`, acting on the subsystems `targets` (in that order), to the full
/// `space`, acting as the identity on every other factor.
pub fn embed(
    op: &ComplexMatrix,
    targets: &[&str],
    space: &SpaceDescriptor,
) -> Result<ComplexMatrix> {
    let op_dim = op.require_square()?;
    let mut positions = Vec::with_capacity(targets.len());
    for t in targets {
        let p = space.position(t)?;
        if positions.contains(&p) {
            return Err(Error::DuplicateLabel((*t).to_owned()));
        }
        positions.push(p);
    }
    let dims = space.dims();
    let target_dim: usize = positions.iter().map(|&p| dims[p]).product();
    if target_dim != op_dim {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {op_dim} embedded on targets of total dimension {target_dim}"
        )));
    }
    let strides = space.strides();
    let rest: Vec<usize> = (0..dims.len()).filter(|p| !positions.contains(p)).collect();
    let target_offsets = factor_offsets(&dims, &strides, &positions);
    let rest_offsets = factor_offsets(&dims, &strides, &rest);

    let n = space.total_dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for &base in &rest_offsets {
        for (a, &ta) in target_offsets.iter().enumerate() {
            let row = (base + ta) * n + base;
            for (b, &tb) in target_offsets.iter().enumerate() {
                out.data[row + tb] = op.data[a * op_dim + b];
            }
        }
    }
    Ok(out)
}
