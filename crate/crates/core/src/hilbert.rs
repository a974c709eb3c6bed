//! States and projectors on labeled multipartite spaces.
//!
//! Basis kets are indexed from 0; a sum over `i = 1..d` in textbook notation
//! runs over indices `0..d` here.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{embed, ComplexMatrix, SpaceDescriptor, DEFAULT_TOL};

/// Unit-norm tolerance for constructor outputs and inputs.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: SpaceDescriptor,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Wraps `amplitudes`, requiring unit norm.
    pub fn new(space: SpaceDescriptor, amplitudes: Vec<Complex64>) -> Result<Self> {
        let state = Self::unchecked(space, amplitudes)?;
        let n2 = state.norm_sqr();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(state)
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(space: SpaceDescriptor, amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut state = Self::unchecked(space, amplitudes)?;
        let norm = state.norm_sqr().sqrt();
        if norm < NORM_TOL {
            return Err(Error::NotNormalized(norm * norm));
        }
        for a in &mut state.amplitudes {
            *a /= norm;
        }
        Ok(state)
    }

    fn unchecked(space: SpaceDescriptor, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::BadShape {
                len: amplitudes.len(),
                expected: space.total_dim(),
            });
        }
        if let Some(i) = amplitudes.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { space, amplitudes })
    }

    pub fn basis(space: SpaceDescriptor, index: usize) -> Result<Self> {
        let dim = space.total_dim();
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { space, amplitudes })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch(
                "inner product of states on different spaces".into(),
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Product state `self ⊗ other` on the joined space.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let space = self.space.join(&other.space)?;
        let mut amplitudes = Vec::with_capacity(space.total_dim());
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        Ok(Self { space, amplitudes })
    }
}

/// Maximally entangled state `d^{-1/2} Σ_i |i>|i>` on subsystems labeled `a`, `b`.
pub fn max_entangled(d: usize) -> StateVector {
    max_entangled_on("a", "b", d).expect("distinct labels and d >= 1")
}

/// Maximally entangled state on the pair `(x, y)`, each of dimension `d`.
pub fn max_entangled_on(x: &str, y: &str, d: usize) -> Result<StateVector> {
    let space = SpaceDescriptor::new([(x, d), (y, d)])?;
    let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        amplitudes[i * d + i] = amp;
    }
    Ok(StateVector { space, amplitudes })
}

/// The z and x eigenbases of a single qubit labeled `q`.
#[derive(Debug, Clone)]
pub struct SpinStates {
    pub up: StateVector,
    pub down: StateVector,
    pub plus: StateVector,
    pub minus: StateVector,
}

pub fn qubit_space() -> SpaceDescriptor {
    SpaceDescriptor::new([("q", 2)]).expect("valid qubit space")
}

pub fn spin_states() -> SpinStates {
    let space = qubit_space();
    let ket = |a: f64, b: f64| StateVector {
        space: space.clone(),
        amplitudes: vec![Complex64::new(a, 0.0), Complex64::new(b, 0.0)],
    };
    SpinStates {
        up: ket(1.0, 0.0),
        down: ket(0.0, 1.0),
        plus: ket(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        minus: ket(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    }
}

/// Pure density operator `|v><v|`.
pub fn density_from_vector(v: &StateVector) -> Result<ComplexMatrix> {
    let n2 = v.norm_sqr();
    if (n2 - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(n2));
    }
    Ok(ComplexMatrix::outer(&v.amplitudes, &v.amplitudes))
}

pub fn projector_from_vector(v: &StateVector) -> Result<Projector> {
    Ok(Projector {
        space: v.space.clone(),
        op: density_from_vector(v)?,
    })
}

/// Orthogonal projector on a labeled space.
///
/// Values built through [`Projector::new`] are checked for hermiticity and
/// idempotency; the structural constructors (rank-1, identity, complement,
/// embedding) preserve both properties exactly and skip the dense check.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    space: SpaceDescriptor,
    op: ComplexMatrix,
}

impl Projector {
    pub fn new(space: SpaceDescriptor, op: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(space, op, DEFAULT_TOL)
    }

    pub fn with_tolerance(space: SpaceDescriptor, op: ComplexMatrix, tol: f64) -> Result<Self> {
        let n = space.total_dim();
        if !op.is_square() {
            return Err(Error::NonSquare {
                rows: op.rows(),
                cols: op.cols(),
            });
        }
        if op.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator on a space of dimension {n}",
                op.rows(),
                op.cols()
            )));
        }
        let herm = op.hermiticity_defect();
        if herm > tol {
            return Err(Error::NotHermitian(herm));
        }
        let idem = op.matmul(&op)?.max_abs_diff(&op);
        if idem > tol {
            return Err(Error::NotIdempotent(idem));
        }
        Ok(Self { space, op })
    }

    /// For operators that are projectors by construction.
    pub(crate) fn trusted(space: SpaceDescriptor, op: ComplexMatrix) -> Self {
        Self { space, op }
    }

    pub fn identity(space: SpaceDescriptor) -> Self {
        let op = ComplexMatrix::identity(space.total_dim());
        Self { space, op }
    }

    /// `I - P`.
    pub fn complement(&self) -> Self {
        let op = ComplexMatrix::identity(self.space.total_dim())
            .sub(&self.op)
            .expect("same shape");
        Self {
            space: self.space.clone(),
            op,
        }
    }

    /// Lift onto `full`, matching this projector's factors by label.
    pub fn embed_into(&self, full: &SpaceDescriptor) -> Result<Self> {
        let targets: Vec<&str> = self.space.labels().collect();
        for s in self.space.subsystems() {
            let dim = full.dim_of(&s.label)?;
            if dim != s.dim {
                return Err(Error::DimensionMismatch(format!(
                    "subsystem `{}` has dimension {} here but {} in the target space",
                    s.label, s.dim, dim
                )));
            }
        }
        Ok(Self {
            space: full.clone(),
            op: embed(&self.op, &targets, full)?,
        })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.op
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.op
    }
}

impl AsRef<ComplexMatrix> for Projector {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.op
    }
}
