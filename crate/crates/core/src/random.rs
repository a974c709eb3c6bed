//! Seeded random states and projective decompositions for tests.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hilbert::{density_from_vector, Projector, StateVector};
use crate::histories::{build_family, HistoryFamily};
use crate::linalg::{ComplexMatrix, SpaceDescriptor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vector(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Columns of a random unitary, by Gram-Schmidt on random vectors.
pub fn orthonormal_basis(rng: &mut impl Rng, n: usize) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v = random_vector(rng, n);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &v);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let norm = dot(&v, &v).re.sqrt();
        if norm < 1e-6 {
            continue;
        }
        basis.push(v.into_iter().map(|x| x / norm).collect());
    }
    basis
}

pub fn pure_state(rng: &mut impl Rng, space: &SpaceDescriptor) -> StateVector {
    loop {
        let v = random_vector(rng, space.total_dim());
        if let Ok(s) = StateVector::normalized(space.clone(), v) {
            return s;
        }
    }
}

pub fn pure_density(rng: &mut impl Rng, space: &SpaceDescriptor) -> ComplexMatrix {
    density_from_vector(&pure_state(rng, space)).expect("normalized state")
}

/// A random mixed state of full rank with unit trace.
pub fn mixed_density(rng: &mut impl Rng, space: &SpaceDescriptor) -> ComplexMatrix {
    let n = space.total_dim();
    let a = ComplexMatrix::from_vec(n, n, random_vector(rng, n * n)).expect("n*n entries");
    let m = a.matmul(&a.dagger()).expect("square");
    let t = m.trace().expect("square").re;
    m.scale(Complex64::new(1.0 / t, 0.0))
}

/// Splits a random orthonormal basis into `outcomes` non-empty groups and
/// returns the projectors onto their spans.
pub fn projective_slot(
    rng: &mut impl Rng,
    space: &SpaceDescriptor,
    outcomes: usize,
) -> Vec<Projector> {
    let n = space.total_dim();
    assert!((1..=n).contains(&outcomes), "need 1..={n} outcomes");
    let basis = orthonormal_basis(rng, n);
    let mut owner: Vec<usize> = (0..n).map(|k| k.min(outcomes - 1)).collect();
    for o in owner.iter_mut().skip(outcomes) {
        *o = rng.gen_range(0..outcomes);
    }
    (0..outcomes)
        .map(|g| {
            let mut op = ComplexMatrix::zeros(n, n);
            for (v, _) in basis.iter().zip(&owner).filter(|(_, &o)| o == g) {
                op = op.add(&ComplexMatrix::outer(v, v)).expect("same shape");
            }
            Projector::new(space.clone(), op).expect("span projector")
        })
        .collect()
}

/// A family whose slots each have the given number of outcomes.
pub fn family(
    rng: &mut impl Rng,
    space: &SpaceDescriptor,
    outcomes_per_slot: &[usize],
) -> HistoryFamily {
    let slots = outcomes_per_slot
        .iter()
        .map(|&k| projective_slot(rng, space, k))
        .collect();
    build_family(space.clone(), slots).expect("valid random family")
}
