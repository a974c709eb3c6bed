//! ABL probabilities for pre- and post-selected systems.
//!
//! Unlike [`crate::histories::assign_probabilities`], these assignments only
//! fail when the post-selection is impossible, i.e. when the normalizing
//! denominator vanishes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Projector, StateVector, NORM_TOL};
use crate::histories::{chain_images, validate_slot, HistoryFamily};
use crate::linalg::{ComplexMatrix, DEFAULT_TOL};

/// Denominators at or below this are treated as zero.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Real parts of outcome weights below `-NEGATIVE_WEIGHT_TOL` are rejected;
/// smaller negative rounding noise is read as zero.
pub const NEGATIVE_WEIGHT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblDistribution {
    pub outcomes: Vec<(String, f64)>,
    /// Sum of the unnormalized outcome weights.
    pub denominator: f64,
}

impl AblDistribution {
    fn from_weights(labels: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        let mut clean = Vec::with_capacity(weights.len());
        for (k, w) in weights.into_iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite(k));
            }
            if w < -NEGATIVE_WEIGHT_TOL {
                return Err(Error::NegativeWeight {
                    outcome: k,
                    weight: w,
                });
            }
            clean.push(w.max(0.0));
        }
        let denominator: f64 = clean.iter().sum();
        if denominator <= DENOMINATOR_FLOOR {
            return Err(Error::ZeroDenominator(denominator));
        }
        Ok(Self {
            outcomes: labels
                .into_iter()
                .zip(clean)
                .map(|(l, w)| (l, w / denominator))
                .collect(),
            denominator,
        })
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.outcomes
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| *p)
    }

    pub fn values(&self) -> Vec<f64> {
        self.outcomes.iter().map(|(_, p)| *p).collect()
    }
}

fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|k| k.to_string()).collect()
}

/// `Pr(k) = |<ψ_f|A_k|ψ_i>|² / Σ_j |<ψ_f|A_j|ψ_i>|²`.
pub fn abl_pure(
    psi_i: &StateVector,
    psi_f: &StateVector,
    decomposition: &[Projector],
) -> Result<AblDistribution> {
    for psi in [psi_i, psi_f] {
        let n2 = psi.norm_sqr();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
    }
    if psi_i.space() != psi_f.space() {
        return Err(Error::DimensionMismatch(
            "pre- and post-selected states live on different spaces".into(),
        ));
    }
    let refs: Vec<&Projector> = decomposition.iter().collect();
    validate_slot(0, &refs, psi_i.space(), DEFAULT_TOL)?;
    let weights = decomposition
        .iter()
        .map(|a| {
            let image = a.matrix().apply(psi_i.amplitudes())?;
            let amp: Complex64 = psi_f
                .amplitudes()
                .iter()
                .zip(&image)
                .map(|(f, x)| f.conj() * x)
                .sum();
            Ok(amp.norm_sqr())
        })
        .collect::<Result<Vec<_>>>()?;
    AblDistribution::from_weights(index_labels(decomposition.len()), weights)
}

/// `Pr(k) = tr(Π_f P_k Π_i ρ Π_i P_k) / Σ_j tr(Π_f P_j Π_i ρ Π_i P_j)`.
///
/// With `ρ = Π_i = |ψ_i><ψ_i|` and `Π_f = |ψ_f><ψ_f|` this is [`abl_pure`];
/// with `Π_i = Π_f = I` it is the Born rule.
pub fn abl_general(
    rho: &ComplexMatrix,
    pi_i: &Projector,
    pi_f: &Projector,
    measurement: &[Projector],
) -> Result<AblDistribution> {
    check_selection(rho, pi_i, pi_f, measurement)?;
    let prepared = pi_i.matrix().matmul(rho)?.matmul(pi_i.matrix())?;
    let weights = measurement
        .iter()
        .map(|p| {
            let evolved = p.matrix().matmul(&prepared)?.matmul(p.matrix())?;
            Ok(pi_f.matrix().trace_of_product(&evolved)?.re)
        })
        .collect::<Result<Vec<_>>>()?;
    AblDistribution::from_weights(index_labels(measurement.len()), weights)
}

/// `Pr(k) = Re tr(P_k Π_i ρ Π_f) / Σ_j Re tr(P_j Π_i ρ Π_f)`, the form linear
/// in `P_k`.
///
/// Agrees with [`abl_general`] when `Π_i ρ Π_f` commutes with the
/// measurement, e.g. for `Π_f = I`. Otherwise the weights are real parts of
/// transition amplitudes and may be negative, which is reported as
/// [`Error::NegativeWeight`].
pub fn abl_linear(
    rho: &ComplexMatrix,
    pi_i: &Projector,
    pi_f: &Projector,
    measurement: &[Projector],
) -> Result<AblDistribution> {
    check_selection(rho, pi_i, pi_f, measurement)?;
    let selected = pi_i.matrix().matmul(rho)?.matmul(pi_f.matrix())?;
    let weights = measurement
        .iter()
        .map(|p| Ok(p.matrix().trace_of_product(&selected)?.re))
        .collect::<Result<Vec<_>>>()?;
    AblDistribution::from_weights(index_labels(measurement.len()), weights)
}

fn check_selection(
    rho: &ComplexMatrix,
    pi_i: &Projector,
    pi_f: &Projector,
    measurement: &[Projector],
) -> Result<()> {
    let space = pi_i.space();
    if pi_f.space() != space || measurement.iter().any(|p| p.space() != space) {
        return Err(Error::DimensionMismatch(
            "selections and measurement live on different spaces".into(),
        ));
    }
    let n = space.total_dim();
    if rho.rows() != n || rho.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, space has dimension {n}",
            rho.rows(),
            rho.cols()
        )));
    }
    Ok(())
}

/// ABL probabilities over the chains of a history family:
/// `Pr(α) = tr[ρ_f C_α ρ_i C_α†] / Σ_β tr[ρ_f C_β ρ_i C_β†]`.
///
/// Defined whenever the denominator is positive, whatever the family's
/// consistency.
pub fn abl_over_family(
    family: &HistoryFamily,
    rho_i: &ComplexMatrix,
    rho_f: &ComplexMatrix,
) -> Result<AblDistribution> {
    let images = chain_images(family, rho_i, rho_f)?;
    let weights = (0..family.len()).map(|a| images.entry(a, a).re).collect();
    AblDistribution::from_weights(family.chain_labels(), weights)
}
