//! History chains, class operators and the decoherence functional.
//!
//! A history family is the Cartesian product of per-time projective
//! decompositions ("slots"). Chains are enumerated lexicographically with the
//! earliest slot varying slowest, and each chain's class operator is the
//! time-ordered product `C = Π_n ⋯ Π_1` with the latest projector leftmost.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::Projector;
use crate::linalg::{ComplexMatrix, SpaceDescriptor, DEFAULT_TOL};

/// Below this modulus `tr[ρ_i ρ_f]` is treated as zero.
pub const NORMALIZATION_FLOOR: f64 = 1e-12;

/// Relative pivot cutoff used when factoring the initial state.
const FACTOR_REL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryChain {
    label: String,
    projectors: Vec<Arc<Projector>>,
}

impl HistoryChain {
    /// `projectors` are time-ordered, earliest first.
    pub fn new(label: impl Into<String>, projectors: Vec<Arc<Projector>>) -> Result<Self> {
        let label = label.into();
        let Some(first) = projectors.first() else {
            return Err(Error::EmptyChain(label));
        };
        if projectors.iter().any(|p| p.space() != first.space()) {
            return Err(Error::DimensionMismatch(format!(
                "chain `{label}` mixes projectors on different spaces"
            )));
        }
        Ok(Self { label, projectors })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn projectors(&self) -> &[Arc<Projector>] {
        &self.projectors
    }

    pub fn space(&self) -> &SpaceDescriptor {
        self.projectors[0].space()
    }

    /// `C · m`, applying the projectors to `m` earliest first.
    pub fn apply(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut acc = self.projectors[0].matrix().matmul(m)?;
        for p in &self.projectors[1..] {
            acc = p.matrix().matmul(&acc)?;
        }
        Ok(acc)
    }
}

/// The class operator `C = Π_n ⋯ Π_1` of a chain.
pub fn class_operator(chain: &HistoryChain) -> Result<ComplexMatrix> {
    let mut acc = chain.projectors[0].matrix().clone();
    for p in &chain.projectors[1..] {
        acc = p.matrix().matmul(&acc)?;
    }
    Ok(acc)
}

/// Every way in which `projectors` fails to be a projective decomposition of
/// the identity on `space`: a sum deviating from `I`, then each overlapping
/// pair. Overlap is measured by `tr(P_j P_k) = ‖P_k P_j‖²_F`, which for
/// projectors vanishes exactly when the pair is orthogonal.
pub fn slot_defects(
    slot: usize,
    projectors: &[&Projector],
    space: &SpaceDescriptor,
    tol: f64,
) -> Vec<Error> {
    let n = space.total_dim();
    if projectors.is_empty() {
        return vec![Error::SlotNotExhaustive {
            slot,
            deviation: 1.0,
        }];
    }
    if let Some(p) = projectors.iter().find(|p| p.space() != space) {
        return vec![Error::DimensionMismatch(format!(
            "slot {slot}: projector on {:?} in a family on {:?}",
            p.space().labels().collect::<Vec<_>>(),
            space.labels().collect::<Vec<_>>()
        ))];
    }
    let mut defects = Vec::new();
    let mut sum = ComplexMatrix::zeros(n, n);
    for p in projectors {
        sum = sum
            .add(p.matrix())
            .expect("projectors share the slot space");
    }
    let deviation = sum.max_abs_diff(&ComplexMatrix::identity(n));
    if deviation > tol {
        defects.push(Error::SlotNotExhaustive { slot, deviation });
    }
    for j in 0..projectors.len() {
        for k in j + 1..projectors.len() {
            let overlap = projectors[j]
                .matrix()
                .trace_of_product(projectors[k].matrix())
                .expect("projectors share the slot space")
                .norm();
            if overlap > tol {
                defects.push(Error::SlotNotExclusive {
                    slot,
                    first: j,
                    second: k,
                    overlap,
                });
            }
        }
    }
    defects
}

/// First defect reported by [`slot_defects`], if any.
pub fn validate_slot(
    slot: usize,
    projectors: &[&Projector],
    space: &SpaceDescriptor,
    tol: f64,
) -> Result<()> {
    match slot_defects(slot, projectors, space, tol)
        .into_iter()
        .next()
    {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub label: String,
    pub projector: Arc<Projector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryFamily {
    space: SpaceDescriptor,
    slots: Vec<Vec<Outcome>>,
    chains: Vec<HistoryChain>,
    choices: Vec<Vec<usize>>,
}

/// Builds a family whose outcome labels are the in-slot indices.
pub fn build_family(space: SpaceDescriptor, slots: Vec<Vec<Projector>>) -> Result<HistoryFamily> {
    let labeled = slots
        .into_iter()
        .map(|slot| {
            slot.into_iter()
                .enumerate()
                .map(|(k, p)| (k.to_string(), p))
                .collect()
        })
        .collect();
    build_labeled_family(space, labeled)
}

/// Builds a family from labeled slots; chain labels join the outcome labels
/// with commas, earliest slot first.
pub fn build_labeled_family(
    space: SpaceDescriptor,
    slots: Vec<Vec<(String, Projector)>>,
) -> Result<HistoryFamily> {
    if slots.is_empty() {
        return Err(Error::EmptyFamily);
    }
    for (i, slot) in slots.iter().enumerate() {
        let refs: Vec<&Projector> = slot.iter().map(|(_, p)| p).collect();
        validate_slot(i, &refs, &space, DEFAULT_TOL)?;
    }
    let slots: Vec<Vec<Outcome>> = slots
        .into_iter()
        .map(|slot| {
            slot.into_iter()
                .map(|(label, p)| Outcome {
                    label,
                    projector: Arc::new(p),
                })
                .collect()
        })
        .collect();

    let mut choices: Vec<Vec<usize>> = vec![Vec::new()];
    for slot in &slots {
        choices = choices
            .into_iter()
            .flat_map(|prefix| {
                (0..slot.len()).map(move |k| {
                    let mut next = prefix.clone();
                    next.push(k);
                    next
                })
            })
            .collect();
    }
    let chains = choices
        .iter()
        .map(|choice| {
            let label = choice
                .iter()
                .zip(&slots)
                .map(|(&k, slot)| slot[k].label.as_str())
                .collect::<Vec<_>>()
                .join(",");
            let projectors = choice
                .iter()
                .zip(&slots)
                .map(|(&k, slot)| Arc::clone(&slot[k].projector))
                .collect();
            HistoryChain::new(label, projectors)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HistoryFamily {
        space,
        slots,
        chains,
        choices,
    })
}

impl HistoryFamily {
    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn slots(&self) -> &[Vec<Outcome>] {
        &self.slots
    }

    pub fn chains(&self) -> &[HistoryChain] {
        &self.chains
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn chain_labels(&self) -> Vec<String> {
        self.chains.iter().map(|c| c.label.clone()).collect()
    }

    /// Outcome index chosen in each slot by chain `chain`.
    pub fn choices(&self, chain: usize) -> &[usize] {
        &self.choices[chain]
    }

    /// Replaces the chain labels, keeping enumeration order.
    pub fn with_chain_labels<S: Into<String>>(
        mut self,
        labels: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != self.chains.len() {
            return Err(Error::LabelCount {
                expected: self.chains.len(),
                got: labels.len(),
            });
        }
        for (chain, label) in self.chains.iter_mut().zip(labels) {
            chain.label = label;
        }
        Ok(self)
    }
}

/// Per-chain images of the factored initial state: `forward[a] = C_a L` and
/// `weighted[a] = ρ_f C_a L`, where `ρ_i = L L†`.
pub(crate) struct ChainImages {
    pub forward: Vec<ComplexMatrix>,
    pub weighted: Vec<ComplexMatrix>,
}

impl ChainImages {
    /// `tr[ρ_f C_a ρ_i C_b†]`.
    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        self.forward[b]
            .inner(&self.weighted[a])
            .expect("chain images share one shape")
    }
}

fn check_state(name: &str, rho: &ComplexMatrix, n: usize) -> Result<()> {
    if rho.rows() != n || rho.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{name} is {}x{}, family space has dimension {n}",
            rho.rows(),
            rho.cols()
        )));
    }
    let scale = rho.as_slice().iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = rho.hermiticity_defect();
    if defect > DEFAULT_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

pub(crate) fn chain_images(
    family: &HistoryFamily,
    rho_i: &ComplexMatrix,
    rho_f: &ComplexMatrix,
) -> Result<ChainImages> {
    let n = family.space.total_dim();
    check_state("rho_i", rho_i, n)?;
    check_state("rho_f", rho_f, n)?;
    let factor = rho_i.psd_factor(FACTOR_REL_TOL)?;
    let forward = family
        .chains
        .iter()
        .map(|c| c.apply(&factor))
        .collect::<Result<Vec<_>>>()?;
    let weighted = forward
        .iter()
        .map(|x| rho_f.matmul(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChainImages { forward, weighted })
}

/// The matrix `D(α, α′)` over one history family.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceMatrix {
    family: HistoryFamily,
    entries: ComplexMatrix,
    norm_trace: Complex64,
}

impl DecoherenceMatrix {
    pub fn family(&self) -> &HistoryFamily {
        &self.family
    }

    pub fn entries(&self) -> &ComplexMatrix {
        &self.entries
    }

    /// `tr[ρ_i ρ_f]` as supplied, before normalization.
    pub fn norm_trace(&self) -> Complex64 {
        self.norm_trace
    }

    pub fn len(&self) -> usize {
        self.entries.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.entries[(a, b)]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.family.chains.iter().position(|c| c.label == label)
    }
}

/// `D(α, α′) = tr[ρ_f C_α ρ_i C_α′†] / tr[ρ_i ρ_f]`.
///
/// The initial state is factored as `ρ_i = L L†`, so each entry reduces to a
/// Frobenius product of the n×rank images `C_α L` and `ρ_f C_α′ L`. `rho_i`
/// must be positive semidefinite; `rho_f` only needs to be hermitian.
pub fn decoherence_matrix(
    family: &HistoryFamily,
    rho_i: &ComplexMatrix,
    rho_f: &ComplexMatrix,
) -> Result<DecoherenceMatrix> {
    let n = family.space.total_dim();
    check_state("rho_i", rho_i, n)?;
    check_state("rho_f", rho_f, n)?;
    let norm_trace = rho_i.trace_of_product(rho_f)?;
    if norm_trace.norm() < NORMALIZATION_FLOOR {
        return Err(Error::ZeroNormalization(norm_trace.norm()));
    }
    let images = chain_images(family, rho_i, rho_f)?;
    let len = family.len();
    let mut data = Vec::with_capacity(len * len);
    for a in 0..len {
        for b in 0..len {
            data.push(images.entry(a, b) / norm_trace);
        }
    }
    Ok(DecoherenceMatrix {
        family: family.clone(),
        entries: ComplexMatrix::from_vec(len, len, data)?,
        norm_trace,
    })
}

/// Which off-diagonal entries must vanish for a family to count as consistent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConsistencyCondition {
    /// Every off-diagonal entry vanishes (strong or medium decoherence,
    /// depending on the tolerance chosen).
    #[serde(rename = "full")]
    FullDiagonality,
    /// Only real parts of off-diagonal entries vanish.
    #[serde(rename = "real")]
    RealPartOnly,
}

impl ConsistencyCondition {
    pub fn name(self) -> &'static str {
        match self {
            Self::FullDiagonality => "full",
            Self::RealPartOnly => "real",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyVerdict {
    pub condition: ConsistencyCondition,
    pub tol: f64,
    pub consistent: bool,
    pub max_violation: f64,
    /// Pair `(α, α′)` with `α < α′` attaining `max_violation`, the first in
    /// row-major order among values equal up to rounding; `None` when every
    /// off-diagonal entry is exactly zero.
    pub worst_pair: Option<(usize, usize)>,
}

/// Relative margin by which a later pair must exceed the current maximum to
/// replace it, so rounding noise does not pick among equal entries.
const TIE_MARGIN: f64 = 1e-12;

pub fn check_consistency(
    d: &DecoherenceMatrix,
    condition: ConsistencyCondition,
    tol: f64,
) -> ConsistencyVerdict {
    let violation = |z: Complex64| match condition {
        ConsistencyCondition::FullDiagonality => z.norm(),
        ConsistencyCondition::RealPartOnly => z.re.abs(),
    };
    let mut max_violation: f64 = 0.0;
    let mut leader = 0.0;
    let mut worst_pair = None;
    for a in 0..d.len() {
        for b in a + 1..d.len() {
            let v = violation(d.get(a, b)).max(violation(d.get(b, a)));
            max_violation = max_violation.max(v);
            if v > leader * (1.0 + TIE_MARGIN) {
                leader = v;
                worst_pair = Some((a, b));
            }
        }
    }
    ConsistencyVerdict {
        condition,
        tol,
        consistent: max_violation <= tol,
        max_violation,
        worst_pair,
    }
}

/// History probabilities `P(α) = D(α, α)` of a consistent family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChProbabilities {
    pub outcomes: Vec<(String, f64)>,
}

impl ChProbabilities {
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

/// Assigns `P(α) = Re D(α, α)` if the family passes full diagonality at `tol`,
/// and refuses with [`Error::NotConsistent`] otherwise.
pub fn assign_probabilities(d: &DecoherenceMatrix, tol: f64) -> Result<ChProbabilities> {
    assign_probabilities_with(d, ConsistencyCondition::FullDiagonality, tol)
}

pub fn assign_probabilities_with(
    d: &DecoherenceMatrix,
    condition: ConsistencyCondition,
    tol: f64,
) -> Result<ChProbabilities> {
    let verdict = check_consistency(d, condition, tol);
    if !verdict.consistent {
        return Err(Error::NotConsistent(verdict));
    }
    Ok(ChProbabilities {
        outcomes: d
            .family
            .chains
            .iter()
            .enumerate()
            .map(|(a, c)| (c.label.clone(), d.get(a, a).re))
            .collect(),
    })
}
