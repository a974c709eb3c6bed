//! The two worked examples: a spin-½ pre/post-selection and the final-state
//! black hole model, together with the closed-form answers for the latter.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    density_from_vector, max_entangled_on, projector_from_vector, qubit_space, spin_states,
};
use crate::histories::{build_labeled_family, HistoryFamily};
use crate::linalg::{embed, ComplexMatrix, SpaceDescriptor};

/// Subsystem labels of the black hole model: interior partner of the early
/// radiation, early radiation, interior partner of the late mode, late mode.
pub const HM_LABELS: [&str; 4] = ["rt_b", "r_b", "bt_b", "b"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        Self::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        Self::Real(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        Self::Text(v.to_owned())
    }
}

/// Final state and family used for one of the two readings of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub rho_f: ComplexMatrix,
    pub family: HistoryFamily,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub space: SpaceDescriptor,
    pub rho_i: ComplexMatrix,
    pub rho_f: ComplexMatrix,
    pub family: HistoryFamily,
    pub params: BTreeMap<String, ParamValue>,
    /// Separate setup for the histories reading, when it differs from the
    /// pre/post-selected one.
    pub histories_variant: Option<Setup>,
    /// Analytic answers to compare against, when known.
    pub closed_forms: Option<HmClosedForms>,
}

impl Scenario {
    /// Final state and family for the ABL reading.
    pub fn abl_setup(&self) -> (&ComplexMatrix, &HistoryFamily) {
        (&self.rho_f, &self.family)
    }

    /// Final state and family for the consistent-histories reading.
    pub fn histories_setup(&self) -> (&ComplexMatrix, &HistoryFamily) {
        match &self.histories_variant {
            Some(v) => (&v.rho_f, &v.family),
            None => (&self.rho_f, &self.family),
        }
    }

    pub fn param_int(&self, key: &str) -> Option<i64> {
        match self.params.get(key) {
            Some(ParamValue::Int(v)) => Some(*v),
            _ => None,
        }
    }
}

/// Qubit prepared in `|+>` with z-spin measured at an intermediate time.
///
/// The ABL reading post-selects on `|+>` after a single z slot. The histories
/// reading uses a z slot followed by an x slot with `ρ_f = I`.
pub fn spin_scenario() -> Scenario {
    let s = spin_states();
    let p = |v| projector_from_vector(v).expect("unit spin states");
    let rho_plus = density_from_vector(&s.plus).expect("unit spin states");
    let z_slot = || vec![("up".to_owned(), p(&s.up)), ("down".to_owned(), p(&s.down))];
    let family = build_labeled_family(qubit_space(), vec![z_slot()]).expect("z basis is complete");
    let two_slot = build_labeled_family(
        qubit_space(),
        vec![
            z_slot(),
            vec![("+".to_owned(), p(&s.plus)), ("-".to_owned(), p(&s.minus))],
        ],
    )
    .expect("z and x bases are complete");

    let mut params = BTreeMap::new();
    params.insert("abl_variant".into(), "z slot, post-selected on |+>".into());
    params.insert(
        "histories_variant".into(),
        "z slot then x slot, rho_f = I".into(),
    );

    Scenario {
        name: "spin".into(),
        space: qubit_space(),
        rho_i: rho_plus.clone(),
        rho_f: rho_plus,
        family,
        params,
        histories_variant: Some(Setup {
            rho_f: ComplexMatrix::identity(2),
            family: two_slot,
        }),
        closed_forms: None,
    }
}

/// Time order of the two entanglement checks in the black hole model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotOrder {
    /// `(r_b, b)` first, then `(bt_b, b)`.
    #[default]
    Standard,
    /// `(bt_b, b)` first, then `(r_b, b)`.
    Swapped,
}

pub fn hm_scenario(d: usize) -> Result<Scenario> {
    hm_scenario_with_order(d, SlotOrder::Standard)
}

/// Final-state black hole model on `(rt_b, r_b, bt_b, b)`, each of dimension `d`.
///
/// `ρ_i = |Φ><Φ|_{rt_b,r_b} ⊗ |Φ><Φ|_{bt_b,b}` and
/// `ρ_f ∝ |Φ><Φ|_{rt_b,bt_b} ⊗ I_{r_b,b}`, with `|Φ>` unit-norm and `ρ_f`
/// built with its `d²` prefactor, then rescaled so that `tr[ρ_i ρ_f] = 1`
/// (the applied factor is recorded as `rho_f_rescale`).
///
/// In standard order the chains are labeled `1..4`:
/// `C₁ = Π_{bt_b,b} Π_{r_b,b}`, `C₂ = (1 − Π_{bt_b,b}) Π_{r_b,b}`,
/// `C₃ = Π_{bt_b,b} (1 − Π_{r_b,b})`, `C₄ = (1 − Π_{bt_b,b})(1 − Π_{r_b,b})`.
pub fn hm_scenario_with_order(d: usize, order: SlotOrder) -> Result<Scenario> {
    if d < 2 {
        return Err(Error::DegenerateDimension(d));
    }
    let [rt_b, r_b, bt_b, b] = HM_LABELS;
    let space = SpaceDescriptor::new(HM_LABELS.map(|l| (l, d)))?;

    let bell = |x: &str, y: &str| -> Result<ComplexMatrix> {
        density_from_vector(&max_entangled_on(x, y, d)?)
    };
    let rho_i = bell(rt_b, r_b)?.tensor(&bell(bt_b, b)?);
    let prefactor = (d * d) as f64;
    let rho_f_raw =
        embed(&bell(rt_b, bt_b)?, &[rt_b, bt_b], &space)?.scale(Complex64::new(prefactor, 0.0));
    let raw_norm = rho_i.trace_of_product(&rho_f_raw)?.re;
    let rescale = 1.0 / raw_norm;
    let rho_f = rho_f_raw.scale(Complex64::new(rescale, 0.0));

    let check = |x: &str, y: &str| -> Result<_> {
        projector_from_vector(&max_entangled_on(x, y, d)?)?.embed_into(&space)
    };
    let late_early = check(r_b, b)?;
    let late_interior = check(bt_b, b)?;
    let slot = |name: &str, p: crate::hilbert::Projector| {
        let not = p.complement();
        vec![(name.to_owned(), p), (format!("not_{name}"), not)]
    };
    let early_slot = slot("r_b:b", late_early);
    let interior_slot = slot("bt_b:b", late_interior);
    let family = match order {
        SlotOrder::Standard => {
            build_labeled_family(space.clone(), vec![early_slot, interior_slot])?
                .with_chain_labels(["1", "2", "3", "4"])?
        }
        SlotOrder::Swapped => build_labeled_family(space.clone(), vec![interior_slot, early_slot])?,
    };

    let mut params = BTreeMap::new();
    params.insert("d".into(), ParamValue::Int(d as i64));
    params.insert("rho_f_prefactor".into(), ParamValue::Real(prefactor));
    params.insert("rho_f_rescale".into(), ParamValue::Real(rescale));
    params.insert(
        "slot_order".into(),
        match order {
            SlotOrder::Standard => "standard",
            SlotOrder::Swapped => "swapped",
        }
        .into(),
    );

    Ok(Scenario {
        name: "hm".into(),
        space,
        rho_i,
        rho_f,
        family,
        params,
        histories_variant: None,
        closed_forms: match order {
            SlotOrder::Standard => Some(hm_closed_forms(d)?),
            SlotOrder::Swapped => None,
        },
    })
}

/// Closed-form ABL probabilities and `D(1,2)` for the black hole model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmClosedForms {
    pub d: usize,
    /// Numerators over the common denominator `3d⁴ − 6d² + 4`.
    pub numerators: [u128; 4],
    pub denominator: u128,
    pub probabilities: [f64; 4],
    /// `D(1,2) = 1/d² − 1/d⁴ = (d² − 1)/d⁴`.
    pub offdiag_12: f64,
}

pub fn hm_closed_forms(d: usize) -> Result<HmClosedForms> {
    if d < 2 {
        return Err(Error::DegenerateDimension(d));
    }
    let d2 = (d as u128) * (d as u128);
    let d4 = d2 * d2;
    let denominator = 3 * d4 + 4 - 6 * d2;
    let unlikely = (d2 - 1) * (d2 - 1);
    let numerators = [1, unlikely, unlikely, unlikely];
    Ok(HmClosedForms {
        d,
        numerators,
        denominator,
        probabilities: numerators.map(|n| n as f64 / denominator as f64),
        offdiag_12: (d2 - 1) as f64 / d4 as f64,
    })
}
