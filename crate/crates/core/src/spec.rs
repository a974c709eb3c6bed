//! Declarative scenario files.
//!
//! A scenario file is a JSON document naming the subsystems, the pre- and
//! post-selected states, and the time-ordered measurement slots. States and
//! operators are written as constructor expressions rather than raw matrices:
//!
//! ```json
//! {
//!   "name": "bell-check",
//!   "subsystems": [{"label": "a", "dim": 2}, {"label": "b", "dim": 2}],
//!   "pre":  {"pure": {"max_entangled": {"labels": ["a", "b"]}}},
//!   "post": "identity",
//!   "slots": [[
//!     {"label": "a0", "op": {"pure": {"basis": {"labels": ["a"], "index": 0}}}},
//!     {"label": "a1", "op": {"pure": {"basis": {"labels": ["a"], "index": 1}}}}
//!   ]]
//! }
//! ```
//!
//! `pure` embeds `|v><v|` on the state's labels with the identity elsewhere.
//! Checking happens in two phases: [`ScenarioSpec::check`] type-checks labels,
//! dimensions and indices without building any matrix, and
//! [`ScenarioSpec::validate`] additionally builds the slot projectors and
//! tests each slot for exhaustiveness and exclusivity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::hilbert::{max_entangled_on, projector_from_vector, Projector, StateVector, NORM_TOL};
use crate::histories::{build_labeled_family, slot_defects};
use crate::linalg::{ComplexMatrix, SpaceDescriptor, Subsystem, DEFAULT_TOL};
use crate::scenarios::{ParamValue, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub subsystems: Vec<Subsystem>,
    pub pre: OperatorExpr,
    pub post: OperatorExpr,
    pub slots: Vec<Vec<SlotEntry>>,
    /// Overrides the default comma-joined chain labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub op: OperatorExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateExpr {
    /// Computational basis ket over `labels` (joint index, first label slowest).
    Basis { labels: Vec<String>, index: usize },
    /// `d^{-1/2} Σ_i |i>|i>` over exactly two equal-dimension labels.
    MaxEntangled { labels: Vec<String> },
    /// Explicit unit-norm amplitudes as `[re, im]` pairs.
    Amplitudes {
        labels: Vec<String>,
        values: Vec<[f64; 2]>,
    },
    /// Tensor product of states on disjoint labels.
    Product(Vec<StateExpr>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorExpr {
    Identity,
    Pure(StateExpr),
    Complement(Box<OperatorExpr>),
    Product(Vec<OperatorExpr>),
    Scale { factor: f64, op: Box<OperatorExpr> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Parse,
    InvalidSpace,
    UnknownLabel,
    DuplicateLabel,
    DimensionMismatch,
    IndexOutOfRange,
    NotNormalized,
    InvalidValue,
    NotAProjector,
    EmptyFamily,
    SlotNotExhaustive,
    SlotNotExclusive,
    LabelCount,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        write!(f, "{}", s.as_str().unwrap_or("unknown"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    fn new(kind: DiagnosticKind, location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind,
            location: location.into(),
            message: message.into(),
        }
    }

    fn from_error(location: impl Into<String>, err: &Error) -> Self {
        let kind = match err {
            Error::UnknownLabel(_) => DiagnosticKind::UnknownLabel,
            Error::DuplicateLabel(_) => DiagnosticKind::DuplicateLabel,
            Error::ZeroDimension(_) | Error::EmptySpace => DiagnosticKind::InvalidSpace,
            Error::NotNormalized(_) => DiagnosticKind::NotNormalized,
            Error::NotHermitian(_) | Error::NotIdempotent(_) => DiagnosticKind::NotAProjector,
            Error::SlotNotExhaustive { .. } => DiagnosticKind::SlotNotExhaustive,
            Error::SlotNotExclusive { .. } => DiagnosticKind::SlotNotExclusive,
            Error::IndexOutOfRange { .. } => DiagnosticKind::IndexOutOfRange,
            Error::LabelCount { .. } => DiagnosticKind::LabelCount,
            Error::EmptyFamily => DiagnosticKind::EmptyFamily,
            Error::NonFinite(_) => DiagnosticKind::InvalidValue,
            _ => DiagnosticKind::DimensionMismatch,
        };
        Self::new(kind, location, err.to_string())
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.location, self.kind, self.message)
    }
}

/// Result of type-checking an operator expression.
struct Typed {
    support: BTreeSet<String>,
    /// Structurally guaranteed to be an orthogonal projector.
    projector: bool,
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self, Diagnostic> {
        serde_json::from_str(text)
            .map_err(|e| Diagnostic::new(DiagnosticKind::Parse, "<document>", e.to_string()))
    }

    pub fn space(&self) -> Result<SpaceDescriptor, Diagnostic> {
        SpaceDescriptor::try_from(self.subsystems.clone())
            .map_err(|e| Diagnostic::from_error("subsystems", &e))
    }

    /// Type-checks every expression against the declared subsystems without
    /// building matrices.
    pub fn check(&self) -> Vec<Diagnostic> {
        let space = match self.space() {
            Ok(s) => s,
            Err(d) => return vec![d],
        };
        let mut diags = Vec::new();
        check_operator(&self.pre, &space, "pre", &mut diags);
        check_operator(&self.post, &space, "post", &mut diags);
        if self.slots.is_empty() {
            diags.push(Diagnostic::new(
                DiagnosticKind::EmptyFamily,
                "slots",
                "at least one measurement slot is required",
            ));
        }
        for (i, slot) in self.slots.iter().enumerate() {
            if slot.is_empty() {
                diags.push(Diagnostic::from_error(
                    format!("slots[{i}]"),
                    &Error::SlotNotExhaustive {
                        slot: i,
                        deviation: 1.0,
                    },
                ));
            }
            for (k, entry) in slot.iter().enumerate() {
                check_operator(
                    &entry.op,
                    &space,
                    &format!("slots[{i}][{k}].op"),
                    &mut diags,
                );
            }
        }
        if let Some(labels) = &self.chain_labels {
            let expected: usize = self.slots.iter().map(Vec::len).product();
            if labels.len() != expected {
                diags.push(Diagnostic::from_error(
                    "chain_labels",
                    &Error::LabelCount {
                        expected,
                        got: labels.len(),
                    },
                ));
            }
        }
        diags
    }

    /// All diagnostics: type errors first; if there are none, projector and
    /// slot-completeness defects found by building the slot operators.
    pub fn validate(&self) -> Vec<Diagnostic> {
        match self.build() {
            Ok(_) => Vec::new(),
            Err(diags) => diags,
        }
    }

    pub fn build(&self) -> Result<Scenario, Vec<Diagnostic>> {
        let diags = self.check();
        if !diags.is_empty() {
            return Err(diags);
        }
        let space = self.space().map_err(|d| vec![d])?;
        let one = |loc: &str, e: Error| vec![Diagnostic::from_error(loc, &e)];

        let rho_i = eval_operator(&self.pre, &space).map_err(|e| one("pre", e))?;
        let rho_f = eval_operator(&self.post, &space).map_err(|e| one("post", e))?;

        let mut diags = Vec::new();
        let mut slots = Vec::with_capacity(self.slots.len());
        for (i, slot) in self.slots.iter().enumerate() {
            let mut projectors = Vec::with_capacity(slot.len());
            for (k, entry) in slot.iter().enumerate() {
                let loc = format!("slots[{i}][{k}].op");
                let certified = type_operator(&entry.op, &space)
                    .map(|t| t.projector)
                    .unwrap_or(false);
                let built = eval_operator(&entry.op, &space).and_then(|m| {
                    if certified {
                        Ok(Projector::trusted(space.clone(), m))
                    } else {
                        Projector::new(space.clone(), m)
                    }
                });
                match built {
                    Ok(p) => {
                        projectors.push((entry.label.clone().unwrap_or_else(|| k.to_string()), p))
                    }
                    Err(e) => diags.push(Diagnostic::from_error(loc, &e)),
                }
            }
            if projectors.len() == slot.len() {
                let refs: Vec<&Projector> = projectors.iter().map(|(_, p)| p).collect();
                for e in slot_defects(i, &refs, &space, DEFAULT_TOL) {
                    diags.push(Diagnostic::from_error(format!("slots[{i}]"), &e));
                }
            }
            slots.push(projectors);
        }
        if !diags.is_empty() {
            return Err(diags);
        }

        let mut family = build_labeled_family(space.clone(), slots).map_err(|e| one("slots", e))?;
        if let Some(labels) = &self.chain_labels {
            family = family
                .with_chain_labels(labels.iter().cloned())
                .map_err(|e| one("chain_labels", e))?;
        }
        let mut params = BTreeMap::new();
        params.insert("source".into(), ParamValue::Text("spec".into()));
        Ok(Scenario {
            name: self.name.clone(),
            space,
            rho_i,
            rho_f,
            family,
            params,
            histories_variant: None,
            closed_forms: None,
        })
    }
}

fn resolve_labels(
    labels: &[String],
    space: &SpaceDescriptor,
    loc: &str,
    diags: &mut Vec<Diagnostic>,
) -> Option<Vec<usize>> {
    let mut dims = Vec::with_capacity(labels.len());
    let mut ok = true;
    for (i, l) in labels.iter().enumerate() {
        match space.dim_of(l) {
            Ok(d) => dims.push(d),
            Err(e) => {
                diags.push(Diagnostic::from_error(loc, &e));
                ok = false;
            }
        }
        if labels[..i].contains(l) {
            diags.push(Diagnostic::from_error(
                loc,
                &Error::DuplicateLabel(l.clone()),
            ));
            ok = false;
        }
    }
    if labels.is_empty() {
        diags.push(Diagnostic::new(
            DiagnosticKind::InvalidValue,
            loc,
            "empty label list",
        ));
        ok = false;
    }
    ok.then_some(dims)
}

/// Returns the state's labels (in order) if it type-checks.
fn check_state(
    expr: &StateExpr,
    space: &SpaceDescriptor,
    loc: &str,
    diags: &mut Vec<Diagnostic>,
) -> Option<Vec<String>> {
    match expr {
        StateExpr::Basis { labels, index } => {
            let loc = format!("{loc}.basis");
            let dims = resolve_labels(labels, space, &loc, diags)?;
            let dim: usize = dims.iter().product();
            if *index >= dim {
                diags.push(Diagnostic::from_error(
                    loc,
                    &Error::IndexOutOfRange { index: *index, dim },
                ));
                return None;
            }
            Some(labels.clone())
        }
        StateExpr::MaxEntangled { labels } => {
            let loc = format!("{loc}.max_entangled");
            if labels.len() != 2 {
                diags.push(Diagnostic::from_error(
                    loc,
                    &Error::LabelCount {
                        expected: 2,
                        got: labels.len(),
                    },
                ));
                return None;
            }
            let dims = resolve_labels(labels, space, &loc, diags)?;
            if dims[0] != dims[1] {
                diags.push(Diagnostic::new(
                    DiagnosticKind::DimensionMismatch,
                    loc,
                    format!(
                        "`{}` has dimension {} but `{}` has dimension {}",
                        labels[0], dims[0], labels[1], dims[1]
                    ),
                ));
                return None;
            }
            Some(labels.clone())
        }
        StateExpr::Amplitudes { labels, values } => {
            let loc = format!("{loc}.amplitudes");
            let dims = resolve_labels(labels, space, &loc, diags)?;
            let dim: usize = dims.iter().product();
            if values.len() != dim {
                diags.push(Diagnostic::new(
                    DiagnosticKind::DimensionMismatch,
                    loc,
                    format!("{} amplitudes for a space of dimension {dim}", values.len()),
                ));
                return None;
            }
            if values.iter().flatten().any(|x| !x.is_finite()) {
                diags.push(Diagnostic::new(
                    DiagnosticKind::InvalidValue,
                    loc,
                    "non-finite amplitude",
                ));
                return None;
            }
            let n2: f64 = values.iter().map(|[re, im]| re * re + im * im).sum();
            if (n2 - 1.0).abs() > NORM_TOL {
                diags.push(Diagnostic::from_error(loc, &Error::NotNormalized(n2)));
                return None;
            }
            Some(labels.clone())
        }
        StateExpr::Product(parts) => {
            let mut all: Vec<String> = Vec::new();
            let mut ok = true;
            for (i, part) in parts.iter().enumerate() {
                let ploc = format!("{loc}.product[{i}]");
                match check_state(part, space, &ploc, diags) {
                    Some(labels) => {
                        for l in labels {
                            if all.contains(&l) {
                                diags
                                    .push(Diagnostic::from_error(&ploc, &Error::DuplicateLabel(l)));
                                ok = false;
                            } else {
                                all.push(l);
                            }
                        }
                    }
                    None => ok = false,
                }
            }
            if parts.is_empty() {
                diags.push(Diagnostic::new(
                    DiagnosticKind::InvalidValue,
                    loc,
                    "empty product",
                ));
                ok = false;
            }
            ok.then_some(all)
        }
    }
}

fn check_operator(
    expr: &OperatorExpr,
    space: &SpaceDescriptor,
    loc: &str,
    diags: &mut Vec<Diagnostic>,
) -> Option<Typed> {
    match expr {
        OperatorExpr::Identity => Some(Typed {
            support: BTreeSet::new(),
            projector: true,
        }),
        OperatorExpr::Pure(state) => {
            check_state(state, space, &format!("{loc}.pure"), diags).map(|labels| Typed {
                support: labels.into_iter().collect(),
                projector: true,
            })
        }
        OperatorExpr::Complement(inner) => {
            check_operator(inner, space, &format!("{loc}.complement"), diags)
        }
        OperatorExpr::Product(parts) => {
            let mut support = BTreeSet::new();
            let mut projector = true;
            let mut ok = true;
            for (i, part) in parts.iter().enumerate() {
                match check_operator(part, space, &format!("{loc}.product[{i}]"), diags) {
                    Some(t) => {
                        // Projectors on disjoint supports commute, so their
                        // product is again a projector.
                        projector &= t.projector && support.is_disjoint(&t.support);
                        support.extend(t.support);
                    }
                    None => ok = false,
                }
            }
            if parts.is_empty() {
                diags.push(Diagnostic::new(
                    DiagnosticKind::InvalidValue,
                    loc,
                    "empty product",
                ));
                ok = false;
            }
            ok.then_some(Typed { support, projector })
        }
        OperatorExpr::Scale { factor, op } => {
            if !factor.is_finite() {
                diags.push(Diagnostic::new(
                    DiagnosticKind::InvalidValue,
                    loc,
                    "non-finite scale factor",
                ));
                return None;
            }
            check_operator(op, space, &format!("{loc}.scale"), diags).map(|t| Typed {
                support: t.support,
                projector: t.projector && *factor == 1.0,
            })
        }
    }
}

fn type_operator(expr: &OperatorExpr, space: &SpaceDescriptor) -> Option<Typed> {
    check_operator(expr, space, "", &mut Vec::new())
}

fn eval_state(expr: &StateExpr, space: &SpaceDescriptor) -> Result<StateVector, Error> {
    let sub = |labels: &[String]| {
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        space.select(&refs)
    };
    match expr {
        StateExpr::Basis { labels, index } => StateVector::basis(sub(labels)?, *index),
        StateExpr::MaxEntangled { labels } => {
            let d = space.dim_of(&labels[0])?;
            max_entangled_on(&labels[0], &labels[1], d)
        }
        StateExpr::Amplitudes { labels, values } => StateVector::new(
            sub(labels)?,
            values
                .iter()
                .map(|[re, im]| Complex64::new(*re, *im))
                .collect(),
        ),
        StateExpr::Product(parts) => {
            let mut iter = parts.iter();
            let first = iter.next().ok_or(Error::EmptySpace)?;
            iter.try_fold(eval_state(first, space)?, |acc, p| {
                acc.tensor(&eval_state(p, space)?)
            })
        }
    }
}

fn eval_operator(expr: &OperatorExpr, space: &SpaceDescriptor) -> Result<ComplexMatrix, Error> {
    let n = space.total_dim();
    match expr {
        OperatorExpr::Identity => Ok(ComplexMatrix::identity(n)),
        OperatorExpr::Pure(state) => Ok(projector_from_vector(&eval_state(state, space)?)?
            .embed_into(space)?
            .into_matrix()),
        OperatorExpr::Complement(inner) => {
            ComplexMatrix::identity(n).sub(&eval_operator(inner, space)?)
        }
        OperatorExpr::Product(parts) => {
            let mut acc = ComplexMatrix::identity(n);
            for p in parts {
                acc = acc.matmul(&eval_operator(p, space)?)?;
            }
            Ok(acc)
        }
        OperatorExpr::Scale { factor, op } => {
            Ok(eval_operator(op, space)?.scale(Complex64::new(*factor, 0.0)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUBIT_BORN: &str = r#"{
        "name": "born",
        "subsystems": [{"label": "q", "dim": 2}],
        "pre": {"pure": {"amplitudes": {"labels": ["q"], "values": [[0.6, 0.0], [0.0, 0.8]]}}},
        "post": "identity",
        "slots": [[
            {"label": "0", "op": {"pure": {"basis": {"labels": ["q"], "index": 0}}}},
            {"label": "1", "op": {"complement": {"pure": {"basis": {"labels": ["q"], "index": 0}}}}}
        ]]
    }"#;

    #[test]
    fn born_spec_builds() {
        let spec = ScenarioSpec::from_json(QUBIT_BORN).unwrap();
        assert!(spec.validate().is_empty());
        let sc = spec.build().unwrap();
        assert_eq!(sc.family.chain_labels(), ["0", "1"]);
        assert!((sc.rho_i[(1, 1)].re - 0.64).abs() < 1e-15);
    }

    #[test]
    fn parse_error_is_a_diagnostic() {
        let d = ScenarioSpec::from_json("{\"name\": 1}").unwrap_err();
        assert_eq!(d.kind, DiagnosticKind::Parse);
    }

    #[test]
    fn unknown_label_reported() {
        let text = QUBIT_BORN.replace(
            r#""labels": ["q"], "index": 0}}}},"#,
            r#""labels": ["z"], "index": 0}}}},"#,
        );
        let diags = ScenarioSpec::from_json(&text).unwrap().validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::UnknownLabel);
        assert_eq!(diags[0].location, "slots[0][0].op.pure.basis");
    }

    #[test]
    fn doubled_slot_is_not_exhaustive() {
        let text = r#"{
            "name": "doubled",
            "subsystems": [{"label": "q", "dim": 2}],
            "pre": {"pure": {"basis": {"labels": ["q"], "index": 0}}},
            "post": "identity",
            "slots": [
                [{"op": "identity"}],
                [{"op": "identity"}, {"op": "identity"}]
            ]
        }"#;
        let diags = ScenarioSpec::from_json(text).unwrap().validate();
        assert_eq!(diags[0].kind, DiagnosticKind::SlotNotExhaustive);
        assert_eq!(diags[0].location, "slots[1]");
        assert!(diags
            .iter()
            .any(|d| d.kind == DiagnosticKind::SlotNotExclusive));
    }

    #[test]
    fn scaled_slot_entry_needs_dense_check() {
        let text = r#"{
            "name": "scaled",
            "subsystems": [{"label": "q", "dim": 2}],
            "pre": {"pure": {"basis": {"labels": ["q"], "index": 0}}},
            "post": "identity",
            "slots": [[{"op": {"scale": {"factor": 0.5, "op": "identity"}}}, {"op": {"scale": {"factor": 0.5, "op": "identity"}}}]]
        }"#;
        let diags = ScenarioSpec::from_json(text).unwrap().validate();
        assert_eq!(diags.len(), 2);
        assert!(diags
            .iter()
            .all(|d| d.kind == DiagnosticKind::NotAProjector));
    }

    #[test]
    fn type_errors_collected_together() {
        let text = r#"{
            "name": "bad",
            "subsystems": [{"label": "a", "dim": 2}, {"label": "b", "dim": 3}],
            "pre": {"pure": {"max_entangled": {"labels": ["a", "b"]}}},
            "post": {"pure": {"amplitudes": {"labels": ["a"], "values": [[1.0, 0.0], [1.0, 0.0]]}}},
            "slots": [[{"op": {"pure": {"basis": {"labels": ["a"], "index": 5}}}}]],
            "chain_labels": ["x", "y"]
        }"#;
        let kinds: Vec<_> = ScenarioSpec::from_json(text)
            .unwrap()
            .validate()
            .into_iter()
            .map(|d| d.kind)
            .collect();
        assert_eq!(
            kinds,
            [
                DiagnosticKind::DimensionMismatch,
                DiagnosticKind::NotNormalized,
                DiagnosticKind::IndexOutOfRange,
                DiagnosticKind::LabelCount,
            ]
        );
    }

    #[test]
    fn product_of_disjoint_projectors_is_certified() {
        let space = SpaceDescriptor::new([("a", 2), ("b", 2)]).unwrap();
        let basis = |l: &str, i| {
            OperatorExpr::Pure(StateExpr::Basis {
                labels: vec![l.into()],
                index: i,
            })
        };
        let disjoint = OperatorExpr::Product(vec![basis("a", 0), basis("b", 1)]);
        assert!(type_operator(&disjoint, &space).unwrap().projector);
        let overlapping = OperatorExpr::Product(vec![basis("a", 0), basis("a", 1)]);
        assert!(!type_operator(&overlapping, &space).unwrap().projector);
        let m = eval_operator(&disjoint, &space).unwrap();
        assert_eq!(m[(1, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(m.trace().unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = ScenarioSpec::from_json(QUBIT_BORN).unwrap();
        let again = ScenarioSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, again);
    }
}
