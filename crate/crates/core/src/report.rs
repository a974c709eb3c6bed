//! Side-by-side analysis reports.
//!
//! Every float stored in a [`Report`] is quantized to 12 significant digits
//! when the report is built, and magnitudes below `1e-14` are snapped to zero.
//! Serializing the quantized value yields at most 12 digits, and parsing those
//! digits restores the same `f64`, so JSON emission round-trips exactly and
//! reports are byte-stable across runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::histories::{
    assign_probabilities_with, check_consistency, decoherence_matrix, ConsistencyCondition,
    ConsistencyVerdict, DecoherenceMatrix,
};
use crate::linalg::{Subsystem, DEFAULT_TOL};
use crate::scenarios::{ParamValue, Scenario};
use crate::tsvf::abl_over_family;

pub const SCHEMA_VERSION: &str = "prepost-report/1";
pub const SIGNIFICANT_DIGITS: usize = 12;
pub const NOISE_FLOOR: f64 = 1e-14;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits; tiny values become 0.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    if x.abs() < NOISE_FLOOR {
        return 0.0;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

fn quantize_complex(z: Complex64) -> [f64; 2] {
    [quantize(z.re), quantize(z.im)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub tol: f64,
    /// Condition that gates the histories probability assignment.
    pub condition: ConsistencyCondition,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            condition: ConsistencyCondition::FullDiagonality,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: String,
    pub scenario: ScenarioInfo,
    pub settings: Settings,
    pub histories: HistoriesBlock,
    pub abl: AblBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedFormBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub subsystems: Vec<Subsystem>,
    pub total_dim: usize,
    pub params: BTreeMap<String, ParamValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub tol: f64,
    pub condition: ConsistencyCondition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledProbability {
    pub label: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub condition: ConsistencyCondition,
    pub tol: f64,
    pub consistent: bool,
    pub max_violation: f64,
    pub worst_pair: Option<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Assignment {
    Assigned {
        condition: ConsistencyCondition,
        probabilities: Vec<LabeledProbability>,
    },
    NotConsistent {
        condition: ConsistencyCondition,
        max_violation: f64,
        worst_pair: Option<[String; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoriesBlock {
    pub chain_labels: Vec<String>,
    #[serde(flatten)]
    pub result: HistoriesResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HistoriesResult {
    Evaluated {
        norm_trace: [f64; 2],
        /// Row-major `D(α, α′)` as `[re, im]` pairs.
        decoherence_matrix: Vec<Vec<[f64; 2]>>,
        verdicts: Vec<Verdict>,
        assignment: Assignment,
    },
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AblBlock {
    Distribution {
        denominator: f64,
        outcomes: Vec<LabeledProbability>,
    },
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormValues {
    pub probabilities: Vec<f64>,
    pub offdiag_12: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormBlock {
    pub d: usize,
    pub numerators: Vec<u64>,
    pub denominator: u64,
    pub closed_form: ClosedFormValues,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric: Option<ClosedFormValues>,
    /// Numeric and closed-form values coincide at 12 significant digits.
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

fn verdict_block(v: &ConsistencyVerdict, labels: &[String]) -> Verdict {
    Verdict {
        condition: v.condition,
        tol: v.tol,
        consistent: v.consistent,
        max_violation: quantize(v.max_violation),
        worst_pair: v
            .worst_pair
            .map(|(a, b)| [labels[a].clone(), labels[b].clone()]),
    }
}

fn histories_block(
    sc: &Scenario,
    opts: &ReportOptions,
) -> (HistoriesBlock, Option<DecoherenceMatrix>) {
    let (rho_f, family) = sc.histories_setup();
    let chain_labels = family.chain_labels();
    let d = match decoherence_matrix(family, &sc.rho_i, rho_f) {
        Ok(d) => d,
        Err(e) => {
            return (
                HistoriesBlock {
                    chain_labels,
                    result: HistoriesResult::Error {
                        message: e.to_string(),
                    },
                },
                None,
            )
        }
    };
    let verdicts = [
        ConsistencyCondition::FullDiagonality,
        ConsistencyCondition::RealPartOnly,
    ]
    .map(|c| verdict_block(&check_consistency(&d, c, opts.tol), &chain_labels))
    .to_vec();
    let assignment = match assign_probabilities_with(&d, opts.condition, opts.tol) {
        Ok(p) => Assignment::Assigned {
            condition: opts.condition,
            probabilities: p
                .outcomes
                .into_iter()
                .map(|(label, probability)| LabeledProbability {
                    label,
                    probability: quantize(probability),
                })
                .collect(),
        },
        Err(Error::NotConsistent(v)) => {
            let v = verdict_block(&v, &chain_labels);
            Assignment::NotConsistent {
                condition: v.condition,
                max_violation: v.max_violation,
                worst_pair: v.worst_pair,
            }
        }
        Err(e) => unreachable!("assignment only refuses on consistency: {e}"),
    };
    let matrix = d
        .entries()
        .to_rows()
        .into_iter()
        .map(|row| row.into_iter().map(quantize_complex).collect())
        .collect();
    let block = HistoriesBlock {
        chain_labels,
        result: HistoriesResult::Evaluated {
            norm_trace: quantize_complex(d.norm_trace()),
            decoherence_matrix: matrix,
            verdicts,
            assignment,
        },
    };
    (block, Some(d))
}

fn abl_block(sc: &Scenario) -> AblBlock {
    let (rho_f, family) = sc.abl_setup();
    match abl_over_family(family, &sc.rho_i, rho_f) {
        Ok(dist) => AblBlock::Distribution {
            denominator: quantize(dist.denominator),
            outcomes: dist
                .outcomes
                .into_iter()
                .map(|(label, probability)| LabeledProbability {
                    label,
                    probability: quantize(probability),
                })
                .collect(),
        },
        Err(e) => AblBlock::Error {
            message: e.to_string(),
        },
    }
}

/// Runs both analyses on `sc` and collects the results.
pub fn build_report(sc: &Scenario, opts: &ReportOptions) -> Report {
    let (histories, dmat) = histories_block(sc, opts);
    let abl = abl_block(sc);
    let closed_form = sc.closed_forms.as_ref().map(|cf| {
        let closed = ClosedFormValues {
            probabilities: cf.probabilities.iter().copied().map(quantize).collect(),
            offdiag_12: quantize(cf.offdiag_12),
        };
        let numeric = match (&abl, &dmat) {
            (AblBlock::Distribution { outcomes, .. }, Some(d)) if d.len() >= 2 => {
                Some(ClosedFormValues {
                    probabilities: outcomes.iter().map(|o| o.probability).collect(),
                    offdiag_12: quantize(d.get(0, 1).re),
                })
            }
            _ => None,
        };
        ClosedFormBlock {
            d: cf.d,
            numerators: cf.numerators.iter().map(|&n| n as u64).collect(),
            denominator: cf.denominator as u64,
            agree: numeric.as_ref() == Some(&closed),
            closed_form: closed,
            numeric,
        }
    });
    Report {
        schema_version: SCHEMA_VERSION.into(),
        scenario: ScenarioInfo {
            name: sc.name.clone(),
            subsystems: sc.space.subsystems().to_vec(),
            total_dim: sc.space.total_dim(),
            params: sc
                .params
                .iter()
                .map(|(k, v)| {
                    let v = match v {
                        ParamValue::Real(x) => ParamValue::Real(quantize(*x)),
                        other => other.clone(),
                    };
                    (k.clone(), v)
                })
                .collect(),
        },
        settings: Settings {
            tol: opts.tol,
            condition: opts.condition,
        },
        histories,
        abl,
        closed_form,
        timing: None,
    }
}

fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if (1e-4..1e12).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn pair(z: &[f64; 2]) -> String {
    format!("({}, {})", num(z[0]), num(z[1]))
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// True when either analysis failed outright (not merely refused).
    pub fn has_errors(&self) -> bool {
        matches!(self.histories.result, HistoriesResult::Error { .. })
            || matches!(self.abl, AblBlock::Error { .. })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let sc = &self.scenario;
        let _ = writeln!(w, "report {}", self.schema_version);
        let subsystems: Vec<String> = sc
            .subsystems
            .iter()
            .map(|s| format!("{}:{}", s.label, s.dim))
            .collect();
        let _ = writeln!(
            w,
            "scenario {} [{}] total_dim {}",
            sc.name,
            subsystems.join(" "),
            sc.total_dim
        );
        for (k, v) in &sc.params {
            let v = match v {
                ParamValue::Int(i) => i.to_string(),
                ParamValue::Real(x) => num(*x),
                ParamValue::Text(t) => t.clone(),
            };
            let _ = writeln!(w, "  {k} = {v}");
        }
        let _ = writeln!(
            w,
            "settings tol {} condition {}",
            num(self.settings.tol),
            self.settings.condition.name()
        );

        let _ = writeln!(w, "\nconsistent histories");
        let _ = writeln!(w, "  chains: {}", self.histories.chain_labels.join(" | "));
        match &self.histories.result {
            HistoriesResult::Evaluated {
                norm_trace,
                decoherence_matrix,
                verdicts,
                assignment,
            } => {
                let _ = writeln!(w, "  tr[rho_i rho_f] = {}", pair(norm_trace));
                let _ = writeln!(w, "  decoherence matrix:");
                for row in decoherence_matrix {
                    let cells: Vec<String> = row.iter().map(pair).collect();
                    let _ = writeln!(w, "    {}", cells.join("  "));
                }
                for v in verdicts {
                    let worst = v
                        .worst_pair
                        .as_ref()
                        .map(|[a, b]| format!(" at ({a}; {b})"))
                        .unwrap_or_default();
                    let _ = writeln!(
                        w,
                        "  condition {} (tol {}): {}, max violation {}{}",
                        v.condition.name(),
                        num(v.tol),
                        if v.consistent {
                            "consistent"
                        } else {
                            "not consistent"
                        },
                        num(v.max_violation),
                        worst
                    );
                }
                match assignment {
                    Assignment::Assigned { probabilities, .. } => {
                        let _ = writeln!(w, "  probabilities:");
                        for p in probabilities {
                            let _ = writeln!(w, "    {}: {}", p.label, num(p.probability));
                        }
                    }
                    Assignment::NotConsistent { condition, .. } => {
                        let _ = writeln!(
                            w,
                            "  probabilities: not assigned (condition {} fails)",
                            condition.name()
                        );
                    }
                }
            }
            HistoriesResult::Error { message } => {
                let _ = writeln!(w, "  error: {message}");
            }
        }

        let _ = writeln!(w, "\nABL");
        match &self.abl {
            AblBlock::Distribution {
                denominator,
                outcomes,
            } => {
                let _ = writeln!(w, "  denominator {}", num(*denominator));
                for p in outcomes {
                    let _ = writeln!(w, "    {}: {}", p.label, num(p.probability));
                }
            }
            AblBlock::Error { message } => {
                let _ = writeln!(w, "  error: {message}");
            }
        }

        if let Some(cf) = &self.closed_form {
            let _ = writeln!(
                w,
                "\nclosed form (d = {}, denominator {})",
                cf.d, cf.denominator
            );
            let fmt_values = |v: &ClosedFormValues| {
                let ps: Vec<String> = v.probabilities.iter().map(|p| num(*p)).collect();
                format!("p = [{}], D(1,2) = {}", ps.join(", "), num(v.offdiag_12))
            };
            let _ = writeln!(w, "  closed form: {}", fmt_values(&cf.closed_form));
            if let Some(n) = &cf.numeric {
                let _ = writeln!(w, "  numeric:     {}", fmt_values(n));
            }
            let _ = writeln!(w, "  agree: {}", cf.agree);
        }
        if let Some(t) = &self.timing {
            let _ = writeln!(w, "\nelapsed {} ms", num(t.elapsed_ms));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{hm_scenario, spin_scenario};
    use proptest::prelude::*;

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(1.0 / 28.0), 0.0357142857143);
        assert_eq!(quantize(0.18749999999999997), 0.1875);
        assert_eq!(quantize(-3e-17), 0.0);
        assert_eq!(quantize(123456789.9876), 123456789.988);
    }

    proptest! {
        #[test]
        fn quantized_floats_round_trip(x in -1e6f64..1e6) {
            let q = quantize(x);
            prop_assert_eq!(quantize(q), q);
            let text = serde_json::to_string(&q).unwrap();
            prop_assert_eq!(serde_json::from_str::<f64>(&text).unwrap(), q);
            let digits = text.trim_start_matches('-').chars().filter(char::is_ascii_digit)
                .skip_while(|&c| c == '0').count();
            prop_assert!(digits <= SIGNIFICANT_DIGITS, "{}", text);
        }
    }

    #[test]
    fn spin_report() {
        let r = build_report(&spin_scenario(), &ReportOptions::default());
        assert!(!r.has_errors());
        match &r.histories.result {
            HistoriesResult::Evaluated {
                assignment,
                verdicts,
                ..
            } => {
                assert!(
                    matches!(assignment, Assignment::NotConsistent { max_violation, .. } if *max_violation == 0.25)
                );
                assert_eq!(verdicts.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        match &r.abl {
            AblBlock::Distribution { outcomes, .. } => {
                assert_eq!(
                    outcomes.iter().map(|o| o.probability).collect::<Vec<_>>(),
                    [0.5, 0.5]
                );
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(r.closed_form.is_none());
    }

    #[test]
    fn hm_report_agrees_with_closed_form() {
        let r = build_report(&hm_scenario(2).unwrap(), &ReportOptions::default());
        let cf = r.closed_form.as_ref().unwrap();
        assert!(cf.agree);
        assert_eq!(cf.denominator, 28);
        assert_eq!(cf.closed_form.offdiag_12, 0.1875);
    }

    #[test]
    fn reports_round_trip() {
        for sc in [
            spin_scenario(),
            hm_scenario(2).unwrap(),
            hm_scenario(3).unwrap(),
        ] {
            let mut r = build_report(&sc, &ReportOptions::default());
            r.timing = Some(Timing {
                elapsed_ms: quantize(1.2345),
            });
            let again = Report::from_json(&r.to_json()).unwrap();
            assert_eq!(again, r);
            assert_eq!(again.to_json(), r.to_json());
        }
    }

    #[test]
    fn text_is_deterministic() {
        let sc = hm_scenario(2).unwrap();
        let a = build_report(&sc, &ReportOptions::default()).to_text();
        let b = build_report(&sc, &ReportOptions::default()).to_text();
        assert_eq!(a, b);
        assert!(a.contains("agree: true"));
    }
}
