//! Python bindings. Matrices are nested lists of `complex`, states are lists
//! of `complex`.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use prepost::histories::ConsistencyCondition;
use prepost::report::{build_report, ReportOptions};
use prepost::scenarios::ParamValue;
use prepost::spec::ScenarioSpec;
use prepost::{
    Complex64, ComplexMatrix, Error, Projector, SlotOrder, SpaceDescriptor, StateVector,
    DEFAULT_TOL,
};

create_exception!(
    prepost,
    PrepostError,
    PyException,
    "Invalid input or failed analysis."
);
create_exception!(
    prepost,
    NotConsistentError,
    PrepostError,
    "The family violates the consistency condition."
);
create_exception!(
    prepost,
    ZeroDenominatorError,
    PrepostError,
    "The post-selection is impossible."
);
create_exception!(
    prepost,
    SpecError,
    PrepostError,
    "The scenario file has diagnostics."
);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NotConsistent(v) => NotConsistentError::new_err((
            format!(
                "family is not consistent (max violation {:e})",
                v.max_violation
            ),
            v.max_violation,
        )),
        e @ (Error::ZeroDenominator(_) | Error::ZeroNormalization(_)) => {
            ZeroDenominatorError::new_err(e.to_string())
        }
        e => PrepostError::new_err(e.to_string()),
    }
}

fn condition(name: &str) -> PyResult<ConsistencyCondition> {
    match name {
        "full" => Ok(ConsistencyCondition::FullDiagonality),
        "real" => Ok(ConsistencyCondition::RealPartOnly),
        other => Err(PrepostError::new_err(format!(
            "unknown condition {other:?}; use \"full\" or \"real\""
        ))),
    }
}

fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    ComplexMatrix::from_rows(&rows).map_err(to_py)
}

fn line_space(n: usize) -> PyResult<SpaceDescriptor> {
    SpaceDescriptor::new([("system", n)]).map_err(to_py)
}

/// `(consistent, max_violation, worst_pair)`.
type Verdict = (bool, f64, Option<(String, String)>);

/// A scenario: initial and final states plus a history family.
#[pyclass(name = "Scenario", module = "prepost", frozen)]
struct PyScenario {
    inner: prepost::Scenario,
}

#[pymethods]
impl PyScenario {
    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn total_dim(&self) -> usize {
        self.inner.space.total_dim()
    }

    #[getter]
    fn subsystems(&self) -> Vec<(String, usize)> {
        self.inner
            .space
            .subsystems()
            .iter()
            .map(|s| (s.label.clone(), s.dim))
            .collect()
    }

    /// Chain labels of the histories reading.
    #[getter]
    fn chain_labels(&self) -> Vec<String> {
        self.inner.histories_setup().1.chain_labels()
    }

    #[getter]
    fn params<'py>(&self, py: Python<'py>) -> PyResult<BTreeMap<String, Bound<'py, PyAny>>> {
        self.inner
            .params
            .iter()
            .map(|(k, v)| {
                let obj = match v {
                    ParamValue::Int(i) => i.into_pyobject(py)?.into_any(),
                    ParamValue::Real(x) => x.into_pyobject(py)?.into_any(),
                    ParamValue::Text(t) => t.into_pyobject(py)?.into_any(),
                };
                Ok((k.clone(), obj))
            })
            .collect()
    }

    /// Normalized decoherence functional of the histories reading.
    fn decoherence_matrix(&self) -> PyResult<Vec<Vec<Complex64>>> {
        let (rho_f, family) = self.inner.histories_setup();
        let d = prepost::decoherence_matrix(family, &self.inner.rho_i, rho_f).map_err(to_py)?;
        Ok(d.entries().to_rows())
    }

    #[pyo3(signature = (condition = "full", tol = DEFAULT_TOL))]
    fn check_consistency(&self, condition: &str, tol: f64) -> PyResult<Verdict> {
        let (rho_f, family) = self.inner.histories_setup();
        let d = prepost::decoherence_matrix(family, &self.inner.rho_i, rho_f).map_err(to_py)?;
        let v = prepost::check_consistency(&d, self::condition(condition)?, tol);
        let labels = family.chain_labels();
        Ok((
            v.consistent,
            v.max_violation,
            v.worst_pair
                .map(|(a, b)| (labels[a].clone(), labels[b].clone())),
        ))
    }

    /// Histories probabilities; raises `NotConsistentError` on refusal.
    #[pyo3(signature = (tol = DEFAULT_TOL, condition = "full"))]
    fn assign_probabilities(&self, tol: f64, condition: &str) -> PyResult<Vec<(String, f64)>> {
        let (rho_f, family) = self.inner.histories_setup();
        let d = prepost::decoherence_matrix(family, &self.inner.rho_i, rho_f).map_err(to_py)?;
        prepost::assign_probabilities_with(&d, self::condition(condition)?, tol)
            .map(|p| p.outcomes)
            .map_err(to_py)
    }

    /// ABL probabilities of the pre/post-selected reading.
    fn abl(&self) -> PyResult<Vec<(String, f64)>> {
        let (rho_f, family) = self.inner.abl_setup();
        prepost::abl_over_family(family, &self.inner.rho_i, rho_f)
            .map(|d| d.outcomes)
            .map_err(to_py)
    }

    /// Analysis report as text or JSON.
    #[pyo3(signature = (format = "json", tol = DEFAULT_TOL, condition = "full"))]
    fn report(&self, format: &str, tol: f64, condition: &str) -> PyResult<String> {
        let opts = ReportOptions {
            tol,
            condition: self::condition(condition)?,
        };
        let r = build_report(&self.inner, &opts);
        match format {
            "json" => Ok(r.to_json()),
            "text" => Ok(r.to_text()),
            other => Err(PrepostError::new_err(format!("unknown format {other:?}"))),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(name={:?}, total_dim={})",
            self.inner.name,
            self.inner.space.total_dim()
        )
    }
}

#[pyfunction]
fn spin_scenario() -> PyScenario {
    PyScenario {
        inner: prepost::spin_scenario(),
    }
}

#[pyfunction]
#[pyo3(signature = (d, swap_order = false))]
fn hm_scenario(d: usize, swap_order: bool) -> PyResult<PyScenario> {
    let order = if swap_order {
        SlotOrder::Swapped
    } else {
        SlotOrder::Standard
    };
    prepost::hm_scenario_with_order(d, order)
        .map(|inner| PyScenario { inner })
        .map_err(to_py)
}

/// Returns `(probabilities, offdiag_12, numerators, denominator)`.
#[pyfunction]
fn hm_closed_forms(d: usize) -> PyResult<(Vec<f64>, f64, Vec<u128>, u128)> {
    let cf = prepost::hm_closed_forms(d).map_err(to_py)?;
    Ok((
        cf.probabilities.to_vec(),
        cf.offdiag_12,
        cf.numerators.to_vec(),
        cf.denominator,
    ))
}

/// Builds a scenario from a JSON scenario document.
#[pyfunction]
fn load_spec(text: &str) -> PyResult<PyScenario> {
    let spec = ScenarioSpec::from_json(text).map_err(|d| SpecError::new_err(d.to_string()))?;
    spec.build()
        .map(|inner| PyScenario { inner })
        .map_err(|diags| {
            let lines: Vec<String> = diags.iter().map(ToString::to_string).collect();
            SpecError::new_err(lines.join("\n"))
        })
}

/// Diagnostics for a JSON scenario document; empty means runnable.
#[pyfunction]
fn validate_spec(text: &str) -> Vec<String> {
    match ScenarioSpec::from_json(text) {
        Ok(spec) => spec.validate().iter().map(ToString::to_string).collect(),
        Err(d) => vec![d.to_string()],
    }
}

fn projectors(space: &SpaceDescriptor, ops: Vec<Vec<Vec<Complex64>>>) -> PyResult<Vec<Projector>> {
    ops.into_iter()
        .map(|rows| Projector::new(space.clone(), matrix(rows)?).map_err(to_py))
        .collect()
}

/// ABL probabilities for pure pre- and post-selected states.
#[pyfunction]
fn abl_pure(
    psi_i: Vec<Complex64>,
    psi_f: Vec<Complex64>,
    decomposition: Vec<Vec<Vec<Complex64>>>,
) -> PyResult<Vec<f64>> {
    let space = line_space(psi_i.len())?;
    let i = StateVector::new(space.clone(), psi_i).map_err(to_py)?;
    let f = StateVector::new(space.clone(), psi_f).map_err(to_py)?;
    let ps = projectors(&space, decomposition)?;
    prepost::abl_pure(&i, &f, &ps)
        .map(|d| d.values())
        .map_err(to_py)
}

/// ABL probabilities for a state, initial and final selections and a
/// projective measurement.
#[pyfunction]
fn abl_general(
    rho: Vec<Vec<Complex64>>,
    pi_i: Vec<Vec<Complex64>>,
    pi_f: Vec<Vec<Complex64>>,
    measurement: Vec<Vec<Vec<Complex64>>>,
) -> PyResult<Vec<f64>> {
    let rho = matrix(rho)?;
    let space = line_space(rho.rows())?;
    let pi_i = Projector::new(space.clone(), matrix(pi_i)?).map_err(to_py)?;
    let pi_f = Projector::new(space.clone(), matrix(pi_f)?).map_err(to_py)?;
    let ps = projectors(&space, measurement)?;
    prepost::abl_general(&rho, &pi_i, &pi_f, &ps)
        .map(|d| d.values())
        .map_err(to_py)
}

/// Normalized decoherence functional of the family spanned by `slots`
/// (earliest first), with chains enumerated earliest slot slowest.
#[pyfunction]
fn decoherence_matrix(
    slots: Vec<Vec<Vec<Vec<Complex64>>>>,
    rho_i: Vec<Vec<Complex64>>,
    rho_f: Vec<Vec<Complex64>>,
) -> PyResult<Vec<Vec<Complex64>>> {
    let rho_i = matrix(rho_i)?;
    let space = line_space(rho_i.rows())?;
    let slots = slots
        .into_iter()
        .map(|s| projectors(&space, s))
        .collect::<PyResult<Vec<_>>>()?;
    let family = prepost::build_family(space, slots).map_err(to_py)?;
    let d = prepost::decoherence_matrix(&family, &rho_i, &matrix(rho_f)?).map_err(to_py)?;
    Ok(d.entries().to_rows())
}

#[pymodule(name = "prepost")]
fn prepost_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(spin_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(hm_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(hm_closed_forms, m)?)?;
    m.add_function(wrap_pyfunction!(load_spec, m)?)?;
    m.add_function(wrap_pyfunction!(validate_spec, m)?)?;
    m.add_function(wrap_pyfunction!(abl_pure, m)?)?;
    m.add_function(wrap_pyfunction!(abl_general, m)?)?;
    m.add_function(wrap_pyfunction!(decoherence_matrix, m)?)?;
    m.add("PrepostError", py.get_type::<PrepostError>())?;
    m.add("NotConsistentError", py.get_type::<NotConsistentError>())?;
    m.add(
        "ZeroDenominatorError",
        py.get_type::<ZeroDenominatorError>(),
    )?;
    m.add("SpecError", py.get_type::<SpecError>())?;
    m.add("SCHEMA_VERSION", prepost::report::SCHEMA_VERSION)?;
    Ok(())
}
