//! Python bindings for the `authlab` library.

use std::path::PathBuf;

use authlab::adversary::{
    attack_matrix as run_matrix, AttackMatrix, JiangWorld, MatrixConfig, ProposedWorld, Scheme,
};
use authlab::cost::measure_costs;
use authlab::jiang::{JCard, JConfig};
use authlab::proposed::PCard;
use authlab::registry::{save_state, SaveOptions};
use authlab::scenario::{cmd_demo, ScenarioConfig};
use authlab::{Digest, Party, Reject, SecurityLabel, SimClock};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

create_exception!(
    authlab,
    RejectError,
    PyException,
    "A protocol step was rejected."
);

fn reject(r: Reject) -> PyErr {
    RejectError::new_err(r.as_str())
}

fn label(params: &str) -> PyResult<SecurityLabel> {
    params.parse().map_err(PyValueError::new_err)
}

fn scheme(name: &str) -> PyResult<Scheme> {
    Scheme::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown scheme '{name}'")))
}

fn agreed(
    client: Result<Digest, Reject>,
    server: Option<Result<Digest, Reject>>,
) -> PyResult<Vec<u8>> {
    match server {
        Some(Err(r)) => Err(reject(r)),
        None => Err(reject(client.err().unwrap_or(Reject::ServerUnavailable))),
        Some(Ok(s)) => {
            let c = client.map_err(reject)?;
            if c != s {
                return Err(reject(Reject::BadMac));
            }
            Ok(c.as_bytes().to_vec())
        }
    }
}

/// Card issued by the improved scheme: `{NID, B, L, V}`.
#[pyclass(module = "authlab", name = "ProposedCard", from_py_object)]
#[derive(Clone)]
struct PyPCard(PCard);

#[pymethods]
impl PyPCard {
    #[getter]
    fn nid(&self) -> String {
        hex::encode(self.0.nid.0)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_bytes())
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        PCard::from_bytes(data)
            .map(PyPCard)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("ProposedCard(nid={})", self.nid())
    }
}

/// Card issued by the timestamp-based scheme: `B = h(ID)^(x + PW)`.
#[pyclass(module = "authlab", name = "JiangCard", from_py_object)]
#[derive(Clone)]
struct PyJCard(JCard);

#[pymethods]
impl PyJCard {
    fn __repr__(&self) -> String {
        "JiangCard(..)".to_string()
    }
}

/// Server, clock and channel for the improved scheme.
#[pyclass(module = "authlab", name = "ProposedLab")]
struct PyProposed(ProposedWorld);

#[pymethods]
impl PyProposed {
    #[new]
    #[pyo3(signature = (params = "512", seed = 1))]
    fn new(params: &str, seed: u64) -> PyResult<Self> {
        Ok(PyProposed(ProposedWorld::new(label(params)?, seed)))
    }

    fn register(&mut self, id: &str, password: &str) -> PyResult<PyPCard> {
        self.0.register(id, password).map(PyPCard).map_err(reject)
    }

    /// Revokes the current card of `id` and issues a new one.
    fn reissue(&mut self, id: &str, password: &str) -> PyResult<PyPCard> {
        self.0.reissue(id, password).map(PyPCard).map_err(reject)
    }

    /// Full login with key agreement and confirmation; returns the session key.
    fn login<'py>(
        &mut self,
        py: Python<'py>,
        card: &PyPCard,
        id: &str,
        password: &str,
    ) -> PyResult<Bound<'py, PyBytes>> {
        let run = self.0.login(&card.0, id, password);
        Ok(PyBytes::new(py, &agreed(run.client, run.server)?))
    }

    fn change_password(
        &mut self,
        card: &PyPCard,
        id: &str,
        password: &str,
        new_password: &str,
    ) -> PyResult<PyPCard> {
        self.0
            .change_password(&card.0, id, password, new_password)
            .map(PyPCard)
            .map_err(reject)
    }

    #[getter]
    fn message_count(&self) -> u64 {
        self.0.channel.message_count()
    }

    fn transcript(&self) -> String {
        self.0.channel.transcript().to_string()
    }

    #[pyo3(signature = (path, persist_master_key = false, force = false))]
    fn save_state(&self, path: PathBuf, persist_master_key: bool, force: bool) -> PyResult<()> {
        save_state(
            &self.0.server,
            &path,
            SaveOptions {
                persist_master_key,
                force,
            },
        )
        .map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

/// Server, clock and channel for the timestamp-based scheme.
#[pyclass(module = "authlab", name = "JiangLab")]
struct PyJiang(JiangWorld);

#[pymethods]
impl PyJiang {
    #[new]
    #[pyo3(signature = (params = "512", seed = 1, delta_t = 2, allow_duplicate_registration = true))]
    fn new(
        params: &str,
        seed: u64,
        delta_t: u64,
        allow_duplicate_registration: bool,
    ) -> PyResult<Self> {
        let config = JConfig {
            delta_t,
            allow_duplicate_registration,
            ..JConfig::default()
        };
        Ok(PyJiang(JiangWorld::new(label(params)?, config, seed)))
    }

    fn register(&mut self, id: &str, password: &str) -> PyResult<PyJCard> {
        self.0.register(id, password).map(PyJCard).map_err(reject)
    }

    fn login<'py>(
        &mut self,
        py: Python<'py>,
        card: &PyJCard,
        id: &str,
        password: &str,
    ) -> PyResult<Bound<'py, PyBytes>> {
        let run = self.0.login(&card.0, id, password);
        Ok(PyBytes::new(py, &agreed(run.client, run.server)?))
    }

    /// Returns the updated card; needs the server.
    fn change_password(
        &mut self,
        card: &PyJCard,
        id: &str,
        password: &str,
        new_password: &str,
    ) -> PyResult<PyJCard> {
        let mut c = card.0.clone();
        self.0
            .change_password(&mut c, id, password, new_password)
            .map_err(reject)?;
        Ok(PyJCard(c))
    }

    /// Sets the client clock `ticks` away from the server's.
    fn set_client_skew(&mut self, ticks: i64) {
        self.0.clock = SimClock::starting_at(self.0.clock.now()).with_skew(Party::Client, ticks);
    }

    fn advance(&mut self, ticks: u64) {
        self.0.clock.advance(ticks);
    }

    #[getter]
    fn message_count(&self) -> u64 {
        self.0.channel.message_count()
    }

    fn transcript(&self) -> String {
        self.0.channel.transcript().to_string()
    }
}

/// Result of running every attack against both schemes.
#[pyclass(module = "authlab", name = "Matrix")]
struct PyMatrix(AttackMatrix);

#[pymethods]
impl PyMatrix {
    #[getter]
    fn matches(&self) -> bool {
        self.0.matches_expected()
    }

    /// `(attribute, compared, jiang, proposed, expected_jiang, expected_proposed)`
    /// with cells rendered as `v`, `x` or `-`.
    #[getter]
    fn rows(&self) -> Vec<(String, bool, String, String, String, String)> {
        self.0
            .rows
            .iter()
            .map(|r| {
                let (j, p) = r.cells();
                (
                    r.attribute.to_string(),
                    r.compared,
                    j.ascii().to_string(),
                    p.ascii().to_string(),
                    r.expected.0.ascii().to_string(),
                    r.expected.1.ascii().to_string(),
                )
            })
            .collect()
    }

    fn divergences(&self) -> Vec<String> {
        self.0
            .divergences()
            .into_iter()
            .map(str::to_string)
            .collect()
    }

    fn text(&self) -> String {
        self.0.render_text()
    }

    fn machine(&self) -> String {
        self.0.render_machine()
    }

    fn transcript(&self) -> String {
        self.0.transcript.to_string()
    }
}

#[pyfunction]
#[pyo3(signature = (seed = 1, params = "512", allow_duplicate_registration = true))]
fn attack_matrix(
    py: Python<'_>,
    seed: u64,
    params: &str,
    allow_duplicate_registration: bool,
) -> PyResult<PyMatrix> {
    let config = MatrixConfig {
        label: label(params)?,
        seed,
        jiang: JConfig {
            allow_duplicate_registration,
            ..JConfig::default()
        },
        ..MatrixConfig::default()
    };
    Ok(PyMatrix(py.detach(|| run_matrix(&config))))
}

/// Per-phase counts as `(scheme, phase, measured, published, conforms)`,
/// each count a `(T_h, T_E, T_M, T_X)` tuple.
#[pyfunction]
#[pyo3(signature = (params = "512", seed = 1))]
#[allow(clippy::type_complexity)]
fn cost(
    params: &str,
    seed: u64,
) -> PyResult<
    Vec<(
        String,
        String,
        (u64, u64, u64, u64),
        (u64, u64, u64, u64),
        bool,
    )>,
> {
    let label = label(params)?;
    let mut out = Vec::new();
    for s in [Scheme::Jiang, Scheme::Proposed] {
        let report = measure_costs(s, label, seed).map_err(reject)?;
        for p in &report.phases {
            let m = p.measured;
            let q = p.published;
            out.push((
                s.as_str().to_string(),
                p.phase.as_str().to_string(),
                (m.hash, m.exp, m.mul, m.xor),
                (q.hash, q.exp, q.mul, q.xor),
                p.conforms(),
            ));
        }
    }
    Ok(out)
}

/// Runs the demo scenario and returns `(exit_code, output)`.
#[pyfunction]
#[pyo3(signature = (scheme_name = "proposed", params = "512", seed = 1, skew = None, wrong_old_password = false))]
fn demo(
    scheme_name: &str,
    params: &str,
    seed: u64,
    skew: Option<i64>,
    wrong_old_password: bool,
) -> PyResult<(i32, String)> {
    let cfg = ScenarioConfig {
        label: label(params)?,
        seed,
        skew,
        wrong_old_password,
        ..ScenarioConfig::default()
    };
    let out = cmd_demo(scheme(scheme_name)?, &cfg);
    Ok((out.code, out.stdout + &out.stderr))
}

#[pymodule]
#[pyo3(name = "authlab")]
fn authlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RejectError", m.py().get_type::<RejectError>())?;
    m.add_class::<PyPCard>()?;
    m.add_class::<PyJCard>()?;
    m.add_class::<PyProposed>()?;
    m.add_class::<PyJiang>()?;
    m.add_class::<PyMatrix>()?;
    m.add_function(wrap_pyfunction!(attack_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(cost, m)?)?;
    m.add_function(wrap_pyfunction!(demo, m)?)?;
    Ok(())
}
