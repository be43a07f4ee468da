//! Python bindings. Structured results come back as plain dicts and lists.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use systole::complex::{self as cx, Complex, DichotomyConfig, Kind, SlitGeometry};
use systole::flow::{self, OrbitState, ProbeConfig, TwoSheetIET};
use systole::laws::{self, DistanceBoundConfig, DivergenceConfig, LawInputs};
use systole::number_theory::{self as nt, AlphaSpec, TableOptions};
use systole::surface::{self, SlitTorusSurface, SurfaceMode, SurfaceOptions};
use systole::Holonomy;

/// `(t, delta, delta_sep, delta_nonsep)`.
type SystoleRow = (f64, f64, Option<f64>, Option<f64>);

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (_, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => PyList::new(
            py,
            a.iter()
                .map(|x| value_to_py(py, x))
                .collect::<PyResult<Vec<_>>>()?,
        )?
        .into_any(),
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, value_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn to_py<'py, T: Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    value_to_py(py, &serde_json::to_value(x).map_err(err)?)
}

/// `"paper"`, `"golden"`, `"silver"`, or a list of quotients repeated periodically.
#[derive(FromPyObject)]
enum AlphaArg {
    Name(String),
    Quotients(Vec<u64>),
}

impl AlphaArg {
    fn spec(&self) -> PyResult<AlphaSpec> {
        match self {
            AlphaArg::Name(n) => match n.as_str() {
                "paper" => Ok(AlphaSpec::paper()),
                "golden" => Ok(AlphaSpec::golden()),
                "silver" => Ok(AlphaSpec::periodic(vec![2])),
                other => Err(PyValueError::new_err(format!("unknown alpha {other:?}"))),
            },
            AlphaArg::Quotients(q) => Ok(AlphaSpec::periodic(q.clone())),
        }
    }
}

fn parse_kind(s: &str) -> PyResult<Kind> {
    match s {
        "slit0" => Ok(Kind::Slit(0)),
        "slit1" => Ok(Kind::Slit(1)),
        "arc0" => Ok(Kind::Arc(0)),
        "arc1" => Ok(Kind::Arc(1)),
        other => Err(PyValueError::new_err(format!(
            "unknown edge {other:?}; use slit0, slit1, arc0, arc1"
        ))),
    }
}

#[pyclass(name = "Surface", module = "systole_py", frozen)]
struct PySurface {
    inner: SlitTorusSurface,
}

#[pymethods]
impl PySurface {
    #[new]
    #[pyo3(signature = (alpha, torus = false, k_max = 40, unit_area = false, slit_length = None))]
    fn new(
        alpha: AlphaArg,
        torus: bool,
        k_max: usize,
        unit_area: bool,
        slit_length: Option<f64>,
    ) -> PyResult<Self> {
        let mode = if torus {
            SurfaceMode::Torus
        } else {
            SurfaceMode::Slit
        };
        let opts = SurfaceOptions {
            mode,
            k_max,
            unit_area,
            ..SurfaceOptions::default()
        };
        let spec = alpha.spec()?;
        let inner = match slit_length {
            Some(s) => SlitTorusSurface::with_slit_length(&spec, &opts, s),
            None => surface::build_surface(&spec, &opts),
        }
        .map_err(err)?;
        Ok(PySurface { inner })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha_f64()
    }

    #[getter]
    fn slit(&self) -> Option<f64> {
        self.inner.slit_f64()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.inner.area()
    }

    fn descriptor<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.descriptor())
    }

    /// `[(family, k, h, v)]` with midpoints of the holonomy enclosures.
    fn candidates(&self) -> PyResult<Vec<(String, i64, f64, f64)>> {
        let cs = surface::enumerate_candidates(&self.inner).map_err(err)?;
        Ok(cs
            .iter()
            .map(|c| {
                (
                    c.id.family.name().to_string(),
                    c.id.k,
                    c.holonomy.h_f64(),
                    c.holonomy.v_f64(),
                )
            })
            .collect())
    }

    /// `[(t, delta, delta_sep, delta_nonsep)]` in reporting units.
    fn systole(&self, times: Vec<f64>) -> PyResult<Vec<SystoleRow>> {
        let tr = surface::systole_trajectory(&self.inner, &times).map_err(err)?;
        Ok(tr
            .samples
            .iter()
            .map(|s| {
                (
                    s.t,
                    s.delta.mid().exp(),
                    s.delta_sep.map(|l| l.mid().exp()),
                    s.delta_nonsep.map(|l| l.mid().exp()),
                )
            })
            .collect())
    }

    #[pyo3(signature = (start, end, step, lambdas = vec![0.1, 0.25], burn_in = 10.0, k2 = 0.0, distance_t0 = 0.0))]
    fn laws<'py>(
        &self,
        py: Python<'py>,
        start: f64,
        end: f64,
        step: f64,
        lambdas: Vec<f64>,
        burn_in: f64,
        k2: f64,
        distance_t0: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        if !(step > 0.0) {
            return Err(PyValueError::new_err("step must be positive"));
        }
        let grid = surface::uniform_grid(start, end, step);
        let tr = surface::systole_trajectory(&self.inner, &grid).map_err(err)?;
        let inp = LawInputs {
            lambdas: &lambdas,
            burn_in,
            divergence: &DivergenceConfig::default(),
            distance: &DistanceBoundConfig {
                k2,
                t0: distance_t0,
            },
        };
        to_py(py, &laws::law_report(&tr, &inp).map_err(err)?)
    }

    fn skew_product(&self, max_steps: u64) -> PyResult<PySkewProduct> {
        Ok(PySkewProduct {
            inner: flow::build_skew_product(&self.inner, max_steps).map_err(err)?,
        })
    }

    /// Dichotomy certificate for the strip complex with edges `cut` and interior `strips`.
    #[pyo3(signature = (n, cut = vec!["slit0".to_string(), "slit1".to_string()], strips = vec![0], t = 0.0, samples = 2000, seed = 0))]
    fn certify<'py>(
        &self,
        py: Python<'py>,
        n: f64,
        cut: Vec<String>,
        strips: Vec<u8>,
        t: f64,
        samples: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let cut: Vec<Kind> = cut.iter().map(|s| parse_kind(s)).collect::<PyResult<_>>()?;
        let g = SlitGeometry::from_surface(&self.inner).map_err(err)?;
        let cfg = DichotomyConfig {
            samples,
            seed,
            ..DichotomyConfig::default()
        };
        let iet = flow::build_skew_product(&self.inner, cfg.step_cap).map_err(err)?;
        let c = Complex::horizontal(&g, t, &cut, &strips).map_err(err)?;
        to_py(py, &cx::dichotomy_check(&iet, &c, n, &cfg).map_err(err)?)
    }
}

#[pyclass(name = "SkewProduct", module = "systole_py", frozen)]
struct PySkewProduct {
    inner: TwoSheetIET,
}

impl PySkewProduct {
    fn state(&self, x: f64, sheet: u8) -> PyResult<OrbitState> {
        if sheet > 1 {
            return Err(PyValueError::new_err("sheet must be 0 or 1"));
        }
        Ok(self.inner.state(x, sheet))
    }
}

#[pymethods]
impl PySkewProduct {
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    /// `(x, sheet)` after `n` steps from `(x, sheet)`.
    fn iterate(&self, x: f64, sheet: u8, n: u64) -> PyResult<(f64, u8)> {
        let st = self.inner.iterate(&self.state(x, sheet)?, n).map_err(err)?;
        Ok((self.inner.to_f64(st.raw), st.sheet))
    }

    fn birkhoff<'py>(
        &self,
        py: Python<'py>,
        x: f64,
        sheet: u8,
        n: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        to_py(
            py,
            &flow::birkhoff_average(&self.inner, &self.state(x, sheet)?, n).map_err(err)?,
        )
    }

    /// Cross-start spread of Birkhoff averages; `starts` is a list of `(x, sheet)`.
    #[pyo3(signature = (starts, n, n_min = 10_000))]
    fn probe<'py>(
        &self,
        py: Python<'py>,
        starts: Vec<(f64, u8)>,
        n: u64,
        n_min: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let sts: Vec<OrbitState> = starts
            .iter()
            .map(|&(x, s)| self.state(x, s))
            .collect::<PyResult<_>>()?;
        let cfg = ProbeConfig {
            n_min,
            ..ProbeConfig::default()
        };
        let rep = flow::ergodicity_probe(&self.inner, &sts, n, &cfg).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("gaps", rep.gaps.clone())?;
        d.set_item("verdict", to_py(py, &rep.verdict)?)?;
        Ok(d.into_any())
    }
}

/// Rows `k, a_k, q_k, beta_lower, beta_upper, good_bound_ok` of the convergent table.
#[pyfunction]
#[pyo3(signature = (alpha, k_max, digits = 20))]
fn convergent_table<'py>(
    py: Python<'py>,
    alpha: AlphaArg,
    k_max: usize,
    digits: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let t = nt::build_table(&alpha.spec()?, k_max, &TableOptions::default()).map_err(err)?;
    to_py(py, &nt::cf_rows(&t, digits))
}

/// `(t_star, length)`: time and value of the minimum of `|g_t (h, v)|`.
#[pyfunction]
fn min_length_time(h: f64, v: f64) -> PyResult<(f64, f64)> {
    let m = systole::min_length_time(&Holonomy::from_f64(h, v).map_err(err)?).map_err(err)?;
    Ok((m.t_star, m.length()))
}

/// Length of `g_t (h, v)`.
#[pyfunction]
fn flow_length(h: f64, v: f64, t: f64) -> PyResult<f64> {
    Ok(
        systole::flow_length(&Holonomy::from_f64(h, v).map_err(err)?, t)
            .mid()
            .exp(),
    )
}

/// `(M, C)` detaching `values` inside `[left, right]`, or `None`.
#[pyfunction]
fn find_detachment(
    values: Vec<f64>,
    n: f64,
    d: usize,
    left: f64,
    right: f64,
) -> PyResult<Option<(f64, f64)>> {
    Ok(cx::find_detachment(&values, n, d, left, right)
        .map_err(err)?
        .map(|x| (x.m, x.c)))
}

#[pymodule]
fn systole_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySurface>()?;
    m.add_class::<PySkewProduct>()?;
    m.add_function(wrap_pyfunction!(convergent_table, m)?)?;
    m.add_function(wrap_pyfunction!(min_length_time, m)?)?;
    m.add_function(wrap_pyfunction!(flow_length, m)?)?;
    m.add_function(wrap_pyfunction!(find_detachment, m)?)?;
    Ok(())
}
