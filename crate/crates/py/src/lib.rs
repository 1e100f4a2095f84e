//! Python bindings: lattice construction, Kloosterman sums, and the
//! identity/oracle entry points. Complex results are returned as
//! (re, im) decimal strings so no precision is lost at the boundary.

use kloost::identity::IdentityEngine;
use kloost::kloosterman::KloostermanEvaluator;
use kloost::lattice::{DiscElement, EvenLattice};
use kloost::numeric::Ctx;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rug::Rational;
use std::str::FromStr;

fn err(e: kloost::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_rational(s: &str) -> PyResult<Rational> {
    Rational::from_str(s.trim()).map_err(|_| PyValueError::new_err(format!("bad rational '{s}'")))
}

fn parse_coords(coords: Vec<String>) -> PyResult<Vec<Rational>> {
    coords.iter().map(|s| parse_rational(s)).collect()
}

#[pyclass]
struct Lattice {
    inner: EvenLattice,
}

impl Lattice {
    fn element(&self, coords: Vec<String>) -> PyResult<DiscElement> {
        self.inner
            .discriminant_group()
            .element(parse_coords(coords)?)
            .map_err(err)
    }
}

#[pymethods]
impl Lattice {
    #[new]
    fn new(gram: Vec<Vec<i64>>) -> PyResult<Self> {
        Ok(Lattice {
            inner: EvenLattice::new(gram).map_err(err)?,
        })
    }

    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn det(&self) -> i64 {
        self.inner.det()
    }

    fn signature(&self) -> (u32, u32) {
        self.inner.signature()
    }

    /// Coordinates of the discriminant-group elements as rational strings.
    fn elements(&self) -> Vec<Vec<String>> {
        self.inner
            .discriminant_group()
            .elements()
            .iter()
            .map(|e| e.coords().iter().map(|r| r.to_string()).collect())
            .collect()
    }

    /// S_{alpha,beta}(m, n, c) as (re, im) decimal strings. The weight k
    /// (a rational string such as "1/2") defaults to the natural weight.
    #[pyo3(signature = (alpha, beta, m, n, c, k=None, prec=192))]
    #[allow(clippy::too_many_arguments)]
    fn kloosterman_sum(
        &self,
        alpha: Vec<String>,
        beta: Vec<String>,
        m: i64,
        n: i64,
        c: i64,
        k: Option<String>,
        prec: u32,
    ) -> PyResult<(String, String)> {
        let ev = KloostermanEvaluator::new(self.inner.discriminant_group(), Ctx::new(prec));
        let a = self.element(alpha)?;
        let b = self.element(beta)?;
        let weight = match k {
            Some(s) => parse_rational(&s)?,
            None => ev.natural_weight(),
        };
        let s = ev.sum(&a, &b, m, n, c, &weight).map_err(err)?;
        Ok(s.to_decimal_strings())
    }

    /// Residual of the sparse-sum identity at one parameter point.
    #[pyo3(signature = (alpha, beta, m, n, c, v, prec=192))]
    #[allow(clippy::too_many_arguments)]
    fn verify_identity(
        &self,
        alpha: Vec<String>,
        beta: Vec<String>,
        m: i64,
        n: i64,
        c: i64,
        v: i64,
        prec: u32,
    ) -> PyResult<f64> {
        let engine = IdentityEngine::new(self.inner.discriminant_group(), Ctx::new(prec));
        let a = self.element(alpha)?;
        let b = self.element(beta)?;
        let check = engine.verify_identity(&a, &b, m, n, c, v).map_err(err)?;
        Ok(check.residual.to_f64())
    }

    /// The sparse side's exact weights as (l, weight-string) pairs.
    fn ell_weights(
        &self,
        alpha: Vec<String>,
        beta: Vec<String>,
        m: i64,
        n: i64,
        c: i64,
    ) -> PyResult<Vec<(i64, String)>> {
        let engine = IdentityEngine::new(self.inner.discriminant_group(), Ctx::default());
        let a = self.element(alpha)?;
        let b = self.element(beta)?;
        Ok(engine
            .ell_weights(&a, &b, m, n, c)
            .map_err(err)?
            .into_iter()
            .map(|(l, w)| (l, w.to_string()))
            .collect())
    }
}

/// Residual of Kohnen's plus-space identity at one parameter point.
#[pyfunction]
#[pyo3(signature = (m, n, c, v, prec=192))]
fn verify_kohnen(m: i64, n: i64, c: i64, v: i64, prec: u32) -> PyResult<f64> {
    let check = kloost::identity::verify_kohnen(m, n, c, v, &Ctx::new(prec)).map_err(err)?;
    Ok(check.residual.to_f64())
}

/// Residual of the eta-multiplier identity at one parameter point.
#[pyfunction]
#[pyo3(signature = (m, n, c, v, prec=192))]
fn verify_andersen(m: i64, n: i64, c: i64, v: i64, prec: u32) -> PyResult<f64> {
    let check = kloost::identity::verify_andersen(m, n, c, v, &Ctx::new(prec)).map_err(err)?;
    Ok(check.residual.to_f64())
}

/// Classical S(m, n, c) as (re, im) decimal strings.
#[pyfunction]
#[pyo3(signature = (m, n, c, prec=192))]
fn classical_kloosterman(m: i64, n: i64, c: i64, prec: u32) -> PyResult<(String, String)> {
    let s = kloost::bounds::classical_kloosterman(m, n, c, &Ctx::new(prec)).map_err(err)?;
    Ok(s.to_decimal_strings())
}

#[pymodule]
fn kloost_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Lattice>()?;
    m.add_function(wrap_pyfunction!(verify_kohnen, m)?)?;
    m.add_function(wrap_pyfunction!(verify_andersen, m)?)?;
    m.add_function(wrap_pyfunction!(classical_kloosterman, m)?)?;
    Ok(())
}
