use std::sync::Mutex;

use super::field::MatrixField;
use super::potential::SymplecticPotential;
use crate::error::{Error, Result};
use crate::extremal::donaldson_l_fn;
use crate::polytope::{BoundaryMeasure, LabelledPolytope};
use crate::quadrature::{integrate_fn_bulk, AdaptiveOptions};

/// Records the first interior point where a log-determinant is undefined.
struct FirstFailure(Mutex<Option<(Vec<f64>, f64)>>);

impl FirstFailure {
    fn new() -> Self {
        Self(Mutex::new(None))
    }

    fn log_det(&self, x: &[f64], det: Option<f64>) -> f64 {
        match det {
            Some(d) if d > 0.0 => d.ln(),
            other => {
                let mut slot = self.0.lock().unwrap();
                if slot.is_none() {
                    *slot = Some((x.to_vec(), other.unwrap_or(f64::NAN)));
                }
                0.0
            }
        }
    }

    fn check(self) -> Result<()> {
        match self.0.into_inner().unwrap() {
            Some((point, min_eig)) => Err(Error::SingularHessian { point, min_eig }),
            None => Ok(()),
        }
    }
}

/// `F(u) = -∫_P log det(Hess u) dx + L(u)`, by boundary-graded adaptive quadrature.
pub fn mabuchi_energy(
    p: &LabelledPolytope,
    sigma: &BoundaryMeasure,
    u: &SymplecticPotential,
    opts: &AdaptiveOptions,
) -> Result<f64> {
    let fail = FirstFailure::new();
    let log_det = integrate_fn_bulk(p, &|x: &[f64]| fail.log_det(x, u.hessian(x).ok().map(|g| g.determinant())), opts)?;
    fail.check()?;
    let l = donaldson_l_fn(p, sigma, &|x: &[f64]| u.value(x).unwrap_or(f64::NAN), opts)?;
    Ok(-log_det.value + l)
}

/// `N(H) = ∫_P log det H dx`.
pub fn n_functional(p: &LabelledPolytope, h: &MatrixField, opts: &AdaptiveOptions) -> Result<f64> {
    let fail = FirstFailure::new();
    let v = integrate_fn_bulk(p, &|x: &[f64]| fail.log_det(x, h.eval(x).ok().map(|m| m.determinant())), opts)?;
    fail.check()?;
    Ok(v.value)
}
