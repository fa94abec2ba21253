//! Smoothing parameter: the width `s` with `rho_{1/s}(L*) = 3/2`.

use serde::{Deserialize, Serialize};

use super::{gaussian_mass, ln_tail_bound, Ensemble, GaussianParam, WeightSum};
use crate::error::{Error, Result};
use crate::lattice::{dual_basis, Basis};

/// Dual-mass level that defines the smoothing parameter.
pub const SMOOTHING_DUAL_MASS: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingEstimate {
    pub eta: f64,
    /// `lo <= eta <= hi`; the dual mass is above the threshold at `lo` and at or below it at `hi`.
    pub bracket: (f64, f64),
    pub dual_mass_at_eta: f64,
    /// Certified bound on `|rho_{1/eta}(L*) - dual_mass_at_eta|`.
    pub dual_mass_error: f64,
}

pub fn smoothing_parameter(basis: &Basis, tol: f64) -> Result<SmoothingEstimate> {
    smoothing_parameter_at(basis, SMOOTHING_DUAL_MASS, tol)
}

/// Bisection on the dual mass, which decreases strictly in `s`.
pub fn smoothing_parameter_at(basis: &Basis, threshold: f64, tol: f64) -> Result<SmoothingEstimate> {
    if !(threshold > 1.0 && threshold.is_finite()) {
        return Err(Error::InvalidParameter(format!("dual-mass threshold must exceed 1, got {threshold}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!("tol must lie in (0, 1), got {tol}")));
    }
    let n = basis.n();
    let dual = dual_basis(basis);
    let zero = vec![0.0; n];
    let coarse = |s: f64| -> Result<f64> { Ok(gaussian_mass(&dual, GaussianParam::new(1.0 / s)?, &zero, 1e-9)?.value) };

    let gs_max = basis.reduction().basis.gram_schmidt().max_norm();
    let eps = threshold - 1.0;
    let mut hi = ((2.0 * n as f64 * (1.0 + 1.0 / eps)).ln() / std::f64::consts::PI).sqrt() * gs_max;
    let mut tries = 0;
    while coarse(hi)? > threshold {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::BracketNotFound(format!("dual mass stays above {threshold} up to s = {hi:e}")));
        }
    }
    let mut lo = 0.8 * hi;
    tries = 0;
    while coarse(lo)? <= threshold {
        hi = lo;
        lo *= 0.8;
        tries += 1;
        if tries > 2000 || lo == 0.0 {
            return Err(Error::BracketNotFound(format!("dual mass stays below {threshold} down to s = {lo:e}")));
        }
    }
    while hi - lo > 1e-3 * lo {
        let mid = 0.5 * (lo + hi);
        if coarse(mid)? > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // one enumeration at the widest dual Gaussian in the bracket serves every finer step
    let ens = Ensemble::build(&dual, 1.0 / lo, &zero, (1e-13f64).ln(), 0.0)?;
    let norms_sq: Vec<f64> = ens.points.iter().map(|p| p.embedding.iter().map(|x| x * x).sum()).collect();
    let dual_gs = dual.reduction().basis.gram_schmidt().norms.clone();
    let radius = ens.radius;
    let sum = |s: f64| -> WeightSum {
        let k = std::f64::consts::PI * s * s;
        WeightSum::of_exponents(n, norms_sq.iter().map(move |&q| k * q))
    };
    let mass = |s: f64| -> f64 { sum(s).value };

    let mut iterations = 0;
    while hi - lo > tol * lo && iterations < 200 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let eta = 0.5 * (lo + hi);
    let m = sum(eta);
    let error = ln_tail_bound(&dual_gs, 1.0 / eta, radius).exp() + m.value * m.rel_err;
    Ok(SmoothingEstimate { eta, bracket: (lo, hi), dual_mass_at_eta: m.value, dual_mass_error: error })
}
