//! Fincke-Pohst enumeration of lattice points in a ball.
//!
//! Enumeration always runs on the cached LLL-reduced basis; callers that need
//! coefficients in the original basis map them through [`super::Reduction`].

use super::{dist_sq, Basis, LatticeVector};
use crate::error::{Error, Result};
use crate::limits;

/// One enumerated point, handed to the visitor of [`for_each_in_ball`].
pub struct BallPoint<'a> {
    /// Coefficients with respect to `basis.reduction().basis`.
    pub reduced_coeffs: &'a [i64],
    pub embedding: &'a [f64],
    pub dist_sq: f64,
}

struct Walk<'a, F> {
    rows: &'a [Vec<f64>],
    mu: &'a [Vec<f64>],
    norms: &'a [f64],
    cstar: Vec<f64>,
    center: &'a [f64],
    radius_sq: f64,
    cap: usize,
    radius: f64,
    z: Vec<i64>,
    emb: Vec<Vec<f64>>,
    found: usize,
    nodes: usize,
    visit: F,
}

impl<F: FnMut(&BallPoint)> Walk<'_, F> {
    fn level(&mut self, j: usize, rem: f64) -> Result<()> {
        let n = self.z.len();
        let mut c = self.cstar[j];
        for i in (j + 1)..n {
            c -= self.z[i] as f64 * self.mu[i][j];
        }
        let hw = (rem.max(0.0) / self.norms[j]).sqrt();
        let lo = (c - hw).ceil();
        let hi = (c + hw).floor();
        if hi < lo {
            return Ok(());
        }
        if hi - lo > 1.0e9 || lo.abs() > 9.0e15 || hi.abs() > 9.0e15 {
            return Err(Error::EnumerationBudget { cap: self.cap, radius: self.radius });
        }
        let (lo, hi) = (lo as i64, hi as i64);
        for zj in lo..=hi {
            self.nodes += 1;
            if self.nodes > self.cap.saturating_mul(16).max(1 << 20) {
                return Err(Error::EnumerationBudget { cap: self.cap, radius: self.radius });
            }
            let d = zj as f64 - c;
            let contrib = d * d * self.norms[j];
            if contrib > rem {
                continue;
            }
            self.z[j] = zj;
            let (upper, lower) = self.emb.split_at_mut(j + 1);
            let cur = &mut upper[j];
            cur.copy_from_slice(&lower[0]);
            if zj != 0 {
                let zf = zj as f64;
                for (e, b) in cur.iter_mut().zip(&self.rows[j]) {
                    *e += zf * b;
                }
            }
            if j == 0 {
                let ds = dist_sq(&self.emb[0], self.center);
                if ds <= self.radius_sq {
                    self.found += 1;
                    if self.found > self.cap {
                        return Err(Error::EnumerationBudget { cap: self.cap, radius: self.radius });
                    }
                    (self.visit)(&BallPoint { reduced_coeffs: &self.z, embedding: &self.emb[0], dist_sq: ds });
                }
            } else {
                self.level(j - 1, rem - contrib)?;
            }
        }
        self.z[j] = 0;
        Ok(())
    }
}

fn check_ball(basis: &Basis, center: &[f64], radius: f64) -> Result<()> {
    if center.len() != basis.n() {
        return Err(Error::DimensionMismatch { expected: basis.n(), got: center.len() });
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive and finite, got {radius}")));
    }
    if center.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("center has non-finite entries".into()));
    }
    Ok(())
}

/// Visits every lattice point `y` with `|y - center| <= radius`; returns the count.
///
/// Visiting order is deterministic for a given basis. Fails once more than
/// `cap` points have been found.
pub fn for_each_in_ball<F: FnMut(&BallPoint)>(
    basis: &Basis,
    center: &[f64],
    radius: f64,
    cap: usize,
    visit: F,
) -> Result<usize> {
    check_ball(basis, center, radius)?;
    let reduced = &basis.reduction().basis;
    let gso = reduced.gram_schmidt();
    let n = basis.n();
    let cstar = (0..n).map(|j| super::dot(center, &gso.bstar[j]) / gso.norms[j]).collect();
    let radius_sq = radius * radius;
    let mut walk = Walk {
        rows: reduced.float_rows(),
        mu: &gso.mu,
        norms: &gso.norms,
        cstar,
        center,
        radius_sq,
        cap,
        radius,
        z: vec![0; n],
        emb: vec![vec![0.0; n]; n + 1],
        found: 0,
        nodes: 0,
        visit,
    };
    // slack so that rounding in the Gram-Schmidt coordinates never prunes a boundary point;
    // membership is decided on the embedding distance
    walk.level(n - 1, radius_sq * (1.0 + 1e-9) + 1e-300)?;
    Ok(walk.found)
}

/// All lattice points within `radius` of `center`, sorted by coefficient vector.
pub fn enumerate_ball(basis: &Basis, center: &[f64], radius: f64) -> Result<Vec<LatticeVector>> {
    enumerate_ball_capped(basis, center, radius, limits::enumeration_cap())
}

pub fn enumerate_ball_capped(basis: &Basis, center: &[f64], radius: f64, cap: usize) -> Result<Vec<LatticeVector>> {
    let red = basis.reduction();
    let mut coeffs: Vec<Vec<i64>> = Vec::new();
    let mut failure = None;
    for_each_in_ball(basis, center, radius, cap, |p| {
        if failure.is_some() {
            return;
        }
        match red.to_original(p.reduced_coeffs) {
            Ok(z) => coeffs.push(z),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    coeffs.sort_unstable();
    coeffs.into_iter().map(|z| basis.vector(z)).collect()
}
