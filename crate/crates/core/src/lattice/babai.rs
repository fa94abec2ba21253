use super::{Basis, LatticeVector, Target};
use crate::error::{Error, Result};

/// Babai's nearest-plane decoder on the basis as given.
///
/// The returned point satisfies `|y - t|^2 <= sum_i |b~_i|^2 / 4`; how good
/// that bound is depends on the basis, so callers normally pass a reduced one.
pub fn babai_nearest_plane(basis: &Basis, t: &Target) -> Result<LatticeVector> {
    let n = basis.n();
    if t.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: t.len() });
    }
    let gso = basis.gram_schmidt();
    let rows = basis.float_rows();
    let mut residual = t.as_slice().to_vec();
    let mut coeffs = vec![0i64; n];
    for i in (0..n).rev() {
        let c = super::dot(&residual, &gso.bstar[i]) / gso.norms[i];
        let z = c.round();
        if z.abs() >= 9.0e15 {
            return Err(Error::Overflow("Babai coefficient"));
        }
        let z = z as i64;
        coeffs[i] = z;
        if z != 0 {
            let zf = z as f64;
            for (r, b) in residual.iter_mut().zip(&rows[i]) {
                *r -= zf * b;
            }
        }
    }
    basis.vector(coeffs)
}

/// `sum_i |b~_i|^2 / 4`, the squared-distance guarantee of nearest-plane on this basis.
pub fn babai_bound_sq(basis: &Basis) -> f64 {
    basis.gram_schmidt().norms.iter().sum::<f64>() / 4.0
}
