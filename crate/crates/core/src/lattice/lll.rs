//! Exact-arithmetic LLL (incremental Gram-Schmidt updates over the rationals).

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::gso::ExactGso;
use super::Basis;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

pub const DEFAULT_LLL_DELTA: f64 = 0.99;

pub(crate) fn default_delta() -> Rational {
    Rational::new(BigInt::from(99), BigInt::from(100))
}

/// LLL-reduces `basis` with parameter `delta` in `(1/4, 1)`.
pub fn lll_reduce(basis: &Basis, delta: f64) -> Result<Basis> {
    lll_reduce_with_transform(basis, delta).map(|(b, _)| b)
}

/// As [`lll_reduce`], also returning the unimodular `U` with `reduced = U * basis`.
pub fn lll_reduce_with_transform(basis: &Basis, delta: f64) -> Result<(Basis, Vec<Vec<i64>>)> {
    if !(delta > 0.25 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("LLL delta must lie in (1/4, 1), got {delta}")));
    }
    let d = rational::from_f64(delta)?;
    let (reduced, u) = reduce_exact(basis, &d);
    let u = u
        .iter()
        .map(|r| r.iter().map(|v| v.to_i64().ok_or(Error::Overflow("LLL transform"))).collect())
        .collect::<Result<Vec<Vec<i64>>>>()?;
    Ok((reduced, u))
}

pub(crate) fn reduce_exact(basis: &Basis, delta: &Rational) -> (Basis, Vec<Vec<BigInt>>) {
    let n = basis.n();
    let mut b: Vec<Vec<Rational>> = basis.rows().to_vec();
    let mut u: Vec<Vec<BigInt>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect();
    let ExactGso { mut mu, bsq: mut bb, .. } = basis.exact_gso().clone();
    let half = Rational::new(BigInt::one(), BigInt::from(2));

    let size_reduce = |k: usize, l: usize, b: &mut Vec<Vec<Rational>>, u: &mut Vec<Vec<BigInt>>, mu: &mut Vec<Vec<Rational>>| {
        if mu[k][l].abs() <= half {
            return;
        }
        let q = rational::round(&mu[k][l]);
        let qr = Rational::from_integer(q.clone());
        for c in 0..n {
            let v = &qr * &b[l][c];
            b[k][c] -= v;
            let w = &q * &u[l][c];
            u[k][c] -= w;
        }
        mu[k][l] -= &qr;
        for i in 0..l {
            let v = &qr * &mu[l][i];
            mu[k][i] -= v;
        }
    };

    let mut k = 1;
    while k < n {
        size_reduce(k, k - 1, &mut b, &mut u, &mut mu);
        let lovasz_rhs = (delta - &mu[k][k - 1] * &mu[k][k - 1]) * &bb[k - 1];
        if bb[k] < lovasz_rhs {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            for j in 0..k - 1 {
                let tmp = mu[k][j].clone();
                mu[k][j] = mu[k - 1][j].clone();
                mu[k - 1][j] = tmp;
            }
            let m = mu[k][k - 1].clone();
            let big = &bb[k] + &m * &m * &bb[k - 1];
            mu[k][k - 1] = &m * &bb[k - 1] / &big;
            bb[k] = &bb[k - 1] * &bb[k] / &big;
            bb[k - 1] = big;
            for i in (k + 1)..n {
                let t = mu[i][k].clone();
                mu[i][k] = &mu[i][k - 1] - &m * &t;
                mu[i][k - 1] = t + &mu[k][k - 1] * &mu[i][k];
            }
            k = (k - 1).max(1);
        } else {
            for l in (0..k - 1).rev() {
                size_reduce(k, l, &mut b, &mut u, &mut mu);
            }
            k += 1;
        }
    }
    let reduced = Basis::new_unchecked(b, format!("lll({})", basis.provenance()), basis.seed());
    (reduced, u)
}
