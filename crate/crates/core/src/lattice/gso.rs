use num_traits::Zero;

use super::Basis;
use crate::rational::{self, Rational};

/// Exact Gram-Schmidt data: `b_i = b~_i + sum_{j<i} mu_ij b~_j`.
#[derive(Clone, Debug)]
pub(crate) struct ExactGso {
    pub bstar: Vec<Vec<Rational>>,
    pub mu: Vec<Vec<Rational>>,
    pub bsq: Vec<Rational>,
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

impl ExactGso {
    pub fn compute(rows: &[Vec<Rational>]) -> Self {
        let n = rows.len();
        let mut bstar: Vec<Vec<Rational>> = Vec::with_capacity(n);
        let mut mu = vec![vec![Rational::zero(); n]; n];
        let mut bsq = Vec::with_capacity(n);
        for i in 0..n {
            let mut v = rows[i].clone();
            for j in 0..i {
                let m = dot(&rows[i], &bstar[j]) / &bsq[j];
                for (vk, bk) in v.iter_mut().zip(&bstar[j]) {
                    *vk -= &m * bk;
                }
                mu[i][j] = m;
            }
            bsq.push(dot(&v, &v));
            bstar.push(v);
        }
        ExactGso { bstar, mu, bsq }
    }
}

/// Floating-point view of the Gram-Schmidt orthogonalization.
///
/// `mu` is strictly lower triangular (the unit diagonal is implicit) and
/// `norms[i]` holds `|b~_i|^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramSchmidt {
    pub bstar: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
}

impl GramSchmidt {
    pub(crate) fn from_exact(e: &ExactGso) -> Self {
        let conv = |m: &Vec<Vec<Rational>>| m.iter().map(|r| r.iter().map(rational::to_f64).collect()).collect();
        GramSchmidt { bstar: conv(&e.bstar), mu: conv(&e.mu), norms: e.bsq.iter().map(rational::to_f64).collect() }
    }

    pub fn n(&self) -> usize {
        self.norms.len()
    }

    pub fn max_norm(&self) -> f64 {
        self.norms.iter().cloned().fold(0.0, f64::max).sqrt()
    }

    pub fn min_norm(&self) -> f64 {
        self.norms.iter().cloned().fold(f64::INFINITY, f64::min).sqrt()
    }

    /// `max_ij |B - (mu + I) B~|_ij`.
    pub fn reconstruction_residual(&self, rows: &[Vec<f64>]) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for k in 0..n {
                let mut v = self.bstar[i][k];
                for j in 0..i {
                    v += self.mu[i][j] * self.bstar[j][k];
                }
                worst = worst.max((rows[i][k] - v).abs());
            }
        }
        worst
    }

    /// Largest `|<b~_i, b~_j>| / (|b~_i| |b~_j|)` over distinct pairs.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                let ip = super::dot(&self.bstar[i], &self.bstar[j]);
                worst = worst.max(ip.abs() / (self.norms[i] * self.norms[j]).sqrt());
            }
        }
        worst
    }
}

/// Gram-Schmidt orthogonalization of the basis rows (computed exactly, reported in `f64`).
pub fn gram_schmidt(basis: &Basis) -> GramSchmidt {
    basis.gram_schmidt().clone()
}
