//! Discrete Gaussian masses over lattices, the smoothing parameter and samplers.
//!
//! Every mass is a finite sum over an enumerated ball plus a certified bound
//! on what the ball leaves out. For any basis with Gram-Schmidt norms
//! `|b~_i|`, any shift `t` and any `0 < a < 1`,
//!
//! ```text
//! rho_s((L - t) \ R*B)  <=  exp(-pi (1 - a) R^2 / s^2) * prod_i rho_{s / (sqrt(a) |b~_i|)}(Z)
//! ```
//!
//! which follows from `rho_w(Z - c) <= rho_w(Z)` applied one Gram-Schmidt
//! coordinate at a time. The bound is evaluated on the LLL-reduced basis and
//! minimized over a grid of `a`.

mod sampler;
mod smoothing;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, Basis, Target};
use crate::limits;

pub use sampler::{
    klein_threshold, sample_exact, sample_klein, sample_klein_with, ExactSampler, SampleSet, SamplerKind,
    DEFAULT_KLEIN_QUALITY, SHARD_SIZE,
};
pub use smoothing::{smoothing_parameter, smoothing_parameter_at, SmoothingEstimate, SMOOTHING_DUAL_MASS};

/// Width parameter `s > 0` of the Gaussian `rho_s(x) = exp(-pi |x|^2 / s^2)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct GaussianParam(f64);

impl GaussianParam {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 && s.is_finite() {
            Ok(GaussianParam(s))
        } else {
            Err(Error::InvalidParameter(format!("Gaussian width must be positive and finite, got {s}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `exp(-pi |x|^2 / s^2)` for a squared norm.
pub fn rho_sq(norm_sq: f64, s: f64) -> f64 {
    (-std::f64::consts::PI * norm_sq / (s * s)).exp()
}

/// Truncated Gaussian mass with a certified bound on the omitted part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassEstimate {
    pub value: f64,
    pub truncation_radius: f64,
    /// Upper bound on `|true mass - value|` (truncation plus summation rounding).
    pub tail_bound: f64,
    pub relative_error_bound: f64,
}

impl MassEstimate {
    pub fn lower(&self) -> f64 {
        (self.value - self.tail_bound).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound
    }
}

/// Upper bound on `rho_w(Z) = sum_k exp(-pi k^2 / w^2)`.
pub fn integer_mass_upper(w: f64) -> f64 {
    if w <= 0.0 {
        return 1.0;
    }
    // integral comparison: sum_{k>=1} exp(-pi k^2/w^2) <= w/2
    let crude = 1.0 + w;
    if w > 1.0e4 {
        return crude;
    }
    let terms = (6.0 * w).ceil() as i64 + 1;
    let w2 = w * w;
    let mut sum = 1.0;
    for k in 1..=terms {
        let kf = k as f64;
        sum += 2.0 * (-std::f64::consts::PI * kf * kf / w2).exp();
    }
    let next = (terms + 1) as f64;
    let first = (-std::f64::consts::PI * next * next / w2).exp();
    let ratio = (-2.0 * std::f64::consts::PI * next / w2).exp();
    let tail = 2.0 * first / (1.0 - ratio);
    // one ulp per term of slack on the direct sum
    (sum * (1.0 + (terms as f64 + 4.0) * f64::EPSILON) + tail).min(crude)
}

const SPLIT_GRID: usize = 49;

fn split_points() -> impl Iterator<Item = f64> {
    (1..=SPLIT_GRID).map(|i| i as f64 / (SPLIT_GRID + 1) as f64)
}

fn ln_product_bound(gs_norms_sq: &[f64], s: f64, a: f64) -> f64 {
    gs_norms_sq.iter().map(|&b| integer_mass_upper(s / (a.sqrt() * b.sqrt())).ln()).sum()
}

/// `ln` of an upper bound on `rho_s((L - t) \ R*B)`, valid for every shift `t`.
pub fn ln_tail_bound(gs_norms_sq: &[f64], s: f64, radius: f64) -> f64 {
    let r2 = radius * radius / (s * s);
    split_points()
        .map(|a| -std::f64::consts::PI * (1.0 - a) * r2 + ln_product_bound(gs_norms_sq, s, a))
        .fold(f64::INFINITY, f64::min)
}

/// Smallest radius (over the split grid) whose tail bound is at most `exp(ln_target)`.
pub fn radius_for_ln_tail(gs_norms_sq: &[f64], s: f64, ln_target: f64) -> f64 {
    split_points()
        .map(|a| {
            let need = ln_product_bound(gs_norms_sq, s, a) - ln_target;
            (s * s * need.max(0.0) / (std::f64::consts::PI * (1.0 - a))).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Upper bound on `rho_s(L - t)` for every shift, from the Gram-Schmidt product.
pub fn ln_mass_upper(basis: &Basis, s: f64) -> f64 {
    let norms = &basis.reduction().basis.gram_schmidt().norms;
    norms.iter().map(|&b| integer_mass_upper(s / b.sqrt()).ln()).sum()
}

/// A lattice point inside an [`Ensemble`] ball.
#[derive(Clone, Debug)]
pub struct EnsemblePoint {
    /// Coefficients with respect to the cached reduced basis.
    pub reduced_coeffs: Vec<i64>,
    pub embedding: Vec<f64>,
    /// `pi |y - center|^2 / s^2`.
    pub exponent: f64,
    /// `rho_s(y - center) = exp(-exponent)`.
    pub weight: f64,
}

/// A compensated sum of Gaussian weights with its rounding bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightSum {
    pub value: f64,
    /// `ln` of the sum, finite even when `value` underflows; `-inf` for an empty sum.
    pub ln_value: f64,
    /// Bound on the relative rounding error of `value`.
    pub rel_err: f64,
}

impl WeightSum {
    /// Sums `exp(-a)` over the given exponents.
    pub fn of_exponents(n: usize, exponents: impl Iterator<Item = f64> + Clone) -> Self {
        let min = exponents.clone().fold(f64::INFINITY, f64::min);
        if min == f64::INFINITY {
            return WeightSum { value: 0.0, ln_value: f64::NEG_INFINITY, rel_err: 0.0 };
        }
        let (mut sum, mut comp, mut shifted, mut weighted_arg, mut count) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0usize);
        for a in exponents {
            let w = (-a).exp();
            let t = sum + w;
            comp += if sum.abs() >= w.abs() { (sum - t) + w } else { (w - t) + sum };
            sum = t;
            let ws = (min - a).exp();
            shifted += ws;
            weighted_arg += ws * a;
            count += 1;
        }
        // each term: the exponent carries (n + 4) ulps, exp adds one more
        let eps = f64::EPSILON;
        let mean_arg = weighted_arg / shifted;
        let rel_err = eps * (3.0 + (n as f64 + 4.0) * mean_arg) + 2.0 * count as f64 * eps * eps;
        WeightSum { value: sum + comp, ln_value: shifted.ln() - min, rel_err }
    }
}

/// All lattice points of a ball around `center` weighted by `rho_s(y - center)`,
/// together with an absolute bound on the Gaussian mass outside the ball.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub center: Vec<f64>,
    pub s: f64,
    pub radius: f64,
    pub points: Vec<EnsemblePoint>,
    /// Absolute upper bound on `sum_{y outside the ball} rho_s(y - center)`.
    pub truncation: f64,
}

impl Ensemble {
    /// Builds the ball with a radius chosen so the omitted mass is below
    /// `exp(ln_abs_tol)`; the radius is never smaller than `min_radius`.
    pub fn build(basis: &Basis, s: f64, center: &[f64], ln_abs_tol: f64, min_radius: f64) -> Result<Self> {
        GaussianParam::new(s)?;
        if center.len() != basis.n() {
            return Err(Error::DimensionMismatch { expected: basis.n(), got: center.len() });
        }
        let norms = &basis.reduction().basis.gram_schmidt().norms;
        let radius = radius_for_ln_tail(norms, s, ln_abs_tol).max(min_radius).max(1e-300);
        let mut points = Vec::new();
        lattice::for_each_in_ball(basis, center, radius, limits::enumeration_cap(), |p| {
            let exponent = std::f64::consts::PI * p.dist_sq / (s * s);
            points.push(EnsemblePoint {
                reduced_coeffs: p.reduced_coeffs.to_vec(),
                embedding: p.embedding.to_vec(),
                exponent,
                weight: (-exponent).exp(),
            });
        })?;
        let truncation = ln_tail_bound(norms, s, radius).exp();
        Ok(Ensemble { center: center.to_vec(), s, radius, points, truncation })
    }

    pub fn mass(&self) -> WeightSum {
        self.mass_where(|_| true)
    }

    /// Mass of the points satisfying `pred`.
    pub fn mass_where(&self, pred: impl Fn(&EnsemblePoint) -> bool) -> WeightSum {
        WeightSum::of_exponents(self.center.len(), self.points.iter().filter(|p| pred(p)).map(|p| p.exponent))
    }

    /// `ln` of the certified bound on the mass outside the ball.
    pub fn ln_truncation(&self, basis: &Basis) -> f64 {
        ln_tail_bound(&basis.reduction().basis.gram_schmidt().norms, self.s, self.radius)
    }
}

/// Certified Gaussian mass `rho_s(L - shift)` to relative accuracy `rel_tol`.
pub fn gaussian_mass(basis: &Basis, s: GaussianParam, shift: &[f64], rel_tol: f64) -> Result<MassEstimate> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidParameter(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    let n = basis.n();
    if shift.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: shift.len() });
    }
    let s = s.get();
    // a lower bound on the mass: the nearest-plane point's own weight
    let (mut ln_low, near) = if shift.iter().all(|&x| x == 0.0) {
        (0.0, 0.0)
    } else {
        let red = &basis.reduction().basis;
        let y = lattice::babai_nearest_plane(red, &Target::new(shift.to_vec())?)?;
        let d2 = lattice::dist_sq(&y.embedding, shift);
        (-std::f64::consts::PI * d2 / (s * s), d2.sqrt())
    };
    let half_ln = (rel_tol / 2.0).ln();
    for _ in 0..8 {
        let ens = Ensemble::build(basis, s, shift, half_ln + ln_low, near * (1.0 + 1e-12))?;
        let sum = ens.mass();
        let value = sum.value;
        if !(value > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Gaussian mass underflows at s = {s:e}; shift too far from the lattice for double precision"
            )));
        }
        if ens.truncation <= rel_tol / 2.0 * value || ln_low >= value.ln() {
            let tail_bound = ens.truncation + value * sum.rel_err;
            return Ok(MassEstimate {
                value,
                truncation_radius: ens.radius,
                tail_bound,
                relative_error_bound: tail_bound / value,
            });
        }
        ln_low = value.ln();
    }
    unreachable!("mass lower bound converges after one refinement")
}

/// Exact tail probability `Pr[|X| >= sqrt(n) s]` for `X ~ D_{L,s}` against `2^-n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BanaszczykReport {
    pub n: usize,
    pub s: f64,
    pub probability: f64,
    /// Certified interval for the probability.
    pub probability_lo: f64,
    pub probability_hi: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn banaszczyk_check(basis: &Basis, s: GaussianParam) -> Result<BanaszczykReport> {
    let n = basis.n();
    let sv = s.get();
    let cut_sq = n as f64 * sv * sv;
    let ens = Ensemble::build(basis, sv, &vec![0.0; n], (1e-15f64).ln(), cut_sq.sqrt())?;
    let total = ens.mass();
    let inside = ens.mass_where(|p| lattice::norm_sq(&p.embedding) < cut_sq);
    let (v, dv) = (total.value, total.rel_err);
    let (i, di) = (inside.value, inside.rel_err);
    // true total in [V(1-dv), V(1+dv) + T]; the inside mass is fully enumerated
    let probability = 1.0 - i / v;
    let probability_lo = (1.0 - i * (1.0 + di) / (v * (1.0 - dv))).max(0.0);
    let probability_hi = (1.0 - i * (1.0 - di) / (v * (1.0 + dv) + ens.truncation)).min(1.0);
    let bound = 0.5f64.powi(n as i32);
    Ok(BanaszczykReport { n, s: sv, probability, probability_lo, probability_hi, bound, pass: probability_hi <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{random_basis, BasisStyle};
    use crate::rational;

    // Independent oracle: direct series over Z, summed far past double precision.
    fn series_z(s: f64, c: f64) -> f64 {
        (-400i64..=400).map(|k| rho_sq((k as f64 - c).powi(2), s)).sum()
    }

    #[test]
    fn integer_lattice_masses_match_series() {
        let z = Basis::identity(1);
        let m0 = gaussian_mass(&z, GaussianParam::new(1.0).unwrap(), &[0.0], 1e-12).unwrap();
        assert!((m0.value - 1.0864348112133080).abs() < 1e-12);
        assert!((m0.value - series_z(1.0, 0.0)).abs() <= m0.tail_bound + 1e-15);
        let m5 = gaussian_mass(&z, GaussianParam::new(1.0).unwrap(), &[0.5], 1e-12).unwrap();
        assert!((m5.value - 0.9135791381561168).abs() < 1e-12);
        assert!(m5.tail_bound <= 1e-12 * m5.value);
    }

    #[test]
    fn mass_factorizes_over_products() {
        let s = GaussianParam::new(1.3).unwrap();
        let m1 = gaussian_mass(&Basis::identity(1), s, &[0.2], 1e-13).unwrap();
        let m1b = gaussian_mass(&Basis::identity(1), s, &[-0.7], 1e-13).unwrap();
        let m2 = gaussian_mass(&Basis::identity(2), s, &[0.2, -0.7], 1e-13).unwrap();
        assert!((m2.value - m1.value * m1b.value).abs() < 1e-11 * m2.value);
    }

    #[test]
    fn tail_bound_dominates_true_tail() {
        // Z at s = 1: the exact mass outside radius R is a short series
        let norms = [1.0];
        for &r in &[0.5, 1.5, 2.5, 3.5] {
            let bound = ln_tail_bound(&norms, 1.0, r).exp();
            let truth: f64 = (-40i64..=40).filter(|k| (*k as f64).abs() > r).map(|k| rho_sq((k * k) as f64, 1.0)).sum();
            assert!(bound >= truth, "radius {r}: bound {bound} < tail {truth}");
        }
        let r = radius_for_ln_tail(&norms, 1.0, (1e-20f64).ln());
        assert!(ln_tail_bound(&norms, 1.0, r) <= (1e-20f64).ln() + 1e-9);
    }

    #[test]
    fn integer_mass_upper_is_an_upper_bound() {
        for &w in &[0.1, 0.5, 1.0, 2.0, 7.5, 30.0] {
            assert!(integer_mass_upper(w) >= series_z(w, 0.0) * (1.0 - 1e-15));
            assert!(integer_mass_upper(w) <= series_z(w, 0.0) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn banaszczyk_on_small_lattices() {
        let r = banaszczyk_check(&Basis::identity(1), GaussianParam::new(1.0).unwrap()).unwrap();
        assert!((r.probability - 0.0795582121644090).abs() < 1e-12);
        assert!(r.pass);
        let r2 = banaszczyk_check(&Basis::identity(2), GaussianParam::new(1.0).unwrap()).unwrap();
        assert!(r2.probability_hi <= 0.25 && r2.pass);
        let b = random_basis(2, &BasisStyle::UniformInteger { bound: 5 }, 4).unwrap();
        let p1 = banaszczyk_check(&b, GaussianParam::new(2.0).unwrap()).unwrap();
        let p2 = banaszczyk_check(&b.scaled(&rational::int(3)).unwrap(), GaussianParam::new(6.0).unwrap()).unwrap();
        assert!((p1.probability - p2.probability).abs() < 1e-12);
    }

    #[test]
    fn shift_ratio_sandwich_on_random_shifts() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(9);
        for seed in 0..6 {
            let n = 1 + seed as usize % 3;
            let b = random_basis(n, &BasisStyle::UniformInteger { bound: 5 }, seed).unwrap();
            let eta = smoothing_parameter(&b, 1e-10).unwrap();
            let s = GaussianParam::new(eta.bracket.1).unwrap();
            let base = gaussian_mass(&b, s, &vec![0.0; n], 1e-12).unwrap();
            for _ in 0..10 {
                let t: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                let m = gaussian_mass(&b, s, &t, 1e-12).unwrap();
                let ratio = m.value / base.value;
                let eps = m.relative_error_bound + base.relative_error_bound;
                assert!(ratio >= 1.0 / 3.0 - eps && ratio <= 1.0 + eps, "ratio {ratio}");
            }
        }
    }
}
