//! Exact checks of the inequalities behind the decoder's analysis.
//!
//! Each probability is a ratio of truncated Gaussian masses. The truncation
//! and rounding bounds are carried through the ratio as an interval, and a
//! check passes only when the inequality holds at the adverse end of that
//! interval. Very small probabilities are compared in the log domain.

mod corpus;
mod net;
mod union;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gaussian::{gaussian_mass, radius_for_ln_tail, Ensemble, EnsemblePoint, GaussianParam, WeightSum};
use crate::lattice::{self, Basis};

pub use corpus::{Corpus, CorpusEntry, CorpusKind};
pub use net::{build_eps_net, probe_set, EpsNet};
pub use union::{union_bound_experiment, union_bound_experiment_with, UnionBoundReport, DEFAULT_SIMULATED_N};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
}

/// One checked inequality `lhs <relation> bound`.
///
/// `margin` is the signed slack in the direction of the relation and
/// `certified_error` the distance from `lhs` to the adverse end of its
/// certified interval; `pass` is `margin >= certified_error` (strictly
/// greater for strict relations).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub check: String,
    pub relation: Relation,
    pub lhs: f64,
    pub bound: f64,
    pub margin: f64,
    pub certified_error: f64,
    pub pass: bool,
    pub context: Value,
}

fn finite(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(f64::MIN, f64::MAX)
    }
}

impl BoundReport {
    pub fn new(check: &str, relation: Relation, lhs: f64, bound: f64, certified_error: f64, context: Value) -> Self {
        let (lo, hi) = (lhs - certified_error, lhs + certified_error);
        Self::from_interval(check, relation, lhs, lo, hi, bound, context)
    }

    /// `lhs` with its certified interval `[lo, hi]`.
    pub fn from_interval(check: &str, relation: Relation, lhs: f64, lo: f64, hi: f64, bound: f64, context: Value) -> Self {
        let upper = matches!(relation, Relation::Le | Relation::Lt);
        let adverse = if upper { hi } else { lo };
        let lhs = if lhs.is_finite() { lhs } else { adverse };
        let pass = match relation {
            Relation::Le => adverse <= bound,
            Relation::Lt => adverse < bound,
            Relation::Ge => adverse >= bound,
            Relation::Gt => adverse > bound,
        };
        let (margin, err) = if upper { (bound - lhs, adverse - lhs) } else { (lhs - bound, lhs - adverse) };
        BoundReport {
            check: check.to_string(),
            relation,
            lhs: finite(lhs),
            bound: finite(bound),
            margin: finite(margin),
            certified_error: finite(err.max(0.0)),
            pass,
            context,
        }
    }
}

/// A probability with its certified interval, also in log form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probability {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub ln_value: f64,
    pub ln_lo: f64,
    pub ln_hi: f64,
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `D_{L,s}` represented by a centered ball plus a bound on the mass outside it.
#[derive(Clone, Debug)]
pub struct Law {
    pub s: f64,
    ens: Ensemble,
    total: WeightSum,
    ln_truncation: f64,
}

impl Law {
    pub fn new(basis: &Basis, s: f64, ln_abs_tol: f64, min_radius: f64) -> Result<Self> {
        let ens = Ensemble::build(basis, s, &vec![0.0; basis.n()], ln_abs_tol, min_radius)?;
        let total = ens.mass();
        let ln_truncation = ens.ln_truncation(basis);
        Ok(Law { s, ens, total, ln_truncation })
    }

    /// Ball large enough for projection events up to `r0_max`, for events
    /// near the unit sphere, and with omitted mass far below `exp(-pi r0_max^2 / s^2)`.
    pub fn for_tails(basis: &Basis, s: f64, r0_max: f64) -> Result<Self> {
        let ln_tol = (1e-12f64).ln().min(-std::f64::consts::PI * r0_max * r0_max / (s * s) - 10.0);
        let gs: f64 = basis.reduction().basis.gram_schmidt().norms.iter().sum();
        Self::new(basis, s, ln_tol, r0_max + gs.sqrt() + 2.0)
    }

    pub fn support_size(&self) -> usize {
        self.ens.points.len()
    }

    pub fn radius(&self) -> f64 {
        self.ens.radius
    }

    /// `Pr[pred(X)]` for `X ~ D_{L,s}`.
    pub fn probability(&self, pred: impl Fn(&EnsemblePoint) -> bool) -> Probability {
        let e = self.ens.mass_where(pred);
        let (ln_v, dv) = (self.total.ln_value, self.total.rel_err);
        let ln_t = self.ln_truncation;
        let ln_value = e.ln_value - ln_v;
        let ln_lo = e.ln_value + (-e.rel_err).ln_1p() - ln_add(ln_v + dv.ln_1p(), ln_t);
        let ln_hi = (ln_add(e.ln_value + e.rel_err.ln_1p(), ln_t) - ln_v - (-dv).ln_1p()).min(0.0);
        Probability { value: ln_value.exp(), lo: ln_lo.exp(), hi: ln_hi.exp(), ln_value, ln_lo, ln_hi }
    }
}

/// Parameters of one projection / moment-generating-function check.
#[derive(Clone, Debug)]
pub struct TailCheckSpec {
    pub basis: Basis,
    pub s: f64,
    pub v: Vec<f64>,
    pub r0: f64,
    pub r: f64,
    pub beta: f64,
    /// Upper end of the smoothing bracket of `basis`.
    pub eta_hi: f64,
}

impl TailCheckSpec {
    pub fn new(basis: Basis, s: f64, v: Vec<f64>, r0: f64, r: f64, beta: f64, eta_hi: f64) -> Result<Self> {
        if v.len() != basis.n() {
            return Err(Error::DimensionMismatch { expected: basis.n(), got: v.len() });
        }
        if (lattice::norm_sq(&v).sqrt() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("direction must be a unit vector".into()));
        }
        GaussianParam::new(s)?;
        if !(r0 > 0.0) {
            return Err(Error::InvalidParameter(format!("r0 must be positive, got {r0}")));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidParameter(format!("r must lie in (0, 1), got {r}")));
        }
        Ok(TailCheckSpec { basis, s, v, r0, r, beta, eta_hi })
    }

    pub fn above_smoothing(&self) -> bool {
        self.s >= self.eta_hi
    }

    fn context(&self) -> Value {
        json!({
            "basis_hash": self.basis.hash(),
            "n": self.basis.n(),
            "s": self.s,
            "s_over_eta": self.s / self.eta_hi,
            "v": self.v,
            "r0": self.r0,
            "r": self.r,
            "beta": self.beta,
        })
    }
}

fn mass_interval(basis: &Basis, s: f64, shift: &[f64]) -> Result<(f64, f64, f64)> {
    let m = gaussian_mass(basis, GaussianParam::new(s)?, shift, 1e-15)?;
    Ok((m.value, m.lower(), m.upper()))
}

/// `rho_s(L - t) / rho_s(L)` with its certified interval; exactly 1 when `t` is in `L`.
pub fn shifted_mass_ratio(basis: &Basis, s: f64, shift: &[f64]) -> Result<(f64, f64, f64)> {
    if basis.contains_exact(shift)?.is_some() {
        return Ok((1.0, 1.0, 1.0));
    }
    let (v0, l0, h0) = mass_interval(basis, s, &vec![0.0; basis.n()])?;
    let (v1, l1, h1) = mass_interval(basis, s, shift)?;
    Ok((v1 / v0, l1 / h0, h1 / l0))
}

/// `1/3 <= rho_s(L - t) / rho_s(L) <= 1` for every shift; two reports per shift.
pub fn smoothing_ratio_check(basis: &Basis, s: f64, shifts: &[Vec<f64>]) -> Result<Vec<BoundReport>> {
    let n = basis.n();
    let zero = vec![0.0; n];
    let (v0, l0, h0) = mass_interval(basis, s, &zero)?;
    let mut out = Vec::with_capacity(2 * shifts.len());
    for t in shifts {
        let (ratio, lo, hi) = if basis.contains_exact(t)?.is_some() {
            (1.0, 1.0, 1.0)
        } else {
            let (v1, l1, h1) = mass_interval(basis, s, t)?;
            (v1 / v0, l1 / h0, h1 / l0)
        };
        let ctx = json!({ "basis_hash": basis.hash(), "n": n, "s": s, "shift": t });
        out.push(BoundReport::from_interval("shift-ratio-lower", Relation::Ge, ratio, lo, hi, 1.0 / 3.0, ctx.clone()));
        out.push(BoundReport::from_interval("shift-ratio-upper", Relation::Le, ratio, lo, hi, 1.0, ctx));
    }
    Ok(out)
}

/// Result of [`mgf_sandwich_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MgfReport {
    pub lower: BoundReport,
    pub upper: BoundReport,
    /// Relative disagreement of the two computation paths, against `1e-9`.
    pub agreement: BoundReport,
    pub direct: f64,
    pub via_masses: f64,
}

/// `1/3 <= exp(-pi beta^2) E[exp(2 pi beta <X, v> / s)] <= 1` for `X ~ D_{L,s}`.
///
/// The expectation is summed directly over an enumerated ball and, separately,
/// obtained as `rho_s(L - s beta v) / rho_s(L)`.
pub fn mgf_sandwich_check(spec: &TailCheckSpec) -> Result<MgfReport> {
    let basis = &spec.basis;
    let s = spec.s;
    let n = basis.n();
    let shift: Vec<f64> = spec.v.iter().map(|x| s * spec.beta * x).collect();
    let (via, lo, hi) = shifted_mass_ratio(basis, s, &shift)?;

    let norms = &basis.reduction().basis.gram_schmidt().norms;
    let shift_len = lattice::norm_sq(&shift).sqrt();
    let ln_tol = (1e-15f64).ln() + via.ln().min(0.0);
    let r = radius_for_ln_tail(norms, s, ln_tol);
    let ens = Ensemble::build(basis, s, &vec![0.0; n], ln_tol, r + shift_len)?;
    let pi = std::f64::consts::PI;
    let b = spec.beta;
    let num = WeightSum::of_exponents(
        n,
        ens.points.iter().map(|p| {
            let proj = lattice::dot(&p.embedding, &spec.v);
            (p.exponent - 2.0 * pi * b * proj / s + pi * b * b).max(0.0)
        }),
    );
    let den = ens.mass();
    let direct = num.value / den.value;

    let ctx = spec.context();
    let rel = ((direct - via) / via).abs();
    Ok(MgfReport {
        lower: BoundReport::from_interval("mgf-lower", Relation::Ge, via, lo, hi, 1.0 / 3.0, ctx.clone()),
        upper: BoundReport::from_interval("mgf-upper", Relation::Le, via, lo, hi, 1.0, ctx.clone()),
        agreement: BoundReport::new("mgf-paths-agree", Relation::Le, rel, 1e-9, 0.0, ctx),
        direct,
        via_masses: via,
    })
}

/// `Pr[<X, v> >= r0]` against `exp(-pi r0^2 / s^2)` and, above smoothing,
/// against `exp(-pi (r0/s + 2)^2)`; both compared as logarithms.
pub fn projection_tail_check(spec: &TailCheckSpec) -> Result<(BoundReport, Option<BoundReport>)> {
    let law = Law::for_tails(&spec.basis, spec.s, spec.r0)?;
    Ok(projection_tail_on(&law, &spec.v, spec.r0, spec.above_smoothing(), spec.context()))
}

pub(crate) fn projection_tail_on(law: &Law, v: &[f64], r0: f64, lower: bool, ctx: Value) -> (BoundReport, Option<BoundReport>) {
    let s = law.s;
    let p = law.probability(|pt| lattice::dot(&pt.embedding, v) >= r0);
    let pi = std::f64::consts::PI;
    let upper_bound = -pi * r0 * r0 / (s * s);
    let up = BoundReport::from_interval("projection-tail-upper-ln", Relation::Le, p.ln_value, p.ln_lo, p.ln_hi, upper_bound, ctx.clone());
    let low = lower.then(|| {
        let b = -pi * (r0 / s + 2.0).powi(2);
        BoundReport::from_interval("projection-tail-lower-ln", Relation::Gt, p.ln_value, p.ln_lo, p.ln_hi, b, ctx)
    });
    (up, low)
}

/// `Pr[|v - X|^2 <= 1 - r] > exp(-pi (r/s + n s + 4)^2 / 4) - 2^-n`.
pub fn get_shorter_check(spec: &TailCheckSpec) -> Result<BoundReport> {
    let law = Law::for_tails(&spec.basis, spec.s, 1.0)?;
    Ok(get_shorter_on(&law, spec.basis.n(), &spec.v, spec.r, spec.context()))
}

pub(crate) fn get_shorter_on(law: &Law, n: usize, v: &[f64], r: f64, mut ctx: Value) -> BoundReport {
    let s = law.s;
    let p = law.probability(|pt| lattice::dist_sq(&pt.embedding, v) <= 1.0 - r);
    let bound = (-std::f64::consts::PI * (r / s + n as f64 * s + 4.0).powi(2) / 4.0).exp() - 0.5f64.powi(n as i32);
    ctx["vacuous"] = json!(bound <= 0.0);
    BoundReport::from_interval("closeness", Relation::Gt, p.value, p.lo, p.hi, bound, ctx)
}
