//! The iterative decoder.
//!
//! Preprocessing draws `N` discrete Gaussian samples `y_1..y_N` at the
//! smoothing parameter. A query starts from the nearest-plane residual
//! `t_0 in L + t` and repeatedly replaces `t_j` by `t_j - k y_i` whenever
//! that contracts the squared norm by a factor `1 - 1/n^2`. The answer is
//! `t - t_final`, tracked as an exact integer combination of the basis.

mod count;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    klein_threshold, sample_exact, sample_klein, smoothing_parameter, GaussianParam, SampleSet, SmoothingEstimate,
};
use crate::lattice::{self, Basis, LatticeVector, Target};
use crate::rational;

pub use count::{n_alpha, NAlpha};

/// Largest dimension at which preprocessing samples by enumeration.
pub const EXACT_SAMPLER_MAX_DIM: usize = 10;

/// Relative tolerance of the smoothing estimate used by [`preprocess`].
pub const SMOOTHING_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GddpParams {
    pub alpha: f64,
    pub n: usize,
    pub s: f64,
    #[serde(rename = "N")]
    pub count: usize,
    /// Distance guarantee `n^{1/2 + alpha} s`.
    pub d: f64,
}

impl GddpParams {
    pub fn new(n: usize, alpha: f64, s: f64, count: usize) -> Result<Self> {
        if !(0.0..=0.5).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1/2], got {alpha}")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        GaussianParam::new(s)?;
        let d = (n as f64).powf(0.5 + alpha) * s;
        Ok(GddpParams { alpha, n, s, count, d })
    }

    /// `100 n^3`.
    pub fn iteration_cap(&self) -> usize {
        100 * self.n.pow(3)
    }
}

/// Row-major copy of the preprocessing embeddings for the scan.
#[derive(Clone, Debug, Default)]
struct ScanTable {
    n: usize,
    flat: Vec<f64>,
    norms_sq: Vec<f64>,
}

impl ScanTable {
    fn new(n: usize, vectors: &[LatticeVector]) -> Self {
        let mut flat = Vec::with_capacity(n * vectors.len());
        for v in vectors {
            flat.extend_from_slice(&v.embedding);
        }
        ScanTable { n, flat, norms_sq: vectors.iter().map(|v| v.norm_sq).collect() }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.flat[i * self.n..(i + 1) * self.n]
    }
}

/// Output of [`preprocess`]: the sample list plus what a query needs.
#[derive(Clone, Debug)]
pub struct Preprocessing {
    pub params: GddpParams,
    pub vectors: SampleSet,
    pub basis: Basis,
    pub smoothing: SmoothingEstimate,
    pub n_alpha: Option<NAlpha>,
    table: ScanTable,
}

impl Preprocessing {
    /// Assembles a preprocessing record, re-deriving every embedding from the
    /// exact coefficients over `basis`.
    pub fn from_parts(
        basis: Basis,
        params: GddpParams,
        mut vectors: SampleSet,
        smoothing: SmoothingEstimate,
        n_alpha: Option<NAlpha>,
    ) -> Result<Self> {
        let n = basis.n();
        if params.n != n {
            return Err(Error::DimensionMismatch { expected: n, got: params.n });
        }
        if vectors.basis_hash != basis.hash() {
            return Err(Error::InvalidParameter("samples were drawn for a different basis".into()));
        }
        for v in vectors.samples.iter_mut() {
            *v = basis.vector(std::mem::take(&mut v.coeffs))?;
        }
        let table = ScanTable::new(n, &vectors.samples);
        Ok(Preprocessing { params, vectors, basis, smoothing, n_alpha, table })
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn len(&self) -> usize {
        self.vectors.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.samples.is_empty()
    }

    /// LLL-reduced basis used for the nearest-plane start.
    pub fn basis_reduced(&self) -> &Basis {
        &self.basis.reduction().basis
    }

    /// Whether `N` reaches the count the distance guarantee needs.
    pub fn theorem_guarantee(&self) -> bool {
        match &self.n_alpha {
            Some(na) => num_bigint::BigUint::from(self.params.count) >= na.value,
            None => false,
        }
    }
}

/// Draws the preprocessing list for `basis` at `s = ` upper end of the smoothing bracket.
pub fn preprocess(basis: &Basis, alpha: f64, override_n: Option<usize>, seed: u64) -> Result<Preprocessing> {
    let smoothing = smoothing_parameter(basis, SMOOTHING_TOL)?;
    preprocess_with_smoothing(basis, alpha, override_n, seed, smoothing)
}

/// [`preprocess`] with a smoothing estimate computed earlier for the same basis.
pub fn preprocess_with_smoothing(
    basis: &Basis,
    alpha: f64,
    override_n: Option<usize>,
    seed: u64,
    smoothing: SmoothingEstimate,
) -> Result<Preprocessing> {
    let n = basis.n();
    let s = smoothing.bracket.1;
    let na = n_alpha(n, alpha)?;
    let count = match override_n {
        Some(c) => {
            if na.to_usize().is_none_or(|needed| c < needed) {
                warn!("N = {c} is below N_alpha = {}; the distance guarantee is void (empirical mode)", na.value);
            }
            c
        }
        None => na
            .to_usize()
            .filter(|&c| c <= 1 << 32)
            .ok_or_else(|| Error::InfeasibleCount(format!("N_alpha = {} samples cannot be materialized", na.value)))?,
    };
    let params = GddpParams::new(n, alpha, s, count)?;
    let gp = GaussianParam::new(s)?;
    let vectors = if n <= EXACT_SAMPLER_MAX_DIM {
        match sample_exact(basis, gp, count, seed) {
            Err(Error::EnumerationBudget { .. }) => klein_on_reduced(basis, gp, count, seed)?,
            other => other?,
        }
    } else {
        klein_on_reduced(basis, gp, count, seed)?
    };
    Preprocessing::from_parts(basis.clone(), params, vectors, smoothing, Some(na))
}

fn klein_on_reduced(basis: &Basis, s: GaussianParam, count: usize, seed: u64) -> Result<SampleSet> {
    let red = basis.reduction();
    if s.get() < klein_threshold(&red.basis, 1.0) {
        warn!("smoothing width is below the Klein precondition");
    }
    let mut set = sample_klein(&red.basis, s, count, seed)?;
    for v in set.samples.iter_mut() {
        *v = basis.vector(red.to_original(&v.coeffs)?)?;
    }
    set.basis_hash = basis.hash();
    Ok(set)
}

/// Scans the list for the first `(i, k)` with `|t - k y_i|^2 <= (1 - 1/n^2) |t|^2`
/// and a strict decrease; `k` is the norm-minimizing multiple for `y_i`.
pub fn reduce_step(t_cur: &[f64], prep: &Preprocessing) -> Option<(usize, i64)> {
    scan(t_cur, &prep.table).map(|(i, k, _)| (i, k))
}

fn scan(t: &[f64], table: &ScanTable) -> Option<(usize, i64, f64)> {
    let n = table.n;
    let before: f64 = t.iter().map(|x| x * x).sum();
    if before == 0.0 {
        return None;
    }
    let nf = n as f64;
    let bound = (1.0 - 1.0 / (nf * nf)) * before;
    let loose = bound + 1e-9 * before;
    for (i, (y, &ny)) in table.flat.chunks_exact(n).zip(&table.norms_sq).enumerate() {
        if ny == 0.0 {
            continue;
        }
        let ip = lattice::dot(t, y);
        let kf = (ip / ny).round();
        if kf == 0.0 || kf.abs() > 9.0e15 {
            continue;
        }
        if before - 2.0 * kf * ip + kf * kf * ny > loose {
            continue;
        }
        let after: f64 = t.iter().zip(y).map(|(a, b)| (a - kf * b) * (a - kf * b)).sum();
        if after <= bound && after < before {
            return Some((i, kf as i64, after));
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaltReason {
    NoImprovingPair,
    IterationCap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub index: usize,
    pub k: i64,
    pub norm_sq_before: f64,
    pub norm_sq_after: f64,
}

/// Every step of one query, enough to replay it exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryTrace {
    pub target: Vec<f64>,
    /// Nearest-plane start as coefficients over the input basis.
    pub babai_coeffs: Vec<i64>,
    pub t0: Vec<f64>,
    pub steps: Vec<TraceStep>,
    pub final_t: Vec<f64>,
    pub halt_reason: HaltReason,
}

impl QueryTrace {
    /// Re-applies the recorded steps to `t0`.
    pub fn replay(&self, prep: &Preprocessing) -> Result<Vec<f64>> {
        let mut t = self.t0.clone();
        for step in &self.steps {
            if step.index >= prep.len() {
                return Err(Error::InvalidParameter(format!("trace index {} out of range", step.index)));
            }
            apply(&mut t, prep.table.row(step.index), step.k);
        }
        Ok(t)
    }

    /// `norm_sq_after <= (1 - 1/n^2) norm_sq_before` and strict decrease, for every step.
    pub fn contraction_holds(&self) -> bool {
        let nf = self.t0.len() as f64;
        let factor = 1.0 - 1.0 / (nf * nf);
        self.steps.iter().all(|s| s.norm_sq_after <= factor * s.norm_sq_before && s.norm_sq_after < s.norm_sq_before)
    }
}

fn apply(t: &mut [f64], y: &[f64], k: i64) {
    let kf = k as f64;
    for (a, b) in t.iter_mut().zip(y) {
        *a -= kf * b;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GddSolution {
    pub y: LatticeVector,
    pub distance: f64,
    pub trace: QueryTrace,
}

pub fn query(prep: &Preprocessing, t: &Target) -> Result<GddSolution> {
    let n = prep.n();
    if t.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: t.len() });
    }
    let target = t.as_slice();
    let red = prep.basis.reduction();
    let start = lattice::babai_nearest_plane(&red.basis, t)?;
    let mut z = red.to_original(&start.coeffs)?;
    let start_emb = prep.basis.embed(&z);
    let mut cur: Vec<f64> = target.iter().zip(&start_emb).map(|(a, b)| a - b).collect();
    let t_norm = lattice::norm_sq(target).sqrt();
    if lattice::norm_sq(&cur).sqrt() < 1e-9 * t_norm + 1e-12 {
        cur.iter_mut().for_each(|x| *x = 0.0);
    }
    let trace_start = cur.clone();
    let cap = prep.params.iteration_cap();
    let mut steps = Vec::new();
    let mut halt_reason = HaltReason::NoImprovingPair;
    let mut before = lattice::norm_sq(&cur);
    loop {
        if steps.len() >= cap {
            halt_reason = HaltReason::IterationCap;
            break;
        }
        let Some((index, k, after)) = scan(&cur, &prep.table) else { break };
        apply(&mut cur, prep.table.row(index), k);
        let coeffs = &prep.vectors.samples[index].coeffs;
        for (zc, &c) in z.iter_mut().zip(coeffs) {
            *zc = k
                .checked_mul(c)
                .and_then(|v| zc.checked_add(v))
                .ok_or(Error::Overflow("query coefficient accumulator"))?;
        }
        steps.push(TraceStep { index, k, norm_sq_before: before, norm_sq_after: after });
        before = lattice::norm_sq(&cur);
    }
    let babai_coeffs = red.to_original(&start.coeffs)?;
    let y = prep.basis.vector(z)?;
    let distance = lattice::dist_sq(&y.embedding, target).sqrt();
    Ok(GddSolution {
        y,
        distance,
        trace: QueryTrace { target: target.to_vec(), babai_coeffs, t0: trace_start, steps, final_t: cur, halt_reason },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipMode {
    /// The double-precision point read as an exact rational vector.
    Exact,
    /// Rounded coefficients whose exact embedding rounds to the given point.
    FloatView,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub member: bool,
    pub membership_mode: Option<MembershipMode>,
    pub coefficients: Option<Vec<i64>>,
    pub distance: f64,
    pub d: f64,
    pub within_distance: bool,
    pub pass: bool,
}

/// Exact lattice membership of `y` and `|y - t| <= d + 1e-9`.
pub fn verify_solution(basis: &Basis, t: &Target, y: &[f64], d: f64) -> Result<Verdict> {
    let n = basis.n();
    if t.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: if t.len() != n { t.len() } else { y.len() } });
    }
    let exact = y.iter().map(|&v| rational::from_f64(v)).collect::<Result<Vec<_>>>()?;
    let coeffs = basis.coefficients_of(&exact)?;
    let (member, mode, coefficients) = if coeffs.iter().all(rational::is_integer) {
        let z = coeffs.iter().map(|c| lattice::big_to_i64(&c.to_integer())).collect::<Result<Vec<_>>>()?;
        (true, Some(MembershipMode::Exact), Some(z))
    } else {
        let rounded = coeffs.iter().map(|c| lattice::big_to_i64(&rational::round(c))).collect::<Result<Vec<_>>>();
        match rounded {
            Ok(z) if basis.embed(&z) == y => (true, Some(MembershipMode::FloatView), Some(z)),
            _ => (false, None, None),
        }
    };
    let distance = lattice::dist_sq(y, t.as_slice()).sqrt();
    let within_distance = distance <= d + 1e-9;
    Ok(Verdict { member, membership_mode: mode, coefficients, distance, d, within_distance, pass: member && within_distance })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMultipleReport {
    pub applicable: bool,
    pub reason: Option<String>,
    pub beta: f64,
    pub checked: usize,
    pub violations: usize,
    pub worst_ratio: f64,
    pub bound: f64,
}

/// For unit `t` with `|t - y|^2 <= 1 - 4/n^2`, checks that every integer
/// `k in [beta/2, beta]` gives `|beta t - k y|^2 <= (1 - 1/n^2) |beta t|^2`.
pub fn k_multiple_margin_check(t: &[f64], y: &[f64], beta: f64) -> KMultipleReport {
    let n = t.len() as f64;
    let bound = 1.0 - 1.0 / (n * n);
    let mut report =
        KMultipleReport { applicable: false, reason: None, beta, checked: 0, violations: 0, worst_ratio: 0.0, bound };
    if t.len() != y.len() || t.is_empty() {
        report.reason = Some("dimension mismatch".into());
        return report;
    }
    if (lattice::norm_sq(t).sqrt() - 1.0).abs() > 1e-9 {
        report.reason = Some("t is not a unit vector".into());
        return report;
    }
    if !(beta > 0.0 && beta.is_finite()) {
        report.reason = Some("beta must be positive".into());
        return report;
    }
    if lattice::dist_sq(t, y) > 1.0 - 4.0 / (n * n) {
        report.reason = Some("|t - y|^2 exceeds 1 - 4/n^2".into());
        return report;
    }
    report.applicable = true;
    let bt: Vec<f64> = t.iter().map(|x| beta * x).collect();
    let denom = lattice::norm_sq(&bt);
    let lo = (beta / 2.0).ceil() as i64;
    let hi = beta.floor() as i64;
    for k in lo..=hi {
        let kf = k as f64;
        let num: f64 = bt.iter().zip(y).map(|(a, b)| (a - kf * b) * (a - kf * b)).sum();
        let ratio = num / denom;
        report.checked += 1;
        report.worst_ratio = report.worst_ratio.max(ratio);
        if ratio > bound + 1e-12 {
            report.violations += 1;
        }
    }
    report
}
