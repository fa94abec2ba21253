//! Miniature of the union-bound argument over an epsilon-net.
//!
//! The lattice is scaled so that `n^{1/2 + alpha} eta = 1`, a `(1/n^3)`-net of
//! the sphere is built, and for every net point `v_j` the per-sample success
//! probability `p_j = Pr[|v_j - X|^2 <= 1 - 5/n^2]` is computed exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{build_eps_net, BoundReport, Law, Relation};
use crate::error::{Error, Result};
use crate::gaussian::{sample_exact, smoothing_parameter, GaussianParam};
use crate::lattice::{dist_sq, Basis};
use crate::rational;

/// Default sample count for the simulated covering run.
pub const DEFAULT_SIMULATED_N: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnionBoundReport {
    pub n: usize,
    pub alpha: f64,
    /// Exact scale applied to the input basis, as `p/q`.
    pub scale: String,
    pub s: f64,
    pub d: f64,
    pub net_eps: f64,
    pub net_size: usize,
    pub radius_sq: f64,
    pub min_p: f64,
    /// Certified lower end of `min_j p_j`.
    pub min_p_lo: f64,
    pub argmin: usize,
    /// `exp(-(n^{1/2 - alpha} + 4)^2) = n^2 / N_alpha`.
    pub chain_bound: f64,
    /// `exp(-pi (5/(n^2 s) + n s + 4)^2 / 4) - 2^-n`.
    pub closeness_bound: f64,
    pub chain: BoundReport,
    /// Smallest `N` with `(1 - min_p_lo)^N < 2^-n / M`, when `min_p_lo > 0`.
    pub n_required: Option<f64>,
    pub simulated_n: usize,
    /// `M (1 - min_p_lo)^N` for the simulated `N`.
    pub failure_bound: f64,
    /// Net points with no sample within the success radius in the simulated run.
    pub uncovered: usize,
}

pub fn union_bound_experiment(basis: &Basis, alpha: f64, seed: u64) -> Result<UnionBoundReport> {
    union_bound_experiment_with(basis, alpha, seed, DEFAULT_SIMULATED_N)
}

pub fn union_bound_experiment_with(basis: &Basis, alpha: f64, seed: u64, simulated_n: usize) -> Result<UnionBoundReport> {
    let n = basis.n();
    if n > 3 {
        return Err(Error::InvalidParameter(format!("the union-bound experiment needs n <= 3, got {n}")));
    }
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1/2], got {alpha}")));
    }
    let nf = n as f64;
    let eta = smoothing_parameter(basis, 1e-10)?.bracket.1;
    let c = rational::from_f64(1.0 / (nf.powf(0.5 + alpha) * eta))?;
    let scaled = basis.scaled(&c)?;
    let s = smoothing_parameter(&scaled, 1e-10)?.bracket.1;
    let d = nf.powf(0.5 + alpha) * s;

    let eps = 1.0 / (nf * nf * nf);
    let net = build_eps_net(n, eps, eps / 10.0)?;
    let radius_sq = 1.0 - 5.0 / (nf * nf);
    let law = Law::new(&scaled, s, (1e-15f64).ln(), 2.0)?;
    let probs: Vec<(f64, f64)> = net
        .points
        .par_iter()
        .map(|v| {
            if radius_sq < 0.0 {
                (0.0, 0.0)
            } else {
                let p = law.probability(|pt| dist_sq(&pt.embedding, v) <= radius_sq);
                (p.value, p.lo)
            }
        })
        .collect();
    let (argmin, &(min_p, _)) = probs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("net is nonempty");
    let min_p_lo = probs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);

    let chain_bound = (-(nf.powf(0.5 - alpha) + 4.0).powi(2)).exp();
    let closeness_bound =
        (-std::f64::consts::PI * (5.0 / (nf * nf * s) + nf * s + 4.0).powi(2) / 4.0).exp() - 0.5f64.powi(n as i32);
    let m = net.len() as f64;
    let ctx = json!({ "basis_hash": basis.hash(), "n": n, "alpha": alpha, "s": s, "net_size": net.len(), "argmin": argmin });
    let chain = BoundReport::from_interval("union-bound-chain", Relation::Ge, min_p, min_p_lo, min_p, chain_bound, ctx);

    let ln_target = -nf * std::f64::consts::LN_2 - m.ln();
    let n_required = (min_p_lo > 0.0).then(|| (ln_target / (-min_p_lo).ln_1p()).floor() + 1.0);
    let failure_bound = (m.ln() + simulated_n as f64 * (-min_p_lo).ln_1p()).exp();

    let samples = if radius_sq < 0.0 || simulated_n == 0 {
        Vec::new()
    } else {
        sample_exact(&scaled, GaussianParam::new(s)?, simulated_n, seed)?.samples
    };
    let uncovered = net
        .points
        .iter()
        .filter(|v| !samples.iter().any(|y| dist_sq(&y.embedding, v) <= radius_sq))
        .count();

    Ok(UnionBoundReport {
        n,
        alpha,
        scale: rational::format(&c),
        s,
        d,
        net_eps: eps,
        net_size: net.len(),
        radius_sq,
        min_p,
        min_p_lo,
        argmin,
        chain_bound,
        closeness_bound,
        chain,
        n_required,
        simulated_n,
        failure_bound,
        uncovered,
    })
}
