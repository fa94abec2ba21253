//! Fixed-seed corpora of small random lattices and the sweeps run over them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{get_shorter_on, mgf_sandwich_check, projection_tail_on, smoothing_ratio_check, BoundReport, Law, Relation, TailCheckSpec};
use crate::error::Result;
use crate::gaussian::{banaszczyk_check, smoothing_parameter, GaussianParam, SmoothingEstimate, SMOOTHING_DUAL_MASS};
use crate::lattice::{random_basis, Basis, BasisStyle};

/// Entry bound of corpus bases.
pub const CORPUS_ENTRY_BOUND: i64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusKind {
    /// 20 bases for each `n` in 1..=3.
    Standard,
    /// 3 bases for each `n` in 1..=3.
    Quick,
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub id: String,
    pub seed: u64,
    pub basis: Basis,
    pub smoothing: SmoothingEstimate,
}

impl CorpusEntry {
    pub fn eta(&self) -> f64 {
        self.smoothing.bracket.1
    }

    fn rng(&self, salt: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
    }

    fn context(&self, s: f64) -> serde_json::Value {
        json!({ "entry": self.id, "basis_hash": self.basis.hash(), "n": self.basis.n(), "s": s, "s_over_eta": s / self.eta() })
    }
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub kind: CorpusKind,
    pub entries: Vec<CorpusEntry>,
}

/// Seed of the `i`-th corpus basis in dimension `n`.
pub fn corpus_seed(n: usize, i: usize) -> u64 {
    1000 * n as u64 + i as u64
}

fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return g.into_iter().map(|x| x / norm).collect();
        }
    }
}

impl Corpus {
    pub fn new(kind: CorpusKind) -> Result<Self> {
        let per = match kind {
            CorpusKind::Standard => 20,
            CorpusKind::Quick => 3,
        };
        Self::build(kind, &[1, 2, 3], per)
    }

    pub fn standard() -> Result<Self> {
        Self::new(CorpusKind::Standard)
    }

    pub fn quick() -> Result<Self> {
        Self::new(CorpusKind::Quick)
    }

    fn build(kind: CorpusKind, dims: &[usize], per: usize) -> Result<Self> {
        let specs: Vec<(usize, usize)> = dims.iter().flat_map(|&n| (0..per).map(move |i| (n, i))).collect();
        let entries = specs
            .par_iter()
            .map(|&(n, i)| {
                let seed = corpus_seed(n, i);
                let basis = random_basis(n, &BasisStyle::UniformInteger { bound: CORPUS_ENTRY_BOUND }, seed)?;
                let smoothing = smoothing_parameter(&basis, 1e-10)?;
                Ok(CorpusEntry { id: format!("n{n}-{i:02}"), seed, basis, smoothing })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Corpus { kind, entries })
    }

    fn sweep(&self, f: impl Fn(&CorpusEntry) -> Result<Vec<BoundReport>> + Sync) -> Result<Vec<BoundReport>> {
        let parts = self.entries.par_iter().map(&f).collect::<Result<Vec<_>>>()?;
        Ok(parts.into_iter().flatten().collect())
    }

    /// `rho_{1/eta}(L*)` within `1e-6` of the threshold, certified.
    pub fn smoothing_sweep(&self) -> Result<Vec<BoundReport>> {
        self.sweep(|e| {
            let sm = &e.smoothing;
            let dev = (sm.dual_mass_at_eta - SMOOTHING_DUAL_MASS).abs();
            let ctx = e.context(sm.eta);
            Ok(vec![BoundReport::new("smoothing-equation", Relation::Le, dev, 1e-6, sm.dual_mass_error, ctx)])
        })
    }

    /// Shifted-to-unshifted mass ratio over `shifts` random shifts per width.
    pub fn shift_ratio_sweep(&self, shifts: usize) -> Result<Vec<BoundReport>> {
        self.sweep(|e| {
            let n = e.basis.n();
            let mut rng = e.rng(1);
            let rows = e.basis.float_rows();
            let mut out = Vec::new();
            for factor in [1.0, 1.5, 3.0] {
                let ts: Vec<Vec<f64>> = (0..shifts)
                    .map(|_| {
                        let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                        (0..n).map(|k| (0..n).map(|i| u[i] * rows[i][k]).sum()).collect()
                    })
                    .collect();
                let mut reps = smoothing_ratio_check(&e.basis, factor * e.eta(), &ts)?;
                for r in reps.iter_mut() {
                    r.context["entry"] = json!(e.id);
                    r.context["s_over_eta"] = json!(factor);
                }
                out.extend(reps);
            }
            Ok(out)
        })
    }

    /// Projection tails for `r0 in {0.25, ..., 3}` and the moment-generating
    /// sandwich for `beta in {0.5, 1, 2}` over `directions` random unit vectors,
    /// at `s in {1, 1.5, 3} eta`; plus the upper tail at `s = eta / 2`.
    pub fn projection_sweep(&self, directions: usize) -> Result<Vec<BoundReport>> {
        let r0s: Vec<f64> = (1..=12).map(|k| 0.25 * k as f64).collect();
        self.sweep(|e| {
            let n = e.basis.n();
            let mut rng = e.rng(2);
            let dirs: Vec<Vec<f64>> = (0..directions).map(|_| random_unit(&mut rng, n)).collect();
            let mut out = Vec::new();
            for factor in [0.5, 1.0, 1.5, 3.0] {
                let s = factor * e.eta();
                let law = Law::for_tails(&e.basis, s, 3.0)?;
                let above = factor >= 1.0;
                for v in &dirs {
                    for &r0 in &r0s {
                        let mut ctx = e.context(s);
                        ctx["v"] = json!(v);
                        ctx["r0"] = json!(r0);
                        let (up, low) = projection_tail_on(&law, v, r0, above, ctx);
                        out.push(up);
                        out.extend(low);
                    }
                    if above {
                        for beta in [0.5, 1.0, 2.0] {
                            let spec = TailCheckSpec::new(e.basis.clone(), s, v.clone(), 1.0, 0.5, beta, e.eta())?;
                            let m = mgf_sandwich_check(&spec)?;
                            out.extend([m.lower, m.upper, m.agreement]);
                        }
                    }
                }
            }
            Ok(out)
        })
    }

    /// Closeness probability for `r in {0.05, ..., 0.5}` over random unit vectors.
    pub fn closeness_sweep(&self, directions: usize) -> Result<Vec<BoundReport>> {
        let rs: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
        self.sweep(|e| {
            let n = e.basis.n();
            let mut rng = e.rng(3);
            let dirs: Vec<Vec<f64>> = (0..directions).map(|_| random_unit(&mut rng, n)).collect();
            let mut out = Vec::new();
            for factor in [1.0, 1.5, 3.0] {
                let s = factor * e.eta();
                let law = Law::for_tails(&e.basis, s, 1.0)?;
                for v in &dirs {
                    for &r in &rs {
                        let mut ctx = e.context(s);
                        ctx["v"] = json!(v);
                        ctx["r"] = json!(r);
                        out.push(get_shorter_on(&law, n, v, r, ctx));
                    }
                }
            }
            Ok(out)
        })
    }

    /// `Pr[|X| >= sqrt(n) s] <= 2^-n` at `s = factor * eta`.
    pub fn banaszczyk_sweep(&self, factors: &[f64]) -> Result<Vec<BoundReport>> {
        self.sweep(|e| {
            factors
                .iter()
                .map(|&f| {
                    let s = f * e.eta();
                    let r = banaszczyk_check(&e.basis, GaussianParam::new(s)?)?;
                    Ok(BoundReport::from_interval(
                        "banaszczyk",
                        Relation::Le,
                        r.probability,
                        r.probability_lo,
                        r.probability_hi,
                        r.bound,
                        e.context(s),
                    ))
                })
                .collect()
        })
    }

    /// Every sweep at its default size, in a fixed order.
    pub fn run_all(&self) -> Result<Vec<BoundReport>> {
        let mut out = self.smoothing_sweep()?;
        out.extend(self.shift_ratio_sweep(25)?);
        out.extend(self.projection_sweep(10)?);
        out.extend(self.closeness_sweep(10)?);
        out.extend(self.banaszczyk_sweep(&[1.0, 1.5, 2.0, 3.0])?);
        Ok(out)
    }
}
