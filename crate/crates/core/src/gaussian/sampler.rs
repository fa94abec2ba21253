//! Discrete Gaussian samplers: an exact one over an enumerated ball and a
//! randomized nearest-plane (Klein) sampler for larger widths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{integer_mass_upper, Ensemble, GaussianParam};
use crate::error::{Error, Result};
use crate::lattice::{Basis, LatticeVector};

/// Samples per independently seeded shard; sharding never changes the output.
pub const SHARD_SIZE: usize = 1024;

/// Default `c_klein` in the width precondition.
pub const DEFAULT_KLEIN_QUALITY: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Exact,
    Klein,
}

/// Lattice samples with the parameters that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<LatticeVector>,
    pub s: GaussianParam,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub stat_distance_bound: Option<f64>,
    pub basis_hash: String,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn shard_rng(seed: u64, shard: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

/// Runs `draw` `count` times over seeded shards, concatenated in shard order.
fn sharded<T: Send, S>(
    count: usize,
    seed: u64,
    init: impl Fn() -> S + Sync,
    draw: impl Fn(&mut S, &mut ChaCha20Rng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let shards = count.div_ceil(SHARD_SIZE);
    let parts: Vec<Result<Vec<T>>> = (0..shards)
        .into_par_iter()
        .map(|k| {
            let mut rng = shard_rng(seed, k);
            let mut state = init();
            let len = SHARD_SIZE.min(count - k * SHARD_SIZE);
            (0..len).map(|_| draw(&mut state, &mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Inverse-CDF sampler for `D_{L,s}` restricted to a ball holding all but a
/// `2^-n * 1e-3` fraction of the mass.
#[derive(Clone, Debug)]
pub struct ExactSampler {
    support: Vec<Vec<i64>>,
    cumulative: Vec<f64>,
    total: f64,
    omitted_mass: f64,
}

impl ExactSampler {
    pub fn new(basis: &Basis, s: GaussianParam) -> Result<Self> {
        let n = basis.n();
        // total mass is at least 1, so an absolute bound is also relative
        let ln_tol = -(n as f64) * std::f64::consts::LN_2 + (1e-3f64).ln();
        let ens = Ensemble::build(basis, s.get(), &vec![0.0; n], ln_tol, 0.0)?;
        let red = basis.reduction();
        let mut support = Vec::with_capacity(ens.points.len());
        let mut cumulative = Vec::with_capacity(ens.points.len());
        let mut acc = 0.0;
        for p in &ens.points {
            support.push(red.to_original(&p.reduced_coeffs)?);
            acc += p.weight;
            cumulative.push(acc);
        }
        Ok(ExactSampler { support, cumulative, total: acc, omitted_mass: ens.truncation })
    }

    /// Support points as coefficient vectors over the input basis.
    pub fn support(&self) -> &[Vec<i64>] {
        &self.support
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let p = (c - prev) / self.total;
                prev = c;
                p
            })
            .collect()
    }

    /// Upper bound on the mass fraction outside the support.
    pub fn omitted_fraction(&self) -> f64 {
        self.omitted_mass / self.total
    }

    /// Index into [`Self::support`] of one draw.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

pub fn sample_exact(basis: &Basis, s: GaussianParam, count: usize, seed: u64) -> Result<SampleSet> {
    let sampler = ExactSampler::new(basis, s)?;
    let idx = sharded(count, seed, || (), |_, rng| Ok(sampler.draw(rng)))?;
    let samples = idx.into_iter().map(|i| basis.vector(sampler.support[i].clone())).collect::<Result<_>>()?;
    Ok(SampleSet {
        samples,
        s,
        sampler: SamplerKind::Exact,
        seed,
        stat_distance_bound: None,
        basis_hash: basis.hash(),
    })
}

/// Smallest width meeting the Klein precondition for quality `c_klein`.
pub fn klein_threshold(basis: &Basis, c_klein: f64) -> f64 {
    let n = basis.n() as f64;
    c_klein * basis.gram_schmidt().max_norm() * ((2.0 * n * 1.0e4).ln() / std::f64::consts::PI).sqrt()
}

pub fn sample_klein(basis: &Basis, s: GaussianParam, count: usize, seed: u64) -> Result<SampleSet> {
    sample_klein_with(basis, s, count, seed, DEFAULT_KLEIN_QUALITY)
}

/// Klein sampler on the given basis with an explicit quality constant.
pub fn sample_klein_with(basis: &Basis, s: GaussianParam, count: usize, seed: u64, c_klein: f64) -> Result<SampleSet> {
    let threshold = klein_threshold(basis, c_klein);
    if s.get() < threshold {
        return Err(Error::WidthTooSmall { s: s.get(), threshold });
    }
    let gso = basis.gram_schmidt();
    let widths: Vec<f64> = gso.norms.iter().map(|&b| s.get() / b.sqrt()).collect();
    let stat = widths
        .iter()
        .map(|&w| {
            let eps = integer_mass_upper(1.0 / w) - 1.0;
            (1.0 + eps) / (1.0 - eps)
        })
        .product::<f64>()
        - 1.0;
    let n = basis.n();
    let coeffs = sharded(
        count,
        seed,
        || (vec![0.0; n], Vec::new()),
        |(centers, scratch): &mut (Vec<f64>, Vec<f64>), rng| {
            centers.iter_mut().for_each(|c| *c = 0.0);
            let mut z = vec![0i64; n];
            for i in (0..n).rev() {
                let zi = sample_z(rng, widths[i], centers[i], scratch)?;
                z[i] = zi;
                let zf = zi as f64;
                centers[i] -= zf;
                for (j, c) in centers.iter_mut().enumerate().take(i) {
                    *c -= zf * gso.mu[i][j];
                }
            }
            Ok(z)
        },
    )?;
    let samples = coeffs.into_iter().map(|z| basis.vector(z)).collect::<Result<_>>()?;
    Ok(SampleSet {
        samples,
        s,
        sampler: SamplerKind::Klein,
        seed,
        stat_distance_bound: Some(stat),
        basis_hash: basis.hash(),
    })
}

/// One draw from `D_{Z,w,c}` by inversion over `[c - 10w, c + 10w]`.
fn sample_z<R: Rng>(rng: &mut R, w: f64, c: f64, scratch: &mut Vec<f64>) -> Result<i64> {
    let lo = (c - 10.0 * w).floor() - 1.0;
    let hi = (c + 10.0 * w).ceil() + 1.0;
    if !(hi - lo < 1.0e7) || lo.abs() > 9.0e15 || hi.abs() > 9.0e15 {
        return Err(Error::Overflow("one-dimensional sampler support"));
    }
    let (lo, hi) = (lo as i64, hi as i64);
    scratch.clear();
    let mut acc = 0.0;
    for k in lo..=hi {
        let d = k as f64 - c;
        acc += (-std::f64::consts::PI * d * d / (w * w)).exp();
        scratch.push(acc);
    }
    let u = rng.random::<f64>() * acc;
    let idx = scratch.partition_point(|&x| x <= u).min(scratch.len() - 1);
    Ok(lo + idx as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational;

    #[test]
    fn exact_sampler_on_z_matches_series() {
        let s = GaussianParam::new(1.0).unwrap();
        let sampler = ExactSampler::new(&Basis::identity(1), s).unwrap();
        let zero = sampler.support().iter().position(|z| z[0] == 0).unwrap();
        let p0 = sampler.probabilities()[zero];
        assert!((p0 - 0.9204417878355910).abs() <= 0.9204417878355910 * sampler.omitted_fraction() + 1e-12);
        assert!(sampler.omitted_fraction() < 0.5e-3);
    }

    #[test]
    fn sampling_is_deterministic_and_prefix_stable() {
        let b = Basis::identity(2);
        let s = GaussianParam::new(2.0).unwrap();
        let a = sample_exact(&b, s, 3000, 5).unwrap();
        let again = sample_exact(&b, s, 3000, 5).unwrap();
        assert_eq!(a, again);
        let short = sample_exact(&b, s, 100, 5).unwrap();
        assert_eq!(&a.samples[..100], &short.samples[..]);
        let k1 = sample_klein(&b, GaussianParam::new(3.0).unwrap(), 2000, 1).unwrap();
        let k2 = sample_klein(&b, GaussianParam::new(3.0).unwrap(), 2000, 1).unwrap();
        assert_eq!(k1, k2);
    }

    #[test]
    fn klein_width_precondition() {
        let b = Basis::identity(2);
        let err = sample_klein(&b, GaussianParam::new(0.5).unwrap(), 10, 0).unwrap_err();
        assert!(matches!(err, Error::WidthTooSmall { .. }));
        let ok = sample_klein(&b, GaussianParam::new(3.0).unwrap(), 10, 0).unwrap();
        assert!(ok.stat_distance_bound.unwrap() < 1e-10);
    }

    #[test]
    fn klein_scaling_keeps_coefficients() {
        let b = Basis::from_integer_rows(&[vec![2, 1], vec![-1, 3]], "t").unwrap();
        let c = rational::int(4);
        let s = GaussianParam::new(10.0).unwrap();
        let a = sample_klein(&b, s, 500, 3).unwrap();
        let scaled = sample_klein(&b.scaled(&c).unwrap(), GaussianParam::new(40.0).unwrap(), 500, 3).unwrap();
        let ca: Vec<_> = a.samples.iter().map(|v| v.coeffs.clone()).collect();
        let cb: Vec<_> = scaled.samples.iter().map(|v| v.coeffs.clone()).collect();
        assert_eq!(ca, cb);
    }
}
