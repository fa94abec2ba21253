//! Distance/time trade-off tables.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use anyhow::Result;
use gddp_core::gaussian::smoothing_parameter;
use gddp_core::gddp::{preprocess_with_smoothing, query, reduce_step, Preprocessing, SMOOTHING_TOL};
use gddp_core::lattice::{Basis, Target};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One `(alpha, N)` cell. `N = 0` is the nearest-plane baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub alpha: f64,
    #[serde(rename = "N")]
    pub count: usize,
    pub d: f64,
    pub median_distance: f64,
    pub distance_over_sqrt_n_eta: f64,
    pub median_iterations: f64,
    /// Fraction of targets decoded within `d`.
    pub within_d: f64,
    /// Seconds spent in the query phase, all targets.
    pub wall_time: f64,
    /// Nanoseconds per list entry of one full scan that finds no improving pair.
    pub scan_ns_per_vector: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub n: usize,
    pub eta: f64,
    pub basis_hash: String,
    pub targets: usize,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
}

/// Targets uniform in the fundamental parallelepiped of the reduced basis.
/// Targets for `m` are a prefix of those for any larger count.
pub fn bench_targets(basis: &Basis, count: usize, seed: u64) -> Vec<Target> {
    let red = &basis.reduction().basis;
    let rows = red.float_rows();
    let n = basis.n();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(1 << 32);
    (0..count)
        .map(|_| {
            let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let t = (0..n).map(|k| (0..n).map(|i| u[i] * rows[i][k]).sum()).collect();
            Target::new(t).expect("finite target")
        })
        .collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Time of one full scan over the list, per entry, at a residual with no improving pair.
pub fn scan_time_per_vector(prep: &Preprocessing, residual: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..5 {
        let start = Instant::now();
        let mut reps = 0u64;
        while start.elapsed() < Duration::from_millis(2) {
            std::hint::black_box(reduce_step(std::hint::black_box(residual), prep));
            reps += 1;
        }
        best = best.min(start.elapsed().as_secs_f64() / reps as f64);
    }
    best * 1e9 / prep.len() as f64
}

pub fn bench(basis: &Basis, alphas: &[f64], counts: &[usize], target_count: usize, seed: u64) -> Result<BenchTable> {
    let n = basis.n();
    let smoothing = smoothing_parameter(basis, SMOOTHING_TOL)?;
    let eta = smoothing.bracket.1;
    let targets = bench_targets(basis, target_count, seed);
    let mut rows = Vec::new();
    for &alpha in alphas {
        for &count in counts {
            let prep = preprocess_with_smoothing(basis, alpha, Some(count), seed, smoothing)?;
            let start = Instant::now();
            let sols = targets.par_iter().map(|t| query(&prep, t)).collect::<gddp_core::Result<Vec<_>>>()?;
            let wall_time = start.elapsed().as_secs_f64();
            let d = prep.params.d;
            let dists: Vec<f64> = sols.iter().map(|s| s.distance).collect();
            let within = dists.iter().filter(|&&x| x <= d + 1e-9).count() as f64 / dists.len().max(1) as f64;
            let med = median(dists);
            let scan = match (count, sols.first()) {
                (c, Some(sol)) if c > 0 => Some(scan_time_per_vector(&prep, &sol.trace.final_t)),
                _ => None,
            };
            rows.push(BenchRow {
                alpha,
                count,
                d,
                median_distance: med,
                distance_over_sqrt_n_eta: med / ((n as f64).sqrt() * eta),
                median_iterations: median(sols.iter().map(|s| s.trace.steps.len() as f64).collect()),
                within_d: within,
                wall_time,
                scan_ns_per_vector: scan,
            });
        }
    }
    Ok(BenchTable { n, eta, basis_hash: basis.hash(), targets: target_count, seed, rows })
}

impl BenchTable {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n = {}, eta = {:.6}, targets = {}, seed = {}", self.n, self.eta, self.targets, self.seed);
        let _ = writeln!(
            out,
            "{:>6} {:>8} {:>10} {:>12} {:>10} {:>8} {:>8} {:>10} {:>10}",
            "alpha", "N", "d", "median_dist", "dist/rn.eta", "iters", "within", "wall_s", "ns/vec"
        );
        for r in &self.rows {
            let scan = r.scan_ns_per_vector.map_or("-".to_string(), |v| format!("{v:.3}"));
            let _ = writeln!(
                out,
                "{:>6.3} {:>8} {:>10.4} {:>12.5} {:>10.5} {:>8.1} {:>8.3} {:>10.4} {:>10}",
                r.alpha, r.count, r.d, r.median_distance, r.distance_over_sqrt_n_eta, r.median_iterations, r.within_d, r.wall_time, scan
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gddp_core::lattice::{random_basis, BasisStyle};

    #[test]
    fn baseline_row_and_ratio_column() {
        let b = random_basis(3, &BasisStyle::UniformInteger { bound: 5 }, 3).unwrap();
        let t = bench(&b, &[0.5], &[0, 100], 20, 1).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows[0].scan_ns_per_vector.is_none());
        assert_eq!(t.rows[0].median_iterations, 0.0);
        for r in &t.rows {
            let want = r.median_distance / (3f64.sqrt() * t.eta);
            assert!((r.distance_over_sqrt_n_eta - want).abs() <= 1e-9 * want.abs());
        }
        assert!(t.render().contains("median_dist"));
    }

    #[test]
    fn targets_are_prefix_stable() {
        let b = Basis::identity(2);
        let a = bench_targets(&b, 10, 4);
        let c = bench_targets(&b, 20, 4);
        assert_eq!(&c[..10], &a[..]);
    }
}
