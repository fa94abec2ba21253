use std::collections::BTreeMap;

use gddp_core::gaussian::{klein_threshold, sample_exact, sample_klein, GaussianParam};
use gddp_core::lattice::Basis;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// One-dimensional discrete Gaussian on the integers over `[-r, r]`.
fn integer_law(s: f64, r: i64) -> BTreeMap<i64, f64> {
    let w = |k: i64| (-std::f64::consts::PI * (k * k) as f64 / (s * s)).exp();
    let z: f64 = (-400..=400).map(w).sum();
    (-r..=r).map(|k| (k, w(k) / z)).collect()
}

fn p_value(counts: &BTreeMap<i64, usize>, law: &BTreeMap<i64, f64>, total: usize) -> f64 {
    let n = total as f64;
    let (mut stat, mut cells, mut rest_o, mut rest_e) = (0.0, 0usize, total as f64, n);
    for (k, &p) in law {
        if n * p >= 5.0 {
            let o = *counts.get(k).unwrap_or(&0) as f64;
            stat += (o - n * p).powi(2) / (n * p);
            cells += 1;
            rest_o -= o;
            rest_e -= n * p;
        }
    }
    if rest_e > 1e-9 {
        stat += (rest_o - rest_e).powi(2) / rest_e;
        cells += 1;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn exact_sampler_fits_the_integer_law() {
    for (s, seed) in [(0.8, 1u64), (2.0, 2), (5.0, 3)] {
        let set = sample_exact(&Basis::identity(1), GaussianParam::new(s).unwrap(), 50_000, seed).unwrap();
        let mut counts = BTreeMap::new();
        for v in &set.samples {
            *counts.entry(v.coeffs[0]).or_insert(0) += 1;
        }
        let p = p_value(&counts, &integer_law(s, 60), set.len());
        assert!(p > 1e-3, "s = {s}: p = {p}");
    }
}

#[test]
fn klein_sampler_fits_the_integer_law_per_coordinate() {
    let s = 3.0;
    let set = sample_klein(&Basis::identity(2), GaussianParam::new(s).unwrap(), 50_000, 9).unwrap();
    for axis in 0..2 {
        let mut counts = BTreeMap::new();
        for v in &set.samples {
            *counts.entry(v.coeffs[axis]).or_insert(0) += 1;
        }
        let p = p_value(&counts, &integer_law(s, 60), set.len());
        assert!(p > 1e-3, "axis {axis}: p = {p}");
    }
}

#[test]
fn sample_sets_are_prefix_stable() {
    let b = Basis::from_integer_rows(&[vec![2, 1], vec![1, 3]], "test").unwrap();
    let gp = GaussianParam::new(klein_threshold(&b, 1.0)).unwrap();
    let short = sample_exact(&b, gp, 1500, 5).unwrap();
    let long = sample_exact(&b, gp, 5000, 5).unwrap();
    assert_eq!(&long.samples[..1500], &short.samples[..]);
    let short = sample_klein(&b, gp, 1500, 5).unwrap();
    let long = sample_klein(&b, gp, 5000, 5).unwrap();
    assert_eq!(&long.samples[..1500], &short.samples[..]);
}
