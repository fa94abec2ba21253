//! Epsilon-nets of the unit sphere in dimensions 1 to 4.
//!
//! The sphere is replaced by a probe set of spacing at most the probe
//! resolution; a net is built greedily over the probes and certified to
//! cover every probe. The true covering radius is then at most the probe
//! covering distance plus the resolution.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::dist_sq;
use crate::limits;
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsNet {
    pub n: usize,
    pub eps: f64,
    pub probe_resolution: f64,
    pub points: Vec<Vec<f64>>,
    pub probe_count: usize,
    /// Largest distance from a probe to its nearest net point.
    pub max_probe_distance: f64,
    /// Every probe lies within `eps` of a net point.
    pub covering_certified: bool,
    /// `floor((1 + 2/eps)^n)`, computed exactly.
    #[serde(with = "biguint_string")]
    pub size_bound: BigUint,
    pub within_size_bound: bool,
}

mod biguint_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl EpsNet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Certifies a given point set against the probe set.
    pub fn from_points(n: usize, eps: f64, points: Vec<Vec<f64>>, probe_resolution: f64) -> Result<Self> {
        check_params(n, eps, probe_resolution)?;
        if points.iter().any(|p| p.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: points.iter().map(Vec::len).find(|&l| l != n).unwrap_or(0) });
        }
        let probes = probe_set(n, probe_resolution)?;
        let max_sq = probes
            .iter()
            .map(|q| points.iter().map(|p| dist_sq(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        finish(n, eps, probe_resolution, points, probes.len(), max_sq.sqrt())
    }
}

fn check_params(n: usize, eps: f64, res: f64) -> Result<()> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidParameter(format!("certified nets are supported for n in 1..=4, got {n}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if !(res > 0.0 && res.is_finite()) {
        return Err(Error::InvalidParameter(format!("probe resolution must be positive, got {res}")));
    }
    Ok(())
}

fn size_bound(n: usize, eps: f64) -> Result<BigUint> {
    let base = Rational::one() + rational::int(2) / rational::from_f64(eps)?;
    let mut acc = Rational::one();
    for _ in 0..n {
        acc *= &base;
    }
    Ok(acc.floor().to_integer().to_biguint().expect("positive"))
}

fn finish(n: usize, eps: f64, res: f64, points: Vec<Vec<f64>>, probe_count: usize, max_probe_distance: f64) -> Result<EpsNet> {
    let size_bound = size_bound(n, eps)?;
    let within_size_bound = BigUint::from(points.len()) <= size_bound;
    Ok(EpsNet {
        n,
        eps,
        probe_resolution: res,
        points,
        probe_count,
        max_probe_distance,
        covering_certified: max_probe_distance <= eps,
        size_bound,
        within_size_bound,
    })
}

fn probe_count(n: usize, res: f64) -> f64 {
    let pi = std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => circle_count(res) as f64,
        3 => (8.0 * pi / (res * res)).ceil(),
        _ => {
            let (a, b) = ((pi / res).ceil() + 1.0, (pi / res).ceil() + 1.0);
            a * b * (2.0 * pi / res).ceil()
        }
    }
}

fn circle_count(res: f64) -> usize {
    // arc length 2 pi / m <= res bounds the chord as well
    let m = (2.0 * std::f64::consts::PI / res).ceil() as usize;
    m.div_ceil(4) * 4
}

/// Unit vectors with spacing at most `res`: the two points of `S^0`, a
/// regular polygon, a Fibonacci sphere, or a hyperspherical angle grid.
pub fn probe_set(n: usize, res: f64) -> Result<Vec<Vec<f64>>> {
    check_params(n, 1.0, res)?;
    let needed = probe_count(n, res);
    let cap = limits::probe_cap();
    if needed > cap as f64 {
        return Err(Error::ProbeBudget { needed: needed.min(usize::MAX as f64) as usize, cap });
    }
    let pi = std::f64::consts::PI;
    let probes = match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let m = circle_count(res);
            (0..m)
                .map(|k| {
                    let a = 2.0 * pi * k as f64 / m as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect()
        }
        3 => {
            let m = needed as usize;
            let golden = pi * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|i| {
                    let y = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                    let r = (1.0 - y * y).sqrt();
                    let th = golden * i as f64;
                    vec![r * th.cos(), y, r * th.sin()]
                })
                .collect()
        }
        _ => {
            let mut out = Vec::new();
            let k1 = (pi / res).ceil() as usize;
            for i in 0..=k1 {
                let p1 = pi * i as f64 / k1 as f64;
                let r1 = p1.sin();
                let k2 = ((pi * r1 / res).ceil() as usize).max(1);
                for j in 0..=k2 {
                    let p2 = pi * j as f64 / k2 as f64;
                    let r2 = r1 * p2.sin();
                    let k3 = ((2.0 * pi * r2 / res).ceil() as usize).max(1);
                    for l in 0..k3 {
                        let p3 = 2.0 * pi * l as f64 / k3 as f64;
                        out.push(vec![p1.cos(), r1 * p2.cos(), r2 * p3.cos(), r2 * p3.sin()]);
                    }
                }
            }
            out
        }
    };
    Ok(probes)
}

type Cell = [i64; 4];

fn cell_of(p: &[f64], size: f64) -> Cell {
    let mut c = [0i64; 4];
    for (ci, x) in c.iter_mut().zip(p) {
        *ci = (x / size).floor() as i64;
    }
    c
}

fn neighbors(c: Cell, n: usize) -> impl Iterator<Item = Cell> {
    let total = 3usize.pow(n as u32);
    (0..total).map(move |mut k| {
        let mut out = c;
        for o in out.iter_mut().take(n) {
            *o += (k % 3) as i64 - 1;
            k /= 3;
        }
        out
    })
}

/// Greedy net over the probe set: a probe joins the net when no net point
/// lies within `eps`, so net points are pairwise more than `eps` apart.
pub fn build_eps_net(n: usize, eps: f64, probe_resolution: f64) -> Result<EpsNet> {
    check_params(n, eps, probe_resolution)?;
    let probes = probe_set(n, probe_resolution)?;
    let eps_sq = eps * eps;
    let mut grid: HashMap<Cell, Vec<usize>> = HashMap::new();
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut max_sq = 0.0f64;
    for q in &probes {
        let c = cell_of(q, eps);
        let nearest = neighbors(c, n)
            .filter_map(|nc| grid.get(&nc))
            .flatten()
            .map(|&i| dist_sq(&points[i], q))
            .fold(f64::INFINITY, f64::min);
        if nearest > eps_sq {
            grid.entry(c).or_default().push(points.len());
            points.push(q.clone());
        } else {
            max_sq = max_sq.max(nearest);
        }
    }
    let count = probes.len();
    let net = finish(n, eps, probe_resolution, points, count, max_sq.sqrt())?;
    if !net.within_size_bound {
        log::warn!("net of size {} exceeds the packing bound {}", net.points.len(), net.size_bound);
    }
    Ok(net)
}
