//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are evaluated at full strength and
//! reported, but do not fail the test run.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gddp_core::gaussian::{sample_exact, sample_klein, smoothing_parameter, GaussianParam, SampleSet, SamplerKind};
use gddp_core::gddp::{k_multiple_margin_check, preprocess_with_smoothing, query, reduce_step, verify_solution};
use gddp_core::gddp::{GddpParams, MembershipMode, Preprocessing};
use gddp_core::lab::{union_bound_experiment, BoundReport, Corpus};
use gddp_core::lattice::{random_basis, Basis, BasisStyle, Target};
use gddp_core::rational::Rational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::Value;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const KNOWN_UNATTAINABLE: &[u32] = &[9];

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &'static str, pass: bool, detail: String) -> Outcome {
    println!("criterion {id:>2} [{name}]: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    Outcome { id, name, pass, detail }
}

fn failures(reports: &[BoundReport], prefix: &str) -> (usize, usize) {
    let sel: Vec<_> = reports.iter().filter(|r| r.check.starts_with(prefix)).collect();
    (sel.len(), sel.iter().filter(|r| !r.pass).count())
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn criterion_1(corpus: &Corpus, build: Duration) -> Outcome {
    let start = Instant::now();
    let reps = corpus.shift_ratio_sweep(25).unwrap();
    let elapsed = start.elapsed() + build;
    let (total, bad) = failures(&reps, "shift-ratio");
    let ok = total == 60 * 3 * 25 * 2 && bad == 0 && elapsed < Duration::from_secs(120);
    report(1, "shift ratio sandwich", ok, format!("{total} bounds, {bad} violations, {:.1}s", secs(elapsed)))
}

fn criterion_2(corpus: &Corpus) -> Outcome {
    let start = Instant::now();
    let reps = corpus.projection_sweep(10).unwrap();
    let elapsed = start.elapsed();
    let (up, up_bad) = failures(&reps, "projection-tail-upper");
    let (low, low_bad) = failures(&reps, "projection-tail-lower");
    let (mgf, mgf_bad) = failures(&reps, "mgf");
    let below = reps
        .iter()
        .filter(|r| r.check.starts_with("projection-tail-upper") && r.context["s_over_eta"].as_f64().is_some_and(|f| f < 0.99))
        .count();
    let ok = up_bad + low_bad + mgf_bad == 0
        && up == 60 * 4 * 10 * 12
        && low == 60 * 3 * 10 * 12
        && mgf == 60 * 3 * 10 * 3 * 3
        && below == 60 * 10 * 12
        && elapsed < Duration::from_secs(300);
    report(
        2,
        "projection tails and MGF sandwich",
        ok,
        format!(
            "upper {up} ({below} below smoothing), lower {low}, mgf {mgf}; violations {}; {:.1}s",
            up_bad + low_bad + mgf_bad,
            secs(elapsed)
        ),
    )
}

fn criterion_3(corpus: &Corpus) -> Outcome {
    let reps = corpus.closeness_sweep(10).unwrap();
    let (total, bad) = failures(&reps, "closeness");
    let live = reps.iter().filter(|r| r.context["vacuous"] == Value::Bool(false)).count();
    let ok = total == 60 * 3 * 10 * 10 && bad == 0;
    report(3, "closeness probability", ok, format!("{total} bounds, {live} with a positive bound, {bad} violations"))
}

fn criterion_4(corpus: &Corpus) -> Outcome {
    let reps = corpus.banaszczyk_sweep(&[1.0, 2.0]).unwrap();
    let (total, bad) = failures(&reps, "banaszczyk");
    let worst = reps.iter().map(|r| r.lhs / r.bound).fold(0.0, f64::max);
    report(4, "norm tail", total == 120 && bad == 0, format!("{total} bounds, {bad} violations, worst ratio {worst:.3e}"))
}

/// Bisection on `sum_k exp(-pi k^2 s^2) = 3/2`, the dual mass of the integers at width `1/s`.
fn eta_of_integers_oracle() -> f64 {
    let mass = |s: f64| (-60i64..=60).map(|k| (-std::f64::consts::PI * (k as f64 * s).powi(2)).exp()).sum::<f64>();
    let (mut lo, mut hi) = (0.1f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_5(corpus: &Corpus) -> Outcome {
    let reps = corpus.smoothing_sweep().unwrap();
    let (total, bad) = failures(&reps, "smoothing");
    let mut worst_scale: f64 = 0.0;
    for e in &corpus.entries {
        for (p, q) in [(1, 3), (2, 1), (10, 1)] {
            let c = Rational::new(p.into(), q.into());
            let scaled = smoothing_parameter(&e.basis.scaled(&c).unwrap(), 1e-10).unwrap();
            let cf = p as f64 / q as f64;
            worst_scale = worst_scale.max((scaled.eta / (cf * e.smoothing.eta) - 1.0).abs());
        }
    }
    let eta_z = smoothing_parameter(&Basis::identity(1), 1e-10).unwrap().eta;
    let oracle = eta_of_integers_oracle();
    let ok = total == 60 && bad == 0 && worst_scale <= 1e-9 && (eta_z - oracle).abs() <= 1e-3;
    report(
        5,
        "smoothing estimator",
        ok,
        format!(
            "{bad}/{total} off threshold; worst scaling error {worst_scale:.2e}; eta(Z) = {eta_z:.10} vs oracle {oracle:.10}"
        ),
    )
}

/// Goodness of fit with cells of expected count below 5 pooled.
fn chi_square_gof(observed: &BTreeMap<Vec<i64>, usize>, expected_p: &BTreeMap<Vec<i64>, f64>, total: usize) -> f64 {
    let n = total as f64;
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pooled_o, mut pooled_e) = (0.0, 0.0);
    let mut seen = 0usize;
    for (k, &p) in expected_p {
        let o = *observed.get(k).unwrap_or(&0) as f64;
        seen += o as usize;
        if n * p >= 5.0 {
            stat += (o - n * p).powi(2) / (n * p);
            cells += 1;
        } else {
            pooled_o += o;
            pooled_e += n * p;
        }
    }
    pooled_o += (total - seen) as f64;
    pooled_e += n * (1.0 - expected_p.values().sum::<f64>()).max(0.0);
    if pooled_e > 0.0 {
        stat += (pooled_o - pooled_e).powi(2) / pooled_e;
        cells += 1;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

/// Homogeneity of two equal-size samples over cells with combined count at least 10.
fn chi_square_two_sample(a: &BTreeMap<Vec<i64>, usize>, b: &BTreeMap<Vec<i64>, usize>) -> f64 {
    let mut keys: Vec<&Vec<i64>> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut ra, mut rb) = (0.0, 0.0);
    for k in keys {
        let x = *a.get(k).unwrap_or(&0) as f64;
        let y = *b.get(k).unwrap_or(&0) as f64;
        if x + y >= 10.0 {
            stat += (x - y).powi(2) / (x + y);
            cells += 1;
        } else {
            ra += x;
            rb += y;
        }
    }
    if ra + rb > 0.0 {
        stat += (ra - rb).powi(2) / (ra + rb);
        cells += 1;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

fn histogram(set: &SampleSet) -> BTreeMap<Vec<i64>, usize> {
    let mut h = BTreeMap::new();
    for v in &set.samples {
        *h.entry(v.coeffs.clone()).or_insert(0) += 1;
    }
    h
}

/// Discrete Gaussian on `Z^n` from one-dimensional series, coordinates in `[-r, r]`.
fn integer_lattice_law(n: usize, s: f64, r: i64) -> BTreeMap<Vec<i64>, f64> {
    let w = |k: i64| (-std::f64::consts::PI * (k * k) as f64 / (s * s)).exp();
    let z: f64 = (-400..=400).map(w).sum();
    let mut out = BTreeMap::new();
    let mut idx = vec![-r; n];
    loop {
        out.insert(idx.clone(), idx.iter().map(|&k| w(k) / z).product());
        let mut i = 0;
        while i < n && idx[i] == r {
            idx[i] = -r;
            i += 1;
        }
        if i == n {
            break;
        }
        idx[i] += 1;
    }
    out
}

fn criterion_6() -> Outcome {
    let count = 100_000;
    let mut pvals = Vec::new();
    for n in [1usize, 2] {
        let s = 2.0;
        let set = sample_exact(&Basis::identity(n), GaussianParam::new(s).unwrap(), count, 11 + n as u64).unwrap();
        pvals.push((format!("exact Z^{n}"), chi_square_gof(&histogram(&set), &integer_lattice_law(n, s, 12), count)));
    }
    let z2 = Basis::identity(2);
    let s = 3.0 * z2.gram_schmidt().norms.iter().fold(0.0f64, |m, &x| m.max(x.sqrt()));
    let gp = GaussianParam::new(s).unwrap();
    let klein = sample_klein(&z2, gp, count, 21).unwrap();
    let exact = sample_exact(&z2, gp, count, 22).unwrap();
    pvals.push(("klein vs exact Z^2".into(), chi_square_two_sample(&histogram(&klein), &histogram(&exact))));
    pvals.push(("klein vs law Z^2".into(), chi_square_gof(&histogram(&klein), &integer_lattice_law(2, s, 20), count)));
    let ok = pvals.iter().all(|(_, p)| *p > 1e-3);
    let detail = pvals.iter().map(|(k, p)| format!("{k}: p = {p:.4}")).collect::<Vec<_>>().join(", ");
    report(6, "sampler fidelity", ok, detail)
}

fn targets(basis: &Basis, count: usize, seed: u64) -> Vec<Target> {
    let rows = basis.reduction().basis.float_rows().to_vec();
    let n = basis.n();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            Target::new((0..n).map(|k| (0..n).map(|i| u[i] * rows[i][k]).sum()).collect()).unwrap()
        })
        .collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 { xs[m] } else { 0.5 * (xs[m - 1] + xs[m]) }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    let (mut queries, mut steps, mut improved) = (0usize, 0usize, 0usize);
    for i in 0..20u64 {
        let n = 2 + (i % 7) as usize;
        let basis = random_basis(n, &BasisStyle::UniformInteger { bound: 10 }, 7000 + i).unwrap();
        let smoothing = smoothing_parameter(&basis, 1e-10).unwrap();
        let babai_sq: f64 = basis.reduction().basis.gram_schmidt().norms.iter().sum::<f64>() / 4.0;
        let ts = targets(&basis, 100, 9000 + i);
        let mut medians = Vec::new();
        for count in [100usize, 10_000] {
            let prep = preprocess_with_smoothing(&basis, 0.5, Some(count), 100 + i, smoothing).unwrap();
            let mut dists = Vec::new();
            for t in &ts {
                let sol = query(&prep, t).unwrap();
                let tr = &sol.trace;
                queries += 1;
                steps += tr.steps.len();
                let n_sq = (n * n) as f64;
                let exact_contraction = tr
                    .steps
                    .iter()
                    .all(|s| s.norm_sq_after <= (1.0 - 1.0 / n_sq) * s.norm_sq_before && s.norm_sq_after < s.norm_sq_before);
                if !exact_contraction || !tr.contraction_holds() {
                    problems.push(format!("lattice {i}: contraction"));
                }
                if tr.steps.len() > 100 * n * n * n {
                    problems.push(format!("lattice {i}: iteration cap"));
                }
                let verdict = verify_solution(&basis, t, &sol.y.embedding, prep.params.d).unwrap();
                if !verdict.member || verdict.membership_mode != Some(MembershipMode::Exact) {
                    problems.push(format!("lattice {i}: membership"));
                }
                let t0_sq: f64 = tr.t0.iter().map(|x| x * x).sum();
                if sol.distance > babai_sq.sqrt() + 1e-9 || sol.distance > t0_sq.sqrt() + 1e-9 {
                    problems.push(format!("lattice {i}: distance {} above Babai bound {}", sol.distance, babai_sq.sqrt()));
                }
                if sol.distance < t0_sq.sqrt() - 1e-12 {
                    improved += 1;
                }
                dists.push(sol.distance);
            }
            medians.push(median(dists));
        }
        if medians[1] > medians[0] {
            problems.push(format!("lattice {i}: median rose from {} to {}", medians[0], medians[1]));
        }
    }
    let elapsed = start.elapsed();
    let ok = problems.is_empty() && elapsed < Duration::from_secs(600);
    report(
        7,
        "decoder contract",
        ok,
        format!(
            "{queries} queries, {steps} steps, {improved} improved on the nearest-plane start, {} problems{}, {:.1}s",
            problems.len(),
            problems.first().map_or(String::new(), |p| format!(" (first: {p})")),
            secs(elapsed)
        ),
    )
}

fn single_vector_prep(basis: &Basis, coeffs: Vec<i64>, smoothing: gddp_core::gaussian::SmoothingEstimate) -> Preprocessing {
    let s = smoothing.bracket.1;
    let set = SampleSet {
        samples: vec![basis.vector(coeffs).unwrap()],
        s: GaussianParam::new(s).unwrap(),
        sampler: SamplerKind::Exact,
        seed: 0,
        stat_distance_bound: None,
        basis_hash: basis.hash(),
    };
    let params = GddpParams::new(basis.n(), 0.5, s, 1).unwrap();
    Preprocessing::from_parts(basis.clone(), params, set, smoothing, None).unwrap()
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let basis = random_basis(2, &BasisStyle::UniformInteger { bound: 5 }, 8).unwrap();
    let smoothing = smoothing_parameter(&basis, 1e-10).unwrap();
    let mut mismatches = 0;
    let mut accepted = 0;
    for _ in 0..1000 {
        let c = vec![rng.random_range(-3i64..=3), rng.random_range(-3i64..=3)];
        let prep = single_vector_prep(&basis, c, smoothing);
        let y = prep.vectors.samples[0].embedding.clone();
        let t: Vec<f64> = (0..2).map(|_| rng.random_range(-20.0..20.0)).collect();
        let before: f64 = t.iter().map(|x| x * x).sum();
        let ny: f64 = y.iter().map(|x| x * x).sum();
        let brute = ny > 0.0 && {
            let kmax = (2.0 * before.sqrt() / ny.sqrt()).ceil() as i64 + 1;
            (-kmax..=kmax).any(|k| {
                let after: f64 = t.iter().zip(&y).map(|(a, b)| (a - k as f64 * b).powi(2)).sum();
                after <= 0.75 * before && after < before
            })
        };
        let got = reduce_step(&t, &prep).is_some();
        accepted += got as usize;
        mismatches += (got != brute) as usize;
    }
    let mut violations = 0;
    let mut inapplicable = 0;
    for j in 0..1000 {
        let n = [5usize, 10, 20][j % 3];
        let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nt = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        t.iter_mut().for_each(|x| *x /= nt);
        let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let radius = (1.0 - 4.0 / (n * n) as f64).sqrt() * rng.random::<f64>();
        u.iter_mut().for_each(|x| *x *= radius / nu);
        let y: Vec<f64> = t.iter().zip(&u).map(|(a, b)| a + b).collect();
        let beta = rng.random_range(2.0..16.0);
        let r = k_multiple_margin_check(&t, &y, beta);
        inapplicable += (!r.applicable) as usize;
        violations += r.violations;
    }
    let ok = mismatches == 0 && violations == 0 && inapplicable == 0;
    report(
        8,
        "reduce step oracle and k-multiple margin",
        ok,
        format!("{mismatches}/1000 mismatches ({accepted} accepted); {violations} margin violations, {inapplicable} inapplicable"),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let r = union_bound_experiment(&Basis::identity(2), 0.5, 1).unwrap();
    let elapsed = start.elapsed();
    let ok = r.chain.pass && r.n_required.is_some() && elapsed < Duration::from_secs(180);
    let mut detail = format!(
        "net of {} points at eps {:.4}; min p = {:e} (certified >= {:e}) vs chain bound {:e}; N required {}; {:.1}s",
        r.net_size,
        r.net_eps,
        r.min_p,
        r.min_p_lo,
        r.chain_bound,
        r.n_required.map_or("none".into(), |v| format!("{v:e}")),
        secs(elapsed)
    );
    if r.radius_sq < 0.0 {
        detail.push_str(&format!(
            "; success radius squared 1 - 5/n^2 = {} is negative at n = 2, so no sample is ever close enough and every p_j is 0",
            r.radius_sq
        ));
    }
    report(9, "union-bound miniature", ok, detail)
}

fn gddp(dir: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_gddp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("run gddp")
        .status
        .code()
        .unwrap_or(-1)
}

fn artifact_run(dir: &Path) -> Vec<(String, i32)> {
    let steps: &[&[&str]] = &[
        &["gen", "--n", "4", "--seed", "7", "--out", "basis.json"],
        &["eta", "--basis", "basis.json", "--out", "eta.json"],
        &["preprocess", "--basis", "basis.json", "--alpha", "0.5", "--N", "2000", "--seed", "3", "--out", "prep.json"],
        &["target", "--basis", "basis.json", "--seed", "5", "--out", "target.json"],
        &["query", "--prep", "prep.json", "--target", "target.json", "--trace", "trace.json", "--out", "sol.json"],
        &["verify", "--prep", "prep.json", "--target", "target.json", "--solution", "sol.json", "--out", "verdict.json"],
        &["lemmas", "--corpus", "quick", "--out", "lemmas.json"],
        &["union", "--n", "2", "--out", "union.json"],
    ];
    steps.iter().map(|a| (a[0].to_string(), gddp(dir, a))).collect()
}

fn criterion_10() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let codes_a = artifact_run(a.path());
    let codes_b = artifact_run(b.path());
    let files = ["basis", "eta", "prep", "target", "trace", "sol", "verdict", "lemmas", "union"];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| {
            let name = format!("{f}.json");
            let x = std::fs::read(a.path().join(&name)).ok();
            x.is_none() || x != std::fs::read(b.path().join(&name)).ok()
        })
        .collect();
    let pipeline_ok = codes_a == codes_b
        && codes_a.iter().all(|(cmd, code)| *code == 0 || (cmd == "union" && *code == 1));

    let out = Command::new(env!("CARGO_BIN_EXE_gddp"))
        .args(["bench", "--n", "6", "--alphas", "0.5", "--N", "100,1000,10000", "--targets", "50", "--seed", "1", "--json"])
        .output()
        .unwrap();
    let table: Value = serde_json::from_slice(&out.stdout).unwrap();
    let per: Vec<f64> =
        table["payload"]["rows"].as_array().unwrap().iter().map(|r| r["scan_ns_per_vector"].as_f64().unwrap()).collect();
    let reference = per[per.len() - 1];
    let ratios: Vec<f64> = per.iter().map(|p| p / reference).collect();
    let linear = ratios.iter().all(|r| (0.5..=2.0).contains(r));
    let ok = differing.is_empty() && pipeline_ok && linear;
    report(
        10,
        "reproducibility and linear scan time",
        ok,
        format!(
            "{} of {} artifacts differ{}; exit codes {:?}; ns per list entry at N = 100, 1000, 10000: {:?}, ratios to N = 10000 {:?}",
            differing.len(),
            files.len(),
            if differing.is_empty() { String::new() } else { format!(" {differing:?}") },
            codes_a.iter().map(|(_, c)| *c).collect::<Vec<_>>(),
            per.iter().map(|p| (p * 100.0).round() / 100.0).collect::<Vec<_>>(),
            ratios.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let corpus = Corpus::standard().unwrap();
    let build = start.elapsed();
    let outcomes = vec![
        criterion_1(&corpus, build),
        criterion_2(&corpus),
        criterion_3(&corpus),
        criterion_4(&corpus),
        criterion_5(&corpus),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ];
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria pass", outcomes.len());
    for o in outcomes.iter().filter(|o| !o.pass && KNOWN_UNATTAINABLE.contains(&o.id)) {
        println!("criterion {} [{}] is unattainable at this size and is reported, not enforced", o.id, o.name);
    }
    let unexpected: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.pass && !KNOWN_UNATTAINABLE.contains(&o.id))
        .map(|o| format!("criterion {} [{}]: {}", o.id, o.name, o.detail))
        .collect();
    if !unexpected.is_empty() {
        eprintln!("unexpected failures:\n{}", unexpected.join("\n"));
        std::process::exit(1);
    }
}
