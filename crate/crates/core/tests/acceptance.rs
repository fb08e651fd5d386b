//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Expected values marked "frozen" were computed with independent
//! high-precision (60-digit) evaluations of the same formulas, or by the
//! enumeration oracles in this file.

use permsum_core::array::{ArraySpec, CellDistribution};
use permsum_core::bounds::{self, SrsSpec, CLT_CONSTANT};
use permsum_core::exact::{self, AtomicDistribution};
use permsum_core::perm::{self, derive_stream, Permutation};
use permsum_core::stein::{normal_cdf, stein_solution, STEIN_SUP};
use rand::Rng;
use std::time::Instant;

fn report(criterion: &str, pass: bool, detail: &str, elapsed_ms: f64, budget_ms: f64) {
    let timing = format!("{elapsed_ms:.2} ms (budget {budget_ms} ms)");
    println!(
        "criterion {criterion}: {} — {detail} [{timing}]",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
    assert!(
        elapsed_ms <= budget_ms,
        "criterion {criterion} exceeded its runtime budget: {timing}"
    );
}

/// Seeded random matrix with exactly vanishing row/column means.
fn random_centered(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = derive_stream(seed, 0);
    let mut c: Vec<Vec<f64>> =
        (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let row: Vec<f64> = c.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let col: Vec<f64> = (0..n).map(|j| c.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let grand = row.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            c[i][j] += grand - row[i] - col[j];
        }
    }
    c
}

#[test]
fn criterion_01_constant_certification() {
    let start = Instant::now();
    let value = bounds::final_coefficient(203_000, 451.0).unwrap();
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    report(
        "01 constant_certification",
        value < 451.0 && value > 445.0,
        &format!("final coefficient at n=203000 is {value:.9} (< 451, sanity band (445, 451))"),
        elapsed,
        1.0,
    );
}

#[test]
fn criterion_02_monotonicity() {
    let start = Instant::now();
    let grid = [203_000u64, 300_000, 1_000_000, 10_000_000];
    let mut ok = true;
    let mut prev: Option<(f64, f64, f64, f64)> = None;
    for &n in &grid {
        let k = bounds::concentration_constants(n, 2, 451.0).unwrap();
        let f = bounds::final_coefficient(n, 451.0).unwrap();
        let cur = (k.c1, k.c2, k.c3, f);
        if let Some(p) = prev {
            ok &= cur.0 < p.0 && cur.1 < p.1 && cur.2 < p.2 && cur.3 < p.3;
        }
        prev = Some(cur);
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    report(
        "02 monotonicity",
        ok,
        "c1, c2, c3 and the final coefficient strictly decrease over n in {203000, 3e5, 1e6, 1e7}",
        elapsed,
        1.0,
    );
}

#[test]
fn criterion_03_threshold_consistency() {
    let start = Instant::now();
    let threshold = bounds::trivial_threshold(451.0);
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    // below and at the threshold gamma <= 1/451 is impossible (the bound is
    // trivially true); from 203000 the coefficient computation applies, so
    // together they cover every n >= 2
    report(
        "03 threshold_consistency",
        threshold >= 203_000 && threshold == 203_397,
        &format!("trivial-case threshold is {threshold} (>= 203000; frozen integer search gives 203397)"),
        elapsed,
        10.0,
    );
}

#[test]
fn criterion_04_variance_formula_oracle() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for idx in 0..100u64 {
        let n = 2 + (idx as usize % 6);
        let c = random_centered(n, 40_000 + idx);
        let summary = ArraySpec::deterministic(&c).unwrap().summarize().unwrap();
        let dist = exact::exact_w_distribution(&c).unwrap();
        worst = worst.max((summary.var_w - dist.variance()).abs());
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    report(
        "04 variance_formula_oracle",
        worst <= 1e-10,
        &format!("variance identity vs enumeration on 100 centered arrays (n in 2..=7): max gap {worst:.3e}"),
        elapsed,
        5_000.0,
    );
}

#[test]
fn criterion_05_linearity_condition() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for idx in 0..100u64 {
        let n = 2 + (idx as usize % 6);
        let c = random_centered(n, 40_000 + idx);
        worst = worst.max(exact::verify_linearity(&c).unwrap());
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    report(
        "05 linearity_condition",
        worst <= 1e-10,
        &format!("E(W'-W | W) = -2/(n-1) W with zero remainder on the same corpus: max residual {worst:.3e}"),
        elapsed,
        10_000.0,
    );
}

#[test]
fn criterion_06_coupling_law() {
    let start = Instant::now();
    let mut checked = 0usize;
    for n in 3..=5usize {
        let factorial: usize = (1..=n).product();
        let all = all_permutations(n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for k in 0..n {
                    for l in 0..n {
                        if k == l {
                            continue;
                        }
                        let mut counts = std::collections::HashMap::new();
                        for images in &all {
                            let p = Permutation::new(images.clone()).unwrap();
                            let q = p.couple(i, j, k, l).unwrap();
                            assert_eq!(q.image(i), k);
                            assert_eq!(q.image(j), l);
                            *counts.entry(q.images().to_vec()).or_insert(0usize) += 1;
                        }
                        // uniform on the conditioned set: (n-2)! targets,
                        // each hit exactly n(n-1) times
                        assert_eq!(counts.len(), factorial / (n * (n - 1)));
                        for count in counts.values() {
                            assert_eq!(*count, n * (n - 1));
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    report(
        "06 coupling_law",
        checked == 36 + 144 + 400,
        &format!("pushforward equals the conditioned uniform law exactly for all {checked} index tuples, n in 3..=5"),
        elapsed,
        5_000.0,
    );
}

#[test]
fn criterion_07_concentration_inequality() {
    let start = Instant::now();
    let intervals = [(-0.5, 0.5), (-1.0, 1.0), (-0.25, 0.25), (0.1, 0.9), (-2.0, -0.3)];
    let mut applicable_count = 0usize;
    for idx in 0..20u64 {
        let n = 4 + (idx as usize % 6); // 4..=9
        let raw = random_centered(n, 70_000 + idx);
        // scale so that the reduced statistic has E S^2 = 1, keeping the
        // applicability premise comfortably positive
        let es2 = exact::exact_s_statistics(&raw, 2).unwrap().es2;
        let scale = 1.0 / es2.sqrt();
        let c: Vec<Vec<f64>> =
            raw.iter().map(|row| row.iter().map(|v| v * scale).collect()).collect();
        for &(a, b) in &intervals {
            let chk = exact::exact_concentration_check(&c, 2, a, b, 451.0).unwrap();
            assert!(
                chk.inequality_ok,
                "instance {idx} (n = {n}), interval [{a}, {b}]: lhs = {} > rhs = {}",
                chk.lhs, chk.rhs_lemma
            );
            if chk.applicable {
                applicable_count += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    report(
        "07 concentration_inequality",
        applicable_count > 50,
        &format!("exact lhs <= rhs on 20 instances x 5 intervals ({applicable_count}/100 with the premise satisfied)"),
        elapsed,
        60_000.0,
    );
}

#[test]
fn criterion_08_ks_reproduction() {
    let start = Instant::now();
    // the standardized 2x2 array whose statistic is +/-1 with probability 1/2
    let c = vec![vec![0.5, -0.5], vec![-0.5, 0.5]];
    let dist = exact::exact_w_distribution(&c).unwrap();
    let ks_exact = dist.ks_to_normal();
    let reference = 0.341_344_746_1; // Phi(1) - 1/2
    let exact_ok = (ks_exact - reference).abs() <= 1e-10;

    let array = ArraySpec::deterministic(&c).unwrap();
    let est = perm::mc_ks_distance(&array, 100_000, 8, 0.01).unwrap();
    let mc_ok = (est.ks - ks_exact).abs() <= est.dkw_eps;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    report(
        "08 ks_reproduction",
        exact_ok && mc_ok,
        &format!(
            "exact KS {ks_exact:.10} matches Phi(1)-1/2; Monte Carlo {:.6} within DKW {:.6}",
            est.ks, est.dkw_eps
        ),
        elapsed,
        5_000.0,
    );
}

#[test]
fn criterion_09_certificate_soundness() {
    // At desk scale the certified bound cannot be sharp: a standardized
    // array has gamma >= (n-1)^{3/2}/n^2, so 451 gamma >= 1 for every n
    // reachable by simulation and the inequality holds with huge slack.
    // This property check is the stated acceptance substitute.
    let start = Instant::now();
    let mut max_ratio: f64 = 0.0;
    for idx in 0..20u64 {
        let n = [20usize, 50, 100][idx as usize % 3];
        let array = random_mixed_array(n, 90_000 + idx);
        let standardized = array.center().unwrap().standardize().unwrap();
        let summary = standardized.summarize().unwrap();
        let est = perm::mc_ks_distance(&standardized, 2_000, 90_000 + idx, 0.05).unwrap();
        let bound = CLT_CONSTANT * summary.gamma;
        assert!(
            est.ks - est.dkw_eps <= bound,
            "instance {idx}: ks - eps = {} exceeds 451 gamma = {bound}",
            est.ks - est.dkw_eps
        );
        max_ratio = max_ratio.max((est.ks - est.dkw_eps) / bound);
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    report(
        "09 certificate_soundness",
        max_ratio <= 1.0,
        &format!("ks - dkw_eps <= 451 gamma on 20 standardized arrays (max ratio {max_ratio:.4})"),
        elapsed,
        60_000.0,
    );
}

#[test]
fn criterion_10_stein_bounds() {
    let start = Instant::now();
    let mut max_f: f64 = 0.0;
    let mut max_fp: f64 = 0.0;
    let steps_z = (8.0 * 64.0) as i32;
    let steps_w = (16.0 * 64.0) as i32;
    for zi in 0..=steps_z {
        let z = -4.0 + zi as f64 / 64.0;
        for wi in 0..=steps_w {
            let w = -8.0 + wi as f64 / 64.0;
            let (f, fp) = stein_solution(z, w);
            max_f = max_f.max(f.abs());
            max_fp = max_fp.max(fp.abs());
        }
    }
    let grid_ok = max_f <= STEIN_SUP + 1e-12 && max_fp <= 1.0 + 1e-9;

    // difference bound: |(w+u)f(w+u) - (w+v)f(w+v)| <= (|w| + sup)(|u| + |v|)
    let mut rng = derive_stream(10_010, 0);
    let mut diff_ok = true;
    for _ in 0..10_000 {
        let z: f64 = rng.random_range(-3.0..3.0);
        let w: f64 = rng.random_range(-3.0..3.0);
        let u: f64 = rng.random_range(-3.0..3.0);
        let v: f64 = rng.random_range(-3.0..3.0);
        let (fu, _) = stein_solution(z, w + u);
        let (fv, _) = stein_solution(z, w + v);
        let lhs = ((w + u) * fu - (w + v) * fv).abs();
        let rhs = (w.abs() + STEIN_SUP) * (u.abs() + v.abs());
        diff_ok &= lhs <= rhs + 1e-12;
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    report(
        "10 stein_bounds",
        grid_ok && diff_ok,
        &format!("grid sup |f| = {max_f:.12} <= sqrt(2pi)/4, sup |f'| = {max_fp:.12} <= 1; difference bound on 1e4 tuples"),
        elapsed,
        5_000.0,
    );
}

#[test]
fn criterion_11_corollary_crosscheck() {
    let start = Instant::now();
    // route equality on random mixed sources for every (n, k), n <= 6
    let mut worst_rel: f64 = 0.0;
    for n in 2..=6usize {
        for k in 1..=n {
            let spec = random_srs_spec(n, k, (110_000 + 10 * n + k) as u64);
            let direct = bounds::srs_bound(&spec).unwrap();
            let standardized = spec.row_copy_array().unwrap().center().unwrap().standardize().unwrap();
            let via_array = bounds::theorem_bound(&standardized.summarize().unwrap()).bound;
            worst_rel = worst_rel.max((direct - via_array).abs() / direct);
        }
    }
    let routes_ok = worst_rel <= 1e-9;

    // exact law equality for deterministic sources: the permutation sum over
    // the row-copy array has the law of the without-replacement sum
    let mut laws_ok = true;
    for n in 2..=6usize {
        for k in 1..=n {
            let mut rng = derive_stream((120_000 + 10 * n + k) as u64, 0);
            let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let spec =
                SrsSpec::new(n, k, mu.iter().map(|&v| CellDistribution::point(v)).collect()).unwrap();
            let w_law =
                exact::exact_w_distribution(&spec.row_copy_array().unwrap().mean_matrix()).unwrap();
            let v_law = subset_sum_law(&mu, k);
            laws_ok &= atomwise_equal(&w_law, &v_law, 1e-12);
        }
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    report(
        "11 corollary_crosscheck",
        routes_ok && laws_ok,
        &format!("direct bound vs row-copy pipeline: max relative gap {worst_rel:.3e}; sampling laws coincide atomwise"),
        elapsed,
        10_000.0,
    );
}

#[test]
fn criterion_12_normal_cdf_reference() {
    let start = Instant::now();
    // frozen 60-digit references
    let refs = [
        (0.0, 0.5),
        (0.5, 0.691_462_461_274_013_1),
        (-0.5, 0.308_537_538_725_986_9),
        (1.0, 0.841_344_746_068_542_9),
        (-1.0, 0.158_655_253_931_457_05),
        (1.96, 0.975_002_104_851_779_6),
        (-1.96, 0.024_997_895_148_220_434),
        (3.0, 0.998_650_101_968_369_9),
        (-3.0, 0.001_349_898_031_630_094_5),
    ];
    let mut worst: f64 = 0.0;
    for &(x, want) in &refs {
        worst = worst.max((normal_cdf(x) - want).abs());
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    report(
        "12 normal_cdf_reference",
        worst <= 1e-12,
        &format!("max absolute error {worst:.3e} over x in {{0, +/-0.5, +/-1, +/-1.96, +/-3}}"),
        elapsed,
        1.0,
    );
}

// ---- oracle helpers (independent of the library paths they check) ----

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    fn recurse(k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == current.len() {
            out.push(current.clone());
            return;
        }
        for i in k..current.len() {
            current.swap(k, i);
            recurse(k + 1, current, out);
            current.swap(k, i);
        }
    }
    recurse(0, &mut current, &mut out);
    out
}

/// Law of the sum of a uniformly chosen k-subset of the given values.
fn subset_sum_law(values: &[f64], k: usize) -> AtomicDistribution {
    let mut sums = Vec::new();
    fn choose(values: &[f64], start: usize, left: usize, acc: f64, sums: &mut Vec<f64>) {
        if left == 0 {
            sums.push(acc);
            return;
        }
        for i in start..=values.len() - left {
            choose(values, i + 1, left - 1, acc + values[i], sums);
        }
    }
    choose(values, 0, k, 0.0, &mut sums);
    AtomicDistribution::from_equally_likely(sums).unwrap()
}

fn atomwise_equal(a: &AtomicDistribution, b: &AtomicDistribution, tol: f64) -> bool {
    a.atoms().len() == b.atoms().len()
        && a.atoms()
            .iter()
            .zip(b.atoms())
            .all(|(x, y)| (x.0 - y.0).abs() <= tol && (x.1 - y.1).abs() <= tol)
}

fn random_mixed_array(n: usize, seed: u64) -> ArraySpec {
    let mut rng = derive_stream(seed, 0);
    let cells = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let scale: f64 = rng.random_range(0.2..1.0);
                    match (i * 31 + j * 17) % 4 {
                        0 => CellDistribution::rademacher(scale, rng.random_range(-0.5..0.5)),
                        1 => CellDistribution::normal(rng.random_range(-0.5..0.5), scale),
                        2 => CellDistribution::uniform(-scale, scale + rng.random_range(0.0..0.5)),
                        _ => CellDistribution::discrete(vec![
                            (-scale, 0.25),
                            (0.0, 0.5),
                            (scale, 0.25),
                        ]),
                    }
                })
                .collect()
        })
        .collect();
    ArraySpec::new(cells).unwrap()
}

fn random_srs_spec(n: usize, k: usize, seed: u64) -> SrsSpec {
    let mut rng = derive_stream(seed, 0);
    let y = (0..n)
        .map(|i| {
            let spread: f64 = rng.random_range(0.3..1.0);
            let center: f64 = rng.random_range(-1.0..1.0);
            match i % 4 {
                0 => CellDistribution::point(center),
                1 => CellDistribution::rademacher(spread, center),
                2 => CellDistribution::uniform(center - spread, center + spread),
                _ => CellDistribution::normal(center, spread),
            }
        })
        .collect();
    SrsSpec::new(n, k, y).unwrap()
}
