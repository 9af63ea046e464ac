#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use tdpauc::data::{read_cohort, write_cohort};
use tdpauc::inference::multiplier_critical_value;
use tdpauc::pauc::{pauc_censored_with, PaucFit};
use tdpauc::{
    compare_paucs, conditional_km, covariance, Cohort, ColumnMap, CompareConfig, JointSurvivor,
    PairMethod, TimeGrid,
};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Random cohort with distinct continuous markers; the first record is always
/// an event so the cohort is valid.
pub fn random_cohort(seed: u64, n: usize, censor_prob: f64) -> Cohort {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    let mut markers = Vec::with_capacity(n);
    for i in 0..n {
        let y: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(Exp1);
        times.push(e * (-0.7 * y).exp());
        events.push(i == 0 || rng.random::<f64>() >= censor_prob);
        markers.push(y);
    }
    Cohort::from_columns(&times, &events, &markers).unwrap()
}

/// Observed times at interior positions of the sorted sample; each has both
/// subjects with `X ≤ t` and subjects with `X > t`.
pub fn interior_grid(cohort: &Cohort) -> TimeGrid {
    let mut t: Vec<f64> = cohort.records().iter().map(|r| r.time).collect();
    t.sort_by(f64::total_cmp);
    let n = t.len();
    let mut pts: Vec<f64> = [0.3, 0.5, 0.7].iter().map(|p| t[((n as f64 * p) as usize).clamp(1, n - 2)]).collect();
    pts.dedup();
    TimeGrid::new(pts).unwrap()
}

/// Grid at event times in the middle of the sample, for censored cohorts
/// where the weights are smooth but must still be nondegenerate.
pub fn event_grid(cohort: &Cohort) -> TimeGrid {
    let mut t: Vec<f64> = cohort.records().iter().filter(|r| r.event).map(|r| r.time).collect();
    t.sort_by(f64::total_cmp);
    let m = t.len();
    let mut pts: Vec<f64> = [0.3, 0.5].iter().map(|p| t[((m as f64 * p) as usize).min(m - 1)]).collect();
    pts.dedup();
    TimeGrid::new(pts).unwrap()
}

/// Bandwidth whose window holds only the subject itself.
pub fn degenerate_bandwidth(n: usize) -> f64 {
    0.5 / n as f64
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let k = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..k).flat_map(|p| (0..k).filter(move |&q| q != p).map(move |q| (p, q))).map(|(p, q)| a[p][q] * a[p][q]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let (arp, arq) = (a[r][p], a[r][q]);
                    a[r][p] = c * arp - s * arq;
                    a[r][q] = s * arp + c * arq;
                }
                for r in 0..k {
                    let (apr, aqr) = (a[p][r], a[q][r]);
                    a[p][r] = c * apr - s * aqr;
                    a[q][r] = s * apr + c * aqr;
                }
            }
        }
    }
    (0..k).map(|i| a[i][i]).collect()
}

/// Largest discrepancy between the censored estimator under the degenerate
/// bandwidth and the complete-data estimator: `(theta, influence)`.
pub fn oracle_discrepancy(cohort: &Cohort, grid: &TimeGrid, alphas: &[f64]) -> (f64, f64) {
    let lambda = degenerate_bandwidth(cohort.len());
    let surface = conditional_km(cohort, lambda, grid).unwrap().without_martingale_term();
    let censored = PaucFit::from_surface(cohort, &surface).unwrap();
    let complete = PaucFit::complete(cohort, grid).unwrap();
    let joint = JointSurvivor::new(&surface, cohort).unwrap();
    let mut d_theta = 0.0f64;
    let mut d_infl = 0.0f64;
    for &alpha in alphas {
        for (k, &t) in grid.points().iter().enumerate() {
            let a = tdpauc::pauc_censored(&surface, &joint, cohort, t, alpha).unwrap();
            let b = tdpauc::pauc_complete(cohort, t, alpha).unwrap();
            d_theta = d_theta.max((a.theta - b.theta).abs());
            let c = censored.estimate(k, alpha).unwrap();
            d_theta = d_theta.max((c.theta - b.theta).abs());
        }
        let ia = censored.influence(alpha).unwrap();
        let ib = complete.influence(alpha).unwrap();
        for k in 0..grid.len() {
            for i in 0..cohort.len() {
                d_infl = d_infl.max((ia.value(i, k) - ib.value(i, k)).abs());
            }
        }
    }
    (d_theta, d_infl)
}

pub fn check_oracle(seed: u64, n: usize) -> Check {
    let c = random_cohort(seed, n, 0.0);
    let (d_theta, d_infl) = oracle_discrepancy(&c, &interior_grid(&c), &[0.1, 0.3, 0.7, 1.0]);
    ensure!(d_theta <= 1e-12, "seed {seed}: theta differs by {d_theta:e}");
    ensure!(d_infl <= 1e-10, "seed {seed}: influence differs by {d_infl:e}");
    Ok(())
}

pub fn check_prefix_vs_loop(seed: u64, n: usize, lambda: f64) -> Check {
    let c = random_cohort(seed, n, 0.3);
    let grid = event_grid(&c);
    let surface = conditional_km(&c, lambda, &grid).unwrap();
    let joint = JointSurvivor::new(&surface, &c).unwrap();
    for &t in grid.points() {
        for &alpha in &[0.05, 0.2, 0.5, 1.0] {
            let Ok(fast) = pauc_censored_with(&surface, &joint, &c, t, alpha, PairMethod::PrefixSum) else {
                continue;
            };
            let slow = pauc_censored_with(&surface, &joint, &c, t, alpha, PairMethod::PairLoop).unwrap();
            let d = (fast.theta - slow.theta).abs();
            ensure!(d <= 1e-12, "seed {seed}: pair loop differs by {d:e}");
        }
    }
    Ok(())
}

fn transformed(cohort: &Cohort, f: impl Fn(f64) -> f64) -> Cohort {
    let times: Vec<f64> = cohort.records().iter().map(|r| r.time).collect();
    let events: Vec<bool> = cohort.records().iter().map(|r| r.event).collect();
    let markers: Vec<f64> = cohort.records().iter().map(|r| f(r.marker)).collect();
    Cohort::from_columns(&times, &events, &markers).unwrap()
}

pub fn check_rank_invariance(seed: u64, n: usize, lambda: f64) -> Check {
    let c = random_cohort(seed, n, 0.3);
    let d = transformed(&c, |y| (1.3 * y).exp() + 2.0 * y);
    let grid = event_grid(&c);
    let fa = PaucFit::censored(&c, lambda, &grid).unwrap();
    let fb = PaucFit::censored(&d, lambda, &grid).unwrap();
    for k in 0..grid.len() {
        for &alpha in &[0.1, 0.3, 1.0] {
            match (fa.estimate(k, alpha), fb.estimate(k, alpha)) {
                (Ok(a), Ok(b)) => {
                    ensure!(a.theta.to_bits() == b.theta.to_bits(), "seed {seed}: {} vs {}", a.theta, b.theta)
                }
                (Err(_), Err(_)) => {}
                _ => return Err(format!("seed {seed}: only one side failed")),
            }
        }
    }
    let l = lambda.min(0.5);
    let ra = tdpauc::loo_residuals(&c, l).unwrap();
    let rb = tdpauc::loo_residuals(&d, l).unwrap();
    ensure!(ra == rb, "seed {seed}: residuals changed under a monotone transform");
    Ok(())
}

pub fn check_bounds_monotone(seed: u64, n: usize, lambda: f64) -> Check {
    let c = random_cohort(seed, n, 0.3);
    let grid = event_grid(&c);
    let fit = PaucFit::censored(&c, lambda, &grid).unwrap();
    for k in 0..grid.len() {
        if fit.estimate(k, 1.0).is_err() {
            continue;
        }
        let mut prev = 0.0;
        for &alpha in &[0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0] {
            let th = fit.estimate(k, alpha).unwrap().theta;
            ensure!((0.0..=alpha + 1e-12).contains(&th), "seed {seed}: theta {th} at alpha {alpha}");
            ensure!(th + 1e-12 >= prev, "seed {seed}: not monotone, {prev} then {th}");
            prev = th;
        }
    }
    Ok(())
}

pub fn check_covariance(seed: u64, n: usize, lambda: f64) -> Check {
    let c = random_cohort(seed, n, 0.3);
    let mut t: Vec<f64> = c.records().iter().filter(|r| r.event).map(|r| r.time).collect();
    t.sort_by(f64::total_cmp);
    let m = t.len();
    let mut pts: Vec<f64> = (2..=6).map(|j| t[(m * j / 10).min(m - 1)]).collect();
    pts.dedup();
    let grid = TimeGrid::new(pts).unwrap();
    let fit = PaucFit::censored(&c, lambda, &grid).unwrap();
    let Ok(infl) = fit.influence(0.3) else { return Ok(()) };
    let cov = covariance(&infl);
    let k = grid.len();
    for a in 0..k {
        ensure!(cov.get(a, a) >= 0.0, "seed {seed}: negative variance");
        for b in 0..k {
            ensure!(cov.get(a, b).to_bits() == cov.get(b, a).to_bits(), "seed {seed}: asymmetric");
            let naive: f64 = (0..n).map(|i| infl.value(i, a) * infl.value(i, b)).sum::<f64>() / n as f64;
            ensure!((naive - cov.get(a, b)).abs() <= 1e-12 * (1.0 + naive.abs()), "seed {seed}: Gram mismatch");
        }
    }
    let min = symmetric_eigenvalues(cov.matrix()).into_iter().fold(f64::INFINITY, f64::min);
    ensure!(min >= -1e-8, "seed {seed}: smallest eigenvalue {min:e}");
    Ok(())
}

pub fn check_csv_round_trip(seed: u64, n: usize) -> Check {
    let c = random_cohort(seed, n, 0.4);
    let mut buf = Vec::new();
    write_cohort(&mut buf, &c).unwrap();
    let back = read_cohort(buf.as_slice(), &ColumnMap::default()).unwrap();
    ensure!(back.records() == c.records(), "seed {seed}: round trip changed records");
    Ok(())
}

pub fn check_antisymmetry(seed: u64, n1: usize, n2: usize) -> Check {
    let a = random_cohort(seed, n1, 0.0);
    let b = random_cohort(seed.wrapping_add(1), n2, 0.0);
    let ta = interior_grid(&a).points()[1];
    let tb = interior_grid(&b).points()[1];
    let pts = if ta < tb { vec![ta, tb] } else if tb < ta { vec![tb, ta] } else { vec![ta] };
    let grid = TimeGrid::new(pts).unwrap();
    let cfg = CompareConfig { alpha: 0.5, resamples: 100, ..CompareConfig::default() };
    let (Ok(ab), Ok(ba)) =
        (compare_paucs(&a, &b, &grid, 0.2, 0.3, &cfg), compare_paucs(&b, &a, &grid, 0.3, 0.2, &cfg))
    else {
        return Ok(());
    };
    for k in 0..ab.gamma.len() {
        ensure!(ab.gamma[k].to_bits() == (-ba.gamma[k]).to_bits(), "seed {seed}: gamma not negated");
    }
    ensure!(ab.cov.matrix() == ba.cov.matrix(), "seed {seed}: covariance changed under swap");
    let gram = covariance(&ab.stacked);
    for (r1, r2) in gram.matrix().iter().zip(ab.cov.matrix()) {
        for (x, y) in r1.iter().zip(r2) {
            ensure!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "seed {seed}: stacked Gram {x} vs {y}");
        }
    }
    let min = symmetric_eigenvalues(ab.cov.matrix()).into_iter().fold(f64::INFINITY, f64::min);
    ensure!(min >= -1e-8, "seed {seed}: smallest eigenvalue of comparison covariance {min:e}");
    Ok(())
}

pub fn check_influence_centred(seed: u64) -> Check {
    let c = random_cohort(seed, 300, 0.0);
    let grid = interior_grid(&c);
    for fit in [PaucFit::complete(&c, &grid).unwrap(), PaucFit::censored(&c, 0.1, &grid).unwrap()] {
        let infl = fit.influence(0.2).unwrap();
        let n = infl.n() as f64;
        for k in 0..grid.len() {
            let col = infl.column(k);
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            ensure!(mean.abs() <= 5.0 * sd / n.sqrt(), "seed {seed}: column mean {mean}, sd {sd}");
        }
    }
    Ok(())
}

pub fn check_thread_determinism(seed: u64) -> Check {
    let c = random_cohort(seed, 150, 0.2);
    let grid = event_grid(&c);
    let infl = PaucFit::censored(&c, 0.15, &grid).unwrap().influence(0.2).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| multiplier_critical_value(&infl, 0.95, 2000, 7).unwrap())
    };
    let one = run(1);
    for threads in [2, 3, 8] {
        let other = run(threads);
        ensure!(one.to_bits() == other.to_bits(), "seed {seed}: {threads} threads gave {other} vs {one}");
    }
    Ok(())
}
