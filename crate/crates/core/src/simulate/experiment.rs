//! Monte Carlo coverage experiment: point estimates, standard errors, pointwise
//! intervals at time quantiles `t_p`, and simultaneous bands over `[t_p1, t_p2]`.

use serde::Serialize;

use super::{generate_cohort, Censoring, SimDesign, TruthOracle};
use crate::bandwidth::select_bandwidth;
use crate::data::TimeGrid;
use crate::error::{Error, Result};
use crate::inference::multiplier_critical_value;
use crate::par;
use crate::pauc::PaucFit;
use crate::stats::{mean_sd, two_sided_z, CompensatedSum};

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    /// Empirical estimator; requires an uncensored design.
    Complete,
    Fixed(f64),
    /// Bandwidth selected per replicate from these candidates.
    Auto(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub design: SimDesign,
    pub alphas: Vec<f64>,
    /// Probabilities `p` of the time quantiles `t_p` for the pointwise rows.
    pub time_probs: Vec<f64>,
    pub estimator: EstimatorSpec,
    pub level: f64,
    /// `(p1, p2)` pairs; each band covers `[t_p1, t_p2]`.
    pub band_intervals: Vec<(f64, f64)>,
    pub band_points: usize,
    pub band_resamples: usize,
}

impl ExperimentConfig {
    pub fn new(design: SimDesign, estimator: EstimatorSpec) -> Self {
        ExperimentConfig {
            design,
            alphas: vec![0.1, 0.2, 0.3],
            time_probs: vec![0.4, 0.5, 0.6],
            estimator,
            level: 0.95,
            band_intervals: vec![(0.4, 0.5), (0.4, 0.6)],
            band_points: 11,
            band_resamples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub p: f64,
    pub t: f64,
    pub alpha: f64,
    pub truth: f64,
    pub mean: f64,
    pub sd: f64,
    pub mean_se: f64,
    pub coverage: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRow {
    pub p_low: f64,
    pub p_high: f64,
    pub alpha: f64,
    pub coverage: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<TableRow>,
    pub bands: Vec<BandRow>,
    pub completed: usize,
    pub failures: usize,
    /// Bandwidth used in each completed replicate (empty for the complete estimator).
    pub bandwidths: Vec<f64>,
    pub mean_censoring_rate: f64,
}

struct Layout {
    grid: TimeGrid,
    point_index: Vec<usize>,
    band_index: Vec<Vec<usize>>,
    point_times: Vec<f64>,
    /// `truth[a][k]` over the whole grid.
    truth: Vec<Vec<f64>>,
}

struct Outcome {
    /// `[a][p]`.
    theta: Vec<Vec<f64>>,
    se: Vec<Vec<f64>>,
    covered: Vec<Vec<bool>>,
    /// `[a][band]`.
    band_covered: Vec<Vec<bool>>,
    bandwidth: Option<f64>,
    censoring_rate: f64,
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    cfg.design.validate()?;
    if cfg.design.replicates < 50 {
        return Err(Error::param("replicates", format!("need at least 50, got {}", cfg.design.replicates)));
    }
    if cfg.alphas.is_empty() || cfg.time_probs.is_empty() {
        return Err(Error::param("grid", "need at least one alpha and one time quantile"));
    }
    if let Some(a) = cfg.alphas.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
        return Err(Error::param("alpha", format!("must lie in (0, 1], got {a}")));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::param("level", format!("must lie in (0, 1), got {}", cfg.level)));
    }
    if !cfg.band_intervals.is_empty() && cfg.band_points < 2 {
        return Err(Error::param("band-points", "bands need at least 2 grid points"));
    }
    match &cfg.estimator {
        EstimatorSpec::Complete if cfg.design.censoring != Censoring::None => {
            Err(Error::Inapplicable("complete-data estimator on a censored design".into()))
        }
        EstimatorSpec::Fixed(l) if !(*l > 0.0 && *l <= 1.0) => {
            Err(Error::param("bandwidth", format!("must lie in (0, 1], got {l}")))
        }
        EstimatorSpec::Auto(c) if c.is_empty() => Err(Error::param("grid", "empty bandwidth grid")),
        _ => Ok(()),
    }
}

fn layout(cfg: &ExperimentConfig, oracle: &TruthOracle) -> Result<Layout> {
    let point_times =
        cfg.time_probs.iter().map(|&p| oracle.time_quantile(p)).collect::<Result<Vec<_>>>()?;
    let mut band_times = Vec::new();
    for &(p1, p2) in &cfg.band_intervals {
        let (lo, hi) = (oracle.time_quantile(p1)?, oracle.time_quantile(p2)?);
        if !(lo < hi) {
            return Err(Error::param("band", format!("need p1 < p2, got ({p1}, {p2})")));
        }
        let m = cfg.band_points - 1;
        band_times.push(
            (0..=m)
                .map(|j| if j == m { hi } else { lo + (hi - lo) * j as f64 / m as f64 })
                .collect::<Vec<_>>(),
        );
    }
    let mut all: Vec<f64> = point_times.iter().chain(band_times.iter().flatten()).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let grid = TimeGrid::new(all)?;
    let find = |t: f64| grid.index_of(t).expect("time is on the grid");
    let point_index = point_times.iter().map(|&t| find(t)).collect();
    let band_index = band_times.iter().map(|ts| ts.iter().map(|&t| find(t)).collect()).collect();
    let truth = cfg
        .alphas
        .iter()
        .map(|&a| grid.points().iter().map(|&t| oracle.theta(a, t)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(Layout { grid, point_index, band_index, point_times, truth })
}

fn multiplier_seed(seed: u64, rep: usize, a: usize, band: usize) -> u64 {
    let tag = ((rep as u64) << 16) | ((a as u64) << 8) | band as u64;
    seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn replicate(cfg: &ExperimentConfig, lay: &Layout, rep: usize) -> Result<Outcome> {
    let cohort = generate_cohort(&cfg.design, rep as u64)?;
    let bandwidth = match &cfg.estimator {
        EstimatorSpec::Complete => None,
        EstimatorSpec::Fixed(l) => Some(*l),
        EstimatorSpec::Auto(c) => Some(select_bandwidth(&cohort, c)?.chosen),
    };
    let fit = match bandwidth {
        None => PaucFit::complete(&cohort, &lay.grid)?,
        Some(l) => PaucFit::censored(&cohort, l, &lay.grid)?,
    };
    let z = two_sided_z(cfg.level);
    let n = cohort.len() as f64;

    let mut out = Outcome {
        theta: Vec::new(),
        se: Vec::new(),
        covered: Vec::new(),
        band_covered: Vec::new(),
        bandwidth,
        censoring_rate: cohort.summary().censoring_rate,
    };
    for (a, &alpha) in cfg.alphas.iter().enumerate() {
        let curve = fit.curve(alpha)?;
        let infl = fit.influence(alpha)?;
        let se: Vec<f64> = (0..lay.grid.len()).map(|k| (infl.second_moment(k) / n).sqrt()).collect();
        let truth = &lay.truth[a];
        let hit = |k: usize, crit: f64| (curve[k].theta - truth[k]).abs() <= crit * se[k];

        out.theta.push(lay.point_index.iter().map(|&k| curve[k].theta).collect());
        out.se.push(lay.point_index.iter().map(|&k| se[k]).collect());
        out.covered.push(lay.point_index.iter().map(|&k| hit(k, z)).collect());

        let mut bands = Vec::with_capacity(lay.band_index.len());
        for (b, idx) in lay.band_index.iter().enumerate() {
            let sub = infl.restrict(idx);
            let crit = multiplier_critical_value(
                &sub,
                cfg.level,
                cfg.band_resamples,
                multiplier_seed(cfg.design.seed, rep, a, b),
            )?;
            bands.push(idx.iter().all(|&k| hit(k, crit)));
        }
        out.band_covered.push(bands);
    }
    Ok(out)
}

/// Runs `design.replicates` replicates and aggregates Mean / SD / mean SE /
/// coverage per `(α, t_p)` plus simultaneous band coverage per `(α, interval)`.
///
/// Failed replicates are logged and skipped; more than 2% failures aborts.
pub fn run_table_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    validate(cfg)?;
    let oracle = TruthOracle::new(cfg.design.model);
    let lay = layout(cfg, &oracle)?;
    log::info!("experiment grid: {:?}", lay.grid.points());

    let results = par::map_range(cfg.design.replicates, |rep| replicate(cfg, &lay, rep));
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (rep, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => ok.push(o),
            Err(e) => {
                log::warn!("replicate {rep} failed: {e}");
                failures.push((rep, e));
            }
        }
    }
    if failures.len() as f64 > 0.02 * cfg.design.replicates as f64 {
        let (rep, e) = &failures[0];
        return Err(Error::Numeric(format!(
            "{} of {} replicates failed (first: replicate {rep}: {e})",
            failures.len(),
            cfg.design.replicates
        )));
    }
    let completed = ok.len();

    let mut rows = Vec::new();
    let mut bands = Vec::new();
    for (a, &alpha) in cfg.alphas.iter().enumerate() {
        for (pi, &p) in cfg.time_probs.iter().enumerate() {
            let thetas: Vec<f64> = ok.iter().map(|o| o.theta[a][pi]).collect();
            let (mean, sd) = mean_sd(&thetas);
            let mut se_sum = CompensatedSum::default();
            ok.iter().for_each(|o| se_sum.add(o.se[a][pi]));
            let hits = ok.iter().filter(|o| o.covered[a][pi]).count();
            rows.push(TableRow {
                p,
                t: lay.point_times[pi],
                alpha,
                truth: lay.truth[a][lay.point_index[pi]],
                mean,
                sd,
                mean_se: se_sum.value() / completed as f64,
                coverage: hits as f64 / completed as f64,
                replicates: completed,
            });
        }
        for (b, &(p_low, p_high)) in cfg.band_intervals.iter().enumerate() {
            let hits = ok.iter().filter(|o| o.band_covered[a][b]).count();
            bands.push(BandRow { p_low, p_high, alpha, coverage: hits as f64 / completed as f64, replicates: completed });
        }
    }
    let mut cr = CompensatedSum::default();
    ok.iter().for_each(|o| cr.add(o.censoring_rate));
    Ok(ExperimentReport {
        rows,
        bands,
        completed,
        failures: failures.len(),
        bandwidths: ok.iter().filter_map(|o| o.bandwidth).collect(),
        mean_censoring_rate: cr.value() / completed as f64,
    })
}
