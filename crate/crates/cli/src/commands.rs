use std::path::{Path, PathBuf};

use serde::Serialize;
use tdpauc::bandwidth::candidate_grid;
use tdpauc::pauc::PaucFit;
use tdpauc::simulate::{run_table_experiment, EstimatorSpec, ExperimentConfig, SimDesign, SimModel};
use tdpauc::stats::quantile_sorted;
use tdpauc::{
    compare_paucs, conditional_km, covariance, load_cohort, pointwise_band, select_bandwidth, simultaneous_band,
    Cohort, ColumnMap, CompareConfig, ConfidenceBand, TimeGrid,
};

use crate::output::{self, num, opt, Format};
use crate::{BandArgs, BandwidthArgs, CliError, Global};

type Result<T> = std::result::Result<T, CliError>;

fn input_err(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("--{flag}: {msg}"))
}

fn columns(g: &Global) -> ColumnMap {
    ColumnMap {
        time: g.time_col.clone(),
        status: g.status_col.clone(),
        marker: g.marker_col.clone(),
        group: g.group_col.clone(),
    }
}

fn load(g: &Global, path: Option<&Path>, flag: &str) -> Result<Cohort> {
    let path = path.ok_or_else(|| input_err(flag, "an input CSV is required"))?;
    let cohort = load_cohort(path, &columns(g)).map_err(|e| match e {
        tdpauc::Error::Io(io) => input_err(flag, format!("{}: {io}", path.display())),
        other => CliError::Lib(other),
    })?;
    let s = cohort.summary();
    if s.marker_ties > 0 {
        log::warn!("{}: {} tied marker values", path.display(), s.marker_ties);
    }
    if g.summary {
        eprintln!("{}", serde_json::to_string(&s).map_err(|e| CliError::Input(e.to_string()))?);
    }
    Ok(cohort)
}

fn check_alpha(flag: &str, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(input_err(flag, format!("must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

fn check_band(b: &BandArgs) -> Result<()> {
    check_alpha("alpha", b.alpha)?;
    if !(b.level > 0.0 && b.level < 1.0) {
        return Err(input_err("level", format!("must lie in (0, 1), got {}", b.level)));
    }
    if b.resamples < 100 {
        return Err(input_err("resamples", format!("need at least 100, got {}", b.resamples)));
    }
    if let (Some(a), Some(z)) = (b.tau1, b.tau2) {
        if !(a < z) {
            return Err(input_err("tau2", format!("must exceed --tau1 ({a}), got {z}")));
        }
    }
    Ok(())
}

fn candidates(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    candidate_grid(min, max, step).map_err(|e| input_err("grid-min/--grid-max/--grid-step", e))
}

/// `(λ, selection)` for a fixed or automatically chosen bandwidth.
fn resolve_bandwidth(cohort: &Cohort, bw: &BandwidthArgs) -> Result<(f64, Option<tdpauc::BandwidthSelection>)> {
    match (bw.bandwidth, bw.auto_bandwidth) {
        (Some(l), false) => {
            if !(l > 0.0 && l <= 1.0) {
                return Err(input_err("bandwidth", format!("must lie in (0, 1], got {l}")));
            }
            Ok((l, None))
        }
        (None, true) => {
            let sel = select_bandwidth(cohort, &candidates(bw.grid_min, bw.grid_max, bw.grid_step)?)?;
            log::info!("selected bandwidth {}", sel.chosen);
            Ok((sel.chosen, Some(sel)))
        }
        _ => Err(input_err("bandwidth", "give --bandwidth <λ> or --auto-bandwidth (or --complete-data)")),
    }
}

/// Event times of the cohorts within `[tau1, tau2]` at which every cohort has
/// both cases and controls; missing bounds default to the 10% and 90%
/// quantiles of the pooled follow-up times.
fn band_grid(cohorts: &[&Cohort], tau1: Option<f64>, tau2: Option<f64>) -> Result<TimeGrid> {
    let mut all: Vec<f64> = cohorts.iter().flat_map(|c| c.records().iter().map(|r| r.time)).collect();
    all.sort_by(f64::total_cmp);
    let lo = tau1.unwrap_or_else(|| quantile_sorted(&all, 0.1));
    let hi = tau2.unwrap_or_else(|| quantile_sorted(&all, 0.9));
    let max_common = cohorts.iter().map(|c| c.max_time()).fold(f64::INFINITY, f64::min);
    // every group needs a case by the earliest grid time
    let first_event = cohorts
        .iter()
        .map(|c| c.records().iter().filter(|r| r.event).map(|r| r.time).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut pts: Vec<f64> = cohorts
        .iter()
        .flat_map(|c| c.records().iter().filter(|r| r.event).map(|r| r.time))
        .filter(|&t| t >= lo && t <= hi && t >= first_event && t < max_common)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.is_empty() {
        return Err(input_err("tau1/--tau2", format!("no event times in [{lo}, {hi}]")));
    }
    Ok(TimeGrid::new(pts)?)
}

fn format_or(g: &Global, default: Format) -> Format {
    g.format.unwrap_or(default)
}

#[derive(Serialize)]
struct EstimateOut {
    t: f64,
    alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_high: Option<f64>,
    theta: f64,
    /// `null` when the quantile is −∞.
    quantile: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quantile_high: Option<f64>,
    se: Option<f64>,
    bandwidth: Option<f64>,
    estimator: &'static str,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn estimate(
    g: &Global,
    time: f64,
    alpha: f64,
    alpha_high: Option<f64>,
    bw: &BandwidthArgs,
    complete_data: bool,
    dump_surface: Option<&Path>,
) -> Result<()> {
    check_alpha("alpha", alpha)?;
    if let Some(h) = alpha_high {
        check_alpha("alpha-high", h)?;
        if !(h > alpha) {
            return Err(input_err("alpha-high", format!("must exceed --alpha ({alpha}), got {h}")));
        }
    }
    if !time.is_finite() {
        return Err(input_err("time", format!("must be finite, got {time}")));
    }
    let cohort = load(g, g.input.as_deref(), "input")?;
    let grid = TimeGrid::single(time)?;
    let (fit, bandwidth) = if complete_data {
        if bw.bandwidth.is_some() || bw.auto_bandwidth {
            return Err(input_err("complete-data", "does not take a bandwidth"));
        }
        (PaucFit::complete(&cohort, &grid)?, None)
    } else {
        let (l, _) = resolve_bandwidth(&cohort, bw)?;
        if let Some(path) = dump_surface {
            dump(&cohort, l, &grid, path)?;
        }
        (PaucFit::censored(&cohort, l, &grid)?, Some(l))
    };
    let estimator = if complete_data { "complete" } else { "censored" };
    let out = match alpha_high {
        None => {
            let (curve, _) = fit.curve_with_se(alpha)?;
            let e = &curve[0];
            EstimateOut {
                t: e.t,
                alpha,
                alpha_high: None,
                theta: e.theta,
                quantile: finite(e.quantile.value()),
                quantile_high: None,
                se: e.se,
                bandwidth,
                estimator,
            }
        }
        Some(h) => {
            let r = fit.range(0, alpha, h)?;
            let infl = fit.range_influence(alpha, h)?;
            let se = covariance(&infl).standard_error(0);
            EstimateOut {
                t: r.t,
                alpha,
                alpha_high: Some(h),
                theta: r.theta,
                quantile: finite(r.quantile_low.value()),
                quantile_high: finite(r.quantile_high.value()),
                se: Some(se),
                bandwidth,
                estimator,
            }
        }
    };
    let bytes = match format_or(g, Format::Json) {
        Format::Json => output::json(&out)?,
        Format::Csv => output::csv(
            &["t", "alpha", "alpha_high", "theta", "quantile", "quantile_high", "se", "bandwidth"],
            [vec![
                num(out.t),
                num(out.alpha),
                opt(out.alpha_high),
                num(out.theta),
                opt(out.quantile),
                opt(out.quantile_high),
                opt(out.se),
                opt(out.bandwidth),
            ]],
        )?,
    };
    output::emit(g.out.as_deref(), &bytes)
}

fn dump(cohort: &Cohort, lambda: f64, grid: &TimeGrid, path: &Path) -> Result<()> {
    let surface = conditional_km(cohort, lambda, grid)?;
    let mut buf = Vec::new();
    surface.write_csv(&mut buf, cohort)?;
    output::emit(Some(path), &buf)
}

fn band_rows(pw: &ConfidenceBand, sim: &ConfidenceBand) -> Vec<Vec<String>> {
    (0..pw.len())
        .map(|k| {
            vec![
                num(pw.times[k]),
                num(pw.center[k]),
                num(pw.se[k]),
                num(pw.lower[k]),
                num(pw.upper[k]),
                num(sim.lower[k]),
                num(sim.upper[k]),
            ]
        })
        .collect()
}

#[derive(Serialize)]
struct BandOut<'a> {
    alpha: f64,
    bandwidth: Option<f64>,
    level: f64,
    critical_value: f64,
    resamples: usize,
    seed: u64,
    pointwise: &'a ConfidenceBand,
    simultaneous: &'a ConfidenceBand,
}

pub fn band(g: &Global, b: &BandArgs, bw: &BandwidthArgs, dump_surface: Option<&Path>) -> Result<()> {
    check_band(b)?;
    let cohort = load(g, g.input.as_deref(), "input")?;
    let grid = band_grid(&[&cohort], b.tau1, b.tau2)?;
    let (fit, bandwidth) = if b.complete_data {
        (PaucFit::complete(&cohort, &grid)?, None)
    } else {
        let (l, _) = resolve_bandwidth(&cohort, bw)?;
        if let Some(path) = dump_surface {
            dump(&cohort, l, &grid, path)?;
        }
        (PaucFit::censored(&cohort, l, &grid)?, Some(l))
    };
    let (curve, infl) = fit.curve_with_se(b.alpha)?;
    let mut pw = pointwise_band(&curve, &covariance(&infl), b.level)?;
    let mut sim = simultaneous_band(&curve, &infl, b.level, b.resamples, b.seed)?;
    if b.clip {
        pw = pw.clipped(0.0, b.alpha);
        sim = sim.clipped(0.0, b.alpha);
    }
    let bytes = match format_or(g, Format::Csv) {
        Format::Csv => output::csv(
            &["t", "theta", "se", "lower_pw", "upper_pw", "lower_sim", "upper_sim"],
            band_rows(&pw, &sim),
        )?,
        Format::Json => output::json(&BandOut {
            alpha: b.alpha,
            bandwidth,
            level: b.level,
            critical_value: sim.critical_value,
            resamples: b.resamples,
            seed: b.seed,
            pointwise: &pw,
            simultaneous: &sim,
        })?,
    };
    output::emit(g.out.as_deref(), &bytes)
}

pub fn compare(
    g: &Global,
    input2: Option<&Path>,
    groups: Option<&[i64]>,
    b: &BandArgs,
    bandwidths: [Option<f64>; 2],
    auto: bool,
) -> Result<()> {
    check_band(b)?;
    if b.complete_data {
        return Err(input_err("complete-data", "compare uses the censored-data estimator only"));
    }
    let (c1, c2) = match (input2, &g.group_col) {
        (Some(p2), None) => (load(g, g.input.as_deref(), "input")?, load(g, Some(p2), "input2")?),
        (None, Some(_)) => {
            let all = load(g, g.input.as_deref(), "input")?;
            let labels = match groups {
                Some(l) => [l[0], l[1]],
                None => match all.group_labels().as_slice() {
                    [a, b] => [*a, *b],
                    other => {
                        return Err(input_err("groups", format!("found {} group labels {other:?}; pick two", other.len())))
                    }
                },
            };
            (all.subset_by_group(labels[0])?, all.subset_by_group(labels[1])?)
        }
        (Some(_), Some(_)) => return Err(input_err("input2", "use either --input2 or --group-col, not both")),
        (None, None) => return Err(input_err("group-col", "give --group-col or --input2")),
    };
    let mut lambdas = [0.0; 2];
    for (i, (cohort, fixed)) in [(&c1, bandwidths[0]), (&c2, bandwidths[1])].into_iter().enumerate() {
        let spec = BandwidthArgs {
            bandwidth: fixed,
            auto_bandwidth: auto,
            grid_min: 0.01,
            grid_max: 0.20,
            grid_step: 0.01,
        };
        lambdas[i] = resolve_bandwidth(cohort, &spec)
            .map_err(|e| match e {
                CliError::Input(m) => CliError::Input(m.replace("--bandwidth", &format!("--bandwidth{}", i + 1))),
                other => other,
            })?
            .0;
    }
    let grid = band_grid(&[&c1, &c2], b.tau1, b.tau2)?;
    let config = CompareConfig { alpha: b.alpha, level: b.level, resamples: b.resamples, seed: b.seed };
    let mut r = compare_paucs(&c1, &c2, &grid, lambdas[0], lambdas[1], &config)?;
    if b.clip {
        r.pointwise = r.pointwise.clipped(-b.alpha, b.alpha);
        r.simultaneous = r.simultaneous.clipped(-b.alpha, b.alpha);
    }
    let bytes = match format_or(g, Format::Csv) {
        Format::Csv => output::csv(
            &["t", "theta1", "theta2", "gamma", "se", "lower_pw", "upper_pw", "lower_sim", "upper_sim"],
            (0..r.grid.len()).map(|k| {
                vec![
                    num(r.grid[k]),
                    num(r.theta1[k]),
                    num(r.theta2[k]),
                    num(r.gamma[k]),
                    num(r.pointwise.se[k]),
                    num(r.pointwise.lower[k]),
                    num(r.pointwise.upper[k]),
                    num(r.simultaneous.lower[k]),
                    num(r.simultaneous.upper[k]),
                ]
            }),
        )?,
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                bandwidth1: f64,
                bandwidth2: f64,
                #[serde(flatten)]
                result: &'a tdpauc::ComparisonResult,
            }
            output::json(&Out { bandwidth1: lambdas[0], bandwidth2: lambdas[1], result: &r })?
        }
    };
    output::emit(g.out.as_deref(), &bytes)
}

pub fn bandwidth(g: &Global, min: f64, max: f64, step: f64) -> Result<()> {
    let grid = candidates(min, max, step)?;
    let cohort = load(g, g.input.as_deref(), "input")?;
    let sel = select_bandwidth(&cohort, &grid)?;
    let bytes = match format_or(g, Format::Json) {
        Format::Json => {
            #[derive(Serialize)]
            struct Score {
                lambda: f64,
                ise: f64,
            }
            #[derive(Serialize)]
            struct Out {
                chosen: f64,
                scores: Vec<Score>,
            }
            let scores = sel.grid.iter().zip(&sel.scores).map(|(&lambda, &ise)| Score { lambda, ise }).collect();
            output::json(&Out { chosen: sel.chosen, scores })?
        }
        Format::Csv => output::csv(
            &["lambda", "ise", "chosen"],
            sel.grid
                .iter()
                .zip(&sel.scores)
                .map(|(&l, &s)| vec![num(l), num(s), (l == sel.chosen).to_string()]),
        )?,
    };
    output::emit(g.out.as_deref(), &bytes)
}

pub struct SimulateArgs {
    pub n: usize,
    pub censor_rate: f64,
    pub replicates: usize,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub time_probs: Vec<f64>,
    pub bandwidth: String,
    pub marker_slope: Option<f64>,
    pub null: bool,
    pub level: f64,
    pub resamples: usize,
    pub bands_out: Option<PathBuf>,
}

pub fn simulate(g: &Global, a: SimulateArgs) -> Result<()> {
    if !(0.0..1.0).contains(&a.censor_rate) {
        return Err(input_err("censor-rate", format!("must lie in [0, 1), got {}", a.censor_rate)));
    }
    for &alpha in &a.alphas {
        check_alpha("alphas", alpha)?;
    }
    if let Some(p) = a.time_probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(input_err("time-probs", format!("must lie in (0, 1), got {p}")));
    }
    let estimator = match a.bandwidth.as_str() {
        "auto" => EstimatorSpec::Auto(tdpauc::bandwidth::default_candidates()),
        "complete" => EstimatorSpec::Complete,
        v => match v.parse::<f64>() {
            Ok(l) if l > 0.0 && l <= 1.0 => EstimatorSpec::Fixed(l),
            _ => return Err(input_err("bandwidth", format!("expected auto, complete, or a value in (0, 1], got {v}"))),
        },
    };
    let mut model = if a.null { SimModel::null() } else { SimModel::default() };
    if let Some(s) = a.marker_slope {
        if a.null {
            return Err(input_err("marker-slope", "conflicts with --null"));
        }
        model.marker_slope = s;
    }
    let design = SimDesign { n: a.n, seed: a.seed, replicates: a.replicates, model, ..SimDesign::default() }
        .with_censoring_rate(a.censor_rate)?;
    let mut cfg = ExperimentConfig::new(design, estimator);
    cfg.alphas = a.alphas;
    cfg.time_probs = a.time_probs;
    cfg.level = a.level;
    if a.resamples == 0 {
        cfg.band_intervals.clear();
    } else {
        cfg.band_resamples = a.resamples;
    }
    let report = run_table_experiment(&cfg)?;
    log::info!("{} replicates completed, {} failed", report.completed, report.failures);
    let label = a.bandwidth.clone();

    let bytes = match format_or(g, Format::Csv) {
        Format::Json => output::json(&report)?,
        Format::Csv => output::csv(
            &["bandwidth", "p", "t", "alpha", "truth", "mean", "sd", "se", "cp", "replicates"],
            report.rows.iter().map(|r| {
                vec![
                    label.clone(),
                    num(r.p),
                    num(r.t),
                    num(r.alpha),
                    num(r.truth),
                    num(r.mean),
                    num(r.sd),
                    num(r.mean_se),
                    num(r.coverage),
                    r.replicates.to_string(),
                ]
            }),
        )?,
    };
    output::emit(g.out.as_deref(), &bytes)?;
    if let Some(path) = a.bands_out {
        let bytes = output::csv(
            &["bandwidth", "p_low", "p_high", "alpha", "coverage", "replicates"],
            report.bands.iter().map(|b| {
                vec![
                    label.clone(),
                    num(b.p_low),
                    num(b.p_high),
                    num(b.alpha),
                    num(b.coverage),
                    b.replicates.to_string(),
                ]
            }),
        )?;
        output::emit(Some(&path), &bytes)?;
    }
    Ok(())
}
