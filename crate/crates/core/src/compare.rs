//! Two-sample comparison of pAUC curves.
//!
//! `γ̂_α(t) = θ̂^{(1)}_t − θ̂^{(2)}_t` with
//!
//! ```text
//! Γ̂(s, t) = (n/n₁²) Σ Ψ̂^{(1)}_i(s) Ψ̂^{(1)}_i(t) + (n/n₂²) Σ Ψ̂^{(2)}_i(s) Ψ̂^{(2)}_i(t),  n = n₁ + n₂
//! ```
//!
//! which is the Gram form of the stacked rows `(n/n₁) Ψ̂^{(1)}` and
//! `−(n/n₂) Ψ̂^{(2)}`. The simultaneous band applies the multiplier scheme to
//! those stacked rows, so each group gets its own independent multipliers.

use serde::Serialize;

use crate::data::{Cohort, TimeGrid};
use crate::error::{Error, Result};
use crate::inference::{
    pointwise_from_cov, simultaneous_from_influence, ConfidenceBand, CovarianceFunction,
    InfluenceMatrix,
};
use crate::pauc::{EstimatorKind, PaucFit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareConfig {
    pub alpha: f64,
    pub level: f64,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { alpha: 0.2, level: 0.95, resamples: 1000, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonResult {
    pub grid: Vec<f64>,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub gamma: Vec<f64>,
    pub cov: CovarianceFunction,
    pub pointwise: ConfidenceBand,
    pub simultaneous: ConfidenceBand,
    #[serde(skip)]
    pub stacked: InfluenceMatrix,
}

fn in_group<T>(group: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Group { group, source: Box::new(e) })
}

struct GroupFit {
    theta: Vec<f64>,
    infl: InfluenceMatrix,
}

fn fit_group(cohort: &Cohort, grid: &TimeGrid, bandwidth: f64, alpha: f64) -> Result<GroupFit> {
    let fit = PaucFit::censored(cohort, bandwidth, grid)?;
    let theta = fit.curve(alpha)?.into_iter().map(|e| e.theta).collect();
    let infl = fit.influence(alpha)?;
    Ok(GroupFit { theta, infl })
}

pub fn compare_paucs(
    cohort1: &Cohort,
    cohort2: &Cohort,
    grid: &TimeGrid,
    bandwidth1: f64,
    bandwidth2: f64,
    config: &CompareConfig,
) -> Result<ComparisonResult> {
    let g1 = in_group(1, fit_group(cohort1, grid, bandwidth1, config.alpha))?;
    let g2 = in_group(2, fit_group(cohort2, grid, bandwidth2, config.alpha))?;

    let n1 = cohort1.len() as f64;
    let n2 = cohort2.len() as f64;
    let n = n1 + n2;
    let times = grid.points().to_vec();
    let gamma: Vec<f64> = g1.theta.iter().zip(&g2.theta).map(|(a, b)| a - b).collect();

    let k_len = times.len();
    let mut matrix = vec![vec![0.0; k_len]; k_len];
    for a in 0..k_len {
        for b in a..k_len {
            let cross = |m: &InfluenceMatrix| {
                m.column(a).iter().zip(m.column(b)).map(|(x, y)| x * y).sum::<f64>()
            };
            let v = n / (n1 * n1) * cross(&g1.infl) + n / (n2 * n2) * cross(&g2.infl);
            matrix[a][b] = v;
            matrix[b][a] = v;
        }
    }
    let cov = CovarianceFunction::from_matrix(times.clone(), n as usize, matrix);

    let stacked_columns = (0..k_len)
        .map(|k| {
            g1.infl
                .column(k)
                .iter()
                .map(|v| v * n / n1)
                .chain(g2.infl.column(k).iter().map(|v| -v * n / n2))
                .collect()
        })
        .collect();
    let stacked =
        InfluenceMatrix::from_columns(times.clone(), config.alpha, EstimatorKind::Censored, stacked_columns)?;

    let indices: Vec<usize> = (0..k_len).collect();
    let pointwise = pointwise_from_cov(&indices, &gamma, &cov, config.level)?;
    let simultaneous =
        simultaneous_from_influence(&gamma, &stacked, config.level, config.resamples, config.seed)?;

    Ok(ComparisonResult {
        grid: times,
        theta1: g1.theta,
        theta2: g2.theta,
        gamma,
        cov,
        pointwise,
        simultaneous,
        stacked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{generate_cohort, Censoring, SimDesign};

    fn cohort(seed: u64) -> Cohort {
        let design = SimDesign { n: 120, censoring: Censoring::None, seed, ..SimDesign::default() };
        generate_cohort(&design, 0).unwrap()
    }

    #[test]
    fn identical_groups_give_zero_difference() {
        let c = cohort(5);
        let grid = TimeGrid::new(vec![9.0, 10.0, 11.0]).unwrap();
        let cfg = CompareConfig { resamples: 200, ..CompareConfig::default() };
        let r = compare_paucs(&c, &c, &grid, 0.1, 0.1, &cfg).unwrap();
        assert!(r.gamma.iter().all(|&g| g == 0.0));
        assert!(r.pointwise.center.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn degenerate_time_names_group() {
        let a = cohort(1);
        let grid = TimeGrid::new(vec![10.0]).unwrap();
        let b = Cohort::from_columns(&[20.0, 30.0, 40.0], &[true; 3], &[0.1, 0.2, 0.3]).unwrap();
        let err = compare_paucs(&a, &b, &grid, 0.1, 0.5, &CompareConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Group { group: 2, .. }), "{err}");
    }
}
