//! Influence functions, covariance estimation and confidence bands.
//!
//! For subject `i` at time `t` and cut `q = q̂_{αt}`:
//!
//! ```text
//! Ψ̂_i(t) = [ Û_i + η̂ V̂_i(t, −∞) + (α Ŝ_T(t) − Ŝ_Y(q)) (V̂_i(t, q) − α V̂_i(t, −∞)) ]
//!          / (Ŝ_T(t) (1 − Ŝ_T(t)))
//! Û_i     = n⁻¹ Σ_{j≠i} (ĥ_ij + ĥ_ji) − 2Ĥ + (Ŝ_Y(Y_i) − Ŝ(t, q)) ξ̂_i I(Y_i > q)
//! V̂_i(y)  = (Ŝ_T(t | Y_i) + ξ̂_i) I(Y_i > y) − Ŝ(t, y)
//! η̂       = Ĥ (2Ŝ_T − 1) / (Ŝ_T − Ŝ_T²)
//! ```
//!
//! The complete-data version substitutes `I(T_i > t)` for `Ŝ_T(t | Y_i)` and
//! sets `ξ̂ ≡ 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::data::{Cohort, TimeGrid};
use crate::error::{Error, Result};
use crate::par;
use crate::pauc::{pair_terms, EstimatorKind, PaucEstimate, PaucFit};
use crate::stats;
use crate::survival::{ConditionalSurvivalSurface, JointSurvivor};

/// `Ψ̂_{αi}(t)` for every subject and grid time, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    times: Vec<f64>,
    alpha: f64,
    kind: EstimatorKind,
    values: Vec<Vec<f64>>,
}

impl InfluenceMatrix {
    /// Assemble from time-major columns; all columns must have equal length.
    pub fn from_columns(
        times: Vec<f64>,
        alpha: f64,
        kind: EstimatorKind,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if times.len() != values.len() || values.is_empty() {
            return Err(Error::Validation("one influence column per grid time required".into()));
        }
        let n = values[0].len();
        if n == 0 || values.iter().any(|c| c.len() != n) {
            return Err(Error::Validation("influence columns must have equal, nonzero length".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("nonfinite influence value".into()));
        }
        Ok(InfluenceMatrix { times, alpha, kind, values })
    }

    pub fn n(&self) -> usize {
        self.values[0].len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[k][i]
    }

    /// Columns at the given grid positions.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        InfluenceMatrix {
            times: indices.iter().map(|&k| self.times[k]).collect(),
            alpha: self.alpha,
            kind: self.kind,
            values: indices.iter().map(|&k| self.values[k].clone()).collect(),
        }
    }

    /// Entrywise `self − other`, the influence of a range pAUC.
    pub fn difference(&self, other: &InfluenceMatrix) -> Result<Self> {
        if self.times != other.times || self.n() != other.n() {
            return Err(Error::Validation("influence matrices are not conformable".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(InfluenceMatrix { times: self.times.clone(), alpha: self.alpha, kind: self.kind, values })
    }

    /// `Σ̂(t_k, t_k) = n⁻¹ Σ_i Ψ̂_i(t_k)²`.
    pub fn second_moment(&self, k: usize) -> f64 {
        self.values[k].iter().map(|v| v * v).sum::<f64>() / self.n() as f64
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn influence_column(
    cohort: &Cohort,
    joint: &JointSurvivor,
    s: &[f64],
    xi: &[f64],
    k: usize,
    alpha: f64,
) -> Result<Vec<f64>> {
    joint.check_nondegenerate(k)?;
    let cut = joint.quantile_cut(k, alpha);
    let terms = pair_terms(cohort, s, cut);
    let n = cohort.len() as f64;
    let st = joint.marginal(k);
    let s_q = joint.s_at_cut(k, cut);
    let sy_q = joint.marker_survival_at_cut(cut);
    let h = terms.h;
    let denom = st * (1.0 - st);
    let eta = h * (2.0 * st - 1.0) / denom;
    let slope = alpha * st - sy_q;
    let first = cut.first_above();

    let column = (0..cohort.len())
        .map(|i| {
            let above_q = cohort.marker_group(i) >= first;
            let pair = ((1.0 - s[i]) * terms.below[i] + s[i] * terms.above[i]) / n;
            let mut u = pair - 2.0 * h;
            let v_q = if above_q {
                u += (cohort.marker_survival(i) - s_q) * xi[i];
                s[i] + xi[i] - s_q
            } else {
                -s_q
            };
            let v_all = s[i] + xi[i] - st;
            (u + eta * v_all + slope * (v_q - alpha * v_all)) / denom
        })
        .collect::<Vec<_>>();
    if column.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("nonfinite influence at t = {}", joint.times()[k])));
    }
    Ok(column)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// Censored-data influence matrix `Ψ̂_{αi}(t)` over the surface grid.
pub fn influence_matrix(
    surface: &ConditionalSurvivalSurface,
    joint: &JointSurvivor,
    cohort: &Cohort,
    alpha: f64,
) -> Result<InfluenceMatrix> {
    check_alpha(alpha)?;
    let values = (0..surface.grid().len())
        .map(|k| influence_column(cohort, joint, surface.st_column(k), surface.xi_column(k), k, alpha))
        .collect::<Result<Vec<_>>>()?;
    InfluenceMatrix::from_columns(
        surface.grid().points().to_vec(),
        alpha,
        EstimatorKind::Censored,
        values,
    )
}

/// Complete-data influence matrix `Ψ̃*_{αi}(t)`.
pub fn complete_influence_matrix(
    cohort: &Cohort,
    grid: &TimeGrid,
    alpha: f64,
) -> Result<InfluenceMatrix> {
    check_alpha(alpha)?;
    PaucFit::complete(cohort, grid)?.influence(alpha)
}

impl PaucFit<'_> {
    pub fn influence(&self, alpha: f64) -> Result<InfluenceMatrix> {
        self.influence_unchecked(alpha)
    }

    /// Allows `alpha = 0`, whose pAUC is identically zero; used for ranges.
    fn influence_unchecked(&self, alpha: f64) -> Result<InfluenceMatrix> {
        let values = (0..self.grid().len())
            .map(|k| {
                influence_column(self.cohort(), self.joint(), self.weights(k), self.xi(k), k, alpha)
            })
            .collect::<Result<Vec<_>>>()?;
        InfluenceMatrix::from_columns(self.grid().points().to_vec(), alpha, self.kind(), values)
    }

    /// Influence of `θ̂(q̂_{α_high}) − θ̂(q̂_{α_low})`.
    pub fn range_influence(&self, alpha_low: f64, alpha_high: f64) -> Result<InfluenceMatrix> {
        let hi = self.influence_unchecked(alpha_high)?;
        let lo = self.influence_unchecked(alpha_low)?;
        hi.difference(&lo)
    }

    /// Estimates with standard errors `√(Σ̂(t,t)/n)` filled in.
    pub fn curve_with_se(&self, alpha: f64) -> Result<(Vec<PaucEstimate>, InfluenceMatrix)> {
        let mut curve = self.curve(alpha)?;
        let infl = self.influence(alpha)?;
        let n = infl.n() as f64;
        for (k, est) in curve.iter_mut().enumerate() {
            est.se = Some((infl.second_moment(k) / n).sqrt());
        }
        Ok((curve, infl))
    }
}

/// `Σ̂(s, t) = n⁻¹ Σ_i Ψ̂_i(s) Ψ̂_i(t)` over the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceFunction {
    times: Vec<f64>,
    n: usize,
    matrix: Vec<Vec<f64>>,
}

impl CovarianceFunction {
    pub fn from_matrix(times: Vec<f64>, n: usize, matrix: Vec<Vec<f64>>) -> Self {
        CovarianceFunction { times, n, matrix }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.matrix[a][b]
    }

    pub fn variance(&self, k: usize) -> f64 {
        self.matrix[k][k]
    }

    /// `√(Σ̂(t_k, t_k) / n)`.
    pub fn standard_error(&self, k: usize) -> f64 {
        (self.matrix[k][k] / self.n as f64).sqrt()
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&p| p == t)
            .ok_or_else(|| Error::param("time", format!("t = {t} is not on the covariance grid")))
    }
}

pub fn covariance(infl: &InfluenceMatrix) -> CovarianceFunction {
    gram(infl.times().to_vec(), &infl.values, infl.n())
}

/// `n⁻¹ Σ_i c_a[i] c_b[i]` with the lower triangle mirrored from the upper.
pub(crate) fn gram(times: Vec<f64>, columns: &[Vec<f64>], n: usize) -> CovarianceFunction {
    let k_len = columns.len();
    let mut matrix = vec![vec![0.0; k_len]; k_len];
    for a in 0..k_len {
        for b in a..k_len {
            let v = columns[a].iter().zip(&columns[b]).map(|(x, y)| x * y).sum::<f64>() / n as f64;
            matrix[a][b] = v;
            matrix[b][a] = v;
        }
    }
    CovarianceFunction { times, n, matrix }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BandKind {
    Pointwise,
    Simultaneous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceBand {
    pub times: Vec<f64>,
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub se: Vec<f64>,
    pub level: f64,
    pub critical_value: f64,
    pub kind: BandKind,
    pub resamples: Option<usize>,
}

impl ConfidenceBand {
    fn build(
        times: Vec<f64>,
        center: Vec<f64>,
        se: Vec<f64>,
        level: f64,
        critical_value: f64,
        kind: BandKind,
        resamples: Option<usize>,
    ) -> Self {
        let lower = center.iter().zip(&se).map(|(c, s)| c - critical_value * s).collect();
        let upper = center.iter().zip(&se).map(|(c, s)| c + critical_value * s).collect();
        ConfidenceBand { times, center, lower, upper, se, level, critical_value, kind, resamples }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn contains(&self, k: usize, value: f64) -> bool {
        self.lower[k] <= value && value <= self.upper[k]
    }

    /// True when every `values[k]` lies inside the band.
    pub fn covers(&self, values: &[f64]) -> bool {
        values.iter().enumerate().all(|(k, &v)| self.contains(k, v))
    }

    /// Band with both limits clipped to `[lo, hi]`.
    pub fn clipped(mut self, lo: f64, hi: f64) -> Self {
        self.lower.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        self.upper.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        self
    }
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", format!("must lie in (0, 1), got {level}")));
    }
    Ok(())
}

/// `θ̂ ± Z_{ς/2} √(Σ̂(t,t)/n)` for a single estimate.
pub fn pointwise_ci(
    estimate: &PaucEstimate,
    cov: &CovarianceFunction,
    level: f64,
) -> Result<ConfidenceBand> {
    pointwise_band(std::slice::from_ref(estimate), cov, level)
}

/// Pointwise intervals for each estimate, matched to the covariance grid by time.
pub fn pointwise_band(
    estimates: &[PaucEstimate],
    cov: &CovarianceFunction,
    level: f64,
) -> Result<ConfidenceBand> {
    let mut indices = Vec::with_capacity(estimates.len());
    for est in estimates {
        indices.push(cov.index_of(est.t)?);
    }
    let center = estimates.iter().map(|e| e.theta).collect::<Vec<_>>();
    pointwise_from_cov(&indices, &center, cov, level)
}

/// `center[m] ± Z_{ς/2} √(Σ̂(t,t)/n)` at covariance positions `indices[m]`.
pub(crate) fn pointwise_from_cov(
    indices: &[usize],
    center: &[f64],
    cov: &CovarianceFunction,
    level: f64,
) -> Result<ConfidenceBand> {
    check_level(level)?;
    let mut se = Vec::with_capacity(indices.len());
    for &k in indices {
        let var = cov.variance(k);
        if !var.is_finite() || var < 0.0 {
            return Err(Error::Numeric(format!("variance at t = {} is {var}", cov.times()[k])));
        }
        se.push(cov.standard_error(k));
    }
    Ok(ConfidenceBand::build(
        indices.iter().map(|&k| cov.times()[k]).collect(),
        center.to_vec(),
        se,
        level,
        stats::two_sided_z(level),
        BandKind::Pointwise,
        None,
    ))
}

/// Critical value `L_ς`: the `(1 − ς)` quantile of
/// `sup_t |n^{-1/2} Σ_i G_i Ψ̂_i(t)| / Σ̂^{1/2}(t,t)` over `B` draws of standard
/// normal multipliers `G`. Draw `b` uses ChaCha8 stream `b` of `seed`.
pub fn multiplier_critical_value(
    infl: &InfluenceMatrix,
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    check_level(level)?;
    if resamples < 100 {
        return Err(Error::param("resamples", format!("need at least 100, got {resamples}")));
    }
    let n = infl.n();
    let sd: Vec<f64> = (0..infl.times().len()).map(|k| infl.second_moment(k).sqrt()).collect();
    let bad: Vec<String> = infl
        .times()
        .iter()
        .zip(&sd)
        .filter(|(_, s)| !(**s > 0.0))
        .map(|(t, _)| t.to_string())
        .collect();
    if !bad.is_empty() {
        return Err(Error::Numeric(format!(
            "zero or invalid variance at t = {}",
            bad.join(", ")
        )));
    }
    let root_n = (n as f64).sqrt();
    let mut sup = par::map_range(resamples, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        infl.values
            .iter()
            .zip(&sd)
            .map(|(col, s)| {
                let z: f64 = g.iter().zip(col).map(|(a, b)| a * b).sum();
                (z / (root_n * s)).abs()
            })
            .fold(0.0, f64::max)
    });
    sup.sort_by(f64::total_cmp);
    Ok(stats::order_statistic_quantile(&sup, level))
}

/// Simultaneous band `θ̂_t ± L_ς √(Σ̂(t,t)/n)` over the influence grid.
pub fn simultaneous_band(
    estimates: &[PaucEstimate],
    infl: &InfluenceMatrix,
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<ConfidenceBand> {
    if estimates.len() != infl.times().len()
        || estimates.iter().zip(infl.times()).any(|(e, &t)| e.t != t)
    {
        return Err(Error::Validation("estimates and influence grid do not match".into()));
    }
    let center = estimates.iter().map(|e| e.theta).collect::<Vec<_>>();
    simultaneous_from_influence(&center, infl, level, resamples, seed)
}

/// `center ± L_ς √(Σ̂(t,t)/n)` with `Σ̂` and `L_ς` from the influence rows.
pub(crate) fn simultaneous_from_influence(
    center: &[f64],
    infl: &InfluenceMatrix,
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<ConfidenceBand> {
    let critical = multiplier_critical_value(infl, level, resamples, seed)?;
    let n = infl.n() as f64;
    let se = (0..infl.times().len()).map(|k| (infl.second_moment(k) / n).sqrt()).collect();
    Ok(ConfidenceBand::build(
        infl.times().to_vec(),
        center.to_vec(),
        se,
        level,
        critical,
        BandKind::Simultaneous,
        Some(resamples),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn estimate(t: f64, theta: f64) -> PaucEstimate {
        PaucEstimate {
            t,
            alpha: 0.2,
            theta,
            quantile: crate::pauc::Quantile::NegInf,
            kind: EstimatorKind::Complete,
            se: None,
        }
    }

    #[test]
    fn zero_variance_gives_zero_width() {
        let cov = CovarianceFunction::from_matrix(vec![1.0], 100, vec![vec![0.0]]);
        let band = pointwise_ci(&estimate(1.0, 0.05), &cov, 0.95).unwrap();
        assert_eq!(band.lower[0], 0.05);
        assert_eq!(band.upper[0], 0.05);
    }

    #[test]
    fn half_width_arithmetic() {
        let cov = CovarianceFunction::from_matrix(vec![1.0], 100, vec![vec![0.01]]);
        let band = pointwise_ci(&estimate(1.0, 0.5), &cov, 0.95).unwrap();
        let half = band.upper[0] - band.center[0];
        assert!((half - 1.959964 * 0.01).abs() < 1e-8);
        assert!(pointwise_ci(&estimate(1.0, 0.5), &cov, 1.0).is_err());
    }

    #[test]
    fn nonfinite_variance_rejected() {
        let cov = CovarianceFunction::from_matrix(vec![1.0], 100, vec![vec![f64::NAN]]);
        assert!(pointwise_ci(&estimate(1.0, 0.5), &cov, 0.95).is_err());
    }

    #[test]
    fn single_time_covariance_is_second_moment() {
        let col = vec![0.5, -1.0, 2.0, 0.25];
        let infl = InfluenceMatrix::from_columns(vec![3.0], 0.1, EstimatorKind::Complete, vec![col.clone()])
            .unwrap();
        let cov = covariance(&infl);
        let m2 = col.iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert_eq!(cov.get(0, 0), m2);
    }

    #[test]
    fn duplicated_column_gives_identical_rows() {
        let a = vec![0.5, -1.0, 2.0, 0.25];
        let b = vec![1.5, 0.0, -2.0, 0.75];
        let infl = InfluenceMatrix::from_columns(
            vec![1.0, 2.0, 3.0],
            0.1,
            EstimatorKind::Complete,
            vec![a.clone(), b, a],
        )
        .unwrap();
        let cov = covariance(&infl);
        assert_eq!(cov.matrix()[0], cov.matrix()[2]);
        for r in 0..3 {
            assert_eq!(cov.get(r, 0), cov.get(r, 2));
        }
    }

    #[test]
    fn resampling_rejects_small_b_and_zero_variance() {
        let infl = InfluenceMatrix::from_columns(
            vec![1.0, 2.0],
            0.1,
            EstimatorKind::Complete,
            vec![vec![1.0, -1.0], vec![0.0, 0.0]],
        )
        .unwrap();
        assert!(multiplier_critical_value(&infl, 0.95, 50, 1).is_err());
        let err = multiplier_critical_value(&infl, 0.95, 200, 1).unwrap_err();
        assert!(err.to_string().contains("t = 2"));
    }
}
