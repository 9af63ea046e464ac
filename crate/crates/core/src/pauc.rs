//! Time-dependent pAUC point estimators.
//!
//! Both estimators share one form. With per-subject survival weights
//! `s_i = Ŝ_T(t | Y_i)` (censored) or `s_i = I(T_i > t)` (complete data),
//!
//! ```text
//! θ̂_t(q̂) = n⁻² Σ_{i≠j} (1 − s_i) s_j I(Y_i > Y_j > q̂)  /  (Ŝ_T(t) (1 − Ŝ_T(t)))
//! ```
//!
//! The default evaluation sorts subjects by marker and uses prefix sums
//! (`O(n log n)`); [`PairMethod::PairLoop`] keeps the direct double loop.

use serde::{Serialize, Serializer};

use crate::data::{Cohort, TimeGrid};
use crate::error::{Error, Result};
use crate::survival::{self, conditional_km, ConditionalSurvivalSurface, Cut, JointSurvivor};

/// The FPR quantile `q̂_{αt}`: either below every marker or an observed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantile {
    NegInf,
    Marker(f64),
}

impl Quantile {
    pub fn value(self) -> f64 {
        match self {
            Quantile::NegInf => f64::NEG_INFINITY,
            Quantile::Marker(v) => v,
        }
    }
}

/// Serialized as a number, or `null` for `−∞`.
impl Serialize for Quantile {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Quantile::NegInf => serializer.serialize_none(),
            Quantile::Marker(v) => serializer.serialize_some(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Censored,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaucEstimate {
    pub t: f64,
    pub alpha: f64,
    pub theta: f64,
    pub quantile: Quantile,
    pub kind: EstimatorKind,
    pub se: Option<f64>,
}

impl PaucEstimate {
    /// `θ̂ / α`, the conditional concordance among controls above `q̂`.
    pub fn rescaled(&self) -> f64 {
        self.theta / self.alpha
    }
}

/// pAUC over the FPR range `[alpha_low, alpha_high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaucRange {
    pub t: f64,
    pub alpha_low: f64,
    pub alpha_high: f64,
    pub theta: f64,
    pub quantile_low: Quantile,
    pub quantile_high: Quantile,
    pub kind: EstimatorKind,
    pub se: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PairMethod {
    #[default]
    PrefixSum,
    PairLoop,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

pub(crate) fn cut_to_quantile(joint: &JointSurvivor, cut: Cut) -> Quantile {
    match cut {
        Cut::NegInf => Quantile::NegInf,
        Cut::Group(g) => Quantile::Marker(joint.group_value(g)),
    }
}

fn time_index(joint: &JointSurvivor, t: f64) -> Result<usize> {
    joint
        .times()
        .iter()
        .position(|&p| p == t)
        .ok_or_else(|| Error::param("time", format!("t = {t} is not on the evaluation grid")))
}

/// `q̂_{αt} = inf { y : FPR̂_t(y) ≤ α }`.
pub fn fpr_quantile(joint: &JointSurvivor, t: f64, alpha: f64) -> Result<Quantile> {
    check_alpha(alpha)?;
    let k = time_index(joint, t)?;
    joint.check_nondegenerate(k)?;
    Ok(cut_to_quantile(joint, joint.quantile_cut(k, alpha)))
}

/// Per-subject pair sums at one time and cut.
pub(crate) struct PairTerms {
    /// `Ĥ = n⁻² Σ_{i≠j} (1 − s_i) s_j φ_ij(q)`.
    pub h: f64,
    /// `Σ_{j : q < Y_j < Y_i} s_j`.
    pub below: Vec<f64>,
    /// `I(Y_i > q) Σ_{j : Y_j > Y_i} (1 − s_j)`.
    pub above: Vec<f64>,
}

pub(crate) fn pair_terms(cohort: &Cohort, s: &[f64], cut: Cut) -> PairTerms {
    let n = cohort.len();
    let order = cohort.marker_order();
    let groups = cohort.marker_groups();
    let first = cut.first_above();
    let mut below = vec![0.0; n];
    let mut above = vec![0.0; n];

    let mut running = 0.0;
    for &(a, b) in &groups[first.min(groups.len())..] {
        for &i in &order[a..b] {
            below[i] = running;
        }
        running += order[a..b].iter().map(|&j| s[j]).sum::<f64>();
    }
    let mut running = 0.0;
    for &(a, b) in groups[first.min(groups.len())..].iter().rev() {
        for &i in &order[a..b] {
            above[i] = running;
        }
        running += order[a..b].iter().map(|&j| 1.0 - s[j]).sum::<f64>();
    }
    let h = order.iter().map(|&i| (1.0 - s[i]) * below[i]).sum::<f64>() / (n as f64 * n as f64);
    PairTerms { h, below, above }
}

fn pair_loop(cohort: &Cohort, s: &[f64], q: f64) -> f64 {
    let n = cohort.len();
    let mut total = 0.0;
    for i in 0..n {
        let yi = cohort.marker(i);
        for j in 0..n {
            let yj = cohort.marker(j);
            if i != j && yi > yj && yj > q {
                total += (1.0 - s[i]) * s[j];
            }
        }
    }
    total / (n as f64 * n as f64)
}

pub(crate) fn estimate_at(
    cohort: &Cohort,
    joint: &JointSurvivor,
    s: &[f64],
    k: usize,
    alpha: f64,
    method: PairMethod,
    kind: EstimatorKind,
) -> Result<PaucEstimate> {
    joint.check_nondegenerate(k)?;
    let cut = joint.quantile_cut(k, alpha);
    let quantile = cut_to_quantile(joint, cut);
    let h = match method {
        PairMethod::PrefixSum => pair_terms(cohort, s, cut).h,
        PairMethod::PairLoop => pair_loop(cohort, s, quantile.value()),
    };
    let st = joint.marginal(k);
    Ok(PaucEstimate {
        t: joint.times()[k],
        alpha,
        theta: h / (st * (1.0 - st)),
        quantile,
        kind,
        se: None,
    })
}

/// Censored-data estimator built on the conditional Kaplan–Meier surface.
pub fn pauc_censored(
    surface: &ConditionalSurvivalSurface,
    joint: &JointSurvivor,
    cohort: &Cohort,
    t: f64,
    alpha: f64,
) -> Result<PaucEstimate> {
    pauc_censored_with(surface, joint, cohort, t, alpha, PairMethod::PrefixSum)
}

pub fn pauc_censored_with(
    surface: &ConditionalSurvivalSurface,
    joint: &JointSurvivor,
    cohort: &Cohort,
    t: f64,
    alpha: f64,
    method: PairMethod,
) -> Result<PaucEstimate> {
    check_alpha(alpha)?;
    let k = time_index(joint, t)?;
    estimate_at(cohort, joint, surface.st_column(k), k, alpha, method, EstimatorKind::Censored)
}

/// Empirical estimator for uncensored data.
pub fn pauc_complete(cohort: &Cohort, t: f64, alpha: f64) -> Result<PaucEstimate> {
    pauc_complete_with(cohort, t, alpha, PairMethod::PrefixSum)
}

pub fn pauc_complete_with(
    cohort: &Cohort,
    t: f64,
    alpha: f64,
    method: PairMethod,
) -> Result<PaucEstimate> {
    check_alpha(alpha)?;
    if !cohort.is_uncensored() {
        return Err(Error::Inapplicable(
            "cohort contains censored records; use the censored-data estimator".into(),
        ));
    }
    let grid = TimeGrid::single(t)?;
    let joint = JointSurvivor::empirical(cohort, &grid)?;
    let weights = survival::indicator_weights(cohort, &grid);
    estimate_at(cohort, &joint, &weights[0], 0, alpha, method, EstimatorKind::Complete)
}

/// `θ̂_t(q̂_{α_high,t}) − θ̂_t(q̂_{α_low,t})`.
pub fn pauc_range(
    surface: &ConditionalSurvivalSurface,
    joint: &JointSurvivor,
    cohort: &Cohort,
    t: f64,
    alpha_low: f64,
    alpha_high: f64,
) -> Result<PaucRange> {
    let k = time_index(joint, t)?;
    range_at(cohort, joint, surface.st_column(k), k, alpha_low, alpha_high, EstimatorKind::Censored)
}

fn check_range(alpha_low: f64, alpha_high: f64) -> Result<()> {
    if !(alpha_low >= 0.0 && alpha_low < alpha_high && alpha_high <= 1.0) {
        return Err(Error::param(
            "alpha range",
            format!("need 0 ≤ low < high ≤ 1, got [{alpha_low}, {alpha_high}]"),
        ));
    }
    Ok(())
}

fn range_at(
    cohort: &Cohort,
    joint: &JointSurvivor,
    s: &[f64],
    k: usize,
    alpha_low: f64,
    alpha_high: f64,
    kind: EstimatorKind,
) -> Result<PaucRange> {
    check_range(alpha_low, alpha_high)?;
    let hi = estimate_at(cohort, joint, s, k, alpha_high, PairMethod::PrefixSum, kind)?;
    let lo = estimate_at(cohort, joint, s, k, alpha_low, PairMethod::PrefixSum, kind)?;
    Ok(PaucRange {
        t: hi.t,
        alpha_low,
        alpha_high,
        theta: hi.theta - lo.theta,
        quantile_low: lo.quantile,
        quantile_high: hi.quantile,
        kind,
        se: None,
    })
}

/// Everything needed to estimate pAUCs, and their influence functions, on a grid.
///
/// Holds the per-subject survival weights `s_i(t)`, the martingale terms
/// `ξ̂_i(t)` (zero for complete data) and the joint survivor built from them.
#[derive(Debug, Clone)]
pub struct PaucFit<'a> {
    cohort: &'a Cohort,
    grid: TimeGrid,
    kind: EstimatorKind,
    bandwidth: Option<f64>,
    weights: Vec<Vec<f64>>,
    xi: Vec<Vec<f64>>,
    joint: JointSurvivor,
}

impl<'a> PaucFit<'a> {
    pub fn censored(cohort: &'a Cohort, bandwidth: f64, grid: &TimeGrid) -> Result<Self> {
        let surface = conditional_km(cohort, bandwidth, grid)?;
        Self::from_surface(cohort, &surface)
    }

    pub fn from_surface(cohort: &'a Cohort, surface: &ConditionalSurvivalSurface) -> Result<Self> {
        let joint = JointSurvivor::new(surface, cohort)?;
        let k_len = surface.grid().len();
        Ok(PaucFit {
            cohort,
            grid: surface.grid().clone(),
            kind: EstimatorKind::Censored,
            bandwidth: Some(surface.bandwidth()),
            weights: (0..k_len).map(|k| surface.st_column(k).to_vec()).collect(),
            xi: (0..k_len).map(|k| surface.xi_column(k).to_vec()).collect(),
            joint,
        })
    }

    pub fn complete(cohort: &'a Cohort, grid: &TimeGrid) -> Result<Self> {
        grid.validate_for(cohort)?;
        let joint = JointSurvivor::empirical(cohort, grid)?;
        let weights = survival::indicator_weights(cohort, grid);
        let xi = vec![vec![0.0; cohort.len()]; grid.len()];
        Ok(PaucFit {
            cohort,
            grid: grid.clone(),
            kind: EstimatorKind::Complete,
            bandwidth: None,
            weights,
            xi,
            joint,
        })
    }

    pub fn cohort(&self) -> &'a Cohort {
        self.cohort
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn bandwidth(&self) -> Option<f64> {
        self.bandwidth
    }

    pub fn joint(&self) -> &JointSurvivor {
        &self.joint
    }

    pub(crate) fn weights(&self, k: usize) -> &[f64] {
        &self.weights[k]
    }

    pub(crate) fn xi(&self, k: usize) -> &[f64] {
        &self.xi[k]
    }

    pub fn estimate(&self, k: usize, alpha: f64) -> Result<PaucEstimate> {
        check_alpha(alpha)?;
        estimate_at(self.cohort, &self.joint, &self.weights[k], k, alpha, PairMethod::PrefixSum, self.kind)
    }

    /// Estimates at every grid time.
    pub fn curve(&self, alpha: f64) -> Result<Vec<PaucEstimate>> {
        (0..self.grid.len()).map(|k| self.estimate(k, alpha)).collect()
    }

    pub fn range(&self, k: usize, alpha_low: f64, alpha_high: f64) -> Result<PaucRange> {
        range_at(self.cohort, &self.joint, &self.weights[k], k, alpha_low, alpha_high, self.kind)
    }
}
