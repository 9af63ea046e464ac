//! Lognormal survival model with exponential censoring, its exact pAUC and a
//! Monte Carlo harness.
//!
//! Model: `Y ~ N(0, 1)`, `log T | Y = y ~ N(−β y + ln 10, σ²)` and
//! `C | Y = y ~ Exp(mean = 10 b {2 I(y < 0) + I(y ≥ 0)})`. Observed data are
//! `X = min(T, C)`, `δ = I(T ≤ C)`.

mod experiment;
mod truth;

pub use experiment::{
    run_table_experiment, BandRow, EstimatorSpec, ExperimentConfig, ExperimentReport, TableRow,
};
pub use truth::TruthOracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::data::Cohort;
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, bisect};
use crate::stats::{normal_pdf, normal_sf};

/// Integration limit for the standard normal marker.
pub(crate) const Y_LIMIT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimModel {
    /// `β` in `μ(y) = −β y + intercept`.
    pub marker_slope: f64,
    pub log_sd: f64,
    pub intercept: f64,
    /// Censoring mean doubles for `y < 0` when set.
    pub marker_dependent_censoring: bool,
}

impl Default for SimModel {
    fn default() -> Self {
        SimModel {
            marker_slope: 0.22,
            log_sd: 0.3,
            intercept: 10f64.ln(),
            marker_dependent_censoring: true,
        }
    }
}

impl SimModel {
    /// Marker independent of both `T` and `C`.
    pub fn null() -> Self {
        SimModel { marker_slope: 0.0, marker_dependent_censoring: false, ..SimModel::default() }
    }

    pub fn log_mean(&self, y: f64) -> f64 {
        -self.marker_slope * y + self.intercept
    }

    /// `S_T(t | y)`.
    pub fn conditional_survival(&self, t: f64, y: f64) -> f64 {
        normal_sf((t.ln() - self.log_mean(y)) / self.log_sd)
    }

    fn censoring_multiplier(&self, y: f64) -> f64 {
        if self.marker_dependent_censoring && y < 0.0 {
            2.0
        } else {
            1.0
        }
    }

    /// Mean of `C | Y = y` for scale constant `b`.
    pub fn censoring_mean(&self, b: f64, y: f64) -> f64 {
        10.0 * b * self.censoring_multiplier(y)
    }

    fn validate(&self) -> Result<()> {
        if !(self.log_sd > 0.0) || !self.marker_slope.is_finite() || !self.intercept.is_finite() {
            return Err(Error::param("model", format!("invalid model {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Censoring {
    None,
    Exponential { b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimDesign {
    pub n: usize,
    pub censoring: Censoring,
    pub seed: u64,
    pub replicates: usize,
    pub model: SimModel,
}

impl Default for SimDesign {
    fn default() -> Self {
        SimDesign {
            n: 500,
            censoring: Censoring::None,
            seed: 1,
            replicates: 200,
            model: SimModel::default(),
        }
    }
}

impl SimDesign {
    /// Design whose expected censoring fraction is `rate` (0 means no censoring).
    pub fn with_censoring_rate(mut self, rate: f64) -> Result<Self> {
        self.censoring = if rate == 0.0 {
            Censoring::None
        } else {
            let b = calibrate_censoring_scale(&self.model, rate)?;
            log::info!("censoring rate {rate}: calibrated b = {b:.6}");
            Censoring::Exponential { b }
        };
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n < 3 {
            return Err(Error::param("n", format!("need at least 3 subjects, got {}", self.n)));
        }
        if let Censoring::Exponential { b } = self.censoring {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::param("b", format!("censoring scale must be positive, got {b}")));
            }
        }
        Ok(())
    }
}

/// Draws replicate `replicate` of the design; ChaCha8 stream `replicate` of
/// the design seed, so replicates are independent of evaluation order.
pub fn generate_cohort(design: &SimDesign, replicate: u64) -> Result<Cohort> {
    design.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    rng.set_stream(replicate);
    let model = &design.model;
    let mut times = Vec::with_capacity(design.n);
    let mut events = Vec::with_capacity(design.n);
    let mut markers = Vec::with_capacity(design.n);
    for _ in 0..design.n {
        let y: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(Exp1);
        let t = (model.log_mean(y) + model.log_sd * z).exp();
        let c = match design.censoring {
            Censoring::None => f64::INFINITY,
            Censoring::Exponential { b } => e * model.censoring_mean(b, y),
        };
        times.push(t.min(c));
        events.push(t <= c);
        markers.push(y);
    }
    Cohort::from_columns(&times, &events, &markers)
}

/// `P(C < T)` under the model for scale constant `b`, by nested quadrature.
pub fn censoring_probability(model: &SimModel, b: f64) -> Result<f64> {
    let inner = |y: f64| -> f64 {
        let mean = model.censoring_mean(b, y);
        let mu = model.log_mean(y);
        // P(C < T | y) = E[1 − exp(−T / mean)]
        adaptive_simpson(
            |z| normal_pdf(z) * -(-(mu + model.log_sd * z).exp() / mean).exp_m1(),
            -Y_LIMIT,
            Y_LIMIT,
            1e-11,
        )
        .unwrap_or(f64::NAN)
    };
    let outer = |y: f64| normal_pdf(y) * inner(y);
    // the censoring mean jumps at y = 0
    let total = adaptive_simpson(outer, -Y_LIMIT, 0.0, 1e-9)? + adaptive_simpson(outer, 0.0, Y_LIMIT, 1e-9)?;
    if !total.is_finite() {
        return Err(Error::Numeric(format!("censoring probability at b = {b} did not converge")));
    }
    Ok(total)
}

/// Solves `P(C < T) = target` for `b` by bisection on `ln b`.
pub fn calibrate_censoring_scale(model: &SimModel, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::param("censor-rate", format!("must lie in (0, 1), got {target}")));
    }
    let log_b = bisect(
        |lb| censoring_probability(model, lb.exp()).map(|p| p - target),
        (1e-4f64).ln(),
        (1e4f64).ln(),
        1e-10,
    )?;
    Ok(log_b.exp())
}
