//! Exact `θ_t(q_{αt})` under the simulation model by numerical integration.
//!
//! With `S(t, q) = ∫_q^∞ S_T(t|v) φ(v) dv` and `q` solving `S(t, q) = α S_T(t)`,
//!
//! ```text
//! θ_t(q) = [∫_q^∞ S_Y(u) S_T(t|u) φ(u) du − S(t, q)² / 2] / (S_T(t) (1 − S_T(t)))
//! ```

use super::{SimModel, Y_LIMIT};
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, bisect};
use crate::stats::{normal_pdf, normal_sf};

const TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct TruthOracle {
    model: SimModel,
}

impl TruthOracle {
    pub fn new(model: SimModel) -> Self {
        TruthOracle { model }
    }

    pub fn model(&self) -> &SimModel {
        &self.model
    }

    /// `S(t, q)`; `q = −∞` gives the marginal `S_T(t)`.
    pub fn joint_survival(&self, t: f64, q: f64) -> Result<f64> {
        let lo = q.max(-Y_LIMIT);
        if lo >= Y_LIMIT {
            return Ok(0.0);
        }
        adaptive_simpson(|v| self.model.conditional_survival(t, v) * normal_pdf(v), lo, Y_LIMIT, TOL)
    }

    pub fn marginal_survival(&self, t: f64) -> Result<f64> {
        self.joint_survival(t, f64::NEG_INFINITY)
    }

    /// `t_p` with `P(T ≤ t_p) = p`.
    pub fn time_quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::param("p", format!("must lie in (0, 1), got {p}")));
        }
        let centre = self.model.intercept;
        let spread = 12.0 * (self.model.log_sd + self.model.marker_slope.abs());
        let log_t = bisect(
            |lt| self.marginal_survival(lt.exp()).map(|s| (1.0 - s) - p),
            centre - spread,
            centre + spread,
            1e-13,
        )?;
        Ok(log_t.exp())
    }

    /// Threshold `q_{αt}` with false positive rate `α`; `−∞` for `α = 1`.
    pub fn threshold(&self, alpha: f64, t: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param("alpha", format!("must lie in (0, 1], got {alpha}")));
        }
        if alpha == 1.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let st = self.marginal_survival(t)?;
        bisect(|q| self.joint_survival(t, q).map(|s| s - alpha * st), -Y_LIMIT, Y_LIMIT, 1e-12)
    }

    /// `θ_t(q_{αt})`.
    pub fn theta(&self, alpha: f64, t: f64) -> Result<f64> {
        let st = self.marginal_survival(t)?;
        if !(st > 0.0 && st < 1.0) {
            return Err(Error::degenerate(t, "true marginal survival is 0 or 1"));
        }
        let q = self.threshold(alpha, t)?;
        let s_q = if q == f64::NEG_INFINITY { st } else { self.joint_survival(t, q)? };
        let first = adaptive_simpson(
            |u| normal_sf(u) * self.model.conditional_survival(t, u) * normal_pdf(u),
            q.max(-Y_LIMIT),
            Y_LIMIT,
            TOL,
        )?;
        Ok((first - 0.5 * s_q * s_q) / (st * (1.0 - st)))
    }

    /// `θ_{t_p}(q_{α t_p})`.
    pub fn true_pauc(&self, alpha: f64, p: f64) -> Result<f64> {
        self.theta(alpha, self.time_quantile(p)?)
    }
}
