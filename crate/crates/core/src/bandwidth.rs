//! Leave-one-out bandwidth selection.
//!
//! For a candidate `λ`, each subject's residual is `e_i = 1 − Ŝ_T^{(−i)}(X_i | Y_i)`,
//! computed with subject `i` removed and ranks recomputed. If the surface is
//! right, the uncensored residuals look like a censored sample from U(0, 1),
//! so the score is
//!
//! ```text
//! ISE(λ) = Σ_{i : δ_i = 1} (Ŝ_e(e_i) − (1 − e_i))²
//! ```
//!
//! with `Ŝ_e` the Kaplan–Meier curve of `{(e_i, δ_i)}` evaluated just after its
//! jump at `e_i`.

use serde::Serialize;

use crate::data::Cohort;
use crate::error::{Error, Result};
use crate::par;
use crate::survival::loo_survival;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub e: f64,
    pub event: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthSelection {
    pub chosen: f64,
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
    #[serde(skip)]
    pub residuals: Vec<Residual>,
}

/// `{0.01, 0.02, …, 0.20}`.
pub fn default_candidates() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 100.0).collect()
}

/// Candidates `min, min + step, …` up to `max` (inclusive, with a little slack
/// for accumulated rounding).
pub fn candidate_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min > 0.0 && max <= 1.0 && min <= max && step > 0.0) {
        return Err(Error::param(
            "grid",
            format!("need 0 < min <= max <= 1 and step > 0, got {min}, {max}, {step}"),
        ));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| min + k as f64 * step).map(|v| v.min(1.0)).collect())
}

pub fn loo_residuals(cohort: &Cohort, bandwidth: f64) -> Result<Vec<Residual>> {
    let e = par::map_range(cohort.len(), |i| loo_survival(cohort, bandwidth, i).map(|s| 1.0 - s));
    e.into_iter()
        .enumerate()
        .map(|(i, e)| Ok(Residual { e: e?.clamp(0.0, 1.0), event: cohort.event(i) }))
        .collect()
}

pub fn ise(residuals: &[Residual]) -> Result<f64> {
    if !residuals.iter().any(|r| r.event) {
        return Err(Error::Validation("residual ISE needs at least one uncensored residual".into()));
    }
    let mut sorted = residuals.to_vec();
    sorted.sort_by(|a, b| a.e.total_cmp(&b.e).then(b.event.cmp(&a.event)));

    let m = sorted.len();
    let mut at_risk = m;
    let mut km = 1.0;
    let mut total = 0.0;
    let mut pos = 0;
    while pos < m {
        let e = sorted[pos].e;
        let mut end = pos;
        while end < m && sorted[end].e == e {
            end += 1;
        }
        let deaths = sorted[pos..end].iter().filter(|r| r.event).count();
        if deaths > 0 {
            km *= 1.0 - deaths as f64 / at_risk as f64;
            total += deaths as f64 * (km - (1.0 - e)).powi(2);
        }
        at_risk -= end - pos;
        pos = end;
    }
    Ok(total)
}

/// Minimizes `ISE(λ)` over `candidates`; ties go to the smallest `λ`.
pub fn select_bandwidth(cohort: &Cohort, candidates: &[f64]) -> Result<BandwidthSelection> {
    if candidates.is_empty() {
        return Err(Error::param("grid", "candidate grid is empty"));
    }
    if let Some(bad) = candidates.iter().find(|&&l| !(l > 0.0 && l <= 1.0)) {
        return Err(Error::param("grid", format!("bandwidth {bad} outside (0, 1]")));
    }
    let mut scored = Vec::with_capacity(candidates.len());
    for &lambda in candidates {
        let residuals = loo_residuals(cohort, lambda)?;
        let score = ise(&residuals)?;
        if !score.is_finite() {
            return Err(Error::Numeric(format!("ISE at λ = {lambda} is {score}")));
        }
        scored.push((lambda, score, residuals));
    }
    let best = scored
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .map(|(idx, _)| idx)
        .expect("nonempty");
    log::debug!("selected bandwidth {} (ISE {})", scored[best].0, scored[best].1);
    let scores = scored.iter().map(|s| s.1).collect();
    let (chosen, _, residuals) = scored.swap_remove(best);
    Ok(BandwidthSelection { chosen, grid: candidates.to_vec(), scores, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn events(es: &[f64]) -> Vec<Residual> {
        es.iter().map(|&e| Residual { e, event: true }).collect()
    }

    #[test]
    fn three_point_ise() {
        let got = ise(&events(&[0.25, 0.5, 0.75])).unwrap();
        let want = 1.0 / 144.0 + 1.0 / 36.0 + 1.0 / 16.0;
        assert!((got - want).abs() < 1e-15, "{got} vs {want}");
    }

    #[test]
    fn single_residual() {
        assert_eq!(ise(&events(&[0.5])).unwrap(), 0.25);
    }

    #[test]
    fn calibrated_step_grid() {
        let n = 40;
        let es: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        assert!(ise(&events(&es)).unwrap() < 1e-28);
    }

    #[test]
    fn no_events_is_an_error() {
        let r = vec![Residual { e: 0.3, event: false }];
        assert!(ise(&r).is_err());
    }

    #[test]
    fn censored_residuals_only_change_risk_set() {
        // censored at 0.1 leaves 3 at risk for the event at 0.5: KM = 2/3
        let r = vec![
            Residual { e: 0.1, event: false },
            Residual { e: 0.5, event: true },
            Residual { e: 0.7, event: false },
            Residual { e: 0.9, event: false },
        ];
        let want = (2.0f64 / 3.0 - 0.5).powi(2);
        assert!((ise(&r).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn loo_with_full_bandwidth() {
        let c = Cohort::from_columns(&[1.0, 2.0, 3.0], &[true; 3], &[0.3, 0.1, 0.2]).unwrap();
        let r = loo_residuals(&c, 1.0).unwrap();
        // largest time: the other two form a pooled KM that is 0 at 3
        assert_eq!(r[2].e, 1.0);
        // earliest time: nothing else has failed by 1
        assert_eq!(r[0].e, 0.0);
        // lowest marker: recomputed ranks put it at 1 and subject 0 at 0, a
        // distance of exactly λ, so the open window keeps only subject 2
        assert_eq!(r[1].e, 0.0);
    }

    #[test]
    fn single_candidate_is_chosen() {
        let c = Cohort::from_columns(
            &[1.0, 2.0, 3.0, 4.0, 5.0],
            &[true, false, true, true, false],
            &[0.5, 0.1, 0.9, 0.3, 0.7],
        )
        .unwrap();
        let sel = select_bandwidth(&c, &[0.4]).unwrap();
        assert_eq!(sel.chosen, 0.4);
        assert_eq!(sel.scores.len(), 1);
        assert!(select_bandwidth(&c, &[]).is_err());
        assert!(select_bandwidth(&c, &[0.0]).is_err());
    }

    #[test]
    fn grid_construction() {
        let g = candidate_grid(0.01, 0.2, 0.01).unwrap();
        assert_eq!(g.len(), 20);
        assert!((g[19] - 0.2).abs() < 1e-12);
        assert_eq!(default_candidates().len(), 20);
        assert!(candidate_grid(0.0, 0.2, 0.01).is_err());
    }
}
