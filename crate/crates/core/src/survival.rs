//! Nearest-neighbor conditional Kaplan–Meier estimation on marker ranks.
//!
//! For a subject `j` the uniform kernel `K_λ(u) = (2λ)⁻¹ I(|u| < λ)` applied to
//! rank differences `Ŝ_Y(Y_k) − Ŝ_Y(Y_j)` selects a window `W_j` of neighbors.
//! Within that window every product-limit factor is `1 − 1/R`, where `R` is the
//! number of window members still at risk, and `Ŝ_X(u | Y_j) = R / (2λn)`.

use serde::Serialize;

use crate::data::{Cohort, TimeGrid};
use crate::error::{Error, Result};
use crate::par;
use crate::DEGENERACY_EPS;

/// Floor applied inside `ln Ŝ_T` when a product-limit factor reaches zero.
pub const LOG_FLOOR: f64 = 1e-12;

/// Conditional survival quantities at each grid time, for every subject.
///
/// Matrices are stored time-major: `st[k][j] = Ŝ_T(t_k | Y_j)`.
#[derive(Debug, Clone)]
pub struct ConditionalSurvivalSurface {
    bandwidth: f64,
    grid: TimeGrid,
    event_times: Vec<f64>,
    st: Vec<Vec<f64>>,
    sx: Vec<Vec<f64>>,
    xi: Vec<Vec<f64>>,
    log_floor_hits: usize,
}

impl ConditionalSurvivalSurface {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Sorted distinct observed event times.
    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    pub fn n(&self) -> usize {
        self.st.first().map_or(0, Vec::len)
    }

    /// `Ŝ_T(t_k | Y_j)`.
    pub fn st(&self, k: usize, j: usize) -> f64 {
        self.st[k][j]
    }

    /// `Ŝ_X(t_k | Y_j)`.
    pub fn sx(&self, k: usize, j: usize) -> f64 {
        self.sx[k][j]
    }

    /// `ξ̂_j(t_k)`.
    pub fn xi(&self, k: usize, j: usize) -> f64 {
        self.xi[k][j]
    }

    pub fn st_column(&self, k: usize) -> &[f64] {
        &self.st[k]
    }

    pub fn sx_column(&self, k: usize) -> &[f64] {
        &self.sx[k]
    }

    pub fn xi_column(&self, k: usize) -> &[f64] {
        &self.xi[k]
    }

    /// Number of zero product-limit factors that hit [`LOG_FLOOR`] in `ξ̂`.
    pub fn log_floor_hits(&self) -> usize {
        self.log_floor_hits
    }

    /// Copy with `ξ̂ ≡ 0`, leaving only the plug-in part of the influence.
    pub fn without_martingale_term(&self) -> Self {
        let mut out = self.clone();
        out.xi.iter_mut().for_each(|col| col.iter_mut().for_each(|v| *v = 0.0));
        out
    }

    /// Write `subject, Ŝ_T(t_1|Y_j), ...` rows as CSV.
    pub fn write_csv<W: std::io::Write>(&self, writer: W, cohort: &Cohort) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["subject".to_string(), "marker".to_string()];
        header.extend(self.grid.points().iter().map(|t| format!("t={t}")));
        w.write_record(&header)?;
        for j in 0..self.n() {
            let mut row = vec![j.to_string(), cohort.marker(j).to_string()];
            row.extend(self.st.iter().map(|col| col[j].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_bandwidth(bandwidth: f64) -> Result<()> {
    if !(bandwidth > 0.0 && bandwidth <= 1.0) {
        return Err(Error::param("bandwidth", format!("must lie in (0, 1], got {bandwidth}")));
    }
    Ok(())
}

struct Column {
    st: Vec<f64>,
    sx: Vec<f64>,
    xi: Vec<f64>,
    floor_hits: usize,
}

/// Build `Ŝ_T(t | Y_j)`, `Ŝ_X(t | Y_j)` and `ξ̂_j(t)` for every subject and grid time.
pub fn conditional_km(
    cohort: &Cohort,
    bandwidth: f64,
    grid: &TimeGrid,
) -> Result<ConditionalSurvivalSurface> {
    check_bandwidth(bandwidth)?;
    grid.validate_for(cohort)?;
    let n = cohort.len();
    let columns = par::map_range(n, |j| subject_column(cohort, bandwidth, grid.points(), j));
    let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;

    let k_len = grid.len();
    let mut st = vec![vec![0.0; n]; k_len];
    let mut sx = vec![vec![0.0; n]; k_len];
    let mut xi = vec![vec![0.0; n]; k_len];
    let mut log_floor_hits = 0;
    for (j, col) in columns.into_iter().enumerate() {
        for k in 0..k_len {
            st[k][j] = col.st[k];
            sx[k][j] = col.sx[k];
            xi[k][j] = col.xi[k];
        }
        log_floor_hits += col.floor_hits;
    }
    if log_floor_hits > 0 {
        log::debug!("{log_floor_hits} zero product-limit factors floored at ln(1e-12)");
    }

    let mut event_times: Vec<f64> = cohort
        .time_order()
        .iter()
        .filter(|&&i| cohort.event(i))
        .map(|&i| cohort.time(i))
        .collect();
    event_times.dedup();

    Ok(ConditionalSurvivalSurface {
        bandwidth,
        grid: grid.clone(),
        event_times,
        st,
        sx,
        xi,
        log_floor_hits,
    })
}

/// Members of subject `j`'s kernel window, in time order.
fn window_members(cohort: &Cohort, bandwidth: f64, j: usize) -> Vec<usize> {
    let half_width = bandwidth * cohort.len() as f64;
    let cj = cohort.greater_count(j) as f64;
    cohort
        .time_order()
        .iter()
        .copied()
        .filter(|&k| (cohort.greater_count(k) as f64 - cj).abs() < half_width)
        .collect()
}

fn subject_column(cohort: &Cohort, bandwidth: f64, grid: &[f64], j: usize) -> Result<Column> {
    let members = window_members(cohort, bandwidth, j);
    let m = members.len();
    let kernel_scale = 2.0 * bandwidth * cohort.len() as f64;
    let own_time = cohort.time(j);
    let own_event = cohort.event(j);

    let k_len = grid.len();
    let mut col = Column {
        st: Vec::with_capacity(k_len),
        sx: Vec::with_capacity(k_len),
        xi: Vec::with_capacity(k_len),
        floor_hits: 0,
    };
    let record = |col: &mut Column, prod: f64, at_risk: usize, integral: f64| {
        col.st.push(prod);
        col.sx.push(at_risk as f64 / kernel_scale);
        col.xi.push(-prod * integral);
    };

    let mut at_risk = m;
    let mut prod = 1.0;
    // ∫ Ŝ_X⁻¹ dM̂_j over jumps up to the current block.
    let mut integral = 0.0;
    let mut k = 0;
    let mut pos = 0;
    while pos < m {
        let tau = cohort.time(members[pos]);
        let mut end = pos;
        let mut deaths = 0;
        while end < m && cohort.time(members[end]) == tau {
            deaths += usize::from(cohort.event(members[end]));
            end += 1;
        }
        while k < k_len && grid[k] < tau {
            record(&mut col, prod, at_risk, integral);
            k += 1;
        }
        if deaths > 0 {
            if at_risk == 0 {
                return Err(Error::Numeric(format!(
                    "empty at-risk set at event time {tau} for subject {j}"
                )));
            }
            let factor = (1.0 - 1.0 / at_risk as f64).clamp(0.0, 1.0);
            for _ in 0..deaths {
                prod *= factor;
            }
            if tau <= own_time {
                let log_factor = if factor >= LOG_FLOOR {
                    factor.ln()
                } else {
                    col.floor_hits += 1;
                    LOG_FLOOR.ln()
                };
                integral += deaths as f64 * log_factor * kernel_scale / at_risk as f64;
            }
        }
        if own_event && tau == own_time {
            integral += kernel_scale / at_risk as f64;
        }
        while k < k_len && grid[k] == tau {
            record(&mut col, prod, at_risk, integral);
            k += 1;
        }
        at_risk -= end - pos;
        pos = end;
    }
    while k < k_len {
        record(&mut col, prod, at_risk, integral);
        k += 1;
    }
    Ok(col)
}

/// `Ŝ_T^{(−i)}(X_i | Y_i)`: the conditional survival at subject `i`'s own
/// time, estimated from the other `n − 1` records with ranks recomputed.
pub fn loo_survival(cohort: &Cohort, bandwidth: f64, i: usize) -> Result<f64> {
    check_bandwidth(bandwidth)?;
    let n = cohort.len();
    if n < 3 {
        return Err(Error::Validation("leave-one-out needs at least 3 records".into()));
    }
    let half_width = bandwidth * (n - 1) as f64;
    let yi = cohort.marker(i);
    let ci = cohort.greater_count(i) as f64;
    let in_window = |k: usize| {
        let ck = cohort.greater_count(k) - usize::from(yi > cohort.marker(k));
        (ck as f64 - ci).abs() < half_width
    };
    let members: Vec<usize> =
        cohort.time_order().iter().copied().filter(|&k| k != i && in_window(k)).collect();

    let xi = cohort.time(i);
    let m = members.len();
    let mut at_risk = m;
    let mut prod = 1.0;
    let mut pos = 0;
    while pos < m {
        let tau = cohort.time(members[pos]);
        if tau > xi {
            break;
        }
        let mut end = pos;
        let mut deaths = 0;
        while end < m && cohort.time(members[end]) == tau {
            deaths += usize::from(cohort.event(members[end]));
            end += 1;
        }
        if deaths > 0 {
            let factor = (1.0 - 1.0 / at_risk as f64).clamp(0.0, 1.0);
            for _ in 0..deaths {
                prod *= factor;
            }
        }
        at_risk -= end - pos;
        pos = end;
    }
    Ok(prod)
}

/// Threshold on the marker: below every value, or at a distinct marker value
/// (identified by its position among the sorted distinct values).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cut {
    NegInf,
    Group(usize),
}

impl Cut {
    /// Index of the first marker group strictly above the cut.
    pub(crate) fn first_above(self) -> usize {
        match self {
            Cut::NegInf => 0,
            Cut::Group(g) => g + 1,
        }
    }
}

/// Plug-in joint survivor `Ŝ(t, y) = n⁻¹ Σ_i s_i(t) I(Y_i > y)` on a grid,
/// where `s_i(t)` is `Ŝ_T(t | Y_i)` or, for complete data, `I(T_i > t)`.
#[derive(Debug, Clone, Serialize)]
pub struct JointSurvivor {
    times: Vec<f64>,
    group_values: Vec<f64>,
    /// Fraction of subjects in marker groups `≥ h`, for `h = 0..=G`.
    marker_tail: Vec<f64>,
    /// `tail[k][h] = Ŝ(t_k, y)` for `y` just below group `h`; `tail[k][0] = Ŝ_T(t_k)`.
    tail: Vec<Vec<f64>>,
}

impl JointSurvivor {
    pub fn new(surface: &ConditionalSurvivalSurface, cohort: &Cohort) -> Result<Self> {
        if surface.n() != cohort.len() {
            return Err(Error::Validation("surface and cohort sizes differ".into()));
        }
        let weights: Vec<&[f64]> = (0..surface.grid().len()).map(|k| surface.st_column(k)).collect();
        Ok(Self::from_weights(cohort, surface.grid().points(), &weights))
    }

    /// The empirical `S̃(t, y) = n⁻¹ Σ I(T_i > t, Y_i > y)` for uncensored data.
    pub fn empirical(cohort: &Cohort, grid: &TimeGrid) -> Result<Self> {
        if !cohort.is_uncensored() {
            return Err(Error::Inapplicable(
                "the empirical joint survivor needs uncensored data".into(),
            ));
        }
        let weights = indicator_weights(cohort, grid);
        let refs: Vec<&[f64]> = weights.iter().map(Vec::as_slice).collect();
        Ok(Self::from_weights(cohort, grid.points(), &refs))
    }

    pub(crate) fn from_weights(cohort: &Cohort, times: &[f64], weights: &[&[f64]]) -> Self {
        let n = cohort.len() as f64;
        let groups = cohort.marker_groups();
        let order = cohort.marker_order();
        let g_len = groups.len();
        let group_values = (0..g_len).map(|g| cohort.group_value(g)).collect();
        let mut marker_tail = vec![0.0; g_len + 1];
        for h in (0..g_len).rev() {
            marker_tail[h] = (order.len() - groups[h].0) as f64 / n;
        }
        let tail = weights
            .iter()
            .map(|s| {
                let mut raw = vec![0.0; g_len + 1];
                for h in (0..g_len).rev() {
                    let (a, b) = groups[h];
                    let group_sum: f64 = order[a..b].iter().map(|&i| s[i]).sum();
                    raw[h] = raw[h + 1] + group_sum;
                }
                raw.iter().map(|v| v / n).collect()
            })
            .collect();
        JointSurvivor { times: times.to_vec(), group_values, marker_tail, tail }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `Ŝ_T(t_k) = Ŝ(t_k, −∞)`.
    pub fn marginal(&self, k: usize) -> f64 {
        self.tail[k][0]
    }

    fn first_group_above(&self, y: f64) -> usize {
        self.group_values.partition_point(|&v| v <= y)
    }

    /// `Ŝ(t_k, y)`; `y = −∞` gives the marginal.
    pub fn s_ty(&self, k: usize, y: f64) -> f64 {
        self.tail[k][self.first_group_above(y)]
    }

    pub(crate) fn s_at_cut(&self, k: usize, cut: Cut) -> f64 {
        self.tail[k][cut.first_above()]
    }

    /// `Ŝ_Y` at the cut: fraction of subjects with marker above it.
    pub(crate) fn marker_survival_at_cut(&self, cut: Cut) -> f64 {
        self.marker_tail[cut.first_above()]
    }

    pub(crate) fn group_value(&self, g: usize) -> f64 {
        self.group_values[g]
    }

    /// Error unless `Ŝ_T(t_k)` lies in `[ε, 1 − ε]`.
    pub fn check_nondegenerate(&self, k: usize) -> Result<()> {
        let s = self.marginal(k);
        let t = self.times[k];
        if s < DEGENERACY_EPS {
            return Err(Error::degenerate(t, format!("Ŝ_T(t) = {s:e}: no controls")));
        }
        if s > 1.0 - DEGENERACY_EPS {
            return Err(Error::degenerate(t, format!("Ŝ_T(t) = {s}: no cases")));
        }
        Ok(())
    }

    /// `FPR̂_t(y) = Ŝ(t, y) / Ŝ_T(t)`.
    pub fn fpr(&self, k: usize, y: f64) -> Result<f64> {
        self.check_nondegenerate(k)?;
        if y == f64::NEG_INFINITY {
            return Ok(1.0);
        }
        Ok(self.s_ty(k, y) / self.marginal(k))
    }

    /// `TPR̂_t(y) = (Ŝ_Y(y) − Ŝ(t, y)) / (1 − Ŝ_T(t))`.
    pub fn tpr(&self, k: usize, y: f64) -> Result<f64> {
        self.check_nondegenerate(k)?;
        if y == f64::NEG_INFINITY {
            return Ok(1.0);
        }
        let h = self.first_group_above(y);
        Ok((self.marker_tail[h] - self.tail[k][h]) / (1.0 - self.marginal(k)))
    }

    /// `inf { y : FPR̂_t(y) ≤ α }` over `{−∞} ∪ {observed markers}`.
    pub(crate) fn quantile_cut(&self, k: usize, alpha: f64) -> Cut {
        const TOL: f64 = 1e-12;
        if alpha >= 1.0 {
            return Cut::NegInf;
        }
        let total = self.marginal(k);
        let row = &self.tail[k];
        for g in 0..self.group_values.len() {
            if row[g + 1] / total <= alpha + TOL {
                return Cut::Group(g);
            }
        }
        // Ŝ(t, max marker) = 0, so the scan always returns above.
        Cut::Group(self.group_values.len() - 1)
    }
}

/// `I(X_i > t_k)` for every grid time.
pub(crate) fn indicator_weights(cohort: &Cohort, grid: &TimeGrid) -> Vec<Vec<f64>> {
    grid.points()
        .iter()
        .map(|&t| {
            cohort.records().iter().map(|r| if r.time > t { 1.0 } else { 0.0 }).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textbook_km(times: &[f64], t: f64) -> f64 {
        // all events, distinct times
        let mut s = 1.0;
        for &u in times {
            if u <= t {
                let at_risk = times.iter().filter(|&&v| v >= u).count() as f64;
                s *= 1.0 - 1.0 / at_risk;
            }
        }
        s
    }

    fn small_cohort() -> Cohort {
        let times = [3.1, 0.7, 2.2, 5.0, 1.4, 4.3, 2.9, 0.2];
        let markers = [0.4, -1.2, 2.0, 0.9, -0.3, 1.5, -0.8, 0.1];
        Cohort::from_columns(&times, &[true; 8], &markers).unwrap()
    }

    #[test]
    fn full_bandwidth_gives_pooled_km() {
        let c = small_cohort();
        let grid = TimeGrid::new(vec![0.5, 1.0, 2.5, 3.0, 4.9]).unwrap();
        let s = conditional_km(&c, 1.0, &grid).unwrap();
        let times: Vec<f64> = c.records().iter().map(|r| r.time).collect();
        for (k, &t) in grid.points().iter().enumerate() {
            let km = textbook_km(&times, t);
            for j in 0..c.len() {
                assert!((s.st(k, j) - km).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tiny_bandwidth_gives_own_indicator() {
        let c = small_cohort();
        let grid = TimeGrid::new(vec![0.5, 1.0, 2.5, 3.0, 4.9]).unwrap();
        let s = conditional_km(&c, 1.0 / c.len() as f64, &grid).unwrap();
        for (k, &t) in grid.points().iter().enumerate() {
            for j in 0..c.len() {
                let expect = if t < c.time(j) { 1.0 } else { 0.0 };
                assert_eq!(s.st(k, j), expect);
                assert_eq!(s.xi(k, j), 0.0);
            }
        }
    }

    #[test]
    fn surfaces_bounded_and_monotone() {
        let c = Cohort::from_columns(
            &[3.1, 0.7, 2.2, 5.0, 1.4, 4.3, 2.9, 0.2, 1.9, 3.3],
            &[true, false, true, true, false, true, true, false, true, false],
            &[0.4, -1.2, 2.0, 0.9, -0.3, 1.5, -0.8, 0.1, 0.7, -2.0],
        )
        .unwrap();
        let grid = TimeGrid::new(vec![0.5, 1.5, 2.0, 3.0, 4.0]).unwrap();
        for &lam in &[0.05, 0.2, 0.5, 1.0] {
            let s = conditional_km(&c, lam, &grid).unwrap();
            for j in 0..c.len() {
                for k in 0..grid.len() {
                    assert!((0.0..=1.0).contains(&s.st(k, j)));
                    assert!(s.sx(k, j) >= 0.0);
                    assert!(s.xi(k, j).is_finite());
                    if k > 0 {
                        assert!(s.st(k, j) <= s.st(k - 1, j));
                        assert!(s.sx(k, j) <= s.sx(k - 1, j));
                    }
                }
            }
        }
    }

    #[test]
    fn bandwidth_out_of_range() {
        let c = small_cohort();
        let grid = TimeGrid::single(1.0).unwrap();
        assert!(conditional_km(&c, 0.0, &grid).is_err());
        assert!(conditional_km(&c, 1.5, &grid).is_err());
    }

    #[test]
    fn xi_matches_direct_sum() {
        // Independent evaluation of ξ̂_j(t) from the definitions, one subject at a time.
        let c = Cohort::from_columns(
            &[3.1, 0.7, 2.2, 5.0, 1.4, 4.3, 2.9, 0.2, 1.9, 3.3],
            &[true, false, true, true, false, true, true, false, true, true],
            &[0.4, -1.2, 2.0, 0.9, -0.3, 1.5, -0.8, 0.1, 0.7, -2.0],
        )
        .unwrap();
        let n = c.len();
        let lam = 0.35;
        let grid = TimeGrid::new(vec![1.0, 2.5, 3.2, 4.5]).unwrap();
        let s = conditional_km(&c, lam, &grid).unwrap();
        let rank = |i: usize| c.records().iter().filter(|r| r.marker > c.marker(i)).count() as f64 / n as f64;
        let kern = |u: f64| if u.abs() < lam { 1.0 / (2.0 * lam) } else { 0.0 };
        let sx = |u: f64, j: usize| {
            (0..n).filter(|&k| c.time(k) >= u).map(|k| kern(rank(k) - rank(j))).sum::<f64>() / n as f64
        };
        let st = |u: f64, j: usize| {
            (0..n)
                .filter(|&i| c.event(i) && c.time(i) <= u && kern(rank(i) - rank(j)) > 0.0)
                .map(|i| 1.0 - kern(rank(i) - rank(j)) / (n as f64 * sx(c.time(i), j)))
                .product::<f64>()
        };
        for (k, &t) in grid.points().iter().enumerate() {
            for j in 0..n {
                let xj = c.time(j);
                let upper = t.min(xj);
                let mut jumps: Vec<f64> =
                    (0..n)
                        .filter(|&i| c.event(i) && c.time(i) <= upper && kern(rank(i) - rank(j)) > 0.0)
                        .map(|i| c.time(i))
                        .collect();
                jumps.sort_by(f64::total_cmp);
                jumps.dedup();
                let mut integral = 0.0;
                let mut prev = 1.0;
                for &u in &jumps {
                    let cur = st(u, j);
                    integral += (cur.ln() - f64::ln(prev)) / sx(u, j);
                    prev = cur;
                }
                if c.event(j) && xj <= t {
                    integral += 1.0 / sx(xj, j);
                }
                let expect = if st(t, j) < 1e-12 { 0.0 } else { -st(t, j) * integral };
                assert!((s.st(k, j) - st(t, j)).abs() < 1e-12, "st j={j} t={t}: {} vs {}", s.st(k, j), st(t, j));
                assert!(
                    (s.xi(k, j) - expect).abs() < 1e-9 * (1.0 + expect.abs()),
                    "j={j} t={t}: {} vs {expect}",
                    s.xi(k, j)
                );
            }
        }
    }

    #[test]
    fn joint_survivor_identities() {
        let c = small_cohort();
        let grid = TimeGrid::new(vec![1.0, 2.5]).unwrap();
        let s = conditional_km(&c, 0.3, &grid).unwrap();
        let j = JointSurvivor::new(&s, &c).unwrap();
        for k in 0..grid.len() {
            assert_eq!(j.fpr(k, f64::NEG_INFINITY).unwrap(), 1.0);
            assert_eq!(j.tpr(k, f64::NEG_INFINITY).unwrap(), 1.0);
            let direct: f64 = (0..c.len()).map(|i| s.st(k, i)).sum::<f64>() / c.len() as f64;
            assert!((j.marginal(k) - direct).abs() < 1e-14);
            assert!(j.s_ty(k, 0.3) <= j.marginal(k));
            assert_eq!(j.s_ty(k, 10.0), 0.0);
        }
    }

    #[test]
    fn empirical_joint_matches_indicators() {
        let c = small_cohort();
        let grid = TimeGrid::new(vec![1.0, 2.5, 4.0]).unwrap();
        let s = conditional_km(&c, 0.5 / c.len() as f64, &grid).unwrap();
        let from_surface = JointSurvivor::new(&s, &c).unwrap();
        let empirical = JointSurvivor::empirical(&c, &grid).unwrap();
        for k in 0..grid.len() {
            for &y in &[-5.0, -0.5, 0.0, 0.4, 1.0, 3.0] {
                let t = grid.points()[k];
                let direct = c.records().iter().filter(|r| r.time > t && r.marker > y).count()
                    as f64
                    / c.len() as f64;
                assert_eq!(from_surface.s_ty(k, y), direct);
                assert_eq!(empirical.s_ty(k, y), direct);
            }
        }
    }

    #[test]
    fn degenerate_time_detected() {
        let c = small_cohort();
        let grid = TimeGrid::new(vec![0.1]).unwrap();
        let j = JointSurvivor::empirical(&c, &grid).unwrap();
        assert!(j.fpr(0, 0.0).unwrap_err().is_degenerate());
    }

    #[test]
    fn loo_three_subjects_full_bandwidth() {
        // Remaining two subjects form a pooled KM; the largest time sees both others die first.
        let c = Cohort::from_columns(&[1.0, 2.0, 3.0], &[true; 3], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(loo_survival(&c, 1.0, 2).unwrap(), 0.0);
        assert_eq!(loo_survival(&c, 1.0, 1).unwrap(), 0.5);
        assert_eq!(loo_survival(&c, 1.0, 0).unwrap(), 1.0);
    }
}
