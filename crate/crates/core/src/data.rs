//! Survival records, cohort validation, time grids and CSV ingestion.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats;

/// One subject: follow-up time `X = min(T, C)`, event indicator, marker value
/// and an optional group label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalRecord {
    pub time: f64,
    /// `true` when the event was observed (`δ = 1`).
    pub event: bool,
    pub marker: f64,
    pub group: Option<i64>,
}

impl SurvivalRecord {
    pub fn new(time: f64, event: bool, marker: f64) -> Result<Self> {
        let rec = SurvivalRecord { time, event, marker, group: None };
        rec.validate().map_err(Error::Validation)?;
        Ok(rec)
    }

    pub fn with_group(mut self, group: i64) -> Self {
        self.group = Some(group);
        self
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !self.time.is_finite() || self.time < 0.0 {
            return Err(format!("time must be finite and nonnegative, got {}", self.time));
        }
        if !self.marker.is_finite() {
            return Err(format!("marker must be finite, got {}", self.marker));
        }
        Ok(())
    }
}

/// Counts reported after loading a cohort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CohortSummary {
    pub n: usize,
    pub events: usize,
    pub censored: usize,
    pub censoring_rate: f64,
    /// `n` minus the number of distinct marker values.
    pub marker_ties: usize,
}

/// A validated sample with cached marker and time orderings.
///
/// Marker ranks are stored as integer counts `#{j : Y_j > Y_i}` so that every
/// downstream quantity depends on the marker only through its ordering.
#[derive(Debug, Clone)]
pub struct Cohort {
    records: Vec<SurvivalRecord>,
    /// Subject indices sorted by marker, ascending (stable).
    marker_order: Vec<usize>,
    /// `[start, end)` ranges into `marker_order`, one per distinct marker value.
    marker_groups: Vec<(usize, usize)>,
    group_of: Vec<usize>,
    greater_count: Vec<usize>,
    /// Subject indices sorted by time, events before censorings at ties.
    time_order: Vec<usize>,
}

impl Cohort {
    pub fn new(records: Vec<SurvivalRecord>) -> Result<Self> {
        let n = records.len();
        if n < 2 {
            return Err(Error::Validation(format!("cohort needs at least 2 records, got {n}")));
        }
        for (i, r) in records.iter().enumerate() {
            r.validate().map_err(|message| Error::InvalidRow { row: i + 1, message })?;
        }
        if !records.iter().any(|r| r.event) {
            return Err(Error::Validation("cohort has zero observed events".into()));
        }

        let mut marker_order: Vec<usize> = (0..n).collect();
        marker_order.sort_by(|&a, &b| records[a].marker.total_cmp(&records[b].marker));
        let mut marker_groups = Vec::new();
        let mut group_of = vec![0; n];
        let mut start = 0;
        for pos in 1..=n {
            if pos == n
                || records[marker_order[pos]].marker != records[marker_order[start]].marker
            {
                for &i in &marker_order[start..pos] {
                    group_of[i] = marker_groups.len();
                }
                marker_groups.push((start, pos));
                start = pos;
            }
        }
        let greater_count = (0..n).map(|i| n - marker_groups[group_of[i]].1).collect();

        let mut time_order: Vec<usize> = (0..n).collect();
        time_order.sort_by(|&a, &b| {
            records[a]
                .time
                .total_cmp(&records[b].time)
                .then_with(|| records[b].event.cmp(&records[a].event))
        });

        let cohort =
            Cohort { records, marker_order, marker_groups, group_of, greater_count, time_order };
        let ties = cohort.summary().marker_ties;
        if ties > 0 {
            log::warn!("{ties} tied marker values; ties contribute zero to strict comparisons");
        }
        Ok(cohort)
    }

    /// Build from parallel columns of times, event flags and markers.
    pub fn from_columns(times: &[f64], events: &[bool], markers: &[f64]) -> Result<Self> {
        if times.len() != events.len() || times.len() != markers.len() {
            return Err(Error::Validation("column lengths differ".into()));
        }
        let records = times
            .iter()
            .zip(events)
            .zip(markers)
            .map(|((&time, &event), &marker)| SurvivalRecord { time, event, marker, group: None })
            .collect();
        Cohort::new(records)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }

    pub fn record(&self, i: usize) -> &SurvivalRecord {
        &self.records[i]
    }

    pub fn time(&self, i: usize) -> f64 {
        self.records[i].time
    }

    pub fn event(&self, i: usize) -> bool {
        self.records[i].event
    }

    pub fn marker(&self, i: usize) -> f64 {
        self.records[i].marker
    }

    pub fn max_time(&self) -> f64 {
        self.records[*self.time_order.last().unwrap()].time
    }

    pub fn is_uncensored(&self) -> bool {
        self.records.iter().all(|r| r.event)
    }

    /// `#{j : Y_j > Y_i}`; the empirical marker survivor is this over `n`.
    pub fn greater_count(&self, i: usize) -> usize {
        self.greater_count[i]
    }

    /// `Ŝ_Y(Y_i) = n⁻¹ #{j : Y_j > Y_i}`.
    pub fn marker_survival(&self, i: usize) -> f64 {
        self.greater_count[i] as f64 / self.len() as f64
    }

    pub(crate) fn marker_order(&self) -> &[usize] {
        &self.marker_order
    }

    pub(crate) fn marker_groups(&self) -> &[(usize, usize)] {
        &self.marker_groups
    }

    pub(crate) fn marker_group(&self, i: usize) -> usize {
        self.group_of[i]
    }

    pub(crate) fn group_value(&self, g: usize) -> f64 {
        self.records[self.marker_order[self.marker_groups[g].0]].marker
    }

    pub(crate) fn time_order(&self) -> &[usize] {
        &self.time_order
    }

    pub fn summary(&self) -> CohortSummary {
        let n = self.len();
        let events = self.records.iter().filter(|r| r.event).count();
        CohortSummary {
            n,
            events,
            censored: n - events,
            censoring_rate: (n - events) as f64 / n as f64,
            marker_ties: n - self.marker_groups.len(),
        }
    }

    /// Distinct group labels in ascending order.
    pub fn group_labels(&self) -> Vec<i64> {
        let mut labels: Vec<i64> = self.records.iter().filter_map(|r| r.group).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }

    /// Records carrying `label`, in file order.
    pub fn subset_by_group(&self, label: i64) -> Result<Cohort> {
        let records: Vec<_> =
            self.records.iter().filter(|r| r.group == Some(label)).copied().collect();
        Cohort::new(records)
    }
}

/// Strictly increasing evaluation times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param("grid", "time grid is empty"));
        }
        if let Some(t) = points.iter().find(|t| !t.is_finite() || **t <= 0.0) {
            return Err(Error::param("grid", format!("grid times must be positive, got {t}")));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("grid", "grid times must be strictly increasing"));
        }
        Ok(TimeGrid { points })
    }

    pub fn single(t: f64) -> Result<Self> {
        TimeGrid::new(vec![t])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Position of an exact grid time.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.points
            .iter()
            .position(|&p| p == t)
            .ok_or_else(|| Error::param("time", format!("t = {t} is not on the evaluation grid")))
    }

    /// Checks every point against the largest observed time.
    pub fn validate_for(&self, cohort: &Cohort) -> Result<()> {
        let max = cohort.max_time();
        if let Some(&t) = self.points.iter().find(|&&t| t > max) {
            return Err(Error::param(
                "grid",
                format!("t = {t} exceeds the largest observed time {max}"),
            ));
        }
        Ok(())
    }
}

/// Observed event times between the `lower` and `upper` empirical quantiles
/// (linear interpolation) of the follow-up times, inclusive.
pub fn default_grid(cohort: &Cohort, lower: f64, upper: f64) -> Result<TimeGrid> {
    if !(lower > 0.0 && lower < 1.0 && upper > 0.0 && upper < 1.0) {
        return Err(Error::param("quantile range", "quantiles must lie in (0, 1)"));
    }
    if lower >= upper {
        return Err(Error::param(
            "quantile range",
            format!("lower quantile {lower} must be below upper quantile {upper}"),
        ));
    }
    let sorted: Vec<f64> = cohort.time_order().iter().map(|&i| cohort.time(i)).collect();
    let lo = stats::quantile_sorted(&sorted, lower);
    let hi = stats::quantile_sorted(&sorted, upper);
    let mut points: Vec<f64> = cohort
        .time_order()
        .iter()
        .filter(|&&i| cohort.event(i))
        .map(|&i| cohort.time(i))
        .filter(|&t| t >= lo && t <= hi && t > 0.0)
        .collect();
    points.dedup();
    if points.is_empty() {
        return Err(Error::Validation(format!(
            "no event times between the {lower} and {upper} time quantiles; widen the range"
        )));
    }
    TimeGrid::new(points)
}

/// Column names used when reading a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub time: String,
    pub status: String,
    pub marker: String,
    pub group: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            time: "time".into(),
            status: "status".into(),
            marker: "marker".into(),
            group: None,
        }
    }
}

pub fn load_cohort(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<Cohort> {
    let file = std::fs::File::open(path.as_ref())?;
    read_cohort(file, columns)
}

/// Parse a headered CSV. Row numbers in errors count data rows from 1.
pub fn read_cohort<R: Read>(reader: R, columns: &ColumnMap) -> Result<Cohort> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let find = |name: &str| -> Result<usize> {
        index.get(name).copied().ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let time_col = find(&columns.time)?;
    let status_col = find(&columns.status)?;
    let marker_col = find(&columns.marker)?;
    let group_col = columns.group.as_deref().map(find).transpose()?;

    let mut records = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row_no = k + 1;
        let row = row?;
        let cell = |col: usize, name: &str| -> Result<f64> {
            let raw = row.get(col).unwrap_or("");
            raw.parse::<f64>().map_err(|_| Error::InvalidRow {
                row: row_no,
                message: format!("column `{name}`: cannot parse {raw:?} as a number"),
            })
        };
        let time = cell(time_col, &columns.time)?;
        let status = cell(status_col, &columns.status)?;
        let marker = cell(marker_col, &columns.marker)?;
        let event = match status {
            s if s == 1.0 => true,
            s if s == 0.0 => false,
            s => {
                return Err(Error::InvalidRow {
                    row: row_no,
                    message: format!("status must be 0 or 1, got {s}"),
                })
            }
        };
        let group = match group_col {
            Some(col) => {
                let g = cell(col, columns.group.as_deref().unwrap_or("group"))?;
                if g.fract() != 0.0 {
                    return Err(Error::InvalidRow {
                        row: row_no,
                        message: format!("group label must be an integer, got {g}"),
                    });
                }
                Some(g as i64)
            }
            None => None,
        };
        let rec = SurvivalRecord { time, event, marker, group };
        rec.validate().map_err(|message| Error::InvalidRow { row: row_no, message })?;
        records.push(rec);
    }
    Cohort::new(records)
}

/// Write `time,status,marker[,group]` with shortest round-trip float text.
pub fn write_cohort<W: Write>(writer: W, cohort: &Cohort) -> Result<()> {
    let with_group = cohort.records().iter().any(|r| r.group.is_some());
    let mut w = csv::Writer::from_writer(writer);
    if with_group {
        w.write_record(["time", "status", "marker", "group"])?;
    } else {
        w.write_record(["time", "status", "marker"])?;
    }
    for r in cohort.records() {
        let status = if r.event { "1" } else { "0" };
        let mut fields = vec![r.time.to_string(), status.to_string(), r.marker.to_string()];
        if with_group {
            fields.push(r.group.map(|g| g.to_string()).unwrap_or_default());
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_cohort(text: &str) -> Result<Cohort> {
        read_cohort(text.as_bytes(), &ColumnMap::default())
    }

    #[test]
    fn four_rows_censoring_rate() {
        let c = csv_cohort("time,status,marker\n1,1,0.5\n2,0,0.1\n3,1,0.7\n4,1,0.2\n").unwrap();
        let s = c.summary();
        assert_eq!(s.n, 4);
        assert_eq!(s.events, 3);
        assert_eq!(s.censoring_rate, 0.25);
        assert_eq!(s.marker_ties, 0);
    }

    #[test]
    fn negative_time_names_row() {
        let err = csv_cohort("time,status,marker\n1,1,0.5\n-2,0,0.1\n").unwrap_err();
        match err {
            Error::InvalidRow { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_named() {
        let err = csv_cohort("t,status,marker\n1,1,0.5\n").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "time"));
    }

    #[test]
    fn non_numeric_cell_reports_row() {
        let err = csv_cohort("time,status,marker\n1,1,0.5\n2,1,abc\n").unwrap_err();
        assert!(matches!(err, Error::InvalidRow { row: 2, .. }));
    }

    #[test]
    fn zero_events_rejected() {
        let err = csv_cohort("time,status,marker\n1,0,0.5\n2,0,0.1\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn custom_columns_and_groups() {
        let map = ColumnMap {
            time: "weeks".into(),
            status: "dead".into(),
            marker: "cd4".into(),
            group: Some("arm".into()),
        };
        let c = read_cohort("arm,cd4,weeks,dead\n1,3,10,1\n2,4,12,0\n1,5,8,1\n".as_bytes(), &map)
            .unwrap();
        assert_eq!(c.group_labels(), vec![1, 2]);
        assert_eq!(c.record(1).time, 12.0);
        assert!(!c.event(1));
    }

    #[test]
    fn marker_ties_counted() {
        let c = csv_cohort("time,status,marker\n1,1,0.5\n2,1,0.5\n3,1,0.5\n4,0,1\n").unwrap();
        assert_eq!(c.summary().marker_ties, 2);
        assert_eq!(c.greater_count(0), 1);
        assert_eq!(c.greater_count(3), 0);
    }

    #[test]
    fn time_order_puts_events_first() {
        let c = Cohort::from_columns(&[2.0, 2.0, 1.0], &[false, true, true], &[0.0, 1.0, 2.0])
            .unwrap();
        assert_eq!(c.time_order(), &[2, 1, 0]);
    }

    #[test]
    fn default_grid_quantile_range() {
        let times = [1.0, 2.0, 3.0, 4.0, 5.0];
        let c = Cohort::from_columns(&times, &[true; 5], &[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let g = default_grid(&c, 0.2, 0.8).unwrap();
        assert!(g.points().iter().all(|t| [2.0, 3.0, 4.0].contains(t)));
        assert!(!g.is_empty());
        assert!(default_grid(&c, 0.4, 0.4).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![2.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0]).is_err());
        let c = Cohort::from_columns(&[1.0, 2.0], &[true, true], &[0.0, 1.0]).unwrap();
        assert!(TimeGrid::new(vec![3.0]).unwrap().validate_for(&c).is_err());
        assert!(TimeGrid::new(vec![2.0]).unwrap().validate_for(&c).is_ok());
    }
}
