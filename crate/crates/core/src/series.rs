//! Chronicle data model: uniformly sampled series, CSV ingestion, alignment
//! of several series onto a shared grid, and elementwise transforms.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::Serialize;

use crate::error::{Error, Result};

/// Which days count as grid points for dated series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Calendar {
    /// Every calendar day.
    Daily,
    /// Monday to Friday; weekends are not grid points.
    Business,
}

// 1970-01-05 is a Monday.
fn monday_epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 5).expect("valid epoch")
}

impl Calendar {
    pub fn contains(self, date: NaiveDate) -> bool {
        match self {
            Calendar::Daily => true,
            Calendar::Business => !matches!(date.weekday(), Weekday::Sat | Weekday::Sun),
        }
    }

    /// Position of `date` on this calendar's integer axis. Weekend dates map
    /// onto the following Monday for the business calendar.
    pub fn ordinal(self, date: NaiveDate) -> i64 {
        let days = (date - monday_epoch()).num_days();
        match self {
            Calendar::Daily => days,
            Calendar::Business => {
                let week = days.div_euclid(7);
                let dow = days.rem_euclid(7).min(5);
                week * 5 + dow
            }
        }
    }

    pub fn date(self, ordinal: i64) -> NaiveDate {
        match self {
            Calendar::Daily => monday_epoch() + Duration::days(ordinal),
            Calendar::Business => {
                let week = ordinal.div_euclid(5);
                let dow = ordinal.rem_euclid(5);
                monday_epoch() + Duration::days(week * 7 + dow)
            }
        }
    }
}

/// Where index 0 of a chronicle sits in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Origin {
    /// Abstract time axis; the value is the time of index 0 in days.
    Abstract(f64),
    /// Calendar dates; index `i` falls `i * step` calendar units after `first`.
    Date { first: NaiveDate, calendar: Calendar },
}

impl Default for Origin {
    fn default() -> Self {
        Origin::Abstract(0.0)
    }
}

/// A uniformly sampled series. `None` marks a missing sample (warm-up or gap).
#[derive(Debug, Clone, PartialEq)]
pub struct Chronicle {
    label: String,
    origin: Origin,
    step: f64,
    values: Vec<Option<f64>>,
}

impl Chronicle {
    pub fn new(
        label: impl Into<String>,
        origin: Origin,
        step: f64,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Config(format!("step must be positive, got {step}")));
        }
        if matches!(origin, Origin::Date { .. }) && step.fract() != 0.0 {
            return Err(Error::Config(format!(
                "dated chronicles need a whole-number step, got {step}"
            )));
        }
        if let Some(i) = values.iter().position(|v| matches!(v, Some(x) if !x.is_finite())) {
            return Err(Error::Domain {
                index: i,
                message: "non-finite sample".into(),
            });
        }
        Ok(Self {
            label: label.into(),
            origin,
            step,
            values,
        })
    }

    /// Fully observed series on the abstract axis starting at 0 with unit step.
    pub fn from_values(label: impl Into<String>, values: &[f64]) -> Result<Self> {
        Self::new(
            label,
            Origin::Abstract(0.0),
            1.0,
            values.iter().copied().map(Some).collect(),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().flatten()
    }

    /// Number of non-missing samples.
    pub fn count_present(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Values with missing samples replaced by NaN, handy for numeric checks.
    pub fn to_nan_vec(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    }

    /// All samples, failing on the first missing one.
    pub fn dense(&self) -> Result<Vec<f64>> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| Error::Domain {
                    index: i,
                    message: "missing sample".into(),
                })
            })
            .collect()
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// A new chronicle on the same grid carrying `values`.
    pub fn with_values(&self, label: impl Into<String>, values: Vec<Option<f64>>) -> Chronicle {
        debug_assert_eq!(values.len(), self.values.len());
        Chronicle {
            label: label.into(),
            origin: self.origin,
            step: self.step,
            values,
        }
    }

    /// Pointwise map over present samples; missing stays missing.
    pub fn map(&self, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Chronicle {
        self.with_values(label, self.values.iter().map(|v| v.map(&f)).collect())
    }

    /// Time of sample `i` in days.
    pub fn time(&self, i: usize) -> f64 {
        let offset = i as f64 * self.step;
        match self.origin {
            Origin::Abstract(t0) => t0 + offset,
            Origin::Date { first, .. } => {
                (first - monday_epoch()).num_days() as f64 + offset
            }
        }
    }

    /// Human-readable timestamp of sample `i`: ISO date or abstract time.
    pub fn time_label(&self, i: usize) -> String {
        match self.origin {
            Origin::Abstract(_) => format!("{}", self.time(i)),
            Origin::Date { first, calendar } => {
                let ord = calendar.ordinal(first) + i as i64 * self.step as i64;
                calendar.date(ord).format("%Y-%m-%d").to_string()
            }
        }
    }

    /// Integer position of sample `i` on the shared axis used by [`align`].
    fn tick(&self, i: usize) -> Result<i64> {
        match self.origin {
            Origin::Abstract(t0) => {
                let base = t0 / self.step;
                let rounded = base.round();
                if (base - rounded).abs() > 1e-9 * base.abs().max(1.0) {
                    return Err(Error::GridMismatch(format!(
                        "origin {t0} of '{}' is not a multiple of step {}",
                        self.label, self.step
                    )));
                }
                Ok(rounded as i64 + i as i64)
            }
            Origin::Date { first, calendar } => {
                Ok(calendar.ordinal(first) + i as i64 * self.step as i64)
            }
        }
    }

    // Distance between consecutive ticks.
    fn stride(&self) -> i64 {
        match self.origin {
            Origin::Abstract(_) => 1,
            Origin::Date { .. } => self.step as i64,
        }
    }

    fn origin_at_tick(&self, tick: i64) -> Origin {
        match self.origin {
            Origin::Abstract(_) => Origin::Abstract(tick as f64 * self.step),
            Origin::Date { calendar, .. } => Origin::Date {
                first: calendar.date(tick),
                calendar,
            },
        }
    }

    /// Checks that `other` lives on exactly the same grid.
    pub fn check_same_grid(&self, other: &Chronicle) -> Result<()> {
        if self.len() != other.len() || self.step != other.step || self.origin != other.origin {
            return Err(Error::GridMismatch(format!(
                "'{}' ({} samples, step {}) and '{}' ({} samples, step {}) differ",
                self.label,
                self.len(),
                self.step,
                other.label,
                other.len(),
                other.step
            )));
        }
        Ok(())
    }
}

/// Several series restricted to their common span, with no missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    labels: Vec<String>,
    origin: Origin,
    step: f64,
    columns: Vec<Vec<f64>>,
}

impl AlignedPanel {
    pub fn new(labels: Vec<String>, origin: Origin, step: f64, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() || labels.len() != columns.len() {
            return Err(Error::Config(format!(
                "panel needs one label per column (labels {}, columns {})",
                labels.len(),
                columns.len()
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Config(format!("step must be positive, got {step}")));
        }
        let len = columns[0].len();
        for (label, c) in labels.iter().zip(&columns) {
            if c.len() != len {
                return Err(Error::LengthMismatch {
                    expected: len,
                    got: c.len(),
                });
            }
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::Domain {
                    index: i,
                    message: format!("non-finite value in column '{label}'"),
                });
            }
        }
        Ok(Self {
            labels,
            origin,
            step,
            columns,
        })
    }

    /// Panel on the abstract axis (origin 0, unit step).
    pub fn from_columns(labels: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(labels, Origin::Abstract(0.0), 1.0, columns)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    /// Prices of every column at grid index `t`.
    pub fn row(&self, t: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[t]).collect()
    }

    pub fn chronicle(&self, i: usize) -> Chronicle {
        Chronicle {
            label: self.labels[i].clone(),
            origin: self.origin,
            step: self.step,
            values: self.columns[i].iter().copied().map(Some).collect(),
        }
    }

    pub fn to_chronicles(&self) -> Vec<Chronicle> {
        (0..self.width()).map(|i| self.chronicle(i)).collect()
    }

    /// A chronicle on the panel grid, used for derived series (equity curves).
    pub fn grid_chronicle(&self, label: impl Into<String>, values: Vec<Option<f64>>) -> Chronicle {
        Chronicle {
            label: label.into(),
            origin: self.origin,
            step: self.step,
            values,
        }
    }
}

/// Restricts every series to the maximal common span, drops leading rows
/// where some series has not started yet, and forward-fills the remainder.
pub fn align(series: &[Chronicle]) -> Result<AlignedPanel> {
    let first = series
        .first()
        .ok_or_else(|| Error::Config("align needs at least one chronicle".into()))?;
    for s in &series[1..] {
        if s.step != first.step {
            return Err(Error::GridMismatch(format!(
                "step {} of '{}' differs from step {} of '{}'",
                s.step, s.label, first.step, first.label
            )));
        }
        let same_kind = match (first.origin, s.origin) {
            (Origin::Abstract(_), Origin::Abstract(_)) => true,
            (Origin::Date { calendar: a, .. }, Origin::Date { calendar: b, .. }) => a == b,
            _ => false,
        };
        if !same_kind {
            return Err(Error::GridMismatch(format!(
                "'{}' and '{}' use different time axes",
                first.label, s.label
            )));
        }
    }
    if series.iter().any(|s| s.is_empty()) {
        return Err(Error::DataQuality("empty common span".into()));
    }

    let stride = first.stride();
    let mut start = i64::MIN;
    let mut end = i64::MAX;
    for s in series {
        start = start.max(s.tick(0)?);
        end = end.min(s.tick(s.len() - 1)?);
    }
    if start > end {
        return Err(Error::DataQuality("empty common span".into()));
    }
    for s in series {
        if (start - s.tick(0)?).rem_euclid(stride) != 0 {
            return Err(Error::GridMismatch(format!(
                "'{}' is offset from the common grid",
                s.label
            )));
        }
    }
    let len = ((end - start) / stride + 1) as usize;

    let raw: Vec<&[Option<f64>]> = series
        .iter()
        .map(|s| {
            let off = ((start - s.tick(0).expect("checked above")) / stride) as usize;
            &s.values[off..off + len]
        })
        .collect();

    // First row from which every column has an observation.
    let lead = raw
        .iter()
        .map(|c| c.iter().position(|v| v.is_some()))
        .try_fold(0usize, |acc, p| p.map(|p| acc.max(p)))
        .ok_or_else(|| Error::DataQuality("a series has no observations in the common span".into()))?;

    let columns: Vec<Vec<f64>> = raw
        .iter()
        .map(|c| {
            let mut last = c[..=lead].iter().rev().find_map(|v| *v).expect("lead is observed");
            c[lead..]
                .iter()
                .map(|v| {
                    if let Some(x) = v {
                        last = *x;
                    }
                    last
                })
                .collect()
        })
        .collect();

    AlignedPanel::new(
        series.iter().map(|s| s.label.clone()).collect(),
        first.origin_at_tick(start + lead as i64 * stride),
        first.step,
        columns,
    )
}

/// Pointwise natural logarithm; every present sample must be positive.
pub fn log_transform(x: &Chronicle) -> Result<Chronicle> {
    if let Some(i) = x.values.iter().position(|v| matches!(v, Some(p) if *p <= 0.0)) {
        return Err(Error::Domain {
            index: i,
            message: format!("log of nonpositive value {}", x.values[i].unwrap()),
        });
    }
    Ok(x.map(format!("ln {}", x.label), f64::ln))
}

pub fn exp_transform(x: &Chronicle) -> Chronicle {
    x.map(format!("exp {}", x.label), f64::exp)
}

/// Ingestion knobs.
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Largest run of consecutive missing grid points that is forward-filled.
    pub max_gap: usize,
    /// Grid calendar; `None` picks business days unless a weekend date appears.
    pub calendar: Option<Calendar>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            max_gap: 10,
            calendar: None,
        }
    }
}

/// A loaded series plus the number of grid points that were forward-filled.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub chronicle: Chronicle,
    pub fill_count: usize,
}

/// A loaded multi-asset file; `fill_counts` is per column, in label order.
#[derive(Debug, Clone)]
pub struct LoadedPanel {
    pub panel: AlignedPanel,
    pub fill_counts: Vec<usize>,
}

pub fn load_csv(path: impl AsRef<Path>, value_column: &str) -> Result<Loaded> {
    load_csv_with(path, value_column, &LoadOptions::default())
}

pub fn load_csv_with(path: impl AsRef<Path>, value_column: &str, opts: &LoadOptions) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, value_column, opts)
}

/// Parses a `date,<value>` table from any reader.
pub fn read_csv<R: Read>(reader: R, value_column: &str, opts: &LoadOptions) -> Result<Loaded> {
    let table = DateTable::read(reader)?;
    let col = table.column_index(value_column)?;
    let calendar = opts.calendar.unwrap_or_else(|| table.detect_calendar());
    let (chronicle, fill_count) = table.build_column(col, calendar, opts.max_gap)?;
    Ok(Loaded {
        chronicle,
        fill_count,
    })
}

/// Loads a `date,<asset1>,<asset2>,...` file and aligns all columns.
pub fn load_panel_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<LoadedPanel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_panel_csv(file, opts)
}

pub fn read_panel_csv<R: Read>(reader: R, opts: &LoadOptions) -> Result<LoadedPanel> {
    let table = DateTable::read(reader)?;
    if table.headers.is_empty() {
        return Err(Error::Format("no value columns besides 'date'".into()));
    }
    let calendar = opts.calendar.unwrap_or_else(|| table.detect_calendar());
    let mut chronicles = Vec::with_capacity(table.headers.len());
    let mut fill_counts = Vec::with_capacity(table.headers.len());
    for col in 0..table.headers.len() {
        let (c, fills) = table.build_column(col, calendar, opts.max_gap)?;
        chronicles.push(c);
        fill_counts.push(fills);
    }
    Ok(LoadedPanel {
        panel: align(&chronicles)?,
        fill_counts,
    })
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    let head = if s.len() > 10 && matches!(s.as_bytes()[10], b'T' | b' ') {
        &s[..10]
    } else {
        s
    };
    NaiveDate::parse_from_str(head, "%Y-%m-%d").ok()
}

// Rows sorted by date; cells are `None` when blank.
struct DateTable {
    headers: Vec<String>,
    rows: Vec<(NaiveDate, Vec<Option<f64>>)>,
}

impl DateTable {
    fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::Format(format!("cannot read header row: {e}")))?
            .clone();
        let date_idx = header
            .iter()
            .position(|h| h.eq_ignore_ascii_case("date"))
            .ok_or_else(|| Error::Format("missing 'date' column".into()))?;
        let value_idx: Vec<usize> = (0..header.len()).filter(|&i| i != date_idx).collect();
        let headers = value_idx.iter().map(|&i| header[i].to_string()).collect();

        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Format(format!("row {}: {e}", line + 2)))?;
            let date = rec
                .get(date_idx)
                .and_then(parse_date)
                .ok_or_else(|| Error::Format(format!("row {}: unparseable date", line + 2)))?;
            let cells = value_idx
                .iter()
                .map(|&i| {
                    let cell = rec.get(i).unwrap_or("");
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        cell.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .map(Some)
                            .ok_or_else(|| {
                                Error::Format(format!(
                                    "row {}: unparseable number '{cell}' in column '{}'",
                                    line + 2,
                                    &header[i]
                                ))
                            })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((date, cells));
        }
        rows.sort_by_key(|r| r.0);
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Format(format!("duplicate date {}", w[0].0)));
        }
        Ok(Self { headers, rows })
    }

    fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing value column '{name}'")))
    }

    fn detect_calendar(&self) -> Calendar {
        if self.rows.iter().all(|(d, _)| Calendar::Business.contains(*d)) {
            Calendar::Business
        } else {
            Calendar::Daily
        }
    }

    fn build_column(&self, col: usize, calendar: Calendar, max_gap: usize) -> Result<(Chronicle, usize)> {
        let label = &self.headers[col];
        let obs: Vec<(NaiveDate, f64)> = self
            .rows
            .iter()
            .filter_map(|(d, cells)| cells[col].map(|v| (*d, v)))
            .collect();
        let (first, _) = *obs
            .first()
            .ok_or_else(|| Error::DataQuality(format!("column '{label}' has no observations")))?;
        if let Some((d, _)) = obs.iter().find(|(d, _)| !calendar.contains(*d)) {
            return Err(Error::Format(format!("date {d} is not on the {calendar:?} calendar")));
        }
        let base = calendar.ordinal(first);
        let mut values = Vec::with_capacity(obs.len());
        let mut fills = 0;
        let mut prev: Option<(NaiveDate, f64)> = None;
        for &(d, v) in &obs {
            if let Some((pd, pv)) = prev {
                let gap = (calendar.ordinal(d) - calendar.ordinal(pd) - 1) as usize;
                if gap > max_gap {
                    return Err(Error::DataQuality(format!(
                        "column '{label}': gap of {gap} missing steps between {pd} and {d} exceeds max_gap {max_gap}"
                    )));
                }
                values.extend(std::iter::repeat_n(Some(pv), gap));
                fills += gap;
            }
            values.push(Some(v));
            prev = Some((d, v));
        }
        debug_assert_eq!(values.len() as i64, calendar.ordinal(prev.unwrap().0) - base + 1);
        let chronicle = Chronicle::new(
            label.clone(),
            Origin::Date { first, calendar },
            1.0,
            values,
        )?;
        Ok((chronicle, fills))
    }
}

/// Writes chronicles sharing one grid as `date,<label>...`; missing is blank.
pub fn write_csv<W: Write>(writer: W, series: &[&Chronicle]) -> Result<()> {
    let first = series
        .first()
        .ok_or_else(|| Error::Config("nothing to write".into()))?;
    for s in &series[1..] {
        first.check_same_grid(s)?;
    }
    let time_header = match first.origin {
        Origin::Date { .. } => "date",
        Origin::Abstract(_) => "time",
    };
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Format(format!("csv write failed: {e}"));
    let mut header = vec![time_header.to_string()];
    header.extend(series.iter().map(|s| s.label.clone()));
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..first.len() {
        let mut rec = vec![first.time_label(i)];
        rec.extend(series.iter().map(|s| format_value(s.values[i])));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Format(format!("csv flush failed: {e}")))?;
    Ok(())
}

/// Shortest round-trip decimal form; missing becomes an empty field.
pub fn format_value(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, opts: &LoadOptions) -> Result<Loaded> {
        read_csv(text.as_bytes(), "price", opts)
    }

    #[test]
    fn three_row_file() {
        let l = load(
            "date,price\n2020-01-01,100\n2020-01-02,101\n2020-01-03,99\n",
            &LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(l.chronicle.len(), 3);
        assert_eq!(l.chronicle.step(), 1.0);
        assert_eq!(l.chronicle.dense().unwrap(), vec![100.0, 101.0, 99.0]);
        assert_eq!(l.fill_count, 0);
    }

    #[test]
    fn single_hole_is_forward_filled() {
        let l = load(
            "date,price\n2020-01-06,1\n2020-01-07,2\n2020-01-09,4\n",
            &LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(l.chronicle.dense().unwrap(), vec![1.0, 2.0, 2.0, 4.0]);
        assert_eq!(l.fill_count, 1);
        assert_eq!(l.chronicle.time_label(2), "2020-01-08");
    }

    #[test]
    fn weekend_dates_switch_to_daily_grid() {
        // 2020-01-04 is a Saturday.
        let l = load(
            "date,price\n2020-01-01,1\n2020-01-02,2\n2020-01-04,4\n",
            &LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(l.chronicle.dense().unwrap(), vec![1.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn weekends_are_not_gaps_on_business_grid() {
        // Friday then Monday.
        let l = load("date,price\n2020-01-03,1\n2020-01-06,2\n", &LoadOptions::default()).unwrap();
        assert_eq!(l.chronicle.len(), 2);
        assert_eq!(l.fill_count, 0);
    }

    #[test]
    fn long_hole_is_rejected() {
        let err = load(
            "date,price\n2020-01-01,1\n2020-01-31,2\n",
            &LoadOptions {
                max_gap: 10,
                calendar: Some(Calendar::Daily),
            },
        )
        .unwrap_err();
        match err {
            Error::DataQuality(msg) => assert!(msg.contains("2020-01-01") && msg.contains("29")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn format_errors() {
        let opts = LoadOptions::default();
        assert!(matches!(load("day,price\n2020-01-01,1\n", &opts), Err(Error::Format(_))));
        assert!(matches!(load("date,close\n2020-01-01,1\n", &opts), Err(Error::Format(_))));
        assert!(matches!(load("date,price\n2020-13-01,1\n", &opts), Err(Error::Format(_))));
        assert!(matches!(load("date,price\n2020-01-01,abc\n", &opts), Err(Error::Format(_))));
    }

    #[test]
    fn unsorted_rows_are_sorted() {
        let l = load(
            "date,price\n2020-01-03,3\n2020-01-01,1\n2020-01-02,2\n",
            &LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(l.chronicle.dense().unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn business_ordinal_roundtrip() {
        let mut d = NaiveDate::from_ymd_opt(1999, 12, 27).unwrap();
        for _ in 0..400 {
            if Calendar::Business.contains(d) {
                assert_eq!(Calendar::Business.date(Calendar::Business.ordinal(d)), d);
            }
            assert_eq!(Calendar::Daily.date(Calendar::Daily.ordinal(d)), d);
            d += Duration::days(1);
        }
    }

    fn abstract_series(label: &str, t0: f64, values: &[f64]) -> Chronicle {
        Chronicle::new(label, Origin::Abstract(t0), 1.0, values.iter().copied().map(Some).collect()).unwrap()
    }

    #[test]
    fn align_identical() {
        let a = abstract_series("a", 0.0, &[1.0, 2.0, 3.0]);
        let b = a.clone().with_label("b");
        let p = align(&[a, b]).unwrap();
        assert_eq!(p.width(), 2);
        assert_eq!(p.column(0), p.column(1));
    }

    #[test]
    fn align_intersects_spans() {
        let a = abstract_series("a", 0.0, &(0..=10).map(|v| v as f64).collect::<Vec<_>>());
        let b = abstract_series("b", 5.0, &(5..=15).map(|v| v as f64).collect::<Vec<_>>());
        let p = align(&[a, b]).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p.origin(), Origin::Abstract(5.0));
        assert_eq!(p.column(0), &[5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        assert_eq!(p.column(0), p.column(1));
    }

    #[test]
    fn align_errors() {
        assert!(matches!(align(&[]), Err(Error::Config(_))));
        let a = abstract_series("a", 0.0, &[1.0, 2.0]);
        let b = Chronicle::new("b", Origin::Abstract(0.0), 2.0, vec![Some(1.0)]).unwrap();
        assert!(matches!(align(&[a.clone(), b]), Err(Error::GridMismatch(_))));
        let c = abstract_series("c", 10.0, &[1.0, 2.0]);
        assert!(matches!(align(&[a, c]), Err(Error::DataQuality(_))));
    }

    #[test]
    fn align_trims_leading_gaps_and_fills() {
        let a = Chronicle::new(
            "a",
            Origin::Abstract(0.0),
            1.0,
            vec![None, Some(1.0), None, Some(3.0)],
        )
        .unwrap();
        let b = abstract_series("b", 0.0, &[9.0, 8.0, 7.0, 6.0]);
        let p = align(&[a, b]).unwrap();
        assert_eq!(p.column(0), &[1.0, 1.0, 3.0]);
        assert_eq!(p.column(1), &[8.0, 7.0, 6.0]);
        assert_eq!(p.origin(), Origin::Abstract(1.0));
    }

    #[test]
    fn log_transform_cases() {
        let ones = Chronicle::from_values("x", &[1.0; 4]).unwrap();
        assert_eq!(log_transform(&ones).unwrap().dense().unwrap(), vec![0.0; 4]);
        let e = Chronicle::from_values("x", &[std::f64::consts::E; 3]).unwrap();
        assert_eq!(log_transform(&e).unwrap().dense().unwrap(), vec![1.0; 3]);
        let bad = Chronicle::from_values("x", &[1.0, 0.0, 2.0]).unwrap();
        assert!(matches!(log_transform(&bad), Err(Error::Domain { index: 1, .. })));
        let gap = Chronicle::new("x", Origin::Abstract(0.0), 1.0, vec![None, Some(1.0)]).unwrap();
        assert_eq!(log_transform(&gap).unwrap().values(), &[None, Some(0.0)]);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(Chronicle::new("x", Origin::Abstract(0.0), 0.0, vec![]).is_err());
        assert!(Chronicle::new("x", Origin::Abstract(0.0), -1.0, vec![]).is_err());
    }

    #[test]
    fn panel_file() {
        let text = "date,a,b\n2020-01-06,1,\n2020-01-07,2,20\n2020-01-08,,30\n2020-01-09,4,40\n";
        let lp = read_panel_csv(text.as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(lp.panel.labels(), &["a".to_string(), "b".to_string()]);
        assert_eq!(lp.panel.column(0), &[2.0, 2.0, 4.0]);
        assert_eq!(lp.panel.column(1), &[20.0, 30.0, 40.0]);
        assert_eq!(lp.fill_counts, vec![1, 0]);
    }
}
