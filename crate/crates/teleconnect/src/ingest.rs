//! Parsers for the upstream monthly ASCII data products and aggregation to
//! seasonal and annual resolution.
//!
//! Three table layouts are supported, all whitespace-separated with one
//! line per year and optional header lines (any line whose first
//! non-whitespace character is not a digit is skipped):
//!
//! * CET monthly: `YEAR m1 .. m12 annual` — the trailing annual-mean
//!   column is ignored in favor of recomputation; sentinel -99.9.
//! * NAO monthly: `YEAR m1 .. m12`; sentinels -99.9 and -99.99.
//! * PDO monthly: `YEAR m1 .. m12`; sentinel 99.99.
//!
//! Files may use LF or CRLF line endings; encoding is ASCII.

use serde::Serialize;

use crate::series::{Period, TimeSeries};
use crate::{Error, Result};

/// Which upstream product a table came from; fixes grammar and sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    CetMonthly,
    NaoMonthly,
    PdoMonthly,
}

impl Source {
    fn has_annual_column(self) -> bool {
        matches!(self, Source::CetMonthly)
    }

    fn sentinels(self) -> &'static [f64] {
        match self {
            Source::CetMonthly => &[-99.9],
            Source::NaoMonthly => &[-99.9, -99.99],
            Source::PdoMonthly => &[99.99],
        }
    }

    fn units(self) -> &'static str {
        match self {
            Source::CetMonthly => "degC",
            Source::NaoMonthly | Source::PdoMonthly => "index",
        }
    }
}

/// One year of monthly values; None marks a sentinel-coded missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub year: i32,
    pub months: [Option<f64>; 12],
}

/// A parsed monthly table.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub source: Source,
    pub rows: Vec<RawRow>,
}

impl RawTable {
    pub fn first_year(&self) -> i32 {
        self.rows[0].year
    }

    pub fn last_year(&self) -> i32 {
        self.rows[self.rows.len() - 1].year
    }
}

/// Season labels in the order (spring, summer, autumn, winter).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Spring,
    Summer,
    Autumn,
    Winter,
}

pub const SEASONS: [Season; 4] = [Season::Spring, Season::Summer, Season::Autumn, Season::Winter];

/// Season-to-month mapping. With `winter_uses_prior_december` the winter
/// of year Y averages Dec(Y-1), Jan(Y) and Feb(Y), and the first table
/// year has no winter value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeasonConvention {
    pub winter_uses_prior_december: bool,
}

impl Default for SeasonConvention {
    fn default() -> Self {
        // Climatological DJF with December taken from the prior year.
        SeasonConvention {
            winter_uses_prior_december: true,
        }
    }
}

impl SeasonConvention {
    /// 1-based months of a season; winter months refer to the same year
    /// unless `winter_uses_prior_december` moves December back a year.
    pub fn months(&self, season: Season) -> [u32; 3] {
        match season {
            Season::Spring => [3, 4, 5],
            Season::Summer => [6, 7, 8],
            Season::Autumn => [9, 10, 11],
            Season::Winter => [12, 1, 2],
        }
    }
}

/// Parses a complete file in the grammar of `source`.
pub fn parse_table(text: &str, source: Source) -> Result<RawTable> {
    let expected = if source.has_annual_column() { 14 } else { 13 };
    let mut rows: Vec<RawRow> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        let trimmed = line.trim_start();
        // Header / comment lines start with a non-digit.
        match trimmed.chars().next() {
            None => continue,
            Some(c) if !c.is_ascii_digit() => continue,
            Some(_) => {}
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != expected {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {expected} columns, found {}", tokens.len()),
            });
        }
        let year: i32 = tokens[0].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("invalid year '{}'", tokens[0]),
        })?;
        let mut months = [None; 12];
        for m in 0..12 {
            let cell = tokens[1 + m];
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-numeric cell '{cell}' in month {}", m + 1),
            })?;
            months[m] = if source.sentinels().contains(&value) {
                None
            } else {
                Some(value)
            };
        }
        // The trailing annual column of CET files is validated as numeric
        // but otherwise ignored.
        if source.has_annual_column() {
            let cell = tokens[13];
            let _: f64 = cell.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-numeric annual cell '{cell}'"),
            })?;
        }
        if let Some(last) = rows.last() {
            if year <= last.year {
                return Err(Error::Structural(format!(
                    "year {year} at line {line_no} does not increase past {}",
                    last.year
                )));
            }
            if year != last.year + 1 {
                return Err(Error::Structural(format!(
                    "gap in years between {} and {year}",
                    last.year
                )));
            }
        }
        rows.push(RawRow { year, months });
    }
    if rows.is_empty() {
        return Err(Error::Structural("no data rows found".to_string()));
    }
    Ok(RawTable { source, rows })
}

/// Serializes a table back to its source grammar. Reparsing the output
/// yields an identical table.
pub fn serialize_table(table: &RawTable) -> String {
    let mut out = String::new();
    for row in &table.rows {
        out.push_str(&format!("{:5}", row.year));
        for m in &row.months {
            match m {
                Some(v) => out.push_str(&format!(" {:8}", v)),
                None => out.push_str(&format!(" {:8}", table.source.sentinels()[0])),
            }
        }
        if table.source.has_annual_column() {
            // Recomputed annual mean, or the sentinel when incomplete.
            let vals: Vec<f64> = row.months.iter().flatten().copied().collect();
            if vals.len() == 12 {
                let mean = vals.iter().sum::<f64>() / 12.0;
                out.push_str(&format!(" {:8.2}", mean));
            } else {
                out.push_str(&format!(" {:8}", table.source.sentinels()[0]));
            }
        }
        out.push('\n');
    }
    out
}

/// Annual means: the arithmetic mean of the 12 monthly values, missing
/// when any month is missing.
pub fn to_annual(table: &RawTable) -> Result<TimeSeries> {
    let values: Vec<Option<f64>> = table
        .rows
        .iter()
        .map(|row| {
            let vals: Vec<f64> = row.months.iter().flatten().copied().collect();
            if vals.len() == 12 {
                Some(vals.iter().sum::<f64>() / 12.0)
            } else {
                None
            }
        })
        .collect();
    TimeSeries::with_missing(table.first_year(), Period::Annual, values, table.source.units())
}

/// Seasonal means in the order (spring, summer, autumn, winter).
pub fn to_seasonal(table: &RawTable, conv: &SeasonConvention) -> Result<[TimeSeries; 4]> {
    let n = table.rows.len();
    let month = |year_idx: isize, m: u32| -> Option<f64> {
        if year_idx < 0 || year_idx as usize >= n {
            return None;
        }
        table.rows[year_idx as usize].months[(m - 1) as usize]
    };
    let mut out: Vec<TimeSeries> = Vec::with_capacity(4);
    for season in SEASONS {
        let months = conv.months(season);
        let mut values: Vec<Option<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = 0.0;
            let mut ok = true;
            for &m in &months {
                let idx = if season == Season::Winter && m == 12 && conv.winter_uses_prior_december
                {
                    i as isize - 1
                } else {
                    i as isize
                };
                match month(idx, m) {
                    Some(v) => acc += v,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            values.push(if ok { Some(acc / 3.0) } else { None });
        }
        out.push(TimeSeries::with_missing(
            table.first_year(),
            Period::Annual,
            values,
            table.source.units(),
        )?);
    }
    Ok([
        out.remove(0),
        out.remove(0),
        out.remove(0),
        out.remove(0),
    ])
}

/// Years and aligned columns after dropping rows with missing values.
#[derive(Debug, Clone)]
pub struct AlignedMatrix {
    pub years: Vec<i32>,
    /// One column per input series, all of equal length.
    pub columns: Vec<Vec<f64>>,
    /// Years inside the window that were dropped for missing values.
    pub dropped_years: Vec<i32>,
}

impl AlignedMatrix {
    pub fn n_rows(&self) -> usize {
        self.years.len()
    }

    /// Column i as an annual TimeSeries; valid only when the retained
    /// years are contiguous (no interior drops).
    pub fn column_series(&self, i: usize, units: &str) -> Result<TimeSeries> {
        for w in self.years.windows(2) {
            if w[1] != w[0] + 1 {
                return Err(Error::Alignment(format!(
                    "aligned years are not contiguous between {} and {}",
                    w[0], w[1]
                )));
            }
        }
        TimeSeries::new(self.years[0], Period::Annual, self.columns[i].clone(), units)
    }
}

/// Aligns annual series on the intersection of their spans clipped to
/// [start, end], dropping any rows with missing values.
pub fn align(
    series_list: &[&TimeSeries],
    start: Option<i32>,
    end: Option<i32>,
) -> Result<AlignedMatrix> {
    if series_list.is_empty() {
        return Err(Error::Alignment("no series to align".to_string()));
    }
    let period = series_list[0].period();
    for s in series_list {
        if s.period() != period {
            return Err(Error::Alignment("series have different periods".to_string()));
        }
    }
    let mut lo = series_list
        .iter()
        .map(|s| s.start_year())
        .max()
        .expect("nonempty");
    let mut hi = series_list
        .iter()
        .map(|s| s.start_year() + s.len() as i32 - 1)
        .min()
        .expect("nonempty");
    if let Some(s) = start {
        lo = lo.max(s);
    }
    if let Some(e) = end {
        hi = hi.min(e);
    }
    if lo > hi {
        return Err(Error::Alignment(format!(
            "empty intersection: window [{lo}, {hi}]"
        )));
    }
    let mut years = Vec::new();
    let mut dropped = Vec::new();
    let mut columns = vec![Vec::new(); series_list.len()];
    for year in lo..=hi {
        let mut row = Vec::with_capacity(series_list.len());
        let mut ok = true;
        for s in series_list {
            let idx = (year - s.start_year()) as usize;
            match s.get(idx) {
                Some(v) => row.push(v),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            years.push(year);
            for (c, v) in columns.iter_mut().zip(row) {
                c.push(v);
            }
        } else {
            dropped.push(year);
        }
    }
    if years.is_empty() {
        return Err(Error::Alignment(
            "no complete rows in the aligned window".to_string(),
        ));
    }
    Ok(AlignedMatrix {
        years,
        columns,
        dropped_years: dropped,
    })
}
