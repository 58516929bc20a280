//! Hourly smart-meter CSV ingest, cleaning and day aggregation.
//!
//! Input is long-format text, one reading per row. Readings that cannot be
//! used are kept as explicit gaps (`None`), never as zero, and every rejected
//! row is listed in the [`ParseReport`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeDelta, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use softshed_core::DemandProfile;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";
/// Upper bound on the hourly index span (about 1140 years).
const MAX_HOURS: i64 = 10_000_000;
const SAMPLE_DIAGNOSTICS: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("unusable header: {0}")]
    Header(String),
    #[error("no data rows")]
    Empty,
    #[error("{malformed} of {rows} rows are malformed; first problems: {samples:?}")]
    TooManyMalformed {
        malformed: usize,
        rows: usize,
        samples: Vec<String>,
    },
    #[error("timestamps span {0} hours, refusing to build the hourly index")]
    TimeSpan(i64),
    #[error("every consumer has missing readings")]
    NoCompleteConsumers,
    #[error("day {day} is not fully covered: {detail}")]
    PartialDay { day: NaiveDate, detail: String },
    #[error("no day is fully covered for every consumer")]
    NoCompleteDay,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] softshed_core::Error),
}

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

/// Column mapping for the long-format input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvFormat {
    pub consumer_column: String,
    pub timestamp_column: String,
    pub kwh_column: String,
    pub delimiter: u8,
}

impl Default for CsvFormat {
    fn default() -> Self {
        Self {
            consumer_column: "consumer_id".into(),
            timestamp_column: "timestamp".into(),
            kwh_column: "kwh".into(),
            delimiter: b',',
        }
    }
}

/// Consumers × hours matrix of readings on a contiguous hourly index.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadTable {
    consumer_ids: Vec<String>,
    timestamps: Vec<NaiveDateTime>,
    readings: Vec<Vec<Option<f64>>>,
}

impl LoadTable {
    /// Builds a table from consumer-major rows. Timestamps must be strictly
    /// increasing with hourly spacing.
    pub fn new(
        consumer_ids: Vec<String>,
        timestamps: Vec<NaiveDateTime>,
        readings: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if consumer_ids.len() != readings.len()
            || readings.iter().any(|r| r.len() != timestamps.len())
        {
            return Err(IngestError::Header("matrix dimensions do not match".into()));
        }
        if timestamps
            .windows(2)
            .any(|w| w[1] - w[0] != TimeDelta::hours(1))
        {
            return Err(IngestError::Header("timestamps are not hourly".into()));
        }
        Ok(Self {
            consumer_ids,
            timestamps,
            readings,
        })
    }

    pub fn consumer_ids(&self) -> &[String] {
        &self.consumer_ids
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn consumers(&self) -> usize {
        self.consumer_ids.len()
    }

    pub fn hours(&self) -> usize {
        self.timestamps.len()
    }

    pub fn readings(&self, consumer: usize) -> &[Option<f64>] {
        &self.readings[consumer]
    }

    pub fn missing(&self, consumer: usize) -> usize {
        self.readings[consumer]
            .iter()
            .filter(|r| r.is_none())
            .count()
    }

    pub fn total_missing(&self) -> usize {
        (0..self.consumers()).map(|c| self.missing(c)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedRow {
    /// One-based line in the source, header included.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParseReport {
    pub rows: usize,
    pub malformed: Vec<MalformedRow>,
    /// Repeated (consumer, hour) pairs; the first occurrence is kept.
    pub duplicates: Vec<(String, NaiveDateTime)>,
}

impl fmt::Display for ParseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows read: {}", self.rows)?;
        for m in &self.malformed {
            writeln!(f, "malformed line {}: {}", m.line, m.reason)?;
        }
        for (id, ts) in &self.duplicates {
            writeln!(
                f,
                "duplicate reading for {id} at {} (kept first)",
                ts.format(TIMESTAMP_FORMAT)
            )?;
        }
        Ok(())
    }
}

/// Parses an ISO-8601 hour timestamp. Offsets are dropped, keeping local
/// wall-clock time.
pub fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    let parsed = DateTime::parse_from_rfc3339(raw)
        .map(|dt| dt.naive_local())
        .ok()
        .or_else(|| {
            [
                "%Y-%m-%dT%H:%M:%S",
                "%Y-%m-%d %H:%M:%S",
                "%Y-%m-%dT%H:%M",
                "%Y-%m-%d %H:%M",
            ]
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
        })?;
    (parsed.minute() == 0 && parsed.second() == 0 && parsed.nanosecond() == 0).then_some(parsed)
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| IngestError::Header(format!("missing column {name:?} in {headers:?}")))
}

/// Reads long-format hourly readings into a [`LoadTable`].
///
/// Consumers are ordered by id. Rows with a bad id or timestamp are skipped;
/// rows with a bad reading leave a gap. Both are reported, and more than half
/// malformed rows is an error.
pub fn parse_load_csv<R: Read>(source: R, format: &CsvFormat) -> Result<(LoadTable, ParseReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .flexible(true)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Header(e.to_string()))?
        .clone();
    let id_col = column(&headers, &format.consumer_column)?;
    let ts_col = column(&headers, &format.timestamp_column)?;
    let kwh_col = column(&headers, &format.kwh_column)?;

    let mut report = ParseReport::default();
    let mut entries: Vec<(String, NaiveDateTime, Option<f64>)> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        report.rows += 1;
        let line = k as u64 + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                report.malformed.push(MalformedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let id = record.get(id_col).map(str::trim).unwrap_or("");
        if id.is_empty() {
            report.malformed.push(MalformedRow {
                line,
                reason: "missing consumer id".into(),
            });
            continue;
        }
        let raw_ts = record.get(ts_col).unwrap_or("");
        let Some(ts) = parse_timestamp(raw_ts) else {
            report.malformed.push(MalformedRow {
                line,
                reason: format!("bad timestamp {raw_ts:?}"),
            });
            continue;
        };
        let raw_kwh = record.get(kwh_col).unwrap_or("").trim();
        let kwh = match raw_kwh.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Some(v),
            _ => {
                report.malformed.push(MalformedRow {
                    line,
                    reason: format!("bad kWh value {raw_kwh:?}"),
                });
                None
            }
        };
        entries.push((id.to_string(), ts, kwh));
    }

    if report.rows == 0 {
        return Err(IngestError::Empty);
    }
    if 2 * report.malformed.len() > report.rows {
        return Err(IngestError::TooManyMalformed {
            malformed: report.malformed.len(),
            rows: report.rows,
            samples: report
                .malformed
                .iter()
                .take(SAMPLE_DIAGNOSTICS)
                .map(|m| format!("line {}: {}", m.line, m.reason))
                .collect(),
        });
    }
    if entries.is_empty() {
        return Err(IngestError::Empty);
    }

    let start = entries.iter().map(|e| e.1).min().expect("non-empty");
    let end = entries.iter().map(|e| e.1).max().expect("non-empty");
    let span = (end - start).num_hours() + 1;
    if span > MAX_HOURS {
        return Err(IngestError::TimeSpan(span));
    }
    let timestamps: Vec<NaiveDateTime> = (0..span).map(|h| start + TimeDelta::hours(h)).collect();
    let ids: BTreeSet<&str> = entries.iter().map(|e| e.0.as_str()).collect();
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();

    let hours = timestamps.len();
    let mut readings = vec![vec![None; hours]; ids.len()];
    let mut seen = vec![vec![false; hours]; ids.len()];
    for (id, ts, kwh) in &entries {
        let c = index[id.as_str()];
        let h = (*ts - start).num_hours() as usize;
        if seen[c][h] {
            report.duplicates.push((id.clone(), *ts));
            continue;
        }
        seen[c][h] = true;
        readings[c][h] = *kwh;
    }
    let consumer_ids = ids.into_iter().map(String::from).collect();
    Ok((
        LoadTable {
            consumer_ids,
            timestamps,
            readings,
        },
        report,
    ))
}

/// Writes a table in the long format [`parse_load_csv`] reads. Gaps are
/// written as empty cells.
pub fn write_load_csv<W: Write>(table: &LoadTable, format: &CsvFormat, sink: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(format.delimiter)
        .from_writer(sink);
    writer.write_record([
        &format.consumer_column,
        &format.timestamp_column,
        &format.kwh_column,
    ])?;
    for (c, id) in table.consumer_ids.iter().enumerate() {
        for (ts, reading) in table.timestamps.iter().zip(&table.readings[c]) {
            let kwh = reading.map(|v| v.to_string()).unwrap_or_default();
            writer.write_record([id.as_str(), &ts.format(TIMESTAMP_FORMAT).to_string(), &kwh])?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedConsumer {
    pub id: String,
    pub missing: usize,
}

/// Keeps only consumers with no gaps.
pub fn drop_incomplete_consumers(table: &LoadTable) -> Result<(LoadTable, Vec<DroppedConsumer>)> {
    let mut kept = LoadTable {
        consumer_ids: Vec::new(),
        timestamps: table.timestamps.clone(),
        readings: Vec::new(),
    };
    let mut dropped = Vec::new();
    for c in 0..table.consumers() {
        let missing = table.missing(c);
        if missing == 0 {
            kept.consumer_ids.push(table.consumer_ids[c].clone());
            kept.readings.push(table.readings[c].clone());
        } else {
            dropped.push(DroppedConsumer {
                id: table.consumer_ids[c].clone(),
                missing,
            });
        }
    }
    if kept.consumer_ids.is_empty() {
        return Err(IngestError::NoCompleteConsumers);
    }
    Ok((kept, dropped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaySelector {
    Date(NaiveDate),
    /// Uniform choice among fully covered days, driven by this seed.
    Seeded(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayAggregate {
    pub profile: DemandProfile,
    pub day: NaiveDate,
    pub seed: Option<u64>,
}

fn day_hours(table: &LoadTable, day: NaiveDate) -> Vec<usize> {
    table
        .timestamps
        .iter()
        .enumerate()
        .filter(|(_, ts)| ts.date() == day)
        .map(|(h, _)| h)
        .collect()
}

fn day_is_complete(table: &LoadTable, day: NaiveDate) -> bool {
    let hours = day_hours(table, day);
    hours.len() == 24
        && table
            .readings
            .iter()
            .all(|r| hours.iter().all(|&h| r[h].is_some()))
}

/// Days covered by all 24 hours with no gaps for any consumer, ascending.
pub fn complete_days(table: &LoadTable) -> Vec<NaiveDate> {
    let days: BTreeSet<NaiveDate> = table.timestamps.iter().map(|t| t.date()).collect();
    days.into_iter()
        .filter(|&d| day_is_complete(table, d))
        .collect()
}

/// Sums each consumer's 24 readings on the selected day.
pub fn aggregate_day(table: &LoadTable, selector: DaySelector) -> Result<DayAggregate> {
    let (day, seed) = match selector {
        DaySelector::Date(day) => (day, None),
        DaySelector::Seeded(seed) => {
            let days = complete_days(table);
            if days.is_empty() {
                return Err(IngestError::NoCompleteDay);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (days[rng.random_range(0..days.len())], Some(seed))
        }
    };
    let hours = day_hours(table, day);
    if hours.len() != 24 {
        let present: BTreeSet<u32> = hours.iter().map(|&h| table.timestamps[h].hour()).collect();
        let absent: Vec<u32> = (0..24).filter(|h| !present.contains(h)).collect();
        return Err(IngestError::PartialDay {
            day,
            detail: format!("hours {absent:?} are outside the data"),
        });
    }
    let mut demands = Vec::with_capacity(table.consumers());
    for (c, id) in table.consumer_ids.iter().enumerate() {
        let mut total = 0.0;
        let mut absent = Vec::new();
        for &h in &hours {
            match table.readings[c][h] {
                Some(v) => total += v,
                None => absent.push(table.timestamps[h].hour()),
            }
        }
        if !absent.is_empty() {
            return Err(IngestError::PartialDay {
                day,
                detail: format!("consumer {id} is missing hours {absent:?}"),
            });
        }
        demands.push(total);
    }
    let profile = DemandProfile::new(table.consumer_ids.clone(), demands)?;
    Ok(DayAggregate { profile, day, seed })
}

/// Removes households with zero demand, which have no satisfaction ratio.
pub fn drop_zero_demand(profile: &DemandProfile) -> Result<(DemandProfile, Vec<String>)> {
    let mut ids = Vec::new();
    let mut demands = Vec::new();
    let mut dropped = Vec::new();
    for (id, &d) in profile.household_ids().iter().zip(profile.demands()) {
        if d > 0.0 {
            ids.push(id.clone());
            demands.push(d);
        } else {
            dropped.push(id.clone());
        }
    }
    Ok((DemandProfile::new(ids, demands)?, dropped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DemandCategory {
    Low,
    Medium,
    High,
}

impl DemandCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            DemandCategory::Low => "low",
            DemandCategory::Medium => "medium",
            DemandCategory::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Categorization {
    /// Upper edges of the low and medium bands; the second is twice the first.
    pub thresholds: (f64, f64),
    pub categories: Vec<DemandCategory>,
}

impl Categorization {
    pub fn members(&self, category: DemandCategory) -> Vec<usize> {
        self.categories
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == category)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Splits households into thirds of the largest demand.
pub fn categorize_consumers(profile: &DemandProfile) -> Result<Categorization> {
    let t = profile.max_demand() / 3.0;
    if !(t > 0.0) {
        return Err(softshed_core::Error::InvalidDemand("all demands are zero".into()).into());
    }
    let t2 = 2.0 * t;
    let categories = profile
        .demands()
        .iter()
        .map(|&d| {
            if d <= t {
                DemandCategory::Low
            } else if d <= t2 {
                DemandCategory::Medium
            } else {
                DemandCategory::High
            }
        })
        .collect();
    Ok(Categorization {
        thresholds: (t, t2),
        categories,
    })
}

/// Restricts a profile to the given household indices.
pub fn subset(profile: &DemandProfile, members: &[usize]) -> Result<DemandProfile> {
    let ids = members
        .iter()
        .map(|&i| profile.household_ids()[i].clone())
        .collect();
    let demands = members.iter().map(|&i| profile.demands()[i]).collect();
    Ok(DemandProfile::new(ids, demands)?)
}

/// Cleaning summary written next to an ingested profile.
#[derive(Debug, Clone, Default)]
pub struct CleaningReport {
    pub parse: ParseReport,
    pub dropped_incomplete: Vec<DroppedConsumer>,
    pub dropped_zero_demand: Vec<String>,
    pub day: Option<NaiveDate>,
    pub seed: Option<u64>,
    pub households: usize,
}

impl fmt::Display for CleaningReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.parse)?;
        for d in &self.dropped_incomplete {
            writeln!(
                f,
                "dropped consumer {}: {} missing readings",
                d.id, d.missing
            )?;
        }
        for id in &self.dropped_zero_demand {
            writeln!(f, "dropped consumer {id}: zero demand on the selected day")?;
        }
        if let Some(day) = self.day {
            match self.seed {
                Some(seed) => writeln!(f, "selected day {day} (seed {seed})")?,
                None => writeln!(f, "selected day {day}")?,
            }
        }
        writeln!(f, "households: {}", self.households)
    }
}
