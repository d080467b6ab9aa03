//! Hourly capacity-factor and hydrogen-demand series.
//!
//! Both series types can only be obtained through validating constructors,
//! so every value in circulation is in range and has the configured length.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TimeseriesError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("row {row}: {detail}")]
    MalformedRow { row: usize, detail: String },
    #[error("row {row}: value {value} outside [0, 1]")]
    OutOfRange { row: usize, value: f64 },
    #[error("expected {expected} rows, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("negative demand rate {0} kg/h")]
    NegativeRate(f64),
    #[error("time step must be positive, got {0} h")]
    InvalidStep(f64),
    #[error("unknown source `{0}` (expected onshore, offshore or solar)")]
    UnknownSource(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Onshore,
    Offshore,
    Solar,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Onshore, Source::Offshore, Source::Solar];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Onshore => "onshore",
            Source::Offshore => "offshore",
            Source::Solar => "solar",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = TimeseriesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "onshore" => Ok(Source::Onshore),
            "offshore" => Ok(Source::Offshore),
            "solar" => Ok(Source::Solar),
            other => Err(TimeseriesError::UnknownSource(other.to_string())),
        }
    }
}

/// Hourly availability of one renewable source, as a fraction of booked capacity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityFactorSeries {
    source: Source,
    values: Vec<f64>,
    dt_hours: f64,
}

impl CapacityFactorSeries {
    pub fn new(source: Source, values: Vec<f64>, dt_hours: f64) -> Result<Self, TimeseriesError> {
        if !(dt_hours > 0.0 && dt_hours.is_finite()) {
            return Err(TimeseriesError::InvalidStep(dt_hours));
        }
        if let Some((row, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(TimeseriesError::OutOfRange { row, value });
        }
        Ok(Self {
            source,
            values,
            dt_hours,
        })
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt_hours(&self) -> f64 {
        self.dt_hours
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same values on a different step length.
    pub fn with_step(self, dt_hours: f64) -> Result<Self, TimeseriesError> {
        Self::new(self.source, self.values, dt_hours)
    }

    /// Full-load hours per booked kW over the horizon.
    pub fn full_load_hours(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dt_hours
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        write_two_column(writer, "value", &self.values)
    }

    pub fn save(&self, path: &Path) -> Result<(), TimeseriesError> {
        let file = std::fs::File::create(path).map_err(|source| TimeseriesError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(file)
            .map_err(|e| csv_io_error(path, e))
    }
}

/// Hydrogen demand per step in kg/h.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandSeries {
    values: Vec<f64>,
}

impl DemandSeries {
    pub fn new(values: Vec<f64>) -> Result<Self, TimeseriesError> {
        if let Some(&v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(TimeseriesError::NegativeRate(v));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total mass over the horizon in kg.
    pub fn total_mass(&self, dt_hours: f64) -> f64 {
        self.values.iter().sum::<f64>() * dt_hours
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        write_two_column(writer, "kg_per_h", &self.values)
    }
}

pub fn constant_demand(rate_kg_per_h: f64, horizon: usize) -> Result<DemandSeries, TimeseriesError> {
    if !(rate_kg_per_h >= 0.0 && rate_kg_per_h.is_finite()) {
        return Err(TimeseriesError::NegativeRate(rate_kg_per_h));
    }
    DemandSeries::new(vec![rate_kg_per_h; horizon])
}

fn csv_io_error(path: &Path, e: csv::Error) -> TimeseriesError {
    TimeseriesError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn write_two_column<W: Write>(writer: W, column: &str, values: &[f64]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["hour", column])?;
    for (hour, v) in values.iter().enumerate() {
        w.write_record([hour.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a two-column `hour,<column>` CSV with rows `0..horizon`.
fn read_two_column<R: Read>(
    reader: R,
    column: &str,
    horizon: usize,
) -> Result<Vec<f64>, TimeseriesError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| TimeseriesError::MalformedRow {
        row: 0,
        detail: e.to_string(),
    })?;
    if header.len() != 2 || &header[0] != "hour" || &header[1] != column {
        return Err(TimeseriesError::MalformedRow {
            row: 0,
            detail: format!("header must be `hour,{column}`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut values = Vec::with_capacity(horizon);
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| TimeseriesError::MalformedRow {
            row,
            detail: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(TimeseriesError::MalformedRow {
                row,
                detail: format!("expected 2 cells, found {}", record.len()),
            });
        }
        let hour: usize = record[0].parse().map_err(|_| TimeseriesError::MalformedRow {
            row,
            detail: format!("hour `{}` is not an integer", &record[0]),
        })?;
        if hour != row {
            return Err(TimeseriesError::MalformedRow {
                row,
                detail: format!("hour {hour} out of sequence"),
            });
        }
        let value: f64 = record[1].parse().map_err(|_| TimeseriesError::MalformedRow {
            row,
            detail: format!("`{}` is not a number", &record[1]),
        })?;
        if !value.is_finite() {
            return Err(TimeseriesError::MalformedRow {
                row,
                detail: format!("non-finite value {value}"),
            });
        }
        values.push(value);
    }
    if values.len() != horizon {
        return Err(TimeseriesError::LengthMismatch {
            expected: horizon,
            found: values.len(),
        });
    }
    Ok(values)
}

pub fn read_capacity_factors<R: Read>(
    reader: R,
    source: Source,
    horizon: usize,
) -> Result<CapacityFactorSeries, TimeseriesError> {
    let values = read_two_column(reader, "value", horizon)?;
    CapacityFactorSeries::new(source, values, 1.0)
}

/// Load an hourly capacity-factor CSV (`hour,value`) of exactly `horizon` rows.
pub fn load_capacity_factors(
    path: &Path,
    source: Source,
    horizon: usize,
) -> Result<CapacityFactorSeries, TimeseriesError> {
    let file = std::fs::File::open(path).map_err(|source| TimeseriesError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_capacity_factors(file, source, horizon)
}

/// Load an hourly demand CSV (`hour,kg_per_h`) of exactly `horizon` rows.
pub fn load_demand(path: &Path, horizon: usize) -> Result<DemandSeries, TimeseriesError> {
    let file = std::fs::File::open(path).map_err(|source| TimeseriesError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let values = read_two_column(file, "kg_per_h", horizon)?;
    DemandSeries::new(values)
}

/// Deterministic stand-in weather for a North-Sea-coast site.
///
/// Wind follows a mean-reverting AR(1) process with a weekly weather cycle;
/// solar is a clear-sky day/season envelope scaled by a cloud AR(1) process.
/// Hour 0 is midnight on 1 January.
pub fn synthetic_capacity_factors(
    source: Source,
    horizon: usize,
    seed: u64,
) -> CapacityFactorSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (source as u64 + 1).wrapping_mul(0x9e37_79b9));
    let mut values = Vec::with_capacity(horizon);
    let mut state = 0.0_f64;
    for t in 0..horizon {
        let hour = t as f64;
        let day_of_year = (hour / 24.0).floor();
        let winter = (2.0 * PI * day_of_year / 365.0).cos();
        let shock: f64 = rng.gen_range(-1.0..1.0);
        let v = match source {
            Source::Onshore | Source::Offshore => {
                let (mean, amp, persistence) = if source == Source::Onshore {
                    (0.28, 0.10, 0.93)
                } else {
                    (0.42, 0.12, 0.95)
                };
                state = persistence * state + 0.08 * shock;
                let weekly = (2.0 * PI * hour / 168.0).sin() * 0.12;
                mean + amp * winter + weekly + state
            }
            Source::Solar => {
                state = 0.9 * state + 0.15 * shock;
                let h = hour % 24.0;
                let daylight = 12.0 - 4.0 * winter;
                let sunrise = 12.0 - daylight / 2.0;
                let arc = if h > sunrise && h < sunrise + daylight {
                    (PI * (h - sunrise) / daylight).sin()
                } else {
                    0.0
                };
                let peak = 0.55 - 0.25 * winter;
                arc * peak * (0.75 + state).clamp(0.1, 1.0)
            }
        };
        values.push(v.clamp(0.0, 1.0));
    }
    CapacityFactorSeries::new(source, values, 1.0).expect("clamped values are valid")
}
