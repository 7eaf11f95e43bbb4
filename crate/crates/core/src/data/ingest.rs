use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RawSeries;
use crate::error::{Error, Result};

/// Channel names of the wind-turbine dataset layout, in column order. The
/// last one is the usual forecasting target.
pub const TURBINE_CHANNELS: [&str; 7] = [
    "total_demand",
    "renewable_production",
    "renewable_share",
    "power",
    "wind_speed",
    "wind_direction",
    "curtailment_setpoint",
];

/// Column layout and cleaning rules for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    /// Columns kept as channels, in output order.
    pub channels: Vec<String>,
    /// Column dropped if present.
    #[serde(default = "default_timestamp")]
    pub timestamp: Option<String>,
    /// Rows where this column exceeds `shutdown_above` are excluded. The
    /// column itself is never a channel.
    #[serde(default)]
    pub operating_state: Option<String>,
    #[serde(default = "default_shutdown")]
    pub shutdown_above: f64,
    /// Rows where this channel exceeds `max_wind_speed` are excluded.
    #[serde(default)]
    pub wind_speed: Option<String>,
    #[serde(default = "default_max_wind")]
    pub max_wind_speed: f64,
    /// Channel of angles in degrees, unwrapped along the shortest arc.
    #[serde(default)]
    pub wind_direction: Option<String>,
    /// Longest run of missing samples that is interpolated.
    #[serde(default = "default_max_gap")]
    pub max_gap: usize,
}

fn default_timestamp() -> Option<String> {
    Some("timestamp".into())
}
fn default_shutdown() -> f64 {
    100.0
}
fn default_max_wind() -> f64 {
    25.0
}
fn default_max_gap() -> usize {
    8
}

impl CsvSchema {
    /// Plain layout: the given channels, no special columns.
    pub fn plain(channels: Vec<String>) -> Self {
        Self {
            channels,
            timestamp: default_timestamp(),
            operating_state: None,
            shutdown_above: default_shutdown(),
            wind_speed: None,
            max_wind_speed: default_max_wind(),
            wind_direction: None,
            max_gap: default_max_gap(),
        }
    }

    /// Seven turbine channels plus an optional `operating_state` column.
    pub fn turbine() -> Self {
        Self {
            operating_state: Some("operating_state".into()),
            wind_speed: Some("wind_speed".into()),
            wind_direction: Some("wind_direction".into()),
            ..Self::plain(TURBINE_CHANNELS.iter().map(|s| s.to_string()).collect())
        }
    }
}

/// Shortest signed step from `from` to `to` in degrees, in [−180, 180).
fn arc(from: f64, to: f64) -> f64 {
    (to - from + 180.0).rem_euclid(360.0) - 180.0
}

/// Unwraps observed angles so consecutive observations never jump by more than 180°.
pub fn unwrap_degrees(values: &mut [Option<f64>]) {
    let mut prev: Option<(f64, f64)> = None; // (raw, unwrapped)
    for v in values.iter_mut().flatten() {
        let raw = *v;
        let u = match prev {
            Some((r, w)) => w + arc(r, raw),
            None => raw,
        };
        *v = u;
        prev = Some((raw, u));
    }
}

/// Fills interior runs of `None` no longer than `max_gap` by linear interpolation.
pub fn interpolate_gaps(values: &mut [Option<f64>], max_gap: usize) {
    let mut last: Option<usize> = None;
    for i in 0..values.len() {
        if let Some(b) = values[i] {
            if let Some(j) = last {
                let len = i - j - 1;
                if len > 0 && len <= max_gap {
                    let a = values[j].expect("observed");
                    for k in 1..=len {
                        values[j + k] = Some(a + (b - a) * k as f64 / (len + 1) as f64);
                    }
                }
            }
            last = Some(i);
        }
    }
}

/// Applies exclusion, unwrapping and gap rules to parsed cells and splits
/// the result into usable segments.
pub fn clean(schema: &CsvSchema, mut cells: Vec<Vec<Option<f64>>>, excluded: &[bool]) -> Result<RawSeries> {
    let c = schema.channels.len();
    let n = cells.len();
    let find = |name: &Option<String>| -> Result<Option<usize>> {
        name.as_ref()
            .map(|nm| {
                schema
                    .channels
                    .iter()
                    .position(|x| x == nm)
                    .ok_or_else(|| Error::Config(format!("'{nm}' is not one of the schema channels")))
            })
            .transpose()
    };
    let wind = find(&schema.wind_speed)?;
    let dir = find(&schema.wind_direction)?;
    for (i, row) in cells.iter_mut().enumerate() {
        let too_windy = wind.and_then(|w| row[w]).is_some_and(|v| v > schema.max_wind_speed);
        if excluded[i] || too_windy {
            row.iter_mut().for_each(|v| *v = None);
        }
    }
    let mask: Vec<Vec<bool>> = cells.iter().map(|r| r.iter().map(Option::is_some).collect()).collect();
    let mut columns: Vec<Vec<Option<f64>>> = (0..c).map(|j| cells.iter().map(|r| r[j]).collect()).collect();
    if let Some(d) = dir {
        unwrap_degrees(&mut columns[d]);
    }
    for col in &mut columns {
        interpolate_gaps(col, schema.max_gap);
    }
    let mut values = vec![vec![0.0; c]; n];
    let mut usable = vec![true; n];
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            match v {
                Some(x) => values[i][j] = *x,
                None => usable[i] = false,
            }
        }
    }
    let mut segments = Vec::new();
    let mut start = None;
    for i in 0..=n {
        match (start, i < n && usable[i]) {
            (None, true) => start = Some(i),
            (Some(s), false) => {
                segments.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if segments.is_empty() {
        return Err(Error::Data("no usable rows remain after filtering".into()));
    }
    Ok(RawSeries {
        channel_names: schema.channels.clone(),
        values,
        mask,
        segments,
    })
}

/// Reads a CSV with a header row. Empty cells are missing values.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<RawSeries> {
    let path = path.as_ref();
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();

    enum Role {
        Skip,
        Channel(usize),
        State,
    }
    let mut roles = Vec::with_capacity(header.len());
    for (k, name) in header.iter().enumerate() {
        let role = if let Some(j) = schema.channels.iter().position(|c| c == name) {
            Role::Channel(j)
        } else if schema.operating_state.as_deref() == Some(name.as_str()) {
            Role::State
        } else if k == 0 && schema.timestamp.as_deref() == Some(name.as_str()) {
            Role::Skip
        } else {
            return Err(csv_err(format!("unknown column '{name}'")));
        };
        roles.push(role);
    }
    for ch in &schema.channels {
        if !header.contains(ch) {
            return Err(csv_err(format!("missing column '{ch}'")));
        }
    }

    let mut cells = Vec::new();
    let mut excluded = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(e.to_string()))?;
        let mut row = vec![None; schema.channels.len()];
        let mut shut = false;
        for (k, field) in rec.iter().enumerate() {
            let role = roles.get(k).ok_or_else(|| csv_err(format!("row {} has extra fields", i + 2)))?;
            if matches!(role, Role::Skip) {
                continue;
            }
            let v = if field.is_empty() {
                None
            } else {
                let x: f64 = field
                    .parse()
                    .map_err(|_| csv_err(format!("row {}, column '{}': '{field}' is not a number", i + 2, header[k])))?;
                Some(x)
            };
            match role {
                Role::Channel(j) => row[*j] = v,
                Role::State => shut = v.is_some_and(|s| s > schema.shutdown_above),
                Role::Skip => {}
            }
        }
        cells.push(row);
        excluded.push(shut);
    }
    if cells.is_empty() {
        return Err(csv_err("no data rows".into()));
    }
    let series = clean(schema, cells, &excluded)?;
    log::info!(
        "{}: {} rows, {} usable in {} segment(s)",
        path.display(),
        series.len(),
        series.usable_rows(),
        series.segments.len()
    );
    Ok(series)
}

/// Writes a dense series with a header row.
pub fn write_csv(path: impl AsRef<Path>, series: &RawSeries) -> Result<()> {
    let path = path.as_ref();
    let err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(&series.channel_names).map_err(err)?;
    for row in &series.values {
        w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_is_shortest() {
        assert_eq!(arc(358.0, 2.0), 4.0);
        assert_eq!(arc(2.0, 358.0), -4.0);
        assert_eq!(arc(10.0, 20.0), 10.0);
    }

    #[test]
    fn unwrap_across_north() {
        let mut v = vec![Some(350.0), Some(358.0), None, Some(2.0), Some(10.0)];
        unwrap_degrees(&mut v);
        assert_eq!(v, [Some(350.0), Some(358.0), None, Some(362.0), Some(370.0)]);
    }

    #[test]
    fn interpolation_limits() {
        let mut v = vec![Some(0.0), None, None, None, Some(4.0)];
        interpolate_gaps(&mut v, 8);
        assert_eq!(v, [Some(0.0), Some(1.0), Some(2.0), Some(3.0), Some(4.0)]);

        let mut v = vec![Some(0.0), None, None, Some(3.0)];
        interpolate_gaps(&mut v, 1);
        assert_eq!(v[1], None);

        let mut v = vec![None, Some(1.0), None];
        interpolate_gaps(&mut v, 8);
        assert_eq!(v, [None, Some(1.0), None]);
    }
}
