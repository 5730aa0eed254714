use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub const SLOTS_PER_DAY: usize = 24;

const BUNDLED_CSV: &str = include_str!("../../data/synthetic_slots.csv");

/// Seed used for the bundled table and by `gen-data` when none is given.
pub const DEFAULT_SLOT_SEED: u64 = 2013;

/// Reference points for each hour of a day, one column per consumer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotTable {
    pub labels: Vec<String>,
    pub consumer_names: Vec<String>,
    /// `rows[h][k]`, kW.
    pub rows: Vec<Vec<f64>>,
}

impl SlotTable {
    pub fn consumers(&self) -> usize {
        self.consumer_names.len()
    }

    /// Sum of reference points in slot `h`.
    pub fn demand(&self, h: usize) -> f64 {
        self.rows[h].iter().sum()
    }

    pub fn bundled() -> Self {
        parse_reference_csv(BUNDLED_CSV.as_bytes(), "bundled slot table")
            .expect("bundled slot table is valid")
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("slot");
        for name in &self.consumer_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.rows) {
            out.push_str(label);
            for v in row {
                out.push(',');
                out.push_str(&super::output::format_sig(*v));
            }
            out.push('\n');
        }
        out
    }
}

pub fn ingest_reference_csv(path: impl AsRef<Path>) -> Result<SlotTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_reference_csv(file, &path.display().to_string())
}

/// Parses `slot,consumer_1,…,consumer_K` with exactly 24 data rows.
pub fn parse_reference_csv<R: Read>(reader: R, origin: &str) -> Result<SlotTable> {
    let err = |line: u64, message: String| Error::Csv {
        path: origin.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if header.get(0) != Some("slot") {
        return Err(err(
            1,
            format!(
                "first column must be `slot`, found {:?}",
                header.get(0).unwrap_or("")
            ),
        ));
    }
    let consumer_names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if consumer_names.is_empty() {
        return Err(err(1, "no consumer columns after `slot`".into()));
    }
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let label = record.get(0).unwrap_or("").to_string();
        let mut row = Vec::with_capacity(consumer_names.len());
        for (cell, name) in record.iter().skip(1).zip(&consumer_names) {
            let v: f64 = cell.parse().map_err(|_| {
                err(
                    line,
                    format!("slot {label}, column {name}: {cell:?} is not a number"),
                )
            })?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(err(
                    line,
                    format!(
                        "slot {label}, column {name}: reference point must be positive, got {v}"
                    ),
                ));
            }
            row.push(v);
        }
        labels.push(label);
        rows.push(row);
    }
    if rows.len() != SLOTS_PER_DAY {
        return Err(err(
            rows.len() as u64 + 1,
            format!("expected {SLOTS_PER_DAY} slots, found {}", rows.len()),
        ));
    }
    Ok(SlotTable {
        labels,
        consumer_names,
        rows,
    })
}

/// Daily shape: a night trough, a small morning bump at 08:00 and a large
/// evening peak at `peak_hour`.
fn daily_profile(h: f64, peak_hour: f64) -> f64 {
    0.35 + 0.25 * (-((h - 8.0) / 2.0).powi(2)).exp() + (-((h - peak_hour) / 2.2).powi(2)).exp()
}

/// Synthetic 24×K table. Consumers differ by a fixed size factor between
/// 0.8 and 1.3; each entry carries ±5 % seeded noise.
pub fn synthetic_slots(consumers: usize, peak_hour: usize, seed: u64) -> Result<SlotTable> {
    if consumers == 0 || peak_hour >= SLOTS_PER_DAY {
        return Err(Error::Config(format!(
            "need at least one consumer and a peak hour in 0..=23, got {consumers} and {peak_hour}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes: Vec<f64> = (0..consumers)
        .map(|k| {
            if consumers == 1 {
                1.0
            } else {
                0.8 + 0.5 * k as f64 / (consumers - 1) as f64
            }
        })
        .collect();
    let rows = (0..SLOTS_PER_DAY)
        .map(|h| {
            let base = 3.0 * daily_profile(h as f64, peak_hour as f64);
            sizes
                .iter()
                .map(|s| {
                    let noise: f64 = rng.random_range(-0.05..0.05);
                    round6(base * s * (1.0 + noise))
                })
                .collect()
        })
        .collect();
    Ok(SlotTable {
        labels: (0..SLOTS_PER_DAY).map(|h| h.to_string()).collect(),
        consumer_names: (1..=consumers).map(|k| format!("consumer_{k}")).collect(),
        rows,
    })
}

/// Keeps generated tables short and exactly round-trippable through CSV.
fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}
