use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use csv::StringRecord;
use sha2::{Digest, Sha256};

use super::IngestError;
use crate::model::{validate_dataset, PriceRecord, Region, Tier, TrainingRecord, Violation};

const MILESTONE_COLUMNS: [&str; 9] = [
    "model_id",
    "vendor",
    "observed_date",
    "input_price",
    "output_price",
    "quality_score",
    "reasoning",
    "open_weight",
    "region",
];

const TRAINING_COLUMNS: [&str; 7] = [
    "model_id",
    "vendor",
    "region",
    "release_date",
    "training_cost_usd",
    "training_compute_flop",
    "parameter_count",
];

const SHARE_COLUMNS: [&str; 3] = ["period", "vendor", "share_percent"];

/// Market shares grouped by period, periods and vendors in file order.
pub type ShareTable = Vec<(String, Vec<(String, f64)>)>;

/// Hex SHA-256 of a file's bytes.
pub fn fingerprint(path: &Path) -> Result<String, IngestError> {
    let bytes = read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn read(path: &Path) -> Result<Vec<u8>, IngestError> {
    fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Header-indexed view over one CSV file.
struct Table<'a> {
    path: &'a Path,
    index: HashMap<String, usize>,
    reader: csv::Reader<&'a [u8]>,
}

struct Row<'a> {
    path: &'a Path,
    index: &'a HashMap<String, usize>,
    record: StringRecord,
    line: u64,
}

impl<'a> Table<'a> {
    fn open(path: &'a Path, bytes: &'a [u8], required: &[&'static str]) -> Result<Self, IngestError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let headers = reader.headers().map_err(|e| IngestError::Row {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?;
        let index: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_string(), i))
            .collect();
        if let Some(column) = required.iter().find(|c| !index.contains_key(**c)) {
            return Err(IngestError::MissingColumn {
                path: path.to_path_buf(),
                column,
            });
        }
        Ok(Self { path, index, reader })
    }

    fn rows(&mut self) -> Result<Vec<Row<'_>>, IngestError> {
        let mut out = Vec::new();
        for result in self.reader.records() {
            let record = result.map_err(|e| IngestError::Row {
                path: self.path.to_path_buf(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            out.push(Row {
                path: self.path,
                index: &self.index,
                record,
                line,
            });
        }
        Ok(out)
    }
}

impl Row<'_> {
    fn err(&self, message: String) -> IngestError {
        IngestError::Row {
            path: self.path.to_path_buf(),
            line: self.line,
            message,
        }
    }

    /// Raw cell; empty for optional columns absent from the header.
    fn cell(&self, column: &str) -> &str {
        self.index
            .get(column)
            .and_then(|&i| self.record.get(i))
            .unwrap_or("")
    }

    fn text(&self, column: &str) -> Result<String, IngestError> {
        match self.cell(column) {
            "" => Err(self.err(format!("empty `{column}`"))),
            s => Ok(s.to_string()),
        }
    }

    fn parse<T: FromStr>(&self, column: &str) -> Result<T, IngestError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.cell(column);
        raw.parse()
            .map_err(|e| self.err(format!("`{column}` = {raw:?}: {e}")))
    }

    fn optional<T: FromStr>(&self, column: &str) -> Result<Option<T>, IngestError>
    where
        T::Err: std::fmt::Display,
    {
        if self.cell(column).is_empty() {
            Ok(None)
        } else {
            self.parse(column).map(Some)
        }
    }

    fn date(&self, column: &str) -> Result<NaiveDate, IngestError> {
        let raw = self.cell(column);
        NaiveDate::parse_from_str(raw, "%Y-%m-%d")
            .map_err(|e| self.err(format!("`{column}` = {raw:?}: {e}")))
    }

    fn flag(&self, column: &str) -> Result<bool, IngestError> {
        match self.cell(column) {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(self.err(format!("`{column}` = {other:?}: expected 0 or 1"))),
        }
    }
}

fn price_record(row: &Row<'_>) -> Result<PriceRecord, IngestError> {
    Ok(PriceRecord {
        model_id: row.text("model_id")?,
        vendor: row.text("vendor")?,
        observed_date: row.date("observed_date")?,
        input_price: row.parse("input_price")?,
        output_price: row.parse("output_price")?,
        context_window: row.optional("context_window")?,
        quality_score: row.optional("quality_score")?,
        reasoning: row.flag("reasoning")?,
        open_weight: row.flag("open_weight")?,
        region: row.parse::<Region>("region")?,
        tier_hint: row.optional::<Tier>("tier_hint")?,
    })
}

/// Loads a price panel from CSV (or a JSON array of records when the file
/// extension is `.json`), sorted by observation date with file order kept
/// among ties. Any validation violation fails the load.
pub fn load_milestones(path: &Path) -> Result<Vec<PriceRecord>, IngestError> {
    let bytes = read(path)?;
    let mut records = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_slice::<Vec<PriceRecord>>(&bytes)?
    } else {
        let mut table = Table::open(path, &bytes, &MILESTONE_COLUMNS)?;
        table.rows()?.iter().map(price_record).collect::<Result<Vec<_>, _>>()?
    };
    records.sort_by_key(|r| r.observed_date);
    let violations = validate_dataset(&records);
    if !violations.is_empty() {
        return Err(IngestError::Invalid {
            path: path.to_path_buf(),
            violations,
        });
    }
    Ok(records)
}

/// Loads training-cost records in file order. Rows with non-positive cost,
/// compute or parameter count are rejected with their line number.
pub fn load_training(path: &Path) -> Result<Vec<TrainingRecord>, IngestError> {
    let bytes = read(path)?;
    let mut table = Table::open(path, &bytes, &TRAINING_COLUMNS)?;
    let mut out = Vec::new();
    for row in table.rows()? {
        let record = TrainingRecord {
            model_id: row.text("model_id")?,
            vendor: row.text("vendor")?,
            region: row.parse("region")?,
            release_date: row.date("release_date")?,
            training_cost: row.parse("training_cost_usd")?,
            training_compute: row.parse("training_compute_flop")?,
            parameter_count: row.parse("parameter_count")?,
        };
        if let Some(rule) = record.violations().first() {
            return Err(row.err(format!("{}: {rule}", record.model_id)));
        }
        out.push(record);
    }
    let mut seen = std::collections::HashSet::new();
    let duplicates: Vec<Violation> = out
        .iter()
        .enumerate()
        .filter(|(_, r)| !seen.insert(r.model_id.clone()))
        .map(|(index, r)| Violation {
            index,
            model_id: r.model_id.clone(),
            rule: crate::model::Rule::DuplicateKey,
        })
        .collect();
    if !duplicates.is_empty() {
        return Err(IngestError::Invalid {
            path: path.to_path_buf(),
            violations: duplicates,
        });
    }
    Ok(out)
}

/// Loads `period,vendor,share_percent` rows grouped by period.
pub fn load_shares(path: &Path) -> Result<ShareTable, IngestError> {
    let bytes = read(path)?;
    let mut table = Table::open(path, &bytes, &SHARE_COLUMNS)?;
    let mut out: ShareTable = Vec::new();
    for row in table.rows()? {
        let period = row.text("period")?;
        let share = (row.text("vendor")?, row.parse::<f64>("share_percent")?);
        match out.iter_mut().find(|(p, _)| *p == period) {
            Some((_, shares)) => shares.push(share),
            None => out.push((period, vec![share])),
        }
    }
    Ok(out)
}
