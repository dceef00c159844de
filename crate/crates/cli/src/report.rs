//! Dataset discovery, the all-tables report and its `run.json` metadata.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use tokenlab::ingest::{fingerprint, load_milestones, load_shares, load_training, RunConfig};
use tokenlab::model::{PriceRecord, TrainingRecord};

use crate::analysis::{
    chow_tables, dea_tables, decay_tables, growth_tables, hhi_tables, malmquist_tables, premium_tables,
    regress_tables, robustness_tables, DecaySelection,
};
use crate::output::{num, Table};
use crate::summary::emit_summary_table;

pub const MILESTONES: &str = "milestones.csv";
pub const TRAINING: &str = "training.csv";
pub const CROSS_SECTION: &str = "cross_section.csv";
pub const SHARES: &str = "shares.csv";
pub const RUN_METADATA: &str = "run.json";

/// The input files of a data directory.
pub struct Dataset {
    pub dir: PathBuf,
    pub milestones: Vec<PriceRecord>,
    pub training: Vec<TrainingRecord>,
    pub cross_section: Vec<PriceRecord>,
    pub shares: tokenlab::ingest::ShareTable,
}

impl Dataset {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            dir: dir.to_path_buf(),
            milestones: load_milestones(&dir.join(MILESTONES))?,
            training: load_training(&dir.join(TRAINING))?,
            cross_section: load_milestones(&dir.join(CROSS_SECTION))?,
            shares: load_shares(&dir.join(SHARES))?,
        })
    }

    pub fn files(&self) -> [PathBuf; 4] {
        [MILESTONES, TRAINING, CROSS_SECTION, SHARES].map(|f| self.dir.join(f))
    }
}

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct TableEntry {
    pub id: &'static str,
    pub files: Vec<OutputFile>,
}

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

/// Everything a report run wrote, as recorded in `run.json`.
#[derive(Debug, Serialize)]
pub struct ReportBundle {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub config: RunConfig,
    pub inputs: Vec<InputFile>,
    pub tables: Vec<TableEntry>,
    pub figures: Vec<OutputFile>,
    pub other: Vec<OutputFile>,
    pub started_at: String,
    pub finished_at: String,
}

fn record(table: &Table, dir: &Path) -> Result<OutputFile> {
    let path = table.write(dir).with_context(|| format!("writing {}", table.file_name))?;
    Ok(OutputFile {
        file: table.file_name.clone(),
        rows: table.rows.len(),
        sha256: fingerprint(&path)?,
    })
}

/// Generates every table and figure-data file from `data` into `out_dir`
/// and writes `run.json`. Data files carry no timestamps, so two runs on the
/// same inputs produce identical bytes.
pub fn report_all(data: &Dataset, config: &RunConfig, out_dir: &Path) -> Result<ReportBundle> {
    let started_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let m = &data.milestones;

    let groups: Vec<(&'static str, Vec<Table>)> = vec![
        ("T1", vec![emit_summary_table(&data.cross_section, m, &data.training)]),
        ("T2", decay_tables(m, config, DecaySelection::All)?),
        ("T3", [chow_tables(m, config)?, premium_tables(m, &[])?].concat()),
        ("T4", [dea_tables(&data.cross_section, config)?, malmquist_tables(m, config)?].concat()),
        ("T5", regress_tables(m, &data.training, config)?),
        ("T6", robustness_tables(m, &data.training, &data.cross_section, config)?),
        ("", [hhi_tables(&data.shares)?, growth_tables(config)?].concat()),
    ];

    let mut tables = Vec::new();
    let mut figures = Vec::new();
    let mut other = Vec::new();
    for (id, group) in groups {
        let mut files = Vec::new();
        for t in &group {
            let out = record(t, out_dir)?;
            if t.file_name.starts_with("table") {
                files.push(out);
            } else if t.file_name.starts_with("fig") {
                figures.push(out);
            } else {
                other.push(out);
            }
        }
        if !id.is_empty() {
            tables.push(TableEntry { id, files });
        }
    }
    figures.sort_by(|a, b| a.file.cmp(&b.file));

    let inputs = data
        .files()
        .iter()
        .map(|p| {
            Ok(InputFile {
                path: p.display().to_string(),
                sha256: fingerprint(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bundle = ReportBundle {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_hash: config.hash(),
        config: config.clone(),
        inputs,
        tables,
        figures,
        other,
        started_at,
        finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
    };
    let json = serde_json::to_string_pretty(&bundle)?;
    fs::write(out_dir.join(RUN_METADATA), json + "\n").context("writing run.json")?;
    Ok(bundle)
}

/// CSV in the panel schema, used to hand a fetched catalog to the loaders.
pub fn records_table(file_name: &str, records: &[PriceRecord]) -> Table {
    let mut t = Table::new(
        file_name,
        &[
            "model_id", "vendor", "observed_date", "input_price", "output_price", "quality_score",
            "reasoning", "open_weight", "region", "tier_hint", "context_window",
        ],
    );
    for r in records {
        t.push([
            r.model_id.clone(),
            r.vendor.clone(),
            r.observed_date.to_string(),
            num(r.input_price),
            num(r.output_price),
            r.quality_score.map(num).unwrap_or_default(),
            u8::from(r.reasoning).to_string(),
            u8::from(r.open_weight).to_string(),
            r.region.as_str().to_string(),
            r.tier_hint.map(|t| t.as_str().to_string()).unwrap_or_default(),
            r.context_window.map(|c| c.to_string()).unwrap_or_default(),
        ]);
    }
    t
}
