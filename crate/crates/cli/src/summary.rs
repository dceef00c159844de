//! Descriptive statistics table over the cross-section, panel and
//! training data.

use tokenlab::econometrics::percentile;
use tokenlab::{PriceRecord, TrainingRecord};

use crate::output::{num, Table};

/// N, mean, median, sample SD (n - 1), min and max of one column.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub n: usize,
    /// Rows where the column was absent.
    pub missing: usize,
    pub mean: f64,
    pub median: f64,
    /// `NaN` when `n < 2`.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

pub fn describe(values: &[Option<f64>]) -> Summary {
    let mut present: Vec<f64> = values.iter().flatten().copied().collect();
    present.sort_by(f64::total_cmp);
    let n = present.len();
    let missing = values.len() - n;
    if n == 0 {
        return Summary {
            n,
            missing,
            mean: f64::NAN,
            median: f64::NAN,
            sd: f64::NAN,
            min: f64::NAN,
            max: f64::NAN,
        };
    }
    let mean = present.iter().sum::<f64>() / n as f64;
    let sd = if n < 2 {
        f64::NAN
    } else {
        (present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Summary {
        n,
        missing,
        mean,
        median: percentile(&present, 50.0),
        sd,
        min: present[0],
        max: present[n - 1],
    }
}

pub const SUMMARY_FILE: &str = "table1_summary.csv";

/// Columns: cross-section input, output and quality; panel input price;
/// training cost (USD millions) and compute (FLOP) for training records
/// that match a panel model.
pub fn emit_summary_table(cross_section: &[PriceRecord], panel: &[PriceRecord], training: &[TrainingRecord]) -> Table {
    let matched: Vec<&TrainingRecord> = training
        .iter()
        .filter(|t| panel.iter().any(|p| p.model_id == t.model_id))
        .collect();
    let columns = [
        describe(&cross_section.iter().map(|r| Some(r.input_price)).collect::<Vec<_>>()),
        describe(&cross_section.iter().map(|r| Some(r.output_price)).collect::<Vec<_>>()),
        describe(&cross_section.iter().map(|r| r.quality_score).collect::<Vec<_>>()),
        describe(&panel.iter().map(|r| Some(r.input_price)).collect::<Vec<_>>()),
        describe(&matched.iter().map(|t| Some(t.training_cost / 1e6)).collect::<Vec<_>>()),
        describe(&matched.iter().map(|t| Some(t.training_compute)).collect::<Vec<_>>()),
    ];
    let mut table = Table::new(
        SUMMARY_FILE,
        &[
            "statistic",
            "cross_section_input_usd_per_m",
            "cross_section_output_usd_per_m",
            "cross_section_quality",
            "panel_input_usd_per_m",
            "training_cost_musd",
            "training_compute_flop",
        ],
    );
    type Cell = fn(&Summary) -> String;
    let rows: [(&str, Cell); 7] = [
        ("n", |s| s.n.to_string()),
        ("missing", |s| s.missing.to_string()),
        ("mean", |s| num(s.mean)),
        ("median", |s| num(s.median)),
        ("sd_sample", |s| num(s.sd)),
        ("min", |s| num(s.min)),
        ("max", |s| num(s.max)),
    ];
    for (label, cell) in rows {
        table.push(std::iter::once(label.to_string()).chain(columns.iter().map(cell)));
    }
    table
}
