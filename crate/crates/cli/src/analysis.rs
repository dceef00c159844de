//! One function per analysis. Each returns the tables its subcommand
//! writes; `report --all` writes the concatenation of the same tables.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use tokenlab::breaks::{chow_scan, log_series};
use tokenlab::decay::{compare_specifications, drop_outliers, fit_exponential, tier_series, wald_lambda_diff, FunctionalForm, Observation, Window};
use tokenlab::econometrics::{bootstrap, fixed_effects, growth_accounting, ols, spearman, welch_t, winsorize, Design, RegressionResult, WelchResult};
use tokenlab::frontier::{bcc_efficiency, ccr_efficiency, dmus_from_records, malmquist, sensitivity_quality, Dmu, QualityPerturbation, ReturnsToScale};
use tokenlab::ingest::{RunConfig, ShareTable};
use tokenlab::market::{premium_average, premium_quarters, reasoning_premium, ConcentrationResult};
use tokenlab::model::{years_between, PriceRecord, Quarter, Region, Tier, TrainingRecord};

use crate::output::{num, Table};

fn date_or_blank(d: Option<chrono::NaiveDate>) -> String {
    d.map(|d| d.to_string()).unwrap_or_default()
}

/// Each tier's windowed input-price series.
pub fn tier_samples(records: &[PriceRecord], config: &RunConfig) -> Vec<(Tier, Vec<Observation>)> {
    Tier::ALL
        .iter()
        .map(|&t| (t, tier_series(records, t, &config.tiers, config.decay.window(t))))
        .collect()
}

/// Records that fall inside their own tier's window, in panel order.
pub fn pooled_records<'a>(records: &'a [PriceRecord], config: &RunConfig) -> Vec<&'a PriceRecord> {
    records
        .iter()
        .filter(|r| {
            r.tier(&config.tiers)
                .is_ok_and(|t| config.decay.window(t).contains(r.observed_date))
        })
        .collect()
}

pub fn pooled_series(records: &[PriceRecord], config: &RunConfig) -> Vec<Observation> {
    pooled_records(records, config)
        .into_iter()
        .map(|r| (r.observed_date, r.input_price))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecaySelection {
    All,
    Tier(Tier),
    Pooled,
}

pub const DECAY_FILE: &str = "table2_decay.csv";

/// Decay fits per tier and pooled, price points by tier, and fitted curves.
pub fn decay_tables(records: &[PriceRecord], config: &RunConfig, selection: DecaySelection) -> Result<Vec<Table>> {
    let mut table = Table::new(
        DECAY_FILE,
        &[
            "sample", "n", "period_start", "period_end", "p0_usd_per_m", "lambda", "lambda_se",
            "half_life_years", "r_squared_log", "moore_ratio",
        ],
    );
    let mut curves = Table::new(
        "fig02_decay_curves.csv",
        &["sample", "date", "t_years", "observed_usd_per_m", "fitted_usd_per_m"],
    );
    let mut samples: Vec<(String, Vec<Observation>)> = tier_samples(records, config)
        .into_iter()
        .filter(|(t, _)| matches!(selection, DecaySelection::All) || selection == DecaySelection::Tier(*t))
        .map(|(t, s)| (t.as_str().to_string(), s))
        .collect();
    if matches!(selection, DecaySelection::All | DecaySelection::Pooled) {
        samples.push(("pooled".into(), pooled_series(records, config)));
    }
    for (name, series) in &samples {
        let fit = fit_exponential(series).with_context(|| format!("decay fit for {name}"))?;
        table.push([
            name.clone(),
            fit.n.to_string(),
            fit.period.0.to_string(),
            fit.period.1.to_string(),
            num(fit.p0),
            num(fit.lambda),
            num(fit.lambda_se),
            num(fit.half_life),
            num(fit.r_squared),
            num(fit.moore_ratio()),
        ]);
        for (d, p) in series {
            let t = years_between(fit.period.0, *d);
            curves.push([name.clone(), d.to_string(), num(t), num(*p), num(fit.p0 * (-fit.lambda * t).exp())]);
        }
    }
    let mut evolution = Table::new(
        "fig01_price_evolution.csv",
        &["date", "model_id", "vendor", "tier", "input_usd_per_m", "output_usd_per_m", "reasoning"],
    );
    for r in records {
        let tier = r.tier(&config.tiers).map(|t| t.as_str()).unwrap_or("");
        evolution.push([
            r.observed_date.to_string(),
            r.model_id.clone(),
            r.vendor.clone(),
            tier.to_string(),
            num(r.input_price),
            num(r.output_price),
            u8::from(r.reasoning).to_string(),
        ]);
    }
    Ok(vec![table, evolution, curves])
}

pub const CHOW_FILE: &str = "table3a_chow.csv";

/// Chow scans of the pooled log-price series: the full span, plus the
/// configured window when one is set.
pub fn chow_tables(records: &[PriceRecord], config: &RunConfig) -> Result<Vec<Table>> {
    let series = log_series(&pooled_series(records, config));
    let min = config.chow.min_segment;
    let mut table = Table::new(
        CHOW_FILE,
        &[
            "scan", "break_date", "f_statistic", "p_value", "n_pre", "n_post", "min_segment",
            "window_start", "window_end",
        ],
    );
    let mut trace = Table::new(
        "fig03_chow_trace.csv",
        &["scan", "candidate", "f_statistic", "p_value", "n_pre", "n_post"],
    );
    let mut scans = vec![("global", Window::default())];
    if config.chow.window != Window::default() {
        scans.push(("window", config.chow.window));
    }
    for (name, window) in scans {
        let scan = chow_scan(&series, window, min).with_context(|| format!("{name} Chow scan"))?;
        let b = scan.best;
        table.push([
            name.to_string(),
            b.break_date.to_string(),
            num(b.f_statistic),
            num(b.p_value),
            b.n_pre.to_string(),
            b.n_post.to_string(),
            min.to_string(),
            date_or_blank(window.start),
            date_or_blank(window.end),
        ]);
        for r in &scan.trace {
            trace.push([
                name.to_string(),
                r.break_date.to_string(),
                num(r.f_statistic),
                num(r.p_value),
                r.n_pre.to_string(),
                r.n_post.to_string(),
            ]);
        }
    }
    Ok(vec![table, trace])
}

pub const PREMIUM_FILE: &str = "table3b_premium.csv";

/// Reasoning premium for every quarter with both model kinds, or only the
/// listed quarters.
pub fn premium_tables(records: &[PriceRecord], quarters: &[Quarter]) -> Result<Vec<Table>> {
    let quarters = if quarters.is_empty() {
        premium_quarters(records)
    } else {
        quarters.to_vec()
    };
    let rows = quarters
        .iter()
        .map(|q| reasoning_premium(records, *q).with_context(|| format!("premium for {q}")))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        PREMIUM_FILE,
        &["quarter", "mean_reasoning_usd_per_m", "mean_nonreasoning_usd_per_m", "premium"],
    );
    for r in &rows {
        table.push([
            r.quarter.to_string(),
            num(r.mean_reasoning_price),
            num(r.mean_nonreasoning_price),
            num(r.premium),
        ]);
    }
    let avg = premium_average(&rows).context("premium average")?;
    table.push(["average".to_string(), String::new(), String::new(), num(avg)]);
    Ok(vec![table])
}

pub const CONCENTRATION_FILE: &str = "concentration.csv";

pub fn hhi_tables(shares: &ShareTable) -> Result<Vec<Table>> {
    let mut table = Table::new(CONCENTRATION_FILE, &["period", "vendors", "hhi", "cr4", "band"]);
    for (period, s) in shares {
        let c = ConcentrationResult::from_shares(period.clone(), s.clone())
            .with_context(|| format!("concentration for {period}"))?;
        table.push([
            c.period,
            c.shares.len().to_string(),
            num(c.hhi),
            num(c.cr4),
            c.band.to_string(),
        ]);
    }
    Ok(vec![table])
}

fn quality_dmus(records: &[PriceRecord], config: &RunConfig) -> Vec<(Dmu, PriceRecord)> {
    records
        .iter()
        .filter_map(|r| {
            let d = dmus_from_records(std::slice::from_ref(r), config.blend).pop()?;
            Some((d, r.clone()))
        })
        .collect()
}

fn ownership(records: &[&PriceRecord]) -> &'static str {
    let open = records.iter().filter(|r| r.open_weight).count();
    if open == records.len() {
        "Open-source"
    } else if open == 0 {
        "Closed-source"
    } else {
        "Mixed"
    }
}

pub const DEA_FILE: &str = "table4a_dea.csv";

/// CCR efficiency of the cross-section, summarized by vendor, plus the
/// per-model scores under both returns-to-scale assumptions.
pub fn dea_tables(cross_section: &[PriceRecord], config: &RunConfig) -> Result<Vec<Table>> {
    let pairs = quality_dmus(cross_section, config);
    let dmus: Vec<Dmu> = pairs.iter().map(|p| p.0.clone()).collect();
    let ccr = ccr_efficiency(&dmus).context("CCR efficiency")?;
    let bcc = bcc_efficiency(&dmus).context("BCC efficiency")?;
    let tol = config.dea.tolerance;

    let mut models = Table::new(
        "fig06_vendor_efficiency.csv",
        &["vendor", "model_id", "blended_usd_per_m", "quality", "theta_ccr", "theta_bcc", "frontier_ccr"],
    );
    let mut by_vendor: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (d, r)) in pairs.iter().enumerate() {
        by_vendor.entry(r.vendor.as_str()).or_default().push(i);
        models.push([
            r.vendor.clone(),
            r.model_id.clone(),
            num(d.inputs[0]),
            num(d.outputs[0]),
            num(ccr.theta[i]),
            num(bcc.theta[i]),
            u8::from(ccr.theta[i] >= 1.0 - tol).to_string(),
        ]);
    }

    let mut table = Table::new(DEA_FILE, &["vendor", "n", "mean_theta", "max_theta", "avg_blended_usd_per_m", "type"]);
    let summarize = |idx: &[usize]| -> [String; 5] {
        let n = idx.len();
        let mean = idx.iter().map(|&i| ccr.theta[i]).sum::<f64>() / n as f64;
        let max = idx.iter().map(|&i| ccr.theta[i]).fold(f64::NEG_INFINITY, f64::max);
        let price = idx.iter().map(|&i| pairs[i].0.inputs[0]).sum::<f64>() / n as f64;
        let recs: Vec<&PriceRecord> = idx.iter().map(|&i| &pairs[i].1).collect();
        [n.to_string(), num(mean), num(max), num(price), ownership(&recs).to_string()]
    };
    let mut vendors: Vec<(&str, f64, [String; 5])> = by_vendor
        .iter()
        .map(|(v, idx)| {
            let mean = idx.iter().map(|&i| ccr.theta[i]).sum::<f64>() / idx.len() as f64;
            (*v, mean, summarize(idx))
        })
        .collect();
    // highest mean efficiency first; BTreeMap order breaks ties by name
    vendors.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (v, _, cells) in vendors {
        table.push(std::iter::once(v.to_string()).chain(cells));
    }
    let all: Vec<usize> = (0..pairs.len()).collect();
    let mut last = summarize(&all);
    last[4] = String::new();
    table.push(std::iter::once("All models".to_string()).chain(last));
    Ok(vec![table, models])
}

pub const MALMQUIST_FILE: &str = "table4b_malmquist.csv";

fn malmquist_periods(records: &[PriceRecord], config: &RunConfig) -> Vec<Quarter> {
    if !config.dea.malmquist_periods.is_empty() {
        return config.dea.malmquist_periods.clone();
    }
    let mut qs: Vec<Quarter> = records
        .iter()
        .filter(|r| r.quality_score.is_some())
        .map(|r| r.quarter())
        .collect();
    qs.sort();
    qs.dedup();
    qs
}

/// Malmquist decomposition between consecutive periods of the panel.
pub fn malmquist_tables(records: &[PriceRecord], config: &RunConfig) -> Result<Vec<Table>> {
    let periods = malmquist_periods(records, config);
    if periods.len() < 2 {
        bail!("Malmquist needs at least two periods with quality-scored records, found {}", periods.len());
    }
    let set = |q: Quarter| -> Result<Vec<Dmu>> {
        let in_q: Vec<PriceRecord> = records.iter().filter(|r| r.quarter() == q).cloned().collect();
        let dmus = dmus_from_records(&in_q, config.blend);
        if dmus.is_empty() {
            bail!("no quality-scored records in {q}");
        }
        Ok(dmus)
    };
    let mut table = Table::new(
        MALMQUIST_FILE,
        &[
            "from", "to", "n_from", "n_to", "ec", "tc", "mpi", "d_tech_from_unit_from",
            "d_tech_from_unit_to", "d_tech_to_unit_from", "d_tech_to_unit_to",
        ],
    );
    let mut shift = Table::new(
        "fig07_frontier_shift.csv",
        &["period", "cumulative_ec", "cumulative_tc", "cumulative_mpi"],
    );
    shift.push([periods[0].to_string(), num(1.0), num(1.0), num(1.0)]);
    let (mut cum_ec, mut cum_tc, mut cum_mpi) = (1.0, 1.0, 1.0);
    let (mut sum_ec, mut sum_tc, mut sum_mpi) = (0.0, 0.0, 0.0);
    for pair in periods.windows(2) {
        let (a, b) = (set(pair[0])?, set(pair[1])?);
        let m = malmquist(&a, &b, config.dea.representative, ReturnsToScale::Constant)
            .with_context(|| format!("Malmquist {} -> {}", pair[0], pair[1]))?;
        table.push([
            pair[0].to_string(),
            pair[1].to_string(),
            a.len().to_string(),
            b.len().to_string(),
            num(m.ec),
            num(m.tc),
            num(m.mpi),
            num(m.d_a_a),
            num(m.d_a_b),
            num(m.d_b_a),
            num(m.d_b_b),
        ]);
        cum_ec *= m.ec;
        cum_tc *= m.tc;
        cum_mpi *= m.mpi;
        sum_ec += m.ec;
        sum_tc += m.tc;
        sum_mpi += m.mpi;
        shift.push([pair[1].to_string(), num(cum_ec), num(cum_tc), num(cum_mpi)]);
    }
    let k = (periods.len() - 1) as f64;
    table.push([
        "average".to_string(),
        String::new(),
        String::new(),
        String::new(),
        num(sum_ec / k),
        num(sum_tc / k),
        num(sum_mpi / k),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
    ]);
    Ok(vec![table, shift])
}

/// A training record matched to its panel prices.
#[derive(Debug, Clone)]
pub struct MatchedModel {
    pub training: TrainingRecord,
    /// Mean over the model's panel observations of (input + output) / 2.
    pub avg_price: f64,
}

pub fn match_training(panel: &[PriceRecord], training: &[TrainingRecord]) -> Vec<MatchedModel> {
    training
        .iter()
        .filter_map(|t| {
            let prices: Vec<f64> = panel
                .iter()
                .filter(|p| p.model_id == t.model_id)
                .map(|p| (p.input_price + p.output_price) / 2.0)
                .collect();
            (!prices.is_empty()).then(|| MatchedModel {
                training: t.clone(),
                avg_price: prices.iter().sum::<f64>() / prices.len() as f64,
            })
        })
        .collect()
}

/// The four regression columns and the unit-cost comparison.
#[derive(Debug, Clone)]
pub struct RegressionSuite {
    pub matched: Vec<MatchedModel>,
    pub ols: RegressionResult,
    pub winsorized: RegressionResult,
    pub fixed_effects: RegressionResult,
    pub cn_unit_cost: Vec<f64>,
    pub us_unit_cost: Vec<f64>,
    pub welch: WelchResult,
}

pub const COST: &str = "ln_training_cost";
pub const PARAMS: &str = "ln_parameters";

pub fn regression_suite(panel: &[PriceRecord], training: &[TrainingRecord], config: &RunConfig) -> Result<RegressionSuite> {
    let matched = match_training(panel, training);
    let y: Vec<f64> = matched.iter().map(|m| m.avg_price.ln()).collect();
    let x: Vec<f64> = matched.iter().map(|m| m.training.training_cost.ln()).collect();
    let params: Vec<f64> = matched.iter().map(|m| m.training.parameter_count.ln()).collect();
    let vendors: Vec<String> = matched.iter().map(|m| m.training.vendor.clone()).collect();

    let design = Design::with_intercept(&[(COST, &x)])?;
    let ols_fit = ols(&y, &design).context("baseline regression")?;
    let (lo, hi) = config.winsor.bounds();
    let yw = winsorize(&y, lo, hi)?;
    let xw = winsorize(&x, lo, hi)?;
    let winsorized = ols(&yw, &Design::with_intercept(&[(COST, &xw)])?).context("winsorized regression")?;
    let fe = fixed_effects(&y, &Design::from_columns(&[(COST, &x), (PARAMS, &params)])?, &vendors)
        .context("vendor fixed-effects regression")?;

    let unit = |region: Region| -> Vec<f64> {
        matched
            .iter()
            .filter(|m| m.training.region == region)
            .map(|m| m.training.unit_cost())
            .collect()
    };
    let (cn, us) = (unit(Region::Cn), unit(Region::UsEu));
    let welch = welch_t(&cn, &us).context("unit-cost comparison")?;
    Ok(RegressionSuite {
        matched,
        ols: ols_fit,
        winsorized,
        fixed_effects: fe,
        cn_unit_cost: cn,
        us_unit_cost: us,
        welch,
    })
}

pub const REGRESSION_FILE: &str = "table5_regression.csv";

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Regression table (long format), training-cost trend data and the
/// cost-versus-price scatter.
pub fn regress_tables(panel: &[PriceRecord], training: &[TrainingRecord], config: &RunConfig) -> Result<Vec<Table>> {
    let suite = regression_suite(panel, training, config)?;
    let mut table = Table::new(REGRESSION_FILE, &["spec", "term", "estimate", "std_error", "p_value"]);
    let mut coefficients = |spec: &str, r: &RegressionResult, robust: bool| {
        let (se, p) = match (robust, &r.hc3_se, &r.hc3_p_values) {
            (true, Some(se), Some(p)) => (se.clone(), p.clone()),
            (true, _, _) => (vec![f64::NAN; r.names.len()], vec![f64::NAN; r.names.len()]),
            _ => (r.ols_se.clone(), r.p_values.clone()),
        };
        for (i, name) in r.names.iter().enumerate() {
            table.push([spec.to_string(), name.clone(), num(r.coefficients[i]), num(se[i]), num(p[i])]);
        }
        table.push([spec.to_string(), "n".into(), r.n.to_string(), String::new(), String::new()]);
        table.push([spec.to_string(), "r_squared".into(), num(r.r_squared), String::new(), String::new()]);
    };
    coefficients("ols", &suite.ols, false);
    coefficients("hc3", &suite.ols, true);
    coefficients("winsorized", &suite.winsorized, false);
    coefficients("vendor_fe", &suite.fixed_effects, false);
    let groups = suite.fixed_effects.names.iter().filter(|n| n.starts_with("fe[")).count();
    table.push(["vendor_fe".to_string(), "groups".into(), groups.to_string(), String::new(), String::new()]);
    table.push([
        "vendor_fe".to_string(),
        "dropped_singletons".into(),
        suite.fixed_effects.dropped_groups.len().to_string(),
        String::new(),
        String::new(),
    ]);
    let (cn, us) = (mean(&suite.cn_unit_cost), mean(&suite.us_unit_cost));
    for (term, value) in [
        ("cn_mean_usd_per_flop", num(cn)),
        ("us_eu_mean_usd_per_flop", num(us)),
        ("ratio_us_eu_over_cn", num(us / cn)),
        ("t", num(suite.welch.t)),
        ("df", num(suite.welch.df)),
    ] {
        table.push(["welch_unit_cost".to_string(), term.into(), value, String::new(), String::new()]);
    }
    table.push(["welch_unit_cost".to_string(), "p".into(), String::new(), String::new(), num(suite.welch.p)]);

    let mut trend = Table::new(
        "fig08_training_cost.csv",
        &["release_date", "model_id", "vendor", "region", "training_cost_usd", "training_compute_flop", "usd_per_flop"],
    );
    let mut sorted: Vec<&TrainingRecord> = training.iter().collect();
    sorted.sort_by_key(|t| t.release_date);
    for t in sorted {
        trend.push([
            t.release_date.to_string(),
            t.model_id.clone(),
            t.vendor.clone(),
            t.region.as_str().to_string(),
            num(t.training_cost),
            num(t.training_compute),
            num(t.unit_cost()),
        ]);
    }
    let mut scatter = Table::new(
        "fig09_training_vs_price.csv",
        &["model_id", "region", "ln_training_cost", "ln_avg_price", "fitted"],
    );
    let (a, b) = (suite.ols.coefficients[suite.ols.index("const").unwrap_or(0)], suite.ols.coefficient(COST).unwrap_or(f64::NAN));
    for m in &suite.matched {
        let x = m.training.training_cost.ln();
        scatter.push([
            m.training.model_id.clone(),
            m.training.region.as_str().to_string(),
            num(x),
            num(m.avg_price.ln()),
            num(a + b * x),
        ]);
    }
    Ok(vec![table, trend, scatter])
}

pub const ROBUSTNESS_FILE: &str = "table6_robustness.csv";

/// Bootstrap, sub-sample, outlier and specification checks on the decay
/// fits; regression variants; DEA sensitivity.
pub fn robustness_tables(
    panel: &[PriceRecord],
    training: &[TrainingRecord],
    cross_section: &[PriceRecord],
    config: &RunConfig,
) -> Result<Vec<Table>> {
    let mut table = Table::new(ROBUSTNESS_FILE, &["panel", "check", "statistic", "value"]);
    let mut put = |panel: &str, check: &str, stat: &str, value: String| {
        table.push([panel.to_string(), check.to_string(), stat.to_string(), value]);
    };
    let mut trace = Table::new("bootstrap_trace.csv", &["sample", "replicate", "lambda"]);

    let tiers = tier_samples(panel, config);
    let b = config.bootstrap;
    for (tier, series) in &tiers {
        let s = bootstrap(series, |s: &[Observation]| fit_exponential(s).map(|f| f.lambda), b.replications, b.seed)
            .with_context(|| format!("bootstrap for {tier}"))?;
        let check = format!("bootstrap_{tier}");
        put("A", &check, "replications", s.replications.to_string());
        put("A", &check, "seed", s.master_seed.to_string());
        put("A", &check, "estimate", num(s.estimate));
        put("A", &check, "ci_lower", num(s.ci_lower));
        put("A", &check, "ci_upper", num(s.ci_upper));
        put("A", &check, "fraction_positive", num(s.fraction_positive));
        put("A", &check, "failures", s.failures.to_string());
        for (r, v) in s.replicates.iter().enumerate() {
            trace.push([tier.to_string(), r.to_string(), v.map(num).unwrap_or_default()]);
        }
    }

    let pooled = pooled_records(panel, config);
    let region_series = |region: Region| -> Vec<Observation> {
        pooled
            .iter()
            .filter(|r| r.region == region)
            .map(|r| (r.observed_date, r.input_price))
            .collect()
    };
    let us = fit_exponential(&region_series(Region::UsEu)).context("US/EU sub-sample fit")?;
    let cn = fit_exponential(&region_series(Region::Cn)).context("CN sub-sample fit")?;
    let (w, p) = wald_lambda_diff(&us, &cn).context("sub-sample Wald test")?;
    put("A", "subsample_us_eu_vs_cn", "lambda_us_eu", num(us.lambda));
    put("A", "subsample_us_eu_vs_cn", "lambda_cn", num(cn.lambda));
    put("A", "subsample_us_eu_vs_cn", "n_us_eu", us.n.to_string());
    put("A", "subsample_us_eu_vs_cn", "n_cn", cn.n.to_string());
    put("A", "subsample_us_eu_vs_cn", "wald", num(w));
    put("A", "subsample_us_eu_vs_cn", "p_value", num(p));

    let mut samples: Vec<(String, Vec<Observation>)> =
        tiers.iter().map(|(t, s)| (t.to_string(), s.clone())).collect();
    samples.push(("pooled".into(), pooled_series(panel, config)));
    for (name, series) in &samples {
        let full = fit_exponential(series)?;
        let trimmed_series = drop_outliers(series);
        let check = format!("outliers_{name}");
        put("A", &check, "dropped", (series.len() - trimmed_series.len()).to_string());
        match fit_exponential(&trimmed_series) {
            Ok(trimmed) => {
                put("A", &check, "lambda_full", num(full.lambda));
                put("A", &check, "lambda_trimmed", num(trimmed.lambda));
                put("A", &check, "delta_pct", num((trimmed.lambda - full.lambda) / full.lambda * 100.0));
            }
            Err(e) => put("A", &check, "error", e.to_string()),
        }
    }
    for (name, series) in &samples {
        let cmp = compare_specifications(series).with_context(|| format!("specification comparison for {name}"))?;
        let check = format!("specifications_{name}");
        put("A", &check, "winner", cmp.winner.to_string());
        for form in FunctionalForm::ALL {
            let aic = cmp.get(form).map(|f| num(f.aic)).unwrap_or_else(|| "unavailable".into());
            put("A", &check, &format!("aic_{form}"), aic);
        }
    }

    let suite = regression_suite(panel, training, config)?;
    let beta = |r: &RegressionResult| r.coefficient(COST).unwrap_or(f64::NAN);
    let at = |r: &RegressionResult, v: &Option<Vec<f64>>| r.index(COST).and_then(|i| v.as_ref().map(|v| v[i]));
    put("B", "hc3", "beta", num(beta(&suite.ols)));
    put("B", "hc3", "std_error", num(at(&suite.ols, &suite.ols.hc3_se).unwrap_or(f64::NAN)));
    put("B", "hc3", "p_value", num(at(&suite.ols, &suite.ols.hc3_p_values).unwrap_or(f64::NAN)));
    put("B", "winsorized", "beta", num(beta(&suite.winsorized)));
    put(
        "B",
        "winsorized",
        "change_pct",
        num((beta(&suite.winsorized) - beta(&suite.ols)) / beta(&suite.ols) * 100.0),
    );
    put("B", "vendor_fe", "beta", num(beta(&suite.fixed_effects)));
    put("B", "vendor_fe", "r_squared", num(suite.fixed_effects.r_squared));
    put("B", "vendor_fe", "n", suite.fixed_effects.n.to_string());

    let dmus: Vec<Dmu> = quality_dmus(cross_section, config).into_iter().map(|p| p.0).collect();
    let q = config.dea.quality_perturbation;
    let up = sensitivity_quality(&dmus, &QualityPerturbation::Uniform(q)).context("quality sensitivity")?;
    let down = sensitivity_quality(&dmus, &QualityPerturbation::Uniform(-q)).context("quality sensitivity")?;
    put("C", "quality_plus", "spearman_rho", num(up.rho));
    put("C", "quality_minus", "spearman_rho", num(down.rho));
    let bcc = bcc_efficiency(&dmus).context("BCC efficiency")?;
    let rho = spearman(&up.baseline.theta, &bcc.theta).map(num).unwrap_or_else(|e| e.to_string());
    put("C", "bcc_vs_ccr", "spearman_rho", rho);
    let frontier_ids = |r: &tokenlab::DeaResult| -> Vec<String> {
        r.theta
            .iter()
            .enumerate()
            .filter(|(_, t)| **t >= 1.0 - config.dea.tolerance)
            .map(|(i, _)| r.ids[i].clone())
            .collect()
    };
    let base_ids = frontier_ids(&up.baseline);
    let stable = base_ids == frontier_ids(&up.perturbed) && base_ids == frontier_ids(&down.perturbed);
    put("C", "frontier_stability", "ccr_frontier", base_ids.join(";"));
    put("C", "frontier_stability", "bcc_frontier", frontier_ids(&bcc).join(";"));
    put("C", "frontier_stability", "stable_under_quality_shift", u8::from(stable).to_string());

    Ok(vec![table, trace])
}

pub const GROWTH_FILE: &str = "growth_accounting.csv";

/// Growth accounting from configured factor inputs; empty when none are set.
pub fn growth_tables(config: &RunConfig) -> Result<Vec<Table>> {
    let Some(total) = config.growth.total_change else {
        return Ok(Vec::new());
    };
    let g = growth_accounting(total, &config.growth.factors).context("growth accounting")?;
    let mut table = Table::new(GROWTH_FILE, &["component", "log_change", "share_of_total_pct"]);
    for ((name, c), (_, pct)) in g.contributions.iter().zip(&g.contribution_pct) {
        table.push([name.clone(), num(*c), num(*pct)]);
    }
    table.push(["residual_tfp".to_string(), num(g.residual), num(g.residual_pct)]);
    table.push(["total".to_string(), num(g.total), num(100.0)]);
    Ok(vec![table])
}
