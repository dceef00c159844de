//! Acceptance suite. Prints one PASS/FAIL line per criterion followed by the
//! individual checks, and exits non-zero when any criterion fails.
//!
//! Checks against the replication dataset run only when
//! `TOKENLAB_REPLICATION_DIR` points at a directory holding `milestones.csv`,
//! `training.csv` and `cross_section.csv` (plus an optional `config.toml`);
//! otherwise they are reported as SKIP.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration as Elapsed, Instant};

use chrono::{Datelike, Duration, Months, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use tokenlab::breaks::{chow_scan, log_series};
use tokenlab::econometrics::{bootstrap, fixed_effects, ols, spearman, welch_t, Design};
use tokenlab::frontier::{
    bcc_efficiency, ccr_efficiency, dmus_from_records, malmquist, sensitivity_quality, QualityPerturbation,
    Representative, ReturnsToScale,
};
use tokenlab::ingest::RunConfig;
use tokenlab::market::{classify_hhi, hhi, premium_average, reasoning_premium};
use tokenlab::{fit_exponential, Dmu, Observation, PriceRecord, Quarter, Region, Tier, Window};
use tokenlab_cli::analysis::{
    malmquist_tables, pooled_records, pooled_series, regression_suite, robustness_tables, tier_samples, COST,
};
use tokenlab_cli::report::Dataset;

enum Outcome {
    Pass,
    Fail,
    Skip,
}

struct Check {
    label: String,
    outcome: Outcome,
    detail: String,
}

#[derive(Default)]
struct Criterion {
    checks: Vec<Check>,
}

impl Criterion {
    fn record(&mut self, label: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            label: label.into(),
            outcome: if ok { Outcome::Pass } else { Outcome::Fail },
            detail: detail.into(),
        });
    }

    fn near(&mut self, label: impl Into<String>, got: f64, want: f64, tol: f64) {
        // tolerances are on printed 3-4 significant digits; allow for binary representation
        let ok = (got - want).abs() <= tol + 1e-12;
        self.record(label, ok, format!("got {got:.6}, want {want} +/- {tol}"));
    }

    fn near_rel(&mut self, label: impl Into<String>, got: f64, want: f64, rel: f64) {
        let ok = (got - want).abs() <= rel * want.abs() + 1e-12;
        self.record(
            label,
            ok,
            format!("got {got:.6}, want {want} +/- {}%", rel * 100.0),
        );
    }

    fn skip(&mut self, label: impl Into<String>, why: &str) {
        self.checks.push(Check {
            label: label.into(),
            outcome: Outcome::Skip,
            detail: why.to_string(),
        });
    }

    fn runtime(&mut self, label: &str, took: Elapsed, limit: Elapsed) {
        self.record(label, took < limit, format!("{took:.2?} (limit {limit:?})"));
    }

    fn failed(&self) -> bool {
        self.checks.iter().any(|c| matches!(c.outcome, Outcome::Fail))
    }
}

const NO_REPLICATION: &str = "TOKENLAB_REPLICATION_DIR not set";

struct Replication {
    data: Dataset,
    config: RunConfig,
}

fn replication() -> Option<Replication> {
    let dir = PathBuf::from(std::env::var_os("TOKENLAB_REPLICATION_DIR")?);
    let config_path = dir.join("config.toml");
    let config = if config_path.exists() {
        RunConfig::load(&config_path).expect("replication config")
    } else {
        RunConfig::default()
    };
    let data = Dataset::load(&dir).expect("replication dataset");
    Some(Replication { data, config })
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn sample_dir() -> PathBuf {
    workspace().join("fixtures/sample")
}

fn sample_config() -> RunConfig {
    RunConfig::load(&sample_dir().join("config.toml")).unwrap()
}

fn years(from: NaiveDate, to: NaiveDate) -> f64 {
    (to - from).num_days() as f64 / 365.25
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn date(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

fn decay(rep: Option<&Replication>) -> Criterion {
    let mut c = Criterion::default();
    let started = Instant::now();

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_lambda = 0.0f64;
    let mut worst_r2 = 0.0f64;
    for _ in 0..50 {
        let p0 = rng.random_range(0.05..100.0);
        let lambda = rng.random_range(-0.5..2.0);
        let start = date("2020-01-01") + Duration::days(rng.random_range(0..1000));
        let n = rng.random_range(3..40);
        let series: Vec<Observation> = (0..n)
            .map(|i| {
                let d = start + Duration::days(i * 30 + rng.random_range(0..20));
                (d, p0 * (-lambda * years(start, d)).exp())
            })
            .collect();
        let fit = fit_exponential(&series).unwrap();
        worst_lambda = worst_lambda.max((fit.lambda - lambda).abs());
        worst_r2 = worst_r2.max((fit.r_squared - 1.0).abs());
    }
    c.record(
        "noiseless recovery",
        worst_lambda < 1e-9 && worst_r2 < 1e-12,
        format!("max |lambda error| {worst_lambda:.2e}, max |R2 - 1| {worst_r2:.2e}"),
    );

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let start = date("2021-01-01");
        let series: Vec<Observation> = (0..rng.random_range(5..30))
            .map(|_| {
                (
                    start + Duration::days(rng.random_range(0..1500)),
                    rng.random_range(0.05..100.0),
                )
            })
            .collect();
        let Ok(base) = fit_exponential(&series) else { continue };
        let shift = Duration::days(rng.random_range(-500..500));
        let scale = rng.random_range(0.01..100.0);
        let moved: Vec<Observation> = series.iter().map(|(d, p)| (*d + shift, p * scale)).collect();
        let other = fit_exponential(&moved).unwrap();
        worst = worst
            .max((other.lambda - base.lambda).abs() / base.lambda.abs().max(1.0))
            .max((other.r_squared - base.r_squared).abs());
    }
    c.record(
        "time-shift and price-scale invariance",
        worst < 1e-8,
        format!("max deviation {worst:.2e}"),
    );
    c.runtime("runtime", started.elapsed(), Elapsed::from_secs(1));

    match rep {
        None => c.skip("replication tier fits", NO_REPLICATION),
        Some(rep) => {
            let records = &rep.data.milestones;
            let expected = [
                ("economy", 0.629, 0.192),
                ("mid", 0.449, 0.307),
                ("flagship", 0.193, 0.031),
                ("pooled", 0.525, 0.241),
            ];
            let mut samples: BTreeMap<String, Vec<Observation>> = tier_samples(records, &rep.config)
                .into_iter()
                .map(|(t, s)| (t.to_string(), s))
                .collect();
            samples.insert("pooled".into(), pooled_series(records, &rep.config));
            for (name, lambda, r2) in expected {
                match fit_exponential(&samples[name]) {
                    Ok(fit) => {
                        c.near_rel(format!("{name} lambda"), fit.lambda, lambda, 0.005);
                        c.near(format!("{name} R2"), fit.r_squared, r2, 0.005);
                    }
                    Err(e) => c.record(format!("{name} fit"), false, e.to_string()),
                }
            }
        }
    }
    c
}

fn line_ssr(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    points.iter().map(|p| (p.1 - (my - b * mx) - b * p.0).powi(2)).sum()
}

fn brute_force_f(series: &[Observation], candidate: NaiveDate) -> f64 {
    let first = series.iter().map(|o| o.0).min().unwrap();
    let split = |keep: &dyn Fn(NaiveDate) -> bool| -> Vec<(f64, f64)> {
        series
            .iter()
            .filter(|o| keep(o.0))
            .map(|o| (years(first, o.0), o.1))
            .collect()
    };
    let pooled = line_ssr(&split(&|_| true));
    let within = line_ssr(&split(&|d| d < candidate)) + line_ssr(&split(&|d| d >= candidate));
    ((pooled - within) / 2.0) / (within / (series.len() as f64 - 4.0))
}

fn month_index(d: NaiveDate) -> i32 {
    d.year() * 12 + d.month() as i32
}

fn two_slope_hits(kinked: bool) -> (usize, f64) {
    let start = date("2020-01-15");
    let dates: Vec<NaiveDate> = (0..40).map(|m| start + Months::new(m)).collect();
    let junction = 2.0;
    let truth = start + Duration::days((junction * 365.25) as i64);
    let truth = NaiveDate::from_ymd_opt(truth.year(), truth.month(), 1).unwrap();
    let mut hits = 0;
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let series: Vec<Observation> = dates
            .iter()
            .map(|&d| {
                let t = years(start, d);
                let trend = if kinked {
                    4.0 - 0.2 * t - 0.6 * (t - junction).max(0.0)
                } else if t < junction {
                    4.0 - 0.2 * t
                } else {
                    4.0 - 0.8 * t
                };
                (d, trend + 0.05 * standard_normal(&mut rng))
            })
            .collect();
        let scan = chow_scan(&series, Window::default(), 8).unwrap();
        if (month_index(scan.best.break_date) - month_index(truth)).abs() <= 1 {
            hits += 1;
        }
        for r in &scan.trace {
            let oracle = brute_force_f(&series, r.break_date);
            worst = worst.max((r.f_statistic - oracle).abs() / oracle.abs().max(1.0));
        }
    }
    (hits, worst)
}

fn breaks(rep: Option<&Replication>) -> Criterion {
    let mut c = Criterion::default();
    let started = Instant::now();
    let (hits, worst) = two_slope_hits(false);
    c.record("two-slope break located within one month", hits >= 95, format!("{hits}/100 trials (need 95)"));
    c.record("F equals brute-force SSR oracle", worst <= 1e-9, format!("max relative error {worst:.2e}"));
    c.runtime("runtime", started.elapsed(), Elapsed::from_secs(1));
    let (kink_hits, _) = two_slope_hits(true);
    c.checks.push(Check {
        label: "continuous-kink variant (informational)".into(),
        outcome: Outcome::Skip,
        detail: format!("{kink_hits}/100 trials"),
    });

    match rep {
        None => c.skip("replication scans", NO_REPLICATION),
        Some(rep) => {
            let series = log_series(&pooled_series(&rep.data.milestones, &rep.config));
            match chow_scan(&series, Window::default(), rep.config.chow.min_segment) {
                Ok(scan) => {
                    let b = scan.best;
                    c.record("global break date", b.break_date == date("2024-05-01"), b.break_date.to_string());
                    c.near("global F", b.f_statistic, 5.736, 0.01);
                    c.near("global p", b.p_value, 0.005, 0.001);
                    c.record("global split", (b.n_pre, b.n_post) == (16, 44), format!("{}/{}", b.n_pre, b.n_post));
                }
                Err(e) => c.record("global scan", false, e.to_string()),
            }
            match chow_scan(&series, rep.config.chow.window, rep.config.chow.min_segment) {
                Ok(scan) => {
                    let b = scan.best;
                    c.record("window break date", b.break_date == date("2024-07-01"), b.break_date.to_string());
                    c.near("window F", b.f_statistic, 5.288, 0.01);
                }
                Err(e) => c.record("window scan", false, e.to_string()),
            }
        }
    }
    c
}

fn quarter_record(quarter: &str, model: &str, price: f64, reasoning: bool) -> PriceRecord {
    let q: Quarter = quarter.parse().unwrap();
    PriceRecord {
        model_id: model.into(),
        vendor: model.split('/').next().unwrap().into(),
        observed_date: q.first_day(),
        input_price: price,
        output_price: price,
        context_window: None,
        quality_score: None,
        reasoning,
        open_weight: false,
        region: Region::UsEu,
        tier_hint: None,
    }
}

fn premium() -> Criterion {
    let mut c = Criterion::default();
    let printed = [
        ("2024Q3", 15.00, 0.18, 83.3),
        ("2024Q4", 15.00, 0.80, 18.8),
        ("2025Q1", 0.55, 1.07, 0.51),
        ("2025Q2", 10.00, 0.43, 23.4),
    ];
    let mut rows = Vec::new();
    for (q, reasoning, other, want) in printed {
        let records = [
            quarter_record(q, "r/reasoning", reasoning, true),
            quarter_record(q, "n/base", other, false),
        ];
        let row = reasoning_premium(&records, q.parse().unwrap()).unwrap();
        c.near(format!("{q} premium"), row.premium, want, 0.05);
        rows.push(row);
    }
    c.near("average premium", premium_average(&rows).unwrap(), 31.5, 0.05);
    c
}

fn random_dmus(rng: &mut ChaCha8Rng, n: usize) -> Vec<Dmu> {
    (0..n)
        .map(|i| {
            Dmu::new(
                format!("u{i}"),
                vec![rng.random_range(0.01..100.0)],
                vec![rng.random_range(1.0..100.0)],
            )
        })
        .collect()
}

fn frontier(rep: Option<&Replication>) -> Criterion {
    let mut c = Criterion::default();
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=50);
        let dmus = random_dmus(&mut rng, n);
        let best = dmus.iter().map(|d| d.outputs[0] / d.inputs[0]).fold(f64::MIN, f64::max);
        let lp = ccr_efficiency(&dmus).unwrap();
        for (d, theta) in dmus.iter().zip(&lp.theta) {
            worst = worst.max((theta - d.outputs[0] / d.inputs[0] / best).abs());
        }
    }
    c.record("LP theta equals ratio oracle", worst <= 1e-9, format!("max |error| {worst:.2e} over 200 instances"));
    c.runtime("runtime", started.elapsed(), Elapsed::from_secs(10));

    match rep {
        None => c.skip("replication cross-section", NO_REPLICATION),
        Some(rep) => {
            let dmus = dmus_from_records(&rep.data.cross_section, rep.config.blend);
            let r = ccr_efficiency(&dmus).unwrap();
            c.near("mean theta", r.mean_theta(), 0.087, 0.002);
            c.record("frontier size", r.frontier.len() == 2, format!("{} models", r.frontier.len()));
        }
    }
    c
}

fn malmquist_criterion(rep: Option<&Replication>) -> Criterion {
    let mut c = Criterion::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut identity = true;
    let mut same_period = true;
    for _ in 0..200 {
        let (na, nb) = (rng.random_range(1..=30), rng.random_range(1..=30));
        let a = random_dmus(&mut rng, na);
        let b = random_dmus(&mut rng, nb);
        for rule in [Representative::Mean, Representative::Frontier] {
            let m = malmquist(&a, &b, rule, ReturnsToScale::Constant).unwrap();
            identity &= m.mpi == m.ec * m.tc;
            let s = malmquist(&a, &a, rule, ReturnsToScale::Constant).unwrap();
            same_period &= (s.ec, s.tc, s.mpi) == (1.0, 1.0, 1.0);
        }
    }
    let sample = Dataset::load(&sample_dir()).unwrap();
    let tables = malmquist_tables(&sample.milestones, &sample_config()).unwrap();
    let csv = tables[0].to_csv();
    for line in csv.lines().skip(1).filter(|l| !l.starts_with("average")) {
        let cells: Vec<f64> = line.split(',').skip(4).take(3).map(|v| v.parse().unwrap()).collect();
        identity &= cells[2] == cells[0] * cells[1];
    }
    c.record("MPI = EC x TC exactly", identity, "200 random pairs x 2 rules, plus the sample report rows");
    c.record("identical periods give (1, 1, 1)", same_period, "200 random sets x 2 rules");

    match rep {
        None => c.skip("replication quarterly sets", NO_REPLICATION),
        Some(rep) => {
            let expected = [
                [0.733, 2.909, 2.132],
                [0.994, 4.133, 4.107],
                [1.035, 1.000, 1.035],
            ];
            match malmquist_tables(&rep.data.milestones, &rep.config) {
                Ok(tables) => {
                    let csv = tables[0].to_csv();
                    let rows: Vec<Vec<String>> = csv
                        .lines()
                        .skip(1)
                        .filter(|l| !l.starts_with("average"))
                        .map(|l| l.split(',').map(str::to_string).collect())
                        .collect();
                    c.record("period count", rows.len() == expected.len(), format!("{} transitions", rows.len()));
                    for (row, want) in rows.iter().zip(expected) {
                        for (k, name) in ["EC", "TC", "MPI"].iter().enumerate() {
                            let got: f64 = row[4 + k].parse().unwrap();
                            c.near_rel(format!("{}->{} {name}", row[0], row[1]), got, want[k], 0.02);
                        }
                    }
                }
                Err(e) => c.record("Malmquist tables", false, e.to_string()),
            }
        }
    }
    c
}

struct SimpleFit {
    slope: f64,
    intercept: f64,
    se: f64,
    hc3: f64,
}

/// Straight-line OLS and its HC3 slope standard error from explicit 2x2 algebra.
fn simple_regression(x: &[f64], y: &[f64]) -> SimpleFit {
    let n = x.len() as f64;
    let (sx, sxx) = (x.iter().sum::<f64>(), x.iter().map(|v| v * v).sum::<f64>());
    let mx = sx / n;
    let my = y.iter().sum::<f64>() / n;
    let cxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let cxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = cxy / cxx;
    let intercept = my - slope * mx;
    let e: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    let s2 = e.iter().map(|v| v * v).sum::<f64>() / (n - 2.0);

    // (X'X)^-1 for X = [1, x]
    let det = n * sxx - sx * sx;
    let (i00, i01, i11) = (sxx / det, -sx / det, n / det);
    let mut meat = [0.0; 3];
    for (xi, ei) in x.iter().zip(&e) {
        let h = i00 + 2.0 * i01 * xi + i11 * xi * xi;
        let w = ei * ei / (1.0 - h).powi(2);
        meat[0] += w;
        meat[1] += w * xi;
        meat[2] += w * xi * xi;
    }
    // slope row of (X'X)^-1 is (i01, i11)
    let hc3 = i01 * i01 * meat[0] + 2.0 * i01 * i11 * meat[1] + i11 * i11 * meat[2];
    SimpleFit {
        slope,
        intercept,
        se: (s2 / cxx).sqrt(),
        hc3: hc3.sqrt(),
    }
}

/// Within-group slope and the dummy-variable model R2, skipping singleton groups.
fn within_estimator(x: &[f64], y: &[f64], groups: &[&str]) -> (f64, f64) {
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        members.entry(g).or_default().push(i);
    }
    let kept: Vec<Vec<usize>> = members.into_values().filter(|m| m.len() > 1).collect();
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for m in &kept {
        let k = m.len() as f64;
        let mx = m.iter().map(|&i| x[i]).sum::<f64>() / k;
        let my = m.iter().map(|&i| y[i]).sum::<f64>() / k;
        for &i in m {
            sxx += (x[i] - mx).powi(2);
            sxy += (x[i] - mx) * (y[i] - my);
        }
    }
    let beta = sxy / sxx;
    let all: Vec<usize> = kept.iter().flatten().copied().collect();
    let grand = all.iter().map(|&i| y[i]).sum::<f64>() / all.len() as f64;
    let sst: f64 = all.iter().map(|&i| (y[i] - grand).powi(2)).sum();
    let mut ssr = 0.0;
    for m in &kept {
        let k = m.len() as f64;
        let mx = m.iter().map(|&i| x[i]).sum::<f64>() / k;
        let my = m.iter().map(|&i| y[i]).sum::<f64>() / k;
        for &i in m {
            ssr += (y[i] - my - beta * (x[i] - mx)).powi(2);
        }
    }
    (beta, 1.0 - ssr / sst)
}

fn regression(rep: Option<&Replication>) -> Criterion {
    let mut c = Criterion::default();
    let x = [1.2, 2.3, 2.9, 4.1, 5.0, 6.2, 7.1, 8.4, 9.0, 10.3, 11.1, 12.6];
    let y = [2.1, 2.9, 4.2, 4.0, 5.9, 6.1, 8.2, 7.7, 9.9, 10.1, 12.4, 11.8];
    let fit = simple_regression(&x, &y);
    let design = Design::with_intercept(&[("x", &x)]).unwrap();
    let r = ols(&y, &design).unwrap();
    let k = r.index("x").unwrap();
    let hc3 = r.hc3_se.as_ref().map(|v| v[k]).unwrap_or(f64::NAN);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    c.record(
        "OLS coefficients and SE",
        close(r.coefficients[k], fit.slope) && close(r.coefficients[1 - k], fit.intercept) && close(r.ols_se[k], fit.se),
        format!("beta {:.12} vs {:.12}", r.coefficients[k], fit.slope),
    );
    c.record("HC3 SE", close(hc3, fit.hc3), format!("{hc3:.12} vs {:.12}", fit.hc3));

    let groups = ["a", "a", "a", "b", "b", "b", "b", "c", "c", "c", "d", "c"];
    let names: Vec<String> = groups.iter().map(|g| g.to_string()).collect();
    let fe = fixed_effects(&y, &Design::from_columns(&[("x", &x)]).unwrap(), &names).unwrap();
    let (beta, r2) = within_estimator(&x, &y, &groups);
    let got = fe.coefficient("x").unwrap();
    c.record(
        "fixed effects slope and R2",
        close(got, beta) && close(fe.r_squared, r2),
        format!("beta {got:.12} vs {beta:.12}, R2 {:.12} vs {r2:.12}", fe.r_squared),
    );

    let a = [1.64, 2.10, 0.95, 1.80, 2.40];
    let b = [1.10, 1.25, 0.70, 1.60, 0.90, 1.05, 1.30];
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
    };
    let (qa, qb) = (var(&a) / a.len() as f64, var(&b) / b.len() as f64);
    let t = (mean(&a) - mean(&b)) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (a.len() as f64 - 1.0) + qb * qb / (b.len() as f64 - 1.0));
    let p = 2.0 * StudentsT::new(0.0, 1.0, df).unwrap().sf(t.abs());
    let w = welch_t(&a, &b).unwrap();
    c.record(
        "Welch t, df and p",
        close(w.t, t) && close(w.df, df) && close(w.p, p),
        format!("t {:.12} vs {t:.12}, df {:.9} vs {df:.9}", w.t, w.df),
    );

    match rep {
        None => c.skip("replication regression table", NO_REPLICATION),
        Some(rep) => match regression_suite(&rep.data.milestones, &rep.data.training, &rep.config) {
            Ok(s) => {
                let i = s.ols.index(COST).unwrap();
                c.record("sample size", s.matched.len() == 18, format!("{} matched models", s.matched.len()));
                c.near("beta", s.ols.coefficients[i], 0.432, 0.005);
                c.near("OLS SE", s.ols.ols_se[i], 0.204, 0.005);
                c.near("HC3 SE", s.ols.hc3_se.as_ref().map_or(f64::NAN, |v| v[i]), 0.223, 0.005);
                c.near("winsorized beta", s.winsorized.coefficient(COST).unwrap(), 0.397, 0.005);
                c.near("FE beta", s.fixed_effects.coefficient(COST).unwrap(), 0.129, 0.01);
                c.near("FE R2", s.fixed_effects.r_squared, 0.956, 0.005);
                c.near("Welch t", s.welch.t, 1.251, 0.005);
                c.near("Welch p", s.welch.p, 0.228, 0.005);
            }
            Err(e) => c.record("regression suite", false, format!("{e:#}")),
        },
    }
    c
}

fn robustness(rep: Option<&Replication>) -> Criterion {
    let mut c = Criterion::default();
    let sample = Dataset::load(&sample_dir()).unwrap();
    let config = sample_config();
    let started = Instant::now();

    let stat = |s: &[Observation]| fit_exponential(s).map(|f| f.lambda);
    let (_, series) = tier_samples(&sample.milestones, &config)
        .into_iter()
        .find(|(t, _)| *t == Tier::Economy)
        .unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| bootstrap(&series, stat, 1000, config.bootstrap.seed).unwrap())
    };
    let bits = |s: &tokenlab::BootstrapSummary| -> Vec<Option<u64>> {
        s.replicates.iter().map(|v| v.map(f64::to_bits)).collect()
    };
    let (first, second, wide) = (run(1), run(1), run(4));
    c.record(
        "bootstrap bitwise reproducible",
        bits(&first) == bits(&second) && bits(&first) == bits(&wide),
        "B = 1000, same seed, 1 and 4 threads",
    );

    let dmus = dmus_from_records(&sample.cross_section, config.blend);
    for shift in [0.2, -0.2] {
        let s = sensitivity_quality(&dmus, &QualityPerturbation::Uniform(shift)).unwrap();
        c.record(format!("quality {shift:+} rank correlation"), s.rho == 1.0, format!("rho = {}", s.rho));
    }
    let tables = robustness_tables(&sample.milestones, &sample.training, &sample.cross_section, &config);
    c.record("sample robustness tables", tables.is_ok(), tables.err().map(|e| format!("{e:#}")).unwrap_or_default());
    c.runtime("runtime", started.elapsed(), Elapsed::from_secs(30));

    match rep {
        None => c.skip("replication robustness", NO_REPLICATION),
        Some(rep) => {
            let cfg = &rep.config;
            for (tier, series) in tier_samples(&rep.data.milestones, cfg) {
                match bootstrap(&series, stat, 1000, cfg.bootstrap.seed) {
                    Ok(s) => c.record(
                        format!("{tier} fraction positive"),
                        s.fraction_positive == 1.0,
                        format!("{}", s.fraction_positive),
                    ),
                    Err(e) => c.record(format!("{tier} bootstrap"), false, e.to_string()),
                }
            }
            let pooled = pooled_records(&rep.data.milestones, cfg);
            let region = |r: Region| -> Vec<Observation> {
                pooled.iter().filter(|p| p.region == r).map(|p| (p.observed_date, p.input_price)).collect()
            };
            match (fit_exponential(&region(Region::UsEu)), fit_exponential(&region(Region::Cn))) {
                (Ok(us), Ok(cn)) => {
                    let (_, p) = tokenlab::decay::wald_lambda_diff(&us, &cn).unwrap();
                    c.near("sub-sample Wald p", p, 0.521, 0.01);
                }
                _ => c.record("sub-sample fits", false, "region fit failed"),
            }
            let dmus = dmus_from_records(&rep.data.cross_section, cfg.blend);
            let s = sensitivity_quality(&dmus, &QualityPerturbation::Uniform(0.2)).unwrap();
            c.record("quality +0.2 rank correlation", s.rho == 1.0, format!("rho = {}", s.rho));
            let bcc = bcc_efficiency(&dmus).unwrap();
            c.near("CCR vs BCC rho", spearman(&s.baseline.theta, &bcc.theta).unwrap(), 0.772, 0.01);
        }
    }
    c
}

fn concentration() -> Criterion {
    let mut c = Criterion::default();
    c.record("hhi of a monopoly", hhi(&[100.0]) == Ok(10000.0), format!("{:?}", hhi(&[100.0])));
    c.record(
        "hhi of 50/30/20",
        hhi(&[50.0, 30.0, 20.0]) == Ok(3800.0),
        format!("{:?}", hhi(&[50.0, 30.0, 20.0])),
    );
    let bands = [
        (4558.0, "Highly concentrated"),
        (3215.0, "Highly concentrated"),
        (2650.0, "Highly concentrated"),
        (2290.0, "Moderately concentrated"),
        (2086.0, "Moderately concentrated"),
    ];
    let mut labels = String::new();
    let mut ok = true;
    for (v, want) in bands {
        let got = classify_hhi(v).to_string();
        ok &= got == want;
        let _ = write!(labels, "{v}: {got}; ");
    }
    c.record("band labels", ok, labels.trim_end_matches("; ").to_string());

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut monotone = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..15);
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..10.0)).collect();
        let total: f64 = raw.iter().sum();
        let shares: Vec<f64> = raw.iter().map(|v| v / total * 100.0).collect();
        let i = rng.random_range(0..n);
        let j = (i + rng.random_range(1..n)) % n;
        let mut merged = shares.clone();
        merged[i] += merged[j];
        merged.remove(j);
        if hhi(&merged).unwrap() >= hhi(&shares).unwrap() - 1e-9 {
            monotone += 1;
        }
    }
    c.record("merger monotonicity", monotone == 100, format!("{monotone}/100 share vectors"));
    c
}

fn run_cli(out: &Path, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_tokenlab"))
        .arg("--config")
        .arg(sample_dir().join("config.toml"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn tokenlab");
    assert!(
        status.status.success(),
        "tokenlab {args:?} failed: {}",
        String::from_utf8_lossy(&status.stderr)
    );
}

fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().is_some_and(|n| n != "run.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> Criterion {
    let mut c = Criterion::default();
    let tmp = tempfile::tempdir().unwrap();
    let data = sample_dir();
    let data = data.to_str().unwrap();
    let runs: Vec<BTreeMap<String, Vec<u8>>> = [("a", "1"), ("b", "1"), ("c", "4"), ("d", "8")]
        .iter()
        .map(|(name, threads)| {
            let out = tmp.path().join(name);
            run_cli(&out, &["--threads", threads, "report", "--all", "--data-dir", data]);
            read_outputs(&out)
        })
        .collect();
    c.record("report produced files", runs[0].len() > 10, format!("{} files besides run.json", runs[0].len()));
    c.record("identical across two runs", runs[0] == runs[1], "1 thread, twice");
    c.record("identical across thread counts", runs[0] == runs[2] && runs[0] == runs[3], "1, 4 and 8 threads");

    let milestones = sample_dir().join("milestones.csv");
    let training = sample_dir().join("training.csv");
    let cross = sample_dir().join("cross_section.csv");
    let shares = sample_dir().join("shares.csv");
    let (m, t, x, s) = (
        milestones.to_str().unwrap(),
        training.to_str().unwrap(),
        cross.to_str().unwrap(),
        shares.to_str().unwrap(),
    );
    let pieces = tmp.path().join("pieces");
    for args in [
        vec!["decay", "--input", m],
        vec!["chow", "--input", m],
        vec!["premium", "--input", m],
        vec!["hhi", "--input", s],
        vec!["dea", "--input", x],
        vec!["malmquist", "--input", m],
        vec!["regress", "--prices", m, "--training", t],
        vec!["robustness", "--input", m, "--training", t, "--cross-section", x],
    ] {
        run_cli(&pieces, &args);
    }
    let pieces = read_outputs(&pieces);
    let mismatched: Vec<&String> = pieces
        .iter()
        .filter(|(name, bytes)| runs[0].get(*name) != Some(bytes))
        .map(|(name, _)| name)
        .collect();
    c.record(
        "subcommand outputs match the report",
        mismatched.is_empty() && !pieces.is_empty(),
        if mismatched.is_empty() {
            format!("{} files", pieces.len())
        } else {
            format!("differing: {mismatched:?}")
        },
    );
    c
}

fn main() {
    let rep = replication();
    let rep = rep.as_ref();
    type Run<'a> = Box<dyn Fn() -> Criterion + 'a>;
    let criteria: Vec<(&str, Run)> = vec![
        ("decay fits", Box::new(move || decay(rep))),
        ("structural breaks", Box::new(move || breaks(rep))),
        ("reasoning premium", Box::new(premium)),
        ("DEA oracle equivalence", Box::new(move || frontier(rep))),
        ("Malmquist decomposition", Box::new(move || malmquist_criterion(rep))),
        ("regression suite", Box::new(move || regression(rep))),
        ("robustness harness", Box::new(move || robustness(rep))),
        ("concentration", Box::new(concentration)),
        ("end-to-end determinism", Box::new(determinism)),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let criterion = run();
        let status = if criterion.failed() {
            failures += 1;
            "FAIL"
        } else {
            "PASS"
        };
        println!("criterion {} {name}: {status}", i + 1);
        for check in &criterion.checks {
            let tag = match check.outcome {
                Outcome::Pass => "ok",
                Outcome::Fail => "FAIL",
                Outcome::Skip => "skip",
            };
            println!("    [{tag}] {}: {}", check.label, check.detail);
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
