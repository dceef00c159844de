use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::IngestError;
use crate::model::{validate_dataset, PriceRecord, Region};

pub const SNAPSHOT_SCHEMA_VERSION: u64 = 1;

/// A catalog row that was not turned into a [`PriceRecord`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedModel {
    pub model_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogSnapshot {
    pub schema_version: u64,
    pub fetched_at: DateTime<Utc>,
    pub source: String,
    /// Prices in USD per million tokens, sorted by model id.
    pub records: Vec<PriceRecord>,
    #[serde(default)]
    pub skipped: Vec<SkippedModel>,
}

impl CatalogSnapshot {
    /// Sorts records by model id and moves invalid or repeated rows to
    /// `skipped`. Applying it to its own output changes nothing.
    pub fn normalize(mut self) -> Self {
        self.records.sort_by(|a, b| a.model_id.cmp(&b.model_id));
        let mut kept: Vec<PriceRecord> = Vec::with_capacity(self.records.len());
        for r in std::mem::take(&mut self.records) {
            let reason = if kept.last().is_some_and(|k| k.model_id == r.model_id) {
                Some("duplicate id".to_string())
            } else {
                validate_dataset(std::slice::from_ref(&r)).first().map(|v| v.rule.to_string())
            };
            match reason {
                Some(reason) => self.skipped.push(SkippedModel {
                    model_id: r.model_id,
                    reason,
                }),
                None => kept.push(r),
            }
        }
        self.records = kept;
        self
    }
}

pub fn persist_snapshot(snapshot: &CatalogSnapshot, path: &Path) -> Result<(), IngestError> {
    let json = serde_json::to_string_pretty(snapshot)?;
    fs::write(path, json + "\n").map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_snapshot(path: &Path) -> Result<CatalogSnapshot, IngestError> {
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: Value = serde_json::from_slice(&bytes)?;
    let found = value.get("schema_version").and_then(Value::as_u64);
    if found != Some(SNAPSHOT_SCHEMA_VERSION) {
        return Err(IngestError::SnapshotVersion { found });
    }
    Ok(serde_json::from_value(value)?)
}

/// Converts a per-token decimal price to USD per million tokens by shifting
/// the decimal exponent, so `"0.00000015"` becomes exactly `0.15`.
pub fn per_million(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], &text[i + 1..]),
        None => (text, "0"),
    };
    let digits = mantissa.strip_prefix(['-', '+']).unwrap_or(mantissa);
    let well_formed = !digits.is_empty()
        && digits.chars().any(|c| c.is_ascii_digit())
        && digits.chars().all(|c| c.is_ascii_digit() || c == '.')
        && digits.matches('.').count() <= 1;
    if !well_formed {
        return Err(format!("{text:?} is not a decimal number"));
    }
    let exponent: i32 = exponent
        .parse()
        .map_err(|_| format!("{text:?} has a malformed exponent"))?;
    format!("{mantissa}e{}", exponent.saturating_add(6))
        .parse::<f64>()
        .map_err(|e| format!("{text:?}: {e}"))
}

fn region_of(vendor: &str) -> Region {
    const CN: &[&str] = &[
        "01-ai", "alibaba", "baidu", "bytedance", "deepseek", "minimax", "moonshotai", "qwen",
        "stepfun", "stepfun-ai", "tencent", "thudm", "z-ai", "zhipu",
    ];
    const US_EU: &[&str] = &[
        "ai21", "aleph-alpha", "amazon", "anthropic", "cohere", "google", "inflection", "meta-llama",
        "microsoft", "mistralai", "nvidia", "openai", "perplexity", "x-ai",
    ];
    if CN.contains(&vendor) {
        Region::Cn
    } else if US_EU.contains(&vendor) {
        Region::UsEu
    } else {
        Region::Other
    }
}

fn price_field(entry: &Value, i: usize, key: &str) -> Result<f64, IngestError> {
    let field = format!("data[{i}].pricing.{key}");
    let parse = |message: String| IngestError::Parse {
        field: field.clone(),
        message,
    };
    match entry.get("pricing").and_then(|p| p.get(key)) {
        Some(Value::String(s)) => per_million(s).map_err(parse),
        Some(Value::Number(n)) => per_million(&n.to_string()).map_err(parse),
        Some(other) => Err(parse(format!("expected a decimal string or number, got {other}"))),
        None => Err(parse("missing".into())),
    }
}

/// Builds a normalized snapshot from an OpenRouter-style `/models` payload.
/// Free, variable-priced (negative) and duplicate rows are listed in
/// `skipped` rather than kept.
pub fn normalize_payload(payload: &[u8], source: &str, fetched_at: DateTime<Utc>) -> Result<CatalogSnapshot, IngestError> {
    let root: Value = serde_json::from_slice(payload)?;
    let data = root
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::Parse {
            field: "data".into(),
            message: "expected an array of models".into(),
        })?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (i, entry) in data.iter().enumerate() {
        let id = entry.get("id").and_then(Value::as_str).ok_or_else(|| IngestError::Parse {
            field: format!("data[{i}].id"),
            message: "expected a string".into(),
        })?;
        let Some((vendor, _)) = id.split_once('/').filter(|(v, _)| !v.is_empty()) else {
            return Err(IngestError::Parse {
                field: format!("data[{i}].id"),
                message: format!("{id:?} has no vendor prefix"),
            });
        };
        let input = price_field(entry, i, "prompt")?;
        let output = price_field(entry, i, "completion")?;
        if !(input > 0.0 && output > 0.0) {
            skipped.push(SkippedModel {
                model_id: id.to_string(),
                reason: format!("non-positive price ({input}, {output})"),
            });
            continue;
        }
        let reasoning = entry
            .get("supported_parameters")
            .and_then(Value::as_array)
            .is_some_and(|ps| ps.iter().any(|p| p.as_str() == Some("reasoning")));
        let open_weight = entry
            .get("hugging_face_id")
            .and_then(Value::as_str)
            .is_some_and(|h| !h.is_empty());
        records.push(PriceRecord {
            model_id: id.to_string(),
            vendor: vendor.to_string(),
            observed_date: fetched_at.date_naive(),
            input_price: input,
            output_price: output,
            context_window: entry.get("context_length").and_then(Value::as_u64),
            quality_score: None,
            reasoning,
            open_weight,
            region: region_of(vendor),
            tier_hint: None,
        });
    }
    Ok(CatalogSnapshot {
        schema_version: SNAPSHOT_SCHEMA_VERSION,
        fetched_at,
        source: source.to_string(),
        records,
        skipped,
    }
    .normalize())
}

#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles after each retry.
    pub base_delay: Duration,
    pub timeout: Duration,
    /// Read the payload from this file instead of the network.
    pub fixture: Option<PathBuf>,
}

impl Default for FetchOptions {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            base_delay: Duration::from_millis(500),
            timeout: Duration::from_secs(30),
            fixture: None,
        }
    }
}

enum Attempt {
    Done(Vec<u8>),
    Retry(String),
}

fn attempt(client: &reqwest::blocking::Client, url: &str, credential: Option<&str>) -> Result<Attempt, IngestError> {
    let mut request = client.get(url).header("Accept", "application/json");
    if let Some(token) = credential {
        request = request.bearer_auth(token);
    }
    let response = match request.send() {
        Ok(r) => r,
        Err(e) => return Ok(Attempt::Retry(e.to_string())),
    };
    let status = response.status().as_u16();
    match status {
        200..=299 => match response.bytes() {
            Ok(body) => Ok(Attempt::Done(body.to_vec())),
            Err(e) => Ok(Attempt::Retry(e.to_string())),
        },
        401 | 403 => Err(IngestError::Credential(status)),
        429 | 500..=599 => Ok(Attempt::Retry(format!("HTTP {status}"))),
        _ => Err(IngestError::Status(status)),
    }
}

/// Fetches `GET {endpoint}/models` and normalizes it into a snapshot.
/// Transport failures, 429 and 5xx responses are retried with exponential
/// backoff up to `max_attempts`; 401/403 fail immediately.
pub fn fetch_catalog(endpoint: &str, credential: Option<&str>, options: &FetchOptions) -> Result<CatalogSnapshot, IngestError> {
    if let Some(path) = &options.fixture {
        let payload = fs::read(path).map_err(|source| IngestError::Io {
            path: path.clone(),
            source,
        })?;
        return normalize_payload(&payload, &format!("file://{}", path.display()), Utc::now());
    }
    let url = format!("{}/models", endpoint.trim_end_matches('/'));
    let client = reqwest::blocking::Client::builder()
        .timeout(options.timeout)
        .build()
        .map_err(|e| IngestError::Network {
            attempts: 0,
            message: e.to_string(),
        })?;
    let attempts = options.max_attempts.max(1);
    let mut delay = options.base_delay;
    let mut last = String::new();
    for n in 1..=attempts {
        match attempt(&client, &url, credential)? {
            Attempt::Done(body) => return normalize_payload(&body, endpoint, Utc::now()),
            Attempt::Retry(message) => last = message,
        }
        if n < attempts {
            thread::sleep(delay);
            delay = delay.saturating_mul(2);
        }
    }
    Err(IngestError::Network {
        attempts,
        message: last,
    })
}
