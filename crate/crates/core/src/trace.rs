//! Session traces and the Monte-Carlo benefit experiment.
//!
//! A trace is a CSV of viewing sessions. Real datasets of this shape are
//! proprietary, so a deterministic synthetic generator with Zipf content
//! popularity stands in; the schema is the contract, not the data. Cohort
//! extraction groups sessions per content, and the Monte-Carlo harness
//! resamples which users are premium at a grid of fractions, scoring each
//! draw with the equilibrium CP benefit summed over contents (in units of
//! `f * p_n`) and reporting normal-approximation 95% confidence intervals.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use chrono::NaiveDateTime;
use num::{One, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::benefits;
use crate::model::{Cohort, MoneyRate, PriceSchedule};
use crate::numeric::{self, int, uint, Rat};

/// Canonical timestamp format, UTC implied.
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

/// Required first line of every trace file.
pub const TRACE_HEADER: &str = "timestamp,user_id,content_id,bytes,option";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceOption {
    Premium,
    Standard,
    Unassigned,
}

impl std::fmt::Display for ServiceOption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ServiceOption::Premium => "premium",
            ServiceOption::Standard => "standard",
            ServiceOption::Unassigned => "unassigned",
        })
    }
}

/// One viewing session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionRecord {
    pub timestamp: NaiveDateTime,
    pub user_id: String,
    pub content_id: String,
    pub bytes: u64,
    pub option: ServiceOption,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("trace line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: &'static str,
        message: String,
    },
    #[error("user pool is empty")]
    EmptyPool,
    #[error("curve prices require n > 1 and r > 1")]
    InvalidPrices,
    #[error("at least one replicate is required")]
    NoReplicates,
    #[error("premium fractions must lie in [0, 1]")]
    BadFraction,
    #[error("trace read failed: {0}")]
    Io(String),
}

fn field_error(line: usize, column: &'static str, message: impl Into<String>) -> TraceError {
    TraceError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Strict parse of the canonical trace CSV; `write_trace` of the result is
/// byte-identical to canonical input.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Vec<SessionRecord>, TraceError> {
    let mut records = Vec::new();
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, Ok(header))) if header == TRACE_HEADER => {}
        Some((_, Ok(other))) => {
            return Err(field_error(
                1,
                "header",
                format!("expected {TRACE_HEADER:?}, got {other:?}"),
            ));
        }
        Some((_, Err(e))) => return Err(TraceError::Io(e.to_string())),
        None => return Err(field_error(1, "header", "empty input")),
    }
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| TraceError::Io(e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(field_error(
                lineno,
                "row",
                format!("expected 5 fields, got {}", fields.len()),
            ));
        }
        let timestamp = NaiveDateTime::parse_from_str(fields[0], TIMESTAMP_FORMAT)
            .map_err(|e| field_error(lineno, "timestamp", e.to_string()))?;
        if fields[1].is_empty() {
            return Err(field_error(lineno, "user_id", "empty"));
        }
        if fields[2].is_empty() {
            return Err(field_error(lineno, "content_id", "empty"));
        }
        let bytes: u64 = fields[3]
            .parse()
            .map_err(|_| field_error(lineno, "bytes", "not a positive integer"))?;
        if bytes == 0 {
            return Err(field_error(lineno, "bytes", "must be at least 1"));
        }
        let option = match fields[4] {
            "premium" => ServiceOption::Premium,
            "standard" => ServiceOption::Standard,
            "unassigned" => ServiceOption::Unassigned,
            other => {
                return Err(field_error(
                    lineno,
                    "option",
                    format!("unknown option {other:?}"),
                ));
            }
        };
        records.push(SessionRecord {
            timestamp,
            user_id: fields[1].to_string(),
            content_id: fields[2].to_string(),
            bytes,
            option,
        });
    }
    Ok(records)
}

/// Writes records in the canonical form `parse_trace` accepts.
pub fn write_trace<W: Write>(writer: &mut W, records: &[SessionRecord]) -> io::Result<()> {
    writeln!(writer, "{}", TRACE_HEADER)?;
    for r in records {
        writeln!(
            writer,
            "{},{},{},{},{}",
            r.timestamp.format(TIMESTAMP_FORMAT),
            r.user_id,
            r.content_id,
            r.bytes,
            r.option
        )?;
    }
    Ok(())
}

/// Synthetic workload parameters.
///
/// `sessions` controls how many rows come out; popularity across contents is
/// Zipf with the given exponent (0 = uniform); each user is premium with
/// probability `premium_prob`, drawn once per user, not per session.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceGenParams {
    pub seed: u64,
    pub users: u64,
    pub contents: u64,
    pub sessions: u64,
    pub zipf_exponent: f64,
    pub premium_prob: f64,
    pub size_bytes: u64,
}

fn id_width(count: u64) -> usize {
    count.max(1).to_string().len()
}

/// Deterministic synthetic trace for the given parameters.
pub fn generate_trace(params: &TraceGenParams) -> Vec<SessionRecord> {
    assert!(params.users >= 1, "need at least one user");
    assert!(params.contents >= 1, "need at least one content");
    assert!(
        (0.0..=1.0).contains(&params.premium_prob),
        "premium_prob must lie in [0, 1]"
    );
    assert!(params.size_bytes >= 1, "size_bytes must be positive");

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let premium: Vec<bool> = (0..params.users)
        .map(|_| rng.gen::<f64>() < params.premium_prob)
        .collect();

    // Zipf sampling by inverse CDF over cumulative rank weights.
    let mut cumulative = Vec::with_capacity(params.contents as usize);
    let mut total = 0.0f64;
    for rank in 1..=params.contents {
        total += (rank as f64).powf(-params.zipf_exponent);
        cumulative.push(total);
    }

    let user_width = id_width(params.users);
    let content_width = id_width(params.contents);
    let base = NaiveDateTime::parse_from_str("2020-01-01T00:00:00Z", TIMESTAMP_FORMAT)
        .expect("fixed timestamp parses");

    let mut records = Vec::with_capacity(params.sessions as usize);
    for session in 0..params.sessions {
        let user = rng.gen_range(0..params.users);
        let draw = rng.gen::<f64>() * total;
        let content = cumulative.partition_point(|&c| c <= draw).min(params.contents as usize - 1);
        records.push(SessionRecord {
            timestamp: base + chrono::Duration::seconds(session as i64),
            user_id: format!("u{:0user_width$}", user, user_width = user_width),
            content_id: format!("c{:0content_width$}", content, content_width = content_width),
            bytes: params.size_bytes,
            option: if premium[user as usize] {
                ServiceOption::Premium
            } else {
                ServiceOption::Standard
            },
        });
    }
    records
}

/// One content's audience as seen in a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentCohort {
    pub content_id: String,
    pub viewers: BTreeSet<String>,
    /// Viewers with at least one premium session for this content.
    pub premium_viewers: BTreeSet<String>,
    /// Largest session size seen for the content.
    pub file_size: u64,
}

impl ContentCohort {
    /// Total distinct viewers `x`.
    pub fn users(&self) -> u64 {
        self.viewers.len() as u64
    }

    /// Distinct premium viewers `y`.
    pub fn premium(&self) -> u64 {
        self.premium_viewers.len() as u64
    }
}

/// Groups sessions per content; users are counted once per content and are
/// premium there if any of their sessions for it is.
pub fn extract_cohorts(records: &[SessionRecord]) -> Vec<ContentCohort> {
    let mut by_content: BTreeMap<&str, ContentCohort> = BTreeMap::new();
    for record in records {
        let cohort = by_content
            .entry(record.content_id.as_str())
            .or_insert_with(|| ContentCohort {
                content_id: record.content_id.clone(),
                viewers: BTreeSet::new(),
                premium_viewers: BTreeSet::new(),
                file_size: 0,
            });
        cohort.viewers.insert(record.user_id.clone());
        if record.option == ServiceOption::Premium {
            cohort.premium_viewers.insert(record.user_id.clone());
        }
        cohort.file_size = cohort.file_size.max(record.bytes);
    }
    by_content.into_values().collect()
}

/// One grid point of the Monte-Carlo curve. Benefits are in units of
/// `f * p_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub premium_fraction: Rat,
    pub mean_benefit: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: u64,
}

/// Equilibrium CP benefit for one content audience in `f * p_n` units,
/// extended to the single-standard-viewer worst case where the settlement
/// is undefined and the CP simply earns `p_std - p_n`.
fn unit_benefit(n: &Rat, r: &Rat, users: u64, premium: u64) -> Rat {
    if users == 1 && premium == 0 {
        return n - int(1);
    }
    let p_n = MoneyRate::from_int(1);
    let schedule = PriceSchedule::new(
        p_n,
        MoneyRate::new(r * n).expect("positive"),
        MoneyRate::new(n.clone()).expect("positive"),
        MoneyRate::zero(),
        MoneyRate::zero(),
    );
    let cohort = Cohort::new(users, premium, 1).expect("valid audience");
    benefits::ben_cp_eq(&schedule, &cohort)
        .expect("x >= 2 or all-premium")
        .into_rat()
}

/// Premium sample for one replicate: indices into the sorted pool, drawn
/// without replacement on an independent per-replicate stream.
fn sample_premium(pool_len: usize, take: usize, seed: u64, stream: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rand::seq::index::sample(&mut rng, pool_len, take).into_vec()
}

/// Monte-Carlo benefit curve over a grid of premium fractions.
///
/// For each fraction `q` and replicate, `floor(q * |pool|)` users drawn
/// without replacement become premium, every content cohort is re-scored
/// with its new premium count, and the totals aggregate into a mean and a
/// normal-approximation 95% confidence interval. Fully deterministic per
/// seed; replicate streams are independent.
pub fn mc_benefit_curve(
    pool: &BTreeSet<String>,
    cohorts: &[ContentCohort],
    n: &Rat,
    r: &Rat,
    grid: &[Rat],
    replicates: u64,
    seed: u64,
) -> Result<Vec<CurvePoint>, TraceError> {
    if pool.is_empty() {
        return Err(TraceError::EmptyPool);
    }
    if n <= &Rat::one() || r <= &Rat::one() {
        return Err(TraceError::InvalidPrices);
    }
    if replicates == 0 {
        return Err(TraceError::NoReplicates);
    }
    if grid
        .iter()
        .any(|q| q < &Rat::zero() || q > &Rat::one())
    {
        return Err(TraceError::BadFraction);
    }

    let pool_vec: Vec<&String> = pool.iter().collect();
    let index_of: BTreeMap<&str, usize> = pool_vec
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    // Viewer indices per cohort, restricted to the pool.
    let cohort_viewers: Vec<Vec<usize>> = cohorts
        .iter()
        .map(|c| {
            c.viewers
                .iter()
                .filter_map(|v| index_of.get(v.as_str()).copied())
                .collect()
        })
        .collect();

    let mut points = Vec::with_capacity(grid.len());
    for (grid_index, fraction) in grid.iter().enumerate() {
        let take = (fraction * uint(pool_vec.len() as u64))
            .floor()
            .to_integer()
            .to_usize()
            .expect("pool fits in memory");
        let mut totals = Vec::with_capacity(replicates as usize);
        for replicate in 0..replicates {
            let stream = ((grid_index as u64) << 32) | replicate;
            let premium_indices = sample_premium(pool_vec.len(), take, seed, stream);
            let mut is_premium = vec![false; pool_vec.len()];
            for index in premium_indices {
                is_premium[index] = true;
            }
            let mut total = Rat::zero();
            for (cohort, viewers) in cohorts.iter().zip(&cohort_viewers) {
                let users = cohort.users();
                if users == 0 {
                    continue;
                }
                let premium = viewers.iter().filter(|&&i| is_premium[i]).count() as u64;
                total += unit_benefit(n, r, users, premium);
            }
            totals.push(numeric::to_f64(&total));
        }
        let count = totals.len() as f64;
        let mean = totals.iter().sum::<f64>() / count;
        let variance = if totals.len() > 1 {
            totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (count - 1.0)
        } else {
            0.0
        };
        let stderr = (variance / count).sqrt();
        let margin = 1.96 * stderr;
        points.push(CurvePoint {
            premium_fraction: fraction.clone(),
            mean_benefit: mean,
            ci_low: mean - margin,
            ci_high: mean + margin,
            replicates,
        });
    }
    Ok(points)
}

/// Writes the curve as `premium_fraction,mean,ci_low,ci_high,replicates`.
pub fn write_curve_csv<W: Write>(writer: &mut W, points: &[CurvePoint]) -> io::Result<()> {
    writeln!(writer, "premium_fraction,mean,ci_low,ci_high,replicates")?;
    for p in points {
        writeln!(
            writer,
            "{},{},{},{},{}",
            numeric::format_number(&p.premium_fraction),
            p.mean_benefit,
            p.ci_low,
            p.ci_high,
            p.replicates
        )?;
    }
    Ok(())
}
