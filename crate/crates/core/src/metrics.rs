//! Run metrics: total bandwidth, completion times and processing overhead.

use std::collections::HashMap;
use std::io::Write;

use crate::scheduler::{RequestId, Slot, SlotReport, TransferRequest};

pub const CSV_HEADER: [&str; 13] = [
    "scheme",
    "topology",
    "seed",
    "copies",
    "lambda",
    "k_paths",
    "total_bandwidth",
    "mean_tct",
    "tail_tct_p99",
    "max_tct",
    "num_requests",
    "mean_alloc_ms",
    "mean_slot_ms",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("{missing} of {total} requests never completed")]
    Incomplete { missing: usize, total: usize },
    #[error("request {0} completed twice")]
    DuplicateCompletion(RequestId),
    #[error("no requests to report on")]
    Empty,
    #[error("percentile must lie in (0, 100], got {0}")]
    BadPercentile(f64),
}

/// Slot-by-slot accumulator of bandwidth and completion events.
#[derive(Debug, Clone)]
pub struct Recorder {
    slot_width: f64,
    bandwidth: f64,
    completions: HashMap<RequestId, Slot>,
    duplicate: Option<RequestId>,
}

impl Recorder {
    pub fn new(slot_width: f64) -> Self {
        Self { slot_width, bandwidth: 0.0, completions: HashMap::new(), duplicate: None }
    }

    /// Adds `rate × W × arcs` for every dispatch and notes completions.
    pub fn record(&mut self, report: &SlotReport) {
        for d in &report.dispatches {
            self.bandwidth += d.rate * self.slot_width * d.arcs.len() as f64;
        }
        for &id in &report.completed {
            if self.completions.insert(id, report.slot).is_some() {
                self.duplicate.get_or_insert(id);
            }
        }
    }

    pub fn total_bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn completion(&self, id: RequestId) -> Option<Slot> {
        self.completions.get(&id).copied()
    }

    pub fn completed(&self) -> usize {
        self.completions.len()
    }
}

/// Nearest-rank percentile: the smallest value with at least `p`% of the
/// sample at or below it.
pub fn nearest_rank(values: &[f64], p: f64) -> Result<f64, MetricsError> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(MetricsError::BadPercentile(p));
    }
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Divides every entry by the smallest one.
///
/// Entries are returned unchanged when the minimum is not positive.
pub fn normalize_by_min(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min.is_finite() && min > 0.0) {
        return values.to_vec();
    }
    values.iter().map(|v| v / min).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scheme: String,
    pub total_bandwidth: f64,
    pub mean_tct: f64,
    /// Tail at the configured percentile (99 by default).
    pub tail_tct: f64,
    pub max_tct: f64,
    pub num_requests: usize,
    pub mean_alloc_ms: f64,
    pub mean_slot_ms: f64,
}

/// Wall-clock totals collected by the driver.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timing {
    pub alloc_ms: f64,
    pub slot_ms: f64,
    pub slots: u64,
}

/// Per-request completion times, `completion − arrival`.
pub fn completion_times(requests: &[TransferRequest], recorder: &Recorder) -> Result<Vec<f64>, MetricsError> {
    if let Some(id) = recorder.duplicate {
        return Err(MetricsError::DuplicateCompletion(id));
    }
    let mut missing = 0;
    let mut tcts = Vec::with_capacity(requests.len());
    for r in requests {
        match recorder.completion(r.id) {
            Some(done) => tcts.push(done.saturating_sub(r.arrival_slot) as f64),
            None => missing += 1,
        }
    }
    if missing > 0 {
        return Err(MetricsError::Incomplete { missing, total: requests.len() });
    }
    Ok(tcts)
}

pub fn report(
    scheme: &str,
    requests: &[TransferRequest],
    recorder: &Recorder,
    timing: Timing,
    tail_percentile: f64,
) -> Result<RunReport, MetricsError> {
    let tcts = completion_times(requests, recorder)?;
    if tcts.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = tcts.len();
    Ok(RunReport {
        scheme: scheme.to_string(),
        total_bandwidth: recorder.total_bandwidth(),
        mean_tct: tcts.iter().sum::<f64>() / n as f64,
        tail_tct: nearest_rank(&tcts, tail_percentile)?,
        max_tct: tcts.iter().copied().fold(0.0, f64::max),
        num_requests: n,
        mean_alloc_ms: timing.alloc_ms / n as f64,
        mean_slot_ms: if timing.slots == 0 { 0.0 } else { timing.slot_ms / timing.slots as f64 },
    })
}

/// One output row: a report plus the cell it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub topology: String,
    pub seed: u64,
    pub copies: usize,
    pub lambda: f64,
    pub k_paths: usize,
    pub report: RunReport,
}

impl CsvRow {
    fn fields(&self) -> [String; 13] {
        let r = &self.report;
        [
            r.scheme.clone(),
            self.topology.clone(),
            self.seed.to_string(),
            self.copies.to_string(),
            self.lambda.to_string(),
            self.k_paths.to_string(),
            r.total_bandwidth.to_string(),
            r.mean_tct.to_string(),
            r.tail_tct.to_string(),
            r.max_tct.to_string(),
            r.num_requests.to_string(),
            format!("{:.6}", r.mean_alloc_ms),
            format!("{:.6}", r.mean_slot_ms),
        ]
    }
}

pub fn write_csv(rows: &[CsvRow], out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}
