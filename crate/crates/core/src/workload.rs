//! Synthetic request streams: Poisson arrivals per slot, shifted-exponential
//! volumes, uniform sources and destination sets.
//!
//! Counts, volumes, sources and destinations come from separate ChaCha
//! streams of the same seed, so changing the copy count keeps arrivals,
//! volumes and sources identical.

use std::io::{Read, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::scheduler::{RequestId, SchedulerError, Slot, TransferRequest};
use crate::topology::Topology;

pub const CSV_HEADER: [&str; 5] = ["id", "arrival_slot", "volume", "source", "destinations"];

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("arrival rate must be positive, got {0}")]
    BadRate(f64),
    #[error("demand constant must be nonnegative, got {0}")]
    BadConstant(f64),
    #[error("demand mean must be positive, got {0}")]
    BadMean(f64),
    #[error("copies must be between 1 and {max}, got {copies}")]
    BadCopies { copies: usize, max: usize },
    #[error("workload csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("workload csv line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("workload csv: {0}")]
    Request(#[from] SchedulerError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    /// Mean requests per slot.
    pub lambda: f64,
    pub demand_constant: f64,
    pub demand_mean: f64,
    /// Destinations per request.
    pub copies: usize,
    pub last_arrival: Slot,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self { lambda: 1.0, demand_constant: 10.0, demand_mean: 20.0, copies: 1, last_arrival: 500, seed: 1 }
    }
}

impl WorkloadSpec {
    pub fn validate(&self, node_count: usize) -> Result<(), WorkloadError> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(WorkloadError::BadRate(self.lambda));
        }
        if !(self.demand_constant.is_finite() && self.demand_constant >= 0.0) {
            return Err(WorkloadError::BadConstant(self.demand_constant));
        }
        if !(self.demand_mean.is_finite() && self.demand_mean > 0.0) {
            return Err(WorkloadError::BadMean(self.demand_mean));
        }
        let max = node_count.saturating_sub(1);
        if self.copies == 0 || self.copies > max {
            return Err(WorkloadError::BadCopies { copies: self.copies, max });
        }
        Ok(())
    }
}

const COUNT_STREAM: u64 = 0;
const VOLUME_STREAM: u64 = 1;
const SOURCE_STREAM: u64 = 2;
const DESTINATION_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Requests ordered by arrival slot, ids `0..` in that order.
pub fn generate(spec: &WorkloadSpec, topology: &Topology) -> Result<Vec<TransferRequest>, WorkloadError> {
    let n = topology.node_count();
    spec.validate(n)?;
    let arrivals = Poisson::new(spec.lambda).map_err(|_| WorkloadError::BadRate(spec.lambda))?;
    let demand = Exp::new(1.0 / spec.demand_mean).map_err(|_| WorkloadError::BadMean(spec.demand_mean))?;
    let mut counts = stream(spec.seed, COUNT_STREAM);
    let mut volumes = stream(spec.seed, VOLUME_STREAM);
    let mut sources = stream(spec.seed, SOURCE_STREAM);
    let mut destinations = stream(spec.seed, DESTINATION_STREAM);

    let mut out = Vec::new();
    for slot in 1..=spec.last_arrival {
        let count = arrivals.sample(&mut counts) as u64;
        for _ in 0..count {
            let id = RequestId(out.len() as u64);
            let volume = spec.demand_constant + demand.sample(&mut volumes);
            let source = sources.random_range(0..n);
            let dests: Vec<usize> = index::sample(&mut destinations, n - 1, spec.copies)
                .into_iter()
                .map(|i| if i >= source { i + 1 } else { i })
                .collect();
            out.push(TransferRequest::new(id, volume, source, dests, slot)?);
        }
    }
    Ok(out)
}

/// Writes `id,arrival_slot,volume,source,destinations` rows; volumes are
/// printed with round-trip precision so a reload replays identical traffic.
pub fn write_csv(requests: &[TransferRequest], out: impl Write) -> Result<(), WorkloadError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in requests {
        let dests = r.destinations.iter().map(ToString::to_string).collect::<Vec<_>>().join(";");
        w.write_record([
            r.id.0.to_string(),
            r.arrival_slot.to_string(),
            r.volume.to_string(),
            r.source.to_string(),
            dests,
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv(input: impl Read) -> Result<Vec<TransferRequest>, WorkloadError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(WorkloadError::Row { line: 1, message: format!("expected header {}", CSV_HEADER.join(",")) });
    }
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let bad = |message: String| WorkloadError::Row { line, message };
        let id: u64 = field(0).parse().map_err(|e| bad(format!("id: {e}")))?;
        let arrival: Slot = field(1).parse().map_err(|e| bad(format!("arrival_slot: {e}")))?;
        let volume: f64 = field(2).parse().map_err(|e| bad(format!("volume: {e}")))?;
        let source: usize = field(3).parse().map_err(|e| bad(format!("source: {e}")))?;
        let dests = field(4)
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<usize>().map_err(|e| bad(format!("destinations: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(TransferRequest::new(RequestId(id), volume, source, dests, arrival)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::build_gscale;

    #[test]
    fn volumes_have_the_shifted_exponential_mean() {
        let t = build_gscale();
        let spec = WorkloadSpec { copies: 6, last_arrival: 2000, seed: 11, ..WorkloadSpec::default() };
        let reqs = generate(&spec, &t).unwrap();
        assert!(reqs.len() >= 500);
        assert!(reqs.iter().all(|r| r.volume >= 10.0));
        let mean = reqs.iter().map(|r| r.volume).sum::<f64>() / reqs.len() as f64;
        assert!((28.0..=32.0).contains(&mean), "mean volume {mean}");
    }

    #[test]
    fn request_count_is_poisson() {
        // Poisson(500) has σ ≈ 22.4; ±3.5σ is [421.7, 578.3].
        let t = build_gscale();
        for seed in 0..10 {
            let spec = WorkloadSpec { seed, ..WorkloadSpec::default() };
            let n = generate(&spec, &t).unwrap().len();
            assert!((420..=580).contains(&n), "seed {seed}: {n} requests");
        }
    }

    #[test]
    fn destination_sets_are_valid() {
        let t = build_gscale();
        for copies in [1, 3, 11] {
            let spec = WorkloadSpec { copies, last_arrival: 100, ..WorkloadSpec::default() };
            for r in generate(&spec, &t).unwrap() {
                assert_eq!(r.destinations.len(), copies);
                assert!(!r.destinations.contains(&r.source));
                assert!(r.destinations.iter().all(|&d| d < 12));
            }
        }
    }

    #[test]
    fn copies_do_not_perturb_volumes_or_sources() {
        let t = build_gscale();
        let base = WorkloadSpec { last_arrival: 200, seed: 5, ..WorkloadSpec::default() };
        let a = generate(&WorkloadSpec { copies: 1, ..base.clone() }, &t).unwrap();
        let b = generate(&WorkloadSpec { copies: 6, ..base.clone() }, &t).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.volume, x.source, x.arrival_slot), (y.volume, y.source, y.arrival_slot));
        }
        let c = generate(&WorkloadSpec { seed: 6, ..base }, &t).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let t = build_gscale();
        let bad = |s: WorkloadSpec| generate(&s, &t).is_err();
        assert!(bad(WorkloadSpec { copies: 0, ..WorkloadSpec::default() }));
        assert!(bad(WorkloadSpec { copies: 12, ..WorkloadSpec::default() }));
        assert!(bad(WorkloadSpec { lambda: 0.0, ..WorkloadSpec::default() }));
        assert!(bad(WorkloadSpec { demand_mean: 0.0, ..WorkloadSpec::default() }));
        assert!(bad(WorkloadSpec { demand_constant: -1.0, ..WorkloadSpec::default() }));
    }

    #[test]
    fn csv_replays_identical_traffic() {
        let t = build_gscale();
        let reqs = generate(&WorkloadSpec { copies: 4, last_arrival: 50, ..WorkloadSpec::default() }, &t).unwrap();
        let mut buf = Vec::new();
        write_csv(&reqs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,arrival_slot,volume,source,destinations\n"));
        assert_eq!(read_csv(&buf[..]).unwrap(), reqs);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let text = "id,arrival_slot,volume,source,destinations\n0,1,5.0,0,1;2\n1,2,abc,0,1\n";
        match read_csv(text.as_bytes()) {
            Err(WorkloadError::Row { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("volume"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_csv("a,b\n".as_bytes()).is_err());
    }
}
