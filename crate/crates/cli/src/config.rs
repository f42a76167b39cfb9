//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use dccast::scheduler::Slot;
use dccast::topology::{build_gscale, build_random, Topology, TopologyError};
use dccast::workload::WorkloadSpec;
use dccast::{Scheme, SimConfig};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{key}: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: &str, message: impl Into<String>) -> Self {
        Self { key: key.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologySpec {
    Gscale,
    Random { nodes: usize, edges: usize },
    File(PathBuf),
}

impl TopologySpec {
    /// Random topologies are drawn from the run seed.
    pub fn build(&self, seed: u64, capacity: f64) -> Result<Topology, TopologyError> {
        let t = match self {
            TopologySpec::Gscale => build_gscale(),
            TopologySpec::Random { nodes, edges } => build_random(*nodes, *edges, seed)?,
            TopologySpec::File(path) => Topology::read(path)?,
        };
        t.with_capacity(capacity)
    }

    fn parse(value: &str) -> Result<Self, ConfigError> {
        let bad = |m: &str| ConfigError::new("topology", m);
        if value.eq_ignore_ascii_case("gscale") {
            return Ok(TopologySpec::Gscale);
        }
        if let Some(rest) = value.strip_prefix("random:") {
            let (n, m) = rest.split_once(',').ok_or_else(|| bad("expected random:<nodes>,<edges>"))?;
            let nodes = n.trim().parse().map_err(|_| bad("node count is not an integer"))?;
            let edges = m.trim().parse().map_err(|_| bad("edge count is not an integer"))?;
            return Ok(TopologySpec::Random { nodes, edges });
        }
        if let Some(path) = value.strip_prefix("file:") {
            if path.is_empty() {
                return Err(bad("empty file path"));
            }
            return Ok(TopologySpec::File(PathBuf::from(path)));
        }
        Err(bad("expected gscale, random:<nodes>,<edges> or file:<path>"))
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::Gscale => f.write_str("gscale"),
            TopologySpec::Random { nodes, edges } => write!(f, "random:{nodes},{edges}"),
            TopologySpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub topology: TopologySpec,
    pub schemes: Vec<Scheme>,
    pub lambda: f64,
    pub demand_constant: f64,
    pub demand_mean: f64,
    pub last_arrival: Slot,
    pub slot_width: f64,
    pub capacity: f64,
    pub k_paths: usize,
    pub batch_window: Slot,
    pub tail_percentile: f64,
    pub copies: Vec<usize>,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    /// Replays this request CSV instead of generating traffic.
    pub workload_file: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn workload(&self, copies: usize, seed: u64) -> WorkloadSpec {
        WorkloadSpec {
            lambda: self.lambda,
            demand_constant: self.demand_constant,
            demand_mean: self.demand_mean,
            copies,
            last_arrival: self.last_arrival,
            seed,
        }
    }

    pub fn sim(&self, seed: u64) -> SimConfig {
        SimConfig {
            slot_width: self.slot_width,
            k_paths: self.k_paths,
            batch_window: self.batch_window,
            tail_percentile: self.tail_percentile,
            seed,
            ..SimConfig::default()
        }
    }
}

pub const KEYS: [&str; 15] = [
    "topology",
    "scheme",
    "lambda",
    "demand_constant",
    "demand_mean",
    "last_arrival",
    "slot_width",
    "capacity",
    "k_paths",
    "batch_window",
    "tail",
    "copies",
    "seeds",
    "out",
    "workload_file",
];

/// Raw settings keyed by name; later insertions override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::new(line, format!("line {}: expected key = value", i + 1)));
            };
            let (k, v) = (normalize_key(k.trim()), v.trim());
            if !KEYS.contains(&k.as_str()) {
                return Err(ConfigError::new(&k, format!("line {}: unknown key", i + 1)));
            }
            map.insert(k, v.to_string());
        }
        Ok(Self(map))
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(normalize_key(key), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let topology = TopologySpec::parse(self.get("topology").unwrap_or("gscale"))?;
        let schemes = match self.get("scheme") {
            Some(v) => list(v, "scheme", |s| s.parse::<Scheme>().map_err(|e| e.to_string()))?,
            None => return Err(ConfigError::new("scheme", "missing")),
        };
        let seeds = match self.get("seeds") {
            Some(v) => ranges(v, "seeds")?,
            None if matches!(topology, TopologySpec::Random { .. }) => {
                return Err(ConfigError::new("seeds", "required for random topologies"))
            }
            None => vec![1],
        };
        let copies: Vec<usize> = match self.get("copies") {
            Some(v) => ranges(v, "copies")?.into_iter().map(|c| c as usize).collect(),
            None => (1..=6).collect(),
        };
        if copies.contains(&0) {
            return Err(ConfigError::new("copies", "must be at least 1"));
        }
        let cfg = ExperimentConfig {
            topology,
            schemes,
            lambda: self.number("lambda", 1.0)?,
            demand_constant: self.number("demand_constant", 10.0)?,
            demand_mean: self.number("demand_mean", 20.0)?,
            last_arrival: self.integer("last_arrival", 500)?,
            slot_width: self.number("slot_width", 1.0)?,
            capacity: self.number("capacity", 1.0)?,
            k_paths: self.integer("k_paths", 3)? as usize,
            batch_window: self.integer("batch_window", 5)?,
            tail_percentile: tail(self.get("tail").unwrap_or("p99"))?,
            copies,
            seeds,
            out: self.get("out").map(PathBuf::from),
            workload_file: self.get("workload_file").map(PathBuf::from),
        };
        check(&cfg)?;
        Ok(cfg)
    }

    fn number(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(ConfigError::new(key, format!("{v:?} is not a number"))),
            },
        }
    }

    fn integer(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::new(key, format!("{v:?} is not a nonnegative integer"))),
        }
    }
}

fn normalize_key(k: &str) -> String {
    let k = k.to_ascii_lowercase().replace('-', "_");
    match k.as_str() {
        "seed" => "seeds".to_string(),
        "k" => "k_paths".to_string(),
        "window" => "batch_window".to_string(),
        _ => k,
    }
}

fn list<T>(v: &str, key: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, ConfigError> {
    let items: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(s).map_err(|m| ConfigError::new(key, m)))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(ConfigError::new(key, "empty list"));
    }
    Ok(items)
}

/// `1,2,5` or `1..6` (inclusive) or a mix.
fn ranges(v: &str, key: &str) -> Result<Vec<u64>, ConfigError> {
    let parts = list(v, key, |s| {
        let bad = || format!("{s:?} is not an integer or an a..b range");
        match s.split_once("..") {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| bad())?;
                let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
                if a > b {
                    return Err(format!("empty range {s}"));
                }
                Ok((a..=b).collect::<Vec<_>>())
            }
            None => s.parse().map(|x| vec![x]).map_err(|_| bad()),
        }
    })?;
    let mut out: Vec<u64> = parts.into_iter().flatten().collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn tail(v: &str) -> Result<f64, ConfigError> {
    let digits = v.trim().trim_start_matches(['p', 'P']);
    match digits.parse::<f64>() {
        Ok(p) if p > 0.0 && p <= 100.0 => Ok(p),
        _ => Err(ConfigError::new("tail", format!("{v:?} is not a percentile such as p99"))),
    }
}

fn check(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let positive = |key: &str, x: f64| {
        if x > 0.0 {
            Ok(())
        } else {
            Err(ConfigError::new(key, format!("must be positive, got {x}")))
        }
    };
    positive("lambda", cfg.lambda)?;
    positive("demand_mean", cfg.demand_mean)?;
    positive("slot_width", cfg.slot_width)?;
    positive("capacity", cfg.capacity)?;
    if cfg.demand_constant < 0.0 {
        return Err(ConfigError::new("demand_constant", "must be nonnegative"));
    }
    if cfg.last_arrival == 0 {
        return Err(ConfigError::new("last_arrival", "must be at least 1"));
    }
    if cfg.k_paths == 0 && cfg.schemes.iter().any(|s| s.is_p2p()) {
        return Err(ConfigError::new("k_paths", "must be at least 1 for point-to-point schemes"));
    }
    if cfg.batch_window == 0 && cfg.schemes.contains(&Scheme::Batching) {
        return Err(ConfigError::new("batch_window", "must be at least 1 for BATCHING"));
    }
    let nodes = match &cfg.topology {
        TopologySpec::Gscale => Some(12),
        TopologySpec::Random { nodes, edges } => {
            let max = nodes.saturating_mul(nodes.saturating_sub(1)) / 2;
            if *nodes < 2 || *edges + 1 < *nodes || *edges > max {
                return Err(ConfigError::new("topology", format!("no connected simple graph has {nodes} nodes and {edges} edges")));
            }
            Some(*nodes)
        }
        TopologySpec::File(_) => None,
    };
    if let (Some(n), Some(&c)) = (nodes, cfg.copies.iter().max()) {
        if c >= n && cfg.workload_file.is_none() {
            return Err(ConfigError::new("copies", format!("{c} destinations do not fit in {n} nodes")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(text: &str) -> Result<ExperimentConfig, ConfigError> {
        Settings::parse(text)?.resolve()
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = resolve("scheme = DCCAST\ntopology = gscale\n").unwrap();
        assert_eq!(c.schemes, vec![Scheme::Dccast]);
        assert_eq!((c.lambda, c.demand_constant, c.demand_mean), (1.0, 10.0, 20.0));
        assert_eq!((c.last_arrival, c.slot_width, c.capacity), (500, 1.0, 1.0));
        assert_eq!((c.k_paths, c.batch_window, c.tail_percentile), (3, 5, 99.0));
        assert_eq!(c.copies, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(c.seeds, vec![1]);
    }

    #[test]
    fn zero_copies_is_rejected() {
        assert_eq!(resolve("scheme=DCCAST\ncopies=0").unwrap_err().key, "copies");
    }

    #[test]
    fn random_topology_needs_seeds() {
        let err = resolve("scheme=DCCAST\ntopology=random:50,150").unwrap_err();
        assert_eq!(err.key, "seeds");
        assert!(resolve("scheme=DCCAST\ntopology=random:50,150\nseeds=1..3").unwrap().seeds == vec![1, 2, 3]);
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(resolve("scheme=DCCAST\nlambda=fast").unwrap_err().key, "lambda");
        assert_eq!(resolve("scheme=NOPE").unwrap_err().key, "scheme");
        assert_eq!(resolve("topology=gscale").unwrap_err().key, "scheme");
        assert_eq!(resolve("scheme=DCCAST\ncolour=blue").unwrap_err().key, "colour");
        assert_eq!(resolve("scheme=DCCAST\ntail=p0").unwrap_err().key, "tail");
        assert_eq!(resolve("scheme=DCCAST\ntopology=random:5,2\nseeds=1").unwrap_err().key, "topology");
        assert_eq!(resolve("scheme=DCCAST\ncopies=12").unwrap_err().key, "copies");
    }

    #[test]
    fn lists_and_comments() {
        let c = resolve("# sweep\nscheme = DCCAST, P2P-SRPT  # both\ncopies = 1..2, 6\nseeds = 3,1\n").unwrap();
        assert_eq!(c.schemes, vec![Scheme::Dccast, Scheme::P2pSrpt]);
        assert_eq!(c.copies, vec![1, 2, 6]);
        assert_eq!(c.seeds, vec![1, 3]);
    }

    #[test]
    fn later_settings_override() {
        let mut s = Settings::parse("scheme=DCCAST\ncopies=2").unwrap();
        s.set("copies", "4");
        assert_eq!(s.resolve().unwrap().copies, vec![4]);
    }

    #[test]
    fn topology_specs() {
        assert_eq!(TopologySpec::parse("random:50,150").unwrap(), TopologySpec::Random { nodes: 50, edges: 150 });
        assert_eq!(TopologySpec::parse("file:/tmp/t.txt").unwrap().to_string(), "file:/tmp/t.txt");
        assert!(TopologySpec::parse("mesh").is_err());
    }
}
