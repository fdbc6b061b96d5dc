//! Python bindings. Times are seconds as floats; addresses and prefixes are
//! strings.

use std::net::IpAddr;
use std::time::Duration;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use xtrsim::cms::{self, CellWidth, SketchDims, SketchParams};
use xtrsim::experiment::{self, AttackConfig, Scenario, SweepConfig};
use xtrsim::limiter::{self, Backend, CmsSizing, Decision, FlagRule, LimiterConfig};
use xtrsim::map_cache::{self, AgeMode, EidPrefix, Lookup, MapCacheEntry, Policy};
use xtrsim::time::SimTime;
use xtrsim::workload::{self, PopulationProfile};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cell_width(bytes: usize) -> PyResult<CellWidth> {
    CellWidth::from_bytes(bytes).ok_or_else(|| PyValueError::new_err("cell_bytes must be 1, 2 or 4"))
}

fn time(secs: f64) -> PyResult<SimTime> {
    if !(secs >= 0.0 && secs.is_finite()) {
        return Err(PyValueError::new_err("time must be a non-negative number of seconds"));
    }
    Ok(SimTime::from_secs_f64(secs))
}

fn addr(s: &str) -> PyResult<IpAddr> {
    s.parse().map_err(|_| PyValueError::new_err(format!("bad address {s:?}")))
}

#[derive(FromPyObject)]
enum Key {
    Bytes(Vec<u8>),
    Text(String),
}

impl Key {
    fn bytes(&self) -> &[u8] {
        match self {
            Key::Bytes(b) => b,
            Key::Text(s) => s.as_bytes(),
        }
    }
}

#[pyclass]
struct CountMinSketch(cms::CountMinSketch);

#[pymethods]
impl CountMinSketch {
    #[new]
    #[pyo3(signature = (width, depth, cell_bytes = 2, seed = 0))]
    fn new(width: usize, depth: usize, cell_bytes: usize, seed: u64) -> PyResult<Self> {
        let dims = SketchDims::new(width, depth).map_err(value_err)?;
        Ok(CountMinSketch(cms::CountMinSketch::new(dims, cell_width(cell_bytes)?, seed)))
    }

    #[staticmethod]
    #[pyo3(signature = (epsilon, delta, cell_bytes = 2, seed = 0))]
    fn from_params(epsilon: f64, delta: f64, cell_bytes: usize, seed: u64) -> PyResult<Self> {
        let params = SketchParams::new(epsilon, delta).map_err(value_err)?;
        cms::CountMinSketch::from_params(params, cell_width(cell_bytes)?, seed)
            .map(CountMinSketch)
            .map_err(value_err)
    }

    #[staticmethod]
    fn from_bytes(data: Vec<u8>) -> PyResult<Self> {
        cms::CountMinSketch::from_bytes(&data).map(CountMinSketch).map_err(value_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.dims().width
    }

    #[getter]
    fn depth(&self) -> usize {
        self.0.dims().depth
    }

    #[getter]
    fn memory_bytes(&self) -> usize {
        self.0.memory_bytes()
    }

    #[pyo3(signature = (key, amount = 1))]
    fn increment(&mut self, key: Key, amount: u64) {
        self.0.increment(key.bytes(), amount);
    }

    fn estimate(&self, key: Key) -> u64 {
        self.0.estimate(key.bytes())
    }

    fn reset(&mut self) {
        self.0.reset();
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.0.to_bytes()
    }

    fn __repr__(&self) -> String {
        format!("CountMinSketch(width={}, depth={})", self.width(), self.depth())
    }
}

/// `(width, depth)` for error bound `epsilon` and failure probability `delta`.
#[pyfunction]
fn dims_from_params(epsilon: f64, delta: f64) -> PyResult<(usize, usize)> {
    let params = SketchParams::new(epsilon, delta).map_err(value_err)?;
    let d = cms::dims_from_params(params).map_err(value_err)?;
    Ok((d.width, d.depth))
}

#[pyclass]
struct SourceRateLimiter(limiter::SourceRateLimiter);

#[pymethods]
impl SourceRateLimiter {
    /// `backend` is `"cms"` or `"exact"`; `flag_rule` is `"exceeds"` or `"reaches"`.
    #[new]
    #[pyo3(signature = (threshold, period = 1.0, backend = "cms", width = 8000, depth = 5, cell_bytes = 2, seed = 0, flag_rule = "exceeds"))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        threshold: u64,
        period: f64,
        backend: &str,
        width: usize,
        depth: usize,
        cell_bytes: usize,
        seed: u64,
        flag_rule: &str,
    ) -> PyResult<Self> {
        let backend = match backend {
            "exact" => Backend::ExactTable,
            "cms" => Backend::Cms {
                sizing: CmsSizing::Dims(SketchDims { width, depth }),
                cell_width: cell_width(cell_bytes)?,
                seed,
            },
            _ => return Err(PyValueError::new_err("backend must be 'cms' or 'exact'")),
        };
        let mut cfg = LimiterConfig::new(threshold, Duration::from_secs_f64(period.max(0.0)), backend);
        cfg.flag_rule = match flag_rule {
            "exceeds" => FlagRule::Exceeds,
            "reaches" => FlagRule::Reaches,
            _ => return Err(PyValueError::new_err("flag_rule must be 'exceeds' or 'reaches'")),
        };
        limiter::SourceRateLimiter::new(cfg).map(SourceRateLimiter).map_err(value_err)
    }

    /// Records a miss from `source` at `now`; returns whether a Map-Request may be sent.
    fn on_miss(&mut self, source: &str, now: f64) -> PyResult<bool> {
        Ok(self.0.on_miss(addr(source)?, time(now)?) == Decision::Allow)
    }

    fn count(&self, source: &str) -> PyResult<u64> {
        Ok(self.0.count(addr(source)?))
    }

    fn is_flagged(&self, source: &str) -> PyResult<bool> {
        Ok(self.0.is_flagged(addr(source)?))
    }

    fn reset(&mut self) {
        self.0.reset();
    }
}

#[pyclass]
struct MapCache(map_cache::MapCache);

#[pymethods]
impl MapCache {
    /// `policy` is `"lru"` or `"lfu-aging"`; `age_mode` is `"halve"` or `"zero"`.
    #[new]
    #[pyo3(signature = (capacity, policy = "lru", age_interval = 30.0, age_mode = "halve"))]
    fn new(capacity: usize, policy: &str, age_interval: f64, age_mode: &str) -> PyResult<Self> {
        let mode = match age_mode {
            "halve" => AgeMode::Halve,
            "zero" => AgeMode::Zero,
            _ => return Err(PyValueError::new_err("age_mode must be 'halve' or 'zero'")),
        };
        let policy = match policy {
            "lru" => Policy::Lru,
            "lfu-aging" | "lfu" => Policy::LfuAging {
                age_interval: Duration::from_secs_f64(age_interval.max(0.0)),
                mode,
            },
            _ => return Err(PyValueError::new_err("policy must be 'lru' or 'lfu-aging'")),
        };
        map_cache::MapCache::new(capacity, policy).map(MapCache).map_err(value_err)
    }

    /// Longest-prefix match; returns the matched prefix or `None`.
    fn lookup(&mut self, dst: &str, now: f64) -> PyResult<Option<String>> {
        Ok(match self.0.lookup(addr(dst)?, time(now)?) {
            Lookup::Hit(e) => Some(e.prefix.to_string()),
            Lookup::Miss => None,
        })
    }

    /// Installs `prefix` (e.g. `"172.16.0.0/24"`); returns the evicted prefix, if any.
    fn install(&mut self, prefix: &str, now: f64) -> PyResult<Option<String>> {
        let p: EidPrefix = prefix.parse().map_err(value_err)?;
        let evicted = self.0.install(MapCacheEntry::new(p, Vec::new()), time(now)?).map_err(value_err)?;
        Ok(evicted.map(|e| e.to_string()))
    }

    fn remove(&mut self, prefix: &str) -> PyResult<bool> {
        let p: EidPrefix = prefix.parse().map_err(value_err)?;
        Ok(self.0.remove(&p).is_some())
    }

    /// `(prefix, hit_count)` pairs sorted by prefix.
    fn snapshot(&self) -> Vec<(String, u64)> {
        self.0.snapshot().iter().map(|e| (e.prefix.to_string(), e.hit_count)).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Per-node miss counts: `(address, count, role)` tuples.
#[pyfunction]
#[pyo3(signature = (n_nodes, attacker_fraction, seed = 0))]
fn gen_miss_counts(n_nodes: u32, attacker_fraction: f64, seed: u64) -> PyResult<Vec<(String, u32, &'static str)>> {
    let counts = workload::gen_miss_counts(&PopulationProfile::new(n_nodes, attacker_fraction, seed)).map_err(value_err)?;
    Ok(counts.iter().map(|c| (c.addr.to_string(), c.count, c.role.as_str())).collect())
}

#[pyclass(frozen, get_all)]
struct SweepRow {
    n_nodes: u32,
    attacker_fraction: f64,
    w: usize,
    d: usize,
    size_bytes: usize,
    seed: u64,
    fp_rate: f64,
    fn_rate: f64,
}

/// Runs the sketch-size sweep; rows come back in CSV order.
#[pyfunction]
#[pyo3(signature = (n_nodes, attacker_fractions, iterations = 30, seeds = vec![1], threshold = 1000))]
fn run_sweep(
    py: Python<'_>,
    n_nodes: Vec<u32>,
    attacker_fractions: Vec<f64>,
    iterations: u32,
    seeds: Vec<u64>,
    threshold: u64,
) -> PyResult<Vec<SweepRow>> {
    let cfg = SweepConfig {
        n_nodes,
        attacker_fractions,
        iterations,
        seeds,
        threshold,
        ..SweepConfig::default()
    };
    let rows = py.detach(|| experiment::run_sweep(&cfg)).map_err(value_err)?;
    Ok(rows
        .into_iter()
        .map(|r| SweepRow {
            n_nodes: r.n_nodes,
            attacker_fraction: r.attacker_fraction,
            w: r.w,
            d: r.d,
            size_bytes: r.size_bytes,
            seed: r.seed,
            fp_rate: r.fp_rate,
            fn_rate: r.fn_rate,
        })
        .collect())
}

#[pyclass(frozen, get_all)]
struct AttackSummary {
    scenario: String,
    seed: u64,
    victim_admission_off: f64,
    victim_admission_on: f64,
    overflow_events_off: u64,
    overflow_events_on: u64,
    legit_hit_rate_off: f64,
    legit_hit_rate_on: f64,
    max_source_admissions_on: u64,
}

/// Runs the paired defense-off / defense-on simulation of `scenario`
/// (`"dos"`, `"overflow"` or `"scan"`) with the default configuration.
#[pyfunction]
#[pyo3(signature = (scenario, seeds = vec![1]))]
fn run_attack(py: Python<'_>, scenario: &str, seeds: Vec<u64>) -> PyResult<Vec<AttackSummary>> {
    let scenario: Scenario = scenario.parse().map_err(value_err)?;
    let cfg = AttackConfig {
        seeds,
        ..AttackConfig::default()
    };
    let report = py
        .detach(|| experiment::run_attack(scenario, &cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(report
        .summaries
        .into_iter()
        .map(|s| AttackSummary {
            scenario: s.scenario.to_string(),
            seed: s.seed,
            victim_admission_off: s.victim_admission_off,
            victim_admission_on: s.victim_admission_on,
            overflow_events_off: s.overflow_events_off,
            overflow_events_on: s.overflow_events_on,
            legit_hit_rate_off: s.legit_hit_rate_off,
            legit_hit_rate_on: s.legit_hit_rate_on,
            max_source_admissions_on: s.max_source_admissions_on,
        })
        .collect())
}

#[pymodule]
fn pyxtrsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<CountMinSketch>()?;
    m.add_class::<SourceRateLimiter>()?;
    m.add_class::<MapCache>()?;
    m.add_class::<SweepRow>()?;
    m.add_class::<AttackSummary>()?;
    m.add_function(wrap_pyfunction!(dims_from_params, m)?)?;
    m.add_function(wrap_pyfunction!(gen_miss_counts, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_attack, m)?)?;
    Ok(())
}
