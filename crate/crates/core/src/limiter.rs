//! Miss-rate limiters for the xTR control plane.
//!
//! [`SourceRateLimiter`] counts cache misses per source over tumbling windows
//! and refuses Map-Requests from sources whose count passes the threshold.
//! It is backed either by an exact table or by a [`CountMinSketch`].
//! [`DestRateLimiter`] is the destination-side budget of the base scenario.

use std::collections::HashMap;
use std::net::IpAddr;
use std::time::Duration;

use thiserror::Error;

use crate::cms::{dims_from_params, CellWidth, CmsError, CountMinSketch, SketchDims, SketchParams};
use crate::map_cache::EidPrefix;
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimiterError {
    #[error("invalid limiter configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sketch(#[from] CmsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Allow,
    Drop,
}

/// When a count is considered over the threshold `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FlagRule {
    /// `count > T`
    #[default]
    Exceeds,
    /// `count >= T`
    Reaches,
}

impl FlagRule {
    pub fn is_over(self, count: u64, threshold: u64) -> bool {
        match self {
            FlagRule::Exceeds => count > threshold,
            FlagRule::Reaches => count >= threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CmsSizing {
    Params(SketchParams),
    Dims(SketchDims),
}

impl CmsSizing {
    pub fn dims(&self) -> Result<SketchDims, CmsError> {
        match *self {
            CmsSizing::Params(p) => dims_from_params(p),
            CmsSizing::Dims(d) => Ok(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    ExactTable,
    Cms {
        sizing: CmsSizing,
        cell_width: CellWidth,
        seed: u64,
    },
}

/// Which packet field a source limiter counts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SourceKey {
    /// The full source address.
    #[default]
    Address,
    /// The source address truncated to a prefix of this length, so a whole
    /// subnet shares one counter.
    Prefix(u8),
}

impl SourceKey {
    pub fn extract(&self, src: IpAddr) -> AddrKey {
        match *self {
            SourceKey::Address => AddrKey::from(src),
            SourceKey::Prefix(len) => AddrKey::from(EidPrefix::new(src, len).address()),
        }
    }
}

/// Canonical byte form of an address: 4 bytes for IPv4, 16 for IPv6, big-endian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AddrKey {
    buf: [u8; 16],
    len: u8,
}

impl AddrKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.buf[..self.len as usize]
    }
}

impl From<IpAddr> for AddrKey {
    fn from(addr: IpAddr) -> Self {
        let mut buf = [0u8; 16];
        let len = match addr {
            IpAddr::V4(a) => {
                buf[..4].copy_from_slice(&a.octets());
                4
            }
            IpAddr::V6(a) => {
                buf.copy_from_slice(&a.octets());
                16
            }
        };
        AddrKey { buf, len }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimiterConfig {
    /// Misses per period a source may trigger before being limited (`T`).
    pub threshold: u64,
    /// Length of the tumbling counting window (`p`).
    pub period: Duration,
    pub backend: Backend,
    pub flag_rule: FlagRule,
    pub key: SourceKey,
}

impl LimiterConfig {
    pub fn new(threshold: u64, period: Duration, backend: Backend) -> Self {
        LimiterConfig {
            threshold,
            period,
            backend,
            flag_rule: FlagRule::default(),
            key: SourceKey::default(),
        }
    }

    pub fn validate(&self) -> Result<(), LimiterError> {
        if self.threshold == 0 {
            return Err(LimiterError::InvalidConfig("threshold must be at least 1".into()));
        }
        if self.period.is_zero() {
            return Err(LimiterError::InvalidConfig("period must be positive".into()));
        }
        if let Backend::Cms { sizing, cell_width, .. } = self.backend {
            sizing.dims()?;
            // A saturated cell must still read as over the threshold.
            if !self.flag_rule.is_over(cell_width.max_value() as u64, self.threshold) {
                return Err(LimiterError::InvalidConfig(format!(
                    "threshold {} is not below the {}-byte cell maximum",
                    self.threshold,
                    cell_width.bytes()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum CounterStore {
    Exact(HashMap<AddrKey, u64>),
    Cms(CountMinSketch),
}

/// Per-source miss counter with threshold `T` and tumbling period `p`.
#[derive(Debug, Clone)]
pub struct SourceRateLimiter {
    config: LimiterConfig,
    store: CounterStore,
    period_start: SimTime,
}

impl SourceRateLimiter {
    pub fn new(config: LimiterConfig) -> Result<Self, LimiterError> {
        config.validate()?;
        let store = match config.backend {
            Backend::ExactTable => CounterStore::Exact(HashMap::new()),
            Backend::Cms { sizing, cell_width, seed } => {
                CounterStore::Cms(CountMinSketch::new(sizing.dims()?, cell_width, seed))
            }
        };
        Ok(SourceRateLimiter {
            config,
            store,
            period_start: SimTime::ZERO,
        })
    }

    pub fn config(&self) -> &LimiterConfig {
        &self.config
    }

    pub fn period_start(&self) -> SimTime {
        self.period_start
    }

    /// Counter memory in bytes; `None` for the exact table, whose size grows
    /// with the number of sources.
    pub fn sketch_bytes(&self) -> Option<usize> {
        match &self.store {
            CounterStore::Exact(_) => None,
            CounterStore::Cms(s) => Some(s.memory_bytes()),
        }
    }

    fn roll(&mut self, now: SimTime) {
        if now < self.period_start || now.since(self.period_start) < self.config.period {
            return;
        }
        self.period_start = now.window_start(self.config.period);
        match &mut self.store {
            CounterStore::Exact(map) => map.clear(),
            CounterStore::Cms(s) => s.reset(),
        }
    }

    /// Records one miss for `source` at `now` and decides whether its
    /// Map-Request may be sent.
    pub fn on_miss(&mut self, source: IpAddr, now: SimTime) -> Decision {
        let key = self.config.key.extract(source);
        self.on_miss_key(key.as_bytes(), now)
    }

    /// [`on_miss`](Self::on_miss) on an already extracted key.
    pub fn on_miss_key(&mut self, key: &[u8], now: SimTime) -> Decision {
        self.roll(now);
        let count = match &mut self.store {
            CounterStore::Exact(map) => {
                let c = map.entry(key_from_bytes(key)).or_insert(0);
                *c += 1;
                *c
            }
            CounterStore::Cms(s) => s.increment_estimate(key, 1),
        };
        if self.config.flag_rule.is_over(count, self.config.threshold) {
            Decision::Drop
        } else {
            Decision::Allow
        }
    }

    /// Adds `amount` misses at once, without a decision. Used when per-period
    /// totals are fed directly, with time abstracted away.
    pub fn add_misses(&mut self, key: &[u8], amount: u64) {
        match &mut self.store {
            CounterStore::Exact(map) => *map.entry(key_from_bytes(key)).or_insert(0) += amount,
            CounterStore::Cms(s) => s.increment(key, amount),
        }
    }

    /// Current-period count for `key` (an estimate under the sketch backend).
    pub fn count_key(&self, key: &[u8]) -> u64 {
        match &self.store {
            CounterStore::Exact(map) => map.get(&key_from_bytes(key)).copied().unwrap_or(0),
            CounterStore::Cms(s) => s.estimate(key),
        }
    }

    pub fn count(&self, source: IpAddr) -> u64 {
        self.count_key(self.config.key.extract(source).as_bytes())
    }

    /// Whether `source` is over the threshold in the current period.
    pub fn is_flagged(&self, source: IpAddr) -> bool {
        self.is_flagged_key(self.config.key.extract(source).as_bytes())
    }

    pub fn is_flagged_key(&self, key: &[u8]) -> bool {
        self.config.flag_rule.is_over(self.count_key(key), self.config.threshold)
    }

    /// Zeroes all counters without moving the window.
    pub fn reset(&mut self) {
        match &mut self.store {
            CounterStore::Exact(map) => map.clear(),
            CounterStore::Cms(s) => s.reset(),
        }
    }
}

fn key_from_bytes(key: &[u8]) -> AddrKey {
    let mut buf = [0u8; 16];
    let len = key.len().min(16);
    buf[..len].copy_from_slice(&key[..len]);
    AddrKey { buf, len: len as u8 }
}

/// How the destination budget is shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DestMode {
    /// One budget across all destinations.
    #[default]
    Shared,
    /// An independent budget per destination prefix.
    PerPrefix,
}

/// Destination-side Map-Request budget, reset at every period boundary.
#[derive(Debug, Clone)]
pub struct DestRateLimiter {
    budget: u64,
    period: Duration,
    mode: DestMode,
    used: u64,
    per_prefix: HashMap<EidPrefix, u64>,
    period_start: SimTime,
}

impl DestRateLimiter {
    pub fn new(budget: u64, period: Duration, mode: DestMode) -> Result<Self, LimiterError> {
        if period.is_zero() {
            return Err(LimiterError::InvalidConfig("period must be positive".into()));
        }
        Ok(DestRateLimiter {
            budget,
            period,
            mode,
            used: 0,
            per_prefix: HashMap::new(),
            period_start: SimTime::ZERO,
        })
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Messages used in the current period (shared mode).
    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn consume(&mut self, dst: &EidPrefix, now: SimTime) -> Decision {
        if now >= self.period_start && now.since(self.period_start) >= self.period {
            self.period_start = now.window_start(self.period);
            self.used = 0;
            self.per_prefix.clear();
        }
        let used = match self.mode {
            DestMode::Shared => &mut self.used,
            DestMode::PerPrefix => self.per_prefix.entry(*dst).or_insert(0),
        };
        if *used < self.budget {
            *used += 1;
            Decision::Allow
        } else {
            Decision::Drop
        }
    }
}
