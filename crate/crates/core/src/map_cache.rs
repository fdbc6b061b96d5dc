//! Fixed-capacity EID-prefix → locator cache with LRU or LFU-Aging eviction.

use std::collections::HashMap;
use std::fmt;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::time::{duration_nanos, SimTime};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CacheError {
    #[error("prefix {0} is already cached")]
    DuplicateInstall(EidPrefix),
    #[error("aging requires the LFU-Aging policy")]
    PolicyMismatch,
    #[error("cache capacity must be at least 1")]
    ZeroCapacity,
    #[error("invalid prefix {0:?}")]
    BadPrefix(String),
}

/// An overlay prefix in canonical form: host bits below `len` are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EidPrefix {
    addr: IpAddr,
    len: u8,
}

fn max_len(addr: &IpAddr) -> u8 {
    match addr {
        IpAddr::V4(_) => 32,
        IpAddr::V6(_) => 128,
    }
}

fn mask_addr(addr: IpAddr, len: u8) -> IpAddr {
    match addr {
        IpAddr::V4(a) => {
            let m = if len == 0 { 0 } else { u32::MAX << (32 - len as u32) };
            IpAddr::V4(Ipv4Addr::from(u32::from(a) & m))
        }
        IpAddr::V6(a) => {
            let m = if len == 0 { 0 } else { u128::MAX << (128 - len as u32) };
            IpAddr::V6(Ipv6Addr::from(u128::from(a) & m))
        }
    }
}

impl EidPrefix {
    /// Builds the canonical prefix of length `len` covering `addr`; `len` is
    /// clamped to the address family width.
    pub fn new(addr: IpAddr, len: u8) -> Self {
        let len = len.min(max_len(&addr));
        EidPrefix {
            addr: mask_addr(addr, len),
            len,
        }
    }

    /// Host route (/32 or /128) for `addr`.
    pub fn host(addr: IpAddr) -> Self {
        EidPrefix { addr, len: max_len(&addr) }
    }

    pub fn address(&self) -> IpAddr {
        self.addr
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u8 {
        self.len
    }

    pub fn is_host(&self) -> bool {
        self.len == max_len(&self.addr)
    }

    pub fn contains(&self, addr: IpAddr) -> bool {
        self.addr.is_ipv4() == addr.is_ipv4() && mask_addr(addr, self.len) == self.addr
    }
}

impl fmt::Display for EidPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.addr, self.len)
    }
}

impl FromStr for EidPrefix {
    type Err = CacheError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CacheError::BadPrefix(s.to_string());
        let (addr, len) = match s.split_once('/') {
            Some((a, l)) => (a.parse::<IpAddr>().map_err(|_| bad())?, Some(l.parse::<u8>().map_err(|_| bad())?)),
            None => (s.parse::<IpAddr>().map_err(|_| bad())?, None),
        };
        let len = len.unwrap_or(max_len(&addr));
        if len > max_len(&addr) || mask_addr(addr, len) != addr {
            return Err(bad());
        }
        Ok(EidPrefix { addr, len })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapCacheEntry {
    pub prefix: EidPrefix,
    pub locators: Vec<IpAddr>,
    pub hit_count: u64,
    pub last_used: SimTime,
    pub installed_at: SimTime,
}

impl MapCacheEntry {
    pub fn new(prefix: EidPrefix, locators: Vec<IpAddr>) -> Self {
        MapCacheEntry {
            prefix,
            locators,
            hit_count: 0,
            last_used: SimTime::ZERO,
            installed_at: SimTime::ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AgeMode {
    /// Integer-halve every reference count.
    #[default]
    Halve,
    /// Reset every reference count to zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Lru,
    LfuAging { age_interval: Duration, mode: AgeMode },
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Lru => "lru",
            Policy::LfuAging { .. } => "lfu-aging",
        }
    }
}

#[derive(Debug)]
pub enum Lookup<'a> {
    Hit(&'a MapCacheEntry),
    Miss,
}

impl Lookup<'_> {
    pub fn is_hit(&self) -> bool {
        matches!(self, Lookup::Hit(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceOp {
    Lookup { hit: bool },
    Install,
}

/// One cache event, rendered as `ts op prefix result evicted`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub ts: SimTime,
    pub op: TraceOp,
    /// Matched prefix on a hit, the destination host route on a miss, the
    /// installed prefix on an install.
    pub prefix: EidPrefix,
    pub evicted: Option<EidPrefix>,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, result) = match self.op {
            TraceOp::Lookup { hit: true } => ("lookup", "hit"),
            TraceOp::Lookup { hit: false } => ("lookup", "miss"),
            TraceOp::Install => ("install", "ok"),
        };
        write!(f, "{} {} {} {} ", self.ts, op, self.prefix, result)?;
        match self.evicted {
            Some(p) => write!(f, "{p}"),
            None => f.write_str("-"),
        }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    entry: MapCacheEntry,
    seq: u64,
}

#[derive(Debug, Clone)]
pub struct MapCache {
    capacity: usize,
    policy: Policy,
    entries: HashMap<EidPrefix, Slot>,
    // Number of cached prefixes per length, for longest-prefix match.
    v4_lens: [u32; 33],
    v6_lens: [u32; 129],
    last_aged: SimTime,
    next_seq: u64,
    trace: Option<Vec<TraceEvent>>,
}

impl MapCache {
    pub fn new(capacity: usize, policy: Policy) -> Result<Self, CacheError> {
        if capacity == 0 {
            return Err(CacheError::ZeroCapacity);
        }
        Ok(MapCache {
            capacity,
            policy,
            entries: HashMap::with_capacity(capacity),
            v4_lens: [0; 33],
            v6_lens: [0; 129],
            last_aged: SimTime::ZERO,
            next_seq: 0,
            trace: None,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, prefix: &EidPrefix) -> bool {
        self.entries.contains_key(prefix)
    }

    pub fn get(&self, prefix: &EidPrefix) -> Option<&MapCacheEntry> {
        self.entries.get(prefix).map(|s| &s.entry)
    }

    /// Entries sorted by prefix.
    pub fn snapshot(&self) -> Vec<MapCacheEntry> {
        let mut v: Vec<_> = self.entries.values().map(|s| s.entry.clone()).collect();
        v.sort_by_key(|e| e.prefix);
        v
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn record(&mut self, ev: TraceEvent) {
        if let Some(t) = &mut self.trace {
            t.push(ev);
        }
    }

    fn lens_mut(&mut self, addr: &IpAddr) -> &mut [u32] {
        match addr {
            IpAddr::V4(_) => &mut self.v4_lens,
            IpAddr::V6(_) => &mut self.v6_lens,
        }
    }

    fn longest_match(&self, dst: IpAddr) -> Option<EidPrefix> {
        let lens: &[u32] = match dst {
            IpAddr::V4(_) => &self.v4_lens,
            IpAddr::V6(_) => &self.v6_lens,
        };
        (0..lens.len())
            .rev()
            .filter(|&l| lens[l] > 0)
            .map(|l| EidPrefix::new(dst, l as u8))
            .find(|p| self.entries.contains_key(p))
    }

    /// Applies any aging intervals that have fully elapsed by `now`.
    fn apply_aging(&mut self, now: SimTime) {
        let Policy::LfuAging { age_interval, mode } = self.policy else {
            return;
        };
        let step = duration_nanos(age_interval);
        if step == 0 || now <= self.last_aged {
            return;
        }
        let intervals = (now.as_nanos() - self.last_aged.as_nanos()) / step;
        if intervals == 0 {
            return;
        }
        for slot in self.entries.values_mut() {
            let c = &mut slot.entry.hit_count;
            *c = match mode {
                AgeMode::Halve if intervals < 64 => *c >> intervals,
                _ => 0,
            };
        }
        self.last_aged = SimTime::from_nanos(self.last_aged.as_nanos() + intervals * step);
    }

    /// Decays reference counts for every full age interval elapsed since the
    /// last aging. Only meaningful under LFU-Aging.
    pub fn age(&mut self, now: SimTime) -> Result<(), CacheError> {
        if self.policy == Policy::Lru {
            return Err(CacheError::PolicyMismatch);
        }
        self.apply_aging(now);
        Ok(())
    }

    /// Longest-prefix-match lookup. A hit bumps the entry's hit count and
    /// recency.
    pub fn lookup(&mut self, dst: IpAddr, now: SimTime) -> Lookup<'_> {
        self.apply_aging(now);
        let matched = self.longest_match(dst);
        self.record(TraceEvent {
            ts: now,
            op: TraceOp::Lookup { hit: matched.is_some() },
            prefix: matched.unwrap_or_else(|| EidPrefix::host(dst)),
            evicted: None,
        });
        match matched {
            Some(p) => {
                let slot = self.entries.get_mut(&p).expect("matched prefix is cached");
                slot.entry.hit_count += 1;
                slot.entry.last_used = now;
                Lookup::Hit(&slot.entry)
            }
            None => Lookup::Miss,
        }
    }

    fn victim(&self) -> Option<EidPrefix> {
        let slots = self.entries.values();
        let v = match self.policy {
            Policy::Lru => slots.min_by_key(|s| (s.entry.last_used, s.entry.installed_at, s.seq)),
            Policy::LfuAging { .. } => {
                slots.min_by_key(|s| (s.entry.hit_count, s.entry.last_used, s.entry.installed_at, s.seq))
            }
        };
        v.map(|s| s.entry.prefix)
    }

    /// Installs `entry`, evicting one victim first if the cache is full.
    /// The entry starts with a zero hit count and `now` as its timestamps.
    pub fn install(&mut self, mut entry: MapCacheEntry, now: SimTime) -> Result<Option<EidPrefix>, CacheError> {
        let prefix = entry.prefix;
        if self.entries.contains_key(&prefix) {
            return Err(CacheError::DuplicateInstall(prefix));
        }
        self.apply_aging(now);
        let evicted = if self.entries.len() >= self.capacity {
            let v = self.victim().expect("full cache has a victim");
            self.remove(&v);
            Some(v)
        } else {
            None
        };
        entry.hit_count = 0;
        entry.last_used = now;
        entry.installed_at = now;
        self.lens_mut(&prefix.addr)[prefix.len as usize] += 1;
        let seq = self.next_seq;
        self.next_seq += 1;
        self.entries.insert(prefix, Slot { entry, seq });
        self.record(TraceEvent {
            ts: now,
            op: TraceOp::Install,
            prefix,
            evicted,
        });
        Ok(evicted)
    }

    pub fn remove(&mut self, prefix: &EidPrefix) -> Option<MapCacheEntry> {
        let slot = self.entries.remove(prefix)?;
        self.lens_mut(&prefix.addr)[prefix.len as usize] -= 1;
        Some(slot.entry)
    }
}
