//! The xTR packet pipeline: map-cache lookup, then on a miss the per-source
//! limiter, the destination budget and the pending-nonce table, with
//! Map-Replies delivered after a fixed latency and installed into the cache.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt::Write as _;
use std::net::{IpAddr, Ipv4Addr};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cms::{CellWidth, SketchDims};
use crate::limiter::{
    AddrKey, Backend, CmsSizing, Decision, DestMode, DestRateLimiter, LimiterConfig, LimiterError,
    SourceRateLimiter,
};
use crate::map_cache::{CacheError, EidPrefix, Lookup, MapCache, MapCacheEntry, Policy, TraceEvent};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum XtrError {
    #[error("event at {event} precedes last processed time {last}")]
    TimeRegression { event: SimTime, last: SimTime },
    #[error("invalid xTR configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Limiter(#[from] LimiterError),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Legit,
    Attacker,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Legit => "legit",
            Role::Attacker => "attacker",
        }
    }
}

/// A data packet arriving at the xTR from inside the site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PacketEvent {
    pub time: SimTime,
    pub src: IpAddr,
    pub dst: IpAddr,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingRequest {
    pub prefix: EidPrefix,
    pub issued_at: SimTime,
    pub role: Role,
}

/// Outstanding Map-Requests keyed by their 64-bit nonce.
#[derive(Debug, Clone)]
pub struct PendingRequestTable {
    capacity: usize,
    entries: HashMap<u64, PendingRequest>,
    by_prefix: HashMap<EidPrefix, u64>,
    // Issue order, for expiry; may hold nonces already consumed.
    order: VecDeque<(SimTime, u64)>,
    rng: ChaCha8Rng,
}

impl PendingRequestTable {
    pub fn new(capacity: usize, seed: u64) -> Self {
        PendingRequestTable {
            capacity,
            entries: HashMap::new(),
            by_prefix: HashMap::new(),
            order: VecDeque::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_pending(&self, prefix: &EidPrefix) -> bool {
        self.by_prefix.contains_key(prefix)
    }

    /// Stores state for a new request and returns its nonce, or `None` when
    /// the table is full.
    pub fn issue(&mut self, prefix: EidPrefix, now: SimTime, role: Role) -> Option<u64> {
        if self.entries.len() >= self.capacity {
            return None;
        }
        let nonce = loop {
            let n: u64 = self.rng.random();
            if !self.entries.contains_key(&n) {
                break n;
            }
        };
        self.entries.insert(
            nonce,
            PendingRequest {
                prefix,
                issued_at: now,
                role,
            },
        );
        self.by_prefix.insert(prefix, nonce);
        self.order.push_back((now, nonce));
        Some(nonce)
    }

    /// Consumes the state for `nonce`, if live.
    pub fn consume(&mut self, nonce: u64) -> Option<PendingRequest> {
        let req = self.entries.remove(&nonce)?;
        self.by_prefix.remove(&req.prefix);
        Some(req)
    }

    /// Drops entries issued strictly before `cutoff`; returns how many.
    pub fn expire_before(&mut self, cutoff: SimTime) -> u64 {
        let mut n = 0;
        while let Some(&(issued, nonce)) = self.order.front() {
            if issued >= cutoff {
                break;
            }
            self.order.pop_front();
            if self.consume(nonce).is_some() {
                n += 1;
            }
        }
        n
    }
}

/// Counters broken down by principal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counters {
    pub packets_in: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub map_requests_sent: u64,
    pub dropped_by_source_limiter: u64,
    pub dropped_by_dest_limiter: u64,
    pub nonce_table_overflow_events: u64,
    pub suppressed_pending: u64,
    pub map_replies_received: u64,
}

impl Counters {
    /// Fraction of misses needing a Map-Request that actually got one.
    pub fn admission_ratio(&self) -> f64 {
        let wanted = self.cache_misses - self.suppressed_pending;
        if wanted == 0 {
            1.0
        } else {
            self.map_requests_sent as f64 / wanted as f64
        }
    }

    pub fn hit_rate(&self) -> f64 {
        if self.packets_in == 0 {
            0.0
        } else {
            self.cache_hits as f64 / self.packets_in as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct XtrMetrics {
    pub total: Counters,
    pub legit: Counters,
    pub attacker: Counters,
    pub evictions: u64,
    pub stale_replies: u64,
    pub pending_timeouts: u64,
    pub replies_lost: u64,
    pub live_pending: u64,
    pub max_pending: u64,
    /// Largest number of Map-Requests admitted for one source key within one
    /// limiter period.
    pub max_source_admissions_per_period: u64,
}

impl XtrMetrics {
    pub fn role(&self, role: Role) -> &Counters {
        match role {
            Role::Legit => &self.legit,
            Role::Attacker => &self.attacker,
        }
    }

    fn bump(&mut self, role: Role, f: impl Fn(&mut Counters)) {
        f(&mut self.total);
        match role {
            Role::Legit => f(&mut self.legit),
            Role::Attacker => f(&mut self.attacker),
        }
    }

    pub fn csv_header() -> String {
        let mut cols = Vec::new();
        for scope in ["total", "legit", "attacker"] {
            for c in COUNTER_NAMES {
                cols.push(format!("{scope}_{c}"));
            }
        }
        cols.extend(
            [
                "evictions",
                "stale_replies",
                "pending_timeouts",
                "replies_lost",
                "live_pending",
                "max_pending",
                "max_source_admissions_per_period",
            ]
            .map(String::from),
        );
        cols.join(",")
    }

    pub fn csv_fields(&self) -> String {
        let mut out = String::new();
        for c in [&self.total, &self.legit, &self.attacker] {
            for v in counter_values(c) {
                let _ = write!(out, "{v},");
            }
        }
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            self.evictions,
            self.stale_replies,
            self.pending_timeouts,
            self.replies_lost,
            self.live_pending,
            self.max_pending,
            self.max_source_admissions_per_period
        );
        out
    }
}

const COUNTER_NAMES: [&str; 9] = [
    "packets_in",
    "cache_hits",
    "cache_misses",
    "map_requests_sent",
    "dropped_by_source_limiter",
    "dropped_by_dest_limiter",
    "nonce_table_overflow_events",
    "suppressed_pending",
    "map_replies_received",
];

fn counter_values(c: &Counters) -> [u64; 9] {
    [
        c.packets_in,
        c.cache_hits,
        c.cache_misses,
        c.map_requests_sent,
        c.dropped_by_source_limiter,
        c.dropped_by_dest_limiter,
        c.nonce_table_overflow_events,
        c.suppressed_pending,
        c.map_replies_received,
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct XtrConfig {
    pub cache_capacity: usize,
    pub cache_policy: Policy,
    pub source_limiter: LimiterConfig,
    pub source_limiter_enabled: bool,
    pub dest_budget: u64,
    pub dest_period: Duration,
    pub dest_mode: DestMode,
    pub pending_capacity: usize,
    pub map_reply_latency: Duration,
    /// Pending entries older than this are dropped; defaults to three times
    /// the reply latency.
    pub pending_timeout: Option<Duration>,
    /// Probability that the mapping system never answers a request.
    pub reply_loss: f64,
    /// Prefixes the mapping system answers with; destinations outside all of
    /// them get a host route.
    pub prefix_table: Vec<EidPrefix>,
    pub seed: u64,
}

impl Default for XtrConfig {
    fn default() -> Self {
        let backend = Backend::Cms {
            sizing: CmsSizing::Dims(SketchDims { width: 8000, depth: 5 }),
            cell_width: CellWidth::Two,
            seed: 0,
        };
        XtrConfig {
            cache_capacity: 10_000,
            cache_policy: Policy::Lru,
            source_limiter: LimiterConfig::new(1000, Duration::from_secs(1), backend),
            source_limiter_enabled: true,
            dest_budget: u64::MAX,
            dest_period: Duration::from_secs(1),
            dest_mode: DestMode::Shared,
            pending_capacity: 65_536,
            map_reply_latency: Duration::from_millis(40),
            pending_timeout: None,
            reply_loss: 0.0,
            prefix_table: Vec::new(),
            seed: 0,
        }
    }
}

impl XtrConfig {
    pub fn pending_timeout(&self) -> Duration {
        self.pending_timeout.unwrap_or(self.map_reply_latency * 3)
    }

    pub fn validate(&self) -> Result<(), XtrError> {
        if self.cache_capacity == 0 || self.pending_capacity == 0 {
            return Err(XtrError::InvalidConfig("capacities must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.reply_loss) {
            return Err(XtrError::InvalidConfig(format!("reply_loss {} outside [0, 1]", self.reply_loss)));
        }
        if self.dest_period.is_zero() {
            return Err(XtrError::InvalidConfig("destination period must be positive".into()));
        }
        self.source_limiter.validate()?;
        Ok(())
    }

    /// Canonical one-line description; the basis of [`config_hash`](Self::config_hash).
    pub fn describe(&self) -> String {
        format!("{self:?}")
    }

    /// First 16 hex digits of the SHA-256 of the canonical description.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.describe().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SuppressReason {
    AlreadyPending,
    SourceLimited,
    DestLimited,
    NonceTableFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepOutcome {
    Forwarded,
    MissPendingRequest { nonce: u64 },
    MissSuppressed(SuppressReason),
}

/// Longest-prefix-match table of the prefixes the mapping system knows.
#[derive(Debug, Clone, Default)]
struct PrefixTable {
    prefixes: std::collections::HashSet<EidPrefix>,
    lens: Vec<u8>,
}

impl PrefixTable {
    fn new(list: &[EidPrefix]) -> Self {
        let mut lens: Vec<u8> = list.iter().map(|p| p.len()).collect();
        lens.sort_unstable_by(|a, b| b.cmp(a));
        lens.dedup();
        PrefixTable {
            prefixes: list.iter().copied().collect(),
            lens,
        }
    }

    fn resolve(&self, dst: IpAddr) -> EidPrefix {
        self.lens
            .iter()
            .map(|&l| EidPrefix::new(dst, l))
            .find(|p| self.prefixes.contains(p))
            .unwrap_or_else(|| EidPrefix::host(dst))
    }
}

const REPLY_LOCATOR: IpAddr = IpAddr::V4(Ipv4Addr::new(203, 0, 113, 1));

pub struct XtrState {
    config: XtrConfig,
    cache: MapCache,
    pending: PendingRequestTable,
    source_limiter: Option<SourceRateLimiter>,
    dest_limiter: DestRateLimiter,
    prefix_table: PrefixTable,
    // (delivery time, schedule order, nonce)
    replies: BinaryHeap<Reverse<(SimTime, u64, u64)>>,
    reply_seq: u64,
    loss_rng: ChaCha8Rng,
    last_time: SimTime,
    admissions: HashMap<AddrKey, u64>,
    admissions_window: SimTime,
    metrics: XtrMetrics,
}

impl XtrState {
    pub fn new(config: XtrConfig) -> Result<Self, XtrError> {
        config.validate()?;
        let source_limiter = if config.source_limiter_enabled {
            Some(SourceRateLimiter::new(config.source_limiter.clone())?)
        } else {
            None
        };
        Ok(XtrState {
            cache: MapCache::new(config.cache_capacity, config.cache_policy)?,
            pending: PendingRequestTable::new(config.pending_capacity, config.seed),
            source_limiter,
            dest_limiter: DestRateLimiter::new(config.dest_budget, config.dest_period, config.dest_mode)?,
            prefix_table: PrefixTable::new(&config.prefix_table),
            replies: BinaryHeap::new(),
            reply_seq: 0,
            loss_rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_1055),
            last_time: SimTime::ZERO,
            admissions: HashMap::new(),
            admissions_window: SimTime::ZERO,
            metrics: XtrMetrics::default(),
            config,
        })
    }

    pub fn config(&self) -> &XtrConfig {
        &self.config
    }

    pub fn cache(&self) -> &MapCache {
        &self.cache
    }

    pub fn pending(&self) -> &PendingRequestTable {
        &self.pending
    }

    pub fn source_limiter(&self) -> Option<&SourceRateLimiter> {
        self.source_limiter.as_ref()
    }

    pub fn metrics(&self) -> &XtrMetrics {
        &self.metrics
    }

    /// Replies scheduled but not yet delivered.
    pub fn in_flight(&self) -> usize {
        self.replies.len()
    }

    pub fn enable_trace(&mut self) {
        self.cache.enable_trace();
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.cache.take_trace()
    }

    fn expire(&mut self, now: SimTime) {
        let timeout = self.config.pending_timeout();
        if now.as_nanos() <= timeout.as_nanos() as u64 {
            return;
        }
        let cutoff = SimTime::from_nanos(now.as_nanos() - timeout.as_nanos() as u64);
        self.metrics.pending_timeouts += self.pending.expire_before(cutoff);
    }

    /// Delivers every scheduled reply due at or before `now`, in time order.
    fn advance(&mut self, now: SimTime) {
        while let Some(&Reverse((at, _, nonce))) = self.replies.peek() {
            if at > now {
                break;
            }
            self.replies.pop();
            self.expire(at);
            self.deliver_reply(nonce, at);
        }
        self.expire(now);
    }

    /// Handles a Map-Reply carrying `nonce`. A live nonce is consumed and its
    /// mapping installed; an unknown one is counted as stale.
    pub fn deliver_reply(&mut self, nonce: u64, now: SimTime) {
        let Some(req) = self.pending.consume(nonce) else {
            self.metrics.stale_replies += 1;
            return;
        };
        self.metrics.bump(req.role, |c| c.map_replies_received += 1);
        let entry = MapCacheEntry::new(req.prefix, vec![REPLY_LOCATOR]);
        let evicted = self
            .cache
            .install(entry, now)
            .expect("a pending prefix is never cached");
        if evicted.is_some() {
            self.metrics.evictions += 1;
        }
    }

    fn note_admission(&mut self, src: IpAddr, now: SimTime) {
        let cfg = &self.config.source_limiter;
        let window = now.window_start(cfg.period);
        if window != self.admissions_window {
            self.admissions.clear();
            self.admissions_window = window;
        }
        let n = self.admissions.entry(cfg.key.extract(src)).or_insert(0);
        *n += 1;
        self.metrics.max_source_admissions_per_period = self.metrics.max_source_admissions_per_period.max(*n);
    }

    /// Processes one packet (after delivering any replies due by its time).
    pub fn step(&mut self, ev: PacketEvent) -> Result<StepOutcome, XtrError> {
        if ev.time < self.last_time {
            return Err(XtrError::TimeRegression {
                event: ev.time,
                last: self.last_time,
            });
        }
        self.last_time = ev.time;
        self.advance(ev.time);
        let now = ev.time;
        self.metrics.bump(ev.role, |c| c.packets_in += 1);

        if let Lookup::Hit(_) = self.cache.lookup(ev.dst, now) {
            self.metrics.bump(ev.role, |c| c.cache_hits += 1);
            return Ok(StepOutcome::Forwarded);
        }
        self.metrics.bump(ev.role, |c| c.cache_misses += 1);

        let prefix = self.prefix_table.resolve(ev.dst);
        if self.pending.is_pending(&prefix) {
            self.metrics.bump(ev.role, |c| c.suppressed_pending += 1);
            return Ok(StepOutcome::MissSuppressed(SuppressReason::AlreadyPending));
        }
        if let Some(limiter) = &mut self.source_limiter {
            if limiter.on_miss(ev.src, now) == Decision::Drop {
                self.metrics.bump(ev.role, |c| c.dropped_by_source_limiter += 1);
                return Ok(StepOutcome::MissSuppressed(SuppressReason::SourceLimited));
            }
        }
        if self.dest_limiter.consume(&prefix, now) == Decision::Drop {
            self.metrics.bump(ev.role, |c| c.dropped_by_dest_limiter += 1);
            return Ok(StepOutcome::MissSuppressed(SuppressReason::DestLimited));
        }
        let Some(nonce) = self.pending.issue(prefix, now, ev.role) else {
            self.metrics.bump(ev.role, |c| c.nonce_table_overflow_events += 1);
            return Ok(StepOutcome::MissSuppressed(SuppressReason::NonceTableFull));
        };
        self.metrics.bump(ev.role, |c| c.map_requests_sent += 1);
        self.metrics.max_pending = self.metrics.max_pending.max(self.pending.len() as u64);
        self.note_admission(ev.src, now);

        let lost = self.config.reply_loss > 0.0 && self.loss_rng.random_bool(self.config.reply_loss);
        if lost {
            self.metrics.replies_lost += 1;
        } else {
            let at = now + self.config.map_reply_latency;
            self.replies.push(Reverse((at, self.reply_seq, nonce)));
            self.reply_seq += 1;
        }
        Ok(StepOutcome::MissPendingRequest { nonce })
    }

    /// Delivers all outstanding replies and expires pending state up to the
    /// last delivery.
    pub fn finish(&mut self) -> &XtrMetrics {
        let end = self
            .replies
            .iter()
            .map(|Reverse((t, _, _))| *t)
            .max()
            .unwrap_or(self.last_time)
            .max(self.last_time);
        self.advance(end);
        self.last_time = end;
        self.metrics.live_pending = self.pending.len() as u64;
        &self.metrics
    }

    /// Runs a time-ordered workload to completion.
    pub fn run<I>(&mut self, workload: I) -> Result<XtrMetrics, XtrError>
    where
        I: IntoIterator<Item = PacketEvent>,
    {
        for ev in workload {
            self.step(ev)?;
        }
        Ok(self.finish().clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limiter::Backend;

    fn addr(i: u32) -> IpAddr {
        IpAddr::V4(Ipv4Addr::from(0x0a00_0000 + i))
    }

    fn dst(i: u32) -> IpAddr {
        IpAddr::V4(Ipv4Addr::from(0xac10_0000 + i))
    }

    fn pkt(ms: u64, s: u32, d: u32) -> PacketEvent {
        PacketEvent {
            time: SimTime::from_millis(ms),
            src: addr(s),
            dst: dst(d),
            role: Role::Legit,
        }
    }

    fn permissive() -> XtrConfig {
        XtrConfig {
            source_limiter_enabled: false,
            ..XtrConfig::default()
        }
    }

    #[test]
    fn cached_destination_forwards() {
        let mut x = XtrState::new(permissive()).unwrap();
        assert!(matches!(x.step(pkt(0, 1, 1)).unwrap(), StepOutcome::MissPendingRequest { .. }));
        assert_eq!(x.pending().len(), 1);
        assert_eq!(x.step(pkt(100, 1, 1)).unwrap(), StepOutcome::Forwarded);
        assert_eq!(x.metrics().total.map_requests_sent, 1);
        assert_eq!(x.pending().len(), 0);
    }

    #[test]
    fn duplicate_miss_while_pending_is_suppressed() {
        let mut x = XtrState::new(permissive()).unwrap();
        x.step(pkt(0, 1, 1)).unwrap();
        assert_eq!(
            x.step(pkt(10, 2, 1)).unwrap(),
            StepOutcome::MissSuppressed(SuppressReason::AlreadyPending)
        );
    }

    #[test]
    fn full_nonce_table_overflows() {
        let cfg = XtrConfig {
            pending_capacity: 2,
            ..permissive()
        };
        let mut x = XtrState::new(cfg).unwrap();
        x.step(pkt(0, 1, 1)).unwrap();
        x.step(pkt(1, 1, 2)).unwrap();
        assert_eq!(
            x.step(pkt(2, 1, 3)).unwrap(),
            StepOutcome::MissSuppressed(SuppressReason::NonceTableFull)
        );
        assert_eq!(x.metrics().total.nonce_table_overflow_events, 1);
        assert_eq!(x.pending().len(), 2);
    }

    #[test]
    fn reply_installs_and_replay_is_stale() {
        let mut x = XtrState::new(permissive()).unwrap();
        let StepOutcome::MissPendingRequest { nonce } = x.step(pkt(0, 1, 1)).unwrap() else {
            panic!()
        };
        // Deliver by hand ahead of the scheduled copy.
        x.deliver_reply(nonce, SimTime::from_millis(5));
        assert_eq!(x.pending().len(), 0);
        assert_eq!(x.cache().len(), 1);
        x.deliver_reply(nonce, SimTime::from_millis(6));
        assert_eq!(x.metrics().stale_replies, 1);
        assert_eq!(x.cache().len(), 1);
    }

    #[test]
    fn late_reply_after_timeout_is_stale() {
        let cfg = XtrConfig {
            map_reply_latency: Duration::from_millis(100),
            pending_timeout: Some(Duration::from_millis(50)),
            ..permissive()
        };
        let mut x = XtrState::new(cfg).unwrap();
        x.step(pkt(0, 1, 1)).unwrap();
        let m = x.finish().clone();
        assert_eq!(m.pending_timeouts, 1);
        assert_eq!(m.stale_replies, 1);
        assert_eq!(x.cache().len(), 0);
    }

    #[test]
    fn time_regression_rejected() {
        let mut x = XtrState::new(permissive()).unwrap();
        x.step(pkt(10, 1, 1)).unwrap();
        assert!(matches!(x.step(pkt(5, 1, 1)), Err(XtrError::TimeRegression { .. })));
    }

    #[test]
    fn empty_run_is_all_zero() {
        let mut x = XtrState::new(permissive()).unwrap();
        assert_eq!(x.run(Vec::new()).unwrap(), XtrMetrics::default());
    }

    #[test]
    fn single_flow_zero_latency() {
        let cfg = XtrConfig {
            map_reply_latency: Duration::ZERO,
            ..permissive()
        };
        let mut x = XtrState::new(cfg).unwrap();
        let flow: Vec<_> = (0..100).map(|i| pkt(i, 1, 1)).collect();
        let m = x.run(flow).unwrap();
        assert_eq!(m.total.cache_misses, 1);
        assert_eq!(m.total.cache_hits, 99);
    }

    #[test]
    fn source_limiter_drops_heavy_source() {
        let cfg = XtrConfig {
            source_limiter: LimiterConfig::new(3, Duration::from_secs(1), Backend::ExactTable),
            ..XtrConfig::default()
        };
        let mut x = XtrState::new(cfg).unwrap();
        let mut outcomes = Vec::new();
        for d in 0..5 {
            outcomes.push(x.step(pkt(d as u64, 1, d)).unwrap());
        }
        assert_eq!(outcomes[3], StepOutcome::MissSuppressed(SuppressReason::SourceLimited));
        assert_eq!(x.metrics().max_source_admissions_per_period, 3);
    }

    #[test]
    fn dest_budget_drops() {
        let cfg = XtrConfig {
            dest_budget: 1,
            ..permissive()
        };
        let mut x = XtrState::new(cfg).unwrap();
        x.step(pkt(0, 1, 1)).unwrap();
        assert_eq!(
            x.step(pkt(1, 2, 2)).unwrap(),
            StepOutcome::MissSuppressed(SuppressReason::DestLimited)
        );
    }

    #[test]
    fn prefix_table_replies_cover_destinations() {
        let cfg = XtrConfig {
            prefix_table: vec![EidPrefix::new(dst(0), 24)],
            ..permissive()
        };
        let mut x = XtrState::new(cfg).unwrap();
        x.step(pkt(0, 1, 1)).unwrap();
        // Same /24, still pending: deduplicated.
        assert_eq!(
            x.step(pkt(1, 1, 2)).unwrap(),
            StepOutcome::MissSuppressed(SuppressReason::AlreadyPending)
        );
        assert_eq!(x.step(pkt(100, 1, 3)).unwrap(), StepOutcome::Forwarded);
        // Outside the table: host route.
        x.step(pkt(101, 1, 300)).unwrap();
        x.finish();
        assert!(x.cache().contains(&EidPrefix::host(dst(300))));
    }

    #[test]
    fn reply_loss_leaves_pending_to_time_out() {
        let cfg = XtrConfig {
            reply_loss: 1.0,
            ..permissive()
        };
        let mut x = XtrState::new(cfg).unwrap();
        x.step(pkt(0, 1, 1)).unwrap();
        x.step(pkt(500, 1, 2)).unwrap();
        let m = x.finish();
        assert_eq!(m.replies_lost, 2);
        assert_eq!(m.pending_timeouts, 1);
        assert_eq!(m.live_pending, 1);
    }

    #[test]
    fn csv_header_matches_fields() {
        let h = XtrMetrics::csv_header();
        let f = XtrMetrics::default().csv_fields();
        assert_eq!(h.split(',').count(), f.split(',').count());
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = XtrConfig::default();
        assert_eq!(a.config_hash(), XtrConfig::default().config_hash());
        assert_eq!(a.config_hash().len(), 16);
        let b = XtrConfig { seed: 1, ..a.clone() };
        assert_ne!(a.config_hash(), b.config_hash());
    }
}
