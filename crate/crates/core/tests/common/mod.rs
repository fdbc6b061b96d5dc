//! Independent reference models used by the integration and acceptance tests.

#![allow(dead_code)]

use std::collections::HashMap;
use std::net::{IpAddr, Ipv4Addr};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xtrsim::cms::{CellWidth, CountMinSketch, SketchDims};
use xtrsim::map_cache::{AgeMode, EidPrefix, Lookup, MapCache, MapCacheEntry, Policy};
use xtrsim::time::SimTime;

// ---------------------------------------------------------------- caches

/// Reference policy, described directly rather than through the crate's types.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefPolicy {
    Lru,
    /// Counts decay at every multiple of `interval` on the absolute clock.
    LfuAging { interval: u64, halve: bool },
}

impl RefPolicy {
    pub fn to_policy(self) -> Policy {
        match self {
            RefPolicy::Lru => Policy::Lru,
            RefPolicy::LfuAging { interval, halve } => Policy::LfuAging {
                age_interval: std::time::Duration::from_nanos(interval),
                mode: if halve { AgeMode::Halve } else { AgeMode::Zero },
            },
        }
    }
}

#[derive(Debug, Clone)]
struct RefEntry {
    prefix: (u32, u8),
    hits: u64,
    last_used: u64,
    installed_at: u64,
    order: u64,
}

/// Brute-force cache: a flat list scanned in full on every operation.
#[derive(Debug, Clone)]
pub struct RefCache {
    capacity: usize,
    policy: RefPolicy,
    entries: Vec<RefEntry>,
    epoch: u64,
    installs: u64,
}

fn covers(prefix: (u32, u8), addr: u32) -> bool {
    let (net, len) = prefix;
    len == 0 || (addr >> (32 - len as u32)) == (net >> (32 - len as u32))
}

impl RefCache {
    pub fn new(capacity: usize, policy: RefPolicy) -> Self {
        RefCache {
            capacity,
            policy,
            entries: Vec::new(),
            epoch: 0,
            installs: 0,
        }
    }

    fn decay(&mut self, now: u64) {
        if let RefPolicy::LfuAging { interval, halve } = self.policy {
            let epoch = now / interval;
            while self.epoch < epoch {
                self.epoch += 1;
                for e in &mut self.entries {
                    e.hits = if halve { e.hits / 2 } else { 0 };
                }
            }
        }
    }

    /// Returns the matched prefix on a hit.
    pub fn lookup(&mut self, addr: u32, now: u64) -> Option<(u32, u8)> {
        self.decay(now);
        let mut best: Option<usize> = None;
        for (i, e) in self.entries.iter().enumerate() {
            if covers(e.prefix, addr) && best.is_none_or(|b| self.entries[b].prefix.1 < e.prefix.1) {
                best = Some(i);
            }
        }
        let e = &mut self.entries[best?];
        e.hits += 1;
        e.last_used = now;
        Some(e.prefix)
    }

    fn worse(&self, a: &RefEntry, b: &RefEntry) -> bool {
        let key = |e: &RefEntry| match self.policy {
            RefPolicy::Lru => (0, e.last_used, e.installed_at, e.order),
            RefPolicy::LfuAging { .. } => (e.hits, e.last_used, e.installed_at, e.order),
        };
        key(a) < key(b)
    }

    /// Returns the evicted prefix, if any.
    pub fn install(&mut self, prefix: (u32, u8), now: u64) -> Option<(u32, u8)> {
        self.decay(now);
        let mut evicted = None;
        if self.entries.len() == self.capacity {
            let mut victim = 0;
            for i in 1..self.entries.len() {
                if self.worse(&self.entries[i], &self.entries[victim]) {
                    victim = i;
                }
            }
            evicted = Some(self.entries.remove(victim).prefix);
        }
        self.entries.push(RefEntry {
            prefix,
            hits: 0,
            last_used: now,
            installed_at: now,
            order: self.installs,
        });
        self.installs += 1;
        evicted
    }

    /// (prefix, hits) sorted by prefix.
    pub fn state(&self) -> Vec<((u32, u8), u64)> {
        let mut v: Vec<_> = self.entries.iter().map(|e| (e.prefix, e.hits)).collect();
        v.sort();
        v
    }
}

/// Classic recency list: front is least recently used. Only valid when
/// every access happens at a distinct time.
#[derive(Debug, Default)]
pub struct RecencyList {
    capacity: usize,
    list: Vec<(u32, u8)>,
}

impl RecencyList {
    pub fn new(capacity: usize) -> Self {
        RecencyList { capacity, list: Vec::new() }
    }

    /// Accesses `addr`, installing `on_miss` if nothing covers it.
    pub fn access(&mut self, addr: u32, on_miss: (u32, u8)) -> (bool, Option<(u32, u8)>) {
        let hit = self
            .list
            .iter()
            .enumerate()
            .filter(|(_, p)| covers(**p, addr))
            .max_by_key(|(_, p)| p.1)
            .map(|(i, _)| i);
        if let Some(i) = hit {
            let p = self.list.remove(i);
            self.list.push(p);
            return (true, None);
        }
        let evicted = (self.list.len() == self.capacity).then(|| self.list.remove(0));
        self.list.push(on_miss);
        (false, evicted)
    }
}

fn to_prefix(p: (u32, u8)) -> EidPrefix {
    EidPrefix::new(IpAddr::V4(Ipv4Addr::from(p.0)), p.1)
}

fn from_prefix(p: &EidPrefix) -> (u32, u8) {
    match p.address() {
        IpAddr::V4(a) => (u32::from(a), p.len()),
        IpAddr::V6(_) => panic!("reference model is IPv4 only"),
    }
}

/// One access: look `addr` up at `now`, installing `prefix` on a miss.
#[derive(Debug, Clone, Copy)]
pub struct Access {
    pub addr: u32,
    pub prefix: (u32, u8),
    pub now: u64,
}

/// Drives the real cache and the reference side by side; returns a
/// description of the first divergence.
pub fn compare_cache(capacity: usize, policy: RefPolicy, accesses: &[Access]) -> Result<(), String> {
    let mut real = MapCache::new(capacity, policy.to_policy()).map_err(|e| e.to_string())?;
    let mut reference = RefCache::new(capacity, policy);
    for (step, a) in accesses.iter().enumerate() {
        let now = SimTime::from_nanos(a.now);
        let dst = IpAddr::V4(Ipv4Addr::from(a.addr));
        let got = match real.lookup(dst, now) {
            Lookup::Hit(e) => Some(from_prefix(&e.prefix)),
            Lookup::Miss => None,
        };
        let want = reference.lookup(a.addr, a.now);
        if got != want {
            return Err(format!("step {step}: lookup {got:?} vs reference {want:?}"));
        }
        if got.is_none() {
            let entry = MapCacheEntry::new(to_prefix(a.prefix), Vec::new());
            let got = real.install(entry, now).map_err(|e| e.to_string())?.map(|p| from_prefix(&p));
            let want = reference.install(a.prefix, a.now);
            if got != want {
                return Err(format!("step {step}: evicted {got:?} vs reference {want:?}"));
            }
        }
        let got_state: Vec<_> = real
            .snapshot()
            .iter()
            .map(|e| (from_prefix(&e.prefix), e.hit_count))
            .collect::<std::collections::BTreeMap<_, _>>()
            .into_iter()
            .collect();
        if got_state != reference.state() {
            return Err(format!("step {step}: state {got_state:?} vs reference {:?}", reference.state()));
        }
    }
    Ok(())
}

/// Calls `f` on every restricted-growth string of length `len` using at
/// most `max_symbols` symbols: each distinct access pattern up to a
/// relabeling of the prefixes.
pub fn for_each_rgs(len: usize, max_symbols: usize, f: &mut impl FnMut(&[usize])) {
    fn go(buf: &mut Vec<usize>, len: usize, max_symbols: usize, used: usize, f: &mut impl FnMut(&[usize])) {
        if buf.len() == len {
            f(buf);
            return;
        }
        for s in 0..(used + 1).min(max_symbols) {
            buf.push(s);
            go(buf, len, max_symbols, used.max(s + 1), f);
            buf.pop();
        }
    }
    go(&mut Vec::with_capacity(len), len, max_symbols, 0, f);
}

/// Disjoint /24 prefixes used by the exhaustive instances.
pub fn small_prefix(i: usize) -> (u32, u8) {
    (0x0a00_0000 + ((i as u32) << 8), 24)
}

/// The policies exercised by the exhaustive check.
pub fn small_policies() -> Vec<RefPolicy> {
    vec![
        RefPolicy::Lru,
        RefPolicy::LfuAging { interval: 3, halve: true },
        RefPolicy::LfuAging { interval: 4, halve: false },
        RefPolicy::LfuAging { interval: 1_000, halve: true },
    ]
}

/// All capacity ≤ 4, ≤ 6 prefix, length ≤ 10 instances. Each sequence runs
/// with one access per tick and with two accesses per tick (which exercises
/// the tie-breaks). Returns the number of instances checked.
pub fn exhaustive_cache_check() -> Result<u64, String> {
    let mut checked = 0u64;
    let mut failure = None;
    for len in 1..=10 {
        for_each_rgs(len, 6, &mut |seq| {
            if failure.is_some() {
                return;
            }
            for per_tick in [1u64, 2] {
                let accesses: Vec<Access> = seq
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| {
                        let p = small_prefix(s);
                        Access { addr: p.0 + 7, prefix: p, now: i as u64 / per_tick }
                    })
                    .collect();
                for capacity in 1..=4 {
                    for policy in small_policies() {
                        if let Err(e) = compare_cache(capacity, policy, &accesses) {
                            failure = Some(format!("{seq:?} cap={capacity} {policy:?} per_tick={per_tick}: {e}"));
                            return;
                        }
                        checked += 1;
                    }
                    if per_tick == 1 {
                        let mut list = RecencyList::new(capacity);
                        let mut real = RefCache::new(capacity, RefPolicy::Lru);
                        for a in &accesses {
                            let hit = real.lookup(a.addr, a.now).is_some();
                            let ev = if hit { None } else { real.install(a.prefix, a.now) };
                            if list.access(a.addr, a.prefix) != (hit, ev) {
                                failure = Some(format!("{seq:?} cap={capacity}: recency list disagrees"));
                                return;
                            }
                        }
                    }
                }
            }
        });
        if let Some(f) = failure {
            return Err(f);
        }
    }
    Ok(checked)
}

/// A random trace over nested prefixes (lengths 8 to 32) with irregular
/// time steps, including repeated timestamps.
pub fn random_trace(seed: u64, len: usize) -> (usize, RefPolicy, Vec<Access>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_prefixes = rng.random_range(20..400);
    let table: Vec<(u32, u8)> = (0..n_prefixes)
        .map(|_| {
            let len = [8u8, 16, 20, 24, 28, 32][rng.random_range(0..6)];
            let addr = 0x0a00_0000 | (rng.random::<u32>() & 0x00ff_ffff);
            let mask = if len == 32 { u32::MAX } else { !(u32::MAX >> len) };
            (addr & mask, len)
        })
        .collect();
    let capacity = rng.random_range(1..64);
    let policy = match rng.random_range(0..3) {
        0 => RefPolicy::Lru,
        1 => RefPolicy::LfuAging { interval: rng.random_range(1..200), halve: true },
        _ => RefPolicy::LfuAging { interval: rng.random_range(1..200), halve: false },
    };
    let mut now = 0u64;
    let mut accesses = Vec::with_capacity(len);
    for _ in 0..len {
        now += [0, 1, 1, 2, 5, 50][rng.random_range(0..6)];
        // Skewed choice so that some prefixes stay hot.
        let i = (rng.random::<f64>().powi(3) * n_prefixes as f64) as usize;
        let base = table[i];
        let host_bits = if base.1 == 32 { 0 } else { rng.random::<u32>() & (u32::MAX >> base.1) };
        let addr = base.0 | host_bits;
        // Install the longest table prefix covering the address.
        let prefix = *table
            .iter()
            .filter(|p| covers(**p, addr))
            .max_by_key(|p| p.1)
            .expect("base covers addr");
        accesses.push(Access { addr, prefix, now });
    }
    (capacity, policy, accesses)
}

// ---------------------------------------------------------------- sketch

/// Exact per-key counts alongside a sketch fed with the same stream.
pub struct SketchRun {
    pub sketch: CountMinSketch,
    pub exact: HashMap<Vec<u8>, u64>,
}

/// A random stream of at most `max_events` weighted increments. Cell width
/// is chosen so that no cell can saturate.
pub fn random_sketch_run(seed: u64, max_events: usize) -> SketchRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = rng.random_range(1..300);
    let depth = rng.random_range(1..7);
    let events = rng.random_range(1..=max_events);
    let max_amount = rng.random_range(1..4u64);
    let total_bound = events as u64 * max_amount;
    let cell_width = if total_bound <= 255 {
        CellWidth::One
    } else if total_bound <= 65_535 {
        CellWidth::Two
    } else {
        CellWidth::Four
    };
    let universe = rng.random_range(1..5000usize);
    let keys: Vec<Vec<u8>> = (0..universe)
        .map(|i| {
            if rng.random_bool(0.5) {
                (i as u32).to_be_bytes().to_vec()
            } else {
                let n = rng.random_range(0..24);
                (0..n).map(|_| rng.random()).collect()
            }
        })
        .collect();
    let skew = rng.random_range(1..5);
    let dims = SketchDims::new(width, depth).expect("valid dims");
    let mut sketch = CountMinSketch::new(dims, cell_width, rng.random());
    let mut exact: HashMap<Vec<u8>, u64> = HashMap::new();
    for _ in 0..events {
        let i = (rng.random::<f64>().powi(skew) * universe as f64) as usize;
        let amount = rng.random_range(1..=max_amount);
        sketch.increment(&keys[i], amount);
        *exact.entry(keys[i].clone()).or_default() += amount;
    }
    SketchRun { sketch, exact }
}

/// Exact sizing by rational arithmetic: `epsilon = en/ed`, `delta = dn/dd`.
/// Width is the ceiling of `2·ed/en`; depth the least `d` with
/// `2^d · (dd − dn) ≥ dd`.
pub fn exact_dims(en: u128, ed: u128, dn: u128, dd: u128) -> (u128, u32) {
    let width = (2 * ed).div_ceil(en);
    let mut depth = 0;
    while (1u128 << depth) * (dd - dn) < dd {
        depth += 1;
    }
    (width, depth)
}

/// Parses a decimal literal such as `0.0125` into an exact fraction.
pub fn decimal(s: &str) -> (u128, u128) {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let den = 10u128.pow(frac.len() as u32);
    let num = int.parse::<u128>().unwrap() * den + if frac.is_empty() { 0 } else { frac.parse::<u128>().unwrap() };
    (num, den)
}
