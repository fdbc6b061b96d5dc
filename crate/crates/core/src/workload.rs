//! Seeded workload generators: per-source miss counts for the sketch
//! experiment, the DoS / overflow packet streams, and the cache-scanning
//! stream mixed with Zipf background traffic.

use std::io::{self, BufRead, Write};
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};
use std::ops::RangeInclusive;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use thiserror::Error;

use crate::map_cache::EidPrefix;
use crate::time::{duration_nanos, SimTime};
use crate::xtr::{PacketEvent, Role};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkloadError {
    #[error("invalid workload profile: {0}")]
    InvalidProfile(String),
    #[error("trace line {line}: {msg}")]
    Trace { line: usize, msg: String },
    #[error("trace I/O: {0}")]
    Io(String),
}

/// Site addresses live in 10.0.0.0/8, one per node index.
pub const MAX_NODES: u32 = 1 << 24;

pub fn node_address(index: u32) -> IpAddr {
    IpAddr::V4(Ipv4Addr::from(0x0a00_0000 | (index & (MAX_NODES - 1))))
}

/// Overlay destinations are numbered inside 172.16.0.0/12.
pub fn overlay_destination(index: u32) -> IpAddr {
    IpAddr::V4(Ipv4Addr::from(0xac10_0000 | (index & 0x000f_ffff)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationProfile {
    pub n_nodes: u32,
    pub attacker_fraction: f64,
    pub legit_miss_range: RangeInclusive<u32>,
    pub attacker_miss_range: RangeInclusive<u32>,
    pub seed: u64,
}

impl PopulationProfile {
    /// 1–10 misses per legitimate user, 1k–10k per attacker.
    pub fn new(n_nodes: u32, attacker_fraction: f64, seed: u64) -> Self {
        PopulationProfile {
            n_nodes,
            attacker_fraction,
            legit_miss_range: 1..=10,
            attacker_miss_range: 1000..=10_000,
            seed,
        }
    }

    pub fn attacker_count(&self) -> u32 {
        (self.n_nodes as f64 * self.attacker_fraction).round() as u32
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |m: String| Err(WorkloadError::InvalidProfile(m));
        if self.n_nodes == 0 || self.n_nodes > MAX_NODES {
            return bad(format!("n_nodes must be in 1..={MAX_NODES}, got {}", self.n_nodes));
        }
        if !(0.0..=1.0).contains(&self.attacker_fraction) {
            return bad(format!("attacker_fraction {} outside [0, 1]", self.attacker_fraction));
        }
        if self.legit_miss_range.is_empty() || self.attacker_miss_range.is_empty() {
            return bad("miss ranges must be non-empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceCount {
    pub index: u32,
    pub addr: IpAddr,
    pub count: u32,
    pub role: Role,
}

/// Draws each node's per-period miss count. Attackers are the first
/// `attacker_count()` indices of a seeded shuffle. Output is in index order.
pub fn gen_miss_counts(profile: &PopulationProfile) -> Result<Vec<SourceCount>, WorkloadError> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let n = profile.n_nodes as usize;
    let mut order: Vec<u32> = (0..profile.n_nodes).collect();
    order.shuffle(&mut rng);
    let mut roles = vec![Role::Legit; n];
    for &i in &order[..profile.attacker_count() as usize] {
        roles[i as usize] = Role::Attacker;
    }
    Ok(roles
        .into_iter()
        .enumerate()
        .map(|(i, role)| {
            let range = match role {
                Role::Legit => profile.legit_miss_range.clone(),
                Role::Attacker => profile.attacker_miss_range.clone(),
            };
            SourceCount {
                index: i as u32,
                addr: node_address(i as u32),
                count: rng.random_range(range),
                role,
            }
        })
        .collect())
}

/// Where DoS attackers aim so that every packet misses the cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DestStrategy {
    /// Unique addresses in unallocated IPv6 space.
    Unallocated,
    /// Overlay destinations outside the popular pool, cycled without
    /// repetition until the universe is exhausted.
    NonPopular,
    /// Unique addresses known not to be part of the overlay.
    NegativePrefixes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackTiming {
    /// Attacker packets evenly spread over the period.
    Uniform,
    /// Attacker packets squeezed into the first `fraction` of each period.
    FrontLoaded { fraction: f64 },
}

/// Timing and destination layout of a DoS / overflow stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamShape {
    pub period: Duration,
    /// The drawn counts repeat in each of this many consecutive periods.
    pub periods: u32,
    pub timing: AttackTiming,
    /// Legitimate users pick destinations uniformly from this many overlay prefixes.
    pub popular_pool: u32,
    /// Size of the non-popular destination universe.
    pub nonpopular_universe: u32,
}

impl Default for StreamShape {
    fn default() -> Self {
        StreamShape {
            period: Duration::from_secs(1),
            periods: 1,
            timing: AttackTiming::Uniform,
            popular_pool: 64,
            nonpopular_universe: 1 << 19,
        }
    }
}

struct AttackDestinations {
    strategy: DestStrategy,
    next: u64,
    popular_pool: u32,
    universe: u32,
}

impl AttackDestinations {
    fn next(&mut self) -> IpAddr {
        let i = self.next;
        self.next += 1;
        match self.strategy {
            DestStrategy::Unallocated => {
                IpAddr::V6(Ipv6Addr::from((0x2001_0db8_u128 << 96) | i as u128))
            }
            DestStrategy::NonPopular => {
                overlay_destination(self.popular_pool + (i % self.universe as u64) as u32)
            }
            DestStrategy::NegativePrefixes => IpAddr::V4(Ipv4Addr::from(0xf000_0000 | (i as u32 & 0x0fff_ffff))),
        }
    }
}

/// Builds the DoS packet stream: each source sends its drawn count per
/// period; attackers to always-fresh destinations, legitimate users to a
/// small popular pool. Events are time-ordered.
pub fn gen_dos_stream(
    profile: &PopulationProfile,
    strategy: DestStrategy,
    shape: &StreamShape,
) -> Result<Vec<PacketEvent>, WorkloadError> {
    let counts = gen_miss_counts(profile)?;
    gen_dos_stream_from_counts(&counts, strategy, shape, profile.seed)
}

pub fn gen_dos_stream_from_counts(
    counts: &[SourceCount],
    strategy: DestStrategy,
    shape: &StreamShape,
    seed: u64,
) -> Result<Vec<PacketEvent>, WorkloadError> {
    if shape.period.is_zero() || shape.periods == 0 || shape.popular_pool == 0 || shape.nonpopular_universe == 0 {
        return Err(WorkloadError::InvalidProfile("stream shape values must be positive".into()));
    }
    if let AttackTiming::FrontLoaded { fraction } = shape.timing {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(WorkloadError::InvalidProfile(format!("burst fraction {fraction} outside (0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd05_5eed);
    let mut dests = AttackDestinations {
        strategy,
        next: 0,
        popular_pool: shape.popular_pool,
        universe: shape.nonpopular_universe,
    };
    let period_ns = duration_nanos(shape.period);
    let total: u64 = counts.iter().map(|c| c.count as u64).sum::<u64>() * shape.periods as u64;
    let mut events = Vec::with_capacity(total as usize);
    for k in 0..shape.periods as u64 {
        let base = k * period_ns;
        for src in counts {
            if src.count == 0 {
                continue;
            }
            let window = match (src.role, shape.timing) {
                (Role::Attacker, AttackTiming::FrontLoaded { fraction }) => period_ns as f64 * fraction,
                _ => period_ns as f64,
            };
            let phase: f64 = rng.random();
            let gap = window / src.count as f64;
            for j in 0..src.count {
                let offset = ((j as f64 + phase) * gap) as u64;
                let dst = match src.role {
                    Role::Attacker => dests.next(),
                    Role::Legit => overlay_destination(rng.random_range(0..shape.popular_pool)),
                };
                events.push(PacketEvent {
                    time: SimTime::from_nanos(base + offset.min(period_ns - 1)),
                    src: src.addr,
                    dst,
                    role: src.role,
                });
            }
        }
    }
    events.sort_by_key(|e| e.time);
    Ok(events)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanProfile {
    pub prefix_list: Vec<EidPrefix>,
    /// Scan packets per second, summed over all scanning sources.
    pub packet_rate: f64,
    pub duration: Duration,
    pub reshuffle_each_pass: bool,
    pub n_attackers: u32,
    pub seed: u64,
}

impl ScanProfile {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.prefix_list.is_empty() {
            return Err(WorkloadError::InvalidProfile("scan prefix list is empty".into()));
        }
        if !(self.packet_rate.is_finite() && self.packet_rate > 0.0) {
            return Err(WorkloadError::InvalidProfile("scan rate must be positive".into()));
        }
        if self.n_attackers == 0 {
            return Err(WorkloadError::InvalidProfile("need at least one scanning source".into()));
        }
        Ok(())
    }

    pub fn packet_count(&self) -> u64 {
        (self.duration.as_secs_f64() * self.packet_rate + 1e-9).floor() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundProfile {
    pub n_users: u32,
    pub zipf_exponent: f64,
    pub n_destinations: u32,
    /// Packets per second per user.
    pub rate_per_user: f64,
    pub duration: Duration,
    pub seed: u64,
}

impl BackgroundProfile {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.n_users == 0 || self.n_destinations == 0 {
            return Err(WorkloadError::InvalidProfile("background sizes must be positive".into()));
        }
        if !(self.zipf_exponent > 0.0 && self.rate_per_user > 0.0) {
            return Err(WorkloadError::InvalidProfile("zipf exponent and rate must be positive".into()));
        }
        if self.n_users >= MAX_NODES / 2 {
            return Err(WorkloadError::InvalidProfile("too many background users".into()));
        }
        Ok(())
    }
}

/// A random host address inside `prefix`.
fn host_in(prefix: &EidPrefix, rng: &mut impl Rng) -> IpAddr {
    match prefix.address() {
        IpAddr::V4(a) => {
            let host_bits = 32 - prefix.len() as u32;
            let mask = if host_bits == 32 { u32::MAX } else { (1u32 << host_bits) - 1 };
            IpAddr::V4(Ipv4Addr::from(u32::from(a) | (rng.random::<u32>() & mask)))
        }
        IpAddr::V6(a) => {
            let host_bits = 128 - prefix.len() as u32;
            let mask = if host_bits == 128 { u128::MAX } else { (1u128 << host_bits) - 1 };
            IpAddr::V6(Ipv6Addr::from(u128::from(a) | (rng.random::<u128>() & mask)))
        }
    }
}

/// Scan events only: one packet every `1/rate` seconds, each pass visiting
/// every prefix once in a random order.
pub fn gen_scan_events(scan: &ScanProfile) -> Result<Vec<PacketEvent>, WorkloadError> {
    scan.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scan.seed);
    let n = scan.prefix_list.len();
    let mut order: Vec<usize> = (0..n).collect();
    let count = scan.packet_count();
    let mut events = Vec::with_capacity(count as usize);
    for k in 0..count {
        let pos = (k % n as u64) as usize;
        if pos == 0 && (k == 0 || scan.reshuffle_each_pass) {
            order.shuffle(&mut rng);
        }
        let prefix = &scan.prefix_list[order[pos]];
        let attacker = MAX_NODES - 1 - (k % scan.n_attackers as u64) as u32;
        events.push(PacketEvent {
            time: SimTime::from_nanos((k as f64 * 1e9 / scan.packet_rate) as u64),
            src: node_address(attacker),
            dst: host_in(prefix, &mut rng),
            role: Role::Attacker,
        });
    }
    Ok(events)
}

/// Background traffic: each user sends evenly spaced packets with destination
/// ranks drawn from a Zipf law; rank 1 is `overlay_destination(0)`.
pub fn gen_background_events(bg: &BackgroundProfile) -> Result<Vec<PacketEvent>, WorkloadError> {
    bg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(bg.seed);
    let zipf = Zipf::new(bg.n_destinations as f64, bg.zipf_exponent)
        .map_err(|e| WorkloadError::InvalidProfile(e.to_string()))?;
    let duration_ns = duration_nanos(bg.duration) as f64;
    let gap = 1e9 / bg.rate_per_user;
    let per_user = (duration_ns / gap).floor() as u64;
    let mut events = Vec::with_capacity((per_user * bg.n_users as u64) as usize);
    for u in 0..bg.n_users {
        let phase: f64 = rng.random();
        for j in 0..=per_user {
            let t = (j as f64 + phase) * gap;
            if t >= duration_ns {
                break;
            }
            let rank = zipf.sample(&mut rng) as u32;
            events.push(PacketEvent {
                time: SimTime::from_nanos(t as u64),
                src: node_address(u),
                dst: overlay_destination(rank - 1),
                role: Role::Legit,
            });
        }
    }
    events.sort_by_key(|e| e.time);
    Ok(events)
}

/// Scan events merged with background traffic in time order (scan first on ties).
pub fn gen_scan_stream(scan: &ScanProfile, background: &BackgroundProfile) -> Result<Vec<PacketEvent>, WorkloadError> {
    let mut events = gen_scan_events(scan)?;
    events.extend(gen_background_events(background)?);
    events.sort_by_key(|e| e.time);
    Ok(events)
}

/// Writes events as `ts src dst role` lines, `ts` in nanoseconds.
pub fn write_trace<W: Write>(events: &[PacketEvent], mut out: W) -> io::Result<()> {
    for e in events {
        writeln!(out, "{} {} {} {}", e.time, e.src, e.dst, e.role.as_str())?;
    }
    Ok(())
}

/// Parses the `ts src dst role` format; blank lines and `#` comments are skipped.
pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<PacketEvent>, WorkloadError> {
    let mut events = Vec::new();
    let mut last = SimTime::ZERO;
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| WorkloadError::Io(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| WorkloadError::Trace {
            line: i + 1,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        let [ts, src, dst, role] = f[..] else {
            return Err(err("expected 4 fields"));
        };
        let time = SimTime::from_nanos(ts.parse().map_err(|_| err("bad timestamp"))?);
        if time < last {
            return Err(err("timestamps must be non-decreasing"));
        }
        last = time;
        let role = match role {
            "legit" => Role::Legit,
            "attacker" => Role::Attacker,
            _ => return Err(err("role must be legit or attacker")),
        };
        events.push(PacketEvent {
            time,
            src: src.parse().map_err(|_| err("bad source address"))?,
            dst: dst.parse().map_err(|_| err("bad destination address"))?,
            role,
        });
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    #[test]
    fn attacker_count_for_paper_population() {
        let counts = gen_miss_counts(&PopulationProfile::new(50_000, 0.01, 1)).unwrap();
        assert_eq!(counts.iter().filter(|c| c.role == Role::Attacker).count(), 500);
        let counts = gen_miss_counts(&PopulationProfile::new(50_000, 0.10, 1)).unwrap();
        assert_eq!(counts.iter().filter(|c| c.role == Role::Attacker).count(), 5000);
    }

    #[test]
    fn no_attackers() {
        let counts = gen_miss_counts(&PopulationProfile::new(1000, 0.0, 4)).unwrap();
        assert!(counts.iter().all(|c| c.role == Role::Legit && (1..=10).contains(&c.count)));
    }

    #[test]
    fn roles_separable_by_count() {
        let counts = gen_miss_counts(&PopulationProfile::new(5000, 0.1, 2)).unwrap();
        let min_att = counts.iter().filter(|c| c.role == Role::Attacker).map(|c| c.count).min().unwrap();
        let max_legit = counts.iter().filter(|c| c.role == Role::Legit).map(|c| c.count).max().unwrap();
        assert!(min_att >= 1000 && max_legit <= 10 && min_att > max_legit);
    }

    #[test]
    fn counts_deterministic_per_seed() {
        let p = PopulationProfile::new(2000, 0.05, 77);
        assert_eq!(gen_miss_counts(&p).unwrap(), gen_miss_counts(&p).unwrap());
        let q = PopulationProfile { seed: 78, ..p.clone() };
        assert_ne!(gen_miss_counts(&p).unwrap(), gen_miss_counts(&q).unwrap());
    }

    #[test]
    fn invalid_profiles() {
        assert!(gen_miss_counts(&PopulationProfile::new(0, 0.1, 0)).is_err());
        assert!(gen_miss_counts(&PopulationProfile::new(10, 1.5, 0)).is_err());
        #[allow(clippy::reversed_empty_ranges)]
        let p = PopulationProfile {
            legit_miss_range: 5..=4,
            ..PopulationProfile::new(10, 0.1, 0)
        };
        assert!(gen_miss_counts(&p).is_err());
    }

    #[test]
    fn dos_unallocated_destinations_unique() {
        let p = PopulationProfile::new(300, 0.02, 5);
        let events = gen_dos_stream(&p, DestStrategy::Unallocated, &StreamShape::default()).unwrap();
        let att: Vec<_> = events.iter().filter(|e| e.role == Role::Attacker).collect();
        let uniq: HashSet<_> = att.iter().map(|e| e.dst).collect();
        assert_eq!(uniq.len(), att.len());
        let expected: u64 = gen_miss_counts(&p)
            .unwrap()
            .iter()
            .filter(|c| c.role == Role::Attacker)
            .map(|c| c.count as u64)
            .sum();
        assert_eq!(att.len() as u64, expected);
        assert!(events.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn dos_without_attackers_is_all_legit() {
        let p = PopulationProfile::new(100, 0.0, 5);
        let events = gen_dos_stream(&p, DestStrategy::NonPopular, &StreamShape::default()).unwrap();
        assert!(events.iter().all(|e| e.role == Role::Legit));
        let total: u64 = gen_miss_counts(&p).unwrap().iter().map(|c| c.count as u64).sum();
        assert_eq!(events.len() as u64, total);
    }

    #[test]
    fn dos_strategies_avoid_popular_pool() {
        let p = PopulationProfile::new(200, 0.05, 9);
        let shape = StreamShape::default();
        let popular: HashSet<IpAddr> = (0..shape.popular_pool).map(overlay_destination).collect();
        for s in [DestStrategy::Unallocated, DestStrategy::NonPopular, DestStrategy::NegativePrefixes] {
            let events = gen_dos_stream(&p, s, &shape).unwrap();
            assert!(events
                .iter()
                .filter(|e| e.role == Role::Attacker)
                .all(|e| !popular.contains(&e.dst)));
        }
    }

    #[test]
    fn front_loaded_attackers_finish_early() {
        let p = PopulationProfile::new(100, 0.05, 9);
        let shape = StreamShape {
            timing: AttackTiming::FrontLoaded { fraction: 0.1 },
            ..StreamShape::default()
        };
        let events = gen_dos_stream(&p, DestStrategy::Unallocated, &shape).unwrap();
        assert!(events
            .iter()
            .filter(|e| e.role == Role::Attacker)
            .all(|e| e.time < SimTime::from_millis(100)));
    }

    #[test]
    fn multi_period_repeats_counts() {
        let p = PopulationProfile::new(50, 0.1, 9);
        let one = gen_dos_stream(&p, DestStrategy::Unallocated, &StreamShape::default()).unwrap();
        let shape = StreamShape {
            periods: 3,
            ..StreamShape::default()
        };
        let three = gen_dos_stream(&p, DestStrategy::Unallocated, &shape).unwrap();
        assert_eq!(three.len(), one.len() * 3);
        assert!(three.last().unwrap().time < SimTime::from_secs(3));
    }

    fn scan_profile(n: u32, rate: f64, secs: u64) -> ScanProfile {
        ScanProfile {
            prefix_list: (0..n).map(|i| EidPrefix::new(overlay_destination(0x8_0000 + i * 256), 24)).collect(),
            packet_rate: rate,
            duration: Duration::from_secs(secs),
            reshuffle_each_pass: true,
            n_attackers: 1,
            seed: 3,
        }
    }

    #[test]
    fn scan_passes_are_permutations() {
        let scan = scan_profile(100, 100.0, 2);
        let events = gen_scan_events(&scan).unwrap();
        assert_eq!(events.len(), 200);
        let prefix_of = |e: &PacketEvent| scan.prefix_list.iter().position(|p| p.contains(e.dst)).unwrap();
        for pass in events.chunks(100) {
            let seen: HashSet<usize> = pass.iter().map(prefix_of).collect();
            assert_eq!(seen.len(), 100);
        }
        let first: Vec<usize> = events[..100].iter().map(prefix_of).collect();
        let second: Vec<usize> = events[100..].iter().map(prefix_of).collect();
        assert_ne!(first, second);
        assert_eq!(events[1].time, SimTime::from_millis(10));
    }

    #[test]
    fn scan_without_reshuffle_repeats_order() {
        let scan = ScanProfile {
            reshuffle_each_pass: false,
            ..scan_profile(50, 50.0, 3)
        };
        let events = gen_scan_events(&scan).unwrap();
        let prefix_of = |e: &PacketEvent| scan.prefix_list.iter().position(|p| p.contains(e.dst)).unwrap();
        let passes: Vec<Vec<usize>> = events.chunks(50).map(|c| c.iter().map(prefix_of).collect()).collect();
        assert_eq!(passes.len(), 3);
        assert!(passes.iter().all(|p| *p == passes[0]));
    }

    #[test]
    fn zipf_background_favors_rank_one() {
        let bg = BackgroundProfile {
            n_users: 100,
            zipf_exponent: 1.0,
            n_destinations: 1000,
            rate_per_user: 50.0,
            duration: Duration::from_secs(10),
            seed: 11,
        };
        let events = gen_background_events(&bg).unwrap();
        let mut freq: HashMap<IpAddr, u64> = HashMap::new();
        for e in &events {
            *freq.entry(e.dst).or_default() += 1;
        }
        let top = freq.iter().max_by_key(|(_, c)| **c).unwrap();
        assert_eq!(*top.0, overlay_destination(0));
        // Zipf mass of rank 1 for s = 1, n = 1000: 1 / H_1000.
        let h: f64 = (1..=1000).map(|k| 1.0 / k as f64).sum();
        let share = *top.1 as f64 / events.len() as f64;
        assert!((share - 1.0 / h).abs() < 0.01, "share {share} vs {}", 1.0 / h);
    }

    #[test]
    fn merged_scan_stream_is_time_ordered() {
        let bg = BackgroundProfile {
            n_users: 10,
            zipf_exponent: 1.0,
            n_destinations: 50,
            rate_per_user: 5.0,
            duration: Duration::from_secs(2),
            seed: 1,
        };
        let events = gen_scan_stream(&scan_profile(20, 40.0, 2), &bg).unwrap();
        assert!(events.windows(2).all(|w| w[0].time <= w[1].time));
        assert_eq!(events.iter().filter(|e| e.role == Role::Attacker).count(), 80);
    }

    #[test]
    fn trace_roundtrip() {
        let p = PopulationProfile::new(40, 0.05, 2);
        let events = gen_dos_stream(&p, DestStrategy::Unallocated, &StreamShape::default()).unwrap();
        let mut buf = Vec::new();
        write_trace(&events, &mut buf).unwrap();
        assert_eq!(read_trace(&buf[..]).unwrap(), events);
    }

    #[test]
    fn trace_errors() {
        assert!(read_trace(&b"1 10.0.0.1 10.0.0.2\n"[..]).is_err());
        assert!(read_trace(&b"1 10.0.0.1 10.0.0.2 admin\n"[..]).is_err());
        assert!(read_trace(&b"5 10.0.0.1 10.0.0.2 legit\n4 10.0.0.1 10.0.0.2 legit\n"[..]).is_err());
        let ok = read_trace(&b"# header\n\n5 10.0.0.1 2001:db8::1 attacker\n"[..]).unwrap();
        assert_eq!(ok.len(), 1);
    }
}
