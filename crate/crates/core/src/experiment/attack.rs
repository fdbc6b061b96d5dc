//! Paired attack simulations: each seed is run with the defense on and off.
//!
//! For the DoS and overflow scenarios the defense is the per-source limiter;
//! for the scan scenario it is the LFU-Aging cache policy (against LRU).

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;

use crate::cms::{CellWidth, SketchDims};
use crate::limiter::{Backend, CmsSizing, LimiterConfig};
use crate::map_cache::{AgeMode, EidPrefix, Policy};
use crate::workload::{
    gen_dos_stream, gen_scan_stream, AttackTiming, BackgroundProfile, DestStrategy, PopulationProfile, ScanProfile,
    StreamShape,
};
use crate::xtr::{PacketEvent, XtrConfig, XtrMetrics, XtrState};

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    Dos,
    Overflow,
    Scan,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Dos, Scenario::Overflow, Scenario::Scan];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Dos => "dos",
            Scenario::Overflow => "overflow",
            Scenario::Scan => "scan",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dos" => Ok(Scenario::Dos),
            "overflow" => Ok(Scenario::Overflow),
            "scan" => Ok(Scenario::Scan),
            _ => Err(ExperimentError::InvalidConfig(format!("unknown scenario {s:?}"))),
        }
    }
}

/// A population flooding the control plane (DoS and overflow scenarios).
#[derive(Debug, Clone, PartialEq)]
pub struct FloodConfig {
    pub population: PopulationProfile,
    pub strategy: DestStrategy,
    pub shape: StreamShape,
    /// `source_limiter_enabled` is overridden per run.
    pub xtr: XtrConfig,
}

fn cms_limiter(threshold: u64, period: Duration, width: usize, depth: usize) -> LimiterConfig {
    LimiterConfig::new(
        threshold,
        period,
        Backend::Cms {
            sizing: CmsSizing::Dims(SketchDims { width, depth }),
            cell_width: CellWidth::Two,
            seed: 0,
        },
    )
}

impl FloodConfig {
    /// Attackers exhaust a shared destination budget that comfortably covers
    /// `T` per attacker plus all legitimate demand.
    pub fn dos_default() -> Self {
        let period = Duration::from_secs(1);
        FloodConfig {
            population: PopulationProfile::new(1000, 0.02, 0),
            strategy: DestStrategy::Unallocated,
            shape: StreamShape {
                period,
                periods: 2,
                ..StreamShape::default()
            },
            xtr: XtrConfig {
                cache_capacity: 256,
                source_limiter: cms_limiter(1000, period, 8000, 5),
                dest_budget: 30_000,
                dest_period: period,
                pending_capacity: 1 << 20,
                map_reply_latency: Duration::from_millis(40),
                ..XtrConfig::default()
            },
        }
    }

    /// Reply latency equals the period, so an unlimited attacker keeps a
    /// whole period of requests pending; the limiter caps each attacker at
    /// `T` per period, at most `2T` live across a boundary.
    pub fn overflow_default() -> Self {
        let period = Duration::from_secs(1);
        FloodConfig {
            population: PopulationProfile::new(1000, 0.01, 0),
            strategy: DestStrategy::Unallocated,
            shape: StreamShape {
                period,
                periods: 2,
                ..StreamShape::default()
            },
            xtr: XtrConfig {
                cache_capacity: 4096,
                source_limiter: cms_limiter(1000, period, 8000, 5),
                dest_budget: u64::MAX,
                dest_period: period,
                pending_capacity: 25_000,
                map_reply_latency: Duration::from_secs(1),
                ..XtrConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    /// Number of /24 overlay prefixes enumerated by the scanner.
    pub n_prefixes: u32,
    pub scan_rate: f64,
    pub n_scanners: u32,
    pub reshuffle_each_pass: bool,
    pub duration: Duration,
    pub n_users: u32,
    pub zipf_exponent: f64,
    pub n_destinations: u32,
    pub user_rate: f64,
    pub cache_capacity: usize,
    pub age_interval: Duration,
    pub age_mode: AgeMode,
    /// Source limiter and other pipeline settings; the cache policy is set per run.
    pub xtr: XtrConfig,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            n_prefixes: 4000,
            scan_rate: 200.0,
            n_scanners: 1,
            reshuffle_each_pass: true,
            duration: Duration::from_secs(120),
            n_users: 300,
            zipf_exponent: 1.0,
            n_destinations: 2000,
            user_rate: 1.0,
            cache_capacity: 500,
            age_interval: Duration::from_secs(30),
            age_mode: AgeMode::Halve,
            xtr: XtrConfig {
                source_limiter_enabled: false,
                pending_capacity: 1 << 20,
                ..XtrConfig::default()
            },
        }
    }
}

impl ScanConfig {
    /// Scanned prefixes: consecutive /24s in 11.0.0.0/8.
    pub fn prefixes(&self) -> Vec<EidPrefix> {
        (0..self.n_prefixes)
            .map(|i| EidPrefix::new(std::net::IpAddr::V4((0x0b00_0000u32 + (i << 8)).into()), 24))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_prefixes == 0 || self.n_prefixes > 1 << 16 {
            return Err(ExperimentError::InvalidConfig("scan.prefixes must be in 1..=65536".into()));
        }
        if self.cache_capacity == 0 || self.age_interval.is_zero() {
            return Err(ExperimentError::InvalidConfig("scan cache capacity and age interval must be positive".into()));
        }
        Ok(())
    }

    pub fn workload(&self, seed: u64) -> Result<Vec<PacketEvent>, ExperimentError> {
        let scan = ScanProfile {
            prefix_list: self.prefixes(),
            packet_rate: self.scan_rate,
            duration: self.duration,
            reshuffle_each_pass: self.reshuffle_each_pass,
            n_attackers: self.n_scanners,
            seed,
        };
        let bg = BackgroundProfile {
            n_users: self.n_users,
            zipf_exponent: self.zipf_exponent,
            n_destinations: self.n_destinations,
            rate_per_user: self.user_rate,
            duration: self.duration,
            seed: seed.wrapping_add(0x9e37_79b9),
        };
        Ok(gen_scan_stream(&scan, &bg)?)
    }

    pub fn xtr_config(&self, policy: Policy, seed: u64) -> XtrConfig {
        XtrConfig {
            cache_capacity: self.cache_capacity,
            cache_policy: policy,
            prefix_table: self.prefixes(),
            seed,
            ..self.xtr.clone()
        }
    }

    pub fn lfu_policy(&self) -> Policy {
        Policy::LfuAging {
            age_interval: self.age_interval,
            mode: self.age_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub dos: FloodConfig,
    pub overflow: FloodConfig,
    pub scan: ScanConfig,
    pub seeds: Vec<u64>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            dos: FloodConfig::dos_default(),
            overflow: FloodConfig::overflow_default(),
            scan: ScanConfig::default(),
            seeds: (1..=10).collect(),
        }
    }
}

/// One simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackRun {
    pub scenario: Scenario,
    pub seed: u64,
    pub defense: bool,
    pub config_hash: String,
    pub metrics: XtrMetrics,
}

/// Defense-on vs defense-off comparison for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSummary {
    pub scenario: Scenario,
    pub seed: u64,
    pub victim_admission_off: f64,
    pub victim_admission_on: f64,
    pub overflow_events_off: u64,
    pub overflow_events_on: u64,
    pub legit_hit_rate_off: f64,
    pub legit_hit_rate_on: f64,
    pub max_source_admissions_on: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport {
    pub scenario: Scenario,
    /// Sorted by (seed, defense off before on).
    pub runs: Vec<AttackRun>,
    pub summaries: Vec<AttackSummary>,
}

fn simulate(config: XtrConfig, workload: &[PacketEvent]) -> Result<(String, XtrMetrics), ExperimentError> {
    let hash = config.config_hash();
    let mut xtr = XtrState::new(config)?;
    let metrics = xtr.run(workload.iter().copied())?;
    Ok((hash, metrics))
}

/// Runs one flood configuration with the source limiter off and on.
pub fn run_flood_pair(scenario: Scenario, cfg: &FloodConfig, seed: u64) -> Result<(AttackRun, AttackRun), ExperimentError> {
    let profile = PopulationProfile {
        seed,
        ..cfg.population.clone()
    };
    let workload = gen_dos_stream(&profile, cfg.strategy, &cfg.shape)?;
    let mut runs = [false, true].into_iter().map(|defense| {
        let mut xcfg = cfg.xtr.clone();
        xcfg.seed = seed;
        xcfg.source_limiter_enabled = defense;
        if let Backend::Cms { seed: s, .. } = &mut xcfg.source_limiter.backend {
            *s = seed;
        }
        let (config_hash, metrics) = simulate(xcfg, &workload)?;
        Ok::<_, ExperimentError>(AttackRun {
            scenario,
            seed,
            defense,
            config_hash,
            metrics,
        })
    });
    let off = runs.next().unwrap()?;
    let on = runs.next().unwrap()?;
    Ok((off, on))
}

/// Runs the scan workload under LRU (defense off) and LFU-Aging (on).
pub fn run_scan_pair(cfg: &ScanConfig, seed: u64) -> Result<(AttackRun, AttackRun), ExperimentError> {
    cfg.validate()?;
    let workload = cfg.workload(seed)?;
    let run = |policy: Policy, defense: bool| -> Result<AttackRun, ExperimentError> {
        let (config_hash, metrics) = simulate(cfg.xtr_config(policy, seed), &workload)?;
        Ok(AttackRun {
            scenario: Scenario::Scan,
            seed,
            defense,
            config_hash,
            metrics,
        })
    };
    Ok((run(Policy::Lru, false)?, run(cfg.lfu_policy(), true)?))
}

fn summarize(off: &AttackRun, on: &AttackRun) -> AttackSummary {
    AttackSummary {
        scenario: off.scenario,
        seed: off.seed,
        victim_admission_off: off.metrics.legit.admission_ratio(),
        victim_admission_on: on.metrics.legit.admission_ratio(),
        overflow_events_off: off.metrics.total.nonce_table_overflow_events,
        overflow_events_on: on.metrics.total.nonce_table_overflow_events,
        legit_hit_rate_off: off.metrics.legit.hit_rate(),
        legit_hit_rate_on: on.metrics.legit.hit_rate(),
        max_source_admissions_on: on.metrics.max_source_admissions_per_period,
    }
}

/// Runs the paired simulations for every seed of `cfg.seeds`. Seeds run in
/// parallel; the report is ordered by seed.
pub fn run_attack(scenario: Scenario, cfg: &AttackConfig) -> Result<AttackReport, ExperimentError> {
    if cfg.seeds.is_empty() {
        return Err(ExperimentError::InvalidConfig("attack.seeds must be non-empty".into()));
    }
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let pairs: Result<Vec<(AttackRun, AttackRun)>, ExperimentError> = seeds
        .par_iter()
        .map(|&seed| match scenario {
            Scenario::Dos => run_flood_pair(Scenario::Dos, &cfg.dos, seed),
            Scenario::Overflow => run_flood_pair(Scenario::Overflow, &cfg.overflow, seed),
            Scenario::Scan => run_scan_pair(&cfg.scan, seed),
        })
        .collect();
    let pairs = pairs?;
    let summaries = pairs.iter().map(|(off, on)| summarize(off, on)).collect();
    let runs = pairs.into_iter().flat_map(|(off, on)| [off, on]).collect();
    Ok(AttackReport {
        scenario,
        runs,
        summaries,
    })
}

/// Attack timing names used by the config file.
pub fn parse_timing(s: &str) -> Result<AttackTiming, ExperimentError> {
    match s.split_once(':') {
        None if s == "uniform" => Ok(AttackTiming::Uniform),
        Some(("burst", f)) => f
            .parse()
            .map(|fraction| AttackTiming::FrontLoaded { fraction })
            .map_err(|_| ExperimentError::InvalidConfig(format!("bad burst fraction {f:?}"))),
        _ => Err(ExperimentError::InvalidConfig(format!(
            "timing must be uniform or burst:<fraction>, got {s:?}"
        ))),
    }
}
