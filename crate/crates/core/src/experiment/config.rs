//! Flat `key=value` experiment configuration.
//!
//! Keys carry a section prefix (`sweep.`, `attack.`, `dos.`, `overflow.`,
//! `scan.`, `replay.`). Lists are comma separated, ranges are `lo-hi`.
//! Blank lines and `#` comments are ignored; unknown keys are errors.

use std::time::Duration;

use crate::cms::{CellWidth, SketchDims, SketchParams};
use crate::limiter::{Backend, CmsSizing, DestMode, FlagRule, SourceKey};
use crate::map_cache::{AgeMode, Policy};
use crate::workload::DestStrategy;
use crate::xtr::XtrConfig;

use super::attack::{parse_timing, AttackConfig, FloodConfig};
use super::sweep::{DepthPhase, SweepConfig};
use super::ExperimentError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub sweep: SweepConfig,
    pub attack: AttackConfig,
    /// Pipeline used by `replay`.
    pub replay: XtrConfig,
}

fn invalid(key: &str, value: &str, what: &str) -> ExperimentError {
    ExperimentError::InvalidConfig(format!("{key}={value}: {what}"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ExperimentError> {
    v.parse().map_err(|_| invalid(key, v, "not a valid number"))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, ExperimentError> {
    v.split(',').map(|x| num(key, x.trim())).collect()
}

fn range(key: &str, v: &str) -> Result<(u32, u32), ExperimentError> {
    let (lo, hi) = v.split_once('-').ok_or_else(|| invalid(key, v, "expected lo-hi"))?;
    let (lo, hi) = (num(key, lo.trim())?, num(key, hi.trim())?);
    if lo > hi {
        return Err(invalid(key, v, "empty range"));
    }
    Ok((lo, hi))
}

fn millis(key: &str, v: &str) -> Result<Duration, ExperimentError> {
    Ok(Duration::from_secs_f64(num::<f64>(key, v)? / 1000.0))
}

fn flag_rule(key: &str, v: &str) -> Result<FlagRule, ExperimentError> {
    match v {
        "exceeds" => Ok(FlagRule::Exceeds),
        "reaches" => Ok(FlagRule::Reaches),
        _ => Err(invalid(key, v, "expected exceeds or reaches")),
    }
}

fn cell_width(key: &str, v: &str) -> Result<CellWidth, ExperimentError> {
    CellWidth::from_bytes(num(key, v)?).ok_or_else(|| invalid(key, v, "cell width must be 1, 2 or 4"))
}

fn set_cms(backend: &mut Backend, f: impl FnOnce(&mut CmsSizing, &mut CellWidth)) {
    if let Backend::ExactTable = backend {
        *backend = Backend::Cms {
            sizing: CmsSizing::Dims(SketchDims { width: 8000, depth: 5 }),
            cell_width: CellWidth::Two,
            seed: 0,
        };
    }
    if let Backend::Cms { sizing, cell_width, .. } = backend {
        f(sizing, cell_width);
    }
}

/// Applies one pipeline key (shared by `dos.`, `overflow.`, `scan.` and
/// `replay.`). Returns `false` if the key is not a pipeline key.
fn apply_xtr_key(cfg: &mut XtrConfig, key: &str, field: &str, v: &str) -> Result<bool, ExperimentError> {
    match field {
        "cache_capacity" => cfg.cache_capacity = num(key, v)?,
        "cache_policy" => {
            cfg.cache_policy = match v {
                "lru" => Policy::Lru,
                "lfu" | "lfu-aging" => Policy::LfuAging {
                    age_interval: Duration::from_secs(30),
                    mode: AgeMode::Halve,
                },
                _ => return Err(invalid(key, v, "expected lru or lfu-aging")),
            }
        }
        "limiter" => cfg.source_limiter_enabled = parse_bool(key, v)?,
        "threshold" => cfg.source_limiter.threshold = num(key, v)?,
        "limiter_period_ms" => cfg.source_limiter.period = millis(key, v)?,
        "flag_rule" => cfg.source_limiter.flag_rule = flag_rule(key, v)?,
        "source_key" => {
            cfg.source_limiter.key = match v.split_once(':') {
                None if v == "address" => SourceKey::Address,
                Some(("prefix", l)) => SourceKey::Prefix(num(key, l)?),
                _ => return Err(invalid(key, v, "expected address or prefix:<len>")),
            }
        }
        "limiter_backend" => match v {
            "exact" => cfg.source_limiter.backend = Backend::ExactTable,
            "cms" => set_cms(&mut cfg.source_limiter.backend, |_, _| ()),
            _ => return Err(invalid(key, v, "expected exact or cms")),
        },
        "cms_width" | "cms_depth" => {
            let n: usize = num(key, v)?;
            let is_width = field == "cms_width";
            set_cms(&mut cfg.source_limiter.backend, |sizing, _| {
                let mut dims = match sizing {
                    CmsSizing::Dims(d) => *d,
                    CmsSizing::Params(_) => SketchDims { width: 8000, depth: 5 },
                };
                if is_width {
                    dims.width = n;
                } else {
                    dims.depth = n;
                }
                *sizing = CmsSizing::Dims(dims);
            });
        }
        "cms_epsilon" | "cms_delta" => {
            let x: f64 = num(key, v)?;
            let is_eps = field == "cms_epsilon";
            set_cms(&mut cfg.source_limiter.backend, |sizing, _| {
                let mut p = match sizing {
                    CmsSizing::Params(p) => *p,
                    CmsSizing::Dims(_) => SketchParams { epsilon: 0.002, delta: 0.5 },
                };
                if is_eps {
                    p.epsilon = x;
                } else {
                    p.delta = x;
                }
                *sizing = CmsSizing::Params(p);
            });
        }
        "cms_cell_bytes" => {
            let w = cell_width(key, v)?;
            set_cms(&mut cfg.source_limiter.backend, |_, cw| *cw = w);
        }
        "dest_budget" => cfg.dest_budget = num(key, v)?,
        "dest_period_ms" => cfg.dest_period = millis(key, v)?,
        "dest_mode" => {
            cfg.dest_mode = match v {
                "shared" => DestMode::Shared,
                "per-prefix" => DestMode::PerPrefix,
                _ => return Err(invalid(key, v, "expected shared or per-prefix")),
            }
        }
        "pending_capacity" => cfg.pending_capacity = num(key, v)?,
        "latency_ms" => cfg.map_reply_latency = millis(key, v)?,
        "pending_timeout_ms" => cfg.pending_timeout = Some(millis(key, v)?),
        "reply_loss" => cfg.reply_loss = num(key, v)?,
        "seed" => cfg.seed = num(key, v)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ExperimentError> {
    match v {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(invalid(key, v, "expected true or false")),
    }
}

fn apply_flood_key(cfg: &mut FloodConfig, key: &str, field: &str, v: &str) -> Result<(), ExperimentError> {
    match field {
        "n_nodes" => cfg.population.n_nodes = num(key, v)?,
        "attacker_fraction" => cfg.population.attacker_fraction = num(key, v)?,
        "legit_miss_range" => {
            let (lo, hi) = range(key, v)?;
            cfg.population.legit_miss_range = lo..=hi;
        }
        "attacker_miss_range" => {
            let (lo, hi) = range(key, v)?;
            cfg.population.attacker_miss_range = lo..=hi;
        }
        "strategy" => {
            cfg.strategy = match v {
                "unallocated" => DestStrategy::Unallocated,
                "nonpopular" => DestStrategy::NonPopular,
                "negative" => DestStrategy::NegativePrefixes,
                _ => return Err(invalid(key, v, "expected unallocated, nonpopular or negative")),
            }
        }
        "timing" => cfg.shape.timing = parse_timing(v)?,
        "periods" => cfg.shape.periods = num(key, v)?,
        "popular_pool" => cfg.shape.popular_pool = num(key, v)?,
        "nonpopular_universe" => cfg.shape.nonpopular_universe = num(key, v)?,
        // One period drives the stream, the source limiter and the destination budget.
        "period_ms" => {
            let p = millis(key, v)?;
            cfg.shape.period = p;
            cfg.xtr.source_limiter.period = p;
            cfg.xtr.dest_period = p;
        }
        _ => {
            if !apply_xtr_key(&mut cfg.xtr, key, field, v)? {
                return Err(ExperimentError::InvalidConfig(format!("unknown key {key}")));
            }
        }
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parses a config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = ExperimentConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ExperimentError::InvalidConfig(format!("line {}: expected key=value", n + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ExperimentError> {
        let (section, field) = key
            .split_once('.')
            .ok_or_else(|| ExperimentError::InvalidConfig(format!("key {key} lacks a section prefix")))?;
        let unknown = || ExperimentError::InvalidConfig(format!("unknown key {key}"));
        match section {
            "sweep" => {
                let s = &mut self.sweep;
                match field {
                    "n_nodes" => s.n_nodes = list(key, v)?,
                    "attacker_fractions" => s.attacker_fractions = list(key, v)?,
                    "threshold" => s.threshold = num(key, v)?,
                    "w_start" => s.w_start = num(key, v)?,
                    "w_step" => s.w_step = num(key, v)?,
                    "depth_phase" => {
                        s.depth_phase = match v {
                            "early" => DepthPhase::Early,
                            "late" => DepthPhase::Late,
                            _ => return Err(invalid(key, v, "expected early or late")),
                        }
                    }
                    "cell_width_bytes" => s.cell_width = cell_width(key, v)?,
                    "iterations" => s.iterations = num(key, v)?,
                    "seeds" => s.seeds = list(key, v)?,
                    "flag_rule" => s.flag_rule = flag_rule(key, v)?,
                    "legit_miss_range" => s.legit_miss_range = range(key, v)?,
                    "attacker_miss_range" => s.attacker_miss_range = range(key, v)?,
                    _ => return Err(unknown()),
                }
            }
            "attack" => match field {
                "seeds" => self.attack.seeds = list(key, v)?,
                _ => return Err(unknown()),
            },
            "dos" => apply_flood_key(&mut self.attack.dos, key, field, v)?,
            "overflow" => apply_flood_key(&mut self.attack.overflow, key, field, v)?,
            "scan" => {
                let s = &mut self.attack.scan;
                match field {
                    "prefixes" => s.n_prefixes = num(key, v)?,
                    "rate" => s.scan_rate = num(key, v)?,
                    "scanners" => s.n_scanners = num(key, v)?,
                    "reshuffle" => s.reshuffle_each_pass = parse_bool(key, v)?,
                    "duration_s" => s.duration = Duration::from_secs_f64(num(key, v)?),
                    "users" => s.n_users = num(key, v)?,
                    "zipf" => s.zipf_exponent = num(key, v)?,
                    "destinations" => s.n_destinations = num(key, v)?,
                    "user_rate" => s.user_rate = num(key, v)?,
                    "cache_capacity" => s.cache_capacity = num(key, v)?,
                    "age_interval_ms" => s.age_interval = millis(key, v)?,
                    "age_mode" => {
                        s.age_mode = match v {
                            "halve" => AgeMode::Halve,
                            "zero" => AgeMode::Zero,
                            _ => return Err(invalid(key, v, "expected halve or zero")),
                        }
                    }
                    _ => {
                        if !apply_xtr_key(&mut s.xtr, key, field, v)? {
                            return Err(unknown());
                        }
                    }
                }
            }
            "replay" => {
                if !apply_xtr_key(&mut self.replay, key, field, v)? {
                    return Err(unknown());
                }
            }
            _ => return Err(unknown()),
        }
        Ok(())
    }

    /// Overrides sweep and attack seeds with `base, base+1, …, base+count-1`.
    pub fn override_seeds(&mut self, base: Option<u64>, count: Option<u64>) {
        if base.is_none() && count.is_none() {
            return;
        }
        let base = base.unwrap_or(1);
        let count = count.unwrap_or(10);
        let seeds: Vec<u64> = (0..count).map(|i| base + i).collect();
        self.sweep.seeds = seeds.clone();
        self.attack.seeds = seeds;
        self.replay.seed = base;
    }
}
