//! False-positive / false-negative sweep of the sketch-backed source limiter
//! over growing sketch sizes.

use rayon::prelude::*;

use crate::cms::{CellWidth, SketchDims};
use crate::limiter::{AddrKey, Backend, CmsSizing, FlagRule, LimiterConfig, SourceRateLimiter};
use crate::workload::{gen_miss_counts, PopulationProfile, SourceCount};
use crate::xtr::Role;

use super::ExperimentError;

/// When the depth steps up along the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DepthPhase {
    /// `d = 1 + ⌊i/2⌋`: depth grows at iterations 2, 4, 6, …
    #[default]
    Early,
    /// `d = ⌈i/2⌉`: depth grows at iterations 3, 5, 7, …
    Late,
}

impl DepthPhase {
    pub fn depth(self, iteration: u32) -> usize {
        match self {
            DepthPhase::Early => 1 + iteration as usize / 2,
            DepthPhase::Late => (iteration as usize).div_ceil(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_nodes: Vec<u32>,
    pub attacker_fractions: Vec<f64>,
    pub threshold: u64,
    pub w_start: usize,
    pub w_step: usize,
    pub depth_phase: DepthPhase,
    pub cell_width: CellWidth,
    pub iterations: u32,
    pub seeds: Vec<u64>,
    pub flag_rule: FlagRule,
    pub legit_miss_range: (u32, u32),
    pub attacker_miss_range: (u32, u32),
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_nodes: vec![50_000, 100_000, 500_000],
            attacker_fractions: vec![0.01, 0.10],
            threshold: 1000,
            w_start: 1000,
            w_step: 1000,
            depth_phase: DepthPhase::Early,
            cell_width: CellWidth::Two,
            iterations: 30,
            seeds: (1..=10).collect(),
            flag_rule: FlagRule::Exceeds,
            legit_miss_range: (1, 10),
            attacker_miss_range: (1000, 10_000),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidConfig(m.to_string()));
        if self.n_nodes.is_empty() || self.attacker_fractions.is_empty() || self.seeds.is_empty() {
            return bad("sweep lists (n_nodes, attacker_fractions, seeds) must be non-empty");
        }
        if self.iterations == 0 {
            return bad("sweep.iterations must be at least 1");
        }
        if self.threshold == 0 || self.w_start == 0 {
            return bad("sweep.threshold and sweep.w_start must be positive");
        }
        if self.threshold >= self.cell_width.max_value() as u64 {
            return bad("sweep.threshold must be below the cell maximum");
        }
        if self.n_nodes.contains(&0) {
            return bad("sweep.n_nodes entries must be positive");
        }
        if self.attacker_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return bad("sweep.attacker_fractions must lie in [0, 1]");
        }
        if self.legit_miss_range.0 > self.legit_miss_range.1 || self.attacker_miss_range.0 > self.attacker_miss_range.1 {
            return bad("miss ranges must be non-empty");
        }
        Ok(())
    }

    /// Sketch shape at 1-based `iteration`.
    pub fn dims(&self, iteration: u32) -> SketchDims {
        SketchDims {
            width: self.w_start + (iteration as usize - 1) * self.w_step,
            depth: self.depth_phase.depth(iteration),
        }
    }

    pub fn profile(&self, n_nodes: u32, fraction: f64, seed: u64) -> PopulationProfile {
        PopulationProfile {
            n_nodes,
            attacker_fraction: fraction,
            legit_miss_range: self.legit_miss_range.0..=self.legit_miss_range.1,
            attacker_miss_range: self.attacker_miss_range.0..=self.attacker_miss_range.1,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n_nodes: u32,
    pub attacker_fraction: f64,
    pub iteration: u32,
    pub w: usize,
    pub d: usize,
    pub size_bytes: usize,
    pub seed: u64,
    pub fp_rate: f64,
    pub fn_rate: f64,
    pub false_positives: u32,
    pub legit_total: u32,
}

/// One population, ready to be fed to sketches of different sizes.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub n_nodes: u32,
    pub attacker_fraction: f64,
    pub seed: u64,
    pub sources: Vec<SourceCount>,
    keys: Vec<AddrKey>,
}

impl SweepCell {
    pub fn new(cfg: &SweepConfig, n_nodes: u32, attacker_fraction: f64, seed: u64) -> Result<Self, ExperimentError> {
        let sources = gen_miss_counts(&cfg.profile(n_nodes, attacker_fraction, seed))
            .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        let keys = sources.iter().map(|s| AddrKey::from(s.addr)).collect();
        Ok(SweepCell {
            n_nodes,
            attacker_fraction,
            seed,
            sources,
            keys,
        })
    }

    /// Feeds every source's per-period total into a sketch-backed limiter of
    /// the iteration's size and scores its classification.
    pub fn evaluate(&self, cfg: &SweepConfig, iteration: u32) -> SweepRow {
        let dims = cfg.dims(iteration);
        let mut limiter_cfg = LimiterConfig::new(
            cfg.threshold,
            std::time::Duration::from_secs(1),
            Backend::Cms {
                sizing: CmsSizing::Dims(dims),
                cell_width: cfg.cell_width,
                seed: self.seed,
            },
        );
        limiter_cfg.flag_rule = cfg.flag_rule;
        let mut limiter = SourceRateLimiter::new(limiter_cfg).expect("sweep limiter config is valid");
        for (s, k) in self.sources.iter().zip(&self.keys) {
            limiter.add_misses(k.as_bytes(), s.count as u64);
        }
        let (mut legit, mut fp, mut attackers, mut missed) = (0u32, 0u32, 0u32, 0u32);
        for (s, k) in self.sources.iter().zip(&self.keys) {
            let flagged = limiter.is_flagged_key(k.as_bytes());
            match s.role {
                Role::Legit => {
                    legit += 1;
                    fp += flagged as u32;
                }
                Role::Attacker => {
                    attackers += 1;
                    // An attacker whose true total does not pass the threshold
                    // is within its allowance and is not counted as missed.
                    if !flagged && cfg.flag_rule.is_over(s.count as u64, cfg.threshold) {
                        missed += 1;
                    }
                }
            }
        }
        let rate = |num: u32, den: u32| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        SweepRow {
            n_nodes: self.n_nodes,
            attacker_fraction: self.attacker_fraction,
            iteration,
            w: dims.width,
            d: dims.depth,
            size_bytes: dims.memory_bytes(cfg.cell_width),
            seed: self.seed,
            fp_rate: rate(fp, legit),
            fn_rate: rate(missed, attackers),
            false_positives: fp,
            legit_total: legit,
        }
    }
}

/// Runs every (n_nodes, fraction, seed, iteration) combination. Cells run in
/// parallel; rows come back sorted by (n_nodes, fraction, w, d, seed).
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &n in &cfg.n_nodes {
        for &f in &cfg.attacker_fractions {
            for &s in &cfg.seeds {
                cells.push((n, f, s));
            }
        }
    }
    let per_cell: Result<Vec<Vec<SweepRow>>, ExperimentError> = cells
        .par_iter()
        .map(|&(n, f, s)| {
            let cell = SweepCell::new(cfg, n, f, s)?;
            Ok((1..=cfg.iterations).map(|i| cell.evaluate(cfg, i)).collect())
        })
        .collect();
    let mut rows: Vec<SweepRow> = per_cell?.into_iter().flatten().collect();
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        a.n_nodes
            .cmp(&b.n_nodes)
            .then(a.attacker_fraction.total_cmp(&b.attacker_fraction))
            .then(a.w.cmp(&b.w))
            .then(a.d.cmp(&b.d))
            .then(a.seed.cmp(&b.seed))
    });
}

/// Seed-averaged rates at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n_nodes: u32,
    pub attacker_fraction: f64,
    pub w: usize,
    pub d: usize,
    pub size_bytes: usize,
    pub mean_fp_rate: f64,
    pub max_fn_rate: f64,
    pub seeds: usize,
}

/// Averages sorted rows over seeds.
pub fn mean_by_point(rows: &[SweepRow]) -> Vec<SweepPoint> {
    let mut out: Vec<SweepPoint> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some(p)
                if p.n_nodes == r.n_nodes
                    && p.attacker_fraction == r.attacker_fraction
                    && p.w == r.w
                    && p.d == r.d =>
            {
                p.mean_fp_rate += r.fp_rate;
                p.max_fn_rate = p.max_fn_rate.max(r.fn_rate);
                p.seeds += 1;
            }
            _ => out.push(SweepPoint {
                n_nodes: r.n_nodes,
                attacker_fraction: r.attacker_fraction,
                w: r.w,
                d: r.d,
                size_bytes: r.size_bytes,
                mean_fp_rate: r.fp_rate,
                max_fn_rate: r.fn_rate,
                seeds: 1,
            }),
        }
    }
    for p in &mut out {
        p.mean_fp_rate /= p.seeds as f64;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_schedules() {
        let early: Vec<usize> = (1..=8).map(|i| DepthPhase::Early.depth(i)).collect();
        assert_eq!(early, [1, 2, 2, 3, 3, 4, 4, 5]);
        let late: Vec<usize> = (1..=8).map(|i| DepthPhase::Late.depth(i)).collect();
        assert_eq!(late, [1, 1, 2, 2, 3, 3, 4, 4]);
    }

    #[test]
    fn schedule_sizes() {
        let cfg = SweepConfig::default();
        let size = |i| cfg.dims(i).memory_bytes(CellWidth::Two);
        assert_eq!(cfg.dims(1), SketchDims { width: 1000, depth: 1 });
        assert_eq!(size(1), 2000);
        assert_eq!(cfg.dims(5), SketchDims { width: 5000, depth: 3 });
        assert_eq!(size(5), 30_000);
        assert_eq!(cfg.dims(7), SketchDims { width: 7000, depth: 4 });
        assert_eq!(size(7), 56_000);
        assert_eq!(size(12), 168_000);
        assert_eq!(size(16), 288_000);
        let late = SweepConfig {
            depth_phase: DepthPhase::Late,
            ..SweepConfig::default()
        };
        assert_eq!(late.dims(5).memory_bytes(CellWidth::Two), 30_000);
        assert_eq!(late.dims(7).memory_bytes(CellWidth::Two), 56_000);
    }

    #[test]
    fn invalid_configs() {
        let base = SweepConfig::default();
        for cfg in [
            SweepConfig { iterations: 0, ..base.clone() },
            SweepConfig { seeds: vec![], ..base.clone() },
            SweepConfig { n_nodes: vec![], ..base.clone() },
            SweepConfig { attacker_fractions: vec![2.0], ..base.clone() },
        ] {
            assert!(matches!(run_sweep(&cfg), Err(ExperimentError::InvalidConfig(_))));
        }
    }

    #[test]
    fn small_sweep_shape() {
        let cfg = SweepConfig {
            n_nodes: vec![2000],
            attacker_fractions: vec![0.01],
            iterations: 3,
            w_start: 100,
            w_step: 100,
            seeds: vec![1, 2],
            ..SweepConfig::default()
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.fn_rate == 0.0 && (0.0..=1.0).contains(&r.fp_rate)));
        assert!(rows.iter().all(|r| r.size_bytes == r.w * r.d * 2));
        let points = mean_by_point(&rows);
        assert_eq!(points.len(), 3);
        assert!(points.iter().all(|p| p.seeds == 2));
    }
}
