use std::collections::HashMap;

use xtrsim::cms::CountMinSketch;
use xtrsim::experiment::{run_sweep, sort_rows, SweepCell, SweepConfig};
use xtrsim::limiter::AddrKey;
use xtrsim::xtr::Role;

fn small() -> SweepConfig {
    SweepConfig {
        n_nodes: vec![5_000],
        attacker_fractions: vec![0.01, 0.1],
        iterations: 6,
        seeds: vec![1, 2],
        ..SweepConfig::default()
    }
}

/// Every flagged legitimate user has a true total at or below the threshold
/// and a sketch estimate above it: false positives come from collisions only.
#[test]
fn false_positives_are_collisions() {
    let cfg = small();
    for &f in &cfg.attacker_fractions {
        let cell = SweepCell::new(&cfg, 5_000, f, 7).unwrap();
        let exact: HashMap<_, _> = cell.sources.iter().map(|s| (s.addr, s.count as u64)).collect();
        for i in 1..=cfg.iterations {
            let row = cell.evaluate(&cfg, i);
            let mut sketch = CountMinSketch::new(cfg.dims(i), cfg.cell_width, 7);
            for s in &cell.sources {
                sketch.increment(AddrKey::from(s.addr).as_bytes(), s.count as u64);
            }
            let mut fp = 0;
            for s in cell.sources.iter().filter(|s| s.role == Role::Legit) {
                let est = sketch.estimate(AddrKey::from(s.addr).as_bytes());
                assert!(est >= exact[&s.addr]);
                if est > cfg.threshold {
                    assert!(exact[&s.addr] <= cfg.threshold);
                    fp += 1;
                }
            }
            assert_eq!(fp, row.false_positives, "iteration {i}");
            assert_eq!(row.fn_rate, 0.0);
        }
    }
}

#[test]
fn rows_are_sorted_and_complete() {
    let cfg = small();
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 6);
    let mut resorted = rows.clone();
    resorted.reverse();
    sort_rows(&mut resorted);
    assert_eq!(resorted, rows);
    for r in &rows {
        assert_eq!(r.size_bytes, r.w * r.d * 2);
        assert_eq!(r.legit_total, 5_000 - (5_000.0 * r.attacker_fraction).round() as u32);
    }
}

#[test]
fn invalid_sweeps_are_rejected() {
    for cfg in [
        SweepConfig { seeds: vec![], ..small() },
        SweepConfig { n_nodes: vec![], ..small() },
        SweepConfig { iterations: 0, ..small() },
        SweepConfig { attacker_fractions: vec![1.5], ..small() },
        SweepConfig { threshold: 70_000, ..small() },
    ] {
        assert!(run_sweep(&cfg).is_err(), "{cfg:?}");
    }
}
