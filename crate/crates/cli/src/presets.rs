//! Built-in sweep configurations.
//!
//! The `paper-40/60/80` presets encode the published simulation
//! parameters: lattice size, propagation length, and square bound scale
//! together (20 mm with a 16-site bound at 40x40, 30 mm with 24 at
//! 60x60, 40 mm with 32 at 80x80).

use qperc_core::ensemble::{CouplingConfig, Regime, SeedMode, SweepConfig, CONFIG_SCHEMA};
use qperc_core::lattice::{LatticeSpec, SpanRule};
use qperc_core::propagator::Method;
use qperc_core::{Error, Result};

pub const NAMES: [&str; 6] = [
    "paper-40",
    "paper-60",
    "paper-80",
    "fig3-40",
    "classical-40",
    "spanning-100",
];

/// Inclusive arithmetic grid `start, start + step, .., stop`.
///
/// Values are computed as `start + k * step` with the last snapped to
/// `stop`, so grids are reproducible from the three numbers alone.
pub fn p_grid_range(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::validation(format!("grid step {step} must be > 0")));
    }
    if !(stop >= start) {
        return Err(Error::validation(format!(
            "grid stop {stop} is below start {start}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    let mut grid = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let v = start + k as f64 * step;
        grid.push(if (v - stop).abs() <= step * 1e-9 { stop } else { v });
    }
    Ok(grid)
}

pub fn by_name(name: &str) -> Result<SweepConfig<f64>> {
    let cfg = match name {
        "paper-40" => paper(40, 20.0, 16, 100),
        "paper-60" => paper(60, 30.0, 24, 40),
        "paper-80" => paper(80, 40.0, 32, 40),
        "fig3-40" => {
            let mut cfg = paper(40, 20.0, 16, 40);
            cfg.p_grid = p_grid_range(0.10, 0.10, 1.00)?;
            cfg
        }
        "classical-40" => {
            let mut cfg = paper(40, 20.0, 16, 100);
            cfg.regime = Regime::Classical;
            cfg.p_grid = p_grid_range(0.40, 0.05, 1.00)?;
            cfg
        }
        "spanning-100" => {
            let mut cfg = paper(100, 20.0, 16, 1000);
            cfg.regime = Regime::Classical;
            cfg.p_grid = p_grid_range(0.64, 0.01, 0.76)?;
            cfg.t_max_steps = Some(40);
            cfg
        }
        other => {
            return Err(Error::validation(format!(
                "unknown preset {other:?}; known presets: {}",
                NAMES.join(", ")
            )))
        }
    };
    cfg.validate().expect("presets are valid");
    Ok(cfg)
}

fn paper(size: usize, z_max_mm: f64, bound_side: usize, trials_per_p: usize) -> SweepConfig<f64> {
    SweepConfig {
        schema: CONFIG_SCHEMA.to_string(),
        lattice: LatticeSpec::new(size, size, 15.0),
        coupling: CouplingConfig::from_ratio(0.45, 0.15),
        z_max_mm,
        z_step_mm: 0.5,
        bound_side,
        portion_threshold: 0.1,
        p_grid: p_grid_range(0.50, 0.05, 1.00).expect("static grid"),
        trials_per_p,
        master_seed: 20260818,
        seed_mode: SeedMode::Coupled,
        propagator: Method::Chebyshev,
        regime: Regime::Quantum,
        span_rule: SpanRule::CornerToCorner,
        t_max_steps: None,
    }
}
