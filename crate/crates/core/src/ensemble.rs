//! Monte Carlo ensembles over the occupation probability grid.
//!
//! Three sweep kinds share the seeding and counting machinery:
//!
//! * quantum transport sweeps, counting bound-escape events;
//! * classical flow sweeps, building the ensemble width curve and its
//!   knee;
//! * classical spanning sweeps, counting spanning clusters on
//!   unconditioned lattices.
//!
//! Trial seeds derive from `(master_seed, p_index, trial_index)` alone,
//! so results are independent of execution order and thread count.

use crate::classical::{flow_front, knee_estimate, KneeOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::{CouplingModel, Hamiltonian};
use crate::lattice::{Lattice, LatticeSpec, SpanRule};
use crate::observables::{bound_fraction, intensities, ipr, percolation_event};
use crate::propagator::{delta_state, evolve_trace, Method, PropagatorOptions};
use crate::rng;
use crate::scalar::{lit, Scalar};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const CONFIG_SCHEMA: &str = "qperc-config/1";

/// How trial seeds relate across the probability grid.
///
/// `Coupled` feeds every grid point the same seed stream, so the
/// occupancy masks at different P are nested realizations of the same
/// uniform field and transition curves are monotone realization by
/// realization. `PerProbability` decorrelates the grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    #[default]
    Coupled,
    PerProbability,
}

/// Which physical model a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    #[default]
    Quantum,
    Classical,
}

/// Coupling parameters in configuration form.
///
/// Either the next-nearest ratio or the decay constant may be given;
/// leaving both out selects the default ratio of 0.15.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
pub struct CouplingConfig<T: Scalar> {
    pub t1_per_mm: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_ratio: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_per_um: Option<T>,
}

impl<T: Scalar> CouplingConfig<T> {
    pub fn from_ratio(t1_per_mm: T, t2_ratio: T) -> Self {
        CouplingConfig {
            t1_per_mm,
            t2_ratio: Some(t2_ratio),
            beta_per_um: None,
        }
    }

    pub fn resolve(&self, pitch_um: T) -> Result<CouplingModel<T>> {
        match (self.t2_ratio, self.beta_per_um) {
            (Some(_), Some(_)) => Err(Error::validation(
                "give either t2_ratio or beta_per_um, not both",
            )),
            (None, Some(beta)) => CouplingModel::new(self.t1_per_mm, beta, pitch_um),
            (ratio, None) => CouplingModel::from_ratio(
                self.t1_per_mm,
                ratio.unwrap_or_else(|| lit::<T>(0.15)),
                pitch_um,
            ),
        }
    }
}

/// Full description of one sweep experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
pub struct SweepConfig<T: Scalar> {
    /// Config format tag, currently `qperc-config/1`.
    pub schema: String,
    pub lattice: LatticeSpec<T>,
    pub coupling: CouplingConfig<T>,
    pub z_max_mm: T,
    pub z_step_mm: T,
    /// Side of the square bound in index units.
    pub bound_side: usize,
    /// Escaped-intensity fraction that counts as percolation.
    pub portion_threshold: T,
    pub p_grid: Vec<T>,
    pub trials_per_p: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub seed_mode: SeedMode,
    #[serde(default)]
    pub propagator: Method,
    #[serde(default)]
    pub regime: Regime,
    #[serde(default)]
    pub span_rule: SpanRule,
    /// Classical flow steps; defaults to `2 * z_max_mm` per step-length
    /// calibration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max_steps: Option<usize>,
}

impl<T: Scalar> SweepConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::validation(format!(
                "unsupported config schema {:?}, expected {:?}",
                self.schema, CONFIG_SCHEMA
            )));
        }
        self.lattice.validate()?;
        self.coupling.resolve(self.lattice.pitch_um)?;
        if !(self.z_step_mm > T::zero()) || !(self.z_max_mm >= self.z_step_mm) {
            return Err(Error::validation(
                "need z_step_mm > 0 and z_max_mm >= z_step_mm",
            ));
        }
        if self.bound_side == 0
            || !self.bound_side.is_multiple_of(2)
            || self.bound_side > self.lattice.rows.min(self.lattice.cols)
        {
            return Err(Error::validation(format!(
                "bound_side must be even, positive and fit in the lattice, got {}",
                self.bound_side
            )));
        }
        if !(self.portion_threshold > T::zero() && self.portion_threshold < T::one()) {
            return Err(Error::validation("portion_threshold must be in (0, 1)"));
        }
        if self.p_grid.is_empty() {
            return Err(Error::validation("p_grid is empty"));
        }
        for &p in &self.p_grid {
            if !(p > T::zero() && p <= T::one()) {
                return Err(Error::validation(format!(
                    "grid probability {p} outside (0, 1]"
                )));
            }
        }
        for w in self.p_grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::validation("p_grid must be strictly increasing"));
            }
        }
        if self.trials_per_p == 0 {
            return Err(Error::validation("trials_per_p must be positive"));
        }
        Ok(())
    }

    /// Propagation sample grid, `z_step, 2 z_step, .., z_max`.
    pub fn z_grid(&self) -> Vec<T> {
        let mut out = Vec::new();
        let mut k = 1usize;
        let eps = self.z_step_mm * lit::<T>(1e-9);
        loop {
            let z = lit::<T>(k as f64) * self.z_step_mm;
            if z > self.z_max_mm + eps {
                break;
            }
            out.push(z);
            k += 1;
        }
        out
    }

    /// Classical flow duration in steps.
    pub fn t_max(&self) -> usize {
        self.t_max_steps.unwrap_or_else(|| {
            let z = self.z_max_mm.to_f64().unwrap_or(0.0);
            (2.0 * z).round() as usize
        })
    }

    pub fn propagator_options(&self) -> PropagatorOptions<T> {
        PropagatorOptions {
            method: self.propagator,
            ..Default::default()
        }
    }

    fn seed_stream(&self, p_index: usize) -> u64 {
        match self.seed_mode {
            SeedMode::Coupled => 0,
            SeedMode::PerProbability => p_index as u64,
        }
    }

    /// Seed of one trial under the configured seed mode.
    pub fn trial_seed(&self, p_index: usize, trial_index: usize) -> u64 {
        rng::trial_seed(
            self.master_seed,
            self.seed_stream(p_index),
            trial_index as u64,
        )
    }
}

/// One quantum trial for the audit stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrialRecord<T: Scalar> {
    pub p_index: usize,
    pub p: T,
    pub trial_index: usize,
    pub seed: u64,
    /// `(z, IPR)` samples, starting at `z = 0`.
    pub ipr_trace: Vec<(T, T)>,
    /// Escaped-intensity fraction at `z_max`.
    pub final_bound_fraction: T,
    pub percolated: bool,
}

/// Transition statistics of one probability grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PStats<T: Scalar> {
    pub p: T,
    /// Event probability estimate `n_events / n_trials`.
    pub pr: T,
    /// Binomial standard error `sqrt(pr (1 - pr) / n_trials)`.
    pub dpr: T,
    pub n_events: usize,
    pub n_trials: usize,
}

/// Interpolated percolation span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SpanEstimate<T: Scalar> {
    pub p10: T,
    pub p90: T,
    pub width: T,
}

/// Quantum sweep output.
#[derive(Debug, Clone)]
pub struct QuantumSweep<T: Scalar> {
    pub per_p: Vec<PStats<T>>,
    pub trials: Vec<TrialRecord<T>>,
    pub threshold: Option<T>,
    pub span: Option<SpanEstimate<T>>,
}

/// Runs every `(P, trial)` pair of a quantum sweep.
///
/// `jobs = 0` uses one rayon worker per CPU; any other value pins the
/// worker count. Results are identical for every choice.
pub fn run_quantum_sweep<T: Scalar>(cfg: &SweepConfig<T>, jobs: usize) -> Result<QuantumSweep<T>> {
    cfg.validate()?;
    let trials = run_pairs(cfg, jobs, run_quantum_trial)?;
    let events: Vec<bool> = trials.iter().map(|t| t.percolated).collect();
    let per_p = transition_stats(cfg, &events);
    let (threshold, span) = threshold_and_span(&per_p);
    Ok(QuantumSweep {
        per_p,
        trials,
        threshold,
        span,
    })
}

fn run_quantum_trial<T: Scalar>(
    cfg: &SweepConfig<T>,
    p_index: usize,
    trial_index: usize,
) -> Result<TrialRecord<T>> {
    let p = cfg.p_grid[p_index];
    let seed = cfg.trial_seed(p_index, trial_index);
    let run = || -> Result<TrialRecord<T>> {
        let lattice = Lattice::generate(cfg.lattice, p, seed)?;
        let coupling = cfg.coupling.resolve(cfg.lattice.pitch_um)?;
        let h = Hamiltonian::build(&lattice, &coupling)?;
        let inj = h
            .dense_index_of(&lattice, lattice.injection())
            .expect("injection site is forced occupied");
        let psi0 = delta_state::<T>(h.dim(), inj);
        let zs = cfg.z_grid();
        let states = evolve_trace(&h, &psi0, &zs, &cfg.propagator_options())?;

        let mut ipr_trace = Vec::with_capacity(zs.len() + 1);
        ipr_trace.push((T::zero(), ipr(&intensities(&psi0))?));
        for (&z, state) in zs.iter().zip(&states) {
            ipr_trace.push((z, ipr(&intensities(state))?));
        }
        let final_intensity = intensities(states.last().expect("z grid nonempty"));
        let escaped = bound_fraction(
            &lattice,
            h.site_order(),
            &final_intensity,
            cfg.bound_side / 2,
        )?;
        Ok(TrialRecord {
            p_index,
            p,
            trial_index,
            seed,
            ipr_trace,
            final_bound_fraction: escaped,
            percolated: percolation_event(escaped, cfg.portion_threshold),
        })
    };
    run().map_err(|e| wrap_trial_error(e, p_index, trial_index))
}

/// One classical flow trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ClassicalTrialRecord<T: Scalar> {
    pub p_index: usize,
    pub p: T,
    pub trial_index: usize,
    pub seed: u64,
    /// Sites reached after `t_max` steps.
    pub final_front_size: usize,
    /// `1 / final_front_size`.
    pub ipr: T,
}

/// Classical flow statistics of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ClassicalPStats<T: Scalar> {
    pub p: T,
    /// Ensemble mean of the front size at `t_max`.
    pub mean_n: T,
    /// Ensemble inverse participation ratio `1 / mean_n`.
    pub ipr_ens: T,
    /// Ensemble effective width `sqrt(mean_n)`.
    pub w_eff: T,
    pub n_trials: usize,
}

/// Classical flow sweep output.
#[derive(Debug, Clone)]
pub struct ClassicalSweep<T: Scalar> {
    pub per_p: Vec<ClassicalPStats<T>>,
    /// `mean_front[p][t]` is the ensemble mean front size after `t` steps.
    pub mean_front: Vec<Vec<T>>,
    pub trials: Vec<ClassicalTrialRecord<T>>,
    pub knee: Option<T>,
    /// Why the knee is absent, when it is.
    pub knee_message: Option<String>,
}

/// Runs the classical flow ensemble and locates the knee of the
/// ensemble IPR curve.
pub fn run_classical_sweep<T: Scalar>(
    cfg: &SweepConfig<T>,
    jobs: usize,
) -> Result<ClassicalSweep<T>> {
    cfg.validate()?;
    let t_max = cfg.t_max();
    let fronts = run_pairs(cfg, jobs, |cfg, p_index, trial_index| {
        let p = cfg.p_grid[p_index];
        let seed = cfg.trial_seed(p_index, trial_index);
        let lattice = Lattice::generate(cfg.lattice, p, seed)
            .map_err(|e| wrap_trial_error(e, p_index, trial_index))?;
        flow_front(&lattice, t_max).map_err(|e| wrap_trial_error(e, p_index, trial_index))
    })?;

    let n_p = cfg.p_grid.len();
    let n_trials = cfg.trials_per_p;
    let mut mean_front = vec![vec![T::zero(); t_max + 1]; n_p];
    let mut per_p = Vec::with_capacity(n_p);
    let mut trials = Vec::with_capacity(fronts.len());
    let inv_trials = lit::<T>(1.0 / n_trials as f64);
    for (p_index, &p) in cfg.p_grid.iter().enumerate() {
        for trial_index in 0..n_trials {
            let front = &fronts[p_index * n_trials + trial_index];
            for (t, &n) in front.sizes.iter().enumerate() {
                mean_front[p_index][t] += lit::<T>(n as f64) * inv_trials;
            }
            let final_n = front.final_size();
            trials.push(ClassicalTrialRecord {
                p_index,
                p,
                trial_index,
                seed: cfg.trial_seed(p_index, trial_index),
                final_front_size: final_n,
                ipr: T::one() / lit::<T>(final_n as f64),
            });
        }
        let mean_n = mean_front[p_index][t_max];
        per_p.push(ClassicalPStats {
            p,
            mean_n,
            ipr_ens: T::one() / mean_n,
            w_eff: num_traits::Float::sqrt(mean_n),
            n_trials,
        });
    }

    let curve: Vec<T> = per_p.iter().map(|s| s.ipr_ens).collect();
    let (knee, knee_message) = match knee_estimate(&cfg.p_grid, &curve, &KneeOptions::default()) {
        Ok(k) => (Some(k), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ClassicalSweep {
        per_p,
        mean_front,
        trials,
        knee,
        knee_message,
    })
}

/// Spanning sweep output.
#[derive(Debug, Clone)]
pub struct SpanningSweep<T: Scalar> {
    pub per_p: Vec<PStats<T>>,
    /// Probability where the spanning curve crosses one half.
    pub crossing: Option<T>,
}

/// Counts spanning clusters on unconditioned lattices.
pub fn run_spanning_sweep<T: Scalar>(
    cfg: &SweepConfig<T>,
    jobs: usize,
) -> Result<SpanningSweep<T>> {
    cfg.validate()?;
    let events = run_pairs(cfg, jobs, |cfg, p_index, trial_index| {
        let p = cfg.p_grid[p_index];
        let seed = cfg.trial_seed(p_index, trial_index);
        let lattice = Lattice::generate_unconditioned(cfg.lattice, p, seed)
            .map_err(|e| wrap_trial_error(e, p_index, trial_index))?;
        Ok(lattice.spans(cfg.span_rule))
    })?;
    let per_p = transition_stats(cfg, &events);
    let crossing = crossing_probability(&per_p, lit::<T>(0.5));
    Ok(SpanningSweep { per_p, crossing })
}

fn run_pairs<T, R, F>(cfg: &SweepConfig<T>, jobs: usize, trial: F) -> Result<Vec<R>>
where
    T: Scalar,
    R: Send,
    F: Fn(&SweepConfig<T>, usize, usize) -> Result<R> + Sync,
{
    let pairs: Vec<(usize, usize)> = (0..cfg.p_grid.len())
        .flat_map(|p| (0..cfg.trials_per_p).map(move |t| (p, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    pool.install(|| {
        pairs
            .par_iter()
            .map(|&(p, t)| trial(cfg, p, t))
            .collect::<Result<Vec<R>>>()
    })
}

fn wrap_trial_error(e: Error, p_index: usize, trial_index: usize) -> Error {
    match e {
        Error::Propagation { .. } => e,
        other => Error::Propagation {
            p_index,
            trial_index,
            message: other.to_string(),
        },
    }
}

/// Folds per-trial events into per-probability statistics.
fn transition_stats<T: Scalar>(cfg: &SweepConfig<T>, events: &[bool]) -> Vec<PStats<T>> {
    let n = cfg.trials_per_p;
    cfg.p_grid
        .iter()
        .enumerate()
        .map(|(p_index, &p)| {
            let n_events = events[p_index * n..(p_index + 1) * n]
                .iter()
                .filter(|&&e| e)
                .count();
            let pr = lit::<T>(n_events as f64 / n as f64);
            let dpr = num_traits::Float::sqrt(pr * (T::one() - pr) / lit::<T>(n as f64));
            PStats {
                p,
                pr,
                dpr,
                n_events,
                n_trials: n,
            }
        })
        .collect()
}

/// Leftmost level crossing of the transition curve, linearly
/// interpolated.
pub fn crossing_probability<T: Scalar>(per_p: &[PStats<T>], level: T) -> Option<T> {
    let first = per_p.iter().position(|s| s.pr >= level)?;
    if first == 0 {
        return Some(per_p[0].p);
    }
    let lo = &per_p[first - 1];
    let hi = &per_p[first];
    let rise = hi.pr - lo.pr;
    if !(rise > T::zero()) {
        return Some(hi.p);
    }
    Some(lo.p + (level - lo.pr) / rise * (hi.p - lo.p))
}

/// Threshold (half crossing) and 10/90 span of a transition curve.
pub fn threshold_and_span<T: Scalar>(
    per_p: &[PStats<T>],
) -> (Option<T>, Option<SpanEstimate<T>>) {
    let threshold = crossing_probability(per_p, lit::<T>(0.5));
    let p10 = crossing_probability(per_p, lit::<T>(0.1));
    let p90 = crossing_probability(per_p, lit::<T>(0.9));
    let span = match (p10, p90) {
        (Some(a), Some(b)) => Some(SpanEstimate {
            p10: a,
            p90: b,
            width: b - a,
        }),
        _ => None,
    };
    (threshold, span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base_config() -> SweepConfig<f64> {
        SweepConfig {
            schema: CONFIG_SCHEMA.to_string(),
            lattice: LatticeSpec::new(12, 12, 15.0),
            coupling: CouplingConfig::from_ratio(0.45, 0.15),
            z_max_mm: 4.0,
            z_step_mm: 1.0,
            bound_side: 8,
            portion_threshold: 0.1,
            p_grid: vec![0.5, 0.7, 0.9],
            trials_per_p: 4,
            master_seed: 11,
            seed_mode: SeedMode::Coupled,
            propagator: Method::Auto,
            regime: Regime::Quantum,
            span_rule: SpanRule::CornerToCorner,
            t_max_steps: None,
        }
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let mut c = base_config();
        c.schema = "qperc-config/2".into();
        assert!(c.validate().is_err());
        let mut c = base_config();
        c.p_grid = vec![0.5, 0.5];
        assert!(c.validate().is_err());
        let mut c = base_config();
        c.bound_side = 7;
        assert!(c.validate().is_err());
        let mut c = base_config();
        c.bound_side = 12;
        assert!(c.validate().is_ok());
        c.bound_side = 14;
        assert!(c.validate().is_err());
        let mut c = base_config();
        c.trials_per_p = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn z_grid_covers_the_range() {
        let c = base_config();
        assert_eq!(c.z_grid(), vec![1.0, 2.0, 3.0, 4.0]);
        let mut c = base_config();
        c.z_step_mm = 0.5;
        c.z_max_mm = 20.0;
        let g = c.z_grid();
        assert_eq!(g.len(), 40);
        assert_relative_eq!(g[39], 20.0);
        assert_eq!(c.t_max(), 40);
    }

    #[test]
    fn coupling_config_forms() {
        let both = CouplingConfig {
            t1_per_mm: 0.45,
            t2_ratio: Some(0.15),
            beta_per_um: Some(0.17),
        };
        assert!(both.resolve(15.0).is_err());
        let neither = CouplingConfig::<f64> {
            t1_per_mm: 0.45,
            t2_ratio: None,
            beta_per_um: None,
        };
        let m = neither.resolve(15.0).unwrap();
        assert_relative_eq!(m.strength(15.0 * 3f64.sqrt()), 0.45 * 0.15, epsilon = 1e-12);
        let explicit = CouplingConfig::<f64> {
            t1_per_mm: 0.45,
            t2_ratio: None,
            beta_per_um: Some(0.2),
        };
        assert_relative_eq!(explicit.resolve(15.0).unwrap().beta, 0.2);
    }

    #[test]
    fn coupled_seeds_repeat_across_p() {
        let c = base_config();
        assert_eq!(c.trial_seed(0, 3), c.trial_seed(2, 3));
        let mut c = base_config();
        c.seed_mode = SeedMode::PerProbability;
        assert_ne!(c.trial_seed(0, 3), c.trial_seed(2, 3));
    }

    #[test]
    fn quantum_sweep_is_deterministic_across_jobs() {
        let cfg = base_config();
        let a = run_quantum_sweep(&cfg, 1).unwrap();
        let b = run_quantum_sweep(&cfg, 4).unwrap();
        assert_eq!(a.trials, b.trials);
        for (x, y) in a.per_p.iter().zip(&b.per_p) {
            assert_eq!(x.pr, y.pr);
        }
    }

    #[test]
    fn quantum_records_are_complete() {
        let cfg = base_config();
        let sweep = run_quantum_sweep(&cfg, 0).unwrap();
        assert_eq!(sweep.trials.len(), 12);
        for t in &sweep.trials {
            assert_eq!(t.ipr_trace.len(), 5);
            assert_eq!(t.ipr_trace[0].1, 1.0);
            assert!(t.final_bound_fraction >= 0.0 && t.final_bound_fraction <= 1.0);
            assert_eq!(t.seed, cfg.trial_seed(t.p_index, t.trial_index));
        }
    }

    #[test]
    fn classical_sweep_mean_front_shapes() {
        let mut cfg = base_config();
        cfg.regime = Regime::Classical;
        cfg.t_max_steps = Some(10);
        let sweep = run_classical_sweep(&cfg, 1).unwrap();
        assert_eq!(sweep.mean_front.len(), 3);
        assert_eq!(sweep.mean_front[0].len(), 11);
        assert_eq!(sweep.trials.len(), 12);
        for per in &sweep.per_p {
            assert!(per.mean_n >= 1.0);
            assert_relative_eq!(per.ipr_ens, 1.0 / per.mean_n, epsilon = 1e-14);
        }
        for p_curve in &sweep.mean_front {
            for w in p_curve.windows(2) {
                assert!(w[1] >= w[0]);
            }
        }
    }

    #[test]
    fn spanning_sweep_full_lattice_always_spans() {
        let mut cfg = base_config();
        cfg.p_grid = vec![0.2, 1.0];
        cfg.trials_per_p = 6;
        let sweep = run_spanning_sweep(&cfg, 1).unwrap();
        assert_eq!(sweep.per_p[1].pr, 1.0);
        assert_eq!(sweep.per_p[1].dpr, 0.0);
        assert!(sweep.per_p[0].pr < 1.0);
    }

    #[test]
    fn planted_crossing_interpolates() {
        let mk = |p: f64, pr: f64| PStats {
            p,
            pr,
            dpr: 0.0,
            n_events: 0,
            n_trials: 1,
        };
        let curve = vec![mk(0.7, 0.0), mk(0.75, 0.5), mk(0.8, 1.0)];
        let (threshold, span) = threshold_and_span(&curve);
        assert_relative_eq!(threshold.unwrap(), 0.75, epsilon = 1e-12);
        let span = span.unwrap();
        assert_relative_eq!(span.p10, 0.71, epsilon = 1e-12);
        assert_relative_eq!(span.p90, 0.79, epsilon = 1e-12);
        assert_relative_eq!(span.width, 0.08, epsilon = 1e-12);
        let flat = vec![mk(0.7, 0.0), mk(0.8, 0.2)];
        assert_eq!(threshold_and_span(&flat).0, None);
        let high = vec![mk(0.7, 0.8), mk(0.8, 1.0)];
        assert_relative_eq!(threshold_and_span(&high).0.unwrap(), 0.7);
    }

    #[test]
    fn monotone_events_under_coupled_seeds() {
        let mut cfg = base_config();
        cfg.p_grid = vec![0.3, 0.5, 0.7, 0.85, 1.0];
        cfg.trials_per_p = 8;
        cfg.lattice = LatticeSpec::new(10, 10, 15.0);
        cfg.z_max_mm = 5.0;
        cfg.z_step_mm = 1.0;
        cfg.bound_side = 6;
        let sweep = run_quantum_sweep(&cfg, 0).unwrap();
        for w in sweep.per_p.windows(2) {
            assert!(
                w[1].pr >= w[0].pr,
                "transition curve not monotone: {} -> {}",
                w[0].pr,
                w[1].pr
            );
        }
    }
}
