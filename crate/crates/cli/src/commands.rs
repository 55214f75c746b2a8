//! Subcommand implementations.

use crate::cli::{
    Args, Command, EvolveArgs, FiguresArgs, GenerateArgs, LatticeFormat, SweepArgs, TraceFormat,
};
use crate::presets;
use qperc_core::ensemble::{
    self, ClassicalTrialRecord, CouplingConfig, Regime, SweepConfig, TrialRecord,
};
use qperc_core::export::{self, ObservablesRow, RunManifest, Summary, MANIFEST_SCHEMA};
use qperc_core::hamiltonian::Hamiltonian;
use qperc_core::lattice::{Lattice, LatticeSpec};
use qperc_core::observables::{
    bound_fraction, effective_width, fit_power_law, intensities, ipr, mean_std, percolation_event,
};
use qperc_core::propagator::{delta_state, evolve_trace, PropagatorOptions};
use qperc_core::{Error, Result};
use serde::Serialize;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

pub fn run(args: Args) -> Result<()> {
    match args.command {
        Command::Generate(a) => generate(a),
        Command::Evolve(a) => evolve(a),
        Command::Sweep(a) => sweep(a),
        Command::Figures(a) => figures(a),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let spec = LatticeSpec::new(a.rows, a.cols, a.pitch_um);
    let lattice = Lattice::generate(spec, a.p, a.seed)?;
    let occupied = lattice.occupied().iter().filter(|&&o| o).count();
    eprintln!(
        "{}x{} lattice, seed {}: {} of {} sites occupied ({:.4}), largest cluster {}, injection ({}, {})",
        spec.rows,
        spec.cols,
        a.seed,
        occupied,
        spec.n_sites(),
        lattice.occupied_fraction(),
        lattice.largest_cluster_size(),
        lattice.injection().row,
        lattice.injection().col,
    );
    let mut out = open_output(a.out.as_deref())?;
    match a.format {
        LatticeFormat::Json => export::write_lattice_json(&mut out, &lattice)?,
        LatticeFormat::Grid => export::write_grid(&mut out, &lattice)?,
    }
    out.flush()?;
    Ok(())
}

fn evolve(a: EvolveArgs) -> Result<()> {
    if a.bound_side == 0 || !a.bound_side.is_multiple_of(2) {
        return Err(Error::validation(format!(
            "bound_side must be even and positive, got {}",
            a.bound_side
        )));
    }
    if !(a.portion_threshold > 0.0 && a.portion_threshold < 1.0) {
        return Err(Error::validation("portion_threshold must be in (0, 1)"));
    }
    if !(a.z_step_mm > 0.0) {
        return Err(Error::validation("z_step_mm must be > 0"));
    }
    if !(a.z_max_mm >= 0.0) {
        return Err(Error::validation("z_max_mm must be >= 0"));
    }
    let lattice = load_lattice(&a)?;
    let coupling = CouplingConfig {
        t1_per_mm: a.t1_per_mm,
        t2_ratio: a.t2_ratio,
        beta_per_um: a.beta_per_um,
    }
    .resolve(lattice.spec().pitch_um)?;
    let h = Hamiltonian::build(&lattice, &coupling)?;
    let inj = h
        .dense_index_of(&lattice, lattice.injection())
        .ok_or_else(|| Error::domain("injection site is vacant"))?;
    let psi0 = delta_state::<f64>(h.dim(), inj);

    let mut zs = vec![0.0f64];
    let eps = a.z_step_mm * 1e-9;
    let mut k = 1usize;
    loop {
        let z = k as f64 * a.z_step_mm;
        if z > a.z_max_mm + eps {
            break;
        }
        zs.push(z);
        k += 1;
    }
    let opts = PropagatorOptions {
        method: a.method.into(),
        ..Default::default()
    };
    let states = evolve_trace(&h, &psi0, &zs[1..], &opts)?;
    let mut frames = Vec::with_capacity(zs.len());
    frames.push(intensities(&psi0));
    frames.extend(states.iter().map(|s| intensities(s)));

    if let Some(path) = &a.out_trace {
        let mut w = BufWriter::new(File::create(path)?);
        match a.trace_format {
            TraceFormat::Csv => export::write_trace_csv(&mut w, h.site_order(), &zs, &frames)?,
            TraceFormat::Binary => {
                export::write_trace_binary(&mut w, h.site_order(), &zs, &frames)?
            }
        }
        w.flush()?;
    }
    let final_frame = frames.last().expect("z grid holds at least z = 0");
    if let Some(path) = &a.out_final {
        let mut w = BufWriter::new(File::create(path)?);
        export::write_intensity_grid_csv(&mut w, lattice.spec(), h.site_order(), final_frame)?;
        w.flush()?;
    }
    if let Some(path) = &a.out_hamiltonian {
        let mut w = BufWriter::new(File::create(path)?);
        export::write_hamiltonian_coo(&mut w, &h)?;
        w.flush()?;
    }

    let final_ipr = ipr(final_frame)?;
    let escaped = bound_fraction(&lattice, h.site_order(), final_frame, a.bound_side / 2)?;
    eprintln!(
        "evolved {} occupied sites to z = {} mm: IPR {:.6}, w_eff {:.3}, escaped fraction {:.4}, percolated {}",
        h.dim(),
        zs.last().expect("nonempty"),
        final_ipr,
        effective_width(final_ipr)?,
        escaped,
        percolation_event(escaped, a.portion_threshold),
    );
    Ok(())
}

fn load_lattice(a: &EvolveArgs) -> Result<Lattice<f64>> {
    if let Some(path) = &a.lattice {
        let format = match a.lattice_format {
            Some(f) => f,
            None => match path.extension().and_then(|e| e.to_str()) {
                Some("json") => LatticeFormat::Json,
                Some("grid" | "txt") => LatticeFormat::Grid,
                _ => {
                    return Err(Error::validation(
                        "cannot infer the lattice format from the file extension; pass --lattice-format",
                    ))
                }
            },
        };
        let file = open_file(path)?;
        match format {
            LatticeFormat::Json => export::read_lattice_json(file),
            LatticeFormat::Grid => export::read_grid(file, a.pitch_um),
        }
    } else {
        match (a.rows, a.cols, a.p) {
            (Some(rows), Some(cols), Some(p)) => {
                Lattice::generate(LatticeSpec::new(rows, cols, a.pitch_um), p, a.seed)
            }
            _ => Err(Error::validation(
                "give --lattice FILE or all of --rows, --cols and --p",
            )),
        }
    }
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = base_config(&a)?;
    apply_overrides(&mut cfg, &a)?;
    let jobs = resolve_jobs(a.jobs)?;
    cfg.validate()?;
    std::fs::create_dir_all(&a.out_dir)?;
    match cfg.regime {
        Regime::Quantum => sweep_quantum(&cfg, jobs, &a.out_dir),
        Regime::Classical => sweep_classical(&cfg, jobs, &a.out_dir),
    }
}

fn base_config(a: &SweepArgs) -> Result<SweepConfig<f64>> {
    match (&a.config, &a.preset, &a.rerun) {
        (Some(path), None, None) => export::read_config_json(open_file(path)?),
        (None, Some(name), None) => presets::by_name(name),
        (None, None, Some(path)) => {
            Ok(export::read_manifest_json::<f64>(open_file(path)?)?.config)
        }
        _ => Err(Error::validation(
            "give exactly one of --config, --preset or --rerun",
        )),
    }
}

fn apply_overrides(cfg: &mut SweepConfig<f64>, a: &SweepArgs) -> Result<()> {
    if let Some(r) = a.regime {
        cfg.regime = r.into();
    }
    if let Some(t) = a.trials_per_p {
        cfg.trials_per_p = t;
    }
    if let Some(g) = &a.p_grid {
        cfg.p_grid = parse_p_grid(g)?;
    }
    if let Some(m) = a.seed_mode {
        cfg.seed_mode = m.into();
    }
    if let Some(s) = a.span_rule {
        cfg.span_rule = s.into();
    }
    if let Some(m) = a.propagator {
        cfg.propagator = m.into();
    }
    match (a.master_seed, env_parse::<u64>("QPERC_MASTER_SEED")?) {
        (Some(s), _) => cfg.master_seed = s,
        (None, Some(s)) => cfg.master_seed = s,
        (None, None) => {}
    }
    Ok(())
}

fn resolve_jobs(flag: Option<usize>) -> Result<usize> {
    Ok(match (flag, env_parse::<usize>("QPERC_JOBS")?) {
        (Some(j), _) => j,
        (None, Some(j)) => j,
        (None, None) => 0,
    })
}

fn env_parse<T: std::str::FromStr>(name: &str) -> Result<Option<T>> {
    match std::env::var(name) {
        Ok(raw) => raw.trim().parse::<T>().map(Some).map_err(|_| {
            Error::validation(format!("environment override {name}={raw:?} is not valid"))
        }),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::validation(format!("environment override {name}: {e}"))),
    }
}

fn parse_p_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::validation(format!(
            "p grid {spec:?} is not of the form start:step:stop"
        )));
    }
    let mut nums = [0.0f64; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| {
            Error::validation(format!("p grid component {part:?} is not a number"))
        })?;
    }
    presets::p_grid_range(nums[0], nums[1], nums[2])
}

fn sweep_quantum(cfg: &SweepConfig<f64>, jobs: usize, dir: &Path) -> Result<()> {
    let sweep = ensemble::run_quantum_sweep(cfg, jobs)?;
    write_file(dir, "config.json", |w| export::write_config_json(w, cfg))?;
    write_file(dir, "curve.csv", |w| {
        export::write_transition_csv(w, &sweep.per_p)
    })?;
    write_file(dir, "trials.jsonl", |w| export::write_jsonl(w, &sweep.trials))?;
    let summary = Summary {
        regime: Regime::Quantum,
        rows: cfg.lattice.rows,
        cols: cfg.lattice.cols,
        threshold: sweep.threshold,
        span: sweep.span,
        knee: None,
        knee_message: None,
        spanning_crossing: None,
    };
    write_file(dir, "summary.json", |w| {
        export::write_summary_json(w, &summary)
    })?;
    write_manifest(
        cfg,
        jobs,
        dir,
        &[
            "config.json",
            "curve.csv",
            "trials.jsonl",
            "summary.json",
            "manifest.json",
        ],
    )?;
    match (sweep.threshold, &sweep.span) {
        (Some(th), Some(sp)) => eprintln!(
            "quantum sweep {}x{}: threshold {:.4}, span {:.4} ({:.4} to {:.4})",
            cfg.lattice.rows, cfg.lattice.cols, th, sp.width, sp.p10, sp.p90
        ),
        _ => eprintln!(
            "quantum sweep {}x{}: transition curve does not cross all reference levels on this grid",
            cfg.lattice.rows, cfg.lattice.cols
        ),
    }
    Ok(())
}

fn sweep_classical(cfg: &SweepConfig<f64>, jobs: usize, dir: &Path) -> Result<()> {
    let flow = ensemble::run_classical_sweep(cfg, jobs)?;
    let spanning = ensemble::run_spanning_sweep(cfg, jobs)?;
    write_file(dir, "config.json", |w| export::write_config_json(w, cfg))?;
    write_file(dir, "spanning.csv", |w| {
        export::write_transition_csv(w, &spanning.per_p)
    })?;

    let rows: Vec<ObservablesRow<f64>> = flow
        .per_p
        .iter()
        .enumerate()
        .map(|(p_index, s)| {
            let iprs: Vec<f64> = flow
                .trials
                .iter()
                .filter(|t| t.p_index == p_index)
                .map(|t| t.ipr)
                .collect();
            ObservablesRow {
                p: s.p,
                z: cfg.z_max_mm,
                mean_ipr: s.ipr_ens,
                std_ipr: std_or_zero(&iprs),
                w_eff: s.w_eff,
                n_trials: s.n_trials,
            }
        })
        .collect();
    write_file(dir, "ipr_vs_p.csv", |w| {
        export::write_observables_csv(w, &rows, Some(Regime::Classical))
    })?;

    let t_max = cfg.t_max();
    write_file(dir, "front_curve.csv", |w| {
        writeln!(w, "P,t,z_mm,mean_N,w_eff")?;
        for (p_index, curve) in flow.mean_front.iter().enumerate() {
            let p = cfg.p_grid[p_index];
            for (t, &n) in curve.iter().enumerate() {
                let z = t as f64 * cfg.z_max_mm / t_max as f64;
                writeln!(w, "{p},{t},{z},{n},{}", n.sqrt())?;
            }
        }
        Ok(())
    })?;
    write_file(dir, "trials.jsonl", |w| export::write_jsonl(w, &flow.trials))?;
    let summary = Summary {
        regime: Regime::Classical,
        rows: cfg.lattice.rows,
        cols: cfg.lattice.cols,
        threshold: None,
        span: None,
        knee: flow.knee,
        knee_message: flow.knee_message.clone(),
        spanning_crossing: spanning.crossing,
    };
    write_file(dir, "summary.json", |w| {
        export::write_summary_json(w, &summary)
    })?;
    write_manifest(
        cfg,
        jobs,
        dir,
        &[
            "config.json",
            "spanning.csv",
            "ipr_vs_p.csv",
            "front_curve.csv",
            "trials.jsonl",
            "summary.json",
            "manifest.json",
        ],
    )?;
    eprintln!(
        "classical sweep {}x{}: IPR knee {}, spanning crossing {}",
        cfg.lattice.rows,
        cfg.lattice.cols,
        fmt_opt(flow.knee),
        fmt_opt(spanning.crossing),
    );
    Ok(())
}

fn write_manifest(cfg: &SweepConfig<f64>, jobs: usize, dir: &Path, names: &[&str]) -> Result<()> {
    let unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: export::iso8601_utc(unix),
        jobs,
        config: cfg.clone(),
        output_paths: names.iter().map(|s| s.to_string()).collect(),
    };
    write_file(dir, "manifest.json", |w| {
        export::write_manifest_json(w, &manifest)
    })
}

#[derive(Serialize)]
struct ExponentRow {
    p: f64,
    exponent: f64,
    intercept: f64,
    residual: f64,
    n_points: usize,
}

#[derive(Serialize)]
struct FigEntry {
    dir: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_lo_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_hi_mm: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    exponents: Vec<ExponentRow>,
    summary: Summary<f64>,
}

fn figures(a: FiguresArgs) -> Result<()> {
    std::fs::create_dir_all(&a.out_dir)?;
    let mut width_lines = Vec::new();
    let mut exponent_lines = Vec::new();
    let mut ipr_lines = Vec::new();
    let mut transition_lines = Vec::new();
    let mut classical_lines = Vec::new();
    let mut entries = Vec::new();

    for dir in &a.sweep_dir {
        let cfg = export::read_config_json::<f64>(open_input(&dir.join("config.json"))?)?;
        let summary: Summary<f64> =
            serde_json::from_reader(open_input(&dir.join("summary.json"))?)
                .map_err(|e| Error::format(format!("summary json: {e}")))?;
        let size = cfg.lattice.rows;
        let mut entry = FigEntry {
            dir: dir.display().to_string(),
            fit_lo_mm: None,
            fit_hi_mm: None,
            exponents: Vec::new(),
            summary,
        };
        match cfg.regime {
            Regime::Quantum => {
                let trials: Vec<TrialRecord<f64>> =
                    export::read_jsonl(open_input(&dir.join("trials.jsonl"))?)?;
                if trials.is_empty() {
                    return Err(Error::Dependency(format!(
                        "no trials recorded in {}",
                        dir.display()
                    )));
                }
                let lo = a.fit_lo_mm.unwrap_or(cfg.z_max_mm / 2.0);
                let hi = a.fit_hi_mm.unwrap_or(cfg.z_max_mm);
                entry.fit_lo_mm = Some(lo);
                entry.fit_hi_mm = Some(hi);
                for (p_index, &p) in cfg.p_grid.iter().enumerate() {
                    let group: Vec<&TrialRecord<f64>> =
                        trials.iter().filter(|t| t.p_index == p_index).collect();
                    if group.is_empty() {
                        continue;
                    }
                    let n_z = group[0].ipr_trace.len();
                    let mut zs = Vec::with_capacity(n_z);
                    let mut ws = Vec::with_capacity(n_z);
                    let mut final_stats = (0.0, 0.0);
                    for zi in 0..n_z {
                        let vals: Vec<f64> =
                            group.iter().map(|t| t.ipr_trace[zi].1).collect();
                        let mean_ipr = vals.iter().sum::<f64>() / vals.len() as f64;
                        let std_ipr = std_or_zero(&vals);
                        let z = group[0].ipr_trace[zi].0;
                        let w = mean_ipr.powf(-0.5);
                        zs.push(z);
                        ws.push(w);
                        if zi + 1 == n_z {
                            final_stats = (mean_ipr, std_ipr);
                        }
                        if z > 0.0 {
                            width_lines.push(format!(
                                "{size},{p},{z},{mean_ipr},{std_ipr},{w},{},{},{}",
                                vals.len(),
                                z.ln(),
                                w.ln(),
                            ));
                        }
                    }
                    match fit_power_law(&zs, &ws, lo, hi) {
                        Ok(fit) => {
                            let n_points =
                                zs.iter().filter(|&&z| z >= lo && z <= hi && z > 0.0).count();
                            exponent_lines.push(format!(
                                "{size},{p},{},{},{},{n_points},{lo},{hi}",
                                fit.exponent, fit.intercept, fit.residual,
                            ));
                            entry.exponents.push(ExponentRow {
                                p,
                                exponent: fit.exponent,
                                intercept: fit.intercept,
                                residual: fit.residual,
                                n_points,
                            });
                        }
                        Err(e) => eprintln!(
                            "skipping exponent fit for P = {p} in {}: {e}",
                            dir.display()
                        ),
                    }
                    let (mean_ipr, std_ipr) = final_stats;
                    ipr_lines.push(format!(
                        "{size},{p},{mean_ipr},{std_ipr},{},{},{}",
                        std_ipr / mean_ipr,
                        mean_ipr.powf(-0.5),
                        group.len(),
                    ));
                    let n_events = group.iter().filter(|t| t.percolated).count();
                    let pr = n_events as f64 / group.len() as f64;
                    let dpr = (pr * (1.0 - pr) / group.len() as f64).sqrt();
                    transition_lines.push(format!(
                        "{size},{p},{pr},{dpr},{n_events},{}",
                        group.len()
                    ));
                }
            }
            Regime::Classical => {
                let trials: Vec<ClassicalTrialRecord<f64>> =
                    export::read_jsonl(open_input(&dir.join("trials.jsonl"))?)?;
                if trials.is_empty() {
                    return Err(Error::Dependency(format!(
                        "no trials recorded in {}",
                        dir.display()
                    )));
                }
                for (p_index, &p) in cfg.p_grid.iter().enumerate() {
                    let sizes: Vec<f64> = trials
                        .iter()
                        .filter(|t| t.p_index == p_index)
                        .map(|t| t.final_front_size as f64)
                        .collect();
                    if sizes.is_empty() {
                        continue;
                    }
                    let mean_n = sizes.iter().sum::<f64>() / sizes.len() as f64;
                    classical_lines.push(format!(
                        "{size},{p},{mean_n},{},{},{}",
                        1.0 / mean_n,
                        mean_n.sqrt(),
                        sizes.len(),
                    ));
                }
            }
        }
        entries.push(entry);
    }

    write_lines(
        &a.out_dir,
        "fig_width_vs_z.csv",
        "size,P,z_mm,mean_IPR,std_IPR,w_eff,n_trials,ln_z,ln_w_eff",
        &width_lines,
    )?;
    write_lines(
        &a.out_dir,
        "fig_exponents.csv",
        "size,P,exponent,intercept,residual,n_points,fit_lo_mm,fit_hi_mm",
        &exponent_lines,
    )?;
    write_lines(
        &a.out_dir,
        "fig_ipr_vs_p.csv",
        "size,P,mean_IPR,std_IPR,ratio,w_eff,n_trials",
        &ipr_lines,
    )?;
    write_lines(
        &a.out_dir,
        "fig_transition.csv",
        "size,P,Pr,dPr,nP,NP",
        &transition_lines,
    )?;
    write_lines(
        &a.out_dir,
        "fig_classical_ipr.csv",
        "size,P,mean_N,IPR_ens,w_eff,n_trials",
        &classical_lines,
    )?;
    write_file(&a.out_dir, "fig_summary.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &entries)
            .map_err(|e| Error::format(format!("figure summary json: {e}")))?;
        writeln!(w)?;
        Ok(())
    })?;
    eprintln!(
        "figure tables for {} sweep(s) written to {}",
        a.sweep_dir.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn std_or_zero(vals: &[f64]) -> f64 {
    match mean_std(vals) {
        Ok((_, s)) => s,
        Err(_) => 0.0,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.4}"),
        None => "not located".to_string(),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn open_file(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    Ok(BufReader::new(file))
}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    if !path.exists() {
        return Err(Error::Dependency(format!(
            "missing sweep output {}",
            path.display()
        )));
    }
    open_file(path)
}

fn write_file<F>(dir: &Path, name: &str, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    write(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_lines(dir: &Path, name: &str, header: &str, lines: &[String]) -> Result<()> {
    if lines.is_empty() {
        return Ok(());
    }
    write_file(dir, name, |w| {
        writeln!(w, "{header}")?;
        for line in lines {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
}
