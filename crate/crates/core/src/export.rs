//! On-disk formats: lattice JSON, occupancy grids, trace files,
//! observables and transition CSVs, JSONL audit streams, run manifests.
//!
//! Numbers in text formats use Rust's shortest round-trip float
//! formatting, which keeps files byte-stable across runs and thread
//! counts.

use crate::ensemble::{PStats, Regime, SpanEstimate, SweepConfig};
use crate::error::{Error, Result};
use crate::lattice::{nearest_occupied_to_centroid, Lattice, LatticeSpec, Site};
use crate::scalar::{lit, Scalar};
use crate::hamiltonian::Hamiltonian;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Read, Write};

pub const MANIFEST_SCHEMA: &str = "qperc-manifest/1";
pub const TRACE_MAGIC: &[u8; 8] = b"QPTRACE1";

/// Serialized form of a lattice realization.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
struct LatticeFile<T: Scalar> {
    spec: LatticeSpec<T>,
    p: T,
    seed: u64,
    injection: Site,
    /// Row-major '0'/'1' characters, one per site.
    occupied: String,
}

pub fn write_lattice_json<T: Scalar>(w: &mut impl Write, lattice: &Lattice<T>) -> Result<()> {
    let file = LatticeFile {
        spec: *lattice.spec(),
        p: lattice.p(),
        seed: lattice.seed(),
        injection: lattice.injection(),
        occupied: lattice
            .occupied()
            .iter()
            .map(|&o| if o { '1' } else { '0' })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut *w, &file)
        .map_err(|e| Error::format(format!("lattice json: {e}")))?;
    writeln!(w)?;
    Ok(())
}

pub fn read_lattice_json<T: Scalar>(r: impl Read) -> Result<Lattice<T>> {
    let file: LatticeFile<T> =
        serde_json::from_reader(r).map_err(|e| Error::format(format!("lattice json: {e}")))?;
    let mut occupied = Vec::with_capacity(file.occupied.len());
    for ch in file.occupied.chars() {
        match ch {
            '0' => occupied.push(false),
            '1' => occupied.push(true),
            other => {
                return Err(Error::format(format!(
                    "occupancy string holds {other:?}, expected '0' or '1'"
                )))
            }
        }
    }
    Lattice::from_occupied(file.spec, file.p, file.seed, file.injection, occupied)
}

/// Writes the bare occupancy mask, one text row per lattice row.
pub fn write_grid<T: Scalar>(w: &mut impl Write, lattice: &Lattice<T>) -> Result<()> {
    let spec = lattice.spec();
    for r in 0..spec.rows {
        let line: String = (0..spec.cols)
            .map(|c| {
                if lattice.is_occupied(Site::new(r, c)) {
                    '1'
                } else {
                    '0'
                }
            })
            .collect();
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Reads a bare occupancy grid.
///
/// The mask carries no metadata, so the occupation probability is set
/// to the empirical occupied fraction, the seed to zero, and the
/// injection site to the occupied site nearest the centroid.
pub fn read_grid<T: Scalar>(r: impl Read, pitch_um: T) -> Result<Lattice<T>> {
    let mut rows: Vec<Vec<bool>> = Vec::new();
    for (lineno, line) in std::io::BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(line.len());
        for ch in line.chars() {
            match ch {
                '0' => row.push(false),
                '1' => row.push(true),
                other => {
                    return Err(Error::format(format!(
                        "grid line {} holds {other:?}, expected '0' or '1'",
                        lineno + 1
                    )))
                }
            }
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::format(format!(
                    "grid line {} has {} columns, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.len() < 2 || rows[0].len() < 2 {
        return Err(Error::format("grid needs at least 2 rows and 2 columns"));
    }
    let spec = LatticeSpec::new(rows.len(), rows[0].len(), pitch_um);
    let occupied: Vec<bool> = rows.into_iter().flatten().collect();
    let injection = nearest_occupied_to_centroid(&spec, &occupied)?;
    let n = occupied.iter().filter(|&&o| o).count();
    let p = lit::<T>(n as f64 / spec.n_sites() as f64);
    Lattice::from_occupied(spec, p, 0, injection, occupied)
}

/// Long-form intensity trace, one row per `(z, site)` pair.
pub fn write_trace_csv<T: Scalar>(
    w: &mut impl Write,
    sites: &[Site],
    zs: &[T],
    intensities: &[Vec<T>],
) -> Result<()> {
    if zs.len() != intensities.len() {
        return Err(Error::validation("z grid and intensity row counts differ"));
    }
    writeln!(w, "z_mm,site_row,site_col,intensity")?;
    for (z, frame) in zs.iter().zip(intensities) {
        if frame.len() != sites.len() {
            return Err(Error::validation("intensity frame length mismatch"));
        }
        for (s, v) in sites.iter().zip(frame) {
            writeln!(w, "{z},{},{},{v}", s.row, s.col)?;
        }
    }
    Ok(())
}

/// Binary intensity trace.
///
/// Layout, all little endian: the magic `QPTRACE1`, `n_z: u64`,
/// `n_sites: u64`, the z grid as f64, the site table as `(row, col)`
/// u32 pairs, then `n_z * n_sites` f64 intensities, z-major.
pub fn write_trace_binary<T: Scalar>(
    w: &mut impl Write,
    sites: &[Site],
    zs: &[T],
    intensities: &[Vec<T>],
) -> Result<()> {
    if zs.len() != intensities.len() {
        return Err(Error::validation("z grid and intensity row counts differ"));
    }
    w.write_all(TRACE_MAGIC)?;
    w.write_all(&(zs.len() as u64).to_le_bytes())?;
    w.write_all(&(sites.len() as u64).to_le_bytes())?;
    for z in zs {
        w.write_all(&z.to_f64().expect("finite z").to_le_bytes())?;
    }
    for s in sites {
        w.write_all(&(s.row as u32).to_le_bytes())?;
        w.write_all(&(s.col as u32).to_le_bytes())?;
    }
    for frame in intensities {
        if frame.len() != sites.len() {
            return Err(Error::validation("intensity frame length mismatch"));
        }
        for v in frame {
            w.write_all(&v.to_f64().expect("finite intensity").to_le_bytes())?;
        }
    }
    Ok(())
}

/// Final intensity on the full grid, vacant sites as zero.
pub fn write_intensity_grid_csv<T: Scalar>(
    w: &mut impl Write,
    spec: &LatticeSpec<T>,
    sites: &[Site],
    intensity: &[T],
) -> Result<()> {
    let mut grid = vec![T::zero(); spec.n_sites()];
    for (s, &v) in sites.iter().zip(intensity) {
        grid[spec.linear_index(*s)] = v;
    }
    for r in 0..spec.rows {
        let row = &grid[r * spec.cols..(r + 1) * spec.cols];
        let line = row
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Coupling matrix in text COO form with the site table inline.
pub fn write_hamiltonian_coo<T: Scalar>(w: &mut impl Write, h: &Hamiltonian<T>) -> Result<()> {
    writeln!(w, "# coupling matrix, upper triangle of a symmetric matrix")?;
    writeln!(w, "# dim {} nnz {}", h.dim(), h.nnz())?;
    writeln!(w, "# site <index> <row> <col>")?;
    for (k, s) in h.site_order().iter().enumerate() {
        writeln!(w, "site {k} {} {}", s.row, s.col)?;
    }
    writeln!(w, "# entry <i> <j> <value_per_mm>")?;
    for i in 0..h.dim() {
        for (j, v) in h.row(i) {
            if j > i {
                writeln!(w, "{i} {j} {v}")?;
            }
        }
    }
    Ok(())
}

/// One row of an ensemble observables table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservablesRow<T: Scalar> {
    pub p: T,
    pub z: T,
    pub mean_ipr: T,
    pub std_ipr: T,
    pub w_eff: T,
    pub n_trials: usize,
}

/// Observables CSV; `regime` appends a constant regime column when set.
pub fn write_observables_csv<T: Scalar>(
    w: &mut impl Write,
    rows: &[ObservablesRow<T>],
    regime: Option<Regime>,
) -> Result<()> {
    let tag = match regime {
        None => None,
        Some(Regime::Quantum) => Some("quantum"),
        Some(Regime::Classical) => Some("classical"),
    };
    match tag {
        Some(_) => writeln!(w, "P,z_mm,mean_IPR,std_IPR,w_eff,n_trials,regime")?,
        None => writeln!(w, "P,z_mm,mean_IPR,std_IPR,w_eff,n_trials")?,
    }
    for r in rows {
        match tag {
            Some(t) => writeln!(
                w,
                "{},{},{},{},{},{},{t}",
                r.p, r.z, r.mean_ipr, r.std_ipr, r.w_eff, r.n_trials
            )?,
            None => writeln!(
                w,
                "{},{},{},{},{},{}",
                r.p, r.z, r.mean_ipr, r.std_ipr, r.w_eff, r.n_trials
            )?,
        }
    }
    Ok(())
}

/// Transition curve CSV.
pub fn write_transition_csv<T: Scalar>(w: &mut impl Write, per_p: &[PStats<T>]) -> Result<()> {
    writeln!(w, "P,Pr,dPr,nP,NP")?;
    for s in per_p {
        writeln!(w, "{},{},{},{},{}", s.p, s.pr, s.dpr, s.n_events, s.n_trials)?;
    }
    Ok(())
}

/// One JSON document per line.
pub fn write_jsonl<S: Serialize>(w: &mut impl Write, items: &[S]) -> Result<()> {
    for item in items {
        let line =
            serde_json::to_string(item).map_err(|e| Error::format(format!("jsonl: {e}")))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Reads a JSONL stream back.
pub fn read_jsonl<S: serde::de::DeserializeOwned>(r: impl Read) -> Result<Vec<S>> {
    let mut out = Vec::new();
    for (lineno, line) in std::io::BufReader::new(r).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::format(format!("jsonl line {}: {e}", lineno + 1)))?,
        );
    }
    Ok(out)
}

/// Sweep summary document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Summary<T: Scalar> {
    pub regime: Regime,
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<SpanEstimate<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knee: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knee_message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spanning_crossing: Option<T>,
}

pub fn write_summary_json<T: Scalar>(w: &mut impl Write, summary: &Summary<T>) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, summary)
        .map_err(|e| Error::format(format!("summary json: {e}")))?;
    writeln!(w)?;
    Ok(())
}

/// Record of one sweep invocation, sufficient to rerun it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
pub struct RunManifest<T: Scalar> {
    /// Manifest format tag, currently `qperc-manifest/1`.
    pub schema: String,
    pub tool_version: String,
    /// Creation time, ISO 8601 UTC.
    pub timestamp: String,
    pub jobs: usize,
    pub config: SweepConfig<T>,
    /// Every emitted file, relative to the manifest directory.
    pub output_paths: Vec<String>,
}

/// ISO 8601 UTC timestamp, second resolution, from a unix time.
pub fn iso8601_utc(unix_secs: u64) -> String {
    let days = unix_secs / 86_400;
    let rem = unix_secs % 86_400;
    let (h, m, s) = (rem / 3600, rem % 3600 / 60, rem % 60);
    // Civil-from-days, shifted so the era starts on 0000-03-01.
    let z = days as i64 + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let mo = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = if mo <= 2 { y + 1 } else { y };
    format!("{y:04}-{mo:02}-{d:02}T{h:02}:{m:02}:{s:02}Z")
}

pub fn write_manifest_json<T: Scalar>(w: &mut impl Write, m: &RunManifest<T>) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, m)
        .map_err(|e| Error::format(format!("manifest json: {e}")))?;
    writeln!(w)?;
    Ok(())
}

pub fn read_manifest_json<T: Scalar>(r: impl Read) -> Result<RunManifest<T>> {
    let m: RunManifest<T> =
        serde_json::from_reader(r).map_err(|e| Error::format(format!("manifest json: {e}")))?;
    if m.schema != MANIFEST_SCHEMA {
        return Err(Error::format(format!(
            "unsupported manifest schema {:?}, expected {:?}",
            m.schema, MANIFEST_SCHEMA
        )));
    }
    Ok(m)
}

pub fn read_config_json<T: Scalar>(r: impl Read) -> Result<SweepConfig<T>> {
    let cfg: SweepConfig<T> =
        serde_json::from_reader(r).map_err(|e| Error::format(format!("config json: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn write_config_json<T: Scalar>(w: &mut impl Write, cfg: &SweepConfig<T>) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, cfg)
        .map_err(|e| Error::format(format!("config json: {e}")))?;
    writeln!(w)?;
    Ok(())
}
