//! CSV and text output. Every file opens with a `#` metadata line and a `#`
//! column header; floats are written with 17 significant digits so reruns
//! are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use gradflow_core::diagnostics::EnergyReport;

use crate::convergence::ConvergenceStudy;
use crate::runner::{Coords, RunArtifacts};

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn energy_csv(art: &RunArtifacts) -> String {
    let mut out = format!("{}\n# {}\n", art.metadata.header_line(), EnergyReport::CSV_HEADER);
    for row in &art.energy {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    out
}

pub fn snapshot_csv(art: &RunArtifacts, k: usize) -> String {
    let snap = &art.snapshots[k];
    let mut out = format!(
        "{} snapshot_time={} snapshot_step={}\n",
        art.metadata.header_line(),
        snap.time,
        snap.step
    );
    match &art.coords {
        Coords::OneD(x) => {
            out.push_str("# x,rho\n");
            for (x, r) in x.iter().zip(&snap.rho) {
                let _ = writeln!(out, "{},{}", float(*x), float(*r));
            }
        }
        Coords::TwoD { x, y } => {
            out.push_str("# x,y,rho\n");
            for ((x, y), r) in x.iter().zip(y).zip(&snap.rho) {
                let _ = writeln!(out, "{},{},{}", float(*x), float(*y), float(*r));
            }
        }
    }
    out
}

pub fn limiter_csv(art: &RunArtifacts) -> String {
    let mut out = format!(
        "{}\n# step,anchor,size,theta,mass_before,mass_after,max_change,change_bound\n",
        art.metadata.header_line()
    );
    for (step, e) in art.limiter_log() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            step,
            e.anchor,
            e.size,
            float(e.theta),
            float(e.mass_before),
            float(e.mass_after),
            float(e.max_change),
            float(e.change_bound)
        );
    }
    out
}

/// Writes the energy log, one file per snapshot and the limiter log.
/// Returns the paths in that order.
pub fn emit_outputs(art: &RunArtifacts, dir: &Path, prefix: &str) -> anyhow::Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut paths = Vec::new();
    let mut put = |name: String, text: String| -> anyhow::Result<()> {
        let path = dir.join(name);
        write_file(&path, &text)?;
        paths.push(path);
        Ok(())
    };
    put(format!("{prefix}_energy.csv"), energy_csv(art))?;
    for k in 0..art.snapshots.len() {
        put(format!("{prefix}_snapshot_{k:03}.csv"), snapshot_csv(art, k))?;
    }
    put(format!("{prefix}_limiter.csv"), limiter_csv(art))?;
    Ok(paths)
}

fn order(o: Option<f64>) -> String {
    o.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

pub fn convergence_csv(study: &ConvergenceStudy) -> String {
    let mut out = format!("{}\n# N,tau,l1,l1_order,linf,linf_order\n", study.metadata.header_line());
    for r in &study.rows {
        let opt = |o: Option<f64>| o.map(float).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            float(r.tau),
            float(r.l1),
            opt(r.l1_order),
            float(r.linf),
            opt(r.linf_order)
        );
    }
    out
}

/// Aligned table for reading in a terminal.
pub fn convergence_table(study: &ConvergenceStudy) -> String {
    let mut out = format!("{}\n", study.metadata.header_line());
    let _ = writeln!(
        out,
        "{:>6}  {:>12}  {:>12}  {:>8}  {:>12}  {:>8}",
        "N", "tau", "l1 error", "order", "linf error", "order"
    );
    for r in &study.rows {
        let _ = writeln!(
            out,
            "{:>6}  {:>12.5e}  {:>12.5e}  {:>8}  {:>12.5e}  {:>8}",
            r.n,
            r.tau,
            r.l1,
            order(r.l1_order),
            r.linf,
            order(r.linf_order)
        );
    }
    out
}

pub fn emit_convergence(study: &ConvergenceStudy, dir: &Path, prefix: &str) -> anyhow::Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let csv = dir.join(format!("{prefix}_convergence.csv"));
    let txt = dir.join(format!("{prefix}_convergence.txt"));
    write_file(&csv, &convergence_csv(study))?;
    write_file(&txt, &convergence_table(study))?;
    Ok(vec![csv, txt])
}
