//! CSV and sidecar serialization.
//!
//! All floats are written with 17 significant digits (`{:.16e}`) so files
//! round-trip doubles exactly and identical runs produce byte-identical
//! artifacts.

use std::io::Write;

use crate::error::Result;
use crate::functional::ResidualSeries;
use crate::localtime::LocalTimeField;
use crate::process::PathGrid;
use crate::verify::VerificationReport;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Path CSV: header `t,value`, one row per grid point.
pub fn write_path_csv(path: &PathGrid, w: &mut impl Write) -> Result<()> {
    writeln!(w, "t,value")?;
    for (t, v) in path.times.iter().zip(path.values.iter()) {
        writeln!(w, "{},{}", fmt(*t), fmt(*v))?;
    }
    Ok(())
}

/// Field CSV: header `x,t,L`, row-major over (x, t).
pub fn write_field_csv(field: &LocalTimeField, w: &mut impl Write) -> Result<()> {
    writeln!(w, "x,t,L")?;
    for (ix, x) in field.x_grid.iter().enumerate() {
        for (it, t) in field.t_grid.iter().enumerate() {
            writeln!(w, "{},{},{}", fmt(*x), fmt(*t), fmt(field.value(ix, it)))?;
        }
    }
    Ok(())
}

/// Estimator metadata sidecar: `key = value` lines.
pub fn write_field_sidecar(field: &LocalTimeField, w: &mut impl Write) -> Result<()> {
    writeln!(w, "estimator = {}", field.estimator.as_str())?;
    writeln!(w, "bandwidth = {}", fmt(field.bandwidth))?;
    writeln!(w, "negative_clipped = {}", field.negative_clipped)?;
    writeln!(w, "process = {}", field.source_spec.kind.as_str())?;
    writeln!(w, "tau = {}", fmt(field.source_spec.tau))?;
    writeln!(w, "horizon = {}", fmt(field.source_spec.horizon))?;
    writeln!(w, "n_steps = {}", field.source_spec.n_steps)?;
    writeln!(w, "sampler = {}", field.source_spec.sampler.as_str())?;
    writeln!(
        w,
        "visited_range = [{}, {}]",
        fmt(field.visited_range.0),
        fmt(field.visited_range.1)
    )?;
    Ok(())
}

/// Residual ensemble CSV: header `replicate,t,J`.
pub fn write_residual_ensemble_csv(series: &[ResidualSeries], w: &mut impl Write) -> Result<()> {
    writeln!(w, "replicate,t,J")?;
    for (r, s) in series.iter().enumerate() {
        for (t, j) in s.t_grid.iter().zip(s.j.iter()) {
            writeln!(w, "{r},{},{}", fmt(*t), fmt(*j))?;
        }
    }
    Ok(())
}

/// Report CSV: header `name,statistic,threshold,decision,p_value,n`.
pub fn write_reports_csv(reports: &[VerificationReport], w: &mut impl Write) -> Result<()> {
    writeln!(w, "name,statistic,threshold,decision,p_value,n")?;
    for r in reports {
        let p = r.p_value.map(fmt).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.name,
            fmt(r.statistic),
            fmt(r.threshold),
            r.decision,
            p,
            r.n_replicates
        )?;
    }
    Ok(())
}

/// Report metadata sidecar: one `name.key = value` line per entry.
pub fn write_reports_sidecar(reports: &[VerificationReport], w: &mut impl Write) -> Result<()> {
    for r in reports {
        for (k, v) in &r.metadata {
            writeln!(w, "{}.{} = {}", r.name, k, v)?;
        }
    }
    Ok(())
}

/// Summary: `name: DECISION`, one line per check.
pub fn write_summary(reports: &[VerificationReport], w: &mut impl Write) -> Result<()> {
    for r in reports {
        writeln!(w, "{}: {}", r.name, r.decision)?;
    }
    Ok(())
}
