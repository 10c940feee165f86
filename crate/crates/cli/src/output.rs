//! Plot-ready CSV emission for nodal and cell fields, JSON reports, and the
//! CSV reader used to re-verify previously written solutions.
//!
//! Scalar fields use the header `x,value` (1D) or `x,y,value` (2D) with rows
//! in node order, x fastest. The flux table lists cell centroids with one
//! column per component. Numbers print in Rust's shortest round-trip form, so
//! files are deterministic for a given config and seed.

use anyhow::{bail, Context, Result};
use mfg_core::grid::{CellVectorField, Field, Grid};
use mfg_core::optimizer::{SolveReport, TerminationStatus};
use mfg_core::verify::DiagnosticsReport;
use serde_json::json;
use std::io::Write;
use std::path::Path;

pub fn write_nodal_csv(path: &Path, field: &Field<f64>) -> Result<()> {
    let grid = field.grid();
    let mut out = String::new();
    if grid.dim() == 1 {
        out.push_str("x,value\n");
        for (id, v) in field.values().iter().enumerate() {
            let p = grid.node_coord(id);
            out.push_str(&format!("{},{}\n", p.x, v));
        }
    } else {
        out.push_str("x,y,value\n");
        for (id, v) in field.values().iter().enumerate() {
            let p = grid.node_coord(id);
            out.push_str(&format!("{},{},{}\n", p.x, p.y, v));
        }
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_flux_csv(path: &Path, flux: &CellVectorField<f64>) -> Result<()> {
    let grid = flux.grid();
    let mut out = String::new();
    if grid.dim() == 1 {
        out.push_str("x,flux\n");
        for (id, v) in flux.values().iter().enumerate() {
            let p = grid.cell_centroid(id);
            out.push_str(&format!("{},{}\n", p.x, v.x));
        }
    } else {
        out.push_str("x,y,flux_x,flux_y\n");
        for (id, v) in flux.values().iter().enumerate() {
            let p = grid.cell_centroid(id);
            out.push_str(&format!("{},{},{},{}\n", p.x, p.y, v.x, v.y));
        }
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Reads a nodal CSV written by [`write_nodal_csv`] back onto the grid it
/// came from. Coordinates are checked against the grid layout.
pub fn read_nodal_csv(path: &Path, grid: &Grid<f64>) -> Result<Field<f64>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let expected_cols = if grid.dim() == 1 { 2 } else { 3 };
    if header.split(',').count() != expected_cols {
        bail!(
            "{}: header does not match the grid dimension",
            path.display()
        );
    }
    let mut values = Vec::with_capacity(grid.node_count());
    for (row, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected_cols {
            bail!(
                "{}: row {} has {} columns",
                path.display(),
                row + 2,
                fields.len()
            );
        }
        let value: f64 = fields[expected_cols - 1]
            .parse()
            .with_context(|| format!("{}: bad value in row {}", path.display(), row + 2))?;
        let coord = grid.node_coord(values.len());
        let x: f64 = fields[0].parse()?;
        if (x - coord.x).abs() > 1e-9 * (1.0 + coord.x.abs()) {
            bail!("{}: row {} is out of node order", path.display(), row + 2);
        }
        values.push(value);
    }
    if values.len() != grid.node_count() {
        bail!(
            "{}: {} rows for a grid with {} nodes",
            path.display(),
            values.len(),
            grid.node_count()
        );
    }
    Ok(Field::from_values(*grid, values)?)
}

fn status_name(status: TerminationStatus) -> &'static str {
    match status {
        TerminationStatus::Converged => "converged",
        TerminationStatus::MaxIterations => "max-iterations",
        TerminationStatus::ObjectiveStall => "objective-stall",
        TerminationStatus::GradientPlateau => "gradient-plateau",
        TerminationStatus::LineSearchStall => "line-search-stall",
    }
}

pub fn write_report_json(path: &Path, report: &SolveReport<f64>) -> Result<()> {
    let doc = json!({
        "iterations": report.iterations,
        "objective": report.objective,
        "projected_gradient_norm": report.projected_gradient_norm,
        "converged": report.converged,
        "status": status_name(report.status),
        "active_set": report.active_set,
        "objective_history": report.objective_history,
    });
    write_json(path, &doc)
}

pub fn diagnostics_json(report: &DiagnosticsReport<f64>) -> serde_json::Value {
    json!({
        "hj_residual_on_support": report.hj_residual_on_support,
        "hj_inequality_violation": report.hj_inequality_violation,
        "continuity_residual": report.continuity_residual,
        "neumann_error": report.neumann_error,
        "dirichlet_sign_violation": report.dirichlet_sign_violation,
        "complementarity_residual": report.complementarity_residual,
        "mass_balance_gap": report.mass_balance_gap,
        "apriori_energy": report.apriori_energy,
        "free_boundary_flux": report.free_boundary_flux,
        "companions": {
            "density_power": report.companions.density_power,
            "coupling_power": report.companions.coupling_power,
            "flux_power": report.companions.flux_power,
        },
        "eps_m": report.eps_m,
    })
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let file =
        std::fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut writer = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    Ok(())
}
