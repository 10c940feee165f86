//! Subcommand implementations and the exit-code contract:
//! 0 success, 1 configuration or assumption error, 2 non-convergence
//! (outputs still written), 3 verification or comparison failure.

use crate::config::{OracleConfig, RunConfig, VerifyConfig};
use crate::output;
use anyhow::{Context, Result};
use mfg_core::analytic::{
    exp_trig_oracle, exp_trig_problem, holomorphic_example, positive_flux_oracle, zero_flux_oracle,
};
use mfg_core::functional::Objective;
use mfg_core::grid::{cell_gradient, interior_integral, CellField, CellVectorField, Field, Grid};
use mfg_core::model::{FuncExpr, ProblemSpec};
use mfg_core::optimizer::{solve, Solution};
use mfg_core::verify::{check_weak_solution, default_eps_m, DiagnosticsReport};
use mfg_core::Vec2;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::json;
use std::path::{Path, PathBuf};

pub struct Ctx {
    pub out: PathBuf,
    pub n_override: Option<Vec<usize>>,
    pub strict: bool,
    pub force: bool,
    pub seed: u64,
}

/// Validates the assumptions; prints findings and returns false when the run
/// must be refused (exit 1).
fn assumption_gate(problem: &ProblemSpec<f64>, ctx: &Ctx) -> bool {
    let findings = problem.validate();
    if findings.is_empty() {
        return true;
    }
    for f in &findings {
        eprintln!("assumption violated: {f}");
    }
    if ctx.force {
        eprintln!("continuing despite findings (--force)");
        true
    } else {
        false
    }
}

fn build_objective(cfg: &RunConfig, ctx: &Ctx) -> Result<Option<Objective<f64>>> {
    let problem = cfg.to_problem()?;
    if !assumption_gate(&problem, ctx) {
        return Ok(None);
    }
    let grid = cfg.build_grid(ctx.n_override.as_deref())?;
    Ok(Some(Objective::new(problem, grid)?))
}

fn threshold_failures(report: &DiagnosticsReport<f64>, thresholds: &VerifyConfig) -> Vec<String> {
    let mut failures = Vec::new();
    let mut check = |name: &str, value: f64, limit: Option<f64>| {
        if let Some(limit) = limit {
            if value > limit {
                failures.push(format!("{name} = {value:e} exceeds {limit:e}"));
            }
        }
    };
    check(
        "hj_residual_on_support",
        report.hj_residual_on_support,
        thresholds.hj_residual,
    );
    check(
        "hj_inequality_violation",
        report.hj_inequality_violation,
        thresholds.hj_inequality,
    );
    check(
        "continuity_residual",
        report.continuity_residual,
        thresholds.continuity,
    );
    check("neumann_error", report.neumann_error, thresholds.neumann);
    check(
        "dirichlet_sign_violation",
        report.dirichlet_sign_violation,
        thresholds.dirichlet_sign,
    );
    check(
        "complementarity_residual",
        report.complementarity_residual,
        thresholds.complementarity,
    );
    check(
        "mass_balance_gap",
        report.mass_balance_gap,
        thresholds.mass_balance,
    );
    failures
}

fn run_diagnostics(
    cfg: &RunConfig,
    obj: &Objective<f64>,
    density: &CellField<f64>,
    value_function: &Field<f64>,
    out: &Path,
) -> Result<DiagnosticsReport<f64>> {
    let eps = cfg.verify.eps_m.unwrap_or_else(|| default_eps_m(density));
    let report = check_weak_solution(obj, density, value_function, eps)?;
    output::write_json(
        &out.join("diagnostics.json"),
        &output::diagnostics_json(&report),
    )?;
    Ok(report)
}

pub fn cmd_solve(cfg: &RunConfig, ctx: &Ctx) -> Result<i32> {
    let Some(obj) = build_objective(cfg, ctx)? else {
        return Ok(1);
    };
    let opts = cfg.solver.to_options();
    let solution: Solution<f64> = solve(&obj, &opts)?;
    std::fs::create_dir_all(&ctx.out)
        .with_context(|| format!("cannot create {}", ctx.out.display()))?;
    output::write_nodal_csv(&ctx.out.join("u.csv"), &solution.value_function)?;
    output::write_nodal_csv(&ctx.out.join("m.csv"), &solution.density.nodal_density)?;
    output::write_flux_csv(&ctx.out.join("flux.csv"), &solution.density.flux)?;
    output::write_report_json(&ctx.out.join("report.json"), &solution.report)?;

    let diagnostics = run_diagnostics(
        cfg,
        &obj,
        &solution.density.density,
        &solution.value_function,
        &ctx.out,
    )?;

    if !solution.report.converged {
        eprintln!(
            "solver did not converge: {:?} after {} iterations (pg norm {:e})",
            solution.report.status,
            solution.report.iterations,
            solution.report.projected_gradient_norm
        );
        return Ok(2);
    }
    if ctx.strict {
        let flux_linf = solution
            .density
            .flux
            .values()
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.norm()));
        let thresholds =
            cfg.verify
                .with_strict_defaults(cfg.solver.tol_pg, obj.grid().node_count(), flux_linf);
        let failures = threshold_failures(&diagnostics, &thresholds);
        if !failures.is_empty() {
            for f in &failures {
                eprintln!("verification failed: {f}");
            }
            return Ok(3);
        }
    }
    println!(
        "converged in {} iterations; objective {:.12e}; outputs in {}",
        solution.report.iterations,
        solution.report.objective,
        ctx.out.display()
    );
    Ok(0)
}

/// Closed-form fields sampled for the configured oracle family, plus the
/// exact cell gradient of the value function for comparisons.
struct OracleFields {
    value_function: Field<f64>,
    nodal_density: Field<f64>,
    density: CellField<f64>,
    gradient: CellVectorField<f64>,
    flux: CellVectorField<f64>,
    label: &'static str,
}

fn constant_value(expr: &FuncExpr<f64>) -> Option<f64> {
    match expr {
        FuncExpr::Constant { value } => Some(*value),
        _ => None,
    }
}

/// Samples the oracle for the configured family, after checking that the
/// configured problem actually belongs to that solution family.
fn oracle_fields(
    oracle: &OracleConfig,
    problem: &ProblemSpec<f64>,
    grid: &Grid<f64>,
) -> Result<std::result::Result<OracleFields, String>> {
    use mfg_core::model::{Coupling, Hamiltonian};

    let quadratic_potential = match &problem.hamiltonian {
        Hamiltonian::QuadraticPlusPotential { potential } => Some(potential.clone()),
        Hamiltonian::Model { .. } => None,
    };
    let quad_coupling = matches!(problem.coupling, Coupling::QuadraticPositivePart);

    match oracle {
        OracleConfig::ZeroFlux1d { branch } => {
            if grid.dim() != 1 {
                return Ok(Err("the zero-flux family lives on an interval".into()));
            }
            let Some(potential) = quadratic_potential else {
                return Ok(Err(
                    "the zero-flux family needs the quadratic Hamiltonian".into()
                ));
            };
            if !quad_coupling {
                return Ok(Err(
                    "the zero-flux family needs the quadratic positive-part coupling".into(),
                ));
            }
            if constant_value(&problem.boundary.influx) != Some(0.0) {
                return Ok(Err("the zero-flux family needs influx ≡ 0".into()));
            }
            if constant_value(&problem.boundary.exit_cost) != Some(0.0) {
                return Ok(Err("the zero-flux family anchors at exit cost ≡ 0".into()));
            }
            let v = move |x: f64| potential.eval(Vec2::along_x(x));
            let o = zero_flux_oracle(grid, v, (*branch).into())?;
            let flux = flux_from_slope(grid, &o.density, &o.slope);
            let gradient = gradient_from_slope(grid, &o.slope);
            Ok(Ok(OracleFields {
                value_function: o.value_function,
                nodal_density: o.nodal_density,
                density: o.density,
                gradient,
                flux,
                label: "zero-flux-1d",
            }))
        }
        OracleConfig::PositiveFlux1d => {
            if grid.dim() != 1 {
                return Ok(Err("the positive-flux family lives on an interval".into()));
            }
            let Some(potential) = quadratic_potential else {
                return Ok(Err(
                    "the positive-flux family needs the quadratic Hamiltonian".into(),
                ));
            };
            if !quad_coupling {
                return Ok(Err(
                    "the positive-flux family needs the quadratic positive-part coupling".into(),
                ));
            }
            let Some(j0) = constant_value(&problem.boundary.influx).filter(|j| *j > 0.0) else {
                return Ok(Err(
                    "the positive-flux family needs a positive constant influx".into(),
                ));
            };
            let Some(anchor) = constant_value(&problem.boundary.exit_cost) else {
                return Ok(Err(
                    "the positive-flux family needs a constant exit cost".into()
                ));
            };
            let v = move |x: f64| potential.eval(Vec2::along_x(x));
            let o = positive_flux_oracle(grid, v, j0, anchor)?;
            let flux = flux_from_slope(grid, &o.density, &o.slope);
            let gradient = gradient_from_slope(grid, &o.slope);
            Ok(Ok(OracleFields {
                value_function: o.value_function,
                nodal_density: o.nodal_density,
                density: o.density,
                gradient,
                flux,
                label: "positive-flux-1d",
            }))
        }
        OracleConfig::ExpTrig2d => {
            if *problem != exp_trig_problem::<f64>() {
                return Ok(Err(
                    "the exponential-trigonometric family requires its exact problem data \
                     (unit square, quadratic Hamiltonian with the exp-trig potential, \
                     quadratic positive-part coupling, left/top influx, right/bottom exits)"
                        .into(),
                ));
            }
            let o = exp_trig_oracle(grid)?;
            let flux = CellVectorField::from_values(
                *grid,
                o.density
                    .values()
                    .iter()
                    .zip(o.gradient.values())
                    .map(|(m, g)| *g * *m)
                    .collect(),
            )?;
            Ok(Ok(OracleFields {
                value_function: o.value_function,
                nodal_density: o.nodal_density,
                density: o.density,
                gradient: o.gradient,
                flux,
                label: "exp-trig-2d",
            }))
        }
        OracleConfig::Holomorphic2d { map, exponent } => {
            if grid.dim() != 2 {
                return Ok(Err("the holomorphic family lives on a rectangle".into()));
            }
            let ex = holomorphic_example(grid, &map.to_map(), *exponent)?;
            let flux = CellVectorField::from_values(
                *grid,
                ex.density
                    .values()
                    .iter()
                    .zip(ex.gradient.values())
                    .map(|(m, g)| *g * *m)
                    .collect(),
            )?;
            Ok(Ok(OracleFields {
                value_function: ex.value_function,
                nodal_density: ex.nodal_density,
                density: ex.density,
                gradient: ex.gradient,
                flux,
                label: "holomorphic-2d",
            }))
        }
    }
}

fn flux_from_slope(
    grid: &Grid<f64>,
    density: &CellField<f64>,
    slope: &CellField<f64>,
) -> CellVectorField<f64> {
    CellVectorField::from_values(
        *grid,
        density
            .values()
            .iter()
            .zip(slope.values())
            .map(|(m, s)| Vec2::along_x(m * s))
            .collect(),
    )
    .expect("cell count matches by construction")
}

fn gradient_from_slope(grid: &Grid<f64>, slope: &CellField<f64>) -> CellVectorField<f64> {
    CellVectorField::from_values(
        *grid,
        slope.values().iter().map(|s| Vec2::along_x(*s)).collect(),
    )
    .expect("cell count matches by construction")
}

pub fn cmd_oracle(cfg: &RunConfig, ctx: &Ctx) -> Result<i32> {
    let Some(obj) = build_objective(cfg, ctx)? else {
        return Ok(1);
    };
    let Some(oracle_cfg) = &cfg.oracle else {
        eprintln!("no [oracle] section in the config");
        return Ok(1);
    };
    let fields = match oracle_fields(oracle_cfg, obj.problem(), obj.grid())? {
        Ok(f) => f,
        Err(msg) => {
            eprintln!("oracle family mismatch: {msg}");
            return Ok(1);
        }
    };
    std::fs::create_dir_all(&ctx.out)?;
    output::write_nodal_csv(&ctx.out.join("u.csv"), &fields.value_function)?;
    output::write_nodal_csv(&ctx.out.join("m.csv"), &fields.nodal_density)?;
    output::write_flux_csv(&ctx.out.join("flux.csv"), &fields.flux)?;
    let objective = obj.evaluate(&fields.value_function)?;
    output::write_json(
        &ctx.out.join("oracle.json"),
        &json!({ "family": fields.label, "objective": objective }),
    )?;
    println!("oracle fields written to {}", ctx.out.display());
    Ok(0)
}

pub fn cmd_verify(cfg: &RunConfig, ctx: &Ctx) -> Result<i32> {
    let Some(obj) = build_objective(cfg, ctx)? else {
        return Ok(1);
    };
    let (density, value_function) = if let Some(oracle_cfg) = &cfg.oracle {
        let fields = match oracle_fields(oracle_cfg, obj.problem(), obj.grid())? {
            Ok(f) => f,
            Err(msg) => {
                eprintln!("oracle family mismatch: {msg}");
                return Ok(1);
            }
        };
        (fields.density, fields.value_function)
    } else {
        // Re-verify a previously written solve: the density is recovered
        // from the value function, which is how the solver defines it.
        let u_path = ctx.out.join("u.csv");
        let u = output::read_nodal_csv(&u_path, obj.grid())?;
        let recovered = obj.recover_density(&u)?;
        (recovered.density, u)
    };
    std::fs::create_dir_all(&ctx.out)?;
    let report = run_diagnostics(cfg, &obj, &density, &value_function, &ctx.out)?;
    let thresholds = if ctx.strict {
        let grads = cell_gradient(&value_function);
        let grid = *obj.grid();
        let mut flux_linf = 0.0f64;
        for (cell, (m, g)) in density.values().iter().zip(grads.values()).enumerate() {
            let v = obj
                .problem()
                .hamiltonian
                .velocity(grid.cell_centroid(cell), *g);
            flux_linf = flux_linf.max(v.norm() * m);
        }
        cfg.verify
            .with_strict_defaults(cfg.solver.tol_pg, grid.node_count(), flux_linf)
    } else {
        cfg.verify.clone()
    };
    let failures = threshold_failures(&report, &thresholds);
    println!(
        "max residual {:e}; diagnostics written to {}",
        report.max_residual(),
        ctx.out.display()
    );
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("verification failed: {f}");
        }
        return Ok(3);
    }
    Ok(0)
}

pub fn cmd_compare(cfg: &RunConfig, ctx: &Ctx) -> Result<i32> {
    let Some(obj) = build_objective(cfg, ctx)? else {
        return Ok(1);
    };
    let Some(oracle_cfg) = &cfg.oracle else {
        eprintln!("compare needs an [oracle] section");
        return Ok(1);
    };
    if matches!(oracle_cfg, OracleConfig::Holomorphic2d { .. }) {
        eprintln!("the holomorphic family generates fields for verification only; it has no matching solver configuration");
        return Ok(1);
    }
    let fields = match oracle_fields(oracle_cfg, obj.problem(), obj.grid())? {
        Ok(f) => f,
        Err(msg) => {
            eprintln!("oracle family mismatch: {msg}");
            return Ok(1);
        }
    };

    let opts = cfg.solver.to_options();
    let solution = solve(&obj, &opts)?;
    std::fs::create_dir_all(&ctx.out)?;

    let grid = *obj.grid();
    let eps = cfg
        .compare
        .eps_m
        .unwrap_or_else(|| default_eps_m(&fields.density));

    let m_solver = &solution.density.density;
    let mut m_linf: f64 = 0.0;
    let mut m_sq = Vec::with_capacity(grid.cell_count());
    for (a, b) in m_solver.values().iter().zip(fields.density.values()) {
        m_linf = m_linf.max((a - b).abs());
        m_sq.push((a - b) * (a - b));
    }
    let m_l2 = interior_integral(&CellField::from_values(grid, m_sq)?).sqrt();

    let solver_grads = cell_gradient(&solution.value_function);
    let mut grad_linf: f64 = 0.0;
    let mut grad_sq = Vec::with_capacity(grid.cell_count());
    let mut support_cells = 0usize;
    for cell in 0..grid.cell_count() {
        let on_support = m_solver.values()[cell] > eps && fields.density.values()[cell] > eps;
        let d = if on_support {
            support_cells += 1;
            (solver_grads.values()[cell] - fields.gradient.values()[cell]).norm()
        } else {
            0.0
        };
        grad_linf = grad_linf.max(d);
        grad_sq.push(d * d);
    }
    let grad_l2 = interior_integral(&CellField::from_values(grid, grad_sq)?).sqrt();

    let objective_solver = solution.report.objective;
    let objective_oracle = obj.evaluate(&fields.value_function)?;
    let objective_gap = (objective_solver - objective_oracle).abs();

    let pass_m = m_linf <= cfg.compare.tol_m_linf;
    let pass_grad = grad_linf <= cfg.compare.tol_grad_linf;
    let pass_objective = objective_gap <= cfg.compare.tol_objective;
    let pass = pass_m && pass_grad && pass_objective && solution.report.converged;

    output::write_json(
        &ctx.out.join("compare.json"),
        &json!({
            "family": fields.label,
            "converged": solution.report.converged,
            "density_gap_linf": m_linf,
            "density_gap_l2": m_l2,
            "gradient_gap_linf_on_support": grad_linf,
            "gradient_gap_l2_on_support": grad_l2,
            "support_cells": support_cells,
            "objective_solver": objective_solver,
            "objective_oracle": objective_oracle,
            "objective_gap": objective_gap,
            "eps_m": eps,
            "tolerances": {
                "m_linf": cfg.compare.tol_m_linf,
                "grad_linf": cfg.compare.tol_grad_linf,
                "objective": cfg.compare.tol_objective,
            },
            "pass": pass,
        }),
    )?;

    println!(
        "density gap {m_linf:.3e} (L2 {m_l2:.3e}); gradient gap {grad_linf:.3e} on {support_cells} cells; objective gap {objective_gap:.3e}"
    );
    if !solution.report.converged {
        eprintln!("solver did not converge: {:?}", solution.report.status);
        return Ok(2);
    }
    if !pass {
        return Ok(3);
    }
    Ok(0)
}

pub fn cmd_gradcheck(cfg: &RunConfig, ctx: &Ctx) -> Result<i32> {
    let Some(obj) = build_objective(cfg, ctx)? else {
        return Ok(1);
    };
    let grid = *obj.grid();
    let mut rng = StdRng::seed_from_u64(ctx.seed);
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let w = Field::from_fn(grid, |_| rng.gen_range(-0.5..0.5));
        let exact = obj.gradient(&w)?;
        let fd = obj.finite_difference_gradient(&w, 1e-6)?;
        let err = exact.linf_distance(&fd) / fd.linf_norm().max(1e-12);
        println!("field {k}: relative gradient error {err:.3e}");
        worst = worst.max(err);
    }
    println!("max relative gradient error {worst:.3e}");
    if worst <= 1e-5 {
        Ok(0)
    } else {
        Ok(3)
    }
}
