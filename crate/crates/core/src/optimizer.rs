//! Minimization of the discrete objective over the admissible set
//! `{ w : w ≤ ψ at exit nodes }` by projected Barzilai–Borwein descent with
//! Armijo backtracking on the projected path.
//!
//! The constraint is a one-sided bound at exit (Dirichlet) nodes only, so the
//! projection is a per-node `min` and every iterate stays admissible. The
//! objective is convex (not quadratic), which is why a first-order projected
//! method over an active-set QP was chosen: it needs nothing beyond
//! `evaluate` and `gradient` and handles the bound exactly.

use crate::functional::{DensityFields, FunctionalError, Objective};
use crate::grid::{BoundaryClass, Field};
use crate::model::BoundaryKind;
use crate::scalar::{lit, Compensated, Scalar};
use thiserror::Error;

/// Steps below this are treated as a stall signal rather than progress.
const MIN_STEP: f64 = 1e-16;
/// Safeguard interval for the Barzilai–Borwein step.
const BB_STEP_MIN: f64 = 1e-12;
const BB_STEP_MAX: f64 = 1e12;
/// An objective stall is only declared while the projected gradient is still
/// far from the target; near the target the objective decrease is quadratic
/// in the gradient norm and would trip the stall test spuriously.
const STALL_PG_GUARD: f64 = 100.0;
/// The objective-stall test additionally requires this many iterations
/// without projected-gradient improvement, so slow but steady tail
/// convergence is not mistaken for a stall.
const STALL_PG_IDLE: usize = 100;

#[derive(Debug, Error)]
pub enum SolveError<S: Scalar> {
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(
        "objective became non-finite at iteration {iteration} (step {step}); iterate attached"
    )]
    NonFiniteObjective {
        iteration: usize,
        step: f64,
        iterate: Box<Field<S>>,
    },
}

/// Starting point for the descent.
#[derive(Clone, Debug)]
pub enum InitMode<S> {
    /// Start from the exit cost extended to the whole domain (admissible by
    /// definition of the constraint set).
    ExitCost,
    /// Start from zero (projected once before use).
    Zeros,
    Given(Field<S>),
}

#[derive(Clone, Debug)]
pub struct SolveOptions<S> {
    pub max_iters: usize,
    /// Projected-gradient max-norm tolerance.
    pub tol_pg: S,
    /// Relative objective decrease below which a stall is declared.
    pub tol_f: S,
    /// Iterations over which the objective stall is measured.
    pub stall_window: usize,
    /// Iterations without projected-gradient improvement before giving up.
    pub plateau_window: usize,
    pub armijo_c: S,
    pub backtrack: S,
    pub step0: S,
    pub init: InitMode<S>,
    /// Budget for the gradient-driven fixed-step polish that runs when the
    /// line search reaches the floating-point resolution of the objective
    /// while the gradient tolerance is still unmet. The gradient itself is
    /// accurate far below that resolution, so the polish descends on it
    /// without consulting objective values. Zero disables the phase.
    pub polish_iters: usize,
}

impl<S: Scalar> Default for SolveOptions<S> {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tol_pg: lit(1e-8),
            tol_f: lit(1e-12),
            stall_window: 20,
            plateau_window: 200,
            armijo_c: lit(1e-4),
            backtrack: lit(0.5),
            step0: S::one(),
            init: InitMode::ExitCost,
            polish_iters: 20000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationStatus {
    Converged,
    MaxIterations,
    ObjectiveStall,
    GradientPlateau,
    LineSearchStall,
}

#[derive(Clone, Debug)]
pub struct SolveReport<S> {
    pub iterations: usize,
    pub objective: S,
    pub projected_gradient_norm: S,
    /// Exit nodes where the bound is active (`u = ψ`): the discrete contact set.
    pub active_set: Vec<usize>,
    pub converged: bool,
    pub status: TerminationStatus,
    pub objective_history: Vec<S>,
}

#[derive(Clone, Debug)]
pub struct Solution<S> {
    pub value_function: Field<S>,
    pub density: DensityFields<S>,
    pub report: SolveReport<S>,
}

/// Clamps exit-node values to the exit cost from above; all other nodes pass
/// through. Idempotent.
pub fn project<S: Scalar>(
    w: &Field<S>,
    exit_cost: &Field<S>,
    boundary: &BoundaryClass<S>,
) -> Field<S> {
    let mut out = w.clone();
    for node in boundary.dirichlet_nodes() {
        let bound = exit_cost.values()[node];
        let v = &mut out.values_mut()[node];
        if *v > bound {
            *v = bound;
        }
    }
    out
}

/// Componentwise projected gradient `w − P(w − g)`; its max norm is the
/// first-order optimality measure.
fn projected_gradient<S: Scalar>(
    w: &Field<S>,
    grad: &Field<S>,
    exit_cost: &Field<S>,
    boundary: &BoundaryClass<S>,
) -> Field<S> {
    let mut trial = w.clone();
    for (t, g) in trial.values_mut().iter_mut().zip(grad.values()) {
        *t -= *g;
    }
    let projected = project(&trial, exit_cost, boundary);
    let mut pg = w.clone();
    for (p, q) in pg.values_mut().iter_mut().zip(projected.values()) {
        *p -= *q;
    }
    pg
}

pub enum LineSearchOutcome<S> {
    Accepted {
        step: S,
        iterate: Field<S>,
        objective: S,
    },
    /// No step down to the underflow floor produced sufficient decrease.
    Stalled { last_step: S },
}

enum InnerOutcome<S> {
    Accepted {
        step: S,
        iterate: Field<S>,
        objective: Compensated<S>,
    },
    Stalled {
        last_step: S,
    },
}

/// Backtracking Armijo search along the projected path `t ↦ P(w + t d)`.
///
/// Accepts the first step with
/// `I[P(w + t d)] ≤ I[w] − c · t · ‖d‖²_free`, where the norm runs over the
/// nodes whose movement along `d` is not blocked by the bound. Objective
/// values are compared as compensated pairs, so the test stays informative
/// when the decrement falls below one ulp of the objective. Non-finite trial
/// values are treated as rejections so oversized trial steps backtrack
/// instead of aborting.
pub fn line_search<S: Scalar>(
    obj: &Objective<S>,
    w: &Field<S>,
    direction: &Field<S>,
    step0: S,
    armijo_c: S,
    backtrack: S,
) -> Result<LineSearchOutcome<S>, SolveError<S>> {
    let base = obj.evaluate_compensated(w)?;
    Ok(
        match line_search_from(obj, w, &base, direction, step0, armijo_c, backtrack)? {
            InnerOutcome::Accepted {
                step,
                iterate,
                objective,
            } => LineSearchOutcome::Accepted {
                step,
                iterate,
                objective: objective.total(),
            },
            InnerOutcome::Stalled { last_step } => LineSearchOutcome::Stalled { last_step },
        },
    )
}

fn line_search_from<S: Scalar>(
    obj: &Objective<S>,
    w: &Field<S>,
    base: &Compensated<S>,
    direction: &Field<S>,
    step0: S,
    armijo_c: S,
    backtrack: S,
) -> Result<InnerOutcome<S>, SolveError<S>> {
    let exit_cost = obj.exit_cost();
    let boundary = obj.boundary();

    let mut free_norm_sq = S::zero();
    for (node, d) in direction.values().iter().enumerate() {
        let blocked = boundary.kind(node) == Some(BoundaryKind::Dirichlet)
            && w.values()[node] >= exit_cost.values()[node]
            && *d > S::zero();
        if !blocked {
            free_norm_sq += *d * *d;
        }
    }

    let mut step = step0;
    let floor = lit::<S>(MIN_STEP);
    loop {
        let mut trial = w.clone();
        for (t, d) in trial.values_mut().iter_mut().zip(direction.values()) {
            *t += step * *d;
        }
        let trial = project(&trial, exit_cost, boundary);
        match obj.evaluate_compensated(&trial) {
            Ok(value) => {
                let bound = base.offset(-(armijo_c * step * free_norm_sq));
                if value.le(&bound) {
                    return Ok(InnerOutcome::Accepted {
                        step,
                        iterate: trial,
                        objective: value,
                    });
                }
            }
            Err(FunctionalError::NonFiniteValue) => {}
            Err(e) => return Err(e.into()),
        }
        step = step * backtrack;
        if step < floor {
            return Ok(InnerOutcome::Stalled { last_step: step });
        }
    }
}

/// Minimizes the objective over the admissible set and recovers the density.
pub fn solve<S: Scalar>(
    obj: &Objective<S>,
    opts: &SolveOptions<S>,
) -> Result<Solution<S>, SolveError<S>> {
    let grid = *obj.grid();
    let exit_cost = obj.exit_cost().clone();
    let boundary = obj.boundary().clone();

    let start = match &opts.init {
        InitMode::ExitCost => exit_cost.clone(),
        InitMode::Zeros => Field::constant(grid, S::zero()),
        InitMode::Given(f) => f.clone(),
    };
    let mut w = project(&start, &exit_cost, &boundary);

    let mut objective = match obj.evaluate_compensated(&w) {
        Ok(v) => v,
        Err(FunctionalError::NonFiniteValue) => {
            return Err(SolveError::NonFiniteObjective {
                iteration: 0,
                step: 0.0,
                iterate: Box::new(w),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut grad = obj.gradient(&w)?;
    let mut history = vec![objective.total()];

    let mut prev_step: Option<(Vec<S>, Vec<S>)> = None; // (s, y) of the last move
    let mut status = TerminationStatus::MaxIterations;
    let mut iterations = opts.max_iters;
    let mut pg_norm = projected_gradient(&w, &grad, &exit_cost, &boundary).linf_norm();
    let mut best_pg = pg_norm;
    let mut best_pg_iter = 0usize;

    for k in 0..opts.max_iters {
        if pg_norm <= opts.tol_pg {
            status = TerminationStatus::Converged;
            iterations = k;
            break;
        }
        if pg_norm < best_pg * lit(0.999) {
            best_pg = pg_norm;
            best_pg_iter = k;
        } else if k - best_pg_iter >= opts.plateau_window {
            status = TerminationStatus::GradientPlateau;
            iterations = k;
            break;
        }

        // Alternating Barzilai–Borwein step: odd iterations use s·s/s·y, even
        // ones s·y/y·y. The alternation breaks the zigzag resonance that slows
        // a single-rule step under a monotone line search.
        let step0 = match &prev_step {
            Some((s, y)) => {
                let sy = dot(s, y);
                if sy > S::zero() {
                    let raw = if k % 2 == 1 {
                        dot(s, s) / sy
                    } else {
                        sy / dot(y, y)
                    };
                    raw.max(lit(BB_STEP_MIN)).min(lit(BB_STEP_MAX))
                } else {
                    opts.step0
                }
            }
            None => opts.step0,
        };

        let mut direction = grad.clone();
        for d in direction.values_mut() {
            *d = -*d;
        }

        match line_search_from(
            obj,
            &w,
            &objective,
            &direction,
            step0,
            opts.armijo_c,
            opts.backtrack,
        )? {
            InnerOutcome::Accepted {
                step,
                iterate,
                objective: value,
            } => {
                let new_grad = match obj.gradient(&iterate) {
                    Ok(g) => g,
                    Err(FunctionalError::NonFiniteValue) => {
                        return Err(SolveError::NonFiniteObjective {
                            iteration: k,
                            step: step.to_f64().unwrap_or(f64::NAN),
                            iterate: Box::new(iterate),
                        })
                    }
                    Err(e) => return Err(e.into()),
                };
                let s: Vec<S> = iterate
                    .values()
                    .iter()
                    .zip(w.values())
                    .map(|(a, b)| *a - *b)
                    .collect();
                let y: Vec<S> = new_grad
                    .values()
                    .iter()
                    .zip(grad.values())
                    .map(|(a, b)| *a - *b)
                    .collect();
                prev_step = Some((s, y));
                w = iterate;
                grad = new_grad;
                objective = value;
                history.push(objective.total());
            }
            InnerOutcome::Stalled { .. } => {
                status = TerminationStatus::LineSearchStall;
                iterations = k;
                break;
            }
        }

        pg_norm = projected_gradient(&w, &grad, &exit_cost, &boundary).linf_norm();

        if history.len() > opts.stall_window
            && pg_norm > opts.tol_pg * lit(STALL_PG_GUARD)
            && k.saturating_sub(best_pg_iter) >= STALL_PG_IDLE
        {
            let lookback = history[history.len() - 1 - opts.stall_window];
            let decrease = lookback - objective.total();
            if decrease <= opts.tol_f * objective.total().abs().max(S::one()) {
                status = TerminationStatus::ObjectiveStall;
                iterations = k + 1;
                break;
            }
        }
    }

    if status == TerminationStatus::MaxIterations && pg_norm <= opts.tol_pg {
        status = TerminationStatus::Converged;
    }

    // Stalls mean the line search ran out of objective resolution, not that
    // the gradient stopped being trustworthy; descend on the gradient alone.
    if matches!(
        status,
        TerminationStatus::LineSearchStall
            | TerminationStatus::GradientPlateau
            | TerminationStatus::ObjectiveStall
    ) && opts.polish_iters > 0
        && pg_norm > opts.tol_pg
    {
        let step = match &prev_step {
            Some((s, y)) => {
                let sy = dot(s, y);
                let yy = dot(y, y);
                if sy > S::zero() && yy > S::zero() {
                    sy / yy
                } else {
                    lit(1e-6)
                }
            }
            None => lit(1e-6),
        };
        let (polished_w, _, polished_pg) = polish(
            obj,
            w,
            grad,
            &exit_cost,
            &boundary,
            step,
            opts.polish_iters,
            opts.tol_pg,
        )?;
        w = polished_w;
        pg_norm = polished_pg;
        objective = match obj.evaluate_compensated(&w) {
            Ok(v) => v,
            Err(FunctionalError::NonFiniteValue) => {
                return Err(SolveError::NonFiniteObjective {
                    iteration: iterations,
                    step: step.to_f64().unwrap_or(f64::NAN),
                    iterate: Box::new(w),
                })
            }
            Err(e) => return Err(e.into()),
        };
        if pg_norm <= opts.tol_pg {
            status = TerminationStatus::Converged;
        }
    }

    let active_set: Vec<usize> = boundary
        .dirichlet_nodes()
        .filter(|&node| w.values()[node] >= exit_cost.values()[node])
        .collect();

    let density = obj.recover_density(&w)?;
    let report = SolveReport {
        iterations,
        objective: objective.total(),
        projected_gradient_norm: pg_norm,
        active_set,
        converged: status == TerminationStatus::Converged,
        status,
        objective_history: history,
    };
    Ok(Solution {
        value_function: w,
        density,
        report,
    })
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Projected gradient descent with Barzilai–Borwein steps and no line
/// search, guided by the projected-gradient norm alone. Used past the
/// objective's floating-point resolution, where the near-quadratic bottom
/// makes the plain BB iteration convergent; returning the best iterate seen
/// keeps the phase safe even through the usual BB transients.
#[allow(clippy::too_many_arguments)]
fn polish<S: Scalar>(
    obj: &Objective<S>,
    start: Field<S>,
    start_grad: Field<S>,
    exit_cost: &Field<S>,
    boundary: &BoundaryClass<S>,
    step0: S,
    budget: usize,
    tol: S,
) -> Result<(Field<S>, Field<S>, S), SolveError<S>> {
    let mut step = step0.max(lit(MIN_STEP));
    let mut best_pg = projected_gradient(&start, &start_grad, exit_cost, boundary).linf_norm();
    let mut best_w = start.clone();
    let mut best_grad = start_grad.clone();
    let mut w = start;
    let mut grad = start_grad;
    let mut damp = S::one();
    let mut prev: Option<(Field<S>, Field<S>)> = None;
    for _ in 0..budget {
        if best_pg <= tol {
            break;
        }
        if let Some((pw, pg_field)) = &prev {
            let mut sy = S::zero();
            let mut yy = S::zero();
            for i in 0..w.values().len() {
                let s = w.values()[i] - pw.values()[i];
                let y = grad.values()[i] - pg_field.values()[i];
                sy += s * y;
                yy += y * y;
            }
            if sy > S::zero() && yy > S::zero() {
                step = (sy / yy).max(lit(BB_STEP_MIN)).min(lit(BB_STEP_MAX));
            }
        }
        prev = Some((w.clone(), grad.clone()));
        let mut trial = w.clone();
        let t = step * damp;
        for (x, g) in trial.values_mut().iter_mut().zip(grad.values()) {
            *x -= t * *g;
        }
        w = project(&trial, exit_cost, boundary);
        grad = obj.gradient(&w)?;
        let pg = projected_gradient(&w, &grad, exit_cost, boundary).linf_norm();
        if !pg.is_finite() || pg > best_pg * lit(1e4) {
            w = best_w.clone();
            grad = best_grad.clone();
            damp = damp * lit(0.5);
            prev = None;
            if damp < lit(MIN_STEP) {
                break;
            }
            continue;
        }
        if pg < best_pg {
            best_pg = pg;
            best_w = w.clone();
            best_grad = grad.clone();
        }
    }
    Ok((best_w, best_grad, best_pg))
}
