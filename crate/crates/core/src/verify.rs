//! Diagnostics on candidate solution pairs `(m, u)`: weak-solution residuals
//! of the coupled system, boundary and contact conditions, the a-priori
//! energy value, the monotonicity pairing of the game operator, uniqueness
//! consequences, and the tangential-flux condition across the free boundary
//! of the density.
//!
//! The continuity equation is checked in weak form against the interior
//! nodal hat functions rather than by differencing the flux; the flux of a
//! genuine solution has kinks along the free boundary and differencing would
//! manufacture spurious residuals there.

use crate::functional::Objective;
use crate::grid::{cell_gradient, interior_integral, CellField, CellVectorField, Field};
use crate::model::{BoundaryKind, ModelError};
use crate::scalar::{lit, Scalar, Vec2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("free-boundary detection requires a two-dimensional grid")]
    RequiresTwoDimensional,
}

/// Companion integrability magnitudes: finite by theory, reported so
/// refinement studies can watch them stay bounded.
#[derive(Clone, Copy, Debug)]
pub struct IntegrabilityDiagnostics<S> {
    /// `∫ m^{α'} dx`
    pub density_power: S,
    /// `∫ |g(m)|^α dx`
    pub coupling_power: S,
    /// `∫ |m D_pH|^{γ'} dx`
    pub flux_power: S,
}

/// All residuals and computed estimates for one candidate pair. Residual
/// entries are non-negative; zero means the corresponding condition holds
/// exactly at the discrete level.
#[derive(Clone, Debug)]
pub struct DiagnosticsReport<S> {
    /// `max |H(x, Du) − g(m)|` over cells with `m > eps_m`.
    pub hj_residual_on_support: S,
    /// `max (H(x, Du) − g(m))⁺` over all cells.
    pub hj_inequality_violation: S,
    /// Max over interior hat functions of the weak continuity pairing.
    pub continuity_residual: S,
    /// `max |flux·ν − j|` over influx edges.
    pub neumann_error: S,
    /// `max (flux·ν)⁺` over exit edges (outflow-only condition).
    pub dirichlet_sign_violation: S,
    /// `max |(ψ − u) · flux·ν|` over exit edges.
    pub complementarity_residual: S,
    /// Exit outflux plus total influx, in the discrete weak pairing.
    pub mass_balance_gap: S,
    /// `∫ m g(m) + (m+1)|Du|^β dx` (normalization constant 1).
    pub apriori_energy: S,
    /// Max normal flux across the detected free boundary (2D grids only).
    pub free_boundary_flux: Option<S>,
    pub companions: IntegrabilityDiagnostics<S>,
    /// Support threshold used for `{m > 0}` and the free boundary.
    pub eps_m: S,
}

impl<S: Scalar> DiagnosticsReport<S> {
    /// Largest of the residual entries (the estimates and companions are
    /// magnitudes, not residuals, and are excluded).
    pub fn max_residual(&self) -> S {
        let mut r = self.hj_residual_on_support;
        r = r.max(self.hj_inequality_violation);
        r = r.max(self.continuity_residual);
        r = r.max(self.neumann_error);
        r = r.max(self.dirichlet_sign_violation);
        r = r.max(self.complementarity_residual);
        r = r.max(self.mass_balance_gap);
        r
    }
}

/// Default support threshold: `1e-6 · max(max m, 1)`.
pub fn default_eps_m<S: Scalar>(m: &CellField<S>) -> S {
    lit::<S>(1e-6) * m.max_value().max(S::one())
}

fn check_grids<S: Scalar>(
    obj: &Objective<S>,
    m: &CellField<S>,
    u: &Field<S>,
) -> Result<(), VerifyError> {
    if m.grid() != obj.grid() || u.grid() != obj.grid() {
        return Err(VerifyError::GridMismatch);
    }
    Ok(())
}

/// Evaluates every checkable condition of the weak-solution definition on
/// the pair `(m, u)` and returns the full report.
pub fn check_weak_solution<S: Scalar>(
    obj: &Objective<S>,
    m: &CellField<S>,
    u: &Field<S>,
    eps_m: S,
) -> Result<DiagnosticsReport<S>, VerifyError> {
    check_grids(obj, m, u)?;
    let grid = obj.grid();
    let problem = obj.problem();
    let grads = cell_gradient(u);

    let mut hj_support = S::zero();
    let mut hj_violation = S::zero();
    let mut flux_values = Vec::with_capacity(grid.cell_count());
    for (cell, (&mc, du)) in m.values().iter().zip(grads.values()).enumerate() {
        let x = grid.cell_centroid(cell);
        let h = problem.hamiltonian.value(x, *du);
        let g_m = problem.coupling.pseudo_inverse(mc)?;
        if mc > eps_m {
            hj_support = hj_support.max((h - g_m).abs());
        }
        hj_violation = hj_violation.max((h - g_m).max(S::zero()));
        flux_values.push(problem.hamiltonian.velocity(x, *du) * mc);
    }
    let flux = CellVectorField::from_values(*grid, flux_values)
        .expect("cell count matches by construction");

    let pairing = obj.flux_pairing(&flux);
    let boundary = obj.boundary();
    let mut continuity = S::zero();
    for node in 0..grid.node_count() {
        if boundary.kind(node).is_none() {
            continuity = continuity.max(pairing.values()[node].abs());
        }
    }

    let mut neumann_error = S::zero();
    let mut dirichlet_sign = S::zero();
    let mut complementarity = S::zero();
    let half = lit::<S>(0.5);
    for edge in boundary.edges() {
        let normal_flux = flux.values()[edge.cell].dot(edge.normal);
        match edge.kind {
            BoundaryKind::Neumann => {
                let j = problem.boundary.influx.eval(edge.midpoint);
                neumann_error = neumann_error.max((normal_flux - j).abs());
            }
            BoundaryKind::Dirichlet => {
                dirichlet_sign = dirichlet_sign.max(normal_flux.max(S::zero()));
                let slack = (obj.exit_cost().values()[edge.nodes[0]] - u.values()[edge.nodes[0]]
                    + obj.exit_cost().values()[edge.nodes[1]]
                    - u.values()[edge.nodes[1]])
                    * half;
                complementarity = complementarity.max((slack * normal_flux).abs());
            }
        }
    }

    let mut mass_gap = S::zero();
    for node in boundary.dirichlet_nodes() {
        mass_gap += pairing.values()[node] - obj.influx_weights()[node];
    }
    mass_gap += obj.influx_weights().iter().fold(S::zero(), |a, &b| a + b);

    let free_boundary = if grid.dim() == 2 {
        Some(free_boundary_flux(obj, m, u, eps_m)?.max_normal_flux)
    } else {
        None
    };

    Ok(DiagnosticsReport {
        hj_residual_on_support: hj_support,
        hj_inequality_violation: hj_violation,
        continuity_residual: continuity,
        neumann_error,
        dirichlet_sign_violation: dirichlet_sign,
        complementarity_residual: complementarity,
        mass_balance_gap: mass_gap.abs(),
        apriori_energy: apriori_energy(obj, m, u)?,
        free_boundary_flux: free_boundary,
        companions: integrability(obj, m, &flux)?,
        eps_m,
    })
}

/// The a-priori energy `∫ m g(m) + (m+1)|Du|^β dx` with the estimate's
/// constant normalized to one. The bound it satisfies is reported by the
/// caller, not asserted against a universal constant.
pub fn apriori_energy<S: Scalar>(
    obj: &Objective<S>,
    m: &CellField<S>,
    u: &Field<S>,
) -> Result<S, VerifyError> {
    check_grids(obj, m, u)?;
    let problem = obj.problem();
    let beta = problem.beta();
    let grads = cell_gradient(u);
    let mut integrand = Vec::with_capacity(obj.grid().cell_count());
    for (&mc, du) in m.values().iter().zip(grads.values()) {
        let g_m = problem.coupling.pseudo_inverse(mc)?;
        integrand.push(mc * g_m + (mc + S::one()) * du.norm().powf(beta));
    }
    let cellfield =
        CellField::from_values(*obj.grid(), integrand).expect("cell count matches by construction");
    Ok(interior_integral(&cellfield))
}

fn integrability<S: Scalar>(
    obj: &Objective<S>,
    m: &CellField<S>,
    flux: &CellVectorField<S>,
) -> Result<IntegrabilityDiagnostics<S>, VerifyError> {
    let problem = obj.problem();
    let alpha = problem.alpha();
    let gamma = problem.sobolev_exponent();
    let alpha_conj = alpha / (alpha - S::one());
    let gamma_conj = gamma / (gamma - S::one());
    let mut density_power = Vec::with_capacity(m.values().len());
    let mut coupling_power = Vec::with_capacity(m.values().len());
    let mut flux_power = Vec::with_capacity(m.values().len());
    for (&mc, fc) in m.values().iter().zip(flux.values()) {
        let g_m = problem.coupling.pseudo_inverse(mc)?;
        density_power.push(mc.powf(alpha_conj));
        coupling_power.push(g_m.abs().powf(alpha));
        flux_power.push(fc.norm().powf(gamma_conj));
    }
    let grid = *obj.grid();
    Ok(IntegrabilityDiagnostics {
        density_power: interior_integral(&CellField::from_values(grid, density_power).unwrap()),
        coupling_power: interior_integral(&CellField::from_values(grid, coupling_power).unwrap()),
        flux_power: interior_integral(&CellField::from_values(grid, flux_power).unwrap()),
    })
}

/// The three integrals of the monotonicity pairing of the game operator
/// evaluated on two pairs, and their sum.
#[derive(Clone, Copy, Debug)]
pub struct MonotonicityResult<S> {
    /// Boundary term: `∫_∂Ω (u − ξ)(−m D_pH(x,Du) + η D_pH(x,Dξ))·ν ds`.
    pub boundary_term: S,
    /// Convexity term: `∫ (m−η)(H(x,Dξ)−H(x,Du)) + (Du−Dξ)·(m D_pH(x,Du) − η D_pH(x,Dξ)) dx`.
    pub convexity_term: S,
    /// Coupling term: `∫ (g(m) − g(η))(m − η) dx`.
    pub coupling_term: S,
    pub total: S,
}

/// Computes the discrete monotonicity decomposition for two candidate pairs.
/// For pairs satisfying the boundary conditions the total is non-negative up
/// to quadrature error; the convexity and coupling terms are non-negative
/// cellwise for any admissible inputs.
pub fn monotonicity_gap<S: Scalar>(
    obj: &Objective<S>,
    pair1: (&CellField<S>, &Field<S>),
    pair2: (&CellField<S>, &Field<S>),
) -> Result<MonotonicityResult<S>, VerifyError> {
    let (m, u) = pair1;
    let (eta, xi) = pair2;
    check_grids(obj, m, u)?;
    check_grids(obj, eta, xi)?;
    let grid = obj.grid();
    let problem = obj.problem();
    let du = cell_gradient(u);
    let dxi = cell_gradient(xi);

    let mut convexity = Vec::with_capacity(grid.cell_count());
    let mut coupling = Vec::with_capacity(grid.cell_count());
    let mut flux_u = Vec::with_capacity(grid.cell_count());
    let mut flux_xi = Vec::with_capacity(grid.cell_count());
    for cell in 0..grid.cell_count() {
        let x = grid.cell_centroid(cell);
        let (mc, ec) = (m.values()[cell], eta.values()[cell]);
        let (gu, gx) = (du.values()[cell], dxi.values()[cell]);
        let fu = problem.hamiltonian.velocity(x, gu) * mc;
        let fx = problem.hamiltonian.velocity(x, gx) * ec;
        convexity.push(
            (mc - ec) * (problem.hamiltonian.value(x, gx) - problem.hamiltonian.value(x, gu))
                + (gu - gx).dot(fu - fx),
        );
        coupling.push(
            (problem.coupling.pseudo_inverse(mc)? - problem.coupling.pseudo_inverse(ec)?)
                * (mc - ec),
        );
        flux_u.push(fu);
        flux_xi.push(fx);
    }
    let convexity_term = interior_integral(&CellField::from_values(*grid, convexity).unwrap());
    let coupling_term = interior_integral(&CellField::from_values(*grid, coupling).unwrap());

    let half = lit::<S>(0.5);
    let mut boundary_term = S::zero();
    for edge in obj.boundary().edges() {
        let diff = (u.values()[edge.nodes[0]] - xi.values()[edge.nodes[0]]
            + u.values()[edge.nodes[1]]
            - xi.values()[edge.nodes[1]])
            * half;
        let flux_gap = (flux_xi[edge.cell] - flux_u[edge.cell]).dot(edge.normal);
        boundary_term += diff * flux_gap * edge.measure;
    }

    Ok(MonotonicityResult {
        boundary_term,
        convexity_term,
        coupling_term,
        total: boundary_term + convexity_term + coupling_term,
    })
}

#[derive(Clone, Debug)]
pub struct UniquenessTolerances<S> {
    /// Both pairs must pass the weak-solution check below this residual for
    /// the comparison to be conclusive.
    pub residual_threshold: S,
    pub density_tol: S,
    pub gradient_tol: S,
    pub eps_m: S,
}

impl<S: Scalar> Default for UniquenessTolerances<S> {
    fn default() -> Self {
        Self {
            residual_threshold: lit(1e-6),
            density_tol: lit(1e-5),
            gradient_tol: lit(1e-4),
            eps_m: lit(1e-6),
        }
    }
}

#[derive(Clone, Debug)]
pub struct UniquenessReport<S> {
    /// False when a precondition failed; the comparison is then inconclusive
    /// rather than a violation.
    pub conclusive: bool,
    pub residuals: (S, S),
    pub density_gap: S,
    /// Max gradient gap over cells where both densities exceed `eps_m`.
    pub gradient_gap_on_support: S,
    pub support_cells: usize,
    pub violations: Vec<String>,
}

impl<S: Scalar> UniquenessReport<S> {
    pub fn passed(&self) -> bool {
        self.conclusive && self.violations.is_empty()
    }
}

/// Checks the uniqueness consequences on two pairs that both claim to solve
/// the same problem: densities agree everywhere, gradients agree on the
/// common support. Value functions are never compared pointwise.
pub fn uniqueness_check<S: Scalar>(
    obj: &Objective<S>,
    pair1: (&CellField<S>, &Field<S>),
    pair2: (&CellField<S>, &Field<S>),
    tols: &UniquenessTolerances<S>,
) -> Result<UniquenessReport<S>, VerifyError> {
    let r1 = check_weak_solution(obj, pair1.0, pair1.1, tols.eps_m)?.max_residual();
    let r2 = check_weak_solution(obj, pair2.0, pair2.1, tols.eps_m)?.max_residual();
    if r1 > tols.residual_threshold || r2 > tols.residual_threshold {
        return Ok(UniquenessReport {
            conclusive: false,
            residuals: (r1, r2),
            density_gap: S::nan(),
            gradient_gap_on_support: S::nan(),
            support_cells: 0,
            violations: Vec::new(),
        });
    }

    let density_gap = pair1.0.linf_distance(pair2.0);
    let du = cell_gradient(pair1.1);
    let dxi = cell_gradient(pair2.1);
    let mut gradient_gap = S::zero();
    let mut support_cells = 0usize;
    for cell in 0..obj.grid().cell_count() {
        if pair1.0.values()[cell] > tols.eps_m && pair2.0.values()[cell] > tols.eps_m {
            support_cells += 1;
            gradient_gap = gradient_gap.max((du.values()[cell] - dxi.values()[cell]).norm());
        }
    }

    let mut violations = Vec::new();
    if density_gap > tols.density_tol {
        violations.push(format!(
            "densities differ by {density_gap} (tolerance {})",
            tols.density_tol
        ));
    }
    if gradient_gap > tols.gradient_tol {
        violations.push(format!(
            "gradients differ by {gradient_gap} on the common support (tolerance {})",
            tols.gradient_tol
        ));
    }

    Ok(UniquenessReport {
        conclusive: true,
        residuals: (r1, r2),
        density_gap,
        gradient_gap_on_support: gradient_gap,
        support_cells,
        violations,
    })
}

/// One detected free-boundary interface between a populated and an empty cell.
#[derive(Clone, Copy, Debug)]
pub struct FreeBoundaryInterface<S> {
    pub position: Vec2<S>,
    /// Unit normal pointing from the populated cell into the empty one.
    pub normal: Vec2<S>,
    /// `m D_pH(x, Du)·ν` evaluated on the populated side.
    pub normal_flux: S,
}

#[derive(Clone, Debug)]
pub struct FreeBoundaryReport<S> {
    pub interfaces: Vec<FreeBoundaryInterface<S>>,
    pub max_normal_flux: S,
}

/// Detects the discrete free boundary (interfaces between cells with
/// `m > eps_m` and cells with `m ≤ eps_m`) and evaluates the normal flux
/// from the populated side. For a solution the current is tangential there,
/// so the reported maximum vanishes under refinement.
pub fn free_boundary_flux<S: Scalar>(
    obj: &Objective<S>,
    m: &CellField<S>,
    u: &Field<S>,
    eps_m: S,
) -> Result<FreeBoundaryReport<S>, VerifyError> {
    check_grids(obj, m, u)?;
    let grid = obj.grid();
    if grid.dim() != 2 {
        return Err(VerifyError::RequiresTwoDimensional);
    }
    let problem = obj.problem();
    let grads = cell_gradient(u);
    let velocity_at = |cell: usize| {
        problem
            .hamiltonian
            .velocity(grid.cell_centroid(cell), grads.values()[cell])
    };

    let (nx, ny) = (grid.cells_x(), grid.cells_y());
    let half = lit::<S>(0.5);
    let mut interfaces = Vec::new();
    let mut max_flux = S::zero();
    let mut consider = |populated: usize, empty: usize, normal: Vec2<S>| {
        let centroid_p = grid.cell_centroid(populated);
        let centroid_e = grid.cell_centroid(empty);
        let position = (centroid_p + centroid_e) * half;
        let normal_flux = velocity_at(populated).dot(normal) * m.values()[populated];
        max_flux = max_flux.max(normal_flux.abs());
        interfaces.push(FreeBoundaryInterface {
            position,
            normal,
            normal_flux,
        });
    };

    for j in 0..ny {
        for i in 0..nx {
            let c = grid.cell_id(i, j);
            let populated = m.values()[c] > eps_m;
            if i + 1 < nx {
                let r = grid.cell_id(i + 1, j);
                match (populated, m.values()[r] > eps_m) {
                    (true, false) => consider(c, r, Vec2::new(S::one(), S::zero())),
                    (false, true) => consider(r, c, Vec2::new(-S::one(), S::zero())),
                    _ => {}
                }
            }
            if j + 1 < ny {
                let t = grid.cell_id(i, j + 1);
                match (populated, m.values()[t] > eps_m) {
                    (true, false) => consider(c, t, Vec2::new(S::zero(), S::one())),
                    (false, true) => consider(t, c, Vec2::new(S::zero(), -S::one())),
                    _ => {}
                }
            }
        }
    }

    Ok(FreeBoundaryReport {
        interfaces,
        max_normal_flux: max_flux,
    })
}
