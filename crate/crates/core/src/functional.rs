//! Discrete evaluation of the variational objective
//! `I[w] = ∫ G(H(x, Dw)) dx − ∫ j w ds`, its exact gradient with respect to
//! nodal values, and recovery of the density and flux fields from a candidate
//! value function.
//!
//! The interior integrand is evaluated at cell centroids with one-point
//! quadrature, so the discrete objective is a smooth composition of the cell
//! gradients and its gradient is exactly the adjoint stencil applied to
//! `G'(H) · D_pH`. The influx term uses nodal trapezoid weights; both terms
//! therefore share one consistent discrete pairing and the optimizer sees an
//! exact gradient of the exact objective.

use crate::grid::{
    cell_gradient, gradient_adjoint, BoundaryClass, CellField, CellVectorField, Field, Grid,
    GridError,
};
use crate::model::{BoundaryKind, ModelError, ProblemSpec};
use crate::scalar::{lit, Compensated, Scalar};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("field lives on a different grid than the objective")]
    GridMismatch,
    #[error("candidate field contains non-finite values")]
    NonFiniteField,
    #[error("objective evaluated to a non-finite value")]
    NonFiniteValue,
    #[error("influx sample at node {node} is negative ({value})")]
    NegativeInflux { node: usize, value: f64 },
    #[error("exit cost sample at node {node} is non-finite")]
    NonFiniteExitCost { node: usize },
}

/// Density, flux, and the averaged nodal density recovered from a candidate
/// value function. The density is a cell quantity; the nodal copy is an
/// unweighted adjacent-cell average intended for output.
#[derive(Clone, Debug)]
pub struct DensityFields<S> {
    pub density: CellField<S>,
    pub flux: CellVectorField<S>,
    pub nodal_density: Field<S>,
}

/// The discretized variational problem: grid, classified boundary, and the
/// cached exit-cost and influx samples.
#[derive(Clone, Debug)]
pub struct Objective<S> {
    problem: ProblemSpec<S>,
    grid: Grid<S>,
    boundary: BoundaryClass<S>,
    exit_cost: Field<S>,
    /// Per-node influx quadrature weight `j(x_i) · w_i`; zero off the
    /// influx part.
    influx_weights: Vec<S>,
}

impl<S: Scalar> Objective<S> {
    pub fn new(problem: ProblemSpec<S>, grid: Grid<S>) -> Result<Self, FunctionalError> {
        let boundary = crate::grid::classify_boundary(&grid, &problem.boundary.sides)?;
        let exit_cost = Field::from_fn(grid, |x| problem.boundary.exit_cost.eval(x));
        for (node, v) in exit_cost.values().iter().enumerate() {
            if !v.is_finite() {
                return Err(FunctionalError::NonFiniteExitCost { node });
            }
        }
        let mut influx_weights = vec![S::zero(); grid.node_count()];
        for (node, weight) in influx_weights.iter_mut().enumerate() {
            let w = boundary.node_weight(BoundaryKind::Neumann, node);
            if w > S::zero() {
                let j = problem.boundary.influx.eval(grid.node_coord(node));
                if !(j >= S::zero()) || !j.is_finite() {
                    return Err(FunctionalError::NegativeInflux {
                        node,
                        value: j.to_f64().unwrap_or(f64::NAN),
                    });
                }
                *weight = j * w;
            }
        }
        Ok(Self {
            problem,
            grid,
            boundary,
            exit_cost,
            influx_weights,
        })
    }

    #[inline]
    pub fn problem(&self) -> &ProblemSpec<S> {
        &self.problem
    }

    #[inline]
    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    #[inline]
    pub fn boundary(&self) -> &BoundaryClass<S> {
        &self.boundary
    }

    /// Exit cost sampled at every node.
    #[inline]
    pub fn exit_cost(&self) -> &Field<S> {
        &self.exit_cost
    }

    /// Influx quadrature weights `j(x_i) · w_i` per node.
    #[inline]
    pub fn influx_weights(&self) -> &[S] {
        &self.influx_weights
    }

    fn check_field(&self, w: &Field<S>) -> Result<(), FunctionalError> {
        if w.grid() != &self.grid {
            return Err(FunctionalError::GridMismatch);
        }
        if !w.is_finite() {
            return Err(FunctionalError::NonFiniteField);
        }
        Ok(())
    }

    /// Objective value `Σ_c G(H(x_c, Dw_c)) vol − Σ_i j_i w_i`.
    pub fn evaluate(&self, w: &Field<S>) -> Result<S, FunctionalError> {
        Ok(self.evaluate_compensated(w)?.total())
    }

    /// Objective value carried with its summation compensation. The line
    /// search compares these pairs, which keeps the sufficient-decrease test
    /// meaningful when the decrement is below one ulp of the objective.
    pub fn evaluate_compensated(&self, w: &Field<S>) -> Result<Compensated<S>, FunctionalError> {
        self.check_field(w)?;
        let grads = cell_gradient(w);
        let vol = self.grid.cell_volume();
        let mut acc = Compensated::zero();
        for (cell, dw) in grads.values().iter().enumerate() {
            let x = self.grid.cell_centroid(cell);
            let h = self.problem.hamiltonian.value(x, *dw);
            acc.add(self.problem.coupling.value(h) * vol);
        }
        for (jv, wv) in self.influx_weights.iter().zip(w.values()) {
            if *jv != S::zero() {
                acc.add(-*jv * *wv);
            }
        }
        if !acc.is_finite() {
            return Err(FunctionalError::NonFiniteValue);
        }
        Ok(acc)
    }

    /// Exact gradient of [`Objective::evaluate`] with respect to each nodal
    /// value: the adjoint stencil applied to `G'(H) · D_pH` minus the influx
    /// weights.
    pub fn gradient(&self, w: &Field<S>) -> Result<Field<S>, FunctionalError> {
        self.check_field(w)?;
        let grads = cell_gradient(w);
        let mut q = Vec::with_capacity(self.grid.cell_count());
        for (cell, dw) in grads.values().iter().enumerate() {
            let x = self.grid.cell_centroid(cell);
            let h = self.problem.hamiltonian.value(x, *dw);
            let density = self.problem.coupling.derivative(h);
            q.push(self.problem.hamiltonian.velocity(x, *dw) * density);
        }
        let q = CellVectorField::from_values(self.grid, q)?;
        let mut grad = gradient_adjoint(&q);
        for (g, jv) in grad.values_mut().iter_mut().zip(&self.influx_weights) {
            *g -= *jv;
        }
        if !grad.is_finite() {
            return Err(FunctionalError::NonFiniteValue);
        }
        Ok(grad)
    }

    /// Density `m = G'(H(x, Du))`, the flux `m · D_pH(x, Du)`, and the
    /// averaged nodal density.
    pub fn recover_density(&self, u: &Field<S>) -> Result<DensityFields<S>, FunctionalError> {
        self.check_field(u)?;
        let grads = cell_gradient(u);
        let mut density = Vec::with_capacity(self.grid.cell_count());
        let mut flux = Vec::with_capacity(self.grid.cell_count());
        for (cell, du) in grads.values().iter().enumerate() {
            let x = self.grid.cell_centroid(cell);
            let h = self.problem.hamiltonian.value(x, *du);
            let m = self.problem.coupling.derivative(h);
            density.push(m);
            flux.push(self.problem.hamiltonian.velocity(x, *du) * m);
        }
        let density = CellField::from_values(self.grid, density)?;
        let flux = CellVectorField::from_values(self.grid, flux)?;
        let nodal_density = average_cells_to_nodes(&density);
        Ok(DensityFields {
            density,
            flux,
            nodal_density,
        })
    }

    /// Weak pairing of a cell flux against every nodal hat function:
    /// `r_i = Σ_c vol · flux_c · (Dφ_i)_c`. This is the discrete bilinear
    /// form behind both the objective gradient and the continuity residual.
    pub fn flux_pairing(&self, flux: &CellVectorField<S>) -> Field<S> {
        gradient_adjoint(flux)
    }

    /// Central finite differences of [`Objective::evaluate`], one node at a
    /// time. Independent audit path for the exact gradient; cost is
    /// `2 · node_count` objective evaluations.
    pub fn finite_difference_gradient(
        &self,
        w: &Field<S>,
        step: S,
    ) -> Result<Field<S>, FunctionalError> {
        self.check_field(w)?;
        let mut probe = w.clone();
        let mut out = vec![S::zero(); self.grid.node_count()];
        for (i, slot) in out.iter_mut().enumerate() {
            let old = probe.values()[i];
            probe.values_mut()[i] = old + step;
            let plus = self.evaluate(&probe)?;
            probe.values_mut()[i] = old - step;
            let minus = self.evaluate(&probe)?;
            probe.values_mut()[i] = old;
            *slot = (plus - minus) / (step + step);
        }
        Ok(Field::from_values(self.grid, out)?)
    }
}

/// Unweighted average of the adjacent cell values at each node.
pub fn average_cells_to_nodes<S: Scalar>(f: &CellField<S>) -> Field<S> {
    let grid = *f.grid();
    let v = f.values();
    let mut values = vec![S::zero(); grid.node_count()];
    if grid.dim() == 1 {
        let n = grid.cells_x();
        for (i, value) in values.iter_mut().enumerate() {
            let mut acc = S::zero();
            let mut count = 0usize;
            if i > 0 {
                acc += v[i - 1];
                count += 1;
            }
            if i < n {
                acc += v[i];
                count += 1;
            }
            *value = acc / lit(count as f64);
        }
    } else {
        let (nx, ny) = (grid.cells_x(), grid.cells_y());
        for j in 0..=ny {
            for i in 0..=nx {
                let mut acc = S::zero();
                let mut count = 0usize;
                for (ci, cj) in [
                    (i.wrapping_sub(1), j.wrapping_sub(1)),
                    (i, j.wrapping_sub(1)),
                    (i.wrapping_sub(1), j),
                    (i, j),
                ] {
                    if ci < nx && cj < ny {
                        acc += v[grid.cell_id(ci, cj)];
                        count += 1;
                    }
                }
                values[grid.node_id(i, j)] = acc / lit(count as f64);
            }
        }
    }
    Field::from_values(grid, values).expect("node count matches by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Axis, BoundaryKind, BoundarySpec, Coupling, Domain, FuncExpr, Hamiltonian, SideLabels,
        TabulatedCoupling,
    };
    use crate::scalar::Vec2;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn problem_1d(
        j0: f64,
        potential: FuncExpr<f64>,
        coupling: Coupling<f64>,
        hamiltonian: Option<Hamiltonian<f64>>,
    ) -> ProblemSpec<f64> {
        ProblemSpec {
            domain: Domain::Interval {
                x_lo: 0.0,
                x_hi: 1.0,
            },
            coupling,
            hamiltonian: hamiltonian.unwrap_or(Hamiltonian::QuadraticPlusPotential { potential }),
            boundary: BoundarySpec {
                sides: SideLabels::Interval {
                    left: BoundaryKind::Neumann,
                    right: BoundaryKind::Dirichlet,
                },
                influx: FuncExpr::constant(j0),
                exit_cost: FuncExpr::constant(0.0),
            },
        }
    }

    fn problem_2d(
        potential: FuncExpr<f64>,
        coupling: Coupling<f64>,
        hamiltonian: Option<Hamiltonian<f64>>,
        influx: FuncExpr<f64>,
        exit_cost: FuncExpr<f64>,
    ) -> ProblemSpec<f64> {
        ProblemSpec {
            domain: Domain::Rectangle {
                x_lo: 0.0,
                x_hi: 1.0,
                y_lo: 0.0,
                y_hi: 1.0,
            },
            coupling,
            hamiltonian: hamiltonian.unwrap_or(Hamiltonian::QuadraticPlusPotential { potential }),
            boundary: BoundarySpec {
                sides: SideLabels::Rectangle {
                    left: BoundaryKind::Neumann,
                    top: BoundaryKind::Neumann,
                    right: BoundaryKind::Dirichlet,
                    bottom: BoundaryKind::Dirichlet,
                },
                influx,
                exit_cost,
            },
        }
    }

    fn objective_1d(j0: f64, v: f64, n: usize) -> Objective<f64> {
        let p = problem_1d(
            j0,
            FuncExpr::constant(v),
            Coupling::QuadraticPositivePart,
            None,
        );
        let grid = Grid::interval(0.0, 1.0, n).unwrap();
        Objective::new(p, grid).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        // Constant potential 1, w = 0: integrand G(1) = 1/2.
        let obj = objective_1d(0.0, 1.0, 8);
        let w = Field::constant(*obj.grid(), 0.0);
        assert!((obj.evaluate(&w).unwrap() - 0.5).abs() < 1e-14);

        // Negative potential: the positive part kills the integrand.
        let obj = objective_1d(0.0, -1.0, 8);
        assert_eq!(obj.evaluate(&w).unwrap(), 0.0);

        // Influx 2 at the left endpoint, w = 1: boundary term subtracts 2.
        let obj = objective_1d(2.0, 1.0, 8);
        let w1 = Field::constant(*obj.grid(), 1.0);
        assert!((obj.evaluate(&w1).unwrap() - (0.5 - 2.0)).abs() < 1e-14);
    }

    #[test]
    fn evaluate_rejects_non_finite() {
        let obj = objective_1d(0.0, 1.0, 8);
        let mut w = Field::constant(*obj.grid(), 0.0);
        w.values_mut()[3] = f64::NAN;
        assert!(matches!(
            obj.evaluate(&w),
            Err(FunctionalError::NonFiniteField)
        ));
    }

    #[test]
    fn gradient_trivial_cases() {
        // Flat coupling region everywhere: zero gradient.
        let obj = objective_1d(0.0, -1.0, 8);
        let w = Field::constant(*obj.grid(), 0.0);
        let g = obj.gradient(&w).unwrap();
        assert!(g.linf_norm() == 0.0);

        // Interior term vanishes at p = 0; only the influx weight remains.
        let obj = objective_1d(1.0, 1.0, 8);
        let g = obj.gradient(&w).unwrap();
        assert!((g.values()[0] + 1.0).abs() < 1e-14);
        for v in &g.values()[1..] {
            assert_eq!(*v, 0.0);
        }
    }

    fn all_couplings() -> Vec<Coupling<f64>> {
        vec![
            Coupling::QuadraticPositivePart,
            Coupling::Power { a: 0.8, alpha: 1.7 },
            Coupling::Tabulated(
                TabulatedCoupling::new(vec![(-0.5, 0.0), (0.5, 1.0), (1.5, 3.0)]).unwrap(),
            ),
        ]
    }

    fn all_hamiltonians(potential: FuncExpr<f64>) -> Vec<Hamiltonian<f64>> {
        vec![
            Hamiltonian::QuadraticPlusPotential { potential },
            Hamiltonian::Model {
                beta: 1.6,
                coefficient: FuncExpr::constant(0.7),
            },
        ]
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let potential = FuncExpr::Sine {
            amplitude: 1.0,
            frequency: 1.0,
            phase: 0.0,
            offset: 0.0,
            axis: Axis::X,
        };
        let mut rng = StdRng::seed_from_u64(2024);
        let mut worst: f64 = 0.0;
        for n in [8usize, 32] {
            for coupling in all_couplings() {
                for hamiltonian in all_hamiltonians(potential.clone()) {
                    let problems = vec![
                        (
                            problem_1d(
                                0.7,
                                potential.clone(),
                                coupling.clone(),
                                Some(hamiltonian.clone()),
                            ),
                            Grid::interval(0.0, 1.0, n).unwrap(),
                        ),
                        (
                            problem_2d(
                                potential.clone(),
                                coupling.clone(),
                                Some(hamiltonian.clone()),
                                FuncExpr::constant(0.4),
                                FuncExpr::constant(0.0),
                            ),
                            Grid::rectangle(0.0, 1.0, 0.0, 1.0, n, n).unwrap(),
                        ),
                    ];
                    for (p, grid) in problems {
                        let obj = Objective::new(p, grid).unwrap();
                        // 20 random fields across the two resolutions.
                        let fields = if n == 8 { 14 } else { 6 };
                        for _ in 0..fields {
                            let w = Field::from_fn(grid, |_| rng.gen_range(-0.5..0.5));
                            let exact = obj.gradient(&w).unwrap();
                            let fd = obj.finite_difference_gradient(&w, 1e-6).unwrap();
                            let denom = fd.linf_norm().max(1e-12);
                            let err = exact.linf_distance(&fd) / denom;
                            worst = worst.max(err);
                            assert!(
                                err <= 1e-5,
                                "gradient mismatch {err} (n={n}, dim={})",
                                grid.dim()
                            );
                        }
                    }
                }
            }
        }
        println!("worst relative gradient error: {worst:.3e}");
    }

    #[test]
    fn gradient_matches_finite_differences_tightly_on_reference_setup() {
        let potential = FuncExpr::Sine {
            amplitude: 1.0,
            frequency: 1.0,
            phase: 0.0,
            offset: 0.0,
            axis: Axis::X,
        };
        let p = problem_1d(0.5, potential, Coupling::QuadraticPositivePart, None);
        let grid = Grid::interval(0.0, 1.0, 32).unwrap();
        let obj = Objective::new(p, grid).unwrap();
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..5 {
            let w = Field::from_fn(grid, |_| rng.gen_range(-0.5..0.5));
            let exact = obj.gradient(&w).unwrap();
            let fd = obj.finite_difference_gradient(&w, 1e-6).unwrap();
            let err = exact.linf_distance(&fd) / fd.linf_norm().max(1e-12);
            assert!(err <= 1e-6, "reference-setup gradient error {err}");
        }
    }

    #[test]
    fn objective_is_midpoint_convex() {
        let potential = FuncExpr::Sine {
            amplitude: 0.8,
            frequency: 1.0,
            phase: 0.4,
            offset: 0.0,
            axis: Axis::X,
        };
        let mut rng = StdRng::seed_from_u64(55);
        for (k, coupling) in all_couplings().into_iter().enumerate() {
            // Rotate the Hamiltonian variant per coupling to keep this quick.
            let hamiltonian = all_hamiltonians(potential.clone()).swap_remove(k % 2);
            {
                let p = problem_1d(0.5, potential.clone(), coupling, Some(hamiltonian));
                let grid = Grid::interval(0.0, 1.0, 16).unwrap();
                let obj = Objective::new(p.clone(), grid).unwrap();
                for _ in 0..50 {
                    let w1 = Field::from_fn(grid, |_| rng.gen_range(-1.0..1.0));
                    let w2 = Field::from_fn(grid, |_| rng.gen_range(-1.0..1.0));
                    let mid = Field::from_values(
                        grid,
                        w1.values()
                            .iter()
                            .zip(w2.values())
                            .map(|(a, b)| 0.5 * (a + b))
                            .collect(),
                    )
                    .unwrap();
                    let lhs = obj.evaluate(&mid).unwrap();
                    let rhs = 0.5 * (obj.evaluate(&w1).unwrap() + obj.evaluate(&w2).unwrap());
                    assert!(lhs <= rhs + 1e-12, "convexity violated: {lhs} > {rhs}");
                }
            }
        }
    }

    #[test]
    fn objective_grows_without_bound() {
        let obj = objective_1d(1.0, 1.0, 32);
        let grid = *obj.grid();
        let mut last = f64::NEG_INFINITY;
        let mut least = f64::INFINITY;
        for k in 0..4 {
            let scale = 10f64.powi(k);
            // Admissible: vanishes at the exit node.
            let w = Field::from_fn(grid, |p| scale * (2.0 * std::f64::consts::PI * p.x).sin());
            let val = obj.evaluate(&w).unwrap();
            least = least.min(val);
            if k > 0 {
                assert!(val > last, "objective must escalate with the gradient norm");
            }
            last = val;
        }
        assert!(last > 1e6);
        println!("fitted objective lower bound over escalation family: {least:.6}");
    }

    #[test]
    fn recover_density_examples() {
        // u ≡ 0 solves the zero-influx game weakly; m = max(0, V) exactly.
        let p = problem_1d(
            0.0,
            FuncExpr::Polynomial {
                coeffs: vec![-0.5, 1.0],
                axis: Axis::X,
            },
            Coupling::QuadraticPositivePart,
            None,
        );
        let grid = Grid::interval(0.0, 1.0, 64).unwrap();
        let obj = Objective::new(p, grid).unwrap();
        let u = Field::constant(grid, 0.0);
        let fields = obj.recover_density(&u).unwrap();
        for (cell, m) in fields.density.values().iter().enumerate() {
            let v = grid.cell_centroid(cell).x - 0.5;
            assert!((m - v.max(0.0)).abs() < 1e-14);
        }

        // Constant u with negative potential: no density, no flux.
        let obj = objective_1d(0.0, -1.0, 16);
        let u = Field::constant(*obj.grid(), 3.0);
        let fields = obj.recover_density(&u).unwrap();
        assert!(fields.density.values().iter().all(|&m| m == 0.0));
        assert!(fields.flux.values().iter().all(|f| f.norm() == 0.0));
    }

    #[test]
    fn recover_density_2d_exponential_profile() {
        let pi = std::f64::consts::PI;
        let n = 64;
        let p = problem_2d(
            FuncExpr::ExpTrigPotential,
            Coupling::QuadraticPositivePart,
            None,
            FuncExpr::ExpTrigInflux,
            FuncExpr::ExpTrigValue,
        );
        let grid = Grid::rectangle(0.0, 1.0, 0.0, 1.0, n, n).unwrap();
        let obj = Objective::new(p, grid).unwrap();
        let u = Field::from_fn(grid, |q| (-pi * q.x).exp() * (pi * q.y).sin());
        let fields = obj.recover_density(&u).unwrap();
        let h = 1.0 / n as f64;
        let mut worst: f64 = 0.0;
        for (cell, m) in fields.density.values().iter().enumerate() {
            let c = grid.cell_centroid(cell);
            let exact = 3.0 * (-pi * c.x).exp() * (pi * c.y).cos().max(0.0);
            worst = worst.max((m - exact).abs());
        }
        assert!(worst <= h, "cell density error {worst} exceeds h = {h}");
    }

    #[test]
    fn density_nonnegative_and_zero_below_flat_region() {
        let potential = FuncExpr::Sine {
            amplitude: 1.0,
            frequency: 1.0,
            phase: 0.0,
            offset: 0.0,
            axis: Axis::X,
        };
        let mut rng = StdRng::seed_from_u64(9);
        for coupling in all_couplings() {
            let z1 = coupling.flat_region_end();
            let p = problem_1d(0.3, potential.clone(), coupling, None);
            let grid = Grid::interval(0.0, 1.0, 32).unwrap();
            let obj = Objective::new(p, grid).unwrap();
            for _ in 0..20 {
                let u = Field::from_fn(grid, |_| rng.gen_range(-1.0..1.0));
                let fields = obj.recover_density(&u).unwrap();
                let grads = cell_gradient(&u);
                for (cell, m) in fields.density.values().iter().enumerate() {
                    assert!(*m >= 0.0);
                    let x = grid.cell_centroid(cell);
                    let h = obj.problem().hamiltonian.value(x, grads.values()[cell]);
                    if h < z1 {
                        assert_eq!(*m, 0.0, "density must vanish below the flat region");
                    }
                }
            }
        }
    }

    #[test]
    fn nodal_average_clamps_at_ends() {
        let grid = Grid::interval(0.0, 1.0, 4).unwrap();
        let f = CellField::from_values(grid, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let nodal = average_cells_to_nodes(&f);
        assert_eq!(nodal.values(), &[1.0, 1.5, 2.5, 3.5, 4.0]);
    }

    #[test]
    fn flux_pairing_rows_sum_to_zero() {
        // Pairing against the constant test function is exactly zero: the
        // stencil coefficients of each cell cancel.
        let grid = Grid::rectangle(0.0, 1.0, 0.0, 1.0, 5, 5).unwrap();
        let mut rng = StdRng::seed_from_u64(31);
        let q = CellVectorField::from_fn(grid, |_| {
            Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let p = problem_2d(
            FuncExpr::constant(0.0),
            Coupling::QuadraticPositivePart,
            None,
            FuncExpr::constant(0.0),
            FuncExpr::constant(0.0),
        );
        let obj = Objective::new(p, grid).unwrap();
        let pairing = obj.flux_pairing(&q);
        let total: f64 = pairing.values().iter().sum();
        assert!(total.abs() < 1e-13);
    }
}
