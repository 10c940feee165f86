//! Closed-form solution families used as oracles: the 1D zero-flux and
//! positive-flux solutions (the latter through the positive root of a cubic),
//! the 2D exponential-trigonometric pair, and a generator of solvable
//! examples from holomorphic maps.
//!
//! The positive-flux density solves `m³ − V m² − j₀²/2 = 0`. A safeguarded
//! Newton/bisection iteration on a bracket that always contains the unique
//! admissible root replaces explicit radical formulas: the closed-form
//! branch selection is procedural anyway, while the bracketed iteration is
//! branch-free. The radical formulas survive as a test-only cross-check.

use crate::grid::{CellField, CellVectorField, Field, Grid};
use crate::model::{
    BoundaryKind, BoundarySpec, Coupling, Domain, FuncExpr, Hamiltonian, ProblemSpec, SideLabels,
};
use crate::scalar::{lit, Scalar, Vec2};
use num_complex::Complex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("influx must be positive, got {0}")]
    NonPositiveInflux(f64),
    #[error("this solution family lives on a one-dimensional grid")]
    RequiresOneDimensional,
    #[error("this solution family lives on the unit square")]
    RequiresUnitSquare,
    #[error("the two slope formulas disagree (relative gap {0})")]
    InconsistentSlopes(f64),
}

/// Threshold potential level `γ = −(3/2) j₀^{2/3}` separating the three
/// positive-flux regimes.
pub fn threshold_potential<S: Scalar>(j0: S) -> S {
    -lit::<S>(1.5) * j0.powf(lit(2.0 / 3.0))
}

/// Unique root of `m³ − v m² − j₀²/2 = 0` with `m > max(0, v)`, found by
/// safeguarded Newton iteration on a bracket that provably contains it.
///
/// The residual at the returned root is below `~50 ε · max(1, |v|³, j₀²)`.
pub fn cubic_positive_root<S: Scalar>(v: S, j0: S) -> Result<S, AnalyticError> {
    if !(j0 > S::zero()) {
        return Err(AnalyticError::NonPositiveInflux(
            j0.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let half_j_sq = j0 * j0 / lit(2.0);
    let f = |m: S| ((m - v) * m * m) - half_j_sq;
    let df = |m: S| (lit::<S>(3.0) * m - (v + v)) * m;

    let mut lo = v.max(S::zero());
    let mut hi = lo + half_j_sq.powf(lit(1.0 / 3.0)) + S::one();
    debug_assert!(f(lo) < S::zero() && f(hi) > S::zero());

    let scale = S::one().max(v.abs().powi(3)).max(j0 * j0);
    let tol = lit::<S>(50.0) * S::epsilon() * scale;
    let mut m = (lo + hi) / lit(2.0);
    for _ in 0..200 {
        let fm = f(m);
        if fm.abs() <= tol {
            return Ok(m);
        }
        if fm < S::zero() {
            lo = m;
        } else {
            hi = m;
        }
        let d = df(m);
        let newton = m - fm / d;
        m = if d != S::zero() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) / lit(2.0)
        };
    }
    Ok(m)
}

/// Branch tag for the sign ambiguity of the zero-flux value function:
/// `u(x) = u(1) ± ∫ₓ¹ √(−2 min(0, V))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// A 1D closed-form solution sampled on a grid: density at centroids and
/// nodes, the exact slope at centroids, and the value function integrated by
/// composite trapezoid from the exit end.
#[derive(Clone, Debug)]
pub struct Oracle1D<S> {
    pub grid: Grid<S>,
    pub density: CellField<S>,
    pub nodal_density: Field<S>,
    pub value_function: Field<S>,
    /// Exact `u_x` at cell centroids.
    pub slope: CellField<S>,
    pub branch: Branch,
}

/// Zero-influx solution: `m = max(0, V)` and `u_x = ∓√(−2 min(0, V))` with
/// the value function anchored to zero at the exit.
pub fn zero_flux_oracle<S: Scalar>(
    grid: &Grid<S>,
    potential: impl Fn(S) -> S,
    branch: Branch,
) -> Result<Oracle1D<S>, AnalyticError> {
    if grid.dim() != 1 {
        return Err(AnalyticError::RequiresOneDimensional);
    }
    let speed = |x: S| {
        let v = potential(x);
        (-(v.min(S::zero()) + v.min(S::zero()))).sqrt()
    };
    let sign = match branch {
        Branch::Plus => S::one(),
        Branch::Minus => -S::one(),
    };

    let density = CellField::from_fn(*grid, |c| potential(c.x).max(S::zero()));
    let nodal_density = Field::from_fn(*grid, |p| potential(p.x).max(S::zero()));
    let slope = CellField::from_fn(*grid, |c| -sign * speed(c.x));
    let value_function = integrate_from_exit(grid, &speed, sign, S::zero());

    Ok(Oracle1D {
        grid: *grid,
        density,
        nodal_density,
        value_function,
        slope,
        branch,
    })
}

/// Positive-influx solution: the density solves the cubic pointwise, the
/// slope is `−j₀/m`, and contact at the exit is forced so the value function
/// is anchored at the exit cost.
pub fn positive_flux_oracle<S: Scalar>(
    grid: &Grid<S>,
    potential: impl Fn(S) -> S,
    j0: S,
    exit_value: S,
) -> Result<Oracle1D<S>, AnalyticError> {
    if grid.dim() != 1 {
        return Err(AnalyticError::RequiresOneDimensional);
    }
    let density_at = |x: S| cubic_positive_root(potential(x), j0);

    // Consistency of the two slope expressions at the centroids.
    for cell in 0..grid.cell_count() {
        let x = grid.cell_centroid(cell).x;
        let m = density_at(x)?;
        let from_flux = -j0 / m;
        let from_hj = -((m - potential(x)) * lit::<S>(2.0)).max(S::zero()).sqrt();
        let gap = (from_flux - from_hj).abs() / from_flux.abs().max(S::one());
        if gap > lit(1e-9) {
            return Err(AnalyticError::InconsistentSlopes(
                gap.to_f64().unwrap_or(f64::NAN),
            ));
        }
    }

    let mut density_values = Vec::with_capacity(grid.cell_count());
    let mut slope_values = Vec::with_capacity(grid.cell_count());
    for cell in 0..grid.cell_count() {
        let x = grid.cell_centroid(cell).x;
        let m = density_at(x)?;
        density_values.push(m);
        slope_values.push(-j0 / m);
    }
    let density =
        CellField::from_values(*grid, density_values).expect("cell count matches by construction");
    let slope =
        CellField::from_values(*grid, slope_values).expect("cell count matches by construction");

    let mut nodal_values = Vec::with_capacity(grid.node_count());
    for node in 0..grid.node_count() {
        nodal_values.push(density_at(grid.node_coord(node).x)?);
    }
    let nodal_density =
        Field::from_values(*grid, nodal_values).expect("node count matches by construction");

    // u(x) = u(1) + ∫ₓ¹ j₀/m, equivalently with speed √(2(m − V)).
    let speed = move |x: S| -> S {
        let m = cubic_positive_root(potential(x), j0).expect("influx positivity already checked");
        j0 / m
    };
    let value_function = integrate_from_exit(grid, &speed, S::one(), exit_value);

    Ok(Oracle1D {
        grid: *grid,
        density,
        nodal_density,
        value_function,
        slope,
        branch: Branch::Plus,
    })
}

/// `u(x_i) = anchor + sign · ∫_{x_i}^{x_hi} speed(s) ds` by composite
/// trapezoid on the grid nodes.
fn integrate_from_exit<S: Scalar>(
    grid: &Grid<S>,
    speed: &impl Fn(S) -> S,
    sign: S,
    anchor: S,
) -> Field<S> {
    let n = grid.cells_x();
    let h = grid.spacing_x();
    let half = lit::<S>(0.5);
    let mut values = vec![S::zero(); n + 1];
    values[n] = anchor;
    for i in (0..n).rev() {
        let a = speed(grid.node_coord(i).x);
        let b = speed(grid.node_coord(i + 1).x);
        values[i] = values[i + 1] + sign * h * half * (a + b);
    }
    Field::from_values(*grid, values).expect("node count matches by construction")
}

/// The 2D exponential-trigonometric solution on the unit square:
/// `u = e^{-πx} sin(πy)`, `m = 3 e^{-πx} [cos(πy)]⁺`, with potential
/// `V = 3 e^{-πx} cos(πy) − ½ π² e^{-2πx}`, influx `(3π/2)[sin(2πy)]⁺` on the
/// left side, zero influx on top, and exit cost equal to `u`.
#[derive(Clone, Debug)]
pub struct ExpTrigOracle<S> {
    pub grid: Grid<S>,
    pub value_function: Field<S>,
    pub density: CellField<S>,
    pub nodal_density: Field<S>,
    /// Exact `∇u` at centroids.
    pub gradient: CellVectorField<S>,
    pub potential: CellField<S>,
}

pub fn exp_trig_oracle<S: Scalar>(grid: &Grid<S>) -> Result<ExpTrigOracle<S>, AnalyticError> {
    let eps = lit::<S>(1e-12);
    let unit = grid.dim() == 2
        && grid.lo().x.abs() < eps
        && grid.lo().y.abs() < eps
        && (grid.hi().x - S::one()).abs() < eps
        && (grid.hi().y - S::one()).abs() < eps;
    if !unit {
        return Err(AnalyticError::RequiresUnitSquare);
    }
    let pi = S::PI();
    let u = |p: Vec2<S>| (-pi * p.x).exp() * (pi * p.y).sin();
    let m = |p: Vec2<S>| lit::<S>(3.0) * (-pi * p.x).exp() * (pi * p.y).cos().max(S::zero());
    let grad = |p: Vec2<S>| {
        let ex = (-pi * p.x).exp();
        Vec2::new(-pi * ex * (pi * p.y).sin(), pi * ex * (pi * p.y).cos())
    };
    let pot: FuncExpr<S> = FuncExpr::ExpTrigPotential;
    Ok(ExpTrigOracle {
        grid: *grid,
        value_function: Field::from_fn(*grid, u),
        density: CellField::from_fn(*grid, m),
        nodal_density: Field::from_fn(*grid, m),
        gradient: CellVectorField::from_fn(*grid, grad),
        potential: CellField::from_fn(*grid, |p| pot.eval(p)),
    })
}

/// The continuous problem whose solution is [`exp_trig_oracle`]: quadratic
/// Hamiltonian with the exponential-trigonometric potential, quadratic
/// positive-part coupling, influx on the left and top sides, exits on the
/// right and bottom.
pub fn exp_trig_problem<S: Scalar>() -> ProblemSpec<S> {
    ProblemSpec {
        domain: Domain::Rectangle {
            x_lo: S::zero(),
            x_hi: S::one(),
            y_lo: S::zero(),
            y_hi: S::one(),
        },
        coupling: Coupling::QuadraticPositivePart,
        hamiltonian: Hamiltonian::QuadraticPlusPotential {
            potential: FuncExpr::ExpTrigPotential,
        },
        boundary: BoundarySpec {
            sides: SideLabels::Rectangle {
                left: BoundaryKind::Neumann,
                top: BoundaryKind::Neumann,
                right: BoundaryKind::Dirichlet,
                bottom: BoundaryKind::Dirichlet,
            },
            influx: FuncExpr::ExpTrigInflux,
            exit_cost: FuncExpr::ExpTrigValue,
        },
    }
}

/// Holomorphic maps with closed-form derivatives, used to manufacture
/// solvable pairs through the Cauchy-Riemann equations.
#[derive(Clone, Debug)]
pub enum HolomorphicMap<S> {
    /// `f(z) = z²`
    Square,
    /// `f(z) = z³`
    Cube,
    /// `f(z) = 3i e^{-πz}`
    ScaledExp,
    /// Complex polynomial with ascending `(re, im)` coefficients.
    Polynomial { coeffs: Vec<(S, S)> },
}

impl<S: Scalar> HolomorphicMap<S> {
    fn eval(&self, z: Complex<S>) -> Complex<S> {
        match self {
            HolomorphicMap::Square => z * z,
            HolomorphicMap::Cube => z * z * z,
            HolomorphicMap::ScaledExp => Complex::new(S::zero(), lit(3.0)) * (-z * S::PI()).exp(),
            HolomorphicMap::Polynomial { coeffs } => coeffs
                .iter()
                .rev()
                .fold(Complex::new(S::zero(), S::zero()), |acc, &(re, im)| {
                    acc * z + Complex::new(re, im)
                }),
        }
    }

    fn derivative(&self, z: Complex<S>) -> Complex<S> {
        match self {
            HolomorphicMap::Square => z + z,
            HolomorphicMap::Cube => z * z * lit::<S>(3.0),
            HolomorphicMap::ScaledExp => {
                Complex::new(S::zero(), lit(3.0)) * (-z * S::PI()).exp() * (-S::PI())
            }
            HolomorphicMap::Polynomial { coeffs } => {
                let mut acc = Complex::new(S::zero(), S::zero());
                for (k, &(re, im)) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * z + Complex::new(re, im) * lit::<S>(k as f64);
                }
                acc
            }
        }
    }
}

/// A manufactured pair: harmonic value function `u = Re f`, clipped density
/// `m̃ = (Im f)⁺`, and the potential that turns them into a solution of the
/// game with coupling `g(m) = m^{1/q}`.
#[derive(Clone, Debug)]
pub struct HolomorphicExample<S> {
    pub grid: Grid<S>,
    pub value_function: Field<S>,
    pub density: CellField<S>,
    pub nodal_density: Field<S>,
    /// Exact `∇u` at centroids: `(Re f', −Im f')`.
    pub gradient: CellVectorField<S>,
    /// `V = m̃^{1/q} − |∇u|²/2` at centroids.
    pub potential: CellField<S>,
    pub exponent: S,
}

pub fn holomorphic_example<S: Scalar>(
    grid: &Grid<S>,
    map: &HolomorphicMap<S>,
    q: S,
) -> Result<HolomorphicExample<S>, AnalyticError> {
    if grid.dim() != 2 {
        return Err(AnalyticError::RequiresUnitSquare);
    }
    let at = |p: Vec2<S>| Complex::new(p.x, p.y);
    let value_function = Field::from_fn(*grid, |p| map.eval(at(p)).re);
    let density = CellField::from_fn(*grid, |p| map.eval(at(p)).im.max(S::zero()));
    let nodal_density = Field::from_fn(*grid, |p| map.eval(at(p)).im.max(S::zero()));
    let gradient = CellVectorField::from_fn(*grid, |p| {
        let d = map.derivative(at(p));
        Vec2::new(d.re, -d.im)
    });
    let potential = CellField::from_fn(*grid, |p| {
        let f = map.eval(at(p));
        let d = map.derivative(at(p));
        let m = f.im.max(S::zero());
        let grad_sq = d.re * d.re + d.im * d.im;
        m.powf(q.recip()) - grad_sq / lit(2.0)
    });
    Ok(HolomorphicExample {
        grid: *grid,
        value_function,
        density,
        nodal_density,
        gradient,
        potential,
        exponent: q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cell_gradient, gradient_adjoint, CellVectorField};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn residual(m: f64, v: f64, j0: f64) -> f64 {
        m * m * m - v * m * m - j0 * j0 / 2.0
    }

    /// Bisection-only root oracle, independent of the Newton path.
    fn bisect_root(v: f64, j0: f64, mut lo: f64, mut hi: f64) -> f64 {
        assert!(residual(lo, v, j0) < 0.0 && residual(hi, v, j0) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(mid, v, j0) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn cubic_examples() {
        // m³ = 1
        let m = cubic_positive_root(0.0, 2f64.sqrt()).unwrap();
        assert!((m - 1.0).abs() < 1e-12);

        // Threshold case: double root at j₀^{2/3}/2.
        let gamma = threshold_potential(1.0f64);
        assert!((gamma + 1.5).abs() < 1e-14);
        let m = cubic_positive_root(gamma, 1.0).unwrap();
        assert!((m - 0.5).abs() < 1e-6, "threshold root, got {m}");

        // Against the bisection oracle.
        let m = cubic_positive_root(1.0, 1.0).unwrap();
        let expected = bisect_root(1.0, 1.0, 1.0, 2.0);
        assert!((m - expected).abs() < 1e-10);
    }

    #[test]
    fn cubic_rejects_nonpositive_influx() {
        assert!(cubic_positive_root(1.0, 0.0).is_err());
        assert!(cubic_positive_root(1.0, -1.0).is_err());
    }

    #[test]
    fn cubic_residual_and_uniqueness() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..10_000 {
            let v = rng.gen_range(-50.0..50.0);
            let j0 = rng.gen_range(0.01..10.0f64);
            let m = cubic_positive_root(v, j0).unwrap();
            let scale = 1.0f64.max(v.abs().powi(3)).max(j0 * j0);
            assert!(
                residual(m, v, j0).abs() <= 1e-12 * scale,
                "residual too large at v={v}, j0={j0}"
            );
            assert!(m > v.max(0.0));

            // Exactly one sign change on the bracket.
            let lo = v.max(0.0);
            let hi = lo + (j0 * j0 / 2.0).cbrt() + 1.0;
            let mut changes = 0;
            let mut prev = residual(lo, v, j0);
            for k in 1..=256 {
                let t = lo + (hi - lo) * k as f64 / 256.0;
                let cur = residual(t, v, j0);
                if prev < 0.0 && cur >= 0.0 {
                    changes += 1;
                }
                prev = cur;
            }
            assert_eq!(changes, 1, "expected a single crossing above max(0, V)");
        }
    }

    /// Radical/trigonometric closed forms retained as a cross-check of the
    /// bracketed iteration.
    fn cardano_root(v: f64, j0: f64) -> f64 {
        let gamma = threshold_potential(j0);
        if v > gamma {
            let a = (v / 3.0).powi(3) + (j0 / 2.0).powi(2);
            let b = (j0 / 2.0) * (2.0 * (v / 3.0).powi(3) + (j0 / 2.0).powi(2)).sqrt();
            (a + b).cbrt() + (a - b).cbrt() + v / 3.0
        } else if v == gamma {
            j0.powf(2.0 / 3.0) / 2.0
        } else {
            // Three real roots; the positive one is the solution.
            let p = -v * v / 3.0;
            let q = -(2.0 * v.powi(3) / 27.0 + j0 * j0 / 2.0);
            let theta = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).acos();
            let r = 2.0 * (-p / 3.0).sqrt();
            (0..3)
                .map(|k| {
                    r * (theta / 3.0 - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + v / 3.0
                })
                .find(|&m| m > 0.0)
                .expect("one root must be positive")
        }
    }

    #[test]
    fn newton_matches_cardano() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..2000 {
            let j0 = rng.gen_range(0.05..5.0f64);
            let v = rng.gen_range(-20.0..20.0f64);
            let got = cubic_positive_root(v, j0).unwrap();
            let reference = cardano_root(v, j0);
            assert!(
                (got - reference).abs() <= 1e-9 * reference.max(1.0),
                "v={v}, j0={j0}: {got} vs {reference}"
            );
        }
    }

    #[test]
    fn zero_flux_constant_positive_potential() {
        let grid: Grid<f64> = Grid::interval(0.0, 1.0, 50).unwrap();
        for branch in [Branch::Plus, Branch::Minus] {
            let o = zero_flux_oracle(&grid, |_| 1.0, branch).unwrap();
            assert!(o.density.values().iter().all(|&m| m == 1.0));
            assert!(o.value_function.values().iter().all(|&u| u == 0.0));
            assert!(o.slope.values().iter().all(|&s| s == 0.0));
        }
    }

    #[test]
    fn zero_flux_zero_potential() {
        let grid: Grid<f64> = Grid::interval(0.0, 1.0, 10).unwrap();
        let o = zero_flux_oracle(&grid, |_| 0.0, Branch::Plus).unwrap();
        assert!(o.density.values().iter().all(|&m| m == 0.0));
        assert!(o.value_function.values().iter().all(|&u| u == 0.0));
    }

    #[test]
    fn zero_flux_negative_half_potential() {
        // Speed √(2·½) = 1: u± = ±(1−x), slope ∓1, exit anchor 0.
        let grid: Grid<f64> = Grid::interval(0.0, 1.0, 20).unwrap();
        let plus = zero_flux_oracle(&grid, |_| -0.5, Branch::Plus).unwrap();
        let minus = zero_flux_oracle(&grid, |_| -0.5, Branch::Minus).unwrap();
        for node in 0..grid.node_count() {
            let x = grid.node_coord(node).x;
            assert!((plus.value_function.values()[node] - (1.0 - x)).abs() < 1e-13);
            assert!((minus.value_function.values()[node] + (1.0 - x)).abs() < 1e-13);
        }
        assert_eq!(plus.value_function.values()[20], 0.0);
        for cell in 0..grid.cell_count() {
            assert!((plus.slope.values()[cell] + 1.0).abs() < 1e-14);
            assert!((minus.slope.values()[cell] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_flux_current_vanishes_identically() {
        let grid: Grid<f64> = Grid::interval(0.0, 1.0, 97).unwrap();
        let v = |x: f64| (2.0 * std::f64::consts::PI * x).sin();
        let o = zero_flux_oracle(&grid, v, Branch::Plus).unwrap();
        for cell in 0..grid.cell_count() {
            let current = o.density.values()[cell] * o.slope.values()[cell];
            assert_eq!(current, 0.0, "density and slope have disjoint supports");
        }
    }

    #[test]
    fn positive_flux_constant_cases() {
        let grid: Grid<f64> = Grid::interval(0.0, 1.0, 40).unwrap();
        let j0 = 2f64.sqrt();
        let o = positive_flux_oracle(&grid, |_| 0.0, j0, 0.0).unwrap();
        for cell in 0..grid.cell_count() {
            assert!((o.density.values()[cell] - 1.0).abs() < 1e-12);
            assert!((o.slope.values()[cell] + j0).abs() < 1e-12);
        }
        assert_eq!(o.value_function.values()[40], 0.0);

        // Threshold case: m = j₀^{2/3}/2 and slope −j₀/m = −2 j₀^{1/3}.
        let j0 = 1.0;
        let gamma = threshold_potential(j0);
        let o = positive_flux_oracle(&grid, move |_| gamma, j0, 0.0).unwrap();
        for cell in 0..grid.cell_count() {
            assert!((o.density.values()[cell] - 0.5).abs() < 1e-6);
            assert!((o.slope.values()[cell] + 2.0).abs() < 1e-5);
        }
    }

    #[test]
    fn positive_flux_satisfies_the_system_pointwise() {
        let grid: Grid<f64> = Grid::interval(0.0, 1.0, 128).unwrap();
        let v = |x: f64| (2.0 * std::f64::consts::PI * x).sin();
        let j0 = 1.0;
        let o = positive_flux_oracle(&grid, v, j0, 0.0).unwrap();
        for cell in 0..grid.cell_count() {
            let x = grid.cell_centroid(cell).x;
            let m = o.density.values()[cell];
            let ux = o.slope.values()[cell];
            assert!((ux * ux / 2.0 + v(x) - m).abs() < 1e-10, "HJ residual");
            assert!((m * ux + j0).abs() < 1e-10, "current residual");
            assert!(m > 0.0);
        }
    }

    #[test]
    fn exp_trig_fields() {
        let grid: Grid<f64> = Grid::rectangle(0.0, 1.0, 0.0, 1.0, 32, 32).unwrap();
        let o = exp_trig_oracle(&grid).unwrap();

        let mid = grid.node_id(0, 16);
        assert!((o.value_function.values()[mid] - 1.0).abs() < 1e-14);

        // Empty upper half: density vanishes for y ≥ 1/2.
        for cell in 0..grid.cell_count() {
            let c = grid.cell_centroid(cell);
            if c.y >= 0.5 {
                assert_eq!(o.density.values()[cell], 0.0);
            }
        }

        // The current is tangential on the free boundary y = 1/2.
        let pi = std::f64::consts::PI;
        for k in 0..10 {
            let x = k as f64 / 9.0;
            let flux_normal = pi * (-pi * x).exp() * (pi * 0.5).cos();
            assert!(flux_normal.abs() < 1e-12);
        }

        assert!(exp_trig_oracle(&Grid::rectangle(0.0, 2.0, 0.0, 1.0, 8, 8).unwrap()).is_err());
        assert!(exp_trig_oracle(&Grid::interval(0.0, 1.0, 8).unwrap()).is_err());
    }

    #[test]
    fn holomorphic_square_map() {
        let grid: Grid<f64> = Grid::rectangle(0.0, 1.0, 0.0, 1.0, 16, 16).unwrap();
        let ex = holomorphic_example(&grid, &HolomorphicMap::Square, 1.0).unwrap();
        for node in 0..grid.node_count() {
            let p = grid.node_coord(node);
            assert!((ex.value_function.values()[node] - (p.x * p.x - p.y * p.y)).abs() < 1e-13);
        }
        for cell in 0..grid.cell_count() {
            let c = grid.cell_centroid(cell);
            assert!((ex.density.values()[cell] - (2.0 * c.x * c.y).max(0.0)).abs() < 1e-13);
            // Cauchy-Riemann orthogonality: ∇u · ∇m = (2x,−2y)·(2y,2x) = 0.
            let grad_u = ex.gradient.values()[cell];
            let grad_m = Vec2::new(2.0 * c.y, 2.0 * c.x);
            assert!(grad_u.dot(grad_m).abs() < 1e-12);
        }
    }

    #[test]
    fn holomorphic_identity_map() {
        let grid: Grid<f64> = Grid::rectangle(0.0, 1.0, 0.0, 1.0, 8, 8).unwrap();
        let map = HolomorphicMap::Polynomial {
            coeffs: vec![(0.0, 0.0), (1.0, 0.0)],
        };
        let q = 2.0;
        let ex = holomorphic_example(&grid, &map, q).unwrap();
        for cell in 0..grid.cell_count() {
            let c = grid.cell_centroid(cell);
            assert!((ex.density.values()[cell] - c.y.max(0.0)).abs() < 1e-14);
            let v_expected = c.y.max(0.0).powf(1.0 / q) - 0.5;
            assert!((ex.potential.values()[cell] - v_expected).abs() < 1e-13);
        }
    }

    #[test]
    fn holomorphic_scaled_exp_recovers_exp_trig_density() {
        let grid: Grid<f64> = Grid::rectangle(0.0, 1.0, 0.0, 1.0, 24, 24).unwrap();
        let ex = holomorphic_example(&grid, &HolomorphicMap::ScaledExp, 1.0).unwrap();
        let reference = exp_trig_oracle(&grid).unwrap();
        for cell in 0..grid.cell_count() {
            assert!((ex.density.values()[cell] - reference.density.values()[cell]).abs() < 1e-12);
        }
    }

    #[test]
    fn holomorphic_weak_continuity_residual_decays() {
        for map in [HolomorphicMap::Cube, HolomorphicMap::ScaledExp] {
            let mut errors = Vec::new();
            for n in [32usize, 64, 128] {
                let grid: Grid<f64> = Grid::rectangle(0.0, 1.0, 0.0, 1.0, n, n).unwrap();
                let ex = holomorphic_example(&grid, &map, 1.0).unwrap();
                // Weak residual of the continuity equation paired against the
                // interior hat functions, with sampled nodal data.
                let grads = cell_gradient(&ex.value_function);
                let flux = CellVectorField::from_values(
                    grid,
                    ex.density
                        .values()
                        .iter()
                        .zip(grads.values())
                        .map(|(m, g)| *g * *m)
                        .collect(),
                )
                .unwrap();
                let pairing = gradient_adjoint(&flux);
                let mut worst: f64 = 0.0;
                for j in 1..n {
                    for i in 1..n {
                        worst = worst.max(pairing.values()[grid.node_id(i, j)].abs());
                    }
                }
                errors.push(worst);
            }
            assert!(
                errors[1] <= errors[0] / 1.8 && errors[2] <= errors[1] / 1.8,
                "continuity residual must decay at least linearly: {errors:?}"
            );
        }
    }
}
