//! Continuous problem data: congestion coupling, Hamiltonian, potential,
//! boundary partition with influx and exit cost, and sampling-based
//! validation of the structural assumptions the solver relies on.
//!
//! The coupling is specified through a convex, non-decreasing potential `G`
//! whose derivative maps Hamiltonian levels to densities (`m = G'(H(x, Du))`).
//! The congestion law `g` is recovered as the pseudo-inverse of `G'` with the
//! max convention, so `G'(g(mu)) = mu` holds exactly on the range of `G'`.

use crate::scalar::{lit, Scalar, Vec2};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

/// Sample count for midpoint-convexity spot checks in [`ProblemSpec::validate`].
const CONVEXITY_SAMPLES: usize = 1000;
/// Sample count for monotonicity spot checks of the coupling derivative.
const MONOTONICITY_SAMPLES: usize = 1000;
/// Samples per boundary side when checking the influx sign.
const BOUNDARY_SAMPLES: usize = 256;
/// Samples for the coefficient range and potential finiteness checks.
const COEFFICIENT_SAMPLES: usize = 256;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("density value {mu} is outside the range of the coupling derivative")]
    PseudoInverseDomain { mu: f64 },
    #[error("point ({x}, {y}) lies outside the problem domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("invalid coupling table: {0}")]
    InvalidTable(String),
}

/// Coordinate selector for one-argument function expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    #[inline]
    fn pick<S: Scalar>(self, at: Vec2<S>) -> S {
        match self {
            Axis::X => at.x,
            Axis::Y => at.y,
        }
    }
}

/// Named function expressions for potentials, coefficients, influx densities,
/// and exit costs. The catalog covers constants, trigonometric and Gaussian
/// profiles, polynomials, nodal tables with piecewise-linear interpolation,
/// and the exponential-trigonometric family used by the two-dimensional
/// closed-form solution.
#[derive(Clone, Debug, PartialEq)]
pub enum FuncExpr<S> {
    Constant {
        value: S,
    },
    /// `amplitude * sin(2π frequency t + phase) + offset` of the selected
    /// coordinate.
    Sine {
        amplitude: S,
        frequency: S,
        phase: S,
        offset: S,
        axis: Axis,
    },
    /// Positive part of the sine profile above.
    SinePositivePart {
        amplitude: S,
        frequency: S,
        phase: S,
        offset: S,
        axis: Axis,
    },
    /// `amplitude * exp(-|x - center|² / (2 width²))`.
    GaussianBump {
        amplitude: S,
        center_x: S,
        center_y: S,
        width: S,
    },
    /// `c₀ + c₁ t + c₂ t² + …` of the selected coordinate.
    Polynomial {
        coeffs: Vec<S>,
        axis: Axis,
    },
    /// Piecewise-linear interpolant of `(t, value)` samples, clamped outside
    /// the sampled range. Abscissae must be strictly increasing.
    Table {
        axis: Axis,
        points: Vec<(S, S)>,
    },
    /// `3 e^{-πx} cos(πy) − ½ π² e^{-2πx}`.
    ExpTrigPotential,
    /// `e^{-πx} sin(πy)`.
    ExpTrigValue,
    /// `(3π/2) [sin(2πy)]⁺`.
    ExpTrigInflux,
}

impl<S: Scalar> FuncExpr<S> {
    pub fn constant(value: S) -> Self {
        FuncExpr::Constant { value }
    }

    pub fn eval(&self, at: Vec2<S>) -> S {
        let two_pi = S::PI() + S::PI();
        match self {
            FuncExpr::Constant { value } => *value,
            FuncExpr::Sine {
                amplitude,
                frequency,
                phase,
                offset,
                axis,
            } => *amplitude * (two_pi * *frequency * axis.pick(at) + *phase).sin() + *offset,
            FuncExpr::SinePositivePart {
                amplitude,
                frequency,
                phase,
                offset,
                axis,
            } => (*amplitude * (two_pi * *frequency * axis.pick(at) + *phase).sin() + *offset)
                .max(S::zero()),
            FuncExpr::GaussianBump {
                amplitude,
                center_x,
                center_y,
                width,
            } => {
                let d = at - Vec2::new(*center_x, *center_y);
                let w2 = *width * *width;
                *amplitude * (-d.norm_sq() / (w2 + w2)).exp()
            }
            FuncExpr::Polynomial { coeffs, axis } => {
                let t = axis.pick(at);
                coeffs.iter().rev().fold(S::zero(), |acc, &c| acc * t + c)
            }
            FuncExpr::Table { axis, points } => {
                let t = axis.pick(at);
                interp_table(points, t)
            }
            FuncExpr::ExpTrigPotential => {
                let pi = S::PI();
                let ex = (-pi * at.x).exp();
                lit::<S>(3.0) * ex * (pi * at.y).cos() - lit::<S>(0.5) * pi * pi * ex * ex
            }
            FuncExpr::ExpTrigValue => (-S::PI() * at.x).exp() * (S::PI() * at.y).sin(),
            FuncExpr::ExpTrigInflux => {
                let pi = S::PI();
                lit::<S>(1.5) * pi * ((pi + pi) * at.y).sin().max(S::zero())
            }
        }
    }
}

fn interp_table<S: Scalar>(points: &[(S, S)], t: S) -> S {
    match points {
        [] => S::zero(),
        [(_, v)] => *v,
        _ => {
            if t <= points[0].0 {
                return points[0].1;
            }
            if t >= points[points.len() - 1].0 {
                return points[points.len() - 1].1;
            }
            let k = points.partition_point(|&(x, _)| x <= t);
            let (x0, v0) = points[k - 1];
            let (x1, v1) = points[k];
            v0 + (v1 - v0) * (t - x0) / (x1 - x0)
        }
    }
}

/// Tabulated coupling derivative: piecewise-linear, non-negative and
/// non-decreasing samples of `G'`, extended flat to the left and linearly
/// (with the last segment's slope) to the right.
///
/// The first sample value must be zero so the potential stays bounded below,
/// and the last segment must have positive slope so the potential keeps
/// superlinear growth.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedCoupling<S> {
    points: Vec<(S, S)>,
    /// G at each abscissa, anchored to 0 at the left end.
    cumulative: Vec<S>,
    right_slope: S,
}

impl<S: Scalar> TabulatedCoupling<S> {
    pub fn new(points: Vec<(S, S)>) -> Result<Self, ModelError> {
        if points.len() < 2 {
            return Err(ModelError::InvalidTable(
                "at least two samples required".into(),
            ));
        }
        if points[0].1 != S::zero() {
            return Err(ModelError::InvalidTable(
                "first derivative sample must be zero".into(),
            ));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(ModelError::InvalidTable(
                    "abscissae must be strictly increasing".into(),
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(ModelError::InvalidTable(
                    "derivative samples must be non-decreasing".into(),
                ));
            }
        }
        if points.iter().any(|&(_, v)| v < S::zero() || !v.is_finite()) {
            return Err(ModelError::InvalidTable(
                "derivative samples must be finite and non-negative".into(),
            ));
        }
        let last = points.len() - 1;
        let right_slope =
            (points[last].1 - points[last - 1].1) / (points[last].0 - points[last - 1].0);
        if !(right_slope > S::zero()) {
            return Err(ModelError::InvalidTable(
                "last segment must have positive slope".into(),
            ));
        }
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = S::zero();
        cumulative.push(acc);
        for w in points.windows(2) {
            acc += (w[0].1 + w[1].1) * (w[1].0 - w[0].0) / lit(2.0);
            cumulative.push(acc);
        }
        Ok(Self {
            points,
            cumulative,
            right_slope,
        })
    }

    fn value(&self, z: S) -> S {
        let pts = &self.points;
        let n = pts.len();
        if z <= pts[0].0 {
            return S::zero();
        }
        if z >= pts[n - 1].0 {
            let t = z - pts[n - 1].0;
            return self.cumulative[n - 1] + pts[n - 1].1 * t + self.right_slope * t * t / lit(2.0);
        }
        let k = pts.partition_point(|&(x, _)| x <= z);
        let (x0, v0) = pts[k - 1];
        let (x1, v1) = pts[k];
        let slope = (v1 - v0) / (x1 - x0);
        let t = z - x0;
        self.cumulative[k - 1] + v0 * t + slope * t * t / lit(2.0)
    }

    fn derivative(&self, z: S) -> S {
        let pts = &self.points;
        let n = pts.len();
        if z <= pts[0].0 {
            return S::zero();
        }
        if z >= pts[n - 1].0 {
            return pts[n - 1].1 + self.right_slope * (z - pts[n - 1].0);
        }
        interp_table(pts, z)
    }

    fn pseudo_inverse(&self, mu: S) -> Result<S, ModelError> {
        if mu < S::zero() || !mu.is_finite() {
            return Err(ModelError::PseudoInverseDomain {
                mu: mu.to_f64().unwrap_or(f64::NAN),
            });
        }
        let pts = &self.points;
        let n = pts.len();
        if mu >= pts[n - 1].1 {
            return Ok(pts[n - 1].0 + (mu - pts[n - 1].1) / self.right_slope);
        }
        // First sample strictly above mu; the crossing inside the preceding
        // segment is the rightmost point where the derivative equals mu.
        let k = pts.partition_point(|&(_, v)| v <= mu);
        let (x0, v0) = pts[k - 1];
        let (x1, v1) = pts[k];
        Ok(x0 + (mu - v0) * (x1 - x0) / (v1 - v0))
    }
}

/// Congestion coupling given through its convex potential.
#[derive(Clone, Debug, PartialEq)]
pub enum Coupling<S> {
    /// `G(z) = a (z+1)^alpha` on `z ≥ −1`, extended by zero below. The
    /// extension is C¹ because the value and slope both vanish at `z = −1`.
    Power { a: S, alpha: S },
    /// `G(z) = ½ (z⁺)²`, the quadratic coupling with `g(m) = m`.
    QuadraticPositivePart,
    /// Piecewise-linear tabulated derivative; see [`TabulatedCoupling`].
    Tabulated(TabulatedCoupling<S>),
}

impl<S: Scalar> Coupling<S> {
    /// The coupling potential `G`.
    pub fn value(&self, z: S) -> S {
        match self {
            Coupling::Power { a, alpha } => {
                let shifted = z + S::one();
                if shifted <= S::zero() {
                    S::zero()
                } else {
                    *a * shifted.powf(*alpha)
                }
            }
            Coupling::QuadraticPositivePart => {
                let zp = z.max(S::zero());
                zp * zp / lit(2.0)
            }
            Coupling::Tabulated(t) => t.value(z),
        }
    }

    /// The derivative `G'`: maps a Hamiltonian level to a density.
    pub fn derivative(&self, z: S) -> S {
        match self {
            Coupling::Power { a, alpha } => {
                let shifted = z + S::one();
                if shifted <= S::zero() {
                    S::zero()
                } else {
                    *a * *alpha * shifted.powf(*alpha - S::one())
                }
            }
            Coupling::QuadraticPositivePart => z.max(S::zero()),
            Coupling::Tabulated(t) => t.derivative(z),
        }
    }

    /// Pseudo-inverse of the derivative with the max convention
    /// `g(mu) = max { z : G'(z) = mu }`; strictly increasing on the range of
    /// `G'` even across flat regions.
    pub fn pseudo_inverse(&self, mu: S) -> Result<S, ModelError> {
        if mu < S::zero() || !mu.is_finite() {
            return Err(ModelError::PseudoInverseDomain {
                mu: mu.to_f64().unwrap_or(f64::NAN),
            });
        }
        match self {
            Coupling::Power { a, alpha } => {
                if mu == S::zero() {
                    Ok(-S::one())
                } else {
                    Ok((mu / (*a * *alpha)).powf((*alpha - S::one()).recip()) - S::one())
                }
            }
            Coupling::QuadraticPositivePart => Ok(mu),
            Coupling::Tabulated(t) => t.pseudo_inverse(mu),
        }
    }

    /// Growth exponent of the potential (the exponent `alpha`).
    ///
    /// The tabulated variant extends with a linearly growing derivative, so
    /// its potential grows quadratically.
    pub fn growth_exponent(&self) -> S {
        match self {
            Coupling::Power { alpha, .. } => *alpha,
            Coupling::QuadraticPositivePart => lit(2.0),
            Coupling::Tabulated(_) => lit(2.0),
        }
    }

    /// Right end of the flat region of the derivative: densities vanish
    /// exactly where the Hamiltonian level stays below this value.
    pub fn flat_region_end(&self) -> S {
        self.pseudo_inverse(S::zero())
            .expect("zero is always in the range of the coupling derivative")
    }
}

/// Hamiltonian of the control problem.
#[derive(Clone, Debug, PartialEq)]
pub enum Hamiltonian<S> {
    /// `H(x, p) = |p|²/2 + V(x)`; growth exponent fixed at 2.
    QuadraticPlusPotential { potential: FuncExpr<S> },
    /// `H(x, p) = b(x) [(|p|²+1)^{β/2} − 1] + sin(|x|²)` with a positive,
    /// bounded coefficient `b`.
    Model { beta: S, coefficient: FuncExpr<S> },
}

impl<S: Scalar> Hamiltonian<S> {
    pub fn value(&self, x: Vec2<S>, p: Vec2<S>) -> S {
        match self {
            Hamiltonian::QuadraticPlusPotential { potential } => {
                p.norm_sq() / lit(2.0) + potential.eval(x)
            }
            Hamiltonian::Model { beta, coefficient } => {
                let b = coefficient.eval(x);
                b * ((p.norm_sq() + S::one()).powf(*beta / lit(2.0)) - S::one()) + x.norm_sq().sin()
            }
        }
    }

    /// Momentum gradient `D_p H`: the agents' velocity field when evaluated
    /// at `p = Du`.
    pub fn velocity(&self, x: Vec2<S>, p: Vec2<S>) -> Vec2<S> {
        match self {
            Hamiltonian::QuadraticPlusPotential { .. } => p,
            Hamiltonian::Model { beta, coefficient } => {
                let b = coefficient.eval(x);
                let factor = b * *beta * (p.norm_sq() + S::one()).powf(*beta / lit(2.0) - S::one());
                p * factor
            }
        }
    }

    /// Growth exponent in the momentum variable (the exponent `beta`).
    pub fn growth_exponent(&self) -> S {
        match self {
            Hamiltonian::QuadraticPlusPotential { .. } => lit(2.0),
            Hamiltonian::Model { beta, .. } => *beta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Neumann,
    Dirichlet,
}

/// Boundary sides of an interval or axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// Per-side boundary labels; the variant fixes the spatial dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SideLabels {
    Interval {
        left: BoundaryKind,
        right: BoundaryKind,
    },
    Rectangle {
        left: BoundaryKind,
        right: BoundaryKind,
        bottom: BoundaryKind,
        top: BoundaryKind,
    },
}

impl SideLabels {
    pub fn dim(&self) -> usize {
        match self {
            SideLabels::Interval { .. } => 1,
            SideLabels::Rectangle { .. } => 2,
        }
    }

    pub fn sides(&self) -> Vec<(Side, BoundaryKind)> {
        match *self {
            SideLabels::Interval { left, right } => {
                vec![(Side::Left, left), (Side::Right, right)]
            }
            SideLabels::Rectangle {
                left,
                right,
                bottom,
                top,
            } => vec![
                (Side::Left, left),
                (Side::Right, right),
                (Side::Bottom, bottom),
                (Side::Top, top),
            ],
        }
    }

    pub fn kind(&self, side: Side) -> Option<BoundaryKind> {
        self.sides()
            .into_iter()
            .find(|&(s, _)| s == side)
            .map(|(_, k)| k)
    }

    pub fn has_kind(&self, kind: BoundaryKind) -> bool {
        self.sides().iter().any(|&(_, k)| k == kind)
    }
}

/// Boundary data: the partition into influx (Neumann) and exit (Dirichlet)
/// parts, the non-negative influx density, and the exit cost defined on the
/// closure of the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySpec<S> {
    pub sides: SideLabels,
    pub influx: FuncExpr<S>,
    pub exit_cost: FuncExpr<S>,
}

/// Interval or axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain<S> {
    Interval { x_lo: S, x_hi: S },
    Rectangle { x_lo: S, x_hi: S, y_lo: S, y_hi: S },
}

impl<S: Scalar> Domain<S> {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }

    pub fn is_ordered(&self) -> bool {
        match *self {
            Domain::Interval { x_lo, x_hi } => x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi,
            Domain::Rectangle {
                x_lo,
                x_hi,
                y_lo,
                y_hi,
            } => {
                x_lo.is_finite()
                    && x_hi.is_finite()
                    && y_lo.is_finite()
                    && y_hi.is_finite()
                    && x_lo < x_hi
                    && y_lo < y_hi
            }
        }
    }

    /// Containment in the closure, with a small relative slack.
    pub fn contains(&self, at: Vec2<S>) -> bool {
        let eps = S::epsilon().sqrt();
        match *self {
            Domain::Interval { x_lo, x_hi } => {
                let slack = (x_hi - x_lo) * eps;
                at.x >= x_lo - slack && at.x <= x_hi + slack
            }
            Domain::Rectangle {
                x_lo,
                x_hi,
                y_lo,
                y_hi,
            } => {
                let sx = (x_hi - x_lo) * eps;
                let sy = (y_hi - y_lo) * eps;
                at.x >= x_lo - sx && at.x <= x_hi + sx && at.y >= y_lo - sy && at.y <= y_hi + sy
            }
        }
    }

    fn sample(&self, rng: &mut StdRng) -> Vec2<S> {
        match *self {
            Domain::Interval { x_lo, x_hi } => {
                let t: f64 = rng.gen();
                Vec2::along_x(x_lo + (x_hi - x_lo) * lit(t))
            }
            Domain::Rectangle {
                x_lo,
                x_hi,
                y_lo,
                y_hi,
            } => {
                let tx: f64 = rng.gen();
                let ty: f64 = rng.gen();
                Vec2::new(
                    x_lo + (x_hi - x_lo) * lit(tx),
                    y_lo + (y_hi - y_lo) * lit(ty),
                )
            }
        }
    }

    /// Point on the given side at parameter `t ∈ [0, 1]`.
    pub fn boundary_point(&self, side: Side, t: S) -> Vec2<S> {
        match *self {
            Domain::Interval { x_lo, x_hi } => match side {
                Side::Left => Vec2::along_x(x_lo),
                _ => Vec2::along_x(x_hi),
            },
            Domain::Rectangle {
                x_lo,
                x_hi,
                y_lo,
                y_hi,
            } => match side {
                Side::Left => Vec2::new(x_lo, y_lo + (y_hi - y_lo) * t),
                Side::Right => Vec2::new(x_hi, y_lo + (y_hi - y_lo) * t),
                Side::Bottom => Vec2::new(x_lo + (x_hi - x_lo) * t, y_lo),
                Side::Top => Vec2::new(x_lo + (x_hi - x_lo) * t, y_hi),
            },
        }
    }
}

/// The full continuous problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec<S> {
    pub domain: Domain<S>,
    pub coupling: Coupling<S>,
    pub hamiltonian: Hamiltonian<S>,
    pub boundary: BoundarySpec<S>,
}

/// Which assumption a validation finding refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssumptionCheck {
    DomainExtents,
    BoundaryPartition,
    CouplingGrowth,
    CouplingConvexity,
    CouplingMonotonicity,
    HamiltonianGrowth,
    HamiltonianConvexity,
    CoefficientRange,
    InfluxSign,
    ExitCost,
}

/// A violated assumption, with a human-readable message.
#[derive(Clone, Debug)]
pub struct Finding {
    pub check: AssumptionCheck,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}: {}", self.check, self.message)
    }
}

impl<S: Scalar> ProblemSpec<S> {
    /// Growth exponent of the coupling potential.
    pub fn alpha(&self) -> S {
        self.coupling.growth_exponent()
    }

    /// Growth exponent of the Hamiltonian in the momentum variable.
    pub fn beta(&self) -> S {
        self.hamiltonian.growth_exponent()
    }

    /// Sobolev exponent `gamma = alpha * beta` of the natural energy space.
    pub fn sobolev_exponent(&self) -> S {
        self.alpha() * self.beta()
    }

    /// Hamiltonian value with a containment check on the spatial argument.
    pub fn hamiltonian_at(&self, x: Vec2<S>, p: Vec2<S>) -> Result<S, ModelError> {
        if !self.domain.contains(x) {
            return Err(ModelError::OutsideDomain {
                x: x.x.to_f64().unwrap_or(f64::NAN),
                y: x.y.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.hamiltonian.value(x, p))
    }

    /// Velocity field `D_p H` with a containment check.
    pub fn velocity_at(&self, x: Vec2<S>, p: Vec2<S>) -> Result<Vec2<S>, ModelError> {
        if !self.domain.contains(x) {
            return Err(ModelError::OutsideDomain {
                x: x.x.to_f64().unwrap_or(f64::NAN),
                y: x.y.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.hamiltonian.velocity(x, p))
    }

    /// Checks every assumption that can be tested by sampling and returns the
    /// violations found. An empty list means the problem is admissible.
    ///
    /// Sampling is deterministic (fixed seed); sample counts are the module
    /// constants documented above.
    pub fn validate(&self) -> Vec<Finding> {
        let mut findings = Vec::new();
        let mut rng = StdRng::seed_from_u64(0x6d66675f76616c);

        if !self.domain.is_ordered() {
            findings.push(Finding {
                check: AssumptionCheck::DomainExtents,
                message: "domain extents must be finite and ordered".into(),
            });
            // Spatial sampling below needs a usable domain.
            return findings;
        }

        if self.boundary.sides.dim() != self.domain.dim() {
            findings.push(Finding {
                check: AssumptionCheck::BoundaryPartition,
                message: format!(
                    "boundary labels are {}-dimensional but the domain is {}-dimensional",
                    self.boundary.sides.dim(),
                    self.domain.dim()
                ),
            });
            return findings;
        }

        if !self.boundary.sides.has_kind(BoundaryKind::Neumann) {
            findings.push(Finding {
                check: AssumptionCheck::BoundaryPartition,
                message: "influx part of the boundary is empty".into(),
            });
        }
        if !self.boundary.sides.has_kind(BoundaryKind::Dirichlet) {
            findings.push(Finding {
                check: AssumptionCheck::BoundaryPartition,
                message: "exit part of the boundary is empty".into(),
            });
        }

        self.validate_coupling(&mut findings, &mut rng);
        self.validate_hamiltonian(&mut findings, &mut rng);
        self.validate_boundary_data(&mut findings);
        findings
    }

    fn validate_coupling(&self, findings: &mut Vec<Finding>, rng: &mut StdRng) {
        match &self.coupling {
            Coupling::Power { a, alpha } => {
                if !(*alpha > S::one()) {
                    findings.push(Finding {
                        check: AssumptionCheck::CouplingGrowth,
                        message: format!("alpha must exceed 1, got {alpha}"),
                    });
                }
                if !(*a > S::zero()) {
                    findings.push(Finding {
                        check: AssumptionCheck::CouplingGrowth,
                        message: format!("amplitude must be positive, got {a}"),
                    });
                }
            }
            Coupling::QuadraticPositivePart | Coupling::Tabulated(_) => {}
        }
        // If the growth parameters are already wrong, the sampled checks below
        // would only repeat the same defect with noisier messages.
        if findings
            .iter()
            .any(|f| f.check == AssumptionCheck::CouplingGrowth)
        {
            return;
        }

        let mut convexity_failures = 0usize;
        for _ in 0..CONVEXITY_SAMPLES {
            let u = lit::<S>(rng.gen_range(-5.0..100.0));
            let v = lit::<S>(rng.gen_range(-5.0..100.0));
            let mid = (u + v) / lit(2.0);
            let lhs = self.coupling.value(mid);
            let rhs = (self.coupling.value(u) + self.coupling.value(v)) / lit(2.0);
            let slack = lit::<S>(1e-12) * (S::one() + lhs.abs() + rhs.abs());
            if lhs > rhs + slack {
                convexity_failures += 1;
            }
        }
        if convexity_failures > 0 {
            findings.push(Finding {
                check: AssumptionCheck::CouplingConvexity,
                message: format!(
                    "midpoint convexity of the coupling potential failed at {convexity_failures}/{CONVEXITY_SAMPLES} samples"
                ),
            });
        }

        let mut monotonicity_failures = 0usize;
        for _ in 0..MONOTONICITY_SAMPLES {
            let u = lit::<S>(rng.gen_range(-5.0..100.0));
            let v = lit::<S>(rng.gen_range(-5.0..100.0));
            let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
            let dlo = self.coupling.derivative(lo);
            let dhi = self.coupling.derivative(hi);
            let slack = lit::<S>(1e-12) * (S::one() + dlo.abs() + dhi.abs());
            if dlo < -slack || dhi < dlo - slack {
                monotonicity_failures += 1;
            }
        }
        if monotonicity_failures > 0 {
            findings.push(Finding {
                check: AssumptionCheck::CouplingMonotonicity,
                message: format!(
                    "coupling derivative must be non-negative and non-decreasing; failed at {monotonicity_failures}/{MONOTONICITY_SAMPLES} samples"
                ),
            });
        }
    }

    fn validate_hamiltonian(&self, findings: &mut Vec<Finding>, rng: &mut StdRng) {
        if !(self.beta() > S::one()) {
            findings.push(Finding {
                check: AssumptionCheck::HamiltonianGrowth,
                message: format!("beta must exceed 1, got {}", self.beta()),
            });
            return;
        }

        if let Hamiltonian::Model { coefficient, .. } = &self.hamiltonian {
            let mut min_b = S::infinity();
            let mut max_b = S::neg_infinity();
            for _ in 0..COEFFICIENT_SAMPLES {
                let x = self.domain.sample(rng);
                let b = coefficient.eval(x);
                if !b.is_finite() {
                    min_b = S::neg_infinity();
                    break;
                }
                min_b = min_b.min(b);
                max_b = max_b.max(b);
            }
            if !(min_b > S::zero()) || !max_b.is_finite() {
                findings.push(Finding {
                    check: AssumptionCheck::CoefficientRange,
                    message: "coefficient must be positive, finite, and bounded on the domain"
                        .into(),
                });
            }
        }

        if let Hamiltonian::QuadraticPlusPotential { potential } = &self.hamiltonian {
            for _ in 0..COEFFICIENT_SAMPLES {
                let x = self.domain.sample(rng);
                if !potential.eval(x).is_finite() {
                    findings.push(Finding {
                        check: AssumptionCheck::HamiltonianGrowth,
                        message: "potential must be finite on the domain".into(),
                    });
                    break;
                }
            }
        }

        let mut convexity_failures = 0usize;
        for _ in 0..CONVEXITY_SAMPLES {
            let x = self.domain.sample(rng);
            let p = Vec2::new(
                lit::<S>(rng.gen_range(-10.0..10.0)),
                lit::<S>(rng.gen_range(-10.0..10.0)),
            );
            let q = Vec2::new(
                lit::<S>(rng.gen_range(-10.0..10.0)),
                lit::<S>(rng.gen_range(-10.0..10.0)),
            );
            let mid = (p + q) * lit(0.5);
            let lhs = self.hamiltonian.value(x, mid);
            let rhs = (self.hamiltonian.value(x, p) + self.hamiltonian.value(x, q)) / lit(2.0);
            let slack = lit::<S>(1e-12) * (S::one() + lhs.abs() + rhs.abs());
            if lhs > rhs + slack {
                convexity_failures += 1;
            }
        }
        if convexity_failures > 0 {
            findings.push(Finding {
                check: AssumptionCheck::HamiltonianConvexity,
                message: format!(
                    "midpoint convexity of the Hamiltonian in p failed at {convexity_failures}/{CONVEXITY_SAMPLES} samples"
                ),
            });
        }
    }

    fn validate_boundary_data(&self, findings: &mut Vec<Finding>) {
        for (side, kind) in self.boundary.sides.sides() {
            if kind != BoundaryKind::Neumann {
                continue;
            }
            for k in 0..BOUNDARY_SAMPLES {
                let t = lit::<S>(k as f64 / (BOUNDARY_SAMPLES - 1) as f64);
                let x = self.domain.boundary_point(side, t);
                let j = self.boundary.influx.eval(x);
                if !(j >= S::zero()) || !j.is_finite() {
                    findings.push(Finding {
                        check: AssumptionCheck::InfluxSign,
                        message: format!(
                            "influx density is negative or non-finite on the {side:?} side ({j} at parameter {t})"
                        ),
                    });
                    break;
                }
            }
        }

        for (side, _) in self.boundary.sides.sides() {
            for k in 0..8 {
                let t = lit::<S>(k as f64 / 7.0);
                let x = self.domain.boundary_point(side, t);
                if !self.boundary.exit_cost.eval(x).is_finite() {
                    findings.push(Finding {
                        check: AssumptionCheck::ExitCost,
                        message: format!("exit cost is non-finite on the {side:?} side"),
                    });
                    return;
                }
            }
        }
    }
}

/// Smallest constant `C` (over a deterministic sample set) for which the
/// lower bound `−H + D_pH·p ≥ |p|^β / C − C` holds. The bound itself is part
/// of the growth assumptions; its constant is never pinned, so the fitted
/// value is reported rather than asserted.
pub fn fitted_coercivity_constant<S: Scalar>(problem: &ProblemSpec<S>) -> S {
    let mut rng = StdRng::seed_from_u64(0x636f657263);
    let beta = problem.beta();
    let mut fitted = lit::<S>(1e-6);
    for _ in 0..CONVEXITY_SAMPLES {
        let x = problem.domain.sample(&mut rng);
        let scale = 10f64.powf(rng.gen_range(-1.0..3.0));
        let p = Vec2::new(
            lit::<S>(rng.gen_range(-1.0..1.0) * scale),
            lit::<S>(rng.gen_range(-1.0..1.0) * scale),
        );
        let h = problem.hamiltonian.value(x, p);
        let lhs = -h + problem.hamiltonian.velocity(x, p).dot(p);
        let pb = p.norm().powf(beta);
        // Least C with C² + C·lhs − |p|^β ≥ 0.
        let c = (-lhs + (lhs * lhs + lit::<S>(4.0) * pb).sqrt()) / lit(2.0);
        fitted = fitted.max(c);
    }
    fitted
}
