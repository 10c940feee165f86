//! Uniform tensor meshes on intervals and rectangles, nodal and per-cell
//! fields, boundary classification, and the discrete calculus used by the
//! objective: per-cell gradients, one-point centroid quadrature, boundary
//! quadrature, and the exact adjoint of the gradient stencil.
//!
//! Nodal values live at grid nodes (`(n+1)` or `(n+1)×(n+1)` points); cell
//! quantities live at cell centroids. The 2D cell gradient is the gradient of
//! the bilinear interpolant evaluated at the centroid, so the pairing
//! `Σ vol · q · Dw` is a bilinear form whose adjoint is implemented exactly
//! by [`gradient_adjoint`].

use crate::model::{BoundaryKind, Domain, Side, SideLabels};
use crate::scalar::{lit, Scalar, Vec2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("extents must be finite and ordered")]
    DegenerateExtents,
    #[error("at least two cells per axis are required, got {0}")]
    TooFewCells(usize),
    #[error("boundary labels are for dimension {labels}, grid has dimension {grid}")]
    DimensionMismatch { labels: usize, grid: usize },
    #[error("boundary partition needs both an influx and an exit part")]
    MissingBoundaryPart,
    #[error("value count {got} does not match expected {expected}")]
    CountMismatch { got: usize, expected: usize },
}

/// Uniform 1D or 2D tensor grid. `ny == 0` marks a one-dimensional grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<S> {
    lo: Vec2<S>,
    hi: Vec2<S>,
    nx: usize,
    ny: usize,
}

impl<S: Scalar> Grid<S> {
    pub fn interval(x_lo: S, x_hi: S, nx: usize) -> Result<Self, GridError> {
        if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi) {
            return Err(GridError::DegenerateExtents);
        }
        if nx < 2 {
            return Err(GridError::TooFewCells(nx));
        }
        Ok(Self {
            lo: Vec2::along_x(x_lo),
            hi: Vec2::along_x(x_hi),
            nx,
            ny: 0,
        })
    }

    pub fn rectangle(
        x_lo: S,
        x_hi: S,
        y_lo: S,
        y_hi: S,
        nx: usize,
        ny: usize,
    ) -> Result<Self, GridError> {
        if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi)
            || !(y_lo.is_finite() && y_hi.is_finite() && y_lo < y_hi)
        {
            return Err(GridError::DegenerateExtents);
        }
        if nx < 2 {
            return Err(GridError::TooFewCells(nx));
        }
        if ny < 2 {
            return Err(GridError::TooFewCells(ny));
        }
        Ok(Self {
            lo: Vec2::new(x_lo, y_lo),
            hi: Vec2::new(x_hi, y_hi),
            nx,
            ny,
        })
    }

    pub fn from_domain(domain: &Domain<S>, nx: usize, ny: usize) -> Result<Self, GridError> {
        match *domain {
            Domain::Interval { x_lo, x_hi } => Self::interval(x_lo, x_hi, nx),
            Domain::Rectangle {
                x_lo,
                x_hi,
                y_lo,
                y_hi,
            } => Self::rectangle(x_lo, x_hi, y_lo, y_hi, nx, ny),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        if self.ny == 0 {
            1
        } else {
            2
        }
    }

    #[inline]
    pub fn cells_x(&self) -> usize {
        self.nx
    }

    /// Cells along the y axis; zero for one-dimensional grids.
    #[inline]
    pub fn cells_y(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn spacing_x(&self) -> S {
        (self.hi.x - self.lo.x) / lit(self.nx as f64)
    }

    #[inline]
    pub fn spacing_y(&self) -> S {
        if self.ny == 0 {
            S::zero()
        } else {
            (self.hi.y - self.lo.y) / lit(self.ny as f64)
        }
    }

    #[inline]
    pub fn lo(&self) -> Vec2<S> {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> Vec2<S> {
        self.hi
    }

    #[inline]
    pub fn cell_volume(&self) -> S {
        if self.ny == 0 {
            self.spacing_x()
        } else {
            self.spacing_x() * self.spacing_y()
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.nx * self.ny.max(1)
    }

    /// Node rows: 1 in one dimension, `ny + 1` in two.
    #[inline]
    pub fn node_rows(&self) -> usize {
        self.ny + 1
    }

    /// Cell rows: 1 in one dimension, `ny` in two.
    #[inline]
    pub fn cell_rows(&self) -> usize {
        self.ny.max(1)
    }

    #[inline]
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn cell_id(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node_coord(&self, id: usize) -> Vec2<S> {
        let i = id % (self.nx + 1);
        let j = id / (self.nx + 1);
        Vec2::new(
            self.lo.x + self.spacing_x() * lit(i as f64),
            self.lo.y + self.spacing_y() * lit(j as f64),
        )
    }

    pub fn cell_centroid(&self, id: usize) -> Vec2<S> {
        let i = id % self.nx;
        let j = id / self.nx;
        let half = lit::<S>(0.5);
        Vec2::new(
            self.lo.x + self.spacing_x() * (lit::<S>(i as f64) + half),
            self.lo.y + self.spacing_y() * (lit::<S>(j as f64) + half),
        )
    }
}

/// Nodal scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<S> {
    grid: Grid<S>,
    values: Vec<S>,
}

impl<S: Scalar> Field<S> {
    pub fn constant(grid: Grid<S>, value: S) -> Self {
        let n = grid.node_count();
        Self {
            grid,
            values: vec![value; n],
        }
    }

    pub fn from_fn(grid: Grid<S>, mut f: impl FnMut(Vec2<S>) -> S) -> Self {
        let values = (0..grid.node_count())
            .map(|id| f(grid.node_coord(id)))
            .collect();
        Self { grid, values }
    }

    pub fn from_values(grid: Grid<S>, values: Vec<S>) -> Result<Self, GridError> {
        if values.len() != grid.node_count() {
            return Err(GridError::CountMismatch {
                got: values.len(),
                expected: grid.node_count(),
            });
        }
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn linf_norm(&self) -> S {
        self.values
            .iter()
            .fold(S::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn linf_distance(&self, other: &Field<S>) -> S {
        self.values
            .iter()
            .zip(&other.values)
            .fold(S::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    }
}

/// Per-cell scalar field (one value per cell, attached to the centroid).
#[derive(Clone, Debug, PartialEq)]
pub struct CellField<S> {
    grid: Grid<S>,
    values: Vec<S>,
}

impl<S: Scalar> CellField<S> {
    pub fn constant(grid: Grid<S>, value: S) -> Self {
        let n = grid.cell_count();
        Self {
            grid,
            values: vec![value; n],
        }
    }

    pub fn from_fn(grid: Grid<S>, mut f: impl FnMut(Vec2<S>) -> S) -> Self {
        let values = (0..grid.cell_count())
            .map(|id| f(grid.cell_centroid(id)))
            .collect();
        Self { grid, values }
    }

    pub fn from_values(grid: Grid<S>, values: Vec<S>) -> Result<Self, GridError> {
        if values.len() != grid.cell_count() {
            return Err(GridError::CountMismatch {
                got: values.len(),
                expected: grid.cell_count(),
            });
        }
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn max_value(&self) -> S {
        self.values
            .iter()
            .fold(S::neg_infinity(), |acc, v| acc.max(*v))
    }

    pub fn linf_distance(&self, other: &CellField<S>) -> S {
        self.values
            .iter()
            .zip(&other.values)
            .fold(S::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    }
}

/// Per-cell vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct CellVectorField<S> {
    grid: Grid<S>,
    values: Vec<Vec2<S>>,
}

impl<S: Scalar> CellVectorField<S> {
    pub fn from_fn(grid: Grid<S>, mut f: impl FnMut(Vec2<S>) -> Vec2<S>) -> Self {
        let values = (0..grid.cell_count())
            .map(|id| f(grid.cell_centroid(id)))
            .collect();
        Self { grid, values }
    }

    pub fn from_values(grid: Grid<S>, values: Vec<Vec2<S>>) -> Result<Self, GridError> {
        if values.len() != grid.cell_count() {
            return Err(GridError::CountMismatch {
                got: values.len(),
                expected: grid.cell_count(),
            });
        }
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Vec2<S>] {
        &self.values
    }
}

/// Per-cell gradient of a nodal field.
///
/// 1D: forward difference per cell. 2D: gradient of the bilinear interpolant
/// at the cell centroid (the average of the two parallel edge differences).
pub fn cell_gradient<S: Scalar>(w: &Field<S>) -> CellVectorField<S> {
    let grid = *w.grid();
    let v = w.values();
    let mut out = Vec::with_capacity(grid.cell_count());
    if grid.dim() == 1 {
        let inv_h = grid.spacing_x().recip();
        for i in 0..grid.cells_x() {
            out.push(Vec2::along_x((v[i + 1] - v[i]) * inv_h));
        }
    } else {
        let half = lit::<S>(0.5);
        let inv_hx = grid.spacing_x().recip() * half;
        let inv_hy = grid.spacing_y().recip() * half;
        for j in 0..grid.cells_y() {
            for i in 0..grid.cells_x() {
                let n00 = v[grid.node_id(i, j)];
                let n10 = v[grid.node_id(i + 1, j)];
                let n01 = v[grid.node_id(i, j + 1)];
                let n11 = v[grid.node_id(i + 1, j + 1)];
                let gx = ((n10 - n00) + (n11 - n01)) * inv_hx;
                let gy = ((n01 - n00) + (n11 - n10)) * inv_hy;
                out.push(Vec2::new(gx, gy));
            }
        }
    }
    CellVectorField { grid, values: out }
}

/// Exact adjoint of [`cell_gradient`] with respect to the volume-weighted
/// cell pairing: returns the nodal field `r` with
/// `Σ_c vol · q_c · (Dw)_c = Σ_i r_i w_i` for every nodal `w`.
pub fn gradient_adjoint<S: Scalar>(q: &CellVectorField<S>) -> Field<S> {
    let grid = *q.grid();
    let mut out = vec![S::zero(); grid.node_count()];
    if grid.dim() == 1 {
        // vol · (±1/h) collapses to ±1.
        for (i, qc) in q.values().iter().enumerate() {
            out[i] -= qc.x;
            out[i + 1] += qc.x;
        }
    } else {
        let half = lit::<S>(0.5);
        let wx = grid.spacing_y() * half;
        let wy = grid.spacing_x() * half;
        for j in 0..grid.cells_y() {
            for i in 0..grid.cells_x() {
                let qc = q.values()[grid.cell_id(i, j)];
                let ax = qc.x * wx;
                let ay = qc.y * wy;
                out[grid.node_id(i, j)] -= ax + ay;
                out[grid.node_id(i + 1, j)] += ax - ay;
                out[grid.node_id(i, j + 1)] += ay - ax;
                out[grid.node_id(i + 1, j + 1)] += ax + ay;
            }
        }
    }
    Field { grid, values: out }
}

/// One-point centroid quadrature: `Σ f_c · vol`.
pub fn interior_integral<S: Scalar>(f: &CellField<S>) -> S {
    let vol = f.grid().cell_volume();
    f.values().iter().fold(S::zero(), |acc, v| acc + *v) * vol
}

/// Per-edge record of the boundary discretization.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryEdge<S> {
    pub kind: BoundaryKind,
    pub side: Side,
    /// Adjacent interior cell.
    pub cell: usize,
    pub normal: Vec2<S>,
    /// Arc length (1 for interval endpoints: counting measure).
    pub measure: S,
    pub midpoint: Vec2<S>,
    /// Endpoint nodes (the same node twice at interval endpoints).
    pub nodes: [usize; 2],
}

/// Classified boundary: per-node labels, normals and quadrature weights, and
/// the per-edge view used for flux evaluation.
#[derive(Clone, Debug)]
pub struct BoundaryClass<S> {
    node_kind: Vec<Option<BoundaryKind>>,
    node_normal: Vec<Vec2<S>>,
    neumann_weight: Vec<S>,
    dirichlet_weight: Vec<S>,
    edges: Vec<BoundaryEdge<S>>,
}

impl<S: Scalar> BoundaryClass<S> {
    #[inline]
    pub fn kind(&self, node: usize) -> Option<BoundaryKind> {
        self.node_kind[node]
    }

    #[inline]
    pub fn node_normal(&self, node: usize) -> Vec2<S> {
        self.node_normal[node]
    }

    /// Trapezoid weight of the node within the given boundary part; zero for
    /// nodes not on that part.
    pub fn node_weight(&self, kind: BoundaryKind, node: usize) -> S {
        match kind {
            BoundaryKind::Neumann => self.neumann_weight[node],
            BoundaryKind::Dirichlet => self.dirichlet_weight[node],
        }
    }

    #[inline]
    pub fn edges(&self) -> &[BoundaryEdge<S>] {
        &self.edges
    }

    pub fn dirichlet_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.node_kind
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == Some(BoundaryKind::Dirichlet))
            .map(|(i, _)| i)
    }
}

/// Boundary quadrature of a nodal field over one part of the boundary.
///
/// 1D: point evaluation (counting measure at endpoints). 2D: trapezoid rule
/// along each labeled edge.
pub fn boundary_integral<S: Scalar>(
    class: &BoundaryClass<S>,
    kind: BoundaryKind,
    f: &Field<S>,
) -> S {
    let weights = match kind {
        BoundaryKind::Neumann => &class.neumann_weight,
        BoundaryKind::Dirichlet => &class.dirichlet_weight,
    };
    f.values()
        .iter()
        .zip(weights)
        .fold(S::zero(), |acc, (v, w)| acc + *v * *w)
}

/// Labels every boundary node and edge. Corner nodes shared by an exit and an
/// influx side are labeled Dirichlet, which keeps the constraint set closed.
pub fn classify_boundary<S: Scalar>(
    grid: &Grid<S>,
    sides: &SideLabels,
) -> Result<BoundaryClass<S>, GridError> {
    if sides.dim() != grid.dim() {
        return Err(GridError::DimensionMismatch {
            labels: sides.dim(),
            grid: grid.dim(),
        });
    }
    if !sides.has_kind(BoundaryKind::Neumann) || !sides.has_kind(BoundaryKind::Dirichlet) {
        return Err(GridError::MissingBoundaryPart);
    }

    let n_nodes = grid.node_count();
    let mut node_kind: Vec<Option<BoundaryKind>> = vec![None; n_nodes];
    let mut node_normal = vec![Vec2::zero(); n_nodes];
    let mut neumann_weight = vec![S::zero(); n_nodes];
    let mut dirichlet_weight = vec![S::zero(); n_nodes];
    let mut edges = Vec::new();

    let label = |node: usize, kind: BoundaryKind, nk: &mut Vec<Option<BoundaryKind>>| {
        nk[node] = match (nk[node], kind) {
            (Some(BoundaryKind::Dirichlet), _) | (_, BoundaryKind::Dirichlet) => {
                Some(BoundaryKind::Dirichlet)
            }
            _ => Some(BoundaryKind::Neumann),
        };
    };

    if grid.dim() == 1 {
        for (side, kind) in sides.sides() {
            let (node, cell, normal, x) = match side {
                Side::Left => (0, 0, Vec2::along_x(-S::one()), grid.lo().x),
                _ => (
                    grid.cells_x(),
                    grid.cells_x() - 1,
                    Vec2::along_x(S::one()),
                    grid.hi().x,
                ),
            };
            label(node, kind, &mut node_kind);
            node_normal[node] = normal;
            match kind {
                BoundaryKind::Neumann => neumann_weight[node] = S::one(),
                BoundaryKind::Dirichlet => dirichlet_weight[node] = S::one(),
            }
            edges.push(BoundaryEdge {
                kind,
                side,
                cell,
                normal,
                measure: S::one(),
                midpoint: Vec2::along_x(x),
                nodes: [node, node],
            });
        }
    } else {
        let (nx, ny) = (grid.cells_x(), grid.cells_y());
        let (hx, hy) = (grid.spacing_x(), grid.spacing_y());
        let half = lit::<S>(0.5);
        for (side, kind) in sides.sides() {
            let weights = match kind {
                BoundaryKind::Neumann => &mut neumann_weight,
                BoundaryKind::Dirichlet => &mut dirichlet_weight,
            };
            match side {
                Side::Left | Side::Right => {
                    let (i_node, i_cell, normal) = if side == Side::Left {
                        (0, 0, Vec2::new(-S::one(), S::zero()))
                    } else {
                        (nx, nx - 1, Vec2::new(S::one(), S::zero()))
                    };
                    let x = if side == Side::Left {
                        grid.lo().x
                    } else {
                        grid.hi().x
                    };
                    for j in 0..=ny {
                        let node = grid.node_id(i_node, j);
                        label(node, kind, &mut node_kind);
                        node_normal[node] = node_normal[node] + normal;
                        let w = if j == 0 || j == ny { hy * half } else { hy };
                        weights[node] += w;
                    }
                    for j in 0..ny {
                        edges.push(BoundaryEdge {
                            kind,
                            side,
                            cell: grid.cell_id(i_cell, j),
                            normal,
                            measure: hy,
                            midpoint: Vec2::new(x, grid.lo().y + hy * (lit::<S>(j as f64) + half)),
                            nodes: node_pair(grid, i_node, j, true),
                        });
                    }
                }
                Side::Bottom | Side::Top => {
                    let (j_node, j_cell, normal) = if side == Side::Bottom {
                        (0, 0, Vec2::new(S::zero(), -S::one()))
                    } else {
                        (ny, ny - 1, Vec2::new(S::zero(), S::one()))
                    };
                    let y = if side == Side::Bottom {
                        grid.lo().y
                    } else {
                        grid.hi().y
                    };
                    for i in 0..=nx {
                        let node = grid.node_id(i, j_node);
                        label(node, kind, &mut node_kind);
                        node_normal[node] = node_normal[node] + normal;
                        let w = if i == 0 || i == nx { hx * half } else { hx };
                        weights[node] += w;
                    }
                    for i in 0..nx {
                        edges.push(BoundaryEdge {
                            kind,
                            side,
                            cell: grid.cell_id(i, j_cell),
                            normal,
                            measure: hx,
                            midpoint: Vec2::new(grid.lo().x + hx * (lit::<S>(i as f64) + half), y),
                            nodes: node_pair(grid, i, j_node, false),
                        });
                    }
                }
            }
        }
        for n in node_normal.iter_mut() {
            let len = n.norm();
            if len > S::zero() {
                *n = *n / len;
            }
        }
    }

    Ok(BoundaryClass {
        node_kind,
        node_normal,
        neumann_weight,
        dirichlet_weight,
        edges,
    })
}

fn node_pair<S: Scalar>(grid: &Grid<S>, i: usize, j: usize, vertical: bool) -> [usize; 2] {
    if vertical {
        [grid.node_id(i, j), grid.node_id(i, j + 1)]
    } else {
        [grid.node_id(i, j), grid.node_id(i + 1, j)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoundaryKind::{Dirichlet, Neumann};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn unit_interval(n: usize) -> Grid<f64> {
        Grid::interval(0.0, 1.0, n).unwrap()
    }

    fn unit_square(n: usize) -> Grid<f64> {
        Grid::rectangle(0.0, 1.0, 0.0, 1.0, n, n).unwrap()
    }

    fn mixed_1d() -> SideLabels {
        SideLabels::Interval {
            left: Neumann,
            right: Dirichlet,
        }
    }

    #[test]
    fn build_examples() {
        let g = unit_interval(4);
        assert_eq!(g.spacing_x(), 0.25);
        assert_eq!(g.node_count(), 5);

        let g2 = Grid::rectangle(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        assert_eq!(g2.node_count(), 9);
        assert_eq!(g2.cell_count(), 4);

        assert!(Grid::interval(1.0, 0.0, 4).is_err());
        assert!(Grid::interval(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn gradient_of_linear_fields() {
        let g = unit_interval(4);
        let w = Field::from_values(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        for v in cell_gradient(&w).values() {
            assert!((v.x - 1.0).abs() < 1e-15);
        }

        let g2 = unit_square(2);
        let w2 = Field::from_fn(g2, |p| p.x);
        for v in cell_gradient(&w2).values() {
            assert!((v.x - 1.0).abs() < 1e-15 && v.y.abs() < 1e-15);
        }

        let c = Field::constant(unit_interval(5), 3.0);
        for v in cell_gradient(&c).values() {
            assert_eq!(v.x, 0.0);
        }
    }

    #[test]
    fn gradient_reproduces_affine_exactly() {
        let g = unit_square(7);
        let (a, bx, by) = (0.3, -1.7, 2.4);
        let w = Field::from_fn(g, |p| a + bx * p.x + by * p.y);
        for v in cell_gradient(&w).values() {
            assert!((v.x - bx).abs() < 1e-13);
            assert!((v.y - by).abs() < 1e-13);
        }
    }

    #[test]
    fn interior_integral_examples() {
        let f = CellField::constant(unit_interval(4), 1.0);
        assert!((interior_integral(&f) - 1.0).abs() < 1e-15);

        let f2 = CellField::constant(unit_square(3), 2.0);
        assert!((interior_integral(&f2) - 2.0).abs() < 1e-14);

        let fx = CellField::from_fn(unit_interval(4), |p| p.x);
        assert!((interior_integral(&fx) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn interior_integral_second_order() {
        let exact = 1.0 - (1.0f64).cos();
        let mut errors = Vec::new();
        for n in [16, 32, 64] {
            let f = CellField::from_fn(unit_interval(n), |p| p.x.sin());
            errors.push((interior_integral(&f) - exact).abs());
        }
        assert!(errors[1] < errors[0] / 3.0);
        assert!(errors[2] < errors[1] / 3.0);
    }

    #[test]
    fn adjoint_is_exact() {
        let mut rng = StdRng::seed_from_u64(42);
        for grid in [unit_interval(9), unit_square(5)] {
            let w = Field::from_fn(grid, |_| rng.gen_range(-1.0..1.0));
            let q = CellVectorField::from_fn(grid, |_| {
                Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let vol = grid.cell_volume();
            let lhs: f64 = cell_gradient(&w)
                .values()
                .iter()
                .zip(q.values())
                .map(|(g, qc)| vol * g.dot(*qc))
                .sum();
            let rhs: f64 = gradient_adjoint(&q)
                .values()
                .iter()
                .zip(w.values())
                .map(|(r, wv)| r * wv)
                .sum();
            assert!(
                (lhs - rhs).abs() < 1e-13,
                "adjoint mismatch: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn classify_interval_endpoints() {
        let g = unit_interval(4);
        let class = classify_boundary(&g, &mixed_1d()).unwrap();
        assert_eq!(class.kind(0), Some(Neumann));
        assert_eq!(class.kind(4), Some(Dirichlet));
        assert_eq!(class.kind(2), None);
        assert_eq!(class.node_weight(Neumann, 0), 1.0);
        assert_eq!(class.edges().len(), 2);
    }

    #[test]
    fn classify_square_with_dirichlet_corners() {
        // Left and top influx, right and bottom exit.
        let g = unit_square(4);
        let sides = SideLabels::Rectangle {
            left: Neumann,
            top: Neumann,
            right: Dirichlet,
            bottom: Dirichlet,
        };
        let class = classify_boundary(&g, &sides).unwrap();
        // Corner (1,1) belongs to a Dirichlet and a Neumann side.
        assert_eq!(class.kind(g.node_id(4, 4)), Some(Dirichlet));
        assert_eq!(class.kind(g.node_id(0, 4)), Some(Neumann));
        assert_eq!(class.kind(g.node_id(0, 0)), Some(Dirichlet));
        // Every boundary node is labeled, interior nodes are not.
        for j in 0..=4usize {
            for i in 0..=4usize {
                let on_boundary = i == 0 || i == 4 || j == 0 || j == 4;
                assert_eq!(class.kind(g.node_id(i, j)).is_some(), on_boundary);
            }
        }
        // Unit normals.
        for j in [0usize, 4] {
            for i in 0..=4usize {
                let n = class.node_normal(g.node_id(i, j));
                assert!((n.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn classify_rejects_single_kind() {
        let g = unit_square(4);
        let sides = SideLabels::Rectangle {
            left: Dirichlet,
            right: Dirichlet,
            bottom: Dirichlet,
            top: Dirichlet,
        };
        assert!(classify_boundary(&g, &sides).is_err());
    }

    #[test]
    fn boundary_integral_examples() {
        let g = unit_interval(4);
        let class = classify_boundary(&g, &mixed_1d()).unwrap();
        let mut w = Field::constant(g, 0.0);
        w.values_mut()[0] = 3.0;
        assert_eq!(boundary_integral(&class, Neumann, &w), 3.0);

        let g2 = unit_square(4);
        let sides = SideLabels::Rectangle {
            left: Neumann,
            right: Dirichlet,
            bottom: Dirichlet,
            top: Dirichlet,
        };
        let class2 = classify_boundary(&g2, &sides).unwrap();
        let ones = Field::constant(g2, 1.0);
        assert!((boundary_integral(&class2, Neumann, &ones) - 1.0).abs() < 1e-14);
        let fy = Field::from_fn(g2, |p| p.y);
        assert!((boundary_integral(&class2, Neumann, &fy) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn integral_linear_and_monotone() {
        let g = unit_square(6);
        let mut rng = StdRng::seed_from_u64(1);
        let f = CellField::from_fn(g, |_| rng.gen_range(-1.0..1.0));
        let h = CellField::from_fn(g, |_| rng.gen_range(0.0..1.0));
        let sum = CellField::from_values(
            g,
            f.values()
                .iter()
                .zip(h.values())
                .map(|(a, b)| a + b)
                .collect(),
        )
        .unwrap();
        let lhs = interior_integral(&sum);
        let rhs = interior_integral(&f) + interior_integral(&h);
        assert!((lhs - rhs).abs() < 1e-13);
        // f ≤ f + h pointwise (h ≥ 0) implies the same order for integrals.
        assert!(interior_integral(&f) <= lhs + 1e-15);
    }
}
