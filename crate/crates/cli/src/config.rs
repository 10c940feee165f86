//! Run configuration: a human-editable TOML document (JSON is accepted too)
//! describing the continuous problem, the grid, solver options, the oracle
//! selection, and the comparison/verification tolerances.

use anyhow::{anyhow, bail, Context, Result};
use mfg_core::analytic::{Branch, HolomorphicMap};
use mfg_core::grid::Grid;
use mfg_core::model::{
    Axis, BoundaryKind, BoundarySpec, Coupling, Domain, FuncExpr, Hamiltonian, ProblemSpec, Side,
    SideLabels, TabulatedCoupling,
};
use mfg_core::optimizer::{InitMode, SolveOptions};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub coupling: CouplingConfig,
    pub hamiltonian: HamiltonianConfig,
    pub boundary: BoundaryConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainConfig {
    Interval { x: [f64; 2] },
    Rectangle { x: [f64; 2], y: [f64; 2] },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CouplingConfig {
    QuadraticPositivePart,
    Power {
        a: f64,
        alpha: f64,
    },
    /// Samples of the coupling derivative, piecewise-linear.
    Tabulated {
        points: Vec<(f64, f64)>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HamiltonianConfig {
    QuadraticPlusPotential { potential: ExprConfig },
    Model { beta: f64, coefficient: ExprConfig },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum AxisName {
    X,
    Y,
}

impl From<AxisName> for Axis {
    fn from(a: AxisName) -> Axis {
        match a {
            AxisName::X => Axis::X,
            AxisName::Y => Axis::Y,
        }
    }
}

fn default_axis() -> AxisName {
    AxisName::X
}

/// Named function expressions for potentials, coefficients, influx
/// densities, and exit costs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExprConfig {
    Constant {
        value: f64,
    },
    /// `amplitude * sin(2π frequency t + phase)` of the selected coordinate.
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
        #[serde(default = "default_axis")]
        axis: AxisName,
    },
    SinePositivePart {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
        #[serde(default = "default_axis")]
        axis: AxisName,
    },
    GaussianBump {
        amplitude: f64,
        center: [f64; 2],
        width: f64,
    },
    Polynomial {
        coeffs: Vec<f64>,
        #[serde(default = "default_axis")]
        axis: AxisName,
    },
    Table {
        points: Vec<(f64, f64)>,
        #[serde(default = "default_axis")]
        axis: AxisName,
    },
    ExpTrigPotential,
    ExpTrigValue,
    ExpTrigInflux,
}

impl ExprConfig {
    pub fn to_expr(&self) -> FuncExpr<f64> {
        match self {
            ExprConfig::Constant { value } => FuncExpr::Constant { value: *value },
            ExprConfig::Sine {
                amplitude,
                frequency,
                phase,
                offset,
                axis,
            } => FuncExpr::Sine {
                amplitude: *amplitude,
                frequency: *frequency,
                phase: *phase,
                offset: *offset,
                axis: (*axis).into(),
            },
            ExprConfig::SinePositivePart {
                amplitude,
                frequency,
                phase,
                offset,
                axis,
            } => FuncExpr::SinePositivePart {
                amplitude: *amplitude,
                frequency: *frequency,
                phase: *phase,
                offset: *offset,
                axis: (*axis).into(),
            },
            ExprConfig::GaussianBump {
                amplitude,
                center,
                width,
            } => FuncExpr::GaussianBump {
                amplitude: *amplitude,
                center_x: center[0],
                center_y: center[1],
                width: *width,
            },
            ExprConfig::Polynomial { coeffs, axis } => FuncExpr::Polynomial {
                coeffs: coeffs.clone(),
                axis: (*axis).into(),
            },
            ExprConfig::Table { points, axis } => FuncExpr::Table {
                points: points.clone(),
                axis: (*axis).into(),
            },
            ExprConfig::ExpTrigPotential => FuncExpr::ExpTrigPotential,
            ExprConfig::ExpTrigValue => FuncExpr::ExpTrigValue,
            ExprConfig::ExpTrigInflux => FuncExpr::ExpTrigInflux,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SideName {
    Left,
    Right,
    Bottom,
    Top,
}

impl From<SideName> for Side {
    fn from(s: SideName) -> Side {
        match s {
            SideName::Left => Side::Left,
            SideName::Right => Side::Right,
            SideName::Bottom => Side::Bottom,
            SideName::Top => Side::Top,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BoundaryConfig {
    pub neumann: Vec<SideName>,
    pub dirichlet: Vec<SideName>,
    pub influx: ExprConfig,
    pub exit_cost: ExprConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GridConfig {
    /// Cells per axis: one entry for intervals, two for rectangles.
    pub n: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum InitName {
    ExitCost,
    Zeros,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol_pg: f64,
    pub tol_f: f64,
    pub stall_window: usize,
    pub plateau_window: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub step0: f64,
    pub init: InitName,
    pub polish_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolveOptions::<f64>::default();
        Self {
            max_iters: d.max_iters,
            tol_pg: d.tol_pg,
            tol_f: d.tol_f,
            stall_window: d.stall_window,
            plateau_window: d.plateau_window,
            armijo_c: d.armijo_c,
            backtrack: d.backtrack,
            step0: d.step0,
            init: InitName::ExitCost,
            polish_iters: d.polish_iters,
        }
    }
}

impl SolverConfig {
    pub fn to_options(&self) -> SolveOptions<f64> {
        SolveOptions {
            max_iters: self.max_iters,
            tol_pg: self.tol_pg,
            tol_f: self.tol_f,
            stall_window: self.stall_window,
            plateau_window: self.plateau_window,
            armijo_c: self.armijo_c,
            backtrack: self.backtrack,
            step0: self.step0,
            init: match self.init {
                InitName::ExitCost => InitMode::ExitCost,
                InitName::Zeros => InitMode::Zeros,
            },
            polish_iters: self.polish_iters,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BranchName {
    #[default]
    Plus,
    Minus,
}

impl From<BranchName> for Branch {
    fn from(b: BranchName) -> Branch {
        match b {
            BranchName::Plus => Branch::Plus,
            BranchName::Minus => Branch::Minus,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapConfig {
    Square,
    Cube,
    ScaledExp,
    Polynomial { coeffs: Vec<(f64, f64)> },
}

impl MapConfig {
    pub fn to_map(&self) -> HolomorphicMap<f64> {
        match self {
            MapConfig::Square => HolomorphicMap::Square,
            MapConfig::Cube => HolomorphicMap::Cube,
            MapConfig::ScaledExp => HolomorphicMap::ScaledExp,
            MapConfig::Polynomial { coeffs } => HolomorphicMap::Polynomial {
                coeffs: coeffs.clone(),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum OracleConfig {
    #[serde(rename = "zero-flux-1d")]
    ZeroFlux1d {
        #[serde(default)]
        branch: BranchName,
    },
    #[serde(rename = "positive-flux-1d")]
    PositiveFlux1d,
    #[serde(rename = "exp-trig-2d")]
    ExpTrig2d,
    #[serde(rename = "holomorphic-2d")]
    Holomorphic2d {
        map: MapConfig,
        #[serde(default = "default_exponent")]
        exponent: f64,
    },
}

fn default_exponent() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct CompareConfig {
    pub tol_m_linf: f64,
    pub tol_grad_linf: f64,
    pub tol_objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_m: Option<f64>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            tol_m_linf: 2e-2,
            tol_grad_linf: 5e-2,
            tol_objective: 1e-3,
            eps_m: None,
        }
    }
}

/// Residual thresholds for the verify command and `--strict` solves. Absent
/// entries are reported but not enforced; the grid-resolution residuals
/// (influx error, continuity) default to report-only because they shrink
/// with the mesh, not with solver effort.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct VerifyConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hj_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hj_inequality: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neumann: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dirichlet_sign: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complementarity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_balance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_m: Option<f64>,
}

impl VerifyConfig {
    /// Thresholds enforced under `--strict` when the config leaves them
    /// unset: the conditions a converged solve controls directly, scaled by
    /// the solve tolerance where the guarantee scales with it.
    pub fn with_strict_defaults(&self, tol_pg: f64, node_count: usize, flux_linf: f64) -> Self {
        let mut out = self.clone();
        out.hj_residual = out.hj_residual.or(Some(1e-6));
        out.hj_inequality = out.hj_inequality.or(Some(1e-6));
        out.dirichlet_sign = out.dirichlet_sign.or(Some(10.0 * tol_pg));
        out.complementarity = out
            .complementarity
            .or(Some(10.0 * tol_pg * flux_linf.max(1.0)));
        out.mass_balance = out.mass_balance.or(Some(10.0 * tol_pg * node_count as f64));
        out
    }
}

impl RunConfig {
    /// Reads TOML (default) or JSON, decided by the file extension with a
    /// fallback attempt on the other format.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let is_json = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("json"))
            .unwrap_or(false);
        if is_json {
            serde_json::from_str(&text).context("invalid JSON config")
        } else {
            match toml::from_str::<RunConfig>(&text) {
                Ok(c) => Ok(c),
                Err(toml_err) => serde_json::from_str(&text)
                    .map_err(|_| anyhow!("invalid TOML config: {toml_err}")),
            }
        }
    }

    pub fn to_problem(&self) -> Result<ProblemSpec<f64>> {
        let domain = match &self.domain {
            DomainConfig::Interval { x } => Domain::Interval {
                x_lo: x[0],
                x_hi: x[1],
            },
            DomainConfig::Rectangle { x, y } => Domain::Rectangle {
                x_lo: x[0],
                x_hi: x[1],
                y_lo: y[0],
                y_hi: y[1],
            },
        };
        let coupling = match &self.coupling {
            CouplingConfig::QuadraticPositivePart => Coupling::QuadraticPositivePart,
            CouplingConfig::Power { a, alpha } => Coupling::Power {
                a: *a,
                alpha: *alpha,
            },
            CouplingConfig::Tabulated { points } => {
                Coupling::Tabulated(TabulatedCoupling::new(points.clone())?)
            }
        };
        let hamiltonian = match &self.hamiltonian {
            HamiltonianConfig::QuadraticPlusPotential { potential } => {
                Hamiltonian::QuadraticPlusPotential {
                    potential: potential.to_expr(),
                }
            }
            HamiltonianConfig::Model { beta, coefficient } => Hamiltonian::Model {
                beta: *beta,
                coefficient: coefficient.to_expr(),
            },
        };
        let sides = self.side_labels(&domain)?;
        Ok(ProblemSpec {
            domain,
            coupling,
            hamiltonian,
            boundary: BoundarySpec {
                sides,
                influx: self.boundary.influx.to_expr(),
                exit_cost: self.boundary.exit_cost.to_expr(),
            },
        })
    }

    fn side_labels(&self, domain: &Domain<f64>) -> Result<SideLabels> {
        let kind_of = |side: SideName| -> Result<BoundaryKind> {
            let n = self.boundary.neumann.contains(&side);
            let d = self.boundary.dirichlet.contains(&side);
            match (n, d) {
                (true, false) => Ok(BoundaryKind::Neumann),
                (false, true) => Ok(BoundaryKind::Dirichlet),
                (true, true) => bail!("side {side:?} is labeled both neumann and dirichlet"),
                (false, false) => bail!("side {side:?} is unlabeled"),
            }
        };
        match domain.dim() {
            1 => {
                for s in self.boundary.neumann.iter().chain(&self.boundary.dirichlet) {
                    if !matches!(s, SideName::Left | SideName::Right) {
                        bail!("side {s:?} does not exist on an interval");
                    }
                }
                Ok(SideLabels::Interval {
                    left: kind_of(SideName::Left)?,
                    right: kind_of(SideName::Right)?,
                })
            }
            _ => Ok(SideLabels::Rectangle {
                left: kind_of(SideName::Left)?,
                right: kind_of(SideName::Right)?,
                bottom: kind_of(SideName::Bottom)?,
                top: kind_of(SideName::Top)?,
            }),
        }
    }

    /// Builds the grid, honoring a `--n` override.
    pub fn build_grid(&self, override_n: Option<&[usize]>) -> Result<Grid<f64>> {
        let problem_dim = match &self.domain {
            DomainConfig::Interval { .. } => 1,
            DomainConfig::Rectangle { .. } => 2,
        };
        let n = override_n.unwrap_or(&self.grid.n);
        if n.is_empty() || n.len() > 2 {
            bail!("grid.n must have one or two entries");
        }
        let nx = n[0];
        let ny = n.get(1).copied().unwrap_or(nx);
        let domain = match &self.domain {
            DomainConfig::Interval { x } => Domain::Interval {
                x_lo: x[0],
                x_hi: x[1],
            },
            DomainConfig::Rectangle { x, y } => Domain::Rectangle {
                x_lo: x[0],
                x_hi: x[1],
                y_lo: y[0],
                y_hi: y[1],
            },
        };
        if problem_dim == 1 && n.len() == 2 {
            bail!("interval domains take a single cell count");
        }
        Ok(Grid::from_domain(&domain, nx, ny)?)
    }
}
