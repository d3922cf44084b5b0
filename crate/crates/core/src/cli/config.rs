//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contour::Strategy;
use crate::fastsolve::{Inhomogeneity, PlanOptions};
use crate::operators::{make_grid2d_robin, GridSpec, SectorialBounds, ShiftedSolver, Side};
use crate::rk::TableauKind;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Problem {
    /// `u' + a u = g(t)`.
    Scalar { a: f64 },
    /// `A = diag(values)`, forcing applied to every component.
    Diagonal { values: Vec<f64> },
    /// Dirichlet Laplacian on `(0, length)` with `n` interior points.
    Heat1d { n: usize, length: f64 },
    /// Rectangle with Robin condition `du/dn = beta - rho (u - u_out)` on every side;
    /// `beta = beta_amplitude * forcing(t)` on `heated_sides` and zero elsewhere.
    #[serde(rename = "heat2d_robin")]
    Heat2dRobin { grid: GridSpec, u_out: f64, beta_amplitude: f64, heated_sides: Vec<Side> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Forcing {
    One,
    /// `sin(t)^2`
    Sin2,
}

impl Forcing {
    pub fn value(self, t: f64) -> f64 {
        match self {
            Forcing::One => 1.0,
            Forcing::Sin2 => t.sin().powi(2),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    pub run_csv: Option<PathBuf>,
    pub bench_csv: Option<PathBuf>,
    pub quaderr_csv: Option<PathBuf>,
}

/// Grid of scalar test problems for `quaderr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadErrSweep {
    pub k_list: Vec<usize>,
    pub n_list: Vec<u64>,
    pub a_list: Vec<f64>,
    pub h: f64,
    /// Starting `rho` for the stability-function estimate.
    pub probe_rho: f64,
}

impl Default for QuadErrSweep {
    fn default() -> Self {
        QuadErrSweep {
            k_list: vec![8, 15, 25],
            n_list: vec![5, 10, 17, 20, 24, 90, 110, 124],
            a_list: vec![0.1, 1.0, 10.0],
            h: 0.01,
            probe_rho: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub problem: Problem,
    pub tableau: TableauKind,
    pub n_steps: Option<usize>,
    pub h: Option<f64>,
    pub t_end: Option<f64>,
    pub base: usize,
    pub k_max: usize,
    pub strategy: Strategy,
    pub eps_target: f64,
    pub direct_levels: Option<usize>,
    pub symmetry: bool,
    /// Sector half-angle `phi` used for the contour parameters.
    pub phi: f64,
    pub forcing: Forcing,
    /// Constant initial value in every component.
    pub initial_value: f64,
    pub output: OutputPaths,
    pub quaderr: QuadErrSweep,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::paper_sec5()
    }
}

impl RunConfig {
    /// The 2-D benchmark profile: 40x40 rectangle heated on the top and left sides.
    pub fn paper_sec5() -> Self {
        RunConfig {
            problem: Problem::Heat2dRobin {
                grid: GridSpec { nx: 40, ny: 40, lx: 10.65, ly: 12.64, rho: 0.5, holes: None },
                u_out: 0.0,
                beta_amplitude: 5.0,
                heated_sides: vec![Side::Top, Side::Left],
            },
            tableau: TableauKind::RadauIIA2,
            n_steps: Some(625),
            h: None,
            t_end: Some(20.0),
            base: 5,
            k_max: 15,
            strategy: Strategy::Experiment,
            eps_target: 1e-6,
            direct_levels: None,
            symmetry: true,
            phi: 0.4,
            forcing: Forcing::Sin2,
            initial_value: 0.0,
            output: OutputPaths::default(),
            quaderr: QuadErrSweep::default(),
        }
    }

    /// Named built-in profiles.
    pub fn profile(name: &str) -> Option<Self> {
        match name {
            "paper-sec5" => Some(RunConfig::paper_sec5()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_json(&text)
    }

    /// Step count and step size, resolving whichever of `N`, `h`, `T` is missing.
    pub fn steps(&self) -> Result<(usize, f64)> {
        let bad = |m: String| Err(Error::Config(m));
        match (self.n_steps, self.h, self.t_end) {
            (Some(n), Some(h), Some(t)) => {
                if ((n as f64) * h - t).abs() > 1e-9 * t.abs().max(1.0) {
                    return bad(format!("N h = {} differs from T = {t}", n as f64 * h));
                }
                Ok((n, h))
            }
            (Some(n), Some(h), None) => Ok((n, h)),
            (Some(n), None, Some(t)) => Ok((n, t / n as f64)),
            (None, Some(h), Some(t)) => {
                let n = (t / h).round();
                if (n * h - t).abs() > 1e-9 * t.abs().max(1.0) {
                    return bad(format!("T = {t} is not a multiple of h = {h}"));
                }
                Ok((n as usize, h))
            }
            _ => bad("two of n_steps, h, t_end are required".into()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, h) = self.steps()?;
        if n == 0 || !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("need N >= 1 and h > 0, got N = {n}, h = {h}")));
        }
        if self.base < 2 {
            return Err(Error::Config(format!("base must be >= 2, got {}", self.base)));
        }
        if self.k_max == 0 {
            return Err(Error::Config("k_max must be positive".into()));
        }
        if !(self.eps_target > 0.0 && self.eps_target < 1.0) {
            return Err(Error::Config(format!("eps_target must lie in (0, 1), got {}", self.eps_target)));
        }
        if !(self.phi > 0.0 && self.phi < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Config(format!("phi must lie in (0, pi/2), got {}", self.phi)));
        }
        match &self.problem {
            Problem::Scalar { a } if *a < 0.0 => Err(Error::Config(format!("scalar a must be >= 0, got {a}"))),
            Problem::Diagonal { values } if values.is_empty() || values.iter().any(|v| *v < 0.0) => {
                Err(Error::Config("diagonal values must be non-empty and >= 0".into()))
            }
            Problem::Heat1d { n, length } if *n == 0 || !(*length > 0.0) => {
                Err(Error::Config(format!("heat1d needs n >= 1 and length > 0, got {n}, {length}")))
            }
            _ => Ok(()),
        }
    }

    pub fn plan_options(&self) -> PlanOptions {
        PlanOptions {
            base: self.base,
            k_max: self.k_max,
            strategy: self.strategy,
            eps: self.eps_target,
            direct_levels: self.direct_levels,
            symmetry_reduction: self.symmetry,
            homogeneous: true,
        }
    }

    pub fn sector(&self) -> Result<SectorialBounds> {
        SectorialBounds::symmetric_psd(self.phi).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build_solver(&self) -> Result<ShiftedSolver> {
        let sector = self.sector()?;
        let solver = match &self.problem {
            Problem::Scalar { a } => ShiftedSolver::diagonal(vec![*a], sector),
            Problem::Diagonal { values } => ShiftedSolver::diagonal(values.clone(), sector),
            Problem::Heat1d { n, length } => ShiftedSolver::dirichlet_laplacian_1d(*n, *length, sector)?,
            Problem::Heat2dRobin { grid, .. } => make_grid2d_robin(grid.clone(), self.phi)?,
        };
        Ok(solver)
    }

    pub fn build_forcing(&self, solver: &ShiftedSolver) -> Inhomogeneity {
        let forcing = self.forcing;
        let dim = solver.dimension();
        match &self.problem {
            Problem::Heat2dRobin { u_out, beta_amplitude, heated_sides, .. } => {
                let grid = solver.grid().expect("grid backend");
                let heated = grid.boundary_load(heated_sides);
                let ambient: Vec<f64> = grid
                    .boundary_load(&[Side::Bottom, Side::Top, Side::Left, Side::Right])
                    .into_iter()
                    .map(|w| w * grid.spec().rho * u_out)
                    .collect();
                let support: Vec<usize> = (0..dim).filter(|&i| heated[i] != 0.0 || ambient[i] != 0.0).collect();
                let amp = *beta_amplitude;
                Inhomogeneity::new(move |t| {
                    let beta = amp * forcing.value(t);
                    heated.iter().zip(&ambient).map(|(w, c)| w * beta + c).collect()
                })
                .with_support(support)
            }
            _ => Inhomogeneity::new(move |t| vec![forcing.value(t); dim]),
        }
    }

    pub fn initial_vector(&self, dim: usize) -> Vec<f64> {
        vec![self.initial_value; dim]
    }
}
