//! Shifted linear solvers `(lambda M + A) x = y` for complex `lambda`.
//!
//! [`ShiftedSolver`] is the only way the time integrators touch the operator.
//! It counts every solve so the work of an algorithm can be checked exactly.

mod banded;
mod grid;

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use banded::BandLu;
pub use grid::{Grid2d, GridSpec, Side};

use crate::{Error, Result};

/// Constants of the resolvent bound `||(lambda + A)^{-1}|| <= M / |lambda - sigma|`
/// for `|arg(lambda - sigma)| <= pi - phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorialBounds {
    pub m_const: f64,
    pub sigma: f64,
    pub phi: f64,
}

impl SectorialBounds {
    pub fn new(m_const: f64, sigma: f64, phi: f64) -> Result<Self> {
        if !(m_const >= 1.0) {
            return Err(Error::InvalidParameter(format!("resolvent constant M = {m_const} < 1")));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&phi) {
            return Err(Error::InvalidParameter(format!("sector angle phi = {phi} outside [0, pi/2)")));
        }
        if !sigma.is_finite() {
            return Err(Error::InvalidParameter("sigma must be finite".into()));
        }
        Ok(SectorialBounds { m_const, sigma, phi })
    }

    /// Bounds for a symmetric positive semi-definite matrix: `sigma = 0`, `M = 1/sin(phi)`.
    pub fn symmetric_psd(phi: f64) -> Result<Self> {
        if !(phi > 0.0) {
            return Err(Error::InvalidParameter(format!("need phi > 0, got {phi}")));
        }
        Self::new(1.0 / phi.sin(), 0.0, phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    DenseLu,
    Tridiagonal,
    Diagonal,
    Grid2d,
}

#[derive(Debug, Clone)]
enum Backend {
    Diagonal(Vec<f64>),
    Tridiagonal { lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64> },
    Dense { a: DMatrix<f64>, mass: Option<DMatrix<f64>> },
    Grid(Grid2d),
}

enum Factor {
    Diagonal(Vec<Complex64>),
    Thomas { pivots: Vec<Complex64>, mult: Vec<Complex64>, upper: Vec<f64> },
    Dense(nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>),
    Band(BandLu),
}

const DEFAULT_CACHE_CAPACITY: usize = 8;

#[derive(Default)]
struct FactorCache {
    map: HashMap<(u64, u64), Arc<Factor>>,
    order: VecDeque<(u64, u64)>,
}

/// Solver for `(lambda M + A) x = y`, with `M = I` unless built by [`make_mass_pair`].
///
/// Factorizations are cached per shift (bounded, oldest evicted first). `solve`
/// takes `&self` and may be called from several threads at once.
pub struct ShiftedSolver {
    backend: Backend,
    bounds: SectorialBounds,
    solves: AtomicUsize,
    cache: Mutex<FactorCache>,
    cache_capacity: usize,
}

impl std::fmt::Debug for ShiftedSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShiftedSolver")
            .field("kind", &self.kind())
            .field("dimension", &self.dimension())
            .field("has_mass", &self.has_mass())
            .field("bounds", &self.bounds)
            .field("solve_count", &self.solve_count())
            .finish()
    }
}

impl ShiftedSolver {
    fn with_backend(backend: Backend, bounds: SectorialBounds) -> Self {
        ShiftedSolver {
            backend,
            bounds,
            solves: AtomicUsize::new(0),
            cache: Mutex::new(FactorCache::default()),
            cache_capacity: DEFAULT_CACHE_CAPACITY,
        }
    }

    pub fn diagonal(values: Vec<f64>, bounds: SectorialBounds) -> Self {
        Self::with_backend(Backend::Diagonal(values), bounds)
    }

    pub fn identity(n: usize) -> Self {
        let bounds = SectorialBounds::symmetric_psd(std::f64::consts::FRAC_PI_8).expect("valid angle");
        Self::diagonal(vec![1.0; n], bounds)
    }

    /// `lower[i] = A[i+1][i]`, `upper[i] = A[i][i+1]`.
    pub fn tridiagonal(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>, bounds: SectorialBounds) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(Error::InvalidParameter("tridiagonal band lengths disagree".into()));
        }
        Ok(Self::with_backend(Backend::Tridiagonal { lower, diag, upper }, bounds))
    }

    /// Dirichlet Laplacian `-u''` on `(0, length)` with `n` interior points.
    pub fn dirichlet_laplacian_1d(n: usize, length: f64, bounds: SectorialBounds) -> Result<Self> {
        if n == 0 || !(length > 0.0) {
            return Err(Error::InvalidGeometry(format!("1-D grid needs n >= 1 and length > 0, got {n}, {length}")));
        }
        let dx = length / (n + 1) as f64;
        let c = 1.0 / (dx * dx);
        Self::tridiagonal(vec![-c; n - 1], vec![2.0 * c; n], vec![-c; n - 1], bounds)
    }

    pub fn dense(a: DMatrix<f64>, bounds: SectorialBounds) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
        }
        Ok(Self::with_backend(Backend::Dense { a, mass: None }, bounds))
    }

    pub fn grid2d(grid: Grid2d, bounds: SectorialBounds) -> Self {
        Self::with_backend(Backend::Grid(grid), bounds)
    }

    pub fn with_cache_capacity(mut self, capacity: usize) -> Self {
        self.cache_capacity = capacity;
        self
    }

    pub fn kind(&self) -> BackendKind {
        match self.backend {
            Backend::Diagonal(_) => BackendKind::Diagonal,
            Backend::Tridiagonal { .. } => BackendKind::Tridiagonal,
            Backend::Dense { .. } => BackendKind::DenseLu,
            Backend::Grid(_) => BackendKind::Grid2d,
        }
    }

    pub fn dimension(&self) -> usize {
        match &self.backend {
            Backend::Diagonal(d) => d.len(),
            Backend::Tridiagonal { diag, .. } => diag.len(),
            Backend::Dense { a, .. } => a.nrows(),
            Backend::Grid(g) => g.dimension(),
        }
    }

    pub fn bounds(&self) -> SectorialBounds {
        self.bounds
    }

    pub fn has_mass(&self) -> bool {
        matches!(&self.backend, Backend::Dense { mass: Some(_), .. })
    }

    pub fn grid(&self) -> Option<&Grid2d> {
        match &self.backend {
            Backend::Grid(g) => Some(g),
            _ => None,
        }
    }

    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::SeqCst)
    }

    /// `A v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match &self.backend {
            Backend::Diagonal(d) => d.iter().zip(v).map(|(a, x)| a * x).collect(),
            Backend::Tridiagonal { lower, diag, upper } => {
                let n = diag.len();
                (0..n)
                    .map(|i| {
                        let mut s = diag[i] * v[i];
                        if i > 0 {
                            s += lower[i - 1] * v[i - 1];
                        }
                        if i + 1 < n {
                            s += upper[i] * v[i + 1];
                        }
                        s
                    })
                    .collect()
            }
            Backend::Dense { a, .. } => (a * DVector::from_column_slice(v)).iter().copied().collect(),
            Backend::Grid(g) => g.apply(v),
        }
    }

    /// `M v`.
    pub fn apply_mass(&self, v: &[f64]) -> Vec<f64> {
        match &self.backend {
            Backend::Dense { mass: Some(m), .. } => (m * DVector::from_column_slice(v)).iter().copied().collect(),
            _ => v.to_vec(),
        }
    }

    /// `(lambda M + A) x` for complex `x`.
    pub fn apply_shifted(&self, lambda: Complex64, x: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = x.iter().map(|z| z.re).collect();
        let im: Vec<f64> = x.iter().map(|z| z.im).collect();
        let (are, aim) = (self.apply(&re), self.apply(&im));
        let (mre, mim) = (self.apply_mass(&re), self.apply_mass(&im));
        (0..x.len()).map(|i| lambda * Complex64::new(mre[i], mim[i]) + Complex64::new(are[i], aim[i])).collect()
    }

    /// Assembled `A`.
    pub fn dense_matrix(&self) -> DMatrix<f64> {
        match &self.backend {
            Backend::Diagonal(d) => DMatrix::from_diagonal(&DVector::from_column_slice(d)),
            Backend::Tridiagonal { lower, diag, upper } => {
                let n = diag.len();
                DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        diag[i]
                    } else if i == j + 1 {
                        lower[j]
                    } else if j == i + 1 {
                        upper[i]
                    } else {
                        0.0
                    }
                })
            }
            Backend::Dense { a, .. } => a.clone(),
            Backend::Grid(g) => g.to_dense(),
        }
    }

    /// Assembled `M` (identity without a mass matrix).
    pub fn dense_mass(&self) -> DMatrix<f64> {
        match &self.backend {
            Backend::Dense { mass: Some(m), .. } => m.clone(),
            _ => DMatrix::identity(self.dimension(), self.dimension()),
        }
    }

    /// Solves `(lambda M + A) x = rhs`. Every call counts as one solve.
    pub fn solve(&self, lambda: Complex64, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        self.solves.fetch_add(1, Ordering::SeqCst);
        let n = self.dimension();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rhs.len() });
        }
        let factor = self.factor_cached(lambda)?;
        let x = match factor.as_ref() {
            Factor::Diagonal(inv) => rhs.iter().zip(inv).map(|(b, d)| b * d).collect(),
            Factor::Thomas { pivots, mult, upper } => {
                let mut y = rhs.to_vec();
                for i in 1..n {
                    let prev = y[i - 1];
                    y[i] -= mult[i - 1] * prev;
                }
                y[n - 1] /= pivots[n - 1];
                for i in (0..n - 1).rev() {
                    let next = y[i + 1];
                    y[i] = (y[i] - next * upper[i]) / pivots[i];
                }
                y
            }
            Factor::Dense(lu) => {
                let b = DVector::from_column_slice(rhs);
                lu.solve(&b).ok_or(Error::Singular { lambda })?.iter().copied().collect()
            }
            Factor::Band(lu) => lu.solve(rhs),
        };
        if x.iter().any(|z: &Complex64| !z.is_finite()) {
            return Err(Error::Singular { lambda });
        }
        Ok(x)
    }

    fn factor_cached(&self, lambda: Complex64) -> Result<Arc<Factor>> {
        let key = (lambda.re.to_bits(), lambda.im.to_bits());
        if self.cache_capacity > 0 {
            if let Some(f) = self.cache.lock().expect("cache lock").map.get(&key) {
                return Ok(Arc::clone(f));
            }
        }
        let f = Arc::new(self.factor(lambda)?);
        if self.cache_capacity > 0 {
            let mut cache = self.cache.lock().expect("cache lock");
            if !cache.map.contains_key(&key) {
                while cache.order.len() >= self.cache_capacity {
                    if let Some(old) = cache.order.pop_front() {
                        cache.map.remove(&old);
                    }
                }
                cache.order.push_back(key);
                cache.map.insert(key, Arc::clone(&f));
            }
        }
        Ok(f)
    }

    fn factor(&self, lambda: Complex64) -> Result<Factor> {
        let singular = Error::Singular { lambda };
        match &self.backend {
            Backend::Diagonal(d) => {
                let inv: Vec<Complex64> = d.iter().map(|&a| (lambda + a).inv()).collect();
                if inv.iter().any(|z| !z.is_finite()) {
                    return Err(singular);
                }
                Ok(Factor::Diagonal(inv))
            }
            Backend::Tridiagonal { lower, diag, upper } => {
                let n = diag.len();
                let mut pivots = Vec::with_capacity(n);
                let mut mult = Vec::with_capacity(n.saturating_sub(1));
                pivots.push(lambda + diag[0]);
                for i in 1..n {
                    let prev = pivots[i - 1];
                    if prev.norm() == 0.0 {
                        return Err(singular);
                    }
                    let l = lower[i - 1] / prev;
                    mult.push(l);
                    pivots.push(lambda + diag[i] - l * upper[i - 1]);
                }
                if pivots.iter().any(|p| p.norm() == 0.0 || !p.is_finite()) {
                    return Err(singular);
                }
                Ok(Factor::Thomas { pivots, mult, upper: upper.clone() })
            }
            Backend::Dense { a, mass } => {
                let n = a.nrows();
                let shifted = DMatrix::from_fn(n, n, |i, j| {
                    let m = match mass {
                        Some(m) => m[(i, j)],
                        None if i == j => 1.0,
                        None => 0.0,
                    };
                    lambda * m + a[(i, j)]
                });
                let lu = shifted.lu();
                if !lu.is_invertible() {
                    return Err(singular);
                }
                Ok(Factor::Dense(lu))
            }
            Backend::Grid(g) => {
                let bw = g.bandwidth();
                BandLu::factor(g.dimension(), bw, bw, |i, j| {
                    let a = g.entry(i, j);
                    if i == j {
                        lambda + a
                    } else {
                        Complex64::new(a, 0.0)
                    }
                })
                .map(Factor::Band)
                .ok_or(singular)
            }
        }
    }
}

/// Builds the Robin-boundary grid Laplacian with identity mass.
///
/// The matrix is symmetric positive semi-definite, so the sector bound holds with
/// `sigma = 0` and `M = 1/sin(phi)` for the chosen `phi`.
pub fn make_grid2d_robin(spec: GridSpec, phi: f64) -> Result<ShiftedSolver> {
    let grid = Grid2d::new(spec)?;
    Ok(ShiftedSolver::grid2d(grid, SectorialBounds::symmetric_psd(phi)?))
}

/// Solver for `(lambda M + A)` with a symmetric positive definite mass matrix.
pub fn make_mass_pair(a: DMatrix<f64>, m: DMatrix<f64>, bounds: SectorialBounds) -> Result<ShiftedSolver> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
    }
    let asym = (&m - m.transpose()).norm();
    if asym > 1e-12 * m.norm() || m.clone().cholesky().is_none() {
        return Err(Error::NotSpd);
    }
    Ok(ShiftedSolver::with_backend(Backend::Dense { a, mass: Some(m) }, bounds))
}
