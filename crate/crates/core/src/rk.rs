//! Runge-Kutta tableaux and the rational functions they induce.
//!
//! One step of an implicit method applied to `u' + Au = g` reads
//! `u_{n+1} = r(-hA) u_n + h sum_i q_i(-hA) g(t_n + c_i h)` with
//! `r(z) = 1 + z b^T (I - zA)^{-1} 1` and `q(z) = b^T (I - zA)^{-1}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::operators::ShiftedSolver;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableauKind {
    ImplicitEuler,
    #[serde(rename = "radau_iia2")]
    RadauIIA2,
    #[serde(rename = "radau_iia3")]
    RadauIIA3,
}

impl TableauKind {
    pub fn stage_count(self) -> usize {
        match self {
            TableauKind::ImplicitEuler => 1,
            TableauKind::RadauIIA2 => 2,
            TableauKind::RadauIIA3 => 3,
        }
    }
}

impl std::fmt::Display for TableauKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TableauKind::ImplicitEuler => "implicit_euler",
            TableauKind::RadauIIA2 => "radau_iia2",
            TableauKind::RadauIIA3 => "radau_iia3",
        };
        f.write_str(s)
    }
}

/// Decoupling of the stage system: `A^{-1} = T diag(shifts) T^{-1}`.
///
/// A step of the method on `M u' + A u = g` then needs one solve with
/// `(shift_i / h) M + A` per stage.
#[derive(Debug, Clone)]
pub struct StageDecoupling {
    pub shifts: Vec<Complex64>,
    pub t: DMatrix<Complex64>,
    pub t_inv: DMatrix<Complex64>,
    /// `b^T A^{-1}`; equals `e_m^T` for stiffly accurate methods.
    pub d: Vec<f64>,
}

/// Coefficients `(A, b, c)` of an implicit Runge-Kutta method.
#[derive(Debug, Clone)]
pub struct Tableau {
    kind: Option<TableauKind>,
    a: DMatrix<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    decoupling: StageDecoupling,
}

/// `r(z)` together with the row `q(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalPair {
    pub r: Complex64,
    pub q: Vec<Complex64>,
}

/// Stage samples `g(t_n + c_i h)`, one row per stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageVector {
    rows: Vec<Vec<f64>>,
}

impl StageVector {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Ok(StageVector { rows })
    }

    /// Samples a vector-valued `g` at the stage times of step `n` starting at `t_n`.
    pub fn sample(tableau: &Tableau, g: &dyn Fn(f64) -> Vec<f64>, t_n: f64, h: f64) -> Self {
        StageVector { rows: tableau.c.iter().map(|ci| g(t_n + ci * h)).collect() }
    }

    /// Scalar data: every stage carries one value.
    pub fn scalar(values: &[f64]) -> Self {
        StageVector { rows: values.iter().map(|&v| vec![v]).collect() }
    }

    pub fn stage_count(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

// Coefficients from the collocation conditions at the Radau points, evaluated
// in 40-digit arithmetic.
#[allow(clippy::excessive_precision)]
const RADAU2_A: [[f64; 2]; 2] = [[0.416_666_666_666_666_666_666_7, -0.083_333_333_333_333_333_333_33], [0.75, 0.25]];
const RADAU2_B: [f64; 2] = [0.75, 0.25];
#[allow(clippy::excessive_precision)]
const RADAU2_C: [f64; 2] = [0.333_333_333_333_333_333_333_3, 1.0];

#[allow(clippy::excessive_precision)]
const RADAU3_A: [[f64; 3]; 3] = [
    [0.196_815_477_223_660_425_868_4, -0.065_535_425_850_198_388_108_52, 0.023_770_974_348_220_152_420_41],
    [0.394_424_314_739_087_276_997_4, 0.292_073_411_665_228_463_020_5, -0.041_548_752_125_997_930_198_19],
    [0.376_403_062_700_467_275_050_1, 0.512_485_826_188_421_613_838_8, 0.111_111_111_111_111_111_111_1],
];
#[allow(clippy::excessive_precision)]
const RADAU3_B: [f64; 3] =
    [0.376_403_062_700_467_275_050_1, 0.512_485_826_188_421_613_838_8, 0.111_111_111_111_111_111_111_1];
#[allow(clippy::excessive_precision)]
const RADAU3_C: [f64; 3] = [0.155_051_025_721_682_190_180_3, 0.644_948_974_278_317_809_819_7, 1.0];

pub fn make_tableau(kind: TableauKind) -> Tableau {
    let (a, b, c) = match kind {
        TableauKind::ImplicitEuler => (DMatrix::from_element(1, 1, 1.0), vec![1.0], vec![1.0]),
        TableauKind::RadauIIA2 => (DMatrix::from_fn(2, 2, |i, j| RADAU2_A[i][j]), RADAU2_B.to_vec(), RADAU2_C.to_vec()),
        TableauKind::RadauIIA3 => (DMatrix::from_fn(3, 3, |i, j| RADAU3_A[i][j]), RADAU3_B.to_vec(), RADAU3_C.to_vec()),
    };
    let mut t = Tableau::new(a, b, c).expect("built-in tableaux are valid");
    t.kind = Some(kind);
    t
}

impl Tableau {
    /// Builds a tableau, checking that the spectrum of `A` lies in the open right
    /// half-plane and that `A` is diagonalizable.
    pub fn new(a: DMatrix<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let m = b.len();
        if m == 0 || a.nrows() != m || a.ncols() != m || c.len() != m {
            return Err(Error::InvalidParameter("tableau shapes disagree".into()));
        }
        let decoupling = decouple(&a, &b)?;
        Ok(Tableau { kind: None, a, b, c, decoupling })
    }

    pub fn kind(&self) -> Option<TableauKind> {
        self.kind
    }

    pub fn stage_count(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn decoupling(&self) -> &StageDecoupling {
        &self.decoupling
    }

    pub fn eval_rq(&self, z: Complex64) -> Result<RationalPair> {
        eval_rq(self, z)
    }
}

/// Eigen-decomposition of `A^{-1}` for the stage decoupling.
fn decouple(a: &DMatrix<f64>, b: &[f64]) -> Result<StageDecoupling> {
    let m = b.len();
    let mut eig: Vec<Complex64> = a.complex_eigenvalues().iter().copied().collect();
    for &e in &eig {
        if e.re <= 0.0 {
            return Err(Error::UnstableTableau(e));
        }
    }
    eig.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));

    let ac = a.map(|x| Complex64::new(x, 0.0));
    let scale = a.norm().max(1.0);
    let mut t = DMatrix::<Complex64>::zeros(m, m);
    for (col, &mu) in eig.iter().enumerate() {
        // Inverse iteration with a slightly perturbed shift.
        let shift = mu + Complex64::new(1e-9, 1e-9) * scale;
        let shifted = &ac - DMatrix::<Complex64>::identity(m, m) * shift;
        let lu = shifted.lu();
        let mut v = nalgebra::DVector::from_fn(m, |i, _| Complex64::new(1.0 + 0.37 * i as f64, 0.11 * i as f64));
        for _ in 0..4 {
            v = lu.solve(&v).ok_or(Error::NotDiagonalizable)?;
            let nrm = v.norm();
            if !nrm.is_finite() || nrm == 0.0 {
                return Err(Error::NotDiagonalizable);
            }
            v /= Complex64::new(nrm, 0.0);
        }
        let resid = (&ac * &v - &v * mu).norm();
        if resid > 1e-10 * scale {
            return Err(Error::NotDiagonalizable);
        }
        t.set_column(col, &v);
    }
    let t_inv = t.clone().try_inverse().ok_or(Error::NotDiagonalizable)?;
    // Reject near-defective matrices: the reconstruction must be accurate.
    let recon = &t * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig.clone())) * &t_inv;
    if (recon - &ac).norm() > 1e-10 * scale {
        return Err(Error::NotDiagonalizable);
    }

    let a_inv = a.clone().try_inverse().ok_or(Error::NotDiagonalizable)?;
    let d: Vec<f64> = (0..m).map(|j| (0..m).map(|i| b[i] * a_inv[(i, j)]).sum()).collect();
    Ok(StageDecoupling { shifts: eig.iter().map(|e| e.inv()).collect(), t, t_inv, d })
}

/// Evaluates `r(z)` and `q(z)` with one pivoted LU solve of `(I - zA)^T q^T = b`.
pub fn eval_rq(t: &Tableau, z: Complex64) -> Result<RationalPair> {
    let m = t.stage_count();
    let mat = DMatrix::<Complex64>::from_fn(m, m, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        Complex64::new(delta, 0.0) - z * t.a[(j, i)]
    });
    let lu = mat.lu();
    let det = lu.determinant();
    let scale = (1.0 + z.norm() * t.a.norm()).powi(m as i32);
    if !det.is_finite() || det.norm() <= f64::EPSILON * scale {
        return Err(Error::Pole { z });
    }
    let rhs = nalgebra::DVector::from_iterator(m, t.b.iter().map(|&x| Complex64::new(x, 0.0)));
    let q = lu.solve(&rhs).ok_or(Error::Pole { z })?;
    let r = if z.norm() <= 1.0 {
        Complex64::new(1.0, 0.0) + z * q.iter().sum::<Complex64>()
    } else {
        // z (I - zA)^{-1} = A^{-1} ((I - zA)^{-1} - I) gives r = r(inf) + d^T (I - zA)^{-1} 1,
        // which avoids cancellation when r is small.
        let d = &t.decoupling.d;
        let r_inf = 1.0 - d.iter().sum::<f64>();
        // Stiffly accurate methods have r(inf) = 0 exactly; keep rounding noise out.
        let r_inf = if r_inf.abs() < 1e-13 { 0.0 } else { r_inf };
        let rhs = nalgebra::DVector::from_iterator(m, d.iter().map(|&x| Complex64::new(x, 0.0)));
        let y = lu.solve(&rhs).ok_or(Error::Pole { z })?;
        Complex64::new(r_inf, 0.0) + y.iter().sum::<Complex64>()
    };
    Ok(RationalPair { r, q: q.iter().copied().collect() })
}

/// Runge-Kutta time stepping for the scalar test equation `y' = lambda y + g(t)`,
/// one copy per component of `g`. All components share `r(h lambda)` and `q(h lambda)`.
#[derive(Debug, Clone)]
pub struct PanelIntegrator {
    r: Complex64,
    hq: Vec<Complex64>,
    state: Vec<Complex64>,
}

impl PanelIntegrator {
    pub fn new(t: &Tableau, lambda: Complex64, h: f64, dim: usize) -> Result<Self> {
        let rq = eval_rq(t, lambda * h)?;
        Ok(PanelIntegrator {
            r: rq.r,
            hq: rq.q.iter().map(|q| q * h).collect(),
            state: vec![Complex64::new(0.0, 0.0); dim],
        })
    }

    /// `y <- r y + h sum_i q_i g_i`; `stages[i]` holds the samples of stage `i`.
    pub fn step<S: AsRef<[f64]>>(&mut self, stages: &[S]) {
        for y in self.state.iter_mut() {
            *y *= self.r;
        }
        for (hq, row) in self.hq.iter().zip(stages) {
            for (y, &g) in self.state.iter_mut().zip(row.as_ref()) {
                *y += hq * g;
            }
        }
    }

    pub fn r(&self) -> Complex64 {
        self.r
    }

    pub fn state(&self) -> &[Complex64] {
        &self.state
    }

    pub fn into_state(self) -> Vec<Complex64> {
        self.state
    }
}

/// `h sum_j r(h lambda)^{n_end-1-j} q(h lambda) g_j` over the given stage data,
/// computed by time stepping from zero.
pub fn scalar_panel_integrate(
    t: &Tableau,
    lambda: Complex64,
    h: f64,
    stage_data: &[StageVector],
) -> Result<Vec<Complex64>> {
    let dim = stage_data.first().map_or(0, StageVector::dim);
    let mut integ = PanelIntegrator::new(t, lambda, h, dim)?;
    let m = t.stage_count();
    for sv in stage_data {
        if sv.stage_count() != m {
            return Err(Error::DimensionMismatch { expected: m, got: sv.stage_count() });
        }
        if sv.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: sv.dim() });
        }
        integ.step(sv.rows());
    }
    Ok(integ.into_state())
}

/// `n_steps` implicit Runge-Kutta steps on `M u' + A u = g` starting at time `t_start`.
///
/// The stage system is decoupled with the eigenvectors of `A^{-1}`, so every step
/// costs exactly `m` shifted solves `(shift_i / h) M + A`.
pub fn direct_operator_steps(
    t: &Tableau,
    solver: &ShiftedSolver,
    h: f64,
    t_start: f64,
    g: &dyn Fn(f64) -> Vec<f64>,
    u_start: &[f64],
    n_steps: usize,
) -> Result<Vec<f64>> {
    let dim = solver.dimension();
    if u_start.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: u_start.len() });
    }
    let m = t.stage_count();
    let dec = &t.decoupling;
    let shifts: Vec<Complex64> = dec.shifts.iter().map(|s| s / h).collect();
    let mut u = u_start.to_vec();
    for step in 0..n_steps {
        let t_n = t_start + step as f64 * h;
        let au = solver.apply(&u);
        let stages: Vec<Vec<f64>> =
            t.c.iter()
                .map(|ci| {
                    let mut gi = g(t_n + ci * h);
                    if gi.len() != dim {
                        return Err(Error::DimensionMismatch { expected: dim, got: gi.len() });
                    }
                    for (x, y) in gi.iter_mut().zip(&au) {
                        *x -= y;
                    }
                    Ok(gi)
                })
                .collect::<Result<_>>()?;

        let mut w = Vec::with_capacity(m);
        for (i, &shift) in shifts.iter().enumerate() {
            let mut rhs = vec![Complex64::new(0.0, 0.0); dim];
            for (j, gj) in stages.iter().enumerate() {
                let coef = dec.t_inv[(i, j)];
                for (r, &x) in rhs.iter_mut().zip(gj) {
                    *r += coef * x;
                }
            }
            w.push(solver.solve(shift, &rhs)?);
        }
        // u += sum_j d_j Z_j with Z = (T x I) W.
        for (j, &dj) in dec.d.iter().enumerate() {
            if dj == 0.0 {
                continue;
            }
            for (i, wi) in w.iter().enumerate() {
                let coef = dec.t[(j, i)] * dj;
                for (x, wv) in u.iter_mut().zip(wi) {
                    *x += (coef * wv).re;
                }
            }
        }
    }
    Ok(u)
}
