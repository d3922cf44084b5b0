//! The fast algorithm for `u_N`.
//!
//! The discrete variation-of-constants sum
//! `u_N = r(-hA)^N u0 + h sum_j r(-hA)^{N-1-j} q(-hA) g_j`
//! is split by the [`PanelLadder`]. The last `B^direct_levels` steps are taken
//! directly. For each remaining level `l`, every quadrature node `lambda_k` on the
//! level's contour gets a scalar Runge-Kutta integration of `y' = lambda_k y + g`
//! over the level's steps, followed by one shifted solve
//! `(lambda_k M + A) x_k = y_k`; the level contributes
//! `sum_k w_k r(h lambda_k)^{B^{l-1}} x_k`. The initial value is propagated by
//! one more contour quadrature on the coarsest contour.

use log::info;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::contour::{panel_ladder, select_parameters, HyperbolaContour, PanelLadder, QuadNode, Strategy};
use crate::operators::{SectorialBounds, ShiftedSolver};
use crate::rk::{direct_operator_steps, eval_rq, PanelIntegrator, Tableau};
use crate::{powi_complex, Error, Result};

type GFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// Right-hand side `g(t)` with an optional declared support.
pub struct Inhomogeneity {
    eval: Box<GFn>,
    support: Option<Vec<usize>>,
}

impl Inhomogeneity {
    pub fn new(eval: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Inhomogeneity { eval: Box::new(eval), support: None }
    }

    /// `g` vanishes outside `support` (sorted, deduplicated on construction).
    pub fn with_support(mut self, mut support: Vec<usize>) -> Self {
        support.sort_unstable();
        support.dedup();
        self.support = Some(support);
        self
    }

    pub fn zero() -> Self {
        Inhomogeneity::new(|_| Vec::new()).with_support(Vec::new())
    }

    pub fn support(&self) -> Option<&[usize]> {
        self.support.as_deref()
    }

    /// Full vector `g(t)`. A zero-dimensional result is expanded to zeros of length `dim`.
    pub fn eval(&self, t: f64, dim: usize) -> Vec<f64> {
        let v = (self.eval)(t);
        if v.is_empty() {
            vec![0.0; dim]
        } else {
            v
        }
    }

    fn eval_restricted(&self, t: f64, dim: usize) -> Vec<f64> {
        let full = self.eval(t, dim);
        match &self.support {
            Some(s) => s.iter().map(|&i| full[i]).collect(),
            None => full,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOptions {
    pub base: usize,
    pub k_max: usize,
    pub strategy: Strategy,
    pub eps: f64,
    /// `None` picks 1, or 2 when `base <= 3` or `eps <= 1e-8`.
    pub direct_levels: Option<usize>,
    pub symmetry_reduction: bool,
    pub homogeneous: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            base: 5,
            k_max: 15,
            strategy: Strategy::Experiment,
            eps: 1e-6,
            direct_levels: None,
            symmetry_reduction: true,
            homogeneous: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FastRunPlan {
    pub ladder: PanelLadder,
    /// `(level, contour)` for every level handled by quadrature, ascending.
    pub contours: Vec<(usize, HyperbolaContour)>,
    /// Contour for `r(-hA)^N u0`; `None` for all-direct plans.
    pub homogeneous_contour: Option<HyperbolaContour>,
    pub tableau: Tableau,
    pub h: f64,
    pub direct_levels: usize,
    pub symmetry_reduction: bool,
    pub homogeneous: bool,
    pub warnings: Vec<String>,
}

pub fn plan(
    n_step: usize,
    h: f64,
    tableau: &Tableau,
    options: &PlanOptions,
    sector: &SectorialBounds,
) -> Result<FastRunPlan> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step size must be positive, got {h}")));
    }
    let ladder = panel_ladder(n_step, options.base)?;
    let direct_levels = options.direct_levels.unwrap_or(if options.base <= 3 || options.eps <= 1e-8 { 2 } else { 1 });
    if direct_levels == 0 {
        return Err(Error::InvalidParameter("direct_levels must be >= 1".into()));
    }

    let mut contours = Vec::new();
    for level in direct_levels + 1..=ladder.level_count {
        if ladder.is_empty_level(level) {
            continue;
        }
        let c = select_parameters(&options.strategy, h, options.base, level, options.eps, sector, options.k_max)?;
        contours.push((level, c));
    }
    let homogeneous_contour = if contours.is_empty() {
        None
    } else {
        Some(select_parameters(
            &options.strategy,
            h,
            options.base,
            ladder.level_count,
            options.eps,
            sector,
            options.k_max,
        )?)
    };

    let mut warnings = Vec::new();
    if !contours.is_empty() {
        let first_n = ladder.power(direct_levels) as f64;
        let needed = (1.0 / options.eps).ln();
        if first_n < needed {
            let msg = format!(
                "first quadrature panel starts at n = {first_n}, below log(1/eps) = {needed:.2}; \
                 consider more direct levels"
            );
            info!("{msg}");
            warnings.push(msg);
        }
    }

    Ok(FastRunPlan {
        ladder,
        contours,
        homogeneous_contour,
        tableau: tableau.clone(),
        h,
        direct_levels,
        symmetry_reduction: options.symmetry_reduction,
        homogeneous: options.homogeneous,
        warnings,
    })
}

impl FastRunPlan {
    pub fn n_step(&self) -> usize {
        self.ladder.n_step
    }

    pub fn is_all_direct(&self) -> bool {
        self.contours.is_empty()
    }

    /// Number of direct Runge-Kutta steps at the end of the interval.
    pub fn direct_steps(&self) -> usize {
        if self.is_all_direct() {
            self.ladder.n_step
        } else {
            self.ladder.power(self.direct_levels)
        }
    }

    fn nodes(&self, c: &HyperbolaContour) -> Vec<QuadNode> {
        if self.symmetry_reduction {
            c.half_nodes()
        } else {
            c.nodes_weights()
        }
    }

    fn solves_per_contour(&self, c: &HyperbolaContour) -> usize {
        if self.symmetry_reduction {
            c.k_max + 1
        } else {
            2 * c.k_max + 1
        }
    }
}

/// Shifted solves issued by [`run`], known before any numerics.
pub fn predicted_solve_count(plan: &FastRunPlan, include_homogeneous: bool) -> usize {
    let mut count = plan.tableau.stage_count() * plan.direct_steps();
    count += plan.contours.iter().map(|(_, c)| plan.solves_per_contour(c)).sum::<usize>();
    if include_homogeneous {
        if let Some(c) = &plan.homogeneous_contour {
            count += plan.solves_per_contour(c);
        }
    }
    count
}

/// Whether [`run`] will evaluate the homogeneous term for this initial value.
pub fn uses_homogeneous_term(plan: &FastRunPlan, u0: &[f64]) -> bool {
    !plan.is_all_direct() && u0.iter().any(|&x| x != 0.0)
}

/// Contribution of one level: `(level, sum over nodes)`.
fn fast_level(
    plan: &FastRunPlan,
    solver: &ShiftedSolver,
    g: &Inhomogeneity,
    level: usize,
    contour: &HyperbolaContour,
) -> Result<Vec<Complex64>> {
    let t = &plan.tableau;
    let h = plan.h;
    let dim = solver.dimension();
    let nodes = plan.nodes(contour);
    let support_len = g.support().map_or(dim, <[usize]>::len);

    let mut integrators =
        nodes.iter().map(|n| PanelIntegrator::new(t, n.lambda, h, support_len)).collect::<Result<Vec<_>>>()?;
    for j in plan.ladder.level_range(level) {
        let t_j = j as f64 * h;
        let stages: Vec<Vec<f64>> = t.c().iter().map(|ci| g.eval_restricted(t_j + ci * h, dim)).collect();
        for integ in integrators.iter_mut() {
            integ.step(&stages);
        }
    }

    let shift_power = plan.ladder.power(level - 1) as u64;
    let terms = nodes
        .par_iter()
        .zip(integrators.into_par_iter())
        .map(|(node, integ)| {
            let coef = node.weight * powi_complex(integ.r(), shift_power);
            let y = integ.into_state();
            let rhs = match g.support() {
                Some(s) => {
                    let mut full = vec![Complex64::new(0.0, 0.0); dim];
                    for (&i, &v) in s.iter().zip(&y) {
                        full[i] = v;
                    }
                    full
                }
                None => y,
            };
            let x = solver.solve(node.lambda, &rhs)?;
            Ok((node.k, coef, x))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(combine(plan.symmetry_reduction, dim, &terms))
}

/// Deterministic `sum_k c_k x_k` in node order; with symmetry, `k >= 1` terms count twice.
fn combine(symmetric: bool, dim: usize, terms: &[(i64, Complex64, Vec<Complex64>)]) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); dim];
    for (k, coef, x) in terms {
        if symmetric {
            let factor = if *k == 0 { 1.0 } else { 2.0 };
            for (a, xv) in acc.iter_mut().zip(x) {
                *a += factor * (coef * xv).re;
            }
        } else {
            for (a, xv) in acc.iter_mut().zip(x) {
                *a += coef * xv;
            }
        }
    }
    acc
}

/// Approximates `r(-hA)^N u0` (mass case: `r(-h M^{-1} A)^N u0`) on the coarsest contour.
pub fn homogeneous_term(plan: &FastRunPlan, solver: &ShiftedSolver, u0: &[f64]) -> Result<Vec<f64>> {
    let dim = solver.dimension();
    if u0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: u0.len() });
    }
    if u0.iter().all(|&x| x == 0.0) {
        return Ok(vec![0.0; dim]);
    }
    let contour = plan
        .homogeneous_contour
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("all-direct plan has no homogeneous contour".into()))?;
    let mu0: Vec<Complex64> = solver.apply_mass(u0).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    let n = plan.n_step() as u64;
    let terms = plan
        .nodes(contour)
        .par_iter()
        .map(|node| {
            let rq = eval_rq(&plan.tableau, node.lambda * plan.h)?;
            let coef = node.weight * powi_complex(rq.r, n);
            let x = solver.solve(node.lambda, &mu0)?;
            Ok((node.k, coef, x))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(combine(plan.symmetry_reduction, dim, &terms).into_iter().map(|z| z.re).collect())
}

/// Computes the approximation `U_N` of the Runge-Kutta result after `N` steps.
pub fn run(plan: &FastRunPlan, solver: &ShiftedSolver, g: &Inhomogeneity, u0: &[f64]) -> Result<Vec<f64>> {
    let dim = solver.dimension();
    if u0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: u0.len() });
    }
    if let Some(&bad) = g.support().and_then(|s| s.iter().find(|&&i| i >= dim)) {
        return Err(Error::InvalidParameter(format!("support index {bad} outside dimension {dim}")));
    }
    let h = plan.h;
    let gf = |t: f64| g.eval(t, dim);
    if plan.is_all_direct() {
        return direct_operator_steps(&plan.tableau, solver, h, 0.0, &gf, u0, plan.n_step());
    }
    let with_u0 = uses_homogeneous_term(plan, u0);
    if with_u0 && !plan.homogeneous {
        return Err(Error::HomogeneousDisabled);
    }

    let direct = plan.direct_steps();
    let t_start = (plan.n_step() - direct) as f64 * h;
    let mut u = direct_operator_steps(&plan.tableau, solver, h, t_start, &gf, &vec![0.0; dim], direct)?;

    let levels = plan
        .contours
        .par_iter()
        .map(|(level, c)| fast_level(plan, solver, g, *level, c))
        .collect::<Result<Vec<_>>>()?;
    for part in &levels {
        for (x, p) in u.iter_mut().zip(part) {
            *x += p.re;
        }
    }
    if with_u0 {
        for (x, p) in u.iter_mut().zip(homogeneous_term(plan, solver, u0)?) {
            *x += p;
        }
    }
    Ok(u)
}

/// Exact per-level parts `u_N^{(l)}` for a diagonal operator, using explicit powers
/// of `r(-h a)` instead of quadrature. Index 0 is `h q(-hA) g_{N-1}`.
pub fn exact_level_parts(plan: &FastRunPlan, diag: &[f64], g: &Inhomogeneity) -> Result<Vec<Vec<f64>>> {
    let t = &plan.tableau;
    let h = plan.h;
    let n = plan.n_step();
    let dim = diag.len();
    let rq = diag.iter().map(|&a| eval_rq(t, Complex64::new(-h * a, 0.0))).collect::<Result<Vec<_>>>()?;
    let mut parts = Vec::with_capacity(plan.ladder.level_count + 1);
    for level in 0..=plan.ladder.level_count {
        let mut part = vec![0.0; dim];
        for j in plan.ladder.level_range(level) {
            let power = (n - 1 - j) as u64;
            let stages: Vec<Vec<f64>> = t.c().iter().map(|ci| g.eval(j as f64 * h + ci * h, dim)).collect();
            for (i, p) in part.iter_mut().enumerate() {
                let rp = powi_complex(rq[i].r, power);
                let s: Complex64 = rq[i].q.iter().zip(&stages).map(|(q, st)| q * st[i]).sum();
                *p += h * (rp * s).re;
            }
        }
        parts.push(part);
    }
    Ok(parts)
}
