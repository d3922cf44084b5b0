//! Hyperbolic integration contours, trapezoidal nodes and weights, and the
//! geometric panel ladder.
//!
//! The contour `gamma(theta) = mu (1 - sin(alpha + i theta)) + sigma` is the left
//! branch of a hyperbola enclosing the spectrum of `-A`. With `theta_k = k tau`,
//! the nodes are `lambda_k = gamma(theta_k)` and the weights
//! `w_k = (i tau / 2 pi) gamma'(theta_k)`, so that
//! `f(-A) ~ sum_k w_k f(lambda_k) (lambda_k + A)^{-1}`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::operators::{SectorialBounds, ShiftedSolver};
use crate::rk::{eval_rq, Tableau};
use crate::{powi_complex, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolaContour {
    pub mu: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub tau: f64,
    pub k_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadNode {
    pub k: i64,
    pub lambda: Complex64,
    pub weight: Complex64,
}

impl HyperbolaContour {
    pub fn new(mu: f64, alpha: f64, sigma: f64, tau: f64, k_max: usize) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("contour mu must be positive, got {mu}")));
        }
        if !(alpha > 0.0 && alpha < FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!("contour angle alpha = {alpha} outside (0, pi/2)")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("quadrature step tau must be positive, got {tau}")));
        }
        if k_max < 1 {
            return Err(Error::InvalidParameter("need K >= 1".into()));
        }
        if !sigma.is_finite() {
            return Err(Error::InvalidParameter("sigma must be finite".into()));
        }
        Ok(HyperbolaContour { mu, alpha, sigma, tau, k_max })
    }

    /// `gamma(w)` for complex `w`; real `w` lies on the contour.
    pub fn point(&self, w: Complex64) -> Complex64 {
        self.mu * (1.0 - (self.alpha + I * w).sin()) + self.sigma
    }

    /// `gamma'(w) = -i mu cos(alpha + i w)`.
    pub fn derivative(&self, w: Complex64) -> Complex64 {
        -I * self.mu * (self.alpha + I * w).cos()
    }

    pub fn node(&self, k: i64) -> QuadNode {
        let theta = Complex64::new(k as f64 * self.tau, 0.0);
        QuadNode { k, lambda: self.point(theta), weight: I * self.tau / (2.0 * PI) * self.derivative(theta) }
    }

    /// All `2K + 1` nodes, `k = -K..=K`.
    pub fn nodes_weights(&self) -> Vec<QuadNode> {
        let k = self.k_max as i64;
        (-k..=k).map(|k| self.node(k)).collect()
    }

    /// Nodes `k = 0..=K`; the rest are their complex conjugates.
    pub fn half_nodes(&self) -> Vec<QuadNode> {
        (0..=self.k_max as i64).map(|k| self.node(k)).collect()
    }
}

/// Geometric split of the step indices `0..N` by distance to the endpoint.
///
/// Level `l >= 1` holds the `j` with `N - 1 - j` in `[B^{l-1}, B^l)`; level 0 is
/// the last step `j = N - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelLadder {
    pub n_step: usize,
    pub base: usize,
    pub level_count: usize,
    /// `boundaries[l] = n_l = N - B^l` for `l < L`, `boundaries[L] = 0`.
    pub boundaries: Vec<usize>,
}

pub fn panel_ladder(n_step: usize, base: usize) -> Result<PanelLadder> {
    if n_step == 0 {
        return Err(Error::InvalidParameter("need at least one step".into()));
    }
    if base < 2 {
        return Err(Error::InvalidParameter(format!("base must be >= 2, got {base}")));
    }
    let mut level_count = 0;
    let mut power = 1usize;
    while power < n_step {
        power = power.saturating_mul(base);
        level_count += 1;
    }
    let mut boundaries = Vec::with_capacity(level_count + 1);
    let mut power = 1usize;
    for _ in 0..level_count {
        boundaries.push(n_step - power);
        power *= base;
    }
    boundaries.push(0);
    Ok(PanelLadder { n_step, base, level_count, boundaries })
}

impl PanelLadder {
    /// Step indices `[n_l, n_{l-1})` of level `l`, with `n_{-1} = N`.
    pub fn level_range(&self, level: usize) -> Range<usize> {
        assert!(level <= self.level_count, "level {level} beyond L = {}", self.level_count);
        let end = if level == 0 { self.n_step } else { self.boundaries[level - 1] };
        self.boundaries[level]..end
    }

    /// `B^l`, saturating.
    pub fn power(&self, level: usize) -> usize {
        (0..level).fold(1usize, |p, _| p.saturating_mul(self.base))
    }

    pub fn is_empty_level(&self, level: usize) -> bool {
        self.level_range(level).is_empty()
    }
}

/// Constants of the asymptotic parameter choice. `None` fields are derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    /// `mu_l B^l h = c1 log(1/eps)`.
    pub c1: f64,
    /// Lower bound `b` of the stability-function estimate.
    pub lemma_b: f64,
    /// Strip half-width; defaults to `min(alpha, pi/2 - phi - alpha) / 2`.
    pub d: Option<f64>,
    /// `cosh(K tau) = c2`; defaults to the smallest value with `a1 - a2 c2 <= -B/c1`.
    pub c2: Option<f64>,
}

impl Default for TheoryConstants {
    fn default() -> Self {
        TheoryConstants { c1: 0.25, lemma_b: 0.5, d: None, c2: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// `alpha = pi/4`, `mu_l = 3 / (h B^l)`, `tau = 5 / K`.
    Experiment,
    Theory(TheoryConstants),
}

/// Contour for level `level` of the ladder.
///
/// Under [`Strategy::Theory`] the returned `k_max` comes from the parameter rule
/// and the `k_max` argument is ignored.
pub fn select_parameters(
    strategy: &Strategy,
    h: f64,
    base: usize,
    level: usize,
    eps: f64,
    sector: &SectorialBounds,
    k_max: usize,
) -> Result<HyperbolaContour> {
    if level < 1 {
        return Err(Error::InvalidParameter("contours start at level 1".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1)")));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step size must be positive, got {h}")));
    }
    let span = h * (base as f64).powi(level as i32);
    match strategy {
        Strategy::Experiment => {
            let alpha = FRAC_PI_4;
            if alpha >= FRAC_PI_2 - sector.phi {
                return Err(Error::InvalidParameter(format!(
                    "alpha = pi/4 needs sector angle phi < pi/4, got {}",
                    sector.phi
                )));
            }
            HyperbolaContour::new(3.0 / span, alpha, sector.sigma, 5.0 / k_max as f64, k_max)
        }
        Strategy::Theory(tc) => {
            let alpha = FRAC_PI_4.min(0.5 * (FRAC_PI_2 - sector.phi));
            let d = tc.d.unwrap_or_else(|| 0.5 * alpha.min(FRAC_PI_2 - sector.phi - alpha));
            if !(d > 0.0 && alpha - d > 0.0 && alpha + d < FRAC_PI_2 - sector.phi) {
                return Err(Error::InvalidParameter(format!("strip half-width d = {d} not admissible")));
            }
            let log_eps = (1.0 / eps).ln();
            let b = tc.lemma_b;
            let (a0, a1, a2) = (2.0 + 1.5 * b, 2.0 + 2.0 * b, 0.5 * b);
            let mu = tc.c1 * log_eps / span;
            // a0 mu t - 2 pi d / tau <= log(eps) for mu t <= c1 log(1/eps).
            let tau = 2.0 * PI * d / ((1.0 + a0 * tc.c1) * log_eps);
            let c2 = tc.c2.unwrap_or((a1 + base as f64 / tc.c1) / a2).max(1.0);
            let k = (c2.acosh() / tau).ceil().max(1.0) as usize;
            HyperbolaContour::new(mu, alpha, sector.sigma, tau, k)
        }
    }
}

/// `sum_k w_k (lambda_k + A)^{-1} r(h lambda_k)^n q_i(h lambda_k) v`, one vector per stage `i`.
///
/// Issues `2K + 1` solves.
pub fn quad_approx_rn_q(
    c: &HyperbolaContour,
    t: &Tableau,
    solver: &ShiftedSolver,
    h: f64,
    n: u64,
    v: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    let dim = solver.dimension();
    if v.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
    }
    let m = t.stage_count();
    let rhs: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; m];
    for node in c.nodes_weights() {
        let rq = eval_rq(t, node.lambda * h)?;
        let x = solver.solve(node.lambda, &rhs)?;
        let scale = node.weight * powi_complex(rq.r, n);
        for (acc, qi) in out.iter_mut().zip(&rq.q) {
            let coef = scale * qi;
            for (a, xv) in acc.iter_mut().zip(&x) {
                *a += coef * xv;
            }
        }
    }
    Ok(out)
}
