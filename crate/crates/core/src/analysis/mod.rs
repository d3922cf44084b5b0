//! Error bounds for the truncated trapezoidal rule on hyperbolic contours, and
//! direct measurements of that error where the exact answer is computable.
//!
//! Notation: `G_{h,n}(w) = (1/2 pi i) (gamma(w) + A)^{-1} r(h gamma(w))^n q(h gamma(w)) gamma'(w)`
//! on the strip `|Im w| <= d`, and `E_{tau,K}(G) = int G - tau sum_{|k|<=K} G(k tau)`.
//! The region `Omega_delta` is the image of that strip under
//! `w -> delta (1 - sin(alpha + i w))`.
//!
//! Suprema over regions are estimated by deterministic dense sampling.

mod quadrature;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use quadrature::{integrate, integrate_to_infinity};

use crate::contour::HyperbolaContour;
use crate::operators::SectorialBounds;
use crate::rk::{eval_rq, Tableau};
use crate::{powi_complex, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Constants of `|r(z)| <= e^{2 delta} / (1 + b |z|)` on `Omega_delta`, `0 < delta <= rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Constants {
    pub rho: f64,
    pub b: f64,
}

/// Inputs of the final quadrature error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub c0: f64,
    pub b: f64,
    /// Largest `delta = h mu` covered by the stability-function estimate.
    pub rho: f64,
    pub mu: f64,
    /// `t = n h`.
    pub t: f64,
    pub n: u64,
    pub d: f64,
    pub tau: f64,
    pub k_max: usize,
}

/// Sample grid of `Omega_delta` for `delta` in `(0, rho]`: `n_delta` evenly spaced
/// values plus a geometric tail down to `1e-5 rho`, where the `e^{2 delta}` slack vanishes.
fn region_samples(
    alpha: f64,
    d: f64,
    rho: f64,
    n_delta: usize,
    n_y: usize,
    n_x: usize,
    x_max: f64,
) -> Vec<(f64, Complex64)> {
    let deltas: Vec<f64> = (1..=10)
        .map(|k| rho * 10f64.powf(-0.5 * k as f64))
        .chain((1..=n_delta).map(|i| rho * i as f64 / n_delta as f64))
        .collect();
    let mut out = Vec::with_capacity(deltas.len() * n_y * n_x);
    for delta in deltas {
        for j in 0..n_y {
            let y = -d + 2.0 * d * j as f64 / (n_y - 1) as f64;
            for k in 0..n_x {
                let x = -x_max + 2.0 * x_max * k as f64 / (n_x - 1) as f64;
                out.push((delta, region_point(alpha, delta, x, y)));
            }
        }
    }
    out
}

/// `delta (1 - sin(alpha + i (x + i y)))`.
pub fn region_point(alpha: f64, delta: f64, x: f64, y: f64) -> Complex64 {
    delta * (1.0 - Complex64::new(alpha - y, x).sin())
}

/// Default strip half-width: the midpoint of the admissible range.
pub fn default_strip_half_width(alpha: f64, phi: f64) -> f64 {
    0.5 * alpha.min(std::f64::consts::FRAC_PI_2 - phi - alpha)
}

/// Rounds a positive number down to two significant digits.
fn floor_2sig(x: f64) -> f64 {
    let e = x.log10().floor() - 1.0;
    let s = 10f64.powf(e);
    (x / s).floor() * s
}

/// Largest `b` admissible on the sample grid for a given `rho`, or `None` when
/// the grid hits a pole.
fn lemma1_b_on_grid(t: &Tableau, alpha: f64, d: f64, rho: f64) -> Option<f64> {
    let mut b = f64::INFINITY;
    for (delta, z) in region_samples(alpha, d, rho, 16, 9, 241, 20.0) {
        let r = eval_rq(t, z).ok()?.r.norm();
        if r == 0.0 {
            continue;
        }
        b = b.min(((2.0 * delta).exp() / r - 1.0) / z.norm());
    }
    Some(b)
}

/// Finds `(rho, b)` for the stability-function estimate by dense sampling,
/// halving `rho` from `probe_rho` until a positive `b` exists.
///
/// The returned `b` is 90% of the sampled infimum, rounded down to two digits.
pub fn estimate_lemma1(t: &Tableau, alpha: f64, d: f64, probe_rho: f64) -> Result<Lemma1Constants> {
    if !(probe_rho > 0.0) || !(d > 0.0 && alpha - d > 0.0 && alpha + d < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!("bad region alpha = {alpha}, d = {d}, rho = {probe_rho}")));
    }
    let mut rho = probe_rho;
    while rho >= 1e-3 {
        if let Some(b) = lemma1_b_on_grid(t, alpha, d, rho) {
            if b > 0.0 && b.is_finite() {
                return Ok(Lemma1Constants { rho, b: floor_2sig(0.9 * b) });
            }
        }
        rho *= 0.5;
    }
    Err(Error::Lemma1Failed { rho })
}

/// `max ||q(z)||` over `Omega_delta`, `0 < delta <= rho`, inflated by 10%.
pub fn max_q_norm(t: &Tableau, alpha: f64, d: f64, rho: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (_, z) in region_samples(alpha, d, rho, 16, 11, 121, 12.0) {
        let q = eval_rq(t, z)?.q;
        best = best.max(q.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt());
    }
    Ok(1.1 * best)
}

/// `C_0 = (M / 2 pi) sqrt((1 + sin(alpha + d)) / (1 - sin(alpha + d))) max ||q||`.
pub fn c0_constant(t: &Tableau, sector: &SectorialBounds, alpha: f64, d: f64, rho: f64) -> Result<f64> {
    let s = (alpha + d).sin();
    Ok(sector.m_const / (2.0 * PI) * ((1.0 + s) / (1.0 - s)).sqrt() * max_q_norm(t, alpha, d, rho)?)
}

/// `2 + |log(1 - e^{-a/2})|`.
pub fn phi(a: f64) -> f64 {
    2.0 + (-(-0.5 * a).exp()).ln_1p().abs()
}

/// Bound on `int_R^inf (1 + (a/n) cosh x)^{-n} dx`.
pub fn lemma3_bound(r_low: f64, a: f64, n: u64) -> f64 {
    let ch = r_low.cosh();
    phi(a) * (-0.5 * a * ch).exp() + (1.0 + a / n as f64 * ch).powf(-(n as f64 - 1.0))
}

/// Bound on `||E_{tau,K}(G)||` for `G` analytic on the strip of half-width `d`
/// with strip norm `n_strip` and `||G(x)|| <= c_decay (1 + (a/n) cosh x)^{-n}`.
pub fn theorem2_bound(n_strip: f64, c_decay: f64, a: f64, n: u64, d: f64, tau: f64, k_max: usize) -> f64 {
    let ch = (k_max as f64 * tau).cosh();
    n_strip / ((2.0 * PI * d / tau).exp() - 1.0)
        + c_decay * (phi(a) * (-0.5 * a * ch).exp() + (1.0 + a / n as f64 * ch).powf(-(n as f64 - 1.0)))
}

/// Final error bound for `E_{tau,K}(G_{h,n})`, valid when `n/2 >= b mu t >= 1`
/// and `h mu <= rho`.
pub fn theorem3_bound(inp: &BoundInputs) -> Result<f64> {
    let BoundInputs { c0, b, rho, mu, t, n, d, tau, k_max } = *inp;
    let bmt = b * mu * t;
    let nf = n as f64;
    if !(nf / 2.0 >= bmt && bmt >= 1.0) {
        return Err(Error::TheoremInapplicable(format!("need n/2 >= b mu t >= 1, got n = {n}, b mu t = {bmt}")));
    }
    let h_mu = mu * t / nf;
    if h_mu > rho * (1.0 + 1e-12) {
        return Err(Error::TheoremInapplicable(format!("h mu = {h_mu} exceeds rho = {rho}")));
    }
    let (a0, a1, a2) = (2.0 + 1.5 * b, 2.0 + 2.0 * b, 0.5 * b);
    let ch = (k_max as f64 * tau).cosh();
    let mt = mu * t;
    let c = 20.0 * c0;
    Ok(c * ((a0 * mt).exp() / ((2.0 * PI * d / tau).exp() - 1.0)
        + ((a1 - a2 * ch) * mt).exp()
        + (a1 * mt).exp() * (1.0 + bmt / nf * ch).powf(-(nf - 1.0))))
}

/// `max_a || r(-ha)^n q(-ha) - sum_k w_k (lambda_k + a)^{-1} r(h lambda_k)^n q(h lambda_k) ||`
/// over the given spectrum, i.e. `||E_{tau,K}(G_{h,n})||` for a diagonal operator.
pub fn measure_quadrature_error(c: &HyperbolaContour, t: &Tableau, h: f64, n: u64, spectrum: &[f64]) -> Result<f64> {
    let nodes: Vec<_> = c
        .nodes_weights()
        .into_iter()
        .map(|nd| {
            let rq = eval_rq(t, nd.lambda * h)?;
            let scale = nd.weight * powi_complex(rq.r, n);
            Ok((nd.lambda, rq.q.into_iter().map(|q| q * scale).collect::<Vec<_>>()))
        })
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for &a in spectrum {
        let exact = eval_rq(t, Complex64::new(-h * a, 0.0))?;
        let rn = powi_complex(exact.r, n);
        let mut diff: Vec<Complex64> = exact.q.iter().map(|q| q * rn).collect();
        for (lambda, wq) in &nodes {
            let res = (lambda + a).inv();
            for (dv, w) in diff.iter_mut().zip(wq) {
                *dv -= w * res;
            }
        }
        worst = worst.max(diff.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt());
    }
    Ok(worst)
}

/// `G_{h,n}(w)` for the scalar operator `A = a` on the contour with `sigma = 0`.
pub fn hyperbola_integrand(
    t: &Tableau,
    h: f64,
    n: u64,
    a: f64,
    mu: f64,
    alpha: f64,
    w: Complex64,
) -> Result<Vec<Complex64>> {
    let gamma = mu * (1.0 - (alpha + I * w).sin());
    let dgamma = -I * mu * (alpha + I * w).cos();
    let rq = eval_rq(t, gamma * h)?;
    let scale = dgamma * powi_complex(rq.r, n) / ((gamma + a) * 2.0 * PI * I);
    Ok(rq.q.into_iter().map(|q| q * scale).collect())
}

/// `N(G, D_d) = int (||G(x + id)|| + ||G(x - id)||) dx` for the scalar integrand.
pub fn strip_norm_scalar(t: &Tableau, h: f64, n: u64, a: f64, mu: f64, alpha: f64, d: f64) -> Result<f64> {
    // Probe for poles first so the integrand closure can unwrap.
    for y in [d, -d] {
        hyperbola_integrand(t, h, n, a, mu, alpha, Complex64::new(0.0, y))?;
    }
    let norm_at = |x: f64| -> f64 {
        [d, -d]
            .iter()
            .map(|&y| {
                hyperbola_integrand(t, h, n, a, mu, alpha, Complex64::new(x, y))
                    .map(|g| g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
                    .unwrap_or(f64::INFINITY)
            })
            .sum()
    };
    let scale = norm_at(0.0).max(1e-300);
    let tol = 1e-10 * scale;
    let right = integrate_to_infinity(&norm_at, 0.0, tol);
    let left = integrate_to_infinity(&|x| norm_at(-x), 0.0, tol);
    Ok(left + right)
}

/// Upper bound for the strip norm of `G_{h,n}` obtained from the decay estimate.
pub fn strip_norm_bound(c0: f64, b: f64, mu: f64, t: f64, n: u64) -> f64 {
    let bmt = b * mu * t;
    let nf = n as f64;
    4.0 * c0 * (2.0 * mu * t).exp() / (1.0 - bmt / nf).powf(nf)
        * (phi(bmt) * (-0.5 * bmt).exp() + (1.0 + bmt / nf).powf(-(nf - 1.0)))
}

/// Decay constant `C` with `||G_{h,n}(x)|| <= C (1 + (b mu t / n) cosh x)^{-n}`.
pub fn decay_constant(c0: f64, b: f64, mu: f64, t: f64, n: u64) -> f64 {
    let nf = n as f64;
    c0 * (2.0 * mu * t).exp() / (1.0 - b * mu * t / nf).powf(nf)
}
