//! Reference implementations shared by the integration tests. None of them go
//! through the library's stage decoupling or contour code.

#![allow(dead_code)]

use fastrk::rk::Tableau;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One Runge-Kutta step on `u' = -a u + g` by solving the stage system
/// `(I + h a A) U = u 1 + h A g` in real arithmetic.
pub fn scalar_step(t: &Tableau, a: f64, h: f64, t_n: f64, u: f64, g: &dyn Fn(f64) -> f64) -> f64 {
    let m = t.stage_count();
    let am = t.a();
    let gs = DVector::from_iterator(m, t.c().iter().map(|ci| g(t_n + ci * h)));
    let lhs = DMatrix::identity(m, m) + am * (h * a);
    let rhs = DVector::from_element(m, u) + am * &gs * h;
    let stages = lhs.lu().solve(&rhs).expect("stage system");
    u + h * t.b().iter().enumerate().map(|(i, bi)| bi * (gs[i] - a * stages[i])).sum::<f64>()
}

/// `n` steps of [`scalar_step`] from `u0` at time 0.
pub fn scalar_recurrence(t: &Tableau, a: f64, h: f64, n: usize, u0: f64, g: &dyn Fn(f64) -> f64) -> f64 {
    (0..n).fold(u0, |u, k| scalar_step(t, a, h, k as f64 * h, u, g))
}

/// One step on `M u' + A u = g` via the full `m d x m d` stage system.
pub fn dense_step(
    t: &Tableau,
    a: &DMatrix<f64>,
    mass: &DMatrix<f64>,
    h: f64,
    t_n: f64,
    u: &[f64],
    g: &dyn Fn(f64) -> Vec<f64>,
) -> Vec<f64> {
    let m = t.stage_count();
    let d = u.len();
    let am = t.a();
    let minv = mass.clone().try_inverse().expect("mass invertible");
    let f = &minv * a;
    let gs: Vec<DVector<f64>> = t.c().iter().map(|ci| &minv * DVector::from_vec(g(t_n + ci * h))).collect();
    // U_i = u + h sum_j a_ij (-F U_j + G_j)
    let mut lhs = DMatrix::<f64>::identity(m * d, m * d);
    let mut rhs = DVector::<f64>::zeros(m * d);
    for i in 0..m {
        for j in 0..m {
            let blk = &f * (h * am[(i, j)]);
            for r in 0..d {
                for c in 0..d {
                    lhs[(i * d + r, j * d + c)] += blk[(r, c)];
                }
            }
            for r in 0..d {
                rhs[i * d + r] += h * am[(i, j)] * gs[j][r];
            }
        }
        for r in 0..d {
            rhs[i * d + r] += u[r];
        }
    }
    let st = lhs.lu().solve(&rhs).expect("stage system");
    let mut out = DVector::from_column_slice(u);
    for (i, (g, b)) in gs.iter().zip(t.b()).enumerate() {
        let ui = st.rows(i * d, d).into_owned();
        out += (g - &f * ui) * (h * b);
    }
    out.iter().copied().collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Adaptive Simpson on `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

/// `int_R^inf (1 + (a/n) cosh x)^{-n} dx`, truncated once the integrand drops below 1e-18.
pub fn power_cosh_integral(r: f64, a: f64, n: u64) -> f64 {
    let f = |x: f64| (1.0 + a / n as f64 * x.cosh()).powf(-(n as f64));
    let mut upper = r + 1.0;
    while f(upper) > 1e-18 {
        upper += 1.0;
    }
    (0..((upper - r) as usize)).map(|k| simpson(&f, r + k as f64, r + k as f64 + 1.0, 1e-14)).sum()
}
