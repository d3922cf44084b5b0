//! Fast Runge-Kutta approximation of inhomogeneous linear parabolic systems.
//!
//! Given `M u' + A u = g(t)`, `u(0) = u0`, with `A` sectorial, the result `u_N` of
//! `N` implicit Runge-Kutta steps is computed by splitting the discrete
//! variation-of-constants sum into geometrically growing panels, representing
//! each panel through a Cauchy integral over a hyperbola, and discretizing that
//! integral with the trapezoidal rule. Only `O(log N * log 1/eps)` shifted
//! linear systems `(lambda M + A) x = y` are solved; everything else is scalar
//! time stepping.
//!
//! Modules:
//! - [`rk`]: tableaux, the stability function `r(z)` and weight row `q(z)`, time stepping.
//! - [`operators`]: shifted solvers with solve counting and sectorial metadata.
//! - [`contour`]: hyperbolic contours, quadrature nodes and the panel ladder.
//! - [`fastsolve`]: the fast algorithm itself.
//! - [`analysis`]: quadrature error bounds and measurements.
//! - [`cli`]: configuration and the benchmark commands behind the `fastrk` binary.

// `!(x > 0.0)` guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod contour;
mod error;
pub mod fastsolve;
pub mod operators;
pub mod rk;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// `z^n` by binary exponentiation.
pub fn powi_complex(z: Complex64, mut n: u64) -> Complex64 {
    let mut base = z;
    let mut acc = Complex64::new(1.0, 0.0);
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}
