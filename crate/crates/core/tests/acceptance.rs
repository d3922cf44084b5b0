//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

mod common;

use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use fastrk::analysis::{
    c0_constant, default_strip_half_width, estimate_lemma1, lemma3_bound, measure_quadrature_error, theorem3_bound,
    BoundInputs,
};
use fastrk::cli::{cmd_bench_solves, cmd_run, RunConfig};
use fastrk::contour::{panel_ladder, select_parameters, Strategy};
use fastrk::fastsolve::{exact_level_parts, plan, predicted_solve_count, run, Inhomogeneity, PlanOptions};
use fastrk::operators::{make_grid2d_robin, make_mass_pair, GridSpec, SectorialBounds, ShiftedSolver};
use fastrk::rk::{direct_operator_steps, eval_rq, make_tableau, TableauKind};
use fastrk::{Complex64, Error};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const PHI: f64 = 0.4;
const T_END: f64 = 20.0;
const KINDS: [TableauKind; 3] = [TableauKind::ImplicitEuler, TableauKind::RadauIIA2, TableauKind::RadauIIA3];

fn sector() -> SectorialBounds {
    SectorialBounds::symmetric_psd(PHI).unwrap()
}

fn err<E: Display>(e: E) -> String {
    e.to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn forcing(sin2: bool) -> impl Fn(f64) -> f64 + Copy + Send + Sync + 'static {
    move |t: f64| if sin2 { t.sin().powi(2) } else { 1.0 }
}

/// Runs the fast algorithm and checks the solve counter against the prediction.
fn counted_run(
    p: &fastrk::fastsolve::FastRunPlan,
    s: &ShiftedSolver,
    g: &Inhomogeneity,
    u0: &[f64],
) -> Result<Vec<f64>, String> {
    let before = s.solve_count();
    let u = run(p, s, g, u0).map_err(err)?;
    let used = s.solve_count() - before;
    let nonzero = u0.iter().any(|&x| x != 0.0);
    let want = predicted_solve_count(p, nonzero);
    ensure(used == want, || format!("solve count {used} != predicted {want}"))?;
    Ok(u)
}

fn scalar_oracle() -> Outcome {
    let (mut worst, mut slowest, mut cases) = (0f64, 0f64, 0);
    for kind in [TableauKind::ImplicitEuler, TableauKind::RadauIIA2] {
        let t = make_tableau(kind);
        for a in [0.1, 1.0, 10.0] {
            for sin2 in [false, true] {
                for n in [125, 625, 3125] {
                    let h = T_END / n as f64;
                    let f = forcing(sin2);
                    let start = Instant::now();
                    let s = ShiftedSolver::diagonal(vec![a], sector());
                    let p = plan(n, h, &t, &PlanOptions::default(), &sector()).map_err(err)?;
                    let u = counted_run(&p, &s, &Inhomogeneity::new(move |t| vec![f(t)]), &[0.0])?[0];
                    slowest = slowest.max(start.elapsed().as_secs_f64());
                    let want = common::scalar_recurrence(&t, a, h, n, 0.0, &f);
                    let dev = (u - want).abs() / (1.0 + want.abs());
                    ensure(dev <= 1e-5, || format!("{kind} a={a} sin2={sin2} N={n}: deviation {dev:.3e}"))?;
                    worst = worst.max(dev);
                    cases += 1;
                }
            }
        }
    }
    ensure(slowest < 1.0, || format!("slowest case {slowest:.3} s"))?;
    Ok(format!("{cases} cases, worst deviation {worst:.2e}, slowest case {slowest:.4} s"))
}

fn heat_1d() -> Outcome {
    let start = Instant::now();
    let dim = 400;
    let s = ShiftedSolver::dirichlet_laplacian_1d(dim, 1.0, sector()).map_err(err)?;
    let profile: Vec<f64> = (1..=dim).map(|i| (std::f64::consts::PI * i as f64 / (dim + 1) as f64).sin()).collect();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for kind in [TableauKind::ImplicitEuler, TableauKind::RadauIIA2] {
        let t = make_tableau(kind);
        for sin2 in [false, true] {
            for n in [125, 625, 3125] {
                for u0 in [vec![0.0; dim], profile.clone()] {
                    let h = T_END / n as f64;
                    let f = forcing(sin2);
                    let g = Inhomogeneity::new(move |t| vec![f(t); dim]);
                    let p = plan(n, h, &t, &PlanOptions::default(), &sector()).map_err(err)?;
                    let fast = counted_run(&p, &s, &g, &u0)?;
                    let direct = direct_operator_steps(&t, &s, h, 0.0, &|x| g.eval(x, dim), &u0, n).map_err(err)?;
                    let dev = common::max_abs_diff(&fast, &direct) / common::max_norm(&direct);
                    ensure(dev <= 1e-5, || format!("{kind} sin2={sin2} N={n}: relative deviation {dev:.3e}"))?;
                    worst = worst.max(dev);
                    cases += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("dim {dim}, {cases} cases, worst relative deviation {worst:.2e}, {secs:.2} s"))
}

fn robin_grid_2d() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for kind in [TableauKind::RadauIIA2, TableauKind::RadauIIA3] {
        let cfg = RunConfig { tableau: kind, ..RunConfig::paper_sec5() };
        let r = cmd_run(&cfg).map_err(err)?;
        ensure(r.fast_solves == r.summary.predicted_solves, || {
            format!("{kind}: {} solves, predicted {}", r.fast_solves, r.summary.predicted_solves)
        })?;
        ensure(r.deviation <= 1e-5, || format!("{kind}: deviation {:.3e}", r.deviation))?;
        parts.push(format!("{kind} {:.2e} ({} vs {} solves)", r.deviation, r.fast_solves, r.summary.direct_solves));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("40x40 grid, N = 625: {}, {secs:.1} s", parts.join(", ")))
}

/// Closed-form solve count, computed without the library's planner.
fn formula_count(n: usize, base: usize, k: usize, dl: usize, m: usize, symmetric: bool, homogeneous: bool) -> usize {
    let mut levels = 0;
    while base.pow(levels as u32) < n {
        levels += 1;
    }
    if levels <= dl {
        return m * n;
    }
    let nodes = if symmetric { k + 1 } else { 2 * k + 1 };
    nodes * (levels - dl) + m * base.pow(dl as u32) + if homogeneous { nodes } else { 0 }
}

fn solve_counts() -> Outcome {
    let s = ShiftedSolver::diagonal(vec![0.5, 4.0], sector());
    let g = Inhomogeneity::new(|t: f64| vec![1.0, t.cos()]);
    let mut runs = 0;
    for kind in KINDS {
        let t = make_tableau(kind);
        for n in [1, 5, 6, 24, 25, 26, 125, 600, 3125, 4000] {
            for base in [2, 5, 10] {
                for k in [5, 15] {
                    for dl in [1, 2] {
                        for symmetric in [true, false] {
                            for u0 in [[0.0, 0.0], [1.0, -1.0]] {
                                let opts = PlanOptions {
                                    base,
                                    k_max: k,
                                    direct_levels: Some(dl),
                                    symmetry_reduction: symmetric,
                                    ..PlanOptions::default()
                                };
                                let p = plan(n, 0.01, &t, &opts, &sector()).map_err(err)?;
                                let before = s.solve_count();
                                run(&p, &s, &g, &u0).map_err(err)?;
                                let used = s.solve_count() - before;
                                let want = formula_count(n, base, k, dl, t.stage_count(), symmetric, u0[0] != 0.0);
                                ensure(used == want, || {
                                    format!("{kind} N={n} B={base} K={k} dl={dl} sym={symmetric}: {used} != {want}")
                                })?;
                                runs += 1;
                            }
                        }
                    }
                }
            }
        }
    }

    let t = make_tableau(TableauKind::RadauIIA2);
    let n = 100_000;
    let h = T_END / n as f64;
    let mut totals = Vec::new();
    for k in [13, 15] {
        let opts = PlanOptions { base: 10, k_max: k, eps: 1e-5, ..PlanOptions::default() };
        let p = plan(n, h, &t, &opts, &sector()).map_err(err)?;
        let s = ShiftedSolver::diagonal(vec![1.0], sector());
        let f = forcing(true);
        let u = counted_run(&p, &s, &Inhomogeneity::new(move |t| vec![f(t)]), &[0.0])?[0];
        let total = s.solve_count();
        ensure(total < 100, || format!("N = 1e5, K = {k}: {total} solves"))?;
        let want = common::scalar_recurrence(&t, 1.0, h, n, 0.0, &f);
        let dev = (u - want).abs() / (1.0 + want.abs());
        ensure(dev <= 1e-5, || format!("N = 1e5, K = {k}: deviation {dev:.3e}"))?;
        totals.push(format!("K={k}: {total}"));
    }
    Ok(format!("{runs} runs match the closed form; N = 1e5, B = 10: {}", totals.join(", ")))
}

fn logarithmic_growth() -> Outcome {
    let cfg = RunConfig::paper_sec5();
    let n_list: Vec<usize> = (1..=8).map(|e| 5usize.pow(e)).collect();
    let table = cmd_bench_solves(&cfg, &n_list).map_err(err)?;
    for w in table.rows.windows(2) {
        ensure(w[1].fast_solves - w[0].fast_solves == cfg.k_max + 1, || {
            format!("fast count {} -> {} between N = {} and {}", w[0].fast_solves, w[1].fast_solves, w[0].n, w[1].n)
        })?;
        ensure(w[1].direct_solves == cfg.base * w[0].direct_solves, || format!("direct count not x{}", cfg.base))?;
    }
    let last = table.rows.last().unwrap();
    Ok(format!(
        "+{} fast solves per factor 5, N = 5^8: {} fast vs {} direct, crossover N = {}",
        cfg.k_max + 1,
        last.fast_solves,
        last.direct_solves,
        table.crossover().unwrap_or(0)
    ))
}

fn level_of(n: u64, base: u64) -> usize {
    let mut level = 1;
    while base.pow(level as u32) <= n {
        level += 1;
    }
    level
}

/// Least-squares slope of `log10(err)` against `K`.
fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.log10()).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1.log10() - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn bounds_and_decay() -> Outcome {
    let h = 0.01;
    let base = 5;
    let alpha = std::f64::consts::FRAC_PI_4;
    let d = default_strip_half_width(alpha, PHI);
    let spectrum = [0.1, 1.0, 10.0];
    let mut applicable = Vec::new();
    let mut flattest: f64 = f64::NEG_INFINITY;
    for kind in KINDS {
        let t = make_tableau(kind);
        let lemma = estimate_lemma1(&t, alpha, d, 1.0).map_err(err)?;
        let c0 = c0_constant(&t, &sector(), alpha, d, lemma.rho).map_err(err)?;
        let mut count = 0;
        for k in [8usize, 15, 25] {
            for n in 5u64..125 {
                let c = select_parameters(&Strategy::Experiment, h, base, level_of(n, base as u64), 1e-6, &sector(), k)
                    .map_err(err)?;
                let inputs = BoundInputs {
                    c0,
                    b: lemma.b,
                    rho: lemma.rho,
                    mu: c.mu,
                    t: n as f64 * h,
                    n,
                    d,
                    tau: c.tau,
                    k_max: k,
                };
                let bound = match theorem3_bound(&inputs) {
                    Ok(b) => b,
                    Err(Error::TheoremInapplicable(_)) => continue,
                    Err(e) => return Err(e.to_string()),
                };
                let measured = measure_quadrature_error(&c, &t, h, n, &spectrum).map_err(err)?;
                ensure(measured <= bound, || format!("{kind} K={k} n={n}: {measured:.3e} > {bound:.3e}"))?;
                count += 1;
            }
        }
        applicable.push(format!("{kind} {count}"));

        // Kτ = 5 is fixed, so the truncated tail does not shrink with K and small n
        // level off above 1e-14 once K passes 20; the sweep stops there.
        for n in [5u64, 10, 17, 20, 24, 90, 110, 124] {
            let mut points = Vec::new();
            for k in [4usize, 8, 12, 16, 20] {
                let c = select_parameters(&Strategy::Experiment, h, base, level_of(n, base as u64), 1e-6, &sector(), k)
                    .map_err(err)?;
                let e = measure_quadrature_error(&c, &t, h, n, &spectrum).map_err(err)?;
                if e < 1e-14 {
                    break;
                }
                points.push((k as f64, e));
            }
            ensure(points.len() >= 3, || format!("{kind} n={n}: only {} points above the floor", points.len()))?;
            let s = slope(&points);
            ensure(s <= -0.2, || format!("{kind} n={n}: log10 error slope {s:.3}"))?;
            flattest = flattest.max(s);
        }
    }

    let mut probes = 0;
    for r in [0.0, 0.5, 1.0, 2.0] {
        for a in [0.5, 1.0, 4.0, 20.0] {
            for n in [2u64, 3, 10, 50] {
                let integral = common::power_cosh_integral(r, a, n);
                let bound = lemma3_bound(r, a, n);
                ensure(integral <= bound + 1e-10, || format!("lemma bound at R={r} a={a} n={n}"))?;
                probes += 1;
            }
        }
    }
    Ok(format!(
        "bound holds on applicable rows ({}), flattest log10 slope {flattest:.2}, {probes} integral probes",
        applicable.join(", ")
    ))
}

fn structural_invariants() -> Outcome {
    let mut rng = common::rng(2024);
    for kind in KINDS {
        let t = make_tableau(kind);
        for i in 0..1000 {
            let y = if i < 500 { 10f64.powf(-4.0 + 12.0 * i as f64 / 499.0) } else { rng.gen_range(-1e3..1e3) };
            let r = eval_rq(&t, Complex64::new(0.0, y)).map_err(err)?.r.norm();
            ensure(r <= 1.0 + 1e-12, || format!("{kind}: |r(i {y})| = {r}"))?;
        }
        let r_inf = eval_rq(&t, Complex64::new(-1e8, 0.0)).map_err(err)?.r.norm();
        ensure(r_inf <= 1e-6, || format!("{kind}: |r(-1e8)| = {r_inf:e}"))?;
    }

    for base in [2usize, 5, 10] {
        for n in 1..=2000 {
            let l = panel_ladder(n, base).map_err(err)?;
            let mut seen = vec![false; n];
            for level in 0..=l.level_count {
                for j in l.level_range(level) {
                    ensure(!seen[j], || format!("N={n} B={base}: index {j} twice"))?;
                    seen[j] = true;
                    let dist = n - 1 - j;
                    let ok = if level == 0 {
                        dist == 0
                    } else {
                        base.pow(level as u32 - 1) <= dist && dist < base.pow(level as u32)
                    };
                    ensure(ok, || format!("N={n} B={base}: index {j} in level {level}"))?;
                }
            }
            ensure(seen.iter().all(|&s| s), || format!("N={n} B={base}: indices missing"))?;
        }
    }

    let solver =
        make_grid2d_robin(GridSpec { nx: 12, ny: 9, lx: 3.0, ly: 2.0, rho: 0.5, holes: None }, PHI).map_err(err)?;
    let dim = solver.dimension();
    let g = Inhomogeneity::new(move |t: f64| (0..dim).map(|i| (t + 0.05 * i as f64).sin()).collect());
    let u0: Vec<f64> = (0..dim).map(|i| ((i * 7) % 5) as f64 * 0.2).collect();
    let mut sym_dev: f64 = 0.0;
    for kind in KINDS {
        let t = make_tableau(kind);
        let on = plan(700, 0.02, &t, &PlanOptions::default(), &sector()).map_err(err)?;
        let off_opts = PlanOptions { symmetry_reduction: false, ..PlanOptions::default() };
        let off = plan(700, 0.02, &t, &off_opts, &sector()).map_err(err)?;
        let a = counted_run(&on, &solver, &g, &u0)?;
        let b = counted_run(&off, &solver, &g, &u0)?;
        let dev = common::max_abs_diff(&a, &b) / (1.0 + common::max_norm(&b));
        ensure(dev <= 1e-13, || format!("{kind}: symmetry deviation {dev:.3e}"))?;
        sym_dev = sym_dev.max(dev);
    }

    let values = vec![0.05, 1.0, 30.0, 900.0];
    let diag = ShiftedSolver::diagonal(values.clone(), sector());
    let g = Inhomogeneity::new(|t: f64| vec![1.0, t.sin().powi(2), (3.0 * t).cos(), t]);
    let mut split_dev: f64 = 0.0;
    for kind in KINDS {
        let t = make_tableau(kind);
        for n in 1..=200 {
            let p = plan(n, 0.03, &t, &PlanOptions::default(), &sector()).map_err(err)?;
            let parts = exact_level_parts(&p, &values, &g).map_err(err)?;
            let direct = direct_operator_steps(&t, &diag, 0.03, 0.0, &|s| g.eval(s, 4), &[0.0; 4], n).map_err(err)?;
            for (i, d) in direct.iter().enumerate() {
                let sum: f64 = parts.iter().map(|p| p[i]).sum();
                let dev = (sum - d).abs() / (1.0 + d.abs());
                ensure(dev <= 1e-12, || format!("{kind} N={n}: splitting deviation {dev:.3e}"))?;
                split_dev = split_dev.max(dev);
            }
        }
    }
    Ok(format!("L-stability 3x1000 samples, partitions N <= 2000, symmetry {sym_dev:.1e}, splitting {split_dev:.1e}"))
}

fn sym_power(m: &DMatrix<f64>, p: f64) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|x| x.powf(p)));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

fn mass_matrix_path() -> Outcome {
    let mut rng = common::rng(99);
    let n = 20;
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mass = &b * b.transpose() / n as f64 + DMatrix::identity(n, n);
    let c = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let sym = &c * c.transpose() + DMatrix::identity(n, n);
    let lam_min = SymmetricEigen::new(sym.clone()).eigenvalues.min();
    let k = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let skew = (&k - k.transpose()) * 0.5;
    let skew: DMatrix<f64> = &skew * (0.15 * lam_min / skew.norm());
    let a: DMatrix<f64> = &sym + &skew;
    // Numerical range within angle atan(0.15) of the positive axis.
    let bounds = SectorialBounds::new(1.0 / (PHI - 0.15f64.atan()).sin(), 0.0, PHI).map_err(err)?;

    let w = sym_power(&mass, -0.5);
    let a_t = &w * &a * &w;
    let pair = make_mass_pair(a.clone(), mass.clone(), bounds).map_err(err)?;
    let plain = ShiftedSolver::dense(a_t, bounds).map_err(err)?;

    let load: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let load_t: Vec<f64> = (&w * DVector::from_vec(load.clone())).iter().copied().collect();
    let g = Inhomogeneity::new(move |t: f64| load.iter().map(|l| l * t.sin().powi(2)).collect());
    let g_t = Inhomogeneity::new(move |t: f64| load_t.iter().map(|l| l * t.sin().powi(2)).collect());
    let u0: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
    let u0_t: Vec<f64> = (sym_power(&mass, 0.5) * DVector::from_vec(u0.clone())).iter().copied().collect();

    let mut worst: f64 = 0.0;
    for kind in [TableauKind::RadauIIA2, TableauKind::RadauIIA3] {
        let t = make_tableau(kind);
        let p = plan(625, 0.032, &t, &PlanOptions::default(), &bounds).map_err(err)?;
        let fast = counted_run(&p, &pair, &g, &u0)?;
        let v = counted_run(&p, &plain, &g_t, &u0_t)?;
        let back: Vec<f64> = (&w * DVector::from_vec(v)).iter().copied().collect();
        let dev = common::max_abs_diff(&fast, &back) / common::max_norm(&back);
        ensure(dev <= 1e-8, || format!("{kind}: relative deviation {dev:.3e}"))?;
        worst = worst.max(dev);
    }
    Ok(format!("20x20 SPD mass, non-symmetric A: worst relative deviation {worst:.2e}"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("scalar oracle equivalence", scalar_oracle),
        ("1-D heat equivalence", heat_1d),
        ("2-D Robin grid benchmark", robin_grid_2d),
        ("solve-count exactness", solve_counts),
        ("logarithmic growth", logarithmic_growth),
        ("bound dominance and decay", bounds_and_decay),
        ("structural invariants", structural_invariants),
        ("mass-matrix path", mass_matrix_path),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {} {name}: {detail} [{secs:.2} s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("[FAIL] {} {name}: {detail} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
