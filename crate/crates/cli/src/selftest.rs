//! Built-in verification suites.
//!
//! Each suite draws its own instances from `ChaCha8Rng` seeded with the user
//! seed plus the suite index, so suites are reproducible in isolation.

use std::time::Instant;

use ksm_core::conic::{build_instance, g_t_derivatives, is_strictly_feasible, FeasibilityMargins};
use ksm_core::ksm::{lp_round_check, selector_value};
use ksm_core::linalg::{chol_logdet, solve_kkt, sym_eig, KktSystem, SymMatrix};
use ksm_core::pathsolver::{init_point, newton_decrement, newton_to_center_observed, SolverState};
use ksm_core::{fixtures, ksm_approx, oracle_2d, oracle_3d, SolverConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{SelftestArgs, EXIT_OK, EXIT_SELFTEST, EXIT_USAGE};

type SuiteResult = Result<String, String>;

struct Context {
    rng: ChaCha8Rng,
    quick: bool,
    fault: Option<Fault>,
}

impl Context {
    fn count(&self, quick: usize, full: usize) -> usize {
        if self.quick {
            quick
        } else {
            full
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fault {
    Gradient,
}

struct Suite {
    name: &'static str,
    in_quick: bool,
    run: fn(&mut Context) -> SuiteResult,
}

const SUITES: &[Suite] = &[
    Suite {
        name: "linalg-eigen",
        in_quick: true,
        run: linalg_eigen,
    },
    Suite {
        name: "linalg-kkt",
        in_quick: true,
        run: linalg_kkt,
    },
    Suite {
        name: "gradient-fd",
        in_quick: true,
        run: gradient_fd,
    },
    Suite {
        name: "hessian-fd",
        in_quick: true,
        run: hessian_fd,
    },
    Suite {
        name: "init-identities",
        in_quick: true,
        run: init_identities,
    },
    Suite {
        name: "centering",
        in_quick: true,
        run: centering,
    },
    Suite {
        name: "projection-laws",
        in_quick: true,
        run: projection_laws,
    },
    Suite {
        name: "certificate-chain",
        in_quick: true,
        run: certificate_chain,
    },
    Suite {
        name: "lp-rounding",
        in_quick: true,
        run: lp_rounding,
    },
    Suite {
        name: "exact-fit",
        in_quick: true,
        run: exact_fit,
    },
    Suite {
        name: "oracle-2d",
        in_quick: true,
        run: oracle_plane,
    },
    Suite {
        name: "oracle-3d",
        in_quick: false,
        run: oracle_space,
    },
    Suite {
        name: "determinism",
        in_quick: true,
        run: determinism,
    },
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name).collect()
}

pub fn run(args: &SelftestArgs) -> i32 {
    let fault = match args.inject_fault.as_deref() {
        None => None,
        Some("gradient") => Some(Fault::Gradient),
        Some(other) => {
            eprintln!("error: unknown fault {other:?}");
            return EXIT_USAGE;
        }
    };
    let mut failed = 0;
    let mut ran = 0;
    for (i, suite) in SUITES.iter().enumerate() {
        if args.quick && !suite.in_quick {
            continue;
        }
        let mut ctx = Context {
            rng: ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(i as u64)),
            quick: args.quick,
            fault,
        };
        let start = Instant::now();
        let outcome = (suite.run)(&mut ctx);
        let ms = start.elapsed().as_millis();
        ran += 1;
        match outcome {
            Ok(detail) => println!("PASS {:<18} {detail} [{ms} ms]", suite.name),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:<18} {msg}", suite.name);
            }
        }
    }
    println!("{} of {ran} suites passed", ran - failed);
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_SELFTEST
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_k(rng: &mut ChaCha8Rng, d: usize) -> usize {
    rng.gen_range(1..d)
}

fn linalg_eigen(ctx: &mut Context) -> SuiteResult {
    let trials = ctx.count(20, 100);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let d = ctx.rng.gen_range(2..=8);
        let s = SymMatrix::from_fn(d, |_, _| ctx.rng.gen_range(-1.0..1.0));
        let e = sym_eig(&s).map_err(|e| e.to_string())?;
        let rel = (e.reconstruct().as_matrix() - s.as_matrix()).norm() / s.frobenius_norm();
        worst = worst.max(rel);
        ensure(rel <= 1e-10, || {
            format!("reconstruction residual {rel:.3e} > 1e-10")
        })?;
        let tr = (e.values.sum() - s.trace()).abs();
        ensure(tr <= 1e-8 * s.frobenius_norm().max(1.0), || {
            format!("eigenvalue sum off trace by {tr:.3e}")
        })?;
    }
    Ok(format!(
        "{trials} matrices, worst reconstruction {worst:.1e}"
    ))
}

fn linalg_kkt(ctx: &mut Context) -> SuiteResult {
    let trials = ctx.count(20, 100);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let m = ctx.rng.gen_range(2..12);
        let c = ctx.rng.gen_range(1..m);
        let rng = &mut ctx.rng;
        let b = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
        let sys = KktSystem {
            hess: &b * b.transpose() + DMatrix::identity(m, m),
            eq_jac: DMatrix::from_fn(c, m, |_, _| rng.gen_range(-1.0..1.0)),
            grad: DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)),
            eq_residual: DVector::from_fn(c, |_, _| rng.gen_range(-1.0..1.0)),
        };
        let sol = solve_kkt(&sys).map_err(|e| e.to_string())?;
        let res = sys.relative_residual(&sol);
        worst = worst.max(res);
        ensure(res <= 1e-9, || format!("block residual {res:.3e} > 1e-9"))?;
    }
    Ok(format!("{trials} systems, worst residual {worst:.1e}"))
}

fn gradient_fd(ctx: &mut Context) -> SuiteResult {
    let trials = ctx.count(20, 100);
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let d = ctx.rng.gen_range(2..=5);
        let k = random_k(&mut ctx.rng, d);
        let n = ctx.rng.gen_range(1..=8);
        let (inst, z) = fixtures::random_instance_and_point(n, d, k, &mut ctx.rng);
        let t = 10f64.powf(ctx.rng.gen_range(-1.0..1.0));
        let mut grad = g_t_derivatives(&inst, &z, t)
            .map_err(|e| e.to_string())?
            .gradient();
        if ctx.fault == Some(Fault::Gradient) {
            grad *= 1.01;
        }
        let h = fixtures::fd_step(&z);
        let mut fd = DVector::zeros(inst.dim());
        for j in 0..inst.dim() {
            let mut e = DVector::zeros(inst.dim());
            e[j] = 1.0;
            fd[j] = fixtures::directional_fd(&inst, &z, t, &e, h)
                .ok_or("finite-difference probe left the domain")?;
        }
        let err = (&fd - &grad).norm() / grad.norm().max(1e-12);
        worst = worst.max(err);
        ensure(err <= 1e-5, || {
            format!("trial {trial}: relative gradient error {err:.3e} > 1e-5")
        })?;
    }
    Ok(format!(
        "{trials} triples, worst relative error {worst:.1e}"
    ))
}

fn hessian_fd(ctx: &mut Context) -> SuiteResult {
    let trials = ctx.count(20, 100);
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let d = ctx.rng.gen_range(2..=5);
        let k = random_k(&mut ctx.rng, d);
        let n = ctx.rng.gen_range(1..=8);
        let (inst, z) = fixtures::random_instance_and_point(n, d, k, &mut ctx.rng);
        let t = 10f64.powf(ctx.rng.gen_range(-1.0..1.0));
        let der = g_t_derivatives(&inst, &z, t).map_err(|e| e.to_string())?;
        let v = fixtures::random_direction(inst.dim(), &mut ctx.rng);
        let h = fixtures::fd_step(&z);
        let grad_at = |s: f64| {
            g_t_derivatives(&inst, &z.stepped(&inst, &v, s), t)
                .map(|d| d.gradient())
                .map_err(|e| e.to_string())
        };
        let fd = (grad_at(h)? - grad_at(-h)?) / (2.0 * h);
        let hv = der.hess_vec(&v);
        let err = (&fd - &hv).norm() / hv.norm().max(1e-12);
        worst = worst.max(err);
        ensure(err <= 1e-5, || {
            format!("trial {trial}: relative Hessian error {err:.3e} > 1e-5")
        })?;
    }
    Ok(format!(
        "{trials} triples, worst relative error {worst:.1e}"
    ))
}

fn init_identities(ctx: &mut Context) -> SuiteResult {
    let trials = ctx.count(10, 50);
    let e = std::f64::consts::E;
    for _ in 0..trials {
        let d = ctx.rng.gen_range(2..=10);
        let k = random_k(&mut ctx.rng, d);
        let n = ctx.rng.gen_range(1..=40);
        let inst = build_instance(fixtures::uniform_points(n, d, &mut ctx.rng), k)
            .map_err(|e| e.to_string())?;
        let (z0, t0) = init_point(&inst);
        for s in z0.slacks().iter() {
            ensure((s - e).abs() <= 1e-12 * e, || {
                format!("slack {s} differs from e")
            })?;
        }
        let log_sum: f64 = z0.slacks().iter().map(|s| s.ln()).sum();
        ensure((log_sum - n as f64).abs() <= 1e-9 * n as f64, || {
            format!("sum of log slacks {log_sum} != {n}")
        })?;
        ensure(
            (t0 * z0.objective() - 2.0 * n as f64).abs() <= 1e-12 * n as f64,
            || "t0 * 1'y0 != 2n".into(),
        )?;
        let ld = chol_logdet(z0.x()).map_err(|e| e.to_string())?
            + chol_logdet(&z0.x().complement()).map_err(|e| e.to_string())?;
        let (df, kf) = (d as f64, k as f64);
        let expected = -df * (df * df / (kf * (df - kf))).ln();
        ensure((ld - expected).abs() <= 1e-9, || {
            format!("log-det identity: {ld} vs {expected}")
        })?;
    }
    Ok(format!("{trials} instances"))
}

fn centering(ctx: &mut Context) -> SuiteResult {
    let trials = ctx.count(5, 20);
    let cfg = SolverConfig::default();
    for trial in 0..trials {
        let d = ctx.rng.gen_range(2..=6);
        let k = random_k(&mut ctx.rng, d);
        let inst = build_instance(
            fixtures::uniform_points(ctx.rng.gen_range(2..30), d, &mut ctx.rng),
            k,
        )
        .map_err(|e| e.to_string())?;
        let (z0, t0) = init_point(&inst);
        let t = t0 * 2f64.powi(ctx.rng.gen_range(0..10));
        let mut problem: Option<String> = None;
        let mut observer = |s: &SolverState<'_>| {
            let f = is_strictly_feasible(
                &inst,
                s.point.x(),
                s.point.y(),
                FeasibilityMargins::default(),
            );
            if let Some(v) = f.violation {
                problem.get_or_insert(format!("iterate {} infeasible: {v}", s.newton_iters));
            }
            let drift = (s.point.x().trace() - inst.trace_target()).abs();
            if drift > 1e-9 {
                problem.get_or_insert(format!("trace drift {drift:.3e} > 1e-9"));
            }
        };
        let c = newton_to_center_observed(&inst, z0, t, &cfg, 0, &mut observer)
            .map_err(|e| e.to_string())?;
        if let Some(p) = problem {
            return Err(format!("trial {trial}: {p}"));
        }
        let lambda = newton_decrement(&inst, &c.point, t).map_err(|e| e.to_string())?;
        ensure(lambda <= 0.01, || {
            format!("trial {trial}: re-evaluated decrement {lambda:.3e} > 0.01")
        })?;
    }
    Ok(format!("{trials} centerings"))
}

fn random_run(
    ctx: &mut Context,
    max_n: usize,
    max_d: usize,
) -> Result<(ksm_core::PointSet, ksm_core::KsmApprox), String> {
    let d = ctx.rng.gen_range(2..=max_d);
    let k = random_k(&mut ctx.rng, d);
    let p = fixtures::uniform_points(ctx.rng.gen_range(3..=max_n), d, &mut ctx.rng);
    let out = ksm_approx(&p, k, &SolverConfig::default()).map_err(|e| e.to_string())?;
    Ok((p, out))
}

fn projection_laws(ctx: &mut Context) -> SuiteResult {
    let trials = ctx.count(5, 20);
    for _ in 0..trials {
        let (p, out) = random_run(ctx, 30, 8)?;
        let e = out.rounding.e.as_matrix();
        let k = out.subspace.k();
        let idem = (e * e - e).norm();
        ensure(idem <= 1e-8, || format!("||E^2 - E||_F = {idem:.3e}"))?;
        ensure(e == &e.transpose(), || "E is not symmetric".into())?;
        let tr = (out.rounding.e.trace() - (p.d() - k) as f64).abs();
        ensure(tr <= 1e-8, || format!("trace(E) off by {tr:.3e}"))?;
        for v in sym_eig(&out.rounding.e)
            .map_err(|e| e.to_string())?
            .values
            .iter()
        {
            ensure(v.abs() <= 1e-6 || (v - 1.0).abs() <= 1e-6, || {
                format!("E has eigenvalue {v}")
            })?;
        }
    }
    Ok(format!("{trials} runs"))
}

fn certificate_chain(ctx: &mut Context) -> SuiteResult {
    let trials = ctx.count(5, 20);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (p, out) = random_run(ctx, 30, 8)?;
        let slack = 1e-7 * p.norm_sum();
        out.chain.verify(slack).map_err(|e| e.to_string())?;
        let cert = out.subspace.certificate.expect("certificate");
        ensure(cert.holds(out.subspace.cost, slack), || {
            "cost exceeds sqrt(d) (objective + eps)".into()
        })?;
        if let Some(r) = cert.ratio.value() {
            worst = worst.max(r / cert.sqrt_d);
        }
    }
    Ok(format!("{trials} runs, worst ratio / sqrt(d) {worst:.3}"))
}

fn lp_rounding(ctx: &mut Context) -> SuiteResult {
    let trials = ctx.count(100, 1000);
    for _ in 0..trials {
        let d = ctx.rng.gen_range(2..=10);
        let k = random_k(&mut ctx.rng, d);
        let q: Vec<f64> = (0..d).map(|_| ctx.rng.gen_range(0.0..1.0)).collect();
        let value = selector_value(&lp_round_check(&q, k), &q);
        let best = (0u32..1 << d)
            .filter(|m| m.count_ones() as usize == d - k)
            .map(|m| {
                (0..d)
                    .filter(|j| m & (1 << j) != 0)
                    .map(|j| q[j])
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        ensure(value == best, || {
            format!("rounding value {value} differs from the vertex minimum {best}")
        })?;
    }
    Ok(format!("{trials} score vectors"))
}

fn exact_fit(ctx: &mut Context) -> SuiteResult {
    let trials = ctx.count(3, 10);
    for _ in 0..trials {
        let d = ctx.rng.gen_range(2..=8);
        let k = random_k(&mut ctx.rng, d);
        let basis = fixtures::random_subspace(d, k, &mut ctx.rng);
        let p = fixtures::points_in_subspace(ctx.rng.gen_range(2..25), &basis, &mut ctx.rng);
        let out = ksm_approx(&p, k, &SolverConfig::default()).map_err(|e| e.to_string())?;
        ensure(out.subspace.cost <= 1e-4 * p.norm_sum(), || {
            format!("cost {:.3e} on exact-fit data", out.subspace.cost)
        })?;
        ensure(out.relaxation.objective <= out.relaxation.epsilon, || {
            "relaxed objective above epsilon".into()
        })?;
    }
    Ok(format!("{trials} runs"))
}

fn oracle_plane(ctx: &mut Context) -> SuiteResult {
    let trials = ctx.count(3, 10);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let p = fixtures::uniform_points(ctx.rng.gen_range(2..=40), 2, &mut ctx.rng);
        let out = ksm_approx(&p, 1, &SolverConfig::default()).map_err(|e| e.to_string())?;
        let oracle = oracle_2d(&p, 20_000).map_err(|e| e.to_string())?;
        let bound = std::f64::consts::SQRT_2 * (oracle.subspace.cost + oracle.grid_error);
        ensure(out.subspace.cost <= bound, || {
            format!(
                "cost {} above sqrt(2) oracle bound {bound}",
                out.subspace.cost
            )
        })?;
        worst = worst.max(out.subspace.cost / oracle.subspace.cost.max(1e-300));
    }
    Ok(format!(
        "{trials} instances, worst cost / oracle {worst:.3}"
    ))
}

fn oracle_space(ctx: &mut Context) -> SuiteResult {
    let trials = ctx.count(2, 6);
    let mut worst: f64 = 0.0;
    for i in 0..trials {
        let k = 1 + i % 2;
        let p = fixtures::uniform_points(ctx.rng.gen_range(2..=25), 3, &mut ctx.rng);
        let out = ksm_approx(&p, k, &SolverConfig::default()).map_err(|e| e.to_string())?;
        let oracle = oracle_3d(&p, k, 20_000).map_err(|e| e.to_string())?;
        let bound = 3f64.sqrt() * (oracle.subspace.cost + oracle.grid_error);
        ensure(out.subspace.cost <= bound, || {
            format!(
                "cost {} above sqrt(3) oracle bound {bound}",
                out.subspace.cost
            )
        })?;
        worst = worst.max(out.subspace.cost / oracle.subspace.cost.max(1e-300));
    }
    Ok(format!(
        "{trials} instances, worst cost / oracle {worst:.3}"
    ))
}

fn determinism(ctx: &mut Context) -> SuiteResult {
    let p = fixtures::uniform_points(20, 5, &mut ctx.rng);
    let a = ksm_approx(&p, 2, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let b = ksm_approx(&p, 2, &SolverConfig::default()).map_err(|e| e.to_string())?;
    ensure(a.relaxation == b.relaxation, || {
        "relaxation differs between runs".into()
    })?;
    ensure(a.subspace == b.subspace, || {
        "subspace differs between runs".into()
    })?;
    Ok("two runs bitwise equal".into())
}
