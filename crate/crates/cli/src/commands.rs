use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ksm_core::ksm::{lift_affine, recover_flat};
use ksm_core::{
    ksm_approx, ksvd_baseline, oracle_2d, oracle_3d, sampling_baseline, CertRatio, Epsilon,
    PointSet, SolverConfig, Subspace,
};
use nalgebra::DMatrix;
use thiserror::Error;

use crate::report::{BenchmarkRecord, Iterations, OracleReport, RatioField, SolveReport, Timings};
use crate::{
    ingest, Algorithm, BenchmarkArgs, EpsilonMode, OracleArgs, SolveArgs, SolverArgs, EXIT_INPUT,
    EXIT_SOLVER, EXIT_USAGE,
};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Input(#[from] ingest::IngestError),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("cannot write output {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) | CommandError::Output { .. } => EXIT_USAGE,
            CommandError::Input(_) => EXIT_INPUT,
            CommandError::Solver(_) => EXIT_SOLVER,
        }
    }
}

fn check_k(k: usize, d: usize) -> Result<(), CommandError> {
    if k < 1 || k >= d {
        return Err(CommandError::Usage(format!(
            "k must be in [1, d-1] (got k = {k}, d = {d})"
        )));
    }
    Ok(())
}

pub fn solver_config(args: &SolverArgs) -> Result<SolverConfig, CommandError> {
    if !(args.epsilon > 0.0 && args.epsilon.is_finite()) {
        return Err(CommandError::Usage(format!(
            "epsilon must be positive (got {})",
            args.epsilon
        )));
    }
    if args.epsilon_mode == EpsilonMode::Absolute && args.epsilon > 1.0 {
        return Err(CommandError::Usage(format!(
            "absolute epsilon must be at most 1 (got {})",
            args.epsilon
        )));
    }
    if !(args.mu > 1.0 && args.mu.is_finite()) {
        return Err(CommandError::Usage(format!(
            "mu must be greater than 1 (got {})",
            args.mu
        )));
    }
    if args.trials == 0 {
        return Err(CommandError::Usage("trials must be at least 1".into()));
    }
    Ok(SolverConfig {
        mu: args.mu,
        epsilon: match args.epsilon_mode {
            EpsilonMode::Relative => Epsilon::Relative(args.epsilon),
            EpsilonMode::Absolute => Epsilon::Absolute(args.epsilon),
        },
        ..SolverConfig::default()
    })
}

/// Everything a report needs from one fit.
#[derive(Debug, Clone)]
pub struct Fit {
    pub basis: DMatrix<f64>,
    pub cost: f64,
    pub objective: Option<f64>,
    pub ratio: Option<CertRatio>,
    pub epsilon: Option<f64>,
    pub offset: Option<Vec<f64>>,
    pub lifted_cost: Option<f64>,
    /// Dimension of the problem that was actually solved.
    pub solved_d: usize,
    pub solver_us: u64,
    pub rounding_us: u64,
    pub iterations: Iterations,
}

fn solver_error(e: impl std::fmt::Display) -> CommandError {
    CommandError::Solver(e.to_string())
}

fn fit_subspace(
    points: &PointSet,
    k: usize,
    algorithm: Algorithm,
    solver: &SolverArgs,
    config: &SolverConfig,
) -> Result<(Subspace, Fit), CommandError> {
    let start = Instant::now();
    let no_iterations = Iterations {
        outer_stages: 0,
        inner_newton: 0,
    };
    let (subspace, mut fit) = match algorithm {
        Algorithm::Ksm => {
            let out = ksm_approx(points, k, config).map_err(solver_error)?;
            let cert = out
                .subspace
                .certificate
                .expect("ksm output carries a certificate");
            let fit = Fit {
                basis: out.subspace.basis.clone(),
                cost: out.subspace.cost,
                objective: Some(cert.relax_objective),
                ratio: Some(cert.ratio),
                epsilon: Some(cert.epsilon),
                offset: None,
                lifted_cost: None,
                solved_d: points.d(),
                solver_us: out.timings.solver_us,
                rounding_us: out.timings.rounding_us,
                iterations: Iterations {
                    outer_stages: out.relaxation.stats.outer_stages,
                    inner_newton: out.relaxation.stats.inner_newton,
                },
            };
            (out.subspace, fit)
        }
        Algorithm::Svd | Algorithm::Sampling => {
            let s = if algorithm == Algorithm::Svd {
                ksvd_baseline(points, k)
            } else {
                sampling_baseline(points, k, solver.trials, solver.seed)
            }
            .map_err(solver_error)?;
            let fit = Fit {
                basis: s.basis.clone(),
                cost: s.cost,
                objective: None,
                ratio: None,
                epsilon: None,
                offset: None,
                lifted_cost: None,
                solved_d: points.d(),
                solver_us: start.elapsed().as_micros() as u64,
                rounding_us: 0,
                iterations: no_iterations,
            };
            (s, fit)
        }
    };
    if solver.no_timing {
        fit.solver_us = 0;
        fit.rounding_us = 0;
    }
    Ok((subspace, fit))
}

/// Fits a `k`-subspace, or with `affine` a `k`-flat through the lifted
/// `(k+1)`-subspace problem.
pub fn fit(
    points: &PointSet,
    k: usize,
    algorithm: Algorithm,
    affine: bool,
    solver: &SolverArgs,
) -> Result<Fit, CommandError> {
    check_k(k, points.d())?;
    let config = solver_config(solver)?;
    if !affine {
        return Ok(fit_subspace(points, k, algorithm, solver, &config)?.1);
    }
    let lifted = lift_affine(points, 1.0);
    let (subspace, mut fit) = fit_subspace(&lifted, k + 1, algorithm, solver, &config)?;
    let flat = recover_flat(&subspace, 1.0, points).map_err(solver_error)?;
    fit.lifted_cost = Some(fit.cost);
    fit.cost = flat.cost;
    fit.basis = flat.basis;
    fit.offset = Some(flat.offset.iter().copied().collect());
    Ok(fit)
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

fn ratio_field(r: CertRatio) -> RatioField {
    match r {
        CertRatio::Ratio(v) => RatioField::Value(v),
        CertRatio::ExactFit => RatioField::Tag("exact-fit".into()),
    }
}

pub fn solve_report(points: &PointSet, args: &SolveArgs) -> Result<SolveReport, CommandError> {
    let start = Instant::now();
    let fit = fit(points, args.k, args.algorithm, args.affine, &args.solver)?;
    let total_us = if args.solver.no_timing {
        0
    } else {
        start.elapsed().as_micros() as u64
    };
    Ok(SolveReport {
        n: points.n(),
        d: points.d(),
        k: args.k,
        algorithm: args.algorithm.name().into(),
        cost: fit.cost,
        objective_relaxation: fit.objective,
        cert_ratio: fit.ratio.map(ratio_field),
        epsilon: fit.epsilon,
        sqrt_d: (fit.solved_d as f64).sqrt(),
        basis: columns(&fit.basis),
        offset: fit.offset,
        lifted_cost: fit.lifted_cost,
        timings: Timings {
            total_us,
            solver_us: fit.solver_us,
            rounding_us: fit.rounding_us,
        },
        iterations: fit.iterations,
    })
}

fn write_output(output: &str, content: &[u8]) -> Result<(), CommandError> {
    let err = |source| CommandError::Output {
        path: output.to_string(),
        source,
    };
    if output == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(content).map_err(err)?;
        out.flush().map_err(err)
    } else {
        std::fs::write(output, content).map_err(err)
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialise");
    s.push('\n');
    s.into_bytes()
}

pub fn solve(args: &SolveArgs) -> Result<(), CommandError> {
    let points = ingest::ingest(&args.input.input, args.input.format)?;
    log::info!("loaded {} points in dimension {}", points.n(), points.d());
    let report = solve_report(&points, args)?;
    write_output(&args.output, &to_json(&report))
}

fn dataset_name(args: &BenchmarkArgs) -> String {
    args.dataset.clone().unwrap_or_else(|| {
        Path::new(&args.input.input)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    })
}

pub fn benchmark_records(
    points: &PointSet,
    args: &BenchmarkArgs,
) -> Result<Vec<BenchmarkRecord>, CommandError> {
    let d = points.d();
    if args.k_min < 1 || args.k_min > args.k_max || args.k_max >= d {
        return Err(CommandError::Usage(format!(
            "k must be in [1, d-1] with k-min <= k-max (got {}..{}, d = {d})",
            args.k_min, args.k_max
        )));
    }
    if args.repeats == 0 {
        return Err(CommandError::Usage("repeats must be at least 1".into()));
    }
    if args.algorithms.is_empty() {
        return Err(CommandError::Usage("no algorithms given".into()));
    }
    let dataset = dataset_name(args);
    let mut rows = Vec::new();
    for k in args.k_min..=args.k_max {
        for &alg in &args.algorithms {
            for _ in 0..args.repeats {
                let start = Instant::now();
                let f = fit(points, k, alg, false, &args.solver)?;
                let wall = if args.solver.no_timing {
                    0
                } else {
                    start.elapsed().as_micros() as u64
                };
                let is_ksm = alg == Algorithm::Ksm;
                rows.push(BenchmarkRecord {
                    dataset: dataset.clone(),
                    n: points.n(),
                    d,
                    k,
                    method: alg.name().into(),
                    cost: f.cost,
                    objective_relax: f.objective,
                    cert_ratio: f.ratio.map(|r| r.to_string()),
                    wall_micros: wall,
                    outer_stages: is_ksm.then_some(f.iterations.outer_stages),
                    inner_newton: is_ksm.then_some(f.iterations.inner_newton),
                });
            }
        }
    }
    Ok(rows)
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<(), CommandError> {
    let points = ingest::ingest(&args.input.input, args.input.format)?;
    let rows = benchmark_records(&points, args)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        writer.serialize(r).expect("in-memory CSV");
    }
    let bytes = writer.into_inner().expect("in-memory CSV");
    write_output(&args.output, &bytes)
}

pub fn oracle_report(
    points: &PointSet,
    k: usize,
    resolution: usize,
) -> Result<OracleReport, CommandError> {
    let d = points.d();
    if d != 2 && d != 3 {
        return Err(CommandError::Usage(format!(
            "oracle needs d = 2 or d = 3 (got d = {d})"
        )));
    }
    check_k(k, d)?;
    let r = if d == 2 {
        oracle_2d(points, resolution)
    } else {
        oracle_3d(points, k, resolution)
    }
    .map_err(|e| CommandError::Usage(e.to_string()))?;
    Ok(OracleReport {
        cost: r.subspace.cost,
        lower_bound: r.cost_lower_bound,
        argmin_basis: columns(&r.subspace.basis),
        method: r.method.name().into(),
        resolution: r.resolution,
        grid_error: r.grid_error,
    })
}

pub fn oracle(args: &OracleArgs) -> Result<(), CommandError> {
    let points = ingest::ingest(&args.input.input, args.input.format)?;
    let report = oracle_report(&points, args.k, args.resolution)?;
    write_output(&args.output, &to_json(&report))
}
