//! Barrier (central-path) solver for the relaxation.
//!
//! Each stage minimises `G_t` over the trace-constrained slice with a damped
//! Newton method until the Newton decrement drops to [`DECREMENT_THRESHOLD`],
//! then multiplies `t` by `μ`. The starting point `X₀ = ((d−k)/d)·I`,
//! `y₀ᵢ = sqrt(‖X₀pᵢ‖² + e)`, `t₀ = 2n / 1ᵀy₀` is strictly feasible for every
//! input.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::conic::{
    g_t_reduced, g_t_value, is_strictly_feasible, ConicError, ConicInstance, FeasibilityMargins,
    InteriorPoint,
};
use crate::linalg::{self, KktSystem, SymMatrix};

/// A point is centred once `λ(G_t, z) ≤ 0.01`.
pub const DECREMENT_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("Newton centering at t = {t:.6e} exceeded {iterations} iterations (decrement {decrement:.3e})")]
    IterationLimit {
        t: f64,
        iterations: usize,
        decrement: f64,
    },
    #[error(
        "line search found no feasible decreasing step at t = {t:.6e} (decrement {decrement:.3e})"
    )]
    LineSearchFailure { t: f64, decrement: f64 },
    #[error("singular Newton system: {0}")]
    SingularSystem(String),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<SolverError>,
    },
}

/// Target accuracy of the relaxed objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    /// Multiple of the initial objective `1ᵀy₀`, capped at 1.
    Relative(f64),
    Absolute(f64),
}

impl Epsilon {
    pub fn resolve(self, initial_objective: f64) -> f64 {
        match self {
            Epsilon::Relative(r) => (r * initial_objective).min(1.0),
            Epsilon::Absolute(a) => a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mu: f64,
    pub epsilon: Epsilon,
    pub max_inner_iterations: usize,
    pub max_halvings: usize,
    pub margins: FeasibilityMargins,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu: 2.0,
            epsilon: Epsilon::Relative(1e-6),
            max_inner_iterations: 500,
            max_halvings: 60,
            margins: FeasibilityMargins::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSchedule {
    pub mu: f64,
    pub t0: f64,
    pub epsilon: f64,
    pub stages: usize,
}

impl PathSchedule {
    /// `stages = ⌈log_μ((deg + 1) / (ε·t₀))⌉`, clamped at zero.
    pub fn new(mu: f64, t0: f64, epsilon: f64, degree: f64) -> Result<Self, SolverError> {
        if !(mu > 1.0) || !mu.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "mu must be > 1 (got {mu})"
            )));
        }
        if !(t0 > 0.0) || !t0.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "t0 must be > 0 (got {t0})"
            )));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "epsilon must be in (0, 1] (got {epsilon})"
            )));
        }
        let raw = ((degree + 1.0) / (epsilon * t0)).ln() / mu.ln();
        let stages = if raw > 0.0 { raw.ceil() as usize } else { 0 };
        Ok(PathSchedule {
            mu,
            t0,
            epsilon,
            stages,
        })
    }
}

/// Snapshot handed to an [`IterateObserver`] once per Newton iterate.
#[derive(Debug, Clone, Copy)]
pub struct SolverState<'a> {
    pub point: &'a InteriorPoint,
    pub t: f64,
    pub decrement: f64,
    pub newton_iters: usize,
    pub stage: usize,
}

pub trait IterateObserver {
    fn on_iterate(&mut self, state: &SolverState<'_>);
}

impl IterateObserver for () {
    fn on_iterate(&mut self, _state: &SolverState<'_>) {}
}

impl<F: FnMut(&SolverState<'_>)> IterateObserver for F {
    fn on_iterate(&mut self, state: &SolverState<'_>) {
        self(state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: usize,
    pub t: f64,
    pub objective: f64,
    pub decrement: f64,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub outer_stages: usize,
    pub inner_newton: usize,
    /// `G_t₀(X₀, y₀) − G_t₀(centre)`, estimated with the first centre.
    pub rho: f64,
    /// `2n + 4d ln d`.
    pub rho_bound: f64,
    /// Stage 0 is the initial centering at `t₀`.
    pub stages: Vec<StageRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationSolution {
    pub x: SymMatrix,
    pub y: DVector<f64>,
    pub objective: f64,
    pub t0: f64,
    pub t_final: f64,
    pub epsilon: f64,
    /// `(deg(F) + 1) / t_final`.
    pub certified_gap: f64,
    pub stats: SolveStats,
}

/// The starting point and path parameter `t₀`.
pub fn init_point(inst: &ConicInstance) -> (InteriorPoint, f64) {
    let d = inst.d();
    let x0 = SymMatrix::scaled_identity(d, inst.trace_target() / d as f64);
    let e = std::f64::consts::E;
    let y0 = DVector::from_iterator(
        inst.n(),
        inst.points()
            .iter()
            .map(|p| (x0.mul_vec(&p).norm_squared() + e).sqrt()),
    );
    let t0 = 2.0 * inst.n() as f64 / y0.sum();
    (InteriorPoint::new(inst, x0, y0), t0)
}

struct NewtonStep {
    step: DVector<f64>,
    decrement: f64,
}

/// Equality-constrained Newton direction. The diagonal `y` block is
/// eliminated first, leaving a KKT system over `svec(X)` with the single
/// trace row.
fn newton_step(inst: &ConicInstance, z: &InteriorPoint, t: f64) -> Result<NewtonStep, SolverError> {
    let red = g_t_reduced(inst, z, t)?;
    let sys = KktSystem {
        hess: red.hess.clone(),
        eq_jac: DMatrix::from_row_slice(1, inst.x_dim(), inst.trace_row().as_slice()),
        grad: red.grad.clone(),
        eq_residual: DVector::from_element(1, z.x().trace() - inst.trace_target()),
    };
    let sol = linalg::solve_kkt(&sys).map_err(|e| SolverError::SingularSystem(e.to_string()))?;
    let dx = sol.step;
    let dy = red.y_step(&dx);
    // ΔᵀHΔ equals −gᵀΔ on the slice but cannot go negative through rounding
    let lambda_sq = red.newton_quadratic(&dx);
    if !lambda_sq.is_finite() {
        return Err(SolverError::SingularSystem(
            "non-finite Newton decrement".into(),
        ));
    }

    let mx = dx.len();
    let mut step = DVector::zeros(mx + dy.len());
    step.rows_mut(0, mx).copy_from(&dx);
    step.rows_mut(mx, dy.len()).copy_from(&dy);
    Ok(NewtonStep {
        step,
        decrement: lambda_sq.max(0.0).sqrt(),
    })
}

/// Newton decrement `λ(G_t, z)` on the trace-constrained slice.
pub fn newton_decrement(
    inst: &ConicInstance,
    z: &InteriorPoint,
    t: f64,
) -> Result<f64, SolverError> {
    Ok(newton_step(inst, z, t)?.decrement)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centered {
    pub point: InteriorPoint,
    pub decrement: f64,
    pub iterations: usize,
}

pub fn newton_to_center(
    inst: &ConicInstance,
    z: InteriorPoint,
    t: f64,
    config: &SolverConfig,
) -> Result<Centered, SolverError> {
    newton_to_center_observed(inst, z, t, config, 0, &mut ())
}

/// Damped Newton centering: the step is scaled by `1/(1+λ)` while `λ > 1/4`,
/// then halved until the iterate is strictly feasible and `G_t` does not
/// increase.
pub fn newton_to_center_observed<O: IterateObserver + ?Sized>(
    inst: &ConicInstance,
    mut z: InteriorPoint,
    t: f64,
    config: &SolverConfig,
    stage: usize,
    observer: &mut O,
) -> Result<Centered, SolverError> {
    let mut iterations = 0;
    loop {
        let NewtonStep { step, decrement } = newton_step(inst, &z, t)?;
        observer.on_iterate(&SolverState {
            point: &z,
            t,
            decrement,
            newton_iters: iterations,
            stage,
        });
        if decrement <= DECREMENT_THRESHOLD {
            return Ok(Centered {
                point: z,
                decrement,
                iterations,
            });
        }
        if iterations >= config.max_inner_iterations {
            return Err(SolverError::IterationLimit {
                t,
                iterations,
                decrement,
            });
        }

        let current = g_t_value(inst, &z, t)?;
        let tolerance = 1e-13 * current.abs().max(1.0);
        let mut alpha = if decrement > 0.25 {
            1.0 / (1.0 + decrement)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..=config.max_halvings {
            let candidate = z.stepped(inst, &step, alpha);
            if is_strictly_feasible(inst, candidate.x(), candidate.y(), config.margins)
                .is_feasible()
            {
                if let Ok(value) = g_t_value(inst, &candidate, t) {
                    if value <= current + tolerance {
                        accepted = Some(candidate);
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        z = accepted.ok_or(SolverError::LineSearchFailure { t, decrement })?;
        iterations += 1;
    }
}

pub fn central_path(
    inst: &ConicInstance,
    schedule: &PathSchedule,
    config: &SolverConfig,
) -> Result<RelaxationSolution, SolverError> {
    central_path_observed(inst, schedule, config, &mut ())
}

/// Runs the whole path: centre at `t₀`, then `schedule.stages` times set
/// `t ← μ·t` and re-centre from the previous centre.
pub fn central_path_observed<O: IterateObserver + ?Sized>(
    inst: &ConicInstance,
    schedule: &PathSchedule,
    config: &SolverConfig,
    observer: &mut O,
) -> Result<RelaxationSolution, SolverError> {
    let (z0, t0) = init_point(inst);
    let wrap = |stage: usize| {
        move |e: SolverError| SolverError::Stage {
            stage,
            source: Box::new(e),
        }
    };

    let g_start = g_t_value(inst, &z0, schedule.t0).map_err(|e| wrap(0)(e.into()))?;
    let first =
        newton_to_center_observed(inst, z0, schedule.t0, config, 0, observer).map_err(wrap(0))?;
    let g_centre = g_t_value(inst, &first.point, schedule.t0).map_err(|e| wrap(0)(e.into()))?;
    let (n, d) = (inst.n() as f64, inst.d() as f64);
    let rho = g_start - g_centre;
    let rho_bound = 2.0 * n + 4.0 * d * d.ln();
    log::debug!(
        "t0 = {t0:.6e} (schedule t0 = {:.6e}), rho = {rho:.6e}, bound = {rho_bound:.6e}",
        schedule.t0
    );

    let mut records = vec![StageRecord {
        stage: 0,
        t: schedule.t0,
        objective: first.point.objective(),
        decrement: first.decrement,
        inner_iterations: first.iterations,
    }];
    let mut inner = first.iterations;
    let mut z = first.point;
    let mut t = schedule.t0;
    for stage in 1..=schedule.stages {
        t *= schedule.mu;
        let c =
            newton_to_center_observed(inst, z, t, config, stage, observer).map_err(wrap(stage))?;
        inner += c.iterations;
        records.push(StageRecord {
            stage,
            t,
            objective: c.point.objective(),
            decrement: c.decrement,
            inner_iterations: c.iterations,
        });
        log::trace!(
            "stage {stage}: t = {t:.3e}, objective = {:.12e}, newton = {}",
            c.point.objective(),
            c.iterations
        );
        z = c.point;
    }

    Ok(RelaxationSolution {
        x: z.x().clone(),
        y: z.y().clone(),
        objective: z.objective(),
        t0: schedule.t0,
        t_final: t,
        epsilon: schedule.epsilon,
        certified_gap: (inst.degree() + 1.0) / t,
        stats: SolveStats {
            outer_stages: schedule.stages,
            inner_newton: inner,
            rho,
            rho_bound,
            stages: records,
        },
    })
}

/// Builds the schedule from `config` (resolving a relative ε against `1ᵀy₀`)
/// and runs [`central_path`].
pub fn solve_relaxation(
    inst: &ConicInstance,
    config: &SolverConfig,
) -> Result<RelaxationSolution, SolverError> {
    solve_relaxation_observed(inst, config, &mut ())
}

pub fn solve_relaxation_observed<O: IterateObserver + ?Sized>(
    inst: &ConicInstance,
    config: &SolverConfig,
    observer: &mut O,
) -> Result<RelaxationSolution, SolverError> {
    let schedule = schedule_for(inst, config)?;
    central_path_observed(inst, &schedule, config, observer)
}

pub fn schedule_for(
    inst: &ConicInstance,
    config: &SolverConfig,
) -> Result<PathSchedule, SolverError> {
    if config.max_inner_iterations == 0 {
        return Err(SolverError::InvalidConfig(
            "max inner iterations must be >= 1".into(),
        ));
    }
    let (z0, t0) = init_point(inst);
    let eps = config.epsilon.resolve(z0.objective());
    PathSchedule::new(config.mu, t0, eps, inst.degree())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{build_instance, PointSet};
    use crate::fixtures;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cross_instance() -> ConicInstance {
        let p = PointSet::from_rows(&[
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ])
        .unwrap();
        build_instance(p, 1).unwrap()
    }

    #[test]
    fn init_point_single_point() {
        let inst = build_instance(PointSet::from_rows(&[vec![1.0, 0.0]]).unwrap(), 1).unwrap();
        let (z, t0) = init_point(&inst);
        assert_eq!(z.x(), &SymMatrix::scaled_identity(2, 0.5));
        let y = (0.25 + std::f64::consts::E).sqrt();
        assert!((z.y()[0] - y).abs() < 1e-15);
        // 2 / sqrt(0.25 + e), evaluated independently
        assert!((t0 - 1.160_853_537_021).abs() < 1e-11, "t0 = {t0}");
    }

    #[test]
    fn init_slacks_equal_e() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (n, d, k) in [(5, 3, 1), (12, 6, 4), (1, 2, 1)] {
            let inst = build_instance(fixtures::uniform_points(n, d, &mut rng), k).unwrap();
            let (z, t0) = init_point(&inst);
            for s in z.slacks().iter() {
                assert!((s - std::f64::consts::E).abs() <= 1e-12 * std::f64::consts::E);
            }
            let log_sum: f64 = z.slacks().iter().map(|s| s.ln()).sum();
            assert!((log_sum - n as f64).abs() < 1e-12 * n as f64);
            assert!(
                is_strictly_feasible(&inst, z.x(), z.y(), FeasibilityMargins::default())
                    .is_feasible()
            );
            // t0·1ᵀy0 = 2n, and y0ᵢ ≥ √e forces t0 ≤ 2/√e
            assert!((t0 * z.objective() - 2.0 * n as f64).abs() < 1e-12 * n as f64);
            assert!(t0 <= 2.0 / std::f64::consts::E.sqrt());
        }
    }

    #[test]
    fn schedule_stage_count() {
        let s = PathSchedule::new(2.0, 1.0, 1e-3, 15.0).unwrap();
        // log2(16 / 1e-3) = 13.97
        assert_eq!(s.stages, 14);
        let s = PathSchedule::new(2.0, 100.0, 1.0, 15.0).unwrap();
        assert_eq!(s.stages, 0);
        assert!(PathSchedule::new(1.0, 1.0, 0.5, 3.0).is_err());
        assert!(PathSchedule::new(2.0, 1.0, 0.0, 3.0).is_err());
        assert!(PathSchedule::new(2.0, 1.0, 1.5, 3.0).is_err());
    }

    #[test]
    fn cross_centre_has_zero_decrement() {
        let inst = cross_instance();
        for t in [0.5, 1.0, 10.0] {
            let y = (2.0 + (4.0 + t * t as f64).sqrt()) / (2.0 * t);
            let z = InteriorPoint::new(
                &inst,
                SymMatrix::scaled_identity(2, 0.5),
                DVector::from_element(4, y),
            );
            let lambda = newton_decrement(&inst, &z, t).unwrap();
            assert!(lambda < 1e-9, "λ = {lambda}");
        }
    }

    #[test]
    fn centered_point_is_returned_unchanged() {
        let inst = cross_instance();
        let t = 2.0;
        let y = (2.0 + (4.0 + t * t as f64).sqrt()) / (2.0 * t);
        let z = InteriorPoint::new(
            &inst,
            SymMatrix::scaled_identity(2, 0.5),
            DVector::from_element(4, y),
        );
        let out = newton_to_center(&inst, z.clone(), t, &SolverConfig::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.point, z);
    }

    #[test]
    fn centering_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let config = SolverConfig::default();
        for _ in 0..5 {
            let (inst, z) = fixtures::random_instance_and_point(10, 4, 2, &mut rng);
            let t = 3.0;
            let mut feasible = true;
            let mut observer = |s: &SolverState<'_>| {
                feasible &= is_strictly_feasible(&inst, s.point.x(), s.point.y(), config.margins)
                    .is_feasible();
            };
            let out = newton_to_center_observed(&inst, z, t, &config, 0, &mut observer).unwrap();
            assert!(feasible);
            assert!(newton_decrement(&inst, &out.point, t).unwrap() <= DECREMENT_THRESHOLD);
            assert!((out.point.x().trace() - inst.trace_target()).abs() <= 1e-9);

            // no random feasible probe beats the centre by more than λ²
            let centre = g_t_value(&inst, &out.point, t).unwrap();
            for _ in 0..100 {
                let x = fixtures::random_feasible_x(inst.d(), inst.k(), &mut rng);
                let y = fixtures::random_feasible_y(inst.points(), &x, &mut rng);
                let probe = g_t_value(&inst, &InteriorPoint::new(&inst, x, y), t).unwrap();
                assert!(centre <= probe + out.decrement * out.decrement);
            }
        }
    }

    #[test]
    fn cross_relaxation_value() {
        let inst = cross_instance();
        let sol = solve_relaxation(&inst, &SolverConfig::default()).unwrap();
        assert!(
            (sol.objective - 2.0).abs() <= sol.epsilon,
            "objective {}",
            sol.objective
        );
        assert!(sol.certified_gap <= sol.epsilon);
        // the exact centre stays diagonal by symmetry
        assert_eq!(sol.x[(1, 0)], 0.0);
    }

    #[test]
    fn iteration_limit_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let inst = build_instance(fixtures::uniform_points(20, 3, &mut rng), 1).unwrap();
        let (z, _) = init_point(&inst);
        let config = SolverConfig {
            max_inner_iterations: 1,
            ..SolverConfig::default()
        };
        let err = newton_to_center(&inst, z, 1000.0, &config).unwrap_err();
        assert!(matches!(
            err,
            SolverError::IterationLimit { iterations: 1, .. }
        ));
    }

    #[test]
    fn solver_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let inst = build_instance(fixtures::uniform_points(15, 4, &mut rng), 2).unwrap();
        let a = solve_relaxation(&inst, &SolverConfig::default()).unwrap();
        let b = solve_relaxation(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
