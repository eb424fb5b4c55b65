//! Competitors and brute-force ground truth.
//!
//! * [`ksvd_baseline`]: span of the top-`k` right singular vectors, optimal for
//!   squared distances.
//! * [`sampling_baseline`]: adaptive distance-proportional sampling with a
//!   best-of-`trials` restart loop.
//! * [`oracle_2d`] and [`oracle_3d`]: exhaustive grids with Lipschitz error
//!   bounds, so `cost_lower_bound` is a true lower bound on the optimum.
//!
//! The sampling generator is `ChaCha8Rng::seed_from_u64(seed)` from
//! `rand_chacha`; one generator is drawn from sequentially across all trials,
//! so a run with more trials extends the candidate sequence of a shorter one.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::conic::{ConicError, PointSet};
use crate::ksm::{KsmError, Subspace};
use crate::linalg::{self, LinalgError, SymMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("oracle requires d = {expected} (got d = {got})")]
    WrongDimension { expected: usize, got: usize },
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Ksm(#[from] KsmError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    Grid2D,
    SphereGrid3D,
    Svd,
    Sampling,
}

impl OracleMethod {
    pub fn name(self) -> &'static str {
        match self {
            OracleMethod::Grid2D => "grid2d",
            OracleMethod::SphereGrid3D => "sphere-grid3d",
            OracleMethod::Svd => "svd",
            OracleMethod::Sampling => "sampling",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub subspace: Subspace,
    pub method: OracleMethod,
    /// Number of grid points (or trials).
    pub resolution: usize,
    /// Worst-case gap between the grid minimum and the true optimum.
    pub grid_error: f64,
    /// Grid minimum minus `grid_error`, floored at zero.
    pub cost_lower_bound: f64,
}

fn check_k(points: &PointSet, k: usize) -> Result<(), BaselineError> {
    let d = points.d();
    if k < 1 || k >= d {
        return Err(ConicError::BadK { k, d }.into());
    }
    Ok(())
}

/// Top-`k` eigenvectors of `AᵀA`, largest eigenvalue first.
pub fn ksvd_baseline(points: &PointSet, k: usize) -> Result<Subspace, BaselineError> {
    check_k(points, k)?;
    let a = points.matrix();
    let gram = SymMatrix::from_lower(a.transpose() * a);
    let eig = linalg::sym_eig(&gram)?;
    let d = points.d();
    let basis = DMatrix::from_fn(d, k, |r, c| eig.vectors[(d - 1 - c, r)]);
    Ok(Subspace::from_basis(points, basis)?)
}

/// Appends the component of `v` orthogonal to `basis` (twice-orthogonalised
/// Gram–Schmidt). Returns `false` and leaves `basis` untouched when that
/// component is shorter than `tol`.
fn push_orthogonal(basis: &mut Vec<DVector<f64>>, v: &DVector<f64>, tol: f64) -> bool {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis.iter() {
            let c = b.dot(&r);
            r.axpy(-c, b, 1.0);
        }
    }
    let norm = r.norm();
    if norm <= tol {
        return false;
    }
    basis.push(r / norm);
    true
}

fn residual_norms(points: &PointSet, basis: &[DVector<f64>]) -> Vec<f64> {
    points
        .iter()
        .map(|p| {
            let mut r = p.clone();
            for b in basis {
                let c = b.dot(&r);
                r.axpy(-c, b, 1.0);
            }
            r.norm()
        })
        .collect()
}

fn to_matrix(d: usize, basis: &[DVector<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(d, basis.len(), |r, c| basis[c][r])
}

/// Completes `basis` to `k` vectors with coordinate axes in index order.
fn pad_with_axes(basis: &mut Vec<DVector<f64>>, d: usize, k: usize) {
    for j in 0..d {
        if basis.len() == k {
            break;
        }
        let mut e = DVector::zeros(d);
        e[j] = 1.0;
        push_orthogonal(basis, &e, 1e-8);
    }
}

fn sampling_candidate(points: &PointSet, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let d = points.d();
    let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let dist = residual_norms(points, &basis);
        let weights: Vec<f64> = dist
            .iter()
            .map(|&r| if r > tol { r } else { 0.0 })
            .collect();
        let Ok(sampler) = WeightedIndex::new(&weights) else {
            // every point already lies in the partial span: exact fit
            log::debug!("sampling: degenerate span after {} picks", basis.len());
            pad_with_axes(&mut basis, d, k);
            break;
        };
        let i = sampler.sample(rng);
        if !push_orthogonal(&mut basis, &points.point(i), tol) {
            pad_with_axes(&mut basis, d, k);
            break;
        }
    }
    to_matrix(d, &basis)
}

/// Best-of-`trials` adaptive sampling. Each trial picks `k` points with
/// probability proportional to their distance from the span of the previous
/// picks and takes their orthonormalised span.
pub fn sampling_baseline(
    points: &PointSet,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<Subspace, BaselineError> {
    check_k(points, k)?;
    if trials == 0 {
        return Err(BaselineError::InvalidArgument(
            "trials must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Subspace> = None;
    for _ in 0..trials {
        let cand = Subspace::from_basis(points, sampling_candidate(points, k, &mut rng))?;
        if best.as_ref().is_none_or(|b| cand.cost < b.cost) {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one trial"))
}

/// Σᵢ‖pᵢ‖, the Lipschitz constant of every oracle objective with respect to
/// the chord distance between unit vectors.
fn lipschitz(points: &PointSet) -> f64 {
    points.norm_sum()
}

/// Grid search over lines `(cos θ, sin θ)` for `θ = jπ/angles`. The first grid
/// index attaining the minimum wins.
pub fn oracle_2d(points: &PointSet, angles: usize) -> Result<OracleResult, BaselineError> {
    if points.d() != 2 {
        return Err(BaselineError::WrongDimension {
            expected: 2,
            got: points.d(),
        });
    }
    if angles < 4 {
        return Err(BaselineError::InvalidArgument(format!(
            "angles must be at least 4 (got {angles})"
        )));
    }
    let a = points.matrix();
    let mut best = (f64::INFINITY, 0usize);
    for j in 0..angles {
        let theta = PI * j as f64 / angles as f64;
        let (s, c) = theta.sin_cos();
        let cost: f64 = (0..points.n())
            .map(|i| (-s * a[(i, 0)] + c * a[(i, 1)]).abs())
            .sum();
        if cost < best.0 {
            best = (cost, j);
        }
    }
    let theta = PI * best.1 as f64 / angles as f64;
    let basis = DMatrix::from_column_slice(2, 1, &[theta.cos(), theta.sin()]);
    let subspace = Subspace {
        basis,
        cost: best.0,
        certificate: None,
    };
    let grid_error = lipschitz(points) * PI / angles as f64;
    Ok(OracleResult {
        subspace,
        method: OracleMethod::Grid2D,
        resolution: angles,
        grid_error,
        cost_lower_bound: (best.0 - grid_error).max(0.0),
    })
}

/// `m` points of the spherical Fibonacci lattice.
pub fn fibonacci_sphere(m: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|j| {
            let z = 1.0 - (2.0 * j as f64 + 1.0) / m as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden * j as f64).sin_cos();
            [r * c, r * s, z]
        })
        .collect()
}

/// Upper bound on the chord distance from any unit vector to the nearest
/// point of [`fibonacci_sphere`]`(m)`.
pub fn fibonacci_covering_radius(m: usize) -> f64 {
    (4.0 / (m as f64).sqrt()).min(2.0)
}

/// Grid search over unit vectors in ℝ³. For `k = 2` the grid point is the
/// plane normal and the objective is `Σ|nᵀpᵢ|`; for `k = 1` it is the line
/// direction and the objective is `Σ‖pᵢ − (uᵀpᵢ)u‖`.
pub fn oracle_3d(
    points: &PointSet,
    k: usize,
    resolution: usize,
) -> Result<OracleResult, BaselineError> {
    if points.d() != 3 {
        return Err(BaselineError::WrongDimension {
            expected: 3,
            got: points.d(),
        });
    }
    check_k(points, k)?;
    if resolution < 2 {
        return Err(BaselineError::InvalidArgument(format!(
            "resolution must be at least 2 (got {resolution})"
        )));
    }
    let pts: Vec<[f64; 3]> = points.iter().map(|p| [p[0], p[1], p[2]]).collect();
    let norms_sq: Vec<f64> = pts
        .iter()
        .map(|p| p[0] * p[0] + p[1] * p[1] + p[2] * p[2])
        .collect();
    let grid = fibonacci_sphere(resolution);
    let mut best = (f64::INFINITY, 0usize);
    for (j, u) in grid.iter().enumerate() {
        let mut cost = 0.0;
        for (p, nsq) in pts.iter().zip(&norms_sq) {
            let dot = u[0] * p[0] + u[1] * p[1] + u[2] * p[2];
            cost += if k == 2 {
                dot.abs()
            } else {
                (nsq - dot * dot).max(0.0).sqrt()
            };
        }
        if cost < best.0 {
            best = (cost, j);
        }
    }
    let u = DVector::from_column_slice(&grid[best.1]);
    let basis = if k == 1 {
        DMatrix::from_column_slice(3, 1, u.as_slice())
    } else {
        plane_basis(&u)
    };
    let subspace = Subspace {
        basis,
        cost: best.0,
        certificate: None,
    };
    let grid_error = lipschitz(points) * fibonacci_covering_radius(resolution);
    Ok(OracleResult {
        subspace,
        method: OracleMethod::SphereGrid3D,
        resolution,
        grid_error,
        cost_lower_bound: (best.0 - grid_error).max(0.0),
    })
}

/// Orthonormal basis of the plane with unit normal `n`.
fn plane_basis(n: &DVector<f64>) -> DMatrix<f64> {
    let mut basis = vec![n.clone()];
    pad_with_axes(&mut basis, 3, 3);
    to_matrix(3, &basis[1..])
}
