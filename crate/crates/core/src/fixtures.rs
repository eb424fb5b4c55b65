//! Random instances and independent reference evaluations, shared by the
//! tests and the `selftest` command.
//!
//! Nothing in here calls the analytic derivative code: every reference value
//! is computed from first principles (dense determinants, finite differences).

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::conic::{build_instance, g_t_value, ConicInstance, InteriorPoint, PointSet};
use crate::linalg::SymMatrix;

/// `n` points with coordinates uniform in `[-1, 1]`.
pub fn uniform_points<R: Rng>(n: usize, d: usize, rng: &mut R) -> PointSet {
    PointSet::new(DMatrix::from_fn(n, d, |_, _| rng.gen_range(-1.0..1.0)))
        .expect("uniform points are valid")
}

/// An orthogonal matrix from the QR factorisation of a random matrix, with
/// column signs fixed so `R` has a positive diagonal.
pub fn random_rotation<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Orthonormal basis of a random `k`-dimensional subspace of `ℝᵈ`, as a `d×k`
/// matrix.
pub fn random_subspace<R: Rng>(d: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    random_rotation(d, rng).columns(0, k).into_owned()
}

/// `n` points `B·c` with `c` uniform in `[-1, 1]ᵏ`.
pub fn points_in_subspace<R: Rng>(n: usize, basis: &DMatrix<f64>, rng: &mut R) -> PointSet {
    let k = basis.ncols();
    let coeffs = DMatrix::from_fn(n, k, |_, _| rng.gen_range(-1.0..1.0));
    PointSet::new(coeffs * basis.transpose()).expect("finite points")
}

/// A symmetric `X` with `tr X = d − k` and eigenvalues well inside `(0, 1)`.
pub fn random_feasible_x<R: Rng>(d: usize, k: usize, rng: &mut R) -> SymMatrix {
    let centre = (d - k) as f64 / d as f64;
    let radius = 0.8 * centre.min(1.0 - centre);
    let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = u.iter().sum::<f64>() / d as f64;
    let delta: Vec<f64> = u.iter().map(|v| v - mean).collect();
    let amax = delta.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let scale = radius * rng.gen_range(0.2..1.0) / amax;
    let values: Vec<f64> = delta.iter().map(|v| centre + scale * v).collect();
    let q = random_rotation(d, rng);
    let x = SymMatrix::from_diagonal(&values).congruence(&q);
    // restore the trace exactly after the rotation round-off
    let shift = ((d - k) as f64 - x.trace()) / d as f64;
    x.add_scaled(shift, &SymMatrix::identity(d))
}

/// A strictly feasible `y` for the given `X` with slack margins in `[0.2, 1]`.
pub fn random_feasible_y<R: Rng>(points: &PointSet, x: &SymMatrix, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(
        points.n(),
        points
            .iter()
            .map(|p| x.mul_vec(&p).norm() + rng.gen_range(0.2..1.0)),
    )
}

pub fn random_instance_and_point<R: Rng>(
    n: usize,
    d: usize,
    k: usize,
    rng: &mut R,
) -> (ConicInstance, InteriorPoint) {
    let inst = build_instance(uniform_points(n, d, rng), k).expect("valid k");
    let x = random_feasible_x(d, k, rng);
    let y = random_feasible_y(inst.points(), &x, rng);
    let z = InteriorPoint::new(&inst, x, y);
    (inst, z)
}

/// Unit vector of length `m` in a uniformly random direction of the cube.
pub fn random_direction<R: Rng>(m: usize, rng: &mut R) -> DVector<f64> {
    let v = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
    let norm = v.norm();
    v / norm
}

/// `G_t` evaluated from scratch with dense LU determinants.
pub fn naive_g_t(points: &PointSet, x: &SymMatrix, y: &DVector<f64>, t: f64) -> f64 {
    let d = points.d();
    let xm = x.as_matrix();
    let mut value = t * y.sum();
    for (i, p) in points.iter().enumerate() {
        let xp = xm * p;
        value -= (y[i] * y[i] - xp.dot(&xp)).ln();
    }
    value -= xm.clone().determinant().ln();
    value -= (DMatrix::identity(d, d) - xm).determinant().ln();
    value
}

/// Central difference of `G_t` along `dir` (in `(svec X, y)` coordinates).
pub fn directional_fd(
    inst: &ConicInstance,
    z: &InteriorPoint,
    t: f64,
    dir: &DVector<f64>,
    h: f64,
) -> Option<f64> {
    let plus = g_t_value(inst, &z.stepped(inst, dir, h), t).ok()?;
    let minus = g_t_value(inst, &z.stepped(inst, dir, -h), t).ok()?;
    Some((plus - minus) / (2.0 * h))
}

/// Finite-difference step for derivatives at `z`: `1e-6` times the coordinate
/// scale.
pub fn fd_step(z: &InteriorPoint) -> f64 {
    1e-6 * z.coordinates().amax().max(1.0)
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
