//! Dense symmetric kernels for the solver, from Jacobi eigendecomposition to
//! equality-constrained (KKT) solves.
//!
//! Everything here is a pure function of its inputs. Matrices are small
//! (the solver never works with more than `d(d+1)/2` coordinates at once), so
//! the algorithms favour robustness and determinism over raw speed.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Maximum number of full Jacobi sweeps before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius tolerance, relative to `‖S‖_F`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:.3e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("matrix is not positive definite (pivot {index} = {pivot:.3e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("singular KKT system: {0}")]
    SingularSystem(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// A real symmetric matrix. Only the lower triangle of the input is read on
/// construction; the stored matrix is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Builds a symmetric matrix from the lower triangle of `m`.
    ///
    /// Panics if `m` is not square or is empty.
    pub fn from_lower(mut m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "SymMatrix requires a square matrix");
        assert!(m.nrows() >= 1, "SymMatrix requires dim >= 1");
        let d = m.nrows();
        for j in 0..d {
            for i in (j + 1)..d {
                m[(j, i)] = m[(i, j)];
            }
        }
        SymMatrix(m)
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_lower(DMatrix::from_fn(
            d,
            d,
            |i, j| if i >= j { f(i, j) } else { 0.0 },
        ))
    }

    pub fn zeros(d: usize) -> Self {
        SymMatrix(DMatrix::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        SymMatrix(DMatrix::identity(d, d))
    }

    pub fn scaled_identity(d: usize, scale: f64) -> Self {
        SymMatrix(DMatrix::identity(d, d) * scale)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// `Vᵀ·diag(values)·V` where the rows of `rows` are the vectors.
    pub fn from_eigen_rows(values: &[f64], rows: &DMatrix<f64>) -> Self {
        let d = rows.ncols();
        assert_eq!(values.len(), rows.nrows());
        Self::from_fn(d, |a, b| {
            values
                .iter()
                .enumerate()
                .map(|(j, &v)| v * rows[(j, a)] * rows[(j, b)])
                .sum()
        })
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.0 * v
    }

    /// `I − self`.
    pub fn complement(&self) -> SymMatrix {
        let d = self.dim();
        SymMatrix(DMatrix::identity(d, d) - &self.0)
    }

    /// `self + alpha·other`, kept exactly symmetric.
    pub fn add_scaled(&self, alpha: f64, other: &SymMatrix) -> SymMatrix {
        SymMatrix::from_lower(&self.0 + &other.0 * alpha)
    }

    /// `Q·self·Qᵀ` for an arbitrary square `Q`.
    pub fn congruence(&self, q: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::from_lower(q * &self.0 * q.transpose())
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Number of free coordinates of a `d×d` symmetric matrix.
pub fn svec_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Coordinate pairs `(i, j)` with `i ≥ j`, in svec order (column-major lower
/// triangle).
pub fn svec_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(svec_len(d));
    for j in 0..d {
        for i in j..d {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Scaled vectorisation: off-diagonal entries carry a factor `√2` so that
/// `svec(A)·svec(B) = tr(A·B)`.
pub fn svec(m: &SymMatrix) -> DVector<f64> {
    let d = m.dim();
    let pairs = svec_pairs(d);
    DVector::from_iterator(
        pairs.len(),
        pairs.iter().map(|&(i, j)| {
            if i == j {
                m[(i, i)]
            } else {
                std::f64::consts::SQRT_2 * m[(i, j)]
            }
        }),
    )
}

/// Inverse of [`svec`].
pub fn smat(v: &DVector<f64>, d: usize) -> SymMatrix {
    assert_eq!(v.len(), svec_len(d), "svec length does not match dimension");
    let mut m = DMatrix::zeros(d, d);
    for (a, &(i, j)) in svec_pairs(d).iter().enumerate() {
        if i == j {
            m[(i, i)] = v[a];
        } else {
            let x = v[a] / std::f64::consts::SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    SymMatrix(m)
}

/// Eigenvalues in ascending order; row `j` of `vectors` is the unit
/// eigenvector belonging to `values[j]`, so `S = Vᵀ·diag(values)·V`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPair {
    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_eigen_rows(self.values.as_slice(), &self.vectors)
    }
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let d = a.nrows();
    let mut acc = 0.0;
    for j in 0..d {
        for i in (j + 1)..d {
            acc += 2.0 * a[(i, j)] * a[(i, j)];
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi eigendecomposition.
///
/// Sweeps run in fixed `(p, q)` order. Eigenvalues come out ascending, ties
/// in their original index order. Each eigenvector is signed so that its
/// first component of magnitude above `1e-12` is positive. The output is
/// therefore a deterministic function of the input bits.
pub fn sym_eig(s: &SymMatrix) -> Result<EigenPair> {
    if !s.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let d = s.dim();
    let mut a = s.as_matrix().clone();
    let mut v = DMatrix::<f64>::identity(d, d);
    let threshold = JACOBI_TOLERANCE * s.frobenius_norm();

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..d {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..d {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let residual = off_diagonal_norm(&a);
        if residual > threshold {
            return Err(LinalgError::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
                residual,
            });
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&x, &y| a[(x, x)].total_cmp(&a[(y, y)]).then(x.cmp(&y)));

    let values = DVector::from_iterator(d, order.iter().map(|&j| a[(j, j)]));
    let mut vectors = DMatrix::zeros(d, d);
    for (row, &j) in order.iter().enumerate() {
        let col = v.column(j);
        let sign = col
            .iter()
            .find(|x| x.abs() > 1e-12)
            .map_or(1.0, |x| x.signum());
        for k in 0..d {
            vectors[(row, k)] = sign * col[k];
        }
    }
    Ok(EigenPair { values, vectors })
}

/// Lower-triangular Cholesky factor `S = L·Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    pub fn new(s: &DMatrix<f64>) -> Result<Self> {
        if !s.is_square() {
            return Err(LinalgError::DimensionMismatch(format!(
                "cholesky of {}x{} matrix",
                s.nrows(),
                s.ncols()
            )));
        }
        let n = s.nrows();
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut diag = s[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(LinalgError::NotPositiveDefinite {
                    index: j,
                    pivot: diag,
                });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut acc = s[(i, j)];
                for k in 0..j {
                    acc -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = acc / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|x| x.ln()).sum::<f64>()
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            self.solve_in_place(col.as_mut_slice());
        }
        x
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.l.nrows();
        let inv = self.solve_mat(&DMatrix::identity(n, n));
        // symmetrise away the rounding asymmetry of the two triangular solves
        (&inv + inv.transpose()) * 0.5
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.l.nrows();
        for i in 0..n {
            let mut acc = x[i];
            for k in 0..i {
                acc -= self.l[(i, k)] * x[k];
            }
            x[i] = acc / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in (i + 1)..n {
                acc -= self.l[(k, i)] * x[k];
            }
            x[i] = acc / self.l[(i, i)];
        }
    }
}

/// `ln det S` through a Cholesky factorisation. Fails instead of returning NaN
/// when `S` is not positive definite.
pub fn chol_logdet(s: &SymMatrix) -> Result<f64> {
    Ok(Cholesky::new(s.as_matrix())?.log_det())
}

/// Linearised equality-constrained Newton system
/// `[H Aᵀ; A 0]·[Δ; ν] = [−g; −r]`.
#[derive(Debug, Clone)]
pub struct KktSystem {
    pub hess: DMatrix<f64>,
    pub eq_jac: DMatrix<f64>,
    pub grad: DVector<f64>,
    pub eq_residual: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct KktSolution {
    pub step: DVector<f64>,
    pub multipliers: DVector<f64>,
}

impl KktSystem {
    fn check_shapes(&self) -> Result<()> {
        let m = self.grad.len();
        let c = self.eq_residual.len();
        if self.hess.nrows() != m
            || self.hess.ncols() != m
            || self.eq_jac.nrows() != c
            || (c > 0 && self.eq_jac.ncols() != m)
        {
            return Err(LinalgError::DimensionMismatch(format!(
                "hess {}x{}, eq_jac {}x{}, grad {}, residual {}",
                self.hess.nrows(),
                self.hess.ncols(),
                self.eq_jac.nrows(),
                self.eq_jac.ncols(),
                m,
                c
            )));
        }
        Ok(())
    }

    /// Relative residual of the block system at `(step, multipliers)`.
    pub fn relative_residual(&self, sol: &KktSolution) -> f64 {
        let top = &self.hess * &sol.step + self.eq_jac.transpose() * &sol.multipliers + &self.grad;
        let bottom = &self.eq_jac * &sol.step + &self.eq_residual;
        let num = (top.norm_squared() + bottom.norm_squared()).sqrt();
        let scale = self.grad.norm() + self.eq_residual.norm();
        if scale == 0.0 {
            num
        } else {
            num / scale
        }
    }
}

/// Solves the KKT system by block elimination through a Cholesky factor of
/// `H`; when `H` is not positive definite, falls back to a pivoted LU
/// factorisation of the full block matrix.
pub fn solve_kkt(sys: &KktSystem) -> Result<KktSolution> {
    sys.check_shapes()?;
    let m = sys.grad.len();
    let c = sys.eq_residual.len();
    let neg_g = -&sys.grad;

    match Cholesky::new(&sys.hess) {
        Ok(chol) => {
            let u = chol.solve_vec(&neg_g);
            if c == 0 {
                return Ok(KktSolution {
                    step: u,
                    multipliers: DVector::zeros(0),
                });
            }
            let w = chol.solve_mat(&sys.eq_jac.transpose());
            let schur = &sys.eq_jac * &w;
            let schur = (&schur + schur.transpose()) * 0.5;
            let scale = schur.diagonal().amax();
            let schur = Cholesky::new(&schur)
                .ok()
                .filter(|f| f.l.diagonal().iter().all(|&v| v * v > 1e-13 * scale))
                .ok_or_else(|| {
                    LinalgError::SingularSystem("equality constraints are rank deficient".into())
                })?;
            let rhs = &sys.eq_jac * &u + &sys.eq_residual;
            let nu = schur.solve_vec(&rhs);
            let step = u - w * &nu;
            Ok(KktSolution {
                step,
                multipliers: nu,
            })
        }
        Err(_) => {
            let mut block = DMatrix::zeros(m + c, m + c);
            block.view_mut((0, 0), (m, m)).copy_from(&sys.hess);
            if c > 0 {
                block.view_mut((m, 0), (c, m)).copy_from(&sys.eq_jac);
                block
                    .view_mut((0, m), (m, c))
                    .copy_from(&sys.eq_jac.transpose());
            }
            let mut rhs = DVector::zeros(m + c);
            rhs.rows_mut(0, m).copy_from(&neg_g);
            rhs.rows_mut(m, c).copy_from(&(-&sys.eq_residual));
            let sol = block
                .lu()
                .solve(&rhs)
                .filter(|x| x.iter().all(|v| v.is_finite()))
                .ok_or_else(|| LinalgError::SingularSystem("block matrix is singular".into()))?;
            let out = KktSolution {
                step: sol.rows(0, m).into_owned(),
                multipliers: sol.rows(m, c).into_owned(),
            };
            if sys.relative_residual(&out) > 1e-6 {
                return Err(LinalgError::SingularSystem(
                    "block matrix is numerically singular".into(),
                ));
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(d: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        SymMatrix::from_fn(d, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn identity_eigen() {
        let e = sym_eig(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(e.vectors, DMatrix::identity(3, 3));
    }

    #[test]
    fn diagonal_eigen_sorted() {
        let e = sym_eig(&SymMatrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 2.0, 3.0]);
        let expected = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 0., 0., 1., 1., 0., 0.]);
        assert_eq!(e.vectors, expected);
    }

    #[test]
    fn zero_matrix_eigen() {
        let e = sym_eig(&SymMatrix::zeros(4)).unwrap();
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let s = random_sym(6, &mut rng);
            let e = sym_eig(&s).unwrap();
            let rel = (e.reconstruct().as_matrix() - s.as_matrix()).norm() / s.frobenius_norm();
            assert!(rel <= 1e-10, "reconstruction residual {rel}");
            let gram = &e.vectors * e.vectors.transpose();
            assert!((gram - DMatrix::identity(6, 6)).norm() <= 1e-10);
            let ascending = e.values.as_slice().windows(2).all(|w| w[0] <= w[1]);
            assert!(ascending);
        }
    }

    #[test]
    fn eigen_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_sym(8, &mut rng);
        assert_eq!(sym_eig(&s).unwrap(), sym_eig(&s).unwrap());
    }

    #[test]
    fn eigen_rejects_nan() {
        let mut m = DMatrix::zeros(2, 2);
        m[(1, 0)] = f64::NAN;
        assert_eq!(
            sym_eig(&SymMatrix::from_lower(m)),
            Err(LinalgError::NonFinite)
        );
    }

    #[test]
    fn logdet_values() {
        assert_eq!(chol_logdet(&SymMatrix::identity(5)).unwrap(), 0.0);
        let half = chol_logdet(&SymMatrix::from_diagonal(&[0.5, 0.5])).unwrap();
        assert!((half + 2.0 * 2f64.ln()).abs() < 1e-15);
        // d = 2, k = 1: X0 = I/2 on both sides of the PSD sandwich
        let x0 = SymMatrix::scaled_identity(2, 0.5);
        let both = chol_logdet(&x0).unwrap() + chol_logdet(&x0.complement()).unwrap();
        let expected = -2.0 * (4.0f64 / 1.0).ln();
        assert!((both - expected).abs() < 1e-14);
        assert!((both + 4.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn logdet_rejects_indefinite() {
        let s = SymMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(
            chol_logdet(&s),
            Err(LinalgError::NotPositiveDefinite { index: 1, .. })
        ));
        assert!(chol_logdet(&SymMatrix::zeros(2)).is_err());
    }

    #[test]
    fn logdet_matches_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let b = DMatrix::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0));
            let s = SymMatrix::from_lower(&b * b.transpose() + DMatrix::identity(5, 5) * 0.1);
            let e = sym_eig(&s).unwrap();
            let via_eig: f64 = e.values.iter().map(|v| v.ln()).sum();
            assert!((chol_logdet(&s).unwrap() - via_eig).abs() < 1e-8);
        }
    }

    #[test]
    fn svec_roundtrip_preserves_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_sym(4, &mut rng);
        let b = random_sym(4, &mut rng);
        let tr = (a.as_matrix() * b.as_matrix()).trace();
        assert!((svec(&a).dot(&svec(&b)) - tr).abs() < 1e-12);
        let back = smat(&svec(&a), 4);
        assert!((back.as_matrix() - a.as_matrix()).amax() < 1e-15);
    }

    #[test]
    fn kkt_unconstrained_identity() {
        let v = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let sys = KktSystem {
            hess: DMatrix::identity(3, 3),
            eq_jac: DMatrix::zeros(0, 3),
            grad: v.clone(),
            eq_residual: DVector::zeros(0),
        };
        let sol = solve_kkt(&sys).unwrap();
        assert_eq!(sol.step, -v);
    }

    #[test]
    fn kkt_sum_to_zero_projection() {
        let m = 5;
        let mut g = DVector::zeros(m);
        g[0] = 1.0;
        let sys = KktSystem {
            hess: DMatrix::identity(m, m),
            eq_jac: DMatrix::from_element(1, m, 1.0),
            grad: g,
            eq_residual: DVector::zeros(1),
        };
        let sol = solve_kkt(&sys).unwrap();
        for i in 0..m {
            let expected = if i == 0 { -1.0 } else { 0.0 } + 1.0 / m as f64;
            assert!((sol.step[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn kkt_random_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let m = 8;
            let c = 2;
            let b = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
            let sys = KktSystem {
                hess: &b * b.transpose() + DMatrix::identity(m, m),
                eq_jac: DMatrix::from_fn(c, m, |_, _| rng.gen_range(-1.0..1.0)),
                grad: DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)),
                eq_residual: DVector::from_fn(c, |_, _| rng.gen_range(-1.0..1.0)),
            };
            let sol = solve_kkt(&sys).unwrap();
            assert!(sys.relative_residual(&sol) <= 1e-9);
            let feas = &sys.eq_jac * &sol.step + &sys.eq_residual;
            assert!(feas.amax() <= 1e-9);
        }
    }

    #[test]
    fn kkt_indefinite_hessian_uses_fallback() {
        // H is indefinite but positive definite on the null space of A.
        let sys = KktSystem {
            hess: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            eq_jac: DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
            grad: DVector::from_vec(vec![2.0, 1.0]),
            eq_residual: DVector::zeros(1),
        };
        let sol = solve_kkt(&sys).unwrap();
        assert!(sys.relative_residual(&sol) <= 1e-12);
        assert!((sol.step[0] + 2.0).abs() < 1e-14);
        assert!(sol.step[1].abs() < 1e-14);
    }

    #[test]
    fn kkt_rank_deficient_constraints() {
        let sys = KktSystem {
            hess: DMatrix::identity(3, 3),
            eq_jac: DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 0.0]),
            grad: DVector::from_vec(vec![1.0, 0.0, 0.0]),
            eq_residual: DVector::zeros(2),
        };
        assert!(matches!(
            solve_kkt(&sys),
            Err(LinalgError::SingularSystem(_))
        ));
    }
}
