//! The end-to-end approximation. After the relaxation is solved, each
//! eigendirection of `X*` is scored by the ℓ₁ mass of the projected points.
//! The `d − k` cheapest directions are discarded and the output is the span
//! of the other `k` eigenvectors.
//!
//! With `X* = Vᵀ·D·V` (eigenvectors as rows of `V`) every step of the bound
//!
//! ```text
//! Σ‖diag(ζ)Vpᵢ‖₂ ≤ Σ‖diag(ζ)Vpᵢ‖₁ ≤ Σ‖DVpᵢ‖₁ ≤ √d·Σ‖DVpᵢ‖₂ = √d·Σ‖X*pᵢ‖₂ ≤ √d·1ᵀy
//! ```
//!
//! is recomputed numerically for each run, see [`CertificateChain`].

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::conic::{build_instance, ConicError, PointSet};
use crate::linalg::{self, LinalgError, SymMatrix};
use crate::pathsolver::{solve_relaxation, RelaxationSolution, SolverConfig, SolverError};

/// Eigenvalues of `X*` within this distance of `[0, 1]` are clipped into it.
pub const SPECTRUM_CLIP: f64 = 1e-6;
/// Maximum Gram deviation accepted for a basis.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KsmError {
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("relaxed solution has eigenvalue {value:.6e} outside [0, 1]; the relaxation did not converge")]
    BadSpectrum { value: f64 },
    #[error("basis is not orthonormal (Gram deviation {deviation:.3e})")]
    NonOrthonormalBasis { deviation: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("lifted subspace is parallel to the lifting slice; no affine flat exists")]
    FlatAtInfinity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingResult {
    /// Row `j` is the eigenvector of `X*` for `d_vals[j]`.
    pub v: DMatrix<f64>,
    /// Eigenvalues of `X*`, ascending, clipped into `[0, 1]`.
    pub d_vals: DVector<f64>,
    /// `q_j = Σᵢ |(V pᵢ)_j|`.
    pub q: DVector<f64>,
    /// Indices of the `d − k` smallest `q` entries, ascending.
    pub ind: Vec<usize>,
    pub zeta: Vec<bool>,
    /// `Vᵀ·diag(ζ)·V`.
    pub e: SymMatrix,
}

impl RoundingResult {
    pub fn zeta_f64(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.zeta.len(),
            self.zeta.iter().map(|&z| if z { 1.0 } else { 0.0 }),
        )
    }

    /// `d×k` basis built from the eigenvector rows with `ζⱼ = 0`, in index order.
    pub fn kept_basis(&self) -> DMatrix<f64> {
        let kept: Vec<usize> = (0..self.zeta.len()).filter(|&j| !self.zeta[j]).collect();
        let d = self.v.ncols();
        DMatrix::from_fn(d, kept.len(), |r, c| self.v[(kept[c], r)])
    }
}

/// Indicator of the `d − k` smallest entries of `q`, ties broken by lower
/// index. This vertex minimises `λᵀq` over `λ ∈ [0,1]ᵈ` with `Σλ = d − k`.
pub fn lp_round_check(q: &[f64], k: usize) -> Vec<bool> {
    let d = q.len();
    assert!(k >= 1 && k < d, "k must be in [1, d-1]");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| q[a].total_cmp(&q[b]).then(a.cmp(&b)));
    let mut zeta = vec![false; d];
    for &j in &order[..d - k] {
        zeta[j] = true;
    }
    zeta
}

pub fn selector_value(zeta: &[bool], q: &[f64]) -> f64 {
    zeta.iter()
        .zip(q)
        .filter(|(z, _)| **z)
        .map(|(_, v)| v)
        .sum()
}

/// Rounds a relaxed `X*` to a rank-`(d − k)` projection.
pub fn round_solution(
    x_star: &SymMatrix,
    points: &PointSet,
    k: usize,
) -> Result<RoundingResult, KsmError> {
    let d = points.d();
    if x_star.dim() != d {
        return Err(KsmError::DimensionMismatch(format!(
            "X* is {0}x{0} but points have dimension {d}",
            x_star.dim()
        )));
    }
    if k < 1 || k >= d {
        return Err(ConicError::BadK { k, d }.into());
    }
    let eig = linalg::sym_eig(x_star)?;
    let mut d_vals = eig.values.clone();
    for v in d_vals.iter_mut() {
        if *v < -SPECTRUM_CLIP || *v > 1.0 + SPECTRUM_CLIP {
            return Err(KsmError::BadSpectrum { value: *v });
        }
        *v = v.clamp(0.0, 1.0);
    }
    let v = eig.vectors;

    // projected[(i, j)] = (V pᵢ)_j
    let projected = points.matrix() * v.transpose();
    let q = DVector::from_iterator(
        d,
        (0..d).map(|j| projected.column(j).iter().map(|x| x.abs()).sum()),
    );
    let zeta = lp_round_check(q.as_slice(), k);
    let ind: Vec<usize> = (0..d).filter(|&j| zeta[j]).collect();
    let zf: Vec<f64> = zeta.iter().map(|&z| if z { 1.0 } else { 0.0 }).collect();
    let e = SymMatrix::from_eigen_rows(&zf, &v);
    Ok(RoundingResult {
        v,
        d_vals,
        q,
        ind,
        zeta,
        e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CertRatio {
    Ratio(f64),
    /// The relaxed objective is within the solver accuracy of zero, so the
    /// ratio carries no information.
    ExactFit,
}

impl CertRatio {
    pub fn value(self) -> Option<f64> {
        match self {
            CertRatio::Ratio(r) => Some(r),
            CertRatio::ExactFit => None,
        }
    }
}

impl std::fmt::Display for CertRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CertRatio::Ratio(r) => write!(f, "{r}"),
            CertRatio::ExactFit => write!(f, "exact-fit"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub relax_objective: f64,
    pub epsilon: f64,
    pub sqrt_d: f64,
    pub ratio: CertRatio,
}

impl Certificate {
    /// `cost ≤ √d·(relax objective + ε) + slack`.
    pub fn holds(&self, cost: f64, slack: f64) -> bool {
        cost <= self.sqrt_d * (self.relax_objective + self.epsilon) + slack
    }
}

/// A `k`-dimensional linear subspace with its ℓ₂,₁ cost on the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub basis: DMatrix<f64>,
    pub cost: f64,
    pub certificate: Option<Certificate>,
}

impl Subspace {
    /// Validates orthonormality and evaluates the cost on `points`.
    pub fn from_basis(points: &PointSet, basis: DMatrix<f64>) -> Result<Self, KsmError> {
        let cost = subspace_cost_of_basis(points, &basis)?;
        Ok(Subspace {
            basis,
            cost,
            certificate: None,
        })
    }

    pub fn k(&self) -> usize {
        self.basis.ncols()
    }

    /// Columns of the basis, each of length `d`.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        self.basis
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect()
    }
}

fn check_orthonormal(basis: &DMatrix<f64>) -> Result<(), KsmError> {
    let k = basis.ncols();
    let deviation = (basis.transpose() * basis - DMatrix::identity(k, k)).amax();
    if !(deviation <= ORTHONORMAL_TOLERANCE) {
        return Err(KsmError::NonOrthonormalBasis { deviation });
    }
    Ok(())
}

fn residuals(points: &PointSet, basis: &DMatrix<f64>) -> Result<DMatrix<f64>, KsmError> {
    if basis.nrows() != points.d() {
        return Err(KsmError::DimensionMismatch(format!(
            "basis has {} rows but points have dimension {}",
            basis.nrows(),
            points.d()
        )));
    }
    check_orthonormal(basis)?;
    let a = points.matrix();
    Ok(a - (a * basis) * basis.transpose())
}

fn subspace_cost_of_basis(points: &PointSet, basis: &DMatrix<f64>) -> Result<f64, KsmError> {
    Ok(residuals(points, basis)?.row_iter().map(|r| r.norm()).sum())
}

/// `Σᵢ ‖pᵢ − B·Bᵀ·pᵢ‖₂`.
pub fn subspace_cost(points: &PointSet, s: &Subspace) -> Result<f64, KsmError> {
    subspace_cost_of_basis(points, &s.basis)
}

/// `Σᵢ ‖pᵢ − B·Bᵀ·pᵢ‖₂²`, the objective minimised by the spectral baseline.
pub fn squared_cost(points: &PointSet, s: &Subspace) -> Result<f64, KsmError> {
    Ok(residuals(points, &s.basis)?.norm_squared())
}

/// The numeric value of every link in the approximation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateChain {
    /// `Σ‖E pᵢ‖₂`
    pub projection_l2: f64,
    /// `Σ‖diag(ζ) V pᵢ‖₂`
    pub selected_l2: f64,
    /// `Σ‖diag(ζ) V pᵢ‖₁ = ζᵀq`
    pub selected_l1: f64,
    /// `Σ‖D V pᵢ‖₁ = diag(D)ᵀq`
    pub spectral_l1: f64,
    /// `√d·Σ‖D V pᵢ‖₂`
    pub spectral_l2_scaled: f64,
    /// `√d·Σ‖X* pᵢ‖₂`
    pub relaxed_scaled: f64,
    /// `√d·1ᵀy`
    pub objective_scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("certificate link '{link}' failed: {lhs:.12e} > {rhs:.12e}")]
pub struct ChainViolation {
    pub link: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl CertificateChain {
    pub fn compute(
        rounding: &RoundingResult,
        points: &PointSet,
        x_star: &SymMatrix,
        objective: f64,
    ) -> Self {
        let d = points.d();
        let sqrt_d = (d as f64).sqrt();
        let z = rounding.zeta_f64();
        let vp = points.matrix() * rounding.v.transpose();
        let ep = points.matrix() * rounding.e.as_matrix();
        let xp = points.matrix() * x_star.as_matrix();
        let mut chain = CertificateChain {
            projection_l2: 0.0,
            selected_l2: 0.0,
            selected_l1: 0.0,
            spectral_l1: 0.0,
            spectral_l2_scaled: 0.0,
            relaxed_scaled: 0.0,
            objective_scaled: sqrt_d * objective,
        };
        for i in 0..points.n() {
            let row = vp.row(i);
            let sel = row.transpose().component_mul(&z);
            let weighted = row.transpose().component_mul(&rounding.d_vals);
            chain.projection_l2 += ep.row(i).norm();
            chain.selected_l2 += sel.norm();
            chain.selected_l1 += sel.iter().map(|v| v.abs()).sum::<f64>();
            chain.spectral_l1 += weighted.iter().map(|v| v.abs()).sum::<f64>();
            chain.spectral_l2_scaled += weighted.norm();
            chain.relaxed_scaled += xp.row(i).norm();
        }
        chain.spectral_l2_scaled *= sqrt_d;
        chain.relaxed_scaled *= sqrt_d;
        chain
    }

    /// Checks every link with additive `slack`.
    pub fn verify(&self, slack: f64) -> Result<(), ChainViolation> {
        let le = |link, lhs: f64, rhs: f64| {
            if lhs <= rhs + slack {
                Ok(())
            } else {
                Err(ChainViolation { link, lhs, rhs })
            }
        };
        let eq = |link, lhs: f64, rhs: f64| {
            le(link, lhs, rhs)?;
            le(link, rhs, lhs)
        };
        eq(
            "projection equals selected",
            self.projection_l2,
            self.selected_l2,
        )?;
        le("l2 <= l1", self.selected_l2, self.selected_l1)?;
        le("lp rounding", self.selected_l1, self.spectral_l1)?;
        le(
            "l1 <= sqrt(d) l2",
            self.spectral_l1,
            self.spectral_l2_scaled,
        )?;
        eq(
            "orthogonal invariance",
            self.spectral_l2_scaled,
            self.relaxed_scaled,
        )?;
        le(
            "relaxed <= objective",
            self.relaxed_scaled,
            self.objective_scaled,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Timings {
    pub solver_us: u64,
    pub rounding_us: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsmApprox {
    pub subspace: Subspace,
    pub relaxation: RelaxationSolution,
    pub rounding: RoundingResult,
    pub chain: CertificateChain,
    pub timings: Timings,
}

/// Solves the relaxation and rounds it to a `k`-subspace whose cost is within
/// `√d` of optimal.
pub fn ksm_approx(
    points: &PointSet,
    k: usize,
    config: &SolverConfig,
) -> Result<KsmApprox, KsmError> {
    let inst = build_instance(points.clone(), k)?;
    let start = Instant::now();
    let relaxation = solve_relaxation(&inst, config)?;
    let solver_us = start.elapsed().as_micros() as u64;

    let start = Instant::now();
    let rounding = round_solution(&relaxation.x, points, k)?;
    let basis = rounding.kept_basis();
    let mut subspace = Subspace::from_basis(points, basis)?;
    let chain = CertificateChain::compute(&rounding, points, &relaxation.x, relaxation.objective);
    let rounding_us = start.elapsed().as_micros() as u64;

    let sqrt_d = (points.d() as f64).sqrt();
    let ratio = if relaxation.objective <= relaxation.epsilon {
        CertRatio::ExactFit
    } else {
        CertRatio::Ratio(subspace.cost / relaxation.objective)
    };
    subspace.certificate = Some(Certificate {
        relax_objective: relaxation.objective,
        epsilon: relaxation.epsilon,
        sqrt_d,
        ratio,
    });
    Ok(KsmApprox {
        subspace,
        relaxation,
        rounding,
        chain,
        timings: Timings {
            solver_us,
            rounding_us,
        },
    })
}

/// Appends the homogeneous coordinate `scale` to every point.
pub fn lift_affine(points: &PointSet, scale: f64) -> PointSet {
    let (n, d) = (points.n(), points.d());
    let a = points.matrix();
    PointSet::new(DMatrix::from_fn(n, d + 1, |i, j| {
        if j < d {
            a[(i, j)]
        } else {
            scale
        }
    }))
    .expect("lifting keeps coordinates finite")
}

/// An affine `k`-flat `{offset + B·c}` in the original coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Flat {
    pub offset: DVector<f64>,
    pub basis: DMatrix<f64>,
    pub cost: f64,
}

/// Recovers the flat `{x : (x, scale) ∈ S}` from a lifted subspace `S` of
/// dimension `k + 1` and evaluates its ℓ₂,₁ cost on the original points.
pub fn recover_flat(lifted: &Subspace, scale: f64, points: &PointSet) -> Result<Flat, KsmError> {
    let b = &lifted.basis;
    let d = b.nrows() - 1;
    if d != points.d() {
        return Err(KsmError::DimensionMismatch(format!(
            "lifted basis has {} rows, expected {}",
            b.nrows(),
            points.d() + 1
        )));
    }
    let kk = b.ncols();
    let last = b.row(d).transpose();
    let norm_sq = last.norm_squared();
    if norm_sq < 1e-20 {
        return Err(KsmError::FlatAtInfinity);
    }
    // minimum-norm point of S on the slice at height `scale`
    let c = &last * (scale / norm_sq);
    let offset = (b * c).rows(0, d).into_owned();

    // directions of S with a zero homogeneous coordinate
    let proj =
        SymMatrix::from_lower(DMatrix::identity(kk, kk) - &last * last.transpose() / norm_sq);
    let eig = linalg::sym_eig(&proj)?;
    let k = kk - 1;
    let n_dirs = DMatrix::from_fn(kk, k, |r, col| eig.vectors[(kk - k + col, r)]);
    let dirs = (b * n_dirs).rows(0, d).into_owned();
    check_orthonormal(&dirs)?;

    let a = points.matrix();
    let centred = DMatrix::from_fn(points.n(), d, |i, j| a[(i, j)] - offset[j]);
    let resid = &centred - (&centred * &dirs) * dirs.transpose();
    let cost = resid.row_iter().map(|r| r.norm()).sum();
    Ok(Flat {
        offset,
        basis: dirs,
        cost,
    })
}
