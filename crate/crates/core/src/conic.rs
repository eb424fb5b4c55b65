//! The conic instance behind the relaxation
//!
//! ```text
//! min 1ᵀy  s.t.  tr X = d − k,  0 ≺ X ≺ I,  ‖X pᵢ‖ < yᵢ
//! ```
//!
//! and its barrier function
//!
//! ```text
//! G_t(X, y) = t·1ᵀy − Σᵢ ln(yᵢ² − ‖X pᵢ‖²) − ln|X| − ln|I − X|.
//! ```
//!
//! `X` is parametrised by its scaled vectorisation (see [`crate::linalg::svec`]),
//! so symmetry holds structurally and the trace is the only explicit equality
//! constraint. Free coordinates are ordered `(svec(X), y)`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{self, svec, svec_len, svec_pairs, Cholesky, SymMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConicError {
    #[error("k must be in [1, d-1] (got k = {k}, d = {d})")]
    BadK { k: usize, d: usize },
    #[error("invalid point set: {0}")]
    InvalidPoints(String),
    #[error("point is not strictly feasible: {0}")]
    InfeasiblePoint(Violation),
}

/// Input points, one per row of an `n×d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: DMatrix<f64>,
}

impl PointSet {
    pub fn new(points: DMatrix<f64>) -> Result<Self, ConicError> {
        if points.nrows() < 1 {
            return Err(ConicError::InvalidPoints("need at least one point".into()));
        }
        if points.ncols() < 2 {
            return Err(ConicError::InvalidPoints(format!(
                "need dimension d >= 2 (got {})",
                points.ncols()
            )));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % points.nrows(), pos / points.nrows());
            return Err(ConicError::InvalidPoints(format!(
                "non-finite coordinate at point {row}, column {col}"
            )));
        }
        Ok(PointSet { points })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ConicError> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(ConicError::InvalidPoints(
                "rows have different lengths".into(),
            ));
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn d(&self) -> usize {
        self.points.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn point(&self, i: usize) -> DVector<f64> {
        self.points.row(i).transpose()
    }

    pub fn iter(&self) -> impl Iterator<Item = DVector<f64>> + '_ {
        (0..self.n()).map(|i| self.point(i))
    }

    /// `Σᵢ ‖pᵢ‖₂`, the natural scale of every ℓ₂,₁ cost on this set.
    pub fn norm_sum(&self) -> f64 {
        self.points.row_iter().map(|r| r.norm()).sum()
    }

    /// Applies `p ↦ R·p` to every point.
    pub fn transformed(&self, r: &DMatrix<f64>) -> PointSet {
        PointSet {
            points: &self.points * r.transpose(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierKind {
    /// `X ≻ 0`
    PsdLower,
    /// `I − X ≻ 0`
    PsdUpper,
    /// `‖X pᵢ‖ < yᵢ`
    SocPoint(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barrier {
    pub kind: BarrierKind,
    pub degree: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicInstance {
    points: PointSet,
    k: usize,
    barriers: Vec<Barrier>,
}

/// Builds the conic instance for subspace dimension `k`.
pub fn build_instance(points: PointSet, k: usize) -> Result<ConicInstance, ConicError> {
    let d = points.d();
    if k < 1 || k >= d {
        return Err(ConicError::BadK { k, d });
    }
    let mut barriers = vec![
        Barrier {
            kind: BarrierKind::PsdLower,
            degree: d as f64,
        },
        Barrier {
            kind: BarrierKind::PsdUpper,
            degree: d as f64,
        },
    ];
    barriers.extend((0..points.n()).map(|i| Barrier {
        kind: BarrierKind::SocPoint(i),
        degree: 2.0,
    }));
    Ok(ConicInstance {
        points,
        k,
        barriers,
    })
}

impl ConicInstance {
    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.points.n()
    }

    pub fn d(&self) -> usize {
        self.points.d()
    }

    pub fn barriers(&self) -> &[Barrier] {
        &self.barriers
    }

    /// `deg(F)`, the sum of the barrier degrees; equals `2(n + d)`.
    pub fn degree(&self) -> f64 {
        self.barriers.iter().map(|b| b.degree).sum()
    }

    /// Right-hand side of the trace equality, `d − k`.
    pub fn trace_target(&self) -> f64 {
        (self.d() - self.k) as f64
    }

    /// Number of free `X` coordinates, `d(d+1)/2`.
    pub fn x_dim(&self) -> usize {
        svec_len(self.d())
    }

    /// Total free coordinates, `d(d+1)/2 + n`.
    pub fn dim(&self) -> usize {
        self.x_dim() + self.n()
    }

    /// Row of the trace constraint in `svec(X)` coordinates.
    pub fn trace_row(&self) -> DVector<f64> {
        let pairs = svec_pairs(self.d());
        DVector::from_iterator(
            pairs.len(),
            pairs.iter().map(|&(i, j)| if i == j { 1.0 } else { 0.0 }),
        )
    }
}

/// A point `(X, y)` with its SOC slacks `sᵢ = yᵢ² − ‖X pᵢ‖²` cached.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorPoint {
    x: SymMatrix,
    y: DVector<f64>,
    slacks: DVector<f64>,
    images: DMatrix<f64>,
}

impl InteriorPoint {
    /// Panics on a shape mismatch; feasibility is checked separately by
    /// [`is_strictly_feasible`].
    pub fn new(inst: &ConicInstance, x: SymMatrix, y: DVector<f64>) -> Self {
        assert_eq!(x.dim(), inst.d(), "X has wrong dimension");
        assert_eq!(y.len(), inst.n(), "y has wrong length");
        // row i holds (X pᵢ)ᵀ
        let images = inst.points.matrix() * x.as_matrix();
        let slacks = DVector::from_iterator(
            inst.n(),
            (0..inst.n()).map(|i| {
                let w = images.row(i).norm();
                (y[i] - w) * (y[i] + w)
            }),
        );
        InteriorPoint {
            x,
            y,
            slacks,
            images,
        }
    }

    /// Moves by `step` given in `(svec(X), y)` coordinates.
    pub fn stepped(&self, inst: &ConicInstance, step: &DVector<f64>, alpha: f64) -> Self {
        let xd = inst.x_dim();
        let dx = linalg::smat(&step.rows(0, xd).into_owned(), inst.d());
        let x = self.x.add_scaled(alpha, &dx);
        let y = &self.y + step.rows(xd, inst.n()) * alpha;
        InteriorPoint::new(inst, x, y)
    }

    pub fn x(&self) -> &SymMatrix {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn slacks(&self) -> &DVector<f64> {
        &self.slacks
    }

    /// `1ᵀy`.
    pub fn objective(&self) -> f64 {
        self.y.sum()
    }

    /// `(svec(X), y)`.
    pub fn coordinates(&self) -> DVector<f64> {
        let sx = svec(&self.x);
        let mut out = DVector::zeros(sx.len() + self.y.len());
        out.rows_mut(0, sx.len()).copy_from(&sx);
        out.rows_mut(sx.len(), self.y.len()).copy_from(&self.y);
        out
    }

    fn soc_violation(&self) -> Option<Violation> {
        self.slacks
            .iter()
            .position(|&s| !(s > 0.0))
            .map(|i| Violation::Soc {
                index: i,
                norm: self.images.row(i).norm(),
                y: self.y[i],
            })
    }
}

/// The first violated strict-feasibility condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    NonFinite,
    LowerPsd { min_eigenvalue: f64 },
    UpperPsd { max_eigenvalue: f64 },
    Trace { trace: f64, target: f64 },
    Soc { index: usize, norm: f64, y: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Shape(s) => write!(f, "shape mismatch: {s}"),
            Violation::NonFinite => write!(f, "non-finite entries"),
            Violation::LowerPsd { min_eigenvalue } => {
                write!(
                    f,
                    "X is not positive definite (min eigenvalue {min_eigenvalue:.3e})"
                )
            }
            Violation::UpperPsd { max_eigenvalue } => {
                write!(
                    f,
                    "I - X is not positive definite (max eigenvalue {max_eigenvalue:.3e})"
                )
            }
            Violation::Trace { trace, target } => write!(f, "trace {trace} differs from {target}"),
            Violation::Soc { index, norm, y } => {
                write!(
                    f,
                    "second-order cone {index} violated: |X p| = {norm:.6e} >= y = {y:.6e}"
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityMargins {
    pub eigenvalue: f64,
    pub trace: f64,
}

impl Default for FeasibilityMargins {
    fn default() -> Self {
        FeasibilityMargins {
            eigenvalue: 1e-12,
            trace: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub violation: Option<Violation>,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        self.violation.is_none()
    }
}

/// Strict membership in the barrier domain, including the trace equality.
pub fn is_strictly_feasible(
    inst: &ConicInstance,
    x: &SymMatrix,
    y: &DVector<f64>,
    margins: FeasibilityMargins,
) -> Feasibility {
    let fail = |v| Feasibility { violation: Some(v) };
    if x.dim() != inst.d() || y.len() != inst.n() {
        return fail(Violation::Shape(format!(
            "X is {0}x{0}, y has {1} entries; expected d = {2}, n = {3}",
            x.dim(),
            y.len(),
            inst.d(),
            inst.n()
        )));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return fail(Violation::NonFinite);
    }
    let eig = match linalg::sym_eig(x) {
        Ok(e) => e,
        Err(_) => return fail(Violation::NonFinite),
    };
    let lo = eig.values[0];
    let hi = eig.values[eig.values.len() - 1];
    if !(lo > margins.eigenvalue) {
        return fail(Violation::LowerPsd { min_eigenvalue: lo });
    }
    if !(hi < 1.0 - margins.eigenvalue) {
        return fail(Violation::UpperPsd { max_eigenvalue: hi });
    }
    let trace = x.trace();
    if (trace - inst.trace_target()).abs() > margins.trace {
        return fail(Violation::Trace {
            trace,
            target: inst.trace_target(),
        });
    }
    let z = InteriorPoint::new(inst, x.clone(), y.clone());
    Feasibility {
        violation: z.soc_violation(),
    }
}

fn log_barriers(x: &SymMatrix) -> Result<(Cholesky, Cholesky), ConicError> {
    let lower = Cholesky::new(x.as_matrix()).map_err(|_| {
        ConicError::InfeasiblePoint(Violation::LowerPsd {
            min_eigenvalue: f64::NAN,
        })
    })?;
    let upper = Cholesky::new(x.complement().as_matrix()).map_err(|_| {
        ConicError::InfeasiblePoint(Violation::UpperPsd {
            max_eigenvalue: f64::NAN,
        })
    })?;
    Ok((lower, upper))
}

/// `G_t(X, y)`. Only the cone interiors are required; the trace constraint is
/// not checked here so that the function stays defined on a full neighbourhood
/// of any feasible point.
pub fn g_t_value(inst: &ConicInstance, z: &InteriorPoint, t: f64) -> Result<f64, ConicError> {
    if z.x.dim() != inst.d() || z.y.len() != inst.n() {
        return Err(ConicError::InfeasiblePoint(Violation::Shape(format!(
            "point is ({}, {}) but the instance has d = {}, n = {}",
            z.x.dim(),
            z.y.len(),
            inst.d(),
            inst.n()
        ))));
    }
    if let Some(v) = z.soc_violation() {
        return Err(ConicError::InfeasiblePoint(v));
    }
    let (lower, upper) = log_barriers(&z.x)?;
    let soc: f64 = z.slacks.iter().map(|s| s.ln()).sum();
    Ok(t * z.objective() - soc - lower.log_det() - upper.log_det())
}

/// Gradient and Hessian of `G_t`. The `y` block of the Hessian is diagonal, so
/// it is kept as a vector; the `X–y` coupling is one column per point.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub grad_x: DVector<f64>,
    pub grad_y: DVector<f64>,
    pub hess_xx: DMatrix<f64>,
    pub hess_xy: DMatrix<f64>,
    pub hess_yy: DVector<f64>,
}

impl Derivatives {
    pub fn gradient(&self) -> DVector<f64> {
        let (mx, n) = (self.grad_x.len(), self.grad_y.len());
        let mut g = DVector::zeros(mx + n);
        g.rows_mut(0, mx).copy_from(&self.grad_x);
        g.rows_mut(mx, n).copy_from(&self.grad_y);
        g
    }

    pub fn hessian(&self) -> DMatrix<f64> {
        let (mx, n) = (self.grad_x.len(), self.grad_y.len());
        let mut h = DMatrix::zeros(mx + n, mx + n);
        h.view_mut((0, 0), (mx, mx)).copy_from(&self.hess_xx);
        h.view_mut((0, mx), (mx, n)).copy_from(&self.hess_xy);
        h.view_mut((mx, 0), (n, mx))
            .copy_from(&self.hess_xy.transpose());
        for i in 0..n {
            h[(mx + i, mx + i)] = self.hess_yy[i];
        }
        h
    }

    /// `H·v` without forming the dense Hessian.
    pub fn hess_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        let (mx, n) = (self.grad_x.len(), self.grad_y.len());
        let vx = v.rows(0, mx);
        let vy = v.rows(mx, n);
        let mut out = DVector::zeros(mx + n);
        out.rows_mut(0, mx)
            .copy_from(&(&self.hess_xx * vx + &self.hess_xy * vy));
        let bottom = self.hess_xy.transpose() * vx + self.hess_yy.component_mul(&vy);
        out.rows_mut(mx, n).copy_from(&bottom);
        out
    }
}

fn svec_weight(i: usize, j: usize) -> f64 {
    if i == j {
        0.5
    } else {
        std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Adds `tr(A·Sₐ·A·S_b)` over the svec basis `{Sₐ}`: the Hessian of
/// `−ln|X|` when `A = X⁻¹`.
fn add_logdet_hessian(h: &mut DMatrix<f64>, pairs: &[(usize, usize)], a: &DMatrix<f64>) {
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let cij = svec_weight(i, j);
        for (q, &(k, l)) in pairs.iter().enumerate().take(p + 1) {
            let v = 2.0 * cij * svec_weight(k, l) * (a[(i, k)] * a[(j, l)] + a[(i, l)] * a[(j, k)]);
            h[(p, q)] += v;
            if p != q {
                h[(q, p)] += v;
            }
        }
    }
}

/// Adds the bilinear form `(Sₐ, S_b) ↦ ½ tr((Sₐ S_b + S_b Sₐ)·C)`, i.e. the
/// Hessian of `X ↦ Σᵢ cᵢ ‖X pᵢ‖²` when `C = Σᵢ cᵢ pᵢ pᵢᵀ`.
fn add_quadratic_form(h: &mut DMatrix<f64>, pairs: &[(usize, usize)], c: &DMatrix<f64>) {
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let cij = svec_weight(i, j);
        for (q, &(k, l)) in pairs.iter().enumerate().take(p + 1) {
            let sum = delta(j, k) * c[(i, l)]
                + delta(j, l) * c[(i, k)]
                + delta(i, k) * c[(j, l)]
                + delta(i, l) * c[(j, k)];
            if sum == 0.0 {
                continue;
            }
            let v = cij * svec_weight(k, l) * sum;
            h[(p, q)] += v;
            if p != q {
                h[(q, p)] += v;
            }
        }
    }
}

/// `svec(w pᵀ + p wᵀ)`.
fn sym_outer_svec(pairs: &[(usize, usize)], w: &[f64], p: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        pairs.len(),
        pairs.iter().map(|&(i, j)| {
            if i == j {
                2.0 * w[i] * p[i]
            } else {
                std::f64::consts::SQRT_2 * (w[i] * p[j] + p[i] * w[j])
            }
        }),
    )
}

/// Analytic gradient and Hessian of `G_t` in `(svec(X), y)` coordinates.
pub fn g_t_derivatives(
    inst: &ConicInstance,
    z: &InteriorPoint,
    t: f64,
) -> Result<Derivatives, ConicError> {
    if let Some(v) = z.soc_violation() {
        return Err(ConicError::InfeasiblePoint(v));
    }
    let (lower, upper) = log_barriers(&z.x)?;
    let d = inst.d();
    let n = inst.n();
    let pairs = svec_pairs(d);
    let mx = pairs.len();

    let x_inv = lower.inverse();
    let c_inv = upper.inverse();

    let mut grad_mat = &c_inv - &x_inv;
    let mut hess_xx = DMatrix::zeros(mx, mx);
    add_logdet_hessian(&mut hess_xx, &pairs, &x_inv);
    add_logdet_hessian(&mut hess_xx, &pairs, &c_inv);

    let mut grad_y = DVector::zeros(n);
    let mut hess_yy = DVector::zeros(n);
    let mut hess_xy = DMatrix::zeros(mx, n);
    // rows of `outer` are svec(w pᵀ + p wᵀ) / sᵢ
    let mut outer = DMatrix::zeros(n, mx);
    let mut quad = DMatrix::zeros(d, d);

    let pts = inst.points.matrix();
    for i in 0..n {
        let p: Vec<f64> = pts.row(i).iter().copied().collect();
        let w: Vec<f64> = z.images.row(i).iter().copied().collect();
        let s = z.slacks[i];
        let yi = z.y[i];
        for a in 0..d {
            for b in 0..d {
                grad_mat[(a, b)] += (w[a] * p[b] + p[a] * w[b]) / s;
                quad[(a, b)] += 2.0 / s * p[a] * p[b];
            }
        }
        let ai = sym_outer_svec(&pairs, &w, &p);
        grad_y[i] = t - 2.0 * yi / s;
        let wn2: f64 = w.iter().map(|v| v * v).sum();
        hess_yy[i] = (2.0 * yi * yi + 2.0 * wn2) / (s * s);
        hess_xy.set_column(i, &(&ai * (-2.0 * yi / (s * s))));
        outer.set_row(i, &(ai / s).transpose());
    }
    add_quadratic_form(&mut hess_xx, &pairs, &quad);
    hess_xx += outer.transpose() * &outer;
    // exact symmetry for downstream factorisations
    let hess_xx = (&hess_xx + hess_xx.transpose()) * 0.5;

    let grad_x = svec(&SymMatrix::from_lower(grad_mat));
    Ok(Derivatives {
        grad_x,
        grad_y,
        hess_xx,
        hess_xy,
        hess_yy,
    })
}

/// The Newton system of `G_t` with the `y` block eliminated in closed form.
///
/// Forming `H_xx − H_xy·H_yy⁻¹·H_xyᵀ` numerically cancels terms of order
/// `1/sᵢ²` near the cone boundary. Per point the eliminated block simplifies to
/// `(2/s)·Lᵀ L − a aᵀ / (s·(y² + ‖w‖²))`, where `L` maps `svec V` to `V p` and
/// `a = svec(w pᵀ + p wᵀ)`; the reduced gradient term is `a·(y t − 1)/(y² + ‖w‖²)`.
/// Neither contains an `1/s²` factor.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub hess: DMatrix<f64>,
    pub grad: DVector<f64>,
    /// Row `i` is `aᵢᵀ`.
    coupling: DMatrix<f64>,
    y: DVector<f64>,
    slacks: DVector<f64>,
    /// `y² + ‖w‖²` per point.
    curvature: DVector<f64>,
    t: f64,
}

impl ReducedSystem {
    /// The `y` part of the Newton step for a given `X` part.
    pub fn y_step(&self, dx: &DVector<f64>) -> DVector<f64> {
        let adx = &self.coupling * dx;
        DVector::from_fn(self.y.len(), |i, _| {
            let (y, s) = (self.y[i], self.slacks[i]);
            (2.0 * y * (s + adx[i]) - self.t * s * s) / (2.0 * self.curvature[i])
        })
    }

    /// `Δᵀ∇²G_t Δ` for the full step whose `X` part is `dx` and whose `y` part
    /// is [`Self::y_step`]. Both terms are non-negative by construction.
    pub fn newton_quadratic(&self, dx: &DVector<f64>) -> f64 {
        let eliminated: f64 = (0..self.y.len())
            .map(|i| {
                let r = self.t * self.slacks[i] - 2.0 * self.y[i];
                r * r / (2.0 * self.curvature[i])
            })
            .sum();
        dx.dot(&(&self.hess * dx)) + eliminated
    }
}

pub fn g_t_reduced(
    inst: &ConicInstance,
    z: &InteriorPoint,
    t: f64,
) -> Result<ReducedSystem, ConicError> {
    if let Some(v) = z.soc_violation() {
        return Err(ConicError::InfeasiblePoint(v));
    }
    let (lower, upper) = log_barriers(&z.x)?;
    let d = inst.d();
    let n = inst.n();
    let pairs = svec_pairs(d);
    let mx = pairs.len();

    let x_inv = lower.inverse();
    let c_inv = upper.inverse();
    let mut hess = DMatrix::zeros(mx, mx);
    add_logdet_hessian(&mut hess, &pairs, &x_inv);
    add_logdet_hessian(&mut hess, &pairs, &c_inv);
    let mut grad = svec(&SymMatrix::from_lower(&c_inv - &x_inv));

    let mut coupling = DMatrix::zeros(n, mx);
    let mut scaled = DMatrix::zeros(n, mx);
    let mut curvature = DVector::zeros(n);
    let mut quad = DMatrix::zeros(d, d);
    let pts = inst.points.matrix();
    for i in 0..n {
        let p: Vec<f64> = pts.row(i).iter().copied().collect();
        let w: Vec<f64> = z.images.row(i).iter().copied().collect();
        let s = z.slacks[i];
        let yi = z.y[i];
        let wn2: f64 = w.iter().map(|v| v * v).sum();
        let curv = yi * yi + wn2;
        for a in 0..d {
            for b in 0..d {
                quad[(a, b)] += 2.0 / s * p[a] * p[b];
            }
        }
        let ai = sym_outer_svec(&pairs, &w, &p);
        grad.axpy((yi * t - 1.0) / curv, &ai, 1.0);
        scaled.set_row(i, &(&ai / (s * curv).sqrt()).transpose());
        coupling.set_row(i, &ai.transpose());
        curvature[i] = curv;
    }
    add_quadratic_form(&mut hess, &pairs, &quad);
    hess -= scaled.transpose() * &scaled;
    let hess = (&hess + hess.transpose()) * 0.5;
    Ok(ReducedSystem {
        hess,
        grad,
        coupling,
        y: z.y.clone(),
        slacks: z.slacks.clone(),
        curvature,
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cross() -> PointSet {
        PointSet::from_rows(&[
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ])
        .unwrap()
    }

    #[test]
    fn barrier_count_and_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = build_instance(fixtures::uniform_points(5, 3, &mut rng), 1).unwrap();
        assert_eq!(inst.barriers().len(), 7);
        assert_eq!(inst.degree(), 16.0);
        let single = build_instance(PointSet::from_rows(&[vec![1.0, 0.0]]).unwrap(), 1).unwrap();
        assert_eq!(single.barriers().len(), 3);
        assert_eq!(single.degree(), 6.0);
    }

    #[test]
    fn rejects_bad_k() {
        assert_eq!(
            build_instance(cross(), 0),
            Err(ConicError::BadK { k: 0, d: 2 })
        );
        assert_eq!(
            build_instance(cross(), 2),
            Err(ConicError::BadK { k: 2, d: 2 })
        );
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::new(DMatrix::zeros(0, 3)).is_err());
        assert!(PointSet::new(DMatrix::zeros(3, 1)).is_err());
        assert!(PointSet::from_rows(&[vec![1.0, f64::INFINITY]]).is_err());
        // repeated rows and the origin are allowed
        assert!(PointSet::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).is_ok());
    }

    #[test]
    fn hand_evaluated_zero_point() {
        let inst = build_instance(PointSet::from_rows(&[vec![0.0, 0.0]]).unwrap(), 1).unwrap();
        let z = InteriorPoint::new(
            &inst,
            SymMatrix::scaled_identity(2, 0.5),
            DVector::from_element(1, 1.0),
        );
        for t in [0.5, 1.0, 3.0] {
            let v = g_t_value(&inst, &z, t).unwrap();
            assert!((v - (t + 4.0 * 2f64.ln())).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_with_zero_point_is_diagonal() {
        // a single zero point contributes nothing to the X gradient
        let (d, k) = (4, 1);
        let inst = build_instance(PointSet::new(DMatrix::zeros(1, d)).unwrap(), k).unwrap();
        let a = (d - k) as f64 / d as f64;
        let z = InteriorPoint::new(
            &inst,
            SymMatrix::scaled_identity(d, a),
            DVector::from_element(1, 1.0),
        );
        let der = g_t_derivatives(&inst, &z, 1.0).unwrap();
        let expected = -(d as f64) / (d - k) as f64 + d as f64 / k as f64;
        let gm = linalg::smat(&der.grad_x, d);
        for i in 0..d {
            for j in 0..d {
                let e = if i == j { expected } else { 0.0 };
                assert!((gm[(i, j)] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hessian_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let (inst, z) = fixtures::random_instance_and_point(8, 4, 2, &mut rng);
            let h = g_t_derivatives(&inst, &z, 2.0).unwrap().hessian();
            assert_eq!(h, h.transpose());
        }
    }

    #[test]
    fn value_matches_naive_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let (inst, z) = fixtures::random_instance_and_point(7, 3, 1, &mut rng);
            let fast = g_t_value(&inst, &z, 1.0).unwrap();
            let naive = fixtures::naive_g_t(inst.points(), z.x(), z.y(), 1.0);
            assert!(
                (fast - naive).abs() <= 1e-12 * fast.abs().max(1.0),
                "{fast} vs {naive}"
            );
        }
    }

    #[test]
    fn value_is_linear_in_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (inst, z) = fixtures::random_instance_and_point(6, 3, 2, &mut rng);
        let a = g_t_value(&inst, &z, 1.5).unwrap();
        let b = g_t_value(&inst, &z, 4.0).unwrap();
        let expected = 2.5 * z.objective();
        assert!(((b - a) - expected).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn value_rejects_infeasible() {
        let inst = build_instance(cross(), 1).unwrap();
        let z = InteriorPoint::new(&inst, SymMatrix::identity(2), DVector::from_element(4, 5.0));
        assert!(matches!(
            g_t_value(&inst, &z, 1.0),
            Err(ConicError::InfeasiblePoint(_))
        ));
        let z = InteriorPoint::new(
            &inst,
            SymMatrix::scaled_identity(2, 0.5),
            DVector::from_element(4, 0.5),
        );
        assert!(matches!(
            g_t_derivatives(&inst, &z, 1.0),
            Err(ConicError::InfeasiblePoint(Violation::Soc { index: 0, .. }))
        ));
    }

    #[test]
    fn feasibility_boundaries() {
        let inst = build_instance(cross(), 1).unwrap();
        let m = FeasibilityMargins::default();
        let half = SymMatrix::scaled_identity(2, 0.5);
        let ok = is_strictly_feasible(&inst, &half, &DVector::from_element(4, 0.6), m);
        assert!(ok.is_feasible());

        let f = is_strictly_feasible(
            &inst,
            &SymMatrix::identity(2),
            &DVector::from_element(4, 5.0),
            m,
        );
        assert!(matches!(f.violation, Some(Violation::UpperPsd { .. })));

        // y exactly on the cone boundary
        let f = is_strictly_feasible(&inst, &half, &DVector::from_element(4, 0.5), m);
        assert!(matches!(f.violation, Some(Violation::Soc { index: 0, .. })));

        let f = is_strictly_feasible(
            &inst,
            &SymMatrix::from_diagonal(&[0.3, 0.3]),
            &DVector::from_element(4, 1.0),
            m,
        );
        assert!(matches!(f.violation, Some(Violation::Trace { .. })));

        let f = is_strictly_feasible(
            &inst,
            &SymMatrix::from_diagonal(&[1.2, -0.2]),
            &DVector::from_element(4, 5.0),
            m,
        );
        assert!(matches!(f.violation, Some(Violation::LowerPsd { .. })));

        let f = is_strictly_feasible(&inst, &half, &DVector::from_element(3, 1.0), m);
        assert!(matches!(f.violation, Some(Violation::Shape(_))));
    }

    #[test]
    fn hess_vec_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (inst, z) = fixtures::random_instance_and_point(5, 3, 1, &mut rng);
        let der = g_t_derivatives(&inst, &z, 1.0).unwrap();
        let v = fixtures::random_direction(inst.dim(), &mut rng);
        let diff = der.hess_vec(&v) - der.hessian() * &v;
        assert!(diff.amax() < 1e-10);
    }

    #[test]
    fn reduced_system_matches_schur_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let (inst, z) = fixtures::random_instance_and_point(6, 3, 2, &mut rng);
            let t = 0.7;
            let der = g_t_derivatives(&inst, &z, t).unwrap();
            let red = g_t_reduced(&inst, &z, t).unwrap();
            let mut scaled = der.hess_xy.clone();
            for (i, mut col) in scaled.column_iter_mut().enumerate() {
                col /= der.hess_yy[i];
            }
            let schur = &der.hess_xx - &scaled * der.hess_xy.transpose();
            let grad = &der.grad_x - &scaled * &der.grad_y;
            assert!((&schur - &red.hess).amax() <= 1e-9 * schur.amax());
            assert!((&grad - &red.grad).amax() <= 1e-9 * grad.amax().max(1.0));

            let dx = fixtures::random_direction(inst.x_dim(), &mut rng);
            let dy = -(&der.grad_y + der.hess_xy.transpose() * &dx).component_div(&der.hess_yy);
            assert!((&dy - red.y_step(&dx)).amax() <= 1e-9 * dy.amax().max(1.0));

            let mut full = DVector::zeros(inst.dim());
            full.rows_mut(0, inst.x_dim()).copy_from(&dx);
            full.rows_mut(inst.x_dim(), inst.n()).copy_from(&dy);
            let quad = full.dot(&der.hess_vec(&full));
            assert!((quad - red.newton_quadratic(&dx)).abs() <= 1e-9 * quad.abs().max(1.0));
        }
    }
}
