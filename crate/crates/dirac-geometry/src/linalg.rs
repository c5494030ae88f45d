//! Subspaces of ℝⁿ with tolerance-based rank decisions.
//!
//! A [`Subspace`] is stored as an orthonormal column basis under the
//! auxiliary Euclidean inner product, independently of whatever indefinite
//! geometric forms live on the ambient space. Rank decisions drop singular
//! values below `tol · σ_max`; comparisons are basis-independent through
//! principal angles.

use crate::error::{Error, Result};
use crate::{ANGLE_TOL, RANK_TOL};
use nalgebra::{DMatrix, DVector};

/// A linear subspace of ℝⁿ, represented by an orthonormal column basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    basis: DMatrix<f64>,
    tol: f64,
}

impl Subspace {
    /// Span of the columns of `mat`, orthonormalized with the default rank
    /// tolerance.
    pub fn from_columns(mat: &DMatrix<f64>) -> Self {
        Self::from_columns_tol(mat, RANK_TOL)
    }

    /// Span of the columns of `mat`; singular values below `tol * σ_max`
    /// are discarded.
    pub fn from_columns_tol(mat: &DMatrix<f64>, tol: f64) -> Self {
        Self::from_columns_scaled(mat, tol, 0.0)
    }

    /// Like [`Subspace::from_columns_tol`], but with an absolute scale:
    /// pivot magnitudes below `tol * max(r_max, scale)` are discarded. Pass
    /// the known magnitude of genuine data (e.g. 1 for blocks taken out of
    /// an orthonormal basis) so that an all-noise matrix collapses to the
    /// zero subspace instead of spanning its rounding errors.
    pub fn from_columns_scaled(mat: &DMatrix<f64>, tol: f64, scale: f64) -> Self {
        let ambient_dim = mat.nrows();
        let basis = orthonormal_range(mat, tol, scale);
        Self {
            ambient_dim,
            basis,
            tol,
        }
    }

    /// The zero subspace of ℝⁿ.
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
            tol: RANK_TOL,
        }
    }

    /// All of ℝⁿ.
    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::identity(ambient_dim, ambient_dim),
            tol: RANK_TOL,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Orthonormal basis matrix (ambient_dim × dim).
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Sum of two subspaces.
    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.check_ambient(other)?;
        let mut cols = DMatrix::zeros(self.ambient_dim, self.dim() + other.dim());
        cols.columns_mut(0, self.dim()).copy_from(&self.basis);
        cols.columns_mut(self.dim(), other.dim()).copy_from(&other.basis);
        Ok(Subspace::from_columns_tol(&cols, self.tol))
    }

    /// Intersection of two subspaces.
    ///
    /// Computed from the null space of `[A | -B]`: a kernel vector (x, y)
    /// gives the common element `A x = B y`.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        self.check_ambient(other)?;
        let (ka, kb) = (self.dim(), other.dim());
        if ka == 0 || kb == 0 {
            return Ok(Subspace::zero(self.ambient_dim));
        }
        let mut stacked = DMatrix::zeros(self.ambient_dim, ka + kb);
        stacked.columns_mut(0, ka).copy_from(&self.basis);
        stacked.columns_mut(ka, kb).copy_from(&(-&other.basis));
        let null = kernel_of(&stacked, self.tol);
        if null.ncols() == 0 {
            return Ok(Subspace::zero(self.ambient_dim));
        }
        let reps = &self.basis * null.rows(0, ka);
        Ok(Subspace::from_columns_tol(&reps, self.tol))
    }

    /// Annihilator inside the dual space: all ξ with ξ(v) = 0 for v in the
    /// subspace. In coordinates this is the Euclidean orthogonal complement.
    pub fn annihilator(&self) -> Subspace {
        let null = kernel_of(&self.basis.transpose(), self.tol);
        Subspace {
            ambient_dim: self.ambient_dim,
            basis: null,
            tol: self.tol,
        }
    }

    /// Orthogonal complement with respect to a nondegenerate symmetric form:
    /// all v with uᵀ Q v = 0 for u in the subspace.
    pub fn orthogonal_complement(&self, form: &DMatrix<f64>) -> Result<Subspace> {
        if form.nrows() != self.ambient_dim || form.ncols() != self.ambient_dim {
            return Err(Error::DimensionMismatch(form.nrows(), self.ambient_dim));
        }
        let sym_residual = (form - form.transpose()).amax();
        if sym_residual > 1e-10 * (1.0 + form.amax()) {
            return Err(Error::Validation(format!(
                "form is not symmetric (residual {sym_residual:.3e})"
            )));
        }
        let det = form.clone().lu().determinant().abs();
        if det < 1e-12 {
            return Err(Error::DegenerateForm(det));
        }
        Ok(Subspace {
            ambient_dim: self.ambient_dim,
            basis: kernel_of(&(self.basis.transpose() * form), self.tol),
            tol: self.tol,
        })
    }

    /// Basis of the quotient `self / sub`, represented by vectors of `self`
    /// orthogonal (Euclidean) to `sub`. Requires `sub ⊆ self` at tolerance.
    pub fn quotient_basis(&self, sub: &Subspace) -> Result<Subspace> {
        self.check_ambient(sub)?;
        if !self.contains(sub) {
            return Err(Error::Validation(
                "quotient requested by a non-subspace".into(),
            ));
        }
        // Project the basis of self away from sub and re-orthonormalize.
        let proj = &sub.basis * sub.basis.transpose();
        let residual = &self.basis - &proj * &self.basis;
        Ok(Subspace::from_columns_tol(&residual, self.tol))
    }

    /// Whether `other ⊆ self` at the angle tolerance.
    pub fn contains(&self, other: &Subspace) -> bool {
        if other.dim() == 0 {
            return true;
        }
        if other.dim() > self.dim() {
            return false;
        }
        // max distance of other's basis vectors to self
        let proj = &self.basis * (self.basis.transpose() * &other.basis);
        (&proj - &other.basis).amax() < ANGLE_TOL
    }

    /// Principal angles (radians, ascending) between two subspaces of equal
    /// dimension; `None` when dimensions differ.
    ///
    /// Small angles are computed through the sine (singular values of the
    /// orthogonal residual): the cosine alone cannot resolve angles below
    /// the square root of machine epsilon.
    pub fn principal_angles(&self, other: &Subspace) -> Option<Vec<f64>> {
        if self.ambient_dim != other.ambient_dim || self.dim() != other.dim() {
            return None;
        }
        let k = self.dim();
        if k == 0 {
            return Some(vec![]);
        }
        let product = self.basis.transpose() * &other.basis;
        let mut cosines: Vec<f64> = product
            .svd(false, false)
            .singular_values
            .iter()
            .map(|&s| s.clamp(0.0, 1.0))
            .collect();
        cosines.sort_by(|a, b| b.partial_cmp(a).unwrap()); // descending
        let residual = &other.basis - &self.basis * (self.basis.transpose() * &other.basis);
        let mut sines: Vec<f64> = residual
            .svd(false, false)
            .singular_values
            .iter()
            .map(|&s| s.clamp(0.0, 1.0))
            .collect();
        sines.sort_by(|a, b| a.partial_cmp(b).unwrap()); // ascending
        sines.resize(k, 1.0);
        let angles = (0..k)
            .map(|i| {
                if cosines[i] * cosines[i] > 0.5 {
                    sines[i].asin()
                } else {
                    cosines[i].acos()
                }
            })
            .collect();
        Some(angles)
    }

    /// Basis-independent equality: equal dimensions and all principal
    /// angles ≤ the angle tolerance.
    pub fn approx_eq(&self, other: &Subspace) -> bool {
        match self.principal_angles(other) {
            Some(angles) => angles.iter().all(|&a| a <= ANGLE_TOL),
            None => false,
        }
    }

    /// Largest principal angle, or π/2 on dimension mismatch.
    pub fn distance(&self, other: &Subspace) -> f64 {
        match self.principal_angles(other) {
            Some(angles) => angles.last().copied().unwrap_or(0.0),
            None => std::f64::consts::FRAC_PI_2,
        }
    }

    /// Euclidean projection of a vector onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Norm of the component of `v` orthogonal to the subspace.
    pub fn off_component(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm()
    }

    fn check_ambient(&self, other: &Subspace) -> Result<()> {
        if self.ambient_dim != other.ambient_dim {
            return Err(Error::DimensionMismatch(self.ambient_dim, other.ambient_dim));
        }
        Ok(())
    }
}

/// Orthonormal basis of the column space via column-pivoted Householder QR.
///
/// QR is preferred over the SVD here: nalgebra's SVD factors lose accuracy
/// on rank-deficient matrices, while Householder reflections are backward
/// stable. Pivot magnitudes below `tol * max(|r₁₁|, scale)` are treated as
/// zero.
pub fn orthonormal_range(mat: &DMatrix<f64>, tol: f64, scale: f64) -> DMatrix<f64> {
    let ambient = mat.nrows();
    if mat.ncols() == 0 || mat.amax() == 0.0 {
        return DMatrix::zeros(ambient, 0);
    }
    let qr = mat.clone().col_piv_qr();
    let r = qr.r();
    let diag_len = r.nrows().min(r.ncols());
    let rmax = (0..diag_len).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let cutoff = tol * rmax.max(scale);
    let rank = (0..diag_len)
        .take_while(|&i| r[(i, i)].abs() > cutoff)
        .count();
    qr.q().columns(0, rank).into_owned()
}

/// Orthonormal basis of the kernel of `mat` (as column vectors), with
/// pivots below `tol * r_max` treated as zero.
pub fn kernel_of(mat: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    kernel_scaled(mat, tol, 0.0)
}

/// Kernel with an absolute scale for the rank cutoff, as in
/// [`Subspace::from_columns_scaled`].
pub fn kernel_scaled(mat: &DMatrix<f64>, tol: f64, scale: f64) -> DMatrix<f64> {
    let n = mat.ncols();
    if mat.nrows() == 0 || mat.amax() == 0.0 {
        return DMatrix::identity(n, n);
    }
    // Row space of mat, then its orthogonal complement via the projector.
    let row_space = orthonormal_range(&mat.transpose(), tol, scale);
    let rank = row_space.ncols();
    if rank == n {
        return DMatrix::zeros(n, 0);
    }
    let projector = DMatrix::identity(n, n) - &row_space * row_space.transpose();
    let kernel = orthonormal_range(&projector, tol, 1.0);
    debug_assert_eq!(kernel.ncols(), n - rank);
    kernel
}

/// Numerical rank with relative tolerance `tol`.
pub fn rank_of(mat: &DMatrix<f64>, tol: f64) -> usize {
    if mat.nrows() == 0 || mat.ncols() == 0 || mat.amax() == 0.0 {
        return 0;
    }
    orthonormal_range(mat, tol, 0.0).ncols()
}

/// Basic least-squares solution of `A x = b` via column-pivoted QR,
/// together with the residual norm and the dimension of the solution slack
/// (kernel of A). Free variables beyond the numerical rank are set to zero.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> (DVector<f64>, f64, usize) {
    let (m, k) = (a.nrows(), a.ncols());
    if k == 0 {
        return (DVector::zeros(0), b.norm(), 0);
    }
    if a.amax() == 0.0 {
        return (DVector::zeros(k), b.norm(), k);
    }
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let diag_len = m.min(k);
    let rmax = (0..diag_len).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let rank = (0..diag_len)
        .take_while(|&i| r[(i, i)].abs() > tol * rmax)
        .count();
    // R y = Qᵀ b on the leading rank × rank block, free variables zero.
    let qtb = qr.q().transpose() * b;
    let r11 = r.view((0, 0), (rank, rank)).into_owned();
    let c = qtb.rows(0, rank).into_owned();
    let y_lead = r11
        .solve_upper_triangular(&c)
        .unwrap_or_else(|| DVector::zeros(rank));
    let mut y = DVector::zeros(k);
    y.rows_mut(0, rank).copy_from(&y_lead);
    // x = P y (undo the column permutation)
    qr.p().inv_permute_rows(&mut y);
    let residual = (a * &y - b).norm();
    (y, residual, k - rank)
}
