//! Pointwise Dirac structures: Lagrangian subspaces of V ⊕ V*.
//!
//! Coordinates on ℝ²ⁿ are fixed once and for all: the first n entries are
//! the V-block, the last n the V*-block, and the split pairing has matrix
//! `[[0, I], [I, 0]]`.
//!
//! Bivectors and 2-forms are passed around as their component matrices:
//! for a bivector, `pi[a][b] = π(eₐ*, e_b*)`, so that `π♯(α) = πᵀ α`;
//! for a 2-form, `omega[a][b] = ω(eₐ, e_b)` and `ω♯(X) = ωᵀ X`.

use crate::error::{Error, Result};
use crate::linalg::{kernel_of, kernel_scaled, rank_of, Subspace};
use crate::{ANGLE_TOL, RANK_TOL};
use nalgebra::{DMatrix, DVector};

/// The split symmetric pairing ⟨(X,α),(Y,β)⟩₊ = β(X) + α(Y) on ℝ²ⁿ.
#[derive(Debug, Clone)]
pub struct SplitPairing {
    n: usize,
    matrix: DMatrix<f64>,
}

impl SplitPairing {
    pub fn new(n: usize) -> Self {
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            m[(i, n + i)] = 1.0;
            m[(n + i, i)] = 1.0;
        }
        Self { n, matrix: m }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eval(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.matrix * b)[(0, 0)]
    }
}

/// Result of a Lagrangian check: the largest pairing over basis pairs and
/// the dimension deficit against n.
#[derive(Debug, Clone)]
pub struct LagrangianReport {
    pub pairing_residual: f64,
    pub dim: usize,
    pub expected_dim: usize,
    pub pass: bool,
}

/// Check maximal isotropy of a subspace of ℝ²ⁿ with respect to the split
/// pairing. Reports only; never errors.
pub fn check_lagrangian(space: &Subspace, pairing: &SplitPairing, tol: f64) -> LagrangianReport {
    let q = space.basis();
    let gram = q.transpose() * pairing.matrix() * q;
    let pairing_residual = gram.amax();
    let dim = space.dim();
    LagrangianReport {
        pairing_residual,
        dim,
        expected_dim: pairing.n(),
        pass: pairing_residual <= tol && dim == pairing.n(),
    }
}

/// A Lagrangian subspace of V ⊕ V*: the pointwise value of a Dirac
/// structure on an n-dimensional space.
#[derive(Debug, Clone)]
pub struct LinearDirac {
    n: usize,
    space: Subspace,
}

impl LinearDirac {
    /// Wrap a subspace after verifying the Lagrangian conditions.
    pub fn new(n: usize, space: Subspace) -> Result<Self> {
        if space.ambient_dim() != 2 * n {
            return Err(Error::DimensionMismatch(space.ambient_dim(), 2 * n));
        }
        let report = check_lagrangian(&space, &SplitPairing::new(n), 1e-9);
        if !report.pass {
            return Err(Error::Validation(format!(
                "not Lagrangian: pairing residual {:.3e}, dim {} (expected {})",
                report.pairing_residual, report.dim, report.expected_dim
            )));
        }
        Ok(Self { n, space })
    }

    /// Span of the columns of a 2n × k matrix, then validated.
    pub fn from_span(n: usize, generators: &DMatrix<f64>) -> Result<Self> {
        Self::new(n, Subspace::from_columns(generators))
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        self.space.basis()
    }

    /// Graph of a bivector given by its component matrix
    /// (`pi[a][b] = π(eₐ*, e_b*)`): the subspace {(π♯α, α)}.
    pub fn from_bivector(pi: &DMatrix<f64>) -> Result<Self> {
        let n = square_skew(pi)?;
        let sharp = pi.transpose();
        let mut gen = DMatrix::zeros(2 * n, n);
        gen.view_mut((0, 0), (n, n)).copy_from(&sharp);
        gen.view_mut((n, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        Self::from_span(n, &gen)
    }

    /// Graph of a 2-form given by its component matrix
    /// (`omega[a][b] = ω(eₐ, e_b)`): the subspace {(X, ω♯X)}.
    pub fn from_two_form(omega: &DMatrix<f64>) -> Result<Self> {
        let n = square_skew(omega)?;
        let sharp = omega.transpose();
        let mut gen = DMatrix::zeros(2 * n, n);
        gen.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        gen.view_mut((n, 0), (n, n)).copy_from(&sharp);
        Self::from_span(n, &gen)
    }

    /// The structure with range zero: 0 ⊕ V*.
    pub fn zero_bivector(n: usize) -> Self {
        Self::from_bivector(&DMatrix::zeros(n, n)).expect("0 ⊕ V* is Lagrangian")
    }

    /// V-block of the basis (n × dim).
    pub fn top_block(&self) -> DMatrix<f64> {
        self.basis().rows(0, self.n).into_owned()
    }

    /// V*-block of the basis (n × dim).
    pub fn bottom_block(&self) -> DMatrix<f64> {
        self.basis().rows(self.n, self.n).into_owned()
    }

    /// kernel(L) = L ∩ V (as a subspace of V) and range(L) = pr₁(L).
    ///
    /// The basis blocks come out of an orthonormal basis, so rank cutoffs
    /// use absolute scale 1.
    pub fn kernel_range(&self) -> (Subspace, Subspace) {
        let range = Subspace::from_columns_scaled(&self.top_block(), RANK_TOL, 1.0);
        // kernel: elements of L with vanishing V*-component
        let null = kernel_scaled(&self.bottom_block(), RANK_TOL, 1.0);
        let kernel =
            Subspace::from_columns_scaled(&(self.top_block() * null), RANK_TOL, 1.0);
        (kernel, range)
    }

    /// Membership test for a point of V ⊕ V*.
    pub fn off_component(&self, v: &DVector<f64>) -> f64 {
        self.space.off_component(v)
    }

    /// Lift a range vector x to a pair (x, α) ∈ L; returns α.
    /// The lift is unique up to ker(pr₂|..) ambiguities which do not affect
    /// pairings against range vectors.
    pub fn lift_covector(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let top = self.top_block();
        let (z, residual, _) = crate::linalg::lstsq(&top, x, RANK_TOL);
        if residual > 1e-8 * (1.0 + x.norm()) {
            return Err(Error::NoSolution(residual));
        }
        Ok(self.bottom_block() * z)
    }

    /// Gauge transformation τ_B: {(X, α + B♯X) | (X, α) ∈ L} for a skew
    /// 2-form component matrix B.
    pub fn gauge(&self, b: &DMatrix<f64>) -> Result<Self> {
        let n = square_skew(b)?;
        if n != self.n {
            return Err(Error::DimensionMismatch(n, self.n));
        }
        let sharp = b.transpose();
        let mut map = DMatrix::identity(2 * n, 2 * n);
        map.view_mut((n, 0), (n, n)).copy_from(&sharp);
        Self::from_span(n, &(map * self.basis()))
    }
}

/// Leafwise 2-form of a Dirac structure: θ(X₁, X₂) = α(X₂) for any α with
/// (X₁, α) ∈ L, defined on range(L).
#[derive(Debug, Clone)]
pub struct LeafForm {
    /// Basis of range(L) on which the matrix is expressed.
    pub range: Subspace,
    /// Component matrix θ(bᵢ, b_j) in the range basis.
    pub matrix: DMatrix<f64>,
    /// Residual of well-definedness (variation of θ over lift choices).
    pub welldef_residual: f64,
}

impl LeafForm {
    /// θ on two explicit range vectors.
    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let xi = self.range.basis().transpose() * x;
        let eta = self.range.basis().transpose() * y;
        (xi.transpose() * &self.matrix * eta)[(0, 0)]
    }

    /// Component matrix in standard coordinates; meaningful when the range
    /// is the whole space.
    pub fn matrix_in_standard_basis(&self) -> DMatrix<f64> {
        let q = self.range.basis();
        q * &self.matrix * q.transpose()
    }

    /// Null space of θ inside range(L).
    pub fn null_space(&self) -> Subspace {
        let null = kernel_scaled(&self.matrix, RANK_TOL, 1.0);
        Subspace::from_columns_scaled(&(self.range.basis() * null), RANK_TOL, 1.0)
    }
}

/// Compute the leaf 2-form of `l`.
pub fn leaf_two_form(l: &LinearDirac) -> LeafForm {
    let (_, range) = l.kernel_range();
    let r = range.dim();
    let top = l.top_block();
    let mut theta = DMatrix::zeros(r, r);
    let mut lifts = Vec::with_capacity(r);
    for i in 0..r {
        let x = range.basis().column(i).into_owned();
        let (z, _, _) = crate::linalg::lstsq(&top, &x, RANK_TOL);
        lifts.push(l.bottom_block() * z);
    }
    for i in 0..r {
        for j in 0..r {
            theta[(i, j)] = lifts[i].dot(&range.basis().column(j).into_owned());
        }
    }
    // Ambiguity of the lift: covectors (0-part, β) ∈ L paired with range.
    let ambiguity = kernel_scaled(&top, RANK_TOL, 1.0);
    let mut welldef = (&theta + theta.transpose()).amax();
    if ambiguity.ncols() > 0 {
        let betas = l.bottom_block() * ambiguity;
        welldef = welldef.max((betas.transpose() * range.basis()).amax());
    }
    LeafForm {
        range,
        matrix: theta,
        welldef_residual: welldef,
    }
}

/// Forward image of a Dirac structure under a linear map A: ℝᵐ → ℝⁿ:
/// {(A Y, α) : (Y, A*α) ∈ L_N}. Returns the subspace together with a flag
/// telling whether the image is again a linear Dirac structure.
pub struct Pushforward {
    pub space: Subspace,
    pub dirac: Option<LinearDirac>,
}

pub fn pushforward(l_n: &LinearDirac, a: &DMatrix<f64>) -> Result<Pushforward> {
    let m = l_n.base_dim();
    if a.ncols() != m {
        return Err(Error::DimensionMismatch(a.ncols(), m));
    }
    let n = a.nrows();
    let q = l_n.basis();
    let k = q.ncols();
    // Unknowns (Y, α, z) with [Y; Aᵀα] = Q z.
    let rows = 2 * m;
    let cols = m + n + k;
    let mut sys = DMatrix::zeros(rows, cols);
    sys.view_mut((0, 0), (m, m)).copy_from(&DMatrix::identity(m, m));
    sys.view_mut((m, m), (m, n)).copy_from(&a.transpose());
    sys.view_mut((0, m + n), (rows, k)).copy_from(&(-q));
    let null = kernel_of(&sys, RANK_TOL);
    // image under (Y, α) ↦ (A Y, α)
    let mut proj = DMatrix::zeros(2 * n, cols);
    proj.view_mut((0, 0), (n, m)).copy_from(a);
    proj.view_mut((n, m), (n, n)).copy_from(&DMatrix::identity(n, n));
    let image = Subspace::from_columns_scaled(&(proj * null), RANK_TOL, 1.0);
    let dirac = if image.dim() == n {
        LinearDirac::new(n, image.clone()).ok()
    } else {
        None
    };
    Ok(Pushforward { space: image, dirac })
}

/// Backward image of a Dirac structure under A: ℝᵐ → ℝⁿ:
/// {(Y, A*α) : (A Y, α) ∈ L_M}. Always a Lagrangian subspace of dimension m.
pub fn pullback(l_m: &LinearDirac, a: &DMatrix<f64>) -> Result<LinearDirac> {
    let n = l_m.base_dim();
    if a.nrows() != n {
        return Err(Error::DimensionMismatch(a.nrows(), n));
    }
    let m = a.ncols();
    let q = l_m.basis();
    let k = q.ncols();
    // Unknowns (Y, α, z) with [A Y; α] = Q z.
    let rows = 2 * n;
    let cols = m + n + k;
    let mut sys = DMatrix::zeros(rows, cols);
    sys.view_mut((0, 0), (n, m)).copy_from(a);
    sys.view_mut((n, m), (n, n)).copy_from(&DMatrix::identity(n, n));
    sys.view_mut((0, m + n), (rows, k)).copy_from(&(-q));
    let null = kernel_of(&sys, RANK_TOL);
    let mut proj = DMatrix::zeros(2 * m, cols);
    proj.view_mut((0, 0), (m, m)).copy_from(&DMatrix::identity(m, m));
    proj.view_mut((m, m), (m, n)).copy_from(&a.transpose());
    LinearDirac::new(m, Subspace::from_columns_scaled(&(proj * null), RANK_TOL, 1.0))
}

/// Realization-style compatibility of (L_N, dJ) with L_M.
#[derive(Debug, Clone)]
pub struct RealizationCheck {
    pub forward: bool,
    pub forward_distance: f64,
    pub nondegenerate: bool,
}

/// `forward` iff pushforward(L_N, dJ) equals L_M at principal-angle
/// tolerance; `nondegenerate` iff ker(dJ) ∩ ker(L_N) = {0}.
pub fn realization_check(
    l_n: &LinearDirac,
    dj: &DMatrix<f64>,
    l_m: &LinearDirac,
) -> Result<RealizationCheck> {
    let push = pushforward(l_n, dj)?;
    let forward_distance = push.space.distance(l_m.space());
    let forward = push.space.dim() == l_m.space().dim() && forward_distance <= ANGLE_TOL;
    let (ker_l, _) = l_n.kernel_range();
    let ker_dj = Subspace::from_columns(&kernel_of(dj, RANK_TOL));
    let nondegenerate = ker_dj.intersect(&ker_l)?.dim() == 0;
    Ok(RealizationCheck {
        forward,
        forward_distance,
        nondegenerate,
    })
}

/// Linear Dirac reduction: pull back to a coisotropic-style subspace T_C,
/// verify the declared orbit directions against the kernel of the pulled
/// back structure, and push forward along the quotient projection.
pub struct Reduced {
    /// The reduced structure on T_C / orbit, in the coordinates of the
    /// chosen complement basis inside T_C.
    pub reduced: LinearDirac,
    /// Basis of T_C used for intermediate coordinates.
    pub c_basis: DMatrix<f64>,
    /// Quotient projection from T_C coordinates onto the complement.
    pub projection: DMatrix<f64>,
    /// The pulled-back structure on T_C.
    pub on_c: LinearDirac,
}

pub fn linear_reduce(
    l_n: &LinearDirac,
    t_c: &Subspace,
    orbit_dirs: &Subspace,
) -> Result<Reduced> {
    let m = l_n.base_dim();
    if t_c.ambient_dim() != m {
        return Err(Error::DimensionMismatch(t_c.ambient_dim(), m));
    }
    if !t_c.contains(orbit_dirs) {
        return Err(Error::Validation("orbit directions not inside T_C".into()));
    }
    let inc = t_c.basis().clone();
    let on_c = pullback(l_n, &inc)?;
    // The declared orbit directions must be exactly the kernel of ι*L.
    let (ker_c, _) = on_c.kernel_range();
    let orbit_in_c = Subspace::from_columns(&(inc.transpose() * orbit_dirs.basis()));
    if !ker_c.approx_eq(&orbit_in_c) {
        return Err(Error::OrbitMismatch);
    }
    // Quotient projection: orthonormal complement of the orbit inside T_C.
    let c = t_c.dim();
    let w = kernel_of(&orbit_in_c.basis().transpose(), RANK_TOL);
    let projection = w.transpose(); // (c - o) × c
    let push = pushforward(&on_c, &projection)?;
    let reduced = push
        .dirac
        .ok_or_else(|| Error::Validation("reduced image is not Dirac".into()))?;
    debug_assert_eq!(projection.ncols(), c);
    Ok(Reduced {
        reduced,
        c_basis: inc,
        projection,
        on_c,
    })
}

fn square_skew(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
    }
    let residual = (m + m.transpose()).amax();
    if residual > 1e-9 * (1.0 + m.amax()) {
        return Err(Error::NotSkew(residual));
    }
    Ok(m.nrows())
}

/// Rank of a matrix at the default tolerance (re-exported convenience).
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    rank_of(m, RANK_TOL)
}
