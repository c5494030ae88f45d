//! Matrix Lie group arithmetic and adjoint calculus.
//!
//! Supported groups: SO(3) as rotation matrices, SU(2) as unit quaternions
//! (real 4-vectors, avoiding complex arithmetic), SL(2,ℝ) as real 2×2
//! matrices of determinant 1, and abelian ℝⁿ.
//!
//! Conventions, used consistently across the crate:
//!
//! * A tangent vector V at g is stored in **right coordinates**: the vector
//!   v ∈ 𝔤 with V = v_r(g), where v_r is the right-invariant field through
//!   v. Left-invariant fields then read v_l(g) = (Ad_g v)_r(g).
//! * `Ad_g` is conjugation by g on the algebra.
//! * The stored structure constants are the **negative of the ambient
//!   matrix commutator** of the model generators. With this choice the
//!   right-invariant frame satisfies `[u_r, v_r] = [u, v]_r` for the honest
//!   vector-field bracket, and left-invariant fields pick up the sign:
//!   `[u_l, v_l] = -[u, v]_l`. The generator models below are picked so
//!   that the familiar bracket tables (e.g. [e1,e2] = e3 on so3) hold.
//! * Directional derivatives are taken along t ↦ exp(tv)·g, under which
//!   d/dt Ad = (-ad_v)·Ad with ad the structure-constant bracket.

use crate::error::{Error, Result};
use crate::lie::{builtin, QuadraticLieAlgebra};
use nalgebra::{DMatrix, DVector, Matrix3};
use rand::Rng;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    So3,
    Su2,
    Sl2r,
    Abelian(usize),
}

/// A matrix group together with its quadratic Lie algebra.
#[derive(Debug, Clone)]
pub struct Group {
    kind: GroupKind,
    algebra: Arc<QuadraticLieAlgebra>,
}

/// A group element. The payload is a rotation matrix (SO(3)), a unit
/// quaternion as (w, x, y, z) (SU(2)), a det-1 real 2×2 matrix (SL(2,ℝ)),
/// or a plain vector (abelian).
#[derive(Debug, Clone)]
pub struct GroupPoint {
    pub group: Group,
    payload: DMatrix<f64>,
}

impl Group {
    pub fn new(kind: GroupKind) -> Self {
        let algebra = match kind {
            GroupKind::So3 => builtin("so3"),
            GroupKind::Su2 => builtin("su2"),
            GroupKind::Sl2r => builtin("sl2r"),
            GroupKind::Abelian(n) => builtin(&format!("abelian({n})")),
        }
        .expect("builtin algebras are valid");
        Self {
            kind,
            algebra: Arc::new(algebra),
        }
    }

    /// Parse a group name as used by the CLI: so3 | su2 | sl2r | abelian |
    /// abelian(n).
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim() {
            "so3" => Ok(Self::new(GroupKind::So3)),
            "su2" => Ok(Self::new(GroupKind::Su2)),
            "sl2r" => Ok(Self::new(GroupKind::Sl2r)),
            "abelian" => Ok(Self::new(GroupKind::Abelian(3))),
            other => {
                if let Some(rest) = other.strip_prefix("abelian(") {
                    if let Some(n) = rest.strip_suffix(')').and_then(|s| s.parse().ok()) {
                        if n > 0 && n <= 16 {
                            return Ok(Self::new(GroupKind::Abelian(n)));
                        }
                    }
                }
                Err(Error::UnknownName(name.into()))
            }
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        self.algebra.name()
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn algebra(&self) -> &QuadraticLieAlgebra {
        &self.algebra
    }

    /// The invariant form matrix B.
    pub fn form(&self) -> &DMatrix<f64> {
        self.algebra.form()
    }

    pub fn form_inv(&self) -> &DMatrix<f64> {
        self.algebra.form_inv()
    }

    /// The identity element.
    pub fn identity(&self) -> GroupPoint {
        let payload = match self.kind {
            GroupKind::So3 => DMatrix::identity(3, 3),
            GroupKind::Su2 => {
                DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0])
            }
            GroupKind::Sl2r => DMatrix::identity(2, 2),
            GroupKind::Abelian(n) => DMatrix::zeros(n, 1),
        };
        GroupPoint {
            group: self.clone(),
            payload,
        }
    }

    /// exp of an algebra vector, in closed form per group.
    pub fn exp(&self, v: &DVector<f64>) -> GroupPoint {
        assert_eq!(v.len(), self.dim(), "algebra coordinate length");
        let payload = match self.kind {
            GroupKind::So3 => {
                // exp(-v̂) by the Rodrigues formula
                let k = neg_hat(v);
                let theta = v.norm();
                let (s, c2) = sinc_pair(theta);
                let m = Matrix3::identity() + k * s + k * k * c2;
                DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
            }
            GroupKind::Su2 => {
                let theta = v.norm();
                let half = 0.5 * theta;
                // exp of the pure quaternion -v/2
                let coeff = -0.5 * sinc(half); // sin(θ/2)/θ with the sign
                DMatrix::from_column_slice(
                    4,
                    1,
                    &[half.cos(), coeff * v[0], coeff * v[1], coeff * v[2]],
                )
            }
            GroupKind::Sl2r => {
                let x = sl2_model(v);
                let delta = -x.determinant();
                let m = if delta > 1e-14 {
                    let s = delta.sqrt();
                    nalgebra::Matrix2::identity() * s.cosh() + x * (s.sinh() / s)
                } else if delta < -1e-14 {
                    let s = (-delta).sqrt();
                    nalgebra::Matrix2::identity() * s.cos() + x * (s.sin() / s)
                } else {
                    // X² = δI ≈ 0
                    nalgebra::Matrix2::identity() * (1.0 + 0.5 * delta) + x
                };
                DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
            }
            GroupKind::Abelian(n) => {
                DMatrix::from_fn(n, 1, |i, _| v[i])
            }
        };
        GroupPoint {
            group: self.clone(),
            payload,
        }
    }

    /// Model matrix of an algebra vector (the generator whose one-parameter
    /// subgroup is `exp`): -v̂ for so3, the pure quaternion -v/2 for su2
    /// (returned as a 4-vector), minus the standard (e,f,h) combination for
    /// sl2r, and v itself for abelian.
    pub fn model(&self, v: &DVector<f64>) -> DMatrix<f64> {
        match self.kind {
            GroupKind::So3 => {
                let k = neg_hat(v);
                DMatrix::from_fn(3, 3, |i, j| k[(i, j)])
            }
            GroupKind::Su2 => {
                DMatrix::from_column_slice(4, 1, &[0.0, -0.5 * v[0], -0.5 * v[1], -0.5 * v[2]])
            }
            GroupKind::Sl2r => {
                let x = sl2_model(v);
                DMatrix::from_fn(2, 2, |i, j| x[(i, j)])
            }
            GroupKind::Abelian(_) => DMatrix::from_fn(v.len(), 1, |i, _| v[i]),
        }
    }

    /// Dimension of the flattened payload (column-major).
    pub fn payload_len(&self) -> usize {
        match self.kind {
            GroupKind::So3 => 9,
            GroupKind::Su2 => 4,
            GroupKind::Sl2r => 4,
            GroupKind::Abelian(n) => n,
        }
    }

    /// Matrix of the linear map payload ↦ d/dt|₀ payload(exp(t e_a) g) on
    /// flattened (column-major) payload coordinates.
    pub fn coord_derivative_matrix(&self, a: usize) -> DMatrix<f64> {
        let d = self.dim();
        let mut e = DVector::zeros(d);
        e[a] = 1.0;
        let len = self.payload_len();
        match self.kind {
            GroupKind::So3 => {
                // W ↦ m(e_a) W, column-major flattening of 3×3
                let m = self.model(&e);
                let mut out = DMatrix::zeros(len, len);
                for col in 0..3 {
                    for i in 0..3 {
                        for k in 0..3 {
                            out[(col * 3 + i, col * 3 + k)] = m[(i, k)];
                        }
                    }
                }
                out
            }
            GroupKind::Sl2r => {
                let m = self.model(&e);
                let mut out = DMatrix::zeros(len, len);
                for col in 0..2 {
                    for i in 0..2 {
                        for k in 0..2 {
                            out[(col * 2 + i, col * 2 + k)] = m[(i, k)];
                        }
                    }
                }
                out
            }
            GroupKind::Su2 => {
                // q ↦ m(e_a) * q (quaternion product); left multiplication
                // by p = (0, p⃗) on (w, x, y, z) coordinates
                let p = self.model(&e);
                quat_left_mul_matrix(p[(0, 0)], p[(1, 0)], p[(2, 0)], p[(3, 0)])
            }
            GroupKind::Abelian(n) => {
                // x ↦ e_a (constant velocity): derivative matrix is zero,
                // the inhomogeneous part is handled by the caller
                DMatrix::zeros(n, n)
            }
        }
    }

    /// Inhomogeneous part of the coordinate derivative (only nonzero on
    /// abelian groups, where d/dt (x + t e_a) = e_a regardless of x).
    pub fn coord_derivative_offset(&self, a: usize) -> DVector<f64> {
        match self.kind {
            GroupKind::Abelian(n) => {
                let mut v = DVector::zeros(n);
                v[a] = 1.0;
                v
            }
            _ => DVector::zeros(self.payload_len()),
        }
    }

    /// Draw a group point as exp(u)·exp(w) with u, w componentwise uniform
    /// in [-1, 1].
    pub fn sample(&self, rng: &mut impl Rng) -> GroupPoint {
        let d = self.dim();
        let u = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
        let w = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
        self.exp(&u).mul(&self.exp(&w)).expect("sampled points compose")
    }
}

impl GroupPoint {
    pub fn payload(&self) -> &DMatrix<f64> {
        &self.payload
    }

    /// Flattened payload (column-major), used by the field calculus.
    pub fn flat_coords(&self) -> DVector<f64> {
        DVector::from_column_slice(self.payload.as_slice())
    }

    pub fn from_payload(group: &Group, payload: DMatrix<f64>) -> Result<Self> {
        let p = GroupPoint {
            group: group.clone(),
            payload,
        };
        let residual = p.constraint_residual();
        if residual > 1e-6 {
            return Err(Error::ConstraintViolation(residual));
        }
        Ok(p.projected())
    }

    /// Residual of the defining group constraint (orthogonality, unit norm,
    /// or determinant 1).
    pub fn constraint_residual(&self) -> f64 {
        match self.group.kind {
            GroupKind::So3 => {
                let g = &self.payload;
                let orth = (g.transpose() * g - DMatrix::identity(3, 3)).amax();
                let det = three_by_three_det(g) - 1.0;
                orth.max(det.abs())
            }
            GroupKind::Su2 => (self.payload.norm() - 1.0).abs(),
            GroupKind::Sl2r => {
                // relative to the matrix scale: the determinant of a large
                // hyperbolic element carries rounding of order ε ‖g‖²
                let g = &self.payload;
                let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
                let scale = g.amax().powi(2).max(1.0);
                (det - 1.0).abs() / scale
            }
            GroupKind::Abelian(_) => 0.0,
        }
    }

    /// Re-project onto the constraint manifold (polar/normalize/scale).
    pub fn projected(&self) -> GroupPoint {
        let payload = match self.group.kind {
            GroupKind::So3 => {
                // Newton iteration for the polar factor; quadratic
                // convergence near the orthogonal group
                let mut x = self.payload.clone();
                for _ in 0..4 {
                    let xi = x
                        .clone()
                        .try_inverse()
                        .expect("near-orthogonal matrix invertible");
                    x = (x + xi.transpose()) * 0.5;
                }
                x
            }
            GroupKind::Su2 => &self.payload / self.payload.norm(),
            GroupKind::Sl2r => {
                let det = self.payload[(0, 0)] * self.payload[(1, 1)]
                    - self.payload[(0, 1)] * self.payload[(1, 0)];
                &self.payload / det.abs().sqrt()
            }
            GroupKind::Abelian(_) => self.payload.clone(),
        };
        GroupPoint {
            group: self.group.clone(),
            payload,
        }
    }

    pub fn mul(&self, other: &GroupPoint) -> Result<GroupPoint> {
        self.check_compatible(other)?;
        self.check_constraint()?;
        other.check_constraint()?;
        let payload = match self.group.kind {
            GroupKind::So3 | GroupKind::Sl2r => &self.payload * &other.payload,
            GroupKind::Su2 => {
                let a = &self.payload;
                let b = &other.payload;
                quat_mul(a, b)
            }
            GroupKind::Abelian(_) => &self.payload + &other.payload,
        };
        Ok(GroupPoint {
            group: self.group.clone(),
            payload,
        }
        .projected())
    }

    pub fn inv(&self) -> GroupPoint {
        let payload = match self.group.kind {
            GroupKind::So3 => self.payload.transpose(),
            GroupKind::Su2 => DMatrix::from_column_slice(
                4,
                1,
                &[
                    self.payload[(0, 0)],
                    -self.payload[(1, 0)],
                    -self.payload[(2, 0)],
                    -self.payload[(3, 0)],
                ],
            ),
            GroupKind::Sl2r => DMatrix::from_row_slice(
                2,
                2,
                &[
                    self.payload[(1, 1)],
                    -self.payload[(0, 1)],
                    -self.payload[(1, 0)],
                    self.payload[(0, 0)],
                ],
            ),
            GroupKind::Abelian(_) => -&self.payload,
        };
        GroupPoint {
            group: self.group.clone(),
            payload,
        }
    }

    /// g h g⁻¹.
    pub fn conj(&self, other: &GroupPoint) -> Result<GroupPoint> {
        self.mul(other)?.mul(&self.inv())
    }

    /// The adjoint matrix Ad_g on algebra coordinates.
    pub fn adjoint(&self) -> DMatrix<f64> {
        match self.group.kind {
            GroupKind::So3 => self.payload.clone(),
            GroupKind::Su2 => {
                let q = &self.payload;
                let r = quat_rotation_matrix(q[(0, 0)], q[(1, 0)], q[(2, 0)], q[(3, 0)]);
                DMatrix::from_fn(3, 3, |i, j| r[(i, j)])
            }
            GroupKind::Sl2r => {
                // express g M_a g⁻¹ in the model basis
                let g = &self.payload;
                let gi = self.inv();
                let mut out = DMatrix::zeros(3, 3);
                for a in 0..3 {
                    let mut e = DVector::zeros(3);
                    e[a] = 1.0;
                    let m = sl2_model(&e);
                    let gm = DMatrix::from_fn(2, 2, |i, j| {
                        (0..2).map(|k| g[(i, k)] * m[(k, j)]).sum::<f64>()
                    });
                    let conj = &gm * &gi.payload;
                    // coords of a traceless [[-z, -x], [-y, z]]
                    out[(0, a)] = -conj[(0, 1)];
                    out[(1, a)] = -conj[(1, 0)];
                    out[(2, a)] = -conj[(0, 0)];
                }
                out
            }
            GroupKind::Abelian(n) => DMatrix::identity(n, n),
        }
    }

    /// Ad_{g⁻¹}.
    pub fn adjoint_inv(&self) -> DMatrix<f64> {
        self.inv().adjoint()
    }

    /// Right coordinates of the left-invariant field through v at this
    /// point: Ad_g v.
    pub fn left_to_right_vector(&self, v: &DVector<f64>) -> DVector<f64> {
        self.adjoint() * v
    }

    /// Left coordinates of a tangent vector given in right coordinates:
    /// Ad_{g⁻¹} v.
    pub fn right_to_left_vector(&self, v: &DVector<f64>) -> DVector<f64> {
        self.adjoint_inv() * v
    }

    /// Right coordinates of a covector given in left coordinates:
    /// ξ_r = Ad_{g⁻¹}ᵀ ξ_l (the inverse-transpose rule).
    pub fn left_to_right_covector(&self, xi: &DVector<f64>) -> DVector<f64> {
        self.adjoint_inv().transpose() * xi
    }

    /// Left coordinates of a covector given in right coordinates.
    pub fn right_to_left_covector(&self, xi: &DVector<f64>) -> DVector<f64> {
        self.adjoint().transpose() * xi
    }

    fn check_compatible(&self, other: &GroupPoint) -> Result<()> {
        if self.group.kind != other.group.kind {
            return Err(Error::Validation("group kinds differ".into()));
        }
        Ok(())
    }

    fn check_constraint(&self) -> Result<()> {
        let residual = self.constraint_residual();
        if residual > 1e-6 {
            return Err(Error::ConstraintViolation(residual));
        }
        Ok(())
    }

    /// Distance on payload coordinates (used by composability checks).
    pub fn payload_distance(&self, other: &GroupPoint) -> f64 {
        (&self.payload - &other.payload).amax()
    }

    /// Serialize the payload for reports.
    pub fn to_json(&self) -> serde_json::Value {
        let coords: Vec<f64> = self.payload.as_slice().to_vec();
        serde_json::json!({
            "group": self.group.name(),
            "coords": coords,
        })
    }
}

/// -v̂, the so3 model generator: (-v̂)x = -(v × x) = x × v.
fn neg_hat(v: &DVector<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0, v[2], -v[1], //
        -v[2], 0.0, v[0], //
        v[1], -v[0], 0.0,
    )
}

/// Model of sl2r coordinates (x, y, z) ↦ -(x e + y f + z h).
fn sl2_model(v: &DVector<f64>) -> nalgebra::Matrix2<f64> {
    nalgebra::Matrix2::new(-v[2], -v[0], -v[1], v[2])
}

fn three_by_three_det(g: &DMatrix<f64>) -> f64 {
    g[(0, 0)] * (g[(1, 1)] * g[(2, 2)] - g[(1, 2)] * g[(2, 1)])
        - g[(0, 1)] * (g[(1, 0)] * g[(2, 2)] - g[(1, 2)] * g[(2, 0)])
        + g[(0, 2)] * (g[(1, 0)] * g[(2, 1)] - g[(1, 1)] * g[(2, 0)])
}

/// Hamilton product of quaternions stored as (w, x, y, z) column vectors.
fn quat_mul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (aw, ax, ay, az) = (a[(0, 0)], a[(1, 0)], a[(2, 0)], a[(3, 0)]);
    let (bw, bx, by, bz) = (b[(0, 0)], b[(1, 0)], b[(2, 0)], b[(3, 0)]);
    DMatrix::from_column_slice(
        4,
        1,
        &[
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
    )
}

/// Matrix of left quaternion multiplication by (w, x, y, z).
fn quat_left_mul_matrix(w: f64, x: f64, y: f64, z: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            w, -x, -y, -z, //
            x, w, -z, y, //
            y, z, w, -x, //
            z, -y, x, w,
        ],
    )
}

/// Rotation matrix of a unit quaternion (w, x, y, z).
fn quat_rotation_matrix(w: f64, x: f64, y: f64, z: f64) -> Matrix3<f64> {
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - z * w),
        2.0 * (x * z + y * w),
        2.0 * (x * y + z * w),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - x * w),
        2.0 * (x * z - y * w),
        2.0 * (y * z + x * w),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// sin(θ)/θ with the series fallback near zero.
fn sinc(theta: f64) -> f64 {
    if theta.abs() < 1e-5 {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    }
}

/// (sin θ / θ, (1 - cos θ)/θ²).
fn sinc_pair(theta: f64) -> (f64, f64) {
    if theta.abs() < 1e-5 {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    }
}

/// Conjugacy-class tangent space at g: the span of (I - Ad_g) in right
/// coordinates, i.e. the values of the conjugation generators v_r - v_l.
pub fn conjugacy_tangent(g: &GroupPoint) -> crate::linalg::Subspace {
    let ad = g.adjoint();
    let d = ad.nrows();
    let rho = DMatrix::identity(d, d) - ad;
    crate::linalg::Subspace::from_columns_scaled(&rho, crate::RANK_TOL, 1.0)
}
