//! Pointwise conversion between Dirac realizations of the Cartan-Dirac
//! structure and quasi-Poisson data with a group-valued moment map.
//!
//! A realization point carries the tangent data of a map J: N → G at one
//! point: the base value g = J(y), the differential dJ (d × n, right
//! coordinates on the target), and either the quasi-Poisson payload
//! (bivector π and action ρ_M) or the Dirac payload (a Lagrangian L).
//!
//! The two directions of the conversion are
//!
//! * direct: L = Im(r, s) with r(α,v) = π♯α + ρ_M v and
//!   s(α,v) = C*α + J*σ(v), where C = 1 − ¼ρ_M ρ∨ dJ;
//! * inverse: ρ_M(v) is the unique V with dJ V = ρ(v), (V, J*σv) ∈ L, and
//!   π♯(α) is the unique X with dJ X = −(ρ_M σ∨)*α, (X, C*α) ∈ L.
//!
//! Uniqueness is a consequence of the realization nondegeneracy
//! ker(dJ) ∩ ker(L) = 0, so least-squares residuals and rank slack double
//! as correctness monitors.

use crate::cartan::{cartan_dirac, structure_maps, StructureMaps};
use crate::dirac::{pushforward, realization_check, LinearDirac};
use crate::error::{Error, Result};
use crate::group::{Group, GroupPoint};
use crate::linalg::{kernel_scaled, lstsq, rank_of, Subspace};
use crate::{ANGLE_TOL, RANK_TOL};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Pointwise data of a quasi-Poisson realization: J(y) = g, dJ, the
/// bivector component matrix π (with π♯ = πᵀ), and the action ρ_M.
#[derive(Debug, Clone)]
pub struct RealizationPoint {
    pub g: GroupPoint,
    pub n_dim: usize,
    pub dj: DMatrix<f64>,
    pub pi: DMatrix<f64>,
    pub rho_m: DMatrix<f64>,
}

/// Pointwise data on the 2-form side.
#[derive(Debug, Clone)]
pub struct QuasiHamiltonianPoint {
    pub g: GroupPoint,
    pub n_dim: usize,
    pub dj: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub rho_m: DMatrix<f64>,
}

/// Residuals of the defining conditions of a quasi-Poisson realization
/// point.
#[derive(Debug, Clone, Serialize)]
pub struct MomentResiduals {
    /// ‖π♯ J* − ρ_M σ∨‖
    pub moment_bivector: f64,
    /// ‖dJ ρ_M − ρ‖
    pub equivariance: f64,
    /// ‖ω♯ ρ_M − J*σ‖ on 2-form inputs
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_two_form: Option<f64>,
    /// principal-angle distance of ker(ω) from ρ_M(ker(Ad+1)) on 2-form
    /// inputs
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_condition: Option<f64>,
}

impl RealizationPoint {
    /// The double: N = G, J = id, with the canonical bivector and the
    /// conjugation action.
    pub fn double(g: &GroupPoint) -> Self {
        let d = g.group.dim();
        let m = structure_maps(g);
        RealizationPoint {
            g: g.clone(),
            n_dim: d,
            dj: DMatrix::identity(d, d),
            pi: crate::cartan::quasi_poisson_bivector(g),
            rho_m: m.rho.clone(),
        }
    }

    pub fn sharp(&self) -> DMatrix<f64> {
        self.pi.transpose()
    }

    pub fn maps(&self) -> StructureMaps {
        structure_maps(&self.g)
    }

    /// The operator C = 1 − ¼ ρ_M ρ∨ dJ.
    pub fn operator_c(&self) -> DMatrix<f64> {
        let m = self.maps();
        DMatrix::identity(self.n_dim, self.n_dim) - &self.rho_m * &m.rho_vee * &self.dj * 0.25
    }

    pub fn moment_residuals(&self) -> MomentResiduals {
        let m = self.maps();
        MomentResiduals {
            moment_bivector: (self.sharp() * self.dj.transpose() - &self.rho_m * &m.sigma_vee)
                .norm(),
            equivariance: (&self.dj * &self.rho_m - &m.rho).norm(),
            moment_two_form: None,
            kernel_condition: None,
        }
    }

    fn check_invariants(&self) -> Result<()> {
        let skew = (&self.pi + self.pi.transpose()).amax();
        if skew > 1e-9 * (1.0 + self.pi.amax()) {
            return Err(Error::NotSkew(skew));
        }
        let r = self.moment_residuals();
        if r.moment_bivector > 1e-9 || r.equivariance > 1e-9 {
            return Err(Error::Validation(format!(
                "realization invariants violated: moment {:.3e}, equivariance {:.3e}",
                r.moment_bivector, r.equivariance
            )));
        }
        Ok(())
    }
}

impl QuasiHamiltonianPoint {
    pub fn sharp(&self) -> DMatrix<f64> {
        self.omega.transpose()
    }

    pub fn moment_residuals(&self) -> MomentResiduals {
        let m = structure_maps(&self.g);
        let moment_two_form = (self.sharp() * &self.rho_m - self.dj.transpose() * &m.sigma).norm();
        let equivariance = (&self.dj * &self.rho_m - &m.rho).norm();
        // kernel condition: ker(ω♯) = ρ_M(ker(Ad_g + 1))
        let a = self.g.adjoint();
        let d = a.nrows();
        let ker_ad = kernel_scaled(&(a + DMatrix::identity(d, d)), RANK_TOL, 1.0);
        let expected = Subspace::from_columns_scaled(&(&self.rho_m * ker_ad), RANK_TOL, 1.0);
        let ker_omega = Subspace::from_columns_scaled(
            &kernel_scaled(&self.sharp(), RANK_TOL, 1.0),
            RANK_TOL,
            1.0,
        );
        let kernel_condition = if ker_omega.dim() == expected.dim() {
            ker_omega.distance(&expected)
        } else {
            std::f64::consts::FRAC_PI_2
        };
        MomentResiduals {
            moment_bivector: 0.0,
            equivariance,
            moment_two_form: Some(moment_two_form),
            kernel_condition: Some(kernel_condition),
        }
    }
}

/// The direct construction: the Dirac structure Im(r, s) induced by a
/// quasi-Poisson realization point.
pub fn direct_construct(p: &RealizationPoint) -> Result<LinearDirac> {
    p.check_invariants()?;
    let m = p.maps();
    let n = p.n_dim;
    let d = p.g.group.dim();
    let c = p.operator_c();
    let sharp = p.sharp();
    let mut gen = DMatrix::zeros(2 * n, n + d);
    gen.view_mut((0, 0), (n, n)).copy_from(&sharp);
    gen.view_mut((0, n), (n, d)).copy_from(&p.rho_m);
    gen.view_mut((n, 0), (n, n)).copy_from(&c.transpose());
    gen.view_mut((n, n), (n, d))
        .copy_from(&(p.dj.transpose() * &m.sigma));
    LinearDirac::from_span(n, &gen)
}

/// Solve for the unique tangent vector with a prescribed projection and a
/// prescribed pairing membership: dJ·V = target and (V, beta) ∈ L.
fn constrained_solve(
    l: &LinearDirac,
    dj: &DMatrix<f64>,
    target: &DVector<f64>,
    beta: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = l.base_dim();
    let d = dj.nrows();
    // complement of L: (V, β) ∈ L ⟺ Nᵀ [V; β] = 0
    let ncomp = kernel_scaled(&l.basis().transpose(), RANK_TOL, 1.0);
    let k = ncomp.ncols();
    let n_top = ncomp.rows(0, n).into_owned();
    let n_bot = ncomp.rows(n, n).into_owned();
    let mut sys = DMatrix::zeros(d + k, n);
    sys.view_mut((0, 0), (d, n)).copy_from(dj);
    sys.view_mut((d, 0), (k, n)).copy_from(&n_top.transpose());
    let mut rhs = DVector::zeros(d + k);
    rhs.rows_mut(0, d).copy_from(target);
    rhs.rows_mut(d, k)
        .copy_from(&(-(n_bot.transpose() * beta)));
    let (x, residual, slack) = lstsq(&sys, &rhs, RANK_TOL);
    let scale = 1.0 + target.norm() + beta.norm();
    if residual > 1e-9 * scale {
        return Err(Error::NoSolution(residual));
    }
    if slack > 0 {
        return Err(Error::NotUnique(slack));
    }
    Ok(x)
}

/// The induced action: the unique V with dJ V = ρ(v) and (V, J*σ(v)) ∈ L.
pub fn inverse_action(
    l: &LinearDirac,
    dj: &DMatrix<f64>,
    g: &GroupPoint,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    let m = structure_maps(g);
    let target = &m.rho * v;
    let beta = dj.transpose() * &m.sigma * v;
    constrained_solve(l, dj, &target, &beta)
}

/// The induced bivector: the unique X with dJ X = −(ρ_M σ∨)* α and
/// (X, C* α) ∈ L. `rho_m` must already have been recovered.
pub fn inverse_bivector(
    l: &LinearDirac,
    dj: &DMatrix<f64>,
    g: &GroupPoint,
    rho_m: &DMatrix<f64>,
    alpha: &DVector<f64>,
) -> Result<DVector<f64>> {
    let m = structure_maps(g);
    let n = l.base_dim();
    let target = -(rho_m * &m.sigma_vee).transpose() * alpha;
    let c = DMatrix::identity(n, n) - rho_m * &m.rho_vee * dj * 0.25;
    let beta = c.transpose() * alpha;
    constrained_solve(l, dj, &target, &beta)
}

/// The full inverse construction: recover (π, ρ_M) from (L, dJ, g), with
/// the skewness and isotropy identities checked.
pub fn recover_quasi_poisson(
    l: &LinearDirac,
    dj: &DMatrix<f64>,
    g: &GroupPoint,
) -> Result<RealizationPoint> {
    let n = l.base_dim();
    let d = g.group.dim();
    let mut rho_m = DMatrix::zeros(n, d);
    for a in 0..d {
        let mut v = DVector::zeros(d);
        v[a] = 1.0;
        rho_m.set_column(a, &inverse_action(l, dj, g, &v)?);
    }
    let mut sharp = DMatrix::zeros(n, n);
    for a in 0..n {
        let mut alpha = DVector::zeros(n);
        alpha[a] = 1.0;
        sharp.set_column(a, &inverse_bivector(l, dj, g, &rho_m, &alpha)?);
    }
    let skew_residual = (&sharp + sharp.transpose()).amax();
    if skew_residual > 1e-10 * (1.0 + sharp.amax()) {
        return Err(Error::NotSkew(skew_residual));
    }
    // isotropy identity: ρ_M*(α) + σ* dJ(X) = 0 for all (X, α) ∈ L
    let m = structure_maps(g);
    let lucky = (rho_m.transpose() * l.bottom_block()
        + m.sigma.transpose() * dj * l.top_block())
    .amax();
    if lucky > 1e-10 {
        return Err(Error::Validation(format!(
            "isotropy identity violated: {lucky:.3e}"
        )));
    }
    Ok(RealizationPoint {
        g: g.clone(),
        n_dim: n,
        dj: dj.clone(),
        pi: sharp.transpose(),
        rho_m,
    })
}

/// The three splitting identities of the exact sequence
/// 0 → T*G → T*M ⊕ 𝔤 → L → 0 given by j(a) = (−J*a, σ∨a),
/// U(α,v) = −¼(ρ∨)*ρ_M*α + σv and i(X,α) = (α, ¼ρ∨ dJ X).
#[derive(Debug, Clone, Serialize)]
pub struct ExactSequenceReport {
    pub u_j: f64,
    pub rs_i: f64,
    pub splitting: f64,
    pub rank_ok: bool,
}

pub fn exact_sequence(p: &RealizationPoint) -> Result<ExactSequenceReport> {
    let l = direct_construct(p)?;
    let m = p.maps();
    let n = p.n_dim;
    let d = p.g.group.dim();
    let c = p.operator_c();

    // j: T*G → A
    let mut j = DMatrix::zeros(n + d, d);
    j.view_mut((0, 0), (n, d)).copy_from(&(-p.dj.transpose()));
    j.view_mut((n, 0), (d, d)).copy_from(&m.sigma_vee);
    // U: A → T*G
    let mut u = DMatrix::zeros(d, n + d);
    u.view_mut((0, 0), (d, n))
        .copy_from(&(-(m.rho_vee.transpose() * p.rho_m.transpose()) * 0.25));
    u.view_mut((0, n), (d, d)).copy_from(&m.sigma);
    // (r, s): A → T ⊕ T*
    let mut rs = DMatrix::zeros(2 * n, n + d);
    rs.view_mut((0, 0), (n, n)).copy_from(&p.sharp());
    rs.view_mut((0, n), (n, d)).copy_from(&p.rho_m);
    rs.view_mut((n, 0), (n, n)).copy_from(&c.transpose());
    rs.view_mut((n, n), (n, d))
        .copy_from(&(p.dj.transpose() * &m.sigma));
    // i: L → A on ambient coordinates
    let mut i_mat = DMatrix::zeros(n + d, 2 * n);
    i_mat
        .view_mut((0, n), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    i_mat
        .view_mut((n, 0), (d, n))
        .copy_from(&(&m.rho_vee * &p.dj * 0.25));

    let u_j = (&u * &j - DMatrix::identity(d, d)).norm();
    let q = l.basis();
    let rs_i = (&rs * &i_mat * q - q).norm();
    let splitting = (&j * &u + &i_mat * &rs - DMatrix::identity(n + d, n + d)).norm();
    let rank_ok = l.space().dim() == n;
    Ok(ExactSequenceReport {
        u_j,
        rs_i,
        splitting,
        rank_ok,
    })
}

/// Roundtrip discrepancies of the two constructions.
#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    /// inverse(direct(p)) against p (matrix norms on π and ρ_M).
    pub quasi_side: f64,
    /// direct(inverse(L)) against L (largest principal angle).
    pub dirac_side: f64,
}

pub fn roundtrip(p: &RealizationPoint) -> Result<RoundtripReport> {
    let l = direct_construct(p)?;
    let back = recover_quasi_poisson(&l, &p.dj, &p.g)?;
    let quasi_side = (&back.pi - &p.pi)
        .norm()
        .max((&back.rho_m - &p.rho_m).norm());
    let l2 = direct_construct(&back)?;
    let dirac_side = l2.space().distance(l.space());
    Ok(RoundtripReport {
        quasi_side,
        dirac_side,
    })
}

/// Compatibility of a linear map with two realization points over the same
/// group element, checked through both characterizations: the matrix-level
/// conditions (bivector pushforward, action intertwining, moment
/// compatibility) and the Dirac-level pushforward of the induced
/// structures.
#[derive(Debug, Clone, Serialize)]
pub struct MapCheck {
    pub bivector_push: f64,
    pub action_intertwine: f64,
    pub moment_compat: f64,
    pub dirac_push: f64,
    pub route_matrix_pass: bool,
    pub route_dirac_pass: bool,
    pub agree: bool,
}

pub fn quasi_map_check(
    p1: &RealizationPoint,
    p2: &RealizationPoint,
    df: &DMatrix<f64>,
    tol: f64,
) -> Result<MapCheck> {
    if p1.g.payload_distance(&p2.g) > 1e-9 {
        return Err(Error::Validation(
            "map check requires points over the same group element".into(),
        ));
    }
    let bivector_push = (df * p1.sharp() * df.transpose() - p2.sharp()).norm();
    let action_intertwine = (df * &p1.rho_m - &p2.rho_m).norm();
    let moment_compat = (&p2.dj * df - &p1.dj).norm();
    let l1 = direct_construct(p1)?;
    let l2 = direct_construct(p2)?;
    let push = pushforward(&l1, df)?;
    let dirac_push = if push.space.dim() == l2.space().dim() {
        push.space.distance(l2.space())
    } else {
        std::f64::consts::FRAC_PI_2
    };
    let route_matrix_pass =
        bivector_push <= tol && action_intertwine <= tol && moment_compat <= tol;
    let route_dirac_pass = dirac_push <= ANGLE_TOL.max(tol) && moment_compat <= tol;
    Ok(MapCheck {
        bivector_push,
        action_intertwine,
        moment_compat,
        dirac_push,
        route_matrix_pass,
        route_dirac_pass,
        agree: route_matrix_pass == route_dirac_pass,
    })
}

/// Synthetic quasi-Poisson realization points on N = G × ℝᵏ: dJ is the
/// projection, the action is ρ stacked over a random block, and the
/// bivector is forced on the image of dJ* by the moment condition and
/// extended skew-symmetrically by a random block.
pub fn synth_realization(seed: u64, group: &Group, extra_dims: usize) -> RealizationPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = group.dim();
    let n = d + extra_dims;
    for _attempt in 0..32 {
        let g = group.sample(&mut rng);
        let m = structure_maps(&g);
        let mut dj = DMatrix::zeros(d, n);
        dj.view_mut((0, 0), (d, d))
            .copy_from(&DMatrix::identity(d, d));
        let mut rho_m = DMatrix::zeros(n, d);
        rho_m.view_mut((0, 0), (d, d)).copy_from(&m.rho);
        let lower = DMatrix::from_fn(extra_dims, d, |_, _| rng.gen_range(-1.0..1.0));
        rho_m.view_mut((d, 0), (extra_dims, d)).copy_from(&lower);
        // moment condition pins the first d columns of π♯
        let k = &rho_m * &m.sigma_vee; // n × d
        let mut sharp = DMatrix::zeros(n, n);
        sharp.view_mut((0, 0), (n, d)).copy_from(&k);
        sharp
            .view_mut((0, d), (d, extra_dims))
            .copy_from(&(-k.rows(d, extra_dims).transpose()));
        let r = DMatrix::from_fn(extra_dims, extra_dims, |_, _| rng.gen_range(-1.0..1.0));
        sharp
            .view_mut((d, d), (extra_dims, extra_dims))
            .copy_from(&(&r - r.transpose()));
        let p = RealizationPoint {
            g: g.clone(),
            n_dim: n,
            dj,
            pi: sharp.transpose(),
            rho_m,
        };
        // self-check: the point must be a nondegenerate realization
        if let Ok(l) = direct_construct(&p) {
            if let Ok(rep) = realization_check(&l, &p.dj, &cartan_dirac(&g)) {
                if rep.forward && rep.nondegenerate {
                    return p;
                }
            }
        }
    }
    panic!("synthetic generator failed to produce a valid point in 32 attempts");
}

// ---------------------------------------------------------------------
// JSON ingestion
// ---------------------------------------------------------------------

/// JSON document for realization points. Either the quasi-Poisson payload
/// (`pi`, `rho_M`), the Dirac payload (`L_basis`, a 2n × k column basis),
/// or a 2-form payload (`omega`, `rho_M`) must be present.
#[derive(Serialize, Deserialize)]
pub struct RealizationDoc {
    pub group: String,
    /// Group element payload, as the rows of its matrix (column vectors
    /// for quaternion/abelian payloads).
    pub g: Vec<Vec<f64>>,
    pub n_dim: usize,
    #[serde(rename = "dJ")]
    pub dj: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<Vec<f64>>>,
    #[serde(rename = "rho_M", skip_serializing_if = "Option::is_none")]
    pub rho_m: Option<Vec<Vec<f64>>>,
    #[serde(rename = "L_basis", skip_serializing_if = "Option::is_none")]
    pub l_basis: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<Vec<f64>>>,
}

/// A parsed realization input.
pub enum RealizationInput {
    QuasiPoisson(RealizationPoint),
    Dirac {
        g: GroupPoint,
        dj: DMatrix<f64>,
        l: LinearDirac,
    },
    QuasiHamiltonian(QuasiHamiltonianPoint),
}

fn matrix_from_rows(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::Parse(format!("{name}: empty matrix")));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(Error::Parse(format!("{name}: empty row")));
    }
    let mut out = DMatrix::zeros(rows.len(), ncols);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::Parse(format!("{name}: ragged rows")));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Parse(format!("{name}: non-finite entry")));
            }
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

pub fn load_realization(text: &str) -> Result<RealizationInput> {
    let doc: RealizationDoc = serde_json::from_str(text)?;
    let group = Group::from_name(&doc.group)?;
    if doc.n_dim == 0 || doc.n_dim > 64 {
        return Err(Error::Parse(format!("n_dim {} out of range", doc.n_dim)));
    }
    let payload = matrix_from_rows(&doc.g, "g")?;
    let expected_shape = match group.kind() {
        crate::group::GroupKind::So3 => (3, 3),
        crate::group::GroupKind::Su2 => (4, 1),
        crate::group::GroupKind::Sl2r => (2, 2),
        crate::group::GroupKind::Abelian(n) => (n, 1),
    };
    if (payload.nrows(), payload.ncols()) != expected_shape {
        return Err(Error::Parse(format!(
            "g: expected {}x{} payload",
            expected_shape.0, expected_shape.1
        )));
    }
    let g = GroupPoint::from_payload(&group, payload)?;
    let dj = matrix_from_rows(&doc.dj, "dJ")?;
    let d = group.dim();
    let n = doc.n_dim;
    if (dj.nrows(), dj.ncols()) != (d, n) {
        return Err(Error::Parse(format!("dJ: expected {d}x{n}")));
    }
    if let (Some(pi), Some(rho_m)) = (&doc.pi, &doc.rho_m) {
        let pi = matrix_from_rows(pi, "pi")?;
        let rho_m = matrix_from_rows(rho_m, "rho_M")?;
        if (pi.nrows(), pi.ncols()) != (n, n) {
            return Err(Error::Parse(format!("pi: expected {n}x{n}")));
        }
        if (rho_m.nrows(), rho_m.ncols()) != (n, d) {
            return Err(Error::Parse(format!("rho_M: expected {n}x{d}")));
        }
        let skew = (&pi + pi.transpose()).amax();
        if skew > 1e-9 * (1.0 + pi.amax()) {
            return Err(Error::NotSkew(skew));
        }
        let p = RealizationPoint {
            g,
            n_dim: n,
            dj,
            pi,
            rho_m,
        };
        p.check_invariants()?;
        return Ok(RealizationInput::QuasiPoisson(p));
    }
    if let (Some(omega), Some(rho_m)) = (&doc.omega, &doc.rho_m) {
        let omega = matrix_from_rows(omega, "omega")?;
        let rho_m = matrix_from_rows(rho_m, "rho_M")?;
        if (omega.nrows(), omega.ncols()) != (n, n) {
            return Err(Error::Parse(format!("omega: expected {n}x{n}")));
        }
        if (rho_m.nrows(), rho_m.ncols()) != (n, d) {
            return Err(Error::Parse(format!("rho_M: expected {n}x{d}")));
        }
        let skew = (&omega + omega.transpose()).amax();
        if skew > 1e-9 * (1.0 + omega.amax()) {
            return Err(Error::NotSkew(skew));
        }
        return Ok(RealizationInput::QuasiHamiltonian(QuasiHamiltonianPoint {
            g,
            n_dim: n,
            dj,
            omega,
            rho_m,
        }));
    }
    if let Some(basis) = &doc.l_basis {
        let basis = matrix_from_rows(basis, "L_basis")?;
        if basis.nrows() != 2 * n {
            return Err(Error::Parse(format!("L_basis: expected {} rows", 2 * n)));
        }
        let l = LinearDirac::from_span(n, &basis)?;
        return Ok(RealizationInput::Dirac { g, dj, l });
    }
    Err(Error::Parse(
        "expected pi+rho_M, omega+rho_M, or L_basis".into(),
    ))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Serialize a quasi-Poisson realization point.
pub fn save_realization(p: &RealizationPoint) -> String {
    let doc = RealizationDoc {
        group: p.g.group.name().to_string(),
        g: rows_of(p.g.payload()),
        n_dim: p.n_dim,
        dj: rows_of(&p.dj),
        pi: Some(rows_of(&p.pi)),
        rho_m: Some(rows_of(&p.rho_m)),
        l_basis: None,
        omega: None,
    };
    crate::report::to_json_17sig(&serde_json::to_value(&doc).expect("serializable"))
}

/// Serialize the Dirac side of a realization point.
pub fn save_dirac_side(p: &RealizationPoint, l: &LinearDirac) -> String {
    let doc = RealizationDoc {
        group: p.g.group.name().to_string(),
        g: rows_of(p.g.payload()),
        n_dim: p.n_dim,
        dj: rows_of(&p.dj),
        pi: None,
        rho_m: None,
        l_basis: Some(rows_of(l.basis())),
        omega: None,
    };
    crate::report::to_json_17sig(&serde_json::to_value(&doc).expect("serializable"))
}

/// The nondegeneracy dichotomy at a point: the three equivalent tests for
/// transitivity.
#[derive(Debug, Clone)]
pub struct Dichotomy {
    pub range_full: bool,
    pub image_sum_full: bool,
    pub graph_of_two_form: bool,
}

pub fn nondegeneracy_dichotomy(p: &RealizationPoint) -> Result<Dichotomy> {
    let l = direct_construct(p)?;
    let (_, range) = l.kernel_range();
    let n = p.n_dim;
    let range_full = range.dim() == n;
    let mut stacked = DMatrix::zeros(n, n + p.g.group.dim());
    stacked.view_mut((0, 0), (n, n)).copy_from(&p.sharp());
    stacked
        .view_mut((0, n), (n, p.g.group.dim()))
        .copy_from(&p.rho_m);
    let image_sum_full = rank_of(&stacked, RANK_TOL) == n;
    // graph of a 2-form ⟺ L ∩ (0 ⊕ T*) = 0 ⟺ pr₂ restricted is injective
    let costalk = kernel_scaled(&l.top_block(), RANK_TOL, 1.0).ncols();
    let graph_of_two_form = costalk == 0;
    Ok(Dichotomy {
        range_full,
        image_sum_full,
        graph_of_two_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::check_lagrangian;
    use crate::dirac::SplitPairing;
    use crate::group::GroupKind;

    fn all_groups() -> Vec<Group> {
        vec![
            Group::new(GroupKind::So3),
            Group::new(GroupKind::Su2),
            Group::new(GroupKind::Sl2r),
            Group::new(GroupKind::Abelian(3)),
        ]
    }

    #[test]
    fn double_reproduces_cartan_dirac() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for group in all_groups() {
            for _ in 0..10 {
                let g = group.sample(&mut rng);
                let p = RealizationPoint::double(&g);
                let l = direct_construct(&p).unwrap();
                let expected = cartan_dirac(&g);
                assert!(
                    l.space().distance(expected.space()) < 1e-9,
                    "{}: double is not the canonical structure",
                    group.name()
                );
                let rep = realization_check(&l, &p.dj, &expected).unwrap();
                assert!(rep.forward && rep.nondegenerate);
            }
        }
    }

    #[test]
    fn abelian_direct_is_bivector_graph() {
        // constant moment map into an abelian group: dJ = 0, trivial
        // action, invertible π. Then C = id, σ = B and L = graph(π).
        let group = Group::new(GroupKind::Abelian(3));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = group.sample(&mut rng);
        let mut pi = DMatrix::zeros(2, 2);
        pi[(0, 1)] = 1.7;
        pi[(1, 0)] = -1.7;
        let p = RealizationPoint {
            g,
            n_dim: 2,
            dj: DMatrix::zeros(3, 2),
            pi: pi.clone(),
            rho_m: DMatrix::zeros(2, 3),
        };
        let l = direct_construct(&p).unwrap();
        let expected = LinearDirac::from_bivector(&pi).unwrap();
        assert!(l.space().approx_eq(expected.space()));
        let rc = realization_check(&l, &p.dj, &cartan_dirac(&p.g)).unwrap();
        assert!(rc.forward && rc.nondegenerate);
    }

    #[test]
    fn inverse_action_on_the_double_gives_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for group in all_groups() {
            let g = group.sample(&mut rng);
            let p = RealizationPoint::double(&g);
            let l = direct_construct(&p).unwrap();
            let m = structure_maps(&g);
            for a in 0..3 {
                let mut v = DVector::zeros(3);
                v[a] = 1.0;
                let out = inverse_action(&l, &p.dj, &g, &v).unwrap();
                assert!(
                    (out - &m.rho * &v).amax() < 1e-10,
                    "{}: action is not the conjugation generator",
                    group.name()
                );
            }
        }
    }

    #[test]
    fn inverse_on_zero_bivector_abelian() {
        // L = 0 ⊕ T*: the unique solution of dJ V = 0 with (V, Bv) ∈ L is 0
        let group = Group::new(GroupKind::Abelian(2));
        let g = group.identity();
        let l = LinearDirac::zero_bivector(2);
        let dj = DMatrix::identity(2, 2);
        let v = DVector::from_vec(vec![1.0, -2.0]);
        let out = inverse_action(&l, &dj, &g, &v).unwrap();
        assert!(out.amax() < 1e-12);
    }

    #[test]
    fn synthetic_points_satisfy_invariants() {
        for group in all_groups() {
            for seed in [7u64, 42, 99] {
                let p = synth_realization(seed, &group, 2);
                let r = p.moment_residuals();
                assert!(r.moment_bivector < 1e-10, "{}", group.name());
                assert!(r.equivariance < 1e-10);
                let skew = (&p.pi + p.pi.transpose()).amax();
                assert!(skew < 1e-12);
            }
        }
    }

    #[test]
    fn direct_output_is_lagrangian_realization() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for group in all_groups() {
            for _ in 0..10 {
                let p = synth_realization(rng.gen(), &group, 2);
                let l = direct_construct(&p).unwrap();
                let rep = check_lagrangian(l.space(), &SplitPairing::new(p.n_dim), 1e-10);
                assert!(rep.pass);
                let rc = realization_check(&l, &p.dj, &cartan_dirac(&p.g)).unwrap();
                assert!(rc.forward && rc.nondegenerate);
                // range(L) = im(π♯) + im(ρ_M)
                let (_, range) = l.kernel_range();
                let n = p.n_dim;
                let mut stacked = DMatrix::zeros(n, n + 3);
                stacked.view_mut((0, 0), (n, n)).copy_from(&p.sharp());
                stacked.view_mut((0, n), (n, 3)).copy_from(&p.rho_m);
                let expected = Subspace::from_columns(&stacked);
                assert!(range.approx_eq(&expected));
            }
        }
    }

    #[test]
    fn exact_sequence_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for group in all_groups() {
            // the double
            let g = group.sample(&mut rng);
            let rep = exact_sequence(&RealizationPoint::double(&g)).unwrap();
            assert!(rep.u_j < 1e-12, "{}: U∘j", group.name());
            assert!(rep.rs_i < 1e-12, "{}: (r,s)∘i", group.name());
            assert!(rep.splitting < 1e-12, "{}: splitting", group.name());
            assert!(rep.rank_ok);
            // synthetic points
            for _ in 0..5 {
                let p = synth_realization(rng.gen(), &group, 2);
                let rep = exact_sequence(&p).unwrap();
                assert!(rep.u_j < 1e-10 && rep.rs_i < 1e-10 && rep.splitting < 1e-10);
                assert!(rep.rank_ok);
            }
        }
    }

    #[test]
    fn roundtrips_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for group in all_groups() {
            let g = group.sample(&mut rng);
            let rep = roundtrip(&RealizationPoint::double(&g)).unwrap();
            assert!(rep.quasi_side < 1e-10, "{}: double roundtrip", group.name());
            assert!(rep.dirac_side < 1e-10);
            for _ in 0..5 {
                let p = synth_realization(rng.gen(), &group, 2);
                let rep = roundtrip(&p).unwrap();
                assert!(
                    rep.quasi_side < 1e-8,
                    "{}: quasi side {:.3e}",
                    group.name(),
                    rep.quasi_side
                );
                assert!(rep.dirac_side < 1e-8);
            }
        }
    }

    #[test]
    fn abelian_roundtrip_is_tight() {
        let group = Group::new(GroupKind::Abelian(3));
        let p = synth_realization(11, &group, 2);
        let rep = roundtrip(&p).unwrap();
        assert!(rep.quasi_side < 1e-12);
    }

    #[test]
    fn map_check_identity_conjugation_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let group = Group::new(GroupKind::So3);
        let g = group.sample(&mut rng);
        let p = RealizationPoint::double(&g);
        // identity map passes both routes
        let id = DMatrix::identity(3, 3);
        let rep = quasi_map_check(&p, &p, &id, 1e-9).unwrap();
        assert!(rep.route_matrix_pass && rep.route_dirac_pass && rep.agree);

        // transport by a fixed h: the pushed data over the same fiber point
        // J' = conj_{h⁻¹} has dJ' = Ad_{h⁻¹}, π' = H π♯ Hᵀ, ρ' = H ρ
        let h = group.sample(&mut rng);
        let big_h = h.adjoint();
        let transported = RealizationPoint {
            g: g.clone(),
            n_dim: 3,
            dj: h.adjoint_inv(),
            pi: (&big_h * p.sharp() * big_h.transpose()).transpose(),
            rho_m: &big_h * &p.rho_m,
        };
        transported.check_invariants().expect("transported point valid");
        let rep = quasi_map_check(&p, &transported, &big_h, 1e-9).unwrap();
        assert!(
            rep.route_matrix_pass && rep.route_dirac_pass && rep.agree,
            "conjugation transport must pass both routes: {rep:?}"
        );

        // scaling the bivector breaks both routes together
        let scaled = RealizationPoint {
            g: g.clone(),
            n_dim: 3,
            dj: p.dj.clone(),
            pi: &p.pi * 2.0,
            rho_m: p.rho_m.clone(),
        };
        // the scaled point is not a valid realization; compare the valid
        // double against it via df = id through the raw conditions
        let rep = quasi_map_check(&p, &p, &(2.0 * &id), 1e-9);
        // df = 2·id: moment compat fails, bivector push fails; both routes
        // must fail together
        let rep = rep.unwrap();
        assert!(!rep.route_matrix_pass && !rep.route_dirac_pass && rep.agree);
        drop(scaled);
    }

    #[test]
    fn dichotomy_tests_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for group in all_groups() {
            // degenerate side: the double on a non-abelian group has
            // range = class tangent ≠ everything
            let g = group.sample(&mut rng);
            let p = RealizationPoint::double(&g);
            let d = nondegeneracy_dichotomy(&p).unwrap();
            assert_eq!(d.range_full, d.image_sum_full);
            assert_eq!(d.range_full, d.graph_of_two_form);
            // synthetic points with extra dimensions: both sides occur
            for _ in 0..5 {
                let p = synth_realization(rng.gen(), &group, 2);
                let d = nondegeneracy_dichotomy(&p).unwrap();
                assert_eq!(d.range_full, d.image_sum_full);
                assert_eq!(d.range_full, d.graph_of_two_form);
            }
        }
    }

    #[test]
    fn quasi_hamiltonian_from_nondegenerate_point() {
        // at a point where det(Ad+1) ≠ 0 and the leaf form is invertible on
        // its range... use the double at a quarter turn: invert the leaf
        // form to get ω and check the 2-form moment condition
        let group = Group::new(GroupKind::So3);
        let g = group.exp(&DVector::from_vec(vec![0.0, 0.0, -std::f64::consts::FRAC_PI_2]));
        let p = RealizationPoint::double(&g);
        let l = direct_construct(&p).unwrap();
        let leaf = crate::dirac::leaf_two_form(&l);
        // restrict to the class: N = the conjugacy class, dJ = inclusion
        let tangent = leaf.range.clone();
        let r = tangent.dim();
        assert_eq!(r, 2);
        let incl = tangent.basis().clone(); // 3 × 2, right coords
        let omega = leaf.matrix.clone(); // on the tangent basis
        // ρ restricted to the class in tangent coordinates
        let m = structure_maps(&g);
        let rho_c = incl.transpose() * &m.rho;
        let qh = QuasiHamiltonianPoint {
            g: g.clone(),
            n_dim: r,
            dj: incl.clone(),
            omega,
            rho_m: rho_c,
        };
        let rep = qh.moment_residuals();
        assert!(rep.equivariance < 1e-9, "equivariance {:.3e}", rep.equivariance);
        assert!(
            rep.moment_two_form.unwrap() < 1e-9,
            "2-form moment {:.3e}",
            rep.moment_two_form.unwrap()
        );
        assert!(rep.kernel_condition.unwrap() < 1e-8);
    }

    #[test]
    fn moment_residual_scales_linearly_with_perturbation() {
        let group = Group::new(GroupKind::So3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = synth_realization(rng.gen(), &group, 2);
        let eps = 1e-3;
        let mut delta = DMatrix::zeros(p.n_dim, p.n_dim);
        delta[(0, 1)] = eps;
        delta[(1, 0)] = -eps;
        let perturbed = RealizationPoint {
            pi: &p.pi + &delta,
            ..p.clone()
        };
        let r0 = p.moment_residuals().moment_bivector;
        let r1 = perturbed.moment_residuals().moment_bivector;
        // the defect is (δπ)♯ dJᵀ, whose norm here is exactly √2·ε
        assert!(r0 < 1e-10);
        assert!((r1 - eps * (2.0f64).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let group = Group::new(GroupKind::So3);
        let p = synth_realization(21, &group, 2);
        let text = save_realization(&p);
        match load_realization(&text).unwrap() {
            RealizationInput::QuasiPoisson(q) => {
                assert_eq!(q.n_dim, p.n_dim);
                assert!((q.pi - &p.pi).amax() == 0.0, "bit-exact payload");
                assert!((q.rho_m - &p.rho_m).amax() == 0.0);
            }
            _ => panic!("expected quasi-Poisson input"),
        }
        // Dirac side
        let l = direct_construct(&p).unwrap();
        let text = save_dirac_side(&p, &l);
        match load_realization(&text).unwrap() {
            RealizationInput::Dirac { l: l2, .. } => {
                assert!(l2.space().approx_eq(l.space()));
            }
            _ => panic!("expected Dirac input"),
        }
        // non-skew pi is a schema error
        let bad = text.replace("L_basis", "nonsense");
        assert!(load_realization(&bad).is_err());
        let mut doc: serde_json::Value = serde_json::from_str(&save_realization(&p)).unwrap();
        doc["pi"][0][1] = serde_json::json!(99.0);
        assert!(matches!(
            load_realization(&doc.to_string()),
            Err(Error::NotSkew(_)) | Err(Error::Validation(_))
        ));
    }
}
