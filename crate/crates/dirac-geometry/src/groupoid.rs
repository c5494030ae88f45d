//! The conjugation groupoid G ⋉ G and its multiplicative 2-form.
//!
//! Arrows are pairs (g, x) with source x and target g x g⁻¹; multiplication
//! is (g, x)·(g', x') = (g g', x') when x = g' x' g'⁻¹. Tangent vectors at
//! an arrow are pairs (u, w) of right coordinates on the two factors.
//!
//! The 2-form at (g, x), on tangent pairs, is assembled from the
//! left/right Maurer-Cartan values λ(u·g) = Ad_{g⁻¹}u and the wedge
//! convention ⟨α ∧ β⟩(V, W) = ⟨α(V), β(W)⟩ − ⟨α(W), β(V)⟩:
//!
//! ω = ½( ⟨Ad_x p_g*λ ∧ p_g*λ⟩ + ⟨p_g*λ ∧ p_x*(λ + λ̄)⟩ ).
//!
//! Its component matrix on (u, w)-coordinates is
//!
//! F = ½ [ Gᵀ(XᵀB − BX)G   GᵀBY ]          G = Ad_{g⁻¹}, X = Ad_x,
//!       [ −YᵀBG           0    ]          Y = Ad_{x⁻¹} + I.
//!
//! At units this induces exactly the structure map σ, and the differential
//! relation dω = s*φ − t*φ holds for the Cartan 3-form φ.

use crate::cartan::{cartan_dirac, structure_maps};
use crate::dirac::pullback;
use crate::error::{Error, Result};
use crate::fields::{Carrier, Ctx, FieldMat, FormField};
use crate::group::{Group, GroupPoint};
use crate::linalg::{kernel_scaled, rank_of, Subspace};
use crate::realization::{inverse_action, RealizationPoint};
use crate::RANK_TOL;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// An arrow of the conjugation groupoid.
#[derive(Debug, Clone)]
pub struct Arrow {
    pub g: GroupPoint,
    pub x: GroupPoint,
}

impl Arrow {
    pub fn new(g: GroupPoint, x: GroupPoint) -> Result<Self> {
        if g.group.kind() != x.group.kind() {
            return Err(Error::Validation("arrow components from different groups".into()));
        }
        Ok(Self { g, x })
    }

    pub fn group(&self) -> &Group {
        &self.g.group
    }

    pub fn source(&self) -> GroupPoint {
        self.x.clone()
    }

    pub fn target(&self) -> GroupPoint {
        self.g.conj(&self.x).expect("target composes")
    }

    pub fn unit(x: &GroupPoint) -> Self {
        Self {
            g: x.group.identity(),
            x: x.clone(),
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            g: self.g.inv(),
            x: self.target(),
        }
    }

    /// Composition a·b, defined when source(a) = target(b).
    pub fn compose(&self, other: &Arrow) -> Result<Arrow> {
        let mismatch = self.source().payload_distance(&other.target());
        if mismatch > 1e-10 {
            return Err(Error::NotComposable(mismatch));
        }
        Ok(Arrow {
            g: self.g.mul(&other.g)?,
            x: other.x.clone(),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "g": self.g.to_json(),
            "x": self.x.to_json(),
        })
    }
}

/// Component matrix F of the 2-form at an arrow: ω(V₁, V₂) = V₁ᵀ F V₂ on
/// stacked (u, w) coordinates. With `ablate_twist` the conjugation block
/// (the Ad_x term) is dropped, which destroys multiplicativity.
pub fn amm_form_matrix(a: &Arrow, ablate_twist: bool) -> DMatrix<f64> {
    let d = a.group().dim();
    let b = a.group().form();
    let g_inv_ad = a.g.adjoint_inv();
    let x_ad = a.x.adjoint();
    let y = a.x.adjoint_inv() + DMatrix::identity(d, d);
    let mut f = DMatrix::zeros(2 * d, 2 * d);
    if !ablate_twist {
        let block = g_inv_ad.transpose() * (x_ad.transpose() * b - b * &x_ad) * &g_inv_ad * 0.5;
        f.view_mut((0, 0), (d, d)).copy_from(&block);
    }
    let cross = g_inv_ad.transpose() * b * &y * 0.5;
    f.view_mut((0, d), (d, d)).copy_from(&cross);
    f.view_mut((d, 0), (d, d)).copy_from(&(-cross.transpose()));
    f
}

/// The 2-form as a field over the product carrier [G, G] (slot 0 = the
/// arrow factor, slot 1 = the base factor).
pub fn amm_form_field(carrier: &Arc<Carrier>) -> FieldMat {
    let d = carrier.group(0).dim();
    let b = FieldMat::constant(carrier.group(0).form());
    let g_inv = FieldMat::ad_inv(carrier, 0);
    let x_ad = FieldMat::ad(carrier, 1);
    let y = FieldMat::ad_inv(carrier, 1).add(&FieldMat::identity(d));
    let block = g_inv
        .transpose()
        .matmul(&x_ad.transpose().matmul(&b).sub(&b.matmul(&x_ad)))
        .matmul(&g_inv)
        .scale(0.5);
    let cross = g_inv.transpose().matmul(&b).matmul(&y).scale(0.5);
    FieldMat::from_fn(2 * d, 2 * d, |i, j| {
        if i < d && j < d {
            block.at(i, j).clone()
        } else if i < d {
            cross.at(i, j - d).clone()
        } else if j < d {
            cross.at(j, i - d).scale(-1.0)
        } else {
            crate::fields::Scalar::constant(0.0)
        }
    })
}

/// Differential of the source map: ds(u, w) = w.
pub fn d_source(a: &Arrow) -> DMatrix<f64> {
    let d = a.group().dim();
    let mut m = DMatrix::zeros(d, 2 * d);
    m.view_mut((0, d), (d, d)).copy_from(&DMatrix::identity(d, d));
    m
}

/// Differential of the target map: dt(u, w) = (I − Ad_{gxg⁻¹}) u + Ad_g w.
pub fn d_target(a: &Arrow) -> DMatrix<f64> {
    let d = a.group().dim();
    let y = a.target();
    let mut m = DMatrix::zeros(d, 2 * d);
    m.view_mut((0, 0), (d, d))
        .copy_from(&(DMatrix::identity(d, d) - y.adjoint()));
    m.view_mut((0, d), (d, d)).copy_from(&a.g.adjoint());
    m
}

/// Multiplicativity defect of the 2-form at a composable pair: the largest
/// entry of m*ω − pr₁*ω − pr₂*ω on a basis of the composable tangent space,
/// parametrized by (u, v, z) with w = (I − Ad_x) v + Ad_h z.
pub fn multiplicativity_check(a: &Arrow, b: &Arrow, ablate: bool) -> Result<f64> {
    let mismatch = a.source().payload_distance(&b.target());
    if mismatch > 1e-10 {
        return Err(Error::NotComposable(mismatch));
    }
    let d = a.group().dim();
    let prod = a.compose(b)?;
    let f_a = amm_form_matrix(a, ablate);
    let f_b = amm_form_matrix(b, ablate);
    let f_m = amm_form_matrix(&prod, ablate);
    let ad_x = a.x.adjoint();
    let ad_h = b.g.adjoint();
    let ad_g = a.g.adjoint();

    // parameter space (u, v, z) → tangents at a, b, and the product
    let pdim = 3 * d;
    let mut tan_a = DMatrix::zeros(2 * d, pdim);
    let mut tan_b = DMatrix::zeros(2 * d, pdim);
    let mut tan_m = DMatrix::zeros(2 * d, pdim);
    let id = DMatrix::identity(d, d);
    // u block
    tan_a.view_mut((0, 0), (d, d)).copy_from(&id);
    tan_m.view_mut((0, 0), (d, d)).copy_from(&id);
    // v block: w = (I − Ad_x) v, arrow b gets v in its u-slot, product gets
    // Ad_g v in its u-slot
    tan_a
        .view_mut((d, d), (d, d))
        .copy_from(&(&id - &ad_x));
    tan_b.view_mut((0, d), (d, d)).copy_from(&id);
    tan_m.view_mut((0, d), (d, d)).copy_from(&ad_g);
    // z block: w = Ad_h z on a, base motion z on b and the product
    tan_a.view_mut((d, 2 * d), (d, d)).copy_from(&ad_h);
    tan_b.view_mut((d, 2 * d), (d, d)).copy_from(&id);
    tan_m.view_mut((d, 2 * d), (d, d)).copy_from(&id);

    let lhs = tan_m.transpose() * f_m * &tan_m;
    let rhs = tan_a.transpose() * f_a * &tan_a + tan_b.transpose() * f_b * &tan_b;
    Ok((lhs - rhs).amax())
}

/// The three defining conditions of the twisted presymplectic structure:
/// the dimension count, the kernel condition at units, and the
/// differential relation dω = s*φ_tw − t*φ_tw, where φ_tw = −φ is the same
/// twist carried by the structure the groupoid integrates.
#[derive(Debug, Clone)]
pub struct PresymplecticReport {
    pub dim_ok: bool,
    pub unit_kernel_trivial: bool,
    pub d_omega_residual: f64,
}

/// The differential relation is checked at the given arrow through the
/// invariant-frame Cartan formula on the product carrier, against the
/// pullbacks of the Cartan 3-form along source and target.
pub fn presymplectic_axioms(
    carrier: &Arc<Carrier>,
    unit_base: &GroupPoint,
    arrow: &Arrow,
) -> PresymplecticReport {
    let d = carrier.group(0).dim();
    // dimension: the groupoid carrier G × G against its base G
    let dim_ok = carrier.dim() == 2 * d;

    // kernel condition at the unit over unit_base
    let unit = Arrow::unit(unit_base);
    let f = amm_form_matrix(&unit, false);
    let mut stacked = DMatrix::zeros(4 * d, 2 * d);
    stacked.view_mut((0, 0), (2 * d, 2 * d)).copy_from(&f);
    stacked
        .view_mut((2 * d, 0), (d, 2 * d))
        .copy_from(&d_source(&unit));
    stacked
        .view_mut((3 * d, 0), (d, 2 * d))
        .copy_from(&d_target(&unit));
    let unit_kernel_trivial = rank_of(&stacked, RANK_TOL) == 2 * d;

    // dω = s*φ_tw − t*φ_tw at the arrow, evaluated on frame triples
    let omega = amm_form_field(carrier);
    let omega_form = FormField::from_fn(carrier, 2, |idx| omega.at(idx[0], idx[1]).clone());
    let phi: Vec<f64> = carrier
        .group(0)
        .algebra()
        .cartan_data()
        .phi
        .iter()
        .map(|&x| -x)
        .collect();
    let ctx = Ctx::new(carrier, &[arrow.g.clone(), arrow.x.clone()]);
    let ds = d_source(arrow);
    let dt = d_target(arrow);
    let phi_eval = |vs: [&DVector<f64>; 3], m: &DMatrix<f64>| -> f64 {
        let a = m * vs[0];
        let b = m * vs[1];
        let c = m * vs[2];
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    acc += phi[(i * d + j) * d + k] * a[i] * b[j] * c[k];
                }
            }
        }
        acc
    };
    let mut residual: f64 = 0.0;
    let n = 2 * d;
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                let mut va = DVector::zeros(n);
                va[a] = 1.0;
                let mut vb = DVector::zeros(n);
                vb[b] = 1.0;
                let mut vc = DVector::zeros(n);
                vc[c] = 1.0;
                let domega = crate::fields::exterior_derivative(
                    carrier,
                    &omega_form,
                    &ctx,
                    &[va.clone(), vb.clone(), vc.clone()],
                );
                let expected = phi_eval([&va, &vb, &vc], &ds) - phi_eval([&va, &vb, &vc], &dt);
                residual = residual.max((domega - expected).abs());
            }
        }
    }
    PresymplecticReport {
        dim_ok,
        unit_kernel_trivial,
        d_omega_residual: residual,
    }
}

/// At a unit, the map ξ ↦ i_ξ ω|_{TM} on ker(ds), paired with the anchor
/// dt: the induced structure must be the canonical one on the base.
pub fn im_of_omega(x: &GroupPoint) -> (DMatrix<f64>, f64) {
    let unit = Arrow::unit(x);
    let d = x.group.dim();
    let f = amm_form_matrix(&unit, false);
    // σ_ω(u)(w) = ω((u,0),(0,w)) = uᵀ F_topright w
    let sigma_omega = f.view((0, d), (d, d)).transpose().into_owned();
    let rho = DMatrix::identity(d, d) - x.adjoint();
    let mut gen = DMatrix::zeros(2 * d, d);
    gen.view_mut((0, 0), (d, d)).copy_from(&rho);
    gen.view_mut((d, 0), (d, d)).copy_from(&sigma_omega);
    let induced = Subspace::from_columns_scaled(&gen, RANK_TOL, 1.0);
    let distance = induced.distance(cartan_dirac(x).space());
    (sigma_omega, distance)
}

/// Compatibility of the groupoid action on its own base (the conjugation
/// action with the identity moment map): the 2-form identity along a
/// conjugacy class, and the gauge identity between the source/target
/// pullbacks of the canonical structure.
#[derive(Debug, Clone)]
pub struct ActionCompatReport {
    pub two_form_residual: f64,
    pub dirac_distance: f64,
}

pub fn action_compat_check(arrow: &Arrow) -> Result<ActionCompatReport> {
    let d = arrow.group().dim();
    let x = arrow.source();
    let y = arrow.target();
    let f = amm_form_matrix(arrow, false);

    // 2-form identity on the class through x: tangters are (u, w) with w
    // tangent to the class
    let class = crate::group::conjugacy_tangent(&x);
    let r = class.dim();
    let mut params = DMatrix::zeros(2 * d, d + r);
    params
        .view_mut((0, 0), (d, d))
        .copy_from(&DMatrix::identity(d, d));
    params.view_mut((d, d), (d, r)).copy_from(class.basis());
    let dt = d_target(arrow);
    let ds = d_source(arrow);
    let theta = |at: &GroupPoint, v1: &DVector<f64>, v2: &DVector<f64>| -> f64 {
        crate::cartan::ghjw_eval_on_tangents(at, v1, v2)
    };
    let mut two_form_residual: f64 = 0.0;
    for i in 0..(d + r) {
        for j in 0..(d + r) {
            let p1 = params.column(i).into_owned();
            let p2 = params.column(j).into_owned();
            let lhs = theta(&y, &(&dt * &p1), &(&dt * &p2));
            let rhs = theta(&x, &(&ds * &p1), &(&ds * &p2))
                + (p1.transpose() * &f * &p2)[(0, 0)];
            two_form_residual = two_form_residual.max((lhs - rhs).abs());
        }
    }

    // Dirac-level identity on the whole of G: t*L = τ_ω(s*L)
    let lt = pullback(&cartan_dirac(&y), &dt)?;
    let ls = pullback(&cartan_dirac(&x), &ds)?;
    let gauged = ls.gauge(&f)?;
    let dirac_distance = lt.space().distance(gauged.space());
    Ok(ActionCompatReport {
        two_form_residual,
        dirac_distance,
    })
}

/// Orbit reduction at a synthetic realization point: the level set of the
/// moment map carries the pulled-back structure, the isotropy directions
/// are quotiented out, and the result must be kernel-free.
#[derive(Debug, Clone)]
pub struct ReductionReport {
    pub reduced_dim: usize,
    pub kernel_dim: usize,
    pub backward_distance: f64,
    pub orbit_match: f64,
    pub isotropy_dim: usize,
    pub orbit_dim: usize,
}

pub fn orbit_reduce_demo(p: &RealizationPoint) -> Result<ReductionReport> {
    let d = p.g.group.dim();
    if rank_of(&p.dj, RANK_TOL) < d {
        return Err(Error::NotRegular {
            rank: rank_of(&p.dj, RANK_TOL),
            expected: d,
        });
    }
    let l = crate::realization::direct_construct(p)?;
    // level set of J through the point: T_C = ker(dJ)
    let t_c = Subspace::from_columns_scaled(&kernel_scaled(&p.dj, RANK_TOL, 1.0), RANK_TOL, 1.0);
    // isotropy algebra at the target value: ker ρ(x)
    let m = structure_maps(&p.g);
    let iso = kernel_scaled(&m.rho, RANK_TOL, 1.0);
    let isotropy_dim = iso.ncols();
    // induced directions on the level set through the algebroid action
    let mut orbit_gen = DMatrix::zeros(p.n_dim, isotropy_dim);
    for c in 0..isotropy_dim {
        let v = iso.column(c).into_owned();
        orbit_gen.set_column(c, &inverse_action(&l, &p.dj, &p.g, &v)?);
    }
    let orbit = Subspace::from_columns_scaled(&orbit_gen, RANK_TOL, 1.0);
    let red = crate::dirac::linear_reduce(&l, &t_c, &orbit)?;
    let (kernel, _) = red.reduced.kernel_range();
    // eq for the orbit directions: they are exactly the kernel of the
    // pulled-back structure (re-derived here as an explicit distance)
    let (ker_c, _) = red.on_c.kernel_range();
    let orbit_in_c = Subspace::from_columns_scaled(
        &(red.c_basis.transpose() * orbit.basis()),
        RANK_TOL,
        1.0,
    );
    let orbit_match = if ker_c.dim() == orbit_in_c.dim() {
        ker_c.distance(&orbit_in_c)
    } else {
        std::f64::consts::FRAC_PI_2
    };
    // the projection must also be backward Dirac onto the result
    let back = pullback(&red.reduced, &red.projection)?;
    let backward_distance = back.space().distance(red.on_c.space());
    Ok(ReductionReport {
        reduced_dim: red.reduced.base_dim(),
        kernel_dim: kernel.dim(),
        backward_distance,
        orbit_match,
        isotropy_dim,
        orbit_dim: orbit.dim(),
    })
}

/// Sample a composable pair of arrows.
pub fn sample_composable_pair(group: &Group, rng: &mut impl rand::Rng) -> (Arrow, Arrow) {
    let h = group.sample(rng);
    let x = group.sample(rng);
    let b = Arrow::new(h.clone(), x).expect("same group");
    let g = group.sample(rng);
    let a = Arrow::new(g, b.target()).expect("same group");
    (a, b)
}
