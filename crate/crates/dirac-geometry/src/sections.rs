//! Section-level brackets and their identity checks.
//!
//! Sections are fields over a [`Carrier`]; identities are verified at
//! sampled points, not proven symbolically. Test sections are drawn from
//! constant frames, adjoint-entry-weighted frames, and exact differentials
//! of coordinate functions — the cases the structure theory reduces to.

use crate::fields::{
    add as eadd, d_one_form, differential, lie_bracket_fields, lie_one_form, lie_scalar, mul as emul,
    Carrier, Ctx, FieldMat, FieldVec, FormField, Scalar,
};
use crate::lie::QuadraticLieAlgebra;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// A section of TM ⊕ T*M.
#[derive(Debug, Clone)]
pub struct CourantSection {
    pub x: FieldVec,
    pub alpha: FieldVec,
}

/// A section of T*M ⊕ 𝔤.
#[derive(Debug, Clone)]
pub struct PairSection {
    pub alpha: FieldVec,
    pub v: FieldVec,
}

/// The bracket on 1-forms induced by a bivector:
/// [α, β] = L_{π♯α} β − L_{π♯β} α − d π(α, β).
pub fn one_form_bracket(
    carrier: &Arc<Carrier>,
    sharp: &FieldMat,
    alpha: &FieldVec,
    beta: &FieldVec,
) -> FieldVec {
    let xa = sharp.matvec(alpha);
    let xb = sharp.matvec(beta);
    let term1 = lie_one_form(carrier, &xa, beta);
    let term2 = lie_one_form(carrier, &xb, alpha);
    let pi_ab = beta.dot(&sharp.matvec(alpha));
    let term3 = differential(carrier, &pi_ab);
    term1.sub(&term2).sub(&term3)
}

/// The twisted variant: [α, β]_φ = [α, β] + i_{π♯α ∧ π♯β} φ.
pub fn twisted_one_form_bracket(
    carrier: &Arc<Carrier>,
    sharp: &FieldMat,
    phi: &FormField,
    alpha: &FieldVec,
    beta: &FieldVec,
) -> FieldVec {
    let base = one_form_bracket(carrier, sharp, alpha, beta);
    let xa = sharp.matvec(alpha);
    let xb = sharp.matvec(beta);
    base.add(&contract_two(carrier, phi, &xa, &xb))
}

/// i_{X∧Y}φ for a 3-form: the 1-form φ(X, Y, ·).
pub fn contract_two(
    carrier: &Arc<Carrier>,
    phi: &FormField,
    x: &FieldVec,
    y: &FieldVec,
) -> FieldVec {
    let d = carrier.dim();
    let comps = (0..d)
        .map(|c| {
            let mut acc = Scalar::constant(0.0);
            for a in 0..d {
                for b in 0..d {
                    let coeff = phi.at(&[a, b, c]);
                    acc = acc.add(&coeff.mul(&x.comps[a]).mul(&y.comps[b]));
                }
            }
            acc
        })
        .collect();
    FieldVec::from_comps(comps)
}

/// The φ-twisted Courant bracket on sections of TM ⊕ T*M:
/// [(X,α),(Y,β)]_φ = ([X,Y], L_X β − i_Y dα + i_{X∧Y} φ).
pub fn courant_bracket(
    carrier: &Arc<Carrier>,
    phi: &FormField,
    s1: &CourantSection,
    s2: &CourantSection,
) -> CourantSection {
    let x = lie_bracket_fields(carrier, &s1.x, &s2.x);
    let lxb = lie_one_form(carrier, &s1.x, &s2.alpha);
    let da = d_one_form(carrier, &s1.alpha);
    let iy_da = da.transpose().matvec(&s2.x); // (i_Y dα)_B = Σ_A Y^A (dα)_{AB}
    let twist = contract_two(carrier, phi, &s1.x, &s2.x);
    CourantSection {
        x,
        alpha: lxb.sub(&iy_da).add(&twist),
    }
}

/// Pairing dṽ with a 𝔤*-valued function: A_ṽ(μ)(X) = ⟨μ, L_X ṽ⟩, as a
/// 1-form with components Σ_b μ_b D_a(ṽ^b).
pub fn a_term(carrier: &Arc<Carrier>, vtilde: &FieldVec, mu: &FieldVec) -> FieldVec {
    let d = carrier.dim();
    let du = vtilde.comps.len();
    let comps = (0..d)
        .map(|a| {
            let (slot, dir) = carrier.frame_direction(a);
            let mut acc = Scalar::constant(0.0);
            for b in 0..du {
                let dv = vtilde.comps[b].derive_field(&carrier.clone(), slot, &dir);
                acc = acc.add(&mu.comps[b].mul(&dv));
            }
            acc
        })
        .collect();
    FieldVec::from_comps(comps)
}

/// Transformation-algebroid bracket on 𝔤-valued functions:
/// [u, v](x) = [u(x), v(x)] + L_{ρ(u)} v − L_{ρ(v)} u.
pub fn transformation_bracket(
    carrier: &Arc<Carrier>,
    algebra: &QuadraticLieAlgebra,
    rho: &FieldMat,
    u: &FieldVec,
    v: &FieldVec,
) -> FieldVec {
    let du = algebra.dim();
    let pointwise = {
        let comps = (0..du)
            .map(|k| {
                let mut acc = Scalar::constant(0.0);
                for i in 0..du {
                    for j in 0..du {
                        let c = algebra.constant(i, j, k);
                        if c != 0.0 {
                            acc = acc.add(&u.comps[i].mul(&v.comps[j]).scale(c));
                        }
                    }
                }
                acc
            })
            .collect();
        FieldVec::from_comps(comps)
    };
    let xu = rho.matvec(u);
    let xv = rho.matvec(v);
    let lv = directional_of_vector(carrier, &xu, v);
    let lu = directional_of_vector(carrier, &xv, u);
    pointwise.add(&lv).sub(&lu)
}

/// Componentwise derivative of a vector of scalar fields along a vector
/// field (the honest Lie derivative for 𝔤-valued functions).
pub fn directional_of_vector(carrier: &Arc<Carrier>, x: &FieldVec, f: &FieldVec) -> FieldVec {
    FieldVec::from_comps(
        f.comps
            .iter()
            .map(|c| lie_scalar(carrier, x, c))
            .collect(),
    )
}

/// The quasi-Poisson algebroid data on T*M ⊕ 𝔤 over a carrier: the sharp
/// field of the bivector, the action anchor ρ_M as a field, and the
/// algebra trivector.
pub struct QuasiAlgebroid {
    pub carrier: Arc<Carrier>,
    pub sharp: FieldMat,
    pub rho_m: FieldMat,
    pub algebra: Arc<QuadraticLieAlgebra>,
    chi: Vec<f64>,
}

impl QuasiAlgebroid {
    pub fn new(
        carrier: Arc<Carrier>,
        sharp: FieldMat,
        rho_m: FieldMat,
        algebra: Arc<QuadraticLieAlgebra>,
    ) -> Self {
        let chi = algebra.cartan_data().chi;
        Self {
            carrier,
            sharp,
            rho_m,
            algebra,
            chi,
        }
    }

    /// The canonical instance: M = G with the conjugation action and the
    /// canonical bivector.
    pub fn canonical(carrier: &Arc<Carrier>, slot: usize) -> Self {
        let sharp = crate::cartan::quasi_poisson_sharp_field(carrier, slot);
        let sf = crate::cartan::structure_fields(carrier, slot);
        let algebra = Arc::new(carrier.group(slot).algebra().clone());
        Self::new(carrier.clone(), sharp, sf.rho, algebra)
    }

    /// Anchor r(α, v) = π♯α + ρ_M v.
    pub fn anchor(&self, s: &PairSection) -> FieldVec {
        self.sharp.matvec(&s.alpha).add(&self.rho_m.matvec(&s.v))
    }

    /// ρ_M* α as a 𝔤*-valued function.
    pub fn rho_star(&self, alpha: &FieldVec) -> FieldVec {
        self.rho_m.transpose().matvec(alpha)
    }

    /// i_{μ∧μ'}χ as a 𝔤-valued function.
    pub fn chi_contract(&self, mu: &FieldVec, nu: &FieldVec) -> FieldVec {
        let du = self.algebra.dim();
        FieldVec::from_comps(
            (0..du)
                .map(|k| {
                    let mut acc = Scalar::constant(0.0);
                    for i in 0..du {
                        for j in 0..du {
                            let c = self.chi[(i * du + j) * du + k];
                            if c != 0.0 {
                                acc = acc.add(&mu.comps[i].mul(&nu.comps[j]).scale(c));
                            }
                        }
                    }
                    acc
                })
                .collect(),
        )
    }

    /// χ(μ, μ', μ'') as a scalar field.
    pub fn chi_eval(&self, mu: &FieldVec, nu: &FieldVec, la: &FieldVec) -> Scalar {
        self.chi_contract(mu, nu).dot(la)
    }

    /// The algebroid bracket, assembled from the defining cases by the
    /// Leibniz extension (the A-term carries the derivative of non-constant
    /// 𝔤-parts):
    ///
    /// [(α₁,ṽ₁),(α₂,ṽ₂)] =
    ///   ( [α₁,α₂]_π + L_{ρṽ₁}α₂ − L_{ρṽ₂}α₁ − A_{ṽ₁}(ρ*α₂) + A_{ṽ₂}(ρ*α₁),
    ///     ½ i_{ρ*α₁ ∧ ρ*α₂}χ + [ṽ₁,ṽ₂] + L_{ρṽ₁}ṽ₂ − L_{ρṽ₂}ṽ₁
    ///       + L_{π♯α₁}ṽ₂ − L_{π♯α₂}ṽ₁ )
    pub fn bracket(&self, s1: &PairSection, s2: &PairSection) -> PairSection {
        let carrier = &self.carrier;
        let base = one_form_bracket(carrier, &self.sharp, &s1.alpha, &s2.alpha);
        let r1 = self.rho_m.matvec(&s1.v);
        let r2 = self.rho_m.matvec(&s2.v);
        let alpha = base
            .add(&lie_one_form(carrier, &r1, &s2.alpha))
            .sub(&lie_one_form(carrier, &r2, &s1.alpha))
            .sub(&a_term(carrier, &s1.v, &self.rho_star(&s2.alpha)))
            .add(&a_term(carrier, &s2.v, &self.rho_star(&s1.alpha)));

        let mu1 = self.rho_star(&s1.alpha);
        let mu2 = self.rho_star(&s2.alpha);
        let xa1 = self.sharp.matvec(&s1.alpha);
        let xa2 = self.sharp.matvec(&s2.alpha);
        let du = self.algebra.dim();
        let pointwise = FieldVec::from_comps(
            (0..du)
                .map(|k| {
                    let mut acc = Scalar::constant(0.0);
                    for i in 0..du {
                        for j in 0..du {
                            let c = self.algebra.constant(i, j, k);
                            if c != 0.0 {
                                acc = acc.add(&s1.v.comps[i].mul(&s2.v.comps[j]).scale(c));
                            }
                        }
                    }
                    acc
                })
                .collect(),
        );
        let v = self
            .chi_contract(&mu1, &mu2)
            .scale(0.5)
            .add(&pointwise)
            .add(&directional_of_vector(carrier, &r1, &s2.v))
            .sub(&directional_of_vector(carrier, &r2, &s1.v))
            .add(&directional_of_vector(carrier, &xa1, &s2.v))
            .sub(&directional_of_vector(carrier, &xa2, &s1.v));
        PairSection { alpha, v }
    }
}

/// Norms of the cyclic jacobiator and the anchor-compatibility defect of a
/// pair-section bracket, evaluated at a point.
pub struct JacobiatorReport {
    pub jacobiator: f64,
    pub anchor_compat: f64,
}

pub fn pair_jacobiator(
    alg: &QuasiAlgebroid,
    s1: &PairSection,
    s2: &PairSection,
    s3: &PairSection,
    ctx: &Ctx,
) -> JacobiatorReport {
    let mut alpha_acc = DVector::zeros(alg.carrier.dim());
    let mut v_acc = DVector::zeros(alg.algebra.dim());
    for (a, b, c) in [(s1, s2, s3), (s2, s3, s1), (s3, s1, s2)] {
        let inner = alg.bracket(a, b);
        let outer = alg.bracket(&inner, c);
        alpha_acc += outer.alpha.eval(ctx);
        v_acc += outer.v.eval(ctx);
    }
    let jacobiator = alpha_acc.norm().hypot(v_acc.norm());
    // anchor compatibility on the first pair
    let br = alg.bracket(s1, s2);
    let lhs = alg.anchor(&br).eval(ctx);
    let rhs = lie_bracket_fields(&alg.carrier, &alg.anchor(s1), &alg.anchor(s2)).eval(ctx);
    JacobiatorReport {
        jacobiator,
        anchor_compat: (lhs - rhs).norm(),
    }
}

/// Residuals of the two bundle-map axioms for a candidate σ: A → T*M over
/// an anchored bracket: skewness of ⟨σ(ξ), ρ(ξ')⟩ and the bracket
/// compatibility with the i_{ρ(ξ)∧ρ(ξ')}φ correction.
pub struct ImFormReport {
    pub skew: f64,
    pub compat: f64,
}

pub fn im_form_check<S>(
    carrier: &Arc<Carrier>,
    phi: &FormField,
    anchor: impl Fn(&S) -> FieldVec,
    sigma: impl Fn(&S) -> FieldVec,
    bracket: impl Fn(&S, &S) -> S,
    xi: &S,
    xi2: &S,
    ctx: &Ctx,
) -> ImFormReport {
    let s1 = sigma(xi);
    let s2 = sigma(xi2);
    let r1 = anchor(xi);
    let r2 = anchor(xi2);
    let skew = (s1.dot(&r2).eval(ctx) + s2.dot(&r1).eval(ctx)).abs();
    let lhs = sigma(&bracket(xi, xi2)).eval(ctx);
    let rhs = lie_one_form(carrier, &r1, &s2)
        .sub(&lie_one_form(carrier, &r2, &s1))
        .add(&differential(carrier, &s1.dot(&r2)))
        .add(&contract_two(carrier, phi, &r1, &r2))
        .eval(ctx);
    ImFormReport {
        skew,
        compat: (lhs - rhs).norm(),
    }
}

/// The Lie-Poisson sharp matrix at μ ∈ 𝔤*: π♯(α)_b = Σ c[a][b][k] α_a μ_k,
/// i.e. the anchor of the coadjoint transformation algebroid.
pub fn lie_poisson_sharp(algebra: &QuadraticLieAlgebra, mu: &DVector<f64>) -> DMatrix<f64> {
    let d = algebra.dim();
    DMatrix::from_fn(d, d, |b, a| {
        let mut acc = 0.0;
        for k in 0..d {
            acc += algebra.constant(a, b, k) * mu[k];
        }
        acc
    })
}

/// The Lie-Poisson sharp map as a field on the abelian carrier 𝔤*
/// (coordinates of the carrier are the μ-components).
pub fn lie_poisson_sharp_field(algebra: &QuadraticLieAlgebra, _carrier: &Arc<Carrier>) -> FieldMat {
    let d = algebra.dim();
    FieldMat::from_fn(d, d, |b, a| {
        let mut acc = crate::fields::zero();
        for k in 0..d {
            let c = algebra.constant(a, b, k);
            if c != 0.0 {
                acc = eadd(
                    acc,
                    emul(
                        crate::fields::constant(c),
                        Arc::new(crate::fields::Expr::Coord(0, k)),
                    ),
                );
            }
        }
        Scalar::from_expr(acc)
    })
}

/// The trivector [π, π] as a field of coefficients (a degree-3 container
/// whose entries are scalar fields on the carrier), by the invariant-frame
/// coefficient formula. This is the field-level version of
/// [`crate::fields::schouten_square`].
pub fn schouten_square_field(carrier: &Arc<Carrier>, sharp: &FieldMat) -> FormField {
    let d = carrier.dim();
    // precompute D_l P as fields
    let mut dp: Vec<FieldMat> = Vec::with_capacity(d);
    for l in 0..d {
        let (slot, v) = carrier.frame_direction(l);
        dp.push(FieldMat::from_fn(d, d, |i, j| {
            sharp.at(i, j).derive_field(carrier, slot, &v)
        }));
    }
    FormField::from_fn(carrier, 3, |idx| {
        let (a, b, c) = (idx[0], idx[1], idx[2]);
        let mut acc = Scalar::constant(0.0);
        for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
            for l in 0..d {
                acc = acc.add(&sharp.at(l, x).mul(dp[l].at(z, y)));
                for m in 0..d {
                    let s = carrier.structure_constant(l, m, z);
                    if s != 0.0 {
                        acc = acc.add(&sharp.at(l, x).mul(sharp.at(m, y)).scale(s));
                    }
                }
            }
        }
        acc.scale(2.0)
    })
}
