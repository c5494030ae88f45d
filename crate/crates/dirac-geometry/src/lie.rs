//! Quadratic Lie algebras from structure constants.
//!
//! A quadratic Lie algebra is a Lie algebra together with an ad-invariant
//! nondegenerate symmetric bilinear form, with no definiteness assumption.
//! Structure constants are stored densely: `[e_i, e_j] = Σ_k c[i][j][k] e_k`.
//!
//! Dualization between the algebra and its dual always routes through the
//! form matrix B and its inverse explicitly; nothing assumes B = I.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Dense structure constants plus an invariant nondegenerate symmetric form.
#[derive(Debug, Clone)]
pub struct QuadraticLieAlgebra {
    name: String,
    dim: usize,
    /// c[i][j][k] with [e_i, e_j] = Σ_k c[i][j][k] e_k.
    constants: Vec<f64>,
    form: DMatrix<f64>,
    form_inv: DMatrix<f64>,
}

/// Residuals of the defining hypotheses, as reported by [`QuadraticLieAlgebra::validate`].
#[derive(Debug, Clone, Serialize)]
pub struct AlgebraResiduals {
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub form_symmetry: f64,
    pub form_det: f64,
    pub invariance: f64,
}

impl AlgebraResiduals {
    pub fn pass(&self, tol: f64) -> bool {
        self.antisymmetry <= tol
            && self.jacobi <= tol
            && self.form_symmetry <= tol
            && self.form_det > 1e-12
            && self.invariance <= tol
    }
}

/// The Cartan 3-form and its dual trivector.
#[derive(Debug, Clone)]
pub struct CartanData {
    /// phi[i][j][k] = ½ ⟨e_i, [e_j, e_k]⟩, fully alternating.
    pub phi: Vec<f64>,
    /// chi[i][j][k]: the trivector dual to phi under B, i.e. the full
    /// contraction of phi with B⁻¹ on all three legs.
    pub chi: Vec<f64>,
    /// Dual basis matrix: column a holds f_a with ⟨f_a, e_b⟩ = δ_ab.
    pub dual_basis: DMatrix<f64>,
    dim: usize,
}

impl CartanData {
    pub fn phi_at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.phi[(i * self.dim + j) * self.dim + k]
    }

    pub fn chi_at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.chi[(i * self.dim + j) * self.dim + k]
    }

    /// φ(u, v, w) on algebra coordinates.
    pub fn phi_eval(&self, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        contract3(&self.phi, self.dim, u, v, w)
    }

    /// χ(μ, ν, λ) on dual coordinates.
    pub fn chi_eval(&self, mu: &DVector<f64>, nu: &DVector<f64>, la: &DVector<f64>) -> f64 {
        contract3(&self.chi, self.dim, mu, nu, la)
    }

    /// The g-valued contraction i_{μ∧ν}χ, defined by χ(μ, ν, ·).
    pub fn chi_contract2(&self, mu: &DVector<f64>, nu: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        DVector::from_fn(d, |k, _| {
            let mut acc = 0.0;
            for i in 0..d {
                for j in 0..d {
                    acc += self.chi[(i * d + j) * d + k] * mu[i] * nu[j];
                }
            }
            acc
        })
    }
}

fn contract3(t: &[f64], d: usize, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..d {
        if u[i] == 0.0 {
            continue;
        }
        for j in 0..d {
            if v[j] == 0.0 {
                continue;
            }
            for k in 0..d {
                acc += t[(i * d + j) * d + k] * u[i] * v[j] * w[k];
            }
        }
    }
    acc
}

impl QuadraticLieAlgebra {
    /// Build from dense structure constants `c[i][j][k]` and a form matrix,
    /// validating all hypotheses.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        constants: Vec<f64>,
        form: DMatrix<f64>,
    ) -> Result<Self> {
        if constants.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch(constants.len(), dim * dim * dim));
        }
        if form.nrows() != dim || form.ncols() != dim {
            return Err(Error::DimensionMismatch(form.nrows(), dim));
        }
        let form_inv = form
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateForm(form.clone().lu().determinant().abs()))?;
        let algebra = Self {
            name: name.into(),
            dim,
            constants,
            form,
            form_inv,
        };
        let residuals = algebra.validate();
        if !residuals.pass(1e-10) {
            return Err(Error::Validation(format!(
                "algebra hypotheses violated: antisymmetry {:.3e}, jacobi {:.3e}, \
                 form symmetry {:.3e}, |det B| {:.3e}, invariance {:.3e}",
                residuals.antisymmetry,
                residuals.jacobi,
                residuals.form_symmetry,
                residuals.form_det,
                residuals.invariance
            )));
        }
        Ok(algebra)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn form(&self) -> &DMatrix<f64> {
        &self.form
    }

    pub fn form_inv(&self) -> &DMatrix<f64> {
        &self.form_inv
    }

    pub fn constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.constants[(i * self.dim + j) * self.dim + k]
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    /// [u, v] on coordinates.
    pub fn bracket(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        DVector::from_fn(d, |k, _| {
            let mut acc = 0.0;
            for i in 0..d {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..d {
                    acc += self.constants[(i * d + j) * d + k] * u[i] * v[j];
                }
            }
            acc
        })
    }

    /// Matrix of ad_u = [u, ·].
    pub fn ad(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |k, j| {
            let mut acc = 0.0;
            for i in 0..d {
                acc += self.constants[(i * d + j) * d + k] * u[i];
            }
            acc
        })
    }

    /// ⟨u, v⟩ under the invariant form.
    pub fn pairing(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (u.transpose() * &self.form * v)[(0, 0)]
    }

    /// Residual report for antisymmetry, Jacobi, form symmetry and
    /// nondegeneracy, and ad-invariance of the form.
    pub fn validate(&self) -> AlgebraResiduals {
        let d = self.dim;
        let c = |i: usize, j: usize, k: usize| self.constants[(i * d + j) * d + k];
        let mut antisymmetry: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    antisymmetry = antisymmetry.max((c(i, j, k) + c(j, i, k)).abs());
                }
            }
        }
        // Jacobi: [[ei,ej],ek] + [[ej,ek],ei] + [[ek,ei],ej] = 0
        let mut jacobi: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for m in 0..d {
                        let mut acc = 0.0;
                        for l in 0..d {
                            acc += c(i, j, l) * c(l, k, m)
                                + c(j, k, l) * c(l, i, m)
                                + c(k, i, l) * c(l, j, m);
                        }
                        jacobi = jacobi.max(acc.abs());
                    }
                }
            }
        }
        let form_symmetry = (&self.form - self.form.transpose()).amax();
        let form_det = self.form.clone().lu().determinant().abs();
        // ⟨[ei, ej], ek⟩ + ⟨ej, [ei, ek]⟩ = 0
        let mut invariance: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut acc = 0.0;
                    for l in 0..d {
                        acc += c(i, j, l) * self.form[(l, k)] + c(i, k, l) * self.form[(j, l)];
                    }
                    invariance = invariance.max(acc.abs());
                }
            }
        }
        AlgebraResiduals {
            antisymmetry,
            jacobi,
            form_symmetry,
            form_det,
            invariance,
        }
    }

    /// Cartan 3-form φ(u,v,w) = ½⟨u,[v,w]⟩ and the dual trivector χ with
    /// χ(u∨, v∨, w∨) = φ(u, v, w), where ∨ is the B-duality.
    pub fn cartan_data(&self) -> CartanData {
        let d = self.dim;
        let mut phi = vec![0.0; d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut acc = 0.0;
                    for l in 0..d {
                        acc += self.form[(i, l)] * self.constant(j, k, l);
                    }
                    phi[(i * d + j) * d + k] = 0.5 * acc;
                }
            }
        }
        // χ = B⁻¹ ⊗ B⁻¹ ⊗ B⁻¹ · φ
        let binv = &self.form_inv;
        let mut chi = vec![0.0; d * d * d];
        for a in 0..d {
            for b in 0..d {
                for e in 0..d {
                    let mut acc = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            for k in 0..d {
                                acc += binv[(a, i)]
                                    * binv[(b, j)]
                                    * binv[(e, k)]
                                    * phi[(i * d + j) * d + k];
                            }
                        }
                    }
                    chi[(a * d + b) * d + e] = acc;
                }
            }
        }
        CartanData {
            phi,
            chi,
            dual_basis: binv.clone(),
            dim: d,
        }
    }

    /// Signature (positive, negative) of the form.
    pub fn form_signature(&self) -> (usize, usize) {
        let eig = self.form.clone().symmetric_eigen();
        let pos = eig.eigenvalues.iter().filter(|&&l| l > 0.0).count();
        (pos, self.dim - pos)
    }

    /// Block direct sum of two quadratic Lie algebras.
    pub fn direct_sum(&self, other: &QuadraticLieAlgebra) -> QuadraticLieAlgebra {
        let d1 = self.dim;
        let d = d1 + other.dim;
        let mut constants = vec![0.0; d * d * d];
        for i in 0..d1 {
            for j in 0..d1 {
                for k in 0..d1 {
                    constants[(i * d + j) * d + k] = self.constant(i, j, k);
                }
            }
        }
        for i in 0..other.dim {
            for j in 0..other.dim {
                for k in 0..other.dim {
                    constants[((d1 + i) * d + d1 + j) * d + d1 + k] = other.constant(i, j, k);
                }
            }
        }
        let mut form = DMatrix::zeros(d, d);
        form.view_mut((0, 0), (d1, d1)).copy_from(&self.form);
        form.view_mut((d1, d1), (other.dim, other.dim))
            .copy_from(&other.form);
        QuadraticLieAlgebra::new(
            format!("{}+{}", self.name, other.name),
            d,
            constants,
            form,
        )
        .expect("direct sum of valid algebras is valid")
    }
}

/// Cross-product structure constants on ℝ³ with the Euclidean form:
/// [e1, e2] = e3 cyclically.
fn cross_product_constants() -> Vec<f64> {
    let mut c = vec![0.0; 27];
    let eps = [(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)];
    for &(i, j, k) in &eps {
        c[(i * 3 + j) * 3 + k] = 1.0;
        c[(j * 3 + i) * 3 + k] = -1.0;
    }
    c
}

/// sl(2,ℝ) in the basis (e, f, h) with the trace form of the defining
/// representation: [e,f] = h, [h,e] = 2e, [h,f] = -2f.
fn sl2r_constants() -> Vec<f64> {
    let d = 3;
    let mut c = vec![0.0; 27];
    let mut set = |i: usize, j: usize, k: usize, v: f64| {
        c[(i * d + j) * d + k] = v;
        c[(j * d + i) * d + k] = -v;
    };
    // basis order: e = 0, f = 1, h = 2
    set(0, 1, 2, 1.0); // [e, f] = h
    set(2, 0, 0, 2.0); // [h, e] = 2e
    set(2, 1, 1, -2.0); // [h, f] = -2f
    c
}

/// Built-in algebras: `so3`, `su2` (same quadratic algebra, cross-product
/// model), `sl2r` (trace form, signature (2,1)), `abelian(n)`.
pub fn builtin(name: &str) -> Result<QuadraticLieAlgebra> {
    let trimmed = name.trim();
    if let Some(rest) = trimmed.strip_prefix("abelian(") {
        let n: usize = rest
            .strip_suffix(')')
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::UnknownName(name.into()))?;
        if n == 0 || n > 16 {
            return Err(Error::UnknownName(name.into()));
        }
        return QuadraticLieAlgebra::new(
            trimmed,
            n,
            vec![0.0; n * n * n],
            DMatrix::identity(n, n),
        );
    }
    match trimmed {
        "so3" => QuadraticLieAlgebra::new(
            "so3",
            3,
            cross_product_constants(),
            DMatrix::identity(3, 3),
        ),
        "su2" => QuadraticLieAlgebra::new(
            "su2",
            3,
            cross_product_constants(),
            DMatrix::identity(3, 3),
        ),
        "sl2r" => {
            let form =
                DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
            QuadraticLieAlgebra::new("sl2r", 3, sl2r_constants(), form)
        }
        "abelian" => builtin("abelian(3)"),
        _ => Err(Error::UnknownName(name.into())),
    }
}

/// JSON document shape for algebra ingestion.
#[derive(Serialize, Deserialize)]
struct AlgebraDoc {
    name: String,
    dim: usize,
    structure_constants: Vec<Vec<Vec<f64>>>,
    form: Vec<Vec<f64>>,
}

/// Parse a JSON document into a validated algebra.
pub fn load(text: &str) -> Result<QuadraticLieAlgebra> {
    let doc: AlgebraDoc = serde_json::from_str(text)?;
    if doc.dim > 64 {
        return Err(Error::Parse(format!("dimension {} too large", doc.dim)));
    }
    let d = doc.dim;
    if doc.structure_constants.len() != d {
        return Err(Error::Parse(
            "structure_constants outer length != dim".into(),
        ));
    }
    let mut constants = vec![0.0; d * d * d];
    for (i, plane) in doc.structure_constants.iter().enumerate() {
        if plane.len() != d {
            return Err(Error::Parse(format!(
                "structure_constants[{i}] length != dim"
            )));
        }
        for (j, row) in plane.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Parse(format!(
                    "structure_constants[{i}][{j}] length != dim"
                )));
            }
            for (k, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Parse("non-finite structure constant".into()));
                }
                constants[(i * d + j) * d + k] = v;
            }
        }
    }
    if doc.form.len() != d {
        return Err(Error::Parse("form row count != dim".into()));
    }
    let mut form = DMatrix::zeros(d, d);
    for (i, row) in doc.form.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Parse(format!("form[{i}] length != dim")));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Parse("non-finite form entry".into()));
            }
            form[(i, j)] = v;
        }
    }
    QuadraticLieAlgebra::new(doc.name, d, constants, form)
}

/// Serialize an algebra; `load(save(g))` reproduces the numeric payload
/// bit-exactly.
pub fn save(g: &QuadraticLieAlgebra) -> String {
    let d = g.dim();
    let doc = AlgebraDoc {
        name: g.name().to_string(),
        dim: d,
        structure_constants: (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|k| g.constant(i, j, k)).collect())
                    .collect()
            })
            .collect(),
        form: (0..d)
            .map(|i| (0..d).map(|j| g.form()[(i, j)]).collect())
            .collect(),
    };
    crate::report::to_json_17sig(&serde_json::to_value(&doc).expect("serializable"))
}
