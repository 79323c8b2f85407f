//! The calculus of `M_n(C)` on its canonical frame `∂_k = ad_{iE_k}`.
//!
//! Since `[iE_k, iE_l] = −[E_k, E_l]`, the frame brackets are
//! `[∂_k, ∂_l] = f^m_{kl} ∂_m` with `f^m_{kl} = i C^m_{kl}`. For hermitian
//! `E_k` these constants are real.

use std::thread;

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::{self, AlgebraBasis, CMatrix, I};
use crate::calculus::{
    index_tuples, koszul_d, Algebra, DerivationFrame, Form, RandomElement, StructureConstants,
};
use crate::linalg::{self, DEFAULT_PIVOT_THRESHOLD};
use crate::{Error, Result};

/// Relative threshold for [`Algebra::inverse`] on matrices.
pub const INVERTIBILITY_THRESHOLD: f64 = 1e-8;

/// `M_n(C)` with the frame `∂_k = ad_{iE_k}` built from an [`AlgebraBasis`].
#[derive(Debug, Clone)]
pub struct MatrixFrame {
    basis: AlgebraBasis,
    generators: Vec<CMatrix>,
    structure: StructureConstants,
}

impl MatrixFrame {
    pub fn new(basis: AlgebraBasis) -> Self {
        let generators = basis.elements().iter().map(|e| e * I).collect();
        let structure = StructureConstants::from_fn(basis.dim(), 1e-14, |m, k, l| {
            I * basis.structure_constant(m, k, l)
        });
        MatrixFrame {
            basis,
            generators,
            structure,
        }
    }

    /// Frame over the Gell-Mann basis of `sl_n`.
    pub fn gell_mann(n: usize) -> Result<Self> {
        Ok(Self::new(algebra::build_basis(n)?))
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn basis(&self) -> &AlgebraBasis {
        &self.basis
    }

    /// `iE_k`, the element generating `∂_k`.
    pub fn generator(&self, k: usize) -> &CMatrix {
        &self.generators[k]
    }

    /// Frame coefficients `c` of the inner derivation `ad_γ = Σ c_k ∂_k`.
    /// Only the traceless part of `γ` contributes.
    pub fn inner_coordinates(&self, gamma: &CMatrix) -> Vec<Complex64> {
        // γ₀ = γ^k E_k = (−iγ^k)(iE_k)
        self.basis
            .coordinates(gamma)
            .into_iter()
            .map(|x| -I * x)
            .collect()
    }

    /// Largest violation of `(∂_k a)* = ∂_k(a*)` over the samples.
    pub fn reality_defect(&self, samples: &[CMatrix]) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.dim() {
            for a in samples {
                let lhs = self.act(k, a).adjoint();
                let rhs = self.act(k, &a.adjoint());
                worst = worst.max(algebra::max_abs(&(lhs - rhs)));
            }
        }
        worst
    }
}

impl Algebra for MatrixFrame {
    type Elem = CMatrix;

    fn zero(&self) -> CMatrix {
        algebra::zeros(self.n())
    }

    fn one(&self) -> CMatrix {
        algebra::identity(self.n())
    }

    fn mul(&self, a: &CMatrix, b: &CMatrix) -> CMatrix {
        a * b
    }

    fn axpy(&self, y: &mut CMatrix, c: Complex64, x: &CMatrix) {
        y.zip_apply(x, |u, v| *u += c * v);
    }

    fn norm(&self, a: &CMatrix) -> f64 {
        algebra::max_abs(a)
    }

    fn inverse(&self, a: &CMatrix) -> Result<CMatrix> {
        algebra::guarded_inverse(a, INVERTIBILITY_THRESHOLD)
    }
}

impl RandomElement for MatrixFrame {
    fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        algebra::random_matrix(self.n(), self.n(), rng)
    }
}

impl DerivationFrame for MatrixFrame {
    fn frame_id(&self) -> String {
        format!("matrix:n={}", self.n())
    }

    fn dim(&self) -> usize {
        self.generators.len()
    }

    fn structure(&self) -> &StructureConstants {
        &self.structure
    }

    fn act(&self, k: usize, x: &CMatrix) -> CMatrix {
        let g = &self.generators[k];
        g * x - x * g
    }

    fn label(&self, k: usize) -> String {
        format!("d{}", k + 1)
    }
}

/// The canonical 1-form `iθ = iE_k θ^k`, i.e. `iθ(∂_k) = iE_k`.
pub fn canonical_itheta(mf: &MatrixFrame) -> Form<CMatrix> {
    let comps = (0..mf.dim()).map(|k| (vec![k], mf.generator(k).clone()));
    Form::from_components(mf, comps).expect("frame indices are in range")
}

/// `iθ(ad_γ)`, which is `γ − tr(γ)/n`.
pub fn itheta_on_inner(mf: &MatrixFrame, gamma: &CMatrix) -> CMatrix {
    let coords = mf.inner_coordinates(gamma);
    canonical_itheta(mf).eval_combination(mf, &[coords])
}

/// Normalization `√|g|` of the top-degree volume form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    sqrt_det_g: f64,
}

impl IntegrationConfig {
    pub fn new(sqrt_det_g: f64) -> Result<Self> {
        if !(sqrt_det_g.is_finite() && sqrt_det_g > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sqrt|g| must be positive, got {sqrt_det_g}"
            )));
        }
        Ok(IntegrationConfig { sqrt_det_g })
    }

    pub fn from_basis(basis: &AlgebraBasis) -> Self {
        IntegrationConfig {
            sqrt_det_g: basis.det_metric().abs().sqrt(),
        }
    }

    pub fn sqrt_det_g(&self) -> f64 {
        self.sqrt_det_g
    }
}

/// The volume form `√|g| θ^1⋯θ^{n²−1}` with coefficient `a`.
pub fn volume_form(mf: &MatrixFrame, cfg: &IntegrationConfig, a: &CMatrix) -> Form<CMatrix> {
    let top: Vec<usize> = (0..mf.dim()).collect();
    Form::from_components(mf, [(top, a.map(|z| z * cfg.sqrt_det_g))])
        .expect("frame indices are in range")
}

/// Noncommutative integral: `(1/n) tr(a)` for the top-degree part
/// `a √|g| θ^1⋯θ^{n²−1}`, zero for all lower degrees.
pub fn nc_integrate(mf: &MatrixFrame, omega: &Form<CMatrix>, cfg: &IntegrationConfig) -> Complex64 {
    let top: Vec<usize> = (0..mf.dim()).collect();
    match omega.component(&top) {
        Some(c) => algebra::trace(c) / (cfg.sqrt_det_g * mf.n() as f64),
        None => Complex64::default(),
    }
}

/// Limits for [`cohomology`].
#[derive(Debug, Clone, Copy)]
pub struct CohomologyConfig {
    /// Maximum total dimension `n²·2^{n²−1}` of the complex.
    pub dimension_cap: usize,
    pub pivot_threshold: f64,
}

impl Default for CohomologyConfig {
    fn default() -> Self {
        // n = 3 gives 9·2^8 = 2304; n = 4 would be 16·2^15.
        CohomologyConfig {
            dimension_cap: 4096,
            pivot_threshold: DEFAULT_PIVOT_THRESHOLD,
        }
    }
}

/// Dimensions, ranks and Betti numbers of `(Ω^•(M_n), d′)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohomologyReport {
    /// `dim Ω^k = n²·C(n²−1, k)`.
    pub dims: Vec<usize>,
    /// `rank(d′: Ω^k → Ω^{k+1})`.
    pub ranks: Vec<usize>,
    pub betti: Vec<usize>,
}

/// Matrix of `d′: Ω^p → Ω^{p+1}` in the basis `e_ij θ^I`, with columns
/// ordered by (tuple, row, column).
pub fn differential_matrix(mf: &MatrixFrame, p: usize) -> CMatrix {
    let n = mf.n();
    let nn = n * n;
    let src = index_tuples(mf.dim(), p);
    let dst = index_tuples(mf.dim(), p + 1);
    let dst_pos: std::collections::HashMap<&[usize], usize> =
        dst.iter().enumerate().map(|(i, t)| (t.as_slice(), i)).collect();
    let mut m = CMatrix::zeros(dst.len() * nn, src.len() * nn);
    for (ti, t) in src.iter().enumerate() {
        for e in 0..nn {
            let mut unit = algebra::zeros(n);
            unit[(e / n, e % n)] = Complex64::new(1.0, 0.0);
            let w = Form::from_components(mf, [(t.clone(), unit)]).expect("valid tuple");
            let dw = koszul_d(mf, &w).expect("same frame");
            for (key, coeff) in dw.components() {
                let row0 = dst_pos[key] * nn;
                for i in 0..n {
                    for j in 0..n {
                        m[(row0 + i * n + j, ti * nn + e)] = coeff[(i, j)];
                    }
                }
            }
        }
    }
    m
}

/// Betti numbers `b_0 … b_{max_degree}` from rank-nullity:
/// `b_k = dim Ω^k − rank d′_k − rank d′_{k−1}`.
pub fn cohomology(
    mf: &MatrixFrame,
    max_degree: usize,
    cfg: &CohomologyConfig,
) -> Result<CohomologyReport> {
    let n = mf.n();
    let top = mf.dim();
    if max_degree > top {
        return Err(Error::InvalidParameter(format!(
            "max degree {max_degree} exceeds the top degree {top}"
        )));
    }
    let total = 1usize
        .checked_shl(top as u32)
        .and_then(|p| p.checked_mul(n * n))
        .unwrap_or(usize::MAX);
    if total > cfg.dimension_cap {
        return Err(Error::DimensionCap {
            size: total,
            cap: cfg.dimension_cap,
        });
    }
    let dims: Vec<usize> = (0..=max_degree)
        .map(|k| n * n * index_tuples(top, k).len())
        .collect();
    // rank of d′_k for k = 0..=max_degree (d′_top = 0).
    let ranks: Vec<usize> = thread::scope(|s| {
        let handles: Vec<_> = (0..=max_degree)
            .map(|k| {
                s.spawn(move || {
                    if k >= top {
                        0
                    } else {
                        let m = differential_matrix(mf, k);
                        linalg::rank_real(&linalg::split_complex(&m), cfg.pivot_threshold) / 2
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("rank worker panicked"))
            .collect()
    });
    let betti = (0..=max_degree)
        .map(|k| {
            let prev = if k == 0 { 0 } else { ranks[k - 1] };
            dims[k] - ranks[k] - prev
        })
        .collect();
    Ok(CohomologyReport { dims, ranks, betti })
}

/// Betti numbers of the matrix calculus up to `max_degree`.
pub fn cohomology_betti(mf: &MatrixFrame, max_degree: usize) -> Result<Vec<usize>> {
    Ok(cohomology(mf, max_degree, &CohomologyConfig::default())?.betti)
}
