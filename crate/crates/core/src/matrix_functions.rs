//! The trivial-bundle calculus on `C^∞(R^m) ⊗ M_n`, modeled with
//! polynomial coefficients.
//!
//! The frame is `∂_1, …, ∂_m` (spatial, indices `0..m`) followed by the inner
//! derivations `ad_{iE_k}` (indices `m..m+n²−1`). Spatial and inner
//! derivations commute, so the only nonzero brackets are the matrix ones.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::algebra::{self, I};
use crate::calculus::{Algebra, DerivationFrame, Form, RandomElement, StructureConstants};
use crate::connections::{curvature_on_a, ConnectionOnA};
use crate::matrix_geometry::{MatrixFrame, INVERTIBILITY_THRESHOLD};
use crate::polymatrix::{integrate_monomial, PolyMatrix};
use crate::{Error, Result};

/// Default bound on polynomial degrees accepted by [`ymh_action`].
pub const DEFAULT_MAX_DEGREE: u32 = 6;

/// Frame of `m` spatial partial derivatives and the inner frame of `M_n`.
#[derive(Debug, Clone)]
pub struct MixedFrame {
    m: usize,
    inner: MatrixFrame,
    structure: StructureConstants,
    random_degree: u32,
}

impl MixedFrame {
    pub fn new(m: usize, inner: MatrixFrame) -> Self {
        let dim = m + inner.dim();
        let structure = StructureConstants::from_fn(dim, 0.0, |c, a, b| {
            if a < m || b < m || c < m {
                Complex64::default()
            } else {
                inner.structure().get(c - m, a - m, b - m)
            }
        });
        MixedFrame {
            m,
            inner,
            structure,
            random_degree: 2,
        }
    }

    pub fn gell_mann(m: usize, n: usize) -> Result<Self> {
        Ok(Self::new(m, MatrixFrame::gell_mann(n)?))
    }

    /// Total degree bound for [`RandomElement::random_element`].
    pub fn with_random_degree(mut self, degree: u32) -> Self {
        self.random_degree = degree;
        self
    }

    pub fn spatial_dim(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn inner(&self) -> &MatrixFrame {
        &self.inner
    }

    pub fn is_spatial(&self, a: usize) -> bool {
        a < self.m
    }

    /// Constant polynomial with coefficient `a`.
    pub fn constant(&self, a: algebra::CMatrix) -> PolyMatrix {
        PolyMatrix::constant(self.m, a)
    }

    /// Scalar (central) polynomial `p(x)·1`.
    pub fn scalar(&self, coeffs: impl IntoIterator<Item = (Vec<u32>, Complex64)>) -> PolyMatrix {
        PolyMatrix::scalar(self.m, self.n(), coeffs)
    }

    /// Frame coefficients of the inner derivation `ad_γ` for polynomial `γ`:
    /// central polynomials `φ^k` with `ad_γ = Σ φ^k ad_{iE_k}`, returned on
    /// the full frame (zero on spatial directions).
    pub fn inner_coefficients(&self, gamma: &PolyMatrix) -> Vec<PolyMatrix> {
        let mut out = vec![PolyMatrix::zero(self.m, self.n()); self.dim()];
        for (e, c) in gamma.terms() {
            for (k, z) in self.inner.inner_coordinates(c).into_iter().enumerate() {
                if z != Complex64::default() {
                    let id = algebra::identity(self.n()).map(|w| w * z);
                    out[self.m + k].add_term(e.to_vec(), &id);
                }
            }
        }
        out
    }

    /// `Σ φ^a X_a(x)` for central coefficients `φ^a`.
    pub fn act_combination(&self, coeffs: &[PolyMatrix], x: &PolyMatrix) -> PolyMatrix {
        let mut out = self.zero();
        for (a, phi) in coeffs.iter().enumerate() {
            if phi.max_abs() > 0.0 {
                out.axpy(Complex64::new(1.0, 0.0), &phi.mul(&self.act(a, x)));
            }
        }
        out
    }

    /// `ω(Σ φ^a X_a) = Σ φ^a ω(X_a)` for a 1-form and central `φ^a`.
    pub fn eval_one_form(&self, omega: &Form<PolyMatrix>, coeffs: &[PolyMatrix]) -> PolyMatrix {
        let mut out = self.zero();
        for (a, phi) in coeffs.iter().enumerate() {
            if let Some(w) = omega.component(&[a]) {
                out.axpy(Complex64::new(1.0, 0.0), &phi.mul(w));
            }
        }
        out
    }
}

impl Algebra for MixedFrame {
    type Elem = PolyMatrix;

    fn zero(&self) -> PolyMatrix {
        PolyMatrix::zero(self.m, self.n())
    }

    fn one(&self) -> PolyMatrix {
        PolyMatrix::constant(self.m, algebra::identity(self.n()))
    }

    fn mul(&self, a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
        a.mul(b)
    }

    fn axpy(&self, y: &mut PolyMatrix, c: Complex64, x: &PolyMatrix) {
        y.axpy(c, x);
    }

    fn norm(&self, a: &PolyMatrix) -> f64 {
        a.max_abs()
    }

    fn inverse(&self, a: &PolyMatrix) -> Result<PolyMatrix> {
        a.inverse(INVERTIBILITY_THRESHOLD, 1e-12)
    }
}

impl RandomElement for MixedFrame {
    fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> PolyMatrix {
        PolyMatrix::random(self.m, self.n(), self.random_degree, 3, rng)
    }
}

impl DerivationFrame for MixedFrame {
    fn frame_id(&self) -> String {
        format!("mixed:m={},n={}", self.m, self.n())
    }

    fn dim(&self) -> usize {
        self.m + self.inner.dim()
    }

    fn structure(&self) -> &StructureConstants {
        &self.structure
    }

    fn act(&self, a: usize, x: &PolyMatrix) -> PolyMatrix {
        if a < self.m {
            x.derivative(a)
        } else {
            let g = self.inner.generator(a - self.m);
            x.map_coeffs(|c| g * c - c * g)
        }
    }

    fn label(&self, a: usize) -> String {
        if a < self.m {
            format!("dx{}", a + 1)
        } else {
            self.inner.label(a - self.m)
        }
    }
}

/// De Rham calculus of scalar polynomials on `R^m` (1×1 coefficients).
#[derive(Debug, Clone)]
pub struct SpatialFrame {
    m: usize,
    structure: StructureConstants,
}

impl SpatialFrame {
    pub fn new(m: usize) -> Self {
        SpatialFrame {
            m,
            structure: StructureConstants::zero(m),
        }
    }
}

impl Algebra for SpatialFrame {
    type Elem = PolyMatrix;

    fn zero(&self) -> PolyMatrix {
        PolyMatrix::zero(self.m, 1)
    }

    fn one(&self) -> PolyMatrix {
        PolyMatrix::constant(self.m, algebra::identity(1))
    }

    fn mul(&self, a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
        a.mul(b)
    }

    fn axpy(&self, y: &mut PolyMatrix, c: Complex64, x: &PolyMatrix) {
        y.axpy(c, x);
    }

    fn norm(&self, a: &PolyMatrix) -> f64 {
        a.max_abs()
    }

    fn inverse(&self, a: &PolyMatrix) -> Result<PolyMatrix> {
        a.inverse(INVERTIBILITY_THRESHOLD, 1e-12)
    }
}

impl RandomElement for SpatialFrame {
    fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> PolyMatrix {
        PolyMatrix::random(self.m, 1, 3, 3, rng)
    }
}

impl DerivationFrame for SpatialFrame {
    fn frame_id(&self) -> String {
        format!("spatial:m={}", self.m)
    }

    fn dim(&self) -> usize {
        self.m
    }

    fn structure(&self) -> &StructureConstants {
        &self.structure
    }

    fn act(&self, a: usize, x: &PolyMatrix) -> PolyMatrix {
        x.derivative(a)
    }

    fn label(&self, a: usize) -> String {
        format!("dx{}", a + 1)
    }
}

/// `d̂ = d + d′`, the Koszul differential of the mixed frame.
pub fn hat_d(mf: &MixedFrame, omega: &Form<PolyMatrix>) -> Result<Form<PolyMatrix>> {
    crate::calculus::koszul_d(mf, omega)
}

/// The splitting 1-form: `iθ(∂_μ) = 0`, `iθ(ad_{iE_k}) = iE_k`.
pub fn splitting_itheta(mf: &MixedFrame) -> Form<PolyMatrix> {
    let comps = (0..mf.inner.dim()).map(|k| (vec![mf.m + k], mf.constant(mf.inner.generator(k).clone())));
    Form::from_components(mf, comps).expect("frame indices are in range")
}

/// `∇̂_X a = X a + ω(X) a` along `X = Σ φ^a X_a` with central coefficients.
pub fn covariant_along(
    mf: &MixedFrame,
    conn: &ConnectionOnA<PolyMatrix>,
    coeffs: &[PolyMatrix],
    a: &PolyMatrix,
) -> PolyMatrix {
    let mut out = mf.act_combination(coeffs, a);
    out.axpy(Complex64::new(1.0, 0.0), &mf.eval_one_form(conn.form(), coeffs).mul(a));
    out
}

/// Curvature split by the type of its two frame directions.
#[derive(Debug, Clone)]
pub struct Trigrade {
    /// Both spatial: the Yang-Mills field strength.
    pub f20: Form<PolyMatrix>,
    /// One spatial, one inner: covariant derivatives of the Higgs fields.
    pub f11: Form<PolyMatrix>,
    /// Both inner: the Higgs potential term.
    pub f02: Form<PolyMatrix>,
}

impl Trigrade {
    pub fn total(&self, mf: &MixedFrame) -> Result<Form<PolyMatrix>> {
        self.f20.add(mf, &self.f11)?.add(mf, &self.f02)
    }
}

pub fn curvature_trigrade(mf: &MixedFrame, conn: &ConnectionOnA<PolyMatrix>) -> Result<Trigrade> {
    let full = curvature_on_a(mf, conn)?;
    let spatial = |k: &[usize]| k.iter().filter(|&&a| mf.is_spatial(a)).count();
    Ok(Trigrade {
        f20: full.filter(|k| spatial(k) == 2),
        f11: full.filter(|k| spatial(k) == 1),
        f02: full.filter(|k| spatial(k) == 0),
    })
}

/// `ĝ = h ⊕ Λ^{-2} g`: spatial metric `h`, matrix metric `g`, weight `Λ`.
#[derive(Debug, Clone)]
pub struct WeightedMetric {
    h: DMatrix<f64>,
    lambda: f64,
}

impl WeightedMetric {
    pub fn new(h: DMatrix<f64>, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        if !h.is_square() || (&h - h.transpose()).amax() > 1e-12 * (1.0 + h.amax()) {
            return Err(Error::InvalidParameter("spatial metric must be symmetric".into()));
        }
        if h.clone().cholesky().is_none() {
            return Err(Error::InvalidParameter("spatial metric must be positive definite".into()));
        }
        Ok(WeightedMetric { h, lambda })
    }

    /// `h = 1` on `R^m`.
    pub fn euclidean(m: usize, lambda: f64) -> Result<Self> {
        Self::new(DMatrix::identity(m, m), lambda)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn spatial(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// `ĝ^{-1}` on the mixed frame: `h^{-1}` and `Λ² g^{-1}` blocks.
    pub fn inverse_on(&self, mf: &MixedFrame) -> Result<DMatrix<f64>> {
        let m = mf.spatial_dim();
        if self.h.nrows() != m {
            return Err(Error::mismatch(format!("h of size {}", self.h.nrows()), format!("m = {m}")));
        }
        let h_inv = self.h.clone().try_inverse().ok_or(Error::NotInvertible { ratio: 0.0 })?;
        let g_inv = mf.inner.basis().metric_inverse();
        let l2 = self.lambda * self.lambda;
        let dim = mf.dim();
        Ok(DMatrix::from_fn(dim, dim, |a, b| match (a < m, b < m) {
            (true, true) => h_inv[(a, b)],
            (false, false) => l2 * g_inv[(a - m, b - m)],
            _ => 0.0,
        }))
    }
}

/// Integration domain `Π [lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn unit(m: usize) -> Self {
        BoxDomain {
            lower: vec![0.0; m],
            upper: vec![1.0; m],
        }
    }

    /// `∫_box p(x) dx` of a scalar polynomial given as exponent → value.
    pub fn integrate(&self, p: &BTreeMap<Vec<u32>, Complex64>) -> Complex64 {
        p.iter()
            .map(|(e, c)| c * integrate_monomial(e, &self.lower, &self.upper))
            .sum()
    }
}

/// Contributions of the three bidegrees to the action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YmhAction {
    pub yang_mills: f64,
    pub covariant: f64,
    pub potential: f64,
}

impl YmhAction {
    pub fn total(&self) -> f64 {
        self.yang_mills + self.covariant + self.potential
    }
}

/// Demo action `½ Σ ĝ^{ac} ĝ^{bd} ⟨F_ab, F_cd⟩` with
/// `⟨A, B⟩ = ∫_box (1/n) Re tr(A† B)`, summed over all ordered frame
/// indices. Because `ĝ` is block diagonal the sum separates by bidegree,
/// and the inner block carries `Λ²` per index.
pub fn ymh_action(
    mf: &MixedFrame,
    conn: &ConnectionOnA<PolyMatrix>,
    wm: &WeightedMetric,
    domain: &BoxDomain,
    max_degree: u32,
) -> Result<YmhAction> {
    let m = mf.spatial_dim();
    if domain.lower.len() != m || domain.upper.len() != m {
        return Err(Error::mismatch(format!("box of dimension {}", domain.lower.len()), format!("m = {m}")));
    }
    for (_, w) in conn.form().components() {
        let deg = w.degree().unwrap_or(0);
        if deg > max_degree {
            return Err(Error::DegreeCap { degree: deg, max: max_degree });
        }
    }
    let g_inv = wm.inverse_on(mf)?;
    let tri = curvature_trigrade(mf, conn)?;
    let part = |f: &Form<PolyMatrix>| -> f64 {
        let comps: Vec<(&[usize], &PolyMatrix)> = f.components().collect();
        let mut s = 0.0;
        for (k1, f1) in &comps {
            let f1_adj = f1.adjoint();
            for (k2, f2) in &comps {
                let (a, b, c, d) = (k1[0], k1[1], k2[0], k2[1]);
                // Both orderings of each pair: the ½ cancels against the
                // two equal halves of the antisymmetric sum.
                let w = g_inv[(a, c)] * g_inv[(b, d)] - g_inv[(a, d)] * g_inv[(b, c)];
                if w != 0.0 {
                    let tr = f1_adj.mul(f2).trace();
                    s += w * domain.integrate(&tr).re / mf.n() as f64;
                }
            }
        }
        s
    };
    Ok(YmhAction {
        yang_mills: part(&tri.f20),
        covariant: part(&tri.f11),
        potential: part(&tri.f02),
    })
}

/// Noncommutative integration over the matrix directions: the component
/// with all inner indices, `c dx^S ∧ √|g| θ^1⋯θ^{n²−1}`, maps to
/// `(1/n) tr(c) dx^S`. Other components map to zero.
pub fn nc_integrate_inner(
    mf: &MixedFrame,
    omega: &Form<PolyMatrix>,
    sqrt_det_g: f64,
) -> Result<Form<PolyMatrix>> {
    let m = mf.spatial_dim();
    let inner_dim = mf.inner.dim();
    let target = SpatialFrame::new(m);
    let mut comps = Vec::new();
    for (key, c) in omega.components() {
        let split = key.len().saturating_sub(inner_dim);
        if key.len() < inner_dim || key[split..].iter().zip(m..).any(|(&a, b)| a != b) {
            continue;
        }
        let scale = Complex64::new(1.0 / (mf.n() as f64 * sqrt_det_g), 0.0);
        let tr = PolyMatrix::scalar(m, 1, c.trace().into_iter().map(|(e, z)| (e, z * scale)));
        comps.push((key[..split].to_vec(), tr));
    }
    Ok(Form::from_components(&target, comps)?.pruned(&target))
}

/// Connection `−iθ + Σ A_k θ^k` on the inner directions with constant
/// `A_k`, and zero spatial part.
pub fn constant_inner_connection(mf: &MixedFrame, a: &[algebra::CMatrix]) -> Result<ConnectionOnA<PolyMatrix>> {
    if a.len() != mf.inner.dim() {
        return Err(Error::mismatch(format!("{} components", a.len()), format!("{}", mf.inner.dim())));
    }
    let comps = a.iter().enumerate().map(|(k, ak)| {
        (vec![mf.m + k], mf.constant(ak - mf.inner.generator(k)))
    });
    ConnectionOnA::new(Form::from_components(mf, comps)?.pruned(mf))
}

/// Deformation used by the CLI demo: `A_k = ε iE_k` shrinks the Higgs
/// field, giving a nonzero potential term.
pub fn demo_connection(mf: &MixedFrame, epsilon: f64) -> Result<ConnectionOnA<PolyMatrix>> {
    let a: Vec<algebra::CMatrix> = (0..mf.inner.dim())
        .map(|k| mf.inner.generator(k).map(|z| z * epsilon))
        .collect();
    let mut omega = constant_inner_connection(mf, &a)?.into_form();
    if mf.m > 0 {
        // Spatially varying gauge field along dx^1: x^2 · iE_1 when m ≥ 2.
        let mut e = vec![0u32; mf.m];
        e[mf.m - 1] = 1;
        let field = PolyMatrix::monomial(e, mf.inner.generator(0).map(|z| z * I));
        omega = omega.add(mf, &Form::from_components(mf, [(vec![0], field)])?)?;
    }
    ConnectionOnA::new(omega)
}
