//! Noncommutative connections, curvature and gauge transformations.
//!
//! On the right module `M = A` a connection is fixed by the 1-form
//! `ω(X) = ∇̂_X 1` through `∇̂_X a = X a + ω(X) a`; this part is generic over
//! any [`DerivationFrame`]. On `M_{r,n}` over the matrix frame a connection is
//! `∇̂_{∂_k} m = −m iE_k + A_k m` with `A_k ∈ M_r`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::algebra::{self, CMatrix, I};
use crate::calculus::{koszul_d, DerivationFrame, Form};
use crate::linalg::{self, DEFAULT_PIVOT_THRESHOLD};
use crate::matrix_geometry::{MatrixFrame, INVERTIBILITY_THRESHOLD};
use crate::{Error, Result};

/// Connection on the right module `A`, given by its 1-form.
#[derive(Debug, Clone)]
pub struct ConnectionOnA<E> {
    omega: Form<E>,
}

impl<E: Clone + std::fmt::Debug> ConnectionOnA<E> {
    /// Fails unless `omega` is of degree exactly 1 (the zero form is accepted
    /// as the trivial connection `∇̂_X = X`).
    pub fn new(omega: Form<E>) -> Result<Self> {
        match omega.degrees().as_slice() {
            [] | [1] => Ok(ConnectionOnA { omega }),
            other => Err(Error::Precondition(format!(
                "connection form must have degree 1, found degrees {other:?}"
            ))),
        }
    }

    pub fn form(&self) -> &Form<E> {
        &self.omega
    }

    pub fn into_form(self) -> Form<E> {
        self.omega
    }
}

/// `∇̂_{X_a} x = X_a x + ω(X_a) x`.
pub fn covariant_derivative<F: DerivationFrame>(
    frame: &F,
    conn: &ConnectionOnA<F::Elem>,
    a: usize,
    x: &F::Elem,
) -> F::Elem {
    let w = conn.omega.eval(frame, &[a]);
    frame.add(&frame.act(a, x), &frame.mul(&w, x))
}

/// Curvature as an operator: `([∇̂_a, ∇̂_b] − ∇̂_{[X_a,X_b]}) x`.
pub fn curvature_operator<F: DerivationFrame>(
    frame: &F,
    conn: &ConnectionOnA<F::Elem>,
    a: usize,
    b: usize,
    x: &F::Elem,
) -> F::Elem {
    let nab = |i: usize, y: &F::Elem| covariant_derivative(frame, conn, i, y);
    let mut out = frame.sub(&nab(a, &nab(b, x)), &nab(b, &nab(a, x)));
    for c in 0..frame.dim() {
        let f = frame.structure().get(c, a, b);
        if f != Complex64::default() {
            frame.axpy(&mut out, -f, &nab(c, x));
        }
    }
    out
}

/// `Ω(X, Y) = dω(X, Y) + [ω(X), ω(Y)]`.
pub fn curvature_on_a<F: DerivationFrame>(
    frame: &F,
    conn: &ConnectionOnA<F::Elem>,
) -> Result<Form<F::Elem>> {
    let mut out = koszul_d(frame, &conn.omega)?;
    let n = frame.dim();
    let mut quad = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let wa = conn.omega.eval(frame, &[a]);
            let wb = conn.omega.eval(frame, &[b]);
            let br = frame.commutator(&wa, &wb);
            if frame.norm(&br) > 0.0 {
                quad.push((vec![a, b], br));
            }
        }
    }
    out = out.add(frame, &Form::from_components(frame, quad)?)?;
    Ok(out.pruned(frame))
}

/// `ω^g = g⁻¹ ω g + g⁻¹ dg`.
pub fn gauge_transform<F: DerivationFrame>(
    frame: &F,
    conn: &ConnectionOnA<F::Elem>,
    g: &F::Elem,
) -> Result<ConnectionOnA<F::Elem>> {
    let g_inv = frame.inverse(g)?;
    let conj = conn.omega.left_mul(frame, &g_inv).right_mul(frame, g);
    let dg = koszul_d(frame, &Form::scalar(frame, g.clone()))?.left_mul(frame, &g_inv);
    ConnectionOnA::new(conj.add(frame, &dg)?.pruned(frame))
}

/// `−iθ`-type connection on `M_{r,n}` shifted by `A = A_k θ^k`, `A_k ∈ M_r`.
#[derive(Debug, Clone)]
pub struct ModuleConnection {
    r: usize,
    components: Vec<CMatrix>,
}

impl ModuleConnection {
    pub fn new(r: usize, components: Vec<CMatrix>) -> Result<Self> {
        if let Some(bad) = components.iter().find(|a| a.shape() != (r, r)) {
            return Err(Error::mismatch(
                format!("{}x{}", bad.nrows(), bad.ncols()),
                format!("{r}x{r}"),
            ));
        }
        Ok(ModuleConnection { r, components })
    }

    /// The connection `∇̂^{−iθ}` itself (`A = 0`).
    pub fn zero(r: usize, mf: &MatrixFrame) -> Self {
        ModuleConnection {
            r,
            components: vec![CMatrix::zeros(r, r); mf.dim()],
        }
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn components(&self) -> &[CMatrix] {
        &self.components
    }

    fn check(&self, mf: &MatrixFrame) -> Result<()> {
        if self.components.len() != mf.dim() {
            return Err(Error::mismatch(
                format!("{} connection components", self.components.len()),
                format!("frame dimension {}", mf.dim()),
            ));
        }
        Ok(())
    }

    /// Gauge transformation by `S ∈ GL_r` acting on the left of `M_{r,n}`:
    /// `A_k ↦ S⁻¹ A_k S`.
    pub fn gauge(&self, s: &CMatrix) -> Result<Self> {
        if s.shape() != (self.r, self.r) {
            return Err(Error::mismatch(
                format!("{}x{}", s.nrows(), s.ncols()),
                format!("{0}x{0}", self.r),
            ));
        }
        let s_inv = algebra::guarded_inverse(s, INVERTIBILITY_THRESHOLD)?;
        Ok(ModuleConnection {
            r: self.r,
            components: self.components.iter().map(|a| &s_inv * a * s).collect(),
        })
    }
}

/// `∇̂_{∂_k} m = −m iE_k + A_k m` for `m ∈ M_{r,n}`.
pub fn module_covariant_derivative(
    mf: &MatrixFrame,
    mc: &ModuleConnection,
    k: usize,
    m: &CMatrix,
) -> CMatrix {
    &mc.components[k] * m - m * mf.generator(k)
}

/// Curvature `F = ½([A_k, A_l] − f^m_{kl} A_m) θ^k θ^l`, stored on `k < l`
/// with `M_r` coefficients.
pub fn module_curvature(mc: &ModuleConnection, mf: &MatrixFrame) -> Result<Form<CMatrix>> {
    mc.check(mf)?;
    let dim = mf.dim();
    let f = mf.structure();
    let mut terms = BTreeMap::new();
    for k in 0..dim {
        for l in k + 1..dim {
            let (ak, al) = (&mc.components[k], &mc.components[l]);
            let mut fkl = ak * al - al * ak;
            for m in 0..dim {
                let c = f.get(m, k, l);
                if c != Complex64::default() {
                    fkl -= mc.components[m].map(|z| z * c);
                }
            }
            terms.insert(vec![k, l], fkl);
        }
    }
    Ok(Form::from_raw(mf.frame_id(), dim, terms))
}

/// Largest coefficient of the curvature.
pub fn module_curvature_norm(mc: &ModuleConnection, mf: &MatrixFrame) -> Result<f64> {
    Ok(module_curvature(mc, mf)?
        .components()
        .map(|(_, c)| algebra::max_abs(c))
        .fold(0.0, f64::max))
}

pub fn is_flat(mc: &ModuleConnection, mf: &MatrixFrame, tol: f64) -> Result<bool> {
    Ok(module_curvature_norm(mc, mf)? <= tol)
}

/// Number of random nullspace combinations tried when looking for an
/// invertible intertwiner.
pub const INTERTWINER_TRIALS: usize = 20;

/// Basis of the intertwiner space `{S : S A_k = A'_k S ∀k}`.
pub fn intertwiners(a: &[CMatrix], b: &[CMatrix], r: usize) -> Vec<CMatrix> {
    let rr = r * r;
    let mut sys = CMatrix::zeros(a.len() * rr, rr);
    for col in 0..rr {
        let mut unit = CMatrix::zeros(r, r);
        unit[(col % r, col / r)] = Complex64::new(1.0, 0.0);
        for (k, (ak, bk)) in a.iter().zip(b).enumerate() {
            let eq = &unit * ak - bk * &unit;
            for (i, z) in eq.iter().enumerate() {
                sys[(k * rr + i, col)] = *z;
            }
        }
    }
    linalg::nullspace(&sys, DEFAULT_PIVOT_THRESHOLD)
        .into_iter()
        .map(|v| CMatrix::from_column_slice(r, r, &v))
        .collect()
}

/// Whether two flat connections on `M_{r,n}` lie in the same gauge orbit,
/// i.e. whether the representations `∂_k ↦ A_k` are equivalent.
///
/// An invertible intertwiner is searched among random combinations of the
/// intertwiner basis (fixed seed, [`INTERTWINER_TRIALS`] draws). A generic
/// combination is invertible whenever any element of the space is, so a
/// negative answer is wrong only with probability zero.
pub fn flat_gauge_equivalent(
    mc1: &ModuleConnection,
    mc2: &ModuleConnection,
    mf: &MatrixFrame,
    tol: f64,
) -> Result<bool> {
    for (name, mc) in [("first", mc1), ("second", mc2)] {
        let norm = module_curvature_norm(mc, mf)?;
        if norm > tol {
            return Err(Error::Precondition(format!(
                "{name} connection is not flat (curvature norm {norm:.3e})"
            )));
        }
    }
    if mc1.r != mc2.r {
        return Ok(false);
    }
    let basis = intertwiners(&mc1.components, &mc2.components, mc1.r);
    if basis.is_empty() {
        return Ok(false);
    }
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for _ in 0..INTERTWINER_TRIALS {
        let mut s = CMatrix::zeros(mc1.r, mc1.r);
        for b in &basis {
            let c = algebra::random_matrix(1, 1, &mut rng)[(0, 0)];
            s += b.map(|z| z * c);
        }
        if algebra::guarded_inverse(&s, INVERTIBILITY_THRESHOLD).is_ok() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Number of random module pairs used by [`hermitian_compatible`].
const COMPATIBILITY_SAMPLES: usize = 8;

/// Checks `∂_k⟨m_1, m_2⟩ = ⟨∇̂_k m_1, m_2⟩ + ⟨m_1, ∇̂_k m_2⟩` with
/// `⟨m_1, m_2⟩ = m_1* m_2` on random module elements. Because the frame
/// derivations are real this holds exactly when every `A_k` is
/// antihermitian.
pub fn hermitian_compatible(mc: &ModuleConnection, mf: &MatrixFrame, tol: f64) -> Result<bool> {
    mc.check(mf)?;
    let mut rng = StdRng::seed_from_u64(0xc0ffee);
    let (r, n) = (mc.r, mf.n());
    for _ in 0..COMPATIBILITY_SAMPLES {
        let m1 = algebra::random_matrix(r, n, &mut rng);
        let m2 = algebra::random_matrix(r, n, &mut rng);
        for k in 0..mf.dim() {
            let lhs = mf.act(k, &(m1.adjoint() * &m2));
            let n1 = module_covariant_derivative(mf, mc, k, &m1);
            let n2 = module_covariant_derivative(mf, mc, k, &m2);
            let rhs = n1.adjoint() * &m2 + m1.adjoint() * n2;
            if algebra::max_abs(&(lhs - rhs)) > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Spin-`j` angular momentum matrices `(J_1, J_2, J_3)` of dimension
/// `r = 2j + 1`, with `[J_a, J_b] = i ε_abc J_c`.
pub fn spin_matrices(r: usize) -> Vec<CMatrix> {
    let j = (r as f64 - 1.0) / 2.0;
    let mut jp = CMatrix::zeros(r, r);
    let mut jz = CMatrix::zeros(r, r);
    for i in 0..r {
        let m = j - i as f64;
        jz[(i, i)] = Complex64::new(m, 0.0);
        if i > 0 {
            // ⟨m+1| J_+ |m⟩ = √(j(j+1) − m(m+1))
            jp[(i - 1, i)] = Complex64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm).map(|z| z * 0.5);
    let jy = (&jp - &jm).map(|z| z * (-0.5 * I));
    vec![jx, jy, jz]
}

/// Flat connection on `M_{r,2}` from the spin-`(r−1)/2` representation:
/// `σ_k ↦ 2J_k`, hence `A_k = 2i J_k`. Requires the Pauli frame (`n = 2`).
pub fn spin_connection(mf: &MatrixFrame, r: usize) -> Result<ModuleConnection> {
    if mf.n() != 2 {
        return Err(Error::InvalidParameter(format!(
            "spin representations are defined on the n = 2 frame, got n = {}",
            mf.n()
        )));
    }
    if r == 0 {
        return Err(Error::InvalidParameter("representation dimension must be positive".into()));
    }
    let comps = spin_matrices(r).into_iter().map(|j| j.map(|z| z * 2.0 * I)).collect();
    ModuleConnection::new(r, comps)
}
