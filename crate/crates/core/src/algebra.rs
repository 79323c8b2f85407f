//! Complex matrix arithmetic and the hermitian traceless basis of `sl_n`.
//!
//! The basis is the generalized Gell-Mann family: for each pair `j < k` a
//! symmetric and an antisymmetric off-diagonal matrix, and for each `l` a
//! diagonal matrix. For `n = 2` this is exactly the Pauli triple
//! `(σ_1, σ_2, σ_3)`; for `n = 3` the usual `λ_1 … λ_8` in the usual order.
//! With this normalization `tr(E_k E_l) = 2 δ_kl`, so the metric
//! `g_kl = tr(E_k E_l) / n` is `(2/n) δ_kl`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result};

/// Dense complex matrix. All algebra elements of `M_n(C)` and module
/// elements of `M_{r,n}` use this type.
pub type CMatrix = DMatrix<Complex64>;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Builds a matrix from real and imaginary parts given row by row.
pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<CMatrix> {
    let rows = re.len();
    if im.len() != rows {
        return Err(Error::mismatch(
            format!("{rows} real rows"),
            format!("{} imaginary rows", im.len()),
        ));
    }
    let cols = re.first().map_or(0, Vec::len);
    let mut m = CMatrix::zeros(rows, cols);
    for (i, (r, s)) in re.iter().zip(im).enumerate() {
        if r.len() != cols || s.len() != cols {
            return Err(Error::Format(format!("row {i} has inconsistent length")));
        }
        for j in 0..cols {
            m[(i, j)] = Complex64::new(r[j], s[j]);
        }
    }
    Ok(m)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Largest entry modulus; zero for empty matrices.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    a.is_square() && max_abs(&(a - a.adjoint())) <= tol
}

pub fn is_traceless(a: &CMatrix, tol: f64) -> bool {
    trace(a).norm() <= tol
}

fn check_same_square(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::mismatch(
            format!("{}x{}", a.nrows(), a.ncols()),
            format!("{}x{}", b.nrows(), b.ncols()),
        ));
    }
    Ok(())
}

/// `ab − ba`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_same_square(a, b)?;
    Ok(a * b - b * a)
}

/// The inner derivation `ad_γ(a) = [γ, a]`.
pub fn inner_derivation(gamma: &CMatrix, a: &CMatrix) -> Result<CMatrix> {
    commutator(gamma, a)
}

/// Inverse of `g`, rejected when the smallest singular value is below
/// `rel_threshold` times the largest.
pub fn guarded_inverse(g: &CMatrix, rel_threshold: f64) -> Result<CMatrix> {
    if !g.is_square() || g.nrows() == 0 {
        return Err(Error::mismatch(
            format!("{}x{}", g.nrows(), g.ncols()),
            "square matrix",
        ));
    }
    let sv = g.singular_values();
    let largest = sv.max();
    let smallest = sv.min();
    let ratio = if largest > 0.0 { smallest / largest } else { 0.0 };
    if ratio < rel_threshold {
        return Err(Error::NotInvertible { ratio });
    }
    g.clone()
        .try_inverse()
        .ok_or(Error::NotInvertible { ratio })
}

/// Matrix with real and imaginary parts drawn uniformly from [-1, 1].
pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let a = random_matrix(n, n, rng);
    (&a + a.adjoint()).scale(0.5)
}

/// Random matrix shifted towards the identity so that it is comfortably
/// invertible.
pub fn random_invertible<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    loop {
        let g = random_matrix(n, n, rng) + identity(n).scale(1.5);
        if guarded_inverse(&g, 1e-3).is_ok() {
            return g;
        }
    }
}

/// Haar-ish random unitary from the QR factorization of a random matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    random_invertible(n, rng).qr().q()
}

/// Hermitian traceless basis of `sl_n` with structure constants and metric.
#[derive(Debug, Clone)]
pub struct AlgebraBasis {
    n: usize,
    elements: Vec<CMatrix>,
    /// `structure[(k * dim + l) * dim + m] = C^m_{kl}`.
    structure: Vec<Complex64>,
    metric: DMatrix<f64>,
    metric_inv: DMatrix<f64>,
    det_metric: f64,
}

/// Builds the generalized Gell-Mann basis of `sl_n` and computes its
/// structure constants `[E_k, E_l] = C^m_{kl} E_m` and metric
/// `g_kl = tr(E_k E_l) / n` directly from the matrices.
pub fn build_basis(n: usize) -> Result<AlgebraBasis> {
    if n < 2 {
        return Err(Error::InvalidSize(n));
    }
    let mut elements = Vec::with_capacity(n * n - 1);
    for k in 1..n {
        for j in 0..k {
            let mut sym = zeros(n);
            sym[(j, k)] = c(1.0);
            sym[(k, j)] = c(1.0);
            elements.push(sym);

            let mut anti = zeros(n);
            anti[(j, k)] = -I;
            anti[(k, j)] = I;
            elements.push(anti);
        }
        let l = k as f64;
        let norm = (2.0 / (l * (l + 1.0))).sqrt();
        let mut diag = zeros(n);
        for j in 0..k {
            diag[(j, j)] = c(norm);
        }
        diag[(k, k)] = c(-l * norm);
        elements.push(diag);
    }
    AlgebraBasis::from_elements(n, elements)
}

impl AlgebraBasis {
    /// Computes metric and structure constants for an arbitrary basis of
    /// `sl_n` given as hermitian traceless matrices.
    pub fn from_elements(n: usize, elements: Vec<CMatrix>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(n));
        }
        let dim = n * n - 1;
        if elements.len() != dim {
            return Err(Error::mismatch(
                format!("{} basis elements", elements.len()),
                format!("{dim} required for n = {n}"),
            ));
        }
        if let Some(bad) = elements.iter().find(|e| e.shape() != (n, n)) {
            return Err(Error::mismatch(
                format!("{}x{}", bad.nrows(), bad.ncols()),
                format!("{n}x{n}"),
            ));
        }
        let inv_n = 1.0 / n as f64;
        let metric = DMatrix::from_fn(dim, dim, |k, l| {
            (trace(&(&elements[k] * &elements[l])) * inv_n).re
        });
        let metric_inv = metric
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Precondition("basis metric is singular".into()))?;
        let det_metric = metric.determinant();

        let mut structure = vec![Complex64::default(); dim * dim * dim];
        for k in 0..dim {
            for l in 0..dim {
                let br = &elements[k] * &elements[l] - &elements[l] * &elements[k];
                // Projections (1/n) tr(E_j [E_k, E_l]) raised with g^{-1}.
                let proj: Vec<Complex64> = elements
                    .iter()
                    .map(|ej| trace(&(ej * &br)) * inv_n)
                    .collect();
                for m in 0..dim {
                    let val: Complex64 = (0..dim).map(|j| proj[j] * metric_inv[(m, j)]).sum();
                    structure[(k * dim + l) * dim + m] = val;
                }
            }
        }
        Ok(AlgebraBasis {
            n,
            elements,
            structure,
            metric,
            metric_inv,
            det_metric,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of basis elements, `n² − 1`.
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, k: usize) -> &CMatrix {
        &self.elements[k]
    }

    /// `C^m_{kl}`.
    pub fn structure_constant(&self, m: usize, k: usize, l: usize) -> Complex64 {
        let d = self.dim();
        self.structure[(k * d + l) * d + m]
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    pub fn metric_inverse(&self) -> &DMatrix<f64> {
        &self.metric_inv
    }

    /// Determinant `|g|` of the metric.
    pub fn det_metric(&self) -> f64 {
        self.det_metric
    }

    /// Components `a^k` of the traceless part of `a` in the basis, so that
    /// `a − tr(a)/n = a^k E_k`.
    pub fn coordinates(&self, a: &CMatrix) -> Vec<Complex64> {
        let inv_n = 1.0 / self.n as f64;
        let proj: Vec<Complex64> = self
            .elements
            .iter()
            .map(|e| trace(&(a * e)) * inv_n)
            .collect();
        (0..self.dim())
            .map(|k| {
                (0..self.dim())
                    .map(|j| proj[j] * self.metric_inv[(k, j)])
                    .sum()
            })
            .collect()
    }

    /// `Σ_k coords[k] E_k`.
    pub fn combine(&self, coords: &[Complex64]) -> CMatrix {
        let mut out = zeros(self.n);
        for (e, x) in self.elements.iter().zip(coords) {
            out += e.map(|z| z * x);
        }
        out
    }
}
