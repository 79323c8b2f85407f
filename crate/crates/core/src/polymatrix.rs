//! Matrix-valued polynomials on `R^m`: the finite model of `C^∞(M) ⊗ M_n`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::{self, CMatrix};
use crate::{Error, Result};

/// `Σ_e c_e x^e` with `c_e ∈ M_n(C)`; `e` is a multi-exponent of length `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMatrix {
    m: usize,
    n: usize,
    terms: BTreeMap<Vec<u32>, CMatrix>,
}

fn add_exp(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl PolyMatrix {
    pub fn zero(m: usize, n: usize) -> Self {
        PolyMatrix {
            m,
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(m: usize, a: CMatrix) -> Self {
        let n = a.nrows();
        let mut p = Self::zero(m, n);
        p.add_term(vec![0; m], &a);
        p
    }

    /// `x^exp · a`.
    pub fn monomial(exp: Vec<u32>, a: CMatrix) -> Self {
        let mut p = Self::zero(exp.len(), a.nrows());
        p.add_term(exp, &a);
        p
    }

    /// Scalar polynomial `Σ c_e x^e` times the identity.
    pub fn scalar(m: usize, n: usize, coeffs: impl IntoIterator<Item = (Vec<u32>, Complex64)>) -> Self {
        let mut p = Self::zero(m, n);
        let id = algebra::identity(n);
        for (e, c) in coeffs {
            p.add_term(e, &id.map(|z| z * c));
        }
        p
    }

    /// Builds from explicit terms; exponent lengths must equal `m` and
    /// coefficients must be `n × n`.
    pub fn from_terms(
        m: usize,
        n: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, CMatrix)>,
    ) -> Result<Self> {
        let mut p = Self::zero(m, n);
        for (e, c) in terms {
            if e.len() != m {
                return Err(Error::mismatch(format!("exponent of length {}", e.len()), format!("m = {m}")));
            }
            if c.shape() != (n, n) {
                return Err(Error::mismatch(format!("{}x{}", c.nrows(), c.ncols()), format!("{n}x{n}")));
            }
            p.add_term(e, &c);
        }
        Ok(p)
    }

    pub fn vars(&self) -> usize {
        self.m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &CMatrix)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn coefficient(&self, exp: &[u32]) -> Option<&CMatrix> {
        self.terms.get(exp)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    /// Coefficient of `x^0`.
    pub fn constant_part(&self) -> CMatrix {
        self.terms
            .get(&vec![0; self.m])
            .cloned()
            .unwrap_or_else(|| algebra::zeros(self.n))
    }

    pub(crate) fn add_term(&mut self, exp: Vec<u32>, c: &CMatrix) {
        self.add_scaled_term(exp, Complex64::new(1.0, 0.0), c);
    }

    fn add_scaled_term(&mut self, exp: Vec<u32>, s: Complex64, c: &CMatrix) {
        match self.terms.get_mut(&exp) {
            Some(y) => {
                y.zip_apply(c, |u, v| *u += s * v);
                if y.iter().all(|z| *z == Complex64::default()) {
                    self.terms.remove(&exp);
                }
            }
            None => {
                let v = c.map(|z| z * s);
                if v.iter().any(|z| *z != Complex64::default()) {
                    self.terms.insert(exp, v);
                }
            }
        }
    }

    /// `self + s·other`.
    pub fn axpy(&mut self, s: Complex64, other: &PolyMatrix) {
        for (e, c) in &other.terms {
            self.add_scaled_term(e.clone(), s, c);
        }
    }

    pub fn mul(&self, other: &PolyMatrix) -> PolyMatrix {
        let mut out = PolyMatrix::zero(self.m, self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(add_exp(ea, eb), &(ca * cb));
            }
        }
        out
    }

    /// `∂/∂x^μ`.
    pub fn derivative(&self, mu: usize) -> PolyMatrix {
        let mut out = PolyMatrix::zero(self.m, self.n);
        for (e, c) in &self.terms {
            if e[mu] > 0 {
                let mut f = e.clone();
                f[mu] -= 1;
                out.add_scaled_term(f, Complex64::new(e[mu] as f64, 0.0), c);
            }
        }
        out
    }

    /// Applies `f` to every coefficient.
    pub fn map_coeffs(&self, f: impl Fn(&CMatrix) -> CMatrix) -> PolyMatrix {
        let mut out = PolyMatrix::zero(self.m, self.n);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), &f(c));
        }
        out
    }

    /// Coefficient-wise conjugate transpose (variables are real).
    pub fn adjoint(&self) -> PolyMatrix {
        self.map_coeffs(|c| c.adjoint())
    }

    /// Entry-wise trace: a scalar polynomial, as exponent → coefficient.
    pub fn trace(&self) -> BTreeMap<Vec<u32>, Complex64> {
        let mut out = BTreeMap::new();
        for (e, c) in &self.terms {
            let t = algebra::trace(c);
            if t != Complex64::default() {
                out.insert(e.clone(), t);
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(algebra::max_abs).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: &[f64]) -> CMatrix {
        let mut out = algebra::zeros(self.n);
        for (e, c) in &self.terms {
            let w: f64 = e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product();
            out += c.map(|z| z * w);
        }
        out
    }

    fn entry(&self, i: usize, j: usize) -> ScalarPoly {
        let mut p = ScalarPoly::new();
        for (e, c) in &self.terms {
            if c[(i, j)] != Complex64::default() {
                p.insert(e.clone(), c[(i, j)]);
            }
        }
        p
    }

    /// Inverse inside the polynomial algebra. It exists iff `det` is a
    /// nonzero constant; the constant part must also pass the singular-value
    /// guard `rel_threshold`.
    pub fn inverse(&self, rel_threshold: f64, tol: f64) -> Result<PolyMatrix> {
        let n = self.n;
        algebra::guarded_inverse(&self.constant_part(), rel_threshold)?;
        let entries: Vec<Vec<ScalarPoly>> =
            (0..n).map(|i| (0..n).map(|j| self.entry(i, j)).collect()).collect();
        let det = determinant(&entries, self.m);
        let zero_exp = vec![0; self.m];
        let det0 = det.get(&zero_exp).copied().unwrap_or_default();
        let scale = 1.0 + det.values().map(|z| z.norm()).fold(0.0, f64::max);
        let nonconst = det
            .iter()
            .filter(|(e, _)| **e != zero_exp)
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max);
        if nonconst > tol * scale {
            return Err(Error::NotInvertible { ratio: 0.0 });
        }
        // adj(g)_{ij} = (−1)^{i+j} det(minor_{ji})
        let mut out = PolyMatrix::zero(self.m, n);
        for i in 0..n {
            for j in 0..n {
                let minor: Vec<Vec<ScalarPoly>> = (0..n)
                    .filter(|&r| r != j)
                    .map(|r| (0..n).filter(|&c| c != i).map(|c| entries[r][c].clone()).collect())
                    .collect();
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                for (e, z) in determinant(&minor, self.m) {
                    let mut unit = algebra::zeros(n);
                    unit[(i, j)] = z * sign / det0;
                    out.add_term(e, &unit);
                }
            }
        }
        Ok(out)
    }

    /// Random polynomial of total degree at most `max_degree` with up to
    /// `max_terms` random monomials.
    pub fn random<R: Rng + ?Sized>(
        m: usize,
        n: usize,
        max_degree: u32,
        max_terms: usize,
        rng: &mut R,
    ) -> PolyMatrix {
        let mut p = PolyMatrix::zero(m, n);
        for _ in 0..max_terms {
            let mut e = vec![0u32; m];
            let deg = rng.gen_range(0..=max_degree);
            for _ in 0..deg {
                if m > 0 {
                    e[rng.gen_range(0..m)] += 1;
                }
            }
            p.add_term(e, &algebra::random_matrix(n, n, rng));
        }
        p
    }
}

/// Scalar polynomial as exponent → coefficient.
pub type ScalarPoly = BTreeMap<Vec<u32>, Complex64>;

fn scalar_mul(a: &ScalarPoly, b: &ScalarPoly) -> ScalarPoly {
    let mut out = ScalarPoly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            *out.entry(add_exp(ea, eb)).or_default() += ca * cb;
        }
    }
    out.retain(|_, z| *z != Complex64::default());
    out
}

fn determinant(rows: &[Vec<ScalarPoly>], m: usize) -> ScalarPoly {
    let n = rows.len();
    if n == 0 {
        return ScalarPoly::from([(vec![0; m], Complex64::new(1.0, 0.0))]);
    }
    // Laplace expansion along the first row.
    let mut out = ScalarPoly::new();
    for j in 0..n {
        if rows[0][j].is_empty() {
            continue;
        }
        let minor: Vec<Vec<ScalarPoly>> = rows[1..]
            .iter()
            .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| v.clone()).collect())
            .collect();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        for (e, z) in scalar_mul(&rows[0][j], &determinant(&minor, m)) {
            *out.entry(e).or_default() += z * sign;
        }
    }
    out.retain(|_, z| *z != Complex64::default());
    out
}

/// `∫_box x^e dx` for the box `Π [lower_i, upper_i]`.
pub fn integrate_monomial(exp: &[u32], lower: &[f64], upper: &[f64]) -> f64 {
    exp.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&e, (&l, &u))| {
            let k = e as i32 + 1;
            (u.powi(k) - l.powi(k)) / k as f64
        })
        .product()
}
