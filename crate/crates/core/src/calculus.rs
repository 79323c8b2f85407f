//! Restricted derivation-based differential calculus over a finite frame.
//!
//! A frame is a finite family of derivations `X_0 … X_{N−1}` of an algebra,
//! closed under the bracket with constant coefficients
//! `[X_a, X_b] = f^c_{ab} X_c`. A `p`-form is a multilinear antisymmetric
//! map from `p` frame derivations to the algebra. It is determined by its
//! values on strictly increasing index tuples, which is all a [`Form`]
//! stores. Every operation here is written against the [`DerivationFrame`]
//! trait, so the matrix, matrix-function and Moyal calculi share it.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result};

/// An associative unital algebra over `C`, given as a context object that
/// knows how to combine its elements.
pub trait Algebra {
    type Elem: Clone + fmt::Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// `y ← y + c·x`.
    fn axpy(&self, y: &mut Self::Elem, c: Complex64, x: &Self::Elem);
    /// Sup-norm on coefficients; zero exactly for the zero element.
    fn norm(&self, a: &Self::Elem) -> f64;

    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        let mut out = a.clone();
        self.axpy(&mut out, Complex64::new(1.0, 0.0), b);
        out
    }

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        let mut out = a.clone();
        self.axpy(&mut out, Complex64::new(-1.0, 0.0), b);
        out
    }

    fn scale(&self, a: &Self::Elem, c: Complex64) -> Self::Elem {
        let mut out = self.zero();
        self.axpy(&mut out, c, a);
        out
    }

    fn commutator(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.sub(&self.mul(a, b), &self.mul(b, a))
    }

    /// Two-sided inverse, if the element is (stably) invertible.
    fn inverse(&self, a: &Self::Elem) -> Result<Self::Elem>;
}

/// Random sampling of algebra elements, used by property checks.
pub trait RandomElement: Algebra {
    fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;
}

/// Bracket constants `f^c_{ab}` of a frame, stored densely plus a sparse
/// index by target for the Koszul bracket sum.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    dim: usize,
    dense: Vec<Complex64>,
    /// `by_target[c]` lists `(a, b, f^c_{ab})` with `a < b` and nonzero `f`.
    by_target: Vec<Vec<(usize, usize, Complex64)>>,
}

impl StructureConstants {
    /// Builds the table from `f(c, a, b) = f^c_{ab}`; entries below
    /// `drop_below` in modulus are treated as zero.
    pub fn from_fn(
        dim: usize,
        drop_below: f64,
        mut f: impl FnMut(usize, usize, usize) -> Complex64,
    ) -> Self {
        let mut dense = vec![Complex64::default(); dim * dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    let v = f(c, a, b);
                    if v.norm() > drop_below {
                        dense[(a * dim + b) * dim + c] = v;
                    }
                }
            }
        }
        let mut by_target = vec![Vec::new(); dim];
        for a in 0..dim {
            for b in a + 1..dim {
                for (c, slot) in by_target.iter_mut().enumerate() {
                    let v = dense[(a * dim + b) * dim + c];
                    if v != Complex64::default() {
                        slot.push((a, b, v));
                    }
                }
            }
        }
        StructureConstants {
            dim,
            dense,
            by_target,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_fn(dim, 0.0, |_, _, _| Complex64::default())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `f^c_{ab}`.
    pub fn get(&self, c: usize, a: usize, b: usize) -> Complex64 {
        self.dense[(a * self.dim + b) * self.dim + c]
    }

    /// Coefficients of `[X_a, X_b]` in the frame.
    pub fn bracket(&self, a: usize, b: usize) -> Vec<Complex64> {
        (0..self.dim).map(|c| self.get(c, a, b)).collect()
    }

    /// Largest violation of antisymmetry `f^c_{ab} = −f^c_{ba}`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.dim {
            for b in 0..self.dim {
                for c in 0..self.dim {
                    worst = worst.max((self.get(c, a, b) + self.get(c, b, a)).norm());
                }
            }
        }
        worst
    }

    /// Largest violation of the Jacobi identity
    /// `f^p_{ab} f^q_{pc} + f^p_{bc} f^q_{pa} + f^p_{ca} f^q_{pb} = 0`.
    pub fn jacobi_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for q in 0..d {
                        let mut s = Complex64::default();
                        for p in 0..d {
                            s += self.get(p, a, b) * self.get(q, p, c)
                                + self.get(p, b, c) * self.get(q, p, a)
                                + self.get(p, c, a) * self.get(q, p, b);
                        }
                        worst = worst.max(s.norm());
                    }
                }
            }
        }
        worst
    }

    fn targets(&self, c: usize) -> &[(usize, usize, Complex64)] {
        &self.by_target[c]
    }
}

/// A finite frame of derivations acting on an algebra.
pub trait DerivationFrame: Algebra {
    /// Identifier stored in forms; two forms combine only if ids agree.
    fn frame_id(&self) -> String;
    fn dim(&self) -> usize;
    fn structure(&self) -> &StructureConstants;
    /// `X_a(x)`.
    fn act(&self, a: usize, x: &Self::Elem) -> Self::Elem;

    fn label(&self, a: usize) -> String {
        format!("X{a}")
    }
}

/// Element of the graded algebra of forms over a frame, possibly of mixed
/// degree. Keys are strictly increasing index tuples; the key length is the
/// degree of the component.
#[derive(Debug, Clone)]
pub struct Form<E> {
    frame: String,
    dim: usize,
    terms: BTreeMap<Vec<usize>, E>,
}

impl<E: Clone + fmt::Debug> Form<E> {
    pub fn zero<F: DerivationFrame<Elem = E>>(frame: &F) -> Self {
        Form {
            frame: frame.frame_id(),
            dim: frame.dim(),
            terms: BTreeMap::new(),
        }
    }

    /// Degree-0 form.
    pub fn scalar<F: DerivationFrame<Elem = E>>(frame: &F, a: E) -> Self {
        let mut f = Self::zero(frame);
        f.terms.insert(Vec::new(), a);
        f
    }

    /// The dual basis 1-form `θ^a`, with `θ^a(X_b) = δ^a_b`.
    pub fn basis_one_form<F: DerivationFrame<Elem = E>>(frame: &F, a: usize) -> Result<Self> {
        check_index(a, frame.dim())?;
        let mut f = Self::zero(frame);
        f.terms.insert(vec![a], frame.one());
        Ok(f)
    }

    /// Builds a form from explicit components. Index tuples may be in any
    /// order; they are sorted with the matching sign. Tuples with repeated
    /// indices are rejected.
    pub fn from_components<F: DerivationFrame<Elem = E>>(
        frame: &F,
        components: impl IntoIterator<Item = (Vec<usize>, E)>,
    ) -> Result<Self> {
        let mut f = Self::zero(frame);
        for (idx, coeff) in components {
            for &i in &idx {
                check_index(i, frame.dim())?;
            }
            let (sign, sorted) = sort_with_sign(&idx)
                .ok_or_else(|| Error::Format(format!("repeated frame index in {idx:?}")))?;
            f.accumulate(frame, sorted, Complex64::new(sign, 0.0), &coeff);
        }
        Ok(f)
    }

    /// Assembles a form from parts without any checks on the keys; the
    /// caller guarantees strictly increasing tuples below `dim`.
    pub(crate) fn from_raw(frame: String, dim: usize, terms: BTreeMap<Vec<usize>, E>) -> Self {
        Form { frame, dim, terms }
    }

    pub fn frame_id(&self) -> &str {
        &self.frame
    }

    pub fn frame_dim(&self) -> usize {
        self.dim
    }

    /// Stored components in lexicographic order of their index tuples.
    pub fn components(&self) -> impl Iterator<Item = (&[usize], &E)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn component(&self, indices: &[usize]) -> Option<&E> {
        self.terms.get(indices)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degrees with a stored component, ascending.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.terms.keys().map(Vec::len).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// The degree if the form is homogeneous (the zero form has none).
    pub fn degree(&self) -> Option<usize> {
        match self.degrees().as_slice() {
            [p] => Some(*p),
            _ => None,
        }
    }

    pub fn degree_part(&self, p: usize) -> Self {
        Form {
            frame: self.frame.clone(),
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.len() == p)
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn map_coeffs(&self, mut f: impl FnMut(&E) -> E) -> Self {
        Form {
            frame: self.frame.clone(),
            dim: self.dim,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
        }
    }

    /// Keeps components whose index tuple satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&[usize]) -> bool) -> Self {
        Form {
            frame: self.frame.clone(),
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Value of the form on the frame derivations `X_{indices[0]}, …`, which
    /// need not be sorted. Returns zero on repeated indices.
    pub fn eval<A: Algebra<Elem = E>>(&self, alg: &A, indices: &[usize]) -> E {
        match sort_with_sign(indices) {
            Some((sign, sorted)) => match self.terms.get(&sorted) {
                Some(v) if sign > 0.0 => v.clone(),
                Some(v) => alg.scale(v, Complex64::new(-1.0, 0.0)),
                None => alg.zero(),
            },
            None => alg.zero(),
        }
    }

    /// Value on `p` derivations given as constant linear combinations of
    /// the frame, `args[i] = Σ_a args[i][a] X_a`, by multilinearity.
    pub fn eval_combination<A: Algebra<Elem = E>>(&self, alg: &A, args: &[Vec<Complex64>]) -> E {
        let p = args.len();
        let mut out = alg.zero();
        for (key, v) in self.terms.iter().filter(|(k, _)| k.len() == p) {
            // Σ over assignments of the sorted key to the arguments: a determinant.
            let coeff = permutation_sum(p, |i, j| {
                args[i].get(key[j]).copied().unwrap_or_default()
            });
            if coeff != Complex64::default() {
                alg.axpy(&mut out, coeff, v);
            }
        }
        out
    }

    pub(crate) fn accumulate<A: Algebra<Elem = E>>(
        &mut self,
        alg: &A,
        key: Vec<usize>,
        c: Complex64,
        x: &E,
    ) {
        match self.terms.get_mut(&key) {
            Some(y) => alg.axpy(y, c, x),
            None => {
                let mut y = alg.zero();
                alg.axpy(&mut y, c, x);
                self.terms.insert(key, y);
            }
        }
    }

    /// Drops components that are exactly zero.
    pub fn pruned<A: Algebra<Elem = E>>(mut self, alg: &A) -> Self {
        self.terms.retain(|_, v| alg.norm(v) > 0.0);
        self
    }

    fn check_same_frame(&self, other: &Self) -> Result<()> {
        if self.frame != other.frame || self.dim != other.dim {
            return Err(Error::FrameMismatch {
                left: self.frame.clone(),
                right: other.frame.clone(),
            });
        }
        Ok(())
    }

    pub fn add<A: Algebra<Elem = E>>(&self, alg: &A, other: &Self) -> Result<Self> {
        self.linear_combination(alg, Complex64::new(1.0, 0.0), other)
    }

    pub fn sub<A: Algebra<Elem = E>>(&self, alg: &A, other: &Self) -> Result<Self> {
        self.linear_combination(alg, Complex64::new(-1.0, 0.0), other)
    }

    /// `self + c·other`.
    pub fn linear_combination<A: Algebra<Elem = E>>(
        &self,
        alg: &A,
        c: Complex64,
        other: &Self,
    ) -> Result<Self> {
        self.check_same_frame(other)?;
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.accumulate(alg, k.clone(), c, v);
        }
        Ok(out)
    }

    pub fn scale<A: Algebra<Elem = E>>(&self, alg: &A, c: Complex64) -> Self {
        self.map_coeffs(|v| alg.scale(v, c))
    }

    /// `a·ω`, multiplying every coefficient on the left.
    pub fn left_mul<A: Algebra<Elem = E>>(&self, alg: &A, a: &E) -> Self {
        self.map_coeffs(|v| alg.mul(a, v))
    }

    /// `ω·a`.
    pub fn right_mul<A: Algebra<Elem = E>>(&self, alg: &A, a: &E) -> Self {
        self.map_coeffs(|v| alg.mul(v, a))
    }

    /// Largest coefficient norm over all components.
    pub fn max_norm<A: Algebra<Elem = E>>(&self, alg: &A) -> f64 {
        self.terms.values().map(|v| alg.norm(v)).fold(0.0, f64::max)
    }

    /// Largest coefficient norm of `self − other`.
    pub fn distance<A: Algebra<Elem = E>>(&self, alg: &A, other: &Self) -> Result<f64> {
        Ok(self.sub(alg, other)?.max_norm(alg))
    }
}

fn check_index(a: usize, dim: usize) -> Result<()> {
    if a >= dim {
        return Err(Error::IndexOutOfRange { index: a, dim });
    }
    Ok(())
}

/// Sorts `indices` and returns the permutation sign, or `None` when an
/// index repeats.
pub fn sort_with_sign(indices: &[usize]) -> Option<(f64, Vec<usize>)> {
    let mut v = indices.to_vec();
    let mut sign = 1.0;
    // Insertion sort: each adjacent swap flips the sign.
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((sign, v))
}

/// `Σ_σ sgn(σ) Π_i m(i, σ(i))` over permutations of `0..p`.
fn permutation_sum(p: usize, m: impl Fn(usize, usize) -> Complex64) -> Complex64 {
    fn rec(
        i: usize,
        p: usize,
        used: &mut Vec<bool>,
        sign: f64,
        acc: Complex64,
        m: &dyn Fn(usize, usize) -> Complex64,
    ) -> Complex64 {
        if i == p {
            return acc * sign;
        }
        let mut total = Complex64::default();
        let mut s = sign;
        // Choosing the k-th unused column flips the sign once per skipped unused column.
        for j in 0..p {
            if used[j] {
                continue;
            }
            let v = m(i, j);
            if v != Complex64::default() {
                used[j] = true;
                total += rec(i + 1, p, used, s, acc * v, m);
                used[j] = false;
            }
            s = -s;
        }
        total
    }
    rec(0, p, &mut vec![false; p], 1.0, Complex64::new(1.0, 0.0), &m)
}

/// Merges two disjoint sorted tuples; the sign is that of the shuffle
/// placing `left` before `right`. `None` if they intersect.
fn shuffle(left: &[usize], right: &[usize]) -> Option<(f64, Vec<usize>)> {
    let mut out = Vec::with_capacity(left.len() + right.len());
    let (mut i, mut j) = (0, 0);
    let mut inversions = 0usize;
    while i < left.len() && j < right.len() {
        match left[i].cmp(&right[j]) {
            std::cmp::Ordering::Less => {
                out.push(left[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(right[j]);
                inversions += left.len() - i;
                j += 1;
            }
            std::cmp::Ordering::Equal => return None,
        }
    }
    out.extend_from_slice(&left[i..]);
    out.extend_from_slice(&right[j..]);
    Some((if inversions % 2 == 0 { 1.0 } else { -1.0 }, out))
}

/// Inserts `x` into the sorted tuple `rest`; returns the position it lands
/// at, or `None` if already present.
fn insert_sorted(rest: &[usize], x: usize) -> Option<(usize, Vec<usize>)> {
    match rest.binary_search(&x) {
        Ok(_) => None,
        Err(pos) => {
            let mut v = Vec::with_capacity(rest.len() + 1);
            v.extend_from_slice(&rest[..pos]);
            v.push(x);
            v.extend_from_slice(&rest[pos..]);
            Some((pos, v))
        }
    }
}

fn parity(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_frame<F: DerivationFrame>(frame: &F, w: &Form<F::Elem>) -> Result<()> {
    if w.frame != frame.frame_id() || w.dim != frame.dim() {
        return Err(Error::FrameMismatch {
            left: w.frame.clone(),
            right: frame.frame_id(),
        });
    }
    Ok(())
}

/// Graded product `ω∧η`. On increasing tuples the normalized permutation
/// sum reduces to a signed shuffle sum.
pub fn wedge<F: DerivationFrame>(
    frame: &F,
    omega: &Form<F::Elem>,
    eta: &Form<F::Elem>,
) -> Result<Form<F::Elem>> {
    check_frame(frame, omega)?;
    check_frame(frame, eta)?;
    let mut out = Form::zero(frame);
    for (i, w) in &omega.terms {
        for (j, v) in &eta.terms {
            if let Some((sign, k)) = shuffle(i, j) {
                let prod = frame.mul(w, v);
                out.accumulate(frame, k, Complex64::new(sign, 0.0), &prod);
            }
        }
    }
    Ok(out)
}

/// Graded commutator `[ω, η] = ω∧η − (−1)^{pq} η∧ω` for homogeneous parts.
pub fn graded_commutator<F: DerivationFrame>(
    frame: &F,
    omega: &Form<F::Elem>,
    eta: &Form<F::Elem>,
) -> Result<Form<F::Elem>> {
    let mut out = Form::zero(frame);
    for p in omega.degrees() {
        for q in eta.degrees() {
            let w = omega.degree_part(p);
            let v = eta.degree_part(q);
            let ab = wedge(frame, &w, &v)?;
            let ba = wedge(frame, &v, &w)?;
            out = out
                .add(frame, &ab)?
                .linear_combination(frame, Complex64::new(-parity(p * q), 0.0), &ba)?;
        }
    }
    Ok(out)
}

/// Koszul differential:
///
/// `dω(X_0,…,X_p) = Σ_i (−1)^i X_i ω(…X̂_i…)
///                 + Σ_{i<j} (−1)^{i+j} ω([X_i,X_j], …X̂_i…X̂_j…)`.
pub fn koszul_d<F: DerivationFrame>(frame: &F, omega: &Form<F::Elem>) -> Result<Form<F::Elem>> {
    check_frame(frame, omega)?;
    let n = frame.dim();
    let f = frame.structure();
    let mut out = Form::zero(frame);
    for (key, w) in &omega.terms {
        // Derivation terms: J = key ∪ {a}, a at position i.
        for a in 0..n {
            if let Some((pos, j)) = insert_sorted(key, a) {
                let xa = frame.act(a, w);
                out.accumulate(frame, j, Complex64::new(parity(pos), 0.0), &xa);
            }
        }
        // Bracket terms: ω(X_c, rest) = (−1)^q w for c = key[q].
        for (q, &c) in key.iter().enumerate() {
            let mut rest = key.clone();
            rest.remove(q);
            for &(a, b, fc) in f.targets(c) {
                let Some((pa, with_a)) = insert_sorted(&rest, a) else {
                    continue;
                };
                let Some((pb, j)) = insert_sorted(&with_a, b) else {
                    continue;
                };
                // a < b, so a keeps its position after b is inserted.
                let sign = parity(pa + pb + q);
                out.accumulate(frame, j, fc * sign, w);
            }
        }
    }
    Ok(out.pruned(frame))
}

/// Interior product `(i_X ω)(X_1,…) = ω(X, X_1,…)` with `X = X_a`.
pub fn interior<F: DerivationFrame>(
    frame: &F,
    a: usize,
    omega: &Form<F::Elem>,
) -> Result<Form<F::Elem>> {
    check_frame(frame, omega)?;
    check_index(a, frame.dim())?;
    let mut out = Form::zero(frame);
    for (key, w) in &omega.terms {
        if let Ok(pos) = key.binary_search(&a) {
            let mut rest = key.clone();
            rest.remove(pos);
            out.accumulate(frame, rest, Complex64::new(parity(pos), 0.0), w);
        }
    }
    Ok(out)
}

/// Lie derivative `L_X = i_X d + d i_X` along `X = X_a`.
pub fn lie_derivative<F: DerivationFrame>(
    frame: &F,
    a: usize,
    omega: &Form<F::Elem>,
) -> Result<Form<F::Elem>> {
    let i_d = interior(frame, a, &koszul_d(frame, omega)?)?;
    let d_i = koszul_d(frame, &interior(frame, a, omega)?)?;
    Ok(i_d.add(frame, &d_i)?.pruned(frame))
}

/// Membership of a form in the subspaces defined by the operation of a
/// subfamily of the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperationFlags {
    pub horizontal: bool,
    pub invariant: bool,
    pub basic: bool,
}

/// Tests `i_X ω = 0` and `L_X ω = 0` for every `X` in `sub`.
pub fn operation_subspaces<F: DerivationFrame>(
    frame: &F,
    sub: &[usize],
    omega: &Form<F::Elem>,
    tol: f64,
) -> Result<OperationFlags> {
    let mut horizontal = true;
    let mut invariant = true;
    for &a in sub {
        horizontal &= interior(frame, a, omega)?.max_norm(frame) <= tol;
        invariant &= lie_derivative(frame, a, omega)?.max_norm(frame) <= tol;
    }
    Ok(OperationFlags {
        horizontal,
        invariant,
        basic: horizontal && invariant,
    })
}

/// Strictly increasing `p`-tuples from `0..n` in lexicographic order.
pub fn index_tuples(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < p - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if p <= n {
        rec(0, n, p, &mut Vec::with_capacity(p), &mut out);
    }
    out
}

/// Random homogeneous form of degree `p`. With `max_terms = None` every
/// tuple gets a coefficient; otherwise a random subset of that size.
pub fn random_form<F, R>(frame: &F, p: usize, max_terms: Option<usize>, rng: &mut R) -> Form<F::Elem>
where
    F: DerivationFrame + RandomElement,
    R: Rng + ?Sized,
{
    let tuples = index_tuples(frame.dim(), p);
    let mut f = Form::zero(frame);
    match max_terms {
        None => {
            for t in tuples {
                let e = frame.random_element(rng);
                f.terms.insert(t, e);
            }
        }
        Some(k) => {
            if tuples.is_empty() {
                return f;
            }
            for _ in 0..k {
                let t = tuples[rng.gen_range(0..tuples.len())].clone();
                let e = frame.random_element(rng);
                f.accumulate(frame, t, Complex64::new(1.0, 0.0), &e);
            }
        }
    }
    f
}

/// Largest violation of the Leibniz rule `X_a(xy) = X_a(x) y + x X_a(y)`
/// over the given sample pairs.
pub fn leibniz_defect<F: DerivationFrame>(frame: &F, samples: &[(F::Elem, F::Elem)]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..frame.dim() {
        for (x, y) in samples {
            let lhs = frame.act(a, &frame.mul(x, y));
            let rhs = frame.add(
                &frame.mul(&frame.act(a, x), y),
                &frame.mul(x, &frame.act(a, y)),
            );
            worst = worst.max(frame.norm(&frame.sub(&lhs, &rhs)));
        }
    }
    worst
}

/// Largest violation of `[X_a, X_b] x = f^c_{ab} X_c x` over samples.
pub fn bracket_defect<F: DerivationFrame>(frame: &F, samples: &[F::Elem]) -> f64 {
    let n = frame.dim();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for x in samples {
                let ab = frame.act(a, &frame.act(b, x));
                let ba = frame.act(b, &frame.act(a, x));
                let mut lhs = frame.sub(&ab, &ba);
                for c in 0..n {
                    let fc = frame.structure().get(c, a, b);
                    if fc != Complex64::default() {
                        frame.axpy(&mut lhs, -fc, &frame.act(c, x));
                    }
                }
                worst = worst.max(frame.norm(&lhs));
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    //! Engine tests on a toy frame: the algebra `C^3` with pointwise
    //! product is too trivial, so we use 2x2 matrices with the three
    //! inner derivations `ad_{iσ_k}`, wired by hand independently of the
    //! matrix_geometry module.
    use super::*;
    use crate::algebra::{self, CMatrix};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    struct Toy {
        gens: Vec<CMatrix>,
        f: StructureConstants,
    }

    impl Toy {
        fn new() -> Self {
            let b = algebra::build_basis(2).unwrap();
            let gens: Vec<CMatrix> = b.elements().iter().map(|e| e * algebra::I).collect();
            // [iσ_a, iσ_b] = −2 ε_abc iσ_c
            let f = StructureConstants::from_fn(3, 0.0, |c, a, b| {
                let e = match (a, b, c) {
                    (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                    (1, 0, 2) | (2, 1, 0) | (0, 2, 1) => -1.0,
                    _ => 0.0,
                };
                Complex64::new(-2.0 * e, 0.0)
            });
            Toy { gens, f }
        }
    }

    impl Algebra for Toy {
        type Elem = CMatrix;
        fn zero(&self) -> CMatrix {
            algebra::zeros(2)
        }
        fn one(&self) -> CMatrix {
            algebra::identity(2)
        }
        fn mul(&self, a: &CMatrix, b: &CMatrix) -> CMatrix {
            a * b
        }
        fn axpy(&self, y: &mut CMatrix, c: Complex64, x: &CMatrix) {
            *y += x.map(|z| z * c);
        }
        fn norm(&self, a: &CMatrix) -> f64 {
            algebra::max_abs(a)
        }
        fn inverse(&self, a: &CMatrix) -> Result<CMatrix> {
            algebra::guarded_inverse(a, 1e-8)
        }
    }

    impl RandomElement for Toy {
        fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
            algebra::random_matrix(2, 2, rng)
        }
    }

    impl DerivationFrame for Toy {
        fn frame_id(&self) -> String {
            "toy".into()
        }
        fn dim(&self) -> usize {
            3
        }
        fn structure(&self) -> &StructureConstants {
            &self.f
        }
        fn act(&self, a: usize, x: &CMatrix) -> CMatrix {
            &self.gens[a] * x - x * &self.gens[a]
        }
    }

    fn close(t: &Toy, a: &Form<CMatrix>, b: &Form<CMatrix>, tol: f64) -> bool {
        a.distance(t, b).unwrap() <= tol
    }

    /// Brute force of the normalized permutation-sum product, evaluated on
    /// the frame tuple `args`.
    fn wedge_by_permutations(
        t: &Toy,
        w: &Form<CMatrix>,
        p: usize,
        v: &Form<CMatrix>,
        q: usize,
        args: &[usize],
    ) -> CMatrix {
        fn perms(n: usize) -> Vec<(f64, Vec<usize>)> {
            if n == 0 {
                return vec![(1.0, vec![])];
            }
            let mut out = Vec::new();
            for (s, p) in perms(n - 1) {
                for pos in 0..=p.len() {
                    let mut np = p.clone();
                    np.insert(pos, n - 1);
                    // Inserting at `pos` passes over (len − pos) larger-positioned entries.
                    let sign = if (p.len() - pos) % 2 == 0 { s } else { -s };
                    out.push((sign, np));
                }
            }
            out
        }
        let fact = |k: usize| (1..=k).product::<usize>() as f64;
        let mut total = algebra::zeros(2);
        for (s, sigma) in perms(p + q) {
            let first: Vec<usize> = sigma[..p].iter().map(|&i| args[i]).collect();
            let second: Vec<usize> = sigma[p..].iter().map(|&i| args[i]).collect();
            total += (w.eval(t, &first) * v.eval(t, &second)).map(|z| z * s);
        }
        total.map(|z| z / (fact(p) * fact(q)))
    }

    #[test]
    fn sign_helpers() {
        assert_eq!(sort_with_sign(&[2, 0, 1]), Some((1.0, vec![0, 1, 2])));
        assert_eq!(sort_with_sign(&[1, 0]), Some((-1.0, vec![0, 1])));
        assert_eq!(sort_with_sign(&[1, 1]), None);
        assert_eq!(shuffle(&[1], &[0]), Some((-1.0, vec![0, 1])));
        assert_eq!(shuffle(&[0, 2], &[1, 3]), Some((-1.0, vec![0, 1, 2, 3])));
        assert_eq!(shuffle(&[0, 2], &[2]), None);
        assert_eq!(index_tuples(4, 2).len(), 6);
        assert_eq!(index_tuples(3, 0), vec![Vec::<usize>::new()]);
        assert!(index_tuples(2, 3).is_empty());
    }

    #[test]
    fn basis_two_form_is_antisymmetric() {
        let t = Toy::new();
        let th1 = Form::basis_one_form(&t, 0).unwrap();
        let th2 = Form::basis_one_form(&t, 1).unwrap();
        let w = wedge(&t, &th1, &th2).unwrap();
        assert!(algebra::max_abs(&(w.eval(&t, &[0, 1]) - algebra::identity(2))) < 1e-15);
        assert!(algebra::max_abs(&(w.eval(&t, &[1, 0]) + algebra::identity(2))) < 1e-15);
    }

    #[test]
    fn degree_zero_wedge_is_product() {
        let t = Toy::new();
        let mut rng = StdRng::seed_from_u64(7);
        let a = t.random_element(&mut rng);
        let b = t.random_element(&mut rng);
        let w = wedge(&t, &Form::scalar(&t, a.clone()), &Form::scalar(&t, b.clone())).unwrap();
        assert!(algebra::max_abs(&(w.eval(&t, &[]) - a * b)) < 1e-15);
    }

    #[test]
    fn wedge_matches_permutation_sum() {
        let t = Toy::new();
        let e = algebra::build_basis(2).unwrap();
        let w = Form::from_components(&t, [(vec![0], e.element(0).clone())]).unwrap();
        let v = Form::from_components(&t, [(vec![1], e.element(1).clone())]).unwrap();
        let wv = wedge(&t, &w, &v).unwrap();
        let e1e2 = e.element(0) * e.element(1);
        assert!(algebra::max_abs(&(wv.eval(&t, &[0, 1]) - &e1e2)) < 1e-15);
        assert!(algebra::max_abs(&(wv.eval(&t, &[1, 0]) + &e1e2)) < 1e-15);
        assert!(algebra::max_abs(&(wv.eval(&t, &[0, 1]) - wedge_by_permutations(&t, &w, 1, &v, 1, &[0, 1]))) < 1e-15);

        let mut rng = StdRng::seed_from_u64(8);
        for (p, q) in [(1, 1), (1, 2), (2, 1), (0, 2), (3, 0)] {
            let w = random_form(&t, p, None, &mut rng);
            let v = random_form(&t, q, None, &mut rng);
            let wv = wedge(&t, &w, &v).unwrap();
            for args in index_tuples(3, p + q) {
                // Also check an unsorted argument order.
                let mut rev = args.clone();
                rev.reverse();
                for a in [args, rev] {
                    let brute = wedge_by_permutations(&t, &w, p, &v, q, &a);
                    assert!(algebra::max_abs(&(wv.eval(&t, &a) - brute)) < 1e-12, "p={p} q={q} {a:?}");
                }
            }
        }
    }

    /// Direct evaluation of the Koszul formula on an arbitrary argument list.
    fn koszul_by_definition(t: &Toy, w: &Form<CMatrix>, args: &[usize]) -> CMatrix {
        let n = args.len();
        let mut total = algebra::zeros(2);
        for i in 0..n {
            let rest: Vec<usize> = args.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, &x)| x).collect();
            total += t.act(args[i], &w.eval(t, &rest)).map(|z| z * parity(i));
        }
        for i in 0..n {
            for j in i + 1..n {
                let rest: Vec<usize> = args
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i && *k != j)
                    .map(|(_, &x)| x)
                    .collect();
                for c in 0..3 {
                    let fc = t.f.get(c, args[i], args[j]);
                    if fc == Complex64::default() {
                        continue;
                    }
                    let mut full = vec![c];
                    full.extend_from_slice(&rest);
                    total += w.eval(t, &full).map(|z| z * fc * parity(i + j));
                }
            }
        }
        total
    }

    #[test]
    fn koszul_matches_definition() {
        let t = Toy::new();
        let mut rng = StdRng::seed_from_u64(9);
        for p in 0..3 {
            let w = random_form(&t, p, None, &mut rng);
            let dw = koszul_d(&t, &w).unwrap();
            for args in index_tuples(3, p + 1) {
                let mut rot = args.clone();
                rot.rotate_left(1);
                for a in [args, rot] {
                    let brute = koszul_by_definition(&t, &w, &a);
                    assert!(algebra::max_abs(&(dw.eval(&t, &a) - brute)) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn d_of_unit_vanishes() {
        let t = Toy::new();
        let d1 = koszul_d(&t, &Form::scalar(&t, t.one())).unwrap();
        assert!(d1.max_norm(&t) < 1e-15);
        let l1 = lie_derivative(&t, 0, &Form::scalar(&t, t.one())).unwrap();
        assert!(l1.max_norm(&t) < 1e-15);
    }

    #[test]
    fn differential_squares_to_zero() {
        let t = Toy::new();
        let mut rng = StdRng::seed_from_u64(10);
        for _ in 0..50 {
            let p = rng.gen_range(0..3);
            let w = random_form(&t, p, None, &mut rng);
            let dd = koszul_d(&t, &koszul_d(&t, &w).unwrap()).unwrap();
            assert!(dd.max_norm(&t) < 1e-9);
        }
    }

    #[test]
    fn graded_leibniz_and_associativity() {
        let t = Toy::new();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..40 {
            let p = rng.gen_range(0..3);
            let q = rng.gen_range(0..=(3 - p));
            let w = random_form(&t, p, None, &mut rng);
            let v = random_form(&t, q, None, &mut rng);
            let lhs = koszul_d(&t, &wedge(&t, &w, &v).unwrap()).unwrap();
            let rhs = wedge(&t, &koszul_d(&t, &w).unwrap(), &v)
                .unwrap()
                .linear_combination(&t, Complex64::new(parity(p), 0.0), &wedge(&t, &w, &koszul_d(&t, &v).unwrap()).unwrap())
                .unwrap();
            assert!(close(&t, &lhs, &rhs, 1e-9));

            let u = random_form(&t, rng.gen_range(0..2), None, &mut rng);
            let l = wedge(&t, &wedge(&t, &w, &v).unwrap(), &u).unwrap();
            let r = wedge(&t, &w, &wedge(&t, &v, &u).unwrap()).unwrap();
            assert!(close(&t, &l, &r, 1e-9));
        }
    }

    #[test]
    fn interior_examples() {
        let t = Toy::new();
        let th = |a| Form::basis_one_form(&t, a).unwrap();
        let w = wedge(&t, &th(0), &th(1)).unwrap();
        assert!(close(&t, &interior(&t, 0, &w).unwrap(), &th(1), 0.0));
        assert!(close(&t, &interior(&t, 1, &w).unwrap(), &th(0).scale(&t, Complex64::new(-1.0, 0.0)), 0.0));
        let s = Form::scalar(&t, algebra::identity(2));
        assert!(interior(&t, 2, &s).unwrap().is_empty());
        assert!(matches!(interior(&t, 3, &s), Err(Error::IndexOutOfRange { index: 3, dim: 3 })));
        assert!(matches!(lie_derivative(&t, 5, &s), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn cartan_identities() {
        let t = Toy::new();
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..20 {
            let p = rng.gen_range(0..4);
            let w = random_form(&t, p, None, &mut rng);
            for a in 0..3 {
                for b in 0..3 {
                    let ia = |x: &Form<CMatrix>| interior(&t, a, x).unwrap();
                    let ib = |x: &Form<CMatrix>| interior(&t, b, x).unwrap();
                    let la = |x: &Form<CMatrix>| lie_derivative(&t, a, x).unwrap();
                    let lb = |x: &Form<CMatrix>| lie_derivative(&t, b, x).unwrap();
                    let br = t.f.bracket(a, b);
                    let i_br = (0..3).fold(Form::zero(&t), |acc, c| {
                        acc.linear_combination(&t, br[c], &interior(&t, c, &w).unwrap()).unwrap()
                    });
                    let l_br = (0..3).fold(Form::zero(&t), |acc, c| {
                        acc.linear_combination(&t, br[c], &lie_derivative(&t, c, &w).unwrap()).unwrap()
                    });

                    let s = ia(&ib(&w)).add(&t, &ib(&ia(&w))).unwrap();
                    assert!(s.max_norm(&t) < 1e-12);

                    let lhs = la(&ib(&w)).sub(&t, &ib(&la(&w))).unwrap();
                    assert!(close(&t, &lhs, &i_br, 1e-9));

                    let lhs = la(&lb(&w)).sub(&t, &lb(&la(&w))).unwrap();
                    assert!(close(&t, &lhs, &l_br, 1e-9));
                }
                let ld = lie_derivative(&t, a, &koszul_d(&t, &w).unwrap()).unwrap();
                let dl = koszul_d(&t, &lie_derivative(&t, a, &w).unwrap()).unwrap();
                assert!(close(&t, &ld, &dl, 1e-9));
            }
        }
    }

    #[test]
    fn operation_flags() {
        let t = Toy::new();
        let s = Form::scalar(&t, algebra::identity(2));
        let f = operation_subspaces(&t, &[0, 1, 2], &s, 1e-12).unwrap();
        assert_eq!(f, OperationFlags { horizontal: true, invariant: true, basic: true });
        let th = Form::basis_one_form(&t, 0).unwrap();
        let f = operation_subspaces(&t, &[0], &th, 1e-12).unwrap();
        assert!(!f.horizontal);
        assert!(!f.basic);
    }

    #[test]
    fn evaluation_is_multilinear() {
        let t = Toy::new();
        let mut rng = StdRng::seed_from_u64(13);
        let w = random_form(&t, 2, None, &mut rng);
        let u: Vec<Complex64> = (0..3).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let v: Vec<Complex64> = (0..3).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let direct = w.eval_combination(&t, &[u.clone(), v.clone()]);
        let mut expanded = algebra::zeros(2);
        for a in 0..3 {
            for b in 0..3 {
                expanded += w.eval(&t, &[a, b]).map(|z| z * u[a] * v[b]);
            }
        }
        assert!(algebra::max_abs(&(&direct - expanded)) < 1e-12);
        let swapped = w.eval_combination(&t, &[v, u]);
        assert!(algebra::max_abs(&(direct + swapped)) < 1e-12);
    }

    #[test]
    fn frame_mismatch_is_rejected() {
        let t = Toy::new();
        let mut other = Form::scalar(&t, t.one());
        other.frame = "elsewhere".into();
        assert!(matches!(wedge(&t, &other, &other), Err(Error::FrameMismatch { .. })));
    }

    #[test]
    fn repeated_index_rejected() {
        let t = Toy::new();
        assert!(Form::from_components(&t, [(vec![1, 1], t.one())]).is_err());
        let f = Form::from_components(&t, [(vec![2, 0], t.one())]).unwrap();
        assert!(algebra::max_abs(&(f.component(&[0, 2]).unwrap() + algebra::identity(2))) < 1e-15);
    }

    #[test]
    fn toy_frame_is_consistent() {
        let t = Toy::new();
        let mut rng = StdRng::seed_from_u64(14);
        let samples: Vec<_> = (0..5).map(|_| t.random_element(&mut rng)).collect();
        assert!(bracket_defect(&t, &samples) < 1e-12);
        assert!(t.f.jacobi_defect() < 1e-12);
        assert!(t.f.antisymmetry_defect() == 0.0);
        let pairs: Vec<_> = samples.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        assert!(leibniz_defect(&t, &pairs) < 1e-12);
    }

    #[test]
    fn empty_frame() {
        struct Empty(StructureConstants);
        impl Algebra for Empty {
            type Elem = CMatrix;
            fn zero(&self) -> CMatrix { algebra::zeros(2) }
            fn one(&self) -> CMatrix { algebra::identity(2) }
            fn mul(&self, a: &CMatrix, b: &CMatrix) -> CMatrix { a * b }
            fn axpy(&self, y: &mut CMatrix, c: Complex64, x: &CMatrix) { *y += x.map(|z| z * c); }
            fn norm(&self, a: &CMatrix) -> f64 { algebra::max_abs(a) }
            fn inverse(&self, a: &CMatrix) -> Result<CMatrix> { algebra::guarded_inverse(a, 1e-8) }
        }
        impl DerivationFrame for Empty {
            fn frame_id(&self) -> String { "empty".into() }
            fn dim(&self) -> usize { 0 }
            fn structure(&self) -> &StructureConstants { &self.0 }
            fn act(&self, _: usize, _: &CMatrix) -> CMatrix { unreachable!() }
        }
        let e = Empty(StructureConstants::zero(0));
        let mut rng = StdRng::seed_from_u64(15);
        let a = algebra::random_matrix(2, 2, &mut rng);
        let d = koszul_d(&e, &Form::scalar(&e, a)).unwrap();
        assert!(d.is_empty());
    }
}
