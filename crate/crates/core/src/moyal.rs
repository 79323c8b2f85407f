//! Polynomial model of the Moyal plane.
//!
//! `Θ = θ [[0, −1], [1, 0]]`, so `[x^1, x^2]_⋆ = iΘ^{12} = −iθ`. On
//! polynomials the star product is the finite expansion
//!
//! `P⋆Q = Σ_n (1/n!) (i/2)^n Θ^{μ_1ν_1}⋯Θ^{μ_nν_n} (∂_{μ_1⋯μ_n} P)(∂_{ν_1⋯ν_n} Q)`.

use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::calculus::{Algebra, DerivationFrame, Form, RandomElement, StructureConstants};
use crate::{Error, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Deformation parameter `θ ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoyalConfig {
    theta: f64,
}

impl MoyalConfig {
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "theta must be finite and nonzero, got {theta}"
            )));
        }
        Ok(MoyalConfig { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `Θ^{μν}`, zero-based.
    pub fn theta_matrix(&self) -> [[f64; 2]; 2] {
        [[0.0, -self.theta], [self.theta, 0.0]]
    }

    /// `(Θ^{-1})_{μν}`.
    pub fn theta_inverse(&self) -> [[f64; 2]; 2] {
        [[0.0, 1.0 / self.theta], [-1.0 / self.theta, 0.0]]
    }
}

/// `Σ c_{(a,b)} (x^1)^a (x^2)^b` with complex coefficients.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MoyalPoly {
    terms: BTreeMap<(u32, u32), Complex64>,
}

impl MoyalPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(e1: u32, e2: u32, c: Complex64) -> Self {
        let mut p = Self::zero();
        p.add_term((e1, e2), c);
        p
    }

    pub fn x1() -> Self {
        Self::monomial(1, 0, ONE)
    }

    pub fn x2() -> Self {
        Self::monomial(0, 1, ONE)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ((u32, u32), Complex64)>) -> Self {
        let mut p = Self::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// Terms in ascending lexicographic order of exponents.
    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), Complex64)> + '_ {
        self.terms.iter().map(|(e, c)| (*e, *c))
    }

    pub fn coefficient(&self, e1: u32, e2: u32) -> Complex64 {
        self.terms.get(&(e1, e2)).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|(a, b)| a + b).max()
    }

    pub fn constant_part(&self) -> Complex64 {
        self.coefficient(0, 0)
    }

    /// `P_0 = P − P(0)`.
    pub fn without_constant(&self) -> Self {
        let mut p = self.clone();
        p.terms.remove(&(0, 0));
        p
    }

    fn add_term(&mut self, e: (u32, u32), c: Complex64) {
        let slot = self.terms.entry(e).or_default();
        *slot += c;
        if *slot == Complex64::default() {
            self.terms.remove(&e);
        }
    }

    /// `self + c·other`.
    pub fn axpy(&mut self, c: Complex64, other: &MoyalPoly) {
        for (e, v) in &other.terms {
            self.add_term(*e, c * v);
        }
    }

    pub fn add(&self, other: &MoyalPoly) -> MoyalPoly {
        let mut out = self.clone();
        out.axpy(ONE, other);
        out
    }

    pub fn sub(&self, other: &MoyalPoly) -> MoyalPoly {
        let mut out = self.clone();
        out.axpy(-ONE, other);
        out
    }

    pub fn scale(&self, c: Complex64) -> MoyalPoly {
        let mut out = MoyalPoly::zero();
        out.axpy(c, self);
        out
    }

    /// Commutative pointwise product.
    pub fn pointwise_mul(&self, other: &MoyalPoly) -> MoyalPoly {
        let mut out = MoyalPoly::zero();
        for ((a, b), c) in &self.terms {
            for ((p, q), d) in &other.terms {
                out.add_term((a + p, b + q), c * d);
            }
        }
        out
    }

    /// `∂/∂x^{var+1}`, `var ∈ {0, 1}`.
    pub fn derivative(&self, var: usize) -> MoyalPoly {
        let mut out = MoyalPoly::zero();
        for (&(a, b), c) in &self.terms {
            match var {
                0 if a > 0 => out.add_term((a - 1, b), c * a as f64),
                1 if b > 0 => out.add_term((a, b - 1), c * b as f64),
                _ => {}
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x1: f64, x2: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(a, b), c)| c * x1.powi(a as i32) * x2.powi(b as i32))
            .sum()
    }

    /// Random polynomial of total degree at most `max_degree` with up to
    /// `max_terms` monomials and coefficients in the unit square.
    pub fn random<R: Rng + ?Sized>(max_degree: u32, max_terms: usize, rng: &mut R) -> MoyalPoly {
        let mut p = MoyalPoly::zero();
        for _ in 0..max_terms {
            let d = rng.gen_range(0..=max_degree);
            let a = rng.gen_range(0..=d);
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            p.add_term((a, d - a), c);
        }
        p
    }
}

fn falling(a: u32, k: u32) -> f64 {
    (0..k).map(|j| (a - j) as f64).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    falling(n, k) / falling(k, k)
}

/// Moyal product `P⋆Q`; the series stops at order `min(deg P, deg Q)`.
pub fn star(p: &MoyalPoly, q: &MoyalPoly, cfg: &MoyalConfig) -> MoyalPoly {
    let t = cfg.theta_matrix();
    let (alpha, beta) = (t[0][1], t[1][0]);
    let mut out = MoyalPoly::zero();
    for (&(a, b), cp) in &p.terms {
        for (&(c, d), cq) in &q.terms {
            let order = (a + b).min(c + d);
            let mut pref = ONE;
            for n in 0..=order {
                if n > 0 {
                    pref *= I * 0.5 / n as f64;
                }
                // k pairs of type Θ^{12}: ∂_1^k ∂_2^{n−k} P · ∂_2^k ∂_1^{n−k} Q
                for k in 0..=n {
                    let r = n - k;
                    if k > a || r > b || k > d || r > c {
                        continue;
                    }
                    let w = binomial(n, k)
                        * alpha.powi(k as i32)
                        * beta.powi(r as i32)
                        * falling(a, k)
                        * falling(b, r)
                        * falling(d, k)
                        * falling(c, r);
                    out.add_term((a - k + c - r, b - r + d - k), cp * cq * pref * w);
                }
            }
        }
    }
    out
}

/// `[P, Q]_⋆ = P⋆Q − Q⋆P`.
pub fn star_commutator(p: &MoyalPoly, q: &MoyalPoly, cfg: &MoyalConfig) -> MoyalPoly {
    star(p, q, cfg).sub(&star(q, p, cfg))
}

/// `{P, Q} = iΘ^{μν} ∂_μP ∂_νQ`, normalized so that it equals the star
/// commutator when `deg P, deg Q ≤ 2`.
pub fn poisson_bracket(p: &MoyalPoly, q: &MoyalPoly, cfg: &MoyalConfig) -> MoyalPoly {
    let t = cfg.theta_matrix();
    let mut out = MoyalPoly::zero();
    for (mu, row) in t.iter().enumerate() {
        for (nu, &v) in row.iter().enumerate() {
            if v != 0.0 {
                let term = p.derivative(mu).pointwise_mul(&q.derivative(nu));
                out.axpy(I * v, &term);
            }
        }
    }
    out
}

/// Number of generators of the frame.
pub const ISP_DIM: usize = 5;

/// Frame of inner derivations `ad_P = [P, ·]_⋆` for
/// `P_μ = −iΘ^{-1}_{μν}x^ν`, `(x^1)²`, `(x^2)²`, `x^1x^2`.
#[derive(Debug, Clone)]
pub struct IspFrame {
    cfg: MoyalConfig,
    generators: Vec<MoyalPoly>,
    structure: StructureConstants,
    random_degree: u32,
}

impl IspFrame {
    pub fn new(cfg: MoyalConfig) -> Result<Self> {
        let ti = cfg.theta_inverse();
        let translation = |mu: usize| {
            MoyalPoly::from_terms([((1, 0), -I * ti[mu][0]), ((0, 1), -I * ti[mu][1])])
        };
        let generators = vec![
            translation(0),
            translation(1),
            MoyalPoly::monomial(2, 0, ONE),
            MoyalPoly::monomial(0, 2, ONE),
            MoyalPoly::monomial(1, 1, ONE),
        ];
        let mut frame = IspFrame {
            cfg,
            generators,
            structure: StructureConstants::zero(ISP_DIM),
            random_degree: 3,
        };
        let mut table = vec![[Complex64::default(); ISP_DIM]; ISP_DIM * ISP_DIM];
        for a in 0..ISP_DIM {
            for b in 0..ISP_DIM {
                let pb = poisson_bracket(&frame.generators[a], &frame.generators[b], &cfg);
                table[a * ISP_DIM + b] = frame.decompose(&pb)?;
            }
        }
        frame.structure =
            StructureConstants::from_fn(ISP_DIM, 1e-14, |c, a, b| table[a * ISP_DIM + b][c]);
        Ok(frame)
    }

    pub fn config(&self) -> &MoyalConfig {
        &self.cfg
    }

    pub fn generator(&self, a: usize) -> &MoyalPoly {
        &self.generators[a]
    }

    /// Total degree bound for [`RandomElement::random_element`].
    pub fn with_random_degree(mut self, degree: u32) -> Self {
        self.random_degree = degree;
        self
    }

    /// Frame coefficients of `ad_P` for `deg P ≤ 2`; the constant part of
    /// `P` is central and drops out.
    pub fn decompose(&self, p: &MoyalPoly) -> Result<[Complex64; ISP_DIM]> {
        let mut out = [Complex64::default(); ISP_DIM];
        for ((a, b), c) in p.terms() {
            match (a, b) {
                (0, 0) => {}
                (1, 0) => out[1] += c / self.generators[1].coefficient(1, 0),
                (0, 1) => out[0] += c / self.generators[0].coefficient(0, 1),
                (2, 0) => out[2] += c,
                (0, 2) => out[3] += c,
                (1, 1) => out[4] += c,
                _ => {
                    return Err(Error::Precondition(format!(
                        "x1^{a}*x2^{b} is outside the degree-2 generating space"
                    )))
                }
            }
        }
        Ok(out)
    }
}

impl Algebra for IspFrame {
    type Elem = MoyalPoly;

    fn zero(&self) -> MoyalPoly {
        MoyalPoly::zero()
    }

    fn one(&self) -> MoyalPoly {
        MoyalPoly::constant(ONE)
    }

    fn mul(&self, a: &MoyalPoly, b: &MoyalPoly) -> MoyalPoly {
        star(a, b, &self.cfg)
    }

    fn axpy(&self, y: &mut MoyalPoly, c: Complex64, x: &MoyalPoly) {
        y.axpy(c, x);
    }

    fn norm(&self, a: &MoyalPoly) -> f64 {
        a.max_abs()
    }

    /// Only nonzero constants are invertible: the top-degree part of a star
    /// product is the pointwise product.
    fn inverse(&self, a: &MoyalPoly) -> Result<MoyalPoly> {
        let c = a.constant_part();
        if a.degree().unwrap_or(0) > 0 || c == Complex64::default() {
            return Err(Error::NotInvertible { ratio: 0.0 });
        }
        Ok(MoyalPoly::constant(c.inv()))
    }
}

impl RandomElement for IspFrame {
    fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> MoyalPoly {
        MoyalPoly::random(self.random_degree, 4, rng)
    }
}

impl DerivationFrame for IspFrame {
    fn frame_id(&self) -> String {
        format!("isp:theta={}", self.cfg.theta)
    }

    fn dim(&self) -> usize {
        ISP_DIM
    }

    fn structure(&self) -> &StructureConstants {
        &self.structure
    }

    fn act(&self, a: usize, x: &MoyalPoly) -> MoyalPoly {
        star_commutator(&self.generators[a], x, &self.cfg)
    }

    fn label(&self, a: usize) -> String {
        ["P1", "P2", "x1^2", "x2^2", "x1*x2"][a].to_string()
    }
}

/// `η(ad_P) = P_0`: on the frame, the generating polynomials.
pub fn canonical_eta(frame: &IspFrame) -> Form<MoyalPoly> {
    let comps = (0..ISP_DIM).map(|a| (vec![a], frame.generator(a).without_constant()));
    Form::from_components(frame, comps).expect("frame indices are in range")
}

/// `η(ad_P)` for a polynomial of degree at most 2.
pub fn eta_of(frame: &IspFrame, p: &MoyalPoly) -> Result<MoyalPoly> {
    let coeffs = frame.decompose(p)?;
    Ok(canonical_eta(frame).eval_combination(frame, &[coeffs.to_vec()]))
}

/// `Ω(X, Y) = η([X, Y]) − [η(X), η(Y)]_⋆` on all frame pairs.
pub fn canonical_curvature(frame: &IspFrame) -> Form<MoyalPoly> {
    let eta = canonical_eta(frame);
    let mut comps = Vec::new();
    for a in 0..ISP_DIM {
        for b in a + 1..ISP_DIM {
            let bracket = frame.structure().bracket(a, b);
            let mut v = eta.eval_combination(frame, &[bracket]);
            v.axpy(
                -ONE,
                &star_commutator(&eta.eval(frame, &[a]), &eta.eval(frame, &[b]), frame.config()),
            );
            if !v.is_zero() {
                comps.push((vec![a, b], v));
            }
        }
    }
    Form::from_components(frame, comps).expect("frame indices are in range")
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn fmt_monomial(a: u32, b: u32) -> String {
    let var = |name: &str, e: u32| match e {
        0 => None,
        1 => Some(name.to_string()),
        _ => Some(format!("{name}^{e}")),
    };
    [var("x1", a), var("x2", b)]
        .into_iter()
        .flatten()
        .collect::<Vec<_>>()
        .join("*")
}

/// Terms by descending total degree, then descending power of `x1`.
/// Real and imaginary coefficients print bare (`-0.5i`, `2*x1`); general
/// ones as `(a+bi)`.
impl fmt::Display for MoyalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut keys: Vec<&(u32, u32)> = self.terms.keys().collect();
        keys.sort_by_key(|&&(a, b)| (Reverse(a + b), Reverse(a)));
        for (i, &&(a, b)) in keys.iter().enumerate() {
            let c = self.terms[&(a, b)];
            let (neg, body) = if c.im == 0.0 {
                (c.re < 0.0, fmt_num(c.re.abs()))
            } else if c.re == 0.0 {
                let s = c.im.abs();
                (c.im < 0.0, if s == 1.0 { "i".into() } else { format!("{}i", fmt_num(s)) })
            } else {
                let sign = if c.im < 0.0 { '-' } else { '+' };
                (false, format!("({}{}{}i)", fmt_num(c.re), sign, fmt_num(c.im.abs())))
            };
            let mono = fmt_monomial(a, b);
            let term = match (mono.is_empty(), body.as_str()) {
                (true, _) => body,
                (false, "1") => mono,
                (false, _) => format!("{body}*{mono}"),
            };
            match (i, neg) {
                (0, true) => write!(f, "-{term}")?,
                (0, false) => write!(f, "{term}")?,
                (_, true) => write!(f, " - {term}")?,
                (_, false) => write!(f, " + {term}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Imag(f64),
    Var(u8),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            ' ' | '\t' | '\n' => i += 1,
            '+' | '-' | '*' | '^' | '(' | ')' => {
                out.push(match ch {
                    '+' => Token::Plus,
                    '-' => Token::Minus,
                    '*' => Token::Star,
                    '^' => Token::Caret,
                    '(' => Token::LParen,
                    _ => Token::RParen,
                });
                i += 1;
            }
            'i' => {
                out.push(Token::Imag(1.0));
                i += 1;
            }
            'x' => {
                match chars.get(i + 1) {
                    Some('1') => out.push(Token::Var(0)),
                    Some('2') => out.push(Token::Var(1)),
                    _ => return Err(Error::Parse(format!("expected x1 or x2 at offset {i}"))),
                }
                i += 2;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number '{text}'")))?;
                if chars.get(i) == Some(&'i') {
                    out.push(Token::Imag(v));
                    i += 1;
                } else {
                    out.push(Token::Num(v));
                }
            }
            other => return Err(Error::Parse(format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<MoyalPoly> {
        let mut acc = self.term()?;
        while let Some(t) = self.peek() {
            let sign = match t {
                Token::Plus => ONE,
                Token::Minus => -ONE,
                _ => break,
            };
            self.pos += 1;
            acc.axpy(sign, &self.term()?);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<MoyalPoly> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Token::Star) {
            self.pos += 1;
            acc = acc.pointwise_mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<MoyalPoly> {
        match self.peek() {
            Some(Token::Minus) => {
                self.pos += 1;
                return Ok(self.factor()?.scale(-ONE));
            }
            Some(Token::Plus) => {
                self.pos += 1;
                return self.factor();
            }
            _ => {}
        }
        let base = self.atom()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            let e = match self.next() {
                Some(Token::Num(v)) if v.fract() == 0.0 && (0.0..=1024.0).contains(&v) => v as u32,
                _ => return Err(Error::Parse("exponent must be a non-negative integer".into())),
            };
            let mut out = MoyalPoly::constant(ONE);
            for _ in 0..e {
                out = out.pointwise_mul(&base);
            }
            return Ok(out);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<MoyalPoly> {
        match self.next() {
            Some(Token::Num(v)) => Ok(MoyalPoly::constant(Complex64::new(v, 0.0))),
            Some(Token::Imag(v)) => Ok(MoyalPoly::constant(Complex64::new(0.0, v))),
            Some(Token::Var(0)) => Ok(MoyalPoly::x1()),
            Some(Token::Var(_)) => Ok(MoyalPoly::x2()),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(Error::Parse("missing ')'".into())),
                }
            }
            Some(t) => Err(Error::Parse(format!("unexpected token {t:?}"))),
            None => Err(Error::Parse("unexpected end of input".into())),
        }
    }
}

/// Parses sums of products of numbers, `i`, `x1`, `x2`, powers and
/// parentheses, e.g. `(2+3i)*x1^2*x2 + x1`.
impl FromStr for MoyalPoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            tokens: tokenize(s)?,
            pos: 0,
        };
        if p.tokens.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let out = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!("trailing input at token {}", p.pos)));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{graded_commutator, interior, koszul_d, lie_derivative, random_form};
    use crate::connections::{curvature_on_a, ConnectionOnA};
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn cfg(theta: f64) -> MoyalConfig {
        MoyalConfig::new(theta).unwrap()
    }

    fn p(s: &str) -> MoyalPoly {
        s.parse().unwrap()
    }

    fn close(a: &MoyalPoly, b: &MoyalPoly, tol: f64) -> bool {
        a.sub(b).max_abs() <= tol
    }

    /// Star product by the defining multi-index sum over all
    /// `(μ_1ν_1, …, μ_nν_n)`, without grouping terms.
    fn star_oracle(p: &MoyalPoly, q: &MoyalPoly, cfg: &MoyalConfig) -> MoyalPoly {
        let t = cfg.theta_matrix();
        let order = p.degree().unwrap_or(0).min(q.degree().unwrap_or(0));
        let mut out = MoyalPoly::zero();
        let mut fact = 1.0;
        for n in 0..=order {
            if n > 0 {
                fact *= n as f64;
            }
            for code in 0..4usize.pow(n) {
                let mut dp = p.clone();
                let mut dq = q.clone();
                let mut w = 1.0;
                let mut c = code;
                for _ in 0..n {
                    let (mu, nu) = ((c % 4) / 2, c % 2);
                    c /= 4;
                    w *= t[mu][nu];
                    dp = dp.derivative(mu);
                    dq = dq.derivative(nu);
                }
                if w != 0.0 {
                    let pref = (I * 0.5).powu(n) * (w / fact);
                    out.axpy(pref, &dp.pointwise_mul(&dq));
                }
            }
        }
        out
    }

    #[test]
    fn config_validation() {
        assert!(MoyalConfig::new(0.0).is_err());
        assert!(MoyalConfig::new(f64::NAN).is_err());
        let c = cfg(0.7);
        let (t, ti) = (c.theta_matrix(), c.theta_inverse());
        for i in 0..2 {
            for j in 0..2 {
                let v: f64 = (0..2).map(|k| t[i][k] * ti[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unit_is_neutral() {
        let c = cfg(1.3);
        let q = p("(2+3i)*x1^2*x2 + x1 - 4*x2^3");
        let one = MoyalPoly::constant(ONE);
        assert_eq!(star(&one, &q, &c), q);
        assert_eq!(star(&q, &one, &c), q);
    }

    #[test]
    fn coordinate_commutator() {
        let c = cfg(1.0);
        let comm = star_commutator(&MoyalPoly::x1(), &MoyalPoly::x2(), &c);
        assert_eq!(comm, MoyalPoly::constant(I * c.theta_matrix()[0][1]));
        assert_eq!(comm, MoyalPoly::constant(Complex64::new(0.0, -1.0)));
        // x1·x2 = x2·x1 pointwise but not under ⋆
        assert_eq!(
            MoyalPoly::x1().pointwise_mul(&MoyalPoly::x2()),
            MoyalPoly::x2().pointwise_mul(&MoyalPoly::x1())
        );
        assert_ne!(star(&MoyalPoly::x1(), &MoyalPoly::x2(), &c), star(&MoyalPoly::x2(), &MoyalPoly::x1(), &c));
    }

    #[test]
    fn x1_squared_star_x2() {
        let theta = 0.8;
        let got = star(&p("x1^2"), &MoyalPoly::x2(), &cfg(theta));
        let want = p("x1^2*x2").add(&MoyalPoly::monomial(1, 0, Complex64::new(0.0, -theta)));
        assert!(close(&got, &want, 1e-15));
    }

    #[test]
    fn x1x2_commutator_with_x1() {
        // [x1x2, x1]⋆ = x1[x2,x1]⋆ = iθ x1 ; {x1x2, x1} = iΘ^{21} x1 = iθ x1
        let c = cfg(1.5);
        let lhs = star_commutator(&p("x1*x2"), &MoyalPoly::x1(), &c);
        let want = MoyalPoly::monomial(1, 0, Complex64::new(0.0, 1.5));
        assert!(close(&lhs, &want, 1e-15));
        assert!(close(&poisson_bracket(&p("x1*x2"), &MoyalPoly::x1(), &c), &want, 1e-15));
    }

    #[test]
    fn star_matches_multi_index_oracle() {
        let c = cfg(0.9);
        let mut rng = StdRng::seed_from_u64(60);
        for _ in 0..30 {
            let a = MoyalPoly::random(4, 4, &mut rng);
            let b = MoyalPoly::random(4, 4, &mut rng);
            assert!(close(&star(&a, &b, &c), &star_oracle(&a, &b, &c), 1e-12));
        }
    }

    #[test]
    fn degree_bound() {
        let c = cfg(2.0);
        let mut rng = StdRng::seed_from_u64(61);
        for _ in 0..20 {
            let a = MoyalPoly::random(3, 3, &mut rng);
            let b = MoyalPoly::random(3, 3, &mut rng);
            let d = star(&a, &b, &c).degree().unwrap_or(0);
            assert!(d <= a.degree().unwrap_or(0) + b.degree().unwrap_or(0));
        }
    }

    #[test]
    fn poisson_with_constant_vanishes() {
        let c = cfg(1.0);
        let q = p("x1^3 + i*x2");
        assert!(poisson_bracket(&q, &p("3 + 2i"), &c).is_zero());
    }

    #[test]
    fn frame_translations_are_partial_derivatives() {
        let f = IspFrame::new(cfg(0.6)).unwrap();
        assert!(close(&f.act(0, &MoyalPoly::x1()), &MoyalPoly::constant(ONE), 1e-14));
        assert!(f.act(0, &MoyalPoly::x2()).is_zero());
        assert!(close(&f.act(1, &MoyalPoly::x2()), &MoyalPoly::constant(ONE), 1e-14));
        let mut rng = StdRng::seed_from_u64(62);
        for _ in 0..20 {
            let a = MoyalPoly::random(5, 5, &mut rng);
            for mu in 0..2 {
                assert!(close(&f.act(mu, &a), &a.derivative(mu), 1e-12));
            }
        }
    }

    #[test]
    fn frame_structure() {
        let f = IspFrame::new(cfg(1.0)).unwrap();
        let s = f.structure();
        // translations commute
        assert!(s.bracket(0, 1).iter().all(|z| z.norm() == 0.0));
        // rotation with translation stays in the translations
        for r in 2..5 {
            for t in 0..2 {
                assert!(s.bracket(r, t)[2..].iter().all(|z| z.norm() == 0.0));
            }
            for r2 in 2..5 {
                assert!(s.bracket(r, r2)[..2].iter().all(|z| z.norm() == 0.0));
            }
        }
        assert!(s.antisymmetry_defect() < 1e-14);
        assert!(s.jacobi_defect() < 1e-12);
        let mut rng = StdRng::seed_from_u64(63);
        let samples: Vec<_> = (0..10).map(|_| f.random_element(&mut rng)).collect();
        assert!(crate::calculus::bracket_defect(&f, &samples) < 1e-10);
        assert!(crate::calculus::leibniz_defect(&f, &[(samples[0].clone(), samples[1].clone())]) < 1e-10);
    }

    #[test]
    fn decompose_rejects_high_degree() {
        let f = IspFrame::new(cfg(1.0)).unwrap();
        assert!(f.decompose(&p("x1^3")).is_err());
        assert!(f.decompose(&p("7")).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn only_constants_invert() {
        let f = IspFrame::new(cfg(1.0)).unwrap();
        assert_eq!(f.inverse(&p("2")).unwrap(), p("0.5"));
        assert!(f.inverse(&p("1 + x1")).is_err());
        assert!(f.inverse(&MoyalPoly::zero()).is_err());
    }

    #[test]
    fn eta_values() {
        let theta = 1.7;
        let f = IspFrame::new(cfg(theta)).unwrap();
        let eta = canonical_eta(&f);
        let ti = f.config().theta_inverse();
        for mu in 0..2 {
            let want = MoyalPoly::from_terms([((1, 0), -I * ti[mu][0]), ((0, 1), -I * ti[mu][1])]);
            assert_eq!(eta.eval(&f, &[mu]), want);
        }
        assert_eq!(eta.eval(&f, &[2]), p("x1^2"));
        let q = p("3 - 2*x1*x2 + i*x2^2 + x1");
        assert!(close(&eta_of(&f, &q).unwrap(), &q.without_constant(), 1e-12));
    }

    #[test]
    fn d_is_commutator_with_eta() {
        let f = IspFrame::new(cfg(0.5)).unwrap();
        let eta = canonical_eta(&f);
        let mut rng = StdRng::seed_from_u64(64);
        for _ in 0..30 {
            let a = Form::scalar(&f, MoyalPoly::random(4, 5, &mut rng));
            let da = koszul_d(&f, &a).unwrap();
            let comm = graded_commutator(&f, &eta, &a).unwrap();
            assert!(da.distance(&f, &comm).unwrap() < 1e-10);
        }
    }

    #[test]
    fn curvature_lives_on_the_translations() {
        for theta in [0.5, 1.0, 2.0] {
            let f = IspFrame::new(cfg(theta)).unwrap();
            let omega = canonical_curvature(&f);
            let keys: Vec<Vec<usize>> = omega.components().map(|(k, _)| k.to_vec()).collect();
            assert_eq!(keys, vec![vec![0, 1]]);
            // −[η(P1), η(P2)]⋆ by direct commutator of the linear polynomials
            let ti = f.config().theta_inverse();
            let e1 = MoyalPoly::from_terms([((0, 1), -I * ti[0][1])]);
            let e2 = MoyalPoly::from_terms([((1, 0), -I * ti[1][0])]);
            let oracle = star_commutator(&e1, &e2, f.config()).scale(-ONE);
            let v = omega.eval(&f, &[0, 1]);
            assert!(close(&v, &oracle, 1e-14));
            assert!(close(&v, &MoyalPoly::constant(Complex64::new(0.0, -1.0 / theta)), 1e-14));
        }
    }

    #[test]
    fn curvature_matches_connection_minus_eta() {
        let f = IspFrame::new(cfg(1.2)).unwrap();
        let conn = ConnectionOnA::new(canonical_eta(&f).scale(&f, -ONE)).unwrap();
        let from_conn = curvature_on_a(&f, &conn).unwrap();
        assert!(from_conn.distance(&f, &canonical_curvature(&f)).unwrap() < 1e-12);
    }

    #[test]
    fn central_shift_leaves_commutators() {
        let f = IspFrame::new(cfg(1.0)).unwrap();
        let eta = canonical_eta(&f);
        let mut rng = StdRng::seed_from_u64(65);
        let shift: Vec<Complex64> =
            (0..5).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        for a in 0..5 {
            for b in 0..5 {
                let base = star_commutator(&eta.eval(&f, &[a]), &eta.eval(&f, &[b]), f.config());
                let ea = eta.eval(&f, &[a]).add(&MoyalPoly::constant(shift[a]));
                let eb = eta.eval(&f, &[b]).add(&MoyalPoly::constant(shift[b]));
                assert!(close(&star_commutator(&ea, &eb, f.config()), &base, 1e-14));
            }
        }
    }

    #[test]
    fn calculus_identities_over_isp() {
        let f = IspFrame::new(cfg(0.9)).unwrap();
        let mut rng = StdRng::seed_from_u64(66);
        for p in 0..3 {
            let w = random_form(&f, p, Some(3), &mut rng);
            let dw = koszul_d(&f, &w).unwrap();
            assert!(koszul_d(&f, &dw).unwrap().max_norm(&f) < 1e-9);
            for a in 0..5 {
                let ld = lie_derivative(&f, a, &dw).unwrap();
                let dl = koszul_d(&f, &lie_derivative(&f, a, &w).unwrap()).unwrap();
                assert!(ld.distance(&f, &dl).unwrap() < 1e-9);
                for b in 0..5 {
                    // [L_a, i_b] = i_{[X_a, X_b]}
                    let lhs = lie_derivative(&f, a, &interior(&f, b, &w).unwrap())
                        .unwrap()
                        .sub(&f, &interior(&f, b, &lie_derivative(&f, a, &w).unwrap()).unwrap())
                        .unwrap();
                    let mut rhs = Form::zero(&f);
                    for (c, z) in f.structure().bracket(a, b).into_iter().enumerate() {
                        rhs = rhs.linear_combination(&f, z, &interior(&f, c, &w).unwrap()).unwrap();
                    }
                    assert!(lhs.distance(&f, &rhs).unwrap() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn display_examples() {
        let c = cfg(1.0);
        assert_eq!(star(&MoyalPoly::x1(), &MoyalPoly::x2(), &c).to_string(), "x1*x2 - 0.5i");
        assert_eq!(MoyalPoly::zero().to_string(), "0");
        assert_eq!(p("x1 + (2+3i)*x1^2*x2").to_string(), "(2+3i)*x1^2*x2 + x1");
        assert_eq!(p("-x2 + 1 - i*x1").to_string(), "-i*x1 - x2 + 1");
        assert_eq!(p("(1-2.5i)").to_string(), "(1-2.5i)");
        assert_eq!(p("-3*x1*x2^2 + 2i").to_string(), "-3*x1*x2^2 + 2i");
    }

    #[test]
    fn parse_forms() {
        assert_eq!(p("x1*x1"), p("x1^2"));
        assert_eq!(p("2*(x1 + x2)"), p("2*x1 + 2*x2"));
        assert_eq!(p("1e-3*x2"), MoyalPoly::monomial(0, 1, Complex64::new(1e-3, 0.0)));
        assert_eq!(p("x1 - x1"), MoyalPoly::zero());
        for bad in ["", "x3", "x1 +", "(x1", "x1^-1", "x1^1.5", "y", "x1 x2"] {
            assert!(matches!(bad.parse::<MoyalPoly>(), Err(Error::Parse(_))), "{bad}");
        }
    }

    fn arb_poly() -> impl Strategy<Value = MoyalPoly> {
        prop::collection::vec(((0u32..4, 0u32..4), (-5.0f64..5.0, -5.0f64..5.0)), 0..6).prop_map(|ts| {
            MoyalPoly::from_terms(ts.into_iter().map(|(e, (re, im))| (e, Complex64::new(re, im))))
        })
    }

    fn arb_quadratic() -> impl Strategy<Value = MoyalPoly> {
        prop::collection::vec(((0u32..3, 0u32..3), (-5.0f64..5.0, -5.0f64..5.0)), 0..6).prop_map(|ts| {
            MoyalPoly::from_terms(
                ts.into_iter()
                    .filter(|((a, b), _)| a + b <= 2)
                    .map(|(e, (re, im))| (e, Complex64::new(re, im))),
            )
        })
    }

    proptest! {
        #[test]
        fn text_round_trip(q in arb_poly()) {
            prop_assert_eq!(q.to_string().parse::<MoyalPoly>().unwrap(), q);
        }

        #[test]
        fn star_is_associative(seed in any::<u64>(), theta in 0.2f64..3.0) {
            let c = cfg(theta);
            let mut rng = StdRng::seed_from_u64(seed);
            let a = MoyalPoly::random(4, 4, &mut rng);
            let b = MoyalPoly::random(4, 4, &mut rng);
            let d = MoyalPoly::random(4, 4, &mut rng);
            let lhs = star(&star(&a, &b, &c), &d, &c);
            let rhs = star(&a, &star(&b, &d, &c), &c);
            prop_assert!(close(&lhs, &rhs, 1e-9 * (1.0 + lhs.max_abs())));
        }

        #[test]
        fn commutator_is_poisson_up_to_degree_two(a in arb_quadratic(), b in arb_quadratic(), theta in 0.2f64..3.0) {
            let c = cfg(theta);
            prop_assert!(close(&star_commutator(&a, &b, &c), &poisson_bracket(&a, &b, &c), 1e-12));
        }

        #[test]
        fn poisson_jacobi(a in arb_quadratic(), b in arb_quadratic(), d in arb_quadratic()) {
            let c = cfg(1.1);
            let pb = |x: &MoyalPoly, y: &MoyalPoly| poisson_bracket(x, y, &c);
            let s = pb(&a, &pb(&b, &d)).add(&pb(&b, &pb(&d, &a))).add(&pb(&d, &pb(&a, &b)));
            prop_assert!(s.max_abs() < 1e-9);
        }

        #[test]
        fn ad_is_a_star_derivation(g in arb_quadratic(), q in arb_poly(), r in arb_poly()) {
            let c = cfg(0.7);
            let lhs = star_commutator(&g, &star(&q, &r, &c), &c);
            let rhs = star(&star_commutator(&g, &q, &c), &r, &c).add(&star(&q, &star_commutator(&g, &r, &c), &c));
            prop_assert!(close(&lhs, &rhs, 1e-8 * (1.0 + lhs.max_abs())));
        }
    }
}
