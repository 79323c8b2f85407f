//! JSON exchange formats.
//!
//! Complex numbers are `{"re", "im"}` objects, matrices are
//! `{"n", "re", "im"}` with row-major nested arrays, and forms list their
//! components in lexicographic order of the index tuples. Exporting and
//! re-importing a value reproduces it exactly.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::algebra::{self, AlgebraBasis, CMatrix};
use crate::calculus::{DerivationFrame, Form};
use crate::connections::{ConnectionOnA, ModuleConnection};
use crate::matrix_functions::{MixedFrame, SpatialFrame};
use crate::matrix_geometry::MatrixFrame;
use crate::moyal::{IspFrame, MoyalConfig, MoyalPoly};
use crate::polymatrix::PolyMatrix;
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

/// Adding `0.0` maps `-0.0` to `0.0` so that output does not depend on the
/// sign of zero.
fn clean(x: f64) -> f64 {
    x + 0.0
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        ComplexJson {
            re: clean(z.re),
            im: clean(z.im),
        }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(z: ComplexJson) -> Self {
        Complex64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

pub fn matrix_to_json(a: &CMatrix) -> MatrixJson {
    let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| f(&a[(i, j)])).collect()).collect()
    };
    MatrixJson {
        n: a.nrows(),
        re: rows(|z| clean(z.re)),
        im: rows(|z| clean(z.im)),
    }
}

/// Square `n × n` matrix; the row count must equal `n`.
pub fn matrix_from_json(j: &MatrixJson) -> Result<CMatrix> {
    let a = algebra::from_parts(&j.re, &j.im)?;
    if a.shape() != (j.n, j.n) {
        return Err(Error::Format(format!(
            "matrix declared n = {} but has shape {}x{}",
            j.n,
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisJson {
    pub n: usize,
    #[serde(rename = "E")]
    pub elements: Vec<MatrixJson>,
    /// `C[k][l][m] = C^m_{kl}`.
    #[serde(rename = "C")]
    pub structure: Vec<Vec<Vec<ComplexJson>>>,
    pub g: Vec<Vec<f64>>,
}

pub fn basis_to_json(b: &AlgebraBasis) -> BasisJson {
    let d = b.dim();
    BasisJson {
        n: b.n(),
        elements: b.elements().iter().map(matrix_to_json).collect(),
        structure: (0..d)
            .map(|k| (0..d).map(|l| (0..d).map(|m| b.structure_constant(m, k, l).into()).collect()).collect())
            .collect(),
        g: (0..d).map(|i| (0..d).map(|j| clean(b.metric()[(i, j)])).collect()).collect(),
    }
}

/// Rebuilds the basis from `E` and checks that the stored `C` and `g`
/// agree with it.
pub fn basis_from_json(j: &BasisJson) -> Result<AlgebraBasis> {
    let elements = j.elements.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
    let b = AlgebraBasis::from_elements(j.n, elements)?;
    let d = b.dim();
    let consistent = j.structure.len() == d
        && j.g.len() == d
        && j.structure.iter().enumerate().all(|(k, rows)| {
            rows.len() == d
                && rows.iter().enumerate().all(|(l, col)| {
                    col.len() == d
                        && col.iter().enumerate().all(|(m, z)| {
                            (Complex64::from(*z) - b.structure_constant(m, k, l)).norm() < 1e-9
                        })
                })
        })
        && j.g.iter().enumerate().all(|(i, row)| {
            row.len() == d && row.iter().enumerate().all(|(k, v)| (v - b.metric()[(i, k)]).abs() < 1e-9)
        });
    if !consistent {
        return Err(Error::Format("structure constants or metric disagree with the basis".into()));
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTermJson {
    pub exp: Vec<u32>,
    pub coeff: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyMatrixJson {
    pub m: usize,
    pub terms: Vec<PolyTermJson>,
}

pub fn polymatrix_to_json(p: &PolyMatrix) -> PolyMatrixJson {
    PolyMatrixJson {
        m: p.vars(),
        terms: p
            .terms()
            .map(|(e, c)| PolyTermJson {
                exp: e.to_vec(),
                coeff: matrix_to_json(c),
            })
            .collect(),
    }
}

/// `n` is the size of the coefficients; it cannot be read off an empty
/// polynomial, so the caller supplies it.
pub fn polymatrix_from_json(j: &PolyMatrixJson, n: usize) -> Result<PolyMatrix> {
    let terms = j
        .terms
        .iter()
        .map(|t| Ok((t.exp.clone(), matrix_from_json(&t.coeff)?)))
        .collect::<Result<Vec<_>>>()?;
    PolyMatrix::from_terms(j.m, n, terms).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoyalTermJson {
    pub exp: [u32; 2],
    pub coeff: ComplexJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoyalPolyJson {
    pub terms: Vec<MoyalTermJson>,
}

pub fn moyal_to_json(p: &MoyalPoly) -> MoyalPolyJson {
    MoyalPolyJson {
        terms: p
            .terms()
            .map(|((a, b), c)| MoyalTermJson {
                exp: [a, b],
                coeff: c.into(),
            })
            .collect(),
    }
}

pub fn moyal_from_json(j: &MoyalPolyJson) -> MoyalPoly {
    MoyalPoly::from_terms(j.terms.iter().map(|t| ((t.exp[0], t.exp[1]), t.coeff.into())))
}

/// Coefficient types that can appear in a form file.
pub trait CoeffJson: Sized {
    type Json: Serialize + DeserializeOwned;
    fn to_json(&self) -> Self::Json;
    /// `like` is the zero element of the target frame, used to fix shapes.
    fn from_json(j: &Self::Json, like: &Self) -> Result<Self>;
}

impl CoeffJson for CMatrix {
    type Json = MatrixJson;

    fn to_json(&self) -> MatrixJson {
        matrix_to_json(self)
    }

    fn from_json(j: &MatrixJson, like: &CMatrix) -> Result<CMatrix> {
        let a = matrix_from_json(j)?;
        if a.shape() != like.shape() {
            return Err(Error::Format(format!("coefficient of size {} in a frame of size {}", j.n, like.nrows())));
        }
        Ok(a)
    }
}

impl CoeffJson for PolyMatrix {
    type Json = PolyMatrixJson;

    fn to_json(&self) -> PolyMatrixJson {
        polymatrix_to_json(self)
    }

    fn from_json(j: &PolyMatrixJson, like: &PolyMatrix) -> Result<PolyMatrix> {
        if j.m != like.vars() {
            return Err(Error::Format(format!("polynomial in {} variables, frame has {}", j.m, like.vars())));
        }
        polymatrix_from_json(j, like.size())
    }
}

impl CoeffJson for MoyalPoly {
    type Json = MoyalPolyJson;

    fn to_json(&self) -> MoyalPolyJson {
        moyal_to_json(self)
    }

    fn from_json(j: &MoyalPolyJson, _like: &MoyalPoly) -> Result<MoyalPoly> {
        Ok(moyal_from_json(j))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentJson<C> {
    pub degree: usize,
    pub indices: Vec<usize>,
    pub coeff: C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormJson<C> {
    pub frame: String,
    pub components: Vec<ComponentJson<C>>,
}

/// Components ordered by degree, then lexicographically by indices.
pub fn form_to_json<E: CoeffJson + Clone + std::fmt::Debug>(f: &Form<E>) -> FormJson<E::Json> {
    let mut components: Vec<ComponentJson<E::Json>> = f
        .components()
        .map(|(k, v)| ComponentJson {
            degree: k.len(),
            indices: k.to_vec(),
            coeff: v.to_json(),
        })
        .collect();
    components.sort_by(|a, b| (a.degree, &a.indices).cmp(&(b.degree, &b.indices)));
    FormJson {
        frame: f.frame_id().to_string(),
        components,
    }
}

pub fn form_from_json<F>(frame: &F, j: &FormJson<<F::Elem as CoeffJson>::Json>) -> Result<Form<F::Elem>>
where
    F: DerivationFrame,
    F::Elem: CoeffJson,
{
    if j.frame != frame.frame_id() {
        return Err(Error::FrameMismatch {
            left: j.frame.clone(),
            right: frame.frame_id(),
        });
    }
    let like = frame.zero();
    let mut comps = Vec::with_capacity(j.components.len());
    let mut seen = std::collections::BTreeSet::new();
    for c in &j.components {
        if c.degree != c.indices.len() {
            return Err(Error::Format(format!(
                "component {:?} declares degree {}",
                c.indices, c.degree
            )));
        }
        if !c.indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Format(format!("indices {:?} are not strictly increasing", c.indices)));
        }
        if let Some(&bad) = c.indices.iter().find(|&&i| i >= frame.dim()) {
            return Err(Error::Format(format!("index {bad} out of range for dimension {}", frame.dim())));
        }
        if !seen.insert(c.indices.clone()) {
            return Err(Error::Format(format!("duplicate component {:?}", c.indices)));
        }
        comps.push((c.indices.clone(), F::Elem::from_json(&c.coeff, &like)?));
    }
    Form::from_components(frame, comps)
}

/// A frame reconstructed from the id stored in a form file.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameSpec {
    Matrix { n: usize },
    Mixed { m: usize, n: usize },
    Spatial { m: usize },
    Isp { theta: f64 },
}

impl FrameSpec {
    /// Parses ids such as `matrix:n=2`, `mixed:m=2,n=2`, `spatial:m=2`,
    /// `isp:theta=1`.
    pub fn parse(id: &str) -> Result<Self> {
        let bad = || Error::Format(format!("unrecognized frame id `{id}`"));
        let (kind, rest) = id.split_once(':').ok_or_else(bad)?;
        let mut params = std::collections::BTreeMap::new();
        for kv in rest.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            params.insert(k, v);
        }
        let int = |k: &str| -> Result<usize> { params.get(k).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let spec = match kind {
            "matrix" if params.len() == 1 => FrameSpec::Matrix { n: int("n")? },
            "mixed" if params.len() == 2 => FrameSpec::Mixed { m: int("m")?, n: int("n")? },
            "spatial" if params.len() == 1 => FrameSpec::Spatial { m: int("m")? },
            "isp" if params.len() == 1 => FrameSpec::Isp {
                theta: params.get("theta").ok_or_else(bad)?.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

/// Reads only the `frame` field of a form document.
pub fn peek_frame(text: &str) -> Result<FrameSpec> {
    #[derive(Deserialize)]
    struct Head {
        frame: String,
    }
    let head: Head = serde_json::from_str(text)?;
    FrameSpec::parse(&head.frame)
}

/// A form together with the frame it lives on.
#[derive(Debug, Clone)]
pub enum AnyForm {
    Matrix(MatrixFrame, Form<CMatrix>),
    Mixed(MixedFrame, Form<PolyMatrix>),
    Spatial(SpatialFrame, Form<PolyMatrix>),
    Isp(IspFrame, Form<MoyalPoly>),
}

/// Parses a form document on whichever frame it names. Frame parameters
/// that are mathematically invalid (e.g. `n = 1`) are domain errors.
pub fn parse_form(text: &str) -> Result<AnyForm> {
    let out = match peek_frame(text)? {
        FrameSpec::Matrix { n } => {
            let f = MatrixFrame::gell_mann(n)?;
            let form = form_from_json(&f, &serde_json::from_str(text)?)?;
            AnyForm::Matrix(f, form)
        }
        FrameSpec::Mixed { m, n } => {
            let f = MixedFrame::gell_mann(m, n)?;
            let form = form_from_json(&f, &serde_json::from_str(text)?)?;
            AnyForm::Mixed(f, form)
        }
        FrameSpec::Spatial { m } => {
            let f = SpatialFrame::new(m);
            let form = form_from_json(&f, &serde_json::from_str(text)?)?;
            AnyForm::Spatial(f, form)
        }
        FrameSpec::Isp { theta } => {
            let f = IspFrame::new(MoyalConfig::new(theta)?)?;
            let form = form_from_json(&f, &serde_json::from_str(text)?)?;
            AnyForm::Isp(f, form)
        }
    };
    Ok(out)
}

impl AnyForm {
    pub fn to_json_value(&self) -> serde_json::Value {
        let v = match self {
            AnyForm::Matrix(_, f) => serde_json::to_value(form_to_json(f)),
            AnyForm::Mixed(_, f) | AnyForm::Spatial(_, f) => serde_json::to_value(form_to_json(f)),
            AnyForm::Isp(_, f) => serde_json::to_value(form_to_json(f)),
        };
        v.expect("form documents serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConnectionKind {
    #[serde(rename = "onA")]
    OnA,
    #[serde(rename = "module")]
    Module,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionJson {
    #[serde(rename = "type")]
    pub kind: ConnectionKind,
    pub r: usize,
    #[serde(rename = "A")]
    pub components: Vec<MatrixJson>,
}

/// A connection over the matrix frame of size `n`, where `n² − 1` is the
/// number of components.
#[derive(Debug, Clone)]
pub enum AnyConnection {
    /// `ω = Σ A_k θ^k` on `A = M_n`.
    OnA { frame: MatrixFrame, conn: ConnectionOnA<CMatrix> },
    /// `∇̂ = ∇̂^{−iθ} + A_k θ^k` on `M_{r,n}`.
    Module { frame: MatrixFrame, conn: ModuleConnection },
}

fn size_from_components(len: usize) -> Result<usize> {
    let n = ((len + 1) as f64).sqrt().round() as usize;
    if n < 2 || n * n - 1 != len {
        return Err(Error::Format(format!("{len} components is not n^2 - 1 for any n >= 2")));
    }
    Ok(n)
}

pub fn connection_from_json(j: &ConnectionJson) -> Result<AnyConnection> {
    let n = size_from_components(j.components.len())?;
    let frame = MatrixFrame::gell_mann(n)?;
    let a = j.components.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
    if let Some(bad) = a.iter().find(|x| x.nrows() != j.r) {
        return Err(Error::Format(format!("component of size {} in a connection of rank {}", bad.nrows(), j.r)));
    }
    match j.kind {
        ConnectionKind::OnA => {
            if j.r != n {
                return Err(Error::Format(format!("onA connection needs r = n = {n}, got r = {}", j.r)));
            }
            let form = Form::from_components(&frame, a.into_iter().enumerate().map(|(k, x)| (vec![k], x)))?;
            Ok(AnyConnection::OnA {
                frame,
                conn: ConnectionOnA::new(form)?,
            })
        }
        ConnectionKind::Module => Ok(AnyConnection::Module {
            conn: ModuleConnection::new(j.r, a)?,
            frame,
        }),
    }
}

pub fn connection_to_json(c: &AnyConnection) -> ConnectionJson {
    match c {
        AnyConnection::OnA { frame, conn } => ConnectionJson {
            kind: ConnectionKind::OnA,
            r: frame.n(),
            components: (0..frame.dim())
                .map(|k| matrix_to_json(&conn.form().eval(frame, &[k])))
                .collect(),
        },
        AnyConnection::Module { conn, .. } => ConnectionJson {
            kind: ConnectionKind::Module,
            r: conn.rank(),
            components: conn.components().iter().map(matrix_to_json).collect(),
        },
    }
}

/// Deterministic compact JSON.
pub fn to_compact<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("values serialize")
}

/// Deterministic indented JSON.
pub fn to_pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("values serialize")
}
