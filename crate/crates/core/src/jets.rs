//! Exact differentiation of polynomial fields along the left-invariant frame
//! of the Heisenberg group.
//!
//! Coordinates are ordered `t1, x1, y1, z1, …, tn, xn, yn, zn, x, y, z`; the
//! last three are the central (vertical) coordinates `ω = x r3 + y r1 + z r2`.
//! Frame fields are generated from the group law: the left-invariant field
//! for the direction `v` in slot `a` is `∂_v + 2 Im(q_a v̄)·∂_ω`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::paraquat::ParaQuaternion;
use crate::tensor::{PqcFrameData, Tensor2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("unknown frame field {0}")]
    UnknownField(String),
    #[error("unknown coordinate {0:?}")]
    UnknownCoordinate(String),
    #[error("polynomial has {found} variables, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Number of coordinates of the chart for quaternionic dimension `n`.
pub fn coordinate_count(n: usize) -> usize {
    4 * n + 3
}

/// Coordinate names in chart order.
pub fn coordinate_names(n: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(coordinate_count(n));
    for a in 1..=n {
        for c in ["t", "x", "y", "z"] {
            names.push(format!("{c}{a}"));
        }
    }
    names.extend(["x", "y", "z"].map(String::from));
    names
}

/// Chart index of a coordinate name such as `t1`, `z2` or `y`.
pub fn coordinate_index(name: &str, n: usize) -> Option<usize> {
    let mut chars = name.chars();
    let head = chars.next()?;
    let rest = chars.as_str();
    let slot = match head {
        't' => 0,
        'x' => 1,
        'y' => 2,
        'z' => 3,
        _ => return None,
    };
    if rest.is_empty() {
        return if slot == 0 { None } else { Some(4 * n + slot - 1) };
    }
    if rest.starts_with('0') || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let a: usize = rest.parse().ok()?;
    (1..=n).contains(&a).then(|| 4 * (a - 1) + slot)
}

/// Exact multivariate polynomial with floating coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

pub type ScalarField = Polynomial;

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(c, vec![0; nvars]);
        p
    }

    /// The coordinate function with chart index `i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(1.0, e);
        p
    }

    /// Sum of `(coefficient, exponent vector)` pairs; repeated monomials merge.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (f64, Vec<u32>)>) -> Result<Self, JetError> {
        let mut p = Self::zero(nvars);
        for (c, e) in terms {
            if e.len() != nvars {
                return Err(JetError::DimensionMismatch {
                    expected: nvars,
                    found: e.len(),
                });
            }
            p.add_term(c, e);
        }
        Ok(p)
    }

    fn add_term(&mut self, c: f64, e: Vec<u32>) {
        if c == 0.0 {
            return;
        }
        let slot = self.terms.entry(e).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Whether the chart variable `i` appears.
    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|e| e[i] > 0)
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(c * f64::from(e[i]), e2);
        }
        out
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.nvars, "point dimension");
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(point)
                    .filter(|(k, _)| **k > 0)
                    .fold(*c, |acc, (k, x)| acc * x.powi(*k as i32))
            })
            .sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(c * s, e.clone());
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*c, e.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(c1 * c2, e);
            }
        }
        out
    }

    /// Largest absolute coefficient.
    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let n = (self.nvars - 3) / 4;
        let names = coordinate_names(n);
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (i, p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "*{}", names[i])?,
                    _ => write!(f, "*{}^{p}", names[i])?,
                }
            }
        }
        Ok(())
    }
}

/// A frame field of the Heisenberg group.
///
/// Horizontal fields use the adapted index `4a + k` with the quadruple order
/// `(T_a, Y_a, Z_a, X_a) = (e, I_1 e, I_2 e, I_3 e)`; `Reeb(s)` is `ξ_{s+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldId {
    Horizontal(usize),
    Reeb(usize),
}

impl FieldId {
    /// `T_a` for `a ∈ 1..=n`.
    pub fn t(a: usize) -> Self {
        Self::Horizontal(4 * (a - 1))
    }
    pub fn y(a: usize) -> Self {
        Self::Horizontal(4 * (a - 1) + 1)
    }
    pub fn z(a: usize) -> Self {
        Self::Horizontal(4 * (a - 1) + 2)
    }
    pub fn x(a: usize) -> Self {
        Self::Horizontal(4 * (a - 1) + 3)
    }
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Horizontal(k) => {
                let name = ["T", "Y", "Z", "X"][k % 4];
                write!(f, "{name}_{}", k / 4 + 1)
            }
            Self::Reeb(s) => write!(f, "xi_{}", s + 1),
        }
    }
}

/// Direction in the paraquaternion line of a horizontal adapted index slot.
pub fn adapted_direction(k: usize) -> ParaQuaternion {
    [
        ParaQuaternion::ONE,
        ParaQuaternion::R1,
        ParaQuaternion::R2,
        ParaQuaternion::R3,
    ][k % 4]
}

/// Chart index of the central coordinate carrying the `r_s` component (`s ∈ 1..=3`).
pub fn central_index(n: usize, s: usize) -> usize {
    match s {
        3 => 4 * n,
        1 => 4 * n + 1,
        2 => 4 * n + 2,
        _ => panic!("imaginary unit index must be 1, 2 or 3, got {s}"),
    }
}

fn embed_imaginary(n: usize, p: ParaQuaternion) -> [(usize, f64); 3] {
    [
        (central_index(n, 3), p.x),
        (central_index(n, 1), p.y),
        (central_index(n, 2), p.z),
    ]
}

/// First-order differential operator with linear polynomial coefficients.
///
/// Coefficients are stored as `constant + Σ linear[j]·u_j` for each chart index.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    nvars: usize,
    constant: Vec<f64>,
    linear: Vec<Vec<(usize, f64)>>,
}

impl VectorField {
    fn empty(nvars: usize) -> Self {
        Self {
            nvars,
            constant: vec![0.0; nvars],
            linear: vec![Vec::new(); nvars],
        }
    }

    /// The named frame field on the chart of dimension `n`.
    pub fn frame(n: usize, id: FieldId) -> Result<Self, JetError> {
        let nvars = coordinate_count(n);
        let mut out = Self::empty(nvars);
        match id {
            FieldId::Horizontal(k) if k < 4 * n => {
                let a = k / 4;
                let v = adapted_direction(k);
                // chart slot of the direction inside pH (t, x, y, z)
                let own = 4 * a
                    + match k % 4 {
                        0 => 0,
                        1 => 2,
                        2 => 3,
                        _ => 1,
                    };
                out.constant[own] = 1.0;
                // 2 Im(q_a v̄) is linear in the four coordinates of q_a
                for (c, basis) in ParaQuaternion::BASIS.into_iter().enumerate() {
                    let w = (basis * v.conj()).im() * 2.0;
                    for (target, coeff) in embed_imaginary(n, w) {
                        if coeff != 0.0 {
                            out.linear[target].push((4 * a + c, coeff));
                        }
                    }
                }
                Ok(out)
            }
            FieldId::Reeb(s) if s < 3 => {
                out.constant[central_index(n, s + 1)] = 2.0;
                Ok(out)
            }
            other => Err(JetError::UnknownField(format!("{other} for n = {n}"))),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Coordinate components of the field at a point.
    pub fn at(&self, point: &[f64]) -> Vec<f64> {
        (0..self.nvars)
            .map(|i| {
                self.constant[i]
                    + self.linear[i]
                        .iter()
                        .map(|(j, c)| c * point[*j])
                        .sum::<f64>()
            })
            .collect()
    }

    /// Coefficient of `∂_i` as a polynomial.
    pub fn coefficient(&self, i: usize) -> Polynomial {
        let mut p = Polynomial::constant(self.nvars, self.constant[i]);
        for (j, c) in &self.linear[i] {
            p = p.add(&Polynomial::var(self.nvars, *j).scale(*c));
        }
        p
    }

    /// Negate the `∂_i` coefficient (used to build deliberately broken frames).
    pub fn negate_component(&mut self, i: usize) {
        self.constant[i] = -self.constant[i];
        for (_, c) in &mut self.linear[i] {
            *c = -*c;
        }
    }

    /// `[self, other]` as a vector field with polynomial coefficients.
    pub fn bracket(&self, other: &VectorField) -> Vec<Polynomial> {
        (0..self.nvars)
            .map(|i| {
                self.apply(&other.coefficient(i))
                    .sub(&other.apply(&self.coefficient(i)))
            })
            .collect()
    }

    pub fn apply(&self, f: &Polynomial) -> Polynomial {
        assert_eq!(f.nvars(), self.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for i in 0..self.nvars {
            if self.constant[i] == 0.0 && self.linear[i].is_empty() {
                continue;
            }
            if !f.depends_on(i) {
                continue;
            }
            out = out.add(&self.coefficient(i).mul(&f.partial(i)));
        }
        out
    }
}

/// All frame fields of the chart, horizontal in adapted order then `ξ_1, ξ_2, ξ_3`.
#[derive(Debug, Clone)]
pub struct FrameFields {
    n: usize,
    horizontal: Vec<VectorField>,
    reeb: [VectorField; 3],
}

impl FrameFields {
    pub fn new(n: usize) -> Self {
        let horizontal = (0..4 * n)
            .map(|k| VectorField::frame(n, FieldId::Horizontal(k)).expect("index in range"))
            .collect();
        let reeb = [0, 1, 2].map(|s| VectorField::frame(n, FieldId::Reeb(s)).expect("index in range"));
        Self { n, horizontal, reeb }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizontal(&self, k: usize) -> &VectorField {
        &self.horizontal[k]
    }

    pub fn reeb(&self, s: usize) -> &VectorField {
        &self.reeb[s]
    }

    /// Flip the sign of one coordinate coefficient of one field.
    pub fn corrupt(&mut self, id: FieldId, coordinate: usize) -> Result<(), JetError> {
        let field = match id {
            FieldId::Horizontal(k) if k < 4 * self.n => &mut self.horizontal[k],
            FieldId::Reeb(s) if s < 3 => &mut self.reeb[s],
            other => return Err(JetError::UnknownField(format!("{other} for n = {}", self.n))),
        };
        field.negate_component(coordinate);
        Ok(())
    }

    pub fn get(&self, id: FieldId) -> Result<&VectorField, JetError> {
        match id {
            FieldId::Horizontal(k) if k < 4 * self.n => Ok(&self.horizontal[k]),
            FieldId::Reeb(s) if s < 3 => Ok(&self.reeb[s]),
            other => Err(JetError::UnknownField(format!("{other} for n = {}", self.n))),
        }
    }
}

/// `X(f)` for the named frame field.
pub fn derive_along(f: &Polynomial, id: FieldId) -> Result<Polynomial, JetError> {
    let nvars = f.nvars();
    if nvars < 7 || (nvars - 3) % 4 != 0 {
        return Err(JetError::DimensionMismatch {
            expected: coordinate_count(1),
            found: nvars,
        });
    }
    let n = (nvars - 3) / 4;
    Ok(VectorField::frame(n, id)?.apply(f))
}

/// First- and second-order frame data of a scalar at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientData {
    pub value: f64,
    /// `dh(e_a)`
    pub dh: Vec<f64>,
    /// `dh(ξ_s)`
    pub dh_xi: [f64; 3],
    /// `∇²h(e_a, e_b) = e_a(e_b h)`
    pub hessian: Tensor2,
    /// `Σ g^{ab} dh(e_a) dh(e_b)`
    pub grad_norm2: f64,
    /// `Σ g^{ab} ∇²h(e_a, e_b)`
    pub laplacian: f64,
}

impl GradientData {
    /// `dh(I_s e_a)` for every `a`.
    pub fn dh_i(&self, frame: &PqcFrameData, s: usize) -> Vec<f64> {
        let m = frame.i(s).matrix();
        let d = self.dh.len();
        (0..d)
            .map(|a| (0..d).map(|c| m[(c, a)] * self.dh[c]).sum())
            .collect()
    }

    /// Contravariant gradient `g⁻¹ dh`.
    pub fn gradient(&self, frame: &PqcFrameData) -> Vec<f64> {
        let gi = frame.g_inv();
        let d = self.dh.len();
        (0..d)
            .map(|a| (0..d).map(|b| gi[(a, b)] * self.dh[b]).sum())
            .collect()
    }
}

/// Precomputed derivative polynomials of one scalar field.
#[derive(Debug, Clone)]
pub struct JetTable {
    n: usize,
    h: Polynomial,
    dh: Vec<Polynomial>,
    dh_xi: [Polynomial; 3],
    hess: Vec<Vec<Polynomial>>,
    // e_a(ξ_s h), equal to ξ_s(e_a h) on the flat model
    xi_e: [Vec<Polynomial>; 3],
    third: Option<Vec<Vec<Vec<Polynomial>>>>,
}

impl JetTable {
    /// Tables up to order 2; `with_third_order` adds `e_a e_b e_c h`.
    pub fn new(h: &Polynomial, n: usize, with_third_order: bool) -> Result<Self, JetError> {
        if h.nvars() != coordinate_count(n) {
            return Err(JetError::DimensionMismatch {
                expected: coordinate_count(n),
                found: h.nvars(),
            });
        }
        let fields = FrameFields::new(n);
        let d = 4 * n;
        let dh: Vec<Polynomial> = (0..d).map(|a| fields.horizontal(a).apply(h)).collect();
        let dh_xi = [0, 1, 2].map(|s| fields.reeb(s).apply(h));
        let hess: Vec<Vec<Polynomial>> = (0..d)
            .map(|a| (0..d).map(|b| fields.horizontal(a).apply(&dh[b])).collect())
            .collect();
        let xi_e = [0, 1, 2].map(|s| (0..d).map(|a| fields.horizontal(a).apply(&dh_xi[s])).collect());
        let third = with_third_order.then(|| {
            (0..d)
                .map(|a| {
                    (0..d)
                        .map(|b| (0..d).map(|c| fields.horizontal(a).apply(&hess[b][c])).collect())
                        .collect()
                })
                .collect()
        });
        Ok(Self {
            n,
            h: h.clone(),
            dh,
            dh_xi,
            hess,
            xi_e,
            third,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &Polynomial {
        &self.h
    }

    pub fn has_third_order(&self) -> bool {
        self.third.is_some()
    }

    pub fn value(&self, point: &[f64]) -> f64 {
        self.h.eval(point)
    }

    pub fn first(&self, point: &[f64]) -> Vec<f64> {
        self.dh.iter().map(|p| p.eval(point)).collect()
    }

    pub fn gradient_data(&self, point: &[f64], frame: &PqcFrameData) -> GradientData {
        let d = 4 * self.n;
        let dh = self.first(point);
        let hessian = Tensor2::from_fn(d, |a, b| self.hess[a][b].eval(point));
        let gi = frame.g_inv();
        let mut grad_norm2 = 0.0;
        for a in 0..d {
            for b in 0..d {
                grad_norm2 += gi[(a, b)] * dh[a] * dh[b];
            }
        }
        let laplacian = crate::tensor::signed_trace(&hessian, frame);
        GradientData {
            value: self.h.eval(point),
            dh,
            dh_xi: [0, 1, 2].map(|s| self.dh_xi[s].eval(point)),
            hessian,
            grad_norm2,
            laplacian,
        }
    }

    /// `e_a(e_b(e_c h))`, or `None` without third-order tables.
    pub fn third_order(&self, point: &[f64], a: usize, b: usize, c: usize) -> Option<f64> {
        self.third.as_ref().map(|t| t[a][b][c].eval(point))
    }

    /// `e_a(dh(ξ_s))` for every `a`.
    pub fn xi_derivatives(&self, point: &[f64], s: usize) -> Vec<f64> {
        self.xi_e[s].iter().map(|p| p.eval(point)).collect()
    }

    /// `[a][b][c] = e_a(e_b(e_c h))`, or `None` without third-order tables.
    pub fn third_order_all(&self, point: &[f64]) -> Option<Vec<Tensor2>> {
        let t = self.third.as_ref()?;
        let d = 4 * self.n;
        Some(
            (0..d)
                .map(|a| Tensor2::from_fn(d, |b, c| t[a][b][c].eval(point)))
                .collect(),
        )
    }
}

/// Frame derivative data of `h` at a point.
pub fn gradient_data(h: &Polynomial, point: &[f64], frame: &PqcFrameData) -> Result<GradientData, JetError> {
    Ok(JetTable::new(h, frame.n(), false)?.gradient_data(point, frame))
}

/// Exact value of `e_a(e_b(e_c h))` at a point.
pub fn third_order(h: &Polynomial, point: &[f64], a: usize, b: usize, c: usize) -> Result<f64, JetError> {
    let f = derive_along(h, FieldId::Horizontal(c))?;
    let f = derive_along(&f, FieldId::Horizontal(b))?;
    Ok(derive_along(&f, FieldId::Horizontal(a))?.eval(point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{eps, PqcFrameData};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn var(n: usize, name: &str) -> Polynomial {
        Polynomial::var(coordinate_count(n), coordinate_index(name, n).unwrap())
    }

    fn random_poly(rng: &mut impl Rng, n: usize, degree: u32, terms: usize) -> Polynomial {
        let nv = coordinate_count(n);
        let mut p = Polynomial::constant(nv, 1.0);
        for _ in 0..terms {
            let mut e = vec![0; nv];
            for _ in 0..rng.random_range(1..=degree) {
                e[rng.random_range(0..nv)] += 1;
            }
            p = p.add(&Polynomial::from_terms(nv, [(rng.random_range(-1.0..1.0), e)]).unwrap());
        }
        p
    }

    #[test]
    fn coordinate_names_and_indices() {
        assert_eq!(coordinate_names(1), ["t1", "x1", "y1", "z1", "x", "y", "z"]);
        assert_eq!(coordinate_index("z2", 2), Some(7));
        assert_eq!(coordinate_index("x", 2), Some(8));
        assert_eq!(coordinate_index("t3", 2), None);
        assert_eq!(coordinate_index("t", 2), None);
        assert_eq!(coordinate_index("x01", 2), None);
    }

    #[test]
    fn polynomial_basics() {
        let t = var(1, "t1");
        let p = t.mul(&t).mul(&t);
        assert_eq!(p.partial(0).partial(0).partial(0), Polynomial::constant(7, 6.0));
        assert!(p.sub(&p).is_zero());
        assert_eq!(p.eval(&[2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 8.0);
        assert_eq!(p.degree(), 3);
    }

    #[test]
    fn frame_field_examples() {
        let t1 = var(1, "t1");
        assert_eq!(derive_along(&t1, FieldId::t(1)).unwrap(), Polynomial::constant(7, 1.0));
        let x = var(1, "x");
        assert_eq!(derive_along(&x, FieldId::t(1)).unwrap(), var(1, "x1").scale(2.0));
        assert!(matches!(
            derive_along(&x, FieldId::Horizontal(4)),
            Err(JetError::UnknownField(_))
        ));
        assert!(derive_along(&x, FieldId::Reeb(3)).is_err());
    }

    #[test]
    fn frame_field_table() {
        let n = 1;
        let p: Vec<f64> = vec![0.3, -0.7, 1.1, 0.4, 0.0, 0.0, 0.0];
        let (t, x, y, z) = (p[0], p[1], p[2], p[3]);
        let expect = [
            (FieldId::t(1), 0, [2.0 * x, 2.0 * y, 2.0 * z]),
            (FieldId::x(1), 1, [-2.0 * t, 2.0 * z, -2.0 * y]),
            (FieldId::y(1), 2, [2.0 * z, -2.0 * t, 2.0 * x]),
            (FieldId::z(1), 3, [-2.0 * y, -2.0 * x, -2.0 * t]),
        ];
        for (id, own, vertical) in expect {
            let v = VectorField::frame(n, id).unwrap().at(&p);
            let mut want = vec![0.0; 7];
            want[own] = 1.0;
            want[4..].copy_from_slice(&vertical);
            assert_eq!(v, want, "{id}");
        }
        assert_eq!(
            VectorField::frame(n, FieldId::Reeb(0)).unwrap().at(&p),
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0]
        );
    }

    #[test]
    fn commutator_of_x_and_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_poly(&mut rng, 1, 3, 12);
        let t1 = FieldId::t(1);
        let x1 = FieldId::x(1);
        let xt = derive_along(&derive_along(&f, t1).unwrap(), x1).unwrap();
        let tx = derive_along(&derive_along(&f, x1).unwrap(), t1).unwrap();
        let dx = f.partial(coordinate_index("x", 1).unwrap()).scale(4.0);
        let diff = xt.sub(&tx).sub(&dx);
        assert!(diff.max_coefficient() < 1e-12);
    }

    #[test]
    fn horizontal_brackets_everywhere() {
        // [e_a, e_b] = 2 Σ ε_s ω_s(e_a, e_b) ξ_s, and frame fields of different
        // quadruples commute
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=2 {
            let frame = PqcFrameData::build_adapted_frame(n).unwrap();
            let f = random_poly(&mut rng, n, 3, 20);
            let fields = FrameFields::new(n);
            for a in 0..4 * n {
                for b in 0..4 * n {
                    let ea = fields.horizontal(a);
                    let eb = fields.horizontal(b);
                    let br = ea.apply(&eb.apply(&f)).sub(&eb.apply(&ea.apply(&f)));
                    let mut pred = Polynomial::zero(f.nvars());
                    for s in 0..3 {
                        let c = 2.0 * eps(s) * frame.omega(s)[(a, b)];
                        pred = pred.add(&fields.reeb(s).apply(&f).scale(c));
                    }
                    assert!(br.sub(&pred).max_coefficient() < 1e-12, "n={n} a={a} b={b}");
                    if a / 4 != b / 4 {
                        assert!(br.max_coefficient() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_data_examples() {
        let frame = PqcFrameData::build_adapted_frame(1).unwrap();
        let c = Polynomial::constant(7, 3.5);
        let gd = gradient_data(&c, &[0.1; 7], &frame).unwrap();
        assert!(gd.dh.iter().all(|v| *v == 0.0));
        assert_eq!(gd.laplacian, 0.0);

        let t = var(1, "t1");
        let h = Polynomial::constant(7, 1.0).add(&t.mul(&t));
        let gd = gradient_data(&h, &[0.0; 7], &frame).unwrap();
        assert!(gd.dh.iter().all(|v| *v == 0.0));
        assert_eq!(gd.hessian[(0, 0)], 2.0);
        assert_eq!(gd.laplacian, 2.0);
        assert_eq!(gd.grad_norm2, 0.0);
    }

    #[test]
    fn hessian_antisymmetric_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=2 {
            let frame = PqcFrameData::build_adapted_frame(n).unwrap();
            let h = random_poly(&mut rng, n, 3, 25);
            let table = JetTable::new(&h, n, false).unwrap();
            for _ in 0..5 {
                let p: Vec<f64> = (0..coordinate_count(n)).map(|_| rng.random_range(-1.0..1.0)).collect();
                let gd = table.gradient_data(&p, &frame);
                let anti = &gd.hessian - &gd.hessian.transpose();
                let mut pred = Tensor2::zeros(4 * n);
                for s in 0..3 {
                    pred += &(frame.omega(s) * (2.0 * eps(s) * gd.dh_xi[s]));
                }
                assert!((&anti - &pred).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn third_order_examples() {
        let frame = PqcFrameData::build_adapted_frame(1).unwrap();
        let t = var(1, "t1");
        let cube = t.mul(&t).mul(&t);
        assert_eq!(third_order(&cube, &[0.0; 7], 0, 0, 0).unwrap(), 6.0);
        let lin = var(1, "y1").add(&var(1, "x").scale(2.0));
        for a in 0..4 {
            assert_eq!(third_order(&lin, &[0.3; 7], a, 1, 2).unwrap(), 0.0);
        }
        // the table agrees with iterated differentiation, including the
        // commutator correction between the last two slots
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_poly(&mut rng, 1, 4, 20);
        let table = JetTable::new(&h, 1, true).unwrap();
        let p: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        for (a, b, c) in [(0, 1, 2), (3, 2, 1), (1, 1, 0), (2, 0, 3)] {
            let exact = third_order(&h, &p, a, b, c).unwrap();
            assert!((table.third_order(&p, a, b, c).unwrap() - exact).abs() < 1e-12);
            let swapped = table.third_order(&p, a, c, b).unwrap();
            let mut corr = 0.0;
            for s in 0..3 {
                corr += 2.0 * eps(s) * frame.omega(s)[(b, c)] * table.xi_derivatives(&p, s)[a];
            }
            assert!((exact - swapped - corr).abs() < 1e-11);
        }
    }
}
