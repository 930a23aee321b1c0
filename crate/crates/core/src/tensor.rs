//! Dense multilinear algebra on the horizontal space `H ≅ R^{4n}`.
//!
//! Every tensor is stored by its components in a fixed horizontal frame
//! `e_0 .. e_{4n−1}`, all slots covariant. Endomorphisms are stored as
//! matrices whose column `b` is the image of `e_b`, so that for a bilinear
//! form `T` and an endomorphism `I`
//!
//! ```text
//! T(I·, ·)  = Iᵀ T        T(·, I·) = T I        T(I·, I·) = Iᵀ T I
//! ```
//!
//! The structure indices `s ∈ {0, 1, 2}` stand for `I_1, I_2, I_3`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("metric is not invertible")]
    SingularMetric,
    #[error("quaternionic dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// The sign constants `ε_1 = ε_2 = 1`, `ε_3 = −1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpsilonSigns([i8; 3]);

impl EpsilonSigns {
    pub const PQC: Self = Self([1, 1, -1]);

    pub fn get(self, s: usize) -> f64 {
        f64::from(self.0[s])
    }

    pub fn as_array(self) -> [i8; 3] {
        self.0
    }
}

/// `ε_s` for the zero-based structure index `s`.
#[inline]
pub fn eps(s: usize) -> f64 {
    EpsilonSigns::PQC.get(s)
}

/// The cyclic triple `(i, j, k)` starting at `i`.
#[inline]
pub fn cyclic(i: usize) -> (usize, usize, usize) {
    (i, (i + 1) % 3, (i + 2) % 3)
}

/// Covariant 2-tensor; component `(a, b)` is `T(e_a, e_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2(DMatrix<f64>);

impl Tensor2 {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self(DMatrix::from_fn(dim, dim, |a, b| f(a, b)))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "tensor components must be square");
        Self(m)
    }

    /// `u ⊗ v`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |a, b| u[a] * v[b])
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn sym(&self) -> Self {
        Self((&self.0 + self.0.transpose()) * 0.5)
    }

    pub fn antisym(&self) -> Self {
        Self((&self.0 - self.0.transpose()) * 0.5)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `T(I·, ·)`.
    pub fn pre(&self, end: &Endomorphism) -> Self {
        Self(end.0.transpose() * &self.0)
    }

    /// `T(·, I·)`.
    pub fn post(&self, end: &Endomorphism) -> Self {
        Self(&self.0 * &end.0)
    }

    /// `T(I·, J·)`.
    pub fn pre_post(&self, first: &Endomorphism, second: &Endomorphism) -> Self {
        Self(first.0.transpose() * &self.0 * &second.0)
    }

    /// `T(I·, I·)`.
    pub fn both(&self, end: &Endomorphism) -> Self {
        self.pre_post(end, end)
    }

    /// Bilinear form evaluated on component vectors.
    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for a in 0..d {
            if u[a] == 0.0 {
                continue;
            }
            for b in 0..d {
                acc += u[a] * self.0[(a, b)] * v[b];
            }
        }
        acc
    }

    /// Endomorphism `A` with `T(X, Y) = g(A X, Y)`, i.e. `A = g⁻¹ Tᵀ`.
    pub fn to_endomorphism(&self, frame: &PqcFrameData) -> Endomorphism {
        Endomorphism(frame.g_inv.0.clone() * self.0.transpose())
    }
}

impl Index<(usize, usize)> for Tensor2 {
    type Output = f64;
    fn index(&self, ix: (usize, usize)) -> &f64 {
        &self.0[ix]
    }
}

impl IndexMut<(usize, usize)> for Tensor2 {
    fn index_mut(&mut self, ix: (usize, usize)) -> &mut f64 {
        &mut self.0[ix]
    }
}

impl Add for &Tensor2 {
    type Output = Tensor2;
    fn add(self, o: &Tensor2) -> Tensor2 {
        Tensor2(&self.0 + &o.0)
    }
}

impl Add for Tensor2 {
    type Output = Tensor2;
    fn add(self, o: Tensor2) -> Tensor2 {
        Tensor2(self.0 + o.0)
    }
}

impl Sub for &Tensor2 {
    type Output = Tensor2;
    fn sub(self, o: &Tensor2) -> Tensor2 {
        Tensor2(&self.0 - &o.0)
    }
}

impl Sub for Tensor2 {
    type Output = Tensor2;
    fn sub(self, o: Tensor2) -> Tensor2 {
        Tensor2(self.0 - o.0)
    }
}

impl AddAssign<&Tensor2> for Tensor2 {
    fn add_assign(&mut self, o: &Tensor2) {
        self.0 += &o.0;
    }
}

impl SubAssign<&Tensor2> for Tensor2 {
    fn sub_assign(&mut self, o: &Tensor2) {
        self.0 -= &o.0;
    }
}

impl Mul<f64> for &Tensor2 {
    type Output = Tensor2;
    fn mul(self, s: f64) -> Tensor2 {
        Tensor2(&self.0 * s)
    }
}

impl Mul<f64> for Tensor2 {
    type Output = Tensor2;
    fn mul(self, s: f64) -> Tensor2 {
        Tensor2(self.0 * s)
    }
}

impl Neg for Tensor2 {
    type Output = Tensor2;
    fn neg(self) -> Tensor2 {
        Tensor2(-self.0)
    }
}

/// Linear map of `H`; column `b` holds the components of the image of `e_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Endomorphism(DMatrix<f64>);

impl Endomorphism {
    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|c| (0..d).map(|b| self.0[(c, b)] * v[b]).sum())
            .collect()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Endomorphism) -> Endomorphism {
        Endomorphism(&self.0 * &other.0)
    }

    pub fn scaled(&self, s: f64) -> Endomorphism {
        Endomorphism(&self.0 * s)
    }

    pub fn max_abs_diff(&self, other: &Endomorphism) -> f64 {
        (&self.0 - &other.0).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Bilinear form `g(A·, ·)`.
    pub fn to_bilinear(&self, frame: &PqcFrameData) -> Tensor2 {
        Tensor2(self.0.transpose() * &frame.g.0)
    }
}

/// Covariant 4-tensor, dense storage, no symmetry compression.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim.pow(4)],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim.pow(4));
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    for d in 0..dim {
                        data.push(f(a, b, c, d));
                    }
                }
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn offset(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.dim + b) * self.dim + c) * self.dim + d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.offset(a, b, c, d)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let o = self.offset(a, b, c, d);
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor4) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scale(&self, s: f64) -> Tensor4 {
        Tensor4 {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `R'(X, Y, Z, V) = R(Z, V, X, Y)`.
    pub fn swap_pairs(&self) -> Tensor4 {
        Tensor4::from_fn(self.dim, |a, b, c, d| self.get(c, d, a, b))
    }

    /// Replace slot `slot` by its image under `end`: `R(.., I X, ..)`.
    pub fn with_slot(&self, slot: usize, end: &Endomorphism) -> Tensor4 {
        let n = self.dim;
        let m = end.matrix();
        let mut out = Tensor4::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let idx = [a, b, c, d];
                        let mut acc = 0.0;
                        for k in 0..n {
                            let w = m[(k, idx[slot])];
                            if w == 0.0 {
                                continue;
                            }
                            let mut j = idx;
                            j[slot] = k;
                            acc += w * self.get(j[0], j[1], j[2], j[3]);
                        }
                        out.set(a, b, c, d, acc);
                    }
                }
            }
        }
        out
    }

    /// `R(I·, I·, ·, ·)`.
    pub fn first_pair(&self, end: &Endomorphism) -> Tensor4 {
        self.with_slot(0, end).with_slot(1, end)
    }

    /// `R(·, ·, I·, I·)`.
    pub fn last_pair(&self, end: &Endomorphism) -> Tensor4 {
        self.with_slot(2, end).with_slot(3, end)
    }

    /// Tensor2 obtained by freezing the first two slots.
    pub fn last_two(&self, a: usize, b: usize) -> Tensor2 {
        Tensor2::from_fn(self.dim, |c, d| self.get(a, b, c, d))
    }

    /// `A(X, Y)·B(Z, V)`.
    pub fn outer(a: &Tensor2, b: &Tensor2) -> Tensor4 {
        Tensor4::from_fn(a.dim(), |x, y, z, v| a[(x, y)] * b[(z, v)])
    }
}

impl Add for &Tensor4 {
    type Output = Tensor4;
    fn add(self, o: &Tensor4) -> Tensor4 {
        assert_eq!(self.dim, o.dim);
        Tensor4 {
            dim: self.dim,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Tensor4 {
    type Output = Tensor4;
    fn sub(self, o: &Tensor4) -> Tensor4 {
        assert_eq!(self.dim, o.dim);
        Tensor4 {
            dim: self.dim,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&Tensor4> for Tensor4 {
    fn add_assign(&mut self, o: &Tensor4) {
        assert_eq!(self.dim, o.dim);
        for (a, b) in self.data.iter_mut().zip(&o.data) {
            *a += b;
        }
    }
}

impl SubAssign<&Tensor4> for Tensor4 {
    fn sub_assign(&mut self, o: &Tensor4) {
        assert_eq!(self.dim, o.dim);
        for (a, b) in self.data.iter_mut().zip(&o.data) {
            *a -= b;
        }
    }
}

/// Pointwise linear data of a pqc structure on `H`.
///
/// `g` is a symmetric metric, `I_s` the three structure endomorphisms and
/// `ω_s(X, Y) = g(I_s X, Y)` the fundamental 2-forms.
#[derive(Debug, Clone, PartialEq)]
pub struct PqcFrameData {
    n: usize,
    g: Tensor2,
    g_inv: Tensor2,
    i: [Endomorphism; 3],
    omega: [Tensor2; 3],
}

/// Quadruple slot offsets in the adapted order `(e, I_1 e, I_2 e, I_3 e)`.
pub const SLOT_E: usize = 0;
pub const SLOT_I1E: usize = 1;
pub const SLOT_I2E: usize = 2;
pub const SLOT_I3E: usize = 3;

impl PqcFrameData {
    pub fn new(n: usize, g: Tensor2, i: [Endomorphism; 3]) -> Result<Self, TensorError> {
        if n == 0 {
            return Err(TensorError::ZeroDimension);
        }
        let dim = 4 * n;
        if g.dim() != dim {
            return Err(TensorError::DimensionMismatch {
                expected: dim,
                found: g.dim(),
            });
        }
        if let Some(bad) = i.iter().find(|e| e.dim() != dim) {
            return Err(TensorError::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        let g_inv = g
            .matrix()
            .clone()
            .try_inverse()
            .ok_or(TensorError::SingularMetric)?;
        if g_inv.iter().any(|v| !v.is_finite()) {
            return Err(TensorError::SingularMetric);
        }
        let omega = [0, 1, 2].map(|s| i[s].to_bilinear_with(&g));
        Ok(Self {
            n,
            g,
            g_inv: Tensor2(g_inv),
            i,
            omega,
        })
    }

    /// The canonical constant-matrix model in an adapted orthonormal basis.
    ///
    /// Index `4a + k` is the `k`-th member of the quadruple
    /// `(e_a, I_1 e_a, I_2 e_a, I_3 e_a)`; the metric is `(+1, −1, −1, +1)`
    /// on every quadruple.
    pub fn build_adapted_frame(n: usize) -> Result<Self, TensorError> {
        if n == 0 {
            return Err(TensorError::ZeroDimension);
        }
        let dim = 4 * n;
        let mut g = DMatrix::zeros(dim, dim);
        let mut ends = [
            DMatrix::zeros(dim, dim),
            DMatrix::zeros(dim, dim),
            DMatrix::zeros(dim, dim),
        ];
        // (source slot, target slot, sign) for I_1, I_2, I_3
        const TABLE: [[(usize, usize, f64); 4]; 3] = [
            [
                (SLOT_E, SLOT_I1E, 1.0),
                (SLOT_I1E, SLOT_E, 1.0),
                (SLOT_I2E, SLOT_I3E, 1.0),
                (SLOT_I3E, SLOT_I2E, 1.0),
            ],
            [
                (SLOT_E, SLOT_I2E, 1.0),
                (SLOT_I2E, SLOT_E, 1.0),
                (SLOT_I1E, SLOT_I3E, -1.0),
                (SLOT_I3E, SLOT_I1E, -1.0),
            ],
            [
                (SLOT_E, SLOT_I3E, 1.0),
                (SLOT_I3E, SLOT_E, -1.0),
                (SLOT_I1E, SLOT_I2E, -1.0),
                (SLOT_I2E, SLOT_I1E, 1.0),
            ],
        ];
        for a in 0..n {
            let base = 4 * a;
            for (k, sign) in [1.0, -1.0, -1.0, 1.0].into_iter().enumerate() {
                g[(base + k, base + k)] = sign;
            }
            for (s, rows) in TABLE.iter().enumerate() {
                for &(src, dst, sign) in rows {
                    ends[s][(base + dst, base + src)] = sign;
                }
            }
        }
        let [i1, i2, i3] = ends;
        Self::new(
            n,
            Tensor2(g),
            [
                Endomorphism(i1),
                Endomorphism(i2),
                Endomorphism(i3),
            ],
        )
    }

    /// Same structure endomorphisms with metric `factor·g` (so `ω_s` scales too).
    pub fn with_metric_scale(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            g: &self.g * factor,
            g_inv: &self.g_inv * (1.0 / factor),
            i: self.i.clone(),
            omega: [0, 1, 2].map(|s| &self.omega[s] * factor),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        4 * self.n
    }

    pub fn g(&self) -> &Tensor2 {
        &self.g
    }

    pub fn g_inv(&self) -> &Tensor2 {
        &self.g_inv
    }

    pub fn i(&self, s: usize) -> &Endomorphism {
        &self.i[s]
    }

    pub fn omega(&self, s: usize) -> &Tensor2 {
        &self.omega[s]
    }

    /// Largest violation of the algebraic structure relations:
    /// `I_s² = ε_s`, `I_i I_j = −I_j I_i = −ε_k I_k`, `g(I_s·, I_s·) = −ε_s g`,
    /// antisymmetry of `ω_s` and symmetry of `g`.
    pub fn structure_residual(&self) -> f64 {
        let dim = self.dim();
        let id = Endomorphism::identity(dim);
        let mut worst: f64 = 0.0;
        for s in 0..3 {
            let sq = self.i[s].compose(&self.i[s]);
            worst = worst.max(sq.max_abs_diff(&id.scaled(eps(s))));
            let gi = self.g.both(&self.i[s]);
            worst = worst.max((&gi + &(&self.g * eps(s))).max_abs());
            let om = &self.omega[s];
            worst = worst.max((om + &om.transpose()).max_abs());
        }
        for i in 0..3 {
            let (_, j, k) = cyclic(i);
            let ij = self.i[i].compose(&self.i[j]);
            let ji = self.i[j].compose(&self.i[i]);
            let target = self.i[k].scaled(-eps(k));
            worst = worst.max(ij.max_abs_diff(&target));
            worst = worst.max(ji.max_abs_diff(&target.scaled(-1.0)));
        }
        worst.max((&self.g - &self.g.transpose()).max_abs())
    }

    /// Number of positive and negative diagonal entries of the metric.
    pub fn signature(&self) -> (usize, usize) {
        let eig = nalgebra::SymmetricEigen::new(self.g.matrix().clone()).eigenvalues;
        let pos = eig.iter().filter(|v| **v > 0.0).count();
        let neg = eig.iter().filter(|v| **v < 0.0).count();
        (pos, neg)
    }
}

impl Endomorphism {
    fn to_bilinear_with(&self, g: &Tensor2) -> Tensor2 {
        Tensor2(self.0.transpose() * g.matrix())
    }
}

/// `Σ g^{ab} T(e_a, e_b)`.
pub fn signed_trace(t: &Tensor2, frame: &PqcFrameData) -> f64 {
    frame.g_inv.0.component_mul(&t.0.transpose()).sum()
}

/// `Σ g^{ab} T(e_a, I_s e_b)`.
pub fn signed_trace_pair(t: &Tensor2, frame: &PqcFrameData, s: usize) -> f64 {
    signed_trace(&t.post(frame.i(s)), frame)
}

/// `(A ⊼ B)(X,Y,Z,V) = A(X,Z)B(Y,V) + A(Y,V)B(X,Z) − A(Y,Z)B(X,V) − A(X,V)B(Y,Z)`.
pub fn kulkarni_nomizu(a: &Tensor2, b: &Tensor2) -> Tensor4 {
    Tensor4::from_fn(a.dim(), |x, y, z, v| {
        a[(x, z)] * b[(y, v)] + a[(y, v)] * b[(x, z)] - a[(y, z)] * b[(x, v)] - a[(x, v)] * b[(y, z)]
    })
}

/// `(I_s L)(X, Y) = g(I_s L X, Y) = −L(X, I_s Y)`.
pub fn i_applied(l: &Tensor2, frame: &PqcFrameData, s: usize) -> Tensor2 {
    -l.post(frame.i(s))
}

/// Casimir operator `†T = −T(I_1·,I_1·) − T(I_2·,I_2·) + T(I_3·,I_3·)`.
pub fn casimir(t: &Tensor2, frame: &PqcFrameData) -> Tensor2 {
    let mut out = Tensor2::zeros(t.dim());
    for s in 0..3 {
        out -= &(&t.both(frame.i(s)) * eps(s));
    }
    out
}

/// Projections on the `3` and `−1` eigenspaces of the Casimir operator.
pub fn casimir_project(t: &Tensor2, frame: &PqcFrameData) -> (Tensor2, Tensor2) {
    let dag = casimir(t, frame);
    let three = &(t + &dag) * 0.25;
    let minus_one = &(&(t * 3.0) - &dag) * 0.25;
    (three, minus_one)
}

/// Trace-free part `T − (tr T / 4n) g`.
pub fn trace_free(t: &Tensor2, frame: &PqcFrameData) -> Tensor2 {
    let tr = signed_trace(t, frame);
    t - &(frame.g() * (tr / frame.dim() as f64))
}

/// `[3]` and `[−1]` parts with respect to the first argument pair.
pub fn first_pair_project(r: &Tensor4, frame: &PqcFrameData) -> (Tensor4, Tensor4) {
    let mut twisted = Tensor4::zeros(r.dim());
    for s in 0..3 {
        twisted += &r.first_pair(frame.i(s)).scale(eps(s));
    }
    let three = (r - &twisted).scale(0.25);
    let minus_one = (&r.scale(3.0) + &twisted).scale(0.25);
    (three, minus_one)
}

/// Components of a bilinear form by commutation pattern with `I_1, I_2, I_3`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourParts {
    pub ppp: Tensor2,
    pub pmm: Tensor2,
    pub mpm: Tensor2,
    pub mmp: Tensor2,
}

impl FourParts {
    pub fn sum(&self) -> Tensor2 {
        &(&self.ppp + &self.pmm) + &(&self.mpm + &self.mmp)
    }
}

/// Component of `Ψ` that commutes (`+1`) or anticommutes (`−1`) with each `I_i`
/// as an endomorphism, for the sign pattern `signs`.
///
/// Conjugation by `I_i` acts on bilinear forms as `Ψ ↦ −ε_i Ψ(I_i·, I_i·)`.
pub fn sign_component(psi: &Tensor2, frame: &PqcFrameData, signs: [f64; 3]) -> Tensor2 {
    let conj = |t: &Tensor2, s: usize| &t.both(frame.i(s)) * (-eps(s));
    let mut acc = psi.clone();
    for (s, &sign) in signs.iter().enumerate() {
        acc = &(&acc + &(&conj(&acc, s) * sign)) * 0.5;
    }
    acc
}

pub fn four_part_split(psi: &Tensor2, frame: &PqcFrameData) -> FourParts {
    FourParts {
        ppp: sign_component(psi, frame, [1.0, 1.0, 1.0]),
        pmm: sign_component(psi, frame, [1.0, -1.0, -1.0]),
        mpm: sign_component(psi, frame, [-1.0, 1.0, -1.0]),
        mmp: sign_component(psi, frame, [-1.0, -1.0, 1.0]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_t2(rng: &mut impl Rng, dim: usize) -> Tensor2 {
        Tensor2::from_fn(dim, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_t4(rng: &mut impl Rng, dim: usize) -> Tensor4 {
        Tensor4::from_fn(dim, |_, _, _, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn adapted_frame_relations() {
        for n in 1..=4 {
            let f = PqcFrameData::build_adapted_frame(n).unwrap();
            assert!(f.structure_residual() < 1e-14, "n = {n}");
            assert_eq!(f.signature(), (2 * n, 2 * n));
        }
        let f = PqcFrameData::build_adapted_frame(1).unwrap();
        let diag: Vec<f64> = (0..4).map(|a| f.g()[(a, a)]).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
        assert_eq!(f.i(0).compose(f.i(1)), *f.i(2));
        assert!(PqcFrameData::build_adapted_frame(0).is_err());
    }

    #[test]
    fn singular_metric_rejected() {
        let f = PqcFrameData::build_adapted_frame(1).unwrap();
        let g = Tensor2::zeros(4);
        let err = PqcFrameData::new(1, g, [f.i(0).clone(), f.i(1).clone(), f.i(2).clone()]);
        assert_eq!(err.unwrap_err(), TensorError::SingularMetric);
    }

    #[test]
    fn signed_traces() {
        let f = PqcFrameData::build_adapted_frame(2).unwrap();
        assert!((signed_trace(f.g(), &f) - 8.0).abs() < 1e-15);
        assert_eq!(signed_trace_pair(f.g(), &f, 0), 0.0);
        // Σ_b [P(e_b,e_b) − P(I_1e_b,I_1e_b) − P(I_2e_b,I_2e_b) + P(I_3e_b,I_3e_b)]
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_t2(&mut rng, 8).sym();
        let mut oracle = 0.0;
        for a in 0..2 {
            for (k, sign) in [1.0, -1.0, -1.0, 1.0].into_iter().enumerate() {
                oracle += sign * t[(4 * a + k, 4 * a + k)];
            }
        }
        assert!((signed_trace(&t, &f) - oracle).abs() < 1e-14);
        // scaled metrics contract with the scaled inverse
        let fb = f.with_metric_scale(0.25);
        assert!((signed_trace(fb.g(), &fb) - 8.0).abs() < 1e-14);
        assert!((signed_trace(&t, &fb) - 4.0 * oracle).abs() < 1e-13);
    }

    #[test]
    fn kulkarni_nomizu_cases() {
        let f = PqcFrameData::build_adapted_frame(1).unwrap();
        let gg = kulkarni_nomizu(f.g(), f.g());
        // (g⊼g)(e_1,e_2,e_1,e_2) = 2 g_11 g_22 with the second frame vector timelike
        assert_eq!(gg.get(0, 1, 0, 1), -2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_t2(&mut rng, 8).sym();
        let b = random_t2(&mut rng, 8).sym();
        let ab = kulkarni_nomizu(&a, &b);
        let ba = kulkarni_nomizu(&b, &a);
        assert!(ab.max_abs_diff(&ba) < 1e-15);
        let c = random_t2(&mut rng, 8);
        let e = random_t2(&mut rng, 8);
        let ce = kulkarni_nomizu(&c, &e);
        for x in 0..8 {
            for z in 0..8 {
                for v in 0..8 {
                    assert!(ce.get(x, x, z, v).abs() < 1e-15);
                    for y in 0..8 {
                        assert!((ab.get(x, y, z, v) + ab.get(x, y, v, z)).abs() < 1e-15);
                        assert!((ab.get(x, y, z, v) + ab.get(y, x, z, v)).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn casimir_on_metric() {
        let f = PqcFrameData::build_adapted_frame(2).unwrap();
        let dag = casimir(f.g(), &f);
        assert!((&dag - &(f.g() * 3.0)).max_abs() < 1e-15);
        let (three, minus_one) = casimir_project(f.g(), &f);
        assert!((&three - f.g()).max_abs() < 1e-15);
        assert!(minus_one.max_abs() < 1e-15);
    }

    #[test]
    fn casimir_projectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=2 {
            let f = PqcFrameData::build_adapted_frame(n).unwrap();
            for _ in 0..20 {
                let t = random_t2(&mut rng, 4 * n);
                let (p3, pm1) = casimir_project(&t, &f);
                assert!((&(&p3 + &pm1) - &t).max_abs() < 1e-14);
                let (p33, p3m) = casimir_project(&p3, &f);
                assert!((&p33 - &p3).max_abs() < 1e-14);
                assert!(p3m.max_abs() < 1e-14);
                assert!((&casimir(&p3, &f) - &(&p3 * 3.0)).max_abs() < 1e-14);
                assert!((&casimir(&pm1, &f) + &pm1).max_abs() < 1e-14);
            }
        }
    }

    #[test]
    fn casimir_three_part_is_scalar_in_dimension_seven() {
        let f = PqcFrameData::build_adapted_frame(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_t2(&mut rng, 4).sym();
        let (p3, _) = casimir_project(&t, &f);
        assert!(trace_free(&p3, &f).max_abs() < 1e-14);
        let expect = f.g() * (signed_trace(&t, &f) / 4.0);
        assert!((&p3 - &expect).max_abs() < 1e-14);
    }

    #[test]
    fn first_pair_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = PqcFrameData::build_adapted_frame(1).unwrap();
        let gg = kulkarni_nomizu(f.g(), f.g());
        let (a, b) = first_pair_project(&gg, &f);
        assert!((&a + &b).max_abs_diff(&gg) < 1e-14);

        let r = random_t4(&mut rng, 4);
        let (r3, _) = first_pair_project(&r, &f);
        let (r33, r3m) = first_pair_project(&r3, &f);
        assert!(r33.max_abs_diff(&r3) < 1e-14);
        assert!(r3m.max_abs() < 1e-14);

        let anti = &r - &Tensor4::from_fn(4, |x, y, z, v| r.get(y, x, z, v));
        let (p, q) = first_pair_project(&anti, &f);
        for part in [p, q] {
            let swapped = Tensor4::from_fn(4, |x, y, z, v| part.get(y, x, z, v));
            assert!((&part + &swapped).max_abs() < 1e-14);
        }

        // agrees with the Casimir projection slice by slice in the last pair
        let (r3, _) = first_pair_project(&r, &f);
        for z in 0..4 {
            for v in 0..4 {
                let slice = Tensor2::from_fn(4, |x, y| r.get(x, y, z, v));
                let (c3, _) = casimir_project(&slice, &f);
                let s3 = Tensor2::from_fn(4, |x, y| r3.get(x, y, z, v));
                assert!((&c3 - &s3).max_abs() < 1e-14);
            }
        }
    }

    #[test]
    fn four_parts() {
        let f = PqcFrameData::build_adapted_frame(2).unwrap();
        let parts = four_part_split(f.g(), &f);
        assert!((&parts.ppp - f.g()).max_abs() < 1e-15);
        assert!(parts.pmm.max_abs() + parts.mpm.max_abs() + parts.mmp.max_abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let psi = random_t2(&mut rng, 8);
        let parts = four_part_split(&psi, &f);
        assert!((&parts.sum() - &psi).max_abs() < 1e-14);
        for forbidden in [
            [-1.0, -1.0, -1.0],
            [1.0, 1.0, -1.0],
            [1.0, -1.0, 1.0],
            [-1.0, 1.0, 1.0],
        ] {
            assert!(sign_component(&psi, &f, forbidden).max_abs() < 1e-14);
        }
        let patterns = [
            (&parts.ppp, [1.0, 1.0, 1.0]),
            (&parts.pmm, [1.0, -1.0, -1.0]),
            (&parts.mpm, [-1.0, 1.0, -1.0]),
            (&parts.mmp, [-1.0, -1.0, 1.0]),
        ];
        for (part, signs) in patterns {
            let a = part.to_endomorphism(&f);
            for s in 0..3 {
                let ia = f.i(s).compose(&a);
                let ai = a.compose(f.i(s)).scaled(signs[s]);
                assert!(ia.max_abs_diff(&ai) < 1e-14);
            }
        }
        let sym = psi.sym();
        let (c3, _) = casimir_project(&sym, &f);
        assert!((&four_part_split(&sym, &f).ppp - &c3).max_abs() < 1e-14);
    }
}
