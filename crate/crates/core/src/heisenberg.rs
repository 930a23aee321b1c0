//! The flat model: paraquaternionic Heisenberg group `G(H) = H^n × Im H`.
//!
//! Chart coordinates are `(t_a, x_a, y_a, z_a)` per quadruple followed by the
//! central `(x, y, z)` carrying the `(r3, r1, r2)` components of `ω`.

use crate::conformal::{curvature_bar_direct, DeformationData, StencilOptions};
use crate::invariants::{flatness_verdict, l_tensor, pwr_tensor, ricci_traces, torsion_split, wpqc_tensor};
use crate::jets::{central_index, coordinate_count, FieldId, FrameFields, JetError, JetTable, Polynomial};
use crate::paraquat::ParaQuaternion;
use crate::residual::Residual;
use crate::tensor::{eps, cyclic, PqcFrameData};

/// Chart listing `(T, X, Y, Z)` of a quadruple to adapted slots `(T, Y, Z, X)`.
pub const LISTING_TO_ADAPTED: [usize; 4] = [0, 3, 1, 2];

/// A point `(q, ω)` of the group.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPoint {
    pub q: Vec<ParaQuaternion>,
    /// Imaginary paraquaternion; the real part is ignored.
    pub omega: ParaQuaternion,
}

impl ModelPoint {
    pub fn identity(n: usize) -> Self {
        Self {
            q: vec![ParaQuaternion::ZERO; n],
            omega: ParaQuaternion::ZERO,
        }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn from_chart(n: usize, coords: &[f64]) -> Result<Self, JetError> {
        if coords.len() != coordinate_count(n) {
            return Err(JetError::DimensionMismatch {
                expected: coordinate_count(n),
                found: coords.len(),
            });
        }
        let q = (0..n)
            .map(|a| ParaQuaternion::new(coords[4 * a], coords[4 * a + 1], coords[4 * a + 2], coords[4 * a + 3]))
            .collect();
        let omega = ParaQuaternion::new(0.0, coords[4 * n], coords[4 * n + 1], coords[4 * n + 2]);
        Ok(Self { q, omega })
    }

    pub fn to_chart(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.q.iter().flat_map(|p| p.to_array()).collect();
        out.extend([self.omega.x, self.omega.y, self.omega.z]);
        out
    }
}

/// `(q0, ω0)·(q, ω) = (q0 + q, ω0 + ω + 2 Im Σ q0_a conj(q_a))`.
pub fn group_mul(a: &ModelPoint, b: &ModelPoint) -> ModelPoint {
    assert_eq!(a.n(), b.n(), "points live on different groups");
    let mut cross = ParaQuaternion::ZERO;
    for (p, q) in a.q.iter().zip(&b.q) {
        cross += *p * q.conj();
    }
    ModelPoint {
        q: a.q.iter().zip(&b.q).map(|(p, q)| *p + *q).collect(),
        omega: (a.omega + b.omega + cross.im() * 2.0).im(),
    }
}

pub fn group_inverse(a: &ModelPoint) -> ModelPoint {
    // the cross term Im(q conj(q)) vanishes
    ModelPoint {
        q: a.q.iter().map(|p| -*p).collect(),
        omega: -a.omega.im(),
    }
}

/// Generator of a one-parameter subgroup for a frame field.
fn generator(n: usize, id: FieldId) -> ModelPoint {
    let mut v = ModelPoint::identity(n);
    match id {
        FieldId::Horizontal(k) => v.q[k / 4] = crate::jets::adapted_direction(k),
        FieldId::Reeb(s) => v.omega = ParaQuaternion::unit(s + 1) * 2.0,
    }
    v
}

/// Frame field values at a point from the group law: `p·v − p` is exact
/// because left translation is affine in `v`.
pub fn frame_fields_at(point: &ModelPoint) -> Vec<Vec<f64>> {
    let n = point.n();
    let base = point.to_chart();
    let ids = (0..4 * n).map(FieldId::Horizontal).chain((0..3).map(FieldId::Reeb));
    ids.map(|id| {
        let moved = group_mul(point, &generator(n, id)).to_chart();
        moved.iter().zip(&base).map(|(m, b)| m - b).collect()
    })
    .collect()
}

/// Contact forms `Θ̃ = ½dω + Σ Im(dq_a · conj(q_a))`, indexed by `s` for `r_{s+1}`,
/// as polynomial coefficient lists on the chart.
pub fn contact_forms(n: usize) -> [Vec<Polynomial>; 3] {
    let nv = coordinate_count(n);
    [1, 2, 3].map(|s| {
        let mut form = vec![Polynomial::zero(nv); nv];
        form[central_index(n, s)] = Polynomial::constant(nv, 0.5);
        for a in 0..n {
            for (c, basis) in ParaQuaternion::BASIS.into_iter().enumerate() {
                let mut coeff = Polynomial::zero(nv);
                for (k, other) in ParaQuaternion::BASIS.into_iter().enumerate() {
                    let w = (basis * other.conj()).im_component(s);
                    if w != 0.0 {
                        coeff = coeff.add(&Polynomial::var(nv, 4 * a + k).scale(w));
                    }
                }
                form[4 * a + c] = coeff;
            }
        }
        form
    })
}

/// Values of the contact forms at a chart point.
pub fn contact_forms_at(n: usize, point: &[f64]) -> [Vec<f64>; 3] {
    contact_forms(n).map(|f| f.iter().map(|c| c.eval(point)).collect())
}

/// `F[j][i] = ∂_j f_i − ∂_i f_j`, so `dθ(X,Y) = Σ X^j F[j][i] Y^i`.
pub fn exterior_derivative(form: &[Polynomial]) -> Vec<Vec<Polynomial>> {
    let nv = form.len();
    (0..nv)
        .map(|j| (0..nv).map(|i| form[i].partial(j).sub(&form[j].partial(i))).collect())
        .collect()
}

fn pair(form: &[Polynomial], field: &crate::jets::VectorField) -> Polynomial {
    let mut acc = Polynomial::zero(form.len());
    for (i, f) in form.iter().enumerate() {
        if !f.is_zero() {
            acc = acc.add(&f.mul(&field.coefficient(i)));
        }
    }
    acc
}

fn two_form_on(
    d: &[Vec<Polynomial>],
    x: &crate::jets::VectorField,
    y: &crate::jets::VectorField,
) -> Polynomial {
    let nv = d.len();
    let mut acc = Polynomial::zero(nv);
    for j in 0..nv {
        let xj = x.coefficient(j);
        if xj.is_zero() {
            continue;
        }
        for i in 0..nv {
            if d[j][i].is_zero() {
                continue;
            }
            acc = acc.add(&xj.mul(&d[j][i]).mul(&y.coefficient(i)));
        }
    }
    acc
}

fn reeb_combination(fields: &FrameFields, weights: [f64; 3]) -> Vec<Polynomial> {
    let nv = coordinate_count(fields.n());
    (0..nv)
        .map(|i| {
            let mut p = Polynomial::zero(nv);
            for (s, w) in weights.iter().enumerate() {
                if *w != 0.0 {
                    p = p.add(&fields.reeb(s).coefficient(i).scale(*w));
                }
            }
            p
        })
        .collect()
}

fn vec_diff(a: &[Polynomial], b: &[Polynomial]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.sub(y).max_coefficient())
        .fold(0.0, f64::max)
}

/// Sample points used by the flat-curvature checks when none are supplied.
fn default_points(n: usize) -> Vec<Vec<f64>> {
    let nv = coordinate_count(n);
    vec![
        vec![0.0; nv],
        (0..nv).map(|i| 0.3 * ((i as f64) * 0.7).sin()).collect(),
        (0..nv).map(|i| -0.8 + 0.13 * i as f64).collect(),
    ]
}

/// All model checks with the canonical frame fields.
pub fn model_verify(n: usize) -> Vec<Residual> {
    model_verify_with(&FrameFields::new(n))
}

/// Model checks with a caller-supplied (possibly corrupted) set of frame fields.
pub fn model_verify_with(fields: &FrameFields) -> Vec<Residual> {
    model_verify_at(fields, &default_points(fields.n()))
}

pub fn model_verify_at(fields: &FrameFields, points: &[Vec<f64>]) -> Vec<Residual> {
    let n = fields.n();
    let d = 4 * n;
    let frame = PqcFrameData::build_adapted_frame(n).expect("n >= 1");
    let forms = contact_forms(n);
    let dforms: Vec<_> = forms.iter().map(|f| exterior_derivative(f)).collect();
    let mut out = Vec::new();

    // [e_a, e_b] = 2 Σ ε_s ω_s(a,b) ξ_s and ξ_s central
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            let got = fields.horizontal(a).bracket(fields.horizontal(b));
            let w = [0, 1, 2].map(|s| 2.0 * eps(s) * frame.omega(s)[(a, b)]);
            worst = worst.max(vec_diff(&got, &reeb_combination(fields, w)));
        }
        for s in 0..3 {
            let got = fields.horizontal(a).bracket(fields.reeb(s));
            worst = worst.max(got.iter().map(Polynomial::max_coefficient).fold(0.0, f64::max));
        }
    }
    for s in 0..3 {
        for t in 0..3 {
            let got = fields.reeb(s).bracket(fields.reeb(t));
            worst = worst.max(got.iter().map(Polynomial::max_coefficient).fold(0.0, f64::max));
        }
    }
    out.push(Residual::absolute("model.bracket", "[e_a,e_b] = 2 sum eps_s omega_s(e_a,e_b) xi_s, xi_s central", worst));

    // [J_i T, T] = −2ε_i ξ_i with J_i = −ε_i I_i, and [I_i T, I_j T] = 2ε_k ξ_k
    let mut worst_j = 0.0f64;
    let mut worst_ij = 0.0f64;
    for a in 0..n {
        let t = fields.horizontal(4 * a);
        for i in 0..3 {
            let (_, j, k) = cyclic(i);
            let it = fields.horizontal(4 * a + i + 1);
            let jt = fields.horizontal(4 * a + j + 1);
            let got: Vec<Polynomial> = it.bracket(t).iter().map(|p| p.scale(-eps(i))).collect();
            let mut w = [0.0; 3];
            w[i] = -2.0 * eps(i);
            worst_j = worst_j.max(vec_diff(&got, &reeb_combination(fields, w)));
            let mut w = [0.0; 3];
            w[k] = 2.0 * eps(k);
            worst_ij = worst_ij.max(vec_diff(&it.bracket(jt), &reeb_combination(fields, w)));
        }
    }
    out.push(Residual::absolute("model.commutator_j", "[J_i T, T] = -2 eps_i xi_i, J_i = -eps_i I_i", worst_j));
    out.push(Residual::absolute("model.commutator_ij", "[I_i T, I_j T] = 2 eps_k xi_k", worst_ij));

    // Θ̃_t(ξ_s) = δ_st, Θ̃_t(e_a) = 0, ξ_s ⌟ dΘ̃_t = 0
    let mut pairing = 0.0f64;
    let mut annihilation = 0.0f64;
    let mut contraction = 0.0f64;
    for t in 0..3 {
        for s in 0..3 {
            let want = if s == t { 1.0 } else { 0.0 };
            let got = pair(&forms[t], fields.reeb(s)).sub(&Polynomial::constant(coordinate_count(n), want));
            pairing = pairing.max(got.max_coefficient());
            for k in 0..d {
                contraction = contraction.max(two_form_on(&dforms[t], fields.reeb(s), fields.horizontal(k)).max_coefficient());
            }
            for u in 0..3 {
                contraction = contraction.max(two_form_on(&dforms[t], fields.reeb(s), fields.reeb(u)).max_coefficient());
            }
        }
        for k in 0..d {
            annihilation = annihilation.max(pair(&forms[t], fields.horizontal(k)).max_coefficient());
        }
    }
    out.push(Residual::absolute("model.reeb_pairing", "eta_t(xi_s) = delta_st", pairing));
    out.push(Residual::absolute("model.reeb_contraction", "xi_s contracted into d eta_t vanishes", contraction));
    out.push(Residual::absolute("model.horizontal_annihilation", "eta_t vanishes on the horizontal frame", annihilation));

    // dΘ̃_s(e_a, e_b) = −2 ε_s ω_s(a, b)
    let mut compat = 0.0f64;
    for s in 0..3 {
        for a in 0..d {
            for b in 0..d {
                let got = two_form_on(&dforms[s], fields.horizontal(a), fields.horizontal(b));
                let want = Polynomial::constant(coordinate_count(n), -2.0 * eps(s) * frame.omega(s)[(a, b)]);
                compat = compat.max(got.sub(&want).max_coefficient());
            }
        }
    }
    out.push(Residual::absolute("model.compatibility", "d eta_s(e_a,e_b) = -2 eps_s omega_s(e_a,e_b)", compat));

    // d of the forms is constant and closed (dΘ̃ has constant coefficients on the model)
    let mut structure = 0.0f64;
    for df in &dforms {
        for row in df {
            for c in row {
                if c.degree() > 0 {
                    structure = structure.max(c.max_coefficient());
                }
            }
        }
    }
    out.push(Residual::absolute("model.structure_equations", "d eta_s has constant coefficients on the model", structure));
    out.push(Residual::absolute(
        "model.frame_algebra",
        "I_s^2 = eps_s, I_1 I_2 = -I_3, g(I_s.,I_s.) = -eps_s g",
        frame.structure_residual(),
    ));

    // the canonical fields must agree with the group law
    let mut group = 0.0f64;
    for p in points {
        let mp = ModelPoint::from_chart(n, p).expect("chart dimension");
        let values = frame_fields_at(&mp);
        for k in 0..d {
            let v = fields.horizontal(k).at(p);
            group = group.max(v.iter().zip(&values[k]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        for s in 0..3 {
            let v = fields.reeb(s).at(p);
            group = group.max(v.iter().zip(&values[d + s]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    out.push(Residual::absolute("model.group_law", "frame fields equal left translates of the generators", group));

    // with h = 1/2 the deformation is trivial and everything must vanish
    let table = JetTable::new(&Polynomial::constant(coordinate_count(n), 0.5), n, true).expect("constant field");
    let (mut curv, mut tors, mut weyl) = (0.0f64, 0.0f64, 0.0f64);
    for p in points {
        let r = curvature_bar_direct(&table, p, StencilOptions::default()).expect("h > 0");
        curv = curv.max(r.max_abs());
        let def = DeformationData::at(&table, p).expect("h > 0");
        let endos = def.deformed_torsion_endomorphisms();
        match torsion_split(&endos, &def.bar, 1e-10) {
            Ok(split) => {
                tors = tors.max(split.tau.max_abs()).max(split.mu.max_abs());
                let pack = ricci_traces(&r, &def.bar);
                let l = l_tensor(&pack, &split, &def.bar);
                let w = wpqc_tensor(&pwr_tensor(&r, &l, &def.bar), &def.bar);
                weyl = weyl.max(flatness_verdict(&w, &r, 1.0).max_norm);
            }
            Err(_) => tors = f64::INFINITY,
        }
    }
    out.push(Residual::absolute("model.flat_curvature", "R = 0 on the model", curv));
    out.push(Residual::absolute("model.flat_torsion", "tau = mu = 0 on the model", tors));
    out.push(Residual::absolute("model.flat_conformal_curvature", "W = 0 on the model", weyl));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::coordinate_index;
    use proptest::prelude::*;

    #[test]
    fn group_law_example() {
        let a = ModelPoint {
            q: vec![ParaQuaternion::R1],
            omega: ParaQuaternion::ZERO,
        };
        let b = ModelPoint {
            q: vec![ParaQuaternion::R2],
            omega: ParaQuaternion::ZERO,
        };
        let c = group_mul(&a, &b);
        assert_eq!(c.omega, ParaQuaternion::R3 * -2.0);
        assert_eq!(c.q[0], ParaQuaternion::R1 + ParaQuaternion::R2);
    }

    #[test]
    fn contact_form_coefficients() {
        let n = 1;
        let forms = contact_forms(n);
        let nv = coordinate_count(n);
        let v = |name: &str| Polynomial::var(nv, coordinate_index(name, n).unwrap());
        // Θ̃_3 = ½dx − x_1 dt_1 + t_1 dx_1 − z_1 dy_1 + y_1 dz_1
        let theta3 = &forms[2];
        assert!(theta3[coordinate_index("x", n).unwrap()].sub(&Polynomial::constant(nv, 0.5)).is_zero());
        assert!(theta3[coordinate_index("t1", n).unwrap()].add(&v("x1")).is_zero());
        assert!(theta3[coordinate_index("x1", n).unwrap()].sub(&v("t1")).is_zero());
        assert!(theta3[coordinate_index("y1", n).unwrap()].add(&v("z1")).is_zero());
        assert!(theta3[coordinate_index("z1", n).unwrap()].sub(&v("y1")).is_zero());
    }

    #[test]
    fn model_checks_pass() {
        for n in 1..=2 {
            for r in model_verify(n) {
                assert!(r.passes(1e-12), "n={n} {}: {:e}", r.id, r.max_residual);
            }
        }
    }

    #[test]
    fn corrupted_sign_is_detected() {
        let n = 1;
        let mut fields = FrameFields::new(n);
        fields.corrupt(FieldId::x(1), central_index(n, 1)).unwrap();
        let worst = model_verify_with(&fields)
            .iter()
            .map(Residual::relative)
            .fold(0.0, f64::max);
        assert!(worst > 1e-2);
    }

    proptest! {
        #[test]
        fn group_axioms(c in proptest::collection::vec(-2.0f64..2.0, 21)) {
            let n = 2;
            let nv = coordinate_count(n);
            let a = ModelPoint::from_chart(n, &c[0..nv]).unwrap();
            let b = ModelPoint::from_chart(n, &c[nv..nv + 7].iter().chain(&c[0..4]).copied().collect::<Vec<_>>()).unwrap();
            let e = ModelPoint::identity(n);
            let ab = group_mul(&a, &b);
            let back = group_mul(&group_mul(&ab, &group_inverse(&b)), &e);
            for (x, y) in back.to_chart().iter().zip(a.to_chart()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert_eq!(ModelPoint::from_chart(n, &a.to_chart()).unwrap(), a.clone());
        }

        #[test]
        fn forms_vanish_on_horizontal_fields(c in proptest::collection::vec(-3.0f64..3.0, 11)) {
            let n = 2;
            let forms = contact_forms_at(n, &c);
            let mp = ModelPoint::from_chart(n, &c).unwrap();
            let fields = frame_fields_at(&mp);
            for f in &forms {
                for k in 0..8 {
                    let v: f64 = f.iter().zip(&fields[k]).map(|(a, b)| a * b).sum();
                    prop_assert!(v.abs() < 1e-12);
                }
            }
        }
    }
}
