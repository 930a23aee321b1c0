//! Cayley transform from the pseudo-sphere `Σ|q_a|² + |p|² = 1` to the
//! Heisenberg group, and the conformal identity relating the contact forms.

use rand::Rng;
use thiserror::Error;

use crate::heisenberg::{contact_forms_at, ModelPoint};
use crate::paraquat::ParaQuaternion;
use crate::residual::Residual;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CayleyError {
    #[error("point lies on the singular locus: norm2(p - 1) = {norm2:e}")]
    OnSingularLocus { norm2: f64 },
    #[error("vector is not tangent to the sphere (constraint residual {residual:e})")]
    NotTangent { residual: f64 },
    #[error("quaternionic dimensions disagree: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Point of the pseudo-sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    pub q: Vec<ParaQuaternion>,
    pub p: ParaQuaternion,
}

impl SpherePoint {
    pub fn new(q: Vec<ParaQuaternion>, p: ParaQuaternion) -> Self {
        Self { q, p }
    }

    /// The base point `(0, −1)`, mapped to the group identity.
    pub fn base(n: usize) -> Self {
        Self::new(vec![ParaQuaternion::ZERO; n], ParaQuaternion::real(-1.0))
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// `Σ norm2(q_a) + norm2(p) − 1`.
    pub fn constraint_residual(&self) -> f64 {
        self.q.iter().map(|q| q.norm2()).sum::<f64>() + self.p.norm2() - 1.0
    }

    fn max_abs(&self) -> f64 {
        self.q.iter().fold(self.p.max_abs(), |m, q| m.max(q.max_abs()))
    }
}

/// Perturbation `(δq, δp)` at a sphere point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub dq: Vec<ParaQuaternion>,
    pub dp: ParaQuaternion,
}

impl TangentVector {
    /// `Re(Σ conj(q_a)δq_a + conj(p)δp)`.
    pub fn constraint_residual(&self, at: &SpherePoint) -> f64 {
        let mut acc = at.p.conj() * self.dp;
        for (q, dq) in at.q.iter().zip(&self.dq) {
            acc += q.conj() * *dq;
        }
        acc.re()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dq: self.dq.iter().map(|d| *d * c).collect(),
            dp: self.dp * c,
        }
    }

    fn max_abs(&self) -> f64 {
        self.dq.iter().fold(self.dp.max_abs(), |m, q| m.max(q.max_abs()))
    }
}

/// Image `(q', p')` of the transform; `Re(p') = −Σ norm2(q'_a)` on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct CayleyImage {
    pub q: Vec<ParaQuaternion>,
    pub p: ParaQuaternion,
}

impl CayleyImage {
    /// The group point `(q', Im p')`.
    pub fn model_point(&self) -> ModelPoint {
        ModelPoint {
            q: self.q.clone(),
            omega: self.p.im(),
        }
    }

    /// `Re(p') + Σ norm2(q'_a)`.
    pub fn embedding_residual(&self) -> f64 {
        self.p.re() + self.q.iter().map(|q| q.norm2()).sum::<f64>()
    }
}

fn inverse_off_locus(u: ParaQuaternion) -> Result<ParaQuaternion, CayleyError> {
    u.inv().map_err(|_| CayleyError::OnSingularLocus { norm2: u.norm2() })
}

/// `q' = (p−1)⁻¹q`, `p' = (p−1)⁻¹(p+1)`.
pub fn cayley_forward(pt: &SpherePoint) -> Result<CayleyImage, CayleyError> {
    let u = inverse_off_locus(pt.p - ParaQuaternion::ONE)?;
    Ok(CayleyImage {
        q: pt.q.iter().map(|q| u * *q).collect(),
        p: u * (pt.p + ParaQuaternion::ONE),
    })
}

/// `q = 2(p'−1)⁻¹q'`, `p = (p'−1)⁻¹(p'+1)`.
pub fn cayley_inverse(image: &CayleyImage) -> Result<SpherePoint, CayleyError> {
    let u = inverse_off_locus(image.p - ParaQuaternion::ONE)?;
    Ok(SpherePoint {
        q: image.q.iter().map(|q| u * *q * 2.0).collect(),
        p: u * (image.p + ParaQuaternion::ONE),
    })
}

fn check_tangent(pt: &SpherePoint, v: &TangentVector) -> Result<(), CayleyError> {
    if v.dq.len() != pt.n() {
        return Err(CayleyError::DimensionMismatch(pt.n(), v.dq.len()));
    }
    let residual = v.constraint_residual(pt);
    let scale = 1.0 + pt.max_abs() * v.max_abs();
    if !(residual.abs() <= 1e-10 * scale) {
        return Err(CayleyError::NotTangent { residual });
    }
    Ok(())
}

/// `η̃(v) = Σ(δq_a·q̄_a − q_a·δq̄_a) + δp·p̄ − p·δp̄`, purely imaginary.
pub fn eta_sphere_at(pt: &SpherePoint, v: &TangentVector) -> Result<ParaQuaternion, CayleyError> {
    check_tangent(pt, v)?;
    let mut acc = v.dp * pt.p.conj() - pt.p * v.dp.conj();
    for (q, dq) in pt.q.iter().zip(&v.dq) {
        acc += *dq * q.conj() - *q * dq.conj();
    }
    Ok(acc)
}

/// Exact differential of the transform, using `d(u⁻¹) = −u⁻¹ du u⁻¹`.
pub fn cayley_differential(pt: &SpherePoint, v: &TangentVector) -> Result<CayleyImage, CayleyError> {
    let u = inverse_off_locus(pt.p - ParaQuaternion::ONE)?;
    let du = -(u * v.dp * u);
    Ok(CayleyImage {
        q: pt.q.iter().zip(&v.dq).map(|(q, dq)| du * *q + u * *dq).collect(),
        p: du * (pt.p + ParaQuaternion::ONE) + u * v.dp,
    })
}

/// Contact form of the model evaluated on `dC(v)`, as an imaginary paraquaternion.
pub fn pulled_back_form(pt: &SpherePoint, v: &TangentVector) -> Result<ParaQuaternion, CayleyError> {
    let image = cayley_forward(pt)?;
    let d = cayley_differential(pt, v)?;
    let n = pt.n();
    let chart = image.model_point().to_chart();
    let tangent = ModelPoint {
        q: d.q.clone(),
        omega: d.p.im(),
    }
    .to_chart();
    let forms = contact_forms_at(n, &chart);
    let val = |s: usize| forms[s].iter().zip(&tangent).map(|(a, b)| a * b).sum::<f64>();
    Ok(ParaQuaternion::new(0.0, val(2), val(0), val(1)))
}

/// Both sides of `2 norm2(p−1)² Θ̃(dC v) = (p̄ − 1) η̃(v) (p − 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CayleySides {
    pub lhs: ParaQuaternion,
    pub rhs: ParaQuaternion,
}

impl CayleySides {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).max_abs()
    }

    pub fn scale(&self) -> f64 {
        self.lhs.max_abs().max(self.rhs.max_abs()).max(1.0)
    }
}

pub fn cayley_sides(pt: &SpherePoint, v: &TangentVector) -> Result<CayleySides, CayleyError> {
    let eta = eta_sphere_at(pt, v)?;
    let u = pt.p - ParaQuaternion::ONE;
    let nn = u.norm2();
    let theta = pulled_back_form(pt, v)?;
    Ok(CayleySides {
        lhs: theta * (2.0 * nn * nn),
        rhs: u.conj() * eta * u,
    })
}

/// Identity residual at one point, scaled by the larger side.
pub fn verify_cayley_identity(pt: &SpherePoint, v: &TangentVector) -> Result<Residual, CayleyError> {
    let sides = cayley_sides(pt, v)?;
    Ok(Residual::new(
        "cayley.contact_identity",
        "2 norm2(p-1)^2 (C*Theta)(v) = (conj(p)-1) eta(v) (p-1)",
        sides.residual(),
        sides.scale(),
    ))
}

/// Sphere sampler: draw `(q, p)` uniformly in `[lo, hi]`, keep `s = Σnorm2 ≥ 0.1`,
/// rescale by `1/√s`, and skip points near the singular locus.
/// Returns `None` for a rejected draw.
pub fn sample_sphere_point(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Option<SpherePoint> {
    let mut draw = || ParaQuaternion::new(rng.random_range(lo..=hi), rng.random_range(lo..=hi), rng.random_range(lo..=hi), rng.random_range(lo..=hi));
    let q: Vec<_> = (0..n).map(|_| draw()).collect();
    let p = draw();
    let s = q.iter().map(|x| x.norm2()).sum::<f64>() + p.norm2();
    if s < 0.1 {
        return None;
    }
    let k = 1.0 / s.sqrt();
    let pt = SpherePoint::new(q.iter().map(|x| *x * k).collect(), p * k);
    if (pt.p - ParaQuaternion::ONE).norm2().abs() < 1e-3 {
        return None;
    }
    Some(pt)
}

/// Draw `(δq, δp)` in `[−1, 1]` and project out the normal component
/// `c·(q, p)`, which is exact on the sphere.
pub fn sample_tangent(rng: &mut impl Rng, pt: &SpherePoint) -> TangentVector {
    let mut draw = || ParaQuaternion::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
    let raw = TangentVector {
        dq: (0..pt.n()).map(|_| draw()).collect(),
        dp: draw(),
    };
    let c = raw.constraint_residual(pt) / (1.0 + pt.constraint_residual());
    TangentVector {
        dq: raw.dq.iter().zip(&pt.q).map(|(d, q)| *d - *q * c).collect(),
        dp: raw.dp - pt.p * c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn samples(n: usize, count: usize, seed: u64) -> Vec<(SpherePoint, TangentVector)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < count {
            if let Some(pt) = sample_sphere_point(&mut rng, n, -1.0, 1.0) {
                let v = sample_tangent(&mut rng, &pt);
                out.push((pt, v));
            }
        }
        out
    }

    #[test]
    fn base_point() {
        for n in 1..=2 {
            let pt = SpherePoint::base(n);
            let image = cayley_forward(&pt).unwrap();
            assert!(image.q.iter().all(|q| *q == ParaQuaternion::ZERO));
            assert_eq!(image.p, ParaQuaternion::ZERO);
            let v = TangentVector {
                dq: vec![ParaQuaternion::new(0.3, -0.2, 0.5, 0.1); n],
                dp: ParaQuaternion::new(0.0, 0.7, -0.4, 0.2),
            };
            assert!(verify_cayley_identity(&pt, &v).unwrap().max_residual < 1e-10);
        }
    }

    #[test]
    fn eta_at_base_point() {
        let pt = SpherePoint::base(1);
        let s = 0.37;
        let v = TangentVector {
            dq: vec![ParaQuaternion::ZERO],
            dp: ParaQuaternion::R3 * s,
        };
        assert_eq!(eta_sphere_at(&pt, &v).unwrap(), ParaQuaternion::R3 * (-2.0 * s));
    }

    #[test]
    fn singular_locus() {
        let pt = SpherePoint::new(vec![ParaQuaternion::ZERO], ParaQuaternion::ONE);
        assert!(matches!(cayley_forward(&pt), Err(CayleyError::OnSingularLocus { .. })));
        let eps = 1e-3;
        let near = SpherePoint::new(vec![ParaQuaternion::ZERO], ParaQuaternion::ONE + ParaQuaternion::R1 * eps);
        assert!(((near.p - ParaQuaternion::ONE).norm2() + eps * eps).abs() < 1e-18);
        assert!(cayley_forward(&near).is_ok());
    }

    #[test]
    fn not_tangent_rejected() {
        let pt = SpherePoint::base(1);
        let v = TangentVector {
            dq: vec![ParaQuaternion::ZERO],
            dp: ParaQuaternion::ONE,
        };
        assert!(matches!(eta_sphere_at(&pt, &v), Err(CayleyError::NotTangent { .. })));
    }

    #[test]
    fn random_samples() {
        for n in 1..=2 {
            for (pt, v) in samples(n, 20, 7 + n as u64) {
                assert!(pt.constraint_residual().abs() < 1e-12);
                assert!(v.constraint_residual(&pt).abs() < 1e-12);
                let image = cayley_forward(&pt).unwrap();
                assert!(image.embedding_residual().abs() < 1e-10 * (1.0 + image.p.max_abs()));
                let back = cayley_inverse(&image).unwrap();
                let diff = back.q.iter().zip(&pt.q).fold((back.p - pt.p).max_abs(), |m, (a, b)| m.max((*a - *b).max_abs()));
                assert!(diff < 1e-10, "round trip {diff:e}");
                let r = verify_cayley_identity(&pt, &v).unwrap();
                assert!(r.passes(1e-8), "n={n} {:e}", r.relative());
                let eta = eta_sphere_at(&pt, &v).unwrap();
                assert_eq!(eta.re(), 0.0);
            }
        }
    }

    #[test]
    fn linear_in_the_vector() {
        for (pt, v) in samples(2, 5, 3) {
            let a = cayley_sides(&pt, &v).unwrap();
            let b = cayley_sides(&pt, &v.scaled(2.5)).unwrap();
            assert!((b.lhs - a.lhs * 2.5).max_abs() < 1e-9 * a.scale());
            assert!((b.rhs - a.rhs * 2.5).max_abs() < 1e-9 * a.scale());
        }
    }

    #[test]
    fn wrong_sign_breaks_identity() {
        // flipping the orientation of η̃ must be detected
        for (pt, v) in samples(1, 5, 11) {
            let sides = cayley_sides(&pt, &v).unwrap();
            let broken = CayleySides {
                lhs: sides.lhs,
                rhs: -sides.rhs,
            };
            if sides.rhs.max_abs() > 1e-3 {
                assert!(broken.residual() / broken.scale() > 1e-3);
            }
        }
    }
}
