//! Conformal deformations `η̄ = η/2h` of the flat model.
//!
//! Everything is expressed in the original left-invariant frame. The deformed
//! metric `ḡ = g/2h` is carried explicitly, the structure endomorphisms are
//! unchanged. Bilinear forms named `S` are lowered with the base metric:
//! `s_h[X](Y, Z) = g(S_X Y, Z)`.

use thiserror::Error;

use crate::jets::{GradientData, JetError, JetTable, VectorField, FrameFields};
use crate::residual::max_abs;
use crate::tensor::{
    casimir_project, cyclic, eps, kulkarni_nomizu, signed_trace, signed_trace_pair, i_applied,
    PqcFrameData, Tensor2, Tensor4,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConformalError {
    #[error("conformal factor is not positive (h = {value:e})")]
    NonpositiveFactor { value: f64 },
    #[error("finite-difference stencil leaves the domain h > 0 (h = {value:e} along frame direction {direction})")]
    StencilOutOfDomain { value: f64, direction: usize },
    #[error("third-order jets were not computed for this factor")]
    MissingThirdOrder,
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Which metric lowers the deformed curvature on the left of the
/// transformation law for `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingConvention {
    /// `2h·ḡ(R̄(X,Y)Z,V) = g(R̄(X,Y)Z,V)`
    BaseMetric,
    /// `(2h)²·ḡ(R̄(X,Y)Z,V)`
    SquaredFactor,
}

impl PairingConvention {
    pub const ALL: [PairingConvention; 2] = [Self::BaseMetric, Self::SquaredFactor];

    pub fn name(self) -> &'static str {
        match self {
            Self::BaseMetric => "2h*gbar(Rbar(X,Y)Z,V)",
            Self::SquaredFactor => "(2h)^2*gbar(Rbar(X,Y)Z,V)",
        }
    }

    fn factor(self, h: f64) -> f64 {
        match self {
            Self::BaseMetric => 2.0 * h,
            Self::SquaredFactor => 4.0 * h * h,
        }
    }
}

/// `g(S_X Y, Z)` for all frame triples.
pub fn s_horizontal_all(gd: &GradientData, frame: &PqcFrameData) -> Vec<Tensor2> {
    let d = frame.dim();
    let h = gd.value;
    let dh = &gd.dh;
    let dhi: Vec<Vec<f64>> = (0..3).map(|s| gd.dh_i(frame, s)).collect();
    let g = frame.g();
    (0..d)
        .map(|x| {
            Tensor2::from_fn(d, |y, z| {
                let mut v = dh[x] * g[(y, z)] + dh[y] * g[(z, x)] - dh[z] * g[(x, y)];
                for s in 0..3 {
                    let om = frame.omega(s);
                    v += eps(s)
                        * (dhi[s][x] * om[(y, z)] - dhi[s][y] * om[(z, x)] - dhi[s][z] * om[(x, y)]);
                }
                -v / (2.0 * h)
            })
        })
        .collect()
}

/// `g(S_{ξ̄_i} X, Y)` for `i = 0, 1, 2`.
pub fn s_vertical_all(gd: &GradientData, frame: &PqcFrameData) -> [Tensor2; 3] {
    let n = frame.n() as f64;
    let h = gd.value;
    let hess = &gd.hessian;
    let dh = &gd.dh;
    let dhi: Vec<Vec<f64>> = (0..3).map(|s| gd.dh_i(frame, s)).collect();
    let lap_term = (-gd.laplacian + 2.0 / h * gd.grad_norm2) / (4.0 * n);
    [0, 1, 2].map(|i| {
        let (_, j, k) = cyclic(i);
        let ii = frame.i(i);
        let quad = &(&hess.post(ii) - &hess.pre(ii))
            + &(&(&hess.pre_post(frame.i(k), frame.i(j)) - &hess.pre_post(frame.i(j), frame.i(k))) * eps(i));
        let mut out = &quad * 0.25;
        let d = frame.dim();
        let lin = Tensor2::from_fn(d, |x, y| {
            eps(i) * (dhi[k][x] * dhi[j][y] - dhi[j][x] * dhi[k][y]) - dhi[i][x] * dh[y]
                + dh[x] * dhi[i][y]
        });
        out += &(&lin * (1.0 / (2.0 * h)));
        out += &(frame.omega(i) * lap_term);
        out += &(frame.omega(j) * (eps(i) * gd.dh_xi[k]));
        out -= &(frame.omega(k) * (eps(i) * gd.dh_xi[j]));
        out
    })
}

/// `M = (1/2h)(∇²h − (1/2h)[dh⊗dh − Σ ε_s dh∘I_s ⊗ dh∘I_s + ½|∇h|² g])`.
pub fn m_tensor(gd: &GradientData, frame: &PqcFrameData) -> Tensor2 {
    let h = gd.value;
    let dd = Tensor2::outer(&gd.dh, &gd.dh);
    let mut corr = dd.clone();
    for s in 0..3 {
        corr -= &(&dd.both(frame.i(s)) * eps(s));
    }
    corr += &(frame.g() * (0.5 * gd.grad_norm2));
    &(&gd.hessian - &(&corr * (1.0 / (2.0 * h)))) * (1.0 / (2.0 * h))
}

/// Deformed torsion tensors `(τ̄, μ̄)` over a flat base, explicit form.
pub fn deformed_tau_mu(gd: &GradientData, frame: &PqcFrameData) -> (Tensor2, Tensor2) {
    tau_mu_from(gd.value, &gd.dh, &gd.hessian, &gd.dh_xi, frame)
}

fn tau_mu_from(h: f64, dh: &[f64], hess: &Tensor2, xi: &[f64; 3], frame: &PqcFrameData) -> (Tensor2, Tensor2) {
    let (a, b) = tau_mu_numerators(h, dh, hess, xi, frame);
    (&a * (1.0 / h), &b * (1.0 / (2.0 * h)))
}

fn twisted_sum(t: &Tensor2, frame: &PqcFrameData) -> Tensor2 {
    let mut out = Tensor2::zeros(t.dim());
    for s in 0..3 {
        out += &(&t.both(frame.i(s)) * eps(s));
    }
    out
}

// τ̄ = A/h and μ̄ = B/2h
fn tau_mu_numerators(
    h: f64,
    dh: &[f64],
    hess: &Tensor2,
    xi: &[f64; 3],
    frame: &PqcFrameData,
) -> (Tensor2, Tensor2) {
    let n = frame.n() as f64;
    let tw = twisted_sum(hess, frame);
    let mut a = &(hess * 3.0) + &tw;
    for s in 0..3 {
        a -= &(frame.omega(s) * (4.0 * eps(s) * xi[s]));
    }
    let a = &a * 0.25;
    let dd = Tensor2::outer(dh, dh);
    let dd_part = &dd - &twisted_sum(&dd, frame);
    let lap = signed_trace(hess, frame);
    let g2 = signed_trace(&dd, frame);
    let b = &(&(&(hess - &tw) - &(&dd_part * (2.0 / h))) * 0.25) - &(frame.g() * ((lap - 2.0 * g2 / h) / (4.0 * n)));
    (a, b)
}

/// `Scal̄ = −8(n+2)² h⁻¹|∇h|² + 8(n+2)Δh` over a flat base.
pub fn scal_bar(gd: &GradientData, n: usize) -> f64 {
    let k = 8.0 * (n as f64 + 2.0);
    -k * (n as f64 + 2.0) * gd.grad_norm2 / gd.value + k * gd.laplacian
}

/// Right-hand side of the curvature transformation law for a flat base:
/// the base-metric lowering of the deformed curvature, built from `M`.
pub fn transformation_law_rhs(m: &Tensor2, frame: &PqcFrameData) -> Tensor4 {
    let n = frame.n() as f64;
    let d = frame.dim();
    let tr_m = signed_trace(m, frame);
    let m_s = [0, 1, 2].map(|s| signed_trace_pair(m, frame, s));
    let mut out = kulkarni_nomizu(frame.g(), m).scale(-1.0);
    for s in 0..3 {
        out += &kulkarni_nomizu(frame.omega(s), &i_applied(m, frame, s)).scale(eps(s));
    }
    out -= &cyclic_term(m, frame);
    let anti = m - &m.transpose();
    out -= &Tensor4::outer(&anti, frame.g());
    for s in 0..3 {
        let mi = m.post(frame.i(s));
        let part = &mi - &mi.transpose();
        out -= &Tensor4::outer(&part, frame.omega(s)).scale(eps(s));
    }
    for s in 0..3 {
        out += &Tensor4::outer(frame.omega(s), frame.omega(s)).scale(tr_m / (2.0 * n) * eps(s));
    }
    for i in 0..3 {
        let (_, j, k) = cyclic(i);
        let jk = Tensor4::outer(frame.omega(j), frame.omega(k));
        let kj = Tensor4::outer(frame.omega(k), frame.omega(j));
        out += &(&jk - &kj).scale(m_s[i] / (2.0 * n));
    }
    debug_assert_eq!(out.dim(), d);
    out
}

/// `½ Σ_cyc ε_i ω_i(X,Y)[L(Z,I_iV) − L(I_iZ,V) − ε_i L(I_jZ,I_kV) + ε_i L(I_kZ,I_jV)]`.
pub fn cyclic_term(l: &Tensor2, frame: &PqcFrameData) -> Tensor4 {
    let mut out = Tensor4::zeros(l.dim());
    for i in 0..3 {
        let (_, j, k) = cyclic(i);
        let b = &(&l.post(frame.i(i)) - &l.pre(frame.i(i)))
            + &(&(&l.pre_post(frame.i(k), frame.i(j)) - &l.pre_post(frame.i(j), frame.i(k))) * eps(i));
        out += &Tensor4::outer(frame.omega(i), &b).scale(0.5 * eps(i));
    }
    out
}

/// All deformation data at one point.
#[derive(Debug, Clone)]
pub struct DeformationData {
    pub n: usize,
    pub point: Vec<f64>,
    pub base: PqcFrameData,
    /// Frame data of the deformed structure: `ḡ = g/2h`, same `I_s`.
    pub bar: PqcFrameData,
    pub jets: GradientData,
    /// Chart components of `ξ̄_s = 2h ξ_s + I_s∇h`.
    pub xi_bar: [Vec<f64>; 3],
    pub s_h: Vec<Tensor2>,
    pub s_xibar: [Tensor2; 3],
    /// `g(S_{ξ_s} X, Y)`
    pub s_xi: [Tensor2; 3],
    pub m: Tensor2,
    pub tr_m: f64,
    pub m_s: [f64; 3],
    pub tau_bar: Tensor2,
    pub mu_bar: Tensor2,
    pub scal_bar: f64,
}

impl DeformationData {
    pub fn at(table: &JetTable, point: &[f64]) -> Result<Self, ConformalError> {
        let n = table.n();
        let base = PqcFrameData::build_adapted_frame(n).expect("n >= 1");
        let h = table.value(point);
        if !(h > 0.0) {
            return Err(ConformalError::NonpositiveFactor { value: h });
        }
        let gd = table.gradient_data(point, &base);
        let fields = FrameFields::new(n);
        let grad = gd.gradient(&base);
        let s_h = s_horizontal_all(&gd, &base);
        let s_xibar = s_vertical_all(&gd, &base);
        let d = base.dim();
        let mut xi_bar: [Vec<f64>; 3] = Default::default();
        let mut s_xi: [Tensor2; 3] = [Tensor2::zeros(d), Tensor2::zeros(d), Tensor2::zeros(d)];
        for s in 0..3 {
            let ig = base.i(s).apply(&grad);
            let mut comp: Vec<f64> = fields.reeb(s).at(point).iter().map(|v| 2.0 * h * v).collect();
            let mut acc = s_xibar[s].clone();
            for (a, w) in ig.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                for (c, v) in fields.horizontal(a).at(point).into_iter().enumerate() {
                    comp[c] += w * v;
                }
                acc -= &(&s_h[a] * *w);
            }
            xi_bar[s] = comp;
            s_xi[s] = &acc * (1.0 / (2.0 * h));
        }
        let m = m_tensor(&gd, &base);
        let tr_m = signed_trace(&m, &base);
        let m_s = [0, 1, 2].map(|s| signed_trace_pair(&m, &base, s));
        let (tau_bar, mu_bar) = deformed_tau_mu(&gd, &base);
        let scal = scal_bar(&gd, n);
        let bar = base.with_metric_scale(1.0 / (2.0 * h));
        Ok(Self {
            n,
            point: point.to_vec(),
            base,
            bar,
            jets: gd,
            xi_bar,
            s_h,
            s_xibar,
            s_xi,
            m,
            tr_m,
            m_s,
            tau_bar,
            mu_bar,
            scal_bar: scal,
        })
    }

    pub fn h(&self) -> f64 {
        self.jets.value
    }

    pub fn s_horizontal(&self, x: usize, y: usize, z: usize) -> f64 {
        self.s_h[x][(y, z)]
    }

    pub fn s_vertical(&self, i: usize, x: usize, y: usize) -> f64 {
        self.s_xibar[i][(x, y)]
    }

    /// `tr M` from its closed form `(2h)⁻¹(Δh − (n+2)h⁻¹|∇h|²)`.
    pub fn tr_m_closed(&self) -> f64 {
        let h = self.h();
        (self.jets.laplacian - (self.n as f64 + 2.0) / h * self.jets.grad_norm2) / (2.0 * h)
    }

    /// `M_s` from its closed form `−2n h⁻¹ dh(ξ_s)`.
    pub fn m_s_closed(&self) -> [f64; 3] {
        let k = -2.0 * self.n as f64 / self.h();
        [0, 1, 2].map(|s| k * self.jets.dh_xi[s])
    }

    /// Deformed curvature `ḡ(R̄(X,Y)Z,V)` solved from the transformation law.
    pub fn curvature_bar_closed_form(&self, convention: PairingConvention) -> Tensor4 {
        transformation_law_rhs(&self.m, &self.base).scale(1.0 / convention.factor(self.h()))
    }

    /// Torsion endomorphisms `ḡ(T̄(ξ̄_i, X), Y)` of the deformed canonical connection.
    pub fn deformed_torsion_endomorphisms(&self) -> [Tensor2; 3] {
        let h = self.h();
        let dhi: Vec<Vec<f64>> = (0..3).map(|s| self.jets.dh_i(&self.base, s)).collect();
        [0, 1, 2].map(|i| {
            let (_, j, k) = cyclic(i);
            let quad = &Tensor2::outer(&dhi[k], &dhi[j]) - &Tensor2::outer(&dhi[j], &dhi[k]);
            let t = &(&self.s_xibar[i] - &self.jets.hessian.post(self.base.i(i))) - &(&quad * (eps(i) / h));
            &t * (1.0 / (2.0 * h))
        })
    }

    /// Raised horizontal connection difference: column `c` of entry `a` holds
    /// the components of `S_{e_a} e_c`.
    pub fn s_raised(&self) -> Vec<Tensor2> {
        raise(&self.s_h, &self.base)
    }
}

fn raise(lowered: &[Tensor2], frame: &PqcFrameData) -> Vec<Tensor2> {
    lowered
        .iter()
        .map(|t| Tensor2::from_matrix(frame.g_inv().matrix() * t.matrix().transpose()))
        .collect()
}

/// Finite-difference settings for the direct curvature oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilOptions {
    /// Base step, multiplied by `max(1, |p|∞)`.
    pub step: f64,
    /// Apply one Richardson extrapolation level.
    pub richardson: bool,
}

impl Default for StencilOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            richardson: true,
        }
    }
}

fn raised_s_at(table: &JetTable, frame: &PqcFrameData, point: &[f64], direction: usize) -> Result<Vec<Tensor2>, ConformalError> {
    let h = table.value(point);
    if !(h > 0.0) {
        return Err(ConformalError::StencilOutOfDomain { value: h, direction });
    }
    let gd = table.gradient_data(point, frame);
    Ok(raise(&s_horizontal_all(&gd, frame), frame))
}

fn central_difference(
    table: &JetTable,
    frame: &PqcFrameData,
    point: &[f64],
    v: &[f64],
    step: f64,
    direction: usize,
) -> Result<Vec<Tensor2>, ConformalError> {
    let shifted = |k: f64| -> Vec<f64> { point.iter().zip(v).map(|(p, w)| p + k * step * w).collect() };
    let m2 = raised_s_at(table, frame, &shifted(-2.0), direction)?;
    let m1 = raised_s_at(table, frame, &shifted(-1.0), direction)?;
    let p1 = raised_s_at(table, frame, &shifted(1.0), direction)?;
    let p2 = raised_s_at(table, frame, &shifted(2.0), direction)?;
    Ok((0..m2.len())
        .map(|b| {
            let num = &(&(&m2[b] - &p2[b]) + &(&p1[b] * 8.0)) - &(&m1[b] * 8.0);
            &num * (1.0 / (12.0 * step))
        })
        .collect())
}

/// Deformed curvature `ḡ(R̄(X,Y)Z,V)` by differentiating the connection
/// coefficients numerically.
pub fn curvature_bar_direct(table: &JetTable, point: &[f64], opts: StencilOptions) -> Result<Tensor4, ConformalError> {
    let def = DeformationData::at(table, point)?;
    curvature_bar_direct_with(table, &def, opts)
}

pub fn curvature_bar_direct_with(table: &JetTable, def: &DeformationData, opts: StencilOptions) -> Result<Tensor4, ConformalError> {
    let frame = &def.base;
    let d = frame.dim();
    let point = &def.point;
    let fields = FrameFields::new(def.n);
    let scale = point.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let step = opts.step * scale;
    // ds[a][b] = e_a(S_b) in raised form
    let mut ds: Vec<Vec<Tensor2>> = Vec::with_capacity(d);
    for a in 0..d {
        let v = fields.horizontal(a).at(point);
        let coarse = central_difference(table, frame, point, &v, step, a)?;
        let deriv = if opts.richardson {
            let fine = central_difference(table, frame, point, &v, step / 2.0, a)?;
            fine.iter()
                .zip(&coarse)
                .map(|(f, c)| &(&(f * 16.0) - c) * (1.0 / 15.0))
                .collect()
        } else {
            coarse
        };
        ds.push(deriv);
    }
    Ok(assemble_curvature(def, &ds))
}

/// `ḡ(R̄(e_a,e_b)e_c, e_f)` from the raised derivative array `ds[a][b] = e_a(S_b)`.
fn assemble_curvature(def: &DeformationData, ds: &[Vec<Tensor2>]) -> Tensor4 {
    let frame = &def.base;
    let d = frame.dim();
    let sup = def.s_raised();
    let sxi = raise(&def.s_xi, frame);
    let gbar = def.bar.g().matrix();
    let mut out = Tensor4::zeros(d);
    for a in 0..d {
        for b in 0..d {
            let mut m = &ds[a][b] - &ds[b][a];
            m += &Tensor2::from_matrix(sup[a].matrix() * sup[b].matrix());
            m -= &Tensor2::from_matrix(sup[b].matrix() * sup[a].matrix());
            for s in 0..3 {
                let w = 2.0 * eps(s) * frame.omega(s)[(a, b)];
                if w != 0.0 {
                    m -= &(&sxi[s] * w);
                }
            }
            let lowered = m.matrix().transpose() * gbar;
            for c in 0..d {
                for f in 0..d {
                    out.set(a, b, c, f, lowered[(c, f)]);
                }
            }
        }
    }
    out
}

/// Result of fixing the pairing convention against the direct oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingCalibration {
    pub chosen: PairingConvention,
    /// Relative mismatch with the direct curvature, per convention.
    pub mismatch: Vec<(PairingConvention, f64)>,
}

pub fn calibrate_pairing(def: &DeformationData, direct: &Tensor4) -> PairingCalibration {
    let scale = direct.max_abs().max(f64::MIN_POSITIVE);
    let mismatch: Vec<(PairingConvention, f64)> = PairingConvention::ALL
        .iter()
        .map(|c| {
            let closed = def.curvature_bar_closed_form(*c);
            (*c, closed.max_abs_diff(direct) / scale)
        })
        .collect();
    let chosen = mismatch
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|m| m.0)
        .expect("two conventions");
    PairingCalibration { chosen, mismatch }
}

/// Frame derivatives of `τ̄`, `μ̄`, `Scal̄` and the raised connection
/// difference, as needed by the divergence identity.
#[derive(Debug, Clone)]
pub struct DivergenceData {
    /// `e_a(τ̄)`
    pub dtau: Vec<Tensor2>,
    pub dmu: Vec<Tensor2>,
    pub dscal: Vec<f64>,
    pub s_raised: Vec<Tensor2>,
}

impl DivergenceData {
    /// Data of an undeformed structure: everything vanishes.
    pub fn zero(n: usize) -> Self {
        let d = 4 * n;
        Self {
            dtau: vec![Tensor2::zeros(d); d],
            dmu: vec![Tensor2::zeros(d); d],
            dscal: vec![0.0; d],
            s_raised: vec![Tensor2::zeros(d); d],
        }
    }
}

/// Exact frame derivatives of the explicit `τ̄`, `μ̄`, `Scal̄` via the product rule
/// over third-order jets.
pub fn divergence_data(table: &JetTable, def: &DeformationData) -> Result<DivergenceData, ConformalError> {
    let point = &def.point;
    let third = table.third_order_all(point).ok_or(ConformalError::MissingThirdOrder)?;
    let frame = &def.base;
    let n = def.n as f64;
    let d = frame.dim();
    let gd = &def.jets;
    let h = gd.value;
    let xi_e: Vec<Vec<f64>> = (0..3).map(|s| table.xi_derivatives(point, s)).collect();
    let (a0, b0) = tau_mu_numerators(h, &gd.dh, &gd.hessian, &gd.dh_xi, frame);
    let dd = Tensor2::outer(&gd.dh, &gd.dh);
    let dd_part = &dd - &twisted_sum(&dd, frame);
    let mut dtau = Vec::with_capacity(d);
    let mut dmu = Vec::with_capacity(d);
    let mut dscal = Vec::with_capacity(d);
    for a in 0..d {
        let hp = gd.dh[a];
        let dhp: Vec<f64> = (0..d).map(|b| gd.hessian[(a, b)]).collect();
        let hessp = &third[a];
        let xip = [0, 1, 2].map(|s| xi_e[s][a]);
        let lapp = signed_trace(hessp, frame);
        let g2p = 2.0 * (0..d)
            .map(|b| (0..d).map(|c| frame.g_inv()[(b, c)] * dhp[b] * gd.dh[c]).sum::<f64>())
            .sum::<f64>();

        let twp = twisted_sum(hessp, frame);
        let mut ap = &(hessp * 3.0) + &twp;
        for s in 0..3 {
            ap -= &(frame.omega(s) * (4.0 * eps(s) * xip[s]));
        }
        let ap = &ap * 0.25;
        dtau.push(&(&ap * (1.0 / h)) - &(&a0 * (hp / (h * h))));

        let ddp = &Tensor2::outer(&dhp, &gd.dh) + &Tensor2::outer(&gd.dh, &dhp);
        let ddp_part = &ddp - &twisted_sum(&ddp, frame);
        let inner = &(&(hessp - &twp) - &(&ddp_part * (2.0 / h))) + &(&dd_part * (2.0 * hp / (h * h)));
        let g2 = gd.grad_norm2;
        let bp = &(&inner * 0.25) - &(frame.g() * ((lapp - 2.0 * g2p / h + 2.0 * g2 * hp / (h * h)) / (4.0 * n)));
        dmu.push(&(&bp * (1.0 / (2.0 * h))) - &(&b0 * (hp / (2.0 * h * h))));

        let k = 8.0 * (n + 2.0);
        dscal.push(-k * (n + 2.0) * (g2p / h - g2 * hp / (h * h)) + k * lapp);
    }
    Ok(DivergenceData {
        dtau,
        dmu,
        dscal,
        s_raised: def.s_raised(),
    })
}

/// Residuals of the defining conditions of `S`:
/// `g(S_XY,Z) + g(S_XZ,Y) = −h⁻¹dh(X)g(Y,Z)` and
/// `g(S_XY,Z) − g(S_YX,Z) = h⁻¹Σ ε_s ω_s(X,Y) dh(I_sZ)`.
pub fn s_condition_residuals(def: &DeformationData) -> (f64, f64, f64) {
    let frame = &def.base;
    let d = frame.dim();
    let h = def.h();
    let dh = &def.jets.dh;
    let dhi: Vec<Vec<f64>> = (0..3).map(|s| def.jets.dh_i(frame, s)).collect();
    let (mut metric, mut torsion, mut scale) = (0.0f64, 0.0f64, 0.0f64);
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let sxyz = def.s_h[x][(y, z)];
                scale = scale.max(sxyz.abs());
                let lhs = sxyz + def.s_h[x][(z, y)];
                metric = metric.max((lhs + dh[x] * frame.g()[(y, z)] / h).abs());
                let lhs = sxyz - def.s_h[y][(x, z)];
                let rhs: f64 = (0..3)
                    .map(|s| eps(s) * frame.omega(s)[(x, y)] * dhi[s][z])
                    .sum::<f64>()
                    / h;
                torsion = torsion.max((lhs - rhs).abs());
            }
        }
    }
    (metric, torsion, scale)
}

/// Properties of `(τ̄, μ̄)`: symmetric, trace-free, in the `[−1]` resp. `[3]`
/// eigenspace. Returns `(tau_residual, mu_residual, scale)`.
pub fn torsion_property_residuals(tau: &Tensor2, mu: &Tensor2, frame: &PqcFrameData) -> (f64, f64, f64) {
    let (t3, _) = casimir_project(tau, frame);
    let (_, mm1) = casimir_project(mu, frame);
    let t = (tau - &tau.transpose())
        .max_abs()
        .max(signed_trace(tau, frame).abs())
        .max(t3.max_abs());
    let m = (mu - &mu.transpose())
        .max_abs()
        .max(signed_trace(mu, frame).abs())
        .max(mm1.max_abs());
    (t, m, tau.max_abs().max(mu.max_abs()))
}

/// Chart vector of a frame field at a point (re-exported for callers that
/// build stencils themselves).
pub fn frame_vector(n: usize, k: usize, point: &[f64]) -> Vec<f64> {
    VectorField::frame(n, crate::jets::FieldId::Horizontal(k))
        .expect("index in range")
        .at(point)
}

/// Largest entry over a list of tensors.
pub fn max_abs_all(ts: &[Tensor2]) -> f64 {
    max_abs(&ts.iter().map(Tensor2::max_abs).collect::<Vec<_>>())
}
