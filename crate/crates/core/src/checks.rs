//! Per-suite check routines and their default tolerances.

use rand::Rng;

use crate::cayley::{cayley_forward, cayley_inverse, verify_cayley_identity, CayleyError, SpherePoint, TangentVector};
use crate::conformal::{
    calibrate_pairing, curvature_bar_direct_with, divergence_data, s_condition_residuals, torsion_property_residuals,
    ConformalError, DeformationData, PairingCalibration, StencilOptions,
};
use crate::invariants::{
    flatness_verdict, l_tensor, pwr_tensor, ricci_traces, torsion_from_tau_mu, torsion_split,
    verify_pwr_properties, verify_structure_identities, wpqc_explicit, wpqc_tensor, FlatnessVerdict,
};
use crate::jets::JetTable;
use crate::paraquat::ParaQuaternion;
use crate::residual::Residual;
use crate::tensor::{
    casimir, casimir_project, eps, four_part_split, sign_component, signed_trace, PqcFrameData, Tensor2,
};

/// Default tolerance for a residual id. Unknown ids get the exact-jet value.
pub fn default_tolerance(id: &str) -> f64 {
    match id {
        "algebra.unit_products" => 0.0,
        "conformal.closed_vs_direct" | "conformal.yamabe_direct" => 1e-6,
        "conformal.yamabe" => 1e-8,
        "structure.ricci" | "structure.rho" | "structure.varrho" | "structure.zeta" => 1e-7,
        "structure.pair_swap" | "structure.sp1_part" | "structure.curvature_three_part" | "structure.divergence" => 1e-6,
        "pwr.trace_free" | "pwr.minus_one_part" | "w.projector" | "w.explicit" => 1e-7,
        "cayley.contact_identity" => 1e-8,
        _ if id.starts_with("algebra.") || id.starts_with("model.") => 1e-12,
        _ => 1e-10,
    }
}

fn random_pq(rng: &mut impl Rng) -> ParaQuaternion {
    ParaQuaternion::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    )
}

fn euclid2(p: ParaQuaternion) -> f64 {
    p.t * p.t + p.x * p.x + p.y * p.y + p.z * p.z
}

/// Split-quaternion algebra and Casimir/invariant algebra checks.
pub fn algebra_checks(rng: &mut impl Rng, n: usize, pairs: usize, tensors: usize) -> Vec<Residual> {
    let mut out = Vec::new();
    let mut worst = 0.0f64;
    let mut assoc = 0.0f64;
    for _ in 0..pairs {
        let (p, q, r) = (random_pq(rng), random_pq(rng), random_pq(rng));
        let rel = ((p * q).norm2() - p.norm2() * q.norm2()).abs() / (euclid2(p) * euclid2(q)).max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        assoc = assoc.max(((p * q) * r - p * (q * r)).max_abs());
    }
    out.push(Residual::absolute("algebra.norm_multiplicative", "norm2(pq) = norm2(p) norm2(q)", worst));
    out.push(Residual::absolute("algebra.associative", "(pq)r = p(qr)", assoc));

    // r1² = r2² = 1, r3² = −1, r1r2 = −r2r1 = r3, r2r3 = −r3r2 = −r1, r3r1 = −r1r3 = −r2
    use ParaQuaternion as P;
    let table = [
        (P::R1, P::R1, P::ONE),
        (P::R2, P::R2, P::ONE),
        (P::R3, P::R3, -P::ONE),
        (P::R1, P::R2, P::R3),
        (P::R2, P::R1, -P::R3),
        (P::R2, P::R3, -P::R1),
        (P::R3, P::R2, P::R1),
        (P::R3, P::R1, -P::R2),
        (P::R1, P::R3, P::R2),
    ];
    let units = table.iter().map(|(a, b, c)| (*a * *b - *c).max_abs()).fold(0.0, f64::max);
    out.push(Residual::absolute("algebra.unit_products", "multiplication table of r1, r2, r3", units));

    let frame = PqcFrameData::build_adapted_frame(n).expect("n >= 1");
    let d = frame.dim();
    let (mut idem, mut compl, mut eigen, mut recon, mut forbidden) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let forbidden_patterns = [[1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [-1.0, 1.0, 1.0], [-1.0, -1.0, -1.0]];
    for _ in 0..tensors {
        let t = Tensor2::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let (t3, tm1) = casimir_project(&t, &frame);
        let (t33, t3m) = casimir_project(&t3, &frame);
        let (tm3, tmm) = casimir_project(&tm1, &frame);
        idem = idem
            .max((&t33 - &t3).max_abs())
            .max((&tmm - &tm1).max_abs())
            .max(t3m.max_abs())
            .max(tm3.max_abs());
        compl = compl.max((&(&t3 + &tm1) - &t).max_abs());
        eigen = eigen
            .max((&casimir(&t3, &frame) - &(&t3 * 3.0)).max_abs())
            .max((&casimir(&tm1, &frame) + &tm1).max_abs());
        recon = recon.max((&four_part_split(&t, &frame).sum() - &t).max_abs());
        for signs in forbidden_patterns {
            forbidden = forbidden.max(sign_component(&t, &frame, signs).max_abs());
        }
    }
    out.push(Residual::absolute("algebra.casimir_idempotent", "projectors onto [3] and [-1] are idempotent and orthogonal", idem));
    out.push(Residual::absolute("algebra.casimir_complete", "T = T_[3] + T_[-1]", compl));
    out.push(Residual::absolute("algebra.casimir_eigen", "dagger T_[3] = 3 T_[3], dagger T_[-1] = -T_[-1]", eigen));
    out.push(Residual::absolute("algebra.four_part_reconstruct", "four-part split sums to the input", recon));
    out.push(Residual::absolute("algebra.four_part_forbidden", "forbidden sign patterns vanish", forbidden));
    out
}

/// Result of the conformal pipeline at one point.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub residuals: Vec<Residual>,
    pub calibration: PairingCalibration,
    pub projector_verdict: FlatnessVerdict,
    pub explicit_verdict: FlatnessVerdict,
    pub scal_bar: f64,
}

/// Full conformal pipeline at one point: both curvature paths, torsion, `L`,
/// `PWR`, `W` by both routes, the structure identities and the `M` relations.
pub fn conformal_point_checks(table: &JetTable, point: &[f64], opts: StencilOptions) -> Result<PointOutcome, ConformalError> {
    let def = DeformationData::at(table, point)?;
    let n = def.n;
    let nn = n as f64;
    let h = def.h();
    let bar = &def.bar;
    let base = &def.base;
    let mut out = Vec::new();

    let direct = curvature_bar_direct_with(table, &def, opts)?;
    let calibration = calibrate_pairing(&def, &direct);
    let closed = def.curvature_bar_closed_form(calibration.chosen);
    out.push(Residual::new(
        "conformal.closed_vs_direct",
        "closed-form deformed curvature equals the finite-difference curvature",
        closed.max_abs_diff(&direct),
        direct.max_abs(),
    ));

    let (s_metric, s_torsion, s_scale) = s_condition_residuals(&def);
    out.push(Residual::against_summands("conformal.s_metric", "g(S_X Y,Z) + g(S_X Z,Y) = -dh(X) g(Y,Z)/h", s_metric, s_scale));
    out.push(Residual::against_summands(
        "conformal.s_torsion",
        "g(S_X Y,Z) - g(S_Y X,Z) = sum eps_s omega_s(X,Y) dh(I_s Z)/h",
        s_torsion,
        s_scale,
    ));

    // torsion
    let endos = def.deformed_torsion_endomorphisms();
    let split = torsion_split(&endos, bar, f64::INFINITY).expect("infinite tolerance");
    let endo_scale = endos.iter().map(Tensor2::max_abs).fold(0.0, f64::max);
    out.push(Residual::against_summands(
        "torsion.mu_consistency",
        "the three antisymmetric torsion parts give one mu",
        split.mu_spread,
        endo_scale,
    ));
    let rebuilt = torsion_from_tau_mu(&split.tau, &split.mu, bar);
    let round = (0..3).map(|s| (&rebuilt[s] - &endos[s]).max_abs()).fold(0.0, f64::max);
    out.push(Residual::against_summands(
        "torsion.round_trip",
        "T(xi_s,X,Y) = -1/4[tau(I_sX,Y) + tau(X,I_sY)] + mu(I_sX,Y)",
        round,
        endo_scale,
    ));
    let closed_tm = (&split.tau - &def.tau_bar).max_abs().max((&split.mu - &def.mu_bar).max_abs());
    out.push(Residual::against_summands(
        "torsion.closed_form",
        "tau, mu from the torsion endomorphisms equal their closed forms",
        closed_tm,
        split.tau.max_abs().max(split.mu.max_abs()),
    ));
    let (tp, mp, tm_scale) = torsion_property_residuals(&split.tau, &split.mu, bar);
    out.push(Residual::against_summands(
        "torsion.properties",
        "tau symmetric trace-free [-1], mu symmetric trace-free [3]",
        tp.max(mp),
        tm_scale,
    ));
    if n == 1 {
        out.push(Residual::against_summands(
            "torsion.mu_vanishes_n1",
            "mu = 0 in dimension seven",
            split.mu.max_abs(),
            split.tau.max_abs(),
        ));
    }

    // direct curvature: traces, L, PWR, W
    let pack = ricci_traces(&direct, bar);
    let l = l_tensor(&pack, &split, bar);
    let pwr = pwr_tensor(&direct, &l, bar);
    out.extend(verify_pwr_properties(&pack, &l, &pwr, bar));
    let derivs = if table.has_third_order() {
        Some(divergence_data(table, &def)?)
    } else {
        None
    };
    if let Ok(res) = verify_structure_identities(&pack, &split, bar, derivs.as_ref()) {
        out.extend(res);
    } else {
        out.push(Residual::new(
            "structure.divergence",
            "third-order jets unavailable",
            f64::NAN,
            1.0,
        ));
    }
    let w = wpqc_tensor(&pwr, bar);
    let explicit = wpqc_explicit(&pack, &split, bar);
    let summand = explicit.largest_term().max(direct.max_abs());
    let projector_verdict = flatness_verdict(&w, &direct, default_tolerance("w.projector"));
    let explicit_verdict = flatness_verdict(&explicit.total, &direct, default_tolerance("w.explicit"));
    out.push(Residual::new("w.projector", "W = PWR_[3] in the first pair vanishes", w.max_abs(), summand));
    out.push(Residual::new(
        "w.explicit",
        "W from R_[3], tau, mu, Scal vanishes",
        explicit.total.max_abs(),
        explicit.largest_term(),
    ));

    // scalar curvature
    let closed_pack = ricci_traces(&closed, bar);
    out.push(Residual::against_summands(
        "conformal.yamabe",
        "Scal from the transformation law equals the traced curvature",
        (def.scal_bar - closed_pack.scal).abs(),
        def.scal_bar.abs(),
    ));
    out.push(Residual::against_summands(
        "conformal.yamabe_direct",
        "Scal from the transformation law equals the traced direct curvature",
        (def.scal_bar - pack.scal).abs(),
        def.scal_bar.abs(),
    ));

    // relations for M on the closed-form curvature
    let m = &def.m;
    let m_sym = m.sym();
    out.push(Residual::against_summands(
        "m.trace",
        "tr M = (Delta h - (n+2)|grad h|^2/h)/2h",
        (def.tr_m - def.tr_m_closed()).abs(),
        def.tr_m.abs(),
    ));
    let ms = def.m_s_closed();
    let ms_res = (0..3).map(|s| (def.m_s[s] - ms[s]).abs()).fold(0.0, f64::max);
    out.push(Residual::against_summands(
        "m.sp1_traces",
        "M_s = -2n dh(xi_s)/h",
        ms_res,
        ms.iter().fold(0.0f64, |a, v| a.max(v.abs())),
    ));
    let mut anti = Tensor2::zeros(base.dim());
    for s in 0..3 {
        anti += &(base.omega(s) * (eps(s) * def.jets.dh_xi[s] / (2.0 * h)));
    }
    out.push(Residual::against_summands(
        "m.antisymmetric_part",
        "M - M_sym = sum eps_s dh(xi_s) omega_s / 2h",
        (&(m - &m_sym) - &anti).max_abs(),
        m.max_abs(),
    ));
    let closed_l = l_tensor(&closed_pack, &split, bar);
    out.push(Residual::against_summands(
        "m.symmetric_is_l",
        "M_sym = L",
        (&m_sym - &closed_l.l).max_abs(),
        m_sym.max_abs(),
    ));
    let tr_m = signed_trace(m, base);
    let (m3, _) = casimir_project(m, base);
    let (_, msym_m1) = casimir_project(&m_sym, base);
    let ric = &(&(&m_sym * (4.0 * (nn + 1.0))) + &(&m3 * 6.0)) + &(base.g() * ((2.0 * nn + 3.0) / (2.0 * nn) * tr_m));
    out.push(Residual::against_summands(
        "m.ricci",
        "Ric = 4(n+1) M_sym + 6 M_[3] + (2n+3)/2n tr M g",
        (&closed_pack.ric - &ric).max_abs(),
        closed_pack.ric.max_abs().max(m.max_abs() * 4.0 * (nn + 1.0)),
    ));
    let (ric3, ricm1) = casimir_project(&closed_pack.ric, base);
    let part3 = &(&m3 * (2.0 * (2.0 * nn + 5.0))) + &(base.g() * ((2.0 * nn + 3.0) / (2.0 * nn) * tr_m));
    let parts = (&ricm1 - &(&msym_m1 * (4.0 * (nn + 1.0)))).max_abs().max((&ric3 - &part3).max_abs());
    out.push(Residual::against_summands(
        "m.ricci_parts",
        "Ric_[-1] = 4(n+1) M_sym[-1], Ric_[3] = 2(2n+5) M_[3] + (2n+3)/2n tr M g",
        parts,
        closed_pack.ric.max_abs(),
    ));
    out.push(Residual::against_summands(
        "m.scalar",
        "Scal/2h = 8(n+2) tr M",
        (closed_pack.scal / (2.0 * h) - 8.0 * (nn + 2.0) * tr_m).abs(),
        closed_pack.scal.abs() / (2.0 * h),
    ));

    Ok(PointOutcome {
        residuals: out,
        calibration,
        projector_verdict,
        explicit_verdict,
        scal_bar: def.scal_bar,
    })
}

/// Cayley checks at one sphere point and tangent vector.
pub fn cayley_point_checks(pt: &SpherePoint, v: &TangentVector) -> Result<Vec<Residual>, CayleyError> {
    let mut out = vec![verify_cayley_identity(pt, v)?];
    let image = cayley_forward(pt)?;
    let back = cayley_inverse(&image)?;
    let diff = back
        .q
        .iter()
        .zip(&pt.q)
        .fold((back.p - pt.p).max_abs(), |m, (a, b)| m.max((*a - *b).max_abs()));
    out.push(Residual::absolute("cayley.round_trip", "inverse after forward is the identity", diff));
    let scale = image.q.iter().fold(image.p.max_abs(), |m, q| m.max(q.max_abs()));
    out.push(Residual::against_summands(
        "cayley.embedding",
        "Re(p') = -sum norm2(q'_a)",
        image.embedding_residual().abs(),
        scale * scale,
    ));
    Ok(out)
}
