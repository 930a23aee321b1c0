//! Ricci-type traces, torsion decomposition, the `L` tensor, `PWR` and the pqc
//! conformal curvature `W`, plus the residual checks relating them.
//!
//! All routines take the frame data of the structure whose curvature is
//! passed in; for a deformed structure that is the `ḡ` frame.

use thiserror::Error;

use crate::conformal::{cyclic_term, DivergenceData};
use crate::residual::{max_abs, Residual};
use crate::tensor::{
    casimir_project, cyclic, eps, first_pair_project, i_applied, kulkarni_nomizu, signed_trace,
    PqcFrameData, Tensor2, Tensor4,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantsError {
    #[error("torsion endomorphisms give inconsistent mu candidates (spread {spread:e})")]
    InconsistentTorsion { spread: f64 },
    #[error("derivative data required for the divergence identity is missing")]
    MissingJets,
}

/// Curvature `R(X,Y,Z,V)` with all Ricci-type traces.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePack {
    pub r: Tensor4,
    pub ric: Tensor2,
    pub scal: f64,
    pub rho: [Tensor2; 3],
    pub varrho: [Tensor2; 3],
    pub zeta: [Tensor2; 3],
}

/// `Ric(X,Y) = R(e_a,X,Y,e_a)`, `4nρ_s(X,Y) = R(X,Y,e_a,I_se_a)`,
/// `4nϱ_s(X,Y) = R(e_a,I_se_a,X,Y)`, `4nζ_s(X,Y) = R(e_a,X,Y,I_se_a)`.
pub fn ricci_traces(r: &Tensor4, frame: &PqcFrameData) -> CurvaturePack {
    let d = frame.dim();
    let gi = frame.g_inv().matrix();
    let four_n = 4.0 * frame.n() as f64;
    let ric = Tensor2::from_fn(d, |x, y| {
        let mut acc = 0.0;
        for a in 0..d {
            for b in 0..d {
                let w = gi[(b, a)];
                if w != 0.0 {
                    acc += w * r.get(a, x, y, b);
                }
            }
        }
        acc
    });
    let scal = signed_trace(&ric, frame);
    let p: Vec<_> = (0..3).map(|s| frame.i(s).matrix() * gi).collect();
    let contract = |s: usize, f: &dyn Fn(usize, usize, usize, usize) -> f64| {
        Tensor2::from_fn(d, |x, y| {
            let mut acc = 0.0;
            for a in 0..d {
                for k in 0..d {
                    let w = p[s][(k, a)];
                    if w != 0.0 {
                        acc += w * f(x, y, a, k);
                    }
                }
            }
            acc / four_n
        })
    };
    let rho = [0, 1, 2].map(|s| contract(s, &|x, y, a, k| r.get(x, y, a, k)));
    let varrho = [0, 1, 2].map(|s| contract(s, &|x, y, a, k| r.get(a, k, x, y)));
    let zeta = [0, 1, 2].map(|s| contract(s, &|x, y, a, k| r.get(a, x, y, k)));
    CurvaturePack {
        r: r.clone(),
        ric,
        scal,
        rho,
        varrho,
        zeta,
    }
}

impl CurvaturePack {
    /// Symmetry of `Ric` and of `ζ_s(X, I_sY)`, and the `(1,1)` property
    /// `−ε_s ρ_s(I_s·, I_s·) = ρ_s`. Returns the worst violation.
    pub fn symmetry_residual(&self, frame: &PqcFrameData) -> f64 {
        let mut worst = (&self.ric - &self.ric.transpose()).max_abs();
        for s in 0..3 {
            let z = self.zeta[s].post(frame.i(s));
            worst = worst.max((&z - &z.transpose()).max_abs());
            let rho = &self.rho[s].both(frame.i(s)) * (-eps(s));
            worst = worst.max((&rho - &self.rho[s]).max_abs());
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.r.max_abs()
    }
}

/// Torsion tensors extracted from the torsion endomorphisms `T(ξ_s, X, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionSplit {
    pub tau: Tensor2,
    pub mu: Tensor2,
    /// Largest deviation of the three `μ` candidates from their mean.
    pub mu_spread: f64,
    pub endomorphisms: [Tensor2; 3],
}

/// Split `T(ξ_s,·,·)` into symmetric and antisymmetric parts and read off `τ, μ`.
pub fn torsion_split(endos: &[Tensor2; 3], frame: &PqcFrameData, tol: f64) -> Result<TorsionSplit, InvariantsError> {
    let d = frame.dim();
    let mut tau = Tensor2::zeros(d);
    let mut cands = Vec::with_capacity(3);
    for s in 0..3 {
        let sym = endos[s].sym();
        let anti = endos[s].antisym();
        tau -= &(&sym.pre(frame.i(s)) * eps(s));
        cands.push(&anti.pre(frame.i(s)) * eps(s));
    }
    let tau = tau.sym();
    let mu = &(&(&cands[0] + &cands[1]) + &cands[2]) * (1.0 / 3.0);
    let mu_spread = cands.iter().map(|c| (c - &mu).max_abs()).fold(0.0, f64::max);
    let scale = endos.iter().map(Tensor2::max_abs).fold(1.0, f64::max);
    if !(mu_spread <= tol * scale) {
        return Err(InvariantsError::InconsistentTorsion { spread: mu_spread });
    }
    Ok(TorsionSplit {
        tau,
        mu,
        mu_spread,
        endomorphisms: endos.clone(),
    })
}

/// `T(ξ_s,X,Y) = −¼[τ(I_sX,Y) + τ(X,I_sY)] + μ(I_sX,Y)`.
pub fn torsion_from_tau_mu(tau: &Tensor2, mu: &Tensor2, frame: &PqcFrameData) -> [Tensor2; 3] {
    [0, 1, 2].map(|s| {
        let i = frame.i(s);
        &(&(&tau.pre(i) + &tau.post(i)) * -0.25) + &mu.pre(i)
    })
}

/// `L = ½τ + μ + Scal/(32n(n+2))·g` and its trace-free part.
#[derive(Debug, Clone, PartialEq)]
pub struct LTensor {
    pub l: Tensor2,
    pub l0: Tensor2,
    pub tr_l: f64,
    /// `L` rebuilt from the Ricci decomposition.
    pub ricci_route: Tensor2,
    pub route_discrepancy: f64,
}

pub fn l_tensor(pack: &CurvaturePack, split: &TorsionSplit, frame: &PqcFrameData) -> LTensor {
    let n = frame.n() as f64;
    let c = pack.scal / (32.0 * n * (n + 2.0));
    let l0 = &(&split.tau * 0.5) + &split.mu;
    let l = &l0 + &(frame.g() * c);
    let tr_l = signed_trace(&l, frame);
    let (r3, rm1) = casimir_project(&pack.ric, frame);
    let r30 = &r3 - &(frame.g() * (pack.scal / (4.0 * n)));
    let ricci_route = &(&(&rm1 * (1.0 / (4.0 * (n + 1.0)))) + &(&r30 * (1.0 / (2.0 * (2.0 * n + 5.0))))) + &(frame.g() * c);
    let route_discrepancy = (&l - &ricci_route).max_abs();
    LTensor {
        l,
        l0,
        tr_l,
        ricci_route,
        route_discrepancy,
    }
}

fn omega_outer_sum(frame: &PqcFrameData) -> Tensor4 {
    let mut out = Tensor4::zeros(frame.dim());
    for s in 0..3 {
        out += &Tensor4::outer(frame.omega(s), frame.omega(s)).scale(eps(s));
    }
    out
}

/// `g⊼A − Σ ε_s ω_s⊼(I_sA)`.
fn kn_block(a: &Tensor2, frame: &PqcFrameData) -> Tensor4 {
    let mut out = kulkarni_nomizu(frame.g(), a);
    for s in 0..3 {
        out -= &kulkarni_nomizu(frame.omega(s), &i_applied(a, frame, s)).scale(eps(s));
    }
    out
}

/// The tensor `PWR` built from `R` and `L`.
pub fn pwr_tensor(r: &Tensor4, l: &LTensor, frame: &PqcFrameData) -> Tensor4 {
    let n = frame.n() as f64;
    let mut out = r + &kn_block(&l.l, frame);
    out += &cyclic_term(&l.l, frame);
    for s in 0..3 {
        let part = &l.l.post(frame.i(s)) - &l.l.pre(frame.i(s));
        out += &Tensor4::outer(&part, frame.omega(s)).scale(eps(s));
    }
    out -= &omega_outer_sum(frame).scale(l.tr_l / (2.0 * n));
    out
}

/// `PWR` assembled from `R, τ, μ, Scal` directly.
pub fn pwr_alternative(r: &Tensor4, tau: &Tensor2, mu: &Tensor2, scal: f64, frame: &PqcFrameData) -> Tensor4 {
    let n = frame.n() as f64;
    let l0 = &(tau * 0.5) + mu;
    let mut out = r + &kn_block(&l0, frame);
    for s in 0..3 {
        let i = frame.i(s);
        let first = &tau.post(i) - &tau.pre(i);
        let second = &(&(&tau.post(i) - &tau.pre(i)) + &(&mu.post(i) * 4.0));
        out += &Tensor4::outer(frame.omega(s), &first).scale(0.5 * eps(s));
        out += &Tensor4::outer(second, frame.omega(s)).scale(0.5 * eps(s));
    }
    let mut bracket = kulkarni_nomizu(frame.g(), frame.g());
    for s in 0..3 {
        bracket -= &kulkarni_nomizu(frame.omega(s), frame.omega(s)).scale(eps(s));
    }
    bracket -= &omega_outer_sum(frame).scale(4.0);
    out += &bracket.scale(scal / (32.0 * n * (n + 2.0)));
    out
}

/// `W = PWR_[3]` in the first argument pair.
pub fn wpqc_tensor(pwr: &Tensor4, frame: &PqcFrameData) -> Tensor4 {
    first_pair_project(pwr, frame).0
}

/// The explicit torsion/scalar-curvature form of `W` and the sizes of its terms.
#[derive(Debug, Clone, PartialEq)]
pub struct WpqcTerms {
    pub total: Tensor4,
    pub term_norms: Vec<f64>,
}

impl WpqcTerms {
    pub fn largest_term(&self) -> f64 {
        max_abs(&self.term_norms)
    }
}

pub fn wpqc_explicit(pack: &CurvaturePack, split: &TorsionSplit, frame: &PqcFrameData) -> WpqcTerms {
    let n = frame.n() as f64;
    let (r3, _) = first_pair_project(&pack.r, frame);
    let mut torsion = Tensor4::zeros(frame.dim());
    for s in 0..3 {
        let part = &split.tau.post(frame.i(s)) - &split.tau.pre(frame.i(s));
        torsion += &Tensor4::outer(&part, frame.omega(s)).scale(0.5 * eps(s));
    }
    let mut scal = kulkarni_nomizu(frame.g(), frame.g());
    for s in 0..3 {
        scal -= &kulkarni_nomizu(frame.omega(s), frame.omega(s)).scale(eps(s));
    }
    let scal = scal.scale(pack.scal / (32.0 * n * (n + 2.0)));
    let mu = kn_block(&split.mu, frame);
    let terms = [r3, torsion, scal, mu];
    let term_norms = terms.iter().map(Tensor4::max_abs).collect();
    let mut total = Tensor4::zeros(frame.dim());
    for t in &terms {
        total += t;
    }
    WpqcTerms { total, term_norms }
}

fn t2_scale(ts: &[&Tensor2]) -> f64 {
    ts.iter().map(|t| t.max_abs()).fold(0.0, f64::max)
}

/// Trace-freeness of `PWR`, vanishing of `PWR_[−1]`, the Ricci-type traces in
/// terms of `L`, and the trace of `L`.
pub fn verify_pwr_properties(pack: &CurvaturePack, l: &LTensor, pwr: &Tensor4, frame: &PqcFrameData) -> Vec<Residual> {
    let n = frame.n() as f64;
    let mut out = Vec::new();
    let traced = ricci_traces(pwr, frame);
    let mut worst = traced.ric.max_abs();
    for s in 0..3 {
        worst = worst
            .max(traced.rho[s].max_abs())
            .max(traced.varrho[s].max_abs())
            .max(traced.zeta[s].max_abs());
    }
    let scale = pack.r.max_abs().max(l.l.max_abs());
    out.push(Residual::against_summands("pwr.trace_free", "PWR has vanishing Ric, rho, varrho, zeta traces", worst, scale));
    let (_, minus_one) = first_pair_project(pwr, frame);
    out.push(Residual::against_summands("pwr.minus_one_part", "PWR_[-1] = 0 in the first pair", minus_one.max_abs(), scale));

    let tr = l.tr_l;
    let ll = &l.l;
    let mut twisted = Tensor2::zeros(frame.dim());
    for s in 0..3 {
        twisted += &(&ll.both(frame.i(s)) * eps(s));
    }
    let ric = &(&(frame.g() * ((2.0 * n + 3.0) / (2.0 * n) * tr)) + &(ll * ((8.0 * n + 11.0) / 2.0))) - &(&twisted * 1.5);
    out.push(Residual::against_summands(
        "pwr.ricci_from_l",
        "Ric = (2n+3)/2n trL g + (8n+11)/2 L - 3/2 sum eps_s L(I_s.,I_s.)",
        (&pack.ric - &ric).max_abs(),
        t2_scale(&[&pack.ric, &ric, &twisted]) * 1.5,
    ));
    let (mut r_rho, mut r_varrho, mut r_zeta, mut sc) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..3 {
        let (_, j, k) = cyclic(i);
        let (ii, ij, ik) = (frame.i(i), frame.i(j), frame.i(k));
        let om = frame.omega(i);
        let rho = &(&ll.post(ii) - &ll.pre(ii)) - &(om * (tr / (2.0 * n)));
        r_rho = r_rho.max((&pack.rho[i] - &rho).max_abs());
        let bracket = &(&ll.pre(ii) - &ll.post(ii)) - &(&(&ll.pre_post(ik, ij) - &ll.pre_post(ij, ik)) * eps(i));
        let varrho = &(om * (-tr / n)) - &(&bracket * ((n + 2.0) / (2.0 * n)));
        r_varrho = r_varrho.max((&pack.varrho[i] - &varrho).max_abs());
        let zeta = &(&(&(om * ((2.0 * n - 1.0) / (8.0 * n * n) * tr)) + &(&ll.pre(ii) * (3.0 / (8.0 * n))))
            - &(&ll.post(ii) * ((8.0 * n + 3.0) / (8.0 * n))))
            - &(&(&ll.pre_post(ik, ij) - &ll.pre_post(ij, ik)) * (eps(i) / (8.0 * n)));
        r_zeta = r_zeta.max((&pack.zeta[i] - &zeta).max_abs());
        sc = sc.max(t2_scale(&[&pack.rho[i], &pack.varrho[i], &pack.zeta[i], &rho, &varrho, &zeta]));
    }
    sc = sc.max(ll.max_abs() * 2.0);
    out.push(Residual::against_summands("pwr.rho_from_l", "rho_i = L(X,I_iY) - L(I_iX,Y) - trL/2n omega_i", r_rho, sc));
    out.push(Residual::against_summands(
        "pwr.varrho_from_l",
        "varrho_i = -trL/n omega_i - (n+2)/2n [L(I_i.,.) - L(.,I_i.) - eps_i L(I_k.,I_j.) + eps_i L(I_j.,I_k.)]",
        r_varrho,
        sc,
    ));
    out.push(Residual::against_summands(
        "pwr.zeta_from_l",
        "zeta_i = (2n-1)/8n^2 trL omega_i + 3/8n L(I_i.,.) - (8n+3)/8n L(.,I_i.) - eps_i/8n [L(I_k.,I_j.) - L(I_j.,I_k.)]",
        r_zeta,
        sc,
    ));
    let want = pack.scal / (8.0 * (n + 2.0));
    out.push(Residual::against_summands(
        "l.trace",
        "tr L = Scal/(8(n+2))",
        (tr - want).abs(),
        tr.abs().max(want.abs()),
    ));
    out.push(Residual::against_summands(
        "l.ricci_route",
        "L = Ric_[-1]/4(n+1) + Ric_[3][0]/2(2n+5) + Scal/32n(n+2) g",
        l.route_discrepancy,
        t2_scale(&[&l.l, &l.ricci_route]),
    ));
    out.push(Residual::absolute(
        "l.trace_free_part",
        "tr L0 = 0",
        signed_trace(&l.l0, frame).abs(),
    ));
    out
}

fn four_from(d: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Tensor4 {
    Tensor4::from_fn(d, f)
}

/// Horizontal identities of a pqc structure with torsion: the Ricci-type
/// trace formulas, the pair-swap identity, the `sp(1)` part, the `[3]`
/// component of the curvature and the divergence identity.
pub fn verify_structure_identities(
    pack: &CurvaturePack,
    split: &TorsionSplit,
    frame: &PqcFrameData,
    derivatives: Option<&DivergenceData>,
) -> Result<Vec<Residual>, InvariantsError> {
    let derivatives = derivatives.ok_or(InvariantsError::MissingJets)?;
    let n = frame.n() as f64;
    let d = frame.dim();
    let (tau, mu, scal) = (&split.tau, &split.mu, pack.scal);
    let r = &pack.r;
    let g = frame.g();
    let mut out = Vec::new();

    let ric = &(&(g * (scal / (4.0 * n))) + &(tau * (2.0 * n + 2.0))) + &(mu * (4.0 * n + 10.0));
    out.push(Residual::against_summands(
        "structure.ricci",
        "Ric = Scal/4n g + (2n+2) tau + (4n+10) mu",
        (&pack.ric - &ric).max_abs(),
        t2_scale(&[&pack.ric, &(g * (scal / (4.0 * n))), &(tau * (2.0 * n + 2.0)), &(mu * (4.0 * n + 10.0))]),
    ));
    let c = scal / (8.0 * n * (n + 2.0));
    let (mut rr, mut rv, mut rz, mut sc) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for s in 0..3 {
        let i = frame.i(s);
        let e = eps(s);
        let skew = &(tau * e) - &tau.both(i);
        let rho = &(&(g * (e * c)) + &(&skew * 0.5)) + &(mu * (2.0 * e));
        rr = rr.max((&pack.rho[s].post(i) - &rho).max_abs());
        let varrho = &(g * (e * c)) + &(&skew * ((n + 2.0) / (2.0 * n)));
        rv = rv.max((&pack.varrho[s].post(i) - &varrho).max_abs());
        let zeta = &(&(&(g * (-scal / (16.0 * n * (n + 2.0)))) - &(tau * ((2.0 * n + 1.0) / (4.0 * n))))
            + &(&tau.both(i) * (e / (4.0 * n))))
            - &(mu * ((2.0 * n + 1.0) / (2.0 * n)));
        rz = rz.max((&(&pack.zeta[s].post(i) * e) - &zeta).max_abs());
        sc = sc.max(t2_scale(&[&pack.rho[s], &pack.varrho[s], &pack.zeta[s], &rho, &varrho, &zeta, &skew]));
    }
    sc = sc.max((g * c).max_abs()).max(mu.max_abs() * 2.0);
    out.push(Residual::against_summands(
        "structure.rho",
        "rho_s(X,I_sY) = eps_s Scal/8n(n+2) g + 1/2[eps_s tau - tau(I_s.,I_s.)] + 2 eps_s mu",
        rr,
        sc,
    ));
    out.push(Residual::against_summands(
        "structure.varrho",
        "varrho_s(X,I_sY) = eps_s Scal/8n(n+2) g + (n+2)/2n [eps_s tau - tau(I_s.,I_s.)]",
        rv,
        sc,
    ));
    out.push(Residual::against_summands(
        "structure.zeta",
        "eps_s zeta_s(X,I_sY) = -Scal/16n(n+2) g - (2n+1)/4n tau + eps_s/4n tau(I_s.,I_s.) - (2n+1)/2n mu",
        rz,
        sc,
    ));

    // pair swap
    let swap = r - &r.swap_pairs();
    let mut rhs = Tensor4::zeros(d);
    for s in 0..3 {
        let e = eps(s);
        let o = frame.omega(s);
        let mui = mu.pre(frame.i(s));
        let ti = &tau.pre(frame.i(s)) + &tau.post(frame.i(s));
        rhs += &four_from(d, |x, y, z, v| {
            -2.0 * e * (o[(x, y)] * mui[(z, v)] - o[(z, v)] * mui[(x, y)])
                + 0.5 * e * (o[(y, z)] * ti[(x, v)] + o[(x, v)] * ti[(z, y)])
                - 0.5 * e * (o[(x, z)] * ti[(y, v)] + o[(y, v)] * ti[(z, x)])
        });
    }
    out.push(Residual::against_summands(
        "structure.pair_swap",
        "R(X,Y,Z,V) - R(Z,V,X,Y) in terms of tau, mu",
        swap.max_abs_diff(&rhs),
        r.max_abs().max(rhs.max_abs()),
    ));

    // sp(1) part
    let mut worst = 0.0f64;
    let mut scale = r.max_abs();
    for i in 0..3 {
        let (_, j, k) = cyclic(i);
        let lhs = &r.last_pair(frame.i(i)).scale(eps(i)) + r;
        let rhs = &Tensor4::outer(&pack.rho[j], frame.omega(j)).scale(-2.0 * eps(j))
            + &Tensor4::outer(&pack.rho[k], frame.omega(k)).scale(-2.0 * eps(k));
        worst = worst.max(lhs.max_abs_diff(&rhs));
        scale = scale.max(rhs.max_abs());
    }
    out.push(Residual::against_summands(
        "structure.sp1_part",
        "eps_i R(.,.,I_iX,I_iY) + R(.,.,X,Y) = -2 eps_j rho_j omega_j - 2 eps_k rho_k omega_k",
        worst,
        scale,
    ));

    // [3] component of the curvature
    let mut lhs = r.scale(3.0);
    for s in 0..3 {
        lhs += &r.first_pair(frame.i(s)).scale(eps(s));
    }
    let mut rhs = four_from(d, |x, y, z, v| {
        2.0 * (g[(y, z)] * tau[(x, v)] + g[(x, v)] * tau[(z, y)])
            - 2.0 * (g[(z, x)] * tau[(y, v)] + g[(v, y)] * tau[(z, x)])
    });
    for s in 0..3 {
        let e = eps(s);
        let o = frame.omega(s);
        let ti = tau.post(frame.i(s));
        let tc = &tau.post(frame.i(s)) - &tau.pre(frame.i(s));
        let mi = mu.pre(frame.i(s));
        let k = scal / (2.0 * n * (n + 2.0));
        rhs += &four_from(d, |x, y, z, v| {
            2.0 * e * (o[(y, z)] * ti[(x, v)] + o[(x, v)] * ti[(y, z)])
                - 2.0 * e * (o[(x, z)] * ti[(y, v)] + o[(y, v)] * ti[(x, z)])
                - 2.0 * e * (o[(x, y)] * tc[(z, v)] - 4.0 * o[(z, v)] * mi[(x, y)])
                + k * e * o[(x, y)] * o[(z, v)]
        });
    }
    out.push(Residual::against_summands(
        "structure.curvature_three_part",
        "3R + sum eps_s R(I_s.,I_s.,.,.) in terms of tau, mu, Scal",
        lhs.max_abs_diff(&rhs),
        lhs.max_abs().max(rhs.max_abs()),
    ));

    // divergence identity
    let gi = frame.g_inv();
    let cov = |dt: &[crate::tensor::Tensor2], t: &Tensor2| -> Vec<f64> {
        // Σ ḡ^{ab} (∇_a T)(b, X)
        let nabla: Vec<Tensor2> = (0..d)
            .map(|a| {
                let s = derivatives.s_raised[a].matrix();
                let st = Tensor2::from_matrix(s.transpose() * t.matrix());
                let ts = Tensor2::from_matrix(t.matrix() * s);
                &(&dt[a] - &st) - &ts
            })
            .collect();
        (0..d)
            .map(|x| {
                let mut acc = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        let w = gi[(a, b)];
                        if w != 0.0 {
                            acc += w * nabla[a][(b, x)];
                        }
                    }
                }
                acc
            })
            .collect()
    };
    let div_tau = cov(&derivatives.dtau, tau);
    let div_mu = cov(&derivatives.dmu, mu);
    let k = (n - 1.0) * (2.0 * n + 1.0) / (8.0 * n * (n + 2.0));
    let terms: [Vec<f64>; 3] = [
        div_tau.iter().map(|v| (n - 1.0) * v).collect(),
        div_mu.iter().map(|v| 2.0 * (n + 2.0) * v).collect(),
        derivatives.dscal.iter().map(|v| -k * v).collect(),
    ];
    let res: Vec<f64> = (0..d).map(|x| terms[0][x] + terms[1][x] + terms[2][x]).collect();
    out.push(Residual::against_summands(
        "structure.divergence",
        "(n-1) div tau + 2(n+2) div mu - (n-1)(2n+1)/8n(n+2) dScal = 0",
        max_abs(&res),
        terms.iter().map(|t| max_abs(t)).fold(0.0, f64::max),
    ));
    Ok(out)
}

/// Verdict of the flatness test `max|W| < tol·max(1, |R|∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatnessVerdict {
    pub flat: bool,
    pub max_norm: f64,
    pub scale: f64,
}

pub fn flatness_verdict(w: &Tensor4, r: &Tensor4, tol: f64) -> FlatnessVerdict {
    let max_norm = w.max_abs();
    let scale = r.max_abs().max(1.0);
    FlatnessVerdict {
        flat: max_norm < tol * scale,
        max_norm,
        scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::four_part_split;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_t2(rng: &mut impl Rng, d: usize) -> Tensor2 {
        Tensor2::from_fn(d, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_curvature(rng: &mut impl Rng, d: usize) -> Tensor4 {
        let raw = Tensor4::from_fn(d, |_, _, _, _| rng.random_range(-1.0..1.0));
        Tensor4::from_fn(d, |x, y, z, v| {
            raw.get(x, y, z, v) - raw.get(y, x, z, v) - raw.get(x, y, v, z) + raw.get(y, x, v, z)
        })
    }

    fn valid_tau_mu(rng: &mut impl Rng, frame: &PqcFrameData) -> (Tensor2, Tensor2) {
        let d = frame.dim();
        let t = random_t2(rng, d).sym();
        let (_, tau) = casimir_project(&t, frame);
        let (m3, _) = casimir_project(&random_t2(rng, d).sym(), frame);
        let mu = crate::tensor::trace_free(&m3, frame);
        (tau, mu)
    }

    #[test]
    fn zero_inputs() {
        let frame = PqcFrameData::build_adapted_frame(2).unwrap();
        let pack = ricci_traces(&Tensor4::zeros(8), &frame);
        assert_eq!(pack.scal, 0.0);
        assert_eq!(pack.ric.max_abs(), 0.0);
        let zero = [Tensor2::zeros(8), Tensor2::zeros(8), Tensor2::zeros(8)];
        let split = torsion_split(&zero, &frame, 1e-12).unwrap();
        assert_eq!(split.tau.max_abs() + split.mu.max_abs(), 0.0);
        let l = l_tensor(&pack, &split, &frame);
        assert_eq!(l.l.max_abs(), 0.0);
        let pwr = pwr_tensor(&pack.r, &l, &frame);
        assert_eq!(pwr.max_abs(), 0.0);
        assert_eq!(wpqc_explicit(&pack, &split, &frame).total.max_abs(), 0.0);
        for r in verify_pwr_properties(&pack, &l, &pwr, &frame) {
            assert_eq!(r.max_residual, 0.0, "{}", r.id);
        }
        let res = verify_structure_identities(&pack, &split, &frame, Some(&DivergenceData::zero(2))).unwrap();
        for r in res {
            assert_eq!(r.max_residual, 0.0, "{}", r.id);
        }
        assert_eq!(
            verify_structure_identities(&pack, &split, &frame, None).unwrap_err(),
            InvariantsError::MissingJets
        );
        assert!(flatness_verdict(&pwr, &pack.r, 1e-7).flat);
    }

    #[test]
    fn ricci_of_metric_square() {
        // brute-force contraction of g⊼g: Ric = −2(4n − 1) g under this sign convention
        for n in 1..=2 {
            let frame = PqcFrameData::build_adapted_frame(n).unwrap();
            let d = 4 * n;
            let gg = kulkarni_nomizu(frame.g(), frame.g());
            let pack = ricci_traces(&gg, &frame);
            let mut oracle = Tensor2::zeros(d);
            for x in 0..d {
                for y in 0..d {
                    let mut acc = 0.0;
                    for a in 0..d {
                        acc += frame.g()[(a, a)] * gg.get(a, x, y, a);
                    }
                    oracle[(x, y)] = acc;
                }
            }
            assert!((&pack.ric - &oracle).max_abs() < 1e-14);
            let c = -2.0 * (d as f64 - 1.0);
            assert!((&pack.ric - &(frame.g() * c)).max_abs() < 1e-14);
        }
    }

    #[test]
    fn torsion_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 1..=2 {
            let frame = PqcFrameData::build_adapted_frame(n).unwrap();
            let (tau, mu) = valid_tau_mu(&mut rng, &frame);
            let endos = torsion_from_tau_mu(&tau, &mu, &frame);
            let split = torsion_split(&endos, &frame, 1e-12).unwrap();
            assert!((&split.tau - &tau).max_abs() < 1e-14);
            assert!((&split.mu - &mu).max_abs() < 1e-14);
            assert!(split.mu_spread < 1e-14);
            // μ commutes with every I_s as an endomorphism
            let parts = four_part_split(&mu, &frame);
            assert!((&parts.ppp - &mu).max_abs() < 1e-14);
        }
    }

    #[test]
    fn inconsistent_torsion_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let frame = PqcFrameData::build_adapted_frame(2).unwrap();
        let mut endos = [random_t2(&mut rng, 8), random_t2(&mut rng, 8), random_t2(&mut rng, 8)];
        endos[0] = endos[0].sym();
        assert!(matches!(
            torsion_split(&endos, &frame, 1e-10),
            Err(InvariantsError::InconsistentTorsion { .. })
        ));
    }

    #[test]
    fn pwr_routes_agree_on_synthetic_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in 1..=2 {
            let frame = PqcFrameData::build_adapted_frame(n).unwrap();
            let d = 4 * n;
            let nn = n as f64;
            let r = random_curvature(&mut rng, d);
            let l_raw = random_t2(&mut rng, d).sym();
            // τ, μ, Scal consistent with L
            let (l3, lm1) = casimir_project(&l_raw, &frame);
            let tr = signed_trace(&l_raw, &frame);
            let tau = &lm1 * 2.0;
            let mu = &l3 - &(frame.g() * (tr / (4.0 * nn)));
            let scal = 8.0 * (nn + 2.0) * tr;
            let pack = ricci_traces(&r, &frame);
            let pack = CurvaturePack { scal, ..pack };
            let split = TorsionSplit {
                tau: tau.clone(),
                mu: mu.clone(),
                mu_spread: 0.0,
                endomorphisms: torsion_from_tau_mu(&tau, &mu, &frame),
            };
            let l = l_tensor(&pack, &split, &frame);
            assert!((&l.l - &l_raw).max_abs() < 1e-13);
            let a = pwr_tensor(&r, &l, &frame);
            let b = pwr_alternative(&r, &tau, &mu, scal, &frame);
            assert!(a.max_abs_diff(&b) < 1e-12, "n={n}: {}", a.max_abs_diff(&b));
            // projector completeness and a non-flat verdict
            let w = wpqc_tensor(&a, &frame);
            let (_, wm) = first_pair_project(&a, &frame);
            assert!((&w + &wm).max_abs_diff(&a) < 1e-13);
            assert!(!flatness_verdict(&w, &r, 1e-7).flat);
        }
    }
}
