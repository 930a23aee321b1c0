//! Suite execution.

use std::collections::BTreeMap;

use pqc_core::cayley::{sample_sphere_point, sample_tangent, SpherePoint};
use pqc_core::checks::{algebra_checks, cayley_point_checks, conformal_point_checks, PointOutcome};
use pqc_core::conformal::{ConformalError, PairingConvention, StencilOptions};
use pqc_core::heisenberg::model_verify_at;
use pqc_core::jets::{coordinate_count, FrameFields, JetTable};
use pqc_core::residual::Residual;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::report::{fmt17, Accumulator, Report, SuiteReport};
use crate::spec::{Suite, VerificationSpec};

/// Consecutive rejected samples after which a suite gives up.
pub const MAX_REJECTIONS: usize = 100;

pub const NORM_PAIRS: usize = 10_000;
pub const CASIMIR_TENSORS: usize = 100;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{suite} suite: {rejections} consecutive samples rejected")]
    DomainExhausted { suite: Suite, rejections: usize },
    #[error("conformal factor could not be prepared: {0}")]
    Jets(#[from] pqc_core::jets::JetError),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn suite_rng(spec: &VerificationSpec, suite: Suite) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(suite as u64);
    rng
}

fn box_point(rng: &mut impl Rng, spec: &VerificationSpec) -> Vec<f64> {
    let (lo, hi) = spec.point_box;
    (0..coordinate_count(spec.n)).map(|_| rng.random_range(lo..=hi)).collect()
}

/// Thread cap from `PQC_THREADS` (0 or unset means rayon's default).
pub fn thread_cap() -> usize {
    std::env::var("PQC_THREADS").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

/// Run every selected suite. Output does not depend on the thread count.
pub fn run_suite(spec: &VerificationSpec) -> Result<Report, RunError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(thread_cap()).build()?;
    pool.install(|| {
        let mut suites = Vec::new();
        for suite in Suite::ALL {
            if !spec.has_suite(suite) {
                continue;
            }
            suites.push(match suite {
                Suite::Algebra => run_algebra(spec),
                Suite::Heisenberg => run_heisenberg(spec),
                Suite::Conformal => run_conformal(spec)?,
                Suite::Cayley => run_cayley(spec)?,
            });
        }
        Ok(Report::new(spec, suites))
    })
}

fn run_algebra(spec: &VerificationSpec) -> SuiteReport {
    let mut rng = suite_rng(spec, Suite::Algebra);
    let mut acc = Accumulator::default();
    acc.extend(&algebra_checks(&mut rng, spec.n, NORM_PAIRS, CASIMIR_TENSORS));
    let mut notes = BTreeMap::new();
    notes.insert("norm_pairs".into(), NORM_PAIRS.to_string());
    notes.insert("casimir_tensors".into(), CASIMIR_TENSORS.to_string());
    acc.finish("algebra", spec, notes)
}

fn run_heisenberg(spec: &VerificationSpec) -> SuiteReport {
    let mut rng = suite_rng(spec, Suite::Heisenberg);
    let points: Vec<Vec<f64>> = (0..spec.sample_count).map(|_| box_point(&mut rng, spec)).collect();
    let mut acc = Accumulator::default();
    acc.extend(&model_verify_at(&FrameFields::new(spec.n), &points));
    acc.finish("heisenberg", spec, BTreeMap::new())
}

fn run_conformal(spec: &VerificationSpec) -> Result<SuiteReport, RunError> {
    let table = JetTable::new(&spec.polynomial(), spec.n, true)?;
    let mut rng = suite_rng(spec, Suite::Conformal);
    let mut points = Vec::with_capacity(spec.sample_count);
    let mut rejected_total = 0usize;
    let mut streak = 0usize;
    while points.len() < spec.sample_count {
        let p = box_point(&mut rng, spec);
        if table.value(&p) > 0.0 {
            points.push(p);
            streak = 0;
        } else {
            rejected_total += 1;
            streak += 1;
            if streak >= MAX_REJECTIONS {
                return Err(RunError::DomainExhausted {
                    suite: Suite::Conformal,
                    rejections: streak,
                });
            }
        }
    }
    let outcomes: Vec<Result<PointOutcome, ConformalError>> = points
        .par_iter()
        .map(|p| conformal_point_checks(&table, p, StencilOptions::default()))
        .collect();

    let mut acc = Accumulator::default();
    let mut chosen: Vec<PairingConvention> = Vec::new();
    let mut mismatch: BTreeMap<&'static str, f64> = BTreeMap::new();
    let (mut flat_projector, mut flat_explicit, mut failed) = (0usize, 0usize, 0usize);
    for o in &outcomes {
        match o {
            Ok(o) => {
                acc.extend(&o.residuals);
                chosen.push(o.calibration.chosen);
                for (c, m) in &o.calibration.mismatch {
                    let slot = mismatch.entry(c.name()).or_insert(0.0);
                    *slot = slot.max(*m);
                }
                flat_projector += o.projector_verdict.flat as usize;
                flat_explicit += o.explicit_verdict.flat as usize;
            }
            Err(e) => {
                failed += 1;
                acc.add(&Residual::new("conformal.domain", format!("pipeline failed: {e}"), f64::NAN, 1.0));
            }
        }
    }
    let mut notes = BTreeMap::new();
    chosen.dedup();
    notes.insert(
        "pairing_convention".into(),
        match chosen.as_slice() {
            [c] => c.name().to_string(),
            [] => "none".to_string(),
            _ => "inconsistent".to_string(),
        },
    );
    for (c, m) in mismatch {
        notes.insert(format!("pairing_mismatch.{c}"), fmt17(m));
    }
    let n = points.len();
    notes.insert("flat_points_projector".into(), format!("{flat_projector}/{n}"));
    notes.insert("flat_points_explicit".into(), format!("{flat_explicit}/{n}"));
    notes.insert("rejected_samples".into(), rejected_total.to_string());
    if failed > 0 {
        notes.insert("failed_points".into(), failed.to_string());
    }
    Ok(acc.finish("conformal", spec, notes))
}

fn run_cayley(spec: &VerificationSpec) -> Result<SuiteReport, RunError> {
    let mut rng = suite_rng(spec, Suite::Cayley);
    let (lo, hi) = spec.point_box;
    let base = SpherePoint::base(spec.n);
    let base_v = sample_tangent(&mut rng, &base);
    let mut samples = vec![(base, base_v)];
    let mut rejected_total = 0usize;
    let mut streak = 0usize;
    while samples.len() < spec.sample_count + 1 {
        match sample_sphere_point(&mut rng, spec.n, lo, hi) {
            Some(pt) => {
                let v = sample_tangent(&mut rng, &pt);
                samples.push((pt, v));
                streak = 0;
            }
            None => {
                rejected_total += 1;
                streak += 1;
                if streak >= MAX_REJECTIONS {
                    return Err(RunError::DomainExhausted {
                        suite: Suite::Cayley,
                        rejections: streak,
                    });
                }
            }
        }
    }
    let results: Vec<_> = samples.par_iter().map(|(pt, v)| cayley_point_checks(pt, v)).collect();
    let mut acc = Accumulator::default();
    for r in &results {
        match r {
            Ok(rs) => acc.extend(rs),
            Err(e) => acc.add(&Residual::new("cayley.domain", format!("point rejected: {e}"), f64::NAN, 1.0)),
        }
    }
    let mut notes = BTreeMap::new();
    notes.insert("base_point_included".into(), "true".into());
    notes.insert("rejected_samples".into(), rejected_total.to_string());
    Ok(acc.finish("cayley", spec, notes))
}
