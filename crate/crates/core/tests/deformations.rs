use pqc_core::checks::{conformal_point_checks, default_tolerance};
use pqc_core::conformal::{curvature_bar_direct, DeformationData, PairingConvention, StencilOptions};
use pqc_core::invariants::{ricci_traces, torsion_split, InvariantsError};
use pqc_core::jets::{coordinate_count, coordinate_index, JetTable, Polynomial};
use proptest::prelude::*;

fn poly(n: usize, terms: &[(f64, &[(&str, u32)])]) -> Polynomial {
    let nv = coordinate_count(n);
    Polynomial::from_terms(
        nv,
        terms.iter().map(|(c, vars)| {
            let mut e = vec![0; nv];
            for (name, p) in *vars {
                e[coordinate_index(name, n).unwrap()] += p;
            }
            (*c, e)
        }),
    )
    .unwrap()
}

fn quartic(n: usize) -> Polynomial {
    poly(
        n,
        &[
            (4.0, &[]),
            (0.3, &[("t1", 2), ("z", 2)]),
            (-0.2, &[("x1", 1), ("y1", 1), ("y", 1)]),
            (0.5, &[("z1", 1)]),
            (0.1, &[("x", 1), ("t1", 1), ("y1", 2)]),
        ],
    )
}

fn assert_all_pass(n: usize, h: &Polynomial, point: &[f64]) {
    let table = JetTable::new(h, n, true).unwrap();
    let outcome = conformal_point_checks(&table, point, StencilOptions::default()).unwrap();
    for r in &outcome.residuals {
        assert!(r.passes(default_tolerance(&r.id)), "n={n} {}: {:e}", r.id, r.relative());
    }
    assert!(outcome.projector_verdict.flat);
    assert!(outcome.explicit_verdict.flat);
    assert_eq!(outcome.calibration.chosen, PairingConvention::BaseMetric);
}

#[test]
fn quartic_factor_at_fixed_points() {
    for n in 1..=2 {
        let nv = coordinate_count(n);
        for k in 0..3 {
            let p: Vec<f64> = (0..nv).map(|i| 0.7 * ((i * 5 + k * 11) as f64 * 0.9).cos()).collect();
            assert_all_pass(n, &quartic(n), &p);
        }
    }
}

#[test]
fn calibration_rejects_the_squared_factor() {
    let n = 1;
    let table = JetTable::new(&quartic(n), n, false).unwrap();
    let p = vec![0.3, -0.2, 0.1, 0.4, -0.5, 0.2, 0.1];
    let outcome = conformal_point_checks(&table, &p, StencilOptions::default());
    // the divergence identity needs third-order jets
    let outcome = outcome.unwrap();
    assert!(outcome.residuals.iter().any(|r| r.id == "structure.divergence" && r.max_residual.is_nan()));
    let sq = outcome
        .calibration
        .mismatch
        .iter()
        .find(|(c, _)| *c == PairingConvention::SquaredFactor)
        .unwrap()
        .1;
    assert!(sq > 1e-3);
}

#[test]
fn missing_jets_error() {
    let n = 1;
    let table = JetTable::new(&quartic(n), n, false).unwrap();
    let p = vec![0.1; 7];
    let def = DeformationData::at(&table, &p).unwrap();
    let r = curvature_bar_direct(&table, &p, StencilOptions::default()).unwrap();
    let pack = ricci_traces(&r, &def.bar);
    let split = torsion_split(&def.deformed_torsion_endomorphisms(), &def.bar, 1e-10).unwrap();
    assert_eq!(
        pqc_core::invariants::verify_structure_identities(&pack, &split, &def.bar, None).unwrap_err(),
        InvariantsError::MissingJets
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn random_quadratic_factors(
        c in proptest::collection::vec(-0.4f64..0.4, 6),
        p in proptest::collection::vec(-0.8f64..0.8, 7),
    ) {
        let n = 1;
        let h = poly(n, &[
            (3.0, &[]),
            (c[0], &[("t1", 1)]),
            (c[1], &[("x1", 1), ("y", 1)]),
            (c[2], &[("y1", 2)]),
            (c[3], &[("z1", 1), ("x", 1)]),
            (c[4], &[("z", 2)]),
            (c[5], &[("t1", 1), ("x1", 1)]),
        ]);
        prop_assume!(h.eval(&p) > 0.5);
        assert_all_pass(n, &h, &p);
    }
}
