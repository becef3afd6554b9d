use coherent_lab::fock::PhasePoint;
use coherent_lab::rotsym::{
    fiducial_wavefunction_check, h2_symbol_closed, reduction_check, rotsym_flow, InvariantTriple,
    ReducibleSpec, ReducibleSystem, Reduction, RotSymSpec, SquareGrid,
};
use proptest::prelude::*;

fn start(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-1.0f64..1.0, n),
        prop::collection::vec(-1.0f64..1.0, n),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn invariants_hold_along_flows(
        (n, (p0, q0)) in (1usize..7).prop_flat_map(|n| (Just(n), start(n))),
        m0 in 0.5f64..1.5,
        lambda0 in 0.0f64..0.3,
    ) {
        let spec = RotSymSpec::new(n, m0, lambda0).unwrap();
        let t = rotsym_flow(&spec, &p0, &q0, 5.0, 1e-3).unwrap();
        prop_assert!(t.energy_drift() <= 1e-8, "E drift {:.2e}", t.energy_drift());
        prop_assert!(t.l2_drift() <= 1e-8, "L² drift {:.2e}", t.l2_drift());
        prop_assert!(t.min_l2() >= -1e-12);
        let r = reduction_check(&t);
        prop_assert!(r.residual <= 1e-8, "{:?} {:.2e}", r.reduction, r.residual);
    }

    #[test]
    fn collinear_starts_reduce_to_a_line(q0 in prop::collection::vec(-1.0f64..1.0, 2..6), k in -2.0f64..2.0) {
        prop_assume!(q0.iter().map(|x| x * x).sum::<f64>() > 1e-2);
        let p0: Vec<f64> = q0.iter().map(|x| k * x).collect();
        let spec = RotSymSpec::new(q0.len(), 1.0, 0.1).unwrap();
        let t = rotsym_flow(&spec, &p0, &q0, 3.0, 1e-3).unwrap();
        let r = reduction_check(&t);
        prop_assert_eq!(r.reduction, Reduction::Line);
        prop_assert!(r.residual <= 1e-8);
    }

    #[test]
    fn cauchy_schwarz(p in prop::collection::vec(-3.0f64..3.0, 1..8), shift in -3.0f64..3.0) {
        let q: Vec<f64> = p.iter().enumerate().map(|(i, x)| x * shift + i as f64).collect();
        let inv = InvariantTriple::of(&p, &q);
        prop_assert!(inv.l2() >= -1e-12 * (1.0 + inv.x * inv.z));
    }
}

#[test]
fn fock_symbol_matches_closed_form_across_parameters() {
    for (m, zeta, beta, p, q) in [
        (0.7, 0.2, 1.5, 0.4, -0.6),
        (1.6, 0.45, 0.3, -1.1, 0.8),
        (1.0, 0.35, 2.0, 0.0, 1.2),
    ] {
        let spec = ReducibleSpec::new(m, zeta, beta).unwrap();
        let sys = ReducibleSystem::new(&spec).unwrap();
        let fock = sys.symbol(p, q).unwrap();
        let closed = h2_symbol_closed(&spec, p, q);
        assert!(
            (fock - closed).abs() <= 1e-6,
            "m {m} ζ {zeta} β {beta}: {fock} vs {closed}"
        );
        assert!(sys.min_eigenvalue() >= -1e-8);
    }
}

#[test]
fn fiducial_matches_the_printed_gaussian() {
    let spec = ReducibleSpec::new(1.0, 0.5, 2.0).unwrap();
    let grid = SquareGrid::new(6.0, 121).unwrap();
    for pt in [PhasePoint::ORIGIN, PhasePoint::new(1.0, 1.0)] {
        let r = fiducial_wavefunction_check(&spec, pt, &grid).unwrap();
        assert!(r <= 1e-6, "{pt:?}: {r:.2e}");
    }
}
