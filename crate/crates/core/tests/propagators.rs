use coherent_lab::fock::{LadderPoly, Mode, PhasePoint, PhasePoly};
use coherent_lab::propagators::{
    convergence_study, cs_exact_propagator, grid_exact_propagator, propagate,
    sliced_propagator_position, Endpoints, LatticeSpec, Method, ORACLE_DIM,
};

fn quartic(lambda: f64) -> LadderPoly {
    LadderPoly::normal_ordered(
        Mode::unit(),
        &(PhasePoly::oscillator(1.0) + PhasePoly::monomial(0, 4, lambda)),
    )
}

#[test]
fn position_lattice_reversal_is_conjugation() {
    // K(a, −T; b) = K(b, T; a)* holds for the oracle exactly and for the
    // first-order lattice up to O(ε)
    let h = quartic(0.1);
    for (a, b) in [(0.0, 0.4), (-0.8, 1.2), (0.4, -2.0)] {
        let mut defects = Vec::new();
        for n in [8, 16, 32] {
            let fwd_lat = LatticeSpec::new(n, 0.5, 1.0).unwrap();
            let mut rev_lat = fwd_lat;
            rev_lat.total_time = -fwd_lat.total_time;
            let fwd = sliced_propagator_position(b, a, &fwd_lat, &h)
                .unwrap()
                .value;
            let rev = sliced_propagator_position(a, b, &rev_lat, &h)
                .unwrap()
                .value;
            defects.push((fwd - rev.conj()).norm());
            if n == 8 {
                let exact_fwd = grid_exact_propagator(b, a, &fwd_lat, &h).unwrap();
                let exact_rev = grid_exact_propagator(a, b, &rev_lat, &h).unwrap();
                assert!((exact_fwd - exact_rev.conj()).norm() <= 1e-12);
            }
        }
        // first order: four times the slices, a quarter of the defect
        assert!(defects[2] <= 0.35 * defects[0], "{a} → {b}: {defects:.3?}");
    }
}

#[test]
fn free_evolution_has_no_slicing_error() {
    let h = LadderPoly::zero(Mode::unit());
    let lat = LatticeSpec::new(4, 0.5, 1.0).unwrap();
    let ends = [
        (
            Method::SlicedPosition,
            Endpoints::Position {
                q_initial: 0.0,
                q_final: 0.4,
            },
        ),
        (
            Method::SlicedCs,
            Endpoints::Phase {
                start: PhasePoint::new(0.0, 1.0),
                end: PhasePoint::new(-0.4, 0.9),
            },
        ),
    ];
    for (method, e) in ends {
        let t = convergence_study(method, &h, e, &lat, &[1, 2, 4, 8]).unwrap();
        for row in &t.rows {
            assert!(
                row.error <= 1e-6,
                "{method:?} N = {}: {:.2e}",
                row.slices,
                row.error
            );
        }
    }
}

#[test]
fn quartic_errors_decrease() {
    let h = quartic(0.1);
    let lat = LatticeSpec::new(4, 0.25, 1.0).unwrap();
    let t = convergence_study(
        Method::SlicedPosition,
        &h,
        Endpoints::Position {
            q_initial: 0.0,
            q_final: 0.4,
        },
        &lat,
        &[4, 8, 16, 32],
    )
    .unwrap();
    assert!(
        t.rows.windows(2).all(|w| w[1].error < w[0].error),
        "{:?}",
        t.rows
    );
}

#[test]
fn exact_method_dispatches_to_the_oracles() {
    let h = quartic(0.05);
    let lat = LatticeSpec::new(8, 0.5, 1.0).unwrap();
    let (start, end) = (PhasePoint::new(0.2, 0.5), PhasePoint::new(-0.1, 0.7));
    let r = propagate(Method::Exact, Endpoints::Phase { start, end }, &lat, &h).unwrap();
    assert_eq!(
        r.value,
        cs_exact_propagator(start, end, 0.5, &h, ORACLE_DIM).unwrap()
    );
    let r = propagate(
        Method::Exact,
        Endpoints::Position {
            q_initial: 0.0,
            q_final: 0.4,
        },
        &lat,
        &h,
    )
    .unwrap();
    assert_eq!(r.value, grid_exact_propagator(0.4, 0.0, &lat, &h).unwrap());
    assert_eq!(r.error_estimate, 0.0);
}

#[test]
fn fine_cs_lattice_is_close_to_the_oracle() {
    let h = quartic(0.05);
    let lat = LatticeSpec::new(32, 0.5, 1.0).unwrap();
    let (start, end) = (PhasePoint::new(0.0, 1.0), PhasePoint::new(-0.4, 0.9));
    let cs = propagate(Method::SlicedCs, Endpoints::Phase { start, end }, &lat, &h).unwrap();
    let exact = cs_exact_propagator(start, end, 0.5, &h, 64).unwrap();
    assert!((cs.value - exact).norm() <= 5e-3, "{} vs {exact}", cs.value);
}
