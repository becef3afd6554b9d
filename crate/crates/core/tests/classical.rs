use coherent_lab::classical::{
    compare_classical_quantum, hamilton_flow, restricted_action, Trajectory,
};
use coherent_lab::fock::{LadderPoly, Mode, PhasePoint, PhasePoly};
use proptest::prelude::*;

fn quadratic() -> impl Strategy<Value = PhasePoly> {
    // positive definite, so orbits stay bounded and the Fock truncation holds
    (
        0.3f64..1.5,
        0.3f64..1.5,
        -0.25f64..0.25,
        -0.5f64..0.5,
        -0.5f64..0.5,
    )
        .prop_map(|(a, c, b, d, e)| {
            PhasePoly::monomial(2, 0, 0.5 * a)
                + PhasePoly::monomial(0, 2, 0.5 * c)
                + PhasePoly::monomial(1, 1, b)
                + PhasePoly::monomial(1, 0, d)
                + PhasePoly::monomial(0, 1, e)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn quadratic_means_follow_the_flow(h in quadratic(), p in -1.0f64..1.0, q in -1.0f64..1.0) {
        let op = LadderPoly::normal_ordered(Mode::unit(), &h);
        let r = compare_classical_quantum(&op, PhasePoint::new(p, q), 3.0, 2e-3, 64).unwrap();
        prop_assert!(r.max_deviation <= 1e-8, "{:.2e}", r.max_deviation);
    }

    #[test]
    fn flow_is_reversible(h in quadratic(), quartic in 0.0f64..0.2, p in -1.0f64..1.0, q in -1.0f64..1.0) {
        let h = h + PhasePoly::monomial(0, 4, quartic);
        let fwd = hamilton_flow(&h, PhasePoint::new(p, q), 2.0, 1e-3).unwrap();
        let end = hamilton_flow(&h, fwd.end(), -2.0, 1e-3).unwrap().end();
        prop_assert!(end.dist2(&PhasePoint::new(p, q)).sqrt() <= 1e-8);
    }
}

#[test]
fn classical_paths_make_the_action_stationary() {
    // I[z + εη] − I[z] is O(ε²) for a bump η vanishing at the ends of q
    let h = PhasePoly::oscillator(1.0) + PhasePoly::monomial(0, 4, 0.1);
    let traj = hamilton_flow(&h, PhasePoint::new(0.2, 1.0), 2.0, 1e-3).unwrap();
    let total = 2.0;
    let perturbed = |eps: f64| {
        let points = traj
            .points
            .iter()
            .zip(&traj.times)
            .map(|(z, &t)| {
                let bump = (std::f64::consts::PI * t / total).sin();
                PhasePoint::new(z.p + eps * (1.3 * t).cos(), z.q + eps * bump)
            })
            .collect();
        Trajectory {
            times: traj.times.clone(),
            points,
            energy: traj.energy.clone(),
        }
    };
    let i0 = restricted_action(&traj, &h);
    let d1 = (restricted_action(&perturbed(1e-3), &h) - i0).abs();
    let d2 = (restricted_action(&perturbed(2e-3), &h) - i0).abs();
    // quadratic response: doubling ε quadruples the change
    assert!((d2 / d1 - 4.0).abs() < 0.2, "{d1:.3e} {d2:.3e}");
    // a non-classical path responds linearly
    let off = perturbed(0.2);
    let j0 = restricted_action(&off, &h);
    let shift = |eps: f64| {
        let mut t = off.clone();
        for (z, &s) in t.points.iter_mut().zip(&traj.times) {
            z.q += eps * (std::f64::consts::PI * s / total).sin();
        }
        (restricted_action(&t, &h) - j0).abs()
    };
    assert!((shift(2e-3) / shift(1e-3) - 2.0).abs() < 0.05);
}
