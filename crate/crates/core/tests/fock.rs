use coherent_lab::fock::{
    overlap_analytic, symbol_normal, DiscGrid, LadderPoly, Mode, PhasePoint, PhasePoly,
};
use coherent_lab::{FockSpace, C64};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn point() -> impl Strategy<Value = PhasePoint> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(p, q)| PhasePoint::new(p, q))
}

/// Real polynomial of degree ≤ 4 in (p, q) with small coefficients.
fn poly() -> impl Strategy<Value = PhasePoly> {
    prop::collection::vec(-1.0f64..1.0, 15).prop_map(|c| {
        let mut f = PhasePoly::zero();
        let mut i = 0;
        for deg in 0..=4u32 {
            for j in 0..=deg {
                f = f + PhasePoly::monomial(j, deg - j, c[i]);
                i += 1;
            }
        }
        f
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn overlap_is_hermitian_and_matches_closed_form(a in point(), b in point(), hbar in 0.5f64..2.0) {
        let space = FockSpace::with_hbar(96, hbar).unwrap();
        let (u, v) = (space.coherent_state(a).unwrap(), space.coherent_state(b).unwrap());
        let (uv, vu) = (u.inner(&v), v.inner(&u));
        prop_assert!((uv - vu.conj()).norm() <= 1e-14);
        prop_assert!(uv.norm() <= 1.0 + 1e-12);
        prop_assert!((uv - overlap_analytic(a, b, hbar)).norm() <= 1e-10);
    }

    #[test]
    fn labels_are_mean_values(z in point(), hbar in 0.5f64..2.0) {
        let space = FockSpace::with_hbar(96, hbar).unwrap();
        let psi = space.coherent_state(z).unwrap();
        prop_assert!((space.position().expectation(&psi).re - z.q).abs() <= 1e-10);
        prop_assert!((space.momentum().expectation(&psi).re - z.p).abs() <= 1e-10);
    }

    #[test]
    fn normal_symbol_returns_the_polynomial(f in poly(), z in point()) {
        let mode = Mode::unit();
        let space = FockSpace::new(96, mode).unwrap();
        let h = space.operator(&LadderPoly::normal_ordered(mode, &f));
        let s = symbol_normal(&h, z).unwrap();
        prop_assert!((s - f.eval(z.p, z.q)).norm() <= 1e-9 * (1.0 + f.eval(z.p, z.q).norm()));
    }
}

#[test]
fn anti_normal_symbol_reconstructs_matrix_elements() {
    // ⟨n|H|k⟩ = ∫ h_anti(z) ⟨n|z⟩⟨z|k⟩ dμ, checked for low n, k by disc quadrature
    let mode = Mode::unit();
    let sym = PhasePoly::oscillator(1.0)
        + PhasePoly::monomial(0, 4, 0.1)
        + PhasePoly::monomial(1, 1, 0.3);
    let h = LadderPoly::normal_ordered(mode, &sym);
    let anti = h.anti_normal_symbol();
    let space = FockSpace::new(80, mode).unwrap();
    let exact = space.operator(&h);
    let grid = DiscGrid::new(9.0, 0.1).unwrap();
    let weight = grid.spacing * grid.spacing / TAU;
    let n = 4;
    let mut acc = vec![C64::new(0.0, 0.0); n * n];
    for (p, qs) in grid.rows() {
        for q in qs {
            let amp = space.coherent_amplitudes(PhasePoint::new(p, q));
            let a = amp.amplitudes();
            let w = anti.eval(p, q) * weight;
            for i in 0..n {
                for k in 0..n {
                    acc[i * n + k] += w * a[i] * a[k].conj();
                }
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            let d = (acc[i * n + k] - exact.matrix()[(i, k)]).norm();
            assert!(
                d <= 1e-8,
                "({i},{k}): {} vs {}",
                acc[i * n + k],
                exact.matrix()[(i, k)]
            );
        }
    }
}
