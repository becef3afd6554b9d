use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{hermiticity_defect, FockOperator, FockVector, Mode};
use crate::{Error, Result, C64};

/// Spectral decomposition of a hermitian Hamiltonian, reused for every
/// evolution time.
#[derive(Clone, Debug)]
pub struct Evolution {
    energies: DVector<f64>,
    vectors: DMatrix<C64>,
    mode: Mode,
}

impl Evolution {
    pub fn new(h: &FockOperator) -> Result<Self> {
        if !h.is_hermitian() {
            return Err(Error::NotHermitian(hermiticity_defect(h.matrix())));
        }
        let eig = SymmetricEigen::new(h.matrix().clone());
        Ok(Evolution {
            energies: eig.eigenvalues,
            vectors: eig.eigenvectors,
            mode: h.mode(),
        })
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// `U(t) = e^{-iHt/ħ}`.
    pub fn propagator(&self, t: f64) -> FockOperator {
        let hbar = self.mode.hbar;
        let mut scaled = self.vectors.clone();
        for (mut col, &e) in scaled.column_iter_mut().zip(self.energies.iter()) {
            col *= C64::from_polar(1.0, -e * t / hbar);
        }
        FockOperator::from_parts(scaled * self.vectors.adjoint(), self.mode)
    }

    /// `e^{-iHt/ħ} |ψ⟩` without forming the full propagator.
    pub fn evolve(&self, psi: &FockVector, t: f64) -> FockVector {
        let hbar = self.mode.hbar;
        let mut coeffs = self.vectors.ad_mul(psi.amplitudes());
        for (c, &e) in coeffs.iter_mut().zip(self.energies.iter()) {
            *c *= C64::from_polar(1.0, -e * t / hbar);
        }
        FockVector::new(&self.vectors * coeffs, psi.hbar())
    }
}

/// `e^{-iHT/ħ}` for a hermitian truncated Hamiltonian.
pub fn exact_propagator(h: &FockOperator, t: f64) -> Result<FockOperator> {
    Ok(Evolution::new(h)?.propagator(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{overlap_analytic, FockSpace, LadderPoly, PhasePoint};

    fn unitarity_defect(u: &FockOperator) -> f64 {
        let prod = u.matrix() * u.matrix().adjoint();
        let id = DMatrix::<C64>::identity(u.dim(), u.dim());
        (prod - id).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_time_is_identity() {
        let space = FockSpace::with_hbar(12, 1.0).unwrap();
        let h = space.operator(&LadderPoly::number(space.mode()));
        let u = exact_propagator(&h, 0.0).unwrap();
        let id = DMatrix::<C64>::identity(12, 12);
        assert!((u.matrix() - id).iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn rejects_non_hermitian() {
        let space = FockSpace::with_hbar(6, 1.0).unwrap();
        let a = space.operator(&LadderPoly::annihilator(space.mode()));
        assert!(matches!(
            exact_propagator(&a, 1.0),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn quartic_unitarity() {
        let space = FockSpace::with_hbar(64, 1.0).unwrap();
        let mode = space.mode();
        let q = LadderPoly::position(mode);
        let p = LadderPoly::momentum(mode);
        let h = (&p * &p + &q * &q).scale(0.5) + q.pow(4).scale(0.1);
        let u = exact_propagator(&space.operator(&h), 1.0).unwrap();
        assert!(unitarity_defect(&u) <= 1e-9);
    }

    #[test]
    fn number_operator_rotates_phase_space() {
        // e^{-i a†a T}|p,q⟩ = e^{i(p_r q_r − p q)/2ħ} |p_r, q_r⟩ with α → α e^{-iT}.
        let t = std::f64::consts::FRAC_PI_2;
        let start = PhasePoint::new(0.0, 1.0);
        let rotated = PhasePoint::new(-1.0, 0.0);
        for &dim in &[32, 64] {
            let space = FockSpace::with_hbar(dim, 1.0).unwrap();
            let u =
                exact_propagator(&space.operator(&LadderPoly::number(space.mode())), t).unwrap();
            let end = space.coherent_state(rotated).unwrap();
            let s = space.coherent_state(start).unwrap();
            let numeric = u.matrix_element(&end, &s);
            let phase = C64::from_polar(1.0, (rotated.p * rotated.q - start.p * start.q) / 2.0);
            let expected = overlap_analytic(rotated, rotated, 1.0) * phase;
            assert!((numeric - expected).norm() < 1e-10, "dim {dim}: {numeric}");
            // and at a point off the rotated label
            let other = PhasePoint::new(-0.5, 0.4);
            let numeric = u.matrix_element(&space.coherent_state(other).unwrap(), &s);
            let expected = overlap_analytic(other, rotated, 1.0) * phase;
            assert!((numeric - expected).norm() < 1e-10);
        }
    }
}
