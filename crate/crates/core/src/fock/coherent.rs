use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{FockSpace, FockVector, LadderPoly, Mode, PhasePoint};
use crate::{Error, Result, C64};

/// A coherent state is accepted at dimension `D` when `Σ_{n≥D} |c_n|² ≤` this.
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// `P(X ≥ from)` for `X ~ Poisson(mean)`.
pub fn poisson_tail(mean: f64, from: usize) -> f64 {
    if from == 0 {
        return 1.0;
    }
    if mean <= 0.0 {
        return 0.0;
    }
    let ln_mean = mean.ln();
    let mut ln_fact = 0.0;
    for i in 1..=from {
        ln_fact += (i as f64).ln();
    }
    let mut total = 0.0;
    let mut n = from;
    loop {
        let term = (-mean + n as f64 * ln_mean - ln_fact).exp();
        total += term;
        n += 1;
        ln_fact += (n as f64).ln();
        if (n as f64) > mean && term < 1e-18 * total.max(1e-300) {
            break;
        }
        if n > from + 100_000 {
            break;
        }
    }
    total.min(1.0)
}

/// Smallest dimension whose Poisson tail is within `tol`.
pub fn suggested_dim(mean: f64, tol: f64) -> usize {
    let mut d = 2;
    while poisson_tail(mean, d) > tol {
        d += 1;
    }
    d
}

/// `|p,q⟩` on `dim` levels with unit mass, checked against the tail gate.
pub fn coherent_state(pt: PhasePoint, dim: usize, hbar: f64) -> Result<FockVector> {
    FockSpace::with_hbar(dim, hbar)?.coherent_state(pt)
}

/// Eigensystems of `Q` and `P` on a working truncation, shared by every
/// coherent state of the same mode.
struct Displacer {
    q_values: DVector<f64>,
    q_vectors: DMatrix<f64>,
    p_values: DVector<f64>,
    p_vectors: DMatrix<C64>,
}

type CacheKey = (usize, u64, u64);

fn displacer(work_dim: usize, mode: Mode) -> Arc<Displacer> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<Displacer>>>> = OnceLock::new();
    let key = (work_dim, mode.mass.to_bits(), mode.hbar.to_bits());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(d) = cache.lock().unwrap().get(&key) {
        return Arc::clone(d);
    }
    let space = FockSpace {
        dim: work_dim,
        mode,
    };
    let q = space.operator(&LadderPoly::position(mode));
    let p = space.operator(&LadderPoly::momentum(mode));
    let q_real = q.matrix().map(|c| c.re);
    let q_eig = SymmetricEigen::new(q_real);
    let p_eig = SymmetricEigen::new(p.matrix().clone());
    let d = Arc::new(Displacer {
        q_values: q_eig.eigenvalues,
        q_vectors: q_eig.eigenvectors,
        p_values: p_eig.eigenvalues,
        p_vectors: p_eig.eigenvectors,
    });
    cache.lock().unwrap().insert(key, Arc::clone(&d));
    d
}

pub(crate) fn work_dim(dim: usize) -> usize {
    (2 * dim).max(dim + 40)
}

impl Displacer {
    /// `e^{-iqP/ħ} e^{ipQ/ħ} v`.
    fn displace(&self, v: &DVector<C64>, pt: PhasePoint, hbar: f64) -> DVector<C64> {
        let vq = self.q_vectors.map(|x| C64::new(x, 0.0));
        let mut coeffs = vq.tr_mul(v);
        for (c, &lam) in coeffs.iter_mut().zip(self.q_values.iter()) {
            *c *= C64::from_polar(1.0, pt.p * lam / hbar);
        }
        let kicked = &vq * coeffs;
        let mut coeffs = self.p_vectors.ad_mul(&kicked);
        for (c, &lam) in coeffs.iter_mut().zip(self.p_values.iter()) {
            *c *= C64::from_polar(1.0, -pt.q * lam / hbar);
        }
        &self.p_vectors * coeffs
    }
}

pub(crate) fn raw_amplitudes(space: &FockSpace, pt: PhasePoint) -> FockVector {
    let w = work_dim(space.dim);
    let disp = displacer(w, space.mode);
    let mut vac = DVector::zeros(w);
    vac[0] = C64::new(1.0, 0.0);
    let full = disp.displace(&vac, pt, space.mode.hbar);
    FockVector::new(full.rows(0, space.dim).into_owned(), space.mode.hbar)
}

pub(crate) fn gated_state(space: &FockSpace, pt: PhasePoint) -> Result<FockVector> {
    if !pt.is_finite() {
        return Err(Error::param("point", "phase-space point must be finite"));
    }
    let mean = space.mode.mean_occupation(pt.p, pt.q);
    let tail = poisson_tail(mean, space.dim);
    if tail > TAIL_TOLERANCE {
        return Err(Error::Truncation {
            dim: space.dim,
            tail,
            suggested: suggested_dim(mean, TAIL_TOLERANCE),
        });
    }
    Ok(raw_amplitudes(space, pt).normalize())
}

/// Displaces an arbitrary vector of `space` by `(p, q)`, using the same
/// working truncation as the coherent states. Components beyond `dim` of the
/// working space are dropped.
pub(crate) fn displace_vector(space: &FockSpace, v: &DVector<C64>, pt: PhasePoint) -> DVector<C64> {
    let w = work_dim(space.dim);
    let disp = displacer(w, space.mode);
    let mut padded = DVector::zeros(w);
    padded.rows_mut(0, v.len()).copy_from(v);
    disp.displace(&padded, pt, space.mode.hbar)
        .rows(0, space.dim)
        .into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::overlap_analytic;

    /// ⟨n|p,q⟩ = e^{-ipq/2ħ} e^{-|α|²/2} αⁿ/√n!, written out independently.
    fn closed_form(pt: PhasePoint, n: usize, hbar: f64) -> C64 {
        let alpha = C64::new(pt.q, pt.p) / (2.0 * hbar).sqrt();
        let mut amp = C64::from_polar((-alpha.norm_sqr() / 2.0).exp(), -pt.p * pt.q / (2.0 * hbar));
        for k in 1..=n {
            amp *= alpha / (k as f64).sqrt();
        }
        amp
    }

    #[test]
    fn origin_is_vacuum() {
        let v = coherent_state(PhasePoint::ORIGIN, 16, 1.0).unwrap();
        assert!((v.amplitudes()[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(v.tail_mass(1) < 1e-24);
    }

    #[test]
    fn mean_values_are_labels() {
        let space = FockSpace::with_hbar(48, 1.0).unwrap();
        let pt = PhasePoint::new(0.3, -1.2);
        let v = space.coherent_state(pt).unwrap();
        let q = space.position().expectation(&v);
        let p = space.momentum().expectation(&v);
        assert!((q.re + 1.2).abs() < 1e-10 && q.im.abs() < 1e-10);
        assert!((p.re - 0.3).abs() < 1e-10 && p.im.abs() < 1e-10);
    }

    #[test]
    fn truncation_gate() {
        let err = coherent_state(PhasePoint::new(2.0, 2.0), 8, 1.0).unwrap_err();
        match err {
            Error::Truncation { suggested, .. } => assert!(suggested > 8),
            e => panic!("unexpected {e:?}"),
        }
        let v = coherent_state(PhasePoint::new(2.0, 2.0), 64, 1.0).unwrap();
        assert!(v.is_normalized());
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplitudes_match_closed_form_phase_convention() {
        for &hbar in &[1.0, 0.4] {
            let pt = PhasePoint::new(-0.8, 1.4);
            let v = coherent_state(pt, 64, hbar).unwrap();
            for n in 0..30 {
                let diff = (v.amplitudes()[n] - closed_form(pt, n, hbar)).norm();
                assert!(diff < 1e-11, "n={n} hbar={hbar} diff={diff}");
            }
        }
    }

    #[test]
    fn numeric_overlap_matches_closed_form() {
        let a = PhasePoint::new(1.1, -0.4);
        let b = PhasePoint::new(-0.6, 0.9);
        let va = coherent_state(a, 64, 1.0).unwrap();
        let vb = coherent_state(b, 64, 1.0).unwrap();
        assert!((va.inner(&vb) - overlap_analytic(a, b, 1.0)).norm() < 1e-10);
    }

    #[test]
    fn poisson_tail_values() {
        assert_eq!(poisson_tail(3.0, 0), 1.0);
        assert!((poisson_tail(2.0, 1) - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        // P(X >= 8 | λ = 4) = 0.0511336158...
        assert!((poisson_tail(4.0, 8) - 0.051_133_615_8).abs() < 1e-10);
    }

    #[test]
    fn suggested_dim_passes_gate() {
        let d = suggested_dim(4.0, TAIL_TOLERANCE);
        assert!(poisson_tail(4.0, d) <= TAIL_TOLERANCE);
        assert!(poisson_tail(4.0, d - 1) > TAIL_TOLERANCE);
    }
}
