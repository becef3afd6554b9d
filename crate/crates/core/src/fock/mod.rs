//! Truncated-Fock-space linear algebra.
//!
//! A [`FockSpace`] fixes a truncation dimension and an oscillator [`Mode`]
//! (mass and `ħ`). Operators are assembled from exact [`LadderPoly`] algebra
//! elements, so every [`FockOperator`] built this way is the exact projection
//! of its infinite-dimensional counterpart onto the retained levels.
//!
//! Coherent states follow the ordering `|p,q⟩ = e^{-iqP/ħ} e^{ipQ/ħ} |0⟩`,
//! which fixes their phase: the closed-form overlap is
//! `⟨p,q|p′,q′⟩ = exp{i(p+p′)(q−q′)/2ħ − [(p−p′)² + (q−q′)²]/4ħ}` for unit mass.

mod coherent;
mod evolution;
mod ladder;
pub mod poly;
mod quadrature;
mod symbol;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

pub(crate) use coherent::displace_vector;
pub use coherent::{coherent_state, poisson_tail, suggested_dim, TAIL_TOLERANCE};
pub use evolution::{exact_propagator, Evolution};
pub use ladder::{build_ladder, build_qp};
pub use poly::{LadderPoly, Mode, PhasePoly, PqPoly};
pub use quadrature::{resolution_matrix, resolution_of_unity_check, DiscGrid};
pub use symbol::{overlap_analytic, symbol_normal, symbol_pq};

/// Hermiticity tolerance on `max |M − M†|`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A point `(p, q)` of the phase plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub p: f64,
    pub q: f64,
}

impl PhasePoint {
    pub const ORIGIN: PhasePoint = PhasePoint { p: 0.0, q: 0.0 };

    pub fn new(p: f64, q: f64) -> Self {
        PhasePoint { p, q }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.q.is_finite()
    }

    pub fn dist2(&self, other: &PhasePoint) -> f64 {
        (self.p - other.p).powi(2) + (self.q - other.q).powi(2)
    }
}

/// Amplitude vector on a truncated oscillator basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    amplitudes: DVector<C64>,
    hbar: f64,
    normalized: bool,
}

impl FockVector {
    pub fn new(amplitudes: DVector<C64>, hbar: f64) -> Self {
        FockVector {
            amplitudes,
            hbar,
            normalized: false,
        }
    }

    /// Basis state `|n⟩`.
    pub fn basis(dim: usize, n: usize, hbar: f64) -> Self {
        let mut v = DVector::zeros(dim);
        v[n] = C64::new(1.0, 0.0);
        FockVector {
            amplitudes: v,
            hbar,
            normalized: true,
        }
    }

    /// Rescales to unit norm and sets the normalized flag.
    pub fn normalize(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes /= C64::new(n, 0.0);
            self.normalized = true;
        }
        self
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Population in levels `n >= from`.
    pub fn tail_mass(&self, from: usize) -> f64 {
        self.amplitudes
            .iter()
            .skip(from)
            .map(|c| c.norm_sqr())
            .sum()
    }
}

/// Complex matrix on a truncated oscillator basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    matrix: DMatrix<C64>,
    hermitian: bool,
    mode: Mode,
}

impl FockOperator {
    /// Wraps a matrix, setting the hermitian flag when `max |M − M†| ≤ 1e-12`.
    pub fn from_matrix(matrix: DMatrix<C64>, mode: Mode) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "operator matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let hermitian = hermiticity_defect(&matrix) <= HERMITIAN_TOL;
        Ok(FockOperator {
            matrix,
            hermitian,
            mode,
        })
    }

    pub(crate) fn from_parts(matrix: DMatrix<C64>, mode: Mode) -> Self {
        let hermitian = hermiticity_defect(&matrix) <= HERMITIAN_TOL;
        FockOperator {
            matrix,
            hermitian,
            mode,
        }
    }

    pub fn identity(dim: usize, mode: Mode) -> Self {
        FockOperator {
            matrix: DMatrix::identity(dim, dim),
            hermitian: true,
            mode,
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn hbar(&self) -> f64 {
        self.mode.hbar
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator {
            matrix: self.matrix.adjoint(),
            hermitian: self.hermitian,
            mode: self.mode,
        }
    }

    pub fn apply(&self, v: &FockVector) -> FockVector {
        FockVector::new(&self.matrix * &v.amplitudes, v.hbar)
    }

    /// `⟨v|M|v⟩`.
    pub fn expectation(&self, v: &FockVector) -> C64 {
        v.amplitudes.dotc(&(&self.matrix * &v.amplitudes))
    }

    /// `⟨u|M|v⟩`.
    pub fn matrix_element(&self, u: &FockVector, v: &FockVector) -> C64 {
        u.amplitudes.dotc(&(&self.matrix * &v.amplitudes))
    }

    pub fn compose(&self, other: &FockOperator) -> FockOperator {
        FockOperator::from_parts(&self.matrix * &other.matrix, self.mode)
    }

    pub fn commutator(&self, other: &FockOperator) -> FockOperator {
        FockOperator::from_parts(
            &self.matrix * &other.matrix - &other.matrix * &self.matrix,
            self.mode,
        )
    }

    pub fn scaled(&self, s: C64) -> FockOperator {
        FockOperator::from_parts(&self.matrix * s, self.mode)
    }

    pub fn plus(&self, other: &FockOperator) -> FockOperator {
        FockOperator::from_parts(&self.matrix + &other.matrix, self.mode)
    }
}

pub(crate) fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// A truncation dimension together with the oscillator mode it represents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FockSpace {
    dim: usize,
    mode: Mode,
}

impl FockSpace {
    pub fn new(dim: usize, mode: Mode) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Dimension(format!(
                "truncation must be >= 2, got {dim}"
            )));
        }
        check_mode(mode)?;
        Ok(FockSpace { dim, mode })
    }

    /// Unit mass with the given `ħ`.
    pub fn with_hbar(dim: usize, hbar: f64) -> Result<Self> {
        Self::new(dim, Mode::new(1.0, hbar))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn hbar(&self) -> f64 {
        self.mode.hbar
    }

    /// Exact projection of a normal-ordered polynomial onto the first `dim` levels.
    pub fn operator(&self, poly: &LadderPoly) -> FockOperator {
        FockOperator::from_parts(ladder::ladder_matrix(poly, self.dim), self.mode)
    }

    pub fn position(&self) -> FockOperator {
        self.operator(&LadderPoly::position(self.mode))
    }

    pub fn momentum(&self) -> FockOperator {
        self.operator(&LadderPoly::momentum(self.mode))
    }

    /// Coherent state `|p,q⟩`, gated on the tail mass beyond `dim`.
    pub fn coherent_state(&self, pt: PhasePoint) -> Result<FockVector> {
        coherent::gated_state(self, pt)
    }

    /// The first `dim` amplitudes of `|p,q⟩` without the truncation gate and
    /// without renormalization.
    pub fn coherent_amplitudes(&self, pt: PhasePoint) -> FockVector {
        coherent::raw_amplitudes(self, pt)
    }

    pub fn vacuum(&self) -> FockVector {
        FockVector::basis(self.dim, 0, self.mode.hbar)
    }
}

pub(crate) fn check_mode(mode: Mode) -> Result<()> {
    if !(mode.mass > 0.0 && mode.mass.is_finite()) {
        return Err(Error::param(
            "mass",
            format!("must be > 0, got {}", mode.mass),
        ));
    }
    check_hbar(mode.hbar)
}

pub(crate) fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::param("hbar", format!("must be > 0, got {hbar}")));
    }
    Ok(())
}
