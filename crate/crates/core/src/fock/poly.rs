//! Polynomials in the canonical operators.
//!
//! Operators are kept as exact algebra elements and only turned into matrices
//! at the last moment, so that every truncated matrix is the exact projection
//! of the infinite-dimensional operator onto the retained levels.
//!
//! Three representations are used:
//!
//! * [`LadderPoly`]: an operator in normal-ordered form `Σ c_jk a†^j a^k`.
//! * [`PqPoly`]: an operator in `P`-left / `Q`-right form `Σ c_jk P^j Q^k`,
//!   the ordering whose mixed matrix element `⟨p|·|q⟩/⟨p|q⟩` is read off by
//!   substitution.
//! * [`PhasePoly`]: a commutative polynomial in the phase-space labels
//!   `(p, q)`, used for symbols.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::C64;

/// Element of the two-generator Weyl algebra stored in `L^j R^k` order, where
/// the generators obey `R L = L R + comm`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct OrderedPoly {
    pub(crate) terms: BTreeMap<(u32, u32), C64>,
    pub(crate) comm: C64,
}

impl OrderedPoly {
    pub(crate) fn zero(comm: C64) -> Self {
        OrderedPoly {
            terms: BTreeMap::new(),
            comm,
        }
    }

    pub(crate) fn monomial(comm: C64, j: u32, k: u32, c: C64) -> Self {
        let mut p = Self::zero(comm);
        p.add_term(j, k, c);
        p
    }

    fn add_term(&mut self, j: u32, k: u32, c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let e = self.terms.entry((j, k)).or_insert(C64::new(0.0, 0.0));
        *e += c;
    }

    fn prune(mut self) -> Self {
        self.terms.retain(|_, c| c.norm() > 1e-300);
        self
    }

    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&(j, k), &c) in &other.terms {
            out.add_term(j, k, c);
        }
        out.prune()
    }

    fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out.prune()
    }

    /// Ordered (operator) product.
    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.comm);
        for (&(i, j), &c1) in &self.terms {
            for (&(k, l), &c2) in &other.terms {
                // R^j L^k = Σ_r C(j,r) C(k,r) r! comm^r L^{k-r} R^{j-r}
                let mut comm_pow = C64::new(1.0, 0.0);
                for r in 0..=j.min(k) {
                    let w = binomial(j, r) * binomial(k, r) * factorial(r);
                    out.add_term(i + k - r, j - r + l, c1 * c2 * comm_pow * w);
                    comm_pow *= self.comm;
                }
            }
        }
        out.prune()
    }

    /// Commutative product of the coefficient polynomials, i.e. `:A B:` for
    /// ordered `A` and `B`.
    fn mul_commutative(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.comm);
        for (&(i, j), &c1) in &self.terms {
            for (&(k, l), &c2) in &other.terms {
                out.add_term(i + k, j + l, c1 * c2);
            }
        }
        out.prune()
    }

    fn degree(&self) -> u32 {
        self.terms.keys().map(|&(j, k)| j + k).max().unwrap_or(0)
    }
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * f64::from(i))
}

/// Mass and `ħ` of a single oscillator mode. The annihilator is
/// `a = (mQ + iP)/√(2mħ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub mass: f64,
    pub hbar: f64,
}

impl Mode {
    pub fn new(mass: f64, hbar: f64) -> Self {
        Mode { mass, hbar }
    }

    /// `ħ = 1`, `m = 1`.
    pub fn unit() -> Self {
        Mode::new(1.0, 1.0)
    }

    /// The eigenvalue of `a` on `|p,q⟩`.
    pub fn alpha(&self, p: f64, q: f64) -> C64 {
        C64::new(self.mass * q, p) / (2.0 * self.mass * self.hbar).sqrt()
    }

    /// Mean occupation `|α|²` of the coherent state labelled `(p, q)`.
    pub fn mean_occupation(&self, p: f64, q: f64) -> f64 {
        (p * p / self.mass + self.mass * q * q) / (2.0 * self.hbar)
    }
}

/// A normal-ordered single-mode operator `Σ c_jk a†^j a^k`.
///
/// Arithmetic (`+`, `-`, `*`) is the operator algebra; [`LadderPoly::normal_mul`]
/// is the product inside normal-ordering colons.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderPoly {
    pub(crate) inner: OrderedPoly,
    mode: Mode,
}

impl LadderPoly {
    pub fn zero(mode: Mode) -> Self {
        LadderPoly {
            inner: OrderedPoly::zero(C64::new(1.0, 0.0)),
            mode,
        }
    }

    pub fn constant(mode: Mode, c: impl Into<C64>) -> Self {
        Self::monomial(mode, 0, 0, c.into())
    }

    /// `c a†^j a^k`.
    pub fn monomial(mode: Mode, j: u32, k: u32, c: C64) -> Self {
        LadderPoly {
            inner: OrderedPoly::monomial(C64::new(1.0, 0.0), j, k, c),
            mode,
        }
    }

    pub fn annihilator(mode: Mode) -> Self {
        Self::monomial(mode, 0, 1, C64::new(1.0, 0.0))
    }

    pub fn creator(mode: Mode) -> Self {
        Self::monomial(mode, 1, 0, C64::new(1.0, 0.0))
    }

    /// `Q = √(ħ/2m) (a + a†)`.
    pub fn position(mode: Mode) -> Self {
        let s = (mode.hbar / (2.0 * mode.mass)).sqrt();
        (Self::annihilator(mode) + Self::creator(mode)).scale(C64::new(s, 0.0))
    }

    /// `P = i √(mħ/2) (a† − a)`.
    pub fn momentum(mode: Mode) -> Self {
        let s = (mode.mass * mode.hbar / 2.0).sqrt();
        (Self::creator(mode) - Self::annihilator(mode)).scale(C64::new(0.0, s))
    }

    /// Number operator `a†a`.
    pub fn number(mode: Mode) -> Self {
        Self::monomial(mode, 1, 1, C64::new(1.0, 0.0))
    }

    /// `:f(P, Q):` for a phase-space polynomial `f(p, q)`; its normal symbol
    /// is `f` itself.
    pub fn normal_ordered(mode: Mode, f: &PhasePoly) -> Self {
        let q_op = Self::position(mode);
        let p_op = Self::momentum(mode);
        let mut out = Self::zero(mode);
        for (&(j, k), &c) in &f.terms {
            let mut term = Self::constant(mode, c);
            for _ in 0..j {
                term = term.normal_mul(&p_op);
            }
            for _ in 0..k {
                term = term.normal_mul(&q_op);
            }
            out = out + term;
        }
        out
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn degree(&self) -> u32 {
        self.inner.degree()
    }

    /// Coefficients `(j, k) ↦ c` of `a†^j a^k`.
    pub fn coefficients(&self) -> impl Iterator<Item = ((u32, u32), C64)> + '_ {
        self.inner.terms.iter().map(|(&k, &c)| (k, c))
    }

    pub fn scale(&self, s: impl Into<C64>) -> Self {
        LadderPoly {
            inner: self.inner.scale(s.into()),
            mode: self.mode,
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::constant(self.mode, 1.0), |acc, _| &acc * self)
    }

    /// `:A B:`, the product taken inside normal-ordering colons.
    pub fn normal_mul(&self, other: &Self) -> Self {
        self.check_mode(other);
        LadderPoly {
            inner: self.inner.mul_commutative(&other.inner),
            mode: self.mode,
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.mode);
        for (&(j, k), &c) in &self.inner.terms {
            out.inner.add_term(k, j, c.conj());
        }
        out
    }

    /// True when the coefficients satisfy `c_kj = conj(c_jk)`.
    pub fn is_hermitian(&self) -> bool {
        self.inner.terms.iter().all(|(&(j, k), &c)| {
            let d = self
                .inner
                .terms
                .get(&(k, j))
                .copied()
                .unwrap_or(C64::new(0.0, 0.0));
            (c - d.conj()).norm() <= 1e-12 * (1.0 + c.norm())
        })
    }

    /// Normal symbol `⟨p,q|H|p,q⟩` as a polynomial in `(p, q)`.
    pub fn normal_symbol(&self) -> PhasePoly {
        ladder_to_phase(&self.inner, self.mode)
    }

    /// Anti-normal symbol: the function `h` with `H = ∫ h(p,q) |p,q⟩⟨p,q| dμ`.
    ///
    /// In terms of `α`, the normal symbol is the Gaussian smearing
    /// `exp(∂_α ∂_ᾱ)` of the anti-normal one, so the inverse shuffles the
    /// ladder coefficients: `c'_jk = Σ_r (-1)^r/r! (j+r)!/j! (k+r)!/k! c_{j+r,k+r}`.
    pub fn anti_normal_symbol(&self) -> PhasePoly {
        let mut shuffled = OrderedPoly::zero(C64::new(1.0, 0.0));
        for (&(j, k), &c) in &self.inner.terms {
            for r in 0..=j.min(k) {
                let (j0, k0) = (j - r, k - r);
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                let w = sign / factorial(r)
                    * (factorial(j) / factorial(j0))
                    * (factorial(k) / factorial(k0));
                shuffled.add_term(j0, k0, c * w);
            }
        }
        ladder_to_phase(&shuffled.prune(), self.mode)
    }

    /// The same operator rewritten in `P`-left / `Q`-right order.
    pub fn to_pq(&self) -> PqPoly {
        let m = self.mode.mass;
        let norm = 1.0 / (2.0 * m * self.mode.hbar).sqrt();
        let comm = C64::new(0.0, self.mode.hbar);
        // a† = (mQ − iP)/√(2mħ), a = (mQ + iP)/√(2mħ); generators (L, R) = (P, Q).
        let p_gen = OrderedPoly::monomial(comm, 1, 0, C64::new(1.0, 0.0));
        let q_gen = OrderedPoly::monomial(comm, 0, 1, C64::new(1.0, 0.0));
        let ad = q_gen
            .scale(C64::new(m * norm, 0.0))
            .add(&p_gen.scale(C64::new(0.0, -norm)));
        let a = q_gen
            .scale(C64::new(m * norm, 0.0))
            .add(&p_gen.scale(C64::new(0.0, norm)));
        let mut out = OrderedPoly::zero(comm);
        for (&(j, k), &c) in &self.inner.terms {
            let mut term = OrderedPoly::monomial(comm, 0, 0, c);
            for _ in 0..j {
                term = term.mul(&ad);
            }
            for _ in 0..k {
                term = term.mul(&a);
            }
            out = out.add(&term);
        }
        PqPoly {
            inner: out,
            hbar: self.mode.hbar,
        }
    }

    fn check_mode(&self, other: &Self) {
        assert_eq!(
            self.mode, other.mode,
            "combining operators built for different modes"
        );
    }
}

fn ladder_to_phase(poly: &OrderedPoly, mode: Mode) -> PhasePoly {
    let c = 1.0 / (2.0 * mode.mass * mode.hbar).sqrt();
    // α = c (m q + i p), ᾱ = c (m q − i p)
    let alpha = PhasePoly::from_terms([
        ((0, 1), C64::new(c * mode.mass, 0.0)),
        ((1, 0), C64::new(0.0, c)),
    ]);
    let alpha_bar = PhasePoly::from_terms([
        ((0, 1), C64::new(c * mode.mass, 0.0)),
        ((1, 0), C64::new(0.0, -c)),
    ]);
    let mut out = PhasePoly::zero();
    for (&(j, k), &coef) in &poly.terms {
        let term = alpha_bar.pow(j) * alpha.pow(k);
        out = out + term.scale(coef);
    }
    out
}

impl Add for LadderPoly {
    type Output = LadderPoly;
    fn add(self, rhs: LadderPoly) -> LadderPoly {
        self.check_mode(&rhs);
        LadderPoly {
            inner: self.inner.add(&rhs.inner),
            mode: self.mode,
        }
    }
}

impl Sub for LadderPoly {
    type Output = LadderPoly;
    fn sub(self, rhs: LadderPoly) -> LadderPoly {
        self + rhs.scale(-1.0)
    }
}

impl Neg for LadderPoly {
    type Output = LadderPoly;
    fn neg(self) -> LadderPoly {
        self.scale(-1.0)
    }
}

impl Mul for &LadderPoly {
    type Output = LadderPoly;
    fn mul(self, rhs: &LadderPoly) -> LadderPoly {
        self.check_mode(rhs);
        LadderPoly {
            inner: self.inner.mul(&rhs.inner),
            mode: self.mode,
        }
    }
}

impl Mul for LadderPoly {
    type Output = LadderPoly;
    fn mul(self, rhs: LadderPoly) -> LadderPoly {
        &self * &rhs
    }
}

/// An operator in `P`-left / `Q`-right order, `Σ c_jk P^j Q^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PqPoly {
    inner: OrderedPoly,
    hbar: f64,
}

impl PqPoly {
    /// `H(p;q) = ⟨p|H|q⟩ / ⟨p|q⟩`.
    pub fn mixed_symbol(&self, p: f64, q: f64) -> C64 {
        self.inner
            .terms
            .iter()
            .map(|(&(j, k), &c)| c * p.powi(j as i32) * q.powi(k as i32))
            .sum()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Coefficients `(j, k) ↦ c` of `P^j Q^k`.
    pub fn coefficients(&self) -> impl Iterator<Item = ((u32, u32), C64)> + '_ {
        self.inner.terms.iter().map(|(&k, &c)| (k, c))
    }
}

/// Commutative polynomial `Σ c_jk p^j q^k` in the phase-space labels.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhasePoly {
    terms: BTreeMap<(u32, u32), C64>,
}

impl PhasePoly {
    pub fn zero() -> Self {
        PhasePoly::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms([((0, 0), C64::new(c, 0.0))])
    }

    /// `c p^j q^k`.
    pub fn monomial(j: u32, k: u32, c: f64) -> Self {
        Self::from_terms([((j, k), C64::new(c, 0.0))])
    }

    pub fn p() -> Self {
        Self::monomial(1, 0, 1.0)
    }

    pub fn q() -> Self {
        Self::monomial(0, 1, 1.0)
    }

    /// `½ (p² + m² q²)`.
    pub fn oscillator(mass: f64) -> Self {
        Self::monomial(2, 0, 0.5) + Self::monomial(0, 2, 0.5 * mass * mass)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ((u32, u32), C64)>) -> Self {
        let mut out = PhasePoly::zero();
        for ((j, k), c) in terms {
            *out.terms.entry((j, k)).or_insert(C64::new(0.0, 0.0)) += c;
        }
        out.prune()
    }

    fn prune(mut self) -> Self {
        self.terms.retain(|_, c| c.norm() > 1e-300);
        self
    }

    pub fn coefficients(&self) -> impl Iterator<Item = ((u32, u32), C64)> + '_ {
        self.terms.iter().map(|(&k, &c)| (k, c))
    }

    pub fn coefficient(&self, j: u32, k: u32) -> C64 {
        self.terms
            .get(&(j, k))
            .copied()
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn eval(&self, p: f64, q: f64) -> C64 {
        self.terms
            .iter()
            .map(|(&(j, k), &c)| c * p.powi(j as i32) * q.powi(k as i32))
            .sum()
    }

    /// Real part of [`PhasePoly::eval`]; symbols of hermitian operators are real.
    pub fn eval_re(&self, p: f64, q: f64) -> f64 {
        self.eval(p, q).re
    }

    /// `(∂f/∂p, ∂f/∂q)`.
    pub fn gradient(&self) -> (PhasePoly, PhasePoly) {
        let dp = PhasePoly::from_terms(
            self.terms
                .iter()
                .filter(|(&(j, _), _)| j > 0)
                .map(|(&(j, k), &c)| ((j - 1, k), c * f64::from(j))),
        );
        let dq = PhasePoly::from_terms(
            self.terms
                .iter()
                .filter(|(&(_, k), _)| k > 0)
                .map(|(&(j, k), &c)| ((j, k - 1), c * f64::from(k))),
        );
        (dp, dq)
    }

    pub fn is_real(&self) -> bool {
        self.terms
            .values()
            .all(|c| c.im.abs() <= 1e-12 * (1.0 + c.re.abs()))
    }

    /// True when no term depends on `q`.
    pub fn is_q_independent(&self) -> bool {
        self.terms.keys().all(|&(_, k)| k == 0)
    }

    /// True when `f(p,q) = T(p) + V(q)`.
    pub fn is_separable(&self) -> bool {
        self.terms.keys().all(|&(j, k)| j == 0 || k == 0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|&(j, k)| j + k).max().unwrap_or(0)
    }

    pub fn scale(&self, s: impl Into<C64>) -> Self {
        let s = s.into();
        PhasePoly::from_terms(self.terms.iter().map(|(&k, &c)| (k, c * s)))
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(PhasePoly::constant(1.0), |acc, _| acc * self.clone())
    }

    /// Substitute `p → a p + b q`, `q → c p + d q` (a linear change of
    /// variables), returning the composed polynomial.
    pub fn compose_linear(&self, a: f64, b: f64, c: f64, d: f64) -> Self {
        let new_p = PhasePoly::monomial(1, 0, a) + PhasePoly::monomial(0, 1, b);
        let new_q = PhasePoly::monomial(1, 0, c) + PhasePoly::monomial(0, 1, d);
        let mut out = PhasePoly::zero();
        for (&(j, k), &coef) in &self.terms {
            out = out + (new_p.pow(j) * new_q.pow(k)).scale(coef);
        }
        out
    }

    /// Substitute `p → p + dp`, `q → q + dq`.
    pub fn shift(&self, dp: f64, dq: f64) -> Self {
        let new_p = PhasePoly::p() + PhasePoly::constant(dp);
        let new_q = PhasePoly::q() + PhasePoly::constant(dq);
        let mut out = PhasePoly::zero();
        for (&(j, k), &coef) in &self.terms {
            out = out + (new_p.pow(j) * new_q.pow(k)).scale(coef);
        }
        out
    }
}

impl Add for PhasePoly {
    type Output = PhasePoly;
    fn add(self, rhs: PhasePoly) -> PhasePoly {
        PhasePoly::from_terms(self.terms.into_iter().chain(rhs.terms))
    }
}

impl Sub for PhasePoly {
    type Output = PhasePoly;
    fn sub(self, rhs: PhasePoly) -> PhasePoly {
        self + rhs.scale(-1.0)
    }
}

impl Mul for PhasePoly {
    type Output = PhasePoly;
    fn mul(self, rhs: PhasePoly) -> PhasePoly {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (&(i, j), &c1) in &self.terms {
            for (&(k, l), &c2) in &rhs.terms {
                terms.push(((i + k, j + l), c1 * c2));
            }
        }
        PhasePoly::from_terms(terms)
    }
}

impl fmt::Display for PhasePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(j, k), &c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({})", c)?;
            }
            match j {
                0 => {}
                1 => write!(f, "·p")?,
                _ => write!(f, "·p^{j}")?,
            }
            match k {
                0 => {}
                1 => write!(f, "·q")?,
                _ => write!(f, "·q^{k}")?,
            }
        }
        Ok(())
    }
}
