//! Coherent-state propagator as a limit of Wiener-regularized path integrals.
//!
//! For diffusion constant `ν` the phase-plane paths are pinned Brownian
//! bridges with per-coordinate variance `νħ` per unit time, and
//!
//! ```text
//! K_ν = 2πħ · e^{νT/2} · W_T(z″ − z′) · E_bridge[ e^{(i/ħ)∫(p dq − H dt)} ]
//! ```
//!
//! where `W_T` is the total mass of the pinned measure (the heat kernel).
//! `K_ν → ⟨z″|e^{-iĤT/ħ}|z′⟩` as `ν → ∞` when `H` is the anti-normal symbol.
//!
//! On a lattice of `M` steps the lowest Landau level decays per step by
//! `1/(1 + ν dt/2)` rather than `e^{-ν dt/2}`, so the default prefactor is
//! `(1 + ν dt/2)^M`; [`Prefactor::Continuum`] keeps `e^{νT/2}`.
//!
//! When the symbol does not depend on `q` the `q` bridge enters the weight
//! only through a Gaussian linear form and is integrated exactly
//! ([`Estimator::Conditional`]). This is what makes large `ν` tractable.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fock::{PhasePoint, PhasePoly};
use crate::{Error, Result, C64};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Samples per independent random stream.
pub const CHUNK: usize = 4096;

/// A phase-space function evaluated at path midpoints.
pub trait PhaseSymbol: Sync {
    fn value(&self, p: f64, q: f64) -> C64;

    fn q_independent(&self) -> bool {
        false
    }
}

impl PhaseSymbol for PhasePoly {
    fn value(&self, p: f64, q: f64) -> C64 {
        self.eval(p, q)
    }

    fn q_independent(&self) -> bool {
        self.is_q_independent()
    }
}

/// Wraps a closure as a symbol.
pub struct FnSymbol<F>(pub F);

impl<F: Fn(f64, f64) -> C64 + Sync> PhaseSymbol for FnSymbol<F> {
    fn value(&self, p: f64, q: f64) -> C64 {
        (self.0)(p, q)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Conditional when the symbol allows it, naive otherwise.
    #[default]
    Auto,
    Naive,
    Conditional,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prefactor {
    /// `(1 + ν dt/2)^M`, exact for the lowest Landau level of the lattice.
    #[default]
    Lattice,
    /// `e^{νT/2}`.
    Continuum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WienerConfig {
    pub nu: f64,
    pub steps: usize,
    pub samples: usize,
    pub seed: u64,
    pub start: PhasePoint,
    pub end: PhasePoint,
    pub total_time: f64,
    pub hbar: f64,
    pub estimator: Estimator,
    pub prefactor: Prefactor,
    /// Results with `stderr/|value|` above this are flagged.
    pub max_relative_error: f64,
}

impl WienerConfig {
    pub fn new(
        nu: f64,
        steps: usize,
        samples: usize,
        start: PhasePoint,
        end: PhasePoint,
        total_time: f64,
    ) -> Self {
        WienerConfig {
            nu,
            steps,
            samples,
            seed: 0,
            start,
            end,
            total_time,
            hbar: 1.0,
            estimator: Estimator::Auto,
            prefactor: Prefactor::Lattice,
            max_relative_error: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::param("nu", format!("must be > 0, got {}", self.nu)));
        }
        if self.steps == 0 {
            return Err(Error::param("steps", "must be > 0"));
        }
        if self.samples < 2 {
            return Err(Error::param(
                "samples",
                format!("need at least 2, got {}", self.samples),
            ));
        }
        if !(self.total_time > 0.0 && self.total_time.is_finite()) {
            return Err(Error::param(
                "T",
                format!("must be > 0, got {}", self.total_time),
            ));
        }
        crate::fock::check_hbar(self.hbar)?;
        if !self.start.is_finite() || !self.end.is_finite() {
            return Err(Error::param("endpoints", "must be finite"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.steps as f64
    }

    /// Per-coordinate diffusion `νħ`.
    pub fn diffusion(&self) -> f64 {
        self.nu * self.hbar
    }

    pub fn prefactor_value(&self) -> f64 {
        match self.prefactor {
            Prefactor::Lattice => (1.0 + 0.5 * self.nu * self.dt()).powi(self.steps as i32),
            Prefactor::Continuum => (0.5 * self.nu * self.total_time).exp(),
        }
    }

    /// Total mass of the pinned measure, `(2πνħT)^{-1} e^{-|Δz|²/2νħT}`.
    pub fn bridge_mass(&self) -> f64 {
        let var = self.diffusion() * self.total_time;
        (-self.start.dist2(&self.end) / (2.0 * var)).exp() / (TAU * var)
    }

    /// `2πħ · prefactor · bridge mass`, the constant multiplying every weight.
    pub fn normalization(&self) -> f64 {
        TAU * self.hbar * self.prefactor_value() * self.bridge_mass()
    }

    /// Random stream for chunk `index`, independent of how chunks are scheduled.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgePath {
    pub points: Vec<PhasePoint>,
    pub dt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: C64,
    pub stderr: f64,
    pub samples: usize,
    pub nu: f64,
    pub steps: usize,
    pub low_confidence: bool,
}

impl EstimateWithError {
    pub fn relative_error(&self) -> f64 {
        self.stderr / self.value.norm()
    }
}

/// One coordinate of a Brownian bridge from `a` to `b`, written into `out`
/// (length `steps + 1`): `x_k = a + (k/M)(b − a) + W_k − (k/M) W_M`.
fn bridge_into<R: Rng>(rng: &mut R, a: f64, b: f64, sd: f64, out: &mut [f64]) {
    let m = out.len() - 1;
    let mut w = 0.0;
    out[0] = 0.0;
    for slot in out.iter_mut().skip(1) {
        let z: f64 = rng.sample(StandardNormal);
        w += sd * z;
        *slot = w;
    }
    let total = out[m];
    for (k, x) in out.iter_mut().enumerate() {
        let s = k as f64 / m as f64;
        *x = a + s * (b - a) + *x - s * total;
    }
    out[0] = a;
    out[m] = b;
}

/// A pinned bridge from `cfg.start` to `cfg.end` with independent `p` and `q`
/// coordinates of diffusion `νħ`.
pub fn sample_pinned_bridge<R: Rng>(cfg: &WienerConfig, rng: &mut R) -> BridgePath {
    let m = cfg.steps;
    let sd = (cfg.diffusion() * cfg.dt()).sqrt();
    let mut ps = vec![0.0; m + 1];
    let mut qs = vec![0.0; m + 1];
    bridge_into(rng, cfg.start.p, cfg.end.p, sd, &mut ps);
    bridge_into(rng, cfg.start.q, cfg.end.q, sd, &mut qs);
    BridgePath {
        points: ps
            .into_iter()
            .zip(qs)
            .map(|(p, q)| PhasePoint::new(p, q))
            .collect(),
        dt: cfg.dt(),
    }
}

fn action_exponent(ps: &[f64], qs: &[f64], dt: f64, hbar: f64, h: &dyn PhaseSymbol) -> C64 {
    let mut pdq = 0.0;
    let mut hsum = C64::new(0.0, 0.0);
    for k in 0..ps.len() - 1 {
        let pm = 0.5 * (ps[k] + ps[k + 1]);
        let qm = 0.5 * (qs[k] + qs[k + 1]);
        pdq += pm * (qs[k + 1] - qs[k]);
        hsum += h.value(pm, qm);
    }
    C64::new(0.0, 1.0 / hbar) * (C64::new(pdq, 0.0) - hsum * dt)
}

/// `(i/ħ)[Σ p̄_k Δq_k − Σ H(p̄_k, q̄_k) dt]` with midpoints `p̄_k, q̄_k`.
pub fn stratonovich_action(path: &BridgePath, h: &dyn PhaseSymbol, hbar: f64) -> C64 {
    let ps: Vec<f64> = path.points.iter().map(|z| z.p).collect();
    let qs: Vec<f64> = path.points.iter().map(|z| z.q).collect();
    action_exponent(&ps, &qs, path.dt, hbar, h)
}

/// Log-weight after integrating the `q` bridge exactly given the `p` path:
/// `i Δq c̄ − ½ νħ T var(c) − (i/ħ) Σ H(p̄_k) dt` with `c_k = p̄_k/ħ`.
fn conditional_exponent(ps: &[f64], dq_total: f64, cfg: &WienerConfig, h: &dyn PhaseSymbol) -> C64 {
    let m = ps.len() - 1;
    let dt = cfg.dt();
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut hsum = C64::new(0.0, 0.0);
    for k in 0..m {
        let pm = 0.5 * (ps[k] + ps[k + 1]);
        let c = pm / cfg.hbar;
        sum += c;
        sum2 += c * c;
        hsum += h.value(pm, 0.0);
    }
    let mean = sum / m as f64;
    let var = (sum2 / m as f64 - mean * mean).max(0.0);
    C64::new(
        -0.5 * cfg.diffusion() * cfg.total_time * var,
        dq_total * mean,
    ) - C64::new(0.0, dt / cfg.hbar) * hsum
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: usize,
    sum: C64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, w: C64) {
        self.n += 1;
        self.sum += w;
        self.sum_sq += w.norm_sqr();
    }

    fn merge(self, other: Moments) -> Moments {
        Moments {
            n: self.n + other.n,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }
}

fn run_chunk(cfg: &WienerConfig, h: &dyn PhaseSymbol, conditional: bool, index: usize) -> Moments {
    let mut rng = cfg.stream(index as u64);
    let count = CHUNK.min(cfg.samples - index * CHUNK);
    let sd = (cfg.diffusion() * cfg.dt()).sqrt();
    let mut ps = vec![0.0; cfg.steps + 1];
    let mut qs = vec![0.0; cfg.steps + 1];
    let dq_total = cfg.end.q - cfg.start.q;
    let mut acc = Moments::default();
    for _ in 0..count {
        bridge_into(&mut rng, cfg.start.p, cfg.end.p, sd, &mut ps);
        let expo = if conditional {
            conditional_exponent(&ps, dq_total, cfg, h)
        } else {
            bridge_into(&mut rng, cfg.start.q, cfg.end.q, sd, &mut qs);
            action_exponent(&ps, &qs, cfg.dt(), cfg.hbar, h)
        };
        acc.push(expo.exp());
    }
    acc
}

/// Monte Carlo estimate of `K_ν`. Chunks of [`CHUNK`] samples each draw from
/// their own stream and are reduced in index order, so the result does not
/// depend on the number of worker threads.
pub fn wiener_propagator_mc(cfg: &WienerConfig, h: &dyn PhaseSymbol) -> Result<EstimateWithError> {
    cfg.validate()?;
    let conditional = match cfg.estimator {
        Estimator::Naive => false,
        Estimator::Auto => h.q_independent(),
        Estimator::Conditional => {
            if !h.q_independent() {
                return Err(Error::Config(
                    "the conditional estimator needs a q-independent symbol".into(),
                ));
            }
            true
        }
    };
    let chunks = cfg.samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|i| run_chunk(cfg, h, conditional, i))
        .collect();
    let m = parts.into_iter().fold(Moments::default(), Moments::merge);
    let n = m.n as f64;
    let mean = m.sum / n;
    let var = ((m.sum_sq / n - mean.norm_sqr()) * n / (n - 1.0)).max(0.0);
    let norm = cfg.normalization();
    let value = mean * norm;
    let stderr = (var / n).sqrt() * norm;
    Ok(EstimateWithError {
        value,
        stderr,
        samples: m.n,
        nu: cfg.nu,
        steps: cfg.steps,
        low_confidence: !(stderr <= cfg.max_relative_error * value.norm()),
    })
}

/// Model for the approach of `K_ν` to its limit.
///
/// Without a Hamiltonian the regularized kernel is a sum over Landau levels
/// weighted by `e^{-nνT}`, so [`Ansatz::LandauGap`] is exact up to the next
/// level. A Hamiltonian mixes the levels and adds corrections in `1/ν`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Ansatz {
    /// `a + b/ν`.
    #[default]
    InverseNu,
    /// `a + c e^{-νT}`.
    LandauGap { total_time: f64 },
    /// `a + b/ν + c e^{-νT}`.
    Mixed { total_time: f64 },
}

impl Ansatz {
    fn basis(&self, nu: f64) -> Vec<f64> {
        match *self {
            Ansatz::InverseNu => vec![1.0, 1.0 / nu],
            Ansatz::LandauGap { total_time } => vec![1.0, (-nu * total_time).exp()],
            Ansatz::Mixed { total_time } => vec![1.0, 1.0 / nu, (-nu * total_time).exp()],
        }
    }

    fn parameters(&self) -> usize {
        self.basis(1.0).len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub ansatz: Ansatz,
    /// The `ν → ∞` limit `a`.
    pub value: C64,
    /// Remaining fit coefficients in the order of the ansatz.
    pub coefficients: Vec<C64>,
    /// Standard error of `a` propagated from the input standard errors.
    pub statistical_error: f64,
    /// Extra spread implied by a poor fit, `stat · √max(0, χ²/dof − 1)`.
    pub fit_error: f64,
    /// `χ²` per degree of freedom (two real components per estimate).
    pub chi2_per_dof: f64,
    pub reliable: bool,
}

impl Extrapolation {
    pub fn combined_error(&self) -> f64 {
        self.statistical_error.hypot(self.fit_error)
    }
}

/// Weighted least-squares fit of `a + b/ν` to estimates at increasing `ν`.
pub fn nu_extrapolate(estimates: &[EstimateWithError]) -> Result<Extrapolation> {
    nu_extrapolate_with(estimates, Ansatz::InverseNu)
}

/// Weighted least-squares fit of `ansatz`, weights `1/stderr²` (uniform
/// when any standard error is zero).
pub fn nu_extrapolate_with(
    estimates: &[EstimateWithError],
    ansatz: Ansatz,
) -> Result<Extrapolation> {
    let k = ansatz.parameters();
    if estimates.len() < 3 || estimates.len() < k {
        return Err(Error::Config(format!(
            "extrapolation needs at least {} estimates, got {}",
            k.max(3),
            estimates.len()
        )));
    }
    if estimates.windows(2).any(|w| !(w[0].nu < w[1].nu)) {
        return Err(Error::Config(
            "estimates must have strictly increasing nu".into(),
        ));
    }
    let weighted = estimates.iter().all(|e| e.stderr > 0.0);
    let w: Vec<f64> = estimates
        .iter()
        .map(|e| {
            if weighted {
                1.0 / (e.stderr * e.stderr)
            } else {
                1.0
            }
        })
        .collect();
    let x = DMatrix::from_fn(estimates.len(), k, |i, j| ansatz.basis(estimates[i].nu)[j]);
    let mut normal = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DMatrix::<C64>::zeros(k, 1);
    for (i, e) in estimates.iter().enumerate() {
        for a in 0..k {
            rhs[(a, 0)] += e.value * (w[i] * x[(i, a)]);
            for b in 0..k {
                normal[(a, b)] += w[i] * x[(i, a)] * x[(i, b)];
            }
        }
    }
    let cov = normal
        .try_inverse()
        .ok_or_else(|| Error::Config("extrapolation design is singular".into()))?;
    let cov_c = cov.map(|v| C64::new(v, 0.0));
    let beta = &cov_c * rhs;
    let chi2: f64 = estimates
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let model: C64 = (0..k).map(|a| beta[(a, 0)] * x[(i, a)]).sum();
            w[i] * (e.value - model).norm_sqr()
        })
        .sum();
    let dof = 2 * (estimates.len() - k);
    // stderr is the error of the complex mean; each component carries about
    // 1/√2 of it.
    let chi2_per_dof = if weighted && dof > 0 {
        2.0 * chi2 / dof as f64
    } else {
        0.0
    };
    let statistical_error = if weighted { cov[(0, 0)].sqrt() } else { 0.0 };
    let fit_error = statistical_error * (chi2_per_dof - 1.0).max(0.0).sqrt();
    let reliable = chi2_per_dof <= 4.0 && estimates.iter().all(|e| !e.low_confidence);
    Ok(Extrapolation {
        ansatz,
        value: beta[(0, 0)],
        coefficients: (1..k).map(|a| beta[(a, 0)]).collect(),
        statistical_error,
        fit_error,
        chi2_per_dof,
        reliable,
    })
}

/// An orientation-preserving isometry of the phase plane,
/// `(p̄, q̄) = R(θ)(p, q) + (a, b)` with
/// `p̄ = p cos θ − q sin θ`, `q̄ = p sin θ + q cos θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalMap {
    pub angle: f64,
    pub shift_p: f64,
    pub shift_q: f64,
}

impl CanonicalMap {
    pub fn identity() -> Self {
        CanonicalMap {
            angle: 0.0,
            shift_p: 0.0,
            shift_q: 0.0,
        }
    }

    pub fn rotation(angle: f64) -> Self {
        CanonicalMap {
            angle,
            ..Self::identity()
        }
    }

    /// The quarter turn `(p̄, q̄) = (−q, p)`.
    pub fn quarter_turn() -> Self {
        Self::rotation(std::f64::consts::FRAC_PI_2)
    }

    pub fn translation(shift_p: f64, shift_q: f64) -> Self {
        CanonicalMap {
            angle: 0.0,
            shift_p,
            shift_q,
        }
    }

    /// Accepts `(p̄, q̄) = A(p, q) + t` only when `A` is a rotation.
    pub fn affine(a: [[f64; 2]; 2], shift_p: f64, shift_q: f64) -> Result<Self> {
        let [[a11, a12], [a21, a22]] = a;
        let det = a11 * a22 - a12 * a21;
        let orth = (a11 * a11 + a21 * a21 - 1.0).abs()
            + (a12 * a12 + a22 * a22 - 1.0).abs()
            + (a11 * a12 + a21 * a22).abs();
        if orth > 1e-12 || (det - 1.0).abs() > 1e-12 {
            return Err(Error::UnsupportedMap(format!(
                "only rotations and translations of the phase plane are supported (det = {det:.6}, orthogonality defect = {orth:.3e})"
            )));
        }
        Ok(CanonicalMap {
            angle: a21.atan2(a11),
            shift_p,
            shift_q,
        })
    }

    pub fn forward(&self, z: PhasePoint) -> PhasePoint {
        let (s, c) = self.angle.sin_cos();
        PhasePoint::new(
            z.p * c - z.q * s + self.shift_p,
            z.p * s + z.q * c + self.shift_q,
        )
    }

    pub fn inverse(&self, zb: PhasePoint) -> PhasePoint {
        let (s, c) = self.angle.sin_cos();
        let (x, y) = (zb.p - self.shift_p, zb.q - self.shift_q);
        PhasePoint::new(x * c + y * s, -x * s + y * c)
    }

    /// `Ḡ(p̄, q̄)` with `p dq = p̄ dq̄ + dḠ`.
    pub fn generator(&self, zb: PhasePoint) -> f64 {
        let (s, c) = self.angle.sin_cos();
        let (x, y) = (zb.p - self.shift_p, zb.q - self.shift_q);
        -s * s * x * y + 0.5 * s * c * (y * y - x * x) - self.shift_p * zb.q
    }

    /// `H̄(p̄, q̄) = H(p, q)` for polynomial symbols.
    pub fn transform_symbol(&self, h: &PhasePoly) -> PhasePoly {
        let (s, c) = self.angle.sin_cos();
        h.compose_linear(c, s, -s, c)
            .shift(-self.shift_p, -self.shift_q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceResult {
    pub original: EstimateWithError,
    /// Barred-coordinate estimate including `e^{(i/ħ)[Ḡ(end) − Ḡ(start)]}`.
    pub transformed: EstimateWithError,
    pub discrepancy: f64,
    pub combined_stderr: f64,
}

/// Estimates the propagator in the original and in the barred coordinates.
pub fn covariance_check(
    map: &CanonicalMap,
    cfg: &WienerConfig,
    h: &PhasePoly,
) -> Result<CovarianceResult> {
    let original = wiener_propagator_mc(cfg, h)?;
    let mut barred = *cfg;
    barred.start = map.forward(cfg.start);
    barred.end = map.forward(cfg.end);
    let hb = map.transform_symbol(h);
    let mut transformed = wiener_propagator_mc(&barred, &hb)?;
    let dg = map.generator(barred.end) - map.generator(barred.start);
    transformed.value *= C64::from_polar(1.0, dg / cfg.hbar);
    Ok(CovarianceResult {
        discrepancy: (original.value - transformed.value).norm(),
        combined_stderr: original.stderr.hypot(transformed.stderr),
        original,
        transformed,
    })
}
