//! Classical dynamics as the coherent-state restriction of quantum dynamics.
//!
//! [`hamilton_flow`] integrates Hamilton's equations for a phase-space
//! symbol, [`ehrenfest_trajectory`] follows the mean values of the exact
//! truncated evolution, and [`compare_classical_quantum`] puts the two side by
//! side using the normal symbol of the operator.

use serde::{Deserialize, Serialize};

use crate::fock::{Evolution, FockSpace, LadderPoly, PhasePoint, PhasePoly};
use crate::{Error, Result};

/// A real phase-space function with a gradient.
pub trait ClassicalSymbol {
    fn energy(&self, p: f64, q: f64) -> f64;

    /// `(∂H/∂p, ∂H/∂q)`; central differences by default.
    fn gradient(&self, p: f64, q: f64) -> (f64, f64) {
        let step = |x: f64| f64::EPSILON.cbrt() * x.abs().max(1.0);
        let (hp, hq) = (step(p), step(q));
        (
            (self.energy(p + hp, q) - self.energy(p - hp, q)) / (2.0 * hp),
            (self.energy(p, q + hq) - self.energy(p, q - hq)) / (2.0 * hq),
        )
    }

    /// True when `H = T(p) + V(q)`, which allows the explicit splitting.
    fn separable(&self) -> bool {
        false
    }
}

impl ClassicalSymbol for PhasePoly {
    fn energy(&self, p: f64, q: f64) -> f64 {
        self.eval_re(p, q)
    }

    fn gradient(&self, p: f64, q: f64) -> (f64, f64) {
        let (dp, dq) = PhasePoly::gradient(self);
        (dp.eval_re(p, q), dq.eval_re(p, q))
    }

    fn separable(&self) -> bool {
        self.is_separable()
    }
}

/// Wraps a closure; gradients by central differences.
pub struct FnClassical<F>(pub F);

impl<F: Fn(f64, f64) -> f64> ClassicalSymbol for FnClassical<F> {
    fn energy(&self, p: f64, q: f64) -> f64 {
        (self.0)(p, q)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub energy: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end(&self) -> PhasePoint {
        *self.points.last().expect("trajectory has a start point")
    }

    /// `max_t |E(t) − E(0)|`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy
            .iter()
            .map(|e| (e - e0).abs())
            .fold(0.0, f64::max)
    }
}

/// `Σ [p̄_k Δq_k − H(p̄_k, q̄_k) Δt_k]` over consecutive points.
pub fn restricted_action(traj: &Trajectory, h: &dyn ClassicalSymbol) -> f64 {
    traj.points
        .windows(2)
        .zip(traj.times.windows(2))
        .map(|(z, t)| {
            let pm = 0.5 * (z[0].p + z[1].p);
            let qm = 0.5 * (z[0].q + z[1].q);
            pm * (z[1].q - z[0].q) - h.energy(pm, qm) * (t[1] - t[0])
        })
        .sum()
}

fn checked_gradient(h: &dyn ClassicalSymbol, p: f64, q: f64) -> Result<(f64, f64)> {
    let g = h.gradient(p, q);
    if g.0.is_finite() && g.1.is_finite() {
        Ok(g)
    } else {
        Err(Error::Gradient { p, q })
    }
}

/// Position-Verlet step for separable symbols.
fn verlet_step(h: &dyn ClassicalSymbol, z: PhasePoint, dt: f64) -> Result<PhasePoint> {
    let (dp, _) = checked_gradient(h, z.p, z.q)?;
    let q_half = z.q + 0.5 * dt * dp;
    let (_, dq) = checked_gradient(h, z.p, q_half)?;
    let p = z.p - dt * dq;
    let (dp, _) = checked_gradient(h, p, q_half)?;
    Ok(PhasePoint::new(p, q_half + 0.5 * dt * dp))
}

/// Implicit midpoint step solved by fixed-point iteration.
fn midpoint_step(h: &dyn ClassicalSymbol, z: PhasePoint, dt: f64) -> Result<PhasePoint> {
    let (dp, dq) = checked_gradient(h, z.p, z.q)?;
    let mut next = PhasePoint::new(z.p - dt * dq, z.q + dt * dp);
    let mut change = f64::INFINITY;
    for _ in 0..100 {
        let (pm, qm) = (0.5 * (z.p + next.p), 0.5 * (z.q + next.q));
        let (dp, dq) = checked_gradient(h, pm, qm)?;
        let candidate = PhasePoint::new(z.p - dt * dq, z.q + dt * dp);
        change = candidate.dist2(&next).sqrt();
        next = candidate;
        if change <= 1e-15 * (1.0 + next.p.abs() + next.q.abs()) {
            return Ok(next);
        }
    }
    // finite-difference gradients stall at their own noise level
    if change <= 1e-9 * (1.0 + next.p.abs() + next.q.abs()) {
        return Ok(next);
    }
    Err(Error::Gradient {
        p: next.p,
        q: next.q,
    })
}

// Fourth-order symmetric composition of a symmetric second-order step.
const YOSHIDA_OUTER: f64 = 1.351_207_191_959_657_8;
const YOSHIDA_INNER: f64 = -1.702_414_383_919_315_3;

fn step(h: &dyn ClassicalSymbol, z: PhasePoint, dt: f64) -> Result<PhasePoint> {
    let base = if h.separable() {
        verlet_step
    } else {
        midpoint_step
    };
    let z = base(h, z, YOSHIDA_OUTER * dt)?;
    let z = base(h, z, YOSHIDA_INNER * dt)?;
    base(h, z, YOSHIDA_OUTER * dt)
}

/// Number of steps and the adjusted step so that they tile `|T|` exactly.
fn tiling(total_time: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    if !total_time.is_finite() {
        return Err(Error::param("T", "must be finite"));
    }
    let n = (total_time.abs() / dt).round().max(1.0) as usize;
    Ok((n, total_time / n as f64))
}

/// Symplectic fourth-order integration of `q̇ = ∂H/∂p`, `ṗ = −∂H/∂q`.
/// Negative `T` integrates backwards. The step is adjusted so that an
/// integer number of steps covers `T`.
pub fn hamilton_flow(
    h: &dyn ClassicalSymbol,
    start: PhasePoint,
    total_time: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !start.is_finite() {
        return Err(Error::param("start", "must be finite"));
    }
    let (n, signed_dt) = tiling(total_time, dt)?;
    let mut traj = Trajectory {
        times: Vec::with_capacity(n + 1),
        points: Vec::with_capacity(n + 1),
        energy: Vec::with_capacity(n + 1),
    };
    let mut z = start;
    for k in 0..=n {
        if k > 0 {
            z = step(h, z, signed_dt)?;
        }
        traj.times.push(k as f64 * signed_dt);
        traj.points.push(z);
        traj.energy.push(h.energy(z.p, z.q));
    }
    Ok(traj)
}

/// Upper levels watched for leakage during evolution.
fn tail_window(dim: usize) -> usize {
    (dim / 8).max(1)
}

/// Leakage into the watched levels that aborts an evolution.
pub const LEAKAGE_TOLERANCE: f64 = 1e-8;

/// Mean values `(⟨P⟩, ⟨Q⟩)` of `e^{-iĤt/ħ}|start⟩` on `dim` levels, with
/// `⟨Ĥ⟩` as the energy series.
pub fn ehrenfest_trajectory(
    h: &LadderPoly,
    start: PhasePoint,
    total_time: f64,
    dt: f64,
    dim: usize,
) -> Result<Trajectory> {
    let (n, signed_dt) = tiling(total_time, dt)?;
    let space = FockSpace::new(dim, h.mode())?;
    let op = space.operator(h);
    let evo = Evolution::new(&op)?;
    let psi0 = space.coherent_state(start)?;
    let (qop, pop) = (space.position(), space.momentum());
    let watch = tail_window(dim);
    let mut traj = Trajectory {
        times: Vec::with_capacity(n + 1),
        points: Vec::with_capacity(n + 1),
        energy: Vec::with_capacity(n + 1),
    };
    for k in 0..=n {
        let t = k as f64 * signed_dt;
        let psi = evo.evolve(&psi0, t);
        let tail = psi.tail_mass(dim - watch);
        if tail > LEAKAGE_TOLERANCE {
            return Err(Error::Truncation {
                dim,
                tail,
                suggested: 2 * dim,
            });
        }
        traj.times.push(t);
        traj.points.push(PhasePoint::new(
            pop.expectation(&psi).re,
            qop.expectation(&psi).re,
        ));
        traj.energy.push(op.expectation(&psi).re);
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub max_deviation: f64,
    pub rms_deviation: f64,
    pub classical: Trajectory,
    pub quantum: Trajectory,
}

/// Ehrenfest means against the flow of the normal symbol `⟨p,q|Ĥ|p,q⟩`.
pub fn compare_classical_quantum(
    h: &LadderPoly,
    start: PhasePoint,
    total_time: f64,
    dt: f64,
    dim: usize,
) -> Result<DeviationReport> {
    let symbol = h.normal_symbol();
    let classical = hamilton_flow(&symbol, start, total_time, dt)?;
    let quantum = ehrenfest_trajectory(h, start, total_time, dt, dim)?;
    let dev: Vec<f64> = classical
        .points
        .iter()
        .zip(&quantum.points)
        .map(|(a, b)| a.dist2(b).sqrt())
        .collect();
    let max_deviation = dev.iter().copied().fold(0.0, f64::max);
    let rms_deviation = (dev.iter().map(|d| d * d).sum::<f64>() / dev.len() as f64).sqrt();
    Ok(DeviationReport {
        max_deviation,
        rms_deviation,
        classical,
        quantum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Mode;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn oscillator() -> PhasePoly {
        PhasePoly::oscillator(1.0)
    }

    #[test]
    fn quarter_period_rotation() {
        let t = hamilton_flow(&oscillator(), PhasePoint::new(0.0, 1.0), FRAC_PI_2, 1e-4).unwrap();
        let end = t.end();
        assert!((end.p + 1.0).abs() < 1e-6 && end.q.abs() < 1e-6, "{end:?}");
        assert_eq!(t.len(), 15709);
    }

    #[test]
    fn momentum_conserved_without_q() {
        let h = PhasePoly::p().pow(2).scale(0.5) + PhasePoly::p().pow(4).scale(0.1);
        let t = hamilton_flow(&h, PhasePoint::new(0.7, -1.0), 3.0, 0.01).unwrap();
        assert!(t.points.iter().all(|z| z.p == 0.7));
        // and through the implicit branch
        let wrapped = FnClassical(|p: f64, _q: f64| 0.5 * p * p);
        let t = hamilton_flow(&wrapped, PhasePoint::new(0.7, -1.0), 3.0, 0.01).unwrap();
        assert!(t.points.iter().all(|z| z.p == 0.7));
    }

    #[test]
    fn quartic_energy_conservation() {
        let h = oscillator() + PhasePoly::monomial(0, 4, 0.1);
        let t = hamilton_flow(&h, PhasePoint::new(0.0, 1.0), 10.0, 1e-3).unwrap();
        assert!(
            t.energy_drift() / t.energy[0] <= 1e-8,
            "{}",
            t.energy_drift()
        );
    }

    #[test]
    fn energy_error_scales_with_step() {
        let h = oscillator() + PhasePoly::monomial(0, 4, 0.1);
        let drift = |dt| {
            hamilton_flow(&h, PhasePoint::new(0.3, 1.2), 5.0, dt)
                .unwrap()
                .energy_drift()
        };
        let ratio = drift(0.04) / drift(0.02);
        // fourth order
        assert!(ratio > 10.0, "{ratio}");
    }

    #[test]
    fn non_separable_flow_conserves_energy() {
        let h = oscillator() + PhasePoly::monomial(2, 2, 0.05);
        assert!(!h.is_separable());
        let t = hamilton_flow(&h, PhasePoint::new(0.5, 0.8), 10.0, 1e-3).unwrap();
        assert!(t.energy_drift() <= 1e-10, "{}", t.energy_drift());
        let fd = FnClassical(|p: f64, q: f64| h.eval_re(p, q));
        let t2 = hamilton_flow(&fd, PhasePoint::new(0.5, 0.8), 10.0, 1e-3).unwrap();
        assert!(t.end().dist2(&t2.end()).sqrt() < 1e-7);
    }

    #[test]
    fn time_reversal() {
        let h = oscillator() + PhasePoly::monomial(0, 4, 0.1) + PhasePoly::monomial(1, 1, 0.2);
        let start = PhasePoint::new(-0.4, 0.9);
        let fwd = hamilton_flow(&h, start, 4.0, 1e-3).unwrap();
        let back = hamilton_flow(&h, fwd.end(), -4.0, 1e-3).unwrap();
        assert!(back.end().dist2(&start).sqrt() < 1e-8);
    }

    #[test]
    fn rejects_bad_steps() {
        assert!(hamilton_flow(&oscillator(), PhasePoint::ORIGIN, 1.0, 0.0).is_err());
        assert!(hamilton_flow(&oscillator(), PhasePoint::ORIGIN, f64::NAN, 0.1).is_err());
        let singular = FnClassical(|_p: f64, q: f64| 1.0 / q);
        assert!(matches!(
            hamilton_flow(&singular, PhasePoint::ORIGIN, 1.0, 0.1),
            Err(Error::Gradient { .. })
        ));
    }

    #[test]
    fn static_trajectory_has_zero_action() {
        let traj = Trajectory {
            times: vec![0.0, 0.5, 1.0],
            points: vec![PhasePoint::new(0.2, 0.3); 3],
            energy: vec![0.0; 3],
        };
        assert_eq!(restricted_action(&traj, &PhasePoly::zero()), 0.0);
    }

    #[test]
    fn circular_action() {
        let n = 20_000;
        let times: Vec<f64> = (0..=n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let points: Vec<PhasePoint> = times
            .iter()
            .map(|&t| PhasePoint::new(t.cos(), t.sin()))
            .collect();
        let traj = Trajectory {
            energy: vec![0.5; times.len()],
            times,
            points,
        };
        let pdq = restricted_action(&traj, &PhasePoly::zero());
        assert!((pdq - PI).abs() < 1e-6);
        assert!(restricted_action(&traj, &oscillator()).abs() < 1e-6);
    }

    #[test]
    fn linear_potential_means() {
        let mode = Mode::unit();
        let h = LadderPoly::position(mode);
        let traj = ehrenfest_trajectory(&h, PhasePoint::new(0.3, -0.5), 1.5, 0.1, 48).unwrap();
        for (t, z) in traj.times.iter().zip(&traj.points) {
            assert!((z.p - (0.3 - t)).abs() < 1e-10 && (z.q + 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_exactness() {
        let mode = Mode::unit();
        let q = LadderPoly::position(mode);
        let p = LadderPoly::momentum(mode);
        let h = (&p * &p + &q * &q).scale(0.5);
        let r = compare_classical_quantum(&h, PhasePoint::new(0.0, 1.0), 10.0, 0.01, 64).unwrap();
        assert!(r.max_deviation <= 1e-8, "{}", r.max_deviation);
    }

    #[test]
    fn leakage_is_reported() {
        let mode = Mode::unit();
        let q = LadderPoly::position(mode);
        let h = q.pow(2).scale(0.5) + q.pow(4).scale(2.0);
        let err = ehrenfest_trajectory(&h, PhasePoint::new(0.0, 2.0), 5.0, 0.1, 16).unwrap_err();
        assert!(
            matches!(err, Error::Truncation { .. } | Error::Parameter { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn cubic_short_time_agreement() {
        let mode = Mode::unit();
        let h = LadderPoly::position(mode).pow(3);
        let r = compare_classical_quantum(&h, PhasePoint::new(0.2, 0.5), 0.1, 1e-3, 64).unwrap();
        assert!(r.max_deviation <= 1e-3, "{}", r.max_deviation);
    }
}
