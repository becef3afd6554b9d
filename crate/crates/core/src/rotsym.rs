//! Rotationally symmetric models.
//!
//! Classically, `H = ½[p⃗² + m₀² q⃗²] + λ₀ (q⃗²)²` in `N` dimensions, tracked
//! through the invariants `X = p⃗²`, `Y = p⃗·q⃗`, `Z = q⃗²` and
//! `L² = XZ − Y²`.
//!
//! Quantum mechanically, the reducible representation doubles each degree of
//! freedom with a second canonical pair `(S, R)`, `[S, R] = iħ`, and uses the
//! commuting annihilators
//!
//! ```text
//! a = [m(Q + ζS) + iP]/√(2mħ),    b = [m(S + ζQ) + iR]/√(2mħ)
//! ```
//!
//! so that `Ĥ₂ = mħ a†a + mħ b†b + 4βm²ħ² b†²b²`. With `S, R` built from a
//! second ladder `c₂` of the same mass, `a = c₁ + ζ(c₂ + c₂†)/2` and
//! `b = c₂ + ζ(c₁ + c₁†)/2`, and `[a, b†] = ζ`.
//!
//! Two-mode vectors are `D × D` matrices indexed by `(n₁, n₂)`. Operators act
//! on a padded square so that every product used here is the exact
//! projection of the untruncated operator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::fock::{check_hbar, displace_vector, FockSpace, LadderPoly, Mode, PhasePoint};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotSymSpec {
    pub n: usize,
    pub m0: f64,
    pub lambda0: f64,
    pub hbar: f64,
}

impl RotSymSpec {
    pub fn new(n: usize, m0: f64, lambda0: f64) -> Result<Self> {
        let s = RotSymSpec {
            n,
            m0,
            lambda0,
            hbar: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("N", "need at least one degree of freedom"));
        }
        if !(self.m0 > 0.0 && self.m0.is_finite()) {
            return Err(Error::param("m0", format!("must be > 0, got {}", self.m0)));
        }
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(Error::param(
                "lambda0",
                format!("must be >= 0, got {}", self.lambda0),
            ));
        }
        check_hbar(self.hbar)
    }

    pub fn energy(&self, inv: &InvariantTriple) -> f64 {
        0.5 * inv.x + 0.5 * self.m0 * self.m0 * inv.z + self.lambda0 * inv.z * inv.z
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantTriple {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl InvariantTriple {
    pub fn of(p: &[f64], q: &[f64]) -> Self {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        InvariantTriple {
            x: dot(p, p),
            y: dot(p, q),
            z: dot(q, q),
        }
    }

    /// `|p⃗ × q⃗|² = XZ − Y²`.
    pub fn l2(&self) -> f64 {
        self.x * self.z - self.y * self.y
    }

    /// `L² = 0` up to the cancellation error of `XZ − Y²`.
    pub fn is_collinear(&self) -> bool {
        self.l2() <= COLLINEAR_TOLERANCE * self.x * self.z
    }
}

const COLLINEAR_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotSymTrajectory {
    pub times: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
    pub invariants: Vec<InvariantTriple>,
}

impl RotSymTrajectory {
    pub fn l2(&self) -> Vec<f64> {
        self.invariants.iter().map(InvariantTriple::l2).collect()
    }

    /// `max |E(t) − E(0)| / |E(0)|` (absolute when `E(0) = 0`).
    pub fn energy_drift(&self) -> f64 {
        relative_drift(&self.energy)
    }

    /// `max |L²(t) − L²(0)| / L²(0)`, or relative to `X₀Z₀` when `L²(0)`
    /// is at rounding level.
    pub fn l2_drift(&self) -> f64 {
        let inv = self.invariants[0];
        let l2 = self.l2();
        if inv.is_collinear() {
            let scale = (inv.x * inv.z).max(1.0);
            l2.iter().map(|s| (s - l2[0]).abs()).fold(0.0, f64::max) / scale
        } else {
            relative_drift(&l2)
        }
    }

    /// `min_t (XZ − Y²)`.
    pub fn min_l2(&self) -> f64 {
        self.l2().into_iter().fold(f64::INFINITY, f64::min)
    }
}

fn relative_drift(series: &[f64]) -> f64 {
    let s0 = series[0];
    let scale = if s0 != 0.0 { s0.abs() } else { 1.0 };
    series.iter().map(|s| (s - s0).abs()).fold(0.0, f64::max) / scale
}

// Fourth-order composition of position-Verlet steps.
const YOSHIDA: [f64; 3] = [
    1.351_207_191_959_657_8,
    -1.702_414_383_919_315_3,
    1.351_207_191_959_657_8,
];

fn verlet(spec: &RotSymSpec, p: &mut [f64], q: &mut [f64], dt: f64) {
    for (qi, pi) in q.iter_mut().zip(p.iter()) {
        *qi += 0.5 * dt * pi;
    }
    let z: f64 = q.iter().map(|x| x * x).sum();
    let k = spec.m0 * spec.m0 + 4.0 * spec.lambda0 * z;
    for (pi, qi) in p.iter_mut().zip(q.iter()) {
        *pi -= dt * k * qi;
    }
    for (qi, pi) in q.iter_mut().zip(p.iter()) {
        *qi += 0.5 * dt * pi;
    }
}

/// Symplectic integration of `q̇ = p`, `ṗ = −m₀² q − 4λ₀ (q²) q`.
pub fn rotsym_flow(
    spec: &RotSymSpec,
    p0: &[f64],
    q0: &[f64],
    total_time: f64,
    dt: f64,
) -> Result<RotSymTrajectory> {
    spec.validate()?;
    if p0.len() != spec.n || q0.len() != spec.n {
        return Err(Error::Dimension(format!(
            "initial data must have {} components, got p: {}, q: {}",
            spec.n,
            p0.len(),
            q0.len()
        )));
    }
    if !(dt > 0.0) || !(total_time >= 0.0) || !total_time.is_finite() {
        return Err(Error::param(
            "dt",
            format!("need dt > 0 and T >= 0, got dt = {dt}, T = {total_time}"),
        ));
    }
    let steps = (total_time / dt).round() as usize;
    let h = if steps > 0 {
        total_time / steps as f64
    } else {
        0.0
    };
    let (mut p, mut q) = (p0.to_vec(), q0.to_vec());
    let mut traj = RotSymTrajectory {
        times: Vec::with_capacity(steps + 1),
        p: Vec::with_capacity(steps + 1),
        q: Vec::with_capacity(steps + 1),
        energy: Vec::with_capacity(steps + 1),
        invariants: Vec::with_capacity(steps + 1),
    };
    for k in 0..=steps {
        if k > 0 {
            for w in YOSHIDA {
                verlet(spec, &mut p, &mut q, w * h);
            }
        }
        let inv = InvariantTriple::of(&p, &q);
        traj.times.push(k as f64 * h);
        traj.energy.push(spec.energy(&inv));
        traj.invariants.push(inv);
        traj.p.push(p.clone());
        traj.q.push(q.clone());
    }
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reduction {
    /// `L = 0`: motion on the line through the origin spanned by the initial data.
    Line,
    /// `L ≠ 0`: motion in the plane spanned by `p⃗₀` and `q⃗₀`.
    Plane,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub reduction: Reduction,
    /// Largest distance of `p⃗(t)` or `q⃗(t)` from the line or plane.
    pub residual: f64,
}

/// Checks that the motion stays on the line (`L = 0`) or in the plane
/// (`L ≠ 0`) fixed by the initial data.
pub fn reduction_check(traj: &RotSymTrajectory) -> ReductionReport {
    let (p0, q0) = (&traj.p[0], &traj.q[0]);
    let inv = traj.invariants[0];
    let collinear = inv.is_collinear();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in [q0, p0] {
        let mut w = v.clone();
        for b in &basis {
            let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 && !(collinear && !basis.is_empty()) {
            basis.push(w.iter().map(|x| x / norm).collect());
        }
    }
    let residual_of = |v: &Vec<f64>| {
        let mut w = v.clone();
        for b in &basis {
            let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        w.iter().map(|x| x * x).sum::<f64>().sqrt()
    };
    let residual = traj
        .p
        .iter()
        .chain(traj.q.iter())
        .map(residual_of)
        .fold(0.0, f64::max);
    ReductionReport {
        reduction: if collinear {
            Reduction::Line
        } else {
            Reduction::Plane
        },
        residual,
    }
}

/// `½[p² + m²q²] + {½[p² + m²q²]}²`.
pub fn h1_symbol(m: f64, pt: PhasePoint) -> f64 {
    let h0 = 0.5 * (pt.p * pt.p + m * m * pt.q * pt.q);
    h0 + h0 * h0
}

/// `Ĥ₁ = mħ a†a + m²ħ² a†²a²` for mass `m`.
pub fn h1_operator(mode: Mode) -> LadderPoly {
    let a = LadderPoly::annihilator(mode);
    let ad = LadderPoly::creator(mode);
    let mh = mode.mass * mode.hbar;
    (&ad * &a).scale(mh) + (&(&ad * &ad) * &(&a * &a)).scale(mh * mh)
}

/// `⟨p,q|Ĥ₁|p,q⟩` on `dim` levels.
pub fn h1_symbol_fock(m: f64, pt: PhasePoint, hbar: f64, dim: usize) -> Result<f64> {
    let mode = Mode::new(m, hbar);
    let space = FockSpace::new(dim, mode)?;
    let psi = space.coherent_state(pt)?;
    Ok(space.operator(&h1_operator(mode)).expectation(&psi).re)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducibleSpec {
    pub m: f64,
    pub zeta: f64,
    pub beta: f64,
    pub hbar: f64,
    pub dim_per_mode: usize,
}

impl ReducibleSpec {
    pub fn new(m: f64, zeta: f64, beta: f64) -> Result<Self> {
        let s = ReducibleSpec {
            m,
            zeta,
            beta,
            hbar: 1.0,
            dim_per_mode: 24,
        };
        s.validate()?;
        Ok(s)
    }

    /// Solves `m₀² = m²(1 + ζ²)`, `λ₀ = βm⁴ζ⁴` for `(m, β)` at a chosen `ζ`.
    pub fn from_induced(m0: f64, lambda0: f64, zeta: f64) -> Result<Self> {
        if !(m0 > 0.0) {
            return Err(Error::param("m0", format!("must be > 0, got {m0}")));
        }
        if !(lambda0 >= 0.0) {
            return Err(Error::param(
                "lambda0",
                format!("must be >= 0, got {lambda0}"),
            ));
        }
        if lambda0 > 0.0 && zeta == 0.0 {
            return Err(Error::param("zeta", "a quartic coupling needs zeta > 0"));
        }
        let m = m0 / (1.0 + zeta * zeta).sqrt();
        let beta = if lambda0 == 0.0 {
            0.0
        } else {
            lambda0 / (m.powi(4) * zeta.powi(4))
        };
        Self::new(m, zeta, beta)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn with_dim(mut self, dim_per_mode: usize) -> Self {
        self.dim_per_mode = dim_per_mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::param("m", format!("must be > 0, got {}", self.m)));
        }
        if !(0.0..1.0).contains(&self.zeta) {
            return Err(Error::param(
                "zeta",
                format!("must satisfy 0 <= zeta < 1, got {}", self.zeta),
            ));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::param(
                "beta",
                format!("must be >= 0, got {}", self.beta),
            ));
        }
        if self.dim_per_mode < 4 {
            return Err(Error::Dimension(format!(
                "need at least 4 levels per mode, got {}",
                self.dim_per_mode
            )));
        }
        check_hbar(self.hbar)
    }

    /// `(m₀², λ₀) = (m²(1 + ζ²), βm⁴ζ⁴)`.
    pub fn induced(&self) -> (f64, f64) {
        let m2 = self.m * self.m;
        (
            m2 * (1.0 + self.zeta * self.zeta),
            self.beta * m2 * m2 * self.zeta.powi(4),
        )
    }
}

/// `½[p² + m²(1 + ζ²)q²] + βm⁴ζ⁴ q⁴`.
pub fn h2_symbol_closed(spec: &ReducibleSpec, p: f64, q: f64) -> f64 {
    let (m0_sq, lambda0) = spec.induced();
    0.5 * (p * p + m0_sq * q * q) + lambda0 * q.powi(4)
}

/// Ladder action on a padded two-mode square.
struct TwoMode {
    dim: usize,
    padded: usize,
    zeta: f64,
}

impl TwoMode {
    fn new(spec: &ReducibleSpec) -> Self {
        TwoMode {
            dim: spec.dim_per_mode,
            padded: spec.dim_per_mode + 4,
            zeta: spec.zeta,
        }
    }

    fn lower(&self, v: &DMatrix<f64>, mode: usize) -> DMatrix<f64> {
        let n = self.padded;
        DMatrix::from_fn(n, n, |i, j| {
            let (src, level) = if mode == 0 {
                ((i + 1, j), i + 1)
            } else {
                ((i, j + 1), j + 1)
            };
            if src.0 < n && src.1 < n {
                (level as f64).sqrt() * v[src]
            } else {
                0.0
            }
        })
    }

    fn raise(&self, v: &DMatrix<f64>, mode: usize) -> DMatrix<f64> {
        let n = self.padded;
        DMatrix::from_fn(n, n, |i, j| {
            let (src, level) = if mode == 0 {
                ((i.wrapping_sub(1), j), i)
            } else {
                ((i, j.wrapping_sub(1)), j)
            };
            if level > 0 {
                (level as f64).sqrt() * v[src]
            } else {
                0.0
            }
        })
    }

    /// `c_k + ζ(c_o + c_o†)/2` with `k` the own mode and `o` the other.
    fn annihilate(&self, v: &DMatrix<f64>, own: usize) -> DMatrix<f64> {
        let other = 1 - own;
        self.lower(v, own) + (self.lower(v, other) + self.raise(v, other)) * (0.5 * self.zeta)
    }

    fn basis(&self, k: usize) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(self.padded, self.padded);
        e[(k / self.dim, k % self.dim)] = 1.0;
        e
    }

    /// Columns `op(e_k)` for the `D²` retained basis states, flattened.
    fn matrix_of(&self, op: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim * self.dim;
        let rows = self.padded * self.padded;
        let mut m = DMatrix::zeros(rows, n);
        for k in 0..n {
            let col = op(&self.basis(k));
            m.column_mut(k).copy_from_slice(col.as_slice());
        }
        m
    }
}

/// The reducible representation at one truncation: the joint vacuum and the
/// restricted operators.
pub struct ReducibleSystem {
    spec: ReducibleSpec,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    bb: DMatrix<f64>,
    vacuum: DMatrix<f64>,
    /// `(‖a|0,0⟩‖, ‖b|0,0⟩‖)`.
    pub vacuum_defect: (f64, f64),
}

/// Largest `‖a|0,0⟩‖` or `‖b|0,0⟩‖` accepted for the constructed vacuum.
pub const FIDUCIAL_TOLERANCE: f64 = 1e-8;

impl ReducibleSystem {
    pub fn new(spec: &ReducibleSpec) -> Result<Self> {
        Self::with_fiducial_tolerance(spec, FIDUCIAL_TOLERANCE)
    }

    /// As [`ReducibleSystem::new`] with a different vacuum-defect gate.
    pub fn with_fiducial_tolerance(spec: &ReducibleSpec, tolerance: f64) -> Result<Self> {
        spec.validate()?;
        let two = TwoMode::new(spec);
        let a = two.matrix_of(|v| two.annihilate(v, 0));
        let b = two.matrix_of(|v| two.annihilate(v, 1));
        let bb = two.matrix_of(|v| two.annihilate(&two.annihilate(v, 1), 1));
        let number = a.transpose() * &a + b.transpose() * &b;
        let eig = SymmetricEigen::new(number);
        let (imin, _) =
            eig.eigenvalues
                .iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
                );
        let mut v = eig.eigenvectors.column(imin).into_owned();
        // fix the sign so that the |0,0⟩ component is positive
        if v[0] < 0.0 {
            v = -v;
        }
        let d = spec.dim_per_mode;
        let vacuum = DMatrix::from_fn(d, d, |i, j| v[i * d + j]);
        let defect = ((&a * &v).norm(), (&b * &v).norm());
        if defect.0.max(defect.1) > tolerance {
            return Err(Error::Fiducial(defect.0.max(defect.1)));
        }
        Ok(ReducibleSystem {
            spec: *spec,
            a,
            b,
            bb,
            vacuum,
            vacuum_defect: defect,
        })
    }

    pub fn spec(&self) -> &ReducibleSpec {
        &self.spec
    }

    /// Vacuum amplitudes indexed by `(n₁, n₂)`.
    pub fn vacuum(&self) -> &DMatrix<f64> {
        &self.vacuum
    }

    /// `Ĥ₂` restricted to the `D²` retained states.
    pub fn hamiltonian(&self) -> DMatrix<f64> {
        let s = &self.spec;
        let mh = s.m * s.hbar;
        (self.a.transpose() * &self.a + self.b.transpose() * &self.b) * mh
            + self.bb.transpose() * &self.bb * (4.0 * s.beta * mh * mh)
    }

    /// `U[p,q]|0,0⟩` with the displacement acting on `(Q, P)` only. Fails when
    /// more than the coherent-state tail tolerance leaves the truncation.
    pub fn coherent_state(&self, pt: PhasePoint) -> Result<DMatrix<C64>> {
        if !pt.is_finite() {
            return Err(Error::param("point", "phase-space point must be finite"));
        }
        let d = self.spec.dim_per_mode;
        let space = FockSpace::new(d, Mode::new(self.spec.m, self.spec.hbar))?;
        let mut out = DMatrix::<C64>::zeros(d, d);
        for j in 0..d {
            let col =
                DVector::from_iterator(d, self.vacuum.column(j).iter().map(|&x| C64::new(x, 0.0)));
            let moved = displace_vector(&space, &col, pt);
            out.column_mut(j).copy_from(&moved);
        }
        let lost = 1.0 - out.iter().map(|c| c.norm_sqr()).sum::<f64>();
        if lost > crate::fock::TAIL_TOLERANCE {
            return Err(Error::Truncation {
                dim: d,
                tail: lost,
                suggested: 2 * d,
            });
        }
        Ok(out)
    }

    /// `⟨p,q|Ĥ₂|p,q⟩ = mħ‖aψ‖² + mħ‖bψ‖² + 4βm²ħ²‖b²ψ‖²` over `‖ψ‖²`.
    pub fn symbol(&self, p: f64, q: f64) -> Result<f64> {
        Ok(self.symbol_terms(p, q)?.iter().sum())
    }

    /// The three contributions to the symbol separately.
    pub fn symbol_terms(&self, p: f64, q: f64) -> Result<[f64; 3]> {
        let psi = self.coherent_state(PhasePoint::new(p, q))?;
        let flat = DVector::from_iterator(psi.len(), psi.transpose().iter().copied());
        let norm2 = flat.norm_squared();
        let apply = |m: &DMatrix<f64>| {
            let re = m * flat.map(|c| c.re);
            let im = m * flat.map(|c| c.im);
            (re.norm_squared() + im.norm_squared()) / norm2
        };
        let s = &self.spec;
        let mh = s.m * s.hbar;
        Ok([
            mh * apply(&self.a),
            mh * apply(&self.b),
            4.0 * s.beta * mh * mh * apply(&self.bb),
        ])
    }

    /// Smallest eigenvalue of the restricted `Ĥ₂`.
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.hamiltonian()).eigenvalues.min()
    }

    /// `Σ_{n₁n₂} c_{n₁n₂} φ_{n₁}(x) φ_{n₂}(y)` for a two-mode state.
    pub fn wavefunction(&self, state: &DMatrix<C64>, x: f64, y: f64) -> C64 {
        let fx = hermite_functions(x, self.spec.m, self.spec.hbar, state.nrows());
        let fy = hermite_functions(y, self.spec.m, self.spec.hbar, state.ncols());
        let mut acc = C64::new(0.0, 0.0);
        for (i, &a) in fx.iter().enumerate() {
            for (j, &b) in fy.iter().enumerate() {
                acc += state[(i, j)] * (a * b);
            }
        }
        acc
    }

    fn vacuum_complex(&self) -> DMatrix<C64> {
        self.vacuum.map(|x| C64::new(x, 0.0))
    }
}

/// `h2_symbol_fock` as a one-shot call.
pub fn h2_symbol_fock(spec: &ReducibleSpec, p: f64, q: f64) -> Result<f64> {
    ReducibleSystem::new(spec)?.symbol(p, q)
}

/// Oscillator eigenfunctions `φ_0 … φ_{n-1}` of mass `m` at `x`.
pub fn hermite_functions(x: f64, m: f64, hbar: f64, n: usize) -> Vec<f64> {
    let scale = (m / hbar).sqrt();
    let xi = x * scale;
    let mut out = Vec::with_capacity(n);
    let mut prev = 0.0;
    let mut cur = scale.sqrt() * std::f64::consts::PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    for k in 0..n {
        out.push(cur);
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * xi * cur
            - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    out
}

/// Unit-norm `N exp{ip(x−q)/ħ − (m/2ħ)[(x−q)² + y² + 2ζ(x−q)y]}`.
pub fn fiducial_closed_form(spec: &ReducibleSpec, pt: PhasePoint, x: f64, y: f64) -> C64 {
    let (m, h, z) = (spec.m, spec.hbar, spec.zeta);
    let norm = (m * (1.0 - z * z).sqrt() / (std::f64::consts::PI * h)).sqrt();
    let u = x - pt.q;
    C64::from_polar(
        norm * (-(m / (2.0 * h)) * (u * u + y * y + 2.0 * z * u * y)).exp(),
        pt.p * u / h,
    )
}

/// Square grid `[-half_width, half_width]²` with `points` nodes per side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareGrid {
    pub half_width: f64,
    pub points: usize,
}

impl SquareGrid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0) || points < 2 {
            return Err(Error::Grid(format!(
                "need half_width > 0 and at least 2 points, got {half_width}, {points}"
            )));
        }
        Ok(SquareGrid { half_width, points })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points)
            .map(|i| -self.half_width + i as f64 * h)
            .collect()
    }
}

/// L² distance on `grid` between the synthesized state `U[p,q]|0,0⟩` and the
/// closed-form Gaussian, after removing the global phase.
pub fn fiducial_wavefunction_check(
    spec: &ReducibleSpec,
    pt: PhasePoint,
    grid: &SquareGrid,
) -> Result<f64> {
    let sys = ReducibleSystem::new(spec)?;
    let state = if pt == PhasePoint::ORIGIN {
        sys.vacuum_complex()
    } else {
        sys.coherent_state(pt)?
    };
    let nodes = grid.nodes();
    let h2 = grid.spacing().powi(2);
    let mut numeric = Vec::with_capacity(nodes.len() * nodes.len());
    let mut closed = Vec::with_capacity(nodes.len() * nodes.len());
    for &x in &nodes {
        for &y in &nodes {
            numeric.push(sys.wavefunction(&state, x, y));
            closed.push(fiducial_closed_form(spec, pt, x, y));
        }
    }
    let overlap: C64 = closed.iter().zip(&numeric).map(|(c, n)| c.conj() * n).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let err: f64 = closed
        .iter()
        .zip(&numeric)
        .map(|(c, n)| (n - c * phase).norm_sqr())
        .sum::<f64>()
        * h2;
    Ok(err.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    /// `‖t − Πt‖²/‖t‖²`.
    pub residual: f64,
    pub rank: usize,
    /// Ratio of the largest to the smallest retained Gram eigenvalue.
    pub condition: f64,
    pub probes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanReport {
    pub free: ProjectionResult,
    pub pinned: ProjectionResult,
}

/// Layout of the probe labels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    pub count: usize,
    /// Labels lie in `|p| ≤ p_max` and, for the free family, `|q| ≤ q_max`.
    pub p_max: f64,
    pub q_max: f64,
}

impl ProbeSet {
    pub fn new(count: usize) -> Self {
        ProbeSet {
            count,
            p_max: 6.0,
            q_max: 3.0,
        }
    }

    fn line(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// `count` labels with `q` pinned to `q_fixed`.
    pub fn pinned(&self, q_fixed: f64) -> Vec<PhasePoint> {
        Self::line(-self.p_max, self.p_max, self.count)
            .into_iter()
            .map(|p| PhasePoint::new(p, q_fixed))
            .collect()
    }

    /// A rectangular lattice of `count` labels with roughly square cells,
    /// shifted by half a cell so it does not contain the origin.
    pub fn free(&self) -> Vec<PhasePoint> {
        let ideal = (self.count as f64 * self.q_max / self.p_max).sqrt().round() as usize;
        let mut n_q = ideal.clamp(1, self.count);
        while !self.count.is_multiple_of(n_q) {
            n_q -= 1;
        }
        let n_p = self.count / n_q;
        let dp = 2.0 * self.p_max / n_p as f64;
        let dq = 2.0 * self.q_max / n_q as f64;
        let mut out = Vec::with_capacity(self.count);
        for i in 0..n_p {
            for j in 0..n_q {
                out.push(PhasePoint::new(
                    -self.p_max + (i as f64 + 0.5) * dp,
                    -self.q_max + (j as f64 + 0.5) * dq,
                ));
            }
        }
        out
    }
}

/// Regularized projection of `target` onto the span of `family`, all sampled
/// on the same grid.
fn project(family: &[Vec<C64>], target: &[C64], rcond: f64) -> ProjectionResult {
    let rows = target.len();
    let a = DMatrix::from_fn(rows, family.len(), |i, j| family[j][i]);
    let svd = a.svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > rcond * smax)
        .collect();
    let t = DVector::from_column_slice(target);
    let mut proj = DVector::<C64>::zeros(rows);
    for &k in &keep {
        let col = u.column(k);
        let c = col.dotc(&t);
        proj += col * c;
    }
    let smin = keep
        .iter()
        .map(|&k| svd.singular_values[k])
        .fold(f64::INFINITY, f64::min);
    ProjectionResult {
        residual: (&t - proj).norm_squared() / t.norm_squared(),
        rank: keep.len(),
        condition: (smax / smin).powi(2),
        probes: family.len(),
    }
}

/// Relative singular-value cutoff for the span projections.
pub const SPAN_RCOND: f64 = 1e-10;

/// Projection residuals of `target` onto the free `(p,q)` family and onto
/// the family with `q` pinned to `q_fixed`, both with `probes.count`
/// members, using the closed-form wavefunctions.
pub fn span_deficiency(
    spec: &ReducibleSpec,
    q_fixed: f64,
    probes: &ProbeSet,
    target: PhasePoint,
    grid: &SquareGrid,
) -> Result<SpanReport> {
    spec.validate()?;
    let nodes = grid.nodes();
    let sample = |pt: PhasePoint| -> Vec<C64> {
        let mut v = Vec::with_capacity(nodes.len() * nodes.len());
        for &x in &nodes {
            for &y in &nodes {
                v.push(fiducial_closed_form(spec, pt, x, y));
            }
        }
        v
    };
    let t = sample(target);
    let free: Vec<Vec<C64>> = probes.free().into_iter().map(sample).collect();
    let pinned: Vec<Vec<C64>> = probes.pinned(q_fixed).into_iter().map(sample).collect();
    Ok(SpanReport {
        free: project(&free, &t, SPAN_RCOND),
        pinned: project(&pinned, &t, SPAN_RCOND),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn invariants_at_start() {
        let inv = InvariantTriple::of(&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0]);
        assert_eq!((inv.x, inv.y, inv.z, inv.l2()), (1.0, 0.0, 1.0, 1.0));
    }

    #[test]
    fn three_dimensional_conservation() {
        let spec = RotSymSpec::new(3, 1.0, 0.1).unwrap();
        let t = rotsym_flow(&spec, &[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], 10.0, 1e-3).unwrap();
        assert!(t.l2_drift() <= 1e-8 && t.energy_drift() <= 1e-8);
        let r = reduction_check(&t);
        assert_eq!(r.reduction, Reduction::Plane);
        assert!(r.residual <= 1e-8);
    }

    #[test]
    fn free_motion_is_exact() {
        let spec = RotSymSpec::new(2, 1.3, 0.0).unwrap();
        let (p0, q0) = ([0.4, -0.2], [1.0, 0.5]);
        let t = rotsym_flow(&spec, &p0, &q0, 5.0, 1e-3).unwrap();
        for (k, &time) in t.times.iter().enumerate() {
            let (c, s) = ((1.3 * time).cos(), (1.3 * time).sin());
            for i in 0..2 {
                let q = q0[i] * c + p0[i] / 1.3 * s;
                assert!((t.q[k][i] - q).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn collinear_start_stays_on_line() {
        let spec = RotSymSpec::new(3, 1.0, 0.2).unwrap();
        let q0 = [0.3, -0.5, 0.8];
        let p0: Vec<f64> = q0.iter().map(|x| 2.0 * x).collect();
        let t = rotsym_flow(&spec, &p0, &q0, 5.0, 1e-3).unwrap();
        assert_eq!(t.invariants[0].l2(), 0.0);
        let r = reduction_check(&t);
        assert_eq!(r.reduction, Reduction::Line);
        assert!(r.residual <= 1e-8);
    }

    #[test]
    fn dimension_mismatch() {
        let spec = RotSymSpec::new(3, 1.0, 0.1).unwrap();
        assert!(matches!(
            rotsym_flow(&spec, &[0.0, 1.0], &[1.0, 0.0, 0.0], 1.0, 1e-3),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn h1_closed_form_values() {
        assert_eq!(h1_symbol(1.0, PhasePoint::ORIGIN), 0.0);
        assert_eq!(h1_symbol(1.0, PhasePoint::new(1.0, 0.0)), 0.75);
        assert_eq!(h1_symbol(2.0, PhasePoint::new(0.0, 1.0)), 6.0);
    }

    #[test]
    fn h1_fock_oracle() {
        let v = h1_symbol_fock(2.0, PhasePoint::new(0.0, 1.0), 1.0, 64).unwrap();
        assert!((v - 6.0).abs() < 1e-8, "{v}");
        let v = h1_symbol_fock(1.0, PhasePoint::new(1.0, 0.0), 1.0, 64).unwrap();
        assert!((v - 0.75).abs() < 1e-8, "{v}");
    }

    #[test]
    fn h2_closed_form_values() {
        let s = ReducibleSpec::new(1.0, 0.5, 2.0).unwrap();
        assert!((h2_symbol_closed(&s, 0.0, 1.0) - 0.75).abs() < 1e-15);
        let s0 = ReducibleSpec::new(1.7, 0.0, 3.0).unwrap();
        assert_eq!(s0.induced().1, 0.0);
        assert_eq!(
            h2_symbol_closed(&s0, 0.4, 0.9),
            0.5 * (0.16 + 1.7 * 1.7 * 0.81)
        );
    }

    #[test]
    fn induced_round_trip() {
        let s = ReducibleSpec::from_induced(1.25f64.sqrt(), 0.125, 0.5).unwrap();
        assert!((s.m - 1.0).abs() < 1e-10 && (s.beta - 2.0).abs() < 1e-10);
        let (m0_sq, l0) = s.induced();
        assert!((m0_sq - 1.25).abs() < 1e-10 && (l0 - 0.125).abs() < 1e-10);
        assert!(ReducibleSpec::from_induced(1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn zeta_range_enforced() {
        assert!(ReducibleSpec::new(1.0, 1.0, 0.0).is_err());
        assert!(ReducibleSpec::new(1.0, -0.1, 0.0).is_err());
        assert!(ReducibleSpec::new(1.0, 0.5, -1.0).is_err());
    }

    #[test]
    fn annihilators_commute_and_overlap() {
        // [a, b] = 0 and [a, b†] = ζ on states well inside the truncation
        let spec = ReducibleSpec::new(1.0, 0.4, 0.0).unwrap().with_dim(10);
        let two = TwoMode::new(&spec);
        let mut v = DMatrix::zeros(two.padded, two.padded);
        v[(2, 3)] = 1.0;
        v[(1, 0)] = -0.5;
        let ab = two.annihilate(&two.annihilate(&v, 1), 0);
        let ba = two.annihilate(&two.annihilate(&v, 0), 1);
        assert!((ab - ba).norm() < 1e-14);
        let b_dag = |w: &DMatrix<f64>| {
            two.raise(w, 1) + (two.raise(w, 0) + two.lower(w, 0)) * (0.5 * spec.zeta)
        };
        let comm = two.annihilate(&b_dag(&v), 0) - b_dag(&two.annihilate(&v, 0));
        assert!((comm - &v * spec.zeta).norm() < 1e-14);
    }

    #[test]
    fn vacuum_symbol_is_zero() {
        let spec = ReducibleSpec::new(1.0, 0.5, 2.0).unwrap();
        let sys = ReducibleSystem::new(&spec).unwrap();
        assert!(sys.vacuum_defect.0 < 1e-8 && sys.vacuum_defect.1 < 1e-8);
        assert!(sys.symbol(0.0, 0.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn h2_fock_matches_closed_form() {
        let spec = ReducibleSpec::new(1.0, 0.5, 2.0).unwrap();
        let v = h2_symbol_fock(&spec, 0.0, 1.0).unwrap();
        assert!((v - 0.75).abs() < 1e-6, "{v}");
    }

    #[test]
    fn h2_randomized_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let spec = ReducibleSpec::new(
                rng.random_range(0.5..2.0),
                rng.random_range(0.05..0.5),
                rng.random_range(0.0..2.0),
            )
            .unwrap();
            let sys = ReducibleSystem::new(&spec).unwrap();
            let (p, q) = (rng.random_range(-1.5..1.5), rng.random_range(-1.0..1.0));
            let fock = sys.symbol(p, q).unwrap();
            let closed = h2_symbol_closed(&spec, p, q);
            assert!(
                (fock - closed).abs() <= 1e-5,
                "{spec:?} ({p}, {q}): {fock} vs {closed}"
            );
        }
    }

    #[test]
    fn strong_coupling_outgrows_truncation() {
        // the vacuum tail beyond level 24 is ~1e-6 at ζ = 0.7
        let spec = ReducibleSpec::new(1.0, 0.7, 1.0).unwrap();
        assert!(matches!(
            ReducibleSystem::new(&spec),
            Err(Error::Fiducial(_))
        ));
        assert!(ReducibleSystem::new(&spec.with_dim(40)).is_ok());
    }

    #[test]
    fn zero_zeta_has_no_quartic_term() {
        let spec = ReducibleSpec::new(1.3, 0.0, 2.0).unwrap();
        let sys = ReducibleSystem::new(&spec).unwrap();
        let terms = sys.symbol_terms(0.7, 1.1).unwrap();
        assert!(terms[1].abs() < 1e-12 && terms[2].abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_is_bounded_below() {
        let spec = ReducibleSpec::new(1.0, 0.5, 1.5).unwrap();
        let sys = ReducibleSystem::new(&spec).unwrap();
        assert!(sys.min_eigenvalue() >= -1e-8);
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let grid = SquareGrid::new(10.0, 2001).unwrap();
        let h = grid.spacing();
        let vals: Vec<Vec<f64>> = grid
            .nodes()
            .iter()
            .map(|&x| hermite_functions(x, 1.7, 0.6, 6))
            .collect();
        for j in 0..6 {
            for k in 0..6 {
                let s: f64 = vals.iter().map(|v| v[j] * v[k]).sum::<f64>() * h;
                assert!((s - if j == k { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn decoupled_vacuum_is_a_product() {
        let spec = ReducibleSpec::new(1.0, 0.0, 0.0).unwrap().with_dim(8);
        let grid = SquareGrid::new(6.0, 121).unwrap();
        let r = fiducial_wavefunction_check(&spec, PhasePoint::ORIGIN, &grid).unwrap();
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn member_of_pinned_family_is_in_both_spans() {
        let spec = ReducibleSpec::new(1.0, 0.5, 0.0).unwrap();
        let grid = SquareGrid::new(6.0, 61).unwrap();
        let probes = ProbeSet::new(100);
        let target = probes.pinned(0.0)[60];
        let r = span_deficiency(&spec, 0.0, &probes, target, &grid).unwrap();
        assert!(r.pinned.residual < 1e-10, "{:?}", r.pinned);
        assert!(r.free.residual < 1e-3, "{:?}", r.free);
    }

    #[test]
    fn displaced_fiducial_matches_closed_form() {
        let spec = ReducibleSpec::new(1.0, 0.5, 0.0).unwrap();
        let grid = SquareGrid::new(6.0, 61).unwrap();
        for pt in [PhasePoint::ORIGIN, PhasePoint::new(1.0, 1.0)] {
            let r = fiducial_wavefunction_check(&spec, pt, &grid).unwrap();
            assert!(r <= 1e-6, "{pt:?}: {r}");
        }
    }
}
