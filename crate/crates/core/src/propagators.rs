//! Time-sliced lattice propagators.
//!
//! Two constructions of the same propagator with `ε = T/(N+1)`:
//!
//! * the alternating position/momentum lattice for `K(q″,T;q′,0)`, with `N+1`
//!   momentum sums and `N` position sums and the first-order kernel
//!   `⟨p|e^{-iεH}|q⟩ ≃ ⟨p|q⟩ e^{-iεH(p;q)/ħ}`;
//! * the coherent-state lattice for `K(p″,q″,T;p′,q′,0)`, with `N` phase-space
//!   integrations against `dμ = dp dq/2πħ` and the kernel
//!   `⟨z|z′⟩ e^{-iεH(z;z′)/ħ}`.
//!
//! Both are evaluated as repeated matrix-vector products over a fixed grid.
//! The position lattice lives on a periodic grid whose position and momentum
//! points are discrete Fourier partners, so its completeness sums are exact
//! and its oracle is the exponential of the same Hamiltonian represented on
//! that grid. Endpoints use the grid delta `δ_jk/Δq`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fock::{
    exact_propagator, overlap_analytic, DiscGrid, FockOperator, FockSpace, LadderPoly, Mode,
    PhasePoint, PqPoly,
};
use crate::{Error, Result, C64};

const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    #[serde(rename = "sliced-q")]
    SlicedPosition,
    SlicedCs,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "sliced-q" => Ok(Method::SlicedPosition),
            "sliced-cs" => Ok(Method::SlicedCs),
            other => Err(Error::Config(format!(
                "unknown method `{other}` (expected exact | sliced-q | sliced-cs)"
            ))),
        }
    }
}

/// Odd, symmetric position grid `q_j = (j − (G−1)/2) Δq` and its Fourier
/// partner `p_k = (k − (G−1)/2) Δp` with `Δp = 2πħ/(G Δq)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionGrid {
    pub points: usize,
    pub spacing: f64,
}

impl PositionGrid {
    pub fn new(points: usize, spacing: f64) -> Result<Self> {
        if points < 3 || points.is_multiple_of(2) {
            return Err(Error::Grid(format!(
                "grid needs an odd point count >= 3, got {points}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Grid(format!(
                "grid spacing must be > 0, got {spacing}"
            )));
        }
        Ok(PositionGrid { points, spacing })
    }

    fn center(&self) -> f64 {
        (self.points as f64 - 1.0) / 2.0
    }

    pub fn positions(&self) -> Vec<f64> {
        let c = self.center();
        (0..self.points)
            .map(|j| (j as f64 - c) * self.spacing)
            .collect()
    }

    pub fn momentum_spacing(&self, hbar: f64) -> f64 {
        TAU * hbar / (self.points as f64 * self.spacing)
    }

    pub fn momenta(&self, hbar: f64) -> Vec<f64> {
        let c = self.center();
        let dp = self.momentum_spacing(hbar);
        (0..self.points).map(|k| (k as f64 - c) * dp).collect()
    }

    pub fn half_width(&self) -> f64 {
        self.center() * self.spacing
    }

    /// Largest represented momentum.
    pub fn max_momentum(&self, hbar: f64) -> f64 {
        self.center() * self.momentum_spacing(hbar)
    }

    /// Index of `q` if it is a grid point.
    pub fn index_of(&self, q: f64) -> Option<usize> {
        let x = q / self.spacing + self.center();
        let j = x.round();
        if (x - j).abs() < 1e-9 && j >= 0.0 && (j as usize) < self.points {
            Some(j as usize)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Number of intermediate slices `N`.
    pub slices: usize,
    pub total_time: f64,
    pub hbar: f64,
    pub position_grid: PositionGrid,
    pub phase_grid: DiscGrid,
}

impl LatticeSpec {
    pub fn new(slices: usize, total_time: f64, hbar: f64) -> Result<Self> {
        if !(total_time >= 0.0 && total_time.is_finite()) {
            return Err(Error::param("T", format!("must be >= 0, got {total_time}")));
        }
        crate::fock::check_hbar(hbar)?;
        Ok(LatticeSpec {
            slices,
            total_time,
            hbar,
            position_grid: PositionGrid::new(41, 0.4)?,
            phase_grid: DiscGrid::new(8.0, 0.3)?,
        })
    }

    pub fn with_slices(mut self, slices: usize) -> Self {
        self.slices = slices;
        self
    }

    pub fn with_position_grid(mut self, grid: PositionGrid) -> Self {
        self.position_grid = grid;
        self
    }

    pub fn with_phase_grid(mut self, grid: DiscGrid) -> Self {
        self.phase_grid = grid;
        self
    }

    /// `ε = T/(N+1)`.
    pub fn epsilon(&self) -> f64 {
        self.total_time / (self.slices as f64 + 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorResult {
    pub value: C64,
    pub method: Method,
    pub lattice: LatticeSpec,
    /// `|K_N − K_{⌊N/2⌋}|` for the sliced methods, zero for the oracle.
    pub error_estimate: f64,
    pub momentum_sums: usize,
    pub position_sums: usize,
    /// Phase-space integrations performed by the coherent-state lattice.
    pub phase_sums: usize,
    /// Set when the coherent-state lattice carries weight at the edge of its disc.
    pub boundary_warning: bool,
}

/// `⟨p|q⟩ = e^{-ipq/ħ}/√(2πħ)`.
pub fn bracket_pq(p: f64, q: f64, hbar: f64) -> C64 {
    C64::from_polar(1.0 / (TAU * hbar).sqrt(), -p * q / hbar)
}

/// First-order short-time kernel `⟨p|q⟩ e^{-iεH(p;q)/ħ}`.
pub fn short_time_kernel_pq(p: f64, q: f64, epsilon: f64, h: &LadderPoly) -> Result<C64> {
    if !(epsilon >= 0.0) {
        return Err(Error::param(
            "epsilon",
            format!("must be >= 0, got {epsilon}"),
        ));
    }
    let hbar = h.mode().hbar;
    let sym = h.to_pq().mixed_symbol(p, q);
    Ok(bracket_pq(p, q, hbar) * (C64::new(0.0, -epsilon / hbar) * sym).exp())
}

fn check_hamiltonian(h: &LadderPoly, hbar: f64) -> Result<()> {
    if (h.mode().hbar - hbar).abs() > 1e-15 * hbar {
        return Err(Error::Representation(format!(
            "Hamiltonian built with hbar = {} but lattice uses {}",
            h.mode().hbar,
            hbar
        )));
    }
    Ok(())
}

/// The two matrices of one position-lattice slice:
/// `to_momentum[k, j] = Δq ⟨p_k|q_j⟩ e^{-iεH(p_k;q_j)/ħ}` and
/// `to_position[j, k] = Δp ⟨q_j|p_k⟩`.
struct PositionTransfer {
    to_momentum: DMatrix<C64>,
    to_position: DMatrix<C64>,
    qs: Vec<f64>,
    ps: Vec<f64>,
}

impl PositionTransfer {
    fn new(grid: &PositionGrid, pq: &PqPoly, epsilon: f64, hbar: f64) -> Self {
        let qs = grid.positions();
        let ps = grid.momenta(hbar);
        let dq = grid.spacing;
        let dp = grid.momentum_spacing(hbar);
        let g = grid.points;
        let to_momentum = DMatrix::from_fn(g, g, |k, j| {
            let (p, q) = (ps[k], qs[j]);
            bracket_pq(p, q, hbar)
                * dq
                * (C64::new(0.0, -epsilon / hbar) * pq.mixed_symbol(p, q)).exp()
        });
        let to_position = DMatrix::from_fn(g, g, |j, k| bracket_pq(ps[k], qs[j], hbar).conj() * dp);
        PositionTransfer {
            to_momentum,
            to_position,
            qs,
            ps,
        }
    }
}

/// Alternating position/momentum lattice for `K(q_final, T; q_initial, 0)`.
pub fn sliced_propagator_position(
    q_final: f64,
    q_initial: f64,
    lattice: &LatticeSpec,
    h: &LadderPoly,
) -> Result<PropagatorResult> {
    check_hamiltonian(h, lattice.hbar)?;
    let grid = &lattice.position_grid;
    let inner = 0.5 * grid.half_width();
    if q_final.abs() > inner || q_initial.abs() > inner {
        return Err(Error::Grid(format!(
            "endpoints ({q_initial}, {q_final}) leave the inner half of the grid (|q| <= {inner:.3}); \
             enlarge points or spacing"
        )));
    }
    let pq = h.to_pq();
    let (value, momentum_sums, position_sums) = position_lattice(q_final, q_initial, lattice, &pq);
    let coarse = lattice.with_slices(lattice.slices / 2);
    let (coarse_value, _, _) = position_lattice(q_final, q_initial, &coarse, &pq);
    Ok(PropagatorResult {
        value,
        method: Method::SlicedPosition,
        lattice: *lattice,
        error_estimate: (value - coarse_value).norm(),
        momentum_sums,
        position_sums,
        phase_sums: 0,
        boundary_warning: false,
    })
}

fn position_lattice(
    q_final: f64,
    q_initial: f64,
    lattice: &LatticeSpec,
    pq: &PqPoly,
) -> (C64, usize, usize) {
    let hbar = lattice.hbar;
    let eps = lattice.epsilon();
    let tr = PositionTransfer::new(&lattice.position_grid, pq, eps, hbar);
    let dp = lattice.position_grid.momentum_spacing(hbar);
    let mut momentum_sums = 0;
    let mut position_sums = 0;

    // v(p) = ⟨p|q′⟩ e^{-iεH(p;q′)/ħ}
    let mut v = DVector::from_iterator(
        tr.ps.len(),
        tr.ps.iter().map(|&p| {
            bracket_pq(p, q_initial, hbar)
                * (C64::new(0.0, -eps / hbar) * pq.mixed_symbol(p, q_initial)).exp()
        }),
    );
    for _ in 0..lattice.slices {
        let w = &tr.to_position * &v;
        momentum_sums += 1;
        v = &tr.to_momentum * w;
        position_sums += 1;
    }
    let value: C64 = tr
        .ps
        .iter()
        .zip(v.iter())
        .map(|(&p, &vp)| bracket_pq(p, q_final, hbar).conj() * dp * vp)
        .sum();
    momentum_sums += 1;
    debug_assert_eq!(tr.qs.len(), tr.ps.len());
    (value, momentum_sums, position_sums)
}

/// The Hamiltonian represented on the position grid,
/// `H_ab = Σ_k Δp Δq ⟨q_a|p_k⟩ H(p_k;q_b) ⟨p_k|q_b⟩`, hermitized.
pub fn grid_hamiltonian(grid: &PositionGrid, h: &LadderPoly) -> DMatrix<C64> {
    let hbar = h.mode().hbar;
    let pq = h.to_pq();
    let qs = grid.positions();
    let ps = grid.momenta(hbar);
    let dq = grid.spacing;
    let dp = grid.momentum_spacing(hbar);
    let g = grid.points;
    let mut m = DMatrix::zeros(g, g);
    for a in 0..g {
        for b in 0..g {
            let mut acc = C64::new(0.0, 0.0);
            for &p in &ps {
                acc += bracket_pq(p, qs[a], hbar).conj()
                    * pq.mixed_symbol(p, qs[b])
                    * bracket_pq(p, qs[b], hbar);
            }
            m[(a, b)] = acc * dp * dq;
        }
    }
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Oracle for the position lattice: `[e^{-iH_grid T/ħ}]_{q″,q′} / Δq`.
pub fn grid_exact_propagator(
    q_final: f64,
    q_initial: f64,
    lattice: &LatticeSpec,
    h: &LadderPoly,
) -> Result<C64> {
    check_hamiltonian(h, lattice.hbar)?;
    let grid = &lattice.position_grid;
    let (a, b) = match (grid.index_of(q_final), grid.index_of(q_initial)) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::Grid(format!(
                "oracle endpoints ({q_initial}, {q_final}) must be grid points (spacing {})",
                grid.spacing
            )))
        }
    };
    let hg = FockOperator::from_matrix(grid_hamiltonian(grid, h), Mode::new(1.0, lattice.hbar))?;
    let u = exact_propagator(&hg, lattice.total_time)?;
    Ok(u.matrix()[(a, b)] / grid.spacing)
}

/// `H(z;z′) = ⟨z|H|z′⟩/⟨z|z′⟩ = Σ c_jk ᾱ(z)^j α(z′)^k` for a normal-ordered `H`.
fn cs_mixed_symbol(h: &LadderPoly, z: PhasePoint, z2: PhasePoint) -> C64 {
    let mode = h.mode();
    let ab = mode.alpha(z.p, z.q).conj();
    let a2 = mode.alpha(z2.p, z2.q);
    h.coefficients()
        .map(|((j, k), c)| c * ab.powu(j) * a2.powu(k))
        .sum()
}

/// First-order coherent-state kernel `⟨z|z′⟩ e^{-iεH(z;z′)/ħ}`.
pub fn cs_short_time_kernel(z: PhasePoint, z2: PhasePoint, epsilon: f64, h: &LadderPoly) -> C64 {
    let hbar = h.mode().hbar;
    overlap_analytic(z, z2, hbar)
        * (C64::new(0.0, -epsilon / hbar) * cs_mixed_symbol(h, z, z2)).exp()
}

fn check_unit_mass(h: &LadderPoly) -> Result<()> {
    if (h.mode().mass - 1.0).abs() > 1e-15 {
        return Err(Error::Representation(
            "the coherent-state lattice uses unit-mass coherent states".into(),
        ));
    }
    Ok(())
}

/// Coherent-state lattice for `⟨end|e^{-iHT/ħ}|start⟩`.
pub fn sliced_propagator_cs(
    start: PhasePoint,
    end: PhasePoint,
    lattice: &LatticeSpec,
    h: &LadderPoly,
) -> Result<PropagatorResult> {
    check_hamiltonian(h, lattice.hbar)?;
    check_unit_mass(h)?;
    let nodes = disc_nodes(&lattice.phase_grid);
    let transfer = if lattice.slices > 1 {
        Some(cs_transfer(&nodes, lattice.epsilon(), h))
    } else {
        None
    };
    let fine = cs_lattice(start, end, lattice, h, &nodes, transfer.as_ref());
    let coarse_spec = lattice.with_slices(lattice.slices / 2);
    let coarse_transfer = if coarse_spec.slices > 1 {
        Some(cs_transfer(&nodes, coarse_spec.epsilon(), h))
    } else {
        None
    };
    let coarse = cs_lattice(
        start,
        end,
        &coarse_spec,
        h,
        &nodes,
        coarse_transfer.as_ref(),
    );
    Ok(PropagatorResult {
        value: fine.0,
        method: Method::SlicedCs,
        lattice: *lattice,
        error_estimate: (fine.0 - coarse.0).norm(),
        momentum_sums: 0,
        position_sums: 0,
        phase_sums: lattice.slices,
        boundary_warning: fine.1,
    })
}

/// Nodes of the phase-space grid and a flag for those on the outer rim.
fn disc_nodes(grid: &DiscGrid) -> Vec<(PhasePoint, bool)> {
    let rim = grid.radius - 1.5 * grid.spacing;
    grid.rows()
        .into_iter()
        .flat_map(|(p, qs)| {
            qs.into_iter().map(move |q| {
                let pt = PhasePoint::new(p, q);
                (pt, (p * p + q * q).sqrt() > rim)
            })
        })
        .collect()
}

fn cs_transfer(nodes: &[(PhasePoint, bool)], epsilon: f64, h: &LadderPoly) -> DMatrix<C64> {
    let n = nodes.len();
    let cols: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            nodes
                .iter()
                .map(|(zi, _)| cs_short_time_kernel(*zi, nodes[j].0, epsilon, h))
                .collect()
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| cols[j][i])
}

fn cs_lattice(
    start: PhasePoint,
    end: PhasePoint,
    lattice: &LatticeSpec,
    h: &LadderPoly,
    nodes: &[(PhasePoint, bool)],
    transfer: Option<&DMatrix<C64>>,
) -> (C64, bool) {
    let eps = lattice.epsilon();
    if lattice.slices == 0 {
        return (cs_short_time_kernel(end, start, eps, h), false);
    }
    let grid = &lattice.phase_grid;
    let weight = grid.spacing * grid.spacing / (TAU * lattice.hbar);
    let mut v = DVector::from_iterator(
        nodes.len(),
        nodes
            .iter()
            .map(|(z, _)| cs_short_time_kernel(*z, start, eps, h)),
    );
    let mut warn = rim_fraction(nodes, &v) > RIM_TOLERANCE;
    for _ in 1..lattice.slices {
        let m = transfer.expect("transfer matrix for N > 1");
        v = m * v * C64::new(weight, 0.0);
        warn |= rim_fraction(nodes, &v) > RIM_TOLERANCE;
    }
    let value = nodes
        .iter()
        .zip(v.iter())
        .map(|((z, _), &vz)| cs_short_time_kernel(end, *z, eps, h) * vz)
        .sum::<C64>()
        * weight;
    (value, warn)
}

const RIM_TOLERANCE: f64 = 1e-5;

fn rim_fraction(nodes: &[(PhasePoint, bool)], v: &DVector<C64>) -> f64 {
    let peak = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let rim = nodes
        .iter()
        .zip(v.iter())
        .filter(|((_, on_rim), _)| *on_rim)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    if peak > 0.0 {
        rim / peak
    } else {
        0.0
    }
}

/// Oracle for the coherent-state lattice: `⟨end|e^{-iHT/ħ}|start⟩` on `dim` levels.
pub fn cs_exact_propagator(
    start: PhasePoint,
    end: PhasePoint,
    total_time: f64,
    h: &LadderPoly,
    dim: usize,
) -> Result<C64> {
    let space = FockSpace::new(dim, h.mode())?;
    let u = exact_propagator(&space.operator(h), total_time)?;
    let s = space.coherent_state(start)?;
    let e = space.coherent_state(end)?;
    Ok(u.matrix_element(&e, &s))
}

/// Endpoints of a propagator evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Endpoints {
    Position { q_initial: f64, q_final: f64 },
    Phase { start: PhasePoint, end: PhasePoint },
}

/// Dimension used for the Fock-space oracle of the coherent-state lattice.
pub const ORACLE_DIM: usize = 128;

/// Evaluates one method at one lattice.
pub fn propagate(
    method: Method,
    endpoints: Endpoints,
    lattice: &LatticeSpec,
    h: &LadderPoly,
) -> Result<PropagatorResult> {
    match (method, endpoints) {
        (Method::SlicedPosition, Endpoints::Position { q_initial, q_final }) => {
            sliced_propagator_position(q_final, q_initial, lattice, h)
        }
        (Method::SlicedCs, Endpoints::Phase { start, end }) => {
            sliced_propagator_cs(start, end, lattice, h)
        }
        (Method::Exact, e) => {
            let value = exact_value(e, lattice, h)?;
            Ok(PropagatorResult {
                value,
                method: Method::Exact,
                lattice: *lattice,
                error_estimate: 0.0,
                momentum_sums: 0,
                position_sums: 0,
                phase_sums: 0,
                boundary_warning: false,
            })
        }
        (m, _) => Err(Error::Config(format!(
            "method {m:?} does not accept these endpoints"
        ))),
    }
}

fn exact_value(endpoints: Endpoints, lattice: &LatticeSpec, h: &LadderPoly) -> Result<C64> {
    match endpoints {
        Endpoints::Position { q_initial, q_final } => {
            grid_exact_propagator(q_final, q_initial, lattice, h)
        }
        Endpoints::Phase { start, end } => {
            cs_exact_propagator(start, end, lattice.total_time, h, ORACLE_DIM)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub slices: usize,
    pub value: C64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub method: Method,
    pub exact: C64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `ln error` against `ln N`.
    pub slope: f64,
}

/// Errors against the oracle for each slice count in `slice_list` (ascending).
pub fn convergence_study(
    method: Method,
    h: &LadderPoly,
    endpoints: Endpoints,
    lattice: &LatticeSpec,
    slice_list: &[usize],
) -> Result<ConvergenceTable> {
    if slice_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "slice list must be strictly ascending".into(),
        ));
    }
    if method == Method::Exact {
        return Err(Error::Config(
            "convergence study needs a sliced method".into(),
        ));
    }
    let exact = exact_value(endpoints, lattice, h)?;
    let rows = slice_list
        .iter()
        .map(|&n| {
            let r = propagate(method, endpoints, &lattice.with_slices(n), h)?;
            Ok(ConvergenceRow {
                slices: n,
                value: r.value,
                error: (r.value - exact).norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.slices > 0 && r.error > 0.0)
        .map(|r| ((r.slices as f64).ln(), r.error.ln()))
        .collect();
    Ok(ConvergenceTable {
        method,
        exact,
        slope: fit_slope(&pts),
        rows,
    })
}

pub(crate) fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
