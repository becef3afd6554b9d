use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_hbar, suggested_dim, FockSpace, PhasePoint};
use crate::{Error, Result, C64};

/// Uniform Cartesian grid restricted to the disc `p² + q² ≤ radius²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscGrid {
    pub radius: f64,
    pub spacing: f64,
}

impl DiscGrid {
    pub fn new(radius: f64, spacing: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param(
                "cutoff_radius",
                format!("must be > 0, got {radius}"),
            ));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::param(
                "spacing",
                format!("must be > 0, got {spacing}"),
            ));
        }
        Ok(DiscGrid { radius, spacing })
    }

    /// Grid rows, one per `p` value, each listing the `q` values inside the disc.
    pub fn rows(&self) -> Vec<(f64, Vec<f64>)> {
        let n = (self.radius / self.spacing).floor() as i64;
        let r2 = self.radius * self.radius;
        (-n..=n)
            .map(|i| {
                let p = i as f64 * self.spacing;
                let qs = (-n..=n)
                    .map(|j| j as f64 * self.spacing)
                    .filter(|q| p * p + q * q <= r2)
                    .collect();
                (p, qs)
            })
            .collect()
    }

    pub fn point_count(&self) -> usize {
        self.rows().iter().map(|(_, qs)| qs.len()).sum()
    }
}

/// `M_jk = Σ_grid ⟨j|p,q⟩⟨p,q|k⟩ h²/2πħ` for `j, k < states`.
pub fn resolution_matrix(states: usize, grid: &DiscGrid, hbar: f64) -> Result<DMatrix<C64>> {
    check_hbar(hbar)?;
    if states == 0 {
        return Err(Error::Dimension("need at least one basis state".into()));
    }
    // Enough levels that the first `states` amplitudes are exact everywhere
    // on the disc.
    let max_occ = grid.radius * grid.radius / (2.0 * hbar);
    let dim = states.max(suggested_dim(max_occ, 1e-16)).max(2);
    let space = FockSpace::with_hbar(dim, hbar)?;
    let weight = grid.spacing * grid.spacing / (2.0 * std::f64::consts::PI * hbar);

    let partials: Vec<DMatrix<C64>> = grid
        .rows()
        .into_par_iter()
        .map(|(p, qs)| {
            let mut acc = DMatrix::<C64>::zeros(states, states);
            for q in qs {
                let v = space.coherent_amplitudes(PhasePoint::new(p, q));
                let head = v.amplitudes().rows(0, states);
                acc += head * head.adjoint();
            }
            acc
        })
        .collect();
    let mut total = DMatrix::<C64>::zeros(states, states);
    for m in partials {
        total += m;
    }
    Ok(total * C64::new(weight, 0.0))
}

/// Maximum `|M_jk − δ_jk|` over the first `dim/2` basis states (at least one).
pub fn resolution_of_unity_check(
    dim: usize,
    cutoff_radius: f64,
    spacing: f64,
    hbar: f64,
) -> Result<f64> {
    if dim < 2 {
        return Err(Error::Dimension(format!("need dim >= 2, got {dim}")));
    }
    let grid = DiscGrid::new(cutoff_radius, spacing)?;
    let states = (dim / 2).max(1);
    let m = resolution_matrix(states, &grid, hbar)?;
    let mut worst = 0.0f64;
    for j in 0..states {
        for k in 0..states {
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((m[(j, k)] - target).norm());
        }
    }
    Ok(worst)
}
