use nalgebra::DMatrix;

use super::{check_mode, FockOperator, LadderPoly, Mode};
use crate::{Error, Result, C64};

/// Truncated `(a, a†)` on `dim` levels: `a|n⟩ = √n |n−1⟩`.
pub fn build_ladder(dim: usize) -> Result<(FockOperator, FockOperator)> {
    if dim < 2 {
        return Err(Error::Dimension(format!(
            "ladder needs dim >= 2, got {dim}"
        )));
    }
    let mode = Mode::unit();
    let a = ladder_matrix(&LadderPoly::annihilator(mode), dim);
    let ad = a.adjoint();
    Ok((
        FockOperator::from_parts(a, mode),
        FockOperator::from_parts(ad, mode),
    ))
}

/// Truncated `Q = √(ħ/2m)(a + a†)` and `P = i√(mħ/2)(a† − a)`.
pub fn build_qp(dim: usize, mass: f64, hbar: f64) -> Result<(FockOperator, FockOperator)> {
    if dim < 2 {
        return Err(Error::Dimension(format!("need dim >= 2, got {dim}")));
    }
    let mode = Mode::new(mass, hbar);
    check_mode(mode)?;
    let q = ladder_matrix(&LadderPoly::position(mode), dim);
    let p = ladder_matrix(&LadderPoly::momentum(mode), dim);
    Ok((
        FockOperator::from_parts(q, mode),
        FockOperator::from_parts(p, mode),
    ))
}

/// `⟨m| a†^j a^k |n⟩` summed over the polynomial, for `m, n < dim`.
///
/// Each monomial maps `|n⟩` to a multiple of `|n − k + j⟩`, so dropping the
/// components at or above `dim` is exactly the projection.
pub(crate) fn ladder_matrix(poly: &LadderPoly, dim: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, dim);
    for ((j, k), c) in poly.coefficients() {
        let (j, k) = (j as usize, k as usize);
        for n in k..dim {
            let target = n - k + j;
            if target >= dim {
                continue;
            }
            // √(n!/(n−k)!) · √(target!/(n−k)!)
            let mut w = 1.0f64;
            for i in (n - k + 1)..=n {
                w *= i as f64;
            }
            for i in (n - k + 1)..=target {
                w *= i as f64;
            }
            m[(target, n)] += c * w.sqrt();
        }
    }
    m
}
