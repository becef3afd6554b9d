use super::{FockOperator, FockSpace, LadderPoly, PhasePoint};
use crate::{Result, C64};

/// Closed-form unit-mass overlap `⟨p1,q1|p2,q2⟩`.
pub fn overlap_analytic(pt1: PhasePoint, pt2: PhasePoint, hbar: f64) -> C64 {
    let dp = pt1.p - pt2.p;
    let dq = pt1.q - pt2.q;
    let phase = (pt1.p + pt2.p) * (pt1.q - pt2.q) / (2.0 * hbar);
    let modulus = (-(dp * dp + dq * dq) / (4.0 * hbar)).exp();
    C64::from_polar(modulus, phase)
}

/// Normal symbol `⟨p,q|H|p,q⟩` evaluated with a coherent state at the
/// operator's own truncation.
pub fn symbol_normal(h: &FockOperator, pt: PhasePoint) -> Result<C64> {
    let space = FockSpace::new(h.dim(), h.mode())?;
    let v = space.coherent_state(pt)?;
    Ok(h.expectation(&v))
}

/// Mixed symbol `H(p;q) = ⟨p|H|q⟩/⟨p|q⟩`, read off from the `P`-left /
/// `Q`-right form of the operator.
pub fn symbol_pq(h: &LadderPoly, p: f64, q: f64) -> C64 {
    h.to_pq().mixed_symbol(p, q)
}
