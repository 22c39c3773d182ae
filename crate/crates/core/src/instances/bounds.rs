//! Closed-form regret bounds.

use std::f64::consts::E;

/// Minimax lower bound `(e⁻⁴/4)·min(C_min^{−1/3} s^{1/3} n^{2/3}, √(dn))`.
pub fn lower_bound(n: f64, d: f64, s: f64, c_min: f64) -> f64 {
    let poor = c_min.powf(-1.0 / 3.0) * s.cbrt() * n.powf(2.0 / 3.0);
    let rich = (d * n).sqrt();
    E.powi(-4) / 4.0 * poor.min(rich)
}

/// Upper bound for explore-then-commit with `n1` exploration rounds:
/// `(2 log(2d) R_max)^{1/3} C_min^{−2/3} s^{2/3} n^{2/3} + 3nR_max·exp(−c1·n1)`.
pub fn estc_upper_bound(n: f64, d: f64, s: f64, r_max: f64, c_min: f64, n1: f64, c1: f64) -> f64 {
    (2.0 * (2.0 * d).ln() * r_max).cbrt()
        * c_min.powf(-2.0 / 3.0)
        * s.powf(2.0 / 3.0)
        * n.powf(2.0 / 3.0)
        + 3.0 * n * r_max * (-c1 * n1).exp()
}

/// Upper bound for restricted phased elimination:
/// `C·(s log d/(m² C_min) + √(9 φ_max log(Kn)/C_min)·√(sn))`.
#[allow(clippy::too_many_arguments)]
pub fn rpe_upper_bound(
    n: f64,
    d: f64,
    s: f64,
    m: f64,
    c_min: f64,
    phi_max: f64,
    k: f64,
    c: f64,
) -> f64 {
    c * (s * d.ln() / (m * m * c_min)
        + (9.0 * phi_max * (k * n).ln() / c_min).sqrt() * (s * n).sqrt())
}
