//! Brute-force minimizer of the 1D two-phase kink profile, independent of the
//! finite-element path.

use crate::error::{Error, Result};
use crate::nfunction::EnergyLaw;

/// Energy of the piecewise-linear profile from `−a` at 0 through zero at `t`
/// to `b` at 1. Overflow of the law counts as `+∞`.
pub fn kink_energy(law: &EnergyLaw, a: f64, b: f64, gamma_plus: f64, gamma_minus: f64, t: f64) -> f64 {
    let left = law.value(a / t).map(|v| t * v);
    let right = law.value(b / (1.0 - t)).map(|v| (1.0 - t) * v);
    match (left, right) {
        (Ok(l), Ok(r)) => l + r + t * gamma_minus + (1.0 - t) * gamma_plus,
        _ => f64::INFINITY,
    }
}

/// Returns `(t_star, energy_star)`: the best of `grid_points` uniform interior
/// points, then of `grid_points` points refined around it. Ties go to the
/// smallest `t`.
pub fn oracle_1d(
    a: f64,
    b: f64,
    gamma_plus: f64,
    gamma_minus: f64,
    law: &EnergyLaw,
    grid_points: usize,
) -> Result<(f64, f64)> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::Domain(format!("boundary magnitudes must be positive, got a={a}, b={b}")));
    }
    if grid_points == 0 {
        return Err(Error::Domain("grid_points must be >= 1".into()));
    }
    let e = |t: f64| kink_energy(law, a, b, gamma_plus, gamma_minus, t);
    let n = grid_points;
    let spacing = 1.0 / (n as f64 + 1.0);
    let scan = |lo: f64, step: f64, best: &mut (f64, f64)| {
        for i in 0..n {
            let t = lo + step * (i as f64);
            if t <= 0.0 || t >= 1.0 {
                continue;
            }
            let v = e(t);
            if v < best.1 || (v == best.1 && t < best.0) {
                *best = (t, v);
            }
        }
    };
    let mut best = (f64::NAN, f64::INFINITY);
    scan(spacing, spacing, &mut best);
    if best.0.is_nan() {
        return Err(Error::Domain("kink energy is infinite at every grid point".into()));
    }
    let lo = best.0 - spacing;
    let step = 2.0 * spacing / (n.max(2) as f64 - 1.0);
    scan(lo, step, &mut best);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_data_gives_midpoint() {
        let (t, _) = oracle_1d(0.3, 0.3, 1.0, 1.0, &EnergyLaw::exponential(), 1001).unwrap();
        assert!((t - 0.5).abs() < 1e-9);
    }

    #[test]
    fn expensive_plus_phase_shrinks() {
        let (t, _) = oracle_1d(0.2, 0.2, 5.0, 0.0, &EnergyLaw::exponential(), 10_000).unwrap();
        assert!(t > 0.5);
    }

    #[test]
    fn rejects_nonpositive_data() {
        assert!(oracle_1d(0.0, 0.2, 1.0, 1.0, &EnergyLaw::exponential(), 10).is_err());
        assert!(oracle_1d(0.2, -1.0, 1.0, 1.0, &EnergyLaw::exponential(), 10).is_err());
    }

    #[test]
    fn overflowing_profiles_are_skipped() {
        let e = kink_energy(&EnergyLaw::exponential(), 100.0, 1.0, 0.0, 0.0, 1e-3);
        assert_eq!(e, f64::INFINITY);
    }
}
