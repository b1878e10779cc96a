use expfb::{EnergyLaw, Order};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn law(k: u32) -> EnergyLaw {
    EnergyLaw::truncated(k)
}

/// Φ_k summed from the highest power down, with explicit powers and factorials.
fn series(k: u32, s: f64) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    (1..=k).rev().map(|i| s.powi(2 * i as i32) / fact(i)).sum()
}

proptest! {
    #[test]
    fn matches_factorial_series(k in 1u32..30, s in -3.0f64..3.0) {
        let v = law(k).value(s).unwrap();
        let r = series(k, s);
        prop_assert!((v - r).abs() <= 1e-13 * r.max(1e-300) + 1e-300, "{v} vs {r}");
    }

    #[test]
    fn even(k in 1u32..20, s in 0.0f64..5.0) {
        prop_assert_eq!(law(k).value(s).unwrap(), law(k).value(-s).unwrap());
        let inf = EnergyLaw::exponential();
        prop_assert_eq!(inf.value(s).unwrap(), inf.value(-s).unwrap());
    }

    #[test]
    fn truncation_is_monotone(k in 1u32..40, s in -4.0f64..4.0) {
        let a = law(k).value(s).unwrap();
        let b = law(k + 1).value(s).unwrap();
        let c = EnergyLaw::exponential().value(s).unwrap();
        prop_assert!(a <= b && b <= c, "{a} {b} {c}");
    }

    #[test]
    fn convex(k in prop_oneof![Just(0u32), 1u32..12], s in -3.0f64..3.0, t in -3.0f64..3.0, lam in 0.0f64..1.0) {
        let l = if k == 0 { EnergyLaw::exponential() } else { law(k) };
        let mid = l.value(lam * s + (1.0 - lam) * t).unwrap();
        let chord = lam * l.value(s).unwrap() + (1.0 - lam) * l.value(t).unwrap();
        prop_assert!(mid <= chord * (1.0 + 1e-14) + 1e-15, "{mid} > {chord}");
    }

    #[test]
    fn ratio_bounds(k in 1u32..25, s in 1e-3f64..4.0) {
        let (_, r2) = law(k).ellipticity_ratios(s).unwrap();
        let tol = 1e-12;
        prop_assert!(r2 >= 2.0 - tol && r2 <= 2.0 * k as f64 + tol, "k={k} s={s} r2={r2}");
    }

    #[test]
    fn infinite_r1_is_one_plus_two_s_squared(s in 1e-4f64..5.0) {
        let (r1, _) = EnergyLaw::exponential().ellipticity_ratios(s).unwrap();
        let exact = 1.0 + 2.0 * s * s;
        prop_assert!((r1 - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn g1_scaling(k in 1u32..10, s in 0.05f64..2.0, t in 0.05f64..3.0) {
        let l = law(k);
        let base = l.value(s).unwrap();
        let scaled = l.value(t * s).unwrap();
        let lo = t.powi(2).min(t.powi(2 * k as i32));
        let hi = t.powi(2).max(t.powi(2 * k as i32));
        prop_assert!(scaled >= lo * base * (1.0 - 1e-12) && scaled <= hi * base * (1.0 + 1e-12));
    }
}

#[test]
fn derivative_matches_central_differences_at_second_order() {
    for l in [law(1), law(3), law(8), EnergyLaw::exponential()] {
        for &s in &[0.1, 0.7, 1.3, 2.0] {
            let d = l.derivative(s).unwrap();
            let err = |h: f64| {
                let fd = (l.value(s + h).unwrap() - l.value(s - h).unwrap()) / (2.0 * h);
                (d - fd).abs()
            };
            let (e1, e2) = (err(1e-3), err(5e-4));
            if e1 < 1e-9 * d.abs().max(1.0) {
                // Exact up to rounding (low-degree polynomials).
                continue;
            }
            let ratio = e1 / e2;
            assert!((3.5..4.5).contains(&ratio), "{:?} s={s} ratio {ratio}", l.order);
        }
    }
}

#[test]
fn zero_at_origin_only() {
    for l in [law(1), law(5), EnergyLaw::exponential()] {
        assert_eq!(l.value(0.0).unwrap(), 0.0);
        assert!(l.value(1e-3).unwrap() > 0.0);
        assert_eq!(l.flux([0.0, 0.0]).unwrap(), [0.0, 0.0]);
    }
}

#[test]
fn monotonicity_gap_positive_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for l in [law(1), law(4), EnergyLaw::exponential()] {
        let mut min_scaled = f64::INFINITY;
        for _ in 0..100_000 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let y = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            if x == y {
                continue;
            }
            let gap = l.monotonicity_gap(x, y).unwrap();
            assert!(gap > 0.0, "{:?} {x:?} {y:?} gap {gap}", l.order);
            let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
            min_scaled = min_scaled.min(gap / d2);
        }
        // Empirical lower constant: the flux Jacobian is at least 2·I.
        assert!(min_scaled >= 2.0 * (1.0 - 1e-9), "{:?} min gap/|x-y|² = {min_scaled}", l.order);
    }
}

#[test]
fn overflow_past_cap() {
    let l = EnergyLaw::new(Order::Infinite, 700.0).unwrap();
    assert!(l.value(26.5).is_err());
    assert!(l.value(26.4).is_ok());
}
