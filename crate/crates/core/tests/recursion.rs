//! The constant-time gain recurrence against exact rational evaluations.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use swarmalloc::{Curve64, GainState64};

/// Majority-vote accuracy of `2k - 1` voters with accuracy `a / 100`, scaled by
/// `100^(2k - 1)` so it is an exact integer.
fn majority_scaled(a: u32, k: usize) -> BigUint {
    let n = 2 * k - 1;
    let (p, q) = (BigUint::from(a), BigUint::from(100 - a));
    let mut binom = BigUint::one();
    let mut total = BigUint::zero();
    for j in 0..=n {
        if j >= k {
            total += &binom * p.pow(j as u32) * q.pow((n - j) as u32);
        }
        binom = binom * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    total
}

fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    let shift = den.bits() as i64 - num.bits() as i64 + 80;
    let scaled = if shift >= 0 { num << shift as usize } else { num >> (-shift) as usize };
    (scaled / den).to_f64().unwrap() * 2f64.powi(-shift as i32)
}

fn majority(p: f64, k: usize) -> f64 {
    let a = (p * 100.0).round() as u32;
    let scale = BigInt::from(100u32).pow((2 * k - 1) as u32);
    ratio_to_f64(&majority_scaled(a, k).into(), &scale)
}

/// Exact `C(2k + 1) / C(2k - 1) - 1`.
fn exact_delta(p: f64, k: usize) -> f64 {
    let a = (p * 100.0).round() as u32;
    let lo = BigInt::from(majority_scaled(a, k)) * BigInt::from(10_000u32);
    let hi = BigInt::from(majority_scaled(a, k + 1));
    ratio_to_f64(&(hi - &lo), &lo)
}

/// Exact `C(2k + 1) - C(2k - 1)`.
fn exact_gain(p: f64, k: usize) -> f64 {
    let a = (p * 100.0).round() as u32;
    let lo = BigInt::from(majority_scaled(a, k)) * BigInt::from(10_000u32);
    let hi = BigInt::from(majority_scaled(a, k + 1));
    ratio_to_f64(&(hi - lo), &BigInt::from(100u32).pow((2 * k + 1) as u32))
}

const PS: [f64; 5] = [0.51, 0.55, 0.6, 0.75, 0.9];

#[test]
fn recurrence_matches_direct_ratio() {
    for p in PS {
        let mut state = GainState64::new(Curve64::saturating(p).unwrap()).unwrap();
        for k in 1..=200 {
            let want = exact_delta(p, k);
            let err = (state.current_delta - want).abs() / want;
            assert!(err <= 1e-10, "p = {p}, k = {k}: {} vs {want}", state.current_delta);
            state = state.advance();
        }
    }
}

#[test]
fn staircase_and_direct_values() {
    for p in PS {
        let c = Curve64::saturating(p).unwrap();
        for n in (1..=201).step_by(2) {
            let odd = c.evaluate(n).unwrap();
            let want = majority(p, (n + 1) / 2);
            assert!((odd - want).abs() <= 1e-12 * want.max(1e-300), "p = {p}, n = {n}");
            assert_eq!(c.evaluate(n + 1).unwrap(), odd);
        }
    }
}

#[test]
fn gains_decrease_monotonically() {
    for p in PS {
        let mut state = GainState64::new(Curve64::saturating(p).unwrap()).unwrap();
        let mut prev = state.current_delta;
        for _ in 0..500 {
            state = state.advance();
            assert!(state.current_delta <= prev);
            assert!(state.current_delta >= 0.0);
            prev = state.current_delta;
        }
    }
}

#[test]
fn saturates_towards_one() {
    for p in [0.6, 0.75, 0.9] {
        let c = Curve64::saturating(p).unwrap();
        assert!(c.evaluate(501).unwrap() > 1.0 - 1e-3);
        assert!(c.evaluate(501).unwrap() <= 1.0);
    }
}

#[test]
fn absolute_gain_matches_difference() {
    for p in PS {
        let c = Curve64::saturating(p).unwrap();
        for k in 1..60 {
            let want = exact_gain(p, k);
            let got = c.absolute_gain(k).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.max(1e-300) + 1e-16, "p = {p}, k = {k}");
        }
    }
}

#[test]
fn f32_tracks_f64() {
    let mut s32 = swarmalloc::GainState::<f32>::new(swarmalloc::Curve32::saturating(0.7).unwrap()).unwrap();
    let mut s64 = GainState64::new(Curve64::saturating(0.7).unwrap()).unwrap();
    for _ in 0..50 {
        assert!((s32.current_performance as f64 - s64.current_performance).abs() < 1e-5);
        s32 = s32.advance();
        s64 = s64.advance();
    }
}
