//! Sign convention and the reward-signed hinge surrogate.

use crate::error::{Error, Result};

/// `+1` when `u > 0`, `-1` otherwise (zero maps to `-1`).
pub fn sign(u: f64) -> Result<i8> {
    if !u.is_finite() {
        return Err(Error::InvalidInput(format!("sign of non-finite value {u}")));
    }
    Ok(sign_unchecked(u))
}

#[inline]
pub(crate) fn sign_unchecked(u: f64) -> i8 {
    if u > 0.0 {
        1
    } else {
        -1
    }
}

/// Surrogate loss on the margin `u = a * f(x)`.
///
/// Non-negative rewards are penalised with the ordinary hinge `[1 - u]_+`;
/// negative rewards with the mirrored hinge `[1 + u]_+`, which charges a
/// rule for agreeing with a treatment that went badly.
pub fn modified_hinge(u: f64, reward: f64) -> Result<f64> {
    if !u.is_finite() || !reward.is_finite() {
        return Err(Error::InvalidInput(format!(
            "modified hinge needs finite arguments, got u={u}, r={reward}"
        )));
    }
    Ok(hinge_unchecked(u, reward))
}

#[inline]
pub(crate) fn hinge_unchecked(u: f64, reward: f64) -> f64 {
    if reward >= 0.0 {
        (1.0 - u).max(0.0)
    } else {
        (1.0 + u).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_examples() {
        assert_eq!(sign(0.5).unwrap(), 1);
        assert_eq!(sign(0.0).unwrap(), -1);
        assert_eq!(sign(-0.0).unwrap(), -1);
        assert_eq!(sign(-2.0).unwrap(), -1);
        assert!(sign(f64::NAN).is_err());
        assert!(sign(f64::INFINITY).is_err());
    }

    #[test]
    fn hinge_examples() {
        assert_eq!(modified_hinge(0.0, 2.0).unwrap(), 1.0);
        assert_eq!(modified_hinge(1.5, 2.0).unwrap(), 0.0);
        assert_eq!(modified_hinge(0.5, -3.0).unwrap(), 1.5);
        assert_eq!(modified_hinge(-1.0, -3.0).unwrap(), 0.0);
        // tie at zero reward takes the ordinary hinge
        assert_eq!(modified_hinge(0.25, 0.0).unwrap(), 0.75);
        assert!(modified_hinge(f64::NAN, 1.0).is_err());
    }

    fn grid() -> impl Iterator<Item = f64> {
        (0..=600).map(|i| -3.0 + i as f64 * 0.01)
    }

    #[test]
    fn nonnegative_reward_is_standard_hinge() {
        for u in grid() {
            for r in [0.0, 0.3, 7.0] {
                assert_eq!(modified_hinge(u, r).unwrap(), (1.0 - u).max(0.0));
            }
        }
    }

    #[test]
    fn dominates_zero_one_quantities() {
        for u in grid() {
            for r in [-4.0, -0.1, 0.0, 0.1, 4.0] {
                let zero_one = if r >= 0.0 {
                    (u <= 0.0) as u8 as f64
                } else {
                    (u > 0.0) as u8 as f64
                };
                let l = modified_hinge(u, r).unwrap();
                assert!(l >= zero_one && l >= 0.0, "u={u} r={r}");
            }
        }
    }

    #[test]
    fn single_kink_with_unit_slopes() {
        let h = 1e-6;
        let slope =
            |u: f64, r: f64| (modified_hinge(u + h, r).unwrap() - modified_hinge(u - h, r).unwrap()) / (2.0 * h);
        for u in grid().filter(|u| (u.abs() - 1.0).abs() > 1e-3) {
            let pos = slope(u, 1.0);
            let neg = slope(u, -1.0);
            let want_pos = if u < 1.0 { -1.0 } else { 0.0 };
            let want_neg = if u > -1.0 { 1.0 } else { 0.0 };
            assert!((pos - want_pos).abs() < 1e-6, "u={u}");
            assert!((neg - want_neg).abs() < 1e-6, "u={u}");
        }
        // one-sided slopes either side of the kinks
        let right = |u: f64, r: f64| (modified_hinge(u + h, r).unwrap() - modified_hinge(u, r).unwrap()) / h;
        let left = |u: f64, r: f64| (modified_hinge(u, r).unwrap() - modified_hinge(u - h, r).unwrap()) / h;
        assert!((left(1.0, 1.0) + 1.0).abs() < 1e-6 && right(1.0, 1.0).abs() < 1e-6);
        assert!(left(-1.0, -1.0).abs() < 1e-6 && (right(-1.0, -1.0) - 1.0).abs() < 1e-6);
    }
}
