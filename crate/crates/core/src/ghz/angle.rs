use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// A relative phase stored as an exact dyadic fraction of a full turn.
///
/// The raw value counts units of `2π / 2^64`, so `π` is `2^63` and every
/// `π / 2^g` with `g <= 63` is represented exactly. Addition wraps, which is
/// precisely arithmetic modulo `2π`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Angle(u64);

impl Angle {
    pub const ZERO: Angle = Angle(0);
    pub const PI: Angle = Angle(1 << 63);
    pub const HALF_PI: Angle = Angle(1 << 62);

    /// Largest `g` for which `π / 2^g` is exact.
    pub const MAX_DYADIC_EXPONENT: u32 = 63;

    pub const fn from_raw(raw: u64) -> Self {
        Angle(raw)
    }

    pub const fn raw(self) -> u64 {
        self.0
    }

    /// `π / 2^g`, or `None` below the representable resolution.
    pub fn pi_over_pow2(g: u32) -> Option<Angle> {
        (g <= Self::MAX_DYADIC_EXPONENT).then(|| Angle(1u64 << (63 - g)))
    }

    /// `t · π` for an integer `t`.
    pub fn pi_multiple(t: i64) -> Angle {
        if t.rem_euclid(2) == 0 {
            Angle::ZERO
        } else {
            Angle::PI
        }
    }

    /// Nearest representable angle to `radians` (reduced mod 2π).
    pub fn from_radians(radians: f64) -> Angle {
        let turns = (radians / (2.0 * PI)).rem_euclid(1.0);
        // 2^64 * turns, rounded; the wrap at exactly 1.0 maps back to zero
        let scaled = (turns * 18_446_744_073_709_551_616.0).round();
        if scaled >= 18_446_744_073_709_551_616.0 {
            Angle::ZERO
        } else {
            Angle(scaled as u64)
        }
    }

    /// Value in radians, in `[0, 2π)`.
    pub fn radians(self) -> f64 {
        self.0 as f64 / 18_446_744_073_709_551_616.0 * 2.0 * PI
    }

    /// `cos²(θ/2)`, exact at `0` and `π`.
    pub fn cos_sq_half(self) -> f64 {
        match self {
            Angle::ZERO => 1.0,
            Angle::PI => 0.0,
            Angle::HALF_PI => 0.5,
            Angle(v) if v == 3 << 62 => 0.5,
            _ => {
                let c = (self.radians() / 2.0).cos();
                c * c
            }
        }
    }

    /// True when the angle is an integer multiple of `π`.
    pub fn is_pi_multiple(self) -> bool {
        self == Angle::ZERO || self == Angle::PI
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle(self.0.wrapping_add(rhs.0))
    }
}

impl Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle(self.0.wrapping_sub(rhs.0))
    }
}

impl Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle(self.0.wrapping_neg())
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Angle({:.6} rad)", self.radians())
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.radians())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_phases_compose_exactly() {
        let quarter = Angle::pi_over_pow2(1).unwrap();
        assert_eq!(quarter + quarter, Angle::PI);
        assert_eq!(Angle::PI + Angle::PI, Angle::ZERO);
        assert_eq!(Angle::ZERO - quarter - quarter, Angle::PI);
        assert_eq!(Angle::pi_over_pow2(0), Some(Angle::PI));
        assert_eq!(Angle::pi_over_pow2(64), None);
    }

    #[test]
    fn radians_round_trip() {
        for g in 0..20 {
            let a = Angle::pi_over_pow2(g).unwrap();
            assert!((a.radians() - PI / f64::from(1u32 << g)).abs() < 1e-15);
            assert_eq!(Angle::from_radians(a.radians()), a);
        }
        assert_eq!(Angle::from_radians(-PI), Angle::PI);
        assert_eq!(Angle::from_radians(2.0 * PI), Angle::ZERO);
    }

    #[test]
    fn cos_sq_half_values() {
        assert_eq!(Angle::ZERO.cos_sq_half(), 1.0);
        assert_eq!(Angle::PI.cos_sq_half(), 0.0);
        assert_eq!(Angle::HALF_PI.cos_sq_half(), 0.5);
        let eighth = Angle::pi_over_pow2(2).unwrap();
        let expected = (PI / 8.0).cos().powi(2);
        assert!((eighth.cos_sq_half() - expected).abs() < 1e-15);
    }
}
