//! Exact rational FDP tolerance.
//!
//! Every decision in this crate that involves the tolerance goes through
//! integer arithmetic: `⌊γ·i⌋`, `⌊γ·j/(1−γ)⌋` and the comparison `V > γ·R`.
//! Floating-point tolerances are snapped to the nearest simple fraction
//! before they enter the pipeline.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest distance allowed between a float tolerance and its rational snap.
pub const SNAP_TOLERANCE: f64 = 1e-12;

/// A tolerance `γ = num/den` with `0 ≤ γ < 1`, stored in lowest terms.
///
/// `γ = 0` is accepted; the exceedance probability then reduces to the
/// probability of `k` or more false rejections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GammaRational {
    num: u64,
    den: u64,
}

impl GammaRational {
    pub const ZERO: GammaRational = GammaRational { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidGamma("denominator must be positive".into()));
        }
        if num >= den {
            return Err(Error::InvalidGamma(format!(
                "{num}/{den} is not in [0, 1)"
            )));
        }
        let g = gcd(num, den);
        Ok(GammaRational {
            num: num / g,
            den: den / g,
        })
    }

    /// Snaps a float to the simplest continued-fraction convergent within
    /// [`SNAP_TOLERANCE`].
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || !(0.0..1.0).contains(&x) {
            return Err(Error::InvalidGamma(format!("{x} is not in [0, 1)")));
        }
        // Convergents h/k of the continued fraction expansion of x.
        let (mut h_prev, mut h) = (0u128, 1u128);
        let (mut k_prev, mut k) = (1u128, 0u128);
        let mut rest = x;
        for _ in 0..64 {
            let a = rest.floor();
            let a_int = a as u128;
            let h_next = a_int * h + h_prev;
            let k_next = a_int * k + k_prev;
            h_prev = h;
            h = h_next;
            k_prev = k;
            k = k_next;
            if k > 0 && (x - h as f64 / k as f64).abs() <= SNAP_TOLERANCE {
                break;
            }
            let frac = rest - a;
            if frac <= f64::EPSILON || k > 1_000_000_000_000 {
                break;
            }
            rest = 1.0 / frac;
        }
        if k == 0 || (x - h as f64 / k as f64).abs() > SNAP_TOLERANCE {
            return Err(Error::InvalidGamma(format!(
                "{x} has no rational approximation within {SNAP_TOLERANCE}"
            )));
        }
        GammaRational::new(h as u64, k as u64)
    }

    /// Parses `"a/b"` exactly or a decimal with snapping. The flag reports
    /// whether snapping was needed (decimal input).
    pub fn parse_reporting_snap(s: &str) -> Result<(Self, bool)> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let num = a
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::InvalidGamma(format!("bad numerator in {s:?}")))?;
            let den = b
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::InvalidGamma(format!("bad denominator in {s:?}")))?;
            return Ok((GammaRational::new(num, den)?, false));
        }
        let x = s
            .parse::<f64>()
            .map_err(|_| Error::InvalidGamma(format!("cannot parse {s:?}")))?;
        let g = GammaRational::from_f64(x)?;
        Ok((g, true))
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `⌊γ·i⌋`, exactly.
    pub fn floor_times(&self, i: u64) -> u64 {
        ((self.num as u128 * i as u128) / self.den as u128) as u64
    }

    /// `⌊γ·j/(1−γ)⌋`, exactly. `γ/(1−γ) = num/(den−num)`.
    pub fn floor_odds_times(&self, j: u64) -> u64 {
        ((self.num as u128 * j as u128) / (self.den - self.num) as u128) as u64
    }

    /// `V > γ·R` in exact arithmetic.
    pub fn is_exceeded_by(&self, v: u64, r: u64) -> bool {
        v as u128 * self.den as u128 > self.num as u128 * r as u128
    }
}

/// `⌊γ·i⌋`.
pub fn floor_gamma_times(g: GammaRational, i: u64) -> u64 {
    g.floor_times(i)
}

impl fmt::Display for GammaRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for GammaRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GammaRational::parse_reporting_snap(s).map(|(g, _)| g)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn g(num: u64, den: u64) -> GammaRational {
        GammaRational::new(num, den).unwrap()
    }

    #[test]
    fn floor_examples() {
        assert_eq!(floor_gamma_times(g(1, 10), 10), 1);
        assert_eq!(floor_gamma_times(g(1, 10), 9), 0);
        assert_eq!(floor_gamma_times(g(3, 10), 7), 2);
        assert_eq!(floor_gamma_times(GammaRational::ZERO, 1_000), 0);
    }

    #[test]
    fn floor_matches_rational_evaluation() {
        for gamma in [g(1, 10), g(1, 4), g(3, 10), g(1, 2)] {
            let r = Ratio::new(gamma.num(), gamma.den());
            for i in 0..=1_000_000u64 {
                let expected = (r * Ratio::from_integer(i)).floor().to_integer();
                assert_eq!(gamma.floor_times(i), expected, "gamma={gamma} i={i}");
            }
        }
    }

    #[test]
    fn odds_floor() {
        // 1/10 / (9/10) = 1/9
        let gamma = g(1, 10);
        assert_eq!(gamma.floor_odds_times(3), 0);
        assert_eq!(gamma.floor_odds_times(9), 1);
        assert_eq!(gamma.floor_odds_times(18), 2);
        // 3/4 / (1/4) = 3
        assert_eq!(g(3, 4).floor_odds_times(2), 6);
    }

    #[test]
    fn reduced_form() {
        let gamma = g(10, 100);
        assert_eq!((gamma.num(), gamma.den()), (1, 10));
        assert_eq!(g(0, 7), GammaRational::ZERO);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(GammaRational::new(1, 1).is_err());
        assert!(GammaRational::new(3, 2).is_err());
        assert!(GammaRational::new(0, 0).is_err());
        assert!(GammaRational::from_f64(1.0).is_err());
        assert!(GammaRational::from_f64(-0.1).is_err());
        assert!(GammaRational::from_f64(f64::NAN).is_err());
    }

    #[test]
    fn snapping() {
        assert_eq!(GammaRational::from_f64(0.1).unwrap(), g(1, 10));
        assert_eq!(GammaRational::from_f64(0.25).unwrap(), g(1, 4));
        assert_eq!(GammaRational::from_f64(1.0 / 3.0).unwrap(), g(1, 3));
        assert_eq!(GammaRational::from_f64(0.0).unwrap(), GammaRational::ZERO);
        let snapped = GammaRational::from_f64(0.123456).unwrap();
        assert!((snapped.to_f64() - 0.123456).abs() <= SNAP_TOLERANCE);
    }

    #[test]
    fn parsing() {
        assert_eq!("1/10".parse::<GammaRational>().unwrap(), g(1, 10));
        assert_eq!(
            GammaRational::parse_reporting_snap("3/10").unwrap(),
            (g(3, 10), false)
        );
        assert_eq!(
            GammaRational::parse_reporting_snap("0.3").unwrap(),
            (g(3, 10), true)
        );
        assert!("1/0".parse::<GammaRational>().is_err());
        assert!("abc".parse::<GammaRational>().is_err());
        assert_eq!(g(1, 20).to_string(), "1/20");
    }

    #[test]
    fn exceedance_comparison() {
        let gamma = g(1, 10);
        assert!(!gamma.is_exceeded_by(1, 10));
        assert!(gamma.is_exceeded_by(2, 10));
        assert!(GammaRational::ZERO.is_exceeded_by(1, 100));
        assert!(!GammaRational::ZERO.is_exceeded_by(0, 100));
    }
}
