//! Standard bivariate normal CDF.
//!
//! For `|ρ| < 0.925` the CDF is the independent product plus the integral of
//! `∂Φ₂/∂ρ` from `0` to `ρ`, taken in `θ = asin ρ` with Gauss–Legendre rules
//! of 6, 12 or 20 nodes depending on `|ρ|`. Closer to `±1` the integral is
//! taken from the degenerate end instead, after subtracting the leading
//! singular terms (Drezner–Wesolowsky with Genz's double-precision
//! refinements). `ρ = ±1` is closed-form.

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

use super::normal::norm_cdf;
use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

// (weight, node) pairs on [-1, 0); the rule is applied at ±node.
const GL6: [(f64, f64); 3] = [
    (0.171_324_492_379_170_5, -0.932_469_514_203_152_2),
    (0.360_761_573_048_138_4, -0.661_209_386_466_264_7),
    (0.467_913_934_572_690_4, -0.238_619_186_083_197_0),
];

const GL12: [(f64, f64); 6] = [
    (0.047_175_336_386_511_77, -0.981_560_634_246_719_1),
    (0.106_939_325_995_318_3, -0.904_117_256_370_475_0),
    (0.160_078_328_543_346_4, -0.769_902_674_194_305_0),
    (0.203_167_426_723_065_9, -0.587_317_954_286_617_1),
    (0.233_492_536_538_354_7, -0.367_831_498_998_180_2),
    (0.249_147_045_813_402_9, -0.125_233_408_511_469_2),
];

const GL20: [(f64, f64); 10] = [
    (0.017_614_007_139_152_12, -0.993_128_599_185_094_9),
    (0.040_601_429_800_386_94, -0.963_971_927_277_913_8),
    (0.062_672_048_334_109_06, -0.912_234_428_251_325_9),
    (0.083_276_741_576_704_75, -0.839_116_971_822_218_8),
    (0.101_930_119_817_240_4, -0.746_331_906_460_150_8),
    (0.118_194_531_961_518_4, -0.636_053_680_726_515_0),
    (0.131_688_638_449_176_6, -0.510_867_001_950_827_1),
    (0.142_096_109_318_382_1, -0.373_706_088_715_419_6),
    (0.149_172_986_472_603_7, -0.227_785_851_141_645_1),
    (0.152_753_387_130_725_9, -0.076_526_521_133_497_33),
];

fn rule(abs_rho: f64) -> &'static [(f64, f64)] {
    if abs_rho < 0.3 {
        &GL6
    } else if abs_rho < 0.75 {
        &GL12
    } else {
        &GL20
    }
}

/// `P(Z₁ ≤ a, Z₂ ≤ b)` for a standard bivariate normal with correlation
/// `rho`. Infinite limits are handled as limits.
pub fn bvn_cdf(a: f64, b: f64, rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("correlation {rho} is not in [-1, 1]")));
    }
    if a.is_nan() || b.is_nan() {
        return Err(Error::Domain("integration limit is NaN".into()));
    }
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if a == f64::INFINITY {
        return Ok(norm_cdf(b));
    }
    if b == f64::INFINITY {
        return Ok(norm_cdf(a));
    }
    if rho == 1.0 {
        return Ok(norm_cdf(a.min(b)));
    }
    if rho == -1.0 {
        // P(-b ≤ Z ≤ a)
        return Ok((norm_cdf(a) - norm_cdf(-b)).max(0.0));
    }
    Ok(upper_orthant(-a, -b, rho).clamp(0.0, 1.0))
}

/// `P(Z₁ > h, Z₂ > k)`; equals `P(Z₁ < −h, Z₂ < −k)`.
fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    let nodes = rule(r.abs());
    let mut hk = h * k;

    if r.abs() < 0.925 {
        let mut bvn = 0.0;
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for &(w, x) in nodes {
            for t in [x, -x] {
                let sn = (asr * (t + 1.0) / 2.0).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return bvn * asr / (2.0 * TWO_PI) + norm_cdf(-h) * norm_cdf(-k);
    }

    let mut k = k;
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    let mut bvn = 0.0;
    if r.abs() < 1.0 {
        let a_s = (1.0 - r) * (1.0 + r);
        let mut a = a_s.sqrt();
        let b_s = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-(b_s / a_s + hk) / 2.0).exp()
            * (1.0 - c * (b_s - a_s) * (1.0 - d * b_s / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
        if hk > -160.0 {
            let b = b_s.sqrt();
            bvn -= (-hk / 2.0).exp()
                * TWO_PI.sqrt()
                * norm_cdf(-b / a)
                * b
                * (1.0 - c * b_s * (1.0 - d * b_s / 5.0) / 3.0);
        }
        a /= 2.0;
        for &(w, x) in nodes {
            let xs = (a * (x + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            bvn += a
                * w
                * ((-b_s / (2.0 * xs) - hk / (1.0 + rs)).exp() / rs
                    - (-(b_s / xs + hk) / 2.0).exp() * (1.0 + c * xs * (1.0 + d * xs)));
            let xs = a_s * (1.0 - x).powi(2) / 4.0;
            let rs = (1.0 - xs).sqrt();
            bvn += a
                * w
                * (-(b_s / xs + hk) / 2.0).exp()
                * ((-hk * xs / (2.0 * (1.0 + rs).powi(2))).exp() / rs
                    - (1.0 + c * xs * (1.0 + d * xs)));
        }
        bvn = -bvn / TWO_PI;
    }
    if r > 0.0 {
        bvn + norm_cdf(-h.max(k))
    } else {
        let mut out = -bvn;
        if k > h {
            out += if h < 0.0 {
                norm_cdf(k) - norm_cdf(h)
            } else {
                norm_cdf(-h) - norm_cdf(-k)
            };
        }
        out
    }
}
