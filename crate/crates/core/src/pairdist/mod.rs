//! Common pairwise joint distribution `F(u, v) = P(P̂ᵢ ≤ u, P̂ⱼ ≤ v)` of two
//! null p-values.
//!
//! The pairwise-aware constant families take any [`PairwiseNullF`]. Three
//! models ship with the crate: independence, comonotone p-values, and the
//! two-sided p-values of equicorrelated standard normals.

mod bvn;
mod normal;

pub use bvn::bvn_cdf;
pub use normal::{norm_cdf, norm_pdf, norm_quantile, norm_sf, two_sided_p, upper_quantile};

use std::fmt;

use crate::error::{Error, Result};

/// A joint CDF of two uniform null p-values.
pub trait PairwiseNullF: Send + Sync {
    fn joint(&self, u: f64, v: f64) -> f64;

    fn describe(&self) -> String;
}

impl<T: PairwiseNullF + ?Sized> PairwiseNullF for &T {
    fn joint(&self, u: f64, v: f64) -> f64 {
        (**self).joint(u, v)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Built-in pairwise models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairwiseModel {
    /// `F(u, v) = uv`.
    Independence,
    /// `F(u, v) = min(u, v)`.
    Comonotone,
    /// Two-sided p-values of a standard bivariate normal pair with
    /// correlation `rho`.
    EquicorrelatedTwoSided { rho: f64 },
}

impl PairwiseModel {
    pub fn equicorrelated(rho: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::Domain(format!("correlation {rho} is not in [-1, 1]")));
        }
        Ok(PairwiseModel::EquicorrelatedTwoSided { rho })
    }
}

impl PairwiseNullF for PairwiseModel {
    fn joint(&self, u: f64, v: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let v = v.clamp(0.0, 1.0);
        match *self {
            PairwiseModel::Independence => u * v,
            PairwiseModel::Comonotone => u.min(v),
            PairwiseModel::EquicorrelatedTwoSided { rho } => two_sided_joint(u, v, rho),
        }
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PairwiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairwiseModel::Independence => f.write_str("independence"),
            PairwiseModel::Comonotone => f.write_str("comonotone"),
            PairwiseModel::EquicorrelatedTwoSided { rho } => write!(f, "equicorrelated(rho={rho})"),
        }
    }
}

/// A user-supplied evaluator.
pub struct FnPairwise<G> {
    name: String,
    f: G,
}

impl<G: Fn(f64, f64) -> f64 + Send + Sync> FnPairwise<G> {
    pub fn new(name: impl Into<String>, f: G) -> Self {
        FnPairwise {
            name: name.into(),
            f,
        }
    }
}

impl<G: Fn(f64, f64) -> f64 + Send + Sync> PairwiseNullF for FnPairwise<G> {
    fn joint(&self, u: f64, v: f64) -> f64 {
        (self.f)(u, v)
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

fn two_sided_joint(u: f64, v: f64, rho: f64) -> f64 {
    if u <= 0.0 || v <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return v;
    }
    if v >= 1.0 {
        return u;
    }
    if rho == 1.0 || rho == -1.0 {
        // |Z₁| = |Z₂|
        return u.min(v);
    }
    let a = upper_quantile(u / 2.0);
    let b = upper_quantile(v / 2.0);
    // P(|Z₁| ≥ a, |Z₂| ≥ b) = 2Φ₂(−a, −b; ρ) + 2Φ₂(−a, −b; −ρ)
    let same = bvn_cdf(-a, -b, rho).expect("finite limits and |rho| < 1");
    let opposite = bvn_cdf(-a, -b, -rho).expect("finite limits and |rho| < 1");
    (2.0 * (same + opposite)).clamp(0.0, u.min(v))
}

/// `P(|Z₁| ≥ z_{u/2}, |Z₂| ≥ z_{v/2})` for correlation `rho`.
pub fn two_sided_equicorr_f(u: f64, v: f64, rho: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("({u}, {v}) is not in the unit square")));
    }
    Ok(PairwiseModel::equicorrelated(rho)?.joint(u, v))
}

/// `F(u | v) = F(u, v)/v`, clamped to `[0, 1]`.
pub fn conditional_f(u: f64, v: f64, f: &dyn PairwiseNullF) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("conditioning value {v} must be positive")));
    }
    Ok((f.joint(u, v) / v).clamp(0.0, 1.0))
}

const SPOT_GRID: [f64; 12] = [
    0.0, 0.001, 0.01, 0.05, 0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95, 1.0,
];

/// Spot-checks the copula properties of `f` on a coarse grid: zero and
/// uniform margins, symmetry, Fréchet bounds and nonnegative rectangles.
pub fn validate_pairwise_f(f: &dyn PairwiseNullF) -> Result<()> {
    const TOL: f64 = 1e-8;
    let bad = |what: String| Err(Error::Domain(format!("{} is not a valid pairwise null distribution: {what}", f.describe())));
    let g = |u, v| f.joint(u, v);
    for &u in &SPOT_GRID {
        if !g(u, 0.0).is_finite() || g(u, 0.0).abs() > TOL || g(0.0, u).abs() > TOL {
            return bad(format!("F({u}, 0) != 0"));
        }
        if (g(u, 1.0) - u).abs() > TOL || (g(1.0, u) - u).abs() > TOL {
            return bad(format!("F({u}, 1) != {u}"));
        }
        for &v in &SPOT_GRID {
            let x = g(u, v);
            if !x.is_finite() {
                return bad(format!("F({u}, {v}) is not finite"));
            }
            if (x - g(v, u)).abs() > TOL {
                return bad(format!("F({u}, {v}) != F({v}, {u})"));
            }
            if x < (u + v - 1.0).max(0.0) - TOL || x > u.min(v) + TOL {
                return bad(format!("F({u}, {v}) = {x} violates the Frechet bounds"));
            }
        }
    }
    for w in SPOT_GRID.windows(2) {
        for z in SPOT_GRID.windows(2) {
            let rect = g(w[1], z[1]) - g(w[0], z[1]) - g(w[1], z[0]) + g(w[0], z[0]);
            if rect < -TOL {
                return bad(format!("negative mass {rect} on [{}, {}] x [{}, {}]", w[0], w[1], z[0], z[1]));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid50() -> Vec<f64> {
        (0..=49).map(|i| i as f64 / 49.0).collect()
    }

    fn models() -> Vec<PairwiseModel> {
        let mut m = vec![PairwiseModel::Independence, PairwiseModel::Comonotone];
        for rho in [0.0, 0.1, 0.5, 0.9] {
            m.push(PairwiseModel::EquicorrelatedTwoSided { rho });
        }
        m
    }

    #[test]
    fn copula_invariants_on_grid() {
        let grid = grid50();
        for model in models() {
            validate_pairwise_f(&model).unwrap();
            for &u in &grid {
                assert_eq!(model.joint(u, 0.0), 0.0);
                assert!((model.joint(u, 1.0) - u).abs() < 1e-8, "{model} margin at {u}");
                for &v in &grid {
                    let x = model.joint(u, v);
                    assert!((x - model.joint(v, u)).abs() < 1e-10);
                    assert!(x >= (u + v - 1.0).max(0.0) - 1e-10);
                    assert!(x <= u.min(v) + 1e-10);
                }
            }
            for w in grid.windows(2) {
                for z in grid.windows(2) {
                    let rect = model.joint(w[1], z[1]) - model.joint(w[0], z[1])
                        - model.joint(w[1], z[0])
                        + model.joint(w[0], z[0]);
                    assert!(rect >= -1e-10, "{model}: rect {rect}");
                }
            }
        }
        assert_eq!(PairwiseModel::Comonotone.joint(1.0, 1.0), 1.0);
    }

    #[test]
    fn zero_correlation_factorises() {
        let grid = grid50();
        for &u in &grid {
            for &v in &grid {
                let x = two_sided_equicorr_f(u, v, 0.0).unwrap();
                assert!((x - u * v).abs() < 1e-9, "u={u} v={v} x={x}");
            }
        }
    }

    #[test]
    fn near_perfect_correlation_is_comonotone() {
        for &(u, v) in &[(0.05, 0.05), (0.01, 0.2), (0.3, 0.7), (0.5, 0.5)] {
            let x = two_sided_equicorr_f(u, v, 1.0 - 1e-8).unwrap();
            assert!((x - f64::min(u, v)).abs() < 1e-4, "u={u} v={v} x={x}");
        }
        assert_eq!(two_sided_equicorr_f(0.2, 0.4, 1.0).unwrap(), 0.2);
    }

    #[test]
    fn increasing_in_correlation() {
        let grid = [0.001, 0.01, 0.05, 0.2, 0.5, 0.9];
        let rhos = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99];
        for &u in &grid {
            for &v in &grid {
                let vals: Vec<f64> = rhos
                    .iter()
                    .map(|&r| two_sided_equicorr_f(u, v, r).unwrap())
                    .collect();
                assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-12), "u={u} v={v} {vals:?}");
            }
        }
    }

    /// Tail-region quadrature: `P(|Z₁| ≥ a, |Z₂| ≥ b) = 4 ∫_a^∞ φ(x) [Φ̄-mix] dx`
    /// written via the conditional law `Z₂ | Z₁ = x ~ N(ρx, 1 − ρ²)`.
    fn two_sided_oracle(u: f64, v: f64, rho: f64) -> f64 {
        let a = upper_quantile(u / 2.0);
        let b = upper_quantile(v / 2.0);
        let s = (1.0 - rho * rho).sqrt();
        let inner = |x: f64| {
            // P(|Z₂| ≥ b | Z₁ = x)
            norm_sf((b - rho * x) / s) + norm_cdf((-b - rho * x) / s)
        };
        // integrate over x ≥ a and x ≤ -a; symmetric so double the upper part
        let f = |t: f64| {
            // x = a + t/(1-t), t in [0,1)
            if t >= 1.0 {
                return 0.0;
            }
            let x = a + t / (1.0 - t);
            norm_pdf(x) * inner(x) / ((1.0 - t) * (1.0 - t))
        };
        let n = 20_000;
        let h = 1.0 / n as f64;
        // composite Simpson
        let mut acc = f(0.0) + f(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        2.0 * acc * h / 3.0
    }

    #[test]
    fn tail_quadrature_pin() {
        let got = two_sided_equicorr_f(0.05, 0.05, 0.5).unwrap();
        let want = two_sided_oracle(0.05, 0.05, 0.5);
        assert!((got - want).abs() < 1e-9, "got={got} want={want}");
        // 25-digit value from an arbitrary-precision quadrature
        assert!((got - 0.009_253_785_795_799_5).abs() < 1e-12, "{got}");
        let cond = conditional_f(0.05, 0.05, &PairwiseModel::EquicorrelatedTwoSided { rho: 0.5 }).unwrap();
        assert!((cond - got / 0.05).abs() < 1e-15);
        for &(u, v, rho) in &[(0.01, 0.2, 0.3), (0.3, 0.1, 0.8), (0.002, 0.002, 0.1)] {
            let got = two_sided_equicorr_f(u, v, rho).unwrap();
            let want = two_sided_oracle(u, v, rho);
            assert!((got - want).abs() < 1e-9, "u={u} v={v} rho={rho} got={got} want={want}");
        }
    }

    #[test]
    fn conditional_examples() {
        let ind = PairwiseModel::Independence;
        assert!((conditional_f(0.3, 0.2, &ind).unwrap() - 0.3).abs() < 1e-15);
        let como = PairwiseModel::Comonotone;
        assert_eq!(conditional_f(0.3, 0.2, &como).unwrap(), 1.0);
        assert!(conditional_f(0.3, 0.0, &ind).is_err());
    }

    #[test]
    fn rejects_invalid_user_distributions() {
        let not_uniform = FnPairwise::new("u*v*0.9", |u: f64, v: f64| 0.9 * u * v);
        assert!(validate_pairwise_f(&not_uniform).is_err());
        let asymmetric = FnPairwise::new("asym", |u: f64, v: f64| u * v * (1.0 + 0.1 * (u - v) * (1.0 - u) * (1.0 - v)));
        assert!(validate_pairwise_f(&asymmetric).is_err());
        let ok = FnPairwise::new("product", |u: f64, v: f64| u * v);
        assert!(validate_pairwise_f(&ok).is_ok());
        assert!(two_sided_equicorr_f(1.2, 0.1, 0.0).is_err());
        assert!(PairwiseModel::equicorrelated(1.5).is_err());
    }
}
