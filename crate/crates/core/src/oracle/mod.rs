//! Brute-force checks of the pointwise inequalities behind the error-rate
//! bounds, plus a literal re-implementation of the constants for
//! dual-implementation testing.
//!
//! Every check takes a [`SmallInstance`], runs the relevant procedure
//! directly and returns `Err` with a readable description on the first
//! violated inequality. The suites sweep exhaustive small grids and seeded
//! random instances and summarize the outcome as [`CheckRow`]s.

mod naive;
mod suites;

pub use naive::{naive_big_m, naive_constants, naive_m, naive_m_bar, naive_m_tilde, naive_scaling};
pub use suites::{constants_suite, lemma_suite, pairdist_suite, CheckRow, SuiteConfig};

use crate::engine::{step_down_count, step_up_count, stable_order};
use crate::error::{Error, Result};
use crate::gamma::GammaRational;
use crate::rates::kfdp_exceeds;

/// Largest `n` accepted by [`SmallInstance`]; keeps `lcm(1..=n₀)` in range.
pub const MAX_SMALL_N: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SmallInstance {
    pub p: Vec<f64>,
    pub is_null: Vec<bool>,
    /// `α₁ ≤ … ≤ αₙ`, not necessarily flattened below `k`.
    pub constants: Vec<f64>,
    pub gamma: GammaRational,
    pub k: usize,
    /// Level of the Lehmann–Romano constants used by the Simes check.
    pub alpha: f64,
}

impl SmallInstance {
    pub fn new(
        p: Vec<f64>,
        is_null: Vec<bool>,
        constants: Vec<f64>,
        gamma: GammaRational,
        k: usize,
        alpha: f64,
    ) -> Result<Self> {
        let n = p.len();
        if n == 0 || n > MAX_SMALL_N {
            return Err(Error::Config(format!("instance size {n} is not in [1, {MAX_SMALL_N}]")));
        }
        if is_null.len() != n {
            return Err(Error::LengthMismatch { what: "truth labels", got: is_null.len(), expected: n });
        }
        if constants.len() != n {
            return Err(Error::LengthMismatch { what: "constants", got: constants.len(), expected: n });
        }
        if let Some((index, &value)) = p.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidPValue { index, value });
        }
        if constants.iter().any(|a| !(*a > 0.0 && *a < 1.0)) || constants.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidConstants("constants must be nondecreasing in (0, 1)".into()));
        }
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha = {alpha} is not in (0, 1)")));
        }
        Ok(SmallInstance { p, is_null, constants, gamma, k, alpha })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn n0(&self) -> usize {
        self.is_null.iter().filter(|&&b| b).count()
    }
}

/// Sorted view of an instance: all p-values in ascending order with their
/// labels, and the null p-values on their own.
#[derive(Debug, Clone)]
pub(crate) struct View {
    pub sorted: Vec<f64>,
    pub sorted_null: Vec<bool>,
    pub nulls: Vec<f64>,
}

impl View {
    pub fn new(p: &[f64], is_null: &[bool]) -> Self {
        let order = stable_order(p);
        let sorted: Vec<f64> = order.iter().map(|&i| p[i]).collect();
        let sorted_null: Vec<bool> = order.iter().map(|&i| is_null[i]).collect();
        let nulls = sorted.iter().zip(&sorted_null).filter(|(_, &b)| b).map(|(&x, _)| x).collect();
        View { sorted, sorted_null, nulls }
    }

    pub fn n0(&self) -> usize {
        self.nulls.len()
    }

    /// `(R, V)` from the first `r` entries.
    fn split(&self, r: usize) -> (usize, usize) {
        (r, self.sorted_null[..r].iter().filter(|&&b| b).count())
    }
}

/// Index maps for one `(n, n₀, γ)`, from the literal set definitions.
#[derive(Debug, Clone)]
pub(crate) struct LiteralMaps {
    pub big_m: usize,
    /// `m(0..=M)`.
    pub m: Vec<usize>,
    /// `m̃(0..=n₀)`.
    pub m_tilde: Vec<usize>,
}

impl LiteralMaps {
    pub fn new(n: usize, n0: usize, gamma: GammaRational) -> Self {
        let big_m = naive_big_m(n, n0, gamma);
        LiteralMaps {
            big_m,
            m: (0..=big_m).map(|i| naive_m(n, n0, gamma, i)).collect(),
            m_tilde: (0..=n0).map(|i| naive_m_tilde(n, n0, gamma, i)).collect(),
        }
    }
}

fn describe(view: &View, constants: &[f64]) -> String {
    format!("sorted p = {:?}, null = {:?}, constants = {:?}", view.sorted, view.sorted_null, constants)
}

pub(crate) fn stepdown_bound(
    view: &View,
    constants: &[f64],
    gamma: GammaRational,
    k: usize,
    maps: &LiteralMaps,
) -> std::result::Result<(), String> {
    let (r, v) = view.split(step_down_count(&view.sorted, constants));
    let lhs = kfdp_exceeds(v, r, k, gamma) as usize;
    let n0 = view.n0();
    if n0 < k {
        return if lhs == 0 {
            Ok(())
        } else {
            Err(format!("exceedance with fewer than k nulls: {}", describe(view, constants)))
        };
    }
    let s = r - v;
    let level = gamma.floor_odds_times(s as u64) as usize + 1;
    let rhs = (1..=maps.big_m)
        .filter(|&i| {
            let w = i.max(k);
            level == i && view.nulls[w - 1] <= constants[w + maps.m[i] - 1]
        })
        .count();
    if lhs <= rhs {
        Ok(())
    } else {
        Err(format!("stepdown R = {r}, V = {v}: {lhs} > {rhs}; {}", describe(view, constants)))
    }
}

fn lcm_upto(n: usize) -> u128 {
    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    (1..=n as u128).fold(1, |acc, i| acc / gcd(acc, i) * i)
}

pub(crate) fn stepup_bound(
    view: &View,
    constants: &[f64],
    gamma: GammaRational,
    k: usize,
    maps: &LiteralMaps,
) -> std::result::Result<(), String> {
    let (r, v) = view.split(step_up_count(&view.sorted, constants));
    let exceeded = kfdp_exceeds(v, r, k, gamma);
    let n0 = view.n0();
    if n0 < k {
        return if exceeded {
            Err(format!("exceedance with fewer than k nulls: {}", describe(view, constants)))
        } else {
            Ok(())
        };
    }
    // t[i] = α_{m̃(i)}, i = 1..n₀
    let t: Vec<f64> = (0..=n0)
        .map(|i| if i == 0 { 0.0 } else { constants[maps.m_tilde[i] - 1] })
        .collect();
    let r2 = step_up_count(&view.nulls, &t[1..]);
    // all three sides multiplied by lcm(1..n₀) so they stay integers
    let l = lcm_upto(n0);
    let lhs = exceeded as u128 * l;
    let mut first = 0u128;
    let mut second = 0u128;
    for &pj in &view.nulls {
        for i in k..=n0 {
            if pj <= t[i] && r2 == i {
                first += l / i as u128;
            }
        }
        if pj <= t[k] && r2 >= k {
            second += l / k as u128;
        }
        for i in k + 1..=n0 {
            if t[i - 1] < pj && pj <= t[i] && r2 >= i {
                second += l / i as u128;
            }
        }
    }
    if lhs <= first && first <= second {
        Ok(())
    } else {
        Err(format!(
            "stepup R = {r}, V = {v}, R2 = {r2}: scaled sides {lhs}, {first}, {second}; {}",
            describe(view, constants)
        ))
    }
}

pub(crate) fn markov_order_stat(nulls: &[f64], ts: &[f64]) -> std::result::Result<(), String> {
    for &t in ts {
        let count = nulls.iter().filter(|&&x| x <= t).count();
        for (i, &x) in nulls.iter().enumerate() {
            let i = i + 1;
            if x <= t && i > count {
                return Err(format!("i = {i}, t = {t}: only {count} nulls at or below t in {nulls:?}"));
            }
        }
    }
    Ok(())
}

pub(crate) fn pairwise_order_stat(nulls: &[f64], ts: &[f64]) -> std::result::Result<(), String> {
    let n0 = nulls.len();
    for &t in ts {
        let mut pairs = 0usize;
        for j in 0..n0 {
            for jj in 0..n0 {
                if j != jj && nulls[j].max(nulls[jj]) <= t {
                    pairs += 1;
                }
            }
        }
        for i in 2..=n0 {
            if nulls[i - 1] <= t && i * (i - 1) > pairs {
                return Err(format!("i = {i}, t = {t}: {pairs} ordered pairs below t in {nulls:?}"));
            }
        }
    }
    Ok(())
}

/// Lehmann–Romano constants with `k = 1`.
pub(crate) fn lr_k1(n: usize, gamma: GammaRational, alpha: f64) -> Vec<f64> {
    (1..=n)
        .map(|i| {
            let g = naive::plain_floor(gamma, i) + 1;
            g as f64 * alpha / (n + g - i) as f64
        })
        .collect()
}

pub(crate) fn simes_containment(
    view: &View,
    lr: &[f64],
    gamma: GammaRational,
    alpha: f64,
) -> std::result::Result<(), String> {
    let n0 = view.n0();
    for r in [step_down_count(&view.sorted, lr), step_up_count(&view.sorted, lr)] {
        let (r, v) = view.split(r);
        if v >= gamma.floor_times(r as u64) as usize + 1 {
            // the constants and the Simes line are rounded separately, so a
            // p-value tied with both in exact arithmetic may miss by an ulp
            let line = |j: usize| j as f64 * alpha / n0 as f64 * (1.0 + 4.0 * f64::EPSILON);
            let hit = (1..=n0).any(|j| view.nulls[j - 1] <= line(j));
            if !hit {
                return Err(format!("R = {r}, V = {v} with no Simes crossing; {}", describe(view, lr)));
            }
        }
    }
    Ok(())
}

fn thresholds(inst: &SmallInstance) -> Vec<f64> {
    let mut ts: Vec<f64> = inst.p.iter().chain(&inst.constants).copied().collect();
    ts.extend([0.0, 0.005, 0.5, 0.995, 1.0]);
    ts
}

/// `I(V > max(γR, k−1))` against the `m(i)`-indexed sum, for the stepdown
/// procedure with the instance constants.
pub fn check_stepdown_count_bound(inst: &SmallInstance) -> std::result::Result<(), String> {
    let view = View::new(&inst.p, &inst.is_null);
    let maps = LiteralMaps::new(inst.n(), view.n0(), inst.gamma);
    stepdown_bound(&view, &inst.constants, inst.gamma, inst.k, &maps)
}

/// Both inequalities of the stepup chain through the auxiliary count `R̂₂`.
pub fn check_stepup_count_bound(inst: &SmallInstance) -> std::result::Result<(), String> {
    let view = View::new(&inst.p, &inst.is_null);
    let maps = LiteralMaps::new(inst.n(), view.n0(), inst.gamma);
    stepup_bound(&view, &inst.constants, inst.gamma, inst.k, &maps)
}

/// `i·I(P̂₍ᵢ₎ ≤ t) ≤ #{j : P̂ⱼ ≤ t}` for every `i` and every `t` among the
/// p-values, the constants and a few fixed points.
pub fn check_markov_order_stat(inst: &SmallInstance) -> std::result::Result<(), String> {
    let view = View::new(&inst.p, &inst.is_null);
    markov_order_stat(&view.nulls, &thresholds(inst))
}

/// `i(i−1)·I(P̂₍ᵢ₎ ≤ t) ≤ #{(j, j′) : j ≠ j′, max(P̂ⱼ, P̂ⱼ′) ≤ t}` for `2 ≤ i ≤ n₀`.
pub fn check_pairwise_order_stat(inst: &SmallInstance) -> std::result::Result<(), String> {
    let view = View::new(&inst.p, &inst.is_null);
    pairwise_order_stat(&view.nulls, &thresholds(inst))
}

/// Runs both Lehmann–Romano procedures (`k = 1`, level `alpha`); whenever
/// `V ≥ ⌊γR⌋ + 1` some null order statistic must cross the Simes line.
pub fn check_simes_containment(inst: &SmallInstance) -> std::result::Result<(), String> {
    let view = View::new(&inst.p, &inst.is_null);
    let lr = lr_k1(inst.n(), inst.gamma, inst.alpha);
    simes_containment(&view, &lr, inst.gamma, inst.alpha)
}

/// `⌊γ(i + m(i))⌋ + 1 = i` for `1 ≤ i ≤ M`. Holds for `γ ≤ 1/2`.
pub fn check_level_attainment(n: usize, n0: usize, gamma: GammaRational) -> std::result::Result<(), String> {
    let maps = LiteralMaps::new(n, n0, gamma);
    for i in 1..=maps.big_m {
        let level = gamma.floor_times((i + maps.m[i]) as u64) as usize + 1;
        if level != i {
            return Err(format!("n = {n}, n0 = {n0}, gamma = {gamma}: level {level} at i = {i}"));
        }
    }
    Ok(())
}

/// `⌊γ·m̃(i)⌋ + 1 ≤ i` for `1 ≤ i ≤ n₀`.
pub fn check_stepup_index_bound(n: usize, n0: usize, gamma: GammaRational) -> std::result::Result<(), String> {
    let maps = LiteralMaps::new(n, n0, gamma);
    for i in 1..=n0 {
        let level = gamma.floor_times(maps.m_tilde[i] as u64) as usize + 1;
        if level > i {
            return Err(format!("n = {n}, n0 = {n0}, gamma = {gamma}: level {level} at i = {i}"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(num: u64, den: u64) -> GammaRational {
        GammaRational::new(num, den).unwrap()
    }

    fn instance(p: &[f64], nulls: &[bool], constants: &[f64], k: usize) -> SmallInstance {
        SmallInstance::new(p.to_vec(), nulls.to_vec(), constants.to_vec(), g(1, 10), k, 0.05).unwrap()
    }

    #[test]
    fn nothing_rejected_is_vacuous() {
        let inst = instance(&[0.9, 0.8, 0.7], &[true, true, false], &[0.01, 0.02, 0.03], 1);
        assert!(check_stepdown_count_bound(&inst).is_ok());
        assert!(check_stepup_count_bound(&inst).is_ok());
        assert!(check_simes_containment(&inst).is_ok());
    }

    #[test]
    fn exceedance_witness_is_covered() {
        // two nulls rejected out of two: V = 2 > γR, S = 0, level 1
        let inst = instance(&[0.001, 0.002, 0.9], &[true, true, false], &[0.01, 0.02, 0.03], 1);
        let view = View::new(&inst.p, &inst.is_null);
        let (r, v) = view.split(step_down_count(&view.sorted, &inst.constants));
        assert_eq!((r, v), (2, 2));
        assert!(check_stepdown_count_bound(&inst).is_ok());
        assert!(check_stepup_count_bound(&inst).is_ok());
    }

    #[test]
    fn order_statistic_bounds_are_tight_at_equality() {
        let inst = instance(&[0.1, 0.2, 0.9], &[true, true, true], &[0.01, 0.02, 0.03], 1);
        assert!(check_markov_order_stat(&inst).is_ok());
        assert!(check_pairwise_order_stat(&inst).is_ok());
        assert!(markov_order_stat(&[0.1, 0.2], &[0.2]).is_ok());
        assert!(pairwise_order_stat(&[0.1, 0.2], &[0.2]).is_ok());
    }

    #[test]
    fn unsorted_inputs_trip_the_checks() {
        assert!(markov_order_stat(&[0.3, 0.1], &[0.3]).is_ok());
        assert!(markov_order_stat(&[0.1, 0.3, 0.2], &[0.2]).is_err());
        assert!(pairwise_order_stat(&[0.5, 0.1], &[0.1]).is_err());
    }

    #[test]
    fn simes_line_absorbs_rounding_ties() {
        // 3 * a / 3 rounds below a, the stepup constant for i = 3
        let a = 0.845515541120762;
        assert!(3.0 * a / 3.0 < a);
        let inst = SmallInstance::new(vec![a; 3], vec![true; 3], vec![0.2, 0.4, a], g(1, 4), 1, a).unwrap();
        assert!(check_simes_containment(&inst).is_ok());
    }

    #[test]
    fn lcm_values() {
        assert_eq!(lcm_upto(1), 1);
        assert_eq!(lcm_upto(4), 12);
        assert_eq!(lcm_upto(8), 840);
    }

    #[test]
    fn map_identities_on_small_cells() {
        for gamma in [g(1, 20), g(1, 10), g(1, 4), g(3, 10), g(1, 2)] {
            for n in 1..=40 {
                for n0 in 1..=n {
                    check_level_attainment(n, n0, gamma).unwrap();
                    check_stepup_index_bound(n, n0, gamma).unwrap();
                }
            }
        }
    }

    #[test]
    fn rejects_bad_instances() {
        let ok = || (vec![0.1], vec![true], vec![0.05]);
        let (p, l, c) = ok();
        assert!(SmallInstance::new(p, l, c, g(1, 10), 0, 0.05).is_err());
        let (_, l, c) = ok();
        assert!(SmallInstance::new(vec![1.5], l, c, g(1, 10), 1, 0.05).is_err());
        let (p, l, _) = ok();
        assert!(SmallInstance::new(p, l, vec![1.0], g(1, 10), 1, 0.05).is_err());
        assert!(SmallInstance::new(vec![], vec![], vec![], g(1, 10), 1, 0.05).is_err());
    }
}
