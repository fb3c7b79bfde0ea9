//! Pairwise-aware bounds `C(β)` for arbitrary dependence and the
//! calibration `C(β*) = α`.
//!
//! Both bounds split the marginal telescope at a point `K`: terms below `K`
//! use the marginal law of a null p-value, terms above it use the pairwise
//! law `F`. The best split is chosen per `n₀`, then the worst `n₀` is taken.

use rayon::prelude::*;

use super::maps::{index_maps_with, m_star, IndexMaps};
use super::rescaled::{sd_marginal_prefix, su_marginal_prefix};
use super::template::Template;
use super::{check_template_len, max_over_n0, per_n0, ConstantsReport, Family, Params};
use crate::error::{Error, Result};
use crate::pairdist::{validate_pairwise_f, PairwiseNullF};
use crate::rates::CriticalConstants;

/// `|C(β) − α|` accepted by the calibration, approached from below.
pub const CALIBRATION_TOLERANCE: f64 = 1e-9;
/// Bracket width at which bisection stops.
pub const WIDTH_TOLERANCE: f64 = 1e-12;
pub const SEARCH_LOW: f64 = 1e-12;
pub const SEARCH_HIGH: f64 = 1.0 - 1e-12;

/// `F(α′ᵢ, α′ⱼ)` for every pair of template indices.
#[derive(Debug, Clone)]
pub struct FGrid {
    size: usize,
    vals: Vec<f64>,
}

impl FGrid {
    pub fn new(values: &[f64], f: &dyn PairwiseNullF) -> Self {
        let size = values.len();
        let rows: Vec<Vec<f64>> = (0..size)
            .into_par_iter()
            .map(|i| (i..size).map(|j| f.joint(values[i], values[j])).collect())
            .collect();
        let mut vals = vec![0.0; size * size];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, x) in row.into_iter().enumerate() {
                let j = i + off;
                vals[i * size + j] = x;
                vals[j * size + i] = x;
            }
        }
        FGrid { size, vals }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.vals[i * self.size + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedValue {
    pub value: f64,
    pub argmax_n0: usize,
    /// `(n₀, K)` with the smallest minimizing `K`.
    pub chosen_split: Vec<(usize, usize)>,
}

fn argmin(values: impl Iterator<Item = (usize, f64)>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, v) in values {
        if v < best.1 {
            best = (k, v);
        }
    }
    best
}

fn sd_term(values: &[f64], mp: &IndexMaps, grid: &FGrid) -> (usize, f64) {
    let big_m = mp.big_m;
    let n0 = mp.n0 as f64;
    let pairs = n0 * (n0 - 1.0);
    let w = |i: usize| i.max(mp.k) as f64;
    let d = |i: usize| grid.get(mp.m_bar[i], mp.m_bar[i]);
    let marginal = sd_marginal_prefix(values, mp);
    // suffix[i] = Σ_{j=i}^{M} n₀(n₀−1)(D_j − D_{j−1})/(w_j(w_j − 1)), for i ≥ 2
    let mut suffix = vec![0.0; big_m + 2];
    for i in (2..=big_m).rev() {
        suffix[i] = suffix[i + 1] + pairs * (d(i) - d(i - 1)) / (w(i) * (w(i) - 1.0));
    }
    argmin((1..=big_m).map(|k_split| {
        let mut v = marginal[k_split];
        if k_split + 2 <= big_m {
            v += suffix[k_split + 2];
        }
        if big_m > k_split {
            let wk = w(k_split + 1);
            v += pairs * d(k_split + 1) / (wk * (wk - 1.0));
            v -= n0 * grid.get(mp.m_bar[k_split], mp.m_bar[k_split + 1]) / wk;
        }
        (k_split, v)
    }))
}

fn su_term(values: &[f64], mp: &IndexMaps, grid: &FGrid) -> (usize, f64) {
    let n0 = mp.n0;
    let k = mp.k;
    let nf = n0 as f64;
    let pairs = nf * (nf - 1.0);
    let idx = |r: usize| mp.m_tilde[r];
    let a = |r: usize| values[idx(r)];
    let ff = |r: usize, s: usize| grid.get(idx(r), idx(s));
    let marginal = su_marginal_prefix(values, mp);
    // suffix[r] = Σ_{q=r}^{n₀} T_q, for r ≥ k + 1
    let mut suffix = vec![0.0; n0 + 2];
    for r in (k + 1..=n0).rev() {
        let rf = r as f64;
        let mut cross = 0.0;
        for s in r + 1..=n0 {
            let g = ff(r, s) - ff(r - 1, s) - ff(r, s - 1) + ff(r - 1, s - 1);
            cross += g / (rf * s as f64);
        }
        let t = nf * (a(r) - a(r - 1)) / (rf * rf)
            + pairs * cross
            + pairs * (ff(r, r) - ff(r, r - 1)) / (rf * rf);
        suffix[r] = suffix[r + 1] + t;
    }
    argmin((k..=n0).map(|k_split| (k_split, marginal[k_split] + suffix[k_split + 1])))
}

fn evaluate(
    values: &[f64],
    params: &Params,
    grid: &FGrid,
    term: fn(&[f64], &IndexMaps, &FGrid) -> (usize, f64),
) -> CalibratedValue {
    let star = m_star(params.n, params.gamma);
    let per = per_n0(params, |n0| {
        let mp = index_maps_with(params.n, n0, params.gamma, params.k, &star);
        term(values, &mp, grid)
    });
    let flat: Vec<(usize, f64)> = per.iter().map(|&(n0, (_, v))| (n0, v)).collect();
    let (value, argmax_n0) = max_over_n0(&flat);
    CalibratedValue {
        value,
        argmax_n0,
        chosen_split: per.iter().map(|&(n0, (k, _))| (n0, k)).collect(),
    }
}

/// The stepdown bound at a fixed template: max over `n₀` of the min over
/// `1 ≤ K ≤ M` of
///
/// ```text
/// Σ_{i≤K} n₀(a_i − a_{i−1})/w_i
///   + Σ_{i=K+2}^{M} n₀(n₀−1)(D_i − D_{i−1})/(w_i(w_i−1))
///   + [M > K]·(n₀(n₀−1)D_{K+1}/(w_{K+1}(w_{K+1}−1)) − n₀F(a_K, a_{K+1})/w_{K+1})
/// ```
///
/// with `a_i = α′_{m̄(i)}`, `D_i = F(a_i, a_i)` and `w_i = i ∨ k`.
pub fn c3_sd_value(values: &[f64], params: &Params, f: &dyn PairwiseNullF) -> Result<CalibratedValue> {
    check_template_len(values, params)?;
    Ok(evaluate(values, params, &FGrid::new(values, f), sd_term))
}

/// The stepup bound at a fixed template: max over `n₀` of the min over
/// `k ≤ K ≤ n₀` of
///
/// ```text
/// n₀a_k/k + Σ_{r=k+1}^{K} n₀(a_r − a_{r−1})/r
///   + Σ_{r=K+1}^{n₀} [ n₀(a_r − a_{r−1})/r²
///                      + Σ_{s>r} n₀(n₀−1)G(r, s)/(rs)
///                      + n₀(n₀−1)(F(a_r, a_r) − F(a_r, a_{r−1}))/r² ]
/// ```
///
/// with `a_r = α′_{m̃(r)}` and `G` the `F`-mass of
/// `(a_{r−1}, a_r] × (a_{s−1}, a_s]`.
pub fn c3_su_value(values: &[f64], params: &Params, f: &dyn PairwiseNullF) -> Result<CalibratedValue> {
    check_template_len(values, params)?;
    Ok(evaluate(values, params, &FGrid::new(values, f), su_term))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub beta: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Bisection for `C(β) = target` on `[SEARCH_LOW, SEARCH_HIGH]`.
///
/// Stops once `C(β) ∈ [target − CALIBRATION_TOLERANCE, target]` or the
/// bracket is narrower than [`WIDTH_TOLERANCE`], returning the lower end so
/// that `C(β*) ≤ target`. Each midpoint must lie between the values at the
/// bracket ends; otherwise `C` is not monotone and the search aborts.
pub fn calibrate_beta(target: f64, mut c: impl FnMut(f64) -> Result<f64>) -> Result<Calibration> {
    let (mut lo, mut hi) = (SEARCH_LOW, SEARCH_HIGH);
    let (mut c_lo, mut c_hi) = (c(lo)?, c(hi)?);
    let mut evaluations = 2;
    if !(c_lo <= target && target <= c_hi) {
        return Err(Error::Unattainable {
            target,
            low: c_lo,
            high: c_hi,
        });
    }
    let accept = |v: f64| v <= target && target - v <= CALIBRATION_TOLERANCE;
    if accept(c_hi) {
        return Ok(Calibration {
            beta: hi,
            value: c_hi,
            evaluations,
        });
    }
    while hi - lo > WIDTH_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let v = c(mid)?;
        evaluations += 1;
        if !(c_lo <= v && v <= c_hi) {
            return Err(Error::NonMonotone {
                beta: mid,
                value: v,
                lower: c_lo,
                upper: c_hi,
            });
        }
        if accept(v) {
            return Ok(Calibration {
                beta: mid,
                value: v,
                evaluations,
            });
        }
        if v <= target {
            lo = mid;
            c_lo = v;
        } else {
            hi = mid;
            c_hi = v;
        }
    }
    Ok(Calibration {
        beta: lo,
        value: c_lo,
        evaluations,
    })
}

fn calibrated(
    family: Family,
    template: &Template,
    params: &Params,
    f: &dyn PairwiseNullF,
    term: fn(&[f64], &IndexMaps, &FGrid) -> (usize, f64),
) -> Result<ConstantsReport> {
    if template.n() != params.n {
        return Err(Error::LengthMismatch {
            what: "template",
            got: template.n(),
            expected: params.n,
        });
    }
    validate_pairwise_f(f)?;
    let at = |beta: f64| -> Result<CalibratedValue> {
        let values = template.values(beta)?;
        check_template_len(&values, params)?;
        Ok(evaluate(&values, params, &FGrid::new(&values, f), term))
    };
    let cal = calibrate_beta(params.alpha, |beta| at(beta).map(|v| v.value))?;
    let value = at(cal.beta)?;
    let values = template.values(cal.beta)?;
    Ok(ConstantsReport {
        family,
        constants: CriticalConstants::flattened(values[1..].to_vec(), params.k)?,
        scaling: Some(value.value),
        argmax_n0: Some(value.argmax_n0),
        chosen_split: value.chosen_split,
        beta_star: Some(cal.beta),
    })
}

/// Stepdown constants `α′_{i∨k}(β*)` with the stepdown bound at `β*` equal to `α`.
pub fn c3_sd(template: &Template, params: &Params, f: &dyn PairwiseNullF) -> Result<ConstantsReport> {
    calibrated(Family::CalibratedSd, template, params, f, sd_term)
}

/// Stepup constants `α′_{i∨k}(β*)` with the stepup bound at `β*` equal to `α`.
pub fn c3_su(template: &Template, params: &Params, f: &dyn PairwiseNullF) -> Result<ConstantsReport> {
    calibrated(Family::CalibratedSu, template, params, f, su_term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::rescaled::{c2_sd, c2_su};
    use crate::constants::template::TemplateFamily;
    use crate::gamma::GammaRational;
    use crate::pairdist::PairwiseModel;

    fn g(num: u64, den: u64) -> GammaRational {
        GammaRational::new(num, den).unwrap()
    }

    fn models() -> [PairwiseModel; 4] {
        [
            PairwiseModel::Independence,
            PairwiseModel::Comonotone,
            PairwiseModel::EquicorrelatedTwoSided { rho: 0.5 },
            PairwiseModel::EquicorrelatedTwoSided { rho: 0.9 },
        ]
    }

    #[test]
    fn bounded_by_the_marginal_telescope() {
        for gamma in [g(1, 10), g(1, 4)] {
            for n in [5, 12, 30] {
                for k in 1..=3 {
                    let p = Params::new(n, gamma, k, 0.05).unwrap();
                    let v = Template::lr(n, gamma).values(0.05).unwrap();
                    let sd2 = c2_sd(&v, &p).unwrap().scaling.unwrap();
                    let su2 = c2_su(&v, &p).unwrap().scaling.unwrap();
                    for f in models() {
                        assert!(c3_sd_value(&v, &p, &f).unwrap().value <= sd2);
                        assert!(c3_su_value(&v, &p, &f).unwrap().value <= su2);
                    }
                }
            }
        }
    }

    #[test]
    fn vanishes_with_the_scale() {
        let gamma = g(1, 10);
        let p = Params::new(10, gamma, 1, 0.05).unwrap();
        let v = Template::lr(10, gamma).values(1e-12).unwrap();
        for f in models() {
            assert!(c3_sd_value(&v, &p, &f).unwrap().value < 1e-10);
            assert!(c3_su_value(&v, &p, &f).unwrap().value < 1e-10);
        }
    }

    #[test]
    fn product_measure_rectangles() {
        let gamma = g(1, 10);
        let v = Template::lr(8, gamma).values(0.3).unwrap();
        let grid = FGrid::new(&v, &PairwiseModel::Independence);
        for r in 1..=8 {
            for s in 1..=8 {
                let rect = grid.get(r, s) - grid.get(r - 1, s) - grid.get(r, s - 1) + grid.get(r - 1, s - 1);
                let prod = (v[r] - v[r - 1]) * (v[s] - v[s - 1]);
                assert!((rect - prod).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bisection_on_a_linear_function() {
        for c in [0.5, 1.0, 3.0, 17.0] {
            let cal = calibrate_beta(0.05, |b| Ok(c * b)).unwrap();
            assert!((cal.beta - 0.05 / c).abs() < 1e-9);
            assert!(cal.value <= 0.05 && 0.05 - cal.value <= CALIBRATION_TOLERANCE);
        }
    }

    #[test]
    fn bisection_errors() {
        assert!(matches!(
            calibrate_beta(0.05, |b| Ok(0.01 * b)),
            Err(Error::Unattainable { .. })
        ));
        assert!(matches!(
            calibrate_beta(0.05, |b| Ok(0.06 + b)),
            Err(Error::Unattainable { .. })
        ));
        // rises then falls: the first midpoint already exceeds the upper end
        let bump = |b: f64| Ok(if b < 0.9 { 10.0 * b } else { 0.1 });
        assert!(matches!(calibrate_beta(0.05, bump), Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn calibration_hits_the_target() {
        let gamma = g(1, 10);
        let p = Params::new(10, gamma, 1, 0.05).unwrap();
        let t = Template::lr(10, gamma);
        let f = PairwiseModel::Independence;
        for (report, value) in [
            (c3_sd(&t, &p, &f).unwrap(), c3_sd_value as fn(&[f64], &Params, &dyn PairwiseNullF) -> Result<CalibratedValue>),
            (c3_su(&t, &p, &f).unwrap(), c3_su_value),
        ] {
            let beta = report.beta_star.unwrap();
            let c = value(&t.values(beta).unwrap(), &p, &f).unwrap().value;
            assert!(c <= 0.05 && 0.05 - c <= 1e-9, "{c}");
            assert_eq!(report.scaling, Some(c));
            let expected = t.values(beta).unwrap();
            for i in 1..=10 {
                assert_eq!(report.constants.alpha(i), expected[i]);
            }
        }
    }

    #[test]
    fn calibrated_constants_dominate_telescoped_ones() {
        // equal bounds force equal constants up to the calibration tolerance
        let slack = 1.0 - CALIBRATION_TOLERANCE / 0.05 - 1e-12;
        for gamma in [g(1, 10), g(1, 4)] {
            for template in [TemplateFamily::Lr, TemplateFamily::Bh] {
                let t = Template::new(template, 15, gamma).unwrap();
                let p = Params::new(15, gamma, 1, 0.05).unwrap();
                let v = t.values(0.05).unwrap();
                for f in [PairwiseModel::Independence, PairwiseModel::EquicorrelatedTwoSided { rho: 0.5 }] {
                    let sd = c3_sd(&t, &p, &f).unwrap();
                    let sd2 = c2_sd(&v, &p).unwrap();
                    let su = c3_su(&t, &p, &f).unwrap();
                    let su2 = c2_su(&v, &p).unwrap();
                    for i in 1..=15 {
                        assert!(sd.constants.alpha(i) >= sd2.constants.alpha(i) * slack);
                        assert!(su.constants.alpha(i) >= su2.constants.alpha(i) * slack);
                    }
                }
            }
        }
    }

    #[test]
    fn splits_are_recorded_per_n0() {
        let gamma = g(1, 4);
        let p = Params::new(12, gamma, 2, 0.05).unwrap();
        let v = Template::lr(12, gamma).values(0.05).unwrap();
        let r = c3_su_value(&v, &p, &PairwiseModel::Independence).unwrap();
        assert_eq!(r.chosen_split.len(), 11);
        for &(n0, k_split) in &r.chosen_split {
            assert!((2..=n0).contains(&k_split));
        }
        let r = c3_sd_value(&v, &p, &PairwiseModel::Independence).unwrap();
        for &(n0, k_split) in &r.chosen_split {
            let mp = crate::constants::index_maps(12, n0, gamma, 2).unwrap();
            assert!((1..=mp.big_m).contains(&k_split));
        }
    }
}
