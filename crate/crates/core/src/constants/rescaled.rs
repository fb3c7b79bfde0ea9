//! Families obtained by dividing a template by a worst-case constant.

use super::maps::{index_maps_with, m_star, IndexMaps};
use super::template::lr_template;
use super::{check_template_len, max_over_n0, per_n0, rescale, ConstantsReport, Family, Params};
use crate::error::{Error, Result};
use crate::pairdist::{conditional_f, validate_pairwise_f, PairwiseNullF};
use crate::rates::CriticalConstants;

/// Lehmann–Romano constants at level `α`, flattened to order `k`.
pub fn lr_constants(params: &Params) -> Result<ConstantsReport> {
    let values = lr_template(params.n, params.gamma, params.alpha)?;
    Ok(ConstantsReport {
        family: Family::Lr,
        constants: CriticalConstants::flattened(values, params.k)?,
        scaling: None,
        argmax_n0: None,
        chosen_split: Vec::new(),
        beta_star: None,
    })
}

fn maps_for(params: &Params) -> impl Fn(usize) -> IndexMaps + Sync + '_ {
    let star = m_star(params.n, params.gamma);
    move |n0| index_maps_with(params.n, n0, params.gamma, params.k, &star)
}

fn report(family: Family, values: &[f64], params: &Params, per: Vec<(usize, f64)>) -> Result<ConstantsReport> {
    let (c, argmax) = max_over_n0(&per);
    Ok(ConstantsReport {
        family,
        constants: rescale(values, params, c)?,
        scaling: Some(c),
        argmax_n0: Some(argmax),
        chosen_split: Vec::new(),
        beta_star: None,
    })
}

/// `max over n₀, 1 ≤ i ≤ M` of `n₀·α′_{m̄(i)}/(i ∨ k)`; stepdown under
/// arbitrary dependence.
pub fn c1_sd(values: &[f64], params: &Params) -> Result<ConstantsReport> {
    check_template_len(values, params)?;
    let maps = maps_for(params);
    let per = per_n0(params, |n0| {
        let mp = maps(n0);
        (1..=mp.big_m)
            .map(|i| n0 as f64 * values[mp.m_bar[i]] / i.max(params.k) as f64)
            .fold(f64::NEG_INFINITY, f64::max)
    });
    report(Family::MaxSd, values, params, per)
}

/// `max over n₀, k ≤ i ≤ n₀` of `n₀·α′_{m̃(i)}/i`; stepup under arbitrary
/// dependence.
pub fn c1_su(values: &[f64], params: &Params) -> Result<ConstantsReport> {
    check_template_len(values, params)?;
    let maps = maps_for(params);
    let per = per_n0(params, |n0| {
        let mp = maps(n0);
        (params.k..=n0)
            .map(|i| n0 as f64 * values[mp.m_tilde[i]] / i as f64)
            .fold(f64::NEG_INFINITY, f64::max)
    });
    report(Family::MaxSu, values, params, per)
}

/// Prefix sums `P[K] = Σ_{i=1}^{K} n₀(a_i − a_{i−1})/(i ∨ k)` for
/// `a_i = α′_{m̄(i)}`, `K = 0..=M`.
pub(crate) fn sd_marginal_prefix(values: &[f64], mp: &IndexMaps) -> Vec<f64> {
    let n0 = mp.n0 as f64;
    let mut out = Vec::with_capacity(mp.big_m + 1);
    let mut acc = 0.0;
    out.push(acc);
    for i in 1..=mp.big_m {
        let d = values[mp.m_bar[i]] - values[mp.m_bar[i - 1]];
        acc += n0 * d / i.max(mp.k) as f64;
        out.push(acc);
    }
    out
}

/// Prefix sums `P[K] = n₀a_k/k + Σ_{r=k+1}^{K} n₀(a_r − a_{r−1})/r` for
/// `a_r = α′_{m̃(r)}`, `K = k..=n₀`; entries below `k` are zero.
///
/// The bound is usually written with a separate `n₀a_{k−1}/k` term and the
/// sum starting at `r = k`; the two `a_{k−1}` contributions cancel.
pub(crate) fn su_marginal_prefix(values: &[f64], mp: &IndexMaps) -> Vec<f64> {
    let n0 = mp.n0 as f64;
    let k = mp.k;
    let a = |r: usize| values[mp.m_tilde[r]];
    let mut out = vec![0.0; mp.n0 + 1];
    let mut acc = n0 * a(k) / k as f64;
    out[k] = acc;
    for r in k + 1..=mp.n0 {
        acc += n0 * (a(r) - a(r - 1)) / r as f64;
        out[r] = acc;
    }
    out
}

/// `max over n₀` of `n₀ Σ_{i=1}^{M} (α′_{m̄(i)} − α′_{m̄(i−1)})/(i ∨ k)`.
pub fn c2_sd(values: &[f64], params: &Params) -> Result<ConstantsReport> {
    check_template_len(values, params)?;
    let maps = maps_for(params);
    let per = per_n0(params, |n0| {
        let mp = maps(n0);
        sd_marginal_prefix(values, &mp)[mp.big_m]
    });
    report(Family::SumSd, values, params, per)
}

/// `max over n₀` of `n₀(α′_{m̃(k)}/k + Σ_{i=k+1}^{n₀} (α′_{m̃(i)} − α′_{m̃(i−1)})/i)`.
pub fn c2_su(values: &[f64], params: &Params) -> Result<ConstantsReport> {
    check_template_len(values, params)?;
    let maps = maps_for(params);
    let per = per_n0(params, |n0| {
        let mp = maps(n0);
        su_marginal_prefix(values, &mp)[n0]
    });
    report(Family::SumSu, values, params, per)
}

/// The bracket `(n₀ − 1)[F(β_k|β_k)/(k−1) + Σ_{l=k}^{n₀−1} (F(β_{l+1}|β_k) − F(β_l|β_k))/l]`
/// with `βᵢ = iα/n₀`.
pub(crate) fn pairwise_term(n0: usize, k: usize, alpha: f64, f: &dyn PairwiseNullF) -> Result<f64> {
    let beta = |i: usize| i as f64 * alpha / n0 as f64;
    let bk = beta(k);
    let mut acc = conditional_f(bk, bk, f)? / (k - 1) as f64;
    let mut prev = conditional_f(beta(k), bk, f)?;
    for l in k..n0 {
        let next = conditional_f(beta(l + 1), bk, f)?;
        acc += (next - prev) / l as f64;
        prev = next;
    }
    Ok((n0 - 1) as f64 * acc)
}

/// Lehmann–Romano constants divided by `C ∧ 1`, where `C` bounds the
/// kFDP exceedance of the plain constants given the pairwise null
/// distribution. Requires `k ≥ 2`.
pub fn c_pairwise_lr(params: &Params, f: &dyn PairwiseNullF) -> Result<ConstantsReport> {
    if params.k < 2 {
        return Err(Error::Config(
            "the pairwise family needs k >= 2 (its bound divides by k - 1)".into(),
        ));
    }
    validate_pairwise_f(f)?;
    let per: Vec<(usize, Result<f64>)> = per_n0(params, |n0| pairwise_term(n0, params.k, params.alpha, f));
    let per = per
        .into_iter()
        .map(|(n0, v)| v.map(|v| (n0, v)))
        .collect::<Result<Vec<_>>>()?;
    let (c, argmax) = max_over_n0(&per);
    let shrink = c.min(1.0);
    if !(shrink > 0.0) {
        return Err(Error::Domain(format!("pairwise constant {c} is not positive")));
    }
    let values = lr_template(params.n, params.gamma, params.alpha)?
        .into_iter()
        .map(|a| a / shrink)
        .collect();
    Ok(ConstantsReport {
        family: Family::Pairwise,
        constants: CriticalConstants::flattened(values, params.k)?,
        scaling: Some(c),
        argmax_n0: Some(argmax),
        chosen_split: Vec::new(),
        beta_star: None,
    })
}
