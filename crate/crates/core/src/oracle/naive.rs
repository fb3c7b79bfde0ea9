//! Literal re-implementation of every constants family: plain loops, maps
//! recomputed from their set definitions with rational floors, no caching.

use num_rational::Ratio;

use crate::constants::{Family, Params, Template};
use crate::error::{Error, Result};
use crate::gamma::GammaRational;
use crate::pairdist::PairwiseNullF;

fn floor_ratio(num: u64, den: u64) -> u64 {
    Ratio::new(num, den).floor().to_integer()
}

/// `⌊γj/(1−γ)⌋`.
fn odds_floor(gamma: GammaRational, j: usize) -> usize {
    floor_ratio(gamma.num() * j as u64, gamma.den() - gamma.num()) as usize
}

/// `⌊γj⌋`.
pub(crate) fn plain_floor(gamma: GammaRational, j: usize) -> usize {
    floor_ratio(gamma.num() * j as u64, gamma.den()) as usize
}

pub fn naive_big_m(n: usize, n0: usize, gamma: GammaRational) -> usize {
    n0.min(odds_floor(gamma, n - n0) + 1)
}

pub fn naive_m(n: usize, n0: usize, gamma: GammaRational, i: usize) -> usize {
    if i == 0 {
        return 0;
    }
    (0..=n - n0).filter(|&j| odds_floor(gamma, j) + 1 <= i).max().unwrap_or(0)
}

pub fn naive_m_tilde(n: usize, n0: usize, gamma: GammaRational, i: usize) -> usize {
    if i == 0 {
        return 0;
    }
    let star = (1..=n).filter(|&j| plain_floor(gamma, j) + 1 <= i).max().unwrap_or(0);
    star.min(i + n - n0)
}

pub fn naive_m_bar(n: usize, n0: usize, gamma: GammaRational, k: usize, i: usize) -> usize {
    if i == 0 {
        0
    } else {
        i.max(k) + naive_m(n, n0, gamma, i)
    }
}

/// The scaling constant of `family` for template values `α′₀..α′ₙ`
/// (ignored by `pairwise`); `None` for `lr`.
pub fn naive_scaling(
    family: Family,
    params: &Params,
    values: &[f64],
    f: Option<&dyn PairwiseNullF>,
) -> Result<Option<f64>> {
    let n = params.n;
    let k = params.k;
    let gamma = params.gamma;
    let hi = params.n0_max.unwrap_or(n);
    let need_f = || f.ok_or_else(|| Error::Config("missing pairwise distribution".into()));
    let mut best = f64::NEG_INFINITY;
    for n0 in k..=hi {
        let big_m = naive_big_m(n, n0, gamma);
        let mb = |i: usize| naive_m_bar(n, n0, gamma, k, i);
        let mt = |i: usize| naive_m_tilde(n, n0, gamma, i);
        let nf = n0 as f64;
        let value = match family {
            Family::Lr => return Ok(None),
            Family::MaxSd => {
                let mut v = f64::NEG_INFINITY;
                for i in 1..=big_m {
                    v = v.max(nf * values[mb(i)] / i.max(k) as f64);
                }
                v
            }
            Family::MaxSu => {
                let mut v = f64::NEG_INFINITY;
                for i in k..=n0 {
                    v = v.max(nf * values[mt(i)] / i as f64);
                }
                v
            }
            Family::SumSd => {
                let mut s = 0.0;
                for i in 1..=big_m {
                    s += (values[mb(i)] - values[mb(i - 1)]) / i.max(k) as f64;
                }
                nf * s
            }
            Family::SumSu => {
                let mut s = values[mt(k)] / k as f64;
                for i in k + 1..=n0 {
                    s += (values[mt(i)] - values[mt(i - 1)]) / i as f64;
                }
                nf * s
            }
            Family::Pairwise => {
                let f = need_f()?;
                if k < 2 {
                    return Err(Error::Config("pairwise family needs k >= 2".into()));
                }
                let beta = |i: usize| i as f64 * params.alpha / nf;
                let cond = |u: f64| f.joint(u, beta(k)) / beta(k);
                let mut s = cond(beta(k)) / (k - 1) as f64;
                for l in k..n0 {
                    s += (cond(beta(l + 1)) - cond(beta(l))) / l as f64;
                }
                (nf - 1.0) * s
            }
            Family::CalibratedSd => {
                let f = need_f()?;
                let a = |i: usize| values[mb(i)];
                let w = |i: usize| i.max(k) as f64;
                let mut v = f64::INFINITY;
                for split in 1..=big_m {
                    let mut total = 0.0;
                    for i in 1..=split {
                        total += nf * (a(i) - a(i - 1)) / w(i);
                    }
                    for i in split + 2..=big_m {
                        total += nf * (nf - 1.0) * (f.joint(a(i), a(i)) - f.joint(a(i - 1), a(i - 1)))
                            / (w(i) * (w(i) - 1.0));
                    }
                    if big_m > split {
                        let wk = w(split + 1);
                        total += nf * (nf - 1.0) * f.joint(a(split + 1), a(split + 1)) / (wk * (wk - 1.0));
                        total -= nf * f.joint(a(split), a(split + 1)) / wk;
                    }
                    v = v.min(total);
                }
                v
            }
            Family::CalibratedSu => {
                let f = need_f()?;
                let a = |r: usize| values[mt(r)];
                let g = |r: usize, s: usize| {
                    f.joint(a(r), a(s)) - f.joint(a(r - 1), a(s)) - f.joint(a(r), a(s - 1))
                        + f.joint(a(r - 1), a(s - 1))
                };
                let mut v = f64::INFINITY;
                for split in k..=n0 {
                    let mut total = nf * a(k - 1) / k as f64;
                    for r in k..=split {
                        total += nf * (a(r) - a(r - 1)) / r as f64;
                    }
                    for r in split + 1..=n0 {
                        let rf = r as f64;
                        total += nf * (a(r) - a(r - 1)) / (rf * rf);
                        for s in r + 1..=n0 {
                            total += nf * (nf - 1.0) * g(r, s) / (rf * s as f64);
                        }
                        total += nf * (nf - 1.0) * (f.joint(a(r), a(r)) - f.joint(a(r), a(r - 1))) / (rf * rf);
                    }
                    v = v.min(total);
                }
                v
            }
        };
        best = best.max(value);
    }
    Ok(Some(best))
}

/// Critical values `α₁..αₙ` of `family`. Calibrated families take the
/// scale `beta` (normally the calibrated `β*`) instead of solving for it.
pub fn naive_constants(
    family: Family,
    params: &Params,
    template: &Template,
    beta: Option<f64>,
    f: Option<&dyn PairwiseNullF>,
) -> Result<Vec<f64>> {
    let n = params.n;
    let k = params.k;
    let lr = |i: usize| {
        let g = plain_floor(params.gamma, i) + 1;
        g as f64 * params.alpha / (n + g - i) as f64
    };
    let out = match family {
        Family::Lr => (1..=n).map(|i| lr(i.max(k))).collect(),
        Family::Pairwise => {
            let c = naive_scaling(family, params, &[], f)?.expect("pairwise has a constant");
            (1..=n).map(|i| lr(i.max(k)) / c.min(1.0)).collect()
        }
        Family::CalibratedSd | Family::CalibratedSu => {
            let beta = beta.ok_or_else(|| Error::Config("calibrated families need a scale".into()))?;
            let values = template.values(beta)?;
            (1..=n).map(|i| values[i.max(k)]).collect()
        }
        _ => {
            let values = template.values(params.alpha)?;
            let c = naive_scaling(family, params, &values, f)?.expect("rescaled family");
            (1..=n).map(|i| params.alpha * values[i.max(k)] / c).collect()
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::index_maps;

    #[test]
    fn literal_maps_agree_with_incremental_maps() {
        for gamma in [GammaRational::new(1, 10).unwrap(), GammaRational::new(1, 4).unwrap(), GammaRational::new(2, 3).unwrap()] {
            for n in 1..=25 {
                for n0 in 1..=n {
                    for k in 1..=n0.min(3) {
                        let maps = index_maps(n, n0, gamma, k).unwrap();
                        assert_eq!(maps.big_m, naive_big_m(n, n0, gamma));
                        for i in 0..=maps.big_m {
                            assert_eq!(maps.m[i], naive_m(n, n0, gamma, i));
                            assert_eq!(maps.m_bar[i], naive_m_bar(n, n0, gamma, k, i));
                        }
                        for i in 0..=n0 {
                            assert_eq!(maps.m_tilde[i], naive_m_tilde(n, n0, gamma, i));
                        }
                    }
                }
            }
        }
    }
}
