//! Critical-constant container, truth labels, rejection outcomes and the
//! generalized false discovery proportion.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::gamma::GammaRational;

/// A validated, nondecreasing vector of thresholds `α₁ ≤ … ≤ αₙ` in `(0, 1)`.
///
/// For order `k` the first `k − 1` thresholds equal the `k`th: with fewer
/// than `k` false rejections the generalized FDP is zero, so those
/// thresholds cannot affect the error rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalConstants {
    values: Vec<f64>,
    k: usize,
}

impl CriticalConstants {
    pub fn new(values: Vec<f64>, k: usize) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::InvalidConstants("no thresholds".into()));
        }
        if k == 0 || k > n {
            return Err(Error::InvalidConstants(format!(
                "order k = {k} must lie in [1, {n}]"
            )));
        }
        for (i, &a) in values.iter().enumerate() {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::InvalidConstants(format!(
                    "alpha_{} = {a} is not in (0, 1)",
                    i + 1
                )));
            }
        }
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidConstants(format!(
                "alpha_{} = {} exceeds alpha_{} = {}",
                i + 1,
                values[i],
                i + 2,
                values[i + 1]
            )));
        }
        if values[..k].iter().any(|&a| a != values[k - 1]) {
            return Err(Error::InvalidConstants(format!(
                "the first {} thresholds must equal alpha_{k}",
                k - 1
            )));
        }
        Ok(CriticalConstants { values, k })
    }

    /// Replaces `α₁ … α_{k−1}` by `α_k` and validates.
    pub fn flattened(mut values: Vec<f64>, k: usize) -> Result<Self> {
        if k >= 1 && k <= values.len() {
            let kth = values[k - 1];
            values[..k].iter_mut().for_each(|a| *a = kth);
        }
        CriticalConstants::new(values, k)
    }

    /// A single-step vector: every threshold equals `t`.
    pub fn single_step(n: usize, t: f64) -> Result<Self> {
        CriticalConstants::new(vec![t; n], 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `α_i`, one-based.
    pub fn alpha(&self, i: usize) -> f64 {
        self.values[i - 1]
    }
}

/// Which hypotheses are true nulls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthLabels {
    is_null: Vec<bool>,
}

impl TruthLabels {
    pub fn new(is_null: Vec<bool>) -> Self {
        TruthLabels { is_null }
    }

    /// The first `n0` hypotheses are null, the remaining `n − n0` are not.
    pub fn leading_nulls(n: usize, n0: usize) -> Self {
        TruthLabels::new((0..n).map(|i| i < n0).collect())
    }

    pub fn len(&self) -> usize {
        self.is_null.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_null.is_empty()
    }

    pub fn is_null(&self, i: usize) -> bool {
        self.is_null[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.is_null
    }

    pub fn n0(&self) -> usize {
        self.is_null.iter().filter(|&&b| b).count()
    }

    pub fn n1(&self) -> usize {
        self.len() - self.n0()
    }
}

/// False and true rejection counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruthCounts {
    pub v: usize,
    pub s: usize,
}

/// The set of rejected hypotheses (original, zero-based indices in
/// ascending p-value order) and, once labels are attached, `V` and `S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectionResult {
    rejected: Vec<usize>,
    truth: Option<TruthCounts>,
}

impl RejectionResult {
    pub fn new(rejected: Vec<usize>) -> Self {
        RejectionResult {
            rejected,
            truth: None,
        }
    }

    pub fn rejected(&self) -> &[usize] {
        &self.rejected
    }

    /// Total number of rejections `R`.
    pub fn r(&self) -> usize {
        self.rejected.len()
    }

    pub fn truth(&self) -> Option<TruthCounts> {
        self.truth
    }

    /// Attaches `V` and `S` by counting the rejected nulls.
    pub fn with_truth(mut self, labels: &TruthLabels) -> Result<Self> {
        if let Some(&bad) = self.rejected.iter().find(|&&i| i >= labels.len()) {
            return Err(Error::LengthMismatch {
                what: "truth labels",
                got: labels.len(),
                expected: bad + 1,
            });
        }
        let v = self
            .rejected
            .iter()
            .filter(|&&i| labels.is_null(i))
            .count();
        self.truth = Some(TruthCounts {
            v,
            s: self.rejected.len() - v,
        });
        Ok(self)
    }

    fn counts(&self) -> Result<TruthCounts> {
        self.truth.ok_or(Error::MissingTruth)
    }
}

/// `V/R` when `V ≥ k`, otherwise zero (and zero when `R = 0`).
pub fn kfdp_ratio(v: usize, r: usize, k: usize) -> Ratio<u64> {
    if r == 0 || v < k {
        Ratio::from_integer(0)
    } else {
        Ratio::new(v as u64, r as u64)
    }
}

/// `V > max(γR, k − 1)`, i.e. the generalized FDP exceeds `γ`.
pub fn kfdp_exceeds(v: usize, r: usize, k: usize, gamma: GammaRational) -> bool {
    v >= k && gamma.is_exceeded_by(v as u64, r as u64)
}

/// The generalized false discovery proportion of a labelled result.
pub fn kfdp_value(result: &RejectionResult, k: usize) -> Result<Ratio<u64>> {
    let c = result.counts()?;
    Ok(kfdp_ratio(c.v, result.r(), k))
}

/// Whether the generalized FDP of a labelled result exceeds `γ`.
pub fn exceeds_gamma(result: &RejectionResult, k: usize, gamma: GammaRational) -> Result<bool> {
    let c = result.counts()?;
    Ok(kfdp_exceeds(c.v, result.r(), k, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(v: usize, r: usize) -> RejectionResult {
        // rejected indices 0..r, of which the first v are null
        let labels = TruthLabels::leading_nulls(r.max(1), v);
        RejectionResult::new((0..r).collect())
            .with_truth(&labels)
            .unwrap()
    }

    #[test]
    fn kfdp_examples() {
        assert_eq!(kfdp_value(&labelled(3, 5), 3).unwrap(), Ratio::new(3, 5));
        assert_eq!(kfdp_value(&labelled(2, 5), 3).unwrap(), Ratio::from_integer(0));
        assert_eq!(kfdp_value(&labelled(0, 0), 1).unwrap(), Ratio::from_integer(0));
    }

    #[test]
    fn exceedance_examples() {
        let g = GammaRational::new(1, 10).unwrap();
        assert!(!exceeds_gamma(&labelled(1, 10), 1, g).unwrap());
        assert!(exceeds_gamma(&labelled(2, 10), 1, g).unwrap());
        assert!(!exceeds_gamma(&labelled(2, 10), 3, g).unwrap());
    }

    #[test]
    fn missing_truth_is_an_error() {
        let res = RejectionResult::new(vec![0]);
        assert_eq!(kfdp_value(&res, 1), Err(Error::MissingTruth));
    }

    #[test]
    fn exceedance_agrees_with_ratio_exhaustively() {
        let gammas = [
            GammaRational::ZERO,
            GammaRational::new(1, 20).unwrap(),
            GammaRational::new(1, 10).unwrap(),
            GammaRational::new(1, 4).unwrap(),
            GammaRational::new(3, 10).unwrap(),
        ];
        for g in gammas {
            let gr = Ratio::new(g.num(), g.den());
            for k in 1..=5 {
                for r in 0..=50 {
                    for v in 0..=r {
                        let by_ratio = kfdp_ratio(v, r, k) > gr;
                        assert_eq!(kfdp_exceeds(v, r, k, g), by_ratio, "v={v} r={r} k={k} g={g}");
                    }
                }
            }
        }
    }

    #[test]
    fn order_one_matches_plain_fdp() {
        for r in 1..=30usize {
            for v in 0..=r {
                let plain = if v == 0 {
                    Ratio::from_integer(0)
                } else {
                    Ratio::new(v as u64, r as u64)
                };
                assert_eq!(kfdp_ratio(v, r, 1), plain);
            }
        }
    }

    #[test]
    fn constants_validation() {
        assert!(CriticalConstants::new(vec![0.01, 0.02, 0.03], 1).is_ok());
        assert!(CriticalConstants::new(vec![], 1).is_err());
        assert!(CriticalConstants::new(vec![0.02, 0.01], 1).is_err());
        assert!(CriticalConstants::new(vec![0.0, 0.01], 1).is_err());
        assert!(CriticalConstants::new(vec![0.5, 1.0], 1).is_err());
        assert!(CriticalConstants::new(vec![0.01, 0.02, 0.03], 2).is_err());
        assert!(CriticalConstants::new(vec![0.01, 0.02], 3).is_err());
        let c = CriticalConstants::flattened(vec![0.01, 0.02, 0.03, 0.04], 3).unwrap();
        assert_eq!(c.values(), &[0.03, 0.03, 0.03, 0.04]);
        assert_eq!(c.alpha(4), 0.04);
    }

    #[test]
    fn truth_counts() {
        let labels = TruthLabels::new(vec![true, false, true]);
        assert_eq!((labels.n0(), labels.n1()), (2, 1));
        let res = RejectionResult::new(vec![0, 1]).with_truth(&labels).unwrap();
        assert_eq!(res.truth(), Some(TruthCounts { v: 1, s: 1 }));
        assert!(RejectionResult::new(vec![5]).with_truth(&labels).is_err());
    }
}
