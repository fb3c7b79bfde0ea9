//! Critical-constant families.
//!
//! Every family starts from a base template `α′` and either rescales it by a
//! worst case over the unknown number of true nulls `n₀ ∈ [k, n]`, or
//! calibrates its scale `β` so that a pairwise-aware bound equals `α`.
//!
//! | key | direction | dependence | scaling |
//! |-----|-----------|------------|---------|
//! | `lr` | either | positive | none |
//! | `max-sd` / `max-su` | one | arbitrary | largest single ratio |
//! | `pairwise` | either | positive, known `F` | conditional-`F` telescope |
//! | `sum-sd` / `sum-su` | one | arbitrary | telescoped marginal sum |
//! | `calibrated-sd` / `calibrated-su` | one | arbitrary, known `F` | `β` solving `C(β) = α` |

mod calibrated;
mod maps;
mod rescaled;
mod template;

pub use calibrated::{
    c3_sd, c3_sd_value, c3_su, c3_su_value, calibrate_beta, CalibratedValue, Calibration, FGrid,
    CALIBRATION_TOLERANCE, SEARCH_HIGH, SEARCH_LOW, WIDTH_TOLERANCE,
};
pub use maps::{index_maps, m_star, IndexMaps};
pub use rescaled::{c1_sd, c1_su, c2_sd, c2_su, c_pairwise_lr, lr_constants};
pub use template::{lr_template, Template, TemplateFamily};

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rayon::prelude::*;

use crate::engine::Direction;
use crate::error::{Error, Result};
use crate::gamma::GammaRational;
use crate::pairdist::PairwiseNullF;
use crate::rates::CriticalConstants;

/// Problem size, tolerance, order and target level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub n: usize,
    pub gamma: GammaRational,
    pub k: usize,
    pub alpha: f64,
    /// Caps the worst case at `n₀ ≤ n0_max` when a bound on the number of
    /// true nulls is known. `None` means `n`.
    pub n0_max: Option<usize>,
}

impl Params {
    pub fn new(n: usize, gamma: GammaRational, k: usize, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if k == 0 || k > n {
            return Err(Error::Config(format!("k = {k} must lie in [1, {n}]")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha = {alpha} is not in (0, 1)")));
        }
        Ok(Params {
            n,
            gamma,
            k,
            alpha,
            n0_max: None,
        })
    }

    pub fn with_n0_max(mut self, n0_max: usize) -> Result<Self> {
        if n0_max < self.k || n0_max > self.n {
            return Err(Error::Config(format!(
                "n0_max = {n0_max} must lie in [{}, {}]",
                self.k, self.n
            )));
        }
        self.n0_max = Some(n0_max);
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha = {alpha} is not in (0, 1)")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    /// The enumerated range of `n₀`.
    pub fn n0_range(&self) -> RangeInclusive<usize> {
        self.k..=self.n0_max.unwrap_or(self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Lr,
    MaxSd,
    MaxSu,
    Pairwise,
    SumSd,
    SumSu,
    CalibratedSd,
    CalibratedSu,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Lr,
        Family::MaxSd,
        Family::MaxSu,
        Family::Pairwise,
        Family::SumSd,
        Family::SumSu,
        Family::CalibratedSd,
        Family::CalibratedSu,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            Family::Lr => "lr",
            Family::MaxSd => "max-sd",
            Family::MaxSu => "max-su",
            Family::Pairwise => "pairwise",
            Family::SumSd => "sum-sd",
            Family::SumSu => "sum-su",
            Family::CalibratedSd => "calibrated-sd",
            Family::CalibratedSu => "calibrated-su",
        }
    }

    /// The procedure the constants were derived for, if only one.
    pub fn direction(&self) -> Option<Direction> {
        match self {
            Family::Lr | Family::Pairwise => None,
            Family::MaxSd | Family::SumSd | Family::CalibratedSd => Some(Direction::StepDown),
            Family::MaxSu | Family::SumSu | Family::CalibratedSu => Some(Direction::StepUp),
        }
    }

    /// Whether the family needs the pairwise null distribution.
    pub fn needs_pairwise(&self) -> bool {
        matches!(self, Family::Pairwise | Family::CalibratedSd | Family::CalibratedSu)
    }

    /// Whether the family rescales a user-chosen template.
    pub fn uses_template(&self) -> bool {
        !matches!(self, Family::Lr | Family::Pairwise)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.key() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown family {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub family: Family,
    pub constants: CriticalConstants,
    /// The worst-case constant `C` (at `β*` for calibrated families);
    /// `None` for `lr`.
    pub scaling: Option<f64>,
    /// Smallest maximizing `n₀`.
    pub argmax_n0: Option<usize>,
    /// `(n₀, K)` pairs, the minimizing split point per `n₀`.
    pub chosen_split: Vec<(usize, usize)>,
    pub beta_star: Option<f64>,
}

/// Evaluates `term` for every `n₀` in range (in parallel) and returns the
/// per-`n₀` results in order.
pub(crate) fn per_n0<T: Send>(params: &Params, term: impl Fn(usize) -> T + Sync) -> Vec<(usize, T)> {
    params
        .n0_range()
        .into_par_iter()
        .map(|n0| (n0, term(n0)))
        .collect()
}

/// Maximum and smallest maximizing `n₀`.
pub(crate) fn max_over_n0(values: &[(usize, f64)]) -> (f64, usize) {
    let mut best = values[0];
    for &(n0, v) in &values[1..] {
        if v > best.1 {
            best = (n0, v);
        }
    }
    (best.1, best.0)
}

/// `α·α′_{i∨k}/C` for `i = 1..n`.
pub(crate) fn rescale(values: &[f64], params: &Params, c: f64) -> Result<CriticalConstants> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("degenerate template: scaling constant is {c}")));
    }
    let scaled = values[1..].iter().map(|&a| params.alpha * a / c).collect();
    CriticalConstants::flattened(scaled, params.k)
}

pub(crate) fn check_template_len(values: &[f64], params: &Params) -> Result<()> {
    if values.len() != params.n + 1 {
        return Err(Error::LengthMismatch {
            what: "template values (including the leading zero)",
            got: values.len(),
            expected: params.n + 1,
        });
    }
    if values[0] != 0.0 {
        return Err(Error::Config("template must start with a zero entry".into()));
    }
    if values.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Config("template must be nondecreasing".into()));
    }
    Ok(())
}

/// Computes any family. Templates are evaluated at scale `α` for the
/// rescaled families and calibrated for the others; `lr` and `pairwise`
/// always use the Lehmann–Romano shape.
pub fn compute_constants(
    family: Family,
    params: &Params,
    template: &Template,
    f: Option<&dyn PairwiseNullF>,
) -> Result<ConstantsReport> {
    if template.n() != params.n {
        return Err(Error::LengthMismatch {
            what: "template",
            got: template.n(),
            expected: params.n,
        });
    }
    if template.gamma() != params.gamma && family.uses_template() {
        return Err(Error::Config("template and parameters disagree on gamma".into()));
    }
    let need_f = || {
        f.ok_or_else(|| Error::Config(format!("family {family} needs a pairwise null distribution")))
    };
    match family {
        Family::Lr => lr_constants(params),
        Family::MaxSd => c1_sd(&template.values(params.alpha)?, params),
        Family::MaxSu => c1_su(&template.values(params.alpha)?, params),
        Family::SumSd => c2_sd(&template.values(params.alpha)?, params),
        Family::SumSu => c2_su(&template.values(params.alpha)?, params),
        Family::Pairwise => c_pairwise_lr(params, need_f()?),
        Family::CalibratedSd => c3_sd(template, params, need_f()?),
        Family::CalibratedSu => c3_su(template, params, need_f()?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairdist::PairwiseModel;

    fn g(num: u64, den: u64) -> GammaRational {
        GammaRational::new(num, den).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(0, g(1, 10), 1, 0.05).is_err());
        assert!(Params::new(5, g(1, 10), 6, 0.05).is_err());
        assert!(Params::new(5, g(1, 10), 1, 1.0).is_err());
        let p = Params::new(10, g(1, 10), 2, 0.05).unwrap();
        assert_eq!(p.n0_range(), 2..=10);
        assert_eq!(p.with_n0_max(4).unwrap().n0_range(), 2..=4);
        assert!(p.with_n0_max(1).is_err());
    }

    #[test]
    fn family_keys_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.key().parse::<Family>().unwrap(), f);
        }
        assert!("bogus".parse::<Family>().is_err());
    }

    #[test]
    fn dispatcher_covers_every_family() {
        let gamma = g(1, 10);
        let params = Params::new(12, gamma, 2, 0.05).unwrap();
        let template = Template::lr(12, gamma);
        let f = PairwiseModel::Independence;
        for family in Family::ALL {
            let r = compute_constants(family, &params, &template, Some(&f)).unwrap();
            assert_eq!(r.family, family);
            assert_eq!(r.constants.len(), 12);
            assert_eq!(r.constants.k(), 2);
        }
        assert!(compute_constants(Family::Pairwise, &params, &template, None).is_err());
        assert!(compute_constants(Family::SumSd, &params, &Template::lr(11, gamma), None).is_err());
    }
}
