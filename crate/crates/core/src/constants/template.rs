//! Base critical-value templates `0 = α′₀ ≤ α′₁(β) ≤ … ≤ α′ₙ(β)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gamma::GammaRational;

/// `αᵢ = (⌊γi⌋ + 1)β / (n + ⌊γi⌋ + 1 − i)` for `i = 1..n`.
pub fn lr_template(n: usize, gamma: GammaRational, beta: f64) -> Result<Vec<f64>> {
    check_scale(beta)?;
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    Ok((1..=n).map(|i| lr_value(n, gamma, beta, i)).collect())
}

fn lr_value(n: usize, gamma: GammaRational, beta: f64, i: usize) -> f64 {
    let g = gamma.floor_times(i as u64) as usize + 1;
    let den = n + g - i;
    assert!(den > 0, "n + floor(gamma i) + 1 - i is positive for i <= n");
    g as f64 * beta / den as f64
}

fn check_scale(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("template scale {beta} is not in (0, 1)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TemplateFamily {
    /// Lehmann–Romano.
    Lr,
    /// Benjamini–Hochberg, `iβ/n`.
    Bh,
    /// `iβ/(n − i(1 − β) + 1)`.
    Gbs,
    /// `β·cᵢ` for a user shape `c`.
    Custom(Vec<f64>),
}

impl fmt::Display for TemplateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TemplateFamily::Lr => "lr",
            TemplateFamily::Bh => "bh",
            TemplateFamily::Gbs => "gbs",
            TemplateFamily::Custom(_) => "custom",
        })
    }
}

impl FromStr for TemplateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Ok(TemplateFamily::Lr),
            "bh" => Ok(TemplateFamily::Bh),
            "gbs" => Ok(TemplateFamily::Gbs),
            other => Err(Error::Config(format!("unknown template {other:?}"))),
        }
    }
}

/// A template family bound to `(n, γ)`, evaluated at a scale `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    family: TemplateFamily,
    n: usize,
    gamma: GammaRational,
}

impl Template {
    pub fn new(family: TemplateFamily, n: usize, gamma: GammaRational) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if let TemplateFamily::Custom(c) = &family {
            if c.len() != n {
                return Err(Error::LengthMismatch {
                    what: "custom template",
                    got: c.len(),
                    expected: n,
                });
            }
            if c.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::Config("custom template values must be finite and nonnegative".into()));
            }
            if c.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Config("custom template must be nondecreasing".into()));
            }
        }
        Ok(Template { family, n, gamma })
    }

    pub fn lr(n: usize, gamma: GammaRational) -> Self {
        Template::new(TemplateFamily::Lr, n, gamma).expect("n >= 1")
    }

    pub fn family(&self) -> &TemplateFamily {
        &self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> GammaRational {
        self.gamma
    }

    /// Whether `α′(β) = β·α′(1)`.
    pub fn is_linear(&self) -> bool {
        !matches!(self.family, TemplateFamily::Gbs)
    }

    /// `α′₀(β), …, α′ₙ(β)` with `α′₀ = 0`.
    pub fn values(&self, beta: f64) -> Result<Vec<f64>> {
        check_scale(beta)?;
        let n = self.n;
        let nf = n as f64;
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        out.extend((1..=n).map(|i| {
            let fi = i as f64;
            match &self.family {
                TemplateFamily::Lr => lr_value(n, self.gamma, beta, i),
                TemplateFamily::Bh => fi * beta / nf,
                TemplateFamily::Gbs => fi * beta / (nf - fi * (1.0 - beta) + 1.0),
                TemplateFamily::Custom(c) => beta * c[i - 1],
            }
        }));
        Ok(out)
    }
}
