//! Stepdown and stepup execution.
//!
//! Both procedures sort once and scan once, `O(n log n)` per call. The scan
//! kernels on sorted slices are exposed for callers that run several
//! procedures on the same data.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rates::{CriticalConstants, RejectionResult, TruthLabels};

/// A p-value vector with its stable ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueVector {
    p: Vec<f64>,
    order: Vec<usize>,
}

impl PValueVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = p
            .iter()
            .enumerate()
            .find(|(_, &x)| !(0.0..=1.0).contains(&x))
        {
            return Err(Error::InvalidPValue { index, value });
        }
        let order = stable_order(&p);
        Ok(PValueVector { p, order })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    /// Original indices in ascending p-value order, ties by index.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `P₍ᵢ₎`, one-based.
    pub fn sorted(&self, i: usize) -> f64 {
        self.p[self.order[i - 1]]
    }

    pub fn sorted_values(&self) -> Vec<f64> {
        self.order.iter().map(|&i| self.p[i]).collect()
    }
}

/// Indices sorted by `(value, index)`.
pub fn stable_order(p: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    StepDown,
    StepUp,
}

impl Direction {
    pub fn short_name(&self) -> &'static str {
        match self {
            Direction::StepDown => "sd",
            Direction::StepUp => "su",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sd" | "stepdown" | "step-down" => Ok(Direction::StepDown),
            "su" | "stepup" | "step-up" => Ok(Direction::StepUp),
            other => Err(Error::Config(format!("unknown direction {other:?}"))),
        }
    }
}

/// Largest `i` with `P₍ⱼ₎ ≤ αⱼ` for all `j ≤ i`; zero if `P₍₁₎ > α₁`.
pub fn step_down_count(sorted_p: &[f64], alphas: &[f64]) -> usize {
    sorted_p
        .iter()
        .zip(alphas)
        .take_while(|(p, a)| p <= a)
        .count()
}

/// Largest `i` with `P₍ᵢ₎ ≤ αᵢ`; zero if none.
pub fn step_up_count(sorted_p: &[f64], alphas: &[f64]) -> usize {
    sorted_p
        .iter()
        .zip(alphas)
        .rposition(|(p, a)| p <= a)
        .map_or(0, |i| i + 1)
}

pub fn rejection_count(direction: Direction, sorted_p: &[f64], alphas: &[f64]) -> usize {
    match direction {
        Direction::StepDown => step_down_count(sorted_p, alphas),
        Direction::StepUp => step_up_count(sorted_p, alphas),
    }
}

fn run(direction: Direction, p: &PValueVector, c: &CriticalConstants) -> Result<RejectionResult> {
    if p.len() != c.len() {
        return Err(Error::LengthMismatch {
            what: "p-value vector",
            got: p.len(),
            expected: c.len(),
        });
    }
    let sorted = p.sorted_values();
    let r = rejection_count(direction, &sorted, c.values());
    Ok(RejectionResult::new(p.order()[..r].to_vec()))
}

pub fn step_down(p: &PValueVector, c: &CriticalConstants) -> Result<RejectionResult> {
    run(Direction::StepDown, p, c)
}

pub fn step_up(p: &PValueVector, c: &CriticalConstants) -> Result<RejectionResult> {
    run(Direction::StepUp, p, c)
}

pub fn step(direction: Direction, p: &PValueVector, c: &CriticalConstants) -> Result<RejectionResult> {
    run(direction, p, c)
}

/// Fills in `V` and `S` from the labels.
pub fn annotate_truth(result: RejectionResult, labels: &TruthLabels) -> Result<RejectionResult> {
    result.with_truth(labels)
}
