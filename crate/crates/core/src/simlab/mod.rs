//! Monte Carlo estimation of the kFDP exceedance probability and average
//! power for correlated normal test statistics.
//!
//! Each replicate draws `n` statistics `N(μᵢ, 1)` with the chosen
//! correlation, where the first `n₀ = π₀n` means are zero and the remaining
//! ones equal the effect size, turns them into two-sided p-values and runs
//! every procedure of the cell on the same p-values. Replicate `r` uses
//! stream `r` of a ChaCha generator keyed by the seed, so results do not
//! depend on the number of worker threads.

mod sample;

pub use sample::{generate_sample, two_sided_pvalues, DependenceModel};

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constants::{compute_constants, Family, Params, Template};
use crate::engine::{rejection_count, Direction};
use crate::error::{Error, Result};
use crate::gamma::GammaRational;
use crate::pairdist::PairwiseModel;
use crate::rates::{kfdp_exceeds, CriticalConstants};

pub const DEFAULT_EFFECT: f64 = 3.162_277_660_168_379_5;
pub const DEFAULT_REPS: usize = 2000;

/// A constants family paired with the procedure that runs it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcedureKind {
    LrSd,
    LrSu,
    MaxSd,
    MaxSu,
    PairwiseSd,
    PairwiseSu,
    SumSd,
    SumSu,
    CalibratedSd,
    CalibratedSu,
}

impl ProcedureKind {
    pub const ALL: [ProcedureKind; 10] = [
        ProcedureKind::LrSd,
        ProcedureKind::LrSu,
        ProcedureKind::MaxSd,
        ProcedureKind::MaxSu,
        ProcedureKind::PairwiseSd,
        ProcedureKind::PairwiseSu,
        ProcedureKind::SumSd,
        ProcedureKind::SumSu,
        ProcedureKind::CalibratedSd,
        ProcedureKind::CalibratedSu,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ProcedureKind::LrSd => "lr-sd",
            ProcedureKind::LrSu => "lr-su",
            ProcedureKind::MaxSd => "max-sd",
            ProcedureKind::MaxSu => "max-su",
            ProcedureKind::PairwiseSd => "pairwise-sd",
            ProcedureKind::PairwiseSu => "pairwise-su",
            ProcedureKind::SumSd => "sum-sd",
            ProcedureKind::SumSu => "sum-su",
            ProcedureKind::CalibratedSd => "calibrated-sd",
            ProcedureKind::CalibratedSu => "calibrated-su",
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ProcedureKind::LrSd | ProcedureKind::LrSu => Family::Lr,
            ProcedureKind::MaxSd => Family::MaxSd,
            ProcedureKind::MaxSu => Family::MaxSu,
            ProcedureKind::PairwiseSd | ProcedureKind::PairwiseSu => Family::Pairwise,
            ProcedureKind::SumSd => Family::SumSd,
            ProcedureKind::SumSu => Family::SumSu,
            ProcedureKind::CalibratedSd => Family::CalibratedSd,
            ProcedureKind::CalibratedSu => Family::CalibratedSu,
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            ProcedureKind::LrSd | ProcedureKind::PairwiseSd => Direction::StepDown,
            ProcedureKind::LrSu | ProcedureKind::PairwiseSu => Direction::StepUp,
            other => other.family().direction().expect("single-direction family"),
        }
    }

    /// Constants for this procedure with the Lehmann–Romano template. The
    /// pairwise-aware families need the equicorrelated model, whose
    /// pairwise null law is known in closed form.
    pub fn constants(&self, params: &Params, dependence: &DependenceModel) -> Result<CriticalConstants> {
        let family = self.family();
        let f = if family.needs_pairwise() {
            match dependence {
                DependenceModel::Uniform { rho } => Some(PairwiseModel::equicorrelated(*rho)?),
                other => {
                    return Err(Error::Config(format!(
                        "{} needs the pairwise null distribution, available only for uniform dependence (got {})",
                        self.name(),
                        other.describe()
                    )))
                }
            }
        } else {
            None
        };
        let template = Template::lr(params.n, params.gamma);
        let report = compute_constants(
            family,
            params,
            &template,
            f.as_ref().map(|m| m as &dyn crate::pairdist::PairwiseNullF),
        )?;
        Ok(report.constants)
    }
}

impl fmt::Display for ProcedureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProcedureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProcedureKind::ALL
            .into_iter()
            .find(|p| p.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown procedure {s:?}")))
    }
}

/// A procedure with its constants fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureSpec {
    pub name: String,
    pub direction: Direction,
    pub constants: CriticalConstants,
}

impl ProcedureSpec {
    pub fn new(name: impl Into<String>, direction: Direction, constants: CriticalConstants) -> Self {
        ProcedureSpec {
            name: name.into(),
            direction,
            constants,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub n: usize,
    pub pi0: f64,
    pub effect: f64,
    pub reps: usize,
    pub seed: u64,
    pub gamma: GammaRational,
    pub k: usize,
    pub dependence: DependenceModel,
}

impl MonteCarloConfig {
    pub fn new(n: usize, pi0: f64, gamma: GammaRational, k: usize, dependence: DependenceModel) -> Self {
        MonteCarloConfig {
            n,
            pi0,
            effect: DEFAULT_EFFECT,
            reps: DEFAULT_REPS,
            seed: 0,
            gamma,
            k,
            dependence,
        }
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_effect(mut self, effect: f64) -> Self {
        self.effect = effect;
        self
    }

    /// `π₀n`, which must be an integer.
    pub fn n0(&self) -> Result<usize> {
        if !(0.0..=1.0).contains(&self.pi0) {
            return Err(Error::Config(format!("pi0 = {} is not in [0, 1]", self.pi0)));
        }
        let x = self.pi0 * self.n as f64;
        let r = x.round();
        if (x - r).abs() > 1e-9 {
            return Err(Error::Config(format!("pi0 * n = {x} is not an integer")));
        }
        Ok(r as usize)
    }

    fn validate(&self) -> Result<usize> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        self.dependence.validate(self.n)?;
        self.n0()
    }

    /// Means: zero for the first `n₀`, the effect size after.
    pub fn means(&self) -> Result<Vec<f64>> {
        let n0 = self.n0()?;
        Ok((0..self.n).map(|i| if i < n0 { 0.0 } else { self.effect }).collect())
    }
}

/// What one replicate produced for one procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepOutcome {
    pub r: usize,
    pub v: usize,
    pub exceeded: bool,
}

impl RepOutcome {
    pub fn s(&self) -> usize {
        self.r - self.v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub procedure: String,
    pub reps: usize,
    pub n0: usize,
    /// Fraction of replicates with kFDP > γ.
    pub exceedance: f64,
    /// `√(p̂(1 − p̂)/reps)`; absent with fewer than two replicates.
    pub exceedance_se: Option<f64>,
    /// Mean of `S/n₁`; absent when `n₁ = 0`.
    pub power: Option<f64>,
    pub power_se: Option<f64>,
}

/// Every procedure's report for one cell, plus the per-replicate outcomes
/// `outcomes[procedure][rep]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub reports: Vec<MonteCarloReport>,
    pub outcomes: Vec<Vec<RepOutcome>>,
}

/// The generator for replicate `rep`.
pub fn rep_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Runs all procedures on common replicates.
pub fn run_cell(config: &MonteCarloConfig, procedures: &[ProcedureSpec]) -> Result<CellResult> {
    let n0 = config.validate()?;
    if procedures.is_empty() {
        return Err(Error::Config("no procedures to run".into()));
    }
    for p in procedures {
        if p.constants.len() != config.n {
            return Err(Error::LengthMismatch {
                what: "procedure constants",
                got: p.constants.len(),
                expected: config.n,
            });
        }
        if p.constants.k() != config.k {
            return Err(Error::Config(format!(
                "{} was built for k = {}, the cell uses k = {}",
                p.name,
                p.constants.k(),
                config.k
            )));
        }
    }
    let mu = config.means()?;
    let per_rep: Vec<Vec<RepOutcome>> = (0..config.reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<RepOutcome>> {
            let mut rng = rep_rng(config.seed, rep);
            let z = generate_sample(&config.dependence, &mu, &mut rng)?;
            let p = two_sided_pvalues(&z)?;
            let sorted = p.sorted_values();
            Ok(procedures
                .iter()
                .map(|proc| {
                    let r = rejection_count(proc.direction, &sorted, proc.constants.values());
                    let v = p.order()[..r].iter().filter(|&&i| i < n0).count();
                    RepOutcome {
                        r,
                        v,
                        exceeded: kfdp_exceeds(v, r, config.k, config.gamma),
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let outcomes: Vec<Vec<RepOutcome>> = (0..procedures.len())
        .map(|j| per_rep.iter().map(|rep| rep[j]).collect())
        .collect();
    let reports = procedures
        .iter()
        .zip(&outcomes)
        .map(|(proc, out)| summarize(&proc.name, out, config.n - n0, n0))
        .collect();
    Ok(CellResult { reports, outcomes })
}

fn mean_and_se(xs: &[f64]) -> (f64, Option<f64>) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, Some((var / m).sqrt()))
}

fn summarize(name: &str, outcomes: &[RepOutcome], n1: usize, n0: usize) -> MonteCarloReport {
    let reps = outcomes.len();
    let hits = outcomes.iter().filter(|o| o.exceeded).count();
    let p_hat = hits as f64 / reps as f64;
    let exceedance_se = (reps >= 2).then(|| (p_hat * (1.0 - p_hat) / reps as f64).sqrt());
    let (power, power_se) = if n1 == 0 {
        (None, None)
    } else {
        let shares: Vec<f64> = outcomes.iter().map(|o| o.s() as f64 / n1 as f64).collect();
        let (m, se) = mean_and_se(&shares);
        (Some(m), se)
    };
    MonteCarloReport {
        procedure: name.to_string(),
        reps,
        n0,
        exceedance: p_hat,
        exceedance_se,
        power,
        power_se,
    }
}

/// One procedure on its own replicates.
pub fn run_monte_carlo(config: &MonteCarloConfig, procedure: &ProcedureSpec) -> Result<MonteCarloReport> {
    let mut cell = run_cell(config, std::slice::from_ref(procedure))?;
    Ok(cell.reports.remove(0))
}

/// Per-replicate power difference `a − b` on common replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedDifference {
    pub mean: f64,
    pub se: Option<f64>,
    pub min: f64,
}

pub fn paired_power_difference(a: &[RepOutcome], b: &[RepOutcome], n1: usize) -> Result<PairedDifference> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Config("paired outcomes must be nonempty and of equal length".into()));
    }
    if n1 == 0 {
        return Err(Error::Config("power is undefined without false nulls".into()));
    }
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x.s() as f64 - y.s() as f64) / n1 as f64)
        .collect();
    let (mean, se) = mean_and_se(&d);
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PairedDifference { mean, se, min })
}

/// A Cartesian sweep over `ρ × π₀ × γ × k × procedure`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub alpha: f64,
    pub pi0s: Vec<f64>,
    pub rhos: Vec<f64>,
    pub gammas: Vec<GammaRational>,
    pub ks: Vec<usize>,
    pub procedures: Vec<ProcedureKind>,
    pub dependence: DependenceShape,
    pub effect: f64,
    pub reps: usize,
    pub seed: u64,
}

/// The named correlation structures, without `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DependenceShape {
    Uniform,
    Block(usize),
    Ar1,
}

impl DependenceShape {
    pub fn with_rho(&self, rho: f64) -> DependenceModel {
        match *self {
            DependenceShape::Uniform => DependenceModel::Uniform { rho },
            DependenceShape::Block(size) => DependenceModel::Block { rho, size },
            DependenceShape::Ar1 => DependenceModel::Ar1 { rho },
        }
    }
}

impl fmt::Display for DependenceShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DependenceShape::Uniform => f.write_str("uniform"),
            DependenceShape::Block(s) => write!(f, "block:{s}"),
            DependenceShape::Ar1 => f.write_str("ar1"),
        }
    }
}

impl FromStr for DependenceShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "uniform" => Ok(DependenceShape::Uniform),
            "ar1" => Ok(DependenceShape::Ar1),
            _ => {
                let size = lower
                    .strip_prefix("block:")
                    .and_then(|x| x.parse::<usize>().ok())
                    .filter(|&x| x > 0)
                    .ok_or_else(|| Error::Config(format!("unknown dependence {s:?}")))?;
                Ok(DependenceShape::Block(size))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub procedure: ProcedureKind,
    pub rho: f64,
    pub pi0: f64,
    pub gamma: GammaRational,
    pub k: usize,
    pub report: MonteCarloReport,
}

/// Runs the sweep. Constants are computed once per `(ρ, γ, k, procedure)`
/// and shared by every `π₀`; within a cell all procedures see the same
/// replicates.
pub fn run_grid(spec: &GridSpec) -> Result<Vec<GridRow>> {
    if spec.pi0s.is_empty()
        || spec.rhos.is_empty()
        || spec.gammas.is_empty()
        || spec.ks.is_empty()
        || spec.procedures.is_empty()
    {
        return Err(Error::Config("empty sweep".into()));
    }
    let mut rows = Vec::new();
    for &rho in &spec.rhos {
        let dependence = spec.dependence.with_rho(rho);
        for &gamma in &spec.gammas {
            for &k in &spec.ks {
                let params = Params::new(spec.n, gamma, k, spec.alpha)?;
                let procs = spec
                    .procedures
                    .iter()
                    .map(|kind| {
                        Ok(ProcedureSpec::new(
                            kind.name(),
                            kind.direction(),
                            kind.constants(&params, &dependence)?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                for &pi0 in &spec.pi0s {
                    let config = MonteCarloConfig {
                        n: spec.n,
                        pi0,
                        effect: spec.effect,
                        reps: spec.reps,
                        seed: spec.seed,
                        gamma,
                        k,
                        dependence: dependence.clone(),
                    };
                    let cell = run_cell(&config, &procs)?;
                    for (kind, report) in spec.procedures.iter().zip(cell.reports) {
                        rows.push(GridRow {
                            procedure: *kind,
                            rho,
                            pi0,
                            gamma,
                            k,
                            report,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}
