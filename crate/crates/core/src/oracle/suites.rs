//! Exhaustive and randomized sweeps over the oracle checks.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    check_level_attainment, check_markov_order_stat, check_pairwise_order_stat, check_simes_containment,
    check_stepdown_count_bound, check_stepup_count_bound, check_stepup_index_bound, lr_k1,
    markov_order_stat, naive_constants, naive_scaling, pairwise_order_stat, simes_containment,
    stepdown_bound, stepup_bound, LiteralMaps, SmallInstance, View,
};
use crate::constants::{c3_sd_value, c3_su_value, compute_constants, Family, Params, Template};
use crate::error::Error;
use crate::gamma::GammaRational;
use crate::pairdist::{bvn_cdf, norm_cdf, two_sided_equicorr_f, validate_pairwise_f, PairwiseModel, PairwiseNullF};

/// One line of a suite summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub instances: u64,
    pub violations: u64,
    pub first_failure: Option<String>,
}

impl CheckRow {
    fn new(name: impl Into<String>) -> Self {
        CheckRow { name: name.into(), instances: 0, violations: 0, first_failure: None }
    }

    fn record(&mut self, outcome: std::result::Result<(), String>) {
        self.instances += 1;
        if let Err(msg) = outcome {
            self.violations += 1;
            self.first_failure.get_or_insert(msg);
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.instances > 0
    }
}

impl fmt::Display for CheckRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} instances, {} violations",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.instances,
            self.violations
        )?;
        if let Some(msg) = &self.first_failure {
            write!(f, " (first: {msg})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub exhaustive_max_n: usize,
    pub fuzz_instances: usize,
    pub fuzz_max_n: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { exhaustive_max_n: 4, fuzz_instances: 100_000, fuzz_max_n: 8, seed: 0x6b66_6470 }
    }
}

const LATTICE_LEN: usize = 15;

fn lattice(j: usize) -> f64 {
    0.01 + 0.07 * j as f64
}

fn gammas() -> [GammaRational; 2] {
    [GammaRational::new(1, 10).expect("valid"), GammaRational::new(1, 4).expect("valid")]
}

const KS: [usize; 3] = [1, 2, 3];
const ALPHAS: [f64; 3] = [0.05, 0.3, 0.75];

fn flatten(mut values: Vec<f64>, k: usize) -> Vec<f64> {
    let k = k.min(values.len());
    let kth = values[k - 1];
    values[..k].iter_mut().for_each(|a| *a = kth);
    values
}

/// Pointwise inequalities over the exhaustive lattice grid and over random
/// instances, then the index-map identities.
pub fn lemma_suite(config: &SuiteConfig) -> Vec<CheckRow> {
    let mut rows = exhaustive_rows(config.exhaustive_max_n);
    rows.extend(fuzz_rows(config));
    rows.extend(map_rows(60));
    rows
}

fn exhaustive_rows(max_n: usize) -> Vec<CheckRow> {
    let tag = format!("(exhaustive n <= {max_n})");
    let mut sd = CheckRow::new(format!("stepdown count bound {tag}"));
    let mut su = CheckRow::new(format!("stepup count bound {tag}"));
    let mut markov = CheckRow::new(format!("markov order statistic {tag}"));
    let mut pairwise = CheckRow::new(format!("pairwise order statistic {tag}"));
    let mut simes = CheckRow::new(format!("simes containment {tag}"));

    let mut ts: Vec<f64> = (0..LATTICE_LEN).flat_map(|j| [lattice(j), lattice(j) + 0.035]).collect();
    ts.extend([0.0, 1.0]);

    for n in 1..=max_n {
        let gs = gammas();
        // constants[g][a][k], simes[g][a], maps[g][n0]
        let lr: Vec<Vec<Vec<f64>>> =
            gs.iter().map(|&g| ALPHAS.iter().map(|&a| lr_k1(n, g, a)).collect()).collect();
        let maps: Vec<Vec<LiteralMaps>> =
            gs.iter().map(|&g| (0..=n).map(|n0| LiteralMaps::new(n, n0, g)).collect()).collect();
        let flattened: Vec<Vec<Vec<Vec<f64>>>> = lr
            .iter()
            .map(|per_a| per_a.iter().map(|c| KS.iter().map(|&k| flatten(c.clone(), k)).collect()).collect())
            .collect();

        let mut digits = vec![0usize; n];
        let mut p = vec![0.0; n];
        let mut labels = vec![false; n];
        loop {
            for (x, &d) in p.iter_mut().zip(&digits) {
                *x = lattice(d);
            }
            for mask in 0u32..(1 << n) {
                for (i, l) in labels.iter_mut().enumerate() {
                    *l = mask >> i & 1 == 1;
                }
                let view = View::new(&p, &labels);
                markov.record(markov_order_stat(&view.nulls, &ts));
                pairwise.record(pairwise_order_stat(&view.nulls, &ts));
                for (gi, &g) in gs.iter().enumerate() {
                    let mp = &maps[gi][view.n0()];
                    for (ai, &a) in ALPHAS.iter().enumerate() {
                        simes.record(simes_containment(&view, &lr[gi][ai], g, a));
                        for (ki, &k) in KS.iter().enumerate() {
                            let c = &flattened[gi][ai][ki];
                            sd.record(stepdown_bound(&view, c, g, k, mp));
                            su.record(stepup_bound(&view, c, g, k, mp));
                        }
                    }
                }
            }
            // odometer over the lattice
            let Some(pos) = digits.iter().position(|&d| d + 1 < LATTICE_LEN) else { break };
            digits[pos] += 1;
            digits[..pos].iter_mut().for_each(|d| *d = 0);
        }
    }
    vec![sd, su, markov, pairwise, simes]
}

/// A random instance: p-values mix continuous draws, lattice points and
/// exact ties with the constants; constants are either Lehmann–Romano or
/// arbitrary sorted draws.
pub(crate) fn random_instance(rng: &mut impl Rng, max_n: usize) -> SmallInstance {
    let n = rng.random_range(1..=max_n);
    let gamma = gammas()[rng.random_range(0..2)];
    let k = KS[rng.random_range(0..KS.len())];
    let alpha = rng.random_range(0.01..0.9);
    let constants = if rng.random_bool(0.5) {
        flatten(lr_k1(n, gamma, alpha), k)
    } else {
        let mut c: Vec<f64> = (0..n).map(|_| rng.random_range(0.001..0.999)).collect();
        c.sort_by(f64::total_cmp);
        c
    };
    let p = (0..n)
        .map(|_| match rng.random_range(0..5) {
            0 => lattice(rng.random_range(0..LATTICE_LEN)),
            1 => constants[rng.random_range(0..n)],
            _ => rng.random::<f64>(),
        })
        .collect();
    let is_null = (0..n).map(|_| rng.random_bool(0.6)).collect();
    SmallInstance::new(p, is_null, constants, gamma, k, alpha).expect("generated instance is valid")
}

fn fuzz_rows(config: &SuiteConfig) -> Vec<CheckRow> {
    let tag = format!("(fuzz n <= {})", config.fuzz_max_n);
    type Check = fn(&SmallInstance) -> std::result::Result<(), String>;
    let mut rows: Vec<(CheckRow, Check)> = vec![
        (CheckRow::new(format!("stepdown count bound {tag}")), check_stepdown_count_bound),
        (CheckRow::new(format!("stepup count bound {tag}")), check_stepup_count_bound),
        (CheckRow::new(format!("markov order statistic {tag}")), check_markov_order_stat),
        (CheckRow::new(format!("pairwise order statistic {tag}")), check_pairwise_order_stat),
        (CheckRow::new(format!("simes containment {tag}")), check_simes_containment),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.fuzz_instances {
        let inst = random_instance(&mut rng, config.fuzz_max_n);
        for (row, check) in rows.iter_mut() {
            row.record(check(&inst));
        }
    }
    rows.into_iter().map(|(row, _)| row).collect()
}

fn map_rows(max_n: usize) -> Vec<CheckRow> {
    let mut level = CheckRow::new(format!("level attainment of m (n <= {max_n})"));
    let mut index = CheckRow::new(format!("stepup index bound of m-tilde (n <= {max_n})"));
    for (num, den) in [(1, 20), (1, 10), (1, 4), (3, 10)] {
        let g = GammaRational::new(num, den).expect("valid");
        for n in 1..=max_n {
            for n0 in 1..=n {
                level.record(check_level_attainment(n, n0, g));
                index.record(check_stepup_index_bound(n, n0, g));
            }
        }
    }
    vec![level, index]
}

const RELATIVE_TOLERANCE: f64 = 1e-12;

fn compare(what: &str, fast: f64, slow: f64) -> std::result::Result<(), String> {
    if (fast - slow).abs() <= RELATIVE_TOLERANCE * fast.abs().max(slow.abs()) {
        Ok(())
    } else {
        Err(format!("{what}: optimized {fast:e} vs literal {slow:e}"))
    }
}

fn compare_vec(what: &str, fast: &[f64], slow: &[f64]) -> std::result::Result<(), String> {
    if fast.len() != slow.len() {
        return Err(format!("{what}: lengths {} and {}", fast.len(), slow.len()));
    }
    for (i, (&a, &b)) in fast.iter().zip(slow).enumerate() {
        compare(&format!("{what} alpha_{}", i + 1), a, b)?;
    }
    Ok(())
}

fn pairwise_models(n: usize) -> Vec<PairwiseModel> {
    let mut models = vec![PairwiseModel::Independence];
    if n % 3 == 0 {
        models.push(PairwiseModel::EquicorrelatedTwoSided { rho: 0.5 });
    }
    models
}

/// Dual-implementation comparison of one family on one cell.
fn dual_check(family: Family, params: &Params, f: &dyn PairwiseNullF) -> std::result::Result<bool, String> {
    let cell = format!("{family} n={} gamma={} k={} alpha={} F={}", params.n, params.gamma, params.k, params.alpha, f.describe());
    let template = Template::lr(params.n, params.gamma);
    let fopt = family.needs_pairwise().then_some(f);
    let report = match compute_constants(family, params, &template, fopt) {
        Ok(r) => r,
        // the target level is out of reach for this cell; nothing to compare
        Err(Error::Unattainable { .. }) => return Ok(false),
        Err(e) => return Err(format!("{cell}: {e}")),
    };
    let slow = naive_constants(family, params, &template, report.beta_star, fopt).map_err(|e| format!("{cell}: {e}"))?;
    compare_vec(&cell, report.constants.values(), &slow)?;
    if let Some(c) = report.scaling {
        let values = template.values(report.beta_star.unwrap_or(params.alpha)).map_err(|e| e.to_string())?;
        let slow_c = naive_scaling(family, params, &values, fopt).map_err(|e| e.to_string())?.unwrap_or(f64::NAN);
        compare(&format!("{cell} scaling"), c, slow_c)?;
    }
    if matches!(family, Family::CalibratedSd | Family::CalibratedSu) {
        for beta in [0.01, 0.1, 0.3] {
            let values = template.values(beta).map_err(|e| e.to_string())?;
            let fast = if family == Family::CalibratedSd {
                c3_sd_value(&values, params, f)
            } else {
                c3_su_value(&values, params, f)
            }
            .map_err(|e| e.to_string())?
            .value;
            let slow = naive_scaling(family, params, &values, Some(f)).map_err(|e| e.to_string())?.unwrap_or(f64::NAN);
            compare(&format!("{cell} value at beta={beta}"), fast, slow)?;
        }
    }
    Ok(true)
}

/// Every family against the literal implementation on `n ≤ max_n`, plus
/// the `k = 1` Lehmann–Romano identity for the max families.
pub fn constants_suite(max_n: usize) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    for family in Family::ALL {
        let mut row = CheckRow::new(format!("{family} matches literal implementation (n <= {max_n})"));
        for n in 1..=max_n {
            for gamma in gammas() {
                for k in KS.into_iter().filter(|&k| k <= n) {
                    if family == Family::Pairwise && k < 2 {
                        continue;
                    }
                    for alpha in [0.05, 0.2] {
                        let params = Params::new(n, gamma, k, alpha).expect("valid cell");
                        let models = if family.needs_pairwise() { pairwise_models(n) } else { vec![PairwiseModel::Independence] };
                        for f in &models {
                            match dual_check(family, &params, f) {
                                Ok(true) => row.record(Ok(())),
                                Ok(false) => {}
                                Err(msg) => row.record(Err(msg)),
                            }
                        }
                    }
                }
            }
        }
        rows.push(row);
    }
    let mut identity = CheckRow::new("max families reproduce alpha with k = 1 (n <= 200)");
    for (num, den) in [(1, 20), (1, 10), (1, 4), (3, 10)] {
        let gamma = GammaRational::new(num, den).expect("valid");
        for n in 2..=200 {
            let params = Params::new(n, gamma, 1, 0.05).expect("valid cell");
            let template = Template::lr(n, gamma);
            for family in [Family::MaxSd, Family::MaxSu] {
                let outcome = compute_constants(family, &params, &template, None)
                    .map_err(|e| e.to_string())
                    .and_then(|r| compare(&format!("{family} n={n} gamma={gamma}"), r.scaling.unwrap_or(f64::NAN), 0.05));
                identity.record(outcome);
            }
        }
    }
    rows.push(identity);
    rows
}

fn within(what: String, got: f64, want: f64, tol: f64) -> std::result::Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: {got:e} vs {want:e}"))
    }
}

/// Bivariate normal CDF identities and validity of the pairwise models.
pub fn pairdist_suite() -> Vec<CheckRow> {
    let mut origin = CheckRow::new("bivariate normal orthant probabilities");
    origin.record(bvn_cdf(0.0, 0.0, 0.5).map_err(|e| e.to_string()).and_then(|v| within("rho=0.5".into(), v, 1.0 / 3.0, 1e-9)));
    for j in -19..=19 {
        let rho = j as f64 / 20.0;
        let want = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
        origin.record(bvn_cdf(0.0, 0.0, rho).map_err(|e| e.to_string()).and_then(|v| within(format!("rho={rho}"), v, want, 1e-12)));
    }

    let mut independence = CheckRow::new("two-sided F at rho = 0 is the product (50 x 50 grid)");
    for i in 0..50 {
        for j in 0..50 {
            let (u, v) = ((i as f64 + 0.5) / 50.0, (j as f64 + 0.5) / 50.0);
            independence.record(
                two_sided_equicorr_f(u, v, 0.0).map_err(|e| e.to_string()).and_then(|x| within(format!("u={u} v={v}"), x, u * v, 1e-9)),
            );
        }
    }

    let mut bvn = CheckRow::new("bivariate normal identities and Frechet bounds");
    let rhos = [-0.99, -0.95, -0.5, -0.1, 0.0, 0.3, 0.8, 0.93, 0.99];
    for ai in -6..=6 {
        for bi in -6..=6 {
            let (a, b) = (ai as f64 * 0.5, bi as f64 * 0.5);
            for rho in rhos {
                let outcome = (|| {
                    let v = bvn_cdf(a, b, rho).map_err(|e| e.to_string())?;
                    let swapped = bvn_cdf(b, a, rho).map_err(|e| e.to_string())?;
                    let reflected = bvn_cdf(a, -b, -rho).map_err(|e| e.to_string())?;
                    let tag = format!("a={a} b={b} rho={rho}");
                    within(format!("{tag} symmetry"), v, swapped, 1e-14)?;
                    within(format!("{tag} reflection"), v + reflected, norm_cdf(a), 1e-12)?;
                    let lower = (norm_cdf(a) + norm_cdf(b) - 1.0).max(0.0);
                    let upper = norm_cdf(a).min(norm_cdf(b));
                    if v < lower - 1e-15 || v > upper + 1e-15 {
                        return Err(format!("{tag}: {v} outside [{lower}, {upper}]"));
                    }
                    Ok(())
                })();
                bvn.record(outcome);
            }
        }
    }

    let mut validity = CheckRow::new("pairwise models are valid copulas");
    let mut models = vec![PairwiseModel::Independence, PairwiseModel::Comonotone];
    models.extend(rhos.iter().chain(&[1.0, -1.0]).map(|&rho| PairwiseModel::EquicorrelatedTwoSided { rho }));
    for m in &models {
        validity.record(validate_pairwise_f(m).map_err(|e| format!("{m}: {e}")));
        for i in 1..=20 {
            let u = i as f64 / 20.0;
            validity.record(within(format!("{m} margin at {u}"), m.joint(u, 1.0), u, 1e-12));
        }
    }
    vec![origin, independence, bvn, validity]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_flag_failures() {
        let mut row = CheckRow::new("demo");
        assert!(!row.passed());
        row.record(Ok(()));
        assert!(row.passed());
        row.record(Err("bad".into()));
        row.record(Err("worse".into()));
        assert_eq!(row.violations, 2);
        assert_eq!(row.first_failure.as_deref(), Some("bad"));
        assert!(row.to_string().starts_with("FAIL demo"));
    }

    #[test]
    fn small_lemma_sweep_is_clean() {
        let config = SuiteConfig { exhaustive_max_n: 2, fuzz_instances: 2_000, ..SuiteConfig::default() };
        for row in lemma_suite(&config) {
            assert!(row.passed(), "{row}");
        }
    }

    #[test]
    fn small_constants_sweep_is_clean() {
        for row in constants_suite(5) {
            assert!(row.passed(), "{row}");
        }
    }

    #[test]
    fn random_instances_are_reproducible() {
        let a: Vec<_> = (0..5).map({
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            move |_| random_instance(&mut rng, 8)
        }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b: Vec<_> = (0..5).map(|_| random_instance(&mut rng, 8)).collect();
        assert_eq!(a, b);
    }
}
