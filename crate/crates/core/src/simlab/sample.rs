//! Correlated normal test statistics and their two-sided p-values.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::engine::PValueVector;
use crate::error::{Error, Result};
use crate::pairdist::two_sided_p;

/// Correlation structure of the test statistics.
#[derive(Debug, Clone, PartialEq)]
pub enum DependenceModel {
    /// `Γ = (1 − ρ)I + ρ11ᵀ`.
    Uniform { rho: f64 },
    /// Block-diagonal with equicorrelated blocks of size `size`.
    Block { rho: f64, size: usize },
    /// `Γᵢⱼ = ρ^|i−j|`.
    Ar1 { rho: f64 },
    /// Any correlation matrix, through its lower Cholesky factor.
    Cholesky { lower: Arc<DMatrix<f64>> },
}

impl DependenceModel {
    /// Factors a user correlation matrix. It must be symmetric, have a unit
    /// diagonal and be positive definite.
    pub fn from_correlation(gamma: &DMatrix<f64>) -> Result<Self> {
        let n = gamma.nrows();
        if n == 0 || gamma.ncols() != n {
            return Err(Error::Config("correlation matrix must be square and nonempty".into()));
        }
        for i in 0..n {
            if (gamma[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                if (gamma[(i, j)] - gamma[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Config(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
                }
            }
        }
        let chol = gamma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Config("correlation matrix is not positive definite".into()))?;
        Ok(DependenceModel::Cholesky {
            lower: Arc::new(chol.l()),
        })
    }

    /// The correlation parameter of the named structures.
    pub fn rho(&self) -> Option<f64> {
        match *self {
            DependenceModel::Uniform { rho }
            | DependenceModel::Block { rho, .. }
            | DependenceModel::Ar1 { rho } => Some(rho),
            DependenceModel::Cholesky { .. } => None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(rho) = self.rho() {
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::Config(format!("rho = {rho} is not in [0, 1)")));
            }
        }
        match self {
            DependenceModel::Block { size, .. } if *size == 0 || n % size != 0 => Err(Error::Config(
                format!("block size {size} does not divide n = {n}"),
            )),
            DependenceModel::Cholesky { lower } if lower.nrows() != n => Err(Error::LengthMismatch {
                what: "correlation matrix",
                got: lower.nrows(),
                expected: n,
            }),
            _ => Ok(()),
        }
    }

    /// The dense correlation matrix `Γ`.
    pub fn correlation_matrix(&self, n: usize) -> Result<DMatrix<f64>> {
        self.validate(n)?;
        Ok(match self {
            DependenceModel::Uniform { rho } => {
                DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { *rho })
            }
            DependenceModel::Block { rho, size } => DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    1.0
                } else if i / size == j / size {
                    *rho
                } else {
                    0.0
                }
            }),
            DependenceModel::Ar1 { rho } => {
                DMatrix::from_fn(n, n, |i, j| rho.powi((i as i32 - j as i32).abs()))
            }
            DependenceModel::Cholesky { lower } => lower.as_ref() * lower.transpose(),
        })
    }

    pub fn describe(&self) -> String {
        match self {
            DependenceModel::Uniform { .. } => "uniform".into(),
            DependenceModel::Block { size, .. } => format!("block:{size}"),
            DependenceModel::Ar1 { .. } => "ar1".into(),
            DependenceModel::Cholesky { .. } => "cholesky".into(),
        }
    }
}

/// Draws `Z ~ N(μ, Γ)`.
pub fn generate_sample<R: Rng + ?Sized>(model: &DependenceModel, mu: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let n = mu.len();
    model.validate(n)?;
    let mut eps = || -> f64 { rng.sample(StandardNormal) };
    let z = match model {
        DependenceModel::Uniform { rho } => {
            let common = rho.sqrt() * eps();
            let own = (1.0 - rho).sqrt();
            mu.iter().map(|m| common + own * eps() + m).collect()
        }
        DependenceModel::Block { rho, size } => {
            let own = (1.0 - rho).sqrt();
            let mut out = Vec::with_capacity(n);
            for block in mu.chunks(*size) {
                let common = rho.sqrt() * eps();
                out.extend(block.iter().map(|m| common + own * eps() + m));
            }
            out
        }
        DependenceModel::Ar1 { rho } => {
            let innovation = (1.0 - rho * rho).sqrt();
            let mut prev = eps();
            let mut out = Vec::with_capacity(n);
            for (i, m) in mu.iter().enumerate() {
                if i > 0 {
                    prev = rho * prev + innovation * eps();
                }
                out.push(prev + m);
            }
            out
        }
        DependenceModel::Cholesky { lower } => {
            let e = nalgebra::DVector::from_iterator(n, (0..n).map(|_| eps()));
            let x = lower.as_ref() * e;
            x.iter().zip(mu).map(|(a, m)| a + m).collect()
        }
    };
    Ok(z)
}

/// `Pᵢ = 2(1 − Φ(|zᵢ|))`.
pub fn two_sided_pvalues(z: &[f64]) -> Result<PValueVector> {
    PValueVector::new(z.iter().map(|&x| two_sided_p(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corr(draws: &[Vec<f64>], i: usize, j: usize) -> f64 {
        let m = draws.len() as f64;
        let mi = draws.iter().map(|d| d[i]).sum::<f64>() / m;
        let mj = draws.iter().map(|d| d[j]).sum::<f64>() / m;
        let cov = draws.iter().map(|d| (d[i] - mi) * (d[j] - mj)).sum::<f64>() / m;
        let vi = draws.iter().map(|d| (d[i] - mi).powi(2)).sum::<f64>() / m;
        let vj = draws.iter().map(|d| (d[j] - mj).powi(2)).sum::<f64>() / m;
        cov / (vi * vj).sqrt()
    }

    fn draws(model: &DependenceModel, n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = vec![0.0; n];
        (0..count).map(|_| generate_sample(model, &mu, &mut rng).unwrap()).collect()
    }

    #[test]
    fn uniform_correlation() {
        let d = draws(&DependenceModel::Uniform { rho: 0.5 }, 100, 100_000, 1);
        assert!((corr(&d, 3, 77) - 0.5).abs() < 0.01);
        assert!((corr(&d, 0, 1) - 0.5).abs() < 0.01);
    }

    #[test]
    fn ar1_correlation() {
        let d = draws(&DependenceModel::Ar1 { rho: 0.8 }, 10, 100_000, 2);
        assert!((corr(&d, 4, 6) - 0.64).abs() < 0.01);
        assert!((corr(&d, 0, 1) - 0.8).abs() < 0.01);
    }

    #[test]
    fn block_correlation() {
        let d = draws(&DependenceModel::Block { rho: 0.6, size: 5 }, 10, 50_000, 3);
        assert!((corr(&d, 0, 4) - 0.6).abs() < 0.015);
        assert!(corr(&d, 4, 5).abs() < 0.015);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = DependenceModel::Block { rho: 0.5, size: 3 };
        assert!(generate_sample(&bad, &[0.0; 10], &mut rng).is_err());
        assert!(generate_sample(&DependenceModel::Uniform { rho: 1.0 }, &[0.0; 3], &mut rng).is_err());
    }

    #[test]
    fn independent_when_rho_is_zero() {
        for model in [
            DependenceModel::Uniform { rho: 0.0 },
            DependenceModel::Block { rho: 0.0, size: 2 },
            DependenceModel::Ar1 { rho: 0.0 },
        ] {
            let d = draws(&model, 4, 50_000, 4);
            assert!(corr(&d, 0, 1).abs() < 0.015);
            let mean = d.iter().map(|x| x[2]).sum::<f64>() / d.len() as f64;
            assert!(mean.abs() < 0.015);
        }
    }

    #[test]
    fn cholesky_path_agrees_with_factor_models() {
        for rho in [0.3, 0.7] {
            for named in [
                DependenceModel::Uniform { rho },
                DependenceModel::Block { rho, size: 3 },
                DependenceModel::Ar1 { rho },
            ] {
                let gamma = named.correlation_matrix(6).unwrap();
                let chol = DependenceModel::from_correlation(&gamma).unwrap();
                let back = chol.correlation_matrix(6).unwrap();
                assert!((&back - &gamma).abs().max() < 1e-12);
                let a = draws(&named, 6, 60_000, 5);
                let b = draws(&chol, 6, 60_000, 6);
                for (i, j) in [(0, 1), (0, 2), (2, 3), (1, 5)] {
                    let want = gamma[(i, j)];
                    assert!((corr(&a, i, j) - want).abs() < 0.015, "{named:?} ({i},{j})");
                    assert!((corr(&b, i, j) - want).abs() < 0.015, "{named:?} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_correlation_matrices() {
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 1.5, 1.5, 1.0]);
        assert!(DependenceModel::from_correlation(&not_pd).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.3, 1.0]);
        assert!(DependenceModel::from_correlation(&asym).is_err());
        let diag = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(DependenceModel::from_correlation(&diag).is_err());
    }

    #[test]
    fn p_value_examples() {
        let p = two_sided_pvalues(&[0.0, 1.959964, -1.959964, 2.5, -2.5]).unwrap();
        assert_eq!(p.values()[0], 1.0);
        assert!((p.values()[1] - 0.05).abs() < 1e-6);
        assert_eq!(p.values()[1], p.values()[2]);
        assert_eq!(p.values()[3], p.values()[4]);
    }

    #[test]
    fn signals_shift_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mu = [0.0, 10f64.sqrt()];
        let mut acc = [0.0; 2];
        for _ in 0..20_000 {
            let z = generate_sample(&DependenceModel::Ar1 { rho: 0.4 }, &mu, &mut rng).unwrap();
            acc[0] += z[0];
            acc[1] += z[1];
        }
        assert!((acc[0] / 20_000.0).abs() < 0.03);
        assert!((acc[1] / 20_000.0 - 10f64.sqrt()).abs() < 0.03);
    }
}
