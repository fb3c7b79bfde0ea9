//! Index maps linking rejection counts to template indices.
//!
//! For `n₀` true nulls and `n₁ = n − n₀` false ones:
//!
//! * `M = min{n₀, ⌊γn₁/(1−γ)⌋ + 1}`,
//! * `m(i) = max{0 ≤ j ≤ n₁ : ⌊γj/(1−γ)⌋ + 1 ≤ i}`,
//! * `m*(i) = max{1 ≤ j ≤ n : ⌊γj⌋ + 1 ≤ i}`, `m̃(i) = min{m*(i), i + n₁}`,
//! * `m̄(i) = (i ∨ k) + m(i)`, with `m*(0) = m̃(0) = m̄(0) = 0`.
//!
//! `m(i)` is the largest number of false rejections compatible with `i`
//! being the smallest false-null count that makes the tolerance bite. For
//! `γ ≤ 1/2` every level `1..M` is attained by some `j`, so `≤` and `=` in
//! the definition of `m` agree; for larger `γ` some levels are skipped and
//! the `≤` form keeps the map well defined.

use crate::error::{Error, Result};
use crate::gamma::GammaRational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMaps {
    pub n: usize,
    pub n0: usize,
    pub k: usize,
    /// `M`.
    pub big_m: usize,
    /// `m(0..=M)`.
    pub m: Vec<usize>,
    /// `m*(0..=n)`.
    pub m_star: Vec<usize>,
    /// `m̃(0..=n₀)`.
    pub m_tilde: Vec<usize>,
    /// `m̄(0..=M)`.
    pub m_bar: Vec<usize>,
}

impl IndexMaps {
    pub fn n1(&self) -> usize {
        self.n - self.n0
    }
}

/// `m*(0..=n)`; it does not depend on `n₀`.
pub fn m_star(n: usize, gamma: GammaRational) -> Vec<usize> {
    let mut out = vec![0; n + 1];
    let mut j = 0;
    for (i, slot) in out.iter_mut().enumerate().skip(1) {
        while j < n && gamma.floor_times(j as u64 + 1) as usize + 1 <= i {
            j += 1;
        }
        *slot = j;
    }
    out
}

pub fn index_maps(n: usize, n0: usize, gamma: GammaRational, k: usize) -> Result<IndexMaps> {
    if k == 0 || k > n0 || n0 > n {
        return Err(Error::Config(format!(
            "index maps need 1 <= k <= n0 <= n, got k = {k}, n0 = {n0}, n = {n}"
        )));
    }
    Ok(index_maps_with(n, n0, gamma, k, &m_star(n, gamma)))
}

pub(crate) fn index_maps_with(
    n: usize,
    n0: usize,
    gamma: GammaRational,
    k: usize,
    m_star: &[usize],
) -> IndexMaps {
    let n1 = n - n0;
    let big_m = n0.min(gamma.floor_odds_times(n1 as u64) as usize + 1);

    let mut m = vec![0; big_m + 1];
    let mut j = 0;
    for (i, slot) in m.iter_mut().enumerate().skip(1) {
        while j < n1 && gamma.floor_odds_times(j as u64 + 1) as usize + 1 <= i {
            j += 1;
        }
        *slot = j;
    }

    let m_tilde = (0..=n0)
        .map(|i| if i == 0 { 0 } else { m_star[i].min(i + n1) })
        .collect();
    let m_bar = (0..=big_m)
        .map(|i| if i == 0 { 0 } else { i.max(k) + m[i] })
        .collect();

    IndexMaps {
        n,
        n0,
        k,
        big_m,
        m,
        m_star: m_star.to_vec(),
        m_tilde,
        m_bar,
    }
}
