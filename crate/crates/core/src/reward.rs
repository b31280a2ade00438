//! Step reward: terminal bonus, potential-shaped exploration gain, or the
//! shield penalty.

use serde::{Deserialize, Serialize};

use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardBranch {
    TerminalBonus,
    Shaped,
    ShieldPenalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams<T> {
    pub coverage_threshold: T,
    pub r_exp: T,
    pub r_sigma: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardTerms<T> {
    pub branch: RewardBranch,
    pub value: T,
    pub n_e: usize,
    pub phi_before: T,
    pub phi_after: T,
    pub intervened: bool,
}

/// The penalty branch wins over the terminal bonus: an intervening step
/// that also crosses the coverage threshold still earns `r_sigma`.
pub fn compute_reward<T: Real>(
    coverage_next: T,
    intervened: bool,
    n_e: usize,
    phi_before: T,
    phi_after: T,
    params: &RewardParams<T>,
) -> RewardTerms<T> {
    let (branch, value) = if intervened {
        (RewardBranch::ShieldPenalty, params.r_sigma)
    } else if coverage_next >= params.coverage_threshold {
        (RewardBranch::TerminalBonus, params.r_exp)
    } else {
        (RewardBranch::Shaped, T::count(n_e) + phi_after - phi_before)
    };
    RewardTerms { branch, value, n_e, phi_before, phi_after, intervened }
}
