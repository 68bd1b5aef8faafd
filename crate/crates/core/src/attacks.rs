//! Byzantine client behavior: scaling (or sign-flipping) the local update by
//! a fixed or Gaussian-distributed scalar before transmission.

use alloc::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::math;
use crate::vecmath::ParamVector;

/// How an attacker picks the scalar multiplied into its update.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "snake_case"))]
pub enum ScalarMode {
    /// The same scalar every round (e.g. -1 reverses the update direction).
    Fixed { p: f64 },
    /// A fresh zero-mean Gaussian draw per attacker per round.
    Gaussian { variance: f64 },
}

/// Attack setup for an experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackConfig {
    pub num_attackers: usize,
    pub scalar_mode: ScalarMode,
    pub seed: u64,
    /// When true (the default) the attacker identities are drawn once and
    /// kept for the whole run; otherwise they are re-drawn each round from
    /// that round's participants.
    #[cfg_attr(feature = "serde", serde(default = "default_fixed_identities"))]
    pub fixed_identities: bool,
}

#[cfg(feature = "serde")]
fn default_fixed_identities() -> bool {
    true
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        match self.scalar_mode {
            ScalarMode::Fixed { p } => {
                if !p.is_finite() {
                    return Err(Error::config("attack.p", "must be finite"));
                }
            }
            ScalarMode::Gaussian { variance } => {
                if !(variance > 0.0 && variance.is_finite()) {
                    return Err(Error::config("attack.variance", "must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Picks `num_attackers` distinct ids uniformly without replacement.
pub fn select_attackers<R: Rng>(
    participants: &[usize],
    num_attackers: usize,
    rng: &mut R,
) -> Result<BTreeSet<usize>> {
    if num_attackers > participants.len() {
        return Err(Error::config(
            "attack.num_attackers",
            "more attackers than participants",
        ));
    }
    Ok(rand::seq::index::sample(rng, participants.len(), num_attackers)
        .into_iter()
        .map(|i| participants[i])
        .collect())
}

/// Returns `p·g` together with the drawn scalar so the round can record it.
pub fn apply_attack<R: Rng>(
    g: &ParamVector,
    config: &AttackConfig,
    rng: &mut R,
) -> (ParamVector, f64) {
    let p = match config.scalar_mode {
        ScalarMode::Fixed { p } => p,
        ScalarMode::Gaussian { variance } => {
            let normal =
                Normal::new(0.0, math::sqrt(variance)).expect("validated standard deviation");
            normal.sample(rng)
        }
    };
    (g.scale(p), p)
}
