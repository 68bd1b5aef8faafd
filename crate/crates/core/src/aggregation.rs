//! Aggregation rules: divergence scoring of client updates against a
//! reference direction, vector manipulation (standard and norm-normalized
//! robust forms), the momentum reference-direction recursion with its
//! closed-form check, and plain FedAvg.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vecmath::{ParamVector, DEGENERACY_EPS};

/// Aggregation hyper-parameters: `c` scales the degree of divergence and
/// `alpha` weights the most recent global update in the reference direction.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DragConfig {
    #[cfg_attr(feature = "serde", serde(default = "default_c"))]
    pub c: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_alpha"))]
    pub alpha: f64,
}

#[cfg(feature = "serde")]
fn default_c() -> f64 {
    0.25
}

#[cfg(feature = "serde")]
fn default_alpha() -> f64 {
    0.6
}

impl DragConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::config("drag.c", "must lie in [0, 1]"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config("drag.alpha", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

impl Default for DragConfig {
    /// Partial-participation defaults: `c = 0.25`, `alpha = 0.6`.
    fn default() -> Self {
        DragConfig { c: 0.25, alpha: 0.6 }
    }
}

/// Degree of divergence of one client update: `lambda = c·(1 - cos)` where
/// `cos` is the clamped cosine between update and reference direction, so
/// `lambda` lies in `[0, 2c]` exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceScore {
    pub lambda: f64,
    pub cosine: f64,
}

/// A client update after manipulation toward the reference direction.
/// `degenerate` is set when a near-zero norm forced the manipulation to be
/// skipped.
#[derive(Clone, Debug, PartialEq)]
pub struct ModifiedUpdate {
    pub v: ParamVector,
    pub score: DivergenceScore,
    pub degenerate: bool,
}

/// Scores how far `g` diverges from `r`. When either vector is numerically
/// zero the score degrades to `lambda = 0` (cosine 1); the manipulation
/// step detects the same condition and flags it.
pub fn degree_of_divergence(g: &ParamVector, r: &ParamVector, c: f64) -> Result<DivergenceScore> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::config("drag.c", "must lie in [0, 1]"));
    }
    if g.dim() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: r.dim(),
        });
    }
    match g.cosine(r) {
        Ok(cosine) => Ok(DivergenceScore {
            lambda: c * (1.0 - cosine),
            cosine,
        }),
        Err(Error::DegenerateVector) => Ok(DivergenceScore {
            lambda: 0.0,
            cosine: 1.0,
        }),
        Err(e) => Err(e),
    }
}

/// Standard manipulation: `v = (1-lambda)·g + lambda·(|g|/|r|)·r`.
///
/// The reference direction is rescaled to the update's norm, so `v` always
/// has at least as large a component along `r` as `g` does. `lambda = 0`
/// reduces to the identity; a numerically zero `g` or `r` leaves the update
/// untouched and sets `degenerate`.
pub fn drag_manipulate(
    g: &ParamVector,
    r: &ParamVector,
    score: DivergenceScore,
) -> Result<ModifiedUpdate> {
    if g.dim() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: r.dim(),
        });
    }
    let g_norm = g.norm();
    let r_norm = r.norm();
    if g_norm <= DEGENERACY_EPS || r_norm <= DEGENERACY_EPS {
        return Ok(ModifiedUpdate {
            v: g.clone(),
            score,
            degenerate: true,
        });
    }
    if score.lambda == 0.0 {
        return Ok(ModifiedUpdate {
            v: g.clone(),
            score,
            degenerate: false,
        });
    }
    let v = g
        .scale(1.0 - score.lambda)
        .axpy(score.lambda * g_norm / r_norm, r)?;
    Ok(ModifiedUpdate {
        v,
        score,
        degenerate: false,
    })
}

/// Robust manipulation: `v = (1-lambda)·(|r|/|g|)·g + lambda·r`.
///
/// Every update is normalized to the trusted reference norm, which makes the
/// result invariant to positive rescaling of `g` (a module-scaling attacker
/// gains nothing) and reverses the update component once `lambda > 1`. A
/// numerically zero `g` yields `v = r`; a numerically zero `r` yields
/// `v = g`; both set `degenerate`.
pub fn byzantine_manipulate(
    g: &ParamVector,
    r: &ParamVector,
    score: DivergenceScore,
) -> Result<ModifiedUpdate> {
    if g.dim() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: r.dim(),
        });
    }
    let g_norm = g.norm();
    let r_norm = r.norm();
    if g_norm <= DEGENERACY_EPS {
        return Ok(ModifiedUpdate {
            v: r.clone(),
            score,
            degenerate: true,
        });
    }
    if r_norm <= DEGENERACY_EPS {
        return Ok(ModifiedUpdate {
            v: g.clone(),
            score,
            degenerate: true,
        });
    }
    let v = g
        .scale((1.0 - score.lambda) * r_norm / g_norm)
        .axpy(score.lambda, r)?;
    Ok(ModifiedUpdate {
        v,
        score,
        degenerate: false,
    })
}

/// The server's reference direction.
///
/// Initialized to the mean of the round-0 raw updates and then advanced by
/// `r <- (1-alpha)·r + alpha·delta_prev` each round. An optional trace
/// retains the history needed to re-derive the direction in closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceState {
    r: ParamVector,
    trace: Option<ReferenceTrace>,
}

#[derive(Clone, Debug, PartialEq)]
struct ReferenceTrace {
    round0_updates: Vec<ParamVector>,
    deltas: Vec<ParamVector>,
}

impl ReferenceState {
    /// Round-0 initialization: the mean of the raw client updates.
    pub fn init(round0_updates: &[ParamVector]) -> Result<Self> {
        Ok(ReferenceState {
            r: ParamVector::mean(round0_updates)?,
            trace: None,
        })
    }

    /// Like [`ReferenceState::init`], but retains history so that
    /// [`ReferenceState::closed_form_error`] can cross-check the recursion.
    pub fn init_traced(round0_updates: &[ParamVector]) -> Result<Self> {
        Ok(ReferenceState {
            r: ParamVector::mean(round0_updates)?,
            trace: Some(ReferenceTrace {
                round0_updates: round0_updates.to_vec(),
                deltas: Vec::new(),
            }),
        })
    }

    pub fn direction(&self) -> &ParamVector {
        &self.r
    }

    /// `r <- (1-alpha)·r + alpha·delta_prev`.
    pub fn update(&mut self, delta_prev: &ParamVector, alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::config("drag.alpha", "must lie in (0, 1]"));
        }
        self.r = self.r.scale(1.0 - alpha).axpy(alpha, delta_prev)?;
        Ok(())
    }

    /// Appends the round's aggregated delta to the trace; no-op when the
    /// state was not built with [`ReferenceState::init_traced`].
    pub fn record_delta(&mut self, delta: &ParamVector) {
        if let Some(trace) = &mut self.trace {
            trace.deltas.push(delta.clone());
        }
    }

    /// Relative error between the live recursion and the closed form rebuilt
    /// from the trace. `None` when untraced or still at round 0.
    pub fn closed_form_error(&self, alpha: f64) -> Option<f64> {
        let trace = self.trace.as_ref()?;
        if trace.deltas.is_empty() {
            return None;
        }
        let closed = closed_form_reference(
            &trace.round0_updates,
            &trace.deltas,
            alpha,
            trace.deltas.len(),
        )
        .ok()?;
        let diff = closed.axpy(-1.0, &self.r).ok()?;
        let scale = self.r.norm().max(closed.norm()).max(1e-300);
        Some(diff.norm() / scale)
    }
}

fn pow_int(base: f64, exp: usize) -> f64 {
    let mut out = 1.0;
    for _ in 0..exp {
        out *= base;
    }
    out
}

/// Closed form of the reference recursion after `t >= 1` rounds:
/// `(1-alpha)^t · mean(round-0 updates) + Σ_{i<t} alpha·(1-alpha)^(t-1-i)·deltas[i]`.
pub fn closed_form_reference(
    round0_updates: &[ParamVector],
    deltas: &[ParamVector],
    alpha: f64,
    t: usize,
) -> Result<ParamVector> {
    if t == 0 {
        return Err(Error::config("t", "closed form requires t >= 1"));
    }
    if deltas.len() != t {
        return Err(Error::config("deltas", "history length must equal t"));
    }
    let mut out = ParamVector::mean(round0_updates)?.scale(pow_int(1.0 - alpha, t));
    for (i, delta) in deltas.iter().enumerate() {
        out = out.axpy(alpha * pow_int(1.0 - alpha, t - 1 - i), delta)?;
    }
    Ok(out)
}

/// Mean of the manipulated updates, `delta = (1/S)·Σ v`.
pub fn aggregate_modified(updates: &[ModifiedUpdate]) -> Result<ParamVector> {
    ParamVector::mean(updates.iter().map(|u| &u.v))
}

/// Plain FedAvg step: `theta + (1/S)·Σ g`.
pub fn fedavg_aggregate(updates: &[ParamVector], theta: &ParamVector) -> Result<ParamVector> {
    theta.axpy(1.0, &ParamVector::mean(updates)?)
}
