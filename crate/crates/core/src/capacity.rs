//! Point-to-point covert capacities.
//!
//! For a legitimate channel `W` and warden rows `Q_k`, the covert capacity (in
//! nats per square-root channel use) is
//!
//! ```text
//! L* = max_p sqrt(2 (sum_k p_k D(W_k || W_0))^2 / chi2(sum_k p_k Q_k || Q_0))
//! ```
//!
//! over probability vectors `p` on the non-zero inputs.

use serde::{Deserialize, Serialize};

use crate::channel::{first_non_dominated, is_no_input_redundant, Channel};
use crate::error::{Error, Result};
use crate::info::{chi_squared, kl_divergence};
use crate::simplex::{self, AscentOptions};

/// Mixtures whose warden chi-squared falls below this are excluded from the search.
pub const CHI2_FLOOR: f64 = 1e-15;
/// Below this chi-squared at the optimum the result is flagged as ill-conditioned.
pub const CHI2_WARN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovertCapacityResult {
    /// Nats per square-root channel use.
    pub l_star: f64,
    /// Maximizing distribution over inputs `1..=K`.
    pub argmax_p: Vec<f64>,
    /// Every `D(W_k || W_0)` vanishes.
    pub zero_capacity: bool,
    /// `chi2` at the maximizer is below [`CHI2_WARN`].
    pub ill_conditioned: bool,
}

/// The covert-capacity objective for one (legitimate, warden) pair.
#[derive(Debug, Clone)]
pub struct CapacityObjective {
    divergences: Vec<f64>,
    deltas: Vec<Vec<f64>>,
    inv_q0: Vec<f64>,
}

impl CapacityObjective {
    /// Checks the preconditions and precomputes `D(W_k || W_0)` and `Q_k - Q_0`.
    pub fn new(legit: &Channel, warden: &Channel) -> Result<Self> {
        if legit.inputs() != warden.inputs() {
            return Err(Error::DimensionMismatch {
                expected: warden.inputs(),
                found: legit.inputs(),
            });
        }
        if warden.inputs() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: warden.inputs(),
            });
        }
        if let Some(k) = first_non_dominated(legit) {
            return Err(Error::AbsoluteContinuityViolation { input: k });
        }
        if let Some(k) = first_non_dominated(warden) {
            return Err(Error::AbsoluteContinuityViolation { input: k });
        }
        if is_no_input_redundant(warden) {
            return Err(Error::RedundantNoInput);
        }
        let q0 = warden.no_input().probs();
        let divergences = (1..legit.inputs())
            .map(|k| kl_divergence(legit.row(k), legit.no_input()))
            .collect();
        let deltas = (1..warden.inputs())
            .map(|k| warden.row(k).probs().iter().zip(q0).map(|(a, b)| a - b).collect())
            .collect();
        let inv_q0 = q0.iter().map(|&q| if q > 0.0 { 1.0 / q } else { 0.0 }).collect();
        Ok(Self {
            divergences,
            deltas,
            inv_q0,
        })
    }

    pub fn k(&self) -> usize {
        self.divergences.len()
    }

    pub fn divergences(&self) -> &[f64] {
        &self.divergences
    }

    fn residual(&self, p: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.inv_q0.len()];
        for (w, d) in p.iter().zip(&self.deltas) {
            for (ri, di) in r.iter_mut().zip(d) {
                *ri += w * di;
            }
        }
        r
    }

    /// `chi2(sum_k p_k Q_k || Q_0)`.
    pub fn chi2(&self, p: &[f64]) -> f64 {
        self.residual(p).iter().zip(&self.inv_q0).map(|(r, iq)| r * r * iq).sum()
    }

    /// Objective value, or `None` where the chi-squared vanishes.
    pub fn value(&self, p: &[f64]) -> Option<f64> {
        let c = self.chi2(p);
        if c < CHI2_FLOOR {
            return None;
        }
        let lin: f64 = p.iter().zip(&self.divergences).map(|(a, b)| a * b).sum();
        Some((2.0 * lin * lin / c).sqrt())
    }

    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let r = self.residual(p);
        let c: f64 = r.iter().zip(&self.inv_q0).map(|(r, iq)| r * r * iq).sum();
        let lin: f64 = p.iter().zip(&self.divergences).map(|(a, b)| a * b).sum();
        let s2 = std::f64::consts::SQRT_2;
        self.divergences
            .iter()
            .zip(&self.deltas)
            .map(|(dk, delta)| {
                let dc: f64 = 2.0 * delta.iter().zip(&r).zip(&self.inv_q0).map(|((a, b), iq)| a * b * iq).sum::<f64>();
                s2 * (dk / c.sqrt() - 0.5 * lin * dc / c.powf(1.5))
            })
            .collect()
    }
}

/// Closed form for binary-input channels.
pub fn covert_capacity_binary(legit: &Channel, warden: &Channel) -> Result<CovertCapacityResult> {
    if warden.inputs() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: warden.inputs(),
        });
    }
    let obj = CapacityObjective::new(legit, warden)?;
    let d = obj.divergences[0];
    let chi2 = chi_squared(warden.row(1), warden.no_input())?;
    Ok(CovertCapacityResult {
        l_star: (2.0 * d * d / chi2).sqrt(),
        argmax_p: vec![1.0],
        zero_capacity: d == 0.0,
        ill_conditioned: chi2 < CHI2_WARN,
    })
}

/// Maximize the objective over the simplex on `1..=K`.
pub fn covert_capacity_general(legit: &Channel, warden: &Channel) -> Result<CovertCapacityResult> {
    covert_capacity_with(legit, warden, &AscentOptions::default())
}

pub fn covert_capacity_with(legit: &Channel, warden: &Channel, opts: &AscentOptions) -> Result<CovertCapacityResult> {
    let obj = CapacityObjective::new(legit, warden)?;
    let k = obj.k();
    if obj.divergences.iter().all(|&d| d == 0.0) {
        let mut p = vec![0.0; k];
        p[0] = 1.0;
        return Ok(CovertCapacityResult {
            l_star: 0.0,
            ill_conditioned: obj.chi2(&p) < CHI2_WARN,
            argmax_p: p,
            zero_capacity: true,
        });
    }
    let f = |p: &[f64]| obj.value(p);
    let g = |p: &[f64]| obj.gradient(p);
    let best = simplex::maximize(&f, &g, k, opts).ok_or(Error::RedundantNoInput)?;
    Ok(CovertCapacityResult {
        l_star: best.value,
        ill_conditioned: obj.chi2(&best.argmax) < CHI2_WARN,
        argmax_p: best.argmax,
        zero_capacity: false,
    })
}

fn bsc_divergence(p: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::OutOfRange { what: "crossover", value: p });
    }
    if p == 0.0 {
        return Err(Error::AbsoluteContinuityViolation { input: 1 });
    }
    Ok((1.0 - 2.0 * p) * ((1.0 - p) / p).ln())
}

/// Closed form for a BSC(p) legitimate channel against a binary warden.
pub fn covert_capacity_bsc(p: f64, warden: &Channel) -> Result<f64> {
    let d = bsc_divergence(p)?;
    if warden.inputs() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: warden.inputs(),
        });
    }
    if first_non_dominated(warden).is_some() {
        return Err(Error::AbsoluteContinuityViolation { input: 1 });
    }
    if is_no_input_redundant(warden) {
        return Err(Error::RedundantNoInput);
    }
    let chi2 = chi_squared(warden.row(1), warden.no_input())?;
    Ok(d * (2.0 / chi2).sqrt())
}

/// `sigma2 / n_j` nats per square-root use for an AWGN receiver.
pub fn covert_capacity_awgn(nj: f64, sigma2: f64) -> Result<f64> {
    if !(nj > 0.0) || !nj.is_finite() {
        return Err(Error::OutOfRange { what: "noise variance", value: nj });
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::OutOfRange { what: "sigma2", value: sigma2 });
    }
    Ok(sigma2 / nj)
}

/// Covert capacity of the channel whose legitimate output is the warden's.
pub fn key_stream_capacity(warden: &Channel) -> Result<CovertCapacityResult> {
    covert_capacity_general(warden, warden)
}
