//! Transmission-probability policies for secondary transmitters.
//!
//! The cognitive policy scales an outage-constrained mean probability by
//! each device's CID weight `w_i = F_{I;m_i}(I_th)`:
//! `p_i = min{1, (w_i / E[w]) · E[p*]}`. Two baselines share the same
//! interface: slotted ALOHA with a common probability, and a hard
//! threshold that transmits iff the sensor reading is below `I_th`.

use rand::Rng;

use crate::analytics::c_alpha;
use crate::cid::{CidContext, CidModel};
use crate::error::{Error, Result};
use crate::params::RadioParams;

/// Which algebraic form of the outage-tight mean probability to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PStarForm {
    /// Tight form of the outage constraint:
    /// `(1/λ_s)·(ln(1/(1−τ)) / (r_p²·(P_s·β/P_p)^(2/α)·C(α)) − λ_p)`.
    #[default]
    Derived,
    /// Same with an additional `2/α` factor in the denominator.
    AsPrinted,
}

/// How `E[w]` is obtained for the cognitive policy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MeanWeight {
    /// Sample mean of the weights of all STs in the snapshot.
    #[default]
    PerSnapshot,
    /// A constant, e.g. from [`crate::engine::estimate_mean_weight`].
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    Cid {
        mean_weight: MeanWeight,
    },
    /// `None` uses the outage-tight mean probability so that all policies
    /// share the same primary budget.
    Aloha {
        p: Option<f64>,
    },
    Threshold,
}

impl PolicyKind {
    pub const CID: PolicyKind = PolicyKind::Cid {
        mean_weight: MeanWeight::PerSnapshot,
    };
    pub const ALOHA: PolicyKind = PolicyKind::Aloha { p: None };

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Cid { .. } => "cid",
            PolicyKind::Aloha { .. } => "aloha",
            PolicyKind::Threshold => "threshold",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolicyAssignment {
    pub probs: Vec<f64>,
    /// Empty until [`PolicyAssignment::decide`] is called.
    pub decisions: Vec<bool>,
    pub weights: Vec<f64>,
    pub mean_target: f64,
    /// Number of probabilities capped at one.
    pub clipped: usize,
    /// All weights were zero and the uniform fallback was used.
    pub degenerate: bool,
}

impl PolicyAssignment {
    fn uniform(n: usize, p: f64) -> Self {
        PolicyAssignment {
            probs: vec![p; n],
            decisions: Vec::new(),
            weights: Vec::new(),
            mean_target: p,
            clipped: 0,
            degenerate: false,
        }
    }

    /// Bernoulli decisions from pre-drawn uniforms: device `i` transmits iff
    /// `u_i < p_i`. Sharing the uniforms across policies gives common random
    /// numbers.
    pub fn decide(&mut self, uniforms: &[f64]) {
        assert_eq!(uniforms.len(), self.probs.len(), "one uniform per device");
        self.decisions = self
            .probs
            .iter()
            .zip(uniforms)
            .map(|(p, u)| u < p)
            .collect();
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let us: Vec<f64> = (0..self.probs.len()).map(|_| rng.random()).collect();
        self.decide(&us);
    }

    pub fn mean_prob(&self) -> f64 {
        if self.probs.is_empty() {
            0.0
        } else {
            self.probs.iter().sum::<f64>() / self.probs.len() as f64
        }
    }
}

/// Mean ST density the primary outage budget leaves after the PTs,
/// `ln(1/(1−τ)) / (r_p²·(P_s·β/P_p)^(2/α)·C(α))`.
pub fn outage_density_budget(params: &RadioParams, form: PStarForm) -> Result<f64> {
    if !(params.power_p > 0.0 && params.power_s > 0.0) {
        return Err(Error::Domain("transmit powers must be positive".into()));
    }
    let mut den = params.r_p
        * params.r_p
        * (params.power_s * params.beta / params.power_p).powf(2.0 / params.alpha)
        * c_alpha(params.alpha)?;
    if form == PStarForm::AsPrinted {
        den *= 2.0 / params.alpha;
    }
    Ok(-(-params.tau).ln_1p() / den)
}

/// Outage-tight mean transmission probability, clamped to `[0, 1]`.
pub fn expected_p_star(params: &RadioParams) -> Result<f64> {
    expected_p_star_with(params, PStarForm::Derived)
}

pub fn expected_p_star_with(params: &RadioParams, form: PStarForm) -> Result<f64> {
    params.validate()?;
    if params.lambda_s == 0.0 {
        return Err(Error::Domain("ST density must be positive".into()));
    }
    let interior = (outage_density_budget(params, form)? - params.lambda_p) / params.lambda_s;
    Ok(interior.clamp(0.0, 1.0))
}

/// `w_i = F_{I;m_i}(I_th)`: probability the ST's interference is below `i_th`.
pub fn weight(m_i: f64, i_th: f64, ctx: CidContext) -> Result<f64> {
    Ok(CidModel::new(m_i, ctx)?.cdf(i_th))
}

/// `p_i = min{1, (w_i / mean(w)) · mean_target}`, one pass, no
/// renormalisation after clipping.
pub fn assign_probabilities(weights: &[f64], mean_target: f64) -> Result<PolicyAssignment> {
    if weights.is_empty() {
        return Err(Error::Domain("no weights to assign from".into()));
    }
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    assign_with_mean_weight(weights, mean, mean_target)
}

pub fn assign_with_mean_weight(
    weights: &[f64],
    mean_weight: f64,
    mean_target: f64,
) -> Result<PolicyAssignment> {
    if !(0.0..=1.0).contains(&mean_target) {
        return Err(Error::invalid(
            "mean_target",
            format!("must lie in [0, 1], got {mean_target}"),
        ));
    }
    if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::Domain("weights must lie in [0, 1]".into()));
    }
    if mean_weight <= 0.0 {
        log::warn!(
            "all {} CID weights are zero; falling back to uniform p = {mean_target}",
            weights.len()
        );
        return Ok(PolicyAssignment {
            weights: weights.to_vec(),
            degenerate: true,
            ..PolicyAssignment::uniform(weights.len(), mean_target)
        });
    }
    let mut clipped = 0;
    let probs = weights
        .iter()
        .map(|w| {
            let raw = w / mean_weight * mean_target;
            if raw > 1.0 {
                clipped += 1;
                1.0
            } else {
                raw
            }
        })
        .collect();
    Ok(PolicyAssignment {
        probs,
        decisions: Vec::new(),
        weights: weights.to_vec(),
        mean_target,
        clipped,
        degenerate: false,
    })
}

pub fn baseline_aloha(n_st: usize, p: f64) -> Result<PolicyAssignment> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
    }
    Ok(PolicyAssignment::uniform(n_st, p))
}

/// Transmit with certainty iff the sensor reading is strictly below `i_th`.
pub fn baseline_threshold(measurements: &[f64], i_th: f64) -> PolicyAssignment {
    let probs: Vec<f64> = measurements
        .iter()
        .map(|&m| if m < i_th { 1.0 } else { 0.0 })
        .collect();
    let mean = if probs.is_empty() {
        0.0
    } else {
        probs.iter().sum::<f64>() / probs.len() as f64
    };
    PolicyAssignment {
        probs,
        decisions: Vec::new(),
        weights: Vec::new(),
        mean_target: mean,
        clipped: 0,
        degenerate: false,
    }
}

/// CID weight for a measured value; a sensor that measured nothing has no
/// PT in range, so the ST is clear of primary interference.
pub(crate) fn weight_or_clear(m_i: f64, i_th: f64, ctx: CidContext) -> Result<f64> {
    if m_i <= 0.0 {
        Ok(1.0)
    } else {
        weight(m_i, i_th, ctx)
    }
}

impl PolicyKind {
    /// Probabilities for every ST of a snapshot, given their sensors'
    /// measurements and the outage-tight mean `p_star`.
    pub fn assign(
        &self,
        measurements: &[f64],
        params: &RadioParams,
        p_star: f64,
    ) -> Result<PolicyAssignment> {
        match *self {
            PolicyKind::Aloha { p } => baseline_aloha(measurements.len(), p.unwrap_or(p_star)),
            PolicyKind::Threshold => Ok(baseline_threshold(measurements, params.i_th)),
            PolicyKind::Cid { mean_weight } => {
                if measurements.is_empty() {
                    return Ok(PolicyAssignment::uniform(0, p_star));
                }
                let ctx = CidContext {
                    power_p: params.power_p,
                    lambda_p: params.lambda_p,
                    alpha: params.alpha,
                    d: params.d,
                };
                let weights = measurements
                    .iter()
                    .map(|&m| weight_or_clear(m, params.i_th, ctx))
                    .collect::<Result<Vec<f64>>>()?;
                match mean_weight {
                    MeanWeight::PerSnapshot => assign_probabilities(&weights, p_star),
                    MeanWeight::Fixed(mw) => assign_with_mean_weight(&weights, mw, p_star),
                }
            }
        }
    }
}
