//! Closed-form success, outage and area spectral efficiency for Rayleigh
//! fading over Poisson interferer fields, noise neglected.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::params::RadioParams;

/// `C(α) = (2π/α)·Γ(2/α)·Γ(1 − 2/α)`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 2.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!(
            "C(alpha) needs alpha > 2 (pole of Gamma(1 - 2/alpha) at 2), got {alpha}"
        )));
    }
    let delta = 2.0 / alpha;
    Ok(PI * delta * gamma(delta) * gamma(1.0 - delta))
}

#[derive(Debug, Clone, Copy)]
pub struct ClosedFormInputs<'a> {
    pub params: &'a RadioParams,
    /// Mean ST transmission probability.
    pub mean_p: f64,
}

impl<'a> ClosedFormInputs<'a> {
    pub fn new(params: &'a RadioParams, mean_p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mean_p) {
            return Err(Error::invalid(
                "mean_p",
                format!("must lie in [0, 1], got {mean_p}"),
            ));
        }
        Ok(ClosedFormInputs { params, mean_p })
    }

    fn interferer_density(&self) -> f64 {
        self.params.lambda_p + self.params.lambda_s * self.mean_p
    }

    fn power_ratio(&self, num: f64, den: f64) -> Result<f64> {
        if !(num > 0.0 && den > 0.0) {
            return Err(Error::Domain(
                "closed forms need positive transmit powers".into(),
            ));
        }
        Ok((num * self.params.beta / den).powf(2.0 / self.params.alpha))
    }
}

/// `p_s = exp(−(λ_p + λ_s·E[p])·r_s²·(P_p·β/P_s)^(2/α)·C(α))`.
pub fn secondary_success_prob(inputs: &ClosedFormInputs) -> Result<f64> {
    let p = inputs.params;
    let k = inputs.power_ratio(p.power_p, p.power_s)?;
    Ok((-inputs.interferer_density() * p.r_s * p.r_s * k * c_alpha(p.alpha)?).exp())
}

/// `Pr{SIR_p ≤ β} = 1 − exp(−(λ_p + λ_s·E[p])·r_p²·(P_s·β/P_p)^(2/α)·C(α))`.
pub fn primary_outage(inputs: &ClosedFormInputs) -> Result<f64> {
    let p = inputs.params;
    let k = inputs.power_ratio(p.power_s, p.power_p)?;
    Ok(-(-inputs.interferer_density() * p.r_p * p.r_p * k * c_alpha(p.alpha)?).exp_m1())
}

/// `η = λ_s·E[p]·p_s·log(1 + β)`, in bit/s/Hz/m² for base 2.
pub fn ase_closed_form(inputs: &ClosedFormInputs) -> Result<f64> {
    let p = inputs.params;
    Ok(p.lambda_s * inputs.mean_p * secondary_success_prob(inputs)? * p.link_rate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn fig5() -> RadioParams {
        RadioParams::default()
    }

    #[test]
    fn c_alpha_examples() {
        assert!(rel(c_alpha(4.0).unwrap(), PI * PI / 2.0) < 1e-12);
        // Γ(1/3)Γ(2/3) = π / sin(π/3)
        assert!(rel(c_alpha(3.0).unwrap(), 4.0 * PI * PI / (3.0 * 3f64.sqrt())) < 1e-12);
        assert!(c_alpha(2.0).is_err());
        assert!(c_alpha(1.5).is_err());
        assert!(c_alpha(2.0 + 1e-9).unwrap() > 1e8);
    }

    #[test]
    fn success_examples() {
        let empty = RadioParams {
            lambda_p: 0.0,
            lambda_s: 0.0,
            ..fig5()
        };
        assert_eq!(
            secondary_success_prob(&ClosedFormInputs::new(&empty, 0.5).unwrap()).unwrap(),
            1.0
        );

        let p = fig5();
        let v = secondary_success_prob(&ClosedFormInputs::new(&p, 0.0).unwrap()).unwrap();
        assert!(rel(v, 0.607_547_740_080_309_8) < 1e-9, "{v}");
        let v =
            secondary_success_prob(&ClosedFormInputs::new(&p, 0.549_453_907_327_163_5).unwrap())
                .unwrap();
        assert!(rel(v, 0.039_305_607_663_749_01) < 1e-9, "{v}");
    }

    #[test]
    fn outage_examples() {
        let empty = RadioParams {
            lambda_p: 0.0,
            lambda_s: 0.0,
            ..fig5()
        };
        assert_eq!(
            primary_outage(&ClosedFormInputs::new(&empty, 1.0).unwrap()).unwrap(),
            0.0
        );
        let p = fig5();
        let v = primary_outage(&ClosedFormInputs::new(&p, 0.3).unwrap()).unwrap();
        assert!(rel(v, 0.031_097_843_355_894_383) < 1e-9, "{v}");
    }

    #[test]
    fn ase_examples() {
        let p = fig5();
        assert_eq!(
            ase_closed_form(&ClosedFormInputs::new(&p, 0.0).unwrap()).unwrap(),
            0.0
        );
        let unit = RadioParams {
            lambda_p: 0.0,
            lambda_s: 0.01,
            beta: 1.0,
            ..fig5()
        };
        // with λ_s > 0 the success probability is below one; remove the
        // ST term by giving STs no interference footprint
        let ps_one = RadioParams {
            power_p: 1e-300,
            ..unit
        };
        let v = ase_closed_form(&ClosedFormInputs::new(&ps_one, 1.0).unwrap()).unwrap();
        assert!(rel(v, 0.01) < 1e-12, "{v}");
        let v =
            ase_closed_form(&ClosedFormInputs::new(&p, 0.549_453_907_327_163_5).unwrap()).unwrap();
        assert!(rel(v, 3.418_058_894_188_438e-4) < 1e-9, "{v}");
    }

    #[test]
    fn mean_p_out_of_range_rejected() {
        let p = fig5();
        assert!(ClosedFormInputs::new(&p, 1.5).is_err());
        assert!(ClosedFormInputs::new(&p, -0.1).is_err());
    }

    #[test]
    fn monotone_in_mean_p() {
        let p = fig5();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let ps: Vec<f64> = grid
            .iter()
            .map(|&q| secondary_success_prob(&ClosedFormInputs::new(&p, q).unwrap()).unwrap())
            .collect();
        let po: Vec<f64> = grid
            .iter()
            .map(|&q| primary_outage(&ClosedFormInputs::new(&p, q).unwrap()).unwrap())
            .collect();
        assert!(ps.windows(2).all(|w| w[1] < w[0]));
        assert!(po.windows(2).all(|w| w[1] > w[0]));
    }
}
