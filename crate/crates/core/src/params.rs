use crate::error::{Error, Result};
use crate::model::Arena;
use crate::units::{db_to_linear, dbm_to_watts};

/// Physical and protocol constants for one experiment, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    /// PT density (1/m²).
    pub lambda_p: f64,
    /// ST density (1/m²).
    pub lambda_s: f64,
    /// PT transmit power (W).
    pub power_p: f64,
    /// ST transmit power (W).
    pub power_s: f64,
    /// Pathloss exponent, strictly greater than 2.
    pub alpha: f64,
    /// Target SIR (linear).
    pub beta: f64,
    /// Primary outage cap.
    pub tau: f64,
    /// ST to sensor distance (m).
    pub d: f64,
    /// Secondary link distance (m).
    pub r_s: f64,
    /// Primary link distance (m).
    pub r_p: f64,
    /// Interference threshold used by the CID weight and the hard-threshold baseline (W).
    pub i_th: f64,
    /// Receiver noise power (W). `None` evaluates pure SIR.
    pub noise: Option<f64>,
    /// Edge length of the square arena (m).
    pub area_side: f64,
    /// Use `min{1, r^-α}` instead of `r^-α`.
    pub pathloss_bounded: bool,
    /// Wrap the arena into a torus when measuring distances.
    pub torus: bool,
    /// Logarithm base of the spectral efficiency term.
    pub log_base: f64,
}

impl Default for RadioParams {
    /// The evaluation setup of the reference experiments: 23/5 dBm powers,
    /// 3 m links, 1 m sensor offset, 2 dBm threshold, 3 dB target SIR,
    /// -70 dBm noise, 100 m arena.
    fn default() -> Self {
        RadioParams {
            lambda_p: 0.001,
            lambda_s: 0.01,
            power_p: dbm_to_watts(23.0),
            power_s: dbm_to_watts(5.0),
            alpha: 4.0,
            beta: db_to_linear(3.0),
            tau: 0.05,
            d: 1.0,
            r_s: 3.0,
            r_p: 3.0,
            i_th: dbm_to_watts(2.0),
            noise: Some(dbm_to_watts(-70.0)),
            area_side: 100.0,
            pathloss_bounded: true,
            torus: false,
            log_base: 2.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        fn non_negative(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ))
            }
        }
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(
                "alpha",
                format!("must be > 2, got {}", self.alpha),
            ));
        }
        non_negative("lambda_p", self.lambda_p)?;
        non_negative("lambda_s", self.lambda_s)?;
        non_negative("power_p", self.power_p)?;
        non_negative("power_s", self.power_s)?;
        non_negative("d", self.d)?;
        non_negative("r_s", self.r_s)?;
        non_negative("r_p", self.r_p)?;
        non_negative("i_th", self.i_th)?;
        if let Some(n) = self.noise {
            non_negative("noise", n)?;
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::invalid(
                "tau",
                format!("must lie in (0, 1), got {}", self.tau),
            ));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(
                "beta",
                format!("must be > 0, got {}", self.beta),
            ));
        }
        if !(self.area_side > 0.0 && self.area_side.is_finite()) {
            return Err(Error::invalid(
                "area_side",
                format!("must be > 0, got {}", self.area_side),
            ));
        }
        if !(self.log_base > 1.0 && self.log_base.is_finite()) {
            return Err(Error::invalid(
                "log_base",
                format!("must be > 1, got {}", self.log_base),
            ));
        }
        Ok(())
    }

    pub fn arena(&self) -> Arena {
        Arena {
            side: self.area_side,
            torus: self.torus,
        }
    }

    pub fn area(&self) -> f64 {
        self.area_side * self.area_side
    }

    /// Spectral efficiency of one successful link, `log_base(1 + β)`.
    pub fn link_rate(&self) -> f64 {
        (1.0 + self.beta).ln() / self.log_base.ln()
    }

    /// The regime in which the closed-form success and outage expressions
    /// are exact: unbounded pathloss, no noise, torus arena.
    pub fn formula_regime(mut self) -> Self {
        self.pathloss_bounded = false;
        self.noise = None;
        self.torus = true;
        self
    }
}
