//! Neuronal, synaptic and learning constants of a single spiking module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every constant needed to simulate and train one module.
///
/// Times are in milliseconds, potentials in millivolts, conductances and
/// weights are dimensionless. Defaults reproduce the published regime:
/// 28×28 input, 400 excitatory / 400 inhibitory neurons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationParams {
    pub dt: f64,
    pub presentation_duration: f64,
    pub rest_duration: f64,

    pub tau_e: f64,
    pub tau_i: f64,
    pub e_rest_e: f64,
    pub e_rest_i: f64,
    pub e_exc_e: f64,
    pub e_exc_i: f64,
    pub e_inh_e: f64,
    pub e_inh_i: f64,
    pub tau_ge: f64,
    pub tau_gi: f64,
    pub v_thresh_e: f64,
    pub v_thresh_i: f64,
    pub v_reset_e: f64,
    pub v_reset_i: f64,
    pub refrac_e: f64,
    pub refrac_i: f64,

    pub theta_plus: f64,
    pub tau_theta: f64,

    pub eta_pre: f64,
    pub eta_post: f64,
    pub x_tar: f64,
    pub tau_trace: f64,
    pub w_max: f64,
    pub mu: f64,
    pub w_ei: f64,
    pub w_ie: f64,

    pub max_input_rate: f64,

    pub k_p: usize,
    pub k_e: usize,
    pub k_i: usize,

    /// Learning presentations with fewer excitatory spikes than this are repeated.
    pub min_spike_floor: u32,
    /// Fractional increase of `max_input_rate` per repeated presentation.
    pub rate_step: f64,
    pub max_retries: u32,
    /// Column sum each excitatory neuron's input weights are rescaled to
    /// after every learning presentation. `None` disables normalization.
    pub weight_norm_sum: Option<f64>,
    /// Initial weights are drawn from U(0, init_weight_fraction * w_max).
    pub init_weight_fraction: f64,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            dt: 0.5,
            presentation_duration: 350.0,
            rest_duration: 150.0,
            tau_e: 100.0,
            tau_i: 10.0,
            e_rest_e: -65.0,
            e_rest_i: -60.0,
            e_exc_e: 0.0,
            e_exc_i: 0.0,
            e_inh_e: -100.0,
            e_inh_i: -85.0,
            tau_ge: 1.0,
            tau_gi: 0.5,
            v_thresh_e: -52.0,
            v_thresh_i: -40.0,
            v_reset_e: -65.0,
            v_reset_i: -45.0,
            refrac_e: 5.0,
            refrac_i: 2.0,
            theta_plus: 0.05,
            tau_theta: 1e7,
            eta_pre: 1e-4,
            eta_post: 1e-2,
            x_tar: 0.4,
            tau_trace: 20.0,
            w_max: 1.0,
            mu: 1.0,
            w_ei: 10.4,
            w_ie: 17.0,
            max_input_rate: 63.75,
            k_p: 28 * 28,
            k_e: 400,
            k_i: 400,
            min_spike_floor: 5,
            rate_step: 32.0 / 63.75,
            max_retries: 10,
            weight_norm_sum: Some(78.0),
            init_weight_fraction: 0.3,
        }
    }
}

impl SimulationParams {
    /// Number of clock steps in one image presentation.
    pub fn presentation_steps(&self) -> usize {
        (self.presentation_duration / self.dt).round() as usize
    }

    pub fn rest_steps(&self) -> usize {
        (self.rest_duration / self.dt).round() as usize
    }

    /// Checks every invariant of the record.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return fail(format!("dt must be positive, got {}", self.dt));
        }
        let ratio = self.presentation_duration / self.dt;
        if !(self.presentation_duration > 0.0) || (ratio - ratio.round()).abs() > 1e-9 {
            return fail(format!(
                "presentation_duration {} is not a positive multiple of dt {}",
                self.presentation_duration, self.dt
            ));
        }
        let rest = self.rest_duration / self.dt;
        if self.rest_duration < 0.0 || (rest - rest.round()).abs() > 1e-9 {
            return fail(format!(
                "rest_duration {} is not a nonnegative multiple of dt",
                self.rest_duration
            ));
        }
        if self.k_e != self.k_i {
            return fail(format!(
                "excitatory and inhibitory layers must pair one-to-one (k_e = {}, k_i = {})",
                self.k_e, self.k_i
            ));
        }
        if self.k_p == 0 || self.k_e == 0 {
            return fail("layer sizes must be nonzero".into());
        }
        if !(self.w_max > 0.0) || !(self.mu >= 0.0) {
            return fail(format!("need w_max > 0 and mu >= 0 (w_max = {}, mu = {})", self.w_max, self.mu));
        }
        if !(self.eta_pre > 0.0) || !(self.eta_post > 0.0) {
            return fail("learning rates must be positive".into());
        }
        if !(self.max_input_rate > 0.0) {
            return fail("max_input_rate must be positive".into());
        }
        if self.v_reset_e >= self.v_thresh_e || self.v_reset_i >= self.v_thresh_i {
            return fail("reset potentials must lie below their thresholds".into());
        }
        if !(self.e_inh_e < self.e_rest_e && self.e_rest_e < self.v_thresh_e) {
            return fail("need e_inh_e < e_rest_e < v_thresh_e".into());
        }
        for (name, tau) in [
            ("tau_e", self.tau_e),
            ("tau_i", self.tau_i),
            ("tau_ge", self.tau_ge),
            ("tau_gi", self.tau_gi),
            ("tau_theta", self.tau_theta),
            ("tau_trace", self.tau_trace),
        ] {
            if !(tau > 0.0) {
                return fail(format!("{name} must be positive, got {tau}"));
            }
        }
        if self.refrac_e < 0.0 || self.refrac_i < 0.0 {
            return fail("refractory periods must be nonnegative".into());
        }
        if let Some(sum) = self.weight_norm_sum {
            if !(sum > 0.0) {
                return fail(format!("weight_norm_sum must be positive, got {sum}"));
            }
        }
        if !(0.0..=1.0).contains(&self.init_weight_fraction) {
            return fail("init_weight_fraction must lie in [0, 1]".into());
        }
        let peak = self.max_input_rate * (1.0 + self.rate_step * self.max_retries as f64);
        if peak * self.dt / 1000.0 > 1.0 {
            return fail(format!(
                "dt = {} ms too large for a peak input rate of {peak} Hz",
                self.dt
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = SimulationParams::default();
        p.validate().unwrap();
        assert_eq!(p.presentation_steps(), 700);
        assert_eq!(p.rest_steps(), 300);
        assert_eq!(p.k_p, 784);
    }

    #[test]
    fn rejects_unpaired_layers() {
        let p = SimulationParams {
            k_i: 399,
            ..Default::default()
        };
        assert!(matches!(p.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_non_multiple_duration() {
        let p = SimulationParams {
            presentation_duration: 350.25,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn rejects_threshold_below_rest() {
        let p = SimulationParams {
            v_thresh_e: -70.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn partial_json_uses_defaults() {
        let p: SimulationParams = serde_json::from_str(r#"{"k_e": 10, "k_i": 10}"#).unwrap();
        assert_eq!(p.k_e, 10);
        assert_eq!(p.tau_gi, 0.5);
    }
}
