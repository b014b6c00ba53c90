//! Plastic input→excitatory synapses and their trace-gated STDP rules.

use rand::Rng;

use crate::error::{Error, Result};
use crate::params::SimulationParams;

/// Learned input weights and the presynaptic trace.
///
/// `w_pe` is stored row-major as `[input][excitatory]`, so the weights fanning
/// out of one input neuron are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseState {
    pub k_p: usize,
    pub k_e: usize,
    pub w_pe: Vec<f64>,
    pub x_pre: Vec<f64>,
}

impl SynapseState {
    pub fn zeros(k_p: usize, k_e: usize) -> Self {
        Self {
            k_p,
            k_e,
            w_pe: vec![0.0; k_p * k_e],
            x_pre: vec![0.0; k_p],
        }
    }

    /// Weights drawn i.i.d. from U(0, init_weight_fraction * w_max).
    pub fn random<R: Rng>(params: &SimulationParams, rng: &mut R) -> Self {
        let hi = params.init_weight_fraction * params.w_max;
        let mut syn = Self::zeros(params.k_p, params.k_e);
        for w in syn.w_pe.iter_mut() {
            *w = rng.random::<f64>() * hi;
        }
        syn
    }

    pub fn from_weights(k_p: usize, k_e: usize, w_pe: Vec<f64>) -> Result<Self> {
        if w_pe.len() != k_p * k_e {
            return Err(Error::Dimension {
                what: "weight matrix size",
                expected: k_p * k_e,
                actual: w_pe.len(),
            });
        }
        Ok(Self {
            k_p,
            k_e,
            w_pe,
            x_pre: vec![0.0; k_p],
        })
    }

    #[inline]
    pub fn weight(&self, p: usize, e: usize) -> f64 {
        self.w_pe[p * self.k_e + e]
    }

    #[inline]
    pub fn row(&self, p: usize) -> &[f64] {
        &self.w_pe[p * self.k_e..(p + 1) * self.k_e]
    }

    /// Rescales each excitatory neuron's incoming weights to sum to `target`,
    /// clamping to `[0, w_max]` afterwards. All-zero columns are left alone.
    pub fn normalize_columns(&mut self, target: f64, w_max: f64) {
        let mut sums = vec![0.0; self.k_e];
        for row in self.w_pe.chunks_exact(self.k_e) {
            for (s, &w) in sums.iter_mut().zip(row) {
                *s += w;
            }
        }
        let factors: Vec<f64> = sums
            .iter()
            .map(|&s| if s > 0.0 { target / s } else { 1.0 })
            .collect();
        for row in self.w_pe.chunks_exact_mut(self.k_e) {
            for (w, &f) in row.iter_mut().zip(&factors) {
                *w = (*w * f).min(w_max);
            }
        }
    }
}

#[inline]
fn soft_bound(w_max: f64, w: f64, mu: f64) -> f64 {
    let room = w_max - w;
    if mu == 1.0 {
        room
    } else if mu == 0.0 {
        1.0
    } else {
        room.max(0.0).powf(mu)
    }
}

/// Weight change on a postsynaptic spike:
/// `w += eta_post * (x_pre - x_tar) * (w_max - w)^mu`, clamped to `[0, w_max]`.
pub fn stdp_update_on_post(syn: &mut SynapseState, firing_excitatory: &[usize], params: &SimulationParams) {
    let k_e = syn.k_e;
    for &e in firing_excitatory {
        debug_assert!(e < k_e);
        for p in 0..syn.k_p {
            let idx = p * k_e + e;
            let w = syn.w_pe[idx];
            let dw = params.eta_post * (syn.x_pre[p] - params.x_tar) * soft_bound(params.w_max, w, params.mu);
            syn.w_pe[idx] = (w + dw).clamp(0.0, params.w_max);
        }
    }
}

/// Depression on a presynaptic spike that follows postsynaptic activity:
/// `w -= eta_pre * x_post`, floored at zero.
pub fn stdp_update_on_pre(
    syn: &mut SynapseState,
    firing_inputs: &[u32],
    x_post: &[f64],
    params: &SimulationParams,
) {
    let k_e = syn.k_e;
    for &p in firing_inputs {
        let row = &mut syn.w_pe[p as usize * k_e..(p as usize + 1) * k_e];
        for (w, &x) in row.iter_mut().zip(x_post) {
            *w = (*w - params.eta_pre * x).max(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> SimulationParams {
        SimulationParams {
            k_p: 1,
            k_e: 1,
            k_i: 1,
            x_tar: 0.3,
            ..Default::default()
        }
    }

    #[test]
    fn saturated_weight_does_not_move() {
        let p = params();
        let mut syn = SynapseState::from_weights(1, 1, vec![1.0]).unwrap();
        syn.x_pre[0] = 5.0;
        stdp_update_on_post(&mut syn, &[0], &p);
        assert_eq!(syn.w_pe[0], 1.0);
    }

    #[test]
    fn potentiation_matches_hand_evaluation() {
        let p = params();
        let mut syn = SynapseState::from_weights(1, 1, vec![0.2]).unwrap();
        syn.x_pre[0] = 0.5;
        stdp_update_on_post(&mut syn, &[0], &p);
        // 1e-2 * (0.5 - 0.3) * (1 - 0.2) = 1.6e-3
        assert_relative_eq!(syn.w_pe[0], 0.2016, max_relative = 1e-12);
    }

    #[test]
    fn silent_input_depresses_but_never_below_zero() {
        let p = params();
        let mut syn = SynapseState::from_weights(1, 1, vec![0.001]).unwrap();
        stdp_update_on_post(&mut syn, &[0], &p);
        assert!(syn.w_pe[0] < 0.001);
        for _ in 0..100 {
            stdp_update_on_post(&mut syn, &[0], &p);
        }
        assert_eq!(syn.w_pe[0], 0.0);
    }

    #[test]
    fn pre_rule_depresses_by_post_trace() {
        let p = params();
        let mut syn = SynapseState::from_weights(1, 2, vec![0.5, 0.5]).unwrap();
        stdp_update_on_pre(&mut syn, &[0], &[1.0, 0.0], &p);
        assert_relative_eq!(syn.w_pe[0], 0.5 - 1e-4, max_relative = 1e-12);
        assert_eq!(syn.w_pe[1], 0.5);
    }

    #[test]
    fn normalization_hits_target() {
        let mut syn = SynapseState::from_weights(3, 2, vec![0.1, 0.2, 0.3, 0.0, 0.2, 0.4]).unwrap();
        syn.normalize_columns(1.2, 1.0);
        let col0: f64 = (0..3).map(|p| syn.weight(p, 0)).sum();
        let col1: f64 = (0..3).map(|p| syn.weight(p, 1)).sum();
        assert_relative_eq!(col0, 1.2, max_relative = 1e-12);
        assert_relative_eq!(col1, 1.2, max_relative = 1e-12);
    }
}
