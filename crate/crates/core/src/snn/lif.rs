//! Leaky integrate-and-fire layers with conductance-based synapses.
//!
//! Membrane potential is advanced with forward Euler,
//!
//! ```text
//! tau dV/dt = (E_rest - V) + g_e (E_exc - V) + g_i (E_inh - V)
//! ```
//!
//! while conductances decay with the exact factor `exp(-dt / tau_g)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SimulationParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    Excitatory,
    Inhibitory,
}

/// Dynamic state of one layer of neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pub v: Vec<f64>,
    pub g_e: Vec<f64>,
    pub g_i: Vec<f64>,
    /// Adaptive threshold offset; stays zero for inhibitory layers.
    pub theta: Vec<f64>,
    pub refrac_remaining: Vec<f64>,
}

impl LayerState {
    /// All neurons at rest with closed synapses.
    pub fn resting(size: usize, kind: LayerKind, params: &SimulationParams) -> Self {
        let rest = match kind {
            LayerKind::Excitatory => params.e_rest_e,
            LayerKind::Inhibitory => params.e_rest_i,
        };
        Self {
            v: vec![rest; size],
            g_e: vec![0.0; size],
            g_i: vec![0.0; size],
            theta: vec![0.0; size],
            refrac_remaining: vec![0.0; size],
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    fn check_lengths(&self) -> Result<()> {
        let n = self.v.len();
        for (what, len) in [
            ("g_e length", self.g_e.len()),
            ("g_i length", self.g_i.len()),
            ("theta length", self.theta.len()),
            ("refractory length", self.refrac_remaining.len()),
        ] {
            if len != n {
                return Err(Error::Dimension {
                    what,
                    expected: n,
                    actual: len,
                });
            }
        }
        Ok(())
    }
}

/// Per-layer constants precomputed from [`SimulationParams`].
#[derive(Debug, Clone, Copy)]
pub struct LayerDynamics {
    pub kind: LayerKind,
    dt_over_tau: f64,
    e_rest: f64,
    e_exc: f64,
    e_inh: f64,
    v_thresh: f64,
    v_reset: f64,
    refrac: f64,
    dt: f64,
    decay_ge: f64,
    decay_gi: f64,
    theta_plus: f64,
}

impl LayerDynamics {
    pub fn new(kind: LayerKind, p: &SimulationParams) -> Self {
        let (tau, e_rest, e_exc, e_inh, v_thresh, v_reset, refrac) = match kind {
            LayerKind::Excitatory => (
                p.tau_e,
                p.e_rest_e,
                p.e_exc_e,
                p.e_inh_e,
                p.v_thresh_e,
                p.v_reset_e,
                p.refrac_e,
            ),
            LayerKind::Inhibitory => (
                p.tau_i,
                p.e_rest_i,
                p.e_exc_i,
                p.e_inh_i,
                p.v_thresh_i,
                p.v_reset_i,
                p.refrac_i,
            ),
        };
        Self {
            kind,
            dt_over_tau: p.dt / tau,
            e_rest,
            e_exc,
            e_inh,
            v_thresh,
            v_reset,
            refrac,
            dt: p.dt,
            decay_ge: (-p.dt / p.tau_ge).exp(),
            decay_gi: (-p.dt / p.tau_gi).exp(),
            theta_plus: if kind == LayerKind::Excitatory {
                p.theta_plus
            } else {
                0.0
            },
        }
    }

    pub fn e_rest(&self) -> f64 {
        self.e_rest
    }

    /// Advances every neuron by one clock step and pushes the indices of the
    /// neurons that fired into `fired` (cleared first). Drives are
    /// conductance increments applied before integration. `theta` grows by
    /// `theta_plus` per spike only when `adapt_threshold` is set.
    pub fn step(
        &self,
        layer: &mut LayerState,
        exc_drive: &[f64],
        inh_drive: &[f64],
        adapt_threshold: bool,
        fired: &mut Vec<usize>,
    ) {
        for (g, d) in layer.g_e.iter_mut().zip(exc_drive) {
            *g += d;
        }
        for (g, d) in layer.g_i.iter_mut().zip(inh_drive) {
            *g += d;
        }
        self.integrate(layer, adapt_threshold, fired);
    }

    /// [`LayerDynamics::step`] for drives already added to the layer's
    /// conductances.
    pub(crate) fn integrate(
        &self,
        layer: &mut LayerState,
        adapt_threshold: bool,
        fired: &mut Vec<usize>,
    ) {
        fired.clear();
        let n = layer.v.len();
        let (v, g_e, g_i) = (&mut layer.v[..n], &mut layer.g_e[..n], &mut layer.g_i[..n]);
        let refrac = &mut layer.refrac_remaining[..n];
        // Integration pass, branch-free so it vectorizes. Refractory neurons
        // are pinned at reset, which lies below threshold, so the threshold
        // pass below never sees them.
        for i in 0..n {
            let ge = g_e[i];
            let gi = g_i[i];
            let vi = v[i];
            let dv = self.dt_over_tau
                * ((self.e_rest - vi) + ge * (self.e_exc - vi) + gi * (self.e_inh - vi));
            // 1.0 while refractory, else 0.0; blending keeps the loop free
            // of branches
            let held = f64::from(u8::from(refrac[i] > 1e-9));
            v[i] = held * self.v_reset + (1.0 - held) * (vi + dv);
            refrac[i] = (refrac[i] - held * self.dt).max(0.0);
            g_e[i] = flush_subnormal(ge * self.decay_ge);
            g_i[i] = flush_subnormal(gi * self.decay_gi);
        }
        let theta = &mut layer.theta[..n];
        for i in 0..n {
            if v[i] > self.v_thresh + theta[i] {
                v[i] = self.v_reset;
                refrac[i] = self.refrac;
                if adapt_threshold {
                    theta[i] += self.theta_plus;
                }
                fired.push(i);
            }
        }
    }
}

impl LayerDynamics {
    /// True when, absent further input, no neuron of `layer` can reach
    /// threshold again: conductances have died out and every membrane sits
    /// clearly below threshold, so it only relaxes towards rest from here.
    pub fn quiescent(&self, layer: &LayerState) -> bool {
        const G_EPS: f64 = 1e-9;
        const V_MARGIN: f64 = 1e-6;
        self.e_rest < self.v_thresh
            && layer.g_e.iter().all(|&g| g < G_EPS)
            && layer.g_i.iter().all(|&g| g < G_EPS)
            && layer
                .v
                .iter()
                .zip(&layer.theta)
                .all(|(&v, &t)| v < self.v_thresh + t - V_MARGIN)
    }
}

// Long silent stretches decay conductances into the subnormal range, where
// float arithmetic is dramatically slower.
#[inline]
fn flush_subnormal(g: f64) -> f64 {
    if g < f64::MIN_POSITIVE {
        0.0
    } else {
        g
    }
}

/// One clock step of a layer; returns the per-neuron spike indicator.
///
/// Excitatory layers adapt their threshold on every spike.
pub fn lif_step(
    layer: &mut LayerState,
    exc_drive: &[f64],
    inh_drive: &[f64],
    params: &SimulationParams,
    kind: LayerKind,
) -> Result<Vec<bool>> {
    layer.check_lengths()?;
    let n = layer.len();
    for (what, drive) in [("excitatory drive", exc_drive), ("inhibitory drive", inh_drive)] {
        if drive.len() != n {
            return Err(Error::Dimension {
                what,
                expected: n,
                actual: drive.len(),
            });
        }
        if drive.iter().any(|&d| !(d >= 0.0)) {
            return Err(Error::InvalidInput(format!("{what} must be nonnegative")));
        }
    }
    let dynamics = LayerDynamics::new(kind, params);
    let mut fired = Vec::new();
    dynamics.step(layer, exc_drive, inh_drive, kind == LayerKind::Excitatory, &mut fired);
    if let Some(i) = layer.v.iter().position(|v| !v.is_finite()) {
        return Err(Error::Invariant(format!(
            "membrane potential of neuron {i} became non-finite"
        )));
    }
    let mut spikes = vec![false; n];
    for i in fired {
        spikes[i] = true;
    }
    Ok(spikes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one(kind: LayerKind) -> (LayerState, SimulationParams) {
        let p = SimulationParams::default();
        (LayerState::resting(1, kind, &p), p)
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let (mut layer, p) = one(LayerKind::Excitatory);
        let spikes = lif_step(&mut layer, &[0.0], &[0.0], &p, LayerKind::Excitatory).unwrap();
        assert_eq!(layer.v[0], -65.0);
        assert!(!spikes[0]);
    }

    #[test]
    fn one_euler_step_with_open_excitatory_synapse() {
        let (mut layer, p) = one(LayerKind::Excitatory);
        layer.g_e[0] = 1.0;
        lif_step(&mut layer, &[0.0], &[0.0], &p, LayerKind::Excitatory).unwrap();
        // dV = (0.5 / 100) * (0 + 1 * 65) = 0.325
        assert_relative_eq!(layer.v[0], -64.675, max_relative = 1e-12);
    }

    #[test]
    fn conductance_decays_with_exact_factor() {
        let (mut layer, p) = one(LayerKind::Excitatory);
        layer.g_e[0] = 0.8;
        lif_step(&mut layer, &[0.0], &[0.0], &p, LayerKind::Excitatory).unwrap();
        assert_relative_eq!(layer.g_e[0], 0.8 * (-0.5f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(layer.g_e[0], 0.48522, epsilon = 1e-5);
    }

    #[test]
    fn drive_is_added_before_integration() {
        let (mut a, p) = one(LayerKind::Excitatory);
        let (mut b, _) = one(LayerKind::Excitatory);
        b.g_e[0] = 1.0;
        lif_step(&mut a, &[1.0], &[0.0], &p, LayerKind::Excitatory).unwrap();
        lif_step(&mut b, &[0.0], &[0.0], &p, LayerKind::Excitatory).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn firing_resets_and_adapts_threshold() {
        let (mut layer, p) = one(LayerKind::Excitatory);
        layer.v[0] = -51.0;
        let spikes = lif_step(&mut layer, &[0.0], &[0.0], &p, LayerKind::Excitatory).unwrap();
        assert!(spikes[0]);
        assert_eq!(layer.v[0], p.v_reset_e);
        assert_eq!(layer.theta[0], p.theta_plus);
        assert_eq!(layer.refrac_remaining[0], p.refrac_e);
        // held at reset for refrac / dt steps regardless of drive
        for _ in 0..10 {
            let s = lif_step(&mut layer, &[50.0], &[0.0], &p, LayerKind::Excitatory).unwrap();
            assert!(!s[0]);
            assert_eq!(layer.v[0], p.v_reset_e);
        }
        assert_eq!(layer.refrac_remaining[0], 0.0);
    }

    #[test]
    fn inhibitory_layer_never_adapts() {
        let (mut layer, p) = one(LayerKind::Inhibitory);
        layer.v[0] = -38.0;
        let spikes = lif_step(&mut layer, &[0.0], &[0.0], &p, LayerKind::Inhibitory).unwrap();
        assert!(spikes[0]);
        assert_eq!(layer.v[0], p.v_reset_i);
        assert_eq!(layer.theta[0], 0.0);
    }

    #[test]
    fn rejects_negative_drive_and_bad_lengths() {
        let (mut layer, p) = one(LayerKind::Excitatory);
        assert!(lif_step(&mut layer, &[-1.0], &[0.0], &p, LayerKind::Excitatory).is_err());
        assert!(lif_step(&mut layer, &[0.0, 0.0], &[0.0], &p, LayerKind::Excitatory).is_err());
    }

    #[test]
    fn inhibition_pulls_toward_reversal() {
        let (mut layer, p) = one(LayerKind::Excitatory);
        lif_step(&mut layer, &[0.0], &[17.0], &p, LayerKind::Excitatory).unwrap();
        assert!(layer.v[0] < p.e_rest_e);
        assert!(layer.v[0] > p.e_inh_e);
    }
}
