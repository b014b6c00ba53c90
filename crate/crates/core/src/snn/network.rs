//! One three-layer module: Poisson input, excitatory layer with plastic
//! input synapses, and a one-to-one paired inhibitory layer providing
//! lateral inhibition.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::encode::PoissonEncoder;
use super::lif::{LayerDynamics, LayerKind, LayerState};
use super::stdp::{stdp_update_on_post, stdp_update_on_pre, SynapseState};
use crate::error::{Error, Result};
use crate::params::SimulationParams;
use crate::seed::rng_from_seed;

/// Excitatory spike tallies for a single presentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpikeCounts(pub Vec<u32>);

impl SpikeCounts {
    pub fn zeros(k_e: usize) -> Self {
        SpikeCounts(vec![0; k_e])
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Result of a learning presentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    pub counts: SpikeCounts,
    /// How many times the image was re-presented at a boosted rate.
    pub retries: u32,
    /// The retry cap was hit without reaching the spike floor; counts are zero.
    pub silent: bool,
}

/// Learned state of one spiking module.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub params: SimulationParams,
    pub syn: SynapseState,
    /// Adaptive threshold offsets of the excitatory layer, mV.
    pub theta: Vec<f64>,
}

impl Network {
    /// Fresh module with seeded random weights (normalized when enabled).
    pub fn new(params: SimulationParams, weight_seed: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = rng_from_seed(weight_seed);
        let mut syn = SynapseState::random(&params, &mut rng);
        if let Some(target) = params.weight_norm_sum {
            syn.normalize_columns(target, params.w_max);
        }
        let theta = vec![0.0; params.k_e];
        Ok(Self { params, syn, theta })
    }

    pub fn from_parts(params: SimulationParams, syn: SynapseState, theta: Vec<f64>) -> Result<Self> {
        params.validate()?;
        if syn.k_p != params.k_p || syn.k_e != params.k_e {
            return Err(Error::Dimension {
                what: "synapse shape vs params",
                expected: params.k_p * params.k_e,
                actual: syn.k_p * syn.k_e,
            });
        }
        if theta.len() != params.k_e {
            return Err(Error::Dimension {
                what: "theta length",
                expected: params.k_e,
                actual: theta.len(),
            });
        }
        if theta.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidInput(
                "adaptive thresholds must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { params, syn, theta })
    }

    pub fn k_e(&self) -> usize {
        self.params.k_e
    }

    /// Presents `image` with learning off. Does not modify the module.
    pub fn respond<R: Rng>(&self, image: &[f64], rng: &mut R) -> Result<SpikeCounts> {
        let mut theta = self.theta.clone();
        let mut frozen = Frozen(&self.syn.w_pe);
        run(&self.params, &mut frozen, &mut theta, image, 1.0, rng)
    }

    /// Presents `image` with STDP and threshold adaptation on. Repeats at a
    /// boosted input rate while the module stays below the spike floor.
    pub fn learn<R: Rng>(&mut self, image: &[f64], rng: &mut R) -> Result<Presentation> {
        let params = self.params.clone();
        let mut retries = 0;
        let mut attempts = 0u32;
        let (counts, silent) = loop {
            let scale = 1.0 + params.rate_step * retries as f64;
            attempts += 1;
            let counts = {
                let mut plastic = Plastic::new(&mut self.syn, &params);
                run(&params, &mut plastic, &mut self.theta, image, scale, rng)?
            };
            if counts.total() >= params.min_spike_floor as u64 {
                break (counts, false);
            }
            if retries >= params.max_retries {
                break (SpikeCounts::zeros(params.k_e), true);
            }
            retries += 1;
        };
        // threshold decay over all elapsed simulated time, applied between
        // presentations so theta only grows while an image is shown
        let elapsed = attempts as f64 * (params.presentation_duration + params.rest_duration);
        let decay = (-elapsed / params.tau_theta).exp();
        for t in self.theta.iter_mut() {
            *t *= decay;
        }
        if let Some(target) = params.weight_norm_sum {
            self.syn.normalize_columns(target, params.w_max);
        }
        // traces restart at every presentation; keep the stored module clean
        self.syn.x_pre.fill(0.0);
        Ok(Presentation {
            counts,
            retries,
            silent,
        })
    }
}

/// Runs one presentation of `image` on `net`, learning or not.
pub fn simulate_presentation<R: Rng>(
    net: &mut Network,
    image: &[f64],
    learning: bool,
    rng: &mut R,
) -> Result<Presentation> {
    if learning {
        net.learn(image, rng)
    } else {
        Ok(Presentation {
            counts: net.respond(image, rng)?,
            retries: 0,
            silent: false,
        })
    }
}

trait SynapseAccess {
    const LEARNING: bool;
    fn weights(&self) -> &[f64];
    fn on_input(&mut self, _fired: &[u32], _x_post: Option<&[f64]>) {}
    fn on_post(&mut self, _fired: &[usize]) {}
    fn decay_traces(&mut self) {}
}

struct Frozen<'a>(&'a [f64]);

impl SynapseAccess for Frozen<'_> {
    const LEARNING: bool = false;
    fn weights(&self) -> &[f64] {
        self.0
    }
}

struct Plastic<'a> {
    syn: &'a mut SynapseState,
    params: &'a SimulationParams,
    trace_decay: f64,
}

impl<'a> Plastic<'a> {
    fn new(syn: &'a mut SynapseState, params: &'a SimulationParams) -> Self {
        syn.x_pre.fill(0.0);
        Self {
            syn,
            params,
            trace_decay: (-params.dt / params.tau_trace).exp(),
        }
    }
}

impl SynapseAccess for Plastic<'_> {
    const LEARNING: bool = true;

    fn weights(&self) -> &[f64] {
        &self.syn.w_pe
    }

    fn on_input(&mut self, fired: &[u32], x_post: Option<&[f64]>) {
        for &p in fired {
            self.syn.x_pre[p as usize] += 1.0;
        }
        if let Some(x_post) = x_post {
            stdp_update_on_pre(self.syn, fired, x_post, self.params);
        }
    }

    fn on_post(&mut self, fired: &[usize]) {
        stdp_update_on_post(self.syn, fired, self.params);
    }

    fn decay_traces(&mut self) {
        for x in self.syn.x_pre.iter_mut() {
            *x *= self.trace_decay;
        }
    }
}

fn run<S: SynapseAccess, R: Rng>(
    params: &SimulationParams,
    syn: &mut S,
    theta: &mut Vec<f64>,
    image: &[f64],
    rate_scale: f64,
    rng: &mut R,
) -> Result<SpikeCounts> {
    let encoder = PoissonEncoder::new(image, params, rate_scale)?;
    let active_steps = params.presentation_steps();
    let raster = encoder.sample(active_steps, rng);
    let k_e = params.k_e;
    let exc_dyn = LayerDynamics::new(LayerKind::Excitatory, params);
    let inh_dyn = LayerDynamics::new(LayerKind::Inhibitory, params);

    let mut exc = LayerState::resting(k_e, LayerKind::Excitatory, params);
    exc.theta = std::mem::take(theta);
    let mut inh = LayerState::resting(k_e, LayerKind::Inhibitory, params);

    let mut exc_fired: Vec<usize> = Vec::new();
    let mut inh_fired: Vec<usize> = Vec::new();
    let mut counts = vec![0u32; k_e];

    let post_decay = (-params.dt / params.tau_trace).exp();
    let mut x_post = vec![0.0; k_e];
    let mut post_active = false;

    let total_steps = active_steps + params.rest_steps();
    for step in 0..total_steps {
        let input_fired: &[u32] = if step < active_steps { raster.step(step) } else { &[] };

        if S::LEARNING {
            syn.decay_traces();
            if post_active {
                for x in x_post.iter_mut() {
                    *x *= post_decay;
                }
            }
            syn.on_input(input_fired, post_active.then_some(x_post.as_slice()));
        }

        let w = syn.weights();
        for &p in input_fired {
            let row = &w[p as usize * k_e..(p as usize + 1) * k_e];
            for (g, &wv) in exc.g_e.iter_mut().zip(row) {
                *g += wv;
            }
        }

        // inhibitory spikes from the previous step reach every excitatory
        // neuron except their own pair
        if !inh_fired.is_empty() {
            let uniform = params.w_ie * inh_fired.len() as f64;
            for g in exc.g_i.iter_mut() {
                *g += uniform;
            }
            for &j in &inh_fired {
                exc.g_i[j] -= params.w_ie;
            }
        }

        exc_dyn.integrate(&mut exc, S::LEARNING, &mut exc_fired);

        for &e in &exc_fired {
            inh.g_e[e] += params.w_ei;
            counts[e] += 1;
        }
        inh_dyn.integrate(&mut inh, false, &mut inh_fired);

        if S::LEARNING && !exc_fired.is_empty() {
            syn.on_post(&exc_fired);
            for &e in &exc_fired {
                x_post[e] += 1.0;
            }
            post_active = true;
        }

        // once input has stopped and the network has settled no further
        // spike can occur, so the remaining rest steps are skipped
        if step >= active_steps
            && exc_fired.is_empty()
            && inh_fired.is_empty()
            && exc_dyn.quiescent(&exc)
            && inh_dyn.quiescent(&inh)
        {
            break;
        }
    }

    *theta = exc.theta;
    if let Some(i) = exc.v.iter().chain(&inh.v).position(|v| !v.is_finite()) {
        return Err(Error::Invariant(format!(
            "membrane potential of neuron {i} became non-finite"
        )));
    }
    Ok(SpikeCounts(counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    pub(crate) fn toy_params(k_p: usize, k_e: usize) -> SimulationParams {
        SimulationParams {
            k_p,
            k_e,
            k_i: k_e,
            weight_norm_sum: Some(0.6 * k_p as f64),
            presentation_duration: 100.0,
            rest_duration: 50.0,
            ..Default::default()
        }
    }

    #[test]
    fn zero_image_gives_zero_counts() {
        let net = Network::new(toy_params(16, 8), 3).unwrap();
        let counts = net.respond(&[0.0; 16], &mut rng_from_seed(1)).unwrap();
        assert_eq!(counts.total(), 0);
    }

    #[test]
    fn responses_are_deterministic() {
        let net = Network::new(toy_params(16, 8), 3).unwrap();
        let img = vec![255.0; 16];
        let a = net.respond(&img, &mut rng_from_seed(5)).unwrap();
        let b = net.respond(&img, &mut rng_from_seed(5)).unwrap();
        assert_eq!(a, b);
        assert!(a.total() > 0);
    }

    #[test]
    fn learning_keeps_weights_bounded_and_theta_grows_by_quanta() {
        let params = SimulationParams {
            min_spike_floor: 0,
            ..toy_params(16, 8)
        };
        let mut net = Network::new(params.clone(), 3).unwrap();
        let img: Vec<f64> = (0..16).map(|i| if i % 2 == 0 { 255.0 } else { 0.0 }).collect();
        let before = net.theta.clone();
        let out = net.learn(&img, &mut rng_from_seed(2)).unwrap();
        assert!(!out.silent);
        assert_eq!(out.retries, 0);
        assert!(out.counts.total() > 0);
        assert!(net.syn.w_pe.iter().all(|&w| (0.0..=params.w_max).contains(&w)));
        // undo the between-presentation decay to recover integral increments
        let elapsed = 150.0;
        let decay = (-elapsed / params.tau_theta).exp();
        for (e, (&t0, &t1)) in before.iter().zip(&net.theta).enumerate() {
            let quanta = (t1 / decay - t0) / params.theta_plus;
            assert!((quanta - out.counts.0[e] as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn silent_module_is_flagged_after_retry_cap() {
        let params = SimulationParams {
            max_retries: 2,
            min_spike_floor: 1_000_000,
            ..toy_params(4, 2)
        };
        let mut net = Network::new(params, 1).unwrap();
        let out = net.learn(&[255.0; 4], &mut rng_from_seed(1)).unwrap();
        assert!(out.silent);
        assert_eq!(out.retries, 2);
        assert_eq!(out.counts.total(), 0);
    }
}
