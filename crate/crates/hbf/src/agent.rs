//! DDPG agent that learns the digital precoder and analog combiner:
//! state/action codecs, exploration, replay, critic/actor updates and the
//! per-channel training loop.
//!
//! State and action are the same vectorization of (V_BB, W_RF); the next
//! state is exactly the realized (post-projection) action, which keeps the
//! Markov chain consistent with the stored transitions.

use crate::channel::SystemConfig;
use crate::linalg::CMat;
use crate::metrics::{
    mmse_digital_combiner, project_power, project_unit_modulus, rate_upper_bound, HybridWeights,
    MetricsError,
};
use crate::nn::{adam_step, soft_update, AdamState, Gradients, NetworkParams, NnError};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::VecDeque;
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid agent config: {0}")]
    InvalidConfig(String),
    #[error("action/state width {got}, expected {expected}")]
    WidthMismatch { got: usize, expected: usize },
    #[error("replay buffer holds {got} transitions, minibatch needs {needed}")]
    InsufficientBuffer { got: usize, needed: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct AgentConfig {
    /// Discount factor gamma.
    pub discount: f64,
    /// Soft-update rate tau.
    pub soft_update_tau: f64,
    /// Minibatch size N.
    pub minibatch_size: usize,
    /// Replay capacity N_D.
    pub replay_capacity: usize,
    /// Covariance of the additive exploration Gaussian (per component).
    pub noise_covariance: f64,
    /// Multiplicative per-iteration decay of the noise covariance; 1.0
    /// disables the hook.
    pub noise_decay: f64,
    /// Learning iterations per channel realization T.
    pub iterations: usize,
    /// Stop a run early when the best reward has not improved for this
    /// many iterations; None disables.
    pub patience: Option<usize>,
    pub actor_step_size: f64,
    pub critic_step_size: f64,
    /// Hidden layer widths shared by actor and critic.
    pub hidden_widths: Vec<usize>,
    /// Log the realized weights into the reward trace (test/debug aid).
    pub log_weights: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            discount: 0.95,
            soft_update_tau: 0.001,
            minibatch_size: 64,
            replay_capacity: 5000,
            noise_covariance: 0.1,
            noise_decay: 1.0,
            iterations: 500,
            patience: Some(100),
            actor_step_size: 0.001,
            critic_step_size: 0.001,
            hidden_widths: vec![300, 200],
            log_weights: false,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(AgentError::InvalidConfig("discount must lie in (0,1]".into()));
        }
        if !(self.soft_update_tau > 0.0 && self.soft_update_tau < 1.0) {
            return Err(AgentError::InvalidConfig("tau must lie in (0,1)".into()));
        }
        if self.minibatch_size == 0 || self.minibatch_size > self.replay_capacity {
            return Err(AgentError::InvalidConfig(
                "need 0 < minibatch_size <= replay_capacity".into(),
            ));
        }
        if self.noise_covariance < 0.0 {
            return Err(AgentError::InvalidConfig("noise covariance must be >= 0".into()));
        }
        Ok(())
    }
}

/// State/action width K = 2 (N_RF^t N_s + N_r N_RF^r).
pub fn state_width(sys: &SystemConfig) -> usize {
    2 * (sys.n_tx_rf_chains * sys.n_streams + sys.n_rx_antennas * sys.n_rx_rf_chains)
}

/// [Re(vec V_BB); Im(vec V_BB); Re(vec W_RF); Im(vec W_RF)], column-major.
pub fn vectorize_state(v_bb: &CMat, w_rf: &CMat) -> DVector<f64> {
    let n = 2 * (v_bb.len() + w_rf.len());
    let mut out = DVector::zeros(n);
    let mut idx = 0;
    for z in v_bb.iter() {
        out[idx] = z.re;
        idx += 1;
    }
    for z in v_bb.iter() {
        out[idx] = z.im;
        idx += 1;
    }
    for z in w_rf.iter() {
        out[idx] = z.re;
        idx += 1;
    }
    for z in w_rf.iter() {
        out[idx] = z.im;
        idx += 1;
    }
    out
}

/// Inverse of [`vectorize_state`]; shapes come from the system config.
pub fn devectorize_action(
    a: &DVector<f64>,
    sys: &SystemConfig,
) -> Result<(CMat, CMat), AgentError> {
    let k = state_width(sys);
    if a.len() != k {
        return Err(AgentError::WidthMismatch {
            got: a.len(),
            expected: k,
        });
    }
    let n_vbb = sys.n_tx_rf_chains * sys.n_streams;
    let n_wrf = sys.n_rx_antennas * sys.n_rx_rf_chains;
    let mut v_bb = CMat::zeros(sys.n_tx_rf_chains, sys.n_streams);
    for (i, z) in v_bb.iter_mut().enumerate() {
        *z = Complex64::new(a[i], a[n_vbb + i]);
    }
    let base = 2 * n_vbb;
    let mut w_rf = CMat::zeros(sys.n_rx_antennas, sys.n_rx_rf_chains);
    for (i, z) in w_rf.iter_mut().enumerate() {
        *z = Complex64::new(a[base + i], a[base + n_wrf + i]);
    }
    Ok((v_bb, w_rf))
}

/// One stored experience.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: DVector<f64>,
    pub action: DVector<f64>,
    pub reward: f64,
    pub next_state: DVector<f64>,
}

/// Bounded FIFO with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    data: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            data: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.data.len() == self.capacity {
            self.data.pop_front();
        }
        self.data.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Transition> {
        (0..n)
            .map(|_| self.data[rng.gen_range(0..self.data.len())].clone())
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.data.iter()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UpdateDiagnostics {
    pub critic_loss: f64,
    pub mean_q: f64,
}

/// One row of the reward trace emitted by [`Agent::train_episode`].
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iteration: usize,
    pub reward: f64,
    pub critic_loss: Option<f64>,
    pub mean_q: Option<f64>,
    pub weights: Option<HybridWeights>,
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub best_weights: HybridWeights,
    pub best_reward: f64,
    pub trace: Vec<TraceRow>,
}

/// The PrecoderNet DDPG agent: evaluate/target actor and critic, Adam
/// states, replay buffer and its own RNG stream.
pub struct Agent {
    pub cfg: AgentConfig,
    width: usize,
    actor: NetworkParams,
    actor_target: NetworkParams,
    critic: NetworkParams,
    critic_target: NetworkParams,
    actor_adam: AdamState,
    critic_adam: AdamState,
    replay: ReplayBuffer,
    rng: ChaCha8Rng,
    /// Learning iterations performed over the agent's lifetime (drives the
    /// optional noise decay).
    total_iterations: usize,
    /// Projection context (system + analog precoder) active during an
    /// episode. With it set, every critic evaluation happens at the
    /// realized (projected) action — raw actor outputs are unbounded and
    /// feeding them to the critic lets the bootstrap targets extrapolate
    /// far outside the replay data, which diverges.
    projection: Option<(SystemConfig, CMat)>,
}

impl Agent {
    pub fn new(sys: &SystemConfig, cfg: AgentConfig, seed: u64) -> Result<Self, AgentError> {
        cfg.validate()?;
        let k = state_width(sys);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut actor_widths = vec![k];
        actor_widths.extend_from_slice(&cfg.hidden_widths);
        actor_widths.push(k);
        let mut critic_widths = vec![2 * k];
        critic_widths.extend_from_slice(&cfg.hidden_widths);
        critic_widths.push(1);
        let actor = NetworkParams::mlp(&actor_widths, &mut rng)?;
        let critic = NetworkParams::mlp(&critic_widths, &mut rng)?;
        let actor_adam = AdamState::new(&actor, cfg.actor_step_size);
        let critic_adam = AdamState::new(&critic, cfg.critic_step_size);
        let replay = ReplayBuffer::new(cfg.replay_capacity);
        Ok(Self {
            cfg,
            width: k,
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            actor_adam,
            critic_adam,
            replay,
            rng,
            total_iterations: 0,
            projection: None,
        })
    }

    pub fn state_width(&self) -> usize {
        self.width
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    fn noise_std(&self) -> f64 {
        (self.cfg.noise_covariance * self.cfg.noise_decay.powi(self.total_iterations as i32))
            .sqrt()
    }

    /// Actor forward pass, plus exploration noise when requested. During
    /// an episode the noise perturbs the realized (projected) action, so
    /// the exploration scale stays meaningful regardless of the raw
    /// output's magnitude.
    pub fn act(&mut self, s: &DVector<f64>, explore: bool) -> Result<DVector<f64>, AgentError> {
        let mut a = self.actor.output(s)?;
        if explore {
            a = self.realize_action(&a);
            let std = self.noise_std();
            for x in a.iter_mut() {
                let n: f64 = StandardNormal.sample(&mut self.rng);
                *x += std * n;
            }
        }
        Ok(a)
    }

    fn critic_value(net: &NetworkParams, s: &DVector<f64>, a: &DVector<f64>) -> Result<f64, NnError> {
        let mut joint = DVector::zeros(s.len() + a.len());
        joint.rows_mut(0, s.len()).copy_from(s);
        joint.rows_mut(s.len(), a.len()).copy_from(a);
        Ok(net.output(&joint)?[0])
    }

    /// Maps a raw action onto the realized constraint set (unit-modulus
    /// analog combiner, power-normalized digital precoder) when an episode
    /// projection context is active. Both projections scale each component
    /// by a positive factor, so component signs are preserved.
    fn realize_action(&self, a: &DVector<f64>) -> DVector<f64> {
        let Some((sys, v_rf)) = &self.projection else {
            return a.clone();
        };
        let Ok((v_bb_raw, w_rf_raw)) = devectorize_action(a, sys) else {
            return a.clone();
        };
        let w_rf = project_unit_modulus(&w_rf_raw);
        match project_power(v_rf, &v_bb_raw, sys.transmit_power) {
            Ok(v_bb) => vectorize_state(&v_bb, &w_rf),
            Err(_) => a.clone(),
        }
    }

    /// Removes the gradient components normal to the constraint set at the
    /// realized action: the per-entry radial direction on the unit-modulus
    /// part and the global scaling direction on the power-constrained part.
    /// Without this the actor accumulates a systematic outward push that
    /// the projections nullify anyway, inflating its raw output until
    /// fixed-scale exploration noise no longer changes the realized action.
    fn tangent_project_action_gradient(
        &self,
        grad: &DVector<f64>,
        realized: &DVector<f64>,
    ) -> DVector<f64> {
        let Some((sys, _)) = &self.projection else {
            return grad.clone();
        };
        let Ok((gv, gw)) = devectorize_action(grad, sys) else {
            return grad.clone();
        };
        let Ok((v_bb, w_rf)) = devectorize_action(realized, sys) else {
            return grad.clone();
        };
        // digital precoder: remove the component along the realized matrix
        let norm_sq: f64 = v_bb.iter().map(|z| z.norm_sqr()).sum();
        let gv_t = if norm_sq > 0.0 {
            let radial: f64 = gv
                .iter()
                .zip(v_bb.iter())
                .map(|(g, v)| (g * v.conj()).re)
                .sum::<f64>()
                / norm_sq;
            &gv - &v_bb * Complex64::new(radial, 0.0)
        } else {
            gv
        };
        // analog combiner: remove each entry's radial component
        let mut gw_t = gw;
        for (g, u) in gw_t.iter_mut().zip(w_rf.iter()) {
            let r = u.norm_sqr();
            if r > 0.0 {
                *g -= u * ((*g * u.conj()).re / r);
            }
        }
        vectorize_state(&gv_t, &gw_t)
    }

    /// Bootstrap target y = r + gamma Q^{C'}(s', A'(s')), target nets only.
    pub fn critic_target_value(&self, reward: f64, s_next: &DVector<f64>) -> Result<f64, AgentError> {
        let a_next = self.realize_action(&self.actor_target.output(s_next)?);
        let q = Self::critic_value(&self.critic_target, s_next, &a_next)?;
        Ok(reward + self.cfg.discount * q)
    }

    /// One critic + actor + target update on a minibatch.
    pub fn update_step(&mut self, batch: &[Transition]) -> Result<UpdateDiagnostics, AgentError> {
        let n = batch.len();
        if n == 0 {
            return Err(AgentError::InsufficientBuffer { got: 0, needed: 1 });
        }
        let inv_n = 1.0 / n as f64;

        // Critic: descend the mean squared error against bootstrap targets.
        let mut critic_grads = Gradients::zeros_like(&self.critic);
        let mut loss = 0.0;
        for t in batch {
            let y = self.critic_target_value(t.reward, &t.next_state)?;
            let mut joint = DVector::zeros(2 * self.width);
            joint.rows_mut(0, self.width).copy_from(&t.state);
            joint.rows_mut(self.width, self.width).copy_from(&t.action);
            let (out, cache) = self.critic.forward(&joint)?;
            let err = out[0] - y;
            loss += err * err * inv_n;
            let og = DVector::from_element(1, 2.0 * err * inv_n);
            let (g, _) = self.critic.backward(&cache, &og)?;
            critic_grads.add_assign(&g);
        }
        adam_step(&mut self.critic, &critic_grads, &mut self.critic_adam)?;

        // Actor: ascend Q^C(s, A(s)) (descent on -Q), chaining the critic's
        // action-slice input gradient through the actor.
        let mut actor_grads = Gradients::zeros_like(&self.actor);
        let mut mean_q = 0.0;
        for t in batch {
            let (a, actor_cache) = self.actor.forward(&t.state)?;
            // evaluate the critic at the realized action (straight-through
            // to the actor: the projections preserve component signs)
            let a = self.realize_action(&a);
            let mut joint = DVector::zeros(2 * self.width);
            joint.rows_mut(0, self.width).copy_from(&t.state);
            joint.rows_mut(self.width, self.width).copy_from(&a);
            let (q, critic_cache) = self.critic.forward(&joint)?;
            mean_q += q[0] * inv_n;
            let (_, joint_grad) = self
                .critic
                .backward(&critic_cache, &DVector::from_element(1, 1.0))?;
            let dq_da = joint_grad.rows(self.width, self.width).into_owned();
            let dq_da = self.tangent_project_action_gradient(&dq_da, &a);
            let (g, _) = self.actor.backward(&actor_cache, &(-dq_da * inv_n))?;
            actor_grads.add_assign(&g);
        }
        adam_step(&mut self.actor, &actor_grads, &mut self.actor_adam)?;

        let tau = self.cfg.soft_update_tau;
        soft_update(&mut self.actor_target, &self.actor, tau)?;
        soft_update(&mut self.critic_target, &self.critic, tau)?;

        Ok(UpdateDiagnostics {
            critic_loss: loss,
            mean_q,
        })
    }

    /// Runs Algorithm-1 style learning on one channel realization with a
    /// precomputed analog precoder. Returns the best weights seen and the
    /// full reward trace.
    pub fn train_episode(
        &mut self,
        sys: &SystemConfig,
        h_est: &CMat,
        v_rf: &CMat,
        iterations: usize,
    ) -> Result<EpisodeResult, AgentError> {
        if v_rf.nrows() != sys.n_tx_antennas || v_rf.ncols() != sys.n_tx_rf_chains {
            return Err(AgentError::WidthMismatch {
                got: v_rf.len(),
                expected: sys.n_tx_antennas * sys.n_tx_rf_chains,
            });
        }
        self.projection = Some((sys.clone(), v_rf.clone()));
        let k = self.width;
        let mut state = DVector::from_fn(k, |_, _| {
            let n: f64 = StandardNormal.sample(&mut self.rng);
            n
        });
        let mut best_reward = f64::NEG_INFINITY;
        let mut best_weights: Option<HybridWeights> = None;
        let mut since_best = 0usize;
        let mut trace = Vec::with_capacity(iterations);

        for t in 1..=iterations {
            let raw_action = self.act(&state, true)?;
            let (v_bb_raw, w_rf_raw) = devectorize_action(&raw_action, sys)?;
            let w_rf = project_unit_modulus(&w_rf_raw);
            let v_bb = project_power(v_rf, &v_bb_raw, sys.transmit_power)?;
            let w_bb = mmse_digital_combiner(h_est, v_rf, &v_bb, &w_rf, sys)?;
            let weights = HybridWeights {
                analog_precoder: v_rf.clone(),
                digital_precoder: v_bb.clone(),
                analog_combiner: w_rf.clone(),
                digital_combiner: w_bb,
            };
            let reward = rate_upper_bound(h_est, &weights, sys)?;

            // Store the realized action so the next state matches it exactly.
            let action = vectorize_state(&v_bb, &w_rf);
            let next_state = action.clone();
            self.replay.push(Transition {
                state: state.clone(),
                action,
                reward,
                next_state: next_state.clone(),
            });

            let diag = if self.replay.len() >= self.cfg.minibatch_size {
                let batch = {
                    let n = self.cfg.minibatch_size;
                    self.replay.sample(n, &mut self.rng)
                };
                Some(self.update_step(&batch)?)
            } else {
                None
            };
            self.total_iterations += 1;

            trace.push(TraceRow {
                iteration: t,
                reward,
                critic_loss: diag.map(|d| d.critic_loss),
                mean_q: diag.map(|d| d.mean_q),
                weights: self.cfg.log_weights.then(|| weights.clone()),
            });

            if reward > best_reward {
                best_reward = reward;
                best_weights = Some(weights);
                since_best = 0;
            } else {
                since_best += 1;
                if let Some(p) = self.cfg.patience {
                    if since_best >= p {
                        break;
                    }
                }
            }
            state = next_state;
        }
        Ok(EpisodeResult {
            best_weights: best_weights.expect("at least one iteration"),
            best_reward,
            trace,
        })
    }
}

const AGENT_MAGIC: &[u8; 4] = b"HBAG";
const AGENT_VERSION: u32 = 1;

impl Agent {
    /// Checkpoint: the four networks' parameter dumps plus the scalar
    /// hyperparameters, versioned. Adam moments, replay contents and RNG
    /// state are not persisted.
    pub fn write_checkpoint<W: Write>(&self, w: &mut W) -> Result<(), AgentError> {
        w.write_all(AGENT_MAGIC)?;
        w.write_all(&AGENT_VERSION.to_le_bytes())?;
        for x in [
            self.cfg.discount,
            self.cfg.soft_update_tau,
            self.cfg.noise_covariance,
            self.cfg.noise_decay,
            self.cfg.actor_step_size,
            self.cfg.critic_step_size,
        ] {
            w.write_all(&x.to_le_bytes())?;
        }
        for x in [
            self.cfg.minibatch_size as u64,
            self.cfg.replay_capacity as u64,
            self.cfg.iterations as u64,
            self.width as u64,
        ] {
            w.write_all(&x.to_le_bytes())?;
        }
        self.actor.write_checkpoint(w)?;
        self.actor_target.write_checkpoint(w)?;
        self.critic.write_checkpoint(w)?;
        self.critic_target.write_checkpoint(w)?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(r: &mut R, seed: u64) -> Result<Self, AgentError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != AGENT_MAGIC {
            return Err(AgentError::Format("bad magic".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != AGENT_VERSION {
            return Err(AgentError::Format(format!("unsupported version {version}")));
        }
        let mut f = [0.0f64; 6];
        let mut buf = [0u8; 8];
        for x in f.iter_mut() {
            r.read_exact(&mut buf)?;
            *x = f64::from_le_bytes(buf);
        }
        let mut u = [0u64; 4];
        for x in u.iter_mut() {
            r.read_exact(&mut buf)?;
            *x = u64::from_le_bytes(buf);
        }
        let cfg = AgentConfig {
            discount: f[0],
            soft_update_tau: f[1],
            noise_covariance: f[2],
            noise_decay: f[3],
            actor_step_size: f[4],
            critic_step_size: f[5],
            minibatch_size: u[0] as usize,
            replay_capacity: u[1] as usize,
            iterations: u[2] as usize,
            ..AgentConfig::default()
        };
        cfg.validate()?;
        let actor = NetworkParams::read_checkpoint(r)?;
        let actor_target = NetworkParams::read_checkpoint(r)?;
        let critic = NetworkParams::read_checkpoint(r)?;
        let critic_target = NetworkParams::read_checkpoint(r)?;
        let actor_adam = AdamState::new(&actor, cfg.actor_step_size);
        let critic_adam = AdamState::new(&critic, cfg.critic_step_size);
        let replay = ReplayBuffer::new(cfg.replay_capacity);
        Ok(Self {
            width: u[3] as usize,
            actor,
            actor_target,
            critic,
            critic_target,
            actor_adam,
            critic_adam,
            replay,
            rng: ChaCha8Rng::seed_from_u64(seed),
            total_iterations: 0,
            projection: None,
            cfg,
        })
    }
}
