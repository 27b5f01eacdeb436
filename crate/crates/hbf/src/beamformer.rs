//! Beamforming strategies behind one trait: fully digital SVD, OMP hybrid
//! and the learned hybrid design, constructed by name from a registry.

use crate::agent::{Agent, AgentConfig, AgentError, TraceRow};
use crate::baselines::{fd_svd_beamformer, omp_hybrid_beamformer, BaselineError};
use crate::channel::{ChannelRealization, SystemConfig};
use crate::linalg::{CMat, LinalgError};
use crate::manifold::{fd_reference_precoder, mo_analog_precoder, ManifoldError, MoConfig};
use crate::metrics::HybridWeights;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeamformerError {
    #[error("unknown beamformer '{0}', expected one of {1:?}")]
    UnknownName(String, &'static [&'static str]),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Wall-clock breakdown of one design call, in milliseconds.
#[derive(Debug, Clone, Copy, Default)]
pub struct DesignTiming {
    pub total_ms: f64,
    /// Analog-precoder manifold optimization, when the strategy runs one.
    pub mo_ms: Option<f64>,
    pub mo_iterations: Option<usize>,
    pub mo_per_iteration_ms: Option<f64>,
    /// DDPG learning loop, when the strategy runs one.
    pub train_ms: Option<f64>,
    pub train_iterations: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct BeamformerOutput {
    /// Composite transmit precoder V (N_t x N_s).
    pub precoder: CMat,
    /// Composite receive combiner W (N_r x N_s).
    pub combiner: CMat,
    /// The hybrid factorization, absent for the fully digital reference.
    pub weights: Option<HybridWeights>,
    pub timing: DesignTiming,
    /// Per-iteration reward trace, present for learned strategies.
    pub reward_trace: Option<Vec<TraceRow>>,
}

/// A beamforming algorithm: consumes a channel realization, produces
/// transmit/receive weights. Strategies may carry state across calls
/// (the learned one keeps its networks and replay buffer warm).
pub trait Beamformer {
    fn name(&self) -> &'static str;
    fn design(
        &mut self,
        realization: &ChannelRealization,
        sys: &SystemConfig,
        seed: u64,
    ) -> Result<BeamformerOutput, BeamformerError>;
}

/// Fully digital SVD beamformer; the performance reference, not realizable
/// with the RF-chain budget.
pub struct FdSvd;

impl Beamformer for FdSvd {
    fn name(&self) -> &'static str {
        "fd"
    }

    fn design(
        &mut self,
        realization: &ChannelRealization,
        sys: &SystemConfig,
        _seed: u64,
    ) -> Result<BeamformerOutput, BeamformerError> {
        let start = Instant::now();
        let (v, w) = fd_svd_beamformer(&realization.estimated_channel, sys)?;
        Ok(BeamformerOutput {
            precoder: v,
            combiner: w,
            weights: None,
            timing: DesignTiming {
                total_ms: start.elapsed().as_secs_f64() * 1e3,
                ..DesignTiming::default()
            },
            reward_trace: None,
        })
    }
}

/// Spatially sparse (orthogonal matching pursuit) hybrid beamformer.
pub struct OmpHybrid {
    /// Transmit dictionary size; None picks the default grid.
    pub dict_size: Option<usize>,
}

impl Beamformer for OmpHybrid {
    fn name(&self) -> &'static str {
        "omp"
    }

    fn design(
        &mut self,
        realization: &ChannelRealization,
        sys: &SystemConfig,
        _seed: u64,
    ) -> Result<BeamformerOutput, BeamformerError> {
        let start = Instant::now();
        let dict_size = self
            .dict_size
            .unwrap_or_else(|| crate::baselines::default_dict_size(sys));
        let result = omp_hybrid_beamformer(&realization.estimated_channel, sys, dict_size)?;
        let w = result.weights;
        Ok(BeamformerOutput {
            precoder: w.precoder(),
            combiner: w.combiner(),
            weights: Some(w),
            timing: DesignTiming {
                total_ms: start.elapsed().as_secs_f64() * 1e3,
                ..DesignTiming::default()
            },
            reward_trace: None,
        })
    }
}

/// Learned hybrid design: manifold-optimized analog precoder, then DDPG
/// over the digital precoder and analog combiner.
pub struct PrecoderNet {
    pub mo_config: MoConfig,
    pub agent_config: AgentConfig,
    /// Re-initialize the agent for every channel instead of carrying the
    /// learned networks over.
    pub cold_start: bool,
    agent: Option<Agent>,
}

impl PrecoderNet {
    pub fn new(mo_config: MoConfig, agent_config: AgentConfig, cold_start: bool) -> Self {
        Self {
            mo_config,
            agent_config,
            cold_start,
            agent: None,
        }
    }

    pub fn agent(&self) -> Option<&Agent> {
        self.agent.as_ref()
    }

    pub fn agent_mut(&mut self) -> Option<&mut Agent> {
        self.agent.as_mut()
    }

    /// Installs a previously trained agent (checkpoint restore path).
    pub fn set_agent(&mut self, agent: Agent) {
        self.agent = Some(agent);
    }
}

impl Beamformer for PrecoderNet {
    fn name(&self) -> &'static str {
        "precodernet"
    }

    fn design(
        &mut self,
        realization: &ChannelRealization,
        sys: &SystemConfig,
        seed: u64,
    ) -> Result<BeamformerOutput, BeamformerError> {
        let start = Instant::now();
        let h_est = &realization.estimated_channel;

        let f_opt = fd_reference_precoder(h_est, sys)?;
        let mo_start = Instant::now();
        let mo = mo_analog_precoder(&f_opt, sys.n_tx_rf_chains, &self.mo_config, seed)?;
        let mo_ms = mo_start.elapsed().as_secs_f64() * 1e3;
        let mo_iterations = mo.objective_trace.len().saturating_sub(1).max(1);

        if self.cold_start || self.agent.is_none() {
            self.agent = Some(Agent::new(sys, self.agent_config.clone(), seed)?);
        }
        let agent = self.agent.as_mut().expect("agent installed above");
        let iterations = agent.cfg.iterations;
        let train_start = Instant::now();
        let episode = agent.train_episode(sys, h_est, &mo.v_rf, iterations)?;
        let train_ms = train_start.elapsed().as_secs_f64() * 1e3;

        let w = episode.best_weights;
        Ok(BeamformerOutput {
            precoder: w.precoder(),
            combiner: w.combiner(),
            weights: Some(w),
            timing: DesignTiming {
                total_ms: start.elapsed().as_secs_f64() * 1e3,
                mo_ms: Some(mo_ms),
                mo_iterations: Some(mo_iterations),
                mo_per_iteration_ms: Some(mo_ms / mo_iterations as f64),
                train_ms: Some(train_ms),
                train_iterations: Some(episode.trace.len()),
            },
            reward_trace: Some(episode.trace),
        })
    }
}

/// Everything a strategy might need at construction time; unused fields
/// are ignored by strategies that don't take them.
#[derive(Debug, Clone, Default)]
pub struct StrategySettings {
    pub omp_dict_size: Option<usize>,
    pub mo_config: MoConfig,
    pub agent_config: AgentConfig,
    pub cold_start: bool,
}

pub const STRATEGY_NAMES: &[&str] = &["fd", "omp", "precodernet"];

/// Builds a strategy by registry name.
pub fn create(name: &str, settings: &StrategySettings) -> Result<Box<dyn Beamformer>, BeamformerError> {
    match name {
        "fd" => Ok(Box::new(FdSvd)),
        "omp" => Ok(Box::new(OmpHybrid {
            dict_size: settings.omp_dict_size,
        })),
        "precodernet" => Ok(Box::new(PrecoderNet::new(
            settings.mo_config.clone(),
            settings.agent_config.clone(),
            settings.cold_start,
        ))),
        other => Err(BeamformerError::UnknownName(other.into(), STRATEGY_NAMES)),
    }
}
