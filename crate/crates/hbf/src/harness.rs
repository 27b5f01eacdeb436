//! Experiment harness: sectioned key=value config files, deterministic
//! seeded sweeps over SNR / CSI-error grids, and CSV reports whose bytes
//! do not depend on the thread count.

use crate::agent::AgentConfig;
use crate::beamformer::{create, BeamformerError, StrategySettings, STRATEGY_NAMES};
use crate::channel::{generate_channel, ChannelConfig, ChannelError, SystemConfig};
use crate::linklevel::{default_symbol_count, simulate_ber, LinkLevelError};
use crate::manifold::MoConfig;
use crate::metrics::{spectral_efficiency_composite, MetricsError};
use rayon::prelude::*;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("config line {line}: unknown key '{key}' in section [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("config line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Beamformer(#[from] BeamformerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    LinkLevel(#[from] LinkLevelError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Grid and budget for the sweep subcommands.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub algorithms: Vec<String>,
    pub snr_db: Vec<f64>,
    /// CSI error powers beta^2.
    pub beta_sq: Vec<f64>,
    /// Channel realizations per grid point.
    pub realizations: usize,
    /// Realizations per algorithm for the timing report.
    pub timing_realizations: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            algorithms: vec!["fd".into(), "omp".into(), "precodernet".into()],
            snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            beta_sq: vec![0.0],
            realizations: 10,
            timing_realizations: 100,
        }
    }
}

/// Full harness configuration; every section has defaults so an empty
/// config file is valid.
#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub system: SystemConfig,
    pub channel: ChannelConfig,
    pub agent: AgentConfig,
    pub mo: MoConfig,
    pub sweep: SweepConfig,
    /// QPSK symbol vectors per BER point; None derives from the array size.
    pub ber_symbols: Option<usize>,
    pub omp_dict_size: Option<usize>,
    /// Re-initialize the learned agent for every channel realization.
    pub cold_start: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig {
                n_tx_antennas: 16,
                n_rx_antennas: 8,
                n_tx_rf_chains: 2,
                n_rx_rf_chains: 2,
                n_streams: 2,
                transmit_power: 1.0,
                noise_variance: 1.0,
                imperfection: 0.0,
            },
            channel: ChannelConfig::new(8, 10),
            agent: AgentConfig::default(),
            mo: MoConfig::default(),
            sweep: SweepConfig::default(),
            ber_symbols: None,
            omp_dict_size: None,
            cold_start: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, line: usize) -> Result<T, HarnessError> {
    value.trim().parse().map_err(|_| HarnessError::Parse {
        line,
        message: format!("cannot parse '{}'", value.trim()),
    })
}

fn parse_list<T: std::str::FromStr>(value: &str, line: usize) -> Result<Vec<T>, HarnessError> {
    value
        .split(',')
        .map(|s| parse_num(s, line))
        .collect()
}

fn parse_bool(value: &str, line: usize) -> Result<bool, HarnessError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(HarnessError::Parse {
            line,
            message: format!("expected a boolean, got '{other}'"),
        }),
    }
}

/// Parses a sectioned key=value config. Unknown sections and keys are hard
/// errors; `#` and `;` start comments.
pub fn parse_config(text: &str) -> Result<HarnessConfig, HarnessError> {
    let mut cfg = HarnessConfig::default();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw
            .split(|c| c == '#' || c == ';')
            .next()
            .unwrap_or("")
            .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(HarnessError::Parse {
                line: line_no,
                message: "unterminated section header".into(),
            })?;
            section = name.trim().to_string();
            match section.as_str() {
                "system" | "channel" | "agent" | "mo" | "ber" | "sweep" => {}
                other => {
                    return Err(HarnessError::UnknownSection {
                        line: line_no,
                        section: other.into(),
                    })
                }
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(HarnessError::Parse {
            line: line_no,
            message: "expected key = value".into(),
        })?;
        let key = key.trim();
        let unknown = |k: &str| HarnessError::UnknownKey {
            line: line_no,
            section: section.clone(),
            key: k.into(),
        };
        match section.as_str() {
            "system" => match key {
                "n_tx_antennas" => cfg.system.n_tx_antennas = parse_num(value, line_no)?,
                "n_rx_antennas" => cfg.system.n_rx_antennas = parse_num(value, line_no)?,
                "n_tx_rf_chains" => cfg.system.n_tx_rf_chains = parse_num(value, line_no)?,
                "n_rx_rf_chains" => cfg.system.n_rx_rf_chains = parse_num(value, line_no)?,
                "n_streams" => cfg.system.n_streams = parse_num(value, line_no)?,
                "transmit_power" => cfg.system.transmit_power = parse_num(value, line_no)?,
                "noise_variance" => cfg.system.noise_variance = parse_num(value, line_no)?,
                k => return Err(unknown(k)),
            },
            "channel" => match key {
                "n_clusters" => {
                    cfg.channel.n_clusters = parse_num(value, line_no)?;
                    // unit-power clusters follow the cluster count
                    cfg.channel.cluster_power = vec![1.0; cfg.channel.n_clusters];
                }
                "rays_per_cluster" => cfg.channel.rays_per_cluster = parse_num(value, line_no)?,
                "antenna_spacing_over_wavelength" => {
                    cfg.channel.antenna_spacing_over_wavelength = parse_num(value, line_no)?
                }
                "angle_spread_deg" => {
                    let deg: f64 = parse_num(value, line_no)?;
                    cfg.channel.angle_spread_rad = deg.to_radians();
                }
                k => return Err(unknown(k)),
            },
            "agent" => match key {
                "discount" => cfg.agent.discount = parse_num(value, line_no)?,
                "tau" => cfg.agent.soft_update_tau = parse_num(value, line_no)?,
                "minibatch_size" => cfg.agent.minibatch_size = parse_num(value, line_no)?,
                "replay_capacity" => cfg.agent.replay_capacity = parse_num(value, line_no)?,
                "noise_covariance" => cfg.agent.noise_covariance = parse_num(value, line_no)?,
                "noise_decay" => cfg.agent.noise_decay = parse_num(value, line_no)?,
                "iterations" => cfg.agent.iterations = parse_num(value, line_no)?,
                "patience" => {
                    let p: usize = parse_num(value, line_no)?;
                    cfg.agent.patience = (p > 0).then_some(p);
                }
                "actor_lr" => cfg.agent.actor_step_size = parse_num(value, line_no)?,
                "critic_lr" => cfg.agent.critic_step_size = parse_num(value, line_no)?,
                "hidden_widths" => cfg.agent.hidden_widths = parse_list(value, line_no)?,
                "cold_start" => cfg.cold_start = parse_bool(value, line_no)?,
                k => return Err(unknown(k)),
            },
            "mo" => match key {
                "stop_threshold" => cfg.mo.stop_threshold = parse_num(value, line_no)?,
                "max_outer_iterations" => {
                    cfg.mo.max_outer_iterations = parse_num(value, line_no)?
                }
                "max_inner_cg_steps" => cfg.mo.max_inner_cg_steps = parse_num(value, line_no)?,
                k => return Err(unknown(k)),
            },
            "ber" => match key {
                "symbols" => cfg.ber_symbols = Some(parse_num(value, line_no)?),
                k => return Err(unknown(k)),
            },
            "sweep" => match key {
                "algorithms" => {
                    cfg.sweep.algorithms = value
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .collect();
                }
                "snr_db" => cfg.sweep.snr_db = parse_list(value, line_no)?,
                "beta_sq" => cfg.sweep.beta_sq = parse_list(value, line_no)?,
                "realizations" => cfg.sweep.realizations = parse_num(value, line_no)?,
                "timing_realizations" => {
                    cfg.sweep.timing_realizations = parse_num(value, line_no)?
                }
                "omp_dict_size" => cfg.omp_dict_size = Some(parse_num(value, line_no)?),
                k => return Err(unknown(k)),
            },
            "" => {
                return Err(HarnessError::Parse {
                    line: line_no,
                    message: "key outside any section".into(),
                })
            }
            _ => unreachable!("section validated on entry"),
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &HarnessConfig) -> Result<(), HarnessError> {
    cfg.system.validate()?;
    cfg.channel.validate()?;
    cfg.agent
        .validate()
        .map_err(|e| HarnessError::Invalid(e.to_string()))?;
    for a in &cfg.sweep.algorithms {
        if !STRATEGY_NAMES.contains(&a.as_str()) {
            return Err(HarnessError::Invalid(format!(
                "unknown algorithm '{a}', expected one of {STRATEGY_NAMES:?}"
            )));
        }
    }
    if cfg.sweep.realizations == 0 || cfg.sweep.snr_db.is_empty() || cfg.sweep.beta_sq.is_empty() {
        return Err(HarnessError::Invalid(
            "sweep grid must be non-empty with realizations > 0".into(),
        ));
    }
    for &b in &cfg.sweep.beta_sq {
        if !(0.0..1.0).contains(&b) {
            return Err(HarnessError::Invalid(format!(
                "beta_sq {b} outside [0, 1)"
            )));
        }
    }
    Ok(())
}

/// FNV-1a over the raw config text; stamped into every CSV so outputs can
/// be traced back to the exact configuration.
pub fn config_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// SplitMix64-style mixing for deriving independent seeds from a master
/// seed and grid coordinates.
fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e3779b97f4a7c15;
    for &p in parts {
        let mut z = h ^ p.wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        h = z ^ (z >> 31);
    }
    h
}

fn format_float(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{:.1}", x)
    } else {
        format!("{}", x)
    }
}

fn csv_header(kind: &str, config_text: &str, master_seed: u64, columns: &str) -> String {
    format!(
        "# report: {kind}\n# config-hash: {:016x}\n# master-seed: {master_seed}\n{columns}\n",
        config_hash(config_text)
    )
}

/// Configures the system for one grid point: SNR sets the transmit power
/// against unit noise, beta_sq sets the CSI error power.
fn system_at(base: &SystemConfig, snr_db: f64, beta_sq: f64) -> SystemConfig {
    let mut sys = base.clone();
    sys.transmit_power = 10f64.powf(snr_db / 10.0);
    sys.noise_variance = 1.0;
    sys.imperfection = beta_sq.sqrt();
    sys
}

fn settings_for(cfg: &HarnessConfig) -> StrategySettings {
    StrategySettings {
        omp_dict_size: cfg.omp_dict_size,
        mo_config: cfg.mo.clone(),
        agent_config: cfg.agent.clone(),
        cold_start: cfg.cold_start,
    }
}

fn install_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))
}

struct RatePoint {
    algorithm: String,
    snr_db: f64,
    beta_sq: f64,
    mean_rate: f64,
    std_rate: f64,
    mean_reward: Option<f64>,
    n: usize,
}

/// Mean spectral efficiency per (algorithm, SNR, beta^2) grid point. The
/// same channel realizations are shared across algorithms so comparisons
/// are paired. Output bytes are independent of the thread count.
pub fn run_rate_sweep(
    cfg: &HarnessConfig,
    config_text: &str,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<String, HarnessError> {
    let pool = install_pool(threads)?;
    let mut grid = Vec::new();
    for algorithm in &cfg.sweep.algorithms {
        for (si, &snr) in cfg.sweep.snr_db.iter().enumerate() {
            for (bi, &beta_sq) in cfg.sweep.beta_sq.iter().enumerate() {
                grid.push((algorithm.clone(), si, snr, bi, beta_sq));
            }
        }
    }
    let settings = settings_for(cfg);
    let points: Result<Vec<RatePoint>, HarnessError> = pool.install(|| {
        grid.par_iter()
            .map(|(algorithm, si, snr, bi, beta_sq)| {
                rate_point(cfg, &settings, algorithm, *si, *snr, *bi, *beta_sq, master_seed)
            })
            .collect()
    });
    let points = points?;

    let mut out = csv_header(
        "rate-sweep",
        config_text,
        master_seed,
        "algorithm,snr_db,beta_sq,mean_rate,std_rate,mean_reward,n",
    );
    for p in points {
        let reward = p
            .mean_reward
            .map(|r| format_float(r))
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.algorithm,
            format_float(p.snr_db),
            format_float(p.beta_sq),
            format_float(p.mean_rate),
            format_float(p.std_rate),
            reward,
            p.n
        )
        .expect("string write");
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn rate_point(
    cfg: &HarnessConfig,
    settings: &StrategySettings,
    algorithm: &str,
    snr_index: usize,
    snr_db: f64,
    beta_index: usize,
    beta_sq: f64,
    master_seed: u64,
) -> Result<RatePoint, HarnessError> {
    let sys = system_at(&cfg.system, snr_db, beta_sq);
    let mut strategy = create(algorithm, settings)?;
    let algo_tag = STRATEGY_NAMES
        .iter()
        .position(|&n| n == algorithm)
        .unwrap_or(usize::MAX) as u64;
    let mut rates = Vec::with_capacity(cfg.sweep.realizations);
    let mut rewards = Vec::new();
    for r in 0..cfg.sweep.realizations {
        // channel seed is algorithm-independent: paired comparisons
        let ch_seed = mix_seed(&[master_seed, 1, snr_index as u64, beta_index as u64, r as u64]);
        let real = generate_channel(&sys, &cfg.channel, ch_seed)?;
        let design_seed = mix_seed(&[ch_seed, 2, algo_tag]);
        let out = strategy.design(&real, &sys, design_seed)?;
        // report on the true channel: what the link actually delivers
        let rate = spectral_efficiency_composite(
            &real.true_channel,
            &out.precoder,
            &out.combiner,
            sys.noise_variance,
        )?;
        rates.push(rate);
        if let Some(trace) = &out.reward_trace {
            if let Some(best) = trace.iter().map(|t| t.reward).reduce(f64::max) {
                rewards.push(best);
            }
        }
    }
    let n = rates.len();
    let mean = rates.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let mean_reward = (!rewards.is_empty())
        .then(|| rewards.iter().sum::<f64>() / rewards.len() as f64);
    Ok(RatePoint {
        algorithm: algorithm.to_string(),
        snr_db,
        beta_sq,
        mean_rate: mean,
        std_rate: var.sqrt(),
        mean_reward,
        n,
    })
}

struct BerPoint {
    algorithm: String,
    snr_db: f64,
    beta_sq: f64,
    ber: f64,
    bits: u64,
}

/// Aggregated QPSK bit-error rate per grid point.
pub fn run_ber_sweep(
    cfg: &HarnessConfig,
    config_text: &str,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<String, HarnessError> {
    let pool = install_pool(threads)?;
    let mut grid = Vec::new();
    for algorithm in &cfg.sweep.algorithms {
        for (si, &snr) in cfg.sweep.snr_db.iter().enumerate() {
            for (bi, &beta_sq) in cfg.sweep.beta_sq.iter().enumerate() {
                grid.push((algorithm.clone(), si, snr, bi, beta_sq));
            }
        }
    }
    let settings = settings_for(cfg);
    let n_symbols = cfg.ber_symbols.unwrap_or_else(|| default_symbol_count(&cfg.system));
    let points: Result<Vec<BerPoint>, HarnessError> = pool.install(|| {
        grid.par_iter()
            .map(|(algorithm, si, snr, bi, beta_sq)| {
                let sys = system_at(&cfg.system, *snr, *beta_sq);
                let mut strategy = create(algorithm, &settings)?;
                let algo_tag = STRATEGY_NAMES
                    .iter()
                    .position(|n| n == algorithm)
                    .unwrap_or(usize::MAX) as u64;
                let mut errors = 0u64;
                let mut bits = 0u64;
                for r in 0..cfg.sweep.realizations {
                    let ch_seed =
                        mix_seed(&[master_seed, 1, *si as u64, *bi as u64, r as u64]);
                    let real = generate_channel(&sys, &cfg.channel, ch_seed)?;
                    let design_seed = mix_seed(&[ch_seed, 2, algo_tag]);
                    let out = strategy.design(&real, &sys, design_seed)?;
                    let link_seed = mix_seed(&[ch_seed, 3, algo_tag]);
                    let res = simulate_ber(
                        &real.true_channel,
                        &out.precoder,
                        &out.combiner,
                        &sys,
                        n_symbols,
                        link_seed,
                    )?;
                    errors += res.bit_errors;
                    bits += res.bits_simulated;
                }
                Ok(BerPoint {
                    algorithm: algorithm.clone(),
                    snr_db: *snr,
                    beta_sq: *beta_sq,
                    ber: errors as f64 / bits as f64,
                    bits,
                })
            })
            .collect()
    });
    let points = points?;

    let mut out = csv_header(
        "ber-sweep",
        config_text,
        master_seed,
        "algorithm,snr_db,beta_sq,ber,bits_simulated",
    );
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.algorithm,
            format_float(p.snr_db),
            format_float(p.beta_sq),
            format_float(p.ber),
            p.bits
        )
        .expect("string write");
    }
    Ok(out)
}

/// Wall-clock decomposition per algorithm at the first grid point:
/// mean design time and, where applicable, the manifold-optimization and
/// training shares.
pub fn run_timing(
    cfg: &HarnessConfig,
    config_text: &str,
    master_seed: u64,
) -> Result<String, HarnessError> {
    let snr = cfg.sweep.snr_db[0];
    let beta_sq = cfg.sweep.beta_sq[0];
    let sys = system_at(&cfg.system, snr, beta_sq);
    let settings = settings_for(cfg);
    let n = cfg.sweep.timing_realizations;

    let mut out = csv_header(
        "timing",
        config_text,
        master_seed,
        "algorithm,n,mean_total_ms,mean_mo_ms,mean_mo_per_iteration_ms,mean_train_ms",
    );
    for algorithm in &cfg.sweep.algorithms {
        let mut strategy = create(algorithm, &settings)?;
        let algo_tag = STRATEGY_NAMES
            .iter()
            .position(|a| a == algorithm)
            .unwrap_or(usize::MAX) as u64;
        let mut total = 0.0;
        let mut mo = 0.0;
        let mut mo_per_iter = 0.0;
        let mut train = 0.0;
        let mut has_mo = false;
        let mut has_train = false;
        for r in 0..n {
            let ch_seed = mix_seed(&[master_seed, 4, r as u64]);
            let real = generate_channel(&sys, &cfg.channel, ch_seed)?;
            let design_seed = mix_seed(&[ch_seed, 2, algo_tag]);
            let t = strategy.design(&real, &sys, design_seed)?.timing;
            total += t.total_ms;
            if let Some(x) = t.mo_ms {
                mo += x;
                has_mo = true;
            }
            if let Some(x) = t.mo_per_iteration_ms {
                mo_per_iter += x;
            }
            if let Some(x) = t.train_ms {
                train += x;
                has_train = true;
            }
        }
        let fmt = |acc: f64, present: bool| {
            if present {
                format!("{:.3}", acc / n as f64)
            } else {
                String::new()
            }
        };
        writeln!(
            out,
            "{},{},{:.3},{},{},{}",
            algorithm,
            n,
            total / n as f64,
            fmt(mo, has_mo),
            fmt(mo_per_iter, has_mo),
            fmt(train, has_train)
        )
        .expect("string write");
    }
    Ok(out)
}

/// Trains one learned-strategy agent across the configured number of
/// channel realizations at the first grid point, carrying the networks
/// and replay buffer across channels unless cold start is configured.
/// Returns the per-iteration trace CSV and the trained strategy.
pub fn run_train(
    cfg: &HarnessConfig,
    config_text: &str,
    master_seed: u64,
) -> Result<(String, crate::beamformer::PrecoderNet), HarnessError> {
    let snr = cfg.sweep.snr_db[0];
    let beta_sq = cfg.sweep.beta_sq[0];
    let sys = system_at(&cfg.system, snr, beta_sq);
    let mut strategy = crate::beamformer::PrecoderNet::new(
        cfg.mo.clone(),
        cfg.agent.clone(),
        cfg.cold_start,
    );

    let mut out = csv_header(
        "train",
        config_text,
        master_seed,
        "channel,iteration,reward,critic_loss,mean_q",
    );
    for r in 0..cfg.sweep.realizations {
        let ch_seed = mix_seed(&[master_seed, 1, 0, 0, r as u64]);
        let real = generate_channel(&sys, &cfg.channel, ch_seed)?;
        let design_seed = mix_seed(&[ch_seed, 2, 2]);
        let result = {
            use crate::beamformer::Beamformer;
            strategy.design(&real, &sys, design_seed)?
        };
        for row in result.reward_trace.as_deref().unwrap_or(&[]) {
            let opt = |x: Option<f64>| x.map(|v| format_float(v)).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                r,
                row.iteration,
                format_float(row.reward),
                opt(row.critic_loss),
                opt(row.mean_q)
            )
            .expect("string write");
        }
    }
    Ok((out, strategy))
}

/// Fast end-to-end smoke test of the pipeline; returns a human-readable
/// report, errors if any check fails.
pub fn run_selftest(master_seed: u64) -> Result<String, HarnessError> {
    let mut cfg = HarnessConfig::default();
    cfg.sweep.algorithms = vec!["fd".into(), "omp".into(), "precodernet".into()];
    cfg.sweep.snr_db = vec![0.0];
    cfg.sweep.beta_sq = vec![0.0];
    cfg.sweep.realizations = 2;
    cfg.agent.iterations = 40;
    cfg.agent.minibatch_size = 16;
    cfg.agent.hidden_widths = vec![64, 48];
    cfg.channel = ChannelConfig::new(4, 3);

    let mut report = String::from("selftest\n");
    let sys = system_at(&cfg.system, 0.0, 0.0);
    let settings = settings_for(&cfg);
    let real = generate_channel(&sys, &cfg.channel, mix_seed(&[master_seed, 7]))?;

    let mut fd = create("fd", &settings)?;
    let fd_out = fd.design(&real, &sys, 0)?;
    let fd_rate = spectral_efficiency_composite(
        &real.true_channel,
        &fd_out.precoder,
        &fd_out.combiner,
        sys.noise_variance,
    )?;
    writeln!(report, "fd rate: {fd_rate:.3} bits/s/Hz").expect("string write");
    if !(fd_rate.is_finite() && fd_rate > 0.0) {
        return Err(HarnessError::Invalid("fd rate not positive".into()));
    }

    for name in ["omp", "precodernet"] {
        let mut s = create(name, &settings)?;
        let out = s.design(&real, &sys, mix_seed(&[master_seed, 8]))?;
        let rate = spectral_efficiency_composite(
            &real.true_channel,
            &out.precoder,
            &out.combiner,
            sys.noise_variance,
        )?;
        writeln!(report, "{name} rate: {rate:.3} bits/s/Hz").expect("string write");
        let w = out.weights.expect("hybrid strategies return weights");
        if w.max_modulus_error() > 1e-9 {
            return Err(HarnessError::Invalid(format!(
                "{name} analog weights leave the unit-modulus set"
            )));
        }
        if (w.transmit_power() - sys.transmit_power).abs() > 1e-6 {
            return Err(HarnessError::Invalid(format!(
                "{name} violates the power constraint"
            )));
        }
        if rate > fd_rate + 1e-9 {
            return Err(HarnessError::Invalid(format!(
                "{name} exceeds the fully digital reference"
            )));
        }
    }

    let csv1 = run_rate_sweep(&cfg, "", master_seed, Some(1))?;
    let csv2 = run_rate_sweep(&cfg, "", master_seed, Some(4))?;
    if csv1 != csv2 {
        return Err(HarnessError::Invalid(
            "rate sweep not deterministic across thread counts".into(),
        ));
    }
    writeln!(report, "rate sweep deterministic across 1/4 threads").expect("string write");
    writeln!(report, "ok").expect("string write");
    Ok(report)
}
