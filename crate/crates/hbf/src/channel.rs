//! Clustered Saleh-Valenzuela mmWave channel generation with an
//! imperfect base-station-side estimate.

use crate::linalg::{complex_gaussian, random_cmat, CMat};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use std::f64::consts::PI;
use std::io::{self, Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid system config: {0}")]
    InvalidSystem(String),
    #[error("invalid channel config: {0}")]
    InvalidChannel(String),
    #[error("estimate undefined at beta=1")]
    EstimateUndefinedAtBetaOne,
    #[error("dump i/o: {0}")]
    Io(#[from] io::Error),
    #[error("dump format: {0}")]
    Format(String),
}

/// Antenna/RF-chain geometry, transmit power, noise level and CSI
/// imperfection for one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub n_tx_antennas: usize,
    pub n_rx_antennas: usize,
    pub n_tx_rf_chains: usize,
    pub n_rx_rf_chains: usize,
    pub n_streams: usize,
    /// Maximum transmit power, linear.
    pub transmit_power: f64,
    /// Noise variance, linear.
    pub noise_variance: f64,
    /// CSI imperfection level beta in [0, 1].
    pub imperfection: f64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let s = self;
        if s.n_streams == 0 || s.n_tx_antennas == 0 || s.n_rx_antennas == 0 {
            return Err(ChannelError::InvalidSystem("counts must be positive".into()));
        }
        if !(s.n_streams <= s.n_tx_rf_chains && s.n_tx_rf_chains <= s.n_tx_antennas) {
            return Err(ChannelError::InvalidSystem(
                "need n_streams <= n_tx_rf_chains <= n_tx_antennas".into(),
            ));
        }
        if !(s.n_streams <= s.n_rx_rf_chains && s.n_rx_rf_chains <= s.n_rx_antennas) {
            return Err(ChannelError::InvalidSystem(
                "need n_streams <= n_rx_rf_chains <= n_rx_antennas".into(),
            ));
        }
        if !(s.transmit_power > 0.0 && s.noise_variance > 0.0) {
            return Err(ChannelError::InvalidSystem(
                "power and noise variance must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&s.imperfection) {
            return Err(ChannelError::InvalidSystem("beta must lie in [0,1]".into()));
        }
        Ok(())
    }

    pub fn snr_linear(&self) -> f64 {
        self.transmit_power / self.noise_variance
    }
}

/// Cluster/ray geometry of the Saleh-Valenzuela model.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub n_clusters: usize,
    pub rays_per_cluster: usize,
    /// Per-cluster path gain variance, length `n_clusters`.
    pub cluster_power: Vec<f64>,
    pub antenna_spacing_over_wavelength: f64,
    /// Laplacian angular spread of rays around their cluster center,
    /// radians. Zero gives point clusters.
    pub angle_spread_rad: f64,
}

impl ChannelConfig {
    /// Unit-power clusters, half-wavelength spacing, 10 degree spread.
    pub fn new(n_clusters: usize, rays_per_cluster: usize) -> Self {
        Self {
            n_clusters,
            rays_per_cluster,
            cluster_power: vec![1.0; n_clusters],
            antenna_spacing_over_wavelength: 0.5,
            angle_spread_rad: 10.0_f64.to_radians(),
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.n_clusters == 0 || self.rays_per_cluster == 0 {
            return Err(ChannelError::InvalidChannel("cluster/ray counts must be positive".into()));
        }
        if self.cluster_power.len() != self.n_clusters {
            return Err(ChannelError::InvalidChannel(
                "cluster_power length must equal n_clusters".into(),
            ));
        }
        if self.cluster_power.iter().any(|&p| p <= 0.0) {
            return Err(ChannelError::InvalidChannel("cluster powers must be positive".into()));
        }
        if self.antenna_spacing_over_wavelength <= 0.0 {
            return Err(ChannelError::InvalidChannel("antenna spacing must be positive".into()));
        }
        if self.angle_spread_rad < 0.0 {
            return Err(ChannelError::InvalidChannel("angle spread must be non-negative".into()));
        }
        Ok(())
    }
}

/// One propagation path: complex gain plus arrival/departure angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    pub aoa_rad: f64,
    pub aod_rad: f64,
}

/// All `n_clusters * rays_per_cluster` paths of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
}

/// True channel, BS-side estimate and the error matrix tying them together.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// True channel H, N_r x N_t.
    pub true_channel: CMat,
    /// BS estimate H~, N_r x N_t.
    pub estimated_channel: CMat,
    /// Error term; H = sqrt(1-beta^2) H~ + beta dH.
    pub error: CMat,
    pub imperfection: f64,
    pub paths: PathSet,
}

/// ULA array response, unit Euclidean norm: entry k is
/// exp(j k 2 pi (d/lambda) sin(angle)) / sqrt(n).
pub fn array_response(n_antennas: usize, spacing_over_wavelength: f64, angle: f64) -> CMat {
    assert!(n_antennas >= 1);
    let scale = 1.0 / (n_antennas as f64).sqrt();
    let phase_step = 2.0 * PI * spacing_over_wavelength * angle.sin();
    CMat::from_fn(n_antennas, 1, |k, _| {
        Complex64::from_polar(scale, phase_step * k as f64)
    })
}

fn sample_laplacian<R: Rng + ?Sized>(rng: &mut R, std_dev: f64) -> f64 {
    if std_dev == 0.0 {
        return 0.0;
    }
    let b = std_dev / std::f64::consts::SQRT_2;
    let u: f64 = rng.gen_range(-0.5..0.5);
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

fn clamp_angle(a: f64) -> f64 {
    a.clamp(-PI / 2.0, PI / 2.0)
}

fn draw_paths<R: Rng + ?Sized>(ch: &ChannelConfig, rng: &mut R) -> PathSet {
    let center_dist = Uniform::new_inclusive(-PI / 2.0, PI / 2.0);
    let mut paths = Vec::with_capacity(ch.n_clusters * ch.rays_per_cluster);
    for i in 0..ch.n_clusters {
        let center_aoa = center_dist.sample(rng);
        let center_aod = center_dist.sample(rng);
        let sigma = ch.cluster_power[i].sqrt();
        for _ in 0..ch.rays_per_cluster {
            let aoa = clamp_angle(center_aoa + sample_laplacian(rng, ch.angle_spread_rad));
            let aod = clamp_angle(center_aod + sample_laplacian(rng, ch.angle_spread_rad));
            let gain = complex_gaussian(rng) * sigma;
            paths.push(Path {
                gain,
                aoa_rad: aoa,
                aod_rad: aod,
            });
        }
    }
    PathSet { paths }
}

/// Generates one channel realization plus its imperfect estimate,
/// deterministically from the seed.
pub fn generate_channel(
    sys: &SystemConfig,
    ch: &ChannelConfig,
    seed: u64,
) -> Result<ChannelRealization, ChannelError> {
    sys.validate()?;
    ch.validate()?;
    let beta = sys.imperfection;
    if beta >= 1.0 {
        return Err(ChannelError::EstimateUndefinedAtBetaOne);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths = draw_paths(ch, &mut rng);

    let (n_r, n_t) = (sys.n_rx_antennas, sys.n_tx_antennas);
    let scale = ((n_t * n_r) as f64 / (ch.n_clusters * ch.rays_per_cluster) as f64).sqrt();
    let mut h = CMat::zeros(n_r, n_t);
    for p in &paths.paths {
        let f_r = array_response(n_r, ch.antenna_spacing_over_wavelength, p.aoa_rad);
        let f_t = array_response(n_t, ch.antenna_spacing_over_wavelength, p.aod_rad);
        h += (&f_r * f_t.adjoint()).scale(scale) * p.gain;
    }

    let error = random_cmat(n_r, n_t, &mut rng);
    let estimated = if beta == 0.0 {
        h.clone()
    } else {
        (&h - error.scale(beta)).unscale((1.0 - beta * beta).sqrt())
    };
    Ok(ChannelRealization {
        true_channel: h,
        estimated_channel: estimated,
        error,
        imperfection: beta,
        paths,
    })
}

const DUMP_MAGIC: &[u8; 4] = b"HBCH";
const DUMP_VERSION: u32 = 1;

fn write_matrix<W: Write>(w: &mut W, m: &CMat) -> io::Result<()> {
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_matrix<R: Read>(r: &mut R) -> Result<CMat, ChannelError> {
    let rows = read_u64(r)? as usize;
    let cols = read_u64(r)? as usize;
    if rows == 0 || cols == 0 || rows.saturating_mul(cols) > 1 << 28 {
        return Err(ChannelError::Format("implausible matrix dimensions".into()));
    }
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re = read_f64(r)?;
            let im = read_f64(r)?;
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

impl ChannelRealization {
    /// Writes the versioned binary dump: magic, version, beta, then the
    /// three matrices as (rows, cols, row-major re/im pairs).
    pub fn write_dump<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&self.imperfection.to_le_bytes())?;
        write_matrix(w, &self.true_channel)?;
        write_matrix(w, &self.estimated_channel)?;
        write_matrix(w, &self.error)
    }

    /// Reads a dump produced by [`ChannelRealization::write_dump`].
    /// Path parameters are not stored; the loaded set is empty.
    pub fn read_dump<R: Read>(r: &mut R) -> Result<Self, ChannelError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(ChannelError::Format("bad magic".into()));
        }
        let mut ver = [0u8; 4];
        r.read_exact(&mut ver)?;
        let version = u32::from_le_bytes(ver);
        if version != DUMP_VERSION {
            return Err(ChannelError::Format(format!("unsupported version {version}")));
        }
        let beta = read_f64(r)?;
        let true_channel = read_matrix(r)?;
        let estimated_channel = read_matrix(r)?;
        let error = read_matrix(r)?;
        Ok(Self {
            true_channel,
            estimated_channel,
            error,
            imperfection: beta,
            paths: PathSet { paths: Vec::new() },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_sys(beta: f64) -> SystemConfig {
        SystemConfig {
            n_tx_antennas: 8,
            n_rx_antennas: 4,
            n_tx_rf_chains: 2,
            n_rx_rf_chains: 2,
            n_streams: 2,
            transmit_power: 1.0,
            noise_variance: 1.0,
            imperfection: beta,
        }
    }

    #[test]
    fn array_response_zero_angle() {
        let f = array_response(4, 0.5, 0.0);
        for k in 0..4 {
            assert!((f[(k, 0)] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn array_response_broadside_two_elements() {
        let f = array_response(2, 0.5, PI / 2.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f[(0, 0)] - Complex64::new(s, 0.0)).norm() < 1e-12);
        assert!((f[(1, 0)] - Complex64::new(-s, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn array_response_unit_norm_constant_modulus() {
        let f = array_response(8, 0.5, 0.3);
        assert!((f.norm() - 1.0).abs() < 1e-12);
        for k in 0..8 {
            assert!((f[(k, 0)].norm() - 1.0 / 8.0f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_csi_estimate_equals_truth() {
        let r = generate_channel(&small_sys(0.0), &ChannelConfig::new(3, 2), 1).unwrap();
        assert_eq!(r.true_channel, r.estimated_channel);
    }

    #[test]
    fn single_path_is_rank_one() {
        let mut ch = ChannelConfig::new(1, 1);
        ch.angle_spread_rad = 0.0;
        let r = generate_channel(&small_sys(0.0), &ch, 42).unwrap();
        let s = crate::linalg::svd(&r.true_channel).unwrap().s;
        assert!(s[0] > 1e-6);
        for k in 1..s.len() {
            assert!(s[k] < 1e-10 * s[0]);
        }
    }

    #[test]
    fn reconstruction_identity_holds() {
        for beta in [0.1, 0.5, 0.9] {
            let r = generate_channel(&small_sys(beta), &ChannelConfig::new(4, 3), 7).unwrap();
            let rebuilt =
                r.estimated_channel.scale((1.0 - beta * beta).sqrt()) + r.error.scale(beta);
            let diff = (&rebuilt - &r.true_channel)
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max);
            assert!(diff < 1e-12, "beta {beta}: max elementwise error {diff}");
        }
    }

    #[test]
    fn beta_one_rejected() {
        let err = generate_channel(&small_sys(1.0), &ChannelConfig::new(2, 2), 1).unwrap_err();
        assert!(matches!(err, ChannelError::EstimateUndefinedAtBetaOne));
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_channel(&small_sys(0.3), &ChannelConfig::new(4, 3), 99).unwrap();
        let b = generate_channel(&small_sys(0.3), &ChannelConfig::new(4, 3), 99).unwrap();
        assert_eq!(a, b);
        let c = generate_channel(&small_sys(0.3), &ChannelConfig::new(4, 3), 100).unwrap();
        assert_ne!(a.true_channel, c.true_channel);
    }

    #[test]
    fn energy_normalization_small_scale() {
        // E[||H||_F^2] = N_t N_r with unit cluster powers.
        let sys = small_sys(0.0);
        let ch = ChannelConfig::new(4, 5);
        let mut acc = 0.0;
        let n = 2000;
        for seed in 0..n {
            let r = generate_channel(&sys, &ch, seed).unwrap();
            acc += r.true_channel.norm().powi(2);
        }
        let per_element = acc / n as f64 / (sys.n_tx_antennas * sys.n_rx_antennas) as f64;
        assert!(
            (per_element - 1.0).abs() < 0.05,
            "normalized energy {per_element}"
        );
    }

    #[test]
    fn angles_stay_in_range() {
        let r = generate_channel(&small_sys(0.0), &ChannelConfig::new(8, 10), 5).unwrap();
        assert_eq!(r.paths.paths.len(), 80);
        for p in &r.paths.paths {
            assert!(p.aoa_rad.abs() <= PI / 2.0 && p.aod_rad.abs() <= PI / 2.0);
        }
    }

    #[test]
    fn dump_round_trip() {
        let r = generate_channel(&small_sys(0.4), &ChannelConfig::new(3, 2), 21).unwrap();
        let mut buf = Vec::new();
        r.write_dump(&mut buf).unwrap();
        let back = ChannelRealization::read_dump(&mut buf.as_slice()).unwrap();
        assert_eq!(r.true_channel, back.true_channel);
        assert_eq!(r.estimated_channel, back.estimated_channel);
        assert_eq!(r.error, back.error);
        assert_eq!(r.imperfection, back.imperfection);
    }

    #[test]
    fn dump_rejects_bad_magic() {
        let err = ChannelRealization::read_dump(&mut &b"XXXX0000"[..]).unwrap_err();
        assert!(matches!(err, ChannelError::Format(_)));
    }
}
