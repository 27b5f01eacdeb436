//! Rate evaluation, the imperfect-CSI average-rate upper bound used as the
//! learning reward, the MMSE digital combiner, and constraint projections.

use crate::channel::SystemConfig;
use crate::linalg::{self, CMat, LinalgError};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("combiner column rank deficient")]
    CombinerRankDeficient,
    #[error("singular inner matrix in MMSE combiner")]
    SingularMmseInner,
    #[error("degenerate precoder (zero product)")]
    DegeneratePrecoder,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The four beamforming matrices of the hybrid architecture.
///
/// `analog_*` entries are unit modulus; the transmit product obeys the
/// total power constraint. Both are enforced by the projections below,
/// not by construction of this struct.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridWeights {
    /// V_RF, N_t x N_RF^t, unit-modulus entries.
    pub analog_precoder: CMat,
    /// V_BB, N_RF^t x N_s.
    pub digital_precoder: CMat,
    /// W_RF, N_r x N_RF^r, unit-modulus entries.
    pub analog_combiner: CMat,
    /// W_BB, N_RF^r x N_s.
    pub digital_combiner: CMat,
}

impl HybridWeights {
    /// Composite precoder V = V_RF V_BB.
    pub fn precoder(&self) -> CMat {
        &self.analog_precoder * &self.digital_precoder
    }

    /// Composite combiner W = W_RF W_BB.
    pub fn combiner(&self) -> CMat {
        &self.analog_combiner * &self.digital_combiner
    }

    /// Transmit power actually used, trace(V V^H).
    pub fn transmit_power(&self) -> f64 {
        self.precoder().norm().powi(2)
    }

    /// Largest deviation of an analog entry modulus from one.
    pub fn max_modulus_error(&self) -> f64 {
        let worst = |m: &CMat| {
            m.iter()
                .map(|z| (z.norm() - 1.0).abs())
                .fold(0.0f64, f64::max)
        };
        worst(&self.analog_precoder).max(worst(&self.analog_combiner))
    }
}

/// log2 det(I + Cn^{-1} W^H H V V^H H^H W) for composite precoder `v` and
/// combiner `w`, with Cn = noise_variance * W^H W.
///
/// Evaluated as logdet(Cn + G) - logdet(Cn) with G = (W^H H V)(W^H H V)^H,
/// keeping every factorization Hermitian.
pub fn spectral_efficiency_composite(
    h: &CMat,
    v: &CMat,
    w: &CMat,
    noise_variance: f64,
) -> Result<f64, MetricsError> {
    if h.ncols() != v.nrows() || h.nrows() != w.nrows() || v.ncols() != w.ncols() {
        return Err(MetricsError::ShapeMismatch(format!(
            "h {}x{}, v {}x{}, w {}x{}",
            h.nrows(),
            h.ncols(),
            v.nrows(),
            v.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let cn = (w.adjoint() * w).scale(noise_variance);
    let logdet_cn = match linalg::logdet_hermitian_pd(&cn) {
        Ok(x) => x,
        Err(LinalgError::NotPositiveDefinite) => return Err(MetricsError::CombinerRankDeficient),
        Err(e) => return Err(e.into()),
    };
    let m = w.adjoint() * h * v;
    let total = &cn + &m * m.adjoint();
    Ok(linalg::logdet_hermitian_pd(&total)? - logdet_cn)
}

/// Spectral efficiency of a hybrid weight set on channel `h`.
pub fn spectral_efficiency(
    h: &CMat,
    weights: &HybridWeights,
    noise_variance: f64,
) -> Result<f64, MetricsError> {
    spectral_efficiency_composite(h, &weights.precoder(), &weights.combiner(), noise_variance)
}

/// Upper bound on the average rate over the channel error, for composite
/// `v`/`w` built on the estimate `h_est`:
/// log2 det[(1 + beta^2 P / sigma^2) I + (1-beta^2) Cn^{-1} W^H H~ V V^H H~^H W].
pub fn rate_upper_bound_composite(
    h_est: &CMat,
    v: &CMat,
    w: &CMat,
    sys: &SystemConfig,
) -> Result<f64, MetricsError> {
    let beta_sq = sys.imperfection * sys.imperfection;
    let cn = (w.adjoint() * w).scale(sys.noise_variance);
    let logdet_cn = match linalg::logdet_hermitian_pd(&cn) {
        Ok(x) => x,
        Err(LinalgError::NotPositiveDefinite) => return Err(MetricsError::CombinerRankDeficient),
        Err(e) => return Err(e.into()),
    };
    let m = w.adjoint() * h_est * v;
    let scaled_cn = cn.scale(1.0 + beta_sq * sys.transmit_power / sys.noise_variance);
    let total = scaled_cn + (&m * m.adjoint()).scale(1.0 - beta_sq);
    Ok(linalg::logdet_hermitian_pd(&total)? - logdet_cn)
}

/// Average-rate upper bound of a hybrid weight set; this is the DRL reward.
pub fn rate_upper_bound(
    h_est: &CMat,
    weights: &HybridWeights,
    sys: &SystemConfig,
) -> Result<f64, MetricsError> {
    rate_upper_bound_composite(h_est, &weights.precoder(), &weights.combiner(), sys)
}

/// MMSE digital combiner:
/// W_BB = sqrt(1-beta^2) (W_RF^H Psi W_RF)^{-1} W_RF^H H~ V
/// with Psi = (1-beta^2) H~ V V^H H~^H + (beta^2 P + sigma^2) I.
pub fn mmse_digital_combiner(
    h_est: &CMat,
    v_rf: &CMat,
    v_bb: &CMat,
    w_rf: &CMat,
    sys: &SystemConfig,
) -> Result<CMat, MetricsError> {
    let beta_sq = sys.imperfection * sys.imperfection;
    let v = v_rf * v_bb;
    let hv = h_est * &v;
    let n_r = h_est.nrows();
    let psi = (&hv * hv.adjoint()).scale(1.0 - beta_sq)
        + CMat::identity(n_r, n_r).scale(beta_sq * sys.transmit_power + sys.noise_variance);
    let inner = w_rf.adjoint() * psi * w_rf;
    let rhs = w_rf.adjoint() * &hv;
    match linalg::hermitian_solve(&inner, &rhs) {
        Ok(x) => Ok(x.scale((1.0 - beta_sq).sqrt())),
        Err(LinalgError::NotPositiveDefinite) => Err(MetricsError::SingularMmseInner),
        Err(e) => Err(e.into()),
    }
}

/// Scales V_BB so trace(V_RF V_BB V_BB^H V_RF^H) equals `power` exactly.
pub fn project_power(v_rf: &CMat, v_bb: &CMat, power: f64) -> Result<CMat, MetricsError> {
    let current = (v_rf * v_bb).norm().powi(2);
    if current == 0.0 || !current.is_finite() {
        return Err(MetricsError::DegeneratePrecoder);
    }
    Ok(v_bb.scale((power / current).sqrt()))
}

/// Normalizes every entry to unit modulus, preserving phases. Zero entries
/// are replaced by 1 (phase 0); the event is logged.
pub fn project_unit_modulus(m: &CMat) -> CMat {
    let mut zeros = 0usize;
    let out = m.map(|z| {
        let r = z.norm();
        if r == 0.0 {
            zeros += 1;
            Complex64::new(1.0, 0.0)
        } else {
            z / r
        }
    });
    if zeros > 0 {
        log::warn!("unit-modulus projection hit {zeros} zero entries; substituted phase 0");
    }
    out
}
