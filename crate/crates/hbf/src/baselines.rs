//! Classical benchmark beamformers: the full-digital SVD solution and the
//! greedy OMP hybrid design against a grid dictionary of array responses.

use crate::channel::{array_response, SystemConfig};
use crate::linalg::{self, CMat, LinalgError};
use crate::manifold::fd_reference_precoder;
use crate::metrics::{mmse_digital_combiner, project_power, HybridWeights, MetricsError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("dictionary smaller than RF chain count ({dict} < {rf})")]
    DictionaryTooSmall { dict: usize, rf: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Full-digital SVD beamformer: V from the top right singular vectors
/// (total power P, equal per stream), W from the top left singular
/// vectors (unit columns).
pub fn fd_svd_beamformer(
    h_est: &CMat,
    sys: &SystemConfig,
) -> Result<(CMat, CMat), BaselineError> {
    let dec = linalg::svd(h_est)?;
    let n_s = sys.n_streams;
    let v_cols: Vec<_> = (0..n_s).map(|k| dec.v.column(k)).collect();
    let v = CMat::from_columns(&v_cols).scale((sys.transmit_power / n_s as f64).sqrt());
    let w_cols: Vec<_> = (0..n_s).map(|k| dec.u.column(k)).collect();
    let w = CMat::from_columns(&w_cols);
    Ok((v, w))
}

/// OMP design output; residual traces are the least-squares residual
/// Frobenius norms after each greedy selection.
#[derive(Debug, Clone)]
pub struct OmpResult {
    pub weights: HybridWeights,
    pub tx_residual_trace: Vec<f64>,
    pub rx_residual_trace: Vec<f64>,
}

/// Default transmit dictionary size: twice the antenna count.
pub fn default_dict_size(sys: &SystemConfig) -> usize {
    2 * sys.n_tx_antennas
}

/// Grid dictionary of unit-modulus array-response columns with sin(angle)
/// uniformly spaced in [-1, 1] (cell midpoints, since the endpoints -1 and
/// +1 alias to the same response at half-wavelength spacing).
fn grid_dictionary(n_antennas: usize, size: usize) -> CMat {
    let scale = (n_antennas as f64).sqrt();
    let cols: Vec<_> = (0..size)
        .map(|k| {
            let s = -1.0 + (2.0 * k as f64 + 1.0) / size as f64;
            array_response(n_antennas, 0.5, s.asin()).scale(scale)
        })
        .collect();
    let col_views: Vec<_> = cols.iter().map(|c| c.column(0)).collect();
    CMat::from_columns(&col_views)
}

/// Greedy OMP of `target` over `dict` columns: selects `n_select`
/// columns, re-solving the digital factor by least squares each step.
/// Returns the analog matrix, digital factor and residual trace.
fn omp_select(
    target: &CMat,
    dict: &CMat,
    n_select: usize,
) -> Result<(CMat, CMat, Vec<f64>), BaselineError> {
    let mut selected: Vec<usize> = Vec::with_capacity(n_select);
    let mut residual = target.clone();
    let mut trace = Vec::with_capacity(n_select);
    let mut analog = CMat::zeros(target.nrows(), 0);
    let mut digital = CMat::zeros(0, target.ncols());
    for _ in 0..n_select {
        let corr = dict.adjoint() * &residual;
        let pick = (0..dict.ncols())
            .filter(|k| !selected.contains(k))
            .max_by(|&a, &b| {
                corr.row(a)
                    .norm()
                    .partial_cmp(&corr.row(b).norm())
                    .unwrap()
            })
            .expect("dictionary exhausted");
        selected.push(pick);
        let cols: Vec<_> = selected.iter().map(|&k| dict.column(k)).collect();
        analog = CMat::from_columns(&cols);
        let gram = analog.adjoint() * &analog;
        let rhs = analog.adjoint() * target;
        digital = match linalg::hermitian_solve(&gram, &rhs) {
            Ok(x) => x,
            Err(LinalgError::NotPositiveDefinite) => {
                let n = gram.nrows();
                let ridged = &gram + CMat::identity(n, n).scale(1e-10);
                linalg::hermitian_solve(&ridged, &rhs)?
            }
            Err(e) => return Err(e.into()),
        };
        residual = target - &analog * &digital;
        trace.push(residual.norm());
    }
    Ok((analog, digital, trace))
}

/// Spatially sparse OMP hybrid beamformer. The transmit side matches the
/// FD reference precoder over a `dict_size`-column grid; the receive side
/// matches the FD combiner over a grid scaled to the receive array, then
/// takes the MMSE digital combiner.
pub fn omp_hybrid_beamformer(
    h_est: &CMat,
    sys: &SystemConfig,
    dict_size: usize,
) -> Result<OmpResult, BaselineError> {
    if dict_size < sys.n_tx_rf_chains {
        return Err(BaselineError::DictionaryTooSmall {
            dict: dict_size,
            rf: sys.n_tx_rf_chains,
        });
    }
    // Keep the grid density equal on both sides of the link.
    let rx_dict_size = ((dict_size * sys.n_rx_antennas) / sys.n_tx_antennas)
        .max(sys.n_rx_rf_chains)
        .max(2);

    let f_opt = fd_reference_precoder(h_est, sys)?;
    let tx_dict = grid_dictionary(sys.n_tx_antennas, dict_size);
    let (v_rf, v_bb_raw, tx_trace) = omp_select(&f_opt, &tx_dict, sys.n_tx_rf_chains)?;
    let v_bb = project_power(&v_rf, &v_bb_raw, sys.transmit_power)?;

    let (_, w_fd) = fd_svd_beamformer(h_est, sys)?;
    let rx_dict = grid_dictionary(sys.n_rx_antennas, rx_dict_size);
    let (w_rf, _, rx_trace) = omp_select(&w_fd, &rx_dict, sys.n_rx_rf_chains)?;
    let w_bb = mmse_digital_combiner(h_est, &v_rf, &v_bb, &w_rf, sys)?;

    Ok(OmpResult {
        weights: HybridWeights {
            analog_precoder: v_rf,
            digital_precoder: v_bb,
            analog_combiner: w_rf,
            digital_combiner: w_bb,
        },
        tx_residual_trace: tx_trace,
        rx_residual_trace: rx_trace,
    })
}
