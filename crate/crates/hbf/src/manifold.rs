//! Analog precoder design by Riemannian optimization on the manifold of
//! unit-modulus matrices, alternating with an unconstrained digital factor.
//!
//! The objective is distance to the full-digital reference precoder of the
//! channel estimate: minimize ||F_opt - V_RF X||_F over unit-modulus V_RF
//! and free X. Only V_RF is kept; the digital precoder is learned later.

use crate::channel::SystemConfig;
use crate::linalg::{self, CMat, LinalgError};
use crate::metrics::project_unit_modulus;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone)]
pub struct MoConfig {
    /// Stop when the objective decrease between outer iterations falls
    /// below this.
    pub stop_threshold: f64,
    pub max_outer_iterations: usize,
    pub max_inner_cg_steps: usize,
}

impl Default for MoConfig {
    fn default() -> Self {
        Self {
            stop_threshold: 1e-2,
            max_outer_iterations: 100,
            max_inner_cg_steps: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MoResult {
    /// Unit-modulus analog precoder, N_t x N_RF.
    pub v_rf: CMat,
    /// Objective ||F - V X||_F^2 after every outer iteration.
    pub objective_trace: Vec<f64>,
    pub hit_iteration_cap: bool,
}

/// Full-digital reference precoder: first N_s right singular vectors of
/// the channel estimate, scaled so the total power is P.
pub fn fd_reference_precoder(h_est: &CMat, sys: &SystemConfig) -> Result<CMat, LinalgError> {
    let dec = linalg::svd(h_est)?;
    let n_s = sys.n_streams;
    let cols: Vec<_> = (0..n_s).map(|k| dec.v.column(k)).collect();
    let f = CMat::from_columns(&cols);
    Ok(f.scale((sys.transmit_power / n_s as f64).sqrt()))
}

fn real_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Projection onto the tangent space of the unit-modulus torus at `v`:
/// g - Re(g o conj(v)) o v, elementwise.
fn tangent_project(g: &CMat, v: &CMat) -> CMat {
    CMat::from_fn(g.nrows(), g.ncols(), |i, j| {
        let vz = v[(i, j)];
        g[(i, j)] - vz * (g[(i, j)] * vz.conj()).re
    })
}

fn objective(f_opt: &CMat, v: &CMat, x: &CMat) -> f64 {
    (f_opt - v * x).norm().powi(2)
}

/// Least-squares digital factor: argmin_X ||F - V X||_F.
fn solve_digital(f_opt: &CMat, v: &CMat) -> Result<CMat, LinalgError> {
    let gram = v.adjoint() * v;
    let rhs = v.adjoint() * f_opt;
    match linalg::hermitian_solve(&gram, &rhs) {
        Ok(x) => Ok(x),
        Err(LinalgError::NotPositiveDefinite) => {
            // Degenerate V (repeated columns); a tiny ridge keeps the
            // alternation moving.
            let n = gram.nrows();
            let ridged = gram + CMat::identity(n, n).scale(1e-10);
            linalg::hermitian_solve(&ridged, &rhs)
        }
        Err(e) => Err(e),
    }
}

/// Riemannian conjugate-gradient pass over V at fixed X. Returns the new
/// point and its objective; never increases the objective.
fn rcg_pass(f_opt: &CMat, v0: &CMat, x: &CMat, max_steps: usize) -> (CMat, f64) {
    let xh = x.adjoint();
    let egrad = |v: &CMat| -> CMat { (f_opt - v * x).scale(-2.0) * &xh };
    let mut v = v0.clone();
    let mut obj = objective(f_opt, &v, x);
    let mut grad = tangent_project(&egrad(&v), &v);
    let mut dir = -&grad;
    let mut grad_norm_sq = real_inner(&grad, &grad);
    let mut step = 1.0f64;

    for _ in 0..max_steps {
        if grad_norm_sq < 1e-24 {
            break;
        }
        let slope = real_inner(&grad, &dir);
        let (dir_used, slope) = if slope >= 0.0 {
            // not a descent direction: restart with steepest descent
            (-&grad, -grad_norm_sq)
        } else {
            (dir.clone(), slope)
        };

        // Armijo backtracking on the retracted curve.
        let mut t = step.max(1e-12);
        let mut accepted = None;
        for _ in 0..40 {
            let cand = project_unit_modulus(&(&v + dir_used.scale(t)));
            let cand_obj = objective(f_opt, &cand, x);
            if cand_obj <= obj + 1e-4 * t * slope {
                accepted = Some((cand, cand_obj, t));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, cand_obj, t_used)) = accepted else {
            break;
        };
        v = cand;
        obj = cand_obj;
        step = (t_used * 2.0).min(1e6);

        let new_grad = tangent_project(&egrad(&v), &v);
        let new_norm_sq = real_inner(&new_grad, &new_grad);
        // Fletcher-Reeves coefficient (nonnegative by construction);
        // transport the old direction by projecting onto the new tangent.
        let beta = if grad_norm_sq > 0.0 {
            (new_norm_sq / grad_norm_sq).max(0.0)
        } else {
            0.0
        };
        dir = -&new_grad + tangent_project(&dir_used, &v).scale(beta);
        grad = new_grad;
        grad_norm_sq = new_norm_sq;
    }
    (v, obj)
}

/// Alternating minimization of ||F_opt - V_RF X||_F over unit-modulus
/// V_RF (Riemannian CG) and free X (least squares). Returns V_RF only.
pub fn mo_analog_precoder(
    f_opt: &CMat,
    n_rf: usize,
    cfg: &MoConfig,
    seed: u64,
) -> Result<MoResult, ManifoldError> {
    let n_t = f_opt.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = CMat::from_fn(n_t, n_rf, |_, _| {
        Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
    });

    let mut trace = Vec::with_capacity(cfg.max_outer_iterations);
    let mut prev_obj = f64::INFINITY;
    let mut hit_cap = true;
    for _ in 0..cfg.max_outer_iterations {
        let x = solve_digital(f_opt, &v)?;
        let (v_new, obj) = rcg_pass(f_opt, &v, &x, cfg.max_inner_cg_steps);
        v = v_new;
        trace.push(obj);
        if prev_obj - obj < cfg.stop_threshold {
            hit_cap = false;
            break;
        }
        prev_obj = obj;
    }
    // Final retraction keeps feasibility exact regardless of round-off.
    let v_rf = project_unit_modulus(&v);
    Ok(MoResult {
        v_rf,
        objective_trace: trace,
        hit_iteration_cap: hit_cap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_cmat;

    fn sys(n_t: usize, n_r: usize, n_s: usize, p: f64) -> SystemConfig {
        SystemConfig {
            n_tx_antennas: n_t,
            n_rx_antennas: n_r,
            n_tx_rf_chains: n_s,
            n_rx_rf_chains: n_s,
            n_streams: n_s,
            transmit_power: p,
            noise_variance: 1.0,
            imperfection: 0.0,
        }
    }

    #[test]
    fn fd_reference_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f_r = random_cmat(4, 1, &mut rng);
        let f_t = random_cmat(8, 1, &mut rng);
        let h = &f_r * f_t.adjoint();
        let s = sys(8, 4, 1, 2.0);
        let f = fd_reference_precoder(&h, &s).unwrap();
        // column proportional to f_t with norm sqrt(P)
        assert!((f.norm() - 2.0f64.sqrt()).abs() < 1e-10);
        let cos = (f.adjoint() * &f_t).norm() / (f.norm() * f_t.norm());
        assert!((cos - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fd_reference_identity_channel() {
        let s = sys(4, 4, 2, 2.0);
        let f = fd_reference_precoder(&CMat::identity(4, 4), &s).unwrap();
        let gram = f.adjoint() * &f;
        assert!((gram - CMat::identity(2, 2)).norm() < 1e-9);
    }

    #[test]
    fn fd_reference_power_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = sys(8, 4, 3, 5.0);
        let h = random_cmat(4, 8, &mut rng);
        let f = fd_reference_precoder(&h, &s).unwrap();
        assert!((f.norm().powi(2) - 5.0).abs() < 1e-10);
    }

    #[test]
    fn representable_target_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v_true = project_unit_modulus(&random_cmat(16, 2, &mut rng));
        let x = random_cmat(2, 2, &mut rng);
        let f_opt = &v_true * &x;
        let cfg = MoConfig {
            stop_threshold: 1e-6,
            ..MoConfig::default()
        };
        let res = mo_analog_precoder(&f_opt, 2, &cfg, 7).unwrap();
        let final_obj = *res.objective_trace.last().unwrap();
        assert!(final_obj < 1e-2, "final objective {final_obj}");
    }

    #[test]
    fn square_v_spans_generic_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f_opt = random_cmat(6, 2, &mut rng);
        let res = mo_analog_precoder(&f_opt, 6, &MoConfig::default(), 11).unwrap();
        // with N_t = N_RF the least-squares residual can reach ~0
        let x = solve_digital(&f_opt, &res.v_rf).unwrap();
        let resid = (&f_opt - &res.v_rf * x).norm().powi(2);
        assert!(resid < 1e-2, "residual {resid}");
    }

    #[test]
    fn objective_trace_monotone_and_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f_opt = random_cmat(32, 4, &mut rng).scale(2.0);
        let res = mo_analog_precoder(&f_opt, 6, &MoConfig::default(), 13).unwrap();
        for pair in res.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
        for z in res.v_rf.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_projection_is_orthogonal_to_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let v = project_unit_modulus(&random_cmat(8, 3, &mut rng));
        let g = random_cmat(8, 3, &mut rng);
        let t = tangent_project(&g, &v);
        for (tz, vz) in t.iter().zip(v.iter()) {
            assert!((tz * vz.conj()).re.abs() < 1e-10);
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f_opt = random_cmat(16, 2, &mut rng);
        let a = mo_analog_precoder(&f_opt, 4, &MoConfig::default(), 21).unwrap();
        let b = mo_analog_precoder(&f_opt, 4, &MoConfig::default(), 21).unwrap();
        assert_eq!(a.v_rf, b.v_rf);
    }
}
