//! Quaternion Wirtinger flow: spectral initialization and gradient descent
//! on the intensity loss `f(z) = (1/n) sum (|a_k^* z|^2 - y_k)^2`.

use std::time::Instant;

use super::{
    check_shapes, dist, row_dot, weighted_data_matrix, RunTrace, SolverConfig, DIVERGENCE_FACTOR,
};
use crate::linalg::{herm_top_eig, QVector};
use crate::measurement::{Ensemble, Observations};
use crate::{Error, Result};

/// Spectral initialization: `z0 = lambda0 * v` where `v` is the top
/// eigenvector of `S = (1/n) sum y_k a_k a_k^*` and
/// `lambda0 = sqrt(mean y)` estimates the signal norm. All-zero
/// observations return the zero vector.
pub fn spectral_init(e: &Ensemble, obs: &Observations, power_iters: usize) -> Result<QVector> {
    if obs.len() != e.n {
        return Err(Error::ShapeMismatch {
            expected: (e.n, 1),
            got: (obs.len(), 1),
        });
    }
    let sum_y: f64 = obs.y.iter().sum();
    if sum_y == 0.0 {
        return Ok(QVector::zeros(e.d));
    }
    let lambda0 = (sum_y / e.n as f64).sqrt();
    let s = weighted_data_matrix(e, e.n as f64, |k| Some(obs.y[k]))?;
    let (_, v) = herm_top_eig(&s, power_iters)?;
    Ok(v.scale(lambda0))
}

/// Intensity loss `f(z) = (1/n) sum (|a_k^* z|^2 - y_k)^2`.
pub fn intensity_loss(e: &Ensemble, obs: &Observations, z: &QVector) -> Result<f64> {
    check_shapes(e, obs, z)?;
    let mut acc = 0.0;
    for k in 0..e.n {
        let c = row_dot(e.a.row(k), z).norm_sqr() - obs.y[k];
        acc += c * c;
    }
    Ok(acc / e.n as f64)
}

/// l2 norm of the intensity residual vector, the error proxy recorded when
/// no ground truth is available.
pub fn intensity_residual(e: &Ensemble, obs: &Observations, z: &QVector) -> Result<f64> {
    Ok((intensity_loss(e, obs, z)? * e.n as f64).sqrt())
}

/// Gradient and residual norm in a single pass over the rows.
fn wf_gradient_residual(
    e: &Ensemble,
    obs: &Observations,
    z: &QVector,
) -> Result<(QVector, f64)> {
    check_shapes(e, obs, z)?;
    let mut g = QVector::zeros(e.d);
    let mut resid_sq = 0.0;
    for k in 0..e.n {
        let row = e.a.row(k);
        let s = row_dot(row, z);
        let c = s.norm_sqr() - obs.y[k];
        resid_sq += c * c;
        if c == 0.0 {
            continue;
        }
        // a_k (a_k^* z) scaled by the real residual; row entries store a_k^*.
        let t = s.scale(c);
        for (gj, a) in g.entries.iter_mut().zip(row) {
            *gj += a.conj() * t;
        }
    }
    Ok((g.scale(1.0 / e.n as f64), resid_sq.sqrt()))
}

/// HR-calculus gradient of the intensity loss:
/// `(1/n) sum (|a_k^* z|^2 - y_k) a_k a_k^* z`.
pub fn wf_gradient(e: &Ensemble, obs: &Observations, z: &QVector) -> Result<QVector> {
    Ok(wf_gradient_residual(e, obs, z)?.0)
}

/// Runs spectral initialization plus `cfg.iters` descent steps with
/// `eta = cfg.eta1 / ||z0||^2`.
///
/// With `truth` present the trace records `dist(z_t, x)` per iteration;
/// otherwise it records the intensity residual. An iterate norm above
/// `1e6 * ||z0||` aborts with `Error::Diverged`.
pub fn qwf_run(
    e: &Ensemble,
    obs: &Observations,
    cfg: &SolverConfig,
    truth: Option<&QVector>,
) -> Result<RunTrace> {
    cfg.validate()?;
    let clock = Instant::now();
    let z0 = spectral_init(e, obs, cfg.power_iters)?;
    let norm0_sq = z0.norm_sqr();
    let eta = if norm0_sq > 0.0 { cfg.eta1 / norm0_sq } else { 0.0 };
    let guard = DIVERGENCE_FACTOR * norm0_sq.sqrt();

    let mut z = z0;
    let mut errors = Vec::with_capacity(cfg.iters + 1);
    let mut elapsed = Vec::with_capacity(cfg.iters + 1);
    for t in 0..cfg.iters {
        let (g, resid) = wf_gradient_residual(e, obs, &z)?;
        errors.push(match truth {
            Some(x) => dist(&z, x),
            None => resid,
        });
        elapsed.push(clock.elapsed().as_nanos() as u64);
        z = z.sub(&g.scale(eta));
        let norm = z.norm();
        if norm > guard {
            return Err(Error::Diverged { iteration: t, norm });
        }
    }
    errors.push(match truth {
        Some(x) => dist(&z, x),
        None => intensity_residual(e, obs, &z)?,
    });
    elapsed.push(clock.elapsed().as_nanos() as u64);

    Ok(RunTrace {
        errors,
        elapsed_ns: elapsed,
        final_z: z,
        iterations_run: cfg.iters,
        wall_time: clock.elapsed(),
    })
}
