//! Quaternion truncated Wirtinger flow: Poisson-likelihood ascent with a
//! truncated initialization and a trimmed gradient.

use std::time::Instant;

use super::{
    check_shapes, dist, row_dot, weighted_data_matrix, RunTrace, SolverConfig, DIVERGENCE_FACTOR,
};
use crate::linalg::{herm_top_eig, QVector};
use crate::measurement::{Ensemble, Observations};
use crate::{Error, Result};

// Rows with |a_k^* z| below this are skipped outright; they only enter the
// sums through ratios that are otherwise 0/0.
const TINY_MAG: f64 = 1e-300;

/// Truncated spectral initialization: like the plain one but summing only
/// rows with `y_k <= theta_y^2 * lambda0^2`. An empty selection returns the
/// zero vector.
pub fn qtwf_init(
    e: &Ensemble,
    obs: &Observations,
    theta_y: f64,
    power_iters: usize,
) -> Result<QVector> {
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
    let lambda0_sq = sum_y / e.n as f64;
    let cut = theta_y * theta_y * lambda0_sq;
    if !obs.y.iter().any(|&y| y.abs() <= cut) {
        return Ok(QVector::zeros(e.d));
    }
    let s = weighted_data_matrix(e, e.n as f64, |k| {
        if obs.y[k].abs() <= cut {
            Some(obs.y[k])
        } else {
            None
        }
    })?;
    let (_, v) = herm_top_eig(&s, power_iters)?;
    Ok(v.scale(lambda0_sq.sqrt()))
}

/// Number of rows passing the initialization cut `y_k <= theta_y^2 lambda0^2`.
pub fn qtwf_selection_size(obs: &Observations, theta_y: f64) -> usize {
    let n = obs.len();
    if n == 0 {
        return 0;
    }
    let cut = theta_y * theta_y * (obs.y.iter().sum::<f64>() / n as f64);
    obs.y.iter().filter(|y| y.abs() <= cut).count()
}

/// Poisson log-likelihood `(1/n) sum y_k log|a_k^* z|^2 - |a_k^* z|^2`,
/// summed over rows with nonvanishing `|a_k^* z|`.
pub fn poisson_loglik(e: &Ensemble, obs: &Observations, z: &QVector) -> Result<f64> {
    check_shapes(e, obs, z)?;
    let mut acc = 0.0;
    for k in 0..e.n {
        let m2 = row_dot(e.a.row(k), z).norm_sqr();
        if m2 < TINY_MAG {
            continue;
        }
        acc += obs.y[k] * m2.ln() - m2;
    }
    Ok(acc / e.n as f64)
}

fn qtwf_gradient_residual(
    e: &Ensemble,
    obs: &Observations,
    z: &QVector,
    cfg: &SolverConfig,
) -> Result<(QVector, f64)> {
    check_shapes(e, obs, z)?;
    let norm_z = z.norm();
    if norm_z == 0.0 {
        return Err(Error::ZeroVector);
    }
    let n = e.n;

    // First pass: row responses, the mean absolute deviation K_t
    // (recomputed at every call since it depends on the iterate), and the
    // intensity residual.
    let mut s_all = Vec::with_capacity(n);
    let mut kt = 0.0;
    let mut resid_sq = 0.0;
    for k in 0..n {
        let s = row_dot(e.a.row(k), z);
        let dev = obs.y[k] - s.norm_sqr();
        kt += dev.abs();
        resid_sq += dev * dev;
        s_all.push(s);
    }
    kt /= n as f64;

    // Second pass: trimmed accumulation over E1 and E2.
    let mut g = QVector::zeros(e.d);
    for (k, s) in s_all.iter().enumerate() {
        let m2 = s.norm_sqr();
        if m2 < TINY_MAG {
            continue;
        }
        let m = m2.sqrt();
        let ratio = m / norm_z;
        if ratio < cfg.theta_z_lb || ratio > cfg.theta_z_ub {
            continue;
        }
        let in_e2 = if cfg.theta_h.is_infinite() {
            true
        } else {
            (obs.y[k] - m2).abs() <= cfg.theta_h * kt * ratio
        };
        if !in_e2 {
            continue;
        }
        let c = obs.y[k] / m2 - 1.0;
        if c == 0.0 {
            continue;
        }
        let t = s.scale(c);
        for (gj, a) in g.entries.iter_mut().zip(e.a.row(k)) {
            *gj += a.conj() * t;
        }
    }
    Ok((g.scale(0.5 / n as f64), resid_sq.sqrt()))
}

/// Trimmed ascent gradient
/// `(1/2n) sum_{k in E1 and E2} (y_k / |a_k^* z|^2 - 1) a_k a_k^* z`
/// with `E1 = {theta_z_lb <= |a_k^* z| / ||z|| <= theta_z_ub}` and
/// `E2 = {|y_k - |a_k^* z|^2| <= theta_h K_t |a_k^* z| / ||z||}` where
/// `K_t` is the mean absolute intensity deviation at `z`.
pub fn qtwf_gradient(
    e: &Ensemble,
    obs: &Observations,
    z: &QVector,
    cfg: &SolverConfig,
) -> Result<QVector> {
    Ok(qtwf_gradient_residual(e, obs, z, cfg)?.0)
}

/// Truncated initialization followed by `cfg.iters` ascent steps
/// `z <- z + eta * grad` with the bare step `eta = cfg.eta1`.
pub fn qtwf_run(
    e: &Ensemble,
    obs: &Observations,
    cfg: &SolverConfig,
    truth: Option<&QVector>,
) -> Result<RunTrace> {
    cfg.validate()?;
    let clock = Instant::now();
    let z0 = qtwf_init(e, obs, cfg.theta_y, cfg.power_iters)?;
    let guard = DIVERGENCE_FACTOR * z0.norm();
    let eta = cfg.eta1;

    let mut z = z0;
    let mut errors = Vec::with_capacity(cfg.iters + 1);
    let mut elapsed = Vec::with_capacity(cfg.iters + 1);
    for t in 0..cfg.iters {
        let (g, resid) = qtwf_gradient_residual(e, obs, &z, cfg)?;
        errors.push(match truth {
            Some(x) => dist(&z, x),
            None => resid,
        });
        elapsed.push(clock.elapsed().as_nanos() as u64);
        z = z.add(&g.scale(eta));
        let norm = z.norm();
        if norm > guard {
            return Err(Error::Diverged { iteration: t, norm });
        }
    }
    errors.push(match truth {
        Some(x) => dist(&z, x),
        None => super::intensity_residual(e, obs, &z)?,
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
