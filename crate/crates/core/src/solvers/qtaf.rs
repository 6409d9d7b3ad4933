//! Quaternion truncated amplitude flow: amplitude-loss descent with an
//! orthogonality-promoting initialization and a trimmed gradient.

use std::time::Instant;

use super::{
    check_shapes, dist, row_dot, weighted_data_matrix, RunTrace, SolverConfig, DIVERGENCE_FACTOR,
};
use crate::linalg::{herm_top_eig, QVector};
use crate::measurement::{Ensemble, Observations};
use crate::{Error, Result};

const TINY_MAG: f64 = 1e-300;

/// Orthogonality-promoting initialization: the data matrix averages
/// `a_k a_k^* / ||a_k||^2` over the `ceil(rho * n)` rows with the largest
/// `y'_k / ||a_k||`, ranking ties broken toward the lower index. The output
/// is scaled by `lambda0 = sqrt(mean y'^2)`.
pub fn qtaf_init(
    e: &Ensemble,
    obs: &Observations,
    rho: f64,
    power_iters: usize,
) -> Result<QVector> {
    if obs.len() != e.n {
        return Err(Error::ShapeMismatch {
            expected: (e.n, 1),
            got: (obs.len(), 1),
        });
    }
    let n = e.n;
    let lambda0 = (obs.y_amp.iter().map(|a| a * a).sum::<f64>() / n as f64).sqrt();
    if lambda0 == 0.0 {
        return Ok(QVector::zeros(e.d));
    }

    let row_norm_sq: Vec<f64> = (0..n)
        .map(|k| e.a.row(k).iter().map(|q| q.norm_sqr()).sum())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let si = obs.y_amp[i] / row_norm_sq[i].sqrt().max(TINY_MAG);
        let sj = obs.y_amp[j] / row_norm_sq[j].sqrt().max(TINY_MAG);
        sj.partial_cmp(&si)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let take = ((rho * n as f64).ceil() as usize).min(n);
    let mut selected = vec![false; n];
    for &k in order.iter().take(take) {
        selected[k] = true;
    }

    let s = weighted_data_matrix(e, take as f64, |k| {
        if selected[k] {
            Some(1.0 / row_norm_sq[k].max(TINY_MAG))
        } else {
            None
        }
    })?;
    let (_, v) = herm_top_eig(&s, power_iters)?;
    Ok(v.scale(lambda0))
}

/// Size of the initialization index set `ceil(rho * n)`.
pub fn qtaf_selection_size(n: usize, rho: f64) -> usize {
    ((rho * n as f64).ceil() as usize).min(n)
}

/// Amplitude loss `(1/n) sum (|a_k^* z| - y'_k)^2`.
pub fn amplitude_loss(e: &Ensemble, obs: &Observations, z: &QVector) -> Result<f64> {
    check_shapes(e, obs, z)?;
    let mut acc = 0.0;
    for k in 0..e.n {
        let c = row_dot(e.a.row(k), z).abs() - obs.y_amp[k];
        acc += c * c;
    }
    Ok(acc / e.n as f64)
}

fn qtaf_gradient_residual(
    e: &Ensemble,
    obs: &Observations,
    z: &QVector,
    gamma: f64,
) -> Result<(QVector, f64)> {
    check_shapes(e, obs, z)?;
    if z.norm_sqr() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let n = e.n;
    let mut g = QVector::zeros(e.d);
    let mut resid_sq = 0.0;
    for k in 0..n {
        let row = e.a.row(k);
        let s = row_dot(row, z);
        let m = s.abs();
        let dev = m * m - obs.y[k];
        resid_sq += dev * dev;
        if m < TINY_MAG {
            // Vanishing response: excluded unless y' = 0 too, in which case
            // the term is itself vanishing; either way contribute nothing.
            continue;
        }
        if m < obs.y_amp[k] / (1.0 + gamma) {
            continue;
        }
        let c = 1.0 - obs.y_amp[k] / m;
        if c == 0.0 {
            continue;
        }
        let t = s.scale(c);
        for (gj, a) in g.entries.iter_mut().zip(row) {
            *gj += a.conj() * t;
        }
    }
    Ok((g.scale(0.5 / n as f64), resid_sq.sqrt()))
}

/// Trimmed descent gradient
/// `(1/2n) sum_{k in I_z} (1 - y'_k / |a_k^* z|) a_k a_k^* z` over
/// `I_z = {k : |a_k^* z| >= y'_k / (1 + gamma)}`.
pub fn qtaf_gradient(
    e: &Ensemble,
    obs: &Observations,
    z: &QVector,
    gamma: f64,
) -> Result<QVector> {
    Ok(qtaf_gradient_residual(e, obs, z, gamma)?.0)
}

/// Orthogonality-promoting initialization followed by `cfg.iters` descent
/// steps `z <- z - eta * grad` with the bare step `eta = cfg.eta1`.
pub fn qtaf_run(
    e: &Ensemble,
    obs: &Observations,
    cfg: &SolverConfig,
    truth: Option<&QVector>,
) -> Result<RunTrace> {
    cfg.validate()?;
    let clock = Instant::now();
    let z0 = qtaf_init(e, obs, cfg.rho, cfg.power_iters)?;
    let guard = DIVERGENCE_FACTOR * z0.norm();
    let eta = cfg.eta1;

    let mut z = z0;
    let mut errors = Vec::with_capacity(cfg.iters + 1);
    let mut elapsed = Vec::with_capacity(cfg.iters + 1);
    for t in 0..cfg.iters {
        let (g, resid) = qtaf_gradient_residual(e, obs, &z, cfg.gamma)?;
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
