//! Real-arithmetic baselines: WF, TWF, and TAF on real Gaussian
//! measurements, and the two multichannel models (monochromatic and
//! concatenation) used as comparison points for pure-quaternion recovery.
//!
//! The solver control flow mirrors the quaternion family with every
//! imaginary part pinned to zero, so a real problem embedded into
//! quaternions reproduces these iterates.

use std::time::Instant;

use crate::linalg::QVector;
use crate::measurement::{derive_seed, NormalSource, STREAM_REAL};
use crate::quat::Quaternion;
use crate::solvers::{sign_align, SolverConfig, DIVERGENCE_FACTOR};
use crate::{Error, Result};

const TINY_MAG: f64 = 1e-300;

/// Real phase-retrieval instance: `n x d` standard Gaussian rows with
/// intensities and amplitudes of the hidden signal.
#[derive(Debug, Clone)]
pub struct RealProblem {
    pub a: Vec<f64>,
    pub n: usize,
    pub d: usize,
    pub y: Vec<f64>,
    pub y_amp: Vec<f64>,
}

impl RealProblem {
    #[inline]
    fn row(&self, k: usize) -> &[f64] {
        &self.a[k * self.d..(k + 1) * self.d]
    }
}

/// Draws a standard Gaussian matrix and observes `x` through it.
pub fn sample_real_problem(n: usize, d: usize, x: &[f64], seed: u64) -> RealProblem {
    assert_eq!(x.len(), d);
    let mut src = NormalSource::new(seed, STREAM_REAL);
    let a: Vec<f64> = (0..n * d).map(|_| src.sample()).collect();
    let mut y = Vec::with_capacity(n);
    let mut y_amp = Vec::with_capacity(n);
    for k in 0..n {
        let s: f64 = a[k * d..(k + 1) * d].iter().zip(x).map(|(a, x)| a * x).sum();
        y.push(s * s);
        y_amp.push(s.abs());
    }
    RealProblem { a, n, d, y, y_amp }
}

/// Builds an observed problem from an explicit matrix (tests).
pub fn real_problem_from_parts(a: Vec<f64>, n: usize, d: usize, x: &[f64]) -> RealProblem {
    assert_eq!(a.len(), n * d);
    let mut y = Vec::with_capacity(n);
    let mut y_amp = Vec::with_capacity(n);
    for k in 0..n {
        let s: f64 = a[k * d..(k + 1) * d].iter().zip(x).map(|(a, x)| a * x).sum();
        y.push(s * s);
        y_amp.push(s.abs());
    }
    RealProblem { a, n, d, y, y_amp }
}

/// Real solver selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealAlgo {
    Wf,
    Twf,
    Taf,
}

/// Multichannel decomposition of a pure quaternion signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// Three independent problems of dimension `d`, one per channel.
    Monochromatic,
    /// One problem over the stacked `3d`-dimensional real vector.
    Concatenation,
}

/// Channel layout: mode plus the per-channel block dimension.
#[derive(Debug, Clone, Copy)]
pub struct ChannelLayout {
    pub mode: ChannelMode,
    pub d: usize,
}

/// Trace of a real solver run.
#[derive(Debug, Clone)]
pub struct RealRunTrace {
    pub errors: Vec<f64>,
    pub final_x: Vec<f64>,
    pub iterations_run: usize,
    pub wall_ms: f64,
}

impl RealRunTrace {
    pub fn final_error(&self) -> f64 {
        self.errors.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Sign-blind real reconstruction error `min(||z - x||, ||z + x||)`.
pub fn dist_p_real(z: &[f64], x: &[f64]) -> f64 {
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (a, b) in z.iter().zip(x) {
        plus += (a + b) * (a + b);
        minus += (a - b) * (a - b);
    }
    plus.min(minus).sqrt()
}

fn power_iteration_real(s: &[f64], d: usize, iters: usize) -> Vec<f64> {
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    for _ in 0..iters {
        let mut w = vec![0.0; d];
        for i in 0..d {
            let row = &s[i * d..(i + 1) * d];
            w[i] = row.iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let n: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n < TINY_MAG {
            return v;
        }
        for (o, w) in v.iter_mut().zip(&w) {
            *o = w / n;
        }
    }
    v
}

fn real_data_matrix<F>(p: &RealProblem, normalizer: f64, weight: F) -> Vec<f64>
where
    F: Fn(usize) -> Option<f64>,
{
    let d = p.d;
    let mut s = vec![0.0; d * d];
    for k in 0..p.n {
        let w = match weight(k) {
            Some(w) => w / normalizer,
            None => continue,
        };
        let row = p.row(k);
        for i in 0..d {
            let b = row[i] * w;
            for j in i..d {
                s[i * d + j] += b * row[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            s[i * d + j] = s[j * d + i];
        }
    }
    s
}

fn real_init(p: &RealProblem, algo: RealAlgo, cfg: &SolverConfig) -> Vec<f64> {
    let n = p.n as f64;
    match algo {
        RealAlgo::Wf => {
            let sum_y: f64 = p.y.iter().sum();
            if sum_y == 0.0 {
                return vec![0.0; p.d];
            }
            let lambda0 = (sum_y / n).sqrt();
            let s = real_data_matrix(p, n, |k| Some(p.y[k]));
            let v = power_iteration_real(&s, p.d, cfg.power_iters);
            v.iter().map(|x| x * lambda0).collect()
        }
        RealAlgo::Twf => {
            let sum_y: f64 = p.y.iter().sum();
            if sum_y == 0.0 {
                return vec![0.0; p.d];
            }
            let lambda0_sq = sum_y / n;
            let cut = cfg.theta_y * cfg.theta_y * lambda0_sq;
            if !p.y.iter().any(|&y| y.abs() <= cut) {
                return vec![0.0; p.d];
            }
            let s = real_data_matrix(p, n, |k| {
                if p.y[k].abs() <= cut {
                    Some(p.y[k])
                } else {
                    None
                }
            });
            let v = power_iteration_real(&s, p.d, cfg.power_iters);
            v.iter().map(|x| x * lambda0_sq.sqrt()).collect()
        }
        RealAlgo::Taf => {
            let lambda0 = (p.y_amp.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
            if lambda0 == 0.0 {
                return vec![0.0; p.d];
            }
            let row_norm_sq: Vec<f64> = (0..p.n)
                .map(|k| p.row(k).iter().map(|a| a * a).sum())
                .collect();
            let mut order: Vec<usize> = (0..p.n).collect();
            order.sort_by(|&i, &j| {
                let si = p.y_amp[i] / row_norm_sq[i].sqrt().max(TINY_MAG);
                let sj = p.y_amp[j] / row_norm_sq[j].sqrt().max(TINY_MAG);
                sj.partial_cmp(&si)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(i.cmp(&j))
            });
            let take = ((cfg.rho * n).ceil() as usize).min(p.n);
            let mut selected = vec![false; p.n];
            for &k in order.iter().take(take) {
                selected[k] = true;
            }
            let s = real_data_matrix(p, take as f64, |k| {
                if selected[k] {
                    Some(1.0 / row_norm_sq[k].max(TINY_MAG))
                } else {
                    None
                }
            });
            let v = power_iteration_real(&s, p.d, cfg.power_iters);
            v.iter().map(|x| x * lambda0).collect()
        }
    }
}

fn real_gradient(p: &RealProblem, algo: RealAlgo, cfg: &SolverConfig, z: &[f64]) -> Vec<f64> {
    let n = p.n as f64;
    let d = p.d;
    let norm_z: f64 = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut g = vec![0.0; d];
    match algo {
        RealAlgo::Wf => {
            for k in 0..p.n {
                let row = p.row(k);
                let s: f64 = row.iter().zip(z).map(|(a, b)| a * b).sum();
                let c = (s * s - p.y[k]) * s / n;
                for (gj, a) in g.iter_mut().zip(row) {
                    *gj += c * a;
                }
            }
        }
        RealAlgo::Twf => {
            let mut kt = 0.0;
            let mut resp = Vec::with_capacity(p.n);
            for k in 0..p.n {
                let s: f64 = p.row(k).iter().zip(z).map(|(a, b)| a * b).sum();
                kt += (p.y[k] - s * s).abs();
                resp.push(s);
            }
            kt /= n;
            for (k, &s) in resp.iter().enumerate() {
                let m = s.abs();
                if m < TINY_MAG {
                    continue;
                }
                let ratio = m / norm_z;
                if ratio < cfg.theta_z_lb || ratio > cfg.theta_z_ub {
                    continue;
                }
                if !cfg.theta_h.is_infinite()
                    && (p.y[k] - s * s).abs() > cfg.theta_h * kt * ratio
                {
                    continue;
                }
                let c = (p.y[k] / (s * s) - 1.0) * s / (2.0 * n);
                for (gj, a) in g.iter_mut().zip(p.row(k)) {
                    *gj += c * a;
                }
            }
        }
        RealAlgo::Taf => {
            for k in 0..p.n {
                let row = p.row(k);
                let s: f64 = row.iter().zip(z).map(|(a, b)| a * b).sum();
                let m = s.abs();
                if m < TINY_MAG || m < p.y_amp[k] / (1.0 + cfg.gamma) {
                    continue;
                }
                let c = (1.0 - p.y_amp[k] / m) * s / (2.0 * n);
                for (gj, a) in g.iter_mut().zip(row) {
                    *gj += c * a;
                }
            }
        }
    }
    g
}

/// Runs the selected real solver with the quaternion control flow
/// restricted to real scalars: adaptive step for WF, bare steps for
/// TWF (ascent) and TAF (descent), error metric `min(||z-x||, ||z+x||)`.
pub fn real_solver_run(
    p: &RealProblem,
    algo: RealAlgo,
    cfg: &SolverConfig,
    truth: Option<&[f64]>,
) -> Result<RealRunTrace> {
    cfg.validate()?;
    let clock = Instant::now();
    let z0 = real_init(p, algo, cfg);
    let norm0_sq: f64 = z0.iter().map(|x| x * x).sum();
    let eta = match algo {
        RealAlgo::Wf => {
            if norm0_sq > 0.0 {
                cfg.eta1 / norm0_sq
            } else {
                0.0
            }
        }
        _ => cfg.eta1,
    };
    let guard = DIVERGENCE_FACTOR * norm0_sq.sqrt();
    let sign = if algo == RealAlgo::Twf { 1.0 } else { -1.0 };

    let mut z = z0;
    let mut errors = Vec::with_capacity(cfg.iters + 1);
    let record = |z: &[f64], errors: &mut Vec<f64>| {
        errors.push(match truth {
            Some(x) => dist_p_real(z, x),
            None => {
                let mut acc = 0.0;
                for k in 0..p.n {
                    let s: f64 = p.row(k).iter().zip(z).map(|(a, b)| a * b).sum();
                    let c = s * s - p.y[k];
                    acc += c * c;
                }
                acc.sqrt()
            }
        });
    };
    for t in 0..cfg.iters {
        record(&z, &mut errors);
        let g = real_gradient(p, algo, cfg, &z);
        for (zi, gi) in z.iter_mut().zip(&g) {
            *zi += sign * eta * gi;
        }
        let norm: f64 = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > guard {
            return Err(Error::Diverged { iteration: t, norm });
        }
    }
    record(&z, &mut errors);

    Ok(RealRunTrace {
        errors,
        final_x: z,
        iterations_run: cfg.iters,
        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
    })
}

/// Outcome of a multichannel recovery.
#[derive(Debug, Clone)]
pub struct MultichannelOutcome {
    /// Assembled pure quaternion estimate.
    pub estimate: QVector,
    /// The multichannel error metric (root sum of squared per-channel
    /// `dist_p` for monochromatic, `dist_p` on the stacked vector for
    /// concatenation).
    pub error: f64,
    /// Scalar measurements consumed per subproblem.
    pub budget: Vec<usize>,
}

fn channel(x: &QVector, c: usize) -> Vec<f64> {
    x.entries
        .iter()
        .map(|q| match c {
            0 => q.x,
            1 => q.y,
            _ => q.z,
        })
        .collect()
}

/// Recovers a pure quaternion signal through one of the real multichannel
/// models with a total budget of `total_m` scalar measurements.
///
/// Monochromatic splits the budget as evenly as possible (remainder to the
/// first channels); concatenation spends it on one problem of dimension
/// `3d`. With `nonneg` set, residual channel signs are resolved by
/// majority positivity.
pub fn multichannel_recover(
    x_pure: &QVector,
    layout: ChannelLayout,
    algo: RealAlgo,
    total_m: usize,
    cfg: &SolverConfig,
    seed: u64,
    nonneg: bool,
) -> Result<MultichannelOutcome> {
    if !x_pure.is_pure() {
        return Err(Error::Config("multichannel input must be pure".into()));
    }
    let d = layout.d;
    if x_pure.len() != d {
        return Err(Error::ShapeMismatch {
            expected: (d, 1),
            got: (x_pure.len(), 1),
        });
    }
    match layout.mode {
        ChannelMode::Monochromatic => {
            let base = total_m / 3;
            let rem = total_m % 3;
            let mut err_sq = 0.0;
            let mut budget = Vec::with_capacity(3);
            let mut channels: Vec<Vec<f64>> = Vec::with_capacity(3);
            for c in 0..3 {
                let m_c = base + usize::from(c < rem);
                budget.push(m_c);
                let xc = channel(x_pure, c);
                let p = sample_real_problem(m_c, d, &xc, derive_seed(seed, &[c as u64]));
                let trace = real_solver_run(&p, algo, cfg, Some(&xc))?;
                err_sq += trace.final_error() * trace.final_error();
                channels.push(trace.final_x);
            }
            let mut entries = Vec::with_capacity(d);
            for i in 0..d {
                entries.push(Quaternion::new(
                    0.0,
                    channels[0][i],
                    channels[1][i],
                    channels[2][i],
                ));
            }
            // Per-channel sign resolution.
            let estimate = if nonneg {
                let mut fixed = channels;
                for ch in fixed.iter_mut() {
                    if ch.iter().sum::<f64>() < 0.0 {
                        for v in ch.iter_mut() {
                            *v = -*v;
                        }
                    }
                }
                let mut entries = Vec::with_capacity(d);
                for i in 0..d {
                    entries.push(Quaternion::new(0.0, fixed[0][i], fixed[1][i], fixed[2][i]));
                }
                QVector::new(entries)
            } else {
                QVector::new(entries)
            };
            Ok(MultichannelOutcome {
                estimate,
                error: err_sq.sqrt(),
                budget,
            })
        }
        ChannelMode::Concatenation => {
            let mut x_con = Vec::with_capacity(3 * d);
            for c in 0..3 {
                x_con.extend(channel(x_pure, c));
            }
            let p = sample_real_problem(total_m, 3 * d, &x_con, derive_seed(seed, &[9]));
            let trace = real_solver_run(&p, algo, cfg, Some(&x_con))?;
            let error = trace.final_error();
            let mut rec = trace.final_x;
            // One global sign covers all channels.
            let flip_to_truth = {
                let mut plus = 0.0;
                let mut minus = 0.0;
                for (a, b) in rec.iter().zip(&x_con) {
                    plus += (a + b) * (a + b);
                    minus += (a - b) * (a - b);
                }
                plus < minus
            };
            if flip_to_truth {
                for v in rec.iter_mut() {
                    *v = -*v;
                }
            }
            let mut entries = Vec::with_capacity(d);
            for i in 0..d {
                entries.push(Quaternion::new(0.0, rec[i], rec[d + i], rec[2 * d + i]));
            }
            let mut estimate = QVector::new(entries);
            if nonneg {
                estimate = sign_align(&estimate, true);
            }
            Ok(MultichannelOutcome {
                estimate,
                error,
                budget: vec![total_m],
            })
        }
    }
}
