//! Pure-quaternion machinery: the right phase-factor estimate, the
//! purification map, sign alignment under a nonnegativity prior, and the
//! wrapped solver variants that purify every `tp` inner updates.

use std::time::Instant;

use super::{
    dist_p, intensity_residual, qtaf_gradient, qtwf_gradient, spectral_init, wf_gradient,
    qtaf_init, qtwf_init, RunTrace, SolverConfig, DIVERGENCE_FACTOR,
};
use crate::linalg::{sym4_min_eigvec, vrep, QVector};
use crate::measurement::{Ensemble, Observations};
use crate::quat::Quaternion;
use crate::{Error, Result};

/// Unit phase factor minimizing `||Re(z q)||` over unit quaternions.
///
/// Writing `w` for the unit eigenvector of the smallest eigenvalue of the
/// 4x4 Gram matrix `V(z)^t V(z)`, the minimizer is
/// `q = (w_0, -w_1, -w_2, -w_3)`, and `||Re(z q)||^2` equals that smallest
/// eigenvalue.
pub fn phase_factor_estimate(z: &QVector) -> Result<Quaternion> {
    if z.norm_sqr() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let g = vrep(z).gram();
    let w = sym4_min_eigvec(&g);
    Ok(Quaternion::new(w[0], -w[1], -w[2], -w[3]))
}

/// Pure-quaternion projection `Im(z q)` with `q` from
/// [`phase_factor_estimate`]; the result has exactly zero real parts.
pub fn purify(z: &QVector) -> Result<QVector> {
    let q = phase_factor_estimate(z)?;
    Ok(z.mul_right(q).imag())
}

/// Resolves the residual sign of a pure iterate. Under the nonnegativity
/// prior the representative with the larger total of imaginary components
/// wins; without the prior the input is returned unchanged.
pub fn sign_align(z: &QVector, nonneg_prior: bool) -> QVector {
    if !nonneg_prior {
        return z.clone();
    }
    let total: f64 = z.entries.iter().map(|q| q.x + q.y + q.z).sum();
    if total < 0.0 {
        return z.neg();
    }
    if total == 0.0 {
        // Exact tie: canonicalize on the first nonzero imaginary component.
        for q in &z.entries {
            for c in [q.x, q.y, q.z] {
                if c != 0.0 {
                    return if c < 0.0 { z.neg() } else { z.clone() };
                }
            }
        }
    }
    z.clone()
}

/// Outer purification loop shared by the pure variants: `cfg.iters` rounds
/// of `cfg.tp` inner updates, each round ending in [`purify`].
///
/// The trace records one error per round boundary (plus the start):
/// `dist_p` against the truth when provided, otherwise the intensity
/// residual.
pub fn pure_wrap<F>(
    z0: QVector,
    mut inner: F,
    e: &Ensemble,
    obs: &Observations,
    cfg: &SolverConfig,
    truth: Option<&QVector>,
) -> Result<RunTrace>
where
    F: FnMut(&QVector) -> Result<QVector>,
{
    cfg.validate()?;
    let clock = Instant::now();
    let guard = DIVERGENCE_FACTOR * z0.norm();
    let mut errors = Vec::with_capacity(cfg.iters + 1);
    let mut elapsed = Vec::with_capacity(cfg.iters + 1);
    let record = |z: &QVector, errors: &mut Vec<f64>, elapsed: &mut Vec<u64>| -> Result<()> {
        errors.push(match truth {
            Some(x) => dist_p(z, x),
            None => intensity_residual(e, obs, z)?,
        });
        elapsed.push(clock.elapsed().as_nanos() as u64);
        Ok(())
    };

    let mut z = z0;
    record(&z, &mut errors, &mut elapsed)?;
    for round in 0..cfg.iters {
        for j in 0..cfg.tp {
            z = inner(&z)?;
            let norm = z.norm();
            if norm > guard {
                return Err(Error::Diverged {
                    iteration: round * cfg.tp + j,
                    norm,
                });
            }
        }
        z = purify(&z)?;
        record(&z, &mut errors, &mut elapsed)?;
    }

    Ok(RunTrace {
        errors,
        elapsed_ns: elapsed,
        final_z: z,
        iterations_run: cfg.iters * cfg.tp,
        wall_time: clock.elapsed(),
    })
}

/// Pure QWF: spectral initialization, QWF inner updates, purification
/// every `cfg.tp` steps.
pub fn pqwf_run(
    e: &Ensemble,
    obs: &Observations,
    cfg: &SolverConfig,
    truth: Option<&QVector>,
) -> Result<RunTrace> {
    cfg.validate()?;
    let z0 = spectral_init(e, obs, cfg.power_iters)?;
    let n0 = z0.norm_sqr();
    let eta = if n0 > 0.0 { cfg.eta1 / n0 } else { 0.0 };
    pure_wrap(
        z0,
        |z| Ok(z.sub(&wf_gradient(e, obs, z)?.scale(eta))),
        e,
        obs,
        cfg,
        truth,
    )
}

/// Pure QTWF: truncated initialization, trimmed ascent inner updates,
/// purification every `cfg.tp` steps.
pub fn pqtwf_run(
    e: &Ensemble,
    obs: &Observations,
    cfg: &SolverConfig,
    truth: Option<&QVector>,
) -> Result<RunTrace> {
    cfg.validate()?;
    let z0 = qtwf_init(e, obs, cfg.theta_y, cfg.power_iters)?;
    let eta = cfg.eta1;
    pure_wrap(
        z0,
        |z| Ok(z.add(&qtwf_gradient(e, obs, z, cfg)?.scale(eta))),
        e,
        obs,
        cfg,
        truth,
    )
}

/// Pure QTAF: orthogonality-promoting initialization, trimmed descent
/// inner updates, purification every `cfg.tp` steps.
pub fn pqtaf_run(
    e: &Ensemble,
    obs: &Observations,
    cfg: &SolverConfig,
    truth: Option<&QVector>,
) -> Result<RunTrace> {
    cfg.validate()?;
    let z0 = qtaf_init(e, obs, cfg.rho, cfg.power_iters)?;
    let eta = cfg.eta1;
    pure_wrap(
        z0,
        |z| Ok(z.sub(&qtaf_gradient(e, obs, z, cfg.gamma)?.scale(eta))),
        e,
        obs,
        cfg,
        truth,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{vrep_singular_values, QVector};
    use crate::measurement::{
        observe, sample_ensemble, sample_signal, NormalSource, SignalKind, SignalSpec,
    };

    fn unit_quat(src: &mut NormalSource) -> Quaternion {
        Quaternion::new(src.sample(), src.sample(), src.sample(), src.sample()).sign()
    }

    #[test]
    fn phase_estimate_on_pure_vector() {
        let z = sample_signal(&SignalSpec {
            d: 10,
            kind: SignalKind::Pure,
            seed: 40,
        });
        let q = phase_factor_estimate(&z).unwrap();
        assert!((q.abs() - 1.0).abs() <= 1e-12);
        assert!((q - Quaternion::ONE).abs() <= 1e-9 || (q + Quaternion::ONE).abs() <= 1e-9);
        let re_norm: f64 = z
            .mul_right(q)
            .entries
            .iter()
            .map(|v| v.re() * v.re())
            .sum::<f64>()
            .sqrt();
        assert!(re_norm <= 1e-9);
    }

    #[test]
    fn phase_estimate_undoes_right_phase() {
        // For pure x with V-rank 3 and z = x q, purification recovers x up
        // to a sign.
        let x = sample_signal(&SignalSpec {
            d: 12,
            kind: SignalKind::Pure,
            seed: 41,
        });
        assert!(vrep_singular_values(&vrep(&x))[2] > 1e-3);
        let mut src = NormalSource::new(42, 1);
        for _ in 0..20 {
            let q = unit_quat(&mut src);
            let z = x.mul_right(q);
            let p = purify(&z).unwrap();
            let err = dist_p(&p, &x);
            assert!(err <= 1e-9, "purified distance {err}");
        }
    }

    #[test]
    fn phase_estimate_is_sampled_optimum() {
        let z = sample_signal(&SignalSpec {
            d: 9,
            kind: SignalKind::General,
            seed: 43,
        });
        let q = phase_factor_estimate(&z).unwrap();
        let best: f64 = z
            .mul_right(q)
            .entries
            .iter()
            .map(|v| v.re() * v.re())
            .sum::<f64>()
            .sqrt();
        // The attained value equals the smallest eigenvalue of the Gram
        // matrix.
        let g = vrep(&z).gram();
        let flat: Vec<f64> = g.iter().flatten().copied().collect();
        let eig = crate::linalg::sym_eigen(&flat, 4);
        assert!((best * best - eig.values[3]).abs() <= 1e-9);

        let mut src = NormalSource::new(44, 1);
        for _ in 0..1000 {
            let w = unit_quat(&mut src);
            let other: f64 = z
                .mul_right(w)
                .entries
                .iter()
                .map(|v| v.re() * v.re())
                .sum::<f64>()
                .sqrt();
            assert!(best <= other + 1e-12);
        }
    }

    #[test]
    fn phase_estimate_zero_vector_is_domain_error() {
        assert!(matches!(
            phase_factor_estimate(&QVector::zeros(4)),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn purify_properties() {
        let z = sample_signal(&SignalSpec {
            d: 8,
            kind: SignalKind::General,
            seed: 45,
        });
        let p = purify(&z).unwrap();
        assert!(p.is_pure());
        assert!(p.norm() <= z.norm() + 1e-15);
        // Purification shrinks the real mass to the optimum.
        let re_before: f64 = z.entries.iter().map(|v| v.re() * v.re()).sum::<f64>();
        let q = phase_factor_estimate(&z).unwrap();
        let re_after: f64 = z
            .mul_right(q)
            .entries
            .iter()
            .map(|v| v.re() * v.re())
            .sum::<f64>();
        assert!(re_after <= re_before + 1e-15);

        let pure = sample_signal(&SignalSpec {
            d: 8,
            kind: SignalKind::Pure,
            seed: 46,
        });
        let pp = purify(&pure).unwrap();
        assert!(dist_p(&pp, &pure) <= 1e-9);
    }

    #[test]
    fn sign_align_cases() {
        let pos = sample_signal(&SignalSpec {
            d: 6,
            kind: SignalKind::PureNonneg,
            seed: 47,
        });
        let neg = pos.neg();
        assert_eq!(sign_align(&pos, true), pos);
        assert_eq!(sign_align(&neg, true), pos);
        assert_eq!(sign_align(&neg, false), neg);
    }

    #[test]
    fn identity_inner_purification_is_idempotent() {
        let d = 7;
        let e = sample_ensemble(20, d, 48);
        let x = sample_signal(&SignalSpec {
            d,
            kind: SignalKind::Pure,
            seed: 48,
        });
        let obs = observe(&e, &x).unwrap();
        let mut cfg = SolverConfig::pqwf();
        cfg.tp = 1;
        cfg.iters = 4;
        let z0 = sample_signal(&SignalSpec {
            d,
            kind: SignalKind::General,
            seed: 49,
        });
        let trace = pure_wrap(z0.clone(), |z| Ok(z.clone()), &e, &obs, &cfg, Some(&x)).unwrap();
        // After the first round the iterate is pure, so later purifications
        // only flip signs at most.
        let p1 = purify(&z0).unwrap();
        assert!(dist_p(&trace.final_z, &p1) <= 1e-12);
    }

    #[test]
    fn pqwf_round_boundaries_counted() {
        let d = 6;
        let e = sample_ensemble(60, d, 50);
        let x = sample_signal(&SignalSpec {
            d,
            kind: SignalKind::Pure,
            seed: 50,
        });
        let obs = observe(&e, &x).unwrap();
        let mut cfg = SolverConfig::pqwf();
        cfg.iters = 10;
        cfg.tp = 3;
        let trace = pqwf_run(&e, &obs, &cfg, Some(&x)).unwrap();
        assert_eq!(trace.errors.len(), 11);
        assert_eq!(trace.iterations_run, 30);
        assert!(trace.final_z.is_pure());
    }
}
