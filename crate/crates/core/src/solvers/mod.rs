//! The quaternion phase-retrieval solver family.
//!
//! All solvers share the same skeleton: a spectral initialization built
//! from a data-weighted covariance matrix, followed by gradient iterations
//! under the HR-calculus gradient convention. The pure-quaternion variants
//! wrap any inner update with a periodic phase-factor purification.

mod pure;
mod qtaf;
mod qtwf;
mod qwf;

pub use pure::{
    phase_factor_estimate, pqtaf_run, pqtwf_run, pqwf_run, pure_wrap, purify, sign_align,
};
pub use qtaf::{amplitude_loss, qtaf_gradient, qtaf_init, qtaf_run, qtaf_selection_size};
pub use qtwf::{poisson_loglik, qtwf_gradient, qtwf_init, qtwf_run, qtwf_selection_size};
pub use qwf::{intensity_loss, intensity_residual, qwf_run, spectral_init, wf_gradient};

use std::time::Duration;

use crate::linalg::{QMatrix, QVector};
use crate::measurement::{Ensemble, Observations};
use crate::quat::Quaternion;
use crate::{Error, Result};

/// Iterates whose norm grows past this multiple of the start norm abort.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Tuning knobs for the solver family.
///
/// `eta1` is the step-size numerator: QWF and PQWF use the adaptive step
/// `eta = eta1 / ||z0||^2`, while QTWF and QTAF take `eta = eta1` directly.
/// `iters` counts gradient updates for the plain solvers and outer
/// purification rounds (of `tp` inner updates each) for the wrapped ones.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub eta1: f64,
    pub iters: usize,
    pub tp: usize,
    pub theta_z_lb: f64,
    pub theta_z_ub: f64,
    pub theta_h: f64,
    pub theta_y: f64,
    pub gamma: f64,
    pub rho: f64,
    pub power_iters: usize,
    pub success_tol: f64,
}

impl SolverConfig {
    /// QWF defaults: `eta = 0.2 / ||z0||^2`, 1500 updates.
    pub fn qwf() -> Self {
        SolverConfig {
            eta1: 0.2,
            iters: 1500,
            tp: 5,
            theta_z_lb: 0.3,
            theta_z_ub: 4.5,
            theta_h: 5.0,
            theta_y: 3.0,
            gamma: 0.8,
            rho: 1.0 / 6.0,
            power_iters: 100,
            success_tol: 1e-5,
        }
    }

    /// PQWF defaults: smaller step, 300 rounds of 5 updates.
    pub fn pqwf() -> Self {
        SolverConfig {
            eta1: 0.15,
            iters: 300,
            ..SolverConfig::qwf()
        }
    }

    /// QTWF defaults: fixed step 0.8 with truncation (0.3, 4.5, 5, 3).
    pub fn qtwf() -> Self {
        SolverConfig {
            eta1: 0.8,
            ..SolverConfig::qwf()
        }
    }

    /// PQTWF defaults: QTWF step, 300 rounds of 5 updates.
    pub fn pqtwf() -> Self {
        SolverConfig {
            iters: 300,
            ..SolverConfig::qtwf()
        }
    }

    /// QTAF defaults: fixed step 1.2, `gamma = 0.8`, `rho = 1/6`.
    pub fn qtaf() -> Self {
        SolverConfig {
            eta1: 1.2,
            ..SolverConfig::qwf()
        }
    }

    /// PQTAF defaults: QTAF step, 300 rounds of 5 updates.
    pub fn pqtaf() -> Self {
        SolverConfig {
            iters: 300,
            ..SolverConfig::qtaf()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks: [(bool, &str); 9] = [
            (self.eta1 > 0.0 && self.eta1.is_finite(), "eta1 must be positive and finite"),
            (self.tp >= 1, "tp must be at least 1"),
            (self.theta_z_lb >= 0.0, "theta_z_lb must be nonnegative"),
            (self.theta_z_lb < self.theta_z_ub, "theta_z_lb must be below theta_z_ub"),
            (self.theta_h > 0.0, "theta_h must be positive"),
            (self.theta_y > 0.0, "theta_y must be positive"),
            (self.gamma > 0.0 && self.gamma < 1.0, "gamma must lie in (0, 1)"),
            (self.rho > 0.0 && self.rho < 1.0, "rho must lie in (0, 1)"),
            (self.power_iters >= 1 && self.success_tol > 0.0, "power_iters and success_tol must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Config(msg.to_string()));
            }
        }
        Ok(())
    }
}

/// Per-run record: one reconstruction error per recorded point (every
/// iteration for the plain solvers, every round boundary for the wrapped
/// ones), cumulative wall time per point, and the final iterate.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub errors: Vec<f64>,
    pub elapsed_ns: Vec<u64>,
    pub final_z: QVector,
    pub iterations_run: usize,
    pub wall_time: Duration,
}

impl RunTrace {
    pub fn final_error(&self) -> f64 {
        self.errors.last().copied().unwrap_or(f64::INFINITY)
    }

    /// CSV rows `iter,error,elapsed_ns`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,error,elapsed_ns\n");
        for (i, (e, ns)) in self.errors.iter().zip(&self.elapsed_ns).enumerate() {
            s.push_str(&format!("{i},{e},{ns}\n"));
        }
        s
    }
}

/// Reconstruction error modulo the right quaternion phase:
/// `min over unit w of ||z - x w||`, attained at `w = sign(x^* z)`.
pub fn dist(z: &QVector, x: &QVector) -> f64 {
    debug_assert_eq!(z.len(), x.len());
    let w = x.conj_dot(z).sign();
    let mut acc = 0.0;
    for (zi, xi) in z.entries.iter().zip(&x.entries) {
        acc += (*zi - *xi * w).norm_sqr();
    }
    acc.sqrt()
}

/// Reconstruction error modulo a sign: `min(||z + x||, ||z - x||)`.
pub fn dist_p(z: &QVector, x: &QVector) -> f64 {
    debug_assert_eq!(z.len(), x.len());
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (zi, xi) in z.entries.iter().zip(&x.entries) {
        plus += (*zi + *xi).norm_sqr();
        minus += (*zi - *xi).norm_sqr();
    }
    plus.min(minus).sqrt()
}

#[inline]
pub(crate) fn row_dot(row: &[Quaternion], z: &QVector) -> Quaternion {
    let mut acc = Quaternion::ZERO;
    for (a, x) in row.iter().zip(&z.entries) {
        acc += *a * *x;
    }
    acc
}

pub(crate) fn check_shapes(e: &Ensemble, obs: &Observations, z: &QVector) -> Result<()> {
    if obs.len() != e.n || z.len() != e.d {
        return Err(Error::ShapeMismatch {
            expected: (e.n, e.d),
            got: (obs.len(), z.len()),
        });
    }
    Ok(())
}

/// Assembles the Hermitian data matrix `sum_k w_k a_k a_k^* / normalizer`
/// over rows with `Some` weight. Row `k` of the ensemble stores `a_k^*`,
/// so entry `(i, j)` accumulates `w_k conj(A_ki) A_kj`.
pub(crate) fn weighted_data_matrix<F>(e: &Ensemble, normalizer: f64, weight: F) -> Result<QMatrix>
where
    F: Fn(usize) -> Option<f64>,
{
    let d = e.d;
    let mut upper = vec![Quaternion::ZERO; d * d];
    for k in 0..e.n {
        let w = match weight(k) {
            Some(w) => w,
            None => continue,
        };
        let row = e.a.row(k);
        for i in 0..d {
            let b = row[i].conj().scale(w / normalizer);
            for j in i..d {
                upper[i * d + j] += b * row[j];
            }
        }
    }
    // Mirror the strict upper triangle; the result is exactly Hermitian.
    for i in 0..d {
        for j in 0..i {
            upper[i * d + j] = upper[j * d + i].conj();
        }
    }
    QMatrix::hermitian_from(upper, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{sample_signal, NormalSource, SignalKind, SignalSpec};

    fn unit_quat(src: &mut NormalSource) -> Quaternion {
        Quaternion::new(src.sample(), src.sample(), src.sample(), src.sample()).sign()
    }

    fn signal(d: usize, seed: u64) -> QVector {
        sample_signal(&SignalSpec {
            d,
            kind: SignalKind::General,
            seed,
        })
    }

    #[test]
    fn dist_of_identical_and_phased() {
        let x = signal(10, 1);
        assert!(dist(&x, &x) <= 1e-15);
        let mut src = NormalSource::new(2, 1);
        for _ in 0..50 {
            let q = unit_quat(&mut src);
            assert!(dist(&x.mul_right(q), &x) <= 1e-12);
            // Invariance in both arguments.
            let z = signal(10, 3);
            let base = dist(&z, &x);
            assert!((dist(&z.mul_right(q), &x) - base).abs() <= 1e-12);
            assert!((dist(&z, &x.mul_right(q)) - base).abs() <= 1e-12);
        }
    }

    #[test]
    fn dist_orthogonal_case_and_brute_force() {
        // x^* z = 0 forces w = sign(0) = 1 and dist = sqrt(|z|^2 + |x|^2).
        let mut x = QVector::zeros(2);
        x.entries[0] = Quaternion::ONE;
        let mut z = QVector::zeros(2);
        z.entries[1] = Quaternion::new(0.0, 2.0, 0.0, 0.0);
        assert_eq!(x.conj_dot(&z), Quaternion::ZERO);
        let d = dist(&z, &x);
        assert!((d - 5.0f64.sqrt()).abs() <= 1e-12);

        // Brute-force minimization over sampled unit phases.
        let mut src = NormalSource::new(5, 1);
        let zs = signal(6, 7);
        let xs = signal(6, 8);
        let dd = dist(&zs, &xs);
        let mut best = f64::INFINITY;
        for _ in 0..20_000 {
            let w = unit_quat(&mut src);
            best = best.min(zs.sub(&xs.mul_right(w)).norm());
        }
        assert!(dd <= best + 1e-12, "closed form {dd} above sampled {best}");
        // 2e4 samples cover the unit 3-sphere to roughly 0.04 radians, and
        // the norm is quadratic around the optimum.
        assert!(best - dd <= 1e-2, "sampled minimum should approach dist");
    }

    #[test]
    fn dist_p_cases() {
        let x = signal(8, 11);
        assert!(dist_p(&x, &x) <= 1e-15);
        assert!(dist_p(&x.neg(), &x) <= 1e-15);
        for seed in 0..50 {
            let z = signal(8, 100 + seed);
            assert!(dist_p(&z, &x) + 1e-12 >= dist(&z, &x));
        }
    }

    #[test]
    fn tuned_defaults() {
        let qwf = SolverConfig::qwf();
        assert_eq!(qwf.eta1, 0.2);
        assert_eq!(qwf.iters, 1500);
        assert_eq!(qwf.power_iters, 100);
        assert_eq!(qwf.success_tol, 1e-5);

        let qtwf = SolverConfig::qtwf();
        assert_eq!(
            (qtwf.theta_z_lb, qtwf.theta_z_ub, qtwf.theta_h, qtwf.theta_y, qtwf.eta1),
            (0.3, 4.5, 5.0, 3.0, 0.8)
        );

        let qtaf = SolverConfig::qtaf();
        assert_eq!((qtaf.gamma, qtaf.rho, qtaf.eta1), (0.8, 1.0 / 6.0, 1.2));

        assert_eq!(SolverConfig::pqwf().eta1, 0.15);
        assert_eq!(SolverConfig::pqwf().tp, 5);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::qwf().validate().is_ok());
        let mut bad = SolverConfig::qwf();
        bad.eta1 = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = SolverConfig::qwf();
        bad.theta_z_lb = 5.0;
        assert!(bad.validate().is_err());
        let mut bad = SolverConfig::qwf();
        bad.tp = 0;
        assert!(bad.validate().is_err());
    }
}
