//! Quick oracle and property checks runnable from the CLI: each check
//! exercises one algebraic identity or cross-route comparison and reports
//! a single pass/fail line.

use qpr::linalg::{qsvd_singular_values, real_rep, QMatrix, QVector};
use qpr::measurement::{observe, sample_ensemble, sample_signal, NormalSource, SignalKind, SignalSpec};
use qpr::quat::Quaternion;
use qpr::solvers::{
    dist, phase_factor_estimate, qtaf_gradient, qtwf_gradient, wf_gradient, SolverConfig,
};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn rand_quat(src: &mut NormalSource) -> Quaternion {
    Quaternion::new(src.sample(), src.sample(), src.sample(), src.sample())
}

fn rand_qmat(src: &mut NormalSource, rows: usize, cols: usize) -> QMatrix {
    QMatrix::from_entries((0..rows * cols).map(|_| rand_quat(src)).collect(), rows, cols)
}

fn finite_diff_check<L, G>(loss: L, grad: G, d: usize, seed: u64) -> f64
where
    L: Fn(&QVector) -> f64,
    G: Fn(&QVector) -> QVector,
{
    let z = sample_signal(&SignalSpec {
        d,
        kind: SignalKind::General,
        seed,
    })
    .scale(1.1);
    let g = grad(&z);
    let h = 1e-5;
    let mut fd = QVector::zeros(d);
    for i in 0..d {
        let mut comps = [0.0; 4];
        for (c, slot) in comps.iter_mut().enumerate() {
            let mut zp = z.clone();
            let mut zm = z.clone();
            let apply = |v: &mut Quaternion, s: f64| match c {
                0 => v.w += s,
                1 => v.x += s,
                2 => v.y += s,
                _ => v.z += s,
            };
            apply(&mut zp.entries[i], h);
            apply(&mut zm.entries[i], -h);
            *slot = (loss(&zp) - loss(&zm)) / (2.0 * h);
        }
        fd.entries[i] = Quaternion::new(comps[0], comps[1], comps[2], comps[3]).scale(0.25);
    }
    g.sub(&fd).norm() / fd.norm()
}

/// Runs every check; the caller renders and aggregates.
pub fn run_selftest() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut src = NormalSource::new(4242, 1);

    // Hamilton product against the 4x4 left-multiplication matrix oracle.
    {
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let a = rand_quat(&mut src);
            let b = rand_quat(&mut src);
            let p = a * b;
            let lm = [
                [a.w, -a.x, -a.y, -a.z],
                [a.x, a.w, -a.z, a.y],
                [a.y, a.z, a.w, -a.x],
                [a.z, -a.y, a.x, a.w],
            ];
            let bv = [b.w, b.x, b.y, b.z];
            let pv = [p.w, p.x, p.y, p.z];
            for i in 0..4 {
                let o: f64 = (0..4).map(|j| lm[i][j] * bv[j]).sum();
                worst = worst.max((o - pv[i]).abs());
            }
        }
        out.push(CheckResult {
            name: "hamilton product vs matrix oracle",
            pass: worst <= 1e-13,
            detail: format!("max |diff| = {worst:.3e}"),
        });
    }

    // Real representation is a ring homomorphism.
    {
        let a = rand_qmat(&mut src, 4, 4);
        let b = rand_qmat(&mut src, 4, 4);
        let ab = a.matmul(&b).unwrap();
        let gap = real_rep(&ab)
            .sub(&real_rep(&a).matmul(&real_rep(&b)))
            .fro_norm();
        out.push(CheckResult {
            name: "real representation homomorphism",
            pass: gap <= 1e-10,
            detail: format!("||T(AB) - T(A)T(B)||_F = {gap:.3e}"),
        });
    }

    // Frobenius norm transfer.
    {
        let a = rand_qmat(&mut src, 5, 3);
        let gap = (real_rep(&a).fro_norm() - 2.0 * a.fro_norm()).abs();
        out.push(CheckResult {
            name: "norm transfer ||T(A)||_F = 2||A||_F",
            pass: gap <= 1e-10 * a.fro_norm(),
            detail: format!("|diff| = {gap:.3e}"),
        });
    }

    // Singular values square-sum to the Frobenius norm.
    {
        let a = rand_qmat(&mut src, 4, 3);
        let sv = qsvd_singular_values(&a).unwrap();
        let gap = (sv.iter().map(|s| s * s).sum::<f64>() - a.fro_norm().powi(2)).abs();
        out.push(CheckResult {
            name: "qsvd frobenius identity",
            pass: gap <= 1e-9 * a.fro_norm().powi(2),
            detail: format!("|sum s^2 - ||A||_F^2| = {gap:.3e}"),
        });
    }

    // Gradient oracles against central finite differences.
    {
        let d = 5;
        let n = 25;
        let e = sample_ensemble(n, d, 91);
        let x = sample_signal(&SignalSpec {
            d,
            kind: SignalKind::General,
            seed: 91,
        });
        let obs = observe(&e, &x).unwrap();

        let rel = finite_diff_check(
            |z| qpr::solvers::intensity_loss(&e, &obs, z).unwrap(),
            |z| wf_gradient(&e, &obs, z).unwrap(),
            d,
            17,
        );
        out.push(CheckResult {
            name: "wf gradient finite differences",
            pass: rel <= 1e-6,
            detail: format!("relative error = {rel:.3e}"),
        });

        let mut open = SolverConfig::qtwf();
        open.theta_z_lb = 0.0;
        open.theta_z_ub = f64::INFINITY;
        open.theta_h = f64::INFINITY;
        let rel = finite_diff_check(
            |z| qpr::solvers::poisson_loglik(&e, &obs, z).unwrap(),
            |z| qtwf_gradient(&e, &obs, z, &open).unwrap(),
            d,
            18,
        );
        out.push(CheckResult {
            name: "qtwf gradient finite differences",
            pass: rel <= 1e-6,
            detail: format!("relative error = {rel:.3e}"),
        });

        let rel = finite_diff_check(
            |z| qpr::solvers::amplitude_loss(&e, &obs, z).unwrap(),
            |z| qtaf_gradient(&e, &obs, z, f64::INFINITY).unwrap(),
            d,
            19,
        );
        out.push(CheckResult {
            name: "qtaf gradient finite differences",
            pass: rel <= 1e-6,
            detail: format!("relative error = {rel:.3e}"),
        });
    }

    // dist is the minimum over sampled right phases.
    {
        let z = sample_signal(&SignalSpec {
            d: 6,
            kind: SignalKind::General,
            seed: 21,
        });
        let x = sample_signal(&SignalSpec {
            d: 6,
            kind: SignalKind::General,
            seed: 22,
        });
        let dd = dist(&z, &x);
        let mut ok = true;
        for _ in 0..2000 {
            let w = rand_quat(&mut src).sign();
            if z.sub(&x.mul_right(w)).norm() < dd - 1e-12 {
                ok = false;
            }
        }
        out.push(CheckResult {
            name: "dist minimizes over right phases",
            pass: ok,
            detail: format!("dist = {dd:.6}"),
        });
    }

    // Observations are right-phase invariant.
    {
        let d = 5;
        let e = sample_ensemble(30, d, 23);
        let x = sample_signal(&SignalSpec {
            d,
            kind: SignalKind::General,
            seed: 23,
        });
        let q = rand_quat(&mut src).sign();
        let y0 = observe(&e, &x).unwrap();
        let y1 = observe(&e, &x.mul_right(q)).unwrap();
        let worst = y0
            .y
            .iter()
            .zip(&y1.y)
            .map(|(a, b)| (a - b).abs() / a.max(1.0))
            .fold(0.0f64, f64::max);
        out.push(CheckResult {
            name: "observation right-phase invariance",
            pass: worst <= 1e-12,
            detail: format!("max relative change = {worst:.3e}"),
        });
    }

    // Purification reaches at most the plain real-part mass.
    {
        let z = sample_signal(&SignalSpec {
            d: 7,
            kind: SignalKind::General,
            seed: 24,
        });
        let q = phase_factor_estimate(&z).unwrap();
        let re_mass = |v: &QVector| -> f64 {
            v.entries.iter().map(|q| q.re() * q.re()).sum::<f64>().sqrt()
        };
        let before = re_mass(&z);
        let after = re_mass(&z.mul_right(q));
        out.push(CheckResult {
            name: "phase estimate shrinks real mass",
            pass: after <= before + 1e-15,
            detail: format!("{before:.6} -> {after:.6}"),
        });
    }

    out
}

pub fn render(results: &[CheckResult]) -> String {
    let mut s = String::new();
    for r in results {
        s.push_str(&format!(
            "[{}] {}: {}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        ));
    }
    s
}
