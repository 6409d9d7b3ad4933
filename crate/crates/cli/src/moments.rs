//! Monte-Carlo checks of the Gaussian ensemble moment identities: for a
//! unit vector `u`, `E|a^*u|^2 = 1`, `E|a^*u|^4 = 3/2`, `E|a^*u|^6 = 3`,
//! and the vector identity `E[a a^* u |a^* v|^2] = u + v v^* u / 2`.

use qpr::measurement::{derive_seed, sample_ensemble, sample_signal, SignalKind, SignalSpec};
use qpr::quat::Quaternion;

/// One moment estimate against its target.
#[derive(Debug, Clone)]
pub struct MomentRow {
    pub name: String,
    pub estimate: f64,
    pub target: f64,
    pub std_error: f64,
    /// Within three standard errors.
    pub pass: bool,
}

/// Runs the suite at the given sample count.
pub fn run_moments(samples: usize, d: usize, seed: u64) -> Vec<MomentRow> {
    let mut rows = Vec::new();
    let e = sample_ensemble(samples, d, derive_seed(seed, &[0]));
    let u = sample_signal(&SignalSpec {
        d,
        kind: SignalKind::General,
        seed: derive_seed(seed, &[1]),
    });
    let v = sample_signal(&SignalSpec {
        d,
        kind: SignalKind::General,
        seed: derive_seed(seed, &[2]),
    });

    // Scalar moments of |a^* u|^2.
    let mut m = [0.0f64; 3];
    let mut msq = [0.0f64; 3];
    for k in 0..samples {
        let mut s = Quaternion::ZERO;
        for (a, ui) in e.a.row(k).iter().zip(&u.entries) {
            s += *a * *ui;
        }
        let p2 = s.norm_sqr();
        for (l, (acc, accsq)) in m.iter_mut().zip(msq.iter_mut()).enumerate() {
            let val = p2.powi(l as i32 + 1);
            *acc += val;
            *accsq += val * val;
        }
    }
    let targets = [1.0, 1.5, 3.0];
    let names = ["E|a*u|^2", "E|a*u|^4", "E|a*u|^6"];
    for l in 0..3 {
        let mean = m[l] / samples as f64;
        let var = (msq[l] / samples as f64 - mean * mean).max(0.0);
        let se = (var / samples as f64).sqrt();
        rows.push(MomentRow {
            name: names[l].to_string(),
            estimate: mean,
            target: targets[l],
            std_error: se,
            pass: (mean - targets[l]).abs() <= 3.0 * se,
        });
    }

    // Vector identity, reported as the worst component deviation in
    // standard-error units.
    let mut sum = vec![[0.0f64; 4]; d];
    let mut sum_sq = vec![[0.0f64; 4]; d];
    for k in 0..samples {
        let row = e.a.row(k);
        let mut su = Quaternion::ZERO;
        let mut sv = Quaternion::ZERO;
        for ((a, ui), vi) in row.iter().zip(&u.entries).zip(&v.entries) {
            su += *a * *ui;
            sv += *a * *vi;
        }
        let w = sv.norm_sqr();
        for (i, a) in row.iter().enumerate() {
            let t = (a.conj() * su).scale(w);
            for (c, val) in [t.w, t.x, t.y, t.z].into_iter().enumerate() {
                sum[i][c] += val;
                sum_sq[i][c] += val * val;
            }
        }
    }
    let expect = u.add(&v.mul_right(v.conj_dot(&u)).scale(0.5));
    let mut worst = 0.0f64;
    let mut worst_est = 0.0;
    let mut worst_target = 0.0;
    let mut worst_se = 0.0;
    for i in 0..d {
        let target = [
            expect.entries[i].w,
            expect.entries[i].x,
            expect.entries[i].y,
            expect.entries[i].z,
        ];
        for c in 0..4 {
            let mean = sum[i][c] / samples as f64;
            let var = (sum_sq[i][c] / samples as f64 - mean * mean).max(0.0);
            let se = (var / samples as f64).sqrt().max(1e-300);
            let dev = (mean - target[c]).abs() / se;
            if dev > worst {
                worst = dev;
                worst_est = mean;
                worst_target = target[c];
                worst_se = se;
            }
        }
    }
    rows.push(MomentRow {
        name: "E[aa*u|a*v|^2] = u + vv*u/2 (worst component)".to_string(),
        estimate: worst_est,
        target: worst_target,
        std_error: worst_se,
        pass: worst <= 3.0,
    });

    rows
}

/// Plain-text table.
pub fn render(rows: &[MomentRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let dev = if r.std_error > 0.0 {
            (r.estimate - r.target).abs() / r.std_error
        } else {
            0.0
        };
        s.push_str(&format!(
            "[{}] {}: estimate {:.6}, target {:.6}, dev {:.2} se\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.estimate,
            r.target,
            dev
        ));
    }
    s
}
