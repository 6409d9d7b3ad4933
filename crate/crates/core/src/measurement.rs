//! Quaternion Gaussian measurement ensembles, synthetic signals, and
//! phaseless observations.
//!
//! Every sampler is keyed by a `(seed, stream)` pair on a ChaCha8 generator,
//! so trials, ensembles, and signals draw from independent reproducible
//! streams and can fan out across threads without shared RNG state. Normal
//! deviates come from a Box-Muller transform of uniform draws; the values
//! are stable per platform but bit-exactness across platforms is not
//! promised.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{QMatrix, QVector};
use crate::quat::Quaternion;
use crate::{Error, Result};

/// Stream id used for measurement-matrix draws.
pub const STREAM_ENSEMBLE: u64 = 1;
/// Stream id used for signal draws.
pub const STREAM_SIGNAL: u64 = 2;
/// Stream id used for real baseline measurement matrices.
pub const STREAM_REAL: u64 = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministically folds context parts (trial index, ratio index, block
/// id, ...) into a base seed, giving each unit of work its own seed.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut s = splitmix64(base);
    for &p in parts {
        s = splitmix64(s ^ p.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    s
}

/// ChaCha8 generator for a given `(seed, stream)` key.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard-normal source: Box-Muller over uniform draws, caching the
/// second deviate of each pair.
pub struct NormalSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        NormalSource {
            rng: stream_rng(seed, stream),
            spare: None,
        }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        // u1 in (0, 1] keeps the log finite.
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2 = self.rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Measurement ensemble: an `n x d` quaternion matrix whose row `k` is the
/// adjoint of the measurement vector `a_k`. Each of the four components of
/// each entry is an independent `N(0, 1/4)` draw, so `E|entry|^2 = 1`.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub a: QMatrix,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
}

impl Ensemble {
    /// Wraps an existing matrix (used by embedding tests and baselines).
    pub fn from_matrix(a: QMatrix, seed: u64) -> Self {
        let (n, d) = (a.rows, a.cols);
        Ensemble { a, seed, n, d }
    }
}

/// Draws a fresh ensemble; deterministic under `(n, d, seed)`.
pub fn sample_ensemble(n: usize, d: usize, seed: u64) -> Ensemble {
    assert!(n >= 1 && d >= 1);
    let mut src = NormalSource::new(seed, STREAM_ENSEMBLE);
    let mut entries = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        entries.push(Quaternion::new(
            0.5 * src.sample(),
            0.5 * src.sample(),
            0.5 * src.sample(),
            0.5 * src.sample(),
        ));
    }
    Ensemble {
        a: QMatrix::from_entries(entries, n, d),
        seed,
        n,
        d,
    }
}

/// Kind of synthetic signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    /// Dense quaternion entries.
    General,
    /// Zero real part in every entry.
    Pure,
    /// Zero real part and nonnegative imaginary components, the shape of
    /// color-image pixel blocks.
    PureNonneg,
}

/// Specification of a unit-norm synthetic signal.
#[derive(Debug, Clone, Copy)]
pub struct SignalSpec {
    pub d: usize,
    pub kind: SignalKind,
    pub seed: u64,
}

/// Draws the signal and normalizes it to unit norm. Pure kinds have their
/// real components exactly zero.
pub fn sample_signal(spec: &SignalSpec) -> QVector {
    let mut src = NormalSource::new(spec.seed, STREAM_SIGNAL);
    loop {
        let entries: Vec<Quaternion> = (0..spec.d)
            .map(|_| match spec.kind {
                SignalKind::General => {
                    Quaternion::new(src.sample(), src.sample(), src.sample(), src.sample())
                }
                SignalKind::Pure => Quaternion::new(0.0, src.sample(), src.sample(), src.sample()),
                SignalKind::PureNonneg => Quaternion::new(
                    0.0,
                    src.sample().abs(),
                    src.sample().abs(),
                    src.sample().abs(),
                ),
            })
            .collect();
        let v = QVector::new(entries);
        let n = v.norm();
        if n > 0.0 {
            return v.scale(1.0 / n);
        }
    }
}

/// Phaseless data: intensities `y_k = |a_k^* x|^2` and the amplitudes
/// `y'_k = sqrt(y_k)` stored together so the amplitude-flow solvers see
/// values consistent with the intensity-flow ones.
#[derive(Debug, Clone)]
pub struct Observations {
    pub y: Vec<f64>,
    pub y_amp: Vec<f64>,
}

impl Observations {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Debug CSV: one row per measurement.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,y,y_amp\n");
        for (k, (y, a)) in self.y.iter().zip(&self.y_amp).enumerate() {
            s.push_str(&format!("{k},{y},{a}\n"));
        }
        s
    }
}

/// Computes the phaseless observations of `x` under the ensemble.
pub fn observe(e: &Ensemble, x: &QVector) -> Result<Observations> {
    if x.len() != e.d {
        return Err(Error::ShapeMismatch {
            expected: (e.d, 1),
            got: (x.len(), 1),
        });
    }
    let mut y = Vec::with_capacity(e.n);
    let mut y_amp = Vec::with_capacity(e.n);
    for k in 0..e.n {
        let row = e.a.row(k);
        let mut s = Quaternion::ZERO;
        for (a, xi) in row.iter().zip(&x.entries) {
            s += *a * *xi;
        }
        let yk = s.norm_sqr();
        y.push(yk);
        y_amp.push(yk.sqrt());
    }
    Ok(Observations { y, y_amp })
}
