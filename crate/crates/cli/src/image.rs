//! Color-image block recovery: each 16x16 RGB block becomes a unit-norm
//! pure quaternion signal (channels in the imaginary parts), is observed
//! through a fresh Gaussian ensemble, and is recovered blind by the chosen
//! solver. Images move through binary PPM (P6).

use qpr::baselines::{multichannel_recover, ChannelLayout, ChannelMode};
use qpr::linalg::{vrep, vrep_singular_values, QVector};
use qpr::measurement::{derive_seed, observe, sample_ensemble};
use qpr::quat::Quaternion;
use qpr::solvers::{pqtaf_run, pqtwf_run, pqwf_run, sign_align, SolverConfig};
use rayon::prelude::*;

use crate::{check_pairing, Algo, HarnessError, Model};

pub const BLOCK: usize = 16;

/// 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    /// RGB triples, row-major.
    pub data: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Self {
        Raster {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> (u8, u8, u8) {
        let i = (y * self.width + x) * 3;
        (self.data[i], self.data[i + 1], self.data[i + 2])
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: (u8, u8, u8)) {
        let i = (y * self.width + x) * 3;
        self.data[i] = rgb.0;
        self.data[i + 1] = rgb.1;
        self.data[i + 2] = rgb.2;
    }
}

/// Parses a binary PPM (P6, maxval 255).
pub fn parse_ppm(bytes: &[u8]) -> Result<Raster, HarnessError> {
    let bad = |m: &str| HarnessError::Config(format!("invalid ppm: {m}"));
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<Vec<u8>, HarnessError> {
        // Skip whitespace and '#' comments.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        Ok(bytes[start..pos].to_vec())
    };

    if token(bytes)? != b"P6" {
        return Err(bad("expected magic P6"));
    }
    let width: usize = String::from_utf8_lossy(&token(bytes)?)
        .parse()
        .map_err(|_| bad("bad width"))?;
    let height: usize = String::from_utf8_lossy(&token(bytes)?)
        .parse()
        .map_err(|_| bad("bad height"))?;
    let maxval: usize = String::from_utf8_lossy(&token(bytes)?)
        .parse()
        .map_err(|_| bad("bad maxval"))?;
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    // Exactly one whitespace byte separates header and data.
    pos += 1;
    let need = width * height * 3;
    if bytes.len() < pos + need {
        return Err(bad("truncated pixel data"));
    }
    Ok(Raster {
        width,
        height,
        data: bytes[pos..pos + need].to_vec(),
    })
}

pub fn ppm_bytes(r: &Raster) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", r.width, r.height).into_bytes();
    out.extend_from_slice(&r.data);
    out
}

pub fn read_ppm(path: &std::path::Path) -> Result<Raster, HarnessError> {
    parse_ppm(&std::fs::read(path)?)
}

pub fn write_ppm(path: &std::path::Path, r: &Raster) -> Result<(), HarnessError> {
    std::fs::write(path, ppm_bytes(r))?;
    Ok(())
}

/// Peak signal-to-noise ratio in dB over all channels; infinite when the
/// rasters agree exactly.
pub fn psnr(a: &Raster, b: &Raster) -> Result<f64, HarnessError> {
    if a.width != b.width || a.height != b.height {
        return Err(HarnessError::Config("psnr: shape mismatch".into()));
    }
    let mut se = 0.0f64;
    for (x, y) in a.data.iter().zip(&b.data) {
        let d = f64::from(*x) - f64::from(*y);
        se += d * d;
    }
    let mse = se / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// Block-recovery job description.
#[derive(Debug, Clone)]
pub struct ImageJob {
    pub algo: Algo,
    pub model: Model,
    /// Measurements per block = `round(oversampling * 256)`.
    pub oversampling: f64,
    pub cfg: SolverConfig,
    pub base_seed: u64,
    /// Skip the solver and feed the true block through the pipeline
    /// (fidelity check of scaling, alignment, and quantization).
    pub exact: bool,
}

/// Per-block report row.
#[derive(Debug, Clone, Copy)]
pub struct BlockReport {
    pub block_id: usize,
    /// `||rec - x|| / ||x||` on the unit-scaled block, before quantization.
    pub relative_error: f64,
    /// Third singular value of the block's component matrix; near-zero
    /// flags a rank-deficient (non-identifiable) block.
    pub sigma3: f64,
    /// Exact 8-bit recovery: relative error below 1e-9.
    pub success: bool,
}

#[derive(Debug, Clone)]
pub struct ImageOutcome {
    pub raster: Raster,
    pub blocks: Vec<BlockReport>,
    pub psnr: f64,
}

pub fn blocks_csv(blocks: &[BlockReport]) -> String {
    let mut s = String::from("block_id,relative_error,sigma3,success\n");
    for b in blocks {
        s.push_str(&format!(
            "{},{},{},{}\n",
            b.block_id, b.relative_error, b.sigma3, b.success
        ));
    }
    s
}

fn block_signal(img: &Raster, bx: usize, by: usize) -> QVector {
    let mut entries = Vec::with_capacity(BLOCK * BLOCK);
    for ly in 0..BLOCK {
        for lx in 0..BLOCK {
            let (r, g, b) = img.pixel(bx * BLOCK + lx, by * BLOCK + ly);
            entries.push(Quaternion::new(
                0.0,
                f64::from(r) / 255.0,
                f64::from(g) / 255.0,
                f64::from(b) / 255.0,
            ));
        }
    }
    QVector::new(entries)
}

fn solve_block(
    x_unit: &QVector,
    m: usize,
    job: &ImageJob,
    seed: u64,
) -> Result<QVector, HarnessError> {
    if job.exact {
        return Ok(x_unit.clone());
    }
    let d = x_unit.len();
    if job.algo.is_quaternion() {
        let e = sample_ensemble(m, d, seed);
        let obs = observe(&e, x_unit).map_err(HarnessError::from)?;
        // Blind run: the solver never sees the block it reconstructs.
        let trace = match job.algo {
            Algo::Pqwf => pqwf_run(&e, &obs, &job.cfg, None),
            Algo::Pqtwf => pqtwf_run(&e, &obs, &job.cfg, None),
            Algo::Pqtaf => pqtaf_run(&e, &obs, &job.cfg, None),
            other => {
                return Err(HarnessError::Config(format!(
                    "image recovery requires a pure-variant or real algorithm, got `{}`",
                    other.name()
                )))
            }
        };
        match trace {
            Ok(t) => Ok(sign_align(&t.final_z, true)),
            Err(qpr::Error::Diverged { .. }) => Ok(QVector::zeros(d)),
            Err(e) => Err(e.into()),
        }
    } else {
        let mode = match job.model {
            Model::Mono => ChannelMode::Monochromatic,
            Model::Concat => ChannelMode::Concatenation,
            Model::Quaternion => {
                return Err(HarnessError::Config(
                    "real algorithms require --model mono or concat".into(),
                ))
            }
        };
        let out = multichannel_recover(
            x_unit,
            ChannelLayout { mode, d },
            job.algo.real_algo().expect("checked real"),
            m,
            &job.cfg,
            seed,
            true,
        )
        .map_err(HarnessError::from)?;
        Ok(sign_align(&out.estimate, true))
    }
}

/// Recovers every 16x16 block of the image independently and reassembles
/// the result. Dimensions must be divisible by 16.
pub fn image_experiment(img: &Raster, job: &ImageJob) -> Result<ImageOutcome, HarnessError> {
    if !job.exact {
        check_pairing(job.algo, job.model)?;
        if job.algo.is_quaternion() && !job.algo.targets_pure_signal() {
            return Err(HarnessError::Config(
                "image recovery needs a pure-variant algorithm (pqwf, pqtwf, pqtaf)".into(),
            ));
        }
    }
    if !img.width.is_multiple_of(BLOCK) || !img.height.is_multiple_of(BLOCK) {
        return Err(HarnessError::Config(format!(
            "image dimensions {}x{} are not divisible by {BLOCK}",
            img.width, img.height
        )));
    }
    let bw = img.width / BLOCK;
    let bh = img.height / BLOCK;
    let m = (job.oversampling * (BLOCK * BLOCK) as f64).round() as usize;

    let results: Vec<Result<(BlockReport, Vec<Quaternion>), HarnessError>> = (0..bw * bh)
        .into_par_iter()
        .map(|block_id| {
            let bx = block_id % bw;
            let by = block_id / bw;
            let x = block_signal(img, bx, by);
            let scale = x.norm();
            let sigma3 = if scale > 0.0 {
                vrep_singular_values(&vrep(&x.scale(1.0 / scale)))[2]
            } else {
                0.0
            };
            let (rec_unit, rel) = if scale == 0.0 {
                // All-black block: nothing to measure, nothing to recover.
                (QVector::zeros(x.len()), 0.0)
            } else {
                let x_unit = x.scale(1.0 / scale);
                let rec = solve_block(&x_unit, m, job, derive_seed(job.base_seed, &[block_id as u64]))?;
                let rel = rec.sub(&x_unit).norm();
                (rec, rel)
            };
            let report = BlockReport {
                block_id,
                relative_error: rel,
                sigma3,
                success: rel < 1e-9,
            };
            let pixels = rec_unit.scale(scale).entries;
            Ok((report, pixels))
        })
        .collect();

    let mut out = Raster::new(img.width, img.height);
    let mut blocks = Vec::with_capacity(bw * bh);
    for item in results {
        let (report, pixels) = item?;
        let bx = report.block_id % bw;
        let by = report.block_id / bw;
        for ly in 0..BLOCK {
            for lx in 0..BLOCK {
                let q = pixels[ly * BLOCK + lx];
                let to_u8 = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
                out.set_pixel(bx * BLOCK + lx, by * BLOCK + ly, (to_u8(q.x), to_u8(q.y), to_u8(q.z)));
            }
        }
        blocks.push(report);
    }
    let psnr_db = psnr(img, &out)?;
    Ok(ImageOutcome {
        raster: out,
        blocks,
        psnr: psnr_db,
    })
}
