//! Dense quaternion vectors and matrices, their real representations, and
//! the eigen-machinery the solvers need: a quaternion power iteration for
//! the top eigenpair of a Hermitian matrix, a cyclic-Jacobi symmetric
//! eigensolver for real matrices, and singular values through the real
//! representation.
//!
//! The real representation `T` maps a `d1 x d2` quaternion matrix to a
//! `4*d1 x 4*d2` real matrix with `T(AB) = T(A)T(B)`, `T(A+B) = T(A)+T(B)`
//! and `T(A^*) = T(A)^t`, which turns quaternion spectral questions into
//! real symmetric ones. The `V` map lays the four component columns of a
//! vector side by side as a `d x 4` real matrix.

use crate::quat::Quaternion;
use crate::{Error, Result};

/// Dense quaternion vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QVector {
    pub entries: Vec<Quaternion>,
}

impl QVector {
    pub fn new(entries: Vec<Quaternion>) -> Self {
        QVector { entries }
    }

    pub fn zeros(d: usize) -> Self {
        QVector {
            entries: vec![Quaternion::ZERO; d],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|q| q.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Inner product `self^* other = sum conj(self_i) * other_i`.
    pub fn conj_dot(&self, other: &QVector) -> Quaternion {
        debug_assert_eq!(self.len(), other.len());
        let mut acc = Quaternion::ZERO;
        for (a, b) in self.entries.iter().zip(&other.entries) {
            acc += a.conj() * *b;
        }
        acc
    }

    pub fn scale(&self, s: f64) -> QVector {
        QVector::new(self.entries.iter().map(|q| q.scale(s)).collect())
    }

    /// Entrywise right multiplication `v * q`.
    pub fn mul_right(&self, q: Quaternion) -> QVector {
        QVector::new(self.entries.iter().map(|&v| v * q).collect())
    }

    /// Entrywise left multiplication `q * v`.
    pub fn mul_left(&self, q: Quaternion) -> QVector {
        QVector::new(self.entries.iter().map(|&v| q * v).collect())
    }

    pub fn add(&self, other: &QVector) -> QVector {
        debug_assert_eq!(self.len(), other.len());
        QVector::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &QVector) -> QVector {
        debug_assert_eq!(self.len(), other.len());
        QVector::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| a - b)
                .collect(),
        )
    }

    pub fn neg(&self) -> QVector {
        QVector::new(self.entries.iter().map(|&a| -a).collect())
    }

    /// Vector part of every entry (real components zeroed exactly).
    pub fn imag(&self) -> QVector {
        QVector::new(self.entries.iter().map(|q| q.imag()).collect())
    }

    pub fn is_pure(&self) -> bool {
        self.entries.iter().all(|q| q.is_pure())
    }

    pub fn normalized(&self) -> QVector {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scale(1.0 / n)
        }
    }

    /// Outer product `self * other^*` as a `d x d` matrix.
    pub fn outer(&self, other: &QVector) -> QMatrix {
        let d1 = self.len();
        let d2 = other.len();
        let mut m = QMatrix::zeros(d1, d2);
        for i in 0..d1 {
            for j in 0..d2 {
                m.entries[i * d2 + j] = self.entries[i] * other.entries[j].conj();
            }
        }
        m
    }
}

/// Dense row-major quaternion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    pub entries: Vec<Quaternion>,
    pub rows: usize,
    pub cols: usize,
    hermitian: bool,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix {
            entries: vec![Quaternion::ZERO; rows * cols],
            rows,
            cols,
            hermitian: false,
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = QMatrix::zeros(d, d);
        for i in 0..d {
            m.entries[i * d + i] = Quaternion::ONE;
        }
        m.hermitian = true;
        m
    }

    pub fn from_entries(entries: Vec<Quaternion>, rows: usize, cols: usize) -> Self {
        assert_eq!(entries.len(), rows * cols);
        QMatrix {
            entries,
            rows,
            cols,
            hermitian: false,
        }
    }

    /// Builds a Hermitian matrix, silently symmetrizing rounding-level
    /// asymmetry. Relative asymmetry above `1e-10` is an error.
    pub fn hermitian_from(entries: Vec<Quaternion>, d: usize) -> Result<Self> {
        let mut m = QMatrix::from_entries(entries, d, d);
        let fro = m.fro_norm();
        let mut asym_sq = 0.0;
        for i in 0..d {
            for j in 0..d {
                let diff = m.entries[i * d + j] - m.entries[j * d + i].conj();
                asym_sq += diff.norm_sqr();
            }
        }
        let asym = asym_sq.sqrt();
        if fro > 0.0 && asym > 1e-10 * fro {
            return Err(Error::NotHermitian {
                asymmetry: asym / fro,
            });
        }
        // (A + A^*) / 2
        for i in 0..d {
            for j in i..d {
                let avg = (m.entries[i * d + j] + m.entries[j * d + i].conj()).scale(0.5);
                m.entries[i * d + j] = avg;
                m.entries[j * d + i] = avg.conj();
            }
        }
        m.hermitian = true;
        Ok(m)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Quaternion {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, q: Quaternion) {
        self.entries[i * self.cols + j] = q;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Quaternion] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn fro_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|q| q.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> QMatrix {
        let mut m = QMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.entries[j * self.rows + i] = self.at(i, j).conj();
            }
        }
        m.hermitian = self.hermitian;
        m
    }

    pub fn add(&self, other: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = QMatrix::zeros(self.rows, self.cols);
        for (o, (a, b)) in m
            .entries
            .iter_mut()
            .zip(self.entries.iter().zip(&other.entries))
        {
            *o = *a + *b;
        }
        m
    }

    /// Matrix-vector product; entry `i` is `sum_j A_ij * v_j` with the
    /// quaternion factors kept in that order.
    pub fn matvec(&self, v: &QVector) -> Result<QVector> {
        if v.len() != self.cols {
            return Err(Error::ShapeMismatch {
                expected: (self.cols, 1),
                got: (v.len(), 1),
            });
        }
        let mut out = QVector::zeros(self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = Quaternion::ZERO;
            for (a, x) in row.iter().zip(&v.entries) {
                acc += *a * *x;
            }
            out.entries[i] = acc;
        }
        Ok(out)
    }

    /// Matrix product (used by tests and small assemblies, not hot paths).
    pub fn matmul(&self, other: &QMatrix) -> Result<QMatrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                expected: (self.cols, self.cols),
                got: (other.rows, other.cols),
            });
        }
        let mut m = QMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.at(i, k);
                for j in 0..other.cols {
                    let t = aik * other.at(k, j);
                    m.entries[i * other.cols + j] += t;
                }
            }
        }
        Ok(m)
    }
}

/// Real representation of a quaternion matrix: a `4*d1 x 4*d2` real matrix
/// in the block layout
///
/// ```text
///   [  Re   Pj   Pi   Pk ]
///   [ -Pj   Re   Pk  -Pi ]
///   [ -Pi  -Pk   Re   Pj ]
///   [ -Pk   Pi  -Pj   Re ]
/// ```
///
/// where `Re`, `Pi`, `Pj`, `Pk` are the componentwise real and imaginary
/// parts of the source matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealRep {
    pub data: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

// Block pattern: (component index, sign) per block position, components
// indexed 0=w, 1=x(i), 2=y(j), 3=z(k).
const T_PATTERN: [[(usize, f64); 4]; 4] = [
    [(0, 1.0), (2, 1.0), (1, 1.0), (3, 1.0)],
    [(2, -1.0), (0, 1.0), (3, 1.0), (1, -1.0)],
    [(1, -1.0), (3, -1.0), (0, 1.0), (2, 1.0)],
    [(3, -1.0), (1, 1.0), (2, -1.0), (0, 1.0)],
];

impl RealRep {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealRep {
            data: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> RealRep {
        let mut t = RealRep::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.at(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &RealRep) -> RealRep {
        assert_eq!(self.cols, other.rows);
        let mut m = RealRep::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    m.data[i * other.cols + j] += a * other.at(k, j);
                }
            }
        }
        m
    }

    pub fn sub(&self, other: &RealRep) -> RealRep {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RealRep {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// CSV dump for debugging, one matrix row per line.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format!("{}", self.at(i, j))).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Builds the real representation `T(A)`.
pub fn real_rep(a: &QMatrix) -> RealRep {
    let (d1, d2) = (a.rows, a.cols);
    let mut t = RealRep::zeros(4 * d1, 4 * d2);
    for (bi, row_pattern) in T_PATTERN.iter().enumerate() {
        for (bj, &(comp, sign)) in row_pattern.iter().enumerate() {
            for i in 0..d1 {
                for j in 0..d2 {
                    let q = a.at(i, j);
                    let v = match comp {
                        0 => q.w,
                        1 => q.x,
                        2 => q.y,
                        _ => q.z,
                    };
                    t.set(bi * d1 + i, bj * d2 + j, sign * v);
                }
            }
        }
    }
    t
}

/// Real representation of a vector, viewed as a `d x 1` matrix.
pub fn real_rep_vec(v: &QVector) -> RealRep {
    let m = QMatrix::from_entries(v.entries.clone(), v.len(), 1);
    real_rep(&m)
}

/// Real counterpart of a quaternion vector: the `d x 4` matrix whose
/// columns are the `Re`, `Pi`, `Pj`, `Pk` component columns.
#[derive(Debug, Clone, PartialEq)]
pub struct VRep {
    pub data: Vec<f64>,
    pub rows: usize,
}

impl VRep {
    pub const COLS: usize = 4;

    #[inline]
    pub fn at(&self, i: usize, c: usize) -> f64 {
        self.data[i * 4 + c]
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// The 4x4 Gram matrix `V^t V`.
    pub fn gram(&self) -> [[f64; 4]; 4] {
        let mut g = [[0.0; 4]; 4];
        for i in 0..self.rows {
            let r = &self.data[i * 4..i * 4 + 4];
            for a in 0..4 {
                for b in 0..4 {
                    g[a][b] += r[a] * r[b];
                }
            }
        }
        g
    }

    /// Reconstructs the source vector exactly.
    pub fn to_qvector(&self) -> QVector {
        QVector::new(
            (0..self.rows)
                .map(|i| Quaternion::new(self.at(i, 0), self.at(i, 1), self.at(i, 2), self.at(i, 3)))
                .collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,pi,pj,pk\n");
        for i in 0..self.rows {
            s.push_str(&format!(
                "{},{},{},{}\n",
                self.at(i, 0),
                self.at(i, 1),
                self.at(i, 2),
                self.at(i, 3)
            ));
        }
        s
    }
}

/// Builds the `V` map of a vector.
pub fn vrep(v: &QVector) -> VRep {
    let mut data = Vec::with_capacity(v.len() * 4);
    for q in &v.entries {
        data.extend_from_slice(&[q.w, q.x, q.y, q.z]);
    }
    VRep { data, rows: v.len() }
}

/// Eigendecomposition of a real symmetric matrix by cyclic Jacobi sweeps.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Row-major `n x n`; column `k` is the unit eigenvector of `values[k]`.
    pub vectors: Vec<f64>,
}

/// Cyclic Jacobi on a row-major symmetric `n x n` matrix. Rotations are
/// applied until the off-diagonal Frobenius mass drops below
/// `1e-14 * max(1, ||M||_F)`, capped at 60 sweeps.
pub fn sym_eigen(mat: &[f64], n: usize) -> SymEigen {
    assert_eq!(mat.len(), n * n);
    let mut a = mat.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let fro: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-14 * fro.max(1.0);

    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                let app = a[p * n + p];
                let aqq = a[q * n + q];
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[r * n + p];
                        let arq = a[r * n + q];
                        a[r * n + p] = c * arp - s * arq;
                        a[r * n + q] = s * arp + c * arq;
                        a[p * n + r] = a[r * n + p];
                        a[q * n + r] = a[r * n + q];
                    }
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }

    // Sort descending by eigenvalue, reordering eigenvector columns.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        a[j * n + j]
            .partial_cmp(&a[i * n + i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = idx.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_col, &old_col) in idx.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + new_col] = v[r * n + old_col];
        }
    }
    SymEigen { values, vectors }
}

/// Unit eigenvector of the smallest eigenvalue of a symmetric PSD 4x4
/// matrix, by cyclic Jacobi. Deterministic: ties within `1e-12` resolve to
/// the lowest diagonal index, and the sign is fixed so the first nonzero
/// component is positive.
pub fn sym4_min_eigvec(m: &[[f64; 4]; 4]) -> [f64; 4] {
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    let eig = sym_eigen(&flat, 4);
    // Values are sorted descending with a stable sort, so within a tied
    // group the earliest sorted index carries the lowest diagonal index.
    let min_val = eig.values[3];
    let mut pick = 3;
    while pick > 0 && (eig.values[pick - 1] - min_val).abs() <= 1e-12 {
        pick -= 1;
    }
    let mut vec4 = [0.0; 4];
    for r in 0..4 {
        vec4[r] = eig.vectors[r * 4 + pick];
    }
    // Unit length, sign fixed on the first nonzero component.
    let n: f64 = vec4.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in &mut vec4 {
            *x /= n;
        }
    }
    if let Some(first) = vec4.iter().find(|x| **x != 0.0) {
        if *first < 0.0 {
            for x in &mut vec4 {
                *x = -*x;
            }
        }
    }
    vec4
}

/// Largest standard eigenvalue and its unit eigenvector for a Hermitian
/// matrix, by power iteration in quaternion arithmetic.
///
/// The start vector is the normalized all-ones vector; if the iteration
/// lands in the kernel it is perturbed by `1e-8 * e_1` and restarted once.
/// There is no residual-based early stop: exactly `iters` multiplications
/// are applied. The zero matrix returns `(0, start)`.
pub fn herm_top_eig(s: &QMatrix, iters: usize) -> Result<(f64, QVector)> {
    assert_eq!(s.rows, s.cols, "herm_top_eig requires a square matrix");
    assert!(iters >= 1);
    let d = s.rows;
    let start = QVector::new(vec![Quaternion::ONE; d]).scale(1.0 / (d as f64).sqrt());

    let mut v = start.clone();
    let mut restarted = false;
    let mut i = 0;
    while i < iters {
        let w = s.matvec(&v)?;
        let nrm = w.norm();
        if nrm < f64::MIN_POSITIVE {
            if s.fro_norm() == 0.0 {
                return Ok((0.0, start));
            }
            if restarted {
                // Kernel vector on a nonzero matrix even after perturbation.
                return Ok((0.0, v));
            }
            let mut p = start.clone();
            p.entries[0] += Quaternion::from_real(1e-8);
            v = p.normalized();
            restarted = true;
            i = 0;
            continue;
        }
        v = w.scale(1.0 / nrm);
        i += 1;
    }
    let sv = s.matvec(&v)?;
    let lambda = v.conj_dot(&sv).re();
    Ok((lambda, v))
}

/// Singular values of a quaternion matrix, nonincreasing.
///
/// Computed from the spectrum of `T(A)^t T(A)`, where every singular value
/// of `A` appears with multiplicity four; one representative (the quadruple
/// mean) is returned per group. A quadruple whose spread exceeds
/// `1e-6 * sigma_max` signals numerical degeneracy.
pub fn qsvd_singular_values(a: &QMatrix) -> Result<Vec<f64>> {
    let m = a.rows.min(a.cols);
    let t = real_rep(a);
    let tt = t.transpose();
    let gram = tt.matmul(&t);
    let eig = sym_eigen(&gram.data, gram.rows);
    let mut svals: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    svals.truncate(4 * m);
    let sigma_max = svals.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return Ok(vec![0.0; m]);
    }
    let tol = 1e-6 * sigma_max;
    let mut out = Vec::with_capacity(m);
    for g in 0..m {
        let group = &svals[4 * g..4 * g + 4];
        let spread = group[0] - group[3];
        if spread > tol {
            return Err(Error::DegenerateSpectrum { spread, tol });
        }
        out.push(group.iter().sum::<f64>() / 4.0);
    }
    Ok(out)
}

/// Singular values of the `d x 4` `V` map, descending (at most four).
pub fn vrep_singular_values(v: &VRep) -> [f64; 4] {
    let g = v.gram();
    let flat: Vec<f64> = g.iter().flatten().copied().collect();
    let eig = sym_eigen(&flat, 4);
    let mut out = [0.0; 4];
    for (o, l) in out.iter_mut().zip(&eig.values) {
        *o = l.max(0.0).sqrt();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::dist;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn rand_quat(r: &mut ChaCha8Rng) -> Quaternion {
        Quaternion::new(
            r.random::<f64>() * 2.0 - 1.0,
            r.random::<f64>() * 2.0 - 1.0,
            r.random::<f64>() * 2.0 - 1.0,
            r.random::<f64>() * 2.0 - 1.0,
        )
    }

    fn rand_qvec(r: &mut ChaCha8Rng, d: usize) -> QVector {
        QVector::new((0..d).map(|_| rand_quat(r)).collect())
    }

    fn rand_qmat(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> QMatrix {
        QMatrix::from_entries((0..rows * cols).map(|_| rand_quat(r)).collect(), rows, cols)
    }

    /// Random Hermitian PSD matrix with a dominant top eigenvalue, the shape
    /// the spectral initializers produce. The bounded gap keeps 100 power
    /// iterations well below the comparison tolerances.
    fn rand_psd_gapped(r: &mut ChaCha8Rng, d: usize) -> QMatrix {
        let u = rand_qvec(r, d).normalized();
        let b = rand_qmat(r, d, d);
        let bb = b.matmul(&b.adjoint()).unwrap();
        let scale = 0.3 / bb.fro_norm().max(1e-12);
        let spike = u.outer(&u);
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                entries.push(spike.at(i, j).scale(3.0) + bb.at(i, j).scale(scale));
            }
        }
        QMatrix::hermitian_from(entries, d).unwrap()
    }

    #[test]
    fn matvec_identity_and_units() {
        let mut r = rng(11);
        let v = rand_qvec(&mut r, 6);
        let id = QMatrix::identity(6);
        assert_eq!(id.matvec(&v).unwrap(), v);

        let a = QMatrix::from_entries(vec![Quaternion::I], 1, 1);
        let v = QVector::new(vec![Quaternion::J]);
        assert_eq!(a.matvec(&v).unwrap().entries[0], Quaternion::K);
    }

    #[test]
    fn matvec_shape_mismatch() {
        let a = QMatrix::zeros(2, 3);
        let v = QVector::zeros(2);
        assert!(matches!(a.matvec(&v), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn matvec_agrees_with_real_representation() {
        let mut r = rng(12);
        for _ in 0..20 {
            let a = rand_qmat(&mut r, 4, 3);
            let v = rand_qvec(&mut r, 3);
            let av = a.matvec(&v).unwrap();
            let lhs = real_rep_vec(&av);
            let rhs = real_rep(&a).matmul(&real_rep_vec(&v));
            assert!(lhs.sub(&rhs).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn real_rep_of_scalar_one_is_identity() {
        let a = QMatrix::from_entries(vec![Quaternion::ONE], 1, 1);
        let t = real_rep(&a);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(t.at(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn real_rep_of_i_matches_block_layout() {
        let a = QMatrix::from_entries(vec![Quaternion::I], 1, 1);
        let t = real_rep(&a);
        let expect = [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
            [-1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(t.at(i, j), expect[i][j]);
            }
        }
    }

    #[test]
    fn real_rep_homomorphism() {
        let mut r = rng(13);
        for _ in 0..30 {
            let a = rand_qmat(&mut r, 4, 4);
            let b = rand_qmat(&mut r, 4, 4);
            let ab = a.matmul(&b).unwrap();
            let d = real_rep(&ab).sub(&real_rep(&a).matmul(&real_rep(&b)));
            assert!(d.fro_norm() <= 1e-10);

            let sum = a.add(&b);
            let mut ds = real_rep(&sum);
            let ta = real_rep(&a);
            let tb = real_rep(&b);
            for (i, x) in ds.data.iter_mut().enumerate() {
                *x -= ta.data[i] + tb.data[i];
            }
            assert_eq!(ds.max_abs(), 0.0);

            let d_adj = real_rep(&a.adjoint()).sub(&real_rep(&a).transpose());
            assert!(d_adj.max_abs() <= 1e-12);
        }
    }

    #[test]
    fn norm_transfer() {
        let mut r = rng(14);
        for _ in 0..30 {
            let a = rand_qmat(&mut r, 3, 5);
            let t = real_rep(&a);
            assert!((t.fro_norm() - 2.0 * a.fro_norm()).abs() <= 1e-12 * a.fro_norm());
        }
    }

    #[test]
    fn vrep_read_off_and_norms() {
        let v = QVector::new(vec![Quaternion::new(1.0, 2.0, 0.0, 0.0)]);
        let vr = vrep(&v);
        assert_eq!(
            [vr.at(0, 0), vr.at(0, 1), vr.at(0, 2), vr.at(0, 3)],
            [1.0, 2.0, 0.0, 0.0]
        );
        let mut r = rng(15);
        let v = rand_qvec(&mut r, 9);
        let vr = vrep(&v);
        assert!((vr.fro_norm() - v.norm()).abs() <= 1e-12);
        assert_eq!(vr.to_qvector(), v);

        let pure = v.imag();
        let vp = vrep(&pure);
        for i in 0..vp.rows {
            assert_eq!(vp.at(i, 0), 0.0);
        }
    }

    #[test]
    fn top_eig_rank_one() {
        let mut r = rng(16);
        let x = rand_qvec(&mut r, 8).normalized();
        let s = x.outer(&x);
        let s = QMatrix::hermitian_from(s.entries, 8).unwrap();
        let (lambda, v) = herm_top_eig(&s, 100).unwrap();
        assert!((lambda - 1.0).abs() <= 1e-10);
        assert!(dist(&v, &x) <= 1e-8);
    }

    #[test]
    fn top_eig_identity_and_zero() {
        let id = QMatrix::identity(5);
        let (lambda, v) = herm_top_eig(&id, 50).unwrap();
        assert!((lambda - 1.0).abs() <= 1e-12);
        assert!((v.norm() - 1.0).abs() <= 1e-12);

        let z = QMatrix::hermitian_from(vec![Quaternion::ZERO; 9], 3).unwrap();
        let (lambda, v) = herm_top_eig(&z, 10).unwrap();
        assert_eq!(lambda, 0.0);
        assert!((v.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn top_eig_matches_real_representation_oracle() {
        let mut r = rng(17);
        for _ in 0..10 {
            let s = rand_psd_gapped(&mut r, 5);
            let (lambda, _) = herm_top_eig(&s, 100).unwrap();
            let t = real_rep(&s);
            let eig = sym_eigen(&t.data, t.rows);
            assert!(
                (lambda - eig.values[0]).abs() <= 1e-8 * eig.values[0].max(1.0),
                "power {lambda} vs jacobi {}",
                eig.values[0]
            );
        }
    }

    #[test]
    fn rayleigh_quotient_monotone_on_psd() {
        let mut r = rng(18);
        let s = rand_psd_gapped(&mut r, 6);
        let mut v = QVector::new(vec![Quaternion::ONE; 6]).normalized();
        let mut last = -f64::INFINITY;
        for _ in 0..60 {
            let sv = s.matvec(&v).unwrap();
            let rq = v.conj_dot(&sv).re();
            assert!(rq >= last - 1e-12, "rayleigh dropped: {last} -> {rq}");
            last = rq;
            v = sv.normalized();
        }
    }

    #[test]
    fn eigvec_right_phase_equivariance() {
        let mut r = rng(19);
        let s = rand_psd_gapped(&mut r, 5);
        let (lambda, v) = herm_top_eig(&s, 200).unwrap();
        for _ in 0..20 {
            let q = rand_quat(&mut r).sign();
            let vq = v.mul_right(q);
            let resid = s.matvec(&vq).unwrap().sub(&vq.scale(lambda));
            assert!(resid.norm() <= 1e-8);
        }
    }

    #[test]
    fn sym4_diagonal_and_degenerate() {
        let m = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 2.0, 0.0, 0.0],
            [0.0, 0.0, 3.0, 0.0],
            [0.0, 0.0, 0.0, 4.0],
        ];
        assert_eq!(sym4_min_eigvec(&m), [1.0, 0.0, 0.0, 0.0]);

        let id = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        assert_eq!(sym4_min_eigvec(&id), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sym4_matches_characteristic_polynomial_root() {
        // Oracle: smallest root of det(M - lambda I) found by scan+bisection.
        fn det4(m: &[[f64; 4]; 4]) -> f64 {
            let mut a = *m;
            let mut det = 1.0;
            for c in 0..4 {
                let mut piv = c;
                for r in c + 1..4 {
                    if a[r][c].abs() > a[piv][c].abs() {
                        piv = r;
                    }
                }
                if a[piv][c] == 0.0 {
                    return 0.0;
                }
                if piv != c {
                    a.swap(piv, c);
                    det = -det;
                }
                det *= a[c][c];
                for r in c + 1..4 {
                    let f = a[r][c] / a[c][c];
                    for k in c..4 {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
            det
        }
        fn char_poly(m: &[[f64; 4]; 4], lambda: f64) -> f64 {
            let mut s = *m;
            for i in 0..4 {
                s[i][i] -= lambda;
            }
            det4(&s)
        }
        let mut r = rng(20);
        for _ in 0..20 {
            // Random PSD: G^t G scaled.
            let mut g = [[0.0; 4]; 4];
            for row in &mut g {
                for x in row.iter_mut() {
                    *x = r.random::<f64>() * 2.0 - 1.0;
                }
            }
            let mut m = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        m[i][j] += g[k][i] * g[k][j];
                    }
                }
            }
            let v = sym4_min_eigvec(&m);
            let mut mv = [0.0; 4];
            for i in 0..4 {
                for j in 0..4 {
                    mv[i] += m[i][j] * v[j];
                }
            }
            let rq: f64 = (0..4).map(|i| v[i] * mv[i]).sum();

            // det(M - lambda I) = prod(lambda_i - lambda): positive below the
            // smallest eigenvalue, negative just above it.
            let hi_bound = (0..4).map(|i| m[i][i]).sum::<f64>();
            let mut lo = -1.0;
            let mut hi = lo;
            let steps = 20000;
            for s in 0..=steps {
                let lam = -1.0 + (hi_bound + 1.5) * s as f64 / steps as f64;
                if char_poly(&m, lam) < 0.0 {
                    hi = lam;
                    break;
                }
                lo = lam;
            }
            assert!(hi > lo, "no sign change found");
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if char_poly(&m, mid) < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            assert!(
                (rq - root).abs() <= 1e-9 * root.abs().max(1.0),
                "rayleigh {rq} vs root {root}"
            );
        }
    }

    #[test]
    fn qsvd_scalar_and_rank_one() {
        let q = Quaternion::new(3.0, 0.0, 4.0, 0.0); // modulus 5
        let a = QMatrix::from_entries(vec![q], 1, 1);
        let sv = qsvd_singular_values(&a).unwrap();
        assert_eq!(sv.len(), 1);
        assert!((sv[0] - 5.0).abs() <= 1e-10);

        let mut r = rng(21);
        let u = rand_qvec(&mut r, 4);
        let v = rand_qvec(&mut r, 3);
        let a = u.outer(&v);
        let sv = qsvd_singular_values(&a).unwrap();
        assert!((sv[0] - u.norm() * v.norm()).abs() <= 1e-8);
        // Zero singular values surface as sqrt of eigenvalue noise.
        for s in &sv[1..] {
            assert!(*s <= 1e-6 * sv[0]);
        }
    }

    #[test]
    fn qsvd_frobenius_identity() {
        let mut r = rng(22);
        for _ in 0..20 {
            let a = rand_qmat(&mut r, 3, 2);
            let sv = qsvd_singular_values(&a).unwrap();
            let sum: f64 = sv.iter().map(|s| s * s).sum();
            let fro2 = a.fro_norm() * a.fro_norm();
            assert!((sum - fro2).abs() <= 1e-10 * fro2.max(1.0));
        }
    }

    #[test]
    fn qsvd_top_value_matches_quaternion_route() {
        // Independent route: sigma_1^2 is the top eigenvalue of A^* A,
        // found by quaternion power iteration.
        let mut r = rng(23);
        for _ in 0..10 {
            let a = rand_qmat(&mut r, 5, 4);
            let sv = qsvd_singular_values(&a).unwrap();
            let ata = a.adjoint().matmul(&a).unwrap();
            let h = QMatrix::hermitian_from(ata.entries, 4).unwrap();
            let (lambda, _) = herm_top_eig(&h, 400).unwrap();
            assert!((sv[0] * sv[0] - lambda).abs() <= 1e-7 * lambda.max(1.0));
        }
    }

    #[test]
    fn vrep_rank_matches_singular_values() {
        let mut r = rng(24);
        let pure = rand_qvec(&mut r, 8).imag();
        let sv = vrep_singular_values(&vrep(&pure));
        let above: usize = sv.iter().filter(|s| **s > 1e-10 * sv[0]).count();
        assert_eq!(above, 3, "pure random vector should have V-rank 3: {sv:?}");

        let gen = rand_qvec(&mut r, 8);
        let svg = vrep_singular_values(&vrep(&gen));
        let above_g: usize = svg.iter().filter(|s| **s > 1e-10 * svg[0]).count();
        assert_eq!(above_g, 4);
    }

    #[test]
    fn hermitian_tolerance() {
        let mut r = rng(25);
        let b = rand_qmat(&mut r, 4, 4);
        let s = b.matmul(&b.adjoint()).unwrap();
        assert!(QMatrix::hermitian_from(s.entries.clone(), 4).is_ok());

        let mut bad = s.entries;
        bad[1] += Quaternion::from_real(0.5);
        assert!(matches!(
            QMatrix::hermitian_from(bad, 4),
            Err(Error::NotHermitian { .. })
        ));
    }
}
