//! Dense kernels for the greedy loops: residual correlations, least squares
//! on restricted column sets, ridge estimation, and magnitude pruning.
//!
//! Least squares goes through a Householder QR factorization rather than the
//! normal equations; support sizes approach `M` in the CoSaMP/SP merges and
//! squaring the condition number there is exactly what must be avoided.

use alloc::vec;
use alloc::vec::Vec;

use crate::ensemble::SensingMatrix;
use crate::error::{Error, Result};
use crate::float;

/// Relative pivot tolerance for declaring a factorization rank deficient.
const RANK_TOL: f64 = 1e-12;

/// Normalized correlations of every column against a residual:
/// `z_n = a_n^T r / ||a_n||`.
pub fn column_correlations(phi: &SensingMatrix, r: &[f64]) -> Result<Vec<f64>> {
    if r.len() != phi.rows() {
        return Err(Error::DimensionMismatch { expected: phi.rows(), got: r.len() });
    }
    let mut z = Vec::with_capacity(phi.cols());
    for j in 0..phi.cols() {
        let norm = phi.col_norm(j);
        if norm <= 0.0 {
            return Err(Error::DegenerateColumn { col: j });
        }
        let col = phi.col(j);
        let mut dot = 0.0;
        for (a, b) in col.iter().zip(r) {
            dot += a * b;
        }
        z.push(dot / norm);
    }
    Ok(z)
}

/// Indices of the `k` largest entries of `v` by magnitude, in decreasing
/// magnitude order; ties break toward the lower index.
pub fn top_k_by_magnitude(v: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > v.len() {
        return Err(Error::InvalidArgument("k exceeds vector length"));
    }
    let mut idx: Vec<usize> = (0..v.len()).collect();
    // Stable sort on descending magnitude keeps lower indices first on ties.
    idx.sort_by(|&a, &b| float::abs(v[b]).total_cmp(&float::abs(v[a])));
    idx.truncate(k);
    Ok(idx)
}

/// A sensing matrix restricted to an ordered set of distinct columns.
#[derive(Debug, Clone)]
pub struct RestrictedSystem<'a> {
    matrix: &'a SensingMatrix,
    cols: Vec<usize>,
}

impl<'a> RestrictedSystem<'a> {
    pub fn new(matrix: &'a SensingMatrix, cols: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; matrix.cols()];
        for &c in &cols {
            if c >= matrix.cols() {
                return Err(Error::InvalidArgument("column index out of range"));
            }
            if seen[c] {
                return Err(Error::InvalidArgument("column indices must be distinct"));
            }
            seen[c] = true;
        }
        Ok(Self { matrix, cols })
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn width(&self) -> usize {
        self.cols.len()
    }

    /// `Φ_{|S} x` for a coefficient vector on the selected columns.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols.len() {
            return Err(Error::DimensionMismatch { expected: self.cols.len(), got: x.len() });
        }
        let m = self.matrix.rows();
        let mut out = vec![0.0; m];
        for (&c, &v) in self.cols.iter().zip(x) {
            for (o, &a) in out.iter_mut().zip(self.matrix.col(c)) {
                *o += v * a;
            }
        }
        Ok(out)
    }

    /// Minimizer of `||Φ_{|S} x - y||_2` via Householder QR.
    pub fn least_squares(&self, y: &[f64]) -> Result<Vec<f64>> {
        let m = self.matrix.rows();
        if y.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: y.len() });
        }
        let s = self.cols.len();
        if s == 0 {
            return Ok(Vec::new());
        }
        if s > m {
            return Err(Error::InvalidArgument("least squares needs |S| <= M"));
        }
        let qr = QrFactor::new(self.gather(), m, s)?;
        Ok(qr.solve(y))
    }

    /// Ridge solution `(Φ^T Φ + I/snr)^{-1} Φ^T y`. The regularized system is
    /// always positive definite, so a Cholesky solve suffices.
    pub fn ridge(&self, y: &[f64], snr: f64) -> Result<Vec<f64>> {
        let m = self.matrix.rows();
        if y.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: y.len() });
        }
        if snr <= 0.0 || snr.is_nan() {
            return Err(Error::InvalidArgument("ridge requires snr > 0"));
        }
        let s = self.cols.len();
        if s == 0 {
            return Ok(Vec::new());
        }
        let lambda = 1.0 / snr;
        // Gram matrix plus ridge term, column-major lower triangle used.
        let mut g = vec![0.0; s * s];
        for i in 0..s {
            let ci = self.matrix.col(self.cols[i]);
            for j in 0..=i {
                let cj = self.matrix.col(self.cols[j]);
                let mut dot = 0.0;
                for (a, b) in ci.iter().zip(cj) {
                    dot += a * b;
                }
                g[j * s + i] = dot;
                g[i * s + j] = dot;
            }
            g[i * s + i] += lambda;
        }
        let mut rhs = vec![0.0; s];
        for (i, r) in rhs.iter_mut().enumerate() {
            let col = self.matrix.col(self.cols[i]);
            let mut dot = 0.0;
            for (a, b) in col.iter().zip(y) {
                dot += a * b;
            }
            *r = dot;
        }
        cholesky_solve(&mut g, s, &mut rhs)?;
        Ok(rhs)
    }

    /// `y - Φ_{|S} x`.
    pub fn residual(&self, y: &[f64], xhat: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.matrix.rows() {
            return Err(Error::DimensionMismatch { expected: self.matrix.rows(), got: y.len() });
        }
        let ax = self.apply(xhat)?;
        Ok(y.iter().zip(&ax).map(|(a, b)| a - b).collect())
    }

    /// Copies the selected columns into a dense column-major block.
    fn gather(&self) -> Vec<f64> {
        let m = self.matrix.rows();
        let mut a = Vec::with_capacity(m * self.cols.len());
        for &c in &self.cols {
            a.extend_from_slice(self.matrix.col(c));
        }
        a
    }
}

/// In-place Householder QR of a column-major `m x s` block (`s <= m`).
/// Reflector vectors live below the diagonal; `diag` holds the R diagonal.
struct QrFactor {
    a: Vec<f64>,
    vtv: Vec<f64>,
    diag: Vec<f64>,
    m: usize,
    s: usize,
}

impl QrFactor {
    fn new(mut a: Vec<f64>, m: usize, s: usize) -> Result<Self> {
        let mut diag = vec![0.0; s];
        let mut vtv = vec![0.0; s];
        for j in 0..s {
            let (alpha, w) = {
                let col = &mut a[j * m..(j + 1) * m];
                let mut norm_sq = 0.0;
                for &v in &col[j..] {
                    norm_sq += v * v;
                }
                let norm = float::sqrt(norm_sq);
                let alpha = if col[j] >= 0.0 { -norm } else { norm };
                col[j] -= alpha;
                let mut w = 0.0;
                for &v in &col[j..] {
                    w += v * v;
                }
                (alpha, w)
            };
            diag[j] = alpha;
            vtv[j] = w;
            if w == 0.0 {
                continue;
            }
            // Apply I - 2 v v^T / (v^T v) to the remaining columns.
            for t in (j + 1)..s {
                let (head, tail) = a.split_at_mut(t * m);
                let v = &head[j * m + j..(j + 1) * m];
                let col = &mut tail[j..m];
                let mut dot = 0.0;
                for (x, y) in v.iter().zip(col.iter()) {
                    dot += x * y;
                }
                let c = 2.0 * dot / w;
                for (x, y) in v.iter().zip(col.iter_mut()) {
                    *y -= c * x;
                }
            }
        }
        let max_diag = diag.iter().fold(0.0f64, |acc, &d| acc.max(float::abs(d)));
        if max_diag == 0.0 || diag.iter().any(|&d| float::abs(d) < RANK_TOL * max_diag) {
            return Err(Error::SingularSystem);
        }
        Ok(Self { a, vtv, diag, m, s })
    }

    #[allow(clippy::needless_range_loop)]
    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let (m, s) = (self.m, self.s);
        let mut q_t_y = y.to_vec();
        for j in 0..s {
            if self.vtv[j] == 0.0 {
                continue;
            }
            let v = &self.a[j * m + j..(j + 1) * m];
            let seg = &mut q_t_y[j..m];
            let mut dot = 0.0;
            for (x, y) in v.iter().zip(seg.iter()) {
                dot += x * y;
            }
            let c = 2.0 * dot / self.vtv[j];
            for (x, y) in v.iter().zip(seg.iter_mut()) {
                *y -= c * x;
            }
        }
        // Back-substitution on R (upper triangle above the stored reflectors).
        let mut x = vec![0.0; s];
        for i in (0..s).rev() {
            let mut sum = q_t_y[i];
            for jj in (i + 1)..s {
                sum -= self.a[jj * m + i] * x[jj];
            }
            x[i] = sum / self.diag[i];
        }
        x
    }
}

/// Cholesky factorization + solve for a symmetric positive-definite system.
fn cholesky_solve(g: &mut [f64], s: usize, rhs: &mut [f64]) -> Result<()> {
    for j in 0..s {
        for i in j..s {
            let mut sum = g[j * s + i];
            for k in 0..j {
                sum -= g[k * s + i] * g[k * s + j];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::SingularSystem);
                }
                g[j * s + j] = float::sqrt(sum);
            } else {
                g[j * s + i] = sum / g[j * s + j];
            }
        }
    }
    // Forward then backward substitution with L stored in the lower triangle.
    for i in 0..s {
        let mut sum = rhs[i];
        for k in 0..i {
            sum -= g[k * s + i] * rhs[k];
        }
        rhs[i] = sum / g[i * s + i];
    }
    for i in (0..s).rev() {
        let mut sum = rhs[i];
        for k in (i + 1)..s {
            sum -= g[i * s + k] * rhs[k];
        }
        rhs[i] = sum / g[i * s + i];
    }
    Ok(())
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    float::sqrt(v.iter().map(|x| x * x).sum())
}

/// Squared Euclidean distance between two equal-length vectors.
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
