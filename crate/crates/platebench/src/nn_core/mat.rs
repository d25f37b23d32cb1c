//! Dense row-major matrix storage and the handful of products the layers in
//! this crate need. Nothing here allocates in the hot path: callers own the
//! output buffers and the inner loops run over contiguous slices so the
//! compiler can vectorize them.

/// Row-major dense matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Default for Mat {
    fn default() -> Self {
        Mat::zeros(0, 0)
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must match shape");
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    /// Reshape in place, reallocating only when the buffer grows.
    pub fn resize(&mut self, rows: usize, cols: usize) {
        self.rows = rows;
        self.cols = cols;
        self.data.resize(rows * cols, 0.0);
    }
}

/// Dot product with four independent accumulators. The summation order is
/// fixed, so results are reproducible run to run.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n4 = a.len() - a.len() % 4;
    let (a4, ar) = a.split_at(n4);
    let (b4, br) = b.split_at(n4);
    let mut acc = [0.0f64; 4];
    for (ca, cb) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ar.iter().zip(br.iter()) {
        s += x * y;
    }
    s
}

#[inline]
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += alpha * xi;
    }
}

/// `c = a * b` (or `c += a * b` when `accumulate`).
pub fn gemm_nn(c: &mut Mat, a: &Mat, b: &Mat, accumulate: bool) {
    assert_eq!(a.cols(), b.rows());
    assert_eq!(c.rows(), a.rows());
    assert_eq!(c.cols(), b.cols());
    if !accumulate {
        c.fill(0.0);
    }
    for i in 0..a.rows() {
        let arow = a.row(i);
        let crow = c.row_mut(i);
        for (k, &aik) in arow.iter().enumerate() {
            if aik != 0.0 {
                axpy(crow, aik, b.row(k));
            }
        }
    }
}

/// `c = a * b^T` (or accumulate). Rows of both operands are contiguous, so
/// each entry is a straight dot product.
pub fn gemm_nt(c: &mut Mat, a: &Mat, b: &Mat, accumulate: bool) {
    assert_eq!(a.cols(), b.cols());
    assert_eq!(c.rows(), a.rows());
    assert_eq!(c.cols(), b.rows());
    for i in 0..a.rows() {
        let arow = a.row(i);
        let crow = c.row_mut(i);
        for j in 0..b.rows() {
            let d = dot(arow, b.row(j));
            if accumulate {
                crow[j] += d;
            } else {
                crow[j] = d;
            }
        }
    }
}

/// `c = a^T * b` (or accumulate); `a` is `n×p`, `b` is `n×q`, `c` is `p×q`.
pub fn gemm_tn(c: &mut Mat, a: &Mat, b: &Mat, accumulate: bool) {
    assert_eq!(a.rows(), b.rows());
    assert_eq!(c.rows(), a.cols());
    assert_eq!(c.cols(), b.cols());
    if !accumulate {
        c.fill(0.0);
    }
    for i in 0..a.rows() {
        let arow = a.row(i);
        let brow = b.row(i);
        for (k, &aik) in arow.iter().enumerate() {
            if aik != 0.0 {
                axpy(c.row_mut(k), aik, brow);
            }
        }
    }
}

/// `y = A x`, `A` of shape `len(y) × len(x)`.
pub fn gemv(y: &mut [f64], a: &Mat, x: &[f64]) {
    assert_eq!(a.cols(), x.len());
    assert_eq!(a.rows(), y.len());
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = dot(a.row(i), x);
    }
}

/// Adds the bias vector `b` to every row of `c`.
pub fn add_row_broadcast(c: &mut Mat, b: &[f64]) {
    assert_eq!(c.cols(), b.len());
    for i in 0..c.rows() {
        for (cij, bj) in c.row_mut(i).iter_mut().zip(b.iter()) {
            *cij += bj;
        }
    }
}

/// Column sums of `a` accumulated into `out`.
pub fn col_sums(out: &mut [f64], a: &Mat) {
    assert_eq!(out.len(), a.cols());
    for i in 0..a.rows() {
        for (o, v) in out.iter_mut().zip(a.row(i).iter()) {
            *o += v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Mat {
        Mat::from_rows(rows, cols, v.to_vec())
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.25 - 1.0).collect();
        let b: Vec<f64> = (0..11).map(|i| (i as f64).sin()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn gemm_variants_agree_with_reference() {
        let a = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = m(3, 2, &[7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let mut c = Mat::zeros(2, 2);
        gemm_nn(&mut c, &a, &b, false);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);

        // a * b^T with b given as 2x3
        let bt = m(2, 3, &[7.0, 9.0, 11.0, 8.0, 10.0, 12.0]);
        let mut c2 = Mat::zeros(2, 2);
        gemm_nt(&mut c2, &a, &bt, false);
        assert_eq!(c2.data(), c.data());

        // a^T * a
        let mut g = Mat::zeros(3, 3);
        gemm_tn(&mut g, &a, &a, false);
        assert_eq!(g.get(0, 0), 17.0);
        assert_eq!(g.get(1, 2), 2.0 * 3.0 + 5.0 * 6.0);
        assert_eq!(g.get(2, 1), g.get(1, 2));
    }

    #[test]
    fn gemv_and_broadcast() {
        let a = m(2, 3, &[1.0, 0.0, -1.0, 2.0, 1.0, 0.0]);
        let mut y = vec![0.0; 2];
        gemv(&mut y, &a, &[3.0, 4.0, 5.0]);
        assert_eq!(y, vec![-2.0, 10.0]);

        let mut c = Mat::zeros(2, 3);
        add_row_broadcast(&mut c, &[1.0, 2.0, 3.0]);
        assert_eq!(c.row(1), &[1.0, 2.0, 3.0]);
    }
}
