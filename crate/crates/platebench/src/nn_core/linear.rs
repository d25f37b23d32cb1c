//! Affine layer primitives shared by the model families. Weight matrices are
//! row-major `out × in` slices taken from a [`ParamStore`](super::ParamStore),
//! so each output neuron's weights are contiguous and every product below
//! reduces to dots and axpys over contiguous memory.

use super::mat::{axpy, col_sums, dot, Mat};

/// `out = x · W^T + b`; `x` is `B×in`, `w` is `out×in`, `b` has length `out`.
pub fn affine_forward(out: &mut Mat, x: &Mat, w: &[f64], b: &[f64]) {
    let n_in = x.cols();
    let n_out = out.cols();
    debug_assert_eq!(w.len(), n_in * n_out);
    debug_assert_eq!(b.len(), n_out);
    debug_assert_eq!(out.rows(), x.rows());
    for i in 0..x.rows() {
        let xrow = x.row(i);
        let orow = out.row_mut(i);
        for j in 0..n_out {
            orow[j] = dot(xrow, &w[j * n_in..(j + 1) * n_in]) + b[j];
        }
    }
}

/// `out += x · W^T` (no bias); same shapes as [`affine_forward`].
pub fn affine_accum(out: &mut Mat, x: &Mat, w: &[f64]) {
    let n_in = x.cols();
    let n_out = out.cols();
    debug_assert_eq!(w.len(), n_in * n_out);
    for i in 0..x.rows() {
        let xrow = x.row(i);
        let orow = out.row_mut(i);
        for j in 0..n_out {
            orow[j] += dot(xrow, &w[j * n_in..(j + 1) * n_in]);
        }
    }
}

/// `dx (+)= dz · W`; `dz` is `B×out`, `w` is `out×in`, `dx` is `B×in`.
pub fn backprop_input(dx: &mut Mat, dz: &Mat, w: &[f64], accumulate: bool) {
    let n_in = dx.cols();
    let n_out = dz.cols();
    debug_assert_eq!(w.len(), n_in * n_out);
    debug_assert_eq!(dx.rows(), dz.rows());
    if !accumulate {
        dx.fill(0.0);
    }
    for i in 0..dz.rows() {
        let zrow = dz.row(i);
        let xrow = dx.row_mut(i);
        for (j, &zij) in zrow.iter().enumerate() {
            if zij != 0.0 {
                axpy(xrow, zij, &w[j * n_in..(j + 1) * n_in]);
            }
        }
    }
}

/// Accumulates `dw += dz^T · x` and optionally `db += column sums of dz`.
pub fn grad_affine(dw: &mut [f64], db: Option<&mut [f64]>, dz: &Mat, x: &Mat) {
    let n_in = x.cols();
    let n_out = dz.cols();
    debug_assert_eq!(dw.len(), n_in * n_out);
    debug_assert_eq!(dz.rows(), x.rows());
    for i in 0..dz.rows() {
        let zrow = dz.row(i);
        let xrow = x.row(i);
        for (j, &zij) in zrow.iter().enumerate() {
            if zij != 0.0 {
                axpy(&mut dw[j * n_in..(j + 1) * n_in], zij, xrow);
            }
        }
    }
    if let Some(db) = db {
        col_sums(db, dz);
    }
}

/// Single-sample `y = W x + b`.
pub fn affine_single(y: &mut [f64], x: &[f64], w: &[f64], b: &[f64]) {
    let n_in = x.len();
    debug_assert_eq!(w.len(), n_in * y.len());
    debug_assert_eq!(b.len(), y.len());
    for (j, yj) in y.iter_mut().enumerate() {
        *yj = dot(x, &w[j * n_in..(j + 1) * n_in]) + b[j];
    }
}
