//! Minimal dense-numerics toolkit for the surrogate models: row-major
//! matrices, activations, a flat parameter store with Adam, seeded
//! initializers and a finite-difference gradient checker.
//!
//! Everything is double precision and strictly sequential so that a fixed
//! seed reproduces training bit for bit.

pub mod activations;
pub mod gradcheck;
pub mod init;
pub mod linear;
pub mod mat;
pub mod params;

pub use activations::{
    elu, elu_grad_from_output, elu_inplace, sigmoid, sigmoid_grad_from_output, tanh,
    tanh_grad_from_output,
};
pub use gradcheck::{check_gradient, GradCheckOptions};
pub use linear::{affine_accum, affine_forward, affine_single, backprop_input, grad_affine};
pub use mat::{add_row_broadcast, axpy, col_sums, dot, gemm_nn, gemm_nt, gemm_tn, gemv, Mat};
pub use params::{AdamConfig, ParamLayout, ParamStore, Segment};
