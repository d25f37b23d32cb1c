//! Seeded weight initialization. Affine layers draw uniformly from
//! `±sqrt(6 / (fan_in + fan_out))`; recurrent square matrices are
//! orthogonalized by modified Gram–Schmidt so early backpropagation through
//! time neither explodes nor collapses.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Fills `out` (a `fan_out × fan_in` matrix) with the uniform fan-scaled draw.
pub fn uniform_affine(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, out: &mut [f64]) {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for w in out.iter_mut() {
        *w = rng.gen_range(-bound..=bound);
    }
}

/// Fills `out` with an `n × n` orthogonal matrix obtained by Gram–Schmidt on
/// uniform random rows. Rows that collapse numerically are redrawn.
pub fn orthogonal(rng: &mut ChaCha8Rng, n: usize, out: &mut [f64]) {
    assert_eq!(out.len(), n * n);
    for i in 0..n {
        loop {
            for j in 0..n {
                out[i * n + j] = rng.gen_range(-1.0..=1.0);
            }
            for prev in 0..i {
                let mut proj = 0.0;
                for j in 0..n {
                    proj += out[i * n + j] * out[prev * n + j];
                }
                for j in 0..n {
                    out[i * n + j] -= proj * out[prev * n + j];
                }
            }
            let norm = (0..n).map(|j| out[i * n + j] * out[i * n + j]).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for j in 0..n {
                    out[i * n + j] /= norm;
                }
                break;
            }
        }
    }
}
