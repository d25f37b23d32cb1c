//! Free-free Euler–Bernoulli beam eigenfunctions, the one-dimensional
//! factors of the plate's product Ritz basis.
//!
//! Index 0 is the constant, index 1 the linear function (the rigid pair per
//! direction); index `m >= 2` is the `(m-1)`-th elastic mode
//!
//! ```text
//! X(x) = cosh(βx) + cos(βx) − σ (sinh(βx) + sin(βx))
//! ```
//!
//! with `cos(βL)·cosh(βL) = 1` and `σ = (cosh βL − cos βL)/(sinh βL − sin βL)`.
//!
//! Evaluated literally, the hyperbolic terms cancel catastrophically once
//! `βL` exceeds ~35, which a doubled-resolution basis reaches easily. The
//! evaluator below regroups the expression as
//!
//! ```text
//! X(x) = e^{βx}·(1−σ)/2 + e^{−βx}·(1+σ)/2 + cos βx − σ sin βx
//! ```
//!
//! and computes `(1−σ)/2 = (cos βL − sin βL − e^{−βL}) / (2 (sinh βL − sin βL))`
//! from O(1) quantities, so every term stays O(1) and the functions (and
//! their first two derivatives) are accurate near machine precision at any
//! order used here. All functions are normalized to unit L² norm with the
//! caller's quadrature.

use super::quadrature::Quadrature;

/// Roots `βL` of `cos(x) cosh(x) = 1`, excluding the double root at zero.
pub fn free_free_roots(count: usize) -> Vec<f64> {
    let mut roots = Vec::with_capacity(count);
    for k in 1..=count {
        // solve cos x = sech x, which is well conditioned near the roots
        let mut x = (2 * k + 1) as f64 * std::f64::consts::FRAC_PI_2;
        for _ in 0..60 {
            let sech = 1.0 / x.cosh();
            let g = x.cos() - sech;
            let dg = -x.sin() + sech * x.tanh();
            let dx = g / dg;
            x -= dx;
            if dx.abs() < 1e-14 * x {
                break;
            }
        }
        roots.push(x);
    }
    roots
}

enum Kind {
    Constant,
    Linear,
    Elastic {
        beta: f64,
        sigma: f64,
        /// `(1 − σ)/2`, computed in the cancellation-free form.
        p_half: f64,
        /// `(1 + σ)/2`.
        q_half: f64,
    },
}

struct BeamFn {
    kind: Kind,
    scale: f64,
}

impl BeamFn {
    /// Value and first two derivatives before normalization.
    fn eval_raw(&self, x: f64, half_len: f64) -> (f64, f64, f64) {
        match &self.kind {
            Kind::Constant => (1.0, 0.0, 0.0),
            Kind::Linear => (x - half_len, 1.0, 0.0),
            Kind::Elastic {
                beta,
                sigma,
                p_half,
                q_half,
            } => {
                let u = beta * x;
                let ep = u.exp() * p_half;
                let en = (-u).exp() * q_half;
                let (sin, cos) = u.sin_cos();
                let f = ep + en + cos - sigma * sin;
                let f1 = beta * (ep - en - sin - sigma * cos);
                let f2 = beta * beta * (ep + en - cos + sigma * sin);
                (f, f1, f2)
            }
        }
    }
}

/// The per-direction basis: `count` functions on `[0, len]`.
pub struct BeamBasis {
    len: f64,
    fns: Vec<BeamFn>,
}

impl BeamBasis {
    /// Builds `count >= 3` functions; `quad` is used to normalize them.
    pub fn new(len: f64, count: usize, quad: &Quadrature) -> Self {
        assert!(count >= 3, "basis needs the rigid pair plus one elastic mode");
        let mut fns = Vec::with_capacity(count);
        fns.push(BeamFn {
            kind: Kind::Constant,
            scale: 1.0,
        });
        fns.push(BeamFn {
            kind: Kind::Linear,
            scale: 1.0,
        });
        for bl in free_free_roots(count - 2) {
            let beta = bl / len;
            let sinh = bl.sinh();
            let sin = bl.sin();
            let cos = bl.cos();
            let sigma = (bl.cosh() - cos) / (sinh - sin);
            let p_half = (cos - sin - (-bl).exp()) / (2.0 * (sinh - sin));
            fns.push(BeamFn {
                kind: Kind::Elastic {
                    beta,
                    sigma,
                    p_half,
                    q_half: 0.5 * (1.0 + sigma),
                },
                scale: 1.0,
            });
        }
        let mut basis = BeamBasis { len, fns };
        for i in 0..count {
            let norm2: f64 = quad
                .nodes
                .iter()
                .zip(&quad.weights)
                .map(|(&x, &w)| {
                    let (f, _, _) = basis.fns[i].eval_raw(x, 0.5 * basis.len);
                    w * f * f
                })
                .sum();
            basis.fns[i].scale = 1.0 / norm2.sqrt();
        }
        basis
    }

    pub fn count(&self) -> usize {
        self.fns.len()
    }

    /// Normalized value and first two derivatives of function `idx` at `x`.
    pub fn eval(&self, idx: usize, x: f64) -> (f64, f64, f64) {
        let f = &self.fns[idx];
        let (v, d1, d2) = f.eval_raw(x, 0.5 * self.len);
        (v * f.scale, d1 * f.scale, d2 * f.scale)
    }

    /// `βL` of function `idx`, zero for the rigid pair.
    pub fn beta(&self, idx: usize) -> f64 {
        match &self.fns[idx].kind {
            Kind::Elastic { beta, .. } => *beta,
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_for(count: usize, len: f64) -> Quadrature {
        Quadrature::on_interval(4 * count + 10, len)
    }

    #[test]
    fn known_roots() {
        let r = free_free_roots(3);
        assert!((r[0] - 4.730_040_744_862_704).abs() < 1e-12);
        assert!((r[1] - 7.853_204_624_095_838).abs() < 1e-11);
        assert!((r[2] - 10.995_607_838_001_671).abs() < 1e-11);
    }

    #[test]
    fn free_end_conditions_hold() {
        // elastic modes have zero moment and shear at both ends
        let len = 0.8;
        let basis = BeamBasis::new(len, 8, &quad_for(8, len));
        for idx in 2..8 {
            let beta = basis.beta(idx);
            let scale2 = beta * beta;
            for &x in &[0.0, len] {
                let (_, _, d2) = basis.eval(idx, x);
                assert!(
                    d2.abs() < 1e-7 * scale2,
                    "idx {idx}, x {x}: moment {d2} vs beta^2 {scale2}"
                );
            }
        }
    }

    #[test]
    fn basis_is_orthonormal_under_quadrature() {
        let len = 1.3;
        let n = 10;
        let quad = quad_for(n, len);
        let basis = BeamBasis::new(len, n, &quad);
        for i in 0..n {
            for j in 0..n {
                let g: f64 = quad
                    .nodes
                    .iter()
                    .zip(&quad.weights)
                    .map(|(&x, &w)| {
                        let (fi, _, _) = basis.eval(i, x);
                        let (fj, _, _) = basis.eval(j, x);
                        w * fi * fj
                    })
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-9, "({i},{j}): {g}");
            }
        }
    }

    #[test]
    fn second_derivative_gram_is_diagonal_beta_fourth() {
        // With free ends, integration by parts gives
        // ∫ X_i'' X_j'' = β_j^4 δ_ij for normalized eigenfunctions -- an
        // independent oracle for both the stable evaluation and the
        // quadrature order, including orders where naive evaluation fails.
        let len = 1.0;
        let n = 12; // elastic βL up to ~33: naive cosh/sinh evaluation is unusable here
        let quad = quad_for(n, len);
        let basis = BeamBasis::new(len, n, &quad);
        for i in 0..n {
            let bi = basis.beta(i);
            for j in 0..n {
                let g: f64 = quad
                    .nodes
                    .iter()
                    .zip(&quad.weights)
                    .map(|(&x, &w)| {
                        let (_, _, di) = basis.eval(i, x);
                        let (_, _, dj) = basis.eval(j, x);
                        w * di * dj
                    })
                    .sum();
                let expect = if i == j { bi.powi(4) } else { 0.0 };
                let scale = basis.beta(i).max(basis.beta(j)).powi(4).max(1.0);
                assert!(
                    (g - expect).abs() / scale < 1e-9,
                    "({i},{j}): {g} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn endpoint_amplitude_is_two_over_norm() {
        // classic free-free normalization has |X(0)| = 2 before scaling
        let len = 1.0;
        let basis = BeamBasis::new(len, 6, &quad_for(6, len));
        for idx in 2..6 {
            let f = &basis.fns[idx];
            let (v, _, _) = f.eval_raw(0.0, 0.5);
            assert!((v - 2.0).abs() < 1e-9, "idx {idx}: X(0) = {v}");
        }
    }
}
