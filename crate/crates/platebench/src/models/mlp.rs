//! Multilayer perceptron surrogate with ELU hidden activations:
//!
//! ```text
//! x_1 = ELU(W_1 u_s + b_1)
//! x_i = ELU(W_i x_{i-1} + b_i)      i = 2..h
//! ŷ   = W x_h + b
//! ```
//!
//! Hidden widths equal the window length `s`. The backward pass is
//! hand-derived; gradients of the batch-mean squared error accumulate into
//! the parameter store.

use super::ModelSpec;
use crate::nn_core::{
    affine_forward, affine_single, backprop_input, dot, elu_grad_from_output, elu_inplace,
    grad_affine, init, Mat, ParamLayout, ParamStore,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct MlpModel {
    spec: ModelSpec,
    store: ParamStore,
    /// Segment indices: (weights, bias) per hidden layer.
    layers: Vec<(usize, usize)>,
    out_w: usize,
    out_b: usize,
    // batch workspace
    acts: Vec<Mat>,
    dbuf_a: Mat,
    dbuf_b: Mat,
    preds: Vec<f64>,
    resid: Vec<f64>,
    batch: usize,
}

impl MlpModel {
    pub fn new(spec: ModelSpec) -> Self {
        let s = spec.s;
        let mut segs = Vec::new();
        let mut layers = Vec::new();
        for i in 0..spec.h {
            layers.push((segs.len(), segs.len() + 1));
            segs.push((format!("w{}", i + 1), s, s));
            segs.push((format!("b{}", i + 1), 1, s));
        }
        let out_w = segs.len();
        segs.push(("w_out".to_string(), 1, s));
        let out_b = segs.len();
        segs.push(("b_out".to_string(), 1, 1));

        let mut store = ParamStore::new(ParamLayout::new(segs));
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for &(w, _) in &layers {
            init::uniform_affine(&mut rng, s, s, store.seg_theta_mut(w));
        }
        init::uniform_affine(&mut rng, s, 1, store.seg_theta_mut(out_w));

        MlpModel {
            spec,
            store,
            layers,
            out_w,
            out_b,
            acts: Vec::new(),
            dbuf_a: Mat::zeros(0, 0),
            dbuf_b: Mat::zeros(0, 0),
            preds: Vec::new(),
            resid: Vec::new(),
            batch: 0,
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn predict(&self, window: &[f64]) -> f64 {
        debug_assert_eq!(window.len(), self.spec.s);
        let s = self.spec.s;
        let mut cur = window.to_vec();
        let mut next = vec![0.0; s];
        for &(w, b) in &self.layers {
            affine_single(
                &mut next,
                &cur,
                self.store.seg_theta(w),
                self.store.seg_theta(b),
            );
            elu_inplace(&mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        dot(self.store.seg_theta(self.out_w), &cur) + self.store.seg_theta(self.out_b)[0]
    }

    fn ensure_batch(&mut self, batch: usize) {
        if self.batch == batch {
            return;
        }
        let s = self.spec.s;
        self.acts.clear();
        for _ in 0..self.spec.h {
            self.acts.push(Mat::zeros(batch, s));
        }
        self.dbuf_a.resize(batch, s);
        self.dbuf_b.resize(batch, s);
        self.batch = batch;
    }

    fn forward(&mut self, x: &Mat) {
        let batch = x.rows();
        self.ensure_batch(batch);
        for li in 0..self.spec.h {
            let (w, b) = self.layers[li];
            // split acts so the previous layer output can be read while the
            // current one is written
            let (head, tail) = self.acts.split_at_mut(li);
            let input: &Mat = if li == 0 { x } else { &head[li - 1] };
            affine_forward(
                &mut tail[0],
                input,
                self.store.seg_theta(w),
                self.store.seg_theta(b),
            );
            for v in tail[0].data_mut() {
                *v = crate::nn_core::elu(*v);
            }
        }
        self.preds.clear();
        let w_out = self.store.seg_theta(self.out_w);
        let b_out = self.store.seg_theta(self.out_b)[0];
        let last = &self.acts[self.spec.h - 1];
        for i in 0..batch {
            self.preds.push(dot(w_out, last.row(i)) + b_out);
        }
    }

    pub fn predict_batch(&mut self, x: &Mat, out: &mut Vec<f64>) {
        self.forward(x);
        out.clear();
        out.extend_from_slice(&self.preds);
    }

    pub fn loss_grad_batch(&mut self, x: &Mat, y: &[f64]) -> f64 {
        let batch = x.rows();
        assert_eq!(y.len(), batch);
        self.forward(x);

        let mut loss = 0.0;
        self.resid.clear();
        for (p, t) in self.preds.iter().zip(y.iter()) {
            let e = p - t;
            loss += e * e;
            self.resid.push(2.0 * e / batch as f64);
        }

        let s = self.spec.s;
        let h = self.spec.h;
        let out_w_range = self.store.layout().seg(self.out_w).range();
        let out_b_range = self.store.layout().seg(self.out_b).range();
        let layer_ranges: Vec<_> = self
            .layers
            .iter()
            .map(|&(w, b)| {
                (
                    self.store.layout().seg(w).range(),
                    self.store.layout().seg(b).range(),
                )
            })
            .collect();

        let (theta, grad) = self.store.theta_and_grad_mut();

        // output layer: dW = sum_b r_b * a_h[b], db = sum r_b, dA_h = r ⊗ w
        let last = &self.acts[h - 1];
        for (i, &r) in self.resid.iter().enumerate() {
            crate::nn_core::axpy(&mut grad[out_w_range.clone()], r, last.row(i));
            grad[out_b_range.start] += r;
        }
        let w_out = &theta[out_w_range.clone()];
        for (i, &r) in self.resid.iter().enumerate() {
            let drow = self.dbuf_a.row_mut(i);
            for (d, wj) in drow.iter_mut().zip(w_out.iter()) {
                *d = r * wj;
            }
        }

        // hidden layers, top down; dbuf_a holds dL/d act_i on entry
        for li in (0..h).rev() {
            let act = &self.acts[li];
            // dZ = dA ⊙ elu'(act), in place
            for i in 0..batch {
                let drow = self.dbuf_a.row_mut(i);
                let arow = act.row(i);
                for (d, &a) in drow.iter_mut().zip(arow.iter()) {
                    *d *= elu_grad_from_output(a);
                }
            }
            let (w_range, b_range) = layer_ranges[li].clone();
            {
                let input: &Mat = if li == 0 { x } else { &self.acts[li - 1] };
                let (gw, gb) = {
                    // non-overlapping segment ranges within the gradient buffer
                    let (lo, hi) = if w_range.start < b_range.start {
                        let (a, rest) = grad[w_range.start..].split_at_mut(b_range.start - w_range.start);
                        (&mut a[..s * s], &mut rest[..s])
                    } else {
                        unreachable!("weights precede biases in the layout")
                    };
                    (lo, hi)
                };
                grad_affine(gw, Some(gb), &self.dbuf_a, input);
            }
            if li > 0 {
                backprop_input(&mut self.dbuf_b, &self.dbuf_a, &theta[w_range], false);
                std::mem::swap(&mut self.dbuf_a, &mut self.dbuf_b);
            }
        }

        loss / batch as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn_core::{check_gradient, GradCheckOptions};

    #[test]
    fn zero_weights_predict_output_bias() {
        let mut m = MlpModel::new(ModelSpec::mlp(6, 2, 0));
        m.store_mut().theta_mut().fill(0.0);
        let out_b = m.out_b;
        m.store_mut().seg_theta_mut(out_b)[0] = -1.5;
        // ELU(0) = 0, so every hidden layer emits zeros and only b survives
        assert_eq!(m.predict(&[3.0, -2.0, 1.0, 0.5, 9.0, -4.0]), -1.5);
    }

    #[test]
    fn identity_layer_on_positive_window_reduces_to_lr() {
        let s = 4;
        let mut m = MlpModel::new(ModelSpec::mlp(s, 1, 0));
        m.store_mut().theta_mut().fill(0.0);
        for i in 0..s {
            let (w, _) = m.layers[0];
            m.store.seg_theta_mut(w)[i * s + i] = 1.0;
        }
        let out_w = m.out_w;
        let coeffs = [0.5, -1.0, 2.0, 0.25];
        m.store.seg_theta_mut(out_w).copy_from_slice(&coeffs);
        let out_b = m.out_b;
        m.store.seg_theta_mut(out_b)[0] = 0.3;
        let window = [1.0, 2.0, 0.5, 3.0]; // positive: ELU acts as identity
        let expect = dot(&coeffs, &window) + 0.3;
        assert!((m.predict(&window) - expect).abs() < 1e-14);
    }

    #[test]
    fn batch_and_single_paths_agree() {
        let s = 9;
        let mut m = MlpModel::new(ModelSpec::mlp(s, 3, 21));
        let mut x = Mat::zeros(5, s);
        for i in 0..5 {
            for j in 0..s {
                x.set(i, j, ((i * 7 + j * 3) as f64 * 0.21).sin());
            }
        }
        let mut out = Vec::new();
        m.predict_batch(&x, &mut out);
        for i in 0..5 {
            let single = m.predict(x.row(i));
            assert!((out[i] - single).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = 5;
        let batch = 7;
        for seed in [1u64, 2, 3] {
            let mut m = MlpModel::new(ModelSpec::mlp(s, 2, seed));
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            use rand::Rng;
            let mut x = Mat::zeros(batch, s);
            for v in x.data_mut() {
                *v = rng.gen_range(-1.5..1.5);
            }
            let y: Vec<f64> = (0..batch).map(|_| rng.gen_range(-1.0..1.0)).collect();

            m.store_mut().zero_grad();
            m.loss_grad_batch(&x, &y);
            let analytic = m.store().grad().to_vec();
            let theta0 = m.store().theta().to_vec();

            let spec = m.spec().clone();
            let err = check_gradient(
                |theta| {
                    let mut probe = MlpModel::new(spec.clone());
                    probe.store_mut().theta_mut().copy_from_slice(theta);
                    let mut preds = Vec::new();
                    probe.predict_batch(&x, &mut preds);
                    preds
                        .iter()
                        .zip(y.iter())
                        .map(|(p, t)| (p - t) * (p - t))
                        .sum::<f64>()
                        / batch as f64
                },
                &theta0,
                &analytic,
                &GradCheckOptions::default(),
            );
            assert!(err < 1e-4, "seed {seed}: gradient error {err}");
        }
    }
}
