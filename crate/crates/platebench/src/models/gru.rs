//! Stacked GRU surrogate. The window is fed oldest-to-newest so the final
//! hidden state has absorbed the most recent sample last; the scalar output
//! is an affine read-out of the top layer's final state.
//!
//! Per layer `i` and step `j` (update gate `v`, reset gate `r`, candidate
//! `c`, same-layer recurrent state `x`):
//!
//! ```text
//! v = σ(W_v x_{j-1} + V_v inp_j + b_v)
//! r = σ(W_r x_{j-1} + V_r inp_j + b_r)
//! c = tanh(W_x (x_{j-1} ⊙ r) + V_x inp_j + b_x)
//! x_j = v ⊙ x_{j-1} + (1 - v) ⊙ c
//! ```
//!
//! `inp_j` is the scalar input sample for the first layer and the layer
//! below's state at the same step otherwise. Backpropagation through time is
//! hand-derived and batched; all products run through the affine primitives
//! in `nn_core`.

use super::ModelSpec;
use crate::nn_core::{
    affine_accum, axpy, backprop_input, col_sums, dot, grad_affine, init, sigmoid, Mat,
    ParamLayout, ParamStore,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy)]
struct LayerSegs {
    wv: usize,
    vv: usize,
    bv: usize,
    wr: usize,
    vr: usize,
    br: usize,
    wx: usize,
    vx: usize,
    bx: usize,
}

#[derive(Clone)]
struct LayerRanges {
    wv: std::ops::Range<usize>,
    vv: std::ops::Range<usize>,
    bv: std::ops::Range<usize>,
    wr: std::ops::Range<usize>,
    vr: std::ops::Range<usize>,
    br: std::ops::Range<usize>,
    wx: std::ops::Range<usize>,
    vx: std::ops::Range<usize>,
    bx: std::ops::Range<usize>,
}

pub struct GruModel {
    spec: ModelSpec,
    store: ParamStore,
    layers: Vec<LayerSegs>,
    out_w: usize,
    out_b: usize,
    // workspace: states[i][j] is the layer-i hidden state after step j
    // (index 0 is the zero initial state); gate caches are per step.
    states: Vec<Vec<Mat>>,
    gate_v: Vec<Vec<Mat>>,
    gate_r: Vec<Vec<Mat>>,
    cand: Vec<Vec<Mat>>,
    dinp: Vec<Vec<Mat>>,
    x_rev: Mat,
    scratch: Scratch,
    preds: Vec<f64>,
    resid: Vec<f64>,
    batch: usize,
}

#[derive(Default)]
struct Scratch {
    dh: Mat,
    dav: Mat,
    dar: Mat,
    dac: Mat,
    tmp: Mat,
    hr: Mat,
    dcarry: Mat,
    dcarry2: Mat,
}

impl GruModel {
    pub fn new(spec: ModelSpec) -> Self {
        let mut segs: Vec<(String, usize, usize)> = Vec::new();
        let mut layers = Vec::new();
        let mut prev = 1usize;
        for (i, &n) in spec.widths.iter().enumerate() {
            let base = segs.len();
            let l = i + 1;
            segs.push((format!("l{l}.wv"), n, n));
            segs.push((format!("l{l}.vv"), n, prev));
            segs.push((format!("l{l}.bv"), 1, n));
            segs.push((format!("l{l}.wr"), n, n));
            segs.push((format!("l{l}.vr"), n, prev));
            segs.push((format!("l{l}.br"), 1, n));
            segs.push((format!("l{l}.wx"), n, n));
            segs.push((format!("l{l}.vx"), n, prev));
            segs.push((format!("l{l}.bx"), 1, n));
            layers.push(LayerSegs {
                wv: base,
                vv: base + 1,
                bv: base + 2,
                wr: base + 3,
                vr: base + 4,
                br: base + 5,
                wx: base + 6,
                vx: base + 7,
                bx: base + 8,
            });
            prev = n;
        }
        let out_w = segs.len();
        segs.push(("w_out".to_string(), 1, prev));
        let out_b = segs.len();
        segs.push(("b_out".to_string(), 1, 1));

        let mut store = ParamStore::new(ParamLayout::new(segs));
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut prev = 1usize;
        for (i, &n) in spec.widths.iter().enumerate() {
            let segs = layers[i];
            init::orthogonal(&mut rng, n, store.seg_theta_mut(segs.wv));
            init::uniform_affine(&mut rng, prev, n, store.seg_theta_mut(segs.vv));
            store.seg_theta_mut(segs.bv).fill(1.0); // bias the update gate toward memory
            init::orthogonal(&mut rng, n, store.seg_theta_mut(segs.wr));
            init::uniform_affine(&mut rng, prev, n, store.seg_theta_mut(segs.vr));
            init::orthogonal(&mut rng, n, store.seg_theta_mut(segs.wx));
            init::uniform_affine(&mut rng, prev, n, store.seg_theta_mut(segs.vx));
            prev = n;
        }
        init::uniform_affine(&mut rng, prev, 1, store.seg_theta_mut(out_w));

        GruModel {
            spec,
            store,
            layers,
            out_w,
            out_b,
            states: Vec::new(),
            gate_v: Vec::new(),
            gate_r: Vec::new(),
            cand: Vec::new(),
            dinp: Vec::new(),
            x_rev: Mat::zeros(0, 0),
            scratch: Scratch::default(),
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

    fn input_width(&self, layer: usize) -> usize {
        if layer == 0 {
            1
        } else {
            self.spec.widths[layer - 1]
        }
    }

    pub fn predict(&self, window: &[f64]) -> f64 {
        let s = self.spec.s;
        debug_assert_eq!(window.len(), s);
        let h = self.spec.h;
        let mut state: Vec<Vec<f64>> = self.spec.widths.iter().map(|&n| vec![0.0; n]).collect();
        let mut below: Vec<f64> = vec![0.0; 1];
        let mut gates_v = Vec::new();
        let mut gates_r = Vec::new();
        let mut candidate = Vec::new();
        let mut hrbuf = Vec::new();
        for step in 0..s {
            below.clear();
            below.push(window[s - 1 - step]); // oldest sample first
            for li in 0..h {
                let n = self.spec.widths[li];
                let segs = self.layers[li];
                let wv = self.store.seg_theta(segs.wv);
                let vv = self.store.seg_theta(segs.vv);
                let bv = self.store.seg_theta(segs.bv);
                let wr = self.store.seg_theta(segs.wr);
                let vr = self.store.seg_theta(segs.vr);
                let br = self.store.seg_theta(segs.br);
                let wx = self.store.seg_theta(segs.wx);
                let vx = self.store.seg_theta(segs.vx);
                let bx = self.store.seg_theta(segs.bx);
                let m = below.len();
                gates_v.clear();
                gates_r.clear();
                candidate.clear();
                hrbuf.clear();
                let hs = &state[li];
                for k in 0..n {
                    let av = dot(&wv[k * n..(k + 1) * n], hs) + dot(&vv[k * m..(k + 1) * m], &below) + bv[k];
                    gates_v.push(sigmoid(av));
                    let ar = dot(&wr[k * n..(k + 1) * n], hs) + dot(&vr[k * m..(k + 1) * m], &below) + br[k];
                    gates_r.push(sigmoid(ar));
                }
                for k in 0..n {
                    hrbuf.push(hs[k] * gates_r[k]);
                }
                for k in 0..n {
                    let ac = dot(&wx[k * n..(k + 1) * n], &hrbuf)
                        + dot(&vx[k * m..(k + 1) * m], &below)
                        + bx[k];
                    candidate.push(ac.tanh());
                }
                let hs = &mut state[li];
                for k in 0..n {
                    hs[k] = gates_v[k] * hs[k] + (1.0 - gates_v[k]) * candidate[k];
                }
                below.clear();
                below.extend_from_slice(hs);
            }
        }
        dot(self.store.seg_theta(self.out_w), &state[h - 1]) + self.store.seg_theta(self.out_b)[0]
    }

    fn ensure_batch(&mut self, batch: usize) {
        if self.batch == batch {
            return;
        }
        let s = self.spec.s;
        let h = self.spec.h;
        self.states.clear();
        self.gate_v.clear();
        self.gate_r.clear();
        self.cand.clear();
        self.dinp.clear();
        for li in 0..h {
            let n = self.spec.widths[li];
            self.states
                .push((0..=s).map(|_| Mat::zeros(batch, n)).collect());
            self.gate_v
                .push((0..s).map(|_| Mat::zeros(batch, n)).collect());
            self.gate_r
                .push((0..s).map(|_| Mat::zeros(batch, n)).collect());
            self.cand.push((0..s).map(|_| Mat::zeros(batch, n)).collect());
            let m = self.input_width(li);
            if li > 0 {
                self.dinp
                    .push((0..s).map(|_| Mat::zeros(batch, m)).collect());
            } else {
                self.dinp.push(Vec::new());
            }
        }
        self.x_rev.resize(batch, s);
        self.batch = batch;
    }

    fn forward(&mut self, x: &Mat) {
        let batch = x.rows();
        let s = self.spec.s;
        debug_assert_eq!(x.cols(), s);
        self.ensure_batch(batch);

        // reverse each window: the model consumes samples oldest first
        for b in 0..batch {
            let src = x.row(b);
            let dst = self.x_rev.row_mut(b);
            for j in 0..s {
                dst[j] = src[s - 1 - j];
            }
        }

        for li in 0..self.spec.h {
            let n = self.spec.widths[li];
            let segs = self.layers[li];
            let (lower_states, this_states) = self.states.split_at_mut(li);
            let states = &mut this_states[0];
            states[0].fill(0.0);
            for step in 1..=s {
                let (head, tail) = states.split_at_mut(step);
                let hp = &head[step - 1];
                let hnew = &mut tail[0];

                let gv = &mut self.gate_v[li][step - 1];
                let gr = &mut self.gate_r[li][step - 1];
                let gc = &mut self.cand[li][step - 1];

                // gate pre-activations
                gv.fill(0.0);
                affine_accum(gv, hp, self.store.seg_theta(segs.wv));
                gr.fill(0.0);
                affine_accum(gr, hp, self.store.seg_theta(segs.wr));
                if li == 0 {
                    let vv = self.store.seg_theta(segs.vv);
                    let vr = self.store.seg_theta(segs.vr);
                    for b in 0..batch {
                        let u = self.x_rev.get(b, step - 1);
                        axpy(gv.row_mut(b), u, vv);
                        axpy(gr.row_mut(b), u, vr);
                    }
                } else {
                    let inp = &lower_states[li - 1][step];
                    affine_accum(gv, inp, self.store.seg_theta(segs.vv));
                    affine_accum(gr, inp, self.store.seg_theta(segs.vr));
                }
                let bv = self.store.seg_theta(segs.bv);
                let br = self.store.seg_theta(segs.br);
                for b in 0..batch {
                    for (gvk, bvk) in gv.row_mut(b).iter_mut().zip(bv.iter()) {
                        *gvk = sigmoid(*gvk + bvk);
                    }
                    for (grk, brk) in gr.row_mut(b).iter_mut().zip(br.iter()) {
                        *grk = sigmoid(*grk + brk);
                    }
                }

                // candidate: tanh(Wx (hp ⊙ r) + Vx inp + bx)
                self.scratch.hr.resize(batch, n);
                for b in 0..batch {
                    let hprow = hp.row(b);
                    let rrow = gr.row(b);
                    let hrrow = self.scratch.hr.row_mut(b);
                    for k in 0..n {
                        hrrow[k] = hprow[k] * rrow[k];
                    }
                }
                gc.fill(0.0);
                affine_accum(gc, &self.scratch.hr, self.store.seg_theta(segs.wx));
                if li == 0 {
                    let vx = self.store.seg_theta(segs.vx);
                    for b in 0..batch {
                        let u = self.x_rev.get(b, step - 1);
                        axpy(gc.row_mut(b), u, vx);
                    }
                } else {
                    let inp = &lower_states[li - 1][step];
                    affine_accum(gc, inp, self.store.seg_theta(segs.vx));
                }
                let bx = self.store.seg_theta(segs.bx);
                for b in 0..batch {
                    for (gck, bxk) in gc.row_mut(b).iter_mut().zip(bx.iter()) {
                        *gck = (*gck + bxk).tanh();
                    }
                }

                // blended state update
                for b in 0..batch {
                    let vrow = gv.row(b);
                    let crow = gc.row(b);
                    let hprow = hp.row(b);
                    let hrow = hnew.row_mut(b);
                    for k in 0..n {
                        hrow[k] = vrow[k] * hprow[k] + (1.0 - vrow[k]) * crow[k];
                    }
                }
            }
        }

        self.preds.clear();
        let w_out = self.store.seg_theta(self.out_w);
        let b_out = self.store.seg_theta(self.out_b)[0];
        let top = &self.states[self.spec.h - 1][s];
        for b in 0..batch {
            self.preds.push(dot(w_out, top.row(b)) + b_out);
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
        let ranges: Vec<LayerRanges> = self
            .layers
            .iter()
            .map(|segs| LayerRanges {
                wv: self.store.layout().seg(segs.wv).range(),
                vv: self.store.layout().seg(segs.vv).range(),
                bv: self.store.layout().seg(segs.bv).range(),
                wr: self.store.layout().seg(segs.wr).range(),
                vr: self.store.layout().seg(segs.vr).range(),
                br: self.store.layout().seg(segs.br).range(),
                wx: self.store.layout().seg(segs.wx).range(),
                vx: self.store.layout().seg(segs.vx).range(),
                bx: self.store.layout().seg(segs.bx).range(),
            })
            .collect();
        let out_w_range = self.store.layout().seg(self.out_w).range();
        let out_b_range = self.store.layout().seg(self.out_b).range();

        let (theta, grad) = self.store.theta_and_grad_mut();

        // output layer
        let top = &self.states[h - 1][s];
        for (b, &r) in self.resid.iter().enumerate() {
            axpy(&mut grad[out_w_range.clone()], r, top.row(b));
            grad[out_b_range.start] += r;
        }
        let w_out = &theta[out_w_range.clone()];

        for li in (0..h).rev() {
            let n = self.spec.widths[li];
            let m = if li == 0 { 1 } else { self.spec.widths[li - 1] };
            let rg = ranges[li].clone();
            let sc = &mut self.scratch;
            sc.dh.resize(batch, n);
            sc.dav.resize(batch, n);
            sc.dar.resize(batch, n);
            sc.dac.resize(batch, n);
            sc.tmp.resize(batch, n);
            sc.hr.resize(batch, n);
            sc.dcarry.resize(batch, n);
            sc.dcarry2.resize(batch, n);
            sc.dcarry.fill(0.0);

            for step in (1..=s).rev() {
                // total gradient on the layer state at this step
                sc.dh.data_mut().copy_from_slice(sc.dcarry.data());
                if li == h - 1 {
                    if step == s {
                        for (b, &r) in self.resid.iter().enumerate() {
                            axpy(sc.dh.row_mut(b), r, w_out);
                        }
                    }
                } else {
                    // layer above consumed this state as its input
                    let from_above = &self.dinp[li + 1][step - 1];
                    for b in 0..batch {
                        axpy(sc.dh.row_mut(b), 1.0, from_above.row(b));
                    }
                }

                let v = &self.gate_v[li][step - 1];
                let r_ = &self.gate_r[li][step - 1];
                let c = &self.cand[li][step - 1];
                let hp = &self.states[li][step - 1];

                // gate/candidate pre-activation gradients and state carry
                for b in 0..batch {
                    let dhrow = sc.dh.row(b);
                    let vrow = v.row(b);
                    let crow = c.row(b);
                    let hprow = hp.row(b);
                    let davrow = sc.dav.row_mut(b);
                    let dacrow = sc.dac.row_mut(b);
                    for k in 0..n {
                        let dv = dhrow[k] * (hprow[k] - crow[k]);
                        davrow[k] = dv * vrow[k] * (1.0 - vrow[k]);
                        let dc = dhrow[k] * (1.0 - vrow[k]);
                        dacrow[k] = dc * (1.0 - crow[k] * crow[k]);
                    }
                }
                for b in 0..batch {
                    let dhrow = sc.dh.row(b);
                    let vrow = v.row(b);
                    let dcar = sc.dcarry2.row_mut(b);
                    for k in 0..n {
                        dcar[k] = dhrow[k] * vrow[k];
                    }
                }
                // reset-gate path: tmp = dac · W_x
                backprop_input(&mut sc.tmp, &sc.dac, &theta[rg.wx.clone()], false);
                for b in 0..batch {
                    let tmprow = sc.tmp.row(b);
                    let rrow = r_.row(b);
                    let hprow = hp.row(b);
                    let darrow = sc.dar.row_mut(b);
                    let dcar = sc.dcarry2.row_mut(b);
                    for k in 0..n {
                        dcar[k] += tmprow[k] * rrow[k];
                        let dr = tmprow[k] * hprow[k];
                        darrow[k] = dr * rrow[k] * (1.0 - rrow[k]);
                    }
                }
                backprop_input(&mut sc.dcarry2, &sc.dav, &theta[rg.wv.clone()], true);
                backprop_input(&mut sc.dcarry2, &sc.dar, &theta[rg.wr.clone()], true);

                if li > 0 {
                    let dinp = &mut self.dinp[li][step - 1];
                    backprop_input(dinp, &sc.dav, &theta[rg.vv.clone()], false);
                    backprop_input(dinp, &sc.dar, &theta[rg.vr.clone()], true);
                    backprop_input(dinp, &sc.dac, &theta[rg.vx.clone()], true);
                }

                // parameter gradients
                for b in 0..batch {
                    let hprow = hp.row(b);
                    let rrow = r_.row(b);
                    let hrrow = sc.hr.row_mut(b);
                    for k in 0..n {
                        hrrow[k] = hprow[k] * rrow[k];
                    }
                }
                grad_affine(&mut grad[rg.wv.clone()], None, &sc.dav, hp);
                grad_affine(&mut grad[rg.wr.clone()], None, &sc.dar, hp);
                grad_affine(&mut grad[rg.wx.clone()], None, &sc.dac, &sc.hr);
                col_sums(&mut grad[rg.bv.clone()], &sc.dav);
                col_sums(&mut grad[rg.br.clone()], &sc.dar);
                col_sums(&mut grad[rg.bx.clone()], &sc.dac);
                if li == 0 {
                    debug_assert_eq!(m, 1);
                    let gvv = &mut grad[rg.vv.clone()];
                    for b in 0..batch {
                        axpy(gvv, self.x_rev.get(b, step - 1), sc.dav.row(b));
                    }
                    let gvr = &mut grad[rg.vr.clone()];
                    for b in 0..batch {
                        axpy(gvr, self.x_rev.get(b, step - 1), sc.dar.row(b));
                    }
                    let gvx = &mut grad[rg.vx.clone()];
                    for b in 0..batch {
                        axpy(gvx, self.x_rev.get(b, step - 1), sc.dac.row(b));
                    }
                } else {
                    let inp = &self.states[li - 1][step];
                    grad_affine(&mut grad[rg.vv.clone()], None, &sc.dav, inp);
                    grad_affine(&mut grad[rg.vr.clone()], None, &sc.dar, inp);
                    grad_affine(&mut grad[rg.vx.clone()], None, &sc.dac, inp);
                }

                std::mem::swap(&mut sc.dcarry, &mut sc.dcarry2);
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
    fn zero_input_zero_biases_yield_output_bias() {
        let mut m = GruModel::new(ModelSpec::gru(6, 2, 4, 0));
        m.store_mut().theta_mut().fill(0.0);
        let out_b = m.out_b;
        m.store_mut().seg_theta_mut(out_b)[0] = 0.77;
        // tanh(0) = 0 propagates: every candidate and state stays zero
        assert_eq!(m.predict(&[0.0; 6]), 0.77);
    }

    #[test]
    fn gates_stay_strictly_inside_unit_interval() {
        let mut m = GruModel::new(ModelSpec::gru(8, 2, 5, 3));
        let mut x = Mat::zeros(4, 8);
        for (i, v) in x.data_mut().iter_mut().enumerate() {
            *v = ((i as f64) * 1.7).sin() * 20.0; // large inputs
        }
        let mut out = Vec::new();
        m.predict_batch(&x, &mut out);
        for li in 0..2 {
            for step in 0..8 {
                for &g in m.gate_v[li][step].data() {
                    assert!(g > 0.0 && g < 1.0);
                }
                for &g in m.gate_r[li][step].data() {
                    assert!(g > 0.0 && g < 1.0);
                }
            }
        }
    }

    #[test]
    fn hidden_states_bounded_by_one() {
        // |x_j| <= max(|x_0|, 1) = 1: the blend of a bounded state and a tanh
        // candidate cannot escape the unit ball when x_0 = 0.
        let mut m = GruModel::new(ModelSpec::gru(10, 3, 6, 9));
        let mut x = Mat::zeros(3, 10);
        for (i, v) in x.data_mut().iter_mut().enumerate() {
            *v = ((i * i) as f64).cos() * 50.0;
        }
        let mut out = Vec::new();
        m.predict_batch(&x, &mut out);
        for li in 0..3 {
            for step in 0..=10 {
                for &h in m.states[li][step].data() {
                    assert!(h.abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn batch_and_single_paths_agree() {
        let s = 7;
        let mut m = GruModel::new(ModelSpec::gru(s, 2, 5, 13));
        let mut x = Mat::zeros(4, s);
        for i in 0..4 {
            for j in 0..s {
                x.set(i, j, ((i * 5 + j) as f64 * 0.33).cos());
            }
        }
        let mut out = Vec::new();
        m.predict_batch(&x, &mut out);
        for i in 0..4 {
            let single = m.predict(x.row(i));
            assert!(
                (out[i] - single).abs() < 1e-12,
                "row {i}: batch {} single {}",
                out[i],
                single
            );
        }
    }

    #[test]
    fn bptt_gradient_matches_finite_differences() {
        let s = 6;
        let batch = 5;
        for seed in [1u64, 2, 3] {
            let mut m = GruModel::new(ModelSpec::gru(s, 2, 4, seed));
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 50);
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
                    let mut probe = GruModel::new(spec.clone());
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
            assert!(err < 1e-4, "seed {seed}: BPTT gradient error {err}");
        }
    }
}
