//! Linear regression surrogate: `ŷ = W u_s + b` with `W ∈ R^{1×s}`, plus the
//! normal-equations solver that serves as the exactness oracle for
//! Adam-trained LR models.

use super::ModelSpec;
use crate::nn_core::{self, dot, Mat, ParamLayout, ParamStore};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEG_W: usize = 0;
const SEG_B: usize = 1;

pub struct LrModel {
    spec: ModelSpec,
    store: ParamStore,
    preds: Vec<f64>,
    resid: Vec<f64>,
}

impl LrModel {
    pub fn new(spec: ModelSpec) -> Self {
        let layout = ParamLayout::new(vec![
            ("w".to_string(), 1, spec.s),
            ("b".to_string(), 1, 1),
        ]);
        let mut store = ParamStore::new(layout);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        nn_core::init::uniform_affine(&mut rng, spec.s, 1, store.seg_theta_mut(SEG_W));
        LrModel {
            spec,
            store,
            preds: Vec::new(),
            resid: Vec::new(),
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
        dot(self.store.seg_theta(SEG_W), window) + self.store.seg_theta(SEG_B)[0]
    }

    pub fn predict_batch(&mut self, x: &Mat, out: &mut Vec<f64>) {
        out.clear();
        let w = self.store.seg_theta(SEG_W);
        let b = self.store.seg_theta(SEG_B)[0];
        for i in 0..x.rows() {
            out.push(dot(w, x.row(i)) + b);
        }
    }

    pub fn loss_grad_batch(&mut self, x: &Mat, y: &[f64]) -> f64 {
        let batch = x.rows();
        assert_eq!(y.len(), batch);
        self.preds.clear();
        {
            let w = self.store.seg_theta(SEG_W);
            let b = self.store.seg_theta(SEG_B)[0];
            for i in 0..batch {
                self.preds.push(dot(w, x.row(i)) + b);
            }
        }
        let mut loss = 0.0;
        self.resid.clear();
        for (p, t) in self.preds.iter().zip(y.iter()) {
            let e = p - t;
            loss += e * e;
            self.resid.push(2.0 * e / batch as f64);
        }
        let w_range = self.store.layout().seg(SEG_W).range();
        let b_range = self.store.layout().seg(SEG_B).range();
        let (_, grad) = self.store.theta_and_grad_mut();
        for (i, &r) in self.resid.iter().enumerate() {
            nn_core::axpy(&mut grad[w_range.clone()], r, x.row(i));
            grad[b_range.start] += r;
        }
        loss / batch as f64
    }
}

/// Fits `(W, b)` by ridge-stabilized normal equations over windows supplied
/// through `fill`: for each pair index `k < n`, `fill(k, buf)` writes the
/// newest-first window into `buf` and returns the target.
///
/// The jitter is `1e-10 · trace(A^T A)` added to the diagonal, just enough to
/// make near-rank-deficient window Gram matrices factorizable without moving
/// the solution at any tested precision.
pub fn lr_fit_closed_form<F>(s: usize, n: usize, mut fill: F) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(usize, &mut [f64]) -> f64,
{
    if n < s + 1 {
        return Err(Error::InvalidInput(format!(
            "closed-form LR needs at least s+1 = {} rows, got {n}",
            s + 1
        )));
    }
    let dim = s + 1;
    let mut gram = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = nalgebra::DVector::<f64>::zeros(dim);
    let mut row = vec![0.0; dim];
    for k in 0..n {
        let y = fill(k, &mut row[..s]);
        row[s] = 1.0;
        for i in 0..dim {
            rhs[i] += row[i] * y;
            for j in i..dim {
                gram[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }
    let jitter = 1e-10 * gram.trace();
    for i in 0..dim {
        gram[(i, i)] += jitter;
    }
    let chol = nalgebra::Cholesky::new(gram).ok_or_else(|| {
        Error::Numerics("normal equations rank-deficient beyond jitter rescue".to_string())
    })?;
    let beta = chol.solve(&rhs);
    let w = beta.as_slice()[..s].to_vec();
    let b = beta[s];
    Ok((w, b))
}
