//! Central finite-difference gradient verification. This is the correctness
//! oracle for every hand-written backward pass in the crate: it only needs
//! the loss as a black-box function of the flat parameter vector, so it stays
//! independent of the backprop code it checks.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct GradCheckOptions {
    /// Per-coordinate step is `step_scale * (1 + |theta_i|)`.
    pub step_scale: f64,
    /// Check at most this many coordinates (seeded sample); `None` checks all.
    pub max_coords: Option<usize>,
    /// Seed for the coordinate sample.
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step_scale: 1e-5,
            max_coords: None,
            seed: 0,
        }
    }
}

/// Returns the maximum relative discrepancy between `analytic` and central
/// finite differences of `f` at `theta0`.
///
/// The discrepancy for one coordinate is `|fd - an| / max(|fd| + |an|, 1e-3)`;
/// the absolute floor keeps coordinates whose true gradient is numerically
/// zero from turning roundoff into spurious relative error.
pub fn check_gradient<F>(
    mut f: F,
    theta0: &[f64],
    analytic: &[f64],
    opts: &GradCheckOptions,
) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(theta0.len(), analytic.len());
    let p = theta0.len();
    let coords: Vec<usize> = match opts.max_coords {
        Some(k) if k < p => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut idx = sample(&mut rng, p, k).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..p).collect(),
    };

    let mut theta = theta0.to_vec();
    let mut worst = 0.0f64;
    for &i in &coords {
        let h = opts.step_scale * (1.0 + theta0[i].abs());
        let saved = theta[i];
        theta[i] = saved + h;
        let fp = f(&theta);
        theta[i] = saved - h;
        let fm = f(&theta);
        theta[i] = saved;
        let fd = (fp - fm) / (2.0 * h);
        let denom = (fd.abs() + analytic[i].abs()).max(1e-3);
        let rel = (fd - analytic[i]).abs() / denom;
        if rel > worst {
            worst = rel;
        }
    }
    worst
}
