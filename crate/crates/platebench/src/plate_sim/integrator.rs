//! Exact zero-order-hold discretization of the decoupled modal oscillators
//!
//! ```text
//! q̈_k + α q̇_k + λ_k q_k = g_k u(t),    u constant over each sample
//! ```
//!
//! For each mode the one-step transition is precomputed in closed form, with
//! distinct branches for elastic modes (under-, over- and near-critically
//! damped) and the rigid λ = 0 pair. Stepping is then two fused
//! multiply-adds per mode per sample, and the discrete trajectory samples the
//! continuous solution exactly (up to roundoff) for piecewise-constant input.

use super::ModalSystem;

/// Per-mode one-step transition: state update
/// `q⁺ = c q + s v + bq u`, `v⁺ = cp q + sp v + bv u`.
#[derive(Clone, Copy, Debug)]
struct StepCoeffs {
    c: f64,
    s: f64,
    cp: f64,
    sp: f64,
    bq: f64,
    bv: f64,
}

/// Modal displacement/velocity state.
#[derive(Clone, Debug)]
pub struct ModalState {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
}

impl ModalState {
    pub fn zeros(num_modes: usize) -> Self {
        ModalState {
            q: vec![0.0; num_modes],
            v: vec![0.0; num_modes],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

/// `(1 - e^{-z}) / z`, accurate for all `z >= 0`.
fn phi1(z: f64) -> f64 {
    if z < 1e-4 {
        1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0 + z * z * z * z / 120.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `(z - 1 + e^{-z}) / z²`, accurate for all `z >= 0`.
fn phi2(z: f64) -> f64 {
    if z < 1e-4 {
        0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0 + z * z * z * z / 720.0
    } else {
        (z + (-z).exp_m1()) / (z * z)
    }
}

fn coeffs_for_mode(lambda: f64, alpha: f64, dt: f64, g: f64) -> StepCoeffs {
    if lambda == 0.0 {
        // rigid mode: q̈ + α q̇ = g u
        if alpha == 0.0 {
            StepCoeffs {
                c: 1.0,
                s: dt,
                cp: 0.0,
                sp: 1.0,
                bq: g * dt * dt * 0.5,
                bv: g * dt,
            }
        } else {
            let z = alpha * dt;
            StepCoeffs {
                c: 1.0,
                s: dt * phi1(z),
                cp: 0.0,
                sp: (-z).exp(),
                bq: g * dt * dt * phi2(z),
                bv: g * dt * phi1(z),
            }
        }
    } else {
        let zeta = 0.5 * alpha;
        let disc = zeta * zeta - lambda;
        // C and S solve the undriven ODE with (C,S)(0) = (1,0), (C',S')(0) = (0,1)
        // for the shifted variable; a unified series covers the critical region.
        let (big_c, big_s) = if disc.abs() * dt * dt < 1e-8 {
            let d = disc;
            let t2 = dt * dt;
            let s = dt * (1.0 + d * t2 / 6.0 + d * d * t2 * t2 / 120.0);
            let c = 1.0 + d * t2 / 2.0 + d * d * t2 * t2 / 24.0;
            (c, s)
        } else if disc > 0.0 {
            let kappa = disc.sqrt();
            ((kappa * dt).cosh(), (kappa * dt).sinh() / kappa)
        } else {
            let omega = (-disc).sqrt();
            ((omega * dt).cos(), (omega * dt).sin() / omega)
        };
        let e = (-zeta * dt).exp();
        let c = e * (big_c + zeta * big_s);
        let s = e * big_s;
        let cp = -lambda * s;
        let sp = e * (big_c - zeta * big_s);
        StepCoeffs {
            c,
            s,
            cp,
            sp,
            bq: (1.0 - c) * g / lambda,
            bv: s * g,
        }
    }
}

/// Precomputed exact-transition stepper for a modal system at a fixed `dt`.
pub struct ModalIntegrator {
    coeffs: Vec<StepCoeffs>,
    curv: Vec<f64>,
    gain: f64,
}

impl ModalIntegrator {
    pub fn new(sys: &ModalSystem, alpha: f64, gain: f64, dt: f64) -> Self {
        let coeffs = sys
            .lambdas
            .iter()
            .zip(&sys.phi_s0)
            .map(|(&lam, &phi)| coeffs_for_mode(lam, alpha, dt, phi * sys.force_scale))
            .collect();
        ModalIntegrator {
            coeffs,
            curv: sys.curv_sensor.clone(),
            gain,
        }
    }

    /// Sensor output for the current state.
    pub fn output(&self, state: &ModalState) -> f64 {
        let mut y = 0.0;
        for (ck, qk) in self.curv.iter().zip(state.q.iter()) {
            y += ck * qk;
        }
        self.gain * y
    }

    /// Advances the state by one sample with input `u` held over the step.
    pub fn step(&self, state: &mut ModalState, u: f64) {
        for (k, co) in self.coeffs.iter().enumerate() {
            let q = state.q[k];
            let v = state.v[k];
            state.q[k] = co.c * q + co.s * v + co.bq * u;
            state.v[k] = co.cp * q + co.sp * v + co.bv * u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_mode_system(lambda: f64) -> ModalSystem {
        ModalSystem {
            lambdas: vec![lambda],
            phi_s0: vec![1.0],
            curv_sensor: vec![1.0],
            force_scale: 1.0,
            rigid_count: usize::from(lambda == 0.0),
        }
    }

    #[test]
    fn undamped_oscillator_tracks_closed_form_over_many_steps() {
        // post-impulse state (q, q̇) = (0, 1): q(t) = sin(ωt)/ω exactly
        let omega = 12.0;
        let sys = single_mode_system(omega * omega);
        let dt = 1e-3;
        let integ = ModalIntegrator::new(&sys, 0.0, 1.0, dt);
        let mut state = ModalState::zeros(1);
        state.v[0] = 1.0;
        let mut worst = 0.0f64;
        for j in 0..10_000usize {
            let t = j as f64 * dt;
            let exact = (omega * t).sin() / omega;
            let rel = (state.q[0] - exact).abs() / (1.0 / omega);
            worst = worst.max(rel);
            integ.step(&mut state, 0.0);
        }
        assert!(worst < 1e-9, "worst relative error {worst}");
    }

    #[test]
    fn overdamped_mode_decays_monotonically() {
        let sys = single_mode_system(4.0); // ω = 2, α = 10 → heavily overdamped
        let integ = ModalIntegrator::new(&sys, 10.0, 1.0, 1e-2);
        let mut state = ModalState::zeros(1);
        state.q[0] = 1.0;
        let mut prev = state.q[0];
        for _ in 0..2000 {
            integ.step(&mut state, 0.0);
            assert!(state.q[0] <= prev + 1e-15);
            assert!(state.q[0] >= 0.0);
            prev = state.q[0];
        }
        assert!(state.q[0] < 1e-6);
    }

    #[test]
    fn near_critical_series_matches_neighbouring_branches() {
        // sweep the discriminant through zero: the transition must be smooth
        let alpha = 4.0;
        let dt = 1e-3;
        let mut last = None;
        for k in -4..=4 {
            let lambda = 4.0 + k as f64 * 1e-4; // ζ² = 4
            let co = coeffs_for_mode(lambda, alpha, dt, 1.0);
            if let Some(prev) = last {
                let d: f64 = co.c - prev;
                assert!(d.abs() < 1e-8);
            }
            last = Some(co.c);
        }
    }

    #[test]
    fn rigid_mode_matches_constant_acceleration() {
        let sys = single_mode_system(0.0);
        let dt = 0.01;
        let integ = ModalIntegrator::new(&sys, 0.0, 1.0, dt);
        let mut state = ModalState::zeros(1);
        for _ in 0..100 {
            integ.step(&mut state, 2.0);
        }
        let t = 1.0;
        assert!((state.q[0] - 2.0 * t * t / 2.0).abs() < 1e-12);
        assert!((state.v[0] - 2.0 * t).abs() < 1e-12);
    }

    #[test]
    fn damped_rigid_mode_reaches_terminal_velocity() {
        let sys = single_mode_system(0.0);
        let alpha = 5.0;
        let integ = ModalIntegrator::new(&sys, alpha, 1.0, 1e-3);
        let mut state = ModalState::zeros(1);
        for _ in 0..20_000 {
            integ.step(&mut state, 3.0);
        }
        // v∞ = g u / α
        assert!((state.v[0] - 3.0 / alpha).abs() < 1e-9);
    }

    #[test]
    fn phi_functions_match_series_at_branch_point() {
        for &z in &[9.9e-5, 1.01e-4] {
            assert!((phi1(z) - (1.0 - z / 2.0 + z * z / 6.0)).abs() < 1e-12);
            assert!((phi2(z) - (0.5 - z / 6.0 + z * z / 24.0)).abs() < 1e-12);
        }
    }
}
