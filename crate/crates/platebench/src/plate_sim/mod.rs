//! Synthetic data generator for a damped orthotropic Kirchhoff plate with
//! free edges, driven by a point force and observed through a curvature
//! sensor.
//!
//! The transverse displacement solves
//!
//! ```text
//! w_tt + α w_t + d11 w_xxxx + d22 w_yyyy + 2 (d12 + 2 d66) w_xxyy = δ_S0 u(t) / (ρ h)
//! ```
//!
//! with zero boundary force and moment on all four edges, and the output is
//! `y(t) = k · w_xx` at the sensor point. Discretization is Ritz/Galerkin in
//! a product basis of free-free beam eigenfunctions (free edges are natural
//! conditions of the weak form, so the basis satisfies no essential
//! constraints); the resulting generalized eigenproblem decouples the
//! dynamics into modal oscillators that are integrated exactly under
//! zero-order-hold input.

pub mod beam;
mod excitation;
mod integrator;
pub mod quadrature;

pub use excitation::{apply_sensor_nonlinearity, pulse_train, SensorNonlinearity};
pub use integrator::{ModalIntegrator, ModalState};

use crate::{Error, Result};
use beam::BeamBasis;
use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use quadrature::Quadrature;
use serde::{Deserialize, Serialize};

/// Physical and discretization parameters of the orthotropic plate.
///
/// Units: lengths in meters, density in kg/m³, moduli in Pa, damping in 1/s,
/// sensor gain in V·m, sampling interval in seconds. `thickness` is the
/// plate thickness (the letter `h` is reserved for hidden-layer counts
/// elsewhere in this crate).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlateConfig {
    pub ell1: f64,
    pub ell2: f64,
    pub thickness: f64,
    pub rho: f64,
    pub e1: f64,
    pub e2: f64,
    pub g: f64,
    pub nu1: f64,
    pub alpha: f64,
    pub gain_k: f64,
    pub s0: [f64; 2],
    pub sensor_pt: [f64; 2],
    pub n1: usize,
    pub n2: usize,
    pub dt: f64,
}

impl Default for PlateConfig {
    /// The 1 m × 0.5 m carbon/honeycomb sandwich panel, sampled at desk
    /// scale (3 kHz).
    fn default() -> Self {
        PlateConfig {
            ell1: 1.0,
            ell2: 0.5,
            thickness: 3.6e-3,
            rho: 505.6,
            e1: 23e9,
            e2: 14e9,
            g: 2.2e9,
            nu1: 0.25,
            alpha: 5.0,
            gain_k: 1.0,
            s0: [0.17, 0.25],
            sensor_pt: [0.5, 0.21],
            n1: 8,
            n2: 6,
            dt: 1.0 / 3000.0,
        }
    }
}

impl PlateConfig {
    /// Derived minor Poisson ratio `ν2 = ν1 E2 / E1`.
    pub fn nu2(&self) -> f64 {
        self.nu1 * self.e2 / self.e1
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ell1", self.ell1),
            ("ell2", self.ell2),
            ("thickness", self.thickness),
            ("rho", self.rho),
            ("e1", self.e1),
            ("e2", self.e2),
            ("g", self.g),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("plate.{name} must be positive, got {v}")));
            }
        }
        if !(self.nu1 > 0.0 && self.nu1 < 0.5) {
            return Err(Error::Config(format!(
                "plate.nu1 must lie in (0, 0.5), got {}",
                self.nu1
            )));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config("plate.alpha must be >= 0".into()));
        }
        if 1.0 - self.nu1 * self.nu2() <= 0.0 {
            return Err(Error::Config("1 - nu1*nu2 must be positive".into()));
        }
        for (name, pt) in [("s0", self.s0), ("sensor_pt", self.sensor_pt)] {
            if !(pt[0] > 0.0 && pt[0] < self.ell1 && pt[1] > 0.0 && pt[1] < self.ell2) {
                return Err(Error::Config(format!(
                    "plate.{name} = ({}, {}) must lie strictly inside the plate",
                    pt[0], pt[1]
                )));
            }
        }
        if self.n1 < 3 || self.n2 < 3 {
            return Err(Error::Config(
                "basis counts n1, n2 must be >= 3 (rigid pair plus one bending shape)".into(),
            ));
        }
        Ok(())
    }
}

/// Bending stiffness per unit mass, m⁴/s².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StiffnessCoeffs {
    pub d11: f64,
    pub d22: f64,
    pub d12: f64,
    pub d66: f64,
}

/// Closed-form stiffness coefficients of the orthotropic plate equation.
pub fn derive_stiffness(cfg: &PlateConfig) -> Result<StiffnessCoeffs> {
    cfg.validate()?;
    let nu2 = cfg.nu2();
    let denom = 12.0 * cfg.rho * (1.0 - cfg.nu1 * nu2);
    let h2 = cfg.thickness * cfg.thickness;
    let d11 = cfg.e1 * h2 / denom;
    Ok(StiffnessCoeffs {
        d11,
        d22: cfg.e2 * h2 / denom,
        d12: nu2 * d11,
        d66: cfg.g * h2 / (12.0 * cfg.rho),
    })
}

/// Assembled modal system: eigenvalues (1/s²) sorted ascending, mode values
/// at the actuator, sensor-point curvatures of the modes, and the force
/// scaling `1/(ρ h)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModalSystem {
    pub lambdas: Vec<f64>,
    pub phi_s0: Vec<f64>,
    pub curv_sensor: Vec<f64>,
    pub force_scale: f64,
    /// Number of (near-)zero eigenvalues; 3 for the free plate.
    pub rigid_count: usize,
}

impl ModalSystem {
    pub fn num_modes(&self) -> usize {
        self.lambdas.len()
    }
}

/// Assembly tuning. `quad_mult` scales the quadrature order (the refinement
/// oracle doubles it together with the basis counts). `freq_cutoff_hz`
/// truncates the modal set to natural frequencies at or below the cutoff
/// (rigid modes always stay): the standard band reduction when the sampled
/// output should only carry modes the discretization resolves.
#[derive(Clone, Copy, Debug)]
pub struct AssemblyOptions {
    pub quad_mult: f64,
    pub freq_cutoff_hz: Option<f64>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            quad_mult: 1.0,
            freq_cutoff_hz: None,
        }
    }
}

/// Per-direction quadrature order: generous enough to integrate products of
/// beam-function second derivatives to near machine precision (the bound
/// `2·(max wavenumber index) + 2` is the floor, not the default).
fn quad_points(basis_count: usize, mult: f64) -> usize {
    let base = 4 * basis_count + 10;
    ((base as f64) * mult).ceil() as usize
}

struct Gram1d {
    a0: DMatrix<f64>,
    a1: DMatrix<f64>,
    a2: DMatrix<f64>,
    /// `c[a][b] = ∫ X_a'' X_b`, not symmetric.
    c: DMatrix<f64>,
}

fn gram_matrices(basis: &BeamBasis, quad: &Quadrature) -> Gram1d {
    let n = basis.count();
    let nq = quad.len();
    let mut val = vec![vec![0.0; nq]; n];
    let mut d1 = vec![vec![0.0; nq]; n];
    let mut d2 = vec![vec![0.0; nq]; n];
    for i in 0..n {
        for (q, &x) in quad.nodes.iter().enumerate() {
            let (f, f1, f2) = basis.eval(i, x);
            val[i][q] = f;
            d1[i][q] = f1;
            d2[i][q] = f2;
        }
    }
    let mut a0 = DMatrix::zeros(n, n);
    let mut a1 = DMatrix::zeros(n, n);
    let mut a2 = DMatrix::zeros(n, n);
    let mut c = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut s0 = 0.0;
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            let mut sc = 0.0;
            for q in 0..nq {
                let w = quad.weights[q];
                s0 += w * val[a][q] * val[b][q];
                s1 += w * d1[a][q] * d1[b][q];
                s2 += w * d2[a][q] * d2[b][q];
                sc += w * d2[a][q] * val[b][q];
            }
            a0[(a, b)] = s0;
            a1[(a, b)] = s1;
            a2[(a, b)] = s2;
            c[(a, b)] = sc;
        }
    }
    Gram1d { a0, a1, a2, c }
}

/// Assembles mass and stiffness Gram matrices of the product basis, solves
/// the generalized symmetric eigenproblem `K q = λ M q`, and evaluates the
/// mass-orthonormal modes at the actuator and sensor points.
pub fn assemble_modal_system(cfg: &PlateConfig) -> Result<ModalSystem> {
    assemble_modal_system_with(cfg, &AssemblyOptions::default())
}

pub fn assemble_modal_system_with(
    cfg: &PlateConfig,
    opts: &AssemblyOptions,
) -> Result<ModalSystem> {
    let stiff = derive_stiffness(cfg)?;
    let quad_x = Quadrature::on_interval(quad_points(cfg.n1, opts.quad_mult), cfg.ell1);
    let quad_y = Quadrature::on_interval(quad_points(cfg.n2, opts.quad_mult), cfg.ell2);
    let basis_x = BeamBasis::new(cfg.ell1, cfg.n1, &quad_x);
    let basis_y = BeamBasis::new(cfg.ell2, cfg.n2, &quad_y);
    let gx = gram_matrices(&basis_x, &quad_x);
    let gy = gram_matrices(&basis_y, &quad_y);

    let n1 = cfg.n1;
    let n2 = cfg.n2;
    let dim = n1 * n2;
    let mut k_mat = DMatrix::zeros(dim, dim);
    let mut m_mat = DMatrix::zeros(dim, dim);
    // weak form of the bending operator:
    // ∫ d11 w_xx v_xx + d22 w_yy v_yy + d12 (w_xx v_yy + w_yy v_xx) + 4 d66 w_xy v_xy
    for m in 0..n1 {
        for n in 0..n2 {
            let row = m * n2 + n;
            for p in 0..n1 {
                for q in 0..n2 {
                    let col = p * n2 + q;
                    let k = stiff.d11 * gx.a2[(m, p)] * gy.a0[(n, q)]
                        + stiff.d22 * gx.a0[(m, p)] * gy.a2[(n, q)]
                        + stiff.d12 * (gx.c[(m, p)] * gy.c[(q, n)] + gx.c[(p, m)] * gy.c[(n, q)])
                        + 4.0 * stiff.d66 * gx.a1[(m, p)] * gy.a1[(n, q)];
                    k_mat[(row, col)] = k;
                    m_mat[(row, col)] = gx.a0[(m, p)] * gy.a0[(n, q)];
                }
            }
        }
    }

    // symmetric by construction; a violation means the quadrature broke down
    let mut k_asym = 0.0f64;
    let mut k_scale = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            k_asym = k_asym.max((k_mat[(i, j)] - k_mat[(j, i)]).abs());
            k_scale = k_scale.max(k_mat[(i, j)].abs());
        }
    }
    if k_asym > 1e-8 * k_scale {
        return Err(Error::Numerics(format!(
            "stiffness asymmetry {k_asym:e} exceeds 1e-8 of scale {k_scale:e}; quadrature order insufficient"
        )));
    }

    // reduce via the near-identity mass factorization M = L Lᵀ
    let chol = Cholesky::new(m_mat)
        .ok_or_else(|| Error::Numerics("mass matrix not positive definite".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&k_mat)
        .ok_or_else(|| Error::Numerics("singular mass factor".into()))?;
    let b = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Numerics("singular mass factor".into()))?;
    let b_sym = (&b + b.transpose()) * 0.5;
    let eig = SymmetricEigen::new(b_sym);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("eigenvalues are finite")
    });

    let lam_max = order
        .iter()
        .map(|&i| eig.eigenvalues[i])
        .fold(0.0f64, f64::max);
    let tol = 1e-6 * lam_max;
    let mut lambdas = Vec::with_capacity(dim);
    let mut rigid_count = 0;
    for &i in &order {
        let lam = eig.eigenvalues[i];
        if lam < -tol {
            return Err(Error::Numerics(format!(
                "negative eigenvalue {lam:e} beyond roundoff tolerance {tol:e}"
            )));
        }
        if lam < tol {
            lambdas.push(0.0);
            rigid_count += 1;
        } else {
            lambdas.push(lam);
        }
    }
    if rigid_count != 3 {
        return Err(Error::Numerics(format!(
            "free plate must have a 3-dimensional rigid subspace, found {rigid_count}"
        )));
    }

    // back-transform eigenvectors to mass-orthonormal modal shapes V = L^{-T} U
    let lt = l.transpose();

    // basis values at the actuator and sensor points
    let fx_s0: Vec<f64> = (0..n1).map(|m| basis_x.eval(m, cfg.s0[0]).0).collect();
    let fy_s0: Vec<f64> = (0..n2).map(|n| basis_y.eval(n, cfg.s0[1]).0).collect();
    let fx_sens_d2: Vec<f64> = (0..n1)
        .map(|m| basis_x.eval(m, cfg.sensor_pt[0]).2)
        .collect();
    let fy_sens: Vec<f64> = (0..n2).map(|n| basis_y.eval(n, cfg.sensor_pt[1]).0).collect();

    let mut phi_s0 = Vec::with_capacity(dim);
    let mut curv_sensor = Vec::with_capacity(dim);
    for &i in &order {
        let u = eig.eigenvectors.column(i).clone_owned();
        let v = lt
            .solve_upper_triangular(&u)
            .ok_or_else(|| Error::Numerics("singular mass factor".into()))?;
        let mut at_s0 = 0.0;
        let mut curv = 0.0;
        for m in 0..n1 {
            for n in 0..n2 {
                let coef = v[m * n2 + n];
                at_s0 += coef * fx_s0[m] * fy_s0[n];
                curv += coef * fx_sens_d2[m] * fy_sens[n];
            }
        }
        phi_s0.push(at_s0);
        curv_sensor.push(curv);
    }

    Ok(ModalSystem {
        lambdas,
        phi_s0,
        curv_sensor,
        force_scale: 1.0 / (cfg.rho * cfg.thickness),
        rigid_count,
    })
}

/// Synchronized input/output record at a fixed sampling interval.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, u: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if u.len() != y.len() || u.is_empty() {
            return Err(Error::InvalidInput(
                "time series needs equal-length, nonempty u and y".into(),
            ));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("time series needs dt > 0".into()));
        }
        Ok(TimeSeries { t0, dt, u, y })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn time_at(&self, idx: usize) -> f64 {
        self.t0 + idx as f64 * self.dt
    }
}

/// Integrates the forced response from rest; `y[j]` is the sensor output at
/// `t_j` before the input sample `u[j]` acts on `[t_j, t_{j+1})`.
pub fn simulate(sys: &ModalSystem, cfg: &PlateConfig, u: &[f64]) -> Result<TimeSeries> {
    simulate_from(sys, cfg, u, ModalState::zeros(sys.num_modes()))
}

/// Same as [`simulate`] but starting from a given modal state.
pub fn simulate_from(
    sys: &ModalSystem,
    cfg: &PlateConfig,
    u: &[f64],
    init: ModalState,
) -> Result<TimeSeries> {
    let (series, _) = run_sim(sys, cfg, u, init, false)?;
    Ok(series)
}

/// Variant that also returns the modal state at every sample, for energy
/// diagnostics and tests. Memory scales with `modes × samples`; intended for
/// short records.
pub fn simulate_with_states(
    sys: &ModalSystem,
    cfg: &PlateConfig,
    u: &[f64],
    init: ModalState,
) -> Result<(TimeSeries, Vec<ModalState>)> {
    run_sim(sys, cfg, u, init, true)
}

fn run_sim(
    sys: &ModalSystem,
    cfg: &PlateConfig,
    u: &[f64],
    mut state: ModalState,
    keep_states: bool,
) -> Result<(TimeSeries, Vec<ModalState>)> {
    if u.is_empty() {
        return Err(Error::InvalidInput("empty input signal".into()));
    }
    if state.q.len() != sys.num_modes() {
        return Err(Error::InvalidInput("initial state size mismatch".into()));
    }
    let integ = ModalIntegrator::new(sys, cfg.alpha, cfg.gain_k, cfg.dt);
    let mut y = Vec::with_capacity(u.len());
    let mut states = Vec::new();
    if keep_states {
        states.reserve(u.len());
    }
    for (j, &uj) in u.iter().enumerate() {
        let out = integ.output(&state);
        if !out.is_finite() {
            return Err(Error::Numerics(format!(
                "non-finite response at sample {j}; check stiffness scaling and dt"
            )));
        }
        y.push(out);
        if keep_states {
            states.push(state.clone());
        }
        integ.step(&mut state, uj);
    }
    if !state.is_finite() {
        return Err(Error::Numerics("non-finite final state".into()));
    }
    let series = TimeSeries::new(0.0, cfg.dt, u.to_vec(), y)?;
    Ok((series, states))
}

/// Flexural modal energy `Σ_{λ>0} (q̇² + λ q²)/2` of a state.
pub fn flexural_energy(sys: &ModalSystem, state: &ModalState) -> f64 {
    let mut e = 0.0;
    for (k, &lam) in sys.lambdas.iter().enumerate() {
        if lam > 0.0 {
            e += 0.5 * (state.v[k] * state.v[k] + lam * state.q[k] * state.q[k]);
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> PlateConfig {
        PlateConfig {
            n1: 5,
            n2: 4,
            ..PlateConfig::default()
        }
    }

    #[test]
    fn stiffness_matches_hand_computed_values() {
        let cfg = PlateConfig::default();
        let s = derive_stiffness(&cfg).unwrap();
        // d11 = E1 h² / (12 ρ (1 − ν1 ν2)) with the panel parameters,
        // evaluated by calculator: 2.9808e5 / 5836.3826 = 51.0727...
        assert!((s.d11 - 51.0727).abs() < 5e-3, "d11 = {}", s.d11);
        assert!((s.d11 - 51.1).abs() < 0.05);
        // d12 / d11 = ν2 by definition
        assert!((s.d12 / s.d11 - cfg.nu2()).abs() < 1e-12);
        // equal moduli give equal bending stiffness
        let iso = PlateConfig {
            e2: cfg.e1,
            ..cfg.clone()
        };
        let si = derive_stiffness(&iso).unwrap();
        assert_eq!(si.d11, si.d22);
    }

    #[test]
    fn stiffness_rejects_unphysical_poisson_coupling() {
        // nu1 * nu2 = nu1² E2/E1 > 1
        let cfg = PlateConfig {
            nu1: 0.49,
            e1: 1e9,
            e2: 9e9,
            ..PlateConfig::default()
        };
        assert!(derive_stiffness(&cfg).is_err());
    }

    #[test]
    fn config_validation_catches_bad_points() {
        let mut cfg = PlateConfig {
            s0: [1.5, 0.2],
            ..PlateConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg = PlateConfig {
            sensor_pt: [0.5, 0.0],
            ..PlateConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg = PlateConfig {
            n1: 2,
            ..PlateConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn modal_system_has_three_rigid_modes_and_sorted_spectrum() {
        let sys = assemble_modal_system(&small_cfg()).unwrap();
        assert_eq!(sys.rigid_count, 3);
        assert_eq!(sys.num_modes(), 20);
        for w in sys.lambdas.windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert_eq!(sys.lambdas[0], 0.0);
        assert_eq!(sys.lambdas[2], 0.0);
        assert!(sys.lambdas[3] > 0.0);
    }

    #[test]
    fn isotropic_first_eigenvalue_converges_under_refinement() {
        // isotropic reduction on a square plate, checked against the same
        // assembly at doubled basis and quadrature resolution
        let e = 10e9;
        let nu = 0.3;
        let base = PlateConfig {
            ell1: 0.6,
            ell2: 0.6,
            e1: e,
            e2: e,
            g: e / (2.0 * (1.0 + nu)),
            nu1: nu,
            s0: [0.2, 0.17],
            sensor_pt: [0.31, 0.4],
            n1: 6,
            n2: 6,
            ..PlateConfig::default()
        };
        let coarse = assemble_modal_system(&base).unwrap();
        let fine_cfg = PlateConfig {
            n1: 12,
            n2: 12,
            ..base
        };
        let fine =
            assemble_modal_system_with(&fine_cfg, &AssemblyOptions { quad_mult: 2.0 }).unwrap();
        let lam_c = coarse.lambdas[3];
        let lam_f = fine.lambdas[3];
        let rel = (lam_c - lam_f).abs() / lam_f;
        assert!(rel < 0.01, "first elastic eigenvalue off by {rel}");
        // Ritz is variational: refinement can only lower the eigenvalue
        assert!(lam_f <= lam_c * (1.0 + 1e-12));
    }

    #[test]
    fn zero_input_from_rest_stays_zero() {
        let cfg = small_cfg();
        let sys = assemble_modal_system(&cfg).unwrap();
        let series = simulate(&sys, &cfg, &vec![0.0; 500]).unwrap();
        assert!(series.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn free_decay_energy_never_increases() {
        let cfg = small_cfg();
        let sys = assemble_modal_system(&cfg).unwrap();
        let mut init = ModalState::zeros(sys.num_modes());
        for k in 0..sys.num_modes() {
            init.q[k] = if sys.lambdas[k] > 0.0 { 1e-4 } else { 0.0 };
            init.v[k] = 1e-3;
        }
        let (_series, states) = simulate_with_states(&sys, &cfg, &vec![0.0; 2000], init).unwrap();
        let mut prev = f64::INFINITY;
        for st in &states {
            let e = flexural_energy(&sys, st);
            assert!(
                e <= prev * (1.0 + 1e-12) + 1e-300,
                "energy grew: {e} > {prev}"
            );
            prev = e;
        }
    }

    #[test]
    fn response_is_linear_and_superposable() {
        let cfg = small_cfg();
        let sys = assemble_modal_system(&cfg).unwrap();
        let n = 1500;
        let u1 = pulse_train(1.0, 0.1, 2, n, cfg.dt).unwrap();
        let u2: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.01).sin() * 0.3).collect();
        let y1 = simulate(&sys, &cfg, &u1).unwrap().y;
        let y2 = simulate(&sys, &cfg, &u2).unwrap().y;
        let scaled: Vec<f64> = u1.iter().map(|v| v * 3.5).collect();
        let y_scaled = simulate(&sys, &cfg, &scaled).unwrap().y;
        let summed: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
        let y_sum = simulate(&sys, &cfg, &summed).unwrap().y;

        let scale = y1
            .iter()
            .chain(&y2)
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        for j in 0..n {
            assert!((y_scaled[j] - 3.5 * y1[j]).abs() <= 1e-10 * 3.5 * scale);
            assert!((y_sum[j] - (y1[j] + y2[j])).abs() <= 2e-10 * scale);
        }
    }

    #[test]
    fn halved_step_reproduces_the_same_samples() {
        // the input is piecewise constant over the coarse grid, so the exact
        // transition at dt/2 lands on identical states at the coarse samples
        let cfg = small_cfg();
        let sys = assemble_modal_system(&cfg).unwrap();
        let n = 900;
        let u = pulse_train(2.0, 0.05, 3, n, cfg.dt).unwrap();
        let coarse = simulate(&sys, &cfg, &u).unwrap().y;

        let fine_cfg = PlateConfig {
            dt: cfg.dt / 2.0,
            ..cfg.clone()
        };
        let mut u_fine = Vec::with_capacity(2 * n);
        for &v in &u {
            u_fine.push(v);
            u_fine.push(v);
        }
        let fine = simulate(&sys, &fine_cfg, &u_fine).unwrap().y;
        let scale = coarse.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for j in 0..n {
            assert!(
                (coarse[j] - fine[2 * j]).abs() <= 1e-6 * scale,
                "sample {j}: {} vs {}",
                coarse[j],
                fine[2 * j]
            );
        }
    }

    #[test]
    fn refined_basis_reproduces_output() {
        // convergence guard from the module contract: R² between outputs at
        // (n1, n2) and (n1+2, n2+2) must exceed 0.99 on the default config
        let cfg = PlateConfig::default();
        let sys = assemble_modal_system(&cfg).unwrap();
        let refined_cfg = PlateConfig {
            n1: cfg.n1 + 2,
            n2: cfg.n2 + 2,
            ..cfg.clone()
        };
        let sys_ref = assemble_modal_system(&refined_cfg).unwrap();
        let n = 9000; // 3 s at the desk rate
        let u = pulse_train(1.0, 2.0, 1, n, cfg.dt).unwrap();
        let y0 = simulate(&sys, &cfg, &u).unwrap().y;
        let y1 = simulate(&sys_ref, &refined_cfg, &u).unwrap().y;
        let r2 = crate::evaluator::r2_score(&y1, &y0).unwrap();
        assert!(r2 > 0.99, "basis-refinement R² = {r2}");
    }
}
