//! Irregular-sea surge models.
//!
//! * **colored**: the full superposition force `sum F_i sin(omega_i t - k_i x + eps_i)`;
//! * **approx**: every `k_i` replaced by the peak wavenumber, so the force is
//!   `cos(k_WP x) F_Ws(t) - sin(k_WP x) F_Wc(t)`;
//! * **white**: `F_Ws`, `F_Wc` replaced by independent white noises of
//!   intensity `D_1^2`, `D_2^2`, giving the Itô SDE
//!   `dx = mu dt + Sigma dW` (the Wong–Zakai drift correction of its
//!   Stratonovich form vanishes identically).

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::seaway::WaveRealization;
use crate::ship_model::{OperatingPoint, ShipParams};
use crate::surge::{integrate_rk4, Forcing, Recorder, SurgeModel, SurgeState, Trajectory};

/// Minimum RK4 steps per period of the highest synthesized component.
pub const MIN_STEPS_PER_SHORTEST_PERIOD: f64 = 20.0;
/// Upper bound on dt * alpha_1 / (m + m_x) for Euler–Maruyama.
pub const MAX_EM_RELAXATION_STEP: f64 = 0.1;
/// Blow-up guard in multiples of the peak-wave celerity.
pub const GUARD_CELERITIES: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Colored,
    Approx,
    White,
}

impl std::str::FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "colored" => Ok(SystemKind::Colored),
            "approx" => Ok(SystemKind::Approx),
            "white" => Ok(SystemKind::White),
            other => Err(Error::Config(format!(
                "unknown system `{other}` (expected colored, approx or white)"
            ))),
        }
    }
}

impl std::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SystemKind::Colored => "colored",
            SystemKind::Approx => "approx",
            SystemKind::White => "white",
        })
    }
}

/// Time stepping of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    /// Keep every `record_stride`-th state.
    pub record_stride: usize,
    /// |u_S| limit; `None` means five peak-wave celerities.
    pub guard: Option<f64>,
}

impl SimConfig {
    pub fn new(horizon: f64, dt: f64) -> Self {
        SimConfig {
            horizon,
            dt,
            record_stride: 1,
            guard: None,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn steps(&self) -> u64 {
        (self.horizon / self.dt).round() as u64
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!(
                "need horizon > 0 and dt > 0, got horizon {} dt {}",
                self.horizon, self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride must be at least 1"));
        }
        Ok(())
    }

    fn guard_or(&self, celerity: f64) -> f64 {
        self.guard.unwrap_or(GUARD_CELERITIES * celerity)
    }
}

/// Full superposition force of a realization.
pub struct ColoredForce<'a>(pub &'a WaveRealization);

impl Forcing for ColoredForce<'_> {
    type Slice = f64;

    fn slice(&self, t: f64) -> f64 {
        t
    }

    fn force(&self, t: &f64, x: f64) -> f64 {
        self.0.wave_force(*t, x)
    }
}

/// Representative-wavenumber force built from the quadratures F_Ws, F_Wc.
pub struct ApproxForce<'a>(pub &'a WaveRealization);

impl Forcing for ApproxForce<'_> {
    type Slice = (f64, f64);

    fn slice(&self, t: f64) -> (f64, f64) {
        self.0.split_force(t)
    }

    fn force(&self, &(fs, fc): &(f64, f64), x: f64) -> f64 {
        let (sin, cos) = (self.0.k_wp * x).sin_cos();
        cos * fs - sin * fc
    }
}

fn check_resolution(r: &WaveRealization, dt: f64) -> Result<()> {
    let w_hi = r.omega.iter().copied().fold(0.0, f64::max);
    if w_hi > 0.0 && dt > 2.0 * PI / w_hi / MIN_STEPS_PER_SHORTEST_PERIOD {
        return Err(Error::invalid(format!(
            "dt = {dt} s under-resolves the highest component ({w_hi:.4} rad/s); \
             need dt <= {:.6} s",
            2.0 * PI / w_hi / MIN_STEPS_PER_SHORTEST_PERIOD
        )));
    }
    Ok(())
}

/// Streams the colored system through `visit` (every step).
pub fn run_colored<V: FnMut(&SurgeState)>(
    model: &SurgeModel,
    r: &WaveRealization,
    ic: SurgeState,
    cfg: &SimConfig,
    visit: V,
) -> Result<SurgeState> {
    cfg.validate()?;
    check_resolution(r, cfg.dt)?;
    let guard = cfg.guard_or(r.peak_celerity());
    integrate_rk4(model, &ColoredForce(r), ic, cfg.dt, cfg.steps(), guard, visit)
}

/// Streams the representative-wavenumber system through `visit`.
pub fn run_approx<V: FnMut(&SurgeState)>(
    model: &SurgeModel,
    r: &WaveRealization,
    ic: SurgeState,
    cfg: &SimConfig,
    visit: V,
) -> Result<SurgeState> {
    cfg.validate()?;
    check_resolution(r, cfg.dt)?;
    let guard = cfg.guard_or(r.peak_celerity());
    integrate_rk4(model, &ApproxForce(r), ic, cfg.dt, cfg.steps(), guard, visit)
}

/// RK4 solution of the surge equation under the full superposition force.
pub fn simulate_colored(
    p: &ShipParams,
    op: &OperatingPoint,
    r: &WaveRealization,
    ic: SurgeState,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    let mut rec = Recorder::new(cfg.record_stride, (cfg.steps() as usize) / cfg.record_stride.max(1) + 1);
    run_colored(&SurgeModel::from_ship(p, op), r, ic, cfg, |s| rec.visit(s))?;
    Ok(rec.trajectory)
}

/// RK4 solution under the representative-wavenumber force.
pub fn simulate_approx(
    p: &ShipParams,
    op: &OperatingPoint,
    r: &WaveRealization,
    ic: SurgeState,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    let mut rec = Recorder::new(cfg.record_stride, (cfg.steps() as usize) / cfg.record_stride.max(1) + 1);
    run_approx(&SurgeModel::from_ship(p, op), r, ic, cfg, |s| rec.visit(s))?;
    Ok(rec.trajectory)
}

/// White-noise intensities of the two force quadratures (N s^1/2 each).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseIntensity {
    pub d1: f64,
    pub d2: f64,
}

impl NoiseIntensity {
    pub fn new(d1: f64, d2: f64) -> Result<Self> {
        if !(d1 >= 0.0 && d2 >= 0.0 && d1.is_finite() && d2.is_finite()) {
            return Err(Error::invalid(format!(
                "noise intensities must be finite and >= 0, got ({d1}, {d2})"
            )));
        }
        Ok(NoiseIntensity { d1, d2 })
    }

    /// Equal split D_1 = D_2 = D / sqrt(2) of a total D^2.
    pub fn from_total(d_squared: f64) -> Result<Self> {
        let d = (0.5 * d_squared).sqrt();
        Self::new(d, d)
    }

    /// D^2 = D_1^2 + D_2^2.
    pub fn d_squared(&self) -> f64 {
        self.d1 * self.d1 + self.d2 * self.d2
    }
}

/// How the white-noise intensity is derived from a colored realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum NoiseMethod {
    /// D^2 = 2 pi S_F(omega_ref), S_F the one-sided density of F_Ws.
    Spectral { omega_ref: f64 },
    /// Spectral matching at `omega_ref = k_WP u_bar`, the frequency whose
    /// components a ship at `u_bar` meets at zero encounter frequency.
    Encounter,
    /// Band-limited white noise on [0, bandwidth] with the variance of F_Ws:
    /// D^2 = 2 pi Var(F_Ws) / bandwidth.
    TotalVariance { bandwidth: f64 },
}

/// Calibrated intensity together with the method that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub intensity: NoiseIntensity,
    pub d_squared: f64,
    #[serde(flatten)]
    pub method: NoiseMethod,
}

pub fn calibrate_noise(r: &WaveRealization, method: NoiseMethod) -> Result<NoiseCalibration> {
    if method == NoiseMethod::Encounter {
        return Err(Error::Config("encounter calibration needs a ship speed".into()));
    }
    calibrate_noise_at_speed(r, method, f64::NAN)
}

/// As [`calibrate_noise`], resolving [`NoiseMethod::Encounter`] at `u_bar`.
pub fn calibrate_noise_at_speed(r: &WaveRealization, method: NoiseMethod, u_bar: f64) -> Result<NoiseCalibration> {
    if r.is_empty() {
        return Err(Error::invalid("cannot calibrate noise from an empty realization"));
    }
    let d_squared = match method {
        NoiseMethod::Spectral { omega_ref } => {
            if !(omega_ref >= 0.0 && omega_ref.is_finite()) {
                return Err(Error::Config(format!(
                    "reference frequency must be >= 0, got {omega_ref}"
                )));
            }
            2.0 * PI * r.force_spectral_density(omega_ref)
        }
        NoiseMethod::Encounter => {
            if !(u_bar >= 0.0) {
                return Err(Error::invalid(format!(
                    "encounter calibration needs u_bar >= 0, got {u_bar}"
                )));
            }
            2.0 * PI * r.force_spectral_density(r.k_wp * u_bar)
        }
        NoiseMethod::TotalVariance { bandwidth } => {
            if !(bandwidth > 0.0 && bandwidth.is_finite()) {
                return Err(Error::Config(format!("bandwidth must be positive, got {bandwidth}")));
            }
            2.0 * PI * r.force_variance() / bandwidth
        }
    };
    Ok(NoiseCalibration {
        intensity: NoiseIntensity::from_total(d_squared)?,
        d_squared,
        method,
    })
}

/// Diffusion matrix of a two-dimensional SDE and its state derivatives.
pub trait Diffusion {
    /// sigma_ij at (t, x).
    fn sigma(&self, t: f64, x: [f64; 2]) -> [[f64; 2]; 2];
    /// d sigma_ij / d x_k, indexed `[i][j][k]`.
    fn sigma_jacobian(&self, t: f64, x: [f64; 2]) -> [[[f64; 2]; 2]; 2];
}

/// Drift and diffusion of the white-noise surge SDE in x = (x_S, u_S).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeCoeffs {
    pub model: SurgeModel,
    pub noise: NoiseIntensity,
    pub k_wp: f64,
}

impl SdeCoeffs {
    pub fn drift(&self, x: [f64; 2]) -> [f64; 2] {
        let (dx, du) = self.model.rates(x[1], 0.0);
        [dx, du]
    }

    /// Squared norm of the second diffusion row,
    /// (D_1^2 cos^2 + D_2^2 sin^2) / (m + m_x)^2.
    pub fn velocity_diffusion(&self, x_s: f64) -> f64 {
        let (s, c) = (self.k_wp * x_s).sin_cos();
        let n = &self.noise;
        (n.d1 * n.d1 * c * c + n.d2 * n.d2 * s * s) / self.model.total_mass.powi(2)
    }
}

impl Diffusion for SdeCoeffs {
    fn sigma(&self, _t: f64, x: [f64; 2]) -> [[f64; 2]; 2] {
        let m = self.model.total_mass;
        let (s, c) = (self.k_wp * x[0]).sin_cos();
        [[0.0, 0.0], [self.noise.d1 * c / m, -self.noise.d2 * s / m]]
    }

    fn sigma_jacobian(&self, _t: f64, x: [f64; 2]) -> [[[f64; 2]; 2]; 2] {
        let m = self.model.total_mass;
        let k = self.k_wp;
        let (s, c) = (k * x[0]).sin_cos();
        [
            [[0.0, 0.0], [0.0, 0.0]],
            [[-self.noise.d1 * k * s / m, 0.0], [-self.noise.d2 * k * c / m, 0.0]],
        ]
    }
}

/// Wong–Zakai drift correction `mu_i = 1/2 sum_j sum_k sigma_kj d sigma_ij / d x_k`
/// that converts a Stratonovich SDE into its Itô form.
pub fn wong_zakai_correction<D: Diffusion + ?Sized>(d: &D, t: f64, x: [f64; 2]) -> [f64; 2] {
    let sigma = d.sigma(t, x);
    let jac = d.sigma_jacobian(t, x);
    let mut out = [0.0; 2];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..2 {
            for k in 0..2 {
                acc += sigma[k][j] * jac[i][j][k];
            }
        }
        *o = 0.5 * acc;
    }
    out
}

/// Euler–Maruyama solver for the white-noise surge SDE.
pub struct WhiteNoiseSystem {
    pub coeffs: SdeCoeffs,
    pub guard: f64,
}

impl WhiteNoiseSystem {
    pub fn new(model: SurgeModel, noise: NoiseIntensity, k_wp: f64, guard: f64) -> Self {
        WhiteNoiseSystem {
            coeffs: SdeCoeffs { model, noise, k_wp },
            guard,
        }
    }

    /// Streams `steps` Euler–Maruyama steps; increments are drawn from `rng`,
    /// two standard normals per step (W_1 first).
    pub fn run<R: Rng + ?Sized, V: FnMut(&SurgeState)>(
        &self,
        ic: SurgeState,
        dt: f64,
        steps: u64,
        rng: &mut R,
        visit: V,
    ) -> Result<SurgeState> {
        let sqrt_dt = dt.sqrt();
        self.run_with(
            ic,
            dt,
            steps,
            |_| {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                (z1 * sqrt_dt, z2 * sqrt_dt)
            },
            visit,
        )
    }

    /// Euler–Maruyama with caller-supplied Wiener increments
    /// `(dW_1, dW_2)` for step `n`, e.g. sums of finer increments when
    /// comparing step sizes on the same Brownian path.
    pub fn run_with<W, V>(
        &self,
        ic: SurgeState,
        dt: f64,
        steps: u64,
        mut increment: W,
        mut visit: V,
    ) -> Result<SurgeState>
    where
        W: FnMut(u64) -> (f64, f64),
        V: FnMut(&SurgeState),
    {
        let model = &self.coeffs.model;
        if dt * model.relaxation_rate().abs() >= MAX_EM_RELAXATION_STEP {
            return Err(Error::invalid(format!(
                "dt * alpha_1/(m+m_x) = {:.4} must stay below {MAX_EM_RELAXATION_STEP}",
                dt * model.relaxation_rate().abs()
            )));
        }
        let inv_m = 1.0 / model.total_mass;
        let (d1, d2) = (self.coeffs.noise.d1, self.coeffs.noise.d2);
        let k = self.coeffs.k_wp;
        let t0 = ic.t;
        let mut s = ic;
        visit(&s);
        for n in 0..steps {
            let (dw1, dw2) = increment(n);
            if !(dw1.is_finite() && dw2.is_finite()) {
                return Err(Error::NonFiniteIncrement { step: n });
            }
            let (sin, cos) = (k * s.x).sin_cos();
            let (dx, du) = model.rates(s.u, 0.0);
            s = SurgeState {
                t: t0 + (n + 1) as f64 * dt,
                x: s.x + dx * dt,
                u: s.u + du * dt + (d1 * cos * dw1 - d2 * sin * dw2) * inv_m,
            };
            if !(s.u.abs() <= self.guard) {
                return Err(Error::BlowUp {
                    t: s.t,
                    speed: s.u.abs(),
                    guard: self.guard,
                });
            }
            visit(&s);
        }
        Ok(s)
    }
}

/// Euler–Maruyama path of the white-noise SDE using Wiener stream `path`
/// of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_white(
    p: &ShipParams,
    op: &OperatingPoint,
    noise: NoiseIntensity,
    k_wp: f64,
    ic: SurgeState,
    cfg: &SimConfig,
    seed: u64,
    path: u64,
) -> Result<Trajectory> {
    cfg.validate()?;
    let celerity = (p.gravity / k_wp).sqrt();
    let system = WhiteNoiseSystem::new(SurgeModel::from_ship(p, op), noise, k_wp, cfg.guard_or(celerity));
    let mut rng = rng::stream(seed, Domain::Wiener, path);
    let mut rec = Recorder::new(cfg.record_stride, (cfg.steps() as usize) / cfg.record_stride + 1);
    system.run(ic, cfg.dt, cfg.steps(), &mut rng, |s| rec.visit(s))?;
    Ok(rec.trajectory)
}
