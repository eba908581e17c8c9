//! Surge state equation shared by the regular-wave and irregular-sea models:
//!
//! ```text
//! dx_S/dt = u_bar + u_S
//! (m + m_x) du_S/dt = -sum alpha_i u_S^i + f(t, x_S)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ship_model::{compute_alphas, AlphaCoeffs, OperatingPoint, ShipParams};

/// Earth-fixed position, velocity perturbation and time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurgeState {
    pub t: f64,
    pub x: f64,
    pub u: f64,
}

impl SurgeState {
    pub fn new(t: f64, x: f64, u: f64) -> Self {
        SurgeState { t, x, u }
    }

    pub fn at_rest() -> Self {
        SurgeState::new(0.0, 0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.is_finite() && self.u.is_finite()
    }
}

/// Sampled states of one path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<SurgeState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&SurgeState> {
        self.states.last()
    }

    pub fn duration(&self) -> f64 {
        match (self.states.first(), self.states.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn velocities(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.u)
    }
}

/// Drift part of the surge equation at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurgeModel {
    pub alphas: AlphaCoeffs,
    /// m + m_x (kg).
    pub total_mass: f64,
    /// Calm-water speed (m/s).
    pub u_bar: f64,
}

impl SurgeModel {
    pub fn new(alphas: AlphaCoeffs, total_mass: f64, u_bar: f64) -> Self {
        SurgeModel {
            alphas,
            total_mass,
            u_bar,
        }
    }

    pub fn from_ship(p: &ShipParams, op: &OperatingPoint) -> Self {
        SurgeModel::new(compute_alphas(p, op), p.total_mass(), op.u_bar)
    }

    /// Linear relaxation rate alpha_1 / (m + m_x).
    pub fn relaxation_rate(&self) -> f64 {
        self.alphas.0[0] / self.total_mass
    }

    /// Time derivative of (x_S, u_S) under external force `force`.
    #[inline]
    pub fn rates(&self, u: f64, force: f64) -> (f64, f64) {
        (self.u_bar + u, (force - self.alphas.drift(u)) / self.total_mass)
    }
}

/// External surge force f(t, x).
///
/// Evaluation is split so that the position-free part of a force can be
/// computed once per time level and shared by the RK4 stages that sit at the
/// same time.
pub trait Forcing {
    type Slice: Clone;

    fn slice(&self, t: f64) -> Self::Slice;

    fn force(&self, slice: &Self::Slice, x: f64) -> f64;
}

/// No external force.
pub struct CalmWater;

impl Forcing for CalmWater {
    type Slice = ();

    fn slice(&self, _t: f64) {}

    fn force(&self, _: &(), _x: f64) -> f64 {
        0.0
    }
}

/// Fixed-step classical Runge–Kutta integration from `ic` for `steps`
/// steps; `visit` sees the initial state and every subsequent state.
///
/// Times are computed as `t0 + n dt` so long runs do not accumulate drift.
/// Fails with [`Error::BlowUp`] once |u_S| exceeds `guard`.
pub fn integrate_rk4<F, V>(
    model: &SurgeModel,
    forcing: &F,
    ic: SurgeState,
    dt: f64,
    steps: u64,
    guard: f64,
    mut visit: V,
) -> Result<SurgeState>
where
    F: Forcing,
    V: FnMut(&SurgeState),
{
    let t0 = ic.t;
    let mut s = ic;
    visit(&s);
    let mut slice0 = forcing.slice(t0);
    for n in 0..steps {
        let t = t0 + n as f64 * dt;
        let slice_half = forcing.slice(t + 0.5 * dt);
        let slice1 = forcing.slice(t + dt);

        let (k1x, k1u) = model.rates(s.u, forcing.force(&slice0, s.x));
        let (k2x, k2u) = model.rates(s.u + 0.5 * dt * k1u, forcing.force(&slice_half, s.x + 0.5 * dt * k1x));
        let (k3x, k3u) = model.rates(s.u + 0.5 * dt * k2u, forcing.force(&slice_half, s.x + 0.5 * dt * k2x));
        let (k4x, k4u) = model.rates(s.u + dt * k3u, forcing.force(&slice1, s.x + dt * k3x));

        s = SurgeState {
            t: t0 + (n + 1) as f64 * dt,
            x: s.x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
            u: s.u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        };
        if !(s.u.abs() <= guard) {
            return Err(Error::BlowUp {
                t: s.t,
                speed: s.u.abs(),
                guard,
            });
        }
        visit(&s);
        slice0 = slice1;
    }
    Ok(s)
}

/// Collects every `stride`-th visited state.
pub(crate) struct Recorder {
    stride: u64,
    count: u64,
    pub(crate) trajectory: Trajectory,
}

impl Recorder {
    pub(crate) fn new(stride: usize, capacity: usize) -> Self {
        Recorder {
            stride: stride.max(1) as u64,
            count: 0,
            trajectory: Trajectory {
                states: Vec::with_capacity(capacity),
            },
        }
    }

    pub(crate) fn visit(&mut self, s: &SurgeState) {
        if self.count.is_multiple_of(self.stride) {
            self.trajectory.states.push(*s);
        }
        self.count += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calm_water_linear_decay_matches_exponential() {
        let model = SurgeModel::new(AlphaCoeffs::linear(2.0), 4.0, 1.5);
        let mut last = SurgeState::at_rest();
        let end = integrate_rk4(
            &model,
            &CalmWater,
            SurgeState::new(0.0, 0.0, 0.3),
            0.01,
            500,
            10.0,
            |s| {
                last = *s;
            },
        )
        .unwrap();
        assert_eq!(end, last);
        let exact = 0.3 * (-0.5f64 * 5.0).exp();
        assert!((end.u - exact).abs() < 1e-9);
        // x = u_bar t + (u0 / rate)(1 - e^{-rate t})
        let x_exact = 1.5 * 5.0 + 0.3 / 0.5 * (1.0 - (-0.5f64 * 5.0).exp());
        assert!((end.x - x_exact).abs() < 1e-9);
        assert!((end.t - 5.0).abs() < 1e-12);
    }

    #[test]
    fn blow_up_guard_trips() {
        let model = SurgeModel::new(AlphaCoeffs::linear(-5.0), 1.0, 0.0);
        let r = integrate_rk4(
            &model,
            &CalmWater,
            SurgeState::new(0.0, 0.0, 0.1),
            0.01,
            10_000,
            1.0,
            |_| {},
        );
        assert!(matches!(r, Err(Error::BlowUp { .. })));
    }
}
