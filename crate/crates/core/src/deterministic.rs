//! Regular-wave surge: single-wave integration, phase portraits and the
//! surf-riding / wave-blocking thresholds.
//!
//! In wave-fixed coordinates `xi = k (x_S - c t)` the regular-wave force is
//! `-F_W sin(xi)` and the system is an autonomous damped pendulum driven by
//! the constant torque `-drift(c - u_bar)`. A trajectory is *captured* when it
//! settles on the stable equilibrium (surf-riding) and *periodic* when the
//! wave keeps overtaking the ship or vice versa.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seaway::ForceAmplitudeModel;
use crate::ship_model::{operating_point_for_froude, OperatingPoint, ShipParams};
use crate::stochastic::SimConfig;
use crate::surge::{integrate_rk4, Forcing, Recorder, SurgeModel, SurgeState, Trajectory};

pub const DEFAULT_MAX_STEEPNESS: f64 = 0.1;
/// Minimum RK4 steps per wave or encounter period, whichever is shorter.
pub const MIN_STEPS_PER_PERIOD: f64 = 50.0;

/// A deep-water regular wave and the surge force it exerts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularWave {
    pub wavelength: f64,
    pub steepness: f64,
    pub celerity: f64,
    pub force_amplitude: f64,
    pub gravity: f64,
}

impl RegularWave {
    pub fn new(wavelength: f64, steepness: f64, force_amplitude: f64, gravity: f64) -> Result<Self> {
        Self::with_steepness_cap(wavelength, steepness, force_amplitude, gravity, DEFAULT_MAX_STEEPNESS)
    }

    pub fn with_steepness_cap(
        wavelength: f64,
        steepness: f64,
        force_amplitude: f64,
        gravity: f64,
        max_steepness: f64,
    ) -> Result<Self> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::invalid(format!("wavelength must be positive, got {wavelength}")));
        }
        if !(steepness > 0.0 && steepness < max_steepness) {
            return Err(Error::invalid(format!(
                "steepness H/lambda must lie in (0, {max_steepness}), got {steepness}"
            )));
        }
        if !(force_amplitude >= 0.0 && force_amplitude.is_finite()) {
            return Err(Error::invalid(format!(
                "force amplitude must be >= 0, got {force_amplitude}"
            )));
        }
        if !(gravity > 0.0) {
            return Err(Error::invalid("gravity must be positive"));
        }
        Ok(RegularWave {
            wavelength,
            steepness,
            celerity: (gravity * wavelength / (2.0 * PI)).sqrt(),
            force_amplitude,
            gravity,
        })
    }

    /// Force amplitude from a per-unit-amplitude model at the wave's frequency.
    pub fn from_model(
        wavelength: f64,
        steepness: f64,
        model: &dyn ForceAmplitudeModel,
        gravity: f64,
        max_steepness: f64,
    ) -> Result<Self> {
        let mut w = Self::with_steepness_cap(wavelength, steepness, 0.0, gravity, max_steepness)?;
        w.force_amplitude = model.force_amplitude(w.frequency(), 0.5 * w.height());
        w.validate_force()?;
        Ok(w)
    }

    fn validate_force(&self) -> Result<()> {
        if !(self.force_amplitude >= 0.0 && self.force_amplitude.is_finite()) {
            return Err(Error::invalid(format!(
                "force amplitude must be >= 0, got {}",
                self.force_amplitude
            )));
        }
        Ok(())
    }

    pub fn with_force(mut self, force_amplitude: f64) -> Self {
        self.force_amplitude = force_amplitude;
        self
    }

    pub fn height(&self) -> f64 {
        self.steepness * self.wavelength
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn frequency(&self) -> f64 {
        self.wavenumber() * self.celerity
    }

    pub fn period(&self) -> f64 {
        self.wavelength / self.celerity
    }

    /// Period of the force seen by a ship at speed `u_bar`; infinite at `u_bar = c`.
    pub fn encounter_period(&self, u_bar: f64) -> f64 {
        self.wavelength / (self.celerity - u_bar).abs()
    }

    /// The largest step meeting the resolution requirement at `u_bar`.
    pub fn max_step(&self, u_bar: f64) -> f64 {
        self.period().min(self.encounter_period(u_bar)) / MIN_STEPS_PER_PERIOD
    }

    /// `F_W sin(omega t - k x)`.
    pub fn force(&self, t: f64, x: f64) -> f64 {
        self.force_amplitude * (self.frequency() * t - self.wavenumber() * x).sin()
    }

    pub fn wave_fixed_phase(&self, s: &SurgeState) -> f64 {
        self.wavenumber() * (s.x - self.celerity * s.t)
    }
}

struct RegularForce {
    omega: f64,
    k: f64,
    amplitude: f64,
}

impl Forcing for RegularForce {
    type Slice = f64;

    fn slice(&self, t: f64) -> f64 {
        self.omega * t
    }

    fn force(&self, phase: &f64, x: f64) -> f64 {
        self.amplitude * (phase - self.k * x).sin()
    }
}

/// Streams a regular-wave run through `visit`.
pub fn run_regular<V: FnMut(&SurgeState)>(
    model: &SurgeModel,
    w: &RegularWave,
    ic: SurgeState,
    cfg: &SimConfig,
    visit: V,
) -> Result<SurgeState> {
    if !(cfg.horizon > 0.0 && cfg.dt > 0.0) {
        return Err(Error::invalid("need horizon > 0 and dt > 0"));
    }
    let max_dt = w.max_step(model.u_bar);
    if cfg.dt > max_dt * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "dt = {} s under-resolves the wave; need dt <= {max_dt:.6} s",
            cfg.dt
        )));
    }
    let forcing = RegularForce {
        omega: w.frequency(),
        k: w.wavenumber(),
        amplitude: w.force_amplitude,
    };
    let guard = cfg.guard.unwrap_or(crate::stochastic::GUARD_CELERITIES * w.celerity);
    integrate_rk4(model, &forcing, ic, cfg.dt, cfg.steps(), guard, visit)
}

/// RK4 solution of the surge equation in a single regular wave.
pub fn simulate_regular(
    p: &ShipParams,
    op: &OperatingPoint,
    w: &RegularWave,
    ic: SurgeState,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    let mut rec = Recorder::new(cfg.record_stride, cfg.steps() as usize / cfg.record_stride.max(1) + 1);
    run_regular(&SurgeModel::from_ship(p, op), w, ic, cfg, |s| rec.visit(s))?;
    Ok(rec.trajectory)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Periodic,
    Captured,
    Undecided,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Periodic => "periodic",
            Outcome::Captured => "captured",
            Outcome::Undecided => "undecided",
        })
    }
}

/// Classification settings; all windows are in wave periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    /// Capture tube half-width as a fraction of the celerity.
    pub v_tol: f64,
    pub settle_periods: f64,
    pub horizon_periods: f64,
    /// Window over which a periodic orbit must advance its phase by 4 pi.
    pub periodic_periods: f64,
    pub steps_per_period: f64,
    /// Portrait sampling stride (steps).
    pub record_stride: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            v_tol: 0.02,
            settle_periods: 20.0,
            horizon_periods: 200.0,
            periodic_periods: 100.0,
            steps_per_period: MIN_STEPS_PER_PERIOD,
            record_stride: 25,
        }
    }
}

impl ClassifyConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.v_tol > 0.0
            && self.settle_periods > 0.0
            && self.periodic_periods > 0.0
            && self.horizon_periods >= self.settle_periods.max(self.periodic_periods)
            && self.steps_per_period >= MIN_STEPS_PER_PERIOD
            && self.record_stride > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "classification windows must be positive and fit in the horizon, \
                 with at least {MIN_STEPS_PER_PERIOD} steps per period: {self:?}"
            )))
        }
    }

    fn dt(&self, w: &RegularWave, u_bar: f64) -> f64 {
        w.max_step(u_bar) * MIN_STEPS_PER_PERIOD / self.steps_per_period
    }
}

/// Initial condition in wave-fixed phase and velocity perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub xi: f64,
    pub u: f64,
}

/// `phases` equally spaced phases, each started from calm-water speed and
/// from halfway to the celerity.
pub fn standard_grid(w: &RegularWave, u_bar: f64, phases: usize) -> Vec<InitialCondition> {
    let half = 0.5 * (w.celerity - u_bar);
    let mut grid = Vec::with_capacity(2 * phases);
    for u in [0.0, half] {
        for j in 0..phases {
            grid.push(InitialCondition {
                xi: -PI + 2.0 * PI * j as f64 / phases as f64,
                u,
            });
        }
    }
    grid
}

pub const STANDARD_PHASES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveFixedSample {
    pub t: f64,
    pub xi: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitTrajectory {
    pub ic: InitialCondition,
    pub outcome: Outcome,
    pub samples: Vec<WaveFixedSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePortrait {
    pub fn_bar: f64,
    pub u_bar: f64,
    pub wave: RegularWave,
    pub trajectories: Vec<PortraitTrajectory>,
}

impl PhasePortrait {
    pub fn captured_fraction(&self) -> f64 {
        let n = self
            .trajectories
            .iter()
            .filter(|t| t.outcome == Outcome::Captured)
            .count();
        n as f64 / self.trajectories.len() as f64
    }

    pub fn all_captured(&self) -> bool {
        self.trajectories.iter().all(|t| t.outcome == Outcome::Captured)
    }
}

/// Whether the wave-fixed system has an isolated stable equilibrium:
/// the wave force can balance the thrust surplus at `u_S = c - u_bar`.
pub fn surf_riding_equilibrium_exists(model: &SurgeModel, w: &RegularWave) -> bool {
    model.alphas.drift(w.celerity - model.u_bar).abs() < w.force_amplitude
}

fn classify_one(
    model: &SurgeModel,
    w: &RegularWave,
    ic: InitialCondition,
    cfg: &ClassifyConfig,
    record: bool,
    equilibrium: bool,
) -> Result<PortraitTrajectory> {
    let k = w.wavenumber();
    let c = w.celerity;
    let period = w.period();
    let dt = cfg.dt(w, model.u_bar);
    let steps = (cfg.horizon_periods * period / dt).ceil() as u64;
    let sim = SimConfig::new(steps as f64 * dt, dt);
    let t_end = steps as f64 * dt;
    let settle_from = t_end - cfg.settle_periods * period;
    let periodic_from = t_end - cfg.periodic_periods * period;
    let tube = cfg.v_tol * c;

    let mut in_tube = true;
    let mut sign = 0i8;
    let mut one_sign = true;
    let mut xi_start = None;
    let mut samples = Vec::new();
    let mut n = 0usize;

    let ic_state = SurgeState::new(0.0, ic.xi / k, ic.u);
    let last = run_regular(model, w, ic_state, &sim, |s| {
        let rel = model.u_bar + s.u - c;
        if s.t >= settle_from && rel.abs() >= tube {
            in_tube = false;
        }
        if s.t >= periodic_from {
            xi_start.get_or_insert_with(|| w.wave_fixed_phase(s));
            let sg = if rel > 0.0 {
                1
            } else if rel < 0.0 {
                -1
            } else {
                0
            };
            if sg == 0 || (sign != 0 && sg != sign) {
                one_sign = false;
            }
            sign = sg;
        }
        if record && n.is_multiple_of(cfg.record_stride) {
            samples.push(WaveFixedSample {
                t: s.t,
                xi: w.wave_fixed_phase(s),
                u: s.u,
            });
        }
        n += 1;
    })?;
    let advance = (w.wave_fixed_phase(&last) - xi_start.unwrap_or(0.0)).abs();
    let outcome = if in_tube && equilibrium {
        Outcome::Captured
    } else if one_sign && advance > 4.0 * PI {
        Outcome::Periodic
    } else {
        Outcome::Undecided
    };
    Ok(PortraitTrajectory { ic, outcome, samples })
}

fn classify_model(
    model: &SurgeModel,
    fn_bar: f64,
    w: &RegularWave,
    grid: &[InitialCondition],
    cfg: &ClassifyConfig,
    record: bool,
) -> Result<PhasePortrait> {
    if grid.is_empty() {
        return Err(Error::invalid("initial-condition grid is empty"));
    }
    cfg.validate()?;
    let equilibrium = surf_riding_equilibrium_exists(model, w);
    let trajectories = grid
        .par_iter()
        .map(|&ic| classify_one(model, w, ic, cfg, record, equilibrium))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhasePortrait {
        fn_bar,
        u_bar: model.u_bar,
        wave: *w,
        trajectories,
    })
}

/// Integrates every grid point and labels its long-time behaviour.
pub fn classify(
    p: &ShipParams,
    op: &OperatingPoint,
    w: &RegularWave,
    grid: &[InitialCondition],
    cfg: &ClassifyConfig,
) -> Result<PhasePortrait> {
    classify_model(&SurgeModel::from_ship(p, op), op.fn_bar, w, grid, cfg, true)
}

/// One end of a threshold: the transition lies in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub estimate: f64,
    pub width: f64,
    pub iterations: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    /// Periodic below, captured above.
    pub fn_lwr: Option<Bracket>,
    /// Captured below, periodic above.
    pub fn_ups: Option<Bracket>,
    pub scan_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub scan_points: usize,
    pub phases: usize,
    pub tol: f64,
    pub classify: ClassifyConfig,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            scan_points: 17,
            phases: STANDARD_PHASES,
            tol: 1e-3,
            classify: ClassifyConfig::default(),
        }
    }
}

/// Captured regime: every trajectory of the standard grid surf-rides.
pub fn captured_regime(p: &ShipParams, w: &RegularWave, fn_bar: f64, cfg: &ThresholdConfig) -> Result<bool> {
    let op = operating_point_for_froude(p, fn_bar)?;
    let model = SurgeModel::from_ship(p, &op);
    if !surf_riding_equilibrium_exists(&model, w) {
        return Ok(false);
    }
    let grid = standard_grid(w, op.u_bar, cfg.phases);
    Ok(classify_model(&model, fn_bar, w, &grid, &cfg.classify, false)?.all_captured())
}

fn bisect<F>(mut lo: f64, mut hi: f64, lo_state: bool, tol: f64, regime: &F) -> Result<Bracket>
where
    F: Fn(f64) -> Result<bool>,
{
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if regime(mid)? == lo_state {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(Bracket {
        lo,
        hi,
        estimate: 0.5 * (lo + hi),
        width: hi - lo,
        iterations,
    })
}

/// Locates the surf-riding (`fn_lwr`) and wave-blocking (`fn_ups`) thresholds
/// in `fn_range` by scanning the captured regime and bisecting its first
/// rising and last falling edge.
pub fn find_thresholds(
    p: &ShipParams,
    w: &RegularWave,
    fn_range: (f64, f64),
    cfg: &ThresholdConfig,
) -> Result<ThresholdResult> {
    let (lo, hi) = fn_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid(format!(
            "Froude range must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    if !(cfg.tol > 0.0) || cfg.scan_points < 2 || cfg.phases == 0 {
        return Err(Error::invalid(
            "threshold search needs tol > 0, >= 2 scan points and >= 1 phase",
        ));
    }
    let mut points: Vec<f64> = (0..cfg.scan_points)
        .map(|i| lo + (hi - lo) * i as f64 / (cfg.scan_points - 1) as f64)
        .collect();
    // the ship running at wave speed is the most likely captured state
    let fn_c = p.froude(w.celerity);
    if fn_c > lo && fn_c < hi {
        points.push(fn_c);
        points.sort_by(f64::total_cmp);
    }
    let regime = |f: f64| captured_regime(p, w, f, cfg);
    let states = points.par_iter().map(|&f| regime(f)).collect::<Result<Vec<bool>>>()?;

    let rise = states.windows(2).position(|s| !s[0] && s[1]);
    let fall = states.windows(2).rposition(|s| s[0] && !s[1]);
    if rise.is_none() && fall.is_none() {
        return Err(Error::NoTransition {
            lo,
            hi,
            label: if states[0] { "captured" } else { "periodic" }.into(),
        });
    }
    let fn_lwr = rise
        .map(|i| bisect(points[i], points[i + 1], false, cfg.tol, &regime))
        .transpose()?;
    let fn_ups = fall
        .map(|i| bisect(points[i], points[i + 1], true, cfg.tol, &regime))
        .transpose()?;
    Ok(ThresholdResult {
        fn_lwr,
        fn_ups,
        scan_points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ship_model::{fixtures::synthetic, AlphaCoeffs};
    use approx::assert_relative_eq;

    fn wave(force: f64) -> RegularWave {
        RegularWave::new(2.0 * synthetic().length, 0.04, force, 9.81).unwrap()
    }

    #[test]
    fn celerity_follows_deep_water_dispersion() {
        let w = wave(1.0);
        assert!((w.celerity - (9.81 * w.wavelength / (2.0 * PI)).sqrt()).abs() < 1e-12);
        assert_relative_eq!(w.frequency().powi(2), 9.81 * w.wavenumber(), max_relative = 1e-14);
        assert!(RegularWave::new(5.0, 0.1, 1.0, 9.81).is_err());
        assert!(RegularWave::with_steepness_cap(5.0, 0.12, 1.0, 9.81, 0.15).is_ok());
        assert!(RegularWave::new(-1.0, 0.04, 1.0, 9.81).is_err());
    }

    #[test]
    fn calm_equilibrium_persists() {
        let p = synthetic();
        let op = operating_point_for_froude(&p, 0.3).unwrap();
        let w = wave(0.0);
        let cfg = SimConfig::new(50.0, w.max_step(op.u_bar));
        let tr = simulate_regular(&p, &op, &w, SurgeState::at_rest(), &cfg).unwrap();
        assert!(tr.states.iter().all(|s| s.u == 0.0));
    }

    #[test]
    fn calm_perturbation_decays_monotonically() {
        let p = synthetic();
        let op = operating_point_for_froude(&p, 0.3).unwrap();
        let w = wave(0.0);
        let cfg = SimConfig::new(100.0, w.max_step(op.u_bar));
        let tr = simulate_regular(&p, &op, &w, SurgeState::new(0.0, 0.0, 0.1), &cfg).unwrap();
        assert!(tr.states.windows(2).all(|s| s[1].u < s[0].u && s[1].u > 0.0));
        assert!(tr.last().unwrap().u < 0.1 * 0.1);
    }

    #[test]
    fn under_resolved_step_is_rejected() {
        let p = synthetic();
        let op = operating_point_for_froude(&p, 0.3).unwrap();
        let w = wave(1.0);
        let cfg = SimConfig::new(10.0, 1.5 * w.max_step(op.u_bar));
        assert!(simulate_regular(&p, &op, &w, SurgeState::at_rest(), &cfg).is_err());
    }

    #[test]
    fn linear_response_amplitude() {
        let (a1, m, u_bar) = (8.0, 60.0, 1.0);
        let model = SurgeModel::new(AlphaCoeffs::linear(a1), m, u_bar);
        let w = RegularWave::new(4.0, 0.02, 0.05, 9.81).unwrap();
        let omega_e = w.frequency() - w.wavenumber() * u_bar;
        let expected = w.force_amplitude / (m * ((a1 / m).powi(2) + omega_e.powi(2)).sqrt());
        let horizon = 40.0 * m / a1;
        let cfg = SimConfig::new(horizon, w.max_step(u_bar));
        let t_tail = horizon - 3.0 * 2.0 * PI / omega_e.abs();
        let mut peak = 0.0f64;
        run_regular(&model, &w, SurgeState::at_rest(), &cfg, |s| {
            if s.t > t_tail {
                peak = peak.max(s.u.abs());
            }
        })
        .unwrap();
        assert!((peak - expected).abs() / expected < 0.02, "{peak} vs {expected}");
    }

    #[test]
    fn wave_fixed_autonomy() {
        let p = synthetic();
        let op = operating_point_for_froude(&p, 0.45).unwrap();
        let w = wave(60.0);
        let dt = w.max_step(op.u_bar);
        let run = |ic: SurgeState| {
            let cfg = SimConfig::new(400.0 * dt, dt);
            simulate_regular(&p, &op, &w, ic, &cfg).unwrap()
        };
        let base = run(SurgeState::new(0.0, 0.3, 0.05));
        let shifted = run(SurgeState::new(0.0, 0.3 + w.wavelength, 0.05));
        let delayed = run(SurgeState::new(w.period(), 0.3 + w.wavelength, 0.05));
        for ((a, b), c) in base.states.iter().zip(&shifted.states).zip(&delayed.states) {
            let xa = w.wave_fixed_phase(a);
            assert!((w.wave_fixed_phase(b) - xa - 2.0 * PI).abs() < 1e-8);
            assert!((w.wave_fixed_phase(c) - xa).abs() < 1e-8);
            assert!((a.u - b.u).abs() < 1e-9 && (a.u - c.u).abs() < 1e-9);
        }
    }

    #[test]
    fn no_wave_means_periodic() {
        let p = synthetic();
        let w = wave(0.0);
        for fn_bar in [0.2, 0.35, 0.7, 0.9] {
            let op = operating_point_for_froude(&p, fn_bar).unwrap();
            let grid = standard_grid(&w, op.u_bar, 4);
            let pp = classify(&p, &op, &w, &grid, &ClassifyConfig::default()).unwrap();
            assert!(
                pp.trajectories.iter().all(|t| t.outcome == Outcome::Periodic),
                "Fn {fn_bar}"
            );
            assert!(pp
                .trajectories
                .iter()
                .all(|t| t.samples.iter().all(|s| s.xi.is_finite() && s.u.is_finite())));
        }
    }

    #[test]
    fn strong_wave_captures_near_celerity() {
        let p = synthetic();
        let w = wave(400.0);
        let fn_c = p.froude(w.celerity);
        let op = operating_point_for_froude(&p, fn_c - 0.02).unwrap();
        let grid = standard_grid(&w, op.u_bar, STANDARD_PHASES);
        let pp = classify(&p, &op, &w, &grid, &ClassifyConfig::default()).unwrap();
        assert!(pp.all_captured());
        // captured trajectories end near the ship moving with the wave
        for t in &pp.trajectories {
            let s = t.samples.last().unwrap();
            assert!((op.u_bar + s.u - w.celerity).abs() < 0.02 * w.celerity);
        }
    }

    #[test]
    fn captured_fraction_grows_with_force() {
        let p = synthetic();
        let base = wave(1.0);
        let op = operating_point_for_froude(&p, p.froude(base.celerity) - 0.05).unwrap();
        let grid = standard_grid(&base, op.u_bar, STANDARD_PHASES);
        let mut last = 0.0;
        for f in [20.0, 40.0, 60.0, 80.0, 120.0, 200.0, 400.0] {
            let pp = classify(&p, &op, &base.with_force(f), &grid, &ClassifyConfig::default()).unwrap();
            let frac = pp.captured_fraction();
            assert!(frac >= last, "F_W {f}: {frac} < {last}");
            last = frac;
        }
        assert_eq!(last, 1.0);
    }

    #[test]
    fn no_force_no_transition() {
        let p = synthetic();
        let cfg = ThresholdConfig {
            scan_points: 5,
            ..Default::default()
        };
        let err = find_thresholds(&p, &wave(0.0), (0.2, 0.9), &cfg).unwrap_err();
        assert!(matches!(err, Error::NoTransition { .. }));
    }

    #[test]
    fn thresholds_bracket_the_celerity() {
        let p = synthetic();
        let w = wave(150.0);
        let cfg = ThresholdConfig::default();
        let r = find_thresholds(&p, &w, (0.2, 0.95), &cfg).unwrap();
        let (lwr, ups) = (r.fn_lwr.unwrap(), r.fn_ups.unwrap());
        let fn_c = p.froude(w.celerity);
        assert!(lwr.hi < fn_c && fn_c < ups.lo);
        for b in [lwr, ups] {
            assert!(b.width <= cfg.tol);
        }
        // the bracket ends straddle a regime change
        assert!(!captured_regime(&p, &w, lwr.lo, &cfg).unwrap());
        assert!(captured_regime(&p, &w, lwr.hi, &cfg).unwrap());
        assert!(captured_regime(&p, &w, ups.lo, &cfg).unwrap());
        assert!(!captured_regime(&p, &w, ups.hi, &cfg).unwrap());
    }
}
