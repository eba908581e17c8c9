//! Ensemble reductions and Froude-number sweeps.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numerics::{ks_critical_1pct, pearson, sorted_quantile, CompensatedSum};
use crate::rng::{self, Domain};
use crate::seaway::{synthesize, ForceAmplitudeModel, SeawaySpec, WaveRealization};
use crate::ship_model::{operating_point_for_froude, ShipParams};
use crate::stochastic::{
    calibrate_noise_at_speed, run_approx, run_colored, NoiseCalibration, NoiseMethod, SimConfig, SystemKind,
    WhiteNoiseSystem, GUARD_CELERITIES,
};
use crate::surge::{Recorder, SurgeModel, SurgeState, Trajectory};

/// First four moments (population estimators).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Moments {
        let n = values.len() as f64;
        let mean = values.iter().copied().collect::<CompensatedSum>().value() / n;
        let mut m2 = CompensatedSum::new();
        let mut m3 = CompensatedSum::new();
        let mut m4 = CompensatedSum::new();
        for v in values {
            let d = v - mean;
            let d2 = d * d;
            m2.add(d2);
            m3.add(d2 * d);
            m4.add(d2 * d2);
        }
        let (m2, m3, m4) = (m2.value() / n, m3.value() / n, m4.value() / n);
        Moments::from_central(mean, m2, m3, m4)
    }

    pub(crate) fn from_central(mean: f64, m2: f64, m3: f64, m4: f64) -> Moments {
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Moments {
            mean,
            variance: m2,
            skewness,
            excess_kurtosis,
        }
    }

    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Probability-mass histogram over `edges.len() - 1` bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
    /// All samples coincide; the single bin has unit width around them.
    pub degenerate: bool,
}

pub const MAX_BINS: usize = 10_000;

impl Histogram {
    /// Freedman–Diaconis bin width `2 IQR n^(-1/3)` over the sample range.
    /// Falls back to Sturges' bin count when the IQR vanishes.
    pub fn freedman_diaconis(sorted: &[f64]) -> Result<Histogram> {
        let n = sorted.len();
        if n == 0 {
            return Err(Error::InsufficientSamples { got: 0, need: 1 });
        }
        let (lo, hi) = (sorted[0], sorted[n - 1]);
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Domain("histogram of non-finite samples".into()));
        }
        if hi == lo {
            return Ok(Histogram {
                edges: vec![lo - 0.5, lo + 0.5],
                mass: vec![1.0],
                degenerate: true,
            });
        }
        let iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
        let bins = if iqr > 0.0 {
            let width = 2.0 * iqr / (n as f64).cbrt();
            ((hi - lo) / width).ceil() as usize
        } else {
            (n as f64).log2().ceil() as usize + 1
        }
        .clamp(1, MAX_BINS);
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &v in sorted {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        let mass = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Ok(Histogram {
            edges,
            mass,
            degenerate: false,
        })
    }

    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1]))
    }

    /// Density values (mass over width).
    pub fn density(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .zip(&self.mass)
            .map(|(e, m)| m / (e[1] - e[0]))
            .collect()
    }

    /// Moments of the binned distribution, every sample placed at its bin centre.
    pub fn moments(&self) -> Moments {
        let mean = self
            .centers()
            .zip(&self.mass)
            .map(|(c, m)| c * m)
            .collect::<CompensatedSum>()
            .value();
        let central = |p: i32| {
            self.centers()
                .zip(&self.mass)
                .map(|(c, m)| (c - mean).powi(p) * m)
                .collect::<CompensatedSum>()
                .value()
        };
        Moments::from_central(mean, central(2), central(3), central(4))
    }
}

/// Normal-probability plot: the sample quantile against the standard normal
/// quantile at plotting position `(i - 0.5)/n`.
///
/// Returns the Pearson correlation over all samples and at most `max_points`
/// pairs, evenly spaced in rank and always including both extremes.
pub fn normal_qq(sorted: &[f64], max_points: usize) -> (f64, Vec<[f64; 2]>) {
    let n = sorted.len();
    let normal = Normal::standard();
    let theory: Vec<f64> = (0..n)
        .map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64))
        .collect();
    let corr = pearson(sorted, &theory);
    let keep = max_points.clamp(2, n.max(2));
    let points = if n <= keep {
        (0..n).map(|i| [sorted[i], theory[i]]).collect()
    } else {
        (0..keep)
            .map(|j| {
                let i = (j as f64 * (n - 1) as f64 / (keep - 1) as f64).round() as usize;
                [sorted[i], theory[i]]
            })
            .collect()
    };
    (corr, points)
}

/// One-sample KS statistic of `values` (any order) against U(0, 1).
pub fn ks_uniform(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i as f64 + 1.0) / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceOptions {
    /// Stored Q-Q pairs; the correlation always uses every sample.
    pub qq_points: usize,
    /// Use every `ks_stride`-th retained sample of each path for the
    /// position-uniformity test, to limit serial correlation.
    pub ks_stride: usize,
    /// Stored (k_WP x mod 2 pi, u) pairs from the first path.
    pub phase_points: usize,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        ReduceOptions {
            qq_points: 512,
            ks_stride: 1,
            phase_points: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub fn_bar: f64,
    pub u_bar: f64,
    /// 100 (u_bar + <u_S>) / u_bar, in percent.
    pub mean_speed_ratio: f64,
    pub std_u: f64,
    pub moments: Moments,
    pub histogram: Histogram,
    pub qq_correlation: f64,
    pub qq_points: Vec<[f64; 2]>,
    pub ks_uniform_x: f64,
    pub ks_samples: usize,
    pub ks_critical_1pct: f64,
    pub phase_sample: Vec<[f64; 2]>,
    pub sample_count: usize,
}

/// Pools the post-transient samples of all paths and reduces them.
pub fn reduce(
    trajectories: &[Trajectory],
    transient_cut: f64,
    u_bar: f64,
    k_wp: f64,
    fn_bar: f64,
    opts: &ReduceOptions,
) -> Result<EnsembleStats> {
    let mut pooled = Vec::new();
    let mut phases = Vec::new();
    let mut phase_sample = Vec::new();
    for (path, tr) in trajectories.iter().enumerate() {
        let Some(first) = tr.states.first() else {
            return Err(Error::EmptyAfterCut { cut: transient_cut });
        };
        if tr.duration() <= transient_cut {
            return Err(Error::EmptyAfterCut { cut: transient_cut });
        }
        let kept: Vec<&SurgeState> = tr.states.iter().filter(|s| s.t - first.t >= transient_cut).collect();
        pooled.extend(kept.iter().map(|s| s.u));
        phases.extend(
            kept.iter()
                .step_by(opts.ks_stride.max(1))
                .map(|s| (k_wp * s.x).rem_euclid(2.0 * PI) / (2.0 * PI)),
        );
        if path == 0 {
            let stride = kept.len().div_ceil(opts.phase_points.max(1)).max(1);
            phase_sample = kept
                .iter()
                .step_by(stride)
                .map(|s| [(k_wp * s.x).rem_euclid(2.0 * PI), s.u])
                .collect();
        }
    }
    if pooled.is_empty() {
        return Err(Error::EmptyAfterCut { cut: transient_cut });
    }
    let moments = Moments::of(&pooled);
    pooled.sort_by(f64::total_cmp);
    let histogram = Histogram::freedman_diaconis(&pooled)?;
    let (qq_correlation, qq_points) = if moments.variance > 0.0 {
        normal_qq(&pooled, opts.qq_points)
    } else {
        (f64::NAN, Vec::new())
    };
    let ks_samples = phases.len();
    Ok(EnsembleStats {
        fn_bar,
        u_bar,
        mean_speed_ratio: 100.0 * (u_bar + moments.mean) / u_bar,
        std_u: moments.std(),
        moments,
        histogram,
        qq_correlation,
        qq_points,
        ks_uniform_x: ks_uniform(&mut phases),
        ks_samples,
        ks_critical_1pct: ks_critical_1pct(ks_samples),
        phase_sample,
        sample_count: pooled.len(),
    })
}

/// Everything a Froude sweep needs besides the sea state.
pub struct SweepPlan<'a> {
    pub ship: &'a ShipParams,
    pub seaway: &'a SeawaySpec,
    pub force_model: &'a dyn ForceAmplitudeModel,
    pub system: SystemKind,
    pub froude: Vec<f64>,
    pub paths: usize,
    pub sim: SimConfig,
    pub transient: f64,
    /// White-noise calibration; ignored by the other systems.
    pub noise: NoiseMethod,
    pub reduce: ReduceOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub argmax_std_fn: f64,
    pub max_std: f64,
    pub min_mean_speed_ratio: f64,
    pub max_mean_speed_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub stats: EnsembleStats,
    pub n_p: f64,
    pub noise: Option<NoiseCalibration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub system: SystemKind,
    pub omega_wp: f64,
    pub k_wp: f64,
    pub points: Vec<SweepPoint>,
    pub summary: SweepSummary,
}

impl SweepResult {
    pub fn std_curve(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.stats.std_u).collect()
    }
}

/// Path `p` of every Froude point uses wave realization `p` and Wiener
/// stream `p` of the seaway seed, so points differ only through the ship.
pub fn sweep(plan: &SweepPlan) -> Result<SweepResult> {
    if plan.froude.len() < 2 {
        return Err(Error::Config(format!(
            "a sweep needs at least 2 Froude points, got {}",
            plan.froude.len()
        )));
    }
    if plan.paths == 0 {
        return Err(Error::Config("a sweep needs at least one path".into()));
    }
    let realizations = (0..plan.paths as u64)
        .map(|p| synthesize(plan.seaway, plan.force_model, p))
        .collect::<Result<Vec<_>>>()?;
    let (omega_wp, k_wp) = (realizations[0].omega_wp, realizations[0].k_wp);
    let points = plan
        .froude
        .iter()
        .map(|&f| sweep_point(plan, &realizations, f))
        .collect::<Result<Vec<_>>>()?;

    let best = points
        .iter()
        .max_by(|a, b| a.stats.std_u.total_cmp(&b.stats.std_u))
        .expect("at least two points");
    let ratios = points.iter().map(|p| p.stats.mean_speed_ratio);
    let summary = SweepSummary {
        argmax_std_fn: best.stats.fn_bar,
        max_std: best.stats.std_u,
        min_mean_speed_ratio: ratios.clone().fold(f64::INFINITY, f64::min),
        max_mean_speed_ratio: ratios.fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(SweepResult {
        system: plan.system,
        omega_wp,
        k_wp,
        points,
        summary,
    })
}

fn sweep_point(plan: &SweepPlan, realizations: &[WaveRealization], fn_bar: f64) -> Result<SweepPoint> {
    let op = operating_point_for_froude(plan.ship, fn_bar)?;
    let model = SurgeModel::from_ship(plan.ship, &op);
    let noise = match plan.system {
        SystemKind::White => Some(calibrate_noise_at_speed(&realizations[0], plan.noise, op.u_bar)?),
        _ => None,
    };
    let trajectories = realizations
        .par_iter()
        .enumerate()
        .map(|(path, r)| run_path(plan, &model, r, noise.as_ref(), path as u64))
        .collect::<Result<Vec<_>>>()?;
    let stats = reduce(
        &trajectories,
        plan.transient,
        op.u_bar,
        realizations[0].k_wp,
        fn_bar,
        &plan.reduce,
    )?;
    Ok(SweepPoint {
        stats,
        n_p: op.n_p,
        noise,
    })
}

/// One path of the selected system from rest.
pub fn run_path(
    plan: &SweepPlan,
    model: &SurgeModel,
    r: &WaveRealization,
    noise: Option<&NoiseCalibration>,
    path: u64,
) -> Result<Trajectory> {
    let cfg = &plan.sim;
    let mut rec = Recorder::new(cfg.record_stride, cfg.steps() as usize / cfg.record_stride.max(1) + 1);
    let ic = SurgeState::at_rest();
    match plan.system {
        SystemKind::Colored => run_colored(model, r, ic, cfg, |s| rec.visit(s))?,
        SystemKind::Approx => run_approx(model, r, ic, cfg, |s| rec.visit(s))?,
        SystemKind::White => {
            let noise = noise.ok_or_else(|| Error::invalid("white-noise path without calibration"))?;
            let guard = cfg.guard.unwrap_or(GUARD_CELERITIES * r.peak_celerity());
            let system = WhiteNoiseSystem::new(*model, noise.intensity, r.k_wp, guard);
            let mut rng = rng::stream(plan.seaway.seed, Domain::Wiener, path);
            system.run(ic, cfg.dt, cfg.steps(), &mut rng, |s| rec.visit(s))?
        }
    };
    Ok(rec.trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seaway::LinearGain;
    use crate::ship_model::fixtures::synthetic;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng::stream(seed, Domain::Test, 0);
        (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }

    fn path(us: &[f64], dt: f64) -> Trajectory {
        Trajectory {
            states: us
                .iter()
                .enumerate()
                .map(|(i, &u)| SurgeState::new(i as f64 * dt, i as f64 * dt * 1.7, u))
                .collect(),
        }
    }

    #[test]
    fn constant_samples_are_degenerate() {
        let tr = vec![path(&[0.0; 500], 0.1), path(&[0.0; 500], 0.1)];
        let s = reduce(&tr, 10.0, 2.0, 1.2, 0.4, &ReduceOptions::default()).unwrap();
        assert_eq!(s.mean_speed_ratio, 100.0);
        assert_eq!(s.std_u, 0.0);
        assert!(s.histogram.degenerate);
        assert_eq!(s.histogram.mass, vec![1.0]);
    }

    #[test]
    fn cut_beyond_trajectory_fails() {
        let tr = vec![path(&[0.0; 10], 0.1)];
        assert!(matches!(
            reduce(&tr, 5.0, 1.0, 1.0, 0.3, &ReduceOptions::default()),
            Err(Error::EmptyAfterCut { .. })
        ));
    }

    #[test]
    fn gaussian_samples_give_straight_qq() {
        let v = gaussian(100_000, 3);
        let tr = vec![path(&v, 0.01)];
        let s = reduce(&tr, 0.0, 2.0, 1.0, 0.4, &ReduceOptions::default()).unwrap();
        assert!(s.qq_correlation > 0.999);
        assert!(s.qq_points.len() <= 512);
        assert!(s.qq_points.windows(2).all(|w| w[0][0] <= w[1][0] && w[0][1] < w[1][1]));
        let total: f64 = s.histogram.mass.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn skewed_samples_fail_qq() {
        let v: Vec<f64> = gaussian(100_000, 4).iter().map(|z| z.exp()).collect();
        let (corr, _) = normal_qq(
            &{
                let mut s = v.clone();
                s.sort_by(f64::total_cmp);
                s
            },
            100,
        );
        assert!(corr < 0.95);
    }

    #[test]
    fn histogram_moments_agree_with_sample_moments() {
        let v: Vec<f64> = gaussian(200_000, 5).iter().map(|z| 0.3 + 0.2 * z).collect();
        let m = Moments::of(&v);
        let mut s = v.clone();
        s.sort_by(f64::total_cmp);
        let h = Histogram::freedman_diaconis(&s).unwrap();
        let hm = h.moments();
        let w = h.bin_width();
        assert!((hm.mean - m.mean).abs() < w / 2.0);
        // Sheppard: binning inflates the variance by about w^2/12
        assert!((hm.variance - m.variance).abs() < w * w / 12.0 + 0.01 * m.variance);
    }

    #[test]
    fn reduction_is_permutation_invariant() {
        let paths: Vec<Trajectory> = (0..6).map(|i| path(&gaussian(5000, 10 + i), 0.05)).collect();
        let opts = ReduceOptions::default();
        let a = reduce(&paths, 20.0, 1.5, 1.1, 0.4, &opts).unwrap();
        let mut rev = paths.clone();
        rev.reverse();
        rev.swap(1, 3);
        let b = reduce(&rev, 20.0, 1.5, 1.1, 0.4, &opts).unwrap();
        assert!((a.std_u - b.std_u).abs() < 1e-12);
        assert!((a.mean_speed_ratio - b.mean_speed_ratio).abs() < 1e-12);
        assert_eq!(a.histogram, b.histogram);
        assert_eq!(a.qq_points, b.qq_points);
        assert_eq!(a.ks_uniform_x, b.ks_uniform_x);
    }

    #[test]
    fn ks_uniform_detects_non_uniform() {
        let mut rng = rng::stream(8, Domain::Test, 1);
        let mut u: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_uniform(&mut u) < ks_critical_1pct(20_000));
        let mut sq: Vec<f64> = u.iter().map(|v| v * v).collect();
        assert!(ks_uniform(&mut sq) > 0.2);
    }

    #[test]
    fn moments_of_known_set() {
        let m = Moments::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(m.mean, 2.5);
        assert_relative_eq!(m.variance, 1.25);
        assert_relative_eq!(m.skewness, 0.0, epsilon = 1e-15);
        assert_relative_eq!(m.excess_kurtosis, 1.64 - 3.0, max_relative = 1e-12);
    }

    fn small_plan<'a>(
        ship: &'a ShipParams,
        seaway: &'a SeawaySpec,
        gain: &'a LinearGain,
        system: SystemKind,
        froude: Vec<f64>,
    ) -> SweepPlan<'a> {
        SweepPlan {
            ship,
            seaway,
            force_model: gain,
            system,
            froude,
            paths: 2,
            sim: SimConfig::new(60.0, 1.414 / 200.0).with_stride(5),
            transient: 10.0,
            noise: NoiseMethod::Encounter,
            reduce: ReduceOptions::default(),
        }
    }

    #[test]
    fn identical_points_give_identical_stats() {
        let ship = synthetic();
        let seaway = SeawaySpec::new(0.1, 1.414, 60, 17, 9.81).unwrap();
        let gain = LinearGain::constant(360.0);
        for system in [SystemKind::Colored, SystemKind::Approx, SystemKind::White] {
            let r = sweep(&small_plan(&ship, &seaway, &gain, system, vec![0.5, 0.5])).unwrap();
            assert_eq!(r.points[0], r.points[1], "{system}");
            assert!(r.points[0].stats.std_u > 0.0);
        }
    }

    #[test]
    fn sweep_needs_two_points() {
        let ship = synthetic();
        let seaway = SeawaySpec::new(0.1, 1.414, 60, 17, 9.81).unwrap();
        let gain = LinearGain::constant(360.0);
        assert!(sweep(&small_plan(&ship, &seaway, &gain, SystemKind::Colored, vec![0.5])).is_err());
    }
}
