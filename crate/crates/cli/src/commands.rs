//! Subcommand implementations.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use surfride_core::deterministic::{
    classify, find_thresholds, standard_grid, InitialCondition, PhasePortrait, RegularWave, ThresholdConfig,
    ThresholdResult,
};
use surfride_core::fpk::{compare_to_empirical, Comparison, StationaryPdf};
use surfride_core::seaway::{synthesize, SeawaySpec, WaveRealization};
use surfride_core::ship_model::{compute_alphas, operating_point_for_froude, AlphaCoeffs, OperatingPoint};
use surfride_core::stats::{reduce, run_path, sweep, EnsembleStats, ReduceOptions, SweepPlan, SweepResult};
use surfride_core::stochastic::{calibrate_noise_at_speed, NoiseCalibration, SimConfig, SystemKind};
use surfride_core::surge::{SurgeModel, Trajectory};
use surfride_core::{Error, Result};

use crate::config::{self, Loaded, SimulationSection};
use crate::output::{record_run, ArtifactDir, RunRecord};
use crate::row;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Portrait,
    Threshold,
    Simulate,
    Sweep,
    Fpk,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Portrait => "portrait",
            Command::Threshold => "threshold",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Fpk => "fpk",
            Command::Compare => "compare",
        }
    }
}

/// Command-line overrides of campaign keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub froude: Option<f64>,
    pub paths: Option<usize>,
    pub system: Option<SystemKind>,
}

/// Loads the campaign, runs `cmd` on a pool of the configured size and
/// returns the output directory.
pub fn run(cmd: Command, campaign: &Path, ov: &Overrides) -> Result<PathBuf> {
    let loaded = config::load(campaign)?;
    let threads = ov.threads.unwrap_or(loaded.campaign.threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let out = ArtifactDir::create(loaded.output_dir(ov.output.as_deref()))?;
    let dir = out.dir.clone();
    let ctx = Ctx { loaded, ov, out };
    pool.install(|| ctx.dispatch(cmd))?;
    Ok(dir)
}

struct Ctx<'a> {
    loaded: Loaded,
    ov: &'a Overrides,
    out: ArtifactDir,
}

impl Ctx<'_> {
    fn dispatch(mut self, cmd: Command) -> Result<()> {
        let derived = match cmd {
            Command::Portrait => self.portrait()?,
            Command::Threshold => self.threshold()?,
            Command::Simulate => self.simulate()?,
            Command::Sweep => self.sweep()?,
            Command::Fpk => self.fpk()?,
            Command::Compare => self.compare()?,
        };
        let mut seeds = BTreeMap::new();
        if let Some(s) = &self.loaded.campaign.seaway {
            seeds.insert("seaway".to_string(), s.seed);
        }
        let record = RunRecord {
            version: VERSION.to_string(),
            config_sha256: self.loaded.hash.clone(),
            seeds,
            derived,
            files: std::mem::take(&mut self.out.files),
        };
        record_run(&self.out.dir, cmd.name(), record)
    }

    fn froude(&self, from_config: Option<f64>, section: &str) -> Result<f64> {
        self.ov.froude.or(from_config).ok_or_else(|| {
            Error::Config(format!(
                "no Froude number: set `froude` in [{section}] or pass --froude"
            ))
        })
    }

    fn operating_point(&self, fn_bar: f64) -> Result<(OperatingPoint, AlphaCoeffs)> {
        let op = operating_point_for_froude(&self.loaded.ship, fn_bar)?;
        Ok((op, compute_alphas(&self.loaded.ship, &op)))
    }

    fn regular_wave(&self) -> Result<RegularWave> {
        let rw = &self.loaded.campaign.regular_wave;
        let ship = &self.loaded.ship;
        let wavelength = match rw.wavelength_ratio {
            Some(r) => r * ship.length,
            None => {
                let k_wp = self.loaded.seaway()?.peak_frequency().powi(2) / ship.gravity;
                2.0 * PI / k_wp
            }
        };
        RegularWave::from_model(
            wavelength,
            rw.steepness,
            self.loaded.force.as_ref(),
            ship.gravity,
            rw.max_steepness,
        )
        .map_err(|e| Error::Config(format!("[regular_wave]: {e}")))
    }

    fn wave_json(&self, w: &RegularWave) -> serde_json::Value {
        json!({
            "wavelength": w.wavelength,
            "wavelength_ratio": w.wavelength / self.loaded.ship.length,
            "steepness": w.steepness,
            "celerity": w.celerity,
            "force_amplitude": w.force_amplitude,
            "fn_celerity": self.loaded.ship.froude(w.celerity),
        })
    }

    fn portrait(&mut self) -> Result<serde_json::Value> {
        let section = self.loaded.campaign.portrait.clone();
        let fn_bar = self.froude(section.as_ref().map(|s| s.froude), "portrait")?;
        let phases = section.map_or(16, |s| s.phases);
        let w = self.regular_wave()?;
        let (op, alphas) = self.operating_point(fn_bar)?;
        let grid = standard_grid(&w, op.u_bar, phases);
        let portrait = classify(&self.loaded.ship, &op, &w, &grid, &self.loaded.campaign.classify)?;

        let rows = portrait.trajectories.iter().enumerate().flat_map(|(i, tr)| {
            tr.samples
                .iter()
                .map(move |s| row![i, s.t, s.xi, s.u, tr.outcome.to_string().as_str()])
        });
        self.out
            .csv("portrait.csv", &["trajectory", "t", "xi", "u", "label"], rows)?;
        self.out.json("portrait.json", &PortraitSummary::new(&portrait))?;
        Ok(json!({ "fn_bar": fn_bar, "n_p": op.n_p, "u_bar": op.u_bar, "alphas": alphas, "wave": self.wave_json(&w) }))
    }

    fn threshold(&mut self) -> Result<serde_json::Value> {
        let t = &self.loaded.campaign.threshold;
        let cfg = ThresholdConfig {
            scan_points: t.scan_points,
            phases: t.phases,
            tol: t.tol,
            classify: self.loaded.campaign.classify,
        };
        let range = (t.froude_range[0], t.froude_range[1]);
        let w = self.regular_wave()?;
        let result = find_thresholds(&self.loaded.ship, &w, range, &cfg)?;
        let report = ThresholdReport {
            wave: self.wave_json(&w),
            froude_range: t.froude_range,
            tol: t.tol,
            result,
        };
        self.out.json("thresholds.json", &report)?;
        Ok(json!({ "wave": report.wave }))
    }

    fn sim_config(&self, sim: &SimulationSection, seaway: &SeawaySpec) -> SimConfig {
        SimConfig {
            horizon: sim.horizon,
            dt: sim.dt.unwrap_or(seaway.t01 / 200.0),
            record_stride: sim.record_stride,
            guard: sim.guard,
        }
    }

    fn reduce_options(&self, cfg: &SimConfig, seaway: &SeawaySpec) -> ReduceOptions {
        let sweep = self.loaded.campaign.sweep.as_ref();
        let spacing = sweep.and_then(|s| s.ks_spacing).unwrap_or(5.0 * seaway.t01);
        ReduceOptions {
            qq_points: sweep.map_or(512, |s| s.qq_points),
            ks_stride: ((spacing / (cfg.dt * cfg.record_stride as f64)).round() as usize).max(1),
            ..ReduceOptions::default()
        }
    }

    fn plan<'p>(&'p self, seaway: &'p SeawaySpec, system: SystemKind, froude: Vec<f64>) -> Result<SweepPlan<'p>> {
        let sim = self.loaded.simulation()?;
        let cfg = self.sim_config(sim, seaway);
        Ok(SweepPlan {
            ship: &self.loaded.ship,
            seaway,
            force_model: self.loaded.force.as_ref(),
            system,
            froude,
            paths: self.ov.paths.unwrap_or(sim.paths),
            sim: cfg,
            transient: sim.transient.unwrap_or(100.0 * seaway.t01),
            noise: self.loaded.campaign.noise.method(seaway.peak_frequency())?,
            reduce: self.reduce_options(&cfg, seaway),
        })
    }

    fn system(&self) -> Result<SystemKind> {
        Ok(self.ov.system.unwrap_or(self.loaded.simulation()?.system))
    }

    fn realizations(plan: &SweepPlan) -> Result<Vec<WaveRealization>> {
        if plan.paths == 0 {
            return Err(Error::Config("need at least one path".into()));
        }
        (0..plan.paths as u64)
            .map(|p| synthesize(plan.seaway, plan.force_model, p))
            .collect()
    }

    /// Runs every path of one operating point.
    fn ensemble(plan: &SweepPlan, fn_bar: f64) -> Result<Ensemble> {
        let op = operating_point_for_froude(plan.ship, fn_bar)?;
        let model = SurgeModel::from_ship(plan.ship, &op);
        let realizations = Self::realizations(plan)?;
        let noise = match plan.system {
            SystemKind::White => Some(calibrate_noise_at_speed(&realizations[0], plan.noise, op.u_bar)?),
            _ => None,
        };
        let trajectories = realizations
            .par_iter()
            .enumerate()
            .map(|(p, r)| run_path(plan, &model, r, noise.as_ref(), p as u64))
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble {
            op,
            alphas: model.alphas,
            k_wp: realizations[0].k_wp,
            omega_wp: realizations[0].omega_wp,
            noise,
            trajectories,
        })
    }

    fn simulate(&mut self) -> Result<serde_json::Value> {
        let seaway = self.loaded.seaway()?;
        let system = self.system()?;
        let fn_bar = self.froude(self.loaded.simulation()?.froude, "simulation")?;
        let plan = self.plan(&seaway, system, vec![fn_bar])?;
        let Ensemble {
            op,
            alphas,
            k_wp,
            omega_wp,
            noise,
            trajectories,
        } = Self::ensemble(&plan, fn_bar)?;
        let stats = reduce(&trajectories, plan.transient, op.u_bar, k_wp, fn_bar, &plan.reduce)?;
        let derived = json!({
            "system": system,
            "omega_wp": omega_wp,
            "k_wp": k_wp,
            "fn_bar": fn_bar,
            "n_p": op.n_p,
            "u_bar": op.u_bar,
            "alphas": alphas,
            "noise": noise,
            "dt": plan.sim.dt,
        });
        drop(plan);

        let rows = trajectories
            .iter()
            .enumerate()
            .flat_map(|(p, tr)| tr.states.iter().map(move |s| row![p, s.t, s.x, s.u]));
        self.out
            .csv(&format!("trajectories_{system}.csv"), &["path", "t", "x", "u"], rows)?;
        self.out.json(
            &format!("ensemble_{system}.json"),
            &json!({ "noise": noise, "stats": stats }),
        )?;
        self.write_point_tables(&format!("ensemble_{system}"), std::slice::from_ref(&stats))?;
        Ok(derived)
    }

    fn sweep(&mut self) -> Result<serde_json::Value> {
        let seaway = self.loaded.seaway()?;
        let system = self.system()?;
        let froude = self
            .loaded
            .campaign
            .sweep
            .as_ref()
            .map(|s| s.froude.clone())
            .ok_or_else(|| Error::Config("`sweep` needs a [sweep] section".into()))?;
        let plan = self.plan(&seaway, system, froude)?;
        let result = sweep(&plan)?;
        let alphas = |f: f64| self.operating_point(f).map(|(_, a)| a);
        let points = result
            .points
            .iter()
            .map(|p| {
                Ok(json!({
                    "fn_bar": p.stats.fn_bar,
                    "n_p": p.n_p,
                    "u_bar": p.stats.u_bar,
                    "alphas": alphas(p.stats.fn_bar)?,
                    "noise": p.noise,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        let derived = json!({
            "system": system,
            "omega_wp": result.omega_wp,
            "k_wp": result.k_wp,
            "dt": plan.sim.dt,
            "points": points,
        });
        drop(plan);
        self.write_sweep(&result)?;
        Ok(derived)
    }

    fn write_sweep(&mut self, r: &SweepResult) -> Result<()> {
        let stem = format!("sweep_{}", r.system);
        let rows = r.points.iter().map(|p| {
            let s = &p.stats;
            row![
                s.fn_bar,
                p.n_p,
                s.u_bar,
                s.mean_speed_ratio,
                s.std_u,
                s.moments.skewness,
                s.moments.excess_kurtosis,
                s.qq_correlation,
                s.ks_uniform_x,
                s.ks_critical_1pct,
                s.ks_samples,
                s.sample_count,
                p.noise.map(|n| n.d_squared),
            ]
        });
        self.out.csv(
            &format!("{stem}.csv"),
            &[
                "fn",
                "n_p",
                "u_bar",
                "mean_speed_ratio",
                "std_u",
                "skewness",
                "excess_kurtosis",
                "qq_corr",
                "ks_x",
                "ks_crit_1pct",
                "ks_samples",
                "samples",
                "d_squared",
            ],
            rows,
        )?;
        self.out.json(&format!("{stem}.json"), r)?;
        let stats: Vec<EnsembleStats> = r.points.iter().map(|p| p.stats.clone()).collect();
        self.write_point_tables(&stem, &stats)?;
        self.out.text(&format!("{stem}.gp"), &gnuplot_script(&stem))
    }

    /// Histogram, Q-Q and phase-plane tables, one block per Froude number.
    fn write_point_tables(&mut self, stem: &str, stats: &[EnsembleStats]) -> Result<()> {
        let hist = stats.iter().flat_map(|s| {
            let h = &s.histogram;
            let d = h.density();
            (0..h.bins()).map(move |i| row![s.fn_bar, h.edges[i], h.edges[i + 1], h.mass[i], d[i]])
        });
        self.out.csv(
            &format!("{stem}_hist.csv"),
            &["fn", "lo", "hi", "mass", "density"],
            hist,
        )?;
        let qq = stats
            .iter()
            .flat_map(|s| s.qq_points.iter().map(move |q| row![s.fn_bar, q[0], q[1]]));
        self.out
            .csv(&format!("{stem}_qq.csv"), &["fn", "sample", "normal"], qq)?;
        let phase = stats
            .iter()
            .flat_map(|s| s.phase_sample.iter().map(move |q| row![s.fn_bar, q[0], q[1]]));
        self.out
            .csv(&format!("{stem}_phase.csv"), &["fn", "kx_mod_2pi", "u"], phase)
    }

    /// Stationary density of the white-noise system at the `[fpk]` point.
    fn stationary(&self) -> Result<(f64, OperatingPoint, NoiseCalibration, StationaryPdf, f64)> {
        let seaway = self.loaded.seaway()?;
        let fn_bar = self.froude(self.loaded.campaign.fpk.as_ref().map(|f| f.froude), "fpk")?;
        let (op, alphas) = self.operating_point(fn_bar)?;
        let r = synthesize(&seaway, self.loaded.force.as_ref(), 0)?;
        let method = self.loaded.campaign.noise.method(seaway.peak_frequency())?;
        let noise = calibrate_noise_at_speed(&r, method, op.u_bar)?;
        let pdf = StationaryPdf::new(alphas, self.loaded.ship.total_mass(), &noise.intensity)?;
        Ok((fn_bar, op, noise, pdf, r.k_wp))
    }

    fn fpk_derived(
        fn_bar: f64,
        op: &OperatingPoint,
        noise: &NoiseCalibration,
        pdf: &StationaryPdf,
        k_wp: f64,
    ) -> serde_json::Value {
        json!({
            "fn_bar": fn_bar,
            "n_p": op.n_p,
            "u_bar": op.u_bar,
            "k_wp": k_wp,
            "alphas": pdf.alphas,
            "total_mass": pdf.total_mass,
            "noise": noise,
            "d_squared": pdf.d_squared,
        })
    }

    fn fpk(&mut self) -> Result<serde_json::Value> {
        let (fn_bar, op, noise, pdf, k_wp) = self.stationary()?;
        let points = self.loaded.campaign.fpk.as_ref().map_or(401, |f| f.points);
        let rows = pdf.table(points).into_iter().map(|[u, p, c]| row![u, p, c]);
        self.out.csv("pdf.csv", &["u", "pdf", "cdf"], rows)?;
        let report = json!({
            "fn_bar": fn_bar,
            "u_bar": op.u_bar,
            "alphas": pdf.alphas,
            "total_mass": pdf.total_mass,
            "d_squared": pdf.d_squared,
            "beta": pdf.beta(),
            "log_c_p": pdf.log_c_p,
            "support": pdf.support,
            "mode": pdf.mode(),
            "moments": pdf.moments(),
            "linear_variance": pdf.linear_variance(),
            "detailed_balance_residual": pdf.detailed_balance_residual(1000),
        });
        self.out.json("fpk.json", &report)?;
        Ok(Self::fpk_derived(fn_bar, &op, &noise, &pdf, k_wp))
    }

    fn compare(&mut self) -> Result<serde_json::Value> {
        let (fn_bar, op, noise, pdf, k_wp) = self.stationary()?;
        let seaway = self.loaded.seaway()?;
        let mut plan = self.plan(&seaway, SystemKind::White, vec![fn_bar])?;
        if let Some(f) = &self.loaded.campaign.fpk {
            plan.sim.record_stride = f.record_stride;
            plan.sim.horizon = f.horizon.unwrap_or(plan.sim.horizon);
            plan.paths = self.ov.paths.or(f.paths).unwrap_or(plan.paths);
        }
        let model = SurgeModel::from_ship(plan.ship, &op);
        let realizations = Self::realizations(&plan)?;
        let trajectories = realizations
            .par_iter()
            .enumerate()
            .map(|(p, r)| run_path(&plan, &model, r, Some(&noise), p as u64))
            .collect::<Result<Vec<_>>>()?;
        let mut samples = Vec::new();
        for tr in &trajectories {
            let t0 = tr.states.first().map_or(0.0, |s| s.t);
            samples.extend(tr.states.iter().filter(|s| s.t - t0 >= plan.transient).map(|s| s.u));
        }
        let transient = plan.transient;
        drop(plan);
        if samples.is_empty() {
            return Err(Error::EmptyAfterCut { cut: transient });
        }
        let cmp: Comparison = compare_to_empirical(&pdf, &samples)?;

        let mut sorted = samples;
        sorted.sort_by(f64::total_cmp);
        let hist = surfride_core::stats::Histogram::freedman_diaconis(&sorted)?;
        let rows = (0..hist.bins()).map(|i| {
            let (lo, hi) = (hist.edges[i], hist.edges[i + 1]);
            row![lo, hi, hist.mass[i], pdf.cdf(hi) - pdf.cdf(lo)]
        });
        self.out.csv(
            "compare_hist.csv",
            &["lo", "hi", "empirical_mass", "analytic_mass"],
            rows,
        )?;
        self.out.json(
            "compare.json",
            &json!({ "fn_bar": fn_bar, "u_bar": op.u_bar, "comparison": cmp }),
        )?;
        Ok(Self::fpk_derived(fn_bar, &op, &noise, &pdf, k_wp))
    }
}

struct Ensemble {
    op: OperatingPoint,
    alphas: AlphaCoeffs,
    k_wp: f64,
    omega_wp: f64,
    noise: Option<NoiseCalibration>,
    trajectories: Vec<Trajectory>,
}

#[derive(Serialize)]
struct PortraitSummary {
    fn_bar: f64,
    u_bar: f64,
    wave: RegularWave,
    captured_fraction: f64,
    trajectories: Vec<PortraitEntry>,
}

#[derive(Serialize)]
struct PortraitEntry {
    ic: InitialCondition,
    outcome: String,
}

impl PortraitSummary {
    fn new(p: &PhasePortrait) -> Self {
        PortraitSummary {
            fn_bar: p.fn_bar,
            u_bar: p.u_bar,
            wave: p.wave,
            captured_fraction: p.captured_fraction(),
            trajectories: p
                .trajectories
                .iter()
                .map(|t| PortraitEntry {
                    ic: t.ic,
                    outcome: t.outcome.to_string(),
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct ThresholdReport {
    wave: serde_json::Value,
    froude_range: [f64; 2],
    tol: f64,
    #[serde(flatten)]
    result: ThresholdResult,
}

/// Four-panel layout: phase-plane sample, histogram, Q-Q and the
/// ratio/std curves. Run with `gnuplot <stem>.gp` inside the output dir.
fn gnuplot_script(stem: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 1200,900\n\
         set output '{stem}.png'\n\
         set multiplot layout 2,2\n\
         set xlabel 'k_WP x mod 2 pi'; set ylabel 'u_S [m/s]'\n\
         plot '{stem}_phase.csv' using 2:3 with dots\n\
         set xlabel 'u_S [m/s]'; set ylabel 'density'\n\
         plot '{stem}_hist.csv' using (($2+$3)/2):5 with steps\n\
         set xlabel 'normal quantile'; set ylabel 'sample quantile'\n\
         plot '{stem}_qq.csv' using 3:2 with points pt 7 ps 0.3\n\
         set xlabel 'Fn'; set ylabel 'std u_S [m/s]'; set y2label 'mean speed ratio [%]'; set y2tics\n\
         plot '{stem}.csv' using 1:5 with linespoints, '' using 1:4 axes x1y2 with linespoints\n\
         unset multiplot\n"
    )
}
