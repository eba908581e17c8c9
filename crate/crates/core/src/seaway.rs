//! ITTC two-parameter spectrum, band-limited frequency discretisation and
//! random-phase superposition of elevation and surge force.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

pub const DEFAULT_COMPONENTS: usize = 500;
pub const DEFAULT_BAND: (f64, f64) = (0.5, 7.0);

/// Sea state and discretisation of one irregular seaway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeawaySpec {
    /// Significant wave height H_1/3 (m).
    pub h13: f64,
    /// Mean wave period T_01 (s).
    pub t01: f64,
    pub n_components: usize,
    /// Absolute band limits (rad/s).
    pub band: (f64, f64),
    pub seed: u64,
    pub gravity: f64,
}

impl SeawaySpec {
    /// Spec with the default `[0.5, 7] * omega_WP` band.
    pub fn new(h13: f64, t01: f64, n_components: usize, seed: u64, gravity: f64) -> Result<Self> {
        Self::with_band_multipliers(h13, t01, n_components, seed, gravity, DEFAULT_BAND)
    }

    pub fn with_band_multipliers(
        h13: f64,
        t01: f64,
        n_components: usize,
        seed: u64,
        gravity: f64,
        (lo, hi): (f64, f64),
    ) -> Result<Self> {
        if !(t01 > 0.0) {
            return Err(Error::invalid(format!("T_01 must be positive, got {t01}")));
        }
        let wp = peak_frequency(t01);
        let spec = SeawaySpec {
            h13,
            t01,
            n_components,
            band: (lo * wp, hi * wp),
            seed,
            gravity,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h13 > 0.0 && self.t01 > 0.0) {
            return Err(Error::invalid("H_1/3 and T_01 must be positive"));
        }
        if self.n_components == 0 {
            return Err(Error::invalid("need at least one wave component"));
        }
        let (lo, hi) = self.band;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::invalid(format!(
                "band must satisfy 0 < lo < hi, got [{lo}, {hi}]"
            )));
        }
        if !(self.gravity > 0.0) {
            return Err(Error::invalid("gravity must be positive"));
        }
        Ok(())
    }

    pub fn peak_frequency(&self) -> f64 {
        peak_frequency(self.t01)
    }

    pub fn spectrum_density(&self, omega: f64) -> Result<f64> {
        spectrum_density(self.h13, self.t01, omega)
    }

    /// Frequency spacing of the discretisation.
    pub fn d_omega(&self) -> f64 {
        (self.band.1 - self.band.0) / self.n_components as f64
    }
}

/// ITTC 1978 spectrum S(omega) in m^2 s.
pub fn spectrum_density(h13: f64, t01: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("spectrum needs omega > 0, got {omega}")));
    }
    let t4 = t01.powi(4);
    let w4 = omega.powi(4);
    Ok(172.8 * h13 * h13 / (t4 * w4 * omega) * (-691.2 / (t4 * w4)).exp())
}

/// Peak frequency omega_WP of the ITTC spectrum.
pub fn peak_frequency(t01: f64) -> f64 {
    (0.8 * 691.2 / t01.powi(4)).powf(0.25)
}

/// Maps a component (frequency, elevation amplitude) to a surge force
/// amplitude.
pub trait ForceAmplitudeModel: Sync {
    fn force_amplitude(&self, omega: f64, amplitude: f64) -> f64;
}

/// Force amplitude linear in the wave amplitude, `F = G(omega) a`, with the
/// gain either constant or linearly interpolated from a table (held constant
/// beyond its ends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearGain {
    /// (omega, gain) pairs sorted by omega; a single entry means constant gain.
    table: Vec<(f64, f64)>,
}

impl LinearGain {
    pub fn constant(gain: f64) -> Self {
        LinearGain {
            table: vec![(0.0, gain)],
        }
    }

    pub fn table(mut table: Vec<(f64, f64)>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::Config("gain table is empty".into()));
        }
        if table.iter().any(|(w, g)| !w.is_finite() || !g.is_finite() || *g < 0.0) {
            return Err(Error::Config(
                "gain table needs finite omega and non-negative gain".into(),
            ));
        }
        table.sort_by(|a, b| a.0.total_cmp(&b.0));
        if table.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Config("gain table has duplicate frequencies".into()));
        }
        Ok(LinearGain { table })
    }

    /// Reads a two-column `omega,gain` CSV (header row optional).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut table = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let line = record.position().map_or(i + 1, |p| p.line() as usize);
            if record.len() != 2 {
                return Err(Error::Parse {
                    path: path.into(),
                    line,
                    message: format!("expected 2 columns (omega, gain), got {}", record.len()),
                });
            }
            let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse).collect();
            match parsed {
                Ok(v) => table.push((v[0], v[1])),
                Err(_) if i == 0 => continue,
                Err(e) => {
                    return Err(Error::Parse {
                        path: path.into(),
                        line,
                        message: e.to_string(),
                    })
                }
            }
        }
        Self::table(table)
    }

    pub fn gain(&self, omega: f64) -> f64 {
        let t = &self.table;
        if omega <= t[0].0 {
            return t[0].1;
        }
        if omega >= t[t.len() - 1].0 {
            return t[t.len() - 1].1;
        }
        let i = t.partition_point(|e| e.0 <= omega);
        let (w0, g0) = t[i - 1];
        let (w1, g1) = t[i];
        g0 + (g1 - g0) * (omega - w0) / (w1 - w0)
    }
}

impl ForceAmplitudeModel for LinearGain {
    fn force_amplitude(&self, omega: f64, amplitude: f64) -> f64 {
        self.gain(omega) * amplitude
    }
}

/// One sampled irregular seaway: per-component frequency, wavenumber,
/// phase, elevation amplitude and surge-force amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveRealization {
    pub omega: Vec<f64>,
    pub k: Vec<f64>,
    pub phase: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub force: Vec<f64>,
    pub d_omega: f64,
    pub omega_wp: f64,
    /// Representative wavenumber at the spectral peak.
    pub k_wp: f64,
    pub gravity: f64,
}

/// Samples a realization using phase stream `path` of `spec.seed`.
///
/// Components sit at the midpoints of `n_components` equal cells spanning
/// the band, with `a_i = sqrt(2 S(omega_i) d_omega)`.
pub fn synthesize(spec: &SeawaySpec, model: &dyn ForceAmplitudeModel, path: u64) -> Result<WaveRealization> {
    spec.validate()?;
    let omega_wp = spec.peak_frequency();
    let (lo, hi) = spec.band;
    if !(lo <= omega_wp && omega_wp <= hi) {
        return Err(Error::Config(format!(
            "band [{lo:.4}, {hi:.4}] rad/s excludes the spectral peak {omega_wp:.4} rad/s; \
             the representative wavenumber would fall outside the synthesized band"
        )));
    }
    let d_omega = spec.d_omega();
    let g = spec.gravity;
    let mut rng = rng::stream(spec.seed, Domain::WavePhases, path);
    let n = spec.n_components;
    let mut r = WaveRealization {
        omega: Vec::with_capacity(n),
        k: Vec::with_capacity(n),
        phase: Vec::with_capacity(n),
        amplitude: Vec::with_capacity(n),
        force: Vec::with_capacity(n),
        d_omega,
        omega_wp,
        k_wp: omega_wp * omega_wp / g,
        gravity: g,
    };
    for i in 0..n {
        let w = lo + (i as f64 + 0.5) * d_omega;
        let a = (2.0 * spec.spectrum_density(w)? * d_omega).sqrt();
        r.omega.push(w);
        r.k.push(w * w / g);
        r.phase.push(rng.random_range(0.0..2.0 * PI));
        r.amplitude.push(a);
        r.force.push(model.force_amplitude(w, a));
    }
    Ok(r)
}

impl WaveRealization {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Surface elevation sum a_i cos(omega_i t - k_i x + eps_i).
    pub fn wave_elevation(&self, t: f64, x: f64) -> f64 {
        (0..self.len())
            .map(|i| self.amplitude[i] * (self.omega[i] * t - self.k[i] * x + self.phase[i]).cos())
            .sum()
    }

    /// Surge force sum F_i sin(omega_i t - k_i x + eps_i).
    pub fn wave_force(&self, t: f64, x: f64) -> f64 {
        let mut f = 0.0;
        for i in 0..self.len() {
            f += self.force[i] * (self.omega[i] * t - self.k[i] * x + self.phase[i]).sin();
        }
        f
    }

    /// Position-free quadratures (F_Ws, F_Wc) =
    /// (sum F_i sin(omega_i t + eps_i), sum F_i cos(omega_i t + eps_i)).
    pub fn split_force(&self, t: f64) -> (f64, f64) {
        let mut s = 0.0;
        let mut c = 0.0;
        for i in 0..self.len() {
            let (sin, cos) = (self.omega[i] * t + self.phase[i]).sin_cos();
            s += self.force[i] * sin;
            c += self.force[i] * cos;
        }
        (s, c)
    }

    /// Force under the representative-wavenumber approximation,
    /// cos(k_WP x) F_Ws(t) - sin(k_WP x) F_Wc(t).
    pub fn approx_force(&self, t: f64, x: f64) -> f64 {
        let (fs, fc) = self.split_force(t);
        let (sin, cos) = (self.k_wp * x).sin_cos();
        cos * fs - sin * fc
    }

    /// Copy with every component wavenumber replaced by `k`.
    pub fn with_uniform_wavenumber(&self, k: f64) -> Self {
        let mut r = self.clone();
        r.k.iter_mut().for_each(|ki| *ki = k);
        r
    }

    /// Sum a_i^2 / 2, the discrete elevation variance.
    pub fn elevation_variance(&self) -> f64 {
        self.amplitude.iter().map(|a| 0.5 * a * a).sum()
    }

    /// Sum F_i^2 / 2, the variance of each force quadrature.
    pub fn force_variance(&self) -> f64 {
        self.force.iter().map(|f| 0.5 * f * f).sum()
    }

    /// One-sided spectral density of F_Ws at `omega`, F_i^2 / (2 d_omega)
    /// interpolated linearly between component centres and zero outside the
    /// discretised band.
    pub fn force_spectral_density(&self, omega: f64) -> f64 {
        let n = self.len();
        if n == 0 {
            return 0.0;
        }
        let dens = |i: usize| self.force[i] * self.force[i] / (2.0 * self.d_omega);
        let half = 0.5 * self.d_omega;
        if omega < self.omega[0] - half || omega > self.omega[n - 1] + half {
            return 0.0;
        }
        if omega <= self.omega[0] {
            return dens(0);
        }
        if omega >= self.omega[n - 1] {
            return dens(n - 1);
        }
        let i = self.omega.partition_point(|w| *w <= omega);
        let frac = (omega - self.omega[i - 1]) / (self.omega[i] - self.omega[i - 1]);
        dens(i - 1) + frac * (dens(i) - dens(i - 1))
    }

    /// Phase speed of the peak component, g / omega_WP.
    pub fn peak_celerity(&self) -> f64 {
        self.omega_wp / self.k_wp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate, ks_critical_1pct};
    use approx::assert_relative_eq;
    use rustfft::{num_complex::Complex, FftPlanner};

    fn campaign_spec(n: usize, seed: u64) -> SeawaySpec {
        SeawaySpec::new(0.1, 1.414, n, seed, 9.81).unwrap()
    }

    #[test]
    fn peak_frequency_values() {
        assert_relative_eq!(peak_frequency(1.414), 3.429_446_401_148_441_6, max_relative = 1e-12);
        assert_relative_eq!(peak_frequency(0.707), 2.0 * peak_frequency(1.414), max_relative = 1e-12);
    }

    #[test]
    fn spectrum_values() {
        let wp = peak_frequency(1.414);
        // direct evaluation of the ITTC formula at the peak
        assert_relative_eq!(
            spectrum_density(0.1, 1.414, wp).unwrap(),
            2.610_705_593_440_008e-4,
            max_relative = 1e-12
        );
        assert!(spectrum_density(0.1, 1.414, 1e3).unwrap() < 1e-12);
        for w in [0.7, 2.0, 3.3, 9.0] {
            let ratio = spectrum_density(0.2, 1.414, w).unwrap() / spectrum_density(0.1, 1.414, w).unwrap();
            assert_relative_eq!(ratio, 4.0, max_relative = 1e-14);
        }
        assert!(matches!(spectrum_density(0.1, 1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(spectrum_density(0.1, 1.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn spectrum_slope_vanishes_at_peak() {
        let wp = peak_frequency(1.414);
        let h = 1e-5 * wp;
        let s = |w| spectrum_density(0.1, 1.414, w).unwrap();
        let slope = (s(wp + h) - s(wp - h)) / (2.0 * h);
        assert!((slope * wp / s(wp)).abs() < 1e-8);
    }

    #[test]
    fn single_component_realization() {
        let wp = peak_frequency(1.414);
        let spec = SeawaySpec::with_band_multipliers(0.1, 1.414, 1, 3, 9.81, (0.9, 1.1)).unwrap();
        let r = synthesize(&spec, &LinearGain::constant(100.0), 0).unwrap();
        assert_eq!(r.len(), 1);
        assert_relative_eq!(r.omega[0], wp, max_relative = 1e-14);
        let s = spec.spectrum_density(r.omega[0]).unwrap();
        assert_relative_eq!(0.5 * r.amplitude[0].powi(2), s * r.d_omega, max_relative = 1e-14);
        assert_relative_eq!(r.force[0], 100.0 * r.amplitude[0], max_relative = 1e-15);
    }

    #[test]
    fn band_excluding_peak_is_rejected() {
        let spec = SeawaySpec::with_band_multipliers(0.1, 1.414, 10, 3, 9.81, (1.5, 3.0)).unwrap();
        assert!(matches!(
            synthesize(&spec, &LinearGain::constant(1.0), 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn realization_invariants() {
        let spec = campaign_spec(500, 11);
        let r = synthesize(&spec, &LinearGain::constant(80.0), 0).unwrap();
        assert!(r.omega.windows(2).all(|w| w[0] < w[1]));
        for i in 0..r.len() {
            assert!((0.0..2.0 * PI).contains(&r.phase[i]));
            assert!(r.amplitude[i] >= 0.0 && r.force[i] >= 0.0);
            assert_relative_eq!(r.k[i] * 9.81, r.omega[i] * r.omega[i], max_relative = 1e-12);
        }
        assert_relative_eq!(r.k_wp, r.omega_wp * r.omega_wp / 9.81, max_relative = 1e-14);
        // midpoint rule on a smooth spectrum
        let exact = integrate(
            |w| spec.spectrum_density(w).unwrap(),
            spec.band.0,
            spec.band.1,
            1e-14,
            1e-12,
        );
        assert!((r.elevation_variance() - exact).abs() / exact < 1e-3);
        // and most of the H^2/16 energy sits in the band
        assert!((exact - 0.1f64.powi(2) / 16.0).abs() / exact < 0.05);
    }

    #[test]
    fn same_seed_same_realization() {
        let spec = campaign_spec(64, 5);
        let g = LinearGain::constant(1.0);
        assert_eq!(synthesize(&spec, &g, 2).unwrap(), synthesize(&spec, &g, 2).unwrap());
        assert_ne!(
            synthesize(&spec, &g, 2).unwrap().phase,
            synthesize(&spec, &g, 3).unwrap().phase
        );
    }

    #[test]
    fn phases_are_uniform() {
        let spec = campaign_spec(2000, 17);
        let r = synthesize(&spec, &LinearGain::constant(1.0), 0).unwrap();
        let mut u: Vec<f64> = r.phase.iter().map(|p| p / (2.0 * PI)).collect();
        u.sort_by(f64::total_cmp);
        let n = u.len() as f64;
        let d = u
            .iter()
            .enumerate()
            .map(|(i, v)| (v - i as f64 / n).max((i as f64 + 1.0) / n - v))
            .fold(0.0, f64::max);
        assert!(d < ks_critical_1pct(u.len()), "KS {d}");
    }

    #[test]
    fn elevation_time_average_matches_variance() {
        let spec = campaign_spec(500, 23);
        let r = synthesize(&spec, &LinearGain::constant(1.0), 0).unwrap();
        let horizon = 200.0 * spec.t01;
        let dt = 0.02;
        let n = (horizon / dt) as usize;
        let mean_sq: f64 = (0..n)
            .map(|i| r.wave_elevation(i as f64 * dt, 0.0).powi(2))
            .sum::<f64>()
            / n as f64;
        let target = r.elevation_variance();
        assert!((mean_sq - target).abs() / target < 0.02, "{mean_sq} vs {target}");
    }

    #[test]
    fn elevation_and_force_elementary_values() {
        let spec = SeawaySpec::with_band_multipliers(0.1, 1.414, 1, 3, 9.81, (0.9, 1.1)).unwrap();
        let mut r = synthesize(&spec, &LinearGain::constant(50.0), 0).unwrap();
        r.phase[0] = 0.0;
        assert_eq!(r.wave_elevation(0.0, 0.0), r.amplitude[0]);
        let period = 2.0 * PI / r.omega[0];
        for t in [0.3, 1.7, 4.2] {
            assert!((r.wave_elevation(t + period, 0.8) - r.wave_elevation(t, 0.8)).abs() < 1e-12);
            let (s, c) = r.split_force(t);
            assert_relative_eq!(s * s + c * c, r.force[0].powi(2), max_relative = 1e-12);
        }
        // sin peak
        let t = (PI / 2.0) / r.omega[0];
        assert_relative_eq!(r.wave_force(t, 0.0), r.force[0], max_relative = 1e-12);
        assert_eq!(r.split_force(0.0), (0.0, r.force[0]));

        let mut zero = r.clone();
        zero.amplitude.iter_mut().for_each(|a| *a = 0.0);
        zero.force.iter_mut().for_each(|a| *a = 0.0);
        assert_eq!(zero.wave_elevation(1.0, 2.0), 0.0);
        assert_eq!(zero.wave_force(1.0, 2.0), 0.0);
    }

    #[test]
    fn trig_split_identity_under_uniform_wavenumber() {
        let spec = campaign_spec(200, 8);
        let r = synthesize(&spec, &LinearGain::constant(60.0), 0).unwrap();
        let u = r.with_uniform_wavenumber(r.k_wp);
        for (t, x) in [(0.0, 0.0), (3.1, -2.0), (117.3, 250.4), (1000.0, 3.3)] {
            let (fs, fc) = u.split_force(t);
            let split = (u.k_wp * x).cos() * fs - (u.k_wp * x).sin() * fc;
            let scale: f64 = u.force.iter().sum();
            assert!((u.wave_force(t, x) - split).abs() < 1e-12 * scale);
            assert!((u.wave_force(t, x) - r.approx_force(t, x)).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn split_force_variance() {
        let spec = campaign_spec(300, 4);
        let r = synthesize(&spec, &LinearGain::constant(60.0), 0).unwrap();
        let dt = 0.05;
        let n = 40_000;
        let var: f64 = (0..n).map(|i| r.split_force(i as f64 * dt).0.powi(2)).sum::<f64>() / n as f64;
        assert!((var - r.force_variance()).abs() / r.force_variance() < 0.03, "{var}");
    }

    #[test]
    fn periodogram_matches_spectrum_in_band_energy() {
        let spec = campaign_spec(400, 29);
        let r = synthesize(&spec, &LinearGain::constant(1.0), 0).unwrap();
        // record of >= 500 T_01, sampled well above the band's Nyquist rate
        let dt = 0.05;
        let n = 16_384;
        assert!(n as f64 * dt >= 500.0 * spec.t01);
        let mut buf: Vec<Complex<f64>> = (0..n)
            .map(|i| Complex::new(r.wave_elevation(i as f64 * dt, 0.0), 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let d_w = 2.0 * PI / (n as f64 * dt);
        // one-sided periodogram in m^2 s (per rad/s)
        let pgram: Vec<f64> = buf[..n / 2]
            .iter()
            .map(|c| 2.0 * c.norm_sqr() * dt / (n as f64 * 2.0 * PI))
            .collect();
        let wp = spec.peak_frequency();
        for (a, b) in [(0.5, 0.9), (0.9, 1.1), (1.1, 1.6), (1.6, 3.0), (0.5, 7.0)] {
            let energy: f64 = pgram
                .iter()
                .enumerate()
                .filter(|(i, _)| (a * wp..b * wp).contains(&(*i as f64 * d_w)))
                .map(|(_, p)| p * d_w)
                .sum();
            let exact = integrate(|w| spec.spectrum_density(w).unwrap(), a * wp, b * wp, 1e-14, 1e-10);
            assert!(
                (energy - exact).abs() / exact < 0.10,
                "band [{a},{b}]: {energy} vs {exact}"
            );
        }
    }

    #[test]
    fn gain_table_interpolates() {
        let g = LinearGain::table(vec![(2.0, 20.0), (1.0, 10.0)]).unwrap();
        assert_eq!(g.gain(0.5), 10.0);
        assert_eq!(g.gain(1.5), 15.0);
        assert_eq!(g.gain(3.0), 20.0);
        assert!(LinearGain::table(vec![]).is_err());
    }

    #[test]
    fn force_spectral_density_single_component() {
        let spec = SeawaySpec::with_band_multipliers(0.1, 1.414, 1, 3, 9.81, (0.9, 1.1)).unwrap();
        let r = synthesize(&spec, &LinearGain::constant(40.0), 0).unwrap();
        assert_relative_eq!(
            r.force_spectral_density(r.omega_wp),
            r.force[0].powi(2) / (2.0 * r.d_omega),
            max_relative = 1e-14
        );
        assert_eq!(r.force_spectral_density(0.1), 0.0);
    }
}
