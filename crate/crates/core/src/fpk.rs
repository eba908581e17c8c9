//! Stationary density of the period-averaged white-noise surge equation.
//!
//! Averaging sin^2 and cos^2 of the wave-fixed phase over one wavelength
//! reduces the velocity marginal to a one-dimensional diffusion with
//! constant coefficient `D^2 / (4 (m + m_x))`, whose zero-flux stationary
//! solution is `p(u) = C_P exp(-(4 (m + m_x) / D^2) V(u))` with
//! `V(u) = sum alpha_i u^(i+1) / (i+1)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gauss_kronrod_15, integrate, CompensatedSum};
use crate::ship_model::AlphaCoeffs;
use crate::stats::{Histogram, Moments};
use crate::stochastic::NoiseIntensity;

/// Endpoint density relative to the peak below which the tails are dropped.
pub const TAIL_CUTOFF: f64 = 1e-12;
/// Initial half-width of the support in linear-drift standard deviations.
pub const INITIAL_HALF_WIDTH: f64 = 6.0;
/// Minimum panels of the cumulative table.
const PANELS: usize = 1024;
/// Panel cap for supports spanning many narrow wells.
const MAX_TABLE_PANELS: usize = 1 << 16;
pub const MIN_COMPARISON_SAMPLES: usize = 10_000;
/// KS statistics above this are reported as a gross mismatch.
pub const GROSS_MISMATCH_KS: f64 = 0.5;

/// `1/4 (D_1^2 + D_2^2) / (m + m_x)`, the coefficient of d^2p/du^2 in the
/// reduced stationary equation (multiplied through by m + m_x).
pub fn period_average_diffusion(noise: &NoiseIntensity, total_mass: f64) -> f64 {
    0.25 * noise.d_squared() / total_mass
}

/// Mean of `f(k x)` over one wavelength `2 pi / k`, by adaptive quadrature.
pub fn wavelength_average<F: Fn(f64) -> f64>(f: F, k: f64) -> f64 {
    let lambda = 2.0 * PI / k;
    integrate(|x| f(k * x), 0.0, lambda, 1e-15, 1e-14) / lambda
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPdf {
    pub alphas: AlphaCoeffs,
    pub total_mass: f64,
    pub d_squared: f64,
    /// ln C_P, with the potential measured from its minimum on the support.
    pub log_c_p: f64,
    pub potential_min: f64,
    pub support: (f64, f64),
    #[serde(skip)]
    cumulative: Vec<f64>,
}

/// Checks that the potential is bounded below and confining: the highest
/// nonzero alpha must multiply an odd power of u and be positive.
/// Gaussian width `1/sqrt(beta V'')` of the well at `m`, infinite when flat.
fn well_width(alphas: &AlphaCoeffs, beta: f64, m: f64) -> f64 {
    1.0 / (beta * alphas.drift_slope(m).max(0.0)).sqrt()
}

/// Real roots of `sum c_i u^i` in `[-r, r]`, sorted. Each level brackets
/// roots between consecutive roots of the derivative, so none are missed.
fn real_roots(c: &[f64], r: f64) -> Vec<f64> {
    let n = match c.iter().rposition(|&x| x != 0.0) {
        None | Some(0) => return Vec::new(),
        Some(n) => n,
    };
    let c = &c[..=n];
    let eval = |u: f64| c.iter().rev().fold(0.0, |acc, &x| acc * u + x);
    if n == 1 {
        return vec![(-c[0] / c[1]).clamp(-r, r)];
    }
    let dc: Vec<f64> = c.iter().enumerate().skip(1).map(|(i, &x)| i as f64 * x).collect();
    let mut knots = vec![-r];
    knots.extend(real_roots(&dc, r));
    knots.push(r);
    let mut roots: Vec<f64> = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(a), eval(b));
        let root = if fa == 0.0 {
            Some(a)
        } else if fb == 0.0 {
            Some(b)
        } else if fa * fb < 0.0 {
            Some(crate::ship_model::refine_root(&eval, a, b, fa, fb, 0.0))
        } else {
            None
        };
        if let Some(x) = root {
            if roots.last() != Some(&x) {
                roots.push(x);
            }
        }
    }
    roots
}

/// Local minima of the potential: the points where the drift turns from
/// negative to positive.
fn potential_minima(alphas: &AlphaCoeffs) -> Vec<f64> {
    let a = &alphas.0;
    let n = a.iter().rposition(|&x| x != 0.0).unwrap_or(0);
    // Cauchy bound on the nonzero roots of drift(u) / u
    let r = 1.0 + a[..n].iter().map(|x| (x / a[n]).abs()).fold(0.0, f64::max);
    let mut roots = real_roots(a, r);
    if let Err(i) = roots.binary_search_by(|x| x.total_cmp(&0.0)) {
        roots.insert(i, 0.0);
    }
    let mut edges = vec![-2.0 * r];
    edges.extend(roots.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    edges.push(2.0 * r);
    roots
        .iter()
        .zip(edges.windows(2))
        .filter(|(_, e)| alphas.drift(e[0]) < 0.0 && alphas.drift(e[1]) > 0.0)
        .map(|(&m, _)| m)
        .collect()
}

fn check_confining(a: &AlphaCoeffs) -> Result<()> {
    match a.0.iter().rposition(|&c| c != 0.0) {
        None => Err(Error::NotNormalizable("all drift coefficients vanish".into())),
        Some(i) if i % 2 == 1 => Err(Error::NotNormalizable(format!(
            "leading drift term alpha_{} u^{} is even; the potential is unbounded on one side",
            i + 1,
            i + 1
        ))),
        Some(i) if a.0[i] < 0.0 => Err(Error::NotNormalizable(format!(
            "leading drift coefficient alpha_{} = {} is negative",
            i + 1,
            a.0[i]
        ))),
        Some(_) => Ok(()),
    }
}

impl StationaryPdf {
    /// Builds the density on an automatically sized support.
    pub fn new(alphas: AlphaCoeffs, total_mass: f64, noise: &NoiseIntensity) -> Result<Self> {
        Self::build(alphas, total_mass, noise, None)
    }

    /// Builds the density on a caller-given support, which must contain all
    /// but a `TAIL_CUTOFF` fraction of the peak density at its ends.
    pub fn with_support(
        alphas: AlphaCoeffs,
        total_mass: f64,
        noise: &NoiseIntensity,
        support: (f64, f64),
    ) -> Result<Self> {
        Self::build(alphas, total_mass, noise, Some(support))
    }

    fn build(
        alphas: AlphaCoeffs,
        total_mass: f64,
        noise: &NoiseIntensity,
        support: Option<(f64, f64)>,
    ) -> Result<Self> {
        if !(total_mass > 0.0) {
            return Err(Error::invalid("total mass must be positive"));
        }
        let d_squared = noise.d_squared();
        if !(d_squared > 0.0 && d_squared.is_finite()) {
            return Err(Error::NotNormalizable(format!(
                "noise intensity D^2 = {d_squared} gives no diffusion"
            )));
        }
        check_confining(&alphas)?;
        let beta = 4.0 * total_mass / d_squared;
        let scale = if alphas.0[0] > 0.0 {
            (1.0 / (beta * alphas.0[0])).sqrt()
        } else {
            // purely nonlinear confinement: width where beta V ~ 1
            let i = alphas.0.iter().rposition(|&c| c != 0.0).expect("checked");
            ((i + 2) as f64 / (beta * alphas.0[i])).powf(1.0 / (i + 2) as f64)
        };
        let log_g = |u: f64, v_min: f64| -beta * (alphas.potential(u) - v_min);

        let cut = TAIL_CUTOFF.ln();
        let minima = potential_minima(&alphas);
        let (mut lo, mut hi, vm) = match support {
            Some((lo, hi)) => {
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return Err(Error::invalid(format!(
                        "support must be a finite interval, got ({lo}, {hi})"
                    )));
                }
                let vm = minima
                    .iter()
                    .filter(|&&m| lo <= m && m <= hi)
                    .chain(&[lo, hi])
                    .map(|&u| alphas.potential(u))
                    .fold(f64::INFINITY, f64::min);
                (lo, hi, vm)
            }
            None => {
                // every well holding non-negligible mass starts inside the support
                let vm = minima
                    .iter()
                    .map(|&m| alphas.potential(m))
                    .fold(f64::INFINITY, f64::min);
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for &m in minima.iter().filter(|&&m| log_g(m, vm) > cut) {
                    let w = well_width(&alphas, beta, m);
                    let half = INITIAL_HALF_WIDTH * if w.is_finite() { w } else { scale };
                    lo = lo.min(m - half);
                    hi = hi.max(m + half);
                }
                (lo, hi, vm)
            }
        };
        if support.is_some() {
            if log_g(lo, vm) > cut || log_g(hi, vm) > cut {
                return Err(Error::NotNormalizable(format!(
                    "density at the support ends ({lo}, {hi}) is not negligible"
                )));
            }
        } else {
            let mut grown = 0;
            while log_g(lo, vm) > cut || log_g(hi, vm) > cut {
                if log_g(lo, vm) > cut {
                    lo -= 0.5 * (hi - lo);
                }
                if log_g(hi, vm) > cut {
                    hi += 0.5 * (hi - lo);
                }
                grown += 1;
                if grown > 60 || !(lo.is_finite() && hi.is_finite()) {
                    return Err(Error::NotNormalizable(
                        "support expansion did not reach negligible tails".into(),
                    ));
                }
            }
        }

        let g = |u: f64| log_g(u, vm).exp();
        // at least one panel per standard deviation of the narrowest well
        let narrowest = minima
            .iter()
            .filter(|&&m| lo <= m && m <= hi && log_g(m, vm) > cut)
            .map(|&m| well_width(&alphas, beta, m))
            .fold(f64::INFINITY, f64::min);
        let panels = (((hi - lo) / narrowest).ceil() as usize).clamp(PANELS, MAX_TABLE_PANELS);
        let width = (hi - lo) / panels as f64;
        let mut cumulative = Vec::with_capacity(panels + 1);
        let mut acc = CompensatedSum::new();
        cumulative.push(0.0);
        for i in 0..panels {
            let a = lo + width * i as f64;
            acc.add(integrate(g, a, a + width, 1e-300, 1e-13));
            cumulative.push(acc.value());
        }
        let z = acc.value();
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::NotNormalizable(format!("normalization integral is {z}")));
        }
        cumulative.iter_mut().for_each(|c| *c /= z);
        Ok(StationaryPdf {
            alphas,
            total_mass,
            d_squared,
            log_c_p: -z.ln(),
            potential_min: vm,
            support: (lo, hi),
            cumulative,
        })
    }

    pub fn beta(&self) -> f64 {
        4.0 * self.total_mass / self.d_squared
    }

    /// Normalization constant against the unshifted potential, which may
    /// overflow for small noise.
    pub fn c_p(&self) -> f64 {
        (self.log_c_p + self.beta() * self.potential_min).exp()
    }

    /// Variance of the Gaussian obtained with only the linear drift term.
    pub fn linear_variance(&self) -> f64 {
        1.0 / (self.beta() * self.alphas.0[0])
    }

    pub fn pdf(&self, u: f64) -> f64 {
        (self.log_c_p - self.beta() * (self.alphas.potential(u) - self.potential_min)).exp()
    }

    fn panels(&self) -> usize {
        self.cumulative.len() - 1
    }

    fn panel_width(&self) -> f64 {
        (self.support.1 - self.support.0) / self.panels() as f64
    }

    pub fn cdf(&self, u: f64) -> f64 {
        let (lo, hi) = self.support;
        if u <= lo {
            return 0.0;
        }
        if u >= hi {
            return 1.0;
        }
        let w = self.panel_width();
        let i = (((u - lo) / w) as usize).min(self.panels() - 1);
        let a = lo + w * i as f64;
        let partial = gauss_kronrod_15(&|v| self.pdf(v), a, u).0;
        (self.cumulative[i] + partial).min(1.0)
    }

    /// Inverse cdf by Newton steps safeguarded inside the containing panel.
    pub fn quantile(&self, q: f64) -> f64 {
        let (lo, hi) = self.support;
        if q <= 0.0 {
            return lo;
        }
        if q >= 1.0 {
            return hi;
        }
        let i = self.cumulative.partition_point(|&c| c <= q).clamp(1, self.panels()) - 1;
        let w = self.panel_width();
        let (mut a, mut b) = (lo + w * i as f64, lo + w * (i + 1) as f64);
        let mut u =
            a + w * (q - self.cumulative[i]) / (self.cumulative[i + 1] - self.cumulative[i]).max(f64::MIN_POSITIVE);
        for _ in 0..100 {
            let f = self.cdf(u) - q;
            if f.abs() < 1e-15 {
                break;
            }
            if f > 0.0 {
                b = u;
            } else {
                a = u;
            }
            let p = self.pdf(u);
            let newton = u - f / p;
            u = if p > 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if (b - a) < 1e-15 * (1.0 + u.abs()) {
                break;
            }
        }
        u
    }

    /// `E[u^n]` by panelwise adaptive quadrature.
    pub fn raw_moment(&self, n: i32) -> f64 {
        let w = self.panel_width();
        (0..self.panels())
            .map(|i| {
                let a = self.support.0 + w * i as f64;
                integrate(|u| u.powi(n) * self.pdf(u), a, a + w, 1e-300, 1e-13)
            })
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn moments(&self) -> Moments {
        let w = self.panel_width();
        let mean = self.raw_moment(1);
        let central = |p: i32| {
            (0..self.panels())
                .map(|i| {
                    let a = self.support.0 + w * i as f64;
                    integrate(|u| (u - mean).powi(p) * self.pdf(u), a, a + w, 1e-300, 1e-13)
                })
                .collect::<CompensatedSum>()
                .value()
        };
        Moments::from_central(mean, central(2), central(3), central(4))
    }

    /// Maximizer of the density on the support.
    pub fn mode(&self) -> f64 {
        let (lo, hi) = self.support;
        potential_minima(&self.alphas)
            .into_iter()
            .filter(|&m| lo <= m && m <= hi)
            .chain([lo, hi])
            .min_by(|a, b| self.alphas.potential(*a).total_cmp(&self.alphas.potential(*b)))
            .expect("nonempty")
    }

    /// Sup-norm of `d/du[drift p] + D^2/(4(m+m_x)) d^2p/du^2` on `points`
    /// interior points, by fourth-order central differences, relative to the
    /// sup-norm of the drift term.
    pub fn detailed_balance_residual(&self, points: usize) -> f64 {
        let sigma = self.linear_variance().sqrt();
        let h = 1e-2 * if sigma.is_finite() { sigma } else { self.panel_width() };
        let diff = 0.25 * self.d_squared / self.total_mass;
        let flux = |u: f64| self.alphas.drift(u) * self.pdf(u);
        let d1 = |f: &dyn Fn(f64) -> f64, u: f64| {
            (f(u - 2.0 * h) - 8.0 * f(u - h) + 8.0 * f(u + h) - f(u + 2.0 * h)) / (12.0 * h)
        };
        let pdf = |u: f64| self.pdf(u);
        let d2 = |u: f64| {
            (-pdf(u - 2.0 * h) + 16.0 * pdf(u - h) - 30.0 * pdf(u) + 16.0 * pdf(u + h) - pdf(u + 2.0 * h))
                / (12.0 * h * h)
        };
        let (lo, hi) = self.support;
        let (lo, hi) = (lo + 2.0 * h, hi - 2.0 * h);
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..points {
            let u = lo + (hi - lo) * (i as f64 + 0.5) / points as f64;
            let drift_term = d1(&flux, u);
            worst = worst.max((drift_term + diff * d2(u)).abs());
            scale = scale.max(drift_term.abs());
        }
        worst / scale
    }

    /// Evaluates (u, pdf, cdf) at `n` equally spaced support points.
    pub fn table(&self, n: usize) -> Vec<[f64; 3]> {
        let (lo, hi) = self.support;
        (0..n)
            .map(|i| {
                let u = lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64;
                [u, self.pdf(u), self.cdf(u)]
            })
            .collect()
    }
}

/// `stationary_pdf(alpha, m + m_x, noise)` on the automatic support.
pub fn stationary_pdf(alphas: AlphaCoeffs, total_mass: f64, noise: &NoiseIntensity) -> Result<StationaryPdf> {
    StationaryPdf::new(alphas, total_mass, noise)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub empirical: Moments,
    pub analytic: Moments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub sample_count: usize,
    pub bins: usize,
    pub bin_width: f64,
    /// Sum over bins of |empirical mass - analytic mass| plus analytic mass
    /// outside the histogram range.
    pub l1_distance: f64,
    pub ks_statistic: f64,
    pub gross_mismatch: bool,
    pub moments: MomentTable,
}

pub fn compare_to_empirical(pdf: &StationaryPdf, samples: &[f64]) -> Result<Comparison> {
    if samples.len() < MIN_COMPARISON_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            need: MIN_COMPARISON_SAMPLES,
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let hist = Histogram::freedman_diaconis(&sorted)?;
    let cdf: Vec<f64> = hist.edges.iter().map(|&e| pdf.cdf(e)).collect();
    let inside: CompensatedSum = hist
        .mass
        .iter()
        .zip(cdf.windows(2))
        .map(|(m, c)| (m - (c[1] - c[0])).abs())
        .collect();
    let outside = cdf[0] + (1.0 - cdf[cdf.len() - 1]);
    let n = sorted.len() as f64;
    let ks = sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let f = pdf.cdf(u);
            ((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(Comparison {
        sample_count: sorted.len(),
        bins: hist.bins(),
        bin_width: hist.bin_width(),
        l1_distance: inside.value() + outside,
        ks_statistic: ks,
        gross_mismatch: ks > GROSS_MISMATCH_KS,
        moments: MomentTable {
            empirical: Moments::of(samples),
            analytic: pdf.moments(),
        },
    })
}
