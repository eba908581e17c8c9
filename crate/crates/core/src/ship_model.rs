//! Ship constants, resistance and thrust curves, the calm-water operating
//! point and the reduction of thrust minus resistance to a quintic drift in
//! the velocity perturbation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::horner;

/// Default threshold on |T - R| at the calm-water equilibrium, in newtons
/// per newton of bollard thrust (floored at 1 N).
pub const TOL_BALANCE: f64 = 1e-8;

/// Number of samples used to scan brackets for sign changes and to check
/// resistance positivity.
const SCAN_SAMPLES: usize = 4000;

/// Hull and propulsion constants, SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShipParams {
    /// Ship length L_S (m).
    pub length: f64,
    pub mass: f64,
    /// Surge added mass (kg).
    pub added_mass: f64,
    /// r_1..r_5 of R(u) = sum r_i u^i.
    pub resistance: [f64; 5],
    pub thrust_deduction: f64,
    pub wake_fraction: f64,
    pub prop_diameter: f64,
    /// kappa_0, kappa_1, kappa_2 of K_T(J) = kappa_2 J^2 + kappa_1 J + kappa_0.
    pub kt: [f64; 3],
    pub water_density: f64,
    pub gravity: f64,
    /// Upper end of the operating speed range; defaults to Fn = 2.
    pub u_max: Option<f64>,
}

impl ShipParams {
    /// Checks the physical invariants, including R(u) > 0 on (0, u_max].
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("mass", self.mass),
            ("mass + added_mass", self.total_mass()),
            ("prop_diameter", self.prop_diameter),
            ("water_density", self.water_density),
            ("gravity", self.gravity),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("thrust_deduction", self.thrust_deduction),
            ("wake_fraction", self.wake_fraction),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        if self.resistance.iter().chain(self.kt.iter()).any(|c| !c.is_finite()) {
            return Err(Error::invalid("non-finite resistance or K_T coefficient"));
        }
        let u_max = self.u_max();
        if !(u_max.is_finite() && u_max > 0.0) {
            return Err(Error::invalid(format!("u_max must be positive, got {u_max}")));
        }
        for i in 1..=SCAN_SAMPLES {
            let u = u_max * i as f64 / SCAN_SAMPLES as f64;
            let r = self.resistance(u);
            if r <= 0.0 {
                return Err(Error::invalid(format!(
                    "resistance must be positive on (0, u_max]; R({u:.6}) = {r:.6e}"
                )));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.mass + self.added_mass
    }

    pub fn u_max(&self) -> f64 {
        self.u_max.unwrap_or_else(|| 2.0 * (self.length * self.gravity).sqrt())
    }

    pub fn froude(&self, u: f64) -> f64 {
        u / (self.length * self.gravity).sqrt()
    }

    pub fn speed_for_froude(&self, fn_bar: f64) -> f64 {
        fn_bar * (self.length * self.gravity).sqrt()
    }

    /// True when `u` lies outside the declared operating range (0, u_max],
    /// i.e. the polynomial fits are being extrapolated.
    pub fn is_extrapolated(&self, u: f64) -> bool {
        u < 0.0 || u > self.u_max()
    }

    /// Hull resistance R(u) = sum_{i=1..5} r_i u^i.
    pub fn resistance(&self, u: f64) -> f64 {
        u * horner(&self.resistance, u)
    }

    /// Propeller thrust T(u, n_P) through the quadratic K_T fit.
    pub fn thrust(&self, u: f64, n_p: f64) -> Result<f64> {
        if n_p == 0.0 {
            return Err(Error::DivisionByZero("advance ratio J_T undefined at n_P = 0"));
        }
        if !(n_p > 0.0) {
            return Err(Error::invalid(format!(
                "propeller revolutions must be positive, got {n_p}"
            )));
        }
        let d = self.prop_diameter;
        let j = (1.0 - self.wake_fraction) * u / (n_p * d);
        let kt = horner(&self.kt, j);
        Ok((1.0 - self.thrust_deduction) * self.water_density * n_p * n_p * d.powi(4) * kt)
    }

    /// Net propulsive surplus T(u, n_P) - R(u).
    fn surplus(&self, u: f64, n_p: f64) -> f64 {
        // n_p validated by callers
        self.thrust(u, n_p).unwrap_or(f64::NAN) - self.resistance(u)
    }
}

/// Calm-water operating point: propeller rate, balanced speed and its
/// Froude number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub n_p: f64,
    pub u_bar: f64,
    pub fn_bar: f64,
}

impl OperatingPoint {
    /// |T(u_bar, n_P) - R(u_bar)|.
    pub fn balance_residual(&self, p: &ShipParams) -> Result<f64> {
        Ok((p.thrust(self.u_bar, self.n_p)? - p.resistance(self.u_bar)).abs())
    }
}

fn balance_tolerance(p: &ShipParams, n_p: f64) -> f64 {
    let scale = p.thrust(0.0, n_p).map(f64::abs).unwrap_or(1.0);
    TOL_BALANCE * scale.max(1.0)
}

/// Solves T(u, n_P) = R(u) for the calm-water speed on [0, u_max].
///
/// The bracket is scanned for sign changes; each crossing is located by
/// bisection and polished with secant steps kept inside the bracket. More
/// than one crossing yields [`Error::AmbiguousRoot`] carrying all of them in
/// ascending order.
pub fn solve_equilibrium(p: &ShipParams, n_p: f64) -> Result<OperatingPoint> {
    let roots = equilibrium_crossings(p, n_p)?;
    match roots.len() {
        0 => Err(Error::NoRoot { lo: 0.0, hi: p.u_max() }),
        1 => Ok(OperatingPoint {
            n_p,
            u_bar: roots[0],
            fn_bar: p.froude(roots[0]),
        }),
        count => Err(Error::AmbiguousRoot { count, roots }),
    }
}

/// Every balance crossing found on the sampled bracket, ascending.
pub fn equilibrium_crossings(p: &ShipParams, n_p: f64) -> Result<Vec<f64>> {
    p.thrust(0.0, n_p)?;
    let u_max = p.u_max();
    let tol = balance_tolerance(p, n_p);
    let g = |u: f64| p.surplus(u, n_p);
    let mut roots = Vec::new();
    let mut lo = 0.0;
    let mut g_lo = g(lo);
    for i in 1..=SCAN_SAMPLES {
        let hi = u_max * i as f64 / SCAN_SAMPLES as f64;
        let g_hi = g(hi);
        if g_lo == 0.0 && i > 1 {
            roots.push(lo);
        } else if g_lo * g_hi < 0.0 {
            roots.push(refine_root(&g, lo, hi, g_lo, g_hi, tol));
        }
        lo = hi;
        g_lo = g_hi;
    }
    if g_lo == 0.0 {
        roots.push(u_max);
    }
    Ok(roots)
}

/// Bisection to a narrow bracket, then safeguarded secant polishing.
pub(crate) fn refine_root<G: Fn(f64) -> f64>(
    g: &G,
    mut lo: f64,
    mut hi: f64,
    mut g_lo: f64,
    mut g_hi: f64,
    tol: f64,
) -> f64 {
    let width0 = hi - lo;
    for _ in 0..200 {
        if hi - lo <= 1e-9 * width0.max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return mid;
        }
        if g_lo * g_mid < 0.0 {
            hi = mid;
            g_hi = g_mid;
        } else {
            lo = mid;
            g_lo = g_mid;
        }
    }
    let mut best = if g_lo.abs() < g_hi.abs() {
        (lo, g_lo)
    } else {
        (hi, g_hi)
    };
    for _ in 0..50 {
        if best.1.abs() < tol || g_hi == g_lo {
            break;
        }
        let x = hi - g_hi * (hi - lo) / (g_hi - g_lo);
        if !(x > lo && x < hi) {
            break;
        }
        let gx = g(x);
        if gx.abs() < best.1.abs() {
            best = (x, gx);
        }
        if gx == 0.0 {
            break;
        }
        if g_lo * gx < 0.0 {
            hi = x;
            g_hi = gx;
        } else {
            lo = x;
            g_lo = gx;
        }
    }
    best.0
}

/// Propeller rate that balances thrust and resistance at a prescribed calm
/// water speed.
///
/// For fixed u the thrust is quadratic in n_P,
/// `(1-t)rho [kappa_0 D^4 n^2 + kappa_1 (1-w) D^3 u n + kappa_2 (1-w)^2 D^2 u^2]`,
/// so the balance residual is solved exactly, taking the largest positive
/// root.
pub fn operating_point_for_speed(p: &ShipParams, u_bar: f64) -> Result<OperatingPoint> {
    if !(u_bar > 0.0) {
        return Err(Error::invalid(format!(
            "calm-water speed must be positive, got {u_bar}"
        )));
    }
    let d = p.prop_diameter;
    let w = 1.0 - p.wake_fraction;
    let scale = (1.0 - p.thrust_deduction) * p.water_density;
    let a = p.kt[0] * d.powi(4);
    let b = p.kt[1] * w * d.powi(3) * u_bar;
    let c = p.kt[2] * w * w * d * d * u_bar * u_bar - p.resistance(u_bar) / scale;
    let candidates: Vec<f64> = if a == 0.0 {
        if b == 0.0 {
            vec![]
        } else {
            vec![-c / b]
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            vec![]
        } else {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let mut r = vec![q / a];
            if q != 0.0 {
                r.push(c / q);
            }
            r
        }
    };
    let n_p = candidates
        .into_iter()
        .filter(|n| n.is_finite() && *n > 0.0)
        .fold(f64::NAN, f64::max);
    if !n_p.is_finite() {
        return Err(Error::NoRoot {
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(OperatingPoint {
        n_p,
        u_bar,
        fn_bar: p.froude(u_bar),
    })
}

/// Operating point for a target calm-water Froude number.
pub fn operating_point_for_froude(p: &ShipParams, fn_bar: f64) -> Result<OperatingPoint> {
    let mut op = operating_point_for_speed(p, p.speed_for_froude(fn_bar))?;
    op.fn_bar = fn_bar;
    Ok(op)
}

/// Drift coefficients alpha_1..alpha_5 of the velocity-perturbation equation
/// `(m + m_x) du/dt = -sum alpha_i u^i + forcing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaCoeffs(pub [f64; 5]);

impl AlphaCoeffs {
    pub fn linear(alpha1: f64) -> Self {
        AlphaCoeffs([alpha1, 0.0, 0.0, 0.0, 0.0])
    }

    /// Restoring drift sum alpha_i u^i.
    pub fn drift(&self, u: f64) -> f64 {
        u * horner(&self.0, u)
    }

    /// d/du of the drift polynomial.
    pub fn drift_slope(&self, u: f64) -> f64 {
        let a = &self.0;
        horner(&[a[0], 2.0 * a[1], 3.0 * a[2], 4.0 * a[3], 5.0 * a[4]], u)
    }

    /// Antiderivative sum alpha_i u^{i+1} / (i + 1), zero at u = 0.
    pub fn potential(&self, u: f64) -> f64 {
        let a = &self.0;
        u * u * horner(&[a[0] / 2.0, a[1] / 3.0, a[2] / 4.0, a[3] / 5.0, a[4] / 6.0], u)
    }
}

/// Expands R(u_bar + u) - T(u_bar + u, n_P) about the operating point.
pub fn compute_alphas(p: &ShipParams, op: &OperatingPoint) -> AlphaCoeffs {
    let [r1, r2, r3, r4, r5] = p.resistance;
    let [_, k1, k2] = p.kt;
    let u = op.u_bar;
    let tp = 1.0 - p.thrust_deduction;
    let wp = 1.0 - p.wake_fraction;
    let rho = p.water_density;
    let d = p.prop_diameter;
    AlphaCoeffs([
        r1 + 2.0 * r2 * u + 3.0 * r3 * u * u + 4.0 * r4 * u.powi(3) + 5.0 * r5 * u.powi(4)
            - 2.0 * u * k2 * tp * wp * wp * rho * d * d
            - k1 * tp * wp * rho * op.n_p * d.powi(3),
        r2 + 3.0 * r3 * u + 6.0 * r4 * u * u + 10.0 * r5 * u.powi(3) - k2 * tp * wp * wp * rho * d * d,
        r3 + 4.0 * r4 * u + 10.0 * r5 * u * u,
        r4 + 5.0 * r5 * u,
        r5,
    ])
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn resistance_values() {
        let p = synthetic();
        assert_eq!(p.resistance(0.0), 0.0);
        let mut lin = p.clone();
        lin.resistance = [1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(lin.resistance(2.0), 2.0);
        // 0.5*1.5 + 0.2*1.5^2 + 0.1*1.5^3 + 0.01*1.5^4 + 0.001*1.5^5
        assert_relative_eq!(p.resistance(1.5), 1.595_718_75, max_relative = 1e-14);
    }

    #[test]
    fn thrust_values() {
        let p = synthetic();
        // J = 0.4, K_T = 0.364, T = 0.9 * 1000 * 400 * 1e-4 * 0.364
        assert_relative_eq!(p.thrust(1.0, 20.0).unwrap(), 13.104, max_relative = 1e-12);
        assert_relative_eq!(
            p.thrust(0.0, 20.0).unwrap(),
            0.9 * 1000.0 * 400.0 * 1e-4 * 0.5,
            max_relative = 1e-14
        );
        let mut zero = p.clone();
        zero.kt = [0.0; 3];
        assert_eq!(zero.thrust(1.3, 7.0).unwrap(), 0.0);
        assert!(matches!(p.thrust(1.0, 0.0), Err(Error::DivisionByZero(_))));
    }

    #[test]
    fn linear_equilibrium_is_one() {
        let op = solve_equilibrium(&linear(), 1.0).unwrap();
        assert_relative_eq!(op.u_bar, 1.0, epsilon = 1e-9);
        assert_relative_eq!(op.fn_bar, 1.0 / 9.81f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn zero_thrust_has_no_root() {
        let mut p = synthetic();
        p.kt = [0.0; 3];
        assert!(matches!(solve_equilibrium(&p, 10.0), Err(Error::NoRoot { .. })));
    }

    #[test]
    fn equilibrium_matches_dense_grid_scan() {
        let p = synthetic();
        let n_p = 25.0;
        let op = solve_equilibrium(&p, n_p).unwrap();
        // brute force: first sign change of T - R at du = 1e-5
        let du = 1e-5;
        let f = |u: f64| p.thrust(u, n_p).unwrap() - p.resistance(u);
        let mut u = 0.0;
        while f(u) * f(u + du) > 0.0 {
            u += du;
        }
        let grid_root = u + du * f(u) / (f(u) - f(u + du));
        assert!((op.u_bar - grid_root).abs() < 1e-6);
        assert!(op.balance_residual(&p).unwrap() < TOL_BALANCE * p.thrust(0.0, n_p).unwrap());
    }

    #[test]
    fn ambiguous_crossings_are_reported() {
        // R = u^3 - 3u^2 + 2.5u has a hump; constant T = 0.5 crosses it three times.
        let p = ShipParams {
            resistance: [2.5, -3.0, 1.0, 0.0, 0.0],
            kt: [0.5 / 1000.0, 0.0, 0.0],
            prop_diameter: 1.0,
            thrust_deduction: 0.0,
            wake_fraction: 0.0,
            u_max: Some(3.0),
            ..synthetic()
        };
        match solve_equilibrium(&p, 1.0).unwrap_err() {
            Error::AmbiguousRoot { count, roots } => {
                assert_eq!(count, 3);
                assert!(roots.windows(2).all(|w| w[0] < w[1]));
                for r in roots {
                    assert!((p.resistance(r) - 0.5).abs() < 1e-9);
                }
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn speed_inverse_round_trips() {
        let p = synthetic();
        for fn_bar in [0.2, 0.4, 0.6, 0.9] {
            let op = operating_point_for_froude(&p, fn_bar).unwrap();
            assert!(op.balance_residual(&p).unwrap() < 1e-9 * p.thrust(0.0, op.n_p).unwrap());
            let back = solve_equilibrium(&p, op.n_p).unwrap();
            assert_relative_eq!(back.u_bar, op.u_bar, max_relative = 1e-9);
            assert_relative_eq!(
                op.fn_bar,
                op.u_bar / (p.length * p.gravity).sqrt(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn alphas_reduce_to_resistance_at_rest_without_thrust() {
        let mut p = synthetic();
        p.kt = [0.0; 3];
        let op = OperatingPoint {
            n_p: 1.0,
            u_bar: 0.0,
            fn_bar: 0.0,
        };
        assert_eq!(compute_alphas(&p, &op).0, p.resistance);
    }

    #[test]
    fn alpha5_equals_r5_and_drift_vanishes_at_zero() {
        let p = synthetic();
        let op = operating_point_for_froude(&p, 0.5).unwrap();
        let a = compute_alphas(&p, &op);
        assert_eq!(a.0[4], p.resistance[4]);
        assert_eq!(a.drift(0.0), 0.0);
        assert!(a.0[0] > 0.0);
    }

    #[test]
    fn alpha_identity_at_spec_offsets() {
        let p = synthetic();
        for fn_bar in [0.3, 0.55, 0.8] {
            let op = operating_point_for_froude(&p, fn_bar).unwrap();
            let a = compute_alphas(&p, &op);
            let net = |u: f64| p.resistance(u) - p.thrust(u, op.n_p).unwrap();
            for eps in [0.1, -0.1, 0.01, -0.01] {
                let direct = net(op.u_bar + eps) - net(op.u_bar);
                let scale = p.resistance(op.u_bar + eps.abs()).max(1.0);
                assert!((a.drift(eps) - direct).abs() <= 1e-12 * scale, "fn {fn_bar} eps {eps}");
            }
        }
    }

    #[test]
    fn equilibrium_non_decreasing_in_revolutions() {
        let p = synthetic();
        let mut last = 0.0;
        // up to Fn ~ 1.7, inside the default bracket
        for i in 1..=20 {
            let n_p = 5.0 * i as f64;
            let op = solve_equilibrium(&p, n_p).unwrap();
            assert!(op.u_bar >= last);
            last = op.u_bar;
        }
    }

    #[test]
    fn validation_rejects_bad_params() {
        let mut p = synthetic();
        p.wake_fraction = 1.0;
        assert!(p.validate().is_err());
        let mut p = synthetic();
        p.resistance = [-1.0, 0.0, 0.0, 0.0, 0.0];
        assert!(p.validate().is_err());
        assert!(synthetic().validate().is_ok());
    }

    proptest! {
        #[test]
        fn alpha_expansion_is_exact(
            r in prop::array::uniform5(0.0f64..2.0),
            k0 in 0.2f64..0.6, k1 in -0.5f64..0.0, k2 in -0.3f64..0.0,
            u_bar in 0.2f64..4.0, n_p in 5.0f64..60.0,
            eps in -0.5f64..0.5,
        ) {
            let p = ShipParams { resistance: r, kt: [k0, k1, k2], ..synthetic() };
            // any (u_bar, n_p) pair: the identity does not need balance
            let op = OperatingPoint { n_p, u_bar, fn_bar: p.froude(u_bar) };
            let a = compute_alphas(&p, &op);
            let net = |u: f64| p.resistance(u) - p.thrust(u, n_p).unwrap();
            let direct = net(u_bar + eps) - net(u_bar);
            let scale = p.resistance(u_bar + eps.abs()) + p.thrust(0.0, n_p).unwrap().abs() + 1.0;
            prop_assert!((a.drift(eps) - direct).abs() <= 1e-9 * scale);
        }
    }
}
