//! Radial ground states on balls by shooting.
//!
//! The unit problem ψ'' + (n-1)/r ψ' + ψ^{p-1} = 0, ψ(0) = 1, ψ'(0) = 0 is
//! integrated until its first zero R0; every ball solution is a rescaling
//! φ(r) = A ψ(R0 r / ρ_M).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, validate_exponents, Exponents};
use crate::ode::DormandPrince;

/// Knobs of the shooting solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOptions {
    /// Integrator tolerance (relative and absolute).
    pub tol: f64,
    /// Number of uniform samples of the returned profile, endpoints included.
    pub samples: usize,
    /// Give up if no zero is found before this radius of the unit problem.
    pub r_max: f64,
    /// The series expansion is used on [0, series_radius].
    pub series_radius: f64,
    pub max_steps: usize,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self { tol: 1e-12, samples: 10_000, r_max: 1e4, series_radius: 1e-4, max_steps: 2_000_000 }
    }
}

// state: [ψ, ψ', ∫s^{n-1}ψ^{p-1}, ∫s^{n-1}ψ^p, ∫s^{n-1}ψ², ∫s^{n-1}ψ'²]
type State = [f64; 6];

/// First zero and moment integrals of the unit-height profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitShot {
    pub n: usize,
    pub p: f64,
    /// First zero R0 of ψ.
    pub zero: f64,
    /// ∫_0^{R0} s^{n-1} ψ^{p-1} ds
    pub j_pm1: f64,
    /// ∫_0^{R0} s^{n-1} ψ^p ds
    pub j_p: f64,
    /// ∫_0^{R0} s^{n-1} ψ² ds
    pub j_2: f64,
    /// ∫_0^{R0} s^{n-1} ψ'² ds
    pub energy: f64,
    /// |ψ(R0)| after bisection.
    pub residual: f64,
}

fn spow(x: f64, e: f64) -> f64 {
    if x >= 0.0 {
        x.powf(e)
    } else {
        -(-x).powf(e)
    }
}

struct UnitProblem {
    n: usize,
    p: f64,
    dp: DormandPrince,
    opts: RadialOptions,
}

impl UnitProblem {
    fn new(e: Exponents, opts: &RadialOptions) -> Result<Self> {
        validate_exponents(e)?;
        if !(opts.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", opts.tol)));
        }
        let dp = DormandPrince { rtol: opts.tol, atol: opts.tol * 1e-2, h_max: 0.05 };
        Ok(Self { n: e.n, p: e.p, dp, opts: *opts })
    }

    fn rhs(&self, r: f64, y: &State) -> State {
        let (n, p) = (self.n as f64, self.p);
        let w = r.powi(self.n as i32 - 1);
        let pos = y[0].max(0.0);
        [
            y[1],
            -(n - 1.0) / r * y[1] - spow(y[0], p - 1.0),
            w * pos.powf(p - 1.0),
            w * pos.powf(p),
            w * pos * pos,
            w * y[1] * y[1],
        ]
    }

    /// Series solution ψ = 1 + a r² + b r⁴ and its integrals near the origin.
    fn series(&self, r: f64) -> State {
        let (n, p) = (self.n as f64, self.p);
        let a = -1.0 / (2.0 * n);
        let b = (p - 1.0) / (8.0 * n * (n + 2.0));
        let r2 = r * r;
        let rn = r.powi(self.n as i32);
        let moment = |q: f64| rn / n + q * a * rn * r2 / (n + 2.0);
        [
            1.0 + a * r2 + b * r2 * r2,
            2.0 * a * r + 4.0 * b * r * r2,
            moment(p - 1.0),
            moment(p),
            moment(2.0),
            4.0 * a * a * rn * r2 / (n + 2.0),
        ]
    }

    fn shoot(&self) -> Result<(f64, State)> {
        let f = |r: f64, y: &State| self.rhs(r, y);
        let mut r = self.opts.series_radius;
        let mut y = self.series(r);
        let mut h: f64 = 1e-3;
        for _ in 0..self.opts.max_steps {
            if r > self.opts.r_max {
                break;
            }
            let (y_new, err) = self.dp.step(&f, r, &y, h);
            if err > 1.0 {
                h = self.dp.next_h(h, err);
                continue;
            }
            if y_new[0] <= 0.0 {
                return Ok(self.bisect_zero(r, &y, h));
            }
            r += h;
            y = y_new;
            h = self.dp.next_h(h, err);
        }
        Err(Error::NoZeroFound { r_max: self.opts.r_max })
    }

    /// ψ changes sign inside the accepted step [r, r + h]; bisect on the step length.
    fn bisect_zero(&self, r: f64, y: &State, h: f64) -> (f64, State) {
        let f = |x: f64, y: &State| self.rhs(x, y);
        let (mut lo, mut hi) = (0.0, h);
        let mut y_lo = *y;
        let mut y_hi = self.dp.step(&f, r, y, h).0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let y_mid = self.dp.step(&f, r, y, mid).0;
            if y_mid[0] > 0.0 {
                lo = mid;
                y_lo = y_mid;
            } else {
                hi = mid;
                y_hi = y_mid;
            }
        }
        if y_lo[0].abs() <= y_hi[0].abs() {
            (r + lo, y_lo)
        } else {
            (r + hi, y_hi)
        }
    }

    /// Integrates from the origin through the (sorted) targets, landing on each exactly.
    fn sample(&self, targets: &[f64]) -> Vec<State> {
        let f = |r: f64, y: &State| self.rhs(r, y);
        let r0 = self.opts.series_radius;
        let mut out = Vec::with_capacity(targets.len());
        let mut r = r0;
        let mut y = self.series(r0);
        let mut h: f64 = 1e-3;
        for &target in targets {
            if target <= r0 {
                let mut s = self.series(target);
                if target == 0.0 {
                    s[1] = 0.0;
                }
                out.push(s);
                continue;
            }
            while r < target {
                let remaining = target - r;
                let h_try = h.min(remaining);
                let (y_new, err) = self.dp.step(&f, r, &y, h_try);
                if err > 1.0 {
                    h = self.dp.next_h(h_try, err);
                    continue;
                }
                y = y_new;
                r = if h_try == remaining { target } else { r + h_try };
                if h_try < h {
                    // a clamped step says nothing about the natural step size
                    continue;
                }
                h = self.dp.next_h(h_try, err);
            }
            out.push(y);
        }
        out
    }
}

/// Solves the unit problem for its first zero R0 and moment integrals.
pub fn shoot_unit_profile(n: usize, p: f64, tol: f64) -> Result<UnitShot> {
    shoot_unit_profile_with(Exponents { n, p }, &RadialOptions { tol, ..Default::default() })
}

pub fn shoot_unit_profile_with(e: Exponents, opts: &RadialOptions) -> Result<UnitShot> {
    let problem = UnitProblem::new(e, opts)?;
    let (zero, y) = problem.shoot()?;
    Ok(UnitShot { n: e.n, p: e.p, zero, j_pm1: y[2], j_p: y[3], j_2: y[4], energy: y[5], residual: y[0].abs() })
}

/// Moment integrals ∫_D φ^q dμ of a radial profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    /// q = p - 1
    pub pm1: f64,
    /// q = p
    pub p: f64,
    /// q = 2
    pub two: f64,
}

/// The normalized extremal φ (∫φ^p = 1) on the ball of radius `rho_m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub n: usize,
    pub p: f64,
    pub rho_m: f64,
    /// Uniform samples on [0, ρ_M].
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    /// φ'(r) at the samples.
    pub dphi: Vec<f64>,
    /// ∫_{B_r} φ^{p-1} dμ at the samples.
    pub ball_integral_pm1: Vec<f64>,
    pub lambda: f64,
    pub c_p: f64,
    pub moments: Moments,
    /// ∫_D |∇φ|² dμ
    pub dirichlet_energy: f64,
    /// First zero of the unit-height problem.
    pub unit_zero: f64,
    /// A in φ(r) = A ψ(R0 r / ρ_M).
    pub amplitude: f64,
}

/// Shoots, rescales to radius `rho_m` and normalizes ∫φ^p = 1.
pub fn solve_radial_profile(n: usize, p: f64, rho_m: f64, tol: f64) -> Result<RadialProfile> {
    solve_radial_profile_with(Exponents { n, p }, rho_m, &RadialOptions { tol, ..Default::default() })
}

pub fn solve_radial_profile_with(e: Exponents, rho_m: f64, opts: &RadialOptions) -> Result<RadialProfile> {
    if !(rho_m > 0.0) || !rho_m.is_finite() {
        return Err(Error::InvalidMeasure(rho_m));
    }
    if opts.samples < 3 {
        return Err(Error::InvalidParameter("profile needs at least 3 samples".into()));
    }
    let problem = UnitProblem::new(e, opts)?;
    let (zero, _) = problem.shoot()?;

    let m = opts.samples;
    let s: Vec<f64> = (0..m).map(|k| zero * k as f64 / (m - 1) as f64).collect();
    let states = problem.sample(&s);
    let end = states[m - 1];

    let (n, p) = (e.n, e.p);
    let nf = n as f64;
    let surface = nf * unit_ball_volume(n as i64)?;
    let k = zero / rho_m;
    let jacobian = k.powf(-nf);
    let amplitude = (surface * jacobian * end[3]).powf(-1.0 / p);
    let lambda = amplitude.powf(2.0 - p) * k * k;

    let moment = |q: f64, j: f64| surface * amplitude.powf(q) * jacobian * j;
    let moments = Moments { pm1: moment(p - 1.0, end[2]), p: moment(p, end[3]), two: moment(2.0, end[4]) };
    let dirichlet_energy = surface * amplitude * amplitude * k * k * jacobian * end[5];

    let mut r: Vec<f64> = s.iter().map(|si| si / k).collect();
    r[m - 1] = rho_m;
    let mut phi: Vec<f64> = states.iter().map(|y| amplitude * y[0].max(0.0)).collect();
    phi[m - 1] = 0.0;
    let dphi = states.iter().map(|y| amplitude * k * y[1]).collect();
    let ball_integral_pm1 = states.iter().map(|y| surface * amplitude.powf(p - 1.0) * jacobian * y[2]).collect();

    Ok(RadialProfile {
        n,
        p,
        rho_m,
        r,
        phi,
        dphi,
        ball_integral_pm1,
        lambda,
        c_p: lambda,
        moments,
        dirichlet_energy,
        unit_zero: zero,
        amplitude,
    })
}

/// C_p(B_1), the sharp Sobolev constant of the unit ball.
pub fn sobolev_constant_ball(n: usize, p: f64) -> Result<f64> {
    let opts = RadialOptions { samples: 3, ..Default::default() };
    Ok(solve_radial_profile_with(Exponents { n, p }, 1.0, &opts)?.c_p)
}

/// C_p(B_ρ) for a ball of radius `rho`.
pub fn sobolev_constant_ball_radius(n: usize, p: f64, rho: f64) -> Result<f64> {
    let opts = RadialOptions { samples: 3, ..Default::default() };
    Ok(solve_radial_profile_with(Exponents { n, p }, rho, &opts)?.c_p)
}

impl RadialProfile {
    pub fn sup(&self) -> f64 {
        self.phi[0]
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.n as i64).expect("n >= 2") * self.rho_m.powi(self.n as i32)
    }

    /// Dirichlet quotient ∫|∇φ|² / (∫φ^p)^{2/p}, from quadrature rather than from λ.
    pub fn dirichlet_quotient(&self) -> f64 {
        self.dirichlet_energy / self.moments.p.powf(2.0 / self.p)
    }

    /// |λ − Q (∫φ^p)^{(2-p)/p}| / λ with Q the Dirichlet quotient.
    pub fn scaling_residual(&self) -> f64 {
        let q = self.dirichlet_quotient();
        (self.lambda - q * self.moments.p.powf((2.0 - self.p) / self.p)).abs() / self.lambda
    }

    /// Maximum over sample intervals of the flux-form residual
    /// [r^{n-1}φ'] + λ ∫ r^{n-1}φ^{p-1}, as an interval average normalized by
    /// λ φ(0)^{p-1}.
    pub fn pde_residual(&self) -> f64 {
        let nf = self.n as f64;
        let surface = nf * unit_ball_volume(self.n as i64).expect("n >= 2");
        let scale = self.lambda * self.sup().powf(self.p - 1.0);
        let w = |r: f64| r.powi(self.n as i32 - 1);
        (0..self.r.len() - 1)
            .map(|k| {
                let (a, b) = (self.r[k], self.r[k + 1]);
                let flux = w(b) * self.dphi[k + 1] - w(a) * self.dphi[k];
                let source = (self.ball_integral_pm1[k + 1] - self.ball_integral_pm1[k]) / surface;
                let measure = (b.powf(nf) - a.powf(nf)) / nf;
                (flux + self.lambda * source).abs() / (measure * scale)
            })
            .fold(0.0, f64::max)
    }

    /// Whether φ' < 0 at every interior sample.
    pub fn is_strictly_decreasing(&self) -> bool {
        self.dphi[1..].iter().all(|&d| d < 0.0) && self.phi.windows(2).all(|w| w[1] < w[0])
    }

    fn interval_of(&self, r: f64) -> usize {
        let m = self.r.len();
        let step = self.rho_m / (m - 1) as f64;
        ((r / step).floor() as usize).min(m - 2)
    }

    /// Cubic Hermite interpolation of φ.
    pub fn value_at(&self, r: f64) -> f64 {
        let k = self.interval_of(r);
        hermite(self.r[k], self.r[k + 1], self.phi[k], self.phi[k + 1], self.dphi[k], self.dphi[k + 1], r)
    }

    /// φ'(r), interpolated with φ'' taken from the equation itself.
    pub fn slope_at(&self, r: f64) -> f64 {
        let k = self.interval_of(r);
        let curvature = |j: usize| {
            let source = self.lambda * self.phi[j].powf(self.p - 1.0);
            if self.r[j] == 0.0 {
                -source / self.n as f64
            } else {
                -(self.n as f64 - 1.0) / self.r[j] * self.dphi[j] - source
            }
        };
        let (a, b) = (self.r[k], self.r[k + 1]);
        hermite(a, b, self.dphi[k], self.dphi[k + 1], curvature(k), curvature(k + 1), r)
    }

    /// ∫_{B_r} φ^{p-1} dμ by Hermite interpolation of the cumulative integral.
    pub fn ball_integral_at(&self, r: f64) -> f64 {
        let k = self.interval_of(r);
        let surface = self.n as f64 * unit_ball_volume(self.n as i64).expect("n >= 2");
        let d = |j: usize| surface * self.r[j].powi(self.n as i32 - 1) * self.phi[j].powf(self.p - 1.0);
        let (a, b) = (self.r[k], self.r[k + 1]);
        hermite(a, b, self.ball_integral_pm1[k], self.ball_integral_pm1[k + 1], d(k), d(k + 1), r)
    }

    /// Radius of the super-level set {φ > t}; φ is decreasing so this is a ball.
    pub fn level_radius(&self, t: f64) -> f64 {
        if t >= self.sup() {
            return 0.0;
        }
        if t <= 0.0 {
            return self.rho_m;
        }
        // φ is decreasing: find the bracketing sample interval
        let k = self.phi.partition_point(|&v| v > t).saturating_sub(1).min(self.r.len() - 2);
        let (mut lo, mut hi) = (self.r[k], self.r[k + 1]);
        let interp =
            |r: f64| hermite(self.r[k], self.r[k + 1], self.phi[k], self.phi[k + 1], self.dphi[k], self.dphi[k + 1], r);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if interp(mid) > t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn hermite(a: f64, b: f64, fa: f64, fb: f64, da: f64, db: f64, x: f64) -> f64 {
    let h = b - a;
    let s = (x - a) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * fa + (s3 - 2.0 * s2 + s) * h * da + (-2.0 * s3 + 3.0 * s2) * fb + (s3 - s2) * h * db
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// j_{0,1} from the power series of J_0 and bisection; independent of the shooting code.
    fn bessel_j0_zero() -> f64 {
        let j0 = |x: f64| {
            let (mut term, mut sum) = (1.0, 1.0);
            for k in 1..60 {
                term *= -(x * x / 4.0) / (k as f64 * k as f64);
                sum += term;
            }
            sum
        };
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if j0(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn bessel_oracle_value() {
        assert!((bessel_j0_zero() - 2.404825557695773).abs() < 1e-14);
    }

    #[test]
    fn unit_zero_disk_linear() {
        let shot = shoot_unit_profile(2, 2.0, 1e-12).unwrap();
        assert!((shot.zero - bessel_j0_zero()).abs() < 1e-10, "{}", shot.zero);
        assert!(shot.residual <= 1e-12);
    }

    #[test]
    fn unit_zero_ball3_linear() {
        let shot = shoot_unit_profile(3, 2.0, 1e-12).unwrap();
        assert!((shot.zero - PI).abs() < 1e-10, "{}", shot.zero);
    }

    #[test]
    fn unit_zero_disk_quadratic() {
        // frozen from a fixed-step RK4 (h = 1e-5) bisection run and a DOP853
        // run at rtol 1e-13; both agree to 1e-10
        let shot = shoot_unit_profile(2, 3.0, 1e-10).unwrap();
        assert!((shot.zero - 2.92132072378).abs() < 1e-9, "{}", shot.zero);
    }

    #[test]
    fn no_zero_for_tiny_r_max() {
        let opts = RadialOptions { r_max: 1.0, ..Default::default() };
        let err = shoot_unit_profile_with(Exponents { n: 2, p: 2.0 }, &opts).unwrap_err();
        assert!(matches!(err, Error::NoZeroFound { .. }));
    }

    #[test]
    fn supercritical_rejected() {
        assert!(matches!(shoot_unit_profile(3, 6.5, 1e-10), Err(Error::SubcriticalityViolation { .. })));
    }

    #[test]
    fn disk_and_ball_constants() {
        let j = bessel_j0_zero();
        let c = sobolev_constant_ball(2, 2.0).unwrap();
        assert!((c - j * j).abs() / (j * j) < 1e-10, "{c}");
        let c3 = sobolev_constant_ball(3, 2.0).unwrap();
        assert!((c3 - PI * PI).abs() / (PI * PI) < 1e-10, "{c3}");
        let c_half = sobolev_constant_ball_radius(2, 2.0, 2.0).unwrap();
        assert!((c_half - j * j / 4.0).abs() < 1e-9);
    }

    #[test]
    fn profile_invariants() {
        for (n, p) in [(2, 2.0), (3, 2.0), (2, 1.5), (3, 2.5), (2, 4.0), (4, 2.5)] {
            let prof = solve_radial_profile(n, p, 1.3, 1e-12).unwrap();
            assert!((prof.moments.p - 1.0).abs() < 1e-10, "normalization {n} {p}");
            assert_eq!(prof.dphi[0], 0.0);
            assert_eq!(*prof.phi.last().unwrap(), 0.0);
            assert!(prof.is_strictly_decreasing(), "{n} {p}");
            assert!(prof.scaling_residual() <= 1e-8, "{n} {p}: {}", prof.scaling_residual());
            assert!(prof.pde_residual() <= 1e-6, "{n} {p}: {}", prof.pde_residual());
        }
    }

    #[test]
    fn scaling_law() {
        for (n, p) in [(2, 2.0), (2, 3.0), (3, 2.5), (3, 1.5)] {
            let base = sobolev_constant_ball(n, p).unwrap();
            for s in [0.5, 2.0, 3.0] {
                let scaled = sobolev_constant_ball_radius(n, p, s).unwrap();
                let expected = s.powf(n as f64 - 2.0 - 2.0 * n as f64 / p) * base;
                assert!((scaled - expected).abs() / expected < 1e-8, "{n} {p} {s}");
            }
        }
    }

    #[test]
    fn interpolation_and_levels() {
        let prof = solve_radial_profile(3, 2.0, 1.0, 1e-12).unwrap();
        // φ ∝ sin(πr)/r
        let c = prof.sup();
        for r in [0.1, 0.37, 0.5, 0.93] {
            let exact = c * (PI * r).sin() / (PI * r);
            assert!((prof.value_at(r) - exact).abs() < 1e-10 * c);
        }
        let t = prof.value_at(0.5);
        assert!((prof.level_radius(t) - 0.5).abs() < 1e-9);
        assert_eq!(prof.level_radius(prof.sup()), 0.0);
        assert_eq!(prof.level_radius(0.0), 1.0);
    }
}
