//! The one-dimensional problem
//!
//!   Λ* = inf N[f]^{2(p-1)/p} / D[f],
//!   N[f] = ∫₀^{ρ_M} ρ^{(1-n)/(p-1)} f'^{p/(p-1)} dρ,   D[f] = ∫₀^{ρ_M} ρ^{1-n} f² dρ,
//!
//! over non-decreasing f with f(0) = 0, and its relation to C_p of the ball.
//!
//! Discretization: nodes ρ_j = j h, slopes s on the cells, the weight
//! ρ^{(1-n)/(p-1)} at cell midpoints, and trapezoid weights for D with the
//! first cell integrated against the local model ρ^{1-n} f² ~ ρ^{n+1}.
//! Stationary points satisfy the flux form E_j = Λ M_j with
//! E_j = F_{j-1/2} − F_{j+1/2}, F = m s^{1/(p-1)}, F_{N+1/2} = 0 (natural
//! Neumann end) and M_j = w_j ρ_j^{1-n} f_j. Solving E(g) = M(f) is explicit
//! (sum the fluxes from the right end, then the slopes from the left), which
//! gives a nonlinear inverse iteration for the positive solution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, Exponents};
use crate::radial::solve_radial_profile_with;
use crate::radial::RadialOptions;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaStarResult {
    pub n: usize,
    pub p: f64,
    pub rho_m: f64,
    pub lambda_star: f64,
    /// Λ of the Euler–Lagrange equation, fitted to the discrete equation.
    pub multiplier: f64,
    pub rho: Vec<f64>,
    /// Minimizer, scaled to f(ρ_M) = 1.
    pub f: Vec<f64>,
    pub el_residual: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub iterations: usize,
}

/// Discrete operators on a uniform grid of [0, ρ_M].
struct Grid {
    n: f64,
    p: f64,
    h: f64,
    rho: Vec<f64>,
    /// ρ^{(1-n)/(p-1)} at cell midpoints
    mid_weight: Vec<f64>,
    /// w_j ρ_j^{1-n}; zero at the origin
    den_weight: Vec<f64>,
}

impl Grid {
    fn new(n: usize, p: f64, rho_m: f64, points: usize) -> Self {
        let cells = points - 1;
        let h = rho_m / cells as f64;
        let nf = n as f64;
        let a = (1.0 - nf) / (p - 1.0);
        let rho: Vec<f64> = (0..points).map(|j| j as f64 * h).collect();
        let mid_weight = (0..cells).map(|j| ((j as f64 + 0.5) * h).powf(a)).collect();
        let den_weight = (0..points)
            .map(|j| {
                let w = match j {
                    0 => 0.0,
                    1 => h / 2.0 + h / (nf + 2.0),
                    _ if j == cells => h / 2.0,
                    _ => h,
                };
                if j == 0 {
                    0.0
                } else {
                    w * rho[j].powf(1.0 - nf)
                }
            })
            .collect();
        Self { n: nf, p, h, rho, mid_weight, den_weight }
    }

    fn slopes(&self, f: &[f64]) -> Vec<f64> {
        f.windows(2).map(|w| (w[1] - w[0]) / self.h).collect()
    }

    fn numerator(&self, f: &[f64]) -> f64 {
        let q = self.p / (self.p - 1.0);
        self.slopes(f).iter().zip(&self.mid_weight).map(|(s, m)| self.h * m * s.abs().powf(q)).sum()
    }

    fn denominator(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.den_weight).map(|(v, w)| w * v * v).sum()
    }

    fn quotient(&self, f: &[f64]) -> (f64, f64, f64) {
        let num = self.numerator(f);
        let den = self.denominator(f);
        (num.powf(2.0 * (self.p - 1.0) / self.p) / den, num, den)
    }

    /// Cell fluxes F_{j+1/2} = m s^{1/(p-1)}.
    fn fluxes(&self, f: &[f64]) -> Vec<f64> {
        let e = 1.0 / (self.p - 1.0);
        self.slopes(f).iter().zip(&self.mid_weight).map(|(&s, m)| m * s.signum() * s.abs().powf(e)).collect()
    }

    /// (E_j, M_j) for j = 1..=N.
    fn el_terms(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let flux = self.fluxes(f);
        let last = f.len() - 1;
        let e = (1..=last).map(|j| flux[j - 1] - if j < last { flux[j] } else { 0.0 }).collect();
        let m = (1..=last).map(|j| self.den_weight[j] * f[j]).collect();
        (e, m)
    }

    /// Solves E(g) = b for the non-decreasing g with g(0) = 0.
    fn invert(&self, b: &[f64]) -> Vec<f64> {
        let cells = b.len() - 1;
        // F_{j-1/2} = Σ_{i ≥ j} b_i
        let mut flux = vec![0.0; cells];
        let mut acc = 0.0;
        for j in (1..=cells).rev() {
            acc += b[j];
            flux[j - 1] = acc;
        }
        let mut g = vec![0.0; cells + 1];
        for j in 0..cells {
            let s = (flux[j].max(0.0) / self.mid_weight[j]).powf(self.p - 1.0);
            g[j + 1] = g[j] + self.h * s;
        }
        g
    }
}

/// Minimizes the discrete quotient on `grid_points` uniform nodes.
pub fn solve_lambda_star(n: usize, p: f64, rho_m: f64, grid_points: usize) -> Result<LambdaStarResult> {
    solve_lambda_star_with(n, p, rho_m, grid_points, 1e-13, 10_000)
}

pub fn solve_lambda_star_with(
    n: usize,
    p: f64,
    rho_m: f64,
    grid_points: usize,
    tol: f64,
    max_iters: usize,
) -> Result<LambdaStarResult> {
    Exponents::new(n, p)?;
    if !(rho_m > 0.0) || !rho_m.is_finite() {
        return Err(Error::InvalidMeasure(rho_m));
    }
    if grid_points < 64 {
        return Err(Error::InvalidParameter(format!("need at least 64 grid points, got {grid_points}")));
    }
    let grid = Grid::new(n, p, rho_m, grid_points);
    // start from the origin-compatible ρ^n, normalized at the far end
    let mut f: Vec<f64> = grid.rho.iter().map(|r| (r / rho_m).powi(n as i32)).collect();
    let mut best = grid.quotient(&f).0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let b: Vec<f64> = f.iter().zip(&grid.den_weight).map(|(v, w)| w * v).collect();
        let mut g = grid.invert(&b);
        let scale = *g.last().unwrap();
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Nonconvergence { iterations, best });
        }
        g.iter_mut().for_each(|v| *v /= scale);
        let change = g.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        f = g;
        best = best.min(grid.quotient(&f).0);
        if change < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Nonconvergence { iterations, best });
    }
    let (lambda_star, numerator, denominator) = grid.quotient(&f);
    let (e, m) = grid.el_terms(&f);
    let multiplier = dot(&e, &m) / dot(&m, &m);
    let el_residual = residual_on(&grid, &f, multiplier);
    Ok(LambdaStarResult {
        n,
        p,
        rho_m,
        lambda_star,
        multiplier,
        rho: grid.rho,
        f,
        el_residual,
        numerator,
        denominator,
        iterations,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discrete quotient of arbitrary samples `f` on uniform nodes over [0, ρ_M]:
/// returns (quotient, numerator, denominator).
pub fn quotient_of_samples(n: usize, p: f64, rho_m: f64, f: &[f64]) -> Result<(f64, f64, f64)> {
    if f.len() < 3 {
        return Err(Error::InvalidParameter("need at least 3 samples".into()));
    }
    let grid = Grid::new(n, p, rho_m, f.len());
    let (q, num, den) = grid.quotient(f);
    if !(den > 0.0) {
        return Err(Error::UndefinedQuotient);
    }
    Ok((q, num, den))
}

fn residual_on(grid: &Grid, f: &[f64], lambda: f64) -> f64 {
    let flux = grid.fluxes(f);
    let last = f.len() - 1;
    let nf = grid.n;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for j in 1..last {
        let weighted = grid.rho[j].powf(1.0 - nf) * f[j];
        scale = scale.max(weighted);
        if j >= 2 {
            let derivative = (flux[j] - flux[j - 1]) / grid.h;
            worst = worst.max((derivative + lambda * weighted).abs());
        }
    }
    worst / (if lambda > 0.0 { lambda } else { 1.0 } * scale)
}

/// max over interior nodes of |(ρ^{(1-n)/(p-1)} f'^{1/(p-1)})' + Λ ρ^{1-n} f| / (Λ max ρ^{1-n} f),
/// for arbitrary samples on uniform nodes (normalized by max ρ^{1-n} f alone when Λ = 0).
/// The first two nodes are excluded; for n ≥ 3 sampled closed forms still see an
/// O(1/(j² h)) truncation of the midpoint slopes at small j.
pub fn el_residual_of(n: usize, p: f64, rho_m: f64, f: &[f64], lambda: f64) -> f64 {
    residual_on(&Grid::new(n, p, rho_m, f.len()), f, lambda)
}

pub fn euler_lagrange_residual(res: &LambdaStarResult) -> f64 {
    el_residual_of(res.n, res.p, res.rho_m, &res.f, res.multiplier)
}

/// Relative deviation of the multiplier from Λ* N^{(2-p)/p}.
pub fn multiplier_scaling_check(res: &LambdaStarResult) -> f64 {
    let predicted = res.lambda_star * res.numerator.powf((2.0 - res.p) / res.p);
    (res.multiplier - predicted).abs() / res.multiplier.abs()
}

/// The test function ψ(ρ) = ∫_ρ^{ρ_M} r^{1-n} f(r) dr built from a minimizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiTransform {
    pub rho: Vec<f64>,
    pub psi: Vec<f64>,
    /// Λ^{-1} ρ^{(1-n)/(p-1)} f'^{1/(p-1)} at the nodes.
    pub closed_form: Vec<f64>,
    /// max |ψ − closed form| / max ψ over nodes away from the origin.
    pub max_deviation: f64,
}

pub fn psi_transform(res: &LambdaStarResult) -> PsiTransform {
    let grid = Grid::new(res.n, res.p, res.rho_m, res.f.len());
    let last = res.f.len() - 1;
    let integrand: Vec<f64> =
        res.rho.iter().zip(&res.f).map(|(&r, &v)| if r > 0.0 { r.powf(1.0 - grid.n) * v } else { 0.0 }).collect();
    let mut psi = vec![0.0; last + 1];
    for j in (0..last).rev() {
        // the first cell uses the local model r^{1-n} f ~ r
        let cell = if j == 0 { grid.h * integrand[1] / 2.0 } else { grid.h * (integrand[j] + integrand[j + 1]) / 2.0 };
        psi[j] = psi[j + 1] + cell;
    }
    let flux = grid.fluxes(&res.f);
    let closed_form: Vec<f64> = (0..=last)
        .map(|j| {
            let f_node = match j {
                0 => flux[0],
                _ if j == last => 0.0,
                _ => 0.5 * (flux[j - 1] + flux[j]),
            };
            f_node / res.multiplier
        })
        .collect();
    let top = psi.iter().copied().fold(0.0, f64::max);
    let max_deviation = (1..=last).map(|j| (psi[j] - closed_form[j]).abs()).fold(0.0, f64::max) / top;
    PsiTransform { rho: res.rho.clone(), psi, closed_form, max_deviation }
}

/// Both sides of the identification Λ* = (nω_n)^{(2-p)/p} C_p(B_{ρ_M}).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sandwich {
    pub lambda_star: f64,
    pub c_p_ball: f64,
    /// (nω_n)^{(2-p)/p} C_p(B_{ρ_M})
    pub target: f64,
    /// (Λ* − target)/Λ*: the upper bound says this is ≤ 0.
    pub upper_gap: f64,
    /// (C_p − (nω_n)^{(p-2)/p} Λ*)/C_p: the lower bound says this is ≤ 0.
    pub lower_gap: f64,
    /// Quotient of the ball's H(ρ) = ∫_{B_ρ} φ^{p-1}, which must be ≥ Λ*.
    pub h_test_quotient: f64,
    /// Sobolev quotient of the radial ψ built from the minimizer, which must be ≥ C_p.
    pub psi_sobolev_quotient: f64,
}

pub fn sandwich_check(n: usize, p: f64, rho_m: f64) -> Result<Sandwich> {
    sandwich_check_with(n, p, rho_m, 8001)
}

pub fn sandwich_check_with(n: usize, p: f64, rho_m: f64, grid_points: usize) -> Result<Sandwich> {
    let res = solve_lambda_star(n, p, rho_m, grid_points)?;
    let opts = RadialOptions { samples: grid_points, ..Default::default() };
    let prof = solve_radial_profile_with(Exponents::new(n, p)?, rho_m, &opts)?;
    let surface = n as f64 * unit_ball_volume(n as i64)?;
    let factor = surface.powf((2.0 - p) / p);
    let target = factor * prof.c_p;
    let h_test_quotient = quotient_of_samples(n, p, rho_m, &prof.ball_integral_pm1)?.0;
    let psi = psi_transform(&res);
    let psi_sobolev_quotient = radial_sobolev_quotient(n, p, &psi.rho, &psi.psi);
    Ok(Sandwich {
        lambda_star: res.lambda_star,
        c_p_ball: prof.c_p,
        target,
        upper_gap: (res.lambda_star - target) / res.lambda_star,
        lower_gap: (prof.c_p - res.lambda_star / factor) / prof.c_p,
        h_test_quotient,
        psi_sobolev_quotient,
    })
}

/// Sobolev quotient of the radial function ψ(|x|) on the ball, from uniform samples.
pub fn radial_sobolev_quotient(n: usize, p: f64, rho: &[f64], psi: &[f64]) -> f64 {
    let surface = n as f64 * unit_ball_volume(n as i64).expect("n >= 2");
    let w = |r: f64| r.powi(n as i32 - 1);
    let mut energy = 0.0;
    let mut mass = 0.0;
    for j in 0..rho.len() - 1 {
        let dr = rho[j + 1] - rho[j];
        let slope = (psi[j + 1] - psi[j]) / dr;
        energy += dr * w(0.5 * (rho[j] + rho[j + 1])) * slope * slope;
        mass += 0.5 * dr * (w(rho[j]) * psi[j].max(0.0).powf(p) + w(rho[j + 1]) * psi[j + 1].max(0.0).powf(p));
    }
    surface * energy / (surface * mass).powf(2.0 / p)
}
