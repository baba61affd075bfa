//! Super-level sets D_t = {φ > t} of a computed extremal: the distribution
//! function V(t) = |D_t|, the auxiliary H(t) = ∫_{D_t} φ^{p-1}, and the
//! identities and inequalities built on them.

use serde::Serialize;

use crate::contour;
use crate::error::{Error, Result};
use crate::field::{quotient_value, ScalarField};
use crate::geometry::{unit_ball_volume, Domain};
use crate::radial::RadialProfile;

/// A solved extremal, on a ball or on a grid.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Radial(&'a RadialProfile),
    Grid(&'a ScalarField),
}

impl<'a> Source<'a> {
    pub fn n(&self) -> usize {
        match self {
            Source::Radial(r) => r.n,
            Source::Grid(_) => 2,
        }
    }

    pub fn p(&self) -> f64 {
        match self {
            Source::Radial(r) => r.p,
            Source::Grid(f) => f.p,
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Source::Radial(r) => r.sup(),
            Source::Grid(f) => f.max_value(),
        }
    }

    /// ∫_D φ^{p-1} dμ
    pub fn integral_pm1(&self) -> f64 {
        match self {
            Source::Radial(r) => r.moments.pm1,
            Source::Grid(f) => f.integral_pow(f.p - 1.0),
        }
    }

    /// ∫_D φ^p dμ
    pub fn integral_p(&self) -> f64 {
        match self {
            Source::Radial(r) => r.moments.p,
            Source::Grid(f) => f.integral_pow(f.p),
        }
    }

    /// Exact measure of the underlying domain.
    pub fn volume(&self) -> f64 {
        match self {
            Source::Radial(r) => r.volume(),
            Source::Grid(f) => f.grid.domain_volume,
        }
    }

    /// Measure of the support the integrals run over (the cell mask on grids).
    pub fn support_volume(&self) -> f64 {
        match self {
            Source::Radial(r) => r.volume(),
            Source::Grid(f) => f.grid.area(),
        }
    }

    /// Sobolev quotient of φ, i.e. C_p(D) for the extremal.
    pub fn quotient(&self) -> Result<f64> {
        match self {
            Source::Radial(r) => Ok(r.dirichlet_quotient()),
            Source::Grid(f) => quotient_value(f, f.p),
        }
    }

    /// The reported C_p(D): the shooting value on balls, the discrete quotient on grids.
    pub fn c_p(&self) -> Result<f64> {
        match self {
            Source::Radial(r) => Ok(r.c_p),
            Source::Grid(f) => quotient_value(f, f.p),
        }
    }

    /// λ of Δφ + λφ^{p-1} = 0.
    pub fn lambda(&self) -> Result<f64> {
        match self {
            Source::Radial(r) => Ok(r.lambda),
            Source::Grid(f) => f.lambda(),
        }
    }

    pub fn domain_id(&self) -> String {
        match self {
            Source::Radial(r) => Domain::ball(r.n, r.rho_m).map(|d| d.id()).unwrap_or_else(|_| "ball".into()),
            Source::Grid(f) => f.grid.domain_id.clone(),
        }
    }

    pub fn is_ball(&self) -> bool {
        match self {
            Source::Radial(_) => true,
            Source::Grid(f) => f.grid.is_ball,
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, Source::Radial(_))
    }
}

/// Sampled distribution data of an extremal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetData {
    pub n: usize,
    pub p: f64,
    /// M = sup φ
    pub sup: f64,
    /// |D| as seen by the source (the mask area on grids).
    pub total_volume: f64,
    /// Levels, uniform and descending from M to 0.
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub h: Vec<f64>,
    /// |Σ_t|, when available.
    pub perim: Option<Vec<f64>>,
    /// Area enclosed by the traced level curve (grids only).
    pub enclosed: Option<Vec<f64>>,
    /// Cell area on grids; `None` for radial sources.
    pub cell_area: Option<f64>,
}

/// Samples V(t), H(t) and the level perimeters at `num_levels` levels uniform in [0, M].
pub fn build_levelsets(source: Source<'_>, num_levels: usize) -> Result<LevelSetData> {
    if num_levels < 16 {
        return Err(Error::InvalidParameter(format!("need at least 16 levels, got {num_levels}")));
    }
    let sup = source.sup();
    if !(sup > 0.0) || !sup.is_finite() {
        return Err(Error::NoSolution("source has no positive maximum".into()));
    }
    let (n, p) = (source.n(), source.p());
    match source {
        Source::Radial(prof) => {
            let omega = unit_ball_volume(n as i64)?;
            let t = uniform_levels(sup, num_levels);
            let radii: Vec<f64> = t.iter().map(|&tk| prof.level_radius(tk)).collect();
            let v = radii.iter().map(|r| omega * r.powi(n as i32)).collect();
            let h = radii.iter().map(|&r| prof.ball_integral_at(r)).collect();
            let perim = radii.iter().map(|r| n as f64 * omega * r.powi(n as i32 - 1)).collect();
            Ok(LevelSetData {
                n,
                p,
                sup,
                total_volume: prof.volume(),
                t,
                v,
                h,
                perim: Some(perim),
                enclosed: None,
                cell_area: None,
            })
        }
        Source::Grid(field) => {
            let cell = field.grid.h * field.grid.h;
            let mut vals: Vec<f64> = field.interior_values().filter(|&v| v > 0.0).collect();
            vals.sort_by(|a, b| b.total_cmp(a));
            let mut distinct = vals.clone();
            distinct.dedup();
            let limit = (distinct.len() / 4).max(16);
            let count = if num_levels > limit {
                log::warn!(
                    "{num_levels} levels requested but the field has {} distinct values; using {limit}",
                    distinct.len()
                );
                limit
            } else {
                num_levels
            };
            let t = uniform_levels(sup, count);
            // prefix sums over values sorted descending
            let mut prefix = Vec::with_capacity(vals.len() + 1);
            prefix.push(0.0);
            for &x in &vals {
                prefix.push(prefix.last().unwrap() + x.powf(p - 1.0));
            }
            let mut v = Vec::with_capacity(count);
            let mut h = Vec::with_capacity(count);
            let mut perim = Vec::with_capacity(count);
            let mut enclosed = Vec::with_capacity(count);
            for &tk in &t {
                let above = vals.partition_point(|&x| x > tk);
                v.push(cell * above as f64);
                h.push(cell * prefix[above]);
                let c = if above == 0 { contour::Contour::default() } else { contour::trace(field, tk) };
                perim.push(c.length);
                enclosed.push(c.area);
            }
            Ok(LevelSetData {
                n,
                p,
                sup,
                total_volume: field.grid.area(),
                t,
                v,
                h,
                perim: Some(perim),
                enclosed: Some(enclosed),
                cell_area: Some(cell),
            })
        }
    }
}

fn uniform_levels(sup: f64, count: usize) -> Vec<f64> {
    let last = (count - 1) as f64;
    let mut t: Vec<f64> = (0..count).map(|k| sup * (last - k as f64) / last).collect();
    t[0] = sup;
    t[count - 1] = 0.0;
    t
}

impl LevelSetData {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Checks the monotonicity and endpoint invariants.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::NoSolution(format!("level-set data violates: {what}")));
        let k = self.len() - 1;
        if self.t.windows(2).any(|w| w[1] >= w[0]) {
            return fail("levels strictly descending");
        }
        if self.v.windows(2).any(|w| w[1] < w[0]) || self.h.windows(2).any(|w| w[1] < w[0]) {
            return fail("V and H non-increasing in t");
        }
        if self.v[0] != 0.0 || self.h[0] != 0.0 {
            return fail("V(M) = H(M) = 0");
        }
        if (self.v[k] - self.total_volume).abs() > 1e-9 * self.total_volume {
            return fail("V(0) = |D|");
        }
        Ok(())
    }

    fn omega(&self) -> f64 {
        unit_ball_volume(self.n as i64).expect("n >= 2")
    }
}

/// max over interior levels of |ΔH/ΔV − ⟨t^{p-1}⟩| / M^{p-1}: the secant across the slab
/// t_{k+1} < t < t_{k-1} against the mean of t^{p-1} over the same slab. The point value
/// t_k^{p-1} would make the error O(Δt^{p-1}) at the lowest level when p < 2.
/// Levels whose neighbours enclose no volume change are skipped.
pub fn dhdv_check(ls: &LevelSetData) -> f64 {
    let scale = ls.sup.powf(ls.p - 1.0);
    let mut worst = 0.0f64;
    let mut skipped = 0;
    for k in 1..ls.len() - 1 {
        let dv = ls.v[k + 1] - ls.v[k - 1];
        if dv <= 0.0 {
            skipped += 1;
            continue;
        }
        let slope = (ls.h[k + 1] - ls.h[k - 1]) / dv;
        let (hi, lo) = (ls.t[k - 1], ls.t[k + 1]);
        let mean = (hi.powf(ls.p) - lo.powf(ls.p)) / (ls.p * (hi - lo));
        worst = worst.max((slope - mean).abs() / scale);
    }
    if skipped > 0 {
        log::info!("dH/dV check skipped {skipped} levels with empty bands");
    }
    worst
}

/// H as a function of the volume radius ρ = (V/ω_n)^{1/n}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoParameterization {
    /// Ascending from 0 to ρ_M.
    pub rho: Vec<f64>,
    pub h: Vec<f64>,
    /// dH/dρ by centred secants; 0 at both ends (H ~ ρ^n at the origin, H'(ρ_M) = 0).
    pub dh: Vec<f64>,
    /// One-sided secant at ρ_M, which should tend to 0 under refinement.
    pub end_slope: f64,
}

pub fn rho_parameterization(ls: &LevelSetData) -> RhoParameterization {
    let inv_n = 1.0 / ls.n as f64;
    let omega = ls.omega();
    let rho: Vec<f64> = ls.v.iter().map(|&v| (v / omega).powf(inv_n)).collect();
    let k = rho.len();
    let mut dh = vec![0.0; k];
    for i in 1..k - 1 {
        let (a, b) = (rho[i] - rho[i - 1], rho[i + 1] - rho[i]);
        if a > 0.0 && b > 0.0 {
            // three-point derivative for unequal spacing
            dh[i] = (a * a * (ls.h[i + 1] - ls.h[i]) + b * b * (ls.h[i] - ls.h[i - 1])) / (a * b * (a + b));
            continue;
        }
        // widen the stencil across empty bands
        let (mut lo, mut hi) = (i - 1, i + 1);
        while rho[hi] - rho[lo] <= 0.0 && (lo > 0 || hi < k - 1) {
            lo = lo.saturating_sub(1);
            hi = (hi + 1).min(k - 1);
        }
        if rho[hi] > rho[lo] {
            dh[i] = (ls.h[hi] - ls.h[lo]) / (rho[hi] - rho[lo]);
        }
    }
    let mut j = k - 2;
    while j > 0 && rho[j] >= rho[k - 1] {
        j -= 1;
    }
    let end_slope = if rho[k - 1] > rho[j] { (ls.h[k - 1] - ls.h[j]) / (rho[k - 1] - rho[j]) } else { 0.0 };
    RhoParameterization { rho, h: ls.h.clone(), dh, end_slope }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Relative deviation of ∫₀^{ρ_M} ρ^{(1-n)/(p-1)} (dH/dρ)^{p/(p-1)} dρ from (nω_n)^{1/(p-1)} ∫φ^p.
pub fn change_var3_identity(ls: &LevelSetData, phi_p_integral: f64) -> f64 {
    let rp = rho_parameterization(ls);
    let (n, p) = (ls.n as f64, ls.p);
    let a = (1.0 - n) / (p - 1.0);
    let q = p / (p - 1.0);
    let g: Vec<f64> = rp
        .rho
        .iter()
        .zip(&rp.dh)
        .map(|(&r, &d)| if r > 0.0 && d > 0.0 { r.powf(a) * d.powf(q) } else { 0.0 })
        .collect();
    let lhs = trapezoid(&rp.rho, &g);
    let rhs = (n * ls.omega()).powf(1.0 / (p - 1.0)) * phi_p_integral;
    (lhs - rhs).abs() / rhs
}

/// The two weighted H² integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HSquareIntegrals {
    /// ∫₀^{|D|} V^{2(1-n)/n} H² dV
    pub i_v: f64,
    /// ∫₀^{ρ_M} ρ^{1-n} H² dρ
    pub i_rho: f64,
    /// |I_V − nω_n^{(2-n)/n} I_ρ| / I_V; the two sides use different quadratures.
    pub consistency: f64,
}

pub fn h_square_integrals(ls: &LevelSetData) -> HSquareIntegrals {
    let n = ls.n as f64;
    let omega = ls.omega();
    let rho: Vec<f64> = ls.v.iter().map(|&v| (v / omega).powf(1.0 / n)).collect();
    // both integrands vanish at the origin, where H ~ V
    let fv: Vec<f64> =
        ls.v.iter()
            .zip(&ls.h)
            .map(|(&v, &h)| if v > 0.0 { v.powf(2.0 * (1.0 - n) / n) * h * h } else { 0.0 })
            .collect();
    let fr: Vec<f64> =
        rho.iter().zip(&ls.h).map(|(&r, &h)| if r > 0.0 { r.powf(1.0 - n) * h * h } else { 0.0 }).collect();
    let i_v = trapezoid(&ls.v, &fv);
    let i_rho = trapezoid(&rho, &fr);
    let mapped = n * omega.powf((2.0 - n) / n) * i_rho;
    let consistency = if i_v > 0.0 { (i_v - mapped).abs() / i_v } else { 0.0 };
    HSquareIntegrals { i_v, i_rho, consistency }
}

/// Isoperimetric ratio |Σ_t|² / (n² ω_n^{2/n} V^{2(n-1)/n}) at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsoperimetricSample {
    pub t: f64,
    /// Ratio with V the sampled volume (cell count on grids).
    pub ratio: f64,
    /// Ratio with V the area enclosed by the traced curve (grids only).
    pub ratio_enclosed: Option<f64>,
}

/// Levels on a grid whose super-level set has fewer cells than this are too small to
/// compare a traced perimeter with a cell count.
pub const MIN_RESOLVED_CELLS: f64 = 64.0;

/// Ratios at every level with a nonempty level set and a traced curve.
pub fn isoperimetric_ratios(ls: &LevelSetData) -> Result<Vec<IsoperimetricSample>> {
    let perim = ls.perim.as_ref().ok_or_else(|| Error::UnsupportedSource("no perimeters".into()))?;
    let n = ls.n as f64;
    let c = n * n * ls.omega().powf(2.0 / n);
    let e = 2.0 * (n - 1.0) / n;
    let min_volume = ls.cell_area.map_or(0.0, |a| MIN_RESOLVED_CELLS * a);
    let mut dropped = 0;
    let mut out = Vec::new();
    for k in 0..ls.len() {
        let (v, l) = (ls.v[k], perim[k]);
        if v <= 0.0 {
            continue;
        }
        if l <= 0.0 || v < min_volume {
            dropped += 1;
            continue;
        }
        let ratio_enclosed = ls.enclosed.as_ref().map(|a| l * l / (c * a[k].powf(e)));
        out.push(IsoperimetricSample { t: ls.t[k], ratio: l * l / (c * v.powf(e)), ratio_enclosed });
    }
    if dropped > 0 {
        log::info!("isoperimetric check dropped {dropped} unresolved levels");
    }
    Ok(out)
}

/// Smallest isoperimetric ratio over the resolved levels. On grids the area is the one
/// enclosed by the traced curve, so that perimeter and area describe the same set; a
/// cell count differs from it by lattice noise of several percent on small level sets.
pub fn isoperimetric_check(ls: &LevelSetData) -> Result<f64> {
    Ok(isoperimetric_ratios(ls)?.iter().map(|s| s.ratio_enclosed.unwrap_or(s.ratio)).fold(f64::INFINITY, f64::min))
}

/// max relative gap between ∫_{Σ_t} dσ/|∇φ| and |Σ_t|²/(λH(t)) over the levels of a
/// radial source, where both sides are exact and must agree.
pub fn cauchy_schwarz_gap(prof: &RadialProfile, ls: &LevelSetData) -> f64 {
    let surface = prof.n as f64 * unit_ball_volume(prof.n as i64).expect("n >= 2");
    let mut worst = 0.0f64;
    for k in 1..ls.len() {
        let r = prof.level_radius(ls.t[k]);
        let area = surface * r.powi(prof.n as i32 - 1);
        let lhs = area / prof.slope_at(r).abs();
        let rhs = area * area / (prof.lambda * ls.h[k]);
        worst = worst.max((lhs - rhs).abs() / lhs);
    }
    worst
}
