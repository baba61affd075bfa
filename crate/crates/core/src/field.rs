//! Extremals of the Sobolev quotient on planar domains.
//!
//! Values live at the centres of a uniform raster. The Dirichlet form is
//! the 5-point one, Σ (u_i - u_j)² over adjacent interior cells, plus a
//! boundary term (h/d) u_i² for every link that leaves the domain, where d
//! is the distance from the cell centre to ∂D along that link. The boundary
//! term places the zero Dirichlet value on ∂D itself instead of at the next
//! cell centre, which keeps the scheme second order (on a rectangle it is
//! exactly the reflected-ghost-cell scheme).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;

/// Smallest boundary distance, in units of h, used in a boundary link.
const MIN_WALL_FRACTION: f64 = 0.1;

const NO_NEIGHBOR: u32 = u32::MAX;

// -x, +x, -y, +y
const DIRECTIONS: [[f64; 2]; 4] = [[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]];
const OFFSETS: [[isize; 2]; 4] = [[-1, 0], [1, 0], [0, -1], [0, 1]];

/// Interior cells of a domain on a uniform raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMask {
    pub h: f64,
    /// Lower-left corner of the raster.
    pub origin: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    /// Row-major (index j * nx + i) interior flags.
    pub inside: Vec<bool>,
    /// h/d for each of the four links (-x, +x, -y, +y) that leave the domain.
    pub wall: Vec<[f64; 4]>,
    /// Bounding box `[xmin, ymin, xmax, ymax]` of the domain.
    pub bounds: [f64; 4],
    pub domain_id: String,
    /// Exact measure of the domain the mask was built from.
    pub domain_volume: f64,
    pub is_ball: bool,
}

impl GridMask {
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + (i as f64 + 0.5) * self.h, self.origin[1] + (j as f64 + 0.5) * self.h]
    }

    pub fn interior_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Total area of the interior cells.
    pub fn area(&self) -> f64 {
        self.interior_count() as f64 * self.h * self.h
    }

    fn neighbor(&self, i: usize, j: usize, k: usize) -> Option<usize> {
        let ni = i as isize + OFFSETS[k][0];
        let nj = j as isize + OFFSETS[k][1];
        if ni < 0 || nj < 0 || ni >= self.nx as isize || nj >= self.ny as isize {
            return None;
        }
        Some(self.index(ni as usize, nj as usize))
    }
}

/// Marks the cells whose centres lie strictly inside `d`.
pub fn rasterize(d: &Domain, h: f64) -> Result<GridMask> {
    if d.n != 2 {
        return Err(Error::InvalidGeometry(format!("grids need n = 2, got n = {}", d.n)));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {h}")));
    }
    let bounds = d.bounding_box()?;
    let cells = |extent: f64| (extent / h - 1e-9).ceil().max(1.0) as usize + 2;
    let nx = cells(bounds[2] - bounds[0]);
    let ny = cells(bounds[3] - bounds[1]);
    let origin = [bounds[0] - h, bounds[1] - h];
    let mut mask = GridMask {
        h,
        origin,
        nx,
        ny,
        inside: vec![false; nx * ny],
        wall: vec![[0.0; 4]; nx * ny],
        bounds,
        domain_id: d.id(),
        domain_volume: d.volume(),
        is_ball: d.is_ball(),
    };
    for j in 0..ny {
        for i in 0..nx {
            let c = mask.center(i, j);
            let idx = mask.index(i, j);
            mask.inside[idx] = d.contains(c[0], c[1]);
        }
    }
    if mask.interior_count() == 0 {
        return Err(Error::ResolutionTooCoarse { h });
    }
    for j in 0..ny {
        for i in 0..nx {
            let idx = mask.index(i, j);
            if !mask.inside[idx] {
                continue;
            }
            let c = mask.center(i, j);
            for (k, dir) in DIRECTIONS.iter().enumerate() {
                let outside = mask.neighbor(i, j, k).is_none_or(|nb| !mask.inside[nb]);
                if outside {
                    let dist = d.boundary_distance(c[0], c[1], *dir);
                    let theta = (dist / h).clamp(MIN_WALL_FRACTION, 1.0);
                    mask.wall[idx][k] = 1.0 / theta;
                }
            }
        }
    }
    Ok(mask)
}

/// How the initial iterate is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialGuess {
    /// Product of the distances to the edges of the bounding box.
    #[default]
    BoxDistance,
    /// 1 on every interior cell.
    Constant,
}

/// Time discretization of the normalized gradient flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Stepping {
    /// (I - dt Δ_h) u⁺ = u + dt λ u^{p-1}; the Laplacian is solved by conjugate gradients.
    #[default]
    LinearlyImplicit,
    /// u⁺ = u + dt (Δ_h u + λ u^{p-1}) with dt capped by the stencil's stability bound.
    Explicit,
}

/// Parameters of the gradient flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Initial pseudo-time step. Steps grow after accepted iterations and shrink after rejected ones.
    pub dt: f64,
    pub max_iters: usize,
    /// Stop once the normalized equation residual (see [`pde_residual`]) is below this.
    pub residual_tol: f64,
    pub seed: InitialGuess,
    pub stepping: Stepping,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            dt: 1.0,
            max_iters: 2_000,
            residual_tol: 1e-10,
            seed: InitialGuess::BoxDistance,
            stepping: Stepping::LinearlyImplicit,
        }
    }
}

impl FlowParams {
    pub fn explicit() -> Self {
        Self { dt: f64::INFINITY, max_iters: 2_000_000, stepping: Stepping::Explicit, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.residual_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidParameter(format!(
                "flow parameters need dt, residual_tol and max_iters positive (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// A nonnegative grid function vanishing outside the mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: GridMask,
    /// Raster values (row-major); zero outside the mask.
    pub values: Vec<f64>,
    pub p: f64,
    /// Accepted-step quotient history of the flow that produced the field (empty otherwise).
    pub history: Vec<f64>,
}

/// Compressed 5-point stencil over the interior cells.
struct Stencil {
    cells: Vec<usize>,
    neighbors: Vec<[u32; 4]>,
    /// Number of interior neighbours plus the boundary link weights.
    diag: Vec<f64>,
    /// max_i (diag_i + number of interior neighbours): Gershgorin bound of the operator.
    gershgorin: f64,
}

impl Stencil {
    fn new(grid: &GridMask) -> Self {
        let mut compact = vec![NO_NEIGHBOR; grid.inside.len()];
        let mut cells = Vec::new();
        for (idx, &inside) in grid.inside.iter().enumerate() {
            if inside {
                compact[idx] = cells.len() as u32;
                cells.push(idx);
            }
        }
        let mut neighbors = Vec::with_capacity(cells.len());
        let mut diag = Vec::with_capacity(cells.len());
        let mut gershgorin = 0.0f64;
        for &idx in &cells {
            let (i, j) = (idx % grid.nx, idx / grid.nx);
            let mut nb = [NO_NEIGHBOR; 4];
            let mut degree = 0.0;
            for (k, slot) in nb.iter_mut().enumerate() {
                if let Some(n) = grid.neighbor(i, j, k) {
                    if grid.inside[n] {
                        *slot = compact[n];
                        degree += 1.0;
                    }
                }
            }
            let d = degree + grid.wall[idx].iter().sum::<f64>();
            gershgorin = gershgorin.max(d + degree);
            neighbors.push(nb);
            diag.push(d);
        }
        Self { cells, neighbors, diag, gershgorin }
    }

    fn len(&self) -> usize {
        self.cells.len()
    }

    /// out = (shift I + L) u where L is the (h²-scaled) negative Laplacian.
    fn apply(&self, shift: f64, u: &[f64], out: &mut [f64]) {
        for (c, (nb, d)) in self.neighbors.iter().zip(&self.diag).enumerate() {
            let mut acc = (d + shift) * u[c];
            for &k in nb {
                if k != NO_NEIGHBOR {
                    acc -= u[k as usize];
                }
            }
            out[c] = acc;
        }
    }

    /// u · L u, the discrete Dirichlet energy.
    fn energy(&self, u: &[f64]) -> f64 {
        let mut lu = vec![0.0; u.len()];
        self.apply(0.0, u, &mut lu);
        dot(u, &lu)
    }

    fn gather(&self, raster: &[f64]) -> Vec<f64> {
        self.cells.iter().map(|&idx| raster[idx]).collect()
    }

    fn scatter(&self, compact: &[f64], len: usize) -> Vec<f64> {
        let mut raster = vec![0.0; len];
        for (&idx, &v) in self.cells.iter().zip(compact) {
            raster[idx] = v;
        }
        raster
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pos_pow(x: f64, e: f64) -> f64 {
    if x > 0.0 {
        x.powf(e)
    } else {
        0.0
    }
}

/// Jacobi-preconditioned conjugate gradients for (shift I + L) x = b, warm-started from `x`.
fn conjugate_gradient(st: &Stencil, shift: f64, b: &[f64], x: &mut [f64], rel_tol: f64) -> usize {
    let n = b.len();
    let mut r = vec![0.0; n];
    st.apply(shift, x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let b_norm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let inv_diag: Vec<f64> = st.diag.iter().map(|d| 1.0 / (d + shift)).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, m)| r * m).collect();
    let mut dir = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let max_iter = 20 * n + 100;
    for it in 0..max_iter {
        if dot(&r, &r).sqrt() <= rel_tol * b_norm {
            return it;
        }
        st.apply(shift, &dir, &mut q);
        let alpha = rz / dot(&dir, &q);
        for i in 0..n {
            x[i] += alpha * dir[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            dir[i] = z[i] + beta * dir[i];
        }
    }
    max_iter
}

fn initial_guess(grid: &GridMask, st: &Stencil, seed: InitialGuess) -> Vec<f64> {
    let [x0, y0, x1, y1] = grid.bounds;
    st.cells
        .iter()
        .map(|&idx| match seed {
            InitialGuess::Constant => 1.0,
            InitialGuess::BoxDistance => {
                let c = grid.center(idx % grid.nx, idx / grid.nx);
                ((c[0] - x0) * (x1 - c[0]) * (c[1] - y0) * (y1 - c[1])).max(f64::MIN_POSITIVE)
            }
        })
        .collect()
}

/// Scales `u` to h² Σ u^p = 1 and returns the scale applied.
fn normalize(u: &mut [f64], p: f64, h: f64) -> f64 {
    let integral = h * h * u.iter().map(|&v| pos_pow(v, p)).sum::<f64>();
    let s = integral.powf(-1.0 / p);
    u.iter_mut().for_each(|v| *v *= s);
    s
}

/// Minimizes the discrete quotient by a normalized gradient flow.
pub fn minimize_quotient(grid: &GridMask, p: f64, fp: &FlowParams) -> Result<ScalarField> {
    minimize_quotient_from(grid, p, fp, None)
}

/// As [`minimize_quotient`], starting from the given raster values when present.
pub fn minimize_quotient_from(grid: &GridMask, p: f64, fp: &FlowParams, start: Option<&[f64]>) -> Result<ScalarField> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent must exceed 1, got {p}")));
    }
    fp.validate()?;
    let st = Stencil::new(grid);
    if st.len() == 0 {
        return Err(Error::ResolutionTooCoarse { h: grid.h });
    }
    let h2 = grid.h * grid.h;
    let mut u = match start {
        Some(raster) => st.gather(raster).into_iter().map(|v| v.max(0.0)).collect(),
        None => initial_guess(grid, &st, fp.seed),
    };
    if u.iter().all(|&v| v <= 0.0) {
        return Err(Error::UndefinedQuotient);
    }
    normalize(&mut u, p, grid.h);
    let mut quotient = st.energy(&u);
    let mut history = vec![quotient];

    let dt_cap = match fp.stepping {
        // dt ≤ h²/g keeps I - dt(-Δ_h) positive definite (g = 8 for the plain 5-point stencil)
        Stepping::Explicit => h2 / st.gershgorin,
        Stepping::LinearlyImplicit => f64::INFINITY,
    };
    let mut dt = fp.dt.min(dt_cap);
    let mut candidate = vec![0.0; u.len()];
    let mut work = vec![0.0; u.len()];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < fp.max_iters {
        iterations += 1;
        let lambda = quotient;
        match fp.stepping {
            Stepping::Explicit => {
                st.apply(0.0, &u, &mut work);
                let r = dt / h2;
                for c in 0..u.len() {
                    candidate[c] = u[c] + r * (h2 * lambda * pos_pow(u[c], p - 1.0) - work[c]);
                }
            }
            Stepping::LinearlyImplicit => {
                let shift = if dt.is_finite() { h2 / dt } else { 0.0 };
                for c in 0..u.len() {
                    work[c] = shift * u[c] + h2 * lambda * pos_pow(u[c], p - 1.0);
                }
                candidate.copy_from_slice(&u);
                conjugate_gradient(&st, shift, &work, &mut candidate, 1e-12);
            }
        }
        candidate.iter_mut().for_each(|v| *v = v.max(0.0));
        if candidate.iter().all(|&v| v == 0.0) {
            dt *= 0.25;
            continue;
        }
        normalize(&mut candidate, p, grid.h);
        let q_new = st.energy(&candidate);
        if !q_new.is_finite() || q_new > quotient * (1.0 + 1e-13) {
            dt *= 0.25;
            if dt < 1e-30 {
                break;
            }
            continue;
        }
        std::mem::swap(&mut u, &mut candidate);
        quotient = q_new.min(quotient);
        history.push(quotient);
        let residual = stencil_residual(&st, &u, quotient, p, h2, &mut work);
        if residual < fp.residual_tol {
            converged = true;
            break;
        }
        dt = (dt * 4.0).min(dt_cap);
    }
    if !converged {
        return Err(Error::FlowStalled { iterations, quotient });
    }
    log::debug!("flow converged in {iterations} iterations, quotient {quotient}");
    Ok(ScalarField { values: st.scatter(&u, grid.inside.len()), grid: grid.clone(), p, history })
}

/// Rasterizes `d` and minimizes on a sequence of grids ending at spacing `h`,
/// each warm-started from the previous one.
pub fn solve_domain(d: &Domain, h: f64, p: f64, fp: &FlowParams) -> Result<ScalarField> {
    let fine = rasterize(d, h)?;
    let coarse_h = 2.0 * h;
    let start = match rasterize(d, coarse_h) {
        Ok(coarse) if coarse.interior_count() >= 256 => {
            let coarse_field = solve_domain(d, coarse_h, p, fp)?;
            Some(coarse_field.resample(&fine))
        }
        _ => None,
    };
    minimize_quotient_from(&fine, p, fp, start.as_deref())
}

impl ScalarField {
    pub fn from_values(grid: GridMask, values: Vec<f64>, p: f64) -> Result<Self> {
        if values.len() != grid.inside.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} raster values, got {}",
                grid.inside.len(),
                values.len()
            )));
        }
        let values = values.iter().zip(&grid.inside).map(|(&v, &inside)| if inside { v } else { 0.0 }).collect();
        Ok(Self { grid, values, p, history: Vec::new() })
    }

    /// Bilinear interpolation of this field at the interior centres of `target`.
    pub fn resample(&self, target: &GridMask) -> Vec<f64> {
        let g = &self.grid;
        let sample = |x: f64, y: f64| {
            let fx = (x - g.origin[0]) / g.h - 0.5;
            let fy = (y - g.origin[1]) / g.h - 0.5;
            let i0 = fx.floor().clamp(0.0, (g.nx - 2) as f64) as usize;
            let j0 = fy.floor().clamp(0.0, (g.ny - 2) as f64) as usize;
            let (tx, ty) = ((fx - i0 as f64).clamp(0.0, 1.0), (fy - j0 as f64).clamp(0.0, 1.0));
            let v = |i: usize, j: usize| self.values[g.index(i, j)];
            (1.0 - tx) * (1.0 - ty) * v(i0, j0)
                + tx * (1.0 - ty) * v(i0 + 1, j0)
                + (1.0 - tx) * ty * v(i0, j0 + 1)
                + tx * ty * v(i0 + 1, j0 + 1)
        };
        let mut out = vec![0.0; target.inside.len()];
        for j in 0..target.ny {
            for i in 0..target.nx {
                let idx = target.index(i, j);
                if target.inside[idx] {
                    let c = target.center(i, j);
                    // keep the start strictly positive inside
                    out[idx] = sample(c[0], c[1]).max(1e-12);
                }
            }
        }
        out
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// ∫ u^q dμ by the cell sum.
    pub fn integral_pow(&self, q: f64) -> f64 {
        let h2 = self.grid.h * self.grid.h;
        h2 * self
            .values
            .iter()
            .zip(&self.grid.inside)
            .filter(|(_, &inside)| inside)
            .map(|(&v, _)| pos_pow(v, q))
            .sum::<f64>()
    }

    /// ∫|∇u|² dμ of the discrete Dirichlet form.
    pub fn dirichlet_energy(&self) -> f64 {
        let st = Stencil::new(&self.grid);
        st.energy(&st.gather(&self.values))
    }

    /// λ = Q (∫u^p)^{(2-p)/p}, the multiplier of the discrete Euler–Lagrange equation.
    pub fn lambda(&self) -> Result<f64> {
        let q = quotient_value(self, self.p)?;
        Ok(q * self.integral_pow(self.p).powf((2.0 - self.p) / self.p))
    }

    /// Values at the interior cells, in raster order.
    pub fn interior_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().zip(&self.grid.inside).filter(|(_, &b)| b).map(|(&v, _)| v)
    }
}

/// Discrete Sobolev quotient ∫|∇u|² / (∫u^p)^{2/p}.
pub fn quotient_value(f: &ScalarField, p: f64) -> Result<f64> {
    let integral = f.integral_pow(p);
    if !(integral > 0.0) {
        return Err(Error::UndefinedQuotient);
    }
    Ok(f.dirichlet_energy() / integral.powf(2.0 / p))
}

/// |λ_eq − Q (∫φ^p)^{(2-p)/p}| / λ_eq, with Q the discrete quotient and
/// λ_eq = ∫(−Δ_h φ) / ∫φ^{p-1} the multiplier of the integrated equation (boundary flux
/// balance). The quotient side alone equals energy/∫φ^p for every field, so only
/// solutions make this vanish.
pub fn scaling_residual(f: &ScalarField) -> Result<f64> {
    let st = Stencil::new(&f.grid);
    let u = st.gather(&f.values);
    let mut lu = vec![0.0; u.len()];
    st.apply(0.0, &u, &mut lu);
    let h2 = f.grid.h * f.grid.h;
    let flux: f64 = lu.iter().sum::<f64>() / h2;
    let mass: f64 = u.iter().map(|&v| pos_pow(v, f.p - 1.0)).sum();
    if !(mass > 0.0) {
        return Err(Error::UndefinedQuotient);
    }
    let lambda_eq = flux / mass;
    Ok((lambda_eq - f.lambda()?).abs() / lambda_eq)
}

/// max |Δ_h φ + λ φ^{p-1}| over interior cells, normalized by λ (max φ)^{p-1}.
pub fn pde_residual(f: &ScalarField, lambda: f64, p: f64) -> f64 {
    let st = Stencil::new(&f.grid);
    let u = st.gather(&f.values);
    let mut work = vec![0.0; u.len()];
    stencil_residual(&st, &u, lambda, p, f.grid.h * f.grid.h, &mut work)
}

fn stencil_residual(st: &Stencil, u: &[f64], lambda: f64, p: f64, h2: f64, work: &mut [f64]) -> f64 {
    st.apply(0.0, u, work);
    let top = u.iter().copied().fold(0.0, f64::max);
    let scale = lambda * pos_pow(top, p - 1.0);
    u.iter().zip(work.iter()).map(|(&v, &l)| (-l / h2 + lambda * pos_pow(v, p - 1.0)).abs()).fold(0.0, f64::max) / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_square() -> Domain {
        Domain::rectangle(1.0, 1.0).unwrap()
    }

    #[test]
    fn square_raster_is_exact() {
        let m = rasterize(&unit_square(), 0.25).unwrap();
        assert_eq!(m.interior_count(), 16);
        assert_eq!(m.area(), 1.0);
        // every boundary link is half a cell long
        let walls: Vec<f64> = m.wall.iter().flatten().copied().filter(|&w| w > 0.0).collect();
        assert_eq!(walls.len(), 16);
        assert!(walls.iter().all(|&w| w == 2.0));
    }

    #[test]
    fn curved_raster_areas() {
        // cell-count oracle: the number of cell centres inside the curve, counted directly
        let h = 1.0 / 64.0;
        let count = |inside: &dyn Fn(f64, f64) -> bool, half_w: f64, half_h: f64| {
            let (nx, ny) = ((2.0 * half_w / h).round() as i64, (2.0 * half_h / h).round() as i64);
            let mut c = 0;
            for i in 0..nx {
                for j in 0..ny {
                    let (x, y) = (-half_w + (i as f64 + 0.5) * h, -half_h + (j as f64 + 0.5) * h);
                    if inside(x, y) {
                        c += 1;
                    }
                }
            }
            c as f64 * h * h
        };
        let disk = rasterize(&Domain::ball(2, 1.0).unwrap(), h).unwrap();
        let oracle = count(&|x, y| x * x + y * y < 1.0, 1.0, 1.0);
        assert_eq!(disk.area(), oracle);
        assert!((disk.area() - PI).abs() / PI < 0.05);
        let ell = rasterize(&Domain::ellipse(2.0, 1.0).unwrap(), h).unwrap();
        let oracle = count(&|x, y| (x / 2.0).powi(2) + y * y < 1.0, 2.0, 1.0);
        assert_eq!(ell.area(), oracle);
        assert!((ell.area() - 2.0 * PI).abs() / (2.0 * PI) < 0.05);
    }

    #[test]
    fn coarse_resolution_rejected() {
        let tri = Domain::polygon(vec![[0.0, 0.0], [0.01, 0.0], [0.0, 0.01]]).unwrap();
        assert!(matches!(rasterize(&tri, 1.0), Err(Error::ResolutionTooCoarse { .. })));
    }

    fn sine_field(h: f64) -> (ScalarField, f64) {
        let grid = rasterize(&unit_square(), h).unwrap();
        let mut values = vec![0.0; grid.inside.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let c = grid.center(i, j);
                values[grid.index(i, j)] = (PI * (c[0] + 0.5)).sin() * (PI * (c[1] + 0.5)).sin();
            }
        }
        let eigen = 8.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        (ScalarField::from_values(grid, values, 2.0).unwrap(), eigen)
    }

    #[test]
    fn discrete_eigenvector_has_zero_residual() {
        let (f, eigen) = sine_field(1.0 / 32.0);
        assert!(pde_residual(&f, eigen, 2.0) <= 1e-10);
        assert!(scaling_residual(&f).unwrap() <= 1e-12);
        assert!((quotient_value(&f, 2.0).unwrap() - eigen).abs() / eigen < 1e-12);
    }

    #[test]
    fn random_field_is_not_a_solution() {
        let grid = rasterize(&unit_square(), 1.0 / 16.0).unwrap();
        let mut state = 12345u64;
        let values = (0..grid.inside.len())
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                0.1 + (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        let f = ScalarField::from_values(grid, values, 2.0).unwrap();
        let lambda = f.lambda().unwrap();
        assert!(pde_residual(&f, lambda, 2.0) > 0.1);
        assert!(scaling_residual(&f).unwrap() > 1e-3);
    }

    #[test]
    fn tent_quotient_by_hand() {
        // unit square, h = 1/3: 3x3 interior cells, every boundary link has h/d = 2.
        // u = [[1,2,1],[2,4,2],[1,2,1]]
        // interior links: 12 links each with |Δu| = 1 or 2: horizontal rows give
        //   (1,2),(2,1) → 1+1 ; (2,4),(4,2) → 4+4 ; (1,2),(2,1) → 1+1  = 12, same vertically → 24
        // boundary links: corners 1 (two links each), edges 2 (one link each):
        //   2 * (4 corners * 2 * 1² + 4 edges * 1 * 2²) = 2 * (8 + 16) = 48
        // energy 72; ∫u² = h² (4·1 + 4·4 + 16) = 36/9 = 4 → quotient 72/4 = 18
        let grid = rasterize(&unit_square(), 1.0 / 3.0).unwrap();
        assert_eq!(grid.interior_count(), 9);
        let tent = [1.0, 2.0, 1.0, 2.0, 4.0, 2.0, 1.0, 2.0, 1.0];
        let mut values = vec![0.0; grid.inside.len()];
        let mut k = 0;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if grid.inside[grid.index(i, j)] {
                    values[grid.index(i, j)] = tent[k];
                    k += 1;
                }
            }
        }
        let f = ScalarField::from_values(grid, values, 2.0).unwrap();
        assert!((quotient_value(&f, 2.0).unwrap() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn quotient_is_homogeneous() {
        let (f, _) = sine_field(1.0 / 16.0);
        for p in [1.5, 2.0, 3.0] {
            let base = quotient_value(&f, p).unwrap();
            for c in [0.5, 3.0] {
                let mut g = f.clone();
                g.values.iter_mut().for_each(|v| *v *= c);
                let scaled = quotient_value(&g, p).unwrap();
                assert!((scaled - base).abs() / base < 1e-12);
            }
        }
    }

    #[test]
    fn zero_field_has_no_quotient() {
        let grid = rasterize(&unit_square(), 0.25).unwrap();
        let f = ScalarField::from_values(grid.clone(), vec![0.0; grid.inside.len()], 2.0).unwrap();
        assert_eq!(quotient_value(&f, 2.0), Err(Error::UndefinedQuotient));
    }

    #[test]
    fn square_flow_matches_discrete_eigenvalue() {
        let h = 1.0 / 32.0;
        let f = solve_domain(&unit_square(), h, 2.0, &FlowParams::default()).unwrap();
        let q = quotient_value(&f, 2.0).unwrap();
        let eigen = 8.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((q - eigen).abs() / eigen < 1e-9, "{q} vs {eigen}");
        assert!((q - f.history.last().unwrap()).abs() / q < 1e-13);
        assert!(f.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(f.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn explicit_and_implicit_agree() {
        let h = 1.0 / 16.0;
        let grid = rasterize(&Domain::ellipse(1.0, 0.6).unwrap(), h).unwrap();
        let implicit = minimize_quotient(&grid, 3.0, &FlowParams::default()).unwrap();
        let explicit = minimize_quotient(&grid, 3.0, &FlowParams::explicit()).unwrap();
        let (qi, qe) = (quotient_value(&implicit, 3.0).unwrap(), quotient_value(&explicit, 3.0).unwrap());
        assert!((qi - qe).abs() / qi < 1e-8, "{qi} vs {qe}");
        assert!(explicit.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn stall_reported() {
        let grid = rasterize(&unit_square(), 1.0 / 16.0).unwrap();
        let fp = FlowParams { max_iters: 2, ..FlowParams::explicit() };
        assert!(matches!(minimize_quotient(&grid, 2.0, &fp), Err(Error::FlowStalled { iterations: 2, .. })));
    }
}
