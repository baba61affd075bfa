//! The reverse-Hölder inequality
//!
//!   (∫φ^{p-1})² ≥ |D|^{(n-2)/n} (∫φ^p)^{2(p-1)/p} [ 2n²ω_n^{2/n}/(p C_p(D)) − (n-2) K / C_p(D*) ]
//!
//! and the integral inequalities it is assembled from. Two values of K are
//! in circulation: n ω_n^{2/n + (p²-p+2)/(p(p-1))} (as stated with the
//! theorem) and n ω_n^{2/n} (what the final assembly of the proof produces).
//! Both are reported; they agree for n = 2.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, volume_radius};
use crate::lambda_star::LambdaStarResult;
use crate::levels::{h_square_integrals, rho_parameterization, LevelSetData, Source};
use crate::radial::sobolev_constant_ball_radius;

/// The scalar inputs of the inequality, stored unnormalized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportInputs {
    pub n: usize,
    pub p: f64,
    pub domain_id: String,
    /// |D|
    pub volume: f64,
    /// Measure of the support the integrals run over (the cell mask on grids).
    pub support_volume: f64,
    /// Volume radius of D.
    pub rho_m: f64,
    /// C_p(D)
    pub c_p: f64,
    /// C_p(D*)
    pub c_p_ball: f64,
    pub lambda: f64,
    /// ∫φ^{p-1}
    pub integral_pm1: f64,
    /// ∫φ^p
    pub integral_p: f64,
    /// ∫ V^{2(1-n)/n} H² dV
    pub i_v: f64,
    /// ∫ ρ^{1-n} H² dρ
    pub i_rho: f64,
    /// ∫ ρ^{(1-n)/(p-1)} (dH/dρ)^{p/(p-1)} dρ
    pub h_numerator: f64,
    pub lambda_star: f64,
    pub is_ball: bool,
}

/// One side-by-side comparison; `margin` is signed and normalized by `lhs`,
/// and is ≥ 0 when the inequality holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margin {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl Margin {
    /// For lhs ≥ rhs.
    fn at_least(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, margin: (lhs - rhs) / lhs }
    }

    /// For lhs ≤ rhs.
    fn at_most(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, margin: (rhs - lhs) / lhs }
    }
}

/// Margins of the intermediate inequalities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Intermediate {
    /// (∫φ^{p-1})² against the V-form bound with I_V.
    pub volume_form: Margin,
    /// nω_n (∫φ^p)^{2(p-1)/p} ≤ C_p(D) I_ρ
    pub radius_corollary: Margin,
    /// (∫φ^{p-1})² against the ρ-form bound with I_ρ.
    pub radius_form: Margin,
    /// ∫ρ^{(1-n)/(p-1)} (dH/dρ)^{p/(p-1)} ≤ λ (nω_n)^{(2-p)/(p-1)} I_ρ
    pub integrated_ode: Margin,
    /// The same bound after Λ*: ∫ρ^{1-n}H² ≤ (nω_n)^{2/p} (∫φ^p)^{2(p-1)/p} / Λ*.
    pub lambda_star_bound: Margin,
}

impl Intermediate {
    pub fn all(&self) -> [(&'static str, Margin); 5] {
        [
            ("volume_form", self.volume_form),
            ("radius_corollary", self.radius_corollary),
            ("radius_form", self.radius_form),
            ("integrated_ode", self.integrated_ode),
            ("lambda_star_bound", self.lambda_star_bound),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub inputs: ReportInputs,
    /// (∫φ^{p-1})²
    pub lhs: f64,
    pub rhs_theorem: f64,
    pub rhs_proof: f64,
    /// The proof's form with Λ* itself in place of (nω_n)^{(2-p)/p} C_p(D*).
    pub rhs_lambda_star: f64,
    pub deficit_theorem: f64,
    pub deficit_proof: f64,
    pub deficit_lambda_star: f64,
    pub relative_deficit_theorem: f64,
    pub relative_deficit_proof: f64,
    pub relative_deficit_lambda_star: f64,
    /// |D|^{1/p} (∫φ^p)^{(p-1)/p}
    pub holder_ub: f64,
    pub holder_margin: f64,
    pub intermediate: Intermediate,
    pub is_ball: bool,
}

impl InequalityReport {
    /// Whether the inequality and every intermediate margin hold up to `slack` (relative).
    pub fn holds(&self, slack: f64) -> bool {
        self.relative_deficit_proof >= -slack
            && self.holder_margin >= 0.0
            && self.intermediate.all().iter().all(|(_, m)| m.margin >= -slack)
    }

    /// Whether a ball attains equality in the proof-form inequality to `tol`.
    pub fn ball_equality(&self, tol: f64) -> bool {
        self.relative_deficit_proof.abs() <= tol
    }
}

/// Hölder's upper bound |D|^{1/p} (∫φ^p)^{(p-1)/p} − ∫φ^{p-1}; never negative.
pub fn holder_check(integral_pm1: f64, integral_p: f64, volume: f64, p: f64) -> f64 {
    volume.powf(1.0 / p) * integral_p.powf((p - 1.0) / p) - integral_pm1
}

/// Gathers the inputs from a solved source, its level sets and the Λ* solve on D*.
pub fn collect_inputs(source: Source<'_>, ls: &LevelSetData, lsr: &LambdaStarResult) -> Result<ReportInputs> {
    let (n, p) = (source.n(), source.p());
    if ls.n != n || ls.p != p || lsr.n != n || lsr.p != p {
        return Err(Error::InconsistentInputs(format!(
            "(n, p): source ({n}, {p}), level sets ({}, {}), Λ* ({}, {})",
            ls.n, ls.p, lsr.n, lsr.p
        )));
    }
    let volume = source.volume();
    let rho_m = volume_radius(volume, n)?;
    if (lsr.rho_m - rho_m).abs() > 1e-9 * rho_m {
        return Err(Error::InconsistentInputs(format!(
            "Λ* solved on radius {} but the volume radius of D is {rho_m}",
            lsr.rho_m
        )));
    }
    let hs = h_square_integrals(ls);
    let integral_p = source.integral_p();
    let rp = rho_parameterization(ls);
    let h_numerator = h_numerator(n, p, &rp.rho, &rp.dh);
    Ok(ReportInputs {
        n,
        p,
        domain_id: source.domain_id(),
        volume,
        support_volume: source.support_volume(),
        rho_m,
        c_p: source.c_p()?,
        c_p_ball: sobolev_constant_ball_radius(n, p, rho_m)?,
        lambda: source.lambda()?,
        integral_pm1: source.integral_pm1(),
        integral_p,
        i_v: hs.i_v,
        i_rho: hs.i_rho,
        h_numerator,
        lambda_star: lsr.lambda_star,
        is_ball: source.is_ball(),
    })
}

fn h_numerator(n: usize, p: f64, rho: &[f64], dh: &[f64]) -> f64 {
    let a = (1.0 - n as f64) / (p - 1.0);
    let q = p / (p - 1.0);
    let g: Vec<f64> =
        rho.iter().zip(dh).map(|(&r, &d)| if r > 0.0 && d > 0.0 { r.powf(a) * d.powf(q) } else { 0.0 }).collect();
    rho.windows(2).zip(g.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

pub fn evaluate_main_inequality(
    source: Source<'_>,
    ls: &LevelSetData,
    lsr: &LambdaStarResult,
) -> Result<InequalityReport> {
    Ok(assemble(collect_inputs(source, ls, lsr)?))
}

/// Evaluates every side of the inequality from its scalar inputs.
pub fn assemble(inputs: ReportInputs) -> InequalityReport {
    let ReportInputs { n, p, volume, c_p, c_p_ball, integral_pm1, integral_p, lambda_star, .. } = inputs;
    let nf = n as f64;
    let omega = unit_ball_volume(n as i64).expect("n >= 2");
    let surface = nf * omega;
    let volume_factor = volume.powf((nf - 2.0) / nf);
    let power = integral_p.powf(2.0 * (p - 1.0) / p);
    let first = 2.0 * nf * nf * omega.powf(2.0 / nf) / (p * c_p);
    let theorem_exponent = 2.0 / nf + (p * p - p + 2.0) / (p * (p - 1.0));
    let second_theorem = (nf - 2.0) * nf * omega.powf(theorem_exponent) / c_p_ball;
    let second_proof = (nf - 2.0) * nf * omega.powf(2.0 / nf) / c_p_ball;
    let second_lambda_star = (nf - 2.0) * omega.powf((2.0 - nf) / nf) * surface.powf(2.0 / p) / lambda_star;

    let lhs = integral_pm1 * integral_pm1;
    let rhs = |second: f64| volume_factor * power * (first - second);
    let (rhs_theorem, rhs_proof, rhs_lambda_star) = (rhs(second_theorem), rhs(second_proof), rhs(second_lambda_star));

    let holder_margin = holder_check(integral_pm1, integral_p, inputs.support_volume, p);
    let holder_ub = holder_margin + integral_pm1;

    let intermediate = Intermediate {
        volume_form: Margin::at_least(lhs, volume_factor * (first * power - (nf - 2.0) / nf * inputs.i_v)),
        radius_corollary: Margin::at_most(surface * power, c_p * inputs.i_rho),
        radius_form: Margin::at_least(
            lhs,
            volume_factor * (first * power - (nf - 2.0) * omega.powf((2.0 - nf) / nf) * inputs.i_rho),
        ),
        integrated_ode: Margin::at_most(
            inputs.h_numerator,
            inputs.lambda * surface.powf((2.0 - p) / (p - 1.0)) * inputs.i_rho,
        ),
        lambda_star_bound: Margin::at_most(inputs.i_rho, surface.powf(2.0 / p) * power / lambda_star),
    };

    InequalityReport {
        lhs,
        rhs_theorem,
        rhs_proof,
        rhs_lambda_star,
        deficit_theorem: lhs - rhs_theorem,
        deficit_proof: lhs - rhs_proof,
        deficit_lambda_star: lhs - rhs_lambda_star,
        relative_deficit_theorem: (lhs - rhs_theorem) / lhs,
        relative_deficit_proof: (lhs - rhs_proof) / lhs,
        relative_deficit_lambda_star: (lhs - rhs_lambda_star) / lhs,
        holder_ub,
        holder_margin,
        intermediate,
        is_ball: inputs.is_ball,
        inputs,
    }
}

/// The inputs of φ replaced by cφ: every integral picks up its homogeneity degree.
pub fn rescale_inputs(inputs: &ReportInputs, c: f64) -> ReportInputs {
    let p = inputs.p;
    ReportInputs {
        lambda: inputs.lambda * c.powf(2.0 - p),
        integral_pm1: inputs.integral_pm1 * c.powf(p - 1.0),
        integral_p: inputs.integral_p * c.powf(p),
        i_v: inputs.i_v * c.powf(2.0 * (p - 1.0)),
        i_rho: inputs.i_rho * c.powf(2.0 * (p - 1.0)),
        h_numerator: inputs.h_numerator * c.powf(p),
        ..inputs.clone()
    }
}
