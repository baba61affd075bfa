//! Solve, measure and assemble one case end to end.

use serde::Serialize;
use sobex_core::export::{self, FieldHeader, LambdaStarSummary, ProfileHeader};
use sobex_core::field::{self, FlowParams, ScalarField};
use sobex_core::lambda_star::{self, LambdaStarResult, Sandwich};
use sobex_core::levels::{self, LevelSetData, Source};
use sobex_core::radial::{self, RadialOptions, RadialProfile};
use sobex_core::report::{self, InequalityReport};
use sobex_core::{volume_radius, Domain, Exponents, Result};

#[derive(Debug, Clone)]
pub struct RadialSettings {
    pub samples: usize,
    pub levels: usize,
    pub lambda_points: usize,
}

#[derive(Debug, Clone)]
pub struct GridSettings {
    pub h: f64,
    pub levels: usize,
    pub lambda_points: usize,
    pub flow: FlowParams,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub pde_residual: f64,
    pub dhdv: f64,
    pub change_of_variables: f64,
    pub h_square_consistency: f64,
    pub min_isoperimetric_ratio: Option<f64>,
    /// |λ − C_p (∫φ^p)^{(2-p)/p}| / λ
    pub scaling_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cauchy_schwarz_gap: Option<f64>,
}

pub struct RadialRun {
    pub profile: RadialProfile,
    pub levels: LevelSetData,
    pub lambda_star: LambdaStarResult,
    pub report: InequalityReport,
    pub diagnostics: Diagnostics,
}

pub struct GridRun {
    pub field: ScalarField,
    pub levels: LevelSetData,
    pub lambda_star: LambdaStarResult,
    pub report: InequalityReport,
    pub diagnostics: Diagnostics,
}

fn level_diagnostics(ls: &LevelSetData, integral_p: f64) -> Result<(f64, f64, f64, Option<f64>)> {
    let iso = if ls.perim.is_some() { Some(levels::isoperimetric_check(ls)?) } else { None };
    Ok((
        levels::dhdv_check(ls),
        levels::change_var3_identity(ls, integral_p),
        levels::h_square_integrals(ls).consistency,
        iso,
    ))
}

pub fn run_ball(n: usize, p: f64, rho_m: f64, s: &RadialSettings) -> Result<RadialRun> {
    let e = Exponents::new(n, p)?;
    let opts = RadialOptions { samples: s.samples, ..Default::default() };
    let profile = radial::solve_radial_profile_with(e, rho_m, &opts)?;
    let ls = levels::build_levelsets(Source::Radial(&profile), s.levels)?;
    let lsr = lambda_star::solve_lambda_star(n, p, rho_m, s.lambda_points)?;
    let report = report::evaluate_main_inequality(Source::Radial(&profile), &ls, &lsr)?;
    let (dhdv, cv, hs, iso) = level_diagnostics(&ls, profile.moments.p)?;
    let diagnostics = Diagnostics {
        pde_residual: profile.pde_residual(),
        dhdv,
        change_of_variables: cv,
        h_square_consistency: hs,
        min_isoperimetric_ratio: iso,
        scaling_residual: profile.scaling_residual(),
        cauchy_schwarz_gap: Some(levels::cauchy_schwarz_gap(&profile, &ls)),
    };
    Ok(RadialRun { profile, levels: ls, lambda_star: lsr, report, diagnostics })
}

pub fn run_grid(d: &Domain, p: f64, s: &GridSettings) -> Result<GridRun> {
    let f = field::solve_domain(d, s.h, p, &s.flow)?;
    let ls = levels::build_levelsets(Source::Grid(&f), s.levels)?;
    let rho_m = volume_radius(d.volume(), d.n)?;
    let lsr = lambda_star::solve_lambda_star(d.n, p, rho_m, s.lambda_points)?;
    let report = report::evaluate_main_inequality(Source::Grid(&f), &ls, &lsr)?;
    let (dhdv, cv, hs, iso) = level_diagnostics(&ls, f.integral_pow(p))?;
    let diagnostics = Diagnostics {
        pde_residual: field::pde_residual(&f, f.lambda()?, p),
        dhdv,
        change_of_variables: cv,
        h_square_consistency: hs,
        min_isoperimetric_ratio: iso,
        scaling_residual: field::scaling_residual(&f)?,
        cauchy_schwarz_gap: None,
    };
    Ok(GridRun { field: f, levels: ls, lambda_star: lsr, report, diagnostics })
}

#[derive(Serialize)]
pub struct BallSummary<'a> {
    pub pass: bool,
    pub tolerance: f64,
    pub profile: ProfileHeader,
    pub lambda_star: LambdaStarSummary,
    pub diagnostics: &'a Diagnostics,
    pub report: &'a InequalityReport,
}

#[derive(Serialize)]
pub struct DomainSummary<'a> {
    pub pass: bool,
    pub slack: f64,
    pub field: FieldHeader,
    pub lambda_star: LambdaStarSummary,
    pub diagnostics: &'a Diagnostics,
    pub report: &'a InequalityReport,
}

#[derive(Serialize)]
pub struct LambdaStarReport {
    pub pass: bool,
    pub tolerance: f64,
    pub result: LambdaStarSummary,
    pub multiplier_scaling: f64,
    pub psi_max_deviation: f64,
    pub sandwich: Sandwich,
}

pub fn ball_summary(run: &RadialRun, tol: f64) -> BallSummary<'_> {
    BallSummary {
        pass: run.report.ball_equality(tol),
        tolerance: tol,
        profile: export::profile_header(&run.profile),
        lambda_star: export::lambda_star_summary(&run.lambda_star),
        diagnostics: &run.diagnostics,
        report: &run.report,
    }
}

pub fn domain_summary(run: &GridRun, slack: f64) -> Result<DomainSummary<'_>> {
    Ok(DomainSummary {
        pass: run.report.holds(slack),
        slack,
        field: export::field_header(&run.field)?,
        lambda_star: export::lambda_star_summary(&run.lambda_star),
        diagnostics: &run.diagnostics,
        report: &run.report,
    })
}

pub fn lambda_star_report(
    n: usize,
    p: f64,
    rho_m: f64,
    points: usize,
    tol: f64,
) -> Result<(LambdaStarReport, LambdaStarResult)> {
    let res = lambda_star::solve_lambda_star(n, p, rho_m, points)?;
    let sandwich = lambda_star::sandwich_check_with(n, p, rho_m, points)?;
    let pass = sandwich.upper_gap <= tol && sandwich.lower_gap <= tol;
    let report = LambdaStarReport {
        pass,
        tolerance: tol,
        result: export::lambda_star_summary(&res),
        multiplier_scaling: lambda_star::multiplier_scaling_check(&res),
        psi_max_deviation: lambda_star::psi_transform(&res).max_deviation,
        sandwich,
    };
    Ok((report, res))
}
