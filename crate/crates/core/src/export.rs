//! Deterministic text output: JSON floats with 17 significant digits, CSV with 10.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::field::ScalarField;
use crate::lambda_star::LambdaStarResult;
use crate::levels::LevelSetData;
use crate::radial::RadialProfile;
use crate::report::InequalityReport;

pub const JSON_DIGITS: usize = 17;
pub const CSV_DIGITS: usize = 10;

/// `x` rounded to `digits` significant digits, in plain notation for moderate
/// exponents and scientific notation otherwise. Trailing zeros are dropped.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0.0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits_only: String = mantissa.chars().filter(|c| *c != '.').collect();
    let trimmed = digits_only.trim_end_matches('0');
    let trimmed = if trimmed.is_empty() { "0" } else { trimmed };
    if (-4..digits as i32).contains(&exp) {
        let point = exp + 1;
        let body = if point <= 0 {
            format!("0.{}{}", "0".repeat((-point) as usize), trimmed)
        } else if point as usize >= trimmed.len() {
            format!("{}{}.0", trimmed, "0".repeat(point as usize - trimmed.len()))
        } else {
            format!("{}.{}", &trimmed[..point as usize], &trimmed[point as usize..])
        };
        format!("{sign}{body}")
    } else {
        let rest = if trimmed.len() > 1 { format!(".{}", &trimmed[1..]) } else { String::new() };
        format!("{sign}{}{rest}e{exp}", &trimmed[..1])
    }
}

/// Pretty JSON with every float written by [`fmt_sig`] at 17 digits.
struct FloatFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for FloatFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_sig(value, JSON_DIGITS).as_bytes())
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FloatFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

fn csv_line(fields: &[f64]) -> String {
    let cells: Vec<String> = fields.iter().map(|&x| fmt_sig(x, CSV_DIGITS)).collect();
    cells.join(",") + "\n"
}

/// Columns r, phi, dphi, H with H(r) = ∫_{B_r} φ^{p-1}.
pub fn profile_csv(prof: &RadialProfile) -> String {
    let mut out = String::from("r,phi,dphi,H\n");
    for k in 0..prof.r.len() {
        out += &csv_line(&[prof.r[k], prof.phi[k], prof.dphi[k], prof.ball_integral_pm1[k]]);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileHeader {
    pub n: usize,
    pub p: f64,
    pub rho_m: f64,
    pub lambda: f64,
    pub c_p: f64,
    pub moments: crate::radial::Moments,
    pub unit_zero: f64,
    pub samples: usize,
}

pub fn profile_header(prof: &RadialProfile) -> ProfileHeader {
    ProfileHeader {
        n: prof.n,
        p: prof.p,
        rho_m: prof.rho_m,
        lambda: prof.lambda,
        c_p: prof.c_p,
        moments: prof.moments,
        unit_zero: prof.unit_zero,
        samples: prof.r.len(),
    }
}

/// Columns t, V, H, rho, perim (perim empty when unavailable), in ascending t.
pub fn levels_csv(ls: &LevelSetData) -> String {
    let omega = crate::geometry::unit_ball_volume(ls.n as i64).expect("n >= 2");
    let mut out = String::from("t,V,H,rho,perim\n");
    for k in (0..ls.len()).rev() {
        let rho = (ls.v[k] / omega).powf(1.0 / ls.n as f64);
        let mut line = csv_line(&[ls.t[k], ls.v[k], ls.h[k], rho]);
        line.pop();
        match &ls.perim {
            Some(p) => line += &format!(",{}\n", fmt_sig(p[k], CSV_DIGITS)),
            None => line += ",\n",
        }
        out += &line;
    }
    out
}

/// Interior cells as i, j, x, y, value.
pub fn field_csv(f: &ScalarField) -> String {
    let g = &f.grid;
    let mut out = String::from("i,j,x,y,value\n");
    for j in 0..g.ny {
        for i in 0..g.nx {
            let idx = g.index(i, j);
            if g.inside[idx] {
                let c = g.center(i, j);
                out += &format!("{i},{j},{}", csv_line(&[c[0], c[1], f.values[idx]]));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldHeader {
    pub domain: String,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub origin: [f64; 2],
    pub bounds: [f64; 4],
    pub interior_cells: usize,
    pub p: f64,
    pub quotient: f64,
    pub lambda: f64,
    pub iterations: usize,
}

pub fn field_header(f: &ScalarField) -> crate::Result<FieldHeader> {
    Ok(FieldHeader {
        domain: f.grid.domain_id.clone(),
        h: f.grid.h,
        nx: f.grid.nx,
        ny: f.grid.ny,
        origin: f.grid.origin,
        bounds: f.grid.bounds,
        interior_cells: f.grid.interior_count(),
        p: f.p,
        quotient: crate::field::quotient_value(f, f.p)?,
        lambda: f.lambda()?,
        iterations: f.history.len().saturating_sub(1),
    })
}

/// Scalar summary of a Λ* solve without the sampled minimizer.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaStarSummary {
    pub n: usize,
    pub p: f64,
    pub rho_m: f64,
    pub grid_points: usize,
    pub lambda_star: f64,
    pub multiplier: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub el_residual: f64,
    pub iterations: usize,
}

pub fn lambda_star_summary(res: &LambdaStarResult) -> LambdaStarSummary {
    LambdaStarSummary {
        n: res.n,
        p: res.p,
        rho_m: res.rho_m,
        grid_points: res.f.len(),
        lambda_star: res.lambda_star,
        multiplier: res.multiplier,
        numerator: res.numerator,
        denominator: res.denominator,
        el_residual: res.el_residual,
        iterations: res.iterations,
    }
}

/// Columns of one sweep row; `status` and `error` are filled by the caller.
pub const REPORT_COLUMNS: &[&str] = &[
    "domain",
    "n",
    "p",
    "volume",
    "c_p",
    "c_p_ball",
    "lambda",
    "integral_pm1",
    "integral_p",
    "i_v",
    "i_rho",
    "lambda_star",
    "lhs",
    "rhs_theorem",
    "rhs_proof",
    "relative_deficit_theorem",
    "relative_deficit_proof",
    "holder_margin",
    "margin_volume_form",
    "margin_radius_corollary",
    "margin_radius_form",
    "margin_integrated_ode",
    "margin_lambda_star_bound",
    "is_ball",
];

pub fn report_row(r: &InequalityReport) -> Vec<String> {
    let i = &r.inputs;
    let mut row = vec![i.domain_id.clone(), i.n.to_string()];
    let scalars = [
        i.p,
        i.volume,
        i.c_p,
        i.c_p_ball,
        i.lambda,
        i.integral_pm1,
        i.integral_p,
        i.i_v,
        i.i_rho,
        i.lambda_star,
        r.lhs,
        r.rhs_theorem,
        r.rhs_proof,
        r.relative_deficit_theorem,
        r.relative_deficit_proof,
        r.holder_margin,
    ];
    row.extend(scalars.iter().map(|&x| fmt_sig(x, CSV_DIGITS)));
    row.extend(r.intermediate.all().iter().map(|(_, m)| fmt_sig(m.margin, CSV_DIGITS)));
    row.push(r.is_ball.to_string());
    row
}
