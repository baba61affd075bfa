//! Domains, dimensional constants and the admissible exponent range.
//!
//! All shapes are centred at the origin except polygons, which keep the
//! coordinates they were given (reoriented counter-clockwise).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Γ(m/2) for a positive integer m, by the half-integer recurrence.
pub fn gamma_half_integer(m: u32) -> f64 {
    assert!(m >= 1, "gamma_half_integer needs m >= 1");
    // Γ(1/2) = √π, Γ(1) = 1, Γ(x + 1) = x Γ(x)
    let (mut value, mut x) = if m.is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while 2.0 * x < m as f64 {
        value *= x;
        x += 1.0;
    }
    value
}

/// Volume ω_n of the unit ball in R^n.
pub fn unit_ball_volume(n: i64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidDimension(n));
    }
    let n = n as u32;
    Ok(PI.powf(n as f64 / 2.0) / gamma_half_integer(n + 2))
}

/// Radius of the ball in R^n with the given volume.
pub fn volume_radius(volume: f64, n: usize) -> Result<f64> {
    if !(volume > 0.0) || !volume.is_finite() {
        return Err(Error::InvalidMeasure(volume));
    }
    let omega = unit_ball_volume(n as i64)?;
    Ok((volume / omega).powf(1.0 / n as f64))
}

/// Shape parameters, tagged by `kind` in the JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum Shape {
    Ball { radius: f64 },
    Rectangle { width: f64, height: f64 },
    Ellipse { a: f64, b: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

/// A bounded domain in R^n.
///
/// JSON: `{"kind": "ellipse", "n": 2, "params": {"a": 2.0, "b": 1.0}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub n: usize,
    #[serde(flatten)]
    pub shape: Shape,
}

impl Domain {
    pub fn ball(n: usize, radius: f64) -> Result<Self> {
        Self::new(n, Shape::Ball { radius })
    }

    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        Self::new(2, Shape::Rectangle { width, height })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        Self::new(2, Shape::Ellipse { a, b })
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(2, Shape::Polygon { vertices })
    }

    /// Regular polygon with `sides` vertices inscribed in the circle of radius `radius`.
    pub fn regular_polygon(sides: usize, radius: f64) -> Result<Self> {
        let vertices = (0..sides)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / sides as f64;
                [radius * theta.cos(), radius * theta.sin()]
            })
            .collect();
        Self::polygon(vertices)
    }

    /// Validates the parameters and normalizes polygon orientation.
    pub fn new(n: usize, shape: Shape) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n as i64));
        }
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidGeometry(format!("{name} must be positive, got {v}")))
            }
        };
        let shape = match shape {
            Shape::Ball { radius } => {
                positive("radius", radius)?;
                Shape::Ball { radius }
            }
            other if n != 2 => {
                return Err(Error::InvalidGeometry(format!(
                    "{} domains are only supported for n = 2 (got n = {n})",
                    kind_name(&other)
                )))
            }
            Shape::Rectangle { width, height } => {
                positive("width", width)?;
                positive("height", height)?;
                Shape::Rectangle { width, height }
            }
            Shape::Ellipse { a, b } => {
                positive("a", a)?;
                positive("b", b)?;
                Shape::Ellipse { a, b }
            }
            Shape::Polygon { vertices } => Shape::Polygon { vertices: normalize_polygon(vertices)? },
        };
        Ok(Self { n, shape })
    }

    /// Parses and validates the JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Domain =
            serde_json::from_str(text).map_err(|e| Error::InvalidGeometry(format!("cannot parse domain: {e}")))?;
        Self::new(raw.n, raw.shape)
    }

    pub fn kind(&self) -> &'static str {
        kind_name(&self.shape)
    }

    /// Short label used in reports and sweep tables.
    pub fn id(&self) -> String {
        match &self.shape {
            Shape::Ball { radius } => format!("ball{}_r{}", self.n, radius),
            Shape::Rectangle { width, height } => format!("rectangle_{width}x{height}"),
            Shape::Ellipse { a, b } => format!("ellipse_{a}x{b}"),
            Shape::Polygon { vertices } => format!("polygon_{}", vertices.len()),
        }
    }

    pub fn is_ball(&self) -> bool {
        matches!(self.shape, Shape::Ball { .. })
    }

    /// Exact measure |D| (shoelace formula for polygons).
    pub fn volume(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => unit_ball_volume(self.n as i64).expect("n >= 2") * radius.powi(self.n as i32),
            Shape::Rectangle { width, height } => width * height,
            Shape::Ellipse { a, b } => PI * a * b,
            Shape::Polygon { vertices } => signed_area(vertices),
        }
    }

    /// Axis-aligned bounding box `[xmin, ymin, xmax, ymax]` of a planar domain.
    pub fn bounding_box(&self) -> Result<[f64; 4]> {
        self.require_planar()?;
        Ok(match &self.shape {
            Shape::Ball { radius } => [-radius, -radius, *radius, *radius],
            Shape::Rectangle { width, height } => [-width / 2.0, -height / 2.0, width / 2.0, height / 2.0],
            Shape::Ellipse { a, b } => [-a, -b, *a, *b],
            Shape::Polygon { vertices } => {
                let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
                for v in vertices {
                    bb[0] = bb[0].min(v[0]);
                    bb[1] = bb[1].min(v[1]);
                    bb[2] = bb[2].max(v[0]);
                    bb[3] = bb[3].max(v[1]);
                }
                bb
            }
        })
    }

    /// Strict interior test for planar domains.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match &self.shape {
            Shape::Ball { radius } => x * x + y * y < radius * radius,
            Shape::Rectangle { width, height } => x.abs() < width / 2.0 && y.abs() < height / 2.0,
            Shape::Ellipse { a, b } => (x / a).powi(2) + (y / b).powi(2) < 1.0,
            Shape::Polygon { vertices } => polygon_contains(vertices, x, y),
        }
    }

    /// Distance from an interior point to the boundary along the axis direction
    /// `dir` (one of (±1, 0), (0, ±1)).
    pub fn boundary_distance(&self, x: f64, y: f64, dir: [f64; 2]) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => ellipse_exit(x, y, dir, *radius, *radius),
            Shape::Ellipse { a, b } => ellipse_exit(x, y, dir, *a, *b),
            Shape::Rectangle { width, height } => {
                let (hw, hh) = (width / 2.0, height / 2.0);
                match (dir[0] as i32, dir[1] as i32) {
                    (1, 0) => hw - x,
                    (-1, 0) => x + hw,
                    (0, 1) => hh - y,
                    _ => y + hh,
                }
            }
            Shape::Polygon { vertices } => polygon_exit(vertices, x, y, dir),
        }
    }

    fn require_planar(&self) -> Result<()> {
        if self.n == 2 {
            Ok(())
        } else {
            Err(Error::InvalidGeometry(format!("planar operation on an n = {} domain", self.n)))
        }
    }
}

fn kind_name(shape: &Shape) -> &'static str {
    match shape {
        Shape::Ball { .. } => "ball",
        Shape::Rectangle { .. } => "rectangle",
        Shape::Ellipse { .. } => "ellipse",
        Shape::Polygon { .. } => "polygon",
    }
}

fn ellipse_exit(x: f64, y: f64, dir: [f64; 2], a: f64, b: f64) -> f64 {
    // (x + s dx)^2 / a^2 + (y + s dy)^2 / b^2 = 1, positive root
    let qa = (dir[0] / a).powi(2) + (dir[1] / b).powi(2);
    let qb = 2.0 * (x * dir[0] / (a * a) + y * dir[1] / (b * b));
    let qc = (x / a).powi(2) + (y / b).powi(2) - 1.0;
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    // qc < 0 inside, so the stable form below is the positive root
    let root = if qb >= 0.0 { -2.0 * qc / (qb + disc.sqrt()) } else { (-qb + disc.sqrt()) / (2.0 * qa) };
    root.max(0.0)
}

fn signed_area(vertices: &[[f64; 2]]) -> f64 {
    let m = vertices.len();
    0.5 * (0..m)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % m]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

fn normalize_polygon(mut vertices: Vec<[f64; 2]>) -> Result<Vec<[f64; 2]>> {
    if vertices.len() < 3 {
        return Err(Error::InvalidGeometry("polygon needs at least 3 vertices".into()));
    }
    if vertices.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::InvalidGeometry("polygon has non-finite coordinates".into()));
    }
    if is_self_intersecting(&vertices) {
        return Err(Error::InvalidGeometry("polygon is self-intersecting".into()));
    }
    let area = signed_area(&vertices);
    if area.abs() <= 0.0 {
        return Err(Error::InvalidGeometry("polygon has zero area".into()));
    }
    if area < 0.0 {
        vertices.reverse();
    }
    Ok(vertices)
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn is_self_intersecting(v: &[[f64; 2]]) -> bool {
    let m = v.len();
    for i in 0..m {
        for j in i + 1..m {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == m - 1) {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % m], v[j], v[(j + 1) % m]) {
                return true;
            }
        }
    }
    false
}

fn polygon_contains(v: &[[f64; 2]], x: f64, y: f64) -> bool {
    let m = v.len();
    let mut inside = false;
    for i in 0..m {
        let (a, b) = (v[i], v[(i + 1) % m]);
        // points exactly on an edge are not strictly inside
        if orient(a, b, [x, y]) == 0.0 && on_segment(a, b, [x, y]) {
            return false;
        }
        if (a[1] > y) != (b[1] > y) {
            let xc = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if x < xc {
                inside = !inside;
            }
        }
    }
    inside
}

fn polygon_exit(v: &[[f64; 2]], x: f64, y: f64, dir: [f64; 2]) -> f64 {
    let m = v.len();
    let mut best = f64::INFINITY;
    for i in 0..m {
        let (a, b) = (v[i], v[(i + 1) % m]);
        let e = [b[0] - a[0], b[1] - a[1]];
        let denom = dir[0] * e[1] - dir[1] * e[0];
        if denom == 0.0 {
            continue;
        }
        let w = [a[0] - x, a[1] - y];
        let s = (w[0] * e[1] - w[1] * e[0]) / denom;
        let u = (w[0] * dir[1] - w[1] * dir[0]) / denom;
        if s >= 0.0 && (0.0..=1.0).contains(&u) {
            best = best.min(s);
        }
    }
    best
}

/// Dimension and exponent of the Sobolev quotient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub n: usize,
    pub p: f64,
}

impl Exponents {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        let e = Self { n, p };
        validate_exponents(e)?;
        Ok(e)
    }

    /// Upper end of the admissible interval, `None` when unbounded (n = 2).
    pub fn critical(n: usize) -> Option<f64> {
        (n >= 3).then(|| 2.0 * n as f64 / (n as f64 - 2.0))
    }
}

/// Checks 1 < p < 2n/(n-2) (any p > 1 when n = 2).
pub fn validate_exponents(e: Exponents) -> Result<()> {
    if e.n < 2 {
        return Err(Error::InvalidDimension(e.n as i64));
    }
    let upper = Exponents::critical(e.n);
    let ok = e.p.is_finite() && e.p > 1.0 && upper.is_none_or(|u| e.p < u);
    if ok {
        return Ok(());
    }
    let interval = match upper {
        Some(u) => format!("(1, {u})"),
        None => "(1, inf)".to_string(),
    };
    Err(Error::SubcriticalityViolation { n: e.n, p: e.p, interval })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2).unwrap() - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3).unwrap() - 4.0 * PI / 3.0).abs() < 1e-14);
        assert_eq!(unit_ball_volume(1).unwrap(), 2.0);
        assert_eq!(unit_ball_volume(0), Err(Error::InvalidDimension(0)));
    }

    #[test]
    fn omega_recurrence() {
        for n in 3..=10 {
            let lhs = unit_ball_volume(n).unwrap();
            let rhs = unit_ball_volume(n - 2).unwrap() * 2.0 * PI / n as f64;
            assert!((lhs - rhs).abs() <= 1e-14 * lhs, "n = {n}");
        }
    }

    #[test]
    fn volume_radius_examples() {
        assert!((volume_radius(PI, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!((volume_radius(4.0 * PI / 3.0, 3).unwrap() - 1.0).abs() < 1e-15);
        assert!((volume_radius(1.0, 2).unwrap() - 0.5641895835477563).abs() < 1e-12);
        assert!(matches!(volume_radius(0.0, 2), Err(Error::InvalidMeasure(_))));
        assert!(matches!(volume_radius(-1.0, 3), Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn volume_radius_inverts_ball_volume() {
        for n in 2..=5 {
            for r in [0.5, 1.0, 3.0] {
                let d = Domain::ball(n, r).unwrap();
                assert!((volume_radius(d.volume(), n).unwrap() - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn domain_volumes() {
        assert!((Domain::ball(2, 2.0).unwrap().volume() - 4.0 * PI).abs() < 1e-14);
        assert_eq!(Domain::rectangle(1.0, 1.0).unwrap().volume(), 1.0);
        assert!((Domain::ellipse(2.0, 1.0).unwrap().volume() - 2.0 * PI).abs() < 1e-14);
        let tri = Domain::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!((tri.volume() - 0.5).abs() < 1e-15, "clockwise input is reoriented");
    }

    #[test]
    fn self_intersecting_polygon_rejected() {
        let bowtie = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(Domain::polygon(bowtie), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn planar_shapes_need_n2() {
        assert!(Domain::new(3, Shape::Ellipse { a: 1.0, b: 1.0 }).is_err());
        assert!(Domain::ball(4, 1.0).is_ok());
    }

    #[test]
    fn json_roundtrip_and_parse() {
        let d = Domain::from_json(r#"{"kind": "ellipse", "n": 2, "params": {"a": 2, "b": 1}}"#).unwrap();
        assert_eq!(d, Domain::ellipse(2.0, 1.0).unwrap());
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(Domain::from_json(&text).unwrap(), d);
        assert!(Domain::from_json(r#"{"kind": "ball", "n": 2, "params": {"radius": -1}}"#).is_err());
    }

    #[test]
    fn exponent_validation() {
        let err = validate_exponents(Exponents { n: 3, p: 5.99 });
        assert!(err.is_ok(), "5.99 < 6 is admissible");
        let err = validate_exponents(Exponents { n: 3, p: 6.0 }).unwrap_err();
        assert!(err.to_string().contains("(1, 6)"), "{err}");
        assert!(validate_exponents(Exponents { n: 2, p: 7.0 }).is_ok());
        let err = validate_exponents(Exponents { n: 4, p: 4.0 }).unwrap_err();
        assert_eq!(err.kind(), "subcriticality-violation");
        assert!(err.to_string().contains("(1, 4)"));
        assert!(validate_exponents(Exponents { n: 2, p: 1.0 }).is_err());
    }

    #[test]
    fn boundary_distances() {
        let disk = Domain::ball(2, 1.0).unwrap();
        assert!((disk.boundary_distance(0.5, 0.0, [1.0, 0.0]) - 0.5).abs() < 1e-15);
        assert!((disk.boundary_distance(0.0, 0.6, [-1.0, 0.0]) - 0.8).abs() < 1e-15);
        let sq = Domain::rectangle(1.0, 1.0).unwrap();
        assert!((sq.boundary_distance(0.25, 0.0, [1.0, 0.0]) - 0.25).abs() < 1e-15);
        let poly = Domain::polygon(vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]).unwrap();
        assert!((poly.boundary_distance(0.25, 0.1, [1.0, 0.0]) - 0.25).abs() < 1e-15);
        assert!((poly.boundary_distance(0.25, 0.1, [0.0, -1.0]) - 0.6).abs() < 1e-15);
    }
}
