//! Marching squares on the dual grid of cell centres.

use crate::field::ScalarField;

/// Length and enclosed area of the level curve {φ = t}.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Contour {
    pub length: f64,
    /// Signed shoelace area of the oriented segments; the region {φ > t} lies on their left.
    pub area: f64,
    pub segments: usize,
}

/// Traces {φ = t} through every square of four adjacent cell centres.
/// Corners with φ > t are inside; saddles are resolved by the average of the four corners.
pub fn trace(field: &ScalarField, t: f64) -> Contour {
    let g = &field.grid;
    let mut out = Contour::default();
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            // counterclockwise corners
            let idx = [g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)];
            let v = idx.map(|k| field.values[k]);
            let above = v.map(|x| x > t);
            if above.iter().all(|&a| a) || above.iter().all(|&a| !a) {
                continue;
            }
            let base = g.center(i, j);
            let corner = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
            // (position, is_exit) for each edge crossing, in counterclockwise order
            let mut crossings: [([f64; 2], bool); 4] = [([0.0; 2], false); 4];
            let mut count = 0;
            for e in 0..4 {
                let f = (e + 1) % 4;
                if above[e] != above[f] {
                    let s = (t - v[e]) / (v[f] - v[e]);
                    let x = base[0] + g.h * (corner[e][0] + s * (corner[f][0] - corner[e][0]));
                    let y = base[1] + g.h * (corner[e][1] + s * (corner[f][1] - corner[e][1]));
                    crossings[count] = ([x, y], above[e]);
                    count += 1;
                }
            }
            let center_above = v.iter().sum::<f64>() / 4.0 > t;
            for k in 0..count {
                let (from, is_exit) = crossings[k];
                if !is_exit {
                    continue;
                }
                let partner = if center_above { (k + 1) % count } else { (k + count - 1) % count };
                let to = crossings[partner].0;
                out.length += ((to[0] - from[0]).powi(2) + (to[1] - from[1]).powi(2)).sqrt();
                out.area += 0.5 * (from[0] * to[1] - to[0] * from[1]);
                out.segments += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{rasterize, ScalarField};
    use crate::geometry::Domain;
    use std::f64::consts::PI;

    fn field_from(d: &Domain, h: f64, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let grid = rasterize(d, h).unwrap();
        let mut values = vec![0.0; grid.inside.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let c = grid.center(i, j);
                values[grid.index(i, j)] = f(c[0], c[1]).max(0.0);
            }
        }
        ScalarField::from_values(grid, values, 2.0).unwrap()
    }

    #[test]
    fn cone_level_is_a_circle() {
        let d = Domain::ball(2, 1.0).unwrap();
        let f = field_from(&d, 1.0 / 128.0, |x, y| 1.0 - (x * x + y * y).sqrt());
        // {1 - r > 0.5} is the disk of radius 0.5
        let c = trace(&f, 0.5);
        assert!((c.length - PI).abs() / PI < 1e-3, "{}", c.length);
        assert!((c.area - PI / 4.0).abs() / (PI / 4.0) < 1e-3, "{}", c.area);
    }

    #[test]
    fn pyramid_level_is_a_square() {
        let d = Domain::rectangle(2.0, 2.0).unwrap();
        let f = field_from(&d, 1.0 / 64.0, |x, y| 1.0 - x.abs().max(y.abs()));
        // {φ > 1/2} is the square |x|, |y| < 1/2; only the corners are rounded off
        let c = trace(&f, 0.5);
        assert!((c.length - 4.0).abs() < 2.0 * 1.0 / 64.0, "{}", c.length);
        assert!((c.area - 1.0).abs() < 1e-3, "{}", c.area);
        assert_eq!(trace(&f, 10.0).segments, 0);
    }

    #[test]
    fn saddle_resolution_is_consistent() {
        // two bumps joined through a saddle: at the saddle height the total area
        // must not depend on the resolution rule producing open curves
        let d = Domain::rectangle(2.0, 1.0).unwrap();
        let f = field_from(&d, 1.0 / 64.0, |x, y| {
            (-(8.0 * ((x - 0.5).powi(2) + y * y))).exp() + (-(8.0 * ((x + 0.5).powi(2) + y * y))).exp()
        });
        for t in [0.2, 0.5, 0.8] {
            let c = trace(&f, t);
            assert!(c.area > 0.0);
            // closed curves satisfy the isoperimetric inequality
            assert!(c.length * c.length >= 4.0 * PI * c.area);
        }
    }
}
