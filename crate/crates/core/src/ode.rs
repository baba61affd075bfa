//! Dormand–Prince 5(4) pair for small fixed-size systems.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
// b - b*, the embedded 4th-order difference
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

#[derive(Debug, Clone, Copy)]
pub(crate) struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

impl DormandPrince {
    /// One step of size `h`; returns the 5th-order solution and the scaled
    /// error norm (accept when ≤ 1).
    pub fn step<const N: usize, F>(&self, f: &F, x: f64, y: &[f64; N], h: f64) -> ([f64; N], f64)
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let mut k = [[0.0; N]; 7];
        k[0] = f(x, y);
        for s in 1..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = f(x + C[s] * h, &ys);
        }
        let mut y5 = *y;
        let mut err = 0.0f64;
        for i in 0..N {
            let mut incr = 0.0;
            let mut e = 0.0;
            for s in 0..7 {
                incr += B[s] * k[s][i];
                e += E[s] * k[s][i];
            }
            y5[i] += h * incr;
            let scale = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((h * e).abs() / scale);
        }
        (y5, err)
    }

    /// Next step size from the error norm of the current one.
    pub fn next_h(&self, h: f64, err: f64) -> f64 {
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        (h * factor).min(self.h_max)
    }
}
