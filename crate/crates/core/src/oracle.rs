//! Reference solutions that do not go through the mesh.

/// Radial factor of a separable solution of `div(f^2 grad u) = 0` with
/// radial `f`: `u = g(r) Y_l` where
/// `(r^2 f^2 g')' = l (l + 1) f^2 g`, `g` regular at 0 and `g(1) = 1`.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    r: Vec<f64>,
    g: Vec<f64>,
    slope: f64,
}

impl RadialProfile {
    /// Shoots from near the origin with `g ~ r^l` using classical RK4 on
    /// `steps` uniform steps. `f` returns `(f(r), f'(r))`.
    pub fn solve<F: Fn(f64) -> (f64, f64)>(f: F, degree: u32, steps: usize) -> Self {
        let l = degree as f64;
        let ll = l * (l + 1.0);
        let rhs = |r: f64, y: [f64; 2]| {
            let (fv, df) = f(r);
            [y[1], -(2.0 / r + 2.0 * df / fv) * y[1] + ll * y[0] / (r * r)]
        };
        let r0 = 1e-4;
        let dr = (1.0 - r0) / steps as f64;
        let mut y = [r0.powf(l), if degree == 0 { 0.0 } else { l * r0.powf(l - 1.0) }];
        let mut r = r0;
        let mut rs = vec![r];
        let mut gs = vec![y[0]];
        for _ in 0..steps {
            let k1 = rhs(r, y);
            let k2 = rhs(r + dr / 2.0, [y[0] + dr / 2.0 * k1[0], y[1] + dr / 2.0 * k1[1]]);
            let k3 = rhs(r + dr / 2.0, [y[0] + dr / 2.0 * k2[0], y[1] + dr / 2.0 * k2[1]]);
            let k4 = rhs(r + dr, [y[0] + dr * k3[0], y[1] + dr * k3[1]]);
            for i in 0..2 {
                y[i] += dr / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            r += dr;
            rs.push(r);
            gs.push(y[0]);
        }
        let s = y[0];
        RadialProfile {
            r: rs,
            g: gs.iter().map(|v| v / s).collect(),
            slope: y[1] / s,
        }
    }

    /// `g'(1)`.
    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// `g(r)` by linear interpolation, for `0 <= r <= 1`.
    pub fn value(&self, r: f64) -> f64 {
        if r <= self.r[0] {
            return self.g[0] * if self.r[0] > 0.0 { r / self.r[0] } else { 0.0 };
        }
        let k = self.r.partition_point(|&x| x < r).clamp(1, self.r.len() - 1);
        let t = (r - self.r[k - 1]) / (self.r[k] - self.r[k - 1]);
        self.g[k - 1] + t * (self.g[k] - self.g[k - 1])
    }
}
