//! Uniform rectangular grid of complex samples, stored with `y` fastest.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexGrid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    pub data: Vec<Complex64>,
}

/// Value and gradient of an interpolated sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: Complex64,
    pub dx: Complex64,
    pub dy: Complex64,
}

impl ComplexGrid {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, hx: f64, hy: f64, data: Vec<Complex64>) -> Result<Self> {
        if nx < 2 || ny < 1 {
            return Err(Error::DegenerateGrid(format!("need at least 2x1 nodes, got {nx}x{ny}")));
        }
        if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
            return Err(Error::DegenerateGrid(format!("spacings must be positive, got ({hx}, {hy})")));
        }
        if data.len() != nx * ny {
            return Err(Error::DegenerateGrid(format!("{} samples for {nx}x{ny} nodes", data.len())));
        }
        Ok(Self { nx, ny, x0, y0, hx, hy, data })
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[self.index(i, j)]
    }

    /// Index of the row nearest to `y`, if `y` is within half a spacing of it.
    pub fn row_near(&self, y: f64) -> Option<usize> {
        let j = ((y - self.y0) / self.hy).round();
        (j >= 0.0 && (j as usize) < self.ny).then_some(j as usize)
    }

    /// Lower-left corner of the 4x4 stencil around `(x, y)` when it fits.
    fn stencil(&self, x: f64, y: f64) -> Option<(usize, usize, f64, f64)> {
        if self.nx < 4 || self.ny < 4 {
            return None;
        }
        let u = (x - self.x0) / self.hx;
        let v = (y - self.y0) / self.hy;
        if !(u >= 0.0 && v >= 0.0 && u <= (self.nx - 1) as f64 && v <= (self.ny - 1) as f64) {
            return None;
        }
        let i = (u.floor() as usize).saturating_sub(1).min(self.nx - 4);
        let j = (v.floor() as usize).saturating_sub(1).min(self.ny - 4);
        Some((i, j, u - i as f64, v - j as f64))
    }

    /// Nodes used by [`ComplexGrid::sample`] at `(x, y)`.
    pub fn stencil_nodes(&self, x: f64, y: f64) -> Option<impl Iterator<Item = usize> + '_> {
        let (i, j, _, _) = self.stencil(x, y)?;
        Some((0..4).flat_map(move |a| (0..4).map(move |b| self.index(i + a, j + b))))
    }

    /// Bicubic Lagrange interpolation with analytic derivatives.
    pub fn sample(&self, x: f64, y: f64) -> Option<Sample> {
        let (i, j, u, v) = self.stencil(x, y)?;
        let (wu, du) = cubic_weights(u);
        let (wv, dv) = cubic_weights(v);
        let zero = Complex64::new(0.0, 0.0);
        let (mut value, mut dx, mut dy) = (zero, zero, zero);
        for a in 0..4 {
            for b in 0..4 {
                let f = self.at(i + a, j + b);
                value += f * (wu[a] * wv[b]);
                dx += f * (du[a] * wv[b]);
                dy += f * (wu[a] * dv[b]);
            }
        }
        Some(Sample {
            value,
            dx: dx / self.hx,
            dy: dy / self.hy,
        })
    }
}

/// Lagrange weights on nodes 0..4 at local coordinate `t`, and their
/// derivatives.
fn cubic_weights(t: f64) -> ([f64; 4], [f64; 4]) {
    let mut w = [0.0; 4];
    let mut d = [0.0; 4];
    for k in 0..4 {
        let mut prod = 1.0;
        let mut deriv = 0.0;
        let mut denom = 1.0;
        for m in (0..4).filter(|&m| m != k) {
            denom *= k as f64 - m as f64;
            // product rule over the other factors
            let mut term = 1.0;
            for q in (0..4).filter(|&q| q != k && q != m) {
                term *= t - q as f64;
            }
            deriv += term;
            prod *= t - m as f64;
        }
        w[k] = prod / denom;
        d[k] = deriv / denom;
    }
    (w, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_of(f: impl Fn(f64, f64) -> Complex64) -> ComplexGrid {
        let (nx, ny, hx, hy) = (12, 9, 0.3, 0.25);
        let mut data = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                data.push(f(i as f64 * hx, -1.0 + j as f64 * hy));
            }
        }
        ComplexGrid::new(nx, ny, 0.0, -1.0, hx, hy, data).unwrap()
    }

    #[test]
    fn cubic_polynomials_are_reproduced() {
        let f = |x: f64, y: f64| Complex64::new(x * x * x - 2.0 * x * y, y * y * y + x);
        let g = grid_of(f);
        let s = g.sample(1.37, 0.21).unwrap();
        assert!((s.value - f(1.37, 0.21)).norm() < 1e-12);
        let dx = Complex64::new(3.0 * 1.37 * 1.37 - 2.0 * 0.21, 1.0);
        let dy = Complex64::new(-2.0 * 1.37, 3.0 * 0.21 * 0.21);
        assert!((s.dx - dx).norm() < 1e-11);
        assert!((s.dy - dy).norm() < 1e-11);
    }

    #[test]
    fn outside_returns_none() {
        let g = grid_of(|_, _| Complex64::new(1.0, 0.0));
        assert!(g.sample(-0.1, 0.0).is_none());
        assert!(g.sample(1.0, 1.5).is_none());
        assert!(g.sample(3.3, 1.0).is_some());
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        assert!(ComplexGrid::new(1, 5, 0.0, 0.0, 0.1, 0.1, vec![Complex64::new(0.0, 0.0); 5]).is_err());
        assert!(ComplexGrid::new(2, 2, 0.0, 0.0, 0.0, 0.1, vec![Complex64::new(0.0, 0.0); 4]).is_err());
        assert!(ComplexGrid::new(2, 2, 0.0, 0.0, 0.1, 0.1, vec![]).is_err());
    }
}
