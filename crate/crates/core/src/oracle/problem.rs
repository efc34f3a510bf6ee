//! Finite-difference discretization of
//! `-(1/ν²)[(∂x - iνy)² + ∂y²]ψ + ũ(y)ψ = Ẽψ` on `[0, X] × [-Y, Y]`,
//! with `∂xψ - iνyψ = -κψ` at `x = 0` and Dirichlet walls elsewhere.
//!
//! Nodes sit at `x_i = i hx` (`i < nx`, the node at `X` is the wall) and at
//! the interior `y` nodes of `ny` intervals, so `y = 0` is a node when `ny`
//! is even. The magnetic term enters through Peierls phases on the x links
//! and the Robin row uses a ghost node; a half weight on the boundary column
//! makes the operator exactly Hermitian.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::numeric::linalg::{dot, norm, HermitianOperator};
use crate::setup::{period, vortex_core};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimensions {
    /// Full problem in the plane.
    Two,
    /// Only the `y = 0` line: no transverse kinetic term and no wall.
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub nu: f64,
    pub alpha: f64,
    pub wall_ratio: f64,
    pub wall_exponent: u32,
    /// Interval counts along x and y.
    pub nx: usize,
    pub ny: usize,
    /// Domain extents; `None` selects `X = 2Δx` and `Y = 1.5α`.
    pub x_extent: Option<f64>,
    pub y_extent: Option<f64>,
    /// Robin coefficient κ; `None` means ν (the nominal energy).
    pub robin: Option<f64>,
    /// Switches the vector potential off when false.
    pub magnetic: bool,
    /// Uses `A = -H(y + offset)`, gauge-equivalent to the default.
    pub gauge_offset: f64,
    pub dimensions: Dimensions,
}

impl ProblemSpec {
    /// Desk-scale defaults: N = 4, u0/|E| = 50, 384 × 256 intervals.
    pub fn new(nu: f64, alpha: f64) -> Self {
        Self {
            nu,
            alpha,
            wall_ratio: 50.0,
            wall_exponent: 4,
            nx: 384,
            ny: 256,
            x_extent: None,
            y_extent: None,
            robin: None,
            magnetic: true,
            gauge_offset: 0.0,
            dimensions: Dimensions::Two,
        }
    }

    /// The zero-field line problem `-(1/ν²)ψ'' = Ẽψ`, `ψ'(0) = -νψ(0)`.
    pub fn zero_field_line(nu: f64, alpha: f64) -> Self {
        Self {
            magnetic: false,
            dimensions: Dimensions::One,
            ..Self::new(nu, alpha)
        }
    }
}

/// Fraction by which `Y` must exceed α.
pub const WALL_MARGIN: f64 = 0.1;
/// Minimum nodes per magnetic length and per vortex core.
pub const NODES_PER_SCALE: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteProblem {
    pub spec: ProblemSpec,
    pub x_extent: f64,
    pub y_extent: f64,
    pub hx: f64,
    /// 1 for the line problem.
    pub hy: f64,
    pub robin: f64,
    /// x nodes (columns) and y nodes per column.
    pub columns: usize,
    pub rows: usize,
    pub y: Vec<f64>,
    diag: Vec<f64>,
    /// Coupling from node (i, j) to (i+1, j).
    forward: Vec<Complex64>,
    /// Coupling from node (i+1, j) to (i, j).
    backward: Vec<Complex64>,
    /// Coupling between y neighbours.
    vertical: f64,
    /// `sqrt(w_i)`, the quadrature weight of each column.
    pub column_weight: Vec<f64>,
}

pub fn build_problem(spec: ProblemSpec) -> Result<DiscreteProblem> {
    let nu = positive("nu", spec.nu)?;
    let alpha = positive("alpha", spec.alpha)?;
    positive("u0", spec.wall_ratio)?;
    if spec.wall_exponent == 0 {
        return Err(Error::domain("N", 0.0, "wall exponent must be >= 1"));
    }
    let two_d = spec.dimensions == Dimensions::Two;
    if spec.nx < 4 || (two_d && spec.ny < 4) {
        return Err(Error::DegenerateGrid(format!("{}x{} intervals", spec.nx, spec.ny)));
    }
    let dx = period(alpha);
    let x_extent = spec.x_extent.unwrap_or(2.0 * dx);
    let y_extent = spec.y_extent.unwrap_or(1.5 * alpha);
    positive("X", x_extent)?;
    positive("Y", y_extent)?;
    if x_extent < 2.0 * dx * (1.0 - 1e-12) {
        return Err(Error::domain("X", x_extent, "must cover two periods"));
    }
    if two_d && y_extent <= alpha * (1.0 + WALL_MARGIN) {
        return Err(Error::domain("Y", y_extent, "walls must lie inside the domain"));
    }
    let robin = spec.robin.unwrap_or(nu);
    positive("robin", robin)?;

    let hx = x_extent / spec.nx as f64;
    let hy = if two_d { 2.0 * y_extent / spec.ny as f64 } else { 1.0 };
    let magnetic_length = 1.0 / nu.sqrt();
    let core = vortex_core(alpha, nu);
    let spacings: &[f64] = if two_d { &[hx, hy] } else { &[hx] };
    for &h in spacings {
        if h > magnetic_length / NODES_PER_SCALE {
            return Err(Error::Resolution {
                scale: "magnetic length",
                spacing: h,
                limit: magnetic_length / NODES_PER_SCALE,
            });
        }
        if two_d && h > core / NODES_PER_SCALE {
            return Err(Error::Resolution {
                scale: "vortex core width",
                spacing: h,
                limit: core / NODES_PER_SCALE,
            });
        }
    }

    let columns = spec.nx;
    let rows = if two_d { spec.ny - 1 } else { 1 };
    let y: Vec<f64> = if two_d {
        (1..spec.ny).map(|j| -y_extent + j as f64 * hy).collect()
    } else {
        vec![0.0]
    };
    let c = 1.0 / (nu * nu);
    let exponent = 4 * spec.wall_exponent as i32;
    let mut diag = Vec::with_capacity(columns * rows);
    for i in 0..columns {
        for &yj in &y {
            let mut d = 2.0 * c / (hx * hx);
            if two_d {
                d += 2.0 * c / (hy * hy) + spec.wall_ratio * (yj / alpha).powi(exponent);
            }
            if i == 0 {
                d -= 2.0 * c * robin / hx;
            }
            diag.push(d);
        }
    }
    let weight: Vec<f64> = (0..columns).map(|i| if i == 0 { 0.5f64.sqrt() } else { 1.0 }).collect();
    let mut forward = Vec::with_capacity((columns - 1) * rows);
    let mut backward = Vec::with_capacity((columns - 1) * rows);
    for i in 0..columns - 1 {
        let ghost = if i == 0 { 2.0 } else { 1.0 };
        for &yj in &y {
            let link = if spec.magnetic {
                Complex64::from_polar(1.0, -nu * (yj + spec.gauge_offset) * hx)
            } else {
                Complex64::new(1.0, 0.0)
            };
            forward.push(link * (-c * ghost / (hx * hx)) * (weight[i] / weight[i + 1]));
            backward.push(link.conj() * (-c / (hx * hx)) * (weight[i + 1] / weight[i]));
        }
    }
    Ok(DiscreteProblem {
        spec,
        x_extent,
        y_extent,
        hx,
        hy,
        robin,
        columns,
        rows,
        y,
        diag,
        forward,
        backward,
        vertical: if two_d { -c / (hy * hy) } else { 0.0 },
        column_weight: weight,
    })
}

impl HermitianOperator for DiscreteProblem {
    fn dim(&self) -> usize {
        self.columns * self.rows
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let rows = self.rows;
        let columns = self.columns;
        y.par_chunks_mut(rows).enumerate().for_each(|(i, out)| {
            let base = i * rows;
            for j in 0..rows {
                let k = base + j;
                let mut s = x[k] * self.diag[k];
                if i + 1 < columns {
                    s += self.forward[k] * x[k + rows];
                }
                if i > 0 {
                    s += self.backward[k - rows] * x[k - rows];
                }
                if j > 0 {
                    s += x[k - 1] * self.vertical;
                }
                if j + 1 < rows {
                    s += x[k + 1] * self.vertical;
                }
                out[j] = s;
            }
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        self.diag.clone()
    }
}

/// Hermiticity diagnostics of an assembled operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hermiticity {
    /// `max |S_ij - conj(S_ji)|` over stored couplings.
    pub structural: f64,
    /// `max |<φ, Sψ> - <Sφ, ψ>| / (‖φ‖‖Sψ‖ + ‖Sφ‖‖ψ‖)` over random pairs.
    pub relative: f64,
    /// The same without normalization, for unit vectors.
    pub absolute: f64,
}

impl DiscreteProblem {
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx
    }

    /// Row index of `y = 0`, if it is a node.
    pub fn axis_row(&self) -> Option<usize> {
        self.y.iter().position(|&y| y.abs() < 1e-12 * self.hy)
    }

    pub fn hermiticity(&self, pairs: usize, seed: u64) -> Hermiticity {
        let structural = self
            .forward
            .iter()
            .zip(&self.backward)
            .map(|(f, b)| (f - b.conj()).norm())
            .fold(0.0, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim();
        let mut random = || {
            let mut v: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let s = 1.0 / norm(&v);
            v.iter_mut().for_each(|z| *z *= s);
            v
        };
        let (mut relative, mut absolute) = (0.0f64, 0.0f64);
        let mut sp = vec![Complex64::new(0.0, 0.0); n];
        let mut sq = vec![Complex64::new(0.0, 0.0); n];
        for _ in 0..pairs {
            let (p, q) = (random(), random());
            self.apply(&p, &mut sp);
            self.apply(&q, &mut sq);
            let gap = (dot(&p, &sq) - dot(&sp, &q)).norm();
            absolute = absolute.max(gap);
            relative = relative.max(gap / (norm(&sq) + norm(&sp)));
        }
        Hermiticity {
            structural,
            relative,
            absolute,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(nu: f64) -> ProblemSpec {
        ProblemSpec {
            nx: 128,
            ny: 64,
            ..ProblemSpec::new(nu, 1.0)
        }
    }

    #[test]
    fn axis_is_a_node() {
        let p = build_problem(small(2.0)).unwrap();
        assert_eq!(p.axis_row(), Some(31));
        assert_eq!(p.rows, 63);
    }

    #[test]
    fn assembly_is_hermitian() {
        let p = build_problem(small(2.0)).unwrap();
        let h = p.hermiticity(4, 7);
        assert!(h.structural < 1e-12 * 1.0 / (p.hx * p.hx), "{h:?}");
        assert!(h.relative < 1e-14, "{h:?}");
    }

    #[test]
    fn resolution_errors_name_the_scale() {
        let coarse = ProblemSpec {
            nx: 20,
            ny: 64,
            ..ProblemSpec::new(4.0, 1.0)
        };
        assert!(matches!(
            build_problem(coarse),
            Err(Error::Resolution { scale: "magnetic length", .. })
        ));
        let core = ProblemSpec {
            nx: 96,
            ny: 64,
            ..ProblemSpec::new(4.0, 3.0)
        };
        assert!(matches!(build_problem(core), Err(Error::Resolution { .. })));
    }

    #[test]
    fn domain_must_contain_walls_and_two_periods() {
        let s = ProblemSpec {
            y_extent: Some(1.05),
            ..small(4.0)
        };
        assert!(matches!(build_problem(s), Err(Error::Domain { field: "Y", .. })));
        let s = ProblemSpec {
            x_extent: Some(3.0),
            ..small(4.0)
        };
        assert!(matches!(build_problem(s), Err(Error::Domain { field: "X", .. })));
    }
}
