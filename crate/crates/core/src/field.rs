//! Wavefunction grids, the gauge-invariant vector potential and vortex
//! bookkeeping.
//!
//! The gauge is fixed to `A = (-Hy, 0, 0)`. In units where lengths are in
//! `L` and `Q` in `H L`, the gauge-invariant potential is
//! `Q = (-y, 0) + ∇χ / ν` and the current is `j ∝ -|ψ|² Q`. A flux quantum
//! `Φ₀ = π c ħ / e` equals `π / ν` in units of `H L²`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::grid::ComplexGrid;
use crate::hj::RegionGeometry;

/// Node layout of an assembled field: `x ∈ [0, x_max]`, `y ∈ [-y_max, y_max]`,
/// endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x_max: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Closed-form `exp(-νσ)`, valid only inside the regions.
    Semiclassical,
    /// Direct numerical solution, valid everywhere on the grid.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gauge {
    /// `A = (-Hy, 0, 0)`
    Landau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub grid: ComplexGrid,
    /// Region of each node, `None` outside every region.
    pub region: Vec<Option<usize>>,
    /// Unwrapped phase where known in closed form.
    pub chi: Option<Vec<f64>>,
    pub alpha: f64,
    pub nu: f64,
    pub source: Source,
    pub gauge: Gauge,
}

impl GridField {
    pub fn is_valid(&self, k: usize) -> bool {
        self.source == Source::Oracle || self.region[k].is_some()
    }

    /// Wraps a numerical solution sampled on a grid.
    pub fn from_oracle(grid: ComplexGrid, alpha: f64, nu: f64) -> Result<Self> {
        let geometry = RegionGeometry::new(alpha)?;
        positive("nu", nu)?;
        let region = (0..grid.nx)
            .flat_map(|i| (0..grid.ny).map(move |j| (i, j)))
            .map(|(i, j)| geometry.region_index(grid.x(i), grid.y(j)))
            .collect();
        Ok(Self {
            grid,
            region,
            chi: None,
            alpha,
            nu,
            source: Source::Oracle,
            gauge: Gauge::Landau,
        })
    }

    /// Phase at node `k`: the closed form if known, else the principal value.
    pub fn phase_at(&self, k: usize) -> Option<f64> {
        if !self.is_valid(k) {
            return None;
        }
        match &self.chi {
            Some(chi) => Some(chi[k]),
            None => Some(self.grid.data[k].arg()),
        }
    }
}

pub fn assemble_field(spec: GridSpec, alpha: f64, nu: f64) -> Result<GridField> {
    positive("nu", nu)?;
    let geometry = RegionGeometry::new(alpha)?;
    if spec.nx < 2 || spec.ny < 2 || !(spec.x_max > 0.0) || !(spec.y_max > 0.0) {
        return Err(Error::DegenerateGrid(format!(
            "{}x{} nodes over [0, {}] x [-{}, {}]",
            spec.nx, spec.ny, spec.x_max, spec.y_max, spec.y_max
        )));
    }
    let hx = spec.x_max / (spec.nx - 1) as f64;
    let hy = 2.0 * spec.y_max / (spec.ny - 1) as f64;
    let nodes: Vec<(Complex64, Option<usize>, f64)> = (0..spec.nx)
        .into_par_iter()
        .flat_map_iter(|i| {
            let x = i as f64 * hx;
            (0..spec.ny).map(move |j| {
                let y = -spec.y_max + j as f64 * hy;
                match geometry.action(x, y) {
                    Ok(a) => ((-nu * a.sigma).exp(), Some(a.region), -nu * a.sigma.im),
                    Err(_) => (Complex64::new(0.0, 0.0), None, 0.0),
                }
            })
        })
        .collect();
    let data = nodes.iter().map(|n| n.0).collect();
    let grid = ComplexGrid::new(spec.nx, spec.ny, 0.0, -spec.y_max, hx, hy, data)?;
    Ok(GridField {
        grid,
        region: nodes.iter().map(|n| n.1).collect(),
        chi: Some(nodes.iter().map(|n| n.2).collect()),
        alpha,
        nu,
        source: Source::Semiclassical,
        gauge: Gauge::Landau,
    })
}

/// `∇χ` at every valid node by central differences (one-sided at edges and
/// next to masked nodes).
pub fn phase_gradient(field: &GridField) -> Vec<Option<[f64; 2]>> {
    let g = &field.grid;
    (0..g.nx * g.ny)
        .map(|k| {
            let (i, j) = (k / g.ny, k % g.ny);
            if !field.is_valid(k) {
                return None;
            }
            Some([
                axis_derivative(field, i, j, true)?,
                axis_derivative(field, i, j, false)?,
            ])
        })
        .collect()
}

fn axis_derivative(field: &GridField, i: usize, j: usize, along_x: bool) -> Option<f64> {
    let g = &field.grid;
    let (n, pos, h) = if along_x { (g.nx, i, g.hx) } else { (g.ny, j, g.hy) };
    let idx = |p: usize| if along_x { g.index(p, j) } else { g.index(i, p) };
    let same = |p: usize| field.is_valid(idx(p)) && field.region[idx(p)] == field.region[idx(pos)];
    let lo = pos > 0 && same(pos - 1);
    let hi = pos + 1 < n && same(pos + 1);
    match &field.chi {
        Some(chi) => match (lo, hi) {
            (true, true) => Some((chi[idx(pos + 1)] - chi[idx(pos - 1)]) / (2.0 * h)),
            (false, true) => Some((chi[idx(pos + 1)] - chi[idx(pos)]) / h),
            (true, false) => Some((chi[idx(pos)] - chi[idx(pos - 1)]) / h),
            (false, false) => None,
        },
        None => {
            // Im(ψ* ∂ψ) / |ψ|² from differences of ψ itself
            let psi = g.data[idx(pos)];
            if psi.norm_sqr() == 0.0 {
                return None;
            }
            let d = match (lo, hi) {
                (true, true) => (g.data[idx(pos + 1)] - g.data[idx(pos - 1)]) / (2.0 * h),
                (false, true) => (g.data[idx(pos + 1)] - psi) / h,
                (true, false) => (psi - g.data[idx(pos - 1)]) / h,
                (false, false) => return None,
            };
            Some((psi.conj() * d).im / psi.norm_sqr())
        }
    }
}

/// `Q = (-y, 0) + ∇χ/ν` at every valid node, in units of `H L`.
pub fn gauge_invariant_q(field: &GridField) -> Vec<Option<[f64; 2]>> {
    let g = &field.grid;
    phase_gradient(field)
        .into_iter()
        .enumerate()
        .map(|(k, grad)| {
            let y = g.y(k % g.ny);
            grad.map(|d| [-y + d[0] / field.nu, d[1] / field.nu])
        })
        .collect()
}

/// `j = -|ψ|² Q` in units of `e² H L / m c`.
pub fn current(field: &GridField, q: &[Option<[f64; 2]>]) -> Vec<Option<[f64; 2]>> {
    q.iter()
        .zip(&field.grid.data)
        .map(|(q, psi)| q.map(|q| [-psi.norm_sqr() * q[0], -psi.norm_sqr() * q[1]]))
        .collect()
}

/// Closed polygon, counter-clockwise unless built otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loop {
    pub vertices: Vec<(f64, f64)>,
    pub descriptor: String,
}

impl Loop {
    pub fn circle(cx: f64, cy: f64, radius: f64, n: usize) -> Self {
        let n = n.max(3);
        Self {
            vertices: (0..n)
                .map(|k| {
                    let t = TAU * k as f64 / n as f64;
                    (cx + radius * t.cos(), cy + radius * t.sin())
                })
                .collect(),
            descriptor: format!("circle(center=({cx}, {cy}), radius={radius})"),
        }
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64, per_side: usize) -> Self {
        let n = per_side.max(1);
        let corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)];
        let mut vertices = Vec::with_capacity(4 * n);
        for c in 0..4 {
            let (a, b) = (corners[c], corners[(c + 1) % 4]);
            for k in 0..n {
                let t = k as f64 / n as f64;
                vertices.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
            }
        }
        Self {
            vertices,
            descriptor: format!("rectangle([{x0}, {x1}] x [{y0}, {y1}])"),
        }
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self {
            vertices,
            descriptor: format!("reversed {}", self.descriptor),
        }
    }

    /// Signed shoelace area, positive for counter-clockwise loops.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut s = 0.0;
        for k in 0..n {
            let (a, b) = (self.vertices[k], self.vertices[(k + 1) % n]);
            s += a.0 * b.1 - b.0 * a.1;
        }
        0.5 * s
    }
}

/// Result of integrating `Q` around a loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circulation {
    /// `∮ Q·dl` in units of `H L²`.
    pub circulation: f64,
    pub winding: i32,
    /// Enclosed flux `H × area`, in units of `H L²`.
    pub enclosed_flux: f64,
    /// `2πw/ν`, the topological part (two flux quanta per unit winding).
    pub topological: f64,
    /// `∮ Q·dl - Φ_enc - 2Φ₀ w`
    pub residual: f64,
    /// Residual relative to the largest of the three terms.
    pub relative_residual: f64,
    /// Circulation in units of `Φ₀ = π c ħ / e`.
    pub circulation_in_flux_quanta: f64,
    pub vertices_used: usize,
    pub descriptor: String,
}

/// Largest per-edge phase step tolerated after refinement.
pub const MAX_PHASE_STEP: f64 = PI / 8.0;
const MAX_LOOP_VERTICES: usize = 1 << 16;

struct LoopPoint {
    psi: Complex64,
    grad_chi: [f64; 2],
}

fn sample_point(field: &GridField, x: f64, y: f64) -> Result<LoopPoint> {
    let g = &field.grid;
    let covered = g
        .stencil_nodes(x, y)
        .map(|mut nodes| nodes.all(|k| field.is_valid(k)))
        .unwrap_or(false);
    if !covered {
        return Err(Error::Coverage { x, y });
    }
    let s = g.sample(x, y).ok_or(Error::Coverage { x, y })?;
    let n2 = s.value.norm_sqr();
    if n2 == 0.0 {
        return Err(Error::domain("loop", x, "passes through a zero of the wavefunction"));
    }
    Ok(LoopPoint {
        psi: s.value,
        grad_chi: [(s.value.conj() * s.dx).im / n2, (s.value.conj() * s.dy).im / n2],
    })
}

fn principal(d: f64) -> f64 {
    let r = (d + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

pub fn circulation(field: &GridField, lp: &Loop) -> Result<Circulation> {
    if lp.vertices.len() < 3 {
        return Err(Error::domain("loop", lp.vertices.len() as f64, "needs at least 3 vertices"));
    }
    let mut vertices = lp.vertices.clone();
    let mut phases: Vec<Complex64> = vertices
        .iter()
        .map(|&(x, y)| sample_point(field, x, y).map(|p| p.psi))
        .collect::<Result<_>>()?;

    // refine edges whose phase step could alias the winding
    loop {
        let n = vertices.len();
        let coarse: Vec<bool> = (0..n)
            .map(|k| principal(phases[(k + 1) % n].arg() - phases[k].arg()).abs() > MAX_PHASE_STEP)
            .collect();
        if !coarse.iter().any(|&c| c) {
            break;
        }
        if n >= MAX_LOOP_VERTICES {
            return Err(Error::NonConvergence {
                what: "loop refinement",
                iterations: n,
                residual: MAX_PHASE_STEP,
                history: vec![],
            });
        }
        let mut nv = Vec::with_capacity(2 * n);
        let mut np = Vec::with_capacity(2 * n);
        for k in 0..n {
            nv.push(vertices[k]);
            np.push(phases[k]);
            if coarse[k] {
                let (a, b) = (vertices[k], vertices[(k + 1) % n]);
                let m = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
                np.push(sample_point(field, m.0, m.1)?.psi);
                nv.push(m);
            }
        }
        vertices = nv;
        phases = np;
    }

    let n = vertices.len();
    let mut circ = 0.0;
    let mut turn = 0.0;
    for k in 0..n {
        let (a, b) = (vertices[k], vertices[(k + 1) % n]);
        let m = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
        let p = sample_point(field, m.0, m.1)?;
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        circ += (-m.1 + p.grad_chi[0] / field.nu) * dx + p.grad_chi[1] / field.nu * dy;
        turn += principal(phases[(k + 1) % n].arg() - phases[k].arg());
    }
    let winding = (turn / TAU).round() as i32;
    let refined = Loop {
        vertices,
        descriptor: lp.descriptor.clone(),
    };
    let enclosed_flux = refined.signed_area();
    let topological = TAU * winding as f64 / field.nu;
    let residual = circ - enclosed_flux - topological;
    let scale = circ.abs().max(enclosed_flux.abs()).max(topological.abs());
    Ok(Circulation {
        circulation: circ,
        winding,
        enclosed_flux,
        topological,
        residual,
        relative_residual: if scale > 0.0 { residual.abs() / scale } else { 0.0 },
        circulation_in_flux_quanta: circ * field.nu / PI,
        vertices_used: n,
        descriptor: lp.descriptor.clone(),
    })
}

/// A phase singularity located on the grid and measured with a loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexRecord {
    pub x: f64,
    pub y: f64,
    pub winding: i32,
    pub circulation: Circulation,
}

/// Amplitude floors that keep round-off phase noise out of node detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexFilter {
    /// Cell corners must exceed this fraction of the column maximum.
    pub column_fraction: f64,
    /// Columns whose maximum is below this fraction of the global maximum
    /// are skipped.
    pub column_floor: f64,
    /// Only cells with `|y|` below this bound are considered.
    pub y_limit: f64,
}

impl VortexFilter {
    pub fn for_alpha(alpha: f64) -> Self {
        Self {
            column_fraction: 1e-7,
            column_floor: 1e-11,
            y_limit: alpha,
        }
    }
}

/// Cells with non-zero plaquette winding, as `(x, y, w)` at cell centers.
pub fn find_vortices(field: &GridField, filter: VortexFilter) -> Vec<(f64, f64, i32)> {
    let g = &field.grid;
    let global = g.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let column_max: Vec<f64> = (0..g.nx)
        .map(|i| (0..g.ny).map(|j| g.at(i, j).norm()).fold(0.0, f64::max))
        .collect();
    let mut out = Vec::new();
    for i in 0..g.nx - 1 {
        if column_max[i] <= filter.column_floor * global {
            continue;
        }
        for j in 0..g.ny - 1 {
            let yc = g.y(j) + 0.5 * g.hy;
            if yc.abs() >= filter.y_limit {
                continue;
            }
            let corners = [g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)];
            if !corners.iter().all(|&k| field.is_valid(k)) {
                continue;
            }
            if corners.iter().any(|&k| g.data[k].norm() <= filter.column_fraction * column_max[i]) {
                continue;
            }
            let mut turn = 0.0;
            for c in 0..4 {
                turn += principal(g.data[corners[(c + 1) % 4]].arg() - g.data[corners[c]].arg());
            }
            let w = (turn / TAU).round() as i32;
            if w != 0 {
                out.push((g.x(i) + 0.5 * g.hx, yc, w));
            }
        }
    }
    out
}

/// Measures the vortex at `(x, y)` with a circle of the given radius.
pub fn measure_vortex(field: &GridField, x: f64, y: f64, radius: f64) -> Result<VortexRecord> {
    let c = circulation(field, &Loop::circle(x, y, radius, 256))?;
    Ok(VortexRecord {
        x,
        y,
        winding: c.winding,
        circulation: c,
    })
}
