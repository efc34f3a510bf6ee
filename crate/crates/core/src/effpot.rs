//! Effective 1D potential along `y = 0` and the level picture built on it.
//!
//! At `y = 0` the planar equation reduces to `-(1/ν²)ψ'' + Uψ = Ẽψ` with
//!
//! ```text
//! U = (1/ν²)[(∂yχ)² - ∂y²|ψ| / |ψ|]      (transverse form)
//!   = Ẽ + (1/ν²) φ''/φ,  φ = ψ(x, 0)     (line form)
//! ```
//!
//! Both are singular at nodes of ψ. The high-field form
//! `U = (α²/2)[1 + √3 tan(αν(x - x₀)/2)]` has a pole train of period
//! `2π/(αν)`, one pole per vortex.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::field::GridField;
use crate::numeric::{bisect, SymTridiagonal};
use crate::setup::{period, vortex_core};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// From the transverse curvature of `|ψ|` and the phase gradient.
    Transverse,
    /// From the curvature of `ψ(x, 0)` along the line and the eigenvalue.
    Line,
    /// The closed high-field form with its pole train.
    HighField,
    /// Parabolic segments joined by square wells at the vortices.
    Piecewise,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Variant::Transverse => "transverse",
            Variant::Line => "line",
            Variant::HighField => "high-field",
            Variant::Piecewise => "piecewise",
        }
    }
}

/// Samples `U(x)` on a uniform grid; `None` marks a masked sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivePotentialProfile {
    pub variant: Variant,
    pub x: Vec<f64>,
    pub u: Vec<Option<f64>>,
    pub singular_points: Vec<f64>,
    pub shift: Option<f64>,
}

impl EffectivePotentialProfile {
    pub fn unmasked(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().zip(&self.u).filter_map(|(&x, u)| u.map(|u| (x, u)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Samples closer than this many x spacings to a node are masked.
    pub node_mask: f64,
    /// Samples where `|ψ(x,0)|` is below this fraction of its maximum are
    /// masked as round-off.
    pub amplitude_floor: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            node_mask: 2.0,
            amplitude_floor: 1e-10,
        }
    }
}

/// Both extractions from one field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub transverse: EffectivePotentialProfile,
    pub line: EffectivePotentialProfile,
    /// Nodes of `ψ(x, 0)` located by sign changes of the real axis profile.
    pub nodes: Vec<f64>,
}

const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

pub fn extract_u(field: &GridField, eigenvalue: f64, options: ExtractOptions) -> Result<Extraction> {
    let g = &field.grid;
    let nu = field.nu;
    let j0 = g
        .row_near(0.0)
        .filter(|&j| g.y(j).abs() < 1e-9 * g.hy && j >= 2 && j + 2 < g.ny)
        .ok_or_else(|| Error::DegenerateGrid("y = 0 must be an interior node row".into()))?;
    let core = vortex_core(field.alpha, nu);
    if 2.0 * g.hy >= core {
        return Err(Error::Resolution {
            scale: "vortex core width (5-point y stencil)",
            spacing: g.hy,
            limit: 0.5 * core,
        });
    }

    // real line profile, phased by its largest sample
    let axis: Vec<_> = (0..g.nx).map(|i| g.at(i, j0)).collect();
    let anchor = axis.iter().cloned().fold(axis[0], |a, z| if z.norm() > a.norm() { z } else { a });
    let rot = if anchor.norm() > 0.0 { anchor.conj() / anchor.norm() } else { 1.0.into() };
    let phi: Vec<f64> = axis.iter().map(|z| (z * rot).re).collect();
    let peak = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let nodes: Vec<f64> = (0..g.nx - 1)
        .filter(|&i| phi[i] != 0.0 && phi[i].signum() != phi[i + 1].signum())
        .filter(|&i| phi[i].abs().max(phi[i + 1].abs()) > options.amplitude_floor * peak)
        .map(|i| g.x(i) + g.hx * phi[i] / (phi[i] - phi[i + 1]))
        .collect();
    let masked = |i: usize| {
        let x = g.x(i);
        phi[i].abs() <= options.amplitude_floor * peak
            || axis[i].norm() <= options.amplitude_floor * peak
            || nodes.iter().any(|n| (x - n).abs() < options.node_mask * g.hx)
    };

    let mut transverse = Vec::with_capacity(g.nx);
    let mut line = Vec::with_capacity(g.nx);
    for i in 0..g.nx {
        if masked(i) {
            transverse.push(None);
            line.push(None);
            continue;
        }
        let center = g.at(i, j0);
        let mut m_yy = 0.0;
        let mut chi_y = 0.0;
        for (s, (c1, c2)) in D1.iter().zip(&D2).enumerate() {
            let z = g.at(i, j0 + s - 2);
            m_yy += c2 * z.norm();
            // phase relative to the axis node stays unwrapped across the stencil
            chi_y += c1 * (z / center).arg();
        }
        m_yy /= g.hy * g.hy;
        chi_y /= g.hy;
        transverse.push(Some((chi_y * chi_y - m_yy / center.norm()) / (nu * nu)));

        line.push(line_sample(&phi, i, g.hx, eigenvalue, nu));
    }
    let x: Vec<f64> = (0..g.nx).map(|i| g.x(i)).collect();
    Ok(Extraction {
        transverse: EffectivePotentialProfile {
            variant: Variant::Transverse,
            x: x.clone(),
            u: transverse,
            singular_points: nodes.clone(),
            shift: None,
        },
        line: EffectivePotentialProfile {
            variant: Variant::Line,
            x,
            u: line,
            singular_points: nodes.clone(),
            shift: None,
        },
        nodes,
    })
}

fn line_sample(phi: &[f64], i: usize, h: f64, eigenvalue: f64, nu: f64) -> Option<f64> {
    if i < 2 || i + 2 >= phi.len() || phi[i] == 0.0 {
        return None;
    }
    let d2: f64 = D2.iter().enumerate().map(|(s, c)| c * phi[i + s - 2]).sum::<f64>() / (h * h);
    Some(eigenvalue + d2 / phi[i] / (nu * nu))
}

/// Line form `Ẽ + (1/ν²) φ''/φ` of a real profile sampled with spacing `h`.
/// The two samples at each end are masked.
pub fn line_form(phi: &[f64], h: f64, eigenvalue: f64, nu: f64) -> Vec<Option<f64>> {
    (0..phi.len()).map(|i| line_sample(phi, i, h, eigenvalue, nu)).collect()
}

/// Shift that puts a pole of the high-field form at `x_v`.
pub fn x0_for_vortex(x_v: f64, alpha: f64, nu: f64) -> f64 {
    x_v - PI / (alpha * nu)
}

/// Pole spacing `2π/(αν)` of the high-field form, i.e. `2πl²/a`.
pub fn pole_period(alpha: f64, nu: f64) -> f64 {
    2.0 * PI / (alpha * nu)
}

/// Evaluates `U = (α²/2)[1 + √3 tan(αν(x - x₀)/2)]` on `n` samples of
/// `[x_lo, x_hi]`. Samples within `pole_mask` of a pole are masked.
pub fn eval_u_high_field(
    x_lo: f64,
    x_hi: f64,
    n: usize,
    alpha: f64,
    nu: f64,
    x0: f64,
    pole_mask: f64,
) -> Result<EffectivePotentialProfile> {
    positive("alpha", alpha)?;
    positive("nu", nu)?;
    if n < 2 || !(x_hi > x_lo) {
        return Err(Error::DegenerateGrid(format!("{n} samples on [{x_lo}, {x_hi}]")));
    }
    let k = 0.5 * alpha * nu;
    let p = pole_period(alpha, nu);
    let first = x0 + 0.5 * p;
    let mut poles = Vec::new();
    let mut m = ((x_lo - first) / p).ceil();
    while first + m * p <= x_hi {
        poles.push(first + m * p);
        m += 1.0;
    }
    let h = (x_hi - x_lo) / (n - 1) as f64;
    let mut x = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for i in 0..n {
        let xi = x_lo + i as f64 * h;
        let arg = k * (xi - x0);
        let nearest = first + ((xi - first) / p).round() * p;
        let near = (xi - nearest).abs() <= pole_mask;
        x.push(xi);
        u.push(if near || arg.cos().abs() < 1e-12 {
            None
        } else {
            Some(0.5 * alpha * alpha * (1.0 + 3f64.sqrt() * arg.tan()))
        });
    }
    Ok(EffectivePotentialProfile {
        variant: Variant::HighField,
        x,
        u,
        singular_points: poles,
        shift: Some(x0),
    })
}

/// The piecewise model on one period cell `[0, Δx]`: `U = x²` left of the
/// vortex, `(x - Δx)²` right of it, and a square well of width `δ` and
/// depth `depth` centered on `Δx/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseModel {
    pub alpha: f64,
    pub nu: f64,
    pub depth: f64,
}

impl PiecewiseModel {
    pub fn new(alpha: f64, nu: f64, depth: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("nu", nu)?;
        if !depth.is_finite() {
            return Err(Error::domain("depth", depth, "must be finite"));
        }
        Ok(Self { alpha, nu, depth })
    }

    /// Natural depth scale of the wells, `mω_c²a²` in units of |E|.
    pub fn depth_scale(alpha: f64) -> f64 {
        2.0 * alpha * alpha
    }

    pub fn period(&self) -> f64 {
        period(self.alpha)
    }

    pub fn width(&self) -> f64 {
        vortex_core(self.alpha, self.nu)
    }

    pub fn potential(&self, x: f64) -> f64 {
        let dx = self.period();
        let c = 0.5 * dx;
        if (x - c).abs() < 0.5 * self.width() {
            -self.depth
        } else if x < c {
            x * x
        } else {
            (x - dx) * (x - dx)
        }
    }

    pub fn profile(&self, n: usize) -> EffectivePotentialProfile {
        let h = self.period() / (n - 1) as f64;
        let x: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        EffectivePotentialProfile {
            variant: Variant::Piecewise,
            u: x.iter().map(|&x| Some(self.potential(x))).collect(),
            x,
            singular_points: vec![0.5 * self.period()],
            shift: None,
        }
    }
}

/// Builds the Dirichlet finite-difference operator `-c d²/dx² + U`.
fn line_operator(u: &[f64], h: f64, kinetic: f64) -> SymTridiagonal {
    let t = kinetic / (h * h);
    SymTridiagonal::new(u.iter().map(|v| 2.0 * t + v).collect(), vec![-t; u.len().saturating_sub(1)])
}

/// Interior-node potential of a sampled profile, with masked samples
/// bridged linearly between their unmasked neighbours.
fn bridged(profile: &EffectivePotentialProfile) -> Result<Vec<f64>> {
    let known: Vec<(usize, f64)> = profile.u.iter().enumerate().filter_map(|(i, u)| u.map(|u| (i, u))).collect();
    if known.is_empty() {
        return Err(Error::domain("profile", 0.0, "every sample is masked"));
    }
    let mut out = Vec::with_capacity(profile.u.len());
    let mut next = 0;
    for i in 0..profile.u.len() {
        while next < known.len() && known[next].0 < i {
            next += 1;
        }
        let v = match (next.checked_sub(1).map(|p| known[p]), known.get(next).copied()) {
            (_, Some((k, v))) if k == i => v,
            (Some((a, va)), Some((b, vb))) => va + (vb - va) * (i - a) as f64 / (b - a) as f64,
            (Some((_, v)), None) | (None, Some((_, v))) => v,
            (None, None) => unreachable!(),
        };
        out.push(v);
    }
    Ok(out)
}

/// Eigenvalues of `-(1/ν²) d²/dx² + U` inside `[lo, hi]`, with Dirichlet
/// conditions one spacing beyond the sampled range.
pub fn levels_1d(profile: &EffectivePotentialProfile, nu: f64, window: (f64, f64)) -> Result<Vec<f64>> {
    positive("nu", nu)?;
    if profile.x.len() < 3 {
        return Err(Error::DegenerateGrid("profile needs at least 3 samples".into()));
    }
    let h = profile.x[1] - profile.x[0];
    let uniform = profile.x.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
    if !(h > 0.0) || !uniform {
        return Err(Error::DegenerateGrid("profile samples must be uniform and increasing".into()));
    }
    if !(window.1 > window.0) {
        return Ok(Vec::new());
    }
    let u = bridged(profile)?;
    Ok(line_operator(&u, h, 1.0 / (nu * nu)).eigenvalues_in(window.0, window.1, 1e-13))
}

/// Levels of a potential given as a function on `[a, b]` with `n` interior
/// nodes and Dirichlet ends, improved by one Richardson step (h and h/2).
pub fn levels_of<F: Fn(f64) -> f64>(
    potential: F,
    domain: (f64, f64),
    n: usize,
    kinetic: f64,
    window: (f64, f64),
) -> Result<Vec<f64>> {
    positive("kinetic", kinetic)?;
    if n < 3 || !(domain.1 > domain.0) {
        return Err(Error::DegenerateGrid(format!("{n} nodes on [{}, {}]", domain.0, domain.1)));
    }
    let solve = |m: usize| {
        let h = (domain.1 - domain.0) / (m + 1) as f64;
        let u: Vec<f64> = (1..=m).map(|i| potential(domain.0 + i as f64 * h)).collect();
        (line_operator(&u, h, kinetic), h)
    };
    let (coarse, _) = solve(n);
    let (fine, _) = solve(2 * n + 1);
    // match levels by index below the window top
    let lo = coarse.bounds().0.min(fine.bounds().0) - 1.0;
    let a = coarse.eigenvalues_in(lo, window.1 + (window.1 - window.0).abs() + 1.0, 1e-14);
    let b = fine.eigenvalues_in(lo, window.1 + (window.1 - window.0).abs() + 1.0, 1e-14);
    Ok(a.iter()
        .zip(&b)
        .map(|(ea, eb)| (4.0 * eb - ea) / 3.0)
        .filter(|e| *e >= window.0 && *e <= window.1)
        .collect())
}

/// Number of levels of the piecewise model below `energy`.
pub fn count_below(model: &PiecewiseModel, n: usize, energy: f64) -> usize {
    let prof = model.profile(n);
    let h = prof.x[1] - prof.x[0];
    let u: Vec<f64> = prof.u.iter().map(|v| v.expect("piecewise model is unmasked")).collect();
    line_operator(&u[1..u.len() - 1], h, 1.0 / (model.nu * model.nu)).count_below(energy)
}

/// Depths at which a level of the piecewise model passes `energy` while
/// the wells deepen across `[d_lo, d_hi]`. Each level is reported once.
pub fn crossing_depths(
    alpha: f64,
    nu: f64,
    energy: f64,
    depths: (f64, f64),
    sweep: usize,
    n: usize,
) -> Result<Vec<f64>> {
    if sweep < 2 || !(depths.1 > depths.0) {
        return Err(Error::domain("sweep", sweep as f64, "need an increasing depth range and >= 2 steps"));
    }
    let count = |d: f64| -> Result<usize> { Ok(count_below(&PiecewiseModel::new(alpha, nu, d)?, n, energy)) };
    let step = (depths.1 - depths.0) / (sweep - 1) as f64;
    let mut out = Vec::new();
    let mut prev_d = depths.0;
    let mut prev_c = count(prev_d)?;
    for s in 1..sweep {
        let d = depths.0 + s as f64 * step;
        let c = count(d)?;
        // one bisection per level gained inside the step
        for target in prev_c + 1..=c {
            let f = |x: f64| if count(x).unwrap_or(0) >= target { 1.0 } else { -1.0 };
            out.push(bisect(f, prev_d, d, 1e-12 * d.abs().max(1.0))?);
        }
        prev_d = d;
        prev_c = c;
    }
    Ok(out)
}
