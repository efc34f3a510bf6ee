//! Shift-invert inverse iteration for the eigenpair nearest a real shift.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::problem::{build_problem, DiscreteProblem, ProblemSpec};
use crate::error::{Error, Result};
use crate::grid::ComplexGrid;
use crate::numeric::linalg::{axpy, dot, minres, norm, scale, HermitianOperator, Shifted};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub shift: f64,
    /// Outer stop: `‖Sv - λv‖ ≤ tolerance · max(1, |λ|)`.
    pub tolerance: f64,
    pub max_outer: usize,
    pub inner_tolerance: f64,
    pub max_inner: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            shift: -1.0,
            tolerance: 1e-9,
            max_outer: 100,
            inner_tolerance: 1e-11,
            max_inner: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSolution {
    /// Ẽ₁ in units of |E|.
    pub eigenvalue: f64,
    /// Imaginary part of the Rayleigh quotient, zero up to round-off.
    pub eigenvalue_imag: f64,
    /// ψ on the unknown nodes, normalized to `Σ w |ψ|² hx hy = 1` and
    /// phased so that ψ is real and positive at `(0, 0)`.
    pub psi: ComplexGrid,
    /// `‖(S - Ẽ₁)v‖ / ‖v‖` for the symmetrized vector.
    pub residual: f64,
    pub outer_iterations: usize,
    pub inner_iterations: Vec<usize>,
    pub residual_history: Vec<f64>,
}

pub fn solve_ground(problem: &DiscreteProblem, options: SolverOptions) -> Result<EigenSolution> {
    let n = problem.dim();
    let zero = Complex64::new(0.0, 0.0);
    let shifted = Shifted {
        inner: problem,
        shift: options.shift,
    };
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    let v_norm = norm(&v);
    scale(&mut v, 1.0 / v_norm);
    let mut w = vec![zero; n];
    let mut sv = vec![zero; n];
    let mut lambda: Option<f64> = None;
    let mut history = Vec::new();
    let mut inner = Vec::new();

    for outer in 1..=options.max_outer {
        // warm start from the current eigenvalue estimate
        match lambda {
            Some(l) if (l - options.shift).abs() > 0.0 => {
                for (wi, vi) in w.iter_mut().zip(&v) {
                    *wi = vi / (l - options.shift);
                }
            }
            _ => w.iter_mut().for_each(|z| *z = zero),
        }
        let stats = minres(&shifted, &v, &mut w, options.inner_tolerance, options.max_inner)?;
        inner.push(stats.iterations);
        let wn = norm(&w);
        if !(wn > 0.0 && wn.is_finite()) {
            return Err(Error::NonConvergence {
                what: "inverse iteration",
                iterations: outer,
                residual: f64::NAN,
                history,
            });
        }
        v.copy_from_slice(&w);
        scale(&mut v, 1.0 / wn);
        problem.apply(&v, &mut sv);
        let rq = dot(&v, &sv);
        let l = rq.re;
        let mut r = sv.clone();
        axpy(Complex64::new(-l, 0.0), &v, &mut r);
        let res = norm(&r);
        history.push(res);
        lambda = Some(l);
        if res <= options.tolerance * l.abs().max(1.0) {
            return Ok(EigenSolution {
                eigenvalue: l,
                eigenvalue_imag: rq.im,
                psi: unsymmetrize(problem, &v)?,
                residual: res,
                outer_iterations: outer,
                inner_iterations: inner,
                residual_history: history,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "inverse iteration",
        iterations: options.max_outer,
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

/// Maps the symmetrized eigenvector back to grid amplitudes.
fn unsymmetrize(problem: &DiscreteProblem, v: &[Complex64]) -> Result<ComplexGrid> {
    let rows = problem.rows;
    let cell = (problem.hx * problem.hy).sqrt();
    let mut data: Vec<Complex64> = v
        .iter()
        .enumerate()
        .map(|(k, z)| z / (problem.column_weight[k / rows] * cell))
        .collect();
    let anchor = problem.axis_row().unwrap_or(rows / 2);
    let a = data[anchor];
    if a.norm() > 0.0 {
        let phase = a.conj() / a.norm();
        data.iter_mut().for_each(|z| *z *= phase);
    }
    ComplexGrid::new(
        problem.columns,
        rows,
        0.0,
        problem.y[0],
        problem.hx,
        problem.hy,
        data,
    )
}

/// Iterates the Robin coefficient to `κ = ν sqrt(-Ẽ₁)` so that the boundary
/// condition matches the computed energy. Fails with the κ history when the
/// iteration has not settled within `iterations` steps.
pub fn solve_self_consistent(
    spec: ProblemSpec,
    options: SolverOptions,
    iterations: usize,
) -> Result<(EigenSolution, f64)> {
    let mut kappa = spec.robin.unwrap_or(spec.nu);
    let mut history = vec![kappa];
    for _ in 0..iterations.max(1) {
        let problem = build_problem(ProblemSpec {
            robin: Some(kappa),
            ..spec
        })?;
        let sol = solve_ground(&problem, SolverOptions {
            shift: -(kappa / spec.nu).powi(2),
            ..options
        })?;
        if sol.eigenvalue >= 0.0 {
            return Err(Error::domain("eigenvalue", sol.eigenvalue, "no bound state for self-consistency"));
        }
        let next = spec.nu * (-sol.eigenvalue).sqrt();
        history.push(next);
        if (next - kappa).abs() < 1e-10 * kappa {
            return Ok((sol, kappa));
        }
        kappa = next;
    }
    Err(Error::NonConvergence {
        what: "Robin self-consistency",
        iterations: iterations.max(1),
        residual: (history[history.len() - 1] - history[history.len() - 2]).abs(),
        history,
    })
}
