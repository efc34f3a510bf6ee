//! Matrix-free Hermitian linear algebra: vector kernels with a fixed
//! summation order and a Jacobi-preconditioned MINRES solver.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A Hermitian operator applied without storing a matrix.
pub trait HermitianOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);

    /// Real diagonal of the operator, used for Jacobi preconditioning.
    fn diagonal(&self) -> Vec<f64>;
}

/// `A - shift` for a Hermitian `A` and real shift.
pub struct Shifted<'a, A: HermitianOperator> {
    pub inner: &'a A,
    pub shift: f64,
}

impl<A: HermitianOperator> HermitianOperator for Shifted<'_, A> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.inner.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi -= xi * self.shift;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.inner.diagonal().into_iter().map(|d| d - self.shift).collect()
    }
}

/// `<x, y> = sum conj(x_i) y_i`, summed left to right.
pub fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        s += a.conj() * b;
    }
    s
}

pub fn norm(x: &[Complex64]) -> f64 {
    let mut s = 0.0;
    for a in x {
        s += a.norm_sqr();
    }
    s.sqrt()
}

pub fn scale(x: &mut [Complex64], a: f64) {
    for v in x {
        *v *= a;
    }
}

/// `y += a x`.
pub fn axpy(a: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Outcome of an iterative linear solve.
#[derive(Debug, Clone)]
pub struct SolveStats {
    pub iterations: usize,
    /// True relative residual `||b - A x|| / ||b||` at exit.
    pub relative_residual: f64,
}

/// Solves `A x = b` for Hermitian (possibly indefinite) `A` with MINRES,
/// preconditioned by the absolute value of the diagonal. `x` holds the
/// initial guess on entry.
pub fn minres<A: HermitianOperator>(
    op: &A,
    b: &[Complex64],
    x: &mut [Complex64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<SolveStats> {
    let n = op.dim();
    let zero = Complex64::new(0.0, 0.0);
    let inv_diag: Vec<f64> = op
        .diagonal()
        .into_iter()
        .map(|d| if d.abs() > 0.0 { 1.0 / d.abs() } else { 1.0 })
        .collect();
    let precond = |v: &[Complex64], z: &mut [Complex64]| {
        for ((zi, vi), m) in z.iter_mut().zip(v).zip(&inv_diag) {
            *zi = vi * m;
        }
    };

    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = zero);
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }

    let mut av = vec![zero; n];
    op.apply(x, &mut av);
    let mut v: Vec<Complex64> = b.iter().zip(&av).map(|(bi, ai)| bi - ai).collect();
    let mut v_prev = vec![zero; n];
    let mut z = vec![zero; n];
    precond(&v, &mut z);
    let mut gamma = dot(&z, &v).re.max(0.0).sqrt();
    let mut gamma_prev = 1.0;
    let mut eta = gamma;
    let (mut s_prev, mut s) = (0.0_f64, 0.0_f64);
    let (mut c_prev, mut c) = (1.0_f64, 1.0_f64);
    let mut w_prev = vec![zero; n];
    let mut w = vec![zero; n];
    let mut w_next = vec![zero; n];
    let mut az = vec![zero; n];
    let mut v_next = vec![zero; n];
    let gamma0 = gamma;

    let mut iterations = 0;
    while iterations < max_iter && gamma0 > 0.0 && eta.abs() > rel_tol * gamma0 {
        iterations += 1;
        if gamma == 0.0 {
            break;
        }
        scale(&mut z, 1.0 / gamma);
        op.apply(&z, &mut az);
        let delta = dot(&z, &az).re;
        for i in 0..n {
            v_next[i] = az[i] - v[i] * (delta / gamma) - v_prev[i] * (gamma / gamma_prev);
        }
        std::mem::swap(&mut v_prev, &mut v);
        std::mem::swap(&mut v, &mut v_next);
        let mut z_next = vec![zero; n];
        precond(&v, &mut z_next);
        let gamma_next = dot(&z_next, &v).re.max(0.0).sqrt();

        let a0 = c * delta - c_prev * s * gamma;
        let a1 = a0.hypot(gamma_next);
        let a2 = s * delta + c_prev * c * gamma;
        let a3 = s_prev * gamma;
        let c_next = a0 / a1;
        let s_next = gamma_next / a1;
        for i in 0..n {
            w_next[i] = (z[i] - w_prev[i] * a3 - w[i] * a2) / a1;
        }
        axpy(Complex64::new(c_next * eta, 0.0), &w_next, x);
        eta *= -s_next;

        std::mem::swap(&mut w_prev, &mut w);
        std::mem::swap(&mut w, &mut w_next);
        z = z_next;
        gamma_prev = gamma;
        gamma = gamma_next;
        s_prev = s;
        s = s_next;
        c_prev = c;
        c = c_next;
    }

    op.apply(x, &mut av);
    let r: Vec<Complex64> = b.iter().zip(&av).map(|(bi, ai)| bi - ai).collect();
    let relative_residual = norm(&r) / b_norm;
    if iterations >= max_iter && eta.abs() > rel_tol * gamma0 {
        return Err(Error::NonConvergence {
            what: "MINRES inner solve",
            iterations,
            residual: relative_residual,
            history: vec![relative_residual],
        });
    }
    Ok(SolveStats {
        iterations,
        relative_residual,
    })
}
