//! Imaginary-time bounce, the decay exponent it produces and the resonance
//! where that exponent vanishes.
//!
//! Along the trajectory `y = -iη` with `η ≥ 0`, energy conservation reads
//! `η̇² = g(η) = η(η + 2) - ũ(η)` with `ũ(η) = (u0/|E|)(η/α)^{4N}`; time is in
//! units of `1/ω_c`. The hard-wall limit replaces the wall by a reflection at
//! `η = α`, which gives the closed forms below.

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::hj::connection_constant;
use crate::numeric::{bisect, integrate};
use crate::setup::{period, PhysicalSetup};

/// `J(α) = ∫₀^α sqrt(η(2+η)) dη` in closed form.
pub fn transverse_integral(alpha: f64) -> f64 {
    let s = (alpha * (2.0 + alpha)).sqrt();
    // acosh(1 + α) written as asinh(s) to stay accurate for small α
    0.5 * ((alpha + 1.0) * s - s.asinh())
}

/// `I(α) = J(α) / sqrt(α(2+α))`; the decay exponent is `A_WKB (1 - I)`.
pub fn resonance_ratio(alpha: f64) -> f64 {
    transverse_integral(alpha) / (alpha * (2.0 + alpha)).sqrt()
}

/// `I'(α) = 1 - J(α)(1+α) / (α(2+α))^{3/2}`.
pub fn resonance_ratio_derivative(alpha: f64) -> f64 {
    let s2 = alpha * (2.0 + alpha);
    1.0 - transverse_integral(alpha) * (1.0 + alpha) / (s2 * s2.sqrt())
}

/// Decay exponent over one period and its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBreakdown {
    pub alpha: f64,
    pub nu: f64,
    /// `2νΔx`, the plain WKB exponent over one period.
    pub a_wkb: f64,
    /// Relief from the transverse bounce.
    pub transverse: f64,
    /// `A = A_WKB - transverse`
    pub total: f64,
    /// `exp(-A)`
    pub suppression: f64,
}

impl ActionBreakdown {
    fn new(alpha: f64, nu: f64, a_wkb: f64, transverse: f64) -> Self {
        let total = a_wkb - transverse;
        Self {
            alpha,
            nu,
            a_wkb,
            transverse,
            total,
            suppression: (-total).exp(),
        }
    }
}

pub fn hard_wall_action(alpha: f64, nu: f64) -> Result<ActionBreakdown> {
    positive("alpha", alpha)?;
    positive("nu", nu)?;
    Ok(ActionBreakdown::new(
        alpha,
        nu,
        2.0 * nu * period(alpha),
        4.0 * nu * transverse_integral(alpha),
    ))
}

/// The resonance value of α, found twice: from `I(α) = 1` in closed form
/// and from `C(α) = 0` with `C` by quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRoot {
    pub alpha_r: f64,
    pub alpha_r_connection: f64,
}

const ROOT_BRACKET: (f64, f64) = (1.0, 2.5);

pub fn find_alpha_r(tolerance: f64) -> Result<ResonanceRoot> {
    positive("tolerance", tolerance)?;
    let (lo, hi) = ROOT_BRACKET;
    let alpha_r = bisect(|a| resonance_ratio(a) - 1.0, lo, hi, tolerance)?;
    let alpha_r_connection = bisect(connection_constant, lo, hi, tolerance)?;
    Ok(ResonanceRoot {
        alpha_r,
        alpha_r_connection,
    })
}

/// Root tolerance used wherever α_R enters another formula.
pub const ALPHA_R_TOLERANCE: f64 = 1e-14;

/// `c = α_R I'(α_R)` of the near-resonance law.
pub fn near_resonance_coefficient() -> Result<f64> {
    let a = find_alpha_r(ALPHA_R_TOLERANCE)?.alpha_r;
    Ok(a * resonance_ratio_derivative(a))
}

/// `H_R = sqrt(2m|E|) c α_R / (|e| a)`. The field entry of `setup` is
/// ignored.
pub fn resonance_field(setup: &PhysicalSetup) -> Result<f64> {
    let probe = PhysicalSetup { field: 1.0, ..*setup };
    crate::setup::derive_dimensionless(&probe)?;
    let alpha_r = find_alpha_r(ALPHA_R_TOLERANCE)?.alpha_r;
    Ok((2.0 * setup.mass * setup.energy).sqrt() * setup.constants.c * alpha_r
        / (setup.charge * setup.wall_half_width))
}

/// Suppression over `R` periods close to resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearResonance {
    pub alpha: f64,
    pub nu: f64,
    pub periods: u32,
    /// `(α_R - α)/α_R = (H_R - H)/H_R`
    pub epsilon: f64,
    pub coefficient: f64,
    /// `exp(-R A(α))`
    pub exact: f64,
    /// `exp(-c ε A_WKB(RΔx))`
    pub linearized: f64,
    pub exact_exponent: f64,
    pub linearized_exponent: f64,
    /// Whether `1/A_WKB ≪ ε ≪ 1` holds, with "≪" read as ratio ≤ 0.2.
    pub in_window: bool,
}

pub fn near_resonance_ratio(alpha: f64, nu: f64, periods: i64) -> Result<NearResonance> {
    if periods <= 0 {
        return Err(Error::domain("R", periods as f64, "number of periods must be >= 1"));
    }
    let hw = hard_wall_action(alpha, nu)?;
    let alpha_r = find_alpha_r(ALPHA_R_TOLERANCE)?.alpha_r;
    let coefficient = alpha_r * resonance_ratio_derivative(alpha_r);
    let epsilon = (alpha_r - alpha) / alpha_r;
    let r = periods as f64;
    let exact_exponent = r * hw.total;
    let linearized_exponent = coefficient * epsilon * r * hw.a_wkb;
    let much_less = 0.2;
    let in_window = epsilon > 0.0 && 1.0 / hw.a_wkb <= much_less * epsilon && epsilon <= much_less;
    Ok(NearResonance {
        alpha,
        nu,
        periods: periods as u32,
        epsilon,
        coefficient,
        exact: (-exact_exponent).exp(),
        linearized: (-linearized_exponent).exp(),
        exact_exponent,
        linearized_exponent,
        in_window,
    })
}

/// Knobs for [`integrate_bounce`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BounceControl {
    /// Upper bound on the time step of the cross-check integrator; the
    /// step is further reduced to resolve the wall stiffness.
    pub max_step: f64,
    /// Trajectory samples kept in the result.
    pub samples: usize,
    /// The wall counts as reflecting only if the turning point lies below
    /// this multiple of α.
    pub max_turning_ratio: f64,
}

impl Default for BounceControl {
    fn default() -> Self {
        Self {
            max_step: 1e-3,
            samples: 201,
            max_turning_ratio: 2.0,
        }
    }
}

/// One period of the imaginary-time bounce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BounceResult {
    pub alpha: f64,
    pub nu: f64,
    pub wall_ratio: f64,
    pub wall_exponent: u32,
    pub tau: Vec<f64>,
    pub eta: Vec<f64>,
    pub eta_dot: Vec<f64>,
    pub period: f64,
    pub turning_point: f64,
    /// `2ν ∫ η̇² dτ` over one period, by quadrature.
    pub transverse_action: f64,
    /// The same integral accumulated by the time stepper.
    pub transverse_action_stepped: f64,
    /// Distance along x covered in one period, `∫ (η + 1) dτ`.
    pub period_length: f64,
    pub action: ActionBreakdown,
    /// Largest `|η̇² - g(η)|` along the stepped path, relative to `η_max(η_max + 2)`.
    pub max_energy_residual: f64,
    /// `|η(T)|` after one full stepped period.
    pub closure_error: f64,
}

struct Wall {
    alpha: f64,
    ratio: f64,
    exponent: i32,
}

impl Wall {
    fn potential(&self, eta: f64) -> f64 {
        self.ratio * (eta / self.alpha).powi(self.exponent)
    }

    fn g(&self, eta: f64) -> f64 {
        eta * (eta + 2.0) - self.potential(eta)
    }

    /// `g'(η)/2`, the imaginary-time force.
    fn force(&self, eta: f64) -> f64 {
        let n = self.exponent as f64;
        eta + 1.0 - 0.5 * n * self.ratio * (eta / self.alpha).powi(self.exponent - 1) / self.alpha
    }
}

/// `p(r)` in `g(η) = η (η_max - η) p(η/η_max)`, smooth and positive on [0, 1].
fn reduced(eta_max: f64, exponent: i32, r: f64) -> f64 {
    let mut sum = 0.0;
    for _ in 0..exponent - 1 {
        sum = sum * r + 1.0;
    }
    (eta_max + 2.0) / eta_max * sum - 1.0
}

pub fn integrate_bounce(
    alpha: f64,
    nu: f64,
    wall_ratio: f64,
    wall_exponent: u32,
    control: BounceControl,
) -> Result<BounceResult> {
    positive("alpha", alpha)?;
    positive("nu", nu)?;
    positive("u0", wall_ratio)?;
    positive("max_step", control.max_step)?;
    if wall_exponent == 0 {
        return Err(Error::domain("N", 0.0, "wall exponent must be >= 1"));
    }
    if control.samples < 2 {
        return Err(Error::domain("samples", control.samples as f64, "need at least 2 samples"));
    }
    let exponent = 4 * wall_exponent as i32;
    let wall = Wall {
        alpha,
        ratio: wall_ratio,
        exponent,
    };

    // g > 0 just above 0 and eventually negative, so the first sign change
    // is the turning point
    let limit = control.max_turning_ratio * alpha;
    if wall.g(limit) >= 0.0 {
        return Err(Error::NoBounce {
            u0: wall_ratio,
            n: wall_exponent,
            alpha,
        });
    }
    // (η + 2) - W η^{4N-1} is decreasing, so the bracket holds a single root
    let h = |eta: f64| (eta + 2.0) - wall_ratio / alpha * (eta / alpha).powi(exponent - 1);
    let eta_max = bisect(h, 0.0, limit, 1e-15 * limit)?;

    let half_pi = std::f64::consts::FRAC_PI_2;
    let p = |theta: f64| reduced(eta_max, exponent, theta.sin().powi(2));
    let tol = 1e-14;
    let period_q = 4.0 * integrate(|t| 1.0 / p(t).sqrt(), 0.0, half_pi, 0.0, tol).value;
    let velocity_sq = integrate(
        |t| {
            let (s, c) = t.sin_cos();
            2.0 * eta_max * eta_max * s * s * c * c * p(t).sqrt()
        },
        0.0,
        half_pi,
        0.0,
        tol,
    )
    .value;
    let transverse_action = 4.0 * nu * velocity_sq;
    let period_length = 4.0
        * integrate(
            |t| (eta_max * t.sin().powi(2) + 1.0) / p(t).sqrt(),
            0.0,
            half_pi,
            0.0,
            tol,
        )
        .value;

    // time stepping over one full period
    let stiffness = (wall.force(eta_max) - wall.force(eta_max * (1.0 - 1e-6))).abs() / (eta_max * 1e-6);
    let step_cap = control.max_step.min(0.02 / stiffness.max(1.0).sqrt());
    let steps = (period_q / step_cap).ceil() as usize;
    let dt = period_q / steps as f64;
    let deriv = |s: [f64; 4]| -> [f64; 4] {
        let v2 = s[1] * s[1];
        [s[1], wall.force(s[0]), v2, s[0] + 1.0]
    };
    let scale = eta_max * (eta_max + 2.0);
    let mut state = [0.0_f64; 4];
    let mut path = Vec::with_capacity(steps + 1);
    path.push((0.0, state[0], state[1]));
    let mut max_energy_residual: f64 = 0.0;
    for i in 0..steps {
        let k1 = deriv(state);
        let k2 = deriv(add(state, k1, 0.5 * dt));
        let k3 = deriv(add(state, k2, 0.5 * dt));
        let k4 = deriv(add(state, k3, dt));
        for j in 0..4 {
            state[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let residual = (state[1] * state[1] - wall.g(state[0])).abs() / scale;
        max_energy_residual = max_energy_residual.max(residual);
        path.push(((i + 1) as f64 * dt, state[0], state[1]));
    }
    if !state.iter().all(|v| v.is_finite()) {
        return Err(Error::NonConvergence {
            what: "bounce time stepping",
            iterations: steps,
            residual: f64::INFINITY,
            history: vec![max_energy_residual],
        });
    }

    let (mut tau, mut eta, mut eta_dot) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..control.samples {
        let idx = k * steps / (control.samples - 1);
        let (t, e, v) = path[idx];
        tau.push(t);
        eta.push(e);
        eta_dot.push(v);
    }

    let a_wkb = 2.0 * nu * period_length;
    Ok(BounceResult {
        alpha,
        nu,
        wall_ratio,
        wall_exponent,
        tau,
        eta,
        eta_dot,
        period: period_q,
        turning_point: eta_max,
        transverse_action,
        transverse_action_stepped: 2.0 * nu * state[2],
        period_length,
        action: ActionBreakdown::new(alpha, nu, a_wkb, transverse_action),
        max_energy_residual,
        closure_error: state[0].abs(),
    })
}

fn add(s: [f64; 4], k: [f64; 4], h: f64) -> [f64; 4] {
    [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2], s[3] + h * k[3]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn closed_form_against_quadrature() {
        for &a in &[0.5, 1.0, 1.66, 2.0] {
            let q = integrate(|e| (e * (2.0 + e)).sqrt(), 0.0, a, 1e-15, 1e-15).value;
            assert!((transverse_integral(a) - q).abs() < 1e-10, "alpha = {a}");
        }
    }

    #[test]
    fn frozen_transverse_values() {
        // 40-digit reference evaluation
        assert_relative_eq!(transverse_integral(0.5), 0.357_313_666_502_817_69, max_relative = 1e-14);
        assert_relative_eq!(transverse_integral(1.0), 1.073_571_859_106_468_9, max_relative = 1e-14);
        assert_relative_eq!(resonance_ratio(2.0), 1.188_387_379_929_884_7, max_relative = 1e-14);
    }

    #[test]
    fn pure_wkb_at_small_alpha() {
        let a = 1e-6;
        assert!(resonance_ratio(a) < 1e-3);
        let hw = hard_wall_action(a, 3.0).unwrap();
        let leading = 4.0 * 3.0 * (2.0 * 2f64.sqrt() / 3.0) * a.powf(1.5);
        assert_relative_eq!(hw.transverse, leading, max_relative = 1e-5);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(hard_wall_action(0.0, 1.0), Err(Error::Domain { field: "alpha", .. })));
        assert!(hard_wall_action(1.0, -1.0).is_err());
        assert!(near_resonance_ratio(1.0, 4.0, 0).is_err());
        assert!(find_alpha_r(0.0).is_err());
    }

    #[test]
    fn resonance_root() {
        let r = find_alpha_r(1e-13).unwrap();
        assert!((r.alpha_r - 1.66).abs() < 0.01);
        assert!((r.alpha_r - r.alpha_r_connection).abs() < 1e-10);
        assert!((resonance_ratio(r.alpha_r) - 1.0).abs() < 1e-10);
        assert!(connection_constant(r.alpha_r).abs() < 1e-10);
        assert_relative_eq!(r.alpha_r, 1.662_627_371_664_935_3, max_relative = 1e-12);
    }

    #[test]
    fn zero_action_at_resonance() {
        let a = find_alpha_r(1e-14).unwrap().alpha_r;
        let hw = hard_wall_action(a, 7.0).unwrap();
        assert!(hw.total.abs() < 1e-11 * hw.a_wkb);
    }

    #[test]
    fn coefficient_matches_finite_difference() {
        let a = find_alpha_r(1e-14).unwrap().alpha_r;
        let h = 1e-5;
        let fd = (resonance_ratio(a + h) - resonance_ratio(a - h)) / (2.0 * h);
        assert!((a * fd - near_resonance_coefficient().unwrap()).abs() < 1e-6);
        assert_relative_eq!(near_resonance_coefficient().unwrap(), 0.935_655_419_163_369_7, max_relative = 1e-12);
    }

    #[test]
    fn linearized_ratio_is_one_at_resonance() {
        let a = find_alpha_r(1e-14).unwrap().alpha_r;
        let nr = near_resonance_ratio(a, 10.0, 3).unwrap();
        assert_eq!(nr.linearized, 1.0);
        assert!(!nr.in_window);
    }

    #[test]
    fn linearization_error_is_second_order() {
        let a_r = find_alpha_r(1e-14).unwrap().alpha_r;
        let mismatch = |eps: f64| {
            let nr = near_resonance_ratio(a_r * (1.0 - eps), 50.0, 1).unwrap();
            let a_wkb = hard_wall_action(nr.alpha, 50.0).unwrap().a_wkb;
            (nr.exact_exponent - nr.linearized_exponent).abs() / a_wkb
        };
        let eps: Vec<f64> = (0..5).map(|k| 0.02 * 0.5f64.powi(k)).collect();
        for w in eps.windows(2) {
            let slope = (mismatch(w[0]) / mismatch(w[1])).log2();
            assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
        }
    }

    #[test]
    fn window_flag() {
        let a_r = find_alpha_r(1e-14).unwrap().alpha_r;
        assert!(near_resonance_ratio(a_r * 0.9, 100.0, 1).unwrap().in_window);
        assert!(!near_resonance_ratio(a_r * 0.9, 1.0, 1).unwrap().in_window);
        assert!(!near_resonance_ratio(a_r * 0.5, 100.0, 1).unwrap().in_window);
    }

    #[test]
    fn bounce_routes_agree() {
        let b = integrate_bounce(1.0, 4.0, 50.0, 4, BounceControl::default()).unwrap();
        assert!((b.transverse_action - b.transverse_action_stepped).abs() < 1e-6 * b.transverse_action);
        assert!(b.max_energy_residual < 1e-8, "{}", b.max_energy_residual);
        assert!(b.closure_error < 1e-6, "{}", b.closure_error);
        assert!(b.eta.iter().all(|&e| e >= -1e-9));
        let peak = b.eta.iter().cloned().fold(0.0, f64::max);
        assert!((peak - b.turning_point).abs() < 1e-3);
    }

    #[test]
    fn weak_wall_does_not_bounce() {
        let e = integrate_bounce(1.0, 4.0, 1e-6, 1, BounceControl::default()).unwrap_err();
        assert!(matches!(e, Error::NoBounce { .. }));
    }

    #[test]
    fn steep_wall_approaches_hard_wall() {
        let alpha = 1.0;
        let hard = hard_wall_action(alpha, 1.0).unwrap();
        let mut last = f64::INFINITY;
        for &n in &[4, 16, 64] {
            let b = integrate_bounce(alpha, 1.0, 1.0, n, BounceControl::default()).unwrap();
            let err = (b.transverse_action / hard.transverse - 1.0).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last < 0.02, "{last}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn exponent_ratio_is_independent_of_nu(alpha in 0.05f64..1.66, nu1 in 0.5f64..50.0, nu2 in 0.5f64..50.0) {
            let a = hard_wall_action(alpha, nu1).unwrap();
            let b = hard_wall_action(alpha, nu2).unwrap();
            prop_assert!((a.total / a.a_wkb - b.total / b.a_wkb).abs() < 1e-13);
            prop_assert!(a.total >= 0.0 && a.total <= a.a_wkb);
        }

        #[test]
        fn suppression_weakens_toward_resonance(a1 in 0.05f64..1.66, a2 in 0.05f64..1.66, k in 0.5f64..5.0) {
            // raising H at fixed |E| and a moves α up and ν down with να fixed
            let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
            prop_assume!(hi - lo > 1e-6);
            let s = |a: f64| hard_wall_action(a, k / a).unwrap().suppression;
            prop_assert!(s(lo) <= s(hi));
        }

        #[test]
        fn ratio_is_increasing(a1 in 0.01f64..4.0, a2 in 0.01f64..4.0) {
            prop_assume!((a1 - a2).abs() > 1e-9);
            let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
            prop_assert!(resonance_ratio(lo) < resonance_ratio(hi));
        }
    }
}
