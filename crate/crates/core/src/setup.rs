//! Physical inputs, their reduction to the dimensionless parameters used by
//! every other module, and the semiclassical validity checks.
//!
//! Internally lengths are measured in cyclotron lengths `L` and energies in
//! `|E|`. The formulas here use Gaussian-style electrodynamics
//! (`ω_c = |e| H / m c`); SI inputs work unchanged with `c = 1`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{positive, Error, Result};

/// Fundamental constants of the unit system the inputs are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub hbar: f64,
    pub c: f64,
}

impl Constants {
    /// ħ = c = 1.
    pub const NATURAL: Constants = Constants { hbar: 1.0, c: 1.0 };

    /// Gaussian CGS: erg·s and cm/s. Fields in gauss.
    pub const GAUSSIAN: Constants = Constants {
        hbar: 1.054_571_817e-27,
        c: 2.997_924_58e10,
    };

    /// SI with the speed of light absorbed into the field unit (tesla), so
    /// the Gaussian formulas hold with `c = 1`.
    pub const SI: Constants = Constants {
        hbar: 1.054_571_817e-34,
        c: 1.0,
    };
}

/// Dimensional description of one tunneling problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSetup {
    /// |E|, the binding energy of the state under the barrier.
    pub energy: f64,
    pub mass: f64,
    /// |e|
    pub charge: f64,
    /// Wall half-width `a` of `u(y) = u0 (y/a)^{4N}`.
    pub wall_half_width: f64,
    /// Magnetic field H along z.
    pub field: f64,
    pub wall_strength: f64,
    pub wall_exponent: u32,
    pub constants: Constants,
}

impl PhysicalSetup {
    pub fn cyclotron_frequency(&self) -> f64 {
        self.charge * self.field / (self.mass * self.constants.c)
    }

    /// Superconducting-type flux quantum `π c ħ / |e|`.
    pub fn flux_quantum(&self) -> f64 {
        PI * self.constants.c * self.constants.hbar / self.charge
    }

    fn check_inputs(&self) -> Result<()> {
        positive("energy", self.energy)?;
        positive("mass", self.mass)?;
        positive("charge", self.charge)?;
        positive("a", self.wall_half_width)?;
        positive("u0", self.wall_strength)?;
        positive("hbar", self.constants.hbar)?;
        positive("c", self.constants.c)?;
        if self.wall_exponent == 0 {
            return Err(Error::domain("N", 0.0, "wall exponent must be >= 1"));
        }
        if !self.field.is_finite() || self.field < 0.0 {
            return Err(Error::domain("H", self.field, "must be finite and >= 0"));
        }
        if self.field == 0.0 {
            return Err(Error::FlatField);
        }
        Ok(())
    }
}

/// Dimensionless parameters derived from a [`PhysicalSetup`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensionless {
    /// a / L
    pub alpha: f64,
    /// 2|E| / ħω_c, the semiclassical parameter.
    pub nu: f64,
    /// H a² / Φ₀
    pub flux_count: f64,
    /// L = sqrt(2|E| / m ω_c²), physical units.
    pub cyclotron_length: f64,
    /// l = sqrt(ħ / m ω_c), physical units.
    pub magnetic_length: f64,
    /// Δx in units of L.
    pub period: f64,
    /// δ = l² / a, physical units.
    pub vortex_core: f64,
    /// u0 / |E|
    pub wall_energy_ratio: f64,
    pub wall_exponent: u32,
}

/// Structure period `Δx = 2 sqrt(α(2+α))` in units of L.
pub fn period(alpha: f64) -> f64 {
    2.0 * (alpha * (2.0 + alpha)).sqrt()
}

/// Vortex-core width δ = l²/a in units of L.
pub fn vortex_core(alpha: f64, nu: f64) -> f64 {
    1.0 / (alpha * nu)
}

impl Dimensionless {
    /// Δx / a, the structure period in wall half-widths.
    pub fn period_over_wall(&self) -> f64 {
        self.period / self.alpha
    }

    pub fn vortex_core_over_l(&self) -> f64 {
        self.vortex_core / self.cyclotron_length
    }

    /// Rebuilds the physical setup given the quantities the reduction
    /// eliminates (mass, charge and the unit system).
    pub fn to_physical(&self, mass: f64, charge: f64, constants: Constants) -> PhysicalSetup {
        let omega = constants.hbar / (mass * self.magnetic_length * self.magnetic_length);
        let energy = 0.5 * self.nu * constants.hbar * omega;
        PhysicalSetup {
            energy,
            mass,
            charge,
            wall_half_width: self.alpha * self.cyclotron_length,
            field: mass * constants.c * omega / charge,
            wall_strength: self.wall_energy_ratio * energy,
            wall_exponent: self.wall_exponent,
            constants,
        }
    }
}

/// Reduces a physical setup to dimensionless form.
pub fn derive_dimensionless(setup: &PhysicalSetup) -> Result<Dimensionless> {
    setup.check_inputs()?;
    let hbar = setup.constants.hbar;
    let omega = setup.cyclotron_frequency();
    let magnetic_length = (hbar / (setup.mass * omega)).sqrt();
    let cyclotron_length = (2.0 * setup.energy / setup.mass).sqrt() / omega;
    let alpha = setup.wall_half_width / cyclotron_length;
    Ok(Dimensionless {
        alpha,
        nu: 2.0 * setup.energy / (hbar * omega),
        flux_count: setup.field * setup.wall_half_width * setup.wall_half_width / setup.flux_quantum(),
        cyclotron_length,
        magnetic_length,
        period: period(alpha),
        vortex_core: magnetic_length * magnetic_length / setup.wall_half_width,
        wall_energy_ratio: setup.wall_strength / setup.energy,
        wall_exponent: setup.wall_exponent,
    })
}

/// How strictly "≪" is read: `small ≪ large` passes when the ratio is at
/// most `much_less`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub much_less: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { much_less: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
}

/// One "small ≪ large" condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub description: &'static str,
    /// small / large
    pub ratio: f64,
    /// large / small, i.e. how many times the condition is satisfied.
    pub margin: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub threshold: f64,
    pub conditions: Vec<Condition>,
}

impl ValidityReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.status == Status::Pass)
    }

    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn condition(name: &'static str, description: &'static str, ratio: f64, t: Thresholds) -> Condition {
    let status = if ratio.is_finite() && ratio >= 0.0 && ratio <= t.much_less {
        Status::Pass
    } else {
        Status::Warn
    };
    Condition {
        name,
        description,
        ratio,
        margin: 1.0 / ratio,
        status,
    }
}

/// Checks the semiclassical conditions. Never fails; inputs that make a
/// ratio undefined produce a warning.
pub fn validate(setup: &PhysicalSetup) -> ValidityReport {
    validate_with(setup, Thresholds::default())
}

pub fn validate_with(setup: &PhysicalSetup, t: Thresholds) -> ValidityReport {
    let hbar = setup.constants.hbar;
    let a = setup.wall_half_width;
    let omega = setup.cyclotron_frequency();
    let l = (hbar / (setup.mass * omega)).sqrt();
    let n = setup.field * a * a / setup.flux_quantum();
    ValidityReport {
        threshold: t.much_less,
        conditions: vec![
            condition(
                "confinement_energy",
                "hbar^2/(m a^2) << |E|",
                hbar * hbar / (setup.mass * a * a) / setup.energy,
                t,
            ),
            condition("magnetic_length", "l << a", l / a, t),
            condition(
                "cyclotron_energy",
                "hbar w_c << |E|",
                hbar * omega / setup.energy,
                t,
            ),
            condition("wall_steepness", "N << n", setup.wall_exponent as f64 / n, t),
        ],
    }
}
