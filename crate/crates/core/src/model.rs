//! Material parameters and the AT1/AT2 phase-field model catalogue.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    /// Young's modulus (kN/mm²).
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// Critical energy release rate (kN/mm).
    pub toughness: f64,
    /// Internal length l0 (mm).
    pub length_scale: f64,
    /// Residual stiffness η.
    #[serde(default = "default_eta")]
    pub residual_stiffness: f64,
}

fn default_eta() -> f64 {
    1e-8
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: &str| {
            Err(Error::Config {
                path: format!("material.{path}"),
                message: message.into(),
            })
        };
        if !(self.youngs_modulus > 0.0) {
            return bad("youngs_modulus", "must be positive");
        }
        if !(self.poisson_ratio >= 0.0 && self.poisson_ratio < 0.5) {
            return bad("poisson_ratio", "must lie in [0, 0.5)");
        }
        if !(self.toughness > 0.0) {
            return bad("toughness", "must be positive");
        }
        if !(self.length_scale > 0.0) {
            return bad("length_scale", "must be positive");
        }
        if !(self.residual_stiffness > 0.0 && self.residual_stiffness < 1e-2) {
            return bad("residual_stiffness", "must lie in (0, 1e-2)");
        }
        Ok(())
    }

    pub fn mu(&self) -> f64 {
        self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    /// Plane-strain Lamé parameter.
    pub fn lambda(&self) -> f64 {
        let (e, nu) = (self.youngs_modulus, self.poisson_ratio);
        e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    }

    /// Two-dimensional bulk modulus `λ + μ`.
    pub fn bulk(&self) -> f64 {
        self.lambda() + self.mu()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    At1,
    At2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Order {
    #[serde(rename = "2", alias = "II")]
    Second,
    #[serde(rename = "4", alias = "IV")]
    Fourth,
}

/// Dissipation density `c_d d^β + c_g |∇d|² + c_l (Δd)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub family: Family,
    pub order: Order,
    pub beta: u32,
    pub c_d: f64,
    pub c_g: f64,
    pub c_l: f64,
}

/// Normalisation constant of the fourth-order AT1 profile.
pub const AT1_C_RHO: f64 = 4.4485;
/// Weight of the Laplacian term in the fourth-order AT1 model.
pub const AT1_RHO: f64 = 1.0;

impl ModelSpec {
    pub fn new(family: Family, order: Order, l0: f64) -> Self {
        let (beta, c_d, c_g, c_l) = match (family, order) {
            (Family::At2, Order::Second) => (2, 1.0 / (2.0 * l0), l0 / 2.0, 0.0),
            (Family::At2, Order::Fourth) => (2, 1.0 / (2.0 * l0), l0 / 4.0, l0.powi(3) / 32.0),
            (Family::At1, Order::Second) => (1, 3.0 / (8.0 * l0), 3.0 * l0 / 8.0, 0.0),
            (Family::At1, Order::Fourth) => (
                1,
                1.0 / (AT1_C_RHO * l0),
                l0 / AT1_C_RHO,
                AT1_RHO * l0.powi(3) / AT1_C_RHO,
            ),
        };
        Self {
            family,
            order,
            beta,
            c_d,
            c_g,
            c_l,
        }
    }

    pub fn dissipation_density(&self, d: f64, grad_sq: f64, lap: f64) -> f64 {
        self.c_d * d.powi(self.beta as i32) + self.c_g * grad_sq + self.c_l * lap * lap
    }
}

/// `ω(d) = (1 − d)² + η`.
pub fn degradation(d: f64, eta: f64) -> f64 {
    (1.0 - d) * (1.0 - d) + eta
}

pub fn degradation_derivative(d: f64) -> f64 {
    -2.0 * (1.0 - d)
}
