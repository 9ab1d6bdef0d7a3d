//! Heteroclinic connections between the wells: quadrature on the axis,
//! geometric-action string minimization, shooting, closed-form actions,
//! equal-action crossings and geometric diagnostics.

mod action;
mod closed_form;
mod crossing;
mod geometry;
mod scalar;
mod shooting;
mod string;

use serde::{Deserialize, Serialize};

pub use action::{
    equipartition_residual, geometric_action, lagrangian_action, min_pole_distance, ode_residual,
    reparametrize_equipartition, ZERO_W,
};
pub use closed_form::{closed_form_actions, eps1_star, ActionFormulas, ActionSource};
pub use crossing::w2_families;
pub use crossing::{
    find_crossing, quadrature_actions, CrossingMode, CrossingProbe, CrossingResult, CROSSING_WIDTH,
};
pub use geometry::{
    geometry_report, implicit_function, implicit_report, implicit_residual, implicit_zero_set,
    GeometryReport, ImplicitForm, ImplicitReport, CONVEXITY_TOL, ZERO_SET_BOX,
};
pub use scalar::{scalar_connection, scalar_profile_at};
pub use shooting::{shoot_connections, RootInfo, ScanPoint, ShootOptions, ShootReport};
pub use string::{ellipse_init, minimize_path, StringOptions};

use crate::error::Result;
use crate::path::{Classification, Path};
use crate::potential::{Potential, PotentialSpec};

/// A connection with its action and self-consistency diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectionResult {
    /// Nodes with equipartition abscissae.
    pub path: Path,
    /// Geometric action.
    pub action: f64,
    pub lagrangian_action: f64,
    pub equipartition_residual: f64,
    /// Max of `W` along the path, the scale of the equipartition residual.
    pub max_w: f64,
    pub ode_residual: f64,
    /// Max of `|W_u|` along the path, the scale of the ODE residual.
    pub max_grad_w: f64,
    /// Residual of the printed implicit trajectory equation (zero on the axis).
    pub implicit_residual: f64,
    pub min_pole_distance: f64,
    /// Set when an off-axis initial curve relaxed onto the axis.
    pub collapsed: bool,
    /// Crossing height `theta_2(0)` for results found by shooting.
    pub shooting_height: Option<f64>,
}

/// JSON summary without the node arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSummary {
    pub classification: Classification,
    pub action: f64,
    pub lagrangian_action: f64,
    pub equipartition_residual: f64,
    pub max_w: f64,
    pub ode_residual: f64,
    pub max_grad_w: f64,
    pub implicit_residual: f64,
    pub min_pole_distance: f64,
    pub collapsed: bool,
    pub shooting_height: Option<f64>,
    pub nodes: usize,
}

impl ConnectionResult {
    /// Reparametrizes a geometric curve and computes every diagnostic.
    pub fn from_curve(spec: &PotentialSpec, curve: Path) -> Result<Self> {
        let path = reparametrize_equipartition(spec, &curve)?;
        Self::from_parametrized(spec, path)
    }

    pub fn from_parametrized(spec: &PotentialSpec, path: Path) -> Result<Self> {
        let action = geometric_action(spec, &path);
        let lagrangian_action = lagrangian_action(spec, &path)?;
        let (equipartition_residual, max_w) = equipartition_residual(spec, &path)?;
        let (ode_residual, max_grad_w) = ode_residual(spec, &path)?;
        let implicit_residual = implicit_residual(spec, &path, ImplicitForm::Printed);
        let min_pole_distance = min_pole_distance(spec, &path.nodes);
        Ok(Self {
            path,
            action,
            lagrangian_action,
            equipartition_residual,
            max_w,
            ode_residual,
            max_grad_w,
            implicit_residual,
            min_pole_distance,
            collapsed: false,
            shooting_height: None,
        })
    }

    /// Image under `u2 -> -u2`.
    pub fn mirror(&self) -> Self {
        let mut out = self.clone();
        out.path = self.path.mirror();
        out.shooting_height = self.shooting_height.map(|c| -c);
        out
    }

    pub fn classification(&self) -> Classification {
        self.path.classification
    }

    pub fn summary(&self) -> ConnectionSummary {
        ConnectionSummary {
            classification: self.path.classification,
            action: self.action,
            lagrangian_action: self.lagrangian_action,
            equipartition_residual: self.equipartition_residual,
            max_w: self.max_w,
            ode_residual: self.ode_residual,
            max_grad_w: self.max_grad_w,
            implicit_residual: self.implicit_residual,
            min_pole_distance: self.min_pole_distance,
            collapsed: self.collapsed,
            shooting_height: self.shooting_height,
            nodes: self.path.len(),
        }
    }

    /// The self-consistency tolerances every accepted connection meets.
    pub fn consistency(&self, spec: &PotentialSpec) -> Consistency {
        let mirror_gap = (geometric_action(spec, &self.path.mirror()) - self.action).abs();
        Consistency {
            equipartition_ok: self.equipartition_residual <= 1e-3 * self.max_w,
            ode_ok: self.ode_residual <= 1e-2 * self.max_grad_w,
            mirror_gap,
            mirror_ok: mirror_gap <= 1e-8,
            action_gap: (self.lagrangian_action - self.action).abs() / self.action.max(1e-300),
            action_ok: (self.lagrangian_action - self.action).abs() <= 1e-3 * self.action,
            poles_ok: self.min_pole_distance > spec.mollify_radius(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub equipartition_ok: bool,
    pub ode_ok: bool,
    pub mirror_gap: f64,
    pub mirror_ok: bool,
    /// Relative geometric-vs-Lagrangian action gap.
    pub action_gap: f64,
    pub action_ok: bool,
    pub poles_ok: bool,
}

impl Consistency {
    pub fn all_ok(&self) -> bool {
        self.equipartition_ok && self.ode_ok && self.mirror_ok && self.action_ok && self.poles_ok
    }
}
