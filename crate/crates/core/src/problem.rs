//! Problem data: domain, coefficient fields and the optional initial state.

use crate::error::Result;
use crate::expr::Expression;
use crate::field::VectorFieldSpec;
use crate::geom::{DomainRect, Point};

/// `u_t - mu Lap u + beta . grad u + sigma u = f` on a rectangle with
/// homogeneous Dirichlet data.
#[derive(Debug, Clone)]
pub struct Problem {
    pub domain: DomainRect,
    pub mu: Expression,
    pub sigma: Expression,
    pub field: VectorFieldSpec,
    pub source: Expression,
    /// Initial state. When absent the run starts from the stationary
    /// solution of the along-flow problem.
    pub initial: Option<Expression>,
}

/// Coefficient values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCoefficients {
    pub mu: f64,
    pub sigma: f64,
    pub speed: f64,
    pub source: f64,
}

impl Problem {
    pub fn coefficients(&self, at: Point) -> Result<PointCoefficients> {
        Ok(PointCoefficients {
            mu: self.mu.evaluate(at.x, at.y)?,
            sigma: self.sigma.evaluate(at.x, at.y)?,
            speed: self.field.speed(at)?,
            source: self.source.evaluate(at.x, at.y)?,
        })
    }

    /// Diffusion or reaction given as a function of position rather than a
    /// constant.
    pub fn has_variable_mu_or_sigma(&self) -> bool {
        !self.mu.is_constant() || !self.sigma.is_constant()
    }
}
