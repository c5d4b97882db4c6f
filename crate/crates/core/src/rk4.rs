//! Classic fixed-step fourth-order Runge-Kutta.

use crate::error::Result;

/// A first-order system `y' = f(t, y)` over a flat state vector.
pub trait OdeSystem {
    fn dimension(&self) -> usize;

    fn derivative(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

/// Reusable RK4 scratch space for one system dimension.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(dimension: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dimension],
            k2: vec![0.0; dimension],
            k3: vec![0.0; dimension],
            k4: vec![0.0; dimension],
            stage: vec![0.0; dimension],
        }
    }

    /// Advances `y` from `t` to `t + dt` in place.
    pub fn step<S: OdeSystem + ?Sized>(&mut self, system: &S, t: f64, y: &mut [f64], dt: f64) -> Result<()> {
        let half = 0.5 * dt;
        system.derivative(t, y, &mut self.k1)?;
        for i in 0..y.len() {
            self.stage[i] = y[i] + half * self.k1[i];
        }
        system.derivative(t + half, &self.stage, &mut self.k2)?;
        for i in 0..y.len() {
            self.stage[i] = y[i] + half * self.k2[i];
        }
        system.derivative(t + half, &self.stage, &mut self.k3)?;
        for i in 0..y.len() {
            self.stage[i] = y[i] + dt * self.k3[i];
        }
        system.derivative(t + dt, &self.stage, &mut self.k4)?;
        for i in 0..y.len() {
            y[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}
