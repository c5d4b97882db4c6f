//! Choosing how hard a sheet runs.
//!
//! Meeting a demand `G_D` means solving `−R_P·J² + Δμ·J − G_D = 0`. The lower
//! root wastes less; when no root exists the sheet falls back to the peak of
//! the production parabola.

use serde::{Deserialize, Serialize};

use crate::sheet::{production_max_intensity, recycling_max_intensity};

/// Relative tolerance on the discriminant for reporting a double root.
pub const TANGENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DemandRoots {
    /// Two real roots, ascending.
    TwoRoots(f64, f64),
    Tangent(f64),
    Infeasible,
}

/// Real roots of `−R_P·J² + Δμ·J − G_D = 0`.
///
/// The larger-magnitude root is formed first and the other one recovered from
/// the product of roots `G_D / R_P`, which keeps the small root accurate when
/// `G_D` is far below the peak.
pub fn solve_demand_intensity(delta_mu: f64, friction: f64, demand: f64) -> DemandRoots {
    let disc = delta_mu * delta_mu - 4.0 * friction * demand;
    let scale = (delta_mu * delta_mu).max(4.0 * friction * demand.abs());
    if disc.abs() <= TANGENT_TOLERANCE * scale {
        return DemandRoots::Tangent(delta_mu / (2.0 * friction));
    }
    if disc < 0.0 {
        return DemandRoots::Infeasible;
    }
    let q = 0.5 * (delta_mu + delta_mu.signum() * disc.sqrt());
    let big = q / friction;
    let small = if q == 0.0 { 0.0 } else { demand / q };
    if small <= big {
        DemandRoots::TwoRoots(small, big)
    } else {
        DemandRoots::TwoRoots(big, small)
    }
}

/// Demand-meeting intensity with the least waste, capped at the production peak.
///
/// Falls back to `J_P^max = Δμ / (2 R_P)` when the demand cannot be met.
pub fn optimal_intensity(delta_mu: f64, friction: f64, demand: f64) -> f64 {
    let peak = production_max_intensity(delta_mu, friction);
    if delta_mu <= 0.0 {
        return 0.0;
    }
    match solve_demand_intensity(delta_mu, friction, demand) {
        DemandRoots::TwoRoots(lo, hi) => {
            let lower = if lo >= 0.0 { lo } else { hi.max(0.0) };
            lower.min(peak)
        }
        DemandRoots::Tangent(_) | DemandRoots::Infeasible => peak,
    }
}

/// Exact update of the first-order lag `τ·J̇ = J^D − J` over one step.
pub fn lag_intensity(current: f64, demanded: f64, tau: f64, dt: f64) -> f64 {
    if tau == 0.0 {
        return demanded;
    }
    demanded + (current - demanded) * (-dt / tau).exp()
}

/// Rationed demand: the full demand when supply covers it or the buffer is
/// non-empty, otherwise whatever is produced.
pub fn satisfied_demand(work: f64, demand: f64, buffer: f64) -> f64 {
    if work - demand > 0.0 || buffer > 0.0 {
        demand
    } else {
        work
    }
}

/// [`satisfied_demand`] with the buffer draw `G_D − G` capped at `X_S / dt`,
/// so a step of length `dt` cannot take more than the buffer holds.
pub fn buffered_satisfied_demand(work: f64, demand: f64, buffer: f64, dt: f64) -> f64 {
    if work - demand > 0.0 || buffer <= 0.0 {
        return satisfied_demand(work, demand, buffer);
    }
    work + (demand - work).min(buffer / dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductionMode {
    /// Always run at the production peak `J_P^max`.
    MaxIntensity,
    /// [`optimal_intensity`].
    Optimal,
    /// A fixed fraction of [`optimal_intensity`].
    FractionOfOptimal(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecyclingMode {
    /// Recycle at `J_R^max = μ_L / (2 R_R)`.
    AtMax,
    /// `J_R = n_R · J`, clamped to `[0, J_R^max]`.
    Proportional(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensityPolicy {
    pub production: ProductionMode,
    pub recycling: RecyclingMode,
}

impl IntensityPolicy {
    pub fn new(production: ProductionMode, recycling: RecyclingMode) -> Self {
        IntensityPolicy { production, recycling }
    }

    /// Production intensity for the given gap, friction and demand.
    pub fn production_intensity(&self, delta_mu: f64, friction: f64, demand: f64) -> f64 {
        match self.production {
            ProductionMode::MaxIntensity => production_max_intensity(delta_mu, friction),
            ProductionMode::Optimal => optimal_intensity(delta_mu, friction, demand),
            ProductionMode::FractionOfOptimal(f) => f * optimal_intensity(delta_mu, friction, demand),
        }
    }

    /// Recycling intensity given the global intensity and the sink potential.
    pub fn recycling_intensity(&self, global: f64, mu_low: f64, friction: f64) -> f64 {
        let cap = recycling_max_intensity(mu_low.max(0.0), friction);
        match self.recycling {
            RecyclingMode::AtMax => cap,
            RecyclingMode::Proportional(n) => (n * global).clamp(0.0, cap),
        }
    }

    pub fn validate(&self, path: &str) -> crate::Result<()> {
        if let ProductionMode::FractionOfOptimal(f) = self.production {
            if !(f > 0.0 && f <= 1.0) {
                return Err(crate::Error::invalid(
                    format!("{path}.production.fraction_of_optimal"),
                    "must lie in (0, 1]",
                ));
            }
        }
        if let RecyclingMode::Proportional(n) = self.recycling {
            if !(n.is_finite() && n >= 0.0) {
                return Err(crate::Error::invalid(
                    format!("{path}.recycling.proportional"),
                    "must be >= 0",
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sheet::{production_flows, Potentials};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn residual(delta_mu: f64, friction: f64, demand: f64, j: f64) -> f64 {
        -friction * j * j + delta_mu * j - demand
    }

    // Bisection on the residual over [lo, hi] where it changes sign.
    fn bisect(delta_mu: f64, friction: f64, demand: f64, mut lo: f64, mut hi: f64) -> f64 {
        let f_lo = residual(delta_mu, friction, demand, lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(delta_mu, friction, demand, mid).signum() == f_lo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn roots_match_bisection() {
        let (dm, r, gd) = (1.0, 1e-3, 30.0);
        let vertex = dm / (2.0 * r);
        let lo_oracle = bisect(dm, r, gd, 0.0, vertex);
        let hi_oracle = bisect(dm, r, gd, vertex, dm / r);
        // frozen from the oracle
        assert!((lo_oracle - 30.958).abs() < 1e-3);
        assert!((hi_oracle - 969.042).abs() < 1e-3);
        match solve_demand_intensity(dm, r, gd) {
            DemandRoots::TwoRoots(lo, hi) => {
                assert_relative_eq!(lo, lo_oracle, max_relative = 1e-12);
                assert_relative_eq!(hi, hi_oracle, max_relative = 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn root_edge_cases() {
        assert_eq!(solve_demand_intensity(1.0, 1e-3, 0.0), DemandRoots::TwoRoots(0.0, 1000.0));
        assert_eq!(solve_demand_intensity(1.0, 1e-3, 251.0), DemandRoots::Infeasible);
        assert_eq!(solve_demand_intensity(1.0, 1e-3, 250.0), DemandRoots::Tangent(500.0));
    }

    #[test]
    fn optimal_examples() {
        assert!((optimal_intensity(1.0, 1e-3, 30.0) - 30.958).abs() < 1e-3);
        assert_eq!(optimal_intensity(1.0, 1e-3, 400.0), 500.0);
        assert_eq!(optimal_intensity(1.0, 1e-3, 250.0), 500.0);
        assert_eq!(optimal_intensity(-0.1, 1e-3, 30.0), 0.0);
    }

    #[test]
    fn lag_examples() {
        assert_eq!(lag_intensity(3.0, 100.0, 0.0, 1.0), 100.0);
        assert_eq!(lag_intensity(100.0, 100.0, 2.0, 0.5), 100.0);

        // fine-step Euler oracle for τ J' = J^D − J
        let (mut j, h) = (0.0f64, 1e-6);
        for _ in 0..1_000_000 {
            j += h * (100.0 - j);
        }
        let exact = lag_intensity(0.0, 100.0, 1.0, 1.0);
        assert!((j - exact).abs() < 1e-3);
        assert!((exact - 63.212).abs() < 1e-3);
    }

    #[test]
    fn rationing_examples() {
        assert_eq!(satisfied_demand(50.0, 30.0, 0.0), 30.0);
        assert_eq!(satisfied_demand(10.0, 30.0, 5.0), 30.0);
        assert_eq!(satisfied_demand(10.0, 30.0, 0.0), 10.0);
        // buffer of 5 can cover at most 5/dt over one step
        assert_eq!(buffered_satisfied_demand(10.0, 30.0, 5.0, 1.0), 15.0);
        assert_eq!(buffered_satisfied_demand(10.0, 30.0, 5.0, 0.01), 30.0);
    }

    #[test]
    fn policy_modes() {
        let max = IntensityPolicy::new(ProductionMode::MaxIntensity, RecyclingMode::AtMax);
        assert_eq!(max.production_intensity(1.0, 1e-3, 30.0), 500.0);
        let weak = IntensityPolicy::new(ProductionMode::FractionOfOptimal(0.2), RecyclingMode::Proportional(0.5));
        assert_relative_eq!(
            weak.production_intensity(1.0, 1e-3, 30.0),
            0.2 * optimal_intensity(1.0, 1e-3, 30.0)
        );
        assert_eq!(weak.recycling_intensity(100.0, 0.3, 1e-3), 50.0);
        assert_eq!(weak.recycling_intensity(1000.0, 0.3, 1e-3), 150.0);
        assert!(IntensityPolicy::new(ProductionMode::FractionOfOptimal(0.0), RecyclingMode::AtMax)
            .validate("p")
            .is_err());
    }

    proptest! {
        #[test]
        fn roots_have_small_residual(dm in 1e-3f64..1.0, log_r in -5.0f64..0.0, frac in 0.0f64..1.0) {
            let r = 10f64.powf(log_r);
            let gd = frac * dm * dm / (4.0 * r);
            let tol = 1e-9 * gd.max(1.0);
            match solve_demand_intensity(dm, r, gd) {
                DemandRoots::TwoRoots(lo, hi) => {
                    prop_assert!(lo <= hi);
                    prop_assert!(residual(dm, r, gd, lo).abs() < tol);
                    prop_assert!(residual(dm, r, gd, hi).abs() < tol);
                }
                DemandRoots::Tangent(j) => prop_assert!(residual(dm, r, gd, j).abs() < tol),
                DemandRoots::Infeasible => prop_assert!(false, "feasible demand reported infeasible"),
            }
        }

        #[test]
        fn optimal_wastes_less(dm in 0.05f64..1.0, log_r in -5.0f64..-1.0, frac in 0.01f64..0.99) {
            let r = 10f64.powf(log_r);
            let gd = frac * dm * dm / (4.0 * r);
            let j = optimal_intensity(dm, r, gd);
            prop_assert!(j <= production_max_intensity(dm, r));
            if let DemandRoots::TwoRoots(_, hi) = solve_demand_intensity(dm, r, gd) {
                let p = Potentials { high: dm, low: 0.0 };
                prop_assert!(production_flows(p, r, j).outflow <= production_flows(p, r, hi).outflow);
            }
        }

        #[test]
        fn lag_contracts(cur in -1e3f64..1e3, target in -1e3f64..1e3, tau in 1e-3f64..10.0, dt in 1e-4f64..10.0) {
            let next = lag_intensity(cur, target, tau, dt);
            prop_assert!((next - target).abs() <= (cur - target).abs());
        }

        #[test]
        fn rationing_never_exceeds_demand(g in 0.0f64..100.0, gd in 0.0f64..100.0, xs in 0.0f64..10.0) {
            let s = satisfied_demand(g, gd, xs);
            prop_assert!(s <= gd);
            if xs == 0.0 && g < gd {
                prop_assert_eq!(s, g);
            }
        }
    }
}
