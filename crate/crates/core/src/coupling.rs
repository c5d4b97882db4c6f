//! The kernel between the economy and its resource sheets.
//!
//! Output becomes physical demand through the units bridge `κ`, the demand
//! sets a global intensity that is fanned out to every sheet, and whatever the
//! sheets deliver flows back as output. Capital lowers production friction.

use serde::{Deserialize, Serialize};

use crate::economy::EconState;
use crate::error::{Error, Result};
use crate::intensity::{buffered_satisfied_demand, IntensityPolicy};
use crate::sheet::{
    diagnostics, forced_recycling_flows, max_production, natural_recycling, production_flows,
    production_max_intensity, stock_derivatives, FlowReport, Potentials, SheetParams, SheetState,
};

/// Friction left once capital is arbitrarily large.
pub const FRICTION_FLOOR: f64 = 4.0e-5;

/// `R_P = R_P0·K0/K + 4·10⁻⁵`.
pub fn friction_from_capital(capital: f64, initial_capital: f64, base_friction: f64) -> Result<f64> {
    if !(capital > 0.0) {
        return Err(Error::CapitalExhausted { capital });
    }
    Ok(base_friction * initial_capital / capital + FRICTION_FLOOR)
}

/// Physical demand `G_D = κ·Y`.
pub fn demand_from_economy(output: f64, kappa: f64) -> f64 {
    kappa * output
}

/// Output corresponding to a delivered physical flow.
pub fn deliver_to_economy(satisfied: f64, kappa: f64) -> f64 {
    satisfied / kappa
}

/// `κ` such that the initial demand is `fraction` of the initial peak production.
pub fn calibrate_kappa(fraction: f64, delta_mu: f64, friction: f64, output: f64) -> f64 {
    fraction * max_production(delta_mu, friction) / output
}

/// Initial stocks of a sheet; absent fields default to a pristine sheet.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SheetInitial {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_buffer: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SheetConfig {
    pub name: String,
    pub params: SheetParams,
    pub policy: IntensityPolicy,
    #[serde(default, skip_serializing_if = "is_default")]
    pub initial: SheetInitial,
}

fn is_default(init: &SheetInitial) -> bool {
    *init == SheetInitial::default()
}

impl SheetConfig {
    pub fn initial_state(&self) -> SheetState {
        let total = self.params.total;
        let x_low = self.initial.x_low.unwrap_or(0.0);
        let x_buffer = self.initial.x_buffer.unwrap_or(0.0);
        let x_high = self.initial.x_high.unwrap_or(total - x_low - x_buffer);
        SheetState {
            x_high,
            x_low,
            x_buffer,
            intensity: 0.0,
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        self.params.validate(path)?;
        self.policy.validate(&format!("{path}.policy"))?;
        let s = self.initial_state();
        for (key, v) in [("x_high", s.x_high), ("x_low", s.x_low), ("x_buffer", s.x_buffer)] {
            if !(v >= 0.0) {
                return Err(Error::invalid(format!("{path}.initial.{key}"), "must be >= 0"));
            }
        }
        if (s.total() - self.params.total).abs() > 1e-9 * self.params.total {
            return Err(Error::invalid(
                format!("{path}.initial"),
                format!("stocks sum to {} but total is {}", s.total(), self.params.total),
            ));
        }
        Ok(())
    }
}

/// How the units bridge is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kappa {
    /// A pinned value.
    Fixed(f64),
    /// Calibrated at `t = 0` on the lead sheet: initial demand is this fraction of initial peak production.
    DemandFraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingParams {
    pub kappa: Kappa,
    /// Apply the capital friction law; each sheet's `production_friction` is then `R_P0`.
    #[serde(default = "yes")]
    pub capital_friction: bool,
}

fn yes() -> bool {
    true
}

impl CouplingParams {
    pub fn validate(&self, path: &str) -> Result<()> {
        let v = match self.kappa {
            Kappa::Fixed(v) | Kappa::DemandFraction(v) => v,
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("{path}.kappa"), "must be > 0"));
        }
        Ok(())
    }
}

/// Intensities requested from one sheet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetIntensity {
    pub production: f64,
    pub recycling: f64,
}

/// `J_P^D(i) = n_P(i)·J` for each sheet, with the recycling intensity each
/// sheet's policy derives from `J` and its sink potential `mu_lows[i]`.
pub fn fan_out_intensity(global: f64, sheets: &[SheetConfig], mu_lows: &[f64]) -> Vec<SheetIntensity> {
    sheets
        .iter()
        .zip(mu_lows)
        .map(|(s, &mu_low)| SheetIntensity {
            production: s.params.production_coeff * global,
            recycling: s.policy.recycling_intensity(global, mu_low, s.params.recycling_friction),
        })
        .collect()
}

/// Index of the sheet whose policy fixes the global intensity: the first one with `n_P > 0`.
pub fn lead_sheet(sheets: &[SheetConfig]) -> Option<usize> {
    sheets.iter().position(|s| s.params.production_coeff > 0.0)
}

/// Where the physical demand comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DemandSource {
    Constant(f64),
    Economy { kappa: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionLaw {
    pub initial_capital: f64,
}

/// One evaluation of all sheets at a given state.
#[derive(Debug, Clone)]
pub struct KernelTick {
    pub global_intensity: f64,
    /// Demand in resource units of the lead sheet.
    pub demand: f64,
    /// Demand actually served, in the same units; the scarcest sheet binds.
    pub delivered: f64,
    pub reports: Vec<FlowReport>,
    /// Per sheet: `(Ẋ_H, Ẋ_L, Ẋ_S, J̇_P)`.
    pub derivatives: Vec<[f64; 4]>,
}

impl KernelTick {
    pub fn fully_served(&self) -> bool {
        self.delivered >= self.demand
    }
}

#[derive(Debug, Clone)]
pub struct Kernel {
    pub sheets: Vec<SheetConfig>,
    pub demand: DemandSource,
    pub friction_law: Option<FrictionLaw>,
}

impl Kernel {
    fn friction(&self, sheet: &SheetConfig, econ: Option<&EconState>) -> Result<f64> {
        match (self.friction_law, econ) {
            (Some(law), Some(e)) => friction_from_capital(e.capital, law.initial_capital, sheet.params.production_friction),
            _ => Ok(sheet.params.production_friction),
        }
    }

    /// Evaluates every sheet. `dt` caps how fast a buffer may be drawn down.
    pub fn evaluate(&self, states: &[SheetState], econ: Option<&EconState>, dt: f64) -> Result<KernelTick> {
        let demand = match self.demand {
            DemandSource::Constant(d) => d,
            DemandSource::Economy { kappa } => demand_from_economy(econ.map_or(0.0, |e| e.output), kappa),
        };
        let states: Vec<SheetState> = self.sheets.iter().zip(states).map(|(c, s)| s.clamped(c.params.total)).collect();
        let potentials = self
            .sheets
            .iter()
            .zip(&states)
            .map(|(c, s)| Potentials::of(s, &c.params))
            .collect::<Result<Vec<_>>>()?;
        let frictions = self
            .sheets
            .iter()
            .map(|c| self.friction(c, econ))
            .collect::<Result<Vec<_>>>()?;

        let lead = lead_sheet(&self.sheets);
        let global = match lead {
            Some(i) => {
                let c = &self.sheets[i];
                c.policy.production_intensity(potentials[i].gap(), frictions[i], demand) / c.params.production_coeff
            }
            None => 0.0,
        };
        let lead_coeff = lead.map_or(1.0, |i| self.sheets[i].params.production_coeff);
        let mu_lows: Vec<f64> = potentials.iter().map(|p| p.low).collect();
        let requested = fan_out_intensity(global, &self.sheets, &mu_lows);

        let mut reports = Vec::with_capacity(self.sheets.len());
        let mut derivatives = Vec::with_capacity(self.sheets.len());
        let mut delivered = demand;
        for (i, c) in self.sheets.iter().enumerate() {
            let (pot, friction, state) = (potentials[i], frictions[i], &states[i]);
            let tau = c.params.response_time;
            let (j_p, d_intensity) = if tau > 0.0 {
                (state.intensity, (requested[i].production - state.intensity) / tau)
            } else {
                (requested[i].production, 0.0)
            };
            let j_r = requested[i].recycling;
            let prod = production_flows(pot, friction, j_p);
            let rec = forced_recycling_flows(pot, c.params.recycling_friction, j_r)?;
            let natural = natural_recycling(state.x_high, &c.params);
            let share = c.params.production_coeff / lead_coeff;
            let g_demand = share * demand;
            let g_satisfied = buffered_satisfied_demand(prod.work, g_demand, state.x_buffer, dt);
            if share > 0.0 && g_satisfied < g_demand {
                delivered = delivered.min(g_satisfied.max(0.0) / share);
            }
            let d = stock_derivatives(&prod, &rec, natural, g_satisfied);
            derivatives.push([d[0], d[1], d[2], d_intensity]);
            let diag = diagnostics(pot, friction, j_p);
            reports.push(FlowReport {
                mu_high: pot.high,
                mu_low: pot.low,
                j_p,
                j_p_max: production_max_intensity(pot.gap(), friction),
                j_r,
                friction,
                f_hp: prod.inflow,
                f_lp: prod.outflow,
                g: prod.work,
                f_hr: rec.returned,
                f_lr: rec.intake,
                f_rin: rec.drive,
                f_nr: natural,
                g_demand,
                g_satisfied,
                eta: diag.eta,
                epsilon: diag.epsilon,
                s_dot: diag.s_dot,
                e_hp_dot: diag.e_hp_dot,
                s_hp_dot: diag.s_hp_dot,
                s_lp_dot: diag.s_lp_dot,
            });
        }
        Ok(KernelTick {
            global_intensity: global,
            demand,
            delivered,
            reports,
            derivatives,
        })
    }
}
