//! Goodwin growth cycle with a two-sector stock-flow-consistent closure.
//!
//! Wage share and employment follow a predator-prey pair driven by a linear
//! Phillips curve; output, capital, productivity, wages and population each
//! grow at their own rate. Prices are a markup on unit labour cost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_nu() -> f64 {
    2.89
}
fn default_alpha() -> f64 {
    2.26e-2
}
fn default_q() -> f64 {
    2.7e-2
}
fn default_ceiling() -> f64 {
    7.059e9
}
fn default_delta() -> f64 {
    6.25e-2
}
fn default_phi0() -> f64 {
    -0.73
}
fn default_phi1() -> f64 {
    1.08
}
fn default_markup() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconParams {
    /// Capital-to-output ratio `ν`.
    #[serde(default = "default_nu")]
    pub capital_output_ratio: f64,
    /// Growth rate of labour productivity.
    #[serde(default = "default_alpha")]
    pub productivity_growth: f64,
    /// Speed `q` of the logistic population growth.
    #[serde(default = "default_q")]
    pub population_speed: f64,
    /// Population ceiling `P_N`.
    #[serde(default = "default_ceiling")]
    pub population_ceiling: f64,
    /// Capital depreciation rate `δ`.
    #[serde(default = "default_delta")]
    pub depreciation: f64,
    #[serde(default = "default_phi0")]
    pub phillips_intercept: f64,
    #[serde(default = "default_phi1")]
    pub phillips_slope: f64,
    #[serde(default = "default_markup")]
    pub markup: f64,
    /// Hold the workforce growth rate at this value instead of the logistic law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_population_growth: Option<f64>,
}

impl Default for EconParams {
    fn default() -> Self {
        EconParams {
            capital_output_ratio: default_nu(),
            productivity_growth: default_alpha(),
            population_speed: default_q(),
            population_ceiling: default_ceiling(),
            depreciation: default_delta(),
            phillips_intercept: default_phi0(),
            phillips_slope: default_phi1(),
            markup: default_markup(),
            frozen_population_growth: None,
        }
    }
}

impl EconParams {
    pub fn validate(&self, path: &str) -> Result<()> {
        let bad = |key: &str, reason: &str| Err(Error::invalid(format!("{path}.{key}"), reason));
        if !(self.capital_output_ratio > 0.0) {
            return bad("capital_output_ratio", "must be > 0");
        }
        if !(self.depreciation >= 0.0) {
            return bad("depreciation", "must be >= 0");
        }
        if !(self.phillips_slope > 0.0) {
            return bad("phillips_slope", "must be > 0");
        }
        if !(self.markup > -1.0) {
            return bad("markup", "must be > -1");
        }
        if !(self.population_ceiling > 0.0) {
            return bad("population_ceiling", "must be > 0");
        }
        Ok(())
    }

    /// Workforce growth rate `n` for the given workforce.
    pub fn population_growth(&self, workforce: f64) -> f64 {
        self.frozen_population_growth
            .unwrap_or_else(|| self.population_speed * (1.0 - workforce / self.population_ceiling))
    }
}

/// Short-run Phillips curve `φ(λ) = φ₀ + φ₁·λ`.
pub fn phillips(lambda: f64, params: &EconParams) -> f64 {
    params.phillips_intercept + params.phillips_slope * lambda
}

/// Observed starting point of the economy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconInitial {
    pub omega: f64,
    pub lambda: f64,
    pub workforce: f64,
    pub wage: f64,
    pub output: f64,
}

impl Default for EconInitial {
    /// World economy, 2010 US$.
    fn default() -> Self {
        EconInitial {
            omega: 0.58,
            lambda: 0.69,
            workforce: 4.55e9,
            wage: 11.98,
            output: 64.45e9,
        }
    }
}

impl EconInitial {
    pub fn validate(&self, path: &str) -> Result<()> {
        let fields = [
            ("omega", self.omega),
            ("lambda", self.lambda),
            ("workforce", self.workforce),
            ("wage", self.wage),
            ("output", self.output),
        ];
        for (key, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{path}.{key}"), "must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconState {
    pub omega: f64,
    pub lambda: f64,
    pub workforce: f64,
    pub wage: f64,
    pub output: f64,
    pub capital: f64,
    pub productivity: f64,
}

impl EconState {
    /// Full state from observed values: `a₀ = Y₀ / (λ₀ N₀)` and `K₀ = ν Y₀`.
    pub fn from_initial(init: &EconInitial, params: &EconParams) -> Self {
        EconState {
            omega: init.omega,
            lambda: init.lambda,
            workforce: init.workforce,
            wage: init.wage,
            output: init.output,
            capital: params.capital_output_ratio * init.output,
            productivity: init.output / (init.lambda * init.workforce),
        }
    }

    /// Employed labour `L = λ·N`.
    pub fn labor(&self) -> f64 {
        self.lambda * self.workforce
    }

    pub fn price(&self, params: &EconParams) -> Result<f64> {
        price(self.wage, self.labor(), self.output, params.markup)
    }

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.omega,
            self.lambda,
            self.workforce,
            self.wage,
            self.output,
            self.capital,
            self.productivity,
        ]
    }

    pub fn from_array(v: &[f64]) -> Self {
        EconState {
            omega: v[0],
            lambda: v[1],
            workforce: v[2],
            wage: v[3],
            output: v[4],
            capital: v[5],
            productivity: v[6],
        }
    }

    /// Logs a warning when the state leaves its plausible band. Never fails:
    /// Goodwin trajectories may legitimately overshoot.
    pub fn soft_check(&self, t: f64, params: &EconParams) {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            log::warn!("t = {t}: employment rate {} outside (0, 1]", self.lambda);
        }
        if !(self.omega > 0.0 && self.omega < 1.5) {
            log::warn!("t = {t}: wage share {} outside (0, 1.5)", self.omega);
        }
        if self.workforce > params.population_ceiling {
            log::warn!("t = {t}: workforce above the population ceiling");
        }
    }
}

/// Time derivatives of the economy, in [`EconState::to_array`] order.
///
/// With `delivered_output` set, output and capital accumulation use the
/// delivered output in place of the state's `Y`.
pub fn econ_derivatives(state: &EconState, params: &EconParams, delivered_output: Option<f64>) -> [f64; 7] {
    let y = delivered_output.unwrap_or(state.output);
    let nu = params.capital_output_ratio;
    let alpha = params.productivity_growth;
    let delta = params.depreciation;
    let n = params.population_growth(state.workforce);
    let phi = phillips(state.lambda, params);
    let investment = y * (1.0 - state.omega);
    [
        state.omega * (phi - alpha),
        state.lambda * ((1.0 - state.omega) / nu - alpha - n - delta),
        n * state.workforce,
        state.wage * phi,
        y * ((1.0 - state.omega) / nu - delta),
        investment - delta * state.capital,
        alpha * state.productivity,
    ]
}

/// Markup price `(1 + m)·w·L / Y`.
pub fn price(wage: f64, labor: f64, output: f64, markup: f64) -> Result<f64> {
    if !(output > 0.0) {
        return Err(Error::EconomyCollapsed { output });
    }
    Ok((1.0 + markup) * wage * labor / output)
}

/// Nominal profits `Π = p·Y − w·L` and investment `I = Y·(1 − ω)`.
pub fn profit_and_investment(state: &EconState, params: &EconParams) -> Result<(f64, f64)> {
    let p = state.price(params)?;
    let profit = p * state.output - state.wage * state.labor();
    let investment = state.output * (1.0 - state.omega);
    Ok((profit, investment))
}

/// Interior equilibrium `(ω*, λ*)` of the wage-share/employment pair at a fixed workforce growth `n`.
pub fn goodwin_fixed_point(params: &EconParams, n: f64) -> (f64, f64) {
    let omega = 1.0 - params.capital_output_ratio * (params.productivity_growth + n + params.depreciation);
    let lambda = (params.productivity_growth - params.phillips_intercept) / params.phillips_slope;
    (omega, lambda)
}

/// Conserved quantity of the wage-share/employment pair at fixed `n`:
/// `φ₁(λ − λ* ln λ) + (ω − ω* ln ω)/ν`.
pub fn goodwin_first_integral(omega: f64, lambda: f64, params: &EconParams, n: f64) -> f64 {
    let (w_star, l_star) = goodwin_fixed_point(params, n);
    params.phillips_slope * (lambda - l_star * lambda.ln())
        + (omega - w_star * omega.ln()) / params.capital_output_ratio
}

/// Households/firms transaction flows, nominal, with consumption closed by Say's law.
///
/// Households earn wages and save what they do not consume as deposits.
/// Firms sell consumption and investment goods, pay wages, keep the profit
/// and borrow whatever investment the profit does not cover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransactionMatrix {
    pub consumption: f64,
    pub investment: f64,
    pub wages: f64,
    pub firm_profit: f64,
    pub household_saving: f64,
    pub firm_borrowing: f64,
}

impl TransactionMatrix {
    pub fn of(state: &EconState, params: &EconParams) -> Result<Self> {
        let p = state.price(params)?;
        let (profit, real_investment) = profit_and_investment(state, params)?;
        let investment = p * real_investment;
        let consumption = p * state.output - investment;
        let wages = state.wage * state.labor();
        Ok(TransactionMatrix {
            consumption,
            investment,
            wages,
            firm_profit: profit,
            household_saving: wages - consumption,
            firm_borrowing: investment - profit,
        })
    }

    /// Firms' current account `pC + pI − wL − Π` and the deposits/loans row
    /// `S_h − ΔL`. The consumption, investment and wage rows balance by construction.
    pub fn residuals(&self) -> [f64; 2] {
        [
            self.consumption + self.investment - self.wages - self.firm_profit,
            self.household_saving - self.firm_borrowing,
        ]
    }
}
