//! Time stepping of the joint sheet/economy system.
//!
//! State layout in the flat RK4 vector: four slots per sheet
//! `(X_H, X_L, X_S, J_P)` followed by the seven economy slots of
//! [`EconState::to_array`] when an economy is present.

use serde::{Deserialize, Serialize};

use crate::coupling::{deliver_to_economy, DemandSource, Kernel, KernelTick};
use crate::economy::{econ_derivatives, profit_and_investment, EconParams, EconState};
use crate::error::{Error, Result};
use crate::rk4::{OdeSystem, Rk4};
use crate::sheet::{FlowReport, SheetState};

/// Stocks may dip this far below zero (relative to `X_T`) before a step is rejected.
pub const CLAMP_TOLERANCE: f64 = 1e-6;

const SHEET_SLOTS: usize = 4;
const ECON_SLOTS: usize = 7;

/// Everything needed to evaluate the vector field.
#[derive(Debug, Clone)]
pub struct Model {
    pub kernel: Kernel,
    pub economy: Option<EconParams>,
}

impl Model {
    fn kappa(&self) -> Option<f64> {
        match self.kernel.demand {
            DemandSource::Economy { kappa } => Some(kappa),
            DemandSource::Constant(_) => None,
        }
    }

    fn dimension(&self) -> usize {
        SHEET_SLOTS * self.kernel.sheets.len() + if self.economy.is_some() { ECON_SLOTS } else { 0 }
    }

    /// Output the economy runs on: its own `Y` when fully served, the delivered output otherwise.
    fn delivered_output(&self, tick: &KernelTick) -> Option<f64> {
        match self.kappa() {
            Some(kappa) if !tick.fully_served() => Some(deliver_to_economy(tick.delivered.max(0.0), kappa)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub sheets: Vec<SheetState>,
    pub econ: Option<EconState>,
}

impl SimState {
    fn pack(&self, y: &mut Vec<f64>) {
        y.clear();
        for s in &self.sheets {
            y.extend_from_slice(&[s.x_high, s.x_low, s.x_buffer, s.intensity]);
        }
        if let Some(e) = &self.econ {
            y.extend_from_slice(&e.to_array());
        }
    }

    fn unpack(y: &[f64], n_sheets: usize, has_econ: bool, t: f64) -> Self {
        let sheets = (0..n_sheets).map(|i| unpack_sheet(&y[SHEET_SLOTS * i..])).collect();
        let econ = has_econ.then(|| EconState::from_array(&y[SHEET_SLOTS * n_sheets..]));
        SimState { t, sheets, econ }
    }
}

fn unpack_sheet(y: &[f64]) -> SheetState {
    SheetState {
        x_high: y[0],
        x_low: y[1],
        x_buffer: y[2],
        intensity: y[3],
    }
}

struct Field<'a> {
    model: &'a Model,
    dt: f64,
}

impl OdeSystem for Field<'_> {
    fn dimension(&self) -> usize {
        self.model.dimension()
    }

    fn derivative(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.model.kernel.sheets.len();
        let sheets: Vec<SheetState> = (0..n).map(|i| unpack_sheet(&y[SHEET_SLOTS * i..])).collect();
        let econ = self.model.economy.as_ref().map(|_| EconState::from_array(&y[SHEET_SLOTS * n..]));
        let mut delivered = None;
        if n > 0 {
            let tick = self.model.kernel.evaluate(&sheets, econ.as_ref(), self.dt)?;
            for (i, d) in tick.derivatives.iter().enumerate() {
                dy[SHEET_SLOTS * i..SHEET_SLOTS * (i + 1)].copy_from_slice(d);
            }
            delivered = self.model.delivered_output(&tick);
        }
        if let (Some(params), Some(e)) = (&self.model.economy, &econ) {
            dy[SHEET_SLOTS * n..].copy_from_slice(&econ_derivatives(e, params, delivered));
        }
        Ok(())
    }
}

/// A stock pushed back to zero after a step, and where the deficit was taken from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampEvent {
    pub t: f64,
    pub sheet: usize,
    pub stock: String,
    pub paired_with: String,
    pub amount: f64,
}

/// Result of advancing one step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: SimState,
    /// Sheet evaluation at the new state, before output was rationed.
    pub tick: Option<KernelTick>,
    pub clamps: Vec<ClampEvent>,
}

/// Integrates models with a fixed step, reusing its scratch buffers.
pub struct Stepper<'a> {
    model: &'a Model,
    dt: f64,
    rk: Rk4,
    buffer: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a Model, dt: f64) -> Self {
        Stepper {
            model,
            dt,
            rk: Rk4::new(model.dimension()),
            buffer: Vec::with_capacity(model.dimension()),
        }
    }

    /// Initial state with each sheet's intensity at its demanded value.
    pub fn initial(&self, sheets: Vec<SheetState>, econ: Option<EconState>) -> Result<(SimState, Option<KernelTick>)> {
        let mut state = SimState { t: 0.0, sheets, econ };
        let tick = self.settle(&mut state, true)?;
        Ok((state, tick))
    }

    /// Evaluates the sheets at `state`, pins algebraic intensities and
    /// replaces output by what was actually delivered.
    fn settle(&self, state: &mut SimState, all_intensities: bool) -> Result<Option<KernelTick>> {
        if self.model.kernel.sheets.is_empty() {
            return Ok(None);
        }
        let tick = self.model.kernel.evaluate(&state.sheets, state.econ.as_ref(), self.dt)?;
        for (i, (c, s)) in self.model.kernel.sheets.iter().zip(state.sheets.iter_mut()).enumerate() {
            if all_intensities || c.params.response_time == 0.0 {
                s.intensity = c.params.production_coeff * tick.global_intensity;
                debug_assert!(c.params.response_time > 0.0 || s.intensity == tick.reports[i].j_p);
            }
        }
        if let (Some(y), Some(econ)) = (self.model.delivered_output(&tick), state.econ.as_mut()) {
            econ.output = y;
        }
        Ok(Some(tick))
    }

    pub fn step(&mut self, state: &SimState) -> Result<StepOutcome> {
        state.pack(&mut self.buffer);
        let field = Field {
            model: self.model,
            dt: self.dt,
        };
        self.rk.step(&field, state.t, &mut self.buffer, self.dt)?;
        let t = state.t + self.dt;
        let mut next = SimState::unpack(&self.buffer, state.sheets.len(), state.econ.is_some(), t);
        let clamps = self.clamp(&mut next)?;
        let tick = self.settle(&mut next, false)?;
        Ok(StepOutcome {
            state: next,
            tick,
            clamps,
        })
    }

    fn clamp(&self, state: &mut SimState) -> Result<Vec<ClampEvent>> {
        let mut events = Vec::new();
        for (i, (s, c)) in state.sheets.iter_mut().zip(&self.model.kernel.sheets).enumerate() {
            let floor = -CLAMP_TOLERANCE * c.params.total;
            for (stock, pair) in [("x_high", "x_low"), ("x_low", "x_high"), ("x_buffer", "x_low")] {
                let value = *stock_mut(s, stock);
                if value >= 0.0 {
                    continue;
                }
                if value < floor {
                    return Err(Error::StepRejected {
                        t: state.t,
                        sheet: i,
                        stock,
                        value,
                    });
                }
                *stock_mut(s, stock) = 0.0;
                *stock_mut(s, pair) += value;
                log::debug!("t = {}: sheet {i} {stock} clamped, {} taken from {pair}", state.t, -value);
                events.push(ClampEvent {
                    t: state.t,
                    sheet: i,
                    stock: stock.into(),
                    paired_with: pair.into(),
                    amount: -value,
                });
            }
        }
        Ok(events)
    }
}

fn stock_mut<'s>(s: &'s mut SheetState, name: &str) -> &'s mut f64 {
    match name {
        "x_high" => &mut s.x_high,
        "x_low" => &mut s.x_low,
        _ => &mut s.x_buffer,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheetSample {
    pub state: SheetState,
    pub flows: FlowReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconSample {
    pub state: EconState,
    pub price: f64,
    pub profit: f64,
    pub investment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub sheets: Vec<SheetSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub econ: Option<EconSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Collapsed { t: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub name: String,
    pub dt: f64,
    pub stride: f64,
    pub sheet_names: Vec<String>,
    /// `X_T` of each sheet.
    pub totals: Vec<f64>,
    pub samples: Vec<Sample>,
    pub status: RunStatus,
    pub clamps: Vec<ClampEvent>,
}

/// Integration settings for [`run_model`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub horizon: f64,
    pub dt: f64,
    pub stride: f64,
    /// How long total production may stay non-positive before the run is declared collapsed.
    pub grace_window: f64,
}

fn sample(t: f64, state: &SimState, tick: Option<&KernelTick>, econ: Option<&EconParams>) -> Result<Sample> {
    let sheets = match tick {
        Some(tick) => state
            .sheets
            .iter()
            .zip(&tick.reports)
            .map(|(s, f)| SheetSample { state: *s, flows: *f })
            .collect(),
        None => Vec::new(),
    };
    let econ = match (&state.econ, econ) {
        (Some(e), Some(params)) => {
            let (profit, investment) = profit_and_investment(e, params)?;
            Some(EconSample {
                state: *e,
                price: e.price(params)?,
                profit,
                investment,
            })
        }
        _ => None,
    };
    Ok(Sample { t, sheets, econ })
}

/// Integrates `model` from the given initial stocks and economy.
pub fn run_model(
    name: &str,
    model: &Model,
    sheets: Vec<SheetState>,
    econ: Option<EconState>,
    settings: RunSettings,
) -> Result<RunRecord> {
    let RunSettings {
        horizon,
        dt,
        stride,
        grace_window,
    } = settings;
    let mut stepper = Stepper::new(model, dt);
    let (mut state, tick) = stepper.initial(sheets, econ)?;
    let steps = (horizon / dt).round() as usize;
    let every = ((stride / dt).round() as usize).max(1);

    let mut record = RunRecord {
        name: name.to_string(),
        dt,
        stride: every as f64 * dt,
        sheet_names: model.kernel.sheets.iter().map(|c| c.name.clone()).collect(),
        totals: model.kernel.sheets.iter().map(|c| c.params.total).collect(),
        samples: vec![sample(0.0, &state, tick.as_ref(), model.economy.as_ref())?],
        status: RunStatus::Completed,
        clamps: Vec::new(),
    };

    let mut idle_since: Option<f64> = None;
    for i in 1..=steps {
        let t = i as f64 * dt;
        let outcome = stepper.step(&state).map_err(|e| match e {
            Error::StepRejected { sheet, stock, value, .. } => Error::StepRejected { t, sheet, stock, value },
            other => other,
        })?;
        state = outcome.state;
        state.t = t;
        record.clamps.extend(outcome.clamps);

        if let Some(e) = &state.econ {
            if !(e.output > 0.0) {
                record.status = RunStatus::Collapsed {
                    t,
                    reason: format!("output fell to {}", e.output),
                };
                break;
            }
            if let Some(params) = &model.economy {
                e.soft_check(t, params);
            }
        }
        if let Some(tick) = &outcome.tick {
            if tick.reports.iter().all(|r| r.g <= 0.0) {
                let since = *idle_since.get_or_insert(t);
                if t - since >= grace_window {
                    record.status = RunStatus::Collapsed {
                        t,
                        reason: format!("no production since t = {since}"),
                    };
                    break;
                }
            } else {
                idle_since = None;
            }
        }
        if i % every == 0 {
            record
                .samples
                .push(sample(t, &state, outcome.tick.as_ref(), model.economy.as_ref())?);
        }
    }
    Ok(record)
}
