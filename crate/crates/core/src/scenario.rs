//! Scenario files and the built-in presets.

use serde::{Deserialize, Serialize};

use crate::coupling::{
    calibrate_kappa, friction_from_capital, lead_sheet, CouplingParams, DemandSource, FrictionLaw, Kappa, Kernel,
    SheetConfig,
};
use crate::economy::{EconInitial, EconParams, EconState};
use crate::error::{Error, Result};
use crate::integrator::{run_model, Model, RunRecord, RunSettings};
use crate::intensity::{IntensityPolicy, ProductionMode, RecyclingMode};
use crate::sheet::{Potentials, SheetParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Sheets under a constant demand.
    SheetOnly,
    /// The bare economy.
    GoodwinOnly,
    /// Sheets driven by, and feeding back into, the economy.
    Coupled,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomyConfig {
    #[serde(default)]
    pub params: EconParams,
    #[serde(default)]
    pub initial: EconInitial,
}

fn default_grace() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub mode: Mode,
    pub horizon: f64,
    pub dt: f64,
    /// Spacing of recorded samples; a multiple of `dt`.
    pub stride: f64,
    #[serde(default = "default_grace")]
    pub grace_window: f64,
    /// Constant physical demand `G_D` of sheet-only runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub economy: Option<EconomyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingParams>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sheets: Vec<SheetConfig>,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let spec: ScenarioSpec = toml::from_str(text).map_err(|e| Error::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario specs always serialize")
    }

    /// Checks every invariant, reporting the offending key path.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, key: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(key, "must be > 0"))
            }
        };
        positive(self.dt, "dt")?;
        positive(self.stride, "stride")?;
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::invalid("horizon", "must be >= 0"));
        }
        if !(self.grace_window.is_finite() && self.grace_window >= 0.0) {
            return Err(Error::invalid("grace_window", "must be >= 0"));
        }
        let ratio = self.stride / self.dt;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-6 * ratio {
            return Err(Error::invalid("stride", "must be a whole multiple of dt"));
        }

        let unused = |present: bool, key: &str| {
            if present {
                Err(Error::invalid(key, format!("not used in mode {:?}", self.mode)))
            } else {
                Ok(())
            }
        };
        let required = |present: bool, key: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::invalid(key, format!("required in mode {:?}", self.mode)))
            }
        };
        match self.mode {
            Mode::SheetOnly => {
                required(!self.sheets.is_empty(), "sheets")?;
                required(self.demand.is_some(), "demand")?;
                unused(self.economy.is_some(), "economy")?;
                unused(self.coupling.is_some(), "coupling")?;
            }
            Mode::GoodwinOnly => {
                required(self.economy.is_some(), "economy")?;
                unused(!self.sheets.is_empty(), "sheets")?;
                unused(self.demand.is_some(), "demand")?;
                unused(self.coupling.is_some(), "coupling")?;
            }
            Mode::Coupled => {
                required(!self.sheets.is_empty(), "sheets")?;
                required(self.economy.is_some(), "economy")?;
                required(self.coupling.is_some(), "coupling")?;
                unused(self.demand.is_some(), "demand")?;
            }
        }
        if let Some(d) = self.demand {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::invalid("demand", "must be >= 0"));
            }
        }
        if let Some(e) = &self.economy {
            e.params.validate("economy.params")?;
            e.initial.validate("economy.initial")?;
        }
        if let Some(c) = &self.coupling {
            c.validate("coupling")?;
        }
        for (i, s) in self.sheets.iter().enumerate() {
            s.validate(&format!("sheets[{i}]"))?;
        }
        if !self.sheets.is_empty() && lead_sheet(&self.sheets).is_none() {
            return Err(Error::invalid("sheets", "at least one sheet needs production_coeff > 0"));
        }
        Ok(())
    }

    pub fn settings(&self) -> RunSettings {
        RunSettings {
            horizon: self.horizon,
            dt: self.dt,
            stride: self.stride,
            grace_window: self.grace_window,
        }
    }

    /// Resolves `κ` for coupled scenarios.
    pub fn kappa(&self) -> Result<Option<f64>> {
        let (Some(coupling), Some(economy)) = (&self.coupling, &self.economy) else {
            return Ok(None);
        };
        match coupling.kappa {
            Kappa::Fixed(k) => Ok(Some(k)),
            Kappa::DemandFraction(f) => {
                let lead = lead_sheet(&self.sheets).ok_or_else(|| Error::invalid("sheets", "no producing sheet"))?;
                let c = &self.sheets[lead];
                let gap = Potentials::of(&c.initial_state(), &c.params)?.gap();
                let econ = EconState::from_initial(&economy.initial, &economy.params);
                let friction = if coupling.capital_friction {
                    friction_from_capital(econ.capital, econ.capital, c.params.production_friction)?
                } else {
                    c.params.production_friction
                };
                Ok(Some(calibrate_kappa(f, gap, friction, econ.output)))
            }
        }
    }

    /// The vector field and initial state described by this scenario.
    pub fn build(&self) -> Result<(Model, Vec<crate::sheet::SheetState>, Option<EconState>)> {
        self.validate()?;
        let econ = self
            .economy
            .as_ref()
            .map(|e| EconState::from_initial(&e.initial, &e.params));
        let demand = match (self.kappa()?, self.demand) {
            (Some(kappa), _) => DemandSource::Economy { kappa },
            (None, d) => DemandSource::Constant(d.unwrap_or(0.0)),
        };
        let friction_law = match (&self.coupling, &econ) {
            (Some(c), Some(e)) if c.capital_friction => Some(FrictionLaw {
                initial_capital: e.capital,
            }),
            _ => None,
        };
        let model = Model {
            kernel: Kernel {
                sheets: self.sheets.clone(),
                demand,
                friction_law,
            },
            economy: self.economy.as_ref().map(|e| e.params.clone()),
        };
        let sheets = self.sheets.iter().map(|s| s.initial_state()).collect();
        Ok((model, sheets, econ))
    }

    pub fn run(&self) -> Result<RunRecord> {
        let (model, sheets, econ) = self.build()?;
        run_model(&self.name, &model, sheets, econ, self.settings())
    }
}

/// Names of the built-in scenarios.
pub const PRESETS: [&str; 12] = [
    "case1-max",
    "case2-optimal",
    "case3-weak",
    "recycling-s20",
    "recycling-s10",
    "friction-low",
    "friction-high",
    "goodwin",
    "macro-1",
    "macro-2",
    "macro-3",
    "macro-4",
];

pub fn list_presets() -> &'static [&'static str] {
    &PRESETS
}

const HORIZON: f64 = 100.0;
const DT: f64 = 1e-3;
const STRIDE: f64 = 0.1;

fn sheet(params: SheetParams, production: ProductionMode, recycling: RecyclingMode) -> SheetConfig {
    SheetConfig {
        name: "resource".into(),
        params,
        policy: IntensityPolicy::new(production, recycling),
        initial: Default::default(),
    }
}

fn sheet_only(name: &str, params: SheetParams, production: ProductionMode) -> ScenarioSpec {
    ScenarioSpec {
        name: name.into(),
        mode: Mode::SheetOnly,
        horizon: HORIZON,
        dt: DT,
        stride: STRIDE,
        grace_window: default_grace(),
        demand: Some(30.0),
        economy: None,
        coupling: None,
        sheets: vec![sheet(params, production, RecyclingMode::AtMax)],
    }
}

fn macro_sheet(total: f64, base_friction: f64) -> SheetParams {
    SheetParams {
        total,
        production_friction: base_friction,
        ..SheetParams::case_study()
    }
}

/// Units bridge shared by the macro presets: initial demand is 1% of the peak
/// production of a pristine 100-unit sheet with `R_P0 = 0.001`.
pub fn macro_kappa() -> f64 {
    let params = macro_sheet(100.0, 1e-3);
    let econ = EconState::from_initial(&EconInitial::default(), &EconParams::default());
    let pristine = crate::sheet::SheetState::pristine(&params);
    let gap = Potentials::of(&pristine, &params).expect("pristine sheet").gap();
    let friction = friction_from_capital(econ.capital, econ.capital, params.production_friction).expect("K0 > 0");
    calibrate_kappa(0.01, gap, friction, econ.output)
}

fn coupled(name: &str, params: SheetParams, recycling: RecyclingMode) -> ScenarioSpec {
    ScenarioSpec {
        name: name.into(),
        mode: Mode::Coupled,
        horizon: HORIZON,
        dt: DT,
        stride: STRIDE,
        grace_window: default_grace(),
        demand: None,
        economy: Some(EconomyConfig::default()),
        coupling: Some(CouplingParams {
            kappa: Kappa::Fixed(macro_kappa()),
            capital_friction: true,
        }),
        sheets: vec![sheet(params, ProductionMode::Optimal, recycling)],
    }
}

pub fn preset(name: &str) -> Result<ScenarioSpec> {
    let case = SheetParams::case_study;
    let spec = match name {
        "case1-max" => sheet_only(name, case(), ProductionMode::MaxIntensity),
        "case2-optimal" | "recycling-s20" => sheet_only(name, case(), ProductionMode::Optimal),
        "case3-weak" => sheet_only(name, case(), ProductionMode::FractionOfOptimal(0.2)),
        "recycling-s10" => sheet_only(
            name,
            SheetParams {
                allee_threshold: 0.1,
                ..case()
            },
            ProductionMode::Optimal,
        ),
        "friction-low" => sheet_only(
            name,
            SheetParams {
                production_friction: 4e-5,
                ..case()
            },
            ProductionMode::Optimal,
        ),
        "friction-high" => sheet_only(
            name,
            SheetParams {
                production_friction: 0.1,
                ..case()
            },
            ProductionMode::Optimal,
        ),
        "goodwin" => ScenarioSpec {
            name: name.into(),
            mode: Mode::GoodwinOnly,
            horizon: HORIZON,
            dt: DT,
            stride: STRIDE,
            grace_window: default_grace(),
            demand: None,
            economy: Some(EconomyConfig::default()),
            coupling: None,
            sheets: Vec::new(),
        },
        "macro-1" => coupled(name, macro_sheet(1e8, 1e-3), RecyclingMode::AtMax),
        "macro-2" => coupled(name, macro_sheet(100.0, 1e-3), RecyclingMode::AtMax),
        "macro-3" => coupled(name, macro_sheet(100.0, 1e-3), RecyclingMode::Proportional(0.0)),
        "macro-4" => coupled(name, macro_sheet(100.0, 0.1), RecyclingMode::AtMax),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(spec)
}

/// A preset name, or else a path to a TOML scenario file.
pub fn resolve(name_or_path: &str) -> Result<ScenarioSpec> {
    if PRESETS.contains(&name_or_path) {
        return preset(name_or_path);
    }
    let path = std::path::Path::new(name_or_path);
    if path.exists() {
        ScenarioSpec::load(path)
    } else {
        Err(Error::UnknownPreset(name_or_path.to_string()))
    }
}
