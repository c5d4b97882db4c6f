//! Algebra of a single resource sheet.
//!
//! A sheet holds one resource split between three stocks: the primary
//! resource `X_H`, the waste sink `X_L` and the buffer of produced goods
//! `X_S`. Their sum is the fixed total `X_T`. Every function here is a pure
//! function of its arguments; the time evolution lives in [`crate::integrator`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Potentials below this value have no entropy gauge; `Ṡ` is reported as undefined.
pub const DIVISION_GUARD: f64 = 1e-9;

/// Relative slack accepted on stock arguments before [`potential`] reports a domain error.
const STOCK_SLACK: f64 = 1e-9;

fn default_alpha() -> f64 {
    1.0
}

fn default_coeff() -> f64 {
    1.0
}

/// Per-resource constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SheetParams {
    /// Total quantity of the resource, `X_T`.
    pub total: f64,
    /// Steepness of the tanh potentials, in (0, 1].
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Natural regeneration rate `r`.
    pub regen_rate: f64,
    /// Allee threshold `s` as a fraction of `X_T`.
    pub allee_threshold: f64,
    /// Production friction `R_P`. In coupled runs with the capital friction
    /// law enabled this is the base value `R_P0`.
    pub production_friction: f64,
    /// Recycling friction `R_R`.
    pub recycling_friction: f64,
    /// Ratio `n_P` of this sheet's production intensity to the global intensity.
    #[serde(default = "default_coeff")]
    pub production_coeff: f64,
    /// Response time `τ` of the production intensity. Zero means instantaneous.
    #[serde(default)]
    pub response_time: f64,
    /// Divide both potentials by `tanh(alpha)` so that a full resource stock sits at 1.
    #[serde(default)]
    pub normalized_potentials: bool,
}

impl SheetParams {
    /// Parameters of the single-resource case studies: `X_T = 1000`, `r = 0.025`,
    /// `s = 0.2`, `R_P = R_R = 0.001`.
    pub fn case_study() -> Self {
        SheetParams {
            total: 1000.0,
            alpha: 1.0,
            regen_rate: 0.025,
            allee_threshold: 0.2,
            production_friction: 1e-3,
            recycling_friction: 1e-3,
            production_coeff: 1.0,
            response_time: 0.0,
            normalized_potentials: false,
        }
    }

    /// Checks the parameter invariants, reporting offending keys relative to `path`.
    pub fn validate(&self, path: &str) -> Result<()> {
        let check = |ok: bool, key: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(format!("{path}.{key}"), reason))
            }
        };
        check(self.total.is_finite() && self.total > 0.0, "total", "must be > 0")?;
        check(self.alpha > 0.0 && self.alpha <= 1.0, "alpha", "must lie in (0, 1]")?;
        check(self.regen_rate.is_finite() && self.regen_rate >= 0.0, "regen_rate", "must be >= 0")?;
        check(
            (0.0..=1.0).contains(&self.allee_threshold),
            "allee_threshold",
            "must lie in [0, 1]",
        )?;
        check(
            self.production_friction.is_finite() && self.production_friction > 0.0,
            "production_friction",
            "must be > 0",
        )?;
        check(
            self.recycling_friction.is_finite() && self.recycling_friction > 0.0,
            "recycling_friction",
            "must be > 0",
        )?;
        check(
            self.production_coeff.is_finite() && self.production_coeff >= 0.0,
            "production_coeff",
            "must be >= 0",
        )?;
        check(
            self.response_time.is_finite() && self.response_time >= 0.0,
            "response_time",
            "must be >= 0",
        )
    }

    fn scale(&self) -> f64 {
        if self.normalized_potentials {
            self.alpha.tanh()
        } else {
            1.0
        }
    }
}

/// The three stocks of a sheet plus its lagged production intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheetState {
    pub x_high: f64,
    pub x_low: f64,
    pub x_buffer: f64,
    pub intensity: f64,
}

impl SheetState {
    /// Pristine sheet: everything in the resource stock, empty sink and buffer.
    pub fn pristine(params: &SheetParams) -> Self {
        SheetState {
            x_high: params.total,
            x_low: 0.0,
            x_buffer: 0.0,
            intensity: 0.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.x_high + self.x_low + self.x_buffer
    }

    /// Copy with every stock forced into `[0, X_T]`.
    ///
    /// Intermediate Runge-Kutta stages may overshoot a stock slightly; flows are
    /// evaluated on this copy while the step result itself is checked afterwards.
    pub fn clamped(&self, total: f64) -> Self {
        SheetState {
            x_high: self.x_high.clamp(0.0, total),
            x_low: self.x_low.clamp(0.0, total),
            x_buffer: self.x_buffer.clamp(0.0, total),
            intensity: self.intensity,
        }
    }
}

/// Potential of a stock: `tanh(alpha · stock / X_T)`, optionally normalized by `tanh(alpha)`.
pub fn potential(stock: f64, params: &SheetParams) -> Result<f64> {
    let slack = STOCK_SLACK * params.total;
    if !(stock >= -slack && stock <= params.total + slack) {
        return Err(Error::Domain {
            what: "stock",
            value: stock,
            lo: 0.0,
            hi: params.total,
        });
    }
    let fraction = stock.clamp(0.0, params.total) / params.total;
    Ok((params.alpha * fraction).tanh() / params.scale())
}

/// High and low potentials of a sheet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potentials {
    pub high: f64,
    pub low: f64,
}

impl Potentials {
    pub fn of(state: &SheetState, params: &SheetParams) -> Result<Self> {
        Ok(Potentials {
            high: potential(state.x_high, params)?,
            low: potential(state.x_low, params)?,
        })
    }

    /// The driving force `Δμ = μ_H − μ_L`.
    pub fn gap(&self) -> f64 {
        self.high - self.low
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductionFlows {
    /// `F_HP`, resource drawn into production.
    pub inflow: f64,
    /// `F_LP`, residuals rejected to the sink.
    pub outflow: f64,
    /// `G = F_HP − F_LP`, useful work.
    pub work: f64,
}

/// Production zone fluxes at intensity `j_p`.
///
/// The work `G = Δμ·J − R_P·J²` is a downward parabola peaking at
/// `J = Δμ / (2 R_P)`. Negative work is returned as is.
pub fn production_flows(pot: Potentials, friction: f64, j_p: f64) -> ProductionFlows {
    let inflow = pot.high * j_p;
    let outflow = pot.low * j_p + friction * j_p * j_p;
    ProductionFlows {
        inflow,
        outflow,
        work: inflow - outflow,
    }
}

/// Intensity at which the production work peaks.
pub fn production_max_intensity(delta_mu: f64, friction: f64) -> f64 {
    delta_mu.max(0.0) / (2.0 * friction)
}

/// Peak production work `Δμ² / (4 R_P)`.
pub fn max_production(delta_mu: f64, friction: f64) -> f64 {
    let d = delta_mu.max(0.0);
    d * d / (4.0 * friction)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RecyclingFlows {
    /// `F_HR`, recycled resource returned to the high stock.
    pub returned: f64,
    /// `F_LR`, waste taken from the sink.
    pub intake: f64,
    /// `F_RIn`, primary resource consumed to drive recycling.
    pub drive: f64,
}

/// Forced recycling fluxes at intensity `j_r`.
///
/// Fails with [`Error::PolicyViolation`] when the waste intake `F_LR` would be
/// negative, i.e. `j_r` lies beyond `μ_L / R_R`.
pub fn forced_recycling_flows(pot: Potentials, friction: f64, j_r: f64) -> Result<RecyclingFlows> {
    let returned = pot.high * j_r;
    let intake = pot.low * j_r - friction * j_r * j_r;
    if intake < -1e-12 * returned.abs().max(1.0) {
        return Err(Error::PolicyViolation {
            intensity: j_r,
            max: recycling_max_intensity(pot.low, friction),
            intake,
        });
    }
    Ok(RecyclingFlows {
        returned,
        intake,
        drive: returned - intake,
    })
}

/// `J_R^max = μ_L / (2 R_R)`, the intensity that maximizes the waste intake.
pub fn recycling_max_intensity(mu_low: f64, friction: f64) -> f64 {
    mu_low / (2.0 * friction)
}

/// Natural regeneration of the resource with an Allee threshold.
///
/// `F_NR = r·X_H·(1 − T_H)·(T_H/s − 1)` with `T_H = X_H / X_T`. Negative below
/// the threshold. With `s = 0` the plain logistic form `r·X_H·(1 − T_H)` is used.
pub fn natural_recycling(x_high: f64, params: &SheetParams) -> f64 {
    let t = x_high / params.total;
    let logistic = params.regen_rate * x_high * (1.0 - t);
    if params.allee_threshold == 0.0 {
        logistic
    } else {
        logistic * (t / params.allee_threshold - 1.0)
    }
}

/// Efficiency, exergy and entropy diagnostics of the production zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// `η = G / F_HP`; absent when nothing flows in.
    pub eta: Option<f64>,
    /// `ε = G / Ė_HP`; absent when the exergy flux vanishes.
    pub epsilon: Option<f64>,
    /// Entropy production `Ṡ = R_P·J² / μ_L`; absent for an empty sink.
    pub s_dot: Option<f64>,
    /// Incoming exergy flux `Ė_HP = Δμ·J`.
    pub e_hp_dot: f64,
    /// `Ṡ_HP = J`.
    pub s_hp_dot: f64,
    /// `Ṡ_LP = J + R_P·J² / μ_L`; absent for an empty sink.
    pub s_lp_dot: Option<f64>,
}

pub fn diagnostics(pot: Potentials, friction: f64, j_p: f64) -> Diagnostics {
    let flows = production_flows(pot, friction, j_p);
    let e_hp_dot = pot.gap() * j_p;
    let ratio = |num: f64, den: f64| (den.abs() > 0.0).then(|| num / den);
    let dissipation = friction * j_p * j_p;
    let s_dot = (pot.low >= DIVISION_GUARD).then(|| dissipation / pot.low);
    Diagnostics {
        eta: ratio(flows.work, flows.inflow),
        epsilon: ratio(flows.work, e_hp_dot),
        s_dot,
        e_hp_dot,
        s_hp_dot: j_p,
        s_lp_dot: s_dot.map(|s| j_p + s),
    }
}

/// Time derivatives of `(X_H, X_L, X_S)`.
///
/// `delivered` is the satisfied demand `G_D^S`; it drains the buffer and
/// lands in the waste sink once consumed.
pub fn stock_derivatives(
    production: &ProductionFlows,
    recycling: &RecyclingFlows,
    natural: f64,
    delivered: f64,
) -> [f64; 3] {
    let d_high = natural - production.inflow + recycling.returned - recycling.drive;
    let d_low = -natural + production.outflow - recycling.intake + delivered;
    let d_buffer = production.work - delivered;
    [d_high, d_low, d_buffer]
}

/// Instantaneous fluxes and diagnostics of one sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub mu_high: f64,
    pub mu_low: f64,
    /// Production intensity actually applied.
    pub j_p: f64,
    /// Production intensity at peak work for the current potentials and friction.
    pub j_p_max: f64,
    pub j_r: f64,
    /// Production friction in effect.
    pub friction: f64,
    pub f_hp: f64,
    pub f_lp: f64,
    pub g: f64,
    pub f_hr: f64,
    pub f_lr: f64,
    pub f_rin: f64,
    pub f_nr: f64,
    /// Demand addressed to the sheet.
    pub g_demand: f64,
    /// Delivered demand `G_D^S`.
    pub g_satisfied: f64,
    pub eta: Option<f64>,
    pub epsilon: Option<f64>,
    pub s_dot: Option<f64>,
    pub e_hp_dot: f64,
    pub s_hp_dot: f64,
    pub s_lp_dot: Option<f64>,
}

impl FlowReport {
    pub fn delta_mu(&self) -> f64 {
        self.mu_high - self.mu_low
    }

    /// Peak work available at the current potentials.
    pub fn g_max(&self) -> f64 {
        max_production(self.delta_mu(), self.friction)
    }

    /// True when the demand lies above the production parabola.
    pub fn demand_infeasible(&self) -> bool {
        self.g_demand > self.g_max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn tanh_oracle(x: f64) -> f64 {
        let e = (2.0 * x).exp();
        (e - 1.0) / (e + 1.0)
    }

    fn pot(high: f64, low: f64) -> Potentials {
        Potentials { high, low }
    }

    #[test]
    fn potential_values() {
        let p = SheetParams::case_study();
        assert_eq!(potential(0.0, &p).unwrap(), 0.0);
        assert_relative_eq!(potential(p.total, &p).unwrap(), tanh_oracle(1.0), epsilon = 1e-15);
        assert_relative_eq!(potential(500.0, &p).unwrap(), tanh_oracle(0.5), epsilon = 1e-15);
        assert!((potential(p.total, &p).unwrap() - 0.761594).abs() < 1e-6);
        assert!((potential(500.0, &p).unwrap() - 0.462117).abs() < 1e-6);
    }

    #[test]
    fn normalized_potential_reaches_one() {
        let p = SheetParams {
            normalized_potentials: true,
            ..SheetParams::case_study()
        };
        assert_relative_eq!(potential(p.total, &p).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn potential_domain() {
        let p = SheetParams::case_study();
        assert!(matches!(potential(-1.0, &p), Err(Error::Domain { .. })));
        assert!(matches!(potential(1000.1, &p), Err(Error::Domain { .. })));
        assert_eq!(potential(-1e-8, &p).unwrap(), 0.0);
    }

    #[test]
    fn production_examples() {
        let f = production_flows(pot(1.0, 0.0), 1e-3, 0.0);
        assert_eq!((f.inflow, f.outflow, f.work), (0.0, 0.0, 0.0));
        assert_relative_eq!(production_flows(pot(1.0, 0.0), 1e-3, 500.0).work, 250.0, epsilon = 1e-12);
        assert!(production_flows(pot(1.0, 0.0), 1e-3, 1000.0).work.abs() < 1e-12);
        assert_relative_eq!(max_production(1.0, 1e-3), 250.0, epsilon = 1e-12);
        assert_relative_eq!(production_max_intensity(1.0, 1e-3), 500.0);
    }

    #[test]
    fn parabola_peak_by_grid_search() {
        let step = 0.01;
        let (arg, best) = (0..=100_000)
            .map(|i| i as f64 * step)
            .map(|j| (j, production_flows(pot(1.0, 0.0), 1e-3, j).work))
            .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((arg - 500.0).abs() <= step);
        assert!((best - 250.0).abs() / 250.0 < 1e-9);
    }

    #[test]
    fn recycling_examples() {
        let zero = forced_recycling_flows(pot(0.5, 0.3), 1e-3, 0.0).unwrap();
        assert_eq!(zero, RecyclingFlows::default());

        // spreadsheet: 0.5*150, 0.3*150 - 1e-3*150^2, difference
        let f = forced_recycling_flows(pot(0.5, 0.3), 1e-3, 150.0).unwrap();
        assert_relative_eq!(f.returned, 75.0, epsilon = 1e-12);
        assert_relative_eq!(f.intake, 22.5, epsilon = 1e-12);
        assert_relative_eq!(f.drive, 52.5, epsilon = 1e-12);

        let jmax = recycling_max_intensity(0.3, 1e-3);
        assert_relative_eq!(jmax, 150.0, epsilon = 1e-12);
        assert_eq!(recycling_max_intensity(0.0, 1e-3), 0.0);
        assert_relative_eq!(recycling_max_intensity(0.3, 2e-3), 75.0, epsilon = 1e-12);

        // vertex of the intake parabola by grid search
        let best = (0..=30_000)
            .map(|i| i as f64 * 0.01)
            .map(|j| forced_recycling_flows(pot(0.5, 0.3), 1e-3, j).map(|f| f.intake).unwrap_or(f64::MIN))
            .fold(f64::MIN, f64::max);
        assert_relative_eq!(best, 0.3 * 0.3 / (4.0 * 1e-3), epsilon = 1e-9);

        assert!(matches!(
            forced_recycling_flows(pot(0.5, 0.3), 1e-3, 301.0),
            Err(Error::PolicyViolation { .. })
        ));
    }

    #[test]
    fn natural_recycling_examples() {
        let p = SheetParams::case_study();
        assert_eq!(natural_recycling(p.total, &p), 0.0);
        assert!(natural_recycling(0.2 * p.total, &p).abs() < 1e-12);
        assert_relative_eq!(natural_recycling(600.0, &p), 12.0, epsilon = 1e-12);
        assert!(natural_recycling(100.0, &p) < 0.0);

        let verhulst = SheetParams {
            allee_threshold: 0.0,
            ..p
        };
        assert_relative_eq!(natural_recycling(600.0, &verhulst), 0.025 * 600.0 * 0.4, epsilon = 1e-12);
    }

    #[test]
    fn diagnostics_examples() {
        let p = pot(1.0, 0.2);
        let jmax = production_max_intensity(p.gap(), 1e-3);
        let d = diagnostics(p, 1e-3, jmax);
        assert_relative_eq!(d.epsilon.unwrap(), 0.5, epsilon = 1e-14);

        // ε = 1 − J/(2 J^max) = 0.19  ⇔  J = 1.62 J^max
        let d = diagnostics(p, 1e-3, 1.62 * jmax);
        assert_relative_eq!(d.epsilon.unwrap(), 0.19, epsilon = 1e-12);

        let d = diagnostics(p, 0.0, 100.0);
        assert_eq!(d.s_dot, Some(0.0));
        assert_eq!(Some(d.s_hp_dot), d.s_lp_dot);

        let idle = diagnostics(pot(1.0, 0.0), 1e-3, 0.0);
        assert_eq!((idle.eta, idle.epsilon, idle.s_dot), (None, None, None));
    }

    #[test]
    fn validate_rejects_bad_alpha() {
        let p = SheetParams {
            alpha: 1.5,
            ..SheetParams::case_study()
        };
        let err = p.validate("sheets[0]").unwrap_err().to_string();
        assert!(err.contains("sheets[0].alpha"), "{err}");
    }

    proptest! {
        #[test]
        fn stock_derivatives_conserve(
            high in 0.0f64..1.0, low in 0.0f64..1.0, friction in 1e-5f64..1.0,
            rfriction in 1e-5f64..1.0, j_p in 0.0f64..1e4, jr_frac in 0.0f64..1.0,
            natural in -50.0f64..50.0, delivered in 0.0f64..100.0,
        ) {
            let p = pot(high, low);
            let prod = production_flows(p, friction, j_p);
            let rec = forced_recycling_flows(p, rfriction, jr_frac * recycling_max_intensity(low, rfriction)).unwrap();
            let d = stock_derivatives(&prod, &rec, natural, delivered);
            let scale = prod.inflow.abs() + prod.outflow.abs() + rec.returned.abs() + natural.abs() + delivered + 1.0;
            prop_assert!((d[0] + d[1] + d[2]).abs() <= 1e-12 * scale);
        }

        #[test]
        fn carnot_style_bound(high in 0.01f64..1.0, frac in 0.0f64..0.99, friction in 1e-5f64..1.0, jf in 1e-6f64..1.0) {
            let p = pot(high, high * frac);
            let j = jf * p.gap() / friction;
            let eta = diagnostics(p, friction, j).eta.unwrap();
            prop_assert!(eta <= 1.0 - p.low / p.high + 1e-12);
        }

        #[test]
        fn entropy_nonnegative(low in 1e-9f64..1.0, friction in 0.0f64..1.0, j in 0.0f64..1e4) {
            let d = diagnostics(pot(1.0, low), friction, j);
            prop_assert!(d.s_dot.unwrap() >= 0.0);
        }

        #[test]
        fn potential_monotone(alpha in 0.01f64..=1.0, a in 0.0f64..1000.0, b in 0.0f64..1000.0) {
            let p = SheetParams { alpha, ..SheetParams::case_study() };
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-6);
            let (ml, mh) = (potential(lo, &p).unwrap(), potential(hi, &p).unwrap());
            prop_assert!(ml < mh);
            prop_assert!(mh <= alpha.tanh());
        }

        #[test]
        fn natural_recycling_sign(t in 0.001f64..0.999, s in 0.05f64..0.95) {
            let p = SheetParams { allee_threshold: s, ..SheetParams::case_study() };
            let f = natural_recycling(t * p.total, &p);
            if (t - s).abs() > 1e-9 {
                prop_assert_eq!(f > 0.0, t > s);
                prop_assert_eq!(f < 0.0, t < s);
            }
        }
    }
}
