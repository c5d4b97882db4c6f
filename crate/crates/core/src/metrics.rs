//! Summary numbers and invariant checks over a finished run.

use serde::Serialize;

use crate::integrator::RunRecord;
use crate::sheet::FlowReport;

/// Largest relative deviation of `X_H + X_L + X_S` from `X_T` over all samples and sheets.
pub fn conservation_error(record: &RunRecord) -> f64 {
    record
        .samples
        .iter()
        .flat_map(|s| s.sheets.iter().zip(&record.totals))
        .map(|(s, total)| (s.state.total() - total).abs() / total)
        .fold(0.0, f64::max)
}

fn series<'a>(record: &'a RunRecord, sheet: usize) -> impl Iterator<Item = (f64, &'a FlowReport)> + 'a {
    record.samples.iter().map(move |s| (s.t, &s.sheets[sheet].flows))
}

/// Whether the buffer and production together met the full demand.
pub fn demand_met(flows: &FlowReport) -> bool {
    flows.g_satisfied >= flows.g_demand * (1.0 - 1e-9)
}

/// First sample at which demand lies above the production parabola.
pub fn pinch_off_time(record: &RunRecord, sheet: usize) -> Option<f64> {
    series(record, sheet).find(|(_, f)| f.demand_infeasible()).map(|(t, _)| t)
}

pub fn first_unmet_demand(record: &RunRecord, sheet: usize) -> Option<f64> {
    series(record, sheet).find(|(_, f)| !demand_met(f)).map(|(t, _)| t)
}

/// First sample at which `G` falls below `fraction` of its running maximum.
pub fn production_drop_time(record: &RunRecord, sheet: usize, fraction: f64) -> Option<f64> {
    let mut peak = f64::NEG_INFINITY;
    for (t, f) in series(record, sheet) {
        peak = peak.max(f.g);
        if peak > 0.0 && f.g < fraction * peak {
            return Some(t);
        }
    }
    None
}

/// Trapezoidal integral of a flow over the recorded samples.
pub fn cumulative(record: &RunRecord, sheet: usize, flow: impl Fn(&FlowReport) -> f64) -> f64 {
    record
        .samples
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (flow(&w[0].sheets[sheet].flows) + flow(&w[1].sheets[sheet].flows)))
        .sum()
}

pub fn cumulative_production(record: &RunRecord, sheet: usize) -> f64 {
    cumulative(record, sheet, |f| f.g)
}

/// Resource drawn from `X_H` by production.
pub fn cumulative_extraction(record: &RunRecord, sheet: usize) -> f64 {
    cumulative(record, sheet, |f| f.f_hp)
}

/// Number of sign changes in the finite differences of `values`,
/// ignoring differences smaller than `deadband` in magnitude.
pub fn slope_sign_changes(values: &[f64], deadband: f64) -> usize {
    let mut last = 0.0f64;
    let mut changes = 0;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= deadband {
            continue;
        }
        if last != 0.0 && d.signum() != last.signum() {
            changes += 1;
        }
        last = d;
    }
    changes
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, bound: f64) -> Check {
    Check {
        name,
        passed: worst <= bound,
        detail: format!("worst {worst:.3e}, bound {bound:.1e}"),
    }
}

/// Sampled invariants: conservation, non-negativity, the second law, the
/// Carnot bound, the efficiency identity, rationing and the time grid.
pub fn invariant_checks(record: &RunRecord) -> Vec<Check> {
    let mut cons = 0.0f64;
    let mut negative = 0.0f64;
    let mut entropy = 0.0f64;
    let mut carnot = 0.0f64;
    let mut identity = 0.0f64;
    let mut rationing = 0.0f64;
    for s in &record.samples {
        for (sheet, total) in s.sheets.iter().zip(&record.totals) {
            let st = &sheet.state;
            // drift allowed to grow linearly with simulated time
            cons = cons.max((st.total() - total).abs() / total / s.t.max(1.0));
            negative = negative.max((0.0 - st.x_high.min(st.x_low).min(st.x_buffer)) / total);
            let f = &sheet.flows;
            if let Some(sd) = f.s_dot {
                entropy = entropy.max(-sd);
            }
            if let Some(eta) = f.eta {
                if f.mu_high > 0.0 && f.j_p > 0.0 {
                    carnot = carnot.max(eta - (1.0 - f.mu_low / f.mu_high));
                }
            }
            if let (Some(eps), true) = (f.epsilon, f.j_p > 0.0 && f.delta_mu() > 0.0) {
                let predicted = 1.0 - f.friction * f.j_p / f.delta_mu();
                identity = identity.max((eps - predicted).abs() / predicted.abs().max(1.0));
            }
            rationing = rationing.max((f.g_satisfied - f.g_demand) / f.g_demand.abs().max(1.0));
        }
    }
    let stride_error = record
        .samples
        .windows(2)
        .map(|w| ((w[1].t - w[0].t) - record.stride).abs() / record.stride)
        .fold(0.0, f64::max);
    vec![
        check("conservation", cons, 1e-9),
        check("non-negative stocks", negative, 0.0),
        check("entropy production", entropy, 1e-12),
        check("carnot bound", carnot, 1e-12),
        check("efficiency identity", identity, 1e-9),
        check("rationing", rationing, 1e-12),
        check("constant stride", stride_error, 1e-9),
    ]
}
