//! Acceptance suite: one `PASS`/`FAIL` line per criterion, non-zero exit if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermoecon::economy::{goodwin_first_integral, goodwin_fixed_point};
use thermoecon::integrator::RunRecord;
use thermoecon::intensity::{solve_demand_intensity, DemandRoots};
use thermoecon::metrics::{
    conservation_error, demand_met, pinch_off_time, production_drop_time, slope_sign_changes,
};
use thermoecon::scenario::{list_presets, preset, ScenarioSpec};
use thermoecon::sheet::{diagnostics, production_flows, production_max_intensity, Potentials, SheetParams};

fn report(criterion: &str, passed: bool, detail: String) -> bool {
    println!("{} criterion {criterion}: {detail}", if passed { "PASS" } else { "FAIL" });
    passed
}

fn run(name: &str) -> RunRecord {
    preset(name).unwrap().run().unwrap()
}

fn criterion_1_conservation() -> bool {
    let mut worst = 0.0f64;
    let mut slowest = (0.0f64, "");
    for name in list_presets() {
        let start = Instant::now();
        let rec = run(name);
        let secs = start.elapsed().as_secs_f64();
        if secs > slowest.0 {
            slowest = (secs, name);
        }
        worst = worst.max(conservation_error(&rec));
    }
    let ok = report(
        "1",
        worst < 1e-6,
        format!(
            "max |X_H+X_L+X_S-X_T|/X_T = {worst:.2e} over all presets; slowest {} took {:.2} s",
            slowest.1, slowest.0
        ),
    );
    ok
}

fn criterion_2_correspondence() -> bool {
    let goodwin = run("goodwin");
    let macro1 = run("macro-1");
    let total = macro1.totals[0];
    let mut used = 0.0;
    let mut worst = 0.0f64;
    let mut compared_until = 0.0;
    for (i, (g, m)) in goodwin.samples.iter().zip(&macro1.samples).enumerate() {
        if i > 0 {
            let prev = &macro1.samples[i - 1];
            used += 0.5 * (m.t - prev.t) * (m.sheets[0].flows.f_hp + prev.sheets[0].flows.f_hp);
        }
        if used > 1e-3 * total {
            break;
        }
        let (a, b) = (g.econ.as_ref().unwrap().state, m.econ.as_ref().unwrap().state);
        for (x, y) in [(a.omega, b.omega), (a.lambda, b.lambda), (a.output, b.output)] {
            worst = worst.max((x - y).abs() / x.abs());
        }
        compared_until = m.t;
    }
    let ok = report(
        "2",
        worst < 0.01 && compared_until > 0.0,
        format!("macro-1 vs goodwin: worst relative gap in omega, lambda, Y = {worst:.2e} up to t = {compared_until}"),
    );
    ok
}

fn frozen_goodwin(horizon: f64, dt: f64) -> ScenarioSpec {
    let mut spec = preset("goodwin").unwrap();
    spec.economy.as_mut().unwrap().params.frozen_population_growth = Some(9.7e-3);
    spec.horizon = horizon;
    spec.dt = dt;
    spec.stride = (0.01 / dt).round().max(1.0) * dt;
    spec
}

fn criterion_3_goodwin_fixed_point() -> bool {
    let n = 9.7e-3;
    let spec = frozen_goodwin(300.0, 1e-3);
    let params = spec.economy.as_ref().unwrap().params.clone();
    let (w_star, l_star) = goodwin_fixed_point(&params, n);
    let rec = spec.run().unwrap();
    let lambdas: Vec<f64> = rec.samples.iter().map(|s| s.econ.as_ref().unwrap().state.lambda).collect();
    // average over whole cycles: from the first to the last interior maximum of lambda
    let peaks: Vec<usize> = (1..lambdas.len() - 1)
        .filter(|&i| lambdas[i] > lambdas[i - 1] && lambdas[i] >= lambdas[i + 1])
        .collect();
    let (first, last) = (peaks[0], *peaks.last().unwrap());
    let window = &rec.samples[first..=last];
    let mean = |f: &dyn Fn(&thermoecon::integrator::Sample) -> f64| {
        let w: Vec<f64> = window.iter().map(f).collect();
        w.windows(2).map(|p| 0.5 * (p[0] + p[1])).sum::<f64>() / (w.len() - 1) as f64
    };
    let w_avg = mean(&|s| s.econ.as_ref().unwrap().state.omega);
    let l_avg = mean(&|s| s.econ.as_ref().unwrap().state.lambda);
    let rel = ((w_avg - w_star).abs() / w_star).max((l_avg - l_star).abs() / l_star);

    // first integral over five periods
    let period = (rec.samples[last].t - rec.samples[first].t) / (peaks.len() - 1) as f64;
    let short = frozen_goodwin((5.0 * period / 0.01).round() * 0.01, 1e-3).run().unwrap();
    let h = |s: &thermoecon::integrator::Sample| {
        let e = s.econ.as_ref().unwrap().state;
        goodwin_first_integral(e.omega, e.lambda, &params, n)
    };
    let h0 = h(&short.samples[0]);
    let drift = short.samples.iter().map(|s| (h(s) - h0).abs() / h0.abs()).fold(0.0, f64::max);

    let ok = report(
        "3",
        rel < 0.02 && (w_star - 0.7260).abs() < 5e-5 && (l_star - 0.6969).abs() < 5e-5 && drift < 1e-6,
        format!(
            "fixed point ({w_star:.5}, {l_star:.5}); orbit average ({w_avg:.5}, {l_avg:.5}) over {} cycles, relative gap {rel:.2e}; first integral drift {drift:.1e} over 5 periods of {period:.2}",
            peaks.len() - 1
        ),
    );
    ok
}

fn criterion_4_parabola() -> bool {
    let pot = Potentials { high: 1.0, low: 0.0 };
    let friction = 1e-3;
    let step = 0.5;
    let (mut best_j, mut best_g) = (0.0, f64::NEG_INFINITY);
    for i in 0..=2000 {
        let j = i as f64 * step;
        let g = production_flows(pot, friction, j).work;
        if g > best_g {
            best_g = g;
            best_j = j;
        }
    }
    let eps = diagnostics(pot, friction, best_j).epsilon.unwrap();
    let ok = report(
        "4",
        (best_j - 500.0).abs() <= step && (best_g - 250.0).abs() <= 1e-9 && eps == 0.5,
        format!("grid argmax J = {best_j}, max G = {best_g}, epsilon there = {eps}"),
    );
    ok
}

fn criterion_5_quadratic_solver() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let residual = |dm: f64, r: f64, gd: f64, j: f64| -r * j * j + dm * j - gd;
    let mut worst = 0.0f64;
    let mut worst_abs = 0.0f64;
    let mut count = 0;
    while count < 1_000_000 {
        let dm: f64 = rng.gen_range(1e-4..1.0);
        let r = 10f64.powf(rng.gen_range(-5.0..0.0));
        let gd = rng.gen_range(0.0..1.0) * dm * dm / (4.0 * r);
        if let DemandRoots::TwoRoots(lo, hi) = solve_demand_intensity(dm, r, gd) {
            for j in [lo, hi] {
                let res = residual(dm, r, gd, j).abs();
                worst_abs = worst_abs.max(res);
                worst = worst.max(res / gd.max(1.0));
            }
            count += 1;
        }
    }
    let table1 = match solve_demand_intensity(1.0, 1e-3, 30.0) {
        DemandRoots::TwoRoots(lo, _) => lo,
        other => panic!("{other:?}"),
    };
    let ok = report(
        "5",
        worst_abs < 1e-9 && (table1 - 30.958).abs() < 1e-3,
        format!(
            "1e6 random triples: worst absolute residual {worst_abs:.1e} ({worst:.1e} relative to max(1, G_D)); lower root at delta_mu = 1, R_P = 1e-3, G_D = 30 is {table1:.4}"
        ),
    );
    ok
}

fn late_mean(rec: &RunRecord, f: impl Fn(&thermoecon::integrator::Sample) -> f64) -> f64 {
    let n = rec.samples.len();
    let tail = &rec.samples[n - n / 10..];
    tail.iter().map(f).sum::<f64>() / tail.len() as f64
}

fn criterion_6_case_signatures() -> bool {
    let case1 = run("case1-max");
    let buffer: Vec<f64> = case1.samples.iter().map(|s| s.sheets[0].state.x_buffer).collect();
    let peak = buffer.iter().cloned().fold(0.0, f64::max);
    let fills_then_empties = peak > 0.0 && *buffer.last().unwrap() < 1e-6 * peak;
    let met: Vec<bool> = case1.samples.iter().map(|s| demand_met(&s.sheets[0].flows)).collect();
    let window_end = met.iter().position(|m| !m);
    let initial_window = matches!(window_end, Some(k) if k > 0 && met[k..].iter().all(|m| !m));
    let end_gap = case1.samples.last().unwrap().sheets[0].flows.delta_mu();
    let case1_ok = fills_then_empties && initial_window && end_gap < 0.05;

    let case2 = run("case2-optimal");
    let met0 = demand_met(&case2.samples[0].sheets[0].flows);
    let drop2 = production_drop_time(&case2, 0, 0.5);
    let case2_ok = met0 && drop2.is_some();

    let case3 = run("case3-weak");
    let case3_ok = case3
        .samples
        .iter()
        .all(|s| s.sheets[0].flows.g < s.sheets[0].flows.g_demand && s.sheets[0].flows.delta_mu() > 0.3);
    let gap3 = case3.samples.iter().map(|s| s.sheets[0].flows.delta_mu()).fold(f64::INFINITY, f64::min);

    let (s10, s20) = (run("recycling-s10"), run("recycling-s20"));
    let (p10, p20) = (pinch_off_time(&s10, 0), pinch_off_time(&s20, 0));
    let recycling_ok = match (p10, p20) {
        (Some(a), Some(b)) => a > b,
        (None, Some(_)) => true,
        _ => false,
    };

    let (low, high) = (run("friction-low"), run("friction-high"));
    let gap = |r: &RunRecord| r.samples.last().unwrap().sheets[0].flows.delta_mu();
    let (g_low, g_high) = (late_mean(&low, |s| s.sheets[0].flows.g), late_mean(&high, |s| s.sheets[0].flows.g));
    let friction_ok = gap(&high) > gap(&low) && g_high > g_low && production_drop_time(&low, 0, 0.5).is_some();

    let ok = report(
        "6",
        case1_ok && case2_ok && case3_ok && recycling_ok && friction_ok,
        format!(
            "case1 buffer peak {peak:.1} then {:.1e}, demand met until t = {:?}, final gap {end_gap:.3} (needs < 0.05); \
             case2 drop at {drop2:?}; case3 G < G_D throughout = {case3_ok}, min gap {gap3:.3}; \
             pinch-off s10 {p10:?} vs s20 {p20:?}; friction gap high {:.3} vs low {:.4}, late G {g_high:.3} vs {g_low:.3}",
            buffer.last().unwrap(),
            window_end.map(|k| case1.samples[k - 1].t),
            gap(&high),
            gap(&low),
        ),
    );
    ok
}

fn criterion_7_macro_signatures() -> bool {
    let macro2 = run("macro-2");
    let macro3 = run("macro-3");
    let macro4 = run("macro-4");
    let price = |s: &thermoecon::integrator::Sample| s.econ.as_ref().unwrap().price;

    let drop2 = production_drop_time(&macro2, 0, 0.5);
    let drop3 = production_drop_time(&macro3, 0, 0.5);
    let (pre, post) = match drop2 {
        Some(td) => {
            let before: Vec<_> = macro2.samples.iter().filter(|s| s.t <= td).collect();
            let peak = before
                .iter()
                .max_by(|a, b| a.sheets[0].flows.g.total_cmp(&b.sheets[0].flows.g))
                .unwrap();
            let post = macro2.samples.iter().filter(|s| s.t >= td).map(price).fold(0.0, f64::max);
            (price(peak), post)
        }
        None => (f64::NAN, f64::NAN),
    };
    let spike_ok = post > 2.0 * pre;
    let earlier_ok = matches!((drop3, drop2), (Some(a), Some(b)) if a < b);

    let first_pinch = pinch_off_time(&macro4, 0);
    let changes = first_pinch.map_or(0, |tp| {
        let gaps: Vec<f64> = macro4
            .samples
            .iter()
            .filter(|s| s.t >= tp)
            .map(|s| s.sheets[0].flows.delta_mu())
            .collect();
        slope_sign_changes(&gaps, 1e-12)
    });
    let ok = report(
        "7",
        spike_ok && earlier_ok && changes >= 3,
        format!(
            "macro-2 drop at {drop2:?}, price {pre:.3} before vs {post:.3} after; macro-3 drop at {drop3:?}; \
             macro-4 first pinch {first_pinch:?} then {changes} slope sign changes of the potential gap"
        ),
    );
    ok
}

/// Final state of `spec` over `[0, horizon]` at step `dt`, flattened.
fn final_state(mut spec: ScenarioSpec, horizon: f64, dt: f64) -> Vec<f64> {
    spec.horizon = horizon;
    spec.dt = dt;
    spec.stride = horizon;
    let rec = spec.run().unwrap();
    let last = rec.samples.last().unwrap();
    assert!((last.t - horizon).abs() < 1e-9);
    let mut v: Vec<f64> = last
        .sheets
        .iter()
        .flat_map(|s| [s.state.x_high, s.state.x_low, s.state.x_buffer])
        .collect();
    if let Some(e) = &last.econ {
        // scale-free economy coordinates
        v.extend([e.state.omega, e.state.lambda, e.state.output / 64.45e9]);
    }
    v
}

fn convergence_factor(spec: &ScenarioSpec, horizon: f64, dt: f64) -> f64 {
    let a = final_state(spec.clone(), horizon, dt);
    let b = final_state(spec.clone(), horizon, dt / 2.0);
    let c = final_state(spec.clone(), horizon, dt / 4.0);
    let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    dist(&a, &b) / dist(&b, &c)
}

fn criterion_8_rk4_order() -> bool {
    // case2 before its pinch-off runs on the smooth lower-root branch with an empty buffer
    let sheet = convergence_factor(&preset("case2-optimal").unwrap(), 5.0, 0.1);
    let econ = convergence_factor(&preset("goodwin").unwrap(), 10.0, 0.2);
    let ok = report(
        "8",
        (sheet - 16.0).abs() <= 3.0 && (econ - 16.0).abs() <= 3.0,
        format!("error ratio on dt halving: case2 over [0, 5] {sheet:.2}, goodwin over [0, 10] {econ:.2}"),
    );
    ok
}

fn criterion_9_entropy_and_efficiency() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let params = SheetParams::case_study();
    let mut worst_entropy = 0.0f64;
    let mut worst_carnot = f64::NEG_INFINITY;
    let mut worst_identity = 0.0f64;
    for _ in 0..100_000 {
        let total = params.total;
        let x_high = rng.gen_range(0.0..total);
        let x_low = rng.gen_range(0.0..total - x_high);
        let state = thermoecon::sheet::SheetState {
            x_high,
            x_low,
            x_buffer: total - x_high - x_low,
            intensity: 0.0,
        };
        let pot = Potentials::of(&state, &params).unwrap();
        let friction = 10f64.powf(rng.gen_range(-5.0..0.0));
        let j = rng.gen_range(0.0..2000.0);
        let d = diagnostics(pot, friction, j);
        if let Some(s) = d.s_dot {
            worst_entropy = worst_entropy.max(-s);
        }
        if let (Some(eta), true) = (d.eta, pot.high > 0.0) {
            worst_carnot = worst_carnot.max(eta - (1.0 - pot.low / pot.high));
        }
        if let (Some(eps), true) = (d.epsilon, pot.gap() > 0.0 && j > 0.0) {
            let predicted = 1.0 - j / (2.0 * production_max_intensity(pot.gap(), friction));
            worst_identity = worst_identity.max((eps - predicted).abs() / predicted.abs().max(1.0));
        }
    }
    let ok = report(
        "9",
        worst_entropy <= 0.0 && worst_carnot <= 1e-15 && worst_identity <= 1e-12,
        format!(
            "1e5 random states: min S_dot deficit {worst_entropy:.1e}, eta above Carnot by at most {worst_carnot:.1e}, epsilon identity error {worst_identity:.1e}"
        ),
    );
    ok
}

fn main() {
    let criteria: [fn() -> bool; 9] = [
        criterion_1_conservation,
        criterion_2_correspondence,
        criterion_3_goodwin_fixed_point,
        criterion_4_parabola,
        criterion_5_quadratic_solver,
        criterion_6_case_signatures,
        criterion_7_macro_signatures,
        criterion_8_rk4_order,
        criterion_9_entropy_and_efficiency,
    ];
    let passed = criteria.iter().filter(|c| c()).count();
    println!("acceptance: {passed}/{} criteria pass", criteria.len());
    if passed < criteria.len() {
        std::process::exit(1);
    }
}
