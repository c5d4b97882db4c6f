//! CSV, JSON and SVG output of run records.
//!
//! CSV columns come in a fixed order: `t`, then for every sheet the columns
//! of [`SHEET_COLUMNS`], then the [`ECON_COLUMNS`] when the run has an
//! economy. With more than one sheet the sheet columns carry an `s{i}_` prefix.
//! Undefined values (an efficiency with nothing flowing, say) are empty cells.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::integrator::{EconSample, RunRecord, Sample, SheetSample};
use crate::svg::{Chart, Series};

pub const SHEET_COLUMNS: [&str; 27] = [
    "X_H",
    "X_L",
    "X_S",
    "mu_H",
    "mu_L",
    "delta_mu",
    "J_P",
    "J_P_max",
    "J_R",
    "R_P",
    "F_HP",
    "F_LP",
    "G",
    "G_max",
    "G_D",
    "G_D_satisfied",
    "F_HR",
    "F_LR",
    "F_RIn",
    "F_NR",
    "F_HR_over_X_L",
    "F_NR_over_X_L",
    "eta",
    "epsilon",
    "S_dot",
    "S_LP_dot",
    "E_HP_dot",
];

pub const ECON_COLUMNS: [&str; 10] = ["omega", "lambda", "N", "w", "Y", "K", "a", "p", "Pi", "I"];

pub fn csv_header(record: &RunRecord, has_econ: bool) -> Vec<String> {
    let mut header = vec!["t".to_string()];
    let n = record.sheet_names.len();
    for i in 0..n {
        for c in SHEET_COLUMNS {
            header.push(if n == 1 { c.to_string() } else { format!("s{i}_{c}") });
        }
    }
    if has_econ {
        header.extend(ECON_COLUMNS.iter().map(|c| c.to_string()));
    }
    header
}

fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), cell)
}

fn per_unit_sink(flow: f64, x_low: f64) -> Option<f64> {
    (x_low > 0.0).then(|| flow / x_low)
}

fn sheet_cells(s: &SheetSample) -> [String; 27] {
    let (st, f) = (&s.state, &s.flows);
    [
        cell(st.x_high),
        cell(st.x_low),
        cell(st.x_buffer),
        cell(f.mu_high),
        cell(f.mu_low),
        cell(f.delta_mu()),
        cell(f.j_p),
        cell(f.j_p_max),
        cell(f.j_r),
        cell(f.friction),
        cell(f.f_hp),
        cell(f.f_lp),
        cell(f.g),
        cell(f.g_max()),
        cell(f.g_demand),
        cell(f.g_satisfied),
        cell(f.f_hr),
        cell(f.f_lr),
        cell(f.f_rin),
        cell(f.f_nr),
        opt(per_unit_sink(f.f_hr, st.x_low)),
        opt(per_unit_sink(f.f_nr, st.x_low)),
        opt(f.eta),
        opt(f.epsilon),
        opt(f.s_dot),
        opt(f.s_lp_dot),
        cell(f.e_hp_dot),
    ]
}

fn econ_cells(e: &EconSample) -> [String; 10] {
    let s = &e.state;
    [
        s.omega,
        s.lambda,
        s.workforce,
        s.wage,
        s.output,
        s.capital,
        s.productivity,
        e.price,
        e.profit,
        e.investment,
    ]
    .map(cell)
}

fn has_econ(record: &RunRecord) -> bool {
    record.samples.first().is_some_and(|s| s.econ.is_some())
}

pub fn write_csv<W: Write>(record: &RunRecord, out: W) -> Result<()> {
    let econ = has_econ(record);
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(csv_header(record, econ)).map_err(io)?;
    for s in &record.samples {
        let mut row = vec![cell(s.t)];
        for sheet in &s.sheets {
            row.extend(sheet_cells(sheet));
        }
        if let Some(e) = &s.econ {
            row.extend(econ_cells(e));
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json(record: &RunRecord) -> Result<String> {
    Ok(serde_json::to_string_pretty(&record.samples)?)
}

pub fn samples_from_json(text: &str) -> Result<Vec<Sample>> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::invalid("format", format!("`{other}` is not one of csv, json, svg"))),
        }
    }
}

/// Writes `record` into `dir` and returns the files written.
pub fn emit(record: &RunRecord, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    match format {
        Format::Csv => {
            let path = dir.join(format!("{}.csv", record.name));
            write_csv(record, std::fs::File::create(&path)?)?;
            Ok(vec![path])
        }
        Format::Json => {
            let path = dir.join(format!("{}.json", record.name));
            std::fs::write(&path, to_json(record)?)?;
            Ok(vec![path])
        }
        Format::Svg => charts(record)
            .into_iter()
            .map(|(panel, chart)| {
                let path = dir.join(format!("{}-{panel}.svg", record.name));
                std::fs::write(&path, chart.render())?;
                Ok(path)
            })
            .collect(),
    }
}

fn sheet_series(record: &RunRecord, label: &str, f: impl Fn(&SheetSample) -> Option<f64>) -> Vec<Series> {
    let n = record.sheet_names.len();
    (0..n)
        .map(|i| Series {
            label: if n == 1 {
                label.to_string()
            } else {
                format!("{} {label}", record.sheet_names[i])
            },
            points: record
                .samples
                .iter()
                .filter_map(|s| f(&s.sheets[i]).map(|v| (s.t, v)))
                .collect(),
        })
        .collect()
}

fn econ_series(record: &RunRecord, label: &str, f: impl Fn(&EconSample) -> f64) -> Series {
    Series {
        label: label.to_string(),
        points: record
            .samples
            .iter()
            .filter_map(|s| s.econ.as_ref().map(|e| (s.t, f(e))))
            .collect(),
    }
}

/// The chart panels of a run, keyed by a short panel name.
pub fn charts(record: &RunRecord) -> Vec<(&'static str, Chart)> {
    let mut out = Vec::new();
    if !record.sheet_names.is_empty() {
        let panel = |title: &str, series: Vec<Vec<Series>>| Chart {
            title: title.to_string(),
            series: series.into_iter().flatten().collect(),
        };
        out.push((
            "potentials",
            panel(
                "Potentials",
                vec![
                    sheet_series(record, "mu_H", |s| Some(s.flows.mu_high)),
                    sheet_series(record, "mu_L", |s| Some(s.flows.mu_low)),
                ],
            ),
        ));
        out.push((
            "production",
            panel(
                "Production and demand",
                vec![
                    sheet_series(record, "G", |s| Some(s.flows.g)),
                    sheet_series(record, "G_D", |s| Some(s.flows.g_demand)),
                    sheet_series(record, "G_D satisfied", |s| Some(s.flows.g_satisfied)),
                    sheet_series(record, "X_S", |s| Some(s.state.x_buffer)),
                ],
            ),
        ));
        out.push((
            "recycling",
            panel(
                "Recycling per unit waste",
                vec![
                    sheet_series(record, "F_HR/X_L", |s| per_unit_sink(s.flows.f_hr, s.state.x_low)),
                    sheet_series(record, "F_NR/X_L", |s| per_unit_sink(s.flows.f_nr, s.state.x_low)),
                ],
            ),
        ));
        out.push((
            "intensity",
            panel(
                "Intensity",
                vec![
                    sheet_series(record, "J_P", |s| Some(s.flows.j_p)),
                    sheet_series(record, "J_P_max", |s| Some(s.flows.j_p_max)),
                    sheet_series(record, "J_R", |s| Some(s.flows.j_r)),
                ],
            ),
        ));
    }
    if has_econ(record) {
        out.push((
            "cycle",
            Chart {
                title: "Wage share and employment".into(),
                series: vec![
                    econ_series(record, "omega", |e| e.state.omega),
                    econ_series(record, "lambda", |e| e.state.lambda),
                ],
            },
        ));
        out.push((
            "output",
            Chart {
                title: "Output".into(),
                series: vec![econ_series(record, "Y", |e| e.state.output)],
            },
        ));
        out.push((
            "price",
            Chart {
                title: "Price".into(),
                series: vec![econ_series(record, "p", |e| e.price)],
            },
        ));
    }
    out
}
