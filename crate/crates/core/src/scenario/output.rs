use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::Scenario;
use super::studies::{
    load_slots, run_allocation_study, run_ee_study, run_pricing_study, AllocationRow, EeRow,
    PricingStudy, Study,
};
use crate::error::{Error, Result};

/// Decimal rendering with 12 significant digits and trailing zeros removed.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (11 - exp).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// Results of one `run`.
#[derive(Debug, Clone, Default)]
pub struct StudyOutputs {
    pub allocation: Option<Vec<AllocationRow>>,
    pub pricing: Option<PricingStudy>,
    pub ee: Option<Vec<EeRow>>,
}

pub fn run_studies(scn: &Scenario, studies: &[Study]) -> Result<StudyOutputs> {
    let mut out = StudyOutputs::default();
    for study in studies {
        log::info!("running {study:?} study");
        match study {
            Study::Allocation => out.allocation = Some(run_allocation_study(scn)?),
            Study::Pricing => {
                let slots = load_slots(scn)?;
                out.pricing = Some(run_pricing_study(scn, &slots)?);
            }
            Study::Ee => out.ee = Some(run_ee_study(scn)?),
        }
    }
    Ok(out)
}

struct Table {
    name: &'static str,
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

fn f(v: f64) -> String {
    format_sig(v)
}

fn tables(outputs: &StudyOutputs) -> Vec<Table> {
    let mut out = Vec::new();
    if let Some(rows) = &outputs.allocation {
        out.push(Table {
            name: "allocation.csv",
            header: &[
                "chi",
                "utility_opt",
                "utility_ppa",
                "utility_upa",
                "improvement_ppa",
                "improvement_upa",
            ],
            rows: rows
                .iter()
                .map(|r| {
                    vec![
                        f(r.chi),
                        f(r.utility_opt),
                        f(r.utility_ppa),
                        f(r.utility_upa),
                        f(r.improvement_ppa),
                        f(r.improvement_upa),
                    ]
                })
                .collect(),
        });
    }
    if let Some(p) = &outputs.pricing {
        out.push(Table {
            name: "pricing_slots.csv",
            header: &[
                "slot",
                "demand",
                "chi_star",
                "p",
                "q",
                "welfare_ibr",
                "welfare_flat",
                "load_ibr",
                "load_flat",
                "improvement",
                "window_empty",
            ],
            rows: p
                .slots
                .iter()
                .map(|r| {
                    vec![
                        r.slot.clone(),
                        f(r.demand),
                        f(r.chi_star),
                        f(r.p),
                        f(r.q),
                        f(r.welfare_ibr),
                        f(r.welfare_flat),
                        f(r.load_ibr),
                        f(r.load_flat),
                        f(r.improvement),
                        r.window_empty.to_string(),
                    ]
                })
                .collect(),
        });
        out.push(Table {
            name: "pricing_sweep.csv",
            header: &[
                "level",
                "mean_demand",
                "welfare_ibr",
                "welfare_flat",
                "improvement",
            ],
            rows: p
                .sweep
                .iter()
                .map(|r| {
                    vec![
                        f(r.level),
                        f(r.mean_demand),
                        f(r.welfare_ibr),
                        f(r.welfare_flat),
                        f(r.improvement),
                    ]
                })
                .collect(),
        });
    }
    if let Some(rows) = &outputs.ee {
        out.push(Table {
            name: "ee.csv",
            header: &[
                "scale",
                "demand",
                "see",
                "see_c",
                "iee",
                "upa",
                "iterations",
            ],
            rows: rows
                .iter()
                .map(|r| {
                    vec![
                        f(r.scale),
                        f(r.demand),
                        f(r.see),
                        f(r.see_c),
                        f(r.iee),
                        f(r.upa),
                        r.iterations.to_string(),
                    ]
                })
                .collect(),
        });
    }
    out
}

fn write_table(dir: &Path, table: &Table) -> Result<PathBuf> {
    let path = dir.join(table.name);
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(table.header).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes one CSV per study plus `manifest.jsonl` into `dir` (created if
/// missing). Returns the paths written.
pub fn emit_outputs(
    outputs: &StudyOutputs,
    scn: &Scenario,
    studies: &[Study],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut manifest = vec![json!({
        "record": "run",
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": scn.seed,
        "studies": studies,
        "scenario": scn,
    })];
    for table in tables(outputs) {
        let path = write_table(dir, &table)?;
        manifest.push(json!({
            "record": "file",
            "name": table.name,
            "columns": table.header,
            "rows": table.rows.len(),
        }));
        written.push(path);
    }
    let mut text = String::new();
    for line in manifest {
        text.push_str(&serde_json::to_string(&line)?);
        text.push('\n');
    }
    let path = dir.join("manifest.jsonl");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}
