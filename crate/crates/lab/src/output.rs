//! CSV/JSON artifacts. Numbers are written with 17 significant digits so
//! every value reads back bit for bit.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use gkdv_core::concentration::ConcentrationEntry;
use gkdv_core::functionals::NormReport;

pub const NORMS_HEADER: [&str; 6] = ["time", "mass", "energy", "hsk_norm", "dt", "window_mass"];
pub const CONCENTRATION_HEADER: [&str; 6] =
    ["t", "lambda", "x0", "window_mass", "fraction", "resolution_flag"];

pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> anyhow::Result<f64> {
    Ok(s.trim().parse::<f64>()?)
}

pub fn write_norms_csv(path: &Path, reports: &[NormReport]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(NORMS_HEADER)?;
    for r in reports {
        w.write_record([r.time, r.mass, r.energy, r.hsk_norm, r.dt, r.window_mass].map(fmt17))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_norms_csv(path: &Path) -> anyhow::Result<Vec<NormReport>> {
    let mut r = csv::Reader::from_path(path)?;
    anyhow::ensure!(r.headers()? == NORMS_HEADER.as_slice(), "unexpected header in {}", path.display());
    r.records()
        .map(|rec| {
            let rec = rec?;
            let v: Vec<f64> = rec.iter().map(parse_f64).collect::<anyhow::Result<_>>()?;
            anyhow::ensure!(v.len() == 6, "short row in {}", path.display());
            Ok(NormReport {
                time: v[0],
                mass: v[1],
                energy: v[2],
                hsk_norm: v[3],
                dt: v[4],
                window_mass: v[5],
            })
        })
        .collect()
}

pub fn write_concentration_csv(path: &Path, series: &[ConcentrationEntry]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CONCENTRATION_HEADER)?;
    for e in series {
        let mut row = [e.t, e.lambda, e.x0, e.window_mass, e.fraction].map(fmt17).to_vec();
        row.push(if e.resolution_flag { "1" } else { "0" }.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_concentration_csv(path: &Path) -> anyhow::Result<Vec<ConcentrationEntry>> {
    let mut r = csv::Reader::from_path(path)?;
    anyhow::ensure!(
        r.headers()? == CONCENTRATION_HEADER.as_slice(),
        "unexpected header in {}",
        path.display()
    );
    r.records()
        .map(|rec| {
            let rec = rec?;
            anyhow::ensure!(rec.len() == 6, "short row in {}", path.display());
            let v: Vec<f64> = rec.iter().take(5).map(parse_f64).collect::<anyhow::Result<_>>()?;
            Ok(ConcentrationEntry {
                t: v[0],
                lambda: v[1],
                x0: v[2],
                window_mass: v[3],
                fraction: v[4],
                resolution_flag: &rec[5] == "1",
            })
        })
        .collect()
}

/// Pretty JSON with a trailing newline.
pub fn json_string<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    File::create(path)?.write_all(json_string(value)?.as_bytes())?;
    Ok(())
}
