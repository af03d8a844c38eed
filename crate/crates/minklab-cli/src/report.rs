//! Plot-ready CSV bundles from a finished run directory.

use std::fmt::Write as _;
use std::path::Path;

use minklab::{format_float, read_trajectory_csv};
use serde_json::Value;

/// Reshape run artifacts into tidy CSVs next to them.  Returns the list
/// of files written; `Err` carries a message for the user (missing or
/// malformed manifest, unreadable artifacts).
pub fn make_report(dir: &Path) -> Result<Vec<String>, String> {
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.is_file() {
        return Err(format!("no manifest.json in {}", dir.display()));
    }
    let manifest: Value = minklab::read_json(&manifest_path)
        .map_err(|e| format!("cannot read manifest: {e}"))?;
    if !manifest.is_object() || manifest.get("version").is_none() {
        return Err("manifest.json is not a run manifest".into());
    }

    let mut written = Vec::new();

    let traj_path = dir.join("trajectory.csv");
    if traj_path.is_file() {
        let samples =
            read_trajectory_csv(&traj_path).map_err(|e| format!("trajectory: {e}"))?;
        let mut out = String::from("t,quantity,value\n");
        for s in &samples {
            let quantities: [(&str, f64); 7] = [
                ("m", s.inner),
                ("M", s.outer),
                ("gamma", s.gamma),
                ("volume", s.volume),
                ("F", s.functional),
                ("residual", s.residual),
                ("clamps", s.clamps as f64),
            ];
            for (name, value) in quantities {
                let _ = writeln!(out, "{},{name},{}", format_float(s.t), format_float(value));
            }
        }
        let tidy = dir.join("trajectory_tidy.csv");
        std::fs::write(&tidy, out).map_err(|e| format!("write trajectory_tidy.csv: {e}"))?;
        written.push("trajectory_tidy.csv".to_string());
    }

    let branch_path = dir.join("branch_points.json");
    if branch_path.is_file() {
        let points: Value = minklab::read_json(&branch_path)
            .map_err(|e| format!("cannot read branch points: {e}"))?;
        let arr = points
            .as_array()
            .ok_or_else(|| "branch_points.json is not an array".to_string())?;
        let mut out = String::from("p,gamma,residual\n");
        for (i, row) in arr.iter().enumerate() {
            let get = |key: &str| -> Result<f64, String> {
                row.get(key)
                    .and_then(Value::as_f64)
                    .ok_or_else(|| format!("branch point {i} lacks numeric {key:?}"))
            };
            let _ = writeln!(
                out,
                "{},{},{}",
                format_float(get("p")?),
                format_float(get("gamma")?),
                format_float(get("residual_sup")?)
            );
        }
        let branch = dir.join("branch.csv");
        std::fs::write(&branch, out).map_err(|e| format!("write branch.csv: {e}"))?;
        written.push("branch.csv".to_string());
    }

    if written.is_empty() {
        written.push("(nothing to reshape: no trajectory or branch artifacts)".to_string());
    }
    Ok(written)
}
