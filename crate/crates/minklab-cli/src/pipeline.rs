//! Pipeline execution and run manifests.
//!
//! A run directory receives the pipeline's CSV/JSON artifacts plus
//! `manifest.json`: the config echo, tool version, wall clock, the check
//! table (each row with its tolerance and source anchor), and a content
//! hash for every emitted file.

use std::path::{Path, PathBuf};
use std::time::Instant;

use minklab::{
    assemble_linearized, bifurcation_search, cluster_ids, combined_quotient, exact_sphere_spectrum,
    geometry_report, kernel_check, lp_residual, run_flow, santalo_center, sha256_file,
    solve_minkowski, solve_spectrum, write_body, write_field_csv, write_json, write_spectrum_csv,
    write_trajectory_csv, Error, FlowConfig, FlowMode, FlowTrajectory, SolveOptions, StopReason,
    SupportFunction,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::checks::{format_table, CheckRow, Comparison};
use crate::config::{BuiltRun, Command, RunConfig};

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub outcome: String,
    pub wall_clock_seconds: f64,
    pub config: Value,
    pub checks: Vec<CheckRow>,
    pub details: Value,
    pub files: Vec<FileEntry>,
}

struct PipelineOutput {
    checks: Vec<CheckRow>,
    details: Value,
}

/// Execute a validated run; returns the process exit code.  The run
/// directory is created here; numerical failures still produce a manifest
/// and keep whatever artifacts were written before the failure.
pub fn execute(cfg: &RunConfig, config_echo: Value, built: &BuiltRun, dir: &Path) -> i32 {
    if let Err(e) = std::fs::create_dir_all(dir) {
        eprintln!("cannot create run directory {}: {e}", dir.display());
        return 2;
    }
    let started = Instant::now();
    let result = dispatch(cfg, built, dir);
    let wall = started.elapsed().as_secs_f64();

    let (outcome, checks, details, exit) = match result {
        Ok(out) => {
            let ok = out.checks.iter().all(|c| c.pass);
            ("ok".to_string(), out.checks, out.details, if ok { 0 } else { 1 })
        }
        Err(e) => (format!("numerical-failure: {e}"), Vec::new(), Value::Null, 3),
    };

    let files = inventory(dir);
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: built.command.name().to_string(),
        outcome: outcome.clone(),
        wall_clock_seconds: wall,
        config: config_echo,
        checks,
        details,
        files,
    };
    if let Err(e) = write_json(&dir.join("manifest.json"), &manifest) {
        eprintln!("cannot write manifest: {e}");
        return 3;
    }

    println!("run directory: {}", dir.display());
    if !manifest.checks.is_empty() {
        print!("{}", format_table(&manifest.checks));
    }
    match exit {
        0 => println!("outcome: ok"),
        1 => println!("outcome: {} check(s) failed", manifest.checks.iter().filter(|c| !c.pass).count()),
        _ => println!("outcome: {outcome}"),
    }
    exit
}

/// Hash every artifact in the run directory (the manifest itself is
/// excluded: it carries the hashes).
fn inventory(dir: &Path) -> Vec<FileEntry> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n != "manifest.json"))
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
        .into_iter()
        .filter_map(|p| {
            let name = p.file_name()?.to_string_lossy().into_owned();
            let hash = sha256_file(&p).ok()?;
            Some(FileEntry { path: name, sha256: hash })
        })
        .collect()
}

fn dispatch(cfg: &RunConfig, built: &BuiltRun, dir: &Path) -> Result<PipelineOutput, Error> {
    match built.command {
        Command::Solve => pipeline_solve(cfg, built, dir),
        Command::Flow => pipeline_flow(cfg, built, dir),
        Command::Spectrum => pipeline_spectrum(cfg, built, dir),
        Command::Bifurcate => pipeline_bifurcate(cfg, dir),
        Command::Quotient => pipeline_quotient(cfg, built, dir),
        Command::Verify => pipeline_verify(cfg),
    }
}

/// Largest value of h^(p-1) over the nodes, floored at 1: the natural
/// scale of the curvature equation's right-hand side.
fn residual_scale(body: &SupportFunction, p: f64) -> f64 {
    body.h
        .v
        .iter()
        .map(|h| h.powf(p - 1.0))
        .fold(1.0_f64, f64::max)
}

fn geometry_json(body: &SupportFunction) -> Result<Value, Error> {
    let geo = geometry_report(body)?;
    Ok(json!({
        "volume": geo.volume,
        "inner_radius": geo.inner,
        "outer_radius": geo.outer,
        "gamma": geo.gamma,
        "direction_balance": geo.kw,
        "centroid": geo.centroid,
    }))
}

fn pipeline_solve(cfg: &RunConfig, built: &BuiltRun, dir: &Path) -> Result<PipelineOutput, Error> {
    let p = cfg.p.unwrap();
    let body = built.body.as_ref().unwrap();
    write_body(&dir.join("initial_body.csv"), body, &built.body_description)?;

    let mut opts = SolveOptions {
        symmetry: built.group.clone(),
        ..SolveOptions::default()
    };
    if let Some(s) = &cfg.solver {
        if let Some(v) = s.flow_steps_max {
            opts.flow_steps_max = v;
        }
        if let Some(v) = s.stage1_tol {
            opts.stage1_tol = v;
        }
        if let Some(v) = s.newton_tol {
            opts.newton_tol = v;
        }
        if let Some(v) = s.newton_max {
            opts.newton_max = v;
        }
        if let Some(v) = s.c_dt {
            opts.c_dt = v;
        }
        if let Some(v) = s.dt_max {
            opts.dt_max = v;
        }
        if let Some(v) = s.resymmetrize_every {
            opts.resymmetrize_every = v;
        }
        if let Some(v) = s.stall_window {
            opts.stall_window = v;
        }
    }

    let out = solve_minkowski(body, p, &opts)?;
    write_body(
        &dir.join("solution.csv"),
        &out.body,
        &format!("stationary solution at exponent p = {p}"),
    )?;
    let (res_field, sup, l2) = lp_residual(&out.body, p);
    write_field_csv(&dir.join("residual.csv"), &res_field)?;

    let scale = residual_scale(&out.body, p);
    let checks = vec![CheckRow::new(
        "stationary equation residual (scaled sup)",
        sup / scale,
        0.0,
        opts.newton_tol,
        Comparison::AtMost,
        "solution of the curvature equation at exponent p",
    )];
    let details = json!({
        "p": p,
        "residual_sup": sup,
        "residual_l2": l2,
        "residual_scale": scale,
        "stage1_residual": out.stage1_residual,
        "flow_steps": out.flow_steps,
        "newton_iterations": out.newton_iterations,
        "geometry": geometry_json(&out.body)?,
    });
    Ok(PipelineOutput { checks, details })
}

fn flow_config(cfg: &RunConfig, built: &BuiltRun) -> Result<FlowConfig, Error> {
    let n = built.grid.as_ref().unwrap().n;
    let alpha = cfg.alpha.unwrap();
    let o = cfg.flow.clone().unwrap_or_default();
    let mode = match o.mode.as_deref() {
        Some("raw") => FlowMode::Raw,
        _ => FlowMode::Normalized,
    };
    let mut fc = FlowConfig::new(n, alpha, mode)?;
    fc.symmetry = built.group.clone();
    if let Some(v) = o.c_dt {
        fc.c_dt = v;
    }
    if let Some(v) = o.dt_max {
        fc.dt_max = v;
    }
    if let Some(v) = o.max_steps {
        fc.max_steps = v;
    }
    if let Some(v) = o.residual_tol {
        fc.residual_tol = v;
    }
    if let Some(v) = o.blowup_m {
        fc.blowup_m = v;
    }
    if o.reference_time.is_some() {
        fc.reference_time = o.reference_time;
    }
    if let Some(v) = o.sample_every {
        fc.sample_every = v;
    }
    if let Some(v) = o.resymmetrize_every {
        fc.resymmetrize_every = v;
    }
    if let Some(v) = o.type_ii_factor {
        fc.type_ii_factor = v;
    }
    if let Some(v) = o.type_iii_factor {
        fc.type_iii_factor = v;
    }
    if o.calibration_gamma.is_some() {
        fc.calibration_gamma = o.calibration_gamma;
    }
    Ok(fc)
}

fn pipeline_flow(cfg: &RunConfig, built: &BuiltRun, dir: &Path) -> Result<PipelineOutput, Error> {
    let body = built.body.as_ref().unwrap();
    write_body(&dir.join("initial_body.csv"), body, &built.body_description)?;
    let fc = flow_config(cfg, built)?;
    let traj: FlowTrajectory = run_flow(body, &fc)?;

    write_trajectory_csv(&dir.join("trajectory.csv"), &traj.samples)?;
    write_body(
        &dir.join("final_body.csv"),
        &traj.final_body,
        &format!("flow state after {} steps ({})", traj.steps, traj.stop),
    )?;

    // A mid-run convexity loss is a numerical failure: keep the partial
    // trajectory on disk and report failure.
    if let StopReason::ConvexityLoss { t, step, min_eig } = traj.stop {
        return Err(Error::ConvexityLost { t, step, min_eig });
    }

    let mut checks = Vec::new();
    if let Some(env) = &traj.envelopes {
        checks.push(CheckRow::new(
            "normalized-flow radius envelopes",
            (env.upper_violations + env.lower_violations) as f64,
            0.0,
            0.0,
            Comparison::AtMost,
            "differential inequalities for the outer and inner radius",
        ));
        checks.push(CheckRow::new(
            "flow functional is monotone",
            env.f_violations as f64,
            0.0,
            0.0,
            Comparison::AtMost,
            "monotone quantity of the normalized flow",
        ));
        if let Some(persists) = env.outer_persists {
            checks.push(CheckRow::new(
                "outer radius persists above one",
                if persists { 1.0 } else { 0.0 },
                1.0,
                0.0,
                Comparison::AbsDiff,
                "normalized flow keeps the outer radius from collapsing",
            ));
        }
    }

    let details = json!({
        "mode": if fc.mode == FlowMode::Raw { "raw" } else { "normalized" },
        "alpha": fc.alpha,
        "stop": traj.stop,
        "steps": traj.steps,
        "samples": traj.samples.len(),
        "envelopes": traj.envelopes,
        "classification": traj.classification,
        "final_geometry": geometry_json(&traj.final_body)?,
    });
    Ok(PipelineOutput { checks, details })
}

fn pipeline_spectrum(cfg: &RunConfig, built: &BuiltRun, dir: &Path) -> Result<PipelineOutput, Error> {
    let body = built.body.as_ref().unwrap();
    write_body(&dir.join("initial_body.csv"), body, &built.body_description)?;
    let count = cfg.spectrum_count.unwrap_or(16).max(1);
    let ctol = cfg.cluster_tol.unwrap_or(0.5);

    let mut pair = assemble_linearized(body)?;
    let (vals, fields) = solve_spectrum(&mut pair, count)?;
    let ids = cluster_ids(&vals, ctol);
    write_spectrum_csv(&dir.join("spectrum.csv"), &vals, &ids)?;
    for (i, f) in fields.iter().take(4).enumerate() {
        write_field_csv(&dir.join(format!("eigenfield_{i}.csv")), f)?;
    }

    let mut checks = Vec::new();
    if built.round_unit_body {
        let n = built.grid.as_ref().unwrap().n;
        let exact = exact_sphere_spectrum(n, vals.len());
        let mut worst_rel = 0.0_f64;
        let mut worst_zero = 0.0_f64;
        for (v, e) in vals.iter().zip(&exact) {
            if *e == 0.0 {
                worst_zero = worst_zero.max(v.abs());
            } else {
                worst_rel = worst_rel.max((v - e).abs() / e.abs());
            }
        }
        let rel_tol = if n == 1 { 0.005 } else { 0.01 };
        checks.push(CheckRow::new(
            "round-body spectrum, nonzero levels",
            worst_rel,
            0.0,
            rel_tol,
            Comparison::AtMost,
            "linearized operator spectrum on the round body",
        ));
        checks.push(CheckRow::new(
            "round-body spectrum, kernel levels",
            worst_zero,
            0.0,
            0.05,
            Comparison::AtMost,
            "linearized operator spectrum on the round body",
        ));
    }

    let details = json!({
        "count": vals.len(),
        "cluster_tol": ctol,
        "clusters": ids.last().map(|c| c + 1).unwrap_or(0),
        "raw_asymmetry": pair.raw_asymmetry,
        "eigenvalues": vals,
    });
    Ok(PipelineOutput { checks, details })
}

fn pipeline_bifurcate(cfg: &RunConfig, dir: &Path) -> Result<PipelineOutput, Error> {
    let ps: Vec<f64> = cfg
        .p_values
        .clone()
        .or_else(|| cfg.p.map(|p| vec![p]))
        .unwrap();
    let [gn, gk] = cfg.symmetry.unwrap();
    let eps0 = cfg.seed_amplitude.unwrap_or(0.1);

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (i, p) in ps.iter().enumerate() {
        let bp = bifurcation_search(gn, *p, gk, eps0)?;
        write_body(
            &dir.join(format!("branch_{i}.csv")),
            &bp.body,
            &format!("branch solution at p = {p}, seed symmetry {gk}-vertex"),
        )?;
        let scale = residual_scale(&bp.body, *p);
        checks.push(CheckRow::new(
            &format!("branch residual at p = {p}"),
            bp.residual_sup / scale,
            0.0,
            1e-6,
            Comparison::AtMost,
            "solution of the curvature equation at exponent p",
        ));
        rows.push(json!({
            "p": bp.p,
            "k": bp.k,
            "gamma": bp.gamma,
            "amplitude": bp.amplitude,
            "residual_sup": bp.residual_sup,
            "non_round": bp.non_round,
        }));
    }
    write_json(&dir.join("branch_points.json"), &Value::Array(rows.clone()))?;
    let details = json!({
        "seed_amplitude": eps0,
        "symmetry": [gn, gk],
        "branch_points": rows,
    });
    Ok(PipelineOutput { checks, details })
}

fn pipeline_quotient(cfg: &RunConfig, built: &BuiltRun, dir: &Path) -> Result<PipelineOutput, Error> {
    let body = built.body.as_ref().unwrap();
    write_body(&dir.join("initial_body.csv"), body, &built.body_description)?;

    let quo = combined_quotient(body)?;
    let mut details = json!({
        "geometry": geometry_json(body)?,
        "quotient": quo,
    });

    if let Some(p) = cfg.p {
        let kr = kernel_check(body, p)?;
        details["kernel"] = json!({
            "dimension": kr.dimension,
            "rotational_dimension": kr.rotational_dimension,
            "max_angle_deg": kr.max_angle_deg,
            "tol": kr.tol,
            "target": kr.target,
        });
        if p != 0.0 {
            let sr = santalo_center(body, p)?;
            details["entropy_center"] = json!(sr);
        }
    }
    write_json(&dir.join("quotient_report.json"), &details)?;

    let rep = minklab::orthonormality_check(body);
    let checks = vec![CheckRow::new(
        "second moments: trace identity",
        rep.trace_defect / rep.total,
        0.0,
        1e-12,
        Comparison::AtMost,
        "trace of direction moments equals the cone mass",
    )];
    Ok(PipelineOutput { checks, details })
}

fn pipeline_verify(cfg: &RunConfig) -> Result<PipelineOutput, Error> {
    let suite = cfg.suite.as_deref().unwrap();
    let checks = crate::verify::run_suite(suite)
        .map_err(Error::Precondition)?;
    let details = json!({ "suite": suite });
    Ok(PipelineOutput { checks, details })
}
