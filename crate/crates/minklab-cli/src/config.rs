//! Run configuration: JSON schema, validation, and construction of the
//! grid, symmetry group and initial body a pipeline starts from.
//!
//! Validation failures are reported as strings and map to exit code 2
//! (schema violation) before any run directory is created.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use minklab::{
    invariant_bump, make_grid, named_group, perturbed_sphere, random_invariant_body,
    random_smooth_body, read_body, sphere, Ellipsoid, Grid, Mode, SupportFunction,
    SymmetryGroup,
};
use serde::Deserialize;

/// Environment variable naming the default output root for run
/// directories (used when a config has no `output` field).
pub const OUTPUT_ENV: &str = "MINKLAB_OUT";

/// Default output root when neither `output` nor the environment variable
/// is set.
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Flow,
    Spectrum,
    Bifurcate,
    Quotient,
    Verify,
}

impl Command {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "solve" => Self::Solve,
            "flow" => Self::Flow,
            "spectrum" => Self::Spectrum,
            "bifurcate" => Self::Bifurcate,
            "quotient" => Self::Quotient,
            "verify" => Self::Verify,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Flow => "flow",
            Self::Spectrum => "spectrum",
            Self::Bifurcate => "bifurcate",
            Self::Quotient => "quotient",
            Self::Verify => "verify",
        }
    }
}

/// Initial-body recipe.  `kind` selects the variant; amplitudes are
/// geometric (every mode profile has unit sup).
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BodyRecipe {
    /// Round body.
    Sphere {
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// Ellipsoid with the given semi-axes, optionally translated.
    Ellipsoid {
        semi_axes: Vec<f64>,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// Sphere of radius `base` plus explicit harmonic modes.
    PerturbedSphere {
        #[serde(default = "default_radius")]
        base: f64,
        modes: Vec<Mode>,
    },
    /// Seeded random convex body (uses the top-level `seed`); when
    /// `symmetrized` is true the body is drawn from the exactly invariant
    /// profile basis of the selected symmetry group (the config must have a
    /// symmetry selector, and `max_degree` is ignored).
    Random {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_max_degree")]
        max_degree: usize,
        #[serde(default)]
        symmetrized: bool,
    },
    /// Unit sphere plus the invariant harmonic of the k-vertex polytope
    /// group (k = 4 or 12 on the 2-sphere, any k >= 3 on the circle).
    InvariantBump { k: usize, amplitude: f64 },
    /// A body previously written by this tool (field CSV + JSON sidecar).
    File { path: PathBuf },
}

fn default_radius() -> f64 {
    1.0
}
fn default_amplitude() -> f64 {
    0.15
}
fn default_max_degree() -> usize {
    6
}

/// Flow options (all optional; see the library defaults).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowOptions {
    /// "raw" or "normalized" (default).
    pub mode: Option<String>,
    pub c_dt: Option<f64>,
    pub dt_max: Option<f64>,
    pub max_steps: Option<usize>,
    pub residual_tol: Option<f64>,
    pub blowup_m: Option<f64>,
    pub reference_time: Option<f64>,
    pub sample_every: Option<usize>,
    pub resymmetrize_every: Option<usize>,
    pub type_ii_factor: Option<f64>,
    pub type_iii_factor: Option<f64>,
    pub calibration_gamma: Option<f64>,
}

/// Solver options (all optional; see the library defaults).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub flow_steps_max: Option<usize>,
    pub stage1_tol: Option<f64>,
    pub newton_tol: Option<f64>,
    pub newton_max: Option<usize>,
    pub c_dt: Option<f64>,
    pub dt_max: Option<f64>,
    pub resymmetrize_every: Option<usize>,
    pub stall_window: Option<usize>,
}

/// Top-level run configuration (JSON).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Pipeline: solve | flow | spectrum | bifurcate | quotient | verify.
    pub command: String,
    /// Sphere dimension, 1 or 2 (required except for `verify`).
    #[serde(default)]
    pub n: Option<usize>,
    /// Grid resolution: [N] for n = 1, [J, L] for n = 2.
    #[serde(default)]
    pub resolution: Option<Vec<usize>>,
    /// Curvature-equation exponent (solve, bifurcate, quotient).
    #[serde(default)]
    pub p: Option<f64>,
    /// Curvature power of the flow speed (flow).
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Exponent sweep for `bifurcate` (overrides `p`).
    #[serde(default)]
    pub p_values: Option<Vec<f64>>,
    /// Initial body; default is the unit sphere.
    #[serde(default)]
    pub body: Option<BodyRecipe>,
    /// Symmetry group selector [n, k] (a good-position polytope), or
    /// absent for none.
    #[serde(default)]
    pub symmetry: Option<[usize; 2]>,
    #[serde(default)]
    pub flow: Option<FlowOptions>,
    #[serde(default)]
    pub solver: Option<SolverOptions>,
    /// Number of eigenvalues to export (spectrum; default 16).
    #[serde(default)]
    pub spectrum_count: Option<usize>,
    /// Eigenvalue clustering tolerance (spectrum; default 0.5).
    #[serde(default)]
    pub cluster_tol: Option<f64>,
    /// Branch seed amplitude for `bifurcate` (default 0.1).
    #[serde(default)]
    pub seed_amplitude: Option<f64>,
    /// Check suite name for `command = "verify"`.
    #[serde(default)]
    pub suite: Option<String>,
    /// RNG seed for random recipes (default 0).
    #[serde(default)]
    pub seed: Option<u64>,
    /// Run directory; default `<output root>/<config file stem>`.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Everything a pipeline needs, constructed and cross-checked.
pub struct BuiltRun {
    pub command: Command,
    pub grid: Option<Arc<Grid>>,
    pub group: Option<SymmetryGroup>,
    pub body: Option<SupportFunction>,
    pub body_description: String,
    /// True when the initial body is exactly the unit sphere (enables the
    /// round-spectrum reference checks).
    pub round_unit_body: bool,
}

/// Resolve the run directory for a config loaded from `config_path`.
pub fn run_directory(cfg: &RunConfig, config_path: &Path) -> PathBuf {
    if let Some(out) = &cfg.output {
        return out.clone();
    }
    let root = std::env::var_os(OUTPUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    root.join(stem)
}

fn build_body(
    cfg: &RunConfig,
    grid: &Arc<Grid>,
    seed: u64,
) -> Result<(SupportFunction, String, bool), String> {
    let n = grid.n;
    let recipe = cfg
        .body
        .clone()
        .unwrap_or(BodyRecipe::Sphere { radius: 1.0 });
    match recipe {
        BodyRecipe::Sphere { radius } => {
            let b = sphere(grid, radius).map_err(|e| format!("sphere recipe: {e}"))?;
            Ok((b, format!("sphere radius {radius}"), radius == 1.0))
        }
        BodyRecipe::Ellipsoid { semi_axes, center } => {
            let center = center.unwrap_or_else(|| vec![0.0; n + 1]);
            if semi_axes.len() != n + 1 {
                return Err(format!(
                    "ellipsoid needs {} semi-axes for n = {n}, got {}",
                    n + 1,
                    semi_axes.len()
                ));
            }
            if center.len() != n + 1 {
                return Err(format!(
                    "ellipsoid center needs {} components, got {}",
                    n + 1,
                    center.len()
                ));
            }
            let e = Ellipsoid::new(semi_axes.clone(), center.clone())
                .map_err(|e| format!("ellipsoid recipe: {e}"))?;
            let b = e
                .support_body(grid)
                .map_err(|e| format!("ellipsoid recipe: {e}"))?;
            Ok((
                b,
                format!("ellipsoid semi-axes {semi_axes:?} center {center:?}"),
                false,
            ))
        }
        BodyRecipe::PerturbedSphere { base, modes } => {
            let b = perturbed_sphere(grid, base, &modes)
                .map_err(|e| format!("perturbed-sphere recipe: {e}"))?;
            Ok((
                b,
                format!("sphere radius {base} with {} harmonic modes", modes.len()),
                false,
            ))
        }
        BodyRecipe::Random {
            amplitude,
            max_degree,
            symmetrized,
        } => {
            if symmetrized {
                let [_, k] = cfg.symmetry.ok_or_else(|| {
                    "random symmetrized body needs a symmetry selector".to_string()
                })?;
                let b = random_invariant_body(grid, seed, amplitude, k)
                    .map_err(|e| format!("random recipe: {e}"))?;
                Ok((
                    b,
                    format!(
                        "random {k}-vertex-group invariant body, seed {seed}, \
                         amplitude {amplitude}"
                    ),
                    false,
                ))
            } else {
                let b = random_smooth_body(grid, seed, amplitude, max_degree)
                    .map_err(|e| format!("random recipe: {e}"))?;
                Ok((
                    b,
                    format!("random body, seed {seed}, amplitude {amplitude}"),
                    false,
                ))
            }
        }
        BodyRecipe::InvariantBump { k, amplitude } => {
            let b = invariant_bump(n, k, grid, amplitude)
                .map_err(|e| format!("invariant-bump recipe: {e}"))?;
            Ok((
                b,
                format!("unit sphere with {k}-vertex invariant bump, amplitude {amplitude}"),
                false,
            ))
        }
        BodyRecipe::File { path } => {
            let (b, desc) = read_body(&path).map_err(|e| format!("body file: {e}"))?;
            if b.h.grid.n != n {
                return Err(format!(
                    "body file is on S^{}, config says n = {n}",
                    b.h.grid.n
                ));
            }
            if let Some(res) = &cfg.resolution {
                let file_res = if b.h.grid.n == 1 {
                    vec![b.h.grid.ntheta]
                } else {
                    vec![b.h.grid.ntheta, b.h.grid.nphi]
                };
                if &file_res != res {
                    return Err(format!(
                        "body file resolution {file_res:?} differs from config {res:?}"
                    ));
                }
            }
            Ok((b, desc, false))
        }
    }
}

/// Validate a parsed config and construct the run inputs.  Any error here
/// is a schema violation (exit 2).
pub fn validate_and_build(cfg: &RunConfig) -> Result<BuiltRun, String> {
    let command = Command::parse(&cfg.command)
        .ok_or_else(|| format!("unknown command {:?}", cfg.command))?;
    let seed = cfg.seed.unwrap_or(0);

    if command == Command::Verify {
        let suite = cfg
            .suite
            .as_deref()
            .ok_or_else(|| "verify command needs a `suite` field".to_string())?;
        crate::verify::suite_names()
            .contains(&suite)
            .then_some(())
            .ok_or_else(|| {
                format!(
                    "unknown suite {:?}; choose one of {:?}",
                    suite,
                    crate::verify::suite_names()
                )
            })?;
        return Ok(BuiltRun {
            command,
            grid: None,
            group: None,
            body: None,
            body_description: String::new(),
            round_unit_body: false,
        });
    }

    let n = cfg
        .n
        .ok_or_else(|| format!("command {:?} needs `n`", cfg.command))?;
    if n != 1 && n != 2 {
        return Err(format!("n must be 1 or 2, got {n}"));
    }

    // Symmetry selector.
    let group = match cfg.symmetry {
        None => None,
        Some([gn, gk]) => {
            if gn != n {
                return Err(format!(
                    "symmetry selector [{gn}, {gk}] does not match n = {n}"
                ));
            }
            Some(named_group(gn, gk).map_err(|e| format!("symmetry selector: {e}"))?)
        }
    };

    // Exponent requirements per command.
    match command {
        Command::Solve => {
            let p = cfg.p.ok_or("solve needs `p`")?;
            if p >= 1.0 {
                return Err(format!("solve needs p < 1, got {p}"));
            }
        }
        Command::Flow => {
            let a = cfg.alpha.ok_or("flow needs `alpha`")?;
            if !(a > 0.0) {
                return Err(format!("alpha must be positive, got {a}"));
            }
            if let Some(opts) = &cfg.flow {
                if let Some(m) = &opts.mode {
                    if m != "raw" && m != "normalized" {
                        return Err(format!(
                            "flow mode must be \"raw\" or \"normalized\", got {m:?}"
                        ));
                    }
                }
            }
        }
        Command::Bifurcate => {
            let ps: Vec<f64> = cfg
                .p_values
                .clone()
                .or_else(|| cfg.p.map(|p| vec![p]))
                .ok_or("bifurcate needs `p` or `p_values`")?;
            if ps.is_empty() {
                return Err("p_values must not be empty".into());
            }
            if let Some(bad) = ps.iter().find(|p| **p >= 1.0) {
                return Err(format!("bifurcate needs p < 1, got {bad}"));
            }
            let Some([_, _k]) = cfg.symmetry else {
                return Err("bifurcate needs a symmetry selector [n, k]".into());
            };
        }
        Command::Quotient => {
            if let Some(p) = cfg.p {
                if p >= 1.0 {
                    return Err(format!("quotient needs p < 1 when given, got {p}"));
                }
            }
        }
        Command::Spectrum | Command::Verify => {}
    }

    // Grid: required for everything except bifurcate (which pins its own
    // resolutions).
    let grid = if command == Command::Bifurcate {
        None
    } else {
        let res = cfg
            .resolution
            .clone()
            .ok_or_else(|| format!("command {:?} needs `resolution`", cfg.command))?;
        Some(make_grid(n, &res).map_err(|e| format!("resolution: {e}"))?)
    };

    // Initial body: needed by solve, flow, spectrum and quotient.
    let (body, body_description, round_unit_body) = match command {
        Command::Solve | Command::Flow | Command::Spectrum | Command::Quotient => {
            let grid = grid.as_ref().unwrap();
            let (b, d, r) = build_body(cfg, grid, seed)?;
            (Some(b), d, r)
        }
        _ => (None, String::new(), false),
    };

    Ok(BuiltRun {
        command,
        grid,
        group,
        body,
        body_description,
        round_unit_body,
    })
}
