//! Gauss curvature flows of convex bodies.
//!
//! Two explicit-Euler time steppers for the support function:
//!
//! * raw contraction      dh/dt   = -G^alpha,
//! * normalized flow      dh/dtau = -G^alpha + h,
//!
//! where G = 1/det(D^2 h + h I) is the Gauss curvature in the support
//! parametrization.  On top of the steppers sit trajectory diagnostics
//! (radius envelopes, functional monotonicity, extinction-rate
//! classification), a two-stage solver for det(D^2 h + h I) = h^(p-1)
//! (normalized flow with per-step rescaling, then a damped Newton
//! iteration with rotational deflation), and a symmetry-seeded search
//! for non-round solution branches.

use std::fmt;

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;
use serde::Serialize;

use crate::body::{lp_residual, SupportFunction};
use crate::error::{Error, Result};
use crate::functional::{bs_functional, volume};
use crate::grid::{make_grid, ScalarField};
use crate::spectral::{assemble_operator_matrix, rotational_tangent_basis};
use crate::symmetry::{named_group, symmetrize, symmetrize_field, SymmetryGroup};

/// Largest eigenvalue bound of the one-dimensional fourth-order second
/// difference stencil (coefficient magnitudes sum to 64/12 per 1/dx^2,
/// rounded up to 16/3): used in the explicit-step stability cap.
const STENCIL_GAIN: f64 = 16.0 / 3.0;

/// Slack multiplier for checking differential inequalities on sampled
/// trajectories: tolerance = factor * sample gap * local scale.
const ODE_TOL_FACTOR: f64 = 10.0;

/// Minimum number of samples required by the extinction classifier.
const MIN_CLASSIFY_SAMPLES: usize = 5;

/// Relative spread of the linear-fit residual beyond which the
/// extinction-time extrapolation is declared unstable.
const FIT_RESIDUAL_LIMIT: f64 = 0.2;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Which of the two evolutions to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlowMode {
    /// dh/dt = -G^alpha; bodies contract to a point in finite time.
    Raw,
    /// dh/dtau = -G^alpha + h; round fixed points have h = 1.
    Normalized,
}

/// Parameters of a flow run.  Fields are public so callers can adjust the
/// defaults from `FlowConfig::new` before handing the config to `run_flow`.
#[derive(Debug, Clone)]
pub struct FlowConfig {
    /// Sphere dimension n (1 or 2).
    pub n: usize,
    /// Curvature exponent alpha > 0.
    pub alpha: f64,
    pub mode: FlowMode,
    /// Scalar step control: dt <= c_dt * min(h / G^alpha), 0 < c_dt <= 0.5.
    pub c_dt: f64,
    /// Hard upper bound on the time step.
    pub dt_max: f64,
    pub max_steps: usize,
    /// Normalized mode stops when sup |det A - h^(p-1)| falls below
    /// `residual_tol` times the residual scale max(1, max h^(p-1)).
    pub residual_tol: f64,
    /// Raw mode stops when the inner radius min h falls below this.
    pub blowup_m: f64,
    /// Optional fixed horizon for the extinction classifier.  When set the
    /// classifier measures rescaled radii against this time instead of
    /// extrapolating the trajectory's own extinction time.
    pub reference_time: Option<f64>,
    /// Optional symmetry group; the initial body is projected onto the
    /// invariant cone and re-projected every `resymmetrize_every` steps.
    pub symmetry: Option<SymmetryGroup>,
    pub resymmetrize_every: usize,
    /// Record a trajectory sample every this many accepted steps.
    pub sample_every: usize,
    /// Classifier thresholds: type II when the rescaled outer radius
    /// exceeds `type_ii_factor` times the round self-similar level, type
    /// III when the rescaled inner radius falls below `type_iii_factor`
    /// times that level.
    pub type_ii_factor: f64,
    pub type_iii_factor: f64,
    /// Eccentricity constant for the calibrated two-sided envelopes of
    /// symmetric runs.  The true class constant is a coarse a-priori bound;
    /// when none is supplied the check falls back to the largest sampled
    /// eccentricity, which is tight enough that its flags are informational
    /// rather than violations (the bound is first-order loose in the
    /// perturbation amplitude at the radius extremizers).
    pub calibration_gamma: Option<f64>,
}

impl FlowConfig {
    pub fn new(n: usize, alpha: f64, mode: FlowMode) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::BadDimension(n));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Precondition(format!(
                "curvature exponent must be positive and finite, got {alpha}"
            )));
        }
        Ok(FlowConfig {
            n,
            alpha,
            mode,
            c_dt: 0.1,
            dt_max: 1e-2,
            max_steps: 200_000,
            residual_tol: 1e-8,
            blowup_m: 1e-6,
            reference_time: None,
            symmetry: None,
            resymmetrize_every: 10,
            sample_every: 10,
            type_ii_factor: 10.0,
            type_iii_factor: 0.1,
            calibration_gamma: None,
        })
    }

    /// Self-similar contraction exponent: balls shrink like (T - t)^beta.
    pub fn beta(&self) -> f64 {
        1.0 / (1.0 + self.n as f64 * self.alpha)
    }

    /// The curvature-equation exponent paired with this flow: a normalized
    /// fixed point solves det(D^2 h + h I) = h^(p-1) with p = 1 - 1/alpha.
    pub fn exponent_p(&self) -> f64 {
        1.0 - 1.0 / self.alpha
    }

    fn validate(&self) -> Result<()> {
        if self.n != 1 && self.n != 2 {
            return Err(Error::BadDimension(self.n));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Precondition("curvature exponent must be positive".into()));
        }
        if !(self.c_dt > 0.0 && self.c_dt <= 0.5) {
            return Err(Error::Precondition(format!(
                "step factor must lie in (0, 0.5], got {}",
                self.c_dt
            )));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::Precondition("dt_max must be positive".into()));
        }
        if self.resymmetrize_every == 0 || self.sample_every == 0 {
            return Err(Error::Precondition(
                "resymmetrize_every and sample_every must be at least 1".into(),
            ));
        }
        if let Some(t) = self.reference_time {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Precondition("reference time must be positive".into()));
            }
        }
        if let Some(g) = self.calibration_gamma {
            if !(g >= 1.0 && g.is_finite()) {
                return Err(Error::Precondition(format!(
                    "eccentricity calibration must be at least 1, got {g}"
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Trajectory records
// ---------------------------------------------------------------------------

/// One sampled state of a flow.
#[derive(Debug, Clone, Serialize)]
pub struct FlowSample {
    pub t: f64,
    /// Inner radius m = min h.
    pub inner: f64,
    /// Outer radius M = max h.
    pub outer: f64,
    /// Eccentricity M/m.
    pub gamma: f64,
    pub volume: f64,
    /// Scale-invariant curvature functional at the exponent paired with
    /// alpha (NaN when that exponent is nonnegative).
    pub functional: f64,
    /// sup |det A - h^(p-1)| at p = 1 - 1/alpha.
    pub residual: f64,
    /// Cumulative count of determinant clampings since the start.
    pub clamps: usize,
    /// Step size used for the step that produced this sample.
    pub dt: f64,
}

/// Why a flow run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StopReason {
    /// Normalized flow reached the residual tolerance.
    Residual,
    /// Raw flow's inner radius fell below the blow-up floor.
    Blowup,
    /// Step budget exhausted.
    StepCap,
    /// Convexity could not be restored by shrinking the step.
    ConvexityLoss { t: f64, step: usize, min_eig: f64 },
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Residual => write!(f, "residual tolerance reached"),
            StopReason::Blowup => write!(f, "inner radius reached the blow-up floor"),
            StopReason::StepCap => write!(f, "step budget exhausted"),
            StopReason::ConvexityLoss { t, step, min_eig } => write!(
                f,
                "convexity lost at t = {t:.6e} (step {step}, min eigenvalue {min_eig:.3e})"
            ),
        }
    }
}

/// Sampled-trajectory checks of the differential inequalities satisfied by
/// the normalized flow's radii and functional.  A "violation" means the
/// finite-difference slope between consecutive samples breaks the
/// inequality by more than 10 * gap * scale.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    /// Outer radius bound dM/dtau <= M - M^(-n alpha).
    pub upper_violations: usize,
    /// Inner radius bound dm/dtau >= m - m^(-n alpha).
    pub lower_violations: usize,
    /// Monotonicity of the curvature functional along the flow.
    pub f_violations: usize,
    /// Once the outer radius reaches 1 it stays there; None when it never
    /// reaches 1 on the sampled trajectory.
    pub outer_persists: Option<bool>,
    /// Monotone growth of the inner radius once it exceeds 1; None when it
    /// never does.
    pub inner_growth_violations: Option<usize>,
    /// Eccentricity constant used by the calibrated bounds: the configured
    /// calibration when supplied, otherwise the largest sampled
    /// eccentricity.  Recorded only for symmetric runs.
    pub gamma_hat: Option<f64>,
    /// Eccentricity-calibrated two-sided bounds (symmetric runs only):
    /// dM/dtau >= M - gamma_hat^(n alpha) M^(-n alpha) and
    /// dm/dtau <= m - gamma_hat^(-n alpha) m^(-n alpha).  With the
    /// fallback (sampled) eccentricity these counters are informational;
    /// the bounds are guaranteed only for a coarse class constant.
    pub calibrated_upper_violations: Option<usize>,
    pub calibrated_lower_violations: Option<usize>,
}

/// Extinction-rate classes for the raw flow, measured against the round
/// self-similar rate (T - t)^beta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlowupClass {
    /// Both radii track the self-similar rate.
    TypeI,
    /// The outer radius vanishes slower than the self-similar rate.
    TypeII,
    /// The inner radius vanishes faster than the self-similar rate.
    TypeIII,
    /// The extinction-time extrapolation was too unstable to decide.
    Inconclusive,
}

impl fmt::Display for BlowupClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlowupClass::TypeI => write!(f, "type I"),
            BlowupClass::TypeII => write!(f, "type II"),
            BlowupClass::TypeIII => write!(f, "type III"),
            BlowupClass::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Outcome of the extinction-rate classifier.
#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub class: BlowupClass,
    /// Extinction horizon used for the rescaling: the configured reference
    /// time when present, otherwise extrapolated from the outer radius.
    pub t_hat: f64,
    /// Smallest windowed value of (t_hat - t)^(-beta) * inner radius.
    pub l_hat: f64,
    /// Largest windowed value of (t_hat - t)^(-beta) * outer radius.
    pub u_hat: f64,
    pub beta: f64,
    /// Round self-similar level beta^(-beta) that l_hat and u_hat are
    /// compared against.
    pub baseline: f64,
    pub reference_used: bool,
    /// Number of samples in the classification window.
    pub window_len: usize,
    /// Max deviation of the linear fit, relative to the fitted drop
    /// (zero when a reference time is used).
    pub fit_residual: f64,
    pub note: String,
}

/// A completed flow run.
#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub samples: Vec<FlowSample>,
    pub final_body: SupportFunction,
    pub stop: StopReason,
    /// Total accepted steps.
    pub steps: usize,
    /// Differential-inequality checks (normalized runs only).
    pub envelopes: Option<EnvelopeReport>,
    /// Extinction classification (raw runs that ended in blow-up or carry
    /// a reference time), when enough samples were available.
    pub classification: Option<BlowupReport>,
}

// ---------------------------------------------------------------------------
// Stepping
// ---------------------------------------------------------------------------

/// Step-size proposal: the scalar control c_dt * min(h / G^alpha) and the
/// hard cap dt_max, further capped by an explicit-Euler stability estimate
/// of the linearized update.  The stiffest rows sit next to the poles where
/// the azimuthal difference quotient carries a 1/(sin theta * dphi)^2
/// factor; the estimate bounds the diffusion eigenvalue per node by
/// alpha * G^(1+alpha) * (16/3) * (U^11/dtheta^2 + U^22/(sin theta dphi)^2)
/// plus the zeroth-order trace term.
fn propose_dt(k: &SupportFunction, gpow: &[f64], cfg: &FlowConfig) -> f64 {
    let g = k.grid();
    let inv_alpha = 1.0 / cfg.alpha;
    let mut ratio_min = f64::INFINITY;
    let mut lam_max = 0.0_f64;
    for i in 0..g.num_nodes() {
        let h = k.h.v[i];
        let gp = gpow[i];
        ratio_min = ratio_min.min(h / gp);
        // G^(1+alpha) with the same determinant clamp as gpow itself.
        let gfull = gp * gp.powf(inv_alpha);
        let lam = if g.n == 1 {
            cfg.alpha * gfull * (STENCIL_GAIN / (g.dtheta * g.dtheta) + 1.0)
        } else {
            let u11 = k.a[3 * i + 2]; // pairs with the theta-theta stencil
            let u22 = k.a[3 * i]; // pairs with the phi-phi stencil
            let x = g.node(i);
            let s2 = (x[0] * x[0] + x[1] * x[1]).max(1e-300);
            cfg.alpha
                * gfull
                * (STENCIL_GAIN * (u11 / (g.dtheta * g.dtheta) + u22 / (s2 * g.dphi * g.dphi))
                    + (u11 + u22).abs())
        };
        lam_max = lam_max.max(lam);
    }
    let mut dt = cfg.dt_max;
    if ratio_min.is_finite() {
        dt = dt.min(cfg.c_dt * ratio_min);
    }
    if lam_max > 0.0 && lam_max.is_finite() {
        dt = dt.min(1.0 / lam_max);
    }
    dt
}

/// One explicit Euler update from precomputed G^alpha values; optionally
/// projects the updated field onto the symmetry-invariant cone before
/// re-checking convexity.
fn step_core(
    k: &SupportFunction,
    cfg: &FlowConfig,
    gpow: &[f64],
    dt: f64,
    project: bool,
) -> Result<SupportFunction> {
    let g = k.grid().clone();
    let v: Vec<f64> = (0..g.num_nodes())
        .map(|i| {
            let h = k.h.v[i];
            match cfg.mode {
                FlowMode::Raw => h - dt * gpow[i],
                FlowMode::Normalized => h + dt * (h - gpow[i]),
            }
        })
        .collect();
    let mut field = ScalarField::new(g, v)?;
    if project {
        if let Some(group) = &cfg.symmetry {
            field = symmetrize_field(&field, group)?;
        }
    }
    let body = SupportFunction::new(field)?;
    let (ok, min_eig) = body.convexity_check();
    if !ok {
        return Err(Error::NonConvex { min_eig });
    }
    Ok(body)
}

/// One flow step with the given dt; projects onto the invariant cone when
/// the config carries a symmetry group.
pub fn flow_step(k: &SupportFunction, cfg: &FlowConfig, dt: f64) -> Result<SupportFunction> {
    cfg.validate()?;
    if k.n() != cfg.n {
        return Err(Error::GridMismatch);
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Precondition(format!("step size must be positive, got {dt}")));
    }
    let (gpow, _) = k.curvature_power(cfg.alpha);
    step_core(k, cfg, &gpow, dt, cfg.symmetry.is_some())
}

/// sup |det A - h^(p-1)| together with the residual scale
/// max(1, max h^(p-1)).
fn residual_sup_scaled(k: &SupportFunction, p: f64) -> (f64, f64) {
    let mut sup = 0.0_f64;
    let mut scale = 1.0_f64;
    for i in 0..k.grid().num_nodes() {
        let target = k.h.v[i].powf(p - 1.0);
        sup = sup.max((k.det_a[i] - target).abs());
        scale = scale.max(target.abs());
    }
    (sup, scale)
}

fn make_sample(k: &SupportFunction, t: f64, dt: f64, clamps: usize, p: f64) -> FlowSample {
    let inner = k.h.min();
    let outer = k.h.max();
    let functional = if p < 0.0 {
        bs_functional(k, p, false).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    let (_, residual, _) = lp_residual(k, p);
    FlowSample {
        t,
        inner,
        outer,
        gamma: outer / inner,
        volume: volume(k),
        functional,
        residual,
        clamps,
        dt,
    }
}

/// Integrate the configured flow from `h0`.
///
/// The step size is adapted every step; when a step loses convexity it is
/// retried with halved dt up to three times, after which the run ends with
/// a `ConvexityLoss` stop and the trajectory collected so far is returned.
/// Raw runs stop when min h drops below `blowup_m`; normalized runs stop
/// at the residual tolerance.  Normalized trajectories carry envelope
/// checks; raw trajectories that end in blow-up (or carry a reference
/// time) are classified by extinction rate.
pub fn run_flow(h0: &SupportFunction, cfg: &FlowConfig) -> Result<FlowTrajectory> {
    cfg.validate()?;
    if h0.n() != cfg.n {
        return Err(Error::GridMismatch);
    }
    if let Some(group) = &cfg.symmetry {
        if group.dim != h0.grid().ambient_dim() {
            return Err(Error::GridMismatch);
        }
    }
    let (ok, min_eig) = h0.convexity_check();
    if !ok {
        return Err(Error::NonConvex { min_eig });
    }
    let p = cfg.exponent_p();
    let mut body = match &cfg.symmetry {
        Some(group) => symmetrize(h0, group)?,
        None => h0.clone(),
    };
    let mut t = 0.0_f64;
    let mut clamps_total = 0usize;
    let mut steps = 0usize;
    let mut samples = vec![make_sample(&body, t, 0.0, clamps_total, p)];
    let mut stop = StopReason::StepCap;

    for step in 1..=cfg.max_steps {
        let (gpow, step_clamps) = body.curvature_power(cfg.alpha);
        let mut dt = propose_dt(&body, &gpow, cfg);
        let project = cfg.symmetry.is_some() && step % cfg.resymmetrize_every == 0;
        let mut next = None;
        let mut last_eig = f64::NAN;
        for _attempt in 0..4 {
            match step_core(&body, cfg, &gpow, dt, project) {
                Ok(b) => {
                    next = Some(b);
                    break;
                }
                Err(Error::NonConvex { min_eig }) => {
                    last_eig = min_eig;
                    dt *= 0.5;
                }
                Err(Error::NonPositiveSupport(m)) => {
                    last_eig = m;
                    dt *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        let Some(nb) = next else {
            stop = StopReason::ConvexityLoss { t, step, min_eig: last_eig };
            break;
        };
        body = nb;
        t += dt;
        clamps_total += step_clamps;
        steps = step;

        let mut do_sample = step % cfg.sample_every == 0 || step == cfg.max_steps;
        match cfg.mode {
            FlowMode::Raw => {
                if body.h.min() < cfg.blowup_m {
                    stop = StopReason::Blowup;
                    do_sample = true;
                }
            }
            FlowMode::Normalized => {
                let (sup, scale) = residual_sup_scaled(&body, p);
                if sup <= cfg.residual_tol * scale {
                    stop = StopReason::Residual;
                    do_sample = true;
                }
            }
        }
        if do_sample {
            samples.push(make_sample(&body, t, dt, clamps_total, p));
        }
        if stop != StopReason::StepCap {
            break;
        }
    }
    if let Some(last) = samples.last() {
        if last.t < t {
            samples.push(make_sample(&body, t, 0.0, clamps_total, p));
        }
    }

    let envelopes = match cfg.mode {
        FlowMode::Normalized => Some(envelope_report(&samples, cfg)),
        FlowMode::Raw => None,
    };
    let classification = if cfg.mode == FlowMode::Raw
        && (stop == StopReason::Blowup || cfg.reference_time.is_some())
    {
        classify_samples(&samples, cfg).ok()
    } else {
        None
    };
    Ok(FlowTrajectory {
        samples,
        final_body: body,
        stop,
        steps,
        envelopes,
        classification,
    })
}

// ---------------------------------------------------------------------------
// Envelope checks
// ---------------------------------------------------------------------------

/// Check the sampled differential inequalities of a normalized-flow
/// trajectory (also usable on samples read back from disk).
pub fn envelope_checks(samples: &[FlowSample], cfg: &FlowConfig) -> EnvelopeReport {
    envelope_report(samples, cfg)
}

fn envelope_report(samples: &[FlowSample], cfg: &FlowConfig) -> EnvelopeReport {
    let na = cfg.n as f64 * cfg.alpha;
    let symmetric = cfg.symmetry.is_some();
    let gamma_hat = if symmetric {
        cfg.calibration_gamma
            .unwrap_or_else(|| samples.iter().map(|s| s.gamma).fold(1.0, f64::max))
    } else {
        f64::NAN
    };

    let mut upper = 0usize;
    let mut lower = 0usize;
    let mut fviol = 0usize;
    let mut cal_upper = 0usize;
    let mut cal_lower = 0usize;
    let mut growth: Option<usize> = None;
    let mut persists: Option<bool> = None;

    for w in samples.windows(2) {
        let (s1, s2) = (&w[0], &w[1]);
        let gap = s2.t - s1.t;
        if !(gap > 0.0) {
            continue;
        }
        let scale_m = 1.0 + s1.outer + s1.outer.powf(-na);
        let scale_i = 1.0 + s1.inner + s1.inner.powf(-na);
        let tol_m = ODE_TOL_FACTOR * gap * scale_m;
        let tol_i = ODE_TOL_FACTOR * gap * scale_i;
        let slope_m = (s2.outer - s1.outer) / gap;
        let slope_i = (s2.inner - s1.inner) / gap;
        if slope_m > s1.outer - s1.outer.powf(-na) + tol_m {
            upper += 1;
        }
        if slope_i < s1.inner - s1.inner.powf(-na) - tol_i {
            lower += 1;
        }
        if symmetric {
            if slope_m < s1.outer - gamma_hat.powf(na) * s1.outer.powf(-na) - tol_m {
                cal_upper += 1;
            }
            if slope_i > s1.inner - gamma_hat.powf(-na) * s1.inner.powf(-na) + tol_i {
                cal_lower += 1;
            }
        }
        if s1.functional.is_finite() && s2.functional.is_finite() {
            let tol_f = 1e-8 * s1.functional.abs().max(1.0);
            if s2.functional < s1.functional - tol_f {
                fviol += 1;
            }
        }
        // Persistence: once the outer radius reaches 1 it must not fall
        // below 1 by more than the sampling tolerance afterwards.
        if persists.is_none() && s1.outer >= 1.0 {
            persists = Some(true);
        }
        if persists == Some(true) && s2.outer < 1.0 - tol_m {
            persists = Some(false);
        }
        // Growth: once the inner radius exceeds 1 it must not decrease by
        // more than the sampling tolerance.
        if growth.is_none() && s1.inner > 1.0 + 1e-9 {
            growth = Some(0);
        }
        if let Some(g) = growth.as_mut() {
            if s2.inner < s1.inner - tol_i {
                *g += 1;
            }
        }
    }

    EnvelopeReport {
        upper_violations: upper,
        lower_violations: lower,
        f_violations: fviol,
        outer_persists: persists,
        inner_growth_violations: growth,
        gamma_hat: symmetric.then_some(gamma_hat),
        calibrated_upper_violations: symmetric.then_some(cal_upper),
        calibrated_lower_violations: symmetric.then_some(cal_lower),
    }
}

// ---------------------------------------------------------------------------
// Extinction classification
// ---------------------------------------------------------------------------

fn least_squares_line(ts: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (t, y) in ts.iter().zip(ys) {
        sxx += (t - mt) * (t - mt);
        sxy += (t - mt) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    (my - slope * mt, slope)
}

/// Classify the extinction rate of a raw-flow trajectory.
///
/// The horizon is the configured reference time when present; otherwise it
/// is extrapolated by a linear least-squares fit of (outer radius)^(1/beta)
/// over the final tenth of the samples, which is exact for round bodies.
/// Over the same window the rescaled radii (t_hat - t)^(-beta) * m and
/// (t_hat - t)^(-beta) * M are compared against the round self-similar
/// level beta^(-beta): type II when the outer ratio exceeds
/// `type_ii_factor` times that level, type III when the inner ratio falls
/// below `type_iii_factor` times it, type I otherwise.  An unstable
/// extrapolation yields `Inconclusive`.
pub fn classify_blowup(traj: &FlowTrajectory, cfg: &FlowConfig) -> Result<BlowupReport> {
    classify_samples(&traj.samples, cfg)
}

fn classify_samples(samples: &[FlowSample], cfg: &FlowConfig) -> Result<BlowupReport> {
    cfg.validate()?;
    let beta = cfg.beta();
    let baseline = beta.powf(-beta);
    let eligible: Vec<&FlowSample> = match cfg.reference_time {
        Some(tr) => samples.iter().filter(|s| s.t < tr).collect(),
        None => samples.iter().collect(),
    };
    if eligible.len() < MIN_CLASSIFY_SAMPLES {
        return Err(Error::TrajectoryTooShort {
            need: MIN_CLASSIFY_SAMPLES,
            have: eligible.len(),
        });
    }
    let w = (eligible.len().div_ceil(10)).max(MIN_CLASSIFY_SAMPLES).min(eligible.len());
    let window = &eligible[eligible.len() - w..];

    let mut note = String::new();
    let mut fit_residual = 0.0_f64;
    let reference_used = cfg.reference_time.is_some();
    let t_hat = match cfg.reference_time {
        Some(tr) => tr,
        None => {
            let ts: Vec<f64> = window.iter().map(|s| s.t).collect();
            let ys: Vec<f64> = window.iter().map(|s| s.outer.powf(1.0 / beta)).collect();
            let (a, b) = least_squares_line(&ts, &ys);
            let spread = ys
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(*y), hi.max(*y)));
            let drop = (spread.1 - spread.0).max(f64::MIN_POSITIVE);
            let max_dev = ts
                .iter()
                .zip(&ys)
                .map(|(t, y)| (y - (a + b * t)).abs())
                .fold(0.0_f64, f64::max);
            fit_residual = max_dev / drop;
            if !(b < 0.0) || !b.is_finite() {
                note = format!("outer radius is not decreasing over the fit window (slope {b:.3e})");
                f64::NAN
            } else if fit_residual > FIT_RESIDUAL_LIMIT {
                note = format!(
                    "linear fit of the rate law is curved (relative residual {fit_residual:.3})"
                );
                f64::NAN
            } else {
                let th = -a / b;
                if th <= ts[ts.len() - 1] {
                    note = format!("extrapolated extinction time {th:.6e} precedes the data");
                    f64::NAN
                } else {
                    th
                }
            }
        }
    };

    if !t_hat.is_finite() {
        return Ok(BlowupReport {
            class: BlowupClass::Inconclusive,
            t_hat,
            l_hat: f64::NAN,
            u_hat: f64::NAN,
            beta,
            baseline,
            reference_used,
            window_len: w,
            fit_residual,
            note,
        });
    }

    let mut l_hat = f64::INFINITY;
    let mut u_hat = 0.0_f64;
    for s in window {
        let rem = t_hat - s.t;
        if rem <= 0.0 {
            continue;
        }
        let r = rem.powf(-beta);
        l_hat = l_hat.min(r * s.inner);
        u_hat = u_hat.max(r * s.outer);
    }
    let class = if u_hat > cfg.type_ii_factor * baseline {
        BlowupClass::TypeII
    } else if l_hat < cfg.type_iii_factor * baseline {
        BlowupClass::TypeIII
    } else {
        BlowupClass::TypeI
    };
    Ok(BlowupReport {
        class,
        t_hat,
        l_hat,
        u_hat,
        beta,
        baseline,
        reference_used,
        window_len: w,
        fit_residual,
        note,
    })
}

// ---------------------------------------------------------------------------
// Two-stage solver
// ---------------------------------------------------------------------------

/// Options for `solve_minkowski`.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Optional symmetry group: the iterates are kept in the invariant cone.
    pub symmetry: Option<SymmetryGroup>,
    /// Stage-1 (normalized flow) step budget.
    pub flow_steps_max: usize,
    /// Stage-1 exit: relative residual below this hands over to Newton.
    pub stage1_tol: f64,
    /// Final relative residual target for the Newton stage.
    pub newton_tol: f64,
    pub newton_max: usize,
    pub c_dt: f64,
    pub dt_max: f64,
    pub resymmetrize_every: usize,
    /// Stage-1 also exits when the best residual has not improved by 1%
    /// within this many steps (the iterate may sit on a non-round branch
    /// whose neutral rotations the flow cannot remove).
    pub stall_window: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            symmetry: None,
            flow_steps_max: 400_000,
            stage1_tol: 1e-4,
            newton_tol: 1e-8,
            newton_max: 40,
            c_dt: 0.1,
            dt_max: 1e-2,
            resymmetrize_every: 10,
            stall_window: 20_000,
        }
    }
}

/// Result of `solve_minkowski`.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub body: SupportFunction,
    /// Final sup |det A - h^(p-1)| (absolute).
    pub residual_sup: f64,
    /// Relative residual at the stage-1 handover.
    pub stage1_residual: f64,
    pub flow_steps: usize,
    pub newton_iterations: usize,
}

/// Solve det(D^2 h + h I) = h^(p-1), p < 1, starting from `h0`.
///
/// Stage 1 runs the normalized flow with a per-step homothety chosen so
/// the residual has zero mean weight — this removes the scale instability
/// of the normalized fixed point.  Stage 2 is a damped Newton iteration on
/// R(h) = det A - h^(p-1); its linearization is singular exactly along the
/// rotational tangents of a non-round iterate, so those directions are
/// deflated with a bordered system.  Both stages keep the iterates inside
/// the symmetry cone when a group is supplied.
pub fn solve_minkowski(h0: &SupportFunction, p: f64, opts: &SolveOptions) -> Result<SolveOutcome> {
    if !(p < 1.0) {
        return Err(Error::Precondition(format!(
            "the curvature equation exponent must satisfy p < 1, got {p}"
        )));
    }
    let n = h0.n();
    let alpha = 1.0 / (1.0 - p);
    let mut cfg = FlowConfig::new(n, alpha, FlowMode::Normalized)?;
    cfg.c_dt = opts.c_dt;
    cfg.dt_max = opts.dt_max;
    cfg.symmetry = opts.symmetry.clone();
    cfg.resymmetrize_every = opts.resymmetrize_every;
    if let Some(group) = &cfg.symmetry {
        if group.dim != h0.grid().ambient_dim() {
            return Err(Error::GridMismatch);
        }
    }
    let (ok, min_eig) = h0.convexity_check();
    if !ok {
        return Err(Error::NonConvex { min_eig });
    }

    let mut body = match &cfg.symmetry {
        Some(group) => symmetrize(h0, group)?,
        None => h0.clone(),
    };

    // Stage 1: normalized flow with per-step rescaling. A homothety c maps
    // the residual integrals I1 = int det A, I2 = int h^(p-1) to c^n I1 and
    // c^(p-1) I2; matching them fixes c = (I1/I2)^(1/(p-1-n)).
    let rescale_exp = 1.0 / (p - 1.0 - n as f64);
    let grid = body.grid().clone();
    let mut t = 0.0_f64;
    let mut flow_steps = 0usize;
    let mut best = f64::INFINITY;
    let mut best_step = 0usize;
    let mut stage1_residual = {
        let (sup, scale) = residual_sup_scaled(&body, p);
        sup / scale
    };
    if stage1_residual > opts.stage1_tol {
        for step in 1..=opts.flow_steps_max {
            let (gpow, _) = body.curvature_power(cfg.alpha);
            let mut dt = propose_dt(&body, &gpow, &cfg);
            let project = cfg.symmetry.is_some() && step % cfg.resymmetrize_every == 0;
            let mut next = None;
            let mut last_eig = f64::NAN;
            for _attempt in 0..4 {
                match step_core(&body, &cfg, &gpow, dt, project) {
                    Ok(b) => {
                        next = Some(b);
                        break;
                    }
                    Err(Error::NonConvex { min_eig }) => {
                        last_eig = min_eig;
                        dt *= 0.5;
                    }
                    Err(Error::NonPositiveSupport(m)) => {
                        last_eig = m;
                        dt *= 0.5;
                    }
                    Err(e) => return Err(e),
                }
            }
            let Some(nb) = next else {
                return Err(Error::ConvexityLost { t, step, min_eig: last_eig });
            };
            body = nb;
            t += dt;
            flow_steps = step;

            let mut i1 = 0.0;
            let mut i2 = 0.0;
            for i in 0..grid.num_nodes() {
                i1 += grid.weights[i] * body.det_a[i];
                i2 += grid.weights[i] * body.h.v[i].powf(p - 1.0);
            }
            let c = (i1 / i2).powf(rescale_exp);
            if c.is_finite() && c > 0.0 {
                body = body.scaled(c);
            }

            let (sup, scale) = residual_sup_scaled(&body, p);
            let rel = sup / scale;
            stage1_residual = rel;
            if rel < 0.99 * best {
                best = rel;
                best_step = step;
            }
            if rel <= opts.stage1_tol || step - best_step >= opts.stall_window {
                break;
            }
        }
    }

    // Stage 2: damped Newton with rotational deflation.
    let nn = grid.num_nodes();
    let mut newton_iterations = 0usize;
    for it in 1..=opts.newton_max {
        let (sup, scale) = residual_sup_scaled(&body, p);
        if sup <= opts.newton_tol * scale {
            return Ok(SolveOutcome {
                residual_sup: sup,
                stage1_residual,
                flow_steps,
                newton_iterations,
                body,
            });
        }

        let lmat = assemble_operator_matrix(&body)?;
        let tangents = rotational_tangent_basis(&body);
        let r = tangents.len();
        let dim = nn + r;
        let mut big = Array2::<f64>::zeros((dim, dim));
        for i in 0..nn {
            let hp2 = (p - 1.0) * body.h.v[i].powf(p - 2.0);
            for j in 0..nn {
                big[[i, j]] = -lmat[[i, j]];
            }
            big[[i, i]] -= hp2;
        }
        for (b, tb) in tangents.iter().enumerate() {
            for i in 0..nn {
                big[[i, nn + b]] = tb.v[i];
                big[[nn + b, i]] = grid.weights[i] * tb.v[i];
            }
        }
        let mut rhs = Array1::<f64>::zeros(dim);
        for i in 0..nn {
            rhs[i] = -(body.det_a[i] - body.h.v[i].powf(p - 1.0));
        }
        let delta = big
            .solve_into(rhs)
            .map_err(|e| Error::Solver(format!("newton linear solve failed: {e}")))?;

        let mut lam = 1.0_f64;
        let mut accepted = None;
        for _ in 0..30 {
            let v: Vec<f64> = (0..nn).map(|i| body.h.v[i] + lam * delta[i]).collect();
            let trial = ScalarField::new(grid.clone(), v).and_then(|f| {
                let f = match &opts.symmetry {
                    Some(group) => symmetrize_field(&f, group)?,
                    None => f,
                };
                SupportFunction::new(f)
            });
            if let Ok(cand) = trial {
                let (okc, _) = cand.convexity_check();
                if okc {
                    let (sup2, _) = residual_sup_scaled(&cand, p);
                    if sup2 <= sup * (1.0 - 0.25 * lam) {
                        accepted = Some(cand);
                        break;
                    }
                }
            }
            lam *= 0.5;
        }
        body = accepted.ok_or_else(|| {
            Error::Solver(format!(
                "newton line search stalled at iteration {it} (residual {sup:.3e})"
            ))
        })?;
        newton_iterations = it;
    }

    let (sup, scale) = residual_sup_scaled(&body, p);
    if sup <= opts.newton_tol * scale {
        Ok(SolveOutcome {
            residual_sup: sup,
            stage1_residual,
            flow_steps,
            newton_iterations,
            body,
        })
    } else {
        Err(Error::Solver(format!(
            "newton did not reach tolerance: residual {sup:.3e} vs target {:.3e}",
            opts.newton_tol * scale
        )))
    }
}

// ---------------------------------------------------------------------------
// Branch search
// ---------------------------------------------------------------------------

/// A solution found by `bifurcation_search`.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub p: f64,
    /// Vertex count of the symmetry polytope the seed was built from.
    pub k: usize,
    /// Eccentricity max h / min h of the solution.
    pub gamma: f64,
    /// Radius contrast (M - m)/(M + m) of the solution.
    pub amplitude: f64,
    pub residual_sup: f64,
    /// True when the solution is non-round beyond grid tolerance.
    pub non_round: bool,
    pub body: SupportFunction,
}

/// Seed the round solution with an invariant harmonic of the k-vertex
/// polytope group and solve the curvature equation at exponent `p`.
///
/// Rounds trivially when p is inside the uniqueness range of the seed's
/// harmonic degree; lands on the symmetry-breaking branch beyond it.  The
/// seed amplitude `eps0` (at most 0.3) is halved until the seed is convex.
pub fn bifurcation_search(n: usize, p: f64, k: usize, eps0: f64) -> Result<BranchPoint> {
    if !(eps0 > 0.0 && eps0 <= 0.3) {
        return Err(Error::Precondition(format!(
            "seed amplitude must lie in (0, 0.3], got {eps0}"
        )));
    }
    let grid = match n {
        1 => make_grid(1, &[240])?,
        2 => make_grid(2, &[24, 48])?,
        other => return Err(Error::BadDimension(other)),
    };
    let group = named_group(n, k)?;
    let psi = crate::recipe::invariant_profile(n, k, &grid)?;

    let mut eps = eps0;
    let mut seed = None;
    for _ in 0..20 {
        let v: Vec<f64> = psi.v.iter().map(|a| 1.0 + eps * a).collect();
        if let Ok(cand) = ScalarField::new(grid.clone(), v).and_then(SupportFunction::new) {
            if cand.convexity_check().0 {
                seed = Some(cand);
                break;
            }
        }
        eps *= 0.5;
    }
    let seed = seed.ok_or_else(|| {
        Error::Precondition("could not build a convex seed at any amplitude".into())
    })?;

    let opts = SolveOptions {
        symmetry: Some(group),
        ..SolveOptions::default()
    };
    let out = solve_minkowski(&seed, p, &opts)?;
    let m = out.body.h.min();
    let mm = out.body.h.max();
    let gamma = mm / m;
    Ok(BranchPoint {
        p,
        k,
        gamma,
        amplitude: (mm - m) / (mm + m),
        residual_sup: out.residual_sup,
        non_round: gamma - 1.0 > 1e-3,
        body: out.body,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn ball(n: usize, dims: &[usize], c: f64) -> SupportFunction {
        let grid = make_grid(n, dims).unwrap();
        SupportFunction::from_fn(&grid, |_| c).unwrap()
    }

    fn trifold(dims: usize, amp: f64) -> SupportFunction {
        let grid = make_grid(1, &[dims]).unwrap();
        SupportFunction::from_fn(&grid, |x| 1.0 + amp * (3.0 * x[1].atan2(x[0])).cos()).unwrap()
    }

    fn octa_quartic(dims: &[usize], base: f64, amp: f64) -> SupportFunction {
        let grid = make_grid(2, dims).unwrap();
        SupportFunction::from_fn(&grid, |x| {
            let q = x[0].powi(4) + x[1].powi(4) + x[2].powi(4) - 0.6;
            base * (1.0 + amp * q)
        })
        .unwrap()
    }

    #[test]
    fn round_bodies_are_fixed_points_of_the_normalized_flow() {
        for (n, dims) in [(1usize, vec![64usize]), (2, vec![16, 32])] {
            let cfg = FlowConfig::new(n, 1.0 / (n as f64 + 3.0), FlowMode::Normalized).unwrap();
            let b = ball(n, &dims, 1.0);
            let next = flow_step(&b, &cfg, 1e-3).unwrap();
            let err = next
                .h
                .v
                .iter()
                .map(|v| (v - 1.0).abs())
                .fold(0.0_f64, f64::max);
            assert!(err < 1e-14, "unit ball moved by {err:.3e} (n = {n})");
        }
    }

    #[test]
    fn shrinking_ball_follows_the_power_law() {
        // For a ball the raw flow reduces to dh/dt = -h^(-n alpha), so
        // h^(1 + n alpha) decreases linearly with slope -(1 + n alpha).
        let alpha = 1.0 / 12.0;
        let mut cfg = FlowConfig::new(1, alpha, FlowMode::Raw).unwrap();
        cfg.dt_max = 1e-4;
        cfg.max_steps = 1000;
        cfg.sample_every = 100;
        let traj = run_flow(&ball(1, &[64], 1.0), &cfg).unwrap();
        assert_eq!(traj.stop, StopReason::StepCap);
        let expo = 1.0 + alpha;
        let t_end = traj.samples.last().unwrap().t;
        assert!((t_end - 0.1).abs() < 1e-12, "t_end = {t_end}");
        let worst = traj
            .final_body
            .h
            .v
            .iter()
            .map(|h| (h.powf(expo) - (1.0 - expo * t_end)).abs())
            .fold(0.0_f64, f64::max);
        assert!(worst < 1e-6, "power-law deviation {worst:.3e}");
    }

    #[test]
    fn ball_extinction_classifies_as_type_one() {
        let alpha = 1.0 / 12.0;
        let mut cfg = FlowConfig::new(1, alpha, FlowMode::Raw).unwrap();
        cfg.dt_max = 5e-4;
        cfg.blowup_m = 0.05;
        cfg.sample_every = 10;
        let traj = run_flow(&ball(1, &[64], 1.0), &cfg).unwrap();
        assert_eq!(traj.stop, StopReason::Blowup);
        let rep = traj.classification.as_ref().expect("classification present");
        assert_eq!(rep.class, BlowupClass::TypeI);
        assert!(!rep.reference_used);
        let b = rep.baseline;
        assert!(
            (rep.l_hat - b).abs() < 0.01 * b && (rep.u_hat - b).abs() < 0.01 * b,
            "rescaled radii {} / {} vs round level {}",
            rep.l_hat,
            rep.u_hat,
            b
        );
        // The extrapolated extinction time matches the closed form
        // T = beta * c^(1/beta) for the unit ball.
        let t_exact = cfg.beta();
        assert!(
            (rep.t_hat - t_exact).abs() < 0.01 * t_exact,
            "extinction time {} vs {}",
            rep.t_hat,
            t_exact
        );
    }

    #[test]
    fn reference_horizon_detects_slow_collapse() {
        // A symmetric body whose inner radius exceeds the ball radius
        // (T/beta)^beta tied to the reference horizon T outlives that
        // horizon, so its rescaled radii blow up as t approaches T: the
        // classifier must report type II and must not see type III.
        let alpha = 0.25;
        let mut cfg = FlowConfig::new(1, alpha, FlowMode::Raw).unwrap();
        let beta = cfg.beta();
        let r0 = 0.95;
        let t_ref = 0.3;
        assert!(r0 > (t_ref / beta).powf(beta), "seed must sit above the threshold");
        cfg.reference_time = Some(t_ref);
        cfg.symmetry = Some(named_group(1, 3).unwrap());
        cfg.sample_every = 1;
        cfg.max_steps = 4000;
        cfg.blowup_m = 1e-3;
        let seed = trifold(96, 0.05); // min h = 0.95 = r0
        assert!((seed.h.min() - r0).abs() < 1e-12);
        let traj = run_flow(&seed, &cfg).unwrap();
        let last_t = traj.samples.last().unwrap().t;
        assert!(last_t > t_ref, "run must outlive the reference horizon, got {last_t}");
        let rep = traj.classification.as_ref().expect("classification present");
        assert!(rep.reference_used);
        assert_eq!(rep.class, BlowupClass::TypeII);
        assert!(rep.u_hat > cfg.type_ii_factor * rep.baseline);
        assert!(rep.l_hat > cfg.type_iii_factor * rep.baseline);
    }

    #[test]
    fn normalized_envelopes_hold_for_a_symmetric_body() {
        let mut cfg = FlowConfig::new(2, 1.0 / 6.0, FlowMode::Normalized).unwrap();
        cfg.symmetry = Some(named_group(2, 6).unwrap());
        cfg.max_steps = 2500;
        cfg.sample_every = 10;
        let traj = run_flow(&octa_quartic(&[16, 32], 1.0, 0.08), &cfg).unwrap();
        assert_eq!(traj.stop, StopReason::StepCap);
        let env = traj.envelopes.as_ref().expect("envelope report present");
        assert_eq!(env.upper_violations, 0, "outer-radius envelope violated");
        assert_eq!(env.lower_violations, 0, "inner-radius envelope violated");
        assert_eq!(env.f_violations, 0, "functional decreased along the flow");
        assert_eq!(env.outer_persists, Some(true));
        // With the tight sampled eccentricity the calibrated counters are
        // informational flags; with a class-scale constant the two-sided
        // bounds must hold outright.
        let gh = env.gamma_hat.unwrap();
        assert!(gh > 1.0 && gh < 1.2, "gamma_hat = {gh}");
        assert!(env.calibrated_upper_violations.is_some());
        assert!(env.calibrated_lower_violations.is_some());
        let mut coarse = cfg.clone();
        coarse.calibration_gamma = Some(2.0);
        let env2 = envelope_checks(&traj.samples, &coarse);
        assert_eq!(env2.gamma_hat, Some(2.0));
        assert_eq!(env2.calibrated_upper_violations, Some(0));
        assert_eq!(env2.calibrated_lower_violations, Some(0));
    }

    #[test]
    fn inner_radius_above_one_grows_monotonically() {
        let mut cfg = FlowConfig::new(2, 1.0 / 6.0, FlowMode::Normalized).unwrap();
        cfg.symmetry = Some(named_group(2, 6).unwrap());
        cfg.max_steps = 1500;
        cfg.sample_every = 10;
        let traj = run_flow(&octa_quartic(&[16, 32], 1.25, 0.05), &cfg).unwrap();
        let env = traj.envelopes.as_ref().unwrap();
        assert_eq!(env.inner_growth_violations, Some(0));
        let first = traj.samples.first().unwrap().inner;
        let last = traj.samples.last().unwrap().inner;
        assert!(first > 1.0, "seed inner radius {first}");
        assert!(last > 1.3, "inner radius failed to grow: {first} -> {last}");
    }

    #[test]
    fn flow_steps_commute_with_node_preserving_rotations() {
        // Quarter turn about the polar axis: maps the longitude grid to
        // itself, so equivariance of the stepper is exact.
        let dims = [24usize, 48usize];
        let grid = make_grid(2, &dims).unwrap();
        let body = SupportFunction::from_fn(&grid, |x| {
            1.0 + 0.05 * x[0] * x[1] * x[2] + 0.03 * x[0] * x[0] + 0.02 * x[2]
        })
        .unwrap();
        let rot = |x: &[f64]| [-x[1], x[0], x[2]];
        // Node permutation realizing the rotation.
        let nn = grid.num_nodes();
        let mut perm = vec![usize::MAX; nn];
        for i in 0..nn {
            let y = rot(grid.node(i));
            let mut best = (f64::INFINITY, usize::MAX);
            for j in 0..nn {
                let z = grid.node(j);
                let d2 = (z[0] - y[0]).powi(2) + (z[1] - y[1]).powi(2) + (z[2] - y[2]).powi(2);
                if d2 < best.0 {
                    best = (d2, j);
                }
            }
            assert!(best.0 < 1e-18, "rotation does not preserve the node set");
            perm[i] = best.1;
        }
        let permute = |f: &ScalarField| {
            let mut v = vec![0.0; nn];
            for i in 0..nn {
                v[perm[i]] = f.v[i];
            }
            ScalarField::new(grid.clone(), v).unwrap()
        };

        let cfg = FlowConfig::new(2, 1.0 / 6.0, FlowMode::Normalized).unwrap();
        let dt = 1e-4;
        let stepped = flow_step(&body, &cfg, dt).unwrap();
        let rotated = SupportFunction::new(permute(&body.h)).unwrap();
        let stepped_rotated = flow_step(&rotated, &cfg, dt).unwrap();
        let rotated_stepped = permute(&stepped.h);
        let diff = stepped_rotated
            .h
            .v
            .iter()
            .zip(&rotated_stepped.v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(diff < 1e-13, "equivariance defect {diff:.3e} per step");
    }

    #[test]
    fn bad_inputs_are_rejected() {
        // Non-convex body: h'' + h changes sign for 1 + 0.2 cos(3 theta).
        let cfg = FlowConfig::new(1, 0.25, FlowMode::Raw).unwrap();
        let bad = trifold(96, 0.2);
        assert!(matches!(run_flow(&bad, &cfg), Err(Error::NonConvex { .. })));

        // Too few samples for classification.
        let mut short_cfg = FlowConfig::new(1, 0.25, FlowMode::Raw).unwrap();
        short_cfg.max_steps = 2;
        short_cfg.sample_every = 1;
        let traj = run_flow(&ball(1, &[64], 1.0), &short_cfg).unwrap();
        assert!(matches!(
            classify_blowup(&traj, &short_cfg),
            Err(Error::TrajectoryTooShort { .. })
        ));

        // Exponent out of range for the solver.
        let b = ball(1, &[64], 1.0);
        assert!(matches!(
            solve_minkowski(&b, 1.5, &SolveOptions::default()),
            Err(Error::Precondition(_))
        ));

        // Step-factor invariant.
        let mut bad_cfg = FlowConfig::new(1, 0.25, FlowMode::Raw).unwrap();
        bad_cfg.c_dt = 0.7;
        assert!(matches!(run_flow(&b, &bad_cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn trifold_seed_collapses_to_the_circle_in_the_unique_range() {
        let opts = SolveOptions {
            symmetry: Some(named_group(1, 3).unwrap()),
            ..SolveOptions::default()
        };
        let seed = trifold(240, 0.08);
        let out = solve_minkowski(&seed, -6.0, &opts).unwrap();
        let gamma = out.body.h.max() / out.body.h.min();
        assert!(gamma - 1.0 < 1e-4, "gamma - 1 = {:.3e}", gamma - 1.0);
        assert!(out.residual_sup <= 1e-8 * 1.0_f64.max(out.body.h.max()));
        assert!(out.flow_steps > 0);
    }

    #[test]
    fn trifold_seed_lands_on_a_non_round_branch_past_the_threshold() {
        let opts = SolveOptions {
            symmetry: Some(named_group(1, 3).unwrap()),
            ..SolveOptions::default()
        };
        let seed = trifold(240, 0.08);
        let out = solve_minkowski(&seed, -8.0, &opts).unwrap();
        let gamma = out.body.h.max() / out.body.h.min();
        assert!(gamma - 1.0 > 1e-2, "expected a non-round solution, gamma - 1 = {:.3e}", gamma - 1.0);
        let (sup, scale) = residual_sup_scaled(&out.body, -8.0);
        assert!(sup <= 1e-8 * scale, "residual {sup:.3e}");
    }

    #[test]
    fn octahedral_seed_rounds_off_on_the_two_sphere() {
        let opts = SolveOptions {
            symmetry: Some(named_group(2, 6).unwrap()),
            ..SolveOptions::default()
        };
        let seed = octa_quartic(&[16, 32], 1.0, 0.05);
        let out = solve_minkowski(&seed, -5.0, &opts).unwrap();
        let gamma = out.body.h.max() / out.body.h.min();
        assert!(gamma - 1.0 < 1e-6, "gamma - 1 = {:.3e}", gamma - 1.0);
        let (sup, scale) = residual_sup_scaled(&out.body, -5.0);
        assert!(sup <= 1e-8 * scale, "residual {sup:.3e}");
    }

    #[test]
    fn branch_search_tracks_the_pitchfork() {
        // Dihedral threefold symmetry on the circle: the round solution is
        // the unique one at p = -6.5 and loses stability past p = -7.
        let round = bifurcation_search(1, -6.5, 3, 0.1).unwrap();
        assert!(!round.non_round, "gamma = {} at p = -6.5", round.gamma);
        let b1 = bifurcation_search(1, -7.5, 3, 0.1).unwrap();
        let b2 = bifurcation_search(1, -8.5, 3, 0.1).unwrap();
        assert!(b1.non_round && b2.non_round);
        assert!(
            b2.amplitude > b1.amplitude && b1.amplitude > 0.0,
            "branch amplitude must grow with the distance to the threshold: {} vs {}",
            b1.amplitude,
            b2.amplitude
        );
        for b in [&round, &b1, &b2] {
            assert!(b.residual_sup <= 1e-6, "residual {:.3e}", b.residual_sup);
        }
    }

    #[test]
    fn branch_search_rejects_unsupported_seeds() {
        assert!(bifurcation_search(2, -9.0, 7, 0.1).is_err());
        assert!(bifurcation_search(1, -7.5, 3, 0.9).is_err());
        assert!(bifurcation_search(3, -7.5, 3, 0.1).is_err());
    }
}
