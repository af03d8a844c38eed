//! Verification suites: fixed-resolution instantiations of the library's
//! exact identities and laws, reported as measured-vs-expected rows.

use minklab::{
    assemble_linearized, closure_defect, differentials, ellipsoid_identity_residual,
    envelope_checks, exact_sphere_spectrum, harmonic_mode, interpolate, invariance_defect,
    lp_residual, make_grid, named_group, octahedral_quartic, orthonormality_check, random_field,
    random_invariant_body, reciprocal_support_moment, run_flow, santalo_center, solve_spectrum,
    sphere, variation_check, BlowupClass, Ellipsoid, FlowConfig, FlowMode, Mode, ScalarField,
    StopReason,
};

use crate::checks::{CheckRow, Comparison};

pub fn suite_names() -> [&'static str; 7] {
    ["grid", "body", "symmetry", "spectral", "functional", "flow", "all"]
}

/// Run a named suite; `Err` means the suite name is unknown.
pub fn run_suite(name: &str) -> Result<Vec<CheckRow>, String> {
    match name {
        "grid" => Ok(grid_suite()),
        "body" => Ok(body_suite()),
        "symmetry" => Ok(symmetry_suite()),
        "spectral" => Ok(spectral_suite()),
        "functional" => Ok(functional_suite()),
        "flow" => Ok(flow_suite()),
        "all" => {
            let mut rows = grid_suite();
            rows.extend(body_suite());
            rows.extend(symmetry_suite());
            rows.extend(spectral_suite());
            rows.extend(functional_suite());
            rows.extend(flow_suite());
            Ok(rows)
        }
        other => Err(format!(
            "unknown suite {other:?}; choose one of {:?}",
            suite_names()
        )),
    }
}

fn fail_row(name: &str, source: &str, err: impl std::fmt::Display) -> CheckRow {
    let mut row = CheckRow::new(name, f64::NAN, 0.0, 0.0, Comparison::AbsDiff, source);
    row.source = format!("{source} (error: {err})");
    row.pass = false;
    row
}

fn grid_suite() -> Vec<CheckRow> {
    let mut rows = Vec::new();

    let g1 = make_grid(1, &[256]).unwrap();
    let ones1 = minklab::ScalarField::from_fn(&g1, |_| 1.0);
    rows.push(CheckRow::new(
        "circle quadrature: total measure",
        ones1.integrate(),
        2.0 * std::f64::consts::PI,
        1e-10,
        Comparison::AbsDiff,
        "uniform-angle trapezoid rule is exact for constants",
    ));

    let g2 = make_grid(2, &[32, 64]).unwrap();
    let ones2 = minklab::ScalarField::from_fn(&g2, |_| 1.0);
    rows.push(CheckRow::new(
        "sphere quadrature: total measure",
        ones2.integrate(),
        4.0 * std::f64::consts::PI,
        1e-10,
        Comparison::AbsDiff,
        "latitude rule integrates the measure exactly",
    ));

    match harmonic_mode(&g2, &Mode { l: 5, m: 3, amplitude: 1.0 }) {
        Ok(y53) => {
            rows.push(CheckRow::new(
                "sphere quadrature: zero-mean harmonic",
                y53.integrate().abs(),
                0.0,
                1e-12,
                Comparison::AtMost,
                "band-limited quadrature exactness",
            ));
        }
        Err(e) => rows.push(fail_row(
            "sphere quadrature: zero-mean harmonic",
            "band-limited quadrature exactness",
            e,
        )),
    }

    let gf = make_grid(2, &[48, 96]).unwrap();
    match harmonic_mode(&gf, &Mode { l: 5, m: 3, amplitude: 1.0 }) {
        Ok(y) => {
            let d = differentials(&y);
            let worst = (0..gf.num_nodes())
                .map(|i| (d.lap[i] + 30.0 * y.v[i]).abs())
                .fold(0.0_f64, f64::max);
            rows.push(CheckRow::new(
                "surface Laplacian eigencheck (degree 5)",
                worst,
                0.0,
                1.5,
                Comparison::AtMost,
                "harmonics diagonalize the surface Laplacian",
            ));
        }
        Err(e) => rows.push(fail_row(
            "surface Laplacian eigencheck (degree 5)",
            "harmonics diagonalize the surface Laplacian",
            e,
        )),
    }

    let gi = make_grid(2, &[24, 48]).unwrap();
    match random_field(&gi, 9, 5) {
        Ok(f) => {
            let worst = (0..gi.num_nodes())
                .map(|i| {
                    interpolate(&f, gi.node(i))
                        .map(|v| (v - f.v[i]).abs())
                        .unwrap_or(f64::NAN)
                })
                .fold(0.0_f64, f64::max);
            rows.push(CheckRow::new(
                "interpolation exact at nodes",
                worst,
                0.0,
                1e-12,
                Comparison::AtMost,
                "cubic interpolation reproduces node values",
            ));
        }
        Err(e) => rows.push(fail_row(
            "interpolation exact at nodes",
            "cubic interpolation reproduces node values",
            e,
        )),
    }

    rows
}

fn body_suite() -> Vec<CheckRow> {
    let mut rows = Vec::new();

    // Ellipsoid closed-form determinant identity: residual must drop by at
    // least 3.5x from 32x64 to 64x128.
    (|| -> Result<(), minklab::Error> {
        let e = Ellipsoid::new(vec![1.0, 1.5, 2.0], vec![0.1, 0.0, 0.0])?;
        let gc = make_grid(2, &[32, 64])?;
        let gfn = make_grid(2, &[64, 128])?;
        let rc = ellipsoid_identity_residual(&e, &gc)?;
        let rf = ellipsoid_identity_residual(&e, &gfn)?;
        rows.push(CheckRow::new(
            "ellipsoid determinant identity refines",
            rc / rf,
            3.5,
            0.0,
            Comparison::AtLeast,
            "closed-form curvature determinant of ellipsoids",
        ));
        Ok(())
    })()
    .unwrap_or_else(|e| {
        rows.push(fail_row(
            "ellipsoid determinant identity refines",
            "closed-form curvature determinant of ellipsoids",
            e,
        ))
    });

    (|| -> Result<(), minklab::Error> {
        let g1 = make_grid(1, &[256])?;
        let e1 = Ellipsoid::new(vec![1.0, 2.0], vec![0.0, 0.0])?;
        let (got, exact) = reciprocal_support_moment(&e1, &g1)?;
        rows.push(CheckRow::new(
            "reciprocal support moment on the circle",
            got,
            exact,
            1e-8,
            Comparison::AbsDiff,
            "support-number volume identity",
        ));
        let g2 = make_grid(2, &[32, 64])?;
        let e2 = Ellipsoid::new(vec![1.0, 1.5, 2.0], vec![0.0; 3])?;
        let (got2, exact2) = reciprocal_support_moment(&e2, &g2)?;
        rows.push(CheckRow::new(
            "reciprocal support moment on the sphere",
            got2,
            exact2,
            1e-4 * exact2,
            Comparison::AbsDiff,
            "support-number volume identity",
        ));
        Ok(())
    })()
    .unwrap_or_else(|e| {
        rows.push(fail_row(
            "reciprocal support moments",
            "support-number volume identity",
            e,
        ))
    });

    match make_grid(2, &[24, 48]).and_then(|g| sphere(&g, 1.0)) {
        Ok(b) => {
            let (_, sup, _) = lp_residual(&b, -5.0);
            rows.push(CheckRow::new(
                "unit sphere solves the curvature equation",
                sup,
                0.0,
                1e-13,
                Comparison::AtMost,
                "round body is an exact discrete solution",
            ));
        }
        Err(e) => rows.push(fail_row(
            "unit sphere solves the curvature equation",
            "round body is an exact discrete solution",
            e,
        )),
    }

    rows
}

fn symmetry_suite() -> Vec<CheckRow> {
    let mut rows = Vec::new();

    for (n, k) in [(1usize, 3usize), (2, 6), (2, 12)] {
        match named_group(n, k) {
            Ok(g) => rows.push(CheckRow::new(
                &format!("group closure defect ({n}, {k})"),
                closure_defect(&g),
                0.0,
                1e-12,
                Comparison::AtMost,
                "generated set closes into a finite orthogonal group",
            )),
            Err(e) => rows.push(fail_row(
                &format!("group closure defect ({n}, {k})"),
                "generated set closes into a finite orthogonal group",
                e,
            )),
        }
    }

    (|| -> Result<(), minklab::Error> {
        let grid = make_grid(2, &[24, 48])?;
        let oct = named_group(2, 6)?;
        let body = random_symmetric_body(&grid, 1, 0.1, 6, &oct)?;
        let rep = orthonormality_check(&body);
        rows.push(CheckRow::new(
            "second moments: off-diagonal vanish",
            rep.max_offdiag / rep.total,
            0.0,
            1e-6,
            Comparison::AtMost,
            "strong symmetry makes direction moments orthonormal",
        ));
        rows.push(CheckRow::new(
            "second moments: equal diagonal",
            rep.diag_spread,
            0.0,
            1e-5,
            Comparison::AtMost,
            "strong symmetry makes direction moments orthonormal",
        ));
        rows.push(CheckRow::new(
            "second moments: trace identity",
            rep.trace_defect / rep.total,
            0.0,
            1e-12,
            Comparison::AtMost,
            "trace of direction moments equals the cone mass",
        ));
        let d = rep.total / 3.0;
        let diag_dev = (0..3)
            .map(|i| (rep.m[i][i] / d - 1.0).abs())
            .fold(0.0_f64, f64::max);
        rows.push(CheckRow::new(
            "second moments: diagonal value",
            diag_dev,
            0.0,
            1e-5,
            Comparison::AtMost,
            "each diagonal moment is a fixed share of the cone mass",
        ));
        rows.push(CheckRow::new(
            "group-averaged body invariance defect",
            invariance_defect(&body.h, &oct)?,
            0.0,
            2e-3,
            Comparison::AtMost,
            "group averaging lands in the invariant class",
        ));
        Ok(())
    })()
    .unwrap_or_else(|e| {
        rows.push(fail_row(
            "symmetrized-body moment checks",
            "strong symmetry makes direction moments orthonormal",
            e,
        ))
    });

    rows
}

fn spectral_suite() -> Vec<CheckRow> {
    let mut rows = Vec::new();
    for (n, dims, count, rel_tol) in [
        (1usize, vec![256usize], 7usize, 0.005),
        (2, vec![32, 64], 16, 0.01),
    ] {
        let result = (|| -> Result<(f64, f64), minklab::Error> {
            let grid = make_grid(n, &dims)?;
            let body = sphere(&grid, 1.0)?;
            let mut pair = assemble_linearized(&body)?;
            let (vals, _) = solve_spectrum(&mut pair, count)?;
            let exact = exact_sphere_spectrum(n, count);
            let mut worst_rel = 0.0_f64;
            let mut worst_zero = 0.0_f64;
            for (v, e) in vals.iter().zip(&exact) {
                if *e == 0.0 {
                    worst_zero = worst_zero.max(v.abs());
                } else {
                    worst_rel = worst_rel.max((v - e).abs() / e.abs());
                }
            }
            Ok((worst_rel, worst_zero))
        })();
        match result {
            Ok((worst_rel, worst_zero)) => {
                rows.push(CheckRow::new(
                    &format!("round-body spectrum, nonzero levels (n={n})"),
                    worst_rel,
                    0.0,
                    rel_tol,
                    Comparison::AtMost,
                    "linearized operator spectrum on the round body",
                ));
                rows.push(CheckRow::new(
                    &format!("round-body spectrum, kernel levels (n={n})"),
                    worst_zero,
                    0.0,
                    0.05,
                    Comparison::AtMost,
                    "linearized operator spectrum on the round body",
                ));
            }
            Err(e) => rows.push(fail_row(
                &format!("round-body spectrum (n={n})"),
                "linearized operator spectrum on the round body",
                e,
            )),
        }
    }
    rows
}

fn functional_suite() -> Vec<CheckRow> {
    let mut rows = Vec::new();

    (|| -> Result<(), minklab::Error> {
        let grid = make_grid(2, &[24, 48])?;
        let body = sphere(&grid, 1.0)?;
        let phi = random_field(&grid, 2, 4)?;
        let rep = variation_check(&body, -5.0, &phi, 1e-3)?;
        rows.push(CheckRow::new(
            "first variation vanishes at a solution",
            rep.first.abs() / rep.f0.abs(),
            0.0,
            1e-6,
            Comparison::AtMost,
            "solutions are critical points of the scale-free functional",
        ));
        rows.push(CheckRow::new(
            "second variation matches the assembled form",
            rep.second_rel_err,
            0.0,
            1e-3,
            Comparison::AtMost,
            "quadratic form of the functional at a solution",
        ));
        Ok(())
    })()
    .unwrap_or_else(|e| {
        rows.push(fail_row(
            "variation checks at the round solution",
            "solutions are critical points of the scale-free functional",
            e,
        ))
    });

    (|| -> Result<(), minklab::Error> {
        let grid = make_grid(2, &[24, 48])?;
        let e = Ellipsoid::new(vec![1.0, 1.2, 1.4], vec![0.05, 0.0, 0.0])?;
        let body = e.support_body(&grid)?;
        let res = santalo_center(&body, -2.0)?;
        rows.push(CheckRow::new(
            "entropy-center first-order condition",
            res.residual,
            0.0,
            1e-10,
            Comparison::AtMost,
            "interior minimizer of the reciprocal moment",
        ));
        Ok(())
    })()
    .unwrap_or_else(|e| {
        rows.push(fail_row(
            "entropy-center first-order condition",
            "interior minimizer of the reciprocal moment",
            e,
        ))
    });

    rows
}

fn flow_suite() -> Vec<CheckRow> {
    let mut rows = Vec::new();

    // Round bodies are fixed points of the normalized speed.
    (|| -> Result<(), minklab::Error> {
        let grid = make_grid(2, &[16, 32])?;
        let body = sphere(&grid, 1.0)?;
        let (gpow, _) = body.curvature_power(1.0 / 6.0);
        let worst = body
            .h
            .v
            .iter()
            .zip(&gpow)
            .map(|(h, g)| (h - g).abs())
            .fold(0.0_f64, f64::max);
        rows.push(CheckRow::new(
            "round body is a normalized-flow fixed point",
            worst,
            0.0,
            1e-14,
            Comparison::AtMost,
            "self-similar round solution",
        ));
        Ok(())
    })()
    .unwrap_or_else(|e| {
        rows.push(fail_row(
            "round body is a normalized-flow fixed point",
            "self-similar round solution",
            e,
        ))
    });

    // Shrinking ball: h^(1 + n*alpha) decreases linearly at the exact rate.
    (|| -> Result<(), minklab::Error> {
        let grid = make_grid(1, &[64])?;
        let body = sphere(&grid, 1.0)?;
        let alpha = 1.0 / 12.0;
        let mut cfg = FlowConfig::new(1, alpha, FlowMode::Raw)?;
        cfg.dt_max = 1e-4;
        cfg.max_steps = 1000;
        cfg.sample_every = 1;
        let traj = run_flow(&body, &cfg)?;
        let rate = 1.0 + alpha;
        let mut worst = 0.0_f64;
        for s in &traj.samples {
            let y = s.inner.powf(rate);
            worst = worst.max((y - (1.0 - rate * s.t)).abs());
        }
        rows.push(CheckRow::new(
            "round-body extinction power law",
            worst,
            0.0,
            1e-6,
            Comparison::AtMost,
            "exact contraction law of round bodies",
        ));
        Ok(())
    })()
    .unwrap_or_else(|e| {
        rows.push(fail_row(
            "round-body extinction power law",
            "exact contraction law of round bodies",
            e,
        ))
    });

    // The collapse of a ball is classified as balanced (type I) with the
    // round self-similar constant.
    (|| -> Result<(), minklab::Error> {
        let grid = make_grid(1, &[64])?;
        let body = sphere(&grid, 1.0)?;
        let alpha = 0.25;
        let mut cfg = FlowConfig::new(1, alpha, FlowMode::Raw)?;
        cfg.dt_max = 5e-4;
        cfg.blowup_m = 0.05;
        cfg.sample_every = 1;
        let traj = run_flow(&body, &cfg)?;
        let is_blowup = traj.stop == StopReason::Blowup;
        let cls = traj
            .classification
            .ok_or_else(|| minklab::Error::Solver("no classification produced".into()))?;
        let base = cls.baseline;
        let dev = ((cls.l_hat / base - 1.0).abs()).max((cls.u_hat / base - 1.0).abs());
        rows.push(CheckRow::new(
            "ball collapse classified as balanced",
            if is_blowup && cls.class == BlowupClass::TypeI {
                1.0
            } else {
                0.0
            },
            1.0,
            0.0,
            Comparison::AbsDiff,
            "rescaled radii of a round collapse stay pinched",
        ));
        rows.push(CheckRow::new(
            "rescaled ball radius matches the round constant",
            dev,
            0.0,
            0.01,
            Comparison::AtMost,
            "round self-similar rescaled radius",
        ));
        Ok(())
    })()
    .unwrap_or_else(|e| {
        rows.push(fail_row(
            "ball collapse classification",
            "rescaled radii of a round collapse stay pinched",
            e,
        ))
    });

    // Radius envelopes and functional monotonicity on a symmetric body.
    (|| -> Result<(), minklab::Error> {
        let grid = make_grid(2, &[16, 32])?;
        let body = octahedral_quartic(&grid, 1.0, 0.08)?;
        let mut cfg = FlowConfig::new(2, 1.0 / 6.0, FlowMode::Normalized)?;
        cfg.max_steps = 2500;
        cfg.symmetry = Some(named_group(2, 6)?);
        let traj = run_flow(&body, &cfg)?;
        let env = envelope_checks(&traj.samples, &cfg);
        rows.push(CheckRow::new(
            "normalized-flow radius envelopes",
            (env.upper_violations + env.lower_violations) as f64,
            0.0,
            0.0,
            Comparison::AtMost,
            "differential inequalities for the outer and inner radius",
        ));
        rows.push(CheckRow::new(
            "flow functional is monotone",
            env.f_violations as f64,
            0.0,
            0.0,
            Comparison::AtMost,
            "monotone quantity of the normalized flow",
        ));
        Ok(())
    })()
    .unwrap_or_else(|e| {
        rows.push(fail_row(
            "normalized-flow envelopes",
            "differential inequalities for the outer and inner radius",
            e,
        ))
    });

    rows
}
