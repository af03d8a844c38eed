//! Convex bodies represented by their support function h on a sphere grid.
//!
//! Everything downstream works off A = [D^2 h + h I] in the orthonormal
//! frame: det A is the Monge-Ampere operator (reciprocal Gauss curvature),
//! dV = h det A dsigma is the cone volume measure, Z = h x + grad h is the
//! boundary position vector, and Vol(K) = 1/(n+1) Int h det A dsigma.
//!
//! Ellipsoids get closed forms: h(x) = sqrt(Sum mu_i^2 x_i^2) + <z0, x>,
//! det(D^2 h + h I) = (Prod mu_i^2) (h - <z0, x>)^(-n-2), and
//! Int h_mu^(-n-1) dsigma = (n+1) Vol(B_1) / (mu_1 ... mu_{n+1}) for a
//! centered ellipsoid.  These drive grid-convergence and quadrature
//! benchmarks.

use crate::error::{Error, Result};
use crate::grid::{differentials, FrameHessian, Grid, ScalarField};
use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use std::sync::Arc;

/// Relative tolerance on the minimum eigenvalue of A when flagging
/// convexity: an A-field counts as convex when min eig > -1e-8 * max |A|.
pub const CONVEXITY_RTOL: f64 = 1e-8;

/// det A is clamped below at this value when inverted into a curvature.
pub const DET_CLAMP: f64 = 1e-12;

/// A support function together with cached differentials, the frame matrix
/// A = D^2 h + h I and det A at every node.
#[derive(Debug, Clone)]
pub struct SupportFunction {
    pub h: ScalarField,
    pub diff: FrameHessian,
    /// n = 1: [a] per node; n = 2: [a11, a12, a22] per node.
    pub a: Vec<f64>,
    pub det_a: Vec<f64>,
}

impl SupportFunction {
    /// Wrap a positive field as a support function and cache A, det A.
    /// The origin must be interior, i.e. h > 0 everywhere.
    pub fn new(h: ScalarField) -> Result<Self> {
        let mn = h.min();
        if !(mn > 0.0) {
            return Err(Error::NonPositiveSupport(mn));
        }
        let diff = differentials(&h);
        let n = h.grid.n;
        let nn = h.grid.num_nodes();
        let (mut a, mut det_a);
        if n == 1 {
            a = Vec::with_capacity(nn);
            det_a = Vec::with_capacity(nn);
            for i in 0..nn {
                let v = diff.hess[i] + h.v[i];
                a.push(v);
                det_a.push(v);
            }
        } else {
            a = Vec::with_capacity(3 * nn);
            det_a = Vec::with_capacity(nn);
            for i in 0..nn {
                let a11 = diff.hess[3 * i] + h.v[i];
                let a12 = diff.hess[3 * i + 1];
                let a22 = diff.hess[3 * i + 2] + h.v[i];
                a.push(a11);
                a.push(a12);
                a.push(a22);
                det_a.push(a11 * a22 - a12 * a12);
            }
        }
        Ok(SupportFunction { h, diff, a, det_a })
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        SupportFunction::new(ScalarField::from_fn(grid, f))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.h.grid
    }

    pub fn n(&self) -> usize {
        self.h.grid.n
    }

    /// Rescale the body by c > 0 without re-differencing (A and the
    /// differentials are linear in h, det A is homogeneous of degree n).
    pub fn scaled(&self, c: f64) -> SupportFunction {
        let n = self.n();
        let mut out = self.clone();
        for v in &mut out.h.v {
            *v *= c;
        }
        for v in &mut out.diff.grad {
            *v *= c;
        }
        for v in &mut out.diff.hess {
            *v *= c;
        }
        for v in &mut out.diff.lap {
            *v *= c;
        }
        for v in &mut out.a {
            *v *= c;
        }
        let cn = c.powi(n as i32);
        for v in &mut out.det_a {
            *v *= cn;
        }
        out
    }

    /// Minimum eigenvalue of A at node i.
    pub fn min_eig_at(&self, i: usize) -> f64 {
        if self.n() == 1 {
            self.a[i]
        } else {
            let (a, b, c) = (self.a[3 * i], self.a[3 * i + 1], self.a[3 * i + 2]);
            0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt()
        }
    }

    /// (flag, worst minimum eigenvalue of A over nodes).  The flag uses the
    /// relative slack `CONVEXITY_RTOL * max |A entry|`.
    pub fn convexity_check(&self) -> (bool, f64) {
        let mut worst = f64::INFINITY;
        for i in 0..self.h.grid.num_nodes() {
            worst = worst.min(self.min_eig_at(i));
        }
        let scale = self.a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (worst > -CONVEXITY_RTOL * scale, worst)
    }

    /// det A as a field (the Monge-Ampere operator applied to h).
    pub fn monge_ampere(&self) -> ScalarField {
        ScalarField { grid: self.h.grid.clone(), v: self.det_a.clone() }
    }

    /// G^alpha per node with det A clamped below at `DET_CLAMP`; returns
    /// the clamp count.  G = 1/det A is the Gauss curvature.
    pub fn curvature_power(&self, alpha: f64) -> (Vec<f64>, usize) {
        let mut clamps = 0;
        let v = self
            .det_a
            .iter()
            .map(|d| {
                let dd = if *d < DET_CLAMP {
                    clamps += 1;
                    DET_CLAMP
                } else {
                    *d
                };
                dd.powf(-alpha)
            })
            .collect();
        (v, clamps)
    }

    /// Boundary position Z = h x + grad h at node i (ambient components).
    pub fn z_at(&self, i: usize) -> Vec<f64> {
        let g = self.h.grid.as_ref();
        let d = g.ambient_dim();
        let x = g.node(i);
        let frame = g.frame(i);
        let mut z = vec![0.0; d];
        for c in 0..d {
            z[c] = self.h.v[i] * x[c];
            for k in 0..g.n {
                z[c] += self.diff.grad[g.n * i + k] * frame[k * d + c];
            }
        }
        z
    }

    /// Cofactor matrix U of A at node i (n = 1: the scalar 1).
    pub fn cofactor_at(&self, i: usize) -> [f64; 3] {
        if self.n() == 1 {
            [1.0, 0.0, 0.0]
        } else {
            [self.a[3 * i + 2], -self.a[3 * i + 1], self.a[3 * i]]
        }
    }
}

/// Residual field of det(D^2 h + h I) = h^(p-1) with its sup and L^2 norms.
pub fn lp_residual(k: &SupportFunction, p: f64) -> (ScalarField, f64, f64) {
    let g = k.grid();
    let v: Vec<f64> = (0..g.num_nodes())
        .map(|i| k.det_a[i] - k.h.v[i].powf(p - 1.0))
        .collect();
    let f = ScalarField { grid: g.clone(), v };
    let sup = f.sup_norm();
    let l2 = f
        .v
        .iter()
        .zip(&g.weights)
        .map(|(r, w)| r * r * w)
        .sum::<f64>()
        .sqrt();
    (f, sup, l2)
}

/// Integral geometry of a convex body.
#[derive(Debug, Clone)]
pub struct GeometryReport {
    pub volume: f64,
    /// inner radius m = min h, outer radius M = max h, gamma = M/m.
    pub inner: f64,
    pub outer: f64,
    pub gamma: f64,
    /// Cone-volume weights h det A w per node (the dV measure).
    pub dv: Vec<f64>,
    /// Kazdan-Warner integrals Int (x_a / h) dV per ambient axis; zero in
    /// the continuum for any convex body with interior origin.
    pub kw: Vec<f64>,
    /// Body centroid, from Int Z dV = (n+2) Int_K y dy.
    pub centroid: Vec<f64>,
}

pub fn geometry_report(k: &SupportFunction) -> Result<GeometryReport> {
    let (ok, min_eig) = k.convexity_check();
    if !ok {
        return Err(Error::NonConvex { min_eig });
    }
    let g = k.grid().clone();
    let d = g.ambient_dim();
    let nn = g.num_nodes();
    let mut volume = 0.0;
    let mut dv = vec![0.0; nn];
    let mut kw = vec![0.0; d];
    let mut zint = vec![0.0; d];
    for i in 0..nn {
        let w = g.weights[i];
        let hdet = k.h.v[i] * k.det_a[i];
        dv[i] = hdet * w;
        volume += hdet * w;
        let x = g.node(i);
        let z = k.z_at(i);
        for c in 0..d {
            kw[c] += x[c] * k.det_a[i] * w;
            zint[c] += z[c] * dv[i];
        }
    }
    volume /= (g.n + 1) as f64;
    let inner = k.h.min();
    let outer = k.h.max();
    let centroid = zint.iter().map(|s| s / ((g.n + 2) as f64 * volume)).collect();
    Ok(GeometryReport {
        volume,
        inner,
        outer,
        gamma: outer / inner,
        dv,
        kw,
        centroid,
    })
}

/// Axis-aligned ellipsoid with semi-axes mu (ascending) and center z0.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    pub mu: Vec<f64>,
    pub center: Vec<f64>,
}

impl Ellipsoid {
    pub fn new(mut mu: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        if mu.len() != center.len() || (mu.len() != 2 && mu.len() != 3) {
            return Err(Error::BadDimension(mu.len().max(1) - 1));
        }
        if mu.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::Precondition("ellipsoid semi-axes must be positive".into()));
        }
        mu.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Ellipsoid { mu, center })
    }

    pub fn support(&self, x: &[f64]) -> f64 {
        let mut q = 0.0;
        let mut c = 0.0;
        for i in 0..self.mu.len() {
            q += (self.mu[i] * x[i]).powi(2);
            c += self.center[i] * x[i];
        }
        q.sqrt() + c
    }

    pub fn support_body(&self, grid: &Arc<Grid>) -> Result<SupportFunction> {
        if grid.ambient_dim() != self.mu.len() {
            return Err(Error::GridMismatch);
        }
        SupportFunction::from_fn(grid, |x| self.support(x))
    }

    /// Closed-form det(D^2 h + h I) at direction x:
    /// (Prod mu_i^2) (h - <z0, x>)^(-n-2).
    pub fn det_closed_form(&self, x: &[f64]) -> f64 {
        let n = self.mu.len() - 1;
        let prod: f64 = self.mu.iter().map(|m| m * m).product();
        let hmu = self.support(x)
            - x.iter()
                .zip(&self.center)
                .map(|(xi, zi)| xi * zi)
                .sum::<f64>();
        prod * hmu.powi(-(n as i32) - 2)
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.mu.len()) * self.mu.iter().product::<f64>()
    }
}

pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => unreachable!("ambient dimension is 2 or 3"),
    }
}

/// Sup-norm gap between the discrete Monge-Ampere operator applied to an
/// ellipsoid support function and the closed form.
pub fn ellipsoid_identity_residual(e: &Ellipsoid, grid: &Arc<Grid>) -> Result<f64> {
    let k = e.support_body(grid)?;
    let mut sup = 0.0f64;
    for i in 0..grid.num_nodes() {
        sup = sup.max((k.det_a[i] - e.det_closed_form(grid.node(i))).abs());
    }
    Ok(sup)
}

/// Quadrature of h_mu^(-n-1) over S^n for the centered version of `e`
/// (the center is ignored; the closed-form value is
/// (n+1) Vol(B_1) / prod mu).
pub fn reciprocal_support_moment(e: &Ellipsoid, grid: &Arc<Grid>) -> Result<(f64, f64)> {
    if grid.ambient_dim() != e.mu.len() {
        return Err(Error::GridMismatch);
    }
    let n = grid.n;
    let centered = Ellipsoid::new(e.mu.clone(), vec![0.0; e.mu.len()])?;
    let f = ScalarField::from_fn(grid, |x| centered.support(x).powi(-(n as i32) - 1));
    let exact = (n as f64 + 1.0) * unit_ball_volume(n + 1) / e.mu.iter().product::<f64>();
    Ok((f.integrate(), exact))
}

/// Best-fit ellipsoid from the centroid and the second moments of the
/// boundary position field: Int (Z-c)(Z-c)^T dV has eigenvalues
/// Vol(K) mu_i^2 for a centered ellipsoid, so the axes are recovered as
/// sqrt(eig/Vol) and then rescaled to match the body volume exactly.
pub fn moment_ellipsoid(k: &SupportFunction) -> Result<Ellipsoid> {
    let rep = geometry_report(k)?;
    let g = k.grid();
    let d = g.ambient_dim();
    let mut m2 = Array2::<f64>::zeros((d, d));
    for i in 0..g.num_nodes() {
        let z = k.z_at(i);
        for r in 0..d {
            for c in 0..d {
                m2[[r, c]] += (z[r] - rep.centroid[r]) * (z[c] - rep.centroid[c]) * rep.dv[i];
            }
        }
    }
    let (eigs, _) = m2
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Solver(format!("moment matrix eigendecomposition: {e}")))?;
    let mut mu: Vec<f64> = eigs
        .iter()
        .map(|l| (l.max(0.0) / rep.volume).sqrt())
        .collect();
    let prod: f64 = mu.iter().product();
    if !(prod > 0.0) {
        return Err(Error::Solver("degenerate moment ellipsoid".into()));
    }
    let t = (rep.volume / (unit_ball_volume(d) * prod)).powf(1.0 / d as f64);
    for m in &mut mu {
        *m *= t;
    }
    Ellipsoid::new(mu, rep.centroid)
}

/// Scale quantities behind the a-priori bounds relating inner/outer radius
/// and volume of a solution body; reported as diagnostics (the bounding
/// constants are not computed, only the quotients they control).
pub fn apriori_diagnostics(k: &SupportFunction, p: f64) -> Result<Vec<(String, f64)>> {
    let rep = geometry_report(k)?;
    let n = k.n() as f64;
    let (m, mm, v) = (rep.inner, rep.outer, rep.volume);
    Ok(vec![
        ("outer_over_inner_pow".into(), mm / m.powf(p - n)),
        ("volume_over_inner_pow".into(), v / m.powf(p)),
        ("inner_pow_over_outer_pow".into(), m.powf(p + n) / ((-p).powf(n) * mm.powf(2.0 * n + 1.0))),
        ("volume_over_outer_pow".into(), v / mm.powf(n + 1.0)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn positivity_is_enforced() {
        let g = make_grid(1, &[32]).unwrap();
        assert!(matches!(
            SupportFunction::from_fn(&g, |x| x[0]),
            Err(Error::NonPositiveSupport(_))
        ));
    }

    #[test]
    fn sphere_geometry_is_exact() {
        let g = make_grid(2, &[16, 32]).unwrap();
        let k = SupportFunction::from_fn(&g, |_| 1.0).unwrap();
        let rep = geometry_report(&k).unwrap();
        assert!((rep.volume - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
        assert!((rep.gamma - 1.0).abs() < 1e-14);
        for c in rep.kw {
            assert!(c.abs() < 1e-12);
        }
        for c in rep.centroid {
            assert!(c.abs() < 1e-13);
        }
    }

    #[test]
    fn ellipse_volume_matches_closed_form() {
        let g = make_grid(1, &[256]).unwrap();
        let e = Ellipsoid::new(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let k = e.support_body(&g).unwrap();
        let rep = geometry_report(&k).unwrap();
        assert!(
            (rep.volume - 2.0 * std::f64::consts::PI).abs() < 1e-6,
            "vol {}",
            rep.volume
        );
    }

    #[test]
    fn nonconvex_body_is_flagged_with_correct_eigenvalue() {
        // h = 1 + 0.5 cos(2 theta) gives A = 1 - 1.5 cos(2 theta), min -0.5
        let g = make_grid(1, &[256]).unwrap();
        let k = SupportFunction::from_fn(&g, |x| {
            1.0 + 0.5 * (2.0 * x[1].atan2(x[0])).cos()
        })
        .unwrap();
        let (ok, min_eig) = k.convexity_check();
        assert!(!ok);
        assert!((min_eig + 0.5).abs() < 1e-6, "min eig {min_eig}");
        assert!(matches!(geometry_report(&k), Err(Error::NonConvex { .. })));
    }

    #[test]
    fn ellipsoid_identity_refines_at_4th_order() {
        let e = Ellipsoid::new(vec![1.0, 1.5, 2.0], vec![0.1, 0.0, 0.0]).unwrap();
        let coarse = ellipsoid_identity_residual(&e, &make_grid(2, &[32, 64]).unwrap()).unwrap();
        let fine = ellipsoid_identity_residual(&e, &make_grid(2, &[64, 128]).unwrap()).unwrap();
        assert!(coarse / fine >= 3.5, "ratio {}", coarse / fine);
    }

    #[test]
    fn reciprocal_moment_n1() {
        let g = make_grid(1, &[256]).unwrap();
        let e = Ellipsoid::new(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let (q, exact) = reciprocal_support_moment(&e, &g).unwrap();
        assert!((exact - std::f64::consts::PI).abs() < 1e-15);
        assert!((q - exact).abs() < 1e-8, "got {q}, want {exact}");
    }

    #[test]
    fn reciprocal_moment_n2() {
        let g = make_grid(2, &[64, 128]).unwrap();
        let e = Ellipsoid::new(vec![1.0, 1.5, 2.0], vec![0.0, 0.0, 0.0]).unwrap();
        let (q, exact) = reciprocal_support_moment(&e, &g).unwrap();
        assert!(
            (q - exact).abs() < 1e-4 * exact,
            "got {q}, want {exact}, rel {}",
            ((q - exact) / exact).abs()
        );
    }

    #[test]
    fn moment_ellipsoid_recovers_axes_and_center() {
        let g = make_grid(2, &[48, 96]).unwrap();
        let e = Ellipsoid::new(vec![1.0, 1.5, 2.0], vec![0.0, 0.0, 0.0]).unwrap();
        let k = e.support_body(&g).unwrap();
        let fit = moment_ellipsoid(&k).unwrap();
        for (a, b) in fit.mu.iter().zip(&e.mu) {
            assert!((a - b).abs() < 0.05 * b, "axis {a} vs {b}");
        }
        // sphere: all axes 1, center 0
        let k = SupportFunction::from_fn(&g, |_| 1.0).unwrap();
        let fit = moment_ellipsoid(&k).unwrap();
        for a in &fit.mu {
            assert!((a - 1.0).abs() < 1e-6);
        }
        for c in &fit.center {
            assert!(c.abs() < 1e-10);
        }
    }

    #[test]
    fn moment_ellipsoid_is_rotation_invariant() {
        let g = make_grid(2, &[48, 96]).unwrap();
        let (c, s) = (0.6f64, 0.8f64);
        // the same ellipsoid, axes rotated in the (x1, x3) plane
        let k = SupportFunction::from_fn(&g, |x| {
            let y = [c * x[0] + s * x[2], x[1], -s * x[0] + c * x[2]];
            (1.0 * (y[0] * y[0]) + 2.25 * (y[1] * y[1]) + 4.0 * (y[2] * y[2])).sqrt()
        })
        .unwrap();
        let fit = moment_ellipsoid(&k).unwrap();
        for (a, b) in fit.mu.iter().zip(&[1.0, 1.5, 2.0]) {
            assert!((a - b).abs() < 0.05 * b, "axis {a} vs {b}");
        }
    }

    #[test]
    fn kazdan_warner_vanishes_off_center() {
        let g = make_grid(2, &[48, 96]).unwrap();
        // an off-center, non-symmetric smooth convex body
        let k = SupportFunction::from_fn(&g, |x| {
            1.0 + 0.15 * x[0] + 0.1 * x[1] * x[2] - 0.05 * x[2]
        })
        .unwrap();
        let rep = geometry_report(&k).unwrap();
        let dv_total: f64 = rep.dv.iter().sum();
        for c in &rep.kw {
            assert!(c.abs() < 1e-6 * dv_total, "kw {c} vs total {dv_total}");
        }
    }

    #[test]
    fn scaled_body_matches_rebuild() {
        let g = make_grid(2, &[16, 32]).unwrap();
        let k = SupportFunction::from_fn(&g, |x| 1.0 + 0.2 * x[0] * x[1]).unwrap();
        let s = k.scaled(1.7);
        let r = SupportFunction::from_fn(&g, |x| 1.7 * (1.0 + 0.2 * x[0] * x[1])).unwrap();
        for i in 0..g.num_nodes() {
            assert!((s.det_a[i] - r.det_a[i]).abs() < 1e-11);
            assert!((s.h.v[i] - r.h.v[i]).abs() < 1e-12);
        }
    }
}
