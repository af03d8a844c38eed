//! The linearized Monge–Ampère eigenproblem on the sphere grid.
//!
//! The operator under study sends a perturbation φ of the support function
//! to −U^{ij}(∇²_{ij}φ + φ δ_{ij}), where U is the cofactor matrix of
//! A = ∇²h + hI.  Its generalized eigenproblem against the weight
//! h^{−1} det A drives every stability question in this crate: the sphere
//! spectrum benchmark, λ₃, and the kernel comparison with the rotational
//! tangent fields.
//!
//! Discretely: stiffness S_{ik} = w_i · (−U^{ij}(∂²+δ) e_k)_i assembled
//! column by column through the finite-difference stencils and then
//! explicitly symmetrized; weight matrix B = diag(w_i h_i^{−1} det A_i).
//! Since B > 0 for convex bodies, S φ = λ B φ folds into the ordinary
//! symmetric problem C = B^{−1/2} S B^{−1/2}, solved densely by LAPACK.

use std::sync::Arc;

use ndarray::Array2;
use ndarray_linalg::{Eigh, SVD, UPLO};

use crate::body::SupportFunction;
use crate::error::{Error, Result};
use crate::grid::{differentials, Grid, ScalarField};

/// Fields in the rotational tangent basis with L² norm below this fraction
/// of |Z| are treated as exact zeros (symmetry axes) and dropped.
pub const ROTATION_DROP_TOL: f64 = 1e-10;

/// Assembled generalized eigenproblem S φ = λ B φ.
#[derive(Debug, Clone)]
pub struct GeneralizedEigenPair {
    pub grid: Arc<Grid>,
    /// Weighted, explicitly symmetrized stiffness matrix.
    pub stiffness: Array2<f64>,
    /// Diagonal of the positive weight matrix B: w_i h_i^{−1} det A_i.
    pub weight: Vec<f64>,
    /// max |S − Sᵀ| before symmetrization (truncation-level asymmetry).
    pub raw_asymmetry: f64,
    /// All generalized eigenvalues, ascending (filled by `solve_spectrum`).
    pub eigenvalues: Option<Vec<f64>>,
    /// Matching B-orthonormal eigenvectors, one per column.
    pub eigenvectors: Option<Array2<f64>>,
}

/// Apply the linearized operator −U^{ij}(∇²_{ij}φ + φ δ_{ij}) pointwise.
/// No quadrature weights and no symmetrization: this is the raw
/// finite-difference operator, also used by the Newton corrector.
pub fn apply_linearized(k: &SupportFunction, phi: &ScalarField) -> Result<ScalarField> {
    if !phi.same_grid(&k.h) {
        return Err(Error::GridMismatch);
    }
    let g = phi.grid.clone();
    let nn = g.num_nodes();
    let d = differentials(phi);
    let mut out = vec![0.0; nn];
    if g.n == 1 {
        for i in 0..nn {
            out[i] = -(d.hess[i] + phi.v[i]);
        }
    } else {
        for i in 0..nn {
            let [u11, u12, u22] = k.cofactor_at(i);
            let h11 = d.hess[3 * i];
            let h12 = d.hess[3 * i + 1];
            let h22 = d.hess[3 * i + 2];
            out[i] = -(u11 * (h11 + phi.v[i])
                + 2.0 * u12 * h12
                + u22 * (h22 + phi.v[i]));
        }
    }
    ScalarField::new(g, out)
}

/// Dense matrix of the raw operator (no weights, no symmetrization),
/// assembled by applying it to every coordinate basis field.
pub fn assemble_operator_matrix(k: &SupportFunction) -> Result<Array2<f64>> {
    let g = k.h.grid.clone();
    let nn = g.num_nodes();
    let mut m = Array2::<f64>::zeros((nn, nn));
    let mut basis = vec![0.0; nn];
    for col in 0..nn {
        basis[col] = 1.0;
        let e = ScalarField::new(g.clone(), basis.clone())?;
        let le = apply_linearized(k, &e)?;
        for row in 0..nn {
            m[[row, col]] = le.v[row];
        }
        basis[col] = 0.0;
    }
    Ok(m)
}

/// Assemble the weighted, symmetrized generalized problem for a convex
/// body.  Errors when the body fails the convexity check.
pub fn assemble_linearized(k: &SupportFunction) -> Result<GeneralizedEigenPair> {
    let (convex, worst) = k.convexity_check();
    if !convex {
        return Err(Error::NonConvex { min_eig: worst });
    }
    let g = k.h.grid.clone();
    let nn = g.num_nodes();
    let mut s = assemble_operator_matrix(k)?;
    // Multiply row i by the quadrature weight w_i.
    for i in 0..nn {
        let w = g.weights[i];
        for j in 0..nn {
            s[[i, j]] *= w;
        }
    }
    let mut raw_asymmetry = 0.0_f64;
    for i in 0..nn {
        for j in i + 1..nn {
            let (a, b) = (s[[i, j]], s[[j, i]]);
            raw_asymmetry = raw_asymmetry.max((a - b).abs());
            let mean = 0.5 * (a + b);
            s[[i, j]] = mean;
            s[[j, i]] = mean;
        }
    }
    let weight: Vec<f64> = (0..nn)
        .map(|i| g.weights[i] * k.det_a[i] / k.h.v[i])
        .collect();
    if weight.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::Solver("weight matrix is not positive".into()));
    }
    Ok(GeneralizedEigenPair {
        grid: g,
        stiffness: s,
        weight,
        raw_asymmetry,
        eigenvalues: None,
        eigenvectors: None,
    })
}

impl GeneralizedEigenPair {
    /// B-weighted inner product of two node vectors.
    pub fn b_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter()
            .zip(v)
            .zip(&self.weight)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }

    /// Quadratic form φᵀ S φ of the symmetrized stiffness.
    pub fn s_form(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        let nn = u.len();
        for i in 0..nn {
            let mut row = 0.0;
            for j in 0..nn {
                row += self.stiffness[[i, j]] * v[j];
            }
            acc += u[i] * row;
        }
        acc
    }
}

/// Solve the generalized problem and return the smallest `m` eigenvalues
/// with their eigenfunctions; the full decomposition is cached on `pair`.
pub fn solve_spectrum(
    pair: &mut GeneralizedEigenPair,
    m: usize,
) -> Result<(Vec<f64>, Vec<ScalarField>)> {
    if pair.eigenvalues.is_none() {
        let nn = pair.weight.len();
        let isqrt: Vec<f64> = pair.weight.iter().map(|b| 1.0 / b.sqrt()).collect();
        let mut c = pair.stiffness.clone();
        for i in 0..nn {
            for j in 0..nn {
                c[[i, j]] *= isqrt[i] * isqrt[j];
            }
        }
        let (vals, vecs) = c.eigh(UPLO::Lower).map_err(|e| {
            let bmin = pair.weight.iter().cloned().fold(f64::INFINITY, f64::min);
            let bmax = pair.weight.iter().cloned().fold(0.0_f64, f64::max);
            Error::Solver(format!(
                "dense eigensolver failed: {e}; weight range [{bmin:.3e}, {bmax:.3e}]"
            ))
        })?;
        // Undo the fold: φ = B^{−1/2} ψ, which keeps B-orthonormality.
        let mut phis = vecs;
        for i in 0..nn {
            let s = isqrt[i];
            for j in 0..nn {
                phis[[i, j]] *= s;
            }
        }
        pair.eigenvalues = Some(vals.to_vec());
        pair.eigenvectors = Some(phis);
    }
    let vals = pair.eigenvalues.as_ref().unwrap();
    let vecs = pair.eigenvectors.as_ref().unwrap();
    let m = m.min(vals.len());
    let mut fields = Vec::with_capacity(m);
    for j in 0..m {
        fields.push(ScalarField::new(
            pair.grid.clone(),
            vecs.column(j).to_vec(),
        )?);
    }
    Ok((vals[..m].to_vec(), fields))
}

/// Exact sphere eigenvalues (j−2)(n+j−1) expanded by spherical-harmonic
/// multiplicity, ascending, `count` entries.
pub fn exact_sphere_spectrum(n: usize, count: usize) -> Vec<f64> {
    let mut vals = Vec::with_capacity(count);
    let mut l = 0usize;
    while vals.len() < count {
        let lam = (l * (l + n - 1)) as f64 - n as f64;
        let mult = if n == 1 {
            if l == 0 {
                1
            } else {
                2
            }
        } else {
            2 * l + 1
        };
        for _ in 0..mult {
            if vals.len() < count {
                vals.push(lam);
            }
        }
        l += 1;
    }
    vals
}

/// Measured deviation of the discrete sphere spectrum from the exact one
/// over the first four clusters, at the given grid.  This is the crate's
/// empirical grid-error estimate for eigenvalue cluster tolerances.
pub fn sphere_spectrum_error(grid: &Arc<Grid>) -> Result<f64> {
    let ball = SupportFunction::from_fn(grid, |_| 1.0)?;
    let mut pair = assemble_linearized(&ball)?;
    let count = if grid.n == 1 { 7 } else { 16 };
    let (vals, _) = solve_spectrum(&mut pair, count)?;
    let exact = exact_sphere_spectrum(grid.n, count);
    Ok(vals
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Assign cluster indices to an ascending eigenvalue list: a new cluster
/// starts whenever the gap to the previous value exceeds `tol`.
pub fn cluster_ids(vals: &[f64], tol: f64) -> Vec<usize> {
    let mut ids = Vec::with_capacity(vals.len());
    let mut cid = 0usize;
    for (i, v) in vals.iter().enumerate() {
        if i > 0 && (v - vals[i - 1]).abs() > tol {
            cid += 1;
        }
        ids.push(cid);
    }
    ids
}

/// The (n+3)-th generalized eigenvalue counting multiplicity (0-based
/// index n+2), which is n+2 exactly at the round sphere.
pub fn lambda3(k: &SupportFunction) -> Result<f64> {
    let n = k.n();
    let mut pair = assemble_linearized(k)?;
    let (vals, _) = solve_spectrum(&mut pair, n + 3)?;
    Ok(vals[n + 2])
}

/// Rotational tangent fields φ_B(x) = xᵀ B Z(x), one for each antisymmetric
/// basis matrix B = e_r e_sᵀ − e_s e_rᵀ; fields that vanish (rotations that
/// fix the body) are dropped.
pub fn rotational_tangent_basis(k: &SupportFunction) -> Vec<ScalarField> {
    let g = k.h.grid.clone();
    let d = g.ambient_dim();
    let nn = g.num_nodes();
    let mut z_norm2 = 0.0;
    let mut z_all = Vec::with_capacity(nn);
    for i in 0..nn {
        let z = k.z_at(i);
        z_norm2 += g.weights[i] * z.iter().map(|c| c * c).sum::<f64>();
        z_all.push(z);
    }
    let mut fields = Vec::new();
    for r in 0..d {
        for s in r + 1..d {
            let mut v = vec![0.0; nn];
            let mut norm2 = 0.0;
            for i in 0..nn {
                let x = g.node(i);
                let z = &z_all[i];
                v[i] = x[r] * z[s] - x[s] * z[r];
                norm2 += g.weights[i] * v[i] * v[i];
            }
            if norm2.sqrt() > ROTATION_DROP_TOL * z_norm2.sqrt() {
                fields.push(ScalarField::new(g.clone(), v).expect("grid is consistent"));
            }
        }
    }
    fields
}

/// Result of comparing the eigenvalue cluster at 1−p with the rotational
/// tangent fields.
#[derive(Debug, Clone)]
pub struct KernelReport {
    /// Number of generalized eigenvalues within `tol` of 1−p.
    pub dimension: usize,
    /// Number of surviving rotational tangent fields.
    pub rotational_dimension: usize,
    /// Largest principal angle (degrees) between the eigenvalue cluster and
    /// the rotational span; None when either space is empty.
    pub max_angle_deg: Option<f64>,
    /// Cluster membership tolerance actually used.
    pub tol: f64,
    /// The target eigenvalue 1−p.
    pub target: f64,
}

/// Orthonormalize `fields` against the B inner product by modified
/// Gram–Schmidt, dropping directions that collapse.
fn b_orthonormalize(pair: &GeneralizedEigenPair, fields: &[ScalarField]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for f in fields {
        let mut v = f.v.clone();
        let norm0 = pair.b_dot(&v, &v).sqrt();
        if !(norm0 > 0.0) {
            continue;
        }
        for b in &basis {
            let c = pair.b_dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let norm = pair.b_dot(&v, &v).sqrt();
        if norm > 1e-8 * norm0 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis
}

/// Check the kernel property at an approximate solution of the self-similar
/// equation det A = h^{p−1}: count the eigenvalues at 1−p and measure the
/// principal angles between their eigenspace and the rotational fields.
pub fn kernel_check(k: &SupportFunction, p: f64) -> Result<KernelReport> {
    // Precondition: h must approximately solve the equation for this p.
    let (_, sup, _) = crate::body::lp_residual(k, p);
    let scale = k
        .h
        .v
        .iter()
        .map(|h| h.powf(p - 1.0).abs())
        .fold(0.0, f64::max);
    if sup > 1e-6 * scale.max(1.0) {
        return Err(Error::Precondition(format!(
            "body does not solve the p = {p} equation: residual {sup:.3e}"
        )));
    }
    let target = 1.0 - p;
    let tol = (0.02 * target.abs()).max(5.0 * sphere_spectrum_error(&k.h.grid)?);
    let mut pair = assemble_linearized(k)?;
    let nn = pair.weight.len();
    let (vals, _) = solve_spectrum(&mut pair, nn)?;
    let cluster: Vec<usize> = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| (*v - target).abs() <= tol)
        .map(|(i, _)| i)
        .collect();
    let rot = rotational_tangent_basis(k);
    let rot_basis = b_orthonormalize(&pair, &rot);
    let dimension = cluster.len();
    let rotational_dimension = rot_basis.len();
    let max_angle_deg = if dimension == 0 || rotational_dimension == 0 {
        None
    } else {
        let vecs = pair.eigenvectors.as_ref().unwrap();
        // M_{ab} = <e_a, t_b>_B with both sides B-orthonormal.
        let mut m = Array2::<f64>::zeros((dimension, rotational_dimension));
        for (a, &idx) in cluster.iter().enumerate() {
            let col: Vec<f64> = vecs.column(idx).to_vec();
            for (b, t) in rot_basis.iter().enumerate() {
                m[[a, b]] = pair.b_dot(&col, t);
            }
        }
        let (_, sv, _) = m
            .svd(false, false)
            .map_err(|e| Error::Solver(format!("principal-angle SVD failed: {e}")))?;
        let count = dimension.min(rotational_dimension);
        let smin = sv
            .iter()
            .take(count)
            .cloned()
            .fold(f64::INFINITY, f64::min)
            .clamp(-1.0, 1.0);
        Some(smin.acos().to_degrees())
    };
    Ok(KernelReport {
        dimension,
        rotational_dimension,
        max_angle_deg,
        tol,
        target,
    })
}

/// Rayleigh quotient of a node vector under the assembled pair.
pub fn rayleigh_quotient(pair: &GeneralizedEigenPair, phi: &[f64]) -> f64 {
    pair.s_form(phi, phi) / pair.b_dot(phi, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Ellipsoid;
    use crate::grid::make_grid;

    #[test]
    fn sphere_spectrum_n1_matches_the_exact_clusters() {
        let g = make_grid(1, &[256]).unwrap();
        let ball = SupportFunction::from_fn(&g, |_| 1.0).unwrap();
        let mut pair = assemble_linearized(&ball).unwrap();
        let (vals, _) = solve_spectrum(&mut pair, 7).unwrap();
        let exact = [-1.0, 0.0, 0.0, 3.0, 3.0, 8.0, 8.0];
        for (v, e) in vals.iter().zip(exact) {
            if e == 0.0 {
                assert!(v.abs() < 1e-6, "zero mode off: {v}");
            } else {
                assert!(
                    (v - e).abs() < 0.005 * e.abs(),
                    "eigenvalue {v} vs exact {e}"
                );
            }
        }
    }

    #[test]
    fn sphere_spectrum_n2_matches_the_exact_clusters() {
        let g = make_grid(2, &[32, 64]).unwrap();
        let ball = SupportFunction::from_fn(&g, |_| 1.0).unwrap();
        let mut pair = assemble_linearized(&ball).unwrap();
        let (vals, fields) = solve_spectrum(&mut pair, 16).unwrap();
        let exact = exact_sphere_spectrum(2, 16);
        for (v, e) in vals.iter().zip(&exact) {
            if *e == 0.0 {
                assert!(v.abs() < 0.05, "zero cluster off: {v}");
            } else {
                assert!(
                    (v - e).abs() < 0.01 * e.abs(),
                    "eigenvalue {v} vs exact {e}"
                );
            }
        }
        // First eigenfunction is the support function itself (here: h = 1).
        let ones = vec![1.0; g.num_nodes()];
        let phi = &fields[0].v;
        let cos = pair.b_dot(phi, &ones)
            / (pair.b_dot(phi, phi).sqrt() * pair.b_dot(&ones, &ones).sqrt());
        assert!(cos.abs() > 0.999, "cosine to h: {cos}");
        // Eigenvectors are B-orthonormal.
        for a in 0..6 {
            for b in 0..6 {
                let target = if a == b { 1.0 } else { 0.0 };
                let dot = pair.b_dot(&fields[a].v, &fields[b].v);
                assert!((dot - target).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn stiffness_asymmetry_shrinks_at_second_order() {
        let mut defects = Vec::new();
        for res in [[16usize, 32], [32, 64]] {
            let g = make_grid(2, &res).unwrap();
            let ball = SupportFunction::from_fn(&g, |_| 1.0).unwrap();
            let pair = assemble_linearized(&ball).unwrap();
            let scale = pair
                .stiffness
                .iter()
                .cloned()
                .fold(0.0_f64, |m, v| m.max(v.abs()));
            defects.push(pair.raw_asymmetry / scale);
        }
        assert!(
            defects[0] / defects[1] > 3.0,
            "asymmetry defects {defects:?} did not shrink at 2nd order"
        );
    }

    #[test]
    fn weights_positive_and_linear_functions_are_zero_modes() {
        let g = make_grid(2, &[24, 48]).unwrap();
        let e = Ellipsoid::new(vec![1.0, 1.3, 1.7], vec![0.05, 0.0, -0.1]).unwrap();
        let k = e.support_body(&g).unwrap();
        let pair = assemble_linearized(&k).unwrap();
        assert!(pair.weight.iter().all(|&b| b > 0.0));
        // x_alpha has frame Hessian + identity exactly zero, so the raw
        // operator annihilates it up to stencil truncation.
        for alpha in 0..3 {
            let xa = ScalarField::from_fn(&g, |x| x[alpha]);
            let lx = apply_linearized(&k, &xa).unwrap();
            let tr_u_max = (0..g.num_nodes())
                .map(|i| {
                    let [u11, _, u22] = k.cofactor_at(i);
                    (u11 + u22).abs()
                })
                .fold(0.0_f64, f64::max);
            assert!(
                lx.sup_norm() < 1e-4 * tr_u_max,
                "linear zero mode residual {}",
                lx.sup_norm()
            );
        }
    }

    #[test]
    fn lambda3_at_spheres_and_nearby_bodies() {
        let g1 = make_grid(1, &[256]).unwrap();
        let b1 = SupportFunction::from_fn(&g1, |_| 1.0).unwrap();
        assert!((lambda3(&b1).unwrap() - 3.0).abs() < 0.01);

        let g2 = make_grid(2, &[32, 64]).unwrap();
        let b2 = SupportFunction::from_fn(&g2, |_| 1.0).unwrap();
        assert!((lambda3(&b2).unwrap() - 4.0).abs() < 0.02);

        // Small perturbation moves lambda3 by O(amplitude).
        let b3 = SupportFunction::from_fn(&g2, |x| 1.0 + 0.02 * x[0] * x[1]).unwrap();
        assert!((lambda3(&b3).unwrap() - 4.0).abs() < 0.2);
    }

    #[test]
    fn rotational_fields_match_the_symmetry_axes() {
        // Sphere: every rotation fixes it, no fields survive.
        let g2 = make_grid(2, &[24, 48]).unwrap();
        let ball = SupportFunction::from_fn(&g2, |_| 1.0).unwrap();
        assert!(rotational_tangent_basis(&ball).is_empty());

        // Triaxial ellipsoid: all three rotations act nontrivially.
        let tri = Ellipsoid::new(vec![1.0, 1.3, 1.7], vec![0.0; 3])
            .unwrap()
            .support_body(&g2)
            .unwrap();
        assert_eq!(rotational_tangent_basis(&tri).len(), 3);

        // Axisymmetric ellipsoid: the rotation about the symmetry axis dies.
        let axi = Ellipsoid::new(vec![1.0, 1.0, 1.5], vec![0.0; 3])
            .unwrap()
            .support_body(&g2)
            .unwrap();
        assert_eq!(rotational_tangent_basis(&axi).len(), 2);

        // Non-round circle body: the single field is the angular derivative.
        let g1 = make_grid(1, &[256]).unwrap();
        let k = SupportFunction::from_fn(&g1, |x| {
            let t = x[1].atan2(x[0]);
            1.0 + 0.1 * (3.0 * t).cos()
        })
        .unwrap();
        let fields = rotational_tangent_basis(&k);
        assert_eq!(fields.len(), 1);
        let dtheta = &k.diff.grad;
        let mut dot = 0.0;
        let mut na = 0.0;
        let mut nb = 0.0;
        for i in 0..g1.num_nodes() {
            dot += fields[0].v[i] * dtheta[i];
            na += fields[0].v[i] * fields[0].v[i];
            nb += dtheta[i] * dtheta[i];
        }
        let cos = dot / (na.sqrt() * nb.sqrt());
        assert!(cos.abs() > 1.0 - 1e-10, "cosine {cos}");
    }

    #[test]
    fn kernel_check_at_the_sphere() {
        let g = make_grid(2, &[32, 64]).unwrap();
        let ball = SupportFunction::from_fn(&g, |_| 1.0).unwrap();
        // p = -5: 1 - p = 6 lies strictly between the clusters 4 and 10.
        let rep = kernel_check(&ball, -5.0).unwrap();
        assert_eq!(rep.dimension, 0);
        assert!(rep.max_angle_deg.is_none());
        // p = -3: 1 - p = 4 hits the degree-2 cluster of dimension 5.
        let rep = kernel_check(&ball, -3.0).unwrap();
        assert_eq!(rep.dimension, 5);
        assert_eq!(rep.rotational_dimension, 0);
        assert!(rep.max_angle_deg.is_none());
    }

    #[test]
    fn kernel_check_rejects_non_solutions() {
        let g = make_grid(2, &[16, 32]).unwrap();
        let k = SupportFunction::from_fn(&g, |x| 1.0 + 0.2 * x[2]).unwrap();
        match kernel_check(&k, -5.0) {
            Err(Error::Precondition(_)) => {}
            other => panic!("expected precondition failure, got {other:?}"),
        }
    }

    #[test]
    fn rayleigh_identity_for_computed_eigenpairs() {
        let g = make_grid(1, &[128]).unwrap();
        let k = SupportFunction::from_fn(&g, |x| {
            let t = x[1].atan2(x[0]);
            1.0 + 0.1 * (2.0 * t).cos() + 0.05 * (3.0 * t).sin()
        })
        .unwrap();
        let mut pair = assemble_linearized(&k).unwrap();
        let (vals, fields) = solve_spectrum(&mut pair, 8).unwrap();
        for (v, f) in vals.iter().zip(&fields) {
            let r = rayleigh_quotient(&pair, &f.v);
            assert!(
                (r - v).abs() <= 1e-6 * v.abs().max(1.0),
                "rayleigh {r} vs eigenvalue {v}"
            );
        }
    }

    #[test]
    fn cluster_ids_split_on_gaps() {
        let vals = [-2.001, -1.999, 0.0, 0.002, 3.99, 4.0, 4.01];
        let ids = cluster_ids(&vals, 0.05);
        assert_eq!(ids, vec![0, 0, 1, 1, 2, 2, 2]);
        let err = sphere_spectrum_error(&make_grid(1, &[128]).unwrap()).unwrap();
        assert!(err < 0.01, "n=1 sphere spectrum error {err}");
    }
}
