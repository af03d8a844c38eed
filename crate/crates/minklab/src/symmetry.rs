//! Regular polytopes in canonical placement, their finite symmetry groups,
//! group-averaging of support functions, and moment orthonormality checks
//! for symmetric convex bodies.
//!
//! Groups are stored as explicit lists of orthogonal matrices, built by
//! closing a small generator set under products.  A strongly symmetric body
//! is one whose support function is invariant under such a group; for those
//! bodies the weighted first moments vanish and the weighted second-moment
//! matrix is a multiple of the identity, which `orthonormality_check`
//! measures directly.

use crate::body::SupportFunction;
use crate::error::{Error, Result};
use crate::grid::{interpolate, ScalarField};

/// Golden ratio (1 + sqrt 5)/2.
pub fn golden_ratio() -> f64 {
    (1.0 + 5.0_f64.sqrt()) / 2.0
}

/// Maximum group size the product closure will build before giving up.
pub const CLOSURE_CAP: usize = 10_000;

/// Matching tolerance when deduplicating group elements.
pub const ELEMENT_TOL: f64 = 1e-10;

/// Orthogonality tolerance for stored elements.
pub const ORTHO_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Small dense matrices, stored row-major as Vec<f64> of length d*d.
// ---------------------------------------------------------------------------

fn mat_identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

fn mat_mul(d: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; d * d];
    for r in 0..d {
        for t in 0..d {
            let art = a[r * d + t];
            if art == 0.0 {
                continue;
            }
            for s in 0..d {
                c[r * d + s] += art * b[t * d + s];
            }
        }
    }
    c
}

fn mat_apply(d: usize, m: &[f64], x: &[f64], out: &mut [f64]) {
    for r in 0..d {
        let mut acc = 0.0;
        for s in 0..d {
            acc += m[r * d + s] * x[s];
        }
        out[r] = acc;
    }
}

fn mat_max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn orthogonality_defect(d: usize, m: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    for r in 0..d {
        for s in 0..d {
            let mut acc = 0.0;
            for t in 0..d {
                acc += m[t * d + r] * m[t * d + s];
            }
            let target = if r == s { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).abs());
        }
    }
    worst
}

/// Permutation matrix sending coordinate `i` of the input to coordinate
/// `perm[i]` of the output.
fn perm_matrix(d: usize, perm: &[usize]) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for (i, &pi) in perm.iter().enumerate() {
        m[pi * d + i] = 1.0;
    }
    m
}

fn diag_matrix(signs: &[f64]) -> Vec<f64> {
    let d = signs.len();
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = signs[i];
    }
    m
}

/// Reflection I - 2 u u^T across the hyperplane orthogonal to `u` (unit).
fn reflection_matrix(u: &[f64]) -> Vec<f64> {
    let d = u.len();
    let mut m = mat_identity(d);
    for r in 0..d {
        for s in 0..d {
            m[r * d + s] -= 2.0 * u[r] * u[s];
        }
    }
    m
}

/// Rotation by angle `psi` about the unit axis `a` in R^3 (Rodrigues form).
fn axis_rotation(a: &[f64; 3], psi: f64) -> Vec<f64> {
    let (c, s) = (psi.cos(), psi.sin());
    let mut m = vec![0.0; 9];
    let cross = [
        [0.0, -a[2], a[1]],
        [a[2], 0.0, -a[0]],
        [-a[1], a[0], 0.0],
    ];
    for r in 0..3 {
        for t in 0..3 {
            m[r * 3 + t] =
                c * if r == t { 1.0 } else { 0.0 } + s * cross[r][t] + (1.0 - c) * a[r] * a[t];
        }
    }
    m
}

/// Left multiplication by the unit quaternion q = (a, b, c, d), acting on
/// R^4 with the scalar part in the first coordinate.
fn quaternion_left(q: &[f64; 4]) -> Vec<f64> {
    let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
    vec![
        a, -b, -c, -d, //
        b, a, -d, c, //
        c, d, a, -b, //
        d, -c, b, a,
    ]
}

/// Right multiplication by the unit quaternion q = (a, b, c, d).
fn quaternion_right(q: &[f64; 4]) -> Vec<f64> {
    let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
    vec![
        a, -b, -c, -d, //
        b, a, d, -c, //
        c, -d, a, b, //
        d, c, -b, a,
    ]
}

// ---------------------------------------------------------------------------
// Polytopes
// ---------------------------------------------------------------------------

/// A regular polytope in canonical placement: vertex list in R^(n+1), all
/// vertices on a common sphere about the origin.
#[derive(Debug, Clone)]
pub struct PolytopeSpec {
    /// Sphere dimension n; vertices live in R^(n+1).
    pub n: usize,
    /// Vertex count.
    pub k: usize,
    /// Vertices, each of length n+1.
    pub vertices: Vec<Vec<f64>>,
    /// Human-readable name ("hypercube", "icosahedron", ...).
    pub label: String,
}

impl PolytopeSpec {
    fn new(n: usize, vertices: Vec<Vec<f64>>, label: &str) -> Result<Self> {
        let k = vertices.len();
        let r0 = norm(&vertices[0]);
        for v in &vertices {
            if v.len() != n + 1 {
                return Err(Error::Precondition(format!(
                    "{label}: vertex dimension {} != {}",
                    v.len(),
                    n + 1
                )));
            }
            if (norm(v) - r0).abs() > 1e-12 * r0.max(1.0) {
                return Err(Error::Precondition(format!(
                    "{label}: vertices are not on a common sphere"
                )));
            }
        }
        Ok(PolytopeSpec {
            n,
            k,
            vertices,
            label: label.to_string(),
        })
    }

    /// Common distance of the vertices from the origin.
    pub fn circumradius(&self) -> f64 {
        norm(&self.vertices[0])
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn polygon_vertices(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            vec![t.cos(), t.sin()]
        })
        .collect()
}

/// Regular simplex with one vertex at (1, ..., 1); the edges leaving that
/// vertex cross the positive axes at distance sqrt(n+2) - 1 from the origin,
/// which pins the remaining vertices.
fn simplex_vertices(n: usize) -> Vec<Vec<f64>> {
    let d = n + 1;
    let nf = n as f64;
    let lambda_e = (nf + 2.0).sqrt() - 1.0;
    let c = ((nf + 2.0) / (nf + 3.0 - 2.0 * (nf + 2.0).sqrt())).sqrt();
    let mut verts = vec![vec![1.0; d]];
    for j in 0..d {
        let mut v = vec![0.0; d];
        for i in 0..d {
            let target = if i == j { lambda_e } else { 0.0 };
            v[i] = 1.0 + c * (target - 1.0);
        }
        verts.push(v);
    }
    verts
}

fn cross_vertices(d: usize) -> Vec<Vec<f64>> {
    let mut verts = Vec::with_capacity(2 * d);
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; d];
            v[i] = s;
            verts.push(v);
        }
    }
    verts
}

fn cube_vertices(d: usize) -> Vec<Vec<f64>> {
    (0..1usize << d)
        .map(|mask| {
            (0..d)
                .map(|i| if mask & (1 << i) != 0 { -1.0 } else { 1.0 })
                .collect()
        })
        .collect()
}

/// Icosahedron with unit circumradius: cyclic shifts of (0, ±1, ±phi),
/// normalized.  It is the dual of `dodecahedron_vertices`, rescaled to the
/// unit sphere.
fn icosahedron_vertices() -> Vec<Vec<f64>> {
    let phi = golden_ratio();
    let r = (1.0 + phi * phi).sqrt();
    let mut verts = Vec::with_capacity(12);
    for shift in 0..3 {
        for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let base = [0.0, sa / r, sb * phi / r];
            let mut v = vec![0.0; 3];
            for i in 0..3 {
                v[(i + shift) % 3] = base[i];
            }
            verts.push(v);
        }
    }
    verts
}

/// Dodecahedron built on the hypercube placement (±1, ±1, ±1), adding two
/// golden-rectangle points outside each cube face; circumradius sqrt 3.
/// Oriented so that its face axes are the vertices of
/// `icosahedron_vertices` (the two solids are duals).
fn dodecahedron_vertices() -> Vec<Vec<f64>> {
    let phi = golden_ratio();
    let mut verts = cube_vertices(3);
    for shift in 0..3 {
        for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let base = [0.0, sa * phi, sb / phi];
            let mut v = vec![0.0; 3];
            for i in 0..3 {
                v[(i + shift) % 3] = base[i];
            }
            verts.push(v);
        }
    }
    verts
}

fn cell24_vertices() -> Vec<Vec<f64>> {
    let mut verts = cross_vertices(4);
    for mask in 0..16usize {
        let v: Vec<f64> = (0..4)
            .map(|i| if mask & (1 << i) != 0 { -0.5 } else { 0.5 })
            .collect();
        verts.push(v);
    }
    verts
}

fn even_permutations_of_four() -> Vec<[usize; 4]> {
    let mut perms = Vec::new();
    let mut items = [0usize, 1, 2, 3];
    permute(&mut items, 0, &mut perms);
    perms.into_iter().filter(|p| parity(p) == 0).collect()
}

fn permute(items: &mut [usize; 4], k: usize, out: &mut Vec<[usize; 4]>) {
    if k == 4 {
        out.push(*items);
        return;
    }
    for i in k..4 {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

fn parity(p: &[usize; 4]) -> usize {
    let mut inv = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    inv % 2
}

/// The 120 vertices of the 600-cell with unit circumradius: the 16-cell and
/// hypercube vertices at half scale plus the 96 even permutations of
/// (±1/2, ±phi/2, ±1/(2 phi), 0).
fn cell600_vertices() -> Vec<Vec<f64>> {
    let phi = golden_ratio();
    let mut verts = cross_vertices(4);
    for mask in 0..16usize {
        verts.push(
            (0..4)
                .map(|i| if mask & (1 << i) != 0 { -0.5 } else { 0.5 })
                .collect(),
        );
    }
    let base = [0.5, phi / 2.0, 1.0 / (2.0 * phi), 0.0];
    for perm in even_permutations_of_four() {
        for mask in 0..8usize {
            let signs = [
                if mask & 1 != 0 { -1.0 } else { 1.0 },
                if mask & 2 != 0 { -1.0 } else { 1.0 },
                if mask & 4 != 0 { -1.0 } else { 1.0 },
                1.0,
            ];
            let mut v = vec![0.0; 4];
            for i in 0..4 {
                v[perm[i]] = signs[i] * base[i];
            }
            verts.push(v);
        }
    }
    verts
}

/// The 600 vertices of the 120-cell, constructed as the normalized centroids
/// of the tetrahedral cells of the 600-cell.  Cells are the 4-cliques of the
/// nearest-neighbour graph, in which adjacent unit vertices have inner
/// product phi/2.
fn cell120_vertices() -> Vec<Vec<f64>> {
    let verts = cell600_vertices();
    let m = verts.len();
    let target = golden_ratio() / 2.0;
    let mut adj = vec![Vec::new(); m];
    for i in 0..m {
        for j in i + 1..m {
            let dot: f64 = verts[i].iter().zip(&verts[j]).map(|(a, b)| a * b).sum();
            if (dot - target).abs() < 1e-9 {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let mut cells = Vec::new();
    for i in 0..m {
        for &j in &adj[i] {
            if j <= i {
                continue;
            }
            for &k in &adj[i] {
                if k <= j || !adj[j].contains(&k) {
                    continue;
                }
                for &l in &adj[i] {
                    if l <= k || !adj[j].contains(&l) || !adj[k].contains(&l) {
                        continue;
                    }
                    let mut c = vec![0.0; 4];
                    for idx in [i, j, k, l] {
                        for t in 0..4 {
                            c[t] += verts[idx][t] / 4.0;
                        }
                    }
                    let r = norm(&c);
                    for t in 0..4 {
                        c[t] /= r;
                    }
                    cells.push(c);
                }
            }
        }
    }
    assert_eq!(cells.len(), 600, "600-cell must have 600 tetrahedral cells");
    cells
}

/// Build the vertex list of the regular polytope with `k` vertices on S^n in
/// canonical placement.  Admissible: n=1 any k >= 3; n=2 k in {4,6,8,12,20};
/// n=3 k in {5,8,16,24,120,600} (vertex lists only; see `symmetry_group` for
/// which of their groups stay below the closure cap).
pub fn good_position_polytope(n: usize, k: usize) -> Result<PolytopeSpec> {
    match (n, k) {
        (1, k) if k >= 3 => PolytopeSpec::new(1, polygon_vertices(k), &format!("polygon-{k}")),
        (2, 4) => PolytopeSpec::new(2, simplex_vertices(2), "simplex"),
        (2, 6) => PolytopeSpec::new(2, cross_vertices(3), "cross-polytope"),
        (2, 8) => PolytopeSpec::new(2, cube_vertices(3), "hypercube"),
        (2, 12) => PolytopeSpec::new(2, icosahedron_vertices(), "icosahedron"),
        (2, 20) => PolytopeSpec::new(2, dodecahedron_vertices(), "dodecahedron"),
        (3, 5) => PolytopeSpec::new(3, simplex_vertices(3), "simplex"),
        (3, 8) => PolytopeSpec::new(3, cross_vertices(4), "cross-polytope"),
        (3, 16) => PolytopeSpec::new(3, cube_vertices(4), "hypercube"),
        (3, 24) => PolytopeSpec::new(3, cell24_vertices(), "24-cell"),
        (3, 120) => PolytopeSpec::new(3, cell600_vertices(), "600-cell"),
        (3, 600) => PolytopeSpec::new(3, cell120_vertices(), "120-cell"),
        (n, _) if n == 0 || n > 3 => Err(Error::BadDimension(n)),
        (n, k) => Err(Error::InadmissiblePolytope { n, k }),
    }
}

// ---------------------------------------------------------------------------
// Groups
// ---------------------------------------------------------------------------

/// A finite subgroup of O(n+1) stored as explicit matrices (row-major),
/// closed under products, identity first.
#[derive(Debug, Clone)]
pub struct SymmetryGroup {
    /// Ambient dimension d = n+1; matrices are d x d.
    pub dim: usize,
    /// Row-major d*d matrices; `elements[0]` is the identity.
    pub elements: Vec<Vec<f64>>,
    /// How the generators were chosen.
    pub provenance: String,
}

impl SymmetryGroup {
    /// Number of elements.
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Apply element `idx` to the point `x`.
    pub fn apply(&self, idx: usize, x: &[f64], out: &mut [f64]) {
        mat_apply(self.dim, &self.elements[idx], x, out);
    }

    /// Index of a stored element matching `m` within `ELEMENT_TOL`, if any.
    pub fn find(&self, m: &[f64]) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| mat_max_diff(e, m) < ELEMENT_TOL)
    }
}

fn close_under_products(
    dim: usize,
    generators: &[Vec<f64>],
    provenance: &str,
) -> Result<SymmetryGroup> {
    for g in generators {
        if orthogonality_defect(dim, g) > ORTHO_TOL {
            return Err(Error::Precondition(format!(
                "group generator is not orthogonal ({provenance})"
            )));
        }
    }
    let mut elements = vec![mat_identity(dim)];
    let mut head = 0;
    while head < elements.len() {
        let current = elements[head].clone();
        head += 1;
        for g in generators {
            let prod = mat_mul(dim, &current, g);
            if elements
                .iter()
                .all(|e| mat_max_diff(e, &prod) >= ELEMENT_TOL)
            {
                if orthogonality_defect(dim, &prod) > ORTHO_TOL {
                    return Err(Error::Precondition(
                        "product closure lost orthogonality".into(),
                    ));
                }
                elements.push(prod);
                if elements.len() > CLOSURE_CAP {
                    return Err(Error::ClosureOverflow { cap: CLOSURE_CAP });
                }
            }
        }
    }
    Ok(SymmetryGroup {
        dim,
        elements,
        provenance: provenance.to_string(),
    })
}

/// Full symmetry group of the polytope, generated by a small set of
/// explicit orthogonal maps and closed under products.  Fails with a
/// closure-overflow error when the group has more than `CLOSURE_CAP`
/// elements (the 600-cell and 120-cell families).
pub fn symmetry_group(p: &PolytopeSpec) -> Result<SymmetryGroup> {
    let d = p.n + 1;
    let phi = golden_ratio();
    match (p.n, p.label.as_str()) {
        (1, _) => {
            let t = 2.0 * std::f64::consts::PI / p.k as f64;
            let rot = vec![t.cos(), -t.sin(), t.sin(), t.cos()];
            let refl = diag_matrix(&[1.0, -1.0]);
            close_under_products(2, &[rot, refl], "rotation by 2 pi / k and axis reflection")
        }
        (_, "simplex") => {
            // Reflections swapping consecutive vertices generate the full
            // permutation group of the k = n + 2 vertices.
            let mut gens = Vec::new();
            for w in p.vertices.windows(2) {
                let mut u: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| a - b).collect();
                let r = norm(&u);
                u.iter_mut().for_each(|c| *c /= r);
                gens.push(reflection_matrix(&u));
            }
            close_under_products(d, &gens, "edge-bisector reflections")
        }
        (2, "cross-polytope") | (2, "hypercube") => {
            let gens = vec![
                perm_matrix(3, &[1, 0, 2]),
                perm_matrix(3, &[1, 2, 0]),
                diag_matrix(&[-1.0, 1.0, 1.0]),
            ];
            close_under_products(3, &gens, "signed coordinate permutations")
        }
        (3, "cross-polytope") | (3, "hypercube") => {
            let gens = vec![
                perm_matrix(4, &[1, 0, 2, 3]),
                perm_matrix(4, &[1, 2, 3, 0]),
                diag_matrix(&[-1.0, 1.0, 1.0, 1.0]),
            ];
            close_under_products(4, &gens, "signed coordinate permutations")
        }
        (2, "icosahedron") | (2, "dodecahedron") => {
            let axis_norm = (1.0 + phi * phi).sqrt();
            let axis = [0.0, 1.0 / axis_norm, phi / axis_norm];
            let gens = vec![
                diag_matrix(&[-1.0, 1.0, 1.0]),
                perm_matrix(3, &[1, 2, 0]),
                axis_rotation(&axis, 2.0 * std::f64::consts::PI / 5.0),
            ];
            close_under_products(
                3,
                &gens,
                "sign flip, cyclic shift, and golden rotation about a vertex axis",
            )
        }
        (3, "24-cell") => {
            let had = vec![
                0.5, 0.5, 0.5, 0.5, //
                0.5, 0.5, -0.5, -0.5, //
                0.5, -0.5, 0.5, -0.5, //
                0.5, -0.5, -0.5, 0.5,
            ];
            let gens = vec![
                perm_matrix(4, &[1, 0, 2, 3]),
                perm_matrix(4, &[1, 2, 3, 0]),
                diag_matrix(&[-1.0, 1.0, 1.0, 1.0]),
                had,
            ];
            close_under_products(4, &gens, "signed permutations and half-Hadamard map")
        }
        (3, "600-cell") | (3, "120-cell") => {
            // Two vertex quaternions that generate the full vertex group:
            // one of order 10 (golden) and one of order 6.  Acting from both
            // sides together with conjugation spans the whole symmetry
            // group, whose order is far above the closure cap.
            let q = [phi / 2.0, 1.0 / (2.0 * phi), 0.5, 0.0];
            let s = [0.5, 0.5, 0.5, 0.5];
            let gens = vec![
                diag_matrix(&[1.0, -1.0, -1.0, -1.0]),
                quaternion_left(&q),
                quaternion_right(&q),
                quaternion_left(&s),
                quaternion_right(&s),
            ];
            close_under_products(
                4,
                &gens,
                "quaternion conjugation and two-sided vertex quaternion multiplications",
            )
        }
        _ => Err(Error::InadmissiblePolytope { n: p.n, k: p.k }),
    }
}

// ---------------------------------------------------------------------------
// Group averaging
// ---------------------------------------------------------------------------

/// Group average of a node field: f_sym(x) = mean over g of f(g x), read
/// off by interpolation, then rescaled so the sphere integral of f is
/// preserved exactly whenever that integral is meaningfully nonzero (for
/// zero-mean profiles the rescale would divide noise by noise, so it is
/// skipped).
pub fn symmetrize_field(f: &ScalarField, group: &SymmetryGroup) -> Result<ScalarField> {
    let grid = f.grid.clone();
    if grid.ambient_dim() != group.dim {
        return Err(Error::GridMismatch);
    }
    let nn = grid.num_nodes();
    let mut out = vec![0.0; nn];
    let mut y = vec![0.0; group.dim];
    for i in 0..nn {
        let x = grid.node(i);
        let mut acc = 0.0;
        for e in &group.elements {
            mat_apply(group.dim, e, x, &mut y);
            acc += interpolate(f, &y)?;
        }
        out[i] = acc / group.order() as f64;
    }
    let total_weight: f64 = f.grid.weights.iter().sum();
    let mut avg = ScalarField::new(grid, out)?;
    let mass_before = f.integrate();
    let mass_after = avg.integrate();
    // Rescale to preserve mass, but only when the mass is meaningfully
    // nonzero: for zero-mean profiles both masses are quadrature and
    // interpolation noise and their ratio is garbage.
    let floor = 1e-8 * avg.sup_norm().max(f.sup_norm()) * total_weight;
    if mass_after.abs() > floor && mass_before.abs() > floor {
        let scale = mass_before / mass_after;
        avg.v.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(avg)
}

/// Group average of a support function (see `symmetrize_field`); the result
/// is wrapped as a body again, so positivity is re-checked.
pub fn symmetrize(k: &SupportFunction, group: &SymmetryGroup) -> Result<SupportFunction> {
    SupportFunction::new(symmetrize_field(&k.h, group)?)
}

/// Largest deviation from group invariance over all elements and nodes:
/// max |f(g x) - f(x)| with f(g x) interpolated.
pub fn invariance_defect(f: &ScalarField, group: &SymmetryGroup) -> Result<f64> {
    let grid = &f.grid;
    if grid.ambient_dim() != group.dim {
        return Err(Error::GridMismatch);
    }
    let mut worst = 0.0_f64;
    let mut y = vec![0.0; group.dim];
    for i in 0..grid.num_nodes() {
        let x = grid.node(i);
        for e in group.elements.iter().skip(1) {
            mat_apply(group.dim, e, x, &mut y);
            worst = worst.max((interpolate(f, &y)? - f.v[i]).abs());
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Moment orthonormality
// ---------------------------------------------------------------------------

/// Weighted moments of a convex body with density zeta = det A / h, the
/// volume density divided by h^2.  For a strongly symmetric body the first
/// moments vanish and the second-moment matrix is (total/(n+1)) I.
#[derive(Debug, Clone)]
pub struct OrthonormalityReport {
    /// Second moments M_ab = integral of x_a x_b zeta.
    pub m: Vec<Vec<f64>>,
    /// First moments W_a = integral of x_a zeta.
    pub w: Vec<f64>,
    /// Total mass: integral of zeta.
    pub total: f64,
    /// Largest |M_ab| off the diagonal.
    pub max_offdiag: f64,
    /// Largest relative spread among diagonal entries.
    pub diag_spread: f64,
    /// |trace M - total| (exactly zero in exact arithmetic).
    pub trace_defect: f64,
}

/// Compute the weighted first and second moments of `k` with density
/// det A / h and compare against the isotropic profile.
pub fn orthonormality_check(k: &SupportFunction) -> OrthonormalityReport {
    let grid = k.h.grid.clone();
    let d = grid.ambient_dim();
    let nn = grid.num_nodes();
    let mut m = vec![vec![0.0; d]; d];
    let mut w = vec![0.0; d];
    let mut total = 0.0;
    for i in 0..nn {
        let x = grid.node(i);
        let zeta = grid.weights[i] * k.det_a[i] / k.h.v[i];
        total += zeta;
        for a in 0..d {
            w[a] += x[a] * zeta;
            for b in 0..d {
                m[a][b] += x[a] * x[b] * zeta;
            }
        }
    }
    let mut max_offdiag = 0.0_f64;
    let mut dmin = f64::INFINITY;
    let mut dmax = f64::NEG_INFINITY;
    let mut trace = 0.0;
    for a in 0..d {
        trace += m[a][a];
        dmin = dmin.min(m[a][a]);
        dmax = dmax.max(m[a][a]);
        for b in 0..d {
            if a != b {
                max_offdiag = max_offdiag.max(m[a][b].abs());
            }
        }
    }
    OrthonormalityReport {
        m,
        w,
        total,
        max_offdiag,
        diag_spread: (dmax - dmin) / dmax.abs().max(f64::MIN_POSITIVE),
        trace_defect: (trace - total).abs(),
    }
}

/// Convenience: build the group of the polytope with `k` vertices on S^n.
pub fn named_group(n: usize, k: usize) -> Result<SymmetryGroup> {
    symmetry_group(&good_position_polytope(n, k)?)
}

/// Check that every pairwise product of stored elements matches a stored
/// element; returns the worst mismatch over all pairs.
pub fn closure_defect(group: &SymmetryGroup) -> f64 {
    let d = group.dim;
    let mut worst = 0.0_f64;
    for a in &group.elements {
        for b in &group.elements {
            let prod = mat_mul(d, a, b);
            let best = group
                .elements
                .iter()
                .map(|e| mat_max_diff(e, &prod))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn contains_vertex(list: &[Vec<f64>], v: &[f64], tol: f64) -> bool {
        list.iter()
            .any(|w| w.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < tol)
    }

    #[test]
    fn polygon_vertices_and_dihedral_order() {
        let p = good_position_polytope(1, 5).unwrap();
        assert_eq!(p.k, 5);
        for (j, v) in p.vertices.iter().enumerate() {
            let t = 2.0 * std::f64::consts::PI * j as f64 / 5.0;
            assert!((v[0] - t.cos()).abs() < 1e-15);
            assert!((v[1] - t.sin()).abs() < 1e-15);
        }
        for k in [3usize, 4, 5, 7] {
            let g = named_group(1, k).unwrap();
            assert_eq!(g.order(), 2 * k);
            assert!(closure_defect(&g) < ELEMENT_TOL);
        }
    }

    #[test]
    fn simplex_construction_hits_the_axis_points() {
        for n in [2usize, 3] {
            let p = good_position_polytope(n, n + 2).unwrap();
            assert_eq!(p.k, n + 2);
            let d = n + 1;
            let lambda_e = ((n as f64) + 2.0).sqrt() - 1.0;
            let r0 = p.circumradius();
            // Common circumradius and zero centroid.
            let mut centroid = vec![0.0; d];
            for v in &p.vertices {
                assert!((norm(v) - r0).abs() < 1e-12 * r0);
                for i in 0..d {
                    centroid[i] += v[i] / p.k as f64;
                }
            }
            assert!(norm(&centroid) < 1e-12);
            // The edge from (1,...,1) towards vertex j crosses lambda_e e_j.
            let ve = &p.vertices[0];
            for j in 0..d {
                let vj = &p.vertices[j + 1];
                let mut target = vec![0.0; d];
                target[j] = lambda_e;
                // Projection of target onto the segment ve -> vj.
                let dir: Vec<f64> = vj.iter().zip(ve).map(|(a, b)| a - b).collect();
                let num: f64 = target
                    .iter()
                    .zip(ve)
                    .zip(&dir)
                    .map(|((t, v), u)| (t - v) * u)
                    .sum();
                let den: f64 = dir.iter().map(|u| u * u).sum();
                let t = num / den;
                assert!(t > 0.0 && t < 1.0);
                let dist: f64 = (0..d)
                    .map(|i| (ve[i] + t * dir[i] - target[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(dist < 1e-12, "axis crossing off by {dist}");
            }
        }
        // n = 2 simplex is the standard alternating-sign tetrahedron.
        let p = good_position_polytope(2, 4).unwrap();
        for v in [
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 1.0],
        ] {
            assert!(contains_vertex(&p.vertices, &v, 1e-12));
        }
    }

    #[test]
    fn golden_polytopes_have_the_right_geometry() {
        let ico = good_position_polytope(2, 12).unwrap();
        assert_eq!(ico.k, 12);
        assert!((ico.circumradius() - 1.0).abs() < 1e-14);
        // Adjacent icosahedron vertices subtend inner product 1/sqrt 5.
        let mut max_dot = f64::NEG_INFINITY;
        for i in 0..12 {
            for j in 0..12 {
                if i != j {
                    let dot: f64 = ico.vertices[i]
                        .iter()
                        .zip(&ico.vertices[j])
                        .map(|(a, b)| a * b)
                        .sum();
                    max_dot = max_dot.max(dot);
                }
            }
        }
        assert!((max_dot - 1.0 / 5.0_f64.sqrt()).abs() < 1e-12);

        let dod = good_position_polytope(2, 20).unwrap();
        assert_eq!(dod.k, 20);
        assert!((dod.circumradius() - 3.0_f64.sqrt()).abs() < 1e-14);
        // The hypercube vertices are a subset (the defining placement).
        for v in cube_vertices(3) {
            assert!(contains_vertex(&dod.vertices, &v, 1e-14));
        }
    }

    #[test]
    fn group_orders_match_the_polytope_families() {
        let cases = [
            (2usize, 4usize, 24usize),
            (2, 6, 48),
            (2, 8, 48),
            (2, 12, 120),
            (2, 20, 120),
            (3, 5, 120),
            (3, 8, 384),
            (3, 16, 384),
            (3, 24, 1152),
        ];
        for (n, k, order) in cases {
            let g = named_group(n, k).unwrap();
            assert_eq!(g.order(), order, "group order for n={n}, k={k}");
            for e in &g.elements {
                assert!(orthogonality_defect(g.dim, e) < ORTHO_TOL);
            }
        }
    }

    #[test]
    fn groups_are_closed_and_preserve_their_polytopes() {
        for (n, k) in [(2usize, 4usize), (2, 6), (2, 12), (2, 20), (3, 24)] {
            let p = good_position_polytope(n, k).unwrap();
            let g = symmetry_group(&p).unwrap();
            let mut y = vec![0.0; g.dim];
            for idx in 0..g.order() {
                for v in &p.vertices {
                    g.apply(idx, v, &mut y);
                    assert!(
                        contains_vertex(&p.vertices, &y, 1e-9),
                        "element {idx} moved a vertex off the polytope (n={n}, k={k})"
                    );
                }
            }
        }
        // Full pairwise closure for one rich example.
        let g = named_group(2, 12).unwrap();
        assert!(closure_defect(&g) < ELEMENT_TOL);
        // The cyclic coordinate shift lies in the simplex groups.
        for n in [2usize, 3] {
            let g = named_group(n, n + 2).unwrap();
            let d = n + 1;
            let perm: Vec<usize> = (0..d).map(|i| (i + 1) % d).collect();
            assert!(g.find(&perm_matrix(d, &perm)).is_some());
        }
        // -I lies in the icosahedral group.
        let g = named_group(2, 12).unwrap();
        assert!(g.find(&diag_matrix(&[-1.0, -1.0, -1.0])).is_some());
    }

    #[test]
    fn golden_four_dimensional_groups_overflow_the_cap() {
        for k in [120usize, 600] {
            let p = good_position_polytope(3, k).unwrap();
            match symmetry_group(&p) {
                Err(Error::ClosureOverflow { cap }) => assert_eq!(cap, CLOSURE_CAP),
                other => panic!("expected closure overflow, got {other:?}"),
            }
        }
    }

    #[test]
    fn six_hundred_cell_and_its_dual() {
        let p = good_position_polytope(3, 120).unwrap();
        assert_eq!(p.k, 120);
        for v in &p.vertices {
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
        // Nearest-neighbour count is 12 at inner product phi/2.
        let target = golden_ratio() / 2.0;
        let neighbours = (0..120)
            .map(|i| {
                (0..120)
                    .filter(|&j| {
                        j != i
                            && ((p.vertices[i]
                                .iter()
                                .zip(&p.vertices[j])
                                .map(|(a, b)| a * b)
                                .sum::<f64>())
                                - target)
                                .abs()
                                < 1e-9
                    })
                    .count()
            })
            .collect::<Vec<_>>();
        assert!(neighbours.iter().all(|&c| c == 12));

        let dual = good_position_polytope(3, 600).unwrap();
        assert_eq!(dual.k, 600);
        for v in &dual.vertices {
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
        // Vertices are distinct.
        for i in 0..600 {
            for j in i + 1..600 {
                let d2: f64 = dual.vertices[i]
                    .iter()
                    .zip(&dual.vertices[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                assert!(d2 > 1e-3);
            }
        }
    }

    #[test]
    fn inadmissible_polytopes_are_rejected() {
        for (n, k) in [(1usize, 2usize), (2, 5), (2, 7), (2, 24), (3, 6), (3, 100)] {
            match good_position_polytope(n, k) {
                Err(Error::InadmissiblePolytope { .. }) => {}
                other => panic!("expected inadmissible error for ({n},{k}), got {other:?}"),
            }
        }
        assert!(matches!(
            good_position_polytope(0, 3),
            Err(Error::BadDimension(0))
        ));
        assert!(matches!(
            good_position_polytope(4, 5),
            Err(Error::BadDimension(4))
        ));
    }

    #[test]
    fn symmetrize_cancels_linear_parts_and_preserves_mass() {
        let g = make_grid(2, &[48, 96]).unwrap();
        let h = ScalarField::from_fn(&g, |x| 1.0 + 0.1 * x[0]);
        let grp = named_group(2, 6).unwrap();
        let defect_raw = invariance_defect(&h, &grp).unwrap();
        assert!(
            (defect_raw - 0.2).abs() < 5e-3,
            "raw defect {defect_raw} should be about 0.2"
        );
        let hs = symmetrize_field(&h, &grp).unwrap();
        for v in &hs.v {
            assert!((v - 1.0).abs() < 1e-5, "linear part survived: {v}");
        }
        let before = h.integrate();
        let after = hs.integrate();
        assert!((before - after).abs() < 1e-12 * before.abs());
    }

    #[test]
    fn symmetrize_is_idempotent_and_nearly_invariant() {
        let g = make_grid(2, &[64, 128]).unwrap();
        // Smooth, positive, low-frequency, deliberately asymmetric.
        let h = ScalarField::from_fn(&g, |x| {
            1.0 + 0.08 * x[0] + 0.05 * x[1] * x[2] + 0.03 * x[2]
        });
        let grp = named_group(2, 6).unwrap();
        let hs = symmetrize_field(&h, &grp).unwrap();
        let range = h.max() - h.min();
        let defect = invariance_defect(&hs, &grp).unwrap();
        assert!(
            defect < 1e-6 * range,
            "defect {defect} vs range budget {}",
            1e-6 * range
        );
        let hss = symmetrize_field(&hs, &grp).unwrap();
        let defect2 = invariance_defect(&hss, &grp).unwrap();
        assert!(defect2 <= defect + 1e-10);
    }

    #[test]
    fn circle_symmetrization_matches_the_dihedral_average() {
        let g = make_grid(1, &[240]).unwrap();
        let h = ScalarField::from_fn(&g, |x| {
            let t = x[1].atan2(x[0]);
            1.0 + 0.1 * (3.0 * t).cos() + 0.05 * t.sin()
        });
        let grp = named_group(1, 3).unwrap();
        let hs = symmetrize_field(&h, &grp).unwrap();
        // D_3 averaging keeps cos(3 theta) and removes sin(theta).
        for (i, v) in hs.v.iter().enumerate() {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 240.0;
            assert!(
                (v - (1.0 + 0.1 * (3.0 * t).cos())).abs() < 1e-9,
                "node {i}: {v}"
            );
        }
        assert!(invariance_defect(&hs, &grp).unwrap() < 1e-9);
    }

    #[test]
    fn orthonormality_on_spheres_and_analytic_octahedral_bodies() {
        // Round sphere, n = 1: M = pi I, W = 0.
        let g1 = make_grid(1, &[256]).unwrap();
        let b1 = SupportFunction::from_fn(&g1, |_| 1.0).unwrap();
        let rep = orthonormality_check(&b1);
        for a in 0..2 {
            assert!((rep.m[a][a] - std::f64::consts::PI).abs() < 1e-10);
            assert!(rep.w[a].abs() < 1e-10);
        }
        assert!(rep.max_offdiag < 1e-12);
        assert!(rep.trace_defect < 1e-12 * rep.total);

        // Round sphere, n = 2: M = (4 pi / 3) I.
        let g2 = make_grid(2, &[32, 64]).unwrap();
        let b2 = SupportFunction::from_fn(&g2, |_| 1.0).unwrap();
        let rep = orthonormality_check(&b2);
        let third = 4.0 * std::f64::consts::PI / 3.0;
        for a in 0..3 {
            assert!((rep.m[a][a] - third).abs() < 1e-10);
            assert!(rep.w[a].abs() < 1e-10);
        }
        assert!(rep.max_offdiag < 1e-12);

        // Analytically octahedral body: moments must be isotropic up to the
        // finite-difference truncation of det A, which shrinks like the
        // fourth power of the spacing (measured: 1.7e-5 at 32x64).
        let g3 = make_grid(2, &[48, 96]).unwrap();
        let b = SupportFunction::from_fn(&g3, |x| {
            1.0 + 0.05 * (x[0].powi(4) + x[1].powi(4) + x[2].powi(4))
        })
        .unwrap();
        let rep = orthonormality_check(&b);
        assert!(rep.max_offdiag < 1e-10 * rep.total);
        assert!(
            rep.diag_spread < 5e-6,
            "diagonal spread {}",
            rep.diag_spread
        );
        for a in 0..3 {
            assert!((rep.m[a][a] - rep.total / 3.0).abs() < 5e-6 * rep.total);
            assert!(rep.w[a].abs() < 1e-10 * rep.total);
        }
    }

    #[test]
    fn symmetrized_bodies_satisfy_the_orthonormal_relation() {
        let g = make_grid(2, &[48, 96]).unwrap();
        let h = ScalarField::from_fn(&g, |x| {
            1.0 + 0.02 * x[0] + 0.015 * x[1] * x[2] + 0.01 * (x[2] * x[2] - x[0] * x[1])
        });
        let grp = named_group(2, 4).unwrap();
        let hs = symmetrize_field(&h, &grp).unwrap();
        let body = SupportFunction::new(hs).unwrap();
        let rep = orthonormality_check(&body);
        assert!(
            rep.max_offdiag < 1e-8 * rep.total,
            "off-diagonal {} vs total {}",
            rep.max_offdiag,
            rep.total
        );
        assert!(rep.diag_spread < 1e-5, "diagonal spread {}", rep.diag_spread);
        for a in 0..3 {
            let target = rep.total / 3.0;
            assert!((rep.m[a][a] - target).abs() < 1e-5 * target);
            assert!(rep.w[a].abs() < 1e-8 * rep.total);
        }
        // Strong symmetry centres the body at the origin.
        let report = crate::body::geometry_report(&body).unwrap();
        let c = norm(&report.centroid);
        assert!(c < 1e-8, "centroid {c}");
    }
}
