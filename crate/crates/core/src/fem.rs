//! P1 nodal elements on the meridian mesh: quadrature, per-mode essential
//! constraints for the electric (X) and magnetic (Y) spaces, and boundary lifting.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, CornerDescriptor, TriangleMesh};

pub type C64 = Complex64;
/// Cylindrical components `(u_r, u_θ, u_z)`.
pub type Vec3 = [C64; 3];

pub const R: usize = 0;
pub const THETA: usize = 1;
pub const Z: usize = 2;

pub const ZERO3: Vec3 = [C64::new(0.0, 0.0); 3];

/// Field kind, naming the space it lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// `X`: tangential trace vanishes on the wall (electric field).
    Electric,
    /// `Y`: normal trace vanishes on the wall (magnetic field).
    Magnetic,
}

impl SpaceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpaceKind::Electric => "electric",
            SpaceKind::Magnetic => "magnetic",
        }
    }
}

impl std::str::FromStr for SpaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "electric" | "E" | "X" => Ok(SpaceKind::Electric),
            "magnetic" | "B" | "Y" => Ok(SpaceKind::Magnetic),
            _ => Err(Error::InvalidInput(format!("unknown field kind '{s}'"))),
        }
    }
}

/// Symmetric rule on the reference triangle. Weights sum to one.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Seven-point rule, exact for polynomials of degree 5.
    pub fn degree5() -> Self {
        let s = 15f64.sqrt();
        let (a1, b1, w1) = ((9.0 + 2.0 * s) / 21.0, (6.0 - s) / 21.0, (155.0 - s) / 1200.0);
        let (a2, b2, w2) = ((9.0 - 2.0 * s) / 21.0, (6.0 + s) / 21.0, (155.0 + s) / 1200.0);
        let third = 1.0 / 3.0;
        Self {
            points: vec![
                [third, third, third],
                [a1, b1, b1],
                [b1, a1, b1],
                [b1, b1, a1],
                [a2, b2, b2],
                [b2, a2, b2],
                [b2, b2, a2],
            ],
            weights: vec![0.225, w1, w1, w1, w2, w2, w2],
        }
    }
}

/// Affine geometry of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeom {
    pub verts: [[f64; 2]; 3],
    pub area: f64,
    /// `∇λ_i = [∂_r λ_i, ∂_z λ_i]`.
    pub grad: [[f64; 2]; 3],
}

impl ElementGeom {
    pub fn new(verts: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = verts;
        let area = 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
        let mut grad = [[0.0; 2]; 3];
        for i in 0..3 {
            let a = verts[(i + 1) % 3];
            let b = verts[(i + 2) % 3];
            grad[i] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
        }
        Self { verts, area, grad }
    }

    pub fn point(&self, lam: [f64; 3]) -> [f64; 2] {
        let mut p = [0.0; 2];
        for i in 0..3 {
            p[0] += lam[i] * self.verts[i][0];
            p[1] += lam[i] * self.verts[i][1];
        }
        p
    }
}

/// A quadrature point inside an element. `w` is the plain area weight; the
/// `r` weight of the L²₁ measure is applied by the caller.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub lam: [f64; 3],
    pub r: f64,
    pub z: f64,
    pub w: f64,
}

/// Boundary edge attached to the element that owns it.
#[derive(Debug, Clone, Copy)]
pub struct EdgeRef {
    pub elem: usize,
    pub local: [usize; 2],
    pub tag: BoundaryTag,
    pub normal: [f64; 2],
    pub length: f64,
}

/// Number of extra graded levels for elements that have the corner as a vertex.
pub const CORNER_GRADING_DEPTH: usize = 6;

/// Per-element quadrature points for the whole mesh, plus element geometry.
///
/// Elements within one mesh size of a reentrant corner are split into four
/// sub-triangles carrying the base rule each; elements touching the corner are
/// further refined toward it so the `ρ^{α-1}` integrands stay resolved.
#[derive(Debug, Clone)]
pub struct QuadPlan {
    pub triangles: Vec<[usize; 3]>,
    pub n_vertices: usize,
    pub elements: Vec<ElementGeom>,
    pub points: Vec<Vec<QuadPoint>>,
    pub edges: Vec<EdgeRef>,
    pub axis_vertex: Vec<bool>,
}

type Bary = [[f64; 3]; 3];

fn split4(t: &Bary) -> [Bary; 4] {
    let mid = |a: [f64; 3], b: [f64; 3]| {
        [
            0.5 * (a[0] + b[0]),
            0.5 * (a[1] + b[1]),
            0.5 * (a[2] + b[2]),
        ]
    };
    let [a, b, c] = *t;
    let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
    [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
}

impl QuadPlan {
    pub fn new(mesh: &TriangleMesh) -> Self {
        Self::with_corners(mesh, &[])
    }

    pub fn with_corners(mesh: &TriangleMesh, corners: &[CornerDescriptor]) -> Self {
        let rule = QuadratureRule::degree5();
        let h = mesh.h();
        let elements: Vec<ElementGeom> = (0..mesh.n_triangles())
            .map(|t| ElementGeom::new(mesh.triangle_points(t)))
            .collect();
        let mut points = Vec::with_capacity(elements.len());
        for (t, geom) in elements.iter().enumerate() {
            let tri = mesh.triangles[t];
            let mut subs: Vec<(Bary, f64)> = vec![([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], 1.0)];
            let touching = corners
                .iter()
                .find_map(|c| tri.iter().position(|&v| v == c.corner_vertex));
            let near = corners.iter().any(|c| {
                geom.verts
                    .iter()
                    .any(|p| (p[0] - c.position[0]).hypot(p[1] - c.position[1]) <= h * (1.0 + 1e-9))
            });
            if near || touching.is_some() {
                subs = split4(&subs[0].0).iter().map(|s| (*s, 0.25)).collect();
            }
            if let Some(local) = touching {
                for _ in 0..CORNER_GRADING_DEPTH {
                    let idx = subs
                        .iter()
                        .position(|(s, _)| s.iter().any(|p| p[local] == 1.0))
                        .expect("corner sub-triangle");
                    let (s, frac) = subs.swap_remove(idx);
                    subs.extend(split4(&s).iter().map(|c| (*c, 0.25 * frac)));
                }
            }
            let mut pts = Vec::with_capacity(subs.len() * rule.points.len());
            for (s, frac) in &subs {
                for (mu, w) in rule.points.iter().zip(&rule.weights) {
                    let mut lam = [0.0; 3];
                    for (j, m) in mu.iter().enumerate() {
                        for i in 0..3 {
                            lam[i] += m * s[j][i];
                        }
                    }
                    let [r, z] = geom.point(lam);
                    pts.push(QuadPoint {
                        lam,
                        r,
                        z,
                        w: w * frac * geom.area,
                    });
                }
            }
            points.push(pts);
        }

        let mut edges = Vec::with_capacity(mesh.boundary.len());
        for e in &mesh.boundary {
            let [a, b] = mesh.oriented(e.v);
            let elem = mesh
                .triangles
                .iter()
                .position(|t| (0..3).any(|i| t[i] == a && t[(i + 1) % 3] == b))
                .expect("boundary edge owned by a triangle");
            let tri = mesh.triangles[elem];
            let la = tri.iter().position(|&v| v == a).unwrap();
            let lb = tri.iter().position(|&v| v == b).unwrap();
            let p = mesh.vertices[a];
            let q = mesh.vertices[b];
            edges.push(EdgeRef {
                elem,
                local: [la, lb],
                tag: e.tag,
                normal: mesh.edge_normal(e),
                length: (q[0] - p[0]).hypot(q[1] - p[1]),
            });
        }
        let mut axis_vertex = vec![false; mesh.n_vertices()];
        for e in mesh.boundary.iter().filter(|e| e.tag == BoundaryTag::Axis) {
            axis_vertex[e.v[0]] = true;
            axis_vertex[e.v[1]] = true;
        }

        Self {
            triangles: mesh.triangles.clone(),
            n_vertices: mesh.n_vertices(),
            elements,
            points,
            edges,
            axis_vertex,
        }
    }

    /// Two-point Gauss rule on a boundary edge, as element quadrature points
    /// with plain arc-length weights.
    pub fn edge_points(&self, edge: &EdgeRef) -> [QuadPoint; 2] {
        let g = 0.5 / 3f64.sqrt();
        let geom = &self.elements[edge.elem];
        [0.5 - g, 0.5 + g].map(|s| {
            let mut lam = [0.0; 3];
            lam[edge.local[0]] = 1.0 - s;
            lam[edge.local[1]] = s;
            let [r, z] = geom.point(lam);
            QuadPoint {
                lam,
                r,
                z,
                w: 0.5 * edge.length,
            }
        })
    }

    pub fn touches_axis(&self, e: usize) -> bool {
        self.triangles[e].iter().any(|&v| self.axis_vertex[v])
    }
}

/// Complex nodal P1 field for one Fourier mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    pub k: i32,
    pub values: Vec<Vec3>,
}

impl ModeField {
    pub fn zeros(k: i32, n: usize) -> Self {
        Self {
            k,
            values: vec![ZERO3; n],
        }
    }

    pub fn dof(&self, dof: usize) -> C64 {
        self.values[dof / 3][dof % 3]
    }

    pub fn dof_mut(&mut self, dof: usize) -> &mut C64 {
        &mut self.values[dof / 3][dof % 3]
    }

    pub fn conj(&self) -> Self {
        Self {
            k: -self.k,
            values: self.values.iter().map(|v| v.map(|c| c.conj())).collect(),
        }
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            k: self.k,
            values: self.values.iter().map(|v| v.map(|c| c * s)).collect(),
        }
    }

    pub fn add(&self, other: &ModeField) -> Self {
        Self {
            k: self.k,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter().map(|c| c.norm()))
            .fold(0.0, f64::max)
    }

    /// Value at barycentric coordinates `lam` of element `tri`.
    pub fn eval_in(&self, tri: [usize; 3], lam: [f64; 3]) -> Vec3 {
        let mut out = ZERO3;
        for i in 0..3 {
            let v = &self.values[tri[i]];
            for c in 0..3 {
                out[c] += v[c] * lam[i];
            }
        }
        out
    }
}

/// Barycentric P1 interpolation of `field` at `(r, z)`.
pub fn interpolate(mesh: &TriangleMesh, field: &ModeField, r: f64, z: f64) -> Result<Vec3> {
    let (t, lam) = mesh.locate(r, z)?;
    Ok(field.eval_in(mesh.triangles[t], lam))
}

/// Role of a nodal degree of freedom (`dof = 3·vertex + component`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DofRole {
    Free(usize),
    /// Essential condition; homogeneous for the regular space, possibly lifted.
    Zero,
    /// `dof = coeff · master`, with `master` a free dof.
    Tie { master: usize, coeff: C64 },
}

/// Essential conditions of `X_(k)` or `Y_(k)` on a given mesh.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub k: i32,
    pub kind: SpaceKind,
    pub roles: Vec<DofRole>,
    pub free_dofs: Vec<usize>,
}

impl ConstraintSet {
    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.roles.len()
    }

    /// Free unknowns a dof depends on, with coefficients.
    pub fn dof_map(&self, dof: usize) -> Option<(usize, C64)> {
        match self.roles[dof] {
            DofRole::Free(i) => Some((i, C64::new(1.0, 0.0))),
            DofRole::Zero => None,
            DofRole::Tie { master, coeff } => match self.roles[master] {
                DofRole::Free(i) => Some((i, coeff)),
                _ => None,
            },
        }
    }

    /// Projects a field onto the constrained set: zero dofs cleared, ties enforced.
    pub fn apply(&self, field: &mut ModeField) {
        for (dof, role) in self.roles.iter().enumerate() {
            match *role {
                DofRole::Free(_) => {}
                DofRole::Zero => *field.dof_mut(dof) = C64::new(0.0, 0.0),
                DofRole::Tie { master, coeff } => {
                    let m = field.dof(master);
                    *field.dof_mut(dof) = coeff * m;
                }
            }
        }
    }

    /// True when every essential condition holds to `tol`.
    pub fn is_satisfied(&self, field: &ModeField, tol: f64) -> bool {
        self.roles.iter().enumerate().all(|(dof, role)| match *role {
            DofRole::Free(_) => true,
            DofRole::Zero => field.dof(dof).norm() <= tol,
            DofRole::Tie { master, coeff } => (field.dof(dof) - coeff * field.dof(master)).norm() <= tol,
        })
    }

    /// Builds a nodal field from free values, taking constrained values from `lift`.
    pub fn expand(&self, x: &[C64], lift: Option<&ModeField>) -> ModeField {
        let mut f = match lift {
            Some(l) => l.clone(),
            None => ModeField::zeros(self.k, self.roles.len() / 3),
        };
        f.k = self.k;
        for (dof, role) in self.roles.iter().enumerate() {
            match *role {
                DofRole::Free(i) => *f.dof_mut(dof) = x[i],
                DofRole::Zero => {
                    if lift.is_none() {
                        *f.dof_mut(dof) = C64::new(0.0, 0.0);
                    }
                }
                DofRole::Tie { .. } => {}
            }
        }
        for (dof, role) in self.roles.iter().enumerate() {
            if let DofRole::Tie { master, coeff } = *role {
                let m = f.dof(master);
                *f.dof_mut(dof) = coeff * m;
            }
        }
        f
    }

    /// Free-dof values of a field.
    pub fn extract(&self, field: &ModeField) -> Vec<C64> {
        self.free_dofs.iter().map(|&d| field.dof(d)).collect()
    }

    /// Folds a functional given per nodal dof (antilinear in the test function)
    /// onto the free unknowns.
    pub fn restrict(&self, full: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n_free()];
        for (dof, val) in full.iter().enumerate() {
            if let Some((i, c)) = self.dof_map(dof) {
                out[i] += c.conj() * val;
            }
        }
        out
    }
}

/// Essential conditions for mode `k` in the space of `kind`.
///
/// Wall edges must be axis-aligned. On the axis the conditions follow the
/// regularity of Fourier coefficients of smooth fields: `k = 0` fixes
/// `u_r = u_θ = 0`, `|k| = 1` fixes `u_z = 0` and ties `u_θ = i·sign(k)·u_r`,
/// `|k| ≥ 2` fixes all three components.
pub fn build_constraints(mesh: &TriangleMesh, k: i32, kind: SpaceKind) -> Result<ConstraintSet> {
    let nv = mesh.n_vertices();
    let mut zero = vec![[false; 3]; nv];
    let mut tie = vec![false; nv];
    for e in &mesh.boundary {
        match e.tag {
            BoundaryTag::Axis => {
                for &v in &e.v {
                    match k.abs() {
                        0 => {
                            zero[v][R] = true;
                            zero[v][THETA] = true;
                        }
                        1 => {
                            zero[v][Z] = true;
                            tie[v] = true;
                        }
                        _ => zero[v] = [true; 3],
                    }
                }
            }
            BoundaryTag::Wall => {
                let p = mesh.vertices[e.v[0]];
                let q = mesh.vertices[e.v[1]];
                let (dr, dz) = ((q[0] - p[0]).abs(), (q[1] - p[1]).abs());
                let len = dr.hypot(dz);
                let (tangent, normal) = if dr <= 1e-12 * len {
                    (Z, R)
                } else if dz <= 1e-12 * len {
                    (R, Z)
                } else {
                    return Err(Error::Unsupported(format!(
                        "wall edge {}-{} is not aligned with the r or z axis",
                        e.v[0], e.v[1]
                    )));
                };
                for &v in &e.v {
                    match kind {
                        SpaceKind::Electric => {
                            zero[v][THETA] = true;
                            zero[v][tangent] = true;
                        }
                        SpaceKind::Magnetic => zero[v][normal] = true,
                    }
                }
            }
        }
    }
    let sign = if k >= 0 { 1.0 } else { -1.0 };
    let tie_coeff = C64::new(0.0, sign);
    let mut roles = vec![DofRole::Zero; 3 * nv];
    let mut free_dofs = Vec::new();
    for v in 0..nv {
        if tie[v] && (zero[v][R] || zero[v][THETA]) {
            zero[v][R] = true;
            zero[v][THETA] = true;
            tie[v] = false;
        }
        for c in 0..3 {
            let dof = 3 * v + c;
            if zero[v][c] {
                roles[dof] = DofRole::Zero;
            } else if c == THETA && tie[v] {
                roles[dof] = DofRole::Tie {
                    master: 3 * v + R,
                    coeff: tie_coeff,
                };
            } else {
                roles[dof] = DofRole::Free(free_dofs.len());
                free_dofs.push(dof);
            }
        }
    }
    Ok(ConstraintSet {
        k,
        kind,
        roles,
        free_dofs,
    })
}

/// Field carrying the prescribed trace `g` at the zero-constrained dofs and
/// vanishing elsewhere.
pub fn lift_boundary(
    mesh: &TriangleMesh,
    cons: &ConstraintSet,
    g: impl Fn(f64, f64) -> Vec3,
) -> Result<ModeField> {
    let mut field = ModeField::zeros(cons.k, mesh.n_vertices());
    for v in 0..mesh.n_vertices() {
        let dofs: Vec<usize> = (0..3)
            .map(|c| 3 * v + c)
            .filter(|&d| cons.roles[d] == DofRole::Zero)
            .collect();
        if dofs.is_empty() {
            continue;
        }
        let [r, z] = mesh.vertices[v];
        let val = g(r, z);
        for d in dofs {
            let x = val[d % 3];
            if !x.re.is_finite() || !x.im.is_finite() {
                return Err(Error::NonFinite(format!(
                    "boundary trace at vertex {v} ({r}, {z})"
                )));
            }
            *field.dof_mut(d) = x;
        }
    }
    Ok(field)
}
