//! Triangulations of the meridian half-plane.
//!
//! A mesh covers the meridian section ω of an axisymmetric body in the
//! `(r, z)` plane. Boundary edges are tagged [`BoundaryTag::Axis`] when they
//! lie on the symmetry axis `r = 0` and [`BoundaryTag::Wall`] otherwise.
//! Reentrant wall corners are reported as [`CornerDescriptor`]s, which carry
//! the local polar frame used by the singular principal parts.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Tolerance on the interior angle when deciding reentrancy.
pub const ANGLE_TOL: f64 = 1e-6;

/// Radial coordinates below this value are snapped to the axis by the generators.
pub const AXIS_SNAP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Axis,
    Wall,
}

impl BoundaryTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Axis => "axis",
            BoundaryTag::Wall => "wall",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub tag: BoundaryTag,
}

/// Conforming triangulation of ω. Vertices are `[r, z]` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEdge>,
}

/// Reentrant corner of the meridian domain and its local polar frame.
///
/// `phi0` is the direction (measured counterclockwise from `e_r`) of the wall
/// edge from which a counterclockwise sweep enters the domain, so that
/// `φ ∈ [0, interior_angle]` inside ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerDescriptor {
    pub corner_vertex: usize,
    pub position: [f64; 2],
    pub interior_angle: f64,
    pub alpha: f64,
    pub phi0: f64,
    pub a: f64,
}

impl CornerDescriptor {
    pub fn is_reentrant(&self) -> bool {
        self.interior_angle > PI
    }

    /// Local polar coordinates `(ρ, φ)` of `(r, z)`.
    ///
    /// The branch cut sits in the middle of the exterior wedge, so points
    /// slightly outside either incident edge get a small negative angle or an
    /// angle slightly above `interior_angle`.
    pub fn local_polar(&self, r: f64, z: f64) -> (f64, f64) {
        let dr = r - self.position[0];
        let dz = z - self.position[1];
        let rho = dr.hypot(dz);
        let mut phi = (dz.atan2(dr) - self.phi0).rem_euclid(TAU);
        let cut = self.interior_angle + 0.5 * (TAU - self.interior_angle);
        if phi > cut {
            phi -= TAU;
        }
        (rho, phi)
    }
}

/// Conical vertex on the symmetry axis.
///
/// The local angle φ of the conical principal part is measured from the
/// `+z` direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicalDescriptor {
    pub z: f64,
    pub aperture: f64,
}

impl ConicalDescriptor {
    pub fn new(z: f64, aperture: f64) -> Result<Self> {
        if !(aperture > 0.0 && aperture < PI) || !z.is_finite() {
            return Err(Error::InvalidInput(format!(
                "conical aperture must lie in (0, pi), got {aperture}"
            )));
        }
        Ok(Self { z, aperture })
    }

    pub fn local_polar(&self, r: f64, z: f64) -> (f64, f64) {
        let dz = z - self.z;
        (r.hypot(dz), r.atan2(dz))
    }
}

fn signed_area(p: [f64; 2], q: [f64; 2], s: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (s[1] - p[1]) - (s[0] - p[0]) * (q[1] - p[1]))
}

impl TriangleMesh {
    /// Builds and validates a mesh from raw arrays.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let mesh = Self {
            vertices,
            triangles,
            boundary,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Builds a mesh from vertices and triangles, deriving the tagged boundary.
    pub fn from_triangles(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let boundary = derive_boundary(&vertices, &triangles)?;
        Self::new(vertices, triangles, boundary)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [p, q, s] = self.triangle_points(t);
        signed_area(p, q, s)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    /// Longest edge length.
    pub fn h(&self) -> f64 {
        let mut h: f64 = 0.0;
        for t in &self.triangles {
            for e in 0..3 {
                let p = self.vertices[t[e]];
                let q = self.vertices[t[(e + 1) % 3]];
                h = h.max((q[0] - p[0]).hypot(q[1] - p[1]));
            }
        }
        h
    }

    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.vertices.iter().enumerate() {
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(Error::Mesh(format!("vertex {i} has non-finite coordinates")));
            }
            if v[0] < 0.0 {
                return Err(Error::Mesh(format!("vertex {i} has r = {} < 0", v[0])));
            }
        }
        let nv = self.vertices.len();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Mesh(format!("triangle {t} repeats a vertex")));
            }
            if self.area(t) <= 0.0 {
                return Err(Error::Mesh(format!(
                    "triangle {t} is degenerate or clockwise (area {})",
                    self.area(t)
                )));
            }
            for e in 0..3 {
                let key = (tri[e], tri[(e + 1) % 3]);
                if let Some(other) = directed.insert(key, t) {
                    return Err(Error::Mesh(format!(
                        "triangles {other} and {t} overlap along edge {}-{}",
                        key.0, key.1
                    )));
                }
            }
        }
        let mut expected: Vec<(usize, usize)> = directed
            .keys()
            .filter(|(a, b)| !directed.contains_key(&(*b, *a)))
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        expected.sort_unstable();
        let mut given: Vec<(usize, usize)> = Vec::with_capacity(self.boundary.len());
        for e in &self.boundary {
            let [a, b] = e.v;
            if a >= nv || b >= nv {
                return Err(Error::Mesh("boundary edge references a missing vertex".into()));
            }
            if e.tag == BoundaryTag::Axis && (self.vertices[a][0] != 0.0 || self.vertices[b][0] != 0.0)
            {
                return Err(Error::Mesh(format!("axis edge {a}-{b} does not lie on r = 0")));
            }
            given.push((a.min(b), a.max(b)));
        }
        given.sort_unstable();
        if given != expected {
            return Err(Error::Mesh(
                "boundary edge list does not match the triangulation boundary".into(),
            ));
        }
        boundary_loop(&directed_boundary(&self.triangles)?)?;
        Ok(())
    }

    /// Finds the triangle containing `(r, z)` and the barycentric coordinates there.
    pub fn locate(&self, r: f64, z: f64) -> Result<(usize, [f64; 3])> {
        const EPS: f64 = 1e-12;
        for t in 0..self.n_triangles() {
            let [p, q, s] = self.triangle_points(t);
            let area = signed_area(p, q, s);
            let l0 = signed_area([r, z], q, s) / area;
            let l1 = signed_area(p, [r, z], s) / area;
            let l2 = 1.0 - l0 - l1;
            if l0 >= -EPS && l1 >= -EPS && l2 >= -EPS {
                return Ok((t, [l0, l1, l2]));
            }
        }
        Err(Error::OutsideMesh { r, z })
    }

    /// Outward unit normal of a boundary edge, `[n_r, n_z]`.
    pub fn edge_normal(&self, edge: &BoundaryEdge) -> [f64; 2] {
        let [a, b] = self.oriented(edge.v);
        let p = self.vertices[a];
        let q = self.vertices[b];
        let (dr, dz) = (q[0] - p[0], q[1] - p[1]);
        let len = dr.hypot(dz);
        [dz / len, -dr / len]
    }

    /// Returns the edge endpoints ordered so that the domain lies on the left.
    pub fn oriented(&self, v: [usize; 2]) -> [usize; 2] {
        for tri in &self.triangles {
            for e in 0..3 {
                if tri[e] == v[0] && tri[(e + 1) % 3] == v[1] {
                    return v;
                }
                if tri[e] == v[1] && tri[(e + 1) % 3] == v[0] {
                    return [v[1], v[0]];
                }
            }
        }
        v
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [p, q, s] = self.triangle_points(t);
        [(p[0] + q[0] + s[0]) / 3.0, (p[1] + q[1] + s[1]) / 3.0]
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_ascii())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_ascii(BufReader::new(file))
    }

    /// Serializes to the `axmesh 1` text format.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        out.push_str("axmesh 1\n");
        let _ = writeln!(out, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{:?} {:?}", v[0], v[1]);
        }
        let _ = writeln!(out, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(out, "boundary {}", self.boundary.len());
        for e in &self.boundary {
            let _ = writeln!(out, "{} {} {}", e.v[0], e.v[1], e.tag.as_str());
        }
        out
    }

    pub fn write_ascii<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_ascii().as_bytes())?;
        Ok(())
    }

    pub fn read_ascii<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            lines.push((i + 1, trimmed.to_string()));
        }
        let mut it = lines.into_iter();
        let mut next = |what: &str| {
            it.next().ok_or(Error::Parse {
                line: 0,
                msg: format!("unexpected end of file, expected {what}"),
            })
        };

        let (ln, header) = next("header")?;
        if header.split_whitespace().collect::<Vec<_>>() != ["axmesh", "1"] {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected 'axmesh 1', found '{header}'"),
            });
        }

        let count = |ln: usize, line: &str, key: &str| -> Result<usize> {
            let parts: Vec<_> = line.split_whitespace().collect();
            if parts.len() != 2 || parts[0] != key {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected '{key} <count>'"),
                });
            }
            parts[1].parse().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("bad {key} count '{}'", parts[1]),
            })
        };
        fn fields<T: std::str::FromStr>(ln: usize, line: &str, n: usize) -> Result<Vec<T>> {
            let parts: Vec<_> = line.split_whitespace().collect();
            if parts.len() != n {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected {n} fields, found {}", parts.len()),
                });
            }
            parts
                .iter()
                .map(|p| {
                    p.parse::<T>().map_err(|_| Error::Parse {
                        line: ln,
                        msg: format!("cannot parse '{p}'"),
                    })
                })
                .collect()
        }

        let (ln, line) = next("vertices")?;
        let nv = count(ln, &line, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, line) = next("vertex")?;
            let v: Vec<f64> = fields(ln, &line, 2)?;
            vertices.push([v[0], v[1]]);
        }

        let (ln, line) = next("triangles")?;
        let nt = count(ln, &line, "triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, line) = next("triangle")?;
            let t: Vec<usize> = fields(ln, &line, 3)?;
            triangles.push([t[0], t[1], t[2]]);
        }

        let (ln, line) = next("boundary")?;
        let nb = count(ln, &line, "boundary")?;
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (ln, line) = next("boundary edge")?;
            let parts: Vec<_> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    line: ln,
                    msg: "expected 'i j tag'".into(),
                });
            }
            let idx: Vec<usize> = fields(ln, &parts[..2].join(" "), 2)?;
            let tag = match parts[2] {
                "axis" => BoundaryTag::Axis,
                "wall" => BoundaryTag::Wall,
                other => {
                    return Err(Error::Parse {
                        line: ln,
                        msg: format!("unknown boundary tag '{other}'"),
                    })
                }
            };
            boundary.push(BoundaryEdge {
                v: [idx[0], idx[1]],
                tag,
            });
        }
        if let Some((ln, _)) = next("end").ok() {
            return Err(Error::Parse {
                line: ln,
                msg: "trailing content after boundary block".into(),
            });
        }
        Self::new(vertices, triangles, boundary)
    }
}

/// Directed boundary edges (domain on the left), i.e. triangle edges without a twin.
fn directed_boundary(triangles: &[[usize; 3]]) -> Result<Vec<[usize; 2]>> {
    let mut directed: HashMap<(usize, usize), ()> = HashMap::new();
    for tri in triangles {
        for e in 0..3 {
            directed.insert((tri[e], tri[(e + 1) % 3]), ());
        }
    }
    let mut edges: Vec<[usize; 2]> = directed
        .keys()
        .filter(|(a, b)| !directed.contains_key(&(*b, *a)))
        .map(|&(a, b)| [a, b])
        .collect();
    edges.sort_unstable();
    if edges.is_empty() {
        return Err(Error::Mesh("mesh has no boundary".into()));
    }
    Ok(edges)
}

/// Orders directed boundary edges into a single closed loop.
fn boundary_loop(edges: &[[usize; 2]]) -> Result<Vec<[usize; 2]>> {
    let mut outgoing: HashMap<usize, usize> = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        if outgoing.insert(e[0], i).is_some() {
            return Err(Error::Mesh(format!(
                "boundary is not a simple loop at vertex {}",
                e[0]
            )));
        }
    }
    let mut ordered = Vec::with_capacity(edges.len());
    let start = edges[0];
    let mut cur = start;
    loop {
        ordered.push(cur);
        let Some(&next) = outgoing.get(&cur[1]) else {
            return Err(Error::Mesh(format!("open boundary at vertex {}", cur[1])));
        };
        cur = edges[next];
        if cur == start {
            break;
        }
        if ordered.len() > edges.len() {
            return Err(Error::Mesh("boundary loop does not close".into()));
        }
    }
    if ordered.len() != edges.len() {
        return Err(Error::Mesh(format!(
            "boundary splits into several loops ({} of {} edges in the first)",
            ordered.len(),
            edges.len()
        )));
    }
    Ok(ordered)
}

fn tag_for(vertices: &[[f64; 2]], e: [usize; 2]) -> BoundaryTag {
    if vertices[e[0]][0] == 0.0 && vertices[e[1]][0] == 0.0 {
        BoundaryTag::Axis
    } else {
        BoundaryTag::Wall
    }
}

fn derive_boundary(vertices: &[[f64; 2]], triangles: &[[usize; 3]]) -> Result<Vec<BoundaryEdge>> {
    let edges = boundary_loop(&directed_boundary(triangles)?)?;
    Ok(edges
        .into_iter()
        .map(|v| BoundaryEdge {
            v,
            tag: tag_for(vertices, v),
        })
        .collect())
}

/// Re-tags the boundary (axis vs wall) and detects reentrant wall corners.
pub fn classify_boundary(mesh: &TriangleMesh) -> Result<(TriangleMesh, Vec<CornerDescriptor>)> {
    let edges = boundary_loop(&directed_boundary(&mesh.triangles)?)?;
    let tagged: Vec<BoundaryEdge> = edges
        .iter()
        .map(|&v| BoundaryEdge {
            v,
            tag: tag_for(&mesh.vertices, v),
        })
        .collect();

    let n = tagged.len();
    let mut corners = Vec::new();
    for i in 0..n {
        let incoming = tagged[(i + n - 1) % n];
        let outgoing = tagged[i];
        if incoming.tag != BoundaryTag::Wall || outgoing.tag != BoundaryTag::Wall {
            continue;
        }
        let v = outgoing.v[0];
        let p = mesh.vertices[incoming.v[0]];
        let c = mesh.vertices[v];
        let q = mesh.vertices[outgoing.v[1]];
        let d_in = [c[0] - p[0], c[1] - p[1]];
        let d_out = [q[0] - c[0], q[1] - c[1]];
        let cross = d_in[0] * d_out[1] - d_in[1] * d_out[0];
        let dot = d_in[0] * d_out[0] + d_in[1] * d_out[1];
        let interior = PI - cross.atan2(dot);
        let excess = interior - PI;
        if (excess - ANGLE_TOL).abs() < 0.5 * ANGLE_TOL {
            return Err(Error::Mesh(format!(
                "interior angle at vertex {v} is within tolerance of the reentrancy threshold"
            )));
        }
        if excess > ANGLE_TOL {
            corners.push(CornerDescriptor {
                corner_vertex: v,
                position: c,
                interior_angle: interior,
                alpha: PI / interior,
                phi0: d_out[1].atan2(d_out[0]).rem_euclid(TAU),
                a: c[0],
            });
        }
    }
    let out = TriangleMesh {
        vertices: mesh.vertices.clone(),
        triangles: mesh.triangles.clone(),
        boundary: tagged,
    };
    Ok((out, corners))
}

fn grid_lines(a: f64, b: f64, h: f64) -> Vec<f64> {
    let n = (((b - a) / h) - 1e-9).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| {
            if i == n {
                b
            } else {
                let x = a + (b - a) * i as f64 / n as f64;
                if x.abs() < AXIS_SNAP {
                    0.0
                } else {
                    x
                }
            }
        })
        .collect()
}

fn merge_lines(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    a.pop();
    a.extend(b);
    a
}

/// Structured triangulation of the cells selected by `keep(r_mid, z_mid)`.
fn grid_mesh(rs: &[f64], zs: &[f64], keep: impl Fn(f64, f64) -> bool) -> Result<TriangleMesh> {
    let nr = rs.len();
    let nz = zs.len();
    let mut index = vec![usize::MAX; nr * nz];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut vid = |i: usize, j: usize, vertices: &mut Vec<[f64; 2]>| {
        let slot = &mut index[j * nr + i];
        if *slot == usize::MAX {
            *slot = vertices.len();
            vertices.push([rs[i], zs[j]]);
        }
        *slot
    };
    for j in 0..nz - 1 {
        for i in 0..nr - 1 {
            let rm = 0.5 * (rs[i] + rs[i + 1]);
            let zm = 0.5 * (zs[j] + zs[j + 1]);
            if !keep(rm, zm) {
                continue;
            }
            let v00 = vid(i, j, &mut vertices);
            let v10 = vid(i + 1, j, &mut vertices);
            let v11 = vid(i + 1, j + 1, &mut vertices);
            let v01 = vid(i, j + 1, &mut vertices);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    TriangleMesh::from_triangles(vertices, triangles)
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("mesh size must be positive, got {h}")));
    }
    Ok(())
}

/// Structured triangulation of `[rmin, rmax] × [zmin, zmax]`.
pub fn gen_rectangle(rmin: f64, rmax: f64, zmin: f64, zmax: f64, h: f64) -> Result<TriangleMesh> {
    check_h(h)?;
    if !(rmin >= 0.0 && rmin < rmax && zmin < zmax) {
        return Err(Error::InvalidInput(format!(
            "rectangle bounds must satisfy 0 <= rmin < rmax and zmin < zmax, got r in [{rmin}, {rmax}], z in [{zmin}, {zmax}]"
        )));
    }
    gen_rectangle_unchecked(rmin, rmax, zmin, zmax, h)
}

fn gen_rectangle_unchecked(rmin: f64, rmax: f64, zmin: f64, zmax: f64, h: f64) -> Result<TriangleMesh> {
    let rs = grid_lines(rmin, rmax, h);
    let zs = grid_lines(zmin, zmax, h);
    grid_mesh(&rs, &zs, |_, _| true)
}

/// Parameters of the top-hat meridian section: the crown `[0, r_c] × [0, z_max]`
/// joined to the brim `[0, r_max] × [0, z_c]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LShape {
    pub r_c: f64,
    pub z_c: f64,
    pub r_max: f64,
    pub z_max: f64,
}

impl Default for LShape {
    fn default() -> Self {
        Self {
            r_c: 0.5,
            z_c: 0.5,
            r_max: 1.0,
            z_max: 1.0,
        }
    }
}

/// L-shaped meridian section with a single reentrant corner at `(r_c, z_c)`.
pub fn gen_lshape(shape: LShape, h: f64) -> Result<(TriangleMesh, CornerDescriptor)> {
    check_h(h)?;
    let LShape {
        r_c,
        z_c,
        r_max,
        z_max,
    } = shape;
    if !(r_c > 0.0) {
        return Err(Error::InvalidInput(format!(
            "reentrant corner must lie off the axis, got r_c = {r_c}"
        )));
    }
    if !(r_c < r_max && z_c > 0.0 && z_c < z_max) {
        return Err(Error::InvalidInput(
            "corner must lie strictly inside the bounding box".into(),
        ));
    }
    let min_span = r_c.min(r_max - r_c).min(z_c).min(z_max - z_c);
    if h > min_span {
        return Err(Error::InvalidInput(format!(
            "h = {h} is too large to resolve the corner (smallest span {min_span})"
        )));
    }
    let rs = merge_lines(grid_lines(0.0, r_c, h), grid_lines(r_c, r_max, h));
    let zs = merge_lines(grid_lines(0.0, z_c, h), grid_lines(z_c, z_max, h));
    let mesh = grid_mesh(&rs, &zs, |r, z| !(r > r_c && z > z_c))?;
    let (mesh, corners) = classify_boundary(&mesh)?;
    match corners.as_slice() {
        [c] => Ok((mesh, *c)),
        _ => Err(Error::Mesh(format!(
            "expected exactly one reentrant corner, found {}",
            corners.len()
        ))),
    }
}

/// Area of the polygon traced by the boundary loop.
pub fn boundary_polygon_area(mesh: &TriangleMesh) -> Result<f64> {
    let edges = boundary_loop(&directed_boundary(&mesh.triangles)?)?;
    let mut twice = 0.0;
    for [a, b] in edges {
        let p = mesh.vertices[a];
        let q = mesh.vertices[b];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    Ok(0.5 * twice)
}
