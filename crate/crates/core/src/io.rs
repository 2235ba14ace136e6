//! Run configuration, built-in right-hand sides, and legacy VTK / CSV writers.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{ModeField, SpaceKind, Vec3};
use crate::mesh::{gen_lshape, gen_rectangle, CornerDescriptor, LShape, TriangleMesh};
use crate::solver::Data3d;

/// `printf("%.17g")`.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    const P: i32 = 17;
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= P {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => fmt_g17(*x),
                    Cell::Text(t) => t.clone(),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn write_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, table.to_csv())?;
    Ok(())
}

/// Reads a CSV written by [`write_csv`]; cells that parse as numbers become numbers.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Table> {
    let file = fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(l) => l?.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>(),
        None => return Err(Error::Parse { line: 1, msg: "empty CSV".into() }),
    };
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<Cell> = line
            .split(',')
            .map(|s| match s.trim().parse::<f64>() {
                Ok(x) => Cell::Num(x),
                Err(_) => Cell::Text(s.trim().to_string()),
            })
            .collect();
        if row.len() != table.header.len() {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("expected {} cells, found {}", table.header.len(), row.len()),
            });
        }
        table.rows.push(row);
    }
    Ok(table)
}

const COMPONENTS: [&str; 3] = ["r", "theta", "z"];

fn check_names<'a>(names: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if n.is_empty() || n.contains(char::is_whitespace) {
            return Err(Error::InvalidInput(format!("invalid field name '{n}'")));
        }
        if !seen.insert(n) {
            return Err(Error::InvalidInput(format!("duplicate field name '{n}'")));
        }
    }
    Ok(())
}

fn scalar_block(out: &mut String, name: &str, values: impl Iterator<Item = f64>) {
    let _ = writeln!(out, "SCALARS {name} double 1");
    out.push_str("LOOKUP_TABLE default\n");
    for v in values {
        out.push_str(&fmt_g17(v));
        out.push('\n');
    }
}

fn complex_blocks(out: &mut String, name: &str, values: &[Vec3]) {
    for (c, comp) in COMPONENTS.iter().enumerate() {
        scalar_block(out, &format!("{name}_{comp}_re"), values.iter().map(|v| v[c].re));
        scalar_block(out, &format!("{name}_{comp}_im"), values.iter().map(|v| v[c].im));
    }
}

/// Legacy ASCII unstructured grid of the meridian mesh (`x = r`, `y = z`),
/// with nodal complex fields split into `<field>_<r|theta|z>_<re|im>` arrays
/// and optional per-triangle fields.
pub fn vtk_string(mesh: &TriangleMesh, point_fields: &[(&str, &ModeField)], cell_fields: &[(&str, &[Vec3])]) -> Result<String> {
    check_names(point_fields.iter().map(|f| f.0).chain(cell_fields.iter().map(|f| f.0)))?;
    for (name, f) in point_fields {
        if f.values.len() != mesh.n_vertices() {
            return Err(Error::InvalidInput(format!("field '{name}' is not nodal on this mesh")));
        }
    }
    for (name, f) in cell_fields {
        if f.len() != mesh.n_triangles() {
            return Err(Error::InvalidInput(format!("field '{name}' is not per-cell on this mesh")));
        }
    }
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\naxifem meridian mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.n_vertices());
    for p in &mesh.vertices {
        let _ = writeln!(s, "{} {} 0", fmt_g17(p[0]), fmt_g17(p[1]));
    }
    let nt = mesh.n_triangles();
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    if !point_fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.n_vertices());
        for (name, f) in point_fields {
            complex_blocks(&mut s, name, &f.values);
        }
    }
    if !cell_fields.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nt}");
        for (name, f) in cell_fields {
            complex_blocks(&mut s, name, f);
        }
    }
    Ok(s)
}

pub fn write_vtk(
    mesh: &TriangleMesh,
    point_fields: &[(&str, &ModeField)],
    cell_fields: &[(&str, &[Vec3])],
    path: impl AsRef<Path>,
) -> Result<()> {
    let s = vtk_string(mesh, point_fields, cell_fields)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(s.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Revolved grid: the meridian mesh swept over `T` angles into wedge cells,
/// with the real part of `samples[j]` (cylindrical components at `θ_j`)
/// converted to Cartesian vectors.
pub fn write_volume_vtk(mesh: &TriangleMesh, name: &str, samples: &[Vec<Vec3>], path: impl AsRef<Path>) -> Result<()> {
    check_names(std::iter::once(name))?;
    let t = samples.len();
    if t < 3 {
        return Err(Error::InvalidInput("a revolved grid needs at least 3 angular samples".into()));
    }
    let nv = mesh.n_vertices();
    if samples.iter().any(|s| s.len() != nv) {
        return Err(Error::InvalidInput("angular samples are not nodal on this mesh".into()));
    }
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\naxifem revolved field\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", nv * t);
    let thetas: Vec<f64> = (0..t).map(|j| 2.0 * PI * j as f64 / t as f64).collect();
    for th in &thetas {
        let (sn, cs) = th.sin_cos();
        for p in &mesh.vertices {
            let _ = writeln!(s, "{} {} {}", fmt_g17(p[0] * cs), fmt_g17(p[0] * sn), fmt_g17(p[1]));
        }
    }
    let nc = mesh.n_triangles() * t;
    let _ = writeln!(s, "CELLS {nc} {}", 7 * nc);
    for j in 0..t {
        let (a, b) = (j * nv, ((j + 1) % t) * nv);
        for tri in &mesh.triangles {
            let _ = writeln!(
                s,
                "6 {} {} {} {} {} {}",
                a + tri[0],
                a + tri[1],
                a + tri[2],
                b + tri[0],
                b + tri[1],
                b + tri[2]
            );
        }
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        s.push_str("13\n");
    }
    let _ = writeln!(s, "POINT_DATA {}", nv * t);
    let _ = writeln!(s, "VECTORS {name} double");
    for (th, samp) in thetas.iter().zip(samples) {
        let (sn, cs) = th.sin_cos();
        for v in samp {
            let (ur, ut, uz) = (v[0].re, v[1].re, v[2].re);
            let _ = writeln!(s, "{} {} {}", fmt_g17(ur * cs - ut * sn), fmt_g17(ur * sn + ut * cs), fmt_g17(uz));
        }
    }
    fs::write(path, s)?;
    Ok(())
}

/// Meridian domain of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Rectangle { rmin: f64, rmax: f64, zmin: f64, zmax: f64 },
    LShape(LShape),
}

impl Domain {
    pub fn mesh(&self, h: f64) -> Result<(TriangleMesh, Option<CornerDescriptor>)> {
        match *self {
            Domain::Rectangle { rmin, rmax, zmin, zmax } => Ok((gen_rectangle(rmin, rmax, zmin, zmax, h)?, None)),
            Domain::LShape(s) => gen_lshape(s, h).map(|(m, c)| (m, Some(c))),
        }
    }
}

/// Right-hand side of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum RhsSource {
    Builtin(String),
    /// CSV on a tensor grid with columns `r,theta,z,f_r,f_theta,f_z,g`.
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: Domain,
    pub h: f64,
    pub modes: usize,
    pub kind: SpaceKind,
    pub rhs: RhsSource,
    pub tol: f64,
    pub theta_samples: Option<usize>,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: Domain::LShape(LShape::default()),
            h: 0.1,
            modes: 5,
            kind: SpaceKind::Magnetic,
            rhs: RhsSource::Builtin("band3".into()),
            tol: crate::linalg::DEFAULT_TOL,
            theta_samples: None,
            output: PathBuf::from("out"),
        }
    }
}

pub const CONFIG_KEYS: [&str; 16] = [
    "domain", "h", "modes", "field", "rhs", "tol", "theta_samples", "output", "rmin", "rmax", "zmin", "zmax", "r_c",
    "z_c", "r_max", "z_max",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidInput(format!("invalid value '{v}' for '{key}'")))
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            let k = k.trim().to_string();
            if !CONFIG_KEYS.contains(&k.as_str()) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("unknown key '{k}'"),
                });
            }
            map.insert(k, v.trim().to_string());
        }
        let mut cfg = Self::default();
        cfg.apply(&map)?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Overrides fields from key-value pairs (the same keys as the file format).
    pub fn apply(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        if let Some(k) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::InvalidInput(format!("unknown configuration key '{k}'")));
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let domain = get("domain").unwrap_or(match self.domain {
            Domain::Rectangle { .. } => "rectangle",
            Domain::LShape(_) => "lshape",
        });
        self.domain = match domain {
            "rectangle" => {
                let (mut rmin, mut rmax, mut zmin, mut zmax) = match self.domain {
                    Domain::Rectangle { rmin, rmax, zmin, zmax } => (rmin, rmax, zmin, zmax),
                    _ => (0.0, 1.0, 0.0, 1.0),
                };
                if let Some(v) = get("rmin") {
                    rmin = parse_num("rmin", v)?;
                }
                if let Some(v) = get("rmax") {
                    rmax = parse_num("rmax", v)?;
                }
                if let Some(v) = get("zmin") {
                    zmin = parse_num("zmin", v)?;
                }
                if let Some(v) = get("zmax") {
                    zmax = parse_num("zmax", v)?;
                }
                Domain::Rectangle { rmin, rmax, zmin, zmax }
            }
            "lshape" => {
                let mut s = match self.domain {
                    Domain::LShape(s) => s,
                    _ => LShape::default(),
                };
                if let Some(v) = get("r_c") {
                    s.r_c = parse_num("r_c", v)?;
                }
                if let Some(v) = get("z_c") {
                    s.z_c = parse_num("z_c", v)?;
                }
                if let Some(v) = get("r_max") {
                    s.r_max = parse_num("r_max", v)?;
                }
                if let Some(v) = get("z_max") {
                    s.z_max = parse_num("z_max", v)?;
                }
                Domain::LShape(s)
            }
            other => return Err(Error::InvalidInput(format!("unknown domain '{other}'"))),
        };
        if let Some(v) = get("h") {
            self.h = parse_num("h", v)?;
        }
        if let Some(v) = get("modes") {
            self.modes = parse_num("modes", v)?;
        }
        if let Some(v) = get("field") {
            self.kind = v.parse()?;
        }
        if let Some(v) = get("rhs") {
            self.rhs = match v.strip_prefix("table:") {
                Some(p) => RhsSource::Table(PathBuf::from(p)),
                None => RhsSource::Builtin(v.to_string()),
            };
        }
        if let Some(v) = get("tol") {
            self.tol = parse_num("tol", v)?;
        }
        if let Some(v) = get("theta_samples") {
            self.theta_samples = Some(parse_num("theta_samples", v)?);
        }
        if let Some(v) = get("output") {
            self.output = PathBuf::from(v);
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidInput(format!("h must be positive, got {}", self.h)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidInput(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        Ok(())
    }

    /// Angular sample count, defaulting to the smallest alias-free value.
    pub fn theta_samples(&self) -> usize {
        self.theta_samples.unwrap_or(4 * self.modes + 1)
    }

    pub fn rhs_source(&self) -> Result<Arc<Data3d>> {
        match &self.rhs {
            RhsSource::Builtin(name) => builtin_rhs(name),
            RhsSource::Table(path) => tabulated_rhs(path),
        }
    }
}

pub const BUILTIN_RHS: [&str; 3] = ["azimuthal", "transverse", "band3"];

/// Named real data `(r, θ, z) ↦ ((f_r, f_θ, f_z), g)`.
///
/// `azimuthal`: a ring source `r e_θ`, mode 0 only. `transverse`: the constant
/// Cartesian field `e_x`, modes ±1. `band3`: a trigonometric polynomial of
/// degree 3 in θ.
pub fn builtin_rhs(name: &str) -> Result<Arc<Data3d>> {
    Ok(match name {
        "azimuthal" => Arc::new(|r, _th, _z| ([0.0, r, 0.0], 0.0)),
        "transverse" => Arc::new(|_r, th: f64, _z| ([th.cos(), -th.sin(), 0.0], 0.0)),
        "band3" => Arc::new(|r, th: f64, z| {
            (
                [
                    r * th.cos() + r * r * (2.0 * th).sin(),
                    z * th.sin() + r * (3.0 * th).cos(),
                    1.0 + r * z * th.cos() + r * r * (3.0 * th).sin(),
                ],
                0.0,
            )
        }),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown right-hand side '{other}' (built-ins: {})",
                BUILTIN_RHS.join(", ")
            )))
        }
    })
}

/// Trilinear interpolation of tabulated data, periodic in θ and clamped in `r`, `z`.
pub fn tabulated_rhs(path: &Path) -> Result<Arc<Data3d>> {
    let table = read_csv(path)?;
    let cols = ["r", "theta", "z", "f_r", "f_theta", "f_z", "g"];
    let mut data: Vec<[f64; 7]> = Vec::with_capacity(table.rows.len());
    let idx: Vec<usize> = cols
        .iter()
        .map(|c| {
            table
                .header
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| Error::InvalidInput(format!("tabulated data lacks column '{c}'")))
        })
        .collect::<Result<_>>()?;
    for (i, row) in table.rows.iter().enumerate() {
        let mut v = [0.0; 7];
        for (j, &c) in idx.iter().enumerate() {
            v[j] = match &row[c] {
                Cell::Num(x) if x.is_finite() => *x,
                _ => {
                    return Err(Error::Parse {
                        line: i + 2,
                        msg: format!("non-numeric or non-finite '{}'", cols[j]),
                    })
                }
            };
        }
        data.push(v);
    }
    let axis = |c: usize| {
        let mut v: Vec<f64> = data.iter().map(|d| d[c]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (rs, ts, zs) = (axis(0), axis(1), axis(2));
    if rs.len() * ts.len() * zs.len() != data.len() || rs.len() < 2 || zs.len() < 2 || ts.is_empty() {
        return Err(Error::InvalidInput("tabulated data must fill a tensor grid with at least 2 r and z values".into()));
    }
    let mut grid = vec![[0.0; 4]; data.len()];
    let pos = |v: &[f64], x: f64| v.binary_search_by(|a| a.total_cmp(&x)).unwrap();
    for d in &data {
        let (i, j, k) = (pos(&rs, d[0]), pos(&ts, d[1]), pos(&zs, d[2]));
        grid[(i * ts.len() + j) * zs.len() + k] = [d[3], d[4], d[5], d[6]];
    }
    let bracket = |v: &[f64], x: f64| -> (usize, f64) {
        let x = x.clamp(v[0], v[v.len() - 1]);
        let i = match v.binary_search_by(|a| a.total_cmp(&x)) {
            Ok(i) => i.min(v.len() - 2),
            Err(i) => i.saturating_sub(1).min(v.len() - 2),
        };
        (i, (x - v[i]) / (v[i + 1] - v[i]))
    };
    Ok(Arc::new(move |r, th, z| {
        let (i, fr) = bracket(&rs, r);
        let (k, fz) = bracket(&zs, z);
        let nt = ts.len();
        let th = th.rem_euclid(2.0 * PI);
        // periodic bracket in θ
        let (j0, j1, ft) = if nt == 1 {
            (0, 0, 0.0)
        } else {
            let j = ts.iter().rposition(|&t| t <= th).unwrap_or(nt - 1);
            let jn = (j + 1) % nt;
            let (t0, mut t1) = (ts[j], ts[jn]);
            if jn == 0 {
                t1 += 2.0 * PI;
            }
            let mut x = th;
            if x < t0 {
                x += 2.0 * PI;
            }
            (j, jn, (x - t0) / (t1 - t0))
        };
        let at = |i: usize, j: usize, k: usize| grid[(i * nt + j) * zs.len() + k];
        let mut out = [0.0; 4];
        for (di, wi) in [(0, 1.0 - fr), (1, fr)] {
            for (jj, wj) in [(j0, 1.0 - ft), (j1, ft)] {
                for (dk, wk) in [(0, 1.0 - fz), (1, fz)] {
                    let v = at(i + di, jj, k + dk);
                    for c in 0..4 {
                        out[c] += wi * wj * wk * v[c];
                    }
                }
            }
        }
        ([out[0], out[1], out[2]], out[3])
    }))
}
