//! Mode-k differential operators, the sesquilinear form `a_k`, load
//! functionals, and the term-by-term split of `a_k` used to cross-check assembly.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{
    build_constraints, ConstraintSet, ElementGeom, ModeField, QuadPlan, QuadPoint, SpaceKind, C64, R,
    THETA, Vec3, Z, ZERO3,
};
use crate::linalg::HermitianSparse;
use crate::mesh::{BoundaryTag, TriangleMesh};

fn ik(k: i32) -> C64 {
    C64::new(0.0, k as f64)
}

/// Value and meridian derivatives of a three-component field at a point.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub val: Vec3,
    pub dr: Vec3,
    pub dz: Vec3,
}

pub fn curl_jet(k: i32, r: f64, j: &Jet) -> Vec3 {
    let ik = ik(k);
    [
        ik * j.val[Z] / r - j.dz[THETA],
        j.dz[R] - j.dr[Z],
        j.dr[THETA] + j.val[THETA] / r - ik * j.val[R] / r,
    ]
}

pub fn div_jet(k: i32, r: f64, j: &Jet) -> C64 {
    j.dr[R] + j.val[R] / r + ik(k) * j.val[THETA] / r + j.dz[Z]
}

pub fn grad_scalar(k: i32, r: f64, val: C64, dr: C64, dz: C64) -> Vec3 {
    [dr, ik(k) * val / r, dz]
}

/// Jet of a P1 field on one element.
pub fn p1_jet(values: &[Vec3], tri: [usize; 3], geom: &ElementGeom, lam: [f64; 3]) -> Jet {
    let mut j = Jet {
        val: ZERO3,
        dr: ZERO3,
        dz: ZERO3,
    };
    for i in 0..3 {
        let v = &values[tri[i]];
        for c in 0..3 {
            j.val[c] += v[c] * lam[i];
            j.dr[c] += v[c] * geom.grad[i][0];
            j.dz[c] += v[c] * geom.grad[i][1];
        }
    }
    j
}

fn locate_off_axis(mesh: &TriangleMesh, r: f64, z: f64) -> Result<(usize, [f64; 3], ElementGeom)> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!(
            "mode operators are not defined on the axis (r = {r})"
        )));
    }
    let (t, lam) = mesh.locate(r, z)?;
    Ok((t, lam, ElementGeom::new(mesh.triangle_points(t))))
}

pub fn eval_curl_k(mesh: &TriangleMesh, field: &ModeField, k: i32, r: f64, z: f64) -> Result<Vec3> {
    let (t, lam, geom) = locate_off_axis(mesh, r, z)?;
    Ok(curl_jet(k, r, &p1_jet(&field.values, mesh.triangles[t], &geom, lam)))
}

pub fn eval_div_k(mesh: &TriangleMesh, field: &ModeField, k: i32, r: f64, z: f64) -> Result<C64> {
    let (t, lam, geom) = locate_off_axis(mesh, r, z)?;
    Ok(div_jet(k, r, &p1_jet(&field.values, mesh.triangles[t], &geom, lam)))
}

/// Gradient of a scalar P1 field given by nodal values.
pub fn eval_grad_k(mesh: &TriangleMesh, w: &[C64], k: i32, r: f64, z: f64) -> Result<Vec3> {
    let (t, lam, geom) = locate_off_axis(mesh, r, z)?;
    let tri = mesh.triangles[t];
    let (mut val, mut dr, mut dz) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for i in 0..3 {
        val += w[tri[i]] * lam[i];
        dr += w[tri[i]] * geom.grad[i][0];
        dz += w[tri[i]] * geom.grad[i][1];
    }
    Ok(grad_scalar(k, r, val, dr, dz))
}

/// A field that can be sampled at element quadrature points, including its
/// mode-k curl and divergence.
pub trait FieldSource: Sync {
    fn value(&self, plan: &QuadPlan, elem: usize, q: &QuadPoint) -> Vec3;
    fn curl_div(&self, plan: &QuadPlan, k: i32, elem: usize, q: &QuadPoint) -> (Vec3, C64);
}

impl FieldSource for ModeField {
    fn value(&self, plan: &QuadPlan, elem: usize, q: &QuadPoint) -> Vec3 {
        self.eval_in(plan.triangles[elem], q.lam)
    }

    fn curl_div(&self, plan: &QuadPlan, k: i32, elem: usize, q: &QuadPoint) -> (Vec3, C64) {
        let j = p1_jet(&self.values, plan.triangles[elem], &plan.elements[elem], q.lam);
        (curl_jet(k, q.r, &j), div_jet(k, q.r, &j))
    }
}

/// Linear combination of sources.
pub struct Combination<'a>(pub Vec<(C64, &'a dyn FieldSource)>);

impl FieldSource for Combination<'_> {
    fn value(&self, plan: &QuadPlan, elem: usize, q: &QuadPoint) -> Vec3 {
        let mut out = ZERO3;
        for (s, f) in &self.0 {
            let v = f.value(plan, elem, q);
            for c in 0..3 {
                out[c] += s * v[c];
            }
        }
        out
    }

    fn curl_div(&self, plan: &QuadPlan, k: i32, elem: usize, q: &QuadPoint) -> (Vec3, C64) {
        let mut curl = ZERO3;
        let mut div = C64::new(0.0, 0.0);
        for (s, f) in &self.0 {
            let (cu, d) = f.curl_div(plan, k, elem, q);
            for c in 0..3 {
                curl[c] += s * cu[c];
            }
            div += s * d;
        }
        (curl, div)
    }
}

/// Right-hand side data `(f, g)` paired against `(curl_k v, div_k v)`.
pub trait ModeData: Sync {
    fn data(&self, plan: &QuadPlan, elem: usize, q: &QuadPoint) -> (Vec3, C64);
}

/// `(curl_k u, div_k u)` of a source as data.
pub struct CurlDivOf<'a, S: FieldSource + ?Sized> {
    pub src: &'a S,
    pub k: i32,
}

impl<S: FieldSource + ?Sized> ModeData for CurlDivOf<'_, S> {
    fn data(&self, plan: &QuadPlan, elem: usize, q: &QuadPoint) -> (Vec3, C64) {
        self.src.curl_div(plan, self.k, elem, q)
    }
}

/// Pointwise data given by closures of `(r, z)`.
pub struct PointData<F, G> {
    pub f: F,
    pub g: G,
}

impl<F, G> ModeData for PointData<F, G>
where
    F: Fn(f64, f64) -> Vec3 + Sync,
    G: Fn(f64, f64) -> C64 + Sync,
{
    fn data(&self, _plan: &QuadPlan, _elem: usize, q: &QuadPoint) -> (Vec3, C64) {
        ((self.f)(q.r, q.z), (self.g)(q.r, q.z))
    }
}

fn cdot(a: &Vec3, b: &Vec3) -> C64 {
    a[0] * b[0].conj() + a[1] * b[1].conj() + a[2] * b[2].conj()
}

/// Per-element sums computed in parallel, added in element order.
fn sum_elements(plan: &QuadPlan, f: impl Fn(usize, &QuadPoint) -> C64 + Sync) -> C64 {
    let per: Vec<C64> = (0..plan.elements.len())
        .into_par_iter()
        .map(|e| plan.points[e].iter().map(|q| f(e, q)).sum())
        .collect();
    per.into_iter().sum()
}

/// `a_k(u, v) = ∫∫ [curl_k u · conj(curl_k v) + div_k u · conj(div_k v)] r dr dz`.
pub fn form_a(plan: &QuadPlan, k: i32, u: &dyn FieldSource, v: &dyn FieldSource) -> C64 {
    sum_elements(plan, |e, q| {
        let (cu, du) = u.curl_div(plan, k, e, q);
        let (cv, dv) = v.curl_div(plan, k, e, q);
        (cdot(&cu, &cv) + du * dv.conj()) * (q.w * q.r)
    })
}

/// L²₁ inner product `∫∫ u · conj(v) r dr dz`.
pub fn l2_inner(plan: &QuadPlan, u: &dyn FieldSource, v: &dyn FieldSource) -> C64 {
    sum_elements(plan, |e, q| {
        cdot(&u.value(plan, e, q), &v.value(plan, e, q)) * (q.w * q.r)
    })
}

/// `∫∫ (u · conj(v) / r²) r dr dz`.
pub fn form_over_r2(plan: &QuadPlan, u: &dyn FieldSource, v: &dyn FieldSource) -> C64 {
    sum_elements(plan, |e, q| cdot(&u.value(plan, e, q), &v.value(plan, e, q)) * (q.w / q.r))
}

/// `∫∫ 2 (u_θ conj(v_r) − u_r conj(v_θ)) / r dr dz`.
pub fn form_c(plan: &QuadPlan, u: &dyn FieldSource, v: &dyn FieldSource) -> C64 {
    sum_elements(plan, |e, q| {
        let a = u.value(plan, e, q);
        let b = v.value(plan, e, q);
        (a[THETA] * b[R].conj() - a[R] * b[THETA].conj()) * (2.0 * q.w / q.r)
    })
}

/// Which boundary edges a line integral runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSet {
    Wall,
    All,
}

/// Line measure of a boundary integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineMeasure {
    /// `r dγ`.
    Weighted,
    /// `dγ`.
    ArcLength,
}

/// `∫ [(u_m·n) conj(v_θ) − u_θ (conj(v_m)·n)]` over boundary edges, two-point Gauss per edge.
pub fn form_b_on(
    plan: &QuadPlan,
    u: &dyn FieldSource,
    v: &dyn FieldSource,
    edges: EdgeSet,
    measure: LineMeasure,
) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    for edge in &plan.edges {
        if edges == EdgeSet::Wall && edge.tag != BoundaryTag::Wall {
            continue;
        }
        let [nr, nz] = edge.normal;
        for q in plan.edge_points(edge) {
            let a = u.value(plan, edge.elem, &q);
            let b = v.value(plan, edge.elem, &q);
            let an = a[R] * nr + a[Z] * nz;
            let bn = b[R].conj() * nr + b[Z].conj() * nz;
            let w = match measure {
                LineMeasure::Weighted => q.w * q.r,
                LineMeasure::ArcLength => q.w,
            };
            sum += (an * b[THETA].conj() - a[THETA] * bn) * w;
        }
    }
    sum
}

/// Wall boundary form with the `r dγ` measure.
pub fn form_b(plan: &QuadPlan, u: &dyn FieldSource, v: &dyn FieldSource) -> C64 {
    form_b_on(plan, u, v, EdgeSet::Wall, LineMeasure::Weighted)
}

/// True when a P1 field is nonzero at an axis vertex, where the `1/r`
/// integrands of `form_over_r2` and `form_c` are not integrable.
pub fn axis_divergent(plan: &QuadPlan, field: &ModeField) -> bool {
    let cap = 1e-12 * field.max_abs().max(f64::MIN_POSITIVE);
    plan.axis_vertex
        .iter()
        .zip(&field.values)
        .any(|(&on_axis, v)| on_axis && v.iter().any(|c| c.norm() > cap))
}

/// `form_over_r2` refusing fields whose value on the axis makes the integral diverge.
pub fn form_over_r2_checked(plan: &QuadPlan, u: &ModeField, v: &ModeField) -> Result<C64> {
    if axis_divergent(plan, u) || axis_divergent(plan, v) {
        return Err(Error::InvalidInput(
            "1/r integrand does not vanish on the axis; the integral is potentially divergent".into(),
        ));
    }
    Ok(form_over_r2(plan, u, v))
}

fn meridian_only(f: &ModeField) -> ModeField {
    ModeField {
        k: f.k,
        values: f.values.iter().map(|v| [v[R], C64::new(0.0, 0.0), v[Z]]).collect(),
    }
}

fn azimuthal_only(f: &ModeField) -> ModeField {
    ModeField {
        k: f.k,
        values: f.values.iter().map(|v| [C64::new(0.0, 0.0), v[THETA], C64::new(0.0, 0.0)]).collect(),
    }
}

/// `(curl w, curl w')` for the azimuthal components, with the scalar curl
/// `curl w = (−∂_z w, 0, ∂_r w + w/r)`, which is `curl_0` of `w e_θ`.
pub fn form_scalar_curl(plan: &QuadPlan, u: &ModeField, v: &ModeField) -> C64 {
    let (ut, vt) = (azimuthal_only(u), azimuthal_only(v));
    sum_elements(plan, |e, q| {
        let (cu, _) = ut.curl_div(plan, 0, e, q);
        let (cv, _) = vt.curl_div(plan, 0, e, q);
        cdot(&cu, &cv) * (q.w * q.r)
    })
}

/// The terms of `a_k` split by component, summed back together:
/// `a_0(u_m, v_m) + k²(u_m/r, v_m/r) + (curl u_θ, curl v_θ) + k²(u_θ/r, v_θ/r)
///  − ik·B + ik·C`, where `B` runs over the whole boundary with arc-length measure.
pub fn a_k_via_decomposition(plan: &QuadPlan, u: &ModeField, v: &ModeField, k: i32) -> C64 {
    let (um, vm) = (meridian_only(u), meridian_only(v));
    let (ut, vt) = (azimuthal_only(u), azimuthal_only(v));
    let k2 = (k * k) as f64;
    let a0 = form_a(plan, 0, &um, &vm);
    let over_m = form_over_r2(plan, &um, &vm);
    let curl_t = form_scalar_curl(plan, u, v);
    let over_t = form_over_r2(plan, &ut, &vt);
    let b = form_b_on(plan, u, v, EdgeSet::All, LineMeasure::ArcLength);
    let c = form_c(plan, u, v);
    a0 + over_m * k2 + curl_t + over_t * k2 - ik(k) * b + ik(k) * c
}

/// Cached pieces of `a_m(u, v)` that let `a_k(u, v)` be evaluated for any `k`:
/// `a_k = a_m + (k² − m²)·(u/r, v/r) + i(k − m)·(C − B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftTerms {
    pub m: i32,
    pub a_m: C64,
    pub over_r2: C64,
    pub c: C64,
    pub b: C64,
}

impl ShiftTerms {
    pub fn new(plan: &QuadPlan, m: i32, u: &dyn FieldSource, v: &dyn FieldSource, with_boundary: bool) -> Self {
        Self {
            m,
            a_m: form_a(plan, m, u, v),
            over_r2: form_over_r2(plan, u, v),
            c: form_c(plan, u, v),
            b: if with_boundary {
                form_b_on(plan, u, v, EdgeSet::All, LineMeasure::ArcLength)
            } else {
                C64::new(0.0, 0.0)
            },
        }
    }

    pub fn a_k(&self, k: i32) -> C64 {
        let dk2 = (k * k - self.m * self.m) as f64;
        self.a_m + self.over_r2 * dk2 + ik(k - self.m) * (self.c - self.b)
    }
}

/// `a_k(u, v)` from `a_m(u, v)` by the shift identity, for fields whose
/// boundary term vanishes.
pub fn a_k_via_shift(plan: &QuadPlan, u: &dyn FieldSource, v: &dyn FieldSource, m: i32, k: i32) -> C64 {
    ShiftTerms::new(plan, m, u, v, false).a_k(k)
}

/// Constrained stiffness matrix and load on the free unknowns of one mode.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: HermitianSparse,
    pub constraints: ConstraintSet,
    pub k: i32,
    pub kind: SpaceKind,
    pub load: Vec<C64>,
}

/// `(curl_k, div_k)` of the nine local basis functions (vertex-major, component-minor).
fn basis_curl_div(k: i32, geom: &ElementGeom, q: &QuadPoint) -> [(Vec3, C64); 9] {
    let mut out = [(ZERO3, C64::new(0.0, 0.0)); 9];
    for i in 0..3 {
        for c in 0..3 {
            let mut j = Jet {
                val: ZERO3,
                dr: ZERO3,
                dz: ZERO3,
            };
            j.val[c] = C64::new(q.lam[i], 0.0);
            j.dr[c] = C64::new(geom.grad[i][0], 0.0);
            j.dz[c] = C64::new(geom.grad[i][1], 0.0);
            out[3 * i + c] = (curl_jet(k, q.r, &j), div_jet(k, q.r, &j));
        }
    }
    out
}

/// Element matrix `K[a][b] = a_k(φ_b, φ_a)`.
fn element_matrix(plan: &QuadPlan, k: i32, e: usize) -> [[C64; 9]; 9] {
    let geom = &plan.elements[e];
    let mut m = [[C64::new(0.0, 0.0); 9]; 9];
    for q in &plan.points[e] {
        let phi = basis_curl_div(k, geom, q);
        let w = q.w * q.r;
        for a in 0..9 {
            for b in 0..9 {
                m[a][b] += (cdot(&phi[b].0, &phi[a].0) + phi[b].1 * phi[a].1.conj()) * w;
            }
        }
    }
    m
}

/// Matrix `K_IJ = a_k(Ψ_J, Ψ_I)` on the free unknowns.
pub fn assemble_matrix(plan: &QuadPlan, cons: &ConstraintSet) -> HermitianSparse {
    let k = cons.k;
    let locals: Vec<[[C64; 9]; 9]> = (0..plan.elements.len())
        .into_par_iter()
        .map(|e| element_matrix(plan, k, e))
        .collect();
    let mut trip = Vec::with_capacity(locals.len() * 81);
    for (e, m) in locals.iter().enumerate() {
        let tri = plan.triangles[e];
        let maps: Vec<Option<(usize, C64)>> =
            (0..9).map(|a| cons.dof_map(3 * tri[a / 3] + a % 3)).collect();
        for a in 0..9 {
            let Some((i, ca)) = maps[a] else { continue };
            for b in 0..9 {
                let Some((j, cb)) = maps[b] else { continue };
                trip.push((i, j, ca.conj() * cb * m[a][b]));
            }
        }
    }
    HermitianSparse::from_triplets(cons.n_free(), trip)
}

/// Builds constraints and the matrix for mode `k`; the load is left at zero.
pub fn assemble_a_k(mesh: &TriangleMesh, plan: &QuadPlan, k: i32, kind: SpaceKind) -> Result<AssembledSystem> {
    let constraints = build_constraints(mesh, k, kind)?;
    let matrix = assemble_matrix(plan, &constraints);
    let load = vec![C64::new(0.0, 0.0); constraints.n_free()];
    Ok(AssembledSystem {
        matrix,
        constraints,
        k,
        kind,
        load,
    })
}

/// `ℓ(Ψ_I) = ∫∫ [f · conj(curl_k Ψ_I) + g conj(div_k Ψ_I)] r dr dz` on the free unknowns.
pub fn assemble_load(plan: &QuadPlan, cons: &ConstraintSet, data: &dyn ModeData) -> Result<Vec<C64>> {
    let k = cons.k;
    let locals: Vec<Result<[C64; 9]>> = (0..plan.elements.len())
        .into_par_iter()
        .map(|e| {
            let geom = &plan.elements[e];
            let mut l = [C64::new(0.0, 0.0); 9];
            for q in &plan.points[e] {
                let (f, g) = data.data(plan, e, q);
                if f.iter().chain(std::iter::once(&g)).any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                    return Err(Error::NonFinite(format!(
                        "load integrand at ({}, {})",
                        q.r, q.z
                    )));
                }
                let phi = basis_curl_div(k, geom, q);
                let w = q.w * q.r;
                for a in 0..9 {
                    l[a] += (cdot(&f, &phi[a].0) + g * phi[a].1.conj()) * w;
                }
            }
            Ok(l)
        })
        .collect();
    let mut full = vec![C64::new(0.0, 0.0); cons.n_dofs()];
    for (e, l) in locals.into_iter().enumerate() {
        let l = l?;
        let tri = plan.triangles[e];
        for a in 0..9 {
            full[3 * tri[a / 3] + a % 3] += l[a];
        }
    }
    Ok(cons.restrict(&full))
}

/// `a_k(src, Ψ_I)` on the free unknowns.
pub fn form_against_basis(plan: &QuadPlan, cons: &ConstraintSet, src: &dyn FieldSource) -> Result<Vec<C64>> {
    assemble_load(plan, cons, &CurlDivOf { src, k: cons.k })
}

/// Per-free-unknown pieces of the shift identity for `a(src, Ψ_I)`, so that
/// `a_k(src, Ψ_I)` can be formed for any `k` sharing the constraint pattern.
#[derive(Debug, Clone)]
pub struct ShiftVectors {
    pub m: i32,
    pub a_m: Vec<C64>,
    pub over_r2: Vec<C64>,
    pub c: Vec<C64>,
}

impl ShiftVectors {
    pub fn new(plan: &QuadPlan, cons: &ConstraintSet, src: &dyn FieldSource, m: i32) -> Result<Self> {
        let n = cons.n_dofs();
        let zero = C64::new(0.0, 0.0);
        let locals: Vec<([C64; 9], [C64; 9])> = (0..plan.elements.len())
            .into_par_iter()
            .map(|e| {
                let mut o = [zero; 9];
                let mut c = [zero; 9];
                for q in &plan.points[e] {
                    let u = src.value(plan, e, q);
                    for i in 0..3 {
                        let lam = q.lam[i];
                        for comp in 0..3 {
                            o[3 * i + comp] += u[comp] * (lam * q.w / q.r);
                        }
                        c[3 * i + R] += u[THETA] * (2.0 * lam * q.w / q.r);
                        c[3 * i + THETA] -= u[R] * (2.0 * lam * q.w / q.r);
                    }
                }
                (o, c)
            })
            .collect();
        let mut over = vec![zero; n];
        let mut cc = vec![zero; n];
        for (e, (o, c)) in locals.iter().enumerate() {
            let tri = plan.triangles[e];
            for a in 0..9 {
                over[3 * tri[a / 3] + a % 3] += o[a];
                cc[3 * tri[a / 3] + a % 3] += c[a];
            }
        }
        let mut cons_m = cons.clone();
        cons_m.k = m;
        Ok(Self {
            m,
            a_m: form_against_basis(plan, &cons_m, src)?,
            over_r2: cons.restrict(&over),
            c: cons.restrict(&cc),
        })
    }

    pub fn a_k(&self, k: i32) -> Vec<C64> {
        let dk2 = (k * k - self.m * self.m) as f64;
        let s = ik(k - self.m);
        (0..self.a_m.len())
            .map(|i| self.a_m[i] + self.over_r2[i] * dk2 + s * self.c[i])
            .collect()
    }
}
