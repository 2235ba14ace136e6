//! Per-mode solves with the regular/singular splitting, Fourier analysis of
//! three-dimensional data and synthesis of the three-dimensional field.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{build_constraints, ModeField, QuadPlan, QuadPoint, SpaceKind, C64, Vec3, ZERO3};
use crate::linalg::{solve_bordered, solve_hpd, BorderedSystem, CgReport, Pairing, DEFAULT_TOL};
use crate::mesh::{CornerDescriptor, TriangleMesh};
use crate::modal::{
    assemble_load, assemble_matrix, form_a, form_against_basis, l2_inner, Combination, FieldSource, ModeData,
    ShiftTerms, ShiftVectors,
};
use crate::singular::{compute_basis, SingularBasis};

/// Data of one mode: `a_k(u, v) = (f, curl_k v) + (g, div_k v)`.
pub struct ModeProblem<'a> {
    pub k: i32,
    pub kind: SpaceKind,
    pub data: &'a dyn ModeData,
    /// Check that `g` has zero mean, as the magnetic `k = 0` problem requires.
    pub require_mean_zero_g: bool,
}

impl<'a> ModeProblem<'a> {
    pub fn new(k: i32, kind: SpaceKind, data: &'a dyn ModeData) -> Self {
        Self {
            k,
            kind,
            data,
            require_mean_zero_g: kind == SpaceKind::Magnetic && k == 0,
        }
    }
}

/// `(f, curl_k v) + (g, div_k v)` for a single field `v`.
pub fn pair_data(plan: &QuadPlan, k: i32, data: &dyn ModeData, v: &dyn FieldSource) -> C64 {
    let per: Vec<C64> = (0..plan.elements.len())
        .into_par_iter()
        .map(|e| {
            plan.points[e]
                .iter()
                .map(|q| {
                    let (f, g) = data.data(plan, e, q);
                    let (cv, dv) = v.curl_div(plan, k, e, q);
                    (f[0] * cv[0].conj() + f[1] * cv[1].conj() + f[2] * cv[2].conj() + g * dv.conj())
                        * (q.w * q.r)
                })
                .sum()
        })
        .collect();
    per.into_iter().sum()
}

fn check_mean_zero(plan: &QuadPlan, data: &dyn ModeData) -> Result<()> {
    let (mut mean, mut scale) = (C64::new(0.0, 0.0), 0.0);
    for (e, pts) in plan.points.iter().enumerate() {
        for q in pts {
            let (_, g) = data.data(plan, e, q);
            mean += g * (q.w * q.r);
            scale += g.norm() * q.w * q.r;
        }
    }
    if mean.norm() > 1e-8 * scale {
        return Err(Error::InvalidInput(format!(
            "divergence data must have zero mean (mean {:.3e}, scale {scale:.3e})",
            mean.norm()
        )));
    }
    Ok(())
}

/// Solution of one mode: `regular + c · basis`.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub k: i32,
    pub kind: SpaceKind,
    pub regular: ModeField,
    pub c: C64,
    pub basis: Option<Arc<SingularBasis>>,
    pub report: CgReport,
    /// Schur complement of the bordered system, when one was solved.
    pub schur: Option<C64>,
}

impl ModeSolution {
    /// Nodal total field.
    pub fn nodal(&self, mesh: &TriangleMesh) -> ModeField {
        let mut out = self.regular.clone();
        if let Some(b) = &self.basis {
            let t = b.nodal_total(mesh);
            for (o, v) in out.values.iter_mut().zip(&t.values) {
                for c in 0..3 {
                    o[c] += self.c * v[c];
                }
            }
        }
        out.k = self.k;
        out
    }
}

impl FieldSource for ModeSolution {
    fn value(&self, plan: &QuadPlan, elem: usize, q: &QuadPoint) -> Vec3 {
        let mut v = self.regular.value(plan, elem, q);
        if let Some(b) = &self.basis {
            let s = b.value(plan, elem, q);
            for c in 0..3 {
                v[c] += self.c * s[c];
            }
        }
        v
    }

    fn curl_div(&self, plan: &QuadPlan, k: i32, elem: usize, q: &QuadPoint) -> (Vec3, C64) {
        let (mut cu, mut d) = self.regular.curl_div(plan, k, elem, q);
        if let Some(b) = &self.basis {
            let (cs, ds) = b.curl_div(plan, k, elem, q);
            for c in 0..3 {
                cu[c] += self.c * cs[c];
            }
            d += self.c * ds;
        }
        (cu, d)
    }
}

/// Solve for `|k| ≤ 2`, or without a singular basis.
///
/// The singular coefficient is `[(f, curl_k y) + (g, div_k y)] / a_k(y, y)`,
/// using that the basis is `a_k`-orthogonal to the regular space; the regular
/// part then solves `a_k(u_R, v) = (f, curl_k v) + (g, div_k v)`.
pub fn solve_mode_orthogonal(
    mesh: &TriangleMesh,
    plan: &QuadPlan,
    problem: &ModeProblem,
    basis: Option<Arc<SingularBasis>>,
    tol: f64,
) -> Result<ModeSolution> {
    let ModeProblem { k, kind, data, .. } = *problem;
    if problem.require_mean_zero_g {
        check_mean_zero(plan, data)?;
    }
    if let Some(b) = &basis {
        if b.k != k || b.kind != kind {
            return Err(Error::InvalidInput(format!(
                "basis for k = {} ({}) used for k = {k} ({})",
                b.k,
                b.kind.as_str(),
                kind.as_str()
            )));
        }
    }
    let cons = build_constraints(mesh, k, kind)?;
    let c = match &basis {
        Some(b) => {
            let den = form_a(plan, k, b.as_ref(), b.as_ref());
            if !(den.norm() > 0.0) || !den.re.is_finite() {
                return Err(Error::Degenerate(format!(
                    "singular basis has vanishing energy {den:.3e}"
                )));
            }
            pair_data(plan, k, data, b.as_ref()) / den
        }
        None => C64::new(0.0, 0.0),
    };
    let a = assemble_matrix(plan, &cons);
    let load = assemble_load(plan, &cons, data)?;
    let (x, report) = solve_hpd(&a, &load, tol, None)?;
    Ok(ModeSolution {
        k,
        kind,
        regular: cons.expand(&x, None),
        c,
        basis,
        report,
        schur: None,
    })
}

/// How the coupling of the reused `|k| = 2` basis with mode `k` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// From cached mode-2 integrals via the shift identity.
    Shift,
    /// By direct quadrature of `a_k`.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BorderedOptions {
    pub pairing: Pairing,
    pub coupling: Coupling,
}

impl Default for BorderedOptions {
    fn default() -> Self {
        Self {
            pairing: Pairing::Conjugate,
            coupling: Coupling::Shift,
        }
    }
}

/// Mode-2 integrals of a basis, reusable for every `|k| > 2` of the same sign.
#[derive(Debug, Clone)]
pub struct ShiftCache {
    pub basis: Arc<SingularBasis>,
    pub vectors: ShiftVectors,
    pub energy: ShiftTerms,
}

impl ShiftCache {
    pub fn new(mesh: &TriangleMesh, plan: &QuadPlan, basis: Arc<SingularBasis>) -> Result<Self> {
        let cons = build_constraints(mesh, basis.k, basis.kind)?;
        let vectors = ShiftVectors::new(plan, &cons, basis.as_ref(), basis.k)?;
        let energy = ShiftTerms::new(plan, basis.k, basis.as_ref(), basis.as_ref(), false);
        Ok(Self {
            basis,
            vectors,
            energy,
        })
    }
}

/// Solve for `|k| > 2` reusing the basis of mode `sign(k)·2`: the regular part
/// and the coefficient are coupled through a bordered system.
pub fn solve_mode_bordered(
    mesh: &TriangleMesh,
    plan: &QuadPlan,
    problem: &ModeProblem,
    cache: &ShiftCache,
    options: BorderedOptions,
    tol: f64,
) -> Result<ModeSolution> {
    let ModeProblem { k, kind, data, .. } = *problem;
    let basis = &cache.basis;
    if k.abs() <= 2 {
        return Err(Error::InvalidInput(format!("bordered solve needs |k| > 2, got {k}")));
    }
    if basis.k != 2 * k.signum() || basis.kind != kind {
        return Err(Error::InvalidInput(format!(
            "mode {k} needs the basis of mode {} ({}), got mode {} ({})",
            2 * k.signum(),
            kind.as_str(),
            basis.k,
            basis.kind.as_str()
        )));
    }
    let cons = build_constraints(mesh, k, kind)?;
    let (y, alpha) = match options.coupling {
        Coupling::Shift => (cache.vectors.a_k(k), cache.energy.a_k(k)),
        Coupling::Direct => (
            form_against_basis(plan, &cons, basis.as_ref())?,
            form_a(plan, k, basis.as_ref(), basis.as_ref()),
        ),
    };
    let sys = BorderedSystem {
        k: assemble_matrix(plan, &cons),
        y,
        alpha,
        rhs: assemble_load(plan, &cons, data)?,
        f: pair_data(plan, k, data, basis.as_ref()),
    };
    let sol = solve_bordered(&sys, tol, options.pairing)?;
    let [_, report] = sol.reports;
    Ok(ModeSolution {
        k,
        kind,
        regular: cons.expand(&sol.x, None),
        c: sol.c,
        basis: Some(basis.clone()),
        report,
        schur: Some(sol.schur),
    })
}

/// Real three-dimensional data in cylindrical components:
/// `(r, θ, z) ↦ ((f_r, f_θ, f_z), g)`.
pub type Data3d = dyn Fn(f64, f64, f64) -> ([f64; 3], f64) + Send + Sync;

/// Fourier analysis of three-dimensional data on a uniform θ grid, with the
/// convention `w = (2π)^{-1/2} Σ_k w^k e^{ikθ}`.
#[derive(Clone)]
pub struct FourierRhs {
    pub n: usize,
    pub theta_samples: usize,
    source: Arc<Data3d>,
}

impl std::fmt::Debug for FourierRhs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierRhs")
            .field("n", &self.n)
            .field("theta_samples", &self.theta_samples)
            .finish()
    }
}

/// `e^{-ikθ_j}` computed so that `k` and `−k` give exact conjugates.
fn twiddle(k: i32, j: usize, t: usize) -> C64 {
    let phase = 2.0 * PI * ((k.unsigned_abs() as usize * j) % t) as f64 / t as f64;
    let (s, c) = phase.sin_cos();
    C64::new(c, if k >= 0 { -s } else { s })
}

impl FourierRhs {
    pub fn new(source: Arc<Data3d>, n: usize, theta_samples: usize) -> Result<Self> {
        if theta_samples < 4 * n + 1 {
            return Err(Error::InvalidInput(format!(
                "{theta_samples} angular samples cannot resolve modes up to {n} (need at least {})",
                4 * n + 1
            )));
        }
        Ok(Self {
            n,
            theta_samples,
            source,
        })
    }

    /// Coefficient of mode `k` at `(r, z)`.
    pub fn coefficient(&self, k: i32, r: f64, z: f64) -> (Vec3, C64) {
        let t = self.theta_samples;
        let scale = (2.0 * PI).sqrt() / t as f64;
        let mut f = ZERO3;
        let mut g = C64::new(0.0, 0.0);
        for j in 0..t {
            let theta = 2.0 * PI * j as f64 / t as f64;
            let (fv, gv) = (self.source)(r, theta, z);
            let e = twiddle(k, j, t) * scale;
            for c in 0..3 {
                f[c] += e * fv[c];
            }
            g += e * gv;
        }
        (f, g)
    }

    pub fn mode(&self, k: i32) -> ModeRhs<'_> {
        ModeRhs { rhs: self, k }
    }
}

/// One Fourier coefficient of [`FourierRhs`] as mode data.
pub struct ModeRhs<'a> {
    rhs: &'a FourierRhs,
    k: i32,
}

impl ModeData for ModeRhs<'_> {
    fn data(&self, _plan: &QuadPlan, _elem: usize, q: &QuadPoint) -> (Vec3, C64) {
        self.rhs.coefficient(self.k, q.r, q.z)
    }
}

/// DFT of nodal samples `samples[j]` taken at `θ_j = 2πj/T`.
pub fn analyze_nodal(samples: &[Vec<Vec3>], k: i32) -> Vec<Vec3> {
    let t = samples.len();
    let scale = (2.0 * PI).sqrt() / t as f64;
    let nv = samples.first().map_or(0, |s| s.len());
    let mut out = vec![ZERO3; nv];
    for (j, s) in samples.iter().enumerate() {
        let e = twiddle(k, j, t) * scale;
        for (o, v) in out.iter_mut().zip(s) {
            for c in 0..3 {
                o[c] += e * v[c];
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub bordered: BorderedOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            bordered: BorderedOptions::default(),
        }
    }
}

/// Truncated Fourier solution, modes `−n..=n`.
#[derive(Debug, Clone)]
pub struct FourierSolution {
    pub n: usize,
    pub kind: SpaceKind,
    pub modes: Vec<ModeSolution>,
}

impl FourierSolution {
    pub fn mode(&self, k: i32) -> Result<&ModeSolution> {
        self.modes
            .iter()
            .find(|m| m.k == k)
            .ok_or_else(|| Error::InvalidInput(format!("mode {k} is missing from the solution")))
    }
}

/// Solves every mode `|k| ≤ n`. With a corner, modes `|k| ≤ 2` use their own
/// singular basis and higher modes the bordered system.
pub fn solve_all(
    mesh: &TriangleMesh,
    plan: &QuadPlan,
    corner: Option<&CornerDescriptor>,
    kind: SpaceKind,
    rhs: &FourierRhs,
    options: SolveOptions,
) -> Result<FourierSolution> {
    let n = rhs.n as i32;
    let ks: Vec<i32> = (-n..=n).collect();
    let bases: Vec<(i32, Arc<SingularBasis>)> = match corner {
        Some(c) => ks
            .par_iter()
            .filter(|k| k.abs() <= 2)
            .map(|&k| compute_basis(mesh, plan, c, k, kind, options.tol).map(|b| (k, Arc::new(b))))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let basis_for = |k: i32| bases.iter().find(|(m, _)| *m == k).map(|(_, b)| b.clone());
    let caches: Vec<(i32, ShiftCache)> = if corner.is_some() && n > 2 {
        [-2, 2]
            .par_iter()
            .map(|&m| ShiftCache::new(mesh, plan, basis_for(m).expect("mode-2 basis")).map(|c| (m, c)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let modes: Vec<ModeSolution> = ks
        .par_iter()
        .map(|&k| {
            let data = rhs.mode(k);
            let problem = ModeProblem::new(k, kind, &data);
            if corner.is_some() && k.abs() > 2 {
                let cache = &caches.iter().find(|(m, _)| *m == 2 * k.signum()).unwrap().1;
                solve_mode_bordered(mesh, plan, &problem, cache, options.bordered, options.tol)
            } else {
                solve_mode_orthogonal(mesh, plan, &problem, basis_for(k), options.tol)
            }
        })
        .collect::<Result<_>>()?;
    Ok(FourierSolution { n: rhs.n, kind, modes })
}

/// `w(r, θ, z) = (2π)^{-1/2} Σ_k w^k(r, z) e^{ikθ}` at the mesh vertices.
pub fn synthesize(solution: &FourierSolution, mesh: &TriangleMesh, theta: f64) -> Result<Vec<Vec3>> {
    let n = solution.n as i32;
    let mut out = vec![ZERO3; mesh.n_vertices()];
    let norm = 1.0 / (2.0 * PI).sqrt();
    for k in -n..=n {
        let m = solution.mode(k)?.nodal(mesh);
        let e = C64::from_polar(norm, k as f64 * theta);
        for (o, v) in out.iter_mut().zip(&m.values) {
            for c in 0..3 {
                o[c] += e * v[c];
            }
        }
    }
    Ok(out)
}

/// Synthesized nodal fields at `θ_j = 2πj/T`, `j < T`.
pub fn sample_3d(solution: &FourierSolution, mesh: &TriangleMesh, theta_samples: usize) -> Result<Vec<Vec<Vec3>>> {
    (0..theta_samples)
        .map(|j| synthesize(solution, mesh, 2.0 * PI * j as f64 / theta_samples as f64))
        .collect()
}

/// Largest imaginary part relative to the largest magnitude.
pub fn imaginary_ratio(samples: &[Vec<Vec3>]) -> f64 {
    let (mut im, mut mag) = (0.0f64, 0.0f64);
    for v in samples.iter().flatten().flatten() {
        im = im.max(v.im.abs());
        mag = mag.max(v.norm());
    }
    if mag == 0.0 {
        0.0
    } else {
        im / mag
    }
}

/// `(‖u − u_ex‖, a_k(u − u_ex, u − u_ex)^{1/2})`, the first in L²₁.
pub fn error_norms(plan: &QuadPlan, k: i32, field: &dyn FieldSource, exact: &dyn FieldSource) -> (f64, f64) {
    let diff = Combination(vec![(C64::new(1.0, 0.0), field), (C64::new(-1.0, 0.0), exact)]);
    let l2 = l2_inner(plan, &diff, &diff).re.max(0.0).sqrt();
    let energy = form_a(plan, k, &diff, &diff).re.max(0.0).sqrt();
    (l2, energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manufactured::SmoothField;
    use crate::mesh::{gen_lshape, gen_rectangle, LShape};
    use crate::modal::{CurlDivOf, PointData};
    use rand::{Rng, SeedableRng};

    fn zero_data() -> PointData<impl Fn(f64, f64) -> Vec3 + Sync, impl Fn(f64, f64) -> C64 + Sync> {
        PointData {
            f: |_: f64, _: f64| ZERO3,
            g: |_: f64, _: f64| C64::new(0.0, 0.0),
        }
    }

    #[test]
    fn analysis_of_single_harmonic() {
        let src: Arc<Data3d> = Arc::new(|_r, th, _z| ([0.0, 0.0, th.cos()], 0.0));
        let rhs = FourierRhs::new(src, 3, 13).unwrap();
        for k in -3..=3 {
            let (f, _) = rhs.coefficient(k, 0.5, 0.5);
            let expected = if k.abs() == 1 { (PI / 2.0).sqrt() } else { 0.0 };
            assert!((f[2] - C64::new(expected, 0.0)).norm() < 1e-14, "k={k}: {}", f[2]);
            assert!(f[0].norm() < 1e-15);
        }
        let flat: Arc<Data3d> = Arc::new(|r, _th, z| ([r, z, 1.0], r * z));
        let rhs = FourierRhs::new(flat, 2, 9).unwrap();
        assert!(rhs.coefficient(0, 0.3, 0.4).0[2].re > 0.0);
        for k in [-2, -1, 1, 2] {
            let (f, g) = rhs.coefficient(k, 0.3, 0.4);
            assert!(f.iter().all(|x| x.norm() < 1e-14) && g.norm() < 1e-14);
        }
        assert!(FourierRhs::new(Arc::new(|_, _, _| ([0.0; 3], 0.0)), 3, 12).is_err());
    }

    #[test]
    fn trigonometric_round_trip() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(12);
        let coef: Vec<(f64, f64)> = (0..=3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let c2 = coef.clone();
        let f = move |th: f64| c2.iter().enumerate().map(|(m, (a, b))| a * (m as f64 * th).cos() + b * (m as f64 * th).sin()).sum::<f64>();
        let f2 = f.clone();
        let rhs = FourierRhs::new(Arc::new(move |_, th, _| ([f2(th), 0.0, 0.0], 0.0)), 5, 21).unwrap();
        for th in [0.1, 1.3, 4.0] {
            let mut s = C64::new(0.0, 0.0);
            for k in -5..=5 {
                s += rhs.coefficient(k, 0.2, 0.2).0[0] * C64::from_polar(1.0 / (2.0 * PI).sqrt(), k as f64 * th);
            }
            assert!((s.re - f(th)).abs() < 1e-12 && s.im.abs() < 1e-12);
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let (mesh, corner) = gen_lshape(LShape::default(), 0.125).unwrap();
        let plan = QuadPlan::with_corners(&mesh, &[corner]);
        let data = zero_data();
        let basis = Arc::new(compute_basis(&mesh, &plan, &corner, 2, SpaceKind::Magnetic, 1e-10).unwrap());
        let p = ModeProblem::new(2, SpaceKind::Magnetic, &data);
        let s = solve_mode_orthogonal(&mesh, &plan, &p, Some(basis.clone()), 1e-10).unwrap();
        assert_eq!(s.c, C64::new(0.0, 0.0));
        assert_eq!(s.regular.max_abs(), 0.0);
        let cache = ShiftCache::new(&mesh, &plan, basis).unwrap();
        let p = ModeProblem::new(3, SpaceKind::Magnetic, &data);
        let s = solve_mode_bordered(&mesh, &plan, &p, &cache, BorderedOptions::default(), 1e-10).unwrap();
        assert_eq!(s.c, C64::new(0.0, 0.0));
        assert_eq!(s.regular.max_abs(), 0.0);
    }

    #[test]
    fn mean_zero_guard() {
        let mesh = gen_rectangle(0.0, 1.0, 0.0, 1.0, 0.25).unwrap();
        let plan = QuadPlan::new(&mesh);
        let data = PointData {
            f: |_: f64, _: f64| ZERO3,
            g: |_: f64, _: f64| C64::new(1.0, 0.0),
        };
        let p = ModeProblem::new(0, SpaceKind::Magnetic, &data);
        assert!(solve_mode_orthogonal(&mesh, &plan, &p, None, 1e-10).is_err());
        let p = ModeProblem::new(0, SpaceKind::Electric, &data);
        assert!(solve_mode_orthogonal(&mesh, &plan, &p, None, 1e-10).is_ok());
    }

    #[test]
    fn galerkin_orthogonality_and_basis_coefficient() {
        let (mesh, corner) = gen_lshape(LShape::default(), 0.125).unwrap();
        let plan = QuadPlan::with_corners(&mesh, &[corner]);
        let smooth = SmoothField::new(1, SpaceKind::Electric);
        let data = CurlDivOf { src: &smooth, k: 1 };
        let basis = Arc::new(compute_basis(&mesh, &plan, &corner, 1, SpaceKind::Electric, 1e-11).unwrap());
        let p = ModeProblem::new(1, SpaceKind::Electric, &data);
        let s = solve_mode_orthogonal(&mesh, &plan, &p, Some(basis.clone()), 1e-11).unwrap();
        let cons = build_constraints(&mesh, 1, SpaceKind::Electric).unwrap();
        let lhs = form_against_basis(&plan, &cons, &s.regular).unwrap();
        let rhs = assemble_load(&plan, &cons, &data).unwrap();
        let res: f64 = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let nrm: f64 = rhs.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        assert!(res <= 1e-10 * nrm);
        // the regular part is a_k-orthogonal to the basis
        let cross = form_a(&plan, 1, &s.regular, basis.as_ref());
        let scale = form_a(&plan, 1, &s.regular, &s.regular).re.sqrt() * form_a(&plan, 1, basis.as_ref(), basis.as_ref()).re.sqrt();
        assert!(cross.norm() <= 1e-6 * scale);
    }

    #[test]
    fn bordered_recovers_known_coefficient() {
        let (mesh, corner) = gen_lshape(LShape::default(), 0.1).unwrap();
        let plan = QuadPlan::with_corners(&mesh, &[corner]);
        let kind = SpaceKind::Magnetic;
        let basis = Arc::new(compute_basis(&mesh, &plan, &corner, 2, kind, 1e-11).unwrap());
        let cache = ShiftCache::new(&mesh, &plan, basis.clone()).unwrap();
        let c0 = C64::new(0.7, -0.2);
        let cons = build_constraints(&mesh, 3, kind).unwrap();
        let mut smooth = ModeField {
            k: 3,
            values: mesh
                .vertices
                .iter()
                .map(|p| {
                    let (r, z) = (p[0], p[1]);
                    [
                        C64::new(r * r * (1.0 - r) * (r - 0.5) * z.exp(), 0.0),
                        C64::new(0.0, r * r * (1.0 + z)),
                        C64::new(r.powi(3) * z * (1.0 - z) * (z - 0.5), 0.0),
                    ]
                })
                .collect(),
        };
        cons.apply(&mut smooth);
        let exact = Combination(vec![(C64::new(1.0, 0.0), &smooth), (c0, basis.as_ref())]);
        let data = CurlDivOf { src: &exact, k: 3 };
        let p = ModeProblem::new(3, kind, &data);
        let s = solve_mode_bordered(&mesh, &plan, &p, &cache, BorderedOptions::default(), 1e-11).unwrap();
        assert!((s.c - c0).norm() <= 0.02 * c0.norm(), "{}", s.c);
        let d = solve_mode_bordered(
            &mesh,
            &plan,
            &p,
            &cache,
            BorderedOptions {
                coupling: Coupling::Direct,
                ..Default::default()
            },
            1e-11,
        )
        .unwrap();
        assert!((d.c - c0).norm() <= 1e-6 * c0.norm(), "{}", d.c);
        assert!(solve_mode_bordered(&mesh, &plan, &ModeProblem::new(2, kind, &data), &cache, BorderedOptions::default(), 1e-10).is_err());
    }

    #[test]
    fn error_norm_examples() {
        let mesh = gen_rectangle(0.0, 1.0, 0.0, 1.0, 0.2).unwrap();
        let plan = QuadPlan::new(&mesh);
        let f = SmoothField::new(0, SpaceKind::Magnetic);
        let zero = ModeField::zeros(0, mesh.n_vertices());
        let (l2, en) = error_norms(&plan, 0, &f, &zero);
        assert!((l2 - l2_inner(&plan, &f, &f).re.sqrt()).abs() < 1e-14);
        assert!((en - form_a(&plan, 0, &f, &f).re.sqrt()).abs() < 1e-12);
        let mut errs = Vec::new();
        for h in [0.2, 0.1] {
            let mesh = gen_rectangle(0.0, 1.0, 0.0, 1.0, h).unwrap();
            let plan = QuadPlan::new(&mesh);
            let interp = ModeField {
                k: 0,
                values: mesh.vertices.iter().map(|p| f.value_at(p[0], p[1])).collect(),
            };
            errs.push(error_norms(&plan, 0, &interp, &f).0);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
    }

    #[test]
    fn synthesis_of_mode_zero_only() {
        let mesh = gen_rectangle(0.0, 1.0, 0.0, 1.0, 0.25).unwrap();
        let plan = QuadPlan::new(&mesh);
        let src: Arc<Data3d> = Arc::new(|r, _th, z| ([r * z, r, 1.0 - z * z], 0.0));
        let rhs = FourierRhs::new(src, 0, 1).unwrap();
        let sol = solve_all(&mesh, &plan, None, SpaceKind::Electric, &rhs, SolveOptions::default()).unwrap();
        let a = synthesize(&sol, &mesh, 0.0).unwrap();
        let b = synthesize(&sol, &mesh, 1.7).unwrap();
        assert_eq!(a, b);
        let m0 = sol.mode(0).unwrap().nodal(&mesh);
        for (x, y) in a.iter().zip(&m0.values) {
            for c in 0..3 {
                assert!((x[c] * (2.0 * PI).sqrt() - y[c]).norm() < 1e-14);
            }
        }
        assert!(synthesize(&FourierSolution { n: 1, ..sol }, &mesh, 0.0).is_err());
    }
}
