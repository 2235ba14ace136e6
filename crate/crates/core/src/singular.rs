//! Principal parts of the corner and conical singularities, and the singular
//! complement basis `total = regular + principal` for modes `|k| ≤ 2`.

use crate::error::{Error, Result};
use crate::fem::{build_constraints, lift_boundary, ModeField, QuadPlan, QuadPoint, SpaceKind, C64, Vec3, ZERO3};
use crate::linalg::{solve_hpd, CgReport};
use crate::mesh::{ConicalDescriptor, CornerDescriptor, TriangleMesh};
use crate::modal::{assemble_matrix, form_against_basis, FieldSource};
use crate::special::{find_nu, legendre_p, legendre_p1};

/// Explicit non-H¹ field carrying the leading singular behavior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrincipalPart {
    /// Reentrant corner: `−(r/a)∇[ρ^α sin αφ]` (electric) or `−(r/a)∇[ρ^α cos αφ]` (magnetic).
    Edge { kind: SpaceKind, corner: CornerDescriptor },
    /// Conical vertex on the axis, electric `k = 0` only.
    Conical { cone: ConicalDescriptor, nu: f64 },
}

impl PrincipalPart {
    pub fn edge(kind: SpaceKind, corner: CornerDescriptor) -> Result<Self> {
        if !(corner.alpha > 0.5 && corner.alpha < 1.0) {
            return Err(Error::InvalidInput(format!(
                "corner exponent must lie in (1/2, 1), got {}",
                corner.alpha
            )));
        }
        if !(corner.a > 0.0) {
            return Err(Error::InvalidInput("reentrant corner on the axis".into()));
        }
        Ok(PrincipalPart::Edge { kind, corner })
    }

    pub fn conical(cone: ConicalDescriptor) -> Result<Self> {
        match find_nu(cone.aperture)? {
            Some(nu) => Ok(PrincipalPart::Conical { cone, nu }),
            None => Err(Error::InvalidInput(format!(
                "aperture {} does not produce a singularity",
                cone.aperture
            ))),
        }
    }

    /// `ρ^{α-1}`-type amplitude and angle `Θ = (α − 1)φ − φ0` at a point off the corner.
    fn edge_frame(corner: &CornerDescriptor, r: f64, z: f64) -> Result<(f64, f64)> {
        let (rho, phi) = corner.local_polar(r, z);
        if !(rho > 0.0) {
            return Err(Error::InvalidInput(format!(
                "principal part is singular at the corner ({r}, {z})"
            )));
        }
        let alpha = corner.alpha;
        Ok((alpha * rho.powf(alpha - 1.0), (alpha - 1.0) * phi - corner.phi0))
    }
}

fn real3(v: [f64; 3]) -> Vec3 {
    v.map(|x| C64::new(x, 0.0))
}

pub fn eval_principal(pp: &PrincipalPart, r: f64, z: f64) -> Result<Vec3> {
    match pp {
        PrincipalPart::Edge { kind, corner } => {
            let (amp, th) = PrincipalPart::edge_frame(corner, r, z)?;
            let s = -(r / corner.a) * amp;
            Ok(match kind {
                SpaceKind::Electric => real3([s * th.sin(), 0.0, s * th.cos()]),
                SpaceKind::Magnetic => real3([s * th.cos(), 0.0, -s * th.sin()]),
            })
        }
        PrincipalPart::Conical { cone, nu } => {
            let (rho, phi) = cone.local_polar(r, z);
            if !(rho > 0.0) {
                return Err(Error::InvalidInput("principal part is singular at the apex".into()));
            }
            let x = phi.cos();
            let p = legendre_p(*nu, x)?;
            let p1 = legendre_p1(*nu, x)?;
            let amp = nu * rho.powf(nu - 1.0);
            let (s, c) = phi.sin_cos();
            Ok(real3([amp * (p * c - p1 * s), 0.0, amp * (p * s + p1 * c)]))
        }
    }
}

/// Closed-form `(curl_k, div_k)` of an edge principal part.
pub fn eval_principal_curl_div(pp: &PrincipalPart, k: i32, r: f64, z: f64) -> Result<(Vec3, C64)> {
    match pp {
        PrincipalPart::Edge { kind, corner } => {
            let (amp, th) = PrincipalPart::edge_frame(corner, r, z)?;
            let s = amp / corner.a;
            let ik = C64::new(0.0, k as f64);
            let (sn, cs) = th.sin_cos();
            Ok(match kind {
                SpaceKind::Electric => (
                    [-ik * (s * cs), C64::new(s * cs, 0.0), ik * (s * sn)],
                    C64::new(-2.0 * s * sn, 0.0),
                ),
                SpaceKind::Magnetic => (
                    [ik * (s * sn), C64::new(-s * sn, 0.0), ik * (s * cs)],
                    C64::new(-2.0 * s * cs, 0.0),
                ),
            })
        }
        PrincipalPart::Conical { .. } => Err(Error::Unsupported(
            "curl and divergence of the conical principal part are not available".into(),
        )),
    }
}

impl FieldSource for PrincipalPart {
    fn value(&self, _plan: &QuadPlan, _elem: usize, q: &QuadPoint) -> Vec3 {
        eval_principal(self, q.r, q.z).expect("quadrature point away from the singular point")
    }

    fn curl_div(&self, _plan: &QuadPlan, k: i32, _elem: usize, q: &QuadPoint) -> (Vec3, C64) {
        eval_principal_curl_div(self, k, q.r, q.z).expect("edge principal part at an interior point")
    }
}

/// Singular complement basis function of one mode and space.
#[derive(Debug, Clone)]
pub struct SingularBasis {
    pub k: i32,
    pub kind: SpaceKind,
    pub principal: PrincipalPart,
    /// Regular part, including the lifted boundary values.
    pub regular: ModeField,
    pub report: CgReport,
}

impl SingularBasis {
    /// Nodal samples of the total field; the principal part is taken as zero at
    /// the corner vertex, where its constrained trace vanishes.
    pub fn nodal_total(&self, mesh: &TriangleMesh) -> ModeField {
        let mut out = self.regular.clone();
        for (v, p) in mesh.vertices.iter().enumerate() {
            if let Ok(s) = eval_principal(&self.principal, p[0], p[1]) {
                for c in 0..3 {
                    out.values[v][c] += s[c];
                }
            }
        }
        out
    }
}

impl FieldSource for SingularBasis {
    fn value(&self, plan: &QuadPlan, elem: usize, q: &QuadPoint) -> Vec3 {
        let a = self.regular.value(plan, elem, q);
        let b = self.principal.value(plan, elem, q);
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }

    fn curl_div(&self, plan: &QuadPlan, k: i32, elem: usize, q: &QuadPoint) -> (Vec3, C64) {
        let (ca, da) = self.regular.curl_div(plan, k, elem, q);
        let (cb, db) = self.principal.curl_div(plan, k, elem, q);
        ([ca[0] + cb[0], ca[1] + cb[1], ca[2] + cb[2]], da + db)
    }
}

/// Singular basis for `|k| ≤ 2`; higher modes reuse the `|k| = 2` basis.
pub fn compute_basis(
    mesh: &TriangleMesh,
    plan: &QuadPlan,
    corner: &CornerDescriptor,
    k: i32,
    kind: SpaceKind,
    tol: f64,
) -> Result<SingularBasis> {
    if k.abs() > 2 {
        return Err(Error::InvalidInput(format!(
            "singular bases are computed for |k| <= 2 only, got k = {k}"
        )));
    }
    compute_basis_any_mode(mesh, plan, corner, k, kind, tol)
}

/// Same as [`compute_basis`] without the mode restriction, for comparisons.
pub fn compute_basis_any_mode(
    mesh: &TriangleMesh,
    plan: &QuadPlan,
    corner: &CornerDescriptor,
    k: i32,
    kind: SpaceKind,
    tol: f64,
) -> Result<SingularBasis> {
    if !corner.is_reentrant() {
        return Err(Error::InvalidInput("corner is not reentrant".into()));
    }
    let principal = PrincipalPart::edge(kind, *corner)?;
    let cons = build_constraints(mesh, k, kind)?;
    let lift = lift_boundary(mesh, &cons, |r, z| match eval_principal(&principal, r, z) {
        Ok(s) => s.map(|c| -c),
        Err(_) => ZERO3,
    })?;
    let matrix = assemble_matrix(plan, &cons);
    let from_principal = form_against_basis(plan, &cons, &principal)?;
    let from_lift = form_against_basis(plan, &cons, &lift)?;
    let rhs: Vec<C64> = from_principal
        .iter()
        .zip(&from_lift)
        .map(|(a, b)| -(a + b))
        .collect();
    let (x, report) = solve_hpd(&matrix, &rhs, tol, None)?;
    let regular = cons.expand(&x, Some(&lift));
    Ok(SingularBasis {
        k,
        kind,
        principal,
        regular,
        report,
    })
}

/// Dimension of the singular complement: one per reentrant corner, plus one
/// per singular conical vertex for the electric field at `k = 0`.
pub fn singular_dimensions(
    corners: &[CornerDescriptor],
    cones: &[ConicalDescriptor],
    kind: SpaceKind,
    k: i32,
) -> Result<usize> {
    let mut n = corners.iter().filter(|c| c.is_reentrant()).count();
    if kind == SpaceKind::Electric && k == 0 {
        for cone in cones {
            if find_nu(cone.aperture)?.is_some() {
                n += 1;
            }
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_lshape, LShape};
    use crate::modal::{curl_jet, div_jet, form_a, Jet};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn corner(phi0: f64, a: f64) -> CornerDescriptor {
        CornerDescriptor {
            corner_vertex: 0,
            position: [a, 0.0],
            interior_angle: 1.5 * PI,
            alpha: 2.0 / 3.0,
            phi0,
            a,
        }
    }

    #[test]
    fn closed_form_examples() {
        let c = corner(0.0, 1.0);
        let se = PrincipalPart::edge(SpaceKind::Electric, c).unwrap();
        let s = PrincipalPart::edge(SpaceKind::Magnetic, c).unwrap();
        let v = eval_principal(&se, 2.0, 0.0).unwrap();
        // ρ = 1, φ = 0 at r = a + 1, but the amplitude carries r/a = 2.
        assert!((v[2].re + 4.0 / 3.0).abs() < 1e-15 && v[0].norm() < 1e-15);
        let c1 = CornerDescriptor { position: [0.0, 0.0], a: 1.0, ..c };
        let se = PrincipalPart::Edge { kind: SpaceKind::Electric, corner: c1 };
        let s1 = PrincipalPart::Edge { kind: SpaceKind::Magnetic, corner: c1 };
        let v = eval_principal(&se, 1.0, 0.0).unwrap();
        assert!((v[2].re + 2.0 / 3.0).abs() < 1e-15 && v[0].norm() < 1e-15 && v[1].norm() == 0.0);
        let v = eval_principal(&s1, 1.0, 0.0).unwrap();
        assert!((v[0].re + 2.0 / 3.0).abs() < 1e-15 && v[2].norm() < 1e-15);
        let (_, d) = eval_principal_curl_div(&se, 1, 1.0, 0.0).unwrap();
        assert!(d.norm() < 1e-15);
        let (_, d) = eval_principal_curl_div(&s1, 1, 1.0, 0.0).unwrap();
        assert!((d.re + 4.0 / 3.0).abs() < 1e-15);
        assert!(eval_principal(&s, 1.0, 0.0).is_err());
    }

    #[test]
    fn conical_identity_at_degree_one() {
        let cone = ConicalDescriptor::new(0.0, 2.5).unwrap();
        let pp = PrincipalPart::Conical { cone, nu: 1.0 };
        for phi in [0.3f64, 1.0, 2.0] {
            let (r, z) = (2.0 * phi.sin(), 2.0 * phi.cos());
            let v = eval_principal(&pp, r, z).unwrap();
            assert!((v[0].re - (2.0 * phi).cos()).abs() < 1e-12);
            assert!((v[2].re - (2.0 * phi).sin()).abs() < 1e-12);
        }
        assert!(matches!(
            eval_principal_curl_div(&pp, 0, 1.0, 1.0),
            Err(Error::Unsupported(_))
        ));
        assert!(PrincipalPart::conical(cone).is_ok());
        assert!(PrincipalPart::conical(ConicalDescriptor::new(0.0, 1.0).unwrap()).is_err());
    }

    /// Central differences of the principal part pushed through the mode-k operator formulas.
    pub(crate) fn fd_curl_div(pp: &PrincipalPart, k: i32, r: f64, z: f64) -> (Vec3, C64) {
        let h = 1e-6;
        let f = |r: f64, z: f64| eval_principal(pp, r, z).unwrap();
        let (rp, rm, zp, zm) = (f(r + h, z), f(r - h, z), f(r, z + h), f(r, z - h));
        let jet = Jet {
            val: f(r, z),
            dr: [0, 1, 2].map(|c| (rp[c] - rm[c]) / (2.0 * h)),
            dz: [0, 1, 2].map(|c| (zp[c] - zm[c]) / (2.0 * h)),
        };
        (curl_jet(k, r, &jet), div_jet(k, r, &jet))
    }

    #[test]
    fn analytic_operators_match_finite_differences() {
        let (_, c) = gen_lshape(LShape::default(), 0.1).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        for kind in [SpaceKind::Electric, SpaceKind::Magnetic] {
            let pp = PrincipalPart::edge(kind, c).unwrap();
            for _ in 0..100 {
                let (r, z) = loop {
                    let r: f64 = rng.gen_range(0.05..1.0);
                    let z: f64 = rng.gen_range(0.0..1.0);
                    let inside = !(r > 0.5 && z > 0.5);
                    if inside && (r - 0.5).hypot(z - 0.5) > 0.05 {
                        break (r, z);
                    }
                };
                let k = rng.gen_range(-2..=2);
                let (ca, da) = eval_principal_curl_div(&pp, k, r, z).unwrap();
                let (cf, df) = fd_curl_div(&pp, k, r, z);
                let scale = ca.iter().map(|x| x.norm()).fold(da.norm(), f64::max);
                for i in 0..3 {
                    assert!((ca[i] - cf[i]).norm() <= 1e-5 * scale, "{kind:?} k={k} ({r},{z})");
                }
                assert!((da - df).norm() <= 1e-5 * scale);
            }
        }
    }

    #[test]
    fn blow_up_rate() {
        let (_, c) = gen_lshape(LShape::default(), 0.1).unwrap();
        let pp = PrincipalPart::edge(SpaceKind::Magnetic, c).unwrap();
        // ray into the domain at φ = 3π/4 from the outgoing edge
        let dir = c.phi0 + 0.75 * PI;
        let at = |rho: f64| {
            let v = eval_principal(&pp, c.position[0] + rho * dir.cos(), c.position[1] + rho * dir.sin()).unwrap();
            v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
        };
        let rho = 1e-3 * 2f64.sqrt();
        let ratio = at(rho / 2.0) / at(rho);
        assert!((ratio / 2f64.powf(1.0 - c.alpha) - 1.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn traces_vanish_on_corner_edges() {
        let (_, c) = gen_lshape(LShape::default(), 0.1).unwrap();
        let se = PrincipalPart::edge(SpaceKind::Electric, c).unwrap();
        let s = PrincipalPart::edge(SpaceKind::Magnetic, c).unwrap();
        for t in [0.1, 0.3, 0.45] {
            // vertical edge r = 0.5, z > 0.5 and horizontal edge z = 0.5, r > 0.5
            let v = eval_principal(&se, 0.5, 0.5 + t).unwrap();
            assert!(v[2].norm() < 1e-14);
            let v = eval_principal(&se, 0.5 + t, 0.5).unwrap();
            assert!(v[0].norm() < 1e-14);
            let v = eval_principal(&s, 0.5, 0.5 + t).unwrap();
            assert!(v[0].norm() < 1e-14);
            let v = eval_principal(&s, 0.5 + t, 0.5).unwrap();
            assert!(v[2].norm() < 1e-14);
        }
    }

    #[test]
    fn basis_is_homogeneous_and_mode_zero_real() {
        let (mesh, c) = gen_lshape(LShape::default(), 0.125).unwrap();
        let plan = QuadPlan::with_corners(&mesh, &[c]);
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        for (k, kind) in [(0, SpaceKind::Magnetic), (1, SpaceKind::Electric), (-2, SpaceKind::Magnetic)] {
            let b = compute_basis(&mesh, &plan, &c, k, kind, 1e-11).unwrap();
            let cons = build_constraints(&mesh, k, kind).unwrap();
            let nb = form_a(&plan, k, &b, &b).re.sqrt();
            for _ in 0..10 {
                let x: Vec<C64> = (0..cons.n_free()).map(|_| C64::new(rng.gen(), rng.gen())).collect();
                let v = cons.expand(&x, None);
                let nv = form_a(&plan, k, &v, &v).re.sqrt();
                assert!(form_a(&plan, k, &b, &v).norm() <= 1e-8 * nb * nv);
            }
            if k == 0 {
                assert!(b.regular.values.iter().flatten().all(|x| x.im.abs() <= 1e-10 * b.regular.max_abs()));
            }
        }
        assert!(compute_basis(&mesh, &plan, &c, 3, SpaceKind::Magnetic, 1e-10).is_err());
    }

    #[test]
    fn dimensions() {
        let (_, c) = gen_lshape(LShape::default(), 0.1).unwrap();
        let cone = ConicalDescriptor::new(0.0, 2.5).unwrap();
        for k in -3..=3 {
            for kind in [SpaceKind::Electric, SpaceKind::Magnetic] {
                assert_eq!(singular_dimensions(&[c], &[], kind, k).unwrap(), 1);
                let extra = usize::from(k == 0 && kind == SpaceKind::Electric);
                assert_eq!(singular_dimensions(&[c], &[cone], kind, k).unwrap(), 1 + extra);
            }
        }
        let narrow = ConicalDescriptor::new(0.0, 2.0).unwrap();
        assert_eq!(singular_dimensions(&[c], &[narrow], SpaceKind::Electric, 0).unwrap(), 1);
    }
}
