//! Numerical self-checks of the whole pipeline, each returning a pass/fail
//! outcome with the measured quantities.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::Result;
use crate::fem::{build_constraints, interpolate, ConstraintSet, ModeField, QuadPlan, SpaceKind, C64, Vec3};
use crate::io::builtin_rhs;
use crate::manufactured::convergence_study;
use crate::mesh::{gen_lshape, ConicalDescriptor, LShape, TriangleMesh};
use crate::modal::{
    a_k_via_decomposition, assemble_matrix, curl_jet, div_jet, eval_curl_k, eval_div_k, eval_grad_k, form_a,
    grad_scalar, CurlDivOf, FieldSource, Jet, PointData, ShiftTerms,
};
use crate::singular::{compute_basis, compute_basis_any_mode, singular_dimensions};
use crate::solver::{
    analyze_nodal, error_norms, imaginary_ratio, sample_3d, solve_all, solve_mode_bordered, solve_mode_orthogonal,
    BorderedOptions, FourierRhs, FourierSolution, ModeProblem, ShiftCache, SolveOptions,
};
use crate::special::find_beta;

const KINDS: [SpaceKind; 2] = [SpaceKind::Electric, SpaceKind::Magnetic];
const SOLVER_TOL: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {:>2}: {} ({}) [{:.2} s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

fn timed(id: usize, name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckOutcome {
        id,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

fn within(outcome: CheckOutcome, limit: Duration) -> CheckOutcome {
    if outcome.elapsed <= limit {
        return outcome;
    }
    CheckOutcome {
        passed: false,
        detail: format!("{}; exceeded {:.0} s", outcome.detail, limit.as_secs_f64()),
        ..outcome
    }
}

fn rel(a: C64, b: C64, scale: f64) -> f64 {
    (a - b).norm() / scale.max(f64::MIN_POSITIVE)
}

fn random_c64(rng: &mut StdRng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_field(rng: &mut StdRng, cons: &ConstraintSet, n_vertices: usize) -> ModeField {
    let mut f = ModeField::zeros(cons.k, n_vertices);
    for v in f.values.iter_mut() {
        *v = [random_c64(rng), random_c64(rng), random_c64(rng)];
    }
    cons.apply(&mut f);
    f
}

fn energy(plan: &QuadPlan, k: i32, u: &dyn FieldSource) -> f64 {
    form_a(plan, k, u, u).re.max(0.0).sqrt()
}

fn l2(plan: &QuadPlan, u: &dyn FieldSource) -> f64 {
    crate::modal::l2_inner(plan, u, u).re.max(0.0).sqrt()
}

fn lshape(h: f64) -> Result<(TriangleMesh, crate::mesh::CornerDescriptor, QuadPlan)> {
    let (mesh, corner) = gen_lshape(LShape::default(), h)?;
    let plan = QuadPlan::with_corners(&mesh, &[corner]);
    Ok((mesh, corner, plan))
}

/// Threshold angle for conical singularities.
pub fn check_beta() -> CheckOutcome {
    let target = (130.0 + 43.0 / 60.0) * PI / 180.0;
    within(
        timed(1, "beta threshold", || {
            let beta = find_beta()?;
            let angle = PI / beta;
            let ok = (beta - 1.3771).abs() <= 5e-4 && (angle - target).abs() <= 1e-3;
            Ok((
                ok,
                format!("beta = {beta:.6}, pi/beta - 130deg43' = {:.2e} rad", angle - target),
            ))
        }),
        Duration::from_secs(1),
    )
}

/// Mode operators on P1 fields against central differences of the interpolant.
pub fn check_operators() -> CheckOutcome {
    within(
        timed(2, "mode operators vs finite differences", || {
            let (mesh, _, _) = lshape(0.1)?;
            let mut rng = StdRng::seed_from_u64(2);
            let mut worst = 0.0f64;
            for _ in 0..100 {
                let k = rng.gen_range(-3..=3);
                let mut u = ModeField::zeros(k, mesh.n_vertices());
                for v in u.values.iter_mut() {
                    *v = [random_c64(&mut rng), random_c64(&mut rng), random_c64(&mut rng)];
                }
                let w: Vec<C64> = (0..mesh.n_vertices()).map(|_| random_c64(&mut rng)).collect();
                let ws = ModeField {
                    k,
                    values: w.iter().map(|&x| [x, C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).collect(),
                };
                // interior point of a random triangle, away from its edges
                let t = rng.gen_range(0..mesh.n_triangles());
                let lam = loop {
                    let a: f64 = rng.gen_range(0.1..0.8);
                    let b: f64 = rng.gen_range(0.1..0.8);
                    if a + b <= 0.9 {
                        break [a, b, 1.0 - a - b];
                    }
                };
                let pts = mesh.triangle_points(t);
                let r = (0..3).map(|i| lam[i] * pts[i][0]).sum::<f64>();
                let z = (0..3).map(|i| lam[i] * pts[i][1]).sum::<f64>();
                let step = 1e-4 * mesh.area(t).sqrt();
                let jet_of = |f: &ModeField| -> Result<Jet> {
                    let (rp, rm) = (interpolate(&mesh, f, r + step, z)?, interpolate(&mesh, f, r - step, z)?);
                    let (zp, zm) = (interpolate(&mesh, f, r, z + step)?, interpolate(&mesh, f, r, z - step)?);
                    Ok(Jet {
                        val: interpolate(&mesh, f, r, z)?,
                        dr: [0, 1, 2].map(|c| (rp[c] - rm[c]) / (2.0 * step)),
                        dz: [0, 1, 2].map(|c| (zp[c] - zm[c]) / (2.0 * step)),
                    })
                };
                let ju = jet_of(&u)?;
                let jw = jet_of(&ws)?;
                let curl_fd = curl_jet(k, r, &ju);
                let div_fd = div_jet(k, r, &ju);
                let grad_fd = grad_scalar(k, r, jw.val[0], jw.dr[0], jw.dz[0]);
                let curl = eval_curl_k(&mesh, &u, k, r, z)?;
                let div = eval_div_k(&mesh, &u, k, r, z)?;
                let grad = eval_grad_k(&mesh, &w, k, r, z)?;
                let scale = |v: &Vec3| v.iter().map(|x| x.norm()).fold(0.0, f64::max);
                for c in 0..3 {
                    worst = worst.max(rel(curl[c], curl_fd[c], scale(&curl_fd)));
                    worst = worst.max(rel(grad[c], grad_fd[c], scale(&grad_fd)));
                }
                worst = worst.max(rel(div, div_fd, div_fd.norm()));
            }
            Ok((worst <= 1e-5, format!("max relative deviation {worst:.2e} over 100 samples")))
        }),
        Duration::from_secs(10),
    )
}

/// Assembled matrix, direct quadrature, component decomposition and mode
/// shift all give the same `a_k`.
pub fn check_assembly() -> CheckOutcome {
    within(
        timed(3, "assembly equivalence", || {
            let (mesh, _, plan) = lshape(0.1)?;
            let mut rng = StdRng::seed_from_u64(3);
            let mut worst = 0.0f64;
            for kind in KINDS {
                let cons2 = build_constraints(&mesh, 2, kind)?;
                let (u2, v2) = (
                    random_field(&mut rng, &cons2, mesh.n_vertices()),
                    random_field(&mut rng, &cons2, mesh.n_vertices()),
                );
                let shift = ShiftTerms::new(&plan, 2, &u2, &v2, false);
                for k in -2..=5 {
                    let cons = build_constraints(&mesh, k, kind)?;
                    let (u, v) = (
                        random_field(&mut rng, &cons, mesh.n_vertices()),
                        random_field(&mut rng, &cons, mesh.n_vertices()),
                    );
                    let direct = form_a(&plan, k, &u, &v);
                    let scale = energy(&plan, k, &u) * energy(&plan, k, &v);
                    let matrix = assemble_matrix(&plan, &cons);
                    let assembled = matrix.form(&cons.extract(&v), &cons.extract(&u));
                    let split = a_k_via_decomposition(&plan, &u, &v, k);
                    worst = worst.max(rel(direct, assembled, scale)).max(rel(direct, split, scale));

                    let direct2 = form_a(&plan, k, &u2, &v2);
                    let scale2 = energy(&plan, k, &u2) * energy(&plan, k, &v2);
                    worst = worst.max(rel(direct2, shift.a_k(k), scale2));
                }
            }
            Ok((worst <= 1e-10, format!("max relative deviation {worst:.2e}, k = -2..5")))
        }),
        Duration::from_secs(60),
    )
}

/// Dense spectrum of the constrained stiffness matrix.
pub fn check_positive_definite() -> CheckOutcome {
    timed(4, "constrained matrix is Hermitian positive definite", || {
        let (mesh, corner) = gen_lshape(LShape::default(), 0.125)?;
        let plan = QuadPlan::with_corners(&mesh, &[corner]);
        let mut ok = true;
        let mut parts = Vec::new();
        for kind in KINDS {
            for k in 0..=2 {
                let cons = build_constraints(&mesh, k, kind)?;
                let a = assemble_matrix(&plan, &cons);
                let dense = a.to_dense();
                let n = dense.nrows();
                let herm = (&dense - dense.adjoint()).camax();
                let eig = dense.symmetric_eigenvalues();
                let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
                ok &= n <= 300 && herm <= 1e-12 * hi && lo > 0.0;
                parts.push(format!("{}{k}: n={n} min={lo:.2e}", &kind.as_str()[..1]));
            }
        }
        Ok((ok, parts.join(", ")))
    })
}

/// Refinement study with smooth closed-form solutions on the unit square.
pub fn check_convergence() -> CheckOutcome {
    within(
        timed(5, "manufactured convergence rates", || {
            let hs = [0.2, 0.1, 0.05];
            let runs: Vec<(i32, SpaceKind)> = [0, 1, -1, 2, -2, 3]
                .iter()
                .flat_map(|&k| KINDS.map(|kind| (k, kind)))
                .collect();
            use rayon::prelude::*;
            let studies: Vec<_> = runs
                .par_iter()
                .map(|&(k, kind)| convergence_study(k, kind, &hs, SOLVER_TOL))
                .collect::<Result<_>>()?;
            let mut ok = true;
            let (mut min_l2, mut min_en) = (f64::INFINITY, f64::INFINITY);
            for s in &studies {
                ok &= s.l2_rate >= 1.8 && s.energy_rate >= 0.9;
                min_l2 = min_l2.min(s.l2_rate);
                min_en = min_en.min(s.energy_rate);
            }
            Ok((ok, format!("min L2 rate {min_l2:.3}, min energy rate {min_en:.3}")))
        }),
        Duration::from_secs(300),
    )
}

/// The singular basis is `a_k`-orthogonal to the discrete regular space.
pub fn check_homogeneity() -> CheckOutcome {
    timed(6, "singular basis homogeneity", || {
        let (mesh, corner, plan) = lshape(0.1)?;
        let mut rng = StdRng::seed_from_u64(6);
        let mut worst = 0.0f64;
        for kind in KINDS {
            for k in -2..=2 {
                let basis = compute_basis(&mesh, &plan, &corner, k, kind, SOLVER_TOL)?;
                let cons = build_constraints(&mesh, k, kind)?;
                let nb = energy(&plan, k, &basis);
                for _ in 0..50 {
                    let v = random_field(&mut rng, &cons, mesh.n_vertices());
                    let cross = form_a(&plan, k, &basis, &v).norm();
                    worst = worst.max(cross / (nb * energy(&plan, k, &v)));
                }
            }
        }
        Ok((worst <= 1e-6, format!("max |a_k(y, v)| / (|y| |v|) = {worst:.2e}")))
    })
}

/// Data generated by the basis alone must be reproduced by it alone.
pub fn check_singular_only() -> CheckOutcome {
    timed(7, "singular-only solve", || {
        let (mesh, corner, plan) = lshape(0.1)?;
        let (mut worst_c, mut worst_r) = (0.0f64, 0.0f64);
        for kind in KINDS {
            for k in -2..=2 {
                let basis = Arc::new(compute_basis(&mesh, &plan, &corner, k, kind, SOLVER_TOL)?);
                let data = CurlDivOf { src: basis.as_ref(), k };
                let mut problem = ModeProblem::new(k, kind, &data);
                // div y integrates to a boundary flux that is not zero in general
                problem.require_mean_zero_g = false;
                let s = solve_mode_orthogonal(&mesh, &plan, &problem, Some(basis.clone()), SOLVER_TOL)?;
                worst_c = worst_c.max((s.c - 1.0).norm());
                worst_r = worst_r.max(energy(&plan, k, &s.regular) / energy(&plan, k, basis.as_ref()));
            }
        }
        Ok((
            worst_c <= 1e-4 && worst_r <= 1e-4,
            format!("max |C - 1| = {worst_c:.2e}, max regular/basis energy = {worst_r:.2e}"),
        ))
    })
}

fn k3_difference(h: f64, kind: SpaceKind) -> Result<f64> {
    let (mesh, corner, plan) = lshape(h)?;
    let data = PointData {
        f: |r: f64, z: f64| -> Vec3 {
            [
                C64::new(1.0 + z, 0.5 * r),
                C64::new(r * z, -1.0),
                C64::new((PI * r).cos(), z * z),
            ]
        },
        g: |r: f64, z: f64| C64::new(r - z, 0.0),
    };
    let problem = ModeProblem::new(3, kind, &data);
    let own = Arc::new(compute_basis_any_mode(&mesh, &plan, &corner, 3, kind, SOLVER_TOL)?);
    let orth = solve_mode_orthogonal(&mesh, &plan, &problem, Some(own), SOLVER_TOL)?;
    let reused = Arc::new(compute_basis(&mesh, &plan, &corner, 2, kind, SOLVER_TOL)?);
    let cache = ShiftCache::new(&mesh, &plan, reused)?;
    let bord = solve_mode_bordered(&mesh, &plan, &problem, &cache, BorderedOptions::default(), SOLVER_TOL)?;
    Ok(error_norms(&plan, 3, &bord, &orth).0 / l2(&plan, &orth))
}

/// Mode 3 through the reused mode-2 basis against its own basis.
pub fn check_bordered_k3() -> CheckOutcome {
    timed(8, "bordered vs orthogonal at k = 3", || {
        let mut ok = true;
        let mut parts = Vec::new();
        for kind in KINDS {
            let coarse = k3_difference(0.1, kind)?;
            let fine = k3_difference(0.05, kind)?;
            ok &= coarse <= 0.05 && fine <= coarse;
            parts.push(format!("{}: h=0.1 {coarse:.2e}, h=0.05 {fine:.2e}", kind.as_str()));
        }
        Ok((ok, parts.join("; ")))
    })
}

fn band_limited_solutions() -> Result<(TriangleMesh, Vec<FourierSolution>)> {
    let (mesh, corner, plan) = lshape(0.1)?;
    let rhs = FourierRhs::new(builtin_rhs("band3")?, 3, 13)?;
    let opts = SolveOptions {
        tol: SOLVER_TOL,
        ..Default::default()
    };
    let sols = KINDS
        .iter()
        .map(|&kind| solve_all(&mesh, &plan, Some(&corner), kind, &rhs, opts))
        .collect::<Result<_>>()?;
    Ok((mesh, sols))
}

fn max_dev(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| (0..3).map(move |c| (x[c] - y[c]).norm()))
        .fold(0.0, f64::max)
}

/// Largest nodal magnitude over all modes; some modes vanish for some data.
fn solution_scale(sol: &FourierSolution, mesh: &TriangleMesh) -> f64 {
    sol.modes
        .iter()
        .map(|m| m.nodal(mesh).max_abs())
        .fold(f64::MIN_POSITIVE, f64::max)
}

/// Synthesis followed by analysis returns the solved modes.
pub fn check_round_trip() -> CheckOutcome {
    timed(9, "Fourier round trip", || {
        let (mesh, sols) = band_limited_solutions()?;
        let (mut worst, mut worst_im) = (0.0f64, 0.0f64);
        for sol in &sols {
            let samples = sample_3d(sol, &mesh, 13)?;
            worst_im = worst_im.max(imaginary_ratio(&samples));
            let scale = solution_scale(sol, &mesh);
            for k in -3..=3 {
                let modal = sol.mode(k)?.nodal(&mesh);
                let back = analyze_nodal(&samples, k);
                worst = worst.max(max_dev(&back, &modal.values) / scale);
            }
        }
        Ok((
            worst <= 1e-10 && worst_im <= 1e-10,
            format!("max mode deviation {worst:.2e}, imaginary ratio {worst_im:.2e}"),
        ))
    })
}

/// Real data gives `w^{-k} = conj(w^k)`.
pub fn check_conjugate_symmetry() -> CheckOutcome {
    timed(10, "conjugate symmetry of modes", || {
        let (mesh, sols) = band_limited_solutions()?;
        let mut worst = 0.0f64;
        for sol in &sols {
            let scale = solution_scale(sol, &mesh);
            for k in 0..=3 {
                let plus = sol.mode(k)?.nodal(&mesh).conj();
                let minus = sol.mode(-k)?.nodal(&mesh);
                worst = worst.max(max_dev(&minus.values, &plus.values) / scale);
            }
        }
        Ok((worst <= 1e-8, format!("max relative deviation {worst:.2e}")))
    })
}

/// Singular complement dimensions with and without a conical vertex.
pub fn check_dimensions() -> CheckOutcome {
    timed(11, "singular complement dimensions", || {
        let (mesh, corner) = gen_lshape(LShape::default(), 0.25)?;
        let (_, corners) = crate::mesh::classify_boundary(&mesh)?;
        let cone = ConicalDescriptor::new(0.0, 2.5)?;
        let mut ok = corners.len() == 1 && corners[0].corner_vertex == corner.corner_vertex;
        let mut cone_counts = Vec::new();
        for kind in KINDS {
            for k in -5..=5 {
                ok &= singular_dimensions(&corners, &[], kind, k)? == 1;
                let with_cone = singular_dimensions(&corners, &[cone], kind, k)?;
                let expected = if kind == SpaceKind::Electric && k == 0 { 2 } else { 1 };
                ok &= with_cone == expected;
                if k == 0 {
                    cone_counts.push(format!("{} k=0: {with_cone}", kind.as_str()));
                }
            }
        }
        Ok((ok, format!("1 per mode on the L-shape; with cone {}", cone_counts.join(", "))))
    })
}

pub type Check = fn() -> CheckOutcome;

pub const CHECKS: [Check; 11] = [
    check_beta,
    check_operators,
    check_assembly,
    check_positive_definite,
    check_convergence,
    check_homogeneity,
    check_singular_only,
    check_bordered_k3,
    check_round_trip,
    check_conjugate_symmetry,
    check_dimensions,
];

pub fn run_all() -> Vec<CheckOutcome> {
    CHECKS.iter().map(|c| c()).collect()
}
