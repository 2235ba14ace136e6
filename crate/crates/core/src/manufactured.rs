//! Smooth closed-form mode fields on the unit meridian square `[0, 1]²`
//! satisfying the wall and axis conditions of each space, and the refinement
//! study built on them.

use crate::error::Result;
use crate::fem::{build_constraints, QuadPlan, QuadPoint, SpaceKind, C64, Vec3};
use crate::linalg::solve_hpd;
use crate::mesh::gen_rectangle;
use crate::modal::{assemble_load, assemble_matrix, curl_jet, div_jet, CurlDivOf, FieldSource, Jet};
use crate::solver::error_norms;

use std::f64::consts::PI;

/// Axial factor of a separable component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axial {
    /// `sin(πz)`
    Sin,
    /// `cos(πz)`
    Cos,
    /// `e^z`
    Exp,
}

impl Axial {
    fn eval(self, z: f64) -> (f64, f64) {
        match self {
            Axial::Sin => ((PI * z).sin(), PI * (PI * z).cos()),
            Axial::Cos => ((PI * z).cos(), -PI * (PI * z).sin()),
            Axial::Exp => (z.exp(), z.exp()),
        }
    }
}

/// `coeff · Σ c_j r^{p_j} · axial(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub coeff: C64,
    pub radial: Vec<(f64, i32)>,
    pub axial: Axial,
}

impl Component {
    fn jet(&self, r: f64, z: f64) -> (C64, C64, C64) {
        let (mut p, mut dp) = (0.0, 0.0);
        for &(c, e) in &self.radial {
            p += c * r.powi(e);
            if e != 0 {
                dp += c * e as f64 * r.powi(e - 1);
            }
        }
        let (a, da) = self.axial.eval(z);
        (self.coeff * (p * a), self.coeff * (dp * a), self.coeff * (p * da))
    }
}

/// Three separable components `(u_r, u_θ, u_z)` of a mode-`k` field.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothField {
    pub k: i32,
    pub kind: SpaceKind,
    pub comps: [Component; 3],
}

fn shift(poly: &[(f64, i32)], by: i32) -> Vec<(f64, i32)> {
    poly.iter().map(|&(c, e)| (c, e + by)).collect()
}

impl SmoothField {
    /// Field for mode `k` obeying the conditions of `kind` on the unit square.
    ///
    /// For `|k| ≥ 1` the meridian components carry `r^{|k|-1}` and satisfy
    /// `u_θ − i·sign(k)·u_r = O(r^{|k|+1})`, as the Fourier coefficients of a
    /// smooth Cartesian field do.
    pub fn new(k: i32, kind: SpaceKind) -> Self {
        let one = C64::new(1.0, 0.0);
        let is = C64::new(0.0, if k >= 0 { 1.0 } else { -1.0 });
        let plus = [(1.0, 0), (1.0, 2)];
        let minus = [(1.0, 0), (-1.0, 2)];
        let comp = |coeff, radial: Vec<(f64, i32)>, axial| Component {
            coeff,
            radial,
            axial,
        };
        let comps = match (k.abs(), kind) {
            (0, SpaceKind::Electric) => [
                comp(one, vec![(1.0, 1)], Axial::Sin),
                comp(one, shift(&minus, 1), Axial::Sin),
                comp(one, minus.to_vec(), Axial::Cos),
            ],
            (0, SpaceKind::Magnetic) => [
                comp(one, shift(&minus, 1), Axial::Exp),
                comp(one, vec![(1.0, 1)], Axial::Exp),
                comp(one, plus.to_vec(), Axial::Sin),
            ],
            (m, SpaceKind::Electric) => [
                comp(one, shift(&plus, m - 1), Axial::Sin),
                comp(is, shift(&minus, m - 1), Axial::Sin),
                comp(one, shift(&minus, m), Axial::Cos),
            ],
            (m, SpaceKind::Magnetic) => [
                comp(one, shift(&minus, m - 1), Axial::Exp),
                comp(is, shift(&plus, m - 1), Axial::Exp),
                comp(one, shift(&plus, m), Axial::Sin),
            ],
        };
        Self { k, kind, comps }
    }

    pub fn jet(&self, r: f64, z: f64) -> Jet {
        let mut j = Jet {
            val: crate::fem::ZERO3,
            dr: crate::fem::ZERO3,
            dz: crate::fem::ZERO3,
        };
        for c in 0..3 {
            let (v, dr, dz) = self.comps[c].jet(r, z);
            j.val[c] = v;
            j.dr[c] = dr;
            j.dz[c] = dz;
        }
        j
    }

    pub fn value_at(&self, r: f64, z: f64) -> Vec3 {
        self.jet(r, z).val
    }
}

impl FieldSource for SmoothField {
    fn value(&self, _plan: &QuadPlan, _elem: usize, q: &QuadPoint) -> Vec3 {
        self.value_at(q.r, q.z)
    }

    fn curl_div(&self, _plan: &QuadPlan, k: i32, _elem: usize, q: &QuadPoint) -> (Vec3, C64) {
        let j = self.jet(q.r, q.z);
        (curl_jet(k, q.r, &j), div_jet(k, q.r, &j))
    }
}

/// Errors of one refinement level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelError {
    pub h: f64,
    pub n_free: usize,
    pub l2: f64,
    pub energy: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub k: i32,
    pub kind: SpaceKind,
    pub levels: Vec<LevelError>,
    pub l2_rate: f64,
    pub energy_rate: f64,
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_rate(hs: &[f64], errs: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Solves `a_k(u_h, v) = (curl_k u, curl_k v) + (div_k u, div_k v)` on the unit
/// square for each mesh size and reports L²₁ and energy errors against `u`.
pub fn convergence_study(k: i32, kind: SpaceKind, hs: &[f64], tol: f64) -> Result<ConvergenceStudy> {
    let exact = SmoothField::new(k, kind);
    let mut levels = Vec::with_capacity(hs.len());
    for &h in hs {
        let mesh = gen_rectangle(0.0, 1.0, 0.0, 1.0, h)?;
        let plan = QuadPlan::new(&mesh);
        let cons = build_constraints(&mesh, k, kind)?;
        let a = assemble_matrix(&plan, &cons);
        let load = assemble_load(&plan, &cons, &CurlDivOf { src: &exact, k })?;
        let (x, report) = solve_hpd(&a, &load, tol, None)?;
        let uh = cons.expand(&x, None);
        let (l2, energy) = error_norms(&plan, k, &uh, &exact);
        levels.push(LevelError {
            h,
            n_free: cons.n_free(),
            l2,
            energy,
            iterations: report.iterations,
        });
    }
    let hv: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let l2_rate = fitted_rate(&hv, &levels.iter().map(|l| l.l2).collect::<Vec<_>>());
    let energy_rate = fitted_rate(&hv, &levels.iter().map(|l| l.energy).collect::<Vec<_>>());
    Ok(ConvergenceStudy {
        k,
        kind,
        levels,
        l2_rate,
        energy_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{interpolate, ModeField};

    #[test]
    fn fields_meet_boundary_conditions() {
        let mesh = gen_rectangle(0.0, 1.0, 0.0, 1.0, 0.1).unwrap();
        for k in -3..=3 {
            for kind in [SpaceKind::Electric, SpaceKind::Magnetic] {
                let f = SmoothField::new(k, kind);
                let cons = build_constraints(&mesh, k, kind).unwrap();
                let nodal = ModeField {
                    k,
                    values: mesh.vertices.iter().map(|p| f.value_at(p[0], p[1])).collect(),
                };
                assert!(cons.is_satisfied(&nodal, 1e-14), "k={k} {kind:?}");
                let _ = interpolate(&mesh, &nodal, 0.5, 0.5).unwrap();
            }
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let h = 1e-6;
        for k in [-2, 0, 1, 3] {
            for kind in [SpaceKind::Electric, SpaceKind::Magnetic] {
                let f = SmoothField::new(k, kind);
                let (r, z) = (0.3, 0.7);
                let j = f.jet(r, z);
                for c in 0..3 {
                    let dr = (f.value_at(r + h, z)[c] - f.value_at(r - h, z)[c]) / (2.0 * h);
                    let dz = (f.value_at(r, z + h)[c] - f.value_at(r, z - h)[c]) / (2.0 * h);
                    assert!((dr - j.dr[c]).norm() < 1e-7);
                    assert!((dz - j.dz[c]).norm() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn curl_div_bounded_near_axis() {
        for k in -3..=3 {
            for kind in [SpaceKind::Electric, SpaceKind::Magnetic] {
                let f = SmoothField::new(k, kind);
                let j = f.jet(1e-9, 0.4);
                let c = curl_jet(k, 1e-9, &j);
                let d = div_jet(k, 1e-9, &j);
                assert!(c.iter().all(|x| x.norm() < 1e3) && d.norm() < 1e3, "k={k} {kind:?}");
            }
        }
    }

    #[test]
    fn rate_fit() {
        let hs = [0.2, 0.1, 0.05];
        let errs: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
        assert!((fitted_rate(&hs, &errs) - 2.0).abs() < 1e-12);
    }
}
