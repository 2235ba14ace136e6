//! Complex sparse storage, preconditioned conjugate gradients and the bordered
//! (rank-one augmented) solve.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::C64;

/// Compressed-row complex matrix, Hermitian by construction of its assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSparse {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl HermitianSparse {
    /// Sums duplicate entries in input order, so the result is deterministic.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, C64::new(1.0, 0.0))).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(p) => self.vals[span.start + p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = self.row(i).map(|(j, a)| a * x[j]).sum();
        });
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `xᴴ A y`.
    pub fn form(&self, x: &[C64], y: &[C64]) -> C64 {
        dot(x, &self.apply(y))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// `max |A_ij − conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// `aᴴ b`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `aᵀ b`.
pub fn dot_t(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// Final `‖b − Ax‖ / ‖b‖`.
    pub residual: f64,
    /// Preconditioned residual norm `(rᴴ D⁻¹ r)^{1/2}` at every iteration.
    pub history: Vec<f64>,
}

/// Jacobi-preconditioned CG for a Hermitian positive definite matrix.
/// `max_iter` defaults to `20·n`.
pub fn solve_hpd(
    a: &HermitianSparse,
    b: &[C64],
    tol: f64,
    max_iter: Option<usize>,
) -> Result<(Vec<C64>, CgReport)> {
    let n = a.n();
    assert_eq!(b.len(), n);
    let mut x = vec![C64::new(0.0, 0.0); n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((x, CgReport::default()));
    }
    if b.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("right-hand side".into()));
    }
    let inv_diag: Vec<f64> = a
        .diag()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            if d.re > 0.0 {
                Ok(1.0 / d.re)
            } else {
                Err(Error::Breakdown(format!("non-positive diagonal entry {d} at row {i}")))
            }
        })
        .collect::<Result<_>>()?;
    let max_iter = max_iter.unwrap_or(20 * n.max(1));
    let mut r = b.to_vec();
    let mut z: Vec<C64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re;
    let mut ap = vec![C64::new(0.0, 0.0); n];
    let mut report = CgReport {
        history: vec![rz.sqrt()],
        ..Default::default()
    };
    let mut rel = 1.0;
    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap).re;
        if !(pap > 0.0) {
            return Err(Error::Breakdown(format!(
                "search direction with non-positive curvature {pap:.3e} at iteration {it}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        rel = norm(&r) / bnorm;
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z).re;
        report.history.push(rz_new.sqrt());
        if rel <= tol {
            report.iterations = it;
            report.residual = rel;
            return Ok((x, report));
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + p[i] * beta;
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: rel,
    })
}

/// How the coupling row pairs with the regular unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// `yᴴ x`; keeps the augmented matrix Hermitian.
    Conjugate,
    /// `yᵀ x`.
    Transpose,
}

/// `K x + c y = F`, `⟨y, x⟩ + alpha c = f`.
#[derive(Debug, Clone)]
pub struct BorderedSystem {
    pub k: HermitianSparse,
    pub y: Vec<C64>,
    pub alpha: C64,
    pub rhs: Vec<C64>,
    pub f: C64,
}

#[derive(Debug, Clone)]
pub struct BorderedSolution {
    pub x: Vec<C64>,
    pub c: C64,
    pub schur: C64,
    pub reports: [CgReport; 2],
}

pub fn solve_bordered(sys: &BorderedSystem, tol: f64, pairing: Pairing) -> Result<BorderedSolution> {
    let n = sys.k.n();
    if sys.y.len() != n || sys.rhs.len() != n {
        return Err(Error::InvalidInput(format!(
            "bordered system sizes differ: K {n}, y {}, F {}",
            sys.y.len(),
            sys.rhs.len()
        )));
    }
    let pair = |a: &[C64], b: &[C64]| match pairing {
        Pairing::Conjugate => dot(a, b),
        Pairing::Transpose => dot_t(a, b),
    };
    let (w, rw) = solve_hpd(&sys.k, &sys.y, tol, None)?;
    let (v, rv) = solve_hpd(&sys.k, &sys.rhs, tol, None)?;
    let schur = sys.alpha - pair(&sys.y, &w);
    if !(schur.norm() >= 1e-14 * sys.alpha.norm()) || schur.norm() == 0.0 {
        return Err(Error::Degenerate(format!(
            "Schur complement {schur:.3e} vanishes relative to alpha {:.3e}",
            sys.alpha
        )));
    }
    let c = (sys.f - pair(&sys.y, &v)) / schur;
    let x = v.iter().zip(&w).map(|(v, w)| v - c * w).collect();
    Ok(BorderedSolution {
        x,
        c,
        schur,
        reports: [rw, rv],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rc(rng: &mut impl Rng) -> C64 {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    /// Dense `MᴴM + I`, stored sparse.
    fn random_hpd(n: usize, rng: &mut impl Rng) -> (HermitianSparse, DMatrix<C64>) {
        let m = DMatrix::from_fn(n, n, |_, _| rc(rng));
        let a = m.adjoint() * &m + DMatrix::identity(n, n);
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..n {
                trip.push((i, j, a[(i, j)]));
            }
        }
        (HermitianSparse::from_triplets(n, trip), a)
    }

    #[test]
    fn triplets_merge() {
        let one = C64::new(1.0, 0.0);
        let m = HermitianSparse::from_triplets(2, vec![(1, 0, one), (0, 0, one), (1, 0, C64::new(0.0, 2.0)), (0, 1, one)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 0), C64::new(1.0, 2.0));
        assert_eq!(m.get(1, 1), C64::new(0.0, 0.0));
    }

    #[test]
    fn identity_in_one_iteration() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        let b: Vec<C64> = (0..10).map(|_| rc(&mut rng)).collect();
        let (x, rep) = solve_hpd(&HermitianSparse::identity(10), &b, 1e-12, None).unwrap();
        assert_eq!(rep.iterations, 1);
        for (a, b) in x.iter().zip(&b) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_rhs() {
        let (x, rep) = solve_hpd(&HermitianSparse::identity(4), &[C64::new(0.0, 0.0); 4], 1e-10, None).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(x.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn cg_matches_dense_oracle() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        let (a, dense) = random_hpd(30, &mut rng);
        assert!(a.hermitian_defect() < 1e-12);
        let b: Vec<C64> = (0..30).map(|_| rc(&mut rng)).collect();
        let (x, rep) = solve_hpd(&a, &b, 1e-12, None).unwrap();
        let xd = dense.lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        let err: f64 = x.iter().zip(xd.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err <= 1e-8 * xd.norm(), "{err}");
        for w in rep.history.windows(11) {
            assert!(w[10] <= w[0]);
        }
    }

    #[test]
    fn cg_reports_nonconvergence_and_breakdown() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let (a, _) = random_hpd(30, &mut rng);
        let b: Vec<C64> = (0..30).map(|_| rc(&mut rng)).collect();
        match solve_hpd(&a, &b, 1e-14, Some(2)) {
            Err(Error::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-14);
            }
            other => panic!("{other:?}"),
        }
        let z = HermitianSparse::from_triplets(2, vec![(0, 0, C64::new(1.0, 0.0))]);
        assert!(matches!(solve_hpd(&z, &b[..2], 1e-10, None), Err(Error::Breakdown(_))));
    }

    fn bordered_dense(sys: &BorderedSystem) -> (Vec<C64>, C64) {
        let n = sys.k.n();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&sys.k.to_dense());
        for i in 0..n {
            m[(i, n)] = sys.y[i];
            m[(n, i)] = sys.y[i].conj();
        }
        m[(n, n)] = sys.alpha;
        let mut rhs = sys.rhs.clone();
        rhs.push(sys.f);
        let sol = m.lu().solve(&nalgebra::DVector::from_vec(rhs)).unwrap();
        (sol.iter().take(n).copied().collect(), sol[n])
    }

    #[test]
    fn bordered_decoupled_and_zero() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        let (k, _) = random_hpd(12, &mut rng);
        let rhs: Vec<C64> = (0..12).map(|_| rc(&mut rng)).collect();
        let sys = BorderedSystem {
            k: k.clone(),
            y: vec![C64::new(0.0, 0.0); 12],
            alpha: C64::new(2.0, 0.0),
            rhs: rhs.clone(),
            f: C64::new(1.0, 1.0),
        };
        let sol = solve_bordered(&sys, 1e-12, Pairing::Conjugate).unwrap();
        assert!((sol.c - C64::new(0.5, 0.5)).norm() < 1e-14);
        let (x, _) = solve_hpd(&k, &rhs, 1e-12, None).unwrap();
        assert!(norm(&x.iter().zip(&sol.x).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-12);

        let zero = BorderedSystem {
            y: (0..12).map(|_| rc(&mut rng)).collect(),
            rhs: vec![C64::new(0.0, 0.0); 12],
            f: C64::new(0.0, 0.0),
            alpha: C64::new(50.0, 0.0),
            k,
        };
        let sol = solve_bordered(&zero, 1e-12, Pairing::Conjugate).unwrap();
        assert_eq!(sol.c, C64::new(0.0, 0.0));
        assert!(sol.x.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn bordered_recovers_manufactured_solution() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let n = 40;
        let (k, _) = random_hpd(n, &mut rng);
        let y: Vec<C64> = (0..n).map(|_| rc(&mut rng)).collect();
        let x0: Vec<C64> = (0..n).map(|_| rc(&mut rng)).collect();
        let c0 = rc(&mut rng);
        let alpha = C64::new(5.0 * n as f64, 0.0);
        let rhs: Vec<C64> = k.apply(&x0).iter().zip(&y).map(|(a, y)| a + c0 * y).collect();
        let f = dot(&y, &x0) + alpha * c0;
        let sys = BorderedSystem { k, y, alpha, rhs, f };
        let sol = solve_bordered(&sys, 1e-13, Pairing::Conjugate).unwrap();
        assert!((sol.c - c0).norm() < 1e-8);
        let err: f64 = norm(&sol.x.iter().zip(&x0).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(err < 1e-8 * norm(&x0));

        let (xd, cd) = bordered_dense(&sys);
        assert!((sol.c - cd).norm() < 1e-8 * cd.norm());
        let err: f64 = norm(&sol.x.iter().zip(&xd).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(err < 1e-8 * norm(&xd));

        let t = solve_bordered(&sys, 1e-13, Pairing::Transpose).unwrap();
        assert!(t.c.re.is_finite());
    }

    #[test]
    fn bordered_degenerate() {
        let k = HermitianSparse::identity(1);
        let sys = BorderedSystem {
            k,
            y: vec![C64::new(1.0, 0.0)],
            alpha: C64::new(1.0, 0.0),
            rhs: vec![C64::new(1.0, 0.0)],
            f: C64::new(1.0, 0.0),
        };
        assert!(matches!(solve_bordered(&sys, 1e-12, Pairing::Conjugate), Err(Error::Degenerate(_))));
    }
}
