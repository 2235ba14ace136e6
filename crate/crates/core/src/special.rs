//! Legendre functions of real degree and the conical-singularity thresholds.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default relative truncation threshold of the hypergeometric series.
pub const SERIES_TOL: f64 = 1e-15;
const SERIES_MAX_TERMS: usize = 100_000;
const ROOT_TOL: f64 = 1e-8;

/// Gauss series `F(a, b; c; t)` for `0 <= t < 1`.
fn hyp2f1(a: f64, b: f64, c: f64, t: f64, tol: f64) -> Result<f64> {
    let mut sum = 1.0;
    let mut term = 1.0;
    for n in 0..SERIES_MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * t;
        sum += term;
        if term == 0.0 || term.abs() <= tol * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NotConverged {
        iterations: SERIES_MAX_TERMS,
        residual: (term / sum).abs(),
    })
}

/// Legendre function of the first kind `P_ν(x)` for real degree ν and `x ∈ (-1, 1]`.
pub fn legendre_p(nu: f64, x: f64) -> Result<f64> {
    legendre_p_with_tol(nu, x, SERIES_TOL)
}

pub fn legendre_p_with_tol(nu: f64, x: f64, tol: f64) -> Result<f64> {
    if !(x > -1.0 && x <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "Legendre argument must lie in (-1, 1], got {x}"
        )));
    }
    hyp2f1(-nu, nu + 1.0, 1.0, 0.5 * (1.0 - x), tol)
}

/// Derivative `dP_ν/dx` from `(1 - x²) P_ν' = ν (P_{ν-1} - x P_ν)`.
pub fn legendre_p_deriv(nu: f64, x: f64) -> Result<f64> {
    if !(x > -1.0 && x < 1.0) {
        return Err(Error::InvalidInput(format!(
            "Legendre derivative needs x in (-1, 1), got {x}"
        )));
    }
    let p = legendre_p(nu, x)?;
    let pm = legendre_p(nu - 1.0, x)?;
    Ok(nu * (pm - x * p) / (1.0 - x * x))
}

/// Associated Legendre function of order one, `P¹_ν(x) = (1 - x²)^{1/2} dP_ν/dx`
/// (Ferrers convention, no Condon–Shortley phase). Returns exactly 0 at `x = 1`.
pub fn legendre_p1(nu: f64, x: f64) -> Result<f64> {
    if x == 1.0 {
        return Ok(0.0);
    }
    if !(x > -1.0 && x < 1.0) {
        return Err(Error::InvalidInput(format!(
            "order-one Legendre function needs x in (-1, 1], got {x}"
        )));
    }
    let p = legendre_p(nu, x)?;
    let pm = legendre_p(nu - 1.0, x)?;
    Ok(nu * (pm - x * p) / (1.0 - x * x).sqrt())
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::InvalidInput(format!(
            "no sign change on [{lo}, {hi}] ({flo:.3e}, {fhi:.3e})"
        )));
    }
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root β ∈ (1, 2) of `P_{1/2}(cos(π/β)) = 0`; a conical vertex is singular
/// for the electric field when its aperture exceeds π/β.
pub fn find_beta() -> Result<f64> {
    find_beta_with_tol(SERIES_TOL)
}

pub fn find_beta_with_tol(series_tol: f64) -> Result<f64> {
    // β = 1 puts the argument at x = -1 where the series diverges.
    bisect(1.05, 2.0, |b| legendre_p_with_tol(0.5, (PI / b).cos(), series_tol))
}

/// Legendre degree ν ∈ (0, 1/2) with `P_ν(cos aperture) = 0`, or `None` when
/// the aperture does not exceed π/β.
pub fn find_nu(aperture: f64) -> Result<Option<f64>> {
    if !(aperture > 0.0 && aperture < PI) {
        return Err(Error::InvalidInput(format!(
            "aperture must lie in (0, pi), got {aperture}"
        )));
    }
    let beta = find_beta()?;
    if aperture <= PI / beta {
        return Ok(None);
    }
    let x = aperture.cos();
    bisect(0.0, 0.5, |nu| legendre_p(nu, x)).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn integer_degrees_match_polynomials() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-0.99..1.0);
            let exact = [
                1.0,
                x,
                0.5 * (3.0 * x * x - 1.0),
                0.5 * (5.0 * x * x * x - 3.0 * x),
            ];
            for (n, e) in exact.iter().enumerate() {
                let p = legendre_p(n as f64, x).unwrap();
                assert!((p - e).abs() < 1e-12, "n={n} x={x}: {p} vs {e}");
            }
        }
    }

    #[test]
    fn simple_values() {
        assert!((legendre_p(1.0, 0.3).unwrap() - 0.3).abs() < 1e-15);
        for nu in [0.0, 0.25, 0.5, 1.7, 3.0] {
            assert_eq!(legendre_p(nu, 1.0).unwrap(), 1.0);
        }
        assert!((legendre_p1(1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(legendre_p1(1.0, 1.0).unwrap(), 0.0);
        assert!(legendre_p(0.5, -1.0).is_err());
        assert!(legendre_p(0.5, 1.5).is_err());
    }

    #[test]
    fn threshold_root() {
        let x = (PI / 1.3771).cos();
        assert!(legendre_p(0.5, x).unwrap().abs() < 1e-3);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let step = 1e-6;
        for nu in [0.3, 0.5, 1.25, 2.0] {
            for i in 0..=40 {
                let x = -0.99 + 1.98 * i as f64 / 40.0;
                let fd = (legendre_p(nu, x + step).unwrap() - legendre_p(nu, x - step).unwrap())
                    / (2.0 * step);
                let d = legendre_p_deriv(nu, x).unwrap();
                assert!((d - fd).abs() <= 1e-6 * d.abs().max(1.0), "nu={nu} x={x}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn p1_matches_finite_difference_oracle() {
        let (nu, x, step) = (0.5, 0.5, 1e-6);
        let fd = (legendre_p(nu, x + step).unwrap() - legendre_p(nu, x - step).unwrap())
            / (2.0 * step);
        let expected = (1.0 - x * x).sqrt() * fd;
        let got = legendre_p1(nu, x).unwrap();
        assert!((got - expected).abs() <= 1e-6 * expected.abs());
    }

    #[test]
    fn beta_value() {
        let beta = find_beta().unwrap();
        assert!((beta - 1.3771).abs() < 5e-4, "beta = {beta}");
        let deg = (130.0 + 43.0 / 60.0) * PI / 180.0;
        assert!((PI / beta - deg).abs() < 1e-3);
        assert!(legendre_p(0.5, (PI / beta).cos()).unwrap().abs() < 1e-8);
        let loose = find_beta_with_tol(0.5 * SERIES_TOL).unwrap();
        assert!((loose - beta).abs() < 1e-8);
    }

    #[test]
    fn nu_thresholds() {
        assert_eq!(find_nu(0.5 * PI).unwrap(), None);
        let beta = find_beta().unwrap();
        let nu = find_nu(PI / beta + 1e-3).unwrap().unwrap();
        assert!((nu - 0.5).abs() < 0.05, "nu = {nu}");
        assert!(find_nu(0.0).is_err());
        assert!(find_nu(PI).is_err());
    }

    #[test]
    fn nu_matches_dense_scan() {
        let x = 2.8f64.cos();
        let mut prev = legendre_p(1e-4, x).unwrap();
        let mut root = None;
        for i in 2..5000 {
            let nu = i as f64 * 1e-4;
            let cur = legendre_p(nu, x).unwrap();
            if prev.signum() != cur.signum() {
                root = Some(nu - 0.5e-4);
                break;
            }
            prev = cur;
        }
        let root = root.expect("scan found no sign change");
        let nu = find_nu(2.8).unwrap().unwrap();
        assert!((nu - root).abs() <= 0.5e-4 + 1e-8, "{nu} vs {root}");
    }
}
