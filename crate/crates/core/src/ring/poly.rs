//! Dense univariate polynomials, coefficients lowest degree first.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{EwmError, Result};

fn trim<T: Zero>(mut p: Vec<T>) -> Vec<T> {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

pub fn degree(p: &[BigInt]) -> usize {
    trim(p.to_vec()).len().saturating_sub(1)
}

pub fn derivative(p: &[BigInt]) -> Vec<BigInt> {
    if p.len() <= 1 {
        return vec![BigInt::zero()];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigInt::from(i))
        .collect()
}

pub fn eval_int(p: &[BigInt], x: &BigInt) -> BigInt {
    p.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
}

pub fn eval_complex(p: &[BigInt], z: Complex64) -> Complex64 {
    p.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + to_f64(c))
}

pub(crate) fn to_f64(c: &BigInt) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}

fn to_rational(p: &[BigInt]) -> Vec<BigRational> {
    p.iter().map(|c| BigRational::from_integer(c.clone())).collect()
}

/// Remainder of `a` modulo `b` over Q. `b` must be nonzero.
fn rem_rational(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let b = trim(b.to_vec());
    let mut r = trim(a.to_vec());
    let lead = b.last().expect("nonzero divisor").clone();
    while r.len() >= b.len() && !(r.len() == 1 && r[0].is_zero()) {
        let shift = r.len() - b.len();
        let factor = r.last().unwrap() / &lead;
        for (i, bc) in b.iter().enumerate() {
            r[i + shift] = &r[i + shift] - &factor * bc;
        }
        r.pop();
        r = trim(r);
        if r.is_empty() {
            r.push(BigRational::zero());
        }
    }
    r
}

fn is_zero_poly<T: Zero>(p: &[T]) -> bool {
    p.iter().all(Zero::is_zero)
}

/// Monic gcd over Q.
pub fn gcd_rational(a: &[BigInt], b: &[BigInt]) -> Vec<BigRational> {
    let mut x = trim(to_rational(a));
    let mut y = trim(to_rational(b));
    while !is_zero_poly(&y) {
        let r = rem_rational(&x, &y);
        x = y;
        y = r;
    }
    let lead = x.last().cloned().unwrap_or_else(BigRational::one);
    if lead.is_zero() {
        return x;
    }
    x.iter().map(|c| c / &lead).collect()
}

/// Exact division over Q followed by a check that the quotient is integral.
pub fn div_exact_int(a: &[BigInt], b: &[BigRational]) -> Result<Vec<BigInt>> {
    let a = trim(to_rational(a));
    let b = trim(b.to_vec());
    if a.len() < b.len() {
        return Err(EwmError::Internal("polynomial division with larger divisor".into()));
    }
    let lead = b.last().unwrap().clone();
    let mut r = a;
    let mut q = vec![BigRational::zero(); r.len() - b.len() + 1];
    for shift in (0..q.len()).rev() {
        let factor = &r[shift + b.len() - 1] / &lead;
        for (i, bc) in b.iter().enumerate() {
            r[i + shift] = &r[i + shift] - &factor * bc;
        }
        q[shift] = factor;
    }
    if !is_zero_poly(&r) {
        return Err(EwmError::Internal("polynomial division left a remainder".into()));
    }
    q.into_iter()
        .map(|c| {
            if c.is_integer() {
                Ok(c.to_integer())
            } else {
                Err(EwmError::Internal("quotient polynomial is not integral".into()))
            }
        })
        .collect()
}

pub fn is_squarefree(p: &[BigInt]) -> bool {
    gcd_rational(p, &derivative(p)).len() <= 1
}

/// p / gcd(p, p′), normalized monic. For a monic integer polynomial the
/// result is again integral.
pub fn squarefree_part(p: &[BigInt]) -> Result<Vec<BigInt>> {
    let g = gcd_rational(p, &derivative(p));
    let mut q = div_exact_int(p, &g)?;
    if q.last().is_some_and(Signed::is_negative) {
        q.iter_mut().for_each(|c| *c = -&*c);
    }
    if !q.last().is_some_and(One::is_one) {
        return Err(EwmError::Internal("squarefree part is not monic".into()));
    }
    Ok(q)
}

/// Sum of absolute values of the non-leading coefficients.
pub fn coefficient_weight(p: &[BigInt]) -> f64 {
    p[..p.len() - 1].iter().map(|c| to_f64(c).abs()).sum()
}

/// All complex roots of a monic squarefree integer polynomial, found by
/// Aberth–Ehrlich iteration and polished with Newton steps.
///
/// Roots are returned sorted by (real, imaginary) part on a 1e-9 grid so the
/// order is reproducible.
pub fn roots(p: &[BigInt], eps: f64) -> Result<Vec<Complex64>> {
    let p = trim(p.to_vec());
    let n = p.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![Complex64::new(-to_f64(&p[0]), 0.0)]);
    }
    let dp = derivative(&p);
    let bound = 1.0
        + p[..n]
            .iter()
            .map(|c| to_f64(c).abs())
            .fold(0.0_f64, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64) + 0.4;
            Complex64::from_polar(0.5 * bound, angle)
        })
        .collect();

    let mut converged = false;
    for _ in 0..2000 {
        let mut max_step = 0.0_f64;
        for i in 0..n {
            let f = eval_complex(&p, z[i]);
            let df = eval_complex(&dp, z[i]);
            if f.norm() == 0.0 {
                continue;
            }
            let ratio = f / df;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 {
            converged = true;
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let df = eval_complex(&dp, *zi);
            if df.norm() == 0.0 {
                break;
            }
            let step = eval_complex(&p, *zi) / df;
            if step.is_finite() {
                *zi -= step;
            }
        }
    }

    let tol = eps * (1.0 + coefficient_weight(&p));
    for zi in &z {
        // Rounding in Horner evaluation grows with |z|^n, so allow for it.
        let scale = zi.norm().max(1.0).powi(n as i32);
        let residual = eval_complex(&p, *zi).norm();
        if !zi.is_finite() || (residual > tol && residual > 1e-14 * scale * (1.0 + coefficient_weight(&p))) {
            return Err(EwmError::Numerics(format!(
                "root finder did not converge (residual {residual:e}, converged flag {converged})"
            )));
        }
    }
    for zi in z.iter_mut() {
        if zi.im.abs() < eps * zi.norm().max(1.0) {
            zi.im = 0.0;
        }
    }
    z.sort_by(|a, b| {
        let key = |c: &Complex64| ((c.re * 1e9).round() as i64, (c.im * 1e9).round() as i64);
        key(a).cmp(&key(b))
    });
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(c: &[i64]) -> Vec<BigInt> {
        c.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn squarefree_detection() {
        assert!(is_squarefree(&ints(&[1, 1, 1])));
        assert!(!is_squarefree(&ints(&[1, -2, 1])));
        assert!(is_squarefree(&ints(&[-3, 1])));
    }

    #[test]
    fn squarefree_part_of_square() {
        // (x^2 + 3x + 3)^2 = x^4 + 6x^3 + 15x^2 + 18x + 9
        let sq = ints(&[9, 18, 15, 6, 1]);
        assert_eq!(squarefree_part(&sq).unwrap(), ints(&[3, 3, 1]));
        // (x - 2)^2
        assert_eq!(squarefree_part(&ints(&[4, -4, 1])).unwrap(), ints(&[-2, 1]));
    }

    #[test]
    fn roots_of_cyclotomic_and_real_cases() {
        let r = roots(&ints(&[1, 1, 1]), 1e-12).unwrap();
        assert_eq!(r.len(), 2);
        for z in &r {
            assert!((z.norm() - 1.0).abs() < 1e-12);
            assert!((z.re + 0.5).abs() < 1e-12);
        }
        let r = roots(&ints(&[-2, 0, 0, 1]), 1e-12).unwrap();
        let real: Vec<_> = r.iter().filter(|z| z.im == 0.0).collect();
        assert_eq!(real.len(), 1);
        assert!((real[0].re - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn roots_of_degree_six() {
        // x^6 + 27: all roots have modulus sqrt(3)
        let r = roots(&ints(&[27, 0, 0, 0, 0, 0, 1]), 1e-12).unwrap();
        assert_eq!(r.len(), 6);
        for z in &r {
            assert!((z.norm() - 3f64.sqrt()).abs() < 1e-10);
        }
    }
}
