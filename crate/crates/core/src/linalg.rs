//! Dense complex helpers and the matrix exponential.
//!
//! The exponential uses scaling-and-squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13 (Higham 2005). It stays accurate
//! for the defective generators that appear when two decay rates coincide.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(a: &CMat) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `exp(A)` for a square complex matrix.
pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Numerical(format!(
            "matrix exponential of a non-square {}x{} matrix",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = norm1(a);
    if !norm.is_finite() {
        return Err(Error::Numerical(format!(
            "matrix exponential input has non-finite 1-norm ({norm})"
        )));
    }

    let eye = identity(n);
    for &(m, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            let (u, v) = pade_low(a, coeffs, &eye);
            return finish(u, v, 0);
        }
    }

    let s = ((norm / THETA_13).log2().ceil()).max(0.0) as i32;
    let scaled = a * C64::from(2f64.powi(-s));
    let (u, v) = pade_13(&scaled, &eye);
    finish(u, v, s as u32)
}

fn pade_low(a: &CMat, b: &[f64], eye: &CMat) -> (CMat, CMat) {
    let a2 = a * a;
    let mut even = eye * C64::from(b[0]);
    let mut odd = eye * C64::from(b[1]);
    let mut pow = eye.clone();
    let mut k = 2;
    while k < b.len() {
        pow = &pow * &a2;
        even += &pow * C64::from(b[k]);
        odd += &pow * C64::from(b[k + 1]);
        k += 2;
    }
    (a * odd, even)
}

fn pade_13(a: &CMat, eye: &CMat) -> (CMat, CMat) {
    let b = PADE_13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let s = |k: usize| C64::from(b[k]);
    let inner_u = &a6 * s(13) + &a4 * s(11) + &a2 * s(9);
    let u = a * (&a6 * inner_u + &a6 * s(7) + &a4 * s(5) + &a2 * s(3) + eye * s(1));
    let inner_v = &a6 * s(12) + &a4 * s(10) + &a2 * s(8);
    let v = &a6 * inner_v + &a6 * s(6) + &a4 * s(4) + &a2 * s(2) + eye * s(0);
    (u, v)
}

fn finish(u: CMat, v: CMat, squarings: u32) -> Result<CMat> {
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Numerical("Padé denominator is singular".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical(format!(
            "matrix exponential overflowed after {squarings} squarings"
        )));
    }
    Ok(r)
}
