//! Finite-difference stencils for holomorphic functions of one complex
//! variable. Steps are taken along the real axis.

use crate::error::Result;
use num_complex::Complex64;

/// Central difference (f(x+h) − f(x−h))/2h.
pub fn central_first<F>(f: &F, x: Complex64, h: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// Central difference at steps h and h/2 combined to cancel the h² term.
pub fn richardson_first<F>(f: &F, x: Complex64, h: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let d1 = central_first(f, x, h)?;
    let d2 = central_first(f, x, h / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Five-point first derivative from samples at x−2h, x−h, x+h, x+2h.
pub fn five_point_first(s: &[Complex64; 5], h: f64) -> Complex64 {
    (s[0] - 8.0 * s[1] + 8.0 * s[3] - s[4]) / (12.0 * h)
}

/// Five-point second derivative from samples at x−2h, …, x+2h.
pub fn five_point_second(s: &[Complex64; 5], h: f64) -> Complex64 {
    (-s[0] + 16.0 * s[1] - 30.0 * s[2] + 16.0 * s[3] - s[4]) / (12.0 * h * h)
}

/// Richardson combination of two estimates of order p at steps h and h/2.
pub fn richardson(coarse: Complex64, fine: Complex64, order: i32) -> Complex64 {
    let w = 2f64.powi(order);
    (w * fine - coarse) / (w - 1.0)
}
