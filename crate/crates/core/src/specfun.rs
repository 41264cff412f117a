//! Complex special functions: Jacobi theta functions, Dedekind eta,
//! Weierstrass ℘, Gauss ₂F₁ and complex Gamma.
//!
//! Conventions: q = e^{2πiτ} and
//! θ1(z|τ) = −i Σ_{k∈Z} (−1)^k e^{iπτ(k+1/2)²} e^{2πi(k+1/2)z},
//! so θ1(z+1) = −θ1(z) and θ1(z+τ) = −e^{−2πi(z+τ/2)} θ1(z).

use crate::error::{Error, Result};
use crate::numdiff;
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);
pub(crate) const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// Modular parameter of the torus, Im τ > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusModulus {
    tau: Complex64,
}

impl TorusModulus {
    pub fn new(tau: Complex64) -> Result<Self> {
        if tau.re.is_finite() && tau.im.is_finite() && tau.im > 0.0 {
            Ok(Self { tau })
        } else {
            Err(Error::InvalidModulus(tau))
        }
    }

    /// Convenience constructor for τ = re + i·im.
    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    /// The nome q = e^{2πiτ}.
    pub fn nome(&self) -> Complex64 {
        (TWO_PI_I * self.tau).exp()
    }

    /// τ shifted by a complex step (used by finite differences in τ).
    pub fn shifted(&self, dt: Complex64) -> Result<Self> {
        Self::new(self.tau + dt)
    }

    /// The modulus 2τ.
    pub fn doubled(&self) -> Self {
        Self { tau: 2.0 * self.tau }
    }

    /// Coordinates (x, y) with z = x + y·τ.
    pub fn lattice_coords(&self, z: Complex64) -> (f64, f64) {
        let y = z.im / self.tau.im;
        (z.re - y * self.tau.re, y)
    }

    /// Representative of z in the cell −1/2 ≤ x, y < 1/2 and the lattice
    /// vector that was removed: z = reduced + n + k·τ.
    pub fn reduce(&self, z: Complex64) -> (Complex64, i64, i64) {
        let (x, y) = self.lattice_coords(z);
        let k = y.round();
        let n = (x).round();
        (z - n - k * self.tau, n as i64, k as i64)
    }

    /// Euclidean distance from z to the nearest lattice point Z + τZ.
    pub fn lattice_distance(&self, z: Complex64) -> f64 {
        let (r, _, _) = self.reduce(z);
        let mut best = f64::INFINITY;
        for n in -1..=1 {
            for k in -1..=1 {
                let d = (r - n as f64 - k as f64 * self.tau).norm();
                best = best.min(d);
            }
        }
        best
    }
}

/// Truncation of a theta series: terms with |index| ≤ n_max (+1/2) are kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaTruncation {
    pub n_max: usize,
    pub tol: f64,
}

/// Safety factor applied to the first omitted term.
pub const THETA_SAFETY: f64 = 10.0;
/// Default tolerance relative to the largest term of the series.
pub const DEFAULT_THETA_TOL: f64 = 1e-17;
const THETA_N_CAP: usize = 4000;

impl ThetaTruncation {
    pub fn new(n_max: usize, tol: f64) -> Self {
        Self { n_max, tol }
    }

    /// Bound on |term| at index ν ≥ 0, relative to the largest term.
    fn term_log_bound(nu: f64, tau_im: f64, z_im: f64, deriv: u32) -> f64 {
        -PI * nu * nu * tau_im + 2.0 * PI * nu * z_im.abs() + deriv as f64 * (2.0 * PI * nu).max(1.0).ln()
    }

    fn log_peak(tau_im: f64, z_im: f64, deriv: u32) -> f64 {
        // The log bound is concave in ν; scan a window around its maximum.
        let centre = z_im.abs() / tau_im;
        let mut best = f64::NEG_INFINITY;
        let lo = (centre - 3.0).max(0.0);
        let mut nu = lo;
        while nu <= centre + 3.0 + 1.0 {
            best = best.max(Self::term_log_bound(nu, tau_im, z_im, deriv));
            nu += 0.25;
        }
        best.max(0.0)
    }

    /// Tail bound (relative to the peak term) for this truncation. Past the
    /// peak consecutive terms shrink at least geometrically, so twice the
    /// first omitted term bounds the tail on each side.
    pub fn tail_bound(&self, tau: &TorusModulus, z_im: f64, deriv: u32, half: bool) -> f64 {
        let offset = if half { 0.5 } else { 0.0 };
        let nu = self.n_max as f64 + 1.0 + offset;
        let tau_im = tau.tau().im;
        if nu < z_im.abs() / tau_im + 1.0 {
            return f64::INFINITY;
        }
        let log_b = Self::term_log_bound(nu, tau_im, z_im, deriv) - Self::log_peak(tau_im, z_im, deriv);
        4.0 * log_b.exp()
    }

    pub fn accepts(&self, tau: &TorusModulus, z_im: f64, deriv: u32, half: bool) -> bool {
        self.tail_bound(tau, z_im, deriv, half) * THETA_SAFETY < self.tol
    }

    /// Smallest truncation meeting `tol` at this (τ, Im z).
    pub fn auto(tau: &TorusModulus, z_im: f64, deriv: u32, half: bool, tol: f64) -> Result<Self> {
        let mut t = Self::new(1, tol);
        while t.n_max <= THETA_N_CAP {
            if t.accepts(tau, z_im, deriv, half) {
                return Ok(t);
            }
            t.n_max += 1;
        }
        t.n_max = THETA_N_CAP;
        Err(Error::TruncationUnreachable { n_max: THETA_N_CAP, bound: t.tail_bound(tau, z_im, deriv, half), tol })
    }
}

#[derive(Clone, Copy)]
enum Char {
    One,
    Two,
    Three,
}

fn theta_sum(kind: Char, z: Complex64, tau: &TorusModulus, deriv: u32, trunc: &ThetaTruncation) -> Result<Complex64> {
    let half = !matches!(kind, Char::Three);
    if !trunc.accepts(tau, z.im, deriv, half) {
        return Err(Error::TruncationUnreachable {
            n_max: trunc.n_max,
            bound: trunc.tail_bound(tau, z.im, deriv, half),
            tol: trunc.tol,
        });
    }
    let t = tau.tau();
    let offset = if half { 0.5 } else { 0.0 };
    let n = trunc.n_max as i64;
    let (lo, hi) = if half { (-n - 1, n) } else { (-n, n) };
    let mut sum = Complex64::new(0.0, 0.0);
    // Sum from the small terms inward so the large ones are added last.
    let mut ks: Vec<i64> = (lo..=hi).collect();
    ks.sort_by(|a, b| {
        let fa = (*a as f64 + offset).abs();
        let fb = (*b as f64 + offset).abs();
        fb.partial_cmp(&fa).unwrap()
    });
    for k in ks {
        let nu = k as f64 + offset;
        let mut term = (I * PI * t * nu * nu + TWO_PI_I * nu * z).exp();
        if deriv > 0 {
            term *= (TWO_PI_I * nu).powu(deriv);
        }
        if let Char::One = kind {
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            term *= -I * sign;
        }
        sum += term;
    }
    Ok(sum)
}

/// θ1(z|τ) or one of its first three z-derivatives.
pub fn theta1(z: Complex64, tau: &TorusModulus, deriv: u32) -> Result<Complex64> {
    if deriv > 3 {
        return Err(Error::InvalidInput(format!("theta1 derivative order {deriv} > 3")));
    }
    let tr = ThetaTruncation::auto(tau, z.im, deriv, true, DEFAULT_THETA_TOL)?;
    theta_sum(Char::One, z, tau, deriv, &tr)
}

/// θ1 with an explicit truncation; fails if the tail bound misses `tol`.
pub fn theta1_with(z: Complex64, tau: &TorusModulus, deriv: u32, trunc: &ThetaTruncation) -> Result<Complex64> {
    if deriv > 3 {
        return Err(Error::InvalidInput(format!("theta1 derivative order {deriv} > 3")));
    }
    theta_sum(Char::One, z, tau, deriv, trunc)
}

/// θ2(z|τ) = Σ_{ν∈Z+1/2} e^{iπν²τ+2πiνz} (kind 2) or θ3(z|τ) = Σ_{n∈Z}
/// e^{iπn²τ+2πinz} (kind 3).
pub fn theta_char(kind: u8, z: Complex64, tau: &TorusModulus) -> Result<Complex64> {
    let (c, half) = match kind {
        2 => (Char::Two, true),
        3 => (Char::Three, false),
        _ => return Err(Error::InvalidInput(format!("theta characteristic {kind} not in {{2,3}}"))),
    };
    let tr = ThetaTruncation::auto(tau, z.im, 0, half, DEFAULT_THETA_TOL)?;
    theta_sum(c, z, tau, 0, &tr)
}

/// The ratio θ1‴(0)/θ1′(0).
pub fn theta1_ratio_at_zero(tau: &TorusModulus) -> Result<Complex64> {
    Ok(theta1(Complex64::new(0.0, 0.0), tau, 3)? / theta1(Complex64::new(0.0, 0.0), tau, 1)?)
}

/// Dedekind η(τ) = (θ1′(0|τ)/2π)^{1/3}. Among the three cube roots the one
/// nearest q^{1/24}∏_{n≤K}(1−q^n) is returned, which is the branch that is
/// real positive on the imaginary axis and continuous in τ.
pub fn dedekind_eta(tau: &TorusModulus) -> Result<Complex64> {
    let w = theta1(Complex64::new(0.0, 0.0), tau, 1)? / (2.0 * PI);
    let root = w.powf(1.0 / 3.0);
    let q = tau.nome();
    let mut guide = (TWO_PI_I * tau.tau() / 24.0).exp();
    let mut qn = q;
    for _ in 0..400 {
        guide *= Complex64::new(1.0, 0.0) - qn;
        qn *= q;
        if qn.norm() < 1e-4 {
            break;
        }
    }
    let omega = (TWO_PI_I / 3.0).exp();
    let mut best = root;
    let mut cand = root;
    for _ in 0..3 {
        if (cand - guide).norm() < (best - guide).norm() {
            best = cand;
        }
        cand *= omega;
    }
    Ok(best)
}

/// Guard radius around lattice points for ℘.
pub const WP_GUARD: f64 = 1e-6;

/// Weierstrass ℘(z|τ) (deriv = 0) or ℘′(z|τ) (deriv = 1), normalised to
/// have vanishing constant term in its Laurent expansion at z = 0:
/// ℘ = −∂²_z log θ1(z) + (1/3)θ1‴(0)/θ1′(0).
pub fn weierstrass_p(z: Complex64, tau: &TorusModulus, deriv: u32) -> Result<Complex64> {
    weierstrass_p_guarded(z, tau, deriv, WP_GUARD)
}

pub fn weierstrass_p_guarded(z: Complex64, tau: &TorusModulus, deriv: u32, guard: f64) -> Result<Complex64> {
    if deriv > 1 {
        return Err(Error::InvalidInput(format!("weierstrass_p derivative order {deriv} > 1")));
    }
    if tau.lattice_distance(z) < guard {
        return Err(Error::LatticeSingularity(z));
    }
    let (zr, _, _) = tau.reduce(z);
    let t0 = theta1(zr, tau, 0)?;
    let t1 = theta1(zr, tau, 1)? / t0;
    let t2 = theta1(zr, tau, 2)? / t0;
    if deriv == 0 {
        Ok(t1 * t1 - t2 + theta1_ratio_at_zero(tau)? / 3.0)
    } else {
        let t3 = theta1(zr, tau, 3)? / t0;
        Ok(-(t3 - 3.0 * t2 * t1 + 2.0 * t1 * t1 * t1))
    }
}

/// Options for the Gauss series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyp2f1Options {
    /// Reject |x| ≥ 1 − margin.
    pub margin: f64,
    /// Stop once |term| < tol·|partial sum| twice in a row.
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for Hyp2f1Options {
    fn default() -> Self {
        Self { margin: 1e-3, tol: 1e-17, max_terms: 200_000 }
    }
}

fn is_nonpositive_integer(c: Complex64) -> bool {
    c.im == 0.0 && c.re <= 0.0 && c.re == c.re.round()
}

/// ₂F₁(a, b; c; x) by its Gauss series.
pub fn hyp2f1(a: Complex64, b: Complex64, c: Complex64, x: Complex64) -> Result<Complex64> {
    hyp2f1_with(a, b, c, x, &Hyp2f1Options::default())
}

pub fn hyp2f1_with(a: Complex64, b: Complex64, c: Complex64, x: Complex64, opt: &Hyp2f1Options) -> Result<Complex64> {
    if is_nonpositive_integer(c) {
        return Err(Error::ParameterPole { what: "c", value: c });
    }
    if x.norm() >= 1.0 - opt.margin {
        return Err(Error::NoConvergence(format!("|x| = {} >= 1 - {}", x.norm(), opt.margin)));
    }
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut small = 0;
    for k in 0..opt.max_terms {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        sum += term;
        if term.norm() <= opt.tol * sum.norm() {
            small += 1;
            if small == 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NoConvergence(format!("2F1 series stagnated after {} terms", opt.max_terms)))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Complex Γ(z) (Lanczos, g = 7) with reflection for Re z < 1/2.
pub fn gamma_fn(z: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(z) {
        return Err(Error::PoleHit(z));
    }
    if z.re < 0.5 {
        let s = (PI * z).sin();
        if s.norm() == 0.0 {
            return Err(Error::PoleHit(z));
        }
        return Ok(PI / (s * gamma_fn(1.0 - z)?));
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x)
}

/// G(1+x+n)/G(1+x) for integer n, as a product of Gamma values.
pub fn gamma_ratio_shift(x: Complex64, n: i64) -> Result<Complex64> {
    let mut r = Complex64::new(1.0, 0.0);
    if n > 0 {
        for k in 0..n {
            r *= gamma_fn(1.0 + x + k as f64)?;
        }
    } else {
        for k in 1..=(-n) {
            r /= gamma_fn(1.0 + x - k as f64)?;
        }
    }
    Ok(r)
}

/// One I_kl comparison of the A-cycle identities.
#[derive(Debug, Clone, PartialEq)]
pub struct PairIdentity {
    pub k: usize,
    pub l: usize,
    pub integral: Complex64,
    pub expected: Complex64,
    pub residual: f64,
}

/// Result of [`acycle_integral_identities`].
#[derive(Debug, Clone, PartialEq)]
pub struct AcycleReport {
    pub contour_height: f64,
    /// ∫₀¹ (θ1′/θ1)² dz along the contour.
    pub square_integral: Complex64,
    /// (1/3)θ1‴/θ1′ + (2πi)²/6.
    pub square_expected: Complex64,
    pub square_residual: f64,
    pub pairs: Vec<PairIdentity>,
    pub nodes: usize,
}

/// Contour height used by [`acycle_integral_identities`].
pub const ACYCLE_HEIGHT: f64 = -0.05;

/// Trapezoid rule on the horizontal line Im z = height, doubling the node
/// count until the change falls below `tol`.
fn periodic_quadrature<F>(f: F, height: f64, tol: f64) -> Result<(Complex64, usize)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let eval = |m: usize| -> Result<Complex64> {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..m {
            s += f(Complex64::new(j as f64 / m as f64, height))?;
        }
        Ok(s / m as f64)
    };
    let mut m = 64;
    let mut prev = eval(m)?;
    loop {
        m *= 2;
        let next = eval(m)?;
        let change = (next - prev).norm();
        if change <= tol * next.norm().max(1.0) {
            return Ok((next, m));
        }
        if m >= 1 << 17 {
            return Err(Error::QuadratureFailure { nodes: m, change });
        }
        prev = next;
    }
}

/// Numerical check of the two A-cycle integral identities
/// ∫₀¹ (θ1′/θ1)² = (1/3)θ1‴/θ1′ + (2πi)²/6 and
/// I_kl = ∫₀¹ (θ1′/θ1)(z−z_k)(θ1′/θ1)(z−z_l) = 2πi∂_τ log(θ1(z_k−z_l)/(η e^{−iπτ/3})),
/// integrating along Im z = `height`. All points must lie in one strip
/// between consecutive translates of the contour.
pub fn acycle_integral_identities(tau: &TorusModulus, z_points: &[Complex64], height: f64) -> Result<AcycleReport> {
    let ti = tau.tau().im;
    let strip = |z: Complex64| ((z.im - height) / ti).floor();
    if let Some(first) = z_points.first() {
        let s0 = strip(*first);
        for z in z_points {
            let frac = (z.im - height) / ti - strip(*z);
            if frac.abs() < 1e-3 || (1.0 - frac).abs() < 1e-3 {
                return Err(Error::InvalidInput(format!("point {z} lies on the integration contour")));
            }
            if strip(*z) != s0 {
                return Err(Error::InvalidInput("points straddle the integration contour".into()));
            }
        }
    }
    for (i, zi) in z_points.iter().enumerate() {
        for (j, zj) in z_points.iter().enumerate().skip(i + 1) {
            if tau.lattice_distance(zi - zj) < 1e-8 {
                return Err(Error::CoincidentPunctures(i, j));
            }
        }
    }
    let log_deriv = |z: Complex64| -> Result<Complex64> { Ok(theta1(z, tau, 1)? / theta1(z, tau, 0)?) };
    let qtol = 1e-14;
    let (sq, mut nodes) = periodic_quadrature(
        |z| {
            let r = log_deriv(z)?;
            Ok(r * r)
        },
        height,
        qtol,
    )?;
    let sq_expected = theta1_ratio_at_zero(tau)? / 3.0 + TWO_PI_I * TWO_PI_I / 6.0;
    let mut pairs = Vec::new();
    for (k, zk) in z_points.iter().enumerate() {
        for (l, zl) in z_points.iter().enumerate().skip(k + 1) {
            let (val, n) = periodic_quadrature(|z| Ok(log_deriv(z - zk)? * log_deriv(z - zl)?), height, qtol)?;
            nodes = nodes.max(n);
            let diff = zk - zl;
            let g = |t: Complex64| -> Result<Complex64> {
                let tm = TorusModulus::new(t)?;
                let eta = dedekind_eta(&tm)?;
                Ok(theta1(diff, &tm, 0)? / (eta * (-I * PI * t / 3.0).exp()))
            };
            // Logarithmic derivative as g′/g avoids branch cuts of log.
            let d = numdiff::richardson_first(&g, tau.tau(), 1e-3)? / g(tau.tau())?;
            let expected = TWO_PI_I * d;
            pairs.push(PairIdentity { k, l, integral: val, expected, residual: (val - expected).norm() });
        }
    }
    Ok(AcycleReport {
        contour_height: height,
        square_integral: sq,
        square_expected: sq_expected,
        square_residual: (sq - sq_expected).norm(),
        pairs,
        nodes,
    })
}
