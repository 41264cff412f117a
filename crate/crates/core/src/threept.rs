//! Hypergeometric three-point solutions on the cylinder and the kernel
//! blocks of the one-punctured torus projector.

use crate::error::{Error, Result};
use crate::specfun::{gamma_fn, hyp2f1, TorusModulus, TWO_PI_I};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::ops::{Add, Mul, Sub};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn diag(a: Complex64, d: Complex64) -> Self {
        Self::new(a, ZERO, ZERO, d)
    }

    /// diag(e^{2πiau}, e^{−2πiau}).
    pub fn twist(a: Complex64, u: Complex64) -> Self {
        let e = (TWO_PI_I * a * u).exp();
        Self::diag(e, 1.0 / e)
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Inverse by the adjugate formula.
    pub fn inv(&self) -> Self {
        let d = self.det();
        let m = &self.0;
        Self::new(m[1][1] / d, -m[0][1] / d, -m[1][0] / d, m[0][0] / d)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    /// σ1·M·σ1.
    pub fn flip(&self) -> Self {
        let m = &self.0;
        Self::new(m[1][1], m[1][0], m[0][1], m[0][0])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(-ONE)
    }
}

/// How the Γ-ratio e^{2πiδν} enters Ỹ_out. `Inverted` exists only as a
/// negative control for the verification suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaNuConvention {
    #[default]
    Standard,
    Inverted,
}

/// Monodromy data of the one-punctured torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyData {
    /// A-cycle exponent.
    pub a: Complex64,
    /// Puncture exponent.
    pub m: Complex64,
    /// B-cycle parameter.
    pub nu: Complex64,
    /// U(1) twist of the Cauchy kernel.
    pub rho: Complex64,
    pub delta_nu: DeltaNuConvention,
}

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

impl MonodromyData {
    pub fn new(a: Complex64, m: Complex64, nu: Complex64, rho: Complex64) -> Result<Self> {
        for (name, v) in [("a", a), ("m", m), ("nu", nu), ("rho", rho)] {
            if !finite(v) {
                return Err(Error::InvalidMonodromy(format!("{name} = {v} is not finite")));
            }
        }
        let two_a = 2.0 * a;
        if two_a.im.abs() < 1e-12 && (two_a.re - two_a.re.round()).abs() < 1e-9 {
            return Err(Error::InvalidMonodromy(format!("2a = {two_a} is an integer")));
        }
        Ok(Self { a, m, nu, rho, delta_nu: DeltaNuConvention::Standard })
    }

    /// Real parameters, the common case in tests and configs.
    pub fn real(a: f64, m: f64, nu: f64, rho: f64) -> Result<Self> {
        Self::new(a.into(), m.into(), nu.into(), rho.into())
    }

    pub fn with_rho(mut self, rho: Complex64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_nu(mut self, nu: Complex64) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_delta_nu(mut self, c: DeltaNuConvention) -> Self {
        self.delta_nu = c;
        self
    }

    /// e^{2πiδν} = Γ(−2a)Γ(1+2a−m)/(Γ(1+2a)Γ(−2a−m)), inverted under the
    /// negative-control convention.
    pub fn delta_nu_phase(&self) -> Result<Complex64> {
        let (a, m) = (self.a, self.m);
        let r = gamma_fn(-2.0 * a)? * gamma_fn(1.0 + 2.0 * a - m)? / (gamma_fn(1.0 + 2.0 * a)? * gamma_fn(-2.0 * a - m)?);
        Ok(match self.delta_nu {
            DeltaNuConvention::Standard => r,
            DeltaNuConvention::Inverted => 1.0 / r,
        })
    }
}

/// Pair of offset sampling grids on the circle Im z = height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleGrid {
    pub n_points: usize,
    pub offset: f64,
    pub height: f64,
}

impl CircleGrid {
    pub fn new(n_points: usize, offset: f64, height: f64) -> Result<Self> {
        if n_points == 0 {
            return Err(Error::InvalidInput("grid needs at least one point".into()));
        }
        if !(offset > 0.0 && offset < 1.0) {
            return Err(Error::InvalidInput(format!("grid offset {offset} not in (0,1)")));
        }
        if !(height < 0.0) || !height.is_finite() {
            return Err(Error::InvalidInput(format!("grid height {height} must be negative")));
        }
        Ok(Self { n_points, offset, height })
    }

    /// M = 8·n_modes points at height −Im τ/4, w-grid offset by half a step.
    pub fn default_for(tau: &TorusModulus, n_modes: usize) -> Self {
        Self { n_points: 8 * n_modes.max(1), offset: 0.5, height: -tau.tau().im / 4.0 }
    }

    pub fn z_points(&self) -> Vec<Complex64> {
        let m = self.n_points as f64;
        (0..self.n_points).map(|j| Complex64::new(j as f64 / m, self.height)).collect()
    }

    pub fn w_points(&self) -> Vec<Complex64> {
        let m = self.n_points as f64;
        (0..self.n_points).map(|j| Complex64::new((j as f64 + self.offset) / m, self.height)).collect()
    }
}

/// Largest |e^{−2πiz}| accepted by the series of Ỹ_in.
pub const SERIES_MARGIN: f64 = 1e-3;

fn y_in_parts(z: Complex64, md: &MonodromyData, with_derivative: bool) -> Result<(Mat2, Mat2)> {
    let x = (-TWO_PI_I * z).exp();
    if x.norm() >= 1.0 - SERIES_MARGIN {
        return Err(Error::ConvergenceDomain { z });
    }
    let (a, m) = (md.a, md.m);
    let two_a = 2.0 * a;
    let f11 = hyp2f1(m, m - two_a, -two_a, x)?;
    let g12 = hyp2f1(1.0 + m, m - two_a, 1.0 - two_a, x)?;
    let f12 = -(m / two_a) * g12;
    let g21 = hyp2f1(1.0 + m, 1.0 + m + two_a, 2.0 + two_a, x)?;
    let f21 = m * x / (two_a + 1.0) * g21;
    let f22 = hyp2f1(m, 1.0 + m + two_a, 1.0 + two_a, x)?;
    let one_minus = 1.0 - x;
    let pre = one_minus.powc(m);
    let twist = Mat2::twist(a, z);
    let f = Mat2::new(f11, f12, f21, f22);
    let y = (twist * f).scale(pre);
    if !with_derivative {
        return Ok((y, Mat2::zero()));
    }
    // dF/dx from the contiguous relation d/dx 2F1(a,b;c;x) = (ab/c) 2F1(a+1,b+1;c+1;x).
    let d11 = m * (m - two_a) / (-two_a) * hyp2f1(m + 1.0, m - two_a + 1.0, 1.0 - two_a, x)?;
    let d12 = -(m / two_a) * (1.0 + m) * (m - two_a) / (1.0 - two_a) * hyp2f1(2.0 + m, m - two_a + 1.0, 2.0 - two_a, x)?;
    let d21 = m / (two_a + 1.0)
        * (g21 + x * (1.0 + m) * (1.0 + m + two_a) / (2.0 + two_a) * hyp2f1(2.0 + m, 2.0 + m + two_a, 3.0 + two_a, x)?);
    let d22 = m * (1.0 + m + two_a) / (1.0 + two_a) * hyp2f1(m + 1.0, 2.0 + m + two_a, 2.0 + two_a, x)?;
    let dx_dz = -TWO_PI_I * x;
    let df = Mat2::new(d11, d12, d21, d22).scale(dx_dz);
    let dpre = m * one_minus.powc(m - 1.0) * (-dx_dz);
    let sigma3 = Mat2::diag(ONE, -ONE);
    let dtwist = (sigma3 * twist).scale(TWO_PI_I * a);
    let dy = (twist * f).scale(dpre) + (dtwist * f).scale(pre) + (twist * df).scale(pre);
    Ok((y, dy))
}

/// Ỹ_in(z) = (1−e^{−2πiz})^m diag(e^{2πiaz}, e^{−2πiaz}) F(e^{−2πiz}), Im z < 0.
pub fn y_in(z: Complex64, md: &MonodromyData) -> Result<Mat2> {
    Ok(y_in_parts(z, md, false)?.0)
}

/// Ỹ_in(z) and ∂_zỸ_in(z).
pub fn y_in_with_derivative(z: Complex64, md: &MonodromyData) -> Result<(Mat2, Mat2)> {
    y_in_parts(z, md, true)
}

fn out_phase(md: &MonodromyData) -> Result<Mat2> {
    let ph = (TWO_PI_I * md.nu).exp() * md.delta_nu_phase()?;
    Ok(Mat2::diag(ph, 1.0 / ph))
}

/// Ỹ_out(z) = e^{2πi(ν+δν)σ3} σ1 Ỹ_in(−z) σ1, Im z > 0.
pub fn y_out(z: Complex64, md: &MonodromyData) -> Result<Mat2> {
    Ok(out_phase(md)? * y_in(-z, md)?.flip())
}

/// Ỹ_out(z) and ∂_zỸ_out(z).
pub fn y_out_with_derivative(z: Complex64, md: &MonodromyData) -> Result<(Mat2, Mat2)> {
    let p = out_phase(md)?;
    let (y, dy) = y_in_with_derivative(-z, md)?;
    Ok((p * y.flip(), (p * dy.flip()).scale(-ONE)))
}

/// The four blocks of K₁,₁ named by their position in the ∇-conjugated
/// operator [[∇⁻¹c, ∇⁻¹d∇], [a, b∇]] (minus space first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    A,
    B,
    C,
    D,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::C, Block::D, Block::A, Block::B];

    pub fn letter(&self) -> char {
        match self {
            Block::A => 'a',
            Block::B => 'b',
            Block::C => 'c',
            Block::D => 'd',
        }
    }

    /// (output space, input space) of the block.
    pub fn spaces(&self) -> (Space, Space) {
        match self {
            Block::C => (Space::Minus, Space::Minus),
            Block::D => (Space::Minus, Space::Plus),
            Block::A => (Space::Plus, Space::Minus),
            Block::B => (Space::Plus, Space::Plus),
        }
    }

    /// Blocks with a removable singularity on the diagonal z = w.
    pub fn is_diagonal_singular(&self) -> bool {
        matches!(self, Block::A | Block::D)
    }
}

/// The two halves of the boundary space: negative-frequency ("minus",
/// modes e^{2πi(a_α+n)z}, n ≥ 1) and positive-frequency ("plus", modes
/// e^{2πi(a_α−n)z}, n ≥ 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Space {
    Minus,
    Plus,
}

impl Space {
    /// Exponent of the mode at `level_index` (level r = index + 1/2) for the
    /// colour with exponent `a_alpha`.
    pub fn exponent(&self, a_alpha: Complex64, level_index: usize) -> Complex64 {
        match self {
            Space::Minus => a_alpha + (level_index as f64 + 1.0),
            Space::Plus => a_alpha - level_index as f64,
        }
    }
}

/// Exponent of colour α: a for α = 0, −a for α = 1.
pub fn colour_exponent(a: Complex64, alpha: usize) -> Complex64 {
    if alpha == 0 {
        a
    } else {
        -a
    }
}

/// Whether a diagonal-singular block may be evaluated at z = w.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalMode {
    Strict,
    Limit,
}

fn near_integer(u: Complex64) -> Option<f64> {
    let n = u.re.round();
    if (u - n).norm() < 1e-12 {
        Some(n)
    } else {
        None
    }
}

/// Entry of K₁,₁(z, w) for the given block.
pub fn kernel_block(
    block: Block,
    z: Complex64,
    w: Complex64,
    md: &MonodromyData,
    tau: &TorusModulus,
    mode: DiagonalMode,
) -> Result<Mat2> {
    let t = tau.tau();
    let u = z - w;
    match block {
        Block::C => {
            let num = y_out(z + t, md)? * y_in(w, md)?.inv();
            Ok(num.scale(-(-TWO_PI_I * md.rho).exp() / (1.0 - (-TWO_PI_I * (u + t)).exp())))
        }
        Block::B => {
            let num = y_in(z, md)? * y_out(w + t, md)?.inv();
            Ok(num.scale((TWO_PI_I * md.rho).exp() / (1.0 - (-TWO_PI_I * (u - t)).exp())))
        }
        Block::A | Block::D => {
            if let Some(n) = near_integer(u) {
                if mode == DiagonalMode::Strict {
                    return Err(Error::DiagonalSingularity { block: block.letter() });
                }
                return diagonal_limit(block, z, md, tau).map(|l| l * Mat2::twist(md.a, n.into()));
            }
            let tw = Mat2::twist(md.a, u);
            let num = if block == Block::A {
                tw - y_in(z, md)? * y_in(w, md)?.inv()
            } else {
                y_out(z + t, md)? * y_out(w + t, md)?.inv() - tw
            };
            Ok(num.scale(1.0 / (1.0 - (-TWO_PI_I * u).exp())))
        }
    }
}

/// Value of a diagonal-singular block at w = z:
/// a → (2πiaσ3 − Ỹ_in′Ỹ_in⁻¹)/2πi, d → (Ỹ_out′Ỹ_out⁻¹(z+τ) − 2πiaσ3)/2πi.
pub fn diagonal_limit(block: Block, z: Complex64, md: &MonodromyData, tau: &TorusModulus) -> Result<Mat2> {
    let s3 = Mat2::diag(ONE, -ONE).scale(TWO_PI_I * md.a);
    let r = match block {
        Block::A => {
            let (y, dy) = y_in_with_derivative(z, md)?;
            s3 - dy * y.inv()
        }
        Block::D => {
            let (y, dy) = y_out_with_derivative(z + tau.tau(), md)?;
            dy * y.inv() - s3
        }
        _ => return Err(Error::InvalidInput(format!("block {} has no diagonal singularity", block.letter()))),
    };
    Ok(r.scale(1.0 / TWO_PI_I))
}

/// Ỹ samples on the two grids, shared by all four blocks.
struct KernelSamples {
    z: Vec<Complex64>,
    w: Vec<Complex64>,
    yin_z: Vec<Mat2>,
    yin_w_inv: Vec<Mat2>,
    yout_z: Vec<Mat2>,
    yout_w_inv: Vec<Mat2>,
}

impl KernelSamples {
    fn new(md: &MonodromyData, tau: &TorusModulus, grid: &CircleGrid) -> Result<Self> {
        let t = tau.tau();
        let z = grid.z_points();
        let w = grid.w_points();
        let yin_z = z.par_iter().map(|&p| y_in(p, md)).collect::<Result<Vec<_>>>()?;
        let yin_w_inv = w.par_iter().map(|&p| y_in(p, md).map(|y| y.inv())).collect::<Result<Vec<_>>>()?;
        let yout_z = z.par_iter().map(|&p| y_out(p + t, md)).collect::<Result<Vec<_>>>()?;
        let yout_w_inv = w.par_iter().map(|&p| y_out(p + t, md).map(|y| y.inv())).collect::<Result<Vec<_>>>()?;
        Ok(Self { z, w, yin_z, yin_w_inv, yout_z, yout_w_inv })
    }

    fn entry(&self, block: Block, j: usize, k: usize, md: &MonodromyData, tau: &TorusModulus) -> Result<Mat2> {
        let t = tau.tau();
        let u = self.z[j] - self.w[k];
        Ok(match block {
            Block::C => (self.yout_z[j] * self.yin_w_inv[k])
                .scale(-(-TWO_PI_I * md.rho).exp() / (1.0 - (-TWO_PI_I * (u + t)).exp())),
            Block::B => (self.yin_z[j] * self.yout_w_inv[k])
                .scale((TWO_PI_I * md.rho).exp() / (1.0 - (-TWO_PI_I * (u - t)).exp())),
            Block::A | Block::D => {
                if near_integer(u).is_some() {
                    return kernel_block(block, self.z[j], self.w[k], md, tau, DiagonalMode::Limit);
                }
                let tw = Mat2::twist(md.a, u);
                let num = if block == Block::A {
                    tw - self.yin_z[j] * self.yin_w_inv[k]
                } else {
                    self.yout_z[j] * self.yout_w_inv[k] - tw
                };
                num.scale(1.0 / (1.0 - (-TWO_PI_I * u).exp()))
            }
        })
    }
}

/// Twisted Fourier coefficients of one block. Row index = α·n_modes + i over
/// the output space, column index = β·n_modes + i over the input space,
/// where i is the level index (level r = i + 1/2).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub block: Block,
    pub n_modes: usize,
    pub a: Complex64,
    pub matrix: DMatrix<Complex64>,
}

impl CoefficientTable {
    pub fn out_space(&self) -> Space {
        self.block.spaces().0
    }

    pub fn in_space(&self) -> Space {
        self.block.spaces().1
    }

    /// Coefficient for output (α, level index i) and input (β, level index j).
    pub fn get(&self, alpha: usize, i: usize, beta: usize, j: usize) -> Complex64 {
        self.matrix[(alpha * self.n_modes + i, beta * self.n_modes + j)]
    }

    /// Largest |coeff · e^{2πi μ_out z} e^{−2πi μ_in w}| with z, w on the line
    /// Im = height. This is the scale on which quadrature error is uniform;
    /// the raw coefficients carry weights up to e^{4π|height|·n_modes}.
    pub fn max_contour_magnitude(&self, height: f64) -> f64 {
        let (so, si) = self.block.spaces();
        let mut worst: f64 = 0.0;
        for alpha in 0..2 {
            for beta in 0..2 {
                for i in 0..self.n_modes {
                    let eo = so.exponent(colour_exponent(self.a, alpha), i);
                    for j in 0..self.n_modes {
                        let ei = si.exponent(colour_exponent(self.a, beta), j);
                        let w = (-2.0 * std::f64::consts::PI * height * (eo - ei).re).exp();
                        worst = worst.max(self.get(alpha, i, beta, j).norm() * w);
                    }
                }
            }
        }
        worst
    }

    /// Σ coeff · e^{2πi μ_out z} e^{−2πi μ_in w} at an arbitrary point pair.
    pub fn reconstruct(&self, z: Complex64, w: Complex64) -> Mat2 {
        let (so, si) = self.block.spaces();
        let mut r = [[ZERO; 2]; 2];
        for (alpha, row) in r.iter_mut().enumerate() {
            for (beta, cell) in row.iter_mut().enumerate() {
                for i in 0..self.n_modes {
                    let eo = so.exponent(colour_exponent(self.a, alpha), i);
                    let lz = (TWO_PI_I * eo * z).exp();
                    for j in 0..self.n_modes {
                        let ei = si.exponent(colour_exponent(self.a, beta), j);
                        *cell += self.get(alpha, i, beta, j) * lz * (-TWO_PI_I * ei * w).exp();
                    }
                }
            }
        }
        Mat2(r)
    }
}

fn extract(block: Block, s: &KernelSamples, md: &MonodromyData, tau: &TorusModulus, n_modes: usize) -> Result<CoefficientTable> {
    let m = s.z.len();
    let (so, si) = block.spaces();
    // Sample matrices S_{αβ}[j,k] = K(z_j, w_k)_{αβ}, built row-parallel.
    let rows: Vec<Vec<Mat2>> = (0..m)
        .into_par_iter()
        .map(|j| (0..m).map(|k| s.entry(block, j, k, md, tau)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let n = n_modes;
    let mut out = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    let mf = m as f64;
    for alpha in 0..2 {
        let left = DMatrix::from_fn(n, m, |i, j| (-TWO_PI_I * so.exponent(colour_exponent(md.a, alpha), i) * s.z[j]).exp() / mf);
        for beta in 0..2 {
            let right = DMatrix::from_fn(m, n, |k, l| (TWO_PI_I * si.exponent(colour_exponent(md.a, beta), l) * s.w[k]).exp() / mf);
            let samples = DMatrix::from_fn(m, m, |j, k| rows[j][k].0[alpha][beta]);
            let c = &left * &samples * &right;
            out.view_mut((alpha * n, beta * n), (n, n)).copy_from(&c);
        }
    }
    Ok(CoefficientTable { block, n_modes, a: md.a, matrix: out })
}

fn check_modes(grid: &CircleGrid, n_modes: usize) -> Result<()> {
    if n_modes == 0 || 4 * n_modes > grid.n_points {
        return Err(Error::InvalidInput(format!(
            "n_modes = {n_modes} needs 0 < 4·n_modes <= M = {}",
            grid.n_points
        )));
    }
    Ok(())
}

/// Fourier coefficients of one block by trapezoid quadrature on the grid.
pub fn fourier_coefficients(
    block: Block,
    md: &MonodromyData,
    tau: &TorusModulus,
    grid: &CircleGrid,
    n_modes: usize,
) -> Result<CoefficientTable> {
    check_modes(grid, n_modes)?;
    let s = KernelSamples::new(md, tau, grid)?;
    extract(block, &s, md, tau, n_modes)
}

/// All four tables in the order c, d, a, b, sharing one set of Ỹ samples.
pub fn all_fourier_coefficients(
    md: &MonodromyData,
    tau: &TorusModulus,
    grid: &CircleGrid,
    n_modes: usize,
) -> Result<[CoefficientTable; 4]> {
    check_modes(grid, n_modes)?;
    let s = KernelSamples::new(md, tau, grid)?;
    Ok([
        extract(Block::C, &s, md, tau, n_modes)?,
        extract(Block::D, &s, md, tau, n_modes)?,
        extract(Block::A, &s, md, tau, n_modes)?,
        extract(Block::B, &s, md, tau, n_modes)?,
    ])
}

/// Compare a table's reconstruction with the kernel at an off-grid pair;
/// fails with `AliasingRisk` above `tol`.
pub fn check_reconstruction(
    table: &CoefficientTable,
    md: &MonodromyData,
    tau: &TorusModulus,
    z: Complex64,
    w: Complex64,
    tol: f64,
) -> Result<f64> {
    let exact = kernel_block(table.block, z, w, md, tau, DiagonalMode::Limit)?;
    let residual = (table.reconstruct(z, w) - exact).max_abs();
    if residual > tol {
        Err(Error::AliasingRisk { residual, tol })
    } else {
        Ok(residual)
    }
}
