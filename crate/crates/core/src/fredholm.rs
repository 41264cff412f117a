//! Finite sections of the Fredholm operators K₁,₁, K₁,ₙ and of the
//! Widom-form operator, and their determinants det(I − K).

use crate::error::{Error, Result};
use crate::specfun::{TorusModulus, TWO_PI_I};
use crate::threept::{
    all_fourier_coefficients, colour_exponent, y_in, y_out, Block, CircleGrid, CoefficientTable, Mat2, MonodromyData, Space,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Label of one basis vector: circle (0 for the one-punctured torus),
/// space, colour α and level index i (level r = i + 1/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub circle: usize,
    pub space: Space,
    pub colour: usize,
    pub level: usize,
}

/// Finite section of an operator together with its basis labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    pub matrix: DMatrix<Complex64>,
    pub basis: Vec<BasisLabel>,
    pub n_modes: usize,
}

/// (space, colour, level) lexicographic labels of a single circle.
pub fn circle_basis(circle: usize, n_modes: usize) -> Vec<BasisLabel> {
    let mut v = Vec::with_capacity(4 * n_modes);
    for space in [Space::Minus, Space::Plus] {
        for colour in 0..2 {
            for level in 0..n_modes {
                v.push(BasisLabel { circle, space, colour, level });
            }
        }
    }
    v
}

impl TruncatedOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Row/column of a basis vector.
    pub fn basis_index(&self, label: BasisLabel) -> Option<usize> {
        self.basis.iter().position(|l| *l == label)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest |eigenvalue|; above 1 the finite section is suspect.
    pub fn spectral_radius(&self) -> f64 {
        let mut m = self.matrix.clone();
        balance(&mut m);
        match m.schur().eigenvalues() {
            Some(ev) => ev.iter().map(|x| x.norm()).fold(0.0, f64::max),
            None => f64::NAN,
        }
    }

    /// Sub-matrix on a set of basis indices (principal minor).
    pub fn principal(&self, idx: &[usize]) -> DMatrix<Complex64> {
        DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.matrix[(idx[i], idx[j])])
    }
}

/// det(I − K) together with a log-determinant accumulated pivot by pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Determinant {
    pub value: Complex64,
    /// Σ log(pivot) + log(sign); its imaginary part is a diagnostic only.
    pub log_value: Complex64,
}

/// Diagonal similarity D·M·D⁻¹ with power-of-two entries that equalises
/// row and column norms (Osborne iteration). The determinant is unchanged
/// and the rounding of the scaling is exact.
pub fn balance(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for _ in 0..40 {
        let mut changed = false;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].norm();
                    r += m[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 || !c.is_finite() || !r.is_finite() {
                continue;
            }
            // f = 2^k closest to sqrt(r/c).
            let k = (0.5 * (r / c).log2()).round();
            if k.abs() >= 1.0 {
                let f = 2f64.powi(k as i32);
                for j in 0..n {
                    m[(j, i)] *= f;
                    m[(i, j)] /= f;
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// det of a square matrix by LU with partial pivoting after balancing.
pub fn determinant(m: &DMatrix<Complex64>) -> Determinant {
    let n = m.nrows();
    if n == 0 {
        return Determinant { value: ONE, log_value: Complex64::new(0.0, 0.0) };
    }
    let mut b = m.clone();
    balance(&mut b);
    let lu = b.lu();
    let sign: f64 = lu.p().determinant();
    let u = lu.u();
    let mut value = Complex64::new(sign, 0.0);
    let mut log_value = if sign < 0.0 { Complex64::new(0.0, std::f64::consts::PI) } else { Complex64::new(0.0, 0.0) };
    for i in 0..n {
        let p = u[(i, i)];
        value *= p;
        log_value += p.ln();
    }
    if value.norm() == 0.0 {
        log_value = Complex64::new(f64::NEG_INFINITY, 0.0);
    }
    Determinant { value, log_value }
}

/// det(I − K).
pub fn det_i_minus_k(op: &TruncatedOperator) -> Determinant {
    let n = op.dim();
    let m = DMatrix::<Complex64>::identity(n, n) - &op.matrix;
    determinant(&m)
}

/// Place the four K₁,₁ tables into the 2×2 super-structure.
fn place_k11(tables: &[CoefficientTable; 4], rho_phase: Complex64) -> Result<TruncatedOperator> {
    let n = tables[0].n_modes;
    if tables.iter().any(|t| t.n_modes != n) {
        return Err(Error::InconsistentTruncation("K11 block tables differ in n_modes".into()));
    }
    let mut k = DMatrix::<Complex64>::zeros(4 * n, 4 * n);
    for t in tables {
        let (so, si) = t.block.spaces();
        let r0 = if so == Space::Minus { 0 } else { 2 * n };
        let c0 = if si == Space::Minus { 0 } else { 2 * n };
        let s = match t.block {
            Block::C => 1.0 / rho_phase,
            Block::B => rho_phase,
            _ => ONE,
        };
        k.view_mut((r0, c0), (2 * n, 2 * n)).copy_from(&t.matrix.map(|x| x * s));
    }
    Ok(TruncatedOperator { matrix: k, basis: circle_basis(0, n), n_modes: n })
}

/// K₁,₁ at fixed (a, m, ν, τ) for any ρ. The twist enters only through the
/// scalars e^{∓2πiρ} on the diagonal blocks, so the quadrature is done once.
#[derive(Debug, Clone)]
pub struct K11Family {
    tables: [CoefficientTable; 4],
    rho0: Complex64,
}

impl K11Family {
    pub fn new(md: &MonodromyData, tau: &TorusModulus, n_modes: usize) -> Result<Self> {
        Self::with_grid(md, tau, &CircleGrid::default_for(tau, n_modes), n_modes)
    }

    pub fn with_grid(md: &MonodromyData, tau: &TorusModulus, grid: &CircleGrid, n_modes: usize) -> Result<Self> {
        Ok(Self { tables: all_fourier_coefficients(md, tau, grid, n_modes)?, rho0: md.rho })
    }

    pub fn n_modes(&self) -> usize {
        self.tables[0].n_modes
    }

    /// Tables in the order c, d, a, b at the construction ρ.
    pub fn tables(&self) -> &[CoefficientTable; 4] {
        &self.tables
    }

    pub fn operator(&self, rho: Complex64) -> Result<TruncatedOperator> {
        place_k11(&self.tables, (TWO_PI_I * (rho - self.rho0)).exp())
    }

    pub fn det(&self, rho: Complex64) -> Result<Complex64> {
        Ok(det_i_minus_k(&self.operator(rho)?).value)
    }
}

/// K₁,₁ in the twisted half-integer basis at the default grid.
pub fn assemble_k11(md: &MonodromyData, tau: &TorusModulus, n_modes: usize) -> Result<TruncatedOperator> {
    K11Family::new(md, tau, n_modes)?.operator(md.rho)
}

/// Same with an explicit sampling grid.
pub fn assemble_k11_with_grid(md: &MonodromyData, tau: &TorusModulus, grid: &CircleGrid, n_modes: usize) -> Result<TruncatedOperator> {
    K11Family::with_grid(md, tau, grid, n_modes)?.operator(md.rho)
}

/// Options for the Widom-form assembly.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WidomOptions {
    /// Modulus at which the jump J is built (defaults to τ itself).
    pub jump_tau: Option<TorusModulus>,
    /// Drop the shift operators, leaving the plain Widom operator of J.
    pub without_shifts: bool,
}

/// Tolerance on |det J| − 1.
pub const JUMP_DET_TOL: f64 = 1e-8;

/// Samples of J(z) = Ỹ_out(z+τ_J)⁻¹Ỹ_in(z) on a circle inside the annulus.
fn jump_samples(md: &MonodromyData, jump_tau: &TorusModulus, m: usize) -> Result<(Vec<Complex64>, Vec<Mat2>)> {
    let h = -jump_tau.tau().im / 4.0;
    let z: Vec<Complex64> = (0..m).map(|j| Complex64::new(j as f64 / m as f64, h)).collect();
    let t = jump_tau.tau();
    let js = z.par_iter().map(|&p| Ok(y_out(p + t, md)?.inv() * y_in(p, md)?)).collect::<Result<Vec<Mat2>>>()?;
    for j in &js {
        let dev = (j.det().norm() - 1.0).abs();
        if dev > JUMP_DET_TOL {
            return Err(Error::JumpNonInvertible { deviation: dev });
        }
    }
    Ok((z, js))
}

/// Integer modes of the Widom basis: minus e^{2πikz} (k = 1..N), plus
/// e^{−2πikz} (k = 0..N−1). Returns the exponent.
fn widom_exponent(space: Space, level: usize) -> f64 {
    match space {
        Space::Minus => level as f64 + 1.0,
        Space::Plus => -(level as f64),
    }
}

/// Matrix of the multiplication operator by F between two integer-mode spaces.
fn multiplication_block(z: &[Complex64], f: &[Mat2], out: Space, inp: Space, n: usize) -> DMatrix<Complex64> {
    let m = z.len() as f64;
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let (alpha, i) = (r / n, r % n);
        let (beta, j) = (c / n, c % n);
        let k = widom_exponent(inp, j) - widom_exponent(out, i);
        z.iter().zip(f).map(|(zz, ff)| ff.get(alpha, beta) * (TWO_PI_I * k * zz).exp()).sum::<Complex64>() / m
    })
}

fn widom_operator(md: &MonodromyData, tau: &TorusModulus, n_modes: usize, opts: &WidomOptions) -> Result<TruncatedOperator> {
    let jt = opts.jump_tau.unwrap_or(*tau);
    let n = n_modes;
    let (z, j) = jump_samples(md, &jt, 8 * n)?;
    let jinv: Vec<Mat2> = j.iter().map(|x| x.inv()).collect();
    let t = tau.tau();
    let mut k = DMatrix::<Complex64>::zeros(4 * n, 4 * n);
    let jmp = multiplication_block(&z, &j, Space::Minus, Space::Plus, n);
    let jipm = multiplication_block(&z, &jinv, Space::Plus, Space::Minus, n);
    k.view_mut((0, 2 * n), (2 * n, 2 * n)).copy_from(&(-jmp));
    k.view_mut((2 * n, 0), (2 * n, 2 * n)).copy_from(&(-jipm));
    if !opts.without_shifts {
        let jimm = multiplication_block(&z, &jinv, Space::Minus, Space::Minus, n);
        let jpp = multiplication_block(&z, &j, Space::Plus, Space::Plus, n);
        let em = (-TWO_PI_I * md.rho).exp();
        let ep = (TWO_PI_I * md.rho).exp();
        for r in 0..2 * n {
            let lev = (r % n) as f64;
            // e^{−2πiρ+τ∂} on e^{2πikz} and e^{2πiρ−τ∂} on e^{−2πikz}.
            let dm = em * (TWO_PI_I * t * (lev + 1.0)).exp();
            let dp = ep * (TWO_PI_I * t * lev).exp();
            for c in 0..2 * n {
                k[(r, c)] = dm * jimm[(r, c)];
                k[(2 * n + r, 2 * n + c)] = dp * jpp[(r, c)];
            }
        }
    }
    Ok(TruncatedOperator { matrix: k, basis: circle_basis(0, n), n_modes: n })
}

/// Operator K_W with det(I − K_W) equal to the torus Widom-form determinant
/// det[[I − e^{−2πiρ+τ∂}Π₋J⁻¹Π₋, Π₋JΠ₊], [Π₊J⁻¹Π₋, I − e^{2πiρ−τ∂}Π₊JΠ₊]].
pub fn assemble_widom_form(md: &MonodromyData, tau: &TorusModulus, n_modes: usize) -> Result<TruncatedOperator> {
    widom_operator(md, tau, n_modes, &WidomOptions::default())
}

pub fn assemble_widom_form_with(md: &MonodromyData, tau: &TorusModulus, n_modes: usize, opts: &WidomOptions) -> Result<TruncatedOperator> {
    widom_operator(md, tau, n_modes, opts)
}

/// Plain Widom constant det[[I, Π₋JΠ₊], [Π₊J⁻¹Π₋, I]] of the jump built at `jump_tau`.
pub fn widom_constant(md: &MonodromyData, jump_tau: &TorusModulus, n_modes: usize) -> Result<Complex64> {
    let opts = WidomOptions { jump_tau: Some(*jump_tau), without_shifts: true };
    Ok(det_i_minus_k(&widom_operator(md, jump_tau, n_modes, &opts)?).value)
}

/// Mode exponents of the two halves of one circle's boundary space.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleModes {
    pub minus: Vec<Complex64>,
    pub plus: Vec<Complex64>,
}

impl CircleModes {
    /// Twisted half-integer modes for exponents (σ, −σ).
    pub fn twisted(sigma: Complex64, n_modes: usize) -> Self {
        let mut minus = Vec::new();
        let mut plus = Vec::new();
        for alpha in 0..2 {
            for i in 0..n_modes {
                minus.push(Space::Minus.exponent(colour_exponent(sigma, alpha), i));
                plus.push(Space::Plus.exponent(colour_exponent(sigma, alpha), i));
            }
        }
        Self { minus, plus }
    }
}

/// Unconjugated operators of one trinion, as coefficient matrices:
/// a: in₋ → in₊, b: out₊ → in₊, c: in₋ → out₋, d: out₊ → out₋.
#[derive(Debug, Clone, PartialEq)]
pub struct TrinionBlocks {
    pub a: DMatrix<Complex64>,
    pub b: DMatrix<Complex64>,
    pub c: DMatrix<Complex64>,
    pub d: DMatrix<Complex64>,
}

/// Shift data of the ∇ conjugation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftData {
    pub rho: Complex64,
    pub tau: TorusModulus,
    /// Σ_j Λ_j.
    pub lambda_sum: Complex64,
}

/// Block data for K₁,ₙ. `circles[k]` is the in-circle of trinion k (and
/// the out-circle of trinion k−1); `last_out` is the out-circle of the
/// last trinion, identified with circle 0 through ∇.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    pub blocks: Vec<TrinionBlocks>,
    pub circles: Vec<CircleModes>,
    pub last_out: CircleModes,
    pub shift: ShiftData,
}

impl BlockLayout {
    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    fn out_circle(&self, k: usize) -> &CircleModes {
        if k + 1 < self.n() {
            &self.circles[k + 1]
        } else {
            &self.last_out
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || self.circles.len() != n {
            return Err(Error::InconsistentTruncation(format!("{} trinions but {} circles", n, self.circles.len())));
        }
        for (k, b) in self.blocks.iter().enumerate() {
            let i = &self.circles[k];
            let o = self.out_circle(k);
            let want = [
                ('a', (i.plus.len(), i.minus.len()), b.a.shape()),
                ('b', (i.plus.len(), o.plus.len()), b.b.shape()),
                ('c', (o.minus.len(), i.minus.len()), b.c.shape()),
                ('d', (o.minus.len(), o.plus.len()), b.d.shape()),
            ];
            for (name, w, got) in want {
                if w != got {
                    return Err(Error::InconsistentTruncation(format!(
                        "trinion {k} block {name} has shape {got:?}, expected {w:?}"
                    )));
                }
            }
        }
        if self.last_out.minus.len() != self.circles[0].minus.len() || self.last_out.plus.len() != self.circles[0].plus.len() {
            return Err(Error::InconsistentTruncation("last out-circle and first in-circle differ in size".into()));
        }
        Ok(())
    }

    fn integer_shift(&self) -> Result<i64> {
        let l = self.shift.lambda_sum;
        if l.im.abs() > 1e-12 || (l.re - l.re.round()).abs() > 1e-12 {
            return Err(Error::UnsupportedTwist(l));
        }
        Ok(l.re.round() as i64)
    }

    /// ∇ as a matrix from circle-0 modes `from` to last-out modes `to`:
    /// ∇e^{2πiμz} = e^{2πiρ}e^{−2πiτ(μ−L)}e^{2πi(μ−L)z}, L = ΣΛ.
    fn nabla(&self, from: &[Complex64], to: &[Complex64], l: i64) -> DMatrix<Complex64> {
        let (rho, tau) = (self.shift.rho, self.shift.tau.tau());
        DMatrix::from_fn(to.len(), from.len(), |i, j| {
            let target = from[j] - l as f64;
            if (to[i] - target).norm() < 1e-9 {
                (TWO_PI_I * rho).exp() * (-TWO_PI_I * tau * target).exp()
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// ∇⁻¹ from last-out modes `from` to circle-0 modes `to`.
    fn nabla_inv(&self, from: &[Complex64], to: &[Complex64], l: i64) -> DMatrix<Complex64> {
        let (rho, tau) = (self.shift.rho, self.shift.tau.tau());
        DMatrix::from_fn(to.len(), from.len(), |i, j| {
            if (to[i] - (from[j] + l as f64)).norm() < 1e-9 {
                (-TWO_PI_I * rho).exp() * (TWO_PI_I * tau * from[j]).exp()
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

/// Sizes of the 2n unknown spaces X₁ … X₂ₙ of K₁,ₙ.
fn k1n_sizes(layout: &BlockLayout) -> Vec<usize> {
    let n = layout.n();
    let mut s = Vec::with_capacity(2 * n);
    for k in 0..n {
        s.push(layout.circles[k].minus.len());
        // X_{2k+2} is out₊ of trinion k; the last one is carried in the circle-0 basis.
        s.push(if k + 1 < n { layout.circles[k + 1].plus.len() } else { layout.circles[0].plus.len() });
    }
    s
}

/// K₁,ₙ = diag(1, …, ∇⁻¹) K̂₁,ₙ diag(1, …, ∇) with the cyclic block
/// pattern: row 1 holds ∇⁻¹c⁽ⁿ⁾, ∇⁻¹d⁽ⁿ⁾∇; row 2k holds a⁽ᵏ⁺¹⁾, b⁽ᵏ⁺¹⁾;
/// row 2k+1 holds c⁽ᵏ⁾, d⁽ᵏ⁾; row 2n holds a⁽¹⁾, b⁽¹⁾. Blocks landing in
/// column 2n are multiplied by ∇ on the right.
pub fn assemble_k1n(layout: &BlockLayout) -> Result<TruncatedOperator> {
    layout.validate()?;
    let l = layout.integer_shift()?;
    let n = layout.n();
    let sizes = k1n_sizes(layout);
    let offs: Vec<usize> = sizes.iter().scan(0, |acc, s| {
        let o = *acc;
        *acc += s;
        Some(o)
    }).collect();
    let dim: usize = sizes.iter().sum();
    let first = &layout.circles[0];
    let last = &layout.last_out;
    let nab_plus = layout.nabla(&first.plus, &last.plus, l);
    let nab_inv_minus = layout.nabla_inv(&last.minus, &first.minus, l);
    let mut k = DMatrix::<Complex64>::zeros(dim, dim);
    // (row block, col block, matrix), 0-based block indices.
    let mut put = |r: usize, c: usize, m: DMatrix<Complex64>| {
        let m = if c == 2 * n - 1 { m * &nab_plus } else { m };
        k.view_mut((offs[r], offs[c]), (sizes[r], sizes[c])).copy_from(&m);
    };
    let bn = &layout.blocks[n - 1];
    put(0, 2 * n - 2, &nab_inv_minus * &bn.c);
    put(0, 2 * n - 1, &nab_inv_minus * &bn.d);
    for kk in 1..n {
        let next = &layout.blocks[kk];
        put(2 * kk - 1, 2 * kk, next.a.clone());
        put(2 * kk - 1, 2 * kk + 1, next.b.clone());
        let prev = &layout.blocks[kk - 1];
        put(2 * kk, 2 * kk - 2, prev.c.clone());
        put(2 * kk, 2 * kk - 1, prev.d.clone());
    }
    let b1 = &layout.blocks[0];
    put(2 * n - 1, 0, b1.a.clone());
    put(2 * n - 1, 1, b1.b.clone());
    let mut basis = Vec::with_capacity(dim);
    for (blk, &s) in sizes.iter().enumerate() {
        let space = if blk % 2 == 0 { Space::Minus } else { Space::Plus };
        let circle = if blk == 2 * n - 1 { 0 } else { (blk + 1) / 2 };
        let per = s / 2;
        for idx in 0..s {
            let (colour, level) = if per > 0 { (idx / per, idx % per) } else { (0, idx) };
            basis.push(BasisLabel { circle, space, colour, level });
        }
    }
    let n_modes = sizes[0] / 2;
    Ok(TruncatedOperator { matrix: k, basis, n_modes })
}

/// Raw (unconjugated) trinion blocks of the one-punctured torus, obtained
/// from the K₁,₁ tables by removing the ∇ factors.
pub fn k11_trinion_layout(md: &MonodromyData, tau: &TorusModulus, n_modes: usize) -> Result<BlockLayout> {
    let fam = K11Family::new(md, tau, n_modes)?;
    let [tc, td, ta, tb] = fam.tables().clone();
    let modes = CircleModes::twisted(md.a, n_modes);
    let t = tau.tau();
    let g = |mu: Complex64| (TWO_PI_I * md.rho).exp() * (-TWO_PI_I * t * mu).exp();
    let c = DMatrix::from_fn(2 * n_modes, 2 * n_modes, |i, j| g(modes.minus[i]) * tc.matrix[(i, j)]);
    let d = DMatrix::from_fn(2 * n_modes, 2 * n_modes, |i, j| g(modes.minus[i]) * td.matrix[(i, j)] / g(modes.plus[j]));
    let b = DMatrix::from_fn(2 * n_modes, 2 * n_modes, |i, j| tb.matrix[(i, j)] / g(modes.plus[j]));
    Ok(BlockLayout {
        blocks: vec![TrinionBlocks { a: ta.matrix, b, c, d }],
        circles: vec![modes.clone()],
        last_out: modes,
        shift: ShiftData { rho: md.rho, tau: *tau, lambda_sum: Complex64::new(0.0, 0.0) },
    })
}
