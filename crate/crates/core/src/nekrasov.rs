//! Charged partitions and the Nekrasov-function series of the
//! one-punctured torus and of the n-punctured (Garnier) torus, N = 2.

use crate::error::{Error, Result};
use crate::specfun::{gamma_ratio_shift, TorusModulus, TWO_PI_I};
use crate::threept::MonodromyData;
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Young diagram as weakly decreasing positive row lengths.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Partition {
    rows: Vec<u32>,
}

impl Partition {
    pub fn new(rows: Vec<u32>) -> Result<Self> {
        if rows.iter().any(|&r| r == 0) || rows.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(format!("{rows:?} is not a partition")));
        }
        Ok(Self { rows })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn size(&self) -> u32 {
        self.rows.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row i (1-based), zero past the last row.
    pub fn row(&self, i: usize) -> i64 {
        if i >= 1 && i <= self.rows.len() {
            self.rows[i - 1] as i64
        } else {
            0
        }
    }

    pub fn conjugate(&self) -> Partition {
        let width = self.rows.first().copied().unwrap_or(0);
        let rows = (1..=width).map(|j| self.rows.iter().filter(|&&r| r >= j).count() as u32).collect();
        Partition { rows }
    }

    /// Boxes (i, j), 1-based, row by row.
    pub fn boxes(&self) -> Vec<(usize, usize)> {
        self.rows.iter().enumerate().flat_map(|(i, &r)| (1..=r as usize).map(move |j| (i + 1, j))).collect()
    }

    /// Arm length a_Y(i,j) = Y_i − j (may be negative outside Y).
    pub fn arm(&self, i: usize, j: usize) -> i64 {
        self.row(i) - j as i64
    }

    /// Leg length l_Y(i,j) = Yᵀ_j − i (may be negative outside Y).
    pub fn leg(&self, i: usize, j: usize) -> i64 {
        self.column(j) - i as i64
    }

    fn column(&self, j: usize) -> i64 {
        self.rows.iter().filter(|&&r| r as usize >= j).count() as i64
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.rows)
    }
}

/// Young diagram with a U(1) charge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChargedPartition {
    pub y: Partition,
    pub charge: i64,
}

/// All partitions of every size ≤ max_size: by size, then reverse
/// lexicographic rows within a size.
pub fn partitions_up_to(max_size: u32) -> Vec<Partition> {
    let mut out = Vec::new();
    for n in 0..=max_size {
        out.extend(partitions_of(n));
    }
    out
}

/// Partitions of exactly n in reverse lexicographic order.
pub fn partitions_of(n: u32) -> Vec<Partition> {
    fn rec(n: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if n == 0 {
            out.push(Partition { rows: prefix.clone() });
            return;
        }
        for k in (1..=n.min(max)).rev() {
            prefix.push(k);
            rec(n - k, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// Maya diagram: occupied positive half-integer positions (particles r)
/// and empty negative ones recorded as s = −x (holes).
#[derive(Debug, Clone, PartialEq)]
pub struct MayaDiagram {
    pub particles: Vec<f64>,
    pub holes: Vec<f64>,
}

/// Maya diagram of (Y, Q): positions x_i = Y_i − i + Q + 1/2.
pub fn maya_from_charged(cp: &ChargedPartition, level_cutoff: usize) -> Result<MayaDiagram> {
    let need = cp.y.row(1) as usize + cp.charge.unsigned_abs() as usize + cp.y.len();
    if level_cutoff <= need {
        return Err(Error::CutoffTooSmall { cutoff: level_cutoff });
    }
    let q = cp.charge;
    // Positions in units of 1/2 are odd integers; store x + 1/2 as integers.
    let depth = level_cutoff as i64;
    let occupied: Vec<i64> = (1..=(cp.y.len() as i64 + q.abs() + depth))
        .map(|i| cp.y.row(i as usize) - i + q + 1)
        .collect();
    let mut particles: Vec<f64> = occupied.iter().filter(|&&p| p > 0).map(|&p| p as f64 - 0.5).collect();
    let lowest = *occupied.last().unwrap();
    let mut holes: Vec<f64> = (lowest..=0).filter(|p| !occupied.contains(p)).map(|p| 0.5 - p as f64).collect();
    particles.sort_by(|a, b| b.partial_cmp(a).unwrap());
    holes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(MayaDiagram { particles, holes })
}

/// Arm/leg usage in Z_bif. Only `Standard` is correct; the others are
/// negative controls for the verification suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArmLegConvention {
    #[default]
    Standard,
    /// Arm and leg exchanged in both products.
    Swapped,
    /// Arm and leg exchanged in the product over Y only.
    SwappedFirstProduct,
}

/// Z_bif(x|Y′,Y) = ∏_{□∈Y}(x+1+a_{Y′}(□)+l_Y(□)) ∏_{□∈Y′}(x−1−a_Y(□)−l_{Y′}(□)).
pub fn z_bif(x: Complex64, y_prime: &Partition, y: &Partition) -> Complex64 {
    z_bif_with(x, y_prime, y, ArmLegConvention::Standard)
}

pub fn z_bif_with(x: Complex64, y_prime: &Partition, y: &Partition, conv: ArmLegConvention) -> Complex64 {
    let mut r = ONE;
    let swap_first = conv != ArmLegConvention::Standard;
    let swap_second = conv == ArmLegConvention::Swapped;
    for (i, j) in y.boxes() {
        let s = if swap_first { y_prime.leg(i, j) + y.arm(i, j) } else { y_prime.arm(i, j) + y.leg(i, j) };
        r *= x + 1.0 + s as f64;
    }
    for (i, j) in y_prime.boxes() {
        let s = if swap_second { y.leg(i, j) + y_prime.arm(i, j) } else { y.arm(i, j) + y_prime.leg(i, j) };
        r *= x - 1.0 - s as f64;
    }
    r
}

/// Z_inst(σ, μ|Y, W) = ∏_{α,β} Z_bif(σ_α−μ_β|Y_α,W_β)/Z_bif(σ_α−σ_β|Y_α,Y_β).
pub fn z_inst(sigma: &[Complex64], mu: &[Complex64], ys: &[Partition], ws: &[Partition]) -> Result<Complex64> {
    z_inst_with(sigma, mu, ys, ws, ArmLegConvention::Standard)
}

pub fn z_inst_with(
    sigma: &[Complex64],
    mu: &[Complex64],
    ys: &[Partition],
    ws: &[Partition],
    conv: ArmLegConvention,
) -> Result<Complex64> {
    let n = sigma.len();
    if mu.len() != n || ys.len() != n || ws.len() != n {
        return Err(Error::InvalidInput("z_inst: length mismatch".into()));
    }
    let mut num = ONE;
    let mut den = ONE;
    for a in 0..n {
        for b in 0..n {
            num *= z_bif_with(sigma[a] - mu[b], &ys[a], &ws[b], conv);
            let d = z_bif_with(sigma[a] - sigma[b], &ys[a], &ys[b], conv);
            if d.norm() < 1e-13 {
                return Err(Error::Resonance(sigma[a] - sigma[b]));
            }
            den *= d;
        }
    }
    Ok(num / den)
}

/// Z_pert(σ+Q, μ+Q′)/Z_pert(σ, μ) with
/// Z_pert(σ, μ) = ∏_{α,β} G(1+σ_α−μ_β)/G(1+σ_α−σ_β), through integer-shift
/// Barnes-G ratios only.
pub fn z_pert_ratio(sigma: &[Complex64], mu: &[Complex64], qshift_sigma: &[i64], qshift_mu: &[i64]) -> Result<Complex64> {
    let n = sigma.len();
    if mu.len() != n || qshift_sigma.len() != n || qshift_mu.len() != n {
        return Err(Error::InvalidInput("z_pert_ratio: length mismatch".into()));
    }
    let mut r = ONE;
    for a in 0..n {
        for b in 0..n {
            r *= gamma_ratio_shift(sigma[a] - mu[b], qshift_sigma[a] - qshift_mu[b])?;
            r /= gamma_ratio_shift(sigma[a] - sigma[b], qshift_sigma[a] - qshift_sigma[b])?;
        }
    }
    Ok(r)
}

/// Which charges enter a truncated sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChargeWindow {
    /// |Q_α| ≤ max_charge.
    Centered,
    /// |Q_α − c_α| ≤ max_charge around the charges c_α of largest weight.
    #[default]
    Dominant,
}

/// Truncation of a charged-partition series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeriesCutoff {
    pub max_charge: i64,
    pub max_boxes: u32,
    pub window: ChargeWindow,
}

impl SeriesCutoff {
    pub fn new(max_charge: i64, max_boxes: u32) -> Self {
        Self { max_charge, max_boxes, window: ChargeWindow::default() }
    }

    pub fn centered(max_charge: i64, max_boxes: u32) -> Self {
        Self { max_charge, max_boxes, window: ChargeWindow::Centered }
    }
}

/// Value of a truncated series with a diagnostic for the outermost shell.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    /// Largest |term| on the boundary of the charge window or at the box
    /// cutoff, relative to |value|.
    pub boundary_weight: f64,
    pub terms: usize,
}

/// One summand, labelled by its charges and partitions (colour-major,
/// circle by circle).
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTerm {
    pub charges: Vec<i64>,
    pub partitions: Vec<Partition>,
    pub value: Complex64,
}

/// Options shared by the series evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeriesOptions {
    pub arm_leg: ArmLegConvention,
    /// Caller-supplied Ῡ slot multiplying the bare sum (1 when None).
    pub upsilon: Option<Complex64>,
}

/// Pairwise summation in a fixed order.
fn tree_sum(v: &[Complex64]) -> Complex64 {
    match v.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => v[0],
        n => tree_sum(&v[..n / 2]) + tree_sum(&v[n / 2..]),
    }
}

/// Partition pairs (Y¹, Y²) with |Y¹|+|Y²| ≤ max_boxes, by total size.
fn partition_tuples(k: usize, max_boxes: u32) -> Vec<(u32, Vec<Partition>)> {
    let by_size: Vec<Vec<Partition>> = (0..=max_boxes).map(partitions_of).collect();
    let mut out: Vec<(u32, Vec<Partition>)> = vec![(0, Vec::new())];
    for _ in 0..k {
        let mut next = Vec::new();
        for (s, t) in &out {
            for extra in 0..=(max_boxes - s) {
                for p in &by_size[extra as usize] {
                    let mut t2 = t.clone();
                    t2.push(p.clone());
                    next.push((s + extra, t2));
                }
            }
        }
        out = next;
    }
    out.sort_by_key(|(s, _)| *s);
    out
}

fn colour_vec(a: Complex64) -> [Complex64; 2] {
    [a, -a]
}

/// Charge of largest weight per colour for a Gaussian weight
/// Re[iπτ_eff(Q+a)² + 2πiQ·ℓ].
fn dominant_charge(tau_eff: Complex64, a: Complex64, lin: Complex64) -> i64 {
    let f = |q: f64| (Complex64::new(0.0, std::f64::consts::PI) * tau_eff * (q + a) * (q + a) + TWO_PI_I * q * lin).re;
    let mut best = 0i64;
    for q in -60..=60 {
        if f(q as f64) > f(best as f64) {
            best = q;
        }
    }
    best
}

/// Series parameters of the one-punctured torus that pair with the kernel
/// parameters: ν_series = ν + 1/2 and ρ_series = ρ + m(τ+1)/2.
pub fn series_parameters_from_kernel(md: &MonodromyData, tau: &TorusModulus) -> MonodromyData {
    let mut s = *md;
    s.nu = md.nu + 0.5;
    s.rho = md.rho + md.m * (tau.tau() + 1.0) / 2.0;
    s
}

/// All summands of the one-punctured torus series
/// Σ e^{2πiτ[(Q+a)²/2+|Y|]} e^{2πi[Q·ν−Q(ρ−m(τ+1)/2−τ/2)]} Z_pert-ratio Z_inst,
/// with a = (a,−a), ν = (ν,−ν).
pub fn tau_cm_terms(md: &MonodromyData, tau: &TorusModulus, cutoff: &SeriesCutoff, opts: &SeriesOptions) -> Result<Vec<SeriesTerm>> {
    let t = tau.tau();
    let av = colour_vec(md.a);
    let nv = colour_vec(md.nu);
    let shift = md.rho - md.m * (t + 1.0) / 2.0 - t / 2.0;
    let centres: [i64; 2] = match cutoff.window {
        ChargeWindow::Centered => [0, 0],
        ChargeWindow::Dominant => [dominant_charge(t, av[0], nv[0] - shift), dominant_charge(t, av[1], nv[1] - shift)],
    };
    let tuples = partition_tuples(2, cutoff.max_boxes);
    let mut charges = Vec::new();
    for q1 in -cutoff.max_charge..=cutoff.max_charge {
        for q2 in -cutoff.max_charge..=cutoff.max_charge {
            charges.push([centres[0] + q1, centres[1] + q2]);
        }
    }
    let blocks: Vec<Vec<SeriesTerm>> = charges
        .par_iter()
        .map(|q| {
            let s = [av[0] + q[0] as f64, av[1] + q[1] as f64];
            let mu = [s[0] + md.m, s[1] + md.m];
            let qt = (q[0] + q[1]) as f64;
            let base = (TWO_PI_I * t * (s[0] * s[0] + s[1] * s[1]) / 2.0).exp()
                * (TWO_PI_I * (q[0] as f64 * nv[0] + q[1] as f64 * nv[1] - qt * shift)).exp()
                * z_pert_ratio(&av, &[av[0] + md.m, av[1] + md.m], q, q)?;
            tuples
                .iter()
                .map(|(size, ys)| {
                    let zi = z_inst_with(&s, &mu, ys, ys, opts.arm_leg)?;
                    Ok(SeriesTerm {
                        charges: q.to_vec(),
                        partitions: ys.clone(),
                        value: base * (TWO_PI_I * t * *size as f64).exp() * zi,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

fn summarize(terms: &[SeriesTerm], centres_and_radius: impl Fn(&SeriesTerm) -> bool, max_boxes: u32, upsilon: Option<Complex64>) -> SeriesValue {
    let vals: Vec<Complex64> = terms.iter().map(|t| t.value).collect();
    let value = tree_sum(&vals) * upsilon.unwrap_or(ONE);
    let boundary = terms
        .iter()
        .filter(|t| centres_and_radius(t) || t.partitions.iter().map(|p| p.size()).sum::<u32>() == max_boxes)
        .map(|t| t.value.norm())
        .fold(0.0, f64::max);
    SeriesValue { value, boundary_weight: boundary / value.norm().max(f64::MIN_POSITIVE), terms: terms.len() }
}

/// Bare one-punctured torus series (no theta/eta prefactors), times the
/// optional Ῡ slot.
pub fn tau_cm_series(md: &MonodromyData, tau: &TorusModulus, cutoff: &SeriesCutoff) -> Result<SeriesValue> {
    tau_cm_series_with(md, tau, cutoff, &SeriesOptions::default())
}

pub fn tau_cm_series_with(md: &MonodromyData, tau: &TorusModulus, cutoff: &SeriesCutoff, opts: &SeriesOptions) -> Result<SeriesValue> {
    let terms = tau_cm_terms(md, tau, cutoff, opts)?;
    let (lo, hi) = charge_extent(&terms);
    let on_edge = |t: &SeriesTerm| t.charges.iter().enumerate().any(|(i, &q)| q == lo[i] || q == hi[i]);
    let edge = if cutoff.max_charge > 0 { Some(on_edge) } else { None };
    Ok(summarize(&terms, |t| edge.map(|f| f(t)).unwrap_or(false), cutoff.max_boxes, opts.upsilon))
}

fn charge_extent(terms: &[SeriesTerm]) -> (Vec<i64>, Vec<i64>) {
    let k = terms.first().map(|t| t.charges.len()).unwrap_or(0);
    let mut lo = vec![i64::MAX; k];
    let mut hi = vec![i64::MIN; k];
    for t in terms {
        for (i, &q) in t.charges.iter().enumerate() {
            lo[i] = lo[i].min(q);
            hi[i] = hi[i].max(q);
        }
    }
    (lo, hi)
}

/// Parameters of the elliptic Garnier system with N = 2.
#[derive(Debug, Clone, PartialEq)]
pub struct GarnierConfig {
    /// Puncture positions z_1..z_n.
    pub z: Vec<Complex64>,
    /// Exponents a_k on the in-circles (a_{n+1} = a_1).
    pub a: Vec<Complex64>,
    /// Masses m_k.
    pub m: Vec<Complex64>,
    /// U(1) parameters Λ_1..Λ_n.
    pub lambda: Vec<Complex64>,
    /// Λ_0.
    pub lambda0: Complex64,
    /// Fourier parameters ν_k (traceless vectors (ν_k, −ν_k)).
    pub nu: Vec<Complex64>,
    pub rho: Complex64,
}

impl GarnierConfig {
    /// Rank-one specialisation Λ_j = −m_j, Λ_0 = Σm/2.
    pub fn rank1(z: Vec<Complex64>, a: Vec<Complex64>, m: Vec<Complex64>, nu: Vec<Complex64>, rho: Complex64) -> Self {
        let lambda = m.iter().map(|x| -x).collect();
        let lambda0 = m.iter().sum::<Complex64>() / 2.0;
        Self { z, a, m, lambda, lambda0, nu, rho }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn validate(&self, tau: &TorusModulus) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidInput("Garnier config needs at least one puncture".into()));
        }
        for (name, len) in [("a", self.a.len()), ("m", self.m.len()), ("lambda", self.lambda.len()), ("nu", self.nu.len())] {
            if len != n {
                return Err(Error::InvalidInput(format!("{name} has {len} entries for {n} punctures")));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if tau.lattice_distance(self.z[i] - self.z[j]) < 1e-9 {
                    return Err(Error::CoincidentPunctures(i, j));
                }
            }
        }
        let rt = self.rho_tilde(tau);
        if !(rt.re.is_finite() && rt.im.is_finite()) {
            return Err(Error::InvalidInput("rho tilde is not finite".into()));
        }
        Ok(())
    }

    /// ρ̃ = ρ − Σ_j Λ_j(z_j − (τ+1)/2).
    pub fn rho_tilde(&self, tau: &TorusModulus) -> Complex64 {
        let t = tau.tau();
        self.rho - self.lambda.iter().zip(&self.z).map(|(l, z)| l * (z - (t + 1.0) / 2.0)).sum::<Complex64>()
    }

    pub fn with_rho(&self, rho: Complex64) -> Self {
        let mut c = self.clone();
        c.rho = rho;
        c
    }
}

/// All summands of the Garnier series with equal total charge Q on every
/// circle: weights e^{−2πiQ(ρ̃−τ/2)} e^{2πiτ[(Q₁+a₁)²/2+|Y₁|]}
/// ∏_j e^{−2πi(z_j−z_{j−1})[(a_j+Q_j)²/2+|Y_j|]} times the chain
/// ∏_k e^{2πiQ_k·ν_k} Z_pert-ratio Z_inst(a_k+Q_k, a_{k+1}+m_k+Q_{k+1}|Y_k,Y_{k+1}).
pub fn tau_garnier_terms(cfg: &GarnierConfig, tau: &TorusModulus, cutoff: &SeriesCutoff, opts: &SeriesOptions) -> Result<Vec<SeriesTerm>> {
    cfg.validate(tau)?;
    let n = cfg.n();
    let t = tau.tau();
    let rt = cfg.rho_tilde(tau);
    let r = cutoff.max_charge;
    // Charge configurations: Q⃗₁ free in the window, later circles (q, Q − q).
    let mut configs: Vec<Vec<[i64; 2]>> = Vec::new();
    for q11 in -r..=r {
        for q12 in -r..=r {
            let total = q11 + q12;
            let mut partial: Vec<Vec<[i64; 2]>> = vec![vec![[q11, q12]]];
            for _ in 1..n {
                let mut next = Vec::new();
                for p in &partial {
                    for q in -r..=r {
                        let other = total - q;
                        if other.abs() > r {
                            continue;
                        }
                        let mut p2 = p.clone();
                        p2.push([q, other]);
                        next.push(p2);
                    }
                }
                partial = next;
            }
            configs.extend(partial);
        }
    }
    let tuples = partition_tuples(2 * n, cutoff.max_boxes);
    let av: Vec<[Complex64; 2]> = cfg.a.iter().map(|&a| colour_vec(a)).collect();
    let z_prev = |j: usize| if j == 0 { cfg.z[n - 1] } else { cfg.z[j - 1] };
    let blocks: Vec<Vec<SeriesTerm>> = configs
        .par_iter()
        .map(|qs| {
            let total = (qs[0][0] + qs[0][1]) as f64;
            let sig: Vec<[Complex64; 2]> = (0..n).map(|k| [av[k][0] + qs[k][0] as f64, av[k][1] + qs[k][1] as f64]).collect();
            let sq = |s: &[Complex64; 2]| (s[0] * s[0] + s[1] * s[1]) / 2.0;
            let mut base = (-TWO_PI_I * total * (rt - t / 2.0)).exp() * (TWO_PI_I * t * sq(&sig[0])).exp();
            for j in 0..n {
                base *= (-TWO_PI_I * (cfg.z[j] - z_prev(j)) * sq(&sig[j])).exp();
            }
            let mut mus = Vec::with_capacity(n);
            for k in 0..n {
                let k1 = (k + 1) % n;
                let nu = colour_vec(cfg.nu[k]);
                base *= (TWO_PI_I * (qs[k][0] as f64 * nu[0] + qs[k][1] as f64 * nu[1])).exp();
                let mu0 = [av[k1][0] + cfg.m[k], av[k1][1] + cfg.m[k]];
                base *= z_pert_ratio(&av[k], &mu0, &qs[k], &qs[k1])?;
                mus.push([sig[k1][0] + cfg.m[k], sig[k1][1] + cfg.m[k]]);
            }
            tuples
                .iter()
                .map(|(_, ys)| {
                    let size = |k: usize| (ys[2 * k].size() + ys[2 * k + 1].size()) as f64;
                    let mut w = base * (TWO_PI_I * t * size(0)).exp();
                    for j in 0..n {
                        w *= (-TWO_PI_I * (cfg.z[j] - z_prev(j)) * size(j)).exp();
                    }
                    for k in 0..n {
                        let k1 = (k + 1) % n;
                        w *= z_inst_with(&sig[k], &mus[k], &ys[2 * k..2 * k + 2], &ys[2 * k1..2 * k1 + 2], opts.arm_leg)?;
                    }
                    Ok(SeriesTerm { charges: qs.iter().flatten().copied().collect(), partitions: ys.clone(), value: w })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// Bare Garnier series (prefactors applied by the isomonodromy layer).
pub fn tau_garnier_series(cfg: &GarnierConfig, tau: &TorusModulus, cutoff: &SeriesCutoff) -> Result<SeriesValue> {
    tau_garnier_series_with(cfg, tau, cutoff, &SeriesOptions::default())
}

pub fn tau_garnier_series_with(cfg: &GarnierConfig, tau: &TorusModulus, cutoff: &SeriesCutoff, opts: &SeriesOptions) -> Result<SeriesValue> {
    let terms = tau_garnier_terms(cfg, tau, cutoff, opts)?;
    let r = cutoff.max_charge;
    Ok(summarize(&terms, |t| r > 0 && t.charges.iter().any(|q| q.abs() == r), cutoff.max_boxes, opts.upsilon))
}
