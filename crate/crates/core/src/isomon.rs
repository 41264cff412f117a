//! Isomonodromic tau functions: prefactor assembly, extraction of the
//! Calogero-Moser coordinate Q(τ) from the zero locus in ρ, and finite
//! difference checks of the equation of motion and the Hamiltonian.

use crate::error::{Error, Result};
use crate::fredholm::K11Family;
use crate::nekrasov::{tau_garnier_series, GarnierConfig, SeriesCutoff};
use crate::numdiff::{five_point_first, five_point_second, richardson};
use crate::specfun::{dedekind_eta, theta1, theta1_ratio_at_zero, theta_char, weierstrass_p, TorusModulus, TWO_PI_I};
use crate::threept::MonodromyData;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A tau function split into its determinant (or series) part and the
/// explicit prefactor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauAssembly {
    pub det_value: Complex64,
    pub prefactor: Complex64,
    pub upsilon: Complex64,
    pub tau_value: Complex64,
}

impl TauAssembly {
    fn new(det_value: Complex64, prefactor: Complex64, upsilon: Complex64) -> Self {
        Self { det_value, prefactor, upsilon, tau_value: det_value * prefactor * upsilon }
    }
}

/// One point of a Calogero-Moser trajectory. `p` = 2πi dQ/dτ and
/// `h` = P² − m²℘(2Q|τ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub tau: TorusModulus,
    pub q: Complex64,
    pub p: Complex64,
    pub h: Complex64,
    /// |P(h) − P(h/2)| before extrapolation.
    pub p_step_error: f64,
}

/// Canonical representative of Q modulo Q → Q + 1, Q → Q + τ and Q → −Q:
/// lattice coordinates (x, y) in [0, 1)², choosing between ±Q the one with
/// the smaller y (then x).
pub fn canonical_q(q: Complex64, tau: &TorusModulus) -> Complex64 {
    let cell = |z: Complex64| {
        let (x, y) = tau.lattice_coords(z);
        let (xf, yf) = (x - x.floor(), y - y.floor());
        (xf, yf, xf + yf * tau.tau())
    };
    let (x1, y1, z1) = cell(q);
    let (x2, y2, z2) = cell(-q);
    let key = |x: f64, y: f64| (round12(y), round12(x));
    if key(x1, y1) <= key(x2, y2) {
        z1
    } else {
        z2
    }
}

fn round12(v: f64) -> i64 {
    // Coordinates within 1e-12 of each other compare equal.
    (v * 1e12).round() as i64
}

/// The translate ±Q + n + kτ closest to `target`.
pub fn align_q(q: Complex64, target: Complex64, tau: &TorusModulus) -> Complex64 {
    let mut best = q;
    for s in [q, -q] {
        let (r, _, _) = tau.reduce(s - target);
        for n in -1..=1 {
            for k in -1..=1 {
                let c = target + r + n as f64 + k as f64 * tau.tau();
                if (c - target).norm() < (best - target).norm() {
                    best = c;
                }
            }
        }
    }
    best
}

/// e^{−2πiρ}η²/(θ1(Q−ρ)θ1(Q+ρ))·e^{2πiτ(a²+1/6)}.
pub fn cm_prefactor(md: &MonodromyData, tau: &TorusModulus, q: Complex64) -> Result<Complex64> {
    let t = tau.tau();
    let den = theta_pair(q, md.rho, tau)?;
    let eta = dedekind_eta(tau)?;
    Ok((-TWO_PI_I * md.rho).exp() * eta * eta / den * (TWO_PI_I * t * (md.a * md.a + 1.0 / 6.0)).exp())
}

fn theta_pair(q: Complex64, rho: Complex64, tau: &TorusModulus) -> Result<Complex64> {
    let d = tau.lattice_distance(q - rho).min(tau.lattice_distance(q + rho));
    if d < 1e-12 {
        return Err(Error::PrefactorPole(d));
    }
    Ok(theta1(q - rho, tau, 0)? * theta1(q + rho, tau, 0)?)
}

/// T_CM = det(I − K₁,₁)·e^{−2πiρ}η²/(θ1(Q−ρ)θ1(Q+ρ))·e^{2πiτ(a²+1/6)}·Υ.
pub fn assemble_tau_cm(md: &MonodromyData, tau: &TorusModulus, q: Complex64, det_value: Complex64, upsilon: Complex64) -> Result<TauAssembly> {
    Ok(TauAssembly::new(det_value, cm_prefactor(md, tau, q)?, upsilon))
}

/// Factor relating the determinant to the bare series at the matched
/// parameters: det(I − K₁,₁) = η^{−2m²}e^{iπτm²/6}e^{−2πiτa²}·Series.
pub fn cm_series_bridge(md: &MonodromyData, tau: &TorusModulus) -> Result<Complex64> {
    let t = tau.tau();
    let m2 = md.m * md.m;
    let eta = dedekind_eta(tau)?;
    Ok((-2.0 * m2 * eta.ln()).exp() * (I * PI * t * m2 / 6.0).exp() * (-TWO_PI_I * t * md.a * md.a).exp())
}

/// Rank-one gauge factors.
#[derive(Debug, Clone, Copy)]
pub enum Rank1Kind<'a> {
    Cm { m: Complex64 },
    Garnier(&'a GarnierConfig),
}

/// (η e^{iπτ/6})^{−2m²} for the one-punctured torus, and
/// ∏_k(η e^{iπτ/6})^{−2m_k²}∏_{l≠k}(θ1(z_k−z_l)/(η e^{−iπτ/3}))^{−m_k m_l}
/// for n punctures. Complex powers use the principal logarithm.
pub fn rank1_prefactors(kind: Rank1Kind<'_>, tau: &TorusModulus) -> Result<Complex64> {
    let t = tau.tau();
    let eta = dedekind_eta(tau)?;
    let single = |m: Complex64| (-2.0 * m * m * (eta * (I * PI * t / 6.0).exp()).ln()).exp();
    match kind {
        Rank1Kind::Cm { m } => Ok(single(m)),
        Rank1Kind::Garnier(cfg) => {
            cfg.validate(tau)?;
            let mut r = ONE;
            for k in 0..cfg.n() {
                r *= single(cfg.m[k]);
                for l in 0..cfg.n() {
                    if l != k {
                        let base = theta1(cfg.z[k] - cfg.z[l], tau, 0)? / (eta * (-I * PI * t / 3.0).exp());
                        r *= (-cfg.m[k] * cfg.m[l] * base.ln()).exp();
                    }
                }
            }
            Ok(r)
        }
    }
}

/// Prefactor of the n-punctured series:
/// e^{−2πi(ρ̃−τ/4)}/(θ1(Q−ρ̃)θ1(Q+ρ̃)) ∏_k(η e^{−iπτ/12})^{2−2m_k²}e^{−2πiz_k m_k²}
/// ∏_{l≠k}(θ1(z_k−z_l)e^{−iπ(z_k−z_l)}/(η e^{−iπτ/6}))^{−m_k m_l}.
pub fn garnier_prefactor(cfg: &GarnierConfig, tau: &TorusModulus, q: Complex64) -> Result<Complex64> {
    cfg.validate(tau)?;
    let t = tau.tau();
    let rt = cfg.rho_tilde(tau);
    let eta = dedekind_eta(tau)?;
    let mut r = (-TWO_PI_I * (rt - t / 4.0)).exp() / theta_pair(q, rt, tau)?;
    let e12 = (eta * (-I * PI * t / 12.0).exp()).ln();
    let e6 = eta * (-I * PI * t / 6.0).exp();
    for k in 0..cfg.n() {
        let mk = cfg.m[k];
        r *= ((2.0 - 2.0 * mk * mk) * e12).exp() * (-TWO_PI_I * cfg.z[k] * mk * mk).exp();
        for l in 0..cfg.n() {
            if l != k {
                let d = cfg.z[k] - cfg.z[l];
                let base = theta1(d, tau, 0)? * (-I * PI * d).exp() / e6;
                r *= (-mk * cfg.m[l] * base.ln()).exp();
            }
        }
    }
    Ok(r)
}

pub fn assemble_tau_garnier(cfg: &GarnierConfig, tau: &TorusModulus, q: Complex64, series_value: Complex64, upsilon: Complex64) -> Result<TauAssembly> {
    Ok(TauAssembly::new(series_value, garnier_prefactor(cfg, tau, q)?, upsilon))
}

/// Zero of ρ ↦ det(I − K₁,₁) found by the secant method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroLocus {
    pub q: Complex64,
    pub det_at_q: Complex64,
    pub iterations: usize,
}

/// Secant iteration on ρ ↦ det(I − K₁,₁)(ρ) started from `seed`
/// (ν + aτ, the m = 0 zero, when None). The returned Q is not reduced.
pub fn solve_q_zero_locus(family: &K11Family, md: &MonodromyData, tau: &TorusModulus, seed: Option<Complex64>) -> Result<ZeroLocus> {
    let mut r0 = seed.unwrap_or(md.nu + md.a * tau.tau());
    let mut r1 = r0 + 1e-3;
    let mut f0 = family.det(r0)?;
    let mut f1 = family.det(r1)?;
    for it in 0..80 {
        let df = f1 - f0;
        if df.norm() == 0.0 {
            break;
        }
        let r2 = r1 - f1 * (r1 - r0) / df;
        r0 = r1;
        f0 = f1;
        r1 = r2;
        f1 = family.det(r1)?;
        if (r1 - r0).norm() < 1e-14 * (1.0 + r1.norm()) {
            return Ok(ZeroLocus { q: r1, det_at_q: f1, iterations: it + 1 });
        }
    }
    Err(Error::NoConvergence(format!("zero-locus secant from {:?}", seed)))
}

/// R = −i e^{−iπτ/2} det(ρ=1/4+τ/2)/det(ρ=1/4). With the theta structure
/// det(ρ)e^{−2πiρ} = Cθ1(Q−ρ)θ1(Q+ρ) this equals θ3(2Q|2τ)/θ2(2Q|2τ).
pub fn theta_ratio_target(family: &K11Family, tau: &TorusModulus) -> Result<Complex64> {
    let d0 = family.det(Complex64::new(0.25, 0.0))?;
    let d1 = family.det(0.25 + tau.tau() / 2.0)?;
    if d0.norm() < 1e-300 || d1.norm() < 1e-300 {
        return Err(Error::DegenerateRatio(d1 / d0));
    }
    Ok(-I * (-I * PI * tau.tau() / 2.0).exp() * d1 / d0)
}

/// The ratio as printed in the literature form, i·e^{3iπτ/2}·det-ratio;
/// kept for reporting.
pub fn theta_ratio_literal(family: &K11Family, tau: &TorusModulus) -> Result<Complex64> {
    let d0 = family.det(Complex64::new(0.25, 0.0))?;
    let d1 = family.det(0.25 + tau.tau() / 2.0)?;
    Ok(I * (3.0 * I * PI * tau.tau() / 2.0).exp() * d1 / d0)
}

/// θ3(2Q|2τ)/θ2(2Q|2τ).
pub fn theta32_ratio(q: Complex64, tau: &TorusModulus) -> Result<Complex64> {
    let t2 = tau.doubled();
    Ok(theta_char(3, 2.0 * q, &t2)? / theta_char(2, 2.0 * q, &t2)?)
}

/// Solve θ3(2Q|2τ)/θ2(2Q|2τ) = R by Newton's method, seeded from the
/// leading terms θ3 ≈ 1, θ2 ≈ 2e^{iπτ/2}cos(2πQ).
pub fn invert_theta32(r: Complex64, tau: &TorusModulus) -> Result<Complex64> {
    let t = tau.tau();
    let cos_arg = (-I * PI * t / 2.0).exp() / (2.0 * r);
    let mut seeds = vec![cos_arg.acos() / (2.0 * PI)];
    // Finer seeds in case the leading-order guess falls outside the basin.
    for i in 0..6 {
        for j in 0..6 {
            seeds.push((i as f64 + 0.5) / 6.0 + (j as f64 + 0.5) / 6.0 * t);
        }
    }
    let f = |q: Complex64| -> Result<Complex64> { Ok(theta32_ratio(q, tau)? - r) };
    let h = 1e-7;
    for seed in seeds {
        let mut q = seed;
        let mut ok = false;
        for _ in 0..60 {
            let fq = match f(q) {
                Ok(v) => v,
                Err(_) => break,
            };
            let d = (f(q + h)? - f(q - h)?) / (2.0 * h);
            if d.norm() < 1e-10 * (1.0 + r.norm()) {
                if fq.norm() < 1e-12 * (1.0 + r.norm()) {
                    return Err(Error::DegenerateRatio(r));
                }
                break;
            }
            let step = fq / d;
            q -= step;
            if !(q.re.is_finite() && q.im.is_finite()) {
                break;
            }
            if step.norm() < 1e-15 * (1.0 + q.norm()) {
                ok = true;
                break;
            }
        }
        if ok || f(q).map(|v| v.norm() < 1e-13 * (1.0 + r.norm())).unwrap_or(false) {
            return Ok(canonical_q(q, tau));
        }
    }
    Err(Error::NewtonDivergence(format!("theta-ratio inversion for R = {r}")))
}

/// Q from the θ3/θ2 determinant identity (two determinants per τ).
pub fn solve_q_theta_ratio(md: &MonodromyData, tau: &TorusModulus, n_modes: usize) -> Result<Complex64> {
    let family = K11Family::new(md, tau, n_modes)?;
    invert_theta32(theta_ratio_target(&family, tau)?, tau)
}

/// Result of fitting v(ρ) = C·θ1(Q−ρ)θ1(Q+ρ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoFit {
    pub q: Complex64,
    pub c: Complex64,
    /// max |v − model|/max|v| on the held-out sample.
    pub fit_residual: f64,
    /// The same on the fitted samples.
    pub in_sample_residual: f64,
}

/// Default residual threshold above which a ρ-fit is rejected.
pub const FIT_THRESHOLD: f64 = 1e-6;

/// Fit samples (ρ_i, v_i) to C·θ1(Q−ρ)θ1(Q+ρ); the last sample is held out.
/// C is eliminated by linear projection and Q refined by Gauss-Newton from
/// a grid of starting points over the period cell.
pub fn fit_theta_pair(tau: &TorusModulus, samples: &[(Complex64, Complex64)], threshold: f64) -> Result<RhoFit> {
    if samples.len() < 4 {
        return Err(Error::InvalidInput(format!("rho fit needs at least 4 samples, got {}", samples.len())));
    }
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            if (samples[i].0 - samples[j].0).norm() < 1e-9 {
                return Err(Error::InvalidInput("rho samples are not distinct".into()));
            }
        }
    }
    let vmax = samples.iter().map(|s| s.1.norm()).fold(0.0, f64::max);
    if samples.iter().any(|s| s.1.norm() < 1e-8 * vmax) {
        return Err(Error::InvalidInput("a rho sample lies on the zero locus".into()));
    }
    let (fit, held) = samples.split_at(samples.len() - 1);
    let model = |q: Complex64, rho: Complex64| -> Result<(Complex64, Complex64)> {
        let (a, b) = (theta1(q - rho, tau, 0)?, theta1(q + rho, tau, 0)?);
        let (da, db) = (theta1(q - rho, tau, 1)?, theta1(q + rho, tau, 1)?);
        Ok((a * b, da * b + a * db))
    };
    let project = |q: Complex64| -> Result<(Complex64, Vec<(Complex64, Complex64)>)> {
        let g: Vec<(Complex64, Complex64)> = fit.iter().map(|&(rho, _)| model(q, rho)).collect::<Result<_>>()?;
        let num: Complex64 = g.iter().zip(fit).map(|(gi, s)| gi.0.conj() * s.1).sum();
        let den: f64 = g.iter().map(|gi| gi.0.norm_sqr()).sum();
        Ok((num / den, g))
    };
    let residual = |q: Complex64, c: Complex64, set: &[(Complex64, Complex64)]| -> Result<f64> {
        let mut r: f64 = 0.0;
        for &(rho, v) in set {
            r = r.max((v - c * model(q, rho)?.0).norm());
        }
        Ok(r / vmax)
    };
    let t = tau.tau();
    let seeds: Vec<Complex64> = (0..8).flat_map(|i| (0..8).map(move |j| (i as f64 + 0.5) / 8.0 + (j as f64 + 0.5) / 8.0 * t)).collect();
    let runs: Vec<Option<(f64, Complex64, Complex64)>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut q = seed;
            for _ in 0..60 {
                let (c, g) = project(q).ok()?;
                // Jacobian of the projected residual, orthogonal to g.
                let gg: f64 = g.iter().map(|gi| gi.0.norm_sqr()).sum();
                let gj: Complex64 = g.iter().map(|gi| gi.0.conj() * c * gi.1).sum::<Complex64>() / gg;
                let mut num = Complex64::new(0.0, 0.0);
                let mut den = 0.0;
                for (gi, s) in g.iter().zip(fit) {
                    let j = c * gi.1 - gi.0 * gj;
                    num += j.conj() * (s.1 - c * gi.0);
                    den += j.norm_sqr();
                }
                if den == 0.0 {
                    return None;
                }
                let step = num / den;
                q += step;
                if !(q.re.is_finite() && q.im.is_finite()) || q.im.abs() > 4.0 * t.im {
                    return None;
                }
                if step.norm() < 1e-15 * (1.0 + q.norm()) {
                    break;
                }
            }
            let (c, _) = project(q).ok()?;
            Some((residual(q, c, fit).ok()?, q, c))
        })
        .collect();
    let (in_res, q, c) = runs
        .into_iter()
        .flatten()
        .fold(None::<(f64, Complex64, Complex64)>, |best, r| match best {
            Some(b) if b.0 <= r.0 => Some(b),
            _ => Some(r),
        })
        .ok_or_else(|| Error::NoConvergence("rho fit".into()))?;
    let held_res = residual(q, c, held)?;
    if held_res > threshold || in_res > threshold {
        return Err(Error::FitFailure { residual: held_res.max(in_res), threshold });
    }
    // C changes under Q → Q + τ, so it is re-projected at the representative.
    let q = canonical_q(q, tau);
    let (c, _) = project(q)?;
    Ok(RhoFit { q, c, fit_residual: held_res, in_sample_residual: in_res })
}

/// Default ρ samples for the fit, spread across the cell.
pub fn default_rho_samples(tau: &TorusModulus) -> Vec<Complex64> {
    let t = tau.tau();
    vec![
        Complex64::new(0.11, 0.0),
        0.23 + 0.17 * t,
        Complex64::new(0.37, 0.0) + 0.08 * t,
        0.07 + 0.29 * t,
        0.41 - 0.11 * t,
    ]
}

/// Q (and C) by fitting det(ρ)e^{−2πiρ} over ρ samples.
pub fn solve_q_rho_fit(md: &MonodromyData, tau: &TorusModulus, n_modes: usize, rho_samples: &[Complex64]) -> Result<RhoFit> {
    let family = K11Family::new(md, tau, n_modes)?;
    solve_q_rho_fit_family(&family, tau, rho_samples)
}

pub fn solve_q_rho_fit_family(family: &K11Family, tau: &TorusModulus, rho_samples: &[Complex64]) -> Result<RhoFit> {
    let samples: Vec<(Complex64, Complex64)> =
        rho_samples.iter().map(|&rho| Ok((rho, family.det(rho)? * (-TWO_PI_I * rho).exp()))).collect::<Result<_>>()?;
    fit_theta_pair(tau, &samples, FIT_THRESHOLD)
}

/// Q for the n-punctured series by fitting Series(ρ̃)e^{−2πiρ̃} over ρ samples.
pub fn solve_q_garnier_fit(cfg: &GarnierConfig, tau: &TorusModulus, cutoff: &SeriesCutoff, rho_samples: &[Complex64]) -> Result<RhoFit> {
    let samples: Vec<(Complex64, Complex64)> = rho_samples
        .iter()
        .map(|&rho| {
            let c = cfg.with_rho(rho);
            let rt = c.rho_tilde(tau);
            Ok((rt, tau_garnier_series(&c, tau, cutoff)?.value * (-TWO_PI_I * rt).exp()))
        })
        .collect::<Result<_>>()?;
    fit_theta_pair(tau, &samples, FIT_THRESHOLD)
}

/// Residual of a finite-difference identity at steps h and h/2 and their
/// Richardson combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    pub residual: Complex64,
    pub residual_coarse: Complex64,
    pub residual_fine: Complex64,
    pub q: Complex64,
    pub p: Complex64,
}

/// How Q is obtained at each stencil point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QMethod {
    #[default]
    ThetaRatio,
    ZeroLocus,
}

struct StencilPoint {
    q: Complex64,
    det: Complex64,
}

fn stencil_point(md: &MonodromyData, tau: &TorusModulus, n_modes: usize, method: QMethod, with_det: bool) -> Result<StencilPoint> {
    let family = K11Family::new(md, tau, n_modes)?;
    let q = match method {
        QMethod::ThetaRatio => invert_theta32(theta_ratio_target(&family, tau)?, tau)?,
        QMethod::ZeroLocus => solve_q_zero_locus(&family, md, tau, None)?.q,
    };
    let det = if with_det { family.det(md.rho)? } else { Complex64::new(0.0, 0.0) };
    Ok(StencilPoint { q, det })
}

/// Q (aligned to the centre value) and det at τ_c + kh, k = −2..2, for
/// step h and h/2 (seven distinct points).
fn stencils(md: &MonodromyData, tau_c: &TorusModulus, n_modes: usize, h: f64, method: QMethod, with_det: bool) -> Result<[[StencilPoint; 5]; 2]> {
    let offsets: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
    let pts: Vec<StencilPoint> = offsets
        .par_iter()
        .map(|&k| stencil_point(md, &tau_c.shifted(Complex64::new(k * h, 0.0))?, n_modes, method, with_det))
        .collect::<Result<_>>()?;
    let centre = pts[3].q;
    let pick = |i: usize| StencilPoint { q: align_q(pts[i].q, centre, &tau_c.shifted(Complex64::new(offsets[i] * h, 0.0)).unwrap()), det: pts[i].det };
    Ok([[pick(0), pick(1), pick(3), pick(5), pick(6)], [pick(1), pick(2), pick(3), pick(4), pick(5)]])
}

/// Check (2πi)²Q″ = m²℘′(2Q|τ) by 5-point stencils at h and h/2.
pub fn verify_eom(md: &MonodromyData, tau_c: &TorusModulus, n_modes: usize, h: f64) -> Result<FdReport> {
    verify_eom_with(md, tau_c, n_modes, h, QMethod::default())
}

pub fn verify_eom_with(md: &MonodromyData, tau_c: &TorusModulus, n_modes: usize, h: f64, method: QMethod) -> Result<FdReport> {
    let st = stencils(md, tau_c, n_modes, h, method, false)?;
    let q = st[0][2].q;
    let rhs = md.m * md.m * weierstrass_p(2.0 * q, tau_c, 1)?;
    let lhs = |s: &[StencilPoint; 5], hh: f64| {
        let v = [s[0].q, s[1].q, s[2].q, s[3].q, s[4].q];
        TWO_PI_I * TWO_PI_I * five_point_second(&v, hh)
    };
    let coarse = lhs(&st[0], h) - rhs;
    let fine = lhs(&st[1], h / 2.0) - rhs;
    let p = momentum(&st, h);
    Ok(FdReport { residual: richardson(coarse, fine, 4), residual_coarse: coarse, residual_fine: fine, q, p })
}

fn momentum(st: &[[StencilPoint; 5]; 2], h: f64) -> Complex64 {
    let d = |s: &[StencilPoint; 5], hh: f64| five_point_first(&[s[0].q, s[1].q, s[2].q, s[3].q, s[4].q], hh);
    TWO_PI_I * richardson(d(&st[0], h), d(&st[1], h / 2.0), 4)
}

/// Check 2πi∂_τ log T_CM = P² − m²℘(2Q|τ) + 4πim²∂_τ log η, with
/// 4πi∂_τ log η = (1/3)θ1‴(0)/θ1′(0).
pub fn verify_hamiltonian(md: &MonodromyData, tau_c: &TorusModulus, n_modes: usize, h: f64) -> Result<FdReport> {
    verify_hamiltonian_with(md, tau_c, n_modes, h, QMethod::default())
}

pub fn verify_hamiltonian_with(md: &MonodromyData, tau_c: &TorusModulus, n_modes: usize, h: f64, method: QMethod) -> Result<FdReport> {
    let st = stencils(md, tau_c, n_modes, h, method, true)?;
    let offsets = [[-2.0, -1.0, 0.0, 1.0, 2.0], [-1.0, -0.5, 0.0, 0.5, 1.0]];
    let mut tv = [[Complex64::new(0.0, 0.0); 5]; 2];
    for s in 0..2 {
        for k in 0..5 {
            let t = tau_c.shifted(Complex64::new(offsets[s][k] * h, 0.0))?;
            tv[s][k] = assemble_tau_cm(md, &t, st[s][k].q, st[s][k].det, ONE)?.tau_value;
        }
    }
    let q = st[0][2].q;
    let p_of = |s: usize, hh: f64| TWO_PI_I * five_point_first(&[st[s][0].q, st[s][1].q, st[s][2].q, st[s][3].q, st[s][4].q], hh);
    let m2 = md.m * md.m;
    let wp = weierstrass_p(2.0 * q, tau_c, 0)?;
    let eta_term = m2 * theta1_ratio_at_zero(tau_c)? / 3.0;
    let res = |s: usize, hh: f64| {
        let dlog = five_point_first(&tv[s], hh) / tv[s][2];
        let p = p_of(s, hh);
        TWO_PI_I * dlog - (p * p - m2 * wp + eta_term)
    };
    let coarse = res(0, h);
    let fine = res(1, h / 2.0);
    Ok(FdReport { residual: richardson(coarse, fine, 4), residual_coarse: coarse, residual_fine: fine, q, p: momentum(&st, h) })
}

/// Q, P and H = P² − m²℘(2Q) at one τ.
pub fn trajectory_point(md: &MonodromyData, tau: &TorusModulus, n_modes: usize, h: f64) -> Result<TrajectoryPoint> {
    let st = stencils(md, tau, n_modes, h, QMethod::default(), false)?;
    let d = |s: &[StencilPoint; 5], hh: f64| five_point_first(&[s[0].q, s[1].q, s[2].q, s[3].q, s[4].q], hh);
    let (pc, pf) = (TWO_PI_I * d(&st[0], h), TWO_PI_I * d(&st[1], h / 2.0));
    let p = richardson(pc, pf, 4);
    let q = st[0][2].q;
    let hval = p * p - md.m * md.m * weierstrass_p(2.0 * q, tau, 0)?;
    Ok(TrajectoryPoint { tau: *tau, q, p, h: hval, p_step_error: (pc - pf).norm() })
}
