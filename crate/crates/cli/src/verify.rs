use crate::commands::Options;
use crate::config::RunConfig;
use crate::report::{Document, FlatRow, Summary};
use anyhow::Result;
use elltau::fredholm::{assemble_widom_form, det_i_minus_k, K11Family};
use elltau::isomon::{
    cm_series_bridge, default_rho_samples, solve_q_rho_fit_family, theta32_ratio, theta_ratio_target, verify_eom,
    verify_hamiltonian,
};
use elltau::nekrasov::{
    maya_from_charged, partitions_up_to, series_parameters_from_kernel, tau_cm_series, tau_cm_series_with, tau_cm_terms,
    tau_garnier_terms, z_bif, ChargedPartition, GarnierConfig, Partition, SeriesCutoff, SeriesOptions,
};
use elltau::specfun::{
    acycle_integral_identities, dedekind_eta, hyp2f1, theta1, weierstrass_p, TorusModulus,
};
use elltau::threept::{all_fourier_coefficients, check_reconstruction, y_in, Block, CircleGrid, MonodromyData};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub module: &'static str,
    pub name: &'static str,
    pub tolerance: f64,
    pub measured: Option<f64>,
    pub pass: bool,
    pub error: Option<String>,
}

impl FlatRow for CheckRecord {
    fn headers() -> Vec<&'static str> {
        vec!["module", "name", "tolerance", "measured", "pass", "error"]
    }

    fn row(&self) -> Vec<String> {
        vec![
            self.module.to_string(),
            self.name.to_string(),
            self.tolerance.to_string(),
            crate::report::opt(&self.measured),
            self.pass.to_string(),
            crate::report::opt(&self.error),
        ]
    }
}

type Measure = Box<dyn Fn(&RunConfig, &Options, &mut ChaCha8Rng) -> anyhow::Result<f64>>;

struct Check {
    module: &'static str,
    name: &'static str,
    tolerance: fn(&RunConfig) -> f64,
    measure: Measure,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn random_z(rng: &mut ChaCha8Rng, tau: &TorusModulus) -> Complex64 {
    let (x, y): (f64, f64) = (rng.random(), rng.random());
    x + (y - 0.5) * tau.tau()
}

fn random_partition(rng: &mut ChaCha8Rng, max_rows: usize, max_len: u32) -> Partition {
    let n = rng.random_range(0..=max_rows);
    let mut rows: Vec<u32> = (0..n).map(|_| rng.random_range(1..=max_len)).collect();
    rows.sort_unstable_by(|a, b| b.cmp(a));
    Partition::new(rows).expect("sorted positive rows")
}

fn checks() -> Vec<Check> {
    vec![
        Check {
            module: "specfun",
            name: "theta1 quasi-periodicity (100 random z)",
            tolerance: |_| 1e-10,
            measure: Box::new(|cfg, _, rng| {
                let tau = cfg.moduli()?[0];
                let mut worst: f64 = 0.0;
                for _ in 0..100 {
                    let z = random_z(rng, &tau);
                    let t0 = theta1(z, &tau, 0)?;
                    worst = worst.max(rel(theta1(z + 1.0, &tau, 0)?, -t0));
                    let shifted = -(-2.0 * PI * I * (z + tau.tau() / 2.0)).exp() * t0;
                    worst = worst.max(rel(theta1(z + tau.tau(), &tau, 0)?, shifted));
                }
                Ok(worst)
            }),
        },
        Check {
            module: "specfun",
            name: "heat equation",
            tolerance: |_| 1e-7,
            measure: Box::new(|cfg, _, _| {
                let tau = cfg.moduli()?[0];
                let z = c(0.23, -0.1);
                let d = |h: f64| -> elltau::Result<Complex64> {
                    Ok((theta1(z, &tau.shifted(c(h, 0.0))?, 0)? - theta1(z, &tau.shifted(c(-h, 0.0))?, 0)?) / (2.0 * h))
                };
                let (d1, d2) = (d(1e-3)?, d(5e-4)?);
                let dt = (4.0 * d2 - d1) / 3.0;
                Ok(rel(4.0 * PI * I * dt, theta1(z, &tau, 2)?))
            }),
        },
        Check {
            module: "specfun",
            name: "eta cubed identity",
            tolerance: |_| 1e-12,
            measure: Box::new(|cfg, _, _| {
                let mut worst: f64 = 0.0;
                for tau in cfg.moduli()? {
                    let e = dedekind_eta(&tau)?;
                    worst = worst.max(rel(2.0 * PI * e * e * e, theta1(c(0.0, 0.0), &tau, 1)?));
                }
                Ok(worst)
            }),
        },
        Check {
            module: "specfun",
            name: "weierstrass p vanishing constant term",
            tolerance: |_| 1e-6,
            measure: Box::new(|cfg, _, _| {
                let tau = cfg.moduli()?[0];
                let f = |z: Complex64| -> elltau::Result<Complex64> { Ok(weierstrass_p(z, &tau, 0)? - 1.0 / (z * z)) };
                let z = c(0.01, 0.004);
                Ok(((4.0 * f(z)? - f(2.0 * z)?) / 3.0).norm())
            }),
        },
        Check {
            module: "specfun",
            name: "hypergeometric ODE",
            tolerance: |_| 1e-6,
            measure: Box::new(|_, _, _| {
                let (a, b, cc) = (c(0.31, 0.0), c(0.17, 0.1), c(0.62, 0.0));
                let x = c(0.3, 0.2);
                let h = 1e-4;
                let f = |x: Complex64| hyp2f1(a, b, cc, x);
                let (fm, f0, fp) = (f(x - h)?, f(x)?, f(x + h)?);
                let d1 = (fp - fm) / (2.0 * h);
                let d2 = (fp - 2.0 * f0 + fm) / (h * h);
                Ok((x * (1.0 - x) * d2 + (cc - (a + b + 1.0) * x) * d1 - a * b * f0).norm())
            }),
        },
        Check {
            module: "specfun",
            name: "A-cycle integral identities",
            tolerance: |_| 1e-6,
            measure: Box::new(|_, _, _| {
                let tau = TorusModulus::from_parts(0.3, 1.2)?;
                let rep = acycle_integral_identities(&tau, &[c(0.11, -0.2), c(0.43, -0.2)], -0.05)?;
                Ok(rep.pairs.iter().map(|p| p.residual).fold(rep.square_residual, f64::max))
            }),
        },
        Check {
            module: "threept",
            name: "det Y_in = 1",
            tolerance: |_| 1e-12,
            measure: Box::new(|cfg, opts, rng| {
                let md = monodromy(cfg, opts)?;
                let mut worst: f64 = 0.0;
                for _ in 0..20 {
                    let z = c(rng.random(), -0.2 - 0.5 * rng.random::<f64>());
                    worst = worst.max((y_in(z, &md)?.det() - 1.0).norm());
                }
                Ok(worst)
            }),
        },
        Check {
            module: "threept",
            name: "m = 0 projector blocks vanish",
            tolerance: |_| 1e-12,
            measure: Box::new(|cfg, opts, _| {
                let md = monodromy(cfg, opts)?;
                let free = MonodromyData::new(md.a, c(0.0, 0.0), md.nu, md.rho)?;
                let tau = cfg.moduli()?[0];
                let n = cfg.n_modes.min(16);
                let grid = CircleGrid::default_for(&tau, n);
                let tabs = all_fourier_coefficients(&free, &tau, &grid, n)?;
                Ok(tabs
                    .iter()
                    .filter(|t| matches!(t.block, Block::A | Block::D))
                    .map(|t| t.max_contour_magnitude(grid.height))
                    .fold(0.0, f64::max))
            }),
        },
        Check {
            module: "threept",
            name: "Fourier reconstruction off the grid",
            tolerance: |_| 1e-6,
            measure: Box::new(|cfg, opts, _| {
                let md = monodromy(cfg, opts)?;
                let tau = cfg.moduli()?[0];
                let grid = CircleGrid::default_for(&tau, cfg.n_modes);
                let h = grid.height;
                let mut worst: f64 = 0.0;
                for t in all_fourier_coefficients(&md, &tau, &grid, cfg.n_modes)? {
                    let r = check_reconstruction(&t, &md, &tau, c(0.137, h), c(0.611, h), f64::INFINITY)?;
                    worst = worst.max(r);
                }
                Ok(worst)
            }),
        },
        Check {
            module: "fredholm",
            name: "Widom form equals K11 determinant",
            tolerance: |_| 1e-8,
            measure: Box::new(|cfg, opts, _| {
                let md = monodromy(cfg, opts)?;
                let tau = cfg.moduli()?[0];
                let k = K11Family::new(&md, &tau, cfg.n_modes)?.det(md.rho)?;
                let w = det_i_minus_k(&assemble_widom_form(&md, &tau, cfg.n_modes)?).value;
                Ok(rel(w, k))
            }),
        },
        Check {
            module: "fredholm",
            name: "theta-pair structure in rho (held-out residual)",
            tolerance: |_| 1e-6,
            measure: Box::new(|cfg, opts, _| {
                let md = monodromy(cfg, opts)?;
                let tau = cfg.moduli()?[0];
                let fam = K11Family::new(&md, &tau, cfg.n_modes)?;
                Ok(solve_q_rho_fit_family(&fam, &tau, &default_rho_samples(&tau))?.fit_residual)
            }),
        },
        Check {
            module: "nekrasov",
            name: "Maya identity (500 random charged partitions)",
            tolerance: |_| 0.0,
            measure: Box::new(|_, _, rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..500 {
                    let y = random_partition(rng, 7, 9);
                    let q = rng.random_range(-6..=6);
                    let cp = ChargedPartition { y: y.clone(), charge: q };
                    let md = maya_from_charged(&cp, 40)?;
                    let sum: f64 = md.particles.iter().sum::<f64>() + md.holes.iter().sum::<f64>();
                    let expect = (q * q) as f64 / 2.0 + y.size() as f64;
                    let count = md.particles.len() as i64 - md.holes.len() as i64 - q;
                    worst = worst.max((sum - expect).abs()).max(count.abs() as f64);
                }
                Ok(worst)
            }),
        },
        Check {
            module: "nekrasov",
            name: "z_bif swap symmetry, |Y| <= 4",
            tolerance: |_| 1e-12,
            measure: Box::new(|_, _, rng| {
                let ps = partitions_up_to(4);
                let x = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                let mut worst: f64 = 0.0;
                for y1 in &ps {
                    for y2 in &ps {
                        let sign = if (y1.size() + y2.size()) % 2 == 0 { 1.0 } else { -1.0 };
                        worst = worst.max(rel(z_bif(-x, y2, y1) * sign, z_bif(x, y1, y2)));
                    }
                }
                Ok(worst)
            }),
        },
        Check {
            module: "nekrasov",
            name: "m = 0 series factorisation",
            tolerance: |_| 1e-10,
            measure: Box::new(|cfg, _, _| {
                let tau = cfg.moduli()?[0];
                let t = tau.tau();
                let (a, nu, rho) = (c(0.31, 0.0), c(0.55, 0.0), c(0.21, 0.0));
                let md = MonodromyData::new(a, c(0.0, 0.0), nu, rho)?;
                let s = tau_cm_series(&md, &tau, &SeriesCutoff::centered(6, 12))?.value;
                let theta_sum = |av: Complex64, nv: Complex64| -> Complex64 {
                    (-8i64..=8)
                        .map(|q| {
                            let q = q as f64;
                            (I * PI * t * (q + av) * (q + av)).exp() * (2.0 * PI * I * q * (nv - rho + t / 2.0)).exp()
                        })
                        .sum()
                };
                let mut euler = Complex64::new(1.0, 0.0);
                let qn = tau.nome();
                let mut p = qn;
                for _ in 0..60 {
                    euler *= (1.0 - p) * (1.0 - p);
                    p *= qn;
                }
                let closed = theta_sum(a, nu) * theta_sum(-a, -nu) / euler;
                Ok(rel(s, closed))
            }),
        },
        Check {
            module: "nekrasov",
            name: "one-puncture Garnier series equals CM series term by term",
            tolerance: |_| 1e-13,
            measure: Box::new(|cfg, opts, _| {
                let md = monodromy(cfg, opts)?;
                let tau = cfg.moduli()?[0];
                let s = series_parameters_from_kernel(&md, &tau);
                let cut = SeriesCutoff::centered(1, 3);
                let cm = tau_cm_terms(&s, &tau, &cut, &SeriesOptions::default())?;
                let g = GarnierConfig::rank1(vec![c(0.0, 0.0)], vec![s.a], vec![s.m], vec![s.nu], s.rho);
                let gt = tau_garnier_terms(&g, &tau, &cut, &SeriesOptions::default())?;
                if cm.len() != gt.len() {
                    return Ok(f64::INFINITY);
                }
                let mut worst: f64 = 0.0;
                for (x, y) in cm.iter().zip(&gt) {
                    if x.charges != y.charges || x.partitions != y.partitions {
                        return Ok(f64::INFINITY);
                    }
                    worst = worst.max(rel(y.value, x.value));
                }
                Ok(worst)
            }),
        },
        Check {
            module: "isomon",
            name: "det / series constant over the tau grid",
            tolerance: |cfg| cfg.tol,
            measure: Box::new(|cfg, opts, _| {
                let md = monodromy(cfg, opts)?;
                let so = SeriesOptions { arm_leg: opts.arm_leg.into(), upsilon: None };
                let mut ratios = Vec::new();
                for tau in cfg.moduli()? {
                    let det = K11Family::new(&md, &tau, cfg.n_modes)?.det(md.rho)?;
                    let s = tau_cm_series_with(&series_parameters_from_kernel(&md, &tau), &tau, &cfg.cutoff(), &so)?.value;
                    ratios.push(det / (cm_series_bridge(&md, &tau)? * s));
                }
                Ok(ratios.iter().map(|r| (r / ratios[0] - 1.0).norm()).fold(0.0, f64::max))
            }),
        },
        Check {
            module: "isomon",
            name: "theta3/theta2 determinant identity with fitted Q",
            tolerance: |_| 1e-8,
            measure: Box::new(|cfg, opts, _| {
                let md = monodromy(cfg, opts)?;
                let tau = cfg.moduli()?[0];
                let fam = K11Family::new(&md, &tau, cfg.n_modes)?;
                let fit = solve_q_rho_fit_family(&fam, &tau, &default_rho_samples(&tau))?;
                Ok(rel(theta_ratio_target(&fam, &tau)?, theta32_ratio(fit.q, &tau)?))
            }),
        },
        Check {
            module: "isomon",
            name: "equation of motion",
            tolerance: |cfg| cfg.eom_tol,
            measure: Box::new(|cfg, opts, _| Ok(verify_eom(&monodromy(cfg, opts)?, &cfg.moduli()?[0], cfg.n_modes, cfg.h)?.residual.norm())),
        },
        Check {
            module: "isomon",
            name: "Hamiltonian relation",
            tolerance: |cfg| cfg.hamiltonian_tol,
            measure: Box::new(|cfg, opts, _| {
                Ok(verify_hamiltonian(&monodromy(cfg, opts)?, &cfg.moduli()?[0], cfg.n_modes, cfg.h)?.residual.norm())
            }),
        },
    ]
}

fn monodromy(cfg: &RunConfig, opts: &Options) -> elltau::Result<MonodromyData> {
    let md = MonodromyData::new(cfg.a.into(), cfg.m.into(), cfg.nu.into(), cfg.rho.into())?;
    Ok(if opts.invert_delta_nu { md.with_delta_nu(elltau::threept::DeltaNuConvention::Inverted) } else { md })
}

pub const MODULES: [&str; 5] = ["specfun", "threept", "fredholm", "nekrasov", "isomon"];

pub fn verify(cfg: &RunConfig, opts: &Options) -> Result<Document<CheckRecord>> {
    let mut records = Vec::new();
    let mut summary = Summary::default();
    for (i, check) in checks().into_iter().enumerate() {
        if opts.filter.as_deref().is_some_and(|f| f != check.module) {
            continue;
        }
        // One stream per check so filtering does not change the draws.
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
        let tolerance = (check.tolerance)(cfg);
        let rec = match (check.measure)(cfg, opts, &mut rng) {
            Ok(v) => CheckRecord { module: check.module, name: check.name, tolerance, measured: Some(v), pass: v <= tolerance, error: None },
            Err(e) => CheckRecord { module: check.module, name: check.name, tolerance, measured: None, pass: false, error: Some(e.to_string()) },
        };
        if rec.error.is_some() {
            summary.errors += 1;
        } else if !rec.pass {
            summary.failed += 1;
        }
        let shown = rec.measured.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "error".into());
        eprintln!("{} {}::{} measured={shown} tol={tolerance:.1e}", if rec.pass { "PASS" } else { "FAIL" }, rec.module, rec.name);
        let stop = !rec.pass && !opts.keep_going && rec.error.is_some();
        records.push(rec);
        if stop {
            break;
        }
    }
    summary.records = records.len();
    Ok(Document {
        schema_version: crate::report::SCHEMA_VERSION,
        command: "verify",
        config: cfg.clone(),
        options: serde_json::to_value(opts).unwrap_or_default(),
        records,
        summary,
    })
}
