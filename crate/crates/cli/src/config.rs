use anyhow::{bail, Result};
use elltau::nekrasov::{GarnierConfig, SeriesCutoff};
use elltau::specfun::TorusModulus;
use elltau::threept::MonodromyData;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex number as written in configs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "CxIn")]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CxIn {
    Real(f64),
    Pair { re: f64, im: f64 },
}

impl From<CxIn> for Cx {
    fn from(v: CxIn) -> Self {
        match v {
            CxIn::Real(re) => Cx { re, im: 0.0 },
            CxIn::Pair { re, im } => Cx { re, im },
        }
    }
}

impl From<Complex64> for Cx {
    fn from(z: Complex64) -> Self {
        Cx { re: z.re, im: z.im }
    }
}

impl From<Cx> for Complex64 {
    fn from(c: Cx) -> Self {
        Complex64::new(c.re, c.im)
    }
}

impl Cx {
    pub const fn new(re: f64, im: f64) -> Self {
        Cx { re, im }
    }

    fn finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GarnierSection {
    pub z: Vec<Cx>,
    pub a: Vec<Cx>,
    pub m: Vec<Cx>,
    pub nu: Vec<Cx>,
    pub rho: Cx,
    /// Λ_j; the rank-one choice Λ_j = −m_j when absent.
    #[serde(default)]
    pub lambda: Option<Vec<Cx>>,
    #[serde(default = "default_garnier_taus")]
    pub taus: Vec<Cx>,
    /// (max_charge, max_boxes) pairs, evaluated in order.
    #[serde(default = "default_garnier_cutoffs")]
    pub cutoffs: Vec<(i64, u32)>,
}

fn default_garnier_taus() -> Vec<Cx> {
    vec![Cx::new(0.0, 1.3)]
}

fn default_garnier_cutoffs() -> Vec<(i64, u32)> {
    vec![(2, 6), (3, 6)]
}

impl GarnierSection {
    pub fn to_config(&self) -> GarnierConfig {
        let c = |v: &Vec<Cx>| v.iter().map(|&x| x.into()).collect::<Vec<Complex64>>();
        let mut cfg = GarnierConfig::rank1(c(&self.z), c(&self.a), c(&self.m), c(&self.nu), self.rho.into());
        if let Some(l) = &self.lambda {
            cfg.lambda = c(l);
        }
        cfg
    }
}

/// All parameters of a run. Every field has a default, and the effective
/// values are copied into each report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub a: Cx,
    pub m: Cx,
    pub nu: Cx,
    pub rho: Cx,
    pub taus: Vec<Cx>,
    pub n_modes: usize,
    pub max_charge: i64,
    pub max_boxes: u32,
    pub tol: f64,
    pub eom_tol: f64,
    pub hamiltonian_tol: f64,
    pub h: f64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub garnier: Option<GarnierSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            a: Cx::new(0.31, 0.0),
            m: Cx::new(0.17, 0.0),
            nu: Cx::new(0.05, 0.0),
            rho: Cx::new(0.21, 0.0),
            taus: vec![Cx::new(0.0, 0.9), Cx::new(0.0, 1.1), Cx::new(0.2, 1.2)],
            n_modes: 32,
            max_charge: 2,
            max_boxes: 8,
            tol: 1e-6,
            eom_tol: 1e-5,
            hamiltonian_tol: 1e-4,
            h: 1e-3,
            seed: 0,
            threads: None,
            garnier: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&std::path::Path>) -> Result<Self> {
        let cfg: RunConfig = match path {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
            None => RunConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("m", self.m), ("nu", self.nu), ("rho", self.rho)] {
            if !v.finite() {
                bail!("{name} is not finite");
            }
        }
        self.monodromy()?;
        if self.taus.is_empty() {
            bail!("taus is empty");
        }
        for t in &self.taus {
            if !t.finite() || t.im <= 0.0 {
                bail!("tau = {}+{}i is not in the upper half-plane", t.re, t.im);
            }
        }
        if self.n_modes == 0 || self.max_charge < 0 {
            bail!("truncations must be positive");
        }
        for (name, v) in [("tol", self.tol), ("eom_tol", self.eom_tol), ("hamiltonian_tol", self.hamiltonian_tol), ("h", self.h)] {
            if !(v.is_finite() && v > 0.0) {
                bail!("{name} must be a positive finite number");
            }
        }
        if self.threads == Some(0) {
            bail!("threads must be positive");
        }
        if let Some(g) = &self.garnier {
            if g.cutoffs.is_empty() || g.cutoffs.iter().any(|c| c.0 < 0) {
                bail!("garnier cutoffs must be non-empty and non-negative");
            }
            let cfg = g.to_config();
            for t in &g.taus {
                if !t.finite() || t.im <= 0.0 {
                    bail!("garnier tau = {}+{}i is not in the upper half-plane", t.re, t.im);
                }
                cfg.validate(&TorusModulus::new((*t).into())?)?;
            }
        }
        Ok(())
    }

    pub fn monodromy(&self) -> Result<MonodromyData> {
        Ok(MonodromyData::new(self.a.into(), self.m.into(), self.nu.into(), self.rho.into())?)
    }

    pub fn moduli(&self) -> Result<Vec<TorusModulus>> {
        Ok(self.taus.iter().map(|&t| TorusModulus::new(t.into())).collect::<Result<_, _>>()?)
    }

    pub fn cutoff(&self) -> SeriesCutoff {
        SeriesCutoff::new(self.max_charge, self.max_boxes)
    }
}
