use crate::config::{Cx, RunConfig};
use crate::report::{opt, Document, FlatRow, Summary};
use anyhow::Result;
use elltau::fredholm::K11Family;
use elltau::isomon::{
    assemble_tau_garnier, assemble_tau_cm, cm_series_bridge, invert_theta32, rank1_prefactors, solve_q_garnier_fit,
    theta_ratio_target, verify_eom, Rank1Kind,
};
use elltau::nekrasov::{
    series_parameters_from_kernel, tau_cm_series_with, tau_cm_terms, tau_garnier_series, ArmLegConvention, SeriesCutoff,
    SeriesOptions,
};
use elltau::specfun::{weierstrass_p, TorusModulus};
use elltau::threept::{DeltaNuConvention, MonodromyData};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Only {
    Det,
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ArmLeg {
    #[default]
    Standard,
    Swapped,
    HalfSwapped,
}

impl From<ArmLeg> for ArmLegConvention {
    fn from(a: ArmLeg) -> Self {
        match a {
            ArmLeg::Standard => ArmLegConvention::Standard,
            ArmLeg::Swapped => ArmLegConvention::Swapped,
            ArmLeg::HalfSwapped => ArmLegConvention::SwappedFirstProduct,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Options {
    pub only: Option<Only>,
    pub filter: Option<String>,
    pub keep_going: bool,
    pub arm_leg: ArmLeg,
    pub invert_delta_nu: bool,
}

impl Options {
    fn monodromy(&self, cfg: &RunConfig) -> Result<MonodromyData> {
        let md = cfg.monodromy()?;
        Ok(if self.invert_delta_nu { md.with_delta_nu(DeltaNuConvention::Inverted) } else { md })
    }

    fn series_options(&self) -> SeriesOptions {
        SeriesOptions { arm_leg: self.arm_leg.into(), upsilon: None }
    }
}

/// Keep records up to and including the first error unless `keep_going`.
fn cut_at_error<R>(records: Vec<R>, has_error: impl Fn(&R) -> bool, keep_going: bool) -> Vec<R> {
    if keep_going {
        return records;
    }
    let mut out = Vec::new();
    for r in records {
        let stop = has_error(&r);
        out.push(r);
        if stop {
            break;
        }
    }
    out
}

fn document<R: Serialize>(command: &'static str, cfg: &RunConfig, opts: &Options, records: Vec<R>, summary: Summary) -> Document<R> {
    Document {
        schema_version: crate::report::SCHEMA_VERSION,
        command,
        config: cfg.clone(),
        options: serde_json::to_value(opts).unwrap_or_default(),
        records,
        summary,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TauCmRecord {
    pub tau: Cx,
    pub det: Option<Cx>,
    pub q: Option<Cx>,
    /// |det(ρ = Q)|/|det(ρ)|.
    pub zero_residual: Option<f64>,
    pub tau_cm: Option<Cx>,
    pub series: Option<Cx>,
    pub series_boundary_weight: Option<f64>,
    /// η^{−2m²}e^{iπτm²/6}e^{−2πiτa²}·series, the determinant predicted by the series.
    pub det_from_series: Option<Cx>,
    /// det / det_from_series.
    pub upsilon: Option<Cx>,
    /// |Υ/Υ_first − 1| over the grid.
    pub upsilon_spread: Option<f64>,
    pub error: Option<String>,
}

impl FlatRow for TauCmRecord {
    fn headers() -> Vec<&'static str> {
        vec![
            "tau_re", "tau_im", "det_re", "det_im", "q_re", "q_im", "zero_residual", "tau_cm_re", "tau_cm_im", "series_re", "series_im",
            "upsilon_re", "upsilon_im", "upsilon_spread", "error",
        ]
    }

    fn row(&self) -> Vec<String> {
        let re = |c: &Option<Cx>| opt(&c.map(|c| c.re));
        let im = |c: &Option<Cx>| opt(&c.map(|c| c.im));
        vec![
            self.tau.re.to_string(),
            self.tau.im.to_string(),
            re(&self.det),
            im(&self.det),
            re(&self.q),
            im(&self.q),
            opt(&self.zero_residual),
            re(&self.tau_cm),
            im(&self.tau_cm),
            re(&self.series),
            im(&self.series),
            re(&self.upsilon),
            im(&self.upsilon),
            opt(&self.upsilon_spread),
            opt(&self.error),
        ]
    }
}

fn tau_cm_point(cfg: &RunConfig, opts: &Options, md: &MonodromyData, tau: &TorusModulus) -> elltau::Result<TauCmRecord> {
    let mut rec = TauCmRecord {
        tau: tau.tau().into(),
        det: None,
        q: None,
        zero_residual: None,
        tau_cm: None,
        series: None,
        series_boundary_weight: None,
        det_from_series: None,
        upsilon: None,
        upsilon_spread: None,
        error: None,
    };
    let mut det = None;
    if opts.only != Some(Only::Series) {
        let family = K11Family::new(md, tau, cfg.n_modes)?;
        let d = family.det(md.rho)?;
        let q = invert_theta32(theta_ratio_target(&family, tau)?, tau)?;
        rec.det = Some(d.into());
        rec.q = Some(q.into());
        rec.zero_residual = Some(family.det(q)?.norm() / d.norm());
        rec.tau_cm = Some(assemble_tau_cm(md, tau, q, d, Complex64::new(1.0, 0.0))?.tau_value.into());
        det = Some(d);
    }
    if opts.only != Some(Only::Det) {
        let s = series_parameters_from_kernel(md, tau);
        let sv = tau_cm_series_with(&s, tau, &cfg.cutoff(), &opts.series_options())?;
        let predicted = cm_series_bridge(md, tau)? * sv.value;
        rec.series = Some(sv.value.into());
        rec.series_boundary_weight = Some(sv.boundary_weight);
        rec.det_from_series = Some(predicted.into());
        if let Some(d) = det {
            rec.upsilon = Some((d / predicted).into());
        }
    }
    Ok(rec)
}

pub fn tau_cm(cfg: &RunConfig, opts: &Options) -> Result<Document<TauCmRecord>> {
    let md = opts.monodromy(cfg)?;
    let taus = cfg.moduli()?;
    let records: Vec<TauCmRecord> = taus
        .par_iter()
        .map(|t| {
            tau_cm_point(cfg, opts, &md, t).unwrap_or_else(|e| TauCmRecord {
                tau: t.tau().into(),
                det: None,
                q: None,
                zero_residual: None,
                tau_cm: None,
                series: None,
                series_boundary_weight: None,
                det_from_series: None,
                upsilon: None,
                upsilon_spread: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let mut records = cut_at_error(records, |r| r.error.is_some(), opts.keep_going);
    let first = records.iter().find_map(|r| r.upsilon).map(Complex64::from);
    let mut summary = Summary { records: records.len(), ..Default::default() };
    for r in &mut records {
        if let (Some(u0), Some(u)) = (first, r.upsilon) {
            r.upsilon_spread = Some((Complex64::from(u) / u0 - 1.0).norm());
        }
        if r.error.is_some() {
            summary.errors += 1;
        } else if r.upsilon_spread.is_some_and(|s| s > cfg.tol) || r.zero_residual.is_some_and(|z| z > cfg.tol) {
            summary.failed += 1;
        }
    }
    Ok(document("tau-cm", cfg, opts, records, summary))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub tau: Cx,
    pub q: Option<Cx>,
    pub p: Option<Cx>,
    /// P² − m²℘(2Q|τ).
    pub hamiltonian: Option<Cx>,
    pub eom_residual: Option<Cx>,
    pub eom_residual_abs: Option<f64>,
    pub error: Option<String>,
}

impl FlatRow for TrajectoryRecord {
    fn headers() -> Vec<&'static str> {
        vec!["tau_re", "tau_im", "q_re", "q_im", "p_re", "p_im", "h_re", "h_im", "eom_residual_abs", "error"]
    }

    fn row(&self) -> Vec<String> {
        let re = |c: &Option<Cx>| opt(&c.map(|c| c.re));
        let im = |c: &Option<Cx>| opt(&c.map(|c| c.im));
        vec![
            self.tau.re.to_string(),
            self.tau.im.to_string(),
            re(&self.q),
            im(&self.q),
            re(&self.p),
            im(&self.p),
            re(&self.hamiltonian),
            im(&self.hamiltonian),
            opt(&self.eom_residual_abs),
            opt(&self.error),
        ]
    }
}

pub fn solve_q(cfg: &RunConfig, opts: &Options) -> Result<Document<TrajectoryRecord>> {
    let md = opts.monodromy(cfg)?;
    let taus = cfg.moduli()?;
    let point = |t: &TorusModulus| -> elltau::Result<TrajectoryRecord> {
        let rep = verify_eom(&md, t, cfg.n_modes, cfg.h)?;
        let h = rep.p * rep.p - md.m * md.m * weierstrass_p(2.0 * rep.q, t, 0)?;
        Ok(TrajectoryRecord {
            tau: t.tau().into(),
            q: Some(rep.q.into()),
            p: Some(rep.p.into()),
            hamiltonian: Some(h.into()),
            eom_residual: Some(rep.residual.into()),
            eom_residual_abs: Some(rep.residual.norm()),
            error: None,
        })
    };
    let records: Vec<TrajectoryRecord> = taus
        .par_iter()
        .map(|t| {
            point(t).unwrap_or_else(|e| TrajectoryRecord {
                tau: t.tau().into(),
                q: None,
                p: None,
                hamiltonian: None,
                eom_residual: None,
                eom_residual_abs: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let records = cut_at_error(records, |r| r.error.is_some(), opts.keep_going);
    let mut summary = Summary { records: records.len(), ..Default::default() };
    for r in &records {
        if r.error.is_some() {
            summary.errors += 1;
        } else if r.eom_residual_abs.is_some_and(|x| x > cfg.eom_tol) {
            summary.failed += 1;
        }
    }
    Ok(document("solve-q", cfg, opts, records, summary))
}

#[derive(Debug, Clone, Serialize)]
pub struct GarnierRecord {
    pub tau: Cx,
    pub max_charge: i64,
    pub max_boxes: u32,
    pub series: Option<Cx>,
    pub boundary_weight: Option<f64>,
    /// |S − S_previous|/|S| against the preceding cutoff at the same τ.
    pub delta: Option<f64>,
    pub rank1_prefactor: Option<Cx>,
    /// Fitted Q and the assembled tau function (last cutoff only).
    pub q: Option<Cx>,
    pub tau_garnier: Option<Cx>,
    pub error: Option<String>,
}

impl FlatRow for GarnierRecord {
    fn headers() -> Vec<&'static str> {
        vec!["tau_re", "tau_im", "max_charge", "max_boxes", "series_re", "series_im", "delta", "q_re", "q_im", "error"]
    }

    fn row(&self) -> Vec<String> {
        let re = |c: &Option<Cx>| opt(&c.map(|c| c.re));
        let im = |c: &Option<Cx>| opt(&c.map(|c| c.im));
        vec![
            self.tau.re.to_string(),
            self.tau.im.to_string(),
            self.max_charge.to_string(),
            self.max_boxes.to_string(),
            re(&self.series),
            im(&self.series),
            opt(&self.delta),
            re(&self.q),
            im(&self.q),
            opt(&self.error),
        ]
    }
}

pub fn garnier(cfg: &RunConfig, opts: &Options) -> Result<Document<GarnierRecord>> {
    let section = cfg.garnier.clone().unwrap_or_else(default_garnier);
    let g = section.to_config();
    let jobs: Vec<(Cx, (i64, u32))> = section.taus.iter().flat_map(|&t| section.cutoffs.iter().map(move |&c| (t, c))).collect();
    let last = *section.cutoffs.last().unwrap();
    let mut records: Vec<GarnierRecord> = jobs
        .par_iter()
        .map(|&(t, (mc, mb))| {
            let mut rec = GarnierRecord {
                tau: t,
                max_charge: mc,
                max_boxes: mb,
                series: None,
                boundary_weight: None,
                delta: None,
                rank1_prefactor: None,
                q: None,
                tau_garnier: None,
                error: None,
            };
            let run = |rec: &mut GarnierRecord| -> elltau::Result<()> {
                let tau = TorusModulus::new(t.into())?;
                let cutoff = SeriesCutoff::centered(mc, mb);
                let s = tau_garnier_series(&g, &tau, &cutoff)?;
                rec.series = Some(s.value.into());
                rec.boundary_weight = Some(s.boundary_weight);
                rec.rank1_prefactor = Some(rank1_prefactors(Rank1Kind::Garnier(&g), &tau)?.into());
                if (mc, mb) == last {
                    let samples = elltau::isomon::default_rho_samples(&tau);
                    let fit = solve_q_garnier_fit(&g, &tau, &cutoff, &samples)?;
                    rec.q = Some(fit.q.into());
                    rec.tau_garnier = Some(assemble_tau_garnier(&g, &tau, fit.q, s.value, Complex64::new(1.0, 0.0))?.tau_value.into());
                }
                Ok(())
            };
            if let Err(e) = run(&mut rec) {
                rec.error = Some(e.to_string());
            }
            rec
        })
        .collect();
    for i in 1..records.len() {
        if records[i].tau == records[i - 1].tau {
            if let (Some(a), Some(b)) = (records[i - 1].series, records[i].series) {
                let (a, b) = (Complex64::from(a), Complex64::from(b));
                records[i].delta = Some((b - a).norm() / b.norm());
            }
        }
    }
    let records = cut_at_error(records, |r| r.error.is_some(), opts.keep_going);
    let mut summary = Summary { records: records.len(), ..Default::default() };
    for r in &records {
        if r.error.is_some() {
            summary.errors += 1;
        } else if (r.max_charge, r.max_boxes) == last && r.delta.is_some_and(|d| d > cfg.tol) {
            summary.failed += 1;
        }
    }
    Ok(document("garnier", cfg, opts, records, summary))
}

/// Two punctures on τ = 1.3i with the second one shifted into the lower
/// part of the fundamental domain.
pub fn default_garnier() -> crate::config::GarnierSection {
    let tau = Complex64::new(0.0, 1.3);
    crate::config::GarnierSection {
        z: vec![Cx::new(0.0, 0.0), (-0.37 * tau).into()],
        a: vec![Cx::new(0.3, 0.0), Cx::new(0.22, 0.0)],
        m: vec![Cx::new(0.1, 0.0), Cx::new(0.15, 0.0)],
        nu: vec![Cx::new(0.05, 0.0), Cx::new(0.12, 0.0)],
        rho: Cx::new(0.21, 0.0),
        lambda: None,
        taus: vec![tau.into()],
        cutoffs: vec![(2, 6), (3, 6)],
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TermRecord {
    pub charges: Vec<i64>,
    pub partitions: Vec<Vec<u32>>,
    pub value: Cx,
}

impl FlatRow for TermRecord {
    fn headers() -> Vec<&'static str> {
        vec!["charges", "partitions", "re", "im"]
    }

    fn row(&self) -> Vec<String> {
        vec![format!("{:?}", self.charges), format!("{:?}", self.partitions), self.value.re.to_string(), self.value.im.to_string()]
    }
}

/// Raw summands of the one-punctured series at the first τ of the grid.
pub fn nekrasov_table(cfg: &RunConfig, opts: &Options) -> Result<Document<TermRecord>> {
    let md = opts.monodromy(cfg)?;
    let tau = cfg.moduli()?[0];
    let s = series_parameters_from_kernel(&md, &tau);
    let terms = tau_cm_terms(&s, &tau, &cfg.cutoff(), &opts.series_options())?;
    let records: Vec<TermRecord> = terms
        .into_iter()
        .map(|t| TermRecord { charges: t.charges, partitions: t.partitions.iter().map(|p| p.rows().to_vec()).collect(), value: t.value.into() })
        .collect();
    let summary = Summary { records: records.len(), ..Default::default() };
    Ok(document("nekrasov-table", cfg, opts, records, summary))
}
