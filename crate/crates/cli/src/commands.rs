//! One function per subcommand. Each returns the documents to write; nothing
//! is written until every computation has succeeded.

use std::fmt::Write as _;

use cqed_core::bench::run_bench;
use cqed_core::identical::{limit_g2, limit_transmission};
use cqed_core::montecarlo::run_mc;
use cqed_core::oracle::{g2_tau_regression, oracle_spectrum};
use cqed_core::{Scatterer, SystemParams};
use serde::Serialize;

use crate::config::RunConfig;
use crate::{CliError, Format};

/// Band around 1 used for the settling-time summary.
pub const SETTLING_TOL: f64 = 0.05;
/// Relative deviation allowed between the oracle and the scattering route.
pub const VALIDATE_TOL: f64 = 0.02;

/// A rendered output; `suffix` distinguishes the files of an `N` sweep.
pub struct Document {
    pub suffix: Option<String>,
    pub body: String,
    /// Printed to stderr after the files are written.
    pub summary: Option<String>,
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

/// Runs of systems: one per `n_sweep` entry, or the configured system alone.
fn systems(cfg: &RunConfig) -> Result<Vec<(Option<String>, SystemParams)>, CliError> {
    match &cfg.n_sweep {
        Some(ns) => ns.iter().map(|&n| Ok((Some(format!("N{n}")), cfg.params(Some(n), 1.0)?))).collect(),
        None => Ok(vec![(None, cfg.params(None, 1.0)?)]),
    }
}

#[derive(Serialize)]
struct Contribution {
    index: usize,
    magnitude: f64,
    phase: f64,
}

#[derive(Serialize)]
struct SpectrumOut {
    unit: cqed_core::UnitTag,
    n_emitters: usize,
    #[serde(rename = "omega_L")]
    omega_l: Vec<f64>,
    #[serde(rename = "T")]
    t: Vec<f64>,
    g2_0: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contributions: Option<Vec<Vec<Contribution>>>,
}

pub fn spectrum(cfg: &RunConfig, format: Format, contributions: bool) -> Result<Vec<Document>, CliError> {
    let grid = cfg.omega_grid()?;
    let k = cfg.kappa()?;
    let mut docs = Vec::new();
    for (suffix, p) in systems(cfg)? {
        let n = p.n_emitters();
        let s = Scatterer::auto(p);
        let sp = s.spectrum(&grid)?;
        let parts = if contributions {
            let mut rows = Vec::with_capacity(grid.len());
            for &w in &grid {
                let (_, c) = s.g2_zero(w)?;
                rows.push(c.into_iter().map(|d| Contribution { index: d.index, magnitude: d.magnitude, phase: d.phase }).collect::<Vec<_>>());
            }
            Some(rows)
        } else {
            None
        };
        let out = SpectrumOut { unit: cfg.unit, n_emitters: n, omega_l: grid.iter().map(|w| w * k).collect(), t: sp.t, g2_0: sp.g2zero, contributions: parts };
        let body = match format {
            Format::Json => json(&out),
            Format::Csv => spectrum_csv(&out),
        };
        docs.push(Document { suffix, body, summary: None });
    }
    Ok(docs)
}

fn spectrum_csv(out: &SpectrumOut) -> String {
    let mut idx: Vec<usize> = out.contributions.iter().flatten().flatten().map(|c| c.index).collect();
    idx.sort_unstable();
    idx.dedup();
    let mut s = String::from("omega_L,T,g2_0");
    for i in &idx {
        let _ = write!(s, ",gamma_abs_{i},gamma_arg_{i}");
    }
    s.push('\n');
    for r in 0..out.omega_l.len() {
        let _ = write!(s, "{},{},{}", out.omega_l[r], out.t[r], out.g2_0[r]);
        if let Some(rows) = &out.contributions {
            for i in &idx {
                match rows[r].iter().find(|c| c.index == *i) {
                    Some(c) => {
                        let _ = write!(s, ",{},{}", c.magnitude, c.phase);
                    }
                    None => s.push_str(",,"),
                }
            }
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct G2TauOut {
    unit: cqed_core::UnitTag,
    n_emitters: usize,
    #[serde(rename = "omega_L")]
    omega_l: f64,
    tau: Vec<f64>,
    g2: Vec<f64>,
    settling_tol: f64,
    settling_time: Option<f64>,
}

pub fn g2tau(cfg: &RunConfig, format: Format) -> Result<Vec<Document>, CliError> {
    let w = cfg.omega_l()?;
    let taus = cfg.taus()?;
    let ts = cfg.tau_scale()?;
    let mut docs = Vec::new();
    for (suffix, p) in systems(cfg)? {
        let n = p.n_emitters();
        let tr = Scatterer::auto(p).g2_tau(w, &taus)?;
        let settle = tr.settling_time(SETTLING_TOL).map(|t| t / ts);
        let out = G2TauOut {
            unit: cfg.unit,
            n_emitters: n,
            omega_l: cfg.omega_l.unwrap_or_default(),
            tau: tr.taus.iter().map(|t| t / ts).collect(),
            g2: tr.g2,
            settling_tol: SETTLING_TOL,
            settling_time: settle,
        };
        let body = match format {
            Format::Json => json(&out),
            Format::Csv => {
                let mut s = String::from("tau,g2\n");
                for (t, g) in out.tau.iter().zip(&out.g2) {
                    let _ = writeln!(s, "{t},{g}");
                }
                s
            }
        };
        let label = suffix.as_deref().map(|x| format!("{x}: ")).unwrap_or_default();
        let summary = Some(match settle {
            Some(t) => format!("{label}settling time (|g2 - 1| < {SETTLING_TOL}): {t}"),
            None => format!("{label}g2 has not settled within {SETTLING_TOL} on the delay grid"),
        });
        docs.push(Document { suffix, body, summary });
    }
    Ok(docs)
}

#[derive(Serialize)]
struct LimitsOut {
    unit: cqed_core::UnitTag,
    n_emitters: usize,
    #[serde(rename = "omega_L")]
    omega_l: Vec<f64>,
    #[serde(rename = "N2_T")]
    n2_t: Vec<f64>,
    #[serde(rename = "N2_T_limit")]
    n2_t_limit: Vec<f64>,
    g2_0: Vec<f64>,
    g2_0_limit: Vec<f64>,
}

pub fn identical_limits(cfg: &RunConfig, format: Format) -> Result<Vec<Document>, CliError> {
    let base = cfg.identical_params()?;
    let grid = cfg.omega_grid()?;
    let k = cfg.kappa()?;
    let ns = cfg.n_sweep.clone().map(|v| v.into_iter().map(Some).collect()).unwrap_or_else(|| vec![None]);
    let mut docs = Vec::new();
    for n in ns {
        let ip = n.map_or(base, |n| base.with_n(n));
        let s = Scatterer::auto(ip.to_system()?);
        let sp = s.spectrum(&grid)?;
        let n2 = (ip.n * ip.n) as f64;
        let out = LimitsOut {
            unit: cfg.unit,
            n_emitters: ip.n,
            omega_l: grid.iter().map(|w| w * k).collect(),
            n2_t: sp.t.iter().map(|t| n2 * t).collect(),
            n2_t_limit: grid.iter().map(|&w| limit_transmission(&ip, w)).collect(),
            g2_0: sp.g2zero,
            g2_0_limit: grid.iter().map(|&w| limit_g2(&ip, w)).collect(),
        };
        let body = match format {
            Format::Json => json(&out),
            Format::Csv => {
                let mut s = String::from("omega_L,N2_T,N2_T_limit,g2_0,g2_0_limit\n");
                for r in 0..out.omega_l.len() {
                    let _ = writeln!(s, "{},{},{},{},{}", out.omega_l[r], out.n2_t[r], out.n2_t_limit[r], out.g2_0[r], out.g2_0_limit[r]);
                }
                s
            }
        };
        docs.push(Document { suffix: n.map(|n| format!("N{n}")), body, summary: None });
    }
    Ok(docs)
}

pub fn mc(cfg: &RunConfig, format: Format, seed: Option<u64>) -> Result<Vec<Document>, CliError> {
    let mut mc = cfg.mc.clone().ok_or_else(|| CliError::Config("missing `mc` section".into()))?;
    if let Some(s) = seed.or(cfg.seed) {
        mc.seed = s;
    }
    let r = run_mc(&mc)?;
    let body = match format {
        Format::Json => {
            let mut s = r.to_json();
            s.push('\n');
            s
        }
        Format::Csv => r.histograms_csv(),
    };
    let summary = format!("{} runs, {} dips, {} failed runs, config hash {}", r.runs.len(), r.dips().count(), r.provenance.failed_runs, r.provenance.config_hash);
    Ok(vec![Document { suffix: None, body, summary: Some(summary) }])
}

pub fn bench(cfg: &RunConfig, format: Format, seed: Option<u64>) -> Result<Vec<Document>, CliError> {
    let mut b = cfg.bench.clone().unwrap_or_default();
    if let Some(s) = seed.or(cfg.seed) {
        b.seed = s;
    }
    let r = run_bench(&b)?;
    let body = match format {
        Format::Json => json(&r),
        Format::Csv => {
            let mut s = String::from("N,dim1,dim2,transmission_seconds,g2_seconds\n");
            for row in &r.rows {
                let g2 = row.g2_seconds.map(|x| x.to_string()).unwrap_or_default();
                let _ = writeln!(s, "{},{},{},{},{g2}", row.n, row.dim1, row.dim2, row.transmission_seconds);
            }
            s
        }
    };
    let fmt = |e: Option<f64>| e.map_or("n/a".to_string(), |x| format!("{x:.2}"));
    let summary = format!("fitted exponents: transmission {}, g2 {}", fmt(r.transmission_exponent), fmt(r.g2_exponent));
    Ok(vec![Document { suffix: None, body, summary: Some(summary) }])
}

#[derive(Serialize)]
struct Deviation {
    max_rel: f64,
    /// Frequency (document unit) or delay of the worst point.
    at: f64,
}

#[derive(Serialize)]
struct ValidateOut {
    unit: cqed_core::UnitTag,
    tolerance: f64,
    #[serde(rename = "T")]
    t: Deviation,
    g2_0: Deviation,
    #[serde(skip_serializing_if = "Option::is_none")]
    g2_tau: Option<Deviation>,
    pass: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn worst(pairs: impl Iterator<Item = (f64, f64, f64)>) -> Deviation {
    pairs.fold(Deviation { max_rel: 0.0, at: f64::NAN }, |d, (x, a, b)| {
        let r = rel(a, b);
        if r > d.max_rel || d.at.is_nan() { Deviation { max_rel: r, at: x } } else { d }
    })
}

/// Returns the report and whether every deviation is inside [`VALIDATE_TOL`].
pub fn validate(cfg: &RunConfig, format: Format, kappa_c_factor: f64) -> Result<(Vec<Document>, bool), CliError> {
    let p = cfg.params(None, 1.0)?;
    let q = cfg.params(None, kappa_c_factor)?;
    let grid = cfg.omega_grid()?;
    let k = cfg.kappa()?;
    let drive = cfg.drive();
    let oracle = oracle_spectrum(&p, &grid, &drive)?;
    let s = Scatterer::new(q);
    let sp = s.spectrum(&grid)?;
    let t = worst(grid.iter().zip(&sp.t).zip(&oracle).map(|((w, a), o)| (w * k, *a, o.t)));
    let g2_0 = worst(grid.iter().zip(&sp.g2zero).zip(&oracle).map(|((w, a), o)| (w * k, *a, o.g2zero)));
    let g2_tau = match (cfg.omega_l, cfg.tau_grid) {
        (Some(_), Some(_)) => {
            let (w, taus, ts) = (cfg.omega_l()?, cfg.taus()?, cfg.tau_scale()?);
            let a = s.g2_tau(w, &taus)?;
            let b = g2_tau_regression(&p, w, &drive, &taus)?;
            Some(worst(taus.iter().zip(&a.g2).zip(&b.g2).map(|((t, x), y)| (t / ts, *x, *y))))
        }
        _ => None,
    };
    let pass = t.max_rel < VALIDATE_TOL && g2_0.max_rel < VALIDATE_TOL && g2_tau.as_ref().is_none_or(|d| d.max_rel < VALIDATE_TOL);
    let out = ValidateOut { unit: cfg.unit, tolerance: VALIDATE_TOL, t, g2_0, g2_tau, pass };
    let body = match format {
        Format::Json => json(&out),
        Format::Csv => {
            let mut s = String::from("quantity,max_rel_dev,at\n");
            let _ = writeln!(s, "T,{},{}", out.t.max_rel, out.t.at);
            let _ = writeln!(s, "g2_0,{},{}", out.g2_0.max_rel, out.g2_0.at);
            if let Some(d) = &out.g2_tau {
                let _ = writeln!(s, "g2_tau,{},{}", d.max_rel, d.at);
            }
            s
        }
    };
    let mut lines = vec![
        format!("T: max rel dev {:e} at omega_L = {}", out.t.max_rel, out.t.at),
        format!("g2(0): max rel dev {:e} at omega_L = {}", out.g2_0.max_rel, out.g2_0.at),
    ];
    if let Some(d) = &out.g2_tau {
        lines.push(format!("g2(tau): max rel dev {:e} at tau = {}", d.max_rel, d.at));
    }
    lines.push(if pass { format!("validation passed (tolerance {VALIDATE_TOL})") } else { format!("validation FAILED (tolerance {VALIDATE_TOL})") });
    Ok((vec![Document { suffix: None, body, summary: Some(lines.join("\n")) }], pass))
}
