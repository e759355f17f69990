//! Inhomogeneous broadening: ensembles of emitters with normally scattered
//! transition frequencies, dip detection in `g²(0; ω)` and dip statistics.
//!
//! Classification rules are heuristics; the thresholds are listed in
//! [`HEURISTICS`] and echoed in every [`MCResult`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::identical::{bright_h1, IdenticalParams};
use crate::model::{Emitter, SystemParams, UnitTag};
use crate::eigen::diag_complex_symmetric;
use crate::scattering::{Scatterer, Spectrum};

/// Dip within this many `γ` of an emitter can be subradiant.
pub const SUBRADIANT_RADIUS: f64 = 3.0;
/// Subradiant dips are at most this many `γ` wide at half depth.
pub const SUBRADIANT_MAX_WIDTH: f64 = 2.0;
/// Bunching maxima within this many `γ` of a transmission minimum.
pub const FANO_RADIUS: f64 = 3.0;
/// `g²` must fall this far below 1 to count as a dip.
pub const DIP_THRESHOLD: f64 = 1e-9;

pub const HEURISTICS: &[&str] = &[
    "subradiant: within 3 gamma of a sampled emitter frequency and half-depth width <= 2 gamma",
    "interference: first remaining dip met when moving from the cavity frequency toward the mean emitter frequency",
    "polaritonic: remaining dip nearest each mean-field bright polariton frequency (one per branch)",
    "fano_bunching_peak: local maximum of g2 above 1 within 3 gamma of a local minimum of T",
    "unclassified: any other dip",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DipClass {
    Polaritonic,
    Subradiant,
    Interference,
    FanoBunchingPeak,
    Unclassified,
}

impl DipClass {
    pub const ALL: [DipClass; 5] = [
        DipClass::Polaritonic,
        DipClass::Subradiant,
        DipClass::Interference,
        DipClass::FanoBunchingPeak,
        DipClass::Unclassified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DipClass::Polaritonic => "polaritonic",
            DipClass::Subradiant => "subradiant",
            DipClass::Interference => "interference",
            DipClass::FanoBunchingPeak => "fano_bunching_peak",
            DipClass::Unclassified => "unclassified",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipReport {
    pub omega_b: f64,
    pub g2_at_dip: f64,
    pub class: DipClass,
    /// Full width where `g²` crosses half depth (or half height for peaks).
    pub width: Option<f64>,
    /// Set for polaritonic dips.
    pub branch: Option<Branch>,
}

/// Frequency grid: a uniform coarse sweep plus fine windows around each emitter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub omega_min: f64,
    pub omega_max: f64,
    /// Coarse spacing; `κ/200` when absent.
    #[serde(default)]
    pub coarse_step: Option<f64>,
    /// Fine spacing; `γ/10` when absent.
    #[serde(default)]
    pub fine_step: Option<f64>,
    /// Half-width of each fine window in units of `γ`.
    #[serde(default = "default_fine_halfwidth")]
    pub fine_halfwidth_gamma: f64,
}

fn default_fine_halfwidth() -> f64 {
    10.0
}

/// Monte-Carlo configuration in `κ` units (`κ_b + κ_c = 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MCConfig {
    pub runs: usize,
    pub n: usize,
    pub mean_omega_e: f64,
    pub sigma_inhom: f64,
    pub omega_c: f64,
    pub kappa_b: f64,
    pub kappa_c: f64,
    pub g: f64,
    pub gamma: f64,
    pub seed: u64,
    pub grid: GridSpec,
    pub refine_tol: f64,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

fn default_bins() -> usize {
    60
}

impl MCConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if !(self.sigma_inhom >= 0.0) {
            return bad("sigma_inhom must be nonnegative");
        }
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive for dip detection");
        }
        if !(self.refine_tol > 0.0) {
            return bad("refine_tol must be positive");
        }
        if !(self.grid.omega_max > self.grid.omega_min) {
            return Err(Error::InvalidGrid("omega_max must exceed omega_min".into()));
        }
        if self.histogram_bins == 0 {
            return bad("histogram_bins must be positive");
        }
        let kappa = self.kappa_b + self.kappa_c;
        if (kappa - 1.0).abs() > 1e-12 {
            return bad("kappa_b + kappa_c must equal 1 (kappa units)");
        }
        Ok(())
    }

    fn coarse_step(&self) -> f64 {
        self.grid.coarse_step.unwrap_or(1.0 / 200.0)
    }

    fn fine_step(&self) -> f64 {
        self.grid.fine_step.unwrap_or(self.gamma / 10.0)
    }

    pub fn params_for(&self, omegas: &[f64]) -> Result<SystemParams<f64>> {
        let em = omegas.iter().map(|&omega| Emitter { omega, gamma: self.gamma, g: self.g }).collect();
        SystemParams::new(self.omega_c, self.kappa_b, self.kappa_c, em, UnitTag::KappaUnits)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Emitter frequencies of run `run_index`: a ChaCha8 stream keyed by the
/// seed, with the run index selecting the stream.
pub fn sample_ensemble(config: &MCConfig, run_index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(run_index);
    let normal = Normal::new(config.mean_omega_e, config.sigma_inhom).expect("finite nonnegative sigma");
    (0..config.n).map(|_| normal.sample(&mut rng)).collect()
}

/// Coarse uniform grid merged with fine windows around each emitter.
pub fn adaptive_grid(config: &MCConfig, omegas: &[f64]) -> Vec<f64> {
    let (lo, hi) = (config.grid.omega_min, config.grid.omega_max);
    let mut pts = Vec::new();
    let h = config.coarse_step();
    let n = ((hi - lo) / h).floor() as usize;
    pts.extend((0..=n).map(|k| lo + h * k as f64));
    let f = config.fine_step();
    let half = config.grid.fine_halfwidth_gamma * config.gamma;
    let m = (half / f).ceil() as i64;
    for &w in omegas {
        pts.extend((-m..=m).map(|k| w + f * k as f64).filter(|x| *x > lo && *x < hi));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

/// What the classifier needs to know about one sampled system.
#[derive(Clone, Debug, Default)]
pub struct DipContext {
    pub omega_c: f64,
    pub emitter_omegas: Vec<f64>,
    pub gamma: f64,
    /// Real parts of the mean-field bright polaritons, ascending.
    pub polaritons: Vec<f64>,
}

impl DipContext {
    pub fn for_params(params: &SystemParams<f64>) -> Self {
        let n = params.n_emitters();
        let omegas: Vec<f64> = params.emitters.iter().map(|e| e.omega).collect();
        let mut polaritons = Vec::new();
        let mut gamma = 0.0;
        if n > 0 {
            let mean = omegas.iter().sum::<f64>() / n as f64;
            let e = params.emitters[0];
            gamma = e.gamma;
            let ip = IdenticalParams {
                n,
                omega_c: params.omega_c,
                omega_e: mean,
                kappa_b: params.kappa_b,
                kappa_c: params.kappa_c,
                gamma: e.gamma,
                g: e.g,
            };
            if let Ok(es) = diag_complex_symmetric(&bright_h1(&ip), 1) {
                polaritons = es.lambdas.iter().map(|l| l.re).collect();
            }
        }
        Self { omega_c: params.omega_c, emitter_omegas: omegas, gamma, polaritons }
    }
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd { (c, fc) } else { (d, fd) }
}

/// Full width at the level `level` around index `k`, walking outward on the
/// grid until the level is crossed or the curve turns back.
fn width_at(grid: &[f64], v: &[f64], k: usize, level: f64, below: bool) -> Option<f64> {
    let crosses = |x: f64| if below { x >= level } else { x <= level };
    let interp = |i: usize, j: usize| {
        let t = (level - v[i]) / (v[j] - v[i]);
        grid[i] + t * (grid[j] - grid[i])
    };
    let mut left = None;
    let mut i = k;
    while i > 0 {
        if crosses(v[i - 1]) {
            left = Some(interp(i, i - 1));
            break;
        }
        if (below && v[i - 1] < v[i]) || (!below && v[i - 1] > v[i]) {
            break;
        }
        i -= 1;
    }
    let mut right = None;
    let mut j = k;
    while j + 1 < v.len() {
        if crosses(v[j + 1]) {
            right = Some(interp(j, j + 1));
            break;
        }
        if (below && v[j + 1] < v[j]) || (!below && v[j + 1] > v[j]) {
            break;
        }
        j += 1;
    }
    Some(right? - left?)
}

/// Finds and classifies local minima of `g²(0; ω)` (and Fano bunching peaks).
///
/// The grid must resolve each dip with at least three points. `g2` evaluates
/// the continuous curve for golden-section refinement; `None` marks points
/// that cannot be evaluated.
pub fn detect_dips(spectrum: &Spectrum<f64>, ctx: &DipContext, refine_tol: f64, g2: impl Fn(f64) -> Option<f64>) -> Vec<DipReport> {
    let w = &spectrum.omega_grid;
    let v = &spectrum.g2zero;
    let t = &spectrum.t;
    let n = w.len();
    let f = |x: f64| g2(x).unwrap_or(f64::INFINITY);

    let mut dips: Vec<DipReport> = Vec::new();
    for k in 1..n.saturating_sub(1) {
        if !(v[k] < v[k - 1] && v[k] <= v[k + 1] && v[k] < 1.0 - DIP_THRESHOLD) {
            continue;
        }
        let (mut wb, mut gb) = golden_min(&f, w[k - 1], w[k + 1], refine_tol);
        if !(gb <= v[k]) {
            wb = w[k];
            gb = v[k];
        }
        let width = width_at(w, v, k, 1.0 - (1.0 - v[k]) / 2.0, true);
        dips.push(DipReport { omega_b: wb, g2_at_dip: gb, class: DipClass::Unclassified, width, branch: None });
    }

    // Subradiant: narrow dips sitting on an emitter.
    let gam = ctx.gamma;
    for d in dips.iter_mut() {
        let near = ctx.emitter_omegas.iter().any(|&e| (d.omega_b - e).abs() <= SUBRADIANT_RADIUS * gam);
        let narrow = d.width.is_some_and(|x| x <= SUBRADIANT_MAX_WIDTH * gam);
        if gam > 0.0 && near && narrow {
            d.class = DipClass::Subradiant;
        }
    }

    // Interference: first remaining dip moving from the cavity toward the band.
    if !ctx.emitter_omegas.is_empty() {
        let mean = ctx.emitter_omegas.iter().sum::<f64>() / ctx.emitter_omegas.len() as f64;
        let free = |d: &DipReport| d.class == DipClass::Unclassified;
        // Bounded by the ensemble mean so the far-side polariton is never taken.
        let pick = if mean > ctx.omega_c {
            dips.iter()
                .enumerate()
                .filter(|(_, d)| free(d) && d.omega_b > ctx.omega_c && d.omega_b < mean)
                .min_by(|a, b| a.1.omega_b.total_cmp(&b.1.omega_b))
                .map(|(i, _)| i)
        } else if mean < ctx.omega_c {
            dips.iter()
                .enumerate()
                .filter(|(_, d)| free(d) && d.omega_b < ctx.omega_c && d.omega_b > mean)
                .max_by(|a, b| a.1.omega_b.total_cmp(&b.1.omega_b))
                .map(|(i, _)| i)
        } else {
            None
        };
        if let Some(i) = pick {
            dips[i].class = DipClass::Interference;
        }
    }

    // Polaritonic: nearest remaining dip to each bright polariton.
    for (b, &p) in ctx.polaritons.iter().enumerate() {
        let pick = dips
            .iter()
            .enumerate()
            .filter(|(_, d)| d.class == DipClass::Unclassified)
            .min_by(|x, y| (x.1.omega_b - p).abs().total_cmp(&(y.1.omega_b - p).abs()))
            .map(|(i, _)| i);
        if let Some(i) = pick {
            dips[i].class = DipClass::Polaritonic;
            dips[i].branch = Some(if b == 0 { Branch::Lower } else { Branch::Upper });
        }
    }

    // Bunching peaks next to transmission minima.
    let t_minima: Vec<f64> = (1..n.saturating_sub(1)).filter(|&k| t[k] < t[k - 1] && t[k] <= t[k + 1]).map(|k| w[k]).collect();
    for k in 1..n.saturating_sub(1) {
        if !(v[k] > v[k - 1] && v[k] >= v[k + 1] && v[k] > 1.0) {
            continue;
        }
        if !t_minima.iter().any(|&m| (m - w[k]).abs() <= FANO_RADIUS * gam.max(w[k + 1] - w[k - 1])) {
            continue;
        }
        let width = width_at(w, v, k, 1.0 + (v[k] - 1.0) / 2.0, false);
        dips.push(DipReport { omega_b: w[k], g2_at_dip: v[k], class: DipClass::FanoBunchingPeak, width, branch: None });
    }
    dips.sort_by(|a, b| a.omega_b.total_cmp(&b.omega_b));
    dips
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_index: u64,
    pub emitter_omegas: Vec<f64>,
    pub dips: Vec<DipReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Values outside the edges are clamped into the first or last bin so the
    /// counts always add up to the number of samples.
    pub fn build(lo: f64, hi: f64, bins: usize, values: impl Iterator<Item = f64>) -> Self {
        let edges: Vec<f64> = (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect();
        let mut counts = vec![0u64; bins];
        for x in values {
            let k = ((x - lo) / (hi - lo) * bins as f64).floor();
            let k = if k.is_nan() { 0 } else { (k.max(0.0) as usize).min(bins - 1) };
            counts[k] += 1;
        }
        Self { edges, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassHistograms {
    pub class: DipClass,
    pub omega_b: Histogram,
    pub g2: Histogram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub failed_runs: usize,
    pub heuristics: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub config: MCConfig,
    pub runs: Vec<RunReport>,
    pub histograms: Vec<ClassHistograms>,
    pub provenance: Provenance,
}

fn std_dev(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    Some((xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt())
}

impl MCResult {
    pub fn dips(&self) -> impl Iterator<Item = &DipReport> {
        self.runs.iter().flat_map(|r| r.dips.iter())
    }

    pub fn dips_of(&self, class: DipClass) -> impl Iterator<Item = &DipReport> {
        self.dips().filter(move |d| d.class == class)
    }

    /// Standard deviation of `ω_B` over all dips of a class.
    pub fn omega_std(&self, class: DipClass) -> Option<f64> {
        std_dev(&self.dips_of(class).map(|d| d.omega_b).collect::<Vec<_>>())
    }

    /// Polaritonic `ω_B` spread pooled over the two branches, so the
    /// branch splitting does not count as scatter.
    pub fn polaritonic_pooled_std(&self) -> Option<f64> {
        let mut ss = 0.0;
        let mut dof = 0usize;
        for b in [Branch::Lower, Branch::Upper] {
            let xs: Vec<f64> = self.dips_of(DipClass::Polaritonic).filter(|d| d.branch == Some(b)).map(|d| d.omega_b).collect();
            if xs.len() < 2 {
                continue;
            }
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            ss += xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
            dof += xs.len() - 1;
        }
        (dof > 0).then(|| (ss / dof as f64).sqrt())
    }

    /// Fraction of all runs whose interference dip has `g² ∈ [0, bound]`.
    pub fn interference_fraction_below(&self, bound: f64) -> f64 {
        let hits = self
            .runs
            .iter()
            .filter(|r| r.dips.iter().any(|d| d.class == DipClass::Interference && d.g2_at_dip >= 0.0 && d.g2_at_dip <= bound))
            .count();
        hits as f64 / self.runs.len() as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    /// `class,quantity,bin_lo,bin_hi,count`.
    pub fn histograms_csv(&self) -> String {
        let mut out = String::from("class,quantity,bin_lo,bin_hi,count\n");
        for h in &self.histograms {
            for (q, hist) in [("omega_b", &h.omega_b), ("g2", &h.g2)] {
                for (k, c) in hist.counts.iter().enumerate() {
                    out.push_str(&format!("{},{},{:?},{:?},{}\n", h.class.name(), q, hist.edges[k], hist.edges[k + 1], c));
                }
            }
        }
        out
    }
}

fn run_one(config: &MCConfig, run_index: u64) -> RunReport {
    let omegas = sample_ensemble(config, run_index);
    let outcome = (|| -> Result<Vec<DipReport>> {
        let params = config.params_for(&omegas)?;
        let sc = Scatterer::new(params.clone());
        let grid = adaptive_grid(config, &omegas);
        // Evaluated serially so that results do not depend on the thread pool.
        let mut spec = Spectrum { omega_grid: Vec::new(), t: Vec::new(), g2zero: Vec::new() };
        for &w in &grid {
            let Ok((g2, _)) = sc.g2_zero(w) else { continue };
            spec.omega_grid.push(w);
            spec.t.push(sc.transmission(w)?);
            spec.g2zero.push(g2);
        }
        let ctx = DipContext::for_params(&params);
        Ok(detect_dips(&spec, &ctx, config.refine_tol, |w| sc.g2_zero(w).ok().map(|r| r.0)))
    })();
    match outcome {
        Ok(dips) => RunReport { run_index, emitter_omegas: omegas, dips, error: None },
        Err(e) => RunReport { run_index, emitter_omegas: omegas, dips: Vec::new(), error: Some(e.to_string()) },
    }
}

/// Runs the ensemble in parallel; results are ordered by run index and do
/// not depend on the number of threads.
pub fn run_mc(config: &MCConfig) -> Result<MCResult> {
    config.validate()?;
    let runs: Vec<RunReport> = (0..config.runs as u64).into_par_iter().map(|k| run_one(config, k)).collect();
    let failed_runs = runs.iter().filter(|r| r.error.is_some()).count();
    let mut result = MCResult {
        config: config.clone(),
        runs,
        histograms: Vec::new(),
        provenance: Provenance {
            seed: config.seed,
            config_hash: config.hash(),
            failed_runs,
            heuristics: HEURISTICS.iter().map(|s| s.to_string()).collect(),
        },
    };
    let bins = config.histogram_bins;
    let (lo, hi) = (config.grid.omega_min, config.grid.omega_max);
    result.histograms = DipClass::ALL
        .iter()
        .map(|&class| {
            let ws: Vec<f64> = result.dips_of(class).map(|d| d.omega_b).collect();
            let gs: Vec<f64> = result.dips_of(class).map(|d| d.g2_at_dip).collect();
            ClassHistograms {
                class,
                omega_b: Histogram::build(lo, hi, bins, ws.into_iter()),
                g2: Histogram::build(0.0, 2.0, bins, gs.into_iter()),
            }
        })
        .collect();
    Ok(result)
}
