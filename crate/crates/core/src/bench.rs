//! Wall-clock scaling of the general (non-identical) scattering path.
//!
//! Each timed sample builds a fresh [`Scatterer`], so the measurement covers
//! block projection, eigendecomposition and one frequency evaluation.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Emitter, SystemParams, UnitTag};
use crate::scattering::Scatterer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Emitter counts, strictly ascending.
    pub ns: Vec<usize>,
    pub seed: u64,
    /// Each sample repeats until at least this much time has passed.
    #[serde(default = "default_min_time")]
    pub min_seconds: f64,
    /// Best-of count per point.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Skip `g²` timing above this `N`.
    #[serde(default)]
    pub g2_max_n: Option<usize>,
}

fn default_min_time() -> f64 {
    0.05
}

fn default_samples() -> usize {
    3
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { ns: vec![5, 10, 20, 35, 50], seed: 7, min_seconds: default_min_time(), samples: default_samples(), g2_max_n: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub dim1: usize,
    pub dim2: usize,
    pub transmission_seconds: f64,
    pub g2_seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MachineInfo {
    pub os: String,
    pub arch: String,
    pub threads: usize,
    pub rayon_threads: usize,
}

impl MachineInfo {
    pub fn current() -> Self {
        Self {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            rayon_threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    /// Log-log slope of transmission time against `N`.
    pub transmission_exponent: Option<f64>,
    pub g2_exponent: Option<f64>,
    pub machine: MachineInfo,
}

impl BenchReport {
    /// Exponents refitted on the rows with `lo <= N <= hi`.
    pub fn exponents_in(&self, lo: usize, hi: usize) -> (Option<f64>, Option<f64>) {
        let rows: Vec<&BenchRow> = self.rows.iter().filter(|r| r.n >= lo && r.n <= hi).collect();
        let t: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.transmission_seconds)).collect();
        let g: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.g2_seconds.map(|s| (r.n as f64, s))).collect();
        (loglog_slope(&t), loglog_slope(&g))
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// usable points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Distinct emitter frequencies so the identical-emitter shortcut never applies.
pub fn bench_system(n: usize, seed: u64) -> Result<SystemParams<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let em = (0..n)
        .map(|_| Emitter { omega: rng.random_range(0.5..1.0), gamma: 0.012, g: rng.random_range(0.1..0.3) })
        .collect();
    SystemParams::new(0.0, 0.5, 0.5, em, UnitTag::KappaUnits)
}

fn time_best(samples: usize, min_seconds: f64, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..samples.max(1) {
        let start = Instant::now();
        let mut reps = 0u32;
        loop {
            f()?;
            reps += 1;
            if start.elapsed().as_secs_f64() >= min_seconds {
                break;
            }
        }
        best = best.min(start.elapsed().as_secs_f64() / reps as f64);
    }
    Ok(best)
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    if config.ns.is_empty() || config.ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid("bench N list must be nonempty and strictly ascending".into()));
    }
    let omega = 0.3;
    let mut rows = Vec::new();
    for &n in &config.ns {
        let p = bench_system(n, config.seed)?;
        let transmission_seconds = time_best(config.samples, config.min_seconds, || {
            Scatterer::new(p.clone()).transmission(omega).map(drop)
        })?;
        let g2_seconds = if config.g2_max_n.is_none_or(|m| n <= m) {
            // The largest systems take seconds each; one sample is enough there.
            let samples = if n >= 35 { 1 } else { config.samples };
            Some(time_best(samples, config.min_seconds, || Scatterer::new(p.clone()).g2_zero(omega).map(drop))?)
        } else {
            None
        };
        rows.push(BenchRow { n, dim1: n + 1, dim2: 1 + n + n * (n - 1) / 2, transmission_seconds, g2_seconds });
    }
    let t: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.transmission_seconds)).collect();
    let g: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.g2_seconds.map(|s| (r.n as f64, s))).collect();
    Ok(BenchReport {
        config: config.clone(),
        transmission_exponent: loglog_slope(&t),
        g2_exponent: loglog_slope(&g),
        rows,
        machine: MachineInfo::current(),
    })
}
