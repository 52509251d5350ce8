//! Monte Carlo first-passage oracle for constant-vol dynamics.
//!
//! Paths are monitored on a discrete grid; between monitoring dates the
//! Brownian-bridge crossing probability
//! `exp(−2·ln(S_i/B)·ln(S_{i+1}/B) / (σ²Δt))` restores continuous monitoring.
//! Every path draws from its own ChaCha stream keyed by `(seed, path index)`,
//! and hits are accumulated as integer counts, so results do not depend on how
//! paths are spread across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{DiscountCurve, DividendModel, MarketState, VolSurface};
use crate::solver::HittingDensity;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: usize,
    pub steps_per_year: usize,
    pub seed: u64,
    pub bridge: bool,
    /// Number of equal cells in the hit-time histogram. The simulation grid is
    /// refined to a multiple of it.
    pub histogram_cells: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_paths: 200_000,
            steps_per_year: 50,
            seed: 42,
            bridge: true,
            histogram_cells: 1,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1000 {
            return Err(Error::input(format!("n_paths must be >= 1000, got {}", self.n_paths)));
        }
        if self.steps_per_year < 50 {
            return Err(Error::input(format!(
                "steps_per_year must be >= 50, got {}",
                self.steps_per_year
            )));
        }
        if self.histogram_cells == 0 {
            return Err(Error::input("histogram_cells must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub hit_probability: f64,
    pub standard_error: f64,
    /// Probability mass of first hits per histogram cell.
    pub histogram: Vec<f64>,
    pub cell_dt: f64,
    pub n_paths: usize,
}

impl McResult {
    /// Binomial standard error of each histogram cell.
    pub fn cell_standard_errors(&self) -> Vec<f64> {
        let n = self.n_paths as f64;
        self.histogram.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect()
    }

    /// The histogram in the solver's density shape, for overlay exports.
    pub fn as_density(&self) -> HittingDensity {
        HittingDensity {
            dt: self.cell_dt,
            rho: self.histogram.iter().map(|m| m / self.cell_dt).collect(),
            clamp_events: 0,
        }
    }
}

// Per-step deterministic inputs shared by all paths.
struct StepPlan {
    log_drift: Vec<f64>,
    cash: Vec<f64>,
    vol_sqrt_dt: f64,
    bridge_scale: f64,
    steps_per_cell: usize,
}

/// Estimates the probability that spot touches `barrier` before `maturity`
/// under constant `vol`, with drift taken from `discount` and `dividends`.
pub fn mc_first_passage(
    spot: f64,
    barrier: f64,
    vol: f64,
    discount: &DiscountCurve,
    dividends: &DividendModel,
    maturity: f64,
    cfg: &McConfig,
) -> Result<McResult> {
    cfg.validate()?;
    if !(spot > 0.0 && barrier > 0.0 && vol >= 0.0 && maturity > 0.0) {
        return Err(Error::input(format!(
            "need spot, barrier, maturity > 0 and vol >= 0 (S={spot}, B={barrier}, vol={vol}, T={maturity})"
        )));
    }
    let cells = cfg.histogram_cells;
    let cell_dt = maturity / cells as f64;

    if barrier >= spot {
        let mut histogram = vec![0.0; cells];
        histogram[0] = 1.0;
        return Ok(McResult {
            hit_probability: 1.0,
            standard_error: 0.0,
            histogram,
            cell_dt,
            n_paths: cfg.n_paths,
        });
    }

    let market = MarketState::new(spot, discount.clone(), dividends.clone(), VolSurface::flat(vol.max(1e-12)))?;
    let plan = plan_steps(&market, vol, maturity, cfg)?;

    let counts = count_hits(cfg, &plan, spot.ln(), barrier.ln(), cells);
    let n = cfg.n_paths as f64;
    let hits: u64 = counts.iter().sum();
    let p = hits as f64 / n;
    let standard_error = (p * (1.0 - p) / (n - 1.0)).sqrt();
    Ok(McResult {
        hit_probability: p,
        standard_error,
        histogram: counts.iter().map(|&c| c as f64 / n).collect(),
        cell_dt,
        n_paths: cfg.n_paths,
    })
}

fn plan_steps(market: &MarketState, vol: f64, maturity: f64, cfg: &McConfig) -> Result<StepPlan> {
    let cells = cfg.histogram_cells;
    let min_steps = (cfg.steps_per_year as f64 * maturity).ceil().max(1.0) as usize;
    let steps_per_cell = min_steps.div_ceil(cells);
    let n_steps = steps_per_cell * cells;
    let dt = maturity / n_steps as f64;
    let t = |i: usize| maturity * i as f64 / n_steps as f64;

    let mut log_drift = Vec::with_capacity(n_steps);
    let mut cash = vec![0.0; n_steps];
    for (i, drop) in cash.iter_mut().enumerate() {
        // rate and proportional-yield carry over the step, before any cash drop
        let carry = match &market.dividends {
            DividendModel::Proportional { yield_curve } => {
                (market.df(t(i))? / market.df(t(i + 1))?).ln() - yield_curve.integral(t(i), t(i + 1))
            }
            DividendModel::Cash { payments } => {
                for &(tp, amount) in payments {
                    if tp > t(i) && tp <= t(i + 1) {
                        *drop += amount;
                    }
                }
                (market.df(t(i))? / market.df(t(i + 1))?).ln()
            }
        };
        log_drift.push(carry - 0.5 * vol * vol * dt);
    }
    Ok(StepPlan {
        log_drift,
        cash,
        vol_sqrt_dt: vol * dt.sqrt(),
        bridge_scale: if cfg.bridge && vol > 0.0 {
            -2.0 / (vol * vol * dt)
        } else {
            0.0
        },
        steps_per_cell,
    })
}

// First-hit step of one path, or None.
fn simulate_path(rng: &mut ChaCha8Rng, plan: &StepPlan, log_spot: f64, log_barrier: f64) -> Option<usize> {
    let mut x = log_spot;
    for (i, (&mu, &cash)) in plan.log_drift.iter().zip(&plan.cash).enumerate() {
        let z: f64 = StandardNormal.sample(rng);
        let mut next = x + mu + plan.vol_sqrt_dt * z;
        if next <= log_barrier {
            return Some(i);
        }
        if plan.bridge_scale != 0.0 {
            let p = (plan.bridge_scale * (x - log_barrier) * (next - log_barrier)).exp();
            if p > 0.0 {
                let u: f64 = Open01.sample(rng);
                if u < p {
                    return Some(i);
                }
            }
        }
        if cash > 0.0 {
            let s = next.exp() - cash;
            if s <= log_barrier.exp() {
                return Some(i);
            }
            next = s.ln();
        }
        x = next;
    }
    None
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn count_chunk(
    cfg: &McConfig,
    plan: &StepPlan,
    log_spot: f64,
    log_barrier: f64,
    cells: usize,
    chunk: usize,
) -> Vec<u64> {
    let mut counts = vec![0u64; cells];
    let start = chunk * CHUNK;
    let end = (start + CHUNK).min(cfg.n_paths);
    for path in start..end {
        let mut rng = path_rng(cfg.seed, path);
        if let Some(step) = simulate_path(&mut rng, plan, log_spot, log_barrier) {
            counts[step / plan.steps_per_cell] += 1;
        }
    }
    counts
}

fn add_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    a
}

#[cfg(feature = "parallel")]
fn count_hits(cfg: &McConfig, plan: &StepPlan, log_spot: f64, log_barrier: f64, cells: usize) -> Vec<u64> {
    use rayon::prelude::*;
    let chunks = cfg.n_paths.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| count_chunk(cfg, plan, log_spot, log_barrier, cells, c))
        .reduce(|| vec![0u64; cells], add_counts)
}

#[cfg(not(feature = "parallel"))]
fn count_hits(cfg: &McConfig, plan: &StepPlan, log_spot: f64, log_barrier: f64, cells: usize) -> Vec<u64> {
    let chunks = cfg.n_paths.div_ceil(CHUNK);
    (0..chunks)
        .map(|c| count_chunk(cfg, plan, log_spot, log_barrier, cells, c))
        .fold(vec![0u64; cells], add_counts)
}
