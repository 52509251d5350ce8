//! Flat-vol cross-check of the solver against the reflection-principle closed
//! form and the Monte Carlo oracle.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernel::{digital_put_flat, BsQuote};
use crate::market::{DiscountCurve, DividendModel, ForwardSkewSpec, MarketState, TermStructure, VolSurface};
use crate::mc::{mc_first_passage, McConfig};
use crate::solver::{am_dip_direct_flat, solve_density, BarrierContract, Payout, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TriangleGrid {
    pub spot: f64,
    pub vols: Vec<f64>,
    pub barrier_fractions: Vec<f64>,
    pub maturities: Vec<f64>,
    pub rate: f64,
    pub dividend_yield: f64,
    pub solver: SolverConfig,
    /// Monte Carlo leg; skipped when absent.
    pub mc: Option<McConfig>,
    /// Allowed |solver − closed form|.
    pub tolerance_abs: f64,
    /// Allowed |mc − closed form| in standard errors.
    pub mc_sigmas: f64,
}

impl Default for TriangleGrid {
    fn default() -> Self {
        TriangleGrid {
            spot: 100.0,
            vols: vec![0.1, 0.2, 0.4],
            barrier_fractions: vec![0.7, 0.9],
            maturities: vec![0.5, 1.0],
            rate: 0.0,
            dividend_yield: 0.0,
            solver: SolverConfig::default(),
            mc: Some(McConfig::default()),
            tolerance_abs: 0.005,
            mc_sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrianglePoint {
    pub vol: f64,
    pub barrier_fraction: f64,
    pub maturity: f64,
    pub solver: f64,
    pub closed_form: f64,
    pub solver_error: f64,
    pub solver_ok: bool,
    pub mc: Option<f64>,
    pub mc_standard_error: Option<f64>,
    pub mc_ok: Option<bool>,
    /// Undiscounted `2·EurDIP(0, S, B, T)`, the static-replication heuristic.
    pub two_eur_dip: f64,
    /// `|C(T) − 2·EurDIP| / C(T)`, report only.
    pub heuristic_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleReport {
    pub grid: TriangleGrid,
    pub points: Vec<TrianglePoint>,
    pub breaches: usize,
}

impl TriangleReport {
    pub fn passed(&self) -> bool {
        self.breaches == 0
    }
}

fn flat_market(grid: &TriangleGrid, vol: f64, horizon: f64) -> Result<MarketState> {
    MarketState::new(
        grid.spot,
        DiscountCurve::flat(grid.rate, horizon)?,
        DividendModel::Proportional {
            yield_curve: TermStructure::constant(grid.dividend_yield),
        },
        VolSurface::flat(vol),
    )
}

/// `|mc − reference| ≤ sigmas · se`, with `se` no smaller than the binomial
/// error implied by the reference itself (a rare event can see zero hits).
pub fn mc_agrees(mc: f64, mc_standard_error: f64, reference: f64, n_paths: usize, sigmas: f64) -> bool {
    let p = reference.clamp(0.0, 1.0);
    let se = mc_standard_error.max((p * (1.0 - p) / n_paths as f64).sqrt());
    (mc - reference).abs() <= sigmas * se
}

pub fn run_triangle(grid: &TriangleGrid) -> Result<TriangleReport> {
    let mut points = Vec::new();
    let drift = grid.rate - grid.dividend_yield;
    for &vol in &grid.vols {
        for &bf in &grid.barrier_fractions {
            for &t in &grid.maturities {
                let market = flat_market(grid, vol, t)?;
                let barrier = bf * grid.spot;
                let contract = BarrierContract::new(barrier, t, Payout::AtMaturity, 1.0)?;
                let density = solve_density(&market, &ForwardSkewSpec::identity(), &contract, &grid.solver)?;
                let solver = density.total();
                let closed_form = am_dip_direct_flat(grid.spot, barrier, vol, drift, t)?;
                let solver_error = (solver - closed_form).abs();

                let (mc, mc_standard_error, mc_ok) = match &grid.mc {
                    Some(cfg) => {
                        let r = mc_first_passage(
                            grid.spot,
                            barrier,
                            vol,
                            &market.discount,
                            &market.dividends,
                            t,
                            cfg,
                        )?;
                        let ok = mc_agrees(r.hit_probability, r.standard_error, closed_form, r.n_paths, grid.mc_sigmas);
                        (Some(r.hit_probability), Some(r.standard_error), Some(ok))
                    }
                    None => (None, None, None),
                };

                let two_eur_dip =
                    2.0 * digital_put_flat(&BsQuote::new(market.forward0(t)?, barrier, vol, t, 1.0)?)?;
                points.push(TrianglePoint {
                    vol,
                    barrier_fraction: bf,
                    maturity: t,
                    solver,
                    closed_form,
                    solver_error,
                    solver_ok: solver_error <= grid.tolerance_abs,
                    mc,
                    mc_standard_error,
                    mc_ok,
                    two_eur_dip,
                    heuristic_deviation: (solver - two_eur_dip).abs() / solver,
                });
            }
        }
    }
    let breaches = points
        .iter()
        .filter(|p| !p.solver_ok || p.mc_ok == Some(false))
        .count();
    Ok(TriangleReport {
        grid: grid.clone(),
        points,
        breaches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_grid_passes_without_mc() {
        let grid = TriangleGrid {
            mc: None,
            ..TriangleGrid::default()
        };
        let r = run_triangle(&grid).unwrap();
        assert_eq!(r.points.len(), 12);
        assert!(r.passed(), "{:#?}", r.points);
    }

    #[test]
    fn zero_hits_on_a_rare_event_is_not_a_breach() {
        assert!(mc_agrees(0.0, 0.0, 5.4e-7, 200_000, 3.0));
        assert!(!mc_agrees(0.0, 0.0, 1e-3, 200_000, 3.0));
        assert!(mc_agrees(0.5, 0.001, 0.502, 200_000, 3.0));
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let at = |n| {
            run_triangle(&TriangleGrid {
                mc: None,
                solver: SolverConfig::with_steps(n),
                ..TriangleGrid::default()
            })
            .unwrap()
        };
        // first-order error is already below tolerance at N = 10
        let ten = at(10);
        let worst = ten.points.iter().map(|p| p.solver_error).fold(0.0, f64::max);
        assert!(ten.passed() && (worst - 2.961e-3).abs() < 1e-6, "{worst}");
        assert_eq!(at(5).breaches, 1);
    }
}
