//! Recovers the first-hitting-time density from digital put prices.
//!
//! Today's digital put struck at the barrier, with expiry `T`, decomposes over
//! the first touch `τ`:
//!
//! ```text
//! EurDIP₀(T) = ∫₀ᵀ ρ(τ) · EurDIP(F_τ(T), B, T − τ, σ̂, κ̂) dτ
//! ```
//!
//! where the kernel is the value of the at-barrier digital at the touch.
//! On the grid `T_n = n·ΔT` with left-endpoint quadrature the last term
//! isolates `ρ(T_n)`, so the density comes out of a forward recursion:
//!
//! ```text
//! EurDIP₀(T_{n+1}) = Σ_{k<n} ΔT ρ_k K(T_k, T_{n+1}) + ΔT ρ_n K(T_n, T_{n+1})
//! ```
//!
//! The kernel is undiscounted; discounting is applied only when pricing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{eur_dip, norm_cdf, BsQuote};
use crate::market::{DiscountCurve, ForwardSkewSpec, MarketState};

/// Slack allowed on the cumulative hitting probability.
pub const CUMULATIVE_TOLERANCE: f64 = 1e-8;

// Residuals this small relative to the terms being differenced are roundoff.
const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payout {
    AtHit,
    AtMaturity,
}

/// Pays `notional` if spot touches `barrier` (from above) before `maturity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierContract {
    pub barrier: f64,
    pub maturity: f64,
    pub payout: Payout,
    pub notional: f64,
}

impl BarrierContract {
    pub fn new(barrier: f64, maturity: f64, payout: Payout, notional: f64) -> Result<Self> {
        let c = BarrierContract {
            barrier,
            maturity,
            payout,
            notional,
        };
        if !(barrier > 0.0 && maturity > 0.0) || !barrier.is_finite() || !maturity.is_finite() {
            return Err(Error::input(format!(
                "contract needs barrier > 0 and maturity > 0 (B={barrier}, T={maturity})"
            )));
        }
        if !notional.is_finite() {
            return Err(Error::input("notional must be finite"));
        }
        Ok(c)
    }

    pub fn validate_against(&self, market: &MarketState) -> Result<()> {
        Self::new(self.barrier, self.maturity, self.payout, self.notional)?;
        if self.barrier >= market.spot {
            return Err(Error::input(format!(
                "barrier {} must lie below spot {}",
                self.barrier, market.spot
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativityPolicy {
    /// Fail with the offending step.
    #[default]
    Error,
    /// Replace negative values by zero and count the event.
    ClampToZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub n_steps: usize,
    pub negativity: NegativityPolicy,
    /// Smallest admissible unwind value `K(T_n, T_{n+1})`.
    pub kernel_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_steps: 500,
            negativity: NegativityPolicy::Error,
            kernel_floor: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn with_steps(n_steps: usize) -> Self {
        SolverConfig {
            n_steps,
            ..Self::default()
        }
    }
}

/// Hitting-time density on a uniform grid. `rho[n]` is the density at
/// `T_n = n·dt` and carries the mass of the cell `[T_n, T_{n+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingDensity {
    pub dt: f64,
    pub rho: Vec<f64>,
    pub clamp_events: usize,
}

impl HittingDensity {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn maturity(&self) -> f64 {
        self.dt * self.rho.len() as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        self.maturity() * n as f64 / self.rho.len() as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.rho.len()).map(|n| self.time(n)).collect()
    }

    /// `ΔT·ρ_n` per cell.
    pub fn cell_masses(&self) -> Vec<f64> {
        self.rho.iter().map(|r| r * self.dt).collect()
    }

    /// `C(T_n) = ΔT·Σ_{k≤n} ρ_k`.
    pub fn cumulative(&self) -> Vec<f64> {
        self.rho
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r * self.dt;
                Some(*acc)
            })
            .collect()
    }

    /// Total probability of touching before maturity.
    pub fn total(&self) -> f64 {
        self.cumulative().last().copied().unwrap_or(0.0)
    }

    pub fn check_integrity(&self) -> Result<()> {
        let total = self.total();
        if total > 1.0 + CUMULATIVE_TOLERANCE || self.rho.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::Integrity(total));
        }
        Ok(())
    }
}

/// Undiscounted digital put with strike `strike` from the given conditions.
fn digital(forward: f64, strike: f64, vol: f64, ttm: f64, slope: f64) -> Result<f64> {
    eur_dip(
        &BsQuote {
            forward,
            strike,
            vol,
            ttm,
            df: 1.0,
        },
        slope,
    )
}

/// Today's undiscounted digital put struck at `barrier` expiring at `maturity`.
pub fn spot_digital(market: &MarketState, barrier: f64, maturity: f64) -> Result<f64> {
    digital(
        market.forward0(maturity)?,
        barrier,
        market.spot_vol(barrier, maturity)?,
        maturity,
        market.spot_slope(barrier, maturity)?,
    )
}

/// Value of the at-barrier digital when the barrier is first touched at
/// `hit_time`, expiring at `maturity`.
pub fn unwind_value(
    market: &MarketState,
    spec: &ForwardSkewSpec,
    barrier: f64,
    hit_time: f64,
    maturity: f64,
) -> Result<f64> {
    let remaining = maturity - hit_time;
    let c = spec.barrier_conditions(market, barrier, hit_time, remaining)?;
    digital(c.forward, barrier, c.vol, remaining, c.slope)
}

/// Solves the discretised integral equation for the hitting density.
pub fn solve_density(
    market: &MarketState,
    spec: &ForwardSkewSpec,
    contract: &BarrierContract,
    config: &SolverConfig,
) -> Result<HittingDensity> {
    market.validate()?;
    spec.validate()?;
    contract.validate_against(market)?;
    if config.n_steps < 2 {
        return Err(Error::input(format!("n_steps must be >= 2, got {}", config.n_steps)));
    }
    if !(config.kernel_floor > 0.0) {
        return Err(Error::input("kernel_floor must be positive"));
    }

    let n_steps = config.n_steps;
    let maturity = contract.maturity;
    let barrier = contract.barrier;
    let dt = maturity / n_steps as f64;
    let grid = |n: usize| maturity * n as f64 / n_steps as f64;

    let mut rho = Vec::with_capacity(n_steps);
    let mut clamp_events = 0;

    for n in 0..n_steps {
        let target = grid(n + 1);
        let lhs = spot_digital(market, barrier, target)?;

        let mut explained = 0.0;
        for (k, r) in rho.iter().enumerate() {
            if *r != 0.0 {
                explained += dt * r * unwind_value(market, spec, barrier, grid(k), target)?;
            }
        }

        let kern = unwind_value(market, spec, barrier, grid(n), target)?;
        if kern < config.kernel_floor {
            return Err(Error::NonInvertibleKernel {
                step: n,
                value: kern,
                floor: config.kernel_floor,
            });
        }

        let residual = lhs - explained;
        let mut value = residual / (dt * kern);
        if value < 0.0 {
            if -residual <= ROUNDOFF * lhs.max(explained) {
                value = 0.0;
            } else {
                match config.negativity {
                    NegativityPolicy::Error => {
                        return Err(Error::NegativeDensity { step: n, value });
                    }
                    NegativityPolicy::ClampToZero => {
                        clamp_events += 1;
                        value = 0.0;
                    }
                }
            }
        }
        rho.push(value);
    }

    let density = HittingDensity {
        dt,
        rho,
        clamp_events,
    };
    density.check_integrity()?;
    Ok(density)
}

/// Am-DIP value per unit notional from a solved density.
///
/// At-maturity payout discounts the total mass to `T`; at-hit payout discounts
/// each cell at its midpoint.
pub fn am_dip_price(
    density: &HittingDensity,
    contract: &BarrierContract,
    discount: &DiscountCurve,
) -> Result<f64> {
    density.check_integrity()?;
    if (density.maturity() - contract.maturity).abs() > 1e-9 * contract.maturity.max(1.0) {
        return Err(Error::input(format!(
            "density maturity {} does not match contract maturity {}",
            density.maturity(),
            contract.maturity
        )));
    }
    match contract.payout {
        Payout::AtMaturity => Ok(discount.df(contract.maturity)? * density.total()),
        Payout::AtHit => {
            let mut price = 0.0;
            for (n, r) in density.rho.iter().enumerate() {
                price += density.dt * r * discount.df(density.time(n) + 0.5 * density.dt)?;
            }
            Ok(price)
        }
    }
}

/// Continuous-monitoring hitting probability of a lower barrier under
/// geometric Brownian motion with constant vol and spot drift `drift`
/// (`r − q` in a risk-neutral market).
pub fn am_dip_direct_flat(spot: f64, barrier: f64, vol: f64, drift: f64, maturity: f64) -> Result<f64> {
    if !(spot > 0.0 && barrier > 0.0 && barrier < spot) {
        return Err(Error::input(format!(
            "need 0 < barrier < spot (spot={spot}, barrier={barrier})"
        )));
    }
    if !(vol > 0.0 && maturity > 0.0) || !drift.is_finite() {
        return Err(Error::input(format!(
            "need vol > 0, maturity > 0 and a finite drift (vol={vol}, T={maturity}, drift={drift})"
        )));
    }
    let b = (barrier / spot).ln();
    let m = drift - 0.5 * vol * vol;
    let sd = vol * maturity.sqrt();
    let p = norm_cdf((b - m * maturity) / sd)
        + (2.0 * m * b / (vol * vol)).exp() * norm_cdf((b + m * maturity) / sd);
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{DividendModel, TermStructure, VolSurface};

    fn flat_contract(barrier: f64, maturity: f64) -> BarrierContract {
        BarrierContract::new(barrier, maturity, Payout::AtHit, 1.0).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        // zero log-drift: spot drift σ²/2
        let p = am_dip_direct_flat(100.0, 90.0, 0.2, 0.02, 1.0).unwrap();
        let reflected = 2.0 * norm_cdf((0.9f64).ln() / 0.2);
        assert!((p - reflected).abs() < 1e-15);
        assert!((p - 0.598_330_692_270_87).abs() < 1e-12);

        // martingale spot
        let p0 = am_dip_direct_flat(100.0, 90.0, 0.2, 0.0, 1.0).unwrap();
        assert!((p0 - 0.629_644_149_338_26).abs() < 1e-12);

        assert!(am_dip_direct_flat(100.0, 100.0 * (1.0 - 1e-12), 0.2, 0.0, 1.0).unwrap() > 1.0 - 1e-9);
        assert!(am_dip_direct_flat(100.0, 90.0, 0.2, 0.0, 1e-10).unwrap() < 1e-12);
        assert!(am_dip_direct_flat(100.0, 100.0, 0.2, 0.0, 1.0).is_err());
    }

    #[test]
    fn flat_vol_matches_closed_form() {
        let m = MarketState::flat(100.0, 0.2, 1.0).unwrap();
        let d = solve_density(&m, &ForwardSkewSpec::identity(), &flat_contract(90.0, 1.0), &SolverConfig::default())
            .unwrap();
        let exact = am_dip_direct_flat(100.0, 90.0, 0.2, 0.0, 1.0).unwrap();
        assert!((d.total() - exact).abs() < 1e-3, "{} vs {exact}", d.total());
        assert_eq!(d.clamp_events, 0);
        let c = d.cumulative();
        assert!(c.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn log_driftless_market_reproduces_reflection_value() {
        let mut m = MarketState::flat(100.0, 0.2, 1.0).unwrap();
        m.discount = DiscountCurve::flat(0.02, 1.0).unwrap();
        let d = solve_density(&m, &ForwardSkewSpec::identity(), &flat_contract(90.0, 1.0), &SolverConfig::default())
            .unwrap();
        assert!((d.total() - 0.5985).abs() < 7e-3, "{}", d.total());
    }

    #[test]
    fn unreachable_barrier_has_no_mass() {
        let m = MarketState::flat(100.0, 0.01, 1.0).unwrap();
        let d = solve_density(&m, &ForwardSkewSpec::identity(), &flat_contract(50.0, 0.5), &SolverConfig::default())
            .unwrap();
        assert!(d.total() < 1e-10);
    }

    #[test]
    fn pricing_discounts_correctly() {
        let m = MarketState::flat(100.0, 0.2, 1.0).unwrap();
        let c = flat_contract(90.0, 1.0);
        let d = solve_density(&m, &ForwardSkewSpec::identity(), &c, &SolverConfig::default()).unwrap();
        let zero = DiscountCurve::flat(0.0, 1.0).unwrap();
        let at_hit = am_dip_price(&d, &c, &zero).unwrap();
        let at_mat = am_dip_price(&d, &BarrierContract { payout: Payout::AtMaturity, ..c }, &zero).unwrap();
        assert_eq!(at_mat, d.total());
        assert!((at_hit - d.total()).abs() < 1e-14);

        let curve = DiscountCurve::from_nodes(vec![(0.0, 1.0), (1.0, 0.97)]).unwrap();
        let p = am_dip_price(&d, &BarrierContract { payout: Payout::AtMaturity, ..c }, &curve).unwrap();
        assert!((p - 0.97 * d.total()).abs() < 1e-15);
        let p_hit = am_dip_price(&d, &c, &curve).unwrap();
        assert!(p_hit > p && p_hit < d.total());

        let empty = HittingDensity {
            dt: d.dt,
            rho: vec![0.0; d.len()],
            clamp_events: 0,
        };
        assert_eq!(am_dip_price(&empty, &c, &curve).unwrap(), 0.0);

        let broken = HittingDensity {
            dt: d.dt,
            rho: vec![2.0; d.len()],
            clamp_events: 0,
        };
        assert!(matches!(am_dip_price(&broken, &c, &curve), Err(Error::Integrity(_))));
    }

    #[test]
    fn preconditions_are_enforced() {
        let m = MarketState::flat(100.0, 0.2, 1.0).unwrap();
        let spec = ForwardSkewSpec::identity();
        assert!(solve_density(&m, &spec, &flat_contract(100.0, 0.5), &SolverConfig::default()).is_err());
        assert!(solve_density(&m, &spec, &flat_contract(90.0, 0.5), &SolverConfig::with_steps(1)).is_err());
        // curve ends before maturity
        assert!(matches!(
            solve_density(&m, &spec, &flat_contract(90.0, 2.0), &SolverConfig::default()),
            Err(Error::Extrapolation { .. })
        ));
    }

    #[test]
    fn steep_forward_skew_trips_kernel_floor() {
        let mut m = MarketState::flat(100.0, 0.2, 1.0).unwrap();
        m.surface = VolSurface::parametric(TermStructure::constant(0.2), TermStructure::constant(-0.1));
        // unwind digital N(σ√h/2) + φ·√h·κ̂ crosses zero for κ̂ ≲ −1/√h over a short step
        let spec = ForwardSkewSpec::derived(1.0, 130.0, 0.0);
        let err = solve_density(&m, &spec, &flat_contract(90.0, 1.0), &SolverConfig::with_steps(50)).unwrap_err();
        assert!(
            matches!(err, Error::NonInvertibleKernel { .. } | Error::ArbitrageViolatingSkew { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn clamp_policy_counts_events() {
        // a small cash drop inside the grid makes the hit-state kernels jump
        // by more than today's digital at the pay date
        let mut m = MarketState::flat(100.0, 0.2, 1.0).unwrap();
        m.dividends = DividendModel::Cash {
            payments: vec![(0.5, 1.0)],
        };
        let spec = ForwardSkewSpec::identity();
        let contract = flat_contract(95.0, 1.0);
        let strict = solve_density(&m, &spec, &contract, &SolverConfig::with_steps(500));
        let clamped = solve_density(
            &m,
            &spec,
            &contract,
            &SolverConfig {
                negativity: NegativityPolicy::ClampToZero,
                ..SolverConfig::with_steps(500)
            },
        );
        match strict {
            Err(Error::NegativeDensity { .. }) => {
                let d = clamped.unwrap();
                assert_eq!(d.clamp_events, 1);
                assert!(d.rho.iter().all(|r| *r >= 0.0));
            }
            other => panic!("expected a negative density, got {other:?}"),
        }
    }
}
