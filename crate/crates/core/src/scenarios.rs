//! Skew sweeps and conservative EDS stress ladders.
//!
//! Spot-side bumps (spot skew, barrier vol) move only today's surface: the
//! forward-skew spec is first pinned to the unbumped surface so that forward
//! conditions at the barrier stay where they were. Forward-side bumps act on
//! the spec only. That separation is what lets the two skew exposures be read
//! off independently.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{DividendModel, ForwardSkewSpec, MarketState, SkewPivot, TermStructure, VolSurface};
use crate::solver::{am_dip_price, solve_density, BarrierContract, HittingDensity, Payout, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Multiplies today's skew, pivoting at the forward (ATM vols fixed).
    SpotSkewFactor,
    /// Multiplies the forward skew at the barrier.
    FwdSkewFactor,
    /// Multiplies the forward vol at the barrier.
    FwdVolFactor,
    /// Adds to today's vols (spot side only).
    BarrierVolShift,
    /// Moves the barrier by `value · spot`.
    BarrierShift,
}

impl SweepAxis {
    fn is_factor(self) -> bool {
        matches!(
            self,
            SweepAxis::SpotSkewFactor | SweepAxis::FwdSkewFactor | SweepAxis::FwdVolFactor
        )
    }
}

/// Everything a single solve needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub market: MarketState,
    pub forward_skew: ForwardSkewSpec,
    pub contract: BarrierContract,
    pub solver: SolverConfig,
}

impl Scenario {
    pub fn solve(&self) -> Result<HittingDensity> {
        solve_density(&self.market, &self.forward_skew, &self.contract, &self.solver)
    }

    /// Solves and prices per unit notional.
    pub fn price(&self) -> Result<(f64, HittingDensity)> {
        let density = self.solve()?;
        let price = am_dip_price(&density, &self.contract, &self.market.discount)?;
        Ok((price, density))
    }

    fn freeze_forward(&mut self) {
        self.forward_skew = self.forward_skew.frozen_to(&self.market.surface);
    }

    /// Applies one sweep coordinate.
    pub fn along(&self, axis: SweepAxis, value: f64) -> Scenario {
        let mut s = self.clone();
        match axis {
            SweepAxis::SpotSkewFactor => {
                s.freeze_forward();
                s.market.surface = s.market.surface.with_skew_scale(value, SkewPivot::Atm);
            }
            SweepAxis::FwdSkewFactor => s.forward_skew.skew_factor *= value,
            SweepAxis::FwdVolFactor => s.forward_skew.vol_factor *= value,
            SweepAxis::BarrierVolShift => {
                s.freeze_forward();
                s.market.surface = s.market.surface.with_vol_shift(value);
            }
            SweepAxis::BarrierShift => s.contract.barrier += value * s.market.spot,
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub base: Scenario,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::input("sweep needs at least one value"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("sweep values must be finite"));
        }
        if self.axis.is_factor() && self.values.iter().any(|v| *v < 0.0) {
            return Err(Error::input("sweep factors must be >= 0"));
        }
        Ok(())
    }
}

/// Result of one rung: either a priced solve or the error it raised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok(T),
    Failed { error: String },
}

impl<T> Outcome<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            Outcome::Ok(v) => Some(v),
            Outcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Per unit notional.
    pub price: f64,
    pub cumulative: Vec<f64>,
    pub clamp_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Outcome<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub spec: SweepSpec,
    pub times: Vec<f64>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn prices(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.outcome.ok().map(|p| p.price)).collect()
    }

    pub fn failures(&self) -> Vec<(f64, &str)> {
        self.rows
            .iter()
            .filter_map(|r| match &r.outcome {
                Outcome::Failed { error } => Some((r.value, error.as_str())),
                Outcome::Ok(_) => None,
            })
            .collect()
    }
}

fn sweep_point(scenario: &Scenario) -> Result<SweepPoint> {
    let (price, density) = scenario.price()?;
    Ok(SweepPoint {
        price,
        cumulative: density.cumulative(),
        clamp_events: density.clamp_events,
    })
}

fn map_ordered<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// One solve per sweep value, reported in specification order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let rows = map_ordered(&spec.values, |&value| {
        let outcome = match sweep_point(&spec.base.along(spec.axis, value)) {
            Ok(p) => Outcome::Ok(p),
            Err(e) => Outcome::Failed {
                error: Error::Rung {
                    rung: format!("{:?}={value}", spec.axis),
                    source: Box::new(e),
                }
                .to_string(),
            },
        };
        SweepRow { value, outcome }
    });
    let n = spec.base.solver.n_steps;
    let times = (0..n)
        .map(|i| spec.base.contract.maturity * i as f64 / n as f64)
        .collect();
    Ok(SweepTable {
        spec: spec.clone(),
        times,
        rows,
    })
}

/// Equity default swap: pays `notional` if spot falls to `barrier_fraction · spot`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdsTrade {
    pub notional: f64,
    pub barrier_fraction: f64,
    pub maturity: f64,
    pub payout: Payout,
}

impl EdsTrade {
    pub fn validate(&self) -> Result<()> {
        if !(self.barrier_fraction > 0.0 && self.barrier_fraction < 1.0) {
            return Err(Error::input(format!(
                "barrier_fraction must lie in (0, 1), got {}",
                self.barrier_fraction
            )));
        }
        if !(self.maturity > 0.0) || !self.notional.is_finite() {
            return Err(Error::input("EDS needs maturity > 0 and a finite notional"));
        }
        Ok(())
    }

    pub fn contract(&self, spot: f64) -> Result<BarrierContract> {
        self.validate()?;
        BarrierContract::new(self.barrier_fraction * spot, self.maturity, self.payout, self.notional)
    }
}

/// Human-readable record of the inputs that drove a price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumptions {
    pub rates: String,
    pub dividends: String,
    pub surface: String,
    pub slope_unit: String,
    pub forward_skew: String,
    pub payout: String,
    pub day_count: String,
    pub solver: String,
}

impl Assumptions {
    pub fn describe(scenario: &Scenario) -> Result<Self> {
        let m = &scenario.market;
        let t = scenario.contract.maturity;
        let df = m.df(t)?;
        let rates = if m.discount.nodes().iter().all(|(_, d)| *d == 1.0) {
            "zero rates".to_string()
        } else {
            format!("log-linear discount curve, Df({t}) = {df}")
        };
        let dividends = match &m.dividends {
            DividendModel::Proportional { yield_curve } => {
                if yield_curve.nodes().iter().all(|(_, q)| *q == 0.0) {
                    "no dividends".to_string()
                } else {
                    format!("proportional yield {:?}", yield_curve.nodes())
                }
            }
            DividendModel::Cash { payments } => format!("cash dividends {payments:?}"),
        };
        let b = scenario.contract.barrier;
        let surface = format!(
            "{}; vol at barrier {} and slope {} per log-strike for T={t}; floor {}",
            match &m.surface.shape {
                crate::market::SurfaceShape::ParametricSkew { .. } => "linear in log-strike around the forward",
                crate::market::SurfaceShape::StrikeGrid { .. } => "strike grid, bilinear in (ln K, T), flat extrapolation",
            },
            m.spot_vol(b, t)?,
            m.spot_slope(b, t)?,
            m.surface.vol_floor,
        );
        let c = scenario.forward_skew.barrier_conditions(m, b, 0.0, t)?;
        let forward_skew = format!(
            "vol_factor {}, skew_factor {}, vol_shift {}; at tau=0: vol {} slope {} forward {}",
            scenario.forward_skew.vol_factor,
            scenario.forward_skew.skew_factor,
            scenario.forward_skew.vol_shift,
            c.vol,
            c.slope,
            c.forward
        );
        Ok(Assumptions {
            rates,
            dividends,
            surface,
            slope_unit: "per unit log-strike (dσ/d ln K)".into(),
            forward_skew,
            payout: match scenario.contract.payout {
                Payout::AtHit => "at hit, cell-midpoint discounting".into(),
                Payout::AtMaturity => "at maturity".into(),
            },
            day_count: "ACT/365 year fractions".into(),
            solver: format!(
                "{} steps, left-endpoint quadrature, negativity policy {:?}",
                scenario.solver.n_steps, scenario.solver.negativity
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdsQuote {
    pub price_bp: f64,
    /// `notional · price_bp / 10⁴`.
    pub price: f64,
    pub density: HittingDensity,
    pub assumptions: Assumptions,
}

fn eds_scenario(
    trade: &EdsTrade,
    market: &MarketState,
    spec: &ForwardSkewSpec,
    config: &SolverConfig,
) -> Result<Scenario> {
    Ok(Scenario {
        market: market.clone(),
        forward_skew: spec.clone(),
        contract: trade.contract(market.spot)?,
        solver: *config,
    })
}

pub fn price_eds(
    trade: &EdsTrade,
    market: &MarketState,
    spec: &ForwardSkewSpec,
    config: &SolverConfig,
) -> Result<EdsQuote> {
    quote_scenario(&eds_scenario(trade, market, spec, config)?)
}

fn quote_scenario(s: &Scenario) -> Result<EdsQuote> {
    let (unit_price, density) = s.price()?;
    let price_bp = 1e4 * unit_price;
    Ok(EdsQuote {
        price_bp,
        price: s.contract.notional * price_bp / 1e4,
        density,
        assumptions: Assumptions::describe(s)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DividendSwap {
    Model { model: DividendModel },
    /// Cash schedule on `pay_times` matching the current model's forwards there.
    CashEquivalent { pay_times: Vec<f64> },
}

/// One named ladder rung. Unset fields leave the state alone.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StressBump {
    pub name: String,
    /// Multiplies today's skew, pivoting at the barrier so the barrier vol is kept.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spot_skew_mult: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fwd_skew_mult: Option<f64>,
    /// Added to today's vols; the vol at the barrier moves by this amount.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub barrier_vol_shift: Option<f64>,
    /// Added to the forward vol at the barrier.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fwd_vol_shift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dividends: Option<DividendSwap>,
    /// Moves the barrier up by this fraction of spot.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub barrier_shift: Option<f64>,
}

impl StressBump {
    pub fn named(name: impl Into<String>) -> Self {
        StressBump {
            name: name.into(),
            ..Default::default()
        }
    }

    fn apply(&self, s: &mut Scenario) -> Result<()> {
        if let Some(f) = self.spot_skew_mult {
            if !(f >= 0.0) {
                return Err(Error::input("spot_skew_mult must be >= 0"));
            }
            let pivot = SkewPivot::Strike(s.contract.barrier);
            s.market.surface = s.market.surface.with_skew_scale(f, pivot);
        }
        if let Some(f) = self.fwd_skew_mult {
            if !(f >= 0.0) {
                return Err(Error::input("fwd_skew_mult must be >= 0"));
            }
            s.forward_skew.skew_factor *= f;
        }
        if let Some(v) = self.barrier_vol_shift {
            s.market.surface = s.market.surface.with_vol_shift(v);
        }
        if let Some(v) = self.fwd_vol_shift {
            s.forward_skew.vol_shift += v;
        }
        match &self.dividends {
            Some(DividendSwap::Model { model }) => s.market.dividends = model.clone(),
            Some(DividendSwap::CashEquivalent { pay_times }) => {
                s.market.dividends =
                    s.market
                        .dividends
                        .cash_equivalent(s.market.spot, &s.market.discount, pay_times)?;
            }
            None => {}
        }
        if let Some(v) = self.barrier_shift {
            s.contract.barrier += v * s.market.spot;
        }
        s.market.validate()?;
        s.forward_skew.validate()?;
        s.contract.validate_against(&s.market)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderMode {
    /// Each rung builds on the previous one.
    #[default]
    Cumulative,
    /// Each rung is applied to the base alone.
    FromBase,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StressLadder {
    pub rungs: Vec<StressBump>,
    #[serde(default)]
    pub mode: LadderMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub rung: usize,
    pub name: String,
    pub outcome: Outcome<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderTable {
    pub trade: EdsTrade,
    pub base: Scenario,
    pub ladder: StressLadder,
    pub assumptions: Assumptions,
    pub rows: Vec<LadderRow>,
}

impl LadderTable {
    pub fn prices_bp(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.outcome.ok().copied()).collect()
    }

    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.outcome.ok().is_none())
    }
}

/// Prices the base trade and every rung of `ladder`. Row 0 is the base.
pub fn run_ladder(
    trade: &EdsTrade,
    market: &MarketState,
    spec: &ForwardSkewSpec,
    ladder: &StressLadder,
    config: &SolverConfig,
) -> Result<LadderTable> {
    let mut base = eds_scenario(trade, market, spec, config)?;
    base.market.validate()?;
    base.forward_skew = base.forward_skew.frozen_to(&base.market.surface);
    let assumptions = Assumptions::describe(&base)?;

    // build every rung's scenario first; a failed build poisons later
    // cumulative rungs
    let mut scenarios: Vec<(String, Result<Scenario>)> = vec![("base".into(), Ok(base.clone()))];
    let mut running: Result<Scenario> = Ok(base.clone());
    for bump in &ladder.rungs {
        let start = match ladder.mode {
            LadderMode::Cumulative => running.clone(),
            LadderMode::FromBase => Ok(base.clone()),
        };
        let next = start.and_then(|mut s| bump.apply(&mut s).map(|_| s));
        scenarios.push((bump.name.clone(), next.clone()));
        running = next;
    }

    let indexed: Vec<(usize, &(String, Result<Scenario>))> = scenarios.iter().enumerate().collect();
    let rows = map_ordered(&indexed, |(i, (name, s))| {
        let priced = s
            .clone()
            .and_then(|s| s.price())
            .map(|(p, _)| 1e4 * p)
            .map_err(|e| Error::Rung {
                rung: name.clone(),
                source: Box::new(e),
            });
        LadderRow {
            rung: *i,
            name: name.clone(),
            outcome: match priced {
                Ok(bp) => Outcome::Ok(bp),
                Err(e) => Outcome::Failed { error: e.to_string() },
            },
        }
    });
    Ok(LadderTable {
        trade: *trade,
        base,
        ladder: ladder.clone(),
        assumptions,
        rows,
    })
}

/// A 6m equity default swap on a low-priced, high-vol name: spot 5.945, 70%-down barrier,
/// 52% ATM vol and 80% vol at the barrier joined linearly in log-strike.
/// Rates and dividends are zero.
pub mod eds_demo {
    use super::*;
    use crate::market::DiscountCurve;

    pub const SPOT: f64 = 5.945;
    pub const BARRIER_FRACTION: f64 = 0.30;
    pub const MATURITY: f64 = 0.5;
    pub const ATM_VOL: f64 = 0.52;
    pub const BARRIER_VOL: f64 = 0.80;
    pub const STEPS: usize = 500;

    /// dσ/d ln K through the two vol anchors.
    pub fn slope() -> f64 {
        (BARRIER_VOL - ATM_VOL) / BARRIER_FRACTION.ln()
    }

    pub fn trade() -> EdsTrade {
        EdsTrade {
            notional: 1.0,
            barrier_fraction: BARRIER_FRACTION,
            maturity: MATURITY,
            payout: Payout::AtHit,
        }
    }

    pub fn market() -> MarketState {
        MarketState::new(
            SPOT,
            DiscountCurve::flat(0.0, 1.0).expect("static curve"),
            DividendModel::none(),
            VolSurface::parametric(TermStructure::constant(ATM_VOL), TermStructure::constant(slope())),
        )
        .expect("static market")
    }

    pub fn solver() -> SolverConfig {
        SolverConfig::with_steps(STEPS)
    }

    /// Spot skew to 80%, forward skew doubled, barrier vol 86% with the forward
    /// vol 5 points lower.
    pub fn ladder() -> StressLadder {
        StressLadder {
            rungs: vec![
                StressBump {
                    spot_skew_mult: Some(0.8),
                    ..StressBump::named("spot skew x0.8")
                },
                StressBump {
                    fwd_skew_mult: Some(2.0),
                    ..StressBump::named("forward skew x2")
                },
                StressBump {
                    barrier_vol_shift: Some(0.86 - BARRIER_VOL),
                    fwd_vol_shift: Some(-0.05),
                    ..StressBump::named("barrier vol 86%, forward vol -5%")
                },
            ],
            mode: LadderMode::Cumulative,
        }
    }
}

/// A generic equity-index market for the skew sweeps: 25% ATM vol and a
/// −0.15 per log-strike skew, zero rates and dividends.
pub fn index_demo_market() -> MarketState {
    MarketState::new(
        100.0,
        crate::market::DiscountCurve::flat(0.0, 2.0).expect("static curve"),
        DividendModel::none(),
        VolSurface::parametric(TermStructure::constant(0.25), TermStructure::constant(-0.15)),
    )
    .expect("static market")
}

/// 6m Am-DIP on the demo index with the barrier at `barrier_fraction · spot`.
pub fn index_demo_scenario(barrier_fraction: f64) -> Scenario {
    let market = index_demo_market();
    Scenario {
        contract: BarrierContract {
            barrier: barrier_fraction * market.spot,
            maturity: 0.5,
            payout: Payout::AtHit,
            notional: 1.0,
        },
        market,
        forward_skew: ForwardSkewSpec::identity(),
        solver: SolverConfig::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::NegativityPolicy;

    fn strictly(xs: &[f64], up: bool) -> bool {
        xs.windows(2).all(|w| if up { w[1] > w[0] } else { w[1] < w[0] })
    }

    fn prices(t: &SweepTable) -> Vec<f64> {
        t.prices().into_iter().map(|p| p.expect("rung solved")).collect()
    }

    #[test]
    fn spot_skew_sweep_decreases() {
        let spec = SweepSpec {
            axis: SweepAxis::SpotSkewFactor,
            values: vec![0.5, 1.0, 1.5, 2.0],
            base: index_demo_scenario(0.9),
        };
        let p = prices(&run_sweep(&spec).unwrap());
        assert!(strictly(&p, false), "{p:?}");
    }

    #[test]
    fn forward_skew_sweep_increases() {
        let spec = SweepSpec {
            axis: SweepAxis::FwdSkewFactor,
            values: vec![0.5, 1.0, 2.0],
            base: index_demo_scenario(0.6),
        };
        let t = run_sweep(&spec).unwrap();
        let p = prices(&t);
        assert!(strictly(&p, true), "{p:?}");
        let curves: Vec<&Vec<f64>> = t.rows.iter().map(|r| &r.outcome.ok().unwrap().cumulative).collect();
        for w in curves.windows(2) {
            assert!(w[0].iter().zip(w[1]).all(|(a, b)| b >= a));
        }
    }

    #[test]
    fn identity_sweep_is_base_price() {
        let base = index_demo_scenario(0.9);
        let (p, _) = base.price().unwrap();
        for axis in [SweepAxis::SpotSkewFactor, SweepAxis::FwdSkewFactor, SweepAxis::FwdVolFactor] {
            let t = run_sweep(&SweepSpec {
                axis,
                values: vec![1.0],
                base: base.clone(),
            })
            .unwrap();
            assert_eq!(prices(&t), vec![p]);
        }
        let t = run_sweep(&SweepSpec {
            axis: SweepAxis::BarrierShift,
            values: vec![0.0],
            base,
        })
        .unwrap();
        assert_eq!(prices(&t), vec![p]);
    }

    #[test]
    fn sweep_rejects_bad_specs_and_reports_failed_rungs() {
        let base = index_demo_scenario(0.9);
        assert!(run_sweep(&SweepSpec {
            axis: SweepAxis::FwdSkewFactor,
            values: vec![],
            base: base.clone(),
        })
        .is_err());
        assert!(run_sweep(&SweepSpec {
            axis: SweepAxis::FwdSkewFactor,
            values: vec![-1.0],
            base: base.clone(),
        })
        .is_err());
        // barrier pushed above spot on the second rung
        let t = run_sweep(&SweepSpec {
            axis: SweepAxis::BarrierShift,
            values: vec![0.0, 0.2],
            base,
        })
        .unwrap();
        let failures = t.failures();
        assert_eq!(failures.len(), 1);
        assert_eq!(failures[0].0, 0.2);
        assert!(failures[0].1.contains("BarrierShift"));
    }

    #[test]
    fn eds_notional_scaling_and_domain() {
        let mut trade = eds_demo::trade();
        let q1 = price_eds(&trade, &eds_demo::market(), &ForwardSkewSpec::identity(), &SolverConfig::with_steps(100))
            .unwrap();
        trade.notional = 10_000_000.0;
        let q2 = price_eds(&trade, &eds_demo::market(), &ForwardSkewSpec::identity(), &SolverConfig::with_steps(100))
            .unwrap();
        assert_eq!(q1.price_bp, q2.price_bp);
        assert!((q2.price - 10_000_000.0 * q2.price_bp / 1e4).abs() < 1e-6);

        trade.barrier_fraction = 1.0;
        assert!(price_eds(&trade, &eds_demo::market(), &ForwardSkewSpec::identity(), &SolverConfig::default()).is_err());
    }

    #[test]
    fn empty_ladder_is_base_only() {
        let t = run_ladder(
            &eds_demo::trade(),
            &eds_demo::market(),
            &ForwardSkewSpec::identity(),
            &StressLadder::default(),
            &SolverConfig::with_steps(100),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].name, "base");
    }

    #[test]
    fn conservative_bumps_individually_raise_the_price() {
        let market = eds_demo::market();
        let spec = ForwardSkewSpec::identity();
        let cfg = SolverConfig::with_steps(200);
        let rungs = vec![
            StressBump {
                spot_skew_mult: Some(0.8),
                ..StressBump::named("flatter spot skew")
            },
            StressBump {
                fwd_skew_mult: Some(2.0),
                ..StressBump::named("steeper forward skew")
            },
            StressBump {
                barrier_vol_shift: Some(0.06),
                ..StressBump::named("barrier vol up")
            },
            StressBump {
                fwd_vol_shift: Some(-0.05),
                ..StressBump::named("forward vol down")
            },
            StressBump {
                barrier_shift: Some(0.05),
                ..StressBump::named("barrier up 5%")
            },
        ];
        let t = run_ladder(
            &eds_demo::trade(),
            &market,
            &spec,
            &StressLadder {
                rungs,
                mode: LadderMode::FromBase,
            },
            &cfg,
        )
        .unwrap();
        let p: Vec<f64> = t.prices_bp().into_iter().map(Option::unwrap).collect();
        for (i, bp) in p.iter().enumerate().skip(1) {
            assert!(*bp > p[0], "rung {i} ({}) gave {bp} <= base {}", t.rows[i].name, p[0]);
        }
    }

    #[test]
    fn dividend_model_swap_is_visible() {
        let mut base = index_demo_scenario(0.8);
        base.market.dividends = DividendModel::Proportional {
            yield_curve: TermStructure::constant(0.04),
        };
        let trade = EdsTrade {
            notional: 1.0,
            barrier_fraction: 0.8,
            maturity: 0.5,
            payout: Payout::AtHit,
        };
        let swap = StressBump {
            dividends: Some(DividendSwap::CashEquivalent {
                pay_times: vec![0.125, 0.25, 0.375, 0.5],
            }),
            ..StressBump::named("cash dividends")
        };
        let ladder = StressLadder {
            rungs: vec![swap],
            mode: LadderMode::Cumulative,
        };
        let strict = run_ladder(&trade, &base.market, &base.forward_skew, &ladder, &base.solver).unwrap();
        assert!(strict.has_failures());
        let clamp = SolverConfig {
            negativity: NegativityPolicy::ClampToZero,
            ..base.solver
        };
        let t = run_ladder(&trade, &base.market, &base.forward_skew, &ladder, &clamp).unwrap();
        let p: Vec<f64> = t.prices_bp().into_iter().map(Option::unwrap).collect();
        assert!((p[1] - p[0]).abs() > 1e-3, "{p:?}");
    }
}
