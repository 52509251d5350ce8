//! JSON run configuration.
//!
//! Every section rejects unknown keys. Slopes must declare their unit; they are
//! converted to dσ/d(ln K) on ingestion. See `docs/config.md` for the schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Slope, SlopeUnit};
use crate::market::{
    DiscountCurve, DividendModel, ForwardSkewSpec, ForwardTable, MarketState, SurfaceBump, SurfaceShape,
    TermStructure, VolSurface, DEFAULT_VOL_FLOOR,
};
use crate::mc::McConfig;
use crate::scenarios::{EdsTrade, LadderMode, StressBump, SweepAxis};
use crate::solver::{BarrierContract, Payout, SolverConfig};
use crate::validation::TriangleGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum RatesConfig {
    Flat { flat: f64, horizon: f64 },
    Nodes { nodes: Vec<(f64, f64)> },
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig::Flat {
            flat: 0.0,
            horizon: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DividendConfig {
    #[default]
    None,
    /// Continuous yield, constant or `[[t, q], ...]`.
    Proportional { yield_curve: TermStructure },
    Cash { payments: Vec<(f64, f64)> },
}

/// Slope of a parametric surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SlopeConfig {
    /// A quoted slope. Non-log units are converted at `reference_strike`
    /// (spot when omitted).
    Quoted {
        value: TermStructure,
        unit: SlopeUnit,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference_strike: Option<f64>,
    },
    /// Straight line in log-strike from the ATM vol to `anchor_vol` at strike
    /// `anchor_moneyness · F₀(T)`.
    Anchored { anchor_moneyness: f64, anchor_vol: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceConfig {
    Parametric {
        atm_vol: TermStructure,
        slope: SlopeConfig,
        #[serde(default = "default_floor")]
        vol_floor: f64,
    },
    StrikeGrid {
        strikes: Vec<f64>,
        maturities: Vec<f64>,
        vols: Vec<Vec<f64>>,
        #[serde(default = "default_floor")]
        vol_floor: f64,
    },
}

fn default_floor() -> f64 {
    DEFAULT_VOL_FLOOR
}

fn default_day_count() -> String {
    "ACT/365".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub spot: f64,
    #[serde(default)]
    pub rates: RatesConfig,
    #[serde(default)]
    pub dividends: DividendConfig,
    pub surface: SurfaceConfig,
    /// Label only: all times in the file are already year fractions.
    #[serde(default = "default_day_count")]
    pub day_count: String,
}

impl MarketConfig {
    pub fn build(&self) -> Result<MarketState> {
        let discount = match &self.rates {
            RatesConfig::Flat { flat, horizon } => DiscountCurve::flat(*flat, *horizon)?,
            RatesConfig::Nodes { nodes } => DiscountCurve::from_nodes(nodes.clone())?,
        };
        let dividends = match &self.dividends {
            DividendConfig::None => DividendModel::none(),
            DividendConfig::Proportional { yield_curve } => DividendModel::Proportional {
                yield_curve: yield_curve.clone(),
            },
            DividendConfig::Cash { payments } => DividendModel::Cash {
                payments: payments.clone(),
            },
        };
        let surface = match &self.surface {
            SurfaceConfig::Parametric {
                atm_vol,
                slope,
                vol_floor,
            } => {
                atm_vol.validate()?;
                let slope = match slope {
                    SlopeConfig::Quoted {
                        value,
                        unit,
                        reference_strike,
                    } => {
                        let k = reference_strike.unwrap_or(self.spot);
                        if !(k > 0.0) {
                            return Err(Error::Config("reference_strike must be positive".into()));
                        }
                        let nodes = value
                            .nodes()
                            .iter()
                            .map(|&(t, v)| (t, Slope { value: v, unit: *unit }.to_log_strike(k, self.spot)))
                            .collect();
                        TermStructure::from_nodes(nodes)?
                    }
                    SlopeConfig::Anchored {
                        anchor_moneyness,
                        anchor_vol,
                    } => {
                        if !(*anchor_moneyness > 0.0) || *anchor_moneyness == 1.0 {
                            return Err(Error::Config(
                                "anchor_moneyness must be positive and different from 1".into(),
                            ));
                        }
                        let nodes = atm_vol
                            .nodes()
                            .iter()
                            .map(|&(t, atm)| (t, (anchor_vol - atm) / anchor_moneyness.ln()))
                            .collect();
                        TermStructure::from_nodes(nodes)?
                    }
                };
                VolSurface {
                    shape: SurfaceShape::ParametricSkew {
                        atm_vol: atm_vol.clone(),
                        slope,
                    },
                    vol_floor: *vol_floor,
                    bump: SurfaceBump::default(),
                }
            }
            SurfaceConfig::StrikeGrid {
                strikes,
                maturities,
                vols,
                vol_floor,
            } => VolSurface {
                shape: SurfaceShape::StrikeGrid {
                    strikes: strikes.clone(),
                    maturities: maturities.clone(),
                    vols: vols.clone(),
                },
                vol_floor: *vol_floor,
                bump: SurfaceBump::default(),
            },
        };
        MarketState::new(self.spot, discount, dividends, surface)
    }
}

/// The market section: inline, or a path relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MarketSource {
    Path(PathBuf),
    Inline(MarketConfig),
}

fn one() -> f64 {
    1.0
}

fn at_hit() -> Payout {
    Payout::AtHit
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForwardSkewConfig {
    DerivedFromSpot {
        #[serde(default = "one")]
        vol_factor: f64,
        #[serde(default = "one")]
        skew_factor: f64,
        #[serde(default)]
        vol_shift: f64,
    },
    /// Matrices indexed `[hit_time][remaining]`; slopes converted at the barrier.
    ExplicitTable {
        hit_times: Vec<f64>,
        remaining: Vec<f64>,
        vol: Vec<Vec<f64>>,
        slope: Vec<Vec<f64>>,
        slope_unit: SlopeUnit,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        forward_ratio: Option<Vec<Vec<f64>>>,
        #[serde(default = "default_floor")]
        vol_floor: f64,
        #[serde(default = "one")]
        vol_factor: f64,
        #[serde(default = "one")]
        skew_factor: f64,
        #[serde(default)]
        vol_shift: f64,
    },
}

impl Default for ForwardSkewConfig {
    fn default() -> Self {
        ForwardSkewConfig::DerivedFromSpot {
            vol_factor: 1.0,
            skew_factor: 1.0,
            vol_shift: 0.0,
        }
    }
}

impl ForwardSkewConfig {
    pub fn build(&self, spot: f64, barrier: f64) -> Result<ForwardSkewSpec> {
        let spec = match self {
            ForwardSkewConfig::DerivedFromSpot {
                vol_factor,
                skew_factor,
                vol_shift,
            } => ForwardSkewSpec::derived(*vol_factor, *skew_factor, *vol_shift),
            ForwardSkewConfig::ExplicitTable {
                hit_times,
                remaining,
                vol,
                slope,
                slope_unit,
                forward_ratio,
                vol_floor,
                vol_factor,
                skew_factor,
                vol_shift,
            } => {
                let slope = slope
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|&v| Slope { value: v, unit: *slope_unit }.to_log_strike(barrier, spot))
                            .collect()
                    })
                    .collect();
                ForwardSkewSpec {
                    vol_factor: *vol_factor,
                    skew_factor: *skew_factor,
                    vol_shift: *vol_shift,
                    ..ForwardSkewSpec::table(ForwardTable {
                        hit_times: hit_times.clone(),
                        remaining: remaining.clone(),
                        vol: vol.clone(),
                        slope,
                        forward_ratio: forward_ratio.clone(),
                        vol_floor: *vol_floor,
                    })
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Barrier given either absolutely or as a fraction of spot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier_fraction: Option<f64>,
    pub maturity: f64,
    #[serde(default = "at_hit")]
    pub payout: Payout,
    #[serde(default = "one")]
    pub notional: f64,
}

impl ContractConfig {
    pub fn build(&self, spot: f64) -> Result<BarrierContract> {
        let barrier = match (self.barrier, self.barrier_fraction) {
            (Some(b), None) => b,
            (None, Some(f)) => f * spot,
            _ => {
                return Err(Error::Config(
                    "contract needs exactly one of barrier or barrier_fraction".into(),
                ))
            }
        };
        BarrierContract::new(barrier, self.maturity, self.payout, self.notional)
    }

    pub fn eds_trade(&self, spot: f64) -> Result<EdsTrade> {
        let barrier_fraction = match (self.barrier, self.barrier_fraction) {
            (None, Some(f)) => f,
            (Some(b), None) => b / spot,
            _ => {
                return Err(Error::Config(
                    "trade needs exactly one of barrier or barrier_fraction".into(),
                ))
            }
        };
        let t = EdsTrade {
            notional: self.notional,
            barrier_fraction,
            maturity: self.maturity,
            payout: self.payout,
        };
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    #[serde(default)]
    pub mode: LadderMode,
    #[serde(default)]
    pub rungs: Vec<StressBump>,
}

/// A whole CLI run. Sections that a command does not use may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contract: Option<ContractConfig>,
    #[serde(default)]
    pub forward_skew: ForwardSkewConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<TriangleGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<LadderConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path` and inlines a market file referenced from it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(MarketSource::Path(p)) = &cfg.market {
            let full = path.parent().unwrap_or(Path::new(".")).join(p);
            let text = std::fs::read_to_string(&full)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", full.display())))?;
            let market: MarketConfig =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", full.display())))?;
            cfg.market = Some(MarketSource::Inline(market));
        }
        Ok(cfg)
    }

    pub fn market_config(&self) -> Result<&MarketConfig> {
        match &self.market {
            Some(MarketSource::Inline(m)) => Ok(m),
            Some(MarketSource::Path(p)) => Err(Error::Config(format!(
                "market file {} was not resolved; use RunConfig::load",
                p.display()
            ))),
            None => Err(Error::Config("missing 'market' section".into())),
        }
    }

    pub fn market(&self) -> Result<MarketState> {
        self.market_config()?.build()
    }

    pub fn contract(&self, spot: f64) -> Result<BarrierContract> {
        self.contract
            .as_ref()
            .ok_or_else(|| Error::Config("missing 'contract' section".into()))?
            .build(spot)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EDS: &str = r#"{
        "market": {
            "spot": 5.945,
            "surface": {
                "type": "parametric",
                "atm_vol": 0.52,
                "slope": { "anchor_moneyness": 0.3, "anchor_vol": 0.8 }
            }
        },
        "contract": { "barrier_fraction": 0.3, "maturity": 0.5 }
    }"#;

    #[test]
    fn anchored_surface_hits_both_anchors() {
        let cfg = RunConfig::from_json(EDS).unwrap();
        let m = cfg.market().unwrap();
        assert_eq!(m.spot_vol(5.945, 0.5).unwrap(), 0.52);
        assert!((m.spot_vol(0.3 * 5.945, 0.5).unwrap() - 0.8).abs() < 1e-14);
        assert!((m.spot_slope(1.0, 0.5).unwrap() + 0.232_563_392_623_11).abs() < 1e-12);
        let c = cfg.contract(m.spot).unwrap();
        assert!((c.barrier - 1.7835).abs() < 1e-12);
        assert_eq!(c.payout, Payout::AtHit);
    }

    #[test]
    fn quoted_slopes_are_converted() {
        let with_unit = |unit: &str| {
            format!(
                r#"{{"spot": 100, "surface": {{"type": "parametric", "atm_vol": 0.2,
                    "slope": {{"value": -0.1, "unit": "{unit}"}}}}}}"#
            )
        };
        let kappa = |unit: &str| {
            let m: MarketConfig = serde_json::from_str(&with_unit(unit)).unwrap();
            m.build().unwrap().spot_slope(100.0, 1.0).unwrap()
        };
        assert_eq!(kappa("per_log_strike"), -0.1);
        assert!((kappa("per_strike") + 10.0).abs() < 1e-12);
        assert!((kappa("per_moneyness") + 0.1).abs() < 1e-15);

        let missing_unit = r#"{"spot": 100, "surface": {"type": "parametric", "atm_vol": 0.2, "slope": {"value": -0.1}}}"#;
        assert!(serde_json::from_str::<MarketConfig>(missing_unit).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = EDS.replace("\"maturity\": 0.5", "\"maturity\": 0.5, \"colour\": 1");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = EDS.replace("\"spot\": 5.945,", "\"spot\": 5.945, \"rates\": {\"flat\": 0.0, \"horizon\": 1, \"x\": 2},");
        assert!(RunConfig::from_json(&bad).is_err());
        let bad = r#"{"solver": {"n_steps": 10, "typo": 1}}"#;
        assert!(RunConfig::from_json(bad).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig::from_json(EDS).unwrap();
        let again = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.market().unwrap(), again.market().unwrap());
    }

    #[test]
    fn table_spec_slope_units() {
        let json = r#"{"type": "explicit_table", "hit_times": [0, 1], "remaining": [0.1, 1],
            "vol": [[0.2, 0.2], [0.2, 0.2]], "slope": [[-0.001, -0.001], [-0.001, -0.001]],
            "slope_unit": "per_strike"}"#;
        let c: ForwardSkewConfig = serde_json::from_str(json).unwrap();
        let spec = c.build(100.0, 90.0).unwrap();
        let m = MarketState::flat(100.0, 0.2, 2.0).unwrap();
        let bc = spec.barrier_conditions(&m, 90.0, 0.5, 0.5).unwrap();
        assert!((bc.slope + 0.09).abs() < 1e-15);
    }
}
