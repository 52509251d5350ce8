//! Browser bindings for the hitting-density solver.
//!
//! Each export takes plain numbers and returns a JSON string, so the page
//! needs no glue beyond `JSON.parse`. The `*_json` functions are the native
//! implementations; the `#[wasm_bindgen]` wrappers only map errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use firsthit::kernel::{digital_put_flat, eur_dip, BsQuote};
use firsthit::scenarios::{run_sweep, Outcome, Scenario, SweepAxis, SweepSpec};
use firsthit::solver::{BarrierContract, Payout, SolverConfig};
use firsthit::{DiscountCurve, DividendModel, ForwardSkewSpec, MarketState, TermStructure, VolSurface};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Upper bound on time steps; keeps the O(N²) solve interactive.
pub const MAX_STEPS: usize = 2000;

/// Market and trade inputs shared by the demo widgets.
#[derive(Debug, Clone, Copy)]
pub struct Inputs {
    pub spot: f64,
    pub barrier_fraction: f64,
    pub maturity: f64,
    pub atm_vol: f64,
    /// dσ/d ln K.
    pub slope: f64,
    pub rate: f64,
    pub steps: usize,
}

fn scenario(i: &Inputs, spec: ForwardSkewSpec) -> Result<Scenario, String> {
    if i.steps == 0 || i.steps > MAX_STEPS {
        return Err(format!("steps must be between 1 and {MAX_STEPS}"));
    }
    let market = MarketState::new(
        i.spot,
        DiscountCurve::flat(i.rate, i.maturity.max(1e-6)).map_err(|e| e.to_string())?,
        DividendModel::none(),
        VolSurface::parametric(TermStructure::constant(i.atm_vol), TermStructure::constant(i.slope)),
    )
    .map_err(|e| e.to_string())?;
    let contract = BarrierContract::new(i.barrier_fraction * i.spot, i.maturity, Payout::AtHit, 1.0)
        .map_err(|e| e.to_string())?;
    Ok(Scenario {
        market,
        forward_skew: spec,
        contract,
        solver: SolverConfig::with_steps(i.steps),
    })
}

/// Density, cumulative curve and at-hit price for one forward-skew setting.
pub fn hitting_curve_json(i: &Inputs, fwd_vol_factor: f64, fwd_skew_factor: f64) -> Result<String, String> {
    let spec = ForwardSkewSpec::derived(fwd_vol_factor, fwd_skew_factor, 0.0);
    let (price, d) = scenario(i, spec)?.price().map_err(|e| e.to_string())?;
    Ok(json!({
        "times": d.times(),
        "density": d.rho,
        "cumulative": d.cumulative(),
        "price": price,
    })
    .to_string())
}

/// Prices and cumulative curves along `axis` (`spot_skew_factor`,
/// `fwd_skew_factor`, `fwd_vol_factor`, ...). Failed points carry an error.
pub fn skew_sweep_json(i: &Inputs, axis: &str, values: &[f64]) -> Result<String, String> {
    let axis: SweepAxis = serde_json::from_value(json!(axis)).map_err(|_| format!("unknown axis '{axis}'"))?;
    let table = run_sweep(&SweepSpec {
        axis,
        values: values.to_vec(),
        base: scenario(i, ForwardSkewSpec::identity())?,
    })
    .map_err(|e| e.to_string())?;
    let points: Vec<_> = table
        .rows
        .iter()
        .map(|r| match &r.outcome {
            Outcome::Ok(p) => json!({ "value": r.value, "price": p.price, "cumulative": p.cumulative }),
            Outcome::Failed { error } => json!({ "value": r.value, "error": error }),
        })
        .collect();
    Ok(json!({ "times": table.times, "points": points }).to_string())
}

/// Flat and skew-corrected European digital puts across `strikes`, with the
/// vol smile that produced them.
pub fn digital_smile_json(forward: f64, atm_vol: f64, slope: f64, maturity: f64, strikes: &[f64]) -> Result<String, String> {
    let surface = VolSurface::parametric(TermStructure::constant(atm_vol), TermStructure::constant(slope));
    let mut rows = Vec::with_capacity(strikes.len());
    for &k in strikes {
        if !(k > 0.0) {
            return Err("strikes must be positive".into());
        }
        let vol = surface.vol(k, maturity, forward);
        let q = BsQuote::new(forward, k, vol, maturity, 1.0).map_err(|e| e.to_string())?;
        let flat = digital_put_flat(&q).map_err(|e| e.to_string())?;
        // None where the skew would imply a negative digital
        let skewed = eur_dip(&q, surface.slope(k, maturity, forward)).ok();
        rows.push(json!({ "strike": k, "vol": vol, "flat": flat, "skewed": skewed }));
    }
    Ok(json!(rows).to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn hitting_curve(
    spot: f64,
    barrier_fraction: f64,
    maturity: f64,
    atm_vol: f64,
    slope: f64,
    rate: f64,
    steps: usize,
    fwd_vol_factor: f64,
    fwd_skew_factor: f64,
) -> Result<String, JsError> {
    let i = Inputs { spot, barrier_fraction, maturity, atm_vol, slope, rate, steps };
    js(hitting_curve_json(&i, fwd_vol_factor, fwd_skew_factor))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn skew_sweep(
    spot: f64,
    barrier_fraction: f64,
    maturity: f64,
    atm_vol: f64,
    slope: f64,
    rate: f64,
    steps: usize,
    axis: &str,
    values: Vec<f64>,
) -> Result<String, JsError> {
    let i = Inputs { spot, barrier_fraction, maturity, atm_vol, slope, rate, steps };
    js(skew_sweep_json(&i, axis, &values))
}

#[wasm_bindgen]
pub fn digital_smile(forward: f64, atm_vol: f64, slope: f64, maturity: f64, strikes: Vec<f64>) -> Result<String, JsError> {
    js(digital_smile_json(forward, atm_vol, slope, maturity, &strikes))
}
