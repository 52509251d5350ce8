use firsthit_wasm::{digital_smile_json, hitting_curve_json, skew_sweep_json, Inputs};
use serde_json::Value;

fn index() -> Inputs {
    Inputs {
        spot: 100.0,
        barrier_fraction: 0.9,
        maturity: 0.5,
        atm_vol: 0.25,
        slope: -0.15,
        rate: 0.0,
        steps: 200,
    }
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn hitting_curve_is_consistent() {
    let v: Value = serde_json::from_str(&hitting_curve_json(&index(), 1.0, 1.0).unwrap()).unwrap();
    let times = floats(&v["times"]);
    let cum = floats(&v["cumulative"]);
    assert_eq!(times.len(), 200);
    assert!(cum.windows(2).all(|w| w[1] >= w[0]));
    let price = v["price"].as_f64().unwrap();
    assert!(price > 0.0 && price <= *cum.last().unwrap() + 1e-12);
}

#[test]
fn sweeps_report_directions_and_errors() {
    let p = |axis: &str, values: &[f64]| -> Vec<Value> {
        let v: Value = serde_json::from_str(&skew_sweep_json(&index(), axis, values).unwrap()).unwrap();
        v["points"].as_array().unwrap().clone()
    };
    let spot: Vec<f64> = p("spot_skew_factor", &[0.5, 1.0, 2.0]).iter().map(|x| x["price"].as_f64().unwrap()).collect();
    assert!(spot.windows(2).all(|w| w[1] < w[0]));
    let fwd: Vec<f64> = p("fwd_skew_factor", &[0.5, 1.0, 2.0]).iter().map(|x| x["price"].as_f64().unwrap()).collect();
    assert!(fwd.windows(2).all(|w| w[1] > w[0]));

    let shifted = p("barrier_shift", &[0.0, 0.2]);
    assert!(shifted[0]["price"].is_f64());
    assert!(shifted[1]["error"].as_str().unwrap().contains("barrier"));
    assert!(skew_sweep_json(&index(), "sideways", &[1.0]).unwrap_err().contains("unknown axis"));
}

#[test]
fn smile_shows_the_vega_effect() {
    let rows: Vec<Value> =
        serde_json::from_str(&digital_smile_json(100.0, 0.25, -0.15, 0.5, &[80.0, 100.0, 120.0]).unwrap()).unwrap();
    for r in &rows {
        assert!(r["skewed"].as_f64().unwrap() < r["flat"].as_f64().unwrap());
    }
    assert_eq!(rows[1]["vol"].as_f64().unwrap(), 0.25);
    assert!(digital_smile_json(100.0, 0.25, -0.15, 0.5, &[-1.0]).is_err());
}

#[test]
fn step_limit_is_enforced() {
    let i = Inputs { steps: 5000, ..index() };
    assert!(hitting_curve_json(&i, 1.0, 1.0).is_err());
}
