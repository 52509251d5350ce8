//! Closed-form Black-Scholes quantities and the skew-corrected European
//! digital put.
//!
//! Slopes are carried internally as dσ/d(ln K). [`Slope`] converts from the
//! other units a quote might arrive in.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard normal cumulative distribution function.
///
/// Built on `erfc`, which keeps full relative precision in the lower tail.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Black-Scholes `d1`, `d2` for a forward/strike pair.
///
/// Returns [`Error::DegenerateDiffusion`] when `vol * sqrt(ttm)` is zero; callers
/// fall back to intrinsic value in that case.
pub fn d1_d2(forward: f64, strike: f64, vol: f64, ttm: f64) -> Result<(f64, f64)> {
    if !(forward > 0.0 && strike > 0.0) {
        return Err(Error::input(format!(
            "forward and strike must be positive (forward={forward}, strike={strike})"
        )));
    }
    if !(vol >= 0.0 && ttm >= 0.0) {
        return Err(Error::input(format!(
            "vol and ttm must be non-negative (vol={vol}, ttm={ttm})"
        )));
    }
    let std_dev = vol * ttm.sqrt();
    if std_dev == 0.0 {
        return Err(Error::DegenerateDiffusion(std_dev));
    }
    let d1 = ((forward / strike).ln() + 0.5 * std_dev * std_dev) / std_dev;
    Ok((d1, d1 - std_dev))
}

/// Inputs of a single Black-Scholes quote on the forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsQuote {
    pub forward: f64,
    pub strike: f64,
    pub vol: f64,
    /// Time to maturity as a year fraction.
    pub ttm: f64,
    /// Discount factor to maturity, in (0, 1].
    pub df: f64,
}

impl BsQuote {
    pub fn new(forward: f64, strike: f64, vol: f64, ttm: f64, df: f64) -> Result<Self> {
        let q = BsQuote {
            forward,
            strike,
            vol,
            ttm,
            df,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.forward > 0.0
            && self.strike > 0.0
            && self.vol >= 0.0
            && self.ttm >= 0.0
            && self.df > 0.0
            && self.df <= 1.0
            && self.forward.is_finite()
            && self.strike.is_finite()
            && self.vol.is_finite()
            && self.ttm.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!("invalid quote {self:?}")))
        }
    }

    /// Total standard deviation `vol * sqrt(ttm)`.
    pub fn std_dev(&self) -> f64 {
        self.vol * self.ttm.sqrt()
    }

    fn d1_d2(&self) -> Option<(f64, f64)> {
        d1_d2(self.forward, self.strike, self.vol, self.ttm).ok()
    }
}

/// European put on the forward: `df * (K N(-d2) - F N(-d1))`.
pub fn bs_put(q: &BsQuote) -> Result<f64> {
    q.validate()?;
    let price = match q.d1_d2() {
        Some((d1, d2)) => q.df * (q.strike * norm_cdf(-d2) - q.forward * norm_cdf(-d1)),
        None => q.df * (q.strike - q.forward).max(0.0),
    };
    Ok(price.clamp(0.0, q.df * q.strike))
}

/// Put vega. `degenerate` is set when the quote has no diffusion left, in which
/// case the value is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vega {
    pub value: f64,
    pub degenerate: bool,
}

/// ∂Put/∂σ = `df * F * φ(d1) * sqrt(ttm)`.
pub fn bs_put_vega(q: &BsQuote) -> Result<Vega> {
    q.validate()?;
    Ok(match q.d1_d2() {
        Some((d1, _)) => Vega {
            value: q.df * q.forward * norm_pdf(d1) * q.ttm.sqrt(),
            degenerate: false,
        },
        None => Vega {
            value: 0.0,
            degenerate: true,
        },
    })
}

/// Digital put under a strike-independent vol: `df * N(-d2)`.
pub fn digital_put_flat(q: &BsQuote) -> Result<f64> {
    q.validate()?;
    Ok(match q.d1_d2() {
        Some((_, d2)) => q.df * norm_cdf(-d2),
        None => step(q),
    })
}

/// Digital call companion of [`digital_put_flat`], `df * N(d2)`.
pub fn digital_call_flat(q: &BsQuote) -> Result<f64> {
    q.validate()?;
    Ok(match q.d1_d2() {
        Some((_, d2)) => q.df * norm_cdf(d2),
        None => q.df - step(q),
    })
}

fn step(q: &BsQuote) -> f64 {
    if q.forward < q.strike {
        q.df
    } else {
        0.0
    }
}

/// European digital put including the skew (vega) correction.
///
/// `slope` is dσ/d(ln K) at the strike. The strike derivative of the put is
/// `df N(-d2) + vega * dσ/dK` and `dσ/dK = slope / K`.
pub fn eur_dip(q: &BsQuote, slope: f64) -> Result<f64> {
    q.validate()?;
    if !slope.is_finite() {
        return Err(Error::input(format!("slope must be finite, got {slope}")));
    }
    let price = match q.d1_d2() {
        Some((d1, d2)) => {
            let vega = q.df * q.forward * norm_pdf(d1) * q.ttm.sqrt();
            q.df * norm_cdf(-d2) + vega * slope / q.strike
        }
        None => step(q),
    };
    if !(0.0..=q.df).contains(&price) {
        return Err(Error::ArbitrageViolatingSkew {
            price,
            df: q.df,
            forward: q.forward,
            strike: q.strike,
            vol: q.vol,
            ttm: q.ttm,
            slope,
        });
    }
    Ok(price)
}

/// Unit in which an implied-vol slope is quoted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeUnit {
    /// dσ/d(ln K), the internal unit.
    PerLogStrike,
    /// dσ/dK in vol per currency unit of strike.
    PerStrike,
    /// dσ/d(K/S₀).
    PerMoneyness,
}

/// A slope value tagged with its unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slope {
    pub value: f64,
    pub unit: SlopeUnit,
}

impl Slope {
    pub fn per_log_strike(value: f64) -> Self {
        Slope {
            value,
            unit: SlopeUnit::PerLogStrike,
        }
    }

    /// Converts to dσ/d(ln K) at `strike`. `spot` is the moneyness reference.
    pub fn to_log_strike(&self, strike: f64, spot: f64) -> f64 {
        match self.unit {
            SlopeUnit::PerLogStrike => self.value,
            SlopeUnit::PerStrike => self.value * strike,
            SlopeUnit::PerMoneyness => self.value * strike / spot,
        }
    }
}
