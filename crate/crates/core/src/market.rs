//! Today's information set (discounting, dividends, spot vol surface) and the
//! forward-skew specification that fixes vol, slope and forward at the moment
//! the barrier is first touched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default lower bound on any implied vol the surface hands out.
pub const DEFAULT_VOL_FLOOR: f64 = 0.01;

/// Log-strike step of the central difference used for grid-surface slopes.
pub const GRID_SLOPE_STEP: f64 = 1e-3;

const TIME_EPS: f64 = 1e-12;

/// Piecewise-linear function of time with flat extrapolation on both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TermStructureRepr", into = "TermStructureRepr")]
pub struct TermStructure {
    nodes: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TermStructureRepr {
    Constant(f64),
    Nodes(Vec<(f64, f64)>),
}

impl From<TermStructureRepr> for TermStructure {
    fn from(r: TermStructureRepr) -> Self {
        match r {
            TermStructureRepr::Constant(v) => TermStructure::constant(v),
            TermStructureRepr::Nodes(nodes) => TermStructure { nodes },
        }
    }
}

impl From<TermStructure> for TermStructureRepr {
    fn from(ts: TermStructure) -> Self {
        match ts.nodes.as_slice() {
            [(t, v)] if *t == 0.0 => TermStructureRepr::Constant(*v),
            _ => TermStructureRepr::Nodes(ts.nodes),
        }
    }
}

impl TermStructure {
    pub fn constant(value: f64) -> Self {
        TermStructure {
            nodes: vec![(0.0, value)],
        }
    }

    pub fn from_nodes(nodes: Vec<(f64, f64)>) -> Result<Self> {
        let ts = TermStructure { nodes };
        ts.validate()?;
        Ok(ts)
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::input("term structure needs at least one node"));
        }
        if self.nodes.iter().any(|(t, v)| !t.is_finite() || !v.is_finite() || *t < 0.0) {
            return Err(Error::input("term structure nodes must be finite with t >= 0"));
        }
        if self.nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::input("term structure times must be strictly increasing"));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        let n = &self.nodes;
        if t <= n[0].0 {
            return n[0].1;
        }
        let last = n[n.len() - 1];
        if t >= last.0 {
            return last.1;
        }
        let i = n.partition_point(|&(ti, _)| ti <= t);
        let (t0, v0) = n[i - 1];
        let (t1, v1) = n[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Exact integral of the interpolant over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut knots = vec![a];
        knots.extend(self.nodes.iter().map(|n| n.0).filter(|&t| t > a && t < b));
        knots.push(b);
        knots
            .windows(2)
            .map(|w| 0.5 * (self.value(w[0]) + self.value(w[1])) * (w[1] - w[0]))
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        TermStructure {
            nodes: self.nodes.iter().map(|&(t, v)| (t, v * factor)).collect(),
        }
    }
}

/// Discount factors, log-linear between nodes. No extrapolation past the last node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountCurve {
    nodes: Vec<(f64, f64)>,
}

impl DiscountCurve {
    pub fn from_nodes(nodes: Vec<(f64, f64)>) -> Result<Self> {
        let c = DiscountCurve { nodes };
        c.validate()?;
        Ok(c)
    }

    /// Continuously compounded flat curve out to `horizon`.
    pub fn flat(rate: f64, horizon: f64) -> Result<Self> {
        Self::from_nodes(vec![(0.0, 1.0), (horizon, (-rate * horizon).exp())])
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].0
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.nodes;
        if n.len() < 2 {
            return Err(Error::input("discount curve needs at least two nodes"));
        }
        if n[0] != (0.0, 1.0) {
            return Err(Error::input("discount curve must start at (0, 1)"));
        }
        if n.iter().any(|(t, df)| !t.is_finite() || !(*df > 0.0) || !df.is_finite()) {
            return Err(Error::input("discount factors must be finite and positive"));
        }
        if n.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::input("discount curve times must be strictly increasing"));
        }
        Ok(())
    }

    pub fn df(&self, t: f64) -> Result<f64> {
        let n = &self.nodes;
        let last = self.horizon();
        if t < 0.0 || t.is_nan() {
            return Err(Error::input(format!("discount time must be >= 0, got {t}")));
        }
        if t > last + TIME_EPS {
            return Err(Error::Extrapolation { t, last });
        }
        let t = t.min(last);
        let i = n.partition_point(|&(ti, _)| ti <= t).clamp(1, n.len() - 1);
        let (t0, d0) = n[i - 1];
        let (t1, d1) = n[i];
        let w = (t - t0) / (t1 - t0);
        Ok((d0.ln() * (1.0 - w) + d1.ln() * w).exp())
    }
}

/// Dividend assumption. The two variants can share today's forward curve yet
/// disagree on the forward seen from a later, lower spot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DividendModel {
    /// Continuous yield `q(t)`, dividends scale with spot.
    Proportional { yield_curve: TermStructure },
    /// Fixed cash amounts `(time, amount)` independent of spot.
    Cash { payments: Vec<(f64, f64)> },
}

impl DividendModel {
    pub fn none() -> Self {
        DividendModel::Proportional {
            yield_curve: TermStructure::constant(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DividendModel::Proportional { yield_curve } => yield_curve.validate(),
            DividendModel::Cash { payments } => {
                if payments.iter().any(|(t, a)| !(*t >= 0.0) || !(*a >= 0.0) || !a.is_finite()) {
                    return Err(Error::input("cash dividends need t >= 0 and amount >= 0"));
                }
                if payments.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::input("cash dividend times must be strictly increasing"));
                }
                Ok(())
            }
        }
    }

    /// Cash schedule paying on `pay_times` that reproduces this model's
    /// forward from `spot` at every payment date.
    pub fn cash_equivalent(
        &self,
        spot: f64,
        discount: &DiscountCurve,
        pay_times: &[f64],
    ) -> Result<DividendModel> {
        let DividendModel::Proportional { yield_curve } = self else {
            return Ok(self.clone());
        };
        let mut prev = 1.0;
        let mut payments = Vec::with_capacity(pay_times.len());
        for &t in pay_times {
            let retained = (-yield_curve.integral(0.0, t)).exp();
            payments.push((t, spot * (prev - retained) / discount.df(t)?));
            prev = retained;
        }
        let model = DividendModel::Cash { payments };
        model.validate()?;
        Ok(model)
    }
}

/// Where a skew multiplier pivots: vol at the pivot strike is left unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkewPivot {
    /// The forward of the queried maturity.
    #[default]
    Atm,
    /// A fixed absolute strike.
    Strike(f64),
}

/// Scenario overlay on a surface: `σ'(K) = σ(P) + scale·(σ(K) − σ(P)) + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfaceBump {
    pub skew_scale: f64,
    pub pivot: SkewPivot,
    pub vol_shift: f64,
}

impl Default for SurfaceBump {
    fn default() -> Self {
        SurfaceBump {
            skew_scale: 1.0,
            pivot: SkewPivot::Atm,
            vol_shift: 0.0,
        }
    }
}

impl SurfaceBump {
    pub fn is_identity(&self) -> bool {
        self.skew_scale == 1.0 && self.vol_shift == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SurfaceShape {
    /// `σ(K, T) = σ_ATM(T) + κ(T)·ln(K / F₀(T))`, κ per unit log-strike.
    ParametricSkew {
        atm_vol: TermStructure,
        slope: TermStructure,
    },
    /// Vols on a `maturities × strikes` grid, bilinear in (ln K, T), flat outside.
    StrikeGrid {
        strikes: Vec<f64>,
        maturities: Vec<f64>,
        vols: Vec<Vec<f64>>,
    },
}

/// Spot implied-vol surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolSurface {
    pub shape: SurfaceShape,
    pub vol_floor: f64,
    #[serde(default, skip_serializing_if = "SurfaceBump::is_identity")]
    pub bump: SurfaceBump,
}

impl VolSurface {
    pub fn parametric(atm_vol: TermStructure, slope: TermStructure) -> Self {
        VolSurface {
            shape: SurfaceShape::ParametricSkew { atm_vol, slope },
            vol_floor: DEFAULT_VOL_FLOOR,
            bump: SurfaceBump::default(),
        }
    }

    pub fn flat(vol: f64) -> Self {
        Self::parametric(TermStructure::constant(vol), TermStructure::constant(0.0))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vol_floor > 0.0) {
            return Err(Error::input("vol_floor must be positive"));
        }
        if !(self.bump.skew_scale >= 0.0) || !self.bump.vol_shift.is_finite() {
            return Err(Error::input("surface bump needs skew_scale >= 0 and a finite shift"));
        }
        if let SkewPivot::Strike(k) = self.bump.pivot {
            if !(k > 0.0) {
                return Err(Error::input("skew pivot strike must be positive"));
            }
        }
        match &self.shape {
            SurfaceShape::ParametricSkew { atm_vol, slope } => {
                atm_vol.validate()?;
                slope.validate()
            }
            SurfaceShape::StrikeGrid {
                strikes,
                maturities,
                vols,
            } => {
                if strikes.is_empty() || maturities.is_empty() {
                    return Err(Error::input("strike grid needs strikes and maturities"));
                }
                if strikes.iter().any(|k| !(*k > 0.0)) || maturities.iter().any(|t| !(*t > 0.0)) {
                    return Err(Error::input("grid strikes and maturities must be positive"));
                }
                if strikes.windows(2).any(|w| w[1] <= w[0])
                    || maturities.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(Error::input("grid axes must be strictly increasing"));
                }
                if vols.len() != maturities.len() || vols.iter().any(|r| r.len() != strikes.len()) {
                    return Err(Error::input("vols must be a maturities x strikes matrix"));
                }
                if vols.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::input("grid vols must be finite and non-negative"));
                }
                Ok(())
            }
        }
    }

    fn raw_vol(&self, strike: f64, maturity: f64, forward: f64) -> f64 {
        match &self.shape {
            SurfaceShape::ParametricSkew { atm_vol, slope } => {
                atm_vol.value(maturity) + slope.value(maturity) * (strike / forward).ln()
            }
            SurfaceShape::StrikeGrid {
                strikes,
                maturities,
                vols,
            } => {
                let (i0, i1, wt) = bracket(maturities, maturity);
                let log_k: Vec<f64> = strikes.iter().map(|k| k.ln()).collect();
                let (j0, j1, wk) = bracket(&log_k, strike.ln());
                let row = |i: usize| vols[i][j0] * (1.0 - wk) + vols[i][j1] * wk;
                row(i0) * (1.0 - wt) + row(i1) * wt
            }
        }
    }

    fn pivot_strike(&self, forward: f64) -> f64 {
        match self.bump.pivot {
            SkewPivot::Atm => forward,
            SkewPivot::Strike(k) => k,
        }
    }

    fn bumped_vol(&self, strike: f64, maturity: f64, forward: f64) -> f64 {
        let b = &self.bump;
        let raw = self.raw_vol(strike, maturity, forward);
        if b.skew_scale == 1.0 {
            return raw + b.vol_shift;
        }
        let at_pivot = self.raw_vol(self.pivot_strike(forward), maturity, forward);
        at_pivot + b.skew_scale * (raw - at_pivot) + b.vol_shift
    }

    /// Implied vol at `strike` for expiry `maturity`; `forward` is F₀(maturity).
    pub fn vol(&self, strike: f64, maturity: f64, forward: f64) -> f64 {
        self.bumped_vol(strike, maturity, forward).max(self.vol_floor)
    }

    /// dσ/d(ln K) at `strike`. Zero wherever the floor binds.
    pub fn slope(&self, strike: f64, maturity: f64, forward: f64) -> f64 {
        match &self.shape {
            SurfaceShape::ParametricSkew { slope, .. } => {
                if self.bumped_vol(strike, maturity, forward) <= self.vol_floor {
                    0.0
                } else {
                    self.bump.skew_scale * slope.value(maturity)
                }
            }
            SurfaceShape::StrikeGrid { .. } => {
                let h = GRID_SLOPE_STEP;
                let up = self.vol(strike * h.exp(), maturity, forward);
                let dn = self.vol(strike * (-h).exp(), maturity, forward);
                (up - dn) / (2.0 * h)
            }
        }
    }

    /// The same surface with an extra skew multiplier around `pivot`.
    pub fn with_skew_scale(&self, factor: f64, pivot: SkewPivot) -> Self {
        let mut s = self.clone();
        s.bump.skew_scale *= factor;
        s.bump.pivot = pivot;
        s
    }

    pub fn with_vol_shift(&self, shift: f64) -> Self {
        let mut s = self.clone();
        s.bump.vol_shift += shift;
        s
    }
}

// Interpolation bracket with flat extrapolation.
fn bracket(xs: &[f64], x: f64) -> (usize, usize, f64) {
    let n = xs.len();
    if n == 1 || x <= xs[0] {
        return (0, 0, 0.0);
    }
    if x >= xs[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let i = xs.partition_point(|&v| v <= x);
    (i - 1, i, (x - xs[i - 1]) / (xs[i] - xs[i - 1]))
}

/// Spot, discounting, dividends and the spot vol surface as of today.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub spot: f64,
    pub discount: DiscountCurve,
    pub dividends: DividendModel,
    pub surface: VolSurface,
}

impl MarketState {
    pub fn new(
        spot: f64,
        discount: DiscountCurve,
        dividends: DividendModel,
        surface: VolSurface,
    ) -> Result<Self> {
        let m = MarketState {
            spot,
            discount,
            dividends,
            surface,
        };
        m.validate()?;
        Ok(m)
    }

    /// Zero rates, no dividends, flat vol out to `horizon`.
    pub fn flat(spot: f64, vol: f64, horizon: f64) -> Result<Self> {
        Self::new(
            spot,
            DiscountCurve::flat(0.0, horizon)?,
            DividendModel::none(),
            VolSurface::flat(vol),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0) || !self.spot.is_finite() {
            return Err(Error::input(format!("spot must be positive, got {}", self.spot)));
        }
        self.discount.validate()?;
        self.dividends.validate()?;
        self.surface.validate()
    }

    /// Forward for delivery at `maturity` seen at time `t` when spot is `spot_at_t`.
    pub fn forward(&self, spot_at_t: f64, t: f64, maturity: f64) -> Result<f64> {
        if !(spot_at_t > 0.0) {
            return Err(Error::input(format!("spot must be positive, got {spot_at_t}")));
        }
        if !(t >= 0.0 && maturity >= t) {
            return Err(Error::input(format!("forward needs 0 <= t <= T (t={t}, T={maturity})")));
        }
        let df_t = self.discount.df(t)?;
        let df_mat = self.discount.df(maturity)?;
        let growth = df_t / df_mat;
        let forward = match &self.dividends {
            DividendModel::Proportional { yield_curve } => {
                spot_at_t * (-yield_curve.integral(t, maturity)).exp() * growth
            }
            DividendModel::Cash { payments } => {
                let mut pv = 0.0;
                for &(ti, amount) in payments.iter().filter(|(ti, _)| *ti > t && *ti <= maturity) {
                    pv += amount * self.discount.df(ti)? / df_t;
                }
                (spot_at_t - pv) * growth
            }
        };
        if !(forward > 0.0) {
            return Err(Error::NegativeForward {
                forward,
                t,
                maturity,
            });
        }
        Ok(forward)
    }

    /// Today's forward `F₀(T)`.
    pub fn forward0(&self, maturity: f64) -> Result<f64> {
        self.forward(self.spot, 0.0, maturity)
    }

    pub fn spot_vol(&self, strike: f64, maturity: f64) -> Result<f64> {
        check_strike_maturity(strike, maturity)?;
        Ok(self.surface.vol(strike, maturity, self.forward0(maturity)?))
    }

    pub fn spot_slope(&self, strike: f64, maturity: f64) -> Result<f64> {
        check_strike_maturity(strike, maturity)?;
        Ok(self.surface.slope(strike, maturity, self.forward0(maturity)?))
    }

    pub fn df(&self, t: f64) -> Result<f64> {
        self.discount.df(t)
    }
}

fn check_strike_maturity(strike: f64, maturity: f64) -> Result<()> {
    if !(strike > 0.0 && maturity > 0.0) || !strike.is_finite() || !maturity.is_finite() {
        return Err(Error::input(format!(
            "surface query needs strike > 0 and T > 0 (K={strike}, T={maturity})"
        )));
    }
    Ok(())
}

/// Externally supplied barrier conditions on a (hit time × remaining maturity) grid.
///
/// Matrices are indexed `[hit_time][remaining]`. `forward_ratio`, when present,
/// overrides the market forward with `F = B · ratio`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardTable {
    pub hit_times: Vec<f64>,
    pub remaining: Vec<f64>,
    pub vol: Vec<Vec<f64>>,
    pub slope: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward_ratio: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_floor")]
    pub vol_floor: f64,
}

fn default_floor() -> f64 {
    DEFAULT_VOL_FLOOR
}

impl ForwardTable {
    fn validate(&self) -> Result<()> {
        let (nt, nr) = (self.hit_times.len(), self.remaining.len());
        if nt == 0 || nr == 0 {
            return Err(Error::input("forward table needs hit times and remaining maturities"));
        }
        if self.hit_times.windows(2).any(|w| w[1] <= w[0])
            || self.remaining.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::input("forward table axes must be strictly increasing"));
        }
        let shape_ok = |m: &Vec<Vec<f64>>| m.len() == nt && m.iter().all(|r| r.len() == nr);
        if !shape_ok(&self.vol) || !shape_ok(&self.slope) {
            return Err(Error::input("forward table matrices must be hit_times x remaining"));
        }
        if let Some(fr) = &self.forward_ratio {
            if !shape_ok(fr) || fr.iter().flatten().any(|v| !(*v > 0.0)) {
                return Err(Error::input("forward_ratio must be a positive hit_times x remaining matrix"));
            }
        }
        if !(self.vol_floor > 0.0) {
            return Err(Error::input("vol_floor must be positive"));
        }
        Ok(())
    }

    fn interp(&self, m: &[Vec<f64>], tau: f64, rem: f64) -> f64 {
        let (i0, i1, wt) = bracket(&self.hit_times, tau);
        let (j0, j1, wr) = bracket(&self.remaining, rem);
        let row = |i: usize| m[i][j0] * (1.0 - wr) + m[i][j1] * wr;
        row(i0) * (1.0 - wt) + row(i1) * wt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ForwardSource {
    /// Read today's surface at (B, remaining maturity). `reference` pins a
    /// surface other than the market's, e.g. when only spot inputs are bumped.
    DerivedFromSpot {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<Box<VolSurface>>,
    },
    ExplicitTable(ForwardTable),
}

/// Forward vol σ̂, forward slope κ̂ and forward at the first touch of the barrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardSkewSpec {
    pub source: ForwardSource,
    pub vol_factor: f64,
    pub skew_factor: f64,
    /// Additive shift applied after `vol_factor`.
    pub vol_shift: f64,
}

/// Values returned by [`ForwardSkewSpec::barrier_conditions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierConditions {
    pub vol: f64,
    /// Per unit log-strike.
    pub slope: f64,
    pub forward: f64,
}

impl Default for ForwardSkewSpec {
    fn default() -> Self {
        Self::identity()
    }
}

impl ForwardSkewSpec {
    /// Forward conditions equal to today's surface at the same remaining maturity.
    pub fn identity() -> Self {
        Self::derived(1.0, 1.0, 0.0)
    }

    pub fn derived(vol_factor: f64, skew_factor: f64, vol_shift: f64) -> Self {
        ForwardSkewSpec {
            source: ForwardSource::DerivedFromSpot { reference: None },
            vol_factor,
            skew_factor,
            vol_shift,
        }
    }

    pub fn table(table: ForwardTable) -> Self {
        ForwardSkewSpec {
            source: ForwardSource::ExplicitTable(table),
            vol_factor: 1.0,
            skew_factor: 1.0,
            vol_shift: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vol_factor >= 0.0 && self.skew_factor >= 0.0) || !self.vol_shift.is_finite() {
            return Err(Error::input(
                "forward skew spec needs vol_factor, skew_factor >= 0 and a finite vol_shift",
            ));
        }
        match &self.source {
            ForwardSource::DerivedFromSpot { reference } => {
                reference.as_ref().map_or(Ok(()), |s| s.validate())
            }
            ForwardSource::ExplicitTable(t) => t.validate(),
        }
    }

    /// Pins a derived spec to `surface` so later bumps of the market surface
    /// leave the forward conditions untouched.
    pub fn frozen_to(&self, surface: &VolSurface) -> Self {
        let mut s = self.clone();
        if let ForwardSource::DerivedFromSpot { reference } = &mut s.source {
            if reference.is_none() {
                *reference = Some(Box::new(surface.clone()));
            }
        }
        s
    }

    /// σ̂, κ̂ and forward when spot first touches `barrier` at `hit_time`,
    /// for an option with `remaining` maturity left.
    pub fn barrier_conditions(
        &self,
        market: &MarketState,
        barrier: f64,
        hit_time: f64,
        remaining: f64,
    ) -> Result<BarrierConditions> {
        if !(hit_time >= 0.0 && remaining > 0.0) {
            return Err(Error::input(format!(
                "barrier conditions need tau >= 0 and remaining > 0 (tau={hit_time}, rem={remaining})"
            )));
        }
        let (base_vol, base_slope, floor, forward) = match &self.source {
            ForwardSource::DerivedFromSpot { reference } => {
                let surface = reference.as_deref().unwrap_or(&market.surface);
                let f0 = market.forward0(remaining)?;
                (
                    surface.vol(barrier, remaining, f0),
                    surface.slope(barrier, remaining, f0),
                    surface.vol_floor,
                    market.forward(barrier, hit_time, hit_time + remaining)?,
                )
            }
            ForwardSource::ExplicitTable(t) => {
                let forward = match &t.forward_ratio {
                    Some(fr) => barrier * t.interp(fr, hit_time, remaining),
                    None => market.forward(barrier, hit_time, hit_time + remaining)?,
                };
                (
                    t.interp(&t.vol, hit_time, remaining),
                    t.interp(&t.slope, hit_time, remaining),
                    t.vol_floor,
                    forward,
                )
            }
        };
        let vol = self.vol_factor * base_vol + self.vol_shift;
        if !(vol > 0.0) {
            return Err(Error::input(format!(
                "forward vol non-positive after factor/shift: {vol} (tau={hit_time}, rem={remaining})"
            )));
        }
        Ok(BarrierConditions {
            vol: vol.max(floor),
            slope: self.skew_factor * base_slope,
            forward,
        })
    }

    /// Samples this spec on a grid into an explicit table (with forwards).
    pub fn sample_table(
        &self,
        market: &MarketState,
        barrier: f64,
        hit_times: &[f64],
        remaining: &[f64],
    ) -> Result<ForwardTable> {
        let mut vol = Vec::with_capacity(hit_times.len());
        let mut slope = Vec::with_capacity(hit_times.len());
        let mut ratio = Vec::with_capacity(hit_times.len());
        for &tau in hit_times {
            let mut v = Vec::with_capacity(remaining.len());
            let mut s = Vec::with_capacity(remaining.len());
            let mut r = Vec::with_capacity(remaining.len());
            for &rem in remaining {
                let c = self.barrier_conditions(market, barrier, tau, rem)?;
                v.push(c.vol);
                s.push(c.slope);
                r.push(c.forward / barrier);
            }
            vol.push(v);
            slope.push(s);
            ratio.push(r);
        }
        let floor = match &self.source {
            ForwardSource::DerivedFromSpot { reference } => {
                reference.as_deref().unwrap_or(&market.surface).vol_floor
            }
            ForwardSource::ExplicitTable(t) => t.vol_floor,
        };
        let table = ForwardTable {
            hit_times: hit_times.to_vec(),
            remaining: remaining.to_vec(),
            vol,
            slope,
            forward_ratio: Some(ratio),
            vol_floor: floor,
        };
        table.validate()?;
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eds_surface() -> VolSurface {
        let kappa = (0.80 - 0.52) / 0.30f64.ln();
        VolSurface::parametric(TermStructure::constant(0.52), TermStructure::constant(kappa))
    }

    #[test]
    fn discount_examples() {
        let c = DiscountCurve::from_nodes(vec![(0.0, 1.0), (1.0, 0.98), (2.0, 0.95)]).unwrap();
        assert_eq!(c.df(0.0).unwrap(), 1.0);
        assert!((c.df(1.5).unwrap() - (0.98f64 * 0.95).sqrt()).abs() < 1e-15);
        assert!((c.df(1.5).unwrap() - 0.964_883_412_646_3).abs() < 1e-12);
        assert!(matches!(c.df(2.5), Err(Error::Extrapolation { .. })));

        let z = DiscountCurve::flat(0.0, 10.0).unwrap();
        for t in [0.0, 0.3, 7.0, 10.0] {
            assert_eq!(z.df(t).unwrap(), 1.0);
        }
        let r = DiscountCurve::flat(0.03, 5.0).unwrap();
        assert!((r.df(2.0).unwrap() - (-0.06f64).exp()).abs() < 1e-15);

        assert!(DiscountCurve::from_nodes(vec![(0.0, 0.99), (1.0, 0.98)]).is_err());
        assert!(DiscountCurve::from_nodes(vec![(0.0, 1.0), (1.0, -0.1)]).is_err());
    }

    #[test]
    fn forward_examples() {
        let mut m = MarketState::flat(100.0, 0.2, 5.0).unwrap();
        for t in [0.1, 1.0, 4.0] {
            assert_eq!(m.forward0(t).unwrap(), 100.0);
        }
        m.dividends = DividendModel::Proportional {
            yield_curve: TermStructure::constant(0.02),
        };
        let f = m.forward0(1.0).unwrap();
        assert!((f - 100.0 * (-0.02f64).exp()).abs() < 1e-12);
        assert!((f - 98.019_867_330_675_5).abs() < 1e-9);

        m.dividends = DividendModel::Cash {
            payments: vec![(0.5, 150.0)],
        };
        assert!(matches!(m.forward0(1.0), Err(Error::NegativeForward { .. })));
    }

    #[test]
    fn proportional_forward_exceeds_cash_after_drop() {
        let mut prop = MarketState::flat(100.0, 0.2, 2.0).unwrap();
        prop.discount = DiscountCurve::flat(0.01, 2.0).unwrap();
        prop.dividends = DividendModel::Proportional {
            yield_curve: TermStructure::constant(0.02),
        };
        let cash_model = prop
            .dividends
            .cash_equivalent(100.0, &prop.discount, &[0.25, 0.5, 0.75, 1.0])
            .unwrap();
        let cash = MarketState {
            dividends: cash_model,
            ..prop.clone()
        };
        for t in [0.25, 0.5, 0.75, 1.0] {
            let (a, b) = (prop.forward0(t).unwrap(), cash.forward0(t).unwrap());
            assert!((a - b).abs() < 1e-12, "t={t}: {a} vs {b}");
        }
        for t in [0.1, 0.3, 0.6] {
            let fp = prop.forward(90.0, t, 1.0).unwrap();
            let fc = cash.forward(90.0, t, 1.0).unwrap();
            assert!(fp > fc, "t={t}: {fp} <= {fc}");
        }
    }

    #[test]
    fn proportional_forward_is_multiplicative() {
        let mut m = MarketState::flat(100.0, 0.2, 3.0).unwrap();
        m.dividends = DividendModel::Proportional {
            yield_curve: TermStructure::from_nodes(vec![(0.0, 0.01), (2.0, 0.03)]).unwrap(),
        };
        let unit = m.forward(1.0, 0.4, 2.5).unwrap();
        for s in [0.5, 37.0, 120.0] {
            assert!((m.forward(s, 0.4, 2.5).unwrap() - s * unit).abs() < 1e-12 * s);
        }
    }

    #[test]
    fn parametric_surface_examples() {
        let m = MarketState::new(
            5.945,
            DiscountCurve::flat(0.0, 1.0).unwrap(),
            DividendModel::none(),
            eds_surface(),
        )
        .unwrap();
        assert_eq!(m.spot_vol(5.945, 0.5).unwrap(), 0.52);
        let kappa = (0.80 - 0.52) / 0.30f64.ln();
        assert!((kappa + 0.232_563_392_623_11).abs() < 1e-12);
        assert!((m.spot_vol(0.3 * 5.945, 0.5).unwrap() - 0.80).abs() < 1e-14);
        assert_eq!(m.spot_slope(0.3 * 5.945, 0.5).unwrap(), kappa);

        // far upside strike pushes the linear skew below the floor
        let k = 5.945 * 20.0;
        assert_eq!(m.spot_vol(k, 0.5).unwrap(), DEFAULT_VOL_FLOOR);
        assert_eq!(m.spot_slope(k, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn skew_scale_pivots() {
        let s = eds_surface();
        let b = 0.3 * 5.945;
        let f = 5.945;
        let atm = s.with_skew_scale(0.8, SkewPivot::Atm);
        assert!((atm.vol(f, 0.5, f) - 0.52).abs() < 1e-15);
        assert!((atm.vol(b, 0.5, f) - (0.52 + 0.8 * 0.28)).abs() < 1e-12);
        let at_b = s.with_skew_scale(0.8, SkewPivot::Strike(b));
        assert!((at_b.vol(b, 0.5, f) - 0.80).abs() < 1e-12);
        assert!((at_b.slope(b, 0.5, f) - 0.8 * s.slope(b, 0.5, f)).abs() < 1e-15);
        let shifted = s.with_vol_shift(0.06);
        assert!((shifted.vol(b, 0.5, f) - 0.86).abs() < 1e-12);
        assert_eq!(shifted.slope(b, 0.5, f), s.slope(b, 0.5, f));
    }

    #[test]
    fn grid_surface_interpolates_and_differentiates() {
        let strikes = vec![60.0, 80.0, 100.0, 120.0];
        let maturities = vec![0.5, 1.0];
        let vol_at = |k: f64, t: f64| 0.2 - 0.1 * (k / 100.0f64).ln() + 0.02 * t;
        let vols = maturities
            .iter()
            .map(|&t| strikes.iter().map(|&k| vol_at(k, t)).collect())
            .collect();
        let s = VolSurface {
            shape: SurfaceShape::StrikeGrid {
                strikes,
                maturities,
                vols,
            },
            vol_floor: DEFAULT_VOL_FLOOR,
            bump: SurfaceBump::default(),
        };
        s.validate().unwrap();
        // linear in (ln K, T) inside the grid, so bilinear is exact
        for (k, t) in [(70.0, 0.75), (90.0, 0.5), (110.0, 0.9)] {
            assert!((s.vol(k, t, 100.0) - vol_at(k, t)).abs() < 1e-12);
            assert!((s.slope(k, t, 100.0) + 0.1).abs() < 1e-9);
        }
        // flat outside
        assert!((s.vol(200.0, 3.0, 100.0) - vol_at(120.0, 1.0)).abs() < 1e-12);
        assert!(s.slope(200.0, 3.0, 100.0).abs() < 1e-12);
    }

    #[test]
    fn identity_spec_reproduces_today() {
        let m = MarketState::new(
            5.945,
            DiscountCurve::flat(0.0, 1.0).unwrap(),
            DividendModel::none(),
            eds_surface(),
        )
        .unwrap();
        let b = 0.3 * 5.945;
        let c = ForwardSkewSpec::identity().barrier_conditions(&m, b, 0.0, 0.5).unwrap();
        assert_eq!(c.vol, m.spot_vol(b, 0.5).unwrap());
        assert_eq!(c.slope, m.spot_slope(b, 0.5).unwrap());
        assert_eq!(c.forward, b);

        let flat = ForwardSkewSpec::derived(1.0, 0.0, 0.0);
        for tau in [0.0, 0.2, 0.4] {
            assert_eq!(flat.barrier_conditions(&m, b, tau, 0.5 - tau).unwrap().slope, 0.0);
        }
        let steep = ForwardSkewSpec::derived(1.0, 2.0, 0.0);
        let c = steep.barrier_conditions(&m, b, 0.1, 0.4).unwrap();
        assert!((c.slope - 2.0 * -0.232_563_392_623_11).abs() < 1e-12);

        let bad = ForwardSkewSpec::derived(1.0, 1.0, -0.9);
        assert!(bad.barrier_conditions(&m, b, 0.1, 0.4).is_err());
        let floored = ForwardSkewSpec::derived(1.0, 1.0, -0.795);
        assert_eq!(floored.barrier_conditions(&m, b, 0.1, 0.4).unwrap().vol, DEFAULT_VOL_FLOOR);
    }

    #[test]
    fn sampled_table_round_trips_at_nodes() {
        let mut m = MarketState::flat(100.0, 0.25, 2.0).unwrap();
        m.surface = VolSurface::parametric(
            TermStructure::from_nodes(vec![(0.1, 0.3), (1.0, 0.22)]).unwrap(),
            TermStructure::constant(-0.2),
        );
        m.discount = DiscountCurve::flat(0.02, 2.0).unwrap();
        let spec = ForwardSkewSpec::derived(1.1, 1.5, -0.01);
        let taus = [0.0, 0.25, 0.5, 0.75];
        let rems = [0.05, 0.25, 0.5, 1.0];
        let table = ForwardSkewSpec::table(spec.sample_table(&m, 85.0, &taus, &rems).unwrap());
        for &tau in &taus {
            for &rem in &rems {
                let a = spec.barrier_conditions(&m, 85.0, tau, rem).unwrap();
                let b = table.barrier_conditions(&m, 85.0, tau, rem).unwrap();
                assert_eq!(a.vol, b.vol);
                assert_eq!(a.slope, b.slope);
                assert!((a.forward - b.forward).abs() < 1e-12);
            }
        }
        // off-grid: within linear interpolation error
        let a = spec.barrier_conditions(&m, 85.0, 0.3, 0.4).unwrap();
        let b = table.barrier_conditions(&m, 85.0, 0.3, 0.4).unwrap();
        assert!((a.vol - b.vol).abs() < 5e-3);
        assert!((a.forward - b.forward).abs() < 1e-3);
    }

    #[test]
    fn frozen_spec_ignores_spot_bumps() {
        let mut m = MarketState::flat(100.0, 0.2, 1.0).unwrap();
        m.surface = VolSurface::parametric(TermStructure::constant(0.2), TermStructure::constant(-0.15));
        let spec = ForwardSkewSpec::identity().frozen_to(&m.surface);
        let before = spec.barrier_conditions(&m, 90.0, 0.2, 0.3).unwrap();
        m.surface = m.surface.with_skew_scale(2.0, SkewPivot::Atm).with_vol_shift(0.05);
        let after = spec.barrier_conditions(&m, 90.0, 0.2, 0.3).unwrap();
        assert_eq!(before, after);
    }
}
