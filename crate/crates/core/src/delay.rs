//! Mean user delay and its comparison with the neutral regime.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::logspace;
use crate::model::{ExogenousMode, MarketParams, SponsorshipProfile, INTERIOR, ORDERED};
use crate::wardrop::{solve_wardrop, EquilibriumFlows};

/// Delay as a function of the access price for one profile.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayCurve {
    pub prices: Vec<f64>,
    pub delays: Vec<f64>,
    /// Delay with no sponsorship, which does not depend on the price.
    pub neutral: f64,
    /// Price where the curve crosses `neutral` from below.
    pub threshold_price: Option<f64>,
}

/// Average sojourn over enqueued traffic, weighted by arrival share.
pub fn mean_delay_of(flows: &EquilibriumFlows) -> f64 {
    let q = flows.enqueued_rates();
    let total: f64 = q.iter().sum();
    q.iter()
        .enumerate()
        .filter(|(_, &r)| r > 0.0)
        .map(|(i, &r)| r / total * flows.sojourn(i))
        .sum()
}

pub fn mean_delay(params: &MarketParams, profile: &SponsorshipProfile) -> Result<f64> {
    Ok(mean_delay_of(&solve_wardrop(params, profile)?))
}

/// Two-CP delay written through `α` alone:
/// `(α Σm - c Σ m_i γ_i - 2) / λ`.
pub fn mean_delay_closed_form(params: &MarketParams, profile: &SponsorshipProfile) -> Result<f64> {
    if params.num_cps() != 2 {
        return Err(Error::precondition("closed-form delay needs 2 CPs"));
    }
    if params.exogenous_mode == ExogenousMode::Congesting && params.exogenous_rate > 0.0 {
        return Err(Error::precondition(
            "closed-form delay ignores congesting exogenous traffic",
        ));
    }
    params.validate().require(INTERIOR)?;
    let flows = solve_wardrop(params, profile)?;
    let m = &params.capacities;
    let g = profile.gammas();
    let sum_m: f64 = m.iter().sum();
    let sum_mg: f64 = m.iter().zip(g).map(|(m, g)| m * g).sum();
    Ok((flows.alpha * sum_m - params.access_price * sum_mg - 2.0) / params.total_rate)
}

/// Delay when no CP sponsors.
pub fn neutral_delay(params: &MarketParams) -> Result<f64> {
    mean_delay(params, &SponsorshipProfile::uniform(params.num_cps(), 1.0)?)
}

/// Price above which sponsorship by CP1 alone makes delay worse than in the
/// neutral regime. `None` when `γ2 ≤ γ1`: then delay is never lower.
pub fn delay_threshold_price(
    params: &MarketParams,
    gamma1: f64,
    gamma2: f64,
) -> Result<Option<f64>> {
    if params.num_cps() != 2 {
        return Err(Error::precondition("delay threshold is defined for 2 CPs"));
    }
    SponsorshipProfile::pair(gamma1, gamma2)?;
    params.validate().require(ORDERED)?;
    if gamma2 <= gamma1 {
        return Ok(None);
    }
    let (m1, m2) = (params.capacities[0], params.capacities[1]);
    Ok(Some(
        (m2 / m1 - m1 / m2) / (params.excess_capacity() * (gamma2 - gamma1)),
    ))
}

/// 200 log-spaced prices over `[1e-4, 10]`.
pub fn default_price_grid() -> Vec<f64> {
    logspace(1e-4, 10.0, 200)
}

pub fn delay_vs_price_curve(
    params: &MarketParams,
    profile: &SponsorshipProfile,
    prices: &[f64],
) -> Result<DelayCurve> {
    delay_vs_price_curve_with(params, profile, prices, Execution::default())
}

pub fn delay_vs_price_curve_with(
    params: &MarketParams,
    profile: &SponsorshipProfile,
    prices: &[f64],
    exec: Execution,
) -> Result<DelayCurve> {
    if prices.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
        return Err(Error::precondition("prices must be finite and nonnegative"));
    }
    if prices.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::precondition("prices must be strictly increasing"));
    }
    let at = |c: f64| mean_delay(&params.clone().with_access_price(c), profile);
    let delays = exec
        .map(prices, |&c| at(c).map_err(|e| e.at("c", c)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let neutral = neutral_delay(params)?;

    let gap = |d: f64| d - neutral;
    let threshold_price = (0..delays.len().saturating_sub(1))
        .find(|&k| gap(delays[k]) < 0.0 && gap(delays[k + 1]) >= 0.0)
        .map(|k| {
            let (mut lo, mut hi) = (prices[k], prices[k + 1]);
            for _ in 0..200 {
                let mid = lo + 0.5 * (hi - lo);
                if mid <= lo || mid >= hi {
                    break;
                }
                match at(mid) {
                    Ok(d) if gap(d) < 0.0 => lo = mid,
                    _ => hi = mid,
                }
            }
            hi
        });

    Ok(DelayCurve {
        prices: prices.to_vec(),
        delays,
        neutral,
        threshold_price,
    })
}
