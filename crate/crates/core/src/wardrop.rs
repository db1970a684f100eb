//! Wardrop equilibrium of end users choosing among CPs.
//!
//! A user served by CP `i` pays `1/(m_i - x_i) + γ_i c`. At equilibrium every
//! CP with positive traffic has the same cost `α`, and unused CPs cost at
//! least `α` when empty.

use crate::error::{Error, Result};
use crate::model::{
    Assumption, ExogenousMode, MarketParams, SponsorshipProfile, ValidationReport, Violation,
    INTERIOR,
};

/// Cost of a user at a CP with load `x`, capacity `m` and subsidy `gamma`;
/// `+∞` once the queue is saturated.
pub fn user_cost(x: f64, m: f64, c: f64, gamma: f64) -> f64 {
    if m > x {
        1.0 / (m - x) + gamma * c
    } else {
        f64::INFINITY
    }
}

/// Equilibrium traffic split for one profile.
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumFlows {
    /// Usual request rate `λ_i` per CP; sums to `λ`.
    pub rates: Vec<f64>,
    /// Common equilibrium cost.
    pub alpha: f64,
    /// `λ_i + λ0 (1 - γ_i)`.
    pub effective_rates: Vec<f64>,
    /// `Σ effective_rates`.
    pub total_effective: f64,
    /// Capacity available to usual traffic at each CP.
    pub capacities: Vec<f64>,
    /// Price `γ_i c` a user pays at each CP.
    pub prices: Vec<f64>,
    pub mode: ExogenousMode,
}

impl EquilibriumFlows {
    pub fn num_cps(&self) -> usize {
        self.rates.len()
    }

    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// User cost at CP `i` under the computed split.
    pub fn cost(&self, i: usize) -> f64 {
        user_cost(self.rates[i], self.capacities[i], self.prices[i], 1.0)
    }

    /// Largest violation of the equilibrium conditions: `|cost_i - α|` on
    /// used CPs and `α - cost_i(0)` on unused ones.
    pub fn wardrop_residual(&self) -> f64 {
        (0..self.num_cps())
            .map(|i| {
                if self.rates[i] > 0.0 {
                    (self.cost(i) - self.alpha).abs()
                } else {
                    (self.alpha - user_cost(0.0, self.capacities[i], self.prices[i], 1.0)).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    /// Traffic that actually waits in CP queues.
    pub fn enqueued_rates(&self) -> &[f64] {
        match self.mode {
            ExogenousMode::NonCongesting => &self.rates,
            ExogenousMode::Congesting => &self.effective_rates,
        }
    }

    /// Physical service rate of each CP queue.
    pub fn service_rates(&self) -> Vec<f64> {
        match self.mode {
            ExogenousMode::NonCongesting => self.capacities.clone(),
            ExogenousMode::Congesting => self
                .capacities
                .iter()
                .zip(self.effective_rates.iter().zip(&self.rates))
                .map(|(m, (e, r))| m + (e - r))
                .collect(),
        }
    }

    /// Analytic M/M/1 mean sojourn at CP `i`.
    pub fn sojourn(&self, i: usize) -> f64 {
        1.0 / (self.capacities[i] - self.rates[i])
    }
}

const MAX_BISECTIONS: usize = 200;
const CONSERVATION_TOL: f64 = 1e-9;

/// Water-filling split of `total_rate` over queues with the given
/// capacities and per-user prices. Returns `(rates, α)`.
///
/// Queues with non-positive capacity never receive traffic.
pub fn solve_wardrop_prices(
    capacities: &[f64],
    total_rate: f64,
    prices: &[f64],
) -> Result<(Vec<f64>, f64)> {
    assert_eq!(capacities.len(), prices.len(), "one price per queue");
    let usable: f64 = capacities.iter().filter(|&&m| m > 0.0).sum();
    let excess = usable - total_rate;
    if !(excess > 0.0) || !(total_rate > 0.0) {
        return Err(Error::AssumptionViolation(ValidationReport {
            violations: vec![Violation {
                assumption: Assumption::TotalCapacity,
                message: format!("total rate {total_rate} must be positive and below the usable capacity {usable}"),
            }],
        }));
    }

    let supply = |alpha: f64| -> f64 {
        capacities
            .iter()
            .zip(prices)
            .map(|(&m, &p)| {
                if m > 0.0 && alpha > p {
                    (m - 1.0 / (alpha - p)).max(0.0)
                } else {
                    0.0
                }
            })
            .sum()
    };

    let active = || capacities.iter().zip(prices).filter(|(&m, _)| m > 0.0);
    // supply(lo) = 0; supply(hi) ≥ λ since each term is ≥ m_i - m̄/n.
    let n = active().count() as f64;
    let mut lo = active()
        .map(|(&m, &p)| p + 1.0 / m)
        .fold(f64::INFINITY, f64::min);
    let mut hi = active().map(|(_, &p)| p).fold(f64::NEG_INFINITY, f64::max) + n / excess;

    for _ in 0..MAX_BISECTIONS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if supply(mid) < total_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = if (supply(lo) - total_rate).abs() < (supply(hi) - total_rate).abs() {
        lo
    } else {
        hi
    };

    let rates: Vec<f64> = capacities
        .iter()
        .zip(prices)
        .map(|(&m, &p)| {
            if m > 0.0 && alpha > p {
                (m - 1.0 / (alpha - p)).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    let residual = rates.iter().sum::<f64>() - total_rate;
    if !(residual.abs() <= CONSERVATION_TOL * total_rate) {
        return Err(Error::NoConvergence(format!(
            "flow residual {residual:e} after bisection (α = {alpha})"
        )));
    }
    Ok((rates, alpha))
}

/// Closed-form split for two interior queues. Caller guarantees interiority.
pub(crate) fn two_queue_closed_form(
    capacities: [f64; 2],
    total_rate: f64,
    prices: [f64; 2],
) -> ([f64; 2], f64) {
    let alpha = two_queue_alpha(prices, capacities[0] + capacities[1] - total_rate);
    let rates = [
        capacities[0] - 1.0 / (alpha - prices[0]),
        capacities[1] - 1.0 / (alpha - prices[1]),
    ];
    (rates, alpha)
}

/// Larger root of the two-queue equilibrium quadratic for excess capacity
/// `excess`. Always exceeds both prices.
pub fn two_queue_alpha(prices: [f64; 2], excess: f64) -> f64 {
    let inv = 1.0 / excess;
    0.5 * (prices[0] + prices[1]) + inv + (0.5 * (prices[0] - prices[1])).hypot(inv)
}

fn usual_capacities(params: &MarketParams, profile: &SponsorshipProfile) -> Vec<f64> {
    profile
        .gammas()
        .iter()
        .enumerate()
        .map(|(i, &g)| params.usual_capacity(i, g))
        .collect()
}

fn prices(params: &MarketParams, profile: &SponsorshipProfile) -> Vec<f64> {
    profile
        .gammas()
        .iter()
        .map(|g| g * params.access_price)
        .collect()
}

fn assemble(
    params: &MarketParams,
    profile: &SponsorshipProfile,
    capacities: Vec<f64>,
    rates: Vec<f64>,
    alpha: f64,
) -> EquilibriumFlows {
    let effective_rates: Vec<f64> = rates
        .iter()
        .zip(profile.gammas())
        .map(|(r, &g)| r + params.exogenous_share(g))
        .collect();
    EquilibriumFlows {
        total_effective: effective_rates.iter().sum(),
        effective_rates,
        rates,
        alpha,
        capacities,
        prices: prices(params, profile),
        mode: params.exogenous_mode,
    }
}

/// Two-CP equilibrium from the closed form. Requires every assumption.
pub fn solve_wardrop_two_cp(
    params: &MarketParams,
    profile: &SponsorshipProfile,
) -> Result<EquilibriumFlows> {
    if params.num_cps() != 2 {
        return Err(Error::precondition(format!(
            "closed form needs 2 CPs, got {}",
            params.num_cps()
        )));
    }
    profile.check_len(params)?;
    params.validate().require_all()?;
    Ok(closed_form(params, profile))
}

fn closed_form(params: &MarketParams, profile: &SponsorshipProfile) -> EquilibriumFlows {
    let caps = usual_capacities(params, profile);
    let p = prices(params, profile);
    let (rates, alpha) = two_queue_closed_form([caps[0], caps[1]], params.total_rate, [p[0], p[1]]);
    assemble(params, profile, caps, rates.to_vec(), alpha)
}

/// Equilibrium for any number of CPs by bisection on `α`. Zero flows are
/// allowed; only positivity and total capacity are required.
pub fn solve_wardrop_n_cp(
    params: &MarketParams,
    profile: &SponsorshipProfile,
) -> Result<EquilibriumFlows> {
    profile.check_len(params)?;
    params
        .validate()
        .require(&[Assumption::Positivity, Assumption::TotalCapacity])?;
    let caps = usual_capacities(params, profile);
    let (rates, alpha) = solve_wardrop_prices(&caps, params.total_rate, &prices(params, profile))?;
    Ok(assemble(params, profile, caps, rates, alpha))
}

/// Closed form when two CPs are guaranteed interior, bisection otherwise.
pub fn solve_wardrop(
    params: &MarketParams,
    profile: &SponsorshipProfile,
) -> Result<EquilibriumFlows> {
    profile.check_len(params)?;
    if params.num_cps() == 2 && params.validate().require(INTERIOR).is_ok() {
        Ok(closed_form(params, profile))
    } else {
        solve_wardrop_n_cp(params, profile)
    }
}
