//! CP utilities over continuous subsidy factors, best responses and the
//! grid search for pure equilibria.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::unit_point;
use crate::model::{MarketParams, SponsorshipProfile, INTERIOR};
use crate::wardrop::{solve_wardrop, solve_wardrop_n_cp, two_queue_closed_form, EquilibriumFlows};

/// Relative band around the maximum that counts as a best response.
pub const BEST_RESPONSE_TOL: f64 = 1e-9;
/// Relative slack `ε` for mutual best responses in the PNE search.
pub const PNE_EPSILON: f64 = 1e-6;
/// Hausdorff distance between consecutive best-response sets that counts
/// as a jump.
pub const DEFAULT_JUMP: f64 = 0.05;
pub const DEFAULT_GRID: usize = 1001;

/// Revenue per unit of traffic left after repaying the sponsored charge:
/// `β - (1 - γ) ρ c`. May be negative.
pub fn margin(params: &MarketParams, gamma: f64) -> f64 {
    params.ad_rate - (1.0 - gamma) * params.repayment * params.access_price
}

/// `margin_i · λ̃_i` for every CP.
pub fn utilities_of(
    params: &MarketParams,
    profile: &SponsorshipProfile,
    flows: &EquilibriumFlows,
) -> Vec<f64> {
    profile
        .gammas()
        .iter()
        .zip(&flows.effective_rates)
        .map(|(&g, &r)| margin(params, g) * r)
        .collect()
}

pub fn cp_utilities(params: &MarketParams, profile: &SponsorshipProfile) -> Result<Vec<f64>> {
    let flows = solve_wardrop(params, profile)?;
    Ok(utilities_of(params, profile, &flows))
}

/// Utility of CP `i` (0-based).
pub fn cp_utility(params: &MarketParams, profile: &SponsorshipProfile, i: usize) -> Result<f64> {
    if i >= params.num_cps() {
        return Err(Error::precondition(format!("no CP with index {i}")));
    }
    Ok(cp_utilities(params, profile)?[i])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dominance {
    /// `U_1 ≥ U_2`.
    pub cp1_dominates: bool,
    /// Rate CP1 needs for `U_1 ≥ U_2`: `λ̃ · margin_2 / (margin_1 + margin_2)`.
    pub threshold_rate: f64,
    /// CP1's rate `λ̃_1`.
    pub cp1_rate: f64,
}

/// Compares the two CP utilities. Requires `ρ c / β ≤ 1` so both margins
/// are nonnegative.
pub fn utility_dominance(params: &MarketParams, profile: &SponsorshipProfile) -> Result<Dominance> {
    if params.num_cps() != 2 {
        return Err(Error::precondition("dominance compares exactly 2 CPs"));
    }
    let beta_bar = params.repayment * params.access_price / params.ad_rate;
    if beta_bar > 1.0 {
        return Err(Error::precondition(format!("ρc/β = {beta_bar} exceeds 1")));
    }
    let flows = solve_wardrop(params, profile)?;
    let u = utilities_of(params, profile, &flows);
    let (w1, w2) = (
        margin(params, profile.gammas()[0]),
        margin(params, profile.gammas()[1]),
    );
    let threshold_rate = if w1 + w2 > 0.0 {
        flows.total_effective * w2 / (w1 + w2)
    } else {
        0.0
    };
    Ok(Dominance {
        cp1_dominates: u[0] >= u[1],
        threshold_rate,
        cp1_rate: flows.effective_rates[0],
    })
}

/// Evaluates both utilities of a two-CP market without allocating on the
/// interior path.
#[derive(Clone, Debug)]
pub(crate) struct PairEvaluator<'a> {
    params: &'a MarketParams,
    interior: bool,
}

impl<'a> PairEvaluator<'a> {
    pub(crate) fn new(params: &'a MarketParams) -> Result<Self> {
        if params.num_cps() != 2 {
            return Err(Error::precondition("the two-player game needs 2 CPs"));
        }
        Ok(PairEvaluator {
            params,
            interior: params.validate().require(INTERIOR).is_ok(),
        })
    }

    pub(crate) fn utilities(&self, g1: f64, g2: f64) -> Result<[f64; 2]> {
        let p = self.params;
        if self.interior {
            let caps = [p.usual_capacity(0, g1), p.usual_capacity(1, g2)];
            let (rates, _) = two_queue_closed_form(
                caps,
                p.total_rate,
                [g1 * p.access_price, g2 * p.access_price],
            );
            Ok([
                margin(p, g1) * (rates[0] + p.exogenous_share(g1)),
                margin(p, g2) * (rates[1] + p.exogenous_share(g2)),
            ])
        } else {
            let profile = SponsorshipProfile::pair(g1, g2)?;
            let flows = solve_wardrop_n_cp(p, &profile)?;
            let u = utilities_of(p, &profile, &flows);
            Ok([u[0], u[1]])
        }
    }
}

/// Grid maximisers of one CP's utility against a fixed opponent.
#[derive(Clone, Debug, PartialEq)]
pub struct BestResponse {
    pub maximizers: Vec<f64>,
    pub max_utility: f64,
    /// Grid points where the equilibrium could not be computed.
    pub excluded: Vec<(f64, Error)>,
}

/// Maximises CP `which` (0 or 1) over `grid_size` points of `[0, 1]`.
pub fn best_response(
    params: &MarketParams,
    opponent_gamma: f64,
    which: usize,
    grid_size: usize,
) -> Result<BestResponse> {
    if grid_size < 2 {
        return Err(Error::precondition("grid needs at least 2 points"));
    }
    if which > 1 {
        return Err(Error::precondition("which must be 0 or 1"));
    }
    if !(0.0..=1.0).contains(&opponent_gamma) {
        return Err(Error::precondition(format!(
            "opponent gamma {opponent_gamma} outside [0, 1]"
        )));
    }
    let eval = PairEvaluator::new(params)?;
    let mut values = Vec::with_capacity(grid_size);
    let mut excluded = Vec::new();
    for k in 0..grid_size {
        let own = unit_point(k, grid_size);
        let (g1, g2) = if which == 0 {
            (own, opponent_gamma)
        } else {
            (opponent_gamma, own)
        };
        match eval.utilities(g1, g2) {
            Ok(u) => values.push((own, u[which])),
            Err(e) => excluded.push((own, e)),
        }
    }
    let max_utility = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    if !max_utility.is_finite() {
        let first = excluded.into_iter().next().map(|(_, e)| e);
        return Err(
            first.unwrap_or_else(|| Error::NoConvergence("no finite utility on the grid".into()))
        );
    }
    let floor = max_utility - BEST_RESPONSE_TOL * max_utility.abs();
    let maximizers = values
        .iter()
        .filter(|v| v.1 >= floor)
        .map(|v| v.0)
        .collect();
    Ok(BestResponse {
        maximizers,
        max_utility,
        excluded,
    })
}

/// Best-response correspondence of one CP sampled on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BestResponseCurve {
    pub opponent_gammas: Vec<f64>,
    pub responses: Vec<Vec<f64>>,
    /// Opponent values (midpoints between grid neighbours) where the
    /// response set jumps.
    pub discontinuities: Vec<f64>,
}

/// Both utilities on a square grid of profiles.
#[derive(Clone, Debug)]
pub struct UtilityGrid {
    pub gammas: Vec<f64>,
    // Row-major in (γ1, γ2); NaN marks an excluded profile.
    u: [Vec<f64>; 2],
    pub excluded: usize,
}

impl UtilityGrid {
    pub fn compute(params: &MarketParams, grid_size: usize, exec: Execution) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::precondition("grid needs at least 2 points"));
        }
        let eval = PairEvaluator::new(params)?;
        let gammas: Vec<f64> = (0..grid_size).map(|k| unit_point(k, grid_size)).collect();
        let rows = exec.map(&gammas, |&g1| {
            gammas
                .iter()
                .map(|&g2| eval.utilities(g1, g2).unwrap_or([f64::NAN; 2]))
                .collect::<Vec<_>>()
        });
        let mut u = [
            Vec::with_capacity(grid_size * grid_size),
            Vec::with_capacity(grid_size * grid_size),
        ];
        for row in rows {
            for [a, b] in row {
                u[0].push(a);
                u[1].push(b);
            }
        }
        let excluded = u[0].iter().filter(|x| x.is_nan()).count();
        if excluded == u[0].len() {
            return Err(Error::NoConvergence(
                "no profile on the grid could be solved".into(),
            ));
        }
        Ok(UtilityGrid {
            gammas,
            u,
            excluded,
        })
    }

    pub fn size(&self) -> usize {
        self.gammas.len()
    }

    /// Utility of CP `which` at grid indices `(i1, i2)`.
    pub fn utility(&self, which: usize, i1: usize, i2: usize) -> f64 {
        self.u[which][i1 * self.size() + i2]
    }

    // Utilities of `which` along its own axis with the opponent at `opp`.
    fn slice(&self, which: usize, opp: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.size()).map(move |own| {
            let (i1, i2) = if which == 0 { (own, opp) } else { (opp, own) };
            (own, self.utility(which, i1, i2))
        })
    }

    fn best_value(&self, which: usize, opp: usize) -> f64 {
        self.slice(which, opp)
            .map(|(_, u)| u)
            .filter(|u| !u.is_nan())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Indices within `rel_tol · |max|` of the maximum.
    pub fn response_indices(&self, which: usize, opp: usize, rel_tol: f64) -> Vec<usize> {
        let best = self.best_value(which, opp);
        let floor = best - rel_tol * best.abs();
        self.slice(which, opp)
            .filter(|&(_, u)| u >= floor)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn best_response_curve(&self, which: usize, jump: f64) -> BestResponseCurve {
        let responses: Vec<Vec<f64>> = (0..self.size())
            .map(|opp| {
                self.response_indices(which, opp, BEST_RESPONSE_TOL)
                    .into_iter()
                    .map(|k| self.gammas[k])
                    .collect()
            })
            .collect();
        let discontinuities = responses
            .windows(2)
            .enumerate()
            .filter(|(_, w)| hausdorff(&w[0], &w[1]) > jump)
            .map(|(k, _)| 0.5 * (self.gammas[k] + self.gammas[k + 1]))
            .collect();
        BestResponseCurve {
            opponent_gammas: self.gammas.clone(),
            responses,
            discontinuities,
        }
    }

    /// Profiles where each CP is within `rel_eps · |max|` of its best reply.
    pub fn epsilon_pne(&self, rel_eps: f64) -> Vec<(f64, f64)> {
        let n = self.size();
        let best1: Vec<f64> = (0..n).map(|i2| self.best_value(0, i2)).collect();
        let best2: Vec<f64> = (0..n).map(|i1| self.best_value(1, i1)).collect();
        let mut out = Vec::new();
        for i1 in 0..n {
            for i2 in 0..n {
                let (u1, u2) = (self.utility(0, i1, i2), self.utility(1, i1, i2));
                if u1 >= best1[i2] - rel_eps * best1[i2].abs()
                    && u2 >= best2[i1] - rel_eps * best2[i1].abs()
                {
                    out.push((self.gammas[i1], self.gammas[i2]));
                }
            }
        }
        out
    }
}

fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    let directed = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|p| {
                y.iter()
                    .map(|q| (p - q).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

pub fn best_response_curve(
    params: &MarketParams,
    which: usize,
    grid_size: usize,
) -> Result<BestResponseCurve> {
    Ok(
        UtilityGrid::compute(params, grid_size, Execution::default())?
            .best_response_curve(which, DEFAULT_JUMP),
    )
}

/// ε-pure equilibria on the grid. Empty means none at this resolution,
/// not a proof of non-existence.
pub fn find_continuous_pne(params: &MarketParams, grid_size: usize) -> Result<Vec<(f64, f64)>> {
    find_continuous_pne_with(params, grid_size, Execution::default())
}

pub fn find_continuous_pne_with(
    params: &MarketParams,
    grid_size: usize,
    exec: Execution,
) -> Result<Vec<(f64, f64)>> {
    Ok(UtilityGrid::compute(params, grid_size, exec)?.epsilon_pne(PNE_EPSILON))
}
