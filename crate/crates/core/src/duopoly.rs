//! Two ISPs with different access prices. Each CP sponsors through at most
//! one ISP, and users reach a CP through whichever ISP is cheaper for it.
//!
//! Exogenous traffic is added on top of usual traffic and never congests.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::game::discrete::{label, DEVIATION_TOL};
use crate::model::{Assumption, MarketParams, ValidationReport, Violation, ORDERED};
use crate::wardrop::{two_queue_alpha, two_queue_closed_form};

#[derive(Clone, Debug, PartialEq)]
pub struct DuopolyParams {
    pub capacities: [f64; 2],
    pub total_rate: f64,
    /// `c_1`, `c_2`.
    pub access_prices: [f64; 2],
    pub repayment: f64,
    pub ad_rate: f64,
    pub exogenous_rate: f64,
}

impl DuopolyParams {
    pub fn new(capacities: [f64; 2], total_rate: f64, access_prices: [f64; 2]) -> Self {
        DuopolyParams {
            capacities,
            total_rate,
            access_prices,
            repayment: 1.0,
            ad_rate: 1.0,
            exogenous_rate: 0.0,
        }
    }

    pub fn with_revenue(mut self, repayment: f64, ad_rate: f64) -> Self {
        self.repayment = repayment;
        self.ad_rate = ad_rate;
        self
    }

    pub fn with_exogenous(mut self, rate: f64) -> Self {
        self.exogenous_rate = rate;
        self
    }

    pub fn excess_capacity(&self) -> f64 {
        self.capacities[0] + self.capacities[1] - self.total_rate
    }

    pub fn cost_ratio(&self) -> f64 {
        self.repayment / self.ad_rate
    }

    /// The same market served by ISP `isp` alone.
    pub fn single_isp(&self, isp: usize) -> MarketParams {
        MarketParams::new(self.capacities.to_vec(), self.total_rate)
            .with_access_price(self.access_prices[isp])
            .with_revenue(self.repayment, self.ad_rate)
            .with_exogenous(self.exogenous_rate, Default::default())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = self.single_isp(0).validate();
        report.violations.retain(|v| {
            v.assumption != Assumption::Positivity || !v.message.starts_with("access price")
        });
        for (i, &c) in self.access_prices.iter().enumerate() {
            if !(c.is_finite() && c >= 0.0) {
                report.violations.push(Violation {
                    assumption: Assumption::Positivity,
                    message: format!("access price c_{} = {c} must be finite and ≥ 0", i + 1),
                });
            }
        }
        report
    }
}

/// Where a CP sponsors: through ISP1, ISP2 or nowhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MultiAction {
    /// `SN`: sponsors traffic through ISP1.
    SponsorFirst,
    /// `NS`: sponsors traffic through ISP2.
    SponsorSecond,
    /// `NN`: sponsors nothing.
    NoSponsor,
}

impl MultiAction {
    pub const ALL: [MultiAction; 3] = [
        MultiAction::SponsorFirst,
        MultiAction::SponsorSecond,
        MultiAction::NoSponsor,
    ];

    /// Subsidy factor at (ISP1, ISP2).
    pub fn gammas(self) -> [f64; 2] {
        match self {
            MultiAction::SponsorFirst => [0.0, 1.0],
            MultiAction::SponsorSecond => [1.0, 0.0],
            MultiAction::NoSponsor => [1.0, 1.0],
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            MultiAction::SponsorFirst => "SN",
            MultiAction::SponsorSecond => "NS",
            MultiAction::NoSponsor => "NN",
        }
    }
}

impl fmt::Display for MultiAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for MultiAction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SN" => Ok(MultiAction::SponsorFirst),
            "NS" => Ok(MultiAction::SponsorSecond),
            "NN" => Ok(MultiAction::NoSponsor),
            "SS" => Err(Error::precondition("a CP cannot sponsor through both ISPs")),
            other => Err(Error::precondition(format!("unknown action `{other}`"))),
        }
    }
}

/// Actions of (CP1, CP2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiProfile(pub MultiAction, pub MultiAction);

impl MultiProfile {
    pub fn all() -> impl Iterator<Item = MultiProfile> {
        MultiAction::ALL.into_iter().flat_map(|a| {
            MultiAction::ALL
                .into_iter()
                .map(move |b| MultiProfile(a, b))
        })
    }

    fn action(self, cp: usize) -> MultiAction {
        if cp == 0 {
            self.0
        } else {
            self.1
        }
    }

    fn with(self, cp: usize, action: MultiAction) -> Self {
        if cp == 0 {
            MultiProfile(action, self.1)
        } else {
            MultiProfile(self.0, action)
        }
    }

    fn index(self) -> usize {
        3 * self.0 as usize + self.1 as usize
    }

    /// `γ_ij` indexed `[isp][cp]`.
    pub fn gammas(self) -> [[f64; 2]; 2] {
        let (a, b) = (self.0.gammas(), self.1.gammas());
        [[a[0], b[0]], [a[1], b[1]]]
    }
}

impl fmt::Display for MultiProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

/// Per-ISP, per-CP equilibrium rates, indexed `[isp][cp]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DuopolyFlows {
    /// Usual traffic; sums to `λ`.
    pub usual: [[f64; 2]; 2],
    /// Usual plus exogenous traffic `λ0 (1 - γ_ij)`.
    pub effective: [[f64; 2]; 2],
    pub alpha: f64,
    /// Revenue gain of each ISP. `+∞` when an ISP carries exogenous traffic
    /// but no usual traffic.
    pub rgf: [f64; 2],
}

impl DuopolyFlows {
    pub fn total_usual(&self) -> f64 {
        self.usual.iter().flatten().sum()
    }
}

/// Routes each CP's traffic through the ISP with the lower effective price
/// `γ_ij c_i`, splitting equally on ties.
pub fn route_flows(params: &DuopolyParams, profile: MultiProfile) -> Result<DuopolyFlows> {
    params.validate().require(ORDERED)?;
    let c = params.access_prices;
    let g = profile.gammas();
    let eff_price = |i: usize, j: usize| g[i][j] * c[i];
    let price = [
        eff_price(0, 0).min(eff_price(1, 0)),
        eff_price(0, 1).min(eff_price(1, 1)),
    ];
    let (rates, alpha) = two_queue_closed_form(params.capacities, params.total_rate, price);

    let mut usual = [[0.0; 2]; 2];
    for j in 0..2 {
        let (p1, p2) = (eff_price(0, j), eff_price(1, j));
        let share = if p1 < p2 {
            [1.0, 0.0]
        } else if p2 < p1 {
            [0.0, 1.0]
        } else {
            [0.5, 0.5]
        };
        for i in 0..2 {
            usual[i][j] = share[i] * rates[j];
        }
    }
    let exo = |i: usize, j: usize| params.exogenous_rate * (1.0 - g[i][j]);
    let mut effective = usual;
    for (i, row) in effective.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e += exo(i, j);
        }
    }
    let rgf = [0, 1].map(|i| {
        let base = usual[i][0] + usual[i][1];
        let extra = exo(i, 0) + exo(i, 1);
        match (base > 0.0, extra > 0.0) {
            (true, _) => 1.0 + extra / base,
            (false, false) => 1.0,
            (false, true) => f64::INFINITY,
        }
    });
    Ok(DuopolyFlows {
        usual,
        effective,
        alpha,
        rgf,
    })
}

/// `U_j = Σ_i (β - ρ (1 - γ_ij) c_i) · effective_ij`.
pub fn duopoly_utilities(
    params: &DuopolyParams,
    profile: MultiProfile,
    flows: &DuopolyFlows,
) -> [f64; 2] {
    let g = profile.gammas();
    [0, 1].map(|j| {
        (0..2)
            .map(|i| {
                (params.ad_rate - params.repayment * (1.0 - g[i][j]) * params.access_prices[i])
                    * flows.effective[i][j]
            })
            .sum()
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameTable3x3 {
    utilities: [[f64; 2]; 9],
}

impl GameTable3x3 {
    pub fn from_utilities(f: impl Fn(MultiProfile) -> [f64; 2]) -> Self {
        let mut utilities = [[0.0; 2]; 9];
        for p in MultiProfile::all() {
            utilities[p.index()] = f(p);
        }
        GameTable3x3 { utilities }
    }

    pub fn utility(&self, profile: MultiProfile) -> [f64; 2] {
        self.utilities[profile.index()]
    }
}

pub fn discrete_game_table_multi(params: &DuopolyParams) -> Result<GameTable3x3> {
    let mut utilities = [[0.0; 2]; 9];
    for p in MultiProfile::all() {
        utilities[p.index()] = duopoly_utilities(params, p, &route_flows(params, p)?);
    }
    Ok(GameTable3x3 { utilities })
}

pub fn brute_force_pne_multi(table: &GameTable3x3) -> BTreeSet<MultiProfile> {
    MultiProfile::all()
        .filter(|&p| {
            (0..2).all(|cp| {
                MultiAction::ALL
                    .into_iter()
                    .filter(|&a| a != p.action(cp))
                    .all(|a| {
                        table.utility(p.with(cp, a))[cp] <= table.utility(p)[cp] + DEVIATION_TOL
                    })
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PneReportMulti {
    /// `(SN,SN)` is an equilibrium iff `ρ/β ≤ t_sponsor`.
    pub t_sponsor: f64,
    /// `(NN,NN)` is an equilibrium iff `ρ/β ≥ t_neutral`.
    pub t_neutral: f64,
    /// Equilibrium cost of the mixed profiles.
    pub alpha: f64,
    pub ratio: f64,
    pub pne_set: BTreeSet<MultiProfile>,
}

impl PneReportMulti {
    /// Revenue gain range of each ISP over the equilibria.
    pub fn rgf_ranges(&self, params: &DuopolyParams) -> Result<Option<[(f64, f64); 2]>> {
        let mut out: Option<[(f64, f64); 2]> = None;
        for &p in &self.pne_set {
            let r = route_flows(params, p)?.rgf;
            out = Some(match out {
                None => [(r[0], r[0]), (r[1], r[1])],
                Some(o) => [0, 1].map(|i| (o[i].0.min(r[i]), o[i].1.max(r[i]))),
            });
        }
        Ok(out)
    }

    pub fn pne_label(&self) -> String {
        label(self.pne_set.iter())
    }
}

/// Threshold classification for `c_1 < c_2`. Sponsoring through the dearer
/// ISP is dominated, so only `(SN,SN)`, `(NN,NN)` and `(SN,NN)` qualify.
pub fn classify_pne_multi(params: &DuopolyParams) -> Result<PneReportMulti> {
    let [c1, c2] = params.access_prices;
    if !(c1 < c2) {
        return Err(Error::precondition(format!(
            "need c1 < c2, got c1 = {c1}, c2 = {c2}"
        )));
    }
    if !(c1 > 0.0) {
        return Err(Error::precondition("thresholds need c1 > 0"));
    }
    params.validate().require(ORDERED)?;
    let [m1, m2] = params.capacities;
    let mb = params.excess_capacity();
    let l0 = params.exogenous_rate;
    let alpha = two_queue_alpha([0.0, c1], mb);
    let t_sponsor = (1.0 / (alpha - c1) - mb / 2.0 + l0) / (c1 * (m2 - mb / 2.0 + l0));
    let t_neutral = (mb / 2.0 - 1.0 / alpha + l0) / (c1 * (m1 - 1.0 / alpha + l0));

    use MultiAction::{NoSponsor as NN, SponsorFirst as SN};
    let r = params.cost_ratio();
    let mut pne_set = BTreeSet::new();
    if r <= t_sponsor {
        pne_set.insert(MultiProfile(SN, SN));
    }
    if r >= t_neutral {
        pne_set.insert(MultiProfile(NN, NN));
    }
    if t_sponsor <= r && r <= t_neutral {
        pne_set.insert(MultiProfile(SN, NN));
    }
    Ok(PneReportMulti {
        t_sponsor,
        t_neutral,
        alpha,
        ratio: r,
        pne_set,
    })
}
