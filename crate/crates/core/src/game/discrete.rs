//! The sponsor / no-sponsor game between two CPs and the ISP revenue gain.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::game::continuous::margin;
use crate::model::{MarketParams, SponsorshipProfile, ORDERED};

/// Absolute gain a deviation must exceed to break an equilibrium.
pub const DEVIATION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiscreteAction {
    /// Full sponsorship, `γ = 0`.
    Sponsor,
    /// No sponsorship, `γ = 1`.
    NoSponsor,
}

impl DiscreteAction {
    pub const ALL: [DiscreteAction; 2] = [DiscreteAction::Sponsor, DiscreteAction::NoSponsor];

    pub fn gamma(self) -> f64 {
        match self {
            DiscreteAction::Sponsor => 0.0,
            DiscreteAction::NoSponsor => 1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            DiscreteAction::Sponsor => DiscreteAction::NoSponsor,
            DiscreteAction::NoSponsor => DiscreteAction::Sponsor,
        }
    }

    fn letter(self) -> char {
        match self {
            DiscreteAction::Sponsor => 'S',
            DiscreteAction::NoSponsor => 'N',
        }
    }
}

/// Actions of (CP1, CP2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteProfile(pub DiscreteAction, pub DiscreteAction);

impl DiscreteProfile {
    pub const SS: Self = DiscreteProfile(DiscreteAction::Sponsor, DiscreteAction::Sponsor);
    pub const SN: Self = DiscreteProfile(DiscreteAction::Sponsor, DiscreteAction::NoSponsor);
    pub const NS: Self = DiscreteProfile(DiscreteAction::NoSponsor, DiscreteAction::Sponsor);
    pub const NN: Self = DiscreteProfile(DiscreteAction::NoSponsor, DiscreteAction::NoSponsor);
    pub const ALL: [Self; 4] = [Self::SS, Self::SN, Self::NS, Self::NN];

    pub fn gammas(self) -> [f64; 2] {
        [self.0.gamma(), self.1.gamma()]
    }

    pub fn to_profile(self) -> SponsorshipProfile {
        SponsorshipProfile::pair(self.0.gamma(), self.1.gamma())
            .expect("0 and 1 are valid subsidy factors")
    }

    fn index(self) -> usize {
        2 * (self.0 as usize) + self.1 as usize
    }

    fn with(self, player: usize, action: DiscreteAction) -> Self {
        if player == 0 {
            DiscreteProfile(action, self.1)
        } else {
            DiscreteProfile(self.0, action)
        }
    }

    fn action(self, player: usize) -> DiscreteAction {
        if player == 0 {
            self.0
        } else {
            self.1
        }
    }
}

impl fmt::Display for DiscreteProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.0.letter(), self.1.letter())
    }
}

/// Equilibrium costs of the four profiles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteAlphas {
    pub ss: f64,
    pub nn: f64,
    pub sn: f64,
    pub ns: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameTable2x2 {
    utilities: [[f64; 2]; 4],
    /// `λ_i + λ0 (1 - γ_i)` per profile; absent for hand-built tables.
    effective_rates: Option<[[f64; 2]; 4]>,
    pub alphas: Option<DiscreteAlphas>,
}

impl GameTable2x2 {
    /// A table with given utilities and no market behind it.
    pub fn from_utilities(f: impl Fn(DiscreteProfile) -> [f64; 2]) -> Self {
        let mut utilities = [[0.0; 2]; 4];
        for p in DiscreteProfile::ALL {
            utilities[p.index()] = f(p);
        }
        GameTable2x2 {
            utilities,
            effective_rates: None,
            alphas: None,
        }
    }

    pub fn utility(&self, profile: DiscreteProfile) -> [f64; 2] {
        self.utilities[profile.index()]
    }

    pub fn effective_rates(&self, profile: DiscreteProfile) -> Option<[f64; 2]> {
        self.effective_rates.map(|r| r[profile.index()])
    }
}

// Two-CP equilibrium for a discrete profile: (α, usual rates).
fn discrete_flows(params: &MarketParams, profile: DiscreteProfile) -> (f64, [f64; 2]) {
    let [g1, g2] = profile.gammas();
    let caps = [params.usual_capacity(0, g1), params.usual_capacity(1, g2)];
    let excess = caps[0] + caps[1] - params.total_rate;
    let c = params.access_price;
    let alpha = match profile {
        DiscreteProfile::SS => 2.0 / excess,
        DiscreteProfile::NN => c + 2.0 / excess,
        _ => 0.5 * c + 1.0 / excess + (0.5 * c).hypot(1.0 / excess),
    };
    let price = |g: f64| g * c;
    (
        alpha,
        [
            caps[0] - 1.0 / (alpha - price(g1)),
            caps[1] - 1.0 / (alpha - price(g2)),
        ],
    )
}

/// Utilities and equilibrium costs of all four profiles.
pub fn discrete_game_table(params: &MarketParams) -> Result<GameTable2x2> {
    if params.num_cps() != 2 {
        return Err(Error::precondition("the discrete game has 2 CPs"));
    }
    params.validate().require(ORDERED)?;
    let mut utilities = [[0.0; 2]; 4];
    let mut effective = [[0.0; 2]; 4];
    let mut alpha = [0.0; 4];
    for p in DiscreteProfile::ALL {
        let (a, rates) = discrete_flows(params, p);
        let g = p.gammas();
        for i in 0..2 {
            effective[p.index()][i] = rates[i] + params.exogenous_share(g[i]);
            utilities[p.index()][i] = margin(params, g[i]) * effective[p.index()][i];
        }
        alpha[p.index()] = a;
    }
    let at = |p: DiscreteProfile| alpha[p.index()];
    Ok(GameTable2x2 {
        utilities,
        effective_rates: Some(effective),
        alphas: Some(DiscreteAlphas {
            ss: at(DiscreteProfile::SS),
            nn: at(DiscreteProfile::NN),
            sn: at(DiscreteProfile::SN),
            ns: at(DiscreteProfile::NS),
        }),
    })
}

/// Profiles where no CP gains more than [`DEVIATION_TOL`] by switching.
pub fn brute_force_pne(table: &GameTable2x2) -> BTreeSet<DiscreteProfile> {
    DiscreteProfile::ALL
        .into_iter()
        .filter(|&p| {
            (0..2).all(|player| {
                let dev = p.with(player, p.action(player).other());
                table.utility(dev)[player] <= table.utility(p)[player] + DEVIATION_TOL
            })
        })
        .collect()
}

/// Pure equilibria of the discrete game classified by `ρ/β` thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct PneReport {
    /// `(S,S)` is an equilibrium iff `ρ/β ≤ a`.
    pub a: f64,
    /// `(N,N)` is an equilibrium iff `ρ/β ≥ b`.
    pub b: f64,
    /// `(N,S)` is an equilibrium iff `c_lo ≤ ρ/β ≤ d_hi`. The window is
    /// empty unless exogenous traffic congests.
    pub c_lo: f64,
    pub d_hi: f64,
    pub ratio: f64,
    pub pne_set: BTreeSet<DiscreteProfile>,
}

impl PneReport {
    /// `a ≤ b`, i.e. the `(S,N)` band is nonempty.
    pub fn thresholds_ordered(&self) -> bool {
        self.a <= self.b
    }

    /// Smallest and largest revenue gain over the equilibria.
    pub fn rgf_range(&self, params: &MarketParams) -> Option<(f64, f64)> {
        let values: Vec<f64> = self
            .pne_set
            .iter()
            .map(|p| rgf(params, &p.to_profile()))
            .collect();
        let lo = values.iter().cloned().reduce(f64::min)?;
        let hi = values.iter().cloned().reduce(f64::max)?;
        Some((lo, hi))
    }

    /// Profiles joined with `|`, e.g. `SS|NN`; `none` when empty.
    pub fn pne_label(&self) -> String {
        label(self.pne_set.iter())
    }
}

pub(crate) fn label<T: fmt::Display>(items: impl Iterator<Item = T>) -> String {
    let s: Vec<String> = items.map(|p| p.to_string()).collect();
    if s.is_empty() {
        "none".to_string()
    } else {
        s.join("|")
    }
}

/// Threshold classification. Each condition is exactly "no unilateral
/// deviation pays", rewritten as a bound on `ρ/β`.
pub fn classify_pne(params: &MarketParams) -> Result<PneReport> {
    let table = discrete_game_table(params)?;
    let c = params.access_price;
    if !(c > 0.0) {
        return Err(Error::precondition(
            "thresholds need a positive access price",
        ));
    }
    let f =
        |p: DiscreteProfile, i: usize| table.effective_rates(p).expect("market-backed table")[i];
    use DiscreteProfile as P;
    // Sponsoring player i gains c·F when ρ/β = (F_S - F_N) / (c F_S).
    let bound = |s: f64, n: f64| (s - n) / (c * s);
    let a = bound(f(P::SS, 1), f(P::SN, 1));
    let b = bound(f(P::SN, 0), f(P::NN, 0));
    let c_lo = bound(f(P::SS, 0), f(P::NS, 0));
    let d_hi = bound(f(P::NS, 1), f(P::NN, 1));

    let r = params.cost_ratio();
    let mut pne_set = BTreeSet::new();
    if r <= a {
        pne_set.insert(P::SS);
    }
    if r >= b {
        pne_set.insert(P::NN);
    }
    if a <= r && r <= b {
        pne_set.insert(P::SN);
    }
    if c_lo <= r && r <= d_hi {
        pne_set.insert(P::NS);
    }
    Ok(PneReport {
        a,
        b,
        c_lo,
        d_hi,
        ratio: r,
        pne_set,
    })
}

/// ISP revenue relative to the neutral regime: `1 + λ0 Σ(1-γ_i) / λ`.
pub fn rgf(params: &MarketParams, profile: &SponsorshipProfile) -> f64 {
    1.0 + profile
        .gammas()
        .iter()
        .map(|&g| params.exogenous_share(g))
        .sum::<f64>()
        / params.total_rate
}
