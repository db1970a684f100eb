//! Market parameters, sponsorship profiles and assumption checks.

use std::fmt;

use crate::error::{Error, Result};

/// How exogenous (sponsorship-attracted) traffic interacts with the queues.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ExogenousMode {
    /// Exogenous traffic is added on top of the usual Wardrop split and
    /// never loads a queue.
    #[default]
    NonCongesting,
    /// Exogenous traffic occupies capacity: the usual split is solved with
    /// `m_i - λ0 (1 - γ_i)` in place of `m_i`.
    Congesting,
}

impl fmt::Display for ExogenousMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExogenousMode::NonCongesting => "noncongesting",
            ExogenousMode::Congesting => "congesting",
        })
    }
}

impl std::str::FromStr for ExogenousMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "noncongesting" | "non-congesting" => Ok(ExogenousMode::NonCongesting),
            "congesting" => Ok(ExogenousMode::Congesting),
            other => Err(format!(
                "unknown exogenous mode `{other}` (expected noncongesting or congesting)"
            )),
        }
    }
}

/// One ISP serving `N` content providers.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketParams {
    /// Service rate `m_i` of each CP.
    pub capacities: Vec<f64>,
    /// Total end-user request rate `λ`.
    pub total_rate: f64,
    /// Access price `c` per unit traffic.
    pub access_price: f64,
    /// Fraction `ρ` of the sponsored charge the CP repays.
    pub repayment: f64,
    /// Advertisement revenue `β` per unit traffic.
    pub ad_rate: f64,
    /// Exogenous demand `λ0` attracted by full sponsorship.
    pub exogenous_rate: f64,
    pub exogenous_mode: ExogenousMode,
}

impl MarketParams {
    /// Free access (`c = 0`), `ρ = β = 1`, no exogenous demand.
    pub fn new(capacities: impl Into<Vec<f64>>, total_rate: f64) -> Self {
        MarketParams {
            capacities: capacities.into(),
            total_rate,
            access_price: 0.0,
            repayment: 1.0,
            ad_rate: 1.0,
            exogenous_rate: 0.0,
            exogenous_mode: ExogenousMode::NonCongesting,
        }
    }

    pub fn with_access_price(mut self, c: f64) -> Self {
        self.access_price = c;
        self
    }

    pub fn with_revenue(mut self, repayment: f64, ad_rate: f64) -> Self {
        self.repayment = repayment;
        self.ad_rate = ad_rate;
        self
    }

    pub fn with_exogenous(mut self, rate: f64, mode: ExogenousMode) -> Self {
        self.exogenous_rate = rate;
        self.exogenous_mode = mode;
        self
    }

    pub fn num_cps(&self) -> usize {
        self.capacities.len()
    }

    /// `m̄ = Σ m_i - λ`.
    pub fn excess_capacity(&self) -> f64 {
        self.capacities.iter().sum::<f64>() - self.total_rate
    }

    /// `ρ / β`, the only combination the discrete games depend on.
    pub fn cost_ratio(&self) -> f64 {
        self.repayment / self.ad_rate
    }

    /// Capacity left for usual traffic at CP `i` under `gamma`.
    pub fn usual_capacity(&self, i: usize, gamma: f64) -> f64 {
        match self.exogenous_mode {
            ExogenousMode::NonCongesting => self.capacities[i],
            ExogenousMode::Congesting => self.capacities[i] - self.exogenous_share(gamma),
        }
    }

    /// Exogenous traffic `λ0 (1 - γ)` a CP attracts at subsidy factor `gamma`.
    pub fn exogenous_share(&self, gamma: f64) -> f64 {
        self.exogenous_rate * (1.0 - gamma)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_assumptions(self)
    }
}

/// Subsidy factors `γ_i ∈ [0, 1]`, one per CP. `γ = 0` is full sponsorship.
#[derive(Clone, Debug, PartialEq)]
pub struct SponsorshipProfile {
    gammas: Vec<f64>,
}

impl SponsorshipProfile {
    pub fn new(gammas: impl Into<Vec<f64>>) -> Result<Self> {
        let gammas = gammas.into();
        if let Some((i, g)) = gammas
            .iter()
            .enumerate()
            .find(|(_, g)| !(0.0..=1.0).contains(*g))
        {
            return Err(Error::precondition(format!(
                "gamma[{i}] = {g} is outside [0, 1]"
            )));
        }
        Ok(SponsorshipProfile { gammas })
    }

    /// Every CP at the same subsidy factor.
    pub fn uniform(n: usize, gamma: f64) -> Result<Self> {
        Self::new(vec![gamma; n])
    }

    pub fn pair(g1: f64, g2: f64) -> Result<Self> {
        Self::new(vec![g1, g2])
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub(crate) fn check_len(&self, params: &MarketParams) -> Result<()> {
        if self.gammas.len() != params.num_cps() {
            return Err(Error::precondition(format!(
                "profile has {} subsidy factors but the market has {} CPs",
                self.gammas.len(),
                params.num_cps()
            )));
        }
        Ok(())
    }
}

/// Identifiers of the checked model assumptions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Assumption {
    /// Finite, correctly signed parameters and at least two CPs.
    Positivity,
    /// `Σ m_i > λ`.
    TotalCapacity,
    /// `m_i ≤ λ` for every CP.
    NoDominantCp,
    /// `m_1 < m_2 ≤ … ≤ m_N`.
    CapacityOrder,
    /// `m_1 > λ / N`.
    MinimumShare,
    /// `m̄ > 2 λ0` and `m_i > λ0` when exogenous traffic congests.
    ExogenousCapacity,
}

impl Assumption {
    pub fn id(self) -> &'static str {
        match self {
            Assumption::Positivity => "positivity",
            Assumption::TotalCapacity => "total-capacity",
            Assumption::NoDominantCp => "no-dominant-cp",
            Assumption::CapacityOrder => "capacity-order",
            Assumption::MinimumShare => "minimum-share",
            Assumption::ExogenousCapacity => "exogenous-capacity",
        }
    }

    pub const ALL: [Assumption; 6] = [
        Assumption::Positivity,
        Assumption::TotalCapacity,
        Assumption::NoDominantCp,
        Assumption::CapacityOrder,
        Assumption::MinimumShare,
        Assumption::ExogenousCapacity,
    ];
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Interior two-CP equilibria: enough for every 2-CP closed form.
pub const INTERIOR: &[Assumption] = &[
    Assumption::Positivity,
    Assumption::TotalCapacity,
    Assumption::NoDominantCp,
    Assumption::ExogenousCapacity,
];

/// Discrete games additionally rely on the capacity ordering.
pub const ORDERED: &[Assumption] = &[
    Assumption::Positivity,
    Assumption::TotalCapacity,
    Assumption::NoDominantCp,
    Assumption::CapacityOrder,
    Assumption::ExogenousCapacity,
];

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub assumption: Assumption,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, assumption: Assumption) -> bool {
        self.violations.iter().any(|v| v.assumption == assumption)
    }

    /// Keeps only the listed assumptions.
    pub fn restricted_to(&self, set: &[Assumption]) -> ValidationReport {
        ValidationReport {
            violations: self
                .violations
                .iter()
                .filter(|v| set.contains(&v.assumption))
                .cloned()
                .collect(),
        }
    }

    /// Errors with the violated subset of `set`, if any.
    pub fn require(&self, set: &[Assumption]) -> Result<()> {
        let sub = self.restricted_to(set);
        if sub.passed() {
            Ok(())
        } else {
            Err(Error::AssumptionViolation(sub))
        }
    }

    /// Errors on any violation at all.
    pub fn require_all(&self) -> Result<()> {
        self.require(&Assumption::ALL)
    }

    fn push(&mut self, assumption: Assumption, message: String) {
        self.violations.push(Violation {
            assumption,
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return f.write_str("all assumptions hold");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "[{}] {}", v.assumption, v.message)?;
        }
        Ok(())
    }
}

/// Reports every violated assumption. Never fails.
///
/// No-dominant-CP is checked as `m_i ≤ λ`: at equality both two-CP flows stay
/// strictly positive. The exogenous-capacity pair is only meaningful when
/// exogenous traffic occupies queues, so it is checked in
/// [`ExogenousMode::Congesting`] only.
pub fn validate_assumptions(params: &MarketParams) -> ValidationReport {
    let mut report = ValidationReport::default();
    let m = &params.capacities;
    let n = m.len();
    let lambda = params.total_rate;
    let pos = Assumption::Positivity;

    if n < 2 {
        report.push(pos, format!("need at least 2 CPs, got {n}"));
    }
    for (i, &mi) in m.iter().enumerate() {
        if !(mi.is_finite() && mi > 0.0) {
            report.push(
                pos,
                format!("capacity m_{} = {mi} must be finite and > 0", i + 1),
            );
        }
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        report.push(
            pos,
            format!("total rate λ = {lambda} must be finite and > 0"),
        );
    }
    if !(params.access_price.is_finite() && params.access_price >= 0.0) {
        report.push(
            pos,
            format!(
                "access price c = {} must be finite and ≥ 0",
                params.access_price
            ),
        );
    }
    if !(params.repayment.is_finite() && params.repayment > 0.0) {
        report.push(
            pos,
            format!("repayment ρ = {} must be finite and > 0", params.repayment),
        );
    }
    if !(params.ad_rate.is_finite() && params.ad_rate > 0.0) {
        report.push(
            pos,
            format!("ad rate β = {} must be finite and > 0", params.ad_rate),
        );
    }
    let lambda0 = params.exogenous_rate;
    if !(lambda0.is_finite() && lambda0 >= 0.0) {
        report.push(
            pos,
            format!("exogenous rate λ0 = {lambda0} must be finite and ≥ 0"),
        );
    }
    if n == 0 {
        return report;
    }

    let total: f64 = m.iter().sum();
    if !(total > lambda) {
        report.push(
            Assumption::TotalCapacity,
            format!("Σm_i = {total} must exceed λ = {lambda}"),
        );
    }
    for (i, &mi) in m.iter().enumerate() {
        if mi > lambda {
            report.push(
                Assumption::NoDominantCp,
                format!("m_{} = {mi} exceeds λ = {lambda}", i + 1),
            );
        }
    }
    if n >= 2 && !(m[0] < m[1]) {
        report.push(
            Assumption::CapacityOrder,
            format!("m_1 = {} must be < m_2 = {}", m[0], m[1]),
        );
    }
    for i in 2..n {
        if !(m[i - 1] <= m[i]) {
            report.push(
                Assumption::CapacityOrder,
                format!("m_{} = {} must be ≤ m_{} = {}", i, m[i - 1], i + 1, m[i]),
            );
        }
    }
    if !(m[0] > lambda / n as f64) {
        report.push(
            Assumption::MinimumShare,
            format!("m_1 = {} must exceed λ/N = {}", m[0], lambda / n as f64),
        );
    }

    if params.exogenous_mode == ExogenousMode::Congesting && lambda0 > 0.0 {
        let excess = total - lambda;
        if !(excess > 2.0 * lambda0) {
            report.push(
                Assumption::ExogenousCapacity,
                format!("m̄ = {excess} must exceed 2λ0 = {}", 2.0 * lambda0),
            );
        }
        for (i, &mi) in m.iter().enumerate() {
            if !(mi > lambda0) {
                report.push(
                    Assumption::ExogenousCapacity,
                    format!("m_{} = {mi} must exceed λ0 = {lambda0}", i + 1),
                );
            }
        }
    }
    report
}
