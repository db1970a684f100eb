//! Scenario files: TOML with one table per concern. Unknown keys are
//! rejected so typos fail loudly instead of silently using defaults.

use std::path::Path;

use serde::Deserialize;
use zerorate::grid::{linspace, logspace};
use zerorate::{
    DuopolyParams, Error, ExogenousMode, MarketParams, Result, SimConfig, SponsorshipProfile,
};

/// Used when no `--config` is given: the two-CP reference market.
pub const DEFAULT_SCENARIO: &str = r#"
[market]
capacities = [700.0, 900.0]
total_rate = 1200.0
access_price = 0.5
repayment = 0.9
ad_rate = 1.0

[profile]
gammas = [0.0, 1.0]

[duopoly]
access_prices = [0.7, 0.9]
"#;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub market: Market,
    #[serde(default)]
    pub profile: Option<Profile>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub duopoly: Option<Duopoly>,
    #[serde(default)]
    pub simulation: Simulation,
    #[serde(default)]
    pub game: Game,
    /// `--grid`, kept so commands without a sweep table can size their own.
    #[serde(skip)]
    pub grid_override: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Market {
    pub capacities: Vec<f64>,
    pub total_rate: f64,
    #[serde(default)]
    pub access_price: f64,
    #[serde(default = "one")]
    pub repayment: f64,
    #[serde(default = "one")]
    pub ad_rate: f64,
    #[serde(default)]
    pub exogenous_rate: f64,
    #[serde(default = "noncongesting")]
    pub exogenous_mode: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub gammas: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default = "linear")]
    pub scale: Scale,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Duopoly {
    pub access_prices: [f64; 2],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simulation {
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "one_u64")]
    pub seed: u64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
    #[serde(default = "one_usize")]
    pub runs: usize,
}

impl Default for Simulation {
    fn default() -> Self {
        let d = SimConfig::default();
        Simulation {
            horizon: d.horizon,
            seed: d.seed,
            warmup_fraction: d.warmup_fraction,
            runs: 1,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Game {
    #[serde(default = "default_grid")]
    pub grid: usize,
}

impl Default for Game {
    fn default() -> Self {
        Game {
            grid: default_grid(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn one_u64() -> u64 {
    1
}
fn one_usize() -> usize {
    1
}
fn noncongesting() -> String {
    ExogenousMode::NonCongesting.to_string()
}
fn linear() -> Scale {
    Scale::Linear
}
fn default_horizon() -> u64 {
    SimConfig::default().horizon
}
fn default_warmup() -> f64 {
    SimConfig::default().warmup_fraction
}
fn default_grid() -> usize {
    zerorate::game::continuous::DEFAULT_GRID
}

/// Command-line overrides, applied after the file is parsed.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<ExogenousMode>,
    pub grid: Option<usize>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Self::parse(DEFAULT_SCENARIO),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                Self::parse(&text).map_err(|e| match e {
                    Error::Config(msg) => Error::Config(format!("{}: {msg}", p.display())),
                    other => other,
                })
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.simulation.seed = seed;
        }
        if let Some(mode) = o.mode {
            self.market.exogenous_mode = mode.to_string();
        }
        if let Some(grid) = o.grid {
            self.grid_override = Some(grid);
            self.game.grid = grid;
            if let Some(s) = self.sweep.as_mut() {
                s.points = grid;
            }
        }
    }

    pub fn market(&self) -> Result<MarketParams> {
        let m = &self.market;
        let mode: ExogenousMode = m.exogenous_mode.parse().map_err(Error::Config)?;
        Ok(MarketParams::new(m.capacities.clone(), m.total_rate)
            .with_access_price(m.access_price)
            .with_revenue(m.repayment, m.ad_rate)
            .with_exogenous(m.exogenous_rate, mode))
    }

    pub fn profile(&self) -> Result<SponsorshipProfile> {
        let p = self
            .profile
            .as_ref()
            .ok_or_else(|| Error::Config("missing [profile] table".into()))?;
        let profile =
            SponsorshipProfile::new(p.gammas.clone()).map_err(|e| Error::Config(e.to_string()))?;
        if profile.len() != self.market.capacities.len() {
            return Err(Error::Config(format!(
                "[profile] has {} gammas but [market] has {} capacities",
                profile.len(),
                self.market.capacities.len()
            )));
        }
        Ok(profile)
    }

    pub fn duopoly(&self) -> Result<DuopolyParams> {
        let d = self
            .duopoly
            .as_ref()
            .ok_or_else(|| Error::Config("missing [duopoly] table".into()))?;
        let caps: [f64; 2] =
            self.market.capacities.as_slice().try_into().map_err(|_| {
                Error::Config("the duopoly model needs exactly 2 capacities".into())
            })?;
        let m = &self.market;
        Ok(DuopolyParams::new(caps, m.total_rate, d.access_prices)
            .with_revenue(m.repayment, m.ad_rate)
            .with_exogenous(m.exogenous_rate))
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let s = &self.simulation;
        let config = SimConfig {
            horizon: s.horizon,
            seed: s.seed,
            warmup_fraction: s.warmup_fraction,
        };
        config.validate()?;
        if s.runs == 0 {
            return Err(Error::Config("simulation.runs must be at least 1".into()));
        }
        Ok(config)
    }

    /// Sweep axis name and points, checked against the axes the command
    /// understands.
    pub fn sweep_points(&self, allowed: &[&str]) -> Result<Option<(String, Vec<f64>)>> {
        let Some(s) = &self.sweep else {
            return Ok(None);
        };
        if !allowed.contains(&s.axis.as_str()) {
            return Err(Error::Config(format!(
                "sweep axis '{}' is not one of {}",
                s.axis,
                allowed.join(", ")
            )));
        }
        if s.points < 1 {
            return Err(Error::Config("sweep.points must be at least 1".into()));
        }
        if !(s.start.is_finite() && s.stop.is_finite()) {
            return Err(Error::Config("sweep bounds must be finite".into()));
        }
        let points = match s.scale {
            Scale::Linear => linspace(s.start, s.stop, s.points),
            Scale::Log => {
                if !(s.start > 0.0 && s.stop > 0.0) {
                    return Err(Error::Config("a log sweep needs positive bounds".into()));
                }
                logspace(s.start, s.stop, s.points)
            }
        };
        Ok(Some((s.axis.clone(), points)))
    }
}

/// Sets one named parameter of a single-ISP market.
pub fn set_market_axis(params: &mut MarketParams, axis: &str, value: f64) {
    match axis {
        "c" => params.access_price = value,
        "lambda" => params.total_rate = value,
        "lambda0" => params.exogenous_rate = value,
        "rho" => params.repayment = value,
        "beta" => params.ad_rate = value,
        _ => unreachable!("axis checked by sweep_points"),
    }
}

pub const MARKET_AXES: &[&str] = &["c", "lambda", "lambda0", "rho", "beta"];
pub const DUOPOLY_AXES: &[&str] = &["c1", "c2", "lambda", "lambda0", "rho", "beta"];

pub fn set_duopoly_axis(params: &mut DuopolyParams, axis: &str, value: f64) {
    match axis {
        "c1" => params.access_prices[0] = value,
        "c2" => params.access_prices[1] = value,
        "lambda" => params.total_rate = value,
        "lambda0" => params.exogenous_rate = value,
        "rho" => params.repayment = value,
        "beta" => params.ad_rate = value,
        _ => unreachable!("axis checked by sweep_points"),
    }
}
