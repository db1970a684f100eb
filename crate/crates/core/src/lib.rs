//! Equilibrium analysis of a zero-rating (sponsored data) market.
//!
//! End users split their requests among content providers (CPs) so that no
//! one can lower delay plus access price by switching ([`wardrop`]). CPs
//! choose how much of the ISP's access price to subsidise ([`game`]), which
//! shifts traffic, delay ([`delay`]) and the ISP's revenue. [`duopoly`]
//! extends the discrete game to two competing ISPs and [`sim`] checks the
//! queueing formulas by simulation.
//!
//! ```
//! use zerorate::{MarketParams, SponsorshipProfile, solve_wardrop};
//!
//! let market = MarketParams::new([700.0, 900.0], 1200.0).with_access_price(0.5);
//! let flows = solve_wardrop(&market, &SponsorshipProfile::pair(0.0, 1.0)?)?;
//! assert!((flows.rates[0] - 698.01).abs() < 1e-3);
//! # Ok::<(), zerorate::Error>(())
//! ```

pub mod delay;
pub mod duopoly;
pub mod error;
pub mod exec;
pub mod game;
pub mod grid;
pub mod model;
pub mod sim;
pub mod wardrop;

pub use delay::{
    delay_threshold_price, delay_vs_price_curve, mean_delay, mean_delay_closed_form, DelayCurve,
};
pub use duopoly::{
    brute_force_pne_multi, classify_pne_multi, discrete_game_table_multi, route_flows,
    DuopolyFlows, DuopolyParams, GameTable3x3, MultiAction, MultiProfile, PneReportMulti,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use game::{
    best_response, brute_force_pne, classify_pne, cp_utility, discrete_game_table,
    find_continuous_pne, rgf, utility_dominance, BestResponseCurve, DiscreteAction,
    DiscreteProfile, GameTable2x2, PneReport,
};
pub use model::{
    validate_assumptions, Assumption, ExogenousMode, MarketParams, SponsorshipProfile,
    ValidationReport,
};
pub use sim::{compare_to_theory, simulate, SimConfig, SimStats};
pub use wardrop::{
    solve_wardrop, solve_wardrop_n_cp, solve_wardrop_two_cp, user_cost, EquilibriumFlows,
};
