//! Discrete-event simulation of the CP queues at a Wardrop split.
//!
//! A single Poisson stream of rate `Σ` (usual + exogenous) is thinned by
//! independent categorical routing, which is exactly a set of independent
//! Poisson streams. Each CP is a FIFO M/M/1 queue advanced by the Lindley
//! recursion, so no event list is needed.
//!
//! Randomness: ChaCha8 seeded with `seed`. Stream 0 drives inter-arrival
//! times and routing, stream `1 + i` drives service times at CP `i`.
//!
//! Standard errors come from regenerative cycles: a cycle starts whenever
//! an arrival finds its queue empty. Cycles are i.i.d., so the ratio
//! estimator `ΣY / ΣN` of the mean sojourn has a delta-method variance that
//! stays honest near saturation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::delay::mean_delay_of;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{ExogenousMode, MarketParams};
use crate::wardrop::EquilibriumFlows;

pub const DEFAULT_Z_THRESHOLD: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    /// Arrivals to simulate, usual and exogenous together.
    pub horizon: u64,
    pub seed: u64,
    /// Leading fraction of arrivals excluded from statistics.
    pub warmup_fraction: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            horizon: 1_000_000,
            seed: 1,
            warmup_fraction: 0.1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::Config(format!(
                "warmup_fraction {} must be in [0, 1)",
                self.warmup_fraction
            )));
        }
        Ok(())
    }

    fn warmup_arrivals(&self) -> u64 {
        (self.warmup_fraction * self.horizon as f64).floor() as u64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CpStats {
    /// Usual arrivals after warmup.
    pub arrivals: u64,
    /// Exogenous arrivals after warmup (queued only when they congest).
    pub exogenous_arrivals: u64,
    /// Share of post-warmup usual arrivals routed here.
    pub arrival_fraction: f64,
    /// Mean sojourn over complete regeneration cycles; NaN without any.
    pub mean_sojourn: f64,
    /// NaN with fewer than two cycles.
    pub std_error: f64,
    /// Sojourns inside complete cycles.
    pub samples: u64,
    pub cycles: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimStats {
    pub per_cp: Vec<CpStats>,
    /// Mean sojourn over all sampled enqueued requests.
    pub overall_mean_delay: f64,
    pub overall_std_error: f64,
    /// All post-warmup arrivals, usual and exogenous.
    pub post_warmup_arrivals: u64,
    pub simulated_time: f64,
}

#[derive(Default)]
struct CycleAccumulator {
    open: Option<(f64, u64)>,
    sum_y: f64,
    sum_n: u64,
    sum_yy: f64,
    sum_yn: f64,
    sum_nn: f64,
    cycles: u64,
}

impl CycleAccumulator {
    fn regenerate(&mut self) {
        if let Some((y, n)) = self.open.take() {
            let nf = n as f64;
            self.sum_y += y;
            self.sum_n += n;
            self.sum_yy += y * y;
            self.sum_yn += y * nf;
            self.sum_nn += nf * nf;
            self.cycles += 1;
        }
        self.open = Some((0.0, 0));
    }

    fn record(&mut self, sojourn: f64) {
        if let Some((y, n)) = self.open.as_mut() {
            *y += sojourn;
            *n += 1;
        }
    }

    fn estimate(&self) -> (f64, f64) {
        if self.sum_n == 0 {
            return (f64::NAN, f64::NAN);
        }
        let mean = self.sum_y / self.sum_n as f64;
        if self.cycles < 2 {
            return (mean, f64::NAN);
        }
        let k = self.cycles as f64;
        let ss = (self.sum_yy - 2.0 * mean * self.sum_yn + mean * mean * self.sum_nn).max(0.0);
        let var_z = ss / (k - 1.0);
        let n_bar = self.sum_n as f64 / k;
        (mean, (var_z / k).sqrt() / n_bar)
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Runs the queues at the split in `flows`. Deterministic given `config`.
pub fn simulate(
    params: &MarketParams,
    flows: &EquilibriumFlows,
    config: &SimConfig,
) -> Result<SimStats> {
    config.validate()?;
    let n = flows.num_cps();
    if params.num_cps() != n {
        return Err(Error::precondition(
            "flows and market disagree on the number of CPs",
        ));
    }
    if params.exogenous_mode != flows.mode {
        return Err(Error::precondition(
            "flows were solved under a different exogenous mode",
        ));
    }
    let service = flows.service_rates();
    let queued = flows.enqueued_rates();
    for i in 0..n {
        if queued[i] >= service[i] {
            return Err(Error::UnstableQueue {
                cp: i + 1,
                load: queued[i],
                capacity: service[i],
            });
        }
    }
    let congesting = flows.mode == ExogenousMode::Congesting;

    // Classes 0..n are usual traffic, n..2n exogenous.
    let weights: Vec<f64> = flows
        .rates
        .iter()
        .cloned()
        .chain(
            flows
                .effective_rates
                .iter()
                .zip(&flows.rates)
                .map(|(e, r)| (e - r).max(0.0)),
        )
        .collect();
    let total: f64 = weights.iter().sum();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cumulative.push(acc);
    }

    let inter =
        Exp::new(total).map_err(|e| Error::precondition(format!("arrival rate {total}: {e}")))?;
    let services = service
        .iter()
        .map(|&m| Exp::new(m).map_err(|e| Error::precondition(format!("service rate {m}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut arrival_rng = stream(config.seed, 0);
    let mut service_rng: Vec<ChaCha8Rng> =
        (0..n).map(|i| stream(config.seed, 1 + i as u64)).collect();

    let warmup = config.warmup_arrivals();
    let mut departure = vec![0.0_f64; n];
    let mut usual = vec![0u64; n];
    let mut exogenous = vec![0u64; n];
    let mut cycles: Vec<CycleAccumulator> = (0..n).map(|_| CycleAccumulator::default()).collect();
    let mut t = 0.0;

    for k in 0..config.horizon {
        t += inter.sample(&mut arrival_rng);
        let u: f64 = arrival_rng.random();
        let class = cumulative.iter().position(|&c| u < c).unwrap_or_else(|| {
            // u within rounding of 1: the last class with positive weight.
            weights
                .iter()
                .rposition(|&w| w > 0.0)
                .expect("positive total rate")
        });
        let (cp, is_exogenous) = if class < n {
            (class, false)
        } else {
            (class - n, true)
        };
        let counted = k >= warmup;
        if counted {
            if is_exogenous {
                exogenous[cp] += 1;
            } else {
                usual[cp] += 1;
            }
        }
        if is_exogenous && !congesting {
            continue;
        }

        let s = services[cp].sample(&mut service_rng[cp]);
        let idle = t >= departure[cp];
        let start = if idle { t } else { departure[cp] };
        departure[cp] = start + s;
        if counted {
            if idle {
                cycles[cp].regenerate();
            }
            cycles[cp].record(departure[cp] - t);
        }
    }
    for c in cycles.iter_mut() {
        c.open = None;
    }

    let usual_total: u64 = usual.iter().sum();
    let per_cp: Vec<CpStats> = (0..n)
        .map(|i| {
            let (mean, se) = cycles[i].estimate();
            CpStats {
                arrivals: usual[i],
                exogenous_arrivals: exogenous[i],
                arrival_fraction: if usual_total > 0 {
                    usual[i] as f64 / usual_total as f64
                } else {
                    f64::NAN
                },
                mean_sojourn: mean,
                std_error: se,
                samples: cycles[i].sum_n,
                cycles: cycles[i].cycles,
            }
        })
        .collect();

    let (overall_mean_delay, overall_std_error) = overall(&per_cp);
    Ok(SimStats {
        per_cp,
        overall_mean_delay,
        overall_std_error,
        post_warmup_arrivals: config.horizon - warmup.min(config.horizon),
        simulated_time: t,
    })
}

// Sample-weighted mean of the per-CP means; the variance adds the per-CP
// errors and the multinomial noise of the weights.
fn overall(per_cp: &[CpStats]) -> (f64, f64) {
    let n: u64 = per_cp.iter().map(|c| c.samples).sum();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let active = || per_cp.iter().filter(|c| c.samples > 0);
    let mean: f64 = active()
        .map(|c| c.samples as f64 / nf * c.mean_sojourn)
        .sum();
    let var: f64 = active()
        .map(|c| {
            let w = c.samples as f64 / nf;
            w * w * c.std_error * c.std_error + w * (c.mean_sojourn - mean).powi(2) / nf
        })
        .sum();
    (mean, var.sqrt())
}

/// Independent runs at consecutive seeds `config.seed, config.seed + 1, …`.
pub fn simulate_seeds(
    params: &MarketParams,
    flows: &EquilibriumFlows,
    config: &SimConfig,
    runs: usize,
    exec: Execution,
) -> Result<Vec<SimStats>> {
    exec.map_range(runs, |r| {
        simulate(
            params,
            flows,
            &SimConfig {
                seed: config.seed.wrapping_add(r as u64),
                ..*config
            },
        )
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CpComparison {
    /// Whether the CP receives queued traffic at all.
    pub active: bool,
    pub theory: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoryComparison {
    pub per_cp: Vec<CpComparison>,
    pub overall: CpComparison,
    pub z_threshold: f64,
    pub passed: bool,
}

pub fn compare_to_theory(stats: &SimStats, flows: &EquilibriumFlows) -> TheoryComparison {
    compare_to_theory_at(stats, flows, DEFAULT_Z_THRESHOLD)
}

/// z-scores of simulated against analytic sojourns. NaN scores fail.
pub fn compare_to_theory_at(
    stats: &SimStats,
    flows: &EquilibriumFlows,
    z_threshold: f64,
) -> TheoryComparison {
    let z = |emp: f64, th: f64, se: f64| if emp == th { 0.0 } else { (emp - th) / se };
    let queued = flows.enqueued_rates();
    let per_cp: Vec<CpComparison> = stats
        .per_cp
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let theory = flows.sojourn(i);
            CpComparison {
                active: queued[i] > 0.0,
                theory,
                empirical: s.mean_sojourn,
                std_error: s.std_error,
                z: z(s.mean_sojourn, theory, s.std_error),
            }
        })
        .collect();
    let theory = mean_delay_of(flows);
    let overall = CpComparison {
        active: true,
        theory,
        empirical: stats.overall_mean_delay,
        std_error: stats.overall_std_error,
        z: z(stats.overall_mean_delay, theory, stats.overall_std_error),
    };
    let ok = |c: &CpComparison| !c.active || c.z.abs() <= z_threshold;
    let passed = per_cp.iter().all(ok) && ok(&overall);
    TheoryComparison {
        per_cp,
        overall,
        z_threshold,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SponsorshipProfile;
    use crate::wardrop::solve_wardrop;

    fn moderate() -> (MarketParams, EquilibriumFlows) {
        let p = MarketParams::new([6.0, 8.0], 10.0).with_access_price(0.5);
        let f = solve_wardrop(&p, &SponsorshipProfile::pair(0.0, 1.0).unwrap()).unwrap();
        (p, f)
    }

    #[test]
    fn single_queue_textbook_mean() {
        // One busy CP and one that never receives traffic.
        let p = MarketParams::new([2.0, 1.0], 1.0);
        let f = EquilibriumFlows {
            rates: vec![1.0, 0.0],
            alpha: 1.0,
            effective_rates: vec![1.0, 0.0],
            total_effective: 1.0,
            capacities: vec![2.0, 1.0],
            prices: vec![0.0, 0.0],
            mode: ExogenousMode::NonCongesting,
        };
        let s = simulate(
            &p,
            &f,
            &SimConfig {
                horizon: 1_000_000,
                seed: 11,
                warmup_fraction: 0.1,
            },
        )
        .unwrap();
        let c = &s.per_cp[0];
        assert!(((c.mean_sojourn - 1.0) / c.std_error).abs() < 3.0, "{c:?}");
        assert_eq!(s.per_cp[1].arrivals, 0);
        assert!(compare_to_theory(&s, &f).passed);
    }

    #[test]
    fn deterministic_given_seed() {
        let (p, f) = moderate();
        let cfg = SimConfig {
            horizon: 20_000,
            seed: 5,
            warmup_fraction: 0.1,
        };
        assert_eq!(
            simulate(&p, &f, &cfg).unwrap(),
            simulate(&p, &f, &cfg).unwrap()
        );
        let other = SimConfig { seed: 6, ..cfg };
        assert_ne!(
            simulate(&p, &f, &cfg).unwrap(),
            simulate(&p, &f, &other).unwrap()
        );
    }

    #[test]
    fn counts_cover_post_warmup_horizon() {
        let (p, f) = moderate();
        let cfg = SimConfig {
            horizon: 10_000,
            seed: 3,
            warmup_fraction: 0.25,
        };
        let s = simulate(&p, &f, &cfg).unwrap();
        let sum: u64 = s
            .per_cp
            .iter()
            .map(|c| c.arrivals + c.exogenous_arrivals)
            .sum();
        assert_eq!(sum, 7_500);
        assert_eq!(s.post_warmup_arrivals, 7_500);
        let fsum: f64 = s.per_cp.iter().map(|c| c.arrival_fraction).sum();
        assert!((fsum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unstable_split_is_rejected() {
        let (p, mut f) = moderate();
        f.rates[0] = 6.0;
        assert!(matches!(
            simulate(&p, &f, &SimConfig::default()),
            Err(Error::UnstableQueue { cp: 1, .. })
        ));
    }

    #[test]
    fn bad_config_is_rejected() {
        let (p, f) = moderate();
        let cfg = SimConfig {
            warmup_fraction: 1.0,
            ..SimConfig::default()
        };
        assert!(matches!(simulate(&p, &f, &cfg), Err(Error::Config(_))));
        let cfg = SimConfig {
            horizon: 0,
            ..SimConfig::default()
        };
        assert!(matches!(simulate(&p, &f, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn perfect_stats_score_zero() {
        let (_, f) = moderate();
        let stats = SimStats {
            per_cp: (0..2)
                .map(|i| CpStats {
                    arrivals: 1,
                    exogenous_arrivals: 0,
                    arrival_fraction: f.rates[i] / 10.0,
                    mean_sojourn: f.sojourn(i),
                    std_error: 0.01,
                    samples: 1,
                    cycles: 2,
                })
                .collect(),
            overall_mean_delay: mean_delay_of(&f),
            overall_std_error: 0.01,
            post_warmup_arrivals: 2,
            simulated_time: 1.0,
        };
        let cmp = compare_to_theory(&stats, &f);
        assert!(cmp.passed);
        assert!(cmp.per_cp.iter().all(|c| c.z == 0.0) && cmp.overall.z == 0.0);
    }

    #[test]
    fn faster_servers_fail_against_original_theory() {
        let (p, f) = moderate();
        let fast = MarketParams {
            capacities: vec![12.0, 16.0],
            ..p
        };
        let mut ff = f.clone();
        ff.capacities = vec![12.0, 16.0];
        let s = simulate(
            &fast,
            &ff,
            &SimConfig {
                horizon: 200_000,
                seed: 2,
                warmup_fraction: 0.1,
            },
        )
        .unwrap();
        let cmp = compare_to_theory(&s, &f);
        assert!(!cmp.passed);
        assert!(cmp.per_cp.iter().all(|c| c.z < -3.0));
    }

    #[test]
    fn congesting_exogenous_traffic_is_queued() {
        let p = MarketParams::new([6.0, 8.0], 10.0)
            .with_access_price(0.5)
            .with_exogenous(1.0, ExogenousMode::Congesting);
        let f = solve_wardrop(&p, &SponsorshipProfile::pair(0.0, 1.0).unwrap()).unwrap();
        let s = simulate(
            &p,
            &f,
            &SimConfig {
                horizon: 400_000,
                seed: 9,
                warmup_fraction: 0.1,
            },
        )
        .unwrap();
        assert!(s.per_cp[0].exogenous_arrivals > 0);
        assert_eq!(s.per_cp[1].exogenous_arrivals, 0);
        let cmp = compare_to_theory(&s, &f);
        assert!(cmp.passed, "{cmp:?}");
    }

    #[test]
    fn noncongesting_exogenous_traffic_is_only_counted() {
        let p = MarketParams::new([6.0, 8.0], 10.0)
            .with_access_price(0.5)
            .with_exogenous(3.0, ExogenousMode::NonCongesting);
        let f = solve_wardrop(&p, &SponsorshipProfile::pair(0.0, 1.0).unwrap()).unwrap();
        let s = simulate(
            &p,
            &f,
            &SimConfig {
                horizon: 400_000,
                seed: 4,
                warmup_fraction: 0.1,
            },
        )
        .unwrap();
        let exo = s.per_cp[0].exogenous_arrivals as f64 / s.post_warmup_arrivals as f64;
        assert!((exo - 3.0 / 13.0).abs() < 0.01);
        // A single run: 5 SE keeps the false-alarm rate below 1e-6.
        let cmp = compare_to_theory_at(&s, &f, 5.0);
        assert!(cmp.passed, "{cmp:?}");
    }
}
