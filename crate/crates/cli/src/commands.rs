use zerorate::delay::{
    default_price_grid, delay_threshold_price, delay_vs_price_curve, mean_delay_of,
};
use zerorate::game::continuous::{
    utilities_of, UtilityGrid, BEST_RESPONSE_TOL, DEFAULT_JUMP, PNE_EPSILON,
};
use zerorate::grid::logspace;
use zerorate::model::ORDERED;
use zerorate::sim::{compare_to_theory, simulate_seeds, DEFAULT_Z_THRESHOLD};
use zerorate::{
    classify_pne, classify_pne_multi, solve_wardrop, Assumption, Error, Execution, Result,
};

use crate::config::{set_duopoly_axis, set_market_axis, Scenario, DUOPOLY_AXES, MARKET_AXES};
use crate::output::{Plot, Series, Table};

/// What a command produced. `failure` is reported after the table is
/// written, so a failing `validate` still shows every check.
pub struct Report {
    pub table: Table,
    pub plot: Option<Plot>,
    pub notes: Vec<String>,
    pub failure: Option<Error>,
}

impl Report {
    fn new(table: Table) -> Self {
        Report {
            table,
            plot: None,
            notes: Vec::new(),
            failure: None,
        }
    }
}

pub fn validate(s: &Scenario) -> Result<Report> {
    let params = s.market()?;
    let report = params.validate();
    let mut table = Table::new(&["assumption", "ok", "message"]);
    for a in Assumption::ALL {
        let messages: Vec<&str> = report
            .violations
            .iter()
            .filter(|v| v.assumption == a)
            .map(|v| v.message.as_str())
            .collect();
        table.push(vec![
            a.id().into(),
            messages.is_empty().into(),
            messages.join("; ").into(),
        ]);
    }
    let mut out = Report::new(table);
    if report.passed() {
        out.notes.push("all assumptions hold".into());
    } else {
        out.failure = Some(Error::AssumptionViolation(report));
    }
    Ok(out)
}

pub fn equilibrium(s: &Scenario) -> Result<Report> {
    let params = s.market()?;
    let profile = s.profile()?;
    let flows = solve_wardrop(&params, &profile)?;
    let utilities = utilities_of(&params, &profile, &flows);
    let mut table = Table::new(&[
        "cp",
        "gamma",
        "price",
        "rate",
        "effective_rate",
        "sojourn",
        "cost",
        "alpha",
        "utility",
    ]);
    for i in 0..flows.num_cps() {
        table.push(vec![
            (i + 1).into(),
            profile.gammas()[i].into(),
            flows.prices[i].into(),
            flows.rates[i].into(),
            flows.effective_rates[i].into(),
            if flows.rates[i] > 0.0 {
                flows.sojourn(i)
            } else {
                f64::NAN
            }
            .into(),
            flows.cost(i).into(),
            flows.alpha.into(),
            utilities[i].into(),
        ]);
    }
    let mut out = Report::new(table);
    out.notes
        .push(format!("equilibrium cost {:.10}", flows.alpha));
    out.notes
        .push(format!("mean delay {:.10}", mean_delay_of(&flows)));
    out.notes
        .push(format!("wardrop residual {:.3e}", flows.wardrop_residual()));
    Ok(out)
}

pub fn delay_sweep(s: &Scenario) -> Result<Report> {
    let params = s.market()?;
    let profile = s.profile()?;
    let prices = match s.sweep_points(&["c"])? {
        Some((_, points)) => points,
        None => match s.grid_override {
            Some(n) => logspace(1e-4, 10.0, n),
            None => default_price_grid(),
        },
    };
    let curve = delay_vs_price_curve(&params, &profile, &prices)?;
    let mut table = Table::new(&["c", "delay", "neutral", "excess"]);
    for (&c, &d) in curve.prices.iter().zip(&curve.delays) {
        table.push(vec![
            c.into(),
            d.into(),
            curve.neutral.into(),
            (d - curve.neutral).into(),
        ]);
    }
    let mut out = Report::new(table);
    match curve.threshold_price {
        Some(c) => out.notes.push(format!(
            "delay exceeds the neutral level from c = {c:.10e} (bracketed)"
        )),
        None => out
            .notes
            .push("delay never crosses the neutral level from below on this grid".into()),
    }
    if profile.len() == 2 && params.validate().require(ORDERED).is_ok() {
        let g = profile.gammas();
        match delay_threshold_price(&params, g[0], g[1])? {
            Some(c) => out.notes.push(format!("analytic threshold price {c:.10e}")),
            None => out
                .notes
                .push("analytic threshold: none, delay never falls below neutral".into()),
        }
    }
    out.plot = Some(Plot {
        title: "Mean delay against access price".into(),
        x_label: "c".into(),
        y_label: "mean delay".into(),
        log_x: prices.first().is_some_and(|&c| c > 0.0),
        series: vec![
            Series {
                name: "delay".into(),
                points: curve
                    .prices
                    .iter()
                    .cloned()
                    .zip(curve.delays.clone())
                    .collect(),
            },
            Series {
                name: "neutral".into(),
                points: curve.prices.iter().map(|&c| (c, curve.neutral)).collect(),
            },
        ],
    });
    Ok(out)
}

pub fn best_response(s: &Scenario) -> Result<Report> {
    let params = s.market()?;
    let grid = UtilityGrid::compute(&params, s.game.grid, Execution::default())?;
    let mut table = Table::new(&[
        "player",
        "opponent_gamma",
        "best_min",
        "best_max",
        "maximizers",
        "utility",
    ]);
    let mut series = Vec::new();
    let mut notes = Vec::new();
    for which in 0..2 {
        let curve = grid.best_response_curve(which, DEFAULT_JUMP);
        let mut points = Vec::new();
        for (opp, responses) in curve.opponent_gammas.iter().zip(&curve.responses) {
            let lo = responses.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = responses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let k = grid
                .gammas
                .iter()
                .position(|g| g == opp)
                .expect("opponent values come from the grid");
            let u = grid
                .response_indices(which, k, BEST_RESPONSE_TOL)
                .first()
                .map_or(f64::NAN, |&best| {
                    if which == 0 {
                        grid.utility(0, best, k)
                    } else {
                        grid.utility(1, k, best)
                    }
                });
            table.push(vec![
                (which + 1).into(),
                (*opp).into(),
                lo.into(),
                hi.into(),
                responses.len().into(),
                u.into(),
            ]);
            points.push((*opp, lo));
        }
        notes.push(format!(
            "CP{} best response jumps at opponent gamma {:?}",
            which + 1,
            curve
                .discontinuities
                .iter()
                .map(|x| (x * 1e4).round() / 1e4)
                .collect::<Vec<_>>()
        ));
        series.push(Series {
            name: format!("CP{} best response", which + 1),
            points,
        });
    }
    let pne = grid.epsilon_pne(PNE_EPSILON);
    let mut out = Report::new(table);
    out.notes = notes;
    let n = grid.size();
    out.notes.push(format!(
        "{} epsilon-equilibria on a {n}x{n} grid {:?}",
        pne.len(),
        &pne[..pne.len().min(10)]
    ));
    if grid.excluded > 0 {
        out.notes.push(format!(
            "{} grid profiles could not be solved and were skipped",
            grid.excluded
        ));
    }
    out.plot = Some(Plot {
        title: "Best responses".into(),
        x_label: "opponent gamma".into(),
        y_label: "best gamma (smallest maximiser)".into(),
        log_x: false,
        series,
    });
    Ok(out)
}

/// Runs `f` at every sweep point in parallel; errors carry the point.
fn sweep<P: Clone + Sync, R: Send>(
    base: &P,
    axis: &str,
    points: &[f64],
    set: impl Fn(&mut P, &str, f64) + Sync,
    f: impl Fn(&P) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    Execution::default()
        .map(points, |&x| {
            let mut p = base.clone();
            set(&mut p, axis, x);
            f(&p).map_err(|e| e.at(axis, x))
        })
        .into_iter()
        .collect()
}

pub fn pne_rgf(s: &Scenario) -> Result<Report> {
    let base = s.market()?;
    let (axis, points) = s
        .sweep_points(MARKET_AXES)?
        .unwrap_or_else(|| ("c".into(), vec![base.access_price]));
    let rows = sweep(&base, &axis, &points, set_market_axis, |p| {
        let rep = classify_pne(p)?;
        let range = rep.rgf_range(p);
        Ok((rep, range))
    })?;
    let mut table = Table::new(&[
        axis.as_str(),
        "a",
        "b",
        "c_lo",
        "d_hi",
        "ratio",
        "thresholds_ordered",
        "pne",
        "rgf_min",
        "rgf_max",
    ]);
    let (mut lo_pts, mut hi_pts) = (Vec::new(), Vec::new());
    for (&x, (rep, range)) in points.iter().zip(&rows) {
        let (lo, hi) = range.unwrap_or((f64::NAN, f64::NAN));
        table.push(vec![
            x.into(),
            rep.a.into(),
            rep.b.into(),
            rep.c_lo.into(),
            rep.d_hi.into(),
            rep.ratio.into(),
            rep.thresholds_ordered().into(),
            rep.pne_label().into(),
            lo.into(),
            hi.into(),
        ]);
        lo_pts.push((x, lo));
        hi_pts.push((x, hi));
    }
    let mut out = Report::new(table);
    let unordered = rows.iter().filter(|(r, _)| !r.thresholds_ordered()).count();
    if unordered > 0 {
        out.notes.push(format!(
            "{unordered} points have a > b: no (S,N) band, (S,S) and (N,N) can coexist"
        ));
    }
    out.plot = Some(Plot {
        title: "Revenue gain at equilibrium".into(),
        x_label: axis.clone(),
        y_label: "RGF".into(),
        log_x: false,
        series: vec![
            Series {
                name: "min".into(),
                points: lo_pts,
            },
            Series {
                name: "max".into(),
                points: hi_pts,
            },
        ],
    });
    Ok(out)
}

pub fn multi_isp(s: &Scenario) -> Result<Report> {
    let base = s.duopoly()?;
    let (axis, points) = s
        .sweep_points(DUOPOLY_AXES)?
        .unwrap_or_else(|| ("c1".into(), vec![base.access_prices[0]]));
    let rows = sweep(&base, &axis, &points, set_duopoly_axis, |p| {
        let rep = classify_pne_multi(p)?;
        let ranges = rep.rgf_ranges(p)?;
        Ok((rep, ranges))
    })?;
    let mut table = Table::new(&[
        axis.as_str(),
        "t_sponsor",
        "t_neutral",
        "ratio",
        "pne",
        "rgf1_min",
        "rgf1_max",
        "rgf2_min",
        "rgf2_max",
    ]);
    let mut series: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    for (&x, (rep, ranges)) in points.iter().zip(&rows) {
        let r = ranges.unwrap_or([(f64::NAN, f64::NAN); 2]);
        table.push(vec![
            x.into(),
            rep.t_sponsor.into(),
            rep.t_neutral.into(),
            rep.ratio.into(),
            rep.pne_label().into(),
            r[0].0.into(),
            r[0].1.into(),
            r[1].0.into(),
            r[1].1.into(),
        ]);
        series[0].push((x, r[0].1));
        series[1].push((x, r[1].1));
    }
    let mut out = Report::new(table);
    out.plot = Some(Plot {
        title: "ISP revenue gain at equilibrium".into(),
        x_label: axis.clone(),
        y_label: "RGF (largest over equilibria)".into(),
        log_x: false,
        series: vec![
            Series {
                name: "ISP1".into(),
                points: series[0].clone(),
            },
            Series {
                name: "ISP2".into(),
                points: series[1].clone(),
            },
        ],
    });
    Ok(out)
}

pub fn simulate(s: &Scenario) -> Result<Report> {
    let params = s.market()?;
    let profile = s.profile()?;
    let config = s.sim_config()?;
    let flows = solve_wardrop(&params, &profile)?;
    let runs = simulate_seeds(
        &params,
        &flows,
        &config,
        s.simulation.runs,
        Execution::default(),
    )?;
    let mut table = Table::new(&[
        "seed",
        "cp",
        "arrivals",
        "samples",
        "theory",
        "empirical",
        "std_error",
        "z",
        "within",
    ]);
    let mut passed = 0;
    for (r, stats) in runs.iter().enumerate() {
        let seed = config.seed.wrapping_add(r as u64);
        let cmp = compare_to_theory(stats, &flows);
        if cmp.passed {
            passed += 1;
        }
        for (i, (c, st)) in cmp.per_cp.iter().zip(&stats.per_cp).enumerate() {
            let within = !c.active || c.z.abs() <= cmp.z_threshold;
            table.push(vec![
                seed.into(),
                (i + 1).to_string().into(),
                st.arrivals.into(),
                st.samples.into(),
                c.theory.into(),
                c.empirical.into(),
                c.std_error.into(),
                c.z.into(),
                within.into(),
            ]);
        }
        let samples: u64 = stats.per_cp.iter().map(|c| c.samples).sum();
        let o = &cmp.overall;
        table.push(vec![
            seed.into(),
            "all".into(),
            stats.post_warmup_arrivals.into(),
            samples.into(),
            o.theory.into(),
            o.empirical.into(),
            o.std_error.into(),
            o.z.into(),
            (o.z.abs() <= cmp.z_threshold).into(),
        ]);
    }
    let mut out = Report::new(table);
    out.notes.push(format!(
        "{passed} of {} runs within {DEFAULT_Z_THRESHOLD} standard errors everywhere",
        runs.len()
    ));
    Ok(out)
}
