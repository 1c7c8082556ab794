//! Subcommand implementations. Each returns a [`Table`] whose rows are in a
//! fixed order regardless of how the work was scheduled.

use bdharq_core::analytics::recovery_rate_gaussian_with;
use bdharq_core::planner::optimize_with;
use bdharq_core::{
    derive_seed, enumerate_grid, estimate_recovery_rate, eval_qoe, loss_moments, plan_dd, plan_dr,
    recovery_rate_exact, recovery_rate_gaussian, std_normal_cdf, NetworkState, OptimResult, SimMode,
    SimReport, TransmissionPlan, XiSource,
};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::table::{Cell, Table};

/// Largest tolerated `|xi_exact - xi_gauss|` on the validation grid.
pub const GAUSS_GAP_BOUND: f64 = 0.08;
/// MC estimates must sit within this many Wilson half-widths of the exact rate...
pub const MC_HALF_WIDTHS: f64 = 3.0;
/// ...on at least this fraction of grid points.
pub const MC_AGREEMENT_MIN: f64 = 0.99;

type Result<T> = std::result::Result<T, CliError>;

fn base_table(command: &str, cfg: &ExperimentConfig, columns: &[&'static str]) -> Table {
    let mut t = Table::new(columns);
    t.meta("command", command)
        .meta("config_hash", cfg.hash())
        .meta("seed", cfg.sweep.seed);
    t
}

fn network(cfg: &ExperimentConfig, p: f64) -> Result<NetworkState> {
    Ok(NetworkState::new(p, cfg.network.t_l)?)
}

/// One analytic + Monte Carlo evaluation of a sweep point.
struct PointEval {
    xi_gauss: f64,
    xi_exact: f64,
    mc: SimReport,
}

fn eval_point(cfg: &ExperimentConfig, net: &NetworkState, plan: &TransmissionPlan, index: usize) -> Result<PointEval> {
    let sys = &cfg.system;
    Ok(PointEval {
        xi_gauss: recovery_rate_gaussian(net, sys, plan)?,
        xi_exact: recovery_rate_exact(net, sys, plan)?,
        mc: estimate_recovery_rate(
            SimMode::Slot,
            net,
            sys,
            plan,
            cfg.sweep.trials,
            derive_seed(cfg.sweep.seed, index as u64),
        )?,
    })
}

pub fn cmd_analyze(cfg: &ExperimentConfig, plan: &TransmissionPlan) -> Result<Table> {
    let net = cfg.network;
    let sys = &cfg.system;
    let fec = plan.validate(sys)?;
    let mom = loss_moments(&net, sys, plan)?;
    let xi_gauss = recovery_rate_gaussian(&net, sys, plan)?;
    let xi_exact = recovery_rate_exact(&net, sys, plan)?;
    let qoe = eval_qoe(plan.d * net.t_l, plan.r, xi_gauss, &cfg.qoe)?;
    let mut t = base_table(
        "analyze",
        cfg,
        &["p", "t_l", "r", "d", "fec_packets", "mu_a", "var_a", "xi_gauss", "xi_exact", "q_d", "q_r", "q_xi", "q"],
    );
    t.push(vec![
        net.p.into(),
        net.t_l.into(),
        plan.r.into(),
        plan.d.into(),
        fec.into(),
        mom.mu_a.into(),
        mom.var_a.into(),
        xi_gauss.into(),
        xi_exact.into(),
        qoe.q_d.into(),
        qoe.q_r.into(),
        qoe.q_xi.into(),
        qoe.q.into(),
    ]);
    Ok(t)
}

/// Full grid of the joint search, with the chosen point flagged.
pub fn cmd_optimize(cfg: &ExperimentConfig, source: XiSource) -> Result<Table> {
    let res = optimize_with(&cfg.network, &cfg.system, &cfg.qoe, source)?;
    let mut t = base_table("optimize", cfg, &["p", "r", "d", "xi", "q_d", "q_r", "q_xi", "q", "best"]);
    t.meta("xi_source", format!("{source:?}").to_lowercase());
    for row in &res.grid {
        t.push(vec![
            cfg.network.p.into(),
            row.plan.r.into(),
            row.plan.d.into(),
            row.xi.into(),
            row.qoe.q_d.into(),
            row.qoe.q_r.into(),
            row.qoe.q_xi.into(),
            row.qoe.q.into(),
            (row.plan == res.best_plan).into(),
        ]);
    }
    Ok(t)
}

pub fn cmd_simulate(cfg: &ExperimentConfig, plan: &TransmissionPlan, mode: SimMode) -> Result<Table> {
    let net = cfg.network;
    let sys = &cfg.system;
    let rep = estimate_recovery_rate(mode, &net, sys, plan, cfg.sweep.trials, cfg.sweep.seed)?;
    let xi_gauss = recovery_rate_gaussian(&net, sys, plan)?;
    let xi_exact = recovery_rate_exact(&net, sys, plan)?;
    let mut t = base_table(
        "simulate",
        cfg,
        &["mode", "p", "r", "d", "trials", "recoveries", "xi_hat", "ci_low", "ci_high", "xi_gauss", "xi_exact"],
    );
    t.push(vec![
        mode.to_string().as_str().into(),
        net.p.into(),
        plan.r.into(),
        plan.d.into(),
        rep.trials.into(),
        rep.recoveries.into(),
        rep.xi_hat.into(),
        rep.ci_low.into(),
        rep.ci_high.into(),
        xi_gauss.into(),
        xi_exact.into(),
    ]);
    Ok(t)
}

fn eval_points(cfg: &ExperimentConfig, points: &[(NetworkState, TransmissionPlan)]) -> Result<Vec<PointEval>> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, (net, plan))| eval_point(cfg, net, plan, i))
        .collect()
}

/// Recovery rate against redundancy, one curve per configured delay, at the
/// configured network loss rate.
pub fn cmd_sweep_recovery_vs_redundancy(cfg: &ExperimentConfig) -> Result<Table> {
    let net = network(cfg, cfg.network.p)?;
    let points: Vec<_> = cfg
        .sweep
        .d_values
        .iter()
        .flat_map(|&d| cfg.sweep.r_values.iter().map(move |&r| (net, TransmissionPlan::new(r, d))))
        .collect();
    let evals = eval_points(cfg, &points)?;
    let mut t = base_table(
        "sweep-fig2",
        cfg,
        &["d", "r", "xi_gauss", "xi_exact", "xi_mc", "ci_low", "ci_high"],
    );
    t.meta("p", net.p).meta("trials", cfg.sweep.trials);
    for ((_, plan), e) in points.iter().zip(&evals) {
        t.push(vec![
            plan.d.into(),
            plan.r.into(),
            e.xi_gauss.into(),
            e.xi_exact.into(),
            e.mc.xi_hat.into(),
            e.mc.ci_low.into(),
            e.mc.ci_high.into(),
        ]);
    }
    Ok(t)
}

/// Recovery rate against loss rate, one curve per configured redundancy, at
/// the fixed delay `sweep.fig3_d`.
pub fn cmd_sweep_recovery_vs_loss(cfg: &ExperimentConfig) -> Result<Table> {
    let d = cfg.sweep.fig3_d;
    let points = cfg
        .sweep
        .r_values
        .iter()
        .flat_map(|&r| {
            cfg.sweep
                .p_values
                .iter()
                .map(move |&p| network(cfg, p).map(|net| (net, TransmissionPlan::new(r, d))))
        })
        .collect::<Result<Vec<_>>>()?;
    let evals = eval_points(cfg, &points)?;
    let mut t = base_table(
        "sweep-fig3",
        cfg,
        &["r", "p", "xi_gauss", "xi_exact", "xi_mc", "ci_low", "ci_high"],
    );
    t.meta("d", d).meta("trials", cfg.sweep.trials);
    for ((net, plan), e) in points.iter().zip(&evals) {
        t.push(vec![
            plan.r.into(),
            net.p.into(),
            e.xi_gauss.into(),
            e.xi_exact.into(),
            e.mc.xi_hat.into(),
            e.mc.ci_low.into(),
            e.mc.ci_high.into(),
        ]);
    }
    Ok(t)
}

/// Chosen plan and QoE of the joint search and both baselines at each loss rate.
pub fn cmd_sweep_qoe_methods(cfg: &ExperimentConfig) -> Result<Table> {
    let b = cfg.baselines;
    let per_p = cfg
        .sweep
        .p_values
        .par_iter()
        .map(|&p| {
            let net = network(cfg, p)?;
            Ok([
                ("bd-harq", optimize_with(&net, &cfg.system, &cfg.qoe, XiSource::Gaussian)?),
                ("dr", plan_dr(&net, &cfg.system, &cfg.qoe, b.fixed_d)?),
                ("dd", plan_dd(&net, &cfg.system, &cfg.qoe, b.fixed_r)?),
            ])
        })
        .collect::<Result<Vec<[(&str, OptimResult); 3]>>>()?;
    let mut t = base_table(
        "sweep-qoe",
        cfg,
        &["method", "p", "r_chosen", "d_chosen", "xi", "q_d", "q_r", "q_xi", "q"],
    );
    t.meta("baseline_dr_fixed_d", format!("{} (reconstruction choice)", b.fixed_d))
        .meta("baseline_dd_fixed_r", format!("{} (reconstruction choice)", b.fixed_r));
    for (&p, methods) in cfg.sweep.p_values.iter().zip(&per_p) {
        for (name, res) in methods {
            let q = res.best_qoe;
            t.push(vec![
                (*name).into(),
                p.into(),
                res.best_plan.r.into(),
                res.best_plan.d.into(),
                res.best_xi.into(),
                q.q_d.into(),
                q.q_r.into(),
                q.q_xi.into(),
                q.q.into(),
            ]);
        }
    }
    Ok(t)
}

/// A grid point identified for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub p: f64,
    pub r: f64,
    pub d: f64,
}

impl std::fmt::Display for GridPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "p={} r={} d={}", self.p, self.r, self.d)
    }
}

#[derive(Debug, Clone)]
pub struct Validation {
    pub table: Table,
    pub max_gauss_gap: f64,
    pub worst_gauss: Option<GridPoint>,
    /// Fraction of points whose MC estimate lies within the allowed half-widths.
    pub mc_agreement: f64,
    /// Point with the largest MC deviation, in half-widths.
    pub worst_mc: Option<(GridPoint, f64)>,
}

impl Validation {
    pub fn gauss_ok(&self) -> bool {
        self.max_gauss_gap <= GAUSS_GAP_BOUND
    }

    pub fn mc_ok(&self) -> bool {
        self.mc_agreement >= MC_AGREEMENT_MIN
    }

    pub fn passed(&self) -> bool {
        self.gauss_ok() && self.mc_ok()
    }

    pub fn summary(&self) -> Vec<String> {
        let show = |p: Option<GridPoint>| p.map_or_else(|| "-".to_owned(), |p| p.to_string());
        vec![
            format!(
                "max |xi_exact - xi_gauss| = {} at {} (bound {GAUSS_GAP_BOUND}): {}",
                self.max_gauss_gap,
                show(self.worst_gauss),
                if self.gauss_ok() { "ok" } else { "FAIL" }
            ),
            format!(
                "slot MC within {MC_HALF_WIDTHS} Wilson half-widths of exact on {:.4} of points (need {MC_AGREEMENT_MIN}); worst {} at {:.3} half-widths: {}",
                self.mc_agreement,
                show(self.worst_mc.map(|w| w.0)),
                self.worst_mc.map_or(0.0, |w| w.1),
                if self.mc_ok() { "ok" } else { "FAIL" }
            ),
        ]
    }
}

pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<Validation> {
    cmd_validate_with(cfg, std_normal_cdf)
}

/// [`cmd_validate`] with an injectable normal CDF, used for negative controls.
pub fn cmd_validate_with<F>(cfg: &ExperimentConfig, cdf: F) -> Result<Validation>
where
    F: Fn(f64) -> f64 + Sync,
{
    let grid = enumerate_grid(&cfg.system);
    let points = cfg
        .sweep
        .p_values
        .iter()
        .flat_map(|&p| grid.iter().map(move |plan| network(cfg, p).map(|net| (net, *plan))))
        .collect::<Result<Vec<_>>>()?;
    let evals = points
        .par_iter()
        .enumerate()
        .map(|(i, (net, plan))| {
            let mut e = eval_point(cfg, net, plan, i)?;
            e.xi_gauss = recovery_rate_gaussian_with(net, &cfg.system, plan, &cdf)?;
            Ok(e)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut t = base_table(
        "validate",
        cfg,
        &["p", "r", "d", "xi_exact", "xi_gauss", "gauss_gap", "xi_mc", "ci_low", "ci_high", "mc_half_widths", "mc_ok"],
    );
    t.meta("trials", cfg.sweep.trials)
        .meta("gauss_gap_bound", GAUSS_GAP_BOUND)
        .meta("mc_half_widths_bound", MC_HALF_WIDTHS);

    let mut max_gauss_gap = 0.0;
    let mut worst_gauss = None;
    let mut worst_mc: Option<(GridPoint, f64)> = None;
    let mut agree = 0usize;
    for ((net, plan), e) in points.iter().zip(&evals) {
        let point = GridPoint { p: net.p, r: plan.r, d: plan.d };
        let gap = (e.xi_exact - e.xi_gauss).abs();
        if gap > max_gauss_gap || worst_gauss.is_none() {
            max_gauss_gap = gap;
            worst_gauss = Some(point);
        }
        let half = e.mc.half_width();
        let dev = (e.mc.xi_hat - e.xi_exact).abs();
        let in_half_widths = if half > 0.0 { dev / half } else if dev == 0.0 { 0.0 } else { f64::INFINITY };
        let ok = in_half_widths <= MC_HALF_WIDTHS;
        agree += usize::from(ok);
        if worst_mc.map_or(true, |(_, w)| in_half_widths > w) {
            worst_mc = Some((point, in_half_widths));
        }
        t.push(vec![
            net.p.into(),
            plan.r.into(),
            plan.d.into(),
            e.xi_exact.into(),
            e.xi_gauss.into(),
            gap.into(),
            e.mc.xi_hat.into(),
            e.mc.ci_low.into(),
            e.mc.ci_high.into(),
            in_half_widths.into(),
            Cell::Bool(ok),
        ]);
    }
    let mc_agreement = if points.is_empty() { 1.0 } else { agree as f64 / points.len() as f64 };
    Ok(Validation { table: t, max_gauss_gap, worst_gauss, mc_agreement, worst_mc })
}
