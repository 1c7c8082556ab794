//! Exit criteria. Each test prints one `[PASS]`/`[FAIL]` line; run with
//! `cargo test -p bdharq-cli --test acceptance -- --nocapture --test-threads 1`
//! to see them in order.

use std::process::Command;
use std::time::{Duration, Instant};

use bdharq_cli::{cmd_validate, ExperimentConfig};
use bdharq_core::qoe::{eval_delay_score, eval_recovery_score, eval_redundancy_score};
use bdharq_core::{
    enumerate_grid, estimate_recovery_rate, optimize, plan_dd, plan_dr, recovery_rate_exact,
    recovery_rate_gaussian, NetworkState, QoeParams, SimMode, SystemParams, TransmissionPlan,
};

fn loss_rates() -> Vec<f64> {
    (1..=9).map(|i| f64::from(i) * 0.05).collect()
}

fn net(p: f64) -> NetworkState {
    NetworkState::new(p, 1.0).unwrap()
}

fn report(id: u32, name: &str, ok: bool, detail: String, elapsed: Duration, limit: Duration) {
    let in_time = elapsed < limit;
    let tag = if ok && in_time { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id}: {name}: {detail} ({elapsed:.2?}, limit {limit:?})");
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded {limit:?}: {elapsed:?}");
}

fn best_q(p: f64) -> f64 {
    optimize(&net(p), &SystemParams::default(), &QoeParams::default()).unwrap().best_qoe.q
}

#[test]
fn criterion_1_headline_qoe_low_loss() {
    let start = Instant::now();
    let q = best_q(0.05);
    report(1, "best q at p=0.05 in [0.92, 0.98]", (0.92..=0.98).contains(&q), format!("q={q}"), start.elapsed(), Duration::from_secs(1));
}

#[test]
fn criterion_2_headline_qoe_high_loss() {
    let start = Instant::now();
    let q = best_q(0.35);
    report(2, "best q at p=0.35 in [0.80, 0.86]", (0.80..=0.86).contains(&q), format!("q={q}"), start.elapsed(), Duration::from_secs(1));
}

#[test]
fn criterion_3_loss_tolerance() {
    let start = Instant::now();
    let tolerated = loss_rates().into_iter().filter(|&p| best_q(p) >= 0.85).fold(0.0, f64::max);
    report(
        3,
        "largest p with best q >= 0.85 is >= 0.30",
        tolerated >= 0.30 - 1e-12,
        format!("p={tolerated}"),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_4_oracle_equivalence() {
    let start = Instant::now();
    let sys = SystemParams::default();
    let grid = enumerate_grid(&sys);
    let mut agree = 0usize;
    let mut total = 0usize;
    for (pi, p) in [0.15, 0.35].into_iter().enumerate() {
        for (i, plan) in grid.iter().enumerate() {
            let exact = recovery_rate_exact(&net(p), &sys, plan).unwrap();
            let seed = 1_000 * pi as u64 + i as u64;
            let rep = estimate_recovery_rate(SimMode::Slot, &net(p), &sys, plan, 100_000, seed).unwrap();
            total += 1;
            agree += usize::from((rep.xi_hat - exact).abs() <= 3.0 * rep.half_width());
        }
    }
    let frac = agree as f64 / total as f64;
    report(
        4,
        "slot MC within 3 Wilson half-widths of exact on >= 99% of grid",
        total == 2 * 189 && frac >= 0.99,
        format!("{agree}/{total} = {frac:.4}"),
        start.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_5_gaussian_approximation_quality() {
    let start = Instant::now();
    let sys = SystemParams::default();
    let grid = enumerate_grid(&sys);
    let mut worst = (0.0, 0.0, TransmissionPlan::new(0.0, 0.0));
    for p in loss_rates() {
        for plan in &grid {
            let gap = (recovery_rate_exact(&net(p), &sys, plan).unwrap()
                - recovery_rate_gaussian(&net(p), &sys, plan).unwrap())
            .abs();
            if gap > worst.0 {
                worst = (gap, p, *plan);
            }
        }
    }
    let (gap, p, plan) = worst;
    report(
        5,
        "max |xi_exact - xi_gauss| <= 0.08 over default grid",
        gap <= 0.08,
        format!("max gap {gap} at p={p} r={} d={}", plan.r, plan.d),
        start.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_6_monotonicity() {
    let start = Instant::now();
    let sys = SystemParams::default();
    let qp = QoeParams::default();
    let ps = loss_rates();
    let rs: Vec<f64> = (0..=8).map(|k| f64::from(k) / 16.0).collect();
    let ds: Vec<f64> = (0..=20).map(|i| f64::from(i) * 0.5).collect();
    let xi = |pi: usize, ri: usize, di: usize| {
        recovery_rate_gaussian(&net(ps[pi]), &sys, &TransmissionPlan::new(rs[ri], ds[di])).unwrap()
    };
    let mut violations = 0usize;
    for pi in 0..ps.len() {
        for ri in 0..rs.len() {
            for di in 0..ds.len() {
                let here = xi(pi, ri, di);
                violations += usize::from(ri + 1 < rs.len() && xi(pi, ri + 1, di) < here);
                violations += usize::from(di + 1 < ds.len() && xi(pi, ri, di + 1) < here);
                violations += usize::from(pi + 1 < ps.len() && xi(pi + 1, ri, di) > here);
            }
        }
    }
    let unit = |v: f64| (0.0..=1.0).contains(&v);
    let mut score_violations = 0usize;
    let mut prev = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=40_000 {
        let x = f64::from(i) * 1e-3;
        let d = eval_delay_score(x, &qp).unwrap();
        score_violations += usize::from(!unit(d) || d > prev.0);
        prev.0 = d;
        if x <= 1.0 {
            let r = eval_redundancy_score(x, &qp).unwrap();
            let c = eval_recovery_score(x, &qp).unwrap();
            score_violations += usize::from(!unit(r) || r > prev.1);
            score_violations += usize::from(!unit(c) || c < prev.2);
            prev.1 = r;
            prev.2 = c;
        }
    }
    report(
        6,
        "analytic xi and QoE scores monotone and bounded",
        violations == 0 && score_violations == 0,
        format!("{violations} grid violations, {score_violations} score violations"),
        start.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_7_dominance() {
    let start = Instant::now();
    let sys = SystemParams::default();
    let qp = QoeParams::default();
    let mut violations = Vec::new();
    for p in loss_rates() {
        let best = optimize(&net(p), &sys, &qp).unwrap().best_qoe.q;
        for fixed_d in (0..=20).map(|i| f64::from(i) * 0.5) {
            if plan_dr(&net(p), &sys, &qp, fixed_d).unwrap().best_qoe.q > best {
                violations.push(format!("DR p={p} d={fixed_d}"));
            }
        }
        for fixed_r in (0..=8).map(|k| f64::from(k) / 16.0) {
            if plan_dd(&net(p), &sys, &qp, fixed_r).unwrap().best_qoe.q > best {
                violations.push(format!("DD p={p} r={fixed_r}"));
            }
        }
    }
    report(
        7,
        "BD-HARQ best q >= DR and DD for every fixed parameter",
        violations.is_empty(),
        format!("{} violations {violations:?}", violations.len()),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_bdharq")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

#[test]
fn criterion_8_determinism() {
    let start = Instant::now();
    let mut identical = true;
    for cmd in [
        vec!["sweep-qoe"],
        vec!["simulate", "--trials", "200000", "--mode", "slot"],
        vec!["simulate", "--trials", "200000", "--mode", "timeline", "--d", "1.5"],
    ] {
        let mut runs = Vec::new();
        for threads in ["1", "1", "4"] {
            let mut args = cmd.clone();
            args.extend(["--seed", "7", "--threads", threads]);
            runs.push(run_cli(&args));
        }
        identical &= runs.windows(2).all(|w| w[0] == w[1]);
    }
    // Library-level sweep with MC columns as well.
    let cfg = ExperimentConfig::from_toml_str("[sweep]\ntrials = 3000\np_values = [0.35]\n").unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| cmd_validate(&cfg).unwrap().table.to_csv());
    let b = four.install(|| cmd_validate(&cfg).unwrap().table.to_csv());
    identical &= a == b;
    report(
        8,
        "byte-identical CSV across runs and thread counts",
        identical,
        format!("identical={identical}"),
        start.elapsed(),
        Duration::from_secs(60),
    );
}
