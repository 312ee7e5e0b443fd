//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails. Built without the libtest harness so the
//! lines always reach the terminal.

use std::collections::BTreeMap;
use std::time::Instant;

use cfmimo_cli::commands::RESULTS_FILE;
use cfmimo_cli::config::{AlgorithmConfig, CliConfig, OracleConfig, DESK_PROFILE};
use cfmimo_cli::oracle::run_oracle;
use cfmimo_cli::{cmd_fit, cmd_run, cmd_synth_dataset, SynthOptions};
use cfmimo_core::channel::PathLossModel;
use cfmimo_core::combining::{mmse_weights, mr_weights, CombinerKind};
use cfmimo_core::estimation::{make_pilots, mmse_estimate, simulate_pilot_rx};
use cfmimo_core::harness::{
    cdf, drop_channels, median, percentile, run_campaign, AlgorithmKind, AlgorithmSpec, CampaignSpec, ResultTable,
};
use cfmimo_core::metrics::{sinr_and_se, SystemConfig};
use cfmimo_core::tpc::{max_min_ee, TpcOptions, TpcProblem, TpcStatus};
use cfmimo_core::{Cx, Error, RMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn desk() -> CliConfig {
    CliConfig::parse(DESK_PROFILE).expect("desk profile parses")
}

/// Desk-scale spec running only max power with MMSE combining.
fn max_power_spec(num_aps: usize, antennas_per_ap: usize, num_ues: usize, drops: u64) -> CampaignSpec {
    let mut cfg = desk();
    cfg.algorithms = vec![AlgorithmConfig::new(AlgorithmKind::MaxPower)];
    cfg.scenario.num_aps = num_aps;
    cfg.scenario.antennas_per_ap = antennas_per_ap;
    cfg.scenario.num_ues = num_ues;
    cfg.drops = drops;
    cfg.campaign().expect("valid spec")
}

fn per_ue(table: &ResultTable, alg: &str, metric: fn(&cfmimo_core::harness::ResultRow) -> f64) -> Vec<f64> {
    table.select(alg, CombinerKind::Mmse).map(metric).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let cfg = SystemConfig::default();
    let (noise, rho) = (cfg.noise_power_w(), cfg.rho());
    check(
        rel(noise, 4.013e-13) <= 1e-3 && rel(rho, 4.98e11) <= 1e-3,
        format!("noise {noise:.4e} W, rho {rho:.4e}"),
    )
}

fn criterion_2() -> Outcome {
    let cfg = desk();
    let report = run_oracle(&OracleConfig::default(), &cfg.system, &cfg.tpc).map_err(|e| e.to_string())?;
    let worst = report.max_se_gap();
    check(
        report.rows.len() == 20 && worst <= 1e-2,
        format!("max |min-SE gap| {worst:.3e} bits/s/Hz over {} instances (tolerance 1e-2)", report.rows.len()),
    )
}

fn criterion_3() -> Outcome {
    let cfg = desk();
    let oracle = OracleConfig {
        target_se: 1.0,
        ..OracleConfig::default()
    };
    let report = run_oracle(&oracle, &cfg.system, &cfg.tpc).map_err(|e| e.to_string())?;
    let failing = report.rows.iter().filter(|r| !report.ee_pass(r)).count();
    check(
        failing == 0,
        format!(
            "max |min-EE gap| {:.3e} relative (tolerance 1e-2), {failing} of {} instances outside",
            report.max_ee_gap(),
            report.rows.len()
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut cfg = desk();
    cfg.scenario.num_aps = 32;
    cfg.scenario.num_ues = 8;
    cfg.drops = 100;
    cfg.realizations_per_drop = 10;
    let spec = cfg.campaign().map_err(|e| e.to_string())?;
    let rho = spec.system.rho();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut checked, mut violations, mut worst) = (0usize, 0usize, f64::INFINITY);
    let mut realizations = 0;
    for d in 0..spec.drops {
        for st in drop_channels(&spec, d).map_err(|e| e.to_string())? {
            realizations += 1;
            let random: Vec<f64> = (0..8).map(|_| rng.random_range(0.01..=1.0)).collect();
            for q in [vec![1.0; 8], random] {
                let mmse = mmse_weights(&st.h_hat, &st.err_var, &q, rho).map_err(|e| e.to_string())?;
                let mr = mr_weights(&st.h_hat);
                let (s_mmse, _) = sinr_and_se(&mmse.w, &st.h_hat, &st.err_var, &q, rho).map_err(|e| e.to_string())?;
                let (s_mr, _) = sinr_and_se(&mr.w, &st.h_hat, &st.err_var, &q, rho).map_err(|e| e.to_string())?;
                for (a, b) in s_mmse.iter().zip(&s_mr) {
                    checked += 1;
                    worst = worst.min(a - b);
                    if *a < b - 1e-9 {
                        violations += 1;
                    }
                }
            }
        }
    }
    check(
        realizations == 1000 && violations == 0,
        format!("{realizations} realizations, {checked} UE comparisons, {violations} violations, min SINR(MMSE)-SINR(MR) {worst:.3e}"),
    )
}

fn criterion_5() -> Outcome {
    let spec = desk().campaign().map_err(|e| e.to_string())?;
    let out = run_campaign(&spec, workers()).map_err(|e| e.to_string())?;
    let t = &out.table;
    let med_se = |alg| median(&per_ue(t, alg, |r| r.se)).unwrap();
    let med_min_ee = |alg| median(&t.per_realization_min(alg, CombinerKind::Mmse, |r| r.ee)).unwrap();
    let (se_mp, se_ms, se_me) = (med_se("max_power"), med_se("max_min_se"), med_se("max_min_ee"));
    let (ee_mp, ee_ms, ee_me) = (med_min_ee("max_power"), med_min_ee("max_min_se"), med_min_ee("max_min_ee"));
    let ordering = se_mp >= se_ms && se_ms >= se_me && ee_me > ee_ms && ee_ms > ee_mp;

    // high target: compare only drops where max-min EE is feasible
    let mut high = spec.clone();
    high.algorithms = vec![
        AlgorithmSpec::new(AlgorithmKind::MaxPower),
        AlgorithmSpec::max_min_ee("max_min_ee_20", 20.0),
    ];
    let out = run_campaign(&high, workers()).map_err(|e| e.to_string())?;
    let feasible: Vec<u64> = {
        let mut s = BTreeMap::new();
        for r in out.table.select("max_min_ee_20", CombinerKind::Mmse) {
            s.insert(r.drop_id, r.status != TpcStatus::Infeasible);
        }
        s.into_iter().filter(|(_, f)| *f).map(|(d, _)| d).collect()
    };
    let (high_ok, high_msg) = if feasible.is_empty() {
        (true, "target 20: feasible in 0 of 200 drops, comparison vacuous".to_string())
    } else {
        let pick = |alg: &str| -> Vec<f64> {
            out.table
                .select(alg, CombinerKind::Mmse)
                .filter(|r| feasible.contains(&r.drop_id))
                .map(|r| r.se)
                .collect()
        };
        let (a, b) = (median(&pick("max_power")).unwrap(), median(&pick("max_min_ee_20")).unwrap());
        (
            rel(b, a) <= 0.05,
            format!("target 20: feasible in {} drops, median SE {b:.4} vs max power {a:.4}", feasible.len()),
        )
    };
    check(
        ordering && high_ok,
        format!(
            "median SE {se_mp:.3} >= {se_ms:.3} >= {se_me:.3}; median min-EE {ee_me:.4e} > {ee_ms:.4e} > {ee_mp:.4e}; {high_msg}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let run = |m| {
        let out = run_campaign(&max_power_spec(m, 1, 16, 100), workers()).unwrap();
        (
            median(&per_ue(&out.table, "max_power", |r| r.se)).unwrap(),
            median(&per_ue(&out.table, "max_power", |r| r.ee)).unwrap(),
        )
    };
    let (se64, ee64) = run(64);
    let (se128, ee128) = run(128);
    check(
        se128 > se64 && ee128 > ee64,
        format!("median SE {se64:.3} -> {se128:.3}, median EE {ee64:.4e} -> {ee128:.4e} (M 64 -> 128, K 16)"),
    )
}

fn criterion_7() -> Outcome {
    let medians: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&k| {
            let out = run_campaign(&max_power_spec(64, 1, k, 100), workers()).unwrap();
            median(&per_ue(&out.table, "max_power", |r| r.se)).unwrap()
        })
        .collect();
    check(
        medians.windows(2).all(|w| w[1] <= w[0]),
        format!("median SE per UE at K=4,8,16: {:.3}, {:.3}, {:.3}", medians[0], medians[1], medians[2]),
    )
}

fn criterion_8() -> Outcome {
    let p20 = |l: usize, n: usize| {
        let out = run_campaign(&max_power_spec(l, n, 8, 200), workers()).unwrap();
        percentile(&cdf(&per_ue(&out.table, "max_power", |r| r.se)).unwrap(), 20.0).unwrap()
    };
    let (dist, colo) = (p20(64, 1), p20(1, 64));
    check(dist >= colo, format!("20th-percentile SE: L=64 {dist:.3}, L=1 {colo:.3}"))
}

fn criterion_9() -> Outcome {
    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut lines = Vec::new();
    let mut ok = true;
    for (rho_tau, beta) in [(100.0, 0.01), (10.0, 0.1), (1000.0, 1e-3)] {
        let pilots = make_pilots(1, 1).unwrap();
        let b = RMatrix::from_element(draws, 1, beta);
        let h = cfmimo_core::channel::realize(&b, &cfmimo_core::channel::draw_small_scale(draws, 1, &mut rng)).unwrap();
        let y = simulate_pilot_rx(&h, &pilots, rho_tau, &mut rng).unwrap();
        let est = mmse_estimate(&y, &b, &pilots, rho_tau).unwrap();
        let gamma = rho_tau * beta * beta / (rho_tau * beta + 1.0);
        let var = est.h_hat.iter().map(Cx::norm_sqr).sum::<f64>() / draws as f64;
        let err_exact = est.err_var.iter().all(|e| *e == beta - gamma);
        ok &= rel(var, gamma) <= 0.02 && err_exact;
        lines.push(format!("({rho_tau}, {beta}): gamma {gamma:.4e} var {var:.4e} err_var exact {err_exact}"));
    }
    let worked = 100.0 * 0.01 * 0.01 / (100.0 * 0.01 + 1.0);
    ok &= (worked - 0.005f64).abs() < 1e-15;
    check(ok, lines.join("; "))
}

fn criterion_10() -> Outcome {
    let mut cfg = desk();
    cfg.scenario.num_aps = 16;
    cfg.scenario.num_ues = 4;
    cfg.drops = 10;
    // 100 dB of extra loss everywhere
    cfg.channel.intercept = Some(PathLossModel::ADJUSTED.intercept + 100.0);
    cfg.algorithms = vec![
        AlgorithmConfig::new(AlgorithmKind::MaxPower),
        AlgorithmConfig {
            kind: AlgorithmKind::MaxMinEe,
            label: None,
            target_se: Some(20.0),
        },
    ];
    let spec = cfg.campaign().map_err(|e| e.to_string())?;
    let st = &drop_channels(&spec, 0).map_err(|e| e.to_string())?[0];
    let problem = TpcProblem::new(&st.h_hat, &st.err_var, spec.system.rho(), CombinerKind::Mmse).unwrap();
    let opts = TpcOptions {
        target_se: 20.0,
        ..TpcOptions::default()
    };
    let direct = matches!(max_min_ee(&problem, &spec.system, &opts), Err(Error::Infeasible(_)));
    let out = run_campaign(&spec, workers()).map_err(|e| e.to_string())?;
    let frac = out.summary["max_min_ee"]["mmse"].infeasible_fraction;
    let rows_ok = out.table.rows.len() == 10 * 2 * 4 && out.failures.is_empty();
    check(
        direct && frac > 0.0 && rows_ok,
        format!("solver Infeasible: {direct}; campaign rows {}, infeasible_fraction {frac}", out.table.rows.len()),
    )
}

fn criterion_11() -> Outcome {
    let cfg = desk();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (one, eight) = (dir.path().join("w1"), dir.path().join("w8"));
    cmd_run(&cfg, &one, 1).map_err(|e| e.to_string())?;
    cmd_run(&cfg, &eight, 8).map_err(|e| e.to_string())?;
    let a = std::fs::read(one.join(RESULTS_FILE)).map_err(|e| e.to_string())?;
    let b = std::fs::read(eight.join(RESULTS_FILE)).map_err(|e| e.to_string())?;
    check(a == b, format!("results.csv {} bytes at 1 worker, {} at 8, identical: {}", a.len(), b.len(), a == b))
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = desk();
    // every link longer than the 25 m reference distance
    cfg.scenario.area.ap_heights = vec![30.0, 40.0, 50.0];

    cfg.channel.shadow_sigma = Some(0.0);
    let path = dir.path().join("noiseless.cfmd");
    let opts = SynthOptions {
        num_aps: 64,
        num_ues: 16,
        num_freqs: 1,
        rayleigh: false,
        seed: 12,
    };
    cmd_synth_dataset(&cfg, &opts, &path).map_err(|e| e.to_string())?;
    let fit = cmd_fit(&path, None).map_err(|e| e.to_string())?.model.rereferenced(25.0);
    let exact = (fit.intercept - 68.3568).abs() < 5e-4 && (fit.slope - 52.3).abs() < 5e-4;

    cfg.channel.shadow_sigma = None;
    let path = dir.path().join("shadowed.cfmd");
    let opts = SynthOptions {
        num_aps: 100,
        num_ues: 100,
        ..opts
    };
    cmd_synth_dataset(&cfg, &opts, &path).map_err(|e| e.to_string())?;
    let noisy = cmd_fit(&path, None).map_err(|e| e.to_string())?;
    let sigma_ok = rel(noisy.model.shadow_sigma, 9.0) <= 0.05 && (noisy.model.slope - 52.3).abs() <= 1.5;
    check(
        exact && sigma_ok && noisy.links_used == 10_000,
        format!(
            "noiseless intercept {:.4} slope {:.4}; shadowed ({} links) sigma {:.3} dB slope {:.3}",
            fit.intercept, fit.slope, noisy.links_used, noisy.model.shadow_sigma, noisy.model.slope
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("radio constants", criterion_1),
        ("oracle equivalence, max-min SE", criterion_2),
        ("oracle equivalence, max-min EE", criterion_3),
        ("combiner dominance", criterion_4),
        ("SE/EE trade-off ordering", criterion_5),
        ("M-scaling", criterion_6),
        ("K-scaling", criterion_7),
        ("distribution benefit", criterion_8),
        ("estimation statistics", criterion_9),
        ("infeasibility handling", criterion_10),
        ("determinism across worker counts", criterion_11),
        ("channel-model recovery", criterion_12),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.ends_with(&format!(" {f}"))) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id} ({name}): PASS [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{id} ({name}): FAIL [{secs:.1}s] {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
