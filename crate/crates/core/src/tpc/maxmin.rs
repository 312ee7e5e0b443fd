use super::feasibility::{max_min_sinr_fixed, minimal_powers};
use super::{TpcDiagnostics, TpcOptions, TpcProblem, TpcResult, TpcStatus};
use crate::combining::CombinerKind;
use crate::metrics::{spectral_efficiency, EffectiveGains, SystemConfig};
use crate::{Error, Result};

fn sinr_target(target_se: f64) -> f64 {
    2f64.powf(target_se) - 1.0
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Max-min SINR under `cap` with weight/power alternation starting from
/// weights evaluated at `init`. MR weights do not depend on the powers and
/// take a single round.
fn balance(
    problem: &TpcProblem<'_>,
    init: &[f64],
    cap: f64,
    floor: f64,
    opts: &TpcOptions,
    diag: &mut TpcDiagnostics,
) -> Result<Option<(f64, Vec<f64>)>> {
    let rounds = match problem.combiner {
        CombinerKind::Mr => 1,
        CombinerKind::Mmse => opts.alternations,
    };
    let mut q = init.to_vec();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..rounds {
        diag.alternation_rounds += 1;
        let gains = problem.gains(&q)?;
        let Some((t, q_new)) = max_min_sinr_fixed(&gains, problem.rho, cap, floor, opts, diag)? else {
            break;
        };
        let delta = max_abs_diff(&q, &q_new);
        q = q_new;
        best = Some((t, q.clone()));
        if delta < opts.alternation_tol {
            break;
        }
    }
    Ok(best)
}

fn finish(
    problem: &TpcProblem<'_>,
    q: Vec<f64>,
    config: &SystemConfig,
    mut diagnostics: TpcDiagnostics,
) -> Result<TpcResult> {
    let metrics = problem.metrics(&q, config)?;
    diagnostics.min_se = metrics.min_se();
    diagnostics.min_ee = metrics.min_ee();
    let status = if diagnostics.max_iter_hits > 0 {
        TpcStatus::MaxIters
    } else {
        TpcStatus::Optimal
    };
    Ok(TpcResult {
        q,
        metrics,
        status,
        diagnostics,
    })
}

/// Maximize the smallest SE among all UEs, `0 <= q_k <= 1`.
///
/// Bisection on the common SINR target, each probe a fixed-point solve with
/// the combiners held fixed. For MMSE, weights are recomputed at the current
/// powers (starting from full power) and the bisection repeated. Reported
/// metrics use the combiner recomputed at the returned powers.
pub fn max_min_se(problem: &TpcProblem<'_>, config: &SystemConfig, opts: &TpcOptions) -> Result<TpcResult> {
    opts.validate()?;
    let mut diag = TpcDiagnostics::default();
    let init = vec![1.0; problem.num_ues()];
    let (t, q) = balance(problem, &init, 1.0, 0.0, opts, &mut diag)?
        .ok_or_else(|| Error::NumericalFailure("zero SINR target reported infeasible".into()))?;
    diag.sinr_target = t;
    finish(problem, q, config, diag)
}

/// Solution of the min-max power problem at an SE target.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxPower {
    /// Smallest cap on every `q_k` under which all UEs reach the target.
    pub nu_star: f64,
    /// Minimal power profile reaching the target.
    pub q: Vec<f64>,
    pub diagnostics: TpcDiagnostics,
}

/// Smallest common power cap under which every UE reaches `target_se`,
/// by bisection on the cap. Fails with [`Error::Infeasible`] when even full
/// power falls short for some UE.
pub fn min_max_power(problem: &TpcProblem<'_>, target_se: f64, opts: &TpcOptions) -> Result<MinMaxPower> {
    opts.validate()?;
    if !(target_se >= 0.0 && target_se.is_finite()) {
        return Err(Error::InvalidArgument(format!("target SE {target_se} must be finite and >= 0")));
    }
    let t = sinr_target(target_se);
    let k = problem.num_ues();
    let all = vec![true; k];
    let mut diag = TpcDiagnostics {
        sinr_target: t,
        ..TpcDiagnostics::default()
    };
    let rounds = match problem.combiner {
        CombinerKind::Mr => 1,
        CombinerKind::Mmse => opts.alternations,
    };

    let probe = |gains: &EffectiveGains, cap: f64, diag: &mut TpcDiagnostics| -> Result<Option<Vec<f64>>> {
        diag.bisection_steps += 1;
        Ok(minimal_powers(gains, problem.rho, t, cap, &all))
    };

    let mut q_cur = vec![1.0; k];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..rounds {
        diag.alternation_rounds += 1;
        let gains = problem.gains(&q_cur)?;
        let Some(mut q_hi) = probe(&gains, 1.0, &mut diag)? else {
            break;
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > opts.bisection_tol {
            let mid = 0.5 * (lo + hi);
            match probe(&gains, mid, &mut diag)? {
                Some(q) => {
                    hi = mid;
                    q_hi = q;
                }
                None => lo = mid,
            }
        }
        let delta = max_abs_diff(&q_cur, &q_hi);
        q_cur = q_hi.clone();
        best = Some((hi, q_hi));
        if delta < opts.alternation_tol {
            break;
        }
    }
    let (nu_star, q) = best.ok_or_else(|| {
        Error::Infeasible(format!("at least one UE cannot reach {target_se} bits/s/Hz at full power"))
    })?;
    diag.nu_star = Some(nu_star);
    Ok(MinMaxPower {
        nu_star,
        q,
        diagnostics: diag,
    })
}

/// Maximize the smallest EE subject to every UE reaching `opts.target_se`.
///
/// 1. `nu*` from [`min_max_power`].
/// 2. Hill-climb the common cap `nu` over `[nu*, 1]`, starting at `nu*` with
///    step `hill_step_init` toward 1; whenever the objective drops below the
///    previous point the step is halved and reversed, until it falls under
///    `hill_step_min`. The objective at `nu` is
///    `B * S(nu) / (P_max nu + P_circuit)` with `S(nu)` the max-min SE under
///    cap `nu` and SE floor `target_se`.
/// 3. Metrics are reported with the optimized powers themselves in the EE
///    denominator, which is never worse than the `nu` used during the search.
pub fn max_min_ee(problem: &TpcProblem<'_>, config: &SystemConfig, opts: &TpcOptions) -> Result<TpcResult> {
    opts.validate()?;
    let floor = sinr_target(opts.target_se);
    let start = min_max_power(problem, opts.target_se, opts)?;
    let nu_star = start.nu_star.min(1.0);
    let mut diag = start.diagnostics.clone();

    let objective = |t: f64, nu: f64| config.bandwidth_hz * spectral_efficiency(t) / (config.p_max_w * nu + config.p_circuit_w);
    let evaluate = |nu: f64, diag: &mut TpcDiagnostics| -> Result<Option<(f64, f64, Vec<f64>)>> {
        diag.hill_evaluations += 1;
        Ok(balance(problem, &start.q, nu, floor, opts, diag)?.map(|(t, q)| (objective(t, nu), t, q)))
    };

    let Some((obj0, t0, q0)) = evaluate(nu_star, &mut diag)? else {
        // the warm start is feasible by construction; only a fixed-point
        // iteration limit can land here
        diag.nu = Some(nu_star);
        diag.sinr_target = floor;
        let mut result = finish(problem, start.q.clone(), config, diag)?;
        result.status = TpcStatus::MaxIters;
        return Ok(result);
    };
    let mut best = (obj0, nu_star, t0, q0);
    let (mut nu, mut prev) = (nu_star, obj0);
    let mut step = opts.hill_step_init;
    while step.abs() >= opts.hill_step_min && diag.hill_evaluations < opts.max_hill_evaluations {
        let next = (nu + step).clamp(nu_star, 1.0);
        if next == nu {
            step = -step / 2.0;
            continue;
        }
        match evaluate(next, &mut diag)? {
            Some((obj, t, q)) => {
                if obj < prev {
                    step = -step / 2.0;
                }
                if obj > best.0 {
                    best = (obj, next, t, q);
                }
                nu = next;
                prev = obj;
            }
            None => step = -step / 2.0,
        }
    }

    let (_, nu_best, t_best, q_best) = best;
    diag.nu = Some(nu_best);
    diag.sinr_target = t_best;
    finish(problem, q_best, config, diag)
}
