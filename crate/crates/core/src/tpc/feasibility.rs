use super::{TpcDiagnostics, TpcOptions};
use crate::metrics::EffectiveGains;
use crate::{Error, RMatrix, Result};

/// Outcome of the power fixed-point iteration at one SINR target and cap.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub q: Vec<f64>,
    pub iterations: usize,
    /// Every UE reaches the target at `q`.
    pub feasible: bool,
}

/// Minimal powers reaching SINR `target` for every UE under `q_k <= cap`.
///
/// Iterates `q_k <- min(cap, target * D_k(q) / (rho |w_k^H h_k|^2))` from
/// `q = 0`, where `D_k` is the interference-plus-noise term. `D_k` is affine
/// and increasing in `q`, so the sequence is elementwise nondecreasing and
/// bounded by `cap`. Iteration stops once no power moves by more than
/// `fixed_point_tol` relative to its new value; that also bounds the relative
/// SINR shortfall by the same amount. `on_iter` sees every iterate.
pub fn solve_fixed_point(
    gains: &EffectiveGains,
    rho: f64,
    target: f64,
    cap: f64,
    opts: &TpcOptions,
    on_iter: impl FnMut(&[f64]),
) -> Result<FixedPoint> {
    let active = vec![true; gains.num_ues()];
    fixed_point_masked(gains, rho, target, cap, opts, &active, on_iter)
}

/// [`solve_fixed_point`] reduced to its answer: `Some(q)` when the target is
/// reachable under the cap.
pub fn feasible_powers(gains: &EffectiveGains, rho: f64, target: f64, cap: f64, opts: &TpcOptions) -> Result<Option<Vec<f64>>> {
    let fp = solve_fixed_point(gains, rho, target, cap, opts, |_| {})?;
    Ok(fp.feasible.then_some(fp.q))
}

/// Fixed point over the `active` UEs only; inactive UEs stay silent.
pub(super) fn fixed_point_masked(
    gains: &EffectiveGains,
    rho: f64,
    target: f64,
    cap: f64,
    opts: &TpcOptions,
    active: &[bool],
    mut on_iter: impl FnMut(&[f64]),
) -> Result<FixedPoint> {
    if !(target >= 0.0 && target.is_finite()) {
        return Err(Error::InvalidArgument(format!("SINR target {target} must be finite and >= 0")));
    }
    if !(cap > 0.0 && cap <= 1.0) {
        return Err(Error::InvalidArgument(format!("power cap {cap} outside (0, 1]")));
    }
    let k = gains.num_ues();
    let mut q = vec![0.0; k];
    if target == 0.0 {
        return Ok(FixedPoint {
            q,
            iterations: 0,
            feasible: true,
        });
    }
    if (0..k).any(|i| active[i] && (gains.own(i) <= 0.0 || gains.norm[i] <= 0.0)) {
        return Ok(FixedPoint {
            q,
            iterations: 0,
            feasible: false,
        });
    }

    let tol = opts.fixed_point_tol;
    let mut next = vec![0.0; k];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_fixed_point_iters {
        iterations += 1;
        let mut moved = false;
        for i in 0..k {
            next[i] = if active[i] {
                (target * gains.denominator(i, &q, rho) / (rho * gains.own(i))).min(cap)
            } else {
                0.0
            };
            if (next[i] - q[i]).abs() > tol * next[i] {
                moved = true;
            }
        }
        std::mem::swap(&mut q, &mut next);
        on_iter(&q);
        if !moved {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::MaxIters(opts.max_fixed_point_iters));
    }
    let threshold = target * (1.0 - 10.0 * tol);
    let feasible = (0..k).all(|i| !active[i] || gains.sinr(i, &q, rho) >= threshold);
    Ok(FixedPoint { q, iterations, feasible })
}

/// The fixed point of [`fixed_point_masked`] in closed form.
///
/// With the combiners fixed, `D_k(q) = n_k + sum_i c_ki q_i` is affine, so the
/// uncapped fixed point solves `(I - T C) q = T n` with `T = diag(t / (rho a_k))`.
/// A strictly positive solution is the minimal one (and proves the target
/// reachable without a cap); the capped iteration then converges to it
/// whenever it respects the cap and fails otherwise. This avoids the slow
/// convergence of the iteration near the feasibility boundary, where its
/// contraction factor approaches one.
pub(super) fn minimal_powers(gains: &EffectiveGains, rho: f64, target: f64, cap: f64, active: &[bool]) -> Option<Vec<f64>> {
    let k = gains.num_ues();
    let mut q = vec![0.0; k];
    if target == 0.0 {
        return Some(q);
    }
    let idx: Vec<usize> = (0..k).filter(|&i| active[i]).collect();
    if idx.iter().any(|&i| gains.own(i) <= 0.0 || gains.norm[i] <= 0.0) {
        return None;
    }
    let n = idx.len();
    let zeros = vec![0.0; k];
    let mut unit = vec![0.0; k];
    let mut a = RMatrix::identity(n, n);
    let mut b = nalgebra::DVector::zeros(n);
    for (r, &i) in idx.iter().enumerate() {
        let scale = target / (rho * gains.own(i));
        let base = gains.denominator(i, &zeros, rho);
        b[r] = scale * base;
        for (c, &j) in idx.iter().enumerate() {
            unit[j] = 1.0;
            a[(r, c)] -= scale * (gains.denominator(i, &unit, rho) - base);
            unit[j] = 0.0;
        }
    }
    let x = a.lu().solve(&b)?;
    if x.iter().any(|v| !(v.is_finite() && *v > 0.0 && *v <= cap)) {
        return None;
    }
    for (r, &i) in idx.iter().enumerate() {
        q[i] = x[r];
    }
    let threshold = target * (1.0 - 1e-9);
    idx.iter().all(|&i| gains.sinr(i, &q, rho) >= threshold).then_some(q)
}

/// Largest common SINR target reachable under `cap` with fixed combiners,
/// found by bisection. Returns `None` when even `floor` is unreachable.
///
/// UEs with a zero effective gain cannot be served; they are held at zero
/// power, the others are balanced among themselves, and the reported target
/// is 0 unless `floor` is positive (then the problem is infeasible).
pub(super) fn max_min_sinr_fixed(
    gains: &EffectiveGains,
    rho: f64,
    cap: f64,
    floor: f64,
    opts: &TpcOptions,
    diag: &mut TpcDiagnostics,
) -> Result<Option<(f64, Vec<f64>)>> {
    let k = gains.num_ues();
    let active: Vec<bool> = (0..k).map(|i| gains.own(i) > 0.0 && gains.norm[i] > 0.0).collect();
    let degenerate = active.iter().any(|a| !a);
    if degenerate && floor > 0.0 {
        return Ok(None);
    }
    if !active.iter().any(|a| *a) {
        return Ok(Some((0.0, vec![0.0; k])));
    }

    let probe = |t: f64, diag: &mut TpcDiagnostics| -> Result<Option<Vec<f64>>> {
        diag.bisection_steps += 1;
        Ok(minimal_powers(gains, rho, t, cap, &active))
    };

    let Some(mut q_lo) = probe(floor, diag)? else {
        return Ok(None);
    };
    let mut lo = floor;
    let full: Vec<f64> = (0..k).map(|i| if active[i] { cap } else { 0.0 }).collect();
    let mut hi = (0..k)
        .filter(|i| active[*i])
        .map(|i| gains.sinr(i, &full, rho))
        .fold(0.0, f64::max)
        .max(2.0 * lo)
        .max(f64::MIN_POSITIVE);
    let mut doublings = 0;
    while let Some(q) = probe(hi, diag)? {
        lo = hi;
        q_lo = q;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::NumericalFailure("SINR target grows without bound".into()));
        }
    }
    // Stop on the target width, and in the non-degenerate case also once the
    // binding UE sits at the cap: near the interference limit the powers move
    // faster than the target.
    let short_of_cap = |q: &[f64]| !degenerate && cap - q.iter().copied().fold(0.0, f64::max) > opts.bisection_tol * cap;
    while hi - lo > opts.bisection_tol * hi || short_of_cap(&q_lo) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match probe(mid, diag)? {
            Some(q) => {
                lo = mid;
                q_lo = q;
            }
            None => hi = mid,
        }
    }
    let reported = if degenerate { 0.0 } else { lo };
    Ok(Some((reported, q_lo)))
}
