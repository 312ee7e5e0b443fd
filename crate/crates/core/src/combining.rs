//! Receive combiners: maximum ratio and centralized MMSE.

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::{CMatrix, Cx, Error, RMatrix, Result};

/// Relative residual above which an MMSE solve is rejected.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinerKind {
    Mr,
    Mmse,
}

impl CombinerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CombinerKind::Mr => "mr",
            CombinerKind::Mmse => "mmse",
        }
    }
}

impl std::fmt::Display for CombinerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One receive weight vector per UE, stored as the columns of `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerBank {
    pub kind: CombinerKind,
    pub w: CMatrix,
}

pub fn mr_weights(h_hat: &CMatrix) -> CombinerBank {
    CombinerBank {
        kind: CombinerKind::Mr,
        w: h_hat.clone(),
    }
}

/// `w_k = rho q_k (sum_i rho q_i (h_i h_i^H + C_i) + I)^-1 h_k`.
pub fn mmse_weights(h_hat: &CMatrix, err_var: &RMatrix, q: &[f64], rho: f64) -> Result<CombinerBank> {
    let mut w = mmse_directions(h_hat, err_var, q, rho)?;
    for (k, mut col) in w.column_iter_mut().enumerate() {
        col *= Cx::new(rho * q[k], 0.0);
    }
    Ok(CombinerBank {
        kind: CombinerKind::Mmse,
        w,
    })
}

/// MMSE weights without the `rho q_k` prefactor. SINR is invariant to the
/// scale of `w_k`, so power control works with these to keep the directions
/// of UEs whose power is currently zero.
pub fn mmse_directions(h_hat: &CMatrix, err_var: &RMatrix, q: &[f64], rho: f64) -> Result<CMatrix> {
    let (m, k) = h_hat.shape();
    if err_var.shape() != (m, k) {
        return Err(Error::ShapeMismatch {
            expected: (m, k),
            actual: err_var.shape(),
        });
    }
    if q.len() != k {
        return Err(Error::InvalidArgument(format!("{} powers for {k} UEs", q.len())));
    }
    if !(rho > 0.0) || q.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidArgument("need rho > 0 and q in [0, 1]".into()));
    }

    let mut scaled = h_hat.clone();
    for (i, mut col) in scaled.column_iter_mut().enumerate() {
        col *= Cx::new((rho * q[i]).sqrt(), 0.0);
    }
    let mut a = &scaled * scaled.adjoint();
    for row in 0..m {
        let err: f64 = (0..k).map(|i| q[i] * err_var[(row, i)]).sum();
        a[(row, row)] += Cx::new(rho * err + 1.0, 0.0);
    }

    let chol = Cholesky::new(a.clone())
        .ok_or_else(|| Error::NumericalFailure("MMSE system is not positive definite".into()))?;
    let mut w = chol.solve(h_hat);
    // one round of iterative refinement keeps badly scaled systems accurate
    let residual = h_hat - &a * &w;
    w += chol.solve(&residual);

    let residual = h_hat - &a * &w;
    for i in 0..k {
        let rhs = h_hat.column(i).norm();
        if rhs > 0.0 {
            let rel = residual.column(i).norm() / rhs;
            if !(rel <= SOLVE_RESIDUAL_TOL) {
                return Err(Error::NumericalFailure(format!("MMSE solve residual {rel:e} for UE {i}")));
            }
        }
    }
    Ok(w)
}

/// Weights of the given kind at powers `q`.
pub fn combiner(kind: CombinerKind, h_hat: &CMatrix, err_var: &RMatrix, q: &[f64], rho: f64) -> Result<CombinerBank> {
    match kind {
        CombinerKind::Mr => Ok(mr_weights(h_hat)),
        CombinerKind::Mmse => mmse_weights(h_hat, err_var, q, rho),
    }
}
