//! Cadzow's algorithm: alternating projections between a linear matrix
//! structure and the matrices of bounded rank.

use serde::{Deserialize, Serialize};

use crate::engine::{run_alternating, StopReason, Trace};
use crate::error::{Error, Result};
use crate::primitives::{svd_small, Matrix, TiePolicy, Tolerances};
use crate::sets::{LowRank, SetDescriptor, Toeplitz};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CadzowProblem {
    /// Structure set on flattened `rows x cols` matrices.
    pub structure: SetDescriptor,
    pub rank: usize,
    pub start: Matrix,
}

impl CadzowProblem {
    pub fn low_rank(&self) -> LowRank {
        LowRank {
            rows: self.start.rows,
            cols: self.start.cols,
            rank: self.rank,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.structure.validate()?;
        self.low_rank().validate()?;
        if self.structure.dimension() != self.start.rows * self.start.cols {
            return Err(Error::DimensionMismatch {
                expected: self.start.rows * self.start.cols,
                found: self.structure.dimension(),
            });
        }
        Ok(())
    }
}

/// `S_k` as the A-sequence (structured), `R_k` as the B-sequence (low
/// rank).
pub fn cadzow_run(p: &CadzowProblem, tol: &Tolerances, policy: &TiePolicy) -> Result<Trace> {
    p.validate()?;
    run_alternating(&p.structure, &p.low_rank().into(), &p.start.to_point(), tol, policy)
}

/// Trajectory matrix of shape `(L - window + 1) x window` with the signal
/// along its diagonals: entry `(i, j)` is `signal[j - i + rows - 1]`.
pub fn trajectory_matrix(signal: &[f64], window: usize) -> Result<(Toeplitz, Matrix)> {
    let l = signal.len();
    if window == 0 || window > l {
        return Err(Error::invalid(format!("window {window} outside [1, {l}]")));
    }
    let shape = Toeplitz {
        rows: l - window + 1,
        cols: window,
    };
    shape.validate()?;
    let data = shape.from_diagonals(signal);
    Ok((shape, Matrix::new(shape.rows, shape.cols, data)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Denoised {
    pub signal: Vec<f64>,
    pub trace: Trace,
    /// `sigma_{r+1}` of the final structured iterate.
    pub rank_residual: f64,
    /// `sigma_{r+1} / sigma_r` of the final structured iterate, zero when
    /// `sigma_r` vanishes.
    pub sigma_ratio: f64,
}

pub fn cadzow_denoise(signal: &[f64], window: usize, rank: usize, tol: &Tolerances) -> Result<Denoised> {
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("signal"));
    }
    let (shape, start) = trajectory_matrix(signal, window)?;
    let problem = CadzowProblem {
        structure: shape.into(),
        rank,
        start,
    };
    let trace = cadzow_run(&problem, tol, &TiePolicy::first())?;
    if trace.stop_reason == StopReason::Diverged {
        return Err(Error::Diverged {
            partial: Box::new(trace),
        });
    }
    let last = trace.last().map_or(&trace.start, |r| &r.a);
    let m = Matrix::from_point(shape.rows, shape.cols, last)?;
    let sigma = svd_small(&m)?.sigma;
    let rank_residual = sigma.get(rank).copied().unwrap_or(0.0);
    let sigma_ratio = match rank.checked_sub(1).and_then(|i| sigma.get(i)) {
        Some(&s) if s > 0.0 => rank_residual / s,
        _ => 0.0,
    };
    Ok(Denoised {
        signal: shape.diagonal_means(last.as_slice()),
        trace,
        rank_residual,
        sigma_ratio,
    })
}

/// One Cadzow step of the escaping example from `S_11 = s`:
/// `s -> l^3 / (l^2 + 1)` with `l = (s + sqrt(s^2 + 4)) / 2`.
pub fn escape_step(s: f64) -> f64 {
    let l = 0.5 * (s + (s * s + 4.0).sqrt());
    l * l * l / (l * l + 1.0)
}
