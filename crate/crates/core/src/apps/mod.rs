//! Applications built on alternating projections.

pub mod cadzow;
pub mod em;

pub use cadzow::{cadzow_denoise, cadzow_run, escape_step, trajectory_matrix, CadzowProblem, Denoised};
pub use em::{averaged_as_em, em_e_step, em_m_step, em_run, em_spread, EMProblem, EMRun, EMState};
