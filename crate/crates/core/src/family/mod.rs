//! Deformations D + tY_s with prescribed kernels, their Neumann-series kernel
//! continuation, and the superregularity sweep over s.

pub mod neumann;
pub mod patch;
pub mod sweep;

pub use neumann::{bordered_check, svd_kernel_angle, BorderedCheck, TAU_BORDER, 
    f_norm, neumann_continue, surjectivity_certificate, ContinuedKernel, SurjectivityReport,
};
pub use patch::{build_perturbation_family, Cap, FamilySample, PerturbationFamily, DEFAULT_RADIUS};
pub use sweep::{superregularity_sweep, SweepReport, SweepRow, DEFAULT_DELTA};
