//! Real-linear Cauchy-Riemann operators D = ∂̄₀ + ½Y on the trivial ℂ² bundle.

pub mod kernel;
pub mod operator;
pub mod superregular;

pub use kernel::{index_certificate, index_certificate_fast, kernel_cokernel, IndexCertificate, KernelReport, RankVerdict, GAP_MIN, TAU_RANK};
pub use operator::{
    assemble, dbar0_matrix, frame_bundle_hom, operator_from_frame, y_matrix, y_matrix_columnwise,
    BundleHom, CROperator,
};
pub use superregular::{
    certify_frame, certify_superregular, BasisChoice, DegeneracyWitness, SuperregCertificate,
    SuperregVerdict, OVERSAMPLE, TAU_SR,
};
