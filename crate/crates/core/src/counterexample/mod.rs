pub mod acs;
pub mod construct;
pub mod foliation;
pub mod lift;
pub mod tangent;

pub use acs::{j_sphere_basis, oriented_complement, orthogonalize, phi, self_dual_vector, AcsField};
pub use lift::{lift_acs, obstruction_degree, raw_obstruction_degree, LiftField};
pub use tangent::{
    build_f0, build_whitney_immersion, c2_to_r4, f0_at, image_chern_number, normal_euler_number, normalized_sigma, r4_to_c2, MonoSource,
    TangentMono, WhitneySphere,
};
pub use construct::{
    angle_to_span, build_superregular_with_cokernel, construct_frame, gauge, normalize_e5,
    frame_coordinates, h_values, project_off, ConstructedExample, Normalization,
};
pub use foliation::{foliation_map_scan, DegeneracyReport, FoldWitness, InjectivityCheck, NodeRecord};
