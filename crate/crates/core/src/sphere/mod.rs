//! Grids, spin-weighted bases and the flat operator ∂̄₀ on the sphere.
//!
//! Conventions: x0 = cos θ is the polar axis, the north chart is
//! z = tan(θ/2) e^{iφ}, the complex structure is j e_θ = e_φ, and a (0,1)-form
//! α is stored through its value α(e_θ) ∈ ℂ² (so α(e_φ) = -i α(e_θ)).
//! ℂ² is identified with ℝ⁴ by (Re u₁, Im u₁, Re u₂, Im u₂).

pub mod field;
pub mod grid;
pub mod mesh;
pub mod wigner;

pub use field::{
    dbar0, j0, l2_inner, l2_inner_artifacts, mode_count, mode_index, modes, pointwise_frame_matrix,
    AntiForm, Field, FieldArtifact, FrameField, FrameScan, Section, Spectral, Spin, Spin0, SpinM1,
    C64,
};
pub use grid::{gauss_legendre, make_grid, GridNode, SphereGrid, SpherePoint};
pub use mesh::{mapping_degree, plane_bundle_degree, signed_solid_angle, SphereMesh};
