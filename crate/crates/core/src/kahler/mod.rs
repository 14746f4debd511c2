//! Product Kähler metrics on (S²)^N, splitting types of holomorphic spheres and the
//! curvature criteria for line subbundles and superregularity.

pub mod curvature;
pub mod probes;
pub mod quotient;
pub mod spin;
pub mod splitting;
pub mod suite;

pub use curvature::{bisectional_bound, bisectional_infimum, conformal_curvature_fd, fs_factor, PlanePair, ProductKahler};
pub use probes::{
    check_cur_k, check_superregular_criteria, probe_splitting, splitting_l_max, CriterionVerdict, CurKReport,
    CurKVerdict, HolSphere, Probe, RationalMap, SuperregularCriteria,
};
pub use quotient::{quotient_curvature_probe, QuotientReport, CHERN_TOL, QUOTIENT_TOL};
pub use spin::{dbar_entries, spin_modes, SpinBasis};
pub use splitting::{holomorphic_sections, splitting_type, Coupling, HolBundle, KernelCount, SpinFunction, SplittingType};
pub use suite::{probe_by_name, run_kahler_suite, KahlerConfig, KahlerSuite, SuiteRow};
