mod acs;
mod leaves;

pub use acs::{dbar_j_residual, AcsChecks, AmbientAcs, DbarJReport, Matrix6};
pub use leaves::{
    leaf_scan, leaves_through_point, leaves_through_point_of, locate_degenerate_point,
    write_leaf_csv, LeafRow, LeafWitness,
};
