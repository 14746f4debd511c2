use nalgebra::{Matrix4, Vector4};
use serde::Serialize;
use std::io::Write;

use crate::cr::TAU_SR;
use crate::error::{CrError, Result};
use crate::family::ContinuedKernel;
use crate::sphere::{Section, SpherePoint, Spectral};

/// Kernel sections vanishing at a point: combinations c with Σ c_i b_i(p) = 0.
#[derive(Debug, Clone, Serialize)]
pub struct LeafWitness {
    pub point: SpherePoint,
    pub node: Option<usize>,
    /// basis of the null space of the evaluation map, as coefficient vectors
    pub null_space: Vec<[f64; 4]>,
    pub frame_rank: usize,
    pub sigma_ratio: f64,
}

impl LeafWitness {
    pub fn dim(&self) -> usize {
        self.null_space.len()
    }
}

fn frame_at(spec: &Spectral, b: &[Section; 4], p: &SpherePoint) -> Matrix4<f64> {
    Matrix4::from_columns(&[
        spec.eval_at(&b[0], p),
        spec.eval_at(&b[1], p),
        spec.eval_at(&b[2], p),
        spec.eval_at(&b[3], p),
    ])
}

fn witness_from_matrix(m: &Matrix4<f64>, point: SpherePoint, node: Option<usize>) -> LeafWitness {
    let svd = m.svd(false, true);
    let smax = svd.singular_values.max();
    let vt = svd.v_t.expect("requested");
    let mut null_space = Vec::new();
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv <= TAU_SR * smax {
            let r = vt.row(k);
            null_space.push([r[0], r[1], r[2], r[3]]);
        }
    }
    LeafWitness {
        point,
        node,
        frame_rank: m.rank(TAU_SR * smax),
        sigma_ratio: svd.singular_values.min() / smax,
        null_space,
    }
}

/// Null space of the evaluation of a kernel basis at `p`.
pub fn leaves_through_point_of(spec: &Spectral, basis: &[Section; 4], p: &SpherePoint) -> LeafWitness {
    witness_from_matrix(&frame_at(spec, basis, p), *p, None)
}

pub fn leaves_through_point(spec: &Spectral, ck: &ContinuedKernel, node: usize) -> LeafWitness {
    let p = spec.grid.point(node);
    let mut w = leaves_through_point_of(spec, &ck.basis, &p);
    w.node = Some(node);
    w
}

/// Point on the great-circle arc from `a` to `b` where the frame determinant changes
/// sign, by bisection (det(a) and det(b) must have opposite signs).
pub fn locate_degenerate_point(
    spec: &Spectral,
    basis: &[Section; 4],
    a: &SpherePoint,
    b: &SpherePoint,
) -> Result<SpherePoint> {
    let (xa, xb) = (a.xyz(), b.xyz());
    let at = |s: f64| {
        let v = [
            (1.0 - s) * xa[0] + s * xb[0],
            (1.0 - s) * xa[1] + s * xb[1],
            (1.0 - s) * xa[2] + s * xb[2],
        ];
        SpherePoint::from_xyz(v)
    };
    let det = |s: f64| frame_at(spec, basis, &at(s)).determinant();
    let (mut lo, mut hi) = (0.0, 1.0);
    let dlo = det(lo);
    if dlo * det(hi) > 0.0 {
        return Err(CrError::NotApplicable("determinant has the same sign at both ends".into()));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if det(mid) * dlo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, Serialize)]
pub struct LeafRow {
    pub node: usize,
    pub null_dim: usize,
    pub frame_rank: usize,
}

/// Null-space dimension at every quadrature node.
pub fn leaf_scan(spec: &Spectral, basis: &[Section; 4]) -> Vec<LeafRow> {
    let vals: Vec<Vec<Vector4<f64>>> = basis.iter().map(|x| spec.synthesize(x)).collect();
    (0..spec.n_nodes())
        .map(|i| {
            let m = Matrix4::from_columns(&[vals[0][i], vals[1][i], vals[2][i], vals[3][i]]);
            let w = witness_from_matrix(&m, spec.grid.point(i), Some(i));
            LeafRow {
                node: i,
                null_dim: w.dim(),
                frame_rank: w.frame_rank,
            }
        })
        .collect()
}

pub fn write_leaf_csv<W: Write>(rows: &[LeafRow], s: f64, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["node", "null_dim", "s"])?;
    for r in rows {
        wr.write_record([r.node.to_string(), r.null_dim.to_string(), format!("{s:.6}")])?;
    }
    wr.flush()?;
    Ok(())
}
