use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use super::acs::{self_dual_vector, AcsField};
use crate::error::{CrError, Result};
use crate::sphere::{j0, mapping_degree, SphereMesh};

pub const LIFT_DEFECT_MAX: f64 = 1e-3;
pub const LIFT_DEFECT_CERT: f64 = 1e-6;
/// Conditioning below which the transported basis is reseeded.
pub const RESEED_COND: f64 = 0.25;

/// Degree of z ↦ J(z) into the sphere of orthogonal structures of the standard orientation.
pub fn raw_obstruction_degree(j: &AcsField) -> f64 {
    let mesh = SphereMesh::new(&j.grid);
    let vals: Vec<[f64; 3]> = mesh
        .points
        .iter()
        .map(|p| {
            let v = self_dual_vector(&j.at(p));
            [v[0], v[1], v[2]]
        })
        .collect();
    mapping_degree(&mesh, &vals)
}

pub fn obstruction_degree(j: &AcsField) -> Result<i64> {
    let coarse = raw_obstruction_degree(j);
    let refined = raw_obstruction_degree(&j.refined(2));
    let (rc, rr) = (coarse.round(), refined.round());
    if rc != rr || (coarse - rc).abs() > 1e-6 || (refined - rr).abs() > 1e-6 {
        return Err(CrError::UnstableDegree { coarse, refined });
    }
    Ok(rc as i64)
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftField {
    #[serde(skip)]
    pub samples: Vec<Matrix4<f64>>,
    /// max relative mismatch of the J-complex seed basis across mesh edges
    pub monodromy_defect: f64,
    pub defect_edge: Option<(usize, usize)>,
    pub min_conditioning: f64,
    pub reseeds: usize,
    pub seed_pair: (usize, usize),
    /// max ‖G⁻¹J₀G − J‖ over nodes
    pub conjugation_residual: f64,
}

impl LiftField {
    pub fn at(&self, node: usize) -> &Matrix4<f64> {
        &self.samples[node]
    }
}

fn adapted(j: &Matrix4<f64>, b: &[Vector4<f64>; 2]) -> Matrix4<f64> {
    Matrix4::from_columns(&[b[0], j * b[0], b[1], j * b[1]])
}

fn conditioning(m: &Matrix4<f64>) -> f64 {
    let s = m.singular_values();
    s.min() / s.max()
}

fn unit(i: usize) -> Vector4<f64> {
    Vector4::from_fn(|r, _| if r == i { 1.0 } else { 0.0 })
}

/// Nearest J-complex pair to (p, q) ≈ (b, Jb) in least squares: (I + JᵀJ) b = p + Jᵀq.
fn project_pair(j: &Matrix4<f64>, p: &Vector4<f64>, q: &Vector4<f64>) -> Vector4<f64> {
    let a = Matrix4::identity() + j.transpose() * j;
    a.lu()
        .solve(&(p + j.transpose() * q))
        .unwrap_or(*p)
}

/// G(z) with G⁻¹J₀G = J(z), from a J-complex basis (b₁, b₂) carried along the
/// latitude spiral from the north pole. The basis is held fixed (flat transport) and
/// reseeded by least-squares projection only where its conditioning drops; the defect
/// measures how far the basis jumps across any edge of the closed mesh.
pub fn lift_acs(j: &AcsField) -> Result<LiftField> {
    let mesh = SphereMesh::new(&j.grid);
    let js: Vec<Matrix4<f64>> = mesh.points.iter().map(|p| j.at(p)).collect();
    let n = mesh.points.len();

    let mut best = ((0, 2), f64::NEG_INFINITY);
    for a in 0..4 {
        for b in a + 1..4 {
            let pair = [unit(a), unit(b)];
            let c = js
                .iter()
                .map(|jj| conditioning(&adapted(jj, &pair)))
                .fold(f64::INFINITY, f64::min);
            if c > best.1 {
                best = ((a, b), c);
            }
        }
    }
    let seed_pair = best.0;

    // spiral: north pole, then rings north to south, then south pole
    let mut order = vec![mesh.n_grid];
    order.extend(0..mesh.n_grid);
    order.push(mesh.n_grid + 1);

    let mut basis = vec![[Vector4::zeros(); 2]; n];
    let mut current = [unit(seed_pair.0), unit(seed_pair.1)];
    let mut prev_j = js[order[0]];
    let mut reseeds = 0;
    let mut min_cond = f64::INFINITY;
    for &v in &order {
        let jv = &js[v];
        let mut c = conditioning(&adapted(jv, &current));
        if c < RESEED_COND {
            let jb = [prev_j * current[0], prev_j * current[1]];
            current = [
                project_pair(jv, &current[0], &jb[0]),
                project_pair(jv, &current[1], &jb[1]),
            ];
            reseeds += 1;
            c = conditioning(&adapted(jv, &current));
        }
        if c <= 1e-10 {
            return Err(CrError::NearSingular {
                sigma: c,
                location: format!("lift continuation at mesh vertex {v}"),
            });
        }
        min_cond = min_cond.min(c);
        basis[v] = current;
        prev_j = *jv;
    }

    let mut defect = 0.0;
    let mut edge = None;
    for (a, b) in mesh.edges() {
        let scale = basis[a][0].norm().max(basis[a][1].norm());
        let d = ((basis[a][0] - basis[b][0]).norm()).max((basis[a][1] - basis[b][1]).norm())
            / scale;
        if d > defect {
            defect = d;
            edge = Some((a, b));
        }
    }
    if defect > LIFT_DEFECT_MAX {
        return Err(CrError::LiftObstructed {
            defect,
            edge: edge.unwrap(),
        });
    }

    let mut samples = Vec::with_capacity(mesh.n_grid);
    let mut resid: f64 = 0.0;
    for v in 0..mesh.n_grid {
        let m = adapted(&js[v], &basis[v]);
        let g = m.try_inverse().ok_or(CrError::NearSingular {
            sigma: 0.0,
            location: format!("lift at node {v}"),
        })?;
        let r = (m * j0() * g - js[v]).norm();
        resid = resid.max(r);
        samples.push(g);
    }
    Ok(LiftField {
        samples,
        monodromy_defect: defect,
        defect_edge: edge,
        min_conditioning: min_cond,
        reseeds,
        seed_pair,
        conjugation_residual: resid,
    })
}
