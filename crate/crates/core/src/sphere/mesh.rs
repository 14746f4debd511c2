use super::grid::{SphereGrid, SpherePoint};
use std::f64::consts::PI;

/// Closed triangulation of the sphere: grid nodes plus the two poles, every
/// triangle positively oriented with respect to the outward normal.
#[derive(Debug, Clone)]
pub struct SphereMesh {
    pub points: Vec<SpherePoint>,
    pub triangles: Vec<[usize; 3]>,
    pub n_grid: usize,
}

impl SphereMesh {
    pub fn new(grid: &SphereGrid) -> Self {
        let n = grid.len();
        let (nt, np) = (grid.n_theta, grid.n_phi);
        let mut points = grid.points();
        points.push(SpherePoint::new(0.0, 0.0));
        points.push(SpherePoint::new(PI, 0.0));
        let (north, south) = (n, n + 1);
        let idx = |r: usize, j: usize| r * np + (j % np);
        let mut triangles = Vec::with_capacity(2 * nt * np);
        for j in 0..np {
            triangles.push([north, idx(0, j), idx(0, j + 1)]);
            triangles.push([south, idx(nt - 1, j + 1), idx(nt - 1, j)]);
            for r in 0..nt - 1 {
                triangles.push([idx(r, j), idx(r + 1, j), idx(r + 1, j + 1)]);
                triangles.push([idx(r, j), idx(r + 1, j + 1), idx(r, j + 1)]);
            }
        }
        let xyz: Vec<[f64; 3]> = points.iter().map(|p| p.xyz()).collect();
        for t in triangles.iter_mut() {
            if triple(&xyz[t[0]], &xyz[t[1]], &xyz[t[2]]) < 0.0 {
                t.swap(1, 2);
            }
        }
        Self {
            points,
            triangles,
            n_grid: n,
        }
    }

    /// Undirected edges, each listed once.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }
}

pub fn triple(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Signed solid angle of the geodesic triangle (a, b, c) on the unit sphere.
pub fn signed_solid_angle(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let d = |x: &[f64; 3], y: &[f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let num = triple(a, b, c);
    let den = 1.0 + d(a, b) + d(b, c) + d(c, a);
    2.0 * num.atan2(den)
}

/// Mapping degree of a map from the sphere to the unit sphere, sampled at mesh vertices.
pub fn mapping_degree(mesh: &SphereMesh, values: &[[f64; 3]]) -> f64 {
    let unit: Vec<[f64; 3]> = values
        .iter()
        .map(|v| {
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / r, v[1] / r, v[2] / r]
        })
        .collect();
    let total: f64 = mesh
        .triangles
        .iter()
        .map(|t| signed_solid_angle(&unit[t[0]], &unit[t[1]], &unit[t[2]]))
        .sum();
    total / (4.0 * PI)
}

/// First Chern number of an oriented plane field W(z) ⊂ ℝ⁴, given at mesh vertices by
/// orthonormal frames (w₁, w₂) with w₂ the +90° rotation of w₁. Lattice link-variable sum,
/// exact for any phase choice of the frames.
pub fn plane_bundle_degree(mesh: &SphereMesh, frames: &[[nalgebra::Vector4<f64>; 2]]) -> f64 {
    use num_complex::Complex64;
    let link = |a: usize, b: usize| {
        let (fa, fb) = (&frames[a], &frames[b]);
        let o = |i: usize, k: usize| fa[i].dot(&fb[k]);
        // rotation part of the overlap, so that U_ba = conj(U_ab)
        Complex64::new(o(0, 0) + o(1, 1), o(1, 0) - o(0, 1))
    };
    let total: f64 = mesh
        .triangles
        .iter()
        .map(|t| (link(t[0], t[1]) * link(t[1], t[2]) * link(t[2], t[0])).arg())
        .sum();
    -total / (2.0 * PI)
}
