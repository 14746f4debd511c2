use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::sphere::{make_grid, SphereMesh, SpherePoint};

type C = Complex64;
type C2 = [C; 2];

fn inner(a: &C2, b: &C2) -> C {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// Unit generator (1, z)/|(1, z)| of the tautological line O(-1) ⊂ ℂ².
pub fn tautological(p: &SpherePoint) -> C2 {
    let (s, c) = (0.5 * p.theta).sin_cos();
    [C::new(c, 0.0), C::from_polar(s, p.phi)]
}

/// Unit generator (-z̄, 1)/|(-z̄, 1)| of its orthogonal complement, the quotient O(1).
pub fn complement(p: &SpherePoint) -> C2 {
    let (s, c) = (0.5 * p.theta).sin_cos();
    [-C::from_polar(s, -p.phi), C::new(c, 0.0)]
}

/// Lattice first Chern number of a line field: -Σ arg(U_ab U_bc U_ca) / 2π.
pub fn lattice_chern(mesh: &SphereMesh, line: &dyn Fn(&SpherePoint) -> C2) -> f64 {
    let v: Vec<C2> = mesh.points.iter().map(line).collect();
    let total: f64 = mesh
        .triangles
        .iter()
        .map(|t| (inner(&v[t[0]], &v[t[1]]) * inner(&v[t[1]], &v[t[2]]) * inner(&v[t[2]], &v[t[0]])).arg())
        .sum();
    -total / (2.0 * PI)
}

/// Chern density (i/2π)F per unit area of the round sphere, from the holonomy of a small
/// positively oriented (θ, φ) square.
pub fn loop_density(line: &dyn Fn(&SpherePoint) -> C2, p: &SpherePoint, h: f64) -> f64 {
    let q = |dt: f64, dp: f64| line(&SpherePoint::new(p.theta + dt, p.phi + dp));
    let corners = [q(-h, -h), q(h, -h), q(h, h), q(-h, h)];
    let mut hol = C::new(1.0, 0.0);
    for i in 0..4 {
        hol *= inner(&corners[i], &corners[(i + 1) % 4]);
    }
    let area = p.theta.sin() * 4.0 * h * h;
    -hol.arg() / (2.0 * PI * area)
}

/// Quotient curvature density |P_⊥ ∂_z s|² / (π |s|² λ) of s = (1, z), with λ the round
/// conformal factor.
pub fn second_fundamental_density(p: &SpherePoint) -> f64 {
    let z = p.chart_z();
    let s2 = 1.0 + z.norm_sqr();
    let q = complement(p);
    let dz_s: C2 = [C::new(0.0, 0.0), C::new(1.0, 0.0)];
    let proj = inner(&q, &dz_s).norm_sqr();
    let lambda = 4.0 / (s2 * s2);
    proj / (PI * s2 * lambda)
}

#[derive(Debug, Clone, Serialize)]
pub struct QuotientReport {
    pub nodes: usize,
    /// curvature of the flat ambient ℂ² restricted to the line
    pub ambient_curvature: f64,
    pub min_density: f64,
    pub max_density: f64,
    /// max |loop density - second fundamental form density|
    pub max_sff_mismatch: f64,
    /// max |loop density - 1/4π|
    pub max_closed_form_mismatch: f64,
    pub chern_quadrature: f64,
    pub chern_lattice: f64,
    pub tautological_lattice: f64,
    pub pointwise_ok: bool,
    pub chern_ok: bool,
}

pub const QUOTIENT_TOL: f64 = 1e-8;
pub const CHERN_TOL: f64 = 1e-6;

/// The complement of O(-1) ⊂ ℂ² over CP¹ has curvature ≥ that of the flat ambient bundle,
/// with total Chern number +1. Evaluated on the 4× refinement of the degree-`l` grid.
pub fn quotient_curvature_probe(l: usize) -> QuotientReport {
    let grid = make_grid(l).expect("valid degree").refined(4);
    let h = 1e-4;
    let mut min: f64 = f64::INFINITY;
    let mut max: f64 = f64::NEG_INFINITY;
    let mut sff: f64 = 0.0;
    let mut closed: f64 = 0.0;
    let mut integral = 0.0;
    for i in 0..grid.len() {
        let p = grid.point(i);
        let d = loop_density(&complement, &p, h);
        min = min.min(d);
        max = max.max(d);
        sff = sff.max((d - second_fundamental_density(&p)).abs());
        closed = closed.max((d - 1.0 / (4.0 * PI)).abs());
        integral += grid.weight(i) * d;
    }
    let mesh = SphereMesh::new(&grid);
    let chern_lattice = lattice_chern(&mesh, &complement);
    QuotientReport {
        nodes: grid.len(),
        ambient_curvature: 0.0,
        min_density: min,
        max_density: max,
        max_sff_mismatch: sff,
        max_closed_form_mismatch: closed,
        chern_quadrature: integral,
        chern_lattice,
        tautological_lattice: lattice_chern(&mesh, &tautological),
        pointwise_ok: min >= -QUOTIENT_TOL,
        chern_ok: (integral - 1.0).abs() <= CHERN_TOL && (chern_lattice - 1.0).abs() <= CHERN_TOL,
    }
}
