use nalgebra::{Matrix4, Matrix4x2, Vector4};
use num_complex::Complex64;
use serde::Serialize;

use crate::sphere::{SphereGrid, SpherePoint};

pub fn c2_to_r4(u1: Complex64, u2: Complex64) -> Vector4<f64> {
    Vector4::new(u1.re, u1.im, u2.re, u2.im)
}

pub fn r4_to_c2(v: &Vector4<f64>) -> (Complex64, Complex64) {
    (Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MonoSource {
    F0,
    Df1,
}

impl MonoSource {
    /// (A(1), A(i)) where 1 ↔ e_θ and i ↔ e_φ.
    pub fn eval(&self, p: &SpherePoint) -> [Vector4<f64>; 2] {
        match self {
            MonoSource::F0 => f0_at(p),
            MonoSource::Df1 => WhitneySphere.df1(p),
        }
    }
}

/// F₀(e_θ) = dz(e_θ) (z̄², 1) / (1+|z|²)², complex linear, image on the line over [z̄² : 1].
/// Written in half-angle form so both charts stay bounded.
pub fn f0_at(p: &SpherePoint) -> [Vector4<f64>; 2] {
    let (s, c) = (0.5 * p.theta).sin_cos();
    let u1 = Complex64::from_polar(0.5 * s * s, -p.phi);
    let u2 = Complex64::from_polar(0.5 * c * c, p.phi);
    let i = Complex64::i();
    [c2_to_r4(u1, u2), c2_to_r4(i * u1, i * u2)]
}

/// Fixed orientation-preserving shear applied after the Whitney formula. The plain
/// Whitney sphere is conformal, so Φ∘df₁ is orthogonal and commutes with the
/// anti-self-dual structures, which enlarges the kernel of the constructed operator.
pub fn whitney_shear() -> Matrix4<f64> {
    Matrix4::new(
        1.0, 0.0, 0.05, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

/// The Whitney sphere x ↦ (x₁, x₂) / (1 - i x₀) in ℂ², followed by `whitney_shear`.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitneySphere;

impl WhitneySphere {
    pub fn raw(&self, p: &SpherePoint) -> Vector4<f64> {
        let x = p.xyz();
        let d = Complex64::new(1.0, -x[0]);
        c2_to_r4(x[1] / d, x[2] / d)
    }

    pub fn f1(&self, p: &SpherePoint) -> Vector4<f64> {
        whitney_shear() * self.raw(p)
    }

    fn differential(&self, p: &SpherePoint, v: [f64; 3]) -> Vector4<f64> {
        let x = p.xyz();
        let d = Complex64::new(1.0, -x[0]);
        let k = Complex64::new(0.0, v[0]) / (d * d);
        whitney_shear() * c2_to_r4(v[1] / d + x[1] * k, v[2] / d + x[2] * k)
    }

    pub fn df1(&self, p: &SpherePoint) -> [Vector4<f64>; 2] {
        [self.differential(p, p.e_theta()), self.differential(p, p.e_phi())]
    }
}

/// Samples of an injective real-linear map ℂ → ℝ⁴ per node.
#[derive(Debug, Clone)]
pub struct TangentMono {
    pub source: MonoSource,
    pub samples: Vec<[Vector4<f64>; 2]>,
    /// min over the 4× oversampled grid of σ_min / σ_max
    pub min_sigma_oversampled: f64,
    pub argmin_oversampled: SpherePoint,
}

impl TangentMono {
    pub fn sample(source: MonoSource, grid: &SphereGrid) -> Self {
        let samples = grid.points().iter().map(|p| source.eval(p)).collect();
        let over = grid.refined(4);
        let mut best = (f64::INFINITY, SpherePoint::new(0.0, 0.0));
        for p in over.points() {
            let s = normalized_sigma(&source.eval(&p));
            if s < best.0 {
                best = (s, p);
            }
        }
        Self {
            source,
            samples,
            min_sigma_oversampled: best.0,
            argmin_oversampled: best.1,
        }
    }
}

pub fn as_matrix(a: &[Vector4<f64>; 2]) -> Matrix4x2<f64> {
    Matrix4x2::from_columns(a)
}

/// σ_min / σ_max of the 4×2 matrix [A(1) A(i)].
pub fn normalized_sigma(a: &[Vector4<f64>; 2]) -> f64 {
    let s = as_matrix(a).singular_values();
    s.min() / s.max()
}

pub fn build_f0(grid: &SphereGrid) -> TangentMono {
    TangentMono::sample(MonoSource::F0, grid)
}

pub fn build_whitney_immersion(grid: &SphereGrid) -> (WhitneySphere, TangentMono) {
    (WhitneySphere, TangentMono::sample(MonoSource::Df1, grid))
}

/// Degree of the oriented normal plane field (im A)^⊥, rotated by the Φ convention.
pub fn normal_euler_number(source: MonoSource, grid: &SphereGrid) -> f64 {
    let mesh = crate::sphere::SphereMesh::new(grid);
    let frames: Vec<[Vector4<f64>; 2]> = mesh
        .points
        .iter()
        .map(|p| {
            let (w1, w2) = super::acs::oriented_complement(&source.eval(p));
            [w1, w2]
        })
        .collect();
    crate::sphere::plane_bundle_degree(&mesh, &frames)
}

/// Degree of the image plane field im A with complex structure A(1) ↦ A(i).
pub fn image_chern_number(source: MonoSource, grid: &SphereGrid) -> f64 {
    let mesh = crate::sphere::SphereMesh::new(grid);
    let frames: Vec<[Vector4<f64>; 2]> = mesh
        .points
        .iter()
        .map(|p| {
            let a = source.eval(p);
            let q1 = a[0].normalize();
            let q2 = (a[1] - q1 * q1.dot(&a[1])).normalize();
            [q1, q2]
        })
        .collect();
    crate::sphere::plane_bundle_degree(&mesh, &frames)
}
