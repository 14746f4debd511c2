use nalgebra::{Matrix4, SymmetricEigen, Vector3, Vector4};
use std::sync::Arc;

use super::tangent::{as_matrix, MonoSource};
use crate::error::{CrError, Result};
use crate::sphere::{j0, SphereGrid, SpherePoint};

pub const TAU_PHI: f64 = 1e-10;

/// The complex structure that splits ℝ⁴ = im A ⊕ (im A)^⊥, makes A complex
/// linear and rotates the oriented complement by +90°.
pub fn phi(a: &[Vector4<f64>; 2]) -> Result<Matrix4<f64>> {
    let s = as_matrix(a).singular_values();
    if s.min() <= TAU_PHI {
        return Err(CrError::NearSingular {
            sigma: s.min(),
            location: "phi input".into(),
        });
    }
    let (w1, w2) = oriented_complement(a);
    let b = Matrix4::from_columns(&[a[0], a[1], w1, w2]);
    let bj = Matrix4::from_columns(&[a[1], -a[0], w2, -w1]);
    let inv = b.try_inverse().ok_or(CrError::NearSingular {
        sigma: 0.0,
        location: "phi basis".into(),
    })?;
    Ok(bj * inv)
}

/// Orthonormal basis (w₁, w₂) of (im A)^⊥ with (A1, Ai, w₁, w₂) positively oriented.
pub fn oriented_complement(a: &[Vector4<f64>; 2]) -> (Vector4<f64>, Vector4<f64>) {
    let q1 = a[0].normalize();
    let q2 = (a[1] - q1 * q1.dot(&a[1])).normalize();
    let mut w: Vec<Vector4<f64>> = Vec::new();
    // Gram-Schmidt on the standard basis, taking the two best-conditioned survivors
    let mut cands: Vec<Vector4<f64>> = (0..4)
        .map(|i| {
            let e = Vector4::from_fn(|r, _| (r == i) as i32 as f64);
            e - q1 * q1.dot(&e) - q2 * q2.dot(&e)
        })
        .collect();
    cands.sort_by(|x, y| y.norm().partial_cmp(&x.norm()).unwrap());
    for c in cands {
        let mut v = c;
        for u in &w {
            v -= u * u.dot(&v);
        }
        if v.norm() > 1e-6 {
            w.push(v.normalize());
        }
        if w.len() == 2 {
            break;
        }
    }
    let (w1, mut w2) = (w[0], w[1]);
    if Matrix4::from_columns(&[a[0], a[1], w1, w2]).determinant() < 0.0 {
        w2 = -w2;
    }
    (w1, w2)
}

/// Self-dual and anti-self-dual partners of J₀ spanning the compatible sphere.
pub fn j_sphere_basis() -> [Matrix4<f64>; 3] {
    let jb = Matrix4::new(
        0.0, 0.0, -1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        1.0, 0.0, 0.0, 0.0, //
        0.0, -1.0, 0.0, 0.0,
    );
    let jc = Matrix4::new(
        0.0, 0.0, 0.0, -1.0, //
        0.0, 0.0, -1.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        1.0, 0.0, 0.0, 0.0,
    );
    [j0(), jb, jc]
}

/// Orthogonal complex structure in the same component, via the J-invariant metric
/// g = I + JᵀJ: J' = g^{1/2} J g^{-1/2}.
pub fn orthogonalize(j: &Matrix4<f64>) -> Matrix4<f64> {
    let g = Matrix4::identity() + j.transpose() * j;
    let e = SymmetricEigen::new(g);
    let sq = e.eigenvectors
        * Matrix4::from_diagonal(&e.eigenvalues.map(|v| v.sqrt()))
        * e.eigenvectors.transpose();
    let isq = e.eigenvectors
        * Matrix4::from_diagonal(&e.eigenvalues.map(|v| 1.0 / v.sqrt()))
        * e.eigenvectors.transpose();
    sq * j * isq
}

/// Point of the compatible-structure sphere: the self-dual part of ω(x, y) = ⟨Jx, y⟩.
pub fn self_dual_vector(j: &Matrix4<f64>) -> Vector3<f64> {
    let jo = orthogonalize(j);
    let w = |i: usize, k: usize| jo[(k, i)];
    Vector3::new(
        0.5 * (w(0, 1) + w(2, 3)),
        0.5 * (w(0, 2) - w(1, 3)),
        0.5 * (w(0, 3) + w(1, 2)),
    )
}

pub type AcsSource = Arc<dyn Fn(&SpherePoint) -> Matrix4<f64> + Send + Sync>;

/// A field of complex structures J(z) on ℝ⁴, sampled on a grid, with its
/// generating rule kept for refinement.
#[derive(Clone)]
pub struct AcsField {
    pub grid: SphereGrid,
    pub samples: Vec<Matrix4<f64>>,
    pub source: AcsSource,
}

impl std::fmt::Debug for AcsField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AcsField")
            .field("nodes", &self.samples.len())
            .finish()
    }
}

impl AcsField {
    pub fn from_fn(grid: &SphereGrid, source: AcsSource) -> Self {
        let samples = grid.points().iter().map(|p| source(p)).collect();
        Self {
            grid: grid.clone(),
            samples,
            source,
        }
    }

    pub fn constant_j0(grid: &SphereGrid) -> Self {
        Self::from_fn(grid, Arc::new(|_| j0()))
    }

    /// J(z) = Φ(A(z)) for a tangent monomorphism.
    pub fn from_mono(grid: &SphereGrid, source: MonoSource) -> Result<Self> {
        for p in grid.points() {
            phi(&source.eval(&p))?;
        }
        Ok(Self::from_fn(
            grid,
            Arc::new(move |p| phi(&source.eval(p)).expect("injective monomorphism")),
        ))
    }

    /// J(x) = x₀ J₀ + x₁ J_b + x₂ J_c: the identity map onto the compatible sphere.
    pub fn synthetic_degree_one(grid: &SphereGrid) -> Self {
        let [a, b, c] = j_sphere_basis();
        Self::from_fn(
            grid,
            Arc::new(move |p| {
                let x = p.xyz();
                a * x[0] + b * x[1] + c * x[2]
            }),
        )
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self::from_fn(&self.grid.refined(factor), self.source.clone())
    }

    /// max ‖J² + I‖ over nodes.
    pub fn square_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|j| (j * j + Matrix4::identity()).norm())
            .fold(0.0, f64::max)
    }

    pub fn at(&self, p: &SpherePoint) -> Matrix4<f64> {
        (self.source)(p)
    }
}
