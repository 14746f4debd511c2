use nalgebra::{Matrix2, Matrix4, SMatrix, Vector4};
use serde::Serialize;

use crate::cr::CROperator;
use crate::error::{CrError, Result};
use crate::sphere::{j0, mapping_degree, AntiForm, Section, SphereMesh, SpherePoint, Spectral};

pub type Matrix6 = SMatrix<f64, 6, 6>;

/// R-invariant almost complex structure on the total space S² × ℂ².
///
/// Tangent vectors are (h, v) with h = a e_θ + b e_φ and v ∈ ℝ⁴; the structure is
/// J(h, v) = (j h, Ŷ_{(z,u)} h + i v), where Ŷ_{(z,u)} is the complex-antilinear map with
/// Ŷ(e_φ) = Y(z) u and Ŷ(e_θ) = i Y(z) u.
#[derive(Debug, Clone)]
pub struct AmbientAcs {
    pub l_max: usize,
    pub y: Vec<Matrix4<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AcsChecks {
    pub max_square_defect: f64,
    pub max_affine_defect: f64,
    pub samples: usize,
}

impl AmbientAcs {
    pub fn new(d: &CROperator) -> Self {
        Self {
            l_max: d.l_max,
            y: d.y.samples.clone(),
        }
    }

    /// (Ŷ e_θ, Ŷ e_φ) at the fiber point u over `node`.
    pub fn y_hat(&self, node: usize, u: &Vector4<f64>) -> (Vector4<f64>, Vector4<f64>) {
        let yu = self.y[node] * u;
        (j0() * yu, yu)
    }

    /// J as a 6×6 matrix in the basis (e_θ, e_φ, ℝ⁴).
    pub fn matrix_at(&self, node: usize, u: &Vector4<f64>) -> Matrix6 {
        let mut m = Matrix6::zeros();
        let j = Matrix2::new(0.0, -1.0, 1.0, 0.0);
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&j);
        let (a, b) = self.y_hat(node, u);
        m.fixed_view_mut::<4, 1>(2, 0).copy_from(&a);
        m.fixed_view_mut::<4, 1>(2, 1).copy_from(&b);
        m.fixed_view_mut::<4, 4>(2, 2).copy_from(&j0());
        m
    }

    /// max ‖J² + I‖ and the failure of u ↦ J_{(z,u)} to be affine, over random fiber points.
    pub fn checks(&self, n_fiber: usize, seed: u64) -> AcsChecks {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut sq: f64 = 0.0;
        let mut aff: f64 = 0.0;
        let mut count = 0;
        for node in 0..self.y.len() {
            for _ in 0..n_fiber {
                let mut draw = || Vector4::from_fn(|_, _| StandardNormal.sample(&mut rng));
                let (u1, u2) = (draw(), draw());
                let m = self.matrix_at(node, &u1);
                sq = sq.max((m * m + Matrix6::identity()).norm());
                let lin = self.matrix_at(node, &(u1 + u2)) - self.matrix_at(node, &u1)
                    - self.matrix_at(node, &u2)
                    + self.matrix_at(node, &Vector4::zeros());
                aff = aff.max(lin.norm() / (1.0 + m.norm()));
                count += 1;
            }
        }
        AcsChecks {
            max_square_defect: sq,
            max_affine_defect: aff,
            samples: count,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DbarJReport {
    /// L² norm of the vertical part of ∂̄_J f after analysis to the truncation
    pub residual: f64,
    /// same, by quadrature of the pointwise values before analysis
    pub pointwise_l2: f64,
    pub degree: i64,
    /// ‖Dξ‖ for comparison
    pub operator_norm: f64,
}

/// ∂̄_J f = ½(df + J df j₀) for f(z) = (w(z), u(z)), with w the identity on the grid.
pub fn dbar_j_residual(
    acs: &AmbientAcs,
    spec: &Spectral,
    d: &CROperator,
    w: &dyn Fn(&SpherePoint) -> SpherePoint,
    u: &Section,
) -> Result<DbarJReport> {
    if acs.y.len() != spec.n_nodes() || u.l_max() != spec.l_max {
        return Err(CrError::GridMismatch("ambient structure and map use different grids".into()));
    }
    let mesh = SphereMesh::new(&spec.grid);
    let images: Vec<[f64; 3]> = mesh.points.iter().map(|p| w(p).xyz()).collect();
    let deg = mapping_degree(&mesh, &images);
    let degree = deg.round() as i64;
    if (deg - 1.0).abs() > 1e-6 {
        return Err(CrError::DegreeMismatch { degree });
    }
    let pts = spec.grid.points();
    let moved = pts
        .iter()
        .zip(&images)
        .map(|(p, q)| {
            let a = p.xyz();
            ((a[0] - q[0]).powi(2) + (a[1] - q[1]).powi(2) + (a[2] - q[2]).powi(2)).sqrt()
        })
        .fold(0.0, f64::max);
    if moved > 1e-12 {
        return Err(CrError::NotApplicable(format!(
            "map is not parameterized as a section (moves nodes by {moved:e})"
        )));
    }
    let uv = spec.synthesize(u);
    let (du_t, du_p) = spec.partials(u);
    let mut vert = Vec::with_capacity(uv.len());
    let mut pointwise = 0.0;
    for z in 0..uv.len() {
        // h = e_θ: df(e_θ) = (e_θ, ∂_θ u), j₀ e_θ = e_φ, df(e_φ) = (e_φ, ∂_φ u / sin θ)
        let (_, yhat_phi) = acs.y_hat(z, &uv[z]);
        let v = 0.5 * (du_t[z] + yhat_phi + j0() * du_p[z]);
        pointwise += spec.grid.weight(z) * v.norm_squared();
        vert.push(v);
    }
    let form: AntiForm = spec.analyze(&vert);
    Ok(DbarJReport {
        residual: form.norm(),
        pointwise_l2: pointwise.sqrt(),
        degree,
        operator_norm: d.apply(u).norm(),
    })
}
