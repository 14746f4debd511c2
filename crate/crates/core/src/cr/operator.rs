use nalgebra::{Matrix4, Vector4};
use ndarray::{Array1, Array2};
use std::sync::OnceLock;

use crate::error::{CrError, Result};
use crate::sphere::{dbar0, mode_count, modes, AntiForm, Section, SpherePoint, Spectral};
use crate::sphere::wigner::lowering_coeff;

/// A real-linear map ℝ⁴ → ℝ⁴ per grid node; the image is the value of a
/// (0,1)-form on e_θ.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleHom {
    pub samples: Vec<Matrix4<f64>>,
}

impl BundleHom {
    pub fn zero(n_nodes: usize) -> Self {
        Self {
            samples: vec![Matrix4::zeros(); n_nodes],
        }
    }

    pub fn from_fn(spec: &Spectral, f: impl Fn(&SpherePoint) -> Matrix4<f64>) -> Self {
        Self {
            samples: spec.grid.points().iter().map(f).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|m| m * a).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.samples.len(), other.samples.len());
        Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Smooth random map Y(z) = Σ_k α_k(z) β_k(z)ᵀ with α_k, β_k random band-limited
    /// fields of degree ≤ `band`, rescaled so that the sup norm equals `amplitude`.
    pub fn random_smooth(spec: &Spectral, band: usize, amplitude: f64, seed: u64) -> Self {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let band = band.min(spec.l_max);
        let mut samples = vec![Matrix4::zeros(); spec.n_nodes()];
        for _ in 0..4 {
            let mut a = AntiForm::zeros(band);
            let mut b = Section::zeros(band);
            for c in 0..2 {
                for (l, m) in modes(band, -1) {
                    let z = num_complex::Complex64::new(
                        StandardNormal.sample(&mut rng),
                        StandardNormal.sample(&mut rng),
                    );
                    a.set_coeff(c, l, m, z);
                }
                for (l, m) in modes(band, 0) {
                    let z = num_complex::Complex64::new(
                        StandardNormal.sample(&mut rng),
                        StandardNormal.sample(&mut rng),
                    );
                    b.set_coeff(c, l, m, z);
                }
            }
            let av = spec.synthesize(&a.retruncate(spec.l_max));
            let bv = spec.synthesize(&b.retruncate(spec.l_max));
            for (i, s) in samples.iter_mut().enumerate() {
                *s += av[i] * bv[i].transpose();
            }
        }
        let y = Self { samples };
        let n = y.sup_norm();
        y.scale(amplitude / n)
    }

    /// Pseudo-spectral action: pointwise multiplication, then analysis.
    pub fn apply(&self, spec: &Spectral, x: &Section) -> AntiForm {
        let v = spec.synthesize(x);
        let w: Vec<Vector4<f64>> = v.iter().zip(&self.samples).map(|(v, m)| m * v).collect();
        spec.analyze(&w)
    }

    /// Pointwise operator norm bound max_z ‖Y(z)‖₂ (bounds the induced map on
    /// node values).
    pub fn sup_norm(&self) -> f64 {
        self.samples
            .iter()
            .map(|m| m.singular_values().max())
            .fold(0.0, f64::max)
    }

    /// Fraction of the sampled energy of the columns Y ē_k that the spin -1
    /// truncation does not reproduce. Zero for band-limited samples.
    pub fn aliasing_fraction(&self, spec: &Spectral) -> f64 {
        let mut lost = 0.0;
        let mut total = 0.0;
        for k in 0..4 {
            let col: Vec<Vector4<f64>> = self.samples.iter().map(|m| m.column(k).into()).collect();
            let f: AntiForm = spec.analyze(&col);
            let back = spec.synthesize(&f);
            for ((a, b), n) in col.iter().zip(&back).zip(&spec.grid.nodes) {
                lost += n.weight * (a - b).norm_squared();
                total += n.weight * a.norm_squared();
            }
        }
        if total == 0.0 {
            0.0
        } else {
            lost / total
        }
    }
}

/// D = ∂̄₀ + ½Y with its dense real matrix (AntiForm coefficients × Section coefficients).
#[derive(Debug, Clone)]
pub struct CROperator {
    pub l_max: usize,
    pub y: BundleHom,
    pub matrix: Array2<f64>,
    pub tag: String,
    sigma_max: OnceLock<f64>,
}

/// Real matrix of ∂̄₀ at truncation `l`.
pub fn dbar0_matrix(l: usize) -> Array2<f64> {
    let ns = mode_count(l, 0);
    let na = mode_count(l, -1);
    let mut m = Array2::zeros((4 * na, 4 * ns));
    for c in 0..2 {
        for (idx, (ll, mm)) in modes(l, 0).enumerate() {
            if ll == 0 {
                continue;
            }
            let f = 0.5 * lowering_coeff(2 * ll as i32, 0);
            let ia = crate::sphere::mode_index(ll, mm, -1);
            for r in 0..2 {
                m[[2 * (c * na + ia) + r, 2 * (c * ns + idx) + r]] = f;
            }
        }
    }
    m
}

/// Real matrix of the pseudo-spectral multiplication by Y.
pub fn y_matrix(spec: &Spectral, y: &BundleHom) -> Result<Array2<f64>> {
    check_samples(spec, y)?;
    Ok(spec.multiplication_matrix(&y.samples))
}

/// Same matrix built one column at a time through synthesis and analysis.
pub fn y_matrix_columnwise(spec: &Spectral, y: &BundleHom) -> Result<Array2<f64>> {
    check_samples(spec, y)?;
    let l = spec.l_max;
    let ncol = 4 * mode_count(l, 0);
    let nrow = 4 * mode_count(l, -1);
    let mut m = Array2::zeros((nrow, ncol));
    for j in 0..ncol {
        let col = y.apply(spec, &Section::basis(l, j)).to_real();
        for (i, v) in col.into_iter().enumerate() {
            m[[i, j]] = v;
        }
    }
    Ok(m)
}

fn check_samples(spec: &Spectral, y: &BundleHom) -> Result<()> {
    if y.samples.len() != spec.n_nodes() {
        return Err(CrError::GridMismatch(format!(
            "bundle map has {} samples, grid has {} nodes",
            y.samples.len(),
            spec.n_nodes()
        )));
    }
    Ok(())
}

/// Assemble D = ∂̄₀ + ½Y on the context's grid.
pub fn assemble(spec: &Spectral, y: &BundleHom, tag: &str) -> Result<CROperator> {
    if !spec.analysis_exact() {
        return Err(CrError::GridMismatch(format!(
            "grid resolves degree {} < truncation {}",
            spec.grid.exact_degree(),
            spec.l_max
        )));
    }
    let mut matrix = dbar0_matrix(spec.l_max);
    let ym = y_matrix(spec, y)?;
    matrix.scaled_add(0.5, &ym);
    Ok(CROperator {
        l_max: spec.l_max,
        y: y.clone(),
        matrix,
        tag: tag.to_string(),
        sigma_max: OnceLock::new(),
    })
}

impl CROperator {
    pub fn from_parts(l_max: usize, y: BundleHom, matrix: Array2<f64>, tag: &str) -> Self {
        Self {
            l_max,
            y,
            matrix,
            tag: tag.to_string(),
            sigma_max: OnceLock::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, x: &Section) -> AntiForm {
        let v = self.matrix.dot(&Array1::from(x.to_real()));
        AntiForm::from_real(self.l_max, v.as_slice().unwrap()).unwrap()
    }

    /// Adjoint action on AntiForm coefficients.
    pub fn apply_adjoint(&self, a: &AntiForm) -> Section {
        let v = self.matrix.t().dot(&Array1::from(a.to_real()));
        Section::from_real(self.l_max, v.as_slice().unwrap()).unwrap()
    }

    /// Largest singular value, by power iteration on DᵀD.
    pub fn sigma_max(&self) -> f64 {
        *self.sigma_max.get_or_init(|| power_sigma_max(&self.matrix))
    }

    /// D + t·(½ Y') for another bundle map; the matrix part is reused.
    pub fn perturbed(&self, spec: &Spectral, yp: &BundleHom, t: f64, tag: &str) -> Result<Self> {
        let ym = y_matrix(spec, yp)?;
        let mut matrix = self.matrix.clone();
        matrix.scaled_add(0.5 * t, &ym);
        Ok(Self::from_parts(
            self.l_max,
            self.y.add(&yp.scale(t)),
            matrix,
            tag,
        ))
    }
}

fn power_sigma_max(a: &Array2<f64>) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    // deterministic start vector with all modes present
    let mut x = Array1::from_iter((0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0));
    let mut est = 0.0;
    for _ in 0..300 {
        let y = a.dot(&x);
        let z = a.t().dot(&y);
        let nz = z.dot(&z).sqrt();
        if nz == 0.0 {
            return 0.0;
        }
        let new = (y.dot(&y) / x.dot(&x)).sqrt();
        x = z / nz;
        if (new - est).abs() <= 1e-10 * new {
            est = new;
            break;
        }
        est = new;
    }
    est
}

/// Frame operator: the unique Y with D e_i = 0, Y(z) = -2 [ν_i(z)] [e_i(z)]⁻¹
/// where ν_i = ∂̄₀ e_i (the factor 2 compensates the ½ in D = ∂̄₀ + ½Y).
pub fn frame_bundle_hom(spec: &Spectral, e: &[Section; 4], tau_sr: f64) -> Result<BundleHom> {
    let vals: Vec<Vec<Vector4<f64>>> = e.iter().map(|s| spec.synthesize(s)).collect();
    let nus: Vec<Vec<Vector4<f64>>> = e.iter().map(|s| spec.synthesize(&dbar0(s))).collect();
    let mut samples = Vec::with_capacity(spec.n_nodes());
    for i in 0..spec.n_nodes() {
        let em = Matrix4::from_columns(&[vals[0][i], vals[1][i], vals[2][i], vals[3][i]]);
        let sv = em.singular_values();
        let ratio = sv.min() / sv.max().max(f64::MIN_POSITIVE);
        if ratio <= tau_sr {
            return Err(CrError::FrameDegenerate {
                node: i,
                sigma: ratio,
            });
        }
        let nm = Matrix4::from_columns(&[nus[0][i], nus[1][i], nus[2][i], nus[3][i]]);
        let inv = em
            .try_inverse()
            .ok_or(CrError::FrameDegenerate { node: i, sigma: 0.0 })?;
        samples.push(-2.0 * nm * inv);
    }
    Ok(BundleHom { samples })
}

pub fn operator_from_frame(spec: &Spectral, e: &[Section; 4]) -> Result<CROperator> {
    let y = frame_bundle_hom(spec, e, crate::cr::TAU_SR)?;
    assemble(spec, &y, "frame")
}
