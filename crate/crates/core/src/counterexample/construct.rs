use nalgebra::{DMatrix, Vector4};
use serde::Serialize;

use super::acs::AcsField;
use super::lift::{lift_acs, obstruction_degree, LiftField};
use super::tangent::{MonoSource, WhitneySphere};
use crate::cr::{
    certify_superregular, kernel_cokernel, operator_from_frame, BasisChoice, CROperator,
    KernelReport, SuperregCertificate, OVERSAMPLE,
};
use crate::error::{CrError, Result};
use crate::sphere::{l2_inner, Section, Spectral, SpherePoint};

pub const MIN_L: usize = 8;
pub const E5_RESIDUAL_TOL: f64 = 1e-7;

/// Scalar gauge clearing the denominators of G₁ and f₁.
pub fn gauge(p: &SpherePoint) -> f64 {
    let x0 = p.xyz()[0];
    (1.0 + x0 * x0).powi(3)
}

#[derive(Debug, Clone)]
pub struct ConstructedExample {
    pub d: CROperator,
    pub e: [Section; 5],
    pub report: KernelReport,
    pub lift: LiftField,
    pub obstruction_degree: i64,
    pub certificate: SuperregCertificate,
    /// ‖D e₅‖ / (σ_max ‖e₅‖)
    pub e5_residual: f64,
    /// sine of the angle between e₅ and span{e₁..e₄}
    pub e5_angle: f64,
    /// max over the five sections of the share of L² norm above L − 2
    pub max_tail_fraction: f64,
}

pub fn construct_frame(spec: &Spectral) -> Result<([Section; 5], LiftField, i64)> {
    if spec.l_max < MIN_L {
        return Err(CrError::UnderResolved {
            l: spec.l_max,
            min: MIN_L,
        });
    }
    let j = AcsField::from_mono(&spec.grid, MonoSource::Df1)?;
    let deg = obstruction_degree(&j)?;
    let lift = lift_acs(&j)?;
    let pts = spec.grid.points();
    let mut cols: Vec<Vec<Vector4<f64>>> = vec![Vec::with_capacity(pts.len()); 5];
    for (v, p) in pts.iter().enumerate() {
        let g = lift.at(v) * gauge(p);
        for (i, col) in cols.iter_mut().enumerate().take(4) {
            col.push(g.column(i).into_owned());
        }
        cols[4].push(g * WhitneySphere.f1(p));
    }
    let e: Vec<Section> = cols.iter().map(|c| spec.analyze(c)).collect();
    Ok((
        [e[0].clone(), e[1].clone(), e[2].clone(), e[3].clone(), e[4].clone()],
        lift,
        deg,
    ))
}

/// Sine of the angle between `v` and span(`basis`) in L².
pub fn angle_to_span(v: &Section, basis: &[&Section]) -> Result<f64> {
    Ok(project_off(v, basis)?.norm() / v.norm())
}

pub fn build_superregular_with_cokernel(spec: &Spectral) -> Result<ConstructedExample> {
    let (e, lift, deg) = construct_frame(spec)?;
    let frame = [e[0].clone(), e[1].clone(), e[2].clone(), e[3].clone()];
    let d = operator_from_frame(spec, &frame)?;
    let report = kernel_cokernel(&d)?;
    let smax = report.sigma_max;
    let e5_residual = d.apply(&e[4]).norm() / (smax * e[4].norm());
    if e5_residual > E5_RESIDUAL_TOL {
        return Err(CrError::ResidualFail {
            what: "D e5".into(),
            value: e5_residual,
            tol: E5_RESIDUAL_TOL,
        });
    }
    let certificate = certify_superregular(spec, &d, BasisChoice::Given(&frame), None)?;
    let e5_angle = angle_to_span(&e[4], &[&e[0], &e[1], &e[2], &e[3]])?;
    let max_tail_fraction = e
        .iter()
        .map(|s| s.tail_fraction(spec.l_max.saturating_sub(2)))
        .fold(0.0, f64::max);
    Ok(ConstructedExample {
        d,
        e,
        report,
        lift,
        obstruction_degree: deg,
        certificate,
        e5_residual,
        e5_angle,
        max_tail_fraction,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Normalization {
    #[serde(skip)]
    pub e: [Section; 5],
    pub p0_node: usize,
    pub p0: SpherePoint,
    pub zero_node: usize,
    pub zero_point: SpherePoint,
    pub alpha: f64,
    pub beta: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub h_at_p0: f64,
    /// max_j |⟨e₅′, e_j⟩_{L²}| / (‖e₅′‖ ‖e_j‖), j ≤ 3
    pub orthogonality: f64,
    pub oversample: usize,
}

/// Coordinates of `v` in the frame (e₁..e₄) at every node of `spec`. The last entry is
/// h = ⟨e₄, v⟩ in the pointwise metric for which the frame is orthonormal.
pub fn frame_coordinates(spec: &Spectral, frame: &[Section], v: &Section) -> Result<Vec<Vector4<f64>>> {
    let cols: Vec<Vec<Vector4<f64>>> = frame.iter().map(|s| spec.synthesize(s)).collect();
    let vals = spec.synthesize(v);
    (0..spec.n_nodes())
        .map(|i| {
            let m = nalgebra::Matrix4::from_columns(&[cols[0][i], cols[1][i], cols[2][i], cols[3][i]]);
            m.lu().solve(&vals[i]).ok_or(CrError::FrameDegenerate { node: i, sigma: 0.0 })
        })
        .collect()
}

pub fn h_values(spec: &Spectral, e: &[Section; 5]) -> Result<Vec<f64>> {
    Ok(frame_coordinates(spec, &e[..4], &e[4])?
        .iter()
        .map(|c| c[3])
        .collect())
}

/// e₅′ = α P(e₅ + βe₄) with P the L² projection off span{e₁,e₂,e₃}, β the smallest shift
/// making h ≥ 0 on the oversampled grid and α fixing max h = h(p₀) = 1.
pub fn normalize_e5(spec: &Spectral, e: &[Section; 5]) -> Result<Normalization> {
    let over = spec.oversampled(OVERSAMPLE);
    let head = [&e[0], &e[1], &e[2]];
    let v = project_off(&e[4], &head)?;
    let w = project_off(&e[3], &head)?;
    let h0 = h_values(&over, &[e[0].clone(), e[1].clone(), e[2].clone(), e[3].clone(), v.clone()])?;
    let (zero_node, neg) = argmax(h0.iter().map(|x| -x));
    let beta = neg;
    let shifted = v.axpy(beta, &w);
    let (p0_node, hmax) = argmax(h0.iter().map(|x| x + beta));
    if hmax <= 0.0 {
        return Err(CrError::NotNormalizable { violation: hmax });
    }
    let alpha = 1.0 / hmax;
    let out = [
        e[0].clone(),
        e[1].clone(),
        e[2].clone(),
        e[3].clone(),
        shifted.scale(alpha),
    ];
    let hf = h_values(&over, &out)?;
    let h_min = hf.iter().cloned().fold(f64::INFINITY, f64::min);
    let h_max = hf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if h_min < -1e-9 {
        return Err(CrError::NotNormalizable { violation: h_min });
    }
    let mut orth: f64 = 0.0;
    for ej in &out[..3] {
        orth = orth.max(l2_inner(&out[4], ej)?.abs() / (out[4].norm() * ej.norm()));
    }
    Ok(Normalization {
        h_at_p0: hf[p0_node],
        e: out,
        p0_node,
        p0: over.grid.point(p0_node),
        zero_node,
        zero_point: over.grid.point(zero_node),
        alpha,
        beta,
        h_min,
        h_max,
        orthogonality: orth,
        oversample: OVERSAMPLE,
    })
}

fn argmax(it: impl Iterator<Item = f64>) -> (usize, f64) {
    it.enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc })
}

/// L² projection of `v` off span(`basis`).
pub fn project_off(v: &Section, basis: &[&Section]) -> Result<Section> {
    let n = basis.len();
    let mut g = DMatrix::zeros(n, n);
    let mut r = nalgebra::DVector::zeros(n);
    for i in 0..n {
        for k in 0..n {
            g[(i, k)] = l2_inner(basis[i], basis[k])?;
        }
        r[i] = l2_inner(basis[i], v)?;
    }
    let c = g.lu().solve(&r).ok_or(CrError::Linalg("singular Gram matrix".into()))?;
    let mut out = v.clone();
    for i in 0..n {
        out = out.axpy(-c[i], basis[i]);
    }
    Ok(out)
}
