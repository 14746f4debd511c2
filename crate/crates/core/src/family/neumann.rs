use ndarray::{Array1, Array2};
use serde::Serialize;

use super::patch::{FamilySample, PerturbationFamily};
use crate::cr::{index_certificate, CROperator, RankVerdict};
use crate::error::{CrError, Result};
use crate::sphere::{Section, Spectral};

const POWER_ITERS: usize = 300;
const SERIES_TOL: f64 = 1e-12;
pub const CONTINUATION_TOL: f64 = 1e-8;

/// F_s(ζ) = L̃_s⁻¹ π_C A_s P A_s ζ − P A_s ζ with its transpose, matrix-free.
struct FOp<'a> {
    fam: &'a PerturbationFamily,
    fs: &'a FamilySample,
    a: &'a Array2<f64>,
    eta: Array1<f64>,
}

impl<'a> FOp<'a> {
    fn new(fam: &'a PerturbationFamily, fs: &'a FamilySample, a: &'a Array2<f64>) -> Self {
        Self {
            fam,
            fs,
            a,
            eta: fam.factors.cokernel.column(0).to_owned(),
        }
    }

    fn apply(&self, z: &Array1<f64>) -> Array1<f64> {
        let w = self.fam.factors.pinv(&self.a.dot(z));
        let c = self.eta.dot(&self.a.dot(&w)) / self.fs.ell;
        &self.fs.v_perp * c - w
    }

    fn apply_t(&self, y: &Array1<f64>) -> Array1<f64> {
        let q = self.a.t().dot(&self.eta) * (self.fs.v_perp.dot(y) / self.fs.ell) - y;
        self.a.t().dot(&self.fam.factors.pinv_t(&q))
    }
}

fn power_norm(f: &FOp<'_>, n: usize) -> f64 {
    let mut x = Array1::from_iter((0..n).map(|i| ((i * 7919 % 104729) as f64 / 104729.0) - 0.5));
    x /= x.dot(&x).sqrt();
    let mut est = 0.0;
    for _ in 0..POWER_ITERS {
        let y = f.apply(&x);
        let z = f.apply_t(&y);
        let nz = z.dot(&z).sqrt();
        if nz == 0.0 {
            return 0.0;
        }
        let new = y.dot(&y).sqrt();
        x = z / nz;
        if (new - est).abs() <= 1e-10 * new {
            return new;
        }
        est = new;
    }
    est
}

/// Operator norm ‖F_s‖ by power iteration on FᵀF.
pub fn f_norm(fam: &PerturbationFamily, spec: &Spectral, fs: &FamilySample) -> Result<f64> {
    let a = fam.perturbation_matrix(spec, fs)?;
    let f = FOp::new(fam, fs, &a);
    Ok(power_norm(&f, fam.d.n_cols()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuedKernel {
    pub s: f64,
    pub t: f64,
    #[serde(skip)]
    pub basis: [Section; 4],
    pub neumann_terms: usize,
    /// max over basis vectors and series steps of ‖term_{n+1}‖ / ‖term_n‖
    pub contraction_ratio: f64,
    /// ‖ξ(v)‖ / ‖v‖ per basis vector
    pub correction_norms: [f64; 4],
    /// ‖D_{s,t}(v + ξ(v))‖ / ‖v‖ per basis vector
    pub residuals: [f64; 4],
    pub c: f64,
}

/// Kernel of D + tA_s continued from K_s by ξ = Σ_{n≥1} tⁿ F_sⁿ v.
pub fn neumann_continue(
    fam: &PerturbationFamily,
    spec: &Spectral,
    fs: &FamilySample,
    t: f64,
    c: f64,
) -> Result<ContinuedKernel> {
    if t.abs() * c >= 0.5 {
        return Err(CrError::NotContractive { tc: t.abs() * c });
    }
    let a = fam.perturbation_matrix(spec, fs)?;
    let f = FOp::new(fam, fs, &a);
    let mut basis = Vec::with_capacity(4);
    let mut terms_used = 0;
    let mut ratio: f64 = 0.0;
    let mut corr = [0.0; 4];
    let mut res = [0.0; 4];
    let dst = &fam.d.matrix + &(&a * t);
    for (j, v) in fs.ks.iter().enumerate() {
        let v0 = Array1::from(v.to_real());
        let vn = v0.dot(&v0).sqrt();
        let mut xi = Array1::zeros(v0.len());
        let mut term = v0.clone();
        let mut prev = vn;
        let mut k = 0;
        if t != 0.0 {
            loop {
                term = f.apply(&term) * t;
                let tn = term.dot(&term).sqrt();
                k += 1;
                if prev > 0.0 {
                    ratio = ratio.max(tn / prev);
                }
                xi += &term;
                if tn < SERIES_TOL * vn || k >= 200 {
                    break;
                }
                prev = tn;
            }
        }
        terms_used = terms_used.max(k);
        corr[j] = xi.dot(&xi).sqrt() / vn;
        let w = &v0 + &xi;
        let r = dst.dot(&w);
        res[j] = r.dot(&r).sqrt() / vn;
        basis.push(Section::from_real(fam.l_max, w.as_slice().unwrap())?);
    }
    let worst = res.iter().cloned().fold(0.0, f64::max);
    if worst > CONTINUATION_TOL {
        return Err(CrError::ResidualFail {
            what: format!("continued kernel at s = {}", fs.s),
            value: worst,
            tol: CONTINUATION_TOL,
        });
    }
    Ok(ContinuedKernel {
        s: fs.s,
        t,
        basis: [basis[0].clone(), basis[1].clone(), basis[2].clone(), basis[3].clone()],
        neumann_terms: terms_used,
        contraction_ratio: ratio,
        correction_norms: corr,
        residuals: res,
        c,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SurjectivityReport {
    pub s: f64,
    pub t: f64,
    /// σ_min of D_{s,t} on the complement of its kernel, over σ_max
    pub sigma_min_rel: f64,
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
    pub surjective: bool,
    pub gap_ratio: f64,
}

/// SVD oracle for D + tA_s.
pub fn surjectivity_certificate(
    fam: &PerturbationFamily,
    spec: &Spectral,
    fs: &FamilySample,
    t: f64,
) -> Result<SurjectivityReport> {
    let a = fam.perturbation_matrix(spec, fs)?;
    let dst = CROperator::from_parts(
        fam.l_max,
        fam.d.y.add(&fs.y.scale(t)),
        &fam.d.matrix + &(&a * t),
        "family",
    );
    let cert = index_certificate(&dst)?;
    if cert.verdict == RankVerdict::Indeterminate {
        return Err(CrError::Indeterminate { gap: cert.gap_ratio });
    }
    Ok(SurjectivityReport {
        s: fs.s,
        t,
        sigma_min_rel: cert.sigma_min / cert.sigma_max,
        kernel_dim: cert.kernel_dim,
        cokernel_dim: cert.cokernel_dim,
        surjective: cert.cokernel_dim == 0,
        gap_ratio: cert.gap_ratio,
    })
}

/// Direct kernel of D_{s,t} from the bordered square system [D_{s,t}; K_sᵀ] x = [0; I].
/// The system is nonsingular exactly when D_{s,t} is onto and its kernel is
/// transverse to K_s^⊥, so its reciprocal condition number certifies surjectivity.
#[derive(Debug, Clone, Serialize)]
pub struct BorderedCheck {
    pub s: f64,
    pub t: f64,
    pub rcond: f64,
    /// sine of the largest principal angle between the solved kernel and the continued one
    pub angle: f64,
    pub residual: f64,
    pub surjective: bool,
}

pub const TAU_BORDER: f64 = 1e-12;

pub fn bordered_check(
    fam: &PerturbationFamily,
    spec: &Spectral,
    fs: &FamilySample,
    ck: &ContinuedKernel,
) -> Result<BorderedCheck> {
    use ndarray::s;
    use ndarray_linalg::{FactorizeInto, ReciprocalConditionNum, Solve};
    let a = fam.perturbation_matrix(spec, fs)?;
    let dst = &fam.d.matrix + &(&a * ck.t);
    let (m, n) = dst.dim();
    if n != m + 4 {
        return Err(CrError::NotApplicable(format!("shape {m}×{n}")));
    }
    let kcols: Vec<Array1<f64>> = fs.ks.iter().map(|v| Array1::from(v.to_real())).collect();
    let mut b = Array2::zeros((n, n));
    b.slice_mut(s![..m, ..]).assign(&dst);
    let scale = dst.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for (j, k) in kcols.iter().enumerate() {
        b.row_mut(m + j).assign(&(k * (scale / k.dot(k).sqrt())));
    }
    let lu = b.factorize_into().map_err(|e| CrError::Linalg(e.to_string()))?;
    let rcond = lu.rcond().map_err(|e| CrError::Linalg(e.to_string()))?;
    let mut sol = Array2::zeros((n, 4));
    for j in 0..4 {
        let mut rhs = Array1::zeros(n);
        rhs[m + j] = scale;
        let x = lu.solve(&rhs).map_err(|e| CrError::Linalg(e.to_string()))?;
        sol.column_mut(j).assign(&x);
    }
    let mut residual: f64 = 0.0;
    for j in 0..4 {
        let x = sol.column(j);
        let r = dst.dot(&x);
        residual = residual.max((r.dot(&r) / x.dot(&x)).sqrt());
    }
    let cont = crate::linalg::columns_to_matrix(&ck.basis.iter().map(|v| v.to_real()).collect::<Vec<_>>());
    let angle = crate::linalg::subspace_angle(&cont, &sol)?;
    Ok(BorderedCheck {
        s: fs.s,
        t: ck.t,
        rcond,
        angle,
        residual,
        surjective: rcond > TAU_BORDER,
    })
}

/// Kernel of D_{s,t} by full SVD compared with the continued kernel.
pub fn svd_kernel_angle(
    fam: &PerturbationFamily,
    spec: &Spectral,
    fs: &FamilySample,
    ck: &ContinuedKernel,
) -> Result<(SurjectivityReport, f64)> {
    let a = fam.perturbation_matrix(spec, fs)?;
    let dst = CROperator::from_parts(
        fam.l_max,
        fam.d.y.add(&fs.y.scale(ck.t)),
        &fam.d.matrix + &(&a * ck.t),
        "family",
    );
    let rep = crate::cr::kernel_cokernel(&dst)?;
    let cont = crate::linalg::columns_to_matrix(&ck.basis.iter().map(|v| v.to_real()).collect::<Vec<_>>());
    let angle = if rep.kernel_dim() == 4 {
        crate::linalg::subspace_angle(&cont, &rep.kernel_matrix())?
    } else {
        1.0
    };
    let sm = rep.singular_values.last().copied().unwrap_or(0.0);
    Ok((
        SurjectivityReport {
            s: fs.s,
            t: ck.t,
            sigma_min_rel: sm / rep.sigma_max,
            kernel_dim: rep.kernel_dim(),
            cokernel_dim: rep.cokernel_dim(),
            surjective: rep.cokernel_dim() == 0 && rep.verdict == RankVerdict::Certified,
            gap_ratio: rep.gap_ratio,
        },
        angle,
    ))
}
