use ndarray::{s, Array2};
use serde::Serialize;

use super::operator::CROperator;
use crate::error::Result;
use crate::linalg::{svd_full, singular_values};
use crate::sphere::{AntiForm, Section};

pub const TAU_RANK: f64 = 1e-8;
pub const GAP_MIN: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RankVerdict {
    Certified,
    Indeterminate,
}

#[derive(Debug, Clone)]
pub struct KernelReport {
    pub kernel_basis: Vec<Section>,
    pub cokernel_basis: Vec<AntiForm>,
    /// Descending, length min(rows, cols).
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// σ_r / σ_{r+1} at the chosen cut (infinite when nothing follows).
    pub gap_ratio: f64,
    pub threshold: f64,
    pub sigma_max: f64,
    pub verdict: RankVerdict,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl KernelReport {
    pub fn kernel_dim(&self) -> usize {
        self.n_cols - self.rank
    }

    pub fn cokernel_dim(&self) -> usize {
        self.n_rows - self.rank
    }

    pub fn index(&self) -> i64 {
        self.kernel_dim() as i64 - self.cokernel_dim() as i64
    }

    /// Kernel basis as the columns of a real matrix.
    pub fn kernel_matrix(&self) -> Array2<f64> {
        crate::linalg::columns_to_matrix(
            &self.kernel_basis.iter().map(|k| k.to_real()).collect::<Vec<_>>(),
        )
    }

    /// Singular value σ_{k} with 1-based k, zero past the end.
    pub fn sigma(&self, k: usize) -> f64 {
        if k == 0 {
            return f64::INFINITY;
        }
        self.singular_values.get(k - 1).copied().unwrap_or(0.0)
    }

    /// Singular values ordered from the kernel end: the smallest n_cols
    /// values, padding missing ones (rectangular shape) with zeros.
    /// `ascending_sigma(i)` is σ_{n_cols - i}.
    pub fn ascending_sigma(&self, i: usize) -> f64 {
        self.sigma(self.n_cols - i)
    }

    /// Singular spectrum as CSV rows (index, sigma, sigma / sigma_max).
    pub fn write_spectrum_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["index", "sigma", "relative"])?;
        for (i, s) in self.singular_values.iter().enumerate() {
            let rel = if self.sigma_max > 0.0 { s / self.sigma_max } else { 0.0 };
            wr.write_record([i.to_string(), format!("{s:.17e}"), format!("{rel:.17e}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Key/value text for reports.
    pub fn to_kv(&self) -> Vec<(String, String)> {
        vec![
            ("rows".into(), self.n_rows.to_string()),
            ("cols".into(), self.n_cols.to_string()),
            ("rank".into(), self.rank.to_string()),
            ("kernel_dim".into(), self.kernel_dim().to_string()),
            ("cokernel_dim".into(), self.cokernel_dim().to_string()),
            ("index".into(), self.index().to_string()),
            ("sigma_max".into(), format!("{:.12e}", self.sigma_max)),
            ("threshold".into(), format!("{:.6e}", self.threshold)),
            ("gap_ratio".into(), format!("{:.6e}", self.gap_ratio)),
            ("verdict".into(), format!("{:?}", self.verdict).to_uppercase()),
        ]
    }
}

fn rank_cut(s: &[f64], n_min: usize) -> (usize, f64, f64) {
    let smax = s.first().copied().unwrap_or(0.0);
    let thr = TAU_RANK * smax;
    let r = s.iter().filter(|&&v| v > thr).count();
    let gap = if r == 0 {
        0.0
    } else if r >= n_min {
        f64::INFINITY
    } else if s[r] == 0.0 {
        f64::INFINITY
    } else {
        s[r - 1] / s[r]
    };
    (r, gap, thr)
}

/// Kernel and cokernel by full SVD with the relative threshold τ_rank·σ_max and a
/// 10³ gap requirement.
pub fn kernel_cokernel(d: &CROperator) -> Result<KernelReport> {
    let svd = svd_full(&d.matrix)?;
    let (m, n) = (d.n_rows(), d.n_cols());
    let s: Vec<f64> = svd.s.to_vec();
    let (r, gap, thr) = rank_cut(&s, m.min(n));
    let l = d.l_max;
    let kernel_basis = (r..n)
        .map(|i| Section::from_real(l, svd.vt.row(i).to_vec().as_slice()).unwrap())
        .collect();
    let cokernel_basis = (r..m)
        .map(|i| AntiForm::from_real(l, svd.u.slice(s![.., i]).to_vec().as_slice()).unwrap())
        .collect();
    Ok(KernelReport {
        kernel_basis,
        cokernel_basis,
        singular_values: s.clone(),
        rank: r,
        gap_ratio: gap,
        threshold: thr,
        sigma_max: s.first().copied().unwrap_or(0.0),
        verdict: if gap >= GAP_MIN {
            RankVerdict::Certified
        } else {
            RankVerdict::Indeterminate
        },
        n_rows: m,
        n_cols: n,
    })
}

/// Rank decision from singular values only (no bases).
#[derive(Debug, Clone, Serialize)]
pub struct IndexCertificate {
    pub rank: usize,
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
    pub index: i64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub gap_ratio: f64,
    pub verdict: RankVerdict,
    pub method: &'static str,
}

pub fn index_certificate(d: &CROperator) -> Result<IndexCertificate> {
    let s = singular_values(&d.matrix)?.to_vec();
    let (m, n) = (d.n_rows(), d.n_cols());
    let (r, gap, _) = rank_cut(&s, m.min(n));
    Ok(IndexCertificate {
        rank: r,
        kernel_dim: n - r,
        cokernel_dim: m - r,
        index: (n - r) as i64 - (m - r) as i64,
        sigma_max: s.first().copied().unwrap_or(0.0),
        sigma_min: s.last().copied().unwrap_or(0.0),
        gap_ratio: gap,
        verdict: if gap >= GAP_MIN {
            RankVerdict::Certified
        } else {
            RankVerdict::Indeterminate
        },
        method: "svd",
    })
}

/// Full-rank certificate without factorization.
///
/// With D₀ = ∂̄₀ (surjective, σ_min(D₀) = √2/2) and q = ½ sup_z‖Y(z)‖ / σ_min(D₀),
/// D restricted to (ker D₀)^⊥ equals (I + ½ Y D₀⁺) D₀, which is onto when q < 1.
/// The bound ‖Y_mat‖ ≤ sup_z‖Y(z)‖ holds because analysis is an orthogonal
/// projection in the exact quadrature norm. Falls back to the SVD otherwise.
pub fn index_certificate_fast(d: &CROperator) -> Result<IndexCertificate> {
    let l = d.l_max as f64;
    let s0_min = 0.5 * 2f64.sqrt();
    let s0_max = 0.5 * (l * (l + 1.0)).sqrt();
    let ysup = d.y.sup_norm();
    let q = 0.5 * ysup / s0_min;
    let smin_lb = (1.0 - q) * s0_min;
    let smax_ub = s0_max + 0.5 * ysup;
    if q < 1.0 && smin_lb > TAU_RANK * smax_ub {
        let (m, n) = (d.n_rows(), d.n_cols());
        return Ok(IndexCertificate {
            rank: m,
            kernel_dim: n - m,
            cokernel_dim: 0,
            index: (n - m) as i64,
            sigma_max: smax_ub,
            sigma_min: smin_lb,
            gap_ratio: f64::INFINITY,
            verdict: RankVerdict::Certified,
            method: "neumann_bound",
        });
    }
    index_certificate(d)
}
