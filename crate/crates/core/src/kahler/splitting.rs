use nalgebra::DMatrix;
use serde::Serialize;

use super::spin::{dbar_entries, SpinBasis, C64};
use crate::cr::{GAP_MIN, TAU_RANK};
use crate::error::{CrError, Result};
use crate::sphere::SphereGrid;

/// Band-limited spin-weighted function Σ c (l, m) on the sphere, modes as (2l, 2m).
#[derive(Debug, Clone, Serialize)]
pub struct SpinFunction {
    pub two_k: i32,
    pub terms: Vec<(i32, i32, C64)>,
}

impl SpinFunction {
    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| (t.0 as usize).div_ceil(2)).max().unwrap_or(0)
    }
}

/// Off-diagonal part of the holomorphic structure: (∂̄f)_row += B · f_col, with B a
/// (0,1)-form valued in Hom(L_col, L_row).
#[derive(Debug, Clone, Serialize)]
pub struct Coupling {
    pub row: usize,
    pub col: usize,
    pub b: SpinFunction,
}

/// Holomorphic structure on a direct sum of line bundles L_i of degree -two_k[i]
/// (sections of L_i are spin two_k[i]/2 functions), with ∂̄ = diag(∂̄_i) + couplings.
#[derive(Debug, Clone, Serialize)]
pub struct HolBundle {
    pub two_k: Vec<i32>,
    pub couplings: Vec<Coupling>,
}

impl HolBundle {
    pub fn split(degrees: &[i64]) -> Self {
        Self {
            two_k: degrees.iter().map(|&a| -a as i32).collect(),
            couplings: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.two_k.len()
    }

    pub fn c1(&self) -> i64 {
        -self.two_k.iter().map(|&k| k as i64).sum::<i64>()
    }

    /// E ⊗ O(-n).
    pub fn twisted(&self, n: i32) -> Self {
        Self {
            two_k: self.two_k.iter().map(|k| k + n).collect(),
            couplings: self.couplings.clone(),
        }
    }

    pub fn with_coupling(mut self, row: usize, col: usize, terms: Vec<(i32, i32, C64)>) -> Result<Self> {
        if row >= self.rank() || col >= self.rank() || row == col {
            return Err(CrError::NotApplicable(format!("coupling ({row}, {col})")));
        }
        let two_k = self.two_k[row] - 2 - self.two_k[col];
        for &(two_l, two_m, _) in &terms {
            if two_l < two_k.abs() || (two_l - two_k).rem_euclid(2) != 0 || two_m.abs() > two_l {
                return Err(CrError::NotApplicable(format!(
                    "mode ({two_l}/2, {two_m}/2) is not a spin {two_k}/2 mode"
                )));
            }
        }
        self.couplings.push(Coupling {
            row,
            col,
            b: SpinFunction { two_k, terms },
        });
        Ok(self)
    }
}

/// Complex dimension of the kernel of ∂̄_E at truncation `l_max`, with its spectral gap.
#[derive(Debug, Clone, Serialize)]
pub struct KernelCount {
    pub dim: usize,
    pub gap_ratio: f64,
    pub sigma_max: f64,
}

pub fn holomorphic_sections(e: &HolBundle, l_max: usize) -> Result<KernelCount> {
    let lb = e.couplings.iter().map(|c| c.b.degree()).max().unwrap_or(0);
    let grid = SphereGrid::new(l_max + lb + 3, 2 * (l_max + lb) + 6);
    let inputs: Vec<SpinBasis> = e.two_k.iter().map(|&k| SpinBasis::new(k, l_max, &grid)).collect();
    let outputs: Vec<SpinBasis> = e.two_k.iter().map(|&k| SpinBasis::new(k - 2, l_max, &grid)).collect();
    let col_off: Vec<usize> = offsets(inputs.iter().map(|b| b.len()));
    let row_off: Vec<usize> = offsets(outputs.iter().map(|b| b.len()));
    let ncols = col_off[inputs.len()];
    let nrows = row_off[outputs.len()];
    if ncols == 0 {
        return Ok(KernelCount {
            dim: 0,
            gap_ratio: f64::INFINITY,
            sigma_max: 0.0,
        });
    }
    let mut m = DMatrix::<C64>::zeros(nrows.max(1), ncols);
    for (i, (inp, out)) in inputs.iter().zip(&outputs).enumerate() {
        for (c, r, f) in dbar_entries(inp, out) {
            m[(row_off[i] + r, col_off[i] + c)] += C64::new(f, 0.0);
        }
    }
    for cp in &e.couplings {
        let bb = SpinBasis::new(cp.b.two_k, cp.b.degree().max(1), &grid);
        let mut bc = vec![C64::new(0.0, 0.0); bb.len()];
        for &(two_l, two_m, v) in &cp.b.terms {
            let idx = bb.modes.iter().position(|&x| x == (two_l, two_m)).expect("validated mode");
            bc[idx] += v;
        }
        let bvals = bb.synthesize(&bc, &grid);
        let inp = &inputs[cp.col];
        let out = &outputs[cp.row];
        for c in 0..inp.len() {
            let f = inp.basis_values(c, &grid);
            let prod: Vec<C64> = f.iter().zip(&bvals).map(|(a, b)| a * b).collect();
            let coeffs = out.analyze(&prod, &grid);
            for (r, v) in coeffs.into_iter().enumerate() {
                m[(row_off[cp.row] + r, col_off[cp.col] + c)] += v;
            }
        }
    }
    let sv = m.singular_values();
    let mut s: Vec<f64> = sv.iter().cloned().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let smax = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&v| v > TAU_RANK * smax).count();
    let full = nrows.min(ncols);
    let gap = if rank == 0 || rank >= full || s[rank] == 0.0 {
        f64::INFINITY
    } else {
        s[rank - 1] / s[rank]
    };
    Ok(KernelCount {
        dim: ncols - rank,
        gap_ratio: gap,
        sigma_max: smax,
    })
}

fn offsets(lens: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut out = vec![0];
    for l in lens {
        out.push(out.last().unwrap() + l);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SplittingType {
    /// ascending
    pub degrees: Vec<i64>,
    /// (n, dim_ℂ H⁰(E ⊗ O(-n)))
    pub profile: Vec<(i32, usize)>,
    pub c1: i64,
    pub min_gap: f64,
}

impl SplittingType {
    pub fn min_degree(&self) -> i64 {
        self.degrees.first().copied().unwrap_or(0)
    }
}

/// Splitting degrees from the staircase n ↦ h⁰(E(-n)): the number of summands of degree
/// ≥ n is h⁰(E(-n)) - h⁰(E(-n-1)).
pub fn splitting_type(e: &HolBundle, l_max: usize) -> Result<SplittingType> {
    let r = e.rank();
    let c1 = e.c1();
    let bound = 2 * l_max as i32;
    let mut cache: std::collections::BTreeMap<i32, KernelCount> = Default::default();
    let mut min_gap = f64::INFINITY;
    let h0 = |n: i32, cache: &mut std::collections::BTreeMap<i32, KernelCount>| -> Result<usize> {
        if let Some(k) = cache.get(&n) {
            return Ok(k.dim);
        }
        let k = holomorphic_sections(&e.twisted(n), l_max)?;
        if k.gap_ratio < GAP_MIN {
            return Err(CrError::GapFail {
                twist: n,
                detail: format!("spectral gap {:.3e}", k.gap_ratio),
            });
        }
        let d = k.dim;
        cache.insert(n, k);
        Ok(d)
    };
    let start = c1.div_euclid(r as i64) as i32;
    let mut lo = start;
    while (h0(lo, &mut cache)? as i64) - (h0(lo + 1, &mut cache)? as i64) < r as i64 {
        lo -= 1;
        if lo < start - bound {
            return Err(CrError::GapFail {
                twist: lo,
                detail: "staircase does not reach full rank within the truncation".into(),
            });
        }
    }
    let mut hi = start;
    while h0(hi, &mut cache)? > 0 {
        hi += 1;
        if hi > start + bound {
            return Err(CrError::GapFail {
                twist: hi,
                detail: "sections persist past the truncation".into(),
            });
        }
    }
    let mut delta = Vec::new();
    for n in lo..=hi {
        delta.push(h0(n, &mut cache)? as i64 - h0(n + 1, &mut cache)? as i64);
    }
    let mut degrees = Vec::new();
    for (i, n) in (lo..=hi).enumerate() {
        let next = delta.get(i + 1).copied().unwrap_or(0);
        let count = delta[i] - next;
        if count < 0 || delta[i] < 0 {
            return Err(CrError::GapFail {
                twist: n,
                detail: "kernel dimensions are not a staircase".into(),
            });
        }
        for _ in 0..count {
            degrees.push(n as i64);
        }
    }
    if degrees.len() != r || degrees.iter().sum::<i64>() != c1 {
        return Err(CrError::GapFail {
            twist: lo,
            detail: format!("degrees {degrees:?} inconsistent with rank {r} and c1 {c1}"),
        });
    }
    for k in cache.values() {
        min_gap = min_gap.min(k.gap_ratio);
    }
    Ok(SplittingType {
        degrees,
        profile: cache.iter().map(|(n, k)| (*n, k.dim)).collect(),
        c1,
        min_gap,
    })
}
