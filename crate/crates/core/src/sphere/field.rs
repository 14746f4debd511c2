use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Debug;
use std::marker::PhantomData;

use super::grid::{make_grid, SphereGrid, SpherePoint};
use super::wigner::{lowering_coeff, raising_coeff, spin_profile};
use crate::error::{CrError, Result};

pub type C64 = Complex64;

/// Spin weight marker. Sections carry spin 0, (0,1)-forms spin -1.
pub trait Spin: Copy + Clone + Debug + Send + Sync + 'static {
    const K: i32;
    const NAME: &'static str;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spin0;
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinM1;

impl Spin for Spin0 {
    const K: i32 = 0;
    const NAME: &'static str = "section";
}
impl Spin for SpinM1 {
    const K: i32 = -1;
    const NAME: &'static str = "antiform";
}

/// Complex modes per component for spin `k` at truncation `l_max`.
pub fn mode_count(l_max: usize, k: i32) -> usize {
    (l_max + 1).pow(2) - (k * k) as usize
}

pub fn mode_index(l: usize, m: i64, k: i32) -> usize {
    let l = l as i64;
    (l * l - (k * k) as i64 + l + m) as usize
}

/// Iterate (l, m) in storage order.
pub fn modes(l_max: usize, k: i32) -> impl Iterator<Item = (usize, i64)> {
    let l0 = k.unsigned_abs() as usize;
    (l0..=l_max).flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m)))
}

/// A ℂ²-valued spin-weighted field in spectral form.
///
/// Coefficient layout: `coeffs[c * modes + mode_index(l, m)]` for component c ∈ {0, 1}.
/// The real view interleaves (Re, Im) so that real index = 2 * complex index + r.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<S: Spin> {
    l_max: usize,
    coeffs: Vec<C64>,
    _spin: PhantomData<S>,
}

pub type Section = Field<Spin0>;
pub type AntiForm = Field<SpinM1>;

impl<S: Spin> Field<S> {
    pub fn zeros(l_max: usize) -> Self {
        Self {
            l_max,
            coeffs: vec![C64::new(0.0, 0.0); 2 * mode_count(l_max, S::K)],
            _spin: PhantomData,
        }
    }

    pub fn from_coeffs(l_max: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != 2 * mode_count(l_max, S::K) {
            return Err(CrError::GridMismatch(format!(
                "{} coefficient count {} does not match L = {}",
                S::NAME,
                coeffs.len(),
                l_max
            )));
        }
        Ok(Self {
            l_max,
            coeffs,
            _spin: PhantomData,
        })
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn modes_per_component(&self) -> usize {
        mode_count(self.l_max, S::K)
    }

    pub fn real_dim(&self) -> usize {
        2 * self.coeffs.len()
    }

    pub fn coeff(&self, comp: usize, l: usize, m: i64) -> C64 {
        self.coeffs[comp * self.modes_per_component() + mode_index(l, m, S::K)]
    }

    pub fn set_coeff(&mut self, comp: usize, l: usize, m: i64, v: C64) {
        let n = self.modes_per_component();
        self.coeffs[comp * n + mode_index(l, m, S::K)] = v;
    }

    pub fn to_real(&self) -> Vec<f64> {
        self.coeffs.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn from_real(l_max: usize, v: &[f64]) -> Result<Self> {
        let coeffs = v.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
        Self::from_coeffs(l_max, coeffs)
    }

    /// Unit real basis vector number `idx` of the truncated space.
    pub fn basis(l_max: usize, idx: usize) -> Self {
        let mut f = Self::zeros(l_max);
        f.coeffs[idx / 2] = if idx % 2 == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 1.0)
        };
        f
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            l_max: self.l_max,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
            _spin: PhantomData,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    /// self + a * other
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        assert_eq!(self.l_max, other.l_max, "truncation mismatch");
        Self {
            l_max: self.l_max,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y * a)
                .collect(),
            _spin: PhantomData,
        }
    }

    /// Multiplication by the constant complex structure i (J0 on ℝ⁴).
    pub fn times_i(&self) -> Self {
        Self {
            l_max: self.l_max,
            coeffs: self.coeffs.iter().map(|c| c * C64::i()).collect(),
            _spin: PhantomData,
        }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Same field at a different truncation: padded with zeros or cut.
    pub fn retruncate(&self, l_new: usize) -> Self {
        let mut out = Self::zeros(l_new);
        let l = self.l_max.min(l_new);
        for c in 0..2 {
            for (ll, m) in modes(l, S::K) {
                out.set_coeff(c, ll, m, self.coeff(c, ll, m));
            }
        }
        out
    }

    /// Energy fraction carried by degrees above `l`.
    pub fn tail_fraction(&self, l: usize) -> f64 {
        let total: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let mut tail = 0.0;
        for c in 0..2 {
            for (ll, m) in modes(self.l_max, S::K) {
                if ll > l {
                    tail += self.coeff(c, ll, m).norm_sqr();
                }
            }
        }
        tail / total
    }

    pub fn to_artifact(&self) -> FieldArtifact {
        FieldArtifact {
            kind: S::NAME.to_string(),
            l_max: self.l_max,
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_artifact(a: &FieldArtifact) -> Result<Self> {
        if a.kind != S::NAME {
            return Err(CrError::KindMismatch {
                expected: S::NAME.to_string(),
                found: a.kind.clone(),
            });
        }
        Self::from_coeffs(a.l_max, a.coeffs.iter().map(|p| C64::new(p[0], p[1])).collect())
    }
}

impl Section {
    /// The constant section with value `v` (in ℝ⁴ ≅ ℂ²).
    pub fn constant(l_max: usize, v: Vector4<f64>) -> Self {
        let mut s = Self::zeros(l_max);
        let n = (4.0 * std::f64::consts::PI).sqrt();
        s.set_coeff(0, 0, 0, C64::new(v[0], v[1]) * n);
        s.set_coeff(1, 0, 0, C64::new(v[2], v[3]) * n);
        s
    }
}

/// Self-describing serialized form of a Section or AntiForm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldArtifact {
    pub kind: String,
    pub l_max: usize,
    pub coeffs: Vec<[f64; 2]>,
}

/// Real L² inner product, computed in coefficient space.
pub fn l2_inner<S: Spin>(a: &Field<S>, b: &Field<S>) -> Result<f64> {
    if a.l_max != b.l_max {
        return Err(CrError::GridMismatch(format!(
            "truncations {} and {} differ",
            a.l_max, b.l_max
        )));
    }
    Ok(a.coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum())
}

/// Inner product of serialized fields; rejects mixed kinds.
pub fn l2_inner_artifacts(a: &FieldArtifact, b: &FieldArtifact) -> Result<f64> {
    if a.kind != b.kind {
        return Err(CrError::KindMismatch {
            expected: a.kind.clone(),
            found: b.kind.clone(),
        });
    }
    if a.l_max != b.l_max || a.coeffs.len() != b.coeffs.len() {
        return Err(CrError::GridMismatch("truncation mismatch".into()));
    }
    Ok(a.coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| x[0] * y[0] + x[1] * y[1])
        .sum())
}

/// Spin-lowering ∂̄ on Sections: b^0_{lm} ↦ ½√(l(l+1)) b^{-1}_{lm}.
pub fn dbar0(x: &Section) -> AntiForm {
    let mut out = AntiForm::zeros(x.l_max);
    for c in 0..2 {
        for (l, m) in modes(x.l_max, 0) {
            if l == 0 {
                continue;
            }
            let f = 0.5 * lowering_coeff(2 * l as i32, 0);
            out.set_coeff(c, l, m, x.coeff(c, l, m) * f);
        }
    }
    out
}

/// Complex-valued polar profiles of one spin on the rings of a grid.
#[derive(Debug, Clone)]
struct SpinTable {
    k: i32,
    n_modes: usize,
    prof: Vec<f64>,
}

impl SpinTable {
    fn new(l_max: usize, k: i32, ring_theta: &[f64]) -> Self {
        let n_modes = mode_count(l_max, k);
        let mut prof = vec![0.0; ring_theta.len() * n_modes];
        for (r, &th) in ring_theta.iter().enumerate() {
            for (idx, (l, m)) in modes(l_max, k).enumerate() {
                prof[r * n_modes + idx] = spin_profile(2 * l as i32, 2 * m as i32, 2 * k, th);
            }
        }
        Self { k, n_modes, prof }
    }
}

/// Transform context: a grid plus the spin tables needed at truncation `l_max`.
#[derive(Debug, Clone)]
pub struct Spectral {
    pub l_max: usize,
    pub grid: SphereGrid,
    t0: SpinTable,
    tm1: SpinTable,
    tp1: SpinTable,
    /// e^{i m φ_j}, indexed [j * (2L+1) + (m + L)]
    phase: Vec<C64>,
}

impl Spectral {
    /// Standard context: truncation `l` on its standard grid.
    pub fn new(l: usize) -> Result<Self> {
        Ok(Self::on_grid(l, make_grid(l)?))
    }

    /// Context on an arbitrary product grid. Synthesis is exact on any grid;
    /// analysis is exact only when `grid.exact_degree() >= l`.
    pub fn on_grid(l: usize, grid: SphereGrid) -> Self {
        let t0 = SpinTable::new(l, 0, &grid.ring_theta);
        let tm1 = SpinTable::new(l, -1, &grid.ring_theta);
        let tp1 = SpinTable::new(l, 1, &grid.ring_theta);
        let nm = 2 * l + 1;
        let mut phase = vec![C64::new(0.0, 0.0); grid.n_phi * nm];
        for j in 0..grid.n_phi {
            let phi = grid.nodes[j].phi;
            for mi in 0..nm {
                let m = mi as f64 - l as f64;
                phase[j * nm + mi] = C64::from_polar(1.0, m * phi);
            }
        }
        Self {
            l_max: l,
            grid,
            t0,
            tm1,
            tp1,
            phase,
        }
    }

    /// Same truncation on the grid refined by `factor`.
    pub fn oversampled(&self, factor: usize) -> Self {
        Self::on_grid(self.l_max, self.grid.refined(factor))
    }

    pub fn analysis_exact(&self) -> bool {
        self.grid.exact_degree() >= self.l_max
    }

    fn table(&self, k: i32) -> &SpinTable {
        match k {
            0 => &self.t0,
            -1 => &self.tm1,
            1 => &self.tp1,
            _ => panic!("spin {k} has no table"),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.len()
    }

    fn synth_scalar(&self, k: i32, c: &[C64], out: &mut [C64]) {
        let t = self.table(k);
        let l = self.l_max as i64;
        let nm = (2 * l + 1) as usize;
        let n_phi = self.grid.n_phi;
        let mut sm = vec![C64::new(0.0, 0.0); nm];
        for r in 0..self.grid.n_theta {
            sm.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            let row = &t.prof[r * t.n_modes..(r + 1) * t.n_modes];
            for (idx, (_, m)) in modes(self.l_max, t.k).enumerate() {
                sm[(m + l) as usize] += c[idx] * row[idx];
            }
            for j in 0..n_phi {
                let ph = &self.phase[j * nm..(j + 1) * nm];
                let mut acc = C64::new(0.0, 0.0);
                for mi in 0..nm {
                    acc += sm[mi] * ph[mi];
                }
                out[r * n_phi + j] = acc;
            }
        }
    }

    fn analyze_scalar(&self, k: i32, v: &[C64], out: &mut [C64]) {
        let t = self.table(k);
        let l = self.l_max as i64;
        let nm = (2 * l + 1) as usize;
        let n_phi = self.grid.n_phi;
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        out.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        let mut fm = vec![C64::new(0.0, 0.0); nm];
        for r in 0..self.grid.n_theta {
            for mi in 0..nm {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..n_phi {
                    acc += v[r * n_phi + j] * self.phase[j * nm + mi].conj();
                }
                fm[mi] = acc * (dphi * self.grid.ring_weights[r]);
            }
            let row = &t.prof[r * t.n_modes..(r + 1) * t.n_modes];
            for (idx, (_, m)) in modes(self.l_max, t.k).enumerate() {
                out[idx] += fm[(m + l) as usize] * row[idx];
            }
        }
    }

    fn synth_k(&self, k: i32, coeffs: &[C64]) -> Vec<Vector4<f64>> {
        let n = mode_count(self.l_max, k);
        let nn = self.n_nodes();
        let mut u1 = vec![C64::new(0.0, 0.0); nn];
        let mut u2 = vec![C64::new(0.0, 0.0); nn];
        self.synth_scalar(k, &coeffs[..n], &mut u1);
        self.synth_scalar(k, &coeffs[n..], &mut u2);
        u1.iter()
            .zip(&u2)
            .map(|(a, b)| Vector4::new(a.re, a.im, b.re, b.im))
            .collect()
    }

    fn analyze_k(&self, k: i32, vals: &[Vector4<f64>]) -> Vec<C64> {
        let n = mode_count(self.l_max, k);
        let u1: Vec<C64> = vals.iter().map(|v| C64::new(v[0], v[1])).collect();
        let u2: Vec<C64> = vals.iter().map(|v| C64::new(v[2], v[3])).collect();
        let mut out = vec![C64::new(0.0, 0.0); 2 * n];
        self.analyze_scalar(k, &u1, &mut out[..n]);
        self.analyze_scalar(k, &u2, &mut out[n..]);
        out
    }

    /// Pointwise ℝ⁴ values at every grid node. For AntiForms the value is α(e_θ).
    pub fn synthesize<S: Spin>(&self, f: &Field<S>) -> Vec<Vector4<f64>> {
        assert_eq!(f.l_max, self.l_max, "truncation mismatch");
        self.synth_k(S::K, &f.coeffs)
    }

    /// Quadrature projection of node values onto the truncated basis.
    pub fn analyze<S: Spin>(&self, vals: &[Vector4<f64>]) -> Field<S> {
        assert_eq!(vals.len(), self.n_nodes());
        Field {
            l_max: self.l_max,
            coeffs: self.analyze_k(S::K, vals),
            _spin: PhantomData,
        }
    }

    /// Samples a function at the nodes and projects it.
    pub fn project<S: Spin>(&self, f: impl Fn(&SpherePoint) -> Vector4<f64>) -> Field<S> {
        let vals: Vec<_> = self.grid.points().iter().map(&f).collect();
        self.analyze(&vals)
    }

    /// Value at an arbitrary point, by direct evaluation of the basis.
    pub fn eval_at<S: Spin>(&self, f: &Field<S>, p: &SpherePoint) -> Vector4<f64> {
        let n = f.modes_per_component();
        let mut u = [C64::new(0.0, 0.0); 2];
        for (idx, (l, m)) in modes(f.l_max, S::K).enumerate() {
            let b = C64::from_polar(1.0, m as f64 * p.phi)
                * spin_profile(2 * l as i32, 2 * m as i32, 2 * S::K, p.theta);
            u[0] += f.coeffs[idx] * b;
            u[1] += f.coeffs[n + idx] * b;
        }
        Vector4::new(u[0].re, u[0].im, u[1].re, u[1].im)
    }

    /// Polar and azimuthal unit-speed derivatives (∂_θ u, (1/sin θ) ∂_φ u) at every node.
    pub fn partials(&self, x: &Section) -> (Vec<Vector4<f64>>, Vec<Vector4<f64>>) {
        let db = self.synth_k(-1, &dbar0(x).coeffs);
        let mut raised = vec![C64::new(0.0, 0.0); 2 * mode_count(x.l_max, 1)];
        let n1 = mode_count(x.l_max, 1);
        for c in 0..2 {
            for (l, m) in modes(x.l_max, 1) {
                let f = -0.5 * raising_coeff(2 * l as i32, 0);
                raised[c * n1 + mode_index(l, m, 1)] = x.coeff(c, l, m) * f;
            }
        }
        let d = self.synth_k(1, &raised);
        let mut a = Vec::with_capacity(db.len());
        let mut b = Vec::with_capacity(db.len());
        for (p, q) in d.iter().zip(&db) {
            a.push(p + q);
            // i (∂u - ∂̄u)
            b.push(j0() * (p - q));
        }
        (a, b)
    }

    /// Real L² inner product by quadrature of pointwise products.
    pub fn l2_inner_quadrature<S: Spin>(&self, a: &Field<S>, b: &Field<S>) -> f64 {
        let va = self.synthesize(a);
        let vb = self.synthesize(b);
        va.iter()
            .zip(&vb)
            .zip(&self.grid.nodes)
            .map(|((x, y), n)| n.weight * x.dot(y))
            .sum()
    }
}

/// The canonical complex structure on ℝ⁴ = ℂ².
pub fn j0() -> Matrix4<f64> {
    Matrix4::new(
        0.0, -1.0, 0.0, 0.0, //
        1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, -1.0, //
        0.0, 0.0, 1.0, 0.0,
    )
}

/// Columns are the values e_i(node).
pub fn pointwise_frame_matrix(spec: &Spectral, e: &[Section; 4], node: usize) -> Matrix4<f64> {
    let p = spec.grid.point(node);
    let cols: Vec<Vector4<f64>> = e.iter().map(|s| spec.eval_at(s, &p)).collect();
    Matrix4::from_columns(&cols)
}

/// Node values of four sections, with pointwise frame diagnostics.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub matrices: Vec<Matrix4<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FrameScan {
    /// min over nodes of σ_min / σ_max of the frame matrix
    pub min_sigma: f64,
    pub argmin: usize,
    pub min_det: f64,
    pub argmin_det: usize,
    pub max_det: f64,
    pub argmax_det: usize,
    pub n_positive: usize,
    pub n_negative: usize,
}

impl FrameField {
    pub fn new(spec: &Spectral, e: &[&Section]) -> Self {
        assert_eq!(e.len(), 4);
        let vals: Vec<Vec<Vector4<f64>>> = e.iter().map(|s| spec.synthesize(*s)).collect();
        let matrices = (0..spec.n_nodes())
            .map(|i| Matrix4::from_columns(&[vals[0][i], vals[1][i], vals[2][i], vals[3][i]]))
            .collect();
        Self { matrices }
    }

    pub fn from_matrices(matrices: Vec<Matrix4<f64>>) -> Self {
        Self { matrices }
    }

    pub fn scan(&self) -> FrameScan {
        let mut s = FrameScan {
            min_sigma: f64::INFINITY,
            argmin: 0,
            min_det: f64::INFINITY,
            argmin_det: 0,
            max_det: f64::NEG_INFINITY,
            argmax_det: 0,
            n_positive: 0,
            n_negative: 0,
        };
        for (i, m) in self.matrices.iter().enumerate() {
            let sv = m.singular_values();
            let smax = sv.max();
            let ratio = if smax > 0.0 { sv.min() / smax } else { 0.0 };
            if ratio < s.min_sigma {
                s.min_sigma = ratio;
                s.argmin = i;
            }
            let d = m.determinant();
            if d < s.min_det {
                s.min_det = d;
                s.argmin_det = i;
            }
            if d > s.max_det {
                s.max_det = d;
                s.argmax_det = i;
            }
            if d > 0.0 {
                s.n_positive += 1;
            } else {
                s.n_negative += 1;
            }
        }
        s
    }
}

impl Spectral {
    /// Real matrix (spin -1 coefficients × spin 0 coefficients) of pointwise
    /// multiplication by real 4×4 samples followed by analysis.
    ///
    /// Y v = A v + B v̄ with A, B complex 2×2; along each ring the φ-sums reduce
    /// to discrete Fourier coefficients of A and B at m' - m and m' + m.
    pub fn multiplication_matrix(&self, samples: &[Matrix4<f64>]) -> ndarray::Array2<f64> {
        let l = self.l_max;
        let li = l as i64;
        let ns = mode_count(l, 0);
        let na = mode_count(l, -1);
        let nt = self.grid.n_theta;
        let np = self.grid.n_phi;
        let dphi = 2.0 * std::f64::consts::PI / np as f64;
        // Fourier coefficients per ring: [ring][cp][c][freq mod np]
        let mut ah = vec![C64::new(0.0, 0.0); nt * 4 * np];
        let mut bh = vec![C64::new(0.0, 0.0); nt * 4 * np];
        let idx = |r: usize, cp: usize, c: usize, k: usize| ((r * 2 + cp) * 2 + c) * np + k;
        for r in 0..nt {
            for j in 0..np {
                let y = &samples[r * np + j];
                let phi = self.grid.nodes[j].phi;
                for cp in 0..2 {
                    for c in 0..2 {
                        let (a, b) = (y[(2 * cp, 2 * c)], y[(2 * cp, 2 * c + 1)]);
                        let (cc, d) = (y[(2 * cp + 1, 2 * c)], y[(2 * cp + 1, 2 * c + 1)]);
                        let alpha = C64::new(0.5 * (a + d), 0.5 * (cc - b));
                        let beta = C64::new(0.5 * (a - d), 0.5 * (cc + b));
                        for k in 0..np {
                            let e = C64::from_polar(dphi, -(k as f64) * phi);
                            ah[idx(r, cp, c, k)] += alpha * e;
                            bh[idx(r, cp, c, k)] += beta * e;
                        }
                    }
                }
            }
        }
        let wrap = |k: i64| k.rem_euclid(np as i64) as usize;
        // profiles grouped by m: (l, storage index, values per ring)
        let group = |t: &SpinTable, k: i32, m: i64| -> Vec<(usize, Vec<f64>)> {
            let l0 = (k.unsigned_abs() as i64).max(m.abs());
            (l0..=li)
                .map(|ll| {
                    let id = mode_index(ll as usize, m, k);
                    (id, (0..nt).map(|r| t.prof[r * t.n_modes + id]).collect())
                })
                .collect()
        };
        let g0: Vec<_> = (-li..=li).map(|m| group(&self.t0, 0, m)).collect();
        let g1: Vec<_> = (-li..=li).map(|m| group(&self.tm1, -1, m)).collect();
        let mut out = ndarray::Array2::zeros((4 * na, 4 * ns));
        let mut wa = vec![C64::new(0.0, 0.0); nt];
        let mut wb = vec![C64::new(0.0, 0.0); nt];
        for m in -li..=li {
            let cols = &g0[(m + li) as usize];
            for mp in -li..=li {
                let rows = &g1[(mp + li) as usize];
                if rows.is_empty() {
                    continue;
                }
                for cp in 0..2 {
                    for c in 0..2 {
                        for r in 0..nt {
                            let w = self.grid.ring_weights[r];
                            wa[r] = ah[idx(r, cp, c, wrap(mp - m))] * w;
                            wb[r] = bh[idx(r, cp, c, wrap(mp + m))] * w;
                        }
                        for (ic, pc) in cols {
                            for (ir, pr) in rows {
                                let mut sa = C64::new(0.0, 0.0);
                                let mut sb = C64::new(0.0, 0.0);
                                for r in 0..nt {
                                    let q = pr[r] * pc[r];
                                    sa += wa[r] * q;
                                    sb += wb[r] * q;
                                }
                                let row = 2 * (cp * na + ir);
                                let col = 2 * (c * ns + ic);
                                // input 1: coeff = sa + sb ; input i: coeff = i sa - i sb
                                let v0 = sa + sb;
                                let v1 = C64::i() * (sa - sb);
                                out[[row, col]] += v0.re;
                                out[[row + 1, col]] += v0.im;
                                out[[row, col + 1]] += v1.re;
                                out[[row + 1, col + 1]] += v1.im;
                            }
                        }
                    }
                }
            }
        }
        out
    }
}
