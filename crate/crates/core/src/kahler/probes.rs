use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use super::curvature::{bisectional_bound, fs_factor, PlanePair, ProductKahler};
use super::splitting::{splitting_type, HolBundle, SplittingType};
use crate::error::{CrError, Result};
use crate::sphere::{mapping_degree, SphereGrid, SphereMesh, SpherePoint};

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// p(z)/q(z), coefficients in ascending powers.
#[derive(Debug, Clone, Serialize)]
pub struct RationalMap {
    pub num: Vec<C>,
    pub den: Vec<C>,
}

fn horner(p: &[C], z: C) -> C {
    p.iter().rev().fold(c(0.0), |acc, &a| acc * z + a)
}

fn deriv(p: &[C]) -> Vec<C> {
    p.iter().enumerate().skip(1).map(|(k, &a)| a * k as f64).collect()
}

fn mul(p: &[C], q: &[C]) -> Vec<C> {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let mut out = vec![c(0.0); p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

fn sub(p: &[C], q: &[C]) -> Vec<C> {
    (0..p.len().max(q.len()))
        .map(|i| p.get(i).copied().unwrap_or(c(0.0)) - q.get(i).copied().unwrap_or(c(0.0)))
        .collect()
}

fn trim(p: &[C]) -> Vec<C> {
    let scale = p.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut v = p.to_vec();
    while v.last().is_some_and(|a| a.norm() <= 1e-14 * scale) {
        v.pop();
    }
    v
}

/// Roots of a polynomial from the eigenvalues of its companion matrix.
fn roots(p: &[C]) -> Vec<C> {
    let p = trim(p);
    if p.len() <= 1 {
        return Vec::new();
    }
    let n = p.len() - 1;
    let lead = p[n];
    let mut m = DMatrix::<C>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = c(1.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -p[i] / lead;
    }
    m.schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
}

impl RationalMap {
    pub fn identity() -> Self {
        Self::polynomial(vec![c(0.0), c(1.0)])
    }

    pub fn constant(a: C) -> Self {
        Self::polynomial(vec![a])
    }

    pub fn polynomial(coeffs: Vec<C>) -> Self {
        Self {
            num: coeffs,
            den: vec![c(1.0)],
        }
    }

    pub fn monomial(d: usize) -> Self {
        let mut v = vec![c(0.0); d + 1];
        v[d] = c(1.0);
        Self::polynomial(v)
    }

    fn n(&self) -> usize {
        trim(&self.num).len().max(trim(&self.den).len()).saturating_sub(1)
    }

    pub fn eval(&self, z: C) -> C {
        horner(&self.num, z) / horner(&self.den, z)
    }

    pub fn derivative(&self, z: C) -> C {
        let q = horner(&self.den, z);
        (horner(&deriv(&self.num), z) * q - horner(&self.num, z) * horner(&deriv(&self.den), z)) / (q * q)
    }

    /// w ↦ f(1/w), the same map in the chart at infinity of the domain.
    pub fn at_infinity(&self) -> Self {
        let n = self.n();
        let rev = |p: &[C]| {
            let mut v: Vec<C> = (0..=n).map(|i| p.get(i).copied().unwrap_or(c(0.0))).collect();
            v.reverse();
            v
        };
        Self {
            num: rev(&self.num),
            den: rev(&self.den),
        }
    }

    /// Numerator of f′, whose zeros (with the poles excluded) are the finite critical points.
    fn wronskian(&self) -> Vec<C> {
        trim(&sub(&mul(&deriv(&self.num), &self.den), &mul(&self.num, &deriv(&self.den))))
    }

    pub fn on_sphere(&self, p: &SpherePoint) -> SpherePoint {
        let z = p.chart_z();
        let q = horner(&self.den, z);
        if q.norm() == 0.0 {
            return SpherePoint::new(PI, 0.0);
        }
        SpherePoint::from_chart_z(horner(&self.num, z) / q)
    }
}

/// z ↦ (f₁(z), …, f_N(z)) into (S²)^N.
#[derive(Debug, Clone, Serialize)]
pub struct HolSphere {
    pub name: String,
    pub maps: Vec<RationalMap>,
}

impl HolSphere {
    pub fn new(name: &str, maps: Vec<RationalMap>) -> Self {
        Self {
            name: name.into(),
            maps,
        }
    }

    pub fn horizontal() -> Self {
        Self::new("horizontal", vec![RationalMap::identity(), RationalMap::constant(c(0.3))])
    }

    pub fn vertical() -> Self {
        Self::new("vertical", vec![RationalMap::constant(c(-0.7)), RationalMap::identity()])
    }

    pub fn diagonal() -> Self {
        Self::new("diagonal", vec![RationalMap::identity(), RationalMap::identity()])
    }

    /// Graph of z ↦ z^d.
    pub fn graph(d: usize) -> Self {
        Self::new(&format!("graph_deg{d}"), vec![RationalMap::identity(), RationalMap::monomial(d)])
    }

    /// (z², pt): a branched double cover of the first factor.
    pub fn branched() -> Self {
        Self::new("branched", vec![RationalMap::monomial(2), RationalMap::constant(c(0.0))])
    }

    /// Mapping degree of each factor, from the solid-angle sum on a mesh.
    pub fn factor_degrees(&self) -> Vec<i64> {
        let mesh = SphereMesh::new(&SphereGrid::new(32, 64));
        self.maps
            .iter()
            .map(|f| {
                let img: Vec<[f64; 3]> = mesh.points.iter().map(|p| f.on_sphere(p).xyz()).collect();
                mapping_degree(&mesh, &img).round() as i64
            })
            .collect()
    }

    /// u*TX = ⊕ f_i*TS² = ⊕ O(2 d_i).
    pub fn tangent_bundle(&self) -> HolBundle {
        HolBundle::split(&self.factor_degrees().iter().map(|d| 2 * d).collect::<Vec<_>>())
    }

    /// Normal bundle of a graph over a degree-one factor j: projection to the other
    /// factors identifies it with ⊕_{i≠j} O(2 d_i).
    pub fn normal_bundle(&self) -> Result<HolBundle> {
        let d = self.factor_degrees();
        let j = d
            .iter()
            .position(|&x| x == 1)
            .ok_or_else(|| CrError::NotApplicable(format!("{} is not a graph over a factor", self.name)))?;
        let rest: Vec<i64> = d.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &x)| 2 * x).collect();
        Ok(HolBundle::split(&rest))
    }

    fn pulled_back_density(&self, m: &ProductKahler, z: C) -> f64 {
        self.maps
            .iter()
            .enumerate()
            .map(|(i, f)| m.scales[i] * fs_factor(f.eval(z)) * f.derivative(z).norm_sqr())
            .sum()
    }

    /// Conformal stretch |du| / |dz| relative to the round unit sphere.
    pub fn stretch(&self, m: &ProductKahler, z: C) -> f64 {
        let dom = 4.0 * fs_factor(z);
        (self.pulled_back_density(m, z) / dom).sqrt()
    }

    fn stretch_at_infinity(&self, m: &ProductKahler) -> f64 {
        let inv = HolSphere::new(&self.name, self.maps.iter().map(|f| f.at_infinity()).collect());
        inv.stretch(m, c(0.0))
    }

    /// ∫ ‖du‖² dvol with the Hilbert–Schmidt norm, by Gauss quadrature.
    pub fn energy(&self, m: &ProductKahler, grid: &SphereGrid) -> f64 {
        (0..grid.len())
            .map(|i| grid.weight(i) * 2.0 * self.stretch(m, grid.chart_coord(i)).powi(2))
            .sum()
    }

    /// Smallest stretch over the grid, the finite critical points of the first nonconstant
    /// factor, and the point at infinity.
    pub fn immersion_check(&self, m: &ProductKahler, grid: &SphereGrid) -> Result<f64> {
        let mut best = (f64::INFINITY, 0usize);
        let mut smax: f64 = 0.0;
        for i in 0..grid.len() {
            let s = self.stretch(m, grid.chart_coord(i));
            smax = smax.max(s);
            if s < best.0 {
                best = (s, i);
            }
        }
        let mut candidates: Vec<(C, f64)> = Vec::new();
        if let Some(w) = self.maps.iter().map(|f| f.wronskian()).find(|w| !w.is_empty()) {
            for r in roots(&w) {
                candidates.push((r, self.stretch(m, r)));
            }
        }
        let s_inf = self.stretch_at_infinity(m);
        for (z, s) in candidates {
            if s < best.0 {
                best = (s, grid.nearest_node(&SpherePoint::from_chart_z(z)));
            }
        }
        if s_inf < best.0 {
            best = (s_inf, grid.nearest_node(&SpherePoint::new(PI, 0.0)));
        }
        if !(best.0 > 1e-8 * smax) {
            return Err(CrError::NotImmersed {
                node: best.1,
                sigma: best.0,
            });
        }
        Ok(best.0)
    }

    pub fn omega(&self, m: &ProductKahler) -> f64 {
        m.symplectic_area(&self.factor_degrees())
    }
}

/// Truncation that resolves every twist the staircase of `e` visits.
pub fn splitting_l_max(e: &HolBundle) -> usize {
    let a = e.two_k.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0);
    a.div_ceil(2) + 4
}

pub fn probe_splitting(e: &HolBundle) -> Result<SplittingType> {
    splitting_type(e, splitting_l_max(e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CurKVerdict {
    Pass,
    Fail,
    /// c ≤ 2πk/ω[u]: the criterion says nothing.
    HypothesisNotMet,
    /// the claimed curvature bound exceeds a sampled bisectional curvature
    RejectedHypothesis,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurKReport {
    pub probe: String,
    pub k: i64,
    pub c: f64,
    pub c_sampled: f64,
    pub omega: f64,
    pub energy: f64,
    /// 2πk/ω[u]
    pub threshold: f64,
    /// c ∫‖du‖² / 4π, the lower bound on the degree of any line subbundle
    pub chern_lower_bound: f64,
    pub degrees: Vec<i64>,
    pub min_degree: i64,
    pub verdict: CurKVerdict,
}

const N_PLANES: usize = 600;

/// Line-subbundle degree bound from a bisectional curvature lower bound c: if
/// c ∫‖du‖²/4π > k then every line subbundle of u*TX has degree > k.
pub fn check_cur_k(m: &ProductKahler, u: &HolSphere, k: i64, claimed_c: Option<f64>) -> Result<CurKReport> {
    if u.maps.len() != m.factors() {
        return Err(CrError::Config(format!("{} has {} factors, metric has {}", u.name, u.maps.len(), m.factors())));
    }
    let planes: Vec<PlanePair> = m.sample_planes(N_PLANES, 7);
    let c_sampled = bisectional_bound(m, &planes)?;
    let c = claimed_c.unwrap_or(c_sampled);
    let grid = SphereGrid::new(64, 128);
    let energy = u.energy(m, &grid);
    let omega = u.omega(m);
    let threshold = 2.0 * PI * k as f64 / omega;
    let st = probe_splitting(&u.tangent_bundle())?;
    let min_degree = st.min_degree();
    let verdict = if c > c_sampled * (1.0 + 1e-12) + 1e-12 {
        CurKVerdict::RejectedHypothesis
    } else if !(c > threshold) {
        CurKVerdict::HypothesisNotMet
    } else if min_degree > k {
        CurKVerdict::Pass
    } else {
        CurKVerdict::Fail
    };
    Ok(CurKReport {
        probe: u.name.clone(),
        k,
        c,
        c_sampled,
        omega,
        energy,
        threshold,
        chern_lower_bound: c * energy / (4.0 * PI),
        degrees: st.degrees,
        min_degree,
        verdict,
    })
}

/// A probe for the superregularity criterion: either an explicit sphere in a product or a
/// synthetic immersed sphere given by its tangent and normal bundles.
#[derive(Debug, Clone, Serialize)]
pub enum Probe {
    Sphere(HolSphere),
    Synthetic {
        name: String,
        tangent: HolBundle,
        normal: HolBundle,
        omega: f64,
    },
}

impl Probe {
    pub fn name(&self) -> &str {
        match self {
            Probe::Sphere(u) => &u.name,
            Probe::Synthetic { name, .. } => name,
        }
    }

    /// Immersed sphere with normal bundle the extension 0 → O(-1) → N → O(1) → 0 given by
    /// the spin-0 coupling with modes `coupling` (as (2l, 2m, coefficient)). An exact
    /// coupling (no l = 0 mode) leaves N = O(-1) ⊕ O(1).
    pub fn synthetic_extension(name: &str, coupling: Vec<(i32, i32, C)>) -> Result<Self> {
        let normal = HolBundle::split(&[-1, 1]).with_coupling(0, 1, coupling)?;
        Ok(Probe::Synthetic {
            name: name.into(),
            tangent: HolBundle::split(&[2]),
            normal,
            omega: PI,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CriterionVerdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperregularCriteria {
    pub probe: String,
    pub c1_a: i64,
    pub c: f64,
    pub omega: f64,
    /// c > -2π/ω(A)
    pub gate_2pi: bool,
    /// c > -π/ω(A)
    pub gate_pi: bool,
    pub normal: Option<SplittingType>,
    pub tangent: SplittingType,
    pub min_stretch: Option<f64>,
    pub regular: bool,
    pub witness_degree: Option<i64>,
    pub verdict: CriterionVerdict,
    pub reason: String,
}

/// Normal-bundle criterion: an immersed sphere with c₁(A) = 2 is superregular when every
/// line subbundle of its normal bundle has degree 0, i.e. the normal bundle is trivial.
pub fn check_superregular_criteria(probe: &Probe, m: &ProductKahler, c1_a: i64) -> Result<SuperregularCriteria> {
    let planes = m.sample_planes(N_PLANES, 7);
    let c = bisectional_bound(m, &planes)?;
    let (tangent_bundle, normal_bundle, omega, min_stretch) = match probe {
        Probe::Sphere(u) => {
            let s = u.immersion_check(m, &SphereGrid::new(48, 96))?;
            (u.tangent_bundle(), u.normal_bundle(), u.omega(m), Some(s))
        }
        Probe::Synthetic {
            tangent,
            normal,
            omega,
            ..
        } => {
            let mut t = tangent.clone();
            t.two_k.extend(&normal.two_k);
            (t, Ok(normal.clone()), *omega, None)
        }
    };
    let tangent = probe_splitting(&tangent_bundle)?;
    let regular = tangent.degrees.iter().all(|&d| d >= -1);
    let mut out = SuperregularCriteria {
        probe: probe.name().into(),
        c1_a,
        c,
        omega,
        gate_2pi: c > -2.0 * PI / omega,
        gate_pi: c > -PI / omega,
        normal: None,
        tangent,
        min_stretch,
        regular,
        witness_degree: None,
        verdict: CriterionVerdict::NotApplicable,
        reason: String::new(),
    };
    let normal = match normal_bundle {
        Ok(nb) => probe_splitting(&nb)?,
        Err(e) => {
            out.reason = e.to_string();
            return Ok(out);
        }
    };
    out.normal = Some(normal.clone());
    if out.tangent.c1 != c1_a {
        out.reason = format!("class has c1 {} but {} was claimed", out.tangent.c1, c1_a);
        return Ok(out);
    }
    if c1_a != 2 {
        out.reason = format!("criterion needs c1(A) = 2, got {c1_a}");
        return Ok(out);
    }
    let min = normal.min_degree();
    let trivial = normal.degrees.iter().all(|&d| d >= 0) && normal.c1 == 0;
    out.verdict = if trivial {
        out.reason = "normal bundle is trivial".into();
        CriterionVerdict::Pass
    } else {
        out.witness_degree = Some(min);
        out.reason = format!("normal line subbundle of degree {min}");
        CriterionVerdict::Fail
    };
    Ok(out)
}
