use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{CrError, Result};

/// Conformal factor of the Fubini–Study metric |dz|²/(1+|z|²)² (curvature 4, area π).
pub fn fs_factor(z: Complex64) -> f64 {
    let r = 1.0 + z.norm_sqr();
    1.0 / (r * r)
}

/// Gaussian curvature -Δ log λ / (2λ) of λ|dz|², by central differences with step h.
pub fn conformal_curvature_fd(lambda: &dyn Fn(Complex64) -> f64, z: Complex64, h: f64) -> f64 {
    let ll = |w: Complex64| lambda(w).ln();
    let c = ll(z);
    let lap = (ll(z + h) + ll(z - h) + ll(z + Complex64::new(0.0, h)) + ll(z - Complex64::new(0.0, h))
        - 4.0 * c)
        / (h * h);
    -lap / (2.0 * lambda(z))
}

/// (S²)^N with the product metric ⊕ scales[i]·g_FS.
#[derive(Debug, Clone, Serialize)]
pub struct ProductKahler {
    pub scales: Vec<f64>,
}

/// A point in the product (chart coordinate per factor) and two tangent vectors in
/// coordinate components; they span the J-invariant planes p = ⟨X, JX⟩, p′ = ⟨Y, JY⟩.
#[derive(Debug, Clone, Serialize)]
pub struct PlanePair {
    pub z: Vec<Complex64>,
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

impl ProductKahler {
    pub fn new(scales: Vec<f64>) -> Result<Self> {
        if scales.is_empty() || scales.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(CrError::Config(format!("factor scales must be positive, got {scales:?}")));
        }
        Ok(Self { scales })
    }

    /// S² × S² with the first factor scaled by k.
    pub fn two_factor(k: f64) -> Result<Self> {
        Self::new(vec![k, 1.0])
    }

    pub fn factors(&self) -> usize {
        self.scales.len()
    }

    pub fn gaussian_curvature(&self, i: usize) -> f64 {
        4.0 / self.scales[i]
    }

    pub fn factor_area(&self, i: usize) -> f64 {
        std::f64::consts::PI * self.scales[i]
    }

    /// ω of a class with factor degrees d.
    pub fn symplectic_area(&self, degrees: &[i64]) -> f64 {
        degrees.iter().zip(&self.scales).map(|(&d, &k)| d as f64 * k * std::f64::consts::PI).sum()
    }

    pub fn metric_factor(&self, i: usize, z: Complex64) -> f64 {
        self.scales[i] * fs_factor(z)
    }

    /// H(p, p′) = R(X, JX, Y, JY) for unit X, Y. For a product of surfaces this is
    /// Σ K_i |X_i|² |Y_i|².
    pub fn bisectional(&self, p: &PlanePair) -> Result<f64> {
        let n = self.factors();
        if p.z.len() != n || p.x.len() != n || p.y.len() != n {
            return Err(CrError::Config("plane pair has the wrong number of factors".into()));
        }
        let nx: Vec<f64> = (0..n).map(|i| self.metric_factor(i, p.z[i]) * p.x[i].norm_sqr()).collect();
        let ny: Vec<f64> = (0..n).map(|i| self.metric_factor(i, p.z[i]) * p.y[i].norm_sqr()).collect();
        let (sx, sy): (f64, f64) = (nx.iter().sum(), ny.iter().sum());
        if sx == 0.0 || sy == 0.0 {
            return Err(CrError::Config("zero tangent vector".into()));
        }
        Ok((0..n).map(|i| self.gaussian_curvature(i) * nx[i] * ny[i]).sum::<f64>() / (sx * sy))
    }

    /// Random plane pairs: a third pure in one factor, a third mixed (X and Y in different
    /// factors), the rest generic.
    pub fn sample_planes(&self, count: usize, seed: u64) -> Vec<PlanePair> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = self.factors();
        let mut cz = || {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(a, b)
        };
        let mut out = Vec::with_capacity(count);
        for s in 0..count {
            let z: Vec<Complex64> = (0..n).map(|_| cz()).collect();
            let mut x: Vec<Complex64> = (0..n).map(|_| cz()).collect();
            let mut y: Vec<Complex64> = (0..n).map(|_| cz()).collect();
            let i = s % n;
            match s % 3 {
                0 => {
                    for j in (0..n).filter(|&j| j != i) {
                        x[j] = Complex64::new(0.0, 0.0);
                        y[j] = Complex64::new(0.0, 0.0);
                    }
                }
                1 if n > 1 => {
                    let k = (i + 1) % n;
                    for j in 0..n {
                        if j != i {
                            x[j] = Complex64::new(0.0, 0.0);
                        }
                        if j != k {
                            y[j] = Complex64::new(0.0, 0.0);
                        }
                    }
                }
                _ => {}
            }
            out.push(PlanePair { z, x, y });
        }
        out
    }
}

/// Minimum sampled bisectional curvature.
pub fn bisectional_bound(m: &ProductKahler, samples: &[PlanePair]) -> Result<f64> {
    let mut min = f64::INFINITY;
    for p in samples {
        min = min.min(m.bisectional(p)?);
    }
    Ok(min)
}

/// Exact infimum of H over all plane pairs: the smallest factor curvature for one factor,
/// 0 for a genuine product.
pub fn bisectional_infimum(m: &ProductKahler) -> f64 {
    if m.factors() == 1 {
        m.gaussian_curvature(0)
    } else {
        0.0
    }
}
