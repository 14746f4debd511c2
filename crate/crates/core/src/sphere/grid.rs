use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{CrError, Result};

/// A point of the unit sphere in polar coordinates. The polar axis is x0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub theta: f64,
    pub phi: f64,
}

impl SpherePoint {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Embedding (x0, x1, x2) = (cos θ, sin θ cos φ, sin θ sin φ).
    pub fn xyz(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [ct, st * cp, st * sp]
    }

    pub fn e_theta(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [-st, ct * cp, ct * sp]
    }

    pub fn e_phi(&self) -> [f64; 3] {
        let (sp, cp) = self.phi.sin_cos();
        [0.0, -sp, cp]
    }

    /// North-chart stereographic coordinate, z = 0 at θ = 0.
    pub fn chart_z(&self) -> Complex64 {
        Complex64::from_polar((0.5 * self.theta).tan(), self.phi)
    }

    pub fn from_chart_z(z: Complex64) -> Self {
        Self::new(2.0 * z.norm().atan(), z.arg())
    }

    pub fn from_xyz(x: [f64; 3]) -> Self {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        Self::new((x[0] / r).clamp(-1.0, 1.0).acos(), x[2].atan2(x[1]))
    }

    /// Great-circle distance.
    pub fn distance(&self, other: &SpherePoint) -> f64 {
        let a = self.xyz();
        let b = other.xyz();
        let c = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let cr = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        (cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]).sqrt().atan2(c)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridNode {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
}

/// Gauss-Legendre in cos θ times equispaced φ. Node index = ring * n_phi + j.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub nodes: Vec<GridNode>,
    /// Gauss weights in x = cos θ, one per ring.
    pub ring_weights: Vec<f64>,
    pub ring_theta: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on [-1, 1], nodes returned in decreasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, t);
        if d != 0.0 {
            dp = d;
        }
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let ring_theta: Vec<f64> = x.iter().map(|v| v.clamp(-1.0, 1.0).acos()).collect();
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        for i in 0..n_theta {
            for j in 0..n_phi {
                nodes.push(GridNode {
                    theta: ring_theta[i],
                    phi: j as f64 * dphi,
                    weight: w[i] * dphi,
                });
            }
        }
        Self {
            n_theta,
            n_phi,
            nodes,
            ring_weights: w,
            ring_theta,
        }
    }

    /// Largest truncation degree for which this grid integrates products of basis
    /// functions exactly.
    pub fn exact_degree(&self) -> usize {
        let by_theta = self.n_theta.saturating_sub(1);
        let by_phi = self.n_phi.saturating_sub(1) / 2;
        by_theta.min(by_phi)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn point(&self, idx: usize) -> SpherePoint {
        let n = &self.nodes[idx];
        SpherePoint::new(n.theta, n.phi)
    }

    pub fn points(&self) -> Vec<SpherePoint> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn chart_coord(&self, idx: usize) -> Complex64 {
        self.point(idx).chart_z()
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.nodes[idx].weight
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// Grid refined by an integer factor in both directions.
    pub fn refined(&self, factor: usize) -> Self {
        Self::new(self.n_theta * factor, self.n_phi * factor)
    }

    pub fn ring_of(&self, idx: usize) -> usize {
        idx / self.n_phi
    }

    pub fn nearest_node(&self, p: &SpherePoint) -> usize {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for i in 0..self.len() {
            let d = self.point(i).distance(p);
            if d < bd {
                bd = d;
                best = i;
            }
        }
        best
    }
}

/// The standard grid for truncation degree `l`: (L+2) colatitudes, (2L+4) azimuths.
pub fn make_grid(l: usize) -> Result<SphereGrid> {
    if l < 2 {
        return Err(CrError::InvalidTruncation { l });
    }
    Ok(SphereGrid::new(l + 2, 2 * l + 4))
}
