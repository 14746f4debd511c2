use num_complex::Complex64;

use crate::sphere::wigner::{lowering_coeff, spin_profile};
use crate::sphere::{SphereGrid, SpherePoint};

pub type C64 = Complex64;

/// Modes (2l, 2m) of spin 2k/2 with l ≤ cutoff, where the cutoff is `l_max` for integer
/// spins and `l_max + ½` for half-integer ones.
pub fn spin_modes(two_k: i32, l_max: usize) -> Vec<(i32, i32)> {
    let two_cut = 2 * l_max as i32 + (two_k.rem_euclid(2));
    let mut out = Vec::new();
    let mut two_l = two_k.abs();
    while two_l <= two_cut {
        let mut two_m = -two_l;
        while two_m <= two_l {
            out.push((two_l, two_m));
            two_m += 2;
        }
        two_l += 2;
    }
    out
}

/// Scalar spin-weighted transform of one (possibly half-integer) spin on a grid.
#[derive(Debug, Clone)]
pub struct SpinBasis {
    pub two_k: i32,
    pub modes: Vec<(i32, i32)>,
    /// profile[ring * modes + idx]
    prof: Vec<f64>,
    n_theta: usize,
}

impl SpinBasis {
    pub fn new(two_k: i32, l_max: usize, grid: &SphereGrid) -> Self {
        let modes = spin_modes(two_k, l_max);
        let mut prof = Vec::with_capacity(grid.n_theta * modes.len());
        for &th in &grid.ring_theta {
            for &(two_l, two_m) in &modes {
                prof.push(spin_profile(two_l, two_m, two_k, th));
            }
        }
        Self {
            two_k,
            modes,
            prof,
            n_theta: grid.n_theta,
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    fn phase(two_m: i32, phi: f64) -> C64 {
        C64::from_polar(1.0, 0.5 * two_m as f64 * phi)
    }

    /// Values of a single basis function at every node.
    pub fn basis_values(&self, idx: usize, grid: &SphereGrid) -> Vec<C64> {
        let nm = self.len();
        let (_, two_m) = self.modes[idx];
        (0..grid.len())
            .map(|i| {
                let r = grid.ring_of(i);
                self.prof[r * nm + idx] * Self::phase(two_m, grid.nodes[i].phi)
            })
            .collect()
    }

    pub fn synthesize(&self, c: &[C64], grid: &SphereGrid) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); grid.len()];
        let nm = self.len();
        for (idx, &(_, two_m)) in self.modes.iter().enumerate() {
            if c[idx] == C64::new(0.0, 0.0) {
                continue;
            }
            for (i, v) in out.iter_mut().enumerate() {
                let r = grid.ring_of(i);
                *v += c[idx] * self.prof[r * nm + idx] * Self::phase(two_m, grid.nodes[i].phi);
            }
        }
        out
    }

    /// Quadrature projection onto the modes (exact for band-limited input on a fine
    /// enough grid).
    pub fn analyze(&self, v: &[C64], grid: &SphereGrid) -> Vec<C64> {
        let nm = self.len();
        let mut out = vec![C64::new(0.0, 0.0); nm];
        for (i, val) in v.iter().enumerate() {
            let r = grid.ring_of(i);
            let w = grid.nodes[i].weight;
            let phi = grid.nodes[i].phi;
            for (idx, &(_, two_m)) in self.modes.iter().enumerate() {
                out[idx] += w * self.prof[r * nm + idx] * Self::phase(two_m, phi).conj() * val;
            }
        }
        debug_assert_eq!(self.n_theta, grid.n_theta);
        out
    }

    /// Value of Σ c_i basis_i at an arbitrary point.
    pub fn eval(&self, c: &[C64], p: &SpherePoint) -> C64 {
        self.modes
            .iter()
            .zip(c)
            .map(|(&(two_l, two_m), ci)| {
                ci * spin_profile(two_l, two_m, self.two_k, p.theta) * Self::phase(two_m, p.phi)
            })
            .sum()
    }
}

/// Diagonal action of ∂̄ = ½(∂_θ + (i/sin θ)∂_φ + k cot θ) from spin k to spin k-1,
/// as (input index, output index, factor) over the modes of the two bases.
pub fn dbar_entries(input: &SpinBasis, output: &SpinBasis) -> Vec<(usize, usize, f64)> {
    assert_eq!(output.two_k, input.two_k - 2);
    let mut out = Vec::new();
    for (i, &(two_l, two_m)) in input.modes.iter().enumerate() {
        if let Some(o) = output.modes.iter().position(|&x| x == (two_l, two_m)) {
            out.push((i, o, 0.5 * lowering_coeff(two_l, input.two_k)));
        }
    }
    out
}
