use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use ndarray::{s, Array1, Array2};
use serde::Serialize;

use crate::counterexample::Normalization;
use crate::cr::{BundleHom, CROperator, TAU_SR};
use crate::error::{CrError, Result};
use crate::linalg::svd_full;
use crate::sphere::{AntiForm, Section, Spectral, SpherePoint};

pub const DEFAULT_RADIUS: f64 = 0.4;
const PATTERNS: usize = 9;

/// Geodesic cap with the bump (1 - (d/R)²)⁴.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Cap {
    pub center: SpherePoint,
    pub radius: f64,
}

impl Cap {
    pub fn bump(&self, p: &SpherePoint) -> f64 {
        let d = self.center.distance(p) / self.radius;
        if d >= 1.0 {
            0.0
        } else {
            (1.0 - d * d).powi(4)
        }
    }
}

/// Polynomials of degree ≤ 2 restricted to the sphere (z² omitted).
fn pattern(p: &SpherePoint, k: usize) -> f64 {
    let [x, y, z] = p.xyz();
    match k {
        0 => 1.0,
        1 => x,
        2 => y,
        3 => z,
        4 => x * x,
        5 => y * y,
        6 => x * y,
        7 => x * z,
        _ => y * z,
    }
}

/// SVD data of D: P = V_r Σ⁻¹ U_rᵀ and orthonormal kernel / cokernel bases.
pub struct Factors {
    pub u_r: Array2<f64>,
    pub s_r: Array1<f64>,
    pub v_r: Array2<f64>,
    pub kernel: Array2<f64>,
    pub cokernel: Array2<f64>,
}

impl Factors {
    fn new(d: &CROperator) -> Result<Self> {
        let svd = svd_full(&d.matrix)?;
        let smax = svd.s[0];
        let r = svd.s.iter().filter(|&&v| v > crate::cr::TAU_RANK * smax).count();
        Ok(Self {
            u_r: svd.u.slice(s![.., ..r]).to_owned(),
            s_r: svd.s.slice(s![..r]).to_owned(),
            v_r: svd.vt.slice(s![..r, ..]).t().to_owned(),
            kernel: svd.vt.slice(s![r.., ..]).t().to_owned(),
            cokernel: svd.u.slice(s![.., r..]).to_owned(),
        })
    }

    /// Pseudo-inverse of D (C^⊥ → K^⊥).
    pub fn pinv(&self, x: &Array1<f64>) -> Array1<f64> {
        let c = self.u_r.t().dot(x) / &self.s_r;
        self.v_r.dot(&c)
    }

    pub fn pinv_t(&self, x: &Array1<f64>) -> Array1<f64> {
        let c = self.v_r.t().dot(x) / &self.s_r;
        self.u_r.dot(&c)
    }

    /// Indices (into s_r) of singular values below 1e-3·σ_max, and the first value above.
    pub fn small_directions(&self) -> (Vec<usize>, f64) {
        let smax = self.s_r[0];
        let small: Vec<usize> = (0..self.s_r.len()).filter(|&j| self.s_r[j] < 1e-3 * smax).collect();
        let bulk = small
            .first()
            .map(|&j| self.s_r[j - 1])
            .unwrap_or(self.s_r[self.s_r.len() - 1]);
        (small, bulk)
    }

    pub fn project_kernel(&self, x: &Array1<f64>) -> Array1<f64> {
        self.kernel.dot(&self.kernel.t().dot(x))
    }
}

#[derive(Debug, Clone)]
pub struct FamilySample {
    pub s: f64,
    pub y: BundleHom,
    pub g: [AntiForm; 4],
    /// e_i^s projected onto the numerical kernel of D
    pub ks: [Section; 4],
    /// unit vector of K orthogonal to K_s
    pub v_perp: Array1<f64>,
    /// η-component of A_s v_perp, the scalar L̃_s
    pub ell: f64,
    /// norm of L_s restricted to K
    pub rho: f64,
    /// sine of the angle between ker(L_s) ∩ K and K_s
    pub ks_angle: f64,
    pub patch_min_sigma: f64,
}

pub struct PerturbationFamily {
    pub l_max: usize,
    pub d: CROperator,
    pub factors: Factors,
    pub e: [Section; 5],
    pub cap: Cap,
    pub p0: SpherePoint,
    pub zero_point: SpherePoint,
    pub samples: Vec<FamilySample>,
}

impl std::fmt::Debug for PerturbationFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PerturbationFamily")
            .field("l_max", &self.l_max)
            .field("cap", &self.cap)
            .field("samples", &self.samples.len())
            .finish()
    }
}

fn to_arr(s: &Section) -> Array1<f64> {
    Array1::from(s.to_real())
}

fn frame_at(vals: &[Vec<Vector4<f64>>], i: usize) -> Matrix4<f64> {
    Matrix4::from_columns(&[vals[0][i], vals[1][i], vals[2][i], vals[3][i]])
}

impl PerturbationFamily {
    pub fn e4s(&self, s: f64) -> Section {
        self.e[3].scale(s).axpy(1.0 - s, &self.e[4])
    }

    pub fn sample(&self, s: f64) -> Option<&FamilySample> {
        self.samples.iter().find(|x| (x.s - s).abs() < 1e-12)
    }

    /// The perturbation A_s = ½ · (multiplication by Y_s), as a coefficient matrix.
    pub fn perturbation_matrix(&self, spec: &Spectral, fs: &FamilySample) -> Result<Array2<f64>> {
        Ok(crate::cr::y_matrix(spec, &fs.y)? * 0.5)
    }

    /// max over consecutive samples of sup‖Y_{s_{k+1}} - Y_{s_k}‖.
    pub fn max_y_step(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].y.add(&w[0].y.scale(-1.0)).sup_norm())
            .fold(0.0, f64::max)
    }

    pub fn build_sample(&self, spec: &Spectral, s: f64) -> Result<FamilySample> {
        let m_c = self.factors.cokernel.ncols();
        if m_c != 1 {
            return Err(CrError::NotApplicable(format!(
                "cokernel dimension {m_c}; the patch construction handles m = 1"
            )));
        }
        let e4s = self.e4s(s);
        let frame = [&self.e[0], &self.e[1], &self.e[2], &e4s];
        let pts = spec.grid.points();
        let n = pts.len();
        let fvals: Vec<Vec<Vector4<f64>>> = frame.iter().map(|x| spec.synthesize(*x)).collect();

        let mut patch_min: f64 = f64::INFINITY;
        let mut inv = vec![Matrix4::zeros(); n];
        let bump: Vec<f64> = pts.iter().map(|p| self.cap.bump(p)).collect();
        for i in 0..n {
            if bump[i] == 0.0 {
                continue;
            }
            let m = frame_at(&fvals, i);
            let sv = m.singular_values();
            let ratio = sv.min() / sv.max();
            patch_min = patch_min.min(ratio);
            if ratio <= TAU_SR {
                return Err(CrError::PatchDegenerate { s, node: i });
            }
            inv[i] = m.try_inverse().unwrap();
        }
        // oversampled check of the cap
        let over = spec.oversampled(crate::cr::OVERSAMPLE);
        let ovals: Vec<Vec<Vector4<f64>>> = frame.iter().map(|x| over.synthesize(*x)).collect();
        for (i, p) in over.grid.points().iter().enumerate() {
            if self.cap.bump(p) == 0.0 {
                continue;
            }
            let sv = frame_at(&ovals, i).singular_values();
            let ratio = sv.min() / sv.max();
            patch_min = patch_min.min(ratio);
            if ratio <= TAU_SR {
                return Err(CrError::PatchDegenerate { s, node: i });
            }
        }

        let kproj = |x: &Section| -> Section {
            Section::from_real(self.l_max, self.factors.project_kernel(&to_arr(x)).as_slice().unwrap())
                .unwrap()
        };
        let ks: Vec<Section> = frame.iter().map(|x| kproj(x)).collect();
        let u_s = kproj(&self.e[3].scale(1.0 - s).axpy(-s, &self.e[4]));
        let eta = AntiForm::from_real(self.l_max, self.factors.cokernel.column(0).to_vec().as_slice())?;
        let eta_v = spec.synthesize(&eta);

        // pairing ⟨η, ½ Y^{(i,k,p)} x⟩ for every dictionary element
        let n_dict = 4 * 4 * PATTERNS;
        let pairing = |x: &Section| -> DVector<f64> {
            let xv = spec.synthesize(x);
            let mut out = DVector::zeros(n_dict);
            for z in 0..n {
                if bump[z] == 0.0 {
                    continue;
                }
                let c = inv[z] * xv[z];
                let w = spec.grid.weight(z) * bump[z];
                for i in 0..4 {
                    for k in 0..4 {
                        for p in 0..PATTERNS {
                            out[(i * 4 + k) * PATTERNS + p] += w * pattern(&pts[z], p) * c[i] * eta_v[z][k];
                        }
                    }
                }
            }
            out
        };
        let mut cons = DMatrix::zeros(4, n_dict);
        for (j, v) in ks.iter().enumerate() {
            cons.set_row(j, &pairing(v).transpose());
        }
        let q = pairing(&u_s);

        // quadratic cost: leakage of A into the near-null left singular directions of D,
        // weighted by 1/σ², plus the pointwise L² size of A over the bulk scale
        let idx = |i: usize, k: usize, p: usize| (i * 4 + k) * PATTERNS + p;
        let (small, bulk) = self.factors.small_directions();
        let mut cost = DMatrix::<f64>::zeros(n_dict, n_dict);
        for &j in &small {
            let uj = AntiForm::from_real(self.l_max, self.factors.u_r.column(j).to_vec().as_slice())?;
            let uv = spec.synthesize(&uj);
            let mut rows = DMatrix::<f64>::zeros(n_dict, 4 * crate::sphere::mode_count(self.l_max, 0));
            for i in 0..4 {
                for k in 0..4 {
                    for p in 0..PATTERNS {
                        let f: Vec<Vector4<f64>> = (0..n)
                            .map(|z| {
                                if bump[z] == 0.0 {
                                    Vector4::zeros()
                                } else {
                                    inv[z].row(i).transpose() * (bump[z] * pattern(&pts[z], p) * uv[z][k])
                                }
                            })
                            .collect();
                        let c: Section = spec.analyze(&f);
                        rows.set_row(idx(i, k, p), &DVector::from_vec(c.to_real()).transpose());
                    }
                }
            }
            let sj = self.factors.s_r[j];
            cost += (&rows * rows.transpose()) / (sj * sj);
        }
        let mut size = DMatrix::<f64>::zeros(n_dict, n_dict);
        for z in 0..n {
            if bump[z] == 0.0 {
                continue;
            }
            let g = inv[z] * inv[z].transpose();
            let w = spec.grid.weight(z) * bump[z] * bump[z];
            for i in 0..4 {
                for i2 in 0..4 {
                    for p in 0..PATTERNS {
                        for p2 in 0..PATTERNS {
                            let v = w * g[(i, i2)] * pattern(&pts[z], p) * pattern(&pts[z], p2);
                            for k in 0..4 {
                                size[(idx(i, k, p), idx(i2, k, p2))] += v;
                            }
                        }
                    }
                }
            }
        }
        cost += size / (bulk * bulk);
        let ridge = 1e-12 * cost.trace() / n_dict as f64;
        for d in 0..n_dict {
            cost[(d, d)] += ridge;
        }
        let mut b = DMatrix::zeros(5, n_dict);
        b.rows_mut(0, 4).copy_from(&cons);
        b.set_row(4, &q.transpose());
        let chol = cost
            .cholesky()
            .ok_or(CrError::Linalg("dictionary cost not positive definite".into()))?;
        let hb = chol.solve(&b.transpose());
        let mut rhs = DVector::zeros(5);
        rhs[4] = 1.0;
        let mult = (&b * &hb)
            .lu()
            .solve(&rhs)
            .ok_or(CrError::SurjectivityFail { s, sigma: 0.0 })?;
        let a = &hb * mult;
        let an = a.norm();
        if !an.is_finite() || an == 0.0 {
            return Err(CrError::SurjectivityFail { s, sigma: 0.0 });
        }
        let a = a / an;

        let mut ysamp = vec![Matrix4::zeros(); n];
        let mut gvals: Vec<Vec<Vector4<f64>>> = vec![vec![Vector4::zeros(); n]; 4];
        for z in 0..n {
            if bump[z] == 0.0 {
                continue;
            }
            let mut w = Matrix4::zeros();
            for i in 0..4 {
                for k in 0..4 {
                    let mut v = 0.0;
                    for p in 0..PATTERNS {
                        v += a[(i * 4 + k) * PATTERNS + p] * pattern(&pts[z], p);
                    }
                    w[(k, i)] = v * bump[z];
                }
            }
            for (i, g) in gvals.iter_mut().enumerate() {
                g[z] = w.column(i).into_owned();
            }
            ysamp[z] = 2.0 * w * inv[z];
        }
        let y = BundleHom { samples: ysamp };
        let g: Vec<AntiForm> = gvals.iter().map(|v| spec.analyze(v)).collect();

        // L_s on K and the complement of K_s inside K
        let kb = &self.factors.kernel;
        let dimk = kb.ncols();
        let kcoords: Vec<Array1<f64>> = ks.iter().map(|v| kb.t().dot(&to_arr(v))).collect();
        let mut row = Array1::zeros(dimk);
        for b in 0..dimk {
            let sec = Section::from_real(self.l_max, kb.column(b).to_vec().as_slice())?;
            row[b] = pairing(&sec).dot(&a);
        }
        let rho = row.dot(&row).sqrt();
        let kmat = DMatrix::from_fn(dimk, 4, |r, c| kcoords[c][r]);
        let svd = kmat.clone().svd(true, false);
        let uu = svd.u.unwrap();
        // orthonormal basis of span(K_s) in K-coordinates, then its complement
        let mut perp = DVector::from_fn(dimk, |r, _| row[r]);
        for c in 0..4 {
            let col = uu.column(c);
            perp -= col * col.dot(&perp);
        }
        let perp = perp.normalize();
        let v_perp = kb.dot(&Array1::from_iter(perp.iter().cloned()));
        let ell = perp.iter().zip(row.iter()).map(|(x, y)| x * y).sum::<f64>();
        // ker(row) inside K versus span(K_s)
        let rn = DVector::from_fn(dimk, |r, _| row[r] / rho);
        let leak = (0..4).map(|c| uu.column(c).dot(&rn).powi(2)).sum::<f64>().sqrt();
        if ell.abs() <= 1e-12 * rho.max(1e-300) || rho == 0.0 {
            return Err(CrError::SurjectivityFail { s, sigma: ell.abs() });
        }
        Ok(FamilySample {
            s,
            y,
            g: [g[0].clone(), g[1].clone(), g[2].clone(), g[3].clone()],
            ks: [ks[0].clone(), ks[1].clone(), ks[2].clone(), ks[3].clone()],
            v_perp,
            ell,
            rho,
            ks_angle: leak,
            patch_min_sigma: patch_min,
        })
    }
}

/// Family over `n_s` uniform samples of [-1, 1] for the constructed operator `d` and
/// the normalized five-tuple.
pub fn build_perturbation_family(
    spec: &Spectral,
    d: &CROperator,
    norm: &Normalization,
    n_s: usize,
    radius: f64,
) -> Result<PerturbationFamily> {
    let factors = Factors::new(d)?;
    if factors.kernel.ncols() != 4 + factors.cokernel.ncols() || factors.cokernel.ncols() == 0 {
        return Err(CrError::NotApplicable(format!(
            "kernel {} / cokernel {}",
            factors.kernel.ncols(),
            factors.cokernel.ncols()
        )));
    }
    let mut fam = PerturbationFamily {
        l_max: d.l_max,
        d: d.clone(),
        factors,
        e: norm.e.clone(),
        cap: Cap {
            center: norm.p0,
            radius,
        },
        p0: norm.p0,
        zero_point: norm.zero_point,
        samples: Vec::new(),
    };
    let grid: Vec<f64> = if n_s == 1 {
        vec![1.0]
    } else {
        (0..n_s).map(|k| -1.0 + 2.0 * k as f64 / (n_s - 1) as f64).collect()
    };
    let mut samples = Vec::with_capacity(grid.len());
    for s in grid {
        samples.push(fam.build_sample(spec, s)?);
    }
    fam.samples = samples;
    Ok(fam)
}
