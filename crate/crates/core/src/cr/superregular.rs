use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::kernel::kernel_cokernel;
use super::operator::CROperator;
use crate::error::{CrError, Result};
use crate::sphere::{FrameField, FrameScan, Section, SpherePoint, Spectral};

pub const TAU_SR: f64 = 1e-6;


#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SuperregVerdict {
    Superregular,
    Degenerate,
    NotFound,
}

/// Pair of nodes whose frame determinants have opposite signs, or a single
/// node where the frame drops rank.
#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyWitness {
    pub node: usize,
    pub point: SpherePoint,
    pub det: f64,
    pub sigma: f64,
    pub reference_node: usize,
    pub reference_point: SpherePoint,
    pub reference_det: f64,
    pub oversampled: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperregCertificate {
    pub min_frame_sigma: f64,
    pub argmin_node: usize,
    pub argmin_point: SpherePoint,
    pub min_frame_sigma_oversampled: f64,
    /// (positive, nonpositive) determinant counts on the quadrature grid
    pub det_sign_profile: (usize, usize),
    pub det_sign_profile_oversampled: (usize, usize),
    pub witness: Option<DegeneracyWitness>,
    pub verdict: SuperregVerdict,
    #[serde(skip)]
    pub basis: Option<[Section; 4]>,
    /// max_i ‖D b_i‖ / (σ_max ‖b_i‖)
    pub kernel_residual: f64,
}

pub enum BasisChoice<'a> {
    Given(&'a [Section; 4]),
    Auto { budget: usize, seed: u64 },
}

pub const OVERSAMPLE: usize = 4;

fn scan_grid(spec: &Spectral, b: &[Section; 4]) -> (FrameField, FrameScan) {
    let ff = FrameField::new(spec, &[&b[0], &b[1], &b[2], &b[3]]);
    let sc = ff.scan();
    (ff, sc)
}

/// Frame-based certificate of a four-tuple, with the determinant sign at
/// `reference` (default: the best-conditioned node) as the orientation.
pub fn certify_frame(
    spec: &Spectral,
    b: &[Section; 4],
    reference: Option<&SpherePoint>,
) -> SuperregCertificate {
    let over = spec.oversampled(OVERSAMPLE);
    let (ff, sc) = scan_grid(spec, b);
    let (ffo, sco) = scan_grid(&over, b);
    let ref_node = match reference {
        Some(p) => spec.grid.nearest_node(p),
        None => {
            let mut best = 0;
            let mut bd = 0.0;
            for (i, m) in ff.matrices.iter().enumerate() {
                let d = m.determinant().abs();
                if d > bd {
                    bd = d;
                    best = i;
                }
            }
            best
        }
    };
    let ref_det = ff.matrices[ref_node].determinant();
    let sign = ref_det.signum();
    let mut witness = None;
    // opposite-sign nodes, quadrature grid first, then the verification grid
    for (grid_spec, field, over_flag) in [(spec, &ff, false), (&over, &ffo, true)] {
        if witness.is_some() {
            break;
        }
        let mut worst: Option<(usize, f64)> = None;
        for (i, m) in field.matrices.iter().enumerate() {
            let d = m.determinant() * sign;
            if d <= 0.0 && worst.is_none_or(|(_, w)| d < w) {
                worst = Some((i, d));
            }
        }
        if let Some((i, _)) = worst {
            let m = &field.matrices[i];
            let sv = m.singular_values();
            witness = Some(DegeneracyWitness {
                node: i,
                point: grid_spec.grid.point(i),
                det: m.determinant(),
                sigma: sv.min() / sv.max(),
                reference_node: ref_node,
                reference_point: spec.grid.point(ref_node),
                reference_det: ref_det,
                oversampled: over_flag,
            });
        }
    }
    let min_all = sc.min_sigma.min(sco.min_sigma);
    if witness.is_none() && min_all <= TAU_SR {
        let (g, s, f, o) = if sc.min_sigma <= sco.min_sigma {
            (spec, &sc, &ff, false)
        } else {
            (&over, &sco, &ffo, true)
        };
        witness = Some(DegeneracyWitness {
            node: s.argmin,
            point: g.grid.point(s.argmin),
            det: f.matrices[s.argmin].determinant(),
            sigma: s.min_sigma,
            reference_node: ref_node,
            reference_point: spec.grid.point(ref_node),
            reference_det: ref_det,
            oversampled: o,
        });
    }
    let verdict = if witness.is_none() && min_all > TAU_SR {
        SuperregVerdict::Superregular
    } else {
        SuperregVerdict::Degenerate
    };
    SuperregCertificate {
        min_frame_sigma: sc.min_sigma,
        argmin_node: sc.argmin,
        argmin_point: spec.grid.point(sc.argmin),
        min_frame_sigma_oversampled: sco.min_sigma,
        det_sign_profile: (sc.n_positive, sc.n_negative),
        det_sign_profile_oversampled: (sco.n_positive, sco.n_negative),
        witness,
        verdict,
        basis: Some(b.clone()),
        kernel_residual: 0.0,
    }
}

fn residual(d: &CROperator, b: &[Section; 4]) -> f64 {
    let smax = d.sigma_max();
    b.iter()
        .map(|x| d.apply(x).norm() / (smax * x.norm().max(f64::MIN_POSITIVE)))
        .fold(0.0, f64::max)
}

/// Certify that ker D contains four sections independent at every point.
pub fn certify_superregular(
    spec: &Spectral,
    d: &CROperator,
    basis: BasisChoice<'_>,
    reference: Option<&SpherePoint>,
) -> Result<SuperregCertificate> {
    match basis {
        BasisChoice::Given(b) => {
            let res = residual(d, b);
            if res > 1e-7 {
                return Err(CrError::ResidualFail {
                    what: "basis kernel residual".into(),
                    value: res,
                    tol: 1e-7,
                });
            }
            let mut c = certify_frame(spec, b, reference);
            c.kernel_residual = res;
            Ok(c)
        }
        BasisChoice::Auto { budget, seed } => {
            let rep = kernel_cokernel(d)?;
            let k = rep.kernel_basis.len();
            if k < 4 {
                return Err(CrError::NotApplicable(format!("kernel dimension {k} < 4")));
            }
            let mut candidates: Vec<DMatrix<f64>> = Vec::new();
            for a in 0..k {
                for b in a + 1..k {
                    for c in b + 1..k {
                        for e in c + 1..k {
                            let mut m = DMatrix::zeros(k, 4);
                            m[(a, 0)] = 1.0;
                            m[(b, 1)] = 1.0;
                            m[(c, 2)] = 1.0;
                            m[(e, 3)] = 1.0;
                            candidates.push(m);
                        }
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..budget {
                let g = DMatrix::from_fn(k, 4, |_, _| StandardNormal.sample(&mut rng));
                candidates.push(g.qr().q());
            }
            let mut best: Option<(f64, [Section; 4])> = None;
            for cmat in &candidates {
                let b: Vec<Section> = (0..4)
                    .map(|j| {
                        let mut s = Section::zeros(d.l_max);
                        for i in 0..k {
                            s = s.axpy(cmat[(i, j)], &rep.kernel_basis[i]);
                        }
                        s
                    })
                    .collect();
                let arr = [b[0].clone(), b[1].clone(), b[2].clone(), b[3].clone()];
                let (_, sc) = scan_grid(spec, &arr);
                let same_sign = sc.n_positive == 0 || sc.n_negative == 0;
                let score = if same_sign { sc.min_sigma } else { 0.0 };
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    best = Some((score, arr));
                }
            }
            let (_, arr) = best.expect("at least one candidate");
            let mut c = certify_frame(spec, &arr, reference);
            c.kernel_residual = residual(d, &arr);
            if c.verdict != SuperregVerdict::Superregular {
                c.verdict = SuperregVerdict::NotFound;
            }
            Ok(c)
        }
    }
}
