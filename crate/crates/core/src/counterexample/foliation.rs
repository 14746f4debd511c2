use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;

use super::construct::frame_coordinates;
use crate::cr::OVERSAMPLE;
use crate::error::Result;
use crate::sphere::{Section, Spectral, SpherePoint};

pub const TAU_FOLN: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct NodeRecord {
    pub node: usize,
    pub theta: f64,
    pub phi: f64,
    pub h: f64,
    /// det of the t-Jacobian in the frame-adapted basis at t₄ = 0
    pub det_t0: f64,
    /// min over t₄ ∈ [-1, 1] of the same determinant
    pub min_det_t4: f64,
    pub sigma_min_t0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InjectivityCheck {
    pub pairs: usize,
    pub same_fiber_pairs: usize,
    pub collisions: usize,
    /// min over same-fiber pairs of |F(t) - F(t')| / |t - t'|
    pub min_relative_separation: f64,
}

/// Two parameter vectors over the same node with one image, from the fold of
/// t₄ ↦ t₄ h + t₄².
#[derive(Debug, Clone, Serialize)]
pub struct FoldWitness {
    pub node: usize,
    pub point: SpherePoint,
    pub t: [f64; 4],
    pub t_prime: [f64; 4],
    pub image_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyReport {
    pub oversample: usize,
    pub tau: f64,
    pub n_nodes: usize,
    #[serde(skip)]
    pub records: Vec<NodeRecord>,
    pub singular_nodes: Vec<usize>,
    pub small_h_nodes: Vec<usize>,
    pub symmetric_difference: usize,
    pub h_min: f64,
    pub h_min_node: usize,
    /// max |det_t0 - h| over nodes
    pub det_h_mismatch: f64,
    pub injectivity: InjectivityCheck,
    pub fold: Option<FoldWitness>,
}

impl DegeneracyReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.records {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_kv(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("oversample".into(), self.oversample.to_string()),
            ("tau".into(), format!("{:e}", self.tau)),
            ("nodes".into(), self.n_nodes.to_string()),
            ("singular_nodes".into(), self.singular_nodes.len().to_string()),
            ("small_h_nodes".into(), self.small_h_nodes.len().to_string()),
            ("symmetric_difference".into(), self.symmetric_difference.to_string()),
            ("h_min".into(), format!("{:e}", self.h_min)),
            ("det_h_mismatch".into(), format!("{:e}", self.det_h_mismatch)),
            ("injectivity_pairs".into(), self.injectivity.pairs.to_string()),
            ("injectivity_collisions".into(), self.injectivity.collisions.to_string()),
            (
                "injectivity_min_separation".into(),
                format!("{:e}", self.injectivity.min_relative_separation),
            ),
        ];
        if let Some(f) = &self.fold {
            kv.push(("fold_node".into(), f.node.to_string()));
            kv.push(("fold_t".into(), format!("{:?}", f.t)));
            kv.push(("fold_t_prime".into(), format!("{:?}", f.t_prime)));
            kv.push(("fold_image_gap".into(), format!("{:e}", f.image_gap)));
        }
        kv
    }
}

fn image(frame: &Matrix4<f64>, e5: &Vector4<f64>, t: &[f64; 4]) -> Vector4<f64> {
    frame.column(0) * t[0]
        + frame.column(1) * t[1]
        + frame.column(2) * t[2]
        + e5 * t[3]
        + frame.column(3) * (t[3] * t[3])
}

/// Scan of (t₁..t₄, z) ↦ Σ_{i≤3} t_i e_i + t₄e₅ + t₄²e₄ on the oversampled grid.
pub fn foliation_map_scan(
    spec: &Spectral,
    e: &[Section; 5],
    n_pairs: usize,
    seed: u64,
) -> Result<DegeneracyReport> {
    let over = spec.oversampled(OVERSAMPLE);
    let coords = frame_coordinates(&over, &e[..4], &e[4])?;
    let vals: Vec<Vec<Vector4<f64>>> = e.iter().map(|s| over.synthesize(s)).collect();
    let frames: Vec<Matrix4<f64>> = (0..over.n_nodes())
        .map(|i| Matrix4::from_columns(&[vals[0][i], vals[1][i], vals[2][i], vals[3][i]]))
        .collect();

    let mut records = Vec::with_capacity(over.n_nodes());
    let (mut singular, mut small) = (Vec::new(), Vec::new());
    let mut mismatch: f64 = 0.0;
    for (i, c) in coords.iter().enumerate() {
        // E⁻¹ [e₁ e₂ e₃ e₅ + 2t₄e₄] = [I₃ | c + 2t₄ ê₄]
        let adapted = |t4: f64| {
            let mut m = Matrix4::identity();
            let mut col = *c;
            col[3] += 2.0 * t4;
            m.set_column(3, &col);
            m
        };
        let m0 = adapted(0.0);
        let det_t0 = m0.determinant();
        let min_det_t4 = adapted(-1.0).determinant().min(adapted(1.0).determinant());
        let sigma_min_t0 = m0.singular_values().min();
        let p = over.grid.point(i);
        let h = c[3];
        mismatch = mismatch.max((det_t0 - h).abs());
        if sigma_min_t0 <= TAU_FOLN {
            singular.push(i);
        }
        if h <= TAU_FOLN {
            small.push(i);
        }
        records.push(NodeRecord {
            node: i,
            theta: p.theta,
            phi: p.phi,
            h,
            det_t0,
            min_det_t4,
            sigma_min_t0,
        });
    }
    let sym = singular.iter().filter(|i| !small.contains(i)).count()
        + small.iter().filter(|i| !singular.contains(i)).count();
    let (h_min_node, h_min) = records
        .iter()
        .map(|r| (r.node, r.h))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inj = InjectivityCheck {
        pairs: n_pairs,
        same_fiber_pairs: 0,
        collisions: 0,
        min_relative_separation: f64::INFINITY,
    };
    let n = over.n_nodes();
    for k in 0..n_pairs {
        let a = rng.random_range(0..n);
        let b = if k % 2 == 0 { a } else { rng.random_range(0..n) };
        let t: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let tp: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        if a != b {
            continue;
        }
        inj.same_fiber_pairs += 1;
        let fa = image(&frames[a], &vals[4][a], &t);
        let fb = image(&frames[a], &vals[4][a], &tp);
        let dt = t.iter().zip(&tp).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let sep = (fa - fb).norm() / dt;
        inj.min_relative_separation = inj.min_relative_separation.min(sep);
        if (fa - fb).norm() <= 1e-9 * (1.0 + fa.norm() + fb.norm()) {
            inj.collisions += 1;
        }
    }

    let fold = records
        .iter()
        .max_by(|x, y| x.h.partial_cmp(&y.h).unwrap())
        .map(|r| {
            let c = coords[r.node];
            let t = [0.0, 0.0, 0.0, 0.25];
            let t4p = -c[3] - t[3];
            let tp = [
                (t[3] - t4p) * c[0],
                (t[3] - t4p) * c[1],
                (t[3] - t4p) * c[2],
                t4p,
            ];
            let gap = (image(&frames[r.node], &vals[4][r.node], &t)
                - image(&frames[r.node], &vals[4][r.node], &tp))
                .norm();
            FoldWitness {
                node: r.node,
                point: over.grid.point(r.node),
                t,
                t_prime: tp,
                image_gap: gap,
            }
        });

    Ok(DegeneracyReport {
        oversample: OVERSAMPLE,
        tau: TAU_FOLN,
        n_nodes: over.n_nodes(),
        records,
        singular_nodes: singular,
        small_h_nodes: small,
        symmetric_difference: sym,
        h_min,
        h_min_node,
        det_h_mismatch: mismatch,
        injectivity: inj,
        fold,
    })
}
