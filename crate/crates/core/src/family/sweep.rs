use nalgebra::Matrix4;
use serde::Serialize;
use std::io::Write;

use super::neumann::{f_norm, neumann_continue};
use super::patch::PerturbationFamily;
use crate::cr::{certify_frame, DegeneracyWitness, SuperregVerdict, OVERSAMPLE};
use crate::error::{CrError, Result};
use crate::sphere::{FrameField, Section, Spectral, SpherePoint};

pub const DEFAULT_DELTA: f64 = 0.2;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub s: f64,
    pub f_norm: f64,
    pub min_frame_sigma: f64,
    pub min_frame_sigma_oversampled: f64,
    /// min over the oversampled grid of det(z)/det(p₀)
    pub min_relative_det: f64,
    pub verdict: SuperregVerdict,
    pub contraction_ratio: f64,
    pub kernel_residual: f64,
    pub max_correction: f64,
    /// e₄-coordinate of e₄^s in the frame at p₀ and at the zero node
    pub coord_at_p0: f64,
    pub coord_at_zero: f64,
    pub witness: Option<DegeneracyWitness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub t: f64,
    pub c: f64,
    pub delta: f64,
    pub rows: Vec<SweepRow>,
    pub superregular_ok: bool,
    pub degenerate_ok: bool,
    pub inequalities_ok: bool,
    pub series_bound_ok: bool,
    /// consecutive s values between which the minimum relative determinant changes sign
    pub bracket: Option<(f64, f64)>,
    pub max_y_step: f64,
    pub p0: SpherePoint,
    pub zero_point: SpherePoint,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.superregular_ok && self.degenerate_ok && self.inequalities_ok && self.series_bound_ok
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "s",
            "min_frame_sigma",
            "min_relative_det",
            "verdict",
            "contraction_ratio",
            "kernel_residual",
        ])?;
        for r in &self.rows {
            wr.write_record([
                format!("{:.6}", r.s),
                format!("{:.6e}", r.min_frame_sigma.min(r.min_frame_sigma_oversampled)),
                format!("{:.6e}", r.min_relative_det),
                format!("{:?}", r.verdict).to_uppercase(),
                format!("{:.6e}", r.contraction_ratio),
                format!("{:.6e}", r.kernel_residual),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn frame_at(spec: &Spectral, b: [&Section; 4], p: &SpherePoint) -> Matrix4<f64> {
    Matrix4::from_columns(&[
        spec.eval_at(b[0], p),
        spec.eval_at(b[1], p),
        spec.eval_at(b[2], p),
        spec.eval_at(b[3], p),
    ])
}

fn e4_coordinate(spec: &Spectral, fam: &PerturbationFamily, s: f64, p: &SpherePoint) -> Result<f64> {
    let e = &fam.e;
    let m = frame_at(spec, [&e[0], &e[1], &e[2], &e[3]], p);
    let v = spec.eval_at(&fam.e4s(s), p);
    let c = m
        .lu()
        .solve(&v)
        .ok_or(CrError::FrameDegenerate { node: 0, sigma: 0.0 })?;
    Ok(c[3])
}

/// Superregularity of the continued kernels across the s samples at fixed t
/// (default 0.1 / (2c) with c the largest measured ‖F_s‖).
pub fn superregularity_sweep(
    fam: &PerturbationFamily,
    spec: &Spectral,
    t: Option<f64>,
    delta: f64,
) -> Result<SweepReport> {
    let norms: Vec<f64> = fam
        .samples
        .iter()
        .map(|fs| f_norm(fam, spec, fs))
        .collect::<Result<_>>()?;
    let c = norms.iter().cloned().fold(0.0, f64::max);
    let t = t.unwrap_or(0.1 / (2.0 * c));
    let over = spec.oversampled(OVERSAMPLE);
    let mut rows = Vec::with_capacity(fam.samples.len());
    for (fs, &fn_s) in fam.samples.iter().zip(&norms) {
        let ck = neumann_continue(fam, spec, fs, t, c)?;
        let cert = certify_frame(spec, &ck.basis, Some(&fam.p0));
        let b = &ck.basis;
        let ref_det = frame_at(spec, [&b[0], &b[1], &b[2], &b[3]], &fam.p0).determinant();
        let scan = FrameField::new(&over, &[&b[0], &b[1], &b[2], &b[3]]);
        let min_rel = scan
            .matrices
            .iter()
            .map(|m| m.determinant() / ref_det)
            .fold(f64::INFINITY, f64::min);
        rows.push(SweepRow {
            s: fs.s,
            f_norm: fn_s,
            min_frame_sigma: cert.min_frame_sigma,
            min_frame_sigma_oversampled: cert.min_frame_sigma_oversampled,
            min_relative_det: min_rel,
            verdict: cert.verdict,
            contraction_ratio: ck.contraction_ratio,
            kernel_residual: ck.residuals.iter().cloned().fold(0.0, f64::max),
            max_correction: ck.correction_norms.iter().cloned().fold(0.0, f64::max),
            coord_at_p0: e4_coordinate(spec, fam, fs.s, &fam.p0)?,
            coord_at_zero: e4_coordinate(spec, fam, fs.s, &fam.zero_point)?,
            witness: cert.witness,
        });
    }
    let superregular_ok = rows
        .iter()
        .filter(|r| r.s >= delta - 1e-12)
        .all(|r| r.verdict == SuperregVerdict::Superregular);
    let degenerate_ok = rows.iter().filter(|r| r.s <= -delta + 1e-12).all(|r| {
        r.verdict == SuperregVerdict::Degenerate
            && r
                .witness
                .as_ref()
                .is_some_and(|w| w.det * w.reference_det < 0.0)
    });
    let inequalities_ok = rows.iter().all(|r| {
        (r.coord_at_p0 - 1.0).abs() <= 1e-9 && (r.s >= 0.0 || r.coord_at_zero < 0.0)
    });
    let series_bound_ok = rows
        .iter()
        .all(|r| r.contraction_ratio <= 2.0 * t.abs() * c && r.max_correction <= 2.0 * t.abs() * c);
    let bracket = rows
        .windows(2)
        .find(|w| w[0].min_relative_det <= 0.0 && w[1].min_relative_det > 0.0)
        .map(|w| (w[0].s, w[1].s));
    Ok(SweepReport {
        t,
        c,
        delta,
        rows,
        superregular_ok,
        degenerate_ok,
        inequalities_ok,
        series_bound_ok,
        bracket,
        max_y_step: fam.max_y_step(),
        p0: fam.p0,
        zero_point: fam.zero_point,
    })
}
