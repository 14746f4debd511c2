mod common;

use crlab::cr::{SuperregVerdict, TAU_SR};
use crlab::family::*;
use crlab::sphere::Section;
use ndarray::Array1;

fn arr(s: &Section) -> Array1<f64> {
    Array1::from(s.to_real())
}

#[test]
fn samples_keep_the_prescribed_kernel() {
    let p = common::pipeline();
    let f = common::family();
    assert_eq!(f.fam.samples.len(), 41);
    let eta = f.fam.factors.cokernel.column(0).to_owned();
    for fs in &f.fam.samples {
        assert!(fs.patch_min_sigma > TAU_SR, "s = {}", fs.s);
        assert!(fs.rho > 0.0 && fs.ell.abs() > 0.0);
        assert!(fs.ks_angle < 1e-9, "s = {} angle {:e}", fs.s, fs.ks_angle);
        let a = f.fam.perturbation_matrix(&p.spec, fs).unwrap();
        for v in &fs.ks {
            let x = arr(v);
            let pair = eta.dot(&a.dot(&x)) / x.dot(&x).sqrt();
            assert!(pair.abs() < 1e-9 * fs.rho, "s = {} pairing {:e}", fs.s, pair);
        }
        let vp = &fs.v_perp;
        assert!((eta.dot(&a.dot(vp)) - fs.ell).abs() < 1e-9 * fs.rho);
        // the perturbation lives on the cap
        for (z, pt) in p.spec.grid.points().iter().enumerate() {
            if f.fam.cap.bump(pt) == 0.0 {
                assert_eq!(fs.y.samples[z], nalgebra::Matrix4::zeros());
            }
        }
    }
}

#[test]
fn endpoint_sample_recovers_e4() {
    let f = common::family();
    let e4 = f.fam.e4s(1.0);
    assert!(e4.axpy(-1.0, &f.fam.e[3]).norm() == 0.0);
    let e5 = f.fam.e4s(0.0);
    assert!(e5.axpy(-1.0, &f.fam.e[4]).norm() == 0.0);
    let fs = f.fam.sample(1.0).unwrap();
    let ks = crlab::linalg::columns_to_matrix(&fs.ks.iter().map(|v| v.to_real()).collect::<Vec<_>>());
    let e = crlab::linalg::columns_to_matrix(&f.fam.e[..4].iter().map(|v| v.to_real()).collect::<Vec<_>>());
    assert!(crlab::linalg::subspace_angle(&ks, &e).unwrap() < 1e-6);
}

#[test]
fn neumann_continuation_across_the_grid() {
    let p = common::pipeline();
    let f = common::family();
    let c = f.sweep.c;
    for fs in &f.fam.samples {
        for frac in [0.1, 0.5, 0.9] {
            let t = frac / (2.0 * c);
            let ck = neumann_continue(&f.fam, &p.spec, fs, t, c).unwrap();
            let bound = 2.0 * t * c;
            assert!(ck.contraction_ratio <= bound, "s = {} t = {t}", fs.s);
            for j in 0..4 {
                assert!(ck.correction_norms[j] <= bound);
                assert!(ck.residuals[j] <= 1e-8);
            }
            let b = bordered_check(&f.fam, &p.spec, fs, &ck).unwrap();
            assert!(b.surjective, "s = {} t = {t} rcond {:e}", fs.s, b.rcond);
            assert!(b.angle <= 1e-6, "s = {} t = {t} angle {:e}", fs.s, b.angle);
        }
    }
}

#[test]
fn svd_oracle_agrees_at_the_ends() {
    let p = common::pipeline();
    let f = common::family();
    let c = f.sweep.c;
    for (s, frac) in [(1.0, 0.1), (-1.0, 0.1), (-1.0, 0.9)] {
        let fs = f.fam.sample(s).unwrap();
        let ck = neumann_continue(&f.fam, &p.spec, fs, frac / (2.0 * c), c).unwrap();
        let (rep, angle) = svd_kernel_angle(&f.fam, &p.spec, fs, &ck).unwrap();
        assert!(rep.surjective && rep.kernel_dim == 4, "{rep:?}");
        assert!(rep.sigma_min_rel > 0.0);
        assert!(angle <= 1e-6, "s = {s} angle {angle:e}");
    }
}

#[test]
fn unperturbed_operator_keeps_its_cokernel() {
    let p = common::pipeline();
    let f = common::family();
    let rep = surjectivity_certificate(&f.fam, &p.spec, f.fam.sample(1.0).unwrap(), 0.0).unwrap();
    assert!(!rep.surjective);
    assert_eq!(rep.cokernel_dim, 1);
    assert_eq!(rep.kernel_dim, 5);
}

#[test]
fn large_t_is_not_contractive() {
    let p = common::pipeline();
    let f = common::family();
    let c = f.sweep.c;
    let fs = f.fam.sample(0.0).unwrap();
    let err = neumann_continue(&f.fam, &p.spec, fs, 0.5 / c, c).unwrap_err();
    assert_eq!(err.code(), "NOT_CONTRACTIVE");
    let err = neumann_continue(&f.fam, &p.spec, fs, -0.6 / c, c).unwrap_err();
    assert_eq!(err.code(), "NOT_CONTRACTIVE");
}

#[test]
fn sweep_separates_superregular_from_degenerate() {
    let f = common::family();
    let r = &f.sweep;
    assert!((r.t - 0.1 / (2.0 * r.c)).abs() < 1e-15 * r.t.abs().max(1.0));
    assert!(r.superregular_ok && r.degenerate_ok && r.inequalities_ok && r.series_bound_ok);
    assert!(r.passed());
    for row in &r.rows {
        assert!((row.coord_at_p0 - 1.0).abs() < 1e-9);
        assert!((row.coord_at_zero - row.s).abs() < 1e-9);
        if row.s >= r.delta - 1e-12 {
            assert_eq!(row.verdict, SuperregVerdict::Superregular, "s = {}", row.s);
            assert!(row.witness.is_none());
            assert!(row.min_relative_det > 0.0);
        }
        if row.s <= -r.delta + 1e-12 {
            assert_eq!(row.verdict, SuperregVerdict::Degenerate, "s = {}", row.s);
            let w = row.witness.as_ref().unwrap();
            assert!(w.det * w.reference_det < 0.0);
        }
    }
    let (lo, hi) = r.bracket.unwrap();
    assert!(lo < hi && lo > -r.delta && hi < r.delta);
}

#[test]
fn family_is_smooth_in_s() {
    let f = common::family();
    let ymax = f
        .fam
        .samples
        .iter()
        .map(|fs| fs.y.sup_norm())
        .fold(0.0, f64::max);
    let step = f.fam.max_y_step();
    assert!(step.is_finite() && step > 0.0);
    assert!(step < 0.25 * ymax, "step {step:e} vs {ymax:e}");
}

#[test]
fn sweep_exports() {
    let f = common::family();
    let mut buf = Vec::new();
    f.sweep.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "s,min_frame_sigma,min_relative_det,verdict,contraction_ratio,kernel_residual"
    );
    assert_eq!(lines.count(), 41);
    let v: serde_json::Value = serde_json::from_str(&f.sweep.to_json().unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 41);
    assert!(v["rows"][0]["witness"]["node"].is_u64());
}
