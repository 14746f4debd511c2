mod common;

use crlab::ambient::*;
use crlab::cr::{assemble, BundleHom};
use crlab::family::neumann_continue;
use crlab::sphere::{Section, SpherePoint, Spectral};
use nalgebra::Vector4;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn random_section(l: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Section {
    let v: Vec<f64> = (0..4 * crlab::sphere::mode_count(l, 0))
        .map(|_| StandardNormal.sample(rng))
        .collect();
    Section::from_real(l, &v).unwrap()
}

fn id(p: &SpherePoint) -> SpherePoint {
    *p
}

#[test]
fn structure_squares_to_minus_one_and_is_fiberwise_affine() {
    let p = common::pipeline();
    let acs = AmbientAcs::new(&p.built.d);
    let c = acs.checks(2, 3);
    assert!(c.max_square_defect <= 1e-12, "{c:?}");
    assert!(c.max_affine_defect <= 1e-12, "{c:?}");
    assert_eq!(c.samples, 2 * p.spec.n_nodes());
    // the horizontal block is the standard structure of the sphere
    let m = acs.matrix_at(5, &Vector4::new(1.0, -2.0, 0.5, 3.0));
    assert_eq!(m[(1, 0)], 1.0);
    assert_eq!(m[(0, 1)], -1.0);
    assert_eq!(m[(0, 2)], 0.0);
}

#[test]
fn zero_section_is_holomorphic() {
    let p = common::pipeline();
    let acs = AmbientAcs::new(&p.built.d);
    let r = dbar_j_residual(&acs, &p.spec, &p.built.d, &id, &Section::zeros(24)).unwrap();
    assert!(r.residual <= 1e-12 && r.pointwise_l2 <= 1e-12);
    assert_eq!(r.degree, 1);
}

#[test]
fn kernel_sections_are_holomorphic() {
    let p = common::pipeline();
    let acs = AmbientAcs::new(&p.built.d);
    for e in &p.built.e[..4] {
        let r = dbar_j_residual(&acs, &p.spec, &p.built.d, &id, e).unwrap();
        assert!(r.residual <= 1e-8 * e.norm(), "{r:?}");
    }
    // e5 is a kernel element only to the certified residual tolerance
    let e5 = &p.built.e[4];
    let r = dbar_j_residual(&acs, &p.spec, &p.built.d, &id, e5).unwrap();
    let scale = p.built.d.sigma_max() * e5.norm();
    assert!(r.residual <= 1e-7 * scale, "{r:?}");
    assert!((r.residual - r.operator_norm).abs() <= 1e-12 * scale);
}

#[test]
fn identity_with_the_operator_on_random_sections() {
    let p = common::pipeline();
    let acs = AmbientAcs::new(&p.built.d);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(50);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let xi = random_section(24, &mut rng);
        let r = dbar_j_residual(&acs, &p.spec, &p.built.d, &id, &xi).unwrap();
        worst = worst.max((r.residual - r.operator_norm).abs() / r.operator_norm);
    }
    assert!(worst <= 1e-10, "worst relative mismatch {worst:e}");
}

#[test]
fn identity_for_a_random_perturbation() {
    let spec = Spectral::new(12).unwrap();
    let y = BundleHom::random_smooth(&spec, 4, 0.8, 11);
    let d = assemble(&spec, &y, "random").unwrap();
    let acs = AmbientAcs::new(&d);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let xi = random_section(12, &mut rng);
        let r = dbar_j_residual(&acs, &spec, &d, &id, &xi).unwrap();
        assert!((r.residual - r.operator_norm).abs() <= 1e-10 * r.operator_norm);
    }
}

#[test]
fn maps_outside_the_section_class_are_rejected() {
    let p = common::pipeline();
    let acs = AmbientAcs::new(&p.built.d);
    let zero = Section::zeros(24);
    let antipode = |q: &SpherePoint| {
        let x = q.xyz();
        SpherePoint::from_xyz([-x[0], -x[1], -x[2]])
    };
    let e = dbar_j_residual(&acs, &p.spec, &p.built.d, &antipode, &zero).unwrap_err();
    assert_eq!(e.code(), "DEGREE_MISMATCH");
    let constant = |_: &SpherePoint| SpherePoint::new(1.0, 2.0);
    let e = dbar_j_residual(&acs, &p.spec, &p.built.d, &constant, &zero).unwrap_err();
    assert_eq!(e.code(), "DEGREE_MISMATCH");
    let rotate = |q: &SpherePoint| SpherePoint::new(q.theta, q.phi + 0.3);
    let e = dbar_j_residual(&acs, &p.spec, &p.built.d, &rotate, &zero).unwrap_err();
    assert_eq!(e.code(), "NOT_APPLICABLE");
}

#[test]
fn product_operator_has_no_leaf_intersections() {
    let spec = Spectral::new(8).unwrap();
    let basis: [Section; 4] = std::array::from_fn(|i| {
        let mut v = Vector4::zeros();
        v[i] = 1.0;
        Section::constant(8, v)
    });
    let rows = leaf_scan(&spec, &basis);
    assert!(rows.iter().all(|r| r.null_dim == 0 && r.frame_rank == 4));
}

#[test]
fn leaf_dichotomy_along_the_family() {
    let p = common::pipeline();
    let f = common::family();
    let t = f.sweep.t;
    let c = f.sweep.c;
    let ck1 = neumann_continue(&f.fam, &p.spec, f.fam.sample(1.0).unwrap(), t, c).unwrap();
    let rows = leaf_scan(&p.spec, &ck1.basis);
    assert!(rows.iter().all(|r| r.null_dim == 0));
    for node in [0, 17, p.spec.n_nodes() - 1] {
        assert_eq!(leaves_through_point(&p.spec, &ck1, node).dim(), 0);
    }

    let ckm = neumann_continue(&f.fam, &p.spec, f.fam.sample(-1.0).unwrap(), t, c).unwrap();
    let row = f.sweep.rows.iter().find(|r| r.s == -1.0).unwrap();
    let w = row.witness.as_ref().unwrap();
    let q = locate_degenerate_point(&p.spec, &ckm.basis, &w.reference_point, &w.point).unwrap();
    let lw = leaves_through_point_of(&p.spec, &ckm.basis, &q);
    assert!(lw.dim() >= 1, "{lw:?}");
    assert_eq!(lw.dim(), 4 - lw.frame_rank);
    // a combination of kernel sections vanishing at q
    let cvec = lw.null_space[0];
    let mut sec = Section::zeros(24);
    for (i, b) in ckm.basis.iter().enumerate() {
        sec = sec.axpy(cvec[i], b);
    }
    assert!(p.spec.eval_at(&sec, &q).norm() <= 1e-6 * sec.norm());
    for r in leaf_scan(&p.spec, &ckm.basis) {
        assert_eq!(r.null_dim, 4 - r.frame_rank);
    }
}

#[test]
fn unperturbed_kernel_at_s_zero_vanishes_over_the_zero_of_h() {
    let p = common::pipeline();
    let f = common::family();
    let fs = f.fam.sample(0.0).unwrap();
    let lw = leaves_through_point_of(&p.spec, &fs.ks, &p.norm.zero_point);
    assert_eq!(lw.dim(), 1, "{lw:?}");
    let lw = leaves_through_point_of(&p.spec, &fs.ks, &p.norm.p0);
    assert_eq!(lw.dim(), 0);
}

#[test]
fn leaf_csv_export() {
    let spec = Spectral::new(8).unwrap();
    let basis: [Section; 4] = std::array::from_fn(|i| {
        let mut v = Vector4::zeros();
        v[i] = 1.0;
        Section::constant(8, v)
    });
    let rows = leaf_scan(&spec, &basis);
    let mut buf = Vec::new();
    write_leaf_csv(&rows, 1.0, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("node,null_dim,s\n0,0,1.000000\n"));
    assert_eq!(text.lines().count(), spec.n_nodes() + 1);
}
