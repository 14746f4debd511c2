mod common;

use crlab::counterexample::*;
use crlab::cr::SuperregVerdict;
use crlab::sphere::*;
use crlab::CrError;
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng) -> SpherePoint {
    let x: f64 = rng.random_range(-1.0..1.0);
    SpherePoint::new(x.acos(), rng.random_range(0.0..std::f64::consts::TAU))
}

fn i_times(a: &[Vector4<f64>; 2]) -> [Vector4<f64>; 2] {
    [a[1], -a[0]]
}

#[test]
fn phi_of_standard_inclusion_is_j0() {
    let a = [Vector4::new(1.0, 0.0, 0.0, 0.0), Vector4::new(0.0, 1.0, 0.0, 0.0)];
    assert!((phi(&a).unwrap() - j0()).norm() < 1e-14);
}

#[test]
fn phi_rejects_rank_deficient_input() {
    let a = [Vector4::new(1.0, 2.0, 0.0, 0.0), Vector4::new(2.0, 4.0, 0.0, 0.0)];
    assert_eq!(phi(&a).unwrap_err().code(), "NEAR_SINGULAR");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn phi_properties(v in proptest::collection::vec(-1.0f64..1.0, 8), lr in -2.0f64..2.0, li in -2.0f64..2.0) {
        let a = [Vector4::new(v[0], v[1], v[2], v[3]), Vector4::new(v[4], v[5], v[6], v[7])];
        prop_assume!(normalized_sigma(&a) > 1e-3);
        let j = phi(&a).unwrap();
        prop_assert!((j * j + Matrix4::identity()).norm() < 1e-10);
        // J∘a = a∘i
        let ai = i_times(&a);
        prop_assert!((j * a[0] - ai[0]).norm() < 1e-12 * (1.0 + a[0].norm()));
        prop_assert!((j * a[1] - ai[1]).norm() < 1e-12 * (1.0 + a[1].norm()));
        // complement preserved and rotated positively
        let (w1, w2) = oriented_complement(&a);
        let jw = j * w1;
        prop_assert!((jw - w2).norm() < 1e-10);
        // invariance under complex rescaling a ↦ a·λ
        prop_assume!(lr.abs() + li.abs() > 0.1);
        let scaled = [a[0] * lr + a[1] * li, a[1] * lr - a[0] * li];
        prop_assert!((phi(&scaled).unwrap() - j).norm() < 1e-9);
    }
}

#[test]
fn f0_is_the_tautological_monomorphism() {
    let north = SpherePoint::new(0.0, 0.7);
    let a = f0_at(&north);
    let (u1, u2) = r4_to_c2(&a[0]);
    assert!(u1.norm() < 1e-15 && u2.norm() > 0.1);
    // the image is the complex line over [z̄² : 1]
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let p = random_point(&mut rng);
        let z = p.chart_z();
        let (u1, u2) = r4_to_c2(&f0_at(&p)[0]);
        let cross = u1 - z.conj() * z.conj() * u2;
        assert!(cross.norm() < 1e-12 * (1.0 + z.norm_sqr()));
    }
}

#[test]
fn phi_of_f0_is_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let p = random_point(&mut rng);
        assert!((phi(&f0_at(&p)).unwrap() - j0()).norm() < 1e-10);
    }
    let grid = make_grid(16).unwrap();
    let mono = build_f0(&grid);
    assert!(mono.min_sigma_oversampled > 0.5);
    let field = AcsField::from_mono(&grid, MonoSource::F0).unwrap();
    let dev = field.samples.iter().map(|j| (j - j0()).norm()).fold(0.0, f64::max);
    assert!(dev < 1e-10);
}

#[test]
fn f0_bundle_degrees() {
    let grid = make_grid(12).unwrap();
    assert!((normal_euler_number(MonoSource::F0, &grid) + 2.0).abs() < 1e-6);
    assert!((image_chern_number(MonoSource::F0, &grid) - 2.0).abs() < 1e-6);
}

#[test]
fn whitney_immersion_certificates() {
    let w = WhitneySphere;
    let n = w.f1(&SpherePoint::new(0.0, 0.0));
    let s = w.f1(&SpherePoint::new(std::f64::consts::PI, 1.0));
    assert!(n.norm() < 1e-15 && s.norm() < 1e-15);
    let p = SpherePoint::new(1.1, 0.4);
    let x = p.xyz();
    let expect = c2_to_r4(
        Complex64::new(x[1], x[1] * x[0]) / (1.0 + x[0] * x[0]),
        Complex64::new(x[2], x[2] * x[0]) / (1.0 + x[0] * x[0]),
    );
    assert!((w.raw(&p) - expect).norm() < 1e-15);
    let grid = make_grid(24).unwrap();
    let (_, df1) = build_whitney_immersion(&grid);
    assert!(df1.min_sigma_oversampled > 0.1);
    assert!((normal_euler_number(MonoSource::Df1, &grid) + 2.0).abs() < 1e-6);
}

#[test]
fn df1_matches_finite_differences() {
    let w = WhitneySphere;
    let p = SpherePoint::new(0.8, 2.1);
    let h = 1e-6;
    let a = w.df1(&p);
    let dth = (w.f1(&SpherePoint::new(p.theta + h, p.phi)) - w.f1(&SpherePoint::new(p.theta - h, p.phi))) / (2.0 * h);
    let dph = (w.f1(&SpherePoint::new(p.theta, p.phi + h)) - w.f1(&SpherePoint::new(p.theta, p.phi - h)))
        / (2.0 * h * p.theta.sin());
    assert!((a[0] - dth).norm() < 1e-8);
    assert!((a[1] - dph).norm() < 1e-8);
}

#[test]
fn obstruction_degrees() {
    let grid = make_grid(12).unwrap();
    assert_eq!(obstruction_degree(&AcsField::constant_j0(&grid)).unwrap(), 0);
    let wj = AcsField::from_mono(&grid, MonoSource::Df1).unwrap();
    assert!(wj.square_defect() < 1e-10);
    assert_eq!(obstruction_degree(&wj).unwrap(), 0);
    assert_eq!(obstruction_degree(&AcsField::synthetic_degree_one(&grid)).unwrap(), 1);
}

#[test]
fn lift_of_constant_structure_is_identity() {
    let grid = make_grid(8).unwrap();
    let l = lift_acs(&AcsField::constant_j0(&grid)).unwrap();
    assert_eq!(l.monodromy_defect, 0.0);
    for g in &l.samples {
        assert!((g - Matrix4::identity()).norm() < 1e-15);
    }
}

#[test]
fn lift_of_whitney_structure() {
    let grid = make_grid(16).unwrap();
    let j = AcsField::from_mono(&grid, MonoSource::Df1).unwrap();
    let l = lift_acs(&j).unwrap();
    assert!(l.monodromy_defect <= 1e-6);
    assert!(l.conjugation_residual <= 1e-8);
    for (g, jj) in l.samples.iter().zip(&j.samples) {
        let gi = g.try_inverse().unwrap();
        assert!((gi * j0() * g - jj).norm() <= 1e-8);
    }
    let fine = lift_acs(&j.refined(2)).unwrap();
    assert_eq!(fine.seed_pair, l.seed_pair);
    assert!(fine.monodromy_defect <= 1e-6);
}

#[test]
fn degree_one_structure_cannot_be_lifted() {
    let grid = make_grid(12).unwrap();
    let err = lift_acs(&AcsField::synthetic_degree_one(&grid)).unwrap_err();
    assert_eq!(err.code(), "LIFT_OBSTRUCTED");
}

#[test]
fn construction_needs_resolution() {
    let spec = Spectral::new(6).unwrap();
    assert!(matches!(
        build_superregular_with_cokernel(&spec),
        Err(CrError::UnderResolved { .. })
    ));
}

#[test]
fn constructed_operator_has_cokernel() {
    let p = common::pipeline();
    let b = &p.built;
    assert_eq!(b.report.kernel_dim(), 5);
    assert_eq!(b.report.cokernel_dim(), 1);
    assert!(b.report.gap_ratio >= 1e3);
    assert!(b.e5_residual <= 1e-7);
    assert!(b.e5_angle > 1e-3);
    assert_eq!(b.certificate.verdict, SuperregVerdict::Superregular);
    assert_eq!(b.obstruction_degree, 0);
    assert!(b.lift.monodromy_defect <= 1e-6);
}

#[test]
fn kernel_contains_the_constructed_sections() {
    let p = common::pipeline();
    let k: Vec<&Section> = p.built.report.kernel_basis.iter().collect();
    for s in &p.built.e {
        assert!(angle_to_span(s, &k).unwrap() < 1e-6);
    }
}

#[test]
fn twisted_holomorphicity_identity() {
    // D(λ G f) = λ G ∂̄_J f for smooth f
    let spec = &Spectral::new(32).unwrap();
    let (e, lift, _) = construct_frame(spec).unwrap();
    let d = crlab::cr::operator_from_frame(spec, &[e[0].clone(), e[1].clone(), e[2].clone(), e[3].clone()]).unwrap();
    let j = AcsField::from_mono(&spec.grid, MonoSource::Df1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut f = Section::zeros(spec.l_max);
    for c in 0..2 {
        for l in 0..=3usize {
            for m in -(l as i64)..=(l as i64) {
                f.set_coeff(c, l, m, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
        }
    }
    let fv = spec.synthesize(&f);
    let pts = spec.grid.points();
    let gf: Vec<Vector4<f64>> = (0..pts.len())
        .map(|v| lift.at(v) * gauge(&pts[v]) * fv[v])
        .collect();
    let lhs = spec.synthesize(&d.apply(&spec.analyze(&gf)));
    let (ft, fp) = spec.partials(&f);
    // L² norms by quadrature
    let (mut err, mut nf, mut ndf) = (0.0, 0.0, 0.0);
    for v in 0..pts.len() {
        let w = spec.grid.weight(v);
        let dbar = 0.5 * (ft[v] + j.samples[v] * fp[v]);
        let rhs = lift.at(v) * gauge(&pts[v]) * dbar;
        err += w * (lhs[v] - rhs).norm_squared();
        nf += w * fv[v].norm_squared();
        ndf += w * (ft[v].norm_squared() + fp[v].norm_squared());
    }
    let (err, scale) = (err.sqrt(), nf.sqrt() + ndf.sqrt());
    assert!(err <= 1e-7 * scale, "err {err:e} scale {scale}");
}

#[test]
fn normalization_of_e5() {
    let n = &common::pipeline().norm;
    assert!((n.h_at_p0 - 1.0).abs() <= 1e-9);
    assert!((n.h_max - 1.0).abs() <= 1e-9);
    assert!(n.h_min >= -1e-9 && n.h_min <= 1e-9);
    assert!(n.orthogonality <= 1e-10);
}

#[test]
fn foliation_map_degenerates_exactly_where_h_vanishes() {
    let p = common::pipeline();
    let s = &p.scan;
    assert_eq!(s.symmetric_difference, 0);
    assert!(s.singular_nodes.contains(&p.norm.zero_node));
    assert!(s.h_min <= 1e-9);
    for r in &s.records {
        if r.h > 0.5 {
            assert!(r.det_t0 >= r.h - 1e-6);
        }
    }
    assert_eq!(s.injectivity.collisions, 0);
    // the t₄ ↦ t₄h + t₄² fold identifies two parameter vectors over the same point
    let fold = s.fold.as_ref().unwrap();
    assert!(fold.image_gap < 1e-9);
    assert!((fold.t[3] - fold.t_prime[3]).abs() > 0.5);
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), s.n_nodes + 1);
}

#[test]
fn product_frame_has_no_singular_nodes() {
    let spec = Spectral::new(8).unwrap();
    let e: Vec<Section> = (0..4)
        .map(|i| Section::constant(8, Vector4::from_fn(|r, _| (r == i) as u8 as f64)))
        .collect();
    let five = [e[0].clone(), e[1].clone(), e[2].clone(), e[3].clone(), e[3].clone()];
    let s = foliation_map_scan(&spec, &five, 50, 1).unwrap();
    assert!(s.singular_nodes.is_empty());
    assert!(s.records.iter().all(|r| (r.h - 1.0).abs() < 1e-12));
}
