use crlab::cr::*;
use crlab::linalg::spectral_norm;
use crlab::sphere::*;
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(i: usize) -> Vector4<f64> {
    Vector4::from_fn(|r, _| (r == i) as u8 as f64)
}

fn random_section(l: usize, band: usize, amp: f64, rng: &mut ChaCha8Rng) -> Section {
    let mut s = Section::zeros(l);
    for c in 0..2 {
        for deg in 1..=band {
            for m in -(deg as i64)..=(deg as i64) {
                let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                s.set_coeff(c, deg, m, v * amp);
            }
        }
    }
    s
}

fn canonical(l: usize) -> [Section; 4] {
    std::array::from_fn(|i| Section::constant(l, unit(i)))
}

fn near_canonical_frame(l: usize, seed: u64, amp: f64) -> [Section; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = canonical(l);
    std::array::from_fn(|i| c[i].add(&random_section(l, 2, amp, &mut rng)))
}

#[test]
fn zero_perturbation_is_dbar0() {
    let spec = Spectral::new(8).unwrap();
    let d = assemble(&spec, &BundleHom::zero(spec.n_nodes()), "flat").unwrap();
    assert_eq!(d.matrix, dbar0_matrix(8));
    assert_eq!(d.n_cols() - d.n_rows(), 4);
    let r = kernel_cokernel(&d).unwrap();
    assert_eq!((r.kernel_dim(), r.cokernel_dim()), (4, 0));
    assert_eq!(r.verdict, RankVerdict::Certified);
    let consts: Vec<&Section> = r.kernel_basis.iter().collect();
    let cb = crlab::linalg::columns_to_matrix(
        &canonical(8).iter().map(|s| s.to_real()).collect::<Vec<_>>(),
    );
    let kb = crlab::linalg::columns_to_matrix(&consts.iter().map(|s| s.to_real()).collect::<Vec<_>>());
    assert!(crlab::linalg::subspace_angle(&cb, &kb).unwrap() < 1e-12);
}

#[test]
fn random_small_perturbations_keep_index_four() {
    for (l, trials) in [(8usize, 20u64), (12, 5)] {
        let spec = Spectral::new(l).unwrap();
        for seed in 0..trials {
            let y = BundleHom::random_smooth(&spec, 3, 0.6, seed);
            assert!(y.aliasing_fraction(&spec) < 1e-8);
            let d = assemble(&spec, &y, "random").unwrap();
            let c = index_certificate(&d).unwrap();
            assert_eq!(c.index, 4, "L={l} seed={seed}");
            assert_eq!(c.verdict, RankVerdict::Certified);
            let fast = index_certificate_fast(&d).unwrap();
            assert_eq!(fast.index, 4);
        }
    }
}

#[test]
fn assembly_is_linear_and_fast_path_matches_reference() {
    let spec = Spectral::new(8).unwrap();
    let y1 = BundleHom::random_smooth(&spec, 3, 1.0, 1);
    let y2 = BundleHom::random_smooth(&spec, 3, 1.0, 2);
    let a = -0.7;
    let m1 = y_matrix(&spec, &y1).unwrap();
    let m2 = y_matrix(&spec, &y2).unwrap();
    let m = y_matrix(&spec, &y1.scale(a).add(&y2)).unwrap();
    let diff = &m - &(&m1 * a + &m2);
    assert!(diff.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-12);
    let reference = y_matrix_columnwise(&spec, &y1).unwrap();
    let d2 = &m1 - &reference;
    assert!(d2.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-12);
    let d = assemble(&spec, &y1, "y1").unwrap();
    let expect = dbar0_matrix(8) + &m1 * 0.5;
    assert!((&d.matrix - &expect).iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-14);
}

#[test]
fn adjoint_is_adjoint() {
    let spec = Spectral::new(8).unwrap();
    let d = assemble(&spec, &BundleHom::random_smooth(&spec, 3, 1.0, 9), "r").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random_section(8, 4, 1.0, &mut rng);
    let a = AntiForm::from_real(8, &(0..d.n_rows()).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>()).unwrap();
    let lhs = l2_inner(&d.apply(&x), &a).unwrap();
    let rhs = l2_inner(&x, &d.apply_adjoint(&a)).unwrap();
    assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
}

#[test]
fn perturbed_operator_equals_reassembly() {
    let spec = Spectral::new(8).unwrap();
    let y = BundleHom::random_smooth(&spec, 3, 1.0, 3);
    let yp = BundleHom::random_smooth(&spec, 3, 1.0, 4);
    let d = assemble(&spec, &y, "base").unwrap();
    let p = d.perturbed(&spec, &yp, 0.3, "pert").unwrap();
    let q = assemble(&spec, &y.add(&yp.scale(0.3)), "direct").unwrap();
    assert!((&p.matrix - &q.matrix).iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-12);
}

#[test]
fn wrong_grid_is_rejected() {
    let spec = Spectral::new(8).unwrap();
    let other = Spectral::new(10).unwrap();
    let y = BundleHom::random_smooth(&other, 2, 1.0, 0);
    assert_eq!(assemble(&spec, &y, "bad").unwrap_err().code(), "GRID_MISMATCH");
}

#[test]
fn frame_operator_annihilates_its_frame() {
    let spec = Spectral::new(12).unwrap();
    let e = near_canonical_frame(12, 21, 0.15);
    let d = operator_from_frame(&spec, &e).unwrap();
    let smax = d.sigma_max();
    for s in &e {
        assert!(d.apply(s).norm() <= 1e-8 * smax * s.norm());
    }
    let r = kernel_cokernel(&d).unwrap();
    assert_eq!(r.index(), 4);
    let k: Vec<Vec<f64>> = r.kernel_basis.iter().map(|s| s.to_real()).collect();
    let km = crlab::linalg::columns_to_matrix(&k);
    for s in &e {
        let one = crlab::linalg::columns_to_matrix(&[s.to_real()]);
        assert!(crlab::linalg::subspace_angle(&one, &km).unwrap() <= 1e-8);
    }
}

#[test]
fn frame_operator_is_unique() {
    let spec = Spectral::new(10).unwrap();
    let e = near_canonical_frame(10, 5, 0.15);
    let y = frame_bundle_hom(&spec, &e, TAU_SR).unwrap();
    // any other frame of the same kernel: permute and mix by a constant invertible matrix
    let mix = Matrix4::new(
        1.0, 0.3, 0.0, -0.2, //
        0.1, 1.0, 0.4, 0.0, //
        0.0, -0.5, 1.0, 0.2, //
        0.3, 0.0, 0.1, 1.0,
    );
    let other: [Section; 4] = std::array::from_fn(|j| {
        let mut s = Section::zeros(10);
        for i in 0..4 {
            s = s.axpy(mix[(i, j)], &e[(i + 1) % 4]);
        }
        s
    });
    let y2 = frame_bundle_hom(&spec, &other, TAU_SR).unwrap();
    let scale = y.sup_norm().max(1.0);
    for (a, b) in y.samples.iter().zip(&y2.samples) {
        assert!((a - b).norm() <= 1e-12 * scale);
    }
    // canonical frame gives Y = 0
    let y0 = frame_bundle_hom(&spec, &canonical(10), TAU_SR).unwrap();
    assert_eq!(y0.sup_norm(), 0.0);
}

#[test]
fn degenerate_frame_is_rejected() {
    let spec = Spectral::new(8).unwrap();
    let mut e = canonical(8);
    e[3] = e[2].clone();
    let err = operator_from_frame(&spec, &e).unwrap_err();
    assert_eq!(err.code(), "FRAME_DEGENERATE");
}

#[test]
fn operator_depends_continuously_on_frame() {
    let spec = Spectral::new(8).unwrap();
    let e = near_canonical_frame(8, 8, 0.15);
    let d = operator_from_frame(&spec, &e).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let dir: [Section; 4] = std::array::from_fn(|_| random_section(8, 2, 1.0, &mut rng));
    let mut ratios = Vec::new();
    for delta in [1e-4, 5e-4] {
        let ep: [Section; 4] = std::array::from_fn(|i| e[i].axpy(delta, &dir[i]));
        let dist = (0..4)
            .flat_map(|i| {
                let a = spec.synthesize(&e[i]);
                let b = spec.synthesize(&ep[i]);
                a.iter().zip(&b).map(|(x, y)| (x - y).norm()).collect::<Vec<_>>()
            })
            .fold(0.0, f64::max);
        assert!(dist < 1e-3);
        let dp = operator_from_frame(&spec, &ep).unwrap();
        let diff = spectral_norm(&(&dp.matrix - &d.matrix)).unwrap();
        ratios.push(diff / dist);
    }
    println!("measured continuity constant C = {:.4}", ratios[0].max(ratios[1]));
    assert!(ratios.iter().all(|c| c.is_finite() && *c > 0.0));
    assert!((ratios[0] / ratios[1] - 1.0).abs() < 0.1);
}

#[test]
fn dbar0_is_superregular_with_constant_basis() {
    let spec = Spectral::new(8).unwrap();
    let d = assemble(&spec, &BundleHom::zero(spec.n_nodes()), "flat").unwrap();
    let c = certify_superregular(&spec, &d, BasisChoice::Given(&canonical(8)), None).unwrap();
    assert_eq!(c.verdict, SuperregVerdict::Superregular);
    assert!((c.min_frame_sigma - 1.0).abs() < 1e-12);
    let auto = certify_superregular(&spec, &d, BasisChoice::Auto { budget: 8, seed: 1 }, None).unwrap();
    assert_eq!(auto.verdict, SuperregVerdict::Superregular);
    assert!(auto.basis.is_some());
}

#[test]
fn non_kernel_basis_is_rejected() {
    let spec = Spectral::new(8).unwrap();
    let d = assemble(&spec, &BundleHom::zero(spec.n_nodes()), "flat").unwrap();
    let e = near_canonical_frame(8, 3, 0.2);
    let err = certify_superregular(&spec, &d, BasisChoice::Given(&e), None).unwrap_err();
    assert_eq!(err.code(), "RESIDUAL_FAIL");
}

#[test]
fn kernel_never_drops_below_the_index() {
    let spec = Spectral::new(6).unwrap();
    for amp in [1.0, 6.0, 20.0] {
        let y = BundleHom::from_fn(&spec, |p| Matrix4::identity() * amp * (1.0 + p.xyz()[1]));
        let d = assemble(&spec, &y, "big").unwrap();
        let r = kernel_cokernel(&d).unwrap();
        assert!(r.kernel_dim() >= 4);
        assert_eq!(r.index(), 4);
    }
}

#[test]
fn sign_flip_frame_is_degenerate_with_witness() {
    let spec = Spectral::new(8).unwrap();
    let mut e = canonical(8);
    e[3] = spec.project(|p| unit(3) * p.xyz()[0]);
    let c = certify_frame(&spec, &e, Some(&SpherePoint::new(0.3, 0.0)));
    assert_eq!(c.verdict, SuperregVerdict::Degenerate);
    let w = c.witness.unwrap();
    assert!(w.det * w.reference_det <= 0.0 || w.sigma <= TAU_SR);
}

#[test]
fn spectrum_exports_as_csv() {
    let spec = Spectral::new(4).unwrap();
    let d = assemble(&spec, &BundleHom::zero(spec.n_nodes()), "flat").unwrap();
    let r = kernel_cokernel(&d).unwrap();
    let mut buf = Vec::new();
    r.write_spectrum_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), r.singular_values.len() + 1);
    let kv = r.to_kv();
    assert!(kv.iter().any(|(k, v)| k == "index" && v == "4"));
}
