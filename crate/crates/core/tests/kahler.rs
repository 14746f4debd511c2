use crlab::kahler::*;
use crlab::sphere::{SphereGrid, SpherePoint};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

fn random_coeffs(n: usize, seed: u64) -> Vec<C> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| C::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect()
}

fn apply_dbar(b: &SpinBasis, c: &[C], l: usize, grid: &SphereGrid) -> Vec<C> {
    let out = SpinBasis::new(b.two_k - 2, l, grid);
    let mut oc = vec![C::new(0.0, 0.0); out.len()];
    for (i, o, f) in dbar_entries(b, &out) {
        oc[o] += c[i] * f;
    }
    out.synthesize(&oc, grid)
}

#[test]
fn dbar_matches_finite_differences() {
    for two_k in [-3, -2, -1, 0, 1, 2] {
        let l = 4;
        let grid = SphereGrid::new(l + 3, 2 * l + 6);
        let b = SpinBasis::new(two_k, l, &grid);
        let cf = random_coeffs(b.len(), (10 + two_k) as u64);
        let out = SpinBasis::new(two_k - 2, l, &grid);
        let mut oc = vec![C::new(0.0, 0.0); out.len()];
        for (i, o, f) in dbar_entries(&b, &out) {
            oc[o] += cf[i] * f;
        }
        let k = 0.5 * two_k as f64;
        let h = 1e-5;
        for p in [SpherePoint::new(0.7, 0.3), SpherePoint::new(2.1, -1.2)] {
            let f = |t: f64, ph: f64| b.eval(&cf, &SpherePoint::new(t, ph));
            let dt = (f(p.theta + h, p.phi) - f(p.theta - h, p.phi)) / (2.0 * h);
            let dp = (f(p.theta, p.phi + h) - f(p.theta, p.phi - h)) / (2.0 * h);
            let fd = 0.5 * (dt + C::i() * dp / p.theta.sin() + k * p.theta.cos() / p.theta.sin() * f(p.theta, p.phi));
            let exact = out.eval(&oc, &p);
            assert!((fd - exact).norm() <= 1e-7 * (1.0 + exact.norm()), "2k = {two_k}: {fd} vs {exact}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn dbar_obeys_the_leibniz_rule(a in -3i32..=3, b in -3i32..=3, seed in 0u64..1000) {
        let (la, lb) = (3usize, 2usize);
        let l = la + lb + 1;
        let grid = SphereGrid::new(l + 3, 2 * l + 6);
        let fa = SpinBasis::new(a, la, &grid);
        let fb = SpinBasis::new(b, lb, &grid);
        let ca = random_coeffs(fa.len(), seed);
        let cb = random_coeffs(fb.len(), seed + 1);
        let va = fa.synthesize(&ca, &grid);
        let vb = fb.synthesize(&cb, &grid);
        let prod: Vec<C> = va.iter().zip(&vb).map(|(x, y)| x * y).collect();
        let fp = SpinBasis::new(a + b, l, &grid);
        let cp = fp.analyze(&prod, &grid);
        let resynth = fp.synthesize(&cp, &grid);
        let scale = prod.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (x, y) in resynth.iter().zip(&prod) {
            prop_assert!((x - y).norm() <= 1e-10 * scale);
        }
        let lhs = apply_dbar(&fp, &cp, l, &grid);
        let da = apply_dbar(&fa, &ca, la, &grid);
        let db = apply_dbar(&fb, &cb, lb, &grid);
        for i in 0..grid.len() {
            let rhs = da[i] * vb[i] + va[i] * db[i];
            prop_assert!((lhs[i] - rhs).norm() <= 1e-9 * (1.0 + scale * l as f64));
        }
    }

    #[test]
    fn line_bundle_sections_count(a in -5i64..=5) {
        let e = HolBundle::split(&[a]);
        let k = holomorphic_sections(&e, 6).unwrap();
        prop_assert_eq!(k.dim as i64, (a + 1).max(0));
    }

    #[test]
    fn split_bundles_recover_their_degrees(mut d in proptest::collection::vec(-3i64..=4, 1..4)) {
        let st = probe_splitting(&HolBundle::split(&d)).unwrap();
        d.sort();
        prop_assert_eq!(&st.degrees, &d);
        prop_assert_eq!(st.c1, d.iter().sum::<i64>());
        for w in st.profile.windows(3) {
            let (d0, d1) = (w[0].1 as i64 - w[1].1 as i64, w[1].1 as i64 - w[2].1 as i64);
            prop_assert!(d0 >= d1);
        }
    }
}

#[test]
fn half_integer_transform_is_orthonormal() {
    let grid = SphereGrid::new(8, 18);
    for two_k in [-3, -1, 1, 3] {
        let b = SpinBasis::new(two_k, 5, &grid);
        for i in 0..b.len() {
            let v = b.basis_values(i, &grid);
            let c = b.analyze(&v, &grid);
            for (j, cj) in c.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((cj - want).norm() < 1e-12, "2k = {two_k} ({i}, {j}) {cj}");
            }
        }
    }
}

#[test]
fn extension_splits_by_its_class() {
    // l = 0 component: nonzero class in H¹(O(-2)), the extension is O ⊕ O
    let e = HolBundle::split(&[-1, 1]).with_coupling(0, 1, vec![(0, 0, C::new(0.8, 0.0))]).unwrap();
    let st = probe_splitting(&e).unwrap();
    assert_eq!(st.degrees, vec![0, 0]);
    // an exact coupling is gauged away
    let e = HolBundle::split(&[-1, 1]).with_coupling(0, 1, vec![(2, 0, C::new(0.8, 0.0)), (2, 2, C::new(0.0, 0.3))]).unwrap();
    let st = probe_splitting(&e).unwrap();
    assert_eq!(st.degrees, vec![-1, 1]);
    // O(-2) → E → O(2): H¹(O(-4)) is 3-dimensional; a generic class gives O ⊕ O
    let e = HolBundle::split(&[-2, 2])
        .with_coupling(0, 1, vec![(2, 0, C::new(1.0, 0.0)), (2, 2, C::new(0.2, 0.1)), (2, -2, C::new(-0.4, 0.0))])
        .unwrap();
    assert_eq!(probe_splitting(&e).unwrap().degrees, vec![0, 0]);
    // a class of weight one pairs only one weight of H⁰(O(1)), giving O(-1) ⊕ O(1)
    let e = HolBundle::split(&[-2, 2]).with_coupling(0, 1, vec![(2, 2, C::new(1.0, 0.0))]).unwrap();
    assert_eq!(probe_splitting(&e).unwrap().degrees, vec![-1, 1]);
    let e = HolBundle::split(&[-2, 2]).with_coupling(0, 1, vec![(2, 0, C::new(1.0, 0.0))]).unwrap();
    assert_eq!(probe_splitting(&e).unwrap().degrees, vec![0, 0]);
}

#[test]
fn couplings_must_have_the_right_spin() {
    let e = HolBundle::split(&[-1, 1]);
    assert_eq!(e.clone().with_coupling(0, 1, vec![(1, 1, C::new(1.0, 0.0))]).unwrap_err().code(), "NOT_APPLICABLE");
    assert!(e.with_coupling(0, 0, vec![]).is_err());
}

#[test]
fn probe_splitting_types() {
    let cases = [
        (HolSphere::horizontal(), vec![1, 0], vec![0, 2]),
        (HolSphere::vertical(), vec![0, 1], vec![0, 2]),
        (HolSphere::diagonal(), vec![1, 1], vec![2, 2]),
        (HolSphere::graph(2), vec![1, 2], vec![2, 4]),
    ];
    for (u, deg, split) in cases {
        assert_eq!(u.factor_degrees(), deg, "{}", u.name);
        let st = probe_splitting(&u.tangent_bundle()).unwrap();
        assert_eq!(st.degrees, split, "{}", u.name);
        assert_eq!(st.c1, split.iter().sum::<i64>());
        let h0 = holomorphic_sections(&u.tangent_bundle(), 6).unwrap();
        assert_eq!(h0.dim as i64, split.iter().map(|a| a + 1).sum::<i64>());
        assert!(st.min_gap >= 1e3);
    }
    assert_eq!(HolSphere::graph(2).tangent_bundle().c1(), 6);
}

#[test]
fn fubini_study_curvature() {
    let m = ProductKahler::two_factor(2.5).unwrap();
    for z in [C::new(0.0, 0.0), C::new(0.4, -1.3), C::new(3.0, 2.0)] {
        for i in 0..2 {
            let lam = |w: C| m.metric_factor(i, w);
            let fd = conformal_curvature_fd(&lam, z, 1e-3);
            assert!((fd - m.gaussian_curvature(i)).abs() < 1e-5 * m.gaussian_curvature(i), "{fd}");
        }
    }
    // Gauss–Bonnet for each factor
    let grid = SphereGrid::new(40, 80);
    for i in 0..2 {
        let area: f64 = (0..grid.len())
            .map(|j| grid.weight(j) * m.metric_factor(i, grid.chart_coord(j)) / (4.0 * fs_factor(grid.chart_coord(j))))
            .sum();
        assert!((area - m.factor_area(i)).abs() < 1e-10);
        assert!((area * m.gaussian_curvature(i) - 4.0 * PI).abs() < 1e-9);
    }
}

#[test]
fn bisectional_curvature_of_products() {
    let m = ProductKahler::two_factor(2.5).unwrap();
    let planes = m.sample_planes(300, 1);
    let kmax = m.gaussian_curvature(0).max(m.gaussian_curvature(1));
    for (s, p) in planes.iter().enumerate() {
        let h = m.bisectional(p).unwrap();
        assert!((-1e-15..=kmax + 1e-12).contains(&h));
        match s % 3 {
            0 => assert!((h - m.gaussian_curvature(s % 2)).abs() < 1e-12),
            1 => assert!(h.abs() <= 1e-10),
            _ => {}
        }
    }
    assert!(bisectional_bound(&m, &planes).unwrap().abs() <= 1e-10);
    assert_eq!(bisectional_infimum(&m), 0.0);
    let single = ProductKahler::new(vec![0.5]).unwrap();
    let b = bisectional_bound(&single, &single.sample_planes(50, 2)).unwrap();
    assert!((b - 8.0).abs() < 1e-12);
    assert!(ProductKahler::new(vec![1.0, -1.0]).is_err());
}

#[test]
fn energy_is_twice_the_area() {
    let m = ProductKahler::two_factor(1.7).unwrap();
    let grid = SphereGrid::new(64, 128);
    for u in [HolSphere::horizontal(), HolSphere::vertical(), HolSphere::diagonal(), HolSphere::graph(2)] {
        let e = u.energy(&m, &grid);
        assert!((e - 2.0 * u.omega(&m)).abs() <= 1e-9 * e, "{} {e}", u.name);
    }
}

#[test]
fn cur_k_on_the_probe_set() {
    let m = ProductKahler::two_factor(1.0).unwrap();
    let r = check_cur_k(&m, &HolSphere::horizontal(), -1, None).unwrap();
    assert_eq!(r.verdict, CurKVerdict::Pass);
    assert!(r.c > r.threshold && r.min_degree > r.k);
    assert_eq!(r.degrees, vec![0, 2]);
    // a product has c = 0, so k = 0 is out of reach
    let r = check_cur_k(&m, &HolSphere::diagonal(), 0, None).unwrap();
    assert_eq!(r.verdict, CurKVerdict::HypothesisNotMet);
    assert_eq!(r.threshold, 0.0);
    // claiming more curvature than the metric has is rejected before the conclusion
    let r = check_cur_k(&m, &HolSphere::diagonal(), 0, Some(1.0)).unwrap();
    assert_eq!(r.verdict, CurKVerdict::RejectedHypothesis);
    assert_eq!(r.c_sampled, 0.0);
}

#[test]
fn cur_k_on_a_round_sphere_is_sharp() {
    let m = ProductKahler::new(vec![0.8]).unwrap();
    let id = HolSphere::new("identity", vec![RationalMap::identity()]);
    let r = check_cur_k(&m, &id, 1, None).unwrap();
    assert_eq!(r.verdict, CurKVerdict::Pass);
    assert!(r.chern_lower_bound > 1.0);
    // c ∫‖du‖²/4π equals c₁(TS²) = 2 exactly, so k = 2 sits on the boundary
    let r = check_cur_k(&m, &id, 2, None).unwrap();
    assert!((r.chern_lower_bound - 2.0).abs() < 1e-9);
    assert_eq!(r.verdict, CurKVerdict::HypothesisNotMet);
}

#[test]
fn cur_k_never_fails_when_its_hypothesis_holds() {
    let ms = [ProductKahler::two_factor(0.6).unwrap(), ProductKahler::two_factor(3.0).unwrap()];
    let probes = [HolSphere::horizontal(), HolSphere::vertical(), HolSphere::diagonal(), HolSphere::graph(2)];
    for m in &ms {
        for u in &probes {
            for k in -3..=4 {
                let r = check_cur_k(m, u, k, None).unwrap();
                assert_ne!(r.verdict, CurKVerdict::Fail, "{r:?}");
                assert_eq!(r.verdict == CurKVerdict::Pass, k < 0);
            }
        }
    }
    for s in [0.3, 1.0, 4.0] {
        let m = ProductKahler::new(vec![s]).unwrap();
        for d in 1..=3 {
            let u = HolSphere::new("cover", vec![RationalMap::monomial(d)]);
            for k in -2..=7 {
                let r = check_cur_k(&m, &u, k, None).unwrap();
                assert_ne!(r.verdict, CurKVerdict::Fail, "{r:?}");
            }
        }
    }
}

#[test]
fn superregular_criterion_on_probes() {
    let m = ProductKahler::two_factor(1.3).unwrap();
    for u in [HolSphere::horizontal(), HolSphere::vertical()] {
        let r = check_superregular_criteria(&Probe::Sphere(u), &m, 2).unwrap();
        assert_eq!(r.verdict, CriterionVerdict::Pass, "{r:?}");
        assert_eq!(r.normal.as_ref().unwrap().degrees, vec![0]);
        assert!(r.gate_2pi && r.gate_pi && r.regular);
        assert!(r.min_stretch.unwrap() > 0.0);
    }
    let r = check_superregular_criteria(&Probe::Sphere(HolSphere::diagonal()), &m, 4).unwrap();
    assert_eq!(r.verdict, CriterionVerdict::NotApplicable);
    assert_eq!(r.normal.as_ref().unwrap().degrees, vec![2]);
    let r = check_superregular_criteria(&Probe::Sphere(HolSphere::diagonal()), &m, 2).unwrap();
    assert_eq!(r.verdict, CriterionVerdict::NotApplicable);
    let r = check_superregular_criteria(&Probe::Sphere(HolSphere::graph(2)), &m, 6).unwrap();
    assert_eq!(r.normal.as_ref().unwrap().degrees, vec![4]);
}

#[test]
fn synthetic_normal_bundle_fails_with_a_witness() {
    let m = ProductKahler::two_factor(1.0).unwrap();
    let bad = Probe::synthetic_extension("split_normal", vec![(2, 0, C::new(0.5, 0.0))]).unwrap();
    let r = check_superregular_criteria(&bad, &m, 2).unwrap();
    assert_eq!(r.verdict, CriterionVerdict::Fail);
    assert_eq!(r.witness_degree, Some(-1));
    assert_eq!(r.normal.as_ref().unwrap().degrees, vec![-1, 1]);
    assert!(r.regular);
    let good = Probe::synthetic_extension("nonsplit_normal", vec![(0, 0, C::new(0.5, 0.0))]).unwrap();
    let r = check_superregular_criteria(&good, &m, 2).unwrap();
    assert_eq!(r.verdict, CriterionVerdict::Pass);
}

#[test]
fn branched_sphere_is_not_immersed() {
    let m = ProductKahler::two_factor(1.0).unwrap();
    let e = check_superregular_criteria(&Probe::Sphere(HolSphere::branched()), &m, 4).unwrap_err();
    assert_eq!(e.code(), "NOT_IMMERSED");
    // branch point away from the poles: z ↦ (z - 1)² + 0.5
    let f = RationalMap::polynomial(vec![C::new(1.5, 0.0), C::new(-2.0, 0.0), C::new(1.0, 0.0)]);
    let u = HolSphere::new("shifted", vec![f, RationalMap::constant(C::new(0.0, 0.0))]);
    assert!(u.immersion_check(&m, &SphereGrid::new(48, 96)).is_err());
    assert!(HolSphere::diagonal().immersion_check(&m, &SphereGrid::new(48, 96)).is_ok());
}

#[test]
fn quotient_curvature_dominates_the_flat_ambient() {
    let r = quotient_curvature_probe(12);
    assert!(r.pointwise_ok && r.chern_ok, "{r:?}");
    assert!(r.min_density >= r.ambient_curvature - QUOTIENT_TOL);
    assert!(r.max_closed_form_mismatch < 1e-6, "{r:?}");
    assert!(r.max_sff_mismatch < 1e-6);
    assert!((r.chern_quadrature - 1.0).abs() <= CHERN_TOL);
    assert!((r.chern_lattice - 1.0).abs() <= 1e-9);
    assert!((r.tautological_lattice + 1.0).abs() <= 1e-9);
    assert_eq!(r.nodes, crlab::sphere::make_grid(12).unwrap().refined(4).len());
}

#[test]
fn default_suite_passes_and_exports() {
    let s = run_kahler_suite(&KahlerConfig::default()).unwrap();
    assert!(s.passed(), "{:?}", s.failure);
    assert_eq!(s.cur_k.len(), 4);
    assert!(s.cur_k.iter().all(|r| r.verdict == CurKVerdict::Pass));
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("probe,check,lhs,rhs,verdict,witness\n"));
    assert_eq!(text.lines().count(), s.rows.len() + 1);
    let v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
    assert_eq!(v["cur_k"].as_array().unwrap().len(), 4);
}

#[test]
fn suite_reports_the_synthetic_failure() {
    let cfg = KahlerConfig {
        synthetic_fail: true,
        ..KahlerConfig::default()
    };
    let s = run_kahler_suite(&cfg).unwrap();
    let (probe, code, witness) = s.failure.unwrap();
    assert_eq!(probe, "synthetic_split_normal");
    assert_eq!(code, "SUPERREGULAR_CRITERION");
    assert!(witness.contains("-1"));
}

#[test]
fn empty_suite_is_empty() {
    let cfg = KahlerConfig {
        probes: vec![],
        ..KahlerConfig::default()
    };
    let s = run_kahler_suite(&cfg).unwrap();
    assert!(s.passed() && s.rows.is_empty());
    assert_eq!(probe_by_name("nonsense").unwrap_err().code(), "CONFIG");
    assert_eq!(probe_by_name("graph3").unwrap().factor_degrees(), vec![1, 3]);
}
