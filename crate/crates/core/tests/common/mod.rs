#![allow(dead_code)]

use crlab::counterexample::{
    build_superregular_with_cokernel, foliation_map_scan, normalize_e5, ConstructedExample,
    DegeneracyReport, Normalization,
};
use crlab::sphere::Spectral;
use std::sync::OnceLock;

pub struct Pipeline {
    pub spec: Spectral,
    pub built: ConstructedExample,
    pub norm: Normalization,
    pub scan: DegeneracyReport,
    pub seconds: f64,
}

pub fn pipeline() -> &'static Pipeline {
    static P: OnceLock<Pipeline> = OnceLock::new();
    P.get_or_init(|| {
        let t = std::time::Instant::now();
        let spec = Spectral::new(24).unwrap();
        let built = build_superregular_with_cokernel(&spec).unwrap();
        let norm = normalize_e5(&spec, &built.e).unwrap();
        let scan = foliation_map_scan(&spec, &norm.e, 400, 7).unwrap();
        Pipeline {
            spec,
            built,
            norm,
            scan,
            seconds: t.elapsed().as_secs_f64(),
        }
    })
}

pub struct FamilyRun {
    pub fam: crlab::family::PerturbationFamily,
    pub sweep: crlab::family::SweepReport,
    pub seconds: f64,
}

/// The 41-sample family on top of the pipeline, with the default sweep.
pub fn family() -> &'static FamilyRun {
    static F: OnceLock<FamilyRun> = OnceLock::new();
    F.get_or_init(|| {
        use crlab::family::*;
        let p = pipeline();
        let t = std::time::Instant::now();
        let fam = build_perturbation_family(&p.spec, &p.built.d, &p.norm, 41, DEFAULT_RADIUS).unwrap();
        let sweep = superregularity_sweep(&fam, &p.spec, None, DEFAULT_DELTA).unwrap();
        FamilyRun {
            fam,
            sweep,
            seconds: t.elapsed().as_secs_f64(),
        }
    })
}
