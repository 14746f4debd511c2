use serde::Serialize;
use std::io::Write;

use super::curvature::ProductKahler;
use super::probes::{
    check_cur_k, check_superregular_criteria, CriterionVerdict, CurKReport, CurKVerdict, HolSphere, Probe,
    SuperregularCriteria,
};
use super::quotient::{quotient_curvature_probe, QuotientReport};
use crate::error::{CrError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct KahlerConfig {
    /// scale of the first factor of S² × S²
    pub scale: f64,
    pub k: i64,
    pub probes: Vec<String>,
    pub synthetic_fail: bool,
    pub quotient_l: usize,
}

impl Default for KahlerConfig {
    fn default() -> Self {
        Self {
            scale: 1.0,
            k: -1,
            probes: ["horizontal", "vertical", "diagonal", "graph2"].iter().map(|s| s.to_string()).collect(),
            synthetic_fail: false,
            quotient_l: 12,
        }
    }
}

pub fn probe_by_name(name: &str) -> Result<HolSphere> {
    match name {
        "horizontal" => Ok(HolSphere::horizontal()),
        "vertical" => Ok(HolSphere::vertical()),
        "diagonal" => Ok(HolSphere::diagonal()),
        "branched" => Ok(HolSphere::branched()),
        _ => name
            .strip_prefix("graph")
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|&d| d >= 1)
            .map(HolSphere::graph)
            .ok_or_else(|| CrError::Config(format!("unknown probe {name}"))),
    }
}

/// One inequality or criterion, with both sides.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub probe: String,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: String,
    pub witness: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct KahlerSuite {
    pub config: KahlerConfig,
    pub cur_k: Vec<CurKReport>,
    pub superregular: Vec<SuperregularCriteria>,
    pub quotient: Option<QuotientReport>,
    pub rows: Vec<SuiteRow>,
    /// first failing check as (probe, code, witness)
    pub failure: Option<(String, String, String)>,
}

impl KahlerSuite {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        if self.rows.is_empty() {
            wr.write_record(["probe", "check", "lhs", "rhs", "verdict", "witness"])?;
        }
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn degrees_text(d: &[i64]) -> String {
    d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn run_kahler_suite(cfg: &KahlerConfig) -> Result<KahlerSuite> {
    let m = ProductKahler::two_factor(cfg.scale)?;
    let mut suite = KahlerSuite {
        config: cfg.clone(),
        cur_k: Vec::new(),
        superregular: Vec::new(),
        quotient: None,
        rows: Vec::new(),
        failure: None,
    };
    let fail = |suite: &mut KahlerSuite, probe: &str, code: &str, witness: String| {
        if suite.failure.is_none() {
            suite.failure = Some((probe.into(), code.into(), witness));
        }
    };
    let mut probes: Vec<Probe> = Vec::new();
    for name in &cfg.probes {
        probes.push(Probe::Sphere(probe_by_name(name)?));
    }
    if cfg.synthetic_fail {
        probes.push(Probe::synthetic_extension(
            "synthetic_split_normal",
            vec![(2, 0, num_complex::Complex64::new(0.5, 0.0))],
        )?);
    }
    for probe in &probes {
        if let Probe::Sphere(u) = probe {
            let r = check_cur_k(&m, u, cfg.k, None)?;
            suite.rows.push(SuiteRow {
                probe: u.name.clone(),
                check: "cur_k".into(),
                lhs: r.c,
                rhs: r.threshold,
                verdict: format!("{:?}", r.verdict),
                witness: format!("degrees {} vs k {}", degrees_text(&r.degrees), r.k),
            });
            if r.verdict == CurKVerdict::Fail || r.verdict == CurKVerdict::RejectedHypothesis {
                fail(&mut suite, &u.name, "CUR_K", format!("min degree {}", r.min_degree));
            }
            suite.cur_k.push(r);
        }
        let c1 = match probe {
            Probe::Sphere(u) => u.tangent_bundle().c1(),
            Probe::Synthetic { tangent, normal, .. } => tangent.c1() + normal.c1(),
        };
        match check_superregular_criteria(probe, &m, c1) {
            Ok(r) => {
                let nd = r.normal.as_ref().map(|n| degrees_text(&n.degrees)).unwrap_or_default();
                suite.rows.push(SuiteRow {
                    probe: r.probe.clone(),
                    check: "superregular".into(),
                    lhs: r.c,
                    rhs: -std::f64::consts::PI / r.omega,
                    verdict: format!("{:?}", r.verdict),
                    witness: format!("normal degrees {nd}; {}", r.reason),
                });
                if r.verdict == CriterionVerdict::Fail {
                    fail(
                        &mut suite,
                        &r.probe,
                        "SUPERREGULAR_CRITERION",
                        format!("normal subbundle of degree {}", r.witness_degree.unwrap_or(0)),
                    );
                }
                suite.superregular.push(r);
            }
            Err(e) => {
                suite.rows.push(SuiteRow {
                    probe: probe.name().into(),
                    check: "superregular".into(),
                    lhs: f64::NAN,
                    rhs: f64::NAN,
                    verdict: e.code().into(),
                    witness: e.to_string(),
                });
                fail(&mut suite, probe.name(), e.code(), e.to_string());
            }
        }
    }
    if !cfg.probes.is_empty() {
        let q = quotient_curvature_probe(cfg.quotient_l);
        suite.rows.push(SuiteRow {
            probe: "tautological_complement".into(),
            check: "quotient_curvature".into(),
            lhs: q.min_density,
            rhs: q.ambient_curvature,
            verdict: if q.pointwise_ok { "Pass" } else { "Fail" }.into(),
            witness: format!("min density {:.3e}", q.min_density),
        });
        suite.rows.push(SuiteRow {
            probe: "tautological_complement".into(),
            check: "quotient_chern".into(),
            lhs: q.chern_quadrature,
            rhs: 1.0,
            verdict: if q.chern_ok { "Pass" } else { "Fail" }.into(),
            witness: format!("lattice {:.9}", q.chern_lattice),
        });
        if !q.pointwise_ok || !q.chern_ok {
            fail(&mut suite, "tautological_complement", "QUOTIENT_CURVATURE", format!("{:.3e}", q.min_density));
        }
        suite.quotient = Some(q);
    }
    Ok(suite)
}
