use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{Pipeline, RunConfig};
use crate::counterexample::{build_superregular_with_cokernel, foliation_map_scan, normalize_e5};
use crate::cr::{operator_from_frame, SuperregVerdict};
use crate::error::CrError;
use crate::family::{build_perturbation_family, superregularity_sweep};
use crate::kahler::run_kahler_suite;
use crate::sphere::{FieldArtifact, Section, Spectral};

/// The single certificate a failed command names, with its witness.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: String,
    pub witness: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.witness)
    }
}

impl From<CrError> for Failure {
    fn from(e: CrError) -> Self {
        Self {
            code: e.code().into(),
            witness: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        CrError::from(e).into()
    }
}

fn fail<T>(code: &str, witness: impl Into<String>) -> Result<T, Failure> {
    Err(Failure {
        code: code.into(),
        witness: witness.into(),
    })
}

#[derive(Debug, Clone)]
pub struct Outcome {
    /// structured text certificate, also written to certificate.txt
    pub certificate: String,
    pub files: Vec<PathBuf>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: PathBuf) -> Result<Self, Failure> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn text(&mut self, name: &str, content: &str) -> Result<(), Failure> {
        let p = self.dir.join(name);
        fs::write(&p, content)?;
        self.files.push(p);
        Ok(())
    }

    fn with<F>(&mut self, name: &str, f: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut Vec<u8>) -> crate::error::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        let p = self.dir.join(name);
        fs::write(&p, buf)?;
        self.files.push(p);
        Ok(())
    }
}

fn kv_text(kv: &[(String, String)]) -> String {
    kv.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

/// Writes certificate.txt with the status line and returns the outcome, or the failure.
fn finish(mut w: Writer, pipeline: &str, mut kv: Vec<(String, String)>, failure: Option<Failure>) -> Result<Outcome, Failure> {
    let mut head = vec![("pipeline".to_string(), pipeline.to_string())];
    match &failure {
        None => head.push(("status".into(), "PASS".into())),
        Some(f) => {
            head.push(("status".into(), "FAIL".into()));
            head.push(("failed".into(), f.code.clone()));
            head.push(("witness".into(), f.witness.clone()));
        }
    }
    head.append(&mut kv);
    let certificate = kv_text(&head);
    w.text("certificate.txt", &certificate)?;
    match failure {
        Some(f) => Err(f),
        None => Ok(Outcome {
            certificate,
            files: w.files,
        }),
    }
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

/// Superregular operator with one-dimensional cokernel, its normalization and the
/// degeneracy scan of the associated foliation map.
pub fn cmd_construct(cfg: &RunConfig) -> Result<Outcome, Failure> {
    cfg.validate()?;
    let spec = Spectral::new(cfg.l)?;
    let mut w = Writer::new(cfg.out.join("construct"))?;
    w.text("config.kv", &cfg.to_kv())?;
    let built = build_superregular_with_cokernel(&spec)?;
    let arts: Vec<FieldArtifact> = built.e.iter().map(|s| s.to_artifact()).collect();
    w.text("sections.json", &serde_json::to_string(&arts).map_err(CrError::from)?)?;
    let mut kernel = built.report.to_kv();
    kernel.push(kv("e5_residual", format!("{:.6e}", built.e5_residual)));
    kernel.push(kv("e5_angle", format!("{:.6e}", built.e5_angle)));
    kernel.push(kv("obstruction_degree", built.obstruction_degree));
    kernel.push(kv("max_tail_fraction", format!("{:.6e}", built.max_tail_fraction)));
    w.text("kernel.kv", &kv_text(&kernel))?;
    w.with("spectrum.csv", |b| built.report.write_spectrum_csv(b))?;
    w.text(
        "superregular.json",
        &serde_json::to_string_pretty(&built.certificate).map_err(CrError::from)?,
    )?;
    let norm = normalize_e5(&spec, &built.e)?;
    w.text("normalization.json", &serde_json::to_string_pretty(&norm).map_err(CrError::from)?)?;
    let scan = foliation_map_scan(&spec, &norm.e, cfg.scan_pairs, cfg.seed)?;
    w.text("degeneracy.kv", &kv_text(&scan.to_kv()))?;
    w.with("degeneracy.csv", |b| scan.write_csv(b))?;

    let r = &built.report;
    let mut summary = vec![
        kv("L", cfg.l),
        kv("kernel_dim", r.kernel_dim()),
        kv("cokernel_dim", r.cokernel_dim()),
        kv("gap_ratio", format!("{:.6e}", r.gap_ratio)),
        kv("superregular", format!("{:?}", built.certificate.verdict)),
        kv("min_frame_sigma", format!("{:.6e}", built.certificate.min_frame_sigma)),
        kv("e5_residual", format!("{:.6e}", built.e5_residual)),
        kv("p0_node", norm.p0_node),
        kv("zero_node", norm.zero_node),
        kv("h_min", format!("{:.6e}", norm.h_min)),
        kv("singular_nodes", scan.singular_nodes.len()),
        kv("symmetric_difference", scan.symmetric_difference),
    ];
    summary.extend(w.files.iter().map(|p| kv("file", p.file_name().unwrap().to_string_lossy())));
    let failure = if r.kernel_dim() != 5 || r.cokernel_dim() != 1 {
        Some(Failure {
            code: "KERNEL_DIM".into(),
            witness: format!("kernel {} cokernel {}", r.kernel_dim(), r.cokernel_dim()),
        })
    } else if built.certificate.verdict != SuperregVerdict::Superregular {
        Some(Failure {
            code: "NOT_SUPERREGULAR".into(),
            witness: format!(
                "node {} sigma {:.3e}",
                built.certificate.argmin_node, built.certificate.min_frame_sigma
            ),
        })
    } else if scan.symmetric_difference != 0 {
        Some(Failure {
            code: "DEGENERACY_SCAN".into(),
            witness: format!("{} nodes differ between det = 0 and h = 0", scan.symmetric_difference),
        })
    } else {
        None
    };
    finish(w, "construct", summary, failure)
}

fn load_sections(dir: &Path, l: usize) -> Result<[Section; 5], Failure> {
    let p = dir.join("sections.json");
    let text = match fs::read_to_string(&p) {
        Ok(t) => t,
        Err(_) => return fail("MISSING_ARTIFACTS", format!("{} not found; run construct first", p.display())),
    };
    let arts: Vec<FieldArtifact> = serde_json::from_str(&text).map_err(CrError::from)?;
    if arts.len() != 5 {
        return fail("MISSING_ARTIFACTS", format!("{} holds {} sections", p.display(), arts.len()));
    }
    let secs: Vec<Section> = arts.iter().map(Section::from_artifact).collect::<crate::error::Result<_>>()?;
    if secs[0].l_max() != l {
        return Err(CrError::GridMismatch(format!("artifacts have L = {}, config has L = {l}", secs[0].l_max())).into());
    }
    Ok([secs[0].clone(), secs[1].clone(), secs[2].clone(), secs[3].clone(), secs[4].clone()])
}

/// Family sweep over s ∈ [-1, 1] from the construct artifacts.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome, Failure> {
    cfg.validate()?;
    let spec = Spectral::new(cfg.l)?;
    let e = load_sections(&cfg.out.join("construct"), cfg.l)?;
    let mut w = Writer::new(cfg.out.join("sweep"))?;
    w.text("config.kv", &cfg.to_kv())?;
    let d = operator_from_frame(&spec, &[e[0].clone(), e[1].clone(), e[2].clone(), e[3].clone()])?;
    let norm = normalize_e5(&spec, &e)?;
    let fam = build_perturbation_family(&spec, &d, &norm, cfg.s_samples, cfg.radius)?;
    let rep = superregularity_sweep(&fam, &spec, cfg.t, cfg.delta)?;
    w.with("sweep.csv", |b| rep.write_csv(b))?;
    w.text("sweep.json", &rep.to_json()?)?;
    let mut summary = vec![
        kv("L", cfg.l),
        kv("t", format!("{:.12e}", rep.t)),
        kv("c", format!("{:.12e}", rep.c)),
        kv("tc", format!("{:.6e}", rep.t.abs() * rep.c)),
        kv("delta", rep.delta),
        kv("samples", rep.rows.len()),
        kv("superregular_ok", rep.superregular_ok),
        kv("degenerate_ok", rep.degenerate_ok),
        kv("inequalities_ok", rep.inequalities_ok),
        kv("series_bound_ok", rep.series_bound_ok),
        kv("bracket", rep.bracket.map(|(a, b)| format!("{a} {b}")).unwrap_or_else(|| "none".into())),
    ];
    summary.extend(w.files.iter().map(|p| kv("file", p.file_name().unwrap().to_string_lossy())));
    let failure = if rep.passed() {
        None
    } else {
        let flag = [
            ("superregular_ok", rep.superregular_ok),
            ("degenerate_ok", rep.degenerate_ok),
            ("inequalities_ok", rep.inequalities_ok),
            ("series_bound_ok", rep.series_bound_ok),
        ]
        .into_iter()
        .find(|(_, ok)| !ok)
        .map(|(n, _)| n)
        .unwrap_or("unknown");
        let row = rep
            .rows
            .iter()
            .find(|r| {
                (r.s >= rep.delta && r.verdict != SuperregVerdict::Superregular)
                    || (r.s <= -rep.delta && r.verdict != SuperregVerdict::Degenerate)
            })
            .map(|r| format!(" at s = {} ({:?})", r.s, r.verdict))
            .unwrap_or_default();
        Some(Failure {
            code: "SWEEP_DICHOTOMY".into(),
            witness: format!("{flag} failed{row}"),
        })
    };
    finish(w, "sweep", summary, failure)
}

/// Curvature criteria on the probe spheres and the quotient-curvature probe.
pub fn cmd_kahler(cfg: &RunConfig) -> Result<Outcome, Failure> {
    cfg.validate()?;
    let mut w = Writer::new(cfg.out.join("kahler"))?;
    w.text("config.kv", &cfg.to_kv())?;
    let suite = run_kahler_suite(&cfg.kahler)?;
    w.with("kahler.csv", |b| suite.write_csv(b))?;
    w.text("kahler.json", &suite.to_json()?)?;
    let mut summary = vec![kv("rows", suite.rows.len())];
    for r in &suite.rows {
        summary.push(kv(
            &format!("{}.{}", r.probe, r.check),
            format!("{} lhs {:.6e} rhs {:.6e}", r.verdict, r.lhs, r.rhs),
        ));
    }
    summary.extend(w.files.iter().map(|p| kv("file", p.file_name().unwrap().to_string_lossy())));
    let failure = suite.failure.as_ref().map(|(probe, code, witness)| Failure {
        code: code.clone(),
        witness: format!("{probe}: {witness}"),
    });
    finish(w, "kahler", summary, failure)
}

/// Collects the certificates of the selected pipelines into report.txt.
pub fn cmd_report(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let mut text = String::new();
    let mut first_fail: Option<Failure> = None;
    for p in &cfg.pipelines {
        let path = cfg.out.join(p.name()).join("certificate.txt");
        let cert = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(_) => return fail("MISSING_ARTIFACTS", format!("{} not found; run {} first", path.display(), p.name())),
        };
        if first_fail.is_none() && cert.lines().any(|l| l == "status = FAIL") {
            let get = |key: &str| {
                cert.lines()
                    .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(String::from))
                    .unwrap_or_default()
            };
            first_fail = Some(Failure {
                code: get("failed"),
                witness: format!("{}: {}", p.name(), get("witness")),
            });
        }
        text.push_str(&format!("[{}]\n{}\n", p.name(), cert));
    }
    let path = cfg.out.join("report.txt");
    fs::create_dir_all(&cfg.out)?;
    fs::write(&path, &text)?;
    match first_fail {
        Some(f) => Err(f),
        None => Ok(Outcome {
            certificate: text,
            files: vec![path],
        }),
    }
}

/// Runs one pipeline. A failure raised before the pipeline could certify anything still
/// replaces its certificate.txt, so `report` never reads a stale PASS.
pub fn run(cmd: Pipeline, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let res = match cmd {
        Pipeline::Construct => cmd_construct(cfg),
        Pipeline::Sweep => cmd_sweep(cfg),
        Pipeline::Kahler => cmd_kahler(cfg),
    };
    if let Err(f) = &res {
        let dir = cfg.out.join(cmd.name());
        let cert = dir.join("certificate.txt");
        let written = format!("status = FAIL\nfailed = {}\nwitness = {}\n", f.code, f.witness);
        let fresh = fs::read_to_string(&cert).is_ok_and(|c| c.contains(&written));
        if !fresh && fs::create_dir_all(&dir).is_ok() {
            let text = kv_text(&[
                kv("pipeline", cmd.name()),
                kv("status", "FAIL"),
                kv("failed", &f.code),
                kv("witness", &f.witness),
            ]);
            let _ = fs::write(cert, text);
        }
    }
    res
}
