use std::path::PathBuf;

use crate::error::{CrError, Result};
use crate::family::{DEFAULT_DELTA, DEFAULT_RADIUS};
use crate::kahler::KahlerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Construct,
    Sweep,
    Kahler,
}

impl Pipeline {
    pub fn name(&self) -> &'static str {
        match self {
            Pipeline::Construct => "construct",
            Pipeline::Sweep => "sweep",
            Pipeline::Kahler => "kahler",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "construct" => Ok(Pipeline::Construct),
            "sweep" => Ok(Pipeline::Sweep),
            "kahler" => Ok(Pipeline::Kahler),
            _ => Err(CrError::Config(format!("unknown pipeline {s}"))),
        }
    }
}

/// Run configuration. The file format is one `key = value` per line, `#` starts a comment.
///
/// Keys: `L`, `t`, `delta`, `s_samples`, `radius`, `seed`, `scan_pairs`, `out`, `pipeline`
/// (comma list used by `report`), `kahler_scale`, `kahler_k`, `probes` (comma list, may be
/// empty), `synthetic_fail`, `quotient_L`.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub l: usize,
    /// family parameter; None means 0.1 / (2c)
    pub t: Option<f64>,
    pub delta: f64,
    pub s_samples: usize,
    pub radius: f64,
    pub seed: u64,
    pub scan_pairs: usize,
    pub out: PathBuf,
    pub pipelines: Vec<Pipeline>,
    pub kahler: KahlerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            l: 24,
            t: None,
            delta: DEFAULT_DELTA,
            s_samples: 41,
            radius: DEFAULT_RADIUS,
            seed: 7,
            scan_pairs: 400,
            out: PathBuf::from("out"),
            pipelines: vec![Pipeline::Construct, Pipeline::Sweep, Pipeline::Kahler],
            kahler: KahlerConfig::default(),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| CrError::Config(format!("{key}: cannot parse {v:?}")))
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "L" => self.l = num(key, v)?,
            "t" => self.t = if v == "auto" { None } else { Some(num(key, v)?) },
            "delta" => self.delta = num(key, v)?,
            "s_samples" => self.s_samples = num(key, v)?,
            "radius" => self.radius = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "scan_pairs" => self.scan_pairs = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "pipeline" => self.pipelines = list(v).iter().map(|s| Pipeline::parse(s)).collect::<Result<_>>()?,
            "kahler_scale" => self.kahler.scale = num(key, v)?,
            "kahler_k" => self.kahler.k = num(key, v)?,
            "probes" => self.kahler.probes = list(v),
            "synthetic_fail" => self.kahler.synthetic_fail = num(key, v)?,
            "quotient_L" => self.kahler.quotient_l = num(key, v)?,
            _ => return Err(CrError::Config(format!("unknown key {key}"))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CrError::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CrError::Config(m));
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        if self.s_samples < 2 {
            return bad(format!("s_samples must be at least 2, got {}", self.s_samples));
        }
        if !(self.radius > 0.0 && self.radius < std::f64::consts::PI) {
            return bad(format!("radius must lie in (0, π), got {}", self.radius));
        }
        if let Some(t) = self.t {
            if !t.is_finite() {
                return bad("t must be finite".into());
            }
        }
        if self.scan_pairs == 0 {
            return bad("scan_pairs must be positive".into());
        }
        if !(self.kahler.scale > 0.0 && self.kahler.scale.is_finite()) {
            return bad(format!("kahler_scale must be positive, got {}", self.kahler.scale));
        }
        if self.kahler.quotient_l < 2 {
            return bad("quotient_L must be at least 2".into());
        }
        Ok(())
    }

    /// Canonical text form of every parameter except the output directory;
    /// `parse(to_kv())` reproduces them.
    pub fn to_kv(&self) -> String {
        let pl: Vec<&str> = self.pipelines.iter().map(|p| p.name()).collect();
        let t = self.t.map(|t| format!("{t:e}")).unwrap_or_else(|| "auto".into());
        [
            format!("L = {}", self.l),
            format!("t = {t}"),
            format!("delta = {:e}", self.delta),
            format!("s_samples = {}", self.s_samples),
            format!("radius = {:e}", self.radius),
            format!("seed = {}", self.seed),
            format!("scan_pairs = {}", self.scan_pairs),
            format!("pipeline = {}", pl.join(",")),
            format!("kahler_scale = {:e}", self.kahler.scale),
            format!("kahler_k = {}", self.kahler.k),
            format!("probes = {}", self.kahler.probes.join(",")),
            format!("synthetic_fail = {}", self.kahler.synthetic_fail),
            format!("quotient_L = {}", self.kahler.quotient_l),
        ]
        .join("\n")
            + "\n"
    }
}
