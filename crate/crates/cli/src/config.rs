//! Experiment configuration: a strict `key = value` text format.
//!
//! Every key has a default that depends on the subcommand. A config file and
//! command-line flags both go through [`ExperimentConfig::set`], so they share
//! one parser and one set of diagnostics. The canonical text lists every key
//! in a fixed order; its SHA-256 is the config hash embedded in all outputs.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use rotlab::diophantine::continued_fraction;
use rotlab::rotation_algebra::{CoefficientRecord, FourierElement, HamiltonianSpec};
use rotlab::{IntMatrix, GOLDEN, S3, S4, S6};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Cf,
    Dos,
    Dims,
    Transport,
    Bound,
    Frame,
    ThetaZeros,
    LatticeSum,
    Oscillator,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Cf => "cf",
            Command::Dos => "dos",
            Command::Dims => "dims",
            Command::Transport => "transport",
            Command::Bound => "bound",
            Command::Frame => "frame",
            Command::ThetaZeros => "theta-zeros",
            Command::LatticeSum => "lattice-sum",
            Command::Oscillator => "oscillator",
        }
    }

    /// Extension of the primary artifact.
    pub fn extension(self) -> &'static str {
        match self {
            Command::Cf | Command::Dos | Command::Dims | Command::Transport | Command::LatticeSum => "csv",
            _ => "json",
        }
    }
}

/// One rejected field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// All field errors of one config, reported together.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.as_slice() {
            [one] => write!(f, "invalid config: {one}"),
            many => {
                write!(f, "invalid config ({} problems):", many.len())?;
                many.iter().try_for_each(|e| write!(f, "\n  {e}"))
            }
        }
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelChoice {
    Preset(String),
    Custom(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rep {
    Chain,
    Lattice,
    Weyl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeKind {
    Gaussian,
    Mehler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorKind {
    Gaussian,
    Tracial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub model: ModelChoice,
    /// `golden`, `sqrt2` or a decimal in (0, 1).
    pub alpha: String,
    /// Convergent index k: θ/2π = offset + p_k/q_k.
    pub depth: usize,
    pub offset: u64,
    /// Partial quotients for `cf`, series cutoff for `theta-zeros`.
    pub terms: usize,
    /// Chain sites (DOS), half-width (transport, frame bounds).
    pub sites: usize,
    pub n_omega: usize,
    pub ring: bool,
    pub k_points: usize,
    /// Ring length in periods q for the bound's density of states.
    pub ring_periods: usize,
    pub qs: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub t_ratio: f64,
    pub dim_t_min: f64,
    pub dim_t_max: f64,
    pub delta: Option<(f64, f64)>,
    pub bins: usize,
    pub indicator_kernel: bool,
    pub gaussian_average: bool,
    pub rep: Rep,
    pub symmetry: IntMatrix,
    pub refinement: usize,
    pub cells: usize,
    pub vector: VectorKind,
    pub lattice: LatticeKind,
    /// Not part of the hash: where artifacts go when `--out` is absent.
    pub output_dir: Option<PathBuf>,
    /// Not part of the hash.
    pub cache_dir: Option<PathBuf>,
    explicit: BTreeSet<String>,
}

/// Keys in canonical order. `output_dir` and `cache_dir` come last and are
/// left out of the hash.
pub const KEYS: [&str; 29] = [
    "command",
    "model",
    "alpha",
    "depth",
    "offset",
    "terms",
    "sites",
    "n_omega",
    "boundary",
    "k_points",
    "ring_periods",
    "qs",
    "t_min",
    "t_max",
    "t_ratio",
    "dim_t_min",
    "dim_t_max",
    "delta",
    "bins",
    "kernel",
    "averaging",
    "rep",
    "symmetry",
    "refinement",
    "cells",
    "vector",
    "lattice",
    "output_dir",
    "cache_dir",
];

const UNHASHED: [&str; 2] = ["output_dir", "cache_dir"];

fn err(field: &str, message: impl Into<String>) -> FieldError {
    FieldError { field: field.to_string(), message: message.into() }
}

fn positive_int(field: &str, v: &str) -> Result<usize, FieldError> {
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(err(field, format!("expected a positive integer, got '{v}'"))),
    }
}

fn positive_real(field: &str, v: &str) -> Result<f64, FieldError> {
    match v.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(err(field, format!("expected a positive number, got '{v}'"))),
    }
}

fn real_list(field: &str, v: &str) -> Result<Vec<f64>, FieldError> {
    let items: Result<Vec<f64>, _> = v.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match items {
        Ok(xs) if !xs.is_empty() && xs.iter().all(|x| x.is_finite()) => Ok(xs),
        _ => Err(err(field, format!("expected a comma-separated list of numbers, got '{v}'"))),
    }
}

fn symmetry_name(s: &IntMatrix) -> &'static str {
    if *s == S3 {
        "S3"
    } else if *s == S6 {
        "S6"
    } else {
        "S4"
    }
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn defaults(command: Command) -> Self {
        let mut c = Self {
            command,
            model: ModelChoice::Preset("harper4".into()),
            alpha: "golden".into(),
            depth: 14,
            offset: 0,
            terms: 12,
            sites: 2000,
            n_omega: 64,
            ring: false,
            k_points: 4,
            ring_periods: 1,
            qs: vec![2.0],
            t_min: 2.0,
            t_max: 64.0,
            t_ratio: 2f64.powf(0.25),
            dim_t_min: 10.0,
            dim_t_max: 1000.0,
            delta: None,
            bins: 64,
            indicator_kernel: false,
            gaussian_average: false,
            rep: Rep::Chain,
            symmetry: S4,
            refinement: 448,
            cells: 84,
            vector: VectorKind::Gaussian,
            lattice: LatticeKind::Gaussian,
            output_dir: None,
            cache_dir: None,
            explicit: BTreeSet::new(),
        };
        match command {
            Command::Cf | Command::Dos | Command::Oscillator => {}
            Command::Dims => {
                c.sites = 610;
                c.n_omega = 16;
                c.ring = true;
                c.qs = vec![-1.0, 0.25, 0.5, 2.0];
                c.t_min = 10.0;
                c.t_max = 1000.0;
                c.t_ratio = 10f64.powf(0.125);
            }
            Command::Transport => {
                c.offset = 1;
                c.sites = 296;
                c.n_omega = 16;
            }
            Command::Bound => {
                c.offset = 1;
                c.qs = vec![0.25, 0.5, 0.75];
                c.sites = 1064;
                c.n_omega = 16;
                c.t_max = 256.0;
            }
            Command::Frame => {
                c.depth = 9;
                c.offset = 1;
                c.sites = 128;
                c.n_omega = 32;
                c.refinement = 16;
                c.cells = 10;
            }
            Command::ThetaZeros => c.terms = 30,
            Command::LatticeSum => {
                c.offset = 1;
                c.cells = 8;
                c.t_min = 1e-4;
                c.t_max = 1e-1;
                c.t_ratio = 10f64.powf(0.25);
            }
        }
        c
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), FieldError> {
        let v = value.trim();
        match key {
            "command" => {
                if v != self.command.name() {
                    return Err(err(key, format!("config is for '{v}', not '{}'", self.command.name())));
                }
            }
            "model" => {
                self.model = if let Some(path) = v.strip_prefix("custom:") {
                    if path.is_empty() {
                        return Err(err(key, "custom model needs a file path"));
                    }
                    ModelChoice::Custom(PathBuf::from(path))
                } else {
                    HamiltonianSpec::preset(v).map_err(|e| err(key, e.to_string()))?;
                    ModelChoice::Preset(v.to_string())
                }
            }
            "alpha" => {
                match v {
                    "golden" | "sqrt2" => {}
                    _ => match v.parse::<f64>() {
                        Ok(x) if x > 0.0 && x < 1.0 => {}
                        _ => return Err(err(key, format!("expected golden, sqrt2 or a number in (0, 1), got '{v}'"))),
                    },
                }
                self.alpha = v.to_string();
            }
            "depth" => self.depth = positive_int(key, v)?,
            "offset" => self.offset = v.parse().map_err(|_| err(key, format!("expected a nonnegative integer, got '{v}'")))?,
            "terms" => self.terms = positive_int(key, v)?,
            "sites" => self.sites = positive_int(key, v)?,
            "n_omega" => self.n_omega = positive_int(key, v)?,
            "boundary" => {
                self.ring = match v {
                    "open" => false,
                    "ring" => true,
                    _ => return Err(err(key, format!("expected open or ring, got '{v}'"))),
                }
            }
            "k_points" => self.k_points = positive_int(key, v)?,
            "ring_periods" => self.ring_periods = positive_int(key, v)?,
            "qs" => self.qs = real_list(key, v)?,
            "t_min" => self.t_min = positive_real(key, v)?,
            "t_max" => self.t_max = positive_real(key, v)?,
            "t_ratio" => {
                let r = positive_real(key, v)?;
                if r <= 1.0 {
                    return Err(err(key, format!("ratio must exceed 1, got {r}")));
                }
                self.t_ratio = r;
            }
            "dim_t_min" => self.dim_t_min = positive_real(key, v)?,
            "dim_t_max" => self.dim_t_max = positive_real(key, v)?,
            "delta" => {
                self.delta = if v == "all" {
                    None
                } else {
                    match real_list(key, v)?.as_slice() {
                        [lo, hi] if lo < hi => Some((*lo, *hi)),
                        _ => return Err(err(key, format!("expected 'all' or 'lo,hi' with lo < hi, got '{v}'"))),
                    }
                }
            }
            "bins" => self.bins = positive_int(key, v)?,
            "kernel" => {
                self.indicator_kernel = match v {
                    "gaussian" => false,
                    "indicator" => true,
                    _ => return Err(err(key, format!("expected gaussian or indicator, got '{v}'"))),
                }
            }
            "averaging" => {
                self.gaussian_average = match v {
                    "cesaro" => false,
                    "gaussian" => true,
                    _ => return Err(err(key, format!("expected cesaro or gaussian, got '{v}'"))),
                }
            }
            "rep" => {
                self.rep = match v {
                    "1d" => Rep::Chain,
                    "2d" => Rep::Lattice,
                    "weyl" => Rep::Weyl,
                    _ => return Err(err(key, format!("expected 1d, 2d or weyl, got '{v}'"))),
                }
            }
            "symmetry" => {
                self.symmetry = match v {
                    "S3" | "s3" => S3,
                    "S4" | "s4" => S4,
                    "S6" | "s6" => S6,
                    _ => return Err(err(key, format!("expected S3, S4 or S6, got '{v}'"))),
                }
            }
            "refinement" => self.refinement = positive_int(key, v)?,
            "cells" => self.cells = positive_int(key, v)?,
            "vector" => {
                self.vector = match v {
                    "gaussian" => VectorKind::Gaussian,
                    "tracial" => VectorKind::Tracial,
                    _ => return Err(err(key, format!("expected gaussian or tracial, got '{v}'"))),
                }
            }
            "lattice" => {
                self.lattice = match v {
                    "gaussian" => LatticeKind::Gaussian,
                    "mehler" => LatticeKind::Mehler,
                    _ => return Err(err(key, format!("expected gaussian or mehler, got '{v}'"))),
                }
            }
            "output_dir" => self.output_dir = Some(PathBuf::from(v)),
            "cache_dir" => self.cache_dir = Some(PathBuf::from(v)),
            _ => return Err(err(key, "unknown key")),
        }
        self.explicit.insert(key.to_string());
        Ok(())
    }

    /// Applies a config file body. Lines are `key = value`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigErrors> {
        let mut errors = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                errors.push(err(&format!("line {}", i + 1), format!("expected 'key = value', got '{line}'")));
                continue;
            };
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                errors.push(err(k, format!("duplicate key on line {}", i + 1)));
                continue;
            }
            if let Err(e) = self.set(k, v) {
                errors.push(FieldError { field: e.field, message: format!("{} (line {})", e.message, i + 1) });
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(errors))
        }
    }

    /// Applies `(key, value)` pairs, collecting every error.
    pub fn apply_pairs<'a, I: IntoIterator<Item = (&'a str, String)>>(&mut self, pairs: I) -> Result<(), ConfigErrors> {
        let errors: Vec<FieldError> = pairs.into_iter().filter_map(|(k, v)| self.set(k, &v).err()).collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(errors))
        }
    }

    pub fn was_set(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    /// Fills defaults that depend on other keys, then checks cross-field rules.
    pub fn finalize(&mut self) -> Result<(), ConfigErrors> {
        if self.command == Command::LatticeSum && self.lattice == LatticeKind::Mehler {
            if !self.was_set("t_min") {
                self.t_min = 1e-3;
            }
            if !self.was_set("t_max") {
                self.t_max = 1.0;
            }
        }
        let mut errors = Vec::new();
        if self.t_min >= self.t_max {
            errors.push(err("t_min", format!("t_min = {} must be below t_max = {}", self.t_min, self.t_max)));
        }
        if self.dim_t_min >= self.dim_t_max {
            errors.push(err("dim_t_min", format!("dim_t_min = {} must be below dim_t_max = {}", self.dim_t_min, self.dim_t_max)));
        }
        match self.command {
            Command::Transport if self.qs.iter().any(|q| !(*q > 0.0 && *q <= 2.0)) => {
                errors.push(err("qs", "transport moments need q in (0, 2]"));
            }
            Command::Bound if self.qs.iter().any(|q| !(*q > 0.0 && *q < 1.0)) => {
                errors.push(err("qs", "the bound compares q in (0, 1)"));
            }
            Command::Dims if self.qs.contains(&1.0) => {
                errors.push(err("qs", "q = 1 is not supported by the dimension estimator"));
            }
            _ => {}
        }
        if let ModelChoice::Custom(path) = &self.model {
            if let Err(e) = self.custom_records(path) {
                errors.push(err("model", e));
            }
        }
        if let Err(e) = self.alpha_value() {
            errors.push(err("alpha", e));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(errors))
        }
    }

    pub fn alpha_value(&self) -> Result<f64, String> {
        match self.alpha.as_str() {
            "golden" => Ok(GOLDEN),
            "sqrt2" => Ok(2f64.sqrt() - 1.0),
            other => other.parse::<f64>().map_err(|e| e.to_string()),
        }
    }

    /// `θ/2π = (offset·q + p)/q` with `p/q` the depth-th convergent of α.
    pub fn ratio(&self) -> Result<(u64, u64), String> {
        let alpha = self.alpha_value()?;
        let cf = continued_fraction(alpha, self.depth).map_err(|e| e.to_string())?;
        if cf.len() < self.depth {
            return Err(format!("alpha = {alpha} has only {} convergents, depth {} requested", cf.len(), self.depth));
        }
        let (p, q) = cf.convergents[self.depth - 1];
        let whole = self.offset.checked_mul(q).and_then(|x| x.checked_add(p)).ok_or("ratio overflows")?;
        Ok((whole, q))
    }

    pub fn theta(&self) -> Result<f64, String> {
        let (p, q) = self.ratio()?;
        Ok(std::f64::consts::TAU * p as f64 / q as f64)
    }

    fn custom_records(&self, path: &PathBuf) -> Result<Vec<CoefficientRecord>, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let records: Vec<CoefficientRecord> =
            serde_json::from_str(&text).map_err(|e| format!("{} is not a coefficient record list: {e}", path.display()))?;
        FourierElement::from_records(&records).map_err(|e| e.to_string())?;
        Ok(records)
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianSpec, String> {
        match &self.model {
            ModelChoice::Preset(name) => HamiltonianSpec::preset(name).map_err(|e| e.to_string()),
            ModelChoice::Custom(path) => {
                let records = self.custom_records(path)?;
                let element = FourierElement::from_records(&records).map_err(|e| e.to_string())?;
                Ok(HamiltonianSpec::custom(&format!("custom:{}", path.display()), &element))
            }
        }
    }

    fn value_text(&self, key: &str) -> String {
        match key {
            "command" => self.command.name().into(),
            "model" => match &self.model {
                ModelChoice::Preset(n) => n.clone(),
                ModelChoice::Custom(p) => format!("custom:{}", p.display()),
            },
            "alpha" => self.alpha.clone(),
            "depth" => self.depth.to_string(),
            "offset" => self.offset.to_string(),
            "terms" => self.terms.to_string(),
            "sites" => self.sites.to_string(),
            "n_omega" => self.n_omega.to_string(),
            "boundary" => if self.ring { "ring" } else { "open" }.into(),
            "k_points" => self.k_points.to_string(),
            "ring_periods" => self.ring_periods.to_string(),
            "qs" => fmt_list(&self.qs),
            "t_min" => self.t_min.to_string(),
            "t_max" => self.t_max.to_string(),
            "t_ratio" => self.t_ratio.to_string(),
            "dim_t_min" => self.dim_t_min.to_string(),
            "dim_t_max" => self.dim_t_max.to_string(),
            "delta" => self.delta.map_or("all".into(), |(a, b)| format!("{a},{b}")),
            "bins" => self.bins.to_string(),
            "kernel" => if self.indicator_kernel { "indicator" } else { "gaussian" }.into(),
            "averaging" => if self.gaussian_average { "gaussian" } else { "cesaro" }.into(),
            "rep" => match self.rep {
                Rep::Chain => "1d",
                Rep::Lattice => "2d",
                Rep::Weyl => "weyl",
            }
            .into(),
            "symmetry" => symmetry_name(&self.symmetry).into(),
            "refinement" => self.refinement.to_string(),
            "cells" => self.cells.to_string(),
            "vector" => match self.vector {
                VectorKind::Gaussian => "gaussian",
                VectorKind::Tracial => "tracial",
            }
            .into(),
            "lattice" => match self.lattice {
                LatticeKind::Gaussian => "gaussian",
                LatticeKind::Mehler => "mehler",
            }
            .into(),
            "output_dir" => self.output_dir.as_ref().map_or(String::new(), |p| p.display().to_string()),
            "cache_dir" => self.cache_dir.as_ref().map_or(String::new(), |p| p.display().to_string()),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Every key in canonical order; floats in shortest round-trip form.
    /// Directory keys are written only when set.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let v = self.value_text(key);
            if UNHASHED.contains(&key) && v.is_empty() {
                continue;
            }
            out.push_str(&format!("{key} = {v}\n"));
        }
        out
    }

    /// Hex SHA-256 of the hashed keys, plus the coefficient records of a custom model.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for key in KEYS.iter().filter(|k| !UNHASHED.contains(k)) {
            h.update(format!("{key} = {}\n", self.value_text(key)));
        }
        if let ModelChoice::Custom(path) = &self.model {
            if let Ok(records) = self.custom_records(path) {
                h.update(serde_json::to_vec(&records).expect("records serialize"));
            }
        }
        hex::encode(h.finalize())
    }

    /// `(key, value)` pairs in canonical order, for JSON headers.
    pub fn entries(&self) -> Vec<(String, String)> {
        KEYS.iter()
            .map(|k| (k.to_string(), self.value_text(k)))
            .filter(|(k, v)| !(UNHASHED.contains(&k.as_str()) && v.is_empty()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut a = ExperimentConfig::defaults(Command::Dims);
        a.apply_text("qs = -1, 0.5\nt_ratio = 1.3 # comment\nboundary = open\n").unwrap();
        let mut b = ExperimentConfig::defaults(Command::Dims);
        b.apply_text(&a.to_text()).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn every_bad_field_is_reported() {
        let mut c = ExperimentConfig::defaults(Command::Dos);
        let e = c.apply_text("sites = -3\nfoo = 1\nkernel = box\nsites = 5\nnot a pair\n").unwrap_err();
        let fields: Vec<&str> = e.0.iter().map(|f| f.field.as_str()).collect();
        assert_eq!(fields, ["sites", "foo", "kernel", "sites", "line 5"]);
    }

    #[test]
    fn directories_do_not_change_the_hash() {
        let a = ExperimentConfig::defaults(Command::Dos);
        let mut b = a.clone();
        b.set("cache_dir", "/tmp/x").unwrap();
        b.set("output_dir", "/tmp/y").unwrap();
        assert_eq!(a.hash(), b.hash());
        b.set("sites", "2001").unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn golden_depth_fourteen() {
        let c = ExperimentConfig::defaults(Command::Bound);
        assert_eq!(c.ratio().unwrap(), (987, 610));
        let mut d = ExperimentConfig::defaults(Command::Dos);
        assert_eq!(d.ratio().unwrap(), (377, 610));
        d.set("depth", "90").unwrap();
        assert!(d.ratio().is_err());
        assert!(d.set("command", "cf").is_err());
    }

    #[test]
    fn cross_field_rules() {
        let mut c = ExperimentConfig::defaults(Command::Bound);
        c.set("qs", "0.5,1.5").unwrap();
        c.set("t_min", "500").unwrap();
        let e = c.finalize().unwrap_err();
        assert_eq!(e.0.len(), 2);
        let mut m = ExperimentConfig::defaults(Command::LatticeSum);
        m.set("lattice", "mehler").unwrap();
        m.finalize().unwrap();
        assert_eq!((m.t_min, m.t_max), (1e-3, 1.0));
    }
}
