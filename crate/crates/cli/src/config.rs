//! Flat `key = value` configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Unknown keys are rejected.
//! Command-line flags are applied after the file, so they win.

use crate::error::{CliError, CliResult};
use grushin_core::carleman::WeightConstants;
use grushin_core::observability::ControlRegion;
use grushin_core::spectral::Part;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// One term `n:l:part:coeff` of an initial field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitTerm {
    pub n: i64,
    pub l: i64,
    pub part: Part,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub region_a: f64,
    pub region_b: f64,
    pub l_max: i64,
    pub n_max: i64,
    /// `0` selects the order from the truncation.
    pub quadrature_order: usize,
    pub horizon: f64,
    pub steps: usize,
    pub epsilons: Vec<f64>,
    pub a_prime: f64,
    pub b_prime: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub s_factor: f64,
    pub output_dir: PathBuf,
    pub initial: Vec<InitTerm>,
    pub control_file: Option<PathBuf>,
    pub mintime_n: Vec<i64>,
    pub mintime_t: Vec<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            region_a: 0.6,
            region_b: 1.2,
            l_max: 40,
            n_max: 8,
            quadrature_order: 0,
            horizon: 1.0,
            steps: 100,
            epsilons: vec![1e-2, 1e-4, 1e-6],
            a_prime: 0.8,
            b_prime: 1.0,
            // Found by `grushin carleman --search` for a = 0.6, b = 1.2, a' = 0.8, b' = 1.0.
            a1: 3.0,
            a2: 1e-6,
            a3: 13.829638557050364,
            s_factor: 1.0,
            output_dir: PathBuf::from("out"),
            initial: vec![InitTerm {
                n: 1,
                l: 1,
                part: Part::Cos,
                coeff: 1.0,
            }],
            control_file: None,
            mintime_n: (1..=10).map(|k| 10 * k).collect(),
            mintime_t: vec![0.6, 1.0],
        }
    }
}

pub const KEYS: &[&str] = &[
    "region.a",
    "region.b",
    "truncation.L",
    "modes.nMax",
    "quadrature.order",
    "time.T",
    "time.steps",
    "hum.epsilonList",
    "carleman.aPrime",
    "carleman.bPrime",
    "carleman.A1",
    "carleman.A2",
    "carleman.A3",
    "carleman.sFactor",
    "output.dir",
    "initial.modes",
    "simulate.control",
    "mintime.nList",
    "mintime.TList",
];

fn bad(key: &str, value: &str) -> CliError {
    CliError::Config(format!("{key}: cannot parse {value:?}"))
}

fn real(key: &str, v: &str) -> CliResult<f64> {
    let x: f64 = v.trim().parse().map_err(|_| bad(key, v))?;
    if !x.is_finite() {
        return Err(bad(key, v));
    }
    Ok(x)
}

fn int(key: &str, v: &str) -> CliResult<i64> {
    v.trim().parse().map_err(|_| bad(key, v))
}

fn list<T>(key: &str, v: &str, f: impl Fn(&str, &str) -> CliResult<T>) -> CliResult<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(key, s))
        .collect()
}

fn fmt_list<T: std::fmt::Debug>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn part_name(p: Part) -> &'static str {
    match p {
        Part::Cos => "cos",
        Part::Sin => "sin",
    }
}

fn init_term(key: &str, v: &str) -> CliResult<InitTerm> {
    let f: Vec<&str> = v.split(':').collect();
    if f.len() != 4 {
        return Err(CliError::Config(format!("{key}: expected n:l:part:coeff, got {v:?}")));
    }
    let part = match f[2] {
        "cos" => Part::Cos,
        "sin" => Part::Sin,
        _ => return Err(bad(key, v)),
    };
    Ok(InitTerm {
        n: int(key, f[0])?,
        l: int(key, f[1])?,
        part,
        coeff: real(key, f[3])?,
    })
}

impl Config {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let v = value.trim();
        match key {
            "region.a" => self.region_a = real(key, v)?,
            "region.b" => self.region_b = real(key, v)?,
            "truncation.L" => self.l_max = int(key, v)?,
            "modes.nMax" => self.n_max = int(key, v)?,
            "quadrature.order" => {
                self.quadrature_order = v.parse().map_err(|_| bad(key, v))?
            }
            "time.T" => self.horizon = real(key, v)?,
            "time.steps" => self.steps = v.parse().map_err(|_| bad(key, v))?,
            "hum.epsilonList" => self.epsilons = list(key, v, real)?,
            "carleman.aPrime" => self.a_prime = real(key, v)?,
            "carleman.bPrime" => self.b_prime = real(key, v)?,
            "carleman.A1" => self.a1 = real(key, v)?,
            "carleman.A2" => self.a2 = real(key, v)?,
            "carleman.A3" => self.a3 = real(key, v)?,
            "carleman.sFactor" => self.s_factor = real(key, v)?,
            "output.dir" => self.output_dir = PathBuf::from(v),
            "initial.modes" => self.initial = list(key, v, init_term)?,
            "simulate.control" => {
                self.control_file = if v.is_empty() { None } else { Some(PathBuf::from(v)) }
            }
            "mintime.nList" => self.mintime_n = list(key, v, int)?,
            "mintime.TList" => self.mintime_t = list(key, v, real)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn parse_str(&mut self, text: &str) -> CliResult<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut c = Self::default();
        c.parse_str(&text)?;
        Ok(c)
    }

    /// Canonical `key=value` pairs in [`KEYS`] order; `output.dir` is excluded
    /// so that the hash depends on the experiment only.
    pub fn canonical(&self) -> Vec<(&'static str, String)> {
        let init = self
            .initial
            .iter()
            .map(|t| format!("{}:{}:{}:{:?}", t.n, t.l, part_name(t.part), t.coeff))
            .collect::<Vec<_>>()
            .join(",");
        vec![
            ("region.a", format!("{:?}", self.region_a)),
            ("region.b", format!("{:?}", self.region_b)),
            ("truncation.L", self.l_max.to_string()),
            ("modes.nMax", self.n_max.to_string()),
            ("quadrature.order", self.quadrature_order.to_string()),
            ("time.T", format!("{:?}", self.horizon)),
            ("time.steps", self.steps.to_string()),
            ("hum.epsilonList", fmt_list(&self.epsilons)),
            ("carleman.aPrime", format!("{:?}", self.a_prime)),
            ("carleman.bPrime", format!("{:?}", self.b_prime)),
            ("carleman.A1", format!("{:?}", self.a1)),
            ("carleman.A2", format!("{:?}", self.a2)),
            ("carleman.A3", format!("{:?}", self.a3)),
            ("carleman.sFactor", format!("{:?}", self.s_factor)),
            ("initial.modes", init),
            (
                "simulate.control",
                self.control_file
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            ),
            ("mintime.nList", fmt_list(&self.mintime_n)),
            ("mintime.TList", fmt_list(&self.mintime_t)),
        ]
    }

    /// SHA-256 of the canonical pairs, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.canonical() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn region(&self) -> CliResult<ControlRegion> {
        if !(self.region_a < self.region_b) {
            return Err(CliError::Config(format!(
                "region needs a < b, got a = {}, b = {}",
                self.region_a, self.region_b
            )));
        }
        ControlRegion::new(self.region_a, self.region_b)
            .map_err(|e| CliError::Config(format!("region: {e}")))
    }

    pub fn weight_constants(&self) -> WeightConstants {
        WeightConstants {
            a1: self.a1,
            a2: self.a2,
            a3: self.a3,
        }
    }

    pub fn order(&self) -> usize {
        if self.quadrature_order == 0 {
            grushin_core::numerics::default_order(self.l_max as usize, self.n_max as usize)
        } else {
            self.quadrature_order
        }
    }

    /// Structural checks shared by every command.
    pub fn validate(&self) -> CliResult<()> {
        if self.n_max < 0 || self.l_max < self.n_max {
            return Err(CliError::Config(format!(
                "need 0 <= modes.nMax <= truncation.L, got {} and {}",
                self.n_max, self.l_max
            )));
        }
        if !(self.horizon > 0.0) {
            return Err(CliError::Config(format!("time.T must be positive, got {}", self.horizon)));
        }
        if self.steps == 0 {
            return Err(CliError::Config("time.steps must be positive".into()));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(CliError::Config("hum.epsilonList entries must be positive".into()));
        }
        if !(self.s_factor >= 1.0) {
            return Err(CliError::Config(format!(
                "carleman.sFactor must be at least 1, got {}",
                self.s_factor
            )));
        }
        for t in &self.initial {
            if t.n < 0 || t.n > self.n_max || t.l < t.n || t.l > self.l_max {
                return Err(CliError::Config(format!(
                    "initial mode n = {}, l = {} outside the truncation",
                    t.n, t.l
                )));
            }
            if t.n == 0 && t.part == Part::Sin {
                return Err(CliError::Config("initial mode n = 0 has no sine part".into()));
            }
        }
        self.region()?;
        Ok(())
    }
}
