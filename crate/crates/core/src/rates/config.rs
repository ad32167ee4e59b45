//! Experiment configuration: a flat `key = value` document, presets, validation.

use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::{COEFFICIENT_NAMES, RHS_NAMES};
use crate::epssolve::{Backend, Epsilon, Preconditioner};
use crate::error::{Error, Result};

/// Whether an object comes from its closed form or is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    ClosedForm,
    Numeric,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::ClosedForm => "closed-form",
            Source::Numeric => "numeric",
        })
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed-form" => Ok(Source::ClosedForm),
            "numeric" => Ok(Source::Numeric),
            _ => Err(Error::UnknownName { kind: "source", name: s.into(), valid: "closed-form, numeric".into() }),
        }
    }
}

/// Per-object closed-form/numeric toggles.
///
/// `v` also selects the c-tensor: numeric correctors come with the c-tensor of
/// the same discrete cell solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Oracles {
    pub r: Source,
    pub v: Source,
    pub u: Source,
    pub z: Source,
}

impl Default for Oracles {
    fn default() -> Self {
        Oracles { r: Source::ClosedForm, v: Source::Numeric, u: Source::ClosedForm, z: Source::Numeric }
    }
}

/// The measured error quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    /// sup |u^ε − u|.
    PlainLinf,
    /// sup |u^ε − u + 2εz|.
    E0Inf,
    /// ‖u^ε − u‖ in W^{1,p}.
    PlainW1p,
    /// ‖∇u^ε − ∇u + 2ε∇z − ε Σ ∇_y v^{ij}(·/ε) ∂²_{ij}u‖_{L^p}.
    E1p,
    /// ‖D²u^ε − D²u − Σ D²_y v^{ij}(·/ε) ∂²_{ij}u‖_{L^p} on the interior strip.
    E2p,
    /// ε‖θ^ε‖_{W^{1,2}}.
    ThetaW12,
}

impl Functional {
    pub const ALL: [Functional; 6] = [
        Functional::PlainLinf,
        Functional::E0Inf,
        Functional::PlainW1p,
        Functional::E1p,
        Functional::E2p,
        Functional::ThetaW12,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Functional::PlainLinf => "plain-linf",
            Functional::E0Inf => "e0-inf",
            Functional::PlainW1p => "plain-w1p",
            Functional::E1p => "e1p",
            Functional::E2p => "e2p",
            Functional::ThetaW12 => "theta-w12",
        }
    }

    /// True if the functional is evaluated for every p of the config.
    pub fn per_p(self) -> bool {
        matches!(self, Functional::PlainW1p | Functional::E1p | Functional::E2p)
    }

    /// The exponent the theory predicts, given p.
    pub fn expected_slope(self, p: Option<f64>, c_good: bool) -> f64 {
        match self {
            Functional::PlainLinf if c_good => 2.0,
            Functional::PlainLinf => 1.0,
            Functional::E0Inf => 2.0,
            Functional::PlainW1p => 1.0,
            Functional::E1p => 1.0 + 1.0 / p.unwrap_or(2.0),
            Functional::E2p => 1.0 / p.unwrap_or(2.0),
            Functional::ThetaW12 => 0.5,
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Functional::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| Error::UnknownName {
            kind: "functional",
            name: s.into(),
            valid: Functional::ALL.map(|f| f.name()).join(", "),
        })
    }
}

/// One ε sweep for one coefficient and right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    /// Builtin coefficient name, `constant:a11,a12,a22`, or a path to a sampled matrix field.
    pub coefficient: String,
    pub rhs: String,
    pub backend: Backend,
    pub preconditioner: Preconditioner,
    pub epsilons: Vec<Epsilon>,
    pub ps: Vec<f64>,
    /// M = m_rule / ε.
    pub m_rule: usize,
    /// Torus resolution of numeric cell objects; defaults to m_rule so that
    /// torus nodes coincide with the oscillation lattice of every grid.
    pub cell_n: Option<usize>,
    /// A numeric u is computed on the smallest multiple of M that is at least this.
    pub u_grid_min: usize,
    /// Slopes are fitted on this many smallest ε.
    pub fit_points: usize,
    pub functionals: Vec<Functional>,
    pub oracles: Oracles,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub seed: u64,
    #[serde(skip)]
    pub jobs: Option<usize>,
}

/// Default ε sweep, as reciprocals.
pub const DEFAULT_SWEEP: [u32; 8] = [5, 10, 20, 40, 64, 80, 128, 160];

pub const PRESET_NAMES: [&str; 6] = ["figure-1", "figure-2", "figure-3", "figure-4", "figure-5", "boundary-corrector"];

const KEYS: [&str; 18] = [
    "name",
    "coefficient",
    "rhs",
    "backend",
    "preconditioner",
    "epsilons",
    "ps",
    "m_rule",
    "cell_n",
    "u_grid_min",
    "fit_points",
    "functionals",
    "oracle.r",
    "oracle.v",
    "oracle.u",
    "oracle.z",
    "output",
    "seed",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "custom".into(),
            coefficient: "cbad".into(),
            rhs: "sinsin".into(),
            backend: Backend::FdNondiv,
            preconditioner: Preconditioner::CordesFft,
            epsilons: DEFAULT_SWEEP.iter().map(|&k| Epsilon::reciprocal(k).expect("nonzero")).collect(),
            ps: vec![2.0, 3.0, 4.0, 5.0],
            m_rule: 16,
            cell_n: None,
            u_grid_min: 1024,
            fit_points: 4,
            functionals: vec![Functional::PlainLinf, Functional::E0Inf],
            oracles: Oracles::default(),
            output: None,
            seed: 0,
            jobs: None,
        }
    }
}

fn parse_err(key: &str, message: impl Into<String>) -> Error {
    Error::Parse { context: format!("config key '{key}'"), message: message.into() }
}

fn list<T: FromStr<Err = Error>>(v: &str) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
}

fn number<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| parse_err(key, format!("'{v}' is not a valid number")))
}

impl ExperimentConfig {
    /// Parses a `key = value` document over the defaults. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                context: format!("config line {}", n + 1),
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            c.set(k.trim(), v.trim())?;
        }
        Ok(c)
    }

    /// Sets one key; the same keys are accepted from files and command-line flags.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "name" => self.name = v.into(),
            "coefficient" => self.coefficient = v.into(),
            "rhs" => self.rhs = v.into(),
            "backend" => self.backend = v.parse()?,
            "preconditioner" => self.preconditioner = v.parse()?,
            "epsilons" => self.epsilons = list(v)?,
            "ps" => {
                self.ps = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| number::<f64>(key, s))
                    .collect::<Result<_>>()?
            }
            "m_rule" => self.m_rule = number(key, v)?,
            "cell_n" => self.cell_n = if v == "auto" { None } else { Some(number(key, v)?) },
            "u_grid_min" => self.u_grid_min = number(key, v)?,
            "fit_points" => self.fit_points = number(key, v)?,
            "functionals" => self.functionals = list(v)?,
            "oracle.r" => self.oracles.r = v.parse()?,
            "oracle.v" => self.oracles.v = v.parse()?,
            "oracle.u" => self.oracles.u = v.parse()?,
            "oracle.z" => self.oracles.z = v.parse()?,
            "output" => self.output = Some(PathBuf::from(v)),
            "seed" => self.seed = number(key, v)?,
            _ => {
                return Err(Error::UnknownName { kind: "config key", name: key.into(), valid: KEYS.join(", ") })
            }
        }
        Ok(())
    }

    /// The document [`from_text`](Self::from_text) reads back to this config.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("string write");
        kv("name", self.name.clone());
        kv("coefficient", self.coefficient.clone());
        kv("rhs", self.rhs.clone());
        kv("backend", self.backend.to_string());
        kv("preconditioner", self.preconditioner.to_string());
        kv("epsilons", join(self.epsilons.iter().map(|e| e.to_string()).collect()));
        kv("ps", join(self.ps.iter().map(|p| p.to_string()).collect()));
        kv("m_rule", self.m_rule.to_string());
        kv("cell_n", self.cell_n.map_or("auto".into(), |n| n.to_string()));
        kv("u_grid_min", self.u_grid_min.to_string());
        kv("fit_points", self.fit_points.to_string());
        kv("functionals", join(self.functionals.iter().map(|f| f.to_string()).collect()));
        kv("oracle.r", self.oracles.r.to_string());
        kv("oracle.v", self.oracles.v.to_string());
        kv("oracle.u", self.oracles.u.to_string());
        kv("oracle.z", self.oracles.z.to_string());
        if let Some(o) = &self.output {
            kv("output", o.display().to_string());
        }
        kv("seed", self.seed.to_string());
        s
    }

    /// Torus resolution used for numeric cell objects.
    pub fn cell_resolution(&self) -> usize {
        self.cell_n.unwrap_or(self.m_rule)
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::Config("the epsilon list is empty".into()));
        }
        if self.functionals.is_empty() {
            return Err(Error::Config("no functionals requested".into()));
        }
        let mut ks: Vec<u32> = self.epsilons.iter().map(|e| e.k()).collect();
        ks.sort_unstable();
        if ks.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("the epsilon list contains duplicates".into()));
        }
        if self.m_rule < crate::epssolve::CELLS_PER_PERIOD {
            return Err(Error::Config(format!(
                "m_rule = {} is below the resolution rule of {} cells per period",
                self.m_rule,
                crate::epssolve::CELLS_PER_PERIOD
            )));
        }
        let n = self.cell_resolution();
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidResolution(n));
        }
        if self.functionals.iter().any(|f| f.per_p()) {
            if self.ps.is_empty() {
                return Err(Error::Config("no p values given".into()));
            }
            if let Some(p) = self.ps.iter().find(|p| !(**p >= 1.0 && p.is_finite())) {
                return Err(Error::Config(format!("p = {p} must be finite and at least 1")));
            }
        }
        if self.fit_points < 3 {
            return Err(Error::Config(format!("fit_points = {} but a fit needs at least 3", self.fit_points)));
        }
        if !RHS_NAMES.contains(&self.rhs.as_str()) {
            return Err(Error::UnknownName { kind: "right-hand side", name: self.rhs.clone(), valid: RHS_NAMES.join(", ") });
        }
        let is_path = std::path::Path::new(&self.coefficient).is_file();
        if !is_path && !COEFFICIENT_NAMES.contains(&self.coefficient.as_str()) && !self.coefficient.starts_with("constant:") {
            return Err(Error::UnknownName {
                kind: "coefficient",
                name: self.coefficient.clone(),
                valid: format!("{}, constant:a11,a12,a22, or a path to a sampled field", COEFFICIENT_NAMES.join(", ")),
            });
        }
        Ok(())
    }
}

fn preset_base(name: &str, coefficient: &str, rhs: &str, functionals: &[Functional]) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        coefficient: coefficient.into(),
        rhs: rhs.into(),
        functionals: functionals.to_vec(),
        ..ExperimentConfig::default()
    }
}

/// The runs behind a named preset.
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    use Functional::*;
    let runs = match name {
        "figure-1" => vec![preset_base("figure-1", "cbad", "sinsin", &[PlainLinf, E0Inf])],
        "figure-2" => vec![preset_base("figure-2", "cbad", "poly", &[E1p])],
        "figure-3" => vec![preset_base("figure-3", "cbad", "poly", &[E2p])],
        "figure-4" => vec![
            preset_base("figure-4-cbad", "cbad", "poly", &[PlainLinf, E0Inf]),
            preset_base("figure-4-cgood", "cgood", "poly", &[PlainLinf]),
        ],
        "figure-5" => {
            let numeric_u = Oracles { u: Source::Numeric, ..Oracles::default() };
            vec![
                ExperimentConfig { oracles: numeric_u, ..preset_base("figure-5-cbad", "cbad", "cubic-sine", &[PlainLinf, E0Inf]) },
                ExperimentConfig { oracles: numeric_u, ..preset_base("figure-5-cgood", "cgood", "cubic-sine", &[PlainLinf]) },
            ]
        }
        "boundary-corrector" => vec![preset_base("boundary-corrector", "cbad", "poly", &[ThetaW12])],
        _ => {
            return Err(Error::UnknownName { kind: "preset", name: name.into(), valid: PRESET_NAMES.join(", ") })
        }
    };
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        for name in PRESET_NAMES {
            for c in preset(name).unwrap() {
                c.validate().unwrap();
                let back = ExperimentConfig::from_text(&c.to_text()).unwrap();
                assert_eq!(back, c);
            }
        }
    }

    #[test]
    fn parses_flat_document() {
        let c = ExperimentConfig::from_text(
            "# sweep\ncoefficient = cgood\nrhs = poly\nepsilons = 1/4, 0.125\nps = 2, 4\nfunctionals = e1p, e2p\noracle.z = closed-form\n",
        )
        .unwrap();
        assert_eq!(c.coefficient, "cgood");
        assert_eq!(c.epsilons.iter().map(|e| e.k()).collect::<Vec<_>>(), vec![4, 8]);
        assert_eq!(c.ps, vec![2.0, 4.0]);
        assert_eq!(c.functionals, vec![Functional::E1p, Functional::E2p]);
        assert_eq!(c.oracles.z, Source::ClosedForm);
    }

    #[test]
    fn rejections_list_valid_choices() {
        let e = ExperimentConfig::from_text("coefficent = cbad").unwrap_err();
        assert!(e.to_string().contains("coefficient"), "{e}");
        let e = ExperimentConfig::from_text("functionals = e3p").unwrap_err();
        assert!(e.to_string().contains("e1p"), "{e}");
        assert!(ExperimentConfig::from_text("epsilons = 0.3").is_err());
        assert!(ExperimentConfig::from_text("just text").is_err());
        let mut c = ExperimentConfig::default();
        c.coefficient = "cbd".into();
        assert!(c.validate().unwrap_err().to_string().contains("cbad"));
        let mut c = ExperimentConfig::default();
        c.epsilons.clear();
        assert!(c.validate().is_err());
        assert!(preset("figure-9").unwrap_err().to_string().contains("figure-1"));
    }
}
