//! Flat `key = value` experiment configuration.
//!
//! Keys (units in brackets):
//!
//! ```text
//! experiment  = renorm | converge | identity | chaos | regularity
//! L           = 8            # period [length]
//! N           = 8192         # grid points, power of two
//! eps_ladder  = 0.4, 0.2, 0.1, 0.05   # mollification scales [length]
//! eps         = 0.1          # single scale for identity/chaos/regularity [length]
//! kappa       = 0.1          # weight exponent, 0 < kappa < 1/4
//! T           = 0.5          # final time [time]
//! dt          = 0.001        # time step [time]
//! n_samples   = 50
//! seed0       = 0
//! noise       = white | zero
//! solver      = direct | transformed
//! translates  = 64           # period budget of the integral C_eps route
//! eta         = bump | smoothstep
//! export      = none | csv | binary   # identity: solution records
//! output_dir  = out
//! tol.<check> = <value>      # threshold override for a named check
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fpam_core::analysis::EtaProfile;
use fpam_core::GridSpec;
use ini::Ini;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {reason}")]
    Value { key: String, reason: String },
    #[error("override `{0}` is not of the form key=value")]
    Override(String),
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Renorm,
    Converge,
    Identity,
    Chaos,
    Regularity,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Renorm,
        Experiment::Converge,
        Experiment::Identity,
        Experiment::Chaos,
        Experiment::Regularity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Renorm => "renorm",
            Experiment::Converge => "converge",
            Experiment::Identity => "identity",
            Experiment::Chaos => "chaos",
            Experiment::Regularity => "regularity",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s || (s == "convergence" && *e == Experiment::Converge))
            .ok_or_else(|| bad("experiment", format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    White,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Direct,
    Transformed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportKind {
    None,
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub period: f64,
    pub points: usize,
    pub eps_ladder: Vec<f64>,
    pub eps: f64,
    pub kappa: f64,
    pub t_final: f64,
    pub dt: f64,
    pub n_samples: usize,
    pub seed0: u64,
    pub noise: NoiseMode,
    pub solver: SolverKind,
    pub translates: usize,
    #[serde(serialize_with = "eta_name")]
    pub eta: EtaProfile,
    pub export: ExportKind,
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub tolerances: BTreeMap<String, f64>,
}

fn eta_name<S: serde::Serializer>(eta: &EtaProfile, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match eta {
        EtaProfile::StandardBump => "bump",
        EtaProfile::Smoothstep => "smoothstep",
    })
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let mut cfg = Self {
            experiment,
            period: 8.0,
            points: 1 << 13,
            eps_ladder: vec![0.4, 0.2, 0.1, 0.05],
            eps: 0.1,
            kappa: 0.1,
            t_final: 0.5,
            dt: 1e-3,
            n_samples: 50,
            seed0: 0,
            noise: NoiseMode::White,
            solver: SolverKind::Direct,
            translates: fpam_core::kernels::DEFAULT_TRANSLATES,
            eta: EtaProfile::StandardBump,
            export: ExportKind::None,
            output_dir: PathBuf::from("out"),
            tolerances: BTreeMap::new(),
        };
        match experiment {
            Experiment::Renorm => {
                cfg.points = 1 << 14;
                cfg.eps_ladder = vec![0.2, 0.1, 0.05];
            }
            Experiment::Converge | Experiment::Identity => {}
            Experiment::Chaos => {
                cfg.points = 1 << 10;
                cfg.n_samples = 10_000;
            }
            Experiment::Regularity => {
                cfg.points = 1 << 14;
                cfg.eps = 0.05;
                cfg.n_samples = 100;
            }
        }
        cfg
    }

    /// Defaults for `experiment`, then the file (if any), then the overrides.
    /// A file naming a different experiment is rejected.
    pub fn load(experiment: Experiment, path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut cfg = Self::defaults(experiment);
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            cfg.apply_text(&text)?;
        }
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::Override(o.clone()))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if cfg.experiment != experiment {
            return Err(bad(
                "experiment",
                format!("config is for `{}`, subcommand is `{experiment}`", cfg.experiment),
            ));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for (section, props) in ini.iter() {
            if let Some(name) = section {
                return Err(ConfigError::Parse(format!("sections are not supported: [{name}]")));
            }
            for (k, v) in props.iter() {
                self.set(k, strip_comment(v))?;
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
            v.parse().map_err(|_| bad(key, format!("`{v}` is not a number")))
        }
        match key {
            "experiment" => self.experiment = value.parse()?,
            "L" => self.period = num(key, value)?,
            "N" => self.points = num(key, value)?,
            "eps_ladder" => {
                self.eps_ladder = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| num(key, s))
                    .collect::<Result<_, _>>()?
            }
            "eps" => self.eps = num(key, value)?,
            "kappa" => self.kappa = num(key, value)?,
            "T" => self.t_final = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "n_samples" => self.n_samples = num(key, value)?,
            "seed0" => self.seed0 = num(key, value)?,
            "noise" => {
                self.noise = match value {
                    "white" => NoiseMode::White,
                    "zero" => NoiseMode::Zero,
                    _ => return Err(bad(key, "expected `white` or `zero`")),
                }
            }
            "solver" => {
                self.solver = match value {
                    "direct" => SolverKind::Direct,
                    "transformed" => SolverKind::Transformed,
                    _ => return Err(bad(key, "expected `direct` or `transformed`")),
                }
            }
            "translates" => self.translates = num(key, value)?,
            "eta" => {
                self.eta = match value {
                    "bump" => EtaProfile::StandardBump,
                    "smoothstep" => EtaProfile::Smoothstep,
                    _ => return Err(bad(key, "expected `bump` or `smoothstep`")),
                }
            }
            "export" => {
                self.export = match value {
                    "none" => ExportKind::None,
                    "csv" => ExportKind::Csv,
                    "binary" => ExportKind::Binary,
                    _ => return Err(bad(key, "expected `none`, `csv` or `binary`")),
                }
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            _ => match key.strip_prefix("tol.") {
                Some(name) if !name.is_empty() => {
                    self.tolerances.insert(name.to_string(), num(key, value)?);
                }
                _ => return Err(ConfigError::UnknownKey(key.to_string())),
            },
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec, ConfigError> {
        GridSpec::new(self.period, self.points).map_err(|e| bad("N", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let spec = self.grid()?;
        if !(self.kappa > 0.0 && self.kappa < 0.25) {
            return Err(bad("kappa", format!("{} is outside (0, 1/4)", self.kappa)));
        }
        if self.eps_ladder.is_empty() {
            return Err(bad("eps_ladder", "empty ladder"));
        }
        if self.eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(bad("eps_ladder", "must be strictly decreasing"));
        }
        let floor = 4.0 * spec.dx();
        for &e in self.eps_ladder.iter().chain(std::iter::once(&self.eps)) {
            if !(e >= floor && e <= 1.0 && e < self.period / 2.0) {
                return Err(bad("eps", format!("{e} is outside [4·dx, 1] = [{floor}, 1]")));
            }
        }
        if !(self.dt > 0.0 && self.t_final >= self.dt) {
            return Err(bad("dt", "need dt > 0 and T ≥ dt"));
        }
        let steps = self.t_final / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps {
            return Err(bad("T", "must be a whole number of steps"));
        }
        if self.n_samples < 2 {
            return Err(bad("n_samples", "need at least 2"));
        }
        if self.translates < fpam_core::kernels::MIN_TRANSLATES {
            return Err(bad("translates", format!("need at least {}", fpam_core::kernels::MIN_TRANSLATES)));
        }
        if self.experiment == Experiment::Converge {
            if self.eps_ladder.len() < 3 {
                return Err(bad("eps_ladder", "convergence needs at least 3 rungs"));
            }
            if self.n_samples < 20 {
                return Err(bad("n_samples", "convergence needs at least 20 seeds"));
            }
        }
        Ok(())
    }

    pub fn tolerance(&self, check: &str, default: f64) -> f64 {
        self.tolerances.get(check).copied().unwrap_or(default)
    }

    /// Canonical JSON of every setting that affects results (not the output
    /// directory).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn strip_comment(v: &str) -> &str {
    v.split('#').next().unwrap_or("").trim()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, overrides: &[&str]) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::defaults(Experiment::Renorm);
        cfg.apply_text(text)?;
        for o in overrides {
            let (k, v) = o.split_once('=').unwrap();
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn parses_flat_keys_with_comments() {
        let cfg = load("experiment = renorm\nL = 8 # length\nN = 4096\neps_ladder = 0.2, 0.1 ,0.05\ntol.gap = 1e-4\n", &[])
            .unwrap();
        assert_eq!(cfg.points, 4096);
        assert_eq!(cfg.eps_ladder, vec![0.2, 0.1, 0.05]);
        assert_eq!(cfg.tolerance("gap", 1.0), 1e-4);
        assert_eq!(cfg.tolerance("other", 1.0), 1.0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(load("kappa = 0.3", &[]), Err(ConfigError::Value { .. })));
        assert!(matches!(load("kappa = 0.25", &[]), Err(ConfigError::Value { .. })));
        assert!(load("eps_ladder =", &[]).is_err());
        assert!(load("eps_ladder = 0.1, 0.2", &[]).is_err());
        assert!(load("eps_ladder = 0.1, 0.1", &[]).is_err());
        assert!(load("N = 1024\neps_ladder = 0.2, 0.01", &[]).is_err());
        assert!(load("N = 1000", &[]).is_err());
        assert!(matches!(load("bogus = 1", &[]), Err(ConfigError::UnknownKey(_))));
        assert!(load("[section]\nN = 64", &[]).is_err());
        assert!(load("T = 0.5\ndt = 0.3", &[]).is_err());
    }

    #[test]
    fn overrides_win() {
        let cfg = load("N = 4096", &["N=2048", "tol.x=2"]).unwrap();
        assert_eq!(cfg.points, 2048);
        assert_eq!(cfg.tolerance("x", 0.0), 2.0);
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::defaults(Experiment::Chaos);
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed0 = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert_eq!("convergence".parse::<Experiment>().unwrap(), Experiment::Converge);
    }
}
