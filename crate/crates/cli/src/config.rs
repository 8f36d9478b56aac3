//! Run configuration.
//!
//! A config is a TOML file with flat top-level keys and one `[spec.<id>]`
//! section per walk:
//!
//! ```toml
//! experiment = "converge-tail"
//! n_grid = [1024, 4096, 16384]
//! k_list = [1, 4, "mid", "high"]
//! chi = 0.1
//! reps = 100000
//! seed = 7
//! out_path = "results"
//!
//! [spec.rat05]
//! delta = 0.5
//! perturbation.kind = "rational"
//! ```
//!
//! Spec sections take the keys of [`WalkSpec::from_config_table`]. Entries of
//! `k_list` are heights or one of the tokens `"mid"` (`k = sqrt(n/2)`),
//! `"high"` (`k = 2 sqrt(n/chi)`) and `"sqrt"` (`k = sqrt(n)`), resolved per `n`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use besselwalk_core::asymptotics::DEFAULT_CHI;
use besselwalk_core::WalkSpec;

/// Sweep used by the regime experiments when `chi` is not set.
pub const DEFAULT_CHI_SWEEP: [f64; 3] = [0.05, 0.1, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    Audit,
    ConvergeTail,
    ConvergePoint,
    HitRegimes,
    OccupancyLlt,
    LocationLlt,
    CouplingStudy,
    BesselCheck,
    EstimateK0,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Audit,
        Experiment::ConvergeTail,
        Experiment::ConvergePoint,
        Experiment::HitRegimes,
        Experiment::OccupancyLlt,
        Experiment::LocationLlt,
        Experiment::CouplingStudy,
        Experiment::BesselCheck,
        Experiment::EstimateK0,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Audit => "audit",
            Experiment::ConvergeTail => "converge-tail",
            Experiment::ConvergePoint => "converge-point",
            Experiment::HitRegimes => "hit-regimes",
            Experiment::OccupancyLlt => "occupancy-llt",
            Experiment::LocationLlt => "location-llt",
            Experiment::CouplingStudy => "coupling-study",
            Experiment::BesselCheck => "bessel-check",
            Experiment::EstimateK0 => "estimate-k0",
        }
    }

    /// Whether `n_grid` must be powers of two.
    fn dyadic(self) -> bool {
        matches!(
            self,
            Experiment::ConvergeTail
                | Experiment::ConvergePoint
                | Experiment::HitRegimes
                | Experiment::OccupancyLlt
                | Experiment::LocationLlt
                | Experiment::EstimateK0
        )
    }

    fn default_grid(self) -> Option<Vec<u64>> {
        match self {
            Experiment::BesselCheck => Some(vec![100, 1000, 10_000]),
            Experiment::EstimateK0 => Some(vec![1 << 16, 1 << 18, 1 << 20]),
            Experiment::Audit => Some(vec![64, 4096]),
            _ => None,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Experiment, String> {
        Experiment::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.as_str()).collect();
                format!("unknown experiment `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// A starting height, fixed or derived from `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum KSpec {
    Fixed(u64),
    Mid,
    High,
    Sqrt,
}

impl KSpec {
    /// Height for horizon `n`, before any parity adjustment.
    pub fn resolve(self, n: u64, chi: f64) -> u64 {
        let nf = n as f64;
        match self {
            KSpec::Fixed(k) => k,
            KSpec::Mid => (nf / 2.0).sqrt().round() as u64,
            KSpec::High => (2.0 * (nf / chi).sqrt()).ceil() as u64,
            KSpec::Sqrt => nf.sqrt().round() as u64,
        }
    }

    pub fn label(self) -> String {
        match self {
            KSpec::Fixed(k) => k.to_string(),
            KSpec::Mid => "mid".into(),
            KSpec::High => "high".into(),
            KSpec::Sqrt => "sqrt".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpecEntry {
    pub id: String,
    pub spec: WalkSpec,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub specs: Vec<SpecEntry>,
    pub experiment: Option<Experiment>,
    pub n_grid: Vec<u64>,
    pub k_list: Vec<KSpec>,
    /// `None` means the default sweep for regime experiments.
    pub chi: Option<f64>,
    pub reps: u64,
    pub seed: u64,
    pub out_path: Option<PathBuf>,
    /// Overrides the final-deviation tolerance of ratio checks.
    pub tolerance: Option<f64>,
}

/// Parse or validation failure, located when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("config error")?;
        if let Some(line) = self.line {
            write!(f, " at line {line}")?;
        }
        if let Some(key) = &self.key {
            write!(f, ", key `{key}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

const TOP_KEYS: [&str; 9] = [
    "experiment",
    "n_grid",
    "k_list",
    "chi",
    "reps",
    "seed",
    "out_path",
    "tolerance",
    "spec",
];

/// 1-based line of `key` inside `[section]` (top level when `None`).
fn key_line(text: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.trim_end_matches(']').trim().to_string();
            if key.is_empty() && section == Some(name.as_str()) {
                return Some(i + 1);
            }
            current = Some(name);
            continue;
        }
        if current.as_deref() != section {
            continue;
        }
        if let Some(rest) = line.strip_prefix(key) {
            let rest = rest.trim_start();
            if rest.starts_with('=') || rest.starts_with('.') {
                return Some(i + 1);
            }
        }
    }
    None
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, section: Option<&str>, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: key_line(self.text, section, key),
            key: Some(match section {
                Some(s) => format!("{s}.{key}"),
                None => key.to_string(),
            }),
            message: message.into(),
        }
    }
}

fn as_u64(v: &toml::Value) -> Option<u64> {
    v.as_integer().and_then(|i| u64::try_from(i).ok())
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            key: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        text.parse()
    }

    /// Experiment to run: the config's own, else `fallback`.
    pub fn experiment_or(&self, fallback: Experiment) -> Experiment {
        self.experiment.unwrap_or(fallback)
    }

    pub fn chi_values(&self) -> Vec<f64> {
        match self.chi {
            Some(c) => vec![c],
            None => DEFAULT_CHI_SWEEP.to_vec(),
        }
    }

    /// Single `chi` for experiments that do not sweep.
    pub fn chi_or_default(&self) -> f64 {
        self.chi.unwrap_or(DEFAULT_CHI)
    }

    /// Grid for `experiment`, falling back to its default.
    pub fn grid_for(&self, experiment: Experiment) -> Result<Vec<u64>, ConfigError> {
        if !self.n_grid.is_empty() {
            if experiment.dyadic() {
                if let Some(n) = self.n_grid.iter().find(|n| !n.is_power_of_two()) {
                    return Err(ConfigError {
                        line: None,
                        key: Some("n_grid".into()),
                        message: format!("{experiment} needs a dyadic grid; {n} is not a power of two"),
                    });
                }
            }
            return Ok(self.n_grid.clone());
        }
        experiment.default_grid().ok_or_else(|| ConfigError {
            line: None,
            key: Some("n_grid".into()),
            message: format!("{experiment} needs `n_grid`"),
        })
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<RunConfig, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            ConfigError {
                line,
                key: None,
                message: e.message().to_string(),
            }
        })?;
        let cx = Ctx { text };

        for key in table.keys() {
            if !TOP_KEYS.contains(&key.as_str()) {
                return Err(cx.err(
                    None,
                    key,
                    format!("unknown key (expected one of {})", TOP_KEYS.join(", ")),
                ));
            }
        }

        let experiment = match table.get("experiment") {
            None => None,
            Some(toml::Value::String(s)) => Some(s.parse().map_err(|m: String| cx.err(None, "experiment", m))?),
            Some(_) => return Err(cx.err(None, "experiment", "must be a string")),
        };

        let n_grid = match table.get("n_grid") {
            None => Vec::new(),
            Some(toml::Value::Array(items)) => {
                let grid = items
                    .iter()
                    .map(|v| as_u64(v).filter(|&n| n > 0))
                    .collect::<Option<Vec<u64>>>()
                    .ok_or_else(|| cx.err(None, "n_grid", "entries must be positive integers"))?;
                if grid.is_empty() {
                    return Err(cx.err(None, "n_grid", "must not be empty"));
                }
                if grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(cx.err(None, "n_grid", "must be strictly ascending"));
                }
                grid
            }
            Some(_) => return Err(cx.err(None, "n_grid", "must be an array of integers")),
        };

        let k_list = match table.get("k_list") {
            None => Vec::new(),
            Some(toml::Value::Array(items)) => {
                let mut ks = Vec::with_capacity(items.len());
                for v in items {
                    ks.push(match v {
                        toml::Value::String(s) if s == "mid" => KSpec::Mid,
                        toml::Value::String(s) if s == "high" => KSpec::High,
                        toml::Value::String(s) if s == "sqrt" => KSpec::Sqrt,
                        other => KSpec::Fixed(as_u64(other).ok_or_else(|| {
                            cx.err(
                                None,
                                "k_list",
                                "entries must be non-negative integers or \"mid\", \"high\", \"sqrt\"",
                            )
                        })?),
                    });
                }
                ks
            }
            Some(_) => return Err(cx.err(None, "k_list", "must be an array")),
        };

        let float = |key: &str| -> Result<Option<f64>, ConfigError> {
            match table.get(key) {
                None => Ok(None),
                Some(toml::Value::Float(x)) => Ok(Some(*x)),
                Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
                Some(_) => Err(cx.err(None, key, "must be a number")),
            }
        };
        let chi = float("chi")?;
        if let Some(c) = chi {
            if !(c > 0.0 && c < 1.0) {
                return Err(cx.err(None, "chi", format!("must lie in (0, 1), got {c}")));
            }
        }
        let tolerance = float("tolerance")?;
        if let Some(t) = tolerance {
            if t.is_nan() || t <= 0.0 {
                return Err(cx.err(None, "tolerance", "must be positive"));
            }
        }

        let uint = |key: &str, default: u64| -> Result<u64, ConfigError> {
            match table.get(key) {
                None => Ok(default),
                Some(v) => as_u64(v).ok_or_else(|| cx.err(None, key, "must be a non-negative integer")),
            }
        };
        let reps = uint("reps", 100_000)?;
        let seed = uint("seed", 0)?;

        let out_path = match table.get("out_path") {
            None => None,
            Some(toml::Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(cx.err(None, "out_path", "must be a string")),
        };

        let specs = match table.get("spec") {
            None => {
                return Err(ConfigError {
                    line: None,
                    key: Some("spec".into()),
                    message: "no [spec.<id>] sections".into(),
                })
            }
            Some(toml::Value::Table(sections)) => {
                let mut specs = Vec::with_capacity(sections.len());
                for (id, section) in sections {
                    let header = format!("spec.{id}");
                    let toml::Value::Table(body) = section else {
                        return Err(cx.err(None, "spec", format!("`spec.{id}` must be a section")));
                    };
                    let spec = WalkSpec::from_config_table(body).map_err(|e| {
                        let message = e.to_string();
                        // point at the first key the message names, else the header
                        let named = body.keys().find(|k| message.contains(&format!("`{k}")));
                        match named {
                            Some(k) => cx.err(Some(&header), k, message),
                            None => ConfigError {
                                line: key_line(text, Some(&header), ""),
                                key: Some(header.clone()),
                                message,
                            },
                        }
                    })?;
                    specs.push(SpecEntry { id: id.clone(), spec });
                }
                specs
            }
            Some(_) => return Err(cx.err(None, "spec", "must hold [spec.<id>] sections")),
        };

        Ok(RunConfig {
            specs,
            experiment,
            n_grid,
            k_list,
            chi,
            reps,
            seed,
            out_path,
            tolerance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
experiment = "converge-tail"
n_grid = [1024, 4096]
k_list = [1, "mid"]
seed = 3

[spec.a]
delta = 0.5
perturbation.kind = "rational"

[spec.b]
delta = 0
"#;

    #[test]
    fn parses_sections() {
        let c: RunConfig = GOOD.parse().unwrap();
        assert_eq!(c.specs.len(), 2);
        assert_eq!(c.specs[0].id, "a");
        assert_eq!(c.experiment, Some(Experiment::ConvergeTail));
        assert_eq!(c.k_list, vec![KSpec::Fixed(1), KSpec::Mid]);
        assert_eq!(c.reps, 100_000);
        assert_eq!(c.chi_values(), DEFAULT_CHI_SWEEP.to_vec());
    }

    #[test]
    fn unknown_top_key_has_line() {
        let text = GOOD.replace("seed = 3", "sead = 3");
        let e = text.parse::<RunConfig>().unwrap_err();
        assert_eq!(e.line, Some(5));
        assert_eq!(e.key.as_deref(), Some("sead"));
    }

    #[test]
    fn bad_spec_key_has_line() {
        let text = GOOD.replace("delta = 0\n", "delta = 0\nepsilom = 0.1\n");
        let e = text.parse::<RunConfig>().unwrap_err();
        assert_eq!(e.line, Some(13), "{e}");
        assert_eq!(e.key.as_deref(), Some("spec.b.epsilom"));
    }

    #[test]
    fn syntax_error_has_line() {
        let e = "n_grid = [1, 2\nseed = 1\n".parse::<RunConfig>().unwrap_err();
        assert!(e.line.is_some(), "{e}");
    }

    #[test]
    fn grid_rules() {
        let e = GOOD
            .replace("[1024, 4096]", "[4096, 1024]")
            .parse::<RunConfig>()
            .unwrap_err();
        assert!(e.message.contains("ascending"));
        let c: RunConfig = GOOD.replace("[1024, 4096]", "[1000, 4096]").parse().unwrap();
        assert!(c.grid_for(Experiment::ConvergeTail).is_err());
        assert!(c.grid_for(Experiment::BesselCheck).is_ok());
        assert!(GOOD.replace("seed = 3", "chi = 1.5").parse::<RunConfig>().is_err());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = format!("{GOOD}\n[spec.a]\ndelta = 1\n");
        assert!(text.parse::<RunConfig>().is_err());
    }

    #[test]
    fn k_tokens() {
        assert_eq!(KSpec::Mid.resolve(1 << 12, 0.1), 45);
        assert_eq!(KSpec::Sqrt.resolve(1 << 12, 0.1), 64);
        assert!(KSpec::High.resolve(1 << 12, 0.1) as f64 > (4096.0f64 / 0.1).sqrt());
    }
}
