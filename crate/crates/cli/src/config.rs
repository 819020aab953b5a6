//! Scenario descriptions shared by the flag parser and `--config` files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};
use phasespace_core::{Complex64 as C64, FrequencyProfile, GaussianStateRecord, HamiltonianConfig, Parity, PhaseGrid};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// One CLI run.
#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum ScenarioConfig {
    /// Propagate a Gaussian state through a quadratic Hamiltonian.
    Evolve(EvolveArgs),
    /// Photon-number table of a Gaussian state.
    PhotonDist(PhotonDistArgs),
    /// Wigner function of a Gaussian state on a phase-space grid.
    WignerGrid(GridArgs),
    /// Husimi function of a Gaussian state on a phase-space grid.
    QfuncGrid(GridArgs),
    /// Trajectory of ε(t) and the quadrature variances it fixes.
    Oscillator(OscillatorArgs),
    /// Floquet analysis of a periodic frequency profile.
    Quasienergy(QuasienergyArgs),
    /// Even or odd coherent state of a parametric oscillator.
    Cat(CatArgs),
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveArgs {
    /// State JSON file, or inline JSON.
    #[arg(long)]
    pub state: Source<GaussianStateRecord>,
    /// Hamiltonian JSON file, or inline JSON.
    #[arg(long)]
    pub hamiltonian: Source<HamiltonianConfig>,
    #[arg(long)]
    pub t: f64,
    /// RK4 steps for time-dependent Hamiltonians.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Apply the inverse propagator instead.
    #[arg(long)]
    #[serde(default)]
    pub inverse: bool,
    #[arg(long)]
    pub tol_symp: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonDistArgs {
    #[arg(long)]
    pub state: Source<GaussianStateRecord>,
    /// One cutoff for every mode, or a comma-separated list.
    #[arg(long)]
    pub cutoff: CutoffSpec,
    /// Rows below this probability are left out of the CSV.
    #[arg(long)]
    pub min_prob: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridArgs {
    #[arg(long)]
    pub state: Source<GaussianStateRecord>,
    /// `pmin,pmax,qmin,qmax,n`; defaults to six standard deviations around the mean.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,
    /// Mode spanned by the grid; the others sit at their means.
    #[arg(long)]
    pub mode: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorArgs {
    /// Frequency profile JSON file, or inline JSON.
    #[arg(long)]
    pub profile: Source<FrequencyProfile>,
    #[arg(long, visible_alias = "t")]
    pub t_final: f64,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub wronskian_tol: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasienergyArgs {
    #[arg(long)]
    pub profile: Source<FrequencyProfile>,
    #[arg(long)]
    pub period: f64,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatArgs {
    #[arg(long)]
    pub parity: Parity,
    /// `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: AlphaSpec,
    /// Defaults to the stationary oscillator `ω² = 1`.
    #[arg(long)]
    pub profile: Option<Source<FrequencyProfile>>,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub t: f64,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Inferred from the output file name when absent.
    #[arg(long, value_enum)]
    pub kind: Option<CatOutput>,
    /// Wigner grid; defaults to a square covering both components.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,
    /// Largest photon number for `photon` output.
    #[arg(long)]
    pub cutoff: Option<u32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CatOutput {
    Wavefunction,
    Wigner,
    Photon,
}

impl CatOutput {
    pub fn infer(path: &Path) -> Option<Self> {
        let stem = path.file_stem()?.to_str()?.to_ascii_lowercase();
        [Self::Wavefunction, Self::Wigner, Self::Photon]
            .into_iter()
            .find(|k| stem.contains(k.as_str()))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Wavefunction => "wavefunction",
            Self::Wigner => "wigner",
            Self::Photon => "photon",
        }
    }
}

impl ScenarioConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Evolve(_) => "evolve",
            Self::PhotonDist(_) => "photon-dist",
            Self::WignerGrid(_) => "wigner-grid",
            Self::QfuncGrid(_) => "qfunc-grid",
            Self::Oscillator(_) => "oscillator",
            Self::Quasienergy(_) => "quasienergy",
            Self::Cat(_) => "cat",
        }
    }

    pub fn out(&self) -> &Path {
        match self {
            Self::Evolve(a) => &a.out,
            Self::PhotonDist(a) => &a.out,
            Self::WignerGrid(a) | Self::QfuncGrid(a) => &a.out,
            Self::Oscillator(a) => &a.out,
            Self::Quasienergy(a) => &a.out,
            Self::Cat(a) => &a.out,
        }
    }

    pub fn set_out(&mut self, out: PathBuf) {
        match self {
            Self::Evolve(a) => a.out = out,
            Self::PhotonDist(a) => a.out = out,
            Self::WignerGrid(a) | Self::QfuncGrid(a) => a.out = out,
            Self::Oscillator(a) => a.out = out,
            Self::Quasienergy(a) => a.out = out,
            Self::Cat(a) => a.out = out,
        }
    }

    /// Reads a scenario file; relative paths inside it resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        config.rebase(&base);
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            Self::Evolve(a) => {
                a.state.rebase(base);
                a.hamiltonian.rebase(base);
                join(&mut a.out);
            }
            Self::PhotonDist(a) => {
                a.state.rebase(base);
                join(&mut a.out);
            }
            Self::WignerGrid(a) | Self::QfuncGrid(a) => {
                a.state.rebase(base);
                join(&mut a.out);
            }
            Self::Oscillator(a) => {
                a.profile.rebase(base);
                join(&mut a.out);
            }
            Self::Quasienergy(a) => {
                a.profile.rebase(base);
                join(&mut a.out);
            }
            Self::Cat(a) => {
                if let Some(p) = &mut a.profile {
                    p.rebase(base);
                }
                join(&mut a.out);
            }
        }
    }

    /// Checks every numeric option before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(CliError::Config(format!("{name} must be positive, got {v}"))),
            _ => Ok(()),
        };
        let steps = |v: Option<usize>| match v {
            Some(0) => Err(CliError::Config("steps must be positive".into())),
            _ => Ok(()),
        };
        match self {
            Self::Evolve(a) => {
                if !(a.t >= 0.0 && a.t.is_finite()) {
                    return Err(CliError::Config(format!("t must be non-negative, got {}", a.t)));
                }
                positive("tol_symp", a.tol_symp)?;
                steps(a.steps)?;
            }
            Self::PhotonDist(a) => {
                if let Some(m) = a.min_prob {
                    if !(m >= 0.0 && m.is_finite()) {
                        return Err(CliError::Config(format!("min_prob must be non-negative, got {m}")));
                    }
                }
            }
            Self::WignerGrid(_) | Self::QfuncGrid(_) => {}
            Self::Oscillator(a) => {
                positive("t_final", Some(a.t_final))?;
                positive("wronskian_tol", a.wronskian_tol)?;
                steps(a.steps)?;
            }
            Self::Quasienergy(a) => {
                positive("period", Some(a.period))?;
                steps(a.steps)?;
            }
            Self::Cat(a) => {
                if !(a.t >= 0.0 && a.t.is_finite()) {
                    return Err(CliError::Config(format!("t must be non-negative, got {}", a.t)));
                }
                steps(a.steps)?;
                if a.kind.is_none() && CatOutput::infer(&a.out).is_none() {
                    return Err(CliError::Config(format!(
                        "cannot tell the output kind from {}; pass --kind",
                        a.out.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A JSON value given inline or through a file path.
#[derive(Clone, Debug, PartialEq)]
pub enum Source<T> {
    Inline(T),
    Path(PathBuf),
}

impl<T: DeserializeOwned + Clone> Source<T> {
    pub fn load(&self) -> Result<T, CliError> {
        match self {
            Self::Inline(v) => Ok(v.clone()),
            Self::Path(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
        }
    }
}

impl<T> Source<T> {
    fn rebase(&mut self, base: &Path) {
        if let Self::Path(p) = self {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

impl<T: DeserializeOwned> FromStr for Source<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim_start().starts_with('{') {
            serde_json::from_str(s).map(Self::Inline).map_err(|e| e.to_string())
        } else {
            Ok(Self::Path(PathBuf::from(s)))
        }
    }
}

impl<T: Serialize> Serialize for Source<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Inline(v) => v.serialize(s),
            Self::Path(p) => p.serialize(s),
        }
    }
}

impl<'de, T: DeserializeOwned> Deserialize<'de> for Source<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(p) => Ok(Self::Path(PathBuf::from(p))),
            v => serde_json::from_value(v).map(Self::Inline).map_err(serde::de::Error::custom),
        }
    }
}

/// Comma-separated `f64` list parsed from text.
fn parse_floats(s: &str, expected: usize, what: &str) -> Result<Vec<f64>, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{what}: {v:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if values.len() != expected {
        return Err(format!("{what} needs {expected} comma-separated numbers, got {}", values.len()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(format!("{what} must be finite"));
    }
    Ok(values)
}

/// `pmin,pmax,qmin,qmax,n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec(pub PhaseGrid);

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 5 {
            return Err(format!("grid needs pmin,pmax,qmin,qmax,n, got {s:?}"));
        }
        let bounds = parse_floats(&parts[..4].join(","), 4, "grid")?;
        let n: usize = parts[4].trim().parse().map_err(|e| format!("grid size {:?}: {e}", parts[4]))?;
        PhaseGrid::new(bounds[0], bounds[1], bounds[2], bounds[3], n)
            .map(Self)
            .map_err(|e| e.to_string())
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = &self.0;
        write!(f, "{},{},{},{},{}", g.p_min, g.p_max, g.q_min, g.q_max, g.n)
    }
}

impl Serialize for GridSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-mode photon cutoffs; a single value applies to every mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutoffSpec(pub Vec<u32>);

impl CutoffSpec {
    pub fn for_modes(&self, n_modes: usize) -> Result<Vec<u32>, CliError> {
        match self.0.len() {
            1 => Ok(vec![self.0[0]; n_modes]),
            k if k == n_modes => Ok(self.0.clone()),
            k => Err(CliError::Config(format!("{k} cutoffs given for {n_modes} modes"))),
        }
    }
}

impl FromStr for CutoffSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let values: Vec<u32> = s
            .split(',')
            .map(|v| v.trim().parse::<u32>().map_err(|e| format!("cutoff {v:?}: {e}")))
            .collect::<Result<_, _>>()?;
        Ok(Self(values))
    }
}

impl Serialize for CutoffSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CutoffSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(u32),
            Many(Vec<u32>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(v) => Ok(Self(vec![v])),
            Raw::Many(v) if !v.is_empty() => Ok(Self(v)),
            Raw::Many(_) => Err(serde::de::Error::custom("cutoff list is empty")),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Complex amplitude written `re,im`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaSpec(pub C64);

impl FromStr for AlphaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = parse_floats(s, 2, "alpha")?;
        Ok(Self(C64::new(v[0], v[1])))
    }
}

impl Serialize for AlphaSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlphaSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Pair([f64; 2]),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Pair([re, im]) => Ok(Self(C64::new(re, im))),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
