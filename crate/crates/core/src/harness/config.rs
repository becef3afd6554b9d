use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fock::{LadderPoly, Mode, PhasePoint, PhasePoly};
use crate::propagators::Method;
use crate::wiener::{Ansatz, CanonicalMap, Estimator, Prefactor};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    Overlap,
    ResolveUnity,
    Propagate,
    Wiener,
    Covariance,
    Classical,
    RotsymClassical,
    RotsymQuantum,
    Audit,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Overlap,
        Command::ResolveUnity,
        Command::Propagate,
        Command::Wiener,
        Command::Covariance,
        Command::Classical,
        Command::RotsymClassical,
        Command::RotsymQuantum,
        Command::Audit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Overlap => "overlap",
            Command::ResolveUnity => "resolve-unity",
            Command::Propagate => "propagate",
            Command::Wiener => "wiener",
            Command::Covariance => "covariance",
            Command::Classical => "classical",
            Command::RotsymClassical => "rotsym-classical",
            Command::RotsymQuantum => "rotsym-quantum",
            Command::Audit => "audit",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand `{s}`")))
    }
}

/// Built-in Hamiltonians, given by their normal symbols.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// `H = 0`.
    Free,
    /// `½(p² + m²q²)`.
    #[default]
    Ho,
    /// `½(p² + m²q²) + g q⁴`.
    Quartic,
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(Model::Free),
            "ho" => Ok(Model::Ho),
            "quartic" => Ok(Model::Quartic),
            _ => Err(Error::Config(format!(
                "unknown hamiltonian `{s}` (free, ho, quartic)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    #[default]
    QuarterTurn,
    Rotation,
    Translation,
}

impl FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quarter-turn" => Ok(MapKind::QuarterTurn),
            "rotation" => Ok(MapKind::Rotation),
            "translation" => Ok(MapKind::Translation),
            _ => Err(Error::Config(format!(
                "unknown map `{s}` (quarter-turn, rotation, translation)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzKind {
    #[default]
    InverseNu,
    LandauGap,
    Mixed,
}

impl FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse-nu" => Ok(AnsatzKind::InverseNu),
            "landau-gap" => Ok(AnsatzKind::LandauGap),
            "mixed" => Ok(AnsatzKind::Mixed),
            _ => Err(Error::Config(format!(
                "unknown ansatz `{s}` (inverse-nu, landau-gap, mixed)"
            ))),
        }
    }
}

/// Every parameter any subcommand reads. Unused fields are carried along so
/// that a record always holds a complete snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub command: Command,
    pub hbar: f64,
    pub dim: usize,
    pub seed: u64,
    /// Worker threads, 0 for the rayon default.
    pub workers: usize,
    pub out: Option<PathBuf>,

    pub hamiltonian: Model,
    pub mass: f64,
    pub coupling: f64,
    /// Start point, also the bra of `overlap`.
    pub p: f64,
    pub q: f64,
    /// End point, also the ket of `overlap`.
    pub p2: f64,
    pub q2: f64,
    pub time: f64,

    pub method: Method,
    pub slices: usize,
    /// Non-empty turns `propagate` into a convergence study.
    pub slices_list: Vec<usize>,
    pub grid_points: usize,
    pub grid_spacing: f64,
    pub disc_radius: f64,
    pub disc_spacing: f64,

    pub nu: Vec<f64>,
    pub steps: usize,
    pub samples: usize,
    pub estimator: Estimator,
    pub prefactor: Prefactor,
    pub ansatz: AnsatzKind,

    pub map: MapKind,
    pub angle: f64,
    pub shift_p: f64,
    pub shift_q: f64,

    pub dt: f64,

    pub n: usize,
    pub m0: f64,
    pub lambda0: f64,
    /// Empty means the defaults `q⃗ = e₁`, `p⃗ = ½e₂` (`½e₁` when `N = 1`).
    pub p0: Vec<f64>,
    pub q0: Vec<f64>,

    pub m: f64,
    pub zeta: f64,
    pub beta: f64,
    pub dim_per_mode: usize,
    /// Randomized `rotsym-quantum` draws, 0 to skip.
    pub draws: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            command: Command::Overlap,
            hbar: 1.0,
            dim: 64,
            seed: 0,
            workers: 0,
            out: None,
            hamiltonian: Model::Ho,
            mass: 1.0,
            coupling: 0.05,
            p: 0.0,
            q: 1.0,
            p2: 1.0,
            q2: 0.0,
            time: 1.0,
            method: Method::Exact,
            slices: 16,
            slices_list: Vec::new(),
            grid_points: 41,
            grid_spacing: 0.4,
            disc_radius: 8.0,
            disc_spacing: 0.3,
            nu: vec![4.0, 8.0, 16.0, 32.0],
            steps: 64,
            samples: 100_000,
            estimator: Estimator::Auto,
            prefactor: Prefactor::Lattice,
            ansatz: AnsatzKind::InverseNu,
            map: MapKind::QuarterTurn,
            angle: std::f64::consts::FRAC_PI_2,
            shift_p: 0.5,
            shift_q: -0.25,
            dt: 1e-3,
            n: 3,
            m0: 1.0,
            lambda0: 0.1,
            p0: Vec::new(),
            q0: Vec::new(),
            m: 1.0,
            zeta: 0.5,
            beta: 2.0,
            dim_per_mode: 24,
            draws: 0,
        }
    }
}

/// Accepted keys, in echo order.
pub const KEYS: &[&str] = &[
    "schema_version",
    "command",
    "hbar",
    "dim",
    "seed",
    "workers",
    "out",
    "hamiltonian",
    "mass",
    "coupling",
    "p",
    "q",
    "p2",
    "q2",
    "time",
    "method",
    "slices",
    "slices_list",
    "grid_points",
    "grid_spacing",
    "disc_radius",
    "disc_spacing",
    "nu",
    "steps",
    "samples",
    "estimator",
    "prefactor",
    "ansatz",
    "map",
    "angle",
    "shift_p",
    "shift_q",
    "dt",
    "n",
    "m0",
    "lambda0",
    "p0",
    "q0",
    "m",
    "zeta",
    "beta",
    "dim_per_mode",
    "draws",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for key `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn kebab<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn estimator_from(s: &str) -> Result<Estimator> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| {
        Error::Config(format!(
            "unknown estimator `{s}` (auto, naive, conditional)"
        ))
    })
}

fn prefactor_from(s: &str) -> Result<Prefactor> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| Error::Config(format!("unknown prefactor `{s}` (lattice, continuum)")))
}

fn range(field: &'static str, ok: bool, bound: &str, got: impl fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::param(field, format!("requires {bound}, got {got}")))
    }
}

impl ExperimentConfig {
    pub fn for_command(command: Command) -> Self {
        ExperimentConfig {
            command,
            ..Self::default()
        }
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "schema_version" => self.schema_version = parse(key, v)?,
            "command" => self.command = v.parse()?,
            "hbar" => self.hbar = parse(key, v)?,
            "dim" => self.dim = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "workers" => self.workers = parse(key, v)?,
            "out" => {
                self.out = if v.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(v))
                }
            }
            "hamiltonian" => self.hamiltonian = v.parse()?,
            "mass" => self.mass = parse(key, v)?,
            "coupling" => self.coupling = parse(key, v)?,
            "p" => self.p = parse(key, v)?,
            "q" => self.q = parse(key, v)?,
            "p2" => self.p2 = parse(key, v)?,
            "q2" => self.q2 = parse(key, v)?,
            "time" => self.time = parse(key, v)?,
            "method" => self.method = v.parse()?,
            "slices" => self.slices = parse(key, v)?,
            "slices_list" => self.slices_list = parse_list(key, v)?,
            "grid_points" => self.grid_points = parse(key, v)?,
            "grid_spacing" => self.grid_spacing = parse(key, v)?,
            "disc_radius" => self.disc_radius = parse(key, v)?,
            "disc_spacing" => self.disc_spacing = parse(key, v)?,
            "nu" => self.nu = parse_list(key, v)?,
            "steps" => self.steps = parse(key, v)?,
            "samples" => self.samples = parse(key, v)?,
            "estimator" => self.estimator = estimator_from(v)?,
            "prefactor" => self.prefactor = prefactor_from(v)?,
            "ansatz" => self.ansatz = v.parse()?,
            "map" => self.map = v.parse()?,
            "angle" => self.angle = parse(key, v)?,
            "shift_p" => self.shift_p = parse(key, v)?,
            "shift_q" => self.shift_q = parse(key, v)?,
            "dt" => self.dt = parse(key, v)?,
            "n" => self.n = parse(key, v)?,
            "m0" => self.m0 = parse(key, v)?,
            "lambda0" => self.lambda0 = parse(key, v)?,
            "p0" => self.p0 = parse_list(key, v)?,
            "q0" => self.q0 = parse_list(key, v)?,
            "m" => self.m = parse(key, v)?,
            "zeta" => self.zeta = parse(key, v)?,
            "beta" => self.beta = parse(key, v)?,
            "dim_per_mode" => self.dim_per_mode = parse(key, v)?,
            "draws" => self.draws = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                ))
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Defaults, then the file contents, then the overrides in order; the
    /// result is validated.
    pub fn parse(
        command: Command,
        file: Option<&str>,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let mut cfg = Self::for_command(command);
        if let Some(text) = file {
            cfg.apply_text(text)?;
            cfg.command = command;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "schema_version" => self.schema_version.to_string(),
            "command" => self.command.to_string(),
            "hbar" => self.hbar.to_string(),
            "dim" => self.dim.to_string(),
            "seed" => self.seed.to_string(),
            "workers" => self.workers.to_string(),
            "out" => self
                .out
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "hamiltonian" => kebab(&self.hamiltonian),
            "mass" => self.mass.to_string(),
            "coupling" => self.coupling.to_string(),
            "p" => self.p.to_string(),
            "q" => self.q.to_string(),
            "p2" => self.p2.to_string(),
            "q2" => self.q2.to_string(),
            "time" => self.time.to_string(),
            "method" => kebab(&self.method),
            "slices" => self.slices.to_string(),
            "slices_list" => join(&self.slices_list),
            "grid_points" => self.grid_points.to_string(),
            "grid_spacing" => self.grid_spacing.to_string(),
            "disc_radius" => self.disc_radius.to_string(),
            "disc_spacing" => self.disc_spacing.to_string(),
            "nu" => join(&self.nu),
            "steps" => self.steps.to_string(),
            "samples" => self.samples.to_string(),
            "estimator" => kebab(&self.estimator),
            "prefactor" => kebab(&self.prefactor),
            "ansatz" => kebab(&self.ansatz),
            "map" => kebab(&self.map),
            "angle" => self.angle.to_string(),
            "shift_p" => self.shift_p.to_string(),
            "shift_q" => self.shift_q.to_string(),
            "dt" => self.dt.to_string(),
            "n" => self.n.to_string(),
            "m0" => self.m0.to_string(),
            "lambda0" => self.lambda0.to_string(),
            "p0" => join(&self.p0),
            "q0" => join(&self.q0),
            "m" => self.m.to_string(),
            "zeta" => self.zeta.to_string(),
            "beta" => self.beta.to_string(),
            "dim_per_mode" => self.dim_per_mode.to_string(),
            "draws" => self.draws.to_string(),
            _ => return None,
        })
    }

    /// The full configuration in the key-value format, defaults included.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get(k).unwrap_or_default()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        range(
            "schema_version",
            self.schema_version == SCHEMA_VERSION,
            &format!("schema_version = {SCHEMA_VERSION}"),
            self.schema_version,
        )?;
        range(
            "hbar",
            self.hbar > 0.0 && self.hbar.is_finite(),
            "hbar > 0",
            self.hbar,
        )?;
        range("dim", self.dim >= 2, "dim >= 2", self.dim)?;
        range(
            "mass",
            self.mass > 0.0 && self.mass.is_finite(),
            "mass > 0",
            self.mass,
        )?;
        range(
            "coupling",
            self.coupling >= 0.0 && self.coupling.is_finite(),
            "coupling >= 0",
            self.coupling,
        )?;
        for (field, v) in [
            ("p", self.p),
            ("q", self.q),
            ("p2", self.p2),
            ("q2", self.q2),
        ] {
            range(field, v.is_finite(), "a finite value", v)?;
        }
        range(
            "time",
            self.time >= 0.0 && self.time.is_finite(),
            "time >= 0",
            self.time,
        )?;
        range(
            "slices_list",
            self.slices_list.windows(2).all(|w| w[0] < w[1]),
            "strictly ascending slice counts",
            join(&self.slices_list),
        )?;
        range(
            "grid_points",
            self.grid_points >= 3 && self.grid_points % 2 == 1,
            "an odd count >= 3",
            self.grid_points,
        )?;
        range(
            "grid_spacing",
            self.grid_spacing > 0.0,
            "grid_spacing > 0",
            self.grid_spacing,
        )?;
        range(
            "disc_radius",
            self.disc_radius > 0.0,
            "disc_radius > 0",
            self.disc_radius,
        )?;
        range(
            "disc_spacing",
            self.disc_spacing > 0.0,
            "disc_spacing > 0",
            self.disc_spacing,
        )?;
        range(
            "nu",
            !self.nu.is_empty() && self.nu.iter().all(|&v| v > 0.0 && v.is_finite()),
            "a non-empty list of nu > 0",
            join(&self.nu),
        )?;
        range("steps", self.steps >= 1, "steps >= 1", self.steps)?;
        range("samples", self.samples >= 2, "samples >= 2", self.samples)?;
        range(
            "dt",
            self.dt > 0.0 && self.dt.is_finite(),
            "dt > 0",
            self.dt,
        )?;
        range("n", self.n >= 1, "n >= 1", self.n)?;
        range(
            "m0",
            self.m0 > 0.0 && self.m0.is_finite(),
            "m0 > 0",
            self.m0,
        )?;
        range(
            "lambda0",
            self.lambda0 >= 0.0 && self.lambda0.is_finite(),
            "lambda0 >= 0",
            self.lambda0,
        )?;
        range(
            "p0",
            self.p0.is_empty() || self.p0.len() == self.n,
            "one component per dimension",
            self.p0.len(),
        )?;
        range(
            "q0",
            self.q0.is_empty() || self.q0.len() == self.n,
            "one component per dimension",
            self.q0.len(),
        )?;
        range("m", self.m > 0.0 && self.m.is_finite(), "m > 0", self.m)?;
        range(
            "zeta",
            (0.0..1.0).contains(&self.zeta),
            "0 ≤ ζ < 1",
            self.zeta,
        )?;
        range(
            "beta",
            self.beta >= 0.0 && self.beta.is_finite(),
            "beta >= 0",
            self.beta,
        )?;
        range(
            "dim_per_mode",
            self.dim_per_mode >= 4,
            "dim_per_mode >= 4",
            self.dim_per_mode,
        )?;
        Ok(())
    }

    pub fn start(&self) -> PhasePoint {
        PhasePoint::new(self.p, self.q)
    }

    pub fn end(&self) -> PhasePoint {
        PhasePoint::new(self.p2, self.q2)
    }

    pub fn mode(&self) -> Mode {
        Mode::new(self.mass, self.hbar)
    }

    /// The normal symbol of the selected Hamiltonian.
    pub fn symbol(&self) -> PhasePoly {
        match self.hamiltonian {
            Model::Free => PhasePoly::zero(),
            Model::Ho => PhasePoly::oscillator(self.mass),
            Model::Quartic => {
                PhasePoly::oscillator(self.mass) + PhasePoly::monomial(0, 4, self.coupling)
            }
        }
    }

    pub fn operator(&self) -> LadderPoly {
        LadderPoly::normal_ordered(self.mode(), &self.symbol())
    }

    pub fn ansatz(&self) -> Ansatz {
        match self.ansatz {
            AnsatzKind::InverseNu => Ansatz::InverseNu,
            AnsatzKind::LandauGap => Ansatz::LandauGap {
                total_time: self.time,
            },
            AnsatzKind::Mixed => Ansatz::Mixed {
                total_time: self.time,
            },
        }
    }

    pub fn canonical_map(&self) -> CanonicalMap {
        match self.map {
            MapKind::QuarterTurn => CanonicalMap::quarter_turn(),
            MapKind::Rotation => CanonicalMap {
                angle: self.angle,
                shift_p: self.shift_p,
                shift_q: self.shift_q,
            },
            MapKind::Translation => CanonicalMap::translation(self.shift_p, self.shift_q),
        }
    }

    /// Initial data of `rotsym-classical`.
    pub fn rotsym_initial(&self) -> (Vec<f64>, Vec<f64>) {
        let mut q = vec![0.0; self.n];
        let mut p = vec![0.0; self.n];
        q[0] = 1.0;
        p[if self.n > 1 { 1 } else { 0 }] = 0.5;
        (
            if self.p0.is_empty() {
                p
            } else {
                self.p0.clone()
            },
            if self.q0.is_empty() {
                q
            } else {
                self.q0.clone()
            },
        )
    }

    /// One configuration per `ν`, each with a single-element list.
    pub fn schedule_wiener(&self) -> Vec<ExperimentConfig> {
        self.nu
            .iter()
            .map(|&nu| ExperimentConfig {
                nu: vec![nu],
                ..self.clone()
            })
            .collect()
    }
}
