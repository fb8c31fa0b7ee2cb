//! Run descriptions for the command-line front end.
//!
//! A run is a single JSON document: global settings plus one tagged record
//! per command. Every record round-trips through serialization, and all
//! defaults are filled in on parsing so a written configuration reproduces
//! the run on its own.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::blowup::{MonitorOptions, Side};
use crate::error::{ensure_finite, Error, Result};
use crate::model::ModelParams;
use crate::parabolic::{BoundarySpec, EndCondition, EvolveOptions, Field, Grid};
use crate::stationary::{BcKind, HalflineKind, ShootingTarget, SignKind};
use crate::supersolutions::{SuperDomain, SuperRequest, ValidationGrid};
use crate::sweep::SweepConfig;

/// Initial data of an evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum InitialData {
    Constant {
        value: f64,
    },
    /// `amplitude * exp(-((x - center) / width)^2)`.
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `amplitude * exp(-rate * x)`.
    ExpDecay {
        amplitude: f64,
        rate: f64,
    },
    /// CSV with columns `x,u`, linearly interpolated onto the grid.
    Samples {
        path: PathBuf,
    },
}

#[derive(Debug, Deserialize)]
struct SampleRow {
    x: f64,
    u: f64,
}

fn read_samples(path: &Path) -> Result<Vec<(f64, f64)>> {
    let file = File::open(path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let rows: Vec<(f64, f64)> = reader
        .deserialize::<SampleRow>()
        .map(|r| r.map(|s| (s.x, s.u)).map_err(Error::from))
        .collect::<Result<_>>()?;
    if rows.len() < 2 {
        return Err(Error::Config(format!(
            "{} holds fewer than two samples",
            path.display()
        )));
    }
    if rows.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Config(format!("abscissae in {} must increase", path.display())));
    }
    Ok(rows)
}

fn interpolate(rows: &[(f64, f64)], x: f64) -> Option<f64> {
    let tol = 1e-12 * (1.0 + x.abs());
    if x < rows[0].0 - tol || x > rows[rows.len() - 1].0 + tol {
        return None;
    }
    let k = rows.partition_point(|r| r.0 < x).clamp(1, rows.len() - 1);
    let (x0, u0) = rows[k - 1];
    let (x1, u1) = rows[k];
    let w = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
    Some(u0 + w * (u1 - u0))
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { value } => ensure_finite("constant value", value),
            Self::Gaussian {
                amplitude,
                center,
                width,
            } => {
                ensure_finite("amplitude", amplitude)?;
                ensure_finite("center", center)?;
                ensure_finite("width", width)?;
                if width <= 0.0 {
                    return Err(Error::Config(format!("gaussian width must be positive, got {width}")));
                }
                Ok(())
            }
            Self::ExpDecay { amplitude, rate } => {
                ensure_finite("amplitude", amplitude)?;
                ensure_finite("rate", rate)
            }
            Self::Samples { ref path } => read_samples(path).map(|_| ()),
        }
    }

    /// Samples the data on `grid` at time zero.
    pub fn to_field(&self, grid: Grid) -> Result<Field> {
        match *self {
            Self::Constant { value } => Field::constant(grid, value),
            Self::Gaussian {
                amplitude,
                center,
                width,
            } => Field::from_fn(grid, 0.0, |x| amplitude * (-((x - center) / width).powi(2)).exp()),
            Self::ExpDecay { amplitude, rate } => Field::from_fn(grid, 0.0, |x| amplitude * (-rate * x).exp()),
            Self::Samples { ref path } => {
                let rows = read_samples(path)?;
                let values = grid
                    .nodes()
                    .into_iter()
                    .map(|x| {
                        interpolate(&rows, x).ok_or_else(|| {
                            Error::Config(format!("grid node {x} lies outside the samples in {}", path.display()))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Field::new(grid, values, 0.0)
            }
        }
    }
}

/// Grid extent and resolution as written in a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub left: f64,
    pub right: f64,
    pub cells: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.left, self.right, self.cells)
    }
}

/// An evolution of the parabolic problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveRun {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub bc: BoundarySpec,
    pub initial: InitialData,
    #[serde(default)]
    pub options: EvolveOptions,
}

impl EvolveRun {
    pub fn initial_field(&self) -> Result<Field> {
        self.initial.to_field(self.grid.build()?)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build()?;
        self.bc.validate()?;
        self.options.validate(&grid)?;
        self.initial.validate()
    }
}

/// Start of an orbit handed to the certifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum CertifyStart {
    /// `(0, v0)`.
    Axis { v0: f64 },
    /// The u-axis start of the power-curve construction with steepness `beta`.
    UAxis { beta: f64 },
}

/// One command with its inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunSpec {
    Equilibria {
        params: ModelParams,
    },
    Portrait {
        params: ModelParams,
        u_range: [f64; 2],
        v_range: [f64; 2],
        /// Seeds per axis of a uniform lattice over the window.
        seeds_per_axis: usize,
        max_parameter: f64,
    },
    Certify {
        params: ModelParams,
        start: CertifyStart,
        confirm: bool,
    },
    Shoot {
        params: ModelParams,
        bc: BcKind,
        sign: SignKind,
        target: ShootingTarget,
    },
    Periodic {
        params: ModelParams,
        v0: f64,
    },
    Halfline {
        params: ModelParams,
        kind: HalflineKind,
    },
    Evolve(EvolveRun),
    Super {
        params: ModelParams,
        request: SuperRequest,
        bc: EndCondition,
        domain: SuperDomain,
        phi_sup: f64,
        #[serde(default)]
        grid: ValidationGrid,
        /// Constant coefficient of a dynamical boundary condition.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    Blowup {
        evolve: EvolveRun,
        side: Side,
        #[serde(default)]
        monitor: MonitorOptions,
    },
    Sweep(SweepConfig),
}

impl RunSpec {
    pub fn command(&self) -> &'static str {
        match self {
            Self::Equilibria { .. } => "equilibria",
            Self::Portrait { .. } => "portrait",
            Self::Certify { .. } => "certify",
            Self::Shoot { .. } => "shoot",
            Self::Periodic { .. } => "periodic",
            Self::Halfline { .. } => "halfline",
            Self::Evolve(_) => "evolve",
            Self::Super { .. } => "super",
            Self::Blowup { .. } => "blowup",
            Self::Sweep(_) => "sweep",
        }
    }
}

/// Overrides of the integration and shooting tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_target: Option<f64>,
}

fn default_seed() -> u64 {
    7
}

fn default_threads() -> usize {
    1
}

/// A complete run: global settings and the command record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Where files are written; the command line supplies a default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Seed of the sampling used by randomized checks.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    pub run: RunSpec,
}

impl RunConfig {
    pub fn new(run: RunSpec) -> Self {
        Self {
            output_dir: None,
            threads: default_threads(),
            seed: default_seed(),
            tolerances: ToleranceOverrides::default(),
            run,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid run configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        for (name, value) in [
            ("rtol", self.tolerances.rtol),
            ("atol", self.tolerances.atol),
            ("residual_target", self.tolerances.residual_target),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        match &self.run {
            RunSpec::Portrait {
                u_range,
                v_range,
                seeds_per_axis,
                max_parameter,
                ..
            } => {
                let ordered = |r: &[f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
                if !ordered(u_range) || !ordered(v_range) {
                    return Err(Error::Config("portrait window must be finite and ordered".into()));
                }
                if *seeds_per_axis == 0 || !(max_parameter.is_finite() && *max_parameter > 0.0) {
                    return Err(Error::Config(
                        "portrait needs at least one seed per axis and a positive parameter limit".into(),
                    ));
                }
                Ok(())
            }
            RunSpec::Evolve(run) => run.validate(),
            RunSpec::Blowup { evolve, .. } => evolve.validate(),
            RunSpec::Super { phi_sup, grid, .. } => {
                ensure_finite("phi_sup", *phi_sup)?;
                if grid.nx < 2 || grid.nt < 2 {
                    return Err(Error::Config("validation grid needs at least 2 x 2 points".into()));
                }
                Ok(())
            }
            RunSpec::Sweep(sweep) => sweep.validate(),
            RunSpec::Periodic { v0, .. } => ensure_finite("v0", *v0),
            _ => Ok(()),
        }
    }
}
