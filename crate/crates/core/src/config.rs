//! TOML experiment configs: sections for grid, Hamiltonian, cutoff, frame,
//! initial packet and the experiment itself. Every field has a default except
//! the experiment kind.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{InfoOrdering, NormMode};
use crate::fit::geomspace;
use crate::grid::GridSpec;
use crate::hamiltonian::{PotentialSpec, TimeDepPotentialSpec};
use crate::propagator::PropagatorConfig;
use crate::smooth::SpectralCutoff;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Every random draw (power-iteration starts, sampled norms) derives from this.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub hamiltonian: HamiltonianSection,
    #[serde(default)]
    pub cutoff: CutoffSection,
    #[serde(default)]
    pub propagator: PropagatorConfig,
    #[serde(default)]
    pub frame: FrameSection,
    #[serde(default)]
    pub packet: PacketSection,
    pub experiment: Experiment,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_seed() -> u64 {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default = "default_extent")]
    pub extent: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn one() -> usize {
    1
}

fn default_extent() -> f64 {
    80.0
}

fn default_points() -> usize {
    512
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            dim: 1,
            extent: default_extent(),
            points: default_points(),
        }
    }
}

impl GridSection {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.dim, self.extent, self.points)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub time_dep: Option<TimeDepPotentialSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSection {
    #[serde(default)]
    pub lower: f64,
    #[serde(default = "default_upper")]
    pub upper: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    /// Exponent of the mollifier; the library default when absent.
    #[serde(default)]
    pub beta: Option<f64>,
}

fn default_upper() -> f64 {
    0.5
}

fn default_width() -> f64 {
    0.05
}

impl Default for CutoffSection {
    fn default() -> Self {
        CutoffSection {
            lower: 0.0,
            upper: default_upper(),
            width: default_width(),
            beta: None,
        }
    }
}

impl CutoffSection {
    pub fn cutoff(&self) -> Result<SpectralCutoff> {
        match self.beta {
            Some(b) => SpectralCutoff::with_beta(self.lower, self.upper, self.width, b),
            None => SpectralCutoff::new(self.lower, self.upper, self.width),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSection {
    /// Observable drift speed; halfway between `k` and `c` when absent.
    #[serde(default)]
    pub v: Option<f64>,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    /// `s = max(t_final, s_min)`.
    #[serde(default = "default_s_min")]
    pub s_min: f64,
}

fn default_c() -> f64 {
    1.5
}

fn default_a() -> f64 {
    2.25
}

fn default_b() -> f64 {
    2.0
}

fn default_s_min() -> f64 {
    8.0
}

impl Default for FrameSection {
    fn default() -> Self {
        FrameSection {
            v: None,
            c: default_c(),
            a: default_a(),
            b: default_b(),
            s_min: default_s_min(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default = "default_momentum")]
    pub momentum: [f64; 2],
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_momentum() -> [f64; 2] {
    [0.9, 0.0]
}

fn default_sigma() -> f64 {
    1.0
}

impl Default for PacketSection {
    fn default() -> Self {
        PacketSection {
            center: [0.0; 2],
            momentum: default_momentum(),
            sigma: default_sigma(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
}

fn default_dir() -> String {
    "out".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_dir() }
    }
}

/// Explicit values, or `count` points from `start` to `stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Samples {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        count: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

impl Samples {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Samples::List(v) => v.clone(),
            Samples::Range {
                start,
                stop,
                count,
                spacing,
            } => match spacing {
                Spacing::Log => geomspace(*start, *stop, *count),
                Spacing::Linear => {
                    if *count == 1 {
                        return vec![*start];
                    }
                    (0..*count)
                        .map(|i| start + (stop - start) * i as f64 / (*count - 1) as f64)
                        .collect()
                }
            },
        }
    }
}

fn default_times() -> Samples {
    Samples::List(vec![5.0, 7.0, 10.0, 14.0, 20.0, 28.0, 40.0])
}

fn default_fit_window() -> (f64, f64) {
    (5.0, 40.0)
}

fn default_decay_target() -> f64 {
    -2.0
}

/// The check to run and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Operator-norm curve of the cone estimate with a decay verdict.
    Theorem21 {
        #[serde(default = "default_times")]
        times: Samples,
        #[serde(default = "default_fit_window")]
        fit_window: (f64, f64),
        #[serde(default = "default_decay_target")]
        target: f64,
        #[serde(default)]
        tolerance: f64,
        #[serde(default)]
        norm: NormMode,
    },
    /// Leakage and slope per cone speed, given as multiples of `k` or absolute.
    Dichotomy {
        c_values: Vec<f64>,
        #[serde(default)]
        relative_to_k: bool,
        #[serde(default = "default_times")]
        times: Samples,
        #[serde(default = "default_fit_window")]
        fit_window: (f64, f64),
        #[serde(default)]
        norm: NormMode,
    },
    Weighted {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default = "default_times")]
        times: Samples,
        #[serde(default = "default_fit_window")]
        fit_window: (f64, f64),
        #[serde(default = "default_tolerance")]
        tolerance: f64,
        #[serde(default)]
        norm: NormMode,
    },
    InfoBound {
        t: f64,
        rho: Samples,
        #[serde(default)]
        ordering: InfoOrdering,
        #[serde(default = "default_decay_target")]
        target: f64,
        #[serde(default)]
        tolerance: f64,
        #[serde(default)]
        norm: NormMode,
    },
    BasicEquality {
        t_final: f64,
        #[serde(default = "default_max_residual")]
        max_residual: f64,
    },
    PullThrough {
        times: Samples,
        #[serde(default = "default_t0")]
        t0: f64,
        t_cap: f64,
        #[serde(default = "default_cutoff_tol")]
        tol: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    Theorem32 {
        horizon: f64,
        #[serde(default = "default_times")]
        times: Samples,
        #[serde(default = "default_fit_window")]
        fit_window: (f64, f64),
        #[serde(default = "default_td_target")]
        target: f64,
        #[serde(default = "default_td_tolerance")]
        tolerance: f64,
        #[serde(default)]
        norm: NormMode,
    },
    Density {
        /// Nested windows `(lower, upper)`, innermost first; all share the config width.
        windows: Vec<(f64, f64)>,
        #[serde(default = "default_t0")]
        t0: f64,
        t_cap: f64,
        #[serde(default = "default_cutoff_tol")]
        tol: f64,
        #[serde(default = "default_density_final")]
        final_max: f64,
    },
    TimeReversal {
        #[serde(default = "default_times")]
        times: Samples,
    },
    SpeedConstant {
        /// Cutoff widths for the extrapolation to a sharp window.
        widths: Vec<f64>,
        #[serde(default)]
        expected: Option<f64>,
        #[serde(default = "default_k_rel_tol")]
        rel_tol: f64,
    },
}

fn default_alpha() -> f64 {
    2.0
}

fn default_eps() -> f64 {
    0.1
}

fn default_tolerance() -> f64 {
    0.3
}

fn default_max_residual() -> f64 {
    1e-6
}

fn default_t0() -> f64 {
    1.0
}

fn default_cutoff_tol() -> f64 {
    1e-10
}

fn default_td_target() -> f64 {
    -0.5
}

fn default_td_tolerance() -> f64 {
    0.2
}

fn default_density_final() -> f64 {
    0.01
}

fn default_k_rel_tol() -> f64 {
    0.01
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Theorem21 { .. } => "theorem21",
            Experiment::Dichotomy { .. } => "dichotomy",
            Experiment::Weighted { .. } => "weighted",
            Experiment::InfoBound { .. } => "info_bound",
            Experiment::BasicEquality { .. } => "basic_equality",
            Experiment::PullThrough { .. } => "pull_through",
            Experiment::Theorem32 { .. } => "theorem32",
            Experiment::Density { .. } => "density",
            Experiment::TimeReversal { .. } => "time_reversal",
            Experiment::SpeedConstant { .. } => "speed_constant",
        }
    }
}

/// Sweepable parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    C,
    Mu,
    DeltaG,
    A,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c" => Ok(Axis::C),
            "mu" | "μ" => Ok(Axis::Mu),
            "delta_g" | "δ_g" | "width" => Ok(Axis::DeltaG),
            "a" => Ok(Axis::A),
            _ => Err(Error::Config(format!(
                "unknown sweep axis {s:?} (expected c, mu, delta_g or a)"
            ))),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::C => "c",
            Axis::Mu => "mu",
            Axis::DeltaG => "delta_g",
            Axis::A => "a",
        })
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The config with every default filled in.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Structural invariants that need no spectral computation.
    pub fn validate(&self) -> Result<()> {
        self.grid.spec()?;
        if !(self.propagator.dt > 0.0) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.propagator.dt
            )));
        }
        let f = &self.frame;
        if !(f.b > 0.0 && f.b < f.a) {
            return Err(Error::Config(format!(
                "b<a required (b={}, a={})",
                f.b, f.a
            )));
        }
        if !(f.c > 0.0) {
            return Err(Error::Config(format!("c must be positive, got {}", f.c)));
        }
        if !(f.s_min >= 1.0) {
            return Err(Error::Config(format!("s_min>=1 required, got {}", f.s_min)));
        }
        if !(self.packet.sigma > 0.0) {
            return Err(Error::Config("packet sigma must be positive".into()));
        }
        self.cutoff.cutoff()?;
        if let Some(w) = self.hamiltonian.time_dep {
            if !(w.mu > 0.0) {
                return Err(Error::Config(format!("mu must be positive, got {}", w.mu)));
            }
        }
        match &self.experiment {
            Experiment::Dichotomy { c_values, .. } if c_values.is_empty() => {
                return Err(Error::Config("dichotomy needs at least one c value".into()))
            }
            Experiment::Weighted { alpha, .. } if !(*alpha >= 0.0) => {
                return Err(Error::Config("alpha must be non-negative".into()))
            }
            Experiment::Theorem32 { .. } | Experiment::PullThrough { .. }
                if self.hamiltonian.time_dep.is_none() =>
            {
                return Err(Error::Config(format!(
                    "{} needs [hamiltonian.time_dep]",
                    self.experiment.name()
                )))
            }
            Experiment::TimeReversal { .. } if self.hamiltonian.time_dep.is_some() => {
                return Err(Error::Config(
                    "time_reversal needs a time-independent Hamiltonian".into(),
                ))
            }
            Experiment::Density { windows, .. } if windows.is_empty() => {
                return Err(Error::Config("density needs at least one window".into()))
            }
            Experiment::SpeedConstant { widths, .. } if widths.len() < 3 => {
                return Err(Error::Config(
                    "speed_constant needs at least three widths".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }

    /// `sha256` of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Copy with one sweep parameter replaced.
    pub fn with_axis(&self, axis: Axis, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match axis {
            Axis::C => out.frame.c = value,
            Axis::A => out.frame.a = value,
            Axis::DeltaG => out.cutoff.width = value,
            Axis::Mu => match out.hamiltonian.time_dep.as_mut() {
                Some(w) => w.mu = value,
                None => {
                    return Err(Error::Config(
                        "mu sweep needs [hamiltonian.time_dep]".into(),
                    ))
                }
            },
        }
        out.validate()?;
        Ok(out)
    }
}
