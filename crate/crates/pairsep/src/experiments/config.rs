//! Experiment configuration: a strict TOML document (key = value with
//! sections), schema-versioned, with unknown keys rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::modal::ProbabilityModel;
use crate::optics::SeparationVector;

/// Schema identifier expected at the top of every config document.
pub const CONFIG_SCHEMA: &str = "pairsep.config/1";

/// What an experiment run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    QfiReport,
    CrbSweepTransverse,
    CrbSweepAxial,
    McVariance,
    ModalConvergence,
}

impl Scenario {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "qfi-report" => Ok(Self::QfiReport),
            "crb-sweep-transverse" => Ok(Self::CrbSweepTransverse),
            "crb-sweep-axial" => Ok(Self::CrbSweepAxial),
            "mc-variance" => Ok(Self::McVariance),
            "modal-convergence" => Ok(Self::ModalConvergence),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::QfiReport => "qfi-report",
            Self::CrbSweepTransverse => "crb-sweep-transverse",
            Self::CrbSweepAxial => "crb-sweep-axial",
            Self::McVariance => "mc-variance",
            Self::ModalConvergence => "modal-convergence",
        }
    }
}

/// Which separation coordinate a sweep runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SweepCoordinate {
    Lx,
    Ly,
    Lz,
}

impl SweepCoordinate {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lx" => Ok(Self::Lx),
            "ly" => Ok(Self::Ly),
            "lz" => Ok(Self::Lz),
            other => Err(Error::Config(format!(
                "unknown coordinate '{other}' (expected lx, ly, or lz)"
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Lx => "lx",
            Self::Ly => "ly",
            Self::Lz => "lz",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Self::Lx => 0,
            Self::Ly => 1,
            Self::Lz => 2,
        }
    }

    pub const ALL: [SweepCoordinate; 3] =
        [SweepCoordinate::Lx, SweepCoordinate::Ly, SweepCoordinate::Lz];
}

impl fmt::Display for SweepCoordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Grid point spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpacing {
    Linear,
    Log,
}

/// One-dimensional sweep grid.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub coordinate: SweepCoordinate,
    pub start: f64,
    pub stop: f64,
    pub points: u32,
    pub spacing: GridSpacing,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let n = self.points as usize;
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                match self.spacing {
                    GridSpacing::Linear => self.start + t * (self.stop - self.start),
                    GridSpacing::Log => {
                        (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp()
                    }
                }
            })
            .collect()
    }
}

/// Direction of a modal-convergence run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModalDirection {
    Transverse,
    Axial,
}

/// Parameters of a modal-convergence run.
#[derive(Debug, Clone)]
pub struct ModalSpec {
    pub direction: ModalDirection,
    pub l_perp: f64,
    pub phi_l: f64,
    pub l_z: f64,
    pub max_level: u32,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub grid: Option<GridSpec>,
    /// Fixed values of the non-swept coordinates; each may carry several
    /// values, producing one curve per combination.
    pub fixed: BTreeMap<SweepCoordinate, Vec<f64>>,
    pub photons: u64,
    pub frames: u32,
    pub base_seed: u64,
    pub model: ProbabilityModel,
    pub quadrature_order: usize,
    pub output_dir: String,
    pub emit_plots: bool,
    pub efficiency: f64,
    pub modal: Option<ModalSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: String,
    scenario: String,
    grid: Option<RawGrid>,
    fixed: Option<BTreeMap<String, ScalarOrList>>,
    run: Option<RawRun>,
    modal: Option<RawModal>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    coordinate: String,
    start: f64,
    stop: f64,
    points: u32,
    spacing: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    photons: Option<u64>,
    frames: Option<u32>,
    base_seed: Option<u64>,
    model: Option<String>,
    quadrature_order: Option<usize>,
    output_dir: Option<String>,
    emit_plots: Option<bool>,
    efficiency: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModal {
    direction: String,
    l_perp: Option<f64>,
    phi_l: Option<f64>,
    l_z: Option<f64>,
    max_level: Option<u32>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

impl ExperimentConfig {
    /// Parses and validates a TOML config document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("TOML parse: {e}")))?;
        if raw.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported config schema '{}' (expected '{CONFIG_SCHEMA}')",
                raw.schema
            )));
        }
        let scenario = Scenario::parse(&raw.scenario)?;

        let grid = match raw.grid {
            Some(g) => {
                let spacing = match g.spacing.as_deref() {
                    None | Some("linear") => GridSpacing::Linear,
                    Some("log") => GridSpacing::Log,
                    Some(other) => {
                        return Err(Error::Config(format!("unknown grid spacing '{other}'")))
                    }
                };
                Some(GridSpec {
                    coordinate: SweepCoordinate::parse(&g.coordinate)?,
                    start: g.start,
                    stop: g.stop,
                    points: g.points,
                    spacing,
                })
            }
            None => None,
        };

        let mut fixed = BTreeMap::new();
        if let Some(map) = raw.fixed {
            for (key, value) in map {
                let coord = SweepCoordinate::parse(&key)?;
                let values = match value {
                    ScalarOrList::Scalar(v) => vec![v],
                    ScalarOrList::List(vs) => vs,
                };
                fixed.insert(coord, values);
            }
        }

        let run = raw.run.unwrap_or(RawRun {
            photons: None,
            frames: None,
            base_seed: None,
            model: None,
            quadrature_order: None,
            output_dir: None,
            emit_plots: None,
            efficiency: None,
        });
        let model = match run.model.as_deref() {
            None | Some("exact") => ProbabilityModel::Exact,
            Some("small-l") => ProbabilityModel::SmallL,
            Some(other) => {
                return Err(Error::Config(format!(
                    "unknown probability model '{other}' (expected 'exact' or 'small-l')"
                )))
            }
        };

        let modal = match raw.modal {
            Some(m) => {
                let direction = match m.direction.as_str() {
                    "transverse" => ModalDirection::Transverse,
                    "axial" => ModalDirection::Axial,
                    other => {
                        return Err(Error::Config(format!(
                            "unknown modal direction '{other}'"
                        )))
                    }
                };
                Some(ModalSpec {
                    direction,
                    l_perp: m.l_perp.unwrap_or(0.2),
                    phi_l: m.phi_l.unwrap_or(0.0),
                    l_z: m.l_z.unwrap_or(0.3),
                    max_level: m.max_level.unwrap_or(20),
                })
            }
            None => None,
        };

        let cfg = Self {
            scenario,
            grid,
            fixed,
            photons: run.photons.unwrap_or(100_000),
            frames: run.frames.unwrap_or(500),
            base_seed: run.base_seed.unwrap_or(0),
            model,
            quadrature_order: run.quadrature_order.unwrap_or(64),
            output_dir: run.output_dir.unwrap_or_else(|| "out".to_string()),
            emit_plots: run.emit_plots.unwrap_or(false),
            efficiency: run.efficiency.unwrap_or(1.0),
            modal,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Built-in defaults per scenario, used when the command line gives
    /// no config file.
    pub fn default_for(scenario: Scenario) -> Self {
        let mut cfg = Self {
            scenario,
            grid: None,
            fixed: BTreeMap::new(),
            photons: 100_000,
            frames: 500,
            base_seed: 0,
            model: ProbabilityModel::Exact,
            quadrature_order: 64,
            output_dir: "out".to_string(),
            emit_plots: false,
            efficiency: 1.0,
            modal: None,
        };
        match scenario {
            Scenario::QfiReport => {}
            Scenario::CrbSweepTransverse => {
                cfg.grid = Some(GridSpec {
                    coordinate: SweepCoordinate::Lx,
                    start: 0.025,
                    stop: 0.5,
                    points: 20,
                    spacing: GridSpacing::Linear,
                });
                cfg.fixed
                    .insert(SweepCoordinate::Ly, vec![0.025, 0.25]);
                cfg.fixed.insert(SweepCoordinate::Lz, vec![0.025]);
            }
            Scenario::CrbSweepAxial => {
                cfg.grid = Some(GridSpec {
                    coordinate: SweepCoordinate::Lz,
                    start: 0.01,
                    stop: 0.5,
                    points: 25,
                    spacing: GridSpacing::Linear,
                });
                cfg.fixed
                    .insert(SweepCoordinate::Lx, vec![0.025, 0.05, 0.125, 0.25]);
                cfg.fixed.insert(SweepCoordinate::Ly, vec![0.0]);
            }
            Scenario::McVariance => {
                cfg.grid = Some(GridSpec {
                    coordinate: SweepCoordinate::Lx,
                    start: 0.25,
                    stop: 0.25,
                    points: 1,
                    spacing: GridSpacing::Linear,
                });
                cfg.fixed.insert(SweepCoordinate::Ly, vec![0.25]);
                cfg.fixed.insert(SweepCoordinate::Lz, vec![0.25]);
            }
            Scenario::ModalConvergence => {
                cfg.modal = Some(ModalSpec {
                    direction: ModalDirection::Transverse,
                    l_perp: 0.2,
                    phi_l: 0.0,
                    l_z: 0.3,
                    max_level: 20,
                });
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.photons < 1 {
            return Err(Error::Config("photons must be at least 1".into()));
        }
        if self.frames < 1 {
            return Err(Error::Config("frames must be at least 1".into()));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::Config(format!(
                "efficiency must lie in (0, 1], got {}",
                self.efficiency
            )));
        }
        if self.quadrature_order < 8 {
            return Err(Error::Config(
                "quadrature order below 8 cannot meet the accuracy contract".into(),
            ));
        }
        let needs_grid = matches!(
            self.scenario,
            Scenario::CrbSweepTransverse | Scenario::CrbSweepAxial | Scenario::McVariance
        );
        if needs_grid {
            let grid = self
                .grid
                .as_ref()
                .ok_or_else(|| Error::Config("this scenario requires a [grid] section".into()))?;
            if grid.points == 0 {
                return Err(Error::Config("grid must contain at least one point".into()));
            }
            if !(grid.start.is_finite() && grid.stop.is_finite()) {
                return Err(Error::Config("grid endpoints must be finite".into()));
            }
            if grid.spacing == GridSpacing::Log && (grid.start <= 0.0 || grid.stop <= 0.0) {
                return Err(Error::Config(
                    "log spacing requires positive grid endpoints".into(),
                ));
            }
            if self.fixed.contains_key(&grid.coordinate) {
                return Err(Error::Config(format!(
                    "coordinate {} is both swept and fixed",
                    grid.coordinate
                )));
            }
            for coord in SweepCoordinate::ALL {
                if coord != grid.coordinate && !self.fixed.contains_key(&coord) {
                    return Err(Error::Config(format!(
                        "fixed value for coordinate {coord} is missing"
                    )));
                }
            }
            for values in self.fixed.values() {
                if values.is_empty() {
                    return Err(Error::Config("fixed coordinate list is empty".into()));
                }
            }
        }
        if self.scenario == Scenario::ModalConvergence {
            let modal = self.modal.as_ref().ok_or_else(|| {
                Error::Config("modal-convergence requires a [modal] section".into())
            })?;
            if modal.direction == ModalDirection::Transverse && !(modal.l_perp > 0.0) {
                return Err(Error::Config(
                    "transverse modal convergence requires l_perp > 0".into(),
                ));
            }
        }
        Ok(())
    }

    /// Curve combinations: the Cartesian product of the fixed-coordinate
    /// value lists, in coordinate order.
    pub fn curves(&self) -> Vec<BTreeMap<SweepCoordinate, f64>> {
        let mut curves: Vec<BTreeMap<SweepCoordinate, f64>> = vec![BTreeMap::new()];
        for (&coord, values) in &self.fixed {
            let mut next = Vec::with_capacity(curves.len() * values.len());
            for base in &curves {
                for &v in values {
                    let mut c = base.clone();
                    c.insert(coord, v);
                    next.push(c);
                }
            }
            curves = next;
        }
        curves
    }

    /// Separation vector for one grid value within one curve.
    pub fn point(
        &self,
        curve: &BTreeMap<SweepCoordinate, f64>,
        sweep_value: f64,
    ) -> SeparationVector {
        let mut a = [0.0; 3];
        for (&coord, &v) in curve {
            a[coord.index()] = v;
        }
        if let Some(grid) = &self.grid {
            a[grid.coordinate.index()] = sweep_value;
        }
        SeparationVector::from_array(a)
    }

    /// Deterministic one-document rendering of the resolved
    /// configuration, embedded into every output file.
    pub fn resolved_toml(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("schema = \"{CONFIG_SCHEMA}\"\n"));
        s.push_str(&format!("scenario = \"{}\"\n", self.scenario.label()));
        if let Some(grid) = &self.grid {
            s.push_str("[grid]\n");
            s.push_str(&format!("coordinate = \"{}\"\n", grid.coordinate));
            s.push_str(&format!("start = {}\n", grid.start));
            s.push_str(&format!("stop = {}\n", grid.stop));
            s.push_str(&format!("points = {}\n", grid.points));
            s.push_str(&format!(
                "spacing = \"{}\"\n",
                match grid.spacing {
                    GridSpacing::Linear => "linear",
                    GridSpacing::Log => "log",
                }
            ));
        }
        if !self.fixed.is_empty() {
            s.push_str("[fixed]\n");
            for (coord, values) in &self.fixed {
                let list = values
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(", ");
                s.push_str(&format!("{coord} = [{list}]\n"));
            }
        }
        s.push_str("[run]\n");
        s.push_str(&format!("photons = {}\n", self.photons));
        s.push_str(&format!("frames = {}\n", self.frames));
        s.push_str(&format!("base_seed = {}\n", self.base_seed));
        s.push_str(&format!("model = \"{}\"\n", self.model.label()));
        s.push_str(&format!("quadrature_order = {}\n", self.quadrature_order));
        s.push_str(&format!("output_dir = \"{}\"\n", self.output_dir));
        s.push_str(&format!("emit_plots = {}\n", self.emit_plots));
        s.push_str(&format!("efficiency = {}\n", self.efficiency));
        if let Some(modal) = &self.modal {
            s.push_str("[modal]\n");
            s.push_str(&format!(
                "direction = \"{}\"\n",
                match modal.direction {
                    ModalDirection::Transverse => "transverse",
                    ModalDirection::Axial => "axial",
                }
            ));
            s.push_str(&format!("l_perp = {}\n", modal.l_perp));
            s.push_str(&format!("phi_l = {}\n", modal.phi_l));
            s.push_str(&format!("l_z = {}\n", modal.l_z));
            s.push_str(&format!("max_level = {}\n", modal.max_level));
        }
        s
    }
}
