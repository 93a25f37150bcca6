//! Line-oriented `key = value` experiment configs.
//!
//! ```text
//! # shrinking circle
//! mode = parametric
//! initial = circle
//! initial.radius = 1
//! grid = 256
//! solver.horizon = 0.4
//! diagnostics.probes = 0 0 @ 0.5
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use geoflow::symplectic::{Shear, ShearAxis};
use geoflow::{SolverConfig, StencilOrder};

use crate::error::{CliError, CliResult};

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "seed",
    "initial",
    "initial.radius",
    "initial.ambient_dim",
    "initial.semi_axes",
    "initial.radii",
    "initial.side",
    "initial.shears",
    "initial.samples",
    "grid",
    "grid.order",
    "grid.interval",
    "grid.period",
    "solver.cfl",
    "solver.dt_min",
    "solver.dt_max",
    "solver.curvature_scale",
    "solver.max_steps",
    "solver.horizon",
    "solver.ii_ceiling",
    "solver.volume_floor",
    "solver.energy_floor",
    "solver.snapshot_every",
    "diagnostics.probes",
    "diagnostics.slack",
    "diagnostics.type1",
    "diagnostics.symplectic",
    "diagnostics.dilations",
    "diagnostics.heat_radius",
    "diagnostics.cubic_samples",
    "output.track",
    "output.csv",
    "output.report",
];

/// Raw entries of a config file, keyed by full dotted name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match line.find('#') {
                Some(k) => &line[..k],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(line_no, line, "expected `key = value`"))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::config(line_no, key, "unknown key"));
            }
            if entries.insert(key.to_string(), (line_no, value.trim().to_string())).is_some() {
                return Err(CliError::config(line_no, key, "duplicate key"));
            }
        }
        Ok(RawConfig { entries })
    }

    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some((line, v)) => {
                v.parse().map(Some).map_err(|_| CliError::config(line, key, format!("cannot parse `{v}`")))
            }
        }
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        match self.get(key) {
            None => Ok(None),
            Some((line, v)) => split_list(v)
                .map(|s| s.parse().map_err(|_| CliError::config(line, key, format!("cannot parse `{s}`"))))
                .collect::<CliResult<Vec<T>>>()
                .map(Some),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.get(key).map_or(0, |(l, _)| l)
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Parametric,
    Graph,
    MapGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Circle { radius: f64, ambient_dim: usize },
    Ellipse { a: f64, b: f64, ambient_dim: usize },
    ProductTorus { r1: f64, r2: f64 },
    /// Flat patch centered on the origin; `side` defaults to one period.
    Plane { ambient_dim: usize, side: Option<f64> },
    GrimReaper,
    Shears(Vec<Shear>),
    /// First snapshot of an existing track file.
    Samples(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeTime {
    Fixed(f64),
    /// Use the singular time from the type-I fit.
    Fitted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpec {
    pub y0: Vec<f64>,
    pub t0: ProbeTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub probes: Vec<ProbeSpec>,
    pub slack: f64,
    pub type1: bool,
    pub symplectic: bool,
    pub dilations: Vec<f64>,
    pub heat_radius: Option<f64>,
    pub cubic_samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputConfig {
    pub track: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub initial: InitialData,
    pub grid: Vec<usize>,
    pub order: StencilOrder,
    /// Parameter interval of graph mode.
    pub interval: (f64, f64),
    /// Period of the map-graph torus.
    pub period: f64,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let raw = RawConfig::parse(text)?;
        let mode = match raw.get("mode") {
            None | Some((_, "parametric")) => Mode::Parametric,
            Some((_, "graph")) => Mode::Graph,
            Some((_, "map-graph")) => Mode::MapGraph,
            Some((line, other)) => return Err(CliError::config(line, "mode", format!("unknown mode `{other}`"))),
        };
        let initial = parse_initial(&raw, base)?;
        check_mode(&raw, mode, &initial)?;

        let grid: Vec<usize> = match raw.list("grid")? {
            Some(g) => g,
            None if matches!(initial, InitialData::Samples(_)) => Vec::new(),
            None => return Err(CliError::config(0, "grid", "missing grid dimensions")),
        };
        let order = StencilOrder::from_accuracy(raw.or("grid.order", 2usize)?)
            .ok_or_else(|| CliError::config(raw.line("grid.order"), "grid.order", "order must be 2 or 4"))?;
        let interval = match raw.list::<f64>("grid.interval")? {
            None => (-1.2, 1.2),
            Some(v) if v.len() == 2 && v[0] < v[1] => (v[0], v[1]),
            Some(_) => return Err(CliError::config(raw.line("grid.interval"), "grid.interval", "expected `a, b` with a < b")),
        };

        let d = SolverConfig::default();
        let solver = SolverConfig {
            cfl: raw.or("solver.cfl", d.cfl)?,
            dt_min: raw.or("solver.dt_min", d.dt_min)?,
            dt_max: raw.or("solver.dt_max", d.dt_max)?,
            curvature_scale: raw.or("solver.curvature_scale", d.curvature_scale)?,
            max_steps: raw.or("solver.max_steps", d.max_steps)?,
            horizon: raw.or("solver.horizon", d.horizon)?,
            ii_ceiling: raw.or("solver.ii_ceiling", d.ii_ceiling)?,
            volume_floor: raw.or("solver.volume_floor", d.volume_floor)?,
            energy_floor: raw.or("solver.energy_floor", d.energy_floor)?,
            snapshot_every: raw.or("solver.snapshot_every", d.snapshot_every)?,
        };
        solver.validate().map_err(|e| CliError::config(0, "solver", e.to_string()))?;

        let probes = match raw.get("diagnostics.probes") {
            None => Vec::new(),
            Some((line, v)) => parse_probes(v).map_err(|m| CliError::config(line, "diagnostics.probes", m))?,
        };
        let diagnostics = DiagnosticsConfig {
            probes,
            slack: raw.or("diagnostics.slack", 1e-6)?,
            type1: raw.or("diagnostics.type1", false)?,
            symplectic: raw.or("diagnostics.symplectic", mode == Mode::MapGraph)?,
            dilations: raw.list("diagnostics.dilations")?.unwrap_or_default(),
            heat_radius: raw.parsed("diagnostics.heat_radius")?,
            cubic_samples: raw.or("diagnostics.cubic_samples", 16)?,
        };
        if let Some(&l) = diagnostics.dilations.iter().find(|l| !(**l > 0.0)) {
            return Err(CliError::config(raw.line("diagnostics.dilations"), "diagnostics.dilations", format!("dilation {l} must be positive")));
        }

        let path = |key: &str| raw.get(key).map(|(_, v)| base.join(v));
        let output = OutputConfig { track: path("output.track"), csv: path("output.csv"), report: path("output.report") };

        Ok(ExperimentConfig {
            mode,
            seed: raw.or("seed", 42)?,
            initial,
            grid,
            order,
            interval,
            period: raw.or("grid.period", 1.0)?,
            solver,
            diagnostics,
            output,
        })
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

fn parse_initial(raw: &RawConfig, base: &Path) -> CliResult<InitialData> {
    let (line, name) = raw.get("initial").ok_or_else(|| CliError::config(0, "initial", "missing initial data"))?;
    let ambient_dim = raw.or("initial.ambient_dim", 2usize)?;
    Ok(match name {
        "circle" => InitialData::Circle { radius: raw.or("initial.radius", 1.0)?, ambient_dim },
        "ellipse" => {
            let axes = raw.list::<f64>("initial.semi_axes")?.unwrap_or_else(|| vec![0.9, 0.5]);
            if axes.len() != 2 {
                return Err(CliError::config(raw.line("initial.semi_axes"), "initial.semi_axes", "expected two semi-axes"));
            }
            InitialData::Ellipse { a: axes[0], b: axes[1], ambient_dim }
        }
        "product-torus" => {
            let r = raw.list::<f64>("initial.radii")?.unwrap_or_else(|| vec![1.0, 2.0]);
            if r.len() != 2 {
                return Err(CliError::config(raw.line("initial.radii"), "initial.radii", "expected two radii"));
            }
            InitialData::ProductTorus { r1: r[0], r2: r[1] }
        }
        "plane" => InitialData::Plane { ambient_dim: raw.or("initial.ambient_dim", 3usize)?, side: raw.parsed("initial.side")? },
        "grim-reaper" => InitialData::GrimReaper,
        "shears" => match raw.get("initial.shears") {
            None => InitialData::Shears(Vec::new()),
            Some((line, v)) => InitialData::Shears(parse_shears(v).map_err(|m| CliError::config(line, "initial.shears", m))?),
        },
        "samples" => match raw.get("initial.samples") {
            Some((_, v)) => InitialData::Samples(base.join(v)),
            None => return Err(CliError::config(line, "initial.samples", "samples initial data needs a track path")),
        },
        other => return Err(CliError::config(line, "initial", format!("unknown initial data `{other}`"))),
    })
}

fn check_mode(raw: &RawConfig, mode: Mode, initial: &InitialData) -> CliResult<()> {
    let ok = match mode {
        Mode::Parametric => !matches!(initial, InitialData::GrimReaper | InitialData::Shears(_)),
        Mode::Graph => matches!(initial, InitialData::GrimReaper),
        Mode::MapGraph => matches!(initial, InitialData::Shears(_) | InitialData::Samples(_)),
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::config(raw.line("initial"), "initial", format!("initial data not supported in {mode:?} mode")))
    }
}

/// `x 0.1 1; y 0.1 1` -> shears along x then y.
fn parse_shears(v: &str) -> Result<Vec<Shear>, String> {
    v.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = split_list(item).collect();
            if parts.len() != 3 {
                return Err(format!("shear `{item}` should be `axis amplitude frequency`"));
            }
            let axis = match parts[0] {
                "x" => ShearAxis::X,
                "y" => ShearAxis::Y,
                a => return Err(format!("shear axis `{a}` should be x or y")),
            };
            let amplitude = parts[1].parse().map_err(|_| format!("bad amplitude `{}`", parts[1]))?;
            let frequency = parts[2].parse().map_err(|_| format!("bad frequency `{}`", parts[2]))?;
            Ok(Shear { axis, amplitude, frequency })
        })
        .collect()
}

/// `0 0 @ 0.5; 1 0 @ fit`.
fn parse_probes(v: &str) -> Result<Vec<ProbeSpec>, String> {
    v.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (y, t) = item.split_once('@').ok_or_else(|| format!("probe `{item}` should be `y0 @ t0`"))?;
            let y0 = split_list(y)
                .map(|s| s.parse::<f64>().map_err(|_| format!("bad coordinate `{s}`")))
                .collect::<Result<Vec<_>, _>>()?;
            let t0 = match t.trim() {
                "fit" => ProbeTime::Fitted,
                s => ProbeTime::Fixed(s.parse().map_err(|_| format!("bad probe time `{s}`"))?),
            };
            Ok(ProbeSpec { y0, t0 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<ExperimentConfig> {
        ExperimentConfig::parse(text, Path::new("/tmp/exp"))
    }

    #[test]
    fn circle_config() {
        let cfg = parse(
            "# circle\nmode = parametric\ninitial = circle\ninitial.radius = 1  # unit\ngrid = 256\n\
             solver.horizon = 0.4\ndiagnostics.probes = 0 0 @ 0.5; 0 0 @ fit\noutput.track = out/c.mcft\n",
        )
        .unwrap();
        assert_eq!(cfg.initial, InitialData::Circle { radius: 1.0, ambient_dim: 2 });
        assert_eq!(cfg.grid, vec![256]);
        assert_eq!(cfg.solver.horizon, 0.4);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.diagnostics.probes[1].t0, ProbeTime::Fitted);
        assert_eq!(cfg.output.track, Some(PathBuf::from("/tmp/exp/out/c.mcft")));
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse("initial = circle\ngird = 256\n").unwrap_err();
        assert!(err.to_string().contains("gird"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn bad_values_name_their_key() {
        let err = parse("initial = circle\ngrid = 256\nsolver.cfl = fast\n").unwrap_err();
        assert!(err.to_string().contains("solver.cfl"));
        let err = parse("initial = circle\ngrid = 256\nsolver.cfl = 3\n").unwrap_err();
        assert!(err.to_string().contains("cfl"));
        assert!(parse("initial = circle\ngrid = 256\ngrid = 128\n").is_err());
        assert!(parse("initial circle\n").is_err());
    }

    #[test]
    fn mode_must_match_initial_data() {
        assert!(parse("mode = graph\ninitial = circle\ngrid = 64\n").is_err());
        assert!(parse("mode = parametric\ninitial = shears\ngrid = 16, 16\n").is_err());
        let cfg = parse("mode = map-graph\ninitial = shears\ninitial.shears = x 0.1 1; y 0.1 1\ngrid = 16, 16\n").unwrap();
        assert!(cfg.diagnostics.symplectic);
        match cfg.initial {
            InitialData::Shears(s) => assert_eq!(s[1], Shear { axis: ShearAxis::Y, amplitude: 0.1, frequency: 1 }),
            other => panic!("{other:?}"),
        }
    }
}
