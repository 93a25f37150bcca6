//! The `run` command: build initial data, flow it, persist the track and a
//! per-snapshot CSV.

use geoflow::flow::{run_graph_flow, volume_rates, GraphField};
use geoflow::oracles::grim_reaper;
use geoflow::singularity::{gaussian_density, type1_diagnostic, DensityProbe};
use geoflow::symplectic::{eta_field, make_area_preserving_map, KahlerFormPair};
use geoflow::{
    geometry_fields, run_flow, shapes, Axis, FlowMode, FlowState, Immersion, ParamGrid, SpaceTimeTrack, StepRecord,
    StopReason,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::analyze::FirstVariationReport;
use crate::config::{ExperimentConfig, InitialData, Mode, ProbeSpec, ProbeTime};
use crate::error::{CliError, CliResult};
use crate::report::{num, opt, write_json, Table};
use crate::trackfile::{read_track, write_track};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: String,
    pub initial: String,
    pub seed: u64,
    pub stop: String,
    pub stop_detail: String,
    pub final_time: f64,
    pub snapshots: usize,
    pub initial_volume: f64,
    pub final_volume: f64,
    /// Largest deviation from the closed-form solution, where one exists.
    pub oracle_error: Option<f64>,
    /// Singular time from the type-I fit, when requested or needed by a probe.
    pub fitted_t0: Option<f64>,
    /// First-variation check over consecutive solver steps. Absent for graph
    /// runs, whose Dirichlet boundary feeds volume through the ends.
    pub first_variation: Option<FirstVariationReport>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub track: SpaceTimeTrack,
    pub stop: StopReason,
    /// Volume and energy after every step; empty for graph runs.
    pub history: Vec<StepRecord>,
    pub table: Table,
    pub report: RunReport,
}

/// Initial immersion for parametric and map-graph modes.
pub fn initial_immersion(cfg: &ExperimentConfig) -> CliResult<Immersion> {
    let dims = &cfg.grid;
    let want = |k: usize| -> CliResult<()> {
        if dims.len() == k {
            Ok(())
        } else {
            Err(CliError::config(0, "grid", format!("expected {k} grid dimension(s), got {}", dims.len())))
        }
    };
    let imm = match &cfg.initial {
        InitialData::Circle { radius, ambient_dim } => {
            want(1)?;
            shapes::circle(*radius, *ambient_dim, dims[0])?
        }
        InitialData::Ellipse { a, b, ambient_dim } => {
            want(1)?;
            shapes::ellipse(*a, *b, *ambient_dim, dims[0])?
        }
        InitialData::ProductTorus { r1, r2 } => {
            want(2)?;
            shapes::product_torus(*r1, *r2, dims[0], dims[1])?
        }
        InitialData::Plane { ambient_dim, side } => {
            want(2)?;
            match side {
                Some(s) => shapes::plane_patch(dims[0], *ambient_dim, *s)?,
                None => shapes::flat_plane(dims[0], *ambient_dim)?,
            }
        }
        InitialData::Shears(shears) => {
            want(2)?;
            let grid = ParamGrid::periodic(dims, &[cfg.period, cfg.period])?;
            make_area_preserving_map(&grid, shears)?.graph_immersion()?
        }
        InitialData::Samples(path) => return read_track(path)?.last_immersion().map_err(Into::into),
        InitialData::GrimReaper => {
            return Err(CliError::config(0, "initial", "grim-reaper data is a graph, not an immersion"))
        }
    };
    Ok(imm.with_order(cfg.order))
}

fn grim_reaper_field(cfg: &ExperimentConfig) -> CliResult<GraphField> {
    if cfg.grid.len() != 1 {
        return Err(CliError::config(0, "grid", "grim-reaper runs on a 1-D grid"));
    }
    let (a, b) = cfg.interval;
    let grid = ParamGrid::new(vec![Axis::interval(cfg.grid[0], a, b)], cfg.order)?;
    let values = (0..grid.len()).map(|p| grim_reaper(grid.coordinates(p)[0], 0.0)).collect::<Result<Vec<_>, _>>()?;
    Ok(GraphField::new(grid, values)?)
}

/// Distance of one snapshot from the closed-form solution, if there is one.
fn oracle_error(cfg: &ExperimentConfig, t: f64, imm: &Immersion) -> Option<f64> {
    let radius = |p: usize, a: usize| imm.point(p)[a..a + 2].iter().map(|v| v * v).sum::<f64>().sqrt();
    match cfg.initial {
        InitialData::Circle { radius: r0, .. } => {
            let r2 = r0 * r0 - 2.0 * t;
            (r2 > 0.0).then(|| {
                (0..imm.len())
                    .map(|p| (imm.point(p).iter().map(|v| v * v).sum::<f64>().sqrt() - r2.sqrt()).abs())
                    .fold(0.0, f64::max)
            })
        }
        InitialData::ProductTorus { r1, r2 } => {
            let (a2, b2) = (r1 * r1 - 2.0 * t, r2 * r2 - 2.0 * t);
            (a2 > 0.0 && b2 > 0.0).then(|| {
                (0..imm.len())
                    .map(|p| (radius(p, 0) - a2.sqrt()).abs().max((radius(p, 2) - b2.sqrt()).abs()))
                    .fold(0.0, f64::max)
            })
        }
        InitialData::GrimReaper => (0..imm.len())
            .map(|p| {
                let x = imm.point(p);
                grim_reaper(x[0], t).map(|f| (x[1] - f).abs())
            })
            .collect::<Result<Vec<_>, _>>()
            .ok()
            .map(|v| v.into_iter().fold(0.0, f64::max)),
        _ => None,
    }
}

/// Resolves probe specs against a track; fitted times come from the type-I
/// fit.
pub fn resolve_probes(specs: &[ProbeSpec], fitted: Option<f64>, ambient_dim: usize) -> CliResult<Vec<DensityProbe>> {
    specs
        .iter()
        .map(|s| {
            if s.y0.len() != ambient_dim {
                return Err(CliError::config(
                    0,
                    "diagnostics.probes",
                    format!("probe has {} coordinates, ambient has {ambient_dim}", s.y0.len()),
                ));
            }
            let t0 = match s.t0 {
                ProbeTime::Fixed(t) => t,
                ProbeTime::Fitted => fitted.ok_or_else(|| {
                    CliError::config(0, "diagnostics.probes", "fitted probe time needs a successful type-I fit")
                })?,
            };
            Ok(DensityProbe::new(s.y0.clone(), t0))
        })
        .collect()
}

fn density_cell(imm: &Immersion, t: f64, probe: &DensityProbe) -> CliResult<String> {
    if t >= probe.t0 || !imm.ambient().is_euclidean() {
        return Ok(String::new());
    }
    Ok(num(gaussian_density(imm, t, probe)?))
}

pub fn run(cfg: &ExperimentConfig) -> CliResult<RunSummary> {
    let (track, stop, history) = match cfg.mode {
        Mode::Graph => {
            let field = grim_reaper_field(cfg)?;
            let boundary = |x: [f64; 2], t: f64| grim_reaper(x[0], t).unwrap_or(f64::NAN);
            let outcome = run_graph_flow(&field, 0.0, Some(&boundary), &cfg.solver)?;
            (outcome.track, outcome.stop, Vec::new())
        }
        Mode::Parametric | Mode::MapGraph => {
            let imm = initial_immersion(cfg)?;
            let mode = if cfg.mode == Mode::MapGraph { FlowMode::MapGraph } else { FlowMode::Parametric };
            let outcome = run_flow(&FlowState::new(imm), &cfg.solver, mode);
            (outcome.track, outcome.stop, outcome.history)
        }
    };

    let needs_fit = cfg.diagnostics.type1 || cfg.diagnostics.probes.iter().any(|p| p.t0 == ProbeTime::Fitted);
    let fitted_t0 = if needs_fit { type1_diagnostic(&track).ok().map(|f| f.t0) } else { None };
    let dim = track.template().ambient_dim();
    let probes = resolve_probes(&cfg.diagnostics.probes, fitted_t0, dim)?;
    let with_eta = cfg.mode == Mode::MapGraph || (cfg.diagnostics.symplectic && dim == 4 && track.template().n() == 2);

    let mut header: Vec<String> = ["t", "volume", "sup_ii2", "int_h2"].map(String::from).to_vec();
    if with_eta {
        header.push("min_eta".into());
    }
    header.extend((0..probes.len()).map(|k| format!("density_{k}")));
    header.push("oracle_error".into());
    header.push("stop".into());

    let forms = KahlerFormPair::standard();
    let rows = (0..track.len())
        .into_par_iter()
        .map(|k| -> CliResult<(Vec<String>, f64, Option<f64>)> {
            let (t, imm) = (track.time(k), track.immersion(k)?);
            let geom = geometry_fields(&imm)?;
            let vol = geom.volume(imm.grid());
            let mut row = vec![num(t), num(vol), num(geom.sup_norm2_ii()), num(geom.total_mean_curvature(imm.grid()))];
            if with_eta {
                let eta = eta_field(&geom, &forms.omega_plus)?;
                row.push(num(eta.into_iter().fold(f64::INFINITY, f64::min)));
            }
            for probe in &probes {
                row.push(density_cell(&imm, t, probe)?);
            }
            let err = oracle_error(cfg, t, &imm);
            row.push(opt(err));
            row.push(String::new());
            Ok((row, vol, err))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut table = Table::new(header);
    let (initial_volume, final_volume) = (rows[0].1, rows[rows.len() - 1].1);
    let oracle = rows.iter().filter_map(|r| r.2).reduce(f64::max);
    for (row, _, _) in rows {
        table.push(row);
    }
    if let Some(last) = table.rows.last_mut() {
        *last.last_mut().expect("stop column") = stop.label().to_string();
    }

    let report = RunReport {
        mode: format!("{:?}", cfg.mode),
        initial: initial_name(&cfg.initial).to_string(),
        seed: cfg.seed,
        stop: stop.label().to_string(),
        stop_detail: stop.to_string(),
        final_time: track.time(track.len() - 1),
        snapshots: track.len(),
        initial_volume,
        final_volume,
        oracle_error: oracle,
        fitted_t0,
        first_variation: FirstVariationReport::from_rates(&volume_rates(&history)),
    };

    if let Some(path) = &cfg.output.track {
        write_track(path, &track)?;
    }
    if let Some(path) = &cfg.output.csv {
        table.write(path)?;
    }
    if let Some(path) = &cfg.output.report {
        write_json(path, &report)?;
    }
    Ok(RunSummary { track, stop, history, table, report })
}

fn initial_name(initial: &InitialData) -> &'static str {
    match initial {
        InitialData::Circle { .. } => "circle",
        InitialData::Ellipse { .. } => "ellipse",
        InitialData::ProductTorus { .. } => "product-torus",
        InitialData::Plane { .. } => "plane",
        InitialData::GrimReaper => "grim-reaper",
        InitialData::Shears(_) => "shears",
        InitialData::Samples(_) => "samples",
    }
}
