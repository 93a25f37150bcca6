//! Explicit time integration of mean curvature flow.
//!
//! Three formulations share one fourth-order Runge-Kutta integrator:
//!
//! * parametric flow `dF/dt = H` for curves and surfaces of any codimension,
//! * the quasi-linear scalar equation for graphs of functions ([`graph`]),
//! * the graph of a torus map reparametrized over the first factor
//!   ([`map_graph`]).
//!
//! Step sizes follow an explicit parabolic CFL rule, see [`adaptive_dt`].

pub mod graph;
pub mod map_graph;

use std::fmt;

use crate::error::{FlowError, Result};
use crate::geometry::{geometry_fields, GeometryFields};
use crate::grid::ParamGrid;
use crate::immersion::Immersion;
use crate::track::SpaceTimeTrack;

pub use graph::{graph_dt, graph_mcf_step, run_graph_flow, DirichletData, GraphField, GraphOutcome};
pub use map_graph::{map_graph_mcf_step, map_graph_velocity, DisplacementField};

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub imm: Immersion,
    pub time: f64,
    pub steps: u64,
    pub last_dt: f64,
}

impl FlowState {
    pub fn new(imm: Immersion) -> Self {
        FlowState { imm, time: 0.0, steps: 0, last_dt: 0.0 }
    }

    pub fn at(imm: Immersion, time: f64) -> Self {
        FlowState { imm, time, steps: 0, last_dt: 0.0 }
    }
}

/// Which velocity field drives the immersion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlowMode {
    /// `dF/dt = H`.
    #[default]
    Parametric,
    /// Graph of a torus map over the first factor: `dF/dt = H - H^i dF/dx^i`.
    MapGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// CFL constant, `0 < cfl <= 1`.
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Weight of the dimensionless `sup |II|^2 * spacing^2` in the step-size
    /// denominator.
    pub curvature_scale: f64,
    pub max_steps: u64,
    pub horizon: f64,
    /// Stop once `sup |II|^2` exceeds this.
    pub ii_ceiling: f64,
    /// Stop once the volume drops below this fraction of the initial volume.
    pub volume_floor: f64,
    /// Stop once `int |H|^2 dmu` drops below this; zero disables the check.
    pub energy_floor: f64,
    /// Record a snapshot every this many accepted steps.
    pub snapshot_every: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cfl: 0.2,
            dt_min: 1e-14,
            dt_max: 1e-2,
            curvature_scale: 1.0,
            max_steps: 10_000_000,
            horizon: f64::INFINITY,
            ii_ceiling: 1e6,
            volume_floor: 1e-8,
            energy_floor: 0.0,
            snapshot_every: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(FlowError::Domain(msg.to_string()));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad("cfl must lie in (0, 1]");
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_max) {
            return bad("need 0 < dt_min < dt_max");
        }
        if !(self.curvature_scale >= 0.0) {
            return bad("curvature_scale must be non-negative");
        }
        if !(self.horizon > 0.0) {
            return bad("horizon must be positive");
        }
        if !(self.ii_ceiling > 0.0) || !(self.volume_floor >= 0.0 && self.volume_floor < 1.0) {
            return bad("need ii_ceiling > 0 and volume_floor in [0, 1)");
        }
        if !(self.energy_floor >= 0.0) {
            return bad("energy_floor must be non-negative");
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Horizon,
    /// `sup |II|^2` crossed the configured ceiling.
    SingularityCeiling,
    VolumeFloor,
    /// `int |H|^2 dmu` fell below the configured floor.
    EnergyFloor,
    MaxSteps,
    StepFailure(FlowError),
}

impl StopReason {
    pub fn is_failure(&self) -> bool {
        matches!(self, StopReason::StepFailure(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            StopReason::Horizon => "horizon",
            StopReason::SingularityCeiling => "singularity-ceiling",
            StopReason::VolumeFloor => "volume-floor",
            StopReason::EnergyFloor => "energy-floor",
            StopReason::MaxSteps => "max-steps",
            StopReason::StepFailure(_) => "step-failure",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::StepFailure(e) => write!(f, "step-failure: {e}"),
            other => f.write_str(other.label()),
        }
    }
}

/// Scalars recorded at every accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    pub volume: f64,
    /// `int |H|^2 dmu`.
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub track: SpaceTimeTrack,
    pub stop: StopReason,
    pub final_state: FlowState,
    /// Volume and energy at the initial state and after every accepted step.
    pub history: Vec<StepRecord>,
}

/// Smallest squared grid spacing measured in the induced metric:
/// `min_p lambda_min(g(p)) * min_i h_i^2`.
pub fn metric_spacing2(geom: &GeometryFields, grid: &ParamGrid) -> f64 {
    let h = grid.min_spacing();
    let n = grid.n();
    let lambda = geom
        .points()
        .iter()
        .map(|pg| {
            let g = pg.metric.g;
            if n == 1 {
                g[0][0]
            } else {
                let mean = 0.5 * (g[0][0] + g[1][1]);
                let diff = 0.5 * (g[0][0] - g[1][1]);
                mean - (diff * diff + g[0][1] * g[0][1]).sqrt()
            }
        })
        .fold(f64::INFINITY, f64::min);
    lambda * h * h
}

/// Explicit parabolic step size
/// `cfl * s / (2n (1 + curvature_scale * sup|II|^2 * s))`, clamped to
/// `[dt_min, dt_max]`, where `s` is the squared grid spacing in the induced
/// metric (see [`metric_spacing2`]). On a flat unit-speed grid `s = h^2`.
pub fn adaptive_dt(geom: &GeometryFields, grid: &ParamGrid, config: &SolverConfig) -> f64 {
    let s = metric_spacing2(geom, grid);
    let n = grid.n() as f64;
    let dt = config.cfl * s / (2.0 * n * (1.0 + config.curvature_scale * geom.sup_norm2_ii() * s));
    dt.clamp(config.dt_min, config.dt_max)
}

/// Per-point velocity of the chosen formulation, flattened like positions.
pub fn velocity(mode: FlowMode, geom: &GeometryFields) -> Vec<f64> {
    match mode {
        FlowMode::Parametric => {
            let mut out = Vec::with_capacity(geom.len() * geom.ambient_dim());
            for p in 0..geom.len() {
                out.extend_from_slice(geom.mean_curvature(p));
            }
            out
        }
        FlowMode::MapGraph => map_graph_velocity(geom),
    }
}

fn check_finite(values: &[f64], time: f64) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(FlowError::StepRejected { time, reason: format!("non-finite value at index {i}") }),
        None => Ok(()),
    }
}

fn axpy(base: &[f64], k: &[f64], s: f64) -> Vec<f64> {
    base.iter().zip(k).map(|(b, v)| b + s * v).collect()
}

/// One classical RK4 step. `geom` is the geometry of `imm` (reused for the
/// first stage).
pub(crate) fn rk4_step(
    imm: &Immersion,
    geom: &GeometryFields,
    mode: FlowMode,
    time: f64,
    dt: f64,
) -> Result<Immersion> {
    let x0 = imm.positions();
    let stage = |x: Vec<f64>| -> Result<Vec<f64>> {
        check_finite(&x, time)?;
        let next = imm.with_positions(x)?;
        let g = geometry_fields(&next)?;
        if mode == FlowMode::MapGraph {
            map_graph::check_graph(&g)?;
        }
        Ok(velocity(mode, &g))
    };
    let k1 = velocity(mode, geom);
    let k2 = stage(axpy(x0, &k1, 0.5 * dt))?;
    let k3 = stage(axpy(x0, &k2, 0.5 * dt))?;
    let k4 = stage(axpy(x0, &k3, dt))?;
    let next: Vec<f64> = (0..x0.len())
        .map(|i| x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    check_finite(&next, time + dt)?;
    imm.with_positions(next)
}

fn step_with_mode(state: &FlowState, dt: f64, mode: FlowMode) -> Result<FlowState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(FlowError::Domain(format!("dt must be positive, got {dt}")));
    }
    let geom = geometry_fields(&state.imm)?;
    if mode == FlowMode::MapGraph {
        map_graph::check_graph(&geom)?;
    }
    let imm = rk4_step(&state.imm, &geom, mode, state.time, dt)?;
    Ok(FlowState { imm, time: state.time + dt, steps: state.steps + 1, last_dt: dt })
}

/// Advances `dF/dt = H` by one RK4 step.
pub fn mcf_step_parametric(state: &FlowState, dt: f64) -> Result<FlowState> {
    step_with_mode(state, dt, FlowMode::Parametric)
}

/// Runs the flow until a stop condition fires. Errors never escape: they end
/// the run with [`StopReason::StepFailure`] and the track up to the last
/// accepted step.
pub fn run_flow(initial: &FlowState, config: &SolverConfig, mode: FlowMode) -> FlowOutcome {
    let mut state = initial.clone();
    let mut track = SpaceTimeTrack::new(state.time, state.imm.clone());
    let mut last_recorded = state.steps;
    let mut history = Vec::new();
    let finish = |track: SpaceTimeTrack, state: FlowState, stop: StopReason, recorded: u64, history| {
        let mut track = track;
        if recorded != state.steps {
            // times are strictly increasing by construction
            let _ = track.push(state.time, state.imm.positions().to_vec());
        }
        FlowOutcome { track, stop, final_state: state, history }
    };
    if let Err(e) = config.validate() {
        return finish(track, state, StopReason::StepFailure(e), last_recorded, history);
    }

    let initial_volume = match geometry_fields(&state.imm) {
        Ok(g) => g.volume(state.imm.grid()),
        Err(e) => return finish(track, state, StopReason::StepFailure(e), last_recorded, history),
    };
    let horizon_slack = 1e-12 * config.horizon.abs().max(1.0);

    loop {
        let geom = match geometry_fields(&state.imm) {
            Ok(g) => g,
            Err(e) => return finish(track, state, StopReason::StepFailure(e), last_recorded, history),
        };
        let grid = state.imm.grid();
        let (volume, energy) = (geom.volume(grid), geom.total_mean_curvature(grid));
        history.push(StepRecord { time: state.time, volume, energy });
        let stop = if geom.sup_norm2_ii() > config.ii_ceiling {
            Some(StopReason::SingularityCeiling)
        } else if volume < config.volume_floor * initial_volume {
            Some(StopReason::VolumeFloor)
        } else if config.energy_floor > 0.0 && energy < config.energy_floor {
            Some(StopReason::EnergyFloor)
        } else if state.time >= config.horizon - horizon_slack {
            Some(StopReason::Horizon)
        } else if state.steps >= config.max_steps {
            Some(StopReason::MaxSteps)
        } else {
            None
        };
        if let Some(stop) = stop {
            return finish(track, state, stop, last_recorded, history);
        }

        let dt = adaptive_dt(&geom, grid, config).min(config.horizon - state.time);
        let result = (|| {
            if mode == FlowMode::MapGraph {
                map_graph::check_graph(&geom)?;
            }
            rk4_step(&state.imm, &geom, mode, state.time, dt)
        })();
        match result {
            Ok(imm) => {
                state = FlowState { imm, time: state.time + dt, steps: state.steps + 1, last_dt: dt };
            }
            Err(e) => return finish(track, state, StopReason::StepFailure(e), last_recorded, history),
        }
        if state.steps % config.snapshot_every == 0 {
            let _ = track.push(state.time, state.imm.positions().to_vec());
            last_recorded = state.steps;
        }
    }
}

/// Volume rate against total squared mean curvature at one interior snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeRate {
    pub time: f64,
    /// Three-point difference of the volume in time (second order on
    /// non-uniform spacing).
    pub dvol_dt: f64,
    /// `int |H|^2 dmu`.
    pub energy: f64,
}

impl VolumeRate {
    /// `|dVol/dt + int |H|^2|`, which the first variation formula sends to zero.
    pub fn defect(&self) -> f64 {
        (self.dvol_dt + self.energy).abs()
    }
}

/// First-variation check along a track: at every interior snapshot, the
/// volume derivative and `int |H|^2 dmu`.
pub fn volume_rate_series(track: &SpaceTimeTrack) -> Result<Vec<VolumeRate>> {
    use rayon::prelude::*;
    let per_snapshot = (0..track.len())
        .into_par_iter()
        .map(|k| {
            let imm = track.immersion(k)?;
            let geom = geometry_fields(&imm)?;
            Ok((geom.volume(imm.grid()), geom.total_mean_curvature(imm.grid())))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let records: Vec<StepRecord> = track
        .times()
        .into_iter()
        .zip(per_snapshot)
        .map(|(time, (volume, energy))| StepRecord { time, volume, energy })
        .collect();
    Ok(volume_rates(&records))
}

/// First-variation check from per-step records, with the three-point
/// difference taken over consecutive steps.
pub fn volume_rates(records: &[StepRecord]) -> Vec<VolumeRate> {
    records
        .windows(3)
        .map(|w| {
            let (a, b) = (w[1].time - w[0].time, w[2].time - w[1].time);
            let dvol_dt = -b / (a * (a + b)) * w[0].volume + (b - a) / (a * b) * w[1].volume
                + a / (b * (a + b)) * w[2].volume;
            VolumeRate { time: w[1].time, dvol_dt, energy: w[1].energy }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn circle_step_moves_inward() {
        let imm = shapes::circle(1.0, 2, 256).unwrap();
        let next = mcf_step_parametric(&FlowState::new(imm.clone()), 1e-4).unwrap();
        assert_eq!(next.steps, 1);
        assert!((next.time - 1e-4).abs() < 1e-18);
        for p in 0..imm.len() {
            let r0 = imm.point(p).iter().map(|v| v * v).sum::<f64>().sqrt();
            let r1 = next.imm.point(p).iter().map(|v| v * v).sum::<f64>().sqrt();
            // exact radial ODE plus the O(h^2) curvature bias
            assert!((r0 - r1 - 1e-4).abs() < 1e-7);
        }
    }

    #[test]
    fn flat_plane_is_fixed() {
        let imm = shapes::flat_plane(16, 3).unwrap();
        let next = mcf_step_parametric(&FlowState::new(imm.clone()), 1e-3).unwrap();
        for (a, b) in imm.positions().iter().zip(next.imm.positions()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn product_torus_radii_shrink_independently() {
        let imm = shapes::product_torus(1.0, 2.0, 32, 32).unwrap().with_order(crate::StencilOrder::Fourth);
        let next = mcf_step_parametric(&FlowState::new(imm.clone()), 1e-4).unwrap();
        let x = next.imm.point(0);
        let r1 = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let r2 = (x[2] * x[2] + x[3] * x[3]).sqrt();
        assert!((1.0 - r1 - 1e-4).abs() < 1e-7);
        assert!((2.0 - r2 - 5e-5).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_dt() {
        let imm = shapes::circle(1.0, 2, 16).unwrap();
        assert!(mcf_step_parametric(&FlowState::new(imm), 0.0).is_err());
    }

    #[test]
    fn adaptive_dt_examples() {
        let plane = shapes::plane_patch(100, 3, 1.0).unwrap();
        let geom = geometry_fields(&plane).unwrap();
        let config = SolverConfig::default();
        let dt = adaptive_dt(&geom, plane.grid(), &config);
        assert!((dt - 5e-6).abs() < 1e-18);

        // same grid, bent: sup|II|^2 grows and dt shrinks
        let bent = Immersion::from_fn(plane.grid().clone(), 3, crate::Ambient::Euclidean, |x, out| {
            out.copy_from_slice(&[x[0], x[1], 0.05 * (std::f64::consts::TAU * x[0]).sin()]);
        })
        .unwrap()
        .with_winding(0, &[1.0, 0.0, 0.0])
        .unwrap()
        .with_winding(1, &[0.0, 1.0, 0.0])
        .unwrap();
        let curved = geometry_fields(&bent).unwrap();
        assert!(curved.sup_norm2_ii() > 1.0);
        assert!(adaptive_dt(&curved, bent.grid(), &config) < dt);

        let tiny = SolverConfig { cfl: 1e-9, dt_min: 1e-9, ..config.clone() };
        assert_eq!(adaptive_dt(&geom, plane.grid(), &tiny), 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { cfl: 1.5, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { dt_min: 1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { snapshot_every: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn run_flow_stops_on_horizon_and_ceiling() {
        let imm = shapes::circle(1.0, 2, 64).unwrap();
        let config = SolverConfig { horizon: 0.1, snapshot_every: 50, ..Default::default() };
        let out = run_flow(&FlowState::new(imm.clone()), &config, FlowMode::Parametric);
        assert_eq!(out.stop, StopReason::Horizon);
        assert!((out.final_state.time - 0.1).abs() < 1e-12);
        assert_eq!(*out.track.times().last().unwrap(), out.final_state.time);

        let config = SolverConfig { horizon: 1.0, snapshot_every: 50, ..Default::default() };
        let out = run_flow(&FlowState::new(imm), &config, FlowMode::Parametric);
        assert_eq!(out.stop, StopReason::SingularityCeiling);
        assert!(out.final_state.time < 0.5);
        assert!(out.final_state.time > 0.49);
    }

    #[test]
    fn run_flow_on_plane_is_stationary() {
        let imm = shapes::flat_plane(16, 3).unwrap();
        let config = SolverConfig { horizon: 1.0, dt_max: 0.01, snapshot_every: 20, ..Default::default() };
        let out = run_flow(&FlowState::new(imm.clone()), &config, FlowMode::Parametric);
        assert_eq!(out.stop, StopReason::Horizon);
        for s in out.track.snapshots() {
            let drift = s.positions.iter().zip(imm.positions()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(drift < 1e-12);
        }
    }
}
