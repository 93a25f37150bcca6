//! Mean curvature flow of hypersurfaces written as graphs `x^{n+1} = f(x)`.
//!
//! The graph equation `f_t / W = div(grad f / W)` with `W = sqrt(1 + |grad f|^2)`
//! is integrated in its expanded non-divergence form
//! `f_t = (delta_ij - f_i f_j / W^2) f_ij`.

use crate::error::{FlowError, Result};
use crate::grid::{ParamGrid, StencilOrder};
use crate::immersion::{Ambient, Immersion};
use crate::track::SpaceTimeTrack;

use super::{SolverConfig, StopReason};

/// Time-dependent boundary values `(x, t) -> f` for non-periodic axes.
pub type DirichletData<'a> = &'a (dyn Fn([f64; 2], f64) -> f64 + Sync);

#[derive(Debug, Clone, PartialEq)]
pub struct GraphField {
    grid: ParamGrid,
    values: Vec<f64>,
}

impl GraphField {
    pub fn new(grid: ParamGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FlowError::Domain(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        Ok(GraphField { grid, values })
    }

    pub fn from_fn(grid: ParamGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|p| f(grid.coordinates(p))).collect();
        GraphField { grid, values }
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The graph as an immersion `x -> (x, f(x))` in `R^{n+1}`.
    pub fn immersion(&self) -> Result<Immersion> {
        let n = self.grid.n();
        let mut positions = Vec::with_capacity(self.values.len() * (n + 1));
        for (p, v) in self.values.iter().enumerate() {
            let x = self.grid.coordinates(p);
            positions.extend_from_slice(&x[..n]);
            positions.push(*v);
        }
        let mut imm = Immersion::new(self.grid.clone(), n + 1, positions, Ambient::Euclidean)?;
        for (i, axis) in self.grid.axes().iter().enumerate() {
            if axis.periodic {
                let mut jump = vec![0.0; n + 1];
                jump[i] = axis.extent;
                imm = imm.with_winding(i, &jump)?;
            }
        }
        Ok(imm)
    }

    fn apply_boundary(&mut self, boundary: Option<DirichletData<'_>>, t: f64) -> Result<()> {
        if self.grid.is_fully_periodic() {
            return Ok(());
        }
        let data = boundary
            .ok_or_else(|| FlowError::Domain("non-periodic graph grid needs Dirichlet data".into()))?;
        for p in 0..self.values.len() {
            if self.grid.is_boundary(p) {
                self.values[p] = data(self.grid.coordinates(p), t);
            }
        }
        Ok(())
    }

    fn rate(&self) -> Vec<f64> {
        let stencils = self.grid.stencils();
        let n = self.grid.n();
        (0..self.values.len())
            .map(|p| {
                if self.grid.is_boundary(p) {
                    return 0.0;
                }
                let jet = stencils.scalar_jet(&self.values, p);
                let grad = &jet.first[..n];
                let w2 = 1.0 + grad.iter().map(|g| g * g).sum::<f64>();
                let mut out = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        out += (delta - grad[i] * grad[j] / w2) * jet.second[crate::grid::pair_index(n, i, j)];
                    }
                }
                out
            })
            .collect()
    }

    fn offset(&self, k: &[f64], s: f64) -> GraphField {
        let values = self.values.iter().zip(k).map(|(v, d)| v + s * d).collect();
        GraphField { grid: self.grid.clone(), values }
    }
}

/// One RK4 step of the graph equation from time `t`; Dirichlet values are
/// imposed at every stage time.
pub fn graph_mcf_step(f: &GraphField, t: f64, dt: f64, boundary: Option<DirichletData<'_>>) -> Result<GraphField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(FlowError::Domain(format!("dt must be positive, got {dt}")));
    }
    let mut base = f.clone();
    base.apply_boundary(boundary, t)?;
    let k1 = base.rate();
    let mut s2 = base.offset(&k1, 0.5 * dt);
    s2.apply_boundary(boundary, t + 0.5 * dt)?;
    let k2 = s2.rate();
    let mut s3 = base.offset(&k2, 0.5 * dt);
    s3.apply_boundary(boundary, t + 0.5 * dt)?;
    let k3 = s3.rate();
    let mut s4 = base.offset(&k3, dt);
    s4.apply_boundary(boundary, t + dt)?;
    let k4 = s4.rate();
    let values: Vec<f64> = (0..base.values.len())
        .map(|i| base.values[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(FlowError::StepRejected { time: t + dt, reason: format!("non-finite height at point {i}") });
    }
    let mut next = GraphField { grid: base.grid, values };
    next.apply_boundary(boundary, t + dt)?;
    Ok(next)
}

/// Step size for the graph equation. Its diffusion matrix
/// `delta_ij - f_i f_j / W^2` is bounded by the identity, so the flat-case
/// CFL rule applies: `cfl * min h^2 / 2n`, clamped.
pub fn graph_dt(grid: &ParamGrid, config: &SolverConfig) -> f64 {
    let h = grid.min_spacing();
    let mut dt = config.cfl * h * h / (2.0 * grid.n() as f64);
    if grid.order() == StencilOrder::Fourth {
        dt *= 0.75;
    }
    dt.clamp(config.dt_min, config.dt_max)
}

#[derive(Debug, Clone)]
pub struct GraphOutcome {
    /// Snapshots of the graph immersion `(x, f(x, t))`.
    pub track: SpaceTimeTrack,
    pub stop: StopReason,
    pub final_field: GraphField,
    pub final_time: f64,
}

/// Integrates the graph equation from `t0` to the configured horizon.
pub fn run_graph_flow(
    initial: &GraphField,
    t0: f64,
    boundary: Option<DirichletData<'_>>,
    config: &SolverConfig,
) -> Result<GraphOutcome> {
    config.validate()?;
    if !config.horizon.is_finite() {
        return Err(FlowError::Domain("graph flow needs a finite horizon".into()));
    }
    let mut field = initial.clone();
    field.apply_boundary(boundary, t0)?;
    let mut track = SpaceTimeTrack::new(t0, field.immersion()?);
    let dt_nominal = graph_dt(&field.grid, config);
    let mut t = t0;
    let mut steps = 0u64;
    let mut recorded = true;
    let slack = 1e-12 * config.horizon.abs().max(1.0);
    let stop = loop {
        if t >= config.horizon - slack {
            break StopReason::Horizon;
        }
        if steps >= config.max_steps {
            break StopReason::MaxSteps;
        }
        let dt = dt_nominal.min(config.horizon - t);
        match graph_mcf_step(&field, t, dt, boundary) {
            Ok(next) => {
                field = next;
                t += dt;
                steps += 1;
                recorded = false;
            }
            Err(e) => break StopReason::StepFailure(e),
        }
        if steps % config.snapshot_every == 0 {
            track.push(t, field.immersion()?.into_positions())?;
            recorded = true;
        }
    };
    if !recorded {
        track.push(t, field.immersion()?.into_positions())?;
    }
    Ok(GraphOutcome { track, stop, final_field: field, final_time: t })
}
