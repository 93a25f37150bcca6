//! Flow of the graph of a torus map `x -> A x + u(x)` inside the flat
//! 4-torus, with `u` periodic.
//!
//! The graph `F(x) = (x, A x + u(x))` moves with normal velocity `H`. Adding
//! the tangent vector `-H^i dF/dx^i` (where `H^i` are the first-factor
//! components of `H`) keeps the first factor fixed, so the parametrization
//! stays a graph over the first factor and only `u` evolves:
//! `u_t = H_y - Dv H_x` with `v = A x + u`.

use crate::error::{FlowError, Result};
use crate::geometry::{geometry_fields, GeometryFields};
use crate::grid::ParamGrid;
use crate::immersion::{Ambient, Immersion};

use super::{rk4_step, FlowMode};

/// Threshold below which the map's Jacobian determinant counts as singular.
pub const GRAPH_DET_FLOOR: f64 = 1e-12;

/// A torus map `x -> A x + u(x)` sampled on a periodic 2-D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    grid: ParamGrid,
    linear: [[f64; 2]; 2],
    /// Point-major `(u1, u2)` pairs.
    values: Vec<f64>,
}

impl DisplacementField {
    pub fn new(grid: ParamGrid, linear: [[f64; 2]; 2], values: Vec<f64>) -> Result<Self> {
        if grid.n() != 2 || !grid.is_fully_periodic() {
            return Err(FlowError::InvalidGrid("torus maps need a fully periodic 2-D grid".into()));
        }
        if values.len() != 2 * grid.len() {
            return Err(FlowError::Domain(format!("expected {} values, got {}", 2 * grid.len(), values.len())));
        }
        Ok(DisplacementField { grid, linear, values })
    }

    pub fn identity(grid: ParamGrid) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, [[1.0, 0.0], [0.0, 1.0]], vec![0.0; 2 * n])
    }

    pub fn from_fn(grid: ParamGrid, linear: [[f64; 2]; 2], u: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Self> {
        let mut values = Vec::with_capacity(2 * grid.len());
        for p in 0..grid.len() {
            values.extend_from_slice(&u(grid.coordinates(p)));
        }
        Self::new(grid, linear, values)
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }

    pub fn linear(&self) -> [[f64; 2]; 2] {
        self.linear
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, p: usize) -> [f64; 2] {
        [self.values[2 * p], self.values[2 * p + 1]]
    }

    /// The graph immersion in `R^4` with torus periods `(Lx, Ly, Lx, Ly)`.
    pub fn graph_immersion(&self) -> Result<Immersion> {
        let (lx, ly) = (self.grid.axis(0).extent, self.grid.axis(1).extent);
        let a = self.linear;
        let mut positions = Vec::with_capacity(4 * self.grid.len());
        for p in 0..self.grid.len() {
            let x = self.grid.coordinates(p);
            let u = self.at(p);
            positions.extend_from_slice(&[
                x[0],
                x[1],
                a[0][0] * x[0] + a[0][1] * x[1] + u[0],
                a[1][0] * x[0] + a[1][1] * x[1] + u[1],
            ]);
        }
        Immersion::new(self.grid.clone(), 4, positions, Ambient::FlatTorus { periods: vec![lx, ly, lx, ly] })?
            .with_winding(0, &[lx, 0.0, a[0][0] * lx, a[1][0] * lx])?
            .with_winding(1, &[0.0, ly, a[0][1] * ly, a[1][1] * ly])
    }

    /// Reads the displacement back from a graph immersion produced by
    /// [`graph_immersion`](Self::graph_immersion).
    pub fn from_graph(imm: &Immersion, linear: [[f64; 2]; 2]) -> Result<Self> {
        if imm.n() != 2 || imm.ambient_dim() != 4 {
            return Err(FlowError::InvalidImmersion("expected a surface in a 4-dimensional ambient".into()));
        }
        let grid = imm.grid().clone();
        let mut values = Vec::with_capacity(2 * grid.len());
        for p in 0..grid.len() {
            let f = imm.point(p);
            let x = [f[0], f[1]];
            values.push(f[2] - linear[0][0] * x[0] - linear[0][1] * x[1]);
            values.push(f[3] - linear[1][0] * x[0] - linear[1][1] * x[1]);
        }
        Self::new(grid, linear, values)
    }
}

/// `H - H^i dF/dx^i`, flattened like positions.
pub fn map_graph_velocity(geom: &GeometryFields) -> Vec<f64> {
    let dim = geom.ambient_dim();
    let mut out = Vec::with_capacity(geom.len() * dim);
    for p in 0..geom.len() {
        let h = geom.mean_curvature(p);
        let t0 = geom.tangent(p, 0);
        let t1 = geom.tangent(p, 1);
        for a in 0..dim {
            out.push(h[a] - h[0] * t0[a] - h[1] * t1[a]);
        }
    }
    out
}

/// Errors when the map `x -> y(x)` has a non-positive Jacobian determinant
/// somewhere, i.e. the surface has stopped being the graph of an
/// orientation-preserving local diffeomorphism.
pub(crate) fn check_graph(geom: &GeometryFields) -> Result<()> {
    for p in 0..geom.len() {
        let t0 = geom.tangent(p, 0);
        let t1 = geom.tangent(p, 1);
        let first = t0[0] * t1[1] - t0[1] * t1[0];
        let det = (t0[2] * t1[3] - t0[3] * t1[2]) / first;
        if !(first > GRAPH_DET_FLOOR && det > GRAPH_DET_FLOOR) {
            return Err(FlowError::GraphCondition { point: p, det: det.min(first) });
        }
    }
    Ok(())
}

/// One RK4 step of the map-graph flow.
pub fn map_graph_mcf_step(u: &DisplacementField, dt: f64) -> Result<DisplacementField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(FlowError::Domain(format!("dt must be positive, got {dt}")));
    }
    let imm = u.graph_immersion()?;
    let geom = geometry_fields(&imm)?;
    check_graph(&geom)?;
    let next = rk4_step(&imm, &geom, FlowMode::MapGraph, 0.0, dt)?;
    DisplacementField::from_graph(&next, u.linear)
}
