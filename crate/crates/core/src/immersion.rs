use crate::error::{FlowError, Result};
use crate::grid::{ParamGrid, StencilOrder, MAX_AMBIENT_DIM};

/// The space an immersion lives in. All supported ambients are flat, so the
/// ambient metric is the identity in every case.
#[derive(Debug, Clone, PartialEq)]
pub enum Ambient {
    Euclidean,
    /// `R^N` modulo the rectangular lattice with the given periods.
    FlatTorus { periods: Vec<f64> },
}

impl Ambient {
    pub fn is_euclidean(&self) -> bool {
        matches!(self, Ambient::Euclidean)
    }
}

/// A discrete map `F: grid -> R^N` (or into a flat torus, stored unwrapped).
///
/// Positions are point-major: component `A` of point `p` lives at
/// `positions[p * N + A]`. Along a periodic axis the sampled map may jump by
/// a fixed lattice vector per period (its *winding*); the graph of a torus map
/// `x -> x + u(x)` winds by `(e_i, e_i)` along axis `i` while `u` itself is
/// periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct Immersion {
    grid: ParamGrid,
    ambient_dim: usize,
    positions: Vec<f64>,
    ambient: Ambient,
    winding: [[f64; MAX_AMBIENT_DIM]; 2],
}

impl Immersion {
    pub fn new(grid: ParamGrid, ambient_dim: usize, positions: Vec<f64>, ambient: Ambient) -> Result<Self> {
        let n = grid.n();
        if ambient_dim < n + 1 || ambient_dim > MAX_AMBIENT_DIM {
            return Err(FlowError::InvalidImmersion(format!(
                "ambient dimension {ambient_dim} must lie in {}..={MAX_AMBIENT_DIM}",
                n + 1
            )));
        }
        if positions.len() != grid.len() * ambient_dim {
            return Err(FlowError::InvalidImmersion(format!(
                "expected {} coordinates, got {}",
                grid.len() * ambient_dim,
                positions.len()
            )));
        }
        if let Some(i) = positions.iter().position(|v| !v.is_finite()) {
            return Err(FlowError::InvalidImmersion(format!(
                "non-finite coordinate at point {}",
                i / ambient_dim
            )));
        }
        if let Ambient::FlatTorus { periods } = &ambient {
            if periods.len() != ambient_dim || periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
                return Err(FlowError::InvalidImmersion("torus needs one positive period per ambient axis".into()));
            }
        }
        Ok(Immersion { grid, ambient_dim, positions, ambient, winding: [[0.0; MAX_AMBIENT_DIM]; 2] })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(
        grid: ParamGrid,
        ambient_dim: usize,
        ambient: Ambient,
        f: impl Fn([f64; 2], &mut [f64]),
    ) -> Result<Self> {
        let mut positions = vec![0.0; grid.len() * ambient_dim];
        for (p, chunk) in positions.chunks_mut(ambient_dim).enumerate() {
            f(grid.coordinates(p), chunk);
        }
        Self::new(grid, ambient_dim, positions, ambient)
    }

    /// Sets the jump of the map across one period of `axis`.
    pub fn with_winding(mut self, axis: usize, jump: &[f64]) -> Result<Self> {
        if axis >= self.grid.n() || !self.grid.axis(axis).periodic {
            return Err(FlowError::InvalidImmersion(format!("axis {axis} is not a periodic axis")));
        }
        if jump.len() != self.ambient_dim {
            return Err(FlowError::InvalidImmersion("winding length must equal ambient dimension".into()));
        }
        self.winding[axis] = [0.0; MAX_AMBIENT_DIM];
        self.winding[axis][..jump.len()].copy_from_slice(jump);
        Ok(self)
    }

    /// Same grid, ambient and winding with new positions.
    pub fn with_positions(&self, positions: Vec<f64>) -> Result<Self> {
        let mut next = Self::new(self.grid.clone(), self.ambient_dim, positions, self.ambient.clone())?;
        next.winding = self.winding;
        Ok(next)
    }

    /// Switches the finite-difference order used on this immersion's grid.
    pub fn with_order(mut self, order: StencilOrder) -> Self {
        self.grid = self.grid.with_order(order);
        self
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }

    /// Parameter dimension.
    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn ambient(&self) -> &Ambient {
        &self.ambient
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn into_positions(self) -> Vec<f64> {
        self.positions
    }

    pub fn point(&self, p: usize) -> &[f64] {
        &self.positions[p * self.ambient_dim..(p + 1) * self.ambient_dim]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn winding(&self) -> &[[f64; MAX_AMBIENT_DIM]; 2] {
        &self.winding
    }

    pub fn winding_of(&self, axis: usize) -> &[f64] {
        &self.winding[axis][..self.ambient_dim]
    }

    /// Largest Euclidean norm of a position vector.
    pub fn max_radius(&self) -> f64 {
        self.positions
            .chunks(self.ambient_dim)
            .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}
