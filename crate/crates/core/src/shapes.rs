//! Standard initial immersions on periodic charts.

use std::f64::consts::TAU;

use crate::error::{FlowError, Result};
use crate::grid::{Axis, ParamGrid, StencilOrder};
use crate::immersion::{Ambient, Immersion};

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(FlowError::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Round circle of radius `r` about the origin in the first two coordinates
/// of `R^N`, parametrized by angle.
pub fn circle(r: f64, ambient_dim: usize, points: usize) -> Result<Immersion> {
    circle_about(&vec![0.0; ambient_dim], r, points)
}

/// Round circle of radius `r` about `center`, in the plane of the first two
/// coordinates.
pub fn circle_about(center: &[f64], r: f64, points: usize) -> Result<Immersion> {
    positive("radius", r)?;
    let grid = ParamGrid::periodic(&[points], &[TAU])?;
    Immersion::from_fn(grid, center.len(), Ambient::Euclidean, |x, out| {
        out.copy_from_slice(center);
        out[0] += r * x[0].cos();
        out[1] += r * x[0].sin();
    })
}

/// Axis-aligned ellipse with semi-axes `a` (first coordinate) and `b`.
pub fn ellipse(a: f64, b: f64, ambient_dim: usize, points: usize) -> Result<Immersion> {
    positive("semi-axis", a)?;
    positive("semi-axis", b)?;
    let grid = ParamGrid::periodic(&[points], &[TAU])?;
    Immersion::from_fn(grid, ambient_dim, Ambient::Euclidean, |x, out| {
        out.fill(0.0);
        out[0] = a * x[0].cos();
        out[1] = b * x[0].sin();
    })
}

/// Product of circles `(r1 cos x, r1 sin x, r2 cos y, r2 sin y)` in `R^4`.
pub fn product_torus(r1: f64, r2: f64, points_x: usize, points_y: usize) -> Result<Immersion> {
    positive("radius", r1)?;
    positive("radius", r2)?;
    let grid = ParamGrid::periodic(&[points_x, points_y], &[TAU, TAU])?;
    Immersion::from_fn(grid, 4, Ambient::Euclidean, |x, out| {
        out[0] = r1 * x[0].cos();
        out[1] = r1 * x[0].sin();
        out[2] = r2 * x[1].cos();
        out[3] = r2 * x[1].sin();
    })
}

/// Periodic sample of the coordinate plane `{x^3 = ... = x^N = 0}` over the
/// square `[-side/2, side/2)^2`.
pub fn plane_patch(points: usize, ambient_dim: usize, side: f64) -> Result<Immersion> {
    positive("side", side)?;
    let axis = Axis { points, origin: -0.5 * side, extent: side, periodic: true };
    let grid = ParamGrid::new(vec![axis.clone(), axis], StencilOrder::Second)?;
    let imm = Immersion::from_fn(grid, ambient_dim, Ambient::Euclidean, |x, out| {
        out.fill(0.0);
        out[0] = x[0];
        out[1] = x[1];
    })?;
    let mut e0 = vec![0.0; ambient_dim];
    let mut e1 = vec![0.0; ambient_dim];
    e0[0] = side;
    e1[1] = side;
    imm.with_winding(0, &e0)?.with_winding(1, &e1)
}

/// The graph of `f = 0` over the unit periodic square.
pub fn flat_plane(points: usize, ambient_dim: usize) -> Result<Immersion> {
    plane_patch(points, ambient_dim, 1.0)
}
