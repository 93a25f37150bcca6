//! Structured parameter grids and their finite-difference stencils.
//!
//! A grid has one or two axes. Periodic axes sample `[origin, origin + extent)`
//! with `points` nodes, non-periodic axes sample the closed interval
//! `[origin, origin + extent]` including both endpoints. Derivatives are
//! centered wherever the stencil fits and one-sided near the ends of a
//! non-periodic axis.

use std::fmt;
use std::sync::Arc;

use crate::error::{FlowError, Result};

/// Largest ambient dimension supported by the fixed-size per-point buffers.
pub const MAX_AMBIENT_DIM: usize = 8;

/// Formal accuracy of the finite-difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum StencilOrder {
    /// Three-point centered differences.
    #[default]
    Second,
    /// Five-point centered differences.
    Fourth,
}

impl StencilOrder {
    pub fn accuracy(self) -> usize {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
        }
    }

    pub fn from_accuracy(order: usize) -> Option<Self> {
        match order {
            2 => Some(StencilOrder::Second),
            4 => Some(StencilOrder::Fourth),
            _ => None,
        }
    }

    fn half_width(self) -> usize {
        self.accuracy() / 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub points: usize,
    pub origin: f64,
    /// Period of a periodic axis, interval length of a non-periodic one.
    pub extent: f64,
    pub periodic: bool,
}

impl Axis {
    pub fn periodic(points: usize, period: f64) -> Self {
        Axis { points, origin: 0.0, extent: period, periodic: true }
    }

    pub fn interval(points: usize, start: f64, end: f64) -> Self {
        Axis { points, origin: start, extent: end - start, periodic: false }
    }

    pub fn spacing(&self) -> f64 {
        if self.periodic {
            self.extent / self.points as f64
        } else {
            self.extent / (self.points - 1) as f64
        }
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing()
    }

    /// Trapezoid weight of node `i` along this axis.
    fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if !self.periodic && (i == 0 || i + 1 == self.points) {
            0.5 * h
        } else {
            h
        }
    }
}

/// Parameter domain of an immersion: one or two axes plus the stencil order
/// used to differentiate fields sampled on it.
#[derive(Clone)]
pub struct ParamGrid {
    axes: Vec<Axis>,
    order: StencilOrder,
    stencils: Arc<DiffStencils>,
}

impl PartialEq for ParamGrid {
    fn eq(&self, other: &Self) -> bool {
        self.axes == other.axes && self.order == other.order
    }
}

impl fmt::Debug for ParamGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamGrid").field("axes", &self.axes).field("order", &self.order).finish()
    }
}

impl ParamGrid {
    pub fn new(axes: Vec<Axis>, order: StencilOrder) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(FlowError::InvalidGrid(format!(
                "parameter dimension must be 1 or 2, got {}",
                axes.len()
            )));
        }
        for (i, axis) in axes.iter().enumerate() {
            if axis.points < 8 {
                return Err(FlowError::InvalidGrid(format!(
                    "axis {i} has {} points, need at least 8",
                    axis.points
                )));
            }
            if !(axis.extent.is_finite() && axis.extent > 0.0) || !axis.origin.is_finite() {
                return Err(FlowError::InvalidGrid(format!(
                    "axis {i} has non-positive or non-finite extent {}",
                    axis.extent
                )));
            }
        }
        let stencils = Arc::new(DiffStencils::build(&axes, order));
        Ok(ParamGrid { axes, order, stencils })
    }

    /// Fully periodic grid with the given points and periods per axis.
    pub fn periodic(dims: &[usize], periods: &[f64]) -> Result<Self> {
        if dims.len() != periods.len() {
            return Err(FlowError::InvalidGrid("dims and periods differ in length".into()));
        }
        let axes = dims.iter().zip(periods).map(|(&d, &p)| Axis::periodic(d, p)).collect();
        Self::new(axes, StencilOrder::Second)
    }

    pub fn with_order(mut self, order: StencilOrder) -> Self {
        if order != self.order {
            self.order = order;
            self.stencils = Arc::new(DiffStencils::build(&self.axes, order));
        }
        self
    }

    pub fn order(&self) -> StencilOrder {
        self.order
    }

    pub fn n(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    pub fn spacing(&self, i: usize) -> f64 {
        self.axes[i].spacing()
    }

    pub fn min_spacing(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).fold(f64::INFINITY, f64::min)
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_fully_periodic(&self) -> bool {
        self.axes.iter().all(|a| a.periodic)
    }

    /// Row-major linear index; the last axis varies fastest.
    pub fn index(&self, multi: [usize; 2]) -> usize {
        match self.n() {
            1 => multi[0],
            _ => multi[0] * self.axes[1].points + multi[1],
        }
    }

    pub fn multi_index(&self, p: usize) -> [usize; 2] {
        match self.n() {
            1 => [p, 0],
            _ => {
                let d1 = self.axes[1].points;
                [p / d1, p % d1]
            }
        }
    }

    /// Parameter coordinates of point `p` (second entry is 0 when n = 1).
    pub fn coordinates(&self, p: usize) -> [f64; 2] {
        let m = self.multi_index(p);
        let mut x = [0.0; 2];
        for (i, axis) in self.axes.iter().enumerate() {
            x[i] = axis.coordinate(m[i]);
        }
        x
    }

    /// Quadrature weight of point `p`: the cell volume, halved per
    /// non-periodic boundary axis.
    pub fn quadrature_weight(&self, p: usize) -> f64 {
        let m = self.multi_index(p);
        self.axes.iter().enumerate().map(|(i, a)| a.weight(m[i])).product()
    }

    /// True if `p` lies on the boundary of a non-periodic axis.
    pub fn is_boundary(&self, p: usize) -> bool {
        let m = self.multi_index(p);
        self.axes
            .iter()
            .enumerate()
            .any(|(i, a)| !a.periodic && (m[i] == 0 || m[i] + 1 == a.points))
    }

    /// Derivative stencils, built once per grid.
    pub fn stencils(&self) -> &DiffStencils {
        &self.stencils
    }
}

/// One stencil entry: the neighbour index along the axis, how many times the
/// neighbour wrapped around a periodic axis (signed), and the weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub index: usize,
    pub wraps: i32,
    pub weight: f64,
}

#[derive(Debug, Clone)]
struct AxisStencils {
    first: Vec<Vec<Tap>>,
    second: Vec<Vec<Tap>>,
}

impl AxisStencils {
    fn new(axis: &Axis, order: StencilOrder) -> Self {
        let h = axis.spacing();
        let m = axis.points as isize;
        let w = order.half_width() as isize;
        let mut first = Vec::with_capacity(axis.points);
        let mut second = Vec::with_capacity(axis.points);
        for i in 0..m {
            for (deriv, out) in [(1usize, &mut first), (2usize, &mut second)] {
                let offsets: Vec<isize> = if axis.periodic {
                    (-w..=w).collect()
                } else {
                    // One extra node keeps one-sided second derivatives at full order.
                    let size = 2 * w + 1 + if deriv == 2 { 1 } else { 0 };
                    let lo = (i - w).clamp(0, m - size);
                    (lo - i..lo - i + size).collect()
                };
                let nodes: Vec<f64> = offsets.iter().map(|&o| o as f64 * h).collect();
                let weights = fornberg_weights(0.0, &nodes, deriv);
                let taps = offsets
                    .iter()
                    .zip(weights)
                    .filter(|(_, wt)| *wt != 0.0)
                    .map(|(&o, weight)| {
                        let j = i + o;
                        let wraps = j.div_euclid(m) as i32;
                        Tap { index: j.rem_euclid(m) as usize, wraps, weight }
                    })
                    .collect();
                out.push(taps);
            }
        }
        AxisStencils { first, second }
    }
}

/// Precomputed first and second derivative stencils for every node of every
/// axis of a grid.
#[derive(Debug, Clone)]
pub struct DiffStencils {
    axes: Vec<AxisStencils>,
    dims: [usize; 2],
    n: usize,
}

impl DiffStencils {
    fn build(axes: &[Axis], order: StencilOrder) -> Self {
        let stencils = axes.iter().map(|a| AxisStencils::new(a, order)).collect();
        let mut dims = [1; 2];
        for (i, a) in axes.iter().enumerate() {
            dims[i] = a.points;
        }
        DiffStencils { axes: stencils, dims, n: axes.len() }
    }

    pub fn first(&self, axis: usize, i: usize) -> &[Tap] {
        &self.axes[axis].first[i]
    }

    pub fn second(&self, axis: usize, i: usize) -> &[Tap] {
        &self.axes[axis].second[i]
    }

    fn linear(&self, m: [usize; 2]) -> usize {
        if self.n == 1 {
            m[0]
        } else {
            m[0] * self.dims[1] + m[1]
        }
    }

    /// First and second partial derivatives of a `comps`-component field at
    /// point `p`. `winding[axis]` is the jump of the field across one period
    /// of that axis (zero for genuinely periodic fields).
    pub fn jet(
        &self,
        field: &[f64],
        comps: usize,
        winding: &[[f64; MAX_AMBIENT_DIM]; 2],
        p: usize,
    ) -> Jet {
        let m = if self.n == 1 { [p, 0] } else { [p / self.dims[1], p % self.dims[1]] };
        let mut jet = Jet::default();
        for axis in 0..self.n {
            let pair = pair_index(self.n, axis, axis);
            for (taps, out) in [
                (self.first(axis, m[axis]), &mut jet.first[axis]),
                (self.second(axis, m[axis]), &mut jet.second[pair]),
            ] {
                for tap in taps {
                    let mut q = m;
                    q[axis] = tap.index;
                    let base = self.linear(q) * comps;
                    let shift = tap.wraps as f64;
                    for c in 0..comps {
                        out[c] += tap.weight * (field[base + c] + shift * winding[axis][c]);
                    }
                }
            }
        }
        if self.n == 2 {
            let out = &mut jet.second[1];
            for a in self.first(0, m[0]) {
                for b in self.first(1, m[1]) {
                    let base = self.linear([a.index, b.index]) * comps;
                    let w = a.weight * b.weight;
                    let (sa, sb) = (a.wraps as f64, b.wraps as f64);
                    for c in 0..comps {
                        out[c] += w * (field[base + c] + sa * winding[0][c] + sb * winding[1][c]);
                    }
                }
            }
        }
        jet
    }

    /// Derivatives of a scalar field without winding.
    pub fn scalar_jet(&self, field: &[f64], p: usize) -> ScalarJet {
        let jet = self.jet(field, 1, &[[0.0; MAX_AMBIENT_DIM]; 2], p);
        ScalarJet {
            first: [jet.first[0][0], jet.first[1][0]],
            second: [jet.second[0][0], jet.second[1][0], jet.second[2][0]],
        }
    }
}

/// Index of the symmetric pair (i, j) in the packed second-derivative
/// layout: n = 1 uses slot 0; n = 2 uses (0,0) -> 0, (0,1) -> 1, (1,1) -> 2.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    if n == 1 {
        0
    } else {
        i + j
    }
}

/// Number of independent second derivatives for parameter dimension `n`.
pub fn pair_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// First and second derivatives of a vector field at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Jet {
    pub first: [[f64; MAX_AMBIENT_DIM]; 2],
    pub second: [[f64; MAX_AMBIENT_DIM]; 3],
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScalarJet {
    pub first: [f64; 2],
    /// Packed as in [`pair_index`].
    pub second: [f64; 3],
}

/// Finite-difference weights for the `deriv`-th derivative at `x0` from the
/// given nodes (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, nodes: &[f64], deriv: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; deriv + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[deriv]).collect()
}
