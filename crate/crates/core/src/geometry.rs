//! Induced metric, normal projection, second fundamental form and mean
//! curvature of a discrete immersion.
//!
//! The second fundamental form is kept ambient-valued: `II_ij` is the normal
//! projection of the coordinate second derivative `d^2 F / dx^i dx^j`, stored
//! as an `N`-vector per unordered index pair. The mean curvature vector is its
//! metric trace `H = g^ij II_ij`, which for a flat ambient is also the
//! Laplace-Beltrami operator applied to the position vector.

use rayon::prelude::*;

use crate::error::{FlowError, Result};
use crate::grid::{pair_count, pair_index, Jet, ParamGrid, MAX_AMBIENT_DIM};
use crate::immersion::Immersion;

/// Immersion threshold on `det g`.
pub const DEGENERATE_DET: f64 = 1e-14;

type Vector = [f64; MAX_AMBIENT_DIM];

/// Induced metric at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricAt {
    pub g: [[f64; 2]; 2],
    pub g_inv: [[f64; 2]; 2],
    pub sqrt_det_g: f64,
}

impl MetricAt {
    fn from_tangents(tangents: &[Vector; 2], n: usize, dim: usize, point: usize) -> Result<Self> {
        let mut g = [[0.0; 2]; 2];
        for i in 0..n {
            for j in i..n {
                let v = dot(&tangents[i][..dim], &tangents[j][..dim]);
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        let det = if n == 1 { g[0][0] } else { g[0][0] * g[1][1] - g[0][1] * g[1][0] };
        if !(det > DEGENERATE_DET) {
            return Err(FlowError::DegenerateMetric { point, det });
        }
        let g_inv = if n == 1 {
            [[1.0 / det, 0.0], [0.0, 0.0]]
        } else {
            [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]]
        };
        Ok(MetricAt { g, g_inv, sqrt_det_g: det.sqrt() })
    }
}

/// Every geometric quantity at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointGeometry {
    /// `dF/dx^i`.
    pub tangents: [Vector; 2],
    pub metric: MetricAt,
    /// `II_ij`, packed by [`pair_index`].
    pub second_form: [Vector; 3],
    pub mean_curvature: Vector,
    pub norm2_ii: f64,
    pub norm2_h: f64,
    /// Contracted Christoffel symbols `g^ij Gamma^k_ij`.
    pub trace_christoffel: [f64; 2],
}

impl PointGeometry {
    fn from_jet(jet: &Jet, n: usize, dim: usize, point: usize) -> Result<Self> {
        let metric = MetricAt::from_tangents(&jet.first, n, dim, point)?;
        let gi = metric.g_inv;
        let pairs = pair_count(n);

        let mut second_form = [[0.0; MAX_AMBIENT_DIM]; 3];
        let mut raw_trace = [0.0; MAX_AMBIENT_DIM];
        let mut mean_curvature = [0.0; MAX_AMBIENT_DIM];
        for i in 0..n {
            for j in 0..n {
                let k = pair_index(n, i, j);
                for a in 0..dim {
                    raw_trace[a] += gi[i][j] * jet.second[k][a];
                }
            }
        }
        for k in 0..pairs {
            second_form[k] = project_normal(&jet.second[k], &jet.first, &gi, n, dim);
        }
        for i in 0..n {
            for j in 0..n {
                let k = pair_index(n, i, j);
                for a in 0..dim {
                    mean_curvature[a] += gi[i][j] * second_form[k][a];
                }
            }
        }

        let mut norm2_ii = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let w = gi[i][k] * gi[j][l];
                        if w != 0.0 {
                            norm2_ii += w
                                * dot(
                                    &second_form[pair_index(n, i, j)][..dim],
                                    &second_form[pair_index(n, k, l)][..dim],
                                );
                        }
                    }
                }
            }
        }
        let norm2_h = dot(&mean_curvature[..dim], &mean_curvature[..dim]);

        let mut tangential = [0.0; 2];
        for l in 0..n {
            tangential[l] = dot(&raw_trace[..dim], &jet.first[l][..dim]);
        }
        let mut trace_christoffel = [0.0; 2];
        for k in 0..n {
            for l in 0..n {
                trace_christoffel[k] += gi[k][l] * tangential[l];
            }
        }

        Ok(PointGeometry {
            tangents: jet.first,
            metric,
            second_form,
            mean_curvature,
            norm2_ii,
            norm2_h,
            trace_christoffel,
        })
    }
}

/// Per-point geometry of a whole immersion.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryFields {
    n: usize,
    ambient_dim: usize,
    points: Vec<PointGeometry>,
}

impl GeometryFields {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[PointGeometry] {
        &self.points
    }

    pub fn at(&self, p: usize) -> &PointGeometry {
        &self.points[p]
    }

    pub fn tangent(&self, p: usize, i: usize) -> &[f64] {
        &self.points[p].tangents[i][..self.ambient_dim]
    }

    pub fn second_form(&self, p: usize, i: usize, j: usize) -> &[f64] {
        &self.points[p].second_form[pair_index(self.n, i, j)][..self.ambient_dim]
    }

    pub fn mean_curvature(&self, p: usize) -> &[f64] {
        &self.points[p].mean_curvature[..self.ambient_dim]
    }

    /// Normal component of the ambient vector `v` at point `p`.
    pub fn normal_part(&self, p: usize, v: &[f64]) -> Vec<f64> {
        let pg = &self.points[p];
        let mut vv = [0.0; MAX_AMBIENT_DIM];
        vv[..self.ambient_dim].copy_from_slice(&v[..self.ambient_dim]);
        project_normal(&vv, &pg.tangents, &pg.metric.g_inv, self.n, self.ambient_dim)[..self.ambient_dim].to_vec()
    }

    pub fn sup_norm2_ii(&self) -> f64 {
        self.points.iter().map(|g| g.norm2_ii).fold(0.0, f64::max)
    }

    pub fn sup_norm2_h(&self) -> f64 {
        self.points.iter().map(|g| g.norm2_h).fold(0.0, f64::max)
    }

    /// Quadrature of `f` against the induced area element.
    pub fn integrate(&self, grid: &ParamGrid, f: impl Fn(usize, &PointGeometry) -> f64) -> f64 {
        self.points
            .iter()
            .enumerate()
            .map(|(p, g)| f(p, g) * g.metric.sqrt_det_g * grid.quadrature_weight(p))
            .sum()
    }

    /// `Vol = sum sqrt(det g) * cell volume`.
    pub fn volume(&self, grid: &ParamGrid) -> f64 {
        self.integrate(grid, |_, _| 1.0)
    }

    /// `int |H|^2 dmu`.
    pub fn total_mean_curvature(&self, grid: &ParamGrid) -> f64 {
        self.integrate(grid, |_, g| g.norm2_h)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_normal(v: &Vector, tangents: &[Vector; 2], g_inv: &[[f64; 2]; 2], n: usize, dim: usize) -> Vector {
    let mut c = [0.0; 2];
    for k in 0..n {
        c[k] = dot(&v[..dim], &tangents[k][..dim]);
    }
    let mut out = *v;
    for k in 0..n {
        for l in 0..n {
            let coef = c[k] * g_inv[k][l];
            for a in 0..dim {
                out[a] -= coef * tangents[l][a];
            }
        }
    }
    out
}

/// Points per parallel work item; smaller grids stay on one thread.
const PAR_MIN_LEN: usize = 1024;

/// Evaluates `f` on the jet of every point, in parallel for large grids.
/// Fails with the lowest-index error.
fn per_point<T: Send>(imm: &Immersion, f: impl Fn(usize, &Jet) -> Result<T> + Sync) -> Result<Vec<T>> {
    let stencils = imm.grid().stencils();
    let dim = imm.ambient_dim();
    let eval = |p: usize| f(p, &stencils.jet(imm.positions(), dim, imm.winding(), p));
    if imm.len() < 2 * PAR_MIN_LEN {
        (0..imm.len()).map(eval).collect()
    } else {
        let out: Vec<Result<T>> = (0..imm.len()).into_par_iter().with_min_len(PAR_MIN_LEN).map(eval).collect();
        out.into_iter().collect()
    }
}

/// Metric, inverse and area element at every point.
pub fn induced_metric(imm: &Immersion) -> Result<Vec<MetricAt>> {
    let (n, dim) = (imm.n(), imm.ambient_dim());
    per_point(imm, |p, jet| MetricAt::from_tangents(&jet.first, n, dim, p))
}

/// Normal component `V - <V, F_k> g^kl F_l` of an ambient vector at one point.
pub fn normal_project(imm: &Immersion, point: usize, v: &[f64]) -> Result<Vec<f64>> {
    let dim = imm.ambient_dim();
    if v.len() != dim {
        return Err(FlowError::Domain(format!("vector has {} components, ambient has {dim}", v.len())));
    }
    if point >= imm.len() {
        return Err(FlowError::Domain(format!("point {point} out of range")));
    }
    let jet = imm.grid().stencils().jet(imm.positions(), dim, imm.winding(), point);
    let metric = MetricAt::from_tangents(&jet.first, imm.n(), dim, point)?;
    let mut vv = [0.0; MAX_AMBIENT_DIM];
    vv[..dim].copy_from_slice(v);
    Ok(project_normal(&vv, &jet.first, &metric.g_inv, imm.n(), dim)[..dim].to_vec())
}

/// Full geometry of an immersion. Fails with the lowest-index degenerate point.
pub fn geometry_fields(imm: &Immersion) -> Result<GeometryFields> {
    let (n, dim) = (imm.n(), imm.ambient_dim());
    let points = per_point(imm, |p, jet| PointGeometry::from_jet(jet, n, dim, p))?;
    Ok(GeometryFields { n, ambient_dim: dim, points })
}

pub fn volume(imm: &Immersion) -> Result<f64> {
    let metric = induced_metric(imm)?;
    Ok(metric
        .iter()
        .enumerate()
        .map(|(p, m)| m.sqrt_det_g * imm.grid().quadrature_weight(p))
        .sum())
}

/// Discrete Laplace-Beltrami operator of the induced metric applied to a
/// scalar field: `g^ij (f_ij - Gamma^k_ij f_k)`.
pub fn laplace_beltrami(grid: &ParamGrid, geom: &GeometryFields, field: &[f64]) -> Vec<f64> {
    let stencils = grid.stencils();
    let n = grid.n();
    (0..grid.len())
        .map(|p| {
            let jet = stencils.scalar_jet(field, p);
            let pg = geom.at(p);
            let gi = pg.metric.g_inv;
            let mut out = 0.0;
            for i in 0..n {
                for j in 0..n {
                    out += gi[i][j] * jet.second[pair_index(n, i, j)];
                }
                out -= pg.trace_christoffel[i] * jet.first[i];
            }
            out
        })
        .collect()
}
