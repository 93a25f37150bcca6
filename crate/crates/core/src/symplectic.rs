//! Diagnostics for graphs of area-preserving torus maps in the flat 4-torus.
//!
//! On `R^4 = R^2 x R^2` with coordinates `(x1, x2, y1, y2)` let `w1 = dx1^dx2`
//! and `w2 = dy1^dy2`. The graph of a map `f` is Lagrangian for
//! `w1 - w2` exactly when `f` preserves area, and `w1 + w2` restricted to
//! the graph measures how far it is from being vertical. Both restrictions
//! are reported as scalars by the Hodge star of the surface (`eta' ` and
//! `eta`).

use crate::error::{FlowError, Result};
use crate::flow::{DisplacementField, FlowMode};
use crate::geometry::{geometry_fields, laplace_beltrami, GeometryFields};
use crate::grid::ParamGrid;
use crate::immersion::Immersion;
use crate::track::SpaceTimeTrack;

pub type Form = [[f64; 4]; 4];

/// Tolerance on `det Du` accepted by [`eta_from_jacobian`].
pub const SYMPLECTIC_DET_TOL: f64 = 1e-10;
/// Largest `|*w'|` for which a surface counts as Lagrangian.
pub const LAGRANGIAN_TOL: f64 = 1e-4;

/// The two parallel Kähler-type forms `w1 - w2`, `w1 + w2` and their complex
/// structures, with `w(X, Y) = <J X, Y>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KahlerFormPair {
    pub omega_minus: Form,
    pub omega_plus: Form,
    pub j_minus: Form,
    pub j_plus: Form,
}

impl KahlerFormPair {
    pub fn standard() -> Self {
        let mut minus = [[0.0; 4]; 4];
        let mut plus = [[0.0; 4]; 4];
        minus[0][1] = 1.0;
        minus[1][0] = -1.0;
        minus[2][3] = -1.0;
        minus[3][2] = 1.0;
        plus[0][1] = 1.0;
        plus[1][0] = -1.0;
        plus[2][3] = 1.0;
        plus[3][2] = -1.0;
        KahlerFormPair { omega_minus: minus, omega_plus: plus, j_minus: transpose(&minus), j_plus: transpose(&plus) }
    }
}

impl Default for KahlerFormPair {
    fn default() -> Self {
        Self::standard()
    }
}

fn transpose(m: &Form) -> Form {
    let mut t = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            t[a][b] = m[b][a];
        }
    }
    t
}

/// `w(X, Y) = X^T W Y`.
pub fn form_value(w: &Form, x: &[f64], y: &[f64]) -> f64 {
    let mut out = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            out += x[a] * w[a][b] * y[b];
        }
    }
    out
}

pub fn apply(m: &Form, x: &[f64]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for a in 0..4 {
        for b in 0..4 {
            out[a] += m[a][b] * x[b];
        }
    }
    out
}

fn check_surface_in_4(geom: &GeometryFields) -> Result<()> {
    if geom.n() != 2 || geom.ambient_dim() != 4 {
        return Err(FlowError::Domain("expected a surface in a 4-dimensional ambient".into()));
    }
    Ok(())
}

/// `*w = w(F_1, F_2) / sqrt(det g)` at every point.
pub fn eta_field(geom: &GeometryFields, w: &Form) -> Result<Vec<f64>> {
    check_surface_in_4(geom)?;
    Ok((0..geom.len())
        .map(|p| form_value(w, geom.tangent(p, 0), geom.tangent(p, 1)) / geom.at(p).metric.sqrt_det_g)
        .collect())
}

/// Hodge star of a constant 2-form restricted to a surface in `R^4`.
pub fn hodge_star_form(imm: &Immersion, w: &Form) -> Result<Vec<f64>> {
    eta_field(&geometry_fields(imm)?, w)
}

/// `eta = 2 / sqrt(2 + |Du|_F^2)` for an area-preserving Jacobian.
pub fn eta_from_jacobian(j: &[[f64; 2]; 2]) -> Result<f64> {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if (det - 1.0).abs() > SYMPLECTIC_DET_TOL {
        return Err(FlowError::NonSymplecticJacobian { det });
    }
    let frob2: f64 = j.iter().flatten().map(|v| v * v).sum();
    Ok(2.0 / (2.0 + frob2).sqrt())
}

/// Solves `alpha / sqrt(1 + alpha^2) = m` for `m` in `(0, 1)`.
pub fn alpha_from_min_eta(m: f64) -> Result<f64> {
    if !(m > 0.0 && m < 1.0) {
        return Err(FlowError::Domain(format!("minimum eta must lie in (0, 1), got {m}")));
    }
    Ok(m / (1.0 - m * m).sqrt())
}

/// `alpha e^{ct} / sqrt(1 + alpha^2 e^{2ct})`.
pub fn eta_lower_bound(alpha: f64, c: f64, t: f64) -> f64 {
    let a = alpha * (c * t).exp();
    if a > 1e8 {
        1.0 / (1.0 + 1.0 / (a * a)).sqrt()
    } else {
        a / (1.0 + a * a).sqrt()
    }
}

/// `max_p (|H|^2 - 4/3 |II|^2)`, defined on Lagrangian surfaces only.
pub fn pinching_check(geom: &GeometryFields) -> Result<f64> {
    let forms = KahlerFormPair::standard();
    let sup = eta_field(geom, &forms.omega_minus)?.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(sup < LAGRANGIAN_TOL) {
        return Err(FlowError::NotLagrangian { sup });
    }
    Ok(geom.points().iter().map(|g| g.norm2_h - 4.0 / 3.0 * g.norm2_ii).fold(f64::NEG_INFINITY, f64::max))
}

/// `C(X, Y, Z) = <II(X, Y), J Z>` for tangent vectors given in coordinate
/// components.
pub fn cubic_form(geom: &GeometryFields, p: usize, j: &Form, x: [f64; 2], y: [f64; 2], z: [f64; 2]) -> f64 {
    let mut ii = [0.0; 4];
    for i in 0..2 {
        for k in 0..2 {
            let s = geom.second_form(p, i, k);
            for a in 0..4 {
                ii[a] += x[i] * y[k] * s[a];
            }
        }
    }
    let mut zv = [0.0; 4];
    for i in 0..2 {
        for (a, t) in geom.tangent(p, i).iter().enumerate() {
            zv[a] += z[i] * t;
        }
    }
    let jz = apply(j, &zv);
    ii.iter().zip(&jz).map(|(a, b)| a * b).sum()
}

/// Triple of tangent vectors in coordinate components.
pub type TangentTriple = ([f64; 2], [f64; 2], [f64; 2]);

/// Largest `|C(X,Y,Z) - C(X,Z,Y)|` and `|C(X,Y,Z) - C(Z,Y,X)|` over the given
/// triples at every point, relative to `|X||Y||Z|`.
pub fn cubic_form_asymmetry(geom: &GeometryFields, triples: &[TangentTriple]) -> Result<f64> {
    check_surface_in_4(geom)?;
    let j = KahlerFormPair::standard().j_minus;
    let norm = |w: [f64; 2]| (w[0] * w[0] + w[1] * w[1]).sqrt();
    let mut worst: f64 = 0.0;
    for p in 0..geom.len() {
        for &(x, y, z) in triples {
            let scale = norm(x) * norm(y) * norm(z);
            if scale < 1e-12 {
                continue;
            }
            let c = cubic_form(geom, p, &j, x, y, z);
            let d1 = (c - cubic_form(geom, p, &j, x, z, y)).abs();
            let d2 = (c - cubic_form(geom, p, &j, z, y, x)).abs();
            worst = worst.max(d1.max(d2) / scale);
        }
    }
    Ok(worst)
}

/// `int (|II|^2 - |H|^2) dmu`, which vanishes on a closed surface of torus
/// type in flat space.
pub fn gauss_bonnet_gap(geom: &GeometryFields, grid: &ParamGrid) -> f64 {
    geom.integrate(grid, |_, g| g.norm2_ii - g.norm2_h)
}

/// One shear factor: along `XAxis`, `(x, y) -> (x + a sin(2 pi k y / Ly), y)`;
/// along `YAxis`, `(x, y) -> (x, y + a sin(2 pi k x / Lx))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shear {
    pub axis: ShearAxis,
    pub amplitude: f64,
    pub frequency: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShearAxis {
    X,
    Y,
}

/// A torus map `x -> A x + u(x)` with its Jacobian at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticState {
    pub map: DisplacementField,
    /// `A + Du` per point.
    pub jacobian: Vec<[[f64; 2]; 2]>,
}

/// Composes exact shears (applied in list order) into an area-preserving map
/// of the torus with the grid's periods. Jacobians are propagated by the
/// chain rule, so `det = 1` up to rounding at every point.
pub fn make_area_preserving_map(grid: &ParamGrid, shears: &[Shear]) -> Result<SymplecticState> {
    if shears.iter().any(|s| !s.amplitude.is_finite()) {
        return Err(FlowError::Domain("shear amplitudes must be finite".into()));
    }
    if grid.n() != 2 || !grid.is_fully_periodic() {
        return Err(FlowError::InvalidGrid("torus maps need a fully periodic 2-D grid".into()));
    }
    let periods = [grid.axis(0).extent, grid.axis(1).extent];
    let mut values = Vec::with_capacity(2 * grid.len());
    let mut jacobian = Vec::with_capacity(grid.len());
    for p in 0..grid.len() {
        let x = grid.coordinates(p);
        let mut y = x;
        let mut jac = [[1.0, 0.0], [0.0, 1.0]];
        for s in shears {
            let (src, dst) = match s.axis {
                ShearAxis::X => (1, 0),
                ShearAxis::Y => (0, 1),
            };
            let w = std::f64::consts::TAU * s.frequency as f64 / periods[src];
            let slope = s.amplitude * w * (w * y[src]).cos();
            y[dst] += s.amplitude * (w * y[src]).sin();
            // row dst gains slope times row src
            for c in 0..2 {
                jac[dst][c] += slope * jac[src][c];
            }
        }
        values.push(y[0] - x[0]);
        values.push(y[1] - x[1]);
        jacobian.push(jac);
    }
    let map = DisplacementField::new(grid.clone(), [[1.0, 0.0], [0.0, 1.0]], values)?;
    Ok(SymplecticState { map, jacobian })
}

impl SymplecticState {
    /// Jacobians by finite differences of the displacement.
    pub fn from_map(map: DisplacementField) -> Self {
        let grid = map.grid();
        let stencils = grid.stencils();
        let a = map.linear();
        let comps: [Vec<f64>; 2] = [
            map.values().iter().step_by(2).copied().collect(),
            map.values().iter().skip(1).step_by(2).copied().collect(),
        ];
        let jacobian = (0..grid.len())
            .map(|p| {
                let mut j = a;
                for (r, comp) in comps.iter().enumerate() {
                    let jet = stencils.scalar_jet(comp, p);
                    j[r][0] += jet.first[0];
                    j[r][1] += jet.first[1];
                }
                j
            })
            .collect();
        SymplecticState { map, jacobian }
    }

    pub fn graph_immersion(&self) -> Result<Immersion> {
        self.map.graph_immersion()
    }

    /// `eta` from the stored Jacobians.
    pub fn eta_from_jacobians(&self) -> Result<Vec<f64>> {
        self.jacobian.iter().map(eta_from_jacobian).collect()
    }

    pub fn min_det(&self) -> f64 {
        self.jacobian.iter().map(|j| j[0][0] * j[1][1] - j[0][1] * j[1][0]).fold(f64::INFINITY, f64::min)
    }
}

/// Grid average `A` of the Jacobian and `max_p |Dv(p) - A|_F`.
pub fn linearity_deviation(state: &SymplecticState) -> ([[f64; 2]; 2], f64) {
    let m = state.jacobian.len() as f64;
    let mut avg = [[0.0; 2]; 2];
    for j in &state.jacobian {
        for r in 0..2 {
            for c in 0..2 {
                avg[r][c] += j[r][c] / m;
            }
        }
    }
    let dev = state
        .jacobian
        .iter()
        .map(|j| {
            let mut s = 0.0;
            for r in 0..2 {
                for c in 0..2 {
                    s += (j[r][c] - avg[r][c]).powi(2);
                }
            }
            s.sqrt()
        })
        .fold(0.0, f64::max);
    (avg, dev)
}

/// Per-snapshot `eta` and `eta'` statistics of a surface track in `R^4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaSample {
    pub time: f64,
    pub min_eta: f64,
    pub max_abs_eta_prime: f64,
}

pub fn eta_series(track: &SpaceTimeTrack) -> Result<Vec<EtaSample>> {
    let forms = KahlerFormPair::standard();
    track
        .iter()
        .map(|item| {
            let (time, imm) = item?;
            let geom = geometry_fields(&imm)?;
            let eta = eta_field(&geom, &forms.omega_plus)?;
            let eta_prime = eta_field(&geom, &forms.omega_minus)?;
            Ok(EtaSample {
                time,
                min_eta: eta.iter().copied().fold(f64::INFINITY, f64::min),
                max_abs_eta_prime: eta_prime.iter().map(|v| v.abs()).fold(0.0, f64::max),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSample {
    pub time: f64,
    pub residual: f64,
}

/// Sup-norm defect of
/// `d eta/dt = Lap eta + eta (2|II|^2 - |H|^2) + c eta (1 - eta^2)` at every
/// interior snapshot, with a centered difference in time. For map-graph
/// tracks the reparametrization adds the transport term `-H^i d_i eta`.
pub fn eta_evolution_residual(track: &SpaceTimeTrack, mode: FlowMode, c: f64) -> Result<Vec<ResidualSample>> {
    let forms = KahlerFormPair::standard();
    let grid = track.template().grid().clone();
    let stencils = grid.stencils();
    let load = |k: usize| -> Result<(GeometryFields, Vec<f64>)> {
        let geom = geometry_fields(&track.immersion(k)?)?;
        let eta = eta_field(&geom, &forms.omega_plus)?;
        Ok((geom, eta))
    };
    let mut out = Vec::new();
    if track.len() < 3 {
        return Ok(out);
    }
    let mut before = load(0)?.1;
    let mut current = load(1)?;
    for k in 1..track.len() - 1 {
        let next = load(k + 1)?;
        let (geom, eta) = &current;
        let span = track.time(k + 1) - track.time(k - 1);
        let lap = laplace_beltrami(&grid, geom, eta);
        let mut worst: f64 = 0.0;
        for p in 0..grid.len() {
            let dt_eta = (next.1[p] - before[p]) / span;
            let g = geom.at(p);
            let mut rhs = lap[p] + eta[p] * (2.0 * g.norm2_ii - g.norm2_h) + c * eta[p] * (1.0 - eta[p] * eta[p]);
            if mode == FlowMode::MapGraph {
                let h = geom.mean_curvature(p);
                let jet = stencils.scalar_jet(eta, p);
                rhs -= h[0] * jet.first[0] + h[1] * jet.first[1];
            }
            worst = worst.max((dt_eta - rhs).abs());
        }
        out.push(ResidualSample { time: track.time(k), residual: worst });
        before = std::mem::replace(&mut current, next).1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub time: f64,
    /// `int |H|^2 / eta dmu`.
    pub weighted: f64,
    /// `int |H|^2 dmu`.
    pub plain: f64,
    pub min_eta: f64,
}

/// Weighted energy `int |H|^2 / eta dmu` at every snapshot.
pub fn weighted_energy(track: &SpaceTimeTrack) -> Result<Vec<EnergySample>> {
    let forms = KahlerFormPair::standard();
    let grid = track.template().grid().clone();
    track
        .iter()
        .map(|item| {
            let (time, imm) = item?;
            let geom = geometry_fields(&imm)?;
            let eta = eta_field(&geom, &forms.omega_plus)?;
            if let Some((point, &e)) = eta.iter().enumerate().find(|(_, e)| !(**e > 0.0)) {
                return Err(FlowError::NonPositiveEta { point, eta: e });
            }
            Ok(EnergySample {
                time,
                weighted: geom.integrate(&grid, |p, g| g.norm2_h / eta[p]),
                plain: geom.total_mean_curvature(&grid),
                min_eta: eta.iter().copied().fold(f64::INFINITY, f64::min),
            })
        })
        .collect()
}
