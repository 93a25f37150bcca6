//! Blow-up analysis of space-time tracks: Gaussian density against the
//! backward heat kernel, its monotonicity ledger, parabolic dilation, type-I
//! rate fits and the `|F|^2 + 2nt` maximum-principle bound.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{FlowError, Result};
use crate::geometry::{geometry_fields, induced_metric};
use crate::immersion::{Ambient, Immersion};
use crate::track::{Snapshot, SpaceTimeTrack};

/// Number of trailing ledger entries used to extrapolate the density limit.
pub const LIMIT_WINDOW: usize = 5;
/// Fraction of trailing snapshots used by [`type1_diagnostic`].
pub const TYPE1_WINDOW_FRACTION: f64 = 0.2;
pub const TYPE1_MIN_POINTS: usize = 10;

/// Space-time point `(y0, t0)` at which the backward heat kernel is centered.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProbe {
    pub y0: Vec<f64>,
    pub t0: f64,
}

impl DensityProbe {
    pub fn new(y0: Vec<f64>, t0: f64) -> Self {
        DensityProbe { y0, t0 }
    }

    /// Probe at the origin of `R^N`.
    pub fn origin(ambient_dim: usize, t0: f64) -> Self {
        DensityProbe { y0: vec![0.0; ambient_dim], t0 }
    }
}

fn euclidean(imm: &Immersion) -> Result<()> {
    match imm.ambient() {
        Ambient::Euclidean => Ok(()),
        Ambient::FlatTorus { .. } => Err(FlowError::UnsupportedAmbient),
    }
}

/// `int rho dmu` for the kernel
/// `(4 pi (t0 - t))^{-n/2} exp(-|y - y0|^2 / 4(t0 - t))`, where `n` is the
/// dimension of the immersed manifold.
pub fn gaussian_density(imm: &Immersion, t: f64, probe: &DensityProbe) -> Result<f64> {
    euclidean(imm)?;
    if !(t < probe.t0) {
        return Err(FlowError::ProbeTime { t, t0: probe.t0 });
    }
    let dim = imm.ambient_dim();
    if probe.y0.len() != dim {
        return Err(FlowError::Domain(format!("probe has {} coordinates, ambient has {dim}", probe.y0.len())));
    }
    let tau = probe.t0 - t;
    let norm = (4.0 * PI * tau).powf(-(imm.n() as f64) / 2.0);
    let metric = induced_metric(imm)?;
    let grid = imm.grid();
    Ok((0..imm.len())
        .map(|p| {
            let d2: f64 = imm.point(p).iter().zip(&probe.y0).map(|(a, b)| (a - b) * (a - b)).sum();
            norm * (-d2 / (4.0 * tau)).exp() * metric[p].sqrt_det_g * grid.quadrature_weight(p)
        })
        .sum())
}

/// Density values along a track together with monotonicity flags and an
/// extrapolated limit.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityLedger {
    pub probe: DensityProbe,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Allowed increase between consecutive entries.
    pub slack: f64,
    /// Indices `k` with `values[k + 1] > values[k] + slack`.
    pub flags: Vec<usize>,
    pub limit: f64,
    pub limit_method: &'static str,
}

impl DensityLedger {
    /// Largest increase between consecutive entries (negative if strictly
    /// decreasing).
    pub fn max_increase(&self) -> f64 {
        self.values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_monotone(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Value at `x = 0` of the least-squares line through `(x, y)`.
fn linear_intercept(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Gaussian density at every snapshot of a Euclidean track. The limit at
/// `t0` is extrapolated linearly in `t0 - t` from the last
/// [`LIMIT_WINDOW`] entries.
pub fn monotonicity_ledger(track: &SpaceTimeTrack, probe: &DensityProbe, slack: f64) -> Result<DensityLedger> {
    euclidean(track.template())?;
    let values = (0..track.len())
        .into_par_iter()
        .map(|k| gaussian_density(&track.immersion(k)?, track.time(k), probe))
        .collect::<Result<Vec<f64>>>()?;
    let times = track.times();
    let flags = values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + slack)
        .map(|(k, _)| k)
        .collect();
    let start = values.len().saturating_sub(LIMIT_WINDOW);
    let tau: Vec<f64> = times[start..].iter().map(|t| probe.t0 - t).collect();
    let (limit, limit_method) = match linear_intercept(&tau, &values[start..]) {
        Some((c, _)) if values.len() >= 2 => (c, "linear-extrapolation-in-t0-minus-t"),
        _ => (*values.last().expect("tracks are non-empty"), "last-value"),
    };
    Ok(DensityLedger { probe: probe.clone(), times, values, slack, flags, limit, limit_method })
}

/// The track under `(y, t) -> (lambda (y - y0), lambda^2 (t - t0))`.
pub fn parabolic_dilate(track: &SpaceTimeTrack, probe: &DensityProbe, lambda: f64) -> Result<SpaceTimeTrack> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(FlowError::Domain(format!("dilation factor must be positive, got {lambda}")));
    }
    let template = track.template();
    euclidean(template)?;
    let dim = template.ambient_dim();
    if probe.y0.len() != dim {
        return Err(FlowError::Domain(format!("probe has {} coordinates, ambient has {dim}", probe.y0.len())));
    }
    let scale = |positions: &[f64]| -> Vec<f64> {
        positions.iter().enumerate().map(|(i, v)| lambda * (v - probe.y0[i % dim])).collect()
    };
    let mut new_template =
        Immersion::new(template.grid().clone(), dim, scale(template.positions()), Ambient::Euclidean)?;
    for axis in 0..template.n() {
        if template.grid().axis(axis).periodic {
            let jump: Vec<f64> = template.winding_of(axis).iter().map(|v| lambda * v).collect();
            new_template = new_template.with_winding(axis, &jump)?;
        }
    }
    let snapshots = track
        .snapshots()
        .iter()
        .map(|s| Snapshot { time: lambda * lambda * (s.time - probe.t0), positions: scale(&s.positions) })
        .collect();
    SpaceTimeTrack::from_parts(new_template, snapshots)
}

/// Outcome of fitting `sup |II|^2 <= C / (t0 - t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Type1Fit {
    pub t0: f64,
    /// Largest `sup|II|^2 (t0 - t)` over the fit window.
    pub c: f64,
    /// Index of the first snapshot in the fit window.
    pub window_start: usize,
    /// `(t, sup|II|^2)` for every snapshot.
    pub sup_ii: Vec<(f64, f64)>,
    /// `(t, sup|II|^2 (t0 - t))` for every snapshot.
    pub series: Vec<(f64, f64)>,
}

/// Fits `1 / sup|II|^2` linearly in `t` over the trailing window; the root of
/// the line estimates the singular time.
pub fn type1_diagnostic(track: &SpaceTimeTrack) -> Result<Type1Fit> {
    let sup_ii = (0..track.len())
        .into_par_iter()
        .map(|k| Ok((track.time(k), geometry_fields(&track.immersion(k)?)?.sup_norm2_ii())))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let len = sup_ii.len();
    let window = ((len as f64 * TYPE1_WINDOW_FRACTION).ceil() as usize).max(TYPE1_MIN_POINTS);
    if len < window {
        return Err(FlowError::FitFailure(format!("need at least {window} snapshots, track has {len}")));
    }
    let window_start = len - window;
    let t: Vec<f64> = sup_ii[window_start..].iter().map(|s| s.0).collect();
    let inv: Vec<f64> = sup_ii[window_start..].iter().map(|s| 1.0 / s.1).collect();
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(FlowError::FitFailure("second fundamental form vanishes in the fit window".into()));
    }
    let (intercept, slope) = linear_intercept(&t, &inv)
        .ok_or_else(|| FlowError::FitFailure("fit window has no time spread".into()))?;
    if !(slope < 0.0) || !intercept.is_finite() {
        return Err(FlowError::FitFailure(format!("1/sup|II|^2 is not decreasing (slope {slope})")));
    }
    let t0 = -intercept / slope;
    let series: Vec<(f64, f64)> = sup_ii.iter().map(|&(t, s)| (t, s * (t0 - t))).collect();
    let c = series[window_start..].iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(Type1Fit { t0, c, window_start, sup_ii, series })
}

/// `max (|F|^2 + 2nt - r0^2)` over all snapshots and points.
pub fn heat_bound_check(track: &SpaceTimeTrack, r0: f64) -> f64 {
    let dim = track.template().ambient_dim();
    let n = track.template().n() as f64;
    track
        .snapshots()
        .iter()
        .map(|s| {
            let r2 = s
                .positions
                .chunks(dim)
                .map(|x| x.iter().map(|v| v * v).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            r2 + 2.0 * n * s.time - r0 * r0
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::exact_circle_track;
    use crate::shapes;

    const CIRCLE_DENSITY: f64 = 1.520_346_901_066_281;

    #[test]
    fn circle_density_constant() {
        let track = exact_circle_track(1.0, 2, 256, 0.05, 0.45).unwrap().with_order(crate::StencilOrder::Fourth);
        let probe = DensityProbe::origin(2, 0.5);
        let ledger = monotonicity_ledger(&track, &probe, 1e-6).unwrap();
        for v in &ledger.values {
            assert!((v - CIRCLE_DENSITY).abs() < 1e-6);
        }
        assert!(ledger.is_monotone());
        assert!((ledger.limit - CIRCLE_DENSITY).abs() < 1e-6);
    }

    #[test]
    fn plane_density_is_one() {
        let plane = shapes::plane_patch(64, 3, 16.0).unwrap();
        let probe = DensityProbe::origin(3, 0.5);
        for t in [0.0, 0.3, 0.45] {
            assert!((gaussian_density(&plane, t, &probe).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn far_probe_density_vanishes() {
        let circle = shapes::circle_about(&[50.0, 0.0], 1.0, 64).unwrap();
        let probe = DensityProbe::origin(2, 1.0);
        assert!(gaussian_density(&circle, 0.0, &probe).unwrap() < 1e-6);
    }

    #[test]
    fn probe_time_and_ambient_errors() {
        let circle = shapes::circle(1.0, 2, 32).unwrap();
        let probe = DensityProbe::origin(2, 0.5);
        assert!(matches!(gaussian_density(&circle, 0.5, &probe), Err(FlowError::ProbeTime { .. })));
        let torus = crate::flow::DisplacementField::identity(crate::ParamGrid::periodic(&[8, 8], &[1.0, 1.0]).unwrap())
            .unwrap()
            .graph_immersion()
            .unwrap();
        let probe = DensityProbe::origin(4, 1.0);
        assert_eq!(gaussian_density(&torus, 0.0, &probe), Err(FlowError::UnsupportedAmbient));
    }

    #[test]
    fn identity_dilation() {
        let track = exact_circle_track(1.0, 2, 16, 0.1, 0.3).unwrap();
        let same = parabolic_dilate(&track, &DensityProbe::origin(2, 0.0), 1.0).unwrap();
        assert_eq!(same, track);
        assert!(parabolic_dilate(&track, &DensityProbe::origin(2, 0.0), -1.0).is_err());
    }

    #[test]
    fn dilated_circle_is_self_similar() {
        let track = exact_circle_track(1.0, 2, 64, 0.05, 0.45).unwrap();
        let dilated = parabolic_dilate(&track, &DensityProbe::origin(2, 0.5), 4.0).unwrap();
        for s in dilated.snapshots() {
            let r = (s.positions[0].powi(2) + s.positions[1].powi(2)).sqrt();
            assert!((r - (-2.0 * s.time).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn type1_on_exact_circle() {
        let track = exact_circle_track(1.0, 2, 128, 0.01, 0.49).unwrap();
        let fit = type1_diagnostic(&track).unwrap();
        // the discrete |II| carries a constant O(h^2) factor, which cancels in the root
        assert!((fit.t0 - 0.5).abs() < 1e-10);
        for (_, v) in &fit.series[fit.window_start..] {
            assert!((v - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn type1_fails_on_plane() {
        let plane = shapes::flat_plane(16, 3).unwrap();
        let mut track = SpaceTimeTrack::new(0.0, plane.clone());
        for k in 1..20 {
            track.push(k as f64 * 0.1, plane.positions().to_vec()).unwrap();
        }
        assert!(matches!(type1_diagnostic(&track), Err(FlowError::FitFailure(_))));
    }

    #[test]
    fn heat_bound_examples() {
        let track = exact_circle_track(1.0, 2, 64, 0.05, 0.45).unwrap();
        assert!(heat_bound_check(&track, 1.0).abs() < 1e-14);
        let plane = SpaceTimeTrack::new(0.0, shapes::flat_plane(16, 3).unwrap());
        assert!(heat_bound_check(&plane, 100.0) < 0.0);
    }
}
