//! Closed-form solutions of mean curvature flow used as ground truth.

use std::f64::consts::FRAC_PI_2;

use crate::error::{FlowError, Result};
use crate::geometry::geometry_fields;
use crate::immersion::{Ambient, Immersion};
use crate::shapes;
use crate::track::SpaceTimeTrack;

/// A round `n`-sphere of radius `r0` in `R^N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkingSphereParams {
    pub r0: f64,
    pub n: usize,
    pub ambient_dim: usize,
}

impl ShrinkingSphereParams {
    pub fn new(r0: f64, n: usize, ambient_dim: usize) -> Result<Self> {
        if !(r0.is_finite() && r0 > 0.0) || n == 0 || ambient_dim <= n {
            return Err(FlowError::Domain(format!(
                "need r0 > 0, n >= 1 and N > n (got r0={r0}, n={n}, N={ambient_dim})"
            )));
        }
        Ok(ShrinkingSphereParams { r0, n, ambient_dim })
    }

    /// `r0^2 / 2n`.
    pub fn extinction_time(&self) -> f64 {
        self.r0 * self.r0 / (2.0 * self.n as f64)
    }
}

/// Radius `sqrt(r0^2 - 2nt)` of the shrinking sphere.
pub fn shrinking_radius(p: &ShrinkingSphereParams, t: f64) -> Result<f64> {
    let extinction = p.extinction_time();
    if !(t >= 0.0) {
        return Err(FlowError::Domain(format!("time must be non-negative, got {t}")));
    }
    if t >= extinction {
        return Err(FlowError::PastExtinction { t, extinction });
    }
    Ok((p.r0 * p.r0 - 2.0 * p.n as f64 * t).sqrt())
}

fn sample_times(cadence: f64, horizon: f64) -> Result<Vec<f64>> {
    if !(cadence.is_finite() && cadence > 0.0) || !(horizon.is_finite() && horizon >= 0.0) {
        return Err(FlowError::Domain("need cadence > 0 and a finite horizon >= 0".into()));
    }
    let mut times = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * cadence;
        if t >= horizon * (1.0 - 1e-14) {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(horizon);
    if times.len() > 1 && times[0] == horizon {
        times.truncate(1);
    }
    Ok(times)
}

/// Snapshots of the shrinking circle `sqrt(r0^2 - 2t) (cos x, sin x, 0, ...)`
/// in `R^N` at times `0, cadence, 2 cadence, ...` and at `horizon`.
pub fn exact_circle_track(r0: f64, ambient_dim: usize, points: usize, cadence: f64, horizon: f64) -> Result<SpaceTimeTrack> {
    let params = ShrinkingSphereParams::new(r0, 1, ambient_dim)?;
    let times = sample_times(cadence, horizon)?;
    let mut track: Option<SpaceTimeTrack> = None;
    for t in times {
        let imm = shapes::circle(shrinking_radius(&params, t)?, ambient_dim, points)?;
        match track.as_mut() {
            None => track = Some(SpaceTimeTrack::new(t, imm)),
            Some(tr) => tr.push(t, imm.into_positions())?,
        }
    }
    Ok(track.expect("at least one sample time"))
}

/// Snapshots of the product of two shrinking circles in `R^4`, radii
/// `sqrt(r_i^2 - 2t)`.
pub fn exact_product_torus_track(
    r1: f64,
    r2: f64,
    points: [usize; 2],
    cadence: f64,
    horizon: f64,
) -> Result<SpaceTimeTrack> {
    let p1 = ShrinkingSphereParams::new(r1, 1, 2)?;
    let p2 = ShrinkingSphereParams::new(r2, 1, 2)?;
    let times = sample_times(cadence, horizon)?;
    let mut track: Option<SpaceTimeTrack> = None;
    for t in times {
        let (a, b) = product_torus_radii(&p1, &p2, t)?;
        let imm = shapes::product_torus(a, b, points[0], points[1])?;
        match track.as_mut() {
            None => track = Some(SpaceTimeTrack::new(t, imm)),
            Some(tr) => tr.push(t, imm.into_positions())?,
        }
    }
    Ok(track.expect("at least one sample time"))
}

fn product_torus_radii(p1: &ShrinkingSphereParams, p2: &ShrinkingSphereParams, t: f64) -> Result<(f64, f64)> {
    let extinction = p1.extinction_time().min(p2.extinction_time());
    if t >= extinction {
        return Err(FlowError::PastExtinction { t, extinction });
    }
    Ok((shrinking_radius(p1, t)?, shrinking_radius(p2, t)?))
}

/// Radii of the exact product-torus flow at time `t`.
pub fn product_torus_radii_at(r1: f64, r2: f64, t: f64) -> Result<(f64, f64)> {
    product_torus_radii(&ShrinkingSphereParams::new(r1, 1, 2)?, &ShrinkingSphereParams::new(r2, 1, 2)?, t)
}

/// The translating graph `t - log cos x`, defined for `|x| < pi/2`.
pub fn grim_reaper(x: f64, t: f64) -> Result<f64> {
    if !(x.abs() < FRAC_PI_2) {
        return Err(FlowError::Domain(format!("grim reaper is defined for |x| < pi/2, got {x}")));
    }
    Ok(t - x.cos().ln())
}

/// `max_p |H - F^perp / (2s)|`: how far `imm` is from solving the
/// self-shrinker equation at rescaled time `s < 0`.
pub fn self_shrinker_residual(imm: &Immersion, s: f64) -> Result<f64> {
    if !(s < 0.0 && s.is_finite()) {
        return Err(FlowError::Domain(format!("self-shrinker time must be negative, got {s}")));
    }
    if *imm.ambient() != Ambient::Euclidean {
        return Err(FlowError::UnsupportedAmbient);
    }
    let geom = geometry_fields(imm)?;
    let mut worst: f64 = 0.0;
    for p in 0..imm.len() {
        let normal = geom.normal_part(p, imm.point(p));
        let h = geom.mean_curvature(p);
        let r2: f64 = h.iter().zip(&normal).map(|(h, f)| (h - f / (2.0 * s)).powi(2)).sum();
        worst = worst.max(r2.sqrt());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn shrinking_radius_examples() {
        let p = ShrinkingSphereParams::new(1.0, 1, 2).unwrap();
        assert_eq!(shrinking_radius(&p, 0.0).unwrap(), 1.0);
        assert!((shrinking_radius(&p, 0.375).unwrap() - 0.5).abs() < 1e-15);
        let sphere = ShrinkingSphereParams::new(1.0, 2, 3).unwrap();
        assert!(matches!(shrinking_radius(&sphere, 0.25), Err(FlowError::PastExtinction { .. })));
        assert!(shrinking_radius(&sphere, 0.3).is_err());
        assert!(ShrinkingSphereParams::new(1.0, 2, 2).is_err());
    }

    #[test]
    fn product_torus_radii_examples() {
        assert_eq!(product_torus_radii_at(1.0, 2.0, 0.0).unwrap(), (1.0, 2.0));
        let (a, b) = product_torus_radii_at(1.0, 2.0, 0.375).unwrap();
        assert!((a - 0.5).abs() < 1e-15);
        assert!((b - 3.25f64.sqrt()).abs() < 1e-15);
        assert!(product_torus_radii_at(1.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn circle_track_conserves_rho_squared_plus_2t() {
        let track = exact_circle_track(1.0, 5, 32, 0.05, 0.4).unwrap();
        assert_eq!(track.len(), 9);
        assert_eq!(track.time(8), 0.4);
        for (t, imm) in track.iter().map(Result::unwrap) {
            let x = imm.point(3);
            let rho2: f64 = x.iter().map(|v| v * v).sum();
            assert!((rho2 + 2.0 * t - 1.0).abs() < 1e-14);
            assert!(x[2..].iter().all(|v| *v == 0.0));
        }
        assert!(exact_circle_track(1.0, 2, 32, 0.1, 0.5).is_err());
    }

    #[test]
    fn torus_track_stops_before_smaller_factor_collapses() {
        let track = exact_product_torus_track(1.0, 2.0, [16, 16], 0.1, 0.45).unwrap();
        assert_eq!(track.len(), 6);
        assert!(exact_product_torus_track(1.0, 2.0, [16, 16], 0.1, 0.5).is_err());
    }

    #[test]
    fn grim_reaper_examples() {
        assert_eq!(grim_reaper(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(grim_reaper(0.0, 1.0).unwrap(), 1.0);
        assert!((grim_reaper(PI / 3.0, 0.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(grim_reaper(FRAC_PI_2, 0.0).is_err());
    }

    #[test]
    fn grim_reaper_solves_the_graph_equation() {
        // f_t = 1 and f_xx / (1 + f_x^2) = sec^2 / sec^2 = 1, checked by differences
        let h = 1e-4;
        for &x in &[-1.2, -0.3, 0.0, 0.7, 1.4] {
            let f = |x: f64| grim_reaper(x, 0.0).unwrap();
            let fx = (f(x + h) - f(x - h)) / (2.0 * h);
            let fxx = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            let ft = (grim_reaper(x, h).unwrap() - grim_reaper(x, -h).unwrap()) / (2.0 * h);
            assert!((ft - fxx / (1.0 + fx * fx)).abs() < 1e-5 * (1.0 + fxx));
        }
    }

    #[test]
    fn self_shrinker_residual_examples() {
        let s: f64 = -0.7;
        let circle = shapes::circle((-2.0 * s).sqrt(), 3, 256).unwrap();
        assert!(self_shrinker_residual(&circle, s).unwrap() < 1e-3);

        let plane = shapes::flat_plane(16, 3).unwrap();
        // the periodic plane patch is centered on the origin
        assert!(self_shrinker_residual(&plane, -1.0).unwrap() < 1e-12);

        let unit = shapes::circle(1.0, 2, 256).unwrap();
        let r = self_shrinker_residual(&unit, -2.0).unwrap();
        assert!((r - 0.75).abs() < 1e-3);
        assert!(self_shrinker_residual(&unit, 0.5).is_err());
    }

    #[test]
    fn oracle_tracks_match_curvature_laws() {
        let track = exact_circle_track(1.0, 3, 256, 0.1, 0.4).unwrap();
        for (t, imm) in track.iter().map(Result::unwrap) {
            let rho = (1.0 - 2.0 * t).sqrt();
            let geom = geometry_fields(&imm).unwrap();
            let rel = (geom.sup_norm2_h().sqrt() * rho - 1.0).abs();
            assert!(rel < 1e-3, "t={t}");
        }
        let track = exact_product_torus_track(1.0, 2.0, [64, 64], 0.2, 0.4).unwrap();
        for (t, imm) in track.iter().map(Result::unwrap) {
            let (a, b) = product_torus_radii_at(1.0, 2.0, t).unwrap();
            let want = (1.0 / (a * a) + 1.0 / (b * b)).sqrt();
            let geom = geometry_fields(&imm).unwrap();
            assert!((geom.sup_norm2_h().sqrt() / want - 1.0).abs() < 5e-3, "t={t}");
        }
    }
}
