//! Pinned thresholds for the acceptance suite. Every number the suite
//! compares against lives here.

/// Relative error allowed on the circle's stop time against `r0^2 / 2`.
pub const CIRCLE_STOP_REL: f64 = 1e-2;

/// `sup |rho_num(t) - sqrt(1 - 2t)|` over `t <= CIRCLE_WINDOW_END`.
pub const CIRCLE_RADIUS_ABS: f64 = 1e-3;
pub const CIRCLE_WINDOW_END: f64 = 0.4;

/// Wall-clock budget for one circle run, seconds.
pub const CIRCLE_RUNTIME_S: f64 = 30.0;

/// Both torus radii against `sqrt(r_i^2 - 2t)` up to `t = 0.4`.
pub const TORUS_RADIUS_ABS: f64 = 1e-3;

/// Type-I fitted singular time, relative.
pub const TYPE1_T0_REL: f64 = 2e-2;

/// Grim reaper sup error against `t - log cos x`.
pub const GRIM_REAPER_ABS: f64 = 1e-3;

/// Largest allowed density increase between consecutive ledger entries.
pub const LEDGER_SLACK: f64 = 1e-6;

/// Extrapolated circle density against `sqrt(2 pi / e)`, relative.
pub const DENSITY_LIMIT_REL: f64 = 1e-2;

/// Density before and after a file round trip through `rescale`, relative.
pub const DILATION_DENSITY_REL: f64 = 1e-12;

/// Self-shrinker residual at `s = -1` of the exact and numeric circle.
pub const SHRINKER_EXACT: f64 = 1e-6;
pub const SHRINKER_NUMERIC: f64 = 5e-3;

/// Heat bound slack `1e-6 + C h^2` with `C = HEAT_C`.
pub const HEAT_BASE: f64 = 1e-6;
pub const HEAT_C: f64 = 1.0;

/// `sup|II|^2 (t0 - t)` against `1/2n` over the fit window, relative.
pub const TYPE1_CONSTANT_REL: f64 = 2e-2;

/// `|dVol/dt + int|H|^2| <= FV_REL int|H|^2 + FV_ABS`.
pub const FV_REL: f64 = 1e-3;
pub const FV_ABS: f64 = 1e-8;

/// `sup |*omega'|` along the symplectic flow.
pub const LAGRANGIAN_ABS: f64 = 1e-4;

/// Per-snapshot drop of `min eta`, and slack below the lower bound.
pub const ETA_DROP: f64 = 1e-6;
pub const ETA_BOUND_SLACK: f64 = 1e-4;

/// Final linearity deviation and distance of the affine part from `I`.
pub const LINEARITY_DEV: f64 = 1e-3;
pub const AFFINE_IDENTITY: f64 = 1e-3;

/// Pinching slack `1e-10 + C h^2` with `C = PINCHING_C`.
pub const PINCHING_BASE: f64 = 1e-10;
pub const PINCHING_C: f64 = 1.0;

/// Symplectic flow wall-clock budget, seconds.
pub const SYMPLECTIC_RUNTIME_S: f64 = 300.0;

/// Residual ratio per grid doubling for a second-order scheme.
pub const RESIDUAL_RATIO: (f64, f64) = (3.0, 5.0);

/// Weighted energy increase per snapshot, and the sandwich inequality slack.
pub const WEIGHTED_ENERGY_STEP: f64 = 1e-6;
pub const ENERGY_SANDWICH: f64 = 1e-10;

/// `|int (|II|^2 - |H|^2)| / Area`.
pub const GAUSS_BONNET_REL: f64 = 1e-4;
