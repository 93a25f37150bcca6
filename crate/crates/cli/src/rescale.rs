//! The `rescale` command: parabolic dilation of a stored track.

use std::path::Path;

use geoflow::singularity::{parabolic_dilate, DensityProbe};
use geoflow::SpaceTimeTrack;

use crate::error::{CliError, CliResult};
use crate::trackfile::{read_track, write_track};

/// Dilates the track at `input` about `(y0, t0)` by `lambda` and writes it to
/// `output`. An empty `y0` means the origin.
pub fn rescale(input: &Path, output: &Path, y0: &[f64], t0: f64, lambda: f64) -> CliResult<SpaceTimeTrack> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CliError::Usage(format!("--lambda must be positive, got {lambda}")));
    }
    if !t0.is_finite() {
        return Err(CliError::Usage(format!("--t0 must be finite, got {t0}")));
    }
    let track = read_track(input)?;
    let dim = track.template().ambient_dim();
    let y0 = if y0.is_empty() { vec![0.0; dim] } else { y0.to_vec() };
    if y0.len() != dim {
        return Err(CliError::Usage(format!("--y0 has {} coordinates, track ambient has {dim}", y0.len())));
    }
    let dilated = parabolic_dilate(&track, &DensityProbe::new(y0, t0), lambda)?;
    write_track(output, &dilated)?;
    Ok(dilated)
}
