use crate::error::{FlowError, Result};
use crate::grid::StencilOrder;
use crate::immersion::Immersion;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub positions: Vec<f64>,
}

/// Time-ordered snapshots of one flow. Every snapshot shares the grid,
/// ambient and winding of the template immersion.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeTrack {
    template: Immersion,
    snapshots: Vec<Snapshot>,
}

impl SpaceTimeTrack {
    /// Starts a track at `(time, imm)`.
    pub fn new(time: f64, imm: Immersion) -> Self {
        let positions = imm.positions().to_vec();
        SpaceTimeTrack { template: imm, snapshots: vec![Snapshot { time, positions }] }
    }

    /// Builds a track from a template and raw snapshots, checking shapes and
    /// strict time order.
    pub fn from_parts(template: Immersion, snapshots: Vec<Snapshot>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(FlowError::InvalidTrack("track has no snapshots".into()));
        }
        let mut track = SpaceTimeTrack { template, snapshots: Vec::with_capacity(snapshots.len()) };
        for s in snapshots {
            track.push(s.time, s.positions)?;
        }
        Ok(track)
    }

    /// Same snapshots, differentiated with stencils of the given order.
    pub fn with_order(mut self, order: StencilOrder) -> Self {
        self.template = self.template.with_order(order);
        self
    }

    /// Sub-track of the snapshots with time strictly below `t`.
    pub fn before(&self, t: f64) -> Result<Self> {
        let kept: Vec<Snapshot> = self.snapshots.iter().filter(|s| s.time < t).cloned().collect();
        Self::from_parts(self.template.clone(), kept)
    }

    pub fn push(&mut self, time: f64, positions: Vec<f64>) -> Result<()> {
        if positions.len() != self.template.positions().len() {
            return Err(FlowError::InvalidTrack(format!(
                "snapshot has {} coordinates, expected {}",
                positions.len(),
                self.template.positions().len()
            )));
        }
        if !time.is_finite() {
            return Err(FlowError::InvalidTrack("non-finite snapshot time".into()));
        }
        if let Some(last) = self.snapshots.last() {
            if time <= last.time {
                return Err(FlowError::InvalidTrack(format!(
                    "snapshot time {time} does not exceed previous {}",
                    last.time
                )));
            }
        }
        self.snapshots.push(Snapshot { time, positions });
        Ok(())
    }

    pub fn template(&self) -> &Immersion {
        &self.template
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.snapshots[k].time
    }

    pub fn immersion(&self, k: usize) -> Result<Immersion> {
        self.template.with_positions(self.snapshots[k].positions.clone())
    }

    pub fn last_immersion(&self) -> Result<Immersion> {
        self.immersion(self.snapshots.len() - 1)
    }

    /// Iterates `(time, immersion)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = Result<(f64, Immersion)>> + '_ {
        (0..self.len()).map(move |k| Ok((self.time(k), self.immersion(k)?)))
    }

    /// Index of the snapshot whose time is closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let mut best = 0;
        for (k, s) in self.snapshots.iter().enumerate() {
            if (s.time - t).abs() < (self.snapshots[best].time - t).abs() {
                best = k;
            }
        }
        best
    }
}
