pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod immersion;
pub mod oracles;
pub mod shapes;
pub mod singularity;
pub mod symplectic;
pub mod track;

pub use error::{FlowError, Result};
pub use flow::{run_flow, FlowMode, FlowOutcome, FlowState, SolverConfig, StepRecord, StopReason};
pub use geometry::{geometry_fields, induced_metric, normal_project, volume, GeometryFields, PointGeometry};
pub use grid::{Axis, ParamGrid, StencilOrder};
pub use immersion::{Ambient, Immersion};
pub use track::{Snapshot, SpaceTimeTrack};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/flows.md")]
    mod flows {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/singularities.md")]
    mod singularities {}
    #[doc = include_str!("../../../book/src/symplectic.md")]
    mod symplectic {}
}
