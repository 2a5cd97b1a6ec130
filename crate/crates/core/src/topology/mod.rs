//! Level-set censuses, level-line tracing and boundary-trace profiles.

pub mod census;
pub mod contour;
pub mod local;
pub mod profile;

use serde::Serialize;
use thiserror::Error;

use crate::domain::Point;
use crate::solver::FieldError;

pub use census::{
    band_components, check_component_contact, check_maximum_principle, level_census,
    ContactClause, ContactReport, LevelComponent, LevelSetCensus, OrderingCase, Sign,
};
pub use contour::{trace_level_lines, LevelLines, LineEnd, Polyline};
pub use local::{local_structure, LocalStructure};
pub use profile::{boundary_profile, BoundaryProfile, Extremum, TraceProfile, ZeroPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Interior,
    Exterior,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Interior => "interior",
            Side::Exterior => "exterior",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("{side} boundary trace is constant ({value})")]
    DegenerateTrace { side: Side, value: f64 },
    #[error("domain has no {side} boundary")]
    MissingBoundary { side: Side },
    #[error("critical point at ({}, {}) intrudes on the local structure annulus around ({}, {})", other.x, other.y, location.x, location.y)]
    RadiusExhausted { location: Point, other: Point },
    #[error(transparent)]
    Field(#[from] FieldError),
}
