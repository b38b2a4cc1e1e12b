//! Competency-based education engine.
//!
//! * [`graph`]: competencies, typed relations, match clusters and
//!   prerequisite ordering.
//! * [`progress`]: the append-only interaction log and per-unit completion.
//! * [`metrics`]: progress, confidence, mastery and ring values.
//! * [`path`]: personalized learning paths and recommendations.
//! * [`course`]: the course model and its JSON document.
//! * [`simulate`]: seeded synthetic students.

pub mod course;
pub mod graph;
pub mod ids;
pub mod metrics;
pub mod path;
pub mod progress;
pub mod report;
pub mod simulate;
pub mod time;

pub use course::{Course, CourseDocument, CourseError, Grant};
pub use graph::{
    Competency, CompetencyGraph, GraphDocument, GraphError, MatchCluster, Relation, RelationType,
    Taxonomy,
};
pub use ids::{CompetencyId, CourseId, EventId, RelationId, ResourceId, StudentId};
pub use metrics::{CompetencyLink, CompetencyProgress, LinkKind, MetricConfig, Rings};
pub use path::{LearningPath, PathEntry};
pub use progress::{EventKind, EventLog, InteractionEvent, LearningResource, ResourceKind};
pub use report::StudentReport;
pub use time::Timestamp;
