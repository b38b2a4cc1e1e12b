//! Per-student competency metrics.
//!
//! * progress `P`: share of linked resources that are done (units completed,
//!   exercises participated).
//! * confidence `C`: mean latest score over all linked exercises, with
//!   unattempted exercises counting as 0.
//! * mastery `M = (1 - w) * P + w * C / T`, kept unclamped.
//!
//! A competency is mastered when `P = 1` and `C >= T`, or when an instructor
//! granted it. Rings clamp to `[0, 1]` for display; the red ring is forced to
//! full once mastered.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{check_threshold, Competency, GraphError};
use crate::ids::{CompetencyId, ResourceId, StudentId};
use crate::progress::{is_resource_done, latest_score, EventLog, ResourceCatalog};
use crate::time::Timestamp;

pub const DEFAULT_MASTERY_WEIGHT: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("mastery threshold {0} is outside (0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("mastery weight {0} is outside [0, 1)")]
    WeightOutOfRange(f64),
    #[error("link targets competency `{found}` while computing `{expected}`")]
    ForeignLink {
        expected: CompetencyId,
        found: CompetencyId,
    },
}

impl MetricsError {
    pub fn code(&self) -> &'static str {
        match self {
            MetricsError::ThresholdOutOfRange(_) => "THRESHOLD_OUT_OF_RANGE",
            MetricsError::WeightOutOfRange(_) => "WEIGHT_OUT_OF_RANGE",
            MetricsError::ForeignLink { .. } => "FOREIGN_LINK",
        }
    }
}

impl From<GraphError> for MetricsError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::ThresholdOutOfRange(t) => MetricsError::ThresholdOutOfRange(t),
            other => unreachable!("threshold check returned {other:?}"),
        }
    }
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkKind {
    Prerequisite,
    LearningGoal,
}

/// Attaches a learning resource to a competency.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompetencyLink {
    pub competency_id: CompetencyId,
    pub resource_id: ResourceId,
    pub link_kind: LinkKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Weight of confidence in the mastery score.
    pub mastery_weight: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            mastery_weight: DEFAULT_MASTERY_WEIGHT,
        }
    }
}

impl MetricConfig {
    pub fn new(mastery_weight: f64) -> Result<Self> {
        let config = Self { mastery_weight };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..1.0).contains(&self.mastery_weight) {
            Ok(())
        } else {
            Err(MetricsError::WeightOutOfRange(self.mastery_weight))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rings {
    pub blue: f64,
    pub green: f64,
    pub red: f64,
}

/// Metric bundle for one student and one competency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompetencyProgress {
    pub competency_id: CompetencyId,
    #[serde(skip)]
    pub student_id: StudentId,
    #[serde(rename = "P")]
    pub progress: f64,
    #[serde(rename = "C")]
    pub confidence: f64,
    #[serde(rename = "M")]
    pub mastery: f64,
    pub mastered: bool,
    pub rings: Rings,
    #[serde(skip)]
    pub manual_grant: bool,
}

fn linked<'a>(
    competency: &'a Competency,
    links: &'a [CompetencyLink],
) -> Result<impl Iterator<Item = &'a CompetencyLink>> {
    if let Some(foreign) = links.iter().find(|l| l.competency_id != competency.id) {
        return Err(MetricsError::ForeignLink {
            expected: competency.id.clone(),
            found: foreign.competency_id.clone(),
        });
    }
    Ok(links.iter())
}

/// Share of linked resources the student has completed or participated in
/// at `query_time`; 0 with no linked resources.
pub fn progress(
    student: &StudentId,
    competency: &Competency,
    links: &[CompetencyLink],
    resources: &ResourceCatalog,
    log: &EventLog,
    query_time: Timestamp,
) -> Result<f64> {
    let linked: Vec<_> = linked(competency, links)?
        .filter_map(|l| resources.get(&l.resource_id))
        .collect();
    if linked.is_empty() {
        return Ok(0.0);
    }
    let done = linked
        .iter()
        .filter(|r| is_resource_done(log, student, r, query_time))
        .count();
    Ok(done as f64 / linked.len() as f64)
}

/// Mean latest score over all linked exercises, unattempted ones counting
/// as 0; 0 with no linked exercises.
pub fn confidence(
    student: &StudentId,
    competency: &Competency,
    links: &[CompetencyLink],
    resources: &ResourceCatalog,
    log: &EventLog,
) -> Result<f64> {
    let scores: Vec<f64> = linked(competency, links)?
        .filter_map(|l| resources.get(&l.resource_id))
        .filter(|r| r.kind.is_exercise())
        .map(|r| latest_score(log, student, r).ok().flatten().unwrap_or(0.0))
        .collect();
    if scores.is_empty() {
        return Ok(0.0);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

pub fn mastery_score(
    progress: f64,
    confidence: f64,
    threshold: f64,
    config: &MetricConfig,
) -> Result<f64> {
    check_threshold(threshold)?;
    let w = config.mastery_weight;
    // (1 - w) * P + w * C / T, arranged so that P = 1, C = T gives exactly 1
    // and w = 0 gives exactly P.
    Ok(progress + w * (confidence / threshold - progress))
}

pub fn is_mastered(progress: f64, confidence: f64, threshold: f64, manual_grant: bool) -> bool {
    manual_grant || (progress == 1.0 && confidence >= threshold)
}

pub fn ring_values(
    progress: f64,
    confidence: f64,
    threshold: f64,
    config: &MetricConfig,
    mastered: bool,
) -> Result<Rings> {
    let mastery = mastery_score(progress, confidence, threshold, config)?;
    Ok(Rings {
        blue: progress,
        green: (confidence / threshold).min(1.0),
        red: if mastered { 1.0 } else { mastery.min(1.0) },
    })
}

#[allow(clippy::too_many_arguments)]
pub fn competency_progress(
    student: &StudentId,
    competency: &Competency,
    links: &[CompetencyLink],
    resources: &ResourceCatalog,
    log: &EventLog,
    config: &MetricConfig,
    query_time: Timestamp,
    manual_grant: bool,
) -> Result<CompetencyProgress> {
    let threshold = competency.mastery_threshold;
    let p = progress(student, competency, links, resources, log, query_time)?;
    let c = confidence(student, competency, links, resources, log)?;
    let m = mastery_score(p, c, threshold, config)?;
    let mastered = is_mastered(p, c, threshold, manual_grant);
    let rings = ring_values(p, c, threshold, config, mastered)?;
    Ok(CompetencyProgress {
        competency_id: competency.id.clone(),
        student_id: student.clone(),
        progress: p,
        confidence: c,
        mastery: m,
        mastered,
        rings,
        manual_grant,
    })
}
