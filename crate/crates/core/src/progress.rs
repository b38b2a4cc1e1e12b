//! Append-only interaction log and the completion state derived from it.
//!
//! Nothing here stores mutable completion flags. Completion of a lecture
//! unit is a fold over the student's events for that unit, evaluated at a
//! query instant:
//!
//! | unit         | automatic completion at                |
//! |--------------|----------------------------------------|
//! | file         | first `DOWNLOAD_CLICK`                 |
//! | text         | first `TEXT_OPEN`                      |
//! | online       | first `LINK_CLICK`                     |
//! | video        | first `VIDEO_REVEAL` + 5 min, inclusive |
//!
//! `MANUAL_TOGGLE` flips whatever state holds at its instant. The automatic
//! change only fires if the unit is incomplete at that instant, and it
//! fires at most once. Events at the same instant are ordered by event id;
//! the automatic change sorts with the id of the event that triggered it.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::TimeDelta;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{CourseId, EventId, ResourceId, StudentId};
use crate::time::{self, Timestamp};

pub const VIDEO_COMPLETION_DELAY: TimeDelta = TimeDelta::minutes(5);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ResourceKind {
    FileUnit,
    TextUnit,
    OnlineUnit,
    VideoUnit,
    Exercise,
}

impl ResourceKind {
    pub fn is_exercise(self) -> bool {
        self == ResourceKind::Exercise
    }

    /// The click that completes this kind of unit.
    pub fn completing_event(self) -> EventKind {
        match self {
            ResourceKind::FileUnit => EventKind::DownloadClick,
            ResourceKind::TextUnit => EventKind::TextOpen,
            ResourceKind::OnlineUnit => EventKind::LinkClick,
            ResourceKind::VideoUnit => EventKind::VideoReveal,
            ResourceKind::Exercise => EventKind::ExerciseSubmission,
        }
    }

    fn completion_delay(self) -> TimeDelta {
        match self {
            ResourceKind::VideoUnit => VIDEO_COMPLETION_DELAY,
            _ => TimeDelta::zero(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    DownloadClick,
    TextOpen,
    LinkClick,
    VideoReveal,
    ManualToggle,
    ExerciseSubmission,
}

impl EventKind {
    pub fn compatible_with(self, resource: ResourceKind) -> bool {
        match self {
            EventKind::ManualToggle => !resource.is_exercise(),
            other => resource.completing_event() == other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProgressError {
    #[error("unknown resource `{0}`")]
    UnknownResource(ResourceId),
    #[error("{event:?} events cannot target a {resource:?}")]
    KindMismatch {
        event: EventKind,
        resource: ResourceKind,
    },
    #[error("exercise submission carries no score")]
    ScoreMissing,
    #[error("score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("only exercise submissions carry a score")]
    UnexpectedScore,
    #[error("student id must not be empty")]
    EmptyStudentId,
    #[error("event id must not be empty")]
    EmptyEventId,
    #[error("invalid resource `{id}`: {reason}")]
    InvalidResource {
        id: ResourceId,
        reason: &'static str,
    },
    #[error("`{0}` is an exercise; use participation instead of completion")]
    ExerciseNotSupported(ResourceId),
    #[error("`{0}` is not an exercise")]
    NotAnExercise(ResourceId),
}

impl ProgressError {
    pub fn code(&self) -> &'static str {
        match self {
            ProgressError::UnknownResource(_) => "UNKNOWN_RESOURCE",
            ProgressError::KindMismatch { .. } => "KIND_MISMATCH",
            ProgressError::ScoreMissing => "SCORE_MISSING",
            ProgressError::ScoreOutOfRange(_) => "SCORE_OUT_OF_RANGE",
            ProgressError::UnexpectedScore => "UNEXPECTED_SCORE",
            ProgressError::EmptyStudentId => "EMPTY_STUDENT_ID",
            ProgressError::EmptyEventId => "EMPTY_EVENT_ID",
            ProgressError::InvalidResource { .. } => "INVALID_RESOURCE",
            ProgressError::ExerciseNotSupported(_) => "EXERCISE_NOT_SUPPORTED",
            ProgressError::NotAnExercise(_) => "NOT_AN_EXERCISE",
        }
    }
}

pub type Result<T, E = ProgressError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningResource {
    pub id: ResourceId,
    pub course_id: CourseId,
    pub kind: ResourceKind,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_points: Option<f64>,
    #[serde(default)]
    pub order_index: u32,
}

impl LearningResource {
    pub fn unit(
        id: impl Into<ResourceId>,
        course_id: impl Into<CourseId>,
        kind: ResourceKind,
        title: impl Into<String>,
        order_index: u32,
    ) -> Result<Self> {
        let resource = Self {
            id: id.into(),
            course_id: course_id.into(),
            kind,
            title: title.into(),
            max_points: None,
            order_index,
        };
        resource.validate()?;
        Ok(resource)
    }

    pub fn exercise(
        id: impl Into<ResourceId>,
        course_id: impl Into<CourseId>,
        title: impl Into<String>,
        max_points: f64,
        order_index: u32,
    ) -> Result<Self> {
        let resource = Self {
            id: id.into(),
            course_id: course_id.into(),
            kind: ResourceKind::Exercise,
            title: title.into(),
            max_points: Some(max_points),
            order_index,
        };
        resource.validate()?;
        Ok(resource)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason| ProgressError::InvalidResource {
            id: self.id.clone(),
            reason,
        };
        match (self.kind.is_exercise(), self.max_points) {
            (true, Some(p)) if p > 0.0 && p.is_finite() => Ok(()),
            (true, Some(_)) => Err(invalid("max_points must be positive")),
            (true, None) => Err(invalid("exercises need max_points")),
            (false, Some(_)) => Err(invalid("only exercises have max_points")),
            (false, None) => Ok(()),
        }
    }
}

/// Resources of one course keyed by id.
pub type ResourceCatalog = BTreeMap<ResourceId, LearningResource>;

/// One immutable student action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub event_id: EventId,
    pub student_id: StudentId,
    pub resource_id: ResourceId,
    pub kind: EventKind,
    #[serde(with = "time::millis")]
    pub timestamp: Timestamp,
    /// Normalized score (achieved / max points); submissions only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl InteractionEvent {
    pub fn click(
        event_id: impl Into<EventId>,
        student_id: impl Into<StudentId>,
        resource_id: impl Into<ResourceId>,
        kind: EventKind,
        timestamp: Timestamp,
    ) -> Self {
        Self {
            event_id: event_id.into(),
            student_id: student_id.into(),
            resource_id: resource_id.into(),
            kind,
            timestamp,
            score: None,
        }
    }

    pub fn submission(
        event_id: impl Into<EventId>,
        student_id: impl Into<StudentId>,
        resource_id: impl Into<ResourceId>,
        timestamp: Timestamp,
        score: f64,
    ) -> Self {
        Self {
            score: Some(score),
            ..Self::click(
                event_id,
                student_id,
                resource_id,
                EventKind::ExerciseSubmission,
                timestamp,
            )
        }
    }

    /// Submission scored in points, normalized against the exercise maximum.
    pub fn submission_points(
        event_id: impl Into<EventId>,
        student_id: impl Into<StudentId>,
        exercise: &LearningResource,
        timestamp: Timestamp,
        achieved: f64,
    ) -> Result<Self> {
        let max = exercise
            .max_points
            .ok_or_else(|| ProgressError::NotAnExercise(exercise.id.clone()))?;
        Ok(Self::submission(
            event_id,
            student_id,
            exercise.id.clone(),
            timestamp,
            achieved / max,
        ))
    }

    fn order_key(&self) -> (Timestamp, EventId) {
        (self.timestamp, self.event_id.clone())
    }

    /// Checks the event against the course's resources and returns it with
    /// its timestamp normalized to milliseconds.
    pub fn validated(mut self, resources: &ResourceCatalog) -> Result<Self> {
        if self.event_id.as_str().is_empty() {
            return Err(ProgressError::EmptyEventId);
        }
        if self.student_id.as_str().is_empty() {
            return Err(ProgressError::EmptyStudentId);
        }
        let resource = resources
            .get(&self.resource_id)
            .ok_or_else(|| ProgressError::UnknownResource(self.resource_id.clone()))?;
        if !self.kind.compatible_with(resource.kind) {
            return Err(ProgressError::KindMismatch {
                event: self.kind,
                resource: resource.kind,
            });
        }
        match (self.kind, self.score) {
            (EventKind::ExerciseSubmission, None) => return Err(ProgressError::ScoreMissing),
            (EventKind::ExerciseSubmission, Some(s)) if !(0.0..=1.0).contains(&s) => {
                return Err(ProgressError::ScoreOutOfRange(s))
            }
            (EventKind::ExerciseSubmission, Some(_)) => {}
            (_, Some(_)) => return Err(ProgressError::UnexpectedScore),
            (_, None) => {}
        }
        self.timestamp = time::truncate_millis(self.timestamp);
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ingested {
    Appended,
    /// The event id was already in the log; nothing changed.
    Duplicate,
}

type OrderKey = (Timestamp, EventId);

/// Append-only event log of one course, kept in (timestamp, event id) order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    events: BTreeMap<OrderKey, InteractionEvent>,
    ids: HashSet<EventId>,
    by_student_resource: BTreeMap<(StudentId, ResourceId), BTreeSet<OrderKey>>,
    students_by_resource: BTreeMap<ResourceId, BTreeSet<StudentId>>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validates and appends an event. Re-ingesting a known event id is a
    /// no-op.
    pub fn ingest(
        &mut self,
        event: InteractionEvent,
        resources: &ResourceCatalog,
    ) -> Result<Ingested> {
        if self.ids.contains(&event.event_id) {
            return Ok(Ingested::Duplicate);
        }
        let event = event.validated(resources)?;
        self.insert_unchecked(event);
        Ok(Ingested::Appended)
    }

    /// Appends an event that has already been validated against the
    /// course. Duplicate ids are still ignored.
    pub fn insert_unchecked(&mut self, event: InteractionEvent) -> Ingested {
        if !self.ids.insert(event.event_id.clone()) {
            return Ingested::Duplicate;
        }
        let key = event.order_key();
        self.by_student_resource
            .entry((event.student_id.clone(), event.resource_id.clone()))
            .or_default()
            .insert(key.clone());
        self.students_by_resource
            .entry(event.resource_id.clone())
            .or_default()
            .insert(event.student_id.clone());
        self.events.insert(key, event);
        Ingested::Appended
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn contains(&self, id: &EventId) -> bool {
        self.ids.contains(id)
    }

    /// Events in log order.
    pub fn events(&self) -> impl Iterator<Item = &InteractionEvent> {
        self.events.values()
    }

    /// One student's events for one resource, in log order.
    pub fn events_for<'a>(
        &'a self,
        student: &StudentId,
        resource: &ResourceId,
    ) -> impl Iterator<Item = &'a InteractionEvent> + 'a {
        self.by_student_resource
            .get(&(student.clone(), resource.clone()))
            .into_iter()
            .flatten()
            .map(|key| &self.events[key])
    }

    pub fn students(&self) -> BTreeSet<&StudentId> {
        self.by_student_resource.keys().map(|(s, _)| s).collect()
    }

    pub fn latest_timestamp(&self) -> Option<Timestamp> {
        self.events.keys().next_back().map(|(t, _)| *t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CompletionSource {
    None,
    Automatic,
    Manual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionStatus {
    pub completed: bool,
    pub source: CompletionSource,
    /// Instant of the last state change, if any.
    #[serde(
        default,
        with = "optional_millis",
        skip_serializing_if = "Option::is_none"
    )]
    pub effective_at: Option<Timestamp>,
}

mod optional_millis {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::time::{self, Timestamp};

    pub fn serialize<S: Serializer>(t: &Option<Timestamp>, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Some(t) => time::millis::serialize(t, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Timestamp>, D::Error> {
        let raw = Option::<String>::deserialize(d)?;
        raw.map(|r| time::parse_timestamp(&r).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Completion of a lecture unit for one student at `query_time`.
pub fn completion_status(
    log: &EventLog,
    student: &StudentId,
    resource: &LearningResource,
    query_time: Timestamp,
) -> Result<CompletionStatus> {
    if resource.kind.is_exercise() {
        return Err(ProgressError::ExerciseNotSupported(resource.id.clone()));
    }
    #[derive(Clone, Copy)]
    enum Change {
        Automatic,
        Toggle,
    }

    let trigger = resource.kind.completing_event();
    let mut changes: Vec<(Timestamp, &EventId, Change)> = Vec::new();
    let mut triggered = false;
    for event in log.events_for(student, &resource.id) {
        if event.kind == EventKind::ManualToggle {
            changes.push((event.timestamp, &event.event_id, Change::Toggle));
        } else if event.kind == trigger && !triggered {
            triggered = true;
            changes.push((
                event.timestamp + resource.kind.completion_delay(),
                &event.event_id,
                Change::Automatic,
            ));
        }
    }
    changes.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

    let mut status = CompletionStatus {
        completed: false,
        source: CompletionSource::None,
        effective_at: None,
    };
    for (at, _, change) in changes
        .into_iter()
        .take_while(|(at, _, _)| *at <= query_time)
    {
        match change {
            Change::Automatic if !status.completed => {
                status = CompletionStatus {
                    completed: true,
                    source: CompletionSource::Automatic,
                    effective_at: Some(at),
                };
            }
            Change::Automatic => {}
            Change::Toggle => {
                status = CompletionStatus {
                    completed: !status.completed,
                    source: CompletionSource::Manual,
                    effective_at: Some(at),
                };
            }
        }
    }
    Ok(status)
}

fn require_exercise(resource: &LearningResource) -> Result<()> {
    if resource.kind.is_exercise() {
        Ok(())
    } else {
        Err(ProgressError::NotAnExercise(resource.id.clone()))
    }
}

/// Whether the student has submitted at least once, regardless of score.
pub fn participation_status(
    log: &EventLog,
    student: &StudentId,
    exercise: &LearningResource,
) -> Result<bool> {
    require_exercise(exercise)?;
    Ok(log
        .events_for(student, &exercise.id)
        .any(|e| e.kind == EventKind::ExerciseSubmission))
}

/// Score of the submission with the greatest (timestamp, event id).
pub fn latest_score(
    log: &EventLog,
    student: &StudentId,
    exercise: &LearningResource,
) -> Result<Option<f64>> {
    require_exercise(exercise)?;
    Ok(log
        .events_for(student, &exercise.id)
        .filter(|e| e.kind == EventKind::ExerciseSubmission)
        .last()
        .and_then(|e| e.score))
}

/// Whether a resource counts as done: completed for lecture units,
/// participated for exercises.
pub fn is_resource_done(
    log: &EventLog,
    student: &StudentId,
    resource: &LearningResource,
    query_time: Timestamp,
) -> bool {
    if resource.kind.is_exercise() {
        participation_status(log, student, resource).unwrap_or(false)
    } else {
        completion_status(log, student, resource, query_time)
            .map(|s| s.completed)
            .unwrap_or(false)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExerciseStatistics {
    pub exercise_id: ResourceId,
    pub participant_count: usize,
    pub course_average: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub student_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub student_vs_average: Option<f64>,
}

pub fn exercise_statistics(
    log: &EventLog,
    exercise: &LearningResource,
    student: Option<&StudentId>,
) -> Result<ExerciseStatistics> {
    require_exercise(exercise)?;
    let mut latest: Vec<(&StudentId, f64)> = Vec::new();
    if let Some(students) = log.students_by_resource.get(&exercise.id) {
        for s in students {
            if let Some(score) = latest_score(log, s, exercise)? {
                latest.push((s, score));
            }
        }
    }
    let participant_count = latest.len();
    let course_average = if participant_count == 0 {
        0.0
    } else {
        latest.iter().map(|(_, s)| s).sum::<f64>() / participant_count as f64
    };
    let student_score = student.and_then(|sid| {
        latest
            .iter()
            .find(|(s, _)| *s == sid)
            .map(|(_, score)| *score)
    });
    Ok(ExerciseStatistics {
        exercise_id: exercise.id.clone(),
        participant_count,
        course_average,
        student_score,
        student_vs_average: student_score.map(|s| s - course_average),
    })
}
