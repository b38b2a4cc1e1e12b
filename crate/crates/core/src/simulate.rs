//! Deterministic student-behavior simulator for test data.
//!
//! Every simulated student follows their own learning path: at each step
//! they ask for the next recommendation and emit the event that completes
//! it. Exercises get a submission whose score is drawn from a seeded
//! ChaCha stream, so the same seed always yields the same batch.

use chrono::TimeDelta;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::course::{Course, CourseError, Result};
use crate::ids::{EventId, StudentId};
use crate::path::recommend_next;
use crate::progress::{EventLog, InteractionEvent};
use crate::time::{parse_timestamp, Timestamp};

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub students: usize,
    pub steps: usize,
    pub seed: u64,
    /// First step's instant; defaults to one interval after the latest
    /// logged event, or 2024-01-01T00:00:00Z on an empty log.
    pub start: Option<Timestamp>,
    /// Time between steps. Must exceed the video completion delay for
    /// revealed videos to count as complete at the next step.
    pub step_interval: TimeDelta,
    /// Inclusive range for submission scores.
    pub min_score: f64,
    pub max_score: f64,
}

impl SimulationConfig {
    pub fn new(students: usize, steps: usize, seed: u64) -> Self {
        Self {
            students,
            steps,
            seed,
            start: None,
            step_interval: TimeDelta::minutes(10),
            min_score: 0.8,
            max_score: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.min_score)
            && (0.0..=1.0).contains(&self.max_score)
            && self.min_score <= self.max_score
            && self.step_interval > TimeDelta::zero();
        if ok {
            Ok(())
        } else {
            Err(CourseError::SchemaViolation(format!(
                "invalid simulation parameters: scores [{}, {}], interval {}",
                self.min_score, self.max_score, self.step_interval
            )))
        }
    }
}

pub fn simulated_student(index: usize) -> StudentId {
    StudentId::new(format!("sim-s{index:03}"))
}

/// Runs the simulation on top of `base_log` and returns only the new events.
pub fn simulate(
    course: &Course,
    base_log: &EventLog,
    config: &SimulationConfig,
) -> Result<Vec<InteractionEvent>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start = config
        .start
        .unwrap_or_else(|| match base_log.latest_timestamp() {
            Some(latest) => latest + config.step_interval,
            None => parse_timestamp("2024-01-01T00:00:00Z").expect("valid literal"),
        });
    let students: Vec<StudentId> = (1..=config.students).map(simulated_student).collect();
    let mut log = base_log.clone();
    let mut batch = Vec::new();

    for step in 0..config.steps {
        let now = start + config.step_interval * step as i32;
        let mut idle = true;
        for student in &students {
            let Some(resource_id) = recommend_next(student, course, &log, now)? else {
                continue;
            };
            idle = false;
            let resource = &course.resources()[&resource_id];
            let event_id = EventId::new(format!("sim-{}-{}-{step:05}", config.seed, student));
            let event = if resource.kind.is_exercise() {
                let score = rng.random_range(config.min_score..=config.max_score);
                InteractionEvent::submission(event_id, student.clone(), resource_id, now, score)
            } else {
                InteractionEvent::click(
                    event_id,
                    student.clone(),
                    resource_id,
                    resource.kind.completing_event(),
                    now,
                )
            };
            course.ingest(&mut log, event.clone())?;
            batch.push(event);
        }
        // Pending videos need one more step to pass their delay.
        if idle && step > 0 {
            break;
        }
    }
    Ok(batch)
}
