//! Per-student report: every competency's progress plus the learning path.

use serde::{Deserialize, Serialize};

use crate::course::{Course, Result};
use crate::ids::{CourseId, StudentId};
use crate::metrics::CompetencyProgress;
use crate::path::{generate_path, LearningPath};
use crate::progress::EventLog;
use crate::time::{self, Timestamp};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudentReport {
    pub course_id: CourseId,
    pub student_id: StudentId,
    #[serde(with = "time::millis")]
    pub at: Timestamp,
    pub progress: Vec<CompetencyProgress>,
    pub learning_path: LearningPath,
}

pub fn student_report(
    course: &Course,
    student: &StudentId,
    log: &EventLog,
    at: Timestamp,
) -> Result<StudentReport> {
    Ok(StudentReport {
        course_id: course.id().clone(),
        student_id: student.clone(),
        at,
        progress: course.progress_all(student, log, at)?,
        learning_path: generate_path(student, course, log, at)?,
    })
}
