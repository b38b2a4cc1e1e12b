//! Plain-file persistence.
//!
//! ```text
//! <data_dir>/courses/<course_id>.json   {"schema_version":1,"document":{...}}
//! <data_dir>/events/<course_id>.jsonl   one InteractionEvent per line
//! ```
//!
//! Course documents are replaced atomically (write to a temp file, then
//! rename). Event batches are appended with a single write and synced. A
//! crash can therefore only leave a torn last line in an event file; it is
//! cut off when the store opens.
//!
//! Each course sits behind its own lock: readers see a consistent course and
//! log, writers to one course are serialized.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use competency_core::course::{Course, CourseDocument, CourseError};
use competency_core::progress::{exercise_statistics, ExerciseStatistics, ProgressError};
use competency_core::report::{student_report, StudentReport};
use competency_core::simulate::{simulate, SimulationConfig};
use competency_core::{
    CompetencyProgress, CourseId, EventLog, GraphDocument, InteractionEvent, LearningPath,
    ResourceId, StudentId, Timestamp,
};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown course `{0}`")]
    UnknownCourse(CourseId),
    #[error("unknown student `{0}`")]
    UnknownStudent(StudentId),
    #[error("unknown resource `{0}`")]
    UnknownResource(ResourceId),
    #[error("course `{0}` already exists with different content")]
    CourseConflict(CourseId),
    #[error("course id `{0}` may only contain letters, digits, `-`, `_` and `.`")]
    InvalidCourseId(String),
    #[error(transparent)]
    Course(#[from] CourseError),
    #[error("data directory {path} is unavailable: {source}")]
    DataDirUnavailable { path: PathBuf, source: io::Error },
    #[error("unsupported schema_version {found} in {path} (expected {SCHEMA_VERSION})")]
    SchemaVersion { path: PathBuf, found: u32 },
    #[error("corrupt store file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::UnknownCourse(_) => "UNKNOWN_COURSE",
            StoreError::UnknownStudent(_) => "UNKNOWN_STUDENT",
            StoreError::UnknownResource(_) => "UNKNOWN_RESOURCE",
            StoreError::CourseConflict(_) => "COURSE_CONFLICT",
            StoreError::InvalidCourseId(_) => "SCHEMA_VIOLATION",
            StoreError::Course(e) => e.code(),
            StoreError::DataDirUnavailable { .. } => "DATA_DIR_UNAVAILABLE",
            StoreError::SchemaVersion { .. } => "SCHEMA_VERSION",
            StoreError::Corrupt { .. } => "CORRUPT_STORE",
            StoreError::Io(_) => "IO_ERROR",
        }
    }
}

impl From<ProgressError> for StoreError {
    fn from(e: ProgressError) -> Self {
        StoreError::Course(e.into())
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Serialize, Deserialize)]
struct StoredCourse {
    schema_version: u32,
    document: CourseDocument,
}

/// Course model and its event log, always read and written together.
#[derive(Clone, Debug)]
pub struct CourseState {
    pub course: Course,
    pub log: EventLog,
}

/// What a store holds on disk: course documents and event-log lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoreSnapshot {
    pub schema_version: u32,
    pub courses: BTreeMap<CourseId, CourseDocument>,
    /// Byte length of each course's event file.
    pub event_offsets: BTreeMap<CourseId, u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportOutcome {
    pub course_id: CourseId,
    /// False when an identical course was already stored.
    pub created: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedEvent {
    pub index: usize,
    pub event_id: String,
    pub code: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppendOutcome {
    pub accepted: usize,
    pub duplicates: usize,
    pub rejected: Vec<RejectedEvent>,
}

pub struct Store {
    root: PathBuf,
    courses: RwLock<BTreeMap<CourseId, Arc<RwLock<CourseState>>>>,
}

fn check_course_id(id: &CourseId) -> Result<()> {
    let s = id.as_str();
    let ok = !s.is_empty()
        && s != "."
        && s != ".."
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidCourseId(s.to_owned()))
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut file = File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    if let Some(dir) = path.parent() {
        // Persist the rename; not supported on every platform.
        if let Ok(d) = File::open(dir) {
            let _ = d.sync_all();
        }
    }
    Ok(())
}

impl Store {
    /// Opens (or initializes) a data directory and replays every event log.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let unavailable = |source| StoreError::DataDirUnavailable {
            path: root.clone(),
            source,
        };
        fs::create_dir_all(root.join("courses")).map_err(unavailable)?;
        fs::create_dir_all(root.join("events")).map_err(unavailable)?;
        let probe = root.join(".write-probe");
        File::create(&probe)
            .and_then(|_| fs::remove_file(&probe))
            .map_err(unavailable)?;

        let store = Self {
            root,
            courses: RwLock::new(BTreeMap::new()),
        };
        let mut entries: Vec<PathBuf> = fs::read_dir(store.root.join("courses"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        entries.sort();
        for path in entries {
            let state = store.load_course(&path)?;
            store
                .courses
                .write()
                .insert(state.course.id().clone(), Arc::new(RwLock::new(state)));
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn course_path(&self, id: &CourseId) -> PathBuf {
        self.root.join("courses").join(format!("{id}.json"))
    }

    fn events_path(&self, id: &CourseId) -> PathBuf {
        self.root.join("events").join(format!("{id}.jsonl"))
    }

    fn load_course(&self, path: &Path) -> Result<CourseState> {
        let corrupt = |reason: String| StoreError::Corrupt {
            path: path.to_owned(),
            reason,
        };
        let raw = fs::read(path)?;
        let stored: StoredCourse =
            serde_json::from_slice(&raw).map_err(|e| corrupt(e.to_string()))?;
        if stored.schema_version != SCHEMA_VERSION {
            return Err(StoreError::SchemaVersion {
                path: path.to_owned(),
                found: stored.schema_version,
            });
        }
        let course = Course::from_document(&stored.document).map_err(|e| corrupt(e.to_string()))?;
        let log = self.replay_events(&course)?;
        Ok(CourseState { course, log })
    }

    /// Replays a course's event file. A torn or unparsable final line is
    /// truncated away; damage anywhere else is an error.
    fn replay_events(&self, course: &Course) -> Result<EventLog> {
        let path = self.events_path(course.id());
        let mut log = EventLog::new();
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(log),
            Err(e) => return Err(e.into()),
        };
        let mut reader = BufReader::new(file);
        let mut good_len: u64 = 0;
        let mut line = String::new();
        let mut line_no = 0;
        let mut torn = false;
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 {
                break;
            }
            line_no += 1;
            let complete = line.ends_with('\n');
            let parsed = serde_json::from_str::<InteractionEvent>(line.trim_end());
            match (complete, parsed) {
                (true, Ok(event)) => {
                    course
                        .ingest(&mut log, event)
                        .map_err(|e| StoreError::Corrupt {
                            path: path.clone(),
                            reason: format!("line {line_no}: {e}"),
                        })?;
                    good_len += n as u64;
                }
                (_, result) => {
                    // Anything after this line means real corruption, not a torn write.
                    let mut rest = String::new();
                    reader.read_line(&mut rest)?;
                    if !rest.is_empty() {
                        let reason = match result {
                            Err(e) => format!("line {line_no}: {e}"),
                            Ok(_) => format!("line {line_no}: missing newline"),
                        };
                        return Err(StoreError::Corrupt { path, reason });
                    }
                    torn = true;
                    break;
                }
            }
        }
        if torn {
            tracing::warn!(path = %path.display(), good_len, "truncating torn event log tail");
            OpenOptions::new()
                .write(true)
                .open(&path)?
                .set_len(good_len)?;
        }
        Ok(log)
    }

    fn state(&self, id: &CourseId) -> Result<Arc<RwLock<CourseState>>> {
        self.courses
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownCourse(id.clone()))
    }

    fn persist_course(&self, course: &Course) -> Result<()> {
        let stored = StoredCourse {
            schema_version: SCHEMA_VERSION,
            document: course.to_document(),
        };
        let bytes = serde_json::to_vec_pretty(&stored).map_err(io::Error::other)?;
        write_atomically(&self.course_path(course.id()), &bytes)?;
        Ok(())
    }

    pub fn course_ids(&self) -> Vec<CourseId> {
        self.courses.read().keys().cloned().collect()
    }

    /// Imports a course document. Re-importing identical content is a
    /// no-op; different content under an existing id is a conflict.
    pub fn import_course(&self, document: &CourseDocument) -> Result<ImportOutcome> {
        check_course_id(&document.course_id)?;
        let course = Course::from_document(document)?;
        let mut courses = self.courses.write();
        if let Some(existing) = courses.get(course.id()) {
            return if existing.read().course.to_document() == course.to_document() {
                Ok(ImportOutcome {
                    course_id: course.id().clone(),
                    created: false,
                })
            } else {
                Err(StoreError::CourseConflict(course.id().clone()))
            };
        }
        self.persist_course(&course)?;
        let log = self.replay_events(&course)?;
        let id = course.id().clone();
        courses.insert(
            id.clone(),
            Arc::new(RwLock::new(CourseState { course, log })),
        );
        Ok(ImportOutcome {
            course_id: id,
            created: true,
        })
    }

    /// Runs `f` against a consistent view of one course.
    pub fn read<T>(&self, id: &CourseId, f: impl FnOnce(&CourseState) -> Result<T>) -> Result<T> {
        let state = self.state(id)?;
        let guard = state.read();
        f(&guard)
    }

    /// Applies a course mutation: the change is made on a copy, persisted,
    /// and only then published.
    pub fn mutate<T>(
        &self,
        id: &CourseId,
        f: impl FnOnce(&mut Course) -> Result<T, CourseError>,
    ) -> Result<T> {
        let state = self.state(id)?;
        let mut guard = state.write();
        let mut course = guard.course.clone();
        let out = f(&mut course)?;
        if course != guard.course {
            self.persist_course(&course)?;
            guard.course = course;
        }
        Ok(out)
    }

    /// Validates each event, then appends all accepted ones in one write.
    pub fn append_events(
        &self,
        id: &CourseId,
        batch: Vec<InteractionEvent>,
    ) -> Result<AppendOutcome> {
        let state = self.state(id)?;
        let mut guard = state.write();
        let mut outcome = AppendOutcome::default();
        let mut accepted: Vec<InteractionEvent> = Vec::new();
        let mut batch_ids = std::collections::HashSet::new();
        for (index, event) in batch.into_iter().enumerate() {
            if guard.log.contains(&event.event_id) || batch_ids.contains(&event.event_id) {
                outcome.duplicates += 1;
                continue;
            }
            let event_id = event.event_id.to_string();
            match event.validated(guard.course.resources()) {
                Ok(event) => {
                    batch_ids.insert(event.event_id.clone());
                    accepted.push(event);
                }
                Err(e) => outcome.rejected.push(RejectedEvent {
                    index,
                    event_id,
                    code: e.code().to_owned(),
                    reason: e.to_string(),
                }),
            }
        }
        if !accepted.is_empty() {
            let mut buf = Vec::new();
            for event in &accepted {
                serde_json::to_writer(&mut buf, event).map_err(io::Error::other)?;
                buf.push(b'\n');
            }
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(self.events_path(id))?;
            file.write_all(&buf)?;
            file.sync_data()?;
            for event in accepted {
                guard.log.insert_unchecked(event);
                outcome.accepted += 1;
            }
        }
        Ok(outcome)
    }

    pub fn document(&self, id: &CourseId) -> Result<CourseDocument> {
        self.read(id, |s| Ok(s.course.to_document()))
    }

    pub fn graph(&self, id: &CourseId) -> Result<GraphDocument> {
        self.read(id, |s| Ok(s.course.graph().export()))
    }

    pub fn progress(
        &self,
        id: &CourseId,
        student: &StudentId,
        at: Timestamp,
    ) -> Result<Vec<CompetencyProgress>> {
        check_student(student)?;
        self.read(id, |s| Ok(s.course.progress_all(student, &s.log, at)?))
    }

    pub fn learning_path(
        &self,
        id: &CourseId,
        student: &StudentId,
        at: Timestamp,
    ) -> Result<LearningPath> {
        check_student(student)?;
        self.read(id, |s| {
            Ok(competency_core::path::generate_path(
                student, &s.course, &s.log, at,
            )?)
        })
    }

    pub fn report(
        &self,
        id: &CourseId,
        student: &StudentId,
        at: Timestamp,
    ) -> Result<StudentReport> {
        check_student(student)?;
        self.read(id, |s| Ok(student_report(&s.course, student, &s.log, at)?))
    }

    pub fn statistics(
        &self,
        id: &CourseId,
        exercise: &ResourceId,
        student: Option<&StudentId>,
    ) -> Result<ExerciseStatistics> {
        self.read(id, |s| {
            let resource = s
                .course
                .resources()
                .get(exercise)
                .ok_or_else(|| StoreError::UnknownResource(exercise.clone()))?;
            Ok(exercise_statistics(&s.log, resource, student)?)
        })
    }

    /// Simulated events on top of the stored log; nothing is appended.
    pub fn simulate(
        &self,
        id: &CourseId,
        config: &SimulationConfig,
    ) -> Result<Vec<InteractionEvent>> {
        self.read(id, |s| Ok(simulate(&s.course, &s.log, config)?))
    }

    pub fn snapshot(&self) -> Result<StoreSnapshot> {
        let courses = self.courses.read();
        let mut snapshot = StoreSnapshot {
            schema_version: SCHEMA_VERSION,
            courses: BTreeMap::new(),
            event_offsets: BTreeMap::new(),
        };
        for (id, state) in courses.iter() {
            let _guard = state.read();
            snapshot
                .courses
                .insert(id.clone(), _guard.course.to_document());
            let len = match fs::metadata(self.events_path(id)) {
                Ok(m) => m.len(),
                Err(e) if e.kind() == io::ErrorKind::NotFound => 0,
                Err(e) => return Err(e.into()),
            };
            snapshot.event_offsets.insert(id.clone(), len);
        }
        Ok(snapshot)
    }
}

fn check_student(student: &StudentId) -> Result<()> {
    if student.as_str().is_empty() {
        Err(StoreError::UnknownStudent(student.clone()))
    } else {
        Ok(())
    }
}
