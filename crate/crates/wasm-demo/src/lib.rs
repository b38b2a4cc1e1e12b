//! Three operations for the static page in `www/`: ring values for given
//! metric inputs, relation editing with validation, and learning paths for a
//! course plus a JSONL event log. Every function takes and returns JSON text.

use competency_core::metrics::{is_mastered, mastery_score, ring_values, MetricConfig};
use competency_core::report::student_report;
use competency_core::time::parse_timestamp;
use competency_core::{Course, CourseDocument, EventLog, InteractionEvent, RelationType};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn error(code: &str, message: impl ToString) -> Value {
    json!({"ok": false, "code": code, "message": message.to_string()})
}

fn load_course(course_json: &str) -> Result<Course, Value> {
    let doc: CourseDocument =
        serde_json::from_str(course_json).map_err(|e| error("SCHEMA_VIOLATION", e))?;
    Course::from_document(&doc).map_err(|e| error(e.code(), e))
}

/// Layer per competency: longest chain of prerequisite clusters before it.
fn layers(course: &Course) -> Vec<Vec<String>> {
    let dag = course.graph().cluster_dag();
    let Ok(order) = dag.topological_order() else {
        return vec![];
    };
    let mut depth = vec![0usize; dag.clusters.len()];
    for &i in &order {
        depth[i] = dag.predecessors[i]
            .iter()
            .map(|&p| depth[p] + 1)
            .max()
            .unwrap_or(0);
    }
    let mut out = vec![Vec::new(); depth.iter().max().map_or(0, |d| d + 1)];
    for (i, cluster) in dag.clusters.iter().enumerate() {
        out[depth[i]].extend(cluster.members.iter().map(|m| m.to_string()));
    }
    out
}

fn view(course: &Course) -> Value {
    let clusters: Vec<Vec<String>> = course
        .graph()
        .match_clusters()
        .into_iter()
        .map(|c| c.members.iter().map(|m| m.to_string()).collect())
        .collect();
    json!({
        "ok": true,
        "course": course.to_document(),
        "graph": course.graph().export(),
        "clusters": clusters,
        "layers": layers(course),
    })
}

pub fn rings_value(
    progress: f64,
    confidence: f64,
    threshold: f64,
    weight: f64,
    granted: bool,
) -> Value {
    let cfg = match MetricConfig::new(weight) {
        Ok(cfg) => cfg,
        Err(e) => return error(e.code(), e),
    };
    let m = match mastery_score(progress, confidence, threshold, &cfg) {
        Ok(m) => m,
        Err(e) => return error(e.code(), e),
    };
    let mastered = is_mastered(progress, confidence, threshold, granted);
    match ring_values(progress, confidence, threshold, &cfg, mastered) {
        Ok(rings) => json!({"ok": true, "M": m, "mastered": mastered, "rings": rings}),
        Err(e) => error(e.code(), e),
    }
}

pub fn graph_view_value(course_json: &str) -> Value {
    match load_course(course_json) {
        Ok(course) => view(&course),
        Err(e) => e,
    }
}

pub fn add_relation_value(course_json: &str, tail: &str, head: &str, kind: &str) -> Value {
    let mut course = match load_course(course_json) {
        Ok(c) => c,
        Err(e) => return e,
    };
    let kind: RelationType = match serde_json::from_value(Value::String(kind.to_owned())) {
        Ok(k) => k,
        Err(e) => return error("SCHEMA_VIOLATION", e),
    };
    match course.add_relation(&tail.into(), &head.into(), kind) {
        Ok(_) => view(&course),
        Err(e) => error(e.code(), e),
    }
}

pub fn learning_path_value(
    course_json: &str,
    events_jsonl: &str,
    student: &str,
    at: &str,
) -> Value {
    let course = match load_course(course_json) {
        Ok(c) => c,
        Err(e) => return e,
    };
    let at = match parse_timestamp(at.trim()) {
        Ok(t) => t,
        Err(e) => return error("SCHEMA_VIOLATION", format!("query time: {e}")),
    };
    let mut log = EventLog::new();
    for (n, line) in events_jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: InteractionEvent = match serde_json::from_str(line) {
            Ok(e) => e,
            Err(e) => return error("SCHEMA_VIOLATION", format!("line {}: {e}", n + 1)),
        };
        if let Err(e) = course.ingest(&mut log, event) {
            return error(e.code(), format!("line {}: {e}", n + 1));
        }
    }
    let student = student.into();
    match student_report(&course, &student, &log, at) {
        Ok(report) => json!({"ok": true, "report": report}),
        Err(e) => error(e.code(), e),
    }
}

/// `{ok, M, mastered, rings}` for raw metric inputs.
#[wasm_bindgen]
pub fn rings(progress: f64, confidence: f64, threshold: f64, weight: f64, granted: bool) -> String {
    rings_value(progress, confidence, threshold, weight, granted).to_string()
}

/// `{ok, course, graph, clusters, layers}` for a course document.
#[wasm_bindgen(js_name = graphView)]
pub fn graph_view(course_json: &str) -> String {
    graph_view_value(course_json).to_string()
}

/// Adds a relation; on success returns the updated view, otherwise
/// `{ok: false, code, message}` and the course is unchanged.
#[wasm_bindgen(js_name = addRelation)]
pub fn add_relation(course_json: &str, tail: &str, head: &str, kind: &str) -> String {
    add_relation_value(course_json, tail, head, kind).to_string()
}

/// `{ok, report}` with progress and learning path for one student.
#[wasm_bindgen(js_name = learningPath)]
pub fn learning_path(course_json: &str, events_jsonl: &str, student: &str, at: &str) -> String {
    learning_path_value(course_json, events_jsonl, student, at).to_string()
}
