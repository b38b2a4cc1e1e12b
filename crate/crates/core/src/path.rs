//! Personalized learning paths.
//!
//! A path lists every match cluster that still has an unmastered member, in
//! an order that respects the Assumes/Extends prerequisites. Scheduling is
//! greedy: among the clusters whose prerequisite clusters are mastered or
//! already scheduled, take the one with the lowest mastery summary, ties by
//! smallest cluster id.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::course::{Course, Result};
use crate::graph::{ClusterDag, CompetencyGraph, GraphError};
use crate::ids::{CompetencyId, CourseId, ResourceId, StudentId};
use crate::metrics::LinkKind;
use crate::progress::{is_resource_done, EventLog, LearningResource};
use crate::time::{self, Timestamp};

/// Competency id → mastered.
pub type MasteryMap = BTreeMap<CompetencyId, bool>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathEntry {
    pub cluster_id: CompetencyId,
    pub competency_ids: Vec<CompetencyId>,
    /// Lowest `min(M, 1)` among the members.
    pub mastery_summary: f64,
    pub recommended_resources: Vec<ResourceId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningPath {
    pub student_id: StudentId,
    pub course_id: CourseId,
    #[serde(with = "time::millis")]
    pub generated_at: Timestamp,
    pub entries: Vec<PathEntry>,
}

fn fully_mastered(dag: &ClusterDag, cluster: usize, mastery: &MasteryMap) -> bool {
    dag.clusters[cluster]
        .members
        .iter()
        .all(|c| mastery.get(c).copied().unwrap_or(false))
}

/// Clusters that are not fully mastered but whose prerequisite clusters all
/// are.
pub fn ready_set(graph: &CompetencyGraph, mastery: &MasteryMap) -> BTreeSet<CompetencyId> {
    let dag = graph.cluster_dag();
    let done: Vec<bool> = (0..dag.clusters.len())
        .map(|i| fully_mastered(&dag, i, mastery))
        .collect();
    (0..dag.clusters.len())
        .filter(|&i| !done[i] && dag.predecessors[i].iter().all(|&p| done[p]))
        .map(|i| dag.clusters[i].id.clone())
        .collect()
}

/// Cluster indices in path order, given per-cluster mastery and summaries.
fn schedule(dag: &ClusterDag, mastered: &[bool], summary: &[f64]) -> Result<Vec<usize>> {
    let n = dag.clusters.len();
    let mut settled = mastered.to_vec();
    let mut order = Vec::new();
    loop {
        let next = (0..n)
            .filter(|&i| !settled[i] && dag.predecessors[i].iter().all(|&p| settled[p]))
            .min_by(|&a, &b| summary[a].total_cmp(&summary[b]).then(a.cmp(&b)));
        match next {
            Some(i) => {
                settled[i] = true;
                order.push(i);
            }
            None => break,
        }
    }
    if settled.iter().all(|s| *s) {
        Ok(order)
    } else {
        Err(GraphError::CyclicGraph.into())
    }
}

/// Linked resources of the given competencies the student has not finished:
/// Prerequisite links first, then LearningGoal, each by (order index, id).
fn pending_resources(
    course: &Course,
    members: &[CompetencyId],
    student: &StudentId,
    log: &EventLog,
    query_time: Timestamp,
) -> Vec<ResourceId> {
    let mut best: BTreeMap<&ResourceId, (LinkKind, &LearningResource)> = BTreeMap::new();
    for member in members {
        for (resource, kind) in course.linked_resources(member) {
            best.entry(&resource.id)
                .and_modify(|entry| entry.0 = entry.0.min(kind))
                .or_insert((kind, resource));
        }
    }
    let mut pending: Vec<(LinkKind, u32, &ResourceId)> = best
        .into_values()
        .filter(|(_, r)| !is_resource_done(log, student, r, query_time))
        .map(|(kind, r)| (kind, r.order_index, &r.id))
        .collect();
    pending.sort();
    pending.into_iter().map(|(_, _, id)| id.clone()).collect()
}

pub fn generate_path(
    student: &StudentId,
    course: &Course,
    log: &EventLog,
    query_time: Timestamp,
) -> Result<LearningPath> {
    let dag = course.graph().cluster_dag();
    let progress = course.progress_all(student, log, query_time)?;
    let by_id: BTreeMap<&CompetencyId, (bool, f64)> = progress
        .iter()
        .map(|p| (&p.competency_id, (p.mastered, p.mastery.min(1.0))))
        .collect();
    let mastery: MasteryMap = by_id
        .iter()
        .map(|(id, (m, _))| ((*id).clone(), *m))
        .collect();

    let mastered: Vec<bool> = (0..dag.clusters.len())
        .map(|i| fully_mastered(&dag, i, &mastery))
        .collect();
    let summary: Vec<f64> = dag
        .clusters
        .iter()
        .map(|c| {
            c.members
                .iter()
                .map(|m| by_id[m].1)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let entries = schedule(&dag, &mastered, &summary)?
        .into_iter()
        .map(|i| {
            let cluster = &dag.clusters[i];
            PathEntry {
                cluster_id: cluster.id.clone(),
                competency_ids: cluster.members.clone(),
                mastery_summary: summary[i],
                recommended_resources: pending_resources(
                    course,
                    &cluster.members,
                    student,
                    log,
                    query_time,
                ),
            }
        })
        .collect();

    Ok(LearningPath {
        student_id: student.clone(),
        course_id: course.id().clone(),
        generated_at: query_time,
        entries,
    })
}

/// First recommended resource along the path.
pub fn recommend_next(
    student: &StudentId,
    course: &Course,
    log: &EventLog,
    query_time: Timestamp,
) -> Result<Option<ResourceId>> {
    let path = generate_path(student, course, log, query_time)?;
    Ok(first_recommendation(&path))
}

pub fn first_recommendation(path: &LearningPath) -> Option<ResourceId> {
    path.entries
        .iter()
        .find_map(|e| e.recommended_resources.first().cloned())
}
