//! A course: its competency graph, learning resources, links, metric
//! configuration and instructor mastery grants.
//!
//! [`CourseDocument`] is the serialized form; [`Course`] is the validated
//! model every query runs against.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    Competency, CompetencyGraph, CompetencyPatch, GraphError, Relation, RelationType, Taxonomy,
};
use crate::ids::{CompetencyId, CourseId, RelationId, ResourceId, StudentId};
use crate::metrics::{
    self, CompetencyLink, CompetencyProgress, LinkKind, MetricConfig, MetricsError,
};
use crate::progress::{
    EventLog, Ingested, InteractionEvent, LearningResource, ProgressError, ResourceCatalog,
    ResourceKind,
};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CourseError {
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("relation #{index} ({tail} {kind} {head}) rejected: {source}")]
    GraphInvariantViolation {
        index: usize,
        tail: CompetencyId,
        head: CompetencyId,
        kind: RelationType,
        #[source]
        source: Box<GraphError>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Progress(#[from] ProgressError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("resource `{0}` already exists")]
    DuplicateResource(ResourceId),
    #[error("competency `{competency}` is already linked to `{resource}`")]
    DuplicateLink {
        competency: CompetencyId,
        resource: ResourceId,
    },
}

impl CourseError {
    pub fn code(&self) -> &'static str {
        match self {
            CourseError::SchemaViolation(_) => "SCHEMA_VIOLATION",
            CourseError::GraphInvariantViolation { .. } => "GRAPH_INVARIANT_VIOLATION",
            CourseError::Graph(e) => e.code(),
            CourseError::Progress(e) => e.code(),
            CourseError::Metrics(e) => e.code(),
            CourseError::DuplicateResource(_) => "DUPLICATE_RESOURCE",
            CourseError::DuplicateLink { .. } => "DUPLICATE_LINK",
        }
    }
}

pub type Result<T, E = CourseError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompetencyEntry {
    pub id: CompetencyId,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub taxonomy: Taxonomy,
    pub mastery_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationEntry {
    /// Derived from the endpoints and type when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<RelationId>,
    pub tail_id: CompetencyId,
    pub head_id: CompetencyId,
    #[serde(rename = "type")]
    pub kind: RelationType,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceEntry {
    pub id: ResourceId,
    pub kind: ResourceKind,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_points: Option<f64>,
    #[serde(default)]
    pub order_index: u32,
}

/// Instructor-granted mastery of one competency for one student.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grant {
    pub student_id: StudentId,
    pub competency_id: CompetencyId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CourseDocument {
    pub course_id: CourseId,
    pub title: String,
    #[serde(default)]
    pub competencies: Vec<CompetencyEntry>,
    #[serde(default)]
    pub relations: Vec<RelationEntry>,
    #[serde(default)]
    pub resources: Vec<ResourceEntry>,
    #[serde(default)]
    pub links: Vec<CompetencyLink>,
    #[serde(default)]
    pub config: MetricConfig,
    #[serde(default)]
    pub grants: Vec<Grant>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Course {
    id: CourseId,
    title: String,
    graph: CompetencyGraph,
    resources: ResourceCatalog,
    links: BTreeMap<(CompetencyId, ResourceId), CompetencyLink>,
    config: MetricConfig,
    grants: BTreeSet<(StudentId, CompetencyId)>,
}

impl Course {
    pub fn new(id: CourseId, title: impl Into<String>, config: MetricConfig) -> Result<Self> {
        if id.as_str().is_empty() {
            return Err(CourseError::SchemaViolation(
                "course_id must not be empty".into(),
            ));
        }
        config.validate()?;
        Ok(Self {
            graph: CompetencyGraph::new(id.clone()),
            id,
            title: title.into(),
            resources: ResourceCatalog::new(),
            links: BTreeMap::new(),
            config,
            grants: BTreeSet::new(),
        })
    }

    /// Validates a document, applying relations in listed order.
    pub fn from_document(doc: &CourseDocument) -> Result<Self> {
        let schema = |e: &dyn std::fmt::Display| CourseError::SchemaViolation(e.to_string());
        let mut course = Course::new(doc.course_id.clone(), doc.title.clone(), doc.config)
            .map_err(|e| match e {
                CourseError::Metrics(m) => schema(&m),
                other => other,
            })?;
        for entry in &doc.competencies {
            let competency = Competency::new(
                entry.id.clone(),
                course.id.clone(),
                entry.title.clone(),
                entry.description.clone(),
                entry.taxonomy,
                entry.mastery_threshold,
            )
            .map_err(|e| schema(&format!("competency `{}`: {e}", entry.id)))?;
            course
                .graph
                .insert_competency(competency)
                .map_err(|e| schema(&e))?;
        }
        for entry in &doc.resources {
            course
                .add_resource(LearningResource {
                    id: entry.id.clone(),
                    course_id: course.id.clone(),
                    kind: entry.kind,
                    title: entry.title.clone(),
                    max_points: entry.max_points,
                    order_index: entry.order_index,
                })
                .map_err(|e| schema(&e))?;
        }
        for (index, entry) in doc.relations.iter().enumerate() {
            let result = match &entry.id {
                Some(id) => course.graph.insert_relation(Relation {
                    id: id.clone(),
                    tail_id: entry.tail_id.clone(),
                    head_id: entry.head_id.clone(),
                    kind: entry.kind,
                }),
                None => course
                    .graph
                    .add_relation(&entry.tail_id, &entry.head_id, entry.kind),
            };
            result.map_err(|source| CourseError::GraphInvariantViolation {
                index,
                tail: entry.tail_id.clone(),
                head: entry.head_id.clone(),
                kind: entry.kind,
                source: Box::new(source),
            })?;
        }
        for link in &doc.links {
            course.add_link(link.clone()).map_err(|e| schema(&e))?;
        }
        for grant in &doc.grants {
            course.add_grant(grant.clone()).map_err(|e| schema(&e))?;
        }
        Ok(course)
    }

    /// Canonical document: every list sorted by id.
    pub fn to_document(&self) -> CourseDocument {
        CourseDocument {
            course_id: self.id.clone(),
            title: self.title.clone(),
            competencies: self
                .graph
                .competencies()
                .map(|c| CompetencyEntry {
                    id: c.id.clone(),
                    title: c.title.clone(),
                    description: c.description.clone(),
                    taxonomy: c.taxonomy,
                    mastery_threshold: c.mastery_threshold,
                })
                .collect(),
            relations: self
                .graph
                .relations()
                .map(|r| RelationEntry {
                    id: Some(r.id.clone()),
                    tail_id: r.tail_id.clone(),
                    head_id: r.head_id.clone(),
                    kind: r.kind,
                })
                .collect(),
            resources: self
                .resources
                .values()
                .map(|r| ResourceEntry {
                    id: r.id.clone(),
                    kind: r.kind,
                    title: r.title.clone(),
                    max_points: r.max_points,
                    order_index: r.order_index,
                })
                .collect(),
            links: self.links.values().cloned().collect(),
            config: self.config,
            grants: self
                .grants
                .iter()
                .map(|(s, c)| Grant {
                    student_id: s.clone(),
                    competency_id: c.clone(),
                })
                .collect(),
        }
    }

    pub fn id(&self) -> &CourseId {
        &self.id
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn graph(&self) -> &CompetencyGraph {
        &self.graph
    }

    pub fn resources(&self) -> &ResourceCatalog {
        &self.resources
    }

    pub fn config(&self) -> &MetricConfig {
        &self.config
    }

    pub fn links(&self) -> impl Iterator<Item = &CompetencyLink> {
        self.links.values()
    }

    /// Links of one competency, in resource id order.
    pub fn links_for(&self, competency: &CompetencyId) -> Vec<CompetencyLink> {
        self.links
            .range((competency.clone(), ResourceId::default())..)
            .take_while(|((c, _), _)| c == competency)
            .map(|(_, l)| l.clone())
            .collect()
    }

    pub fn is_granted(&self, student: &StudentId, competency: &CompetencyId) -> bool {
        self.grants.contains(&(student.clone(), competency.clone()))
    }

    pub fn grants(&self) -> impl Iterator<Item = (&StudentId, &CompetencyId)> {
        self.grants.iter().map(|(s, c)| (s, c))
    }

    pub fn create_competency(
        &mut self,
        title: impl Into<String>,
        description: impl Into<String>,
        taxonomy: Taxonomy,
        threshold: f64,
    ) -> Result<Competency> {
        Ok(self
            .graph
            .create_competency(title, description, taxonomy, threshold)?)
    }

    pub fn update_competency(
        &mut self,
        id: &CompetencyId,
        patch: CompetencyPatch,
    ) -> Result<Competency> {
        Ok(self.graph.update_competency(id, patch)?)
    }

    /// Removes a competency along with its relations, links and grants.
    pub fn remove_competency(&mut self, id: &CompetencyId) -> Result<Competency> {
        let removed = self.graph.remove_competency(id)?;
        self.links.retain(|(c, _), _| c != id);
        self.grants.retain(|(_, c)| c != id);
        Ok(removed)
    }

    pub fn add_relation(
        &mut self,
        tail: &CompetencyId,
        head: &CompetencyId,
        kind: RelationType,
    ) -> Result<Relation> {
        Ok(self.graph.add_relation(tail, head, kind)?)
    }

    pub fn remove_relation(&mut self, id: &RelationId) -> Result<Relation> {
        Ok(self.graph.remove_relation(id)?)
    }

    pub fn add_resource(&mut self, resource: LearningResource) -> Result<LearningResource> {
        resource.validate()?;
        if resource.id.as_str().is_empty() {
            return Err(CourseError::SchemaViolation(
                "resource id must not be empty".into(),
            ));
        }
        if resource.course_id != self.id {
            return Err(CourseError::SchemaViolation(format!(
                "resource `{}` belongs to course `{}`",
                resource.id, resource.course_id
            )));
        }
        if self.resources.contains_key(&resource.id) {
            return Err(CourseError::DuplicateResource(resource.id));
        }
        self.resources.insert(resource.id.clone(), resource.clone());
        Ok(resource)
    }

    pub fn add_link(&mut self, link: CompetencyLink) -> Result<CompetencyLink> {
        if self.graph.competency(&link.competency_id).is_none() {
            return Err(GraphError::UnknownCompetency(link.competency_id).into());
        }
        if !self.resources.contains_key(&link.resource_id) {
            return Err(ProgressError::UnknownResource(link.resource_id).into());
        }
        let key = (link.competency_id.clone(), link.resource_id.clone());
        if self.links.contains_key(&key) {
            return Err(CourseError::DuplicateLink {
                competency: link.competency_id,
                resource: link.resource_id,
            });
        }
        self.links.insert(key, link.clone());
        Ok(link)
    }

    /// Idempotent; returns whether the grant is new.
    pub fn add_grant(&mut self, grant: Grant) -> Result<bool> {
        if grant.student_id.as_str().is_empty() {
            return Err(ProgressError::EmptyStudentId.into());
        }
        if self.graph.competency(&grant.competency_id).is_none() {
            return Err(GraphError::UnknownCompetency(grant.competency_id).into());
        }
        Ok(self.grants.insert((grant.student_id, grant.competency_id)))
    }

    pub fn ingest(&self, log: &mut EventLog, event: InteractionEvent) -> Result<Ingested> {
        Ok(log.ingest(event, &self.resources)?)
    }

    pub fn competency_progress(
        &self,
        student: &StudentId,
        competency: &Competency,
        log: &EventLog,
        query_time: Timestamp,
    ) -> Result<CompetencyProgress> {
        Ok(metrics::competency_progress(
            student,
            competency,
            &self.links_for(&competency.id),
            &self.resources,
            log,
            &self.config,
            query_time,
            self.is_granted(student, &competency.id),
        )?)
    }

    /// Progress for every competency, in id order.
    pub fn progress_all(
        &self,
        student: &StudentId,
        log: &EventLog,
        query_time: Timestamp,
    ) -> Result<Vec<CompetencyProgress>> {
        self.graph
            .competencies()
            .map(|c| self.competency_progress(student, c, log, query_time))
            .collect()
    }

    /// Resources linked to a competency, with the link kind.
    pub fn linked_resources(
        &self,
        competency: &CompetencyId,
    ) -> Vec<(&LearningResource, LinkKind)> {
        self.links_for(competency)
            .into_iter()
            .filter_map(|l| self.resources.get(&l.resource_id).map(|r| (r, l.link_kind)))
            .collect()
    }
}
