//! Competencies, typed relations and the orderings derived from them.
//!
//! Relations read as "tail <type> head": `Assumes(tail = B, head = A)` means
//! B assumes A, so A is learned first. `Assumes` and `Extends` both order the
//! head before the tail. `Matches` merges competencies into clusters that are
//! scheduled together, and `Relates` is an annotation with no ordering effect.
//!
//! The cluster-level ordering graph is kept acyclic: any relation that would
//! close a cycle is rejected when it is added.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{CompetencyId, CourseId, RelationId};

/// Bloom's revised taxonomy level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Taxonomy {
    Remember,
    Understand,
    Apply,
    Analyze,
    Evaluate,
    Create,
}

impl Taxonomy {
    pub const ALL: [Taxonomy; 6] = [
        Taxonomy::Remember,
        Taxonomy::Understand,
        Taxonomy::Apply,
        Taxonomy::Analyze,
        Taxonomy::Evaluate,
        Taxonomy::Create,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RelationType {
    Assumes,
    Extends,
    Relates,
    Matches,
}

impl RelationType {
    pub const ALL: [RelationType; 4] = [
        RelationType::Assumes,
        RelationType::Extends,
        RelationType::Relates,
        RelationType::Matches,
    ];

    /// Relates and Matches are stored with the smaller id as tail.
    pub fn is_symmetric(self) -> bool {
        matches!(self, RelationType::Relates | RelationType::Matches)
    }

    /// Assumes and Extends put the head before the tail.
    pub fn is_ordering(self) -> bool {
        matches!(self, RelationType::Assumes | RelationType::Extends)
    }

    fn slug(self) -> &'static str {
        match self {
            RelationType::Assumes => "assumes",
            RelationType::Extends => "extends",
            RelationType::Relates => "relates",
            RelationType::Matches => "matches",
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("competency title must not be empty")]
    EmptyTitle,
    #[error("mastery threshold {0} is outside (0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("unknown competency `{0}`")]
    UnknownCompetency(CompetencyId),
    #[error("competency `{0}` already exists")]
    DuplicateCompetency(CompetencyId),
    #[error("competency `{competency}` belongs to course `{found}`, not `{expected}`")]
    CrossCourseRelation {
        competency: CompetencyId,
        expected: CourseId,
        found: CourseId,
    },
    #[error("competency `{0}` cannot relate to itself")]
    ReflexiveRelation(CompetencyId),
    #[error("a {kind} relation already exists between `{tail}` and `{head}` (`{existing}`)")]
    DuplicateRelation {
        tail: CompetencyId,
        head: CompetencyId,
        kind: RelationType,
        existing: RelationId,
    },
    #[error("relation id `{0}` is already in use")]
    DuplicateRelationId(RelationId),
    #[error("{kind} relation from `{tail}` to `{head}` would create a prerequisite cycle")]
    CycleIntroduced {
        tail: CompetencyId,
        head: CompetencyId,
        kind: RelationType,
    },
    #[error("unknown relation `{0}`")]
    UnknownRelation(RelationId),
    #[error("the prerequisite graph contains a cycle")]
    CyclicGraph,
}

impl GraphError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::EmptyTitle => "EMPTY_TITLE",
            GraphError::ThresholdOutOfRange(_) => "THRESHOLD_OUT_OF_RANGE",
            GraphError::UnknownCompetency(_) => "UNKNOWN_COMPETENCY",
            GraphError::DuplicateCompetency(_) => "DUPLICATE_COMPETENCY",
            GraphError::CrossCourseRelation { .. } => "CROSS_COURSE_RELATION",
            GraphError::ReflexiveRelation(_) => "REFLEXIVE_RELATION",
            GraphError::DuplicateRelation { .. } => "DUPLICATE_RELATION",
            GraphError::DuplicateRelationId(_) => "DUPLICATE_RELATION_ID",
            GraphError::CycleIntroduced { .. } => "CYCLE_INTRODUCED",
            GraphError::UnknownRelation(_) => "UNKNOWN_RELATION",
            GraphError::CyclicGraph => "CYCLIC_GRAPH",
        }
    }
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

pub(crate) fn check_threshold(threshold: f64) -> Result<f64> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(threshold)
    } else {
        Err(GraphError::ThresholdOutOfRange(threshold))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Competency {
    pub id: CompetencyId,
    pub course_id: CourseId,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub taxonomy: Taxonomy,
    pub mastery_threshold: f64,
}

impl Competency {
    pub fn new(
        id: CompetencyId,
        course_id: CourseId,
        title: impl Into<String>,
        description: impl Into<String>,
        taxonomy: Taxonomy,
        mastery_threshold: f64,
    ) -> Result<Self> {
        let competency = Self {
            id,
            course_id,
            title: title.into(),
            description: description.into(),
            taxonomy,
            mastery_threshold,
        };
        competency.validate()?;
        Ok(competency)
    }

    fn validate(&self) -> Result<()> {
        if self.title.trim().is_empty() {
            return Err(GraphError::EmptyTitle);
        }
        check_threshold(self.mastery_threshold)?;
        Ok(())
    }
}

/// Partial update for a competency; `None` leaves a field untouched.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CompetencyPatch {
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub taxonomy: Option<Taxonomy>,
    #[serde(default)]
    pub mastery_threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub id: RelationId,
    pub tail_id: CompetencyId,
    pub head_id: CompetencyId,
    #[serde(rename = "type")]
    pub kind: RelationType,
}

impl Relation {
    /// Id derived from the relation's content, so identical graphs get
    /// identical ids regardless of insertion order.
    pub fn derived_id(tail: &CompetencyId, head: &CompetencyId, kind: RelationType) -> RelationId {
        RelationId::new(format!("{}:{}:{}", kind.slug(), tail, head))
    }

    fn canonical_pair(
        tail: CompetencyId,
        head: CompetencyId,
        kind: RelationType,
    ) -> (CompetencyId, CompetencyId) {
        if kind.is_symmetric() && head < tail {
            (head, tail)
        } else {
            (tail, head)
        }
    }
}

/// Competencies that are identical via (transitive) `Matches` relations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCluster {
    /// Smallest member id.
    pub id: CompetencyId,
    /// Members in ascending id order.
    pub members: Vec<CompetencyId>,
}

/// Cluster-level prerequisite graph. Clusters are sorted by id, so a
/// cluster's index also orders it by id.
#[derive(Clone, Debug)]
pub struct ClusterDag {
    pub clusters: Vec<MatchCluster>,
    pub cluster_of: BTreeMap<CompetencyId, usize>,
    /// `predecessors[i]`: clusters that must come before cluster `i`.
    pub predecessors: Vec<BTreeSet<usize>>,
    /// Set when an ordering relation connects two members of one cluster.
    pub has_self_loop: bool,
}

impl ClusterDag {
    fn build<'a>(
        competencies: impl Iterator<Item = &'a CompetencyId>,
        relations: impl Iterator<Item = &'a Relation> + Clone,
    ) -> Self {
        let ids: Vec<&CompetencyId> = competencies.collect();
        let index: BTreeMap<&CompetencyId, usize> =
            ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut sets = DisjointSets::new(ids.len());
        for relation in relations.clone() {
            if relation.kind == RelationType::Matches {
                sets.union(index[&relation.tail_id], index[&relation.head_id]);
            }
        }

        // `ids` is sorted, so first-seen roots come out in smallest-member order.
        let mut root_to_cluster = BTreeMap::new();
        let mut clusters: Vec<MatchCluster> = Vec::new();
        let mut cluster_of = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            let root = sets.find(i);
            let cluster = *root_to_cluster.entry(root).or_insert_with(|| {
                clusters.push(MatchCluster {
                    id: (*id).clone(),
                    members: Vec::new(),
                });
                clusters.len() - 1
            });
            clusters[cluster].members.push((*id).clone());
            cluster_of.insert((*id).clone(), cluster);
        }

        let mut predecessors = vec![BTreeSet::new(); clusters.len()];
        let mut has_self_loop = false;
        for relation in relations {
            if !relation.kind.is_ordering() {
                continue;
            }
            let before = cluster_of[&relation.head_id];
            let after = cluster_of[&relation.tail_id];
            if before == after {
                has_self_loop = true;
            } else {
                predecessors[after].insert(before);
            }
        }

        Self {
            clusters,
            cluster_of,
            predecessors,
            has_self_loop,
        }
    }

    pub fn successors(&self) -> Vec<BTreeSet<usize>> {
        let mut successors = vec![BTreeSet::new(); self.clusters.len()];
        for (after, preds) in self.predecessors.iter().enumerate() {
            for &before in preds {
                successors[before].insert(after);
            }
        }
        successors
    }

    /// Kahn's algorithm, smallest ready cluster first.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        if self.has_self_loop {
            return Err(GraphError::CyclicGraph);
        }
        let successors = self.successors();
        let mut in_degree: Vec<usize> = self.predecessors.iter().map(BTreeSet::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> = in_degree
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == 0)
            .map(|(i, _)| Reverse(i))
            .collect();
        let mut order = Vec::with_capacity(self.clusters.len());
        while let Some(Reverse(next)) = ready.pop() {
            order.push(next);
            for &succ in &successors[next] {
                in_degree[succ] -= 1;
                if in_degree[succ] == 0 {
                    ready.push(Reverse(succ));
                }
            }
        }
        if order.len() == self.clusters.len() {
            Ok(order)
        } else {
            Err(GraphError::CyclicGraph)
        }
    }
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// The competencies of one course and the typed relations between them.
#[derive(Clone, Debug, PartialEq)]
pub struct CompetencyGraph {
    course_id: CourseId,
    competencies: BTreeMap<CompetencyId, Competency>,
    relations: BTreeMap<RelationId, Relation>,
}

impl CompetencyGraph {
    pub fn new(course_id: CourseId) -> Self {
        Self {
            course_id,
            competencies: BTreeMap::new(),
            relations: BTreeMap::new(),
        }
    }

    pub fn course_id(&self) -> &CourseId {
        &self.course_id
    }

    pub fn competencies(&self) -> impl Iterator<Item = &Competency> {
        self.competencies.values()
    }

    pub fn competency(&self, id: &CompetencyId) -> Option<&Competency> {
        self.competencies.get(id)
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    pub fn relation(&self, id: &RelationId) -> Option<&Relation> {
        self.relations.get(id)
    }

    pub fn len(&self) -> usize {
        self.competencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.competencies.is_empty()
    }

    /// Creates a competency under a fresh id (`comp-0001`, `comp-0002`, ...).
    pub fn create_competency(
        &mut self,
        title: impl Into<String>,
        description: impl Into<String>,
        taxonomy: Taxonomy,
        threshold: f64,
    ) -> Result<Competency> {
        let competency = Competency::new(
            self.fresh_competency_id(),
            self.course_id.clone(),
            title,
            description,
            taxonomy,
            threshold,
        )?;
        self.competencies
            .insert(competency.id.clone(), competency.clone());
        Ok(competency)
    }

    fn fresh_competency_id(&self) -> CompetencyId {
        (self.competencies.len() + 1..)
            .map(|n| CompetencyId::new(format!("comp-{n:04}")))
            .find(|id| !self.competencies.contains_key(id))
            .expect("unbounded range")
    }

    /// Inserts a competency that already carries its id.
    pub fn insert_competency(&mut self, competency: Competency) -> Result<()> {
        competency.validate()?;
        if competency.course_id != self.course_id {
            return Err(GraphError::CrossCourseRelation {
                competency: competency.id,
                expected: self.course_id.clone(),
                found: competency.course_id,
            });
        }
        if self.competencies.contains_key(&competency.id) {
            return Err(GraphError::DuplicateCompetency(competency.id));
        }
        self.competencies.insert(competency.id.clone(), competency);
        Ok(())
    }

    pub fn update_competency(
        &mut self,
        id: &CompetencyId,
        patch: CompetencyPatch,
    ) -> Result<Competency> {
        let current = self
            .competencies
            .get(id)
            .ok_or_else(|| GraphError::UnknownCompetency(id.clone()))?;
        let mut updated = current.clone();
        if let Some(title) = patch.title {
            updated.title = title;
        }
        if let Some(description) = patch.description {
            updated.description = description;
        }
        if let Some(taxonomy) = patch.taxonomy {
            updated.taxonomy = taxonomy;
        }
        if let Some(threshold) = patch.mastery_threshold {
            updated.mastery_threshold = threshold;
        }
        updated.validate()?;
        self.competencies.insert(id.clone(), updated.clone());
        Ok(updated)
    }

    /// Removes a competency together with every relation touching it.
    pub fn remove_competency(&mut self, id: &CompetencyId) -> Result<Competency> {
        let removed = self
            .competencies
            .remove(id)
            .ok_or_else(|| GraphError::UnknownCompetency(id.clone()))?;
        self.relations
            .retain(|_, r| &r.tail_id != id && &r.head_id != id);
        Ok(removed)
    }

    /// Adds a relation under its derived id.
    pub fn add_relation(
        &mut self,
        tail_id: &CompetencyId,
        head_id: &CompetencyId,
        kind: RelationType,
    ) -> Result<Relation> {
        let (tail, head) = Relation::canonical_pair(tail_id.clone(), head_id.clone(), kind);
        let id = Relation::derived_id(&tail, &head, kind);
        self.insert_relation(Relation {
            id,
            tail_id: tail,
            head_id: head,
            kind,
        })
    }

    /// Adds a relation between two competency records, checking that both
    /// belong to this graph's course.
    pub fn add_relation_between(
        &mut self,
        tail: &Competency,
        head: &Competency,
        kind: RelationType,
    ) -> Result<Relation> {
        for c in [tail, head] {
            if c.course_id != self.course_id {
                return Err(GraphError::CrossCourseRelation {
                    competency: c.id.clone(),
                    expected: self.course_id.clone(),
                    found: c.course_id.clone(),
                });
            }
        }
        self.add_relation(&tail.id, &head.id, kind)
    }

    /// Adds a relation that already carries an id (imports). Symmetric
    /// relations are re-oriented canonically; the id is kept.
    pub fn insert_relation(&mut self, relation: Relation) -> Result<Relation> {
        let Relation {
            id,
            tail_id,
            head_id,
            kind,
        } = relation;
        for endpoint in [&tail_id, &head_id] {
            if !self.competencies.contains_key(endpoint) {
                return Err(GraphError::UnknownCompetency(endpoint.clone()));
            }
        }
        if tail_id == head_id {
            return Err(GraphError::ReflexiveRelation(tail_id));
        }
        let (tail_id, head_id) = Relation::canonical_pair(tail_id, head_id, kind);
        if let Some(existing) = self
            .relations
            .values()
            .find(|r| r.kind == kind && r.tail_id == tail_id && r.head_id == head_id)
        {
            return Err(GraphError::DuplicateRelation {
                tail: tail_id,
                head: head_id,
                kind,
                existing: existing.id.clone(),
            });
        }
        if self.relations.contains_key(&id) {
            return Err(GraphError::DuplicateRelationId(id));
        }
        let relation = Relation {
            id,
            tail_id,
            head_id,
            kind,
        };
        if kind != RelationType::Relates {
            let dag = ClusterDag::build(
                self.competencies.keys(),
                self.relations.values().chain(std::iter::once(&relation)),
            );
            if dag.topological_order().is_err() {
                return Err(GraphError::CycleIntroduced {
                    tail: relation.tail_id,
                    head: relation.head_id,
                    kind,
                });
            }
        }
        self.relations.insert(relation.id.clone(), relation.clone());
        Ok(relation)
    }

    pub fn remove_relation(&mut self, id: &RelationId) -> Result<Relation> {
        self.relations
            .remove(id)
            .ok_or_else(|| GraphError::UnknownRelation(id.clone()))
    }

    pub fn cluster_dag(&self) -> ClusterDag {
        ClusterDag::build(self.competencies.keys(), self.relations.values())
    }

    /// Connected components of the `Matches` subgraph, sorted by cluster id.
    pub fn match_clusters(&self) -> Vec<MatchCluster> {
        self.cluster_dag().clusters
    }

    /// Clusters in prerequisite order (heads of Assumes/Extends first),
    /// smallest cluster id among the ready ones.
    pub fn prerequisite_order(&self) -> Result<Vec<MatchCluster>> {
        let dag = self.cluster_dag();
        let order = dag.topological_order()?;
        Ok(order.into_iter().map(|i| dag.clusters[i].clone()).collect())
    }

    pub fn export(&self) -> GraphDocument {
        GraphDocument {
            nodes: self
                .competencies
                .values()
                .map(|c| GraphNode {
                    id: c.id.clone(),
                    title: c.title.clone(),
                    taxonomy: c.taxonomy,
                    threshold: c.mastery_threshold,
                })
                .collect(),
            edges: self
                .relations
                .values()
                .map(|r| GraphEdge {
                    id: r.id.clone(),
                    tail: r.tail_id.clone(),
                    head: r.head_id.clone(),
                    kind: r.kind,
                })
                .collect(),
        }
    }

    /// Rebuilds a graph from its portable document. Descriptions are not part
    /// of the document and come back empty.
    pub fn import(course_id: CourseId, document: &GraphDocument) -> Result<Self> {
        let mut graph = Self::new(course_id.clone());
        for node in &document.nodes {
            graph.insert_competency(Competency::new(
                node.id.clone(),
                course_id.clone(),
                node.title.clone(),
                "",
                node.taxonomy,
                node.threshold,
            )?)?;
        }
        for edge in &document.edges {
            graph.insert_relation(Relation {
                id: edge.id.clone(),
                tail_id: edge.tail.clone(),
                head_id: edge.head.clone(),
                kind: edge.kind,
            })?;
        }
        Ok(graph)
    }
}

/// Portable graph document consumed by graph renderers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: CompetencyId,
    pub title: String,
    pub taxonomy: Taxonomy,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub id: RelationId,
    pub tail: CompetencyId,
    pub head: CompetencyId,
    #[serde(rename = "type")]
    pub kind: RelationType,
}
