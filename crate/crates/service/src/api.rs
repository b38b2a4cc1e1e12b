//! HTTP routes over a [`Store`].

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use competency_core::course::{CourseDocument, ResourceEntry};
use competency_core::graph::CompetencyPatch;
use competency_core::time::{self, parse_timestamp};
use competency_core::{
    CompetencyId, CompetencyLink, CourseId, Grant, InteractionEvent, LearningResource, RelationId,
    RelationType, ResourceId, StudentId, Taxonomy, Timestamp,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::store::{AppendOutcome, RejectedEvent, Store, StoreError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_owned(),
                message: message.into(),
            },
        }
    }

    fn schema(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "SCHEMA_VIOLATION", message)
    }
}

pub fn status_for(code: &str) -> StatusCode {
    match code {
        c if c.starts_with("UNKNOWN_") => StatusCode::NOT_FOUND,
        "REFLEXIVE_RELATION"
        | "DUPLICATE_RELATION"
        | "DUPLICATE_RELATION_ID"
        | "CYCLE_INTRODUCED"
        | "CROSS_COURSE_RELATION"
        | "DUPLICATE_COMPETENCY"
        | "DUPLICATE_RESOURCE"
        | "DUPLICATE_LINK"
        | "COURSE_CONFLICT" => StatusCode::CONFLICT,
        "GRAPH_INVARIANT_VIOLATION" => StatusCode::UNPROCESSABLE_ENTITY,
        "IO_ERROR"
        | "CORRUPT_STORE"
        | "SCHEMA_VERSION"
        | "DATA_DIR_UNAVAILABLE"
        | "CYCLIC_GRAPH" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let code = e.code();
        let status = status_for(code);
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
        }
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// `Json` whose rejections use the common error body.
pub struct Body<T>(pub T);

impl<S, T> FromRequest<S> for Body<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(rejection) => Err(match rejection {
                JsonRejection::MissingJsonContentType(_) => ApiError::new(
                    StatusCode::UNSUPPORTED_MEDIA_TYPE,
                    "SCHEMA_VIOLATION",
                    rejection.body_text(),
                ),
                _ => ApiError::schema(rejection.body_text()),
            }),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = Arc<Store>;

#[derive(Deserialize)]
struct AtQuery {
    at: Option<String>,
}

fn query_time(q: &AtQuery) -> ApiResult<Timestamp> {
    match &q.at {
        None => Ok(time::now()),
        Some(raw) => parse_timestamp(raw)
            .map_err(|e| ApiError::schema(format!("invalid `at` timestamp `{raw}`: {e}"))),
    }
}

#[derive(Deserialize)]
struct StudentQuery {
    student: Option<StudentId>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewCompetency {
    title: String,
    #[serde(default)]
    description: String,
    taxonomy: Taxonomy,
    mastery_threshold: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewRelation {
    tail_id: CompetencyId,
    head_id: CompetencyId,
    #[serde(rename = "type")]
    kind: RelationType,
}

#[derive(Serialize)]
struct CourseCreated {
    course_id: CourseId,
}

pub fn router(store: Shared) -> Router {
    Router::new()
        .route("/courses", post(import_course).get(list_courses))
        .route("/courses/{cid}", get(get_course))
        .route("/courses/{cid}/graph", get(get_graph))
        .route("/courses/{cid}/competencies", post(create_competency))
        .route(
            "/courses/{cid}/competencies/{id}",
            axum::routing::patch(update_competency).delete(delete_competency),
        )
        .route("/courses/{cid}/relations", post(create_relation))
        .route("/courses/{cid}/relations/{rid}", delete(delete_relation))
        .route("/courses/{cid}/resources", post(create_resource))
        .route("/courses/{cid}/links", post(create_link))
        .route("/courses/{cid}/grants", post(create_grant))
        .route("/courses/{cid}/events", post(append_events))
        .route("/courses/{cid}/students/{sid}/progress", get(progress))
        .route(
            "/courses/{cid}/students/{sid}/learning-path",
            get(learning_path),
        )
        .route("/courses/{cid}/students/{sid}/report", get(report))
        .route("/courses/{cid}/exercises/{eid}/statistics", get(statistics))
        .fallback(|| async {
            ApiError::new(StatusCode::NOT_FOUND, "UNKNOWN_ROUTE", "no such route")
        })
        .with_state(store)
}

async fn import_course(
    State(store): State<Shared>,
    Body(doc): Body<CourseDocument>,
) -> ApiResult<Response> {
    let outcome = store.import_course(&doc)?;
    let status = if outcome.created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((
        status,
        Json(CourseCreated {
            course_id: outcome.course_id,
        }),
    )
        .into_response())
}

async fn list_courses(State(store): State<Shared>) -> Json<Vec<CourseId>> {
    Json(store.course_ids())
}

async fn get_course(
    State(store): State<Shared>,
    Path(cid): Path<CourseId>,
) -> ApiResult<Json<CourseDocument>> {
    Ok(Json(store.document(&cid)?))
}

async fn get_graph(State(store): State<Shared>, Path(cid): Path<CourseId>) -> ApiResult<Response> {
    Ok(Json(store.graph(&cid)?).into_response())
}

async fn create_competency(
    State(store): State<Shared>,
    Path(cid): Path<CourseId>,
    Body(body): Body<NewCompetency>,
) -> ApiResult<Response> {
    let created = store.mutate(&cid, |c| {
        c.create_competency(
            body.title,
            body.description,
            body.taxonomy,
            body.mastery_threshold,
        )
    })?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn update_competency(
    State(store): State<Shared>,
    Path((cid, id)): Path<(CourseId, CompetencyId)>,
    Body(patch): Body<CompetencyPatch>,
) -> ApiResult<Response> {
    let updated = store.mutate(&cid, |c| c.update_competency(&id, patch))?;
    Ok(Json(updated).into_response())
}

async fn delete_competency(
    State(store): State<Shared>,
    Path((cid, id)): Path<(CourseId, CompetencyId)>,
) -> ApiResult<StatusCode> {
    store.mutate(&cid, |c| c.remove_competency(&id))?;
    Ok(StatusCode::NO_CONTENT)
}

async fn create_relation(
    State(store): State<Shared>,
    Path(cid): Path<CourseId>,
    Body(body): Body<NewRelation>,
) -> ApiResult<Response> {
    let relation = store.mutate(&cid, |c| {
        c.add_relation(&body.tail_id, &body.head_id, body.kind)
    })?;
    Ok((StatusCode::CREATED, Json(relation)).into_response())
}

async fn delete_relation(
    State(store): State<Shared>,
    Path((cid, rid)): Path<(CourseId, RelationId)>,
) -> ApiResult<StatusCode> {
    store.mutate(&cid, |c| c.remove_relation(&rid))?;
    Ok(StatusCode::NO_CONTENT)
}

async fn create_resource(
    State(store): State<Shared>,
    Path(cid): Path<CourseId>,
    Body(entry): Body<ResourceEntry>,
) -> ApiResult<Response> {
    let resource = LearningResource {
        id: entry.id,
        course_id: cid.clone(),
        kind: entry.kind,
        title: entry.title,
        max_points: entry.max_points,
        order_index: entry.order_index,
    };
    let created = store.mutate(&cid, |c| c.add_resource(resource))?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn create_link(
    State(store): State<Shared>,
    Path(cid): Path<CourseId>,
    Body(link): Body<CompetencyLink>,
) -> ApiResult<Response> {
    let created = store.mutate(&cid, |c| c.add_link(link))?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn create_grant(
    State(store): State<Shared>,
    Path(cid): Path<CourseId>,
    Body(grant): Body<Grant>,
) -> ApiResult<Response> {
    let fresh = store.mutate(&cid, |c| c.add_grant(grant.clone()))?;
    let status = if fresh {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(grant)).into_response())
}

/// Items are decoded one by one so a malformed event only rejects itself.
async fn append_events(
    State(store): State<Shared>,
    Path(cid): Path<CourseId>,
    Body(items): Body<Vec<Value>>,
) -> ApiResult<Json<AppendOutcome>> {
    let mut decoded = Vec::with_capacity(items.len());
    let mut malformed = Vec::new();
    let mut positions = Vec::with_capacity(items.len());
    for (index, item) in items.into_iter().enumerate() {
        let event_id = item
            .get("event_id")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_owned();
        match serde_json::from_value::<InteractionEvent>(item) {
            Ok(event) => {
                positions.push(index);
                decoded.push(event);
            }
            Err(e) => malformed.push(RejectedEvent {
                index,
                event_id,
                code: "SCHEMA_VIOLATION".into(),
                reason: e.to_string(),
            }),
        }
    }
    let mut outcome = store.append_events(&cid, decoded)?;
    for r in &mut outcome.rejected {
        r.index = positions[r.index];
    }
    outcome.rejected.extend(malformed);
    outcome.rejected.sort_by_key(|r| r.index);
    Ok(Json(outcome))
}

async fn progress(
    State(store): State<Shared>,
    Path((cid, sid)): Path<(CourseId, StudentId)>,
    Query(q): Query<AtQuery>,
) -> ApiResult<Response> {
    Ok(Json(store.progress(&cid, &sid, query_time(&q)?)?).into_response())
}

async fn learning_path(
    State(store): State<Shared>,
    Path((cid, sid)): Path<(CourseId, StudentId)>,
    Query(q): Query<AtQuery>,
) -> ApiResult<Response> {
    Ok(Json(store.learning_path(&cid, &sid, query_time(&q)?)?).into_response())
}

async fn report(
    State(store): State<Shared>,
    Path((cid, sid)): Path<(CourseId, StudentId)>,
    Query(q): Query<AtQuery>,
) -> ApiResult<Response> {
    Ok(Json(store.report(&cid, &sid, query_time(&q)?)?).into_response())
}

async fn statistics(
    State(store): State<Shared>,
    Path((cid, eid)): Path<(CourseId, ResourceId)>,
    Query(q): Query<StudentQuery>,
) -> ApiResult<Response> {
    Ok(Json(store.statistics(&cid, &eid, q.student.as_ref())?).into_response())
}
