//! Acceptance criteria AC-1 .. AC-8. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::time::Instant;

use chrono::TimeDelta;
use competency_core::course::{
    CompetencyEntry, CourseDocument, Grant, RelationEntry, ResourceEntry,
};
use competency_core::metrics::{is_mastered, mastery_score, ring_values, MetricConfig};
use competency_core::path::generate_path;
use competency_core::progress::completion_status;
use competency_core::report::student_report;
use competency_core::simulate::{simulated_student, SimulationConfig};
use competency_core::time::parse_timestamp;
use competency_core::{
    CompetencyLink, Course, EventKind, EventLog, InteractionEvent, LinkKind, RelationType,
    ResourceKind, StudentId, Taxonomy, Timestamp,
};
use competency_service::Store;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn ts(s: &str) -> Timestamp {
    parse_timestamp(s).unwrap()
}

fn competency(id: &str, threshold: f64) -> CompetencyEntry {
    CompetencyEntry {
        id: id.into(),
        title: id.to_uppercase(),
        description: String::new(),
        taxonomy: Taxonomy::Apply,
        mastery_threshold: threshold,
    }
}

fn resource(id: &str, kind: ResourceKind, order_index: u32) -> ResourceEntry {
    ResourceEntry {
        id: id.into(),
        kind,
        title: id.into(),
        max_points: kind.is_exercise().then_some(10.0),
        order_index,
    }
}

fn link(c: &str, r: &str, kind: LinkKind) -> CompetencyLink {
    CompetencyLink {
        competency_id: c.into(),
        resource_id: r.into(),
        link_kind: kind,
    }
}

fn document(id: &str) -> CourseDocument {
    CourseDocument {
        course_id: id.into(),
        title: id.into(),
        competencies: vec![],
        relations: vec![],
        resources: vec![],
        links: vec![],
        config: MetricConfig::default(),
        grants: vec![],
    }
}

fn ac1() -> Outcome {
    let cfg = MetricConfig::default();
    let green = ring_values(0.0, 0.6, 0.8, &cfg, false)
        .map_err(|e| e.to_string())?
        .green;
    ensure!((green - 0.75).abs() <= 1e-9, "ring_values green = {green}");

    // The same number from a stored course: one exercise scored 6/10.
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
    let mut doc = document("ac1");
    doc.competencies.push(competency("k", 0.8));
    doc.resources.push(resource("x", ResourceKind::Exercise, 0));
    doc.links.push(link("k", "x", LinkKind::LearningGoal));
    store.import_course(&doc).map_err(|e| e.to_string())?;
    let t = ts("2024-01-01T00:00:00Z");
    store
        .append_events(
            &"ac1".into(),
            vec![InteractionEvent::submission("e", "s", "x", t, 0.6)],
        )
        .map_err(|e| e.to_string())?;
    let p = &store
        .progress(&"ac1".into(), &"s".into(), t)
        .map_err(|e| e.to_string())?[0];
    ensure!(
        (p.rings.green - 0.75).abs() <= 1e-9,
        "stored course green = {}",
        p.rings.green
    );
    ensure!((p.confidence - 0.6).abs() <= 1e-12, "C = {}", p.confidence);
    Ok(format!(
        "green = {} (library), {} (store)",
        green, p.rings.green
    ))
}

fn ac2() -> Outcome {
    let cfg = MetricConfig::new(2.0 / 3.0).map_err(|e| e.to_string())?;
    let m = mastery_score(0.5, 0.6, 0.8, &cfg).map_err(|e| e.to_string())?;
    ensure!((m - 2.0 / 3.0).abs() <= 1e-9, "M(0.5, 0.6, 0.8) = {m}");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t: f64 = rng.random_range(f64::MIN_POSITIVE..=1.0);
        let w: f64 = rng.random_range(0.0..1.0);
        let cfg = MetricConfig::new(w).map_err(|e| e.to_string())?;
        let m = mastery_score(1.0, t, t, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max((m.min(1.0) - 1.0).abs());
        ensure!(
            (m.min(1.0) - 1.0).abs() <= 1e-9,
            "min(M, 1) = {m} at T = {t}, w = {w}"
        );
    }
    Ok(format!(
        "M = {m:.12}; min(M,1) = 1 on 100 samples (max dev {worst:e})"
    ))
}

fn ac3() -> Outcome {
    let mut doc = document("ac3");
    for id in ["a", "b", "c"] {
        doc.competencies.push(competency(id, 0.8));
    }
    let mut course = Course::from_document(&doc).map_err(|e| e.to_string())?;
    let code = |r: Result<_, competency_core::CourseError>| match r {
        Ok(_) => "OK".to_owned(),
        Err(e) => e.code().to_owned(),
    };
    let (a, b, c) = (&"a".into(), &"b".into(), &"c".into());
    let cases = [
        (
            "reflexive",
            code(course.add_relation(a, a, RelationType::Assumes)),
            "REFLEXIVE_RELATION",
        ),
        (
            "first",
            code(course.add_relation(b, a, RelationType::Assumes)),
            "OK",
        ),
        (
            "same-type duplicate",
            code(course.add_relation(b, a, RelationType::Assumes)),
            "DUPLICATE_RELATION",
        ),
        (
            "different type",
            code(course.add_relation(b, a, RelationType::Relates)),
            "OK",
        ),
        (
            "direct cycle",
            code(course.add_relation(a, b, RelationType::Assumes)),
            "CYCLE_INTRODUCED",
        ),
        (
            "chain",
            code(course.add_relation(c, b, RelationType::Extends)),
            "OK",
        ),
        (
            "closing cycle",
            code(course.add_relation(a, c, RelationType::Assumes)),
            "CYCLE_INTRODUCED",
        ),
    ];
    for (name, got, want) in &cases {
        ensure!(got == want, "{name}: got {got}, want {want}");
    }
    ensure!(
        course.graph().relations().count() == 3,
        "rejected relations were kept"
    );
    Ok("REFLEXIVE_RELATION, DUPLICATE_RELATION, second type accepted, CYCLE_INTRODUCED".into())
}

fn ac4() -> Outcome {
    let mut doc = document("ac4");
    doc.competencies.push(competency("k", 0.8));
    doc.resources
        .push(resource("v", ResourceKind::VideoUnit, 0));
    doc.links.push(link("k", "v", LinkKind::LearningGoal));
    let course = Course::from_document(&doc).map_err(|e| e.to_string())?;
    let t0 = ts("2024-05-01T12:00:00Z");
    let mut log = EventLog::new();
    course
        .ingest(
            &mut log,
            InteractionEvent::click("r", "s", "v", EventKind::VideoReveal, t0),
        )
        .map_err(|e| e.to_string())?;
    let video = &course.resources()["v"];
    let s = StudentId::from("s");
    let before = t0 + TimeDelta::milliseconds(4 * 60_000 + 59_999);
    let at = t0 + TimeDelta::minutes(5);
    let done = |t| {
        completion_status(&log, &s, video, t)
            .map(|c| c.completed)
            .map_err(|e| e.to_string())
    };
    ensure!(!done(before)?, "complete at t0+4m59.999s");
    ensure!(done(at)?, "incomplete at t0+5m00.000s");
    let p = |t| {
        course
            .progress_all(&s, &log, t)
            .map(|v| v[0].progress)
            .map_err(|e| e.to_string())
    };
    ensure!(
        p(before)? == 0.0 && p(at)? == 1.0,
        "progress disagrees with completion"
    );
    Ok("incomplete at +4m59.999s, complete at +5m00.000s".into())
}

fn ac5() -> Outcome {
    let cfg = MetricConfig::default();
    ensure!(is_mastered(1.0, 0.8, 0.8, false), "P=1, C=T not mastered");
    ensure!(
        !is_mastered(1.0, 0.8 - 0.001, 0.8, false),
        "P=1, C=T-0.001 mastered"
    );
    ensure!(is_mastered(0.0, 0.0, 0.8, true), "grant ignored");

    // Grant through a course: no activity at all, still mastered with a full red ring.
    let mut doc = document("ac5");
    doc.competencies.push(competency("k", 0.8));
    doc.resources.push(resource("x", ResourceKind::Exercise, 0));
    doc.links.push(link("k", "x", LinkKind::LearningGoal));
    doc.grants.push(Grant {
        student_id: "g".into(),
        competency_id: "k".into(),
    });
    let course = Course::from_document(&doc).map_err(|e| e.to_string())?;
    let p = &course
        .progress_all(&"g".into(), &EventLog::new(), ts("2024-01-01T00:00:00Z"))
        .map_err(|e| e.to_string())?[0];
    ensure!(
        p.mastered && p.rings.red == 1.0,
        "granted: mastered {} red {}",
        p.mastered,
        p.rings.red
    );
    ensure!(p.mastery == 0.0, "grant changed M to {}", p.mastery);

    // Exactly at the threshold through real events.
    let mut log = EventLog::new();
    let t = ts("2024-01-01T00:00:00Z");
    course
        .ingest(
            &mut log,
            InteractionEvent::submission("e", "s", "x", t, 0.8),
        )
        .map_err(|e| e.to_string())?;
    let p = &course
        .progress_all(&"s".into(), &log, t)
        .map_err(|e| e.to_string())?[0];
    ensure!(p.mastered && p.rings.red == 1.0, "score = T not mastered");
    let red = ring_values(1.0, 0.799, 0.8, &cfg, false)
        .map_err(|e| e.to_string())?
        .red;
    ensure!(red < 1.0, "red ring full below threshold");
    Ok("C = T mastered, C = T - 0.001 not, grant gives red = 1".into())
}

// ---------------------------------------------------------------------------
// AC-6: brute-force path validator.

struct Scenario {
    doc: CourseDocument,
    events: Vec<InteractionEvent>,
    /// Competency → (linked units, exercise).
    units: BTreeMap<String, Vec<(String, u32)>>,
    exercise_order: BTreeMap<String, u32>,
    opened: BTreeSet<String>,
    scores: BTreeMap<String, f64>,
}

const POOL: [&str; 8] = ["k", "b", "q", "e", "m", "a", "x", "f"];
const LEVELS: [f64; 6] = [0.3, 0.5, 0.6, 0.8, 0.9, 1.0];

fn scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let n = rng.random_range(1..=8);
    let mut names: Vec<&str> = POOL.to_vec();
    names.shuffle(rng);
    names.truncate(n);

    let mut doc = document("ac6");
    doc.config = MetricConfig::new([0.0, 0.5, 2.0 / 3.0, 0.9][rng.random_range(0..4)]).unwrap();
    let t = ts("2024-01-01T00:00:00Z");
    let mut events = Vec::new();
    let mut units = BTreeMap::new();
    let mut exercise_order = BTreeMap::new();
    let mut opened = BTreeSet::new();
    let mut scores = BTreeMap::new();
    for name in &names {
        let threshold = LEVELS[rng.random_range(1..LEVELS.len())];
        doc.competencies.push(competency(name, threshold));
        let ex = format!("x-{name}");
        let order = rng.random_range(0..4);
        doc.resources
            .push(resource(&ex, ResourceKind::Exercise, order));
        doc.links.push(link(name, &ex, LinkKind::LearningGoal));
        exercise_order.insert(name.to_string(), order);
        if rng.random_bool(0.6) {
            let score = LEVELS[rng.random_range(0..LEVELS.len())];
            events.push(InteractionEvent::submission(
                format!("sub-{name}"),
                "s",
                ex.as_str(),
                t,
                score,
            ));
            scores.insert(name.to_string(), score);
        }
        let mut mine = Vec::new();
        if rng.random_bool(0.5) {
            let unit = format!("u-{name}");
            let order = rng.random_range(0..4);
            doc.resources
                .push(resource(&unit, ResourceKind::TextUnit, order));
            doc.links.push(link(name, &unit, LinkKind::Prerequisite));
            mine.push((unit.clone(), order));
            if rng.random_bool(0.5) {
                events.push(InteractionEvent::click(
                    format!("open-{name}"),
                    "s",
                    unit.as_str(),
                    EventKind::TextOpen,
                    t,
                ));
                opened.insert(unit);
            }
        }
        units.insert(name.to_string(), mine);
        if rng.random_bool(0.2) {
            doc.grants.push(Grant {
                student_id: "s".into(),
                competency_id: (*name).into(),
            });
        }
    }

    // Random relations; keep the ones the graph accepts.
    let mut course = Course::from_document(&doc).unwrap();
    for _ in 0..rng.random_range(0..=3 * n) {
        let tail = names[rng.random_range(0..n)];
        let head = names[rng.random_range(0..n)];
        let kind = RelationType::ALL[rng.random_range(0..4)];
        if course
            .add_relation(&tail.into(), &head.into(), kind)
            .is_ok()
        {
            doc.relations.push(RelationEntry {
                id: None,
                tail_id: tail.into(),
                head_id: head.into(),
                kind,
            });
        }
    }
    Scenario {
        doc,
        events,
        units,
        exercise_order,
        opened,
        scores,
    }
}

fn build(doc: &CourseDocument, events: &[InteractionEvent]) -> Result<(Course, EventLog), String> {
    let course = Course::from_document(doc).map_err(|e| e.to_string())?;
    let mut log = EventLog::new();
    for e in events {
        course
            .ingest(&mut log, e.clone())
            .map_err(|e| e.to_string())?;
    }
    Ok((course, log))
}

fn validate_path(sc: &Scenario, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let doc = &sc.doc;
    let (course, log) = build(doc, &sc.events)?;
    let at = ts("2024-01-01T01:00:00Z");
    let student = StudentId::from("s");
    let path = generate_path(&student, &course, &log, at).map_err(|e| e.to_string())?;

    // Clusters: connected components over Matches, found by BFS.
    let ids: Vec<String> = doc.competencies.iter().map(|c| c.id.to_string()).collect();
    let mut adj: BTreeMap<&str, Vec<&str>> = ids.iter().map(|i| (i.as_str(), vec![])).collect();
    for r in doc
        .relations
        .iter()
        .filter(|r| r.kind == RelationType::Matches)
    {
        adj.get_mut(r.tail_id.as_str())
            .unwrap()
            .push(r.head_id.as_str());
        adj.get_mut(r.head_id.as_str())
            .unwrap()
            .push(r.tail_id.as_str());
    }
    let mut cluster_of: BTreeMap<&str, String> = BTreeMap::new();
    let mut members: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for start in &ids {
        if cluster_of.contains_key(start.as_str()) {
            continue;
        }
        let mut seen = vec![start.as_str()];
        let mut queue = VecDeque::from([start.as_str()]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen.contains(&v) {
                    seen.push(v);
                    queue.push_back(v);
                }
            }
        }
        seen.sort();
        let cid = seen[0].to_owned();
        for m in &seen {
            cluster_of.insert(m, cid.clone());
        }
        members.insert(cid, seen);
    }
    let mut must_precede: BTreeSet<(String, String)> = BTreeSet::new();
    for r in doc.relations.iter().filter(|r| r.kind.is_ordering()) {
        must_precede.insert((
            cluster_of[r.head_id.as_str()].clone(),
            cluster_of[r.tail_id.as_str()].clone(),
        ));
    }

    // Per-competency metrics straight from the definitions.
    let w = doc.config.mastery_weight;
    let mut mastered = BTreeMap::new();
    let mut capped = BTreeMap::new();
    for c in &doc.competencies {
        let id = c.id.as_str();
        let linked = 1 + sc.units[id].len();
        let done = usize::from(sc.scores.contains_key(id))
            + sc.units[id]
                .iter()
                .filter(|(u, _)| sc.opened.contains(u))
                .count();
        let p = done as f64 / linked as f64;
        let conf = sc.scores.get(id).copied().unwrap_or(0.0);
        let t = c.mastery_threshold;
        let granted = doc.grants.iter().any(|g| g.competency_id == c.id);
        mastered.insert(id, granted || (p == 1.0 && conf >= t));
        capped.insert(id, (p + w * (conf / t - p)).min(1.0));
    }
    let cluster_done = |cid: &str| members[cid].iter().all(|m| mastered[m]);
    let summary = |cid: &str| {
        members[cid]
            .iter()
            .map(|m| capped[m])
            .fold(f64::INFINITY, f64::min)
    };

    // Completeness: exactly the clusters with an unmastered member, once each.
    let listed: Vec<String> = path
        .entries
        .iter()
        .map(|e| e.cluster_id.to_string())
        .collect();
    let expected: BTreeSet<String> = members
        .keys()
        .filter(|c| !cluster_done(c))
        .cloned()
        .collect();
    ensure!(
        listed.iter().cloned().collect::<BTreeSet<_>>() == expected
            && listed.len() == expected.len(),
        "clusters {listed:?}, expected {expected:?}"
    );

    let mut settled: BTreeSet<String> = members
        .keys()
        .filter(|c| cluster_done(c))
        .cloned()
        .collect();
    for (pos, entry) in path.entries.iter().enumerate() {
        let cid = entry.cluster_id.as_str();
        let got: Vec<&str> = entry.competency_ids.iter().map(|c| c.as_str()).collect();
        ensure!(got == members[cid], "cluster {cid} members {got:?}");
        ensure!(
            (entry.mastery_summary - summary(cid)).abs() <= 1e-12,
            "summary of {cid}: {} vs {}",
            entry.mastery_summary,
            summary(cid)
        );
        // Prerequisite order.
        for (before, after) in &must_precede {
            if after == cid {
                ensure!(
                    settled.contains(before),
                    "{cid} at {pos} before its prerequisite {before}"
                );
            }
        }
        // Greedy choice: lowest summary among ready clusters, then smallest id.
        let best = members
            .keys()
            .filter(|c| !settled.contains(*c))
            .filter(|c| {
                must_precede
                    .iter()
                    .all(|(b, a)| a != *c || settled.contains(b))
            })
            .min_by(|a, b| summary(a).total_cmp(&summary(b)).then(a.cmp(b)))
            .unwrap();
        ensure!(
            best == cid,
            "position {pos}: chose {cid}, reference scheduler chose {best}"
        );
        settled.insert(cid.to_owned());

        // Recommendations: undone linked resources, prerequisites first.
        let mut want: Vec<(u8, u32, String)> = Vec::new();
        for m in &members[cid] {
            if !sc.scores.contains_key(*m) {
                want.push((1, sc.exercise_order[*m], format!("x-{m}")));
            }
            for (u, order) in &sc.units[*m] {
                if !sc.opened.contains(u) {
                    want.push((0, *order, u.clone()));
                }
            }
        }
        want.sort();
        let want: Vec<String> = want.into_iter().map(|(_, _, id)| id).collect();
        let got: Vec<String> = entry
            .recommended_resources
            .iter()
            .map(|r| r.to_string())
            .collect();
        ensure!(got == want, "{cid} recommends {got:?}, expected {want:?}");
    }

    // Determinism under permutation of every input list.
    let mut shuffled = doc.clone();
    shuffled.competencies.shuffle(rng);
    shuffled.relations.shuffle(rng);
    shuffled.resources.shuffle(rng);
    shuffled.links.shuffle(rng);
    shuffled.grants.shuffle(rng);
    let mut events = sc.events.clone();
    events.shuffle(rng);
    let (course2, log2) = build(&shuffled, &events)?;
    let path2 = generate_path(&student, &course2, &log2, at).map_err(|e| e.to_string())?;
    ensure!(
        serde_json::to_string(&path).unwrap() == serde_json::to_string(&path2).unwrap(),
        "path changed under input permutation"
    );
    Ok(())
}

fn ac6() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut competencies = 0;
    for case in 0..1000 {
        let sc = scenario(&mut rng);
        competencies += sc.doc.competencies.len();
        validate_path(&sc, &mut rng).map_err(|e| format!("case {case}: {e}"))?;
    }
    let elapsed = start.elapsed();
    ensure!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    Ok(format!(
        "1000 graphs ({competencies} competencies) valid in {elapsed:.2?}"
    ))
}

// ---------------------------------------------------------------------------
// AC-7: closed loop.

fn fixture() -> CourseDocument {
    serde_json::from_str(include_str!("../fixtures/algorithms.json")).unwrap()
}

fn ac7() -> Outcome {
    let start = Instant::now();
    let doc = fixture();
    ensure!(
        doc.competencies.len() == 5 && doc.competencies.iter().all(|c| c.mastery_threshold == 0.8),
        "fixture is not 5 competencies at 0.8"
    );
    let students = 5;
    let mut total = 0;
    for seed in [1, 7, 42, 1234, 99_999] {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
        let cid = doc.course_id.clone();
        store.import_course(&doc).map_err(|e| e.to_string())?;
        let cfg = SimulationConfig::new(students, 200, seed);
        ensure!(cfg.min_score >= 0.8, "scores below threshold");
        let batch = store.simulate(&cid, &cfg).map_err(|e| e.to_string())?;
        ensure!(
            batch == store.simulate(&cid, &cfg).map_err(|e| e.to_string())?,
            "seed {seed}: not deterministic"
        );
        total += batch.len();
        let outcome = store
            .append_events(&cid, batch.clone())
            .map_err(|e| e.to_string())?;
        ensure!(
            outcome.accepted == batch.len() && outcome.rejected.is_empty(),
            "seed {seed}: {outcome:?}"
        );
        let at = batch.iter().map(|e| e.timestamp).max().unwrap() + TimeDelta::hours(1);
        for i in 1..=students {
            let sid = simulated_student(i);
            let report = store.report(&cid, &sid, at).map_err(|e| e.to_string())?;
            ensure!(
                report.progress.iter().all(|p| p.mastered),
                "seed {seed}: {sid} has unmastered competencies"
            );
            ensure!(
                report.learning_path.entries.is_empty(),
                "seed {seed}: {sid} path not empty"
            );
        }
        let more = store
            .simulate(&cid, &SimulationConfig::new(students, 10, seed))
            .map_err(|e| e.to_string())?;
        ensure!(
            more.is_empty(),
            "seed {seed}: mastered students still active"
        );
    }
    let elapsed = start.elapsed();
    ensure!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    Ok(format!(
        "5 seeds x {students} students mastered everything ({total} events) in {elapsed:.2?}"
    ))
}

// ---------------------------------------------------------------------------
// AC-8: event sourcing.

fn event_course() -> CourseDocument {
    let mut doc = document("ac8");
    doc.competencies.push(competency("a", 0.7));
    doc.competencies.push(competency("b", 0.9));
    doc.relations.push(RelationEntry {
        id: None,
        tail_id: "b".into(),
        head_id: "a".into(),
        kind: RelationType::Assumes,
    });
    let kinds = [
        ("f", ResourceKind::FileUnit, "a"),
        ("v", ResourceKind::VideoUnit, "a"),
        ("x", ResourceKind::Exercise, "a"),
        ("t", ResourceKind::TextUnit, "b"),
        ("o", ResourceKind::OnlineUnit, "b"),
        ("y", ResourceKind::Exercise, "b"),
    ];
    for (i, (id, kind, comp)) in kinds.into_iter().enumerate() {
        doc.resources.push(resource(id, kind, i as u32));
        doc.links.push(link(comp, id, LinkKind::LearningGoal));
    }
    doc
}

const STUDENTS: [&str; 3] = ["s1", "s2", "s3"];

fn random_events(rng: &mut ChaCha8Rng, doc: &CourseDocument) -> Vec<InteractionEvent> {
    let base = ts("2024-03-01T08:00:00Z");
    let n = rng.random_range(0..40);
    let mut events: Vec<InteractionEvent> = Vec::new();
    for i in 0..n {
        if !events.is_empty() && rng.random_bool(0.15) {
            let copy = events[rng.random_range(0..events.len())].clone();
            events.push(copy);
            continue;
        }
        let r = &doc.resources[rng.random_range(0..doc.resources.len())];
        let student = STUDENTS[rng.random_range(0..STUDENTS.len())];
        // Coarse minutes so equal timestamps are common.
        let at = base
            + TimeDelta::minutes(rng.random_range(0..40))
            + TimeDelta::milliseconds(rng.random_range(0..2) * 999);
        let id = format!("e{i:03}");
        let event = if r.kind.is_exercise() {
            let score = [0.0, 0.5, 0.7, 0.9, 1.0][rng.random_range(0..5)];
            InteractionEvent::submission(id, student, r.id.as_str(), at, score)
        } else if rng.random_bool(0.3) {
            InteractionEvent::click(id, student, r.id.as_str(), EventKind::ManualToggle, at)
        } else {
            InteractionEvent::click(id, student, r.id.as_str(), r.kind.completing_event(), at)
        };
        events.push(event);
    }
    events
}

/// Every observable query result, serialized.
fn digest(course: &Course, log: &EventLog) -> String {
    let mut out = String::new();
    for minutes in [0, 3, 5, 20, 45, 600] {
        let at = ts("2024-03-01T08:00:00Z") + TimeDelta::minutes(minutes);
        for s in STUDENTS {
            let report = student_report(course, &s.into(), log, at).unwrap();
            writeln!(out, "{}", serde_json::to_string(&report).unwrap()).unwrap();
        }
    }
    for ex in ["x", "y"] {
        let stats =
            competency_core::progress::exercise_statistics(log, &course.resources()[ex], None)
                .unwrap();
        writeln!(out, "{}", serde_json::to_string(&stats).unwrap()).unwrap();
    }
    out
}

fn store_digest(store: &Store) -> String {
    store
        .read(&"ac8".into(), |s| Ok(digest(&s.course, &s.log)))
        .unwrap()
}

fn event_case(rng: &mut ChaCha8Rng, doc: &CourseDocument) -> Result<(), String> {
    let events = random_events(rng, doc);
    let (course, log) = build(doc, &events)?;
    let full = digest(&course, &log);

    // Idempotence: everything ingested twice.
    let mut twice = log.clone();
    for e in &events {
        course
            .ingest(&mut twice, e.clone())
            .map_err(|e| e.to_string())?;
    }
    ensure!(
        twice == log && digest(&course, &twice) == full,
        "re-ingestion changed state"
    );

    // Order insensitivity.
    let mut shuffled = events.clone();
    shuffled.shuffle(rng);
    let (_, log2) = build(doc, &shuffled)?;
    ensure!(
        log2 == log && digest(&course, &log2) == full,
        "shuffled ingestion changed state"
    );

    // Crash replay through the store.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events/ac8.jsonl");
    {
        let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
        store.import_course(doc).map_err(|e| e.to_string())?;
        let mut rest = events.as_slice();
        while !rest.is_empty() {
            let k = rng.random_range(1..=rest.len());
            store
                .append_events(&"ac8".into(), rest[..k].to_vec())
                .map_err(|e| e.to_string())?;
            rest = &rest[k..];
        }
        ensure!(store_digest(&store) == full, "store disagrees with library");
    }
    let bytes = std::fs::read(&path).unwrap_or_default();
    let cut = rng.random_range(0..=bytes.len());
    if !bytes.is_empty() {
        std::fs::write(&path, &bytes[..cut]).unwrap();
    }
    let survived: Vec<InteractionEvent> = String::from_utf8_lossy(&bytes[..cut])
        .split_inclusive('\n')
        .filter(|l| l.ends_with('\n'))
        .map(|l| serde_json::from_str(l.trim_end()).unwrap())
        .collect();
    let store = Store::open(dir.path()).map_err(|e| format!("restart after cut at {cut}: {e}"))?;
    let (_, stale_log) = build(doc, &survived)?;
    ensure!(
        store_digest(&store) == digest(&course, &stale_log),
        "restart after cut at {cut} is not the surviving prefix"
    );
    // Clients retry everything; the store converges.
    let mut retry = events.clone();
    retry.shuffle(rng);
    store
        .append_events(&"ac8".into(), retry)
        .map_err(|e| e.to_string())?;
    ensure!(
        store_digest(&store) == full,
        "replay after cut at {cut} did not converge"
    );
    drop(store);
    let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
    ensure!(store_digest(&store) == full, "converged state not durable");
    Ok(())
}

fn ac8() -> Outcome {
    let start = Instant::now();
    let doc = event_course();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cases = 500;
    for case in 0..cases {
        event_case(&mut rng, &doc).map_err(|e| format!("case {case}: {e}"))?;
    }
    let elapsed = start.elapsed();
    ensure!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    Ok(format!(
        "{cases} random logs: idempotent, order-free, crash-replay converges ({elapsed:.2?})"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("AC-1 green ring worked example", ac1),
        ("AC-2 mastery formula", ac2),
        ("AC-3 relation validation", ac3),
        ("AC-4 video completion boundary", ac4),
        ("AC-5 mastered predicate", ac5),
        ("AC-6 path soundness oracle", ac6),
        ("AC-7 closed-loop simulation", ac7),
        ("AC-8 event sourcing", ac8),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
