//! Test-only oracles and generators, independent of the engine's
//! evaluation path: a brute-force fixpoint evaluator with no grouping,
//! indexing, or scoping optimizations, a random corpus generator, and a
//! factorial-enumeration optimum for block alignment.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use ontocoref_core::compat;
use ontocoref_core::corpus::Corpus;
use ontocoref_core::engine::{EngineConfig, Scope, SubeventView};
use ontocoref_core::model::{
    normalize_entity, EventDescription, MentionId, MentionPair, Participant, PlaceSpec, Strength,
    TimePoint, TimeSpec,
};
use ontocoref_core::ontology::ProfileStore;
use ontocoref_core::ruledsl::{Condition, ConditionKind, CorefRule, Feature, RuleSet};

pub type OracleEdges = BTreeMap<(MentionPair, Strength), (String, u32)>;

/// Naive fixpoint: loop over every (unordered pair, rule) combination each
/// round until nothing new is derived. Scope is checked per pair, subevent
/// conditions read the previous round's edges.
pub fn oracle_evaluate(
    corpus: &Corpus,
    rules: &RuleSet,
    profiles: &ProfileStore,
    config: &EngineConfig,
) -> OracleEdges {
    let mut events: Vec<&EventDescription> = corpus.mentions().collect();
    events.sort_by(|a, b| a.id.cmp(&b.id));

    let mut edges: OracleEdges = BTreeMap::new();
    let mut round = 0u32;
    loop {
        round += 1;
        let snapshot: BTreeSet<(MentionPair, Strength)> = edges.keys().cloned().collect();
        let mut new_edges: OracleEdges = BTreeMap::new();

        for i in 0..events.len() {
            for j in (i + 1)..events.len() {
                let (e1, e2) = (events[i], events[j]);
                if !in_scope(e1, e2, config.scope) {
                    continue;
                }
                if !profiles.has_type(&e1.event_type) || !profiles.has_type(&e2.event_type) {
                    continue;
                }
                let pair = MentionPair::new(e1.id.clone(), e2.id.clone()).unwrap();
                for rule in rules.enabled_rules() {
                    let key = (pair.clone(), rule.strength);
                    if snapshot.contains(&key) || new_edges.contains_key(&key) {
                        continue;
                    }
                    let fired = rule_holds(rule, e1, e2, &snapshot, config)
                        || rule_holds(rule, e2, e1, &snapshot, config);
                    if fired {
                        new_edges.insert(key, (rule.rule_id.clone(), round));
                    }
                }
            }
        }

        if new_edges.is_empty() {
            break;
        }
        edges.extend(new_edges);
    }
    edges
}

fn in_scope(e1: &EventDescription, e2: &EventDescription, scope: Scope) -> bool {
    match scope {
        Scope::WithinDocument => e1.topic_id == e2.topic_id && e1.doc_id == e2.doc_id,
        Scope::WithinTopic => e1.topic_id == e2.topic_id,
        Scope::CrossTopic => true,
    }
}

fn rule_holds(
    rule: &CorefRule,
    e1: &EventDescription,
    e2: &EventDescription,
    snapshot: &BTreeSet<(MentionPair, Strength)>,
    config: &EngineConfig,
) -> bool {
    if e1.event_type != rule.type_guard_e1 || e2.event_type != rule.type_guard_e2 {
        return false;
    }
    rule.conditions
        .iter()
        .all(|cond| condition_holds(cond, e1, e2, rule.strength, snapshot, config))
}

fn condition_holds(
    cond: &Condition,
    e1: &EventDescription,
    e2: &EventDescription,
    strength: Strength,
    snapshot: &BTreeSet<(MentionPair, Strength)>,
    config: &EngineConfig,
) -> bool {
    match (cond.kind, &cond.lhs.feature, &cond.rhs.feature) {
        (ConditionKind::Eq, Feature::Role(r1), Feature::Role(r2)) => {
            compat::role_eq(e1, r1, e2, r2)
        }
        (ConditionKind::Eq, Feature::Time, Feature::Time) => {
            compat::time_eq(e1.time.as_ref(), e2.time.as_ref())
        }
        (ConditionKind::Eq, Feature::Place, Feature::Place) => {
            compat::place_eq(e1.place.as_ref(), e2.place.as_ref())
        }
        (ConditionKind::Compat, Feature::Time, Feature::Time) => {
            compat::time_compat(e1.time.as_ref(), e2.time.as_ref())
        }
        (ConditionKind::Compat, Feature::Place, Feature::Place) => {
            compat::place_compat(e1.place.as_ref(), e2.place.as_ref())
        }
        (ConditionKind::SubeventCoref, Feature::SubEvent, Feature::SubEvent) => {
            let view = match strength {
                Strength::Certain => config.certain_reads,
                Strength::Possible => config.possible_reads,
            };
            let strengths: &[Strength] = match view {
                SubeventView::Certain => &[Strength::Certain],
                SubeventView::Possible => &[Strength::Possible],
                SubeventView::All => &[Strength::Certain, Strength::Possible],
            };
            e1.subevents.iter().any(|s1| {
                e2.subevents.iter().any(|s2| {
                    s1 != s2 && {
                        let pair = MentionPair::new(s1.clone(), s2.clone()).unwrap();
                        strengths
                            .iter()
                            .any(|&s| snapshot.contains(&(pair.clone(), s)))
                    }
                })
            })
        }
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Random corpus generation
// ---------------------------------------------------------------------------

const EVENT_TYPES: &[&str] = &[
    "Arresting",
    "Killing",
    "Dying",
    "Charging",
    "Shooting",
    "Attacking",
];
const ENTITIES: &[&str] = &["ex:p1", "ex:p2", "ex:p3", "ex:p4", "ex:p5"];
const LEMMAS: &[&str] = &["kill", "die", "shoot", "arrest", "charge", "attack", "slay"];

/// (place id, ancestry most specific first); overlapping chains so that
/// containment fires often.
const PLACES: &[(&str, &[&str])] = &[
    ("ex:downtown", &["ex:cityA", "ex:regionA", "ex:landA"]),
    ("ex:cityA", &["ex:regionA", "ex:landA"]),
    ("ex:cityB", &["ex:regionA", "ex:landA"]),
    ("ex:regionA", &["ex:landA"]),
    ("ex:landA", &[]),
    ("ex:cityC", &["ex:landB"]),
    ("ex:landB", &[]),
];

pub fn random_corpus(rng: &mut ChaCha8Rng, max_events: usize, profiles: &ProfileStore) -> Corpus {
    let n = rng.gen_range(1..=max_events);
    let mut mentions = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("e{i:02}");
        // A sprinkling of unprofiled types exercises the skip path.
        let event_type = if rng.gen_bool(0.08) {
            "Exploding".to_string()
        } else {
            EVENT_TYPES.choose(rng).unwrap().to_string()
        };
        let topic_id = if rng.gen_bool(0.7) { "t1" } else { "t2" }.to_string();
        let doc_id = if rng.gen_bool(0.6) { "d1" } else { "d2" }.to_string();

        let mut participants = Vec::new();
        if let Some(profile) = profiles.get(&event_type) {
            for decl in profile.all_roles() {
                if rng.gen_bool(0.55) {
                    let count = if rng.gen_bool(0.25) { 2 } else { 1 };
                    for _ in 0..count {
                        participants.push(Participant {
                            role: decl.role.clone(),
                            entity: normalize_entity(ENTITIES.choose(rng).unwrap()).unwrap(),
                        });
                    }
                }
            }
        }

        let time = rng.gen_bool(0.7).then(|| random_time(rng));
        let place = rng.gen_bool(0.6).then(|| {
            let (id, ancestry) = PLACES.choose(rng).unwrap();
            PlaceSpec::new(
                normalize_entity(id).unwrap(),
                ancestry
                    .iter()
                    .map(|a| normalize_entity(a).unwrap())
                    .collect(),
            )
            .unwrap()
        });

        let mut subevents = BTreeSet::new();
        if n > 1 && rng.gen_bool(0.4) {
            for _ in 0..rng.gen_range(1..=2) {
                let target = rng.gen_range(0..n);
                if target != i {
                    subevents.insert(MentionId::new(format!("e{target:02}")));
                }
            }
        }

        mentions.push(EventDescription {
            id: MentionId::new(id),
            event_type,
            participants,
            time,
            place,
            subevents,
            lemma: LEMMAS.choose(rng).unwrap().to_string(),
            doc_id,
            topic_id,
        });
    }
    Corpus::from_mentions(mentions, BTreeMap::new()).expect("generated corpus is valid")
}

fn random_time(rng: &mut ChaCha8Rng) -> TimeSpec {
    let point = |rng: &mut ChaCha8Rng, level: u8| -> TimePoint {
        let year = 2008 + rng.gen_range(0..2);
        let text = match level {
            0 => format!("{year}"),
            1 => format!("{year}-{:02}", rng.gen_range(1..=2)),
            _ => format!(
                "{year}-{:02}-{:02}",
                rng.gen_range(1..=2),
                rng.gen_range(1..=3)
            ),
        };
        TimePoint::parse(&text).unwrap()
    };
    let level = rng.gen_range(0..3u8);
    let a = point(rng, level);
    if rng.gen_bool(0.3) {
        let b = point(rng, level);
        let (start, end) = if a <= b { (a, b) } else { (b, a) };
        TimeSpec::new(start, end).unwrap()
    } else {
        TimeSpec::instant(a)
    }
}

// ---------------------------------------------------------------------------
// Factorial alignment oracle
// ---------------------------------------------------------------------------

/// Best total block overlap over every one-to-one alignment, found by
/// enumerating all injections of the smaller side into the larger.
pub fn best_alignment_by_enumeration(
    key: &[BTreeSet<MentionId>],
    response: &[BTreeSet<MentionId>],
) -> u64 {
    let (small, large): (&[BTreeSet<MentionId>], &[BTreeSet<MentionId>]) =
        if key.len() <= response.len() {
            (key, response)
        } else {
            (response, key)
        };
    let indices: Vec<usize> = (0..large.len()).collect();
    let mut best = 0u64;
    permute_injections(&indices, small.len(), &mut Vec::new(), &mut |perm| {
        let total: u64 = perm
            .iter()
            .enumerate()
            .map(|(s, &l)| small[s].intersection(&large[l]).count() as u64)
            .sum();
        best = best.max(total);
    });
    best
}

fn permute_injections(
    pool: &[usize],
    len: usize,
    current: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if current.len() == len {
        visit(current);
        return;
    }
    for &candidate in pool {
        if !current.contains(&candidate) {
            current.push(candidate);
            permute_injections(pool, len, current, visit);
            current.pop();
        }
    }
}

/// Random partition of `n` mentions into at most `max_blocks` blocks.
pub fn random_partition(
    rng: &mut ChaCha8Rng,
    n: usize,
    max_blocks: usize,
) -> Vec<BTreeSet<MentionId>> {
    let blocks = rng.gen_range(1..=max_blocks.min(n.max(1)));
    let mut out: Vec<BTreeSet<MentionId>> = vec![BTreeSet::new(); blocks];
    for i in 0..n {
        let b = rng.gen_range(0..blocks);
        out[b].insert(MentionId::new(format!("m{i:02}")));
    }
    out.retain(|b| !b.is_empty());
    out
}
