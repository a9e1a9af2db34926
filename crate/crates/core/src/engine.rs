//! Fixpoint rule evaluation: derives certain and possible coreference edges
//! over a corpus.
//!
//! Evaluation proceeds in rounds. Within a round every in-scope event pair
//! is checked against every enabled rule over an immutable snapshot of the
//! previous round's edges, so the result is independent of evaluation order;
//! `hasCoref` conditions are what make later rounds derive more. The edge
//! set only grows and is bounded, so a least fixpoint is always reached.
//! Edges are stored unordered, at most one per pair and strength, with the
//! first deriving rule as provenance; no transitive closure is applied here.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::compat;
use crate::corpus::Corpus;
use crate::model::{
    CorefEdge, CorefMeasureValue, EventDescription, MentionId, MentionPair, Strength,
};
use crate::ontology::ProfileStore;
use crate::ruledsl::{Condition, ConditionKind, CorefRule, Feature, RuleSet};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no edge between {a} and {b}")]
    NoEdge { a: MentionId, b: MentionId },
    #[error("graph line {line}: {message}")]
    BadGraphLine { line: usize, message: String },
}

/// Which pairs of mentions are compared at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scope {
    WithinDocument,
    #[default]
    WithinTopic,
    CrossTopic,
}

/// Which edge classes a `hasCoref` condition may consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubeventView {
    Certain,
    Possible,
    All,
}

impl SubeventView {
    fn contains(&self, strength: Strength) -> bool {
        match self {
            SubeventView::Certain => strength == Strength::Certain,
            SubeventView::Possible => strength == Strength::Possible,
            SubeventView::All => true,
        }
    }
}

/// Evaluation switches. The defaults are conservative: a certain-strength
/// rule only consumes certain subevent links, while a possible-strength rule
/// consumes any link.
#[derive(Debug, Clone, Copy)]
pub struct EngineConfig {
    pub scope: Scope,
    pub certain_reads: SubeventView,
    pub possible_reads: SubeventView,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            scope: Scope::WithinTopic,
            certain_reads: SubeventView::Certain,
            possible_reads: SubeventView::All,
        }
    }
}

/// Default weight assigned by [`measure`] to a possible-only pair.
pub const DEFAULT_POSSIBLE_WEIGHT: f64 = 0.5;

/// One satisfied condition with the value that satisfied it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionWitness {
    pub condition: String,
    pub witness: String,
}

/// One rule firing on one pair: the derivation record behind an edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub strength: Strength,
    pub rule_id: String,
    pub iteration: u32,
    pub witnesses: Vec<ConditionWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct EdgeProvenance {
    rule_id: String,
    iteration: u32,
}

/// The derived coreference graph: typed edges over all corpus mentions plus
/// per-round bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorefGraph {
    nodes: BTreeSet<MentionId>,
    certain: BTreeMap<MentionPair, EdgeProvenance>,
    possible: BTreeMap<MentionPair, EdgeProvenance>,
    firings: BTreeMap<MentionPair, Vec<Firing>>,
    rounds: u32,
    /// Cumulative (certain, possible) edge counts after each round.
    round_counts: Vec<(usize, usize)>,
    warnings: Vec<String>,
}

impl CorefGraph {
    pub fn nodes(&self) -> &BTreeSet<MentionId> {
        &self.nodes
    }

    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    pub fn round_counts(&self) -> &[(usize, usize)] {
        &self.round_counts
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// (certain, possible) edge counts.
    pub fn counts(&self) -> (usize, usize) {
        (self.certain.len(), self.possible.len())
    }

    pub fn has_edge(&self, pair: &MentionPair, strength: Strength) -> bool {
        self.edges_of(strength).contains_key(pair)
    }

    fn edges_of(&self, strength: Strength) -> &BTreeMap<MentionPair, EdgeProvenance> {
        match strength {
            Strength::Certain => &self.certain,
            Strength::Possible => &self.possible,
        }
    }

    pub fn certain_edges(&self) -> impl Iterator<Item = CorefEdge> + '_ {
        self.iter_edges(Strength::Certain)
    }

    pub fn possible_edges(&self) -> impl Iterator<Item = CorefEdge> + '_ {
        self.iter_edges(Strength::Possible)
    }

    fn iter_edges(&self, strength: Strength) -> impl Iterator<Item = CorefEdge> + '_ {
        self.edges_of(strength)
            .iter()
            .map(move |(pair, prov)| CorefEdge {
                pair: pair.clone(),
                strength,
                rule_id: prov.rule_id.clone(),
                iteration: prov.iteration,
            })
    }

    /// All edges, certain then possible, in pair order.
    pub fn all_edges(&self) -> Vec<CorefEdge> {
        self.certain_edges().chain(self.possible_edges()).collect()
    }

    /// Pairs with at least one recorded rule firing, with their derivation
    /// records, in pair order.
    pub fn derivations(&self) -> impl Iterator<Item = (&MentionPair, &[Firing])> {
        self.firings.iter().map(|(pair, f)| (pair, f.as_slice()))
    }

    /// Deterministic line-oriented serialization: one edge per line,
    /// `<id_a> <strength> <id_b> <rule_id>` with `id_a < id_b`, lines sorted
    /// bytewise, trailing newline.
    pub fn serialize(&self) -> String {
        let mut lines: Vec<String> = self
            .all_edges()
            .iter()
            .map(|e| {
                format!(
                    "{} {} {} {}",
                    e.pair.first(),
                    e.strength,
                    e.pair.second(),
                    e.rule_id
                )
            })
            .collect();
        lines.sort();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }

    /// Parse a serialized graph over a known node set. Round numbers are not
    /// part of the wire format, so parsed edges carry iteration 0.
    pub fn parse_serialized(
        text: &str,
        nodes: BTreeSet<MentionId>,
    ) -> Result<CorefGraph, EngineError> {
        let mut graph = CorefGraph {
            nodes,
            ..CorefGraph::default()
        };
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = line.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let [a, strength, b, rule_id] = fields.as_slice() else {
                return Err(EngineError::BadGraphLine {
                    line: line_no,
                    message: "expected '<id_a> <strength> <id_b> <rule_id>'".to_string(),
                });
            };
            let strength = match *strength {
                "certain" => Strength::Certain,
                "possible" => Strength::Possible,
                other => {
                    return Err(EngineError::BadGraphLine {
                        line: line_no,
                        message: format!("unknown strength {other:?}"),
                    })
                }
            };
            let pair = MentionPair::new(MentionId::from(*a), MentionId::from(*b)).map_err(|e| {
                EngineError::BadGraphLine {
                    line: line_no,
                    message: e.to_string(),
                }
            })?;
            for id in [pair.first(), pair.second()] {
                if !graph.nodes.contains(id) {
                    return Err(EngineError::BadGraphLine {
                        line: line_no,
                        message: format!("edge endpoint {id} is not a corpus mention"),
                    });
                }
            }
            graph.insert_edge(pair, strength, rule_id, 0);
        }
        Ok(graph)
    }

    fn insert_edge(&mut self, pair: MentionPair, strength: Strength, rule_id: &str, round: u32) {
        let map = match strength {
            Strength::Certain => &mut self.certain,
            Strength::Possible => &mut self.possible,
        };
        map.entry(pair).or_insert_with(|| EdgeProvenance {
            rule_id: rule_id.to_string(),
            iteration: round,
        });
    }

    #[cfg(test)]
    pub(crate) fn for_tests(nodes: BTreeSet<MentionId>) -> CorefGraph {
        CorefGraph {
            nodes,
            ..CorefGraph::default()
        }
    }

    #[cfg(test)]
    pub(crate) fn insert_edge_for_tests(
        &mut self,
        pair: MentionPair,
        strength: Strength,
        rule_id: &str,
        round: u32,
    ) {
        self.insert_edge(pair, strength, rule_id, round);
    }
}

/// Evaluate the enabled rules over the corpus to a least fixpoint with the
/// default configuration at the given scope.
pub fn evaluate(
    corpus: &Corpus,
    rules: &RuleSet,
    profiles: &ProfileStore,
    scope: Scope,
) -> CorefGraph {
    evaluate_with(
        corpus,
        rules,
        profiles,
        &EngineConfig {
            scope,
            ..EngineConfig::default()
        },
    )
}

/// Evaluate with explicit configuration.
pub fn evaluate_with(
    corpus: &Corpus,
    rules: &RuleSet,
    profiles: &ProfileStore,
    config: &EngineConfig,
) -> CorefGraph {
    let mut graph = CorefGraph {
        nodes: corpus.universe(),
        ..CorefGraph::default()
    };

    let mut typed: Vec<&EventDescription> = Vec::new();
    for event in corpus.mentions() {
        if profiles.has_type(&event.event_type) {
            typed.push(event);
        } else {
            graph.warnings.push(format!(
                "{}: unknown event type {:?}, skipped",
                event.id, event.event_type
            ));
        }
    }

    // Scope groups, each sorted by mention id for deterministic enumeration.
    let mut groups: BTreeMap<String, Vec<&EventDescription>> = BTreeMap::new();
    for event in typed {
        let key = match config.scope {
            Scope::WithinDocument => format!("{}\u{1f}{}", event.topic_id, event.doc_id),
            Scope::WithinTopic => event.topic_id.clone(),
            Scope::CrossTopic => String::new(),
        };
        groups.entry(key).or_default().push(event);
    }
    for group in groups.values_mut() {
        group.sort_by(|a, b| a.id.cmp(&b.id));
    }

    let rules: Vec<&CorefRule> = rules.enabled_rules().collect();

    // Every round but the last adds at least one edge, and there are at
    // most pairs x 2 edges, so this bounds the loop.
    let max_rounds: u64 = groups
        .values()
        .map(|g| (g.len() * g.len().saturating_sub(1) / 2) as u64)
        .sum::<u64>()
        * 2
        + 1;

    loop {
        graph.rounds += 1;
        let snapshot = EdgeSnapshot {
            certain: graph.certain.keys().cloned().collect(),
            possible: graph.possible.keys().cloned().collect(),
        };
        let mut derived: Vec<(MentionPair, Firing)> = Vec::new();

        for group in groups.values() {
            for (i, &e1) in group.iter().enumerate() {
                for &e2 in &group[i + 1..] {
                    let pair = MentionPair::new(e1.id.clone(), e2.id.clone())
                        .expect("distinct mention ids");
                    for rule in &rules {
                        if snapshot.contains(&pair, rule.strength) {
                            continue;
                        }
                        let oriented = [(e1, e2), (e2, e1)];
                        let fired = oriented.iter().find_map(|&(a, b)| {
                            (a.event_type == rule.type_guard_e1
                                && b.event_type == rule.type_guard_e2)
                                .then(|| try_rule(rule, a, b, &snapshot, config))
                                .flatten()
                        });
                        if let Some(witnesses) = fired {
                            derived.push((
                                pair.clone(),
                                Firing {
                                    strength: rule.strength,
                                    rule_id: rule.rule_id.clone(),
                                    iteration: graph.rounds,
                                    witnesses,
                                },
                            ));
                        }
                    }
                }
            }
        }

        let mut new_edges = false;
        for (pair, firing) in derived {
            let map = match firing.strength {
                Strength::Certain => &mut graph.certain,
                Strength::Possible => &mut graph.possible,
            };
            if !map.contains_key(&pair) {
                new_edges = true;
                map.insert(
                    pair.clone(),
                    EdgeProvenance {
                        rule_id: firing.rule_id.clone(),
                        iteration: firing.iteration,
                    },
                );
            }
            graph.firings.entry(pair).or_default().push(firing);
        }
        graph
            .round_counts
            .push((graph.certain.len(), graph.possible.len()));
        if !new_edges {
            break;
        }
        debug_assert!(
            u64::from(graph.rounds) <= max_rounds,
            "fixpoint overran its bound"
        );
    }
    graph
}

struct EdgeSnapshot {
    certain: BTreeSet<MentionPair>,
    possible: BTreeSet<MentionPair>,
}

impl EdgeSnapshot {
    fn contains(&self, pair: &MentionPair, strength: Strength) -> bool {
        match strength {
            Strength::Certain => self.certain.contains(pair),
            Strength::Possible => self.possible.contains(pair),
        }
    }

    fn in_view(&self, pair: &MentionPair, view: SubeventView) -> bool {
        (view.contains(Strength::Certain) && self.certain.contains(pair))
            || (view.contains(Strength::Possible) && self.possible.contains(pair))
    }
}

/// Evaluate one rule on an oriented pair against the snapshot. Returns the
/// per-condition witnesses when every condition holds.
fn try_rule(
    rule: &CorefRule,
    e1: &EventDescription,
    e2: &EventDescription,
    snapshot: &EdgeSnapshot,
    config: &EngineConfig,
) -> Option<Vec<ConditionWitness>> {
    let mut witnesses = Vec::with_capacity(rule.conditions.len());
    for cond in &rule.conditions {
        let witness = eval_condition(cond, e1, e2, rule.strength, snapshot, config)?;
        witnesses.push(ConditionWitness {
            condition: cond.to_string(),
            witness,
        });
    }
    Some(witnesses)
}

fn eval_condition(
    cond: &Condition,
    e1: &EventDescription,
    e2: &EventDescription,
    strength: Strength,
    snapshot: &EdgeSnapshot,
    config: &EngineConfig,
) -> Option<String> {
    match (cond.kind, &cond.lhs.feature, &cond.rhs.feature) {
        (ConditionKind::Eq, Feature::Role(r1), Feature::Role(r2)) => {
            compat::role_eq_witness(e1, r1, e2, r2).map(|e| e.to_string())
        }
        (ConditionKind::Eq, Feature::Time, Feature::Time) => {
            compat::time_eq(e1.time.as_ref(), e2.time.as_ref())
                .then(|| e1.time.as_ref().expect("eq implies present").to_string())
        }
        (ConditionKind::Eq, Feature::Place, Feature::Place) => {
            compat::place_eq(e1.place.as_ref(), e2.place.as_ref()).then(|| {
                e1.place
                    .as_ref()
                    .expect("eq implies present")
                    .id()
                    .to_string()
            })
        }
        (ConditionKind::Compat, Feature::Time, Feature::Time) => {
            compat::time_compat(e1.time.as_ref(), e2.time.as_ref()).then(|| {
                format!(
                    "{} ~ {}",
                    e1.time.as_ref().expect("compat implies present"),
                    e2.time.as_ref().expect("compat implies present")
                )
            })
        }
        (ConditionKind::Compat, Feature::Place, Feature::Place) => {
            compat::place_compat(e1.place.as_ref(), e2.place.as_ref()).then(|| {
                format!(
                    "{} ~ {}",
                    e1.place.as_ref().expect("compat implies present").id(),
                    e2.place.as_ref().expect("compat implies present").id()
                )
            })
        }
        (ConditionKind::SubeventCoref, Feature::SubEvent, Feature::SubEvent) => {
            let view = match strength {
                Strength::Certain => config.certain_reads,
                Strength::Possible => config.possible_reads,
            };
            for s1 in &e1.subevents {
                for s2 in &e2.subevents {
                    if s1 == s2 {
                        continue;
                    }
                    let pair = MentionPair::new(s1.clone(), s2.clone()).expect("distinct ids");
                    if snapshot.in_view(&pair, view) {
                        return Some(format!("{s1} hasCoref {s2}"));
                    }
                }
            }
            None
        }
        // The parser rejects mixed-feature conditions.
        _ => None,
    }
}

/// The pairwise coreference measure: 1 for a certain edge, the configured
/// weight for a possible-only edge, 0 otherwise.
pub fn measure(graph: &CorefGraph, pair: &MentionPair, possible_weight: f64) -> CorefMeasureValue {
    let value = if graph.has_edge(pair, Strength::Certain) {
        1.0
    } else if graph.has_edge(pair, Strength::Possible) {
        possible_weight
    } else {
        0.0
    };
    CorefMeasureValue::new(value).expect("weight is validated by the caller")
}

/// The derivation trace of a pair: every rule firing recorded when its edge
/// first became derivable, in round order.
pub fn explain<'g>(graph: &'g CorefGraph, pair: &MentionPair) -> Result<&'g [Firing], EngineError> {
    match graph.firings.get(pair) {
        Some(firings) if !firings.is_empty() => Ok(firings),
        _ => Err(EngineError::NoEdge {
            a: pair.first().clone(),
            b: pair.second().clone(),
        }),
    }
}
