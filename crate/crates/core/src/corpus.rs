//! Corpus ingestion: the boundary where structured event descriptions and
//! gold coreference annotations enter the pipeline.
//!
//! The file format is line-delimited JSON, one record per line: mention
//! records carry the event description fields, `gold` records carry one
//! topic's gold partition. `#` lines are comments. The full schema lives in
//! docs/FORMATS.md; loading is order-preserving and deterministic, and every
//! record is validated with a line-precise error on failure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compat::Gazetteer;
use crate::metrics::Partition;
use crate::model::{
    normalize_entity, EventDescription, MentionId, Participant, PlaceSpec, TimeSpec,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus line {line}: {message}")]
    SchemaError { line: usize, message: String },
    #[error("corpus line {line}: duplicate mention id {id:?}")]
    DuplicateMentionId { line: usize, id: String },
    #[error("gold partition for topic {topic:?} does not match its mentions: {detail}")]
    GoldUniverseMismatch { topic: String, detail: String },
}

/// One document: its id and the event mentions extracted from it, in file
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub mentions: Vec<EventDescription>,
}

/// One topic: its id and its documents, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Topic {
    pub id: String,
    pub documents: Vec<Document>,
}

/// A validated, immutable corpus of event descriptions with optional gold
/// partitions per topic.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    topics: Vec<Topic>,
    gold: BTreeMap<String, Partition>,
    index: BTreeMap<MentionId, (usize, usize, usize)>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.topics == other.topics && self.gold == other.gold
    }
}

impl Corpus {
    pub fn topics(&self) -> &[Topic] {
        &self.topics
    }

    pub fn gold(&self, topic: &str) -> Option<&Partition> {
        self.gold.get(topic)
    }

    pub fn gold_partitions(&self) -> &BTreeMap<String, Partition> {
        &self.gold
    }

    /// All mentions in file order.
    pub fn mentions(&self) -> impl Iterator<Item = &EventDescription> {
        self.topics
            .iter()
            .flat_map(|t| t.documents.iter())
            .flat_map(|d| d.mentions.iter())
    }

    pub fn get(&self, id: &MentionId) -> Option<&EventDescription> {
        let &(t, d, m) = self.index.get(id)?;
        Some(&self.topics[t].documents[d].mentions[m])
    }

    pub fn num_mentions(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// All mention ids, sorted.
    pub fn universe(&self) -> BTreeSet<MentionId> {
        self.index.keys().cloned().collect()
    }

    /// Mention ids of one topic, sorted.
    pub fn topic_universe(&self, topic_id: &str) -> BTreeSet<MentionId> {
        self.topics
            .iter()
            .filter(|t| t.id == topic_id)
            .flat_map(|t| t.documents.iter())
            .flat_map(|d| d.mentions.iter())
            .map(|m| m.id.clone())
            .collect()
    }

    /// Build a corpus from event descriptions and per-topic gold blocks,
    /// running the same validation as the file loader.
    pub fn from_mentions(
        mentions: Vec<EventDescription>,
        gold_blocks: BTreeMap<String, Vec<BTreeSet<MentionId>>>,
    ) -> Result<Self, CorpusError> {
        let mut builder = CorpusBuilder::default();
        for (i, m) in mentions.into_iter().enumerate() {
            builder.push_mention(m, i + 1)?;
        }
        for (topic, blocks) in gold_blocks {
            builder.push_gold(topic, blocks, 0)?;
        }
        builder.finish()
    }

    /// Fill in ancestry for places that do not carry one inline.
    pub fn with_gazetteer(mut self, gazetteer: &Gazetteer) -> Self {
        for topic in &mut self.topics {
            for doc in &mut topic.documents {
                for mention in &mut doc.mentions {
                    if let Some(place) = &mention.place {
                        if place.ancestry().is_empty() {
                            if let Some(ancestry) = gazetteer.ancestry_of(place.id()) {
                                if let Ok(enriched) =
                                    PlaceSpec::new(place.id().clone(), ancestry.to_vec())
                                {
                                    mention.place = Some(enriched);
                                }
                            }
                        }
                    }
                }
            }
        }
        self
    }

    /// A corpus restricted to the mentions `keep` accepts. Emptied documents
    /// and topics are dropped; gold partitions are restricted alongside,
    /// with emptied blocks dropped.
    pub fn retain_mentions(&self, keep: impl Fn(&EventDescription) -> bool) -> Corpus {
        let mut topics = Vec::new();
        for topic in &self.topics {
            let mut documents = Vec::new();
            for doc in &topic.documents {
                let mentions: Vec<EventDescription> =
                    doc.mentions.iter().filter(|m| keep(m)).cloned().collect();
                if !mentions.is_empty() {
                    documents.push(Document {
                        id: doc.id.clone(),
                        mentions,
                    });
                }
            }
            if !documents.is_empty() {
                topics.push(Topic {
                    id: topic.id.clone(),
                    documents,
                });
            }
        }
        let mut filtered = Corpus {
            topics,
            gold: BTreeMap::new(),
            index: BTreeMap::new(),
        };
        filtered.rebuild_index();
        for (topic, partition) in &self.gold {
            let universe = filtered.topic_universe(topic);
            if !universe.is_empty() {
                filtered
                    .gold
                    .insert(topic.clone(), partition.restrict(&universe));
            }
        }
        filtered
    }

    fn rebuild_index(&mut self) {
        self.index.clear();
        for (t, topic) in self.topics.iter().enumerate() {
            for (d, doc) in topic.documents.iter().enumerate() {
                for (m, mention) in doc.mentions.iter().enumerate() {
                    self.index.insert(mention.id.clone(), (t, d, m));
                }
            }
        }
    }

    /// Serialize back to the line-delimited format: mention records grouped
    /// by topic and document in stored order, then gold records in topic
    /// order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for topic in &self.topics {
            for doc in &topic.documents {
                for mention in &doc.mentions {
                    let record = MentionRecord::from_description(mention);
                    out.push_str(&serde_json::to_string(&record).expect("record serializes"));
                    out.push('\n');
                }
            }
        }
        for (topic, partition) in &self.gold {
            let record = GoldRecord {
                gold: GoldBody {
                    topic: topic.clone(),
                    clusters: partition
                        .blocks()
                        .iter()
                        .map(|b| b.iter().map(|m| m.to_string()).collect())
                        .collect(),
                },
            };
            out.push_str(&serde_json::to_string(&record).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        std::fs::write(path, self.to_jsonl()).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Load and validate a corpus file.
pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}

/// Parse and validate corpus text.
pub fn parse_corpus(text: &str) -> Result<Corpus, CorpusError> {
    let mut builder = CorpusBuilder::default();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| CorpusError::SchemaError {
                line: line_no,
                message: e.to_string(),
            })?;
        if value.get("gold").is_some() {
            let record: GoldRecord =
                serde_json::from_value(value).map_err(|e| CorpusError::SchemaError {
                    line: line_no,
                    message: e.to_string(),
                })?;
            let blocks: Vec<BTreeSet<MentionId>> = record
                .gold
                .clusters
                .into_iter()
                .map(|c| c.into_iter().map(MentionId::new).collect())
                .collect();
            builder.push_gold(record.gold.topic, blocks, line_no)?;
        } else {
            let record: MentionRecord =
                serde_json::from_value(value).map_err(|e| CorpusError::SchemaError {
                    line: line_no,
                    message: e.to_string(),
                })?;
            let mention = record.into_description(line_no)?;
            builder.push_mention(mention, line_no)?;
        }
    }
    builder.finish()
}

#[derive(Default)]
struct CorpusBuilder {
    topics: Vec<Topic>,
    topic_pos: BTreeMap<String, usize>,
    seen: BTreeMap<MentionId, usize>,
    gold_blocks: Vec<(String, Vec<BTreeSet<MentionId>>, usize)>,
}

impl CorpusBuilder {
    fn push_mention(
        &mut self,
        mut mention: EventDescription,
        line: usize,
    ) -> Result<(), CorpusError> {
        mention.participants.sort();
        mention.participants.dedup();
        if self.seen.insert(mention.id.clone(), line).is_some() {
            return Err(CorpusError::DuplicateMentionId {
                line,
                id: mention.id.to_string(),
            });
        }
        let t = *self
            .topic_pos
            .entry(mention.topic_id.clone())
            .or_insert_with(|| {
                self.topics.push(Topic {
                    id: mention.topic_id.clone(),
                    documents: Vec::new(),
                });
                self.topics.len() - 1
            });
        let topic = &mut self.topics[t];
        let doc = match topic.documents.iter_mut().find(|d| d.id == mention.doc_id) {
            Some(doc) => doc,
            None => {
                topic.documents.push(Document {
                    id: mention.doc_id.clone(),
                    mentions: Vec::new(),
                });
                topic.documents.last_mut().expect("just pushed")
            }
        };
        doc.mentions.push(mention);
        Ok(())
    }

    fn push_gold(
        &mut self,
        topic: String,
        blocks: Vec<BTreeSet<MentionId>>,
        line: usize,
    ) -> Result<(), CorpusError> {
        if self.gold_blocks.iter().any(|(t, _, _)| *t == topic) {
            return Err(CorpusError::SchemaError {
                line,
                message: format!("second gold record for topic {topic:?}"),
            });
        }
        self.gold_blocks.push((topic, blocks, line));
        Ok(())
    }

    fn finish(self) -> Result<Corpus, CorpusError> {
        let mut corpus = Corpus {
            topics: self.topics,
            gold: BTreeMap::new(),
            index: BTreeMap::new(),
        };
        corpus.rebuild_index();
        for (topic, blocks, _line) in self.gold_blocks {
            let universe = corpus.topic_universe(&topic);
            if universe.is_empty() {
                return Err(CorpusError::GoldUniverseMismatch {
                    topic,
                    detail: "topic has no mentions".to_string(),
                });
            }
            let partition =
                Partition::new(blocks).map_err(|e| CorpusError::GoldUniverseMismatch {
                    topic: topic.clone(),
                    detail: e.to_string(),
                })?;
            if partition.universe() != &universe {
                let missing: Vec<String> = universe
                    .difference(partition.universe())
                    .take(3)
                    .map(|m| m.to_string())
                    .collect();
                let unknown: Vec<String> = partition
                    .universe()
                    .difference(&universe)
                    .take(3)
                    .map(|m| m.to_string())
                    .collect();
                return Err(CorpusError::GoldUniverseMismatch {
                    topic,
                    detail: format!(
                        "uncovered mentions: [{}], unknown mentions: [{}]",
                        missing.join(", "),
                        unknown.join(", ")
                    ),
                });
            }
            corpus.gold.insert(topic, partition);
        }
        Ok(corpus)
    }
}

// --------------------------------------------------------------------------
// Wire records
// --------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PlaceField {
    Bare(String),
    Full {
        id: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        ancestry: Vec<String>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MentionRecord {
    id: String,
    #[serde(rename = "type")]
    event_type: String,
    doc: String,
    topic: String,
    lemma: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    roles: BTreeMap<String, OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    place: Option<PlaceField>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    subevents: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct GoldBody {
    topic: String,
    clusters: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoldRecord {
    gold: GoldBody,
}

fn require_token(line: usize, field: &str, value: &str) -> Result<(), CorpusError> {
    if value.is_empty() {
        return Err(CorpusError::SchemaError {
            line,
            message: format!("field {field:?} is empty"),
        });
    }
    if value.chars().any(char::is_whitespace) {
        return Err(CorpusError::SchemaError {
            line,
            message: format!("field {field:?} contains whitespace: {value:?}"),
        });
    }
    Ok(())
}

impl MentionRecord {
    fn into_description(self, line: usize) -> Result<EventDescription, CorpusError> {
        let schema_err = |field: &str, message: String| CorpusError::SchemaError {
            line,
            message: format!("field {field:?}: {message}"),
        };
        require_token(line, "id", &self.id)?;
        require_token(line, "type", &self.event_type)?;
        require_token(line, "doc", &self.doc)?;
        require_token(line, "topic", &self.topic)?;
        if self.lemma.is_empty() {
            return Err(schema_err("lemma", "must be non-empty".to_string()));
        }

        let mut participants = Vec::new();
        for (role, value) in self.roles {
            if role.trim().is_empty() {
                return Err(schema_err("roles", "empty role name".to_string()));
            }
            let raws = match value {
                OneOrMany::One(s) => vec![s],
                OneOrMany::Many(v) => v,
            };
            for raw in raws {
                let entity =
                    normalize_entity(&raw).map_err(|e| schema_err("roles", e.to_string()))?;
                participants.push(Participant {
                    role: role.clone(),
                    entity,
                });
            }
        }
        participants.sort();
        participants.dedup();

        let time = match self.time {
            Some(text) => {
                Some(TimeSpec::parse(&text).map_err(|e| schema_err("time", e.to_string()))?)
            }
            None => None,
        };

        let place = match self.place {
            Some(PlaceField::Bare(id)) => {
                let id = normalize_entity(&id).map_err(|e| schema_err("place", e.to_string()))?;
                Some(PlaceSpec::new(id, Vec::new()).expect("empty ancestry is valid"))
            }
            Some(PlaceField::Full { id, ancestry }) => {
                let id = normalize_entity(&id).map_err(|e| schema_err("place", e.to_string()))?;
                let ancestry = ancestry
                    .iter()
                    .map(|a| normalize_entity(a))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| schema_err("place.ancestry", e.to_string()))?;
                Some(
                    PlaceSpec::new(id, ancestry)
                        .map_err(|e| schema_err("place.ancestry", e.to_string()))?,
                )
            }
            None => None,
        };

        let mut subevents = BTreeSet::new();
        for sub in self.subevents {
            require_token(line, "subevents", &sub)?;
            if sub == self.id {
                return Err(schema_err("subevents", "mention lists itself".to_string()));
            }
            subevents.insert(MentionId::new(sub));
        }

        Ok(EventDescription {
            id: MentionId::new(self.id),
            event_type: self.event_type,
            participants,
            time,
            place,
            subevents,
            lemma: self.lemma,
            doc_id: self.doc,
            topic_id: self.topic,
        })
    }

    fn from_description(m: &EventDescription) -> MentionRecord {
        let mut roles: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for p in &m.participants {
            roles
                .entry(p.role.clone())
                .or_default()
                .push(p.entity.id().to_string());
        }
        let roles = roles
            .into_iter()
            .map(|(role, mut entities)| {
                entities.sort();
                let value = if entities.len() == 1 {
                    OneOrMany::One(entities.pop().expect("len checked"))
                } else {
                    OneOrMany::Many(entities)
                };
                (role, value)
            })
            .collect();
        MentionRecord {
            id: m.id.to_string(),
            event_type: m.event_type.clone(),
            doc: m.doc_id.clone(),
            topic: m.topic_id.clone(),
            lemma: m.lemma.clone(),
            roles,
            time: m.time.as_ref().map(|t| t.to_string()),
            place: m.place.as_ref().map(|p| {
                if p.ancestry().is_empty() {
                    PlaceField::Bare(p.id().to_string())
                } else {
                    PlaceField::Full {
                        id: p.id().to_string(),
                        ancestry: p.ancestry().iter().map(|a| a.to_string()).collect(),
                    }
                }
            }),
            subevents: m.subevents.iter().map(|s| s.to_string()).collect(),
        }
    }
}

// --------------------------------------------------------------------------
// Stats
// --------------------------------------------------------------------------

/// Corpus summary counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub topics: usize,
    pub documents: usize,
    pub mentions: usize,
    pub distinct_lemmas: usize,
    pub per_type: BTreeMap<String, usize>,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} topic(s), {} doc(s), {} mention(s), {} distinct lemma(s)",
            self.topics, self.documents, self.mentions, self.distinct_lemmas
        )?;
        for (ty, count) in &self.per_type {
            writeln!(f, "  {ty}: {count}")?;
        }
        Ok(())
    }
}

/// Exact corpus counts: topics, documents, mentions, distinct lemmas, and
/// mention counts per event type.
pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut lemmas = BTreeSet::new();
    let mut per_type: BTreeMap<String, usize> = BTreeMap::new();
    let mut documents = 0;
    for topic in corpus.topics() {
        documents += topic.documents.len();
    }
    for mention in corpus.mentions() {
        lemmas.insert(mention.lemma.clone());
        *per_type.entry(mention.event_type.clone()).or_insert(0) += 1;
    }
    CorpusStats {
        topics: corpus.topics().len(),
        documents,
        mentions: corpus.num_mentions(),
        distinct_lemmas: lemmas.len(),
        per_type,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LENNON: &str = include_str!("../tests/fixtures/lennon.jsonl");

    #[test]
    fn lennon_fixture_loads() {
        let corpus = parse_corpus(LENNON).unwrap();
        let stats = corpus_stats(&corpus);
        assert_eq!(stats.topics, 1);
        assert_eq!(stats.documents, 2);
        assert_eq!(stats.mentions, 5);
        assert_eq!(corpus.gold("lennon").unwrap().len(), 2);
    }

    #[test]
    fn empty_corpus_loads() {
        let corpus = parse_corpus("").unwrap();
        assert!(corpus.is_empty());
        let stats = corpus_stats(&corpus);
        assert_eq!(stats.topics, 0);
        assert_eq!(stats.mentions, 0);
    }

    #[test]
    fn duplicate_mention_rejected() {
        let text = r#"{"id":"m1","type":"Killing","doc":"d","topic":"t","lemma":"kill"}
{"id":"m1","type":"Killing","doc":"d","topic":"t","lemma":"kill"}"#;
        match parse_corpus(text) {
            Err(CorpusError::DuplicateMentionId { line, id }) => {
                assert_eq!(line, 2);
                assert_eq!(id, "m1");
            }
            other => panic!("expected DuplicateMentionId, got {other:?}"),
        }
    }

    #[test]
    fn gold_with_unknown_mention_rejected() {
        let text = r#"{"id":"m1","type":"Killing","doc":"d","topic":"t","lemma":"kill"}
{"gold":{"topic":"t","clusters":[["m1","ghost"]]}}"#;
        assert!(matches!(
            parse_corpus(text),
            Err(CorpusError::GoldUniverseMismatch { .. })
        ));
    }

    #[test]
    fn gold_missing_mention_rejected() {
        let text = r#"{"id":"m1","type":"Killing","doc":"d","topic":"t","lemma":"kill"}
{"id":"m2","type":"Killing","doc":"d","topic":"t","lemma":"kill"}
{"gold":{"topic":"t","clusters":[["m1"]]}}"#;
        assert!(matches!(
            parse_corpus(text),
            Err(CorpusError::GoldUniverseMismatch { .. })
        ));
    }

    #[test]
    fn schema_error_is_line_precise() {
        let text = r#"{"id":"m1","type":"Killing","doc":"d","topic":"t","lemma":"kill"}
{"id":"m2","type":"Killing","doc":"d","topic":"t","lemma":"kill","time":"19801208"}"#;
        match parse_corpus(text) {
            Err(CorpusError::SchemaError { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("time"), "{message}");
            }
            other => panic!("expected SchemaError, got {other:?}"),
        }
    }

    #[test]
    fn whitespace_in_id_rejected() {
        let text = r#"{"id":"m 1","type":"Killing","doc":"d","topic":"t","lemma":"kill"}"#;
        assert!(matches!(
            parse_corpus(text),
            Err(CorpusError::SchemaError { .. })
        ));
    }

    #[test]
    fn load_save_load_is_identity() {
        let corpus = parse_corpus(LENNON).unwrap();
        let saved = corpus.to_jsonl();
        let reloaded = parse_corpus(&saved).unwrap();
        assert_eq!(corpus, reloaded);
        assert_eq!(saved, reloaded.to_jsonl());
    }

    #[test]
    fn role_entities_are_normalized() {
        let text = r#"{"id":"m1","type":"Killing","doc":"d","topic":"t","lemma":"kill","roles":{"Victim":"DBPEDIA:John_Lennon"}}"#;
        let corpus = parse_corpus(text).unwrap();
        let m = corpus.get(&MentionId::from("m1")).unwrap();
        assert_eq!(m.role_entities("Victim")[0].id(), "dbpedia:John_Lennon");
    }

    #[test]
    fn gazetteer_enriches_bare_places() {
        let text = r#"{"id":"m1","type":"Killing","doc":"d","topic":"t","lemma":"kill","place":"dbpedia:New_York_City"}"#;
        let mut gaz = Gazetteer::new();
        gaz.insert(
            &normalize_entity("dbpedia:New_York_City").unwrap(),
            vec![normalize_entity("dbpedia:USA").unwrap()],
        );
        let corpus = parse_corpus(text).unwrap().with_gazetteer(&gaz);
        let m = corpus.get(&MentionId::from("m1")).unwrap();
        assert_eq!(m.place.as_ref().unwrap().ancestry().len(), 1);
    }

    #[test]
    fn retain_mentions_restricts_gold() {
        let corpus = parse_corpus(LENNON).unwrap();
        let filtered = corpus.retain_mentions(|m| m.event_type == "Killing");
        assert_eq!(filtered.num_mentions(), 2);
        let gold = filtered.gold("lennon").unwrap();
        assert_eq!(gold.universe().len(), 2);
    }
}
