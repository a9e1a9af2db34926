//! Response/key file handling: the mention-cluster map format and key
//! extraction from corpus gold sections.
//!
//! Map format, one mention per line: `<topic> <mention_id> <cluster_label>`,
//! whitespace-separated, `#` comments, lines sorted on write. Cluster labels
//! are global, so a label shared across topics denotes one block spanning
//! them; per-topic scoring splits such blocks at topic boundaries.

use std::collections::{BTreeMap, BTreeSet};

use ontocoref_core::metrics::Partition;
use ontocoref_core::model::MentionId;

/// A clustering read from or written to the map format.
#[derive(Debug, Clone, Default)]
pub struct ResponseMap {
    /// topic -> its mentions.
    pub topics: BTreeMap<String, BTreeSet<MentionId>>,
    /// cluster label -> members (possibly across topics).
    pub clusters: BTreeMap<String, BTreeSet<MentionId>>,
}

impl ResponseMap {
    pub fn from_partitions(per_topic: &BTreeMap<String, Partition>) -> ResponseMap {
        let mut map = ResponseMap::default();
        for (topic, partition) in per_topic {
            map.topics
                .insert(topic.clone(), partition.universe().clone());
            for block in partition.blocks() {
                let label = block.first().expect("blocks are non-empty").to_string();
                map.clusters
                    .entry(label)
                    .or_default()
                    .extend(block.iter().cloned());
            }
        }
        map
    }

    /// Build from one global partition, attributing mentions to topics.
    pub fn from_global(
        partition: &Partition,
        topic_of: &BTreeMap<MentionId, String>,
    ) -> ResponseMap {
        let mut map = ResponseMap::default();
        for mention in partition.universe() {
            let topic = topic_of
                .get(mention)
                .cloned()
                .unwrap_or_else(|| "_".to_string());
            map.topics.entry(topic).or_default().insert(mention.clone());
        }
        for block in partition.blocks() {
            let label = block.first().expect("blocks are non-empty").to_string();
            map.clusters.insert(label, block.clone());
        }
        map
    }

    pub fn parse(text: &str) -> Result<ResponseMap, String> {
        let mut map = ResponseMap::default();
        let mut seen: BTreeSet<MentionId> = BTreeSet::new();
        for (idx, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let [topic, mention, cluster] = fields.as_slice() else {
                return Err(format!(
                    "line {}: expected '<topic> <mention> <cluster>'",
                    idx + 1
                ));
            };
            let mention = MentionId::from(*mention);
            if !seen.insert(mention.clone()) {
                return Err(format!("line {}: mention {mention} listed twice", idx + 1));
            }
            map.topics
                .entry(topic.to_string())
                .or_default()
                .insert(mention.clone());
            map.clusters
                .entry(cluster.to_string())
                .or_default()
                .insert(mention);
        }
        Ok(map)
    }

    pub fn render(&self) -> String {
        let mut cluster_of: BTreeMap<&MentionId, &str> = BTreeMap::new();
        for (label, members) in &self.clusters {
            for m in members {
                cluster_of.insert(m, label);
            }
        }
        let mut lines = Vec::new();
        for (topic, mentions) in &self.topics {
            for m in mentions {
                lines.push(format!(
                    "{topic} {m} {}",
                    cluster_of.get(m).copied().unwrap_or("_")
                ));
            }
        }
        lines.sort();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }

    /// Per-topic partitions; blocks crossing topics are split.
    pub fn per_topic(&self) -> Result<BTreeMap<String, Partition>, String> {
        let mut out = BTreeMap::new();
        for (topic, universe) in &self.topics {
            let blocks: Vec<BTreeSet<MentionId>> = self
                .clusters
                .values()
                .map(|members| {
                    members
                        .intersection(universe)
                        .cloned()
                        .collect::<BTreeSet<_>>()
                })
                .filter(|b: &BTreeSet<MentionId>| !b.is_empty())
                .collect();
            let partition = Partition::new(blocks).map_err(|e| e.to_string())?;
            if partition.universe() != universe {
                return Err(format!("topic {topic}: mentions without a cluster"));
            }
            out.insert(topic.clone(), partition);
        }
        Ok(out)
    }

    /// One partition over all mentions, preserving cross-topic blocks.
    pub fn global(&self) -> Result<Partition, String> {
        Partition::new(self.clusters.values().cloned().collect()).map_err(|e| e.to_string())
    }
}
