//! Coreference clustering: connected components of the derived edge set.
//!
//! The engine keeps edges un-closed to preserve rule provenance; the
//! equivalence closure demanded of a coreference relation happens here, by
//! union-find over the selected strength class. Unlinked mentions become
//! singletons.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::Corpus;
use crate::engine::CorefGraph;
use crate::metrics::Partition;
use crate::model::MentionId;

/// Which edges participate in clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusterMode {
    CertainOnly,
    PossibleOnly,
    #[default]
    Combined,
}

impl std::fmt::Display for ClusterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClusterMode::CertainOnly => f.write_str("certain"),
            ClusterMode::PossibleOnly => f.write_str("possible"),
            ClusterMode::Combined => f.write_str("combined"),
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        UnionFind {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, x: usize, y: usize) {
        let (mut a, mut b) = (self.find(x), self.find(y));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Connected components of the selected edge set over all graph nodes.
pub fn clusters(graph: &CorefGraph, mode: ClusterMode) -> Partition {
    let nodes: Vec<&MentionId> = graph.nodes().iter().collect();
    let index: BTreeMap<&MentionId, usize> =
        nodes.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut uf = UnionFind::new(nodes.len());
    let mut link = |a: &MentionId, b: &MentionId| {
        if let (Some(&i), Some(&j)) = (index.get(a), index.get(b)) {
            uf.union(i, j);
        }
    };
    if matches!(mode, ClusterMode::CertainOnly | ClusterMode::Combined) {
        for edge in graph.certain_edges() {
            link(edge.pair.first(), edge.pair.second());
        }
    }
    if matches!(mode, ClusterMode::PossibleOnly | ClusterMode::Combined) {
        for edge in graph.possible_edges() {
            link(edge.pair.first(), edge.pair.second());
        }
    }

    let mut blocks: BTreeMap<usize, BTreeSet<MentionId>> = BTreeMap::new();
    for (i, mention) in nodes.iter().enumerate() {
        blocks
            .entry(uf.find(i))
            .or_default()
            .insert((*mention).clone());
    }
    Partition::new(blocks.into_values().collect()).expect("components are disjoint and non-empty")
}

/// Split a partition into per-topic partitions over each topic's mentions.
/// Blocks that cross topic boundaries are split.
pub fn partition_by_topic(partition: &Partition, corpus: &Corpus) -> BTreeMap<String, Partition> {
    let mut out = BTreeMap::new();
    for topic in corpus.topics() {
        let universe = corpus.topic_universe(&topic.id);
        out.insert(topic.id.clone(), partition.restrict(&universe));
    }
    out
}

/// Split a partition into per-document partitions keyed `topic/doc`.
pub fn partition_by_document(
    partition: &Partition,
    corpus: &Corpus,
) -> BTreeMap<String, Partition> {
    let mut out = BTreeMap::new();
    for topic in corpus.topics() {
        for doc in &topic.documents {
            let universe: BTreeSet<MentionId> = doc.mentions.iter().map(|m| m.id.clone()).collect();
            out.insert(
                format!("{}/{}", topic.id, doc.id),
                partition.restrict(&universe),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::CorefGraph;
    use crate::model::{MentionPair, Strength};

    fn graph(nodes: &[&str], certain: &[(&str, &str)], possible: &[(&str, &str)]) -> CorefGraph {
        let mut g = CorefGraph::for_tests(nodes.iter().map(|n| MentionId::from(*n)).collect());
        for (round, (a, b)) in certain.iter().enumerate() {
            g.insert_edge_for_tests(
                MentionPair::new(MentionId::from(*a), MentionId::from(*b)).unwrap(),
                Strength::Certain,
                "test-rule",
                round as u32 + 1,
            );
        }
        for (a, b) in possible {
            g.insert_edge_for_tests(
                MentionPair::new(MentionId::from(*a), MentionId::from(*b)).unwrap(),
                Strength::Possible,
                "test-rule",
                1,
            );
        }
        g
    }

    #[test]
    fn transitive_closure_over_chain() {
        let g = graph(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c")], &[]);
        let p = clusters(&g, ClusterMode::CertainOnly);
        let blocks: Vec<Vec<&str>> = p
            .blocks()
            .iter()
            .map(|b| b.iter().map(|m| m.as_str()).collect())
            .collect();
        assert_eq!(blocks, vec![vec!["a", "b", "c"], vec!["d"]]);
    }

    #[test]
    fn no_edges_gives_singletons() {
        let g = graph(&["a", "b", "c"], &[], &[]);
        let p = clusters(&g, ClusterMode::Combined);
        assert_eq!(p.len(), 3);
        assert!(p.blocks().iter().all(|b| b.len() == 1));
    }

    #[test]
    fn certain_only_ignores_possible_edges() {
        let g = graph(&["a", "b"], &[], &[("a", "b")]);
        assert_eq!(clusters(&g, ClusterMode::CertainOnly).len(), 2);
        assert_eq!(clusters(&g, ClusterMode::PossibleOnly).len(), 1);
        assert_eq!(clusters(&g, ClusterMode::Combined).len(), 1);
    }

    #[test]
    fn combined_blocks_merge_per_mode_blocks() {
        let g = graph(&["a", "b", "c", "d"], &[("a", "b")], &[("b", "c")]);
        let combined = clusters(&g, ClusterMode::Combined);
        for mode in [ClusterMode::CertainOnly, ClusterMode::PossibleOnly] {
            let single = clusters(&g, mode);
            let combined_index = combined.block_index();
            for block in single.blocks() {
                let targets: std::collections::BTreeSet<usize> =
                    block.iter().map(|m| combined_index[m]).collect();
                assert_eq!(
                    targets.len(),
                    1,
                    "{mode:?} block split by combined clustering"
                );
            }
        }
    }

    #[test]
    fn clustering_is_idempotent_on_complete_blocks() {
        let g = graph(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")], &[]);
        let p = clusters(&g, ClusterMode::CertainOnly);
        assert_eq!(p.len(), 1);
        let g2 = graph(&["a", "b", "c"], &[("a", "b"), ("b", "c")], &[]);
        assert_eq!(clusters(&g2, ClusterMode::CertainOnly), p);
    }
}
