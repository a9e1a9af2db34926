//! Coreference partition scoring: MUC, B³, mention-based CEAF, and BLANC.
//!
//! All four metrics compare a response partition against a key partition
//! over the same mention universe and yield precision, recall, and F1 in
//! `[0,1]`. Zero-denominator convention, applied per metric and per link
//! kind: when both key and response have zero items of the relevant kind
//! the ratio is 1 (a perfect response scores perfectly), when only one side
//! is empty it is 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::AddAssign;

use serde::Serialize;
use thiserror::Error;

use crate::model::MentionId;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("invalid partition: {reason}")]
    InvalidPartition { reason: String },
    #[error("response and key cover different mention universes: {detail}")]
    UniverseMismatch { detail: String },
    #[error("BLANC needs at least 2 mentions, got {found}")]
    TooFewMentions { found: usize },
    #[error("response and key cover different topics: {detail}")]
    TopicMismatch { detail: String },
}

/// A partition of a mention universe into disjoint, non-empty blocks.
/// Blocks are kept sorted by their smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<BTreeSet<MentionId>>,
    universe: BTreeSet<MentionId>,
}

impl Partition {
    /// Build a partition from blocks; the universe is their union.
    pub fn new(blocks: Vec<BTreeSet<MentionId>>) -> Result<Self, MetricError> {
        let mut universe = BTreeSet::new();
        for block in &blocks {
            if block.is_empty() {
                return Err(MetricError::InvalidPartition {
                    reason: "empty block".to_string(),
                });
            }
            for m in block {
                if !universe.insert(m.clone()) {
                    return Err(MetricError::InvalidPartition {
                        reason: format!("mention {m} appears in two blocks"),
                    });
                }
            }
        }
        let mut blocks = blocks;
        blocks.sort_by(|a, b| a.first().cmp(&b.first()));
        Ok(Partition { blocks, universe })
    }

    /// Build from blocks over a declared universe, completing uncovered
    /// mentions as singletons.
    pub fn with_singletons(
        blocks: Vec<BTreeSet<MentionId>>,
        universe: BTreeSet<MentionId>,
    ) -> Result<Self, MetricError> {
        let partial = Partition::new(blocks)?;
        if let Some(stray) = partial.universe.difference(&universe).next() {
            return Err(MetricError::InvalidPartition {
                reason: format!("mention {stray} not in the declared universe"),
            });
        }
        let mut blocks = partial.blocks;
        for m in universe.difference(&partial.universe) {
            blocks.push(BTreeSet::from([m.clone()]));
        }
        blocks.sort_by(|a, b| a.first().cmp(&b.first()));
        Ok(Partition { blocks, universe })
    }

    /// All mentions as singletons.
    pub fn singletons(universe: BTreeSet<MentionId>) -> Self {
        let blocks = universe
            .iter()
            .map(|m| BTreeSet::from([m.clone()]))
            .collect();
        Partition { blocks, universe }
    }

    pub fn blocks(&self) -> &[BTreeSet<MentionId>] {
        &self.blocks
    }

    pub fn universe(&self) -> &BTreeSet<MentionId> {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Mention -> block position.
    pub fn block_index(&self) -> BTreeMap<&MentionId, usize> {
        let mut index = BTreeMap::new();
        for (i, block) in self.blocks.iter().enumerate() {
            for m in block {
                index.insert(m, i);
            }
        }
        index
    }

    /// Restrict to a sub-universe, splitting blocks as needed and dropping
    /// mentions outside `subset`.
    pub fn restrict(&self, subset: &BTreeSet<MentionId>) -> Partition {
        let blocks: Vec<BTreeSet<MentionId>> = self
            .blocks
            .iter()
            .map(|b| b.intersection(subset).cloned().collect::<BTreeSet<_>>())
            .filter(|b: &BTreeSet<MentionId>| !b.is_empty())
            .collect();
        let universe: BTreeSet<MentionId> = self.universe.intersection(subset).cloned().collect();
        Partition { blocks, universe }
    }

    /// Native text form: one block per line, member ids space-separated in
    /// sorted order, blocks sorted by first member, trailing newline.
    pub fn to_native_string(&self) -> String {
        let mut out = String::new();
        for block in &self.blocks {
            let members: Vec<&str> = block.iter().map(|m| m.as_str()).collect();
            out.push_str(&members.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parse the native text form. `#` starts a comment.
    pub fn parse_native(text: &str) -> Result<Self, MetricError> {
        let mut blocks = Vec::new();
        for line in text.lines() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let block: BTreeSet<MentionId> =
                content.split_whitespace().map(MentionId::from).collect();
            blocks.push(block);
        }
        Partition::new(blocks)
    }
}

/// Precision, recall, F1 for one metric on one (response, key) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PartitionScore {
    /// Harmonic-mean F1; zero when both components are zero.
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        PartitionScore {
            precision,
            recall,
            f1,
        }
    }

    pub const PERFECT: PartitionScore = PartitionScore {
        precision: 1.0,
        recall: 1.0,
        f1: 1.0,
    };
}

impl fmt::Display for PartitionScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "p={:.2} r={:.2} F1={:.2}",
            self.precision * 100.0,
            self.recall * 100.0,
            self.f1 * 100.0
        )
    }
}

fn check_universes(response: &Partition, key: &Partition) -> Result<(), MetricError> {
    if response.universe != key.universe {
        let only_resp: Vec<String> = response
            .universe
            .difference(&key.universe)
            .take(3)
            .map(|m| m.to_string())
            .collect();
        let only_key: Vec<String> = key
            .universe
            .difference(&response.universe)
            .take(3)
            .map(|m| m.to_string())
            .collect();
        return Err(MetricError::UniverseMismatch {
            detail: format!(
                "only in response: [{}], only in key: [{}]",
                only_resp.join(", "),
                only_key.join(", ")
            ),
        });
    }
    Ok(())
}

/// Ratio with the zero-denominator convention: `0/0` is 1 when the other
/// side is also empty, 0 otherwise.
fn ratio(num: f64, den: f64, other_den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if other_den == 0.0 {
        1.0
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// MUC
// ---------------------------------------------------------------------------

/// Sufficient statistics for link-based MUC scoring; addable across topics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MucStats {
    pub recall_num: u64,
    pub recall_den: u64,
    pub precision_num: u64,
    pub precision_den: u64,
}

impl AddAssign for MucStats {
    fn add_assign(&mut self, rhs: Self) {
        self.recall_num += rhs.recall_num;
        self.recall_den += rhs.recall_den;
        self.precision_num += rhs.precision_num;
        self.precision_den += rhs.precision_den;
    }
}

impl MucStats {
    pub fn score(&self) -> PartitionScore {
        let r = ratio(
            self.recall_num as f64,
            self.recall_den as f64,
            self.precision_den as f64,
        );
        let p = ratio(
            self.precision_num as f64,
            self.precision_den as f64,
            self.recall_den as f64,
        );
        PartitionScore::from_pr(p, r)
    }
}

/// Number of distinct `by` blocks that the mentions of `block` fall into.
fn partition_count(block: &BTreeSet<MentionId>, by: &BTreeMap<&MentionId, usize>) -> usize {
    let mut seen = BTreeSet::new();
    for m in block {
        // Universe equality is checked up front, so the lookup succeeds.
        seen.insert(by[m]);
    }
    seen.len()
}

pub fn muc_stats(response: &Partition, key: &Partition) -> Result<MucStats, MetricError> {
    check_universes(response, key)?;
    let resp_index = response.block_index();
    let key_index = key.block_index();
    let mut stats = MucStats::default();
    for block in key.blocks() {
        stats.recall_num += (block.len() - partition_count(block, &resp_index)) as u64;
        stats.recall_den += (block.len() - 1) as u64;
    }
    for block in response.blocks() {
        stats.precision_num += (block.len() - partition_count(block, &key_index)) as u64;
        stats.precision_den += (block.len() - 1) as u64;
    }
    Ok(stats)
}

/// Link-based MUC score.
pub fn muc(response: &Partition, key: &Partition) -> Result<PartitionScore, MetricError> {
    Ok(muc_stats(response, key)?.score())
}

// ---------------------------------------------------------------------------
// B³
// ---------------------------------------------------------------------------

/// Per-mention overlap sums for B³; addable across topics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BCubedStats {
    pub recall_sum: f64,
    pub precision_sum: f64,
    pub mentions: u64,
}

impl AddAssign for BCubedStats {
    fn add_assign(&mut self, rhs: Self) {
        self.recall_sum += rhs.recall_sum;
        self.precision_sum += rhs.precision_sum;
        self.mentions += rhs.mentions;
    }
}

impl BCubedStats {
    pub fn score(&self) -> PartitionScore {
        if self.mentions == 0 {
            return PartitionScore::PERFECT;
        }
        let n = self.mentions as f64;
        PartitionScore::from_pr(self.precision_sum / n, self.recall_sum / n)
    }
}

pub fn b_cubed_stats(response: &Partition, key: &Partition) -> Result<BCubedStats, MetricError> {
    check_universes(response, key)?;
    let resp_index = response.block_index();
    let key_index = key.block_index();
    let mut stats = BCubedStats {
        mentions: response.universe().len() as u64,
        ..BCubedStats::default()
    };
    for m in response.universe() {
        let r_block = &response.blocks()[resp_index[m]];
        let k_block = &key.blocks()[key_index[m]];
        let overlap = r_block.intersection(k_block).count() as f64;
        stats.recall_sum += overlap / k_block.len() as f64;
        stats.precision_sum += overlap / r_block.len() as f64;
    }
    Ok(stats)
}

/// Mention-overlap B³ score.
pub fn b_cubed(response: &Partition, key: &Partition) -> Result<PartitionScore, MetricError> {
    Ok(b_cubed_stats(response, key)?.score())
}

// ---------------------------------------------------------------------------
// CEAF (mention-based)
// ---------------------------------------------------------------------------

/// Total aligned overlap for mention-based CEAF; addable across topics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CeafStats {
    pub total_overlap: u64,
    pub key_mentions: u64,
    pub response_mentions: u64,
}

impl AddAssign for CeafStats {
    fn add_assign(&mut self, rhs: Self) {
        self.total_overlap += rhs.total_overlap;
        self.key_mentions += rhs.key_mentions;
        self.response_mentions += rhs.response_mentions;
    }
}

impl CeafStats {
    pub fn score(&self) -> PartitionScore {
        let p = ratio(
            self.total_overlap as f64,
            self.response_mentions as f64,
            self.key_mentions as f64,
        );
        let r = ratio(
            self.total_overlap as f64,
            self.key_mentions as f64,
            self.response_mentions as f64,
        );
        PartitionScore::from_pr(p, r)
    }
}

pub fn ceaf_m_stats(response: &Partition, key: &Partition) -> Result<CeafStats, MetricError> {
    check_universes(response, key)?;
    let weights: Vec<Vec<i64>> = key
        .blocks()
        .iter()
        .map(|k| {
            response
                .blocks()
                .iter()
                .map(|r| k.intersection(r).count() as i64)
                .collect()
        })
        .collect();
    Ok(CeafStats {
        total_overlap: max_weight_assignment(&weights) as u64,
        key_mentions: key.universe().len() as u64,
        response_mentions: response.universe().len() as u64,
    })
}

/// Mention-based CEAF: optimal one-to-one block alignment maximizing total
/// overlap, found by maximum-weight bipartite matching.
pub fn ceaf_m(response: &Partition, key: &Partition) -> Result<PartitionScore, MetricError> {
    Ok(ceaf_m_stats(response, key)?.score())
}

/// Maximum-weight one-to-one assignment over a rectangular weight matrix,
/// by the Hungarian algorithm with potentials (O(n³)). Unmatched rows or
/// columns contribute zero.
fn max_weight_assignment(weights: &[Vec<i64>]) -> i64 {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    if n == 0 {
        return 0;
    }
    // Square cost matrix, 1-indexed; minimize negated weights.
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            -weights[i][j]
        } else {
            0
        }
    };
    const INF: i64 = i64::MAX / 2;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut assigned_row = vec![0usize; n + 1]; // column -> row (1-indexed)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        assigned_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut total = 0i64;
    for (j, &i) in assigned_row.iter().enumerate().skip(1) {
        if i != 0 {
            total -= cost(i - 1, j - 1);
        }
    }
    total
}

// ---------------------------------------------------------------------------
// BLANC
// ---------------------------------------------------------------------------

/// Pair counts over coreference and non-coreference links; addable across
/// topics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BlancStats {
    pub pairs: u64,
    pub coref_response: u64,
    pub coref_key: u64,
    pub coref_common: u64,
}

impl AddAssign for BlancStats {
    fn add_assign(&mut self, rhs: Self) {
        self.pairs += rhs.pairs;
        self.coref_response += rhs.coref_response;
        self.coref_key += rhs.coref_key;
        self.coref_common += rhs.coref_common;
    }
}

impl BlancStats {
    pub fn score(&self) -> PartitionScore {
        let nc_response = self.pairs - self.coref_response;
        let nc_key = self.pairs - self.coref_key;
        // |non-resp ∩ non-key| by inclusion-exclusion; the union bound keeps
        // this order non-negative.
        let nc_common = self.pairs + self.coref_common - self.coref_response - self.coref_key;

        let side = |common: u64, resp: u64, key: u64| -> PartitionScore {
            let p = ratio(common as f64, resp as f64, key as f64);
            let r = ratio(common as f64, key as f64, resp as f64);
            PartitionScore::from_pr(p, r)
        };
        let coref = side(self.coref_common, self.coref_response, self.coref_key);
        let non_coref = side(nc_common, nc_response, nc_key);
        PartitionScore {
            precision: (coref.precision + non_coref.precision) / 2.0,
            recall: (coref.recall + non_coref.recall) / 2.0,
            f1: (coref.f1 + non_coref.f1) / 2.0,
        }
    }
}

pub fn blanc_stats(response: &Partition, key: &Partition) -> Result<BlancStats, MetricError> {
    check_universes(response, key)?;
    let n = response.universe().len() as u64;
    let resp_index = response.block_index();
    let key_index = key.block_index();
    let mentions: Vec<&MentionId> = response.universe().iter().collect();
    let mut stats = BlancStats {
        pairs: n * (n.saturating_sub(1)) / 2,
        ..BlancStats::default()
    };
    for (i, a) in mentions.iter().enumerate() {
        for b in &mentions[i + 1..] {
            let in_resp = resp_index[*a] == resp_index[*b];
            let in_key = key_index[*a] == key_index[*b];
            if in_resp {
                stats.coref_response += 1;
            }
            if in_key {
                stats.coref_key += 1;
            }
            if in_resp && in_key {
                stats.coref_common += 1;
            }
        }
    }
    Ok(stats)
}

/// BLANC: the arithmetic mean of coreference-link and non-coreference-link
/// P/R/F1 over all mention pairs.
pub fn blanc(response: &Partition, key: &Partition) -> Result<PartitionScore, MetricError> {
    let n = response.universe().len();
    if n < 2 {
        return Err(MetricError::TooFewMentions { found: n });
    }
    Ok(blanc_stats(response, key)?.score())
}

// ---------------------------------------------------------------------------
// Run scoring
// ---------------------------------------------------------------------------

/// All four metrics for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunScore {
    pub muc: PartitionScore,
    pub b_cubed: PartitionScore,
    pub ceaf_m: PartitionScore,
    pub blanc: PartitionScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// Sum sufficient statistics across topics, then score.
    #[default]
    Micro,
    /// Score each topic, then average the component values unweighted.
    Macro,
}

/// Score per-topic responses against per-topic keys and aggregate.
///
/// Topics with fewer than 2 mentions contribute nothing to BLANC (they have
/// no mention pairs) and are skipped for BLANC under macro averaging.
pub fn score_run(
    responses: &BTreeMap<String, Partition>,
    keys: &BTreeMap<String, Partition>,
    averaging: Averaging,
) -> Result<RunScore, MetricError> {
    let resp_topics: Vec<&String> = responses.keys().collect();
    let key_topics: Vec<&String> = keys.keys().collect();
    if resp_topics != key_topics {
        let only_resp: Vec<&str> = responses
            .keys()
            .filter(|t| !keys.contains_key(*t))
            .map(|s| s.as_str())
            .collect();
        let only_key: Vec<&str> = keys
            .keys()
            .filter(|t| !responses.contains_key(*t))
            .map(|s| s.as_str())
            .collect();
        return Err(MetricError::TopicMismatch {
            detail: format!(
                "only in responses: [{}], only in keys: [{}]",
                only_resp.join(", "),
                only_key.join(", ")
            ),
        });
    }

    match averaging {
        Averaging::Micro => {
            let mut muc_total = MucStats::default();
            let mut b3_total = BCubedStats::default();
            let mut ceaf_total = CeafStats::default();
            let mut blanc_total = BlancStats::default();
            for (topic, response) in responses {
                let key = &keys[topic];
                muc_total += muc_stats(response, key)?;
                b3_total += b_cubed_stats(response, key)?;
                ceaf_total += ceaf_m_stats(response, key)?;
                blanc_total += blanc_stats(response, key)?;
            }
            Ok(RunScore {
                muc: muc_total.score(),
                b_cubed: b3_total.score(),
                ceaf_m: ceaf_total.score(),
                blanc: blanc_total.score(),
            })
        }
        Averaging::Macro => {
            let mut muc_scores = Vec::new();
            let mut b3_scores = Vec::new();
            let mut ceaf_scores = Vec::new();
            let mut blanc_scores = Vec::new();
            for (topic, response) in responses {
                let key = &keys[topic];
                muc_scores.push(muc(response, key)?);
                b3_scores.push(b_cubed(response, key)?);
                ceaf_scores.push(ceaf_m(response, key)?);
                if response.universe().len() >= 2 {
                    blanc_scores.push(blanc(response, key)?);
                }
            }
            Ok(RunScore {
                muc: mean_score(&muc_scores),
                b_cubed: mean_score(&b3_scores),
                ceaf_m: mean_score(&ceaf_scores),
                blanc: mean_score(&blanc_scores),
            })
        }
    }
}

fn mean_score(scores: &[PartitionScore]) -> PartitionScore {
    if scores.is_empty() {
        return PartitionScore::PERFECT;
    }
    let n = scores.len() as f64;
    PartitionScore {
        precision: scores.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: scores.iter().map(|s| s.recall).sum::<f64>() / n,
        f1: scores.iter().map(|s| s.f1).sum::<f64>() / n,
    }
}
