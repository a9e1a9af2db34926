//! The lemma-match baseline: mentions sharing a predicate lemma are taken
//! to corefer, optionally after restricting the corpus to a lexicon of
//! frame lexical units.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

use crate::corpus::Corpus;
use crate::engine::Scope;
use crate::metrics::Partition;
use crate::model::MentionId;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("mention {id} has no lemma")]
    MissingLemma { id: MentionId },
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Cluster mentions by exact, case-sensitive lemma match within the scope.
/// Mentions with a unique lemma become singletons.
pub fn lemma_baseline(corpus: &Corpus, scope: Scope) -> Result<Partition, BaselineError> {
    let mut classes: BTreeMap<(String, String), BTreeSet<MentionId>> = BTreeMap::new();
    for mention in corpus.mentions() {
        if mention.lemma.is_empty() {
            return Err(BaselineError::MissingLemma {
                id: mention.id.clone(),
            });
        }
        let scope_key = match scope {
            Scope::WithinDocument => format!("{}\u{1f}{}", mention.topic_id, mention.doc_id),
            Scope::WithinTopic => mention.topic_id.clone(),
            Scope::CrossTopic => String::new(),
        };
        classes
            .entry((scope_key, mention.lemma.clone()))
            .or_default()
            .insert(mention.id.clone());
    }
    Ok(Partition::new(classes.into_values().collect()).expect("lemma classes are disjoint"))
}

/// A set of lemmas acting as the frame lexical-unit filter.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    lemmas: BTreeSet<String>,
}

impl Lexicon {
    pub fn from_lemmas(lemmas: impl IntoIterator<Item = String>) -> Self {
        Lexicon {
            lemmas: lemmas.into_iter().collect(),
        }
    }

    /// Load from a text file: one lemma per line, `#` comments, UTF-8.
    pub fn load(path: &Path) -> Result<Self, BaselineError> {
        let file = std::fs::File::open(path).map_err(|source| BaselineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut lemmas = BTreeSet::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line.map_err(|source| BaselineError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let content = line.split('#').next().unwrap_or("").trim();
            if !content.is_empty() {
                lemmas.insert(content.to_string());
            }
        }
        Ok(Lexicon { lemmas })
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.lemmas.contains(lemma)
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }
}

/// The lexicon shipped with the crate: lexical units of the six frames.
pub const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.txt");

pub fn default_lexicon() -> Lexicon {
    Lexicon::from_lemmas(
        DEFAULT_LEXICON
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim().to_string())
            .filter(|l| !l.is_empty()),
    )
}

/// Restrict the corpus to mentions whose lemma is in the lexicon.
pub fn lemma_filter(corpus: &Corpus, lexicon: &Lexicon) -> Corpus {
    corpus.retain_mentions(|m| lexicon.contains(&m.lemma))
}
