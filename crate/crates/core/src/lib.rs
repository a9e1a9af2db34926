//! Ontology-grounded event coreference.
//!
//! The pipeline: structured event descriptions come in ([`corpus`]), a set of
//! per-type coreference rules ([`ruledsl`]) grounded in event-type profiles
//! ([`ontology`]) is evaluated to a fixpoint ([`engine`]), the resulting
//! certain/possible links are closed into partitions ([`cluster`]), and the
//! partitions are scored against gold annotations with the standard
//! coreference metrics ([`metrics`]). A lemma-match [`baseline`] provides the
//! comparison point.

pub mod baseline;
pub mod cluster;
pub mod compat;
pub mod corpus;
pub mod engine;
pub mod metrics;
pub mod model;
pub mod ontology;
pub mod ruledsl;

pub use cluster::ClusterMode;
pub use corpus::Corpus;
pub use engine::{CorefGraph, EngineConfig, Scope};
pub use metrics::{Partition, PartitionScore};
pub use model::{
    CorefEdge, CorefMeasureValue, EntityRef, EventDescription, MentionId, PlaceSpec, Strength,
    TimeSpec,
};
pub use ontology::{EventTypeProfile, ProfileStore};
pub use ruledsl::{CorefRule, RuleSet};
