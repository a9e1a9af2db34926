//! Event-type profiles: the per-type ontological analysis as data.
//!
//! A profile records classification, roled participant slots, related event
//! types, status conditions, and repeatability constraints for one event
//! type. Status and relationship entries are structured-but-uninterpreted
//! strings; only the role vocabulary, cardinality, and repeatability are
//! machine-enforced.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{self, ClusterMode};
use crate::compat;
use crate::corpus::Corpus;
use crate::engine::CorefGraph;
use crate::model::{EntityRef, EventDescription, MentionId};

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("cannot read profile file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("profile parse error{}: {message}", fmt_line(.line))]
    ParseError {
        line: Option<usize>,
        message: String,
    },
    #[error("duplicate profile for event type {type_name:?}")]
    DuplicateProfile { type_name: String },
    #[error("profile {profile:?}: {anchor} constraint references a participant class with no declared roles")]
    UnknownRoleReference { profile: String, anchor: RoleClass },
    #[error("profile {profile:?}: role {role:?} declared in more than one participant class")]
    DuplicateRole { profile: String, role: String },
}

fn fmt_line(line: &Option<usize>) -> String {
    match line {
        Some(l) => format!(" at line {l}"),
        None => String::new(),
    }
}

/// DOLCE-style classification of a happening.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Accomplishment,
    Achievement,
}

/// Condition on the possible duration of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalRegion {
    Atomic,
    Interval,
}

/// Participant classes, in the linguistic sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleClass {
    Active,
    Passive,
    Tool,
}

impl fmt::Display for RoleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoleClass::Active => f.write_str("active"),
            RoleClass::Passive => f.write_str("passive"),
            RoleClass::Tool => f.write_str("tool"),
        }
    }
}

/// What a repeatability constraint is anchored to: a participant class or
/// the event's spatio-temporal region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepeatAnchor {
    Active,
    Passive,
    Spatiotemporal,
}

impl fmt::Display for RepeatAnchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepeatAnchor::Active => f.write_str("active"),
            RepeatAnchor::Passive => f.write_str("passive"),
            RepeatAnchor::Spatiotemporal => f.write_str("spatiotemporal"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplicity {
    AtMostOne,
    Many,
}

/// How many events of this type can share the anchored participant or
/// region: an identity criterion when the answer is "at most one".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepeatabilityConstraint {
    pub anchor: RepeatAnchor,
    pub multiplicity: Multiplicity,
}

/// A participant slot: a role name from the type's frame-element vocabulary
/// plus a free-text entity-kind tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleDecl {
    pub role: String,
    pub kind: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Possible,
    Necessary,
}

fn default_modality() -> Modality {
    Modality::Possible
}

/// A related event type (sub- or sovra-event) with its modality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelatedType {
    #[serde(rename = "type")]
    pub type_name: String,
    #[serde(default = "default_modality")]
    pub modality: Modality,
}

/// A related happening or state described in prose, with its modality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelatedEvent {
    pub description: String,
    #[serde(default = "default_modality")]
    pub modality: Modality,
}

/// Minimum participant counts per class; absent classes require none.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cardinality {
    #[serde(default)]
    pub active: u32,
    #[serde(default)]
    pub passive: u32,
    #[serde(default)]
    pub tool: u32,
}

/// The full analysis of one event type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventTypeProfile {
    #[serde(rename = "type")]
    pub type_name: String,
    pub classification: Classification,
    #[serde(default)]
    pub active: Vec<RoleDecl>,
    #[serde(default)]
    pub passive: Vec<RoleDecl>,
    #[serde(default)]
    pub tool: Vec<RoleDecl>,
    #[serde(default)]
    pub subevents: Vec<RelatedType>,
    #[serde(default)]
    pub sovraevents: Vec<RelatedType>,
    #[serde(default)]
    pub status_before: Vec<String>,
    #[serde(default)]
    pub status_during: Vec<String>,
    #[serde(default)]
    pub status_after: Vec<String>,
    #[serde(default)]
    pub caused: Vec<RelatedEvent>,
    #[serde(default)]
    pub symmetrical: Vec<RelatedEvent>,
    #[serde(default)]
    pub incompatible: Vec<RelatedEvent>,
    #[serde(default)]
    pub min_participants: Cardinality,
    pub temporal_region: TemporalRegion,
    #[serde(default)]
    pub spatial_anchor: Vec<RoleClass>,
    #[serde(default)]
    pub repeatability: Vec<RepeatabilityConstraint>,
}

impl EventTypeProfile {
    pub fn roles_of_class(&self, class: RoleClass) -> &[RoleDecl] {
        match class {
            RoleClass::Active => &self.active,
            RoleClass::Passive => &self.passive,
            RoleClass::Tool => &self.tool,
        }
    }

    pub fn all_roles(&self) -> impl Iterator<Item = &RoleDecl> {
        self.active.iter().chain(&self.passive).chain(&self.tool)
    }

    pub fn has_role(&self, role: &str) -> bool {
        self.all_roles().any(|r| r.role == role)
    }
}

/// Immutable store of loaded profiles, keyed by event type name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileStore {
    profiles: BTreeMap<String, EventTypeProfile>,
}

impl ProfileStore {
    pub fn get(&self, type_name: &str) -> Option<&EventTypeProfile> {
        self.profiles.get(type_name)
    }

    pub fn has_type(&self, type_name: &str) -> bool {
        self.profiles.contains_key(type_name)
    }

    pub fn role_valid(&self, type_name: &str, role: &str) -> bool {
        self.get(type_name).is_some_and(|p| p.has_role(role))
    }

    pub fn iter(&self) -> impl Iterator<Item = &EventTypeProfile> {
        self.profiles.values()
    }

    pub fn type_names(&self) -> impl Iterator<Item = &str> {
        self.profiles.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    #[serde(default)]
    profile: Vec<EventTypeProfile>,
}

/// The profile file shipped with the crate: the six analyzed event types.
pub const DEFAULT_PROFILES: &str = include_str!("../data/profiles.toml");

/// Load and validate profiles from a file.
pub fn load_profiles(path: &Path) -> Result<ProfileStore, OntologyError> {
    let text = std::fs::read_to_string(path).map_err(|source| OntologyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_profiles(&text)
}

/// Load the six profiles shipped with the crate.
pub fn default_profiles() -> ProfileStore {
    parse_profiles(DEFAULT_PROFILES).expect("shipped profile file is valid")
}

/// Parse and validate profiles from TOML text.
pub fn parse_profiles(text: &str) -> Result<ProfileStore, OntologyError> {
    let parsed: ProfileFile = toml::from_str(text).map_err(|e| OntologyError::ParseError {
        line: e.span().map(|s| line_of_offset(text, s.start)),
        message: e.message().to_string(),
    })?;
    let mut profiles = BTreeMap::new();
    for profile in parsed.profile {
        validate_profile(&profile)?;
        let name = profile.type_name.clone();
        if profiles.insert(name.clone(), profile).is_some() {
            return Err(OntologyError::DuplicateProfile { type_name: name });
        }
    }
    Ok(ProfileStore { profiles })
}

fn validate_profile(profile: &EventTypeProfile) -> Result<(), OntologyError> {
    if profile.type_name.trim().is_empty() {
        return Err(OntologyError::ParseError {
            line: None,
            message: "profile with empty type name".to_string(),
        });
    }
    let mut seen = BTreeSet::new();
    for decl in profile.all_roles() {
        if decl.role.trim().is_empty() {
            return Err(OntologyError::ParseError {
                line: None,
                message: format!(
                    "profile {:?} declares an empty role name",
                    profile.type_name
                ),
            });
        }
        if !seen.insert(decl.role.clone()) {
            return Err(OntologyError::DuplicateRole {
                profile: profile.type_name.clone(),
                role: decl.role.clone(),
            });
        }
    }
    // Constraints anchored on a participant class need that class populated.
    for constraint in &profile.repeatability {
        let class = match constraint.anchor {
            RepeatAnchor::Active => RoleClass::Active,
            RepeatAnchor::Passive => RoleClass::Passive,
            RepeatAnchor::Spatiotemporal => continue,
        };
        if profile.roles_of_class(class).is_empty() {
            return Err(OntologyError::UnknownRoleReference {
                profile: profile.type_name.clone(),
                anchor: class,
            });
        }
    }
    for &class in &profile.spatial_anchor {
        if profile.roles_of_class(class).is_empty() {
            return Err(OntologyError::UnknownRoleReference {
                profile: profile.type_name.clone(),
                anchor: class,
            });
        }
    }
    Ok(())
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

/// A pair of event descriptions that an `at_most_one` repeatability
/// constraint says must be the same event, yet ended up in distinct
/// clusters. Flagged for review, never auto-merged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintViolation {
    pub type_name: String,
    pub anchor: RepeatAnchor,
    pub a: MentionId,
    pub b: MentionId,
    /// Human-readable witness: the shared participant or region.
    pub shared: String,
}

/// Outcome of the repeatability check: violations plus non-fatal reports
/// about events whose type has no profile.
#[derive(Debug, Clone, Default)]
pub struct RepeatabilityReport {
    pub violations: Vec<ConstraintViolation>,
    pub unknown_types: Vec<(MentionId, String)>,
}

/// Check every `at_most_one` repeatability constraint against the combined
/// clusters of `graph`: two non-coreferent events of the constrained type
/// sharing the anchored participant (or spatio-temporal region) violate the
/// type's identity criterion.
pub fn check_repeatability(
    graph: &CorefGraph,
    corpus: &Corpus,
    store: &ProfileStore,
) -> RepeatabilityReport {
    let partition = cluster::clusters(graph, ClusterMode::Combined);
    let cluster_of = partition.block_index();

    let mut report = RepeatabilityReport::default();
    let mut by_type: BTreeMap<&str, Vec<&EventDescription>> = BTreeMap::new();
    for event in corpus.mentions() {
        if store.has_type(&event.event_type) {
            by_type
                .entry(event.event_type.as_str())
                .or_default()
                .push(event);
        } else {
            report
                .unknown_types
                .push((event.id.clone(), event.event_type.clone()));
        }
    }

    for (type_name, events) in by_type {
        let profile = store.get(type_name).expect("filtered to known types");
        for constraint in &profile.repeatability {
            if constraint.multiplicity != Multiplicity::AtMostOne {
                continue;
            }
            for (i, &e1) in events.iter().enumerate() {
                for &e2 in &events[i + 1..] {
                    if cluster_of.get(&e1.id) == cluster_of.get(&e2.id) {
                        continue;
                    }
                    if let Some(shared) = shared_anchor(e1, e2, profile, constraint.anchor) {
                        report.violations.push(ConstraintViolation {
                            type_name: type_name.to_string(),
                            anchor: constraint.anchor,
                            a: e1.id.clone(),
                            b: e2.id.clone(),
                            shared,
                        });
                    }
                }
            }
        }
    }
    report
}

fn shared_anchor(
    e1: &EventDescription,
    e2: &EventDescription,
    profile: &EventTypeProfile,
    anchor: RepeatAnchor,
) -> Option<String> {
    match anchor {
        RepeatAnchor::Active | RepeatAnchor::Passive => {
            let class = if anchor == RepeatAnchor::Active {
                RoleClass::Active
            } else {
                RoleClass::Passive
            };
            let fillers = |e: &EventDescription| -> BTreeSet<EntityRef> {
                profile
                    .roles_of_class(class)
                    .iter()
                    .flat_map(|decl| e.role_entities(&decl.role).into_iter().cloned())
                    .collect()
            };
            let shared: Vec<EntityRef> = fillers(e1).intersection(&fillers(e2)).cloned().collect();
            shared.first().map(|e| e.to_string())
        }
        RepeatAnchor::Spatiotemporal => {
            let time_ok = compat::time_compat(e1.time.as_ref(), e2.time.as_ref());
            let place_ok = compat::place_compat(e1.place.as_ref(), e2.place.as_ref());
            (time_ok && place_ok).then(|| {
                format!(
                    "time {} ~ {}, place {} ~ {}",
                    e1.time.as_ref().expect("checked"),
                    e2.time.as_ref().expect("checked"),
                    e1.place.as_ref().expect("checked").id(),
                    e2.place.as_ref().expect("checked").id(),
                )
            })
        }
    }
}

/// Report events that fall short of their profile's minimum participant
/// counts. Advisory: extraction output is routinely underspecified.
pub fn check_cardinality(corpus: &Corpus, store: &ProfileStore) -> Vec<String> {
    let mut out = Vec::new();
    for event in corpus.mentions() {
        let Some(profile) = store.get(&event.event_type) else {
            continue;
        };
        for (class, min) in [
            (RoleClass::Active, profile.min_participants.active),
            (RoleClass::Passive, profile.min_participants.passive),
            (RoleClass::Tool, profile.min_participants.tool),
        ] {
            let count: usize = profile
                .roles_of_class(class)
                .iter()
                .map(|decl| event.role_entities(&decl.role).len())
                .sum();
            if (count as u32) < min {
                out.push(format!(
                    "{}: {} has {count} {class} participant(s), profile expects at least {min}",
                    event.id, event.event_type
                ));
            }
        }
    }
    out
}
