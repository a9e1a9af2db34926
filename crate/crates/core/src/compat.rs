//! Equality and compatibility semantics for entities, times, and places.
//!
//! Equality (`==`) is byte-equality of normalized ids. Compatibility (`~`)
//! is interval intersection for times (evaluated at the coarser of the two
//! granularities, so inclusion is a special case) and containment for places.
//! A missing value is never compatible with anything, including another
//! missing value: absence means unknown, not wildcard.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

use crate::model::{EntityRef, EventDescription, PlaceSpec, TimeSpec};

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("cannot read gazetteer {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("gazetteer line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// `==` on entities: normalized ids byte-equal.
pub fn entity_eq(a: &EntityRef, b: &EntityRef) -> bool {
    a.id() == b.id()
}

/// `~` on times: both present and their spans, truncated to the coarser of
/// the two granularities, intersect.
pub fn time_compat(a: Option<&TimeSpec>, b: Option<&TimeSpec>) -> bool {
    let (a, b) = match (a, b) {
        (Some(a), Some(b)) => (a, b),
        _ => return false,
    };
    let g = a.granularity().min(b.granularity());
    let (a_start, a_end) = (a.start().truncate(g), a.end().truncate(g));
    let (b_start, b_end) = (b.start().truncate(g), b.end().truncate(g));
    a_start <= b_end && b_start <= a_end
}

/// `==` on times: both present, same granularity, identical span.
pub fn time_eq(a: Option<&TimeSpec>, b: Option<&TimeSpec>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a == b,
        _ => false,
    }
}

/// `~` on places: both present and equal, or one contains the other per the
/// ancestry chain.
pub fn place_compat(a: Option<&PlaceSpec>, b: Option<&PlaceSpec>) -> bool {
    let (a, b) = match (a, b) {
        (Some(a), Some(b)) => (a, b),
        _ => return false,
    };
    if entity_eq(a.id(), b.id()) {
        return true;
    }
    a.ancestry().iter().any(|anc| entity_eq(anc, b.id()))
        || b.ancestry().iter().any(|anc| entity_eq(anc, a.id()))
}

/// `==` on places: both present with equal location ids; ancestry ignored.
pub fn place_eq(a: Option<&PlaceSpec>, b: Option<&PlaceSpec>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => entity_eq(a.id(), b.id()),
        _ => false,
    }
}

/// `==` on a roled participant slot: some entity filling `role_a` on `a`
/// equals some entity filling `role_b` on `b`. Multi-valued roles match
/// existentially; an empty side never matches.
pub fn role_eq(a: &EventDescription, role_a: &str, b: &EventDescription, role_b: &str) -> bool {
    role_eq_witness(a, role_a, b, role_b).is_some()
}

/// Like [`role_eq`], returning the first matching entity (in id order) as a
/// witness for derivation traces.
pub fn role_eq_witness<'a>(
    a: &'a EventDescription,
    role_a: &str,
    b: &EventDescription,
    role_b: &str,
) -> Option<&'a EntityRef> {
    let lhs = a.role_entities(role_a);
    let rhs = b.role_entities(role_b);
    lhs.into_iter()
        .find(|e| rhs.iter().any(|f| entity_eq(e, f)))
}

/// Location containment fixture: maps a location id to its ordered ancestry
/// (most specific first). Used to enrich corpus places that do not carry an
/// inline ancestry.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    ancestry: BTreeMap<String, Vec<EntityRef>>,
}

impl Gazetteer {
    pub fn new() -> Self {
        Gazetteer::default()
    }

    /// Load from a text fixture: one location per line, whitespace-separated
    /// ids, first the location and then its ancestors most specific first.
    /// `#` starts a comment; blank lines are skipped.
    pub fn load(path: &Path) -> Result<Self, GazetteerError> {
        let file = std::fs::File::open(path).map_err(|source| GazetteerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut gaz = Gazetteer::new();
        for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| GazetteerError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut tokens = content.split_whitespace();
            let id = tokens.next().expect("non-empty content has a token");
            let id = EntityRef::normalize(id).map_err(|e| GazetteerError::Malformed {
                line: line_no,
                reason: e.to_string(),
            })?;
            let mut ancestors = Vec::new();
            for tok in tokens {
                let anc = EntityRef::normalize(tok).map_err(|e| GazetteerError::Malformed {
                    line: line_no,
                    reason: e.to_string(),
                })?;
                if anc == id || ancestors.contains(&anc) {
                    return Err(GazetteerError::Malformed {
                        line: line_no,
                        reason: format!("duplicate or self ancestor {anc}"),
                    });
                }
                ancestors.push(anc);
            }
            if gaz
                .ancestry
                .insert(id.id().to_string(), ancestors)
                .is_some()
            {
                return Err(GazetteerError::Malformed {
                    line: line_no,
                    reason: format!("location {id} declared twice"),
                });
            }
        }
        Ok(gaz)
    }

    pub fn insert(&mut self, id: &EntityRef, ancestors: Vec<EntityRef>) {
        self.ancestry.insert(id.id().to_string(), ancestors);
    }

    pub fn ancestry_of(&self, id: &EntityRef) -> Option<&[EntityRef]> {
        self.ancestry.get(id.id()).map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.ancestry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ancestry.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::normalize_entity;

    fn ts(text: &str) -> Option<TimeSpec> {
        Some(TimeSpec::parse(text).unwrap())
    }

    fn place(id: &str, ancestry: &[&str]) -> Option<PlaceSpec> {
        Some(
            PlaceSpec::new(
                normalize_entity(id).unwrap(),
                ancestry
                    .iter()
                    .map(|a| normalize_entity(a).unwrap())
                    .collect(),
            )
            .unwrap(),
        )
    }

    #[test]
    fn entity_eq_is_id_equality() {
        let john = normalize_entity("dbpedia:John_Lennon").unwrap();
        let chapman = normalize_entity("dbpedia:Mark_Chapman").unwrap();
        assert!(entity_eq(&john, &john));
        assert!(!entity_eq(&john, &chapman));
        let paris_upper = normalize_entity("DBPEDIA:Paris").unwrap();
        let paris = normalize_entity("dbpedia:Paris").unwrap();
        assert!(entity_eq(&paris_upper, &paris));
    }

    #[test]
    fn time_compat_inclusion_across_granularities() {
        assert!(time_compat(
            ts("1980-12-08").as_ref(),
            ts("1980-12").as_ref()
        ));
        assert!(time_compat(
            ts("1980-12").as_ref(),
            ts("1980-12-08").as_ref()
        ));
    }

    #[test]
    fn time_compat_identity_and_disjoint() {
        assert!(time_compat(
            ts("1980-12-08").as_ref(),
            ts("1980-12-08").as_ref()
        ));
        assert!(!time_compat(
            ts("1980-12-08").as_ref(),
            ts("1981-01-01").as_ref()
        ));
    }

    #[test]
    fn time_compat_spans_intersect() {
        assert!(time_compat(
            ts("1980-12-01/1980-12-10").as_ref(),
            ts("1980-12-08/1980-12-20").as_ref()
        ));
        assert!(!time_compat(
            ts("1980-12-01/1980-12-05").as_ref(),
            ts("1980-12-08/1980-12-20").as_ref()
        ));
    }

    #[test]
    fn time_compat_absence_absorbs() {
        assert!(!time_compat(None, ts("1980-12-08").as_ref()));
        assert!(!time_compat(ts("1980-12-08").as_ref(), None));
        assert!(!time_compat(None, None));
    }

    #[test]
    fn time_eq_requires_same_granularity() {
        assert!(time_eq(
            ts("1980-12-08").as_ref(),
            ts("1980-12-08").as_ref()
        ));
        assert!(!time_eq(ts("1980-12-08").as_ref(), ts("1980-12").as_ref()));
        assert!(!time_eq(None, ts("1980-12-08").as_ref()));
    }

    #[test]
    fn place_compat_containment() {
        let nyc = place(
            "dbpedia:New_York_City",
            &["dbpedia:New_York", "dbpedia:USA"],
        );
        let usa = place("dbpedia:USA", &[]);
        let paris = place("dbpedia:Paris", &["dbpedia:France"]);
        assert!(place_compat(nyc.as_ref(), nyc.as_ref()));
        assert!(place_compat(nyc.as_ref(), usa.as_ref()));
        assert!(place_compat(usa.as_ref(), nyc.as_ref()));
        assert!(!place_compat(nyc.as_ref(), paris.as_ref()));
        assert!(!place_compat(None, nyc.as_ref()));
    }

    #[test]
    fn place_eq_ignores_ancestry() {
        let nyc_with = place("dbpedia:New_York_City", &["dbpedia:USA"]);
        let nyc_bare = place("dbpedia:New_York_City", &[]);
        let usa = place("dbpedia:USA", &[]);
        assert!(place_eq(nyc_with.as_ref(), nyc_bare.as_ref()));
        assert!(!place_eq(nyc_with.as_ref(), usa.as_ref()));
    }

    #[test]
    fn role_eq_is_existential() {
        use crate::model::{MentionId, Participant};
        let mk = |roles: &[(&str, &str)]| EventDescription {
            id: MentionId::from("m"),
            event_type: "Killing".into(),
            participants: roles
                .iter()
                .map(|(r, e)| Participant {
                    role: r.to_string(),
                    entity: normalize_entity(e).unwrap(),
                })
                .collect(),
            time: None,
            place: None,
            subevents: Default::default(),
            lemma: "kill".into(),
            doc_id: "d".into(),
            topic_id: "t".into(),
        };
        let a = mk(&[("Tool", "knife"), ("Tool", "rope")]);
        let b = mk(&[("Tool", "rope")]);
        let c = mk(&[("Tool", "knife")]);
        let none = mk(&[]);
        assert!(role_eq(&a, "Tool", &b, "Tool"));
        assert!(!role_eq(&b, "Tool", &c, "Tool"));
        assert!(role_eq(&a, "Tool", &c, "Tool"));
        assert!(!role_eq(&none, "Tool", &c, "Tool"));
    }
}
