//! Shared event representation: typed mentions with roled participants,
//! time, and place, plus the coreference edge type every other module
//! consumes.
//!
//! All types here are immutable after construction and safe to share across
//! threads. Equality of entities is byte-equality of normalized identifiers;
//! missing time/place is represented as absence, never as a sentinel value.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("identifier is empty or whitespace-only")]
    EmptyIdentifier,
    #[error("invalid time point {text:?}: {reason}")]
    InvalidTimePoint { text: String, reason: String },
    #[error("time span start {start} is after end {end}")]
    StartAfterEnd { start: String, end: String },
    #[error("time span mixes granularities: start {start}, end {end}")]
    MixedGranularity { start: String, end: String },
    #[error("place ancestry contains duplicate or self entry {id:?}")]
    BadAncestry { id: String },
    #[error("coreference edge endpoints must differ, got {id:?} twice")]
    SelfEdge { id: String },
    #[error("measure value {0} is outside [0,1]")]
    MeasureOutOfRange(f64),
}

/// A normalized entity identifier, typically a linked-data IRI such as
/// `dbpedia:John_Lennon`, or a local entity key.
///
/// Two `EntityRef`s are equal iff their normalized ids are byte-equal.
/// The optional surface string never participates in equality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntityRef {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    surface: Option<String>,
}

impl EntityRef {
    /// Normalize a raw identifier: trim surrounding whitespace and case-fold
    /// the scheme prefix (the part before the first `:`), leaving the local
    /// part and any percent-encoding untouched. Identifiers without a scheme
    /// are only trimmed.
    pub fn normalize(raw: &str) -> Result<Self, ModelError> {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Err(ModelError::EmptyIdentifier);
        }
        let id = match trimmed.find(':') {
            Some(pos) => {
                let (scheme, rest) = trimmed.split_at(pos);
                format!("{}{}", scheme.to_lowercase(), rest)
            }
            None => trimmed.to_string(),
        };
        Ok(EntityRef { id, surface: None })
    }

    pub fn with_surface(mut self, surface: impl Into<String>) -> Self {
        self.surface = Some(surface.into());
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn surface(&self) -> Option<&str> {
        self.surface.as_deref()
    }
}

impl PartialEq for EntityRef {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for EntityRef {}

impl PartialOrd for EntityRef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for EntityRef {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id.cmp(&other.id)
    }
}

impl std::hash::Hash for EntityRef {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

/// Normalize a raw entity identifier string.
pub fn normalize_entity(raw: &str) -> Result<EntityRef, ModelError> {
    EntityRef::normalize(raw)
}

/// Calendar granularity of a time point, coarsest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Year,
    Month,
    Day,
    Hour,
    Minute,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Granularity::Year => "year",
            Granularity::Month => "month",
            Granularity::Day => "day",
            Granularity::Hour => "hour",
            Granularity::Minute => "minute",
        };
        f.write_str(s)
    }
}

/// A calendar instant expressed at a declared granularity. Fields finer than
/// the granularity are absent, not zero-filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimePoint {
    year: i32,
    month: Option<u8>,
    day: Option<u8>,
    hour: Option<u8>,
    minute: Option<u8>,
}

impl TimePoint {
    /// Parse an ISO-8601 instant truncated to its granularity:
    /// `YYYY`, `YYYY-MM`, `YYYY-MM-DD`, `YYYY-MM-DDTHH`, or `YYYY-MM-DDTHH:MM`.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let err = |reason: &str| ModelError::InvalidTimePoint {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let (date_part, time_part) = match text.split_once('T') {
            Some((d, t)) => (d, Some(t)),
            None => (text, None),
        };
        let mut date_fields = date_part.split('-');
        let year: i32 = date_fields
            .next()
            .filter(|y| y.len() == 4)
            .and_then(|y| y.parse().ok())
            .ok_or_else(|| err("expected 4-digit year"))?;
        let month = match date_fields.next() {
            Some(m) => Some(parse_component(m, 1, 12).ok_or_else(|| err("month must be 01-12"))?),
            None => None,
        };
        let day = match date_fields.next() {
            Some(d) => {
                if month.is_none() {
                    return Err(err("day without month"));
                }
                Some(parse_component(d, 1, 31).ok_or_else(|| err("day must be 01-31"))?)
            }
            None => None,
        };
        if date_fields.next().is_some() {
            return Err(err("trailing date fields"));
        }
        let (hour, minute) = match time_part {
            Some(t) => {
                if day.is_none() {
                    return Err(err("time of day without full date"));
                }
                let mut clock = t.split(':');
                let hour = clock
                    .next()
                    .and_then(|h| parse_component(h, 0, 23))
                    .ok_or_else(|| err("hour must be 00-23"))?;
                let minute = match clock.next() {
                    Some(m) => {
                        Some(parse_component(m, 0, 59).ok_or_else(|| err("minute must be 00-59"))?)
                    }
                    None => None,
                };
                if clock.next().is_some() {
                    return Err(err("trailing clock fields"));
                }
                (Some(hour), minute)
            }
            None => (None, None),
        };
        Ok(TimePoint {
            year,
            month,
            day,
            hour,
            minute,
        })
    }

    pub fn granularity(&self) -> Granularity {
        if self.minute.is_some() {
            Granularity::Minute
        } else if self.hour.is_some() {
            Granularity::Hour
        } else if self.day.is_some() {
            Granularity::Day
        } else if self.month.is_some() {
            Granularity::Month
        } else {
            Granularity::Year
        }
    }

    /// Drop fields finer than `g`. Truncating to a finer granularity than the
    /// point carries is a no-op.
    pub fn truncate(&self, g: Granularity) -> TimePoint {
        TimePoint {
            year: self.year,
            month: if g >= Granularity::Month {
                self.month
            } else {
                None
            },
            day: if g >= Granularity::Day {
                self.day
            } else {
                None
            },
            hour: if g >= Granularity::Hour {
                self.hour
            } else {
                None
            },
            minute: if g >= Granularity::Minute {
                self.minute
            } else {
                None
            },
        }
    }

    fn key(&self) -> (i32, u8, u8, u8, u8) {
        (
            self.year,
            self.month.unwrap_or(0),
            self.day.unwrap_or(0),
            self.hour.unwrap_or(0),
            self.minute.unwrap_or(0),
        )
    }
}

impl PartialOrd for TimePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Ordering is only meaningful between points of the same granularity; the
/// comparison treats absent fields as zero, which is exactly the truncated
/// comparison the compatibility semantics needs.
impl Ord for TimePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}", self.year)?;
        if let Some(m) = self.month {
            write!(f, "-{m:02}")?;
        }
        if let Some(d) = self.day {
            write!(f, "-{d:02}")?;
        }
        if let Some(h) = self.hour {
            write!(f, "T{h:02}")?;
        }
        if let Some(min) = self.minute {
            write!(f, ":{min:02}")?;
        }
        Ok(())
    }
}

fn parse_component(s: &str, min: u8, max: u8) -> Option<u8> {
    if s.len() != 2 {
        return None;
    }
    let v: u8 = s.parse().ok()?;
    (min..=max).contains(&v).then_some(v)
}

/// A time span `[start, end]` at a single declared granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeSpec {
    start: TimePoint,
    end: TimePoint,
    granularity: Granularity,
}

impl TimeSpec {
    pub fn new(start: TimePoint, end: TimePoint) -> Result<Self, ModelError> {
        if start.granularity() != end.granularity() {
            return Err(ModelError::MixedGranularity {
                start: start.to_string(),
                end: end.to_string(),
            });
        }
        if start > end {
            return Err(ModelError::StartAfterEnd {
                start: start.to_string(),
                end: end.to_string(),
            });
        }
        Ok(TimeSpec {
            start,
            end,
            granularity: start.granularity(),
        })
    }

    /// A zero-length span covering a single instant.
    pub fn instant(point: TimePoint) -> Self {
        TimeSpec {
            start: point,
            end: point,
            granularity: point.granularity(),
        }
    }

    /// Parse `"start"` or `"start/end"` in truncated ISO-8601.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        match text.split_once('/') {
            Some((s, e)) => TimeSpec::new(TimePoint::parse(s)?, TimePoint::parse(e)?),
            None => Ok(TimeSpec::instant(TimePoint::parse(text)?)),
        }
    }

    pub fn start(&self) -> TimePoint {
        self.start
    }

    pub fn end(&self) -> TimePoint {
        self.end
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.end {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}/{}", self.start, self.end)
        }
    }
}

/// A location with an optional containment chain, most specific first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceSpec {
    id: EntityRef,
    ancestry: Vec<EntityRef>,
}

impl PlaceSpec {
    pub fn new(id: EntityRef, ancestry: Vec<EntityRef>) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for anc in &ancestry {
            if anc == &id || !seen.insert(anc.id().to_string()) {
                return Err(ModelError::BadAncestry {
                    id: anc.id().to_string(),
                });
            }
        }
        Ok(PlaceSpec { id, ancestry })
    }

    pub fn id(&self) -> &EntityRef {
        &self.id
    }

    pub fn ancestry(&self) -> &[EntityRef] {
        &self.ancestry
    }
}

/// A roled participant of an event. The role name is drawn from the owning
/// event type's frame-element vocabulary and validated against its profile.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Participant {
    pub role: String,
    pub entity: EntityRef,
}

/// A mention identifier, unique within a corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MentionId(String);

impl MentionId {
    pub fn new(id: impl Into<String>) -> Self {
        MentionId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MentionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for MentionId {
    fn from(s: &str) -> Self {
        MentionId(s.to_string())
    }
}

/// One mention-level event record: the four characterizing features (type,
/// roled participants, time, place) plus provenance and the predicate lemma.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDescription {
    pub id: MentionId,
    pub event_type: String,
    pub participants: Vec<Participant>,
    pub time: Option<TimeSpec>,
    pub place: Option<PlaceSpec>,
    pub subevents: BTreeSet<MentionId>,
    pub lemma: String,
    pub doc_id: String,
    pub topic_id: String,
}

impl EventDescription {
    /// All entities filling the given role, in id order.
    pub fn role_entities(&self, role: &str) -> Vec<&EntityRef> {
        let mut out: Vec<&EntityRef> = self
            .participants
            .iter()
            .filter(|p| p.role == role)
            .map(|p| &p.entity)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Role name -> entities map, for profile validation and reporting.
    pub fn roles(&self) -> BTreeMap<&str, Vec<&EntityRef>> {
        let mut map: BTreeMap<&str, Vec<&EntityRef>> = BTreeMap::new();
        for p in &self.participants {
            map.entry(p.role.as_str()).or_default().push(&p.entity);
        }
        map
    }
}

/// Edge strength: certain rules encode necessary-and-sufficient identity
/// criteria, possible rules only necessary ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    Certain,
    Possible,
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strength::Certain => f.write_str("certain"),
            Strength::Possible => f.write_str("possible"),
        }
    }
}

/// An unordered pair of distinct mention ids. Construction normalizes the
/// order, so `(a, b)` and `(b, a)` are the same pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MentionPair {
    a: MentionId,
    b: MentionId,
}

impl MentionPair {
    pub fn new(x: MentionId, y: MentionId) -> Result<Self, ModelError> {
        match x.cmp(&y) {
            Ordering::Less => Ok(MentionPair { a: x, b: y }),
            Ordering::Greater => Ok(MentionPair { a: y, b: x }),
            Ordering::Equal => Err(ModelError::SelfEdge { id: x.to_string() }),
        }
    }

    pub fn first(&self) -> &MentionId {
        &self.a
    }

    pub fn second(&self) -> &MentionId {
        &self.b
    }
}

/// A derived coreference edge with its rule provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorefEdge {
    pub pair: MentionPair,
    pub strength: Strength,
    pub rule_id: String,
    pub iteration: u32,
}

/// A coreference measure value in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CorefMeasureValue(f64);

impl CorefMeasureValue {
    pub fn new(value: f64) -> Result<Self, ModelError> {
        if (0.0..=1.0).contains(&value) {
            Ok(CorefMeasureValue(value))
        } else {
            Err(ModelError::MeasureOutOfRange(value))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_keeps_local_part_verbatim() {
        let e = normalize_entity("dbpedia:John_Lennon").unwrap();
        assert_eq!(e.id(), "dbpedia:John_Lennon");
    }

    #[test]
    fn normalize_trims() {
        assert_eq!(normalize_entity("  x  ").unwrap().id(), "x");
    }

    #[test]
    fn normalize_case_folds_scheme() {
        let a = normalize_entity("DBPEDIA:Paris").unwrap();
        let b = normalize_entity("dbpedia:Paris").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn normalize_rejects_whitespace_only() {
        assert_eq!(normalize_entity("   "), Err(ModelError::EmptyIdentifier));
    }

    #[test]
    fn time_point_parse_granularities() {
        assert_eq!(
            TimePoint::parse("1980").unwrap().granularity(),
            Granularity::Year
        );
        assert_eq!(
            TimePoint::parse("1980-12").unwrap().granularity(),
            Granularity::Month
        );
        assert_eq!(
            TimePoint::parse("1980-12-08").unwrap().granularity(),
            Granularity::Day
        );
        assert_eq!(
            TimePoint::parse("1980-12-08T23").unwrap().granularity(),
            Granularity::Hour
        );
        assert_eq!(
            TimePoint::parse("1980-12-08T23:15").unwrap().granularity(),
            Granularity::Minute
        );
    }

    #[test]
    fn time_point_rejects_malformed() {
        for bad in [
            "80",
            "1980-13",
            "1980-12-32",
            "1980-12-08T24",
            "1980-12-08T23:60",
            "1980-1",
        ] {
            assert!(TimePoint::parse(bad).is_err(), "{bad} should not parse");
        }
    }

    #[test]
    fn time_point_display_round_trips() {
        for text in [
            "1980",
            "1980-12",
            "1980-12-08",
            "1980-12-08T23",
            "1980-12-08T23:15",
        ] {
            assert_eq!(TimePoint::parse(text).unwrap().to_string(), text);
        }
    }

    #[test]
    fn time_spec_rejects_reversed_span() {
        assert!(TimeSpec::parse("1981-01-01/1980-12-08").is_err());
        assert!(TimeSpec::parse("1980-12-08/1981-01-01").is_ok());
    }

    #[test]
    fn time_spec_rejects_mixed_granularity() {
        assert!(TimeSpec::parse("1980-12/1981-01-01").is_err());
    }

    #[test]
    fn place_rejects_self_ancestry() {
        let nyc = normalize_entity("dbpedia:New_York_City").unwrap();
        assert!(PlaceSpec::new(nyc.clone(), vec![nyc]).is_err());
    }

    #[test]
    fn mention_pair_is_unordered() {
        let p1 = MentionPair::new(MentionId::from("b"), MentionId::from("a")).unwrap();
        let p2 = MentionPair::new(MentionId::from("a"), MentionId::from("b")).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(p1.first().as_str(), "a");
    }

    #[test]
    fn mention_pair_rejects_self_loop() {
        assert!(MentionPair::new(MentionId::from("a"), MentionId::from("a")).is_err());
    }

    #[test]
    fn measure_range_checked() {
        assert!(CorefMeasureValue::new(0.5).is_ok());
        assert!(CorefMeasureValue::new(1.5).is_err());
        assert!(CorefMeasureValue::new(-0.1).is_err());
    }
}
