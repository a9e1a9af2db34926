//! The coreference rule language: a line-oriented DSL of conjunctive
//! conditions over two event variables.
//!
//! One rule per line:
//!
//! ```text
//! <strength> <TypeE1>[/<TypeE2>] : <cond> (& <cond>)*
//! ```
//!
//! where `<strength>` is `certain` or `possible`, a condition is
//! `E1.<name> == E2.<name>`, `E1.<name> ~ E2.<name>`, or
//! `E1.SubEvent hasCoref E2.SubEvent`, and `#` starts a comment. `Time`,
//! `Place`, and `SubEvent` are reserved feature accessors; every other name
//! is a participant role validated against the guarded type's profile.
//! Compatibility (`~`) applies only to `Time` and `Place`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::model::Strength;
use crate::ontology::ProfileStore;

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("cannot read rule file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("rule parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("rule {rule_id} (line {line}): unknown role {role:?} for event type {type_name:?}")]
    UnknownRole {
        rule_id: String,
        line: usize,
        role: String,
        type_name: String,
    },
    #[error("rule at line {line}: unknown event type {type_name:?} in guard")]
    UnknownEventType { line: usize, type_name: String },
    #[error("rule at line {line} has no conditions")]
    EmptyConjunction { line: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    E1,
    E2,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::E1 => f.write_str("E1"),
            Side::E2 => f.write_str("E2"),
        }
    }
}

/// What an accessor reads from an event: a roled participant slot or one of
/// the reserved features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feature {
    Role(String),
    Time,
    Place,
    SubEvent,
}

impl Feature {
    fn parse(name: &str) -> Feature {
        match name {
            "Time" => Feature::Time,
            "Place" => Feature::Place,
            "SubEvent" => Feature::SubEvent,
            role => Feature::Role(role.to_string()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Feature::Role(r) => r,
            Feature::Time => "Time",
            Feature::Place => "Place",
            Feature::SubEvent => "SubEvent",
        }
    }
}

/// One side of a condition: `E1.Victim`, `E2.Time`, ...
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleAccessor {
    pub side: Side,
    pub feature: Feature,
}

impl fmt::Display for RoleAccessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.side, self.feature.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    Eq,
    Compat,
    SubeventCoref,
}

/// An atomic condition of a rule body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub kind: ConditionKind,
    pub lhs: RoleAccessor,
    pub rhs: RoleAccessor,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.kind {
            ConditionKind::Eq => "==",
            ConditionKind::Compat => "~",
            ConditionKind::SubeventCoref => "hasCoref",
        };
        write!(f, "{} {} {}", self.lhs, op, self.rhs)
    }
}

/// A parsed coreference rule: type guards plus a conjunction of conditions.
/// Cross-type rules (distinct guards) are parsed but disabled unless the
/// parse options enable them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorefRule {
    pub rule_id: String,
    pub strength: Strength,
    pub type_guard_e1: String,
    pub type_guard_e2: String,
    pub conditions: Vec<Condition>,
    pub enabled: bool,
    pub line: usize,
}

impl CorefRule {
    pub fn is_cross_type(&self) -> bool {
        self.type_guard_e1 != self.type_guard_e2
    }

    /// Canonical one-line form, re-parseable by [`parse_rules`].
    pub fn pretty(&self) -> String {
        let guard = if self.is_cross_type() {
            format!("{}/{}", self.type_guard_e1, self.type_guard_e2)
        } else {
            self.type_guard_e1.clone()
        };
        let body = self
            .conditions
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" & ");
        format!("{} {} : {}", self.strength, guard, body)
    }
}

/// An ordered set of parsed rules plus lint warnings gathered while parsing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleSet {
    rules: Vec<CorefRule>,
    warnings: Vec<String>,
}

impl RuleSet {
    pub fn rules(&self) -> &[CorefRule] {
        &self.rules
    }

    /// Rules the engine should evaluate.
    pub fn enabled_rules(&self) -> impl Iterator<Item = &CorefRule> {
        self.rules.iter().filter(|r| r.enabled)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Canonical text of the whole set, re-parseable by [`parse_rules`].
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            out.push_str(&rule.pretty());
            out.push('\n');
        }
        out
    }
}

/// Parser switches. Defaults match the shipped rule file: verbatim rules
/// referencing roles a profile does not declare are kept with a warning, and
/// cross-type rules are parsed but left disabled.
#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Accept conditions naming undeclared roles, with a lint warning. Such
    /// conditions can never hold on valid data.
    pub legacy_verbatim: bool,
    /// Enable rules whose two type guards differ.
    pub enable_cross_type: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            legacy_verbatim: true,
            enable_cross_type: false,
        }
    }
}

/// The rule file shipped with the crate.
pub const DEFAULT_RULES: &str = include_str!("../data/coref.rules");

/// Parse the shipped rule file with the given options. Fails only under
/// strict role checking, which rejects the file's two verbatim rows naming
/// an undeclared role.
pub fn default_rules(store: &ProfileStore, options: ParseOptions) -> Result<RuleSet, RuleError> {
    parse_rule_text(DEFAULT_RULES, store, options)
}

/// Parse a rule file, validating roles against the profile store.
pub fn parse_rules(
    path: &Path,
    store: &ProfileStore,
    options: ParseOptions,
) -> Result<RuleSet, RuleError> {
    let text = std::fs::read_to_string(path).map_err(|source| RuleError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_rule_text(&text, store, options)
}

/// Parse rule text, validating roles against the profile store.
pub fn parse_rule_text(
    text: &str,
    store: &ProfileStore,
    options: ParseOptions,
) -> Result<RuleSet, RuleError> {
    let mut rules: Vec<CorefRule> = Vec::new();
    let mut warnings = Vec::new();
    let mut counters: BTreeMap<(String, String, Strength), usize> = BTreeMap::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let rule = parse_rule_line(line, line_no, store, options, &mut counters, &mut warnings)?;
        rules.push(rule);
    }
    Ok(RuleSet { rules, warnings })
}

fn parse_rule_line(
    line: &str,
    line_no: usize,
    store: &ProfileStore,
    options: ParseOptions,
    counters: &mut BTreeMap<(String, String, Strength), usize>,
    warnings: &mut Vec<String>,
) -> Result<CorefRule, RuleError> {
    let err = |message: String| RuleError::ParseError {
        line: line_no,
        message,
    };

    let (head, body) = line
        .split_once(':')
        .ok_or_else(|| err("expected ':' between guard and conditions".into()))?;

    let mut head_tokens = head.split_whitespace();
    let strength = match head_tokens.next() {
        Some("certain") => Strength::Certain,
        Some("possible") => Strength::Possible,
        Some(other) => {
            return Err(err(format!(
                "expected 'certain' or 'possible', got {other:?}"
            )))
        }
        None => return Err(err("missing rule strength".into())),
    };
    let guard = head_tokens
        .next()
        .ok_or_else(|| err("missing type guard".into()))?;
    if let Some(extra) = head_tokens.next() {
        return Err(err(format!("unexpected token {extra:?} before ':'")));
    }
    let (type_e1, type_e2) = match guard.split_once('/') {
        Some((a, b)) => (a.to_string(), b.to_string()),
        None => (guard.to_string(), guard.to_string()),
    };
    for type_name in [&type_e1, &type_e2] {
        if !store.has_type(type_name) {
            return Err(RuleError::UnknownEventType {
                line: line_no,
                type_name: type_name.clone(),
            });
        }
    }

    let cross = type_e1 != type_e2;
    let strength_tag = strength.to_string();
    let counter = counters
        .entry((type_e1.clone(), type_e2.clone(), strength))
        .or_insert(0);
    *counter += 1;
    let rule_id = if cross {
        format!(
            "{}-{}-{}-{}",
            type_e1.to_lowercase(),
            type_e2.to_lowercase(),
            strength_tag,
            counter
        )
    } else {
        format!("{}-{}-{}", type_e1.to_lowercase(), strength_tag, counter)
    };

    let body = body.trim();
    if body.is_empty() {
        return Err(RuleError::EmptyConjunction { line: line_no });
    }
    let mut conditions = Vec::new();
    for clause in body.split('&') {
        let clause = clause.trim();
        if clause.is_empty() {
            return Err(err("empty condition in conjunction".into()));
        }
        conditions.push(parse_condition(clause, line_no)?);
    }
    if conditions.is_empty() {
        return Err(RuleError::EmptyConjunction { line: line_no });
    }

    // Role validation against the guarded types.
    let mut warned: BTreeSet<(String, String)> = BTreeSet::new();
    for cond in &conditions {
        for (accessor, type_name) in [(&cond.lhs, &type_e1), (&cond.rhs, &type_e2)] {
            if let Feature::Role(role) = &accessor.feature {
                if !store.role_valid(type_name, role) {
                    if options.legacy_verbatim {
                        if warned.insert((type_name.clone(), role.clone())) {
                            warnings.push(format!(
                                "rule {rule_id} (line {line_no}): role {role:?} is not declared \
                                 for {type_name:?}; the condition can never hold"
                            ));
                        }
                    } else {
                        return Err(RuleError::UnknownRole {
                            rule_id,
                            line: line_no,
                            role: role.clone(),
                            type_name: type_name.clone(),
                        });
                    }
                }
            }
        }
    }

    Ok(CorefRule {
        rule_id,
        strength,
        type_guard_e1: type_e1,
        type_guard_e2: type_e2,
        conditions,
        enabled: !cross || options.enable_cross_type,
        line: line_no,
    })
}

fn parse_condition(clause: &str, line_no: usize) -> Result<Condition, RuleError> {
    let err = |message: String| RuleError::ParseError {
        line: line_no,
        message,
    };
    let tokens: Vec<&str> = clause.split_whitespace().collect();
    let [lhs, op, rhs] = tokens.as_slice() else {
        return Err(err(format!(
            "condition {clause:?} must be '<accessor> <op> <accessor>'"
        )));
    };
    let lhs = parse_accessor(lhs, line_no)?;
    let rhs = parse_accessor(rhs, line_no)?;
    if lhs.side != Side::E1 || rhs.side != Side::E2 {
        return Err(err(
            "conditions read E1 on the left and E2 on the right".into()
        ));
    }
    let kind = match *op {
        "==" => ConditionKind::Eq,
        "~" => ConditionKind::Compat,
        "hasCoref" => ConditionKind::SubeventCoref,
        other => return Err(err(format!("unknown operator {other:?}"))),
    };
    let kinds_match = matches!(
        (&lhs.feature, &rhs.feature),
        (Feature::Role(_), Feature::Role(_))
            | (Feature::Time, Feature::Time)
            | (Feature::Place, Feature::Place)
            | (Feature::SubEvent, Feature::SubEvent)
    );
    if !kinds_match {
        return Err(err(format!(
            "cannot compare {} with {}",
            lhs.feature.name(),
            rhs.feature.name()
        )));
    }
    match kind {
        ConditionKind::SubeventCoref => {
            if lhs.feature != Feature::SubEvent {
                return Err(err("hasCoref applies only to SubEvent on both sides".into()));
            }
        }
        ConditionKind::Eq => {
            if lhs.feature == Feature::SubEvent {
                return Err(err("'==' does not apply to SubEvent".into()));
            }
        }
        ConditionKind::Compat => {
            if !matches!(lhs.feature, Feature::Time | Feature::Place) {
                return Err(err("'~' applies only to Time and Place".into()));
            }
        }
    }
    Ok(Condition { kind, lhs, rhs })
}

fn parse_accessor(token: &str, line_no: usize) -> Result<RoleAccessor, RuleError> {
    let err = |message: String| RuleError::ParseError {
        line: line_no,
        message,
    };
    let (side, name) = token.split_once('.').ok_or_else(|| {
        err(format!(
            "accessor {token:?} must be 'E1.<name>' or 'E2.<name>'"
        ))
    })?;
    let side = match side {
        "E1" => Side::E1,
        "E2" => Side::E2,
        other => return Err(err(format!("unknown event variable {other:?}"))),
    };
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err(err(format!("invalid accessor name {name:?}")));
    }
    Ok(RoleAccessor {
        side,
        feature: Feature::parse(name),
    })
}

/// Per-type rule counts, split by strength, with cross-type rules bucketed
/// separately.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleCountReport {
    /// type name -> (certain, possible) counts over intra-type rules.
    pub per_type: BTreeMap<String, (usize, usize)>,
    /// Number of cross-type rules (any strength).
    pub cross_type: usize,
}

impl RuleCountReport {
    pub fn counts(&self, type_name: &str) -> (usize, usize) {
        self.per_type.get(type_name).copied().unwrap_or((0, 0))
    }
}

impl fmt::Display for RuleCountReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (type_name, (certain, possible)) in &self.per_type {
            writeln!(f, "{type_name}: {certain} certain, {possible} possible")?;
        }
        if self.cross_type > 0 {
            writeln!(f, "cross-type: {}", self.cross_type)?;
        }
        Ok(())
    }
}

/// Count rules per type and strength.
pub fn rule_count_report(rs: &RuleSet) -> RuleCountReport {
    let mut report = RuleCountReport::default();
    for rule in rs.rules() {
        if rule.is_cross_type() {
            report.cross_type += 1;
            continue;
        }
        let entry = report
            .per_type
            .entry(rule.type_guard_e1.clone())
            .or_insert((0, 0));
        match rule.strength {
            Strength::Certain => entry.0 += 1,
            Strength::Possible => entry.1 += 1,
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::default_profiles;

    fn store() -> ProfileStore {
        default_profiles()
    }

    #[test]
    fn parses_single_condition_certain_rule() {
        let rs = parse_rule_text(
            "certain Killing : E1.Victim == E2.Victim",
            &store(),
            ParseOptions::default(),
        )
        .unwrap();
        let rule = &rs.rules()[0];
        assert_eq!(rule.strength, Strength::Certain);
        assert_eq!(rule.rule_id, "killing-certain-1");
        assert_eq!(rule.conditions.len(), 1);
        assert_eq!(rule.conditions[0].kind, ConditionKind::Eq);
        assert!(rule.enabled);

        // The colon may hug the type name.
        let hugged = parse_rule_text(
            "certain Killing: E1.Victim == E2.Victim",
            &store(),
            ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(hugged.rules()[0].conditions, rule.conditions);
    }

    #[test]
    fn parses_two_condition_possible_rule() {
        let rs = parse_rule_text(
            "possible Killing : E1.Place ~ E2.Place & E1.Time ~ E2.Time",
            &store(),
            ParseOptions::default(),
        )
        .unwrap();
        let rule = &rs.rules()[0];
        assert_eq!(rule.strength, Strength::Possible);
        assert_eq!(rule.conditions.len(), 2);
        assert!(rule
            .conditions
            .iter()
            .all(|c| c.kind == ConditionKind::Compat));
    }

    #[test]
    fn unknown_role_is_an_error_when_strict() {
        let opts = ParseOptions {
            legacy_verbatim: false,
            ..ParseOptions::default()
        };
        match parse_rule_text("certain Killing : E1.Victim == E2.Elephant", &store(), opts) {
            Err(RuleError::UnknownRole {
                role, type_name, ..
            }) => {
                assert_eq!(role, "Elephant");
                assert_eq!(type_name, "Killing");
            }
            other => panic!("expected UnknownRole, got {other:?}"),
        }
    }

    #[test]
    fn unknown_role_warns_when_verbatim() {
        let rs = parse_rule_text(
            "certain Killing : E1.Victim == E2.Elephant",
            &store(),
            ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(rs.rules().len(), 1);
        assert_eq!(rs.warnings().len(), 1);
        assert!(rs.warnings()[0].contains("Elephant"));
    }

    #[test]
    fn empty_conjunction_rejected() {
        match parse_rule_text("certain Killing :", &store(), ParseOptions::default()) {
            Err(RuleError::EmptyConjunction { line }) => assert_eq!(line, 1),
            other => panic!("expected EmptyConjunction, got {other:?}"),
        }
    }

    #[test]
    fn compat_restricted_to_time_and_place() {
        assert!(parse_rule_text(
            "possible Killing : E1.Victim ~ E2.Victim",
            &store(),
            ParseOptions::default()
        )
        .is_err());
    }

    #[test]
    fn subevent_condition_is_well_formed_only_on_subevent() {
        assert!(parse_rule_text(
            "certain Killing : E1.SubEvent hasCoref E2.SubEvent",
            &store(),
            ParseOptions::default()
        )
        .is_ok());
        assert!(parse_rule_text(
            "certain Killing : E1.Victim hasCoref E2.Victim",
            &store(),
            ParseOptions::default()
        )
        .is_err());
        assert!(parse_rule_text(
            "certain Killing : E1.SubEvent == E2.SubEvent",
            &store(),
            ParseOptions::default()
        )
        .is_err());
    }

    #[test]
    fn cross_type_rules_parse_disabled_by_default() {
        let rs = parse_rule_text(
            "certain Killing/Dying : E1.Victim == E2.Protagonist",
            &store(),
            ParseOptions::default(),
        )
        .unwrap();
        let rule = &rs.rules()[0];
        assert!(rule.is_cross_type());
        assert!(!rule.enabled);
        assert_eq!(rule.rule_id, "killing-dying-certain-1");

        let enabled = parse_rule_text(
            "certain Killing/Dying : E1.Victim == E2.Protagonist",
            &store(),
            ParseOptions {
                enable_cross_type: true,
                ..ParseOptions::default()
            },
        )
        .unwrap();
        assert!(enabled.rules()[0].enabled);
    }

    #[test]
    fn unknown_guard_type_rejected() {
        match parse_rule_text(
            "certain Exploding : E1.Time == E2.Time",
            &store(),
            ParseOptions::default(),
        ) {
            Err(RuleError::UnknownEventType { type_name, .. }) => {
                assert_eq!(type_name, "Exploding")
            }
            other => panic!("expected UnknownEventType, got {other:?}"),
        }
    }

    #[test]
    fn shipped_rule_counts_match_the_transcription() {
        let rs = default_rules(&store(), ParseOptions::default()).unwrap();
        let report = rule_count_report(&rs);
        assert_eq!(report.counts("Arresting"), (1, 3));
        assert_eq!(report.counts("Killing"), (2, 5));
        assert_eq!(report.counts("Dying"), (1, 5));
        assert_eq!(report.counts("Charging"), (1, 3));
        assert_eq!(report.counts("Shooting"), (2, 4));
        assert_eq!(report.counts("Attacking"), (2, 4));
        assert_eq!(report.cross_type, 1);
    }

    #[test]
    fn empty_rule_set_reports_zeros() {
        let rs = parse_rule_text("", &store(), ParseOptions::default()).unwrap();
        let report = rule_count_report(&rs);
        assert!(report.per_type.is_empty());
        assert_eq!(report.counts("Killing"), (0, 0));
    }

    #[test]
    fn pretty_print_parse_is_a_fixpoint() {
        let opts = ParseOptions::default();
        let rs = default_rules(&store(), opts).unwrap();
        let printed = rs.pretty();
        let reparsed = parse_rule_text(&printed, &store(), opts).unwrap();
        assert_eq!(printed, reparsed.pretty());
        // Same rules modulo source line numbers.
        assert_eq!(rs.rules().len(), reparsed.rules().len());
        for (a, b) in rs.rules().iter().zip(reparsed.rules()) {
            assert_eq!(a.rule_id, b.rule_id);
            assert_eq!(a.strength, b.strength);
            assert_eq!(a.conditions, b.conditions);
            assert_eq!(a.enabled, b.enabled);
        }
    }

    #[test]
    fn shipped_dying_killer_rules_warn() {
        let rs = default_rules(&store(), ParseOptions::default()).unwrap();
        assert!(rs
            .warnings()
            .iter()
            .any(|w| w.contains("Killer") && w.contains("Dying")));
    }
}
