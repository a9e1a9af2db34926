//! Deterministic corpus synthesis for the benchmarks: collision-rich types,
//! participants, times, and places so that rules actually fire, plus
//! subevent chains so the fixpoint needs more than one round.

use std::collections::{BTreeMap, BTreeSet};

use ontocoref_core::corpus::Corpus;
use ontocoref_core::model::{
    normalize_entity, EventDescription, MentionId, Participant, PlaceSpec, TimeSpec,
};

const TYPES: &[&str] = &[
    "Killing",
    "Dying",
    "Shooting",
    "Arresting",
    "Charging",
    "Attacking",
];
const ROLE_OF_TYPE: &[(&str, &str)] = &[
    ("Killing", "Victim"),
    ("Dying", "Protagonist"),
    ("Shooting", "Agent"),
    ("Arresting", "Suspect"),
    ("Charging", "Accused"),
    ("Attacking", "Victim"),
];

pub fn synthetic_corpus(n: usize) -> Corpus {
    let mut mentions = Vec::with_capacity(n);
    for i in 0..n {
        let event_type = TYPES[i % TYPES.len()];
        let role = ROLE_OF_TYPE
            .iter()
            .find(|(t, _)| *t == event_type)
            .map(|(_, r)| *r)
            .expect("role declared for every synthesized type");
        let entity = normalize_entity(&format!("ex:p{}", i % 7)).unwrap();
        let place = PlaceSpec::new(
            normalize_entity(&format!("ex:city{}", i % 4)).unwrap(),
            vec![normalize_entity("ex:land").unwrap()],
        )
        .unwrap();
        let time = TimeSpec::parse(&format!("2008-01-{:02}", 1 + i % 5)).unwrap();
        let mut subevents = BTreeSet::new();
        if i % 3 == 0 && i + 1 < n {
            subevents.insert(MentionId::new(format!("m{:04}", i + 1)));
        }
        mentions.push(EventDescription {
            id: MentionId::new(format!("m{i:04}")),
            event_type: event_type.to_string(),
            participants: vec![Participant {
                role: role.to_string(),
                entity,
            }],
            time: Some(time),
            place: Some(place),
            subevents,
            lemma: format!("lemma{}", i % 9),
            doc_id: format!("d{}", i % 5),
            topic_id: format!("t{}", i % 3),
        });
    }
    Corpus::from_mentions(mentions, BTreeMap::new()).expect("synthesized corpus is valid")
}
