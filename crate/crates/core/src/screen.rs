//! Local anti-profiling screen applied to every query before any model or
//! index call.
//!
//! Queries asking the system to identify or infer protected personal
//! attributes (race, ethnicity, nationality, religion, socioeconomic status,
//! political affiliation, immigration status, sexual orientation) are
//! refused. Matching is on word tokens, never raw substrings, so "trace"
//! does not hit "race" and "illegal crossing" stays allowed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenVerdict {
    pub allowed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl ScreenVerdict {
    pub fn allow() -> Self {
        ScreenVerdict { allowed: true, reason: None }
    }

    pub fn refuse(reason: impl Into<String>) -> Self {
        ScreenVerdict { allowed: false, reason: Some(reason.into()) }
    }
}

/// Protected attribute and the token sequences that request it. Any match
/// refuses the query.
const STRONG_TERMS: &[(&str, &[&[&str]])] = &[
    ("race", &[&["race"], &["races"], &["racial"], &["racially"], &["skin", "color"], &["skin", "colour"], &["skin", "tone"]]),
    ("ethnicity", &[&["ethnicity"], &["ethnic"], &["ethnically"], &["ancestry"]]),
    ("nationality", &[&["nationality"], &["nationalities"], &["national", "origin"], &["citizenship"], &["foreigner"], &["foreigners"], &["foreign", "born"]]),
    ("religion", &[&["religion"], &["religious"], &["religions"], &["muslim"], &["christian"], &["jewish"], &["jew"], &["hindu"], &["buddhist"], &["sikh"], &["atheist"], &["hijab"], &["turban"]]),
    ("socioeconomic status", &[&["socioeconomic"], &["socio", "economic"], &["homeless"], &["low", "income"], &["high", "income"], &["income"], &["wealth"], &["wealthy"], &["social", "class"]]),
    ("political affiliation", &[&["political"], &["politics"], &["democrat"], &["democrats"], &["republican"], &["republicans"], &["liberal"], &["conservative"], &["leftist"], &["partisan"]]),
    ("immigration status", &[&["immigrant"], &["immigrants"], &["immigration"], &["undocumented"], &["illegal", "alien"], &["illegal", "aliens"], &["illegal", "immigrant"], &["migrant"], &["migrants"], &["refugee"], &["refugees"], &["visa", "status"]]),
    ("sexual orientation", &[&["sexual", "orientation"], &["gay"], &["lesbian"], &["bisexual"], &["homosexual"], &["heterosexual"], &["queer"], &["lgbt"], &["lgbtq"]]),
];

/// Words that request socioeconomic judgements only when aimed at a person
/// ("does the person look poor?"); "poor visibility" stays allowed.
const PERSON_JUDGEMENT_TERMS: &[&str] = &["poor", "rich", "affluent", "impoverished", "privileged"];

const PERSON_WORDS: &[&str] = &[
    "person", "people", "pedestrian", "pedestrians", "driver", "drivers", "man", "men", "woman", "women",
    "cyclist", "cyclists", "individual", "individuals", "he", "she", "they", "someone", "child", "children",
    "family", "families", "passenger", "passengers", "guy", "girl", "boy",
];

/// Nouns that make an adjacent judgement word describe the scene rather than
/// a person.
const SCENE_NOUNS: &[&str] = &[
    "visibility", "lighting", "light", "condition", "conditions", "road", "roads", "surface", "pavement",
    "weather", "compliance", "yielding", "judgment", "judgement", "decision", "quality", "signage",
    "markings", "maintenance", "view", "sight", "performance", "timing", "behavior", "behaviour",
];

/// Deterministic, denylist-based verdict for a query.
pub fn screen_query(q: &str) -> ScreenVerdict {
    let tokens: Vec<String> = tokenize(q).into_iter().map(|t| t.text).collect();
    if tokens.is_empty() {
        return ScreenVerdict::refuse("empty query");
    }
    for (attribute, patterns) in STRONG_TERMS {
        if patterns.iter().any(|p| contains_seq(&tokens, p)) {
            return refusal(attribute);
        }
    }
    let mentions_person = tokens.iter().any(|t| PERSON_WORDS.contains(&t.as_str()));
    if mentions_person {
        for (i, t) in tokens.iter().enumerate() {
            if PERSON_JUDGEMENT_TERMS.contains(&t.as_str()) {
                let next = tokens.get(i + 1).map(String::as_str);
                let prev = i.checked_sub(1).map(|p| tokens[p].as_str());
                let scene = |w: Option<&str>| w.is_some_and(|n| SCENE_NOUNS.contains(&n));
                if !scene(next) && !scene(prev) {
                    return refusal("socioeconomic status");
                }
            }
        }
    }
    ScreenVerdict::allow()
}

fn refusal(attribute: &str) -> ScreenVerdict {
    ScreenVerdict::refuse(format!(
        "the system does not identify or infer protected personal attributes ({attribute})"
    ))
}

fn contains_seq(tokens: &[String], pattern: &[&str]) -> bool {
    tokens.windows(pattern.len()).any(|w| w.iter().zip(pattern).all(|(a, b)| a == b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_examples() {
        let v = screen_query("What race is the pedestrian?");
        assert!(!v.allowed);
        assert!(v.reason.unwrap().contains("race"));
        assert!(screen_query("Are there any cyclists?").allowed);
        assert!(!screen_query("Is the driver an immigrant?").allowed);
        assert!(!screen_query("Does the person look poor?").allowed);
    }

    #[test]
    fn empty_query_refused() {
        assert_eq!(screen_query(""), ScreenVerdict::refuse("empty query"));
        assert_eq!(screen_query("  ?! "), ScreenVerdict::refuse("empty query"));
    }

    #[test]
    fn traffic_vocabulary_not_caught() {
        for q in [
            "Show illegal crossing events at the crosswalk",
            "Trace the trajectory of the white sedan",
            "Is visibility poor for pedestrians at night?",
            "Which drivers are racing through the red light?",
            "Does the bus driver yield to the pedestrian?",
        ] {
            assert!(screen_query(q).allowed, "{q}");
        }
    }

    #[test]
    fn verdict_is_deterministic() {
        let q = "Which religion does the cyclist follow?";
        assert_eq!(screen_query(q), screen_query(q));
        assert!(!screen_query(q).allowed);
    }
}
