//! Deterministic stand-ins for the five model roles.
//!
//! Every mock is a pure function of its inputs, so pipelines built on them
//! produce byte-identical output across runs and hosts. They are crude on
//! purpose but keep the downstream stages meaningful: the embedder maps
//! lexical overlap to cosine similarity, the extractor recognizes taxonomy
//! vocabulary, and the narrator marks follow-up context.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use crate::gateway::{
    Captioner, DomainContext, Embedder, Enricher, Extractor, GatewayError, NarrationRequest, Narrator, PromptTemplate,
    RawCoref, RawExtraction, RawMention, RawRelation,
};
use crate::graph::{is_dynamic, Span};
use crate::segmentation::{ClipWindow, Millis};
use crate::taxonomy::Taxonomy;
use crate::text::{stem, stems, tokenize, Token};
use crate::vector::Embedding;

pub const DEFAULT_MOCK_DIM: usize = 768;

/// Marker that opens the class trailer appended by [`MockNarrator`].
pub const TAXONOMY_TRAILER: &str = "\n[taxonomy: ";

fn digest(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

fn pick<'a>(options: &[&'a str], seed: &[u8; 32], byte: usize) -> &'a str {
    options[seed[byte] as usize % options.len()]
}

const COLORS: &[&str] = &["white", "dark", "silver", "red", "black", "blue", "gray", "yellow"];

const SCENES: &[&str] = &[
    "At 0:03 a {color} sedan approaches the crosswalk while a pedestrian waits on the sidewalk. Between 0:08 and 0:14 the sedan decelerates and yields to the pedestrian, who completes a legal crossing. The clip concludes around 0:28 as the traffic light turns green.",
    "At 0:02 a man on a bike enters the crosswalk as a {color} SUV performs a turning movement. The SUV forces the man on the bike to swerve out of the crosswalk, which creates a near-miss scenario at 0:09. Both continue along their trajectory without collision.",
    "A coach bus occupies the intersection at 0:05 while completing a slow turning movement. Two pedestrians exploit the stationary state of the bus to perform an illegal crossing against the red light around 0:12.",
    "Between 0:00 and 0:20 a {color} truck stays parked near the catch basin while pedestrians walk along the sidewalk. No conflict is observed in this segment.",
    "At 0:06 a {color} motorcycle accelerates through the intersection with aggressive behavior, approaching a group of pedestrians with crossing intention. The driver does not yield, creating a risk at the crosswalk.",
    "At 0:04 a pedestrian shows gap rejection at the curb as a {color} taxi approaches. At 0:11 the pedestrian accepts the next gap and crosses at the crosswalk while the taxi waits.",
];

/// Templated digest keyed by `(video_id, clip_index)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockCaptioner;

impl MockCaptioner {
    pub fn describe(video_id: &str, clip_index: u32) -> String {
        let seed = digest(&[b"caption", video_id.as_bytes(), &clip_index.to_le_bytes()]);
        let scene = pick(SCENES, &seed, 0).replace("{color}", pick(COLORS, &seed, 1));
        format!("Clip {clip_index} of {video_id}. {scene}")
    }
}

impl Captioner for MockCaptioner {
    fn caption(&self, clip: &ClipWindow, _source_uri: &str, _prompt: &PromptTemplate) -> Result<String, GatewayError> {
        Ok(Self::describe(&clip.video_id, clip.index))
    }
}

/// Bag of stemmed content tokens hashed into `dim` buckets, normalized.
#[derive(Debug, Clone, Copy)]
pub struct MockEmbedder {
    pub dim: usize,
}

impl Default for MockEmbedder {
    fn default() -> Self {
        MockEmbedder { dim: DEFAULT_MOCK_DIM }
    }
}

impl MockEmbedder {
    pub fn bucket(&self, stemmed: &str) -> usize {
        let d = digest(&[b"embed", stemmed.as_bytes()]);
        (u64::from_le_bytes(d[..8].try_into().expect("8 bytes")) % self.dim as u64) as usize
    }

    /// Stems that feed the bag; falls back to stop words for texts that
    /// have nothing else.
    pub fn features(text: &str) -> Vec<String> {
        let s = stems(text);
        if !s.is_empty() {
            return s;
        }
        tokenize(text).into_iter().map(|t| stem(&t.text)).collect()
    }
}

impl Embedder for MockEmbedder {
    fn embed(&self, text: &str) -> Result<Embedding, GatewayError> {
        let features = Self::features(text);
        if features.is_empty() {
            return Err(GatewayError::EmptyText);
        }
        let mut v = alloc::vec![0.0f64; self.dim];
        for f in &features {
            v[self.bucket(f)] += 1.0;
        }
        Embedding::normalize(&v).map_err(|_| GatewayError::EmptyText)
    }
}

struct Expansion {
    triggers: &'static [&'static str],
    gate: &'static str,
    terms: &'static str,
}

const EXPANSIONS: &[Expansion] = &[
    Expansion { triggers: &["car", "vehicle", "suv", "sedan", "truck", "bus", "buse", "motorcycle", "van", "taxi"], gate: "motorized vehicle", terms: "motorized vehicle" },
    Expansion { triggers: &["cyclist", "bike", "bicycle", "bicyclist", "biker"], gate: "pedestrian", terms: "cyclist, man on a bike" },
    Expansion { triggers: &["pedestrian", "walker", "person", "people", "woman", "child"], gate: "pedestrian", terms: "pedestrian" },
    Expansion { triggers: &["driver"], gate: "driver", terms: "driver" },
    Expansion { triggers: &["cross", "jaywalk", "jaywalker"], gate: "legal crossing", terms: "crossing intention, legal crossing, illegal crossing" },
    Expansion { triggers: &["turn"], gate: "turning movement", terms: "turning intention, turning movement" },
    Expansion { triggers: &["conflict", "collision", "collide", "crash", "danger", "dangerou", "risk", "threat"], gate: "conflict", terms: "conflict, risk, threat" },
    Expansion { triggers: &["yield", "gap"], gate: "gap acceptance", terms: "gap acceptance, gap rejection" },
    Expansion { triggers: &["speed", "accelerate", "accelerat", "fast"], gate: "acceleration", terms: "acceleration" },
    Expansion { triggers: &["slow", "brake", "decelerate", "decelerat"], gate: "deceleration", terms: "deceleration" },
    Expansion { triggers: &["stop", "park", "wait", "stationary"], gate: "stationary state", terms: "stationary state" },
    Expansion { triggers: &["aggressive", "aggression", "reckles"], gate: "aggressive behavior", terms: "aggressive behavior" },
    Expansion { triggers: &["crosswalk", "zebra"], gate: "crosswalk", terms: "crosswalk" },
    Expansion { triggers: &["sidewalk", "curb"], gate: "sidewalk", terms: "sidewalk" },
    Expansion { triggers: &["light", "signal"], gate: "traffic light", terms: "traffic light" },
    Expansion { triggers: &["sign"], gate: "traffic sign", terms: "traffic sign" },
    Expansion { triggers: &["pole"], gate: "pole", terms: "pole" },
    Expansion { triggers: &["basin", "drain"], gate: "catch basin", terms: "catch basin" },
];

/// Appends taxonomy terms whose lexical stems occur in the query. Nothing
/// is appended for concepts the query does not mention.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockEnricher;

impl MockEnricher {
    pub fn expansions(query: &str, ctx: &DomainContext) -> Vec<&'static str> {
        let q: BTreeSet<String> = stems(query).into_iter().collect();
        EXPANSIONS
            .iter()
            .filter(|e| ctx.terminology.iter().any(|t| t == e.gate))
            .filter(|e| e.triggers.iter().any(|t| q.contains(*t)))
            .map(|e| e.terms)
            .collect()
    }
}

impl Enricher for MockEnricher {
    fn enrich(&self, query: &str, ctx: &DomainContext, _context_type: &str, _prompt: &PromptTemplate) -> Result<String, GatewayError> {
        let exp = Self::expansions(query, ctx);
        if exp.is_empty() {
            return Ok(query.to_string());
        }
        Ok(format!("{query}; related terms: {}", exp.join("; ")))
    }
}

/// Assembles an answer from the evidence clip's description.
///
/// Layout: an optional follow-up marker naming the previous clip, a clip
/// header, the description sentences that share stems with the question
/// (all of them when none do), and a trailer listing the taxonomy classes
/// recognized in the body.
#[derive(Debug, Clone)]
pub struct MockNarrator {
    lexicon: Lexicon,
}

impl MockNarrator {
    pub fn new(taxonomy: Taxonomy) -> Self {
        MockNarrator { lexicon: Lexicon::new(taxonomy) }
    }

    /// Marker identifying the previous clip in follow-up answers.
    pub fn prior_marker(prev: &crate::vector::ClipKey) -> String {
        format!("(following up on clip {prev}) ")
    }
}

impl Narrator for MockNarrator {
    fn narrate(&self, req: &NarrationRequest<'_>) -> Result<String, GatewayError> {
        let d = &req.hit.descriptor;
        let mut body = String::new();
        if let Some(prev) = req.conversation.last() {
            body.push_str(&Self::prior_marker(&prev.clip));
        }
        body.push_str(&format!(
            "Evidence from clip {}#{} ({} to {}): ",
            d.video_id,
            d.clip_index,
            Millis(d.start.0).clock(),
            Millis(d.end.0).clock()
        ));
        let q: BTreeSet<String> = stems(req.query).into_iter().collect();
        let sentences = split_sentences(&d.description);
        let relevant: Vec<&str> = sentences
            .iter()
            .copied()
            .filter(|s| !s.starts_with("Clip ") && stems(s).iter().any(|t| q.contains(t)))
            .collect();
        let chosen = if relevant.is_empty() { sentences } else { relevant };
        body.push_str(&chosen.join(" "));

        let classes: BTreeSet<String> = self.lexicon.scan(&body).into_iter().map(|m| m.class_id).collect();
        if !classes.is_empty() {
            body.push_str(TAXONOMY_TRAILER);
            body.push_str(&classes.into_iter().collect::<Vec<_>>().join(", "));
            body.push(']');
        }
        Ok(body)
    }
}

/// Rule-based extractor over a taxonomy lexicon.
#[derive(Debug, Clone)]
pub struct MockExtractor {
    lexicon: Lexicon,
}

impl MockExtractor {
    pub fn new(taxonomy: Taxonomy) -> Self {
        MockExtractor { lexicon: Lexicon::new(taxonomy) }
    }
}

impl Extractor for MockExtractor {
    fn extract(&self, answer: &str, _question: &str, _prompt: &PromptTemplate) -> Result<RawExtraction, GatewayError> {
        let body_end = answer.find(TAXONOMY_TRAILER).unwrap_or(answer.len());
        let body = &answer[..body_end];
        let found = self.lexicon.scan(body);

        // one instance per phrase
        let mut seen = BTreeSet::new();
        let mentions: Vec<LexMatch> = found.into_iter().filter(|m| seen.insert(m.surface.to_lowercase())).collect();

        let mut relations = Vec::new();
        let dynamic = |m: &LexMatch| is_dynamic(&self.lexicon.taxonomy, &m.class_id);
        for i in 1..mentions.len() {
            let (a, b) = (&mentions[i - 1], &mentions[i]);
            let gap = &body[a.span.end..b.span.start];
            if crosses_sentence(gap) {
                continue;
            }
            let Some(label) = relation_cue(gap, dynamic(a) && dynamic(b)) else { continue };
            // road-user verbs take the nearest road user of the sentence as subject
            let subject = if label == "causes" || dynamic(a) {
                Some(a)
            } else {
                mentions[..i - 1].iter().rev().take_while(|m| !crosses_sentence(&body[m.span.end..b.span.start])).find(|m| dynamic(m))
            };
            if let Some(subject) = subject {
                relations.push(RawRelation { subject: subject.surface.clone(), label: label.to_string(), object: b.surface.clone() });
            }
        }

        // a bare generic vehicle noun refers back to the last vehicle
        let mut coref = Vec::new();
        for (i, m) in mentions.iter().enumerate() {
            if m.class_id == "motorized_vehicle" && GENERIC_VEHICLE.contains(&m.surface.to_lowercase().as_str()) {
                if let Some(prev) = mentions[..i].iter().rev().find(|p| p.class_id == "motorized_vehicle") {
                    coref.push(RawCoref { a: prev.surface.clone(), b: m.surface.clone(), score: 0.9 });
                }
            }
        }

        Ok(RawExtraction {
            mentions: mentions
                .into_iter()
                .map(|m| RawMention { surface: m.surface, class_id: m.class_id, attributes: m.attributes, span: Some(m.span) })
                .collect(),
            relations,
            coref,
        })
    }
}

const GENERIC_VEHICLE: &[&str] = &["vehicle", "car"];

fn crosses_sentence(gap: &str) -> bool {
    gap.contains(". ") || gap.contains('!') || gap.contains('?') || gap.contains(';') || gap.contains('\n')
}

fn relation_cue(gap: &str, both_dynamic: bool) -> Option<&'static str> {
    let s = stems(gap);
    let has = |cues: &[&str]| s.iter().any(|t| cues.iter().any(|c| t.starts_with(c)));
    if has(&["yield"]) {
        Some("yields-to")
    } else if has(&["approach"]) {
        Some("approaches")
    } else if has(&["exploit"]) {
        Some("exploits")
    } else if has(&["block", "occup"]) {
        Some("blocks")
    } else if has(&["conflict", "collid"]) {
        Some("conflicts-with")
    } else if has(&["forc", "caus", "creat", "lead", "trigger", "result"]) {
        Some("causes")
    } else if both_dynamic && (s.is_empty() || has(&["involv", "with", "and", "as", "while"])) {
        Some("involves")
    } else {
        None
    }
}

/// Splits after `.`, `!` or `?` followed by whitespace.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    for i in 0..bytes.len() {
        if matches!(bytes[i], b'.' | b'!' | b'?') && bytes.get(i + 1).is_none_or(|b| b.is_ascii_whitespace()) {
            let s = text[start..=i].trim();
            if !s.is_empty() {
                out.push(s);
            }
            start = i + 1;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

const VEHICLE_ADJECTIVES: &[&str] = &[
    "white", "dark", "black", "red", "silver", "blue", "gray", "grey", "green", "yellow", "orange", "large", "small",
];

const VEHICLE_TYPES: &[&str] = &["car", "suv", "sedan", "truck", "bus", "motorcycle", "van", "taxi"];

/// Phrase, as lowercase tokens, and the class it denotes.
const PHRASES: &[(&str, &str)] = &[
    ("motorized vehicle", "motorized_vehicle"),
    ("motorized vehicles", "motorized_vehicle"),
    ("coach bus", "motorized_vehicle"),
    ("vehicle", "motorized_vehicle"),
    ("vehicles", "motorized_vehicle"),
    ("car", "motorized_vehicle"),
    ("cars", "motorized_vehicle"),
    ("suv", "motorized_vehicle"),
    ("suvs", "motorized_vehicle"),
    ("sedan", "motorized_vehicle"),
    ("sedans", "motorized_vehicle"),
    ("truck", "motorized_vehicle"),
    ("trucks", "motorized_vehicle"),
    ("bus", "motorized_vehicle"),
    ("buses", "motorized_vehicle"),
    ("motorcycle", "motorized_vehicle"),
    ("van", "motorized_vehicle"),
    ("taxi", "motorized_vehicle"),
    ("man on a bike", "pedestrian"),
    ("man on the bike", "pedestrian"),
    ("woman on a bike", "pedestrian"),
    ("two pedestrians on bicycles", "pedestrian"),
    ("pedestrians on bicycles", "pedestrian"),
    ("group of pedestrians", "pedestrian"),
    ("woman pushing a stroller", "pedestrian"),
    ("pedestrian", "pedestrian"),
    ("pedestrians", "pedestrian"),
    ("two pedestrians", "pedestrian"),
    ("cyclist", "pedestrian"),
    ("cyclists", "pedestrian"),
    ("bus driver", "driver"),
    ("driver", "driver"),
    ("drivers", "driver"),
    ("trajectory", "trajectory"),
    ("trajectories", "trajectory"),
    ("swerve", "trajectory"),
    ("acceleration", "acceleration"),
    ("accelerates", "acceleration"),
    ("deceleration", "deceleration"),
    ("decelerates", "deceleration"),
    ("slows down", "deceleration"),
    ("stationary state", "stationary_state"),
    ("parked", "stationary_state"),
    ("turning intention", "turning_intention"),
    ("turning movement", "turning_movement"),
    ("aggressive behavior", "aggressive_behavior"),
    ("crossing intention", "crossing_intention"),
    ("legal crossing", "legal_crossing"),
    ("illegal crossing", "illegal_crossing"),
    ("jaywalking", "illegal_crossing"),
    ("gap acceptance", "gap_acceptance"),
    ("accepts the next gap", "gap_acceptance"),
    ("accept the gap", "gap_acceptance"),
    ("gap rejection", "gap_rejection"),
    ("threat", "threat"),
    ("risk", "risk"),
    ("conflict", "conflict"),
    ("near-miss scenario", "conflict"),
    ("near-miss", "conflict"),
    ("near miss", "conflict"),
    ("crosswalk", "crosswalk"),
    ("marked crosswalk", "crosswalk"),
    ("sidewalk", "sidewalk"),
    ("curb", "sidewalk"),
    ("traffic light", "traffic_light"),
    ("red light", "traffic_light"),
    ("traffic sign", "traffic_sign"),
    ("stop sign", "traffic_sign"),
    ("pole", "pole"),
    ("catch basin", "catch_basin"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct LexMatch {
    pub surface: String,
    pub class_id: String,
    pub attributes: alloc::collections::BTreeMap<String, String>,
    pub span: Span,
}

/// Longest-match phrase scanner restricted to classes in the taxonomy.
#[derive(Debug, Clone)]
pub struct Lexicon {
    taxonomy: Taxonomy,
    phrases: Vec<(Vec<String>, String)>,
}

impl Lexicon {
    pub fn new(taxonomy: Taxonomy) -> Self {
        let mut phrases: Vec<(Vec<String>, String)> = PHRASES
            .iter()
            .filter_map(|(p, c)| {
                let class = taxonomy.resolve_class(c).ok()?;
                Some((tokenize(p).into_iter().map(|t| t.text).collect(), class.id.clone()))
            })
            .collect();
        // class ids themselves ("catch basin") are always recognized
        for c in taxonomy.classes() {
            let toks: Vec<String> = tokenize(&c.display_name()).into_iter().map(|t| t.text).collect();
            if !phrases.iter().any(|(p, _)| *p == toks) {
                phrases.push((toks, c.id.clone()));
            }
        }
        phrases.sort_by_key(|p| core::cmp::Reverse(p.0.len()));
        Lexicon { taxonomy, phrases }
    }

    pub fn scan(&self, text: &str) -> Vec<LexMatch> {
        let tokens: Vec<Token> = tokenize(text);
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let hit = self.phrases.iter().find(|(p, _)| {
                i + p.len() <= tokens.len() && p.iter().zip(&tokens[i..]).all(|(a, b)| *a == b.text)
            });
            let Some((phrase, class)) = hit else {
                i += 1;
                continue;
            };
            let mut first = i;
            let last = i + phrase.len() - 1;
            let mut attributes = alloc::collections::BTreeMap::new();
            if class == "motorized_vehicle" {
                // absorb preceding adjectives: "dark SUV"
                while first > 0
                    && VEHICLE_ADJECTIVES.contains(&tokens[first - 1].text.as_str())
                    && text[tokens[first - 1].end..tokens[first].start].chars().all(|c| c == ' ')
                {
                    first -= 1;
                    if COLORS.contains(&tokens[first].text.as_str()) || tokens[first].text == "grey" || tokens[first].text == "green" || tokens[first].text == "orange" {
                        attributes.insert("color".to_string(), tokens[first].text.clone());
                    }
                }
                let noun = stem(&tokens[last].text);
                if VEHICLE_TYPES.contains(&noun.as_str()) || noun == "buse" {
                    let t = if noun == "buse" { "bus".to_string() } else { noun };
                    attributes.insert("type".to_string(), t);
                }
            }
            let span = Span::new(tokens[first].start, tokens[last].end);
            out.push(LexMatch { surface: text[span.start..span.end].to_string(), class_id: class.clone(), attributes, span });
            i = last + 1;
        }
        out
    }
}
