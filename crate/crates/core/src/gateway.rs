//! Uniform access to the five model roles behind interchangeable backends.
//!
//! Each role is a trait; a [`Gateway`] holds one implementation per role and
//! layers the role-independent contracts on top: local query screening
//! before enrichment, evidence checks before narration, and strict-taxonomy
//! validation of extractor output.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{CorefScores, EntityMention, Span};
use crate::prompts;
use crate::screen::{screen_query, ScreenVerdict};
use crate::segmentation::ClipWindow;
use crate::taxonomy::Taxonomy;
use crate::text::normalize_class_token;
use crate::vector::{ClipKey, Embedding, RankedHit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Captioner,
    Embedder,
    Enricher,
    Narrator,
    Extractor,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::Captioner, Role::Embedder, Role::Enricher, Role::Narrator, Role::Extractor];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Captioner => "captioner",
            Role::Embedder => "embedder",
            Role::Enricher => "enricher",
            Role::Narrator => "narrator",
            Role::Extractor => "extractor",
        }
    }

    pub fn default_temperature(self) -> f64 {
        match self {
            Role::Enricher => 0.05,
            Role::Narrator => 0.3,
            _ => 0.0,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub role: Role,
    #[serde(default)]
    pub mode: BackendMode,
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the credential.
    #[serde(default)]
    pub credentials_ref: Option<String>,
    pub temperature: f64,
}

impl BackendConfig {
    pub fn mock(role: Role) -> Self {
        BackendConfig { role, mode: BackendMode::Mock, endpoint: None, credentials_ref: None, temperature: role.default_temperature() }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.mode == BackendMode::Remote && self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
            return Err(GatewayError::Config(format!("{} backend in remote mode needs an endpoint", self.role)));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(GatewayError::Config(format!("{} temperature must be non-negative", self.role)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("{role} transport failure after {attempts} attempt(s): {message}")]
    Transport { role: Role, attempts: u32, message: String },
    #[error("{role} backend rejected the request (status {status}): {message}")]
    Rejected { role: Role, status: u16, message: String },
    #[error("refused: {reason}")]
    Refused { reason: String },
    #[error("empty text")]
    EmptyText,
    #[error("evidence missing")]
    EvidenceMissing,
    #[error("embedding dimension conflict: expected {expected}, got {actual}")]
    DimensionConflict { expected: usize, actual: usize },
    #[error("{role} returned malformed output: {message}")]
    Malformed { role: Role, message: String },
    #[error("backend configuration: {0}")]
    Config(String),
}

/// A prompt body with `{name}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub role: Role,
    pub body: String,
}

impl PromptTemplate {
    pub fn new(role: Role, body: impl Into<String>) -> Result<Self, GatewayError> {
        let t = PromptTemplate { role, body: body.into() };
        let present = t.placeholders();
        for needed in Self::required_placeholders(role) {
            if !present.contains(*needed) {
                return Err(GatewayError::Config(format!("{role} prompt lacks placeholder {{{needed}}}")));
            }
        }
        Ok(t)
    }

    /// Placeholders the pipeline fills for each role.
    pub fn required_placeholders(role: Role) -> &'static [&'static str] {
        match role {
            Role::Captioner | Role::Embedder => &[],
            Role::Enricher => &["context_type", "query"],
            Role::Narrator => &["user_question", "context", "conversation_context"],
            Role::Extractor => &["question"],
        }
    }

    pub fn default_for(role: Role) -> Option<PromptTemplate> {
        let body = match role {
            Role::Captioner => prompts::CLIP_DESCRIBER,
            Role::Enricher => prompts::QUERY_ENRICHMENT,
            Role::Narrator => prompts::CLIP_ANALYZER,
            Role::Extractor => prompts::ENTITY_EXTRACTOR,
            Role::Embedder => return None,
        };
        Some(PromptTemplate { role, body: body.to_string() })
    }

    /// Names of the `{identifier}` placeholders in the body.
    pub fn placeholders(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let bytes = self.body.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i] == b'{' {
                let rest = &self.body[i + 1..];
                if let Some(close) = rest.find('}') {
                    let name = &rest[..close];
                    if !name.is_empty() && name.bytes().all(|b| b.is_ascii_lowercase() || b == b'_') {
                        out.insert(name.to_string());
                        i += close + 2;
                        continue;
                    }
                }
            }
            i += 1;
        }
        out
    }

    /// Substitutes every `{name}` for which a value is given.
    pub fn render(&self, values: &[(&str, &str)]) -> String {
        let mut out = self.body.clone();
        for (name, value) in values {
            out = out.replace(&format!("{{{name}}}"), value);
        }
        out
    }
}

/// Taxonomy-derived hints handed to the enricher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainContext {
    pub terminology: Vec<String>,
    pub event_hints: String,
}

impl DomainContext {
    pub fn from_taxonomy(taxonomy: &Taxonomy) -> Self {
        DomainContext {
            terminology: taxonomy.terminology(),
            event_hints: String::from(
                "urban intersection footage: vehicle and pedestrian interactions, yielding, crossings, conflicts and near misses",
            ),
        }
    }
}

/// One prior exchange passed to the narrator for follow-up questions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationEntry {
    pub query: String,
    pub clip: ClipKey,
    pub narrative: String,
}

/// Renders entries as the `{conversation_context}` block.
pub fn render_conversation(entries: &[ConversationEntry]) -> String {
    if entries.is_empty() {
        return String::from("(none)");
    }
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!("Q: {}\nClip: {}\nA: {}\n", e.query, e.clip, e.narrative));
    }
    out
}

pub struct NarrationRequest<'a> {
    pub query: &'a str,
    pub hit: &'a RankedHit,
    pub conversation: &'a [ConversationEntry],
    pub prompt: &'a PromptTemplate,
}

/// Extractor output before taxonomy validation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawExtraction {
    #[serde(default)]
    pub mentions: Vec<RawMention>,
    #[serde(default)]
    pub relations: Vec<RawRelation>,
    #[serde(default)]
    pub coref: Vec<RawCoref>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawMention {
    pub surface: String,
    #[serde(rename = "class")]
    pub class_id: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    /// Byte range into the answer; located by surface search when absent.
    #[serde(default)]
    pub span: Option<Span>,
}

/// Relation between two mentions, referenced by surface text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRelation {
    pub subject: String,
    pub label: String,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCoref {
    pub a: String,
    pub b: String,
    pub score: f64,
}

/// Relation between validated mentions, by index into `Extraction::mentions`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionRelation {
    pub subject: usize,
    pub label: String,
    pub object: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction {
    pub mentions: Vec<EntityMention>,
    pub relations: Vec<MentionRelation>,
    pub coref: CorefScores,
    /// Mentions discarded for an unknown class, a bad span or a duplicate.
    pub dropped_mentions: usize,
    /// Relations whose endpoints were dropped or never extracted.
    pub dropped_relations: usize,
}

pub trait Captioner: Send + Sync {
    fn caption(&self, clip: &ClipWindow, source_uri: &str, prompt: &PromptTemplate) -> Result<String, GatewayError>;
}

pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Embedding, GatewayError>;
}

pub trait Enricher: Send + Sync {
    fn enrich(&self, query: &str, ctx: &DomainContext, context_type: &str, prompt: &PromptTemplate) -> Result<String, GatewayError>;
}

pub trait Narrator: Send + Sync {
    fn narrate(&self, req: &NarrationRequest<'_>) -> Result<String, GatewayError>;
}

pub trait Extractor: Send + Sync {
    fn extract(&self, answer: &str, question: &str, prompt: &PromptTemplate) -> Result<RawExtraction, GatewayError>;
}

/// Prompt set, one per language-model role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub captioner: PromptTemplate,
    pub enricher: PromptTemplate,
    pub narrator: PromptTemplate,
    pub extractor: PromptTemplate,
}

impl Default for PromptSet {
    fn default() -> Self {
        let get = |r| PromptTemplate::default_for(r).expect("every text role has a default prompt");
        PromptSet {
            captioner: get(Role::Captioner),
            enricher: get(Role::Enricher),
            narrator: get(Role::Narrator),
            extractor: get(Role::Extractor),
        }
    }
}

pub struct Gateway {
    pub captioner: Box<dyn Captioner>,
    pub embedder: Box<dyn Embedder>,
    pub enricher: Box<dyn Enricher>,
    pub narrator: Box<dyn Narrator>,
    pub extractor: Box<dyn Extractor>,
    pub prompts: PromptSet,
    /// Embedding dimension, fixed by the first embedding (0 = not yet seen).
    pub dim: core::sync::atomic::AtomicUsize,
}

impl Gateway {
    /// All five roles backed by the deterministic mocks.
    pub fn mock(taxonomy: &Taxonomy) -> Gateway {
        use crate::mock::*;
        Gateway {
            captioner: Box::new(MockCaptioner),
            embedder: Box::new(MockEmbedder::default()),
            enricher: Box::new(MockEnricher),
            narrator: Box::new(MockNarrator::new(taxonomy.clone())),
            extractor: Box::new(MockExtractor::new(taxonomy.clone())),
            prompts: PromptSet::default(),
            dim: core::sync::atomic::AtomicUsize::new(0),
        }
    }

    pub fn screen_query(&self, q: &str) -> ScreenVerdict {
        screen_query(q)
    }

    pub fn caption_clip(&self, clip: &ClipWindow, source_uri: &str) -> Result<String, GatewayError> {
        let text = self.captioner.caption(clip, source_uri, &self.prompts.captioner)?;
        if text.trim().is_empty() {
            return Err(GatewayError::Malformed { role: Role::Captioner, message: "empty caption".to_string() });
        }
        Ok(text)
    }

    pub fn embed_text(&self, t: &str) -> Result<Embedding, GatewayError> {
        if t.trim().is_empty() {
            return Err(GatewayError::EmptyText);
        }
        let e = self.embedder.embed(t)?;
        use core::sync::atomic::Ordering;
        let expected = match self.dim.compare_exchange(0, e.dim(), Ordering::AcqRel, Ordering::Acquire) {
            Ok(_) => e.dim(),
            Err(d) => d,
        };
        if expected != e.dim() {
            return Err(GatewayError::DimensionConflict { expected, actual: e.dim() });
        }
        Ok(e)
    }

    /// Screens, then expands `q`. The result always contains `q` verbatim.
    pub fn enrich_query(&self, q: &str, ctx: &DomainContext, context_type: &str) -> Result<String, GatewayError> {
        let verdict = screen_query(q);
        if !verdict.allowed {
            return Err(GatewayError::Refused { reason: verdict.reason.unwrap_or_default() });
        }
        let out = self.enricher.enrich(q, ctx, context_type, &self.prompts.enricher)?;
        if out.contains(q) {
            Ok(out)
        } else if out.trim().is_empty() {
            Ok(q.to_string())
        } else {
            Ok(format!("{q} {}", out.trim()))
        }
    }

    pub fn generate_narrative(&self, q: &str, hit: &RankedHit, conversation: &[ConversationEntry]) -> Result<String, GatewayError> {
        if hit.descriptor.description.trim().is_empty() {
            return Err(GatewayError::EvidenceMissing);
        }
        let req = NarrationRequest { query: q, hit, conversation, prompt: &self.prompts.narrator };
        let text = self.narrator.narrate(&req)?;
        if text.trim().is_empty() {
            return Err(GatewayError::Malformed { role: Role::Narrator, message: "empty narrative".to_string() });
        }
        Ok(text)
    }

    pub fn extract_entities(&self, answer: &str, q: &str, taxonomy: &Taxonomy) -> Result<Extraction, GatewayError> {
        let raw = self.extractor.extract(answer, q, &self.prompts.extractor)?;
        Ok(validate_extraction(raw, answer, taxonomy))
    }
}

/// Applies the strict-taxonomy rule to raw extractor output: unknown
/// classes, spans that do not match their surface, and repeated phrases are
/// dropped and counted.
pub fn validate_extraction(raw: RawExtraction, answer: &str, taxonomy: &Taxonomy) -> Extraction {
    let mut out = Extraction::default();
    let mut seen_phrases: BTreeSet<String> = BTreeSet::new();
    let mut used_spans: Vec<Span> = Vec::new();

    for m in raw.mentions {
        let Ok(class) = taxonomy.resolve_class(&m.class_id) else {
            out.dropped_mentions += 1;
            continue;
        };
        let phrase = m.surface.trim().to_lowercase();
        if phrase.is_empty() || seen_phrases.contains(&phrase) {
            out.dropped_mentions += 1;
            continue;
        }
        let span = match m.span {
            Some(s) if s.slice(answer) == Some(m.surface.as_str()) => Some(s),
            Some(_) => None,
            None => locate(answer, m.surface.trim(), &used_spans),
        };
        let Some(span) = span else {
            out.dropped_mentions += 1;
            continue;
        };
        seen_phrases.insert(phrase);
        used_spans.push(span);
        let attributes = m
            .attributes
            .into_iter()
            .map(|(k, v)| (normalize_class_token(&k), v))
            .collect();
        out.mentions.push(EntityMention {
            surface: answer[span.start..span.end].to_string(),
            class_id: class.id.clone(),
            attributes,
            span,
        });
    }

    let lookup = |surface: &str| -> Option<usize> {
        let needle = surface.trim().to_lowercase();
        out.mentions.iter().position(|m| m.surface.to_lowercase() == needle)
    };
    let mut relations = Vec::new();
    for r in &raw.relations {
        match (lookup(&r.subject), lookup(&r.object)) {
            (Some(s), Some(o)) => relations.push(MentionRelation { subject: s, label: r.label.clone(), object: o }),
            _ => out.dropped_relations += 1,
        }
    }
    let mut coref = CorefScores::default();
    for c in &raw.coref {
        if let (Some(a), Some(b)) = (lookup(&c.a), lookup(&c.b)) {
            coref.set(a, b, c.score);
        }
    }
    out.relations = relations;
    out.coref = coref;
    out
}

/// First occurrence of `surface` (case-sensitive, then case-insensitive)
/// that does not overlap an already claimed span.
fn locate(answer: &str, surface: &str, used: &[Span]) -> Option<Span> {
    if surface.is_empty() {
        return None;
    }
    let free = |s: &Span| used.iter().all(|u| u.end <= s.start || s.end <= u.start);
    for (start, _) in answer.match_indices(surface) {
        let s = Span { start, end: start + surface.len() };
        if free(&s) {
            return Some(s);
        }
    }
    let lower_answer = answer.to_lowercase();
    if lower_answer.len() != answer.len() {
        return None;
    }
    let lower_surface = surface.to_lowercase();
    for (start, _) in lower_answer.match_indices(&lower_surface) {
        let s = Span { start, end: start + surface.len() };
        if answer.is_char_boundary(s.start) && answer.is_char_boundary(s.end) && free(&s) {
            return Some(s);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn default_prompts_carry_required_placeholders() {
        for role in [Role::Captioner, Role::Enricher, Role::Narrator, Role::Extractor] {
            let t = PromptTemplate::default_for(role).unwrap();
            assert!(PromptTemplate::new(role, t.body.clone()).is_ok(), "{role}");
        }
        assert!(PromptTemplate::new(Role::Narrator, "no placeholders").is_err());
    }

    #[test]
    fn prompt_render_substitutes() {
        let t = PromptTemplate::new(Role::Enricher, "type={context_type} q={query}").unwrap();
        assert_eq!(t.render(&[("context_type", "new"), ("query", "cars")]), "type=new q=cars");
        let names: Vec<_> = t.placeholders().into_iter().collect();
        assert_eq!(names, ["context_type", "query"]);
    }

    #[test]
    fn backend_config_rules() {
        assert!(BackendConfig::mock(Role::Narrator).validate().is_ok());
        assert_eq!(BackendConfig::mock(Role::Enricher).temperature, 0.05);
        assert_eq!(BackendConfig::mock(Role::Narrator).temperature, 0.3);
        let mut remote = BackendConfig::mock(Role::Embedder);
        remote.mode = BackendMode::Remote;
        assert!(remote.validate().is_err());
        remote.endpoint = Some("http://localhost:1/embed".into());
        assert!(remote.validate().is_ok());
    }

    #[test]
    fn out_of_taxonomy_mentions_dropped() {
        let t = Taxonomy::default();
        let answer = "An alien lands next to the dark SUV.";
        let raw = RawExtraction {
            mentions: vec![
                RawMention { surface: "alien".into(), class_id: "alien".into(), attributes: BTreeMap::new(), span: None },
                RawMention { surface: "dark SUV".into(), class_id: "motorized vehicle".into(), attributes: BTreeMap::new(), span: None },
                RawMention { surface: "dark SUV".into(), class_id: "motorized_vehicle".into(), attributes: BTreeMap::new(), span: None },
                RawMention { surface: "bus".into(), class_id: "motorized_vehicle".into(), attributes: BTreeMap::new(), span: None },
            ],
            relations: vec![RawRelation { subject: "alien".into(), label: "approaches".into(), object: "dark SUV".into() }],
            coref: vec![],
        };
        let x = validate_extraction(raw, answer, &t);
        assert_eq!(x.mentions.len(), 1);
        assert_eq!(x.mentions[0].class_id, "motorized_vehicle");
        assert_eq!(x.mentions[0].span.slice(answer), Some("dark SUV"));
        assert_eq!(x.dropped_mentions, 3);
        assert_eq!(x.dropped_relations, 1);
    }

    #[test]
    fn mismatched_span_dropped() {
        let t = Taxonomy::default();
        let raw = RawExtraction {
            mentions: vec![RawMention {
                surface: "crosswalk".into(),
                class_id: "crosswalk".into(),
                attributes: BTreeMap::new(),
                span: Some(Span { start: 0, end: 3 }),
            }],
            ..Default::default()
        };
        let x = validate_extraction(raw, "the crosswalk", &t);
        assert!(x.mentions.is_empty());
        assert_eq!(x.dropped_mentions, 1);
    }
}
