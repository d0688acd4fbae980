//! Query answering: screen, enrich, retrieve, narrate, extract, build the
//! graph, ground it, and record the turn in the session.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStore;
use crate::gateway::{ConversationEntry, DomainContext, Gateway, GatewayError};
use crate::graph::{
    annotate_answer, build_graph, canonicalize, is_dynamic, Annotation, CanonParams, GraphError, Grounding, KnowledgeGraph, Triple,
};
use crate::grounding::{active_masks, ground_dynamic, GroundingError, GroundingParams, LayoutMask, Track};
use crate::segmentation::Millis;
use crate::taxonomy::Taxonomy;
use crate::vector::{ClipKey, RankedHit};

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_CONTEXT_WINDOW: usize = 5;

/// Pipeline stage, as reported in errors and progress events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageTag {
    Screened,
    Enriched,
    Retrieved,
    Narrated,
    Extracted,
    Grounded,
    Done,
}

impl StageTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StageTag::Screened => "screened",
            StageTag::Enriched => "enriched",
            StageTag::Retrieved => "retrieved",
            StageTag::Narrated => "narrated",
            StageTag::Extracted => "extracted",
            StageTag::Grounded => "grounded",
            StageTag::Done => "done",
        }
    }
}

impl core::fmt::Display for StageTag {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Progress event emitted after each stage completes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "lowercase")]
pub enum Stage {
    Screened {
        allowed: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
    Enriched { query: String },
    Retrieved { hits: usize },
    Narrated { chars: usize },
    Extracted { mentions: usize },
    Grounded { tracks: usize, masks: usize },
    Done {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        answer_id: Option<String>,
    },
}

impl Stage {
    pub fn tag(&self) -> StageTag {
        match self {
            Stage::Screened { .. } => StageTag::Screened,
            Stage::Enriched { .. } => StageTag::Enriched,
            Stage::Retrieved { .. } => StageTag::Retrieved,
            Stage::Narrated { .. } => StageTag::Narrated,
            Stage::Extracted { .. } => StageTag::Extracted,
            Stage::Grounded { .. } => StageTag::Grounded,
            Stage::Done { .. } => StageTag::Done,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("refused: {reason}")]
    Refused { reason: String },
    #[error("the corpus has no indexed clips")]
    EmptyCorpus,
    #[error("follow-up requires a session with at least one turn")]
    EmptySession,
    #[error("k must be at least 1")]
    BadK,
    #[error("score {0} outside [-1, 1]")]
    ScoreOutOfRange(f64),
    #[error("{stage} stage failed: {source}")]
    Backend { stage: StageTag, source: GatewayError },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error("inconsistent answer: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfidenceBand {
    High,
    Medium,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandThresholds {
    pub high: f64,
    pub medium: f64,
}

impl Default for BandThresholds {
    fn default() -> Self {
        BandThresholds { high: 0.75, medium: 0.5 }
    }
}

pub fn confidence_band(score: f64, t: &BandThresholds) -> Result<ConfidenceBand, PipelineError> {
    if !(-1.0..=1.0).contains(&score) {
        return Err(PipelineError::ScoreOutOfRange(score));
    }
    Ok(if score >= t.high {
        ConfidenceBand::High
    } else if score >= t.medium {
        ConfidenceBand::Medium
    } else {
        ConfidenceBand::Low
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub k: usize,
    pub context_window: usize,
    pub bands: BandThresholds,
    pub canon: CanonParams,
    pub grounding: GroundingParams,
    /// Keep the active clip on follow-ups whose top hit overlaps it; when
    /// false every follow-up switches to its top hit.
    pub retain_active_clip: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: DEFAULT_K,
            context_window: DEFAULT_CONTEXT_WINDOW,
            bands: BandThresholds::default(),
            canon: CanonParams::default(),
            grounding: GroundingParams::default(),
            retain_active_clip: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub query: String,
    pub answer_id: String,
    pub clip: ClipKey,
    pub narrative: String,
}

/// Conversation state. Turns are append-only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySession {
    pub session_id: String,
    turns: Vec<Turn>,
    active_clip: Option<ClipKey>,
}

impl QuerySession {
    pub fn new(session_id: impl Into<String>) -> Self {
        QuerySession { session_id: session_id.into(), turns: Vec::new(), active_clip: None }
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn active_clip(&self) -> Option<&ClipKey> {
        self.active_clip.as_ref()
    }

    /// The last `w` turns, oldest first.
    pub fn context(&self, w: usize) -> Vec<ConversationEntry> {
        let from = self.turns.len().saturating_sub(w);
        self.turns[from..]
            .iter()
            .map(|t| ConversationEntry { query: t.query.clone(), clip: t.clip.clone(), narrative: t.narrative.clone() })
            .collect()
    }

    fn next_answer_id(&self) -> String {
        format!("{}-a{}", self.session_id, self.turns.len() + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedAnswer {
    pub answer_id: String,
    pub query: String,
    pub enriched_query: String,
    pub narrative: String,
    pub graph: KnowledgeGraph,
    pub annotations: Vec<Annotation>,
    pub tracks: Vec<Track>,
    pub active_masks: Vec<LayoutMask>,
    pub related: Vec<RankedHit>,
    pub confidence_band: ConfidenceBand,
    pub chosen: ClipKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub video_id: String,
    pub clip_index: u32,
    #[serde(rename = "start_s")]
    pub start: Millis,
    pub score: f64,
}

/// Related hits min-max normalized to `[0, 1]` (a constant set maps to 1),
/// grouped by video and ordered by start time.
pub fn related_for_timeline(answer: &AugmentedAnswer) -> Vec<TimelineEntry> {
    let hits = &answer.related;
    let (lo, hi) = hits.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| (lo.min(h.score), hi.max(h.score)));
    let mut out: Vec<TimelineEntry> = hits
        .iter()
        .map(|h| TimelineEntry {
            video_id: h.descriptor.video_id.clone(),
            clip_index: h.descriptor.clip_index,
            start: h.descriptor.start,
            score: if hi > lo { (h.score - lo) / (hi - lo) } else { 1.0 },
        })
        .collect();
    out.sort_by(|a, b| a.video_id.cmp(&b.video_id).then(a.start.cmp(&b.start)).then(a.clip_index.cmp(&b.clip_index)));
    out
}

/// Checks the cross-field invariants of an answer.
pub fn validate_answer(a: &AugmentedAnswer, threshold: f64) -> Result<(), PipelineError> {
    let bad = |m: String| Err(PipelineError::Invalid(m));
    let Some(top) = a.related.first() else { return bad("no related hits".into()) };
    if top.rank != 1 || top.descriptor.key() != a.chosen {
        return bad(format!("chosen {} is not the rank-1 hit", a.chosen));
    }
    a.graph.check_invariants()?;
    let mut prev_end = 0;
    for ann in &a.annotations {
        if ann.span.slice(&a.narrative).is_none() {
            return bad(format!("annotation {}..{} outside the narrative", ann.span.start, ann.span.end));
        }
        if ann.span.start < prev_end {
            return bad("overlapping annotations".into());
        }
        prev_end = ann.span.end;
        if a.graph.node(&ann.node_id).is_none() {
            return bad(format!("annotation references unknown node {}", ann.node_id));
        }
    }
    for t in &a.tracks {
        match &t.node_id {
            Some(n) if a.graph.node(n).is_some() => {}
            _ => return bad(format!("track {} has no graph node", t.track_id)),
        }
        if t.samples.windows(2).any(|w| w[0].frame_index >= w[1].frame_index) {
            return bad(format!("track {} frames not increasing", t.track_id));
        }
        if t.samples.iter().any(|s| s.confidence < threshold) {
            return bad(format!("track {} has a sample below threshold", t.track_id));
        }
    }
    Ok(())
}

/// Borrowed view over everything a query needs.
pub struct Pipeline<'a> {
    pub taxonomy: &'a Taxonomy,
    pub gateway: &'a Gateway,
    pub corpus: &'a CorpusStore,
    pub config: PipelineConfig,
}

impl<'a> Pipeline<'a> {
    pub fn new(taxonomy: &'a Taxonomy, gateway: &'a Gateway, corpus: &'a CorpusStore, config: PipelineConfig) -> Self {
        Pipeline { taxonomy, gateway, corpus, config }
    }

    /// Answers `q` as a new question and makes its top clip the active one.
    pub fn answer_query(
        &self,
        session: &mut QuerySession,
        q: &str,
        k: Option<usize>,
        observer: &mut dyn FnMut(&Stage),
    ) -> Result<AugmentedAnswer, PipelineError> {
        self.run(session, q, k, false, observer)
    }

    /// Answers `q` with the last turns as conversation context.
    pub fn follow_up(
        &self,
        session: &mut QuerySession,
        q: &str,
        k: Option<usize>,
        observer: &mut dyn FnMut(&Stage),
    ) -> Result<AugmentedAnswer, PipelineError> {
        if session.turns.is_empty() {
            return Err(PipelineError::EmptySession);
        }
        self.run(session, q, k, true, observer)
    }

    fn run(
        &self,
        session: &mut QuerySession,
        q: &str,
        k: Option<usize>,
        follow_up: bool,
        observer: &mut dyn FnMut(&Stage),
    ) -> Result<AugmentedAnswer, PipelineError> {
        let result = self.stages(session, q, k, follow_up, observer);
        observer(&Stage::Done { answer_id: result.as_ref().ok().map(|a| a.answer_id.clone()) });
        result
    }

    fn stages(
        &self,
        session: &mut QuerySession,
        q: &str,
        k: Option<usize>,
        follow_up: bool,
        observer: &mut dyn FnMut(&Stage),
    ) -> Result<AugmentedAnswer, PipelineError> {
        let verdict = self.gateway.screen_query(q);
        observer(&Stage::Screened { allowed: verdict.allowed, reason: verdict.reason.clone() });
        if !verdict.allowed {
            return Err(PipelineError::Refused { reason: verdict.reason.unwrap_or_default() });
        }
        let k = k.unwrap_or(self.config.k);
        if k == 0 {
            return Err(PipelineError::BadK);
        }
        if self.corpus.index().is_empty() {
            return Err(PipelineError::EmptyCorpus);
        }

        let ctx = DomainContext::from_taxonomy(self.taxonomy);
        let context_type = if follow_up { "follow-up" } else { "new query" };
        let enriched = self
            .gateway
            .enrich_query(q, &ctx, context_type)
            .map_err(|e| backend(StageTag::Enriched, e))?;
        observer(&Stage::Enriched { query: enriched.clone() });

        let qv = self.gateway.embed_text(&enriched).map_err(|e| backend(StageTag::Retrieved, e))?;
        let related = self
            .corpus
            .index()
            .top_k(&qv, k, None)
            .map_err(|e| backend(StageTag::Retrieved, GatewayError::Malformed { role: crate::gateway::Role::Embedder, message: e.to_string() }))?;
        observer(&Stage::Retrieved { hits: related.len() });
        let Some(top) = related.first() else { return Err(PipelineError::EmptyCorpus) };
        let chosen = top.descriptor.key();

        let conversation = if follow_up { session.context(self.config.context_window) } else { Vec::new() };
        let narrative = self
            .gateway
            .generate_narrative(q, top, &conversation)
            .map_err(|e| backend(StageTag::Narrated, e))?;
        observer(&Stage::Narrated { chars: narrative.chars().count() });

        let extraction = self
            .gateway
            .extract_entities(&narrative, q, self.taxonomy)
            .map_err(|e| backend(StageTag::Extracted, e))?;
        observer(&Stage::Extracted { mentions: extraction.mentions.len() });

        let scope = chosen.to_string();
        let canon = canonicalize(&extraction.mentions, &extraction.coref, &self.config.canon, &scope);
        let triples: Vec<Triple> = extraction
            .relations
            .iter()
            .map(|r| {
                let s = &canon.nodes[canon.membership[r.subject]];
                let o = &canon.nodes[canon.membership[r.object]];
                Triple::new(s.node_id.clone(), r.label.clone(), o.node_id.clone())
            })
            .collect();
        let mut graph = build_graph(canon.nodes, &triples, self.taxonomy)?;
        graph.dropped_mentions += extraction.dropped_mentions;
        graph.dropped_relations += extraction.dropped_relations;

        let (tracks, masks) = self.ground(&mut graph, &top.descriptor)?;
        observer(&Stage::Grounded { tracks: tracks.len(), masks: masks.len() });

        let annotations = annotate_answer(&narrative, &graph, self.taxonomy);
        let confidence_band = confidence_band(top.score, &self.config.bands)?;
        let answer = AugmentedAnswer {
            answer_id: session.next_answer_id(),
            query: q.to_string(),
            enriched_query: enriched,
            narrative,
            graph,
            annotations,
            tracks,
            active_masks: masks,
            related,
            confidence_band,
            chosen,
        };
        validate_answer(&answer, self.config.grounding.confidence_threshold)?;

        let retain = follow_up
            && self.config.retain_active_clip
            && session.active_clip.as_ref().is_some_and(|active| {
                *active == answer.chosen
                    || self.corpus.index().get(active).is_some_and(|e| e.descriptor.overlaps(&answer.related[0].descriptor))
            });
        if !retain {
            session.active_clip = Some(answer.chosen.clone());
        }
        session.turns.push(Turn {
            query: answer.query.clone(),
            answer_id: answer.answer_id.clone(),
            clip: answer.chosen.clone(),
            narrative: answer.narrative.clone(),
        });
        Ok(answer)
    }

    fn ground(
        &self,
        graph: &mut KnowledgeGraph,
        clip: &crate::vector::ClipDescriptor,
    ) -> Result<(Vec<Track>, Vec<LayoutMask>), PipelineError> {
        let mut tracks = Vec::new();
        if let Some((first, last)) = self.corpus.clip_frames(clip) {
            let detections = self.corpus.detections_in(&clip.video_id, first, last);
            if !detections.is_empty() {
                for node in graph.nodes.iter_mut().filter(|n| is_dynamic(self.taxonomy, &n.class_id)) {
                    if let Some(track) = ground_dynamic(node, &detections, first..=last, self.taxonomy, &self.config.grounding)? {
                        node.grounding = Grounding::Dynamic { track_id: track.track_id.clone() };
                        tracks.push(track);
                    }
                }
            }
        }
        let masks = active_masks(self.corpus.masks(&clip.video_id), graph);
        let mask_classes: BTreeSet<&str> = masks.iter().map(|m| m.class_id.as_str()).collect();
        for node in graph.nodes.iter_mut() {
            if mask_classes.contains(node.class_id.as_str()) {
                node.grounding = Grounding::Static { mask_class: node.class_id.clone() };
            }
        }
        Ok((tracks, masks))
    }
}

fn backend(stage: StageTag, source: GatewayError) -> PipelineError {
    match source {
        GatewayError::Refused { reason } => PipelineError::Refused { reason },
        source => PipelineError::Backend { stage, source },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::{BBox, Detection};
    use crate::mock::MockNarrator;
    use crate::segmentation::{SegmentationParams, VideoMeta};
    use crate::vector::ClipDescriptor;
    use alloc::collections::BTreeMap;
    use alloc::vec;

    const CLIPS: &[(&str, u32, u64, &str)] = &[
        ("cam_a", 1, 0, "A coach bus occupies the intersection while completing a turning movement. Two pedestrians exploit the stationary state of the bus to perform an illegal crossing."),
        ("cam_a", 2, 25, "A dark SUV performs a turning movement and approaches the man on a bike near the crosswalk, which creates a near-miss scenario."),
        ("cam_a", 3, 50, "A white sedan decelerates and yields to a pedestrian at the crosswalk."),
        ("cam_b", 1, 0, "A red truck stays parked near the catch basin while pedestrians walk along the sidewalk."),
    ];

    fn corpus(t: &Taxonomy, g: &Gateway) -> CorpusStore {
        let mut s = CorpusStore::new(SegmentationParams::default());
        s.add_video(VideoMeta::new("cam_a", Millis::from_secs(80), 10.0, "").unwrap()).unwrap();
        s.add_video(VideoMeta::new("cam_b", Millis::from_secs(30), 10.0, "").unwrap()).unwrap();
        for &(v, i, start, text) in CLIPS {
            let end = (start + 30).min(if v == "cam_a" { 80 } else { 30 });
            let d = ClipDescriptor {
                video_id: v.into(),
                clip_index: i,
                start: Millis::from_secs(start),
                end: Millis::from_secs(end),
                description: text.into(),
                extra: BTreeMap::new(),
            };
            s.ingest_caption(d, None, g).unwrap();
        }
        for f in 250..260u64 {
            let drift = (f - 250) as f64 * 0.01;
            let d = Detection { frame_index: f, class_prompt: "dark SUV".into(), bbox: BBox::new(0.3 + drift, 0.5, 0.1, 0.1).unwrap(), confidence: 0.8 };
            s.add_detection("cam_a", d).unwrap();
        }
        let poly = vec![vec![[0.1, 0.6], [0.9, 0.6], [0.9, 0.8]]];
        for class in ["crosswalk", "sidewalk", "pole"] {
            s.add_mask("cam_a", LayoutMask { class_id: class.into(), geometry: poly.clone(), reference_frame: 40 }, t).unwrap();
        }
        s
    }

    #[test]
    fn answers_are_grounded_and_consistent() {
        let t = Taxonomy::default();
        let g = Gateway::mock(&t);
        let s = corpus(&t, &g);
        let p = Pipeline::new(&t, &g, &s, PipelineConfig::default());
        let mut session = QuerySession::new("s1");
        let mut events = Vec::new();
        let a = p.answer_query(&mut session, "dark SUV near-miss with the man on a bike", None, &mut |e| events.push(e.clone())).unwrap();
        assert_eq!(a.chosen, ClipKey::new("cam_a", 2));
        let tags: Vec<StageTag> = events.iter().map(Stage::tag).collect();
        assert_eq!(
            tags,
            [StageTag::Screened, StageTag::Enriched, StageTag::Retrieved, StageTag::Narrated, StageTag::Extracted, StageTag::Grounded, StageTag::Done]
        );
        assert_eq!(a.tracks.len(), 1);
        assert_eq!(a.tracks[0].samples.len(), 10);
        let suv = a.graph.nodes.iter().find(|n| n.canonical_label == "dark SUV").unwrap();
        assert!(matches!(suv.grounding, Grounding::Dynamic { .. }));
        assert_eq!(a.active_masks.iter().map(|m| m.class_id.as_str()).collect::<Vec<_>>(), ["crosswalk"]);
        assert!(a.graph.edges.iter().any(|e| e.label == "approaches"));
        assert_eq!(a.related.len(), 4);
        assert_eq!(session.turns().len(), 1);
        assert_eq!(session.active_clip(), Some(&ClipKey::new("cam_a", 2)));
        validate_answer(&a, 0.65).unwrap();
    }

    #[test]
    fn refusal_skips_everything() {
        let t = Taxonomy::default();
        let g = Gateway::mock(&t);
        let s = corpus(&t, &g);
        let p = Pipeline::new(&t, &g, &s, PipelineConfig::default());
        let mut session = QuerySession::new("s1");
        let before = s.index().reads();
        let mut events = Vec::new();
        let r = p.answer_query(&mut session, "What race is the pedestrian?", None, &mut |e| events.push(e.clone()));
        assert!(matches!(r, Err(PipelineError::Refused { ref reason }) if reason.contains("race")));
        assert_eq!(s.index().reads(), before);
        assert_eq!(events.iter().map(Stage::tag).collect::<Vec<_>>(), [StageTag::Screened, StageTag::Done]);
        assert!(session.turns().is_empty());
    }

    #[test]
    fn deterministic_across_sessions() {
        let t = Taxonomy::default();
        let g = Gateway::mock(&t);
        let s = corpus(&t, &g);
        let p = Pipeline::new(&t, &g, &s, PipelineConfig::default());
        let mut noop = |_: &Stage| {};
        let a = p.answer_query(&mut QuerySession::new("x"), "Is the bus blocking the intersection?", None, &mut noop).unwrap();
        let mut b = p.answer_query(&mut QuerySession::new("y"), "Is the bus blocking the intersection?", None, &mut noop).unwrap();
        assert_ne!(a.answer_id, b.answer_id);
        b.answer_id = a.answer_id.clone();
        assert_eq!(a, b);
    }

    #[test]
    fn follow_up_keeps_context_and_clip() {
        let t = Taxonomy::default();
        let g = Gateway::mock(&t);
        let s = corpus(&t, &g);
        let p = Pipeline::new(&t, &g, &s, PipelineConfig::default());
        let mut noop = |_: &Stage| {};
        let mut session = QuerySession::new("s");
        assert_eq!(p.follow_up(&mut session, "and then?", None, &mut noop), Err(PipelineError::EmptySession));
        let first = p.answer_query(&mut session, "coach bus turning movement", None, &mut noop).unwrap();
        assert_eq!(first.chosen, ClipKey::new("cam_a", 1));
        let second = p.follow_up(&mut session, "Is the bus blocking the intersection being exploited?", None, &mut noop).unwrap();
        assert!(second.narrative.contains(&MockNarrator::prior_marker(&first.chosen)));
        assert_eq!(session.active_clip(), Some(&ClipKey::new("cam_a", 1)));

        let third = p.follow_up(&mut session, "red truck parked near the catch basin", None, &mut noop).unwrap();
        assert_eq!(third.chosen, ClipKey::new("cam_b", 1));
        assert_eq!(session.active_clip(), Some(&ClipKey::new("cam_b", 1)));
        assert_eq!(session.turns().len(), 3);
        assert_eq!(session.turns()[0].answer_id, first.answer_id);
    }

    #[test]
    fn empty_corpus_and_bad_k() {
        let t = Taxonomy::default();
        let g = Gateway::mock(&t);
        let empty = CorpusStore::new(SegmentationParams::default());
        let p = Pipeline::new(&t, &g, &empty, PipelineConfig::default());
        let mut noop = |_: &Stage| {};
        assert_eq!(p.answer_query(&mut QuerySession::new("s"), "cars", None, &mut noop), Err(PipelineError::EmptyCorpus));
        assert_eq!(p.answer_query(&mut QuerySession::new("s"), "cars", Some(0), &mut noop), Err(PipelineError::BadK));
    }

    #[test]
    fn bands() {
        let t = BandThresholds::default();
        assert_eq!(confidence_band(1.0, &t), Ok(ConfidenceBand::High));
        assert_eq!(confidence_band(0.75, &t), Ok(ConfidenceBand::High));
        assert_eq!(confidence_band(0.6, &t), Ok(ConfidenceBand::Medium));
        assert_eq!(confidence_band(-0.2, &t), Ok(ConfidenceBand::Low));
        assert_eq!(confidence_band(1.5, &t), Err(PipelineError::ScoreOutOfRange(1.5)));
    }

    fn answer_with(scores: &[(&str, u64, f64)]) -> AugmentedAnswer {
        let related: Vec<RankedHit> = scores
            .iter()
            .enumerate()
            .map(|(i, &(v, start, score))| RankedHit {
                descriptor: ClipDescriptor {
                    video_id: v.into(),
                    clip_index: (start / 25) as u32 + 1,
                    start: Millis::from_secs(start),
                    end: Millis::from_secs(start + 30),
                    description: "x".into(),
                    extra: BTreeMap::new(),
                },
                score,
                rank: i as u32 + 1,
            })
            .collect();
        AugmentedAnswer {
            answer_id: "a".into(),
            query: "q".into(),
            enriched_query: "q".into(),
            narrative: "n".into(),
            graph: KnowledgeGraph::default(),
            annotations: vec![],
            tracks: vec![],
            active_masks: vec![],
            chosen: related[0].descriptor.key(),
            related,
            confidence_band: ConfidenceBand::High,
        }
    }

    #[test]
    fn timeline_normalization() {
        let a = answer_with(&[("v", 0, 0.9), ("v", 25, 0.7), ("v", 50, 0.5)]);
        let scores: Vec<f64> = related_for_timeline(&a).iter().map(|e| e.score).collect();
        // (s - 0.5) / 0.4
        assert_eq!(scores, [1.0, (0.7 - 0.5) / (0.9 - 0.5), 0.0]);
        assert!((scores[1] - 0.5).abs() < 1e-12);
        assert_eq!(related_for_timeline(&answer_with(&[("v", 0, 0.3)]))[0].score, 1.0);

        let two = related_for_timeline(&answer_with(&[("w", 50, 0.9), ("v", 25, 0.8), ("w", 0, 0.1)]));
        let order: Vec<(&str, u64)> = two.iter().map(|e| (e.video_id.as_str(), e.start.0 / 1000)).collect();
        assert_eq!(order, [("v", 25), ("w", 0), ("w", 50)]);
    }
}
