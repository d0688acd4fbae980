//! Answer-scoped knowledge graphs.
//!
//! Mentions are merged into nodes when they share a class and either their
//! token Jaccard or their coreference score clears its threshold; merging
//! is closed transitively. Relations are kept only when their label is in
//! the taxonomy's closed vocabulary.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::taxonomy::{Groundability, Taxonomy};
use crate::text::jaccard;

/// Byte range into an answer text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// The spanned text, if the span is non-empty, in bounds and on char
    /// boundaries.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        if self.is_empty() {
            return None;
        }
        text.get(self.start..self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    pub class_id: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    pub span: Span,
}

/// Symmetric pairwise coreference scores between mention indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorefScores(BTreeMap<(usize, usize), f64>);

impl CorefScores {
    pub fn set(&mut self, a: usize, b: usize, score: f64) {
        self.0.insert((a.min(b), a.max(b)), score);
    }

    /// Absent pairs score 0.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.0.get(&(a.min(b), a.max(b))).copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonParams {
    pub lexical_threshold: f64,
    pub coref_threshold: f64,
}

impl Default for CanonParams {
    fn default() -> Self {
        CanonParams { lexical_threshold: 0.5, coref_threshold: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Grounding {
    Ungrounded,
    Dynamic { track_id: String },
    Static { mask_class: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeConflict {
    pub key: String,
    pub kept: String,
    pub other: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityNode {
    pub node_id: String,
    pub class_id: String,
    pub canonical_label: String,
    pub merged_spans: Vec<Span>,
    pub attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attribute_conflicts: Vec<AttributeConflict>,
    pub grounding: Grounding,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationEdge {
    pub subject: String,
    pub label: String,
    pub object: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    pub nodes: Vec<EntityNode>,
    pub edges: Vec<RelationEdge>,
    pub dropped_mentions: usize,
    #[serde(default)]
    pub dropped_relations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("relation endpoint `{0}` is not a node of the graph")]
    DanglingEndpoint(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

/// Stable id from class, label and the answer the node belongs to.
pub fn node_id(class_id: &str, label: &str, scope: &str) -> String {
    let mut h = Sha256::new();
    for part in [class_id, label, scope] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    let digest = h.finalize();
    let mut out = String::from("n");
    for b in &digest[..8] {
        out.push_str(&alloc::format!("{b:02x}"));
    }
    out
}

/// Pedestrians and drivers are never the same actor even if an extractor
/// labels them with one class.
fn class_compatible(a: &str, b: &str) -> bool {
    let actors = |x: &str, y: &str| (x == "pedestrian" && y == "driver") || (x == "driver" && y == "pedestrian");
    a == b && !actors(a, b)
}

/// Whether two mentions would be merged directly (before closure).
pub fn should_merge(a: &EntityMention, b: &EntityMention, coref: f64, params: &CanonParams) -> bool {
    class_compatible(&a.class_id, &b.class_id)
        && (jaccard(&a.surface, &b.surface) >= params.lexical_threshold || coref >= params.coref_threshold)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Canonicalization {
    pub nodes: Vec<EntityNode>,
    /// Node index for each input mention.
    pub membership: Vec<usize>,
}

/// Merges mentions into nodes. Nodes are ordered by their earliest span;
/// `scope` (the answer id) feeds the node ids.
pub fn canonicalize(mentions: &[EntityMention], coref: &CorefScores, params: &CanonParams, scope: &str) -> Canonicalization {
    let n = mentions.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if should_merge(&mentions[i], &mentions[j], coref.get(i, j), params) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.sort_by_key(|g| g.iter().map(|&i| mentions[i].span.start).min().unwrap_or(0));

    let mut membership = vec![0; n];
    let mut nodes = Vec::with_capacity(groups.len());
    for (node_idx, group) in groups.iter().enumerate() {
        let mut ordered = group.clone();
        ordered.sort_by_key(|&i| mentions[i].span);
        // longest surface, earliest on ties
        let label_idx = ordered
            .iter()
            .copied()
            .fold(ordered[0], |best, i| if mentions[i].surface.len() > mentions[best].surface.len() { i } else { best });
        let canonical_label = mentions[label_idx].surface.clone();
        let class_id = mentions[label_idx].class_id.clone();

        let mut attributes: BTreeMap<String, String> = BTreeMap::new();
        let mut conflicts = Vec::new();
        for &i in &ordered {
            membership[i] = node_idx;
            for (k, v) in &mentions[i].attributes {
                match attributes.get(k) {
                    None => {
                        attributes.insert(k.clone(), v.clone());
                    }
                    Some(existing) if existing.eq_ignore_ascii_case(v) => {}
                    Some(existing) => {
                        let c = AttributeConflict { key: k.clone(), kept: existing.clone(), other: v.clone() };
                        if !conflicts.contains(&c) {
                            conflicts.push(c);
                        }
                    }
                }
            }
        }
        let mut merged_spans: Vec<Span> = ordered.iter().map(|&i| mentions[i].span).collect();
        merged_spans.dedup();
        nodes.push(EntityNode {
            node_id: node_id(&class_id, &canonical_label, scope),
            class_id,
            canonical_label,
            merged_spans,
            attributes,
            attribute_conflicts: conflicts,
            grounding: Grounding::Ungrounded,
        });
    }
    Canonicalization { nodes, membership }
}

/// A relation between nodes, referenced by node id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub label: String,
    pub object: String,
}

impl Triple {
    pub fn new(subject: impl Into<String>, label: impl Into<String>, object: impl Into<String>) -> Self {
        Triple { subject: subject.into(), label: label.into(), object: object.into() }
    }
}

/// Assembles nodes and triples into a graph. Labels outside the closed
/// vocabulary and self-relations are dropped and counted; duplicates
/// collapse.
pub fn build_graph(nodes: Vec<EntityNode>, triples: &[Triple], taxonomy: &Taxonomy) -> Result<KnowledgeGraph, GraphError> {
    let ids: BTreeSet<&str> = nodes.iter().map(|n| n.node_id.as_str()).collect();
    let mut edges: Vec<RelationEdge> = Vec::new();
    let mut dropped = 0;
    for t in triples {
        for end in [&t.subject, &t.object] {
            if !ids.contains(end.as_str()) {
                return Err(GraphError::DanglingEndpoint(end.clone()));
            }
        }
        let Some(label) = taxonomy.resolve_relation(&t.label) else {
            dropped += 1;
            continue;
        };
        if t.subject == t.object {
            dropped += 1;
            continue;
        }
        let edge = RelationEdge { subject: t.subject.clone(), label: label.to_string(), object: t.object.clone() };
        if !edges.contains(&edge) {
            edges.push(edge);
        }
    }
    Ok(KnowledgeGraph { nodes, edges, dropped_mentions: 0, dropped_relations: dropped })
}

impl KnowledgeGraph {
    pub fn node(&self, id: &str) -> Option<&EntityNode> {
        self.nodes.iter().find(|n| n.node_id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut EntityNode> {
        self.nodes.iter_mut().find(|n| n.node_id == id)
    }

    /// Every edge endpoint is a node and no edge repeats.
    pub fn check_invariants(&self) -> Result<(), GraphError> {
        let ids: BTreeSet<&str> = self.nodes.iter().map(|n| n.node_id.as_str()).collect();
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            for end in [&e.subject, &e.object] {
                if !ids.contains(end.as_str()) {
                    return Err(GraphError::DanglingEndpoint(end.clone()));
                }
            }
            if !seen.insert(e) {
                return Err(GraphError::DanglingEndpoint(alloc::format!("duplicate edge {} {} {}", e.subject, e.label, e.object)));
            }
        }
        Ok(())
    }

    /// Induced subgraph of nodes within `radius` hops, following edges in
    /// either direction.
    pub fn neighborhood(&self, node: &str, radius: usize) -> Result<KnowledgeGraph, GraphError> {
        if self.node(node).is_none() {
            return Err(GraphError::UnknownNode(node.to_string()));
        }
        let mut dist: BTreeMap<&str, usize> = BTreeMap::new();
        dist.insert(node, 0);
        let mut queue = VecDeque::from([node]);
        while let Some(cur) = queue.pop_front() {
            let d = dist[cur];
            if d == radius {
                continue;
            }
            for e in &self.edges {
                let next = if e.subject == cur {
                    e.object.as_str()
                } else if e.object == cur {
                    e.subject.as_str()
                } else {
                    continue;
                };
                if !dist.contains_key(next) {
                    dist.insert(next, d + 1);
                    queue.push_back(next);
                }
            }
        }
        let nodes: Vec<EntityNode> = self.nodes.iter().filter(|n| dist.contains_key(n.node_id.as_str())).cloned().collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| dist.contains_key(e.subject.as_str()) && dist.contains_key(e.object.as_str()))
            .cloned()
            .collect();
        Ok(KnowledgeGraph { nodes, edges, dropped_mentions: 0, dropped_relations: 0 })
    }

    /// Distinct node classes.
    pub fn classes(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(|n| n.class_id.as_str()).collect()
    }
}

/// Highlight for one span of the narrative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub span: Span,
    pub node_id: String,
    pub color: String,
}

/// One annotation per merged span; overlaps resolved in favor of the longer
/// span, then the earlier one. Output is sorted by start.
pub fn annotate_answer(answer: &str, graph: &KnowledgeGraph, taxonomy: &Taxonomy) -> Vec<Annotation> {
    let mut candidates: Vec<Annotation> = Vec::new();
    for node in &graph.nodes {
        let Ok(color) = taxonomy.category_color(&node.class_id) else { continue };
        for span in &node.merged_spans {
            if span.slice(answer).is_some() {
                candidates.push(Annotation { span: *span, node_id: node.node_id.clone(), color: color.to_string() });
            }
        }
    }
    candidates.sort_by(|a, b| b.span.len().cmp(&a.span.len()).then(a.span.start.cmp(&b.span.start)));
    let mut accepted: Vec<Annotation> = Vec::new();
    for c in candidates {
        if accepted.iter().all(|a| !a.span.overlaps(&c.span)) {
            accepted.push(c);
        }
    }
    accepted.sort_by_key(|a| a.span);
    accepted
}

/// Whether a node of this class is grounded through detector tracks.
pub fn is_dynamic(taxonomy: &Taxonomy, class_id: &str) -> bool {
    taxonomy.resolve_class(class_id).is_ok_and(|c| c.groundable_as == Groundability::Dynamic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn mention(text: &str, surface: &str, class: &str) -> EntityMention {
        let start = text.find(surface).unwrap();
        EntityMention { surface: surface.into(), class_id: class.into(), attributes: BTreeMap::new(), span: Span::new(start, start + surface.len()) }
    }

    #[test]
    fn coref_merges_red_car_and_vehicle() {
        let text = "a red car turns left and later the vehicle stops";
        let ms = [mention(text, "a red car", "motorized_vehicle"), mention(text, "the vehicle", "motorized_vehicle")];
        let mut coref = CorefScores::default();
        coref.set(0, 1, 0.9);
        let c = canonicalize(&ms, &coref, &CanonParams::default(), "ans");
        assert_eq!(c.nodes.len(), 1);
        assert_eq!(c.nodes[0].canonical_label, "the vehicle");
        assert_eq!(c.nodes[0].merged_spans.len(), 2);
        assert_eq!(c.membership, [0, 0]);
    }

    #[test]
    fn cross_class_never_merges() {
        let text = "the pedestrian and the car";
        let ms = [mention(text, "the pedestrian", "pedestrian"), mention(text, "the car", "motorized_vehicle")];
        let mut coref = CorefScores::default();
        coref.set(0, 1, 1.0);
        assert_eq!(canonicalize(&ms, &coref, &CanonParams::default(), "a").nodes.len(), 2);
        assert!(!class_compatible("pedestrian", "driver"));
    }

    #[test]
    fn repeated_phrase_merges_by_jaccard() {
        let text = "dark SUV speeds; the dark SUV brakes";
        let first = mention(text, "dark SUV", "motorized_vehicle");
        let mut second = first.clone();
        second.span = Span::new(text.rfind("dark SUV").unwrap(), text.rfind("dark SUV").unwrap() + 8);
        let c = canonicalize(&[first, second], &CorefScores::default(), &CanonParams::default(), "a");
        assert_eq!(c.nodes.len(), 1);
        assert_eq!(c.nodes[0].merged_spans.len(), 2);
    }

    #[test]
    fn attribute_conflicts_are_recorded() {
        let text = "white sedan then the sedan";
        let mut a = mention(text, "white sedan", "motorized_vehicle");
        a.attributes.insert("color".into(), "white".into());
        let mut b = mention(text, "the sedan", "motorized_vehicle");
        b.attributes.insert("color".into(), "silver".into());
        b.attributes.insert("type".into(), "sedan".into());
        let c = canonicalize(&[a, b], &CorefScores::default(), &CanonParams::default(), "a");
        let node = &c.nodes[0];
        assert_eq!(node.attributes["color"], "white");
        assert_eq!(node.attributes["type"], "sedan");
        assert_eq!(node.attribute_conflicts, [AttributeConflict { key: "color".into(), kept: "white".into(), other: "silver".into() }]);
    }

    #[test]
    fn node_ids_are_stable() {
        assert_eq!(node_id("pedestrian", "man on a bike", "a1"), node_id("pedestrian", "man on a bike", "a1"));
        assert_ne!(node_id("pedestrian", "man on a bike", "a1"), node_id("pedestrian", "man on a bike", "a2"));
    }

    pub(crate) fn case_study() -> (KnowledgeGraph, [String; 4]) {
        let t = Taxonomy::default();
        let text = "The dark SUV involves the man on a bike; it forces the man on the bike to swerve out of the crosswalk, which creates a near-miss scenario.";
        let ms = [
            mention(text, "dark SUV", "motorized_vehicle"),
            mention(text, "man on a bike", "pedestrian"),
            mention(text, "forces the man on the bike to swerve out of the crosswalk", "trajectory"),
            mention(text, "creates a near-miss scenario", "conflict"),
        ];
        let c = canonicalize(&ms, &CorefScores::default(), &CanonParams::default(), "case");
        let ids = [0, 1, 2, 3].map(|i| c.nodes[c.membership[i]].node_id.clone());
        let triples = [
            Triple::new(&*ids[0], "involves", &*ids[1]),
            Triple::new(&*ids[0], "causes", &*ids[2]),
            Triple::new(&*ids[2], "causes", &*ids[3]),
        ];
        (build_graph(c.nodes, &triples, &t).unwrap(), ids)
    }

    #[test]
    fn case_study_chain() {
        let (g, _) = case_study();
        assert_eq!(g.nodes.len(), 4);
        assert_eq!(g.edges.len(), 3);
        g.check_invariants().unwrap();
    }

    #[test]
    fn unknown_label_and_duplicates() {
        let (g, ids) = case_study();
        let t = Taxonomy::default();
        let triples = [
            Triple::new(&*ids[0], "teleports", &*ids[1]),
            Triple::new(&*ids[0], "involves", &*ids[1]),
            Triple::new(&*ids[0], "Involves", &*ids[1]),
        ];
        let g2 = build_graph(g.nodes.clone(), &triples, &t).unwrap();
        assert_eq!(g2.edges.len(), 1);
        assert_eq!(g2.dropped_relations, 1);
        let dangling = [Triple::new(&*ids[0], "involves", "nope")];
        assert_eq!(build_graph(g.nodes, &dangling, &t), Err(GraphError::DanglingEndpoint("nope".into())));
    }

    #[test]
    fn neighborhood_examples() {
        let (g, ids) = case_study();
        let r0 = g.neighborhood(&ids[0], 0).unwrap();
        assert_eq!((r0.nodes.len(), r0.edges.len()), (1, 0));
        let r1 = g.neighborhood(&ids[0], 1).unwrap();
        let labels: BTreeSet<_> = r1.nodes.iter().map(|n| n.canonical_label.as_str()).collect();
        assert_eq!(
            labels,
            BTreeSet::from(["dark SUV", "man on a bike", "forces the man on the bike to swerve out of the crosswalk"])
        );
        assert_eq!(r1.edges.len(), 2);
        let all = g.neighborhood(&ids[3], 10).unwrap();
        assert_eq!((all.nodes.len(), all.edges.len()), (4, 3));
        assert_eq!(g.neighborhood("missing", 1), Err(GraphError::UnknownNode("missing".into())));
    }

    #[test]
    fn annotation_examples() {
        let t = Taxonomy::default();
        let text = "dark SUV passes; dark SUV stops";
        let mut a = mention(text, "dark SUV", "motorized_vehicle");
        let mut b = a.clone();
        b.span = Span::new(17, 25);
        a.attributes.clear();
        let c = canonicalize(&[a, b], &CorefScores::default(), &CanonParams::default(), "x");
        let g = build_graph(c.nodes, &[], &t).unwrap();
        let ann = annotate_answer(text, &g, &t);
        assert_eq!(ann.len(), 2);
        assert_eq!(ann[0].node_id, ann[1].node_id);
        assert_eq!(ann[0].color, ann[1].color);

        let text = "a man on a bike swerves";
        let ms = [mention(text, "man on a bike", "pedestrian"), mention(text, "bike", "motorized_vehicle")];
        let c = canonicalize(&ms, &CorefScores::default(), &CanonParams::default(), "x");
        let g = build_graph(c.nodes, &[], &t).unwrap();
        let ann = annotate_answer(text, &g, &t);
        assert_eq!(ann.len(), 1);
        assert_eq!(ann[0].span.slice(text), Some("man on a bike"));

        assert!(annotate_answer(text, &KnowledgeGraph::default(), &t).is_empty());
    }

    fn arb_mentions() -> impl Strategy<Value = (String, Vec<EntityMention>, Vec<(usize, usize, f64)>)> {
        let words = prop::sample::select(vec!["red", "car", "dark", "suv", "man", "bike", "bus", "the", "crosswalk"]);
        let classes = prop::sample::select(vec!["motorized_vehicle", "pedestrian", "driver"]);
        prop::collection::vec((prop::collection::vec(words, 1..4), classes), 1..12).prop_flat_map(|specs| {
            let mut text = String::new();
            let mut ms = Vec::new();
            for (ws, class) in &specs {
                let surface = ws.join(" ");
                let start = text.len();
                text.push_str(&surface);
                ms.push(EntityMention { surface: surface.clone(), class_id: class.to_string(), attributes: BTreeMap::new(), span: Span::new(start, start + surface.len()) });
                text.push_str(". ");
            }
            let n = ms.len();
            (Just(text), Just(ms), prop::collection::vec((0..n, 0..n, 0.0f64..1.0), 0..8))
        })
    }

    proptest! {
        #[test]
        fn merge_is_equivalence_closure((_text, ms, pairs) in arb_mentions()) {
            let mut coref = CorefScores::default();
            for (a, b, s) in &pairs { if a != b { coref.set(*a, *b, *s); } }
            let p = CanonParams::default();
            let c = canonicalize(&ms, &coref, &p, "p");
            // oracle: reachability over the direct-merge relation
            let n = ms.len();
            let mut reach = vec![vec![false; n]; n];
            for i in 0..n { for j in 0..n {
                reach[i][j] = i == j || should_merge(&ms[i], &ms[j], coref.get(i, j), &p);
            }}
            for k in 0..n { for i in 0..n { for j in 0..n {
                if reach[i][k] && reach[k][j] { reach[i][j] = true; }
            }}}
            for i in 0..n { for j in 0..n {
                prop_assert_eq!(reach[i][j], c.membership[i] == c.membership[j]);
            }}
            // idempotence: canonical labels re-extracted give the same count
            let relabeled: Vec<EntityMention> = c.nodes.iter().map(|node| EntityMention {
                surface: node.canonical_label.clone(), class_id: node.class_id.clone(),
                attributes: BTreeMap::new(), span: node.merged_spans[0],
            }).collect();
            let again = canonicalize(&relabeled, &CorefScores::default(), &p, "p");
            prop_assert_eq!(again.nodes.len(), c.nodes.len());
        }

        #[test]
        fn annotations_disjoint_and_sorted((text, ms, _) in arb_mentions()) {
            let t = Taxonomy::default();
            let c = canonicalize(&ms, &CorefScores::default(), &CanonParams::default(), "p");
            let g = build_graph(c.nodes, &[], &t).unwrap();
            let ann = annotate_answer(&text, &g, &t);
            for w in ann.windows(2) {
                prop_assert!(w[0].span.end <= w[1].span.start);
            }
        }

        #[test]
        fn build_graph_never_dangles(edges in prop::collection::vec((0usize..6, prop::sample::select(vec!["involves", "causes", "teleports", "blocks"]), 0usize..6), 0..20)) {
            let (g, ids) = case_study();
            let t = Taxonomy::default();
            let all_ids: Vec<String> = ids.iter().cloned().chain([String::from("ghost-a"), String::from("ghost-b")]).collect();
            let triples: Vec<Triple> = edges.iter().map(|(s, l, o)| Triple::new(&*all_ids[*s], *l, &*all_ids[*o])).collect();
            match build_graph(g.nodes, &triples, &t) {
                Ok(out) => prop_assert!(out.check_invariants().is_ok()),
                Err(GraphError::DanglingEndpoint(id)) => prop_assert!(id.starts_with("ghost")),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
