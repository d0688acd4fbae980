//! Visual grounding: detector tracks for moving entities, layout masks for
//! infrastructure, and reference-frame selection for layout extraction.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::{EntityNode, KnowledgeGraph};
use crate::taxonomy::{Groundability, Taxonomy};
use crate::text::content_tokens;

pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.65;
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.3;
pub const DEFAULT_LAYOUT_SAMPLES: usize = 10;

const EDGE_TOLERANCE: f64 = 1e-9;

/// Normalized center-size box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GroundingError {
    #[error("bounding box outside the unit square: {0:?}")]
    BoxOutOfBounds(BBox),
    #[error("confidence {0} outside [0, 1]")]
    ConfidenceOutOfRange(f64),
    #[error("no frame samples")]
    NoSamples,
    #[error("class `{0}` is not grounded through detections")]
    NotDynamic(String),
    #[error("class `{0}` is not a static layout class")]
    NotStatic(String),
    #[error("malformed geometry: {0}")]
    BadGeometry(String),
}

impl BBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<BBox, GroundingError> {
        let b = BBox { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GroundingError> {
        let finite = [self.cx, self.cy, self.w, self.h].iter().all(|v| v.is_finite());
        let inside = |c: f64, half: f64| c - half >= -EDGE_TOLERANCE && c + half <= 1.0 + EDGE_TOLERANCE;
        if !finite || self.w <= 0.0 || self.h <= 0.0 || !inside(self.cx, self.w / 2.0) || !inside(self.cy, self.h / 2.0) {
            return Err(GroundingError::BoxOutOfBounds(*self));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    fn corners(&self) -> (f64, f64, f64, f64) {
        (self.cx - self.w / 2.0, self.cy - self.h / 2.0, self.cx + self.w / 2.0, self.cy + self.h / 2.0)
    }
}

/// Intersection over union; 0 for disjoint boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    // areas from the same corners as the intersection, so identical boxes give exactly 1
    let union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame_index: u64,
    pub class_prompt: String,
    pub bbox: BBox,
    pub confidence: f64,
}

impl Detection {
    pub fn validate(&self) -> Result<(), GroundingError> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(GroundingError::ConfidenceOutOfRange(self.confidence));
        }
        self.bbox.validate()
    }
}

/// Detections with confidence at or above `threshold`, order preserved.
pub fn filter_detections(dets: &[Detection], threshold: f64) -> Vec<Detection> {
    dets.iter().filter(|d| d.confidence >= threshold).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub frame_index: u64,
    pub bbox: BBox,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub track_id: String,
    pub node_id: Option<String>,
    pub samples: Vec<TrackSample>,
}

impl Track {
    pub fn first_frame(&self) -> Option<u64> {
        self.samples.first().map(|s| s.frame_index)
    }
}

/// Detections of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDetections {
    pub frame_index: u64,
    pub detections: Vec<Detection>,
}

/// Groups detections by frame in ascending frame order. Frames listed in
/// `frames` but without detections are kept as empty entries so tracks end
/// there.
pub fn group_by_frame(dets: &[Detection], frames: impl IntoIterator<Item = u64>) -> Vec<FrameDetections> {
    let mut map: BTreeMap<u64, Vec<Detection>> = BTreeMap::new();
    for f in frames {
        map.entry(f).or_default();
    }
    for d in dets {
        map.entry(d.frame_index).or_default().push(d.clone());
    }
    map.into_iter().map(|(frame_index, detections)| FrameDetections { frame_index, detections }).collect()
}

/// Greedy frame-to-frame association.
///
/// For each pair of consecutive entries, candidate (track, detection) pairs
/// with IoU at or above `iou_threshold` are accepted in descending IoU
/// order, each side at most once. Unmatched detections open new tracks; a
/// track that misses a frame is closed for good.
pub fn link_tracks(frames: &[FrameDetections], iou_threshold: f64) -> Vec<Track> {
    let mut tracks: Vec<Track> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut last_frame: Option<u64> = None;

    for frame in frames {
        // out-of-order or repeated frames cannot extend a track
        if last_frame.is_some_and(|f| frame.frame_index <= f) {
            active.clear();
        }
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ai, &ti) in active.iter().enumerate() {
            let last = tracks[ti].samples.last().expect("tracks are never empty");
            for (di, d) in frame.detections.iter().enumerate() {
                let overlap = iou(&last.bbox, &d.bbox);
                if overlap >= iou_threshold && overlap > 0.0 {
                    pairs.push((overlap, ai, di));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut track_used = alloc::vec![false; active.len()];
        let mut det_used = alloc::vec![false; frame.detections.len()];
        let mut next_active = Vec::new();
        for (_, ai, di) in pairs {
            if track_used[ai] || det_used[di] {
                continue;
            }
            track_used[ai] = true;
            det_used[di] = true;
            let ti = active[ai];
            let d = &frame.detections[di];
            tracks[ti].samples.push(TrackSample { frame_index: frame.frame_index, bbox: d.bbox, confidence: d.confidence });
            next_active.push(ti);
        }
        for (di, d) in frame.detections.iter().enumerate() {
            if det_used[di] {
                continue;
            }
            next_active.push(tracks.len());
            tracks.push(Track {
                track_id: format!("track-{}", tracks.len() + 1),
                node_id: None,
                samples: alloc::vec![TrackSample { frame_index: frame.frame_index, bbox: d.bbox, confidence: d.confidence }],
            });
        }
        next_active.sort_unstable();
        active = next_active;
        last_frame = Some(frame.frame_index);
    }
    tracks
}

/// Token containment in either direction between a node label and a
/// detector prompt.
pub fn prompt_matches(label: &str, prompt: &str) -> bool {
    let a = content_tokens(label);
    let b = content_tokens(prompt);
    if a.is_empty() || b.is_empty() {
        return false;
    }
    a.iter().all(|t| b.contains(t)) || b.iter().all(|t| a.contains(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundingParams {
    pub confidence_threshold: f64,
    pub iou_threshold: f64,
}

impl Default for GroundingParams {
    fn default() -> Self {
        GroundingParams { confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD, iou_threshold: DEFAULT_IOU_THRESHOLD }
    }
}

/// Longest track formed by the detections prompted with this node's label,
/// or `None` when nothing matches. The track carries the node's id.
///
/// `frames` lists every sampled frame of the window so that gaps end
/// tracks.
pub fn ground_dynamic(
    node: &EntityNode,
    detections: &[Detection],
    frames: impl IntoIterator<Item = u64>,
    taxonomy: &Taxonomy,
    params: &GroundingParams,
) -> Result<Option<Track>, GroundingError> {
    let class = taxonomy.resolve_class(&node.class_id).map_err(|_| GroundingError::NotDynamic(node.class_id.clone()))?;
    if class.groundable_as != Groundability::Dynamic {
        return Err(GroundingError::NotDynamic(node.class_id.clone()));
    }
    let matching: Vec<Detection> = detections
        .iter()
        .filter(|d| d.confidence >= params.confidence_threshold && prompt_matches(&node.canonical_label, &d.class_prompt))
        .cloned()
        .collect();
    if matching.is_empty() {
        return Ok(None);
    }
    let tracks = link_tracks(&group_by_frame(&matching, frames), params.iou_threshold);
    // longest; earliest first frame on ties
    let best = tracks.into_iter().fold(None::<Track>, |best, t| match best {
        Some(b) if b.samples.len() >= t.samples.len() => Some(b),
        _ => Some(t),
    });
    Ok(best.map(|mut t| {
        t.track_id = format!("{}-{}", node.node_id, t.track_id);
        t.node_id = Some(node.node_id.clone());
        t
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutMask {
    pub class_id: String,
    /// Polygons of `[x, y]` vertices in normalized image coordinates.
    pub geometry: Vec<Vec<[f64; 2]>>,
    pub reference_frame: u64,
}

impl LayoutMask {
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), GroundingError> {
        let class = taxonomy.resolve_class(&self.class_id).map_err(|_| GroundingError::NotStatic(self.class_id.clone()))?;
        if class.groundable_as != Groundability::Static {
            return Err(GroundingError::NotStatic(self.class_id.clone()));
        }
        if self.geometry.is_empty() {
            return Err(GroundingError::BadGeometry(String::from("no polygons")));
        }
        for poly in &self.geometry {
            if poly.len() < 3 {
                return Err(GroundingError::BadGeometry(format!("polygon with {} vertices", poly.len())));
            }
            if poly.iter().flatten().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
                return Err(GroundingError::BadGeometry(String::from("vertex outside the unit square")));
            }
        }
        Ok(())
    }
}

/// Masks whose class appears among the graph's node classes.
pub fn active_masks(masks: &[LayoutMask], graph: &KnowledgeGraph) -> Vec<LayoutMask> {
    let classes = graph.classes();
    masks.iter().filter(|m| classes.contains(m.class_id.as_str())).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSample {
    pub frame_index: u64,
    pub detection_count: usize,
}

/// Frame with the fewest detections; earliest frame index on ties.
pub fn select_reference_frame(samples: &[FrameSample]) -> Result<u64, GroundingError> {
    samples
        .iter()
        .min_by(|a, b| a.detection_count.cmp(&b.detection_count).then(a.frame_index.cmp(&b.frame_index)))
        .map(|s| s.frame_index)
        .ok_or(GroundingError::NoSamples)
}

/// `n` frame indices spread uniformly over `[0, total_frames)`, each at the
/// center of its stride.
pub fn uniform_frames(total_frames: u64, n: usize) -> Vec<u64> {
    if total_frames == 0 || n == 0 {
        return Vec::new();
    }
    let n = (n as u64).min(total_frames);
    let mut out: Vec<u64> = (0..n).map(|j| (2 * j + 1) * total_frames / (2 * n)).collect();
    out.dedup();
    out
}

/// Counts thresholded detections at each sampled frame.
pub fn frame_samples(frames: &[u64], detections: &[Detection], threshold: f64) -> Vec<FrameSample> {
    frames
        .iter()
        .map(|&f| FrameSample {
            frame_index: f,
            detection_count: detections.iter().filter(|d| d.frame_index == f && d.confidence >= threshold).count(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Grounding, Span};
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn det(frame: u64, prompt: &str, cx: f64, cy: f64, conf: f64) -> Detection {
        Detection { frame_index: frame, class_prompt: prompt.into(), bbox: BBox::new(cx, cy, 0.1, 0.1).unwrap(), confidence: conf }
    }

    fn node(label: &str, class: &str) -> EntityNode {
        EntityNode {
            node_id: format!("n-{}", label.replace(' ', "-")),
            class_id: class.into(),
            canonical_label: label.into(),
            merged_spans: vec![Span::new(0, label.len())],
            attributes: BTreeMap::new(),
            attribute_conflicts: vec![],
            grounding: Grounding::Ungrounded,
        }
    }

    #[test]
    fn filter_examples() {
        let ds = [det(0, "car", 0.5, 0.5, 0.9), det(0, "car", 0.5, 0.5, 0.65), det(0, "car", 0.5, 0.5, 0.64)];
        let kept = filter_detections(&ds, 0.65);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[1].confidence, 0.65);
        assert!(filter_detections(&[], 0.65).is_empty());
        assert_eq!(filter_detections(&ds, 0.0), ds.to_vec());
    }

    #[test]
    fn reference_frame_examples() {
        let s = |f, c| FrameSample { frame_index: f, detection_count: c };
        assert_eq!(select_reference_frame(&[s(10, 5), s(40, 2), s(70, 8)]), Ok(40));
        assert_eq!(select_reference_frame(&[s(10, 3), s(40, 3)]), Ok(10));
        assert_eq!(select_reference_frame(&[s(7, 9)]), Ok(7));
        assert_eq!(select_reference_frame(&[]), Err(GroundingError::NoSamples));
    }

    #[test]
    fn iou_examples() {
        let a = BBox::new(0.5, 0.5, 0.2, 0.2).unwrap();
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &BBox::new(0.1, 0.1, 0.1, 0.1).unwrap()), 0.0);
        // two equal boxes sharing half their area: 0.5 / (1 + 1 - 0.5)
        let b = BBox::new(0.6, 0.5, 0.2, 0.2).unwrap();
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bbox_bounds() {
        assert!(BBox::new(0.05, 0.5, 0.1, 0.1).is_ok());
        assert!(BBox::new(0.01, 0.5, 0.1, 0.1).is_err());
        assert!(BBox::new(0.5, 0.5, 0.0, 0.1).is_err());
    }

    #[test]
    fn drifting_box_forms_one_track() {
        let frames: Vec<FrameDetections> = (0..10)
            .map(|f| FrameDetections { frame_index: f, detections: vec![det(f, "car", 0.3 + 0.02 * f as f64, 0.5, 0.9)] })
            .collect();
        let tracks = link_tracks(&frames, 0.3);
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].samples.len(), 10);
    }

    #[test]
    fn far_boxes_form_parallel_tracks() {
        let frames: Vec<FrameDetections> = (0..5)
            .map(|f| FrameDetections { frame_index: f, detections: vec![det(f, "car", 0.2, 0.2, 0.9), det(f, "bus", 0.8, 0.8, 0.9)] })
            .collect();
        let tracks = link_tracks(&frames, 0.3);
        assert_eq!(tracks.len(), 2);
        assert!(tracks.iter().all(|t| t.samples.len() == 5));
    }

    #[test]
    fn gap_ends_track() {
        let frames: Vec<FrameDetections> = (0..6)
            .map(|f| FrameDetections { frame_index: f, detections: if f == 3 { vec![] } else { vec![det(f, "car", 0.5, 0.5, 0.9)] } })
            .collect();
        let tracks = link_tracks(&frames, 0.3);
        assert_eq!(tracks.iter().map(|t| t.samples.len()).collect::<Vec<_>>(), [3, 2]);
    }

    #[test]
    fn ground_dynamic_examples() {
        let t = Taxonomy::default();
        let suv = node("dark SUV", "motorized_vehicle");
        let dets: Vec<Detection> = (0..30).map(|f| det(f, "dark SUV", 0.2 + 0.01 * f as f64, 0.5, 0.8)).collect();
        let track = ground_dynamic(&suv, &dets, 0..30, &t, &GroundingParams::default()).unwrap().unwrap();
        assert_eq!(track.samples.len(), 30);
        assert_eq!(track.node_id.as_deref(), Some(suv.node_id.as_str()));

        let other: Vec<Detection> = (0..30).map(|f| det(f, "white bus", 0.5, 0.5, 0.9)).collect();
        assert_eq!(ground_dynamic(&suv, &other, 0..30, &t, &GroundingParams::default()).unwrap(), None);

        let cw = node("crosswalk", "crosswalk");
        assert!(matches!(ground_dynamic(&cw, &dets, 0..30, &t, &GroundingParams::default()), Err(GroundingError::NotDynamic(_))));
    }

    #[test]
    fn prompt_matching_is_token_containment() {
        assert!(prompt_matches("dark SUV", "the dark SUV"));
        assert!(prompt_matches("the man on a bike", "man bike"));
        assert!(!prompt_matches("dark SUV", "white SUV"));
    }

    fn mask(class: &str) -> LayoutMask {
        LayoutMask { class_id: class.into(), geometry: vec![vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.5]]], reference_frame: 40 }
    }

    #[test]
    fn active_mask_examples() {
        let t = Taxonomy::default();
        let masks = [mask("crosswalk"), mask("sidewalk"), mask("pole")];
        let g = KnowledgeGraph { nodes: vec![node("crosswalk", "crosswalk"), node("pedestrian", "pedestrian")], ..Default::default() };
        assert_eq!(active_masks(&masks, &g), vec![mask("crosswalk")]);
        assert!(active_masks(&masks, &KnowledgeGraph::default()).is_empty());
        let all = KnowledgeGraph { nodes: vec![node("pole", "pole"), node("sidewalk", "sidewalk"), node("crosswalk", "crosswalk")], ..Default::default() };
        assert_eq!(active_masks(&masks, &all), masks.to_vec());
        assert!(mask("crosswalk").validate(&t).is_ok());
        assert!(matches!(mask("pedestrian").validate(&t), Err(GroundingError::NotStatic(_))));
    }

    #[test]
    fn uniform_sampling() {
        assert_eq!(uniform_frames(100, 10), [5, 15, 25, 35, 45, 55, 65, 75, 85, 95]);
        assert_eq!(uniform_frames(3, 10), [0, 1, 2]);
        assert!(uniform_frames(0, 10).is_empty());
    }

    proptest! {
        #[test]
        fn linking_conserves_detections(frames in prop::collection::vec(prop::collection::vec((0.1f64..0.9, 0.1f64..0.9, 0.0f64..1.0), 0..5), 1..15)) {
            let fd: Vec<FrameDetections> = frames.iter().enumerate().map(|(f, ds)| FrameDetections {
                frame_index: f as u64,
                detections: filter_detections(&ds.iter().map(|(x, y, c)| det(f as u64, "car", *x, *y, *c)).collect::<Vec<_>>(), 0.65),
            }).collect();
            let tracks = link_tracks(&fd, 0.3);
            let total: usize = fd.iter().map(|f| f.detections.len()).sum();
            prop_assert_eq!(tracks.iter().map(|t| t.samples.len()).sum::<usize>(), total);
            for t in &tracks {
                prop_assert!(t.samples.windows(2).all(|w| w[0].frame_index < w[1].frame_index));
                prop_assert!(t.samples.iter().all(|s| s.confidence >= 0.65));
            }
            let _ = "car".to_string();
        }
    }
}
