//! Indexed clip corpus plus the per-video detections and layout masks used
//! for grounding.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::gateway::{Gateway, GatewayError};
use crate::grounding::{frame_samples, select_reference_frame, uniform_frames, Detection, GroundingError, LayoutMask};
use crate::segmentation::{clip_count, clip_start, segment, Millis, SegmentationError, SegmentationParams, VideoMeta};
use crate::taxonomy::Taxonomy;
use crate::vector::{ClipDescriptor, ClipKey, Embedding, VectorError, VectorIndex};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("unknown video `{0}`")]
    UnknownVideo(String),
    #[error("video `{0}` is already indexed with different metadata")]
    VideoConflict(String),
    #[error("clip {key} window {start}s-{end}s does not match segmentation ({expected_start}s-{expected_end}s)")]
    WindowMismatch { key: ClipKey, start: Millis, end: Millis, expected_start: Millis, expected_end: Millis },
    #[error("clip {0} is beyond the end of its video")]
    ClipOutOfRange(ClipKey),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Dedup key: frame, prompt and the raw bits of the five numeric fields.
type DetectionKey = (u64, String, [u64; 5]);

fn detection_key(d: &Detection) -> DetectionKey {
    let b = &d.bbox;
    (d.frame_index, d.class_prompt.clone(), [b.cx.to_bits(), b.cy.to_bits(), b.w.to_bits(), b.h.to_bits(), d.confidence.to_bits()])
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusStore {
    params: SegmentationParams,
    videos: BTreeMap<String, VideoMeta>,
    index: VectorIndex,
    detections: BTreeMap<String, BTreeMap<DetectionKey, Detection>>,
    masks: BTreeMap<String, Vec<LayoutMask>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipFailure {
    pub clip_index: u32,
    pub error: String,
}

/// Outcome of a preprocessing run; completed clips stay indexed even when
/// others fail.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub video_id: String,
    pub indexed: Vec<u32>,
    pub failures: Vec<ClipFailure>,
}

/// One indexed clip in serialized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredClip {
    #[serde(flatten)]
    pub descriptor: ClipDescriptor,
    pub embedding: Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoDetections {
    pub video_id: String,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMasks {
    pub video_id: String,
    pub masks: Vec<LayoutMask>,
}

/// Complete serializable state of a [`CorpusStore`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusState {
    pub params: SegmentationParams,
    pub dim: Option<usize>,
    pub videos: Vec<VideoMeta>,
    pub clips: Vec<StoredClip>,
    pub detections: Vec<VideoDetections>,
    pub masks: Vec<VideoMasks>,
}

impl CorpusStore {
    pub fn new(params: SegmentationParams) -> Self {
        CorpusStore { params, ..Default::default() }
    }

    pub fn params(&self) -> &SegmentationParams {
        &self.params
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    pub fn videos(&self) -> impl Iterator<Item = &VideoMeta> {
        self.videos.values()
    }

    pub fn video(&self, id: &str) -> Option<&VideoMeta> {
        self.videos.get(id)
    }

    /// Registers a video. Re-adding identical metadata is a no-op; changing
    /// the metadata of a video that already has clips is a conflict.
    pub fn add_video(&mut self, meta: VideoMeta) -> Result<bool, CorpusError> {
        meta.validate()?;
        match self.videos.get(&meta.video_id) {
            Some(existing) if *existing == meta => return Ok(false),
            Some(_) if self.index.entries().any(|e| e.descriptor.video_id == meta.video_id) => {
                return Err(CorpusError::VideoConflict(meta.video_id))
            }
            _ => {}
        }
        self.videos.insert(meta.video_id.clone(), meta);
        Ok(true)
    }

    /// Window the segmentation assigns to clip `index` of `video_id`.
    pub fn expected_window(&self, video_id: &str, index: u32) -> Result<(Millis, Millis), CorpusError> {
        let video = self.videos.get(video_id).ok_or_else(|| CorpusError::UnknownVideo(video_id.to_string()))?;
        let key = ClipKey::new(video_id, index);
        if index == 0 || index > clip_count(video.duration, &self.params)? {
            return Err(CorpusError::ClipOutOfRange(key));
        }
        let start = clip_start(index, &self.params)?;
        let end = Millis((start.0 + self.params.clip_len().0).min(video.duration.0));
        Ok((start, end))
    }

    fn check_descriptor(&self, d: &ClipDescriptor) -> Result<(), CorpusError> {
        d.validate()?;
        let (expected_start, expected_end) = self.expected_window(&d.video_id, d.clip_index)?;
        if d.start != expected_start || d.end != expected_end {
            return Err(CorpusError::WindowMismatch { key: d.key(), start: d.start, end: d.end, expected_start, expected_end });
        }
        Ok(())
    }

    /// Inserts or replaces a clip. Returns `true` when the key was new.
    pub fn upsert_clip(&mut self, descriptor: ClipDescriptor, embedding: Embedding) -> Result<bool, CorpusError> {
        self.check_descriptor(&descriptor)?;
        let new = self.index.get(&descriptor.key()).is_none();
        self.index.upsert(descriptor, embedding)?;
        Ok(new)
    }

    /// Indexes a captioned clip, embedding its description unless a vector
    /// is supplied.
    pub fn ingest_caption(&mut self, descriptor: ClipDescriptor, embedding: Option<Embedding>, gateway: &Gateway) -> Result<bool, CorpusError> {
        self.check_descriptor(&descriptor)?;
        let embedding = match embedding {
            Some(e) => e,
            None => gateway.embed_text(&descriptor.description)?,
        };
        self.upsert_clip(descriptor, embedding)
    }

    /// Segments `video_id`, then captions, embeds and indexes every window.
    /// Per-clip backend failures are collected rather than aborting.
    pub fn run_preprocessing(&mut self, video_id: &str, gateway: &Gateway) -> Result<PreprocessReport, CorpusError> {
        let video = self.videos.get(video_id).cloned().ok_or_else(|| CorpusError::UnknownVideo(video_id.to_string()))?;
        let mut report = PreprocessReport { video_id: video_id.to_string(), ..Default::default() };
        for w in segment(&video, &self.params)? {
            let result = gateway.caption_clip(&w, &video.source_uri).and_then(|caption| {
                let e = gateway.embed_text(&caption)?;
                Ok((caption, e))
            });
            let outcome = result.map_err(CorpusError::from).and_then(|(description, e)| {
                let d = ClipDescriptor {
                    video_id: video.video_id.clone(),
                    clip_index: w.index,
                    start: w.start,
                    end: w.end(),
                    description,
                    extra: BTreeMap::new(),
                };
                self.upsert_clip(d, e)
            });
            match outcome {
                Ok(_) => report.indexed.push(w.index),
                Err(e) => report.failures.push(ClipFailure { clip_index: w.index, error: e.to_string() }),
            }
        }
        Ok(report)
    }

    /// Adds a detection for a known video. Exact duplicates are ignored, so
    /// re-ingesting a file leaves the store unchanged.
    pub fn add_detection(&mut self, video_id: &str, detection: Detection) -> Result<bool, CorpusError> {
        if !self.videos.contains_key(video_id) {
            return Err(CorpusError::UnknownVideo(video_id.to_string()));
        }
        detection.validate()?;
        let per_video = self.detections.entry(video_id.to_string()).or_default();
        Ok(per_video.insert(detection_key(&detection), detection).is_none())
    }

    /// Detections of a video whose frame index lies in `[first, last]`,
    /// ordered by frame.
    pub fn detections_in(&self, video_id: &str, first: u64, last: u64) -> Vec<Detection> {
        let Some(per_video) = self.detections.get(video_id) else { return Vec::new() };
        per_video.values().filter(|d| d.frame_index >= first && d.frame_index <= last).cloned().collect()
    }

    pub fn detection_count(&self) -> usize {
        self.detections.values().map(BTreeMap::len).sum()
    }

    /// Adds a layout mask; only static taxonomy classes are accepted.
    pub fn add_mask(&mut self, video_id: &str, mask: LayoutMask, taxonomy: &Taxonomy) -> Result<bool, CorpusError> {
        if !self.videos.contains_key(video_id) {
            return Err(CorpusError::UnknownVideo(video_id.to_string()));
        }
        mask.validate(taxonomy)?;
        let per_video = self.masks.entry(video_id.to_string()).or_default();
        if per_video.contains(&mask) {
            return Ok(false);
        }
        per_video.push(mask);
        Ok(true)
    }

    /// Layout reference frame of a video: among `samples` uniformly spaced
    /// frames, the one with the fewest detections at or above `threshold`.
    pub fn reference_frame(&self, video_id: &str, samples: usize, threshold: f64) -> Result<u64, CorpusError> {
        let v = self.videos.get(video_id).ok_or_else(|| CorpusError::UnknownVideo(video_id.to_string()))?;
        let frames = uniform_frames(v.total_frames(), samples);
        let dets: Vec<Detection> = self.detections.get(video_id).map(|d| d.values().cloned().collect()).unwrap_or_default();
        Ok(select_reference_frame(&frame_samples(&frames, &dets, threshold))?)
    }

    pub fn masks(&self, video_id: &str) -> &[LayoutMask] {
        self.masks.get(video_id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// First and last frame covered by a clip.
    pub fn clip_frames(&self, d: &ClipDescriptor) -> Option<(u64, u64)> {
        let v = self.videos.get(&d.video_id)?;
        let last = v.frame_at(d.end).saturating_sub(1).max(v.frame_at(d.start));
        Some((v.frame_at(d.start), last))
    }

    pub fn to_state(&self) -> CorpusState {
        CorpusState {
            params: self.params,
            dim: self.index.dim(),
            videos: self.videos.values().cloned().collect(),
            clips: self
                .index
                .entries()
                .map(|e| StoredClip { descriptor: e.descriptor.clone(), embedding: e.embedding.clone() })
                .collect(),
            detections: self
                .detections
                .iter()
                .map(|(v, d)| VideoDetections { video_id: v.clone(), detections: d.values().cloned().collect() })
                .collect(),
            masks: self.masks.iter().map(|(v, m)| VideoMasks { video_id: v.clone(), masks: m.clone() }).collect(),
        }
    }

    /// Rebuilds a store, re-checking every invariant.
    pub fn from_state(state: CorpusState, taxonomy: &Taxonomy) -> Result<CorpusStore, CorpusError> {
        let params = SegmentationParams::new(state.params.clip_len(), state.params.overlap())?;
        let mut store = CorpusStore::new(params);
        if let Some(d) = state.dim {
            store.index = VectorIndex::with_dim(d);
        }
        for v in state.videos {
            store.add_video(v)?;
        }
        for c in state.clips {
            store.upsert_clip(c.descriptor, c.embedding)?;
        }
        for vd in state.detections {
            for d in vd.detections {
                store.add_detection(&vd.video_id, d)?;
            }
        }
        for vm in state.masks {
            for m in vm.masks {
                store.add_mask(&vm.video_id, m, taxonomy)?;
            }
        }
        Ok(store)
    }
}

/// Human-readable summary used by CLI listings.
pub fn describe_store(store: &CorpusStore) -> String {
    format!(
        "{} video(s), {} clip(s), {} detection(s), {} mask(s)",
        store.videos.len(),
        store.index.len(),
        store.detection_count(),
        store.masks.values().map(Vec::len).sum::<usize>()
    )
}
