//! Line-delimited record files and per-video mask documents.
//!
//! Every record file opens with a header line naming its format and
//! version, e.g. `{"format":"atlas-captions","version":1}`; each following
//! non-blank line is one JSON record.

use std::collections::BTreeMap;

use atlas_core::grounding::{BBox, Detection, LayoutMask};
use atlas_core::{ClipDescriptor, Embedding, Millis, VideoMeta};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

impl FormatError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        FormatError { line, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Videos,
    Captions,
    Detections,
}

impl RecordKind {
    pub fn format_name(self) -> &'static str {
        match self {
            RecordKind::Videos => "atlas-videos",
            RecordKind::Captions => "atlas-captions",
            RecordKind::Detections => "atlas-detections",
        }
    }
}

pub const MASKS_FORMAT: &str = "atlas-masks";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: String,
    pub version: u32,
}

fn check_header(format: &str, version: u32, expected: &str, line: usize) -> Result<(), FormatError> {
    if format != expected {
        return Err(FormatError::at(line, format!("expected format `{expected}`, found `{format}`")));
    }
    if version != FORMAT_VERSION {
        return Err(FormatError::at(line, format!("unsupported version {version} (this build reads {FORMAT_VERSION})")));
    }
    Ok(())
}

/// Parses a record file into `(line number, record)` pairs. Line numbers
/// are 1-based and count the header.
pub fn read_records<T: DeserializeOwned>(text: &str, kind: RecordKind) -> Result<Vec<(usize, T)>, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| FormatError::at(1, "missing header line"))?;
    let header: Header = serde_json::from_str(header).map_err(|e| FormatError::at(hline, format!("bad header: {e}")))?;
    check_header(&header.format, header.version, kind.format_name(), hline)?;
    lines
        .map(|(n, l)| serde_json::from_str(l).map(|r| (n, r)).map_err(|e| FormatError::at(n, e.to_string())))
        .collect()
}

pub fn write_records<T: Serialize>(kind: RecordKind, records: &[T]) -> String {
    let header = Header { format: kind.format_name().to_string(), version: FORMAT_VERSION };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptionRecord {
    pub video_id: String,
    pub clip_index: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub description: String,
    /// Co-supplied embedding; recomputed by the embedder when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

impl CaptionRecord {
    pub fn into_parts(self) -> Result<(ClipDescriptor, Option<Embedding>), String> {
        let secs = |v: f64, name: &str| Millis::from_secs_f64(v).ok_or_else(|| format!("{name} must be a non-negative number"));
        let start = secs(self.start_s, "start_s")?;
        let end = secs(self.end_s, "end_s")?;
        if start >= end {
            return Err(format!("start_s {} must be before end_s {}", self.start_s, self.end_s));
        }
        if self.description.trim().is_empty() {
            return Err("empty description".to_string());
        }
        let embedding = self.embedding.map(Embedding::try_from).transpose().map_err(|e| e.to_string())?;
        let d = ClipDescriptor {
            video_id: self.video_id,
            clip_index: self.clip_index,
            start,
            end,
            description: self.description,
            extra: self.extra,
        };
        Ok((d, embedding))
    }

    pub fn from_descriptor(d: &ClipDescriptor) -> Self {
        CaptionRecord {
            video_id: d.video_id.clone(),
            clip_index: d.clip_index,
            start_s: d.start.as_secs_f64(),
            end_s: d.end.as_secs_f64(),
            description: d.description.clone(),
            embedding: None,
            extra: d.extra.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub video_id: String,
    pub frame_index: u64,
    pub class_prompt: String,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub confidence: f64,
}

impl DetectionRecord {
    pub fn into_detection(self) -> (String, Detection) {
        let d = Detection {
            frame_index: self.frame_index,
            class_prompt: self.class_prompt,
            bbox: BBox { cx: self.cx, cy: self.cy, w: self.w, h: self.h },
            confidence: self.confidence,
        };
        (self.video_id, d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoRecord {
    pub video_id: String,
    pub duration_s: f64,
    pub fps: f64,
    #[serde(default)]
    pub source_uri: String,
}

impl VideoRecord {
    pub fn into_meta(self) -> Result<VideoMeta, String> {
        let duration = Millis::from_secs_f64(self.duration_s).ok_or("duration_s must be a non-negative number")?;
        VideoMeta::new(self.video_id, duration, self.fps, self.source_uri).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskDocument {
    pub format: String,
    pub version: u32,
    pub video_id: String,
    pub masks: Vec<LayoutMask>,
}

pub fn read_mask_document(text: &str) -> Result<MaskDocument, FormatError> {
    let doc: MaskDocument = serde_json::from_str(text).map_err(|e| FormatError::at(e.line(), e.to_string()))?;
    check_header(&doc.format, doc.version, MASKS_FORMAT, 1)?;
    Ok(doc)
}

pub fn write_mask_document(video_id: &str, masks: &[LayoutMask]) -> String {
    let doc = MaskDocument { format: MASKS_FORMAT.to_string(), version: FORMAT_VERSION, video_id: video_id.to_string(), masks: masks.to_vec() };
    serde_json::to_string_pretty(&doc).expect("mask document serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAPTIONS: &str = r#"{"format":"atlas-captions","version":1}
{"video_id":"v","clip_index":1,"start_s":0,"end_s":30,"description":"a sedan"}

{"video_id":"v","clip_index":2,"start_s":25,"end_s":55,"description":"a bus"}
"#;

    #[test]
    fn reads_with_line_numbers() {
        let recs: Vec<(usize, CaptionRecord)> = read_records(CAPTIONS, RecordKind::Captions).unwrap();
        assert_eq!(recs.iter().map(|r| r.0).collect::<Vec<_>>(), [2, 4]);
        assert_eq!(recs[1].1.description, "a bus");
    }

    #[test]
    fn header_checked() {
        let err = read_records::<CaptionRecord>(CAPTIONS, RecordKind::Detections).unwrap_err();
        assert_eq!(err.line, 1);
        let newer = CAPTIONS.replace("\"version\":1", "\"version\":2");
        assert!(read_records::<CaptionRecord>(&newer, RecordKind::Captions).unwrap_err().message.contains("unsupported version 2"));
        assert!(read_records::<CaptionRecord>("", RecordKind::Captions).is_err());
    }

    #[test]
    fn schema_violation_reports_line() {
        let bad = format!("{CAPTIONS}{{\"video_id\":\"v\",\"clip_index\":3}}\n");
        let err = read_records::<CaptionRecord>(&bad, RecordKind::Captions).unwrap_err();
        assert_eq!(err.line, 5);
        let unknown = format!("{CAPTIONS}{{\"video_id\":\"v\",\"clip_index\":3,\"start_s\":0,\"end_s\":1,\"description\":\"x\",\"colour\":1}}\n");
        assert!(read_records::<CaptionRecord>(&unknown, RecordKind::Captions).is_err());
    }

    #[test]
    fn caption_window_checked() {
        let r = CaptionRecord { video_id: "v".into(), clip_index: 1, start_s: 30.0, end_s: 30.0, description: "x".into(), embedding: None, extra: BTreeMap::new() };
        assert!(r.into_parts().unwrap_err().contains("before"));
    }

    #[test]
    fn round_trip() {
        let recs: Vec<CaptionRecord> = read_records(CAPTIONS, RecordKind::Captions).unwrap().into_iter().map(|r| r.1).collect();
        let text = write_records(RecordKind::Captions, &recs);
        let again: Vec<CaptionRecord> = read_records(&text, RecordKind::Captions).unwrap().into_iter().map(|r| r.1).collect();
        assert_eq!(recs, again);
        let m = LayoutMask { class_id: "crosswalk".into(), geometry: vec![vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]], reference_frame: 3 };
        let doc = read_mask_document(&write_mask_document("v", &[m.clone()])).unwrap();
        assert_eq!(doc.masks, [m]);
    }
}
