//! Loading artifact files into a [`CorpusStore`].
//!
//! Video and caption files are all-or-nothing: the first bad record aborts
//! the file and the store is left untouched. Detection and mask files are
//! filtered record by record and report what they rejected.

use atlas_core::{CorpusError, CorpusStore, Gateway, Taxonomy};
use serde::Serialize;

use crate::formats::{read_mask_document, read_records, CaptionRecord, DetectionRecord, FormatError, RecordKind, VideoRecord};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("line {line}: {source}")]
    Record { line: usize, source: CorpusError },
}

impl IngestError {
    pub fn line(&self) -> usize {
        match self {
            IngestError::Format(e) => e.line,
            IngestError::Record { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    /// Line of the record, or 1-based position in a mask document.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct IngestReport {
    /// Records inserted or replaced.
    pub count: usize,
    pub rejected: Vec<Rejection>,
}

fn invalid(line: usize, message: String) -> IngestError {
    IngestError::Format(FormatError { line, message })
}

pub fn ingest_videos(store: &mut CorpusStore, text: &str) -> Result<IngestReport, IngestError> {
    let records: Vec<(usize, VideoRecord)> = read_records(text, RecordKind::Videos)?;
    let mut next = store.clone();
    for (line, r) in &records {
        let meta = r.clone().into_meta().map_err(|m| invalid(*line, m))?;
        next.add_video(meta).map_err(|source| IngestError::Record { line: *line, source })?;
    }
    *store = next;
    Ok(IngestReport { count: records.len(), rejected: Vec::new() })
}

/// One descriptor per record; existing `(video, clip)` keys are replaced.
pub fn ingest_captions(store: &mut CorpusStore, text: &str, gateway: &Gateway) -> Result<IngestReport, IngestError> {
    let records: Vec<(usize, CaptionRecord)> = read_records(text, RecordKind::Captions)?;
    let mut next = store.clone();
    for (line, r) in &records {
        let (descriptor, embedding) = r.clone().into_parts().map_err(|m| invalid(*line, m))?;
        next.ingest_caption(descriptor, embedding, gateway).map_err(|source| IngestError::Record { line: *line, source })?;
    }
    *store = next;
    Ok(IngestReport { count: records.len(), rejected: Vec::new() })
}

pub fn ingest_detections(store: &mut CorpusStore, text: &str) -> Result<IngestReport, IngestError> {
    let records: Vec<(usize, DetectionRecord)> = read_records(text, RecordKind::Detections)?;
    let mut report = IngestReport::default();
    for (line, r) in records {
        let (video_id, det) = r.into_detection();
        match store.add_detection(&video_id, det) {
            Ok(_) => report.count += 1,
            Err(e) => report.rejected.push(Rejection { line, message: e.to_string() }),
        }
    }
    Ok(report)
}

pub fn ingest_masks(store: &mut CorpusStore, text: &str, taxonomy: &Taxonomy) -> Result<IngestReport, IngestError> {
    let doc = read_mask_document(text)?;
    if store.video(&doc.video_id).is_none() {
        return Err(IngestError::Record { line: 1, source: CorpusError::UnknownVideo(doc.video_id) });
    }
    let mut report = IngestReport::default();
    for (i, m) in doc.masks.into_iter().enumerate() {
        match store.add_mask(&doc.video_id, m, taxonomy) {
            Ok(_) => report.count += 1,
            Err(e) => report.rejected.push(Rejection { line: i + 1, message: e.to_string() }),
        }
    }
    Ok(report)
}
