//! The bundled demonstration corpus: two short intersection videos with
//! handwritten clip descriptions, detector output and layout masks.

use atlas_core::{CorpusStore, Gateway, SegmentationParams, Taxonomy};

use crate::ingest::{ingest_captions, ingest_detections, ingest_masks, ingest_videos, IngestError};

pub const VIDEOS: &str = include_str!("../fixtures/videos.jsonl");
pub const CAPTIONS: &str = include_str!("../fixtures/captions.jsonl");
pub const DETECTIONS: &str = include_str!("../fixtures/detections.jsonl");
pub const MASKS: [&str; 2] = [
    include_str!("../fixtures/masks_crossroad_north.json"),
    include_str!("../fixtures/masks_crossroad_south.json"),
];
pub const SCREENING: &str = include_str!("../fixtures/screening.json");

/// Loads the fixture corpus with default segmentation, embedding captions
/// through `gateway`.
pub fn fixture_corpus(taxonomy: &Taxonomy, gateway: &Gateway) -> Result<CorpusStore, IngestError> {
    let mut store = CorpusStore::new(SegmentationParams::default());
    ingest_videos(&mut store, VIDEOS)?;
    ingest_captions(&mut store, CAPTIONS, gateway)?;
    ingest_detections(&mut store, DETECTIONS)?;
    for m in MASKS {
        ingest_masks(&mut store, m, taxonomy)?;
    }
    Ok(store)
}

#[derive(Debug, Clone, serde::Deserialize)]
pub struct ScreeningFixture {
    pub refused: Vec<String>,
    pub allowed: Vec<String>,
}

pub fn screening() -> ScreeningFixture {
    serde_json::from_str(SCREENING).expect("screening fixture parses")
}
