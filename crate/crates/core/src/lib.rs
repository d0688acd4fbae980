//! Allocation-only core of the urban clip atlas.
//!
//! Everything here is pure computation over in-memory values: the
//! crossroad-interaction taxonomy, clip segmentation, the exact cosine index,
//! query screening, deterministic mock model backends, knowledge-graph
//! construction, visual grounding and the answer pipeline that ties them
//! together. IO, file formats, remote model transport and the HTTP service
//! live in the `atlas` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod gateway;
pub mod graph;
pub mod grounding;
pub mod mock;
pub mod pipeline;
pub mod prompts;
pub mod screen;
pub mod segmentation;
pub mod taxonomy;
pub mod text;
pub mod vector;

pub use corpus::{CorpusError, CorpusStore, PreprocessReport};
pub use gateway::{Gateway, GatewayError, Role};
pub use graph::{EntityMention, EntityNode, KnowledgeGraph, RelationEdge};
pub use grounding::{BBox, Detection, LayoutMask, Track};
pub use pipeline::{AugmentedAnswer, Pipeline, PipelineError, QuerySession, Stage};
pub use segmentation::{ClipWindow, Millis, SegmentationParams, VideoMeta};
pub use taxonomy::Taxonomy;
pub use vector::{ClipDescriptor, ClipKey, Embedding, RankedHit, VectorIndex};
