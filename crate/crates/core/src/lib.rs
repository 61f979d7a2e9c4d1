//! Clone-based whole-genome assembly.
//!
//! The pipeline takes clone (BAC) metadata, validated fragment overlaps and
//! orientation evidence, conservatively lays fragments out into subcontigs,
//! repairs the clone graph until it is an interval graph, and then orders and
//! orients subcontigs into contigs. A simulator with full ground truth drives
//! the end-to-end tests.

pub mod clone_graph;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod interval;
pub mod layout;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod scaffold;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    Chromosome, Clone, CloneId, Dataset, EndMarker, FragId, Fragment, Orientation, OrientationPair,
    OverlapKind, Phase, PipelineParams, Strand, ValidOverlap,
};
