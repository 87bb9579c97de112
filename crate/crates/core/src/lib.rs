//! Scoring engine for sketch reasoning graphs: graph model, ontology
//! similarity, node alignment, Bloom-aware edit distance, composite scoring,
//! feedback and the revision loop.

pub mod alignment;
pub mod error;
pub mod feedback;
pub mod ged;
pub mod item;
pub mod numeric;
pub mod ontology;
pub mod scoring;
pub mod srg;

pub use alignment::{best_alignment, f_oa, pair_weight, AlignedPair, Alignment, AlignmentParams, OaNorm};
pub use error::{FeedbackError, GedError, ItemError, OntologyError, ParamError, ScoringError, SrgError};
pub use feedback::{
    deficiencies, feedback_report, hints, loop_run, render_overlay, simulated_student, Deficiency, DeficiencyKind,
    FeedbackReport, LoopTrace, OverlayScript, StudentModel, Termination, VisualHint,
};
pub use ged::{ged_beam, ged_exact, normalizer_z, EditCostModel, EditOp, GedResult, GedSolver};
pub use item::{FeedbackParams, HintTemplate, ItemMeta, ItemSpec, PhiKey, PhiMap};
pub use ontology::{load_ontology, Ontology};
pub use scoring::{band, calibrate, dominant_bloom, similarity, Band, ScoringParams, SimilarityBreakdown};
pub use srg::{parse_srg, serialize_srg, validate_against_ontology, BloomLevel, Evidence, Region, Srg, SrgEdge, SrgNode, SrgRole};
