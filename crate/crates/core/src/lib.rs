//! Semantic-affective coupling for emotionally annotated multimedia
//! databases.
//!
//! Documents carry a semantic profile (a set of taxonomy terms) and, once
//! annotated, a valence/arousal rating. Two documents with different but
//! close semantics and close emotions are *coupled*. The [`estimator`] uses
//! that relation to propose ranked emotion annotations for new stimuli, and
//! [`session`] lets an expert accept, reject or correct them.

pub mod affect;
pub mod analysis;
pub mod corpus;
pub mod coupling;
pub mod error;
pub mod estimator;
pub mod evaluation;
pub mod semantic;
pub mod session;
pub mod synthetic;
pub mod taxonomy;

pub use affect::{
    emotion_distance, emotion_similarity, within_neighborhood, AffectiveRating, EmotionNeighborhood,
    EmotionPoint,
};
pub use analysis::{build_groups, group_outliers, point_coverage, GroupQuery, StimulusGroup};
pub use corpus::{load_corpus, load_manifest, save_corpus, Corpus, Provenance, StimulusDocument};
pub use coupling::{couple, coupled_clusters, coupling_matrix, CouplingThresholds, CouplingVerdict};
pub use error::{Error, Result};
pub use estimator::{estimate, CandidateAnnotation, Estimation, EstimationConfig};
pub use evaluation::{leave_one_out, LooReport};
pub use semantic::{
    profile_similarity, semantic_distance, term_similarity, within_semantic_neighborhood,
    SemanticNeighborhood, SemanticProfile,
};
pub use session::{apply_feedback, open_session, AnnotationSession, FeedbackEvent, SessionState};
pub use synthetic::{generate_synthetic, GroundTruth, GroupSpec, SyntheticCorpus, SyntheticSpec};
pub use taxonomy::Taxonomy;
