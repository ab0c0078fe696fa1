//! Question-answer sessions between the estimator and an annotation expert.
//!
//! ```text
//! proposed --accept/adjust--> committed
//!          --reject(last)---> manual_required
//!          --abandon--------> abandoned
//!          --reject---------> proposed
//! ```
//!
//! The three right-hand states are terminal.

use serde::{Deserialize, Serialize};

use crate::affect::{AffectiveRating, EmotionPoint};
use crate::corpus::{Corpus, Provenance, StimulusDocument};
use crate::error::{Error, Result};
use crate::estimator::{estimate, CandidateAnnotation, EstimationConfig};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Proposed,
    Committed,
    ManualRequired,
    Abandoned,
}

impl SessionState {
    pub fn is_terminal(self) -> bool {
        self != SessionState::Proposed
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Proposed => "proposed",
            SessionState::Committed => "committed",
            SessionState::ManualRequired => "manual_required",
            SessionState::Abandoned => "abandoned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum FeedbackEvent {
    Accept { index: usize },
    Reject { index: usize },
    Adjust { val: f64, ar: f64 },
    Abandon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    /// 1-based, increases by one per applied event.
    pub seq: u64,
    #[serde(flatten)]
    pub event: FeedbackEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSession {
    pub session_id: String,
    pub target: StimulusDocument,
    pub candidates: Vec<CandidateAnnotation>,
    pub state: SessionState,
    pub history: Vec<FeedbackRecord>,
    pub used_fallback: bool,
    /// Corpus revision the candidates were computed from.
    pub corpus_revision: u64,
}

/// Opens a session for an unannotated target.
///
/// With no annotated references the session starts in `manual_required`.
pub fn open_session(
    session_id: impl Into<String>,
    target: StimulusDocument,
    corpus: &Corpus,
    taxonomy: &Taxonomy,
    cfg: &EstimationConfig,
) -> Result<AnnotationSession> {
    if target.is_annotated() {
        return Err(Error::AlreadyAnnotated(target.id().to_string()));
    }
    let (candidates, used_fallback, state) = match estimate(target.profile(), corpus, taxonomy, cfg) {
        Ok(est) if !est.candidates.is_empty() => (est.candidates, est.used_fallback, SessionState::Proposed),
        Ok(_) | Err(Error::NoReferenceAnnotations) => (Vec::new(), false, SessionState::ManualRequired),
        Err(e) => return Err(e),
    };
    Ok(AnnotationSession {
        session_id: session_id.into(),
        target,
        candidates,
        state,
        history: Vec::new(),
        used_fallback,
        corpus_revision: corpus.revision(),
    })
}

/// Functional form of [`AnnotationSession::apply`].
pub fn apply_feedback(mut session: AnnotationSession, event: FeedbackEvent) -> Result<AnnotationSession> {
    session.apply(event)?;
    Ok(session)
}

impl AnnotationSession {
    /// Sequence number of the last applied event (0 before any).
    pub fn seq(&self) -> u64 {
        self.history.last().map_or(0, |r| r.seq)
    }

    /// Applies one event and returns its sequence number. A failed event
    /// leaves the session untouched.
    pub fn apply(&mut self, event: FeedbackEvent) -> Result<u64> {
        if self.state.is_terminal() {
            return Err(Error::SessionClosed(self.state.as_str()));
        }
        let check = |index: usize| {
            if index < self.candidates.len() {
                Ok(index)
            } else {
                Err(Error::CandidateIndex {
                    index,
                    len: self.candidates.len(),
                })
            }
        };
        match event {
            FeedbackEvent::Accept { index } => {
                let c = &self.candidates[check(index)?];
                let rating = AffectiveRating::from_point(c.emotion, c.val_sd, c.ar_sd);
                self.target = self.target.clone().with_rating(rating, Provenance::Estimated);
                self.state = SessionState::Committed;
            }
            FeedbackEvent::Adjust { val, ar } => {
                let point = EmotionPoint::new(val, ar)?;
                self.target = self
                    .target
                    .clone()
                    .with_rating(AffectiveRating::exact(point), Provenance::Manual);
                self.state = SessionState::Committed;
            }
            FeedbackEvent::Reject { index } => {
                self.candidates.remove(check(index)?);
                let total: f64 = self.candidates.iter().map(|c| c.likelihood).sum();
                for c in &mut self.candidates {
                    c.likelihood /= total;
                }
                if self.candidates.is_empty() {
                    self.state = SessionState::ManualRequired;
                }
            }
            FeedbackEvent::Abandon => self.state = SessionState::Abandoned,
        }
        let seq = self.seq() + 1;
        self.history.push(FeedbackRecord { seq, event });
        Ok(seq)
    }

    /// The annotated target, once committed.
    pub fn committed(&self) -> Option<&StimulusDocument> {
        (self.state == SessionState::Committed).then_some(&self.target)
    }
}
