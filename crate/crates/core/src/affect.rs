//! The dimensional emotion space: valence × arousal (dominance carried but
//! never measured).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RATING_MIN: f64 = 1.0;
pub const RATING_MAX: f64 = 9.0;

/// Distance below which similarity saturates at `1 / cap`.
pub const DEFAULT_SINGULARITY_CAP: f64 = 1e-6;

pub(crate) fn check_rating(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && (RATING_MIN..=RATING_MAX).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Range { field, value })
    }
}

pub(crate) fn check_sd(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::NegativeSd { field, value })
    }
}

pub(crate) fn check_positive(field: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && !value.is_nan() {
        Ok(value)
    } else {
        Err(Error::Threshold { field, value })
    }
}

/// A coordinate in the valence/arousal plane, each axis rated on `[1, 9]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct EmotionPoint {
    val: f64,
    ar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dom: Option<f64>,
}

#[derive(Deserialize)]
struct RawPoint {
    val: f64,
    ar: f64,
    #[serde(default)]
    dom: Option<f64>,
}

impl TryFrom<RawPoint> for EmotionPoint {
    type Error = Error;

    fn try_from(raw: RawPoint) -> Result<Self> {
        let p = EmotionPoint::new(raw.val, raw.ar)?;
        match raw.dom {
            Some(d) => p.with_dominance(d),
            None => Ok(p),
        }
    }
}

impl EmotionPoint {
    pub fn new(val: f64, ar: f64) -> Result<Self> {
        Ok(Self {
            val: check_rating("val", val)?,
            ar: check_rating("ar", ar)?,
            dom: None,
        })
    }

    pub fn with_dominance(self, dom: f64) -> Result<Self> {
        Ok(Self {
            dom: Some(check_rating("dom", dom)?),
            ..self
        })
    }

    pub fn val(&self) -> f64 {
        self.val
    }

    pub fn ar(&self) -> f64 {
        self.ar
    }

    pub fn dom(&self) -> Option<f64> {
        self.dom
    }

    /// Euclidean distance over (val, ar).
    pub fn distance(&self, other: &EmotionPoint) -> f64 {
        emotion_distance(self, other)
    }
}

/// Gaussian summary of an annotation experiment: mean and SD per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RatingRecord")]
pub struct AffectiveRating {
    val_mean: f64,
    val_sd: f64,
    ar_mean: f64,
    ar_sd: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dom_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dom_sd: Option<f64>,
}

/// Unvalidated wire form of [`AffectiveRating`].
#[derive(Debug, Deserialize)]
pub(crate) struct RatingRecord {
    val_mean: f64,
    val_sd: f64,
    ar_mean: f64,
    ar_sd: f64,
    #[serde(default)]
    dom_mean: Option<f64>,
    #[serde(default)]
    dom_sd: Option<f64>,
}

impl TryFrom<RatingRecord> for AffectiveRating {
    type Error = Error;

    fn try_from(raw: RatingRecord) -> Result<Self> {
        let r = AffectiveRating::new(raw.val_mean, raw.val_sd, raw.ar_mean, raw.ar_sd)?;
        match (raw.dom_mean, raw.dom_sd) {
            (Some(m), Some(sd)) => r.with_dominance(m, sd),
            (None, None) => Ok(r),
            _ => Err(Error::Invalid {
                field: "dom_mean",
                message: "dom_mean and dom_sd must be given together".into(),
            }),
        }
    }
}

impl AffectiveRating {
    pub fn new(val_mean: f64, val_sd: f64, ar_mean: f64, ar_sd: f64) -> Result<Self> {
        Ok(Self {
            val_mean: check_rating("val_mean", val_mean)?,
            val_sd: check_sd("val_sd", val_sd)?,
            ar_mean: check_rating("ar_mean", ar_mean)?,
            ar_sd: check_sd("ar_sd", ar_sd)?,
            dom_mean: None,
            dom_sd: None,
        })
    }

    pub fn with_dominance(self, dom_mean: f64, dom_sd: f64) -> Result<Self> {
        Ok(Self {
            dom_mean: Some(check_rating("dom_mean", dom_mean)?),
            dom_sd: Some(check_sd("dom_sd", dom_sd)?),
            ..self
        })
    }

    /// A point rating with zero spread.
    pub fn exact(point: EmotionPoint) -> Self {
        Self::from_point(point, 0.0, 0.0)
    }

    pub(crate) fn from_point(point: EmotionPoint, val_sd: f64, ar_sd: f64) -> Self {
        Self {
            val_mean: point.val,
            val_sd,
            ar_mean: point.ar,
            ar_sd,
            dom_mean: point.dom,
            dom_sd: point.dom.map(|_| 0.0),
        }
    }

    pub fn val_mean(&self) -> f64 {
        self.val_mean
    }

    pub fn val_sd(&self) -> f64 {
        self.val_sd
    }

    pub fn ar_mean(&self) -> f64 {
        self.ar_mean
    }

    pub fn ar_sd(&self) -> f64 {
        self.ar_sd
    }

    pub fn dom_mean(&self) -> Option<f64> {
        self.dom_mean
    }

    pub fn dom_sd(&self) -> Option<f64> {
        self.dom_sd
    }

    /// Projection to the emotion plane (means only).
    pub fn point(&self) -> EmotionPoint {
        EmotionPoint {
            val: self.val_mean,
            ar: self.ar_mean,
            dom: self.dom_mean,
        }
    }
}

/// A radius in emotion space; membership is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmotionNeighborhood {
    eps_emo: f64,
}

impl EmotionNeighborhood {
    pub fn new(eps_emo: f64) -> Result<Self> {
        Ok(Self {
            eps_emo: check_positive("eps_emo", eps_emo)?,
        })
    }

    pub fn eps_emo(&self) -> f64 {
        self.eps_emo
    }

    pub fn contains(&self, a: &EmotionPoint, b: &EmotionPoint) -> bool {
        within_neighborhood(a, b, self)
    }
}

pub fn emotion_distance(a: &EmotionPoint, b: &EmotionPoint) -> f64 {
    let dv = a.val - b.val;
    let da = a.ar - b.ar;
    (dv * dv + da * da).sqrt()
}

/// `1 / max(d, DEFAULT_SINGULARITY_CAP)`.
pub fn emotion_similarity(a: &EmotionPoint, b: &EmotionPoint) -> f64 {
    emotion_similarity_capped(a, b, DEFAULT_SINGULARITY_CAP)
}

pub fn emotion_similarity_capped(a: &EmotionPoint, b: &EmotionPoint, cap: f64) -> f64 {
    1.0 / emotion_distance(a, b).max(cap)
}

pub fn within_neighborhood(a: &EmotionPoint, b: &EmotionPoint, nb: &EmotionNeighborhood) -> bool {
    emotion_distance(a, b) <= nb.eps_emo
}
