//! Hand to active-object association.
//!
//! Every in-contact hand projects its offset vector to an interaction point.
//! The active object is the one whose box center is nearest that point, among
//! objects whose box overlaps the hand box with positive area. Equidistant
//! candidates resolve to the higher score, then the lower id.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DetectionFrame, DetectionSet, FrameId};
use crate::geometry::{ImageSize, Point};
use crate::model::{decode_offset, HandId, HandRecord, ModelError, ObjectId, ObjectRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("frame {frame}: {source}")]
    Frame {
        frame: FrameId,
        #[source]
        source: ModelError,
    },
    #[error("frame {0}: image dimensions unknown")]
    MissingSize(FrameId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub hand: HandId,
    pub interaction_point: Point,
    pub active_object: Option<ObjectId>,
    /// Objects that passed the overlap filter.
    pub candidates_considered: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatches {
    pub frame: FrameId,
    pub results: Vec<MatchResult>,
}

impl FrameMatches {
    pub fn as_map(&self) -> BTreeMap<HandId, ObjectId> {
        self.results
            .iter()
            .filter_map(|r| r.active_object.map(|o| (r.hand, o)))
            .collect()
    }
}

/// Candidate ranking: smaller distance, then higher score, then lower id.
fn rank(a: (f64, &ObjectRecord), b: (f64, &ObjectRecord)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then_with(|| b.1.score.total_cmp(&a.1.score))
        .then_with(|| a.1.id.cmp(&b.1.id))
}

/// Resolves every in-contact hand of one frame. No-contact hands are skipped.
pub fn match_frame(
    hands: &[HandRecord],
    objects: &[ObjectRecord],
    image: ImageSize,
) -> Result<Vec<MatchResult>, ModelError> {
    hands
        .iter()
        .filter(|h| h.state.is_contact())
        .map(|hand| {
            let offset = hand.offset.ok_or(ModelError::MissingOffset(hand.id))?;
            let point = decode_offset(&hand.bbox, &offset, image);
            let candidates: Vec<_> = objects
                .iter()
                .filter(|o| o.bbox.intersects(&hand.bbox))
                .map(|o| (o.bbox.center().distance_squared(point), o))
                .collect();
            let best = candidates.iter().copied().min_by(|&a, &b| rank(a, b));
            Ok(MatchResult {
                hand: hand.id,
                interaction_point: point,
                active_object: best.map(|(_, o)| o.id),
                candidates_considered: candidates.len(),
            })
        })
        .collect()
}

fn match_detection_frame(
    frame: &DetectionFrame,
    fallback: &dyn Fn(FrameId) -> Option<ImageSize>,
) -> Result<FrameMatches, MatchError> {
    let size = frame
        .size
        .or_else(|| fallback(frame.image_id))
        .ok_or(MatchError::MissingSize(frame.image_id))?;
    let results = match_frame(&frame.hands, &frame.objects, size).map_err(|source| {
        MatchError::Frame {
            frame: frame.image_id,
            source,
        }
    })?;
    Ok(FrameMatches {
        frame: frame.image_id,
        results,
    })
}

/// Applies [`match_frame`] to every frame, preserving frame order.
///
/// `sizes` supplies dimensions for frames whose detections do not carry them.
/// Runs on the current rayon pool; output does not depend on the pool size.
pub fn match_dataset(
    dets: &DetectionSet,
    sizes: &(dyn Fn(FrameId) -> Option<ImageSize> + Sync),
) -> Result<Vec<FrameMatches>, MatchError> {
    dets.frames()
        .par_iter()
        .map(|f| match_detection_frame(f, sizes))
        .collect()
}

/// Marks matched objects active and attaches match results and quadruplets.
pub fn annotate_matches(
    dets: &DetectionSet,
    matches: &[FrameMatches],
) -> Result<DetectionSet, MatchError> {
    let mut out = dets.clone();
    for (frame, fm) in out.frames_mut().iter_mut().zip(matches) {
        debug_assert_eq!(frame.image_id, fm.frame);
        let map = fm.as_map();
        for o in &mut frame.objects {
            o.active = map.values().any(|&id| id == o.id);
        }
        frame.quadruplets = crate::model::build_quadruplets(&frame.hands, &frame.objects, &map)
            .map_err(|source| MatchError::Frame {
                frame: fm.frame,
                source,
            })?;
        frame.matches = fm.results.clone();
    }
    Ok(out)
}
