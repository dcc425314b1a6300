//! Annotation and detection containers, their file schemas, and dataset
//! bookkeeping (statistics, video-level splits, seeded subsampling).

mod schema;
mod stats;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, ImageSize};
use crate::matcher::MatchResult;
use crate::model::{
    CategoryId, ContactState, EhoiQuadruplet, HandId, HandRecord, ModelError, ObjectId,
    ObjectRecord,
};

pub use schema::{
    parse_annotations, parse_detections, read_annotations, read_detections, write_annotations,
    write_detections, BoxFormat, DetectionOptions,
};
pub use stats::{
    parse_split_spec, split, stats, subsample, CategoryCount, DatasetStats, Split, SplitOutput,
    SplitRow, SplitSpec,
};

pub type FrameId = u64;
pub type VideoId = u64;

/// Failures that make a document unusable before any semantic check.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// Semantic violations. Every variant names the offending record.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("duplicate category id {0}")]
    DuplicateCategory(CategoryId),
    #[error("duplicate category name {0:?}")]
    DuplicateCategoryName(String),
    #[error("category ids must be contiguous from 1; found id {0} out of sequence")]
    NonContiguousCategory(CategoryId),
    #[error("duplicate frame id {0}")]
    DuplicateFrame(FrameId),
    #[error("duplicate video id {0}")]
    DuplicateVideo(VideoId),
    #[error("frame {frame}: unknown video {video}")]
    UnknownVideo { frame: FrameId, video: VideoId },
    #[error("frame {frame}: image dimensions {width}x{height} are invalid")]
    BadImageSize { frame: FrameId, width: u32, height: u32 },
    #[error("annotation {0}: duplicate annotation id")]
    DuplicateAnnotation(u64),
    #[error("annotation {annotation}: unknown frame {frame}")]
    UnknownFrame { annotation: u64, frame: FrameId },
    #[error("frame {frame}: duplicate {kind} id {id}")]
    DuplicateRecord { frame: FrameId, kind: &'static str, id: u64 },
    #[error("frame {frame}, record {record}: missing attribute `{attribute}`")]
    MissingAttribute { frame: FrameId, record: u64, attribute: &'static str },
    #[error("frame {frame}, record {record}: unknown category {category}")]
    UnknownCategory { frame: FrameId, record: u64, category: CategoryId },
    #[error("frame {frame}, record {record}: {source}")]
    InvalidBox {
        frame: FrameId,
        record: u64,
        #[source]
        source: GeometryError,
    },
    #[error("frame {frame}, record {record}: {source}")]
    InvalidHand {
        frame: FrameId,
        record: u64,
        #[source]
        source: ModelError,
    },
    #[error("frame {frame}, record {record}: {field} {value} outside [0, 1]")]
    ScoreOutOfRange { frame: FrameId, record: u64, field: &'static str, value: f64 },
    #[error("frame {frame}: active object {object} has no linked hand")]
    ActiveWithoutLink { frame: FrameId, object: ObjectId },
    #[error("frame {frame}: object {object} links to unknown hand {hand}")]
    DanglingLink { frame: FrameId, object: ObjectId, hand: HandId },
    #[error("frame {frame}: object {object} is active but its hand {hand} is not in contact")]
    LinkToFreeHand { frame: FrameId, object: ObjectId, hand: HandId },
    #[error("frame {frame}: hand {hand} is in contact but no active object links to it")]
    ContactWithoutObject { frame: FrameId, hand: HandId },
    #[error("frame {frame}: quadruplet or match references unknown record {record}")]
    DanglingReference { frame: FrameId, record: u64 },
    #[error("frame {frame}: present in detections but not in ground truth")]
    FrameMismatch { frame: FrameId },
    #[error("video {0} has no split assignment")]
    UnassignedVideo(VideoId),
    #[error("video {0} is assigned to more than one split")]
    VideoAssignedTwice(VideoId),
    #[error("fraction {0} must lie in (0, 1]")]
    BadFraction(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: CategoryId,
    pub name: String,
}

/// Ordered category list with ids `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTable {
    entries: Vec<Category>,
}

/// Object classes of the industrial-laboratory reference dataset.
pub const REFERENCE_CATEGORIES: [&str; 19] = [
    "power supply",
    "oscilloscope",
    "welder station",
    "electric screwdriver",
    "screwdriver",
    "pliers",
    "welder probe tip",
    "oscilloscope probe tip",
    "low voltage board",
    "high voltage board",
    "register",
    "electric screwdriver battery",
    "working area",
    "welder base",
    "socket",
    "left red button",
    "left green button",
    "right red button",
    "right green button",
];

impl CategoryTable {
    pub fn new(entries: Vec<Category>) -> Result<Self, ValidationError> {
        let mut names = HashSet::new();
        let mut ids = HashSet::new();
        for c in &entries {
            if !ids.insert(c.id) {
                return Err(ValidationError::DuplicateCategory(c.id));
            }
            if !names.insert(c.name.as_str()) {
                return Err(ValidationError::DuplicateCategoryName(c.name.clone()));
            }
        }
        let mut sorted: Vec<_> = entries.iter().map(|c| c.id).collect();
        sorted.sort_unstable();
        for (expected, &id) in (1..).zip(&sorted) {
            if id != expected {
                return Err(ValidationError::NonContiguousCategory(id));
            }
        }
        Ok(Self { entries })
    }

    pub fn reference() -> Self {
        Self {
            entries: (1..)
                .zip(REFERENCE_CATEGORIES)
                .map(|(id, name)| Category {
                    id,
                    name: name.to_owned(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Category> {
        self.entries.iter()
    }

    pub fn contains(&self, id: CategoryId) -> bool {
        self.entries.iter().any(|c| c.id == id)
    }

    pub fn name(&self, id: CategoryId) -> Option<&str> {
        self.entries
            .iter()
            .find(|c| c.id == id)
            .map(|c| c.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Video {
    pub id: VideoId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Contact,
    NonContact,
    #[default]
    Unspecified,
}

/// One annotated image.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub id: FrameId,
    pub file_name: String,
    pub size: ImageSize,
    pub video: VideoId,
    pub kind: FrameKind,
    pub depth_file: Option<String>,
    pub mask_file: Option<String>,
    pub hands: Vec<HandRecord>,
    pub objects: Vec<ObjectRecord>,
}

impl Frame {
    fn validate(&self, categories: &CategoryTable) -> Result<(), ValidationError> {
        let frame = self.id;
        check_unique(frame, "hand", self.hands.iter().map(|h| h.id))?;
        check_unique(frame, "object", self.objects.iter().map(|o| o.id))?;
        for o in &self.objects {
            validate_object(frame, o, Some(categories))?;
            if o.active && o.linked_hand.is_none() {
                return Err(ValidationError::ActiveWithoutLink { frame, object: o.id });
            }
            if let Some(hand) = o.linked_hand {
                let h = self
                    .hands
                    .iter()
                    .find(|h| h.id == hand)
                    .ok_or(ValidationError::DanglingLink {
                        frame,
                        object: o.id,
                        hand,
                    })?;
                if o.active && !h.state.is_contact() {
                    return Err(ValidationError::LinkToFreeHand {
                        frame,
                        object: o.id,
                        hand,
                    });
                }
            }
        }
        for h in self.hands.iter().filter(|h| h.state.is_contact()) {
            if self.linked_objects(h.id).next().is_none() {
                return Err(ValidationError::ContactWithoutObject { frame, hand: h.id });
            }
        }
        for h in &self.hands {
            validate_hand(frame, h)?;
        }
        Ok(())
    }

    /// Active objects linked to `hand`, in object order.
    pub fn linked_objects(&self, hand: HandId) -> impl Iterator<Item = &ObjectRecord> {
        self.objects
            .iter()
            .filter(move |o| o.active && o.linked_hand == Some(hand))
    }
}

fn check_unique(
    frame: FrameId,
    kind: &'static str,
    ids: impl Iterator<Item = u64>,
) -> Result<(), ValidationError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ValidationError::DuplicateRecord { frame, kind, id });
        }
    }
    Ok(())
}

fn check_score(frame: FrameId, record: u64, field: &'static str, value: f64) -> Result<(), ValidationError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ValidationError::ScoreOutOfRange {
            frame,
            record,
            field,
            value,
        })
    }
}

fn validate_hand(frame: FrameId, h: &HandRecord) -> Result<(), ValidationError> {
    h.bbox.validate().map_err(|source| ValidationError::InvalidBox {
        frame,
        record: h.id,
        source,
    })?;
    check_score(frame, h.id, "score", h.score)?;
    check_score(frame, h.id, "side_score", h.side_score)?;
    check_score(frame, h.id, "state_score", h.state_score)?;
    h.validate().map_err(|source| ValidationError::InvalidHand {
        frame,
        record: h.id,
        source,
    })
}

fn validate_object(
    frame: FrameId,
    o: &ObjectRecord,
    categories: Option<&CategoryTable>,
) -> Result<(), ValidationError> {
    o.bbox.validate().map_err(|source| ValidationError::InvalidBox {
        frame,
        record: o.id,
        source,
    })?;
    check_score(frame, o.id, "score", o.score)?;
    if let Some(table) = categories {
        if !table.contains(o.category) {
            return Err(ValidationError::UnknownCategory {
                frame,
                record: o.id,
                category: o.category,
            });
        }
    }
    Ok(())
}

/// Validated ground-truth annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    categories: CategoryTable,
    videos: Vec<Video>,
    frames: Vec<Frame>,
}

impl FrameSet {
    /// Validates every referential invariant. An empty `videos` table is
    /// filled from the frames' video ids.
    pub fn new(
        categories: CategoryTable,
        mut videos: Vec<Video>,
        frames: Vec<Frame>,
    ) -> Result<Self, ValidationError> {
        let mut frame_ids = HashSet::new();
        for f in &frames {
            if !frame_ids.insert(f.id) {
                return Err(ValidationError::DuplicateFrame(f.id));
            }
        }
        if videos.is_empty() {
            let ids: BTreeSet<_> = frames.iter().map(|f| f.video).collect();
            videos = ids.into_iter().map(|id| Video { id, name: None }).collect();
        } else {
            let mut ids = HashSet::new();
            for v in &videos {
                if !ids.insert(v.id) {
                    return Err(ValidationError::DuplicateVideo(v.id));
                }
            }
            if let Some(f) = frames.iter().find(|f| !ids.contains(&f.video)) {
                return Err(ValidationError::UnknownVideo {
                    frame: f.id,
                    video: f.video,
                });
            }
        }
        for f in &frames {
            f.validate(&categories)?;
        }
        Ok(Self {
            categories,
            videos,
            frames,
        })
    }

    /// Keeps the invariants of `self`; for subsets of validated frames.
    fn subset(&self, videos: Vec<Video>, frames: Vec<Frame>) -> Self {
        Self {
            categories: self.categories.clone(),
            videos,
            frames,
        }
    }

    pub fn categories(&self) -> &CategoryTable {
        &self.categories
    }

    pub fn videos(&self) -> &[Video] {
        &self.videos
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, id: FrameId) -> Option<&Frame> {
        self.frames.iter().find(|f| f.id == id)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Replaces object boxes per frame and re-derives in-contact hand offsets.
    ///
    /// `boxes[i][j]` is the new box of object `j` in frame `i`; `None` keeps the old one.
    pub fn with_object_boxes(
        &self,
        boxes: &[Vec<Option<crate::geometry::BBox>>],
    ) -> Self {
        let mut out = self.clone();
        for (frame, new_boxes) in out.frames.iter_mut().zip(boxes) {
            for (o, b) in frame.objects.iter_mut().zip(new_boxes) {
                if let Some(b) = b {
                    o.bbox = *b;
                }
            }
            let size = frame.size;
            let derived: Vec<_> = frame
                .hands
                .iter()
                .map(|h| {
                    frame
                        .linked_objects(h.id)
                        .next()
                        .map(|o| crate::model::encode_offset(&h.bbox, &o.bbox, size))
                })
                .collect();
            for (h, off) in frame.hands.iter_mut().zip(derived) {
                if h.state.is_contact() {
                    h.offset = off;
                }
            }
        }
        out
    }

    /// Ground truth rendered as perfect detections: unit scores, no links,
    /// no active flags (associations are left to the matcher).
    pub fn to_detections(&self) -> DetectionSet {
        DetectionSet {
            categories: Some(self.categories.clone()),
            frames: self
                .frames
                .iter()
                .map(|f| DetectionFrame {
                    image_id: f.id,
                    size: Some(f.size),
                    hands: f
                        .hands
                        .iter()
                        .map(|h| HandRecord {
                            score: 1.0,
                            side_score: 1.0,
                            state_score: 1.0,
                            ..h.clone()
                        })
                        .collect(),
                    objects: f
                        .objects
                        .iter()
                        .map(|o| ObjectRecord {
                            score: 1.0,
                            active: false,
                            linked_hand: None,
                            distance_3d: None,
                            ..o.clone()
                        })
                        .collect(),
                    matches: Vec::new(),
                    quadruplets: Vec::new(),
                })
                .collect(),
        }
    }
}

/// Detector output for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFrame {
    pub image_id: FrameId,
    pub size: Option<ImageSize>,
    pub hands: Vec<HandRecord>,
    pub objects: Vec<ObjectRecord>,
    /// Filled in by the matcher.
    pub matches: Vec<MatchResult>,
    pub quadruplets: Vec<EhoiQuadruplet>,
}

impl DetectionFrame {
    pub fn empty(image_id: FrameId, size: Option<ImageSize>) -> Self {
        Self {
            image_id,
            size,
            hands: Vec::new(),
            objects: Vec::new(),
            matches: Vec::new(),
            quadruplets: Vec::new(),
        }
    }

    fn validate(&self, categories: Option<&CategoryTable>) -> Result<(), ValidationError> {
        let frame = self.image_id;
        check_unique(frame, "hand", self.hands.iter().map(|h| h.id))?;
        check_unique(frame, "object", self.objects.iter().map(|o| o.id))?;
        for h in &self.hands {
            validate_hand(frame, h)?;
        }
        for o in &self.objects {
            validate_object(frame, o, categories)?;
        }
        let hand_ok = |id: HandId| self.hands.iter().any(|h| h.id == id);
        let obj_ok = |id: ObjectId| self.objects.iter().any(|o| o.id == id);
        for m in &self.matches {
            if !hand_ok(m.hand) {
                return Err(ValidationError::DanglingReference { frame, record: m.hand });
            }
            if let Some(o) = m.active_object.filter(|&o| !obj_ok(o)) {
                return Err(ValidationError::DanglingReference { frame, record: o });
            }
        }
        for q in &self.quadruplets {
            if !hand_ok(q.hand) {
                return Err(ValidationError::DanglingReference { frame, record: q.hand });
            }
            for &o in q.active_object.iter().chain(&q.other_objects) {
                if !obj_ok(o) {
                    return Err(ValidationError::DanglingReference { frame, record: o });
                }
            }
        }
        Ok(())
    }
}

/// Validated detector output.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSet {
    categories: Option<CategoryTable>,
    frames: Vec<DetectionFrame>,
}

impl DetectionSet {
    pub fn new(
        categories: Option<CategoryTable>,
        frames: Vec<DetectionFrame>,
    ) -> Result<Self, ValidationError> {
        let mut ids = HashSet::new();
        for f in &frames {
            if !ids.insert(f.image_id) {
                return Err(ValidationError::DuplicateFrame(f.image_id));
            }
            if let Some(size) = f.size {
                if size.width == 0 || size.height == 0 {
                    return Err(ValidationError::BadImageSize {
                        frame: f.image_id,
                        width: size.width,
                        height: size.height,
                    });
                }
            }
            f.validate(categories.as_ref())?;
        }
        Ok(Self { categories, frames })
    }

    pub fn categories(&self) -> Option<&CategoryTable> {
        self.categories.as_ref()
    }

    pub fn frames(&self) -> &[DetectionFrame] {
        &self.frames
    }

    pub(crate) fn frames_mut(&mut self) -> &mut [DetectionFrame] {
        &mut self.frames
    }

    pub fn frame(&self, id: FrameId) -> Option<&DetectionFrame> {
        self.frames.iter().find(|f| f.image_id == id)
    }

    /// Checks that every detection frame and category exists in `gt`.
    pub fn check_against(&self, gt: &FrameSet) -> Result<(), ValidationError> {
        let known: BTreeMap<_, _> = gt.frames().iter().map(|f| (f.id, f)).collect();
        for f in &self.frames {
            if !known.contains_key(&f.image_id) {
                return Err(ValidationError::FrameMismatch { frame: f.image_id });
            }
            for o in &f.objects {
                if !gt.categories().contains(o.category) {
                    return Err(ValidationError::UnknownCategory {
                        frame: f.image_id,
                        record: o.id,
                        category: o.category,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Hands in contact per frame, convenient for tests and reports.
pub fn contact_hands(frame: &Frame) -> impl Iterator<Item = &HandRecord> {
    frame
        .hands
        .iter()
        .filter(|h| h.state == ContactState::InContact)
}
