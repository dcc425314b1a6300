//! JSON wire formats.
//!
//! Annotation files are COCO-shaped (`images`, `annotations`, `categories`,
//! `videos`) with per-annotation interaction attributes. Detection files list
//! frames, each carrying scored hand and object records.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Category, CategoryTable, DatasetError, DetectionFrame, DetectionSet, Frame, FrameId,
    FrameKind, FrameSet, ValidationError, Video, VideoId,
};
use crate::geometry::{BBox, ImageSize};
use crate::matcher::MatchResult;
use crate::model::{
    encode_offset, CategoryId, ContactState, EhoiQuadruplet, HandRecord, HandSide, ObjectRecord,
    OffsetVector,
};

/// Coordinate layout of `bbox` arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxFormat {
    /// `[x, y, width, height]`
    #[default]
    Xywh,
    /// `[x1, y1, x2, y2]`
    Xyxy,
}

impl BoxFormat {
    fn is_default(&self) -> bool {
        *self == Self::Xywh
    }

    fn decode(self, raw: [f64; 4], frame: FrameId, record: u64) -> Result<BBox, ValidationError> {
        let [a, b, c, d] = raw;
        match self {
            Self::Xywh => BBox::try_new(a, b, c, d),
            Self::Xyxy => BBox::from_corners(a, b, c, d),
        }
        .map_err(|source| ValidationError::InvalidBox {
            frame,
            record,
            source,
        })
    }
}

/// Parse-time knobs for detection files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionOptions {
    /// Contact probabilities at or above this value mean "in contact".
    pub contact_threshold: f64,
}

impl Default for DetectionOptions {
    fn default() -> Self {
        Self {
            contact_threshold: 0.5,
        }
    }
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    info: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "BoxFormat::is_default")]
    bbox_format: BoxFormat,
    categories: Vec<Category>,
    #[serde(default)]
    videos: Vec<Video>,
    images: Vec<ImageEntry>,
    annotations: Vec<AnnotationEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ImageEntry {
    id: FrameId,
    file_name: String,
    width: u32,
    height: u32,
    video_id: VideoId,
    #[serde(default)]
    frame_kind: FrameKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask_file: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AnnotationKind {
    Hand,
    Object,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationEntry {
    id: u64,
    image_id: FrameId,
    kind: AnnotationKind,
    bbox: [f64; 4],
    #[serde(default = "one", skip_serializing_if = "is_one")]
    score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hand_side: Option<HandSide>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contact_state: Option<ContactState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    offset: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category_id: Option<CategoryId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    active: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    linked_hand_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distance_3d: Option<f64>,
}

fn offset_from(raw: [f64; 3], frame: FrameId, record: u64) -> Result<OffsetVector, ValidationError> {
    OffsetVector::new(raw[0], raw[1], raw[2]).map_err(|source| ValidationError::InvalidHand {
        frame,
        record,
        source,
    })
}

fn missing(frame: FrameId, record: u64, attribute: &'static str) -> ValidationError {
    ValidationError::MissingAttribute {
        frame,
        record,
        attribute,
    }
}

/// Parses and validates a ground-truth annotation document.
///
/// In-contact hands without an explicit `offset` get one derived from their
/// first linked active object.
pub fn parse_annotations(text: &str) -> Result<FrameSet, DatasetError> {
    let doc: AnnotationDoc = serde_json::from_str(text)?;
    Ok(annotations_from_doc(doc)?)
}

fn annotations_from_doc(doc: AnnotationDoc) -> Result<FrameSet, ValidationError> {
    let categories = CategoryTable::new(doc.categories)?;
    let mut frames = Vec::with_capacity(doc.images.len());
    let mut index = HashMap::new();
    for img in doc.images {
        let size = ImageSize::new(img.width, img.height).map_err(|_| ValidationError::BadImageSize {
            frame: img.id,
            width: img.width,
            height: img.height,
        })?;
        if index.insert(img.id, frames.len()).is_some() {
            return Err(ValidationError::DuplicateFrame(img.id));
        }
        frames.push(Frame {
            id: img.id,
            file_name: img.file_name,
            size,
            video: img.video_id,
            kind: img.frame_kind,
            depth_file: img.depth_file,
            mask_file: img.mask_file,
            hands: Vec::new(),
            objects: Vec::new(),
        });
    }

    let mut seen = std::collections::HashSet::new();
    for a in doc.annotations {
        if !seen.insert(a.id) {
            return Err(ValidationError::DuplicateAnnotation(a.id));
        }
        let &slot = index.get(&a.image_id).ok_or(ValidationError::UnknownFrame {
            annotation: a.id,
            frame: a.image_id,
        })?;
        let frame = &mut frames[slot];
        let bbox = doc.bbox_format.decode(a.bbox, frame.id, a.id)?;
        match a.kind {
            AnnotationKind::Hand => {
                let state = a.contact_state.ok_or_else(|| missing(frame.id, a.id, "contact_state"))?;
                frame.hands.push(HandRecord {
                    id: a.id,
                    bbox,
                    score: a.score,
                    side: a.hand_side.ok_or_else(|| missing(frame.id, a.id, "hand_side"))?,
                    side_score: 1.0,
                    state,
                    state_score: 1.0,
                    offset: a.offset.map(|o| offset_from(o, frame.id, a.id)).transpose()?,
                });
            }
            AnnotationKind::Object => frame.objects.push(ObjectRecord {
                id: a.id,
                bbox,
                score: a.score,
                category: a.category_id.ok_or_else(|| missing(frame.id, a.id, "category_id"))?,
                active: a.active.unwrap_or(false),
                linked_hand: a.linked_hand_id,
                distance_3d: a.distance_3d,
            }),
        }
    }

    for frame in &mut frames {
        let derived: Vec<_> = frame
            .hands
            .iter()
            .map(|h| {
                frame
                    .linked_objects(h.id)
                    .next()
                    .map(|o| encode_offset(&h.bbox, &o.bbox, frame.size))
            })
            .collect();
        for (h, d) in frame.hands.iter_mut().zip(derived) {
            if h.state.is_contact() && h.offset.is_none() {
                h.offset = d;
            }
        }
    }

    FrameSet::new(categories, doc.videos, frames)
}

fn annotation_doc(fs: &FrameSet) -> AnnotationDoc {
    let images = fs
        .frames()
        .iter()
        .map(|f| ImageEntry {
            id: f.id,
            file_name: f.file_name.clone(),
            width: f.size.width,
            height: f.size.height,
            video_id: f.video,
            frame_kind: f.kind,
            depth_file: f.depth_file.clone(),
            mask_file: f.mask_file.clone(),
        })
        .collect();
    let mut annotations = Vec::new();
    for f in fs.frames() {
        for h in &f.hands {
            annotations.push(AnnotationEntry {
                id: h.id,
                image_id: f.id,
                kind: AnnotationKind::Hand,
                bbox: [h.bbox.x, h.bbox.y, h.bbox.w, h.bbox.h],
                score: h.score,
                hand_side: Some(h.side),
                contact_state: Some(h.state),
                offset: h.offset.map(|o| o.to_array()),
                category_id: None,
                active: None,
                linked_hand_id: None,
                distance_3d: None,
            });
        }
        for o in &f.objects {
            annotations.push(AnnotationEntry {
                id: o.id,
                image_id: f.id,
                kind: AnnotationKind::Object,
                bbox: [o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h],
                score: o.score,
                hand_side: None,
                contact_state: None,
                offset: None,
                category_id: Some(o.category),
                active: Some(o.active),
                linked_hand_id: o.linked_hand,
                distance_3d: o.distance_3d,
            });
        }
    }
    AnnotationDoc {
        info: None,
        bbox_format: BoxFormat::Xywh,
        categories: fs.categories().iter().cloned().collect(),
        videos: fs.videos().to_vec(),
        images,
        annotations,
    }
}

/// Serializes to the annotation schema (pretty-printed, `xywh` boxes).
pub fn write_annotations(fs: &FrameSet) -> String {
    let mut s = serde_json::to_string_pretty(&annotation_doc(fs)).expect("annotation doc serializes");
    s.push('\n');
    s
}

#[derive(Debug, Serialize, Deserialize)]
struct DetectionDoc {
    #[serde(default, skip_serializing_if = "BoxFormat::is_default")]
    bbox_format: BoxFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    categories: Option<Vec<Category>>,
    frames: Vec<DetFrameEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DetFrameEntry {
    image_id: FrameId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<u32>,
    #[serde(default)]
    hands: Vec<DetHandEntry>,
    #[serde(default)]
    objects: Vec<DetObjectEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    matches: Vec<MatchResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    quadruplets: Vec<EhoiQuadruplet>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DetHandEntry {
    id: u64,
    bbox: [f64; 4],
    score: f64,
    hand_side: HandSide,
    #[serde(default)]
    side_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contact_state: Option<ContactState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contact_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    offset: Option<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DetObjectEntry {
    id: u64,
    bbox: [f64; 4],
    score: f64,
    category_id: CategoryId,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    active: bool,
}

/// Parses and validates a detection document.
///
/// Hands may give either `contact_state` + `state_score` or a `contact_prob`,
/// which is binarized with [`DetectionOptions::contact_threshold`]. Offsets on
/// no-contact hands are dropped: detector heads regress them for every hand.
pub fn parse_detections(text: &str, opts: &DetectionOptions) -> Result<DetectionSet, DatasetError> {
    let doc: DetectionDoc = serde_json::from_str(text)?;
    Ok(detections_from_doc(doc, opts)?)
}

fn detections_from_doc(doc: DetectionDoc, opts: &DetectionOptions) -> Result<DetectionSet, ValidationError> {
    let categories = doc.categories.map(CategoryTable::new).transpose()?;
    let frames = doc
        .frames
        .into_iter()
        .map(|f| {
            let id = f.image_id;
            let size = match (f.width, f.height) {
                (Some(width), Some(height)) => Some(ImageSize::new(width, height).map_err(|_| {
                    ValidationError::BadImageSize {
                        frame: id,
                        width,
                        height,
                    }
                })?),
                (None, None) => None,
                (None, Some(_)) => return Err(missing(id, id, "width")),
                (Some(_), None) => return Err(missing(id, id, "height")),
            };
            let hands = f
                .hands
                .into_iter()
                .map(|h| {
                    let (state, state_score) = match (h.contact_state, h.contact_prob) {
                        (Some(state), _) => (
                            state,
                            h.state_score.ok_or_else(|| missing(id, h.id, "state_score"))?,
                        ),
                        (None, Some(p)) => {
                            let state = ContactState::from_probability(p, opts.contact_threshold);
                            let score = if state.is_contact() { p } else { 1.0 - p };
                            (state, h.state_score.unwrap_or(score))
                        }
                        (None, None) => return Err(missing(id, h.id, "contact_state")),
                    };
                    let offset = match state {
                        ContactState::InContact => {
                            h.offset.map(|o| offset_from(o, id, h.id)).transpose()?
                        }
                        ContactState::NoContact => None,
                    };
                    Ok(HandRecord {
                        id: h.id,
                        bbox: doc.bbox_format.decode(h.bbox, id, h.id)?,
                        score: h.score,
                        side: h.hand_side,
                        side_score: h.side_score.ok_or_else(|| missing(id, h.id, "side_score"))?,
                        state,
                        state_score,
                        offset,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let objects = f
                .objects
                .into_iter()
                .map(|o| {
                    Ok(ObjectRecord {
                        id: o.id,
                        bbox: doc.bbox_format.decode(o.bbox, id, o.id)?,
                        score: o.score,
                        category: o.category_id,
                        active: o.active,
                        linked_hand: None,
                        distance_3d: None,
                    })
                })
                .collect::<Result<Vec<_>, ValidationError>>()?;
            Ok(DetectionFrame {
                image_id: id,
                size,
                hands,
                objects,
                matches: f.matches,
                quadruplets: f.quadruplets,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    DetectionSet::new(categories, frames)
}

fn detection_doc(ds: &DetectionSet) -> DetectionDoc {
    DetectionDoc {
        bbox_format: BoxFormat::Xywh,
        categories: ds.categories().map(|t| t.iter().cloned().collect()),
        frames: ds
            .frames()
            .iter()
            .map(|f| DetFrameEntry {
                image_id: f.image_id,
                width: f.size.map(|s| s.width),
                height: f.size.map(|s| s.height),
                hands: f
                    .hands
                    .iter()
                    .map(|h| DetHandEntry {
                        id: h.id,
                        bbox: [h.bbox.x, h.bbox.y, h.bbox.w, h.bbox.h],
                        score: h.score,
                        hand_side: h.side,
                        side_score: Some(h.side_score),
                        contact_state: Some(h.state),
                        contact_prob: None,
                        state_score: Some(h.state_score),
                        offset: h.offset.map(|o| o.to_array()),
                    })
                    .collect(),
                objects: f
                    .objects
                    .iter()
                    .map(|o| DetObjectEntry {
                        id: o.id,
                        bbox: [o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h],
                        score: o.score,
                        category_id: o.category,
                        active: o.active,
                    })
                    .collect(),
                matches: f.matches.clone(),
                quadruplets: f.quadruplets.clone(),
            })
            .collect(),
    }
}

/// Serializes to the detection schema (pretty-printed, `xywh` boxes).
pub fn write_detections(ds: &DetectionSet) -> String {
    let mut s = serde_json::to_string_pretty(&detection_doc(ds)).expect("detection doc serializes");
    s.push('\n');
    s
}

fn read_text(path: &Path) -> Result<String, DatasetError> {
    std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_annotations(path: &Path) -> Result<FrameSet, DatasetError> {
    parse_annotations(&read_text(path)?)
}

pub fn read_detections(path: &Path, opts: &DetectionOptions) -> Result<DetectionSet, DatasetError> {
    parse_detections(&read_text(path)?, opts)
}
