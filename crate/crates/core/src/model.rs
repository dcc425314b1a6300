//! Hands, objects, interaction quadruplets and the hand-to-object offset codec.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BBox, ImageSize, Point};

/// Tolerance on `vx² + vy² = 1` for non-zero magnitudes.
pub const UNIT_TOLERANCE: f64 = 1e-6;

pub type HandId = u64;
pub type ObjectId = u64;
pub type CategoryId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("offset direction ({vx}, {vy}) is not a unit vector")]
    NotUnit { vx: f64, vy: f64 },
    #[error("offset magnitude {0} is negative or not finite")]
    BadMagnitude(f64),
    #[error("hand {0} is in contact but carries no offset vector")]
    MissingOffset(HandId),
    #[error("hand {0} is not in contact but carries an offset vector")]
    UnexpectedOffset(HandId),
    #[error("match references unknown hand {0}")]
    DanglingHand(HandId),
    #[error("match for hand {hand} references unknown object {object}")]
    DanglingObject { hand: HandId, object: ObjectId },
    #[error("hand {0} is not in contact but was matched to an object")]
    MatchedWithoutContact(HandId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HandSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContactState {
    #[serde(rename = "contact")]
    InContact,
    #[serde(rename = "no_contact")]
    NoContact,
}

impl ContactState {
    /// Binarizes a contact probability.
    pub fn from_probability(p: f64, threshold: f64) -> Self {
        if p >= threshold {
            Self::InContact
        } else {
            Self::NoContact
        }
    }

    pub fn is_contact(self) -> bool {
        self == Self::InContact
    }
}

/// Direction `(vx, vy)` and magnitude `m` linking a hand center to its active
/// object's center. `m` is a fraction of the image diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetVector {
    vx: f64,
    vy: f64,
    m: f64,
}

impl OffsetVector {
    pub const ZERO: OffsetVector = OffsetVector {
        vx: 1.0,
        vy: 0.0,
        m: 0.0,
    };

    pub fn new(vx: f64, vy: f64, m: f64) -> Result<Self, ModelError> {
        if !m.is_finite() || m < 0.0 {
            return Err(ModelError::BadMagnitude(m));
        }
        if !(vx.is_finite() && vy.is_finite()) {
            return Err(ModelError::NotUnit { vx, vy });
        }
        if m > 0.0 && (vx * vx + vy * vy - 1.0).abs() >= UNIT_TOLERANCE {
            return Err(ModelError::NotUnit { vx, vy });
        }
        Ok(Self { vx, vy, m })
    }

    pub fn vx(&self) -> f64 {
        self.vx
    }

    pub fn vy(&self) -> f64 {
        self.vy
    }

    pub fn magnitude(&self) -> f64 {
        self.m
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.vx, self.vy, self.m]
    }
}

/// Encodes the displacement between box centers as direction plus
/// diagonal-normalized magnitude. Coincident centers encode as `(1, 0, 0)`.
pub fn encode_offset(hand_box: &BBox, object_box: &BBox, image: ImageSize) -> OffsetVector {
    let h = hand_box.center();
    let o = object_box.center();
    let (dx, dy) = (o.x - h.x, o.y - h.y);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return OffsetVector::ZERO;
    }
    OffsetVector {
        vx: dx / len,
        vy: dy / len,
        m: len / image.diagonal(),
    }
}

/// The interaction point: hand center displaced by the offset. Not clipped.
pub fn decode_offset(hand_box: &BBox, offset: &OffsetVector, image: ImageSize) -> Point {
    let c = hand_box.center();
    let len = offset.m * image.diagonal();
    Point::new(c.x + len * offset.vx, c.y + len * offset.vy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandRecord {
    pub id: HandId,
    pub bbox: BBox,
    pub score: f64,
    pub side: HandSide,
    pub side_score: f64,
    pub state: ContactState,
    pub state_score: f64,
    pub offset: Option<OffsetVector>,
}

impl HandRecord {
    /// Checks the contact/offset pairing.
    pub fn validate(&self) -> Result<(), ModelError> {
        match (self.state, self.offset) {
            (ContactState::InContact, None) => Err(ModelError::MissingOffset(self.id)),
            (ContactState::NoContact, Some(_)) => Err(ModelError::UnexpectedOffset(self.id)),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRecord {
    pub id: ObjectId,
    pub bbox: BBox,
    pub score: f64,
    pub category: CategoryId,
    pub active: bool,
    pub linked_hand: Option<HandId>,
    /// Hand-object distance in scene units, when the source provides it.
    pub distance_3d: Option<f64>,
}

/// `<hand, contact_state, active_object, <other_objects>>`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EhoiQuadruplet {
    pub hand: HandId,
    pub contact_state: ContactState,
    pub active_object: Option<ObjectId>,
    pub other_objects: Vec<ObjectId>,
}

/// One quadruplet per hand, in hand order. Matched objects become the active
/// object; every other frame object lands in `other_objects` in input order.
pub fn build_quadruplets(
    hands: &[HandRecord],
    objects: &[ObjectRecord],
    matches: &BTreeMap<HandId, ObjectId>,
) -> Result<Vec<EhoiQuadruplet>, ModelError> {
    for (&hand_id, &object_id) in matches {
        let hand = hands
            .iter()
            .find(|h| h.id == hand_id)
            .ok_or(ModelError::DanglingHand(hand_id))?;
        if !objects.iter().any(|o| o.id == object_id) {
            return Err(ModelError::DanglingObject {
                hand: hand_id,
                object: object_id,
            });
        }
        if !hand.state.is_contact() {
            return Err(ModelError::MatchedWithoutContact(hand_id));
        }
    }

    Ok(hands
        .iter()
        .map(|hand| {
            let active = matches.get(&hand.id).copied();
            EhoiQuadruplet {
                hand: hand.id,
                contact_state: hand.state,
                active_object: active,
                other_objects: objects
                    .iter()
                    .map(|o| o.id)
                    .filter(|&id| Some(id) != active)
                    .collect(),
            }
        })
        .collect())
}
