//! The six-metric interaction evaluation.
//!
//! | metric      | detections                    | ground truth                  | extra requirement             |
//! |-------------|-------------------------------|-------------------------------|-------------------------------|
//! | AP Hand     | all hands                     | all hands                     | none                          |
//! | AP H+Side   | all hands                     | all hands                     | side                          |
//! | AP H+State  | all hands                     | all hands                     | contact state                 |
//! | mAP Obj     | active objects of category c  | active objects of category c  | none                          |
//! | mAP H+Obj   | active objects of category c  | active objects of category c  | an associated hand overlaps the linked GT hand |
//! | mAP All     | hands associated with a c object | in-contact hands linked to a c object | side, state, associated object overlaps a linked GT object |
//!
//! Detected objects are active when the matcher associates at least one
//! in-contact hand with them.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde_json::{Map, Value};
use thiserror::Error;

use super::{average_precision, greedy_assign, AllAveraging, ApConfig, Interpolation, Located, Scored, ScoredMatch};
use crate::dataset::{DetectionFrame, DetectionSet, Frame, FrameSet, ValidationError};
use crate::geometry::BBox;
use crate::matcher::{match_frame, MatchError};
use crate::model::{CategoryId, HandId, HandRecord, ObjectId, ObjectRecord};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("IoU threshold {0} must lie strictly between 0 and 1")]
    BadThreshold(f64),
    #[error("report: {0}")]
    Report(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    ApHand,
    MapObj,
    ApHSide,
    ApHState,
    MapHObj,
    MapAll,
}

impl Metric {
    /// Column order of the results table.
    pub const ALL: [Metric; 6] = [
        Metric::ApHand,
        Metric::MapObj,
        Metric::ApHSide,
        Metric::ApHState,
        Metric::MapHObj,
        Metric::MapAll,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Metric::ApHand => "ap_hand",
            Metric::MapObj => "map_obj",
            Metric::ApHSide => "ap_h_side",
            Metric::ApHState => "ap_h_state",
            Metric::MapHObj => "map_h_obj",
            Metric::MapAll => "map_all",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::ApHand => "AP Hand",
            Metric::MapObj => "mAP Obj",
            Metric::ApHSide => "AP H+Side",
            Metric::ApHState => "AP H+State",
            Metric::MapHObj => "mAP H+Obj",
            Metric::MapAll => "mAP All",
        }
    }

    pub fn from_key(key: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.key() == key)
    }
}

/// Which attribute checks a true positive must pass on top of the IoU test.
///
/// `require_side`, `require_state` and `require_object` apply to hand pools;
/// `require_hand` applies to object pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AttributeConstraints {
    pub require_side: bool,
    pub require_state: bool,
    pub require_object: bool,
    pub require_hand: bool,
}

impl AttributeConstraints {
    pub const NONE: Self = Self {
        require_side: false,
        require_state: false,
        require_object: false,
        require_hand: false,
    };

    pub fn side() -> Self {
        Self { require_side: true, ..Self::NONE }
    }

    pub fn state() -> Self {
        Self { require_state: true, ..Self::NONE }
    }

    pub fn hand() -> Self {
        Self { require_hand: true, ..Self::NONE }
    }

    pub fn all() -> Self {
        Self {
            require_side: true,
            require_state: true,
            require_object: true,
            require_hand: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MetricCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl MetricCounts {
    fn from_matches(matches: &[ScoredMatch], gt: usize) -> Self {
        let tp = matches.iter().filter(|m| m.is_tp).count();
        Self {
            tp,
            fp: matches.len() - tp,
            fn_: gt - tp,
        }
    }

    fn add(self, other: Self) -> Self {
        Self {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
        }
    }
}

/// AP of one pool plus its tallies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolResult {
    pub ap: f64,
    pub recall: f64,
    pub gt_count: usize,
    pub counts: MetricCounts,
}

impl PoolResult {
    fn new(matches: &[ScoredMatch], gt_count: usize, interpolation: Interpolation) -> Self {
        let counts = MetricCounts::from_matches(matches, gt_count);
        Self {
            ap: average_precision(matches, gt_count, interpolation),
            recall: if gt_count == 0 { 0.0 } else { counts.tp as f64 / gt_count as f64 },
            gt_count,
            counts,
        }
    }
}

/// A metric summarized over its pools, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSummary {
    /// Mean AP over pools with ground truth.
    pub ap: f64,
    /// Mean recall over the same pools.
    pub recall: f64,
    pub counts: MetricCounts,
    /// Per-category pools; empty for class-agnostic metrics.
    pub per_category: BTreeMap<CategoryId, PoolResult>,
}

impl PoolSummary {
    fn single(pool: PoolResult) -> Self {
        Self {
            ap: pool.ap,
            recall: pool.recall,
            counts: pool.counts,
            per_category: BTreeMap::new(),
        }
    }

    fn from_categories(per_category: BTreeMap<CategoryId, PoolResult>) -> Self {
        let scored: Vec<_> = per_category.values().filter(|p| p.gt_count > 0).collect();
        let mean = |f: fn(&PoolResult) -> f64| {
            if scored.is_empty() {
                0.0
            } else {
                scored.iter().map(|p| f(p)).sum::<f64>() / scored.len() as f64
            }
        };
        Self {
            ap: mean(|p| p.ap),
            recall: mean(|p| p.recall),
            counts: per_category
                .values()
                .fold(MetricCounts::default(), |acc, p| acc.add(p.counts)),
            per_category,
        }
    }
}

struct FrameCtx<'a> {
    gt: &'a Frame,
    det: Option<&'a DetectionFrame>,
    /// detected hand -> detected object
    assoc: BTreeMap<HandId, ObjectId>,
}

impl<'a> FrameCtx<'a> {
    fn det_hands(&self) -> &'a [HandRecord] {
        self.det.map_or(&[], |d| &d.hands)
    }

    fn det_objects(&self) -> &'a [ObjectRecord] {
        self.det.map_or(&[], |d| &d.objects)
    }

    fn det_object(&self, id: ObjectId) -> Option<&'a ObjectRecord> {
        self.det_objects().iter().find(|o| o.id == id)
    }

    fn associated_object(&self, hand: HandId) -> Option<&'a ObjectRecord> {
        self.assoc.get(&hand).and_then(|&o| self.det_object(o))
    }

    fn associated_hands(&self, object: ObjectId) -> impl Iterator<Item = &'a HandRecord> + '_ {
        let hands = self.det_hands();
        self.assoc
            .iter()
            .filter(move |(_, &o)| o == object)
            .filter_map(move |(&h, _)| hands.iter().find(|x| x.id == h))
    }

    fn active_det_objects(&self) -> Vec<&'a ObjectRecord> {
        let active: BTreeSet<ObjectId> = self.assoc.values().copied().collect();
        self.det_objects()
            .iter()
            .filter(|o| active.contains(&o.id))
            .collect()
    }

    fn gt_hand(&self, id: HandId) -> Option<&'a HandRecord> {
        self.gt.hands.iter().find(|h| h.id == id)
    }
}

/// A detected hand together with the object the matcher gave it.
struct AssocHand<'a> {
    hand: &'a HandRecord,
    object: Option<&'a ObjectRecord>,
}

impl Located for AssocHand<'_> {
    fn bbox(&self) -> BBox {
        self.hand.bbox
    }
}

impl Scored for AssocHand<'_> {
    fn score(&self) -> f64 {
        self.hand.score
    }
}

/// A ground-truth hand with its linked active objects.
struct LinkedHand<'a> {
    hand: &'a HandRecord,
    objects: Vec<&'a ObjectRecord>,
}

impl Located for LinkedHand<'_> {
    fn bbox(&self) -> BBox {
        self.hand.bbox
    }
}

/// A detected active object with the hands associated to it.
struct AssocObject<'a> {
    object: &'a ObjectRecord,
    hands: Vec<&'a HandRecord>,
}

impl Located for AssocObject<'_> {
    fn bbox(&self) -> BBox {
        self.object.bbox
    }
}

impl Scored for AssocObject<'_> {
    fn score(&self) -> f64 {
        self.object.score
    }
}

/// A ground-truth active object with its linked hand.
struct LinkedObject<'a> {
    object: &'a ObjectRecord,
    hand: Option<&'a HandRecord>,
}

impl Located for LinkedObject<'_> {
    fn bbox(&self) -> BBox {
        self.object.bbox
    }
}

/// Ground truth and detections paired per frame, with matcher associations.
pub struct Evaluation<'a> {
    cfg: ApConfig,
    frames: Vec<FrameCtx<'a>>,
    categories: Vec<CategoryId>,
    gt: &'a FrameSet,
}

impl<'a> Evaluation<'a> {
    /// Pairs frames by id (frames without detections count as empty) and runs
    /// the matcher on every detection frame.
    pub fn new(gt: &'a FrameSet, dets: &'a DetectionSet, cfg: ApConfig) -> Result<Self, EvalError> {
        cfg.validate()?;
        dets.check_against(gt)?;
        let mut gt_frames: Vec<&Frame> = gt.frames().iter().collect();
        gt_frames.sort_by_key(|f| f.id);
        let frames = gt_frames
            .into_par_iter()
            .map(|f| {
                let det = dets.frame(f.id);
                let assoc = match det {
                    Some(d) => match_frame(&d.hands, &d.objects, d.size.unwrap_or(f.size))
                        .map_err(|source| MatchError::Frame { frame: f.id, source })?
                        .into_iter()
                        .filter_map(|m| m.active_object.map(|o| (m.hand, o)))
                        .collect(),
                    None => BTreeMap::new(),
                };
                Ok(FrameCtx { gt: f, det, assoc })
            })
            .collect::<Result<Vec<_>, EvalError>>()?;

        let mut categories = BTreeSet::new();
        for ctx in &frames {
            categories.extend(ctx.gt.objects.iter().map(|o| o.category));
            categories.extend(ctx.det_objects().iter().map(|o| o.category));
        }
        Ok(Self {
            cfg,
            frames,
            categories: categories.into_iter().collect(),
            gt,
        })
    }

    pub fn config(&self) -> &ApConfig {
        &self.cfg
    }

    /// Categories appearing in ground truth or detections.
    pub fn categories(&self) -> &[CategoryId] {
        &self.categories
    }

    fn pool<D, G, P>(&self, build: impl Fn(&FrameCtx<'a>) -> (Vec<D>, Vec<G>), predicate: P) -> PoolResult
    where
        D: Scored,
        G: Located,
        P: Fn(&D, &G) -> bool + Copy,
    {
        let mut matches = Vec::new();
        let mut gt_count = 0;
        for ctx in &self.frames {
            let (dets, gts) = build(ctx);
            gt_count += gts.len();
            matches.extend(greedy_assign(&dets, &gts, self.cfg.iou_threshold, predicate));
        }
        PoolResult::new(&matches, gt_count, self.cfg.interpolation)
    }

    /// Class-agnostic hand AP with optional side/state requirements.
    pub fn hand_ap(&self, c: AttributeConstraints) -> PoolSummary {
        let pool = self.pool(
            |ctx| (ctx.det_hands().iter().collect(), ctx.gt.hands.iter().collect()),
            |d: &&HandRecord, g: &&HandRecord| {
                (!c.require_side || d.side == g.side) && (!c.require_state || d.state == g.state)
            },
        );
        PoolSummary::single(pool)
    }

    fn interaction_pool(&self, c: AttributeConstraints, category: Option<CategoryId>) -> PoolResult {
        let thr = self.cfg.iou_threshold;
        let in_category = move |o: &ObjectRecord| category.is_none_or(|cat| o.category == cat);
        self.pool(
            |ctx| {
                let dets = ctx
                    .det_hands()
                    .iter()
                    .filter_map(|h| {
                        let object = ctx.associated_object(h.id)?;
                        in_category(object).then_some(AssocHand {
                            hand: h,
                            object: Some(object),
                        })
                    })
                    .collect();
                let gts = ctx
                    .gt
                    .hands
                    .iter()
                    .filter(|h| h.state.is_contact())
                    .filter_map(|h| {
                        let objects: Vec<_> = ctx.gt.linked_objects(h.id).filter(|o| in_category(o)).collect();
                        (!objects.is_empty()).then_some(LinkedHand { hand: h, objects })
                    })
                    .collect();
                (dets, gts)
            },
            move |d: &AssocHand, g: &LinkedHand| {
                let side_ok = !c.require_side || d.hand.side == g.hand.side;
                let state_ok = !c.require_state || d.hand.state == g.hand.state;
                let object_ok = !c.require_object
                    || d.object.is_some_and(|obj| {
                        g.objects
                            .iter()
                            .any(|go| go.category == obj.category && go.bbox.iou(&obj.bbox) >= thr)
                    });
                side_ok && state_ok && object_ok
            },
        )
    }

    /// Hand AP over interacting hands, per active-object category (or pooled,
    /// depending on [`ApConfig::all_averaging`]).
    pub fn interaction_map(&self, c: AttributeConstraints) -> PoolSummary {
        match self.cfg.all_averaging {
            AllAveraging::PerCategory => PoolSummary::from_categories(
                self.categories
                    .par_iter()
                    .map(|&cat| (cat, self.interaction_pool(c, Some(cat))))
                    .collect(),
            ),
            AllAveraging::Pooled => PoolSummary::single(self.interaction_pool(c, None)),
        }
    }

    fn object_pool(&self, c: AttributeConstraints, category: CategoryId) -> PoolResult {
        let thr = self.cfg.iou_threshold;
        self.pool(
            |ctx| {
                let dets = ctx
                    .active_det_objects()
                    .into_iter()
                    .filter(|o| o.category == category)
                    .map(|o| AssocObject {
                        object: o,
                        hands: ctx.associated_hands(o.id).collect(),
                    })
                    .collect();
                let gts = ctx
                    .gt
                    .objects
                    .iter()
                    .filter(|o| o.active && o.category == category)
                    .map(|o| LinkedObject {
                        object: o,
                        hand: o.linked_hand.and_then(|h| ctx.gt_hand(h)),
                    })
                    .collect();
                (dets, gts)
            },
            move |d: &AssocObject, g: &LinkedObject| {
                !c.require_hand
                    || g.hand.is_some_and(|gh| d.hands.iter().any(|dh| dh.bbox.iou(&gh.bbox) >= thr))
            },
        )
    }

    /// Active-object mAP, optionally requiring a correctly placed hand.
    pub fn object_map(&self, c: AttributeConstraints) -> PoolSummary {
        PoolSummary::from_categories(
            self.categories
                .par_iter()
                .map(|&cat| (cat, self.object_pool(c, cat)))
                .collect(),
        )
    }

    pub fn summary(&self, metric: Metric) -> PoolSummary {
        match metric {
            Metric::ApHand => self.hand_ap(AttributeConstraints::NONE),
            Metric::ApHSide => self.hand_ap(AttributeConstraints::side()),
            Metric::ApHState => self.hand_ap(AttributeConstraints::state()),
            Metric::MapObj => self.object_map(AttributeConstraints::NONE),
            Metric::MapHObj => self.object_map(AttributeConstraints::hand()),
            Metric::MapAll => self.interaction_map(AttributeConstraints::all()),
        }
    }

    pub fn report(&self) -> EvalReport {
        let summaries: Vec<(Metric, PoolSummary)> = Metric::ALL
            .par_iter()
            .map(|&m| (m, self.summary(m)))
            .collect();
        let get = |m: Metric| &summaries.iter().find(|(k, _)| *k == m).expect("all metrics computed").1;
        let pct = |v: f64| 100.0 * v;
        let cat_ap = |m: Metric, cat: CategoryId| {
            get(m).per_category.get(&cat).filter(|p| p.gt_count > 0).map(|p| pct(p.ap))
        };
        let per_category = self
            .categories
            .iter()
            .map(|&id| CategoryAp {
                id,
                name: self
                    .gt
                    .categories()
                    .name(id)
                    .unwrap_or_default()
                    .to_owned(),
                obj: cat_ap(Metric::MapObj, id),
                h_obj: cat_ap(Metric::MapHObj, id),
                all: cat_ap(Metric::MapAll, id),
            })
            .collect();
        EvalReport {
            label: String::new(),
            iou_threshold: self.cfg.iou_threshold,
            interpolation: self.cfg.interpolation,
            ap_hand: pct(get(Metric::ApHand).ap),
            map_obj: pct(get(Metric::MapObj).ap),
            ap_h_side: pct(get(Metric::ApHSide).ap),
            ap_h_state: pct(get(Metric::ApHState).ap),
            map_h_obj: pct(get(Metric::MapHObj).ap),
            map_all: pct(get(Metric::MapAll).ap),
            mar_obj: pct(get(Metric::MapObj).recall),
            per_category,
            counts: summaries.iter().map(|(m, s)| (*m, s.counts)).collect(),
        }
    }
}

/// Runs the full metric suite.
pub fn evaluate(gt: &FrameSet, dets: &DetectionSet, cfg: &ApConfig) -> Result<EvalReport, EvalError> {
    Ok(Evaluation::new(gt, dets, *cfg)?.report())
}

/// Per-category AP percentages; `None` where the category has no ground truth
/// in that pool.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryAp {
    pub id: CategoryId,
    pub name: String,
    pub obj: Option<f64>,
    pub h_obj: Option<f64>,
    pub all: Option<f64>,
}

/// Metric values as percentages in `[0, 100]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub label: String,
    pub iou_threshold: f64,
    pub interpolation: Interpolation,
    pub ap_hand: f64,
    pub map_obj: f64,
    pub ap_h_side: f64,
    pub ap_h_state: f64,
    pub map_h_obj: f64,
    pub map_all: f64,
    /// Mean recall of active objects.
    pub mar_obj: f64,
    pub per_category: Vec<CategoryAp>,
    pub counts: BTreeMap<Metric, MetricCounts>,
}

impl EvalReport {
    pub fn value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::ApHand => self.ap_hand,
            Metric::MapObj => self.map_obj,
            Metric::ApHSide => self.ap_h_side,
            Metric::ApHState => self.ap_h_state,
            Metric::MapHObj => self.map_h_obj,
            Metric::MapAll => self.map_all,
        }
    }

    fn set(&mut self, metric: Metric, v: f64) {
        match metric {
            Metric::ApHand => self.ap_hand = v,
            Metric::MapObj => self.map_obj = v,
            Metric::ApHSide => self.ap_h_side = v,
            Metric::ApHState => self.ap_h_state = v,
            Metric::MapHObj => self.map_h_obj = v,
            Metric::MapAll => self.map_all = v,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Flat key/value document. Keys: the six metrics, `mar_obj`,
    /// `ap_obj/<category>`, `ap_h_obj/<category>`, `ap_all/<category>` (null when
    /// the category has no ground truth in that pool), and `tp|fp|fn/<metric>`.
    pub fn to_flat(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("schema_version".into(), REPORT_SCHEMA_VERSION.into());
        m.insert("label".into(), self.label.clone().into());
        m.insert("iou_threshold".into(), self.iou_threshold.into());
        m.insert("interpolation".into(), self.interpolation.name().into());
        for metric in Metric::ALL {
            m.insert(metric.key().into(), self.value(metric).into());
        }
        m.insert("mar_obj".into(), self.mar_obj.into());
        let opt = |v: Option<f64>| v.map_or(Value::Null, Value::from);
        for c in &self.per_category {
            m.insert(format!("ap_obj/{}", c.name), opt(c.obj));
            m.insert(format!("ap_h_obj/{}", c.name), opt(c.h_obj));
            m.insert(format!("ap_all/{}", c.name), opt(c.all));
        }
        for (metric, counts) in &self.counts {
            m.insert(format!("tp/{}", metric.key()), counts.tp.into());
            m.insert(format!("fp/{}", metric.key()), counts.fp.into());
            m.insert(format!("fn/{}", metric.key()), counts.fn_.into());
        }
        m
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&Value::Object(self.to_flat())).expect("report serializes");
        s.push('\n');
        s
    }

    /// Reads a flat report. Category ids are not stored, so they are
    /// renumbered in file order.
    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let value: Value = serde_json::from_str(text).map_err(|e| EvalError::Report(e.to_string()))?;
        let map = value
            .as_object()
            .ok_or_else(|| EvalError::Report("report must be a JSON object".into()))?;
        let version = map.get("schema_version").and_then(Value::as_u64);
        if version != Some(u64::from(REPORT_SCHEMA_VERSION)) {
            return Err(EvalError::Report(format!(
                "unsupported schema_version {}, expected {REPORT_SCHEMA_VERSION}",
                map.get("schema_version").unwrap_or(&Value::Null)
            )));
        }
        let num = |k: &str| {
            map.get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| EvalError::Report(format!("missing numeric field `{k}`")))
        };
        let mut report = EvalReport {
            label: map.get("label").and_then(Value::as_str).unwrap_or_default().to_owned(),
            iou_threshold: num("iou_threshold")?,
            interpolation: map
                .get("interpolation")
                .and_then(Value::as_str)
                .unwrap_or("coco101")
                .parse()
                .map_err(EvalError::Report)?,
            ap_hand: 0.0,
            map_obj: 0.0,
            ap_h_side: 0.0,
            ap_h_state: 0.0,
            map_h_obj: 0.0,
            map_all: 0.0,
            mar_obj: num("mar_obj")?,
            per_category: Vec::new(),
            counts: BTreeMap::new(),
        };
        for metric in Metric::ALL {
            let v = num(metric.key())?;
            if !(0.0..=100.0).contains(&v) {
                return Err(EvalError::Report(format!("`{}` = {v} outside [0, 100]", metric.key())));
            }
            report.set(metric, v);
        }
        for (key, v) in map {
            if let Some(name) = key.strip_prefix("ap_obj/") {
                let id = report.per_category.len() as CategoryId + 1;
                let get = |prefix: &str| map.get(&format!("{prefix}/{name}")).and_then(Value::as_f64);
                report.per_category.push(CategoryAp {
                    id,
                    name: name.to_owned(),
                    obj: v.as_f64(),
                    h_obj: get("ap_h_obj"),
                    all: get("ap_all"),
                });
            }
        }
        for metric in Metric::ALL {
            let count = |prefix: &str| {
                map.get(&format!("{prefix}/{}", metric.key()))
                    .and_then(Value::as_u64)
                    .map(|v| v as usize)
            };
            if let (Some(tp), Some(fp), Some(fn_)) = (count("tp"), count("fp"), count("fn")) {
                report.counts.insert(metric, MetricCounts { tp, fp, fn_ });
            }
        }
        Ok(report)
    }
}
