//! Average precision and the hand/object interaction metric suite.

mod evaluate;
mod table;

use serde::{Deserialize, Serialize};

use crate::geometry::BBox;
use crate::model::{HandRecord, ObjectRecord};

pub use evaluate::{
    evaluate, AttributeConstraints, CategoryAp, EvalError, EvalReport, Evaluation, Metric,
    MetricCounts, PoolResult, PoolSummary, REPORT_SCHEMA_VERSION,
};
pub use table::{report_table, ReportTable};

/// How the precision envelope is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Mean of the envelope sampled at recall 0, 0.01, ..., 1.
    #[default]
    Coco101,
    /// Exact area under the envelope.
    AllPoints,
}

impl Interpolation {
    pub fn name(self) -> &'static str {
        match self {
            Self::Coco101 => "coco101",
            Self::AllPoints => "allpoints",
        }
    }
}

impl std::str::FromStr for Interpolation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coco101" => Ok(Self::Coco101),
            "allpoints" => Ok(Self::AllPoints),
            other => Err(format!("unknown interpolation {other:?}")),
        }
    }
}

/// How the full-interaction metric is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllAveraging {
    /// One pool per active-object category, mean over categories with ground truth.
    #[default]
    PerCategory,
    /// A single pool over every in-contact hand.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApConfig {
    pub iou_threshold: f64,
    pub interpolation: Interpolation,
    pub all_averaging: AllAveraging,
}

impl Default for ApConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            interpolation: Interpolation::Coco101,
            all_averaging: AllAveraging::PerCategory,
        }
    }
}

impl ApConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.iou_threshold > 0.0 && self.iou_threshold < 1.0 {
            Ok(())
        } else {
            Err(EvalError::BadThreshold(self.iou_threshold))
        }
    }
}

/// A detection's confidence and whether it was judged a true positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredMatch {
    pub score: f64,
    pub is_tp: bool,
}

impl ScoredMatch {
    pub fn tp(score: f64) -> Self {
        Self { score, is_tp: true }
    }

    pub fn fp(score: f64) -> Self {
        Self {
            score,
            is_tp: false,
        }
    }
}

/// Indices of `matches` by descending score; ties keep input order.
fn rank_order(matches: &[ScoredMatch]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..matches.len()).collect();
    order.sort_by(|&a, &b| matches[b].score.total_cmp(&matches[a].score));
    order
}

/// Cumulative `(recall, precision)` at every rank.
pub fn precision_recall(matches: &[ScoredMatch], gt_count: usize) -> Vec<(f64, f64)> {
    let mut tp = 0usize;
    rank_order(matches)
        .into_iter()
        .enumerate()
        .map(|(rank, i)| {
            tp += usize::from(matches[i].is_tp);
            let recall = if gt_count == 0 { 0.0 } else { tp as f64 / gt_count as f64 };
            (recall, tp as f64 / (rank + 1) as f64)
        })
        .collect()
}

/// Average precision in `[0, 1]`. Zero when there is no ground truth.
pub fn average_precision(matches: &[ScoredMatch], gt_count: usize, interpolation: Interpolation) -> f64 {
    if gt_count == 0 || matches.is_empty() {
        return 0.0;
    }
    let pr = precision_recall(matches, gt_count);
    match interpolation {
        Interpolation::Coco101 => {
            let mut envelope: Vec<f64> = pr.iter().map(|&(_, p)| p).collect();
            for i in (0..envelope.len().saturating_sub(1)).rev() {
                envelope[i] = envelope[i].max(envelope[i + 1]);
            }
            // recall thresholds as numpy.linspace(0, 1, 101) produces them
            let total: f64 = (0..=100)
                .map(|t| {
                    let r = t as f64 * 0.01;
                    let idx = pr.partition_point(|&(rc, _)| rc < r);
                    envelope.get(idx).copied().unwrap_or(0.0)
                })
                .sum();
            total / 101.0
        }
        Interpolation::AllPoints => {
            let mut recall = Vec::with_capacity(pr.len() + 2);
            let mut precision = Vec::with_capacity(pr.len() + 2);
            recall.push(0.0);
            precision.push(0.0);
            for &(r, p) in &pr {
                recall.push(r);
                precision.push(p);
            }
            recall.push(1.0);
            precision.push(0.0);
            for i in (0..precision.len() - 1).rev() {
                precision[i] = precision[i].max(precision[i + 1]);
            }
            (0..recall.len() - 1)
                .filter(|&i| recall[i + 1] != recall[i])
                .map(|i| (recall[i + 1] - recall[i]) * precision[i + 1])
                .sum()
        }
    }
}

/// Anything with a box.
pub trait Located {
    fn bbox(&self) -> BBox;
}

/// A located item with a confidence.
pub trait Scored: Located {
    fn score(&self) -> f64;
}

impl<T: Located + ?Sized> Located for &T {
    fn bbox(&self) -> BBox {
        (**self).bbox()
    }
}

impl<T: Scored + ?Sized> Scored for &T {
    fn score(&self) -> f64 {
        (**self).score()
    }
}

impl Located for HandRecord {
    fn bbox(&self) -> BBox {
        self.bbox
    }
}

impl Scored for HandRecord {
    fn score(&self) -> f64 {
        self.score
    }
}

impl Located for ObjectRecord {
    fn bbox(&self) -> BBox {
        self.bbox
    }
}

impl Scored for ObjectRecord {
    fn score(&self) -> f64 {
        self.score
    }
}

impl Located for BBox {
    fn bbox(&self) -> BBox {
        *self
    }
}

/// Score-ordered greedy matching of detections to ground truth within one image.
///
/// Detections are visited by descending score (ties in input order). Each picks
/// the not-yet-claimed ground truth of highest IoU at or above the threshold
/// (ties to the lower index). The pick is a true positive, and the ground truth
/// is claimed, only when `predicate` accepts the pair; otherwise the detection
/// is a false positive and the ground truth stays available.
///
/// The pick depends on geometry alone; tightening the predicate never raises AP.
pub fn greedy_assign<D, G, P>(dets: &[D], gts: &[G], iou_threshold: f64, predicate: P) -> Vec<ScoredMatch>
where
    D: Scored,
    G: Located,
    P: Fn(&D, &G) -> bool,
{
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score().total_cmp(&dets[a].score()));
    let gt_boxes: Vec<BBox> = gts.iter().map(Located::bbox).collect();
    let mut claimed = vec![false; gts.len()];
    order
        .into_iter()
        .map(|d| {
            let det = &dets[d];
            let db = det.bbox();
            let mut best: Option<(usize, f64)> = None;
            for (g, gb) in gt_boxes.iter().enumerate() {
                if claimed[g] {
                    continue;
                }
                let iou = db.iou(gb);
                if iou >= iou_threshold && best.is_none_or(|(_, b)| iou > b) {
                    best = Some((g, iou));
                }
            }
            match best {
                Some((g, _)) if predicate(det, &gts[g]) => {
                    claimed[g] = true;
                    ScoredMatch::tp(det.score())
                }
                _ => ScoredMatch::fp(det.score()),
            }
        })
        .collect()
}
