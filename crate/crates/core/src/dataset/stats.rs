//! Dataset statistics, video-level splits and seeded frame subsampling.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, FrameSet, ValidationError, VideoId};
use crate::model::{CategoryId, ContactState, HandSide};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub id: CategoryId,
    pub name: String,
    pub all: usize,
    pub active: usize,
}

/// Dataset-level counts, one row per line of the statistics table.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetStats {
    pub videos: usize,
    pub images: usize,
    pub hands: usize,
    pub hands_in_contact: usize,
    pub hands_not_in_contact: usize,
    pub left_hands: usize,
    pub right_hands: usize,
    /// Categories with at least one instance.
    pub object_categories: usize,
    pub objects: usize,
    pub active_objects: usize,
    pub per_category: Vec<CategoryCount>,
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

impl DatasetStats {
    pub fn rows(&self) -> Vec<(&'static str, usize)> {
        vec![
            ("#videos", self.videos),
            ("#images", self.images),
            ("#hands", self.hands),
            ("#hands in contact", self.hands_in_contact),
            ("#hands not in contact", self.hands_not_in_contact),
            ("#left hands", self.left_hands),
            ("#right hands", self.right_hands),
            ("#object categories", self.object_categories),
            ("#objects", self.objects),
            ("#active objects", self.active_objects),
        ]
    }

    /// Two-column text table followed by the per-category histogram.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let width = self.rows().iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in self.rows() {
            out.push_str(&format!("{k:<width$} | {}\n", thousands(v)));
        }
        if !self.per_category.is_empty() {
            let nw = self.per_category.iter().map(|c| c.name.len()).max().unwrap_or(0).max(8);
            out.push('\n');
            out.push_str(&format!("{:<nw$} | {:>8} | {:>8}\n", "category", "all", "active"));
            for c in &self.per_category {
                out.push_str(&format!(
                    "{:<nw$} | {:>8} | {:>8}\n",
                    c.name,
                    thousands(c.all),
                    thousands(c.active)
                ));
            }
        }
        out
    }
}

pub fn stats(fs: &FrameSet) -> DatasetStats {
    let mut s = DatasetStats {
        images: fs.len(),
        videos: fs.frames().iter().map(|f| f.video).collect::<BTreeSet<_>>().len(),
        ..Default::default()
    };
    let mut per_cat: BTreeMap<CategoryId, (usize, usize)> = BTreeMap::new();
    for f in fs.frames() {
        for h in &f.hands {
            s.hands += 1;
            match h.state {
                ContactState::InContact => s.hands_in_contact += 1,
                ContactState::NoContact => s.hands_not_in_contact += 1,
            }
            match h.side {
                HandSide::Left => s.left_hands += 1,
                HandSide::Right => s.right_hands += 1,
            }
        }
        for o in &f.objects {
            s.objects += 1;
            let e = per_cat.entry(o.category).or_default();
            e.0 += 1;
            if o.active {
                s.active_objects += 1;
                e.1 += 1;
            }
        }
    }
    s.object_categories = per_cat.values().filter(|(all, _)| *all > 0).count();
    s.per_category = fs
        .categories()
        .iter()
        .map(|c| {
            let (all, active) = per_cat.get(&c.id).copied().unwrap_or_default();
            CategoryCount {
                id: c.id,
                name: c.name.clone(),
                all,
                active,
            }
        })
        .collect();
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn label(self) -> &'static str {
        match self {
            Split::Train => "Train",
            Split::Val => "Val",
            Split::Test => "Test",
        }
    }
}

/// Video to split assignment.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitSpec {
    assignment: BTreeMap<VideoId, Split>,
}

#[derive(Debug, Deserialize)]
struct SplitDoc {
    #[serde(default)]
    train: Vec<VideoId>,
    #[serde(default)]
    val: Vec<VideoId>,
    #[serde(default)]
    test: Vec<VideoId>,
}

impl SplitSpec {
    pub fn new(pairs: impl IntoIterator<Item = (VideoId, Split)>) -> Result<Self, ValidationError> {
        let mut assignment = BTreeMap::new();
        for (video, split) in pairs {
            if assignment.insert(video, split).is_some() {
                return Err(ValidationError::VideoAssignedTwice(video));
            }
        }
        Ok(Self { assignment })
    }

    pub fn get(&self, video: VideoId) -> Option<Split> {
        self.assignment.get(&video).copied()
    }
}

/// Parses `{"train": [video ids], "val": [...], "test": [...]}`.
pub fn parse_split_spec(text: &str) -> Result<SplitSpec, DatasetError> {
    let doc: SplitDoc = serde_json::from_str(text)?;
    let pairs = doc
        .train
        .into_iter()
        .map(|v| (v, Split::Train))
        .chain(doc.val.into_iter().map(|v| (v, Split::Val)))
        .chain(doc.test.into_iter().map(|v| (v, Split::Test)));
    Ok(SplitSpec::new(pairs)?)
}

/// One column of the split table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub split: Split,
    pub videos: usize,
    pub images: usize,
    pub percent_images: f64,
    pub hands: usize,
    pub objects: usize,
    pub active_objects: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutput {
    pub train: FrameSet,
    pub val: FrameSet,
    pub test: FrameSet,
    pub rows: Vec<SplitRow>,
}

impl SplitOutput {
    pub fn get(&self, split: Split) -> &FrameSet {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    /// Rows `#Videos`, `#images`, `%images`, `#Hands`, `#Objects`, `#Active Objects`
    /// against columns Train, Val, Test.
    pub fn render(&self) -> String {
        let mut lines = vec![format!(
            "{:<16} | {:>8} | {:>8} | {:>8}",
            "Split", "Train", "Val", "Test"
        )];
        let row = |name: &str, f: &dyn Fn(&SplitRow) -> String| {
            let cells: Vec<_> = self.rows.iter().map(|r| format!("{:>8}", f(r))).collect();
            format!("{name:<16} | {}", cells.join(" | "))
        };
        lines.push(row("#Videos", &|r| thousands(r.videos)));
        lines.push(row("#images", &|r| thousands(r.images)));
        lines.push(row("%images", &|r| format!("{:.2}", r.percent_images)));
        lines.push(row("#Hands", &|r| thousands(r.hands)));
        lines.push(row("#Objects", &|r| thousands(r.objects)));
        lines.push(row("#Active Objects", &|r| thousands(r.active_objects)));
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

/// Partitions frames by video. Every video of `fs` must be assigned.
pub fn split(fs: &FrameSet, spec: &SplitSpec) -> Result<SplitOutput, ValidationError> {
    let video_ids: BTreeSet<_> = fs
        .videos()
        .iter()
        .map(|v| v.id)
        .chain(fs.frames().iter().map(|f| f.video))
        .collect();
    if let Some(&v) = video_ids.iter().find(|&&v| spec.get(v).is_none()) {
        return Err(ValidationError::UnassignedVideo(v));
    }
    let total = fs.len();
    let part = |split: Split| {
        let frames = fs
            .frames()
            .iter()
            .filter(|f| spec.get(f.video) == Some(split))
            .cloned()
            .collect();
        let videos = fs
            .videos()
            .iter()
            .filter(|v| spec.get(v.id) == Some(split))
            .cloned()
            .collect();
        fs.subset(videos, frames)
    };
    let (train, val, test) = (part(Split::Train), part(Split::Val), part(Split::Test));
    let rows = [(&train, Split::Train), (&val, Split::Val), (&test, Split::Test)]
        .into_iter()
        .map(|(set, split)| {
            let s = stats(set);
            SplitRow {
                split,
                videos: set.videos().len(),
                images: s.images,
                percent_images: if total == 0 {
                    0.0
                } else {
                    100.0 * s.images as f64 / total as f64
                },
                hands: s.hands,
                objects: s.objects,
                active_objects: s.active_objects,
            }
        })
        .collect();
    Ok(SplitOutput {
        train,
        val,
        test,
        rows,
    })
}

/// Number of frames kept for `fraction` of `n`: `ceil(fraction * n)`.
fn subsample_count(n: usize, fraction: f64) -> usize {
    // guard against products like 0.07 * 100 = 7.000000000000001
    let raw = fraction * n as f64;
    let rounded = raw.round();
    let k = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    (k as usize).min(n)
}

/// Seeded uniform frame subsample of `ceil(fraction * N)` frames, in input order.
pub fn subsample(fs: &FrameSet, fraction: f64, seed: u64) -> Result<FrameSet, ValidationError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(ValidationError::BadFraction(fraction));
    }
    let n = fs.len();
    let k = subsample_count(n, fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    let frames = picked.into_iter().map(|i| fs.frames()[i].clone()).collect();
    Ok(fs.subset(fs.videos().to_vec(), frames))
}
