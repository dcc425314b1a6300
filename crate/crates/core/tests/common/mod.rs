//! Shared fixtures, random instance builders and brute-force reference
//! implementations for the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use ehoi_core::augment::Image;
use ehoi_core::dataset::{
    Category, CategoryTable, DetectionFrame, DetectionSet, Frame, FrameKind, FrameSet,
};
use ehoi_core::geometry::{BBox, ImageSize};
use ehoi_core::metrics::ScoredMatch;
use ehoi_core::model::{
    encode_offset, ContactState, HandRecord, HandSide, ObjectRecord, OffsetVector,
};
use image::{ImageBuffer, Luma};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

// ---------------------------------------------------------------- oracles

/// IoU of integer boxes by counting covered unit pixels on a grid.
pub fn raster_iou(a: [i64; 4], b: [i64; 4]) -> f64 {
    let inside = |r: [i64; 4], x: i64, y: i64| x >= r[0] && x < r[0] + r[2] && y >= r[1] && y < r[1] + r[3];
    let x_max = (a[0] + a[2]).max(b[0] + b[2]);
    let y_max = (a[1] + a[3]).max(b[1] + b[3]);
    let (mut inter, mut union) = (0u64, 0u64);
    for y in a[1].min(b[1])..y_max {
        for x in a[0].min(b[0])..x_max {
            let (ia, ib) = (inside(a, x, y), inside(b, x, y));
            inter += u64::from(ia && ib);
            union += u64::from(ia || ib);
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn to_int(b: &BBox) -> [i64; 4] {
    let r = [b.x, b.y, b.w, b.h];
    assert!(r.iter().all(|v| v.fract() == 0.0), "oracle needs integer boxes: {b:?}");
    r.map(|v| v as i64)
}

/// Precision and recall after each rank, ties broken by input order.
fn sweep(matches: &[ScoredMatch], gt: usize) -> Vec<(f64, f64)> {
    let mut sorted: Vec<ScoredMatch> = matches.to_vec();
    sorted.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
    let mut out = Vec::new();
    let mut tp = 0.0;
    for (k, m) in sorted.iter().enumerate() {
        if m.is_tp {
            tp += 1.0;
        }
        out.push((tp / gt as f64, tp / (k + 1) as f64));
    }
    out
}

/// Exact area: sum over ranks of recall gain times best precision from there on.
pub fn oracle_ap_all_points(matches: &[ScoredMatch], gt: usize) -> f64 {
    if gt == 0 {
        return 0.0;
    }
    let pr = sweep(matches, gt);
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for k in 0..pr.len() {
        let best = pr[k..].iter().map(|p| p.1).fold(0.0, f64::max);
        area += (pr[k].0 - prev_recall) * best;
        prev_recall = pr[k].0;
    }
    area
}

/// Mean over the 101 recall levels of `linspace(0, 1, 101)` of the best
/// precision reached at recall >= level.
pub fn oracle_ap_coco(matches: &[ScoredMatch], gt: usize) -> f64 {
    if gt == 0 {
        return 0.0;
    }
    let pr = sweep(matches, gt);
    let step = 1.0 / 100.0;
    let mut total = 0.0;
    for i in 0..=100 {
        let level = i as f64 * step;
        total += pr.iter().filter(|p| p.0 >= level).map(|p| p.1).fold(0.0, f64::max);
    }
    total / 101.0
}

/// Nested-loop correlation with explicit edge replication.
pub fn naive_convolve(img: &Image, size: usize, weights: &[f64]) -> Vec<f64> {
    let (w, h, ch) = (img.width() as i64, img.height() as i64, img.channels());
    let r = (size / 2) as i64;
    let mut out = Vec::with_capacity(img.samples().len());
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for ky in 0..size as i64 {
                    for kx in 0..size as i64 {
                        let mut sx = x + kx - r;
                        let mut sy = y + ky - r;
                        if sx < 0 {
                            sx = 0;
                        }
                        if sx >= w {
                            sx = w - 1;
                        }
                        if sy < 0 {
                            sy = 0;
                        }
                        if sy >= h {
                            sy = h - 1;
                        }
                        acc += weights[(ky * size as i64 + kx) as usize] * img.get(sx as usize, sy as usize, c);
                    }
                }
                out.push(acc);
            }
        }
    }
    out
}

/// Exhaustive scan: index of the object nearest `point` among those whose box
/// overlaps the hand with positive area, ties to higher score then lower id.
pub fn brute_active_object(hand: &BBox, point: (f64, f64), objects: &[ObjectRecord]) -> Option<u64> {
    let mut best: Option<(f64, &ObjectRecord)> = None;
    for o in objects {
        let ow = (hand.x + hand.w).min(o.bbox.x + o.bbox.w) - hand.x.max(o.bbox.x);
        let oh = (hand.y + hand.h).min(o.bbox.y + o.bbox.h) - hand.y.max(o.bbox.y);
        if ow <= 0.0 || oh <= 0.0 {
            continue;
        }
        let cx = o.bbox.x + o.bbox.w / 2.0;
        let cy = o.bbox.y + o.bbox.h / 2.0;
        let d = (cx - point.0).powi(2) + (cy - point.1).powi(2);
        let better = match best {
            None => true,
            Some((bd, bo)) => d < bd || (d == bd && (o.score > bo.score || (o.score == bo.score && o.id < bo.id))),
        };
        if better {
            best = Some((d, o));
        }
    }
    best.map(|(_, o)| o.id)
}

/// Score-ordered greedy matching using raster IoU.
pub fn oracle_greedy<D, G>(
    dets: &[D],
    gts: &[G],
    det_box: impl Fn(&D) -> BBox,
    det_score: impl Fn(&D) -> f64,
    gt_box: impl Fn(&G) -> BBox,
    thr: f64,
    accept: impl Fn(&D, &G) -> bool,
) -> Vec<ScoredMatch> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| det_score(&dets[b]).partial_cmp(&det_score(&dets[a])).unwrap());
    let mut taken = vec![false; gts.len()];
    let mut out = Vec::new();
    for d in order {
        let db = to_int(&det_box(&dets[d]));
        let mut pick: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            let v = raster_iou(db, to_int(&gt_box(gt)));
            if !taken[g] && v >= thr && pick.is_none_or(|(_, pv)| v > pv) {
                pick = Some((g, v));
            }
        }
        let score = det_score(&dets[d]);
        match pick {
            Some((g, _)) if accept(&dets[d], &gts[g]) => {
                taken[g] = true;
                out.push(ScoredMatch { score, is_tp: true });
            }
            _ => out.push(ScoredMatch { score, is_tp: false }),
        }
    }
    out
}

// ---------------------------------------------------------------- builders

pub fn categories(n: u32) -> CategoryTable {
    CategoryTable::new(
        (1..=n)
            .map(|id| Category {
                id,
                name: format!("cat{id}"),
            })
            .collect(),
    )
    .unwrap()
}

fn rand_box(rng: &mut ChaCha8Rng, w: i64, h: i64) -> BBox {
    let bw = rng.random_range(8..=w / 3);
    let bh = rng.random_range(8..=h / 3);
    let x = rng.random_range(0..=w - bw);
    let y = rng.random_range(0..=h - bh);
    BBox::new(x as f64, y as f64, bw as f64, bh as f64)
}

fn jitter(rng: &mut ChaCha8Rng, b: &BBox, amount: i64, size: ImageSize) -> BBox {
    let dx = rng.random_range(-amount..=amount) as f64;
    let dy = rng.random_range(-amount..=amount) as f64;
    let x = (b.x + dx).clamp(0.0, size.width as f64 - b.w);
    let y = (b.y + dy).clamp(0.0, size.height as f64 - b.h);
    BBox::new(x, y, b.w, b.h)
}

fn flip_side(s: HandSide) -> HandSide {
    match s {
        HandSide::Left => HandSide::Right,
        HandSide::Right => HandSide::Left,
    }
}

/// Integer-box ground truth over 1 to 4 frames and noisy detections of it.
pub fn random_instance(rng: &mut ChaCha8Rng, n_categories: u32) -> (FrameSet, DetectionSet) {
    let size = ImageSize::new(320, 240).unwrap();
    let mut frames = Vec::new();
    let mut det_frames = Vec::new();
    for fid in 1..=rng.random_range(1..=4u64) {
        let mut hands = Vec::new();
        let mut objects = Vec::new();
        let mut next_id = 1u64;
        for _ in 0..rng.random_range(1..=3) {
            let hb = rand_box(rng, 320, 240);
            let hid = next_id;
            next_id += 1;
            let contact = rng.random_bool(0.6);
            let mut offset = None;
            if contact {
                // an active object overlapping the hand
                let ob = jitter(rng, &hb, (hb.w.min(hb.h) / 2.0) as i64 - 1, size);
                offset = Some(encode_offset(&hb, &ob, size));
                objects.push(ObjectRecord {
                    id: next_id,
                    bbox: ob,
                    score: 1.0,
                    category: rng.random_range(1..=n_categories),
                    active: true,
                    linked_hand: Some(hid),
                    distance_3d: None,
                });
                next_id += 1;
            }
            hands.push(HandRecord {
                id: hid,
                bbox: hb,
                score: 1.0,
                side: if rng.random_bool(0.5) { HandSide::Left } else { HandSide::Right },
                side_score: 1.0,
                state: if contact { ContactState::InContact } else { ContactState::NoContact },
                state_score: 1.0,
                offset,
            });
        }
        for _ in 0..rng.random_range(0..=3) {
            objects.push(ObjectRecord {
                id: next_id,
                bbox: rand_box(rng, 320, 240),
                score: 1.0,
                category: rng.random_range(1..=n_categories),
                active: false,
                linked_hand: None,
                distance_3d: None,
            });
            next_id += 1;
        }

        // detections
        let mut dh = Vec::new();
        let mut dobj = Vec::new();
        let mut id = 1u64;
        for o in &objects {
            if rng.random_bool(0.85) {
                dobj.push(ObjectRecord {
                    id,
                    bbox: jitter(rng, &o.bbox, 4, size),
                    score: rng.random_range(1..=20) as f64 / 20.0,
                    category: if rng.random_bool(0.2) { rng.random_range(1..=n_categories) } else { o.category },
                    active: false,
                    linked_hand: None,
                    distance_3d: None,
                });
                id += 1;
            }
        }
        for _ in 0..rng.random_range(0..=2) {
            dobj.push(ObjectRecord {
                id,
                bbox: rand_box(rng, 320, 240),
                score: rng.random_range(1..=20) as f64 / 20.0,
                category: rng.random_range(1..=n_categories),
                active: false,
                linked_hand: None,
                distance_3d: None,
            });
            id += 1;
        }
        let mut det_hand_boxes: Vec<(BBox, HandSide, ContactState)> = hands
            .iter()
            .filter(|_| rng.random_bool(0.85))
            .map(|h| (h.bbox, h.side, h.state))
            .collect();
        for _ in 0..rng.random_range(0..=1) {
            det_hand_boxes.push((rand_box(rng, 320, 240), HandSide::Left, ContactState::InContact));
        }
        for (b, side, state) in det_hand_boxes {
            let bbox = jitter(rng, &b, 4, size);
            let side = if rng.random_bool(0.25) { flip_side(side) } else { side };
            let state = if rng.random_bool(0.25) {
                if state.is_contact() { ContactState::NoContact } else { ContactState::InContact }
            } else {
                state
            };
            let offset = state.is_contact().then(|| {
                let target = dobj.iter().find(|o| o.bbox.intersects(&bbox)).map(|o| o.bbox);
                match target {
                    Some(t) if rng.random_bool(0.8) => encode_offset(&bbox, &t, size),
                    _ => {
                        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                        OffsetVector::new(a.cos(), a.sin(), rng.random_range(0.0..0.3)).unwrap()
                    }
                }
            });
            dh.push(HandRecord {
                id,
                bbox,
                score: rng.random_range(1..=20) as f64 / 20.0,
                side,
                side_score: 0.9,
                state,
                state_score: 0.9,
                offset,
            });
            id += 1;
        }

        frames.push(Frame {
            id: fid,
            file_name: format!("{fid}.png"),
            size,
            video: 1,
            kind: FrameKind::Unspecified,
            depth_file: None,
            mask_file: None,
            hands,
            objects,
        });
        det_frames.push(DetectionFrame {
            hands: dh,
            objects: dobj,
            ..DetectionFrame::empty(fid, Some(size))
        });
    }
    let cats = categories(n_categories);
    (
        FrameSet::new(cats.clone(), Vec::new(), frames).unwrap(),
        DetectionSet::new(Some(cats), det_frames).unwrap(),
    )
}

/// A small on-disk dataset for the augment command: one RGB image and one
/// label map per frame, objects rasterized from their integer boxes.
pub fn write_augment_dataset(dir: &Path, frames: usize, seed: u64) -> PathBuf {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (64u32, 48u32);
    let images = dir.join("images");
    let masks = dir.join("masks");
    std::fs::create_dir_all(&images).unwrap();
    std::fs::create_dir_all(&masks).unwrap();
    let mut image_entries = Vec::new();
    let mut anns = Vec::new();
    let mut aid = 1;
    for f in 1..=frames as u64 {
        let pixels: Vec<u8> = (0..w * h * 3).map(|_| rng.random()).collect();
        ImageBuffer::<image::Rgb<u8>, _>::from_raw(w, h, pixels)
            .unwrap()
            .save(images.join(format!("f{f}.png")))
            .unwrap();
        let hand = [8 + f as i64, 10, 14, 14];
        let objs = [[18 + f as i64, 12, 16, 12], [40, 26, 12, 10]];
        let mut labels = vec![0u8; (w * h) as usize];
        for (k, o) in objs.iter().enumerate() {
            for y in o[1]..o[1] + o[3] {
                for x in o[0]..o[0] + o[2] {
                    labels[(y as u32 * w + x as u32) as usize] = k as u8 + 1;
                }
            }
        }
        ImageBuffer::<Luma<u8>, _>::from_raw(w, h, labels)
            .unwrap()
            .save(masks.join(format!("f{f}_mask.png")))
            .unwrap();
        image_entries.push(serde_json::json!({
            "id": f, "file_name": format!("f{f}.png"), "width": w, "height": h,
            "video_id": 1, "mask_file": format!("f{f}_mask.png")
        }));
        let hid = aid;
        anns.push(serde_json::json!({"id": hid, "image_id": f, "kind": "hand", "bbox": hand,
            "hand_side": "right", "contact_state": "contact"}));
        anns.push(serde_json::json!({"id": hid + 1, "image_id": f, "kind": "object", "bbox": objs[0],
            "category_id": 1, "active": true, "linked_hand_id": hid}));
        anns.push(serde_json::json!({"id": hid + 2, "image_id": f, "kind": "object", "bbox": objs[1],
            "category_id": 2}));
        aid += 3;
    }
    let doc = serde_json::json!({
        "categories": [{"id": 1, "name": "screwdriver"}, {"id": 2, "name": "pliers"}],
        "images": image_entries,
        "annotations": anns,
    });
    let gt = dir.join("gt.json");
    std::fs::write(&gt, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    gt
}

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, channels: usize) -> Image {
    Image::new(w, h, channels, (0..w * h * channels).map(|_| rng.random::<f64>()).collect()).unwrap()
}
