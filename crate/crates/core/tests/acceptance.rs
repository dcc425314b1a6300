//! Acceptance criteria, one PASS/FAIL line each.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use ehoi_core::augment::{self, blur_frame, convolve, generate_kernel, BlurKernel, KERNEL_SUM_TOLERANCE};
use ehoi_core::dataset::{self, read_annotations, read_detections, DetectionOptions, FrameSet};
use ehoi_core::geometry::{BBox, BinaryMask, ImageSize};
use ehoi_core::matcher::match_frame;
use ehoi_core::metrics::{
    average_precision, evaluate, AllAveraging, ApConfig, AttributeConstraints, Evaluation, Interpolation,
    Metric, ScoredMatch,
};
use ehoi_core::model::{
    decode_offset, encode_offset, ContactState, HandRecord, HandSide, ObjectRecord, OffsetVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c1_iou_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let mut corners = || {
            let (a, b) = (r.random_range(0..=64i64), r.random_range(0..=64i64));
            (a.min(b), a.max(b))
        };
        let ((ax1, ax2), (ay1, ay2), (bx1, bx2), (by1, by2)) = (corners(), corners(), corners(), corners());
        let a = [ax1, ay1, ax2 - ax1, ay2 - ay1];
        let b = [bx1, by1, bx2 - bx1, by2 - by1];
        let fa = BBox::new(a[0] as f64, a[1] as f64, a[2] as f64, a[3] as f64);
        let fb = BBox::new(b[0] as f64, b[1] as f64, b[2] as f64, b[3] as f64);
        let err = (fa.iou(&fb) - raster_iou(a, b)).abs();
        worst = worst.max(err);
        ensure!(err <= 1e-9, "pair {a:?} {b:?}: analytic {} raster {}", fa.iou(&fb), raster_iou(a, b));
    }
    let t = start.elapsed();
    ensure!(t < Duration::from_secs(1), "took {t:?}");
    Ok(format!("1000 pairs, max |err| {worst:e}, {t:.0?}"))
}

fn c2_ap_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    let mut cases = 0;
    for _ in 0..500 {
        let n = r.random_range(0..=8);
        // coarse scores so ties occur
        let matches: Vec<ScoredMatch> = (0..n)
            .map(|_| ScoredMatch {
                score: r.random_range(0..=6) as f64 / 6.0,
                is_tp: r.random_bool(0.6),
            })
            .collect();
        let tps = matches.iter().filter(|m| m.is_tp).count();
        let gt = (tps + r.random_range(0..=3)).max(1);
        let coco = average_precision(&matches, gt, Interpolation::Coco101);
        let oc = oracle_ap_coco(&matches, gt);
        ensure!((coco - oc).abs() <= 1e-9, "coco {coco} vs oracle {oc} on {matches:?} gt {gt}");
        let all = average_precision(&matches, gt, Interpolation::AllPoints);
        let oa = oracle_ap_all_points(&matches, gt);
        ensure!(all == oa, "allpoints {all} vs oracle {oa} on {matches:?} gt {gt}");
        cases += 1;
    }
    let t = start.elapsed();
    ensure!(t < Duration::from_secs(5), "took {t:?}");
    Ok(format!("{cases} cases, both interpolations, {t:.0?}"))
}

fn c3_perfection() -> Outcome {
    let gt = read_annotations(&fixture("fixture_gt.json")).map_err(|e| e.to_string())?;
    let from_file = read_detections(&fixture("fixture_perfect_dets.json"), &DetectionOptions::default())
        .map_err(|e| e.to_string())?;
    for dets in [from_file, gt.to_detections()] {
        for interpolation in [Interpolation::Coco101, Interpolation::AllPoints] {
            for all_averaging in [AllAveraging::PerCategory, AllAveraging::Pooled] {
                let cfg = ApConfig {
                    interpolation,
                    all_averaging,
                    ..ApConfig::default()
                };
                let rep = evaluate(&gt, &dets, &cfg).map_err(|e| e.to_string())?;
                for m in Metric::ALL {
                    ensure!(rep.value(m) == 100.0, "{} = {} ({interpolation:?})", m.label(), rep.value(m));
                }
            }
        }
    }
    Ok("all six metrics = 100.0 on the 12-frame fixture".into())
}

fn random_frame(r: &mut ChaCha8Rng) -> (Vec<HandRecord>, Vec<ObjectRecord>, ImageSize) {
    let size = ImageSize::new(r.random_range(64..=640), r.random_range(48..=480)).unwrap();
    let (w, h) = (size.width as f64, size.height as f64);
    let rbox = |r: &mut ChaCha8Rng| {
        let bw = r.random_range(1.0..w / 2.0);
        let bh = r.random_range(1.0..h / 2.0);
        BBox::new(r.random_range(0.0..w - bw), r.random_range(0.0..h - bh), bw, bh)
    };
    let objects: Vec<ObjectRecord> = (0..r.random_range(0..=10u64))
        .map(|id| ObjectRecord {
            id,
            bbox: rbox(r),
            score: r.random_range(0..=4) as f64 / 4.0,
            category: 1,
            active: false,
            linked_hand: None,
            distance_3d: None,
        })
        .collect();
    let hands = (0..r.random_range(0..=2u64))
        .map(|id| {
            let contact = r.random_bool(0.8);
            let a: f64 = r.random_range(0.0..std::f64::consts::TAU);
            HandRecord {
                id,
                bbox: rbox(r),
                score: 0.9,
                side: HandSide::Left,
                side_score: 0.9,
                state: if contact { ContactState::InContact } else { ContactState::NoContact },
                state_score: 0.9,
                offset: contact.then(|| OffsetVector::new(a.cos(), a.sin(), r.random_range(0.0..0.5)).unwrap()),
            }
        })
        .collect();
    (hands, objects, size)
}

fn c4_matcher() -> Outcome {
    let mut r = rng(4);
    let mut resolved = 0;
    for i in 0..500 {
        let (hands, objects, size) = random_frame(&mut r);
        let results = match_frame(&hands, &objects, size).map_err(|e| e.to_string())?;
        ensure!(
            results.len() == hands.iter().filter(|h| h.state.is_contact()).count(),
            "frame {i}: wrong result count"
        );
        for res in &results {
            let hand = hands.iter().find(|h| h.id == res.hand).unwrap();
            let off = hand.offset.unwrap();
            let c = (hand.bbox.x + hand.bbox.w / 2.0, hand.bbox.y + hand.bbox.h / 2.0);
            let len = off.magnitude() * (size.width as f64).hypot(size.height as f64);
            let p = (c.0 + len * off.vx(), c.1 + len * off.vy());
            ensure!(
                (res.interaction_point.x - p.0).abs() < 1e-9 && (res.interaction_point.y - p.1).abs() < 1e-9,
                "frame {i}: interaction point"
            );
            let expected = brute_active_object(&hand.bbox, p, &objects);
            ensure!(res.active_object == expected, "frame {i}: got {:?}, scan {:?}", res.active_object, expected);
            if let Some(id) = res.active_object {
                let o = objects.iter().find(|o| o.id == id).unwrap();
                ensure!(o.bbox.intersection_area(&hand.bbox) > 0.0, "frame {i}: selected object does not overlap");
                resolved += 1;
            }
        }
        let scale = |b: BBox| BBox::new(b.x * 3.0, b.y * 3.0, b.w * 3.0, b.h * 3.0);
        let big_hands: Vec<_> = hands.iter().map(|h| HandRecord { bbox: scale(h.bbox), ..h.clone() }).collect();
        let big_objs: Vec<_> = objects.iter().map(|o| ObjectRecord { bbox: scale(o.bbox), ..o.clone() }).collect();
        let big_size = ImageSize::new(size.width * 3, size.height * 3).unwrap();
        let scaled = match_frame(&big_hands, &big_objs, big_size).map_err(|e| e.to_string())?;
        let ids = |v: &[ehoi_core::MatchResult]| v.iter().map(|m| m.active_object).collect::<Vec<_>>();
        ensure!(ids(&scaled) == ids(&results), "frame {i}: x3 scaling changed the selection");
    }
    Ok(format!("500 frames, {resolved} hands resolved, x3 scale invariant"))
}

fn c5_codec() -> Outcome {
    let mut r = rng(5);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let size = ImageSize::new(r.random_range(1..=4000), r.random_range(1..=4000)).unwrap();
        let (w, h) = (size.width as f64, size.height as f64);
        let rbox = |r: &mut ChaCha8Rng| {
            let bw = r.random_range(0.0..w);
            let bh = r.random_range(0.0..h);
            BBox::new(r.random_range(0.0..=w - bw), r.random_range(0.0..=h - bh), bw, bh)
        };
        let (hb, ob) = (rbox(&mut r), rbox(&mut r));
        let p = decode_offset(&hb, &encode_offset(&hb, &ob, size), size);
        let c = ob.center();
        let err = (p.x - c.x).hypot(p.y - c.y) / size.diagonal();
        worst = worst.max(err);
        ensure!(err < 1e-6, "hand {hb:?} object {ob:?} size {size:?}: relative error {err}");
    }
    let hb = BBox::new(10.0, 20.0, 30.0, 40.0);
    let same = BBox::new(15.0, 25.0, 20.0, 30.0);
    let size = ImageSize::new(100, 100).unwrap();
    let off = encode_offset(&hb, &same, size);
    ensure!(off.to_array() == [1.0, 0.0, 0.0], "coincident centers encoded as {:?}", off.to_array());
    ensure!(decode_offset(&hb, &off, size) == hb.center(), "coincident decode");
    Ok(format!("10000 triples, max error {worst:e} of the diagonal; coincident case (1,0,0)"))
}

fn rect_mask(w: usize, h: usize, r: [usize; 4]) -> BinaryMask {
    let mut m = BinaryMask::new(w, h);
    for y in r[1]..r[1] + r[3] {
        for x in r[0]..r[0] + r[2] {
            m.set(x, y, true);
        }
    }
    m
}

fn c6_blur_identities() -> Outcome {
    let mut r = rng(6);
    let (w, h) = (48, 40);
    let img = random_image(&mut r, w, h, 3);
    // quantized like an 8-bit file
    let img = augment::Image::new(w, h, 3, img.samples().iter().map(|v| (v * 255.0).round() / 255.0).collect())
        .map_err(|e| e.to_string())?;
    let rects = [[5, 6, 10, 8], [20, 15, 12, 12], [30, 4, 1, 1]];
    let masks: Vec<_> = rects.iter().map(|&rc| rect_mask(w, h, rc)).collect();
    let originals: Vec<_> = masks.iter().map(|m| m.bounding_box()).collect();

    for size in [1, 3, 15] {
        let delta = BlurKernel::delta(size).map_err(|e| e.to_string())?;
        let (out, boxes) = blur_frame(&img, &masks, &delta, 0.5).map_err(|e| e.to_string())?;
        ensure!(out == img, "delta {size}: image changed");
        ensure!(boxes == originals, "delta {size}: boxes changed");
    }

    // weight on the left end of the middle row: out(x) = in(x - 3)
    let mut weights = vec![0.0; 49];
    weights[3 * 7] = 1.0;
    let shift = BlurKernel::new(7, weights).map_err(|e| e.to_string())?;
    let (_, boxes) = blur_frame(&img, &masks[..2], &shift, 0.5).map_err(|e| e.to_string())?;
    for (b, orig) in boxes.iter().zip(&originals) {
        let expected = orig.unwrap().translate(3.0, 0.0);
        ensure!(*b == Some(expected), "shift: {b:?} != {expected:?}");
    }

    let mut kernels = 0;
    for size in [3, 5, 7, 15, 21] {
        for points in [2, 4, 6] {
            for seed in [0, 1, 42, 1234] {
                let k = generate_kernel(size, points, seed).map_err(|e| e.to_string())?;
                let sum: f64 = k.weights().iter().sum();
                ensure!((sum - 1.0).abs() <= KERNEL_SUM_TOLERANCE, "kernel ({size},{points},{seed}) sums to {sum}");
                let again = generate_kernel(size, points, seed).map_err(|e| e.to_string())?;
                let bits = |k: &BlurKernel| k.weights().iter().map(|w| w.to_bits()).collect::<Vec<_>>();
                ensure!(bits(&k) == bits(&again), "kernel ({size},{points},{seed}) not replayable");
                kernels += 1;
            }
        }
    }
    Ok(format!("delta passthrough, 3 px shift, {kernels} kernels normalized and replayable"))
}

fn c7_convolution() -> Outcome {
    let mut r = rng(7);
    let mut worst = 0.0f64;
    let mut runs = 0;
    for (w, h) in [(5, 5), (7, 9), (9, 7)] {
        for channels in [1, 3] {
            let img = random_image(&mut r, w, h, channels);
            let mut kernels = vec![
                BlurKernel::new(3, vec![1.0 / 9.0; 9]).map_err(|e| e.to_string())?,
                generate_kernel(5, 4, r.random()).map_err(|e| e.to_string())?,
                generate_kernel(7, 3, r.random()).map_err(|e| e.to_string())?,
                generate_kernel(11, 5, r.random()).map_err(|e| e.to_string())?,
            ];
            let raw: Vec<f64> = (0..25).map(|_| r.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            kernels.push(BlurKernel::new(5, raw.iter().map(|v| v / total).collect()).map_err(|e| e.to_string())?);
            for k in &kernels {
                let fast = convolve(&img, k);
                let slow = naive_convolve(&img, k.size(), k.weights());
                for (a, b) in fast.samples().iter().zip(&slow) {
                    worst = worst.max((a - b).abs());
                }
                runs += 1;
            }
        }
    }
    ensure!(worst < 1e-9, "max abs error {worst}");
    Ok(format!("{runs} image/kernel pairs, max abs error {worst:e}"))
}

fn c8_dataset() -> Outcome {
    let text = std::fs::read_to_string(fixture("fixture_gt.json")).map_err(|e| e.to_string())?;
    let fs = dataset::parse_annotations(&text).map_err(|e| e.to_string())?;
    let again = dataset::parse_annotations(&dataset::write_annotations(&fs)).map_err(|e| e.to_string())?;
    ensure!(again == fs, "round trip changed the dataset");

    let s = dataset::stats(&fs);
    let got = [
        s.videos,
        s.images,
        s.hands,
        s.hands_in_contact,
        s.hands_not_in_contact,
        s.left_hands,
        s.right_hands,
        s.object_categories,
        s.objects,
        s.active_objects,
    ];
    // 4 videos x 3 frames; per frame one contact hand, one free hand, five objects, one active
    let expected = [4, 12, 24, 12, 12, 12, 12, 19, 60, 12];
    ensure!(got == expected, "stats {got:?} != {expected:?}");

    let spec_text = std::fs::read_to_string(fixture("fixture_split.json")).map_err(|e| e.to_string())?;
    let spec = dataset::parse_split_spec(&spec_text).map_err(|e| e.to_string())?;
    let parts = dataset::split(&fs, &spec).map_err(|e| e.to_string())?;
    let ids = |s: &FrameSet| s.frames().iter().map(|f| f.id).collect::<BTreeSet<_>>();
    let (a, b, c) = (ids(&parts.train), ids(&parts.val), ids(&parts.test));
    ensure!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c), "split frames overlap");
    let all: BTreeSet<_> = a.union(&b).chain(c.iter()).copied().collect();
    ensure!(all == ids(&fs), "split is not exhaustive");
    let videos = |s: &FrameSet| s.frames().iter().map(|f| f.video).collect::<BTreeSet<_>>();
    ensure!(
        videos(&parts.train).is_disjoint(&videos(&parts.test)) && videos(&parts.val).is_disjoint(&videos(&parts.test)),
        "a video spans splits"
    );
    let pct: f64 = parts.rows.iter().map(|r| r.percent_images).sum();
    ensure!((pct - 100.0).abs() <= 0.01, "%images sums to {pct}");

    // a split shaped like the reference table: 992 / 734 / 1330 images
    let big = table_shaped_set(&[992, 734, 1330])?;
    let spec = dataset::SplitSpec::new([(1, dataset::Split::Train), (2, dataset::Split::Val), (3, dataset::Split::Test)])
        .map_err(|e| e.to_string())?;
    let table = dataset::split(&big, &spec).map_err(|e| e.to_string())?;
    let reference = [32.46, 24.01, 43.53];
    let rendered = table.render();
    let line = rendered.lines().find(|l| l.starts_with("%images")).unwrap_or_default().to_owned();
    let printed: Vec<f64> = line.split('|').skip(1).map(|c| c.trim().parse().unwrap_or(f64::NAN)).collect();
    for (p, want) in printed.iter().zip(reference) {
        ensure!((p - want).abs() <= 0.0100001, "%images row {line:?} vs {reference:?}");
    }
    ensure!(printed.len() == 3, "%images row {line:?}");
    Ok(format!("round trip, stats {expected:?}, split sums to {pct:.2}%, row \"{}\"", line.trim()))
}

fn table_shaped_set(counts: &[usize]) -> Result<FrameSet, String> {
    let mut images = Vec::new();
    let mut id = 1;
    for (v, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            images.push(serde_json::json!({"id": id, "file_name": format!("{id}.png"),
                "width": 1920, "height": 1080, "video_id": v + 1}));
            id += 1;
        }
    }
    let doc = serde_json::json!({"categories": [{"id": 1, "name": "socket"}], "images": images, "annotations": []});
    dataset::parse_annotations(&doc.to_string()).map_err(|e| e.to_string())
}

fn c9_monotonicity() -> Outcome {
    let mut r = rng(9);
    let mut checks = 0;
    let flags = |side, state, object| AttributeConstraints {
        require_side: side,
        require_state: state,
        require_object: object,
        require_hand: false,
    };
    for i in 0..100 {
        let (gt, dets) = random_instance(&mut r, 3);
        for all_averaging in [AllAveraging::PerCategory, AllAveraging::Pooled] {
            let cfg = ApConfig {
                all_averaging,
                ..ApConfig::default()
            };
            let ev = Evaluation::new(&gt, &dets, cfg).map_err(|e| e.to_string())?;
            let hand = |c: AttributeConstraints| ev.hand_ap(c).ap;
            let inter = |c: AttributeConstraints| ev.interaction_map(c).ap;
            // every constraint set against each one-flag relaxation
            for bits in 0..8u8 {
                let (s, t, o) = (bits & 1 != 0, bits & 2 != 0, bits & 4 != 0);
                let strict = flags(s, t, o);
                for relaxed in [flags(false, t, o), flags(s, false, o), flags(s, t, false)] {
                    ensure!(inter(relaxed) >= inter(strict), "instance {i}: interaction {relaxed:?} < {strict:?}");
                    if !o {
                        ensure!(hand(relaxed) >= hand(strict), "instance {i}: hand {relaxed:?} < {strict:?}");
                    }
                    checks += 1;
                }
            }
            ensure!(
                ev.object_map(AttributeConstraints::NONE).ap >= ev.object_map(AttributeConstraints::hand()).ap,
                "instance {i}: mAP Obj < mAP H+Obj"
            );
            let rep = ev.report();
            ensure!(
                rep.ap_hand >= rep.ap_h_side && rep.ap_hand >= rep.ap_h_state && rep.map_obj >= rep.map_h_obj,
                "instance {i}: report ordering {rep:?}"
            );
            checks += 2;
        }
    }
    Ok(format!("100 instances, {checks} relaxation checks"))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ehoi")
}

fn run_cli(out: &Path, jobs: usize, args: &[&str]) -> Result<(), String> {
    let o = Command::new(bin())
        .arg("--out")
        .arg(out)
        .arg("--jobs")
        .arg(jobs.to_string())
        .args(args)
        .env_remove("EHOI_OUT_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(())
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn c10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path().join("data");
    let aug_gt = write_augment_dataset(&data, 4, 10);
    let (fgt, fdets) = (fixture("fixture_gt.json"), fixture("fixture_perfect_dets.json"));
    let (mgt, mdets) = (fixture("micro_gt.json"), fixture("micro_dets.json"));
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    let mut snapshots = Vec::new();
    for (run, jobs) in [(0, 1), (1, 1), (2, 8)] {
        let out = tmp.path().join(format!("run{run}"));
        let o = |name: &str| out.join(name);
        run_cli(&o("eval_fixture"), jobs, &["evaluate", "--gt", &s(&fgt), "--dets", &s(&fdets)])?;
        run_cli(&o("eval_micro"), jobs, &["evaluate", "--gt", &s(&mgt), "--dets", &s(&mdets), "--interp", "allpoints"])?;
        run_cli(&o("match"), jobs, &["match", "--dets", &s(&mdets), "--gt", &s(&mgt)])?;
        run_cli(
            &o("augment"),
            jobs,
            &["augment", "--gt", &s(&aug_gt), "--images", &s(&data.join("images")), "--masks", &s(&data.join("masks")), "--seed", "42"],
        )?;
        run_cli(
            &o("report"),
            jobs,
            &[
                "report",
                &s(&o("eval_fixture/report.json")),
                &s(&o("eval_micro/report.json")),
                "--labels",
                "perfect,micro",
            ],
        )?;
        snapshots.push(snapshot(&out));
    }
    ensure!(!snapshots[0].is_empty(), "no outputs written");
    ensure!(snapshots[0] == snapshots[1], "two runs with --jobs 1 differ");
    ensure!(snapshots[0] == snapshots[2], "--jobs 1 and --jobs 8 differ");
    Ok(format!(
        "evaluate, match, augment --seed 42, report: {} files byte-identical over 2 runs and --jobs 1/8",
        snapshots[0].len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("IoU oracle equivalence", c1_iou_oracle),
        ("AP oracle equivalence", c2_ap_oracle),
        ("perfection fixture", c3_perfection),
        ("matcher brute-force property", c4_matcher),
        ("offset codec round trip", c5_codec),
        ("motion-blur identities", c6_blur_identities),
        ("convolution oracle", c7_convolution),
        ("dataset round trip and stats", c8_dataset),
        ("metric monotonicity", c9_monotonicity),
        ("determinism", c10_determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  criterion {:>2}: {name} ({detail}) [{:.2?}]", i + 1, t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {:>2}: {name}: {why} [{:.2?}]", i + 1, t.elapsed());
            }
        }
    }
    let total = start.elapsed();
    println!("acceptance: {} passed, {failed} failed in {total:.2?}", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
