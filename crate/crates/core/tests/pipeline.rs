use std::collections::BTreeMap;
use std::path::Path;

use voxaug_core::io::{
    load_manifest, read_mask, read_volume, write_mask, write_volume, Laterality, Manifest, Record, RecordKind, Variant,
};
use voxaug_core::metrics::dsc;
use voxaug_core::pipeline::{
    build_training_set, plan_training_set, AugmentationConfig, BuildOptions, Counts,
};
use voxaug_core::style::MockBackend;
use voxaug_core::volume::PREPROCESS_DIMS;
use voxaug_core::{Mask, Volume};

fn lobes(x: usize, y: usize, z: usize) -> f64 {
    let lobe = |cx: f64| {
        ((x as f64 - cx) / 12.0).powi(2) + ((y as f64 - 30.0) / 14.0).powi(2) + ((z as f64 - 10.0) / 6.0).powi(2)
    };
    lobe(16.0).min(lobe(46.0))
}

/// Whole-body image with a matching mask, plus a single right half.
fn dataset(dir: &Path) -> Manifest {
    let dims = [62, 50, 20];
    let spacing = [1.5, 1.7, 3.0];
    let img = Volume::from_fn(dims, spacing, |x, y, z| (400.0 * (-lobes(x, y, z)).exp() + (x % 3) as f64) as f32).unwrap();
    let mask = Mask::from_fn(dims, spacing, |x, y, z| lobes(x, y, z) <= 1.0).unwrap();
    write_volume(dir.join("whole.vaug"), &img).unwrap();
    write_mask(dir.join("whole_gt.vaug"), &mask).unwrap();
    let half = Volume::from_fn([30, 50, 20], spacing, |x, y, z| (x + 2 * y + 3 * z) as f32).unwrap();
    write_volume(dir.join("half.vaug"), &half).unwrap();
    Manifest::new(vec![
        Record::new("whole", "whole.vaug", RecordKind::Image, "s1", Laterality::Whole, "T1W"),
        Record::new("whole-gt", "whole_gt.vaug", RecordKind::Mask, "s1", Laterality::Whole, "T1W"),
        Record::new("half", "half.vaug", RecordKind::Image, "s2", Laterality::Right, "T2W"),
    ])
}

fn small_counts() -> AugmentationConfig {
    AugmentationConfig {
        seed: 42,
        per_volume_counts: Counts { style: 1, remap: 2 },
        ..AugmentationConfig::default()
    }
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn masks_follow_their_images() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let m = dataset(src.path());
    let rep = build_training_set(&m, src.path(), &small_counts(), out.path(), &MockBackend, &BuildOptions::default()).unwrap();
    assert!(rep.failures.is_empty(), "{:?}", rep.failures);

    let ids: Vec<&str> = rep.manifest.records.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(
        ids,
        [
            "whole_left", "whole-gt_left", "whole_left_style0", "whole_left_remap0", "whole_left_remap1",
            "whole_right", "whole-gt_right", "whole_right_style0", "whole_right_remap0", "whole_right_remap1",
            "half_right", "half_right_style0", "half_right_remap0", "half_right_remap1",
        ]
    );
    for half in ["left", "right"] {
        let img = read_volume(out.path().join(format!("whole_{half}.vaug"))).unwrap();
        let mask = read_mask(out.path().join(format!("whole-gt_{half}.vaug"))).unwrap();
        assert_eq!(img.dims(), PREPROCESS_DIMS);
        assert_eq!(img.geometry(), mask.geometry());
        assert!(mask.count() > 0);
        // the lobe is bright exactly where the mask is set
        let bright = Mask::from_geometry(*img.geometry(), img.data().iter().map(|&v| (v > 400.0 / std::f32::consts::E) as u8).collect()).unwrap();
        assert!(dsc(&bright, &mask).unwrap() > 0.9);
    }
    let mask_rec = rep.manifest.get("whole-gt_left").unwrap();
    assert_eq!(rep.manifest.mask_for(rep.manifest.get("whole_left").unwrap()), Some(mask_rec));
    for r in rep.manifest.records.iter().filter(|r| r.variant.is_some_and(Variant::is_augmented)) {
        let p = r.provenance.as_ref().unwrap();
        assert_eq!(p["seed"], 42);
        assert!(p["params"].is_object());
    }
}

#[test]
fn output_manifest_round_trips_and_matches_plan() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let m = dataset(src.path());
    let cfg = small_counts();
    let plan = plan_training_set(&m, &cfg).unwrap();
    let rep = build_training_set(&m, src.path(), &cfg, out.path(), &MockBackend, &BuildOptions::default()).unwrap();
    let back = load_manifest(out.path().join("manifest.json")).unwrap();
    assert_eq!(back, rep.manifest);
    assert_eq!(back.online, Some(cfg.online()));
    let planned: Vec<_> = plan.iter().map(|p| p.path.as_str()).collect();
    let written: Vec<_> = back.records.iter().map(|r| r.path.as_str()).collect();
    assert_eq!(planned, written);
    assert_eq!(files(out.path()).len(), written.len() + 1);
}

#[test]
fn identical_runs_are_bit_identical() {
    let src = tempfile::tempdir().unwrap();
    let m = dataset(src.path());
    let cfg = small_counts();
    let run = |threads| {
        let out = tempfile::tempdir().unwrap();
        let opts = BuildOptions { prescale: Some(0.9), threads };
        build_training_set(&m, src.path(), &cfg, out.path(), &MockBackend, &opts).unwrap();
        files(out.path())
    };
    let a = run(Some(1));
    assert_eq!(a, run(Some(3)));
    assert_eq!(a, run(None));
}

#[test]
fn seed_changes_only_augmented_files() {
    let src = tempfile::tempdir().unwrap();
    let m = dataset(src.path());
    let build = |seed| {
        let out = tempfile::tempdir().unwrap();
        let cfg = AugmentationConfig { seed, ..small_counts() };
        build_training_set(&m, src.path(), &cfg, out.path(), &MockBackend, &BuildOptions::default()).unwrap();
        files(out.path())
    };
    let (a, b) = (build(1), build(2));
    for (name, bytes) in &a {
        if name == "manifest.json" {
            continue;
        }
        let augmented = name.contains("_style") || name.contains("_remap");
        assert_eq!(augmented, bytes != &b[name], "{name}");
    }
}

#[test]
fn unreadable_inputs_are_reported_and_skipped() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut m = dataset(src.path());
    std::fs::write(src.path().join("half.vaug"), b"not a volume").unwrap();
    m.records.push(Record::new("gone", "gone.vaug", RecordKind::Image, "s3", Laterality::Left, "T1W"));
    let rep = build_training_set(&m, src.path(), &small_counts(), out.path(), &MockBackend, &BuildOptions::default()).unwrap();
    let failed: Vec<_> = rep.failures.iter().map(|f| f.record.as_str()).collect();
    assert_eq!(failed, ["half", "gone"]);
    assert_eq!(rep.manifest.records.len(), 10);
    assert!(out.path().join("whole_right_remap1.vaug").is_file());
}

#[test]
fn invalid_settings_are_rejected_up_front() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let m = dataset(src.path());
    let opts = BuildOptions { prescale: Some(1.5), threads: None };
    assert!(build_training_set(&m, src.path(), &small_counts(), out.path(), &MockBackend, &opts).is_err());
    let mut cfg = small_counts();
    cfg.style.alpha = 2.0;
    assert!(build_training_set(&m, src.path(), &cfg, out.path(), &MockBackend, &BuildOptions::default()).is_err());
}

#[test]
fn online_geometry_keeps_masks_aligned() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let m = dataset(src.path());
    let rep = build_training_set(&m, src.path(), &small_counts(), out.path(), &MockBackend, &BuildOptions::default()).unwrap();
    let online = rep.manifest.online.clone().unwrap();
    let img = read_volume(out.path().join("whole_left.vaug")).unwrap();
    let mask = read_mask(out.path().join("whole-gt_left.vaug")).unwrap();
    for draw in 0..3 {
        let (wi, wm) = online.apply("whole_left", draw, &img, Some(&mask)).unwrap();
        let wm = wm.unwrap();
        assert!(wm.count() > 0);
        let thr = 400.0 / std::f32::consts::E;
        let bright = Mask::from_geometry(*wi.geometry(), wi.data().iter().map(|&v| (v > thr) as u8).collect()).unwrap();
        assert!(dsc(&bright, &wm).unwrap() > 0.85);
    }
}
