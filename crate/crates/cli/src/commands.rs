//! Implementations of the batch subcommands.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use voxaug_core::curation::{
    cut_inferior_fat, remove_disconnected_2d, trim_lateral_boundary, FatCutOptions, LateralTrimOptions,
};
use voxaug_core::io::{load_manifest, load_mask_file, manifest_dir, save_manifest, write_mask, write_volume};
use voxaug_core::metrics::{dsc, interobserver_table, staple, StapleOptions};
use voxaug_core::pipeline::{
    build_training_set, plan_training_set, AugmentationConfig, BuildOptions, BuildReport, Counts,
};
use voxaug_core::postprocess::{postprocess_qin, SelectOptions};
use voxaug_core::stats::{compare_methods, score_matrix_from_rows, ComparisonReport, FriedmanOptions, ScoreRow};
use voxaug_core::volume::Volume;

use crate::{AugmentArgs, ConsensusArgs, CurateArgs, EvaluateArgs, PostprocessArgs, PreprocessArgs, StatsArgs};

/// Reads an augmentation config file.
pub fn load_config(path: &Path) -> Result<AugmentationConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    AugmentationConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn report_failures(rep: &BuildReport) -> u8 {
    for f in &rep.failures {
        eprintln!("failed: {}: {}", f.record, f.error);
    }
    u8::from(!rep.failures.is_empty())
}

pub fn preprocess(a: &PreprocessArgs) -> Result<u8> {
    let manifest = load_manifest(&a.manifest)?;
    let cfg = AugmentationConfig {
        per_volume_counts: Counts { style: 0, remap: 0 },
        ..AugmentationConfig::default()
    };
    let backend = cfg.style.backend.build();
    let opts = BuildOptions {
        prescale: a.prescale,
        threads: a.threads,
    };
    let mut rep = build_training_set(&manifest, &manifest_dir(&a.manifest), &cfg, &a.out, backend.as_ref(), &opts)?;
    rep.manifest.online = None;
    save_manifest(a.out.join("manifest.json"), &rep.manifest)?;
    println!("wrote {} records to {}", rep.manifest.records.len(), a.out.display());
    Ok(report_failures(&rep))
}

pub fn augment(a: &AugmentArgs) -> Result<u8> {
    let manifest = load_manifest(&a.manifest)?;
    let mut cfg = match &a.config {
        Some(p) => load_config(p)?,
        None => AugmentationConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if a.dry_run {
        let plan = plan_training_set(&manifest, &cfg)?;
        let mut out = io::stdout().lock();
        for f in &plan {
            let variant = f.variant.map_or("mask", |v| v.as_str());
            writeln!(out, "{}\t{}\t{}", a.out.join(&f.path).display(), variant, f.source)?;
        }
        writeln!(out, "{}", a.out.join("manifest.json").display())?;
        return Ok(0);
    }
    let backend = cfg.style.backend.build();
    let opts = BuildOptions {
        prescale: a.prescale,
        threads: a.threads,
    };
    let rep = build_training_set(&manifest, &manifest_dir(&a.manifest), &cfg, &a.out, backend.as_ref(), &opts)?;
    println!("wrote {} records to {}", rep.manifest.records.len(), a.out.display());
    Ok(report_failures(&rep))
}

pub fn curate(a: &CurateArgs) -> Result<()> {
    let mut m = load_mask_file(&a.mask)?;
    if !a.no_disconnected {
        m = remove_disconnected_2d(&m);
    }
    if !a.no_fat_cut {
        if a.fat_window < 3 || a.fat_window.is_multiple_of(2) {
            bail!("--fat-window must be odd and at least 3");
        }
        let opts = FatCutOptions {
            window: a.fat_window,
            inferior_low: !a.inferior_high,
            posterior_high: !a.posterior_low,
        };
        m = cut_inferior_fat(&m, &opts);
    }
    if !a.no_lateral_trim {
        m = trim_lateral_boundary(&m, &LateralTrimOptions { chest_high: a.chest_high });
    }
    write_mask(&a.out, &m)?;
    Ok(())
}

pub fn postprocess(a: &PostprocessArgs) -> Result<()> {
    let m = load_mask_file(&a.mask)?;
    let opts = SelectOptions {
        min_area_px: a.min_area,
        left_low: !a.left_high,
    };
    write_mask(&a.out, &postprocess_qin(&m, &opts))?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PairRow {
    scan: String,
    method: String,
    prediction: PathBuf,
    truth: PathBuf,
}

#[derive(Debug, Deserialize)]
struct ObserverRow {
    scan: String,
    observer: String,
    mask: PathBuf,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    rdr.deserialize()
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

fn write_rows<T: Serialize>(out: Option<&Path>, rows: &[T]) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    if let Some(pairs) = &a.input.pairs {
        let dir = manifest_dir(pairs);
        let mut out = Vec::new();
        for r in read_rows::<PairRow>(pairs)? {
            let p = load_mask_file(&dir.join(&r.prediction))?;
            let t = load_mask_file(&dir.join(&r.truth))?;
            let d = dsc(&p, &t).with_context(|| format!("scan {} method {}", r.scan, r.method))?;
            out.push(ScoreRow {
                scan: r.scan,
                method: r.method,
                dsc: d,
            });
        }
        write_rows(a.out.as_deref(), &out)
    } else if let Some(obs) = &a.input.observers {
        let dir = manifest_dir(obs);
        let mut scans: BTreeMap<String, BTreeMap<String, _>> = BTreeMap::new();
        for r in read_rows::<ObserverRow>(obs)? {
            let m = load_mask_file(&dir.join(&r.mask))?;
            if scans.entry(r.scan.clone()).or_default().insert(r.observer.clone(), m).is_some() {
                bail!("observer {} listed twice for scan {}", r.observer, r.scan);
            }
        }
        write_rows(a.out.as_deref(), &interobserver_table(&scans)?)
    } else {
        bail!("one of --pairs or --observers is required")
    }
}

#[derive(Debug, Serialize)]
struct ConsensusSummary {
    sensitivity: Vec<f64>,
    specificity: Vec<f64>,
    prior: f64,
    iterations: usize,
    converged: bool,
    log_likelihood: Vec<f64>,
    consensus_voxels: usize,
}

pub fn consensus(a: &ConsensusArgs) -> Result<()> {
    let masks = a
        .masks
        .iter()
        .map(|p| load_mask_file(p))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let opts = StapleOptions {
        init_pq: a.init_pq,
        tol: a.tol,
        max_iter: a.max_iter,
    };
    let r = staple(&masks, &opts)?;
    write_mask(&a.out, &r.consensus)?;
    if let Some(p) = &a.posterior {
        let data = r.posterior.iter().map(|&w| w as f32).collect();
        write_volume(p, &Volume::from_geometry(*r.consensus.geometry(), data)?)?;
    }
    let summary = ConsensusSummary {
        sensitivity: r.sensitivity,
        specificity: r.specificity,
        prior: r.prior,
        iterations: r.iterations,
        converged: r.converged,
        log_likelihood: r.log_likelihood,
        consensus_voxels: r.consensus.count(),
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

#[derive(Debug, Serialize)]
struct PairRecord<'a> {
    method_a: &'a str,
    method_b: &'a str,
    p_adjusted: f64,
    significant: bool,
}

/// Runs the comparison on an evaluation CSV.
pub fn stats_report(scores: &Path, tie_correction: bool) -> Result<ComparisonReport> {
    let rows: Vec<ScoreRow> = read_rows(scores)?;
    let m = score_matrix_from_rows(&rows)?;
    Ok(compare_methods(&m, &FriedmanOptions { tie_correction }))
}

pub fn stats(a: &StatsArgs) -> Result<()> {
    let rep = stats_report(&a.scores, !a.no_tie_correction)?;
    if let Some(path) = &a.csv {
        let mut recs = Vec::new();
        if let Some(pw) = &rep.pairwise {
            for i in 0..rep.methods.len() {
                for j in i + 1..rep.methods.len() {
                    recs.push(PairRecord {
                        method_a: &rep.methods[i],
                        method_b: &rep.methods[j],
                        p_adjusted: pw.p_adjusted[i][j],
                        significant: pw.significant[i][j],
                    });
                }
            }
        }
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        if recs.is_empty() {
            w.write_record(["method_a", "method_b", "p_adjusted", "significant"])?;
        }
        for r in &recs {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    let json = serde_json::to_string_pretty(&rep)?;
    match &a.json {
        Some(p) => std::fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{json}"),
    }
    if a.json.is_some() {
        println!(
            "friedman chi2 = {:.4}, df = {}, p = {:.4}",
            rep.friedman.chi2, rep.friedman.df, rep.friedman.p
        );
    }
    Ok(())
}
