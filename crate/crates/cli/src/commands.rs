use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use het_core::eval::ope::{write_diagnostics, write_json, write_results};
use het_core::eval::{
    generate_synthetic, run_ope, track_sequence, write_evaluation, Sequence, SynthSpec,
};
use het_core::{BoxI, HetError, TrackerConfig};

use crate::manifest::{RunManifest, SequenceRun};
use crate::{Failure, TrackerFlags, EXIT_TRACK_LOST};

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| {
        Failure::from(HetError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

/// Defaults, then the config file, then command-line flags.
fn effective_config(flags: &TrackerFlags) -> Result<TrackerConfig, Failure> {
    let mut cfg = TrackerConfig::default();
    if let Some(path) = &flags.config {
        cfg.apply_kv(&read_text(path)?)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(stride) = flags.stride {
        cfg.stride = stride;
    }
    if flags.predictive_search {
        cfg.predictive_search = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn diagnostics_path(out: &Path, name: &str) -> PathBuf {
    out.join("diagnostics").join(format!("{name}.jsonl"))
}

fn manifest_path(out: &Path, name: &str) -> PathBuf {
    out.join("manifests").join(format!("{name}.json"))
}

pub fn track(seq_dir: &Path, init: Option<&str>, flags: &TrackerFlags) -> Result<u8, Failure> {
    let started = Instant::now();
    // everything that can be rejected is checked before any file is written
    let init = init
        .map(|s| BoxI::parse(s).map_err(|e| Failure::usage(format!("--init: {e}"))))
        .transpose()?;
    let cfg = effective_config(flags)?;
    let seq = Sequence::load(seq_dir)?;
    let init = match (init, &seq.ground_truth) {
        (Some(b), _) => b,
        (None, Some(gt)) => gt[0].round(),
        (None, None) => {
            return Err(Failure::usage(format!(
                "{}: no ground truth, pass --init X,Y,W,H",
                seq_dir.display()
            )))
        }
    };

    let run = track_sequence(&cfg, &seq.frames, init)?;
    let results = flags.out.join("results").join(format!("{}.csv", seq.name));
    write_results(&results, &run.outputs)?;
    let mut outputs = vec![results];
    if flags.diag {
        let diag = diagnostics_path(&flags.out, &seq.name);
        write_diagnostics(&diag, &run.outputs)?;
        outputs.push(diag);
    }

    let t = run.timing;
    let mut manifest = RunManifest::new("track", cfg.seed).with_config(&cfg);
    let mpath = manifest_path(&flags.out, &format!("track_{}", seq.name));
    manifest.outputs = outputs.clone();
    manifest.outputs.push(mpath.clone());
    manifest.sequences.push(SequenceRun {
        name: seq.name.clone(),
        path: seq_dir.to_path_buf(),
        init_box: init,
        lost_at: run.lost_at,
        timing: t.into(),
        outputs,
    });
    manifest.wall_seconds = started.elapsed().as_secs_f64();
    write_json(&mpath, &manifest)?;

    println!(
        "{}: {} frames, {:.1} fps (decode excluded), {:.1} fps (decode included)",
        seq.name,
        t.frames,
        t.fps_exclusive(),
        t.fps_inclusive()
    );
    if let Some(k) = run.lost_at {
        eprintln!("het: track lost at frame {k}; later boxes repeat the last one");
        return Ok(EXIT_TRACK_LOST);
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
struct SequenceScore {
    name: String,
    success_auc: f64,
    precision_at_20: f64,
    lost_at: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Aggregate {
    sequences: Vec<SequenceScore>,
    /// Sequences without ground truth.
    skipped: Vec<String>,
    mean_success_auc: f64,
    mean_precision_at_20: f64,
}

pub fn eval(seq_dirs: &[PathBuf], flags: &TrackerFlags) -> Result<u8, Failure> {
    let started = Instant::now();
    let cfg = effective_config(flags)?;
    let mut manifest = RunManifest::new("eval", cfg.seed).with_config(&cfg);
    let mut scores = Vec::new();
    let mut skipped = Vec::new();
    for dir in seq_dirs {
        let seq = Sequence::load(dir)?;
        if seq.ground_truth.is_none() {
            eprintln!("het: warning: {} has no ground truth, skipped", dir.display());
            skipped.push(seq.name);
            continue;
        }
        let res = run_ope(&cfg, &seq)?;
        let paths = write_evaluation(&flags.out, &seq.name, &res)?;
        let mut outputs = vec![
            paths.results,
            paths.metrics,
            paths.precision_curve,
            paths.success_curve,
        ];
        if flags.diag {
            let diag = diagnostics_path(&flags.out, &seq.name);
            write_diagnostics(&diag, &res.run.outputs)?;
            outputs.push(diag);
        }
        let t = res.run.timing;
        println!(
            "{}: AUC {:.3}, precision@20 {:.3}, {:.1} fps (decode excluded), {:.1} fps (decode included){}",
            seq.name,
            res.report.success_auc,
            res.report.precision_at_20,
            t.fps_exclusive(),
            t.fps_inclusive(),
            res.run
                .lost_at
                .map_or(String::new(), |k| format!(", lost at frame {k}"))
        );
        manifest.outputs.extend(outputs.iter().cloned());
        manifest.sequences.push(SequenceRun {
            name: seq.name.clone(),
            path: dir.clone(),
            init_box: seq.ground_truth.as_ref().expect("checked")[0].round(),
            lost_at: res.run.lost_at,
            timing: t.into(),
            outputs,
        });
        scores.push(SequenceScore {
            name: seq.name,
            success_auc: res.report.success_auc,
            precision_at_20: res.report.precision_at_20,
            lost_at: res.run.lost_at,
        });
    }
    if scores.is_empty() {
        return Err(Failure::usage("no sequence with ground truth to evaluate"));
    }
    let n = scores.len() as f64;
    let aggregate = Aggregate {
        mean_success_auc: scores.iter().map(|s| s.success_auc).sum::<f64>() / n,
        mean_precision_at_20: scores.iter().map(|s| s.precision_at_20).sum::<f64>() / n,
        sequences: scores,
        skipped,
    };
    let agg_path = flags.out.join("metrics").join("aggregate.json");
    write_json(&agg_path, &aggregate)?;
    println!(
        "aggregate over {} sequences: mean AUC {:.3}, mean precision@20 {:.3}{}",
        aggregate.sequences.len(),
        aggregate.mean_success_auc,
        aggregate.mean_precision_at_20,
        if aggregate.skipped.is_empty() {
            String::new()
        } else {
            format!(", {} skipped", aggregate.skipped.len())
        }
    );
    let mpath = manifest_path(&flags.out, "eval");
    manifest.outputs.push(agg_path);
    manifest.outputs.push(mpath.clone());
    manifest.wall_seconds = started.elapsed().as_secs_f64();
    write_json(&mpath, &manifest)?;
    Ok(0)
}

pub fn synth(spec_path: &Path, seed: u64, out: &Path) -> Result<u8, Failure> {
    let started = Instant::now();
    let spec = SynthSpec::from_kv(&read_text(spec_path)?)
        .map_err(|e| Failure::usage(format!("{}: {e}", spec_path.display())))?;
    let seq = generate_synthetic(&spec, seed, out)?;
    let mut manifest = RunManifest::new("synth", seed);
    manifest.synth_spec = Some(spec);
    let mpath = out.join("manifest.json");
    manifest.outputs = vec![out.to_path_buf(), mpath.clone()];
    manifest.wall_seconds = started.elapsed().as_secs_f64();
    write_json(&mpath, &manifest)?;
    println!("{}: {} frames written to {}", seq.name, seq.len(), out.display());
    Ok(0)
}
