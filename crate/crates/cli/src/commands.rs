use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use dance_core::cgr::{cgr_walk, fcgr_grid};
use dance_core::classify::{knn_fit, logreg_train, Metric, Model, ModelFile, PredictionSet};
use dance_core::config::{FeatureMode, ModelKind};
use dance_core::features::{fcgr_features, ohe_encode, pixels_features, FeatureMatrix, FeatureVector};
use dance_core::kaleidoscope::{generate_kaleidoscope, CoordinateTable};
use dance_core::metrics::{evaluate, render_table};
use dance_core::seqdata::{
    parse_fasta, stratified_split, synth_dataset, write_fasta, DatasetManifest, ProteinSequence, Split, SplitSpec,
    SynthConfig,
};
use rayon::prelude::*;

use crate::args::*;
use crate::render::attach_labels;
use crate::util::{self, usage};

pub fn segments(args: SegmentsArgs) -> Result<()> {
    let mut cfg = util::load_config(&args.common)?;
    util::apply_geometry(&mut cfg, &args.geometry)?;
    util::validate_overrides(&cfg)?;
    let seq = match (&args.seq, &args.fasta) {
        (Some(s), _) => ProteinSequence::new("seq", s.trim())?,
        (None, Some(path)) => parse_fasta(&util::read(path)?)?
            .into_iter()
            .next()
            .ok_or_else(|| anyhow!("{} holds no sequences", path.display()))?,
        (None, None) => return Err(usage("give --seq or --fasta")),
    };
    let set = generate_kaleidoscope(&seq, &cfg.kaleidoscope_params(), &CoordinateTable::default())?;
    let mut buf = Vec::new();
    set.write_dump(&mut buf)?;
    match &args.out {
        Some(path) => util::write_atomic(path, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let cfg = util::load_config(&args.common)?;
    let synth = SynthConfig {
        n_classes: args.classes,
        per_class: args.per_class,
        min_len: args.min_len,
        max_len: args.max_len,
        motif_length: args.motif,
        seed: cfg.seed,
    };
    let seqs = synth_dataset(&synth).map_err(|e| usage(e.to_string()))?;
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;

    let mut fasta = Vec::new();
    write_fasta(&mut fasta, &seqs)?;
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["id", "label"])?;
    for s in &seqs {
        csv.write_record([s.id(), s.label().unwrap_or_default()])?;
    }
    let labels = csv.into_inner().map_err(|e| anyhow!("{e}"))?;

    let fasta_path = args.out.join("sequences.fasta");
    let labels_path = args.out.join("labels.csv");
    util::write_atomic(&fasta_path, &fasta)?;
    util::write_atomic(&labels_path, &labels)?;
    println!("{}", fasta_path.display());
    println!("{}", labels_path.display());
    Ok(())
}

pub fn split(args: SplitArgs) -> Result<()> {
    let mut cfg = util::load_config(&args.common)?;
    if let Some(f) = args.test_fraction {
        cfg.split.test_fraction = f;
    }
    if args.unstratified {
        cfg.split.stratified = false;
    }
    util::validate_overrides(&cfg)?;
    let manifest = DatasetManifest::from_json(&util::read(&args.manifest)?)
        .with_context(|| format!("in {}", args.manifest.display()))?;
    let spec = SplitSpec::new(cfg.split.test_fraction, cfg.split_seed(), cfg.split.stratified)?;
    let out = stratified_split(&manifest, &spec)?;
    let dest = args.out.as_deref().unwrap_or(&args.manifest);
    util::write_atomic(dest, out.to_json().as_bytes())?;
    let n_test = out.entries_in(Some(Split::Test)).count();
    println!(
        "{}: {} train, {} test",
        dest.display(),
        out.entries.len() - n_test,
        n_test
    );
    Ok(())
}

fn read_fasta_map(path: &Path) -> Result<HashMap<String, ProteinSequence>> {
    let seqs = parse_fasta(&util::read(path)?).with_context(|| format!("in {}", path.display()))?;
    Ok(seqs.into_iter().map(|s| (s.id().to_string(), s)).collect())
}

/// One featurization job: the id, its class index and its source.
struct Item {
    id: String,
    label: Option<usize>,
    image: Option<std::path::PathBuf>,
    seq: Option<ProteinSequence>,
}

pub fn featurize(args: FeaturizeArgs) -> Result<()> {
    let mut cfg = util::load_config(&args.common)?;
    if let Some(m) = args.mode {
        cfg.features.mode = match m {
            Mode::Ohe => FeatureMode::Ohe,
            Mode::Pixels => FeatureMode::Pixels,
            Mode::Fcgr => FeatureMode::Fcgr,
        };
    }
    if let Some(d) = args.downsample {
        cfg.features.downsample = d;
    }
    if args.max_len.is_some() {
        cfg.features.max_len = args.max_len;
    }
    util::validate_overrides(&cfg)?;
    let mode = cfg.features.mode;
    if mode != FeatureMode::Pixels && args.fasta.is_none() {
        return Err(usage("one-hot and FCGR features need --fasta"));
    }
    let fasta = args.fasta.as_deref().map(read_fasta_map).transpose()?;

    let (classes, mut items, manifest_max_len) = match &args.manifest {
        Some(path) => {
            let m = DatasetManifest::from_json(&util::read(path)?).with_context(|| format!("in {}", path.display()))?;
            let wanted = match args.split {
                SplitChoice::Train => Some(Split::Train),
                SplitChoice::Test => Some(Split::Test),
                SplitChoice::All => None,
            };
            if wanted.is_some() && m.entries.iter().all(|e| e.split == Split::Unassigned) {
                bail!("{} has no split assignments; run `dance split` first", path.display());
            }
            let base = path.parent().unwrap_or(Path::new("."));
            let items = m
                .entries_in(wanted)
                .map(|e| Item {
                    id: e.id.clone(),
                    label: e.label.as_deref().and_then(|l| m.class_index(l)),
                    image: Some(base.join(&e.path)),
                    seq: None,
                })
                .collect::<Vec<_>>();
            (m.classes.clone(), items, m.max_len)
        }
        None => {
            if mode == FeatureMode::Pixels {
                return Err(usage("pixel features need --manifest"));
            }
            if args.split != SplitChoice::All {
                return Err(usage("--split needs --manifest"));
            }
            let path = args.fasta.as_deref().expect("checked above");
            let mut seqs = parse_fasta(&util::read(path)?)?;
            if let Some(labels) = &args.labels {
                attach_labels(&mut seqs, labels)?;
            }
            let classes: Vec<String> = seqs
                .iter()
                .filter_map(|s| s.label().map(str::to_string))
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            let items = seqs
                .into_iter()
                .map(|s| Item {
                    id: s.id().to_string(),
                    label: s.label().and_then(|l| classes.iter().position(|c| c == l)),
                    image: None,
                    seq: Some(s),
                })
                .collect();
            (classes, items, None)
        }
    };
    if let Some(map) = &fasta {
        for it in items.iter_mut().filter(|it| it.seq.is_none()) {
            let s = map
                .get(&it.id)
                .ok_or_else(|| anyhow!("sequence {:?} is missing from the FASTA file", it.id))?;
            it.seq = Some(s.clone());
        }
    }
    if items.is_empty() {
        bail!("no entries selected");
    }

    let max_len = cfg
        .features
        .max_len
        .or(manifest_max_len)
        .or_else(|| fasta.as_ref().and_then(|m| m.values().map(ProteinSequence::len).max()))
        .unwrap_or(1);
    let table = CoordinateTable::default();
    let encode = |it: &Item| -> Result<FeatureVector> {
        let v = match mode {
            FeatureMode::Pixels => {
                let path = it.image.as_deref().expect("manifest items carry an image path");
                pixels_features(&util::read_image(path)?, cfg.features.downsample)?
            }
            FeatureMode::Ohe => ohe_encode(it.seq.as_ref().expect("sequence attached"), max_len)?,
            FeatureMode::Fcgr => {
                let walk = cgr_walk(it.seq.as_ref().expect("sequence attached"), &table, &cfg.cgr_params())?;
                fcgr_features(&fcgr_grid(&walk, cfg.cgr.resolution)?)
            }
        };
        Ok(v.with_source(it.id.clone()))
    };
    let pool = util::pool(args.jobs)?;
    let vectors: Vec<Result<FeatureVector>> = pool.install(|| items.par_iter().map(encode).collect());

    let mut matrix: Option<FeatureMatrix> = None;
    for (it, v) in items.iter().zip(vectors) {
        let v = v.with_context(|| format!("entry {:?}", it.id))?;
        let m = matrix.get_or_insert_with(|| FeatureMatrix::new(v.schema, classes.clone()));
        m.push(v, it.label).with_context(|| format!("entry {:?}", it.id))?;
    }
    let matrix = matrix.expect("at least one item");
    util::write_features(&args.out, &matrix)?;
    println!(
        "{}: {} rows x {} features ({})",
        args.out.display(),
        matrix.n_rows(),
        matrix.dim(),
        matrix.schema()
    );
    Ok(())
}

pub fn train(args: TrainArgs) -> Result<()> {
    let mut cfg = util::load_config(&args.common)?;
    let c = &mut cfg.classify;
    if let Some(m) = args.model {
        c.model = match m {
            ModelChoice::Knn => ModelKind::Knn,
            ModelChoice::Logreg => ModelKind::Logreg,
        };
    }
    if let Some(k) = args.k {
        c.k = k;
    }
    if let Some(m) = args.metric {
        c.metric = match m {
            MetricChoice::Euclidean => Metric::Euclidean,
            MetricChoice::Manhattan => Metric::Manhattan,
        };
    }
    if let Some(lr) = args.learning_rate {
        c.learning_rate = lr;
    }
    if let Some(e) = args.epochs {
        c.epochs = e;
    }
    if let Some(b) = args.batch_size {
        c.batch_size = b;
    }
    util::validate_overrides(&cfg)?;
    let features = util::read_features(&args.features)?;

    let start = Instant::now();
    let model = match cfg.classify.model {
        ModelKind::Knn => Model::Knn(knn_fit(&features, cfg.classify.k, cfg.classify.metric)?),
        ModelKind::Logreg => Model::LogReg(logreg_train(&features, &cfg.logreg_config())?),
    };
    let train_time_s = start.elapsed().as_secs_f64();
    let file = ModelFile { model, train_time_s };
    util::write_atomic(&args.out, &file.to_bytes()?)?;
    println!(
        "{}: trained on {} rows in {train_time_s:.3} s",
        args.out.display(),
        features.n_rows()
    );
    Ok(())
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let file =
        ModelFile::from_bytes(&util::read(&args.model)?).with_context(|| format!("in {}", args.model.display()))?;
    let features = util::read_features(&args.features)?;
    let model = &file.model;
    if features.schema() != model.schema() {
        bail!(
            "{} has schema {}, but the model expects {}",
            args.features.display(),
            features.schema(),
            model.schema()
        );
    }
    let pool = util::pool(args.jobs)?;
    let rows: Vec<&[f64]> = features.rows().collect();
    let probas: Vec<Vec<f64>> = pool.install(|| rows.par_iter().map(|r| model.predict_proba_row(r)).collect());
    let preds = PredictionSet::from_probas(model.class_names(), &features, probas)?;
    util::write_atomic(&args.out, preds.to_json().as_bytes())?;
    println!("{}: {} predictions", args.out.display(), preds.len());
    Ok(())
}

fn meta_train_time(path: &Path) -> Result<f64> {
    let v: serde_json::Value =
        serde_json::from_slice(&util::read(path)?).with_context(|| format!("in {}", path.display()))?;
    v.get("train_time_s")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| anyhow!("{} has no numeric train_time_s", path.display()))
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let preds = PredictionSet::from_json(&util::read(&args.predictions)?, args.classes.clone())
        .with_context(|| format!("in {}", args.predictions.display()))?;
    let train_time_s = match (&args.model, &args.meta) {
        (Some(path), _) => {
            ModelFile::from_bytes(&util::read(path)?)
                .with_context(|| format!("in {}", path.display()))?
                .train_time_s
        }
        (None, Some(path)) => meta_train_time(path)?,
        (None, None) => 0.0,
    };
    let report = evaluate(&preds, train_time_s)?;
    if let Some(out) = &args.out {
        util::write_atomic(out, report.to_json().as_bytes())?;
    }
    print!("{}", render_table(&[(&args.name, &report)]));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_time_is_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("meta.json");
        fs::write(&p, r#"{"train_time_s": 12.5, "seed": 1}"#).unwrap();
        assert_eq!(meta_train_time(&p).unwrap(), 12.5);
        fs::write(&p, r#"{"seed": 1}"#).unwrap();
        assert!(meta_train_time(&p).is_err());
    }
}
