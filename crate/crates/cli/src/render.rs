use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dance_core::cgr::cgr_walk;
use dance_core::config::RunConfig;
use dance_core::kaleidoscope::{generate_kaleidoscope, CoordinateTable};
use dance_core::raster::{rasterize_walk, rasterize_with_ink, write_pgm, write_png, RasterImage};
use dance_core::seqdata::{parse_fasta, parse_labels_csv, DatasetManifest, ProteinSequence};
use rayon::prelude::*;

use crate::args::{ImageFormat, Method, RenderArgs};
use crate::util::{self, partial_path};

pub const MANIFEST: &str = "manifest.json";

pub fn run(args: RenderArgs) -> Result<()> {
    let mut cfg = util::load_config(&args.common)?;
    util::apply_geometry(&mut cfg, &args.geometry)?;
    if let Some(size) = &args.size {
        let (w, h) = util::parse_size(size)?;
        cfg.raster.width = w;
        cfg.raster.height = h;
    }
    if let Some(ink) = args.ink {
        cfg.raster.ink = ink;
    }
    util::validate_overrides(&cfg)?;

    let mut seqs = parse_fasta(&util::read(&args.fasta)?).with_context(|| format!("in {}", args.fasta.display()))?;
    if let Some(path) = &args.labels {
        attach_labels(&mut seqs, path)?;
    }

    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let ext = args.format.extension();
    let target = |s: &ProteinSequence| args.out.join(format!("{}.{ext}", s.id()));

    let pool = util::pool(args.jobs)?;
    let results: Vec<Result<PathBuf, String>> = pool.install(|| {
        seqs.par_iter()
            .map(|s| {
                let bytes = render_bytes(s, &cfg, args.method, args.format).map_err(|e| e.to_string())?;
                let tmp = partial_path(&target(s));
                fs::write(&tmp, bytes).map_err(|e| format!("cannot write {}: {e}", tmp.display()))?;
                Ok(tmp)
            })
            .collect()
    });

    let failures: Vec<(&ProteinSequence, &String)> = seqs
        .iter()
        .zip(&results)
        .filter_map(|(s, r)| r.as_ref().err().map(|e| (s, e)))
        .collect();
    if !failures.is_empty() {
        for (s, e) in &failures {
            eprintln!("error: {}: {e}", s.id());
        }
        for tmp in results.iter().flatten() {
            let _ = fs::remove_file(tmp);
        }
        bail!(
            "{} of {} sequences failed to render; nothing was written",
            failures.len(),
            seqs.len()
        );
    }
    for (s, tmp) in seqs.iter().zip(results.iter().flatten()) {
        let dest = target(s);
        fs::rename(tmp, &dest).with_context(|| format!("cannot move {} into place", dest.display()))?;
    }

    let manifest = DatasetManifest::from_sequences(&seqs, cfg.seed, |s| format!("{}.{ext}", s.id()))?;
    let path = args.out.join(MANIFEST);
    util::write_atomic(&path, manifest.to_json().as_bytes())?;
    println!("{}", path.display());
    Ok(())
}

/// Labels every sequence from an `id,label` CSV; all must be covered.
pub fn attach_labels(seqs: &mut [ProteinSequence], path: &Path) -> Result<()> {
    let labels = parse_labels_csv(&util::read(path)?).with_context(|| format!("in {}", path.display()))?;
    for s in seqs.iter_mut() {
        match labels.get(s.id()) {
            Some(l) => s.set_label(Some(l.clone())),
            None => bail!("sequence {:?} has no label in {}", s.id(), path.display()),
        }
    }
    Ok(())
}

pub fn render_image(seq: &ProteinSequence, cfg: &RunConfig, method: Method) -> dance_core::Result<RasterImage> {
    let table = CoordinateTable::default();
    let r = &cfg.raster;
    Ok(match method {
        Method::Dance => {
            let segments = generate_kaleidoscope(seq, &cfg.kaleidoscope_params(), &table)?;
            rasterize_with_ink(&segments, r.width, r.height, r.pad_fraction, r.ink)?
        }
        Method::Cgr => {
            let walk = cgr_walk(seq, &table, &cfg.cgr_params())?;
            rasterize_walk(&walk, r.width, r.height, r.pad_fraction, r.ink)?
        }
    })
}

fn render_bytes(
    seq: &ProteinSequence,
    cfg: &RunConfig,
    method: Method,
    format: ImageFormat,
) -> dance_core::Result<Vec<u8>> {
    let img = render_image(seq, cfg, method)?;
    let mut buf = Vec::new();
    match format {
        ImageFormat::Pgm => write_pgm(&img, &mut buf)?,
        ImageFormat::Png => write_png(&img, &mut buf)?,
    };
    Ok(buf)
}
