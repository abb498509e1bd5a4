use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use log::warn;
use textloc::evaluation::{match_detections, Averaging, EvalReport, MatchConfig};
use textloc::imageio::{load_annotation_file, load_frame_sections};
use textloc::{Error, Rect, Result};

use crate::{EvalArgs, ReportFormat};

fn stem_of(name: &str) -> String {
    Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.to_string())
}

fn files_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::Path {
        path: dir.to_path_buf(),
        inner: Box::new(e.into()),
    })?;
    for entry in entries {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        if name.starts_with('.') {
            continue;
        }
        out.insert(stem_of(&name), path);
    }
    Ok(out)
}

/// Detections keyed by image stem. A plain file without `# frame` sections
/// maps to the key `None`.
enum Predictions {
    Single(Vec<Rect>),
    Keyed(BTreeMap<String, Vec<Rect>>),
}

fn load_predictions(path: &Path) -> Result<Predictions> {
    if path.is_dir() {
        let mut keyed = BTreeMap::new();
        for (stem, file) in files_by_stem(path)? {
            keyed.insert(stem, load_annotation_file(&file)?);
        }
        return Ok(Predictions::Keyed(keyed));
    }
    let file = File::open(path).map_err(|e| Error::Path {
        path: path.to_path_buf(),
        inner: Box::new(e.into()),
    })?;
    let sections = load_frame_sections(BufReader::new(file)).map_err(|e| Error::Path {
        path: path.to_path_buf(),
        inner: Box::new(e),
    })?;
    if sections.iter().all(|(name, _)| name.is_none()) {
        let boxes = sections.into_iter().flat_map(|(_, b)| b).collect();
        return Ok(Predictions::Single(boxes));
    }
    let mut keyed = BTreeMap::new();
    for (name, boxes) in sections {
        match name {
            Some(name) => {
                keyed.insert(stem_of(&name), boxes);
            }
            None => warn!("ignoring detections before the first `# frame` header"),
        }
    }
    Ok(Predictions::Keyed(keyed))
}

pub fn build_report(args: &EvalArgs) -> Result<EvalReport> {
    let cfg = MatchConfig {
        tdb_overlap: args.tdb_overlap,
        mdb_coverage: args.mdb_coverage,
    };
    cfg.validate()?;
    let averaging = if args.macro_average {
        Averaging::Macro
    } else {
        Averaging::Micro
    };

    let truth: BTreeMap<String, Vec<Rect>> = if args.gt.is_dir() {
        files_by_stem(&args.gt)?
            .into_iter()
            .map(|(stem, path)| Ok((stem, load_annotation_file(&path)?)))
            .collect::<Result<_>>()?
    } else {
        let name = args.gt.file_name().unwrap_or_default().to_string_lossy();
        BTreeMap::from([(stem_of(&name), load_annotation_file(&args.gt)?)])
    };

    let mut per_image = Vec::new();
    match load_predictions(&args.pred)? {
        Predictions::Single(boxes) => {
            if truth.len() != 1 {
                return Err(Error::Config(format!(
                    "{} holds one detection list but {} ground-truth files were found; \
                     use `# frame` sections or a directory",
                    args.pred.display(),
                    truth.len()
                )));
            }
            let (name, gt) = truth.into_iter().next().expect("one entry");
            per_image.push((name, match_detections(&boxes, &gt, &cfg)));
        }
        Predictions::Keyed(mut preds) => {
            for (name, gt) in truth {
                let boxes = preds.remove(&name).unwrap_or_else(|| {
                    warn!("no detections for {name}; scoring as empty");
                    Vec::new()
                });
                per_image.push((name, match_detections(&boxes, &gt, &cfg)));
            }
            for name in preds.keys() {
                warn!("detections for {name} have no ground truth; ignored");
            }
        }
    }
    Ok(EvalReport::new(per_image, averaging))
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let report = build_report(args)?;
    match args.format {
        ReportFormat::Human => print!("{report}"),
        ReportFormat::Kv => print!("{}", report.to_key_values()),
        ReportFormat::Both => {
            print!("{report}");
            println!();
            print!("{}", report.to_key_values());
        }
    }
    Ok(())
}
