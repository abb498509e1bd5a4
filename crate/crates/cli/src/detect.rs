use std::fs::File;
use std::io::{self, BufWriter, Write};

use log::{info, warn};
use textloc::imageio::{self, write_detections};
use textloc::pipeline::{self, render_components, render_overlay, write_snapshots};
use textloc::{Error, Result, SequenceOptions};

use crate::DetectArgs;

fn open_sink(args: &DetectArgs) -> Result<Box<dyn Write>> {
    Ok(match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::Path {
                path: path.clone(),
                inner: Box::new(e.into()),
            })?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn has_dumps(args: &DetectArgs) -> bool {
    args.dump_edges.is_some()
        || args.dump_binary.is_some()
        || args.dump_components.is_some()
        || args.dump_overlay.is_some()
}

pub fn run(args: &DetectArgs) -> Result<()> {
    let cfg = args.pipeline_config()?;
    if args.input.is_dir() {
        if has_dumps(args) {
            return Err(Error::Config(
                "--dump-* flags take a single image; use --debug-dir for frame directories".into(),
            ));
        }
        return run_directory(args, &cfg);
    }

    let img = imageio::load_image_file(&args.input)?;
    let det = pipeline::detect(&img, &cfg)?;
    if let Some(dir) = &cfg.debug_dir {
        write_snapshots(&img, &det, dir)?;
    }
    if let Some(path) = &args.dump_edges {
        imageio::save_pgm(&det.edges, path)?;
    }
    if let Some(path) = &args.dump_binary {
        imageio::save_pgm(&det.binary.to_gray(), path)?;
    }
    if let Some(path) = &args.dump_components {
        imageio::save_ppm(&render_components(&det), path)?;
    }
    if let Some(path) = &args.dump_overlay {
        imageio::save_ppm(&render_overlay(&img, &det.boxes), path)?;
    }
    info!(
        "{}: otsu threshold {}, {} of {} components kept, {} boxes",
        args.input.display(),
        det.threshold,
        det.kept.len(),
        det.components.len(),
        det.boxes.len()
    );

    let mut sink = open_sink(args)?;
    write_detections(&det.boxes, &mut sink)?;
    sink.flush()?;
    Ok(())
}

fn run_directory(args: &DetectArgs, cfg: &textloc::PipelineConfig) -> Result<()> {
    let frames = imageio::load_frame_sequence(&args.input)?;
    let opts = SequenceOptions {
        workers: args.workers,
        strict: args.strict,
    };
    let outcomes = textloc::run_sequence(&frames, cfg, &opts)?;

    let mut sink = open_sink(args)?;
    let mut failed = 0;
    for outcome in &outcomes {
        writeln!(sink, "# frame {}", outcome.name())?;
        match &outcome.result {
            Ok(boxes) => write_detections(boxes, &mut sink)?,
            Err(e) => {
                failed += 1;
                warn!("skipping {}: {e}", outcome.path.display());
                writeln!(sink, "# error: {e}")?;
            }
        }
    }
    sink.flush()?;
    info!("{} frames, {} skipped", outcomes.len(), failed);
    Ok(())
}
