pub mod eval;
pub mod fuse;
pub mod inverse;
pub mod synth;
pub mod traj;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use framefusion::fusion::Frame;
use framefusion::record::{read_frames, write_frame, write_meta};
use serde::Serialize;

use crate::CliError;

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display())).map_err(CliError::Data)?;
    Ok(BufWriter::new(file))
}

pub(crate) fn load(path: &Path) -> Result<(Option<serde_json::Value>, Vec<Frame>), CliError> {
    read_frames(path).with_context(|| format!("reading {}", path.display())).map_err(CliError::Data)
}

/// Writes `meta` as a header line followed by `frames`.
pub(crate) fn save<'a>(
    path: &Path,
    meta: &impl Serialize,
    frames: impl IntoIterator<Item = &'a Frame>,
) -> Result<(), CliError> {
    let mut w = create(path)?;
    write_meta(&mut w, meta)?;
    for f in frames {
        write_frame(&mut w, f)?;
    }
    w.flush()?;
    Ok(())
}
