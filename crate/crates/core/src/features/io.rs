//! On-disk form of a feature sequence.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! magic "EEGF" | version u32 | t u32 | d u32 | frame_rate f64
//! | provenance u8 | t*d values f64 (row-major)
//! ```
//!
//! Recording id and transcript travel in the feature manifest next to the
//! files, not in the binary payload. A CSV export exists for eyeballing.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use super::{FeatureSequence, Provenance};
use crate::binio::{expect_magic, read_f64, read_u32, read_exact, write_bytes, write_f64, write_u32};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"EEGF";
const VERSION: u32 = 1;

pub fn write_feature_file(path: &Path, seq: &FeatureSequence) -> Result<()> {
    seq.validate()?;
    let path_str = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(&path_str, e))?;
    let mut w = BufWriter::new(file);
    write_bytes(&mut w, MAGIC, &path_str)?;
    write_u32(&mut w, VERSION, &path_str)?;
    write_u32(&mut w, seq.n_frames() as u32, &path_str)?;
    write_u32(&mut w, seq.dim() as u32, &path_str)?;
    write_f64(&mut w, seq.frame_rate_hz, &path_str)?;
    write_bytes(&mut w, &[seq.provenance.byte()], &path_str)?;
    for &v in seq.frames.iter() {
        write_f64(&mut w, v, &path_str)?;
    }
    w.flush().map_err(|e| Error::io(&path_str, e))
}

/// Reads a feature file; id and transcript come from the caller (manifest).
pub fn read_feature_file(path: &Path, recording_id: &str, transcript: &str) -> Result<FeatureSequence> {
    let path_str = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&path_str, e))?;
    let mut r = BufReader::new(file);
    expect_magic(&mut r, MAGIC, &path_str)?;
    let version = read_u32(&mut r, &path_str)?;
    if version != VERSION {
        return Err(Error::format(
            &path_str,
            None,
            format!("unsupported version {version}"),
        ));
    }
    let t = read_u32(&mut r, &path_str)? as usize;
    let d = read_u32(&mut r, &path_str)? as usize;
    let frame_rate_hz = read_f64(&mut r, &path_str)?;
    let mut prov = [0u8; 1];
    read_exact(&mut r, &mut prov, &path_str)?;
    let provenance = Provenance::from_byte(prov[0])?;

    let mut frames = Array2::zeros((t, d));
    for v in frames.iter_mut() {
        *v = read_f64(&mut r, &path_str)?;
    }
    let seq = FeatureSequence {
        frames,
        frame_rate_hz,
        provenance,
        recording_id: recording_id.to_string(),
        transcript: transcript.to_string(),
    };
    seq.validate()?;
    Ok(seq)
}

/// Plain CSV dump: header `frame,f0,...`, one row per frame.
pub fn write_feature_csv(path: &Path, seq: &FeatureSequence) -> Result<()> {
    let path_str = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(&path_str, e))?;
    let mut w = BufWriter::new(file);
    let header: Vec<String> = (0..seq.dim()).map(|i| format!("f{i}")).collect();
    writeln!(w, "frame,{}", header.join(",")).map_err(|e| Error::io(&path_str, e))?;
    for (t, row) in seq.frames.outer_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{t},{}", cells.join(",")).map_err(|e| Error::io(&path_str, e))?;
    }
    w.flush().map_err(|e| Error::io(&path_str, e))
}
