//! Binary dump of a graphical sample, for exact replay.
//!
//! Layout, all integers little-endian:
//! `"RCPG"`, `u16` version, `u32` header length, JSON header (box, rate,
//! law, seeds), then per site `start, horizon, has_next (u8), next,
//! count (u64), marks...` and per directed edge `count (u64), times...`.
//! Marks are stored as raw `f64` bits, so a replay sees the very same
//! numbers.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::{RcpError, Result};
use crate::graphical::{GraphicalSample, SeedSpec, SpaceTimeBox};
use crate::renewal::{InterarrivalLaw, RenewalTrack};

pub const MAGIC: &[u8; 4] = b"RCPG";
pub const VERSION: u16 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    bbox: SpaceTimeBox,
    lambda: f64,
    law: Option<InterarrivalLaw>,
    seed: Option<SeedSpec>,
}

fn format_err(e: std::io::Error) -> RcpError {
    if e.kind() == ErrorKind::UnexpectedEof {
        RcpError::Format("dump is truncated".into())
    } else {
        RcpError::Io(e)
    }
}

pub fn write_sample<W: Write>(sample: &GraphicalSample, mut w: W) -> Result<()> {
    let header =
        Header { bbox: sample.bbox.clone(), lambda: sample.lambda, law: sample.law.clone(), seed: sample.seed };
    let json = serde_json::to_vec(&header).map_err(|e| RcpError::Format(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_u16::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(json.len() as u32)?;
    w.write_all(&json)?;
    w.write_u64::<LittleEndian>(sample.cures.len() as u64)?;
    for tr in &sample.cures {
        w.write_f64::<LittleEndian>(tr.start)?;
        w.write_f64::<LittleEndian>(tr.horizon)?;
        w.write_u8(u8::from(tr.next.is_some()))?;
        w.write_f64::<LittleEndian>(tr.next.unwrap_or(0.0))?;
        write_list(&mut w, &tr.marks)?;
    }
    w.write_u64::<LittleEndian>(sample.trans.len() as u64)?;
    for list in &sample.trans {
        write_list(&mut w, list)?;
    }
    w.flush()?;
    Ok(())
}

fn write_list<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    w.write_u64::<LittleEndian>(values.len() as u64)?;
    for &v in values {
        w.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

fn read_list<R: Read>(r: &mut R, limit: u64) -> Result<Vec<f64>> {
    let n = r.read_u64::<LittleEndian>().map_err(format_err)?;
    if n > limit {
        return Err(RcpError::Format(format!("list length {n} exceeds the remaining budget")));
    }
    (0..n).map(|_| r.read_f64::<LittleEndian>().map_err(format_err)).collect()
}

/// Upper bound on stored marks, guarding against corrupted lengths.
const MAX_STORED: u64 = 1 << 32;

pub fn read_sample<R: Read>(mut r: R) -> Result<GraphicalSample> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(format_err)?;
    if &magic != MAGIC {
        return Err(RcpError::Format("bad magic bytes; not a sample dump".into()));
    }
    let version = r.read_u16::<LittleEndian>().map_err(format_err)?;
    if version != VERSION {
        return Err(RcpError::Format(format!("dump version {version}, this build reads version {VERSION}")));
    }
    let len = r.read_u32::<LittleEndian>().map_err(format_err)? as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json).map_err(format_err)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| RcpError::Format(format!("bad header: {e}")))?;
    let n_sites = r.read_u64::<LittleEndian>().map_err(format_err)?;
    if n_sites != header.bbox.num_sites() as u64 {
        return Err(RcpError::Format("site count does not match the box".into()));
    }
    let mut cures = Vec::with_capacity(n_sites as usize);
    for _ in 0..n_sites {
        let start = r.read_f64::<LittleEndian>().map_err(format_err)?;
        let horizon = r.read_f64::<LittleEndian>().map_err(format_err)?;
        let has_next = r.read_u8().map_err(format_err)?;
        let next = r.read_f64::<LittleEndian>().map_err(format_err)?;
        let marks = read_list(&mut r, MAX_STORED)?;
        let mut track = RenewalTrack::from_marks(start, marks, horizon)
            .map_err(|e| RcpError::Format(format!("invalid cure track: {e}")))?;
        track.next = match has_next {
            0 => None,
            1 => Some(next),
            b => return Err(RcpError::Format(format!("bad next-mark flag {b}"))),
        };
        cures.push(track);
    }
    let n_edges = r.read_u64::<LittleEndian>().map_err(format_err)?;
    if n_edges != n_sites * 2 * header.bbox.dim() as u64 {
        return Err(RcpError::Format("edge count does not match the box".into()));
    }
    let trans: Vec<Vec<f64>> = (0..n_edges).map(|_| read_list(&mut r, MAX_STORED)).collect::<Result<_>>()?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(RcpError::Format("trailing bytes after the sample".into()));
    }
    GraphicalSample::from_parts(header.bbox, header.lambda, header.law, header.seed, cures, trans)
}

pub fn save(sample: &GraphicalSample, path: &Path) -> Result<()> {
    write_sample(sample, BufWriter::new(File::create(path)?))
}

pub fn load(path: &Path) -> Result<GraphicalSample> {
    read_sample(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphical::build_sample;

    fn sample() -> GraphicalSample {
        let b = SpaceTimeBox::centered(2, 3, 0.0, 6.0).unwrap();
        build_sample(&b, 0.7, &InterarrivalLaw::pareto_tail(0.6, 0.5).unwrap(), SeedSpec::new(21)).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let s = sample();
        let mut buf = Vec::new();
        write_sample(&s, &mut buf).unwrap();
        let back = read_sample(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.events(), s.events());
    }

    #[test]
    fn corrupt_inputs_are_format_errors() {
        let mut buf = Vec::new();
        write_sample(&sample(), &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_sample(bad.as_slice()), Err(RcpError::Format(_))));
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(matches!(read_sample(bad.as_slice()), Err(RcpError::Format(_))));
        assert!(matches!(read_sample(&buf[..buf.len() - 3]), Err(RcpError::Format(_))));
        assert!(matches!(read_sample(&[][..]), Err(RcpError::Format(_))));
        let mut long = buf;
        long.push(0);
        assert!(matches!(read_sample(long.as_slice()), Err(RcpError::Format(_))));
    }
}
