//! Channel trace CSV: one row per subcarrier measurement,
//! `snapshot_id,subcarrier_index,amplitude,phase_radians`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::channel::{TraceSource, TraceStore};
use crate::error::{Error, Result};
use crate::keyphase::ChannelSnapshot;

pub const TRACE_HEADER: [&str; 4] = ["snapshot_id", "subcarrier_index", "amplitude", "phase_radians"];

struct Pending {
    id: u64,
    first_line: u64,
    cells: BTreeMap<usize, (f64, f64)>,
}

pub fn read_trace(path: &Path) -> Result<TraceStore> {
    let file = std::fs::File::open(path).map_err(|e| Error::Trace {
        path: path.to_path_buf(),
        line: 0,
        msg: format!("cannot open: {e}"),
    })?;
    read_trace_from(file, path)
}

/// Parses a trace from any reader; `path` is only used in error messages.
pub fn read_trace_from<R: Read>(reader: R, path: &Path) -> Result<TraceStore> {
    let err = |line: u64, msg: String| Error::Trace {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut header_seen = false;
    let mut snapshots = Vec::new();
    let mut width: Option<usize> = None;
    let mut pending: Option<Pending> = None;
    let mut last_line = 0;

    let finish = |p: Pending, width: &mut Option<usize>| -> Result<ChannelSnapshot> {
        let l = p.cells.keys().next_back().map_or(0, |&k| k + 1);
        let expected = width.unwrap_or(l);
        if p.cells.len() != expected || l != expected {
            return Err(err(
                p.first_line,
                format!(
                    "snapshot {} has {} subcarriers, expected indices 0..{}",
                    p.id,
                    p.cells.len(),
                    expected
                ),
            ));
        }
        *width = Some(expected);
        let (amps, phases): (Vec<f64>, Vec<f64>) = p.cells.into_values().unzip();
        ChannelSnapshot::new(amps, phases).map_err(|e| err(p.first_line, e.to_string()))
    };

    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(last_line + 1, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(last_line + 1, |p| p.line());
        last_line = line;
        if !header_seen {
            if record.iter().ne(TRACE_HEADER.iter().copied()) {
                return Err(err(line, format!("expected header {}", TRACE_HEADER.join(","))));
            }
            header_seen = true;
            continue;
        }
        if record.len() != 4 {
            return Err(err(line, format!("expected 4 fields, found {}", record.len())));
        }
        let id: u64 = record[0]
            .parse()
            .map_err(|_| err(line, format!("bad snapshot_id {:?}", &record[0])))?;
        let sub: usize = record[1]
            .parse()
            .map_err(|_| err(line, format!("bad subcarrier_index {:?}", &record[1])))?;
        let amp: f64 = record[2]
            .parse()
            .map_err(|_| err(line, format!("bad amplitude {:?}", &record[2])))?;
        let phase: f64 = record[3]
            .parse()
            .map_err(|_| err(line, format!("bad phase_radians {:?}", &record[3])))?;
        if !(amp.is_finite() && amp > 0.0) {
            return Err(err(line, format!("amplitude {amp} must be positive and finite")));
        }
        if !(phase > -PI && phase <= PI) {
            return Err(err(line, format!("phase {phase} outside (-pi, pi]")));
        }

        match pending.as_mut() {
            Some(p) if p.id == id => {}
            Some(p) if id < p.id => {
                return Err(err(line, format!("snapshot_id {id} after {}", p.id)));
            }
            _ => {
                if let Some(done) = pending.take() {
                    snapshots.push(finish(done, &mut width)?);
                }
                pending = Some(Pending {
                    id,
                    first_line: line,
                    cells: BTreeMap::new(),
                });
            }
        }
        let p = pending.as_mut().expect("set above");
        if let Some(w) = width {
            if sub >= w {
                return Err(err(line, format!("subcarrier_index {sub} outside 0..{w}")));
            }
        }
        if p.cells.insert(sub, (amp, phase)).is_some() {
            return Err(err(line, format!("subcarrier {sub} repeated in snapshot {id}")));
        }
    }
    if !header_seen {
        return Err(err(1, "empty trace file".into()));
    }
    match pending.take() {
        Some(done) => snapshots.push(finish(done, &mut width)?),
        None => return Err(err(last_line + 1, "trace has a header but no rows".into())),
    }
    let l = width.unwrap_or(0);
    TraceStore::new(
        snapshots,
        TraceSource {
            path: Some(path.to_path_buf()),
            bandwidth_label: None,
            num_subcarriers: l,
        },
    )
}

/// Writes snapshots in trace format; floats use shortest round-trip form.
pub fn write_trace<W: Write>(out: W, snapshots: &[ChannelSnapshot], comment: Option<&str>) -> Result<()> {
    let mut out = out;
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for (id, s) in snapshots.iter().enumerate() {
        for (l, (a, p)) in s.amplitudes().iter().zip(s.phases()).enumerate() {
            w.write_record([id.to_string(), l.to_string(), a.to_string(), p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, snapshots: &[ChannelSnapshot], comment: Option<&str>) -> Result<PathBuf> {
    write_trace(std::fs::File::create(path)?, snapshots, comment)?;
    Ok(path.to_path_buf())
}
