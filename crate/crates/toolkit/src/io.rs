//! CSV formats. Every file written here starts with a provenance comment:
//! `# pairsource <version> config=<sha256> command=<name>`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use pairsource_core::counting::EventStreams;
use pairsource_core::phasemap::PhaseMap;
use pairsource_core::spdc::{JointSpectrum, PumpSample};

use crate::error::ToolkitError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputHeader {
    pub config_hash: String,
    pub command: String,
}

impl OutputHeader {
    pub fn new(config_hash: impl Into<String>, command: impl Into<String>) -> Self {
        Self {
            config_hash: config_hash.into(),
            command: command.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "# pairsource {VERSION} config={} command={}",
            self.config_hash, self.command
        )
    }
}

fn create(path: &Path, header: &OutputHeader) -> Result<BufWriter<File>, ToolkitError> {
    let file = File::create(path).map_err(|e| ToolkitError::output(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", header.line()).map_err(|e| ToolkitError::output(path, e))?;
    Ok(w)
}

fn csv_writer(
    path: &Path,
    header: &OutputHeader,
) -> Result<csv::Writer<BufWriter<File>>, ToolkitError> {
    Ok(csv::WriterBuilder::new().from_writer(create(path, header)?))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<(), ToolkitError> {
    w.flush().map_err(|e| ToolkitError::output(path, e))
}

/// Writes named numeric columns, one row per entry of `rows`.
pub fn write_table(
    path: &Path,
    header: &OutputHeader,
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<(), ToolkitError> {
    let mut w = csv_writer(path, header)?;
    let err = |e: csv::Error| ToolkitError::output(path, e);
    w.write_record(columns).map_err(err)?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(ToolkitError::output(
                path,
                "row length does not match the header",
            ));
        }
        w.write_record(row.iter().map(f64::to_string))
            .map_err(err)?;
    }
    finish(w, path)
}

fn write_matrix(
    path: &Path,
    header: &OutputHeader,
    corner: &str,
    rows_axis: &[f64],
    cols_axis: &[f64],
    values: &[f64],
) -> Result<(), ToolkitError> {
    let mut w = csv_writer(path, header)?;
    let err = |e: csv::Error| ToolkitError::output(path, e);
    let mut first = vec![corner.to_string()];
    first.extend(cols_axis.iter().map(f64::to_string));
    w.write_record(&first).map_err(err)?;
    let n = cols_axis.len();
    for (r, &l) in rows_axis.iter().enumerate() {
        let mut record = vec![l.to_string()];
        record.extend(values[r * n..(r + 1) * n].iter().map(f64::to_string));
        w.write_record(&record).map_err(err)?;
    }
    finish(w, path)
}

/// Joint spectrum as a matrix: the header row holds the idler axis, the
/// first column the signal axis.
pub fn write_joint_spectrum(
    path: &Path,
    header: &OutputHeader,
    js: &JointSpectrum,
) -> Result<(), ToolkitError> {
    write_matrix(
        path,
        header,
        "signal_nm\\idler_nm",
        &js.grid_s,
        &js.grid_i,
        &js.intensity,
    )
}

pub fn write_phase_map(
    path: &Path,
    header: &OutputHeader,
    pm: &PhaseMap,
) -> Result<(), ToolkitError> {
    write_matrix(
        path,
        header,
        "signal_nm\\idler_nm",
        &pm.grid_s,
        &pm.grid_i,
        &pm.phase,
    )
}

/// Reads a joint spectrum matrix written by [`write_joint_spectrum`].
pub fn read_joint_spectrum(path: &Path, temperature_c: f64) -> Result<JointSpectrum, ToolkitError> {
    let rows = read_records(path)?;
    let bad = |msg: &str| ToolkitError::Parse {
        path: path.to_path_buf(),
        line: 0,
        column: 0,
        message: msg.to_string(),
    };
    let (head, body) = rows.split_first().ok_or_else(|| bad("empty file"))?;
    let grid_i = parse_all(path, &head.1[1..], head.0)?;
    let mut grid_s = Vec::new();
    let mut intensity = Vec::new();
    for (line, record) in body {
        if record.len() != grid_i.len() + 1 {
            return Err(bad("ragged matrix row"));
        }
        let values = parse_all(path, record, *line)?;
        grid_s.push(values[0]);
        intensity.extend_from_slice(&values[1..]);
    }
    Ok(JointSpectrum {
        grid_s,
        grid_i,
        intensity,
        temperature_c,
    })
}

fn read_records(path: &Path) -> Result<Vec<(usize, Vec<String>)>, ToolkitError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> ToolkitError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ToolkitError::io(path, io),
        kind => ToolkitError::Parse {
            path: path.to_path_buf(),
            line,
            column: 0,
            message: format!("{kind:?}"),
        },
    }
}

fn parse_all(path: &Path, fields: &[String], line: usize) -> Result<Vec<f64>, ToolkitError> {
    fields
        .iter()
        .enumerate()
        .map(|(k, f)| {
            f.parse::<f64>().map_err(|_| ToolkitError::Parse {
                path: path.to_path_buf(),
                line,
                column: k + 1,
                message: format!("`{f}` is not a number"),
            })
        })
        .collect()
}

fn expect_header(
    path: &Path,
    rows: &[(usize, Vec<String>)],
    columns: &[&str],
) -> Result<(), ToolkitError> {
    match rows.first() {
        Some((_, h)) if h.iter().map(String::as_str).eq(columns.iter().copied()) => Ok(()),
        other => Err(ToolkitError::Parse {
            path: path.to_path_buf(),
            line: other.map_or(1, |r| r.0),
            column: 1,
            message: format!("expected header `{}`", columns.join(",")),
        }),
    }
}

/// Pump spectrum CSV with header `wavelength_nm,weight`.
pub fn read_pump_csv(path: &Path) -> Result<Vec<PumpSample>, ToolkitError> {
    let rows = read_records(path)?;
    expect_header(path, &rows, &["wavelength_nm", "weight"])?;
    rows[1..]
        .iter()
        .map(|(line, record)| {
            let v = parse_all(path, record, *line)?;
            if v.len() != 2 {
                return Err(ToolkitError::Parse {
                    path: path.to_path_buf(),
                    line: *line,
                    column: 1,
                    message: "expected two columns".into(),
                });
            }
            Ok(PumpSample {
                wavelength_nm: v[0],
                weight: v[1],
            })
        })
        .collect()
}

/// Time-tagger style export, one event per row: `detector_id,timestamp_s`,
/// ordered by detector then time. Duration and seed go in a second comment
/// line so the file reads back into the same [`EventStreams`].
pub fn write_event_streams(
    path: &Path,
    header: &OutputHeader,
    es: &EventStreams,
) -> Result<(), ToolkitError> {
    let mut out = create(path, header)?;
    let err = |e: std::io::Error| ToolkitError::output(path, e);
    writeln!(out, "# duration_s={} seed={}", es.duration_s, es.seed).map_err(err)?;
    writeln!(out, "detector_id,timestamp_s").map_err(err)?;
    for (detector, stream) in es.streams.iter().enumerate() {
        for t in stream {
            writeln!(out, "{detector},{t}").map_err(err)?;
        }
    }
    out.flush().map_err(err)
}

/// Reads events in any row order. Without a `# duration_s=` line the
/// duration is taken just past the last event.
pub fn read_event_streams(path: &Path) -> Result<EventStreams, ToolkitError> {
    let text = std::fs::read_to_string(path).map_err(|e| ToolkitError::io(path, e))?;
    let (mut duration, mut seed) = (None, 0);
    for line in text.lines().filter(|l| l.starts_with('#')) {
        for token in line.trim_start_matches('#').split_whitespace() {
            if let Some(v) = token.strip_prefix("duration_s=") {
                duration = v.parse::<f64>().ok();
            } else if let Some(v) = token.strip_prefix("seed=") {
                seed = v.parse().unwrap_or(0);
            }
        }
    }
    let rows = read_records(path)?;
    expect_header(path, &rows, &["detector_id", "timestamp_s"])?;
    let mut streams: Vec<Vec<f64>> = Vec::new();
    for (line, record) in &rows[1..] {
        let parse_err = |column: usize, message: String| ToolkitError::Parse {
            path: path.to_path_buf(),
            line: *line,
            column,
            message,
        };
        if record.len() != 2 {
            return Err(parse_err(1, "expected two columns".into()));
        }
        let id: usize = record[0]
            .parse()
            .map_err(|_| parse_err(1, format!("`{}` is not a detector id", record[0])))?;
        let t: f64 = record[1]
            .parse()
            .map_err(|_| parse_err(2, format!("`{}` is not a timestamp", record[1])))?;
        if streams.len() <= id {
            streams.resize(id + 1, Vec::new());
        }
        streams[id].push(t);
    }
    if streams.len() % 2 == 1 {
        streams.push(Vec::new());
    }
    for s in &mut streams {
        s.sort_by(f64::total_cmp);
    }
    let duration = duration.unwrap_or_else(|| {
        let last = streams.iter().flatten().copied().fold(0.0, f64::max);
        last + last.abs().max(1.0) * f64::EPSILON * 4.0
    });
    EventStreams::new(streams, duration, seed).map_err(|e| ToolkitError::Parse {
        path: path.to_path_buf(),
        line: 0,
        column: 0,
        message: e.to_string(),
    })
}
